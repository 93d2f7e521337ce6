//! Stationary weights and distributions, detailed-balance verification, and
//! Gaussian-binomial arithmetic with the partition-in-a-box correspondence.

use num::traits::Pow;
use num::{BigInt, One, ToPrimitive, Zero};

use crate::chains::ChainSpec;
use crate::combinatorics::{inversions, State, StateSpace};
use crate::error::{domain, Error, Result};
use crate::exact::Kernel;
use crate::{ln_rat, Rat};

/// Dense probability vector over an enumerated state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    pub space_id: u64,
    pub probs: Vec<T>,
}

impl Distribution<Rat> {
    pub fn to_float(&self) -> Distribution<f64> {
        Distribution {
            space_id: self.space_id,
            probs: self.probs.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect(),
        }
    }

    /// CSV rows `state,probability` in enumeration order, probabilities as
    /// exact rational strings.
    pub fn to_csv(&self, space: &StateSpace) -> Result<String> {
        if space.id() != self.space_id {
            return Err(Error::SpaceMismatch);
        }
        let mut out = String::from("state,probability\n");
        for (i, p) in self.probs.iter().enumerate() {
            let st = space.unrank(i)?;
            out.push_str(&format!("{st},{p}\n"));
        }
        Ok(out)
    }
}

impl Distribution<f64> {
    pub fn point_mass(space_id: u64, n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Distribution { space_id, probs }
    }
}

/// Unnormalized stationary weight of `state` under `spec`'s product form.
///
/// Permutation chains weight item `g` by `s(g)^position`; particle systems
/// weight position `p` by `s(type)^p`; the tree chains multiply, over every
/// label pair, the lca-child strength of the member that sits ahead; the
/// constant-bias chain uses `(p/(1-p))^inversions`.
pub fn stationary_weight(spec: &ChainSpec, state: &State) -> Result<Rat> {
    spec.state_space().rank(state)?;
    Ok(match spec {
        ChainSpec::Simple { .. } => Rat::one(),
        ChainSpec::ConstantBias { p, .. } => {
            let odds = p / (Rat::one() - p);
            let inv = inversions(state.as_perm()?) as i32;
            Pow::pow(odds, inv)
        }
        ChainSpec::Gladiator { strengths, .. } | ChainSpec::Ma1 { strengths } => {
            let perm = state.as_perm()?;
            let mut w = Rat::one();
            for pos in 1..=perm.n() {
                w *= Pow::pow(strengths.of_label(perm.label_at(pos)).clone(), pos as i32);
            }
            w
        }
        ChainSpec::ParticleSystem { strengths, .. } | ChainSpec::JumpHop { strengths, .. } => {
            let word = state.as_word()?;
            let mut w = Rat::one();
            for pos in 1..=word.n() {
                w *= Pow::pow(strengths.of_type(word.type_at(pos)).clone(), pos as i32);
            }
            w
        }
        ChainSpec::LeagueHierarchy { tree } | ChainSpec::MTree { tree } => {
            let perm = state.as_perm()?;
            let n = perm.n() as u8;
            let mut w = Rat::one();
            for x in 1..n {
                for y in x + 1..=n {
                    let (sx, sy) = tree.contest_strengths(x, y);
                    if perm.position_of(y) > perm.position_of(x) {
                        w *= sy;
                    } else {
                        w *= sx;
                    }
                }
            }
            w
        }
    })
}

/// Natural log of [`stationary_weight`], usable when the rational blows past
/// float range.
pub fn stationary_weight_ln(spec: &ChainSpec, state: &State) -> Result<f64> {
    Ok(ln_rat(&stationary_weight(spec, state)?))
}

/// Exact normalized stationary vector and the normalizing constant `Z`.
pub fn stationary_distribution(spec: &ChainSpec) -> Result<(Distribution<Rat>, Rat)> {
    let space = spec.state_space();
    let states = space.enumerate()?;
    let weights: Vec<Rat> = states
        .iter()
        .map(|st| stationary_weight(spec, st))
        .collect::<Result<_>>()?;
    let z: Rat = weights.iter().sum();
    let probs = weights.into_iter().map(|w| w / &z).collect();
    Ok((
        Distribution {
            space_id: space.id(),
            probs,
        },
        z,
    ))
}

/// Maximum detailed-balance defect `|pi(x) P(x,y) - pi(y) P(y,x)|` over all
/// edges, exactly. Zero characterizes reversibility. Also reports the worst
/// edge.
pub fn detailed_balance_violation(
    kernel: &Kernel<Rat>,
    dist: &Distribution<Rat>,
) -> Result<(Rat, (usize, usize))> {
    if kernel.space_id != dist.space_id {
        return Err(Error::SpaceMismatch);
    }
    let mut worst = Rat::zero();
    let mut worst_edge = (0usize, 0usize);
    for x in 0..kernel.n_states() {
        for &(y, ref pxy) in kernel.row(x) {
            let y = y as usize;
            if y <= x {
                continue;
            }
            let flow_forward = &dist.probs[x] * pxy;
            let flow_back = &dist.probs[y] * kernel.prob(y, x);
            let defect = if flow_forward >= flow_back {
                flow_forward - flow_back
            } else {
                flow_back - flow_forward
            };
            if defect > worst {
                worst = defect;
                worst_edge = (x, y);
            }
        }
        // Edges with P(x,y) = 0 but P(y,x) > 0 are caught from the y side.
    }
    Ok((worst, worst_edge))
}

/// Integer-coefficient polynomial in the formal variable `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPolynomial {
    coeffs: Vec<BigInt>,
}

impl QPolynomial {
    pub fn one() -> Self {
        QPolynomial {
            coeffs: vec![BigInt::one()],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, t: usize) -> BigInt {
        self.coeffs.get(t).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn eval(&self, q: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * q + Rat::from(c.clone());
        }
        acc
    }

    fn shift_scale_add(&self, shift: usize, other: &QPolynomial) -> QPolynomial {
        // self + q^shift * other
        let len = self.coeffs.len().max(other.coeffs.len() + shift);
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i + shift] += c;
        }
        QPolynomial { coeffs }
    }
}

/// Gaussian binomial `[m choose r]_q` as a polynomial. The coefficient of
/// `q^t` counts integer partitions of `t` fitting in an `r x (m-r)` box.
pub fn qbinom(m: usize, r: usize) -> Result<QPolynomial> {
    if r > m {
        return Err(domain(format!("qbinom needs r <= m, got m={m}, r={r}")));
    }
    // Pascal-style recurrence [i choose j]_q = [i-1 choose j-1]_q + q^j [i-1 choose j]_q.
    let mut row: Vec<QPolynomial> = vec![QPolynomial::one()];
    for i in 1..=m {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(QPolynomial::one());
        for j in 1..i.min(r + 1) {
            next.push(row[j - 1].shift_scale_add(j, &row[j]));
        }
        if i <= r {
            next.push(QPolynomial::one());
        }
        row = next;
    }
    Ok(row[r.min(row.len() - 1)].clone())
}

/// `[m choose r]_q` evaluated at a rational `q`, exactly.
pub fn qbinom_eval(m: usize, r: usize, q: &Rat) -> Result<Rat> {
    Ok(qbinom(m, r)?.eval(q))
}

/// Check the inequality chain
/// `[m choose r]_q < (1/(1-q))^r < 2^r < (1/q)^r` at `0 < q < 1/2`,
/// exactly. The chain is strict for `r >= 1`; at `r = 0` every term is 1 and
/// the check degenerates to true.
pub fn qbinom_bound_check(m: usize, r: usize, q: &Rat) -> Result<bool> {
    if *q <= Rat::zero() || *q >= crate::rat(1, 2) {
        return Err(domain(format!("bound check needs 0 < q < 1/2, got {q}")));
    }
    if r > m {
        return Err(domain(format!("need r <= m, got m={m}, r={r}")));
    }
    if r == 0 {
        return Ok(true);
    }
    let value = qbinom_eval(m, r, q)?;
    let geom = Pow::pow(Rat::one() / (Rat::one() - q), r as i32);
    let two_r = Pow::pow(crate::rat(2, 1), r as i32);
    let inv_q_r = Pow::pow(Rat::one() / q, r as i32);
    Ok(value < geom && geom < two_r && two_r < inv_q_r)
}

/// Compare the brute-force stationary-weight sum over two-type words against
/// the Gaussian binomial: with `b` middle-strength and `c` strong particles,
/// `sum over words of pi(sigma)/pi(M)` equals `[b+c choose b]_q` at
/// `q = s_B/s_C`, where `M` is the maximum-weight word (all B's first).
pub fn partition_sum_identity_check(b: usize, c: usize, q: &Rat) -> Result<(Rat, Rat, bool)> {
    if b > 8 || c > 8 {
        return Err(Error::SizeLimit {
            what: "partition identity (b, c)",
            requested: b.max(c),
            cap: 8,
        });
    }
    if *q <= Rat::zero() || *q >= Rat::one() {
        return Err(domain(format!("need 0 < q < 1, got {q}")));
    }
    // Realize q = s_B / s_C with integer strengths.
    let s_b = Rat::from(q.numer().clone());
    let s_c = Rat::from(q.denom().clone());
    let spec = ChainSpec::ParticleSystem {
        counts: vec![b, c],
        strengths: crate::chains::StrengthTable::new(vec![s_b, s_c])?,
    };
    let space = spec.state_space();
    let states = space.enumerate()?;
    let max_word = State::Word(crate::combinatorics::Arrangement::sorted(vec![b, c]));
    let w_max = stationary_weight(&spec, &max_word)?;
    let mut lhs = Rat::zero();
    for st in &states {
        lhs += stationary_weight(&spec, st)? / &w_max;
    }
    let rhs = qbinom_eval(b + c, b, q)?;
    let equal = lhs == rhs;
    Ok((lhs, rhs, equal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{StrengthTable, TeamPartition, TernaryTreeSpec, TreeSpec};
    use crate::combinatorics::{Arrangement, Permutation};
    use crate::rat;

    fn perm(items: &[u8]) -> State {
        State::Perm(Permutation::new(items.to_vec()).unwrap())
    }

    fn word(s: &str, k: usize) -> State {
        State::Word(Arrangement::from_letters(s, k).unwrap())
    }

    #[test]
    fn particle_weight_is_position_power_product() {
        let spec = ChainSpec::ParticleSystem {
            counts: vec![1, 1, 1],
            strengths: StrengthTable::from_ints(&[1, 2, 4]).unwrap(),
        };
        assert_eq!(stationary_weight(&spec, &word("ABC", 3)).unwrap(), rat(256, 1));
    }

    #[test]
    fn equal_strengths_give_equal_weights() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::new(&[vec![1, 2, 3]]).unwrap(),
            strengths: StrengthTable::from_ints(&[5, 5, 5]).unwrap(),
        };
        let (dist, _) = stationary_distribution(&spec).unwrap();
        assert!(dist.probs.iter().all(|p| *p == rat(1, 6)));
    }

    #[test]
    fn constant_bias_weight_is_odds_to_inversions() {
        let spec = ChainSpec::ConstantBias { n: 2, p: rat(3, 5) };
        let w_id = stationary_weight(&spec, &perm(&[1, 2])).unwrap();
        let w_rev = stationary_weight(&spec, &perm(&[2, 1])).unwrap();
        assert_eq!(w_rev / w_id, rat(3, 2)); // (0.6/0.4)^1
    }

    #[test]
    fn gladiator_two_state_distribution() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::singletons(2),
            strengths: StrengthTable::from_ints(&[1, 2]).unwrap(),
        };
        let (dist, z) = stationary_distribution(&spec).unwrap();
        assert_eq!(dist.probs, vec![rat(2, 3), rat(1, 3)]);
        assert_eq!(z, rat(6, 1));
    }

    #[test]
    fn simple_distribution_is_uniform() {
        let (dist, _) = stationary_distribution(&ChainSpec::Simple { n: 3 }).unwrap();
        assert!(dist.probs.iter().all(|p| *p == rat(1, 6)));
    }

    #[test]
    fn particle_two_state_distribution() {
        let spec = ChainSpec::ParticleSystem {
            counts: vec![1, 0, 1],
            strengths: StrengthTable::from_ints(&[1, 2, 4]).unwrap(),
        };
        let (dist, _) = stationary_distribution(&spec).unwrap();
        // States in lex order: AC, CA.
        assert_eq!(dist.probs, vec![rat(4, 5), rat(1, 5)]);
    }

    #[test]
    fn log_weights_agree_with_rational_weights() {
        let tree = TernaryTreeSpec::new(&TreeSpec::Node(vec![
            (rat(1, 1), TreeSpec::Leaf),
            (rat(5, 2), TreeSpec::Leaf),
            (rat(7, 1), TreeSpec::Leaf),
        ]))
        .unwrap();
        let specs = vec![
            ChainSpec::Gladiator {
                teams: TeamPartition::singletons(4),
                strengths: StrengthTable::from_ints(&[1, 2, 4, 8]).unwrap(),
            },
            ChainSpec::LeagueHierarchy { tree },
            ChainSpec::ConstantBias { n: 4, p: rat(2, 3) },
        ];
        for spec in specs {
            for st in spec.state_space().enumerate().unwrap() {
                let w = stationary_weight(&spec, &st).unwrap();
                let lw = stationary_weight_ln(&spec, &st).unwrap();
                let direct = w.to_f64().unwrap().ln();
                assert!(
                    (lw - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                    "log-space mismatch for {st}"
                );
            }
        }
    }

    #[test]
    fn qbinom_known_polynomials() {
        let p = qbinom(4, 2).unwrap();
        let want: Vec<i64> = vec![1, 1, 2, 1, 1];
        assert_eq!(p.coeffs().iter().map(|c| c.to_i64().unwrap()).collect::<Vec<_>>(), want);
        assert_eq!(qbinom(7, 3).unwrap().coeff(9), BigInt::from(3));
        for m in 0..=8 {
            assert_eq!(qbinom(m, 0).unwrap(), QPolynomial::one());
        }
    }

    #[test]
    fn qbinom_degree_and_palindromy() {
        for m in 0..=10usize {
            for r in 0..=m {
                let p = qbinom(m, r).unwrap();
                let d = r * (m - r);
                assert_eq!(p.degree(), if d == 0 { 0 } else { d });
                for t in 0..=d {
                    assert_eq!(p.coeff(t), p.coeff(d - t), "palindromy at m={m} r={r} t={t}");
                    assert!(p.coeff(t) >= BigInt::zero());
                }
            }
        }
    }

    #[test]
    fn qbinom_at_one_is_binomial() {
        let one = rat(1, 1);
        for m in 0..=12usize {
            for r in 0..=m {
                let got = qbinom_eval(m, r, &one).unwrap();
                let want = rat(binomial(m, r) as i64, 1);
                assert_eq!(got, want);
            }
        }
    }

    fn binomial(m: usize, r: usize) -> u64 {
        let mut acc = 1u64;
        for i in 0..r {
            acc = acc * (m - i) as u64 / (i + 1) as u64;
        }
        acc
    }

    /// Independent oracle: partitions of `t` with at most `rows` parts, each
    /// at most `cols`.
    fn partitions_in_box(t: usize, rows: usize, cols: usize) -> u64 {
        if t == 0 {
            return 1;
        }
        if rows == 0 || cols == 0 {
            return 0;
        }
        let mut count = 0;
        // First part takes some value v <= cols; rest fits in (rows-1) x v.
        for v in 1..=cols.min(t) {
            count += partitions_in_box(t - v, rows - 1, v);
        }
        count
    }

    #[test]
    fn qbinom_coefficients_count_box_partitions() {
        for (m, r) in [(7usize, 3usize), (6, 2), (8, 4), (5, 5)] {
            let p = qbinom(m, r).unwrap();
            for t in 0..=r * (m - r) {
                assert_eq!(
                    p.coeff(t),
                    BigInt::from(partitions_in_box(t, r, m - r)),
                    "coefficient q^{t} of [{m} choose {r}]_q"
                );
            }
        }
    }

    #[test]
    fn qbinom_rejects_r_above_m() {
        assert!(qbinom(3, 4).is_err());
    }

    #[test]
    fn bound_check_examples() {
        assert!(qbinom_bound_check(20, 10, &rat(3, 10)).unwrap());
        assert!(qbinom_bound_check(5, 0, &rat(1, 10)).unwrap());
        assert!(qbinom_bound_check(12, 6, &rat(49, 100)).unwrap());
        assert!(qbinom_bound_check(12, 6, &rat(1, 2)).is_err());
        assert!(qbinom_bound_check(12, 6, &rat(3, 5)).is_err());
    }

    #[test]
    fn partition_identity_examples() {
        let (lhs, rhs, ok) = partition_sum_identity_check(3, 4, &rat(1, 3)).unwrap();
        assert!(ok, "lhs {lhs} vs rhs {rhs}");
        let (lhs, rhs, ok) = partition_sum_identity_check(0, 5, &rat(1, 4)).unwrap();
        assert!(ok);
        assert_eq!(lhs, rat(1, 1));
        assert_eq!(rhs, rat(1, 1));
        let (_, _, ok) = partition_sum_identity_check(2, 2, &rat(1, 2)).unwrap();
        assert!(ok);
    }

    #[test]
    fn csv_export_is_deterministic() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::singletons(2),
            strengths: StrengthTable::from_ints(&[1, 2]).unwrap(),
        };
        let (dist, _) = stationary_distribution(&spec).unwrap();
        let csv = dist.to_csv(&spec.state_space()).unwrap();
        assert_eq!(csv, "state,probability\n12,2/3\n21,1/3\n");
    }
}
