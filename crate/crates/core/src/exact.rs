//! Exact finite-state analysis: kernel assembly over an enumerated space,
//! distributions at time t, total-variation distance, worst-start mixing
//! time, spectral gap, restriction and projection chains, and the composed
//! mixing-bound calculators.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::chains::{transition_row, ChainSpec};
use crate::combinatorics::StateIndex;
use crate::error::{domain, Error, Result};
use crate::measures::Distribution;
use crate::Rat;

/// Default cap on state count for rational-mode kernels.
pub const RAT_STATE_CAP: usize = 20_000;
/// Default cap on state count for float-mode kernels.
pub const FLOAT_STATE_CAP: usize = 200_000;
/// Cap on state count for worst-start mixing computations (O(n^2) memory).
pub const MIX_STATE_CAP: usize = 10_000;

/// Row-stochastic sparse transition matrix over an enumerated state space.
/// Rows hold `(column, probability)` entries sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T> {
    pub space_id: u64,
    rows: Vec<Vec<(u32, T)>>,
}

impl<T> Kernel<T> {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &[(u32, T)] {
        &self.rows[x]
    }

    pub fn from_rows(space_id: u64, rows: Vec<Vec<(u32, T)>>) -> Self {
        Kernel { space_id, rows }
    }

    /// Directed support edges (x, y) with x != y, in row order.
    pub fn support_edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, _) in row {
                if y as usize != x {
                    out.push((x as u32, y));
                }
            }
        }
        out
    }
}

impl Kernel<Rat> {
    pub fn prob(&self, x: usize, y: usize) -> Rat {
        match self.rows[x].binary_search_by_key(&(y as u32), |e| e.0) {
            Ok(i) => self.rows[x][i].1.clone(),
            Err(_) => Rat::zero(),
        }
    }

    pub fn to_float(&self) -> Kernel<f64> {
        Kernel {
            space_id: self.space_id,
            rows: self
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(c, p)| (*c, p.to_f64().expect("probability fits f64")))
                        .collect()
                })
                .collect(),
        }
    }
}

impl Kernel<f64> {
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        match self.rows[x].binary_search_by_key(&(y as u32), |e| e.0) {
            Ok(i) => self.rows[x][i].1,
            Err(_) => 0.0,
        }
    }

    /// v <- v P, writing through `scratch`.
    fn advance_into(&self, v: &[f64], scratch: &mut [f64]) {
        scratch.fill(0.0);
        for (c, &mass) in v.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(c2, p) in &self.rows[c] {
                scratch[c2 as usize] += mass * p;
            }
        }
    }
}

/// Materialize `transition_row` over the whole enumerated space, exactly.
pub fn assemble_kernel(spec: &ChainSpec) -> Result<Kernel<Rat>> {
    assemble_kernel_with_cap(spec, RAT_STATE_CAP)
}

pub fn assemble_kernel_with_cap(spec: &ChainSpec, cap: usize) -> Result<Kernel<Rat>> {
    let space = spec.state_space();
    let size = space.size();
    if size > cap as u64 {
        return Err(Error::SizeLimit {
            what: "rational kernel states",
            requested: size as usize,
            cap,
        });
    }
    let states = space.enumerate()?;
    let rows = states
        .iter()
        .map(|st| {
            let row = transition_row(spec, st)?;
            let mut entries: Vec<(u32, Rat)> = row
                .into_iter()
                .map(|(succ, p)| Ok((space.rank(&succ)?.idx as u32, p)))
                .collect::<Result<_>>()?;
            entries.sort_by_key(|e| e.0);
            Ok(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Kernel {
        space_id: space.id(),
        rows,
    })
}

/// Float-mode kernel built row by row from the exact transition rows.
pub fn assemble_float_kernel(spec: &ChainSpec, cap: usize) -> Result<Kernel<f64>> {
    let space = spec.state_space();
    let size = space.size();
    if size > cap.min(FLOAT_STATE_CAP) as u64 {
        return Err(Error::SizeLimit {
            what: "float kernel states",
            requested: size as usize,
            cap: cap.min(FLOAT_STATE_CAP),
        });
    }
    let states = space.enumerate()?;
    let rows = states
        .iter()
        .map(|st| {
            let row = transition_row(spec, st)?;
            let mut entries: Vec<(u32, f64)> = row
                .into_iter()
                .map(|(succ, p)| {
                    Ok((
                        space.rank(&succ)?.idx as u32,
                        p.to_f64().expect("probability fits f64"),
                    ))
                })
                .collect::<Result<_>>()?;
            entries.sort_by_key(|e| e.0);
            Ok(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Kernel {
        space_id: space.id(),
        rows,
    })
}

/// Point mass at `start` advanced `t` steps, exactly.
pub fn distribution_at_time(
    kernel: &Kernel<Rat>,
    start: StateIndex,
    t: u64,
) -> Result<Distribution<Rat>> {
    if start.space_id != kernel.space_id || start.idx >= kernel.n_states() {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.n_states();
    let mut v = vec![Rat::zero(); n];
    v[start.idx] = Rat::one();
    for _ in 0..t {
        let mut next = vec![Rat::zero(); n];
        for (c, mass) in v.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for (c2, p) in kernel.row(c) {
                next[*c2 as usize] += mass * p;
            }
        }
        v = next;
    }
    Ok(Distribution {
        space_id: kernel.space_id,
        probs: v,
    })
}

/// Float-mode variant of [`distribution_at_time`].
pub fn distribution_at_time_f64(
    kernel: &Kernel<f64>,
    start: StateIndex,
    t: u64,
) -> Result<Distribution<f64>> {
    if start.space_id != kernel.space_id || start.idx >= kernel.n_states() {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.n_states();
    let mut v = vec![0.0; n];
    v[start.idx] = 1.0;
    let mut scratch = vec![0.0; n];
    for _ in 0..t {
        kernel.advance_into(&v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
    }
    Ok(Distribution {
        space_id: kernel.space_id,
        probs: v,
    })
}

/// Half the L1 distance, exactly.
pub fn tv_distance(d1: &Distribution<Rat>, d2: &Distribution<Rat>) -> Result<Rat> {
    if d1.space_id != d2.space_id || d1.probs.len() != d2.probs.len() {
        return Err(Error::SpaceMismatch);
    }
    let mut acc = Rat::zero();
    for (a, b) in d1.probs.iter().zip(&d2.probs) {
        acc += if a >= b { a - b } else { b - a };
    }
    Ok(acc / crate::rat(2, 1))
}

pub fn tv_distance_f64(d1: &Distribution<f64>, d2: &Distribution<f64>) -> Result<f64> {
    if d1.space_id != d2.space_id || d1.probs.len() != d2.probs.len() {
        return Err(Error::SpaceMismatch);
    }
    Ok(tv_slice(&d1.probs, &d2.probs))
}

fn tv_slice(a: &[f64], pi: &[f64]) -> f64 {
    0.5 * a.iter().zip(pi).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Worst-start mixing-time report.
#[derive(Clone, Debug)]
pub struct MixingReport {
    pub epsilon: Rat,
    pub t_mix: u64,
    pub worst_start: StateIndex,
    /// Probed `(t, worst-start TV)` points, ascending in `t`.
    pub tv_curve: Vec<(u64, f64)>,
}

impl MixingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,worst_tv\n");
        for (t, tv) in &self.tv_curve {
            out.push_str(&format!("{t},{tv:.12e}\n"));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "epsilon": self.epsilon.to_string(),
            "t_mix": self.t_mix,
            "worst_start": self.worst_start.idx,
            "tv_curve": self.tv_curve.iter().map(|(t, tv)| json!([t, tv])).collect::<Vec<_>>(),
        })
    }
}

/// Check irreducibility (strong connectivity of the support graph) and
/// aperiodicity (gcd of cycle lengths is 1).
pub fn check_ergodic<T: Clone>(kernel: &Kernel<T>) -> Result<()> {
    let n = kernel.n_states();
    if n == 0 {
        return Err(domain("empty kernel".to_string()));
    }
    if n == 1 {
        return Ok(());
    }
    // Forward reachability from 0.
    let fwd = bfs_levels(n, |x| kernel.row(x).iter().map(|e| e.0 as usize).collect());
    if let Some(unreached) = fwd.iter().position(|l| l.is_none()) {
        return Err(Error::Reducible {
            from: 0,
            to: unreached,
        });
    }
    // Backward reachability from 0.
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        for e in kernel.row(x) {
            radj[e.0 as usize].push(x);
        }
    }
    let bwd = bfs_levels(n, |x| radj[x].clone());
    if let Some(unreached) = bwd.iter().position(|l| l.is_none()) {
        return Err(Error::Reducible {
            from: unreached,
            to: 0,
        });
    }
    // Period: gcd over support edges of |level(u) + 1 - level(v)|.
    let mut g: u64 = 0;
    for x in 0..n {
        let lx = fwd[x].unwrap() as i64;
        for e in kernel.row(x) {
            let ly = fwd[e.0 as usize].unwrap() as i64;
            g = gcd(g, (lx + 1 - ly).unsigned_abs());
        }
    }
    if g > 1 {
        return Err(Error::Periodic { period: g as usize });
    }
    Ok(())
}

fn bfs_levels(n: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    level[0] = Some(0);
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        let lx = level[x].unwrap();
        for y in neighbors(x) {
            if level[y].is_none() {
                level[y] = Some(lx + 1);
                queue.push_back(y);
            }
        }
    }
    level
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// All-starts state advanced in lockstep; rows live in one flat buffer.
struct StartsMatrix {
    n: usize,
    data: Vec<f64>,
}

impl StartsMatrix {
    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        StartsMatrix { n, data }
    }

    fn advance(&mut self, kernel: &Kernel<f64>, steps: u64) {
        let n = self.n;
        for _ in 0..steps {
            self.data.par_chunks_mut(n).for_each(|row| {
                let mut scratch = vec![0.0; n];
                kernel.advance_into(row, &mut scratch);
                row.copy_from_slice(&scratch);
            });
        }
    }

    /// (worst TV, argmax start).
    fn worst_tv(&self, pi: &[f64]) -> (f64, usize) {
        let n = self.n;
        let per_row: Vec<f64> = self
            .data
            .par_chunks(n)
            .map(|row| tv_slice(row, pi))
            .collect();
        let mut best = (0.0, 0usize);
        for (i, &tv) in per_row.iter().enumerate() {
            if tv > best.0 {
                best = (tv, i);
            }
        }
        best
    }
}

/// Smallest `t` with `max over starts of TV(P^t(x, .), pi) <= epsilon`,
/// found by doubling then bisection on the non-increasing worst-case curve,
/// with a linear-scan fallback if a probed value ever increases.
pub fn mixing_time_exact(
    kernel: &Kernel<f64>,
    pi: &Distribution<f64>,
    epsilon: &Rat,
) -> Result<MixingReport> {
    if kernel.space_id != pi.space_id || kernel.n_states() != pi.probs.len() {
        return Err(Error::SpaceMismatch);
    }
    if *epsilon <= Rat::zero() || *epsilon >= Rat::one() {
        return Err(domain(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    check_ergodic(kernel)?;
    let n = kernel.n_states();
    if n > MIX_STATE_CAP {
        return Err(Error::SizeLimit {
            what: "worst-start mixing states",
            requested: n,
            cap: MIX_STATE_CAP,
        });
    }
    let eps = epsilon.to_f64().expect("epsilon fits f64");
    const MAX_T: u64 = 1 << 26;

    let mut curve: Vec<(u64, f64)> = Vec::new();
    let mut cur = StartsMatrix::identity(n);
    let mut cur_t = 0u64;
    let (tv0, start0) = cur.worst_tv(&pi.probs);
    curve.push((0, tv0));
    if tv0 <= eps {
        return Ok(MixingReport {
            epsilon: epsilon.clone(),
            t_mix: 0,
            worst_start: StateIndex {
                idx: start0,
                space_id: kernel.space_id,
            },
            tv_curve: curve,
        });
    }

    // Doubling phase: probe t = 1, 2, 4, ... until the TV drops under eps.
    let mut monotone = true;
    let mut base: Option<(u64, StartsMatrix)>; // last probe above eps
    let (mut hi_t, mut hi_info) = loop {
        let target = if cur_t == 0 { 1 } else { cur_t * 2 };
        if target > MAX_T {
            return Err(domain(format!("no mixing below t = {MAX_T}")));
        }
        // Keep a checkpoint of the last above-threshold matrix for bisection.
        base = Some((cur_t, StartsMatrix {
            n,
            data: cur.data.clone(),
        }));
        cur.advance(kernel, target - cur_t);
        cur_t = target;
        let (tv, start) = cur.worst_tv(&pi.probs);
        if let Some(&(_, last_tv)) = curve.last() {
            if tv > last_tv + 1e-12 {
                monotone = false;
            }
        }
        curve.push((cur_t, tv));
        if tv <= eps {
            break (cur_t, (tv, start));
        }
    };
    let (mut lo_t, mut base_m) = base.expect("doubling ran at least once");

    if !monotone {
        return mixing_time_linear(kernel, pi, epsilon, curve);
    }

    // Bisection on (lo_t, hi_t]: base_m sits at lo_t (TV > eps there).
    while hi_t - lo_t > 1 {
        let mid = lo_t + (hi_t - lo_t) / 2;
        let mut scratch = StartsMatrix {
            n,
            data: base_m.data.clone(),
        };
        scratch.advance(kernel, mid - lo_t);
        let (tv, start) = scratch.worst_tv(&pi.probs);
        curve.push((mid, tv));
        if tv <= eps {
            hi_t = mid;
            hi_info = (tv, start);
        } else {
            lo_t = mid;
            base_m = scratch;
        }
    }

    curve.sort_by_key(|&(t, _)| t);
    curve.dedup_by_key(|&mut (t, _)| t);
    for w in curve.windows(2) {
        if w[1].1 > w[0].1 + 1e-12 {
            return mixing_time_linear(kernel, pi, epsilon, Vec::new());
        }
    }
    Ok(MixingReport {
        epsilon: epsilon.clone(),
        t_mix: hi_t,
        worst_start: StateIndex {
            idx: hi_info.1,
            space_id: kernel.space_id,
        },
        tv_curve: curve,
    })
}

/// Plain scan fallback: advance one step at a time.
fn mixing_time_linear(
    kernel: &Kernel<f64>,
    pi: &Distribution<f64>,
    epsilon: &Rat,
    _discarded: Vec<(u64, f64)>,
) -> Result<MixingReport> {
    let n = kernel.n_states();
    let eps = epsilon.to_f64().expect("epsilon fits f64");
    let mut cur = StartsMatrix::identity(n);
    let mut curve = Vec::new();
    let mut t = 0u64;
    loop {
        let (tv, start) = cur.worst_tv(&pi.probs);
        curve.push((t, tv));
        if tv <= eps {
            return Ok(MixingReport {
                epsilon: epsilon.clone(),
                t_mix: t,
                worst_start: StateIndex {
                    idx: start,
                    space_id: kernel.space_id,
                },
                tv_curve: curve,
            });
        }
        if t >= (1 << 26) {
            return Err(domain("no mixing within the scan horizon".to_string()));
        }
        cur.advance(kernel, 1);
        t += 1;
    }
}

/// Spectral gap `1 - lambda_2` of a reversible kernel, via deflated power
/// iteration on the pi-symmetrized, half-shifted operator.
pub fn spectral_gap(kernel: &Kernel<f64>, pi: &Distribution<f64>, tol: f64) -> Result<f64> {
    if kernel.space_id != pi.space_id || kernel.n_states() != pi.probs.len() {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.n_states();
    // Reversibility gate.
    for x in 0..n {
        for &(y, pxy) in kernel.row(x) {
            let y = y as usize;
            if y <= x {
                continue;
            }
            let defect = (pi.probs[x] * pxy - pi.probs[y] * kernel.prob(y, x)).abs();
            if defect > 1e-9 {
                return Err(Error::NotReversible {
                    x,
                    y,
                    violation: defect,
                });
            }
        }
    }
    if n == 1 {
        return Ok(1.0);
    }

    let sqrt_pi: Vec<f64> = pi.probs.iter().map(|p| p.max(0.0).sqrt()).collect();
    let apply_b = |v: &[f64], out: &mut [f64]| {
        // out = ((S + I)/2) v with S = D^{1/2} P D^{-1/2}.
        out.fill(0.0);
        for x in 0..n {
            let mut acc = 0.0;
            for &(y, p) in kernel.row(x) {
                let y = y as usize;
                if sqrt_pi[y] > 0.0 {
                    acc += p * sqrt_pi[x] / sqrt_pi[y] * v[y];
                }
            }
            out[x] = 0.5 * (acc + v[x]);
        }
    };
    let deflate = |v: &mut [f64]| {
        let dot: f64 = v.iter().zip(&sqrt_pi).map(|(a, b)| a * b).sum();
        for (x, s) in v.iter_mut().zip(&sqrt_pi) {
            *x -= dot * s;
        }
    };
    let normalize = |v: &mut [f64]| {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
    };

    // Deterministic start vector with broad support.
    let mut v: Vec<f64> = (0..n).map(|i| ((i as f64) + 1.0).sin()).collect();
    deflate(&mut v);
    normalize(&mut v);
    let mut out = vec![0.0; n];
    let mut mu_prev = f64::NAN;
    let mut stable = 0;
    let max_iters = 500_000usize;
    let mut mu = 0.0;
    for _ in 0..max_iters {
        apply_b(&v, &mut out);
        deflate(&mut out);
        mu = v.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>();
        let residual: f64 = out
            .iter()
            .zip(&v)
            .map(|(b, a)| (b - mu * a).powi(2))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut out);
        normalize(&mut v);
        if residual <= tol.max(1e-14) {
            break;
        }
        if (mu - mu_prev).abs() <= tol * 1e-2 {
            stable += 1;
            if stable > 64 {
                break;
            }
        } else {
            stable = 0;
        }
        mu_prev = mu;
    }
    // B's eigenvalue mu maps back to lambda_2 = 2 mu - 1.
    let lambda2 = (2.0 * mu - 1.0).clamp(-1.0, 1.0);
    Ok((1.0 - lambda2).clamp(0.0, 1.0))
}

/// Dominant left eigenvector of the kernel by power iteration, L1-normalized.
pub fn stationary_by_power_iteration(kernel: &Kernel<f64>, tol: f64) -> Result<Distribution<f64>> {
    check_ergodic(kernel)?;
    let n = kernel.n_states();
    let mut v = vec![1.0 / n as f64; n];
    let mut scratch = vec![0.0; n];
    for _ in 0..2_000_000usize {
        kernel.advance_into(&v, &mut scratch);
        let norm: f64 = scratch.iter().sum();
        for x in scratch.iter_mut() {
            *x /= norm;
        }
        let delta = v
            .iter()
            .zip(&scratch)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut v, &mut scratch);
        if delta <= tol {
            break;
        }
    }
    Ok(Distribution {
        space_id: kernel.space_id,
        probs: v,
    })
}

/// Restriction of the kernel to a state subset: moves leaving the block are
/// folded into the self-loop.
pub fn restrict_chain(kernel: &Kernel<Rat>, block: &[usize]) -> Result<Kernel<Rat>> {
    if block.is_empty() {
        return Err(Error::EmptyBlock);
    }
    let mut index_of = std::collections::HashMap::new();
    for (i, &x) in block.iter().enumerate() {
        if x >= kernel.n_states() || index_of.insert(x, i).is_some() {
            return Err(domain(format!("bad block member {x}")));
        }
    }
    let rows = block
        .iter()
        .map(|&x| {
            let mut entries: Vec<(u32, Rat)> = Vec::new();
            let mut leak = Rat::zero();
            for (y, p) in kernel.row(x) {
                match index_of.get(&(*y as usize)) {
                    Some(&j) => entries.push((j as u32, p.clone())),
                    None => leak += p,
                }
            }
            if !leak.is_zero() {
                let self_idx = index_of[&x] as u32;
                match entries.binary_search_by_key(&self_idx, |e| e.0) {
                    Ok(i) => entries[i].1 += leak,
                    Err(i) => entries.insert(i, (self_idx, leak)),
                }
            }
            entries.sort_by_key(|e| e.0);
            entries
        })
        .collect();
    let mut h = DefaultHasher::new();
    kernel.space_id.hash(&mut h);
    "restrict".hash(&mut h);
    block.hash(&mut h);
    Ok(Kernel {
        space_id: h.finish(),
        rows,
    })
}

/// Projection chain over a partition: block-to-block transition rates under
/// the stationary distribution restricted to each block.
pub fn project_chain(
    kernel: &Kernel<Rat>,
    partition: &[Vec<usize>],
    pi: &Distribution<Rat>,
) -> Result<Kernel<Rat>> {
    if kernel.space_id != pi.space_id {
        return Err(Error::SpaceMismatch);
    }
    let n = kernel.n_states();
    let mut block_of = vec![usize::MAX; n];
    for (b, members) in partition.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::EmptyBlock);
        }
        for &x in members {
            if x >= n || block_of[x] != usize::MAX {
                return Err(domain("partition must cover each state exactly once".to_string()));
            }
            block_of[x] = b;
        }
    }
    if block_of.contains(&usize::MAX) {
        return Err(domain("partition does not cover the space".to_string()));
    }
    let masses: Vec<Rat> = partition
        .iter()
        .map(|members| members.iter().map(|&x| pi.probs[x].clone()).sum())
        .collect();
    for (b, m) in masses.iter().enumerate() {
        if m.is_zero() {
            return Err(Error::ZeroMassBlock { index: b });
        }
    }
    let k = partition.len();
    let rows = (0..k)
        .map(|b| {
            let mut acc = vec![Rat::zero(); k];
            for &x in &partition[b] {
                let weight = &pi.probs[x] / &masses[b];
                for (y, p) in kernel.row(x) {
                    acc[block_of[*y as usize]] += &weight * p;
                }
            }
            acc.into_iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(j, p)| (j as u32, p))
                .collect()
        })
        .collect();
    let mut h = DefaultHasher::new();
    kernel.space_id.hash(&mut h);
    "project".hash(&mut h);
    partition.hash(&mut h);
    Ok(Kernel {
        space_id: h.finish(),
        rows,
    })
}

/// Upper bounds assembled from component quantities. `Canonical` interprets
/// the convergence term as `ln(1/epsilon)`; a negative log of epsilon would
/// shrink the bound.
#[derive(Clone, Debug)]
pub enum BoundArgs {
    /// `t <= 2 t_bar max_i t_i`
    Decomposition { t_bar: f64, t_max: f64 },
    /// `t_eps <= max_i (2/p_i) t_i`, component times taken at `eps/(2k)`.
    Product { components: Vec<(f64, f64)> },
    /// `t(G_k) <= 4 n^8 t(X_k)`
    Reduction { t_x: f64, n: usize },
    /// `t(X_3) <= 2 n^4 t(X_t)`
    Comparison3 { t_xt: f64, n: usize },
    /// `t_eps <= 8 Phi^2 (ln(1/pi_min) + ln(1/eps))`
    Canonical { phi: f64, pi_min: f64, epsilon: f64 },
    /// `t(L_3) <= n^4 t(M_tree)`
    League { t_mtree: f64, n: usize },
}

pub fn compose_bound(args: &BoundArgs) -> Result<f64> {
    let check_pos = |v: f64, name: &str| -> Result<f64> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(domain(format!("{name} must be positive and finite, got {v}")))
        }
    };
    match args {
        BoundArgs::Decomposition { t_bar, t_max } => {
            Ok(2.0 * check_pos(*t_bar, "t_bar")? * check_pos(*t_max, "t_max")?)
        }
        BoundArgs::Product { components } => {
            if components.is_empty() {
                return Err(domain("product bound needs components".to_string()));
            }
            let mut best = 0.0f64;
            for &(p, t) in components {
                check_pos(p, "p_i")?;
                check_pos(t, "t_i")?;
                if p > 1.0 {
                    return Err(domain(format!("p_i must lie in (0,1], got {p}")));
                }
                best = best.max(2.0 / p * t);
            }
            Ok(best)
        }
        BoundArgs::Reduction { t_x, n } => {
            Ok(4.0 * (*n as f64).powi(8) * check_pos(*t_x, "t_x")?)
        }
        BoundArgs::Comparison3 { t_xt, n } => {
            Ok(2.0 * (*n as f64).powi(4) * check_pos(*t_xt, "t_xt")?)
        }
        BoundArgs::Canonical { phi, pi_min, epsilon } => {
            check_pos(*phi, "phi")?;
            check_pos(*pi_min, "pi_min")?;
            check_pos(*epsilon, "epsilon")?;
            if *pi_min > 1.0 || *epsilon >= 1.0 {
                return Err(domain("pi_min and epsilon must lie in (0,1)".to_string()));
            }
            Ok(8.0 * phi * phi * ((1.0 / pi_min).ln() + (1.0 / epsilon).ln()))
        }
        BoundArgs::League { t_mtree, n } => {
            Ok((*n as f64).powi(4) * check_pos(*t_mtree, "t_mtree")?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{StrengthTable, TeamPartition};
    use crate::combinatorics::{Arrangement, State, StateSpace};
    use crate::measures::stationary_distribution;
    use crate::rat;

    fn gladiator2() -> ChainSpec {
        ChainSpec::Gladiator {
            teams: TeamPartition::singletons(2),
            strengths: StrengthTable::from_ints(&[1, 2]).unwrap(),
        }
    }

    #[test]
    fn kernel_matches_transition_rows() {
        let spec = gladiator2();
        let kernel = assemble_kernel(&spec).unwrap();
        assert_eq!(kernel.n_states(), 2);
        assert_eq!(kernel.prob(0, 0), rat(2, 3));
        assert_eq!(kernel.prob(0, 1), rat(1, 3));
        assert_eq!(kernel.prob(1, 0), rat(2, 3));
        assert_eq!(kernel.prob(1, 1), rat(1, 3));
    }

    #[test]
    fn simple_three_kernel_is_doubly_stochastic() {
        let kernel = assemble_kernel(&ChainSpec::Simple { n: 3 }).unwrap();
        assert_eq!(kernel.n_states(), 6);
        for x in 0..6 {
            let row_sum: Rat = kernel.row(x).iter().map(|(_, p)| p.clone()).sum();
            assert!(row_sum.is_one());
            let col_sum: Rat = (0..6).map(|y| kernel.prob(y, x)).sum();
            assert!(col_sum.is_one());
        }
    }

    #[test]
    fn jumphop_kernel_rows_sum_to_one() {
        let spec = ChainSpec::JumpHop {
            counts: [1, 1, 1],
            strengths: StrengthTable::from_ints(&[1, 2, 4]).unwrap(),
        };
        let kernel = assemble_kernel(&spec).unwrap();
        assert_eq!(kernel.n_states(), 6);
        for x in 0..6 {
            let row_sum: Rat = kernel.row(x).iter().map(|(_, p)| p.clone()).sum();
            assert!(row_sum.is_one());
        }
    }

    #[test]
    fn cap_errors() {
        let err = assemble_kernel_with_cap(&ChainSpec::Simple { n: 8 }, 100).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
    }

    #[test]
    fn point_mass_and_one_step() {
        let spec = gladiator2();
        let kernel = assemble_kernel(&spec).unwrap();
        let space = spec.state_space();
        let start = space
            .rank(&space.unrank(1).unwrap())
            .unwrap();
        let d0 = distribution_at_time(&kernel, start, 0).unwrap();
        assert_eq!(d0.probs, vec![rat(0, 1), rat(1, 1)]);
        let d1 = distribution_at_time(&kernel, start, 1).unwrap();
        assert_eq!(d1.probs, vec![rat(2, 3), rat(1, 3)]);
    }

    #[test]
    fn float_advance_preserves_mass() {
        let spec = ChainSpec::Simple { n: 4 };
        let kernel = assemble_float_kernel(&spec, FLOAT_STATE_CAP).unwrap();
        let space = spec.state_space();
        let start = space.rank(&space.unrank(5).unwrap()).unwrap();
        let d = distribution_at_time_f64(&kernel, start, 1000).unwrap();
        let total: f64 = d.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tv_distance_cases() {
        let sp = StateSpace::Permutations { n: 2 };
        let mk = |a: Rat, b: Rat| Distribution {
            space_id: sp.id(),
            probs: vec![a, b],
        };
        let d1 = mk(rat(1, 2), rat(1, 2));
        assert_eq!(tv_distance(&d1, &d1.clone()).unwrap(), rat(0, 1));
        let point_a = mk(rat(1, 1), rat(0, 1));
        let point_b = mk(rat(0, 1), rat(1, 1));
        assert_eq!(tv_distance(&point_a, &point_b).unwrap(), rat(1, 1));
        assert_eq!(tv_distance(&d1, &point_a).unwrap(), rat(1, 2));
    }

    #[test]
    fn gladiator_two_mixes_in_one_step() {
        let spec = gladiator2();
        let kernel = assemble_float_kernel(&spec, FLOAT_STATE_CAP).unwrap();
        let (pi, _) = stationary_distribution(&spec).unwrap();
        let report = mixing_time_exact(&kernel, &pi.to_float(), &rat(1, 4)).unwrap();
        assert_eq!(report.t_mix, 1);
        let gap = spectral_gap(&kernel, &pi.to_float(), 1e-10).unwrap();
        assert!((gap - 1.0).abs() < 1e-9, "gap {gap}");
    }

    #[test]
    fn identity_kernel_is_reducible() {
        let rows = vec![vec![(0u32, 1.0)], vec![(1u32, 1.0)]];
        let kernel = Kernel::from_rows(123, rows);
        let pi = Distribution {
            space_id: 123,
            probs: vec![0.5, 0.5],
        };
        let err = mixing_time_exact(&kernel, &pi, &rat(1, 4)).unwrap_err();
        assert!(matches!(err, Error::Reducible { .. }));
    }

    #[test]
    fn two_cycle_is_periodic() {
        let rows = vec![vec![(1u32, 1.0)], vec![(0u32, 1.0)]];
        let kernel = Kernel::from_rows(7, rows);
        let err = check_ergodic(&kernel).unwrap_err();
        assert!(matches!(err, Error::Periodic { period: 2 }));
    }

    #[test]
    fn two_state_gap_closed_form() {
        // [[1-a, a], [b, 1-b]] has second eigenvalue 1-a-b.
        let (a, b) = (0.25, 0.25);
        let rows = vec![
            vec![(0u32, 1.0 - a), (1u32, a)],
            vec![(0u32, b), (1u32, 1.0 - b)],
        ];
        let kernel = Kernel::from_rows(9, rows);
        let pi = Distribution {
            space_id: 9,
            probs: vec![b / (a + b), a / (a + b)],
        };
        let gap = spectral_gap(&kernel, &pi, 1e-12).unwrap();
        assert!((gap - (a + b)).abs() < 1e-9, "gap {gap}");
    }

    #[test]
    fn spectral_gap_rejects_irreversible() {
        // A 3-cycle with uniform pi is not reversible.
        let rows = vec![
            vec![(1u32, 1.0)],
            vec![(2u32, 1.0)],
            vec![(0u32, 1.0)],
        ];
        let kernel = Kernel::from_rows(11, rows);
        let pi = Distribution {
            space_id: 11,
            probs: vec![1.0 / 3.0; 3],
        };
        assert!(matches!(
            spectral_gap(&kernel, &pi, 1e-10),
            Err(Error::NotReversible { .. })
        ));
    }

    #[test]
    fn restriction_edge_cases() {
        let spec = gladiator2();
        let kernel = assemble_kernel(&spec).unwrap();
        let full = restrict_chain(&kernel, &[0, 1]).unwrap();
        assert_eq!(full.rows, kernel.rows);
        let single = restrict_chain(&kernel, &[0]).unwrap();
        assert_eq!(single.n_states(), 1);
        assert!(single.prob(0, 0).is_one());
        assert!(matches!(restrict_chain(&kernel, &[]), Err(Error::EmptyBlock)));
    }

    #[test]
    fn projection_edge_cases() {
        let spec = gladiator2();
        let kernel = assemble_kernel(&spec).unwrap();
        let (pi, _) = stationary_distribution(&spec).unwrap();
        let one = project_chain(&kernel, &[vec![0, 1]], &pi).unwrap();
        assert_eq!(one.n_states(), 1);
        assert!(one.prob(0, 0).is_one());
        let singletons = project_chain(&kernel, &[vec![0], vec![1]], &pi).unwrap();
        assert_eq!(singletons.rows, kernel.rows);
    }

    #[test]
    fn compose_bound_values() {
        let v = compose_bound(&BoundArgs::Decomposition { t_bar: 10.0, t_max: 5.0 }).unwrap();
        assert_eq!(v, 100.0);
        let v = compose_bound(&BoundArgs::Reduction { t_x: 1.0, n: 2 }).unwrap();
        assert_eq!(v, 1024.0);
        let v = compose_bound(&BoundArgs::Canonical {
            phi: 2.0,
            pi_min: 0.2,
            epsilon: 0.25,
        })
        .unwrap();
        assert!((v - 32.0 * (5.0f64.ln() + 4.0f64.ln())).abs() < 1e-9);
        assert!((v - 95.87).abs() < 0.01);
        let v = compose_bound(&BoundArgs::Comparison3 { t_xt: 3.0, n: 2 }).unwrap();
        assert_eq!(v, 96.0);
        let v = compose_bound(&BoundArgs::League { t_mtree: 2.0, n: 3 }).unwrap();
        assert_eq!(v, 162.0);
        let v = compose_bound(&BoundArgs::Product {
            components: vec![(0.5, 10.0), (0.25, 3.0)],
        })
        .unwrap();
        assert_eq!(v, 40.0);
    }

    #[test]
    fn mixing_monotone_in_epsilon() {
        let spec = ChainSpec::Simple { n: 3 };
        let kernel = assemble_float_kernel(&spec, FLOAT_STATE_CAP).unwrap();
        let (pi, _) = stationary_distribution(&spec).unwrap();
        let pi_f = pi.to_float();
        let t_half = mixing_time_exact(&kernel, &pi_f, &rat(1, 2)).unwrap().t_mix;
        let t_quarter = mixing_time_exact(&kernel, &pi_f, &rat(1, 4)).unwrap().t_mix;
        let t_eighth = mixing_time_exact(&kernel, &pi_f, &rat(1, 8)).unwrap().t_mix;
        assert!(t_half <= t_quarter && t_quarter <= t_eighth);
    }

    /// Independent oracle for small mixing times: dense matrix powers.
    fn dense_mixing_time(kernel: &Kernel<f64>, pi: &[f64], eps: f64) -> u64 {
        let n = kernel.n_states();
        let mut dense = vec![vec![0.0f64; n]; n];
        for (x, row) in dense.iter_mut().enumerate() {
            for &(y, p) in kernel.row(x) {
                row[y as usize] = p;
            }
        }
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut t = 0u64;
        loop {
            let worst = m
                .iter()
                .map(|row| tv_slice(row, pi))
                .fold(0.0f64, f64::max);
            if worst <= eps {
                return t;
            }
            let mut next = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for k in 0..n {
                    let v = m[i][k];
                    if v == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        next[i][j] += v * dense[k][j];
                    }
                }
            }
            m = next;
            t += 1;
        }
    }

    #[test]
    fn simple_three_mixing_regression() {
        let spec = ChainSpec::Simple { n: 3 };
        let kernel = assemble_float_kernel(&spec, FLOAT_STATE_CAP).unwrap();
        let (pi, _) = stationary_distribution(&spec).unwrap();
        let pi_f = pi.to_float();
        let report = mixing_time_exact(&kernel, &pi_f, &rat(1, 4)).unwrap();
        let oracle = dense_mixing_time(&kernel, &pi_f.probs, 0.25);
        assert_eq!(report.t_mix, oracle);
        // Regression baseline, frozen from the dense-power oracle.
        assert_eq!(report.t_mix, 4);
    }

    #[test]
    fn stationary_power_iteration_agrees() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::singletons(4),
            strengths: StrengthTable::from_ints(&[1, 2, 3, 9]).unwrap(),
        };
        let kernel = assemble_float_kernel(&spec, FLOAT_STATE_CAP).unwrap();
        let (pi, _) = stationary_distribution(&spec).unwrap();
        let est = stationary_by_power_iteration(&kernel, 1e-13).unwrap();
        for (a, b) in est.probs.iter().zip(&pi.to_float().probs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn restriction_of_gladiator_is_particle_system() {
        // Teams {1,2} (strength 1) and {3} (strength 4): fixing the relative
        // order of 1 and 2 collapses to the particle system with counts (2, 1).
        let glad = ChainSpec::Gladiator {
            teams: TeamPartition::new(&[vec![1, 2], vec![3]]).unwrap(),
            strengths: StrengthTable::from_ints(&[1, 1, 4]).unwrap(),
        };
        let kernel = assemble_kernel(&glad).unwrap();
        let space = glad.state_space();
        let states = space.enumerate().unwrap();
        // Block: permutations where 1 appears before 2.
        let block: Vec<usize> = states
            .iter()
            .enumerate()
            .filter(|(_, st)| {
                let p = st.as_perm().unwrap();
                p.position_of(1) < p.position_of(2)
            })
            .map(|(i, _)| i)
            .collect();
        let restricted = restrict_chain(&kernel, &block).unwrap();

        let part = ChainSpec::ParticleSystem {
            counts: vec![2, 1],
            strengths: StrengthTable::from_ints(&[1, 4]).unwrap(),
        };
        let pk = assemble_kernel(&part).unwrap();
        let pspace = part.state_space();

        // Bijection: a block permutation maps to the word of team labels.
        let word_index = |st: &State| -> usize {
            let p = st.as_perm().unwrap();
            let word: Vec<u8> = (1..=3).map(|pos| if p.label_at(pos) == 3 { 1 } else { 0 }).collect();
            let arr = Arrangement::new(word, vec![2, 1]).unwrap();
            pspace.rank(&State::Word(arr)).unwrap().idx
        };
        for (bi, &si) in block.iter().enumerate() {
            let wi = word_index(&states[si]);
            for (bj, &sj) in block.iter().enumerate() {
                let wj = word_index(&states[sj]);
                assert_eq!(
                    restricted.prob(bi, bj),
                    pk.prob(wi, wj),
                    "kernel mismatch at block pair ({bi},{bj})"
                );
            }
        }
    }
}
