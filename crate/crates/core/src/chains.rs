//! Chain variants as transition kernels: given a state, produce the full
//! outgoing distribution, or take one seeded random step.
//!
//! All variants share the same "ahead" convention: when two items contest a
//! pair of positions, the winner takes the higher position index. Detailed
//! balance against the product-form stationary weights (see [`crate::measures`])
//! pins this down; the weights give item `g` the factor `s(g)^position`.

use std::collections::BTreeMap;

use num::traits::Pow;
use num::{One, Zero};
use rand::Rng;

use crate::combinatorics::{Arrangement, Permutation, State, StateSpace};
use crate::error::{domain, Result};
use crate::{rat, Rat};

/// Positive strengths keyed by label (1-based) or particle type (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrengthTable {
    strengths: Vec<Rat>,
}

impl StrengthTable {
    pub fn new(strengths: Vec<Rat>) -> Result<Self> {
        if strengths.is_empty() {
            return Err(domain("strength table is empty".to_string()));
        }
        if strengths.iter().any(|s| *s <= Rat::zero()) {
            return Err(domain("all strengths must be strictly positive".to_string()));
        }
        Ok(StrengthTable { strengths })
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| rat(v, 1)).collect())
    }

    pub fn len(&self) -> usize {
        self.strengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strengths.is_empty()
    }

    /// Strength of 1-based label `g`.
    pub fn of_label(&self, g: u8) -> &Rat {
        &self.strengths[g as usize - 1]
    }

    /// Strength of 0-based particle type `t`.
    pub fn of_type(&self, t: u8) -> &Rat {
        &self.strengths[t as usize]
    }

    pub fn as_slice(&self) -> &[Rat] {
        &self.strengths
    }

    /// True when strengths are strictly increasing.
    pub fn is_ascending(&self) -> bool {
        self.strengths.windows(2).all(|w| w[0] < w[1])
    }

    /// Check the weak-to-strong ratio condition `s_i / s_{i+1} < threshold`
    /// for every consecutive pair. The mixing theorems want `threshold = 1/2`.
    pub fn ratio_condition(&self, threshold: &Rat) -> bool {
        self.strengths
            .windows(2)
            .all(|w| &w[0] / &w[1] < *threshold)
    }
}

/// Partition of labels `1..=n` into non-empty teams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeamPartition {
    team_of: Vec<usize>,
    k: usize,
}

impl TeamPartition {
    pub fn new(blocks: &[Vec<u8>]) -> Result<Self> {
        let n: usize = blocks.iter().map(|b| b.len()).sum();
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(domain("team partition has an empty block".to_string()));
        }
        let mut team_of = vec![usize::MAX; n];
        for (t, block) in blocks.iter().enumerate() {
            for &g in block {
                if g == 0 || g as usize > n || team_of[g as usize - 1] != usize::MAX {
                    return Err(domain("blocks must exactly partition 1..=n".to_string()));
                }
                team_of[g as usize - 1] = t;
            }
        }
        Ok(TeamPartition {
            team_of,
            k: blocks.len(),
        })
    }

    /// Singleton teams: every gladiator plays alone.
    pub fn singletons(n: usize) -> Self {
        TeamPartition {
            team_of: (0..n).collect(),
            k: n,
        }
    }

    /// Group labels by equal strength, in order of first appearance.
    pub fn from_equal_strengths(strengths: &StrengthTable) -> Self {
        let mut team_of = Vec::with_capacity(strengths.len());
        let mut reps: Vec<&Rat> = Vec::new();
        for s in strengths.as_slice() {
            match reps.iter().position(|r| *r == s) {
                Some(t) => team_of.push(t),
                None => {
                    reps.push(s);
                    team_of.push(reps.len() - 1);
                }
            }
        }
        TeamPartition {
            team_of,
            k: reps.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.team_of.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// 0-based team index of 1-based label `g`.
    pub fn team_of(&self, g: u8) -> usize {
        self.team_of[g as usize - 1]
    }

    pub fn team_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &t in &self.team_of {
            sizes[t] += 1;
        }
        sizes
    }
}

/// Child slot tags of an interior tree node, in weak-to-strong order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChildTag {
    Left,
    Center,
    Right,
}

/// Recursive description used to build a [`TernaryTreeSpec`]. Each interior
/// node lists 2 or 3 `(strength, subtree)` children in strictly increasing
/// strength order; leaves are labeled `1..=n` left to right.
#[derive(Clone, Debug)]
pub enum TreeSpec {
    Leaf,
    Node(Vec<(Rat, TreeSpec)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ChildRef {
    Leaf(u8),
    Node(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TreeNode {
    parent: Option<usize>,
    children: Vec<(Rat, ChildRef)>,
    /// Inclusive 1-based label range spanned by this node.
    range: (u8, u8),
}

/// A rooted tree with `n` leaves labeled 1..n in order; each interior node
/// carries strictly increasing child strengths. Swap probabilities between
/// two labels are read off their lowest common ancestor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TernaryTreeSpec {
    nodes: Vec<TreeNode>,
    n: usize,
}

impl TernaryTreeSpec {
    pub fn new(spec: &TreeSpec) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut next_label = 1u8;
        build_tree(spec, None, &mut nodes, &mut next_label)?;
        let n = next_label as usize - 1;
        if nodes.is_empty() {
            return Err(domain("tree must have an interior root".to_string()));
        }
        if n < 2 {
            return Err(domain("tree needs at least 2 leaves".to_string()));
        }
        Ok(TernaryTreeSpec { nodes, n })
    }

    /// Balanced helper: one root with `k` leaf children (k = 2 or 3).
    pub fn flat(strengths: &[Rat]) -> Result<Self> {
        let children = strengths
            .iter()
            .map(|s| (s.clone(), TreeSpec::Leaf))
            .collect();
        Self::new(&TreeSpec::Node(children))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_contains(&self, node: usize, label: u8) -> bool {
        let (lo, hi) = self.nodes[node].range;
        lo <= label && label <= hi
    }

    fn child_slot_containing(&self, node: usize, label: u8) -> usize {
        for (slot, (_, child)) in self.nodes[node].children.iter().enumerate() {
            let contains = match child {
                ChildRef::Leaf(l) => *l == label,
                ChildRef::Node(c) => self.node_contains(*c, label),
            };
            if contains {
                return slot;
            }
        }
        unreachable!("label {label} not under node {node}")
    }

    /// Lowest common ancestor node of two distinct labels.
    pub fn lca(&self, x: u8, y: u8) -> usize {
        let mut node = 0;
        loop {
            let sx = self.child_slot_containing(node, x);
            let sy = self.child_slot_containing(node, y);
            if sx != sy {
                return node;
            }
            match &self.nodes[node].children[sx].1 {
                ChildRef::Node(c) => node = *c,
                ChildRef::Leaf(_) => unreachable!("distinct labels under one leaf"),
            }
        }
    }

    /// Label range (inclusive) spanned by the subtree rooted at `node`.
    pub fn subtree_range(&self, node: usize) -> (u8, u8) {
        self.nodes[node].range
    }

    /// Strengths of the lca children containing `x` and `y` respectively.
    pub fn contest_strengths(&self, x: u8, y: u8) -> (Rat, Rat) {
        let v = self.lca(x, y);
        let sx = self.child_slot_containing(v, x);
        let sy = self.child_slot_containing(v, y);
        (
            self.nodes[v].children[sx].0.clone(),
            self.nodes[v].children[sy].0.clone(),
        )
    }

    /// Classify `z` relative to meet node `v`: the tag is the pair
    /// (classification node, child slot). For `z` inside `v`'s subtree the
    /// node is `v` itself; otherwise it is the lowest ancestor of `v` whose
    /// subtree contains `z`.
    pub fn classify(&self, z: u8, v: usize) -> (usize, usize) {
        if self.node_contains(v, z) {
            return (v, self.child_slot_containing(v, z));
        }
        let mut u = v;
        while let Some(p) = self.nodes[u].parent {
            if self.node_contains(p, z) {
                return (p, self.child_slot_containing(p, z));
            }
            u = p;
        }
        unreachable!("root contains every label")
    }

    /// Per-node weak-to-strong ratio condition (see [`StrengthTable::ratio_condition`]).
    pub fn ratio_condition(&self, threshold: &Rat) -> bool {
        self.nodes.iter().all(|node| {
            node.children
                .windows(2)
                .all(|w| &w[0].0 / &w[1].0 < *threshold)
        })
    }

    /// Maximum weak-to-strong consecutive ratio over all nodes.
    pub fn max_weak_strong_ratio(&self) -> Rat {
        let mut best: Option<Rat> = None;
        for node in &self.nodes {
            for w in node.children.windows(2) {
                let r = &w[0].0 / &w[1].0;
                if best.as_ref().is_none_or(|b| r > *b) {
                    best = Some(r);
                }
            }
        }
        best.expect("tree has at least one interior node")
    }
}

fn build_tree(
    spec: &TreeSpec,
    parent: Option<usize>,
    nodes: &mut Vec<TreeNode>,
    next_label: &mut u8,
) -> Result<ChildRef> {
    match spec {
        TreeSpec::Leaf => {
            let label = *next_label;
            *next_label += 1;
            Ok(ChildRef::Leaf(label))
        }
        TreeSpec::Node(children) => {
            if !(2..=3).contains(&children.len()) {
                return Err(domain("interior nodes need 2 or 3 children".to_string()));
            }
            for w in children.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(domain(
                        "child strengths must be strictly increasing".to_string(),
                    ));
                }
            }
            if children.iter().any(|(s, _)| *s <= Rat::zero()) {
                return Err(domain("child strengths must be positive".to_string()));
            }
            let idx = nodes.len();
            nodes.push(TreeNode {
                parent,
                children: Vec::new(),
                range: (0, 0),
            });
            let lo = *next_label;
            let mut built = Vec::with_capacity(children.len());
            for (s, sub) in children {
                let child = build_tree(sub, Some(idx), nodes, next_label)?;
                built.push((s.clone(), child));
            }
            let hi = *next_label - 1;
            nodes[idx].children = built;
            nodes[idx].range = (lo, hi);
            Ok(ChildRef::Node(idx))
        }
    }
}

/// A chain variant plus its parameters.
#[derive(Clone, Debug)]
pub enum ChainSpec {
    /// Uniform adjacent transpositions, `p = 1/2`.
    Simple { n: usize },
    /// Adjacent transpositions where the larger label advances toward the
    /// head with probability `p`; stationary weight `odds^inv` with
    /// `odds = p/(1-p)`.
    ConstantBias { n: usize, p: Rat },
    /// Adjacent transpositions with strength-proportional wins; teams share
    /// a strength.
    Gladiator {
        teams: TeamPartition,
        strengths: StrengthTable,
    },
    /// Typed indistinguishable particles on a line, adjacent swaps only.
    ParticleSystem {
        counts: Vec<usize>,
        strengths: StrengthTable,
    },
    /// Three-type words with Jump and Hop long-range moves.
    JumpHop {
        counts: [usize; 3],
        strengths: StrengthTable,
    },
    /// Adjacent transpositions with tree-structured swap probabilities.
    LeagueHierarchy { tree: TernaryTreeSpec },
    /// Long-range exchange of two labels whose meet-subtree has no particle
    /// between them.
    MTree { tree: TernaryTreeSpec },
    /// Move-ahead-one: the requested record advances one position.
    Ma1 { strengths: StrengthTable },
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ChainSpec::Simple { n } => {
                if *n < 1 {
                    return Err(domain("need n >= 1".to_string()));
                }
            }
            ChainSpec::ConstantBias { n, p } => {
                if *n < 1 {
                    return Err(domain("need n >= 1".to_string()));
                }
                if *p < rat(1, 2) || *p >= Rat::one() {
                    return Err(domain("constant bias needs 1/2 <= p < 1".to_string()));
                }
            }
            ChainSpec::Gladiator { teams, strengths } => {
                if teams.n() != strengths.len() {
                    return Err(domain("team partition and strengths disagree on n".to_string()));
                }
                for g in 1..=teams.n() as u8 {
                    for h in 1..=teams.n() as u8 {
                        if teams.team_of(g) == teams.team_of(h)
                            && strengths.of_label(g) != strengths.of_label(h)
                        {
                            return Err(domain(
                                "gladiators on one team must share a strength".to_string(),
                            ));
                        }
                    }
                }
            }
            ChainSpec::ParticleSystem { counts, strengths } => {
                if counts.len() != strengths.len() {
                    return Err(domain("counts and strengths disagree on type count".to_string()));
                }
                if counts.iter().sum::<usize>() == 0 {
                    return Err(domain("particle system needs at least one particle".to_string()));
                }
            }
            ChainSpec::JumpHop { counts, strengths } => {
                if strengths.len() != 3 {
                    return Err(domain("jump/hop chains need exactly 3 particle types".to_string()));
                }
                if counts.iter().sum::<usize>() == 0 {
                    return Err(domain("jump/hop chain needs at least one particle".to_string()));
                }
            }
            ChainSpec::LeagueHierarchy { .. } | ChainSpec::MTree { .. } => {}
            ChainSpec::Ma1 { strengths } => {
                if strengths.is_empty() {
                    return Err(domain("need at least one record".to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        match self {
            ChainSpec::Simple { n } | ChainSpec::ConstantBias { n, .. } => *n,
            ChainSpec::Gladiator { teams, .. } => teams.n(),
            ChainSpec::ParticleSystem { counts, .. } => counts.iter().sum(),
            ChainSpec::JumpHop { counts, .. } => counts.iter().sum(),
            ChainSpec::LeagueHierarchy { tree } | ChainSpec::MTree { tree } => tree.n(),
            ChainSpec::Ma1 { strengths } => strengths.len(),
        }
    }

    pub fn state_space(&self) -> StateSpace {
        match self {
            ChainSpec::ParticleSystem { counts, .. } => StateSpace::Arrangements {
                counts: counts.clone(),
            },
            ChainSpec::JumpHop { counts, .. } => StateSpace::Arrangements {
                counts: counts.to_vec(),
            },
            _ => StateSpace::Permutations { n: self.n() },
        }
    }

    /// True for variants whose moves swap adjacent positions only.
    pub fn is_adjacent_transposition(&self) -> bool {
        !matches!(self, ChainSpec::JumpHop { .. } | ChainSpec::MTree { .. } | ChainSpec::Ma1 { .. })
    }
}

fn rat_pow(x: &Rat, k: u32) -> Rat {
    if k == 0 {
        Rat::one()
    } else {
        Pow::pow(x.clone(), k as i32)
    }
}

/// Probabilities of the strength-increasing and strength-decreasing outcome
/// for a Jump across `gap = j - i`: `((r/(1+r), 1/(1+r))` with
/// `r = (s_c/s_a)^gap`.
pub fn jump_probability(s_a: &Rat, s_c: &Rat, gap: u32) -> (Rat, Rat) {
    assert!(gap >= 1, "jump gap must be at least 1");
    let r = rat_pow(&(s_c / s_a), gap);
    let denom = Rat::one() + &r;
    (&r / &denom, Rat::one() / denom)
}

/// Same shape as [`jump_probability`] with the Hop formula: the moving
/// particle crosses a run of `gap` same-type particles and the ratio is
/// `(s_strong/s_weak)^gap`.
pub fn hop_probability(s_weak: &Rat, s_strong: &Rat, gap: u32) -> (Rat, Rat) {
    jump_probability(s_weak, s_strong, gap)
}

/// Full outgoing distribution from `state`, merged over proposals, including
/// self-loop mass. Entries are sorted by state and sum to exactly 1.
pub fn transition_row(spec: &ChainSpec, state: &State) -> Result<Vec<(State, Rat)>> {
    spec.validate()?;
    check_membership(spec, state)?;
    let mut row: BTreeMap<State, Rat> = BTreeMap::new();
    match spec {
        ChainSpec::Simple { .. }
        | ChainSpec::ConstantBias { .. }
        | ChainSpec::Gladiator { .. }
        | ChainSpec::LeagueHierarchy { .. } => {
            let p = state.as_perm()?;
            row_adjacent_perm(spec, p, &mut row);
        }
        ChainSpec::ParticleSystem { strengths, .. } => {
            let w = state.as_word()?;
            row_particle(strengths, w, &mut row);
        }
        ChainSpec::JumpHop { strengths, .. } => {
            let w = state.as_word()?;
            row_jumphop(strengths, w, &mut row);
        }
        ChainSpec::MTree { tree } => {
            let p = state.as_perm()?;
            row_mtree(tree, p, &mut row);
        }
        ChainSpec::Ma1 { strengths } => {
            let p = state.as_perm()?;
            row_ma1(strengths, p, &mut row);
        }
    }
    Ok(row.into_iter().collect())
}

fn check_membership(spec: &ChainSpec, state: &State) -> Result<()> {
    let space = spec.state_space();
    space.rank(state)?;
    Ok(())
}

fn add(row: &mut BTreeMap<State, Rat>, state: State, p: Rat) {
    if p.is_zero() {
        return;
    }
    row.entry(state)
        .and_modify(|q| *q += p.clone())
        .or_insert(p);
}

/// Swap probability for the pair occupying positions (i, i+1): the winner
/// takes the higher index.
fn adjacent_swap_prob(spec: &ChainSpec, behind: u8, ahead: u8) -> Rat {
    match spec {
        ChainSpec::Simple { .. } => rat(1, 2),
        ChainSpec::ConstantBias { p, .. } => {
            // The larger label advances toward the head with probability p.
            if behind < ahead {
                p.clone()
            } else {
                Rat::one() - p
            }
        }
        ChainSpec::Gladiator { strengths, .. } => {
            let sb = strengths.of_label(behind);
            let sa = strengths.of_label(ahead);
            sb / (sb + sa)
        }
        ChainSpec::LeagueHierarchy { tree } => {
            let (sb, sa) = tree.contest_strengths(behind, ahead);
            &sb / (&sb + &sa)
        }
        _ => unreachable!("not an adjacent permutation chain"),
    }
}

fn row_adjacent_perm(spec: &ChainSpec, p: &Permutation, row: &mut BTreeMap<State, Rat>) {
    let n = p.n();
    if n == 1 {
        add(row, State::Perm(p.clone()), Rat::one());
        return;
    }
    let pairw = rat(1, (n - 1) as i64);
    let mut hold = Rat::zero();
    for i in 1..n {
        let swap_p = adjacent_swap_prob(spec, p.label_at(i), p.label_at(i + 1));
        hold += &pairw * (Rat::one() - &swap_p);
        add(row, State::Perm(p.swap_adjacent(i)), &pairw * swap_p);
    }
    add(row, State::Perm(p.clone()), hold);
}

fn row_particle(strengths: &StrengthTable, w: &Arrangement, row: &mut BTreeMap<State, Rat>) {
    let n = w.n();
    if n == 1 {
        add(row, State::Word(w.clone()), Rat::one());
        return;
    }
    let pairw = rat(1, (n - 1) as i64);
    let mut hold = Rat::zero();
    for i in 1..n {
        let (t, t2) = (w.type_at(i), w.type_at(i + 1));
        if t == t2 {
            hold += pairw.clone();
            continue;
        }
        let sb = strengths.of_type(t);
        let sa = strengths.of_type(t2);
        let swap_p = sb / (sb + sa);
        hold += &pairw * (Rat::one() - &swap_p);
        add(row, State::Word(w.swap_positions(i, i + 1)), &pairw * swap_p);
    }
    add(row, State::Word(w.clone()), hold);
}

const TYPE_A: u8 = 0;
const TYPE_B: u8 = 1;
const TYPE_C: u8 = 2;

/// The Jump/Hop pattern a position pair matches, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMove {
    /// Endpoints are A and C (either order) across an all-B interior.
    Jump,
    /// One endpoint of type `mover`, the rest of the window all B.
    Hop { mover: u8 },
}

/// Classify the move available to the (1-based) pair `i < j` in `w`.
pub fn classify_pair(w: &Arrangement, i: usize, j: usize) -> Option<PairMove> {
    let (ti, tj) = (w.type_at(i), w.type_at(j));
    match (ti, tj) {
        (TYPE_A, TYPE_C) | (TYPE_C, TYPE_A) => {
            w.all_of_type(i + 1, j - 1, TYPE_B).then_some(PairMove::Jump)
        }
        (TYPE_B, m @ (TYPE_A | TYPE_C)) => {
            w.all_of_type(i, j - 1, TYPE_B).then_some(PairMove::Hop { mover: m })
        }
        (m @ (TYPE_A | TYPE_C), TYPE_B) => {
            w.all_of_type(i + 1, j, TYPE_B).then_some(PairMove::Hop { mover: m })
        }
        _ => None,
    }
}

/// Probability that the pair ends in the strength-increasing configuration.
fn increasing_prob(strengths: &StrengthTable, mv: PairMove, gap: u32) -> Rat {
    match mv {
        PairMove::Jump => jump_probability(strengths.of_type(TYPE_A), strengths.of_type(TYPE_C), gap).0,
        PairMove::Hop { mover: TYPE_A } => {
            hop_probability(strengths.of_type(TYPE_A), strengths.of_type(TYPE_B), gap).0
        }
        PairMove::Hop { .. } => {
            hop_probability(strengths.of_type(TYPE_B), strengths.of_type(TYPE_C), gap).0
        }
    }
}

/// True when `w` restricted to the pair is already the strength-increasing
/// configuration (weaker endpoint at the lower position).
fn pair_is_increasing(w: &Arrangement, mv: PairMove, i: usize, j: usize) -> bool {
    match mv {
        PairMove::Jump => w.type_at(i) == TYPE_A,
        PairMove::Hop { mover: TYPE_A } => w.type_at(i) == TYPE_A,
        PairMove::Hop { .. } => w.type_at(j) == TYPE_C,
    }
}

fn row_jumphop(strengths: &StrengthTable, w: &Arrangement, row: &mut BTreeMap<State, Rat>) {
    let n = w.n();
    if n == 1 {
        add(row, State::Word(w.clone()), Rat::one());
        return;
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let pairw = rat(1, pairs);
    let mut hold = Rat::zero();
    for i in 1..n {
        for j in i + 1..=n {
            let Some(mv) = classify_pair(w, i, j) else {
                hold += pairw.clone();
                continue;
            };
            let p_inc = increasing_prob(strengths, mv, (j - i) as u32);
            let p_swap = if pair_is_increasing(w, mv, i, j) {
                Rat::one() - &p_inc
            } else {
                p_inc
            };
            hold += &pairw * (Rat::one() - &p_swap);
            add(row, State::Word(w.swap_positions(i, j)), &pairw * p_swap);
        }
    }
    add(row, State::Word(w.clone()), hold);
}

fn row_mtree(tree: &TernaryTreeSpec, p: &Permutation, row: &mut BTreeMap<State, Rat>) {
    let n = p.n();
    if n == 1 {
        add(row, State::Perm(p.clone()), Rat::one());
        return;
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let pairw = rat(1, pairs);
    let mut hold = Rat::zero();
    for i in 1..n {
        for j in i + 1..=n {
            let (x, y) = (p.label_at(i), p.label_at(j));
            let v = tree.lca(x, y);
            let (lo, hi) = tree.subtree_range(v);
            let blocked = (i + 1..j).any(|k| {
                let z = p.label_at(k);
                lo <= z && z <= hi
            });
            if blocked {
                hold += pairw.clone();
                continue;
            }
            // The occupant of the lower position wins the higher one with
            // probability proportional to its lca-child strength.
            let sx = tree.nodes[v].children[tree.child_slot_containing(v, x)].0.clone();
            let sy = tree.nodes[v].children[tree.child_slot_containing(v, y)].0.clone();
            let p_swap = &sx / (&sx + &sy);
            hold += &pairw * (Rat::one() - &p_swap);
            add(row, State::Perm(p.swap_positions(i, j)), &pairw * p_swap);
        }
    }
    add(row, State::Perm(p.clone()), hold);
}

fn row_ma1(strengths: &StrengthTable, p: &Permutation, row: &mut BTreeMap<State, Rat>) {
    let n = p.n();
    let total: Rat = strengths.as_slice().iter().sum();
    let mut hold = Rat::zero();
    for g in 1..=n as u8 {
        let prob = strengths.of_label(g) / &total;
        let pos = p.position_of(g);
        if pos == n {
            hold += prob;
        } else {
            add(row, State::Perm(p.swap_adjacent(pos)), prob);
        }
    }
    add(row, State::Perm(p.clone()), hold);
}

/// One random transition sampled from [`transition_row`]. Identical seeds
/// give identical trajectories.
pub fn step<R: Rng>(spec: &ChainSpec, state: &State, rng: &mut R) -> Result<State> {
    let row = transition_row(spec, state)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (succ, p) in &row {
        acc += num::ToPrimitive::to_f64(p).expect("probability fits f64");
        if u < acc {
            return Ok(succ.clone());
        }
    }
    // Float round-down at the tail lands on the last entry.
    Ok(row.last().expect("row is never empty").0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn perm(items: &[u8]) -> State {
        State::Perm(Permutation::new(items.to_vec()).unwrap())
    }

    fn word(s: &str, k: usize) -> State {
        State::Word(Arrangement::from_letters(s, k).unwrap())
    }

    fn row_map(spec: &ChainSpec, st: &State) -> BTreeMap<String, Rat> {
        transition_row(spec, st)
            .unwrap()
            .into_iter()
            .map(|(s, p)| (s.to_string(), p))
            .collect()
    }

    #[test]
    fn gladiator_two_states() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::singletons(2),
            strengths: StrengthTable::from_ints(&[1, 2]).unwrap(),
        };
        let row = row_map(&spec, &perm(&[1, 2]));
        assert_eq!(row["21"], rat(1, 3));
        assert_eq!(row["12"], rat(2, 3));
    }

    #[test]
    fn simple_three_from_identity() {
        let spec = ChainSpec::Simple { n: 3 };
        let row = row_map(&spec, &perm(&[1, 2, 3]));
        assert_eq!(row["213"], rat(1, 4));
        assert_eq!(row["132"], rat(1, 4));
        assert_eq!(row["123"], rat(1, 2));
    }

    #[test]
    fn jumphop_length_two() {
        let spec = ChainSpec::JumpHop {
            counts: [1, 0, 1],
            strengths: StrengthTable::from_ints(&[1, 2, 4]).unwrap(),
        };
        let row = row_map(&spec, &word("CA", 3));
        assert_eq!(row["AC"], rat(4, 5));
        assert_eq!(row["CA"], rat(1, 5));
    }

    #[test]
    fn jump_probability_values() {
        let (inc, dec) = jump_probability(&rat(1, 1), &rat(4, 1), 2);
        assert_eq!(inc, rat(16, 17));
        assert_eq!(dec, rat(1, 17));
        let (inc, dec) = jump_probability(&rat(3, 1), &rat(3, 1), 7);
        assert_eq!(inc, rat(1, 2));
        assert_eq!(dec, rat(1, 2));
        let (inc, _) = jump_probability(&rat(1, 1), &rat(4, 1), 1);
        assert_eq!(inc, rat(4, 5));
    }

    #[test]
    fn hop_probability_values() {
        let (inc, dec) = hop_probability(&rat(1, 1), &rat(2, 1), 3);
        assert_eq!(inc, rat(8, 9));
        assert_eq!(dec, rat(1, 9));
        let (inc, _) = hop_probability(&rat(5, 1), &rat(5, 1), 2);
        assert_eq!(inc, rat(1, 2));
        // gap 1 reduces to the adjacent-swap probability s_strong/(s_weak+s_strong)
        let (inc, _) = hop_probability(&rat(1, 1), &rat(2, 1), 1);
        assert_eq!(inc, rat(2, 3));
    }

    #[test]
    fn rows_sum_to_one_across_variants() {
        let tree = TernaryTreeSpec::new(&TreeSpec::Node(vec![
            (rat(1, 1), TreeSpec::Node(vec![(rat(1, 1), TreeSpec::Leaf), (rat(3, 1), TreeSpec::Leaf)])),
            (rat(3, 1), TreeSpec::Leaf),
            (rat(7, 1), TreeSpec::Leaf),
        ]))
        .unwrap();
        let specs: Vec<ChainSpec> = vec![
            ChainSpec::Simple { n: 4 },
            ChainSpec::ConstantBias { n: 4, p: rat(3, 4) },
            ChainSpec::Gladiator {
                teams: TeamPartition::new(&[vec![1, 2], vec![3, 4]]).unwrap(),
                strengths: StrengthTable::from_ints(&[1, 1, 5, 5]).unwrap(),
            },
            ChainSpec::ParticleSystem {
                counts: vec![2, 1, 1],
                strengths: StrengthTable::from_ints(&[1, 2, 5]).unwrap(),
            },
            ChainSpec::JumpHop {
                counts: [1, 2, 1],
                strengths: StrengthTable::from_ints(&[1, 3, 7]).unwrap(),
            },
            ChainSpec::LeagueHierarchy { tree: tree.clone() },
            ChainSpec::MTree { tree },
            ChainSpec::Ma1 {
                strengths: StrengthTable::from_ints(&[2, 3, 5, 7]).unwrap(),
            },
        ];
        for spec in specs {
            for st in spec.state_space().enumerate().unwrap() {
                let row = transition_row(&spec, &st).unwrap();
                let total: Rat = row.iter().map(|(_, p)| p.clone()).sum();
                assert!(total.is_one(), "row sum != 1 for {spec:?} at {st}");
            }
        }
    }

    #[test]
    fn jumphop_support_is_jump_or_hop_shaped() {
        let spec = ChainSpec::JumpHop {
            counts: [2, 2, 1],
            strengths: StrengthTable::from_ints(&[1, 3, 7]).unwrap(),
        };
        for st in spec.state_space().enumerate().unwrap() {
            let w = st.as_word().unwrap();
            for (succ, _) in transition_row(&spec, &st).unwrap() {
                let sw = succ.as_word().unwrap();
                if sw == w {
                    continue;
                }
                let diff: Vec<usize> = (1..=w.n()).filter(|&p| w.type_at(p) != sw.type_at(p)).collect();
                assert_eq!(diff.len(), 2, "move must touch exactly two positions");
                let (i, j) = (diff[0], diff[1]);
                assert!(classify_pair(w, i, j).is_some(), "illegal move {w} -> {sw}");
            }
        }
    }

    #[test]
    fn jump_requires_all_b_interior() {
        // CAA..: pair (1, 3) has a non-B interior, so no jump is offered.
        let spec = ChainSpec::JumpHop {
            counts: [2, 0, 1],
            strengths: StrengthTable::from_ints(&[1, 3, 7]).unwrap(),
        };
        let st = word("CAA", 3);
        let row = row_map(&spec, &st);
        assert!(!row.contains_key("AAC"), "jump over a non-B interior must be rejected");
        assert!(row.contains_key("ACA"));
    }

    #[test]
    fn foreign_states_rejected() {
        let spec = ChainSpec::Simple { n: 3 };
        assert!(transition_row(&spec, &perm(&[1, 2, 3, 4])).is_err());
        assert!(transition_row(&spec, &word("AB", 2)).is_err());
    }

    #[test]
    fn step_is_deterministic_per_seed() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::singletons(3),
            strengths: StrengthTable::from_ints(&[1, 2, 4]).unwrap(),
        };
        let start = perm(&[3, 2, 1]);
        let run = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut st = start.clone();
            let mut traj = Vec::new();
            for _ in 0..100 {
                st = step(&spec, &st, &mut rng).unwrap();
                traj.push(st.to_string());
            }
            traj
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn simple_two_hold_fraction() {
        let spec = ChainSpec::Simple { n: 2 };
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut st = perm(&[1, 2]);
        let steps = 100_000u32;
        let mut holds = 0u32;
        for _ in 0..steps {
            let next = step(&spec, &st, &mut rng).unwrap();
            if next == st {
                holds += 1;
            }
            st = next;
        }
        let frac = holds as f64 / steps as f64;
        let sigma = (0.25f64 / steps as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * sigma, "hold fraction {frac}");
    }

    #[test]
    fn gladiator_two_occupancy_matches_pi() {
        let spec = ChainSpec::Gladiator {
            teams: TeamPartition::singletons(2),
            strengths: StrengthTable::from_ints(&[1, 2]).unwrap(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut st = perm(&[2, 1]);
        let steps = 1_000_000u32;
        let mut in_identity = 0u32;
        for _ in 0..steps {
            st = step(&spec, &st, &mut rng).unwrap();
            if st == perm(&[1, 2]) {
                in_identity += 1;
            }
        }
        // Rows are identical here, so the chain is iid after one step.
        let frac = in_identity as f64 / steps as f64;
        let p = 2.0 / 3.0;
        let sigma = (p * (1.0 - p) / steps as f64).sqrt();
        assert!((frac - p).abs() < 3.0 * sigma, "occupancy {frac}");
    }

    #[test]
    fn tree_lca_and_classification() {
        // Balanced ternary, 9 leaves: root children span 1-3, 4-6, 7-9.
        let sub = |a, b, c| {
            TreeSpec::Node(vec![
                (rat(a, 1), TreeSpec::Leaf),
                (rat(b, 1), TreeSpec::Leaf),
                (rat(c, 1), TreeSpec::Leaf),
            ])
        };
        let tree = TernaryTreeSpec::new(&TreeSpec::Node(vec![
            (rat(1, 1), sub(1, 3, 7)),
            (rat(3, 1), sub(1, 3, 7)),
            (rat(7, 1), sub(1, 3, 7)),
        ]))
        .unwrap();
        assert_eq!(tree.n(), 9);
        let v = tree.lca(5, 6);
        assert_eq!(tree.subtree_range(v), (4, 6));
        assert_eq!(tree.lca(1, 9), 0);
        // Labels outside the meet subtree classify at an ancestor.
        let (node8, _) = tree.classify(8, v);
        let (node9, slot9) = tree.classify(9, v);
        assert_eq!(node8, 0);
        assert_eq!(node9, 0);
        let (node8b, slot8) = tree.classify(8, v);
        assert_eq!((node8b, slot8), (node9, slot9), "8 and 9 share the root R child");
        let (_, slot5) = tree.classify(5, v);
        assert_eq!(slot5, 1, "5 is the center child of its meet node");
        let (inner, _) = tree.classify(4, v);
        assert_eq!(inner, v, "4 lies inside the meet subtree");
    }

    #[test]
    fn binary_trees_accepted_as_absent_center() {
        let tree = TernaryTreeSpec::new(&TreeSpec::Node(vec![
            (rat(1, 1), TreeSpec::Leaf),
            (rat(3, 1), TreeSpec::Leaf),
        ]))
        .unwrap();
        assert_eq!(tree.n(), 2);
        let spec = ChainSpec::LeagueHierarchy { tree };
        let row = row_map(&spec, &perm(&[1, 2]));
        assert_eq!(row["21"], rat(1, 4));
    }

    #[test]
    fn constant_bias_parameter_range() {
        assert!(ChainSpec::ConstantBias { n: 3, p: rat(1, 3) }.validate().is_err());
        assert!(ChainSpec::ConstantBias { n: 3, p: rat(1, 1) }.validate().is_err());
        assert!(ChainSpec::ConstantBias { n: 3, p: rat(1, 2) }.validate().is_ok());
    }

    #[test]
    fn mtree_blocks_moves_through_own_subtree() {
        let tree = TernaryTreeSpec::new(&TreeSpec::Node(vec![
            (rat(1, 1), TreeSpec::Node(vec![(rat(1, 1), TreeSpec::Leaf), (rat(3, 1), TreeSpec::Leaf)])),
            (rat(4, 1), TreeSpec::Node(vec![(rat(1, 1), TreeSpec::Leaf), (rat(3, 1), TreeSpec::Leaf)])),
        ]))
        .unwrap();
        let spec = ChainSpec::MTree { tree };
        // Swapping 1 and 2 across interior 3 (in their own subtree? no: lca(1,2)
        // spans 1..2 only) is allowed; swapping 1 and 2 across an interior 2..
        // Here: state 1,3,2,4 — pair (1,3) holds labels 1,2 with interior 3.
        // lca(1,2) spans 1..=2 and 3 is outside it, so the move is offered.
        let row = row_map(&spec, &perm(&[1, 3, 2, 4]));
        assert!(row.contains_key("2314"));
        // state 1,2,3,4: pair (2,4) holds labels 2,4 with interior 3;
        // lca(2,4) is the root spanning 1..=4, 3 lies inside: blocked.
        let row = row_map(&spec, &perm(&[1, 2, 3, 4]));
        assert!(!row.contains_key("1432"));
    }

    #[test]
    fn ratio_condition_checks() {
        let s = StrengthTable::from_ints(&[1, 3, 7]).unwrap();
        assert!(s.is_ascending());
        assert!(s.ratio_condition(&rat(1, 2)));
        let s = StrengthTable::from_ints(&[2, 3, 7]).unwrap();
        assert!(!s.ratio_condition(&rat(1, 2)));
    }
}
