//! State-space objects: permutations, multiset arrangements, lexicographic
//! enumeration and ranking, inversion counts, and the lattice-path view of
//! typed particle words.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{domain, Error, Result};

/// Default cap on `n` for permutation enumeration.
pub const PERM_ENUM_CAP: usize = 10;
/// Default cap on total symbols for arrangement enumeration.
pub const ARR_ENUM_CAP: usize = 16;

/// A permutation of labels `1..=n`. Position 1 is the head of the list;
/// `items[p-1]` is the label at position `p`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    items: Vec<u8>,
}

impl Permutation {
    pub fn new(items: Vec<u8>) -> Result<Self> {
        let n = items.len();
        if n == 0 || n > 64 {
            return Err(domain(format!("permutation length {n} out of range 1..=64")));
        }
        let mut seen = vec![false; n + 1];
        for &x in &items {
            if x == 0 || x as usize > n || seen[x as usize] {
                return Err(domain(format!("items are not a bijection on 1..={n}")));
            }
            seen[x as usize] = true;
        }
        Ok(Permutation { items })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            items: (1..=n as u8).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[u8] {
        &self.items
    }

    /// Label at 1-based position `pos`.
    pub fn label_at(&self, pos: usize) -> u8 {
        self.items[pos - 1]
    }

    /// 1-based position of `label`.
    pub fn position_of(&self, label: u8) -> usize {
        self.items.iter().position(|&x| x == label).expect("label present") + 1
    }

    /// Swap the labels at 1-based positions `pos` and `pos + 1`.
    pub fn swap_adjacent(&self, pos: usize) -> Self {
        let mut items = self.items.clone();
        items.swap(pos - 1, pos);
        Permutation { items }
    }

    /// Swap the labels at arbitrary 1-based positions.
    pub fn swap_positions(&self, i: usize, j: usize) -> Self {
        let mut items = self.items.clone();
        items.swap(i - 1, j - 1);
        Permutation { items }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u8; self.items.len()];
        for (pos0, &label) in self.items.iter().enumerate() {
            inv[label as usize - 1] = pos0 as u8 + 1;
        }
        Permutation { items: inv }
    }

    pub fn compose(&self, other: &Permutation) -> Self {
        // (self ∘ other)(p) = self(other(p)), acting on positions.
        let items = (1..=other.n())
            .map(|p| self.label_at(other.label_at(p) as usize))
            .collect();
        Permutation { items }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n() <= 9 {
            for &x in &self.items {
                write!(f, "{x}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.items.iter().map(|x| x.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A word over typed particles. `word[i]` is the 0-based type index of the
/// particle at 1-based position `i + 1`; `counts[t]` is the multiplicity of
/// type `t`. Types display as letters `A`, `B`, `C`, ...
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arrangement {
    word: Vec<u8>,
    counts: Vec<usize>,
}

impl Arrangement {
    pub fn new(word: Vec<u8>, counts: Vec<usize>) -> Result<Self> {
        if counts.len() > 26 {
            return Err(domain("more than 26 particle types".to_string()));
        }
        let mut seen = vec![0usize; counts.len()];
        for &t in &word {
            if t as usize >= counts.len() {
                return Err(domain(format!("type index {t} out of range")));
            }
            seen[t as usize] += 1;
        }
        if seen != counts {
            return Err(domain("word multiset does not match counts".to_string()));
        }
        Ok(Arrangement { word, counts })
    }

    /// The lexicographically least word: all type-0 particles first.
    pub fn sorted(counts: Vec<usize>) -> Self {
        let mut word = Vec::with_capacity(counts.iter().sum());
        for (t, &c) in counts.iter().enumerate() {
            word.extend(std::iter::repeat(t as u8).take(c));
        }
        Arrangement { word, counts }
    }

    pub fn from_letters(s: &str, n_types: usize) -> Result<Self> {
        let mut counts = vec![0usize; n_types];
        let mut word = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let t = (ch as i32) - ('A' as i32);
            if t < 0 || t as usize >= n_types {
                return Err(domain(format!("letter {ch} outside the first {n_types} types")));
            }
            counts[t as usize] += 1;
            word.push(t as u8);
        }
        Ok(Arrangement { word, counts })
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Type at 1-based position `pos`.
    pub fn type_at(&self, pos: usize) -> u8 {
        self.word[pos - 1]
    }

    pub fn swap_positions(&self, i: usize, j: usize) -> Self {
        let mut word = self.word.clone();
        word.swap(i - 1, j - 1);
        Arrangement {
            word,
            counts: self.counts.clone(),
        }
    }

    /// True when positions `lo..=hi` (1-based, inclusive) all hold type `t`.
    pub fn all_of_type(&self, lo: usize, hi: usize, t: u8) -> bool {
        if lo > hi {
            return true;
        }
        self.word[lo - 1..hi].iter().all(|&x| x == t)
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &t in &self.word {
            write!(f, "{}", (b'A' + t) as char)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A state of any chain in this crate: a permutation or a typed word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Perm(Permutation),
    Word(Arrangement),
}

impl State {
    pub fn as_perm(&self) -> Result<&Permutation> {
        match self {
            State::Perm(p) => Ok(p),
            State::Word(_) => Err(domain("expected a permutation state".to_string())),
        }
    }

    pub fn as_word(&self) -> Result<&Arrangement> {
        match self {
            State::Word(w) => Ok(w),
            State::Perm(_) => Err(domain("expected an arrangement state".to_string())),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Perm(p) => write!(f, "{p}"),
            State::Word(w) => write!(f, "{w}"),
        }
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Dense index into an enumerated state space, tagged with the space it
/// belongs to so foreign indices are rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateIndex {
    pub idx: usize,
    pub space_id: u64,
}

/// An enumerable state space with a fixed lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateSpace {
    Permutations { n: usize },
    Arrangements { counts: Vec<usize> },
}

impl StateSpace {
    /// Stable identifier derived from the space's shape.
    pub fn id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        match self {
            StateSpace::Permutations { n } => {
                0u8.hash(&mut h);
                n.hash(&mut h);
            }
            StateSpace::Arrangements { counts } => {
                1u8.hash(&mut h);
                counts.hash(&mut h);
            }
        }
        h.finish()
    }

    pub fn total_length(&self) -> usize {
        match self {
            StateSpace::Permutations { n } => *n,
            StateSpace::Arrangements { counts } => counts.iter().sum(),
        }
    }

    /// Number of states: `n!` or the multinomial coefficient.
    pub fn size(&self) -> u64 {
        match self {
            StateSpace::Permutations { n } => factorial(*n),
            StateSpace::Arrangements { counts } => multinomial(counts),
        }
    }

    fn check_enum_cap(&self) -> Result<()> {
        match self {
            StateSpace::Permutations { n } => {
                if *n > PERM_ENUM_CAP {
                    return Err(Error::SizeLimit {
                        what: "permutation enumeration (n)",
                        requested: *n,
                        cap: PERM_ENUM_CAP,
                    });
                }
            }
            StateSpace::Arrangements { counts } => {
                let n: usize = counts.iter().sum();
                if n > ARR_ENUM_CAP {
                    return Err(Error::SizeLimit {
                        what: "arrangement enumeration (total symbols)",
                        requested: n,
                        cap: ARR_ENUM_CAP,
                    });
                }
            }
        }
        Ok(())
    }

    /// Every state exactly once, in lexicographic order.
    pub fn enumerate(&self) -> Result<Vec<State>> {
        self.check_enum_cap()?;
        let size = self.size() as usize;
        let mut out = Vec::with_capacity(size);
        for idx in 0..size {
            out.push(self.unrank(idx)?);
        }
        Ok(out)
    }

    /// Lexicographic position of `state` within this space.
    pub fn rank(&self, state: &State) -> Result<StateIndex> {
        let idx = match (self, state) {
            (StateSpace::Permutations { n }, State::Perm(p)) => {
                if p.n() != *n {
                    return Err(domain(format!("permutation of size {} in S_{n}", p.n())));
                }
                rank_permutation(p)
            }
            (StateSpace::Arrangements { counts }, State::Word(w)) => {
                if w.counts() != &counts[..] {
                    return Err(domain("arrangement counts do not match this space".to_string()));
                }
                rank_arrangement(w)
            }
            _ => return Err(domain("state kind does not match this space".to_string())),
        };
        Ok(StateIndex {
            idx: idx as usize,
            space_id: self.id(),
        })
    }

    /// Inverse of [`StateSpace::rank`].
    pub fn unrank(&self, idx: usize) -> Result<State> {
        if (idx as u64) >= self.size() {
            return Err(domain(format!("index {idx} out of range for space of size {}", self.size())));
        }
        Ok(match self {
            StateSpace::Permutations { n } => State::Perm(unrank_permutation(*n, idx as u64)),
            StateSpace::Arrangements { counts } => State::Word(unrank_arrangement(counts, idx as u64)),
        })
    }

    /// Validate that `si` belongs to this space.
    pub fn check_index(&self, si: StateIndex) -> Result<usize> {
        if si.space_id != self.id() {
            return Err(Error::SpaceMismatch);
        }
        if (si.idx as u64) >= self.size() {
            return Err(domain(format!("index {} out of range", si.idx)));
        }
        Ok(si.idx)
    }
}

pub fn factorial(n: usize) -> u64 {
    assert!(n <= 20, "factorial overflows u64 beyond 20!");
    (1..=n as u64).product()
}

/// Multinomial coefficient `n! / (c_1! ... c_k!)`.
pub fn multinomial(counts: &[usize]) -> u64 {
    let mut acc: u128 = 1;
    let mut seen = 0usize;
    for &c in counts {
        for i in 1..=c {
            seen += 1;
            acc = acc * seen as u128 / i as u128;
        }
    }
    assert!(acc <= u64::MAX as u128);
    acc as u64
}

fn rank_permutation(p: &Permutation) -> u64 {
    // Lehmer code: count smaller labels to the right of each position.
    let items = p.items();
    let n = items.len();
    let mut rank = 0u64;
    for i in 0..n {
        let smaller = items[i + 1..].iter().filter(|&&x| x < items[i]).count() as u64;
        rank += smaller * factorial(n - 1 - i);
    }
    rank
}

fn unrank_permutation(n: usize, mut idx: u64) -> Permutation {
    let mut pool: Vec<u8> = (1..=n as u8).collect();
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let f = factorial(n - 1 - i);
        let pos = (idx / f) as usize;
        idx %= f;
        items.push(pool.remove(pos));
    }
    Permutation { items }
}

fn rank_arrangement(w: &Arrangement) -> u64 {
    let mut remaining: Vec<usize> = w.counts().to_vec();
    let mut rank = 0u64;
    for &t in w.word() {
        for smaller in 0..t {
            let s = smaller as usize;
            if remaining[s] > 0 {
                remaining[s] -= 1;
                rank += multinomial(&remaining);
                remaining[s] += 1;
            }
        }
        remaining[t as usize] -= 1;
    }
    rank
}

fn unrank_arrangement(counts: &[usize], mut idx: u64) -> Arrangement {
    let n: usize = counts.iter().sum();
    let mut remaining: Vec<usize> = counts.to_vec();
    let mut word = Vec::with_capacity(n);
    for _ in 0..n {
        for t in 0..remaining.len() {
            if remaining[t] == 0 {
                continue;
            }
            remaining[t] -= 1;
            let below = multinomial(&remaining);
            if idx < below {
                word.push(t as u8);
                break;
            }
            idx -= below;
            remaining[t] += 1;
        }
    }
    Arrangement {
        word,
        counts: counts.to_vec(),
    }
}

/// Number of pairs `i < j` with `p(i) > p(j)`.
pub fn inversions(p: &Permutation) -> usize {
    let items = p.items();
    let mut count = 0;
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if items[i] > items[j] {
                count += 1;
            }
        }
    }
    count
}

/// One unit step along the axis matching a particle type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisStep(pub u8);

/// Map an arrangement over at most 3 types to a lattice path: the symbol of
/// type `t` at word position `i` becomes a unit step along axis `t`.
pub fn to_lattice_path(arr: &Arrangement) -> Result<Vec<AxisStep>> {
    if arr.counts().len() > 3 {
        return Err(domain(format!(
            "lattice paths support at most 3 axes, got {} types",
            arr.counts().len()
        )));
    }
    Ok(arr.word().iter().map(|&t| AxisStep(t)).collect())
}
