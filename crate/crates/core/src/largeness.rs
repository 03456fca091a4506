//! Largeness notions on finite sets, groupings, and the extractions that turn
//! groupings into homogeneous sets.
//!
//! `ω^n`-largeness is read literally: a set whose minimum is 0 needs zero
//! blocks, so it is `ω^n`-large for every `n >= 1`.

use serde::Serialize;

use crate::constructions::{transitivity_violation, LinearOrderView};
use crate::error::{Error, Result};
use crate::pattern_core::{
    find_realization, find_realization_ending_at, is_homogeneous, realizes, Coloring,
    FiniteColoring, Pattern, SearchOutcome, StableColoring, VertexSet, DEFAULT_BUDGET,
};
use crate::perm_algebra::{drop_last, is_convergent, split_reducible, Permutation};

/// Node budget of the exhaustive fallback behind the greedy decomposition.
pub const FALLBACK_BUDGET: u64 = 200_000;

/// Decomposition tree: `parts` are the blocks of `set` minus its minimum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LargeWitness {
    pub set: Vec<usize>,
    pub parts: Vec<LargeWitness>,
    /// Found by the exhaustive fallback after the greedy pass failed.
    pub via_fallback: bool,
}

impl LargeWitness {
    fn leaf(set: &[usize]) -> Self {
        LargeWitness {
            set: set.to_vec(),
            parts: Vec::new(),
            via_fallback: false,
        }
    }

    /// Re-checks the tree against the definition.
    pub fn verify(&self, n: usize) -> bool {
        let Some(&min) = self.set.first() else {
            return false;
        };
        if self.set.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        if n == 0 {
            return true;
        }
        if self.parts.len() != min {
            return false;
        }
        let mut floor = min;
        for part in &self.parts {
            let ok = part.verify(n - 1)
                && part.set.iter().all(|x| self.set.binary_search(x).is_ok())
                && part.set[0] > floor;
            if !ok {
                return false;
            }
            floor = *part.set.last().expect("nonempty");
        }
        true
    }
}

fn greedy(set: &[usize], n: usize) -> Option<LargeWitness> {
    let &min = set.first()?;
    if n == 0 {
        return Some(LargeWitness::leaf(set));
    }
    let rest = &set[1..];
    if rest.len() < min {
        return None;
    }
    let mut parts = Vec::with_capacity(min);
    let mut pos = 0;
    while parts.len() < min {
        let (len, part) = shortest_prefix(&rest[pos..], n - 1)?;
        parts.push(part);
        pos += len;
    }
    Some(LargeWitness {
        set: set.to_vec(),
        parts,
        via_fallback: false,
    })
}

fn shortest_prefix(items: &[usize], n: usize) -> Option<(usize, LargeWitness)> {
    if n == 1 {
        // Card exceeds the minimum.
        let &first = items.first()?;
        let len = first.checked_add(1)?;
        return (len <= items.len()).then(|| (len, greedy(&items[..len], 1).expect("card test")));
    }
    (1..=items.len()).find_map(|len| greedy(&items[..len], n).map(|w| (len, w)))
}

struct Fallback {
    nodes: u64,
    budget: u64,
}

impl Fallback {
    fn large(&mut self, set: &[usize], n: usize) -> Result<Option<LargeWitness>> {
        let Some(&min) = set.first() else {
            return Ok(None);
        };
        if n == 0 {
            return Ok(Some(LargeWitness::leaf(set)));
        }
        let mut parts = Vec::new();
        if self.blocks(&set[1..], min, n - 1, &mut parts)? {
            Ok(Some(LargeWitness {
                set: set.to_vec(),
                parts,
                via_fallback: true,
            }))
        } else {
            Ok(None)
        }
    }

    /// `count` successive large blocks inside `items`, each a contiguous run.
    fn blocks(&mut self, items: &[usize], count: usize, n: usize, out: &mut Vec<LargeWitness>) -> Result<bool> {
        if count == 0 {
            return Ok(true);
        }
        if items.len() < count {
            return Ok(false);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Resource(format!("largeness search stopped after {} nodes", self.budget)));
        }
        for len in 1..=items.len() - (count - 1) {
            if let Some(w) = self.large(&items[..len], n)? {
                out.push(w);
                if self.blocks(&items[len..], count - 1, n, out)? {
                    return Ok(true);
                }
                out.pop();
            }
        }
        Ok(false)
    }
}

/// Decomposition of a sorted set, greedy leftmost first, exhaustive over
/// contiguous blocks if that fails. A fallback that runs out of budget
/// leaves the greedy verdict standing.
pub fn omega_n_decompose(set: &[usize], n: usize) -> Option<LargeWitness> {
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return None;
    }
    if let Some(w) = greedy(set, n) {
        return Some(w);
    }
    let mut fb = Fallback {
        nodes: 0,
        budget: FALLBACK_BUDGET,
    };
    fb.large(set, n).ok().flatten()
}

pub fn is_omega_n_large(set: &[usize], n: usize) -> bool {
    omega_n_decompose(set, n).is_some()
}

/// A superset-closed family of finite sets.
#[derive(Clone, Copy)]
pub enum Largeness<'a> {
    Omega(usize),
    /// Sets containing a realization of `pattern` in `coloring`.
    Realizing {
        pattern: &'a Pattern,
        coloring: &'a dyn Coloring,
    },
    Custom(&'a dyn Fn(&[usize]) -> bool),
}

impl std::fmt::Debug for Largeness<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Largeness::Omega(n) => write!(f, "Omega({n})"),
            Largeness::Realizing { pattern, .. } => write!(f, "Realizing({:?})", pattern.bits()),
            Largeness::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Largeness<'_> {
    /// `set` must be sorted.
    pub fn is_large(&self, set: &[usize]) -> Result<bool> {
        match self {
            Largeness::Omega(n) => Ok(is_omega_n_large(set, *n)),
            Largeness::Realizing { pattern, coloring } => {
                let host = VertexSet::new(set.to_vec())?;
                match find_realization(coloring, &host, pattern, DEFAULT_BUDGET)? {
                    SearchOutcome::Found(_) => Ok(true),
                    SearchOutcome::ProvenAbsent => Ok(false),
                    SearchOutcome::BudgetExhausted { nodes } => {
                        Err(Error::Resource(format!("largeness test stopped after {nodes} nodes")))
                    }
                }
            }
            Largeness::Custom(pred) => Ok(pred(set)),
        }
    }

    /// Least `len` with `items[..len]` large.
    fn shortest_prefix(&self, items: &[usize]) -> Result<Option<usize>> {
        match self {
            Largeness::Omega(n) => Ok(shortest_prefix(items, *n).map(|(len, _)| len)),
            Largeness::Realizing { pattern, coloring } => {
                if pattern.size() == 0 {
                    return Ok(Some(0));
                }
                for len in 1..=items.len() {
                    let out = find_realization_ending_at(
                        coloring,
                        &items[..len - 1],
                        items[len - 1],
                        pattern,
                        DEFAULT_BUDGET,
                    )?;
                    match out {
                        SearchOutcome::Found(_) => return Ok(Some(len)),
                        SearchOutcome::ProvenAbsent => {}
                        SearchOutcome::BudgetExhausted { nodes } => {
                            return Err(Error::Resource(format!("largeness test stopped after {nodes} nodes")))
                        }
                    }
                }
                Ok(None)
            }
            Largeness::Custom(pred) => Ok((0..=items.len()).find(|&len| pred(&items[..len]))),
        }
    }
}

/// Blocks `F_0 < F_1 < ...` with one color between any two blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Grouping {
    pub blocks: Vec<Vec<usize>>,
}

impl Grouping {
    /// First pair of blocks `(i, j)` whose cross pairs are not of one color.
    pub fn constancy_violation(&self, f: &impl Coloring) -> Option<(usize, usize)> {
        for (i, a) in self.blocks.iter().enumerate() {
            for (j, b) in self.blocks.iter().enumerate().skip(i + 1) {
                let c = f.color(a[0], b[0]);
                if a.iter().any(|&x| b.iter().any(|&y| f.color(x, y) != c)) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Blocks sorted, nonempty, in block order, large and cross-constant.
    pub fn verify(&self, f: &impl Coloring, notion: &Largeness<'_>) -> Result<()> {
        let mut floor: Option<usize> = None;
        for (i, b) in self.blocks.iter().enumerate() {
            if b.is_empty() || b.windows(2).any(|w| w[0] >= w[1]) || floor.is_some_and(|m| b[0] <= m) {
                return Err(Error::Contract(format!("block {i} is empty or out of order")));
            }
            if !notion.is_large(b)? {
                return Err(Error::Contract(format!("block {i} is not large")));
            }
            floor = b.last().copied();
        }
        match self.constancy_violation(f) {
            Some((i, j)) => Err(Error::Contract(format!("blocks {i} and {j} see two colors"))),
            None => Ok(()),
        }
    }

    pub fn minima(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b[0]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Obstruction {
    /// Elements left in the reservoir when the search stopped.
    pub reservoir: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupingSearch {
    pub grouping: Grouping,
    /// `colors[j]`: color from block `j` to every later block.
    pub colors: Vec<u8>,
    pub obstruction: Option<Obstruction>,
}

impl GroupingSearch {
    pub fn is_complete(&self) -> bool {
        self.obstruction.is_none()
    }
}

/// Greedy grouping search: take the shortest large prefix of the reservoir,
/// then keep only later elements seeing that block in one color, choosing
/// the larger color class.
pub fn find_grouping(
    f: &impl Coloring,
    notion: &Largeness<'_>,
    count: usize,
    horizon: usize,
) -> Result<GroupingSearch> {
    let mut reservoir: Vec<usize> = (0..horizon.min(f.horizon())).collect();
    let mut grouping = Grouping::default();
    let mut colors = Vec::new();
    let mut obstruction = None;
    while grouping.blocks.len() < count {
        let Some(len) = notion.shortest_prefix(&reservoir)? else {
            obstruction = Some(Obstruction {
                reservoir: reservoir.len(),
                reason: if grouping.blocks.is_empty() {
                    "no large set within the horizon".into()
                } else {
                    "reservoir exhausted".into()
                },
            });
            break;
        };
        let block: Vec<usize> = reservoir.drain(..len).collect();
        let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for &y in &reservoir {
            let c = f.color(block[0], y);
            if block.iter().all(|&x| f.color(x, y) == c) {
                classes[c as usize].push(y);
            }
        }
        let c = u8::from(classes[1].len() > classes[0].len());
        reservoir = std::mem::take(&mut classes[c as usize]);
        grouping.blocks.push(block);
        colors.push(c);
    }
    if let Some((i, j)) = grouping.constancy_violation(f) {
        return Err(Error::Contract(format!("blocks {i} and {j} see two colors")));
    }
    if !grouping.blocks.is_empty() {
        colors.truncate(grouping.blocks.len() - 1);
    }
    Ok(GroupingSearch {
        grouping,
        colors,
        obstruction,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LargeSequence {
    pub blocks: Vec<Vec<usize>>,
    pub complete: bool,
}

/// `k` large sets, each entirely below the next in `order`.
///
/// At each level the candidates are stripped of as many order-maximal
/// elements as still leaves a large set, which keeps the most room above
/// the block taken.
pub fn increasing_large_sequence(
    order: &impl LinearOrderView,
    notion: &Largeness<'_>,
    k: usize,
    horizon: usize,
) -> Result<LargeSequence> {
    let domain: Vec<usize> = (0..horizon.min(order.len())).collect();
    let mut candidates = domain.clone();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    while blocks.len() < k {
        let mut by_order = candidates.clone();
        by_order.sort_by(|&a, &b| {
            if order.precedes(a, b) {
                std::cmp::Ordering::Less
            } else if order.precedes(b, a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let trimmed = |drop: usize| -> Vec<usize> {
            let mut h = by_order[..by_order.len() - drop].to_vec();
            h.sort_unstable();
            h
        };
        if candidates.is_empty() || !notion.is_large(&trimmed(0))? {
            break;
        }
        // Largest removal count that still leaves a large set.
        let (mut lo, mut hi) = (0, by_order.len() - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if notion.is_large(&trimmed(mid))? {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let h = trimmed(lo);
        let len = notion
            .shortest_prefix(&h)?
            .ok_or_else(|| Error::contract("largeness is not closed under superset"))?;
        let block = h[..len].to_vec();
        let top = block
            .iter()
            .copied()
            .reduce(|a, b| if order.precedes(a, b) { b } else { a })
            .expect("nonempty");
        candidates = domain.iter().copied().filter(|&x| order.precedes(top, x)).collect();
        blocks.push(block);
    }
    for w in blocks.windows(2) {
        if !w[0].iter().all(|&a| w[1].iter().all(|&b| order.precedes(a, b))) {
            return Err(Error::contract("blocks are not increasing in the order"));
        }
    }
    Ok(LargeSequence {
        complete: blocks.len() == k,
        blocks,
    })
}

/// Block minima of a grouping for `p` minus its last vertex, homogeneous for
/// the color opposite to the one `p` ends with.
///
/// If two minima see the wrong color, the realization of `p` they expose is
/// returned as a [`Error::Witness`].
pub fn grouping_to_homogeneous(f: &impl Coloring, p: &Pattern, grouping: &Grouping) -> Result<VertexSet> {
    let c = is_convergent(p).ok_or_else(|| Error::Precondition("pattern does not end in a constant column".into()))?;
    let head = drop_last(p).ok_or_else(|| Error::Precondition("pattern is empty".into()))?;
    let mut heads = Vec::with_capacity(grouping.blocks.len());
    for (i, b) in grouping.blocks.iter().enumerate() {
        let host = VertexSet::new(b.clone())?;
        match find_realization(f, &host, &head, DEFAULT_BUDGET)? {
            SearchOutcome::Found(s) => heads.push(s),
            _ => return Err(Error::Contract(format!("block {i} does not realize the pattern head"))),
        }
    }
    if let Some((i, j)) = grouping.constancy_violation(f) {
        return Err(Error::Contract(format!("blocks {i} and {j} see two colors")));
    }
    let minima = grouping.minima();
    for i in 0..minima.len() {
        for j in i + 1..minima.len() {
            if f.color(minima[i], minima[j]) == c {
                let mut w = heads[i].as_slice().to_vec();
                w.push(minima[j]);
                let set = VertexSet::new(w)?;
                if !realizes(f, &set, p)? {
                    return Err(Error::contract("exposed set fails to realize the pattern"));
                }
                return Err(Error::Witness {
                    message: "the coloring realizes the avoided pattern".into(),
                    witness: set.into_vec(),
                });
            }
        }
    }
    let out = VertexSet::new(minima)?;
    if !is_homogeneous(f, out.as_slice(), 1 - c) {
        return Err(Error::contract("block minima are not homogeneous"));
    }
    Ok(out)
}

/// For `a < b < c < d` with `f(a,b) = i` and `f(a,c) = f(b,c) = 1-i`,
/// whether `f(a,d) = f(b,d)`; `None` when the hypothesis fails.
pub fn claim_one(f: &impl Coloring, i: u8, a: usize, b: usize, c: usize, d: usize) -> Option<bool> {
    let hyp = a < b && b < c && c < d && f.color(a, b) == i && f.color(a, c) == 1 - i && f.color(b, c) == 1 - i;
    hyp.then(|| f.color(a, d) == f.color(b, d))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum EmOutcome {
    /// Blocks homogeneous for `color`, separated by the witnesses.
    Grouping {
        color: u8,
        grouping: Grouping,
        witnesses: Vec<usize>,
        complete: bool,
    },
    /// Every large homogeneous set found has a minimum with limit `color`;
    /// a homogeneous set of such elements is returned instead.
    Homogeneous { color: u8, set: VertexSet },
}

/// Greedy chain from `start` over `pool`, homogeneous for `i`, stopped as
/// soon as it is `ω^n`-large.
fn large_chain(f: &impl Coloring, start: usize, pool: &[usize], i: u8, n: usize) -> Option<Vec<usize>> {
    let mut chain = vec![start];
    if is_omega_n_large(&chain, n) {
        return Some(chain);
    }
    for &z in pool.iter().filter(|&&z| z > start) {
        if chain.iter().all(|&h| f.color(h, z) == i) {
            chain.push(z);
            if is_omega_n_large(&chain, n) {
                return Some(chain);
            }
        }
    }
    None
}

/// `ω^n`-grouping for a transitive stable coloring avoiding 1302 and 2031.
///
/// Blocks `F_s` are homogeneous for a fixed color `i` with minima of limit
/// `1-i`; each is followed by a witness `x_s` with `f(min F_s, x_s) = 1-i`,
/// and the reservoir is cut down to elements seeing every previous minimum
/// in its limit color.
pub fn em_grouping_extract(f: &StableColoring, n: usize, count: usize, horizon: usize) -> Result<EmOutcome> {
    let size = horizon.min(f.horizon());
    let table = FiniteColoring::snapshot(f, size);
    if let Some((x, y, z)) = transitivity_violation(&table) {
        return Err(Error::Witness {
            message: "the coloring is not transitive".into(),
            witness: vec![x, y, z],
        });
    }
    let host = VertexSet::range(0, size);
    for perm in ["1302", "2031"] {
        let p: Permutation = perm.parse()?;
        match find_realization(&table, &host, &p.pattern(), DEFAULT_BUDGET)? {
            SearchOutcome::ProvenAbsent => {}
            SearchOutcome::Found(w) => {
                return Err(Error::Witness {
                    message: format!("the coloring realizes {perm}"),
                    witness: w.into_vec(),
                })
            }
            SearchOutcome::BudgetExhausted { nodes } => {
                return Err(Error::Resource(format!("avoidance check for {perm} stopped after {nodes} nodes")))
            }
        }
    }
    let all: Vec<usize> = (0..size).collect();
    let i = if all.iter().any(|&a| large_chain(&table, a, &all, 0, n).is_some()) {
        0
    } else if all.iter().any(|&a| large_chain(&table, a, &all, 1, n).is_some()) {
        1
    } else {
        return Err(Error::Resource("no large homogeneous set within the horizon".into()));
    };

    let mut reservoir = all;
    let mut grouping = Grouping::default();
    let mut witnesses = Vec::new();
    while grouping.blocks.len() < count {
        let found = reservoir
            .iter()
            .copied()
            .filter(|&a| f.limit(a) == 1 - i)
            .find_map(|a| {
                let block = large_chain(&table, a, &reservoir, i, n)?;
                let top = *block.last().expect("nonempty");
                let x = reservoir.iter().copied().find(|&z| z > top && table.color(a, z) == 1 - i);
                match x {
                    Some(x) => Some((block, Some(x))),
                    // The last block needs no witness.
                    None if grouping.blocks.len() + 1 == count => Some((block, None)),
                    None => None,
                }
            });
        let Some((block, witness)) = found else { break };
        let min = block[0];
        let limit = f.limit(min);
        grouping.blocks.push(block);
        let Some(x) = witness else { break };
        witnesses.push(x);
        reservoir.retain(|&z| z > x && table.color(min, z) == limit);
    }

    if grouping.blocks.is_empty() {
        // Every large homogeneous set starts at an element of limit `i`.
        let mut set: Vec<usize> = Vec::new();
        for x in 0..size {
            if f.limit(x) == i && set.iter().all(|&a| table.color(a, x) == i) {
                set.push(x);
            }
        }
        let set = VertexSet::new(set)?;
        if !is_homogeneous(&table, set.as_slice(), i) {
            return Err(Error::contract("redirected set is not homogeneous"));
        }
        return Ok(EmOutcome::Homogeneous { color: i, set });
    }
    grouping.verify(&table, &Largeness::Omega(n))?;
    if !grouping.blocks.iter().all(|b| is_homogeneous(&table, b, i)) {
        return Err(Error::contract("a block is not homogeneous"));
    }
    Ok(EmOutcome::Grouping {
        color: i,
        complete: grouping.blocks.len() == count,
        grouping,
        witnesses,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReducibleSplit {
    /// Which factor of the split is avoided, 0 or 1.
    pub part: usize,
    pub factor: Pattern,
    /// The longest tail of the host avoiding that factor.
    pub reservoir: Vec<usize>,
}

/// For `p` splitting as a join of two factors, the longest tail of `host`
/// that avoids one of them (the first factor wins ties).
pub fn reducible_split(f: &impl Coloring, p: &Pattern, host: &[usize]) -> Result<ReducibleSplit> {
    let (left, right) = split_reducible(p).ok_or_else(|| Error::Precondition("pattern is not a join".into()))?;
    let mut best: Option<ReducibleSplit> = None;
    for (part, factor) in [left, right].into_iter().enumerate() {
        let mut start = host.len();
        // Tails are nested, so avoidance is monotone in the start position.
        while start > 0 {
            let tail = VertexSet::new(host[start - 1..].to_vec())?;
            match find_realization(f, &tail, &factor, DEFAULT_BUDGET)? {
                SearchOutcome::ProvenAbsent => start -= 1,
                SearchOutcome::Found(_) => break,
                SearchOutcome::BudgetExhausted { nodes } => {
                    return Err(Error::Resource(format!("avoidance check stopped after {nodes} nodes")))
                }
            }
        }
        let reservoir = host[start..].to_vec();
        if best.as_ref().is_none_or(|b| reservoir.len() > b.reservoir.len()) {
            best = Some(ReducibleSplit {
                part,
                factor,
                reservoir,
            });
        }
    }
    Ok(best.expect("two factors"))
}
