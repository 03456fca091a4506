//! Patterns over pairs, finite and stable colorings, and realization search.
//!
//! Edges of a pattern of size `l` are stored in lexicographic pair order
//! `(0,1), (0,2), ..., (l-2,l-1)`; every serialized form uses that order.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::perm_algebra::Permutation;

/// Default node budget for containment searches.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

fn pair_index(size: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < size);
    i * (2 * size - i - 1) / 2 + (j - i - 1)
}

/// A 2-coloring of all pairs over `{0..size-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct Pattern {
    size: usize,
    bits: Vec<u8>,
}

impl Pattern {
    /// Builds a pattern from its bits in canonical pair order.
    pub fn new(size: usize, bits: Vec<u8>) -> Result<Self> {
        if size == 0 {
            return Err(Error::contract("pattern size must be positive"));
        }
        if bits.len() != size * (size - 1) / 2 {
            return Err(Error::contract(format!(
                "pattern of size {size} needs {} bits, got {}",
                size * (size - 1) / 2,
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::contract("pattern bits must be 0 or 1"));
        }
        Ok(Pattern { size, bits })
    }

    pub fn from_fn(size: usize, mut edge: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(size > 0, "pattern size must be positive");
        let mut bits = Vec::with_capacity(size * (size - 1) / 2);
        for i in 0..size {
            for j in i + 1..size {
                bits.push(edge(i, j) & 1);
            }
        }
        Pattern { size, bits }
    }

    pub fn constant(size: usize, color: u8) -> Self {
        Pattern::from_fn(size, |_, _| color)
    }

    /// The size-1 pattern with no pairs.
    pub fn trivial() -> Self {
        Pattern {
            size: 1,
            bits: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Color of the pair `(i, j)`; `None` unless `i < j < size`.
    pub fn try_get(&self, i: usize, j: usize) -> Option<u8> {
        (i < j && j < self.size).then(|| self.bits[pair_index(self.size, i, j)])
    }

    /// Color of the pair `(i, j)`.
    ///
    /// # Panics
    /// Panics unless `i < j < size`.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.try_get(i, j)
            .unwrap_or_else(|| panic!("pair ({i},{j}) is not an ordered pair below {}", self.size))
    }

    /// Sub-pattern induced by increasing positions.
    pub fn restrict(&self, positions: &[usize]) -> Pattern {
        Pattern::from_fn(positions.len(), |a, b| self.get(positions[a], positions[b]))
    }

    /// Pattern file text: `size=l` then the bits.
    pub fn to_file_string(&self) -> String {
        let bits: String = self.bits.iter().map(|b| char::from(b'0' + b)).collect();
        format!("size={}\n{}\n", self.size, bits)
    }

    pub fn parse_file(text: &str) -> Result<Pattern> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, head) = lines.next().ok_or_else(|| Error::parse(1, "empty pattern file"))?;
        let size: usize = head
            .strip_prefix("size=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(ln, "expected `size=<l>`"))?;
        let mut bits = Vec::new();
        let mut last = ln;
        for (ln, line) in lines {
            last = ln;
            for ch in line.chars().filter(|c| !c.is_whitespace()) {
                match ch {
                    '0' => bits.push(0),
                    '1' => bits.push(1),
                    other => return Err(Error::parse(ln, format!("unexpected character {other:?}"))),
                }
            }
        }
        Pattern::new(size, bits).map_err(|e| Error::parse(last, e.to_string()))
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = self.bits.iter().map(|b| char::from(b'0' + b)).collect();
        write!(f, "Pattern({}:{})", self.size, bits)
    }
}

/// Bitwise complement of every edge.
pub fn dual(p: &Pattern) -> Pattern {
    Pattern {
        size: p.size,
        bits: p.bits.iter().map(|b| 1 - b).collect(),
    }
}

/// The two size-3 patterns that do not code an order.
pub fn non_transitivity_patterns() -> [Pattern; 2] {
    [
        Pattern::new(3, vec![0, 1, 0]).expect("valid bits"),
        Pattern::new(3, vec![1, 0, 1]).expect("valid bits"),
    ]
}

/// True iff no triple of positions carries a non-transitivity pattern.
pub fn is_transitive(p: &Pattern) -> bool {
    let l = p.size;
    for a in 0..l {
        for b in a + 1..l {
            for c in b + 1..l {
                let (ab, ac, bc) = (p.get(a, b), p.get(a, c), p.get(b, c));
                if ab == bc && ac != ab {
                    return false;
                }
            }
        }
    }
    true
}

/// Codes a permutation: `(x, y)` gets color 0 iff `pi(x) < pi(y)`.
pub fn perm_to_pattern(pi: &Permutation) -> Pattern {
    let v = pi.values();
    Pattern::from_fn(v.len(), |x, y| u8::from(v[x] > v[y]))
}

/// Recovers the permutation coded by a transitive pattern.
pub fn pattern_to_perm(p: &Pattern) -> Option<Permutation> {
    if !is_transitive(p) {
        return None;
    }
    let l = p.size;
    let mut positions: Vec<usize> = (0..l).collect();
    // Position x precedes y in the recovered order iff the pair says x is smaller.
    positions.sort_by(|&x, &y| {
        use std::cmp::Ordering::*;
        match x.cmp(&y) {
            Equal => Equal,
            Less => {
                if p.get(x, y) == 0 {
                    Less
                } else {
                    Greater
                }
            }
            Greater => {
                if p.get(y, x) == 0 {
                    Greater
                } else {
                    Less
                }
            }
        }
    });
    let mut values = vec![0; l];
    for (rank, &pos) in positions.iter().enumerate() {
        values[pos] = rank;
    }
    let pi = Permutation::new(values).ok()?;
    (perm_to_pattern(&pi) == *p).then_some(pi)
}

/// An edge 2-coloring of pairs over `{0..horizon-1}`.
pub trait Coloring {
    /// Number of vertices with defined behavior.
    fn horizon(&self) -> usize;

    /// Color of `{x, y}`; callers guarantee `x != y` and both below the horizon.
    fn color(&self, x: usize, y: usize) -> u8;
}

impl<C: Coloring + ?Sized> Coloring for &C {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }

    fn color(&self, x: usize, y: usize) -> u8 {
        (**self).color(x, y)
    }
}

/// A coloring stored as an upper-triangular bit table.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteColoring {
    n: usize,
    bits: Vec<u8>,
}

impl FiniteColoring {
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> u8) -> Self {
        let mut bits = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for x in 0..n {
            for y in x + 1..n {
                bits.push(edge(x, y) & 1);
            }
        }
        FiniteColoring { n, bits }
    }

    pub fn constant(n: usize, color: u8) -> Self {
        FiniteColoring::from_fn(n, |_, _| color)
    }

    /// The coloring induced on `{0..l-1}` by a permutation.
    pub fn from_perm(pi: &Permutation) -> Self {
        let v = pi.values();
        FiniteColoring::from_fn(v.len(), |x, y| u8::from(v[x] > v[y]))
    }

    pub fn from_pattern(p: &Pattern) -> Self {
        FiniteColoring {
            n: p.size,
            bits: p.bits.clone(),
        }
    }

    /// Snapshot of any coloring on its first `n` vertices.
    pub fn snapshot(f: &impl Coloring, n: usize) -> Self {
        FiniteColoring::from_fn(n, |x, y| f.color(x, y))
    }

    /// Flips every edge.
    pub fn dual(&self) -> Self {
        FiniteColoring {
            n: self.n,
            bits: self.bits.iter().map(|b| 1 - b).collect(),
        }
    }

    pub fn set(&mut self, x: usize, y: usize, color: u8) {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        assert!(a != b && b < self.n, "pair ({x},{y}) outside coloring");
        self.bits[pair_index(self.n, a, b)] = color & 1;
    }

    /// Coloring file text: `N`, then one row per vertex listing colors to later vertices.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for x in 0..self.n {
            let row: String = (x + 1..self.n)
                .map(|y| char::from(b'0' + self.color(x, y)))
                .collect();
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn parse_file(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, head) = loop {
            match lines.next() {
                Some((_, l)) if l.is_empty() || l.starts_with('#') => continue,
                Some(item) => break item,
                None => return Err(Error::parse(1, "empty coloring file")),
            }
        };
        let n: usize = head
            .parse()
            .map_err(|_| Error::parse(ln, "expected the vertex count"))?;
        let mut f = FiniteColoring::constant(n, 0);
        let mut rows = lines.filter(|(_, l)| !l.starts_with('#'));
        for x in 0..n {
            let (ln, row) = match rows.next() {
                Some(r) => r,
                None if x + 1 == n => (ln, ""),
                None => return Err(Error::parse(ln, format!("missing row for vertex {x}"))),
            };
            let cells: Vec<char> = row.chars().filter(|c| !c.is_whitespace()).collect();
            if cells.len() != n - x - 1 {
                return Err(Error::parse(
                    ln,
                    format!("row {x} needs {} entries, got {}", n - x - 1, cells.len()),
                ));
            }
            for (off, ch) in cells.into_iter().enumerate() {
                let c = match ch {
                    '0' => 0,
                    '1' => 1,
                    other => return Err(Error::parse(ln, format!("unexpected character {other:?}"))),
                };
                f.set(x, x + 1 + off, c);
            }
        }
        Ok(f)
    }
}

impl Coloring for FiniteColoring {
    fn horizon(&self) -> usize {
        self.n
    }

    fn color(&self, x: usize, y: usize) -> u8 {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        debug_assert!(a != b && b < self.n);
        self.bits[pair_index(self.n, a, b)]
    }
}

impl fmt::Debug for FiniteColoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteColoring(n={})", self.n)
    }
}

/// A coloring with declared limits and settling times.
///
/// For `x < y`: `f(x, y) = limit(x)` once `y >= settle(x)`; before that the
/// pair takes its override if one is declared and `1 - limit(x)` otherwise.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StableColoring {
    limit: Vec<u8>,
    settle: Vec<usize>,
    overrides: BTreeMap<(usize, usize), u8>,
}

impl StableColoring {
    pub fn new(
        limit: Vec<u8>,
        settle: Vec<usize>,
        overrides: impl IntoIterator<Item = (usize, usize, u8)>,
    ) -> Result<Self> {
        if limit.len() != settle.len() {
            return Err(Error::contract("limit and settle tables differ in length"));
        }
        if limit.iter().any(|&c| c > 1) {
            return Err(Error::contract("limits must be colors"));
        }
        for (x, &s) in settle.iter().enumerate() {
            if s <= x {
                return Err(Error::contract(format!(
                    "settle({x}) = {s} must exceed the vertex"
                )));
            }
        }
        let mut table = BTreeMap::new();
        for (x, y, c) in overrides {
            if x >= limit.len() || !(x < y && y < settle[x]) || c > 1 {
                return Err(Error::contract(format!(
                    "override ({x},{y},{c}) must satisfy x < y < settle(x)"
                )));
            }
            table.insert((x, y), c);
        }
        Ok(StableColoring {
            limit,
            settle,
            overrides: table,
        })
    }

    /// Every row settles immediately: `f(x, y) = limit(x)` for all `y > x`.
    pub fn from_limits(limit: Vec<u8>) -> Self {
        let settle = (1..=limit.len()).collect();
        StableColoring::new(limit, settle, []).expect("immediate settling is valid")
    }

    /// Reads a finite coloring as stable data: limits are the last colors seen.
    pub fn from_finite(f: &FiniteColoring) -> Self {
        let n = f.horizon();
        let limit = (0..n).map(|x| if x + 1 < n { f.color(x, n - 1) } else { 0 }).collect();
        Self::with_limits(f, limit).expect("derived data is consistent")
    }

    /// Stable data for the pairs of `f` with declared limits; each row settles
    /// after its last disagreement with the limit.
    pub fn with_limits(f: &impl Coloring, limit: Vec<u8>) -> Result<Self> {
        let n = limit.len();
        if n > f.horizon() {
            return Err(Error::contract("more limits than vertices"));
        }
        let mut settle = vec![0usize; n];
        let mut overrides = Vec::new();
        for x in 0..n {
            let mut s = n;
            while s > x + 1 && f.color(x, s - 1) == limit[x] {
                s -= 1;
            }
            settle[x] = s.max(x + 1);
            for y in x + 1..s {
                let c = f.color(x, y);
                if c != 1 - limit[x] {
                    overrides.push((x, y, c));
                }
            }
        }
        StableColoring::new(limit, settle, overrides)
    }

    pub fn limit(&self, x: usize) -> u8 {
        self.limit[x]
    }

    pub fn settle(&self, x: usize) -> usize {
        self.settle[x]
    }

    pub fn limits(&self) -> &[u8] {
        &self.limit
    }

    pub fn overrides(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        self.overrides.iter().map(|(&(x, y), &c)| (x, y, c))
    }

    /// Text form: `stable N`, `limits <bits>`, `settle <list>`, then `override x y c` lines.
    pub fn to_file_string(&self) -> String {
        let limits: String = self.limit.iter().map(|b| char::from(b'0' + b)).collect();
        let settle: Vec<String> = self.settle.iter().map(|s| s.to_string()).collect();
        let mut out = format!(
            "stable {}\nlimits {}\nsettle {}\n",
            self.limit.len(),
            limits,
            settle.join(",")
        );
        for (x, y, c) in self.overrides() {
            out.push_str(&format!("override {x} {y} {c}\n"));
        }
        out
    }

    pub fn parse_file(text: &str) -> Result<Self> {
        let mut n = None;
        let mut limit = None;
        let mut settle = None;
        let mut overrides = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut words = line.split_whitespace();
            match words.next() {
                Some("stable") => {
                    n = Some(parse_num(words.next(), ln)?);
                }
                Some("limits") => {
                    let bits = words.next().unwrap_or("");
                    let parsed: Result<Vec<u8>> = bits
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(0),
                            '1' => Ok(1),
                            other => Err(Error::parse(ln, format!("bad limit {other:?}"))),
                        })
                        .collect();
                    limit = Some(parsed?);
                }
                Some("settle") => {
                    let list = words.next().unwrap_or("");
                    let parsed: Result<Vec<usize>> = list
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_num(Some(s), ln))
                        .collect();
                    settle = Some(parsed?);
                }
                Some("override") => {
                    let x = parse_num(words.next(), ln)?;
                    let y = parse_num(words.next(), ln)?;
                    let c = parse_num(words.next(), ln)?;
                    overrides.push((x, y, c as u8));
                }
                Some(other) => return Err(Error::parse(ln, format!("unknown directive {other:?}"))),
                None => {}
            }
        }
        let n = n.ok_or_else(|| Error::parse(1, "missing `stable N` header"))?;
        let limit = limit.ok_or_else(|| Error::parse(1, "missing `limits` line"))?;
        let settle = settle.unwrap_or_else(|| (1..=n).collect());
        if limit.len() != n || settle.len() != n {
            return Err(Error::parse(1, format!("expected {n} limits and settle times")));
        }
        StableColoring::new(limit, settle, overrides).map_err(|e| Error::parse(1, e.to_string()))
    }
}

fn parse_num(word: Option<&str>, line: usize) -> Result<usize> {
    word.and_then(|w| w.parse().ok())
        .ok_or_else(|| Error::parse(line, "expected a natural number"))
}

impl Coloring for StableColoring {
    fn horizon(&self) -> usize {
        self.limit.len()
    }

    fn color(&self, x: usize, y: usize) -> u8 {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        if b >= self.settle[a] {
            self.limit[a]
        } else {
            self.overrides
                .get(&(a, b))
                .copied()
                .unwrap_or(1 - self.limit[a])
        }
    }
}

/// A strictly increasing finite set of naturals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, serde::Serialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new(elements: Vec<usize>) -> Result<Self> {
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("vertex set must be strictly increasing"));
        }
        Ok(VertexSet(elements))
    }

    /// Sorts the input; duplicates are still rejected.
    pub fn from_unsorted(mut elements: Vec<usize>) -> Result<Self> {
        elements.sort_unstable();
        VertexSet::new(elements)
    }

    pub fn range(lo: usize, hi: usize) -> Self {
        VertexSet((lo..hi).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Does `set` carry pattern `p` under `f`?
pub fn realizes(f: &impl Coloring, set: &VertexSet, p: &Pattern) -> Result<bool> {
    if set.len() != p.size() {
        return Err(Error::contract(format!(
            "set of size {} cannot realize a pattern of size {}",
            set.len(),
            p.size()
        )));
    }
    if let Some(m) = set.max() {
        if m >= f.horizon() {
            return Err(Error::Range {
                vertex: m,
                horizon: f.horizon(),
            });
        }
    }
    Ok(realizes_unchecked(f, set.as_slice(), p))
}

pub(crate) fn realizes_unchecked(f: &impl Coloring, xs: &[usize], p: &Pattern) -> bool {
    (0..xs.len()).all(|i| (i + 1..xs.len()).all(|j| f.color(xs[i], xs[j]) == p.get(i, j)))
}

/// True iff every pair inside `set` has color `c`.
pub fn is_homogeneous(f: &impl Coloring, set: &[usize], c: u8) -> bool {
    (0..set.len()).all(|i| (i + 1..set.len()).all(|j| f.color(set[i], set[j]) == c))
}

/// Outcome of a budgeted containment search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(VertexSet),
    ProvenAbsent,
    BudgetExhausted { nodes: u64 },
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&VertexSet> {
        match self {
            SearchOutcome::Found(s) => Some(s),
            _ => None,
        }
    }
}

/// Depth-first search for a subset of `host` realizing `p`, lexicographically first.
///
/// The budget counts search-tree nodes (partial realizations visited).
pub fn find_realization(
    f: &impl Coloring,
    host: &VertexSet,
    p: &Pattern,
    budget: u64,
) -> Result<SearchOutcome> {
    check_search(f, host.max(), budget)?;
    let hs = host.as_slice();
    if hs.len() < p.size() {
        return Ok(SearchOutcome::ProvenAbsent);
    }
    Ok(Backtrack::new(f, p, None, budget).run(hs.to_vec()))
}

/// Like [`find_realization`], but the realization must end at `last`;
/// `before` holds the other admissible vertices, all below `last`.
pub fn find_realization_ending_at(
    f: &impl Coloring,
    before: &[usize],
    last: usize,
    p: &Pattern,
    budget: u64,
) -> Result<SearchOutcome> {
    check_search(f, Some(last), budget)?;
    if before.iter().any(|&y| y >= last) || before.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("candidates must increase and stay below the last vertex"));
    }
    let l = p.size();
    if before.len() + 1 < l {
        return Ok(SearchOutcome::ProvenAbsent);
    }
    // A vertex at position i < l-1 must see `last` with color p(i, l-1).
    let tail: Vec<u8> = (0..l.saturating_sub(1)).map(|i| p.get(i, l - 1)).collect();
    let cands: Vec<usize> = if tail.iter().all(|&c| c == tail[0]) && !tail.is_empty() {
        before.iter().copied().filter(|&y| f.color(y, last) == tail[0]).collect()
    } else {
        before.to_vec()
    };
    Ok(Backtrack::new(f, p, Some(last), budget).run(cands))
}

fn check_search(f: &impl Coloring, max: Option<usize>, budget: u64) -> Result<()> {
    if budget == 0 {
        return Err(Error::contract("budget must be positive"));
    }
    match max {
        Some(m) if m >= f.horizon() => Err(Error::Range {
            vertex: m,
            horizon: f.horizon(),
        }),
        _ => Ok(()),
    }
}

/// `true` iff no subset of `host` realizes `p`; budget exhaustion is an error.
pub fn avoids(f: &impl Coloring, host: &VertexSet, p: &Pattern) -> Result<bool> {
    avoids_with_budget(f, host, p, DEFAULT_BUDGET)
}

pub fn avoids_with_budget(
    f: &impl Coloring,
    host: &VertexSet,
    p: &Pattern,
    budget: u64,
) -> Result<bool> {
    match find_realization(f, host, p, budget)? {
        SearchOutcome::Found(_) => Ok(false),
        SearchOutcome::ProvenAbsent => Ok(true),
        SearchOutcome::BudgetExhausted { nodes } => Err(Error::Resource(format!(
            "containment search stopped after {nodes} nodes without a verdict"
        ))),
    }
}

enum Step {
    Found,
    Exhausted,
    OutOfBudget,
}

/// Patterns above this size skip the forced-color tables.
const FORCED_TABLE_LIMIT: usize = 2048;

struct Backtrack<'a, C: Coloring> {
    f: &'a C,
    p: &'a Pattern,
    last: Option<usize>,
    /// `forced[i][d - i - 1]`: the only color vertex `i` may have to positions `>= d`, if unique.
    forced: Vec<Vec<Option<u8>>>,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl<'a, C: Coloring> Backtrack<'a, C> {
    fn new(f: &'a C, p: &'a Pattern, last: Option<usize>, budget: u64) -> Self {
        let l = p.size();
        let forced = if l <= FORCED_TABLE_LIMIT {
            (0..l)
                .map(|i| {
                    let mut row = vec![None; l - i - 1];
                    let mut mask = 0u8;
                    for d in (i + 1..l).rev() {
                        mask |= 1 << p.get(i, d);
                        row[d - i - 1] = match mask {
                            1 => Some(0),
                            2 => Some(1),
                            _ => None,
                        };
                    }
                    row
                })
                .collect()
        } else {
            Vec::new()
        };
        Backtrack {
            f,
            p,
            last,
            forced,
            chosen: Vec::with_capacity(l),
            nodes: 0,
            budget,
        }
    }

    fn run(mut self, cands: Vec<usize>) -> SearchOutcome {
        match self.extend(&cands) {
            Step::Found => SearchOutcome::Found(VertexSet(self.chosen)),
            Step::Exhausted => SearchOutcome::ProvenAbsent,
            Step::OutOfBudget => SearchOutcome::BudgetExhausted { nodes: self.nodes },
        }
    }

    fn forced_color(&self, i: usize, d: usize) -> Option<u8> {
        self.forced.get(i).and_then(|row| row.get(d - i - 1).copied().flatten())
    }

    fn fits(&self, y: usize, depth: usize) -> bool {
        let l = self.p.size();
        self.chosen
            .iter()
            .enumerate()
            .all(|(i, &x)| self.f.color(x, y) == self.p.get(i, depth))
            && match self.last {
                Some(z) if depth + 1 < l => self.f.color(y, z) == self.p.get(depth, l - 1),
                _ => true,
            }
    }

    fn extend(&mut self, cands: &[usize]) -> Step {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Step::OutOfBudget;
        }
        let l = self.p.size();
        let depth = self.chosen.len();
        if depth == l {
            return Step::Found;
        }
        if let Some(z) = self.last {
            if depth + 1 == l {
                if self.fits(z, depth) {
                    self.chosen.push(z);
                    return Step::Found;
                }
                return Step::Exhausted;
            }
        }
        let reserved = usize::from(self.last.is_some());
        let remaining = l - depth - reserved;
        for idx in 0..cands.len() {
            if cands.len() - idx < remaining {
                break;
            }
            let y = cands[idx];
            if !self.fits(y, depth) {
                continue;
            }
            self.chosen.push(y);
            let next = depth + 1;
            let newly: Vec<(usize, u8)> = if next < l {
                (0..=depth)
                    .filter_map(|i| {
                        let now = self.forced_color(i, next)?;
                        let before = if i < depth { self.forced_color(i, depth) } else { None };
                        before.is_none().then_some((self.chosen[i], now))
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let step = if newly.is_empty() {
                self.extend(&cands[idx + 1..])
            } else {
                let child: Vec<usize> = cands[idx + 1..]
                    .iter()
                    .copied()
                    .filter(|&w| newly.iter().all(|&(x, c)| self.f.color(x, w) == c))
                    .collect();
                if child.len() + 1 < remaining {
                    Step::Exhausted
                } else {
                    self.extend(&child)
                }
            };
            match step {
                Step::Exhausted => {
                    self.chosen.pop();
                }
                other => return other,
            }
        }
        Step::Exhausted
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn pair_order_is_lexicographic() {
        let p = Pattern::from_fn(4, |i, j| u8::from(i == 0 && j == 3));
        assert_eq!(p.bits(), &[0, 0, 1, 0, 0, 0]);
        assert_eq!(p.try_get(2, 1), None);
        assert_eq!(p.try_get(1, 1), None);
    }

    #[test]
    fn perm_coding_of_2031() {
        assert_eq!(perm_to_pattern(&perm("2031")).bits(), &[1, 0, 1, 0, 0, 1]);
        assert_eq!(perm_to_pattern(&perm("1302")).bits(), &[0, 1, 0, 1, 1, 0]);
        assert_eq!(dual(&perm_to_pattern(&perm("2031"))), perm_to_pattern(&perm("1302")));
    }

    #[test]
    fn realization_examples() {
        let zero = FiniteColoring::constant(10, 0);
        let set = VertexSet::new(vec![3, 7, 9]).unwrap();
        assert!(realizes(&zero, &set, &perm_to_pattern(&perm("012"))).unwrap());
        assert!(realizes(&zero, &VertexSet::new(vec![5]).unwrap(), &Pattern::trivial()).unwrap());
        let f = FiniteColoring::from_perm(&perm("2031"));
        let all = VertexSet::range(0, 4);
        assert!(realizes(&f, &all, &perm_to_pattern(&perm("2031"))).unwrap());
        assert!(matches!(
            realizes(&zero, &set, &Pattern::trivial()),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            realizes(&zero, &VertexSet::new(vec![3, 12]).unwrap(), &Pattern::constant(2, 0)),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn search_examples() {
        let zero = FiniteColoring::constant(10, 0);
        let host = VertexSet::range(0, 10);
        let got = find_realization(&zero, &host, &perm_to_pattern(&perm("01234")), 1000).unwrap();
        assert_eq!(got, SearchOutcome::Found(VertexSet::range(0, 5)));
        let got = find_realization(&zero, &host, &perm_to_pattern(&perm("10")), 1000).unwrap();
        assert_eq!(got, SearchOutcome::ProvenAbsent);
        let f = FiniteColoring::from_perm(&perm("2031"));
        let got =
            find_realization(&f, &VertexSet::range(0, 4), &perm_to_pattern(&perm("1302")), 100)
                .unwrap();
        assert_eq!(got, SearchOutcome::ProvenAbsent);
    }

    #[test]
    fn search_with_fixed_last_vertex() {
        let f = FiniteColoring::from_perm(&perm("3012"));
        let p = perm_to_pattern(&perm("012"));
        let got = find_realization_ending_at(&f, &[0, 1, 2], 3, &p, 100).unwrap();
        assert_eq!(got, SearchOutcome::Found(VertexSet::new(vec![1, 2, 3]).unwrap()));
        let got = find_realization_ending_at(&f, &[0, 1], 2, &perm_to_pattern(&perm("10")), 100).unwrap();
        assert_eq!(got, SearchOutcome::Found(VertexSet::new(vec![0, 2]).unwrap()));
        assert!(find_realization_ending_at(&f, &[2], 1, &p, 100).is_err());
    }

    #[test]
    fn budget_exhaustion_is_distinct() {
        let f = FiniteColoring::constant(30, 0);
        let host = VertexSet::range(0, 30);
        let p = Pattern::constant(12, 0);
        assert!(find_realization(&f, &host, &p, 13).unwrap().found().is_some());
        let got = find_realization(&f, &host, &p, 5).unwrap();
        assert!(matches!(got, SearchOutcome::BudgetExhausted { .. }));
        assert!(matches!(avoids_with_budget(&f, &host, &p, 5), Err(Error::Resource(_))));
    }

    #[test]
    fn avoidance_examples() {
        let one = FiniteColoring::constant(8, 1);
        let p012 = perm_to_pattern(&perm("012"));
        assert!(avoids(&one, &VertexSet::range(0, 8), &p012).unwrap());
        let zero = FiniteColoring::constant(3, 0);
        assert!(!avoids(&zero, &VertexSet::range(0, 3), &p012).unwrap());
    }

    #[test]
    fn transitivity_examples() {
        assert!(is_transitive(&perm_to_pattern(&perm("120"))));
        assert!(!is_transitive(&Pattern::new(3, vec![0, 1, 0]).unwrap()));
        assert!(is_transitive(&Pattern::constant(5, 1)));
        assert_eq!(pattern_to_perm(&Pattern::new(3, vec![1, 0, 1]).unwrap()), None);
    }

    #[test]
    fn file_round_trips() {
        let p = perm_to_pattern(&perm("2031"));
        assert_eq!(Pattern::parse_file(&p.to_file_string()).unwrap(), p);
        let f = FiniteColoring::from_perm(&perm("31420"));
        assert_eq!(FiniteColoring::parse_file(&f.to_file_string()).unwrap(), f);
        let s = StableColoring::new(vec![0, 1, 0, 1], vec![1, 4, 3, 4], [(1, 2, 1)]).unwrap();
        assert_eq!(StableColoring::parse_file(&s.to_file_string()).unwrap(), s);
    }

    #[test]
    fn malformed_coloring_reports_line() {
        let err = FiniteColoring::parse_file("3\n01\n2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn stable_semantics() {
        let s = StableColoring::new(vec![1, 0, 0], vec![3, 2, 3], [(0, 1, 1)]).unwrap();
        assert_eq!(s.color(0, 1), 1);
        assert_eq!(s.color(0, 2), 0);
        assert_eq!(s.color(2, 1), 0);
        assert!(StableColoring::new(vec![0], vec![0], []).is_err());
        assert!(StableColoring::new(vec![0, 0], vec![1, 2], [(0, 1, 1)]).is_err());
    }

    #[test]
    fn stable_view_of_finite_coloring_agrees() {
        let f = FiniteColoring::from_fn(12, |x, y| u8::from((x * 7 + y * 3) % 5 < 2));
        let s = StableColoring::from_finite(&f);
        for x in 0..12 {
            for y in x + 1..12 {
                assert_eq!(s.color(x, y), f.color(x, y), "pair {x},{y}");
            }
        }
    }

    #[test]
    fn vertex_sets_reject_duplicates() {
        assert!(VertexSet::new(vec![1, 1]).is_err());
        assert!(VertexSet::new(vec![2, 1]).is_err());
        assert!(VertexSet::from_unsorted(vec![3, 1, 2]).is_ok());
        assert!(VertexSet::from_unsorted(vec![3, 1, 3]).is_err());
    }
}
