//! Permutations, the sum and join operators, and separability.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pattern_core::{
    find_realization, is_transitive, pattern_to_perm, perm_to_pattern, FiniteColoring, Pattern,
    SearchOutcome, VertexSet,
};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Checks that `values` is a bijection on `{0..len-1}`.
    pub fn new(values: Vec<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("permutation must be nonempty"));
        }
        let mut seen = vec![false; values.len()];
        for &v in &values {
            if v >= values.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::contract(format!(
                    "{values:?} is not a permutation of 0..{}",
                    values.len()
                )));
            }
        }
        Ok(Permutation(values))
    }

    pub fn identity(len: usize) -> Self {
        Permutation((0..len).collect())
    }

    pub fn trivial() -> Self {
        Permutation(vec![0])
    }

    /// Relabels distinct values by rank.
    pub fn standardize(values: &[usize]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by_key(|&i| values[i]);
        let mut out = vec![0; values.len()];
        for (rank, &i) in order.iter().enumerate() {
            out[i] = rank;
        }
        Permutation(out)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Permutation induced on increasing positions.
    pub fn restrict(&self, positions: &[usize]) -> Self {
        let vals: Vec<usize> = positions.iter().map(|&i| self.0[i]).collect();
        Permutation::standardize(&vals)
    }

    /// `v -> len-1-v`; its pattern is the dual pattern.
    pub fn complement(&self) -> Self {
        let l = self.len();
        Permutation(self.0.iter().map(|v| l - 1 - v).collect())
    }

    pub fn direct_sum(&self, other: &Permutation) -> Self {
        let m = self.len();
        let mut v = self.0.clone();
        v.extend(other.0.iter().map(|x| x + m));
        Permutation(v)
    }

    pub fn skew_sum(&self, other: &Permutation) -> Self {
        let n = other.len();
        let mut v: Vec<usize> = self.0.iter().map(|x| x + n).collect();
        v.extend_from_slice(&other.0);
        Permutation(v)
    }

    pub fn sum(&self, op: SumOp, other: &Permutation) -> Self {
        match op {
            SumOp::Direct => self.direct_sum(other),
            SumOp::Skew => self.skew_sum(other),
        }
    }

    /// All permutations of `len` in lexicographic order.
    pub fn all(len: usize) -> AllPermutations {
        AllPermutations {
            next: (len > 0).then(|| (0..len).collect()),
        }
    }

    pub fn pattern(&self) -> Pattern {
        perm_to_pattern(self)
    }
}

pub struct AllPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if let Some(i) = (0..succ.len().saturating_sub(1)).rev().find(|&i| succ[i] < succ[i + 1]) {
            let j = (i + 1..succ.len()).rev().find(|&j| succ[j] > succ[i]).expect("pivot exists");
            succ.swap(i, j);
            succ[i + 1..].reverse();
            self.next = Some(succ);
        }
        Some(Permutation(cur))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 10 {
            for v in &self.0 {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
            f.write_str(&parts.join(","))
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let values: Vec<usize> = if s.contains(',') {
            s.split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::contract(format!("cannot read permutation {s:?}")))?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::contract(format!("cannot read permutation {s:?}")))?
        };
        Permutation::new(values)
    }
}

/// Glues `q` after `p`, identifying the last vertex of `p` with the first of `q`.
pub fn join(p: &Pattern, q: &Pattern) -> Pattern {
    let lp = p.size();
    Pattern::from_fn(lp + q.size() - 1, |x, y| {
        if y < lp {
            p.get(x, y)
        } else if x + 1 >= lp {
            q.get(x + 1 - lp, y + 1 - lp)
        } else {
            p.get(x, lp - 1)
        }
    })
}

/// Appends a vertex joined to every earlier vertex by color `c`.
pub fn converge(p: &Pattern, c: u8) -> Pattern {
    let l = p.size();
    Pattern::from_fn(l + 1, |x, y| if y < l { p.get(x, y) } else { c })
}

/// Least-left split `p = p0 join p1` with both parts of size at least 2.
pub fn split_reducible(p: &Pattern) -> Option<(Pattern, Pattern)> {
    let l = p.size();
    for a in 2..l {
        let left: Vec<usize> = (0..a).collect();
        let right: Vec<usize> = (a - 1..l).collect();
        let (p0, p1) = (p.restrict(&left), p.restrict(&right));
        if join(&p0, &p1) == *p {
            return Some((p0, p1));
        }
    }
    None
}

/// The constant color of the last column, if any.
pub fn is_convergent(p: &Pattern) -> Option<u8> {
    let l = p.size();
    if l < 2 {
        return None;
    }
    let c = p.get(0, l - 1);
    (1..l - 1).all(|x| p.get(x, l - 1) == c).then_some(c)
}

/// The pattern without its last vertex.
pub fn drop_last(p: &Pattern) -> Option<Pattern> {
    (p.size() >= 2).then(|| p.restrict(&(0..p.size() - 1).collect::<Vec<_>>()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SumOp {
    Direct,
    Skew,
}

impl SumOp {
    pub fn symbol(self) -> char {
        match self {
            SumOp::Direct => '+',
            SumOp::Skew => '-',
        }
    }

    /// Color joining the left operand to the right one.
    pub fn cross_color(self) -> u8 {
        match self {
            SumOp::Direct => 0,
            SumOp::Skew => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeparatingTree {
    Leaf,
    Node { op: SumOp, children: Vec<SeparatingTree> },
}

impl SeparatingTree {
    pub fn leaf_count(&self) -> usize {
        match self {
            SeparatingTree::Leaf => 1,
            SeparatingTree::Node { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            SeparatingTree::Leaf => 0,
            SeparatingTree::Node { children, .. } => {
                1 + children.iter().map(|c| c.height()).max().unwrap_or(0)
            }
        }
    }

    /// Folds every node with its operator.
    pub fn evaluate(&self) -> Permutation {
        match self {
            SeparatingTree::Leaf => Permutation::trivial(),
            SeparatingTree::Node { op, children } => {
                let mut it = children.iter().map(|c| c.evaluate());
                let first = it.next().expect("nodes have children");
                it.fold(first, |acc, c| acc.sum(*op, &c))
            }
        }
    }

    /// Term such as `(-(+(0,0),+(0,0)))`.
    pub fn term(&self) -> String {
        fn go(t: &SeparatingTree, out: &mut String) {
            match t {
                SeparatingTree::Leaf => out.push('0'),
                SeparatingTree::Node { op, children } => {
                    out.push(op.symbol());
                    out.push('(');
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        go(c, out);
                    }
                    out.push(')');
                }
            }
        }
        let mut out = String::from("(");
        go(self, &mut out);
        out.push(')');
        out
    }
}

/// Decomposition by splitting at the leftmost interval boundary.
pub fn separating_tree(pi: &Permutation) -> Option<SeparatingTree> {
    decompose(pi.values())
}

fn decompose(v: &[usize]) -> Option<SeparatingTree> {
    let l = v.len();
    if l == 1 {
        return Some(SeparatingTree::Leaf);
    }
    let (mut lo, mut hi) = (usize::MAX, 0);
    let mut split = None;
    for a in 1..l {
        lo = lo.min(v[a - 1]);
        hi = hi.max(v[a - 1]);
        if hi == a - 1 {
            split = Some((a, SumOp::Direct));
            break;
        }
        if lo == l - a {
            split = Some((a, SumOp::Skew));
            break;
        }
    }
    let (a, op) = split?;
    let left = Permutation::standardize(&v[..a]);
    let right = Permutation::standardize(&v[a..]);
    let lt = decompose(left.values())?;
    let rt = decompose(right.values())?;
    let mut children = vec![lt];
    match rt {
        SeparatingTree::Node { op: rop, children: rc } if rop == op => children.extend(rc),
        other => children.push(other),
    }
    Some(SeparatingTree::Node { op, children })
}

/// Earliest occurrence of 1302 or 2031, as `(pattern, positions)`.
pub fn forbidden_occurrence(pi: &Permutation) -> Option<(Permutation, VertexSet)> {
    if pi.len() < 4 {
        return None;
    }
    let f = FiniteColoring::from_perm(pi);
    let host = VertexSet::range(0, pi.len());
    let mut best: Option<(Permutation, VertexSet)> = None;
    for name in ["1302", "2031"] {
        let q: Permutation = name.parse().expect("literal permutation");
        match find_realization(&f, &host, &q.pattern(), u64::MAX).expect("host within horizon") {
            SearchOutcome::Found(set) => {
                if best.as_ref().is_none_or(|(_, b)| set < *b) {
                    best = Some((q, set));
                }
            }
            SearchOutcome::ProvenAbsent => {}
            SearchOutcome::BudgetExhausted { .. } => unreachable!("unbounded budget"),
        }
    }
    best
}

/// Runs both characterizations and panics if they disagree.
pub fn is_separable(pi: &Permutation) -> bool {
    let by_tree = separating_tree(pi);
    if let Some(t) = &by_tree {
        assert_eq!(t.evaluate(), *pi, "separating tree does not evaluate back");
    }
    let by_patterns = forbidden_occurrence(pi).is_none();
    assert_eq!(
        by_tree.is_some(),
        by_patterns,
        "separability algorithms disagree on {pi}"
    );
    by_patterns
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Trichotomy {
    /// A separable permutation pattern.
    AdsSide,
    /// Contains a non-transitive triple.
    EmSide,
    /// A permutation containing 1302 or 2031.
    Side1302,
}

pub fn classify_trichotomy(p: &Pattern) -> Trichotomy {
    if !is_transitive(p) {
        return Trichotomy::EmSide;
    }
    let pi = pattern_to_perm(p).expect("transitive patterns code permutations");
    if is_separable(&pi) {
        Trichotomy::AdsSide
    } else {
        Trichotomy::Side1302
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn sums() {
        let z = Permutation::trivial();
        assert_eq!(z.direct_sum(&z), perm("01"));
        assert_eq!(z.skew_sum(&z), perm("10"));
        assert_eq!(perm("01").skew_sum(&perm("01")), perm("2301"));
    }

    #[test]
    fn text_forms() {
        assert!("0012".parse::<Permutation>().is_err());
        assert!("3".parse::<Permutation>().is_err());
        let big = Permutation::identity(12).complement();
        assert_eq!(big.to_string(), "11,10,9,8,7,6,5,4,3,2,1,0");
        assert_eq!(big.to_string().parse::<Permutation>().unwrap(), big);
    }

    #[test]
    fn joins() {
        let (p01, p10) = (perm("01").pattern(), perm("10").pattern());
        assert_eq!(join(&p01, &p01), perm("012").pattern());
        assert_eq!(join(&p01, &p10), perm("021").pattern());
        assert_eq!(converge(&Pattern::trivial(), 0), p01);
    }

    #[test]
    fn reducibility() {
        let (a, b) = split_reducible(&perm("012").pattern()).unwrap();
        assert_eq!((a.clone(), b), (perm("01").pattern(), perm("01").pattern()));
        assert_eq!(split_reducible(&perm("120").pattern()), None);
        assert_eq!(split_reducible(&perm("102").pattern()), None);
        assert_eq!(is_convergent(&perm("120").pattern()), Some(1));
        assert_eq!(is_convergent(&perm("102").pattern()), Some(0));
        assert_eq!(is_convergent(&perm("021").pattern()), None);
    }

    #[test]
    fn separability_examples() {
        assert!(is_separable(&perm("120")));
        assert!(!is_separable(&perm("2031")));
        assert!(!is_separable(&perm("1302")));
        let t = separating_tree(&perm("2301")).unwrap();
        assert_eq!(t.term(), "(-(+(0,0),+(0,0)))");
        let (q, at) = forbidden_occurrence(&perm("2031")).unwrap();
        assert_eq!((q, at.into_vec()), (perm("2031"), vec![0, 1, 2, 3]));
    }

    #[test]
    fn chains_are_flattened() {
        let t = separating_tree(&perm("0123")).unwrap();
        assert_eq!(t.term(), "(+(0,0,0,0))");
        assert_eq!(separating_tree(&perm("0")).unwrap().term(), "(0)");
    }

    #[test]
    fn trichotomy_examples() {
        assert_eq!(classify_trichotomy(&perm("120").pattern()), Trichotomy::AdsSide);
        let left = Pattern::new(3, vec![0, 1, 0]).unwrap();
        assert_eq!(classify_trichotomy(&left), Trichotomy::EmSide);
        assert_eq!(classify_trichotomy(&perm("1302").pattern()), Trichotomy::Side1302);
    }

    #[test]
    fn enumeration_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| Permutation::all(n).count()).collect();
        assert_eq!(counts, vec![1, 2, 6, 24, 120]);
    }
}
