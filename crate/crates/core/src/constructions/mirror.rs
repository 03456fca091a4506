use crate::error::{Error, Result};

/// A strict linear order on `0..len()`.
pub trait LinearOrderView {
    fn len(&self) -> usize;

    fn precedes(&self, a: usize, b: usize) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A linear order stored as ranks: `a` precedes `b` iff `rank[a] < rank[b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOrder {
    rank: Vec<usize>,
}

impl RankOrder {
    /// `rank` must be a permutation of `0..len`.
    pub fn new(rank: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; rank.len()];
        for &r in &rank {
            if r >= rank.len() || std::mem::replace(&mut seen[r], true) {
                return Err(Error::contract("ranks must be a permutation"));
            }
        }
        Ok(RankOrder { rank })
    }

    pub fn identity(len: usize) -> Self {
        RankOrder { rank: (0..len).collect() }
    }

    pub fn reversed(len: usize) -> Self {
        RankOrder { rank: (0..len).rev().collect() }
    }

    /// Ranks from any view, by sorting with its comparator.
    pub fn from_view(view: &impl LinearOrderView) -> Self {
        let mut items: Vec<usize> = (0..view.len()).collect();
        items.sort_by(|&a, &b| {
            if view.precedes(a, b) {
                std::cmp::Ordering::Less
            } else if view.precedes(b, a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let mut rank = vec![0; items.len()];
        for (r, &x) in items.iter().enumerate() {
            rank[x] = r;
        }
        RankOrder { rank }
    }

    pub fn rank(&self, x: usize) -> usize {
        self.rank[x]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    /// Comparator table: row `a` lists `1` where `a` precedes `b`.
    pub fn to_table_string(&self) -> String {
        let n = self.rank.len();
        let mut out = format!("{n}\n");
        for a in 0..n {
            let row: String = (0..n).map(|b| if self.precedes(a, b) { '1' } else { '0' }).collect();
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    /// Reads the text written by [`RankOrder::to_table_string`].
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, head) = lines.next().ok_or_else(|| Error::parse(1, "empty order table"))?;
        let n: usize = head.parse().map_err(|_| Error::parse(ln, "expected the number of elements"))?;
        let mut rank = vec![0usize; n];
        let mut rows = Vec::with_capacity(n);
        for (a, r) in rank.iter_mut().enumerate() {
            let (ln, row) = lines.next().ok_or_else(|| Error::parse(ln, format!("missing row {a}")))?;
            if row.len() != n || row.chars().any(|c| c != '0' && c != '1') {
                return Err(Error::parse(ln, format!("row {a} must hold {n} bits")));
            }
            // Rank is the number of elements preceding `a`.
            *r = n - 1 - row.chars().filter(|&c| c == '1').count();
            rows.push((ln, row.as_bytes().to_vec()));
        }
        let order = RankOrder::new(rank).map_err(|_| Error::parse(ln, "table is not a linear order"))?;
        for (a, (ln, row)) in rows.iter().enumerate() {
            if (0..n).any(|b| order.precedes(a, b) != (row[b] == b'1')) {
                return Err(Error::parse(*ln, "table is not a linear order"));
            }
        }
        Ok(order)
    }
}

impl LinearOrderView for RankOrder {
    fn len(&self) -> usize {
        self.rank.len()
    }

    fn precedes(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }
}

/// Doubled order: evens carry a copy of `src`, odds a reversed copy above it.
pub fn mirror_precedes(src: &impl LinearOrderView, a: usize, b: usize) -> bool {
    match (a % 2, b % 2) {
        (0, 0) => src.precedes(a / 2, b / 2),
        (0, 1) => true,
        (1, 1) => src.precedes(b / 2, a / 2),
        _ => false,
    }
}

pub fn mirror_double(src: &impl LinearOrderView) -> RankOrder {
    let n = src.len();
    let base = RankOrder::from_view(src);
    let mut rank = vec![0; 2 * n];
    for x in 0..n {
        rank[2 * x] = base.rank(x);
        rank[2 * x + 1] = n + (n - 1 - base.rank(x));
    }
    RankOrder { rank }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_cases() {
        let src = RankOrder::new(vec![2, 0, 3, 1]).unwrap();
        let m = mirror_double(&src);
        for a in 0..8 {
            for b in 0..8 {
                if a != b {
                    assert_eq!(m.precedes(a, b), mirror_precedes(&src, a, b), "{a} {b}");
                }
            }
        }
        assert!((0..8).step_by(2).all(|e| (1..8).step_by(2).all(|o| m.precedes(e, o))));
        assert_eq!(m.precedes(0, 2), src.precedes(0, 1));
        assert_eq!(m.precedes(3, 1), src.precedes(0, 1));
    }

    #[test]
    fn rank_validation() {
        assert!(RankOrder::new(vec![0, 0]).is_err());
        assert!(RankOrder::new(vec![1, 2]).is_err());
        assert_eq!(RankOrder::from_view(&RankOrder::reversed(3)), RankOrder::reversed(3));
    }
}
