//! k-fractals: generation, block addressing, the separable embedding and the
//! vertex partition lemma.
//!
//! The k-fractal of dimension `d >= 1` is `k` copies of dimension `d-1`
//! combined by a direct sum when `d` is odd and a skew sum when `d` is even.
//! Positions are addressed by base-`k` digit strings, most significant first.

use crate::error::{Error, Result};
use crate::pattern_core::{realizes, Coloring, FiniteColoring, VertexSet};
use crate::perm_algebra::{is_separable, separating_tree, Permutation, SeparatingTree, SumOp};

/// Largest fractal materialized by default.
pub const DEFAULT_SIZE_CAP: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct FractalId {
    pub arity: usize,
    pub dim: usize,
}

impl FractalId {
    pub fn new(arity: usize, dim: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::contract("fractal arity must be at least 1"));
        }
        Ok(FractalId { arity, dim })
    }

    /// `arity^dim`, if it fits.
    pub fn size(&self) -> Option<usize> {
        self.arity.checked_pow(self.dim as u32)
    }

    pub fn block_size(&self) -> Option<usize> {
        self.dim.checked_sub(1).and_then(|d| self.arity.checked_pow(d as u32))
    }
}

/// Operator joining the blocks of a fractal of dimension `dim >= 1`.
pub fn level_op(dim: usize) -> SumOp {
    assert!(dim >= 1, "dimension 0 has no blocks");
    if dim % 2 == 1 {
        SumOp::Direct
    } else {
        SumOp::Skew
    }
}

/// Color between two vertices lying in distinct blocks at dimension `dim`.
pub fn level_color(dim: usize) -> u8 {
    level_op(dim).cross_color()
}

pub fn fractal_perm(k: usize, n: usize) -> Result<Permutation> {
    fractal_perm_capped(k, n, DEFAULT_SIZE_CAP)
}

pub fn fractal_perm_capped(k: usize, n: usize, cap: usize) -> Result<Permutation> {
    let id = FractalId::new(k, n)?;
    match id.size() {
        Some(s) if s <= cap => {}
        _ => {
            return Err(Error::Resource(format!(
                "fractal of arity {k} and dimension {n} exceeds the size cap {cap}"
            )))
        }
    }
    let mut p = Permutation::trivial();
    for d in 1..=n {
        let op = level_op(d);
        let block = p.clone();
        for _ in 1..k {
            p = p.sum(op, &block);
        }
    }
    Ok(p)
}

/// Position interval `(offset, length)` of the sub-fractal at `path`.
pub fn navigate(k: usize, n: usize, path: &[usize]) -> Result<(usize, usize)> {
    if path.len() > n {
        return Err(Error::contract(format!(
            "path of length {} is deeper than dimension {n}",
            path.len()
        )));
    }
    if let Some(&bad) = path.iter().find(|&&i| i >= k) {
        return Err(Error::contract(format!("path entry {bad} is not below arity {k}")));
    }
    let size = FractalId::new(k, n)?
        .size()
        .ok_or_else(|| Error::Resource("fractal size overflows".into()))?;
    let mut offset = 0;
    let mut len = size;
    for &i in path {
        len /= k;
        offset += i * len;
    }
    Ok((offset, len))
}

/// Base-`k` digits of `pos` inside the fractal of dimension `n`.
pub fn address_of(k: usize, n: usize, pos: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    let mut rest = pos;
    for slot in digits.iter_mut().rev() {
        *slot = rest % k;
        rest /= k;
    }
    debug_assert_eq!(rest, 0, "position outside the fractal");
    digits
}

/// Embeds a separable permutation into the `k`-fractal of the returned dimension.
pub fn embed_separable(pi: &Permutation, k: usize) -> Result<(usize, VertexSet)> {
    if k < 2 {
        return Err(Error::contract("embedding needs arity at least 2"));
    }
    if !is_separable(pi) {
        return Err(Error::Domain(format!("{pi} is not separable")));
    }
    let tree = separating_tree(pi).expect("separable permutations have trees");
    let (n, positions) = embed_tree(&tree, k);
    let host = fractal_perm(k, n)?;
    let set = VertexSet::new(positions).expect("embedding positions increase");
    let ok = realizes(&FiniteColoring::from_perm(&host), &set, &pi.pattern())?;
    assert!(ok, "embedding of {pi} into fractal({k},{n}) does not realize it");
    Ok((n, set))
}

fn embed_tree(tree: &SeparatingTree, k: usize) -> (usize, Vec<usize>) {
    match tree {
        SeparatingTree::Leaf => (0, vec![0]),
        SeparatingTree::Node { op, children } => {
            let parts: Vec<(usize, Vec<usize>)> = if children.len() <= k {
                children.iter().map(|c| embed_tree(c, k)).collect()
            } else {
                let mut parts: Vec<_> = children[..k - 1].iter().map(|c| embed_tree(c, k)).collect();
                let rest = SeparatingTree::Node {
                    op: *op,
                    children: children[k - 1..].to_vec(),
                };
                parts.push(embed_tree(&rest, k));
                parts
            };
            let top = parts.iter().map(|(d, _)| *d).max().unwrap_or(0);
            let parity = match op {
                SumOp::Direct => 1,
                SumOp::Skew => 0,
            };
            let mut n = top + 1;
            if n % 2 != parity {
                n += 1;
            }
            let block = k.pow((n - 1) as u32);
            let positions = parts
                .into_iter()
                .enumerate()
                .flat_map(|(i, (_, ps))| ps.into_iter().map(move |p| i * block + p))
                .collect();
            (n, positions)
        }
    }
}

/// Result of the vertex partition lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSide {
    /// 0 for the `a`-side, 1 for the `b`-side.
    pub color: u8,
    /// Arity of the monochromatic sub-fractal (`a` or `b`).
    pub arity: usize,
    pub positions: Vec<usize>,
}

/// Finds a monochromatic `a`-fractal of color 0 or `b`-fractal of color 1
/// among the positions of the `(a+b-1)`-fractal of dimension `n`.
pub fn partition_extract(a: usize, b: usize, n: usize, vc: &[u8]) -> Result<PartitionSide> {
    if a == 0 || b == 0 {
        return Err(Error::contract("both sides need arity at least 1"));
    }
    let w = a + b - 1;
    let size = FractalId::new(w, n)?
        .size()
        .ok_or_else(|| Error::Resource("fractal size overflows".into()))?;
    if vc.len() != size {
        return Err(Error::contract(format!(
            "vertex coloring has {} entries, the fractal has {size}",
            vc.len()
        )));
    }
    let side = split_level(a, b, w, n, 0, vc);
    debug_assert!(validate_partition(a, b, n, vc, &side).is_ok());
    Ok(side)
}

fn split_level(a: usize, b: usize, w: usize, dim: usize, offset: usize, vc: &[u8]) -> PartitionSide {
    if dim == 0 {
        let color = vc[offset] & 1;
        return PartitionSide {
            color,
            arity: if color == 0 { a } else { b },
            positions: vec![offset],
        };
    }
    let block = w.pow((dim - 1) as u32);
    let subs: Vec<PartitionSide> = (0..w)
        .map(|i| split_level(a, b, w, dim - 1, offset + i * block, vc))
        .collect();
    let zeros = subs.iter().filter(|s| s.color == 0).count();
    let (color, need) = if zeros >= a { (0, a) } else { (1, b) };
    let picked: Vec<PartitionSide> = subs.into_iter().filter(|s| s.color == color).take(need).collect();
    assert_eq!(picked.len(), need, "pigeonhole failed at dimension {dim}");
    PartitionSide {
        color,
        arity: need,
        positions: picked.into_iter().flat_map(|s| s.positions).collect(),
    }
}

/// True iff `positions` (increasing) form an `arity`-subfractal of dimension `n`
/// inside the `host`-fractal of dimension `n`, block by block.
pub fn is_subfractal_shape(host: usize, arity: usize, n: usize, positions: &[usize]) -> bool {
    fn go(host: usize, arity: usize, dim: usize, base: usize, ps: &[usize]) -> bool {
        if dim == 0 {
            return ps.len() == 1 && ps[0] == base;
        }
        let Some(sub) = arity.checked_pow((dim - 1) as u32) else {
            return false;
        };
        if ps.len() != sub * arity {
            return false;
        }
        let hb = host.pow((dim - 1) as u32);
        let mut last_block = None;
        for chunk in ps.chunks(sub) {
            let blk = (chunk[0] - base) / hb;
            if blk >= host || last_block.is_some_and(|l| blk <= l) {
                return false;
            }
            last_block = Some(blk);
            if !go(host, arity, dim - 1, base + blk * hb, chunk) {
                return false;
            }
        }
        true
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    if let Some(&last) = positions.last() {
        if host.checked_pow(n as u32).is_none_or(|s| last >= s) {
            return false;
        }
    }
    go(host, arity, n, 0, positions)
}

/// Checks a partition outcome: shape, size and monochromaticity.
pub fn validate_partition(a: usize, b: usize, n: usize, vc: &[u8], side: &PartitionSide) -> Result<()> {
    let want = if side.color == 0 { a } else { b };
    if side.arity != want {
        return Err(Error::contract("side arity does not match its color"));
    }
    if !is_subfractal_shape(a + b - 1, want, n, &side.positions) {
        return Err(Error::contract("positions do not form the claimed sub-fractal"));
    }
    if side.positions.iter().any(|&p| vc[p] != side.color) {
        return Err(Error::contract("positions are not monochromatic"));
    }
    Ok(())
}

/// A set realizing a fractal in some coloring, with its block structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractalOccurrence {
    pub id: FractalId,
    pub elements: Vec<usize>,
}

impl FractalOccurrence {
    /// Checks size and realization under `f`.
    pub fn new(f: &impl Coloring, id: FractalId, elements: Vec<usize>) -> Result<Self> {
        let size = id.size().ok_or_else(|| Error::Resource("fractal size overflows".into()))?;
        if elements.len() != size {
            return Err(Error::contract(format!(
                "occurrence has {} elements, fractal needs {size}",
                elements.len()
            )));
        }
        let set = VertexSet::new(elements)?;
        if !occurrence_realizes(f, id, set.as_slice()) {
            return Err(Error::contract("elements do not realize the declared fractal"));
        }
        Ok(FractalOccurrence {
            id,
            elements: set.into_vec(),
        })
    }

    /// Elements of the sub-fractal at `path`.
    pub fn block(&self, path: &[usize]) -> Result<&[usize]> {
        let (off, len) = navigate(self.id.arity, self.id.dim, path)?;
        Ok(&self.elements[off..off + len])
    }

    /// The top-level blocks, each one dimension lower.
    pub fn blocks(&self) -> Vec<&[usize]> {
        match self.id.block_size() {
            Some(bs) if self.id.dim > 0 => self.elements.chunks(bs).collect(),
            _ => Vec::new(),
        }
    }
}

/// Realization test that exploits the block structure instead of a pattern table.
pub fn occurrence_realizes(f: &impl Coloring, id: FractalId, xs: &[usize]) -> bool {
    fn go(f: &impl Coloring, k: usize, dim: usize, xs: &[usize]) -> bool {
        if dim == 0 {
            return xs.len() == 1;
        }
        let bs = xs.len() / k;
        let c = level_color(dim);
        for i in 0..k {
            for j in i + 1..k {
                for &x in &xs[i * bs..(i + 1) * bs] {
                    for &y in &xs[j * bs..(j + 1) * bs] {
                        if f.color(x, y) != c {
                            return false;
                        }
                    }
                }
            }
        }
        xs.chunks(bs).all(|blk| go(f, k, dim - 1, blk))
    }
    id.size() == Some(xs.len()) && go(f, id.arity, id.dim, xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_core::perm_to_pattern;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    #[test]
    fn generation_examples() {
        assert_eq!(fractal_perm(5, 0).unwrap(), perm("0"));
        assert_eq!(fractal_perm(3, 1).unwrap(), perm("012"));
        assert_eq!(fractal_perm(2, 2).unwrap(), perm("2301"));
        assert!(matches!(fractal_perm_capped(3, 5, 100), Err(Error::Resource(_))));
    }

    #[test]
    fn navigation_examples() {
        assert_eq!(navigate(2, 2, &[]).unwrap(), (0, 4));
        assert_eq!(navigate(2, 2, &[1]).unwrap(), (2, 2));
        assert_eq!(navigate(2, 2, &[1, 0]).unwrap(), (2, 1));
        assert!(navigate(2, 2, &[2]).is_err());
        assert!(navigate(2, 1, &[0, 0]).is_err());
        assert_eq!(address_of(3, 3, 14), vec![1, 1, 2]);
    }

    #[test]
    fn embedding_examples() {
        assert_eq!(embed_separable(&perm("0"), 2).unwrap(), (0, VertexSet::range(0, 1)));
        assert_eq!(embed_separable(&perm("120"), 2).unwrap(), (2, VertexSet::range(0, 3)));
        assert_eq!(embed_separable(&perm("01"), 3).unwrap(), (1, VertexSet::range(0, 2)));
        assert!(matches!(embed_separable(&perm("2031"), 2), Err(Error::Domain(_))));
    }

    #[test]
    fn wide_nodes_are_grouped() {
        let (n, set) = embed_separable(&perm("01234"), 2).unwrap();
        let host = fractal_perm(2, n).unwrap();
        assert_eq!(host.restrict(set.as_slice()), perm("01234"));
    }

    #[test]
    fn partition_examples() {
        let side = partition_extract(1, 1, 0, &[1]).unwrap();
        assert_eq!((side.color, side.positions), (1, vec![0]));
        let side = partition_extract(2, 2, 1, &[1, 0, 1]).unwrap();
        assert_eq!((side.color, side.positions), (1, vec![0, 2]));
        let vc = vec![1; 16];
        let side = partition_extract(2, 3, 2, &vc).unwrap();
        assert_eq!((side.color, side.arity, side.positions.len()), (1, 3, 9));
        assert!(validate_partition(2, 3, 2, &vc, &side).is_ok());
    }

    #[test]
    fn occurrences_match_pattern_realization() {
        let id = FractalId::new(3, 2).unwrap();
        let host = fractal_perm(3, 3).unwrap();
        let f = FiniteColoring::from_perm(&host);
        let p = perm_to_pattern(&fractal_perm(3, 2).unwrap());
        let xs: Vec<usize> = (0..9).collect();
        assert_eq!(
            occurrence_realizes(&f, id, &xs),
            realizes(&f, &VertexSet::new(xs.clone()).unwrap(), &p).unwrap()
        );
        let occ = FractalOccurrence::new(&FiniteColoring::from_perm(&fractal_perm(3, 2).unwrap()), id, xs).unwrap();
        assert_eq!(occ.block(&[2]).unwrap(), &[6, 7, 8]);
        assert_eq!(occ.blocks().len(), 3);
    }
}
