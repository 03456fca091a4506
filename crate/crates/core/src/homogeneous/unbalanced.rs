use serde::Serialize;

use super::verify_homogeneous;
use crate::error::{Error, Result};
use crate::pattern_core::{Coloring, VertexSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnbalancedOutcome {
    /// Sibling family; pairwise color 1.
    pub set: VertexSet,
    /// Depth of the family in the tree (root children are at depth 1).
    pub level: usize,
    /// Common parent vertex; `None` for the root.
    pub parent: Option<usize>,
    /// Node count per depth, starting at depth 1.
    pub level_sizes: Vec<usize>,
    /// Guaranteed size: the chosen level's population over its number of parents.
    pub lower_bound: usize,
}

struct Node {
    vertex: usize,
    depth: usize,
    parent: Option<usize>,
    children: Vec<usize>,
}

/// Grows the tree of 0-homogeneous paths whose siblings are pairwise 1 and
/// returns the largest sibling family on the least most-populated level.
///
/// A path of length `k` is a 0-homogeneous `k`-clique and is reported as an error.
pub fn unbalanced_extract(f: &impl Coloring, k: usize, horizon: usize) -> Result<UnbalancedOutcome> {
    if k < 2 {
        return Err(Error::contract("clique bound must be at least 2"));
    }
    let horizon = horizon.min(f.horizon());
    if horizon == 0 {
        return Err(Error::contract("horizon must be positive"));
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(horizon);
    let mut roots: Vec<usize> = Vec::new();
    for x in 0..horizon {
        let mut parent: Option<usize> = None;
        loop {
            let siblings = match parent {
                None => &roots,
                Some(p) => &nodes[p].children,
            };
            match siblings.iter().find(|&&c| f.color(nodes[c].vertex, x) == 0) {
                Some(&c) => parent = Some(c),
                None => break,
            }
        }
        let depth = parent.map_or(1, |p| nodes[p].depth + 1);
        let id = nodes.len();
        nodes.push(Node {
            vertex: x,
            depth,
            parent,
            children: Vec::new(),
        });
        match parent {
            None => roots.push(id),
            Some(p) => nodes[p].children.push(id),
        }
        if depth >= k {
            let mut witness = Vec::with_capacity(depth);
            let mut cur = Some(id);
            while let Some(c) = cur {
                witness.push(nodes[c].vertex);
                cur = nodes[c].parent;
            }
            witness.reverse();
            return Err(Error::Witness {
                message: format!("found a 0-homogeneous clique of size {k}"),
                witness,
            });
        }
    }

    let depth_max = nodes.iter().map(|n| n.depth).max().unwrap_or(1);
    let mut level_sizes = vec![0usize; depth_max];
    for n in &nodes {
        level_sizes[n.depth - 1] += 1;
    }
    let top = *level_sizes.iter().max().expect("at least one level");
    let level = level_sizes.iter().position(|&s| s == top).expect("maximum exists") + 1;

    let (parent, family, parents) = if level == 1 {
        (None, roots.clone(), 1)
    } else {
        let above: Vec<&Node> = nodes.iter().filter(|n| n.depth == level - 1).collect();
        let best = above
            .iter()
            .copied()
            .max_by(|a, b| a.children.len().cmp(&b.children.len()).then(b.vertex.cmp(&a.vertex)))
            .expect("level above is populated");
        (Some(best.vertex), best.children.clone(), above.len())
    };
    let set: Vec<usize> = family.iter().map(|&c| nodes[c].vertex).collect();
    verify_homogeneous(f, &set, 1)?;
    Ok(UnbalancedOutcome {
        set: VertexSet::new(set)?,
        level,
        parent,
        level_sizes,
        lower_bound: top.div_ceil(parents),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_core::FiniteColoring;

    #[test]
    fn constant_one_gives_everything() {
        let f = FiniteColoring::constant(20, 1);
        let out = unbalanced_extract(&f, 2, 20).unwrap();
        assert_eq!(out.set, VertexSet::range(0, 20));
        assert_eq!(out.level, 1);
    }

    #[test]
    fn single_zero_edge() {
        let f = FiniteColoring::from_fn(20, |x, y| u8::from(!(x == 0 && y == 1)));
        let out = unbalanced_extract(&f, 3, 20).unwrap();
        assert_eq!(out.set.len(), 19);
        assert!(!(out.set.contains(0) && out.set.contains(1)));
    }

    #[test]
    fn zero_clique_is_reported() {
        let f = FiniteColoring::constant(10, 0);
        match unbalanced_extract(&f, 3, 10) {
            Err(Error::Witness { witness, .. }) => assert_eq!(witness, vec![0, 1, 2]),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn lower_bound_is_met() {
        let f = FiniteColoring::from_fn(40, |x, y| u8::from((x % 3) == (y % 3)));
        let out = unbalanced_extract(&f, 4, 40).unwrap();
        assert!(out.set.len() >= out.lower_bound);
    }
}
