//! Homogeneous-set extraction.
//!
//! Limit questions ("does x have limit 1-c in the reservoir") are answered
//! from the declared data of a [`StableColoring`].

mod blocks;
mod oracle;
mod randomized;
mod spectrum;
mod unbalanced;

pub use blocks::{analyze_blocks, bad_witness, BlockVerdict, GoodBadReport};
pub use oracle::{
    oracle_extract, AdversarialOracle, EscapeQuery, EscapingOracle, OracleOutcome, OracleStep,
    QueryRecord, ReferenceOracle,
};
pub use randomized::{
    block_arity, randomized_extract, ChoiceMode, ExtractionConfig, RandomOutcome, RandomStep,
};
pub use spectrum::{compute_spectrum_trace, SpectrumEntry, SpectrumTrace};
pub use unbalanced::{unbalanced_extract, UnbalancedOutcome};

use crate::error::{Error, Result};
use crate::fractal::{fractal_perm_capped, FractalId, FractalOccurrence};
use crate::pattern_core::{
    find_realization_ending_at, is_homogeneous, perm_to_pattern, Coloring, FiniteColoring,
    SearchOutcome, StableColoring, VertexSet,
};

/// Largest coloring accepted by the exhaustive search.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Largest fractal used as a block pattern.
pub const BLOCK_SIZE_CAP: usize = 4096;

/// Node budget for one block search.
pub const BLOCK_SEARCH_BUDGET: u64 = 5_000_000;

/// Independent homogeneity check used on every extractor output.
pub fn verify_homogeneous(f: &impl Coloring, set: &[usize], c: u8) -> Result<()> {
    for (i, &x) in set.iter().enumerate() {
        if x >= f.horizon() {
            return Err(Error::Range {
                vertex: x,
                horizon: f.horizon(),
            });
        }
        for &y in &set[i + 1..] {
            if y <= x {
                return Err(Error::contract("output is not strictly increasing"));
            }
            if f.color(x, y) != c {
                return Err(Error::contract(format!(
                    "pair ({x},{y}) has color {} instead of {c}",
                    f.color(x, y)
                )));
            }
        }
    }
    Ok(())
}

/// Maximum homogeneous set over both colors, by exhaustive clique search.
pub fn brute_force_max_homogeneous(f: &FiniteColoring) -> Result<(u8, VertexSet)> {
    brute_force_max_homogeneous_capped(f, BRUTE_FORCE_CAP)
}

pub fn brute_force_max_homogeneous_capped(f: &FiniteColoring, cap: usize) -> Result<(u8, VertexSet)> {
    let zero = max_homogeneous_for_color(f, 0, cap)?;
    let one = max_homogeneous_for_color(f, 1, cap)?;
    Ok(if one.len() > zero.len() { (1, one) } else { (0, zero) })
}

/// Largest `c`-homogeneous set, lexicographically first among the largest.
pub fn max_homogeneous_for_color(f: &FiniteColoring, c: u8, cap: usize) -> Result<VertexSet> {
    let n = f.horizon();
    if n > cap || n > 63 {
        return Err(Error::Resource(format!(
            "exhaustive search is capped at {cap} vertices, got {n}"
        )));
    }
    let adj: Vec<u64> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x && f.color(x, y) == c)
                .fold(0u64, |m, y| m | (1 << y))
        })
        .collect();
    fn grow(adj: &[u64], cur: u64, cand: u64, best: &mut u64) {
        if cand == 0 {
            let better = cur.count_ones() > best.count_ones()
                || (cur.count_ones() == best.count_ones() && lex_less(cur, *best));
            if better {
                *best = cur;
            }
            return;
        }
        if cur.count_ones() + cand.count_ones() < best.count_ones() {
            return;
        }
        let v = cand.trailing_zeros() as usize;
        grow(adj, cur | (1 << v), cand & adj[v], best);
        grow(adj, cur, cand & !(1 << v), best);
    }
    fn lex_less(a: u64, b: u64) -> bool {
        let diff = a ^ b;
        diff != 0 && a & (diff & diff.wrapping_neg()) != 0
    }
    let mut best = 0u64;
    let all = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    grow(&adj, 0, all, &mut best);
    let set: Vec<usize> = (0..n).filter(|&v| best >> v & 1 == 1).collect();
    debug_assert!(is_homogeneous(f, &set, c));
    VertexSet::new(set)
}

/// A stem of chosen vertices plus the reservoir of admissible later vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MathiasCondition {
    pub stem: Vec<usize>,
    pub color: u8,
    /// Reservoir elements are at least this large.
    pub floor: usize,
}

impl MathiasCondition {
    pub fn new(color: u8) -> Self {
        MathiasCondition {
            stem: Vec::new(),
            color,
            floor: 0,
        }
    }

    pub fn admits(&self, f: &impl Coloring, z: usize) -> bool {
        z >= self.floor
            && self.stem.last().is_none_or(|&m| z > m)
            && self.stem.iter().all(|&x| f.color(x, z) == self.color)
    }

    /// Adds `x` to the stem; the reservoir keeps only elements above `floor`.
    pub fn extend(&mut self, x: usize, floor: usize) {
        debug_assert!(self.stem.last().is_none_or(|&m| x > m));
        self.stem.push(x);
        self.floor = self.floor.max(floor).max(x + 1);
    }
}

/// Pattern table of a fractal used as a search target.
pub(crate) fn fractal_pattern(id: FractalId) -> Result<crate::pattern_core::Pattern> {
    Ok(perm_to_pattern(&fractal_perm_capped(id.arity, id.dim, BLOCK_SIZE_CAP)?))
}

/// Least occurrence of `id` among admitted vertices in `[cond.floor, horizon)`,
/// ordered by maximum element and then lexicographically.
pub fn least_fractal(
    f: &impl Coloring,
    cond: &MathiasCondition,
    id: FractalId,
    horizon: usize,
) -> Result<Option<FractalOccurrence>> {
    let pattern = fractal_pattern(id)?;
    let need = pattern.size();
    let horizon = horizon.min(f.horizon());
    let mut prefix: Vec<usize> = Vec::new();
    for z in cond.floor..horizon {
        if !cond.admits(f, z) {
            continue;
        }
        if prefix.len() + 1 >= need {
            match find_realization_ending_at(f, &prefix, z, &pattern, BLOCK_SEARCH_BUDGET)? {
                SearchOutcome::Found(set) => {
                    return Ok(Some(FractalOccurrence {
                        id,
                        elements: set.into_vec(),
                    }))
                }
                SearchOutcome::ProvenAbsent => {}
                SearchOutcome::BudgetExhausted { nodes } => {
                    return Err(Error::Resource(format!(
                        "block search ending at {z} gave up after {nodes} nodes"
                    )))
                }
            }
        }
        prefix.push(z);
    }
    Ok(None)
}

/// `true` iff `x` has limit `1-c`.
pub(crate) fn is_bad_element(f: &StableColoring, x: usize, c: u8) -> bool {
    f.limit(x) == 1 - c
}

/// Target color for blocks of dimension `n`: 1 when `n` is even, 0 when odd.
pub fn target_color(n: usize) -> u8 {
    u8::from(n % 2 == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm_algebra::Permutation;

    #[test]
    fn brute_force_examples() {
        let zero = FiniteColoring::constant(6, 0);
        assert_eq!(brute_force_max_homogeneous(&zero).unwrap(), (0, VertexSet::range(0, 6)));
        let f = FiniteColoring::from_perm(&"2031".parse::<Permutation>().unwrap());
        assert_eq!(max_homogeneous_for_color(&f, 0, 24).unwrap().len(), 2);
        assert_eq!(max_homogeneous_for_color(&f, 1, 24).unwrap().len(), 2);
        let one = FiniteColoring::constant(1, 0);
        assert_eq!(brute_force_max_homogeneous(&one).unwrap().1, VertexSet::range(0, 1));
        assert!(brute_force_max_homogeneous(&FiniteColoring::constant(25, 0)).is_err());
    }

    #[test]
    fn least_block_prefers_small_maximum() {
        // 0-edges everywhere except from vertex 1.
        let f = FiniteColoring::from_fn(8, |x, _| u8::from(x == 1));
        let cond = MathiasCondition::new(0);
        let occ = least_fractal(&f, &cond, FractalId::new(3, 1).unwrap(), 8).unwrap().unwrap();
        assert_eq!(occ.elements, vec![0, 2, 3]);
    }

    #[test]
    fn verifier_rejects_bad_pairs() {
        let f = FiniteColoring::from_fn(5, |x, y| u8::from(x + y == 5));
        assert!(verify_homogeneous(&f, &[0, 1, 2], 0).is_ok());
        assert!(verify_homogeneous(&f, &[1, 4], 0).is_err());
        assert!(verify_homogeneous(&f, &[2, 1], 0).is_err());
    }
}
