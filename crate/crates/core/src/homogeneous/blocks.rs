use serde::Serialize;

use super::{fractal_pattern, is_bad_element, BLOCK_SEARCH_BUDGET};
use crate::error::{Error, Result};
use crate::fractal::{occurrence_realizes, FractalId, FractalOccurrence};
use crate::pattern_core::{find_realization, SearchOutcome, StableColoring, VertexSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum BlockVerdict {
    Good,
    /// Carries a `k`-fractal of the block's dimension made of elements with limit `1-c`.
    Bad { witness: Vec<usize> },
}

impl BlockVerdict {
    pub fn is_bad(&self) -> bool {
        matches!(self, BlockVerdict::Bad { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodBadReport {
    pub id: FractalId,
    pub k: usize,
    pub color: u8,
    /// One verdict per top-level block, in block order.
    pub verdicts: Vec<BlockVerdict>,
    /// Witness that the whole occurrence is bad, if it is.
    pub whole_witness: Option<Vec<usize>>,
}

impl GoodBadReport {
    pub fn bad_indices(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_bad())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn whole_is_good(&self) -> bool {
        self.whole_witness.is_none()
    }
}

/// A `k`-fractal of dimension `dim` inside `elements` whose members all have
/// limit `1-c`, lexicographically first.
pub fn bad_witness(
    f: &StableColoring,
    elements: &[usize],
    k: usize,
    dim: usize,
    c: u8,
) -> Result<Option<Vec<usize>>> {
    let bad: Vec<usize> = elements.iter().copied().filter(|&x| is_bad_element(f, x, c)).collect();
    if dim == 0 {
        return Ok(bad.first().map(|&x| vec![x]));
    }
    let id = FractalId::new(k, dim)?;
    if id.size().is_none_or(|s| s > bad.len()) {
        return Ok(None);
    }
    let host = VertexSet::from_unsorted(bad)?;
    match find_realization(f, &host, &fractal_pattern(id)?, BLOCK_SEARCH_BUDGET)? {
        SearchOutcome::Found(set) => Ok(Some(set.into_vec())),
        SearchOutcome::ProvenAbsent => Ok(None),
        SearchOutcome::BudgetExhausted { nodes } => Err(Error::Resource(format!(
            "bad-block search gave up after {nodes} nodes"
        ))),
    }
}

/// Verdicts for the blocks of `elements`, read as a fractal of shape `id`.
pub(crate) fn block_verdicts(
    f: &StableColoring,
    elements: &[usize],
    id: FractalId,
    k: usize,
    c: u8,
) -> Result<Vec<BlockVerdict>> {
    let Some(bs) = id.block_size() else {
        return Ok(Vec::new());
    };
    elements
        .chunks(bs)
        .map(|blk| {
            Ok(match bad_witness(f, blk, k, id.dim - 1, c)? {
                Some(witness) => BlockVerdict::Bad { witness },
                None => BlockVerdict::Good,
            })
        })
        .collect()
}

/// Classifies the top-level blocks of `occ` as good or bad for `(k, c)`.
pub fn analyze_blocks(
    f: &StableColoring,
    occ: &FractalOccurrence,
    k: usize,
    c: u8,
) -> Result<GoodBadReport> {
    if k == 0 || c > 1 {
        return Err(Error::contract("need k >= 1 and a color"));
    }
    if occ.elements.iter().any(|&x| x >= f.limits().len())
        || !occurrence_realizes(f, occ.id, &occ.elements)
    {
        return Err(Error::contract("occurrence does not realize its declared fractal"));
    }
    let verdicts = block_verdicts(f, &occ.elements, occ.id, k, c)?;
    let whole_witness = bad_witness(f, &occ.elements, k, occ.id.dim, c)?;
    let report = GoodBadReport {
        id: occ.id,
        k,
        color: c,
        verdicts,
        whole_witness,
    };
    if report.whole_is_good() && report.bad_indices().len() >= k {
        return Err(Error::Contract(format!(
            "good occurrence has {} bad blocks with k = {k}",
            report.bad_indices().len()
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(f: &StableColoring, arity: usize, dim: usize, elements: Vec<usize>) -> FractalOccurrence {
        FractalOccurrence::new(f, FractalId::new(arity, dim).unwrap(), elements).unwrap()
    }

    #[test]
    fn all_good_when_limits_match() {
        let f = StableColoring::from_limits(vec![0; 9]);
        let r = analyze_blocks(&f, &occ(&f, 3, 1, vec![0, 1, 2]), 2, 0).unwrap();
        assert!(r.bad_indices().is_empty());
        assert!(r.whole_is_good());
    }

    #[test]
    fn all_bad_when_limits_differ() {
        // Limits 1 everywhere; color 1 blocks of dimension 2 are pairs with color 1 inside.
        let f = StableColoring::from_limits(vec![1; 8]);
        let r = analyze_blocks(&f, &occ(&f, 2, 0, vec![3]), 2, 0).unwrap();
        assert!(r.verdicts.is_empty());
        assert_eq!(r.whole_witness, Some(vec![3]));
        let g = StableColoring::from_limits(vec![0; 8]);
        let o = occ(&g, 2, 1, vec![0, 1]);
        let r = analyze_blocks(&g, &o, 2, 1).unwrap();
        assert_eq!(r.bad_indices(), vec![0, 1]);
        assert_eq!(r.whole_witness, Some(vec![0, 1]));
    }

    #[test]
    fn one_bad_singleton() {
        // Vertex 0 has limit 1 but its early pairs are 0, so {0,1,2} is a 0-clique.
        let f = StableColoring::new(vec![1, 0, 0, 0], vec![4, 2, 3, 4], []).unwrap();
        let o = occ(&f, 3, 1, vec![0, 1, 2]);
        let r = analyze_blocks(&f, &o, 2, 0).unwrap();
        assert_eq!(r.bad_indices(), vec![0]);
        assert!(r.whole_is_good());
    }

    #[test]
    fn malformed_occurrence_is_rejected() {
        let f = StableColoring::from_limits(vec![1; 4]);
        let o = FractalOccurrence {
            id: FractalId::new(3, 1).unwrap(),
            elements: vec![0, 1, 2],
        };
        assert!(matches!(analyze_blocks(&f, &o, 2, 0), Err(Error::Contract(_))));
    }
}
