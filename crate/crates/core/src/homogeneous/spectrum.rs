use serde::Serialize;

use super::blocks::block_verdicts;
use crate::error::{Error, Result};
use crate::fractal::{occurrence_realizes, FractalId, FractalOccurrence};
use crate::pattern_core::StableColoring;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectrumEntry {
    /// Digits in `0..k`; digit `l` at a level skips the first `l` bad blocks.
    pub string: Vec<usize>,
    /// Chosen block per level, outermost first.
    pub trace: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpectrumTrace {
    pub k: usize,
    pub color: u8,
    pub id: FractalId,
    /// Sorted lexicographically by string.
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumTrace {
    pub fn strings(&self) -> Vec<&[usize]> {
        self.entries.iter().map(|e| e.string.as_slice()).collect()
    }

    pub fn trace(&self, string: &[usize]) -> Option<&[Vec<usize>]> {
        self.entries
            .iter()
            .find(|e| e.string == string)
            .map(|e| e.trace.as_slice())
    }

    /// Lexicographically largest full-length entry.
    pub fn rightmost(&self) -> Option<&SpectrumEntry> {
        self.entries.iter().rev().find(|e| e.string.len() == self.id.dim)
    }
}

/// Spectrum and traces of `occ` for the good/bad notion of `(k, c)`.
///
/// At each level the digit `l` selects the least block that is not among the
/// first `l` bad blocks; `l >= 1` needs at least `l` bad blocks.
pub fn compute_spectrum_trace(
    f: &StableColoring,
    occ: &FractalOccurrence,
    k: usize,
    c: u8,
) -> Result<SpectrumTrace> {
    if k == 0 || c > 1 {
        return Err(Error::contract("need k >= 1 and a color"));
    }
    if occ.elements.iter().any(|&x| x >= f.limits().len())
        || !occurrence_realizes(f, occ.id, &occ.elements)
    {
        return Err(Error::contract("occurrence does not realize its declared fractal"));
    }
    let mut entries = Vec::new();
    let mut string = Vec::new();
    let mut trace = Vec::new();
    unfold(f, &occ.elements, occ.id.arity, occ.id.dim, k, c, &mut string, &mut trace, &mut entries)?;
    entries.sort_by(|a, b| a.string.cmp(&b.string));
    Ok(SpectrumTrace {
        k,
        color: c,
        id: occ.id,
        entries,
    })
}

#[allow(clippy::too_many_arguments)]
fn unfold(
    f: &StableColoring,
    elements: &[usize],
    arity: usize,
    dim: usize,
    k: usize,
    c: u8,
    string: &mut Vec<usize>,
    trace: &mut Vec<Vec<usize>>,
    out: &mut Vec<SpectrumEntry>,
) -> Result<()> {
    if dim == 0 {
        out.push(SpectrumEntry {
            string: string.clone(),
            trace: trace.clone(),
        });
        return Ok(());
    }
    let id = FractalId::new(arity, dim)?;
    let verdicts = block_verdicts(f, elements, id, k, c)?;
    let bad: Vec<usize> = (0..arity).filter(|&i| verdicts[i].is_bad()).collect();
    let bs = id.block_size().expect("dimension is positive");
    for l in 0..k {
        if l > bad.len() {
            break;
        }
        let skipped = &bad[..l];
        let Some(chosen) = (0..arity).find(|i| !skipped.contains(i)) else {
            continue;
        };
        let block = &elements[chosen * bs..(chosen + 1) * bs];
        string.push(l);
        trace.push(block.to_vec());
        unfold(f, block, arity, dim - 1, k, c, string, trace, out)?;
        string.pop();
        trace.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_zero() {
        let f = StableColoring::from_limits(vec![0; 3]);
        let occ = FractalOccurrence::new(&f, FractalId::new(2, 0).unwrap(), vec![1]).unwrap();
        let t = compute_spectrum_trace(&f, &occ, 2, 0).unwrap();
        assert_eq!(t.strings(), vec![&[] as &[usize]]);
        assert!(t.trace(&[]).unwrap().is_empty());
    }

    #[test]
    fn all_good_takes_leftmost_blocks() {
        // Skew sum of two increasing pairs, every limit 1.
        let f = StableColoring::new(vec![1; 4], vec![2, 2, 4, 4], [(0, 1, 0), (2, 3, 0)]).unwrap();
        let occ = FractalOccurrence::new(&f, FractalId::new(2, 2).unwrap(), vec![0, 1, 2, 3]).unwrap();
        let t = compute_spectrum_trace(&f, &occ, 2, 1).unwrap();
        assert_eq!(t.strings(), vec![&[0, 0][..]]);
        assert_eq!(t.trace(&[0, 0]).unwrap(), &[vec![0, 1], vec![0]]);
    }

    #[test]
    fn one_bad_top_block() {
        // Same shape; the first pair has limit 1 and is bad for color 0.
        let f = StableColoring::new(vec![1, 1, 0, 0], vec![2, 2, 3, 4], [(0, 1, 0)]).unwrap();
        let occ = FractalOccurrence::new(&f, FractalId::new(2, 2).unwrap(), vec![0, 1, 2, 3]).unwrap();
        let t = compute_spectrum_trace(&f, &occ, 2, 0).unwrap();
        assert_eq!(t.strings(), vec![&[0, 0][..], &[0, 1][..], &[1, 0][..]]);
        let right = t.rightmost().unwrap();
        assert_eq!(right.trace.last().unwrap(), &vec![2]);
    }
}
