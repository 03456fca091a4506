use std::collections::BTreeMap;

use serde::Serialize;

use super::blocks::{bad_witness, block_verdicts};
use super::{is_bad_element, least_fractal, target_color, verify_homogeneous, MathiasCondition};
use crate::constructions::ModulusApprox;
use crate::error::{Error, Result};
use crate::fractal::{FractalId, FractalOccurrence};
use crate::pattern_core::{StableColoring, VertexSet};

/// A request for an index outside an enumerated set of at most `bound` indices.
#[derive(Debug)]
pub struct EscapeQuery<'a> {
    pub x: usize,
    pub level: usize,
    pub prefix: &'a [usize],
    pub bound: usize,
    members: &'a [usize],
}

impl<'a> EscapeQuery<'a> {
    /// `members` must be sorted and duplicate-free.
    pub(crate) fn new(x: usize, level: usize, prefix: &'a [usize], bound: usize, members: &'a [usize]) -> Self {
        EscapeQuery {
            x,
            level,
            prefix,
            bound,
            members,
        }
    }

    /// The enumerated set, in increasing order.
    pub fn enumerate(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }
}

pub trait EscapingOracle {
    fn answer(&mut self, query: &EscapeQuery<'_>) -> usize;
}

/// Answers the least index outside the enumerated set.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceOracle;

impl EscapingOracle for ReferenceOracle {
    fn answer(&mut self, query: &EscapeQuery<'_>) -> usize {
        (0..).find(|&i| !query.contains(i)).expect("finite set")
    }
}

/// Answers a member of the enumerated set whenever it is nonempty.
#[derive(Clone, Copy, Debug, Default)]
pub struct AdversarialOracle;

impl EscapingOracle for AdversarialOracle {
    fn answer(&mut self, query: &EscapeQuery<'_>) -> usize {
        query.enumerate().next().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub step: usize,
    pub x: usize,
    pub level: usize,
    pub prefix: Vec<usize>,
    pub bound: usize,
    pub set: Vec<usize>,
    pub answer: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleStep {
    pub step: usize,
    pub x: usize,
    pub change_points: Vec<usize>,
    pub arity: usize,
    pub path: Vec<usize>,
    pub element: usize,
    pub block_min: usize,
    pub block_max: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum OracleOutcome {
    Success {
        color: u8,
        set: VertexSet,
        steps: Vec<OracleStep>,
        queries: Vec<QueryRecord>,
    },
    Failure {
        color: u8,
        step: usize,
        reason: String,
        /// First level whose chosen block is bad, when the failure is a bad element.
        bad_level: Option<usize>,
        steps: Vec<OracleStep>,
        queries: Vec<QueryRecord>,
    },
}

impl OracleOutcome {
    pub fn set(&self) -> Option<&VertexSet> {
        match self {
            OracleOutcome::Success { set, .. } => Some(set),
            OracleOutcome::Failure { .. } => None,
        }
    }

    pub fn queries(&self) -> &[QueryRecord] {
        match self {
            OracleOutcome::Success { queries, .. } | OracleOutcome::Failure { queries, .. } => queries,
        }
    }

    pub fn steps(&self) -> &[OracleStep] {
        match self {
            OracleOutcome::Success { steps, .. } | OracleOutcome::Failure { steps, .. } => steps,
        }
    }
}

/// Extends a stem one element at a time, descending through least blocks of
/// several arities along a path chosen by `oracle`.
///
/// For argument `x`, the arities are the change points of `modulus` at `x`;
/// at each level the oracle must escape the union of the bad-block indices
/// over all those blocks. A step accepts the first arity exceeding every
/// answer.
pub fn oracle_extract(
    f: &StableColoring,
    avoided: FractalId,
    modulus: &ModulusApprox,
    oracle: &mut dyn EscapingOracle,
    target_len: usize,
    horizon: usize,
) -> Result<OracleOutcome> {
    if avoided.dim < 2 {
        return Err(Error::Precondition(
            "dimension below 2 has single-element blocks; use unbalanced_extract".into(),
        ));
    }
    if avoided.arity < 2 {
        return Err(Error::contract("avoided fractal needs arity at least 2"));
    }
    let k = avoided.arity;
    let n = avoided.dim - 1;
    let color = target_color(n);
    let horizon = horizon.min(f.limits().len());
    let mut cond = MathiasCondition::new(color);
    let mut steps = Vec::new();
    let mut queries = Vec::new();

    for step in 0..target_len {
        let mut cache: BTreeMap<usize, Option<FractalOccurrence>> = BTreeMap::new();
        let mut accepted = false;
        for x in 1..=modulus.max_x() {
            let cps: Vec<usize> = modulus.change_points(x).into_iter().filter(|&m| m >= 1).collect();
            let mut avail: Vec<(usize, &FractalOccurrence)> = Vec::new();
            for &m in &cps {
                if !cache.contains_key(&m) {
                    let occ = least_fractal(f, &cond, FractalId::new(m, n)?, horizon)?;
                    cache.insert(m, occ);
                }
            }
            for &m in &cps {
                if let Some(occ) = cache[&m].as_ref() {
                    avail.push((m, occ));
                }
            }
            if avail.is_empty() {
                continue;
            }
            let mut path: Vec<usize> = Vec::with_capacity(n);
            for level in 0..n {
                let top = path.iter().copied().max();
                let mut members: Vec<usize> = Vec::new();
                for &(m, occ) in &avail {
                    if top.is_some_and(|t| t >= m) {
                        continue;
                    }
                    let block = occ.block(&path)?;
                    let verdicts = block_verdicts(f, block, FractalId::new(m, n - level)?, k, color)?;
                    members.extend(verdicts.iter().enumerate().filter(|(_, v)| v.is_bad()).map(|(i, _)| i));
                }
                members.sort_unstable();
                members.dedup();
                let query = EscapeQuery {
                    x,
                    level,
                    prefix: &path,
                    bound: (k - 1) * x,
                    members: &members,
                };
                let answer = oracle.answer(&query);
                queries.push(QueryRecord {
                    step,
                    x,
                    level,
                    prefix: path.clone(),
                    bound: query.bound,
                    set: members.clone(),
                    answer,
                });
                path.push(answer);
            }
            let top = path.iter().copied().max().unwrap_or(0);
            let Some(&(arity, occ)) = avail.iter().find(|(m, _)| *m > top) else {
                continue;
            };
            let element = occ.block(&path)?[0];
            let block_max = *occ.elements.last().expect("blocks are nonempty");
            steps.push(OracleStep {
                step,
                x,
                change_points: cps.clone(),
                arity,
                path: path.clone(),
                element,
                block_min: occ.elements[0],
                block_max,
            });
            if is_bad_element(f, element, color) {
                let mut bad_level = None;
                for l in 0..n {
                    let blk = occ.block(&path[..=l])?;
                    if bad_witness(f, blk, k, n - l - 1, color)?.is_some() {
                        bad_level = Some(l);
                        break;
                    }
                }
                return Ok(OracleOutcome::Failure {
                    color,
                    step,
                    reason: format!("element {element} has limit {}", 1 - color),
                    bad_level,
                    steps,
                    queries,
                });
            }
            cond.extend(element, block_max + 1);
            accepted = true;
            break;
        }
        if !accepted {
            return Ok(OracleOutcome::Failure {
                color,
                step,
                reason: "no argument produced an accepted path".into(),
                bad_level: None,
                steps,
                queries,
            });
        }
    }
    verify_homogeneous(f, &cond.stem, color)?;
    Ok(OracleOutcome::Success {
        color,
        set: VertexSet::new(cond.stem)?,
        steps,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coloring_gives_trivial_steps() {
        let f = StableColoring::from_limits(vec![0; 200]);
        let modulus = ModulusApprox::new(vec![Some(3), Some(5), None]);
        let out = oracle_extract(&f, FractalId::new(2, 2).unwrap(), &modulus, &mut ReferenceOracle, 10, 200)
            .unwrap();
        assert_eq!(out.set().unwrap().len(), 10);
        assert!(out.queries().iter().all(|q| q.set.is_empty() && q.answer == 0));
    }

    #[test]
    fn adversary_hits_a_bad_element() {
        // Vertex 0 has limit 1 but is 0 to everything before settling late.
        let mut limits = vec![0u8; 50];
        limits[0] = 1;
        let mut settle: Vec<usize> = (1..=50).collect();
        settle[0] = 50;
        let f = StableColoring::new(limits, settle, []).unwrap();
        let modulus = ModulusApprox::new(vec![Some(3)]);
        let id = FractalId::new(2, 2).unwrap();
        let bad = oracle_extract(&f, id, &modulus, &mut AdversarialOracle, 3, 50).unwrap();
        match bad {
            OracleOutcome::Failure { step, bad_level, .. } => {
                assert_eq!(step, 0);
                assert_eq!(bad_level, Some(0));
            }
            other => panic!("expected failure, got {other:?}"),
        }
        let good = oracle_extract(&f, id, &modulus, &mut ReferenceOracle, 3, 50).unwrap();
        assert_eq!(good.set().unwrap().len(), 3);
    }
}
