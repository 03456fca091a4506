use std::collections::BTreeSet;

use serde::Serialize;

use super::modulus::ModulusApprox;
use crate::error::{Error, Result};
use crate::homogeneous::{EscapeQuery, EscapingOracle};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Harvest {
    pub x: usize,
    pub position: usize,
    /// First stage whose approximation reaches `position`.
    pub stage: usize,
    pub block: usize,
    pub element: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EscapeViolation {
    pub x: usize,
    pub answer: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EscapeRun {
    pub harvested: Vec<Harvest>,
    pub violations: Vec<EscapeViolation>,
    /// `(x, answer)` for every query.
    pub answers: Vec<(usize, usize)>,
}

impl EscapeRun {
    pub fn elements(&self) -> BTreeSet<usize> {
        self.harvested.iter().map(|h| h.element).collect()
    }
}

/// Race a guess source against the modulus approximation to pick elements of
/// the family outside `bad`.
///
/// For each argument `x`, the excluded positions are `0..x` together with the
/// positions of bad elements in every block named by a change point. The
/// answer is harvested at the first stage `< horizon` whose approximation
/// reaches it, from the block that approximation names.
pub fn escaping_select(
    family: &[Vec<usize>],
    bad: &BTreeSet<usize>,
    k: usize,
    modulus: &ModulusApprox,
    guess: &mut dyn EscapingOracle,
    horizon: usize,
) -> Result<EscapeRun> {
    for (i, block) in family.iter().enumerate() {
        if block.len() < i || block.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract(format!("block {i} must be increasing with at least {i} elements")));
        }
        let hits = block.iter().filter(|e| bad.contains(e)).count();
        if hits > k {
            return Err(Error::Precondition(format!("block {i} meets the bad set {hits} times, above {k}")));
        }
    }
    let mut run = EscapeRun::default();
    for x in 1..=modulus.max_x().min(horizon) {
        let points = modulus.change_points(x);
        let mut excluded: BTreeSet<usize> = (0..x).collect();
        for &m in &points {
            if let Some(block) = family.get(m) {
                excluded.extend(block.iter().enumerate().filter(|(_, e)| bad.contains(e)).map(|(i, _)| i));
            }
        }
        let members: Vec<usize> = excluded.into_iter().collect();
        let query = EscapeQuery::new(x, 0, &[], x * (k + 1), &members);
        let answer = guess.answer(&query);
        run.answers.push((x, answer));
        if query.contains(answer) {
            run.violations.push(EscapeViolation {
                x,
                answer,
                reason: "answer lies in the excluded set".into(),
            });
            continue;
        }
        let Some(stage) = (0..horizon).find(|&s| modulus.approx(s, x) >= answer) else {
            continue;
        };
        let block = modulus.approx(stage, x);
        let Some(&element) = family.get(block).and_then(|b| b.get(answer)) else {
            continue;
        };
        if bad.contains(&element) {
            run.violations.push(EscapeViolation {
                x,
                answer,
                reason: format!("harvested element {element} is bad"),
            });
            continue;
        }
        run.harvested.push(Harvest {
            x,
            position: answer,
            stage,
            block,
            element,
        });
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::{AdversarialOracle, ReferenceOracle};

    fn family(blocks: usize, width: usize) -> Vec<Vec<usize>> {
        (0..blocks).map(|i| (i * width..(i + 1) * width).collect()).collect()
    }

    #[test]
    fn empty_bad_set_harvests() {
        let m = ModulusApprox::new((0..10).map(|e| Some(10 + e)).collect());
        let fam = family(25, 25);
        let run = escaping_select(&fam, &BTreeSet::new(), 0, &m, &mut ReferenceOracle, 40).unwrap();
        assert!(run.violations.is_empty());
        assert_eq!(run.harvested.len(), 10);
        assert!(run.harvested.iter().all(|h| h.position == h.x));
    }

    #[test]
    fn minima_are_avoided() {
        let m = ModulusApprox::new((0..10).map(|e| Some(10 + e)).collect());
        let fam = family(25, 25);
        let bad: BTreeSet<usize> = fam.iter().map(|b| b[0]).collect();
        let run = escaping_select(&fam, &bad, 1, &m, &mut ReferenceOracle, 40).unwrap();
        assert!(run.violations.is_empty());
        assert!(run.elements().is_disjoint(&bad));
        let adv = escaping_select(&fam, &bad, 1, &m, &mut AdversarialOracle, 40).unwrap();
        assert!(!adv.violations.is_empty());
    }

    #[test]
    fn overloaded_blocks_are_rejected() {
        let m = ModulusApprox::new(vec![Some(1)]);
        let fam = family(3, 3);
        let bad: BTreeSet<usize> = [3, 4].into_iter().collect();
        assert!(escaping_select(&fam, &bad, 1, &m, &mut ReferenceOracle, 5).is_err());
    }
}
