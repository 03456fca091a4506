use serde::Serialize;

use super::mirror::LinearOrderView;
use crate::error::{Error, Result};
use crate::pattern_core::{find_realization, FiniteColoring, SearchOutcome, VertexSet, DEFAULT_BUDGET};
use crate::perm_algebra::{separating_tree, Permutation, SeparatingTree, SumOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdsConfig {
    /// Length at which a monotone sequence is returned.
    pub target: usize,
    /// A side of an element counts as unbounded once it has this many elements.
    pub threshold: usize,
}

impl Default for AdsConfig {
    fn default() -> Self {
        AdsConfig {
            target: 20,
            threshold: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum AdsOutcome {
    /// Numerically increasing and monotone in the order.
    Monotone { ascending: bool, sequence: Vec<usize> },
    /// The horizon ran out; `frontier` is the longest partial sequence reached.
    Inconclusive { frontier: Vec<usize> },
}

enum Term {
    Leaf,
    Sum(SumOp, Box<Term>, Box<Term>),
}

impl Term {
    fn from_tree(t: &SeparatingTree) -> Term {
        match t {
            SeparatingTree::Leaf => Term::Leaf,
            SeparatingTree::Node { op, children } => {
                let mut it = children.iter().rev().map(Term::from_tree);
                let last = it.next().expect("nodes have children");
                it.fold(last, |acc, c| Term::Sum(*op, Box::new(c), Box::new(acc)))
            }
        }
    }
}

enum Step {
    Found(Vec<usize>),
    Monotone(bool, Vec<usize>),
    Stuck(Vec<usize>),
}

struct Search<'a, L: LinearOrderView> {
    order: &'a L,
    cfg: AdsConfig,
}

impl<L: LinearOrderView> Search<'_, L> {
    fn appear(&self, domain: &[usize], term: &Term) -> Step {
        let (op, left, right) = match term {
            Term::Leaf => {
                return match domain.first() {
                    Some(&x) => Step::Found(vec![x]),
                    None => Step::Stuck(Vec::new()),
                }
            }
            Term::Sum(op, l, r) => (*op, l, r),
        };
        let up = op == SumOp::Direct;
        // `beyond(a, b)`: `b` lies on the side of `a` where the right operand goes.
        let beyond = |a: usize, b: usize| if up { self.order.precedes(a, b) } else { self.order.precedes(b, a) };
        let mut extremes: Vec<usize> = Vec::new();
        let mut floor = 0usize;
        loop {
            let sub: Vec<usize> = domain
                .iter()
                .copied()
                .filter(|&x| x >= floor && extremes.iter().all(|&m| beyond(x, m)))
                .collect();
            let set = match self.appear(&sub, left) {
                Step::Found(set) => set,
                Step::Stuck(frontier) => {
                    return Step::Stuck(if frontier.len() > extremes.len() { frontier } else { extremes })
                }
                mono => return mono,
            };
            let top = *set.iter().max().expect("nonempty");
            let ext = set
                .iter()
                .copied()
                .reduce(|a, b| if beyond(a, b) { b } else { a })
                .expect("nonempty");
            let side: Vec<usize> = domain.iter().copied().filter(|&y| y > top && beyond(ext, y)).collect();
            if side.len() >= self.cfg.threshold {
                return match self.appear(&side, right) {
                    Step::Found(rest) => Step::Found(set.into_iter().chain(rest).collect()),
                    other => other,
                };
            }
            extremes.push(ext);
            floor = top + 1;
            if extremes.len() >= self.cfg.target {
                return Step::Monotone(!up, extremes);
            }
        }
    }
}

/// Monotone sequence from an order that avoids `p`, by descending the
/// separating tree of `p`.
pub fn ads_extract(
    order: &impl LinearOrderView,
    p: &Permutation,
    horizon: usize,
    cfg: AdsConfig,
) -> Result<AdsOutcome> {
    let tree = separating_tree(p).ok_or_else(|| Error::Domain(format!("{p} is not separable")))?;
    let n = horizon.min(order.len());
    let f = FiniteColoring::from_fn(n, |x, y| u8::from(!order.precedes(x, y)));
    match find_realization(&f, &VertexSet::range(0, n), &p.pattern(), DEFAULT_BUDGET)? {
        SearchOutcome::ProvenAbsent => {}
        SearchOutcome::Found(w) => {
            return Err(Error::Witness {
                message: format!("the order realizes {p}"),
                witness: w.into_vec(),
            })
        }
        SearchOutcome::BudgetExhausted { nodes } => {
            return Err(Error::Resource(format!("avoidance check stopped after {nodes} nodes")))
        }
    }
    let search = Search { order, cfg };
    let domain: Vec<usize> = (0..n).collect();
    match search.appear(&domain, &Term::from_tree(&tree)) {
        Step::Found(w) => Err(Error::Witness {
            message: format!("the order realizes {p}"),
            witness: w,
        }),
        Step::Stuck(frontier) => Ok(AdsOutcome::Inconclusive { frontier }),
        Step::Monotone(ascending, sequence) => {
            let numeric = sequence.windows(2).all(|w| w[0] < w[1]);
            let ordered = sequence
                .windows(2)
                .all(|w| order.precedes(w[0], w[1]) == ascending);
            if !(numeric && ordered) {
                return Err(Error::Contract("extracted sequence is not monotone".into()));
            }
            Ok(AdsOutcome::Monotone { ascending, sequence })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::mirror::RankOrder;

    #[test]
    fn identity_gives_ascending() {
        let out = ads_extract(&RankOrder::identity(50), &"10".parse().unwrap(), 50, AdsConfig::default()).unwrap();
        assert_eq!(
            out,
            AdsOutcome::Monotone {
                ascending: true,
                sequence: (0..20).collect()
            }
        );
    }

    #[test]
    fn reversed_gives_descending() {
        let out = ads_extract(&RankOrder::reversed(50), &"01".parse().unwrap(), 50, AdsConfig::default()).unwrap();
        assert!(matches!(out, AdsOutcome::Monotone { ascending: false, ref sequence } if sequence.len() == 20));
    }

    #[test]
    fn realized_pattern_is_an_instance_error() {
        let err = ads_extract(&RankOrder::identity(10), &"01".parse().unwrap(), 10, AdsConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Witness { .. }));
    }

    #[test]
    fn short_horizon_is_inconclusive() {
        let out = ads_extract(&RankOrder::identity(5), &"10".parse().unwrap(), 5, AdsConfig::default()).unwrap();
        assert!(matches!(out, AdsOutcome::Inconclusive { ref frontier } if frontier.len() == 5));
    }
}
