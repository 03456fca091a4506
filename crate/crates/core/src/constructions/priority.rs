use serde::Serialize;

use super::script::{AdversaryScript, Measure};
use crate::error::{Error, Result};
use crate::pattern_core::{is_transitive, Coloring, FiniteColoring, Pattern, StableColoring};

/// A requirement: the script must either stay small in measure or its outputs
/// must be able to realize `pattern`.
#[derive(Clone, Debug)]
pub struct Requirement {
    pub pattern: Pattern,
    pub script: AdversaryScript,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RequirementSnapshot {
    pub marker: usize,
    /// Closed intervals `[lo, hi]`, increasing.
    pub state: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub acted: Option<usize>,
    pub measure: Option<Measure>,
    pub injured: Vec<usize>,
    /// Requirement data after this stage's action.
    pub requirements: Vec<RequirementSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    /// The state reached full length: any choice of one element per interval realizes the pattern.
    Realized { state: Vec<(usize, usize)> },
    /// The attention measure from the final marker stays at or below the threshold.
    Quiet { measure: Measure },
    /// The threshold is exceeded but the requirement was not served before the horizon.
    Pending { measure: Measure },
}

#[derive(Clone, Debug, Serialize)]
pub struct PriorityBuild {
    pub horizon: usize,
    #[serde(skip)]
    pub table: FiniteColoring,
    #[serde(skip)]
    pub coloring: StableColoring,
    pub commitments: Vec<u8>,
    pub log: Vec<StageRecord>,
    pub verdicts: Vec<Verdict>,
}

impl PriorityBuild {
    /// Stage after which no commitment changes.
    pub fn last_action(&self) -> Option<usize> {
        self.log.iter().rev().find(|r| r.acted.is_some()).map(|r| r.stage)
    }

    /// `x` precedes `y` in the built order.
    pub fn precedes(&self, x: usize, y: usize) -> bool {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => self.table.color(x, y) == 0,
            std::cmp::Ordering::Greater => self.table.color(y, x) == 1,
            std::cmp::Ordering::Equal => false,
        }
    }
}

/// Stagewise construction with movable markers, in priority order of `reqs`.
///
/// At stage `s` the highest-priority requirement whose script hits
/// `[marker, s]` with measure above `1 - 1/(2|p|)` stacks that interval onto
/// its state, commits its elements and resets every lower requirement. The
/// column `f(·, s)` is written from the commitments held before that action.
pub fn priority_build(reqs: &[Requirement], horizon: usize) -> Result<PriorityBuild> {
    if reqs.iter().any(|r| r.pattern.size() == 0) {
        return Err(Error::contract("requirement patterns must be nonempty"));
    }
    let mut markers: Vec<usize> = (0..reqs.len()).collect();
    let mut states: Vec<Vec<(usize, usize)>> = vec![Vec::new(); reqs.len()];
    let mut commit = vec![0u8; horizon];
    let mut table = FiniteColoring::constant(horizon, 0);
    let mut log = Vec::with_capacity(horizon);

    for s in 0..horizon {
        for x in 0..s {
            table.set(x, s, commit[x]);
        }
        let mut acted = None;
        let mut measure = None;
        let mut injured = Vec::new();
        for (r, req) in reqs.iter().enumerate() {
            let len = req.pattern.size();
            if states[r].len() >= len || markers[r] > s {
                continue;
            }
            let m = req.script.hit_measure(s, markers[r], s);
            if m.exceeds_threshold(len) {
                acted = Some(r);
                measure = Some(m);
                break;
            }
        }
        if let Some(r) = acted {
            let t = states[r].len();
            states[r].push((markers[r], s));
            let p = &reqs[r].pattern;
            let len = p.size();
            for (i, &(lo, hi)) in states[r].iter().enumerate() {
                let c = if t + 1 < len { p.get(i, t + 1) } else { 0 };
                commit[lo..=hi].fill(c);
            }
            markers[r] = s + 1;
            for q in r + 1..reqs.len() {
                markers[q] = markers[q].max(s + 1 + (q - r));
                if !states[q].is_empty() {
                    states[q].clear();
                    injured.push(q);
                }
            }
        }
        log.push(StageRecord {
            stage: s,
            acted,
            measure,
            injured,
            requirements: markers
                .iter()
                .zip(&states)
                .map(|(&marker, state)| RequirementSnapshot {
                    marker,
                    state: state.clone(),
                })
                .collect(),
        });
    }

    let verdicts = reqs
        .iter()
        .enumerate()
        .map(|(r, req)| {
            if states[r].len() == req.pattern.size() {
                return Verdict::Realized {
                    state: states[r].clone(),
                };
            }
            let last = horizon.saturating_sub(1);
            let m = req.script.hit_measure(last, markers[r], last);
            if m.exceeds_threshold(req.pattern.size()) {
                Verdict::Pending { measure: m }
            } else {
                Verdict::Quiet { measure: m }
            }
        })
        .collect();
    let coloring = StableColoring::with_limits(&table, commit.clone())?;
    Ok(PriorityBuild {
        horizon,
        table,
        coloring,
        commitments: commit,
        log,
        verdicts,
    })
}

/// First triple `x < y < z` with `f(x,y) = f(y,z) != f(x,z)`.
pub fn transitivity_violation(f: &impl Coloring) -> Option<(usize, usize, usize)> {
    let n = f.horizon();
    for x in 0..n {
        for y in x + 1..n {
            let c = f.color(x, y);
            for z in y + 1..n {
                if f.color(y, z) == c && f.color(x, z) != c {
                    return Some((x, y, z));
                }
            }
        }
    }
    None
}

/// Every row is constant from the stage after the last action on.
pub fn check_stability(build: &PriorityBuild) -> Result<()> {
    let from = build.last_action().map_or(0, |s| s + 1);
    for x in 0..build.horizon {
        for y in (x + 1).max(from)..build.horizon {
            if build.table.color(x, y) != build.commitments[x] {
                return Err(Error::Contract(format!("row {x} changes at {y} after the last action")));
            }
        }
        if build.coloring.limit(x) != build.commitments[x] {
            return Err(Error::Contract(format!("limit of {x} disagrees with its commitment")));
        }
    }
    Ok(())
}

/// Checks the state invariants at every logged stage: cross colors between
/// intervals follow the pattern, every interval carries enough measure, the
/// intervals are adjacent, and markers of other requirements sit outside.
pub fn check_state_invariants(build: &PriorityBuild, reqs: &[Requirement]) -> Result<()> {
    for rec in &build.log {
        for (r, snap) in rec.requirements.iter().enumerate() {
            let p = &reqs[r].pattern;
            let state = &snap.state;
            let fail = |what: &str| {
                Err(Error::Contract(format!("stage {}: requirement {r}: {what}", rec.stage)))
            };
            if state.len() > p.size() {
                return fail("state longer than its pattern");
            }
            for (i, &(lo_i, hi_i)) in state.iter().enumerate() {
                if lo_i > hi_i || hi_i > rec.stage {
                    return fail("malformed interval");
                }
                for (j, &(lo_j, hi_j)) in state.iter().enumerate().skip(i + 1) {
                    for x in lo_i..=hi_i {
                        for y in lo_j..=hi_j {
                            if build.table.color(x, y) != p.get(i, j) {
                                return fail(&format!("pair ({x},{y}) breaks the pattern"));
                            }
                        }
                    }
                }
                if !reqs[r].script.hit_measure(rec.stage, lo_i, hi_i).exceeds_threshold(p.size()) {
                    return fail(&format!("interval {i} lacks measure"));
                }
                if i + 1 < state.len() && state[i + 1].0 != hi_i + 1 {
                    return fail("intervals are not adjacent");
                }
            }
            if let (Some(&(first, _)), Some(&(_, last))) = (state.first(), state.last()) {
                for (q, other) in rec.requirements.iter().enumerate() {
                    if (q < r && other.marker >= first) || (q > r && other.marker <= last) {
                        return fail(&format!("marker of requirement {q} is inside the state"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks each verdict against the final data.
pub fn check_verdicts(build: &PriorityBuild, reqs: &[Requirement]) -> Result<()> {
    for (r, (v, req)) in build.verdicts.iter().zip(reqs).enumerate() {
        match v {
            Verdict::Realized { state } => {
                let p = &req.pattern;
                if state.len() != p.size() {
                    return Err(Error::Contract(format!("requirement {r}: short realized state")));
                }
                for (i, &(lo_i, hi_i)) in state.iter().enumerate() {
                    for (j, &(lo_j, hi_j)) in state.iter().enumerate().skip(i + 1) {
                        let ok = (lo_i..=hi_i)
                            .all(|x| (lo_j..=hi_j).all(|y| build.table.color(x, y) == p.get(i, j)));
                        if !ok {
                            return Err(Error::Contract(format!("requirement {r}: threat not realized")));
                        }
                    }
                }
            }
            Verdict::Quiet { measure } => {
                if measure.exceeds_threshold(req.pattern.size()) {
                    return Err(Error::Contract(format!("requirement {r}: quiet verdict above threshold")));
                }
            }
            Verdict::Pending { .. } => {
                return Err(Error::Contract(format!("requirement {r}: still pending at the horizon")));
            }
        }
    }
    Ok(())
}

/// Reports whether every scheduled pattern is transitive.
pub fn all_transitive(reqs: &[Requirement]) -> bool {
    reqs.iter().all(|r| is_transitive(&r.pattern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::script::ScriptEntry;

    fn pat01() -> Pattern {
        Pattern::new(2, vec![0]).unwrap()
    }

    #[test]
    fn no_scripts_gives_zero() {
        let reqs = vec![Requirement {
            pattern: pat01(),
            script: AdversaryScript::empty(0),
        }];
        let b = priority_build(&reqs, 12).unwrap();
        assert!(b.log.iter().all(|r| r.acted.is_none()));
        assert!((0..12).all(|x| (x + 1..12).all(|y| b.table.color(x, y) == 0)));
        check_verdicts(&b, &reqs).unwrap();
    }

    #[test]
    fn full_script_realizes_the_pattern() {
        let reqs = vec![Requirement {
            pattern: Pattern::new(2, vec![1]).unwrap(),
            script: AdversaryScript::everything(0, 0, 10),
        }];
        let b = priority_build(&reqs, 10).unwrap();
        assert_eq!(b.log[0].acted, Some(0));
        assert_eq!(b.log[1].acted, Some(0));
        assert_eq!(b.verdicts[0], Verdict::Realized { state: vec![(0, 0), (1, 1)] });
        assert_eq!(b.table.color(0, 1), 1);
        assert_eq!(b.table.color(0, 2), 0);
        check_state_invariants(&b, &reqs).unwrap();
        check_stability(&b).unwrap();
        check_verdicts(&b, &reqs).unwrap();
    }

    #[test]
    fn late_high_priority_injures() {
        let late = AdversaryScript::new(
            0,
            vec![ScriptEntry { prefix: String::new(), stage: 6, emit: vec![6] }],
        )
        .unwrap();
        let reqs = vec![
            Requirement { pattern: pat01(), script: late },
            Requirement {
                pattern: Pattern::new(3, vec![0, 0, 0]).unwrap(),
                script: AdversaryScript::everything(1, 1, 4),
            },
        ];
        let b = priority_build(&reqs, 10).unwrap();
        assert!(b.log[6].injured.contains(&1));
        check_state_invariants(&b, &reqs).unwrap();
        assert!(transitivity_violation(&b.table).is_none());
    }
}
