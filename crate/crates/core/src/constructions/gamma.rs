use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::script::AdversaryScript;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Inc,
    Dec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum GammaEventKind {
    Disable { block: usize },
    Enable { block: usize },
    /// Everything placed from now on goes above everything placed before.
    Cut { witness: usize },
    Place { element: usize, member: bool, key: Vec<usize> },
    Truncate { element: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaEvent {
    /// Block indices from the root down to the acting node.
    pub node: Vec<usize>,
    /// Position of the element being placed in the root ground set.
    pub stage: usize,
    #[serde(flatten)]
    pub kind: GammaEventKind,
}

/// One level of the recursive builder: the first `2^(e+1)` elements, then
/// one sub-builder per residue class of the remaining positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaNode {
    pub e: usize,
    pub cuts: bool,
    pub elements: Vec<usize>,
    pub member: Vec<bool>,
    pub keys: Vec<Vec<usize>>,
    /// Block disabled when the horizon is reached.
    pub disabled: Option<usize>,
    pub blocks: Vec<GammaNode>,
}

impl GammaNode {
    pub fn width(&self) -> usize {
        1 << (self.e + 1)
    }
}

/// Order computed on a finite ground set, with its provenance log.
#[derive(Clone, Debug)]
pub struct BuiltOrder {
    pub direction: Direction,
    pub horizon: usize,
    pub ground: Vec<usize>,
    /// Members in increasing numeric order.
    pub members: Vec<usize>,
    pub keys: BTreeMap<usize, Vec<usize>>,
    pub truncated: Vec<usize>,
    pub log: Vec<GammaEvent>,
    pub root: GammaNode,
}

impl BuiltOrder {
    pub fn contains(&self, x: usize) -> bool {
        self.keys.contains_key(&x)
    }

    /// `Some(a ⊑ b)` when both are members.
    pub fn precedes(&self, a: usize, b: usize) -> Option<bool> {
        Some(self.keys.get(&a)? < self.keys.get(&b)?)
    }

    /// Members sorted by the built order.
    pub fn sorted_members(&self) -> Vec<usize> {
        let mut m = self.members.clone();
        m.sort_by(|a, b| self.keys[a].cmp(&self.keys[b]));
        m
    }

    /// Membership and keys rebuilt from the log alone.
    pub fn replay(log: &[GammaEvent]) -> (Vec<usize>, BTreeMap<usize, Vec<usize>>) {
        let mut keys = BTreeMap::new();
        for ev in log {
            if let GammaEventKind::Place { element, member: true, key } = &ev.kind {
                keys.insert(*element, key.clone());
            }
        }
        (keys.keys().copied().collect(), keys)
    }
}

struct Ctx<'a> {
    scripts: &'a BTreeMap<usize, AdversaryScript>,
    levels: usize,
    log: Vec<GammaEvent>,
    truncated: Vec<usize>,
}

impl Ctx<'_> {
    fn enumerated(&self, e: usize, stage: usize) -> BTreeSet<usize> {
        self.scripts
            .get(&e)
            .map(|s| s.enumerated("", stage))
            .unwrap_or_default()
    }
}

/// Builds the order of the recursive construction started at index `e`.
///
/// `ground` lists the elements in stage order; `levels` bounds the number of
/// nested levels that receive blocks. Elements that would need a deeper level
/// are left out and listed in `truncated`.
pub fn gamma_build(
    direction: Direction,
    e: usize,
    ground: &[usize],
    scripts: &[AdversaryScript],
    horizon: usize,
    levels: usize,
) -> Result<BuiltOrder> {
    if ground.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("ground set must increase strictly"));
    }
    if e >= 48 {
        return Err(Error::contract("starting index is too large"));
    }
    let ground: Vec<usize> = ground.iter().copied().filter(|&x| x < horizon).collect();
    let mut by_id = BTreeMap::new();
    for s in scripts {
        if by_id.insert(s.id, s.clone()).is_some() {
            return Err(Error::contract(format!("two scripts share id {}", s.id)));
        }
    }
    let mut ctx = Ctx {
        scripts: &by_id,
        levels,
        log: Vec::new(),
        truncated: Vec::new(),
    };
    let staged: Vec<(usize, usize)> = ground.iter().enumerate().map(|(s, &x)| (x, s)).collect();
    let root = build_node(&mut ctx, e, direction == Direction::Dec, &staged, 0, &mut Vec::new());
    for (s, &x) in ground.iter().enumerate() {
        ctx.log.push(GammaEvent {
            node: Vec::new(),
            stage: s,
            kind: GammaEventKind::Place {
                element: x,
                member: root.member[s],
                key: root.keys[s].clone(),
            },
        });
    }
    ctx.log.sort_by_key(|ev| ev.stage);
    let keys: BTreeMap<usize, Vec<usize>> = ground
        .iter()
        .enumerate()
        .filter(|&(s, _)| root.member[s])
        .map(|(s, &x)| (x, root.keys[s].clone()))
        .collect();
    ctx.truncated.sort_unstable();
    Ok(BuiltOrder {
        direction,
        horizon,
        members: keys.keys().copied().collect(),
        keys,
        ground,
        truncated: ctx.truncated,
        log: ctx.log,
        root,
    })
}

fn build_node(
    ctx: &mut Ctx<'_>,
    e: usize,
    cuts: bool,
    elems: &[(usize, usize)],
    depth: usize,
    path: &mut Vec<usize>,
) -> GammaNode {
    let width = 1usize << (e + 1);
    let len = elems.len();
    let has_blocks = len > width && depth + 1 < ctx.levels;
    let mut blocks = Vec::new();
    if has_blocks {
        for i in 0..width {
            let sub: Vec<(usize, usize)> = elems[width + i..].iter().step_by(width).copied().collect();
            path.push(i);
            blocks.push(build_node(ctx, e + 1, true, &sub, depth + 1, path));
            path.pop();
        }
    }
    let mut member = vec![false; len];
    let mut keys: Vec<Vec<usize>> = vec![Vec::new(); len];
    let mut placed_in: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); width];
    let mut disabled = None;
    let mut epoch = 0usize;
    let mut witnessed: BTreeSet<usize> = BTreeSet::new();
    let mut placed: BTreeSet<usize> = BTreeSet::new();
    let log_at = |ctx: &mut Ctx<'_>, stage: usize, kind: GammaEventKind| {
        ctx.log.push(GammaEvent {
            node: path.clone(),
            stage,
            kind,
        })
    };
    for (j, &(x, stage)) in elems.iter().enumerate() {
        let w = ctx.enumerated(e, stage);
        if cuts {
            let fresh: Vec<usize> = w.intersection(&placed).filter(|y| !witnessed.contains(y)).copied().collect();
            if let Some(&first) = fresh.first() {
                witnessed.extend(fresh);
                epoch += 1;
                log_at(ctx, stage, GammaEventKind::Cut { witness: first });
            }
        }
        if j < width {
            member[j] = true;
            keys[j] = vec![2 * j];
        } else if !has_blocks {
            ctx.truncated.push(x);
            log_at(ctx, stage, GammaEventKind::Truncate { element: x });
            continue;
        } else {
            if disabled.is_none() {
                disabled = Some(0);
                log_at(ctx, stage, GammaEventKind::Disable { block: 0 });
            }
            loop {
                let cur = disabled.expect("a block is disabled");
                let next = (cur + 1..width).find(|&i| w.intersection(&placed_in[i]).next().is_some());
                let Some(i) = next else { break };
                log_at(ctx, stage, GammaEventKind::Enable { block: cur });
                log_at(ctx, stage, GammaEventKind::Disable { block: i });
                disabled = Some(i);
            }
            let i = (j - width) % width;
            let t = (j - width) / width;
            let child = &blocks[i];
            if child.member[t] && disabled != Some(i) {
                member[j] = true;
                keys[j] = std::iter::once(2 * i + 1).chain(child.keys[t].iter().copied()).collect();
                placed_in[i].insert(x);
            }
        }
        if member[j] {
            placed.insert(x);
            if cuts {
                keys[j].insert(0, epoch);
            }
        }
    }
    GammaNode {
        e,
        cuts,
        elements: elems.iter().map(|&(x, _)| x).collect(),
        member,
        keys,
        disabled,
        blocks,
    }
}

/// Replays the enable/disable events per node and checks that exactly one
/// block is disabled after every stage once the first block was disabled.
pub fn check_single_disabled(log: &[GammaEvent]) -> Result<()> {
    let mut state: BTreeMap<&[usize], (BTreeSet<usize>, usize)> = BTreeMap::new();
    let check = |node: &[usize], set: &BTreeSet<usize>, stage: usize| {
        if set.len() != 1 {
            return Err(Error::Contract(format!(
                "node {node:?} has {} disabled blocks after stage {stage}",
                set.len()
            )));
        }
        Ok(())
    };
    for (idx, ev) in log.iter().enumerate() {
        let (set, _) = state.entry(ev.node.as_slice()).or_insert_with(|| (BTreeSet::new(), ev.stage));
        match ev.kind {
            GammaEventKind::Disable { block } => {
                set.insert(block);
            }
            GammaEventKind::Enable { block } => {
                if !set.remove(&block) {
                    return Err(Error::Contract(format!(
                        "node {:?} re-enables block {block} that was not disabled",
                        ev.node
                    )));
                }
            }
            _ => continue,
        }
        let stage_ends = log[idx + 1..]
            .iter()
            .find(|later| later.node == ev.node && matches!(later.kind, GammaEventKind::Enable { .. } | GammaEventKind::Disable { .. }))
            .is_none_or(|later| later.stage != ev.stage);
        if stage_ends {
            check(&ev.node, set, ev.stage)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DeltaStatus {
    Success,
    /// The stream or the built depth ran out before a failure could occur.
    LengthLimited { levels: usize },
    /// The block chosen at this level is the one left disabled.
    Failure { level: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaOutcome {
    pub sequence: Vec<usize>,
    pub status: DeltaStatus,
    pub bits_used: usize,
}

impl DeltaOutcome {
    pub fn failed(&self) -> bool {
        matches!(self.status, DeltaStatus::Failure { .. })
    }
}

/// Follows the bit stream down the blocks of `built`: each level reads
/// `e+1` bits to pick a start element and the block after it.
pub fn delta_extract(direction: Direction, e: usize, bits: &[bool], built: &BuiltOrder) -> Result<DeltaOutcome> {
    if built.direction != direction || built.root.e != e {
        return Err(Error::contract("stream extraction must match the built order"));
    }
    let mut used = 0usize;
    let (sequence, status) = descend(&built.root, bits, &mut used, 0);
    if !matches!(status, DeltaStatus::Failure { .. }) {
        let ok_member = sequence.iter().all(|x| built.contains(*x));
        let ok_num = sequence.windows(2).all(|w| w[0] < w[1]);
        let ok_order = sequence.windows(2).all(|w| built.precedes(w[0], w[1]) == Some(true));
        if !(ok_member && ok_num && ok_order) {
            return Err(Error::Contract("extracted sequence is not doubly increasing".into()));
        }
    }
    Ok(DeltaOutcome {
        sequence,
        status,
        bits_used: used,
    })
}

fn descend(node: &GammaNode, bits: &[bool], used: &mut usize, level: usize) -> (Vec<usize>, DeltaStatus) {
    let need = node.e + 1;
    if bits.len() < *used + need {
        return (Vec::new(), DeltaStatus::LengthLimited { levels: level });
    }
    let j = bits[*used..*used + need].iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    *used += need;
    if j >= node.elements.len() {
        return (Vec::new(), DeltaStatus::LengthLimited { levels: level });
    }
    let mut out = vec![node.elements[j]];
    if node.blocks.is_empty() {
        return (out, DeltaStatus::LengthLimited { levels: level + 1 });
    }
    if node.disabled == Some(j) {
        return (out, DeltaStatus::Failure { level });
    }
    let width = node.width();
    let (sub, status) = descend(&node.blocks[j], bits, used, level + 1);
    let child = &node.blocks[j];
    for x in sub {
        let t = child.elements.binary_search(&x).expect("child element");
        if node.member[width + j + t * width] {
            out.push(x);
        }
    }
    (out, status)
}

/// The uniform success probability lower bound over `levels` levels starting at `e`.
pub fn delta_success_bound(e: usize, levels: usize) -> f64 {
    (e..e + levels).map(|l| 1.0 - 0.5f64.powi(l as i32 + 1)).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::script::ScriptEntry;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn empty_scripts_keep_first_block_disabled() {
        let ground: Vec<usize> = (0..40).collect();
        let b = gamma_build(Direction::Inc, 0, &ground, &[], 40, 3).unwrap();
        assert_eq!(b.root.disabled, Some(0));
        // Block 0 holds positions 2, 4, 6, ...; none of them is a member.
        assert!((2..40).step_by(2).all(|x| !b.contains(x)));
        assert_eq!(b.precedes(0, 1), Some(true));
        assert_eq!(b.precedes(1, 3), Some(true));
        check_single_disabled(&b.log).unwrap();
        let (members, keys) = BuiltOrder::replay(&b.log);
        assert_eq!(members, b.members);
        assert_eq!(keys, b.keys);
    }

    #[test]
    fn first_elements_increase() {
        let ground: Vec<usize> = (0..64).collect();
        let b = gamma_build(Direction::Inc, 2, &ground, &[], 64, 2).unwrap();
        assert!((0..7).all(|x| b.precedes(x, x + 1) == Some(true)));
    }

    #[test]
    fn hits_move_the_disabled_block() {
        // Block 1 (odd positions from 3 on) is hit at stage 10.
        let s = AdversaryScript::new(0, vec![ScriptEntry { prefix: String::new(), stage: 10, emit: vec![3] }]).unwrap();
        let ground: Vec<usize> = (0..40).collect();
        let b = gamma_build(Direction::Inc, 0, &ground, &[s], 40, 3).unwrap();
        assert_eq!(b.root.disabled, Some(1));
        assert!(b.contains(3));
        assert!(!b.contains(11));
        assert!(b.contains(12));
        check_single_disabled(&b.log).unwrap();
    }

    #[test]
    fn stream_choices() {
        let ground: Vec<usize> = (0..200).collect();
        let b = gamma_build(Direction::Dec, 0, &ground, &[], 200, 3).unwrap();
        let ok = delta_extract(Direction::Dec, 0, &bits("1" ), &b).unwrap();
        assert_eq!(ok.sequence, vec![1]);
        assert!(matches!(ok.status, DeltaStatus::LengthLimited { .. }));
        let fail = delta_extract(Direction::Dec, 0, &bits("0"), &b).unwrap();
        assert!(fail.failed());
        let deeper = delta_extract(Direction::Dec, 0, &bits("111"), &b).unwrap();
        assert!(deeper.sequence.len() >= 2);
        assert!(deeper.sequence.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn dec_cuts_lift_later_elements() {
        let s = AdversaryScript::new(0, vec![ScriptEntry { prefix: String::new(), stage: 5, emit: vec![1] }]).unwrap();
        let ground: Vec<usize> = (0..30).collect();
        let b = gamma_build(Direction::Dec, 0, &ground, &[s], 30, 2).unwrap();
        for later in b.members.iter().copied().filter(|&x| x >= 5) {
            for earlier in b.members.iter().copied().filter(|&x| x < 5) {
                assert_eq!(b.precedes(earlier, later), Some(true));
            }
        }
        assert!(b.log.iter().any(|ev| matches!(ev.kind, GammaEventKind::Cut { witness: 1 })));
    }

    #[test]
    fn success_bound_exceeds_a_quarter() {
        assert!(delta_success_bound(0, 4) > 0.25);
        assert!(delta_success_bound(0, 30) > 0.25);
    }
}
