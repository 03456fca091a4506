use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Longest oracle prefix a script may mention.
pub const MAX_PREFIX: usize = 64;

/// Exact dyadic measure in `[0, 1]`, stored as a numerator over `2^64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Measure(u128);

impl Measure {
    pub const ZERO: Measure = Measure(0);
    pub const ONE: Measure = Measure(1 << MAX_PREFIX);

    pub fn of_cylinder(len: usize) -> Measure {
        Measure(1u128 << (MAX_PREFIX - len))
    }

    pub fn numerator(self) -> u128 {
        self.0
    }

    /// `self > num / den`, exactly.
    pub fn exceeds(self, num: u128, den: u128) -> bool {
        self.0 * den > num << MAX_PREFIX
    }

    /// `self > 1 - 1/(2 len)`: the attention threshold for a pattern of size `len`.
    pub fn exceeds_threshold(self, len: usize) -> bool {
        let den = 2 * len as u128;
        self.exceeds(den - 1, den)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / (1u128 << MAX_PREFIX) as f64
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{MAX_PREFIX}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScriptEntry {
    /// Oracle prefix as a string of `0`/`1`; empty for every oracle.
    pub prefix: String,
    pub stage: usize,
    pub emit: Vec<usize>,
}

/// A finite stand-in for an enumeration relative to an oracle: every oracle
/// extending `prefix` enumerates `emit` from `stage` on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdversaryScript {
    pub id: usize,
    entries: Vec<ScriptEntry>,
}

impl AdversaryScript {
    pub fn new(id: usize, entries: Vec<ScriptEntry>) -> Result<Self> {
        let mut last: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, en) in entries.iter().enumerate() {
            if en.prefix.len() > MAX_PREFIX || en.prefix.chars().any(|c| c != '0' && c != '1') {
                return Err(Error::contract(format!("entry {i}: prefix must be at most {MAX_PREFIX} bits")));
            }
            if en.prefix.len() > en.stage {
                return Err(Error::contract(format!(
                    "entry {i}: prefix longer than its stage {}",
                    en.stage
                )));
            }
            if en.emit.is_empty() {
                return Err(Error::contract(format!("entry {i}: nothing emitted")));
            }
            if let Some(&prev) = last.get(en.prefix.as_str()) {
                if en.stage <= prev {
                    return Err(Error::contract(format!(
                        "entry {i}: stages for prefix '{}' must increase strictly",
                        en.prefix
                    )));
                }
            }
            last.insert(&en.prefix, en.stage);
        }
        Ok(AdversaryScript { id, entries })
    }

    pub fn empty(id: usize) -> Self {
        AdversaryScript { id, entries: Vec::new() }
    }

    /// Every oracle enumerates `s` at stage `s`, for `s` in `from..to`.
    pub fn everything(id: usize, from: usize, to: usize) -> Self {
        let entries = (from..to)
            .map(|s| ScriptEntry {
                prefix: String::new(),
                stage: s,
                emit: vec![s],
            })
            .collect();
        AdversaryScript { id, entries }
    }

    pub fn entries(&self) -> &[ScriptEntry] {
        &self.entries
    }

    /// Elements enumerated by stage `stage` for an oracle extending `prefix`.
    pub fn enumerated(&self, prefix: &str, stage: usize) -> BTreeSet<usize> {
        self.entries
            .iter()
            .filter(|en| en.stage <= stage && prefix.starts_with(en.prefix.as_str()))
            .flat_map(|en| en.emit.iter().copied())
            .collect()
    }

    /// Minimal prefixes whose oracles enumerate something in `[lo, hi]` by `stage`.
    pub fn hitting_prefixes(&self, stage: usize, lo: usize, hi: usize) -> Vec<String> {
        let mut prefixes: Vec<&str> = self
            .entries
            .iter()
            .filter(|en| en.stage <= stage && en.emit.iter().any(|&v| lo <= v && v <= hi))
            .map(|en| en.prefix.as_str())
            .collect();
        prefixes.sort_unstable();
        prefixes.dedup();
        let mut minimal: Vec<String> = Vec::new();
        for p in prefixes {
            if minimal.last().is_some_and(|m| p.starts_with(m.as_str())) {
                continue;
            }
            minimal.push(p.to_string());
        }
        minimal
    }

    /// Measure of the oracles enumerating an element of `[lo, hi]` by `stage`.
    pub fn hit_measure(&self, stage: usize, lo: usize, hi: usize) -> Measure {
        if lo > hi {
            return Measure::ZERO;
        }
        let total = self
            .hitting_prefixes(stage, lo, hi)
            .iter()
            .map(|p| Measure::of_cylinder(p.len()).0)
            .sum();
        Measure(total)
    }

    pub fn to_file_string(&self) -> String {
        self.entries
            .iter()
            .map(|en| {
                let prefix = if en.prefix.is_empty() { "-" } else { en.prefix.as_str() };
                let emit: Vec<String> = en.emit.iter().map(|v| v.to_string()).collect();
                format!("e {} prefix {prefix} stage {} emit {}\n", self.id, en.stage, emit.join(","))
            })
            .collect()
    }
}

/// Parses script lines `e <id> prefix <bits|-> stage <s> emit <n1,n2,...>`,
/// grouped by id in order of first appearance. `#` starts a comment.
pub fn parse_scripts(text: &str) -> Result<Vec<AdversaryScript>> {
    let mut order: Vec<usize> = Vec::new();
    let mut by_id: BTreeMap<usize, (Vec<ScriptEntry>, Vec<usize>)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 8 || toks[0] != "e" || toks[2] != "prefix" || toks[4] != "stage" || toks[6] != "emit" {
            return Err(Error::parse(line_no, "expected `e <id> prefix <bits> stage <s> emit <list>`"));
        }
        let num = |t: &str| t.parse::<usize>().map_err(|_| Error::parse(line_no, format!("bad number '{t}'")));
        let id = num(toks[1])?;
        let prefix = if toks[3] == "-" { String::new() } else { toks[3].to_string() };
        let stage = num(toks[5])?;
        let emit = toks[7].split(',').map(num).collect::<Result<Vec<_>>>()?;
        if !by_id.contains_key(&id) {
            order.push(id);
        }
        let slot = by_id.entry(id).or_default();
        slot.0.push(ScriptEntry { prefix, stage, emit });
        slot.1.push(line_no);
    }
    order
        .into_iter()
        .map(|id| {
            let (entries, lines) = by_id.remove(&id).expect("id recorded");
            AdversaryScript::new(id, entries).map_err(|e| {
                let msg = e.to_string();
                let idx = msg
                    .strip_prefix("contract violation: entry ")
                    .and_then(|r| r.split(':').next())
                    .and_then(|n| n.parse::<usize>().ok());
                Error::parse(idx.map_or(0, |k| lines[k]), msg)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "e 0 prefix - stage 1 emit 1\ne 0 prefix 01 stage 3 emit 2,5\ne 2 prefix 1 stage 2 emit 7\n";
        let scripts = parse_scripts(text).unwrap();
        assert_eq!(scripts.len(), 2);
        assert_eq!(scripts[0].to_file_string() + &scripts[1].to_file_string(), text);
        assert_eq!(scripts[0].enumerated("011", 3), BTreeSet::from([1, 2, 5]));
        assert_eq!(scripts[0].enumerated("1", 3), BTreeSet::from([1]));
    }

    #[test]
    fn non_monotone_stages_are_rejected() {
        let err = parse_scripts("e 0 prefix 1 stage 4 emit 1\ne 0 prefix 1 stage 4 emit 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_scripts("e 0 prefix 0101 stage 2 emit 1\n").is_err());
        assert!(parse_scripts("e 0 prefix 2 stage 2 emit 1\n").is_err());
    }

    #[test]
    fn measures_are_exact() {
        let s = AdversaryScript::new(
            0,
            vec![
                ScriptEntry { prefix: "0".into(), stage: 1, emit: vec![3] },
                ScriptEntry { prefix: "01".into(), stage: 2, emit: vec![4] },
                ScriptEntry { prefix: "11".into(), stage: 2, emit: vec![3] },
            ],
        )
        .unwrap();
        // Cylinders [0] and [11] cover 3/4; [01] is inside [0].
        assert_eq!(s.hit_measure(2, 3, 4), Measure(3 << 62));
        assert_eq!(s.hit_measure(1, 3, 4), Measure(1 << 63));
        assert!(s.hit_measure(2, 3, 4).exceeds_threshold(1));
        assert!(!s.hit_measure(2, 3, 4).exceeds_threshold(2));
        assert!(Measure::ONE.exceeds_threshold(5));
    }
}
