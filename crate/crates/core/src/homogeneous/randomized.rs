use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{is_bad_element, least_fractal, target_color, verify_homogeneous, MathiasCondition};
use crate::error::{Error, Result};
use crate::fractal::FractalId;
use crate::pattern_core::{Coloring, StableColoring, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceMode {
    /// One uniform digit per level of the block.
    FractalPath,
    /// Block sized for `2u`, then a uniform pick among its first `2^x` elements.
    PowerOfTwo,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtractionConfig {
    thinning: Vec<u64>,
    target: u32,
    pub seed: u64,
    pub stream: u64,
    pub mode: ChoiceMode,
    pub horizon: usize,
}

impl ExtractionConfig {
    /// Validates `2 <= u_0 < u_1 < ...` and `sum 1/u_i < 2^-target`.
    pub fn new(thinning: Vec<u64>, target: u32, seed: u64) -> Result<Self> {
        if thinning.is_empty() {
            return Err(Error::contract("thinning sequence is empty"));
        }
        if thinning[0] < 2 {
            return Err(Error::contract("thinning sequence must start at 2 or above"));
        }
        if thinning.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("thinning sequence must increase strictly"));
        }
        let sum: f64 = thinning.iter().map(|&u| 1.0 / u as f64).sum();
        let bound = 0.5f64.powi(target as i32);
        if sum >= bound {
            return Err(Error::contract(format!(
                "sum of reciprocals {sum:.6} is not below 2^-{target}"
            )));
        }
        Ok(ExtractionConfig {
            thinning,
            target,
            seed,
            stream: 0,
            mode: ChoiceMode::FractalPath,
            horizon: usize::MAX,
        })
    }

    /// `steps` consecutive values starting at `start`.
    pub fn consecutive(start: u64, steps: usize, target: u32, seed: u64) -> Result<Self> {
        Self::new((start..start + steps as u64).collect(), target, seed)
    }

    pub fn with_mode(mut self, mode: ChoiceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn thinning(&self) -> &[u64] {
        &self.thinning
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    /// Upper bound on the failure probability implied by the thinning sequence.
    pub fn failure_bound(&self) -> f64 {
        self.thinning.iter().map(|&u| 1.0 / u as f64).sum()
    }
}

/// Least arity `k*l - 1` whose `n`-fractal keeps the share of elements lying
/// in bad blocks at or below `1/u`.
pub fn block_arity(k: usize, n: usize, u: u64) -> Result<usize> {
    if k < 2 || n == 0 {
        return Err(Error::contract("block arity needs k >= 2 and n >= 1"));
    }
    let e = n as u32;
    for l in 1usize.. {
        let a = (k * l - 1) as u128;
        let inner = (k * (l - 1)) as u128;
        let (Some(total), Some(rest)) = (a.checked_pow(e), inner.checked_pow(e)) else {
            return Err(Error::Resource(format!("block arity overflows for u = {u}")));
        };
        if (u as u128) * (total - rest) <= total {
            return Ok(k * l - 1);
        }
    }
    unreachable!()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RandomStep {
    pub step: usize,
    pub thinning: u64,
    pub arity: usize,
    pub block_min: usize,
    pub block_max: usize,
    pub block_len: usize,
    /// Digits for [`ChoiceMode::FractalPath`], a single index otherwise.
    pub choice: Vec<usize>,
    pub element: usize,
    pub limit: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum RandomOutcome {
    Success {
        color: u8,
        set: VertexSet,
        steps: Vec<RandomStep>,
    },
    Failure {
        color: u8,
        step: usize,
        element: usize,
        steps: Vec<RandomStep>,
    },
}

impl RandomOutcome {
    pub fn set(&self) -> Option<&VertexSet> {
        match self {
            RandomOutcome::Success { set, .. } => Some(set),
            RandomOutcome::Failure { .. } => None,
        }
    }

    pub fn steps(&self) -> &[RandomStep] {
        match self {
            RandomOutcome::Success { steps, .. } | RandomOutcome::Failure { steps, .. } => steps,
        }
    }

    pub fn failed_step(&self) -> Option<usize> {
        match self {
            RandomOutcome::Failure { step, .. } => Some(*step),
            RandomOutcome::Success { .. } => None,
        }
    }
}

/// Seeded extraction of a homogeneous set from a coloring avoiding `avoided`.
///
/// Each step takes the least block of the current reservoir, picks one of its
/// elements at random and thins the reservoir to the new stem.
pub fn randomized_extract(
    f: &StableColoring,
    avoided: FractalId,
    cfg: &ExtractionConfig,
) -> Result<RandomOutcome> {
    if avoided.dim < 2 {
        return Err(Error::Precondition(
            "dimension below 2 has single-element blocks; use unbalanced_extract".into(),
        ));
    }
    if avoided.arity < 2 {
        return Err(Error::contract("avoided fractal needs arity at least 2"));
    }
    let n = avoided.dim - 1;
    let color = target_color(n);
    let horizon = cfg.horizon.min(f.horizon());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);
    let mut cond = MathiasCondition::new(color);
    let mut steps = Vec::with_capacity(cfg.thinning.len());
    for (s, &u) in cfg.thinning.iter().enumerate() {
        let scale = match cfg.mode {
            ChoiceMode::FractalPath => u,
            ChoiceMode::PowerOfTwo => u.saturating_mul(2),
        };
        let arity = block_arity(avoided.arity, n, scale)?;
        let id = FractalId::new(arity, n)?;
        let Some(block) = least_fractal(f, &cond, id, horizon)? else {
            return Err(Error::Resource(format!(
                "degenerate instance: no block of arity {arity} in the reservoir below {horizon} at step {s}; \
                 try unbalanced_extract"
            )));
        };
        let (choice, element) = match cfg.mode {
            ChoiceMode::FractalPath => {
                let path: Vec<usize> = (0..n).map(|_| rng.gen_range(0..arity)).collect();
                let element = block.block(&path)?[0];
                (path, element)
            }
            ChoiceMode::PowerOfTwo => {
                let len = block.elements.len();
                let pow = 1usize << (usize::BITS - 1 - len.leading_zeros());
                let i = rng.gen_range(0..pow);
                (vec![i], block.elements[i])
            }
        };
        let block_max = *block.elements.last().expect("blocks are nonempty");
        steps.push(RandomStep {
            step: s,
            thinning: u,
            arity,
            block_min: block.elements[0],
            block_max,
            block_len: block.elements.len(),
            choice,
            element,
            limit: f.limit(element),
        });
        if is_bad_element(f, element, color) {
            return Ok(RandomOutcome::Failure {
                color,
                step: s,
                element,
                steps,
            });
        }
        cond.extend(element, block_max + 1);
    }
    verify_homogeneous(f, &cond.stem, color)?;
    Ok(RandomOutcome::Success {
        color,
        set: VertexSet::new(cond.stem)?,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ExtractionConfig::new(vec![1, 5], 0, 0).is_err());
        assert!(ExtractionConfig::new(vec![5, 5], 0, 0).is_err());
        assert!(ExtractionConfig::new(vec![2, 3], 1, 0).is_err());
        assert!(ExtractionConfig::consecutive(240, 31, 3, 0).is_ok());
        assert!(ExtractionConfig::consecutive(200, 31, 3, 0).is_err());
    }

    #[test]
    fn arity_schedule() {
        assert_eq!(block_arity(2, 1, 240).unwrap(), 241);
        assert_eq!(block_arity(2, 1, 241).unwrap(), 241);
        assert_eq!(block_arity(2, 1, 242).unwrap(), 243);
        assert_eq!(block_arity(3, 1, 2).unwrap(), 5);
        let a = block_arity(2, 2, 10).unwrap();
        let (t, r) = ((a * a) as u64, ((a - 1) * (a - 1)) as u64);
        assert!(10 * (t - r) <= t);
    }

    #[test]
    fn zero_coloring_always_succeeds() {
        let f = StableColoring::from_limits(vec![0; 600]);
        let cfg = ExtractionConfig::new(vec![4, 8, 16, 32], 0, 7).unwrap();
        let out = randomized_extract(&f, FractalId::new(2, 2).unwrap(), &cfg).unwrap();
        assert_eq!(out.set().unwrap().len(), 4);
        let again = randomized_extract(&f, FractalId::new(2, 2).unwrap(), &cfg).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn low_dimension_is_redirected() {
        let f = StableColoring::from_limits(vec![0; 10]);
        let cfg = ExtractionConfig::new(vec![4], 0, 0).unwrap();
        assert!(matches!(
            randomized_extract(&f, FractalId::new(2, 1).unwrap(), &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exhausted_horizon_is_degenerate() {
        let f = StableColoring::from_limits(vec![0; 10]);
        let cfg = ExtractionConfig::new(vec![40], 0, 0).unwrap();
        let err = randomized_extract(&f, FractalId::new(2, 2).unwrap(), &cfg).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }
}
