use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Stagewise approximation of a settling-time modulus.
///
/// Index `e` settles at stage `halting[e]` (or never). The approximation at
/// stage `s` for argument `x` is the largest stage `<= s` at which some `e < x`
/// settled, or 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModulusApprox {
    halting: Vec<Option<usize>>,
}

impl ModulusApprox {
    pub fn new(halting: Vec<Option<usize>>) -> Self {
        ModulusApprox { halting }
    }

    /// Each index settles with probability `p`, at a uniform stage in `1..=max_stage`.
    pub fn seeded(len: usize, p: f64, max_stage: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || max_stage == 0 {
            return Err(Error::contract("need 0 <= p <= 1 and a positive stage bound"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let halting = (0..len)
            .map(|_| rng.gen_bool(p).then(|| rng.gen_range(1..=max_stage)))
            .collect();
        Ok(ModulusApprox { halting })
    }

    pub fn halting(&self) -> &[Option<usize>] {
        &self.halting
    }

    /// Largest argument with a defined approximation.
    pub fn max_x(&self) -> usize {
        self.halting.len()
    }

    pub fn approx(&self, s: usize, x: usize) -> usize {
        self.halting[..x.min(self.halting.len())]
            .iter()
            .flatten()
            .copied()
            .filter(|&h| h <= s)
            .max()
            .unwrap_or(0)
    }

    /// The stage-independent value the approximation converges to.
    pub fn limit(&self, x: usize) -> usize {
        self.approx(usize::MAX, x)
    }

    /// Distinct values taken by the approximation at `x`, increasing; starts at 0.
    pub fn change_points(&self, x: usize) -> Vec<usize> {
        let mut pts: Vec<usize> = std::iter::once(0)
            .chain(self.halting[..x.min(self.halting.len())].iter().flatten().copied())
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approximation_climbs_to_the_limit() {
        let m = ModulusApprox::new(vec![Some(5), None, Some(2), Some(9)]);
        assert_eq!(m.approx(0, 4), 0);
        assert_eq!(m.approx(2, 4), 2);
        assert_eq!(m.approx(6, 4), 5);
        assert_eq!(m.limit(4), 9);
        assert_eq!(m.limit(3), 5);
        assert_eq!(m.change_points(3), vec![0, 2, 5]);
        for x in 0..=4 {
            assert!(m.change_points(x).len() <= x + 1);
            let vals: Vec<usize> = (0..12).map(|s| m.approx(s, x)).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn seeded_is_deterministic() {
        let a = ModulusApprox::seeded(30, 0.5, 40, 3).unwrap();
        assert_eq!(a, ModulusApprox::seeded(30, 0.5, 40, 3).unwrap());
        assert!(a.halting().iter().flatten().all(|&h| (1..=40).contains(&h)));
    }
}
