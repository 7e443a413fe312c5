//! Random configurations for property tests, acceptance runs and the CLI cross-check.

use rand::Rng;

use crate::greenfn::{PointInteractionConfig, SpectralParameter};
use crate::linalg::C64;

/// Ranges for [`random_config`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigRanges {
    pub max_points: usize,
    pub strength: (f64, f64),
    pub gap: (f64, f64),
    /// range of the first position
    pub start: (f64, f64),
}

impl Default for ConfigRanges {
    fn default() -> Self {
        ConfigRanges { max_points: 5, strength: (0.2, 5.0), gap: (0.2, 3.0), start: (-1.0, 1.0) }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// `N` uniform in `1..=max_points`, strengths and gaps uniform in their ranges.
pub fn random_config<R: Rng>(rng: &mut R, r: &ConfigRanges) -> PointInteractionConfig {
    let n = rng.random_range(1..=r.max_points.max(1));
    random_config_with_len(rng, r, n)
}

pub fn random_config_with_len<R: Rng>(rng: &mut R, r: &ConfigRanges, n: usize) -> PointInteractionConfig {
    let mut a = uniform(rng, r.start);
    let mut pairs = Vec::with_capacity(n);
    for j in 0..n {
        if j > 0 {
            a += uniform(rng, r.gap);
        }
        let mut v = uniform(rng, r.strength);
        if v == 0.0 {
            v = r.strength.1;
        }
        pairs.push((a, v));
    }
    PointInteractionConfig::from_pairs(&pairs).expect("sampled configuration is valid")
}

pub fn random_real_mass<R: Rng>(rng: &mut R, range: (f64, f64)) -> SpectralParameter {
    SpectralParameter::real(uniform(rng, range)).expect("mass range is positive")
}

/// `m = |m| e^{iθ}` with modulus and angle uniform in their ranges (`|θ| < π/2`).
pub fn random_complex_mass<R: Rng>(rng: &mut R, modulus: (f64, f64), angle: (f64, f64)) -> SpectralParameter {
    let r = uniform(rng, modulus);
    let t = uniform(rng, angle);
    SpectralParameter::new(C64::from_polar(r, t)).expect("angle keeps Re m > 0")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = ConfigRanges::default();
        for _ in 0..100 {
            let cfg = random_config(&mut rng, &r);
            assert!((1..=5).contains(&cfg.len()));
            assert!(cfg.strengths().iter().all(|v| (0.2..5.0).contains(v)));
            assert!(cfg.positions().windows(2).all(|w| (0.2..3.0).contains(&(w[1] - w[0]))));
        }
        let m = random_complex_mass(&mut rng, (0.5, 2.0), (0.05, 0.7));
        assert!(m.m().im > 0.0 && m.m().re > 0.0);
    }
}
