//! Checkpoint/restore delay model.
//!
//! Delays are normal draws clipped to `[lo, hi]`. Clipping shrinks the
//! spread, so the configured `sd` is the spread of the delivered delays and
//! the underlying normal's scale is solved for from the clipped-normal
//! moments.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadModel {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for OverheadModel {
    fn default() -> Self {
        Self { mean: 3.0, sd: 1.43, lo: 0.5, hi: 5.0 }
    }
}

impl OverheadModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo >= 0.0 && self.lo <= self.hi && self.hi.is_finite()) {
            return Err(Error::Config(format!(
                "overhead bounds must satisfy 0 <= lo <= hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.lo..=self.hi).contains(&self.mean) {
            return Err(Error::Config(format!("overhead mean {} outside bounds", self.mean)));
        }
        if !(self.sd >= 0.0) {
            return Err(Error::Config("overhead sd must be non-negative".into()));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<OverheadSampler> {
        self.validate()?;
        let (lo, hi, loc) = (self.lo, self.hi, self.mean);
        if self.sd == 0.0 || lo == hi {
            return Ok(OverheadSampler { loc, scale: 0.0, lo, hi });
        }
        // clipped sd grows monotonically in the scale; bracket then bisect
        let mut upper = self.sd.max(1e-3);
        while clipped_moments(loc, upper, lo, hi).1.sqrt() < self.sd {
            upper *= 2.0;
            if upper > 1e6 * (hi - lo) {
                return Err(Error::Config(format!(
                    "overhead sd {} unreachable within [{lo}, {hi}]",
                    self.sd
                )));
            }
        }
        let mut lower = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lower + upper);
            if clipped_moments(loc, mid, lo, hi).1.sqrt() < self.sd {
                lower = mid;
            } else {
                upper = mid;
            }
        }
        Ok(OverheadSampler { loc, scale: 0.5 * (lower + upper), lo, hi })
    }
}

/// Mean and variance of `clamp(N(loc, scale^2), lo, hi)`.
pub fn clipped_moments(loc: f64, scale: f64, lo: f64, hi: f64) -> (f64, f64) {
    if scale == 0.0 {
        let v = loc.clamp(lo, hi);
        return (v, 0.0);
    }
    let std = Normal::standard();
    let a = (lo - loc) / scale;
    let b = (hi - loc) / scale;
    let (cdf_a, cdf_b) = (std.cdf(a), std.cdf(b));
    let (pdf_a, pdf_b) = (std.pdf(a), std.pdf(b));
    let p_lo = cdf_a;
    let p_hi = 1.0 - cdf_b;
    let p_mid = cdf_b - cdf_a;
    let m1_mid = loc * p_mid + scale * (pdf_a - pdf_b);
    let m2_mid = (loc * loc + scale * scale) * p_mid
        + 2.0 * loc * scale * (pdf_a - pdf_b)
        + scale * scale * (a * pdf_a - b * pdf_b);
    let mean = lo * p_lo + hi * p_hi + m1_mid;
    let second = lo * lo * p_lo + hi * hi * p_hi + m2_mid;
    (mean, (second - mean * mean).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverheadSampler {
    pub loc: f64,
    pub scale: f64,
    pub lo: f64,
    pub hi: f64,
}

impl OverheadSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.loc + self.scale * z).clamp(self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStreams;

    fn sample_sd(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    #[test]
    fn delivered_spread_matches_target() {
        let sampler = OverheadModel::default().sampler().unwrap();
        assert!(sampler.scale > 1.43);
        let mut rng = RngStreams::new(3).stream("overhead");
        let xs: Vec<f64> = (0..200_000).map(|_| sampler.sample(&mut rng)).collect();
        assert!(xs.iter().all(|x| (0.5..=5.0).contains(x)));
        assert!((sample_sd(&xs) - 1.43).abs() < 0.02, "sd {}", sample_sd(&xs));
    }

    #[test]
    fn moments_match_monte_carlo() {
        let (mean, var) = clipped_moments(1.0, 2.0, 0.0, 3.0);
        let mut rng = RngStreams::new(9).stream("mc");
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (1.0 + 2.0 * z).clamp(0.0, 3.0)
            })
            .collect();
        let mc_mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - mc_mean).abs() < 0.01);
        assert!((var.sqrt() - sample_sd(&xs)).abs() < 0.01);
    }

    #[test]
    fn degenerate_and_invalid_models() {
        let fixed = OverheadModel { sd: 0.0, ..Default::default() }.sampler().unwrap();
        let mut rng = RngStreams::new(1).stream("o");
        assert_eq!(fixed.sample(&mut rng), 3.0);
        assert!(OverheadModel { lo: -1.0, ..Default::default() }.sampler().is_err());
        assert!(OverheadModel { mean: 9.0, ..Default::default() }.sampler().is_err());
        // the widest clipped spread on [0.5, 5] is 2.25
        assert!(OverheadModel { sd: 2.5, ..Default::default() }.sampler().is_err());
    }
}
