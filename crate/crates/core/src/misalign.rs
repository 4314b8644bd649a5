//! Per-subcarrier time misalignment.
//!
//! The closed-form link budgets only ever need three statistics of |tau_k|:
//! the mean, the tail probability P(|tau| >= x) and the tail conditional mean
//! E{|tau| given |tau| >= x}. [`TimingStatistics`] exposes exactly those, plus a
//! sampler for the Monte-Carlo oracle, so other distribution families can be
//! added without touching the link budgets.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MisalignError {
    #[error("misalignment half-width must be finite and >= 0, got {0}")]
    InvalidHalfWidth(f64),
    #[error("unknown misalignment distribution `{0}` (only `uniform` is supported)")]
    UnknownFamily(String),
}

/// Statistics of the absolute timing error |tau_k|.
pub trait TimingStatistics {
    /// E{|tau|}.
    fn mean_abs(&self) -> f64;

    /// P(|tau| >= x) for x >= 0.
    fn tail_prob(&self, x: f64) -> f64;

    /// E{|tau| given |tau| >= x}. When the tail is empty this returns `x`;
    /// every caller multiplies it by [`TimingStatistics::tail_prob`], so the
    /// product is still exactly zero.
    fn tail_mean(&self, x: f64) -> f64;

    /// Upper end of the support of |tau|, if bounded.
    fn support_bound(&self) -> Option<f64>;

    /// One draw of the signed error tau.
    fn draw(&self, rng: &mut dyn RngCore) -> f64;

    /// E{(|tau| - x)^+} = P(|tau| >= x) (E{|tau| given |tau| >= x} - x).
    fn excess(&self, x: f64) -> f64 {
        let p = self.tail_prob(x);
        if p == 0.0 {
            0.0
        } else {
            p * (self.tail_mean(x) - x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisalignmentFamily {
    /// tau ~ U(-a, a).
    Uniform,
}

impl std::str::FromStr for MisalignmentFamily {
    type Err = MisalignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(MisalignmentFamily::Uniform),
            other => Err(MisalignError::UnknownFamily(other.to_string())),
        }
    }
}

/// i.i.d. timing error of every subcarrier with respect to the gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentModel {
    pub family: MisalignmentFamily,
    half_width: f64,
}

impl MisalignmentModel {
    pub fn uniform(half_width: f64) -> Result<Self, MisalignError> {
        if !(half_width.is_finite() && half_width >= 0.0) {
            return Err(MisalignError::InvalidHalfWidth(half_width));
        }
        Ok(MisalignmentModel {
            family: MisalignmentFamily::Uniform,
            half_width,
        })
    }

    /// Uniform model whose mean absolute error is `norm * symbol_duration`.
    pub fn from_normalized_mean(norm: f64, symbol_duration: f64) -> Result<Self, MisalignError> {
        Self::uniform(2.0 * norm * symbol_duration)
    }

    pub fn aligned() -> Self {
        MisalignmentModel {
            family: MisalignmentFamily::Uniform,
            half_width: 0.0,
        }
    }

    /// Half-width `a` of the uniform support.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Whether `a < T_c`, the range over which the chip-slot overlap geometry
    /// behind the closed forms holds.
    pub fn within_chip(&self, chip_slot: f64) -> bool {
        self.half_width < chip_slot
    }

    /// `n` draws of tau, deterministic in `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

impl TimingStatistics for MisalignmentModel {
    fn mean_abs(&self) -> f64 {
        self.half_width / 2.0
    }

    fn tail_prob(&self, x: f64) -> f64 {
        let a = self.half_width;
        if x <= 0.0 {
            1.0
        } else if x >= a {
            0.0
        } else {
            1.0 - x / a
        }
    }

    fn tail_mean(&self, x: f64) -> f64 {
        let a = self.half_width;
        let x = x.max(0.0);
        if x >= a {
            x
        } else {
            0.5 * (x + a)
        }
    }

    fn support_bound(&self) -> Option<f64> {
        Some(self.half_width)
    }

    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        self.half_width * (2.0 * u - 1.0)
    }
}
