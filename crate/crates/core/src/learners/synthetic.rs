use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Capabilities, Learner};
use crate::error::{ConfigError, LearnerError};
use crate::model::CurveSample;

/// Shape of a noiseless learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveFamily {
    /// `a - c / n`
    Inverse { asymptote: f64, scale: f64 },
    /// `a - c * n^-alpha`
    PowerLaw {
        asymptote: f64,
        scale: f64,
        exponent: f64,
    },
    /// An inverse curve that beats the reference curve
    /// `reference_asymptote - reference_scale / n` below `crossover` and
    /// loses above it, plateauing at the lower `asymptote`.
    Crossing {
        asymptote: f64,
        crossover: f64,
        reference_asymptote: f64,
        reference_scale: f64,
    },
    /// Constant `a`.
    Flat { asymptote: f64 },
}

impl CurveFamily {
    fn crossing_scale(asymptote: f64, crossover: f64, ref_a: f64, ref_c: f64) -> f64 {
        ref_c - (ref_a - asymptote) * crossover
    }

    /// Unclamped curve value at a real `n`.
    pub fn raw(&self, n: f64) -> f64 {
        match *self {
            CurveFamily::Inverse { asymptote, scale } => asymptote - scale / n,
            CurveFamily::PowerLaw {
                asymptote,
                scale,
                exponent,
            } => asymptote - scale * n.powf(-exponent),
            CurveFamily::Crossing {
                asymptote,
                crossover,
                reference_asymptote,
                reference_scale,
            } => {
                asymptote
                    - Self::crossing_scale(
                        asymptote,
                        crossover,
                        reference_asymptote,
                        reference_scale,
                    ) / n
            }
            CurveFamily::Flat { asymptote } => asymptote,
        }
    }

    pub fn asymptote(&self) -> f64 {
        match *self {
            CurveFamily::Inverse { asymptote, .. }
            | CurveFamily::PowerLaw { asymptote, .. }
            | CurveFamily::Crossing { asymptote, .. }
            | CurveFamily::Flat { asymptote } => asymptote,
        }
    }

    /// For the crossing family, the reference curve it crosses.
    pub fn reference(&self) -> Option<CurveFamily> {
        match *self {
            CurveFamily::Crossing {
                reference_asymptote,
                reference_scale,
                ..
            } => Some(CurveFamily::Inverse {
                asymptote: reference_asymptote,
                scale: reference_scale,
            }),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} = {v} outside [0, 1]"))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} = {v} must be positive"))
            }
        };
        match *self {
            CurveFamily::Inverse { asymptote, scale } => {
                unit("asymptote", asymptote)?;
                positive("scale", scale)
            }
            CurveFamily::PowerLaw {
                asymptote,
                scale,
                exponent,
            } => {
                unit("asymptote", asymptote)?;
                positive("scale", scale)?;
                positive("exponent", exponent)
            }
            CurveFamily::Crossing {
                asymptote,
                crossover,
                reference_asymptote,
                reference_scale,
            } => {
                unit("asymptote", asymptote)?;
                unit("reference_asymptote", reference_asymptote)?;
                positive("crossover", crossover)?;
                positive("reference_scale", reference_scale)?;
                if asymptote >= reference_asymptote {
                    return Err("crossing curve must plateau below its reference".into());
                }
                positive(
                    "derived scale",
                    Self::crossing_scale(
                        asymptote,
                        crossover,
                        reference_asymptote,
                        reference_scale,
                    ),
                )
            }
            CurveFamily::Flat { asymptote } => unit("asymptote", asymptote),
        }
    }
}

fn default_one() -> f64 {
    1.0
}

/// A synthetic learner: a curve family plus noise, training-accuracy margin
/// and cost model.
///
/// * validation accuracy: `f(n) + eps`, `eps ~ N(0, noise_sigma^2)` truncated to `[0, 1]`;
/// * training accuracy: `min(1, f(n) + train_margin / sqrt(n))`, or `1`
///   when no margin is given;
/// * cost: `cost_scale * n^cost_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCurveSpec {
    #[serde(flatten)]
    pub family: CurveFamily,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub train_margin: Option<f64>,
    #[serde(default = "default_one")]
    pub cost_exponent: f64,
    #[serde(default = "default_one")]
    pub cost_scale: f64,
}

impl SyntheticCurveSpec {
    /// Noiseless spec with unit cost and a loose training bound.
    pub fn new(family: CurveFamily) -> Self {
        Self {
            family,
            noise_sigma: 0.0,
            train_margin: None,
            cost_exponent: 1.0,
            cost_scale: 1.0,
        }
    }

    pub fn inverse(asymptote: f64, scale: f64) -> Self {
        Self::new(CurveFamily::Inverse { asymptote, scale })
    }

    pub fn power_law(asymptote: f64, scale: f64, exponent: f64) -> Self {
        Self::new(CurveFamily::PowerLaw {
            asymptote,
            scale,
            exponent,
        })
    }

    pub fn flat(asymptote: f64) -> Self {
        Self::new(CurveFamily::Flat { asymptote })
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_train_margin(mut self, margin: f64) -> Self {
        self.train_margin = Some(margin);
        self
    }

    pub fn with_cost(mut self, scale: f64, exponent: f64) -> Self {
        self.cost_scale = scale;
        self.cost_exponent = exponent;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.family.validate().map_err(ConfigError::InvalidCurve)?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(ConfigError::InvalidCurve(format!(
                "noise_sigma = {} must be >= 0",
                self.noise_sigma
            )));
        }
        if let Some(m) = self.train_margin {
            if !(m.is_finite() && m >= 0.0) {
                return Err(ConfigError::InvalidCurve(format!(
                    "train_margin = {m} must be >= 0"
                )));
            }
        }
        if !(self.cost_exponent >= 1.0 && self.cost_scale >= 1.0) {
            return Err(ConfigError::InvalidCurve(
                "cost model needs exponent >= 1 and scale >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Unclamped curve value.
    pub fn raw_accuracy(&self, n: f64) -> f64 {
        self.family.raw(n)
    }

    /// Noiseless expected accuracy, clamped to `[0, 1]`.
    pub fn exact_accuracy(&self, n: u64) -> f64 {
        self.family.raw(n as f64).clamp(0.0, 1.0)
    }

    /// Noiseless training accuracy.
    pub fn train_accuracy(&self, n: u64) -> f64 {
        match self.train_margin {
            Some(m) => (self.exact_accuracy(n) + m / (n as f64).sqrt()).min(1.0),
            None => 1.0,
        }
    }

    /// Training cost on a (possibly fractional) sample count.
    pub fn cost(&self, n: f64) -> f64 {
        self.cost_scale * n.powf(self.cost_exponent)
    }

    pub fn sample(&self, n: u64, seed: u64) -> CurveSample {
        let f = self.exact_accuracy(n);
        let val = if self.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, self.noise_sigma).expect("sigma validated");
            // Rejection keeps the draw in [0, 1]; give up and clamp after a few tries.
            let mut v = None;
            for _ in 0..64 {
                let cand = f + normal.sample(&mut rng);
                if (0.0..=1.0).contains(&cand) {
                    v = Some(cand);
                    break;
                }
            }
            v.unwrap_or(f)
        } else {
            f
        };
        CurveSample {
            n,
            train_acc: self.train_accuracy(n),
            val_acc: val,
            cost: self.cost(n as f64),
        }
    }

    /// First `n` in `lo..=hi` where the clamped curve stops being
    /// non-decreasing with non-increasing discrete derivative.
    pub fn well_behaved_violation(&self, lo: u64, hi: u64) -> Option<u64> {
        first_irregularity(|n| self.exact_accuracy(n), lo, hi)
    }
}

/// Absolute slack for derivative comparisons; only float rounding hides below it.
pub(crate) const DERIVATIVE_SLACK: f64 = 1e-13;

/// Scan `f` on `lo..=hi` (needs `lo >= 1`) for a decrease in value or an
/// increase in the unit-step derivative.
pub(crate) fn first_irregularity<F: Fn(u64) -> f64>(f: F, lo: u64, hi: u64) -> Option<u64> {
    let lo = lo.max(1);
    if hi <= lo {
        return None;
    }
    let mut prev_val = f(lo);
    let mut prev_d: Option<f64> = None;
    for n in (lo + 1)..=hi {
        let v = f(n);
        let d = v - prev_val;
        if d < -DERIVATIVE_SLACK {
            return Some(n);
        }
        if let Some(pd) = prev_d {
            if d > pd + DERIVATIVE_SLACK {
                return Some(n);
            }
        }
        prev_d = Some(d);
        prev_val = v;
    }
    None
}

/// [`Learner`] backed by a [`SyntheticCurveSpec`].
#[derive(Debug, Clone)]
pub struct SyntheticLearner {
    name: String,
    spec: SyntheticCurveSpec,
}

impl SyntheticLearner {
    pub fn new(name: impl Into<String>, spec: SyntheticCurveSpec) -> Result<Self, ConfigError> {
        spec.validate()?;
        Ok(Self {
            name: name.into(),
            spec,
        })
    }

    pub fn spec(&self) -> &SyntheticCurveSpec {
        &self.spec
    }
}

impl Learner for SyntheticLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_n: None,
            exact: true,
        }
    }

    fn train_eval(&mut self, n: u64, seed: u64) -> Result<CurveSample, LearnerError> {
        if n == 0 {
            return Err(LearnerError::Rejected("n must be >= 1".into()));
        }
        Ok(self.spec.sample(n, seed))
    }

    fn exact_accuracy(&self, n: u64) -> Option<f64> {
        Some(self.spec.exact_accuracy(n))
    }
}
