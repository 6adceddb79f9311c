use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Score distribution families used by the synthetic agents.
///
/// Normal components are parameterised by variance; Student components
/// are location-shifted standard t laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family<P> {
    Normal { mean: P, var: P },
    Student { mean: P, dof: P },
    /// Equal-weight mixture of two normals.
    NormalMixture { mean1: P, var1: P, mean2: P, var2: P },
    /// Equal-weight mixture of two shifted t laws.
    StudentMixture { mean1: P, dof1: P, mean2: P, dof2: P },
}

pub type DistributionSpec = Family<f64>;

impl<P> Family<P> {
    pub fn map<Q>(&self, mut f: impl FnMut(&P) -> Q) -> Family<Q> {
        match self {
            Family::Normal { mean, var } => Family::Normal {
                mean: f(mean),
                var: f(var),
            },
            Family::Student { mean, dof } => Family::Student {
                mean: f(mean),
                dof: f(dof),
            },
            Family::NormalMixture { mean1, var1, mean2, var2 } => Family::NormalMixture {
                mean1: f(mean1),
                var1: f(var1),
                mean2: f(mean2),
                var2: f(var2),
            },
            Family::StudentMixture { mean1, dof1, mean2, dof2 } => Family::StudentMixture {
                mean1: f(mean1),
                dof1: f(dof1),
                mean2: f(mean2),
                dof2: f(dof2),
            },
        }
    }
}

fn check_var(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!("variance must be positive and finite, got {v}")))
    }
}

fn check_dof(nu: f64) -> Result<()> {
    if nu > 2.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "degrees of freedom must exceed 2 for a finite variance, got {nu}"
        )))
    }
}

fn check_mean(m: f64) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!("mean must be finite, got {m}")))
    }
}

fn t_variance(nu: f64) -> f64 {
    nu / (nu - 2.0)
}

enum Sampler {
    Normal(Normal<f64>),
    Student(f64, StudentT<f64>),
}

impl Sampler {
    fn normal(mean: f64, var: f64) -> Result<Self> {
        let d = Normal::new(mean, var.sqrt()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Sampler::Normal(d))
    }

    fn student(mean: f64, nu: f64) -> Result<Self> {
        let d = StudentT::new(nu).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(Sampler::Student(mean, d))
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Student(mean, d) => mean + d.sample(rng),
        }
    }
}

impl DistributionSpec {
    pub fn normal(mean: f64, var: f64) -> Self {
        Family::Normal { mean, var }
    }

    pub fn normal_mixture(mean1: f64, var1: f64, mean2: f64, var2: f64) -> Self {
        Family::NormalMixture { mean1, var1, mean2, var2 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Normal { mean, var } => check_mean(mean).and(check_var(var)),
            Family::Student { mean, dof } => check_mean(mean).and(check_dof(dof)),
            Family::NormalMixture { mean1, var1, mean2, var2 } => check_mean(mean1)
                .and(check_mean(mean2))
                .and(check_var(var1))
                .and(check_var(var2)),
            Family::StudentMixture { mean1, dof1, mean2, dof2 } => check_mean(mean1)
                .and(check_mean(mean2))
                .and(check_dof(dof1))
                .and(check_dof(dof2)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Normal { mean, .. } | Family::Student { mean, .. } => mean,
            Family::NormalMixture { mean1, mean2, .. } | Family::StudentMixture { mean1, mean2, .. } => {
                0.5 * (mean1 + mean2)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        let mixture = |m1: f64, v1: f64, m2: f64, v2: f64| 0.5 * (v1 + v2) + 0.25 * (m1 - m2).powi(2);
        match *self {
            Family::Normal { var, .. } => var,
            Family::Student { dof, .. } => t_variance(dof),
            Family::NormalMixture { mean1, var1, mean2, var2 } => mixture(mean1, var1, mean2, var2),
            Family::StudentMixture { mean1, dof1, mean2, dof2 } => {
                mixture(mean1, t_variance(dof1), mean2, t_variance(dof2))
            }
        }
    }

    /// `n` i.i.d. draws; mixtures flip a fair coin per draw.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidDistribution("sample size must be at least 1".into()));
        }
        let (a, b) = match *self {
            Family::Normal { mean, var } => (Sampler::normal(mean, var)?, None),
            Family::Student { mean, dof } => (Sampler::student(mean, dof)?, None),
            Family::NormalMixture { mean1, var1, mean2, var2 } => {
                (Sampler::normal(mean1, var1)?, Some(Sampler::normal(mean2, var2)?))
            }
            Family::StudentMixture { mean1, dof1, mean2, dof2 } => {
                (Sampler::student(mean1, dof1)?, Some(Sampler::student(mean2, dof2)?))
            }
        };
        Ok((0..n)
            .map(|_| match &b {
                Some(b) if rng.random_bool(0.5) => b.draw(rng),
                _ => a.draw(rng),
            })
            .collect())
    }
}
