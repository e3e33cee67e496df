//! Synthetic data scenarios.
//!
//! Population quantities are exact wherever an assertion depends on them:
//! finite-support designs carry the conditional mean on every support point,
//! and the Gaussian linear scenario has identity covariance, so excess losses
//! and population norms are closed form. Everything is deterministic given
//! (scenario, n, seed).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{StarFitResult, StepOneFit};
use crate::model::{DesignSample, FiniteDictionary, LinearClass};
use crate::seeding::stream_rng;

/// Noise distributions for the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum NoiseLaw {
    Gaussian {
        sigma: f64,
    },
    /// Student-t with `df` degrees of freedom, multiplied by `scale`.
    StudentT {
        df: f64,
        scale: f64,
    },
    /// Uniform on [-half_width, half_width].
    Uniform {
        half_width: f64,
    },
}

/// Draw a support index according to the weights (inverse-CDF on the
/// cumulative vector).
pub(crate) fn weighted_index(cum_weights: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    cum_weights
        .partition_point(|&c| c < u)
        .min(cum_weights.len() - 1)
}

pub(crate) fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

impl NoiseLaw {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            NoiseLaw::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseLaw::StudentT { df, scale } => {
                let t = StudentT::new(df).expect("df > 0");
                scale * t.sample(rng)
            }
            NoiseLaw::Uniform { half_width } => rng.gen_range(-half_width..half_width),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseLaw::Gaussian { sigma } => sigma * sigma,
            NoiseLaw::StudentT { df, scale } => {
                assert!(df > 2.0, "Student-t variance needs df > 2");
                scale * scale * df / (df - 2.0)
            }
            NoiseLaw::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Fourth moment; finite for Student-t only when df > 4.
    pub fn fourth_moment(&self) -> f64 {
        match *self {
            NoiseLaw::Gaussian { sigma } => 3.0 * sigma.powi(4),
            NoiseLaw::StudentT { df, scale } => {
                assert!(df > 4.0, "Student-t fourth moment needs df > 4");
                scale.powi(4) * 3.0 * df * df / ((df - 2.0) * (df - 4.0))
            }
            NoiseLaw::Uniform { half_width } => half_width.powi(4) / 5.0,
        }
    }
}

/// Finite dictionary of bounded functions over a finite-support design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSupportScenario {
    /// Support points (1-dimensional covariates).
    pub support_points: Vec<f64>,
    /// Support weights, uniform 1/m.
    pub weights: Vec<f64>,
    /// Member values on the support (N x m), bounded by 1.
    pub dict_support: Vec<Vec<f64>>,
    /// Conditional mean E[Y | X = z_k] on each support point.
    pub cond_mean: Vec<f64>,
    pub noise: NoiseLaw,
    /// Exact argmin of the population risk over the dictionary.
    pub fstar_index: usize,
    pub well_specified: bool,
}

/// A generated sample together with the sample-restricted dictionary.
#[derive(Debug, Clone)]
pub struct FiniteSupportInstance {
    pub sample: DesignSample,
    pub sample_indices: Vec<usize>,
    /// Dictionary values on the sample points (N x n).
    pub dict: FiniteDictionary,
}

fn smooth_random_row(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    // Random low-frequency trigonometric mix, scaled into [-1, 1].
    let coeffs: Vec<(f64, f64, f64)> = (1..=4)
        .map(|t| {
            (
                rng.gen_range(-1.0..1.0),
                t as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..m)
        .map(|k| {
            let z = k as f64 / (m - 1).max(1) as f64;
            coeffs
                .iter()
                .map(|(a, t, phi)| a * (std::f64::consts::TAU * t * z + phi).sin())
                .sum()
        })
        .collect();
    let max = raw.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-9);
    raw.iter().map(|v| v / max).collect()
}

impl FiniteSupportScenario {
    /// Build a scenario with `num_members` bounded functions on a uniform
    /// `support_size`-point design.
    pub fn build(
        num_members: usize,
        support_size: usize,
        noise: NoiseLaw,
        well_specified: bool,
        seed: u64,
    ) -> Result<Self> {
        if num_members == 0 || support_size < 2 {
            return Err(Error::InvalidParameter(
                "need at least one member and two support points".into(),
            ));
        }
        let mut rng = stream_rng(seed, 0);
        let m = support_size;
        let support_points: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        let dict_support: Vec<Vec<f64>> = (0..num_members)
            .map(|_| smooth_random_row(m, &mut rng))
            .collect();
        let cond_mean: Vec<f64> = if well_specified {
            dict_support[0].clone()
        } else {
            // Truth outside the dictionary: a blend plus a quadratic bump.
            let other = dict_support.len().min(2) - 1;
            (0..m)
                .map(|k| {
                    let z = support_points[k];
                    0.6 * dict_support[0][k]
                        + 0.4 * dict_support[other][k]
                        + 0.5 * (z - 0.35) * (z - 0.65)
                })
                .collect()
        };
        let weights = vec![1.0 / m as f64; m];
        let mut scenario = FiniteSupportScenario {
            support_points,
            weights,
            dict_support,
            cond_mean,
            noise,
            fstar_index: 0,
            well_specified,
        };
        scenario.fstar_index = scenario.population_argmin();
        Ok(scenario)
    }

    pub fn num_members(&self) -> usize {
        self.dict_support.len()
    }

    pub fn support_size(&self) -> usize {
        self.support_points.len()
    }

    /// Exact population risk of values given on the support.
    pub fn population_risk(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.support_size());
        let approx: f64 = values
            .iter()
            .zip(&self.cond_mean)
            .zip(&self.weights)
            .map(|((v, m), w)| w * (v - m) * (v - m))
            .sum();
        approx + self.noise.variance()
    }

    /// Exhaustive scan for the population argmin over the dictionary.
    pub fn population_argmin(&self) -> usize {
        let mut best = 0;
        let mut best_risk = f64::INFINITY;
        for (j, row) in self.dict_support.iter().enumerate() {
            let r = self.population_risk(row);
            if r < best_risk {
                best = j;
                best_risk = r;
            }
        }
        best
    }

    pub fn fstar_support(&self) -> &[f64] {
        &self.dict_support[self.fstar_index]
    }

    /// Exact population excess loss of values given on the support,
    /// relative to the best dictionary member.
    pub fn excess_loss(&self, values: &[f64]) -> f64 {
        self.population_risk(values) - self.population_risk(self.fstar_support())
    }

    /// Draw a sample of size n. Deterministic given (n, seed).
    pub fn generate(&self, n: usize, seed: u64) -> Result<FiniteSupportInstance> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, 1);
        let cum = cumulative(&self.weights);
        let sample_indices: Vec<usize> =
            (0..n).map(|_| weighted_index(&cum, &mut rng)).collect();
        let y: Vec<f64> = sample_indices
            .iter()
            .map(|&k| self.cond_mean[k] + self.noise.sample(&mut rng))
            .collect();
        let x: Vec<Vec<f64>> = sample_indices
            .iter()
            .map(|&k| vec![self.support_points[k]])
            .collect();
        let fstar_sample: Vec<f64> = sample_indices
            .iter()
            .map(|&k| self.fstar_support()[k])
            .collect();
        let sample = DesignSample::with_truth(x, y, fstar_sample)?;
        let dict_rows: Vec<Vec<f64>> = self
            .dict_support
            .iter()
            .map(|row| sample_indices.iter().map(|&k| row[k]).collect())
            .collect();
        Ok(FiniteSupportInstance {
            sample,
            sample_indices,
            dict: FiniteDictionary::new(dict_rows)?,
        })
    }

    /// Map a star fit on a generated instance back to support values.
    pub fn fit_support_values(&self, fit: &StarFitResult) -> Result<Vec<f64>> {
        let g_idx = match fit.g_hat {
            StepOneFit::Finite { index } => index,
            StepOneFit::Linear { .. } => {
                return Err(Error::InvalidParameter(
                    "finite-support scenario expects a finite-class fit".into(),
                ))
            }
        };
        let base_idx = fit.base_index.unwrap_or(g_idx);
        let g = &self.dict_support[g_idx];
        let f = &self.dict_support[base_idx];
        let lambda = fit.lambda_star;
        Ok(g.iter()
            .zip(f)
            .map(|(gi, fi)| lambda * gi + (1.0 - lambda) * fi)
            .collect())
    }

    /// Exact fourth moment of the noise xi = Y - f*(X), accounting for the
    /// misspecification bias on each support point.
    pub fn xi_fourth_moment(&self) -> f64 {
        let e2 = self.noise.variance();
        let e4 = self.noise.fourth_moment();
        self.weights
            .iter()
            .zip(self.fstar_support().iter().zip(&self.cond_mean))
            .map(|(w, (f, m))| {
                let bias = m - f;
                // symmetric noise: odd moments vanish
                w * (bias.powi(4) + 6.0 * bias * bias * e2 + e4)
            })
            .sum()
    }
}

/// Well-specified linear regression under a standard Gaussian design
/// (identity population covariance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussianScenario {
    pub beta_star: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct LinearInstance {
    pub sample: DesignSample,
    pub class: LinearClass,
}

impl LinearGaussianScenario {
    pub fn build(p: usize, sigma: f64, seed: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidParameter("sigma must be nonnegative".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let beta_star: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Ok(LinearGaussianScenario { beta_star, sigma })
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<LinearInstance> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let p = self.p();
        let mut rng = stream_rng(seed, 1);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let fstar: Vec<f64> = x
            .iter()
            .map(|row| row.iter().zip(&self.beta_star).map(|(a, b)| a * b).sum())
            .collect();
        let y: Vec<f64> = fstar
            .iter()
            .map(|f| {
                let z: f64 = StandardNormal.sample(&mut rng);
                f + self.sigma * z
            })
            .collect();
        let class = LinearClass::from_rows(&x)?;
        let sample = DesignSample::with_truth(x, y, fstar)?;
        Ok(LinearInstance { sample, class })
    }

    /// Exact population excess loss of a weight vector under the identity
    /// design covariance: ||beta - beta*||^2.
    pub fn excess_loss(&self, beta_hat: &[f64]) -> f64 {
        beta_hat
            .iter()
            .zip(&self.beta_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Misspecified linear regression: quadratic conditional mean over a finite
/// support in R^p, fitted with the linear class. The population argmin is the
/// exact weighted least-squares projection of the truth onto the class, and
/// the noise xi = Y - f*(X) is deliberately non-centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecifiedLinearScenario {
    /// Support points (m x p).
    pub support_points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Conditional mean on each support point (quadratic in the covariates).
    pub cond_mean: Vec<f64>,
    pub noise: NoiseLaw,
    /// Exact population argmin over the linear class.
    pub fstar_beta: Vec<f64>,
    pub fstar_support: Vec<f64>,
}

impl MisspecifiedLinearScenario {
    pub fn build(p: usize, support_size: usize, noise: NoiseLaw, seed: u64) -> Result<Self> {
        if p == 0 || support_size <= p {
            return Err(Error::InvalidParameter(
                "need p >= 1 and support_size > p".into(),
            ));
        }
        let mut rng = stream_rng(seed, 0);
        let m = support_size;
        let support_points: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let lin: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let quad: Vec<f64> = (0..p).map(|_| rng.gen_range(0.3..1.0)).collect();
        let cond_mean: Vec<f64> = support_points
            .iter()
            .map(|z| {
                let linear: f64 = z.iter().zip(&lin).map(|(a, b)| a * b).sum();
                let curve: f64 = z.iter().zip(&quad).map(|(a, b)| a * a * b).sum();
                linear + curve
            })
            .collect();
        let weights = vec![1.0 / m as f64; m];

        // Weighted least-squares projection of the truth onto the class.
        let mut gram = nalgebra::DMatrix::<f64>::zeros(p, p);
        let mut rhs = nalgebra::DVector::<f64>::zeros(p);
        for k in 0..m {
            for r in 0..p {
                rhs[r] += weights[k] * support_points[k][r] * cond_mean[k];
                for s in 0..p {
                    gram[(r, s)] += weights[k] * support_points[k][r] * support_points[k][s];
                }
            }
        }
        let (beta, _) = crate::linalg::lstsq_min_norm(&gram, &rhs);
        let fstar_beta: Vec<f64> = beta.iter().cloned().collect();
        let fstar_support: Vec<f64> = support_points
            .iter()
            .map(|z| z.iter().zip(&fstar_beta).map(|(a, b)| a * b).sum())
            .collect();
        Ok(MisspecifiedLinearScenario {
            support_points,
            weights,
            cond_mean,
            noise,
            fstar_beta,
            fstar_support,
        })
    }

    pub fn support_size(&self) -> usize {
        self.support_points.len()
    }

    pub fn p(&self) -> usize {
        self.fstar_beta.len()
    }

    /// Conditional noise means m(z_k) - f*(z_k); nonzero under
    /// misspecification.
    pub fn xi_bias(&self) -> Vec<f64> {
        self.cond_mean
            .iter()
            .zip(&self.fstar_support)
            .map(|(m, f)| m - f)
            .collect()
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<LinearInstance> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, 1);
        let cum = cumulative(&self.weights);
        let indices: Vec<usize> = (0..n).map(|_| weighted_index(&cum, &mut rng)).collect();
        let x: Vec<Vec<f64>> = indices
            .iter()
            .map(|&k| self.support_points[k].clone())
            .collect();
        let y: Vec<f64> = indices
            .iter()
            .map(|&k| self.cond_mean[k] + self.noise.sample(&mut rng))
            .collect();
        let fstar: Vec<f64> = indices.iter().map(|&k| self.fstar_support[k]).collect();
        let class = LinearClass::from_rows(&x)?;
        let sample = DesignSample::with_truth(x, y, fstar)?;
        Ok(LinearInstance { sample, class })
    }

    /// Exact population excess loss of a weight vector.
    pub fn excess_loss(&self, beta_hat: &[f64]) -> f64 {
        let risk = |values: &dyn Fn(usize) -> f64| -> f64 {
            (0..self.support_size())
                .map(|k| self.weights[k] * (values(k) - self.cond_mean[k]).powi(2))
                .sum::<f64>()
        };
        let fit = |k: usize| -> f64 {
            self.support_points[k]
                .iter()
                .zip(beta_hat)
                .map(|(a, b)| a * b)
                .sum()
        };
        let fstar = |k: usize| self.fstar_support[k];
        risk(&fit) - risk(&fstar)
    }
}

/// Random 1-Lipschitz paths on the uniform grid of [0,1], bounded by 1:
/// reflected random walks with slope +-1 between neighboring grid points.
pub fn lipschitz_paths(n_design: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let step = if n_design > 1 {
        1.0 / (n_design - 1) as f64
    } else {
        0.0
    };
    for c in 0..count {
        let mut rng = stream_rng(seed, c as u64);
        let mut v = Vec::with_capacity(n_design);
        let mut cur: f64 = rng.gen_range(-0.5..0.5);
        v.push(cur);
        for _ in 1..n_design {
            let dir = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            cur += dir * step;
            if cur > 1.0 {
                cur = 2.0 - cur;
            } else if cur < -1.0 {
                cur = -2.0 - cur;
            }
            v.push(cur);
        }
        out.push(v);
    }
    out
}
