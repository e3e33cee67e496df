//! Offset Rademacher processes: exact suprema for finite, linear, and shifted
//! star classes, Monte Carlo estimation, critical radii, and the lower
//! isometry check.
//!
//! The process indexed by a class member h is
//!
//! ```text
//! (1/n) sum_i ( m * eps_i * xi_i * h_i  -  C * h_i^2 )
//! ```
//!
//! where the eps_i are Rademacher signs, C > 0 is the quadratic offset, and
//! the convention flag fixes the linear coefficient m (1 or 2) and whether the
//! noise multipliers xi are present (xi_i = 1 otherwise). Different displays
//! of the theory use different combinations; every operation takes the
//! convention explicitly so no factor of two drifts in silently.

mod critrad;
mod isometry;
mod mc;

pub use critrad::{
    critical_radius, critrad_evaluate_at, star_max_pop_norm, CriticalRadiusResult, CritradClass,
    LinearCritradInstance, StarCritradInstance,
};
pub use isometry::{isometry_check, linear_isometry_inf, IsometryClass, IsometryReport};
pub use mc::{
    noise_scale_m, offset_mc, offset_mc_values, offset_tail_check, McClass, OffsetEstimate,
    TailCheck, QUANTILE_LEVELS,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SpectralPseudoInverse;
use crate::model::{FiniteDictionary, LinearClass, ShiftedStarClass};

/// Coefficient on the linear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearCoefficient {
    /// `eps_i h_i`.
    One,
    /// `2 eps_i h_i`.
    Two,
}

impl LinearCoefficient {
    pub fn factor(self) -> f64 {
        match self {
            LinearCoefficient::One => 1.0,
            LinearCoefficient::Two => 2.0,
        }
    }
}

/// Whether noise multipliers enter the linear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Multipliers {
    /// `xi_i = 1`.
    Unit,
    /// `xi_i` taken from the sample.
    Noise,
}

/// Which display of the offset process is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convention {
    pub coefficient: LinearCoefficient,
    pub multipliers: Multipliers,
}

impl Convention {
    pub const EPS: Convention = Convention {
        coefficient: LinearCoefficient::One,
        multipliers: Multipliers::Unit,
    };
    pub const TWO_EPS: Convention = Convention {
        coefficient: LinearCoefficient::Two,
        multipliers: Multipliers::Unit,
    };
    pub const EPS_NOISE: Convention = Convention {
        coefficient: LinearCoefficient::One,
        multipliers: Multipliers::Noise,
    };
    pub const TWO_EPS_NOISE: Convention = Convention {
        coefficient: LinearCoefficient::Two,
        multipliers: Multipliers::Noise,
    };

    pub fn parse(s: &str) -> Result<Convention> {
        match s {
            "eps" => Ok(Convention::EPS),
            "2eps" => Ok(Convention::TWO_EPS),
            "eps-noise" => Ok(Convention::EPS_NOISE),
            "2eps-noise" => Ok(Convention::TWO_EPS_NOISE),
            other => Err(Error::InvalidParameter(format!(
                "unknown convention '{other}' (expected eps | 2eps | eps-noise | 2eps-noise)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.coefficient, self.multipliers) {
            (LinearCoefficient::One, Multipliers::Unit) => "eps",
            (LinearCoefficient::Two, Multipliers::Unit) => "2eps",
            (LinearCoefficient::One, Multipliers::Noise) => "eps-noise",
            (LinearCoefficient::Two, Multipliers::Noise) => "2eps-noise",
        }
    }
}

fn resolve_multipliers(
    convention: Convention,
    n: usize,
    xi: Option<&[f64]>,
) -> Result<Option<&[f64]>> {
    match convention.multipliers {
        Multipliers::Unit => Ok(None),
        Multipliers::Noise => {
            let xi = xi.ok_or(Error::MissingTruth)?;
            if xi.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "noise multipliers",
                    expected: n,
                    got: xi.len(),
                });
            }
            Ok(Some(xi))
        }
    }
}

/// Objective value of the offset process at one member.
pub fn offset_objective(
    values: &[f64],
    eps: &[f64],
    xi: Option<&[f64]>,
    c_offset: f64,
    coefficient: LinearCoefficient,
) -> f64 {
    assert_eq!(values.len(), eps.len(), "sign vector length mismatch");
    let n = values.len() as f64;
    let m = coefficient.factor();
    let mut linear = 0.0;
    let mut quad = 0.0;
    match xi {
        Some(xi) => {
            for i in 0..values.len() {
                linear += eps[i] * xi[i] * values[i];
                quad += values[i] * values[i];
            }
        }
        None => {
            for i in 0..values.len() {
                linear += eps[i] * values[i];
                quad += values[i] * values[i];
            }
        }
    }
    (m * linear - c_offset * quad) / n
}

/// Exact supremum over a finite set of vectors: a direct scan of the rows.
pub fn offset_sup_finite(
    dict: &FiniteDictionary,
    eps: &[f64],
    c_offset: f64,
    convention: Convention,
    xi: Option<&[f64]>,
) -> Result<f64> {
    if c_offset <= 0.0 {
        return Err(Error::InvalidParameter(
            "offset multiplier C must be positive".into(),
        ));
    }
    let xi = resolve_multipliers(convention, dict.len_n(), xi)?;
    let mut best = f64::NEG_INFINITY;
    for row in dict.rows() {
        let v = offset_objective(row, eps, xi, c_offset, convention.coefficient);
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

/// Reusable solver for exact suprema over a shifted star family.
///
/// Every member is `a + lambda b` with `a = f_j - f*`, `b = f_k - f_l`. The
/// objective is concave quadratic in lambda, so the per-segment maximum is
/// closed form; the supremum is the maximum over the (j,k,l) family. Gram
/// precomputation makes each segment O(1) after an O(N n) sign pass.
pub struct StarSupSolver {
    /// Dictionary rows followed by f*; index N is f*.
    vectors: Vec<Vec<f64>>,
    /// Plain dot products between all vectors.
    gram: Vec<Vec<f64>>,
    num_base: usize,
    n: usize,
}

impl StarSupSolver {
    pub fn new(class: &ShiftedStarClass) -> Self {
        let mut vectors: Vec<Vec<f64>> = class.dict().rows().to_vec();
        vectors.push(class.f_star().to_vec());
        let m = vectors.len();
        let mut gram = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
                gram[i][j] = dot;
                gram[j][i] = dot;
            }
        }
        StarSupSolver {
            num_base: class.num_base(),
            n: class.len_n(),
            vectors,
            gram,
        }
    }

    pub fn len_n(&self) -> usize {
        self.n
    }

    /// Signed sums `S_v = sum_i eps_i xi_i v_i` for every stored vector.
    fn signed_sums(&self, eps: &[f64], xi: Option<&[f64]>) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| match xi {
                Some(xi) => (0..self.n).map(|i| eps[i] * xi[i] * v[i]).sum(),
                None => (0..self.n).map(|i| eps[i] * v[i]).sum(),
            })
            .collect()
    }

    /// Exact supremum of the offset process over the family.
    pub fn sup(
        &self,
        eps: &[f64],
        c_offset: f64,
        coefficient: LinearCoefficient,
        xi: Option<&[f64]>,
    ) -> f64 {
        assert_eq!(eps.len(), self.n, "sign vector length mismatch");
        let s = self.signed_sums(eps, xi);
        let m = coefficient.factor();
        let nf = self.n as f64;
        let star = self.num_base; // index of f*
        let g = &self.gram;
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.num_base {
            let s_a = s[j] - s[star];
            let q_aa = g[j][j] - 2.0 * g[j][star] + g[star][star];
            for k in 0..self.num_base {
                for l in 0..self.num_base {
                    let s_b = s[k] - s[l];
                    let q_bb = g[k][k] - 2.0 * g[k][l] + g[l][l];
                    let q_ab = g[j][k] - g[j][l] - g[star][k] + g[star][l];
                    let value = if q_bb > 0.0 {
                        let lambda = ((m * s_b - 2.0 * c_offset * q_ab) / (2.0 * c_offset * q_bb))
                            .clamp(0.0, 1.0);
                        (m * (s_a + lambda * s_b)
                            - c_offset * (q_aa + 2.0 * lambda * q_ab + lambda * lambda * q_bb))
                            / nf
                    } else {
                        // b vanishes on the sample: the segment is a point.
                        (m * s_a - c_offset * q_aa) / nf
                    };
                    if value > best {
                        best = value;
                    }
                }
            }
        }
        best
    }
}

/// Exact supremum of the offset process over a shifted star family.
pub fn offset_sup_star(
    class: &ShiftedStarClass,
    eps: &[f64],
    c_offset: f64,
    convention: Convention,
    xi: Option<&[f64]>,
) -> Result<f64> {
    if c_offset <= 0.0 {
        return Err(Error::InvalidParameter(
            "offset multiplier C must be positive".into(),
        ));
    }
    let xi = resolve_multipliers(convention, class.len_n(), xi)?;
    Ok(StarSupSolver::new(class).sup(eps, c_offset, convention.coefficient, xi))
}

/// Result of the linear-class supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSup {
    pub value: f64,
    /// True when the Gram matrix `G = sum x_i x_i^T` was rank deficient and
    /// the supremum was taken over the column space (pseudo-inverse form).
    pub gram_singular: bool,
}

/// Reusable solver for the linear-class supremum
/// `sup_beta (1/n) [ m sum eps_i xi_i x_i^T beta - C beta^T G beta ]`,
/// which equals `a^T G^+ a * m^2 / (4 C n)` with `a = sum eps_i xi_i x_i`.
///
/// With the doubled convention (m = 2) this is `a^T G^+ a / (C n)`, whose
/// expectation over signs is `tr(G^+ H) / (C n)`, `H = sum xi_i^2 x_i x_i^T`.
pub struct LinearSupSolver {
    features: DMatrix<f64>,
    spectral: SpectralPseudoInverse,
}

impl LinearSupSolver {
    pub fn new(class: &LinearClass) -> Self {
        let x = class.features().clone();
        let gram = x.transpose() * &x;
        LinearSupSolver {
            spectral: SpectralPseudoInverse::new(&gram),
            features: x,
        }
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn gram_singular(&self) -> bool {
        self.spectral.rank_deficient
    }

    pub fn sup(
        &self,
        eps: &[f64],
        c_offset: f64,
        coefficient: LinearCoefficient,
        xi: Option<&[f64]>,
    ) -> f64 {
        let n = self.n();
        assert_eq!(eps.len(), n, "sign vector length mismatch");
        let signed = DVector::from_fn(n, |i, _| match xi {
            Some(xi) => eps[i] * xi[i],
            None => eps[i],
        });
        let a = self.features.transpose() * signed;
        let m = coefficient.factor();
        self.spectral.quad_form(&a) * m * m / (4.0 * c_offset * n as f64)
    }
}

/// Exact supremum over a linear class, with a flag for singular Gram matrices.
pub fn offset_sup_linear(
    class: &LinearClass,
    eps: &[f64],
    c_offset: f64,
    convention: Convention,
    xi: Option<&[f64]>,
) -> Result<LinearSup> {
    if c_offset <= 0.0 {
        return Err(Error::InvalidParameter(
            "offset multiplier C must be positive".into(),
        ));
    }
    let xi = resolve_multipliers(convention, class.n(), xi)?;
    let solver = LinearSupSolver::new(class);
    Ok(LinearSup {
        value: solver.sup(eps, c_offset, convention.coefficient, xi),
        gram_singular: solver.gram_singular(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{shifted_star_class, EvaluatedFunction};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn signs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect()
    }

    #[test]
    fn finite_sup_of_zero_vector_is_zero() {
        let dict = FiniteDictionary::new(vec![vec![0.0, 0.0, 0.0]]).unwrap();
        let eps = [1.0, -1.0, 1.0];
        let v = offset_sup_finite(&dict, &eps, 1.0, Convention::EPS, None).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn finite_sup_matches_row_scan() {
        let mut rng = crate::seeding::stream_rng(31, 0);
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let eps = signs(&mut rng, 5);
        let c = 0.7;
        let dict = FiniteDictionary::new(rows.clone()).unwrap();
        let sup = offset_sup_finite(&dict, &eps, c, Convention::EPS, None).unwrap();
        // Longhand oracle.
        let mut best = f64::NEG_INFINITY;
        for row in &rows {
            let mut acc = 0.0;
            for i in 0..5 {
                acc += eps[i] * row[i] - c * row[i] * row[i];
            }
            best = best.max(acc / 5.0);
        }
        assert_relative_eq!(sup, best, epsilon = 1e-14);
    }

    #[test]
    fn star_sup_zero_class() {
        let dict = FiniteDictionary::new(vec![vec![1.0, 2.0]]).unwrap();
        let fstar = EvaluatedFunction::new(vec![1.0, 2.0]).unwrap();
        let h = shifted_star_class(&dict, &fstar).unwrap();
        let eps = [1.0, -1.0];
        let v = offset_sup_star(&h, &eps, 0.5, Convention::TWO_EPS, None).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn star_sup_dominates_lambda_endpoints() {
        let mut rng = crate::seeding::stream_rng(32, 0);
        let n = 7;
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let fstar: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dict = FiniteDictionary::new(rows).unwrap();
        let class = shifted_star_class(&dict, &EvaluatedFunction::new(fstar).unwrap()).unwrap();
        let eps = signs(&mut rng, n);
        let c = 0.4;
        let sup = offset_sup_star(
            &class,
            &eps,
            c,
            Convention::TWO_EPS_NOISE,
            Some(&vec![1.0; n]),
        )
        .unwrap();
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    for lambda in [0.0, 1.0] {
                        let member = class.member(j, k, l, lambda).unwrap();
                        let obj = offset_objective(
                            &member,
                            &eps,
                            Some(&vec![1.0; n]),
                            c,
                            LinearCoefficient::Two,
                        );
                        assert!(sup >= obj - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn star_sup_matches_lambda_grid() {
        let mut rng = crate::seeding::stream_rng(33, 0);
        let n = 6;
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let fstar: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dict = FiniteDictionary::new(rows).unwrap();
        let class = shifted_star_class(&dict, &EvaluatedFunction::new(fstar).unwrap()).unwrap();
        let eps = signs(&mut rng, n);
        let c = 0.3;
        let sup = offset_sup_star(&class, &eps, c, Convention::TWO_EPS_NOISE, Some(&xi)).unwrap();
        let mut grid_best = f64::NEG_INFINITY;
        let steps = 100_000usize;
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    for q in 0..=steps {
                        let lambda = q as f64 / steps as f64;
                        let member = class.member(j, k, l, lambda).unwrap();
                        let obj =
                            offset_objective(&member, &eps, Some(&xi), c, LinearCoefficient::Two);
                        grid_best = grid_best.max(obj);
                    }
                }
            }
        }
        assert!(sup >= grid_best - 1e-12);
        assert!((sup - grid_best).abs() <= 1e-8);
    }

    #[test]
    fn linear_sup_zero_when_signed_sum_vanishes() {
        // Two opposite points with equal signs cancel the linear term.
        let class = LinearClass::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let eps = [1.0, 1.0];
        let sup = offset_sup_linear(&class, &eps, 1.0, Convention::TWO_EPS, None).unwrap();
        assert!(sup.value.abs() < 1e-14);
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // longhand oracle
    fn linear_sup_matches_gradient_ascent_oracle() {
        let mut rng = crate::seeding::stream_rng(34, 0);
        let n = 20;
        let p = 3;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let eps = signs(&mut rng, n);
        let c = 0.6;
        let class = LinearClass::from_rows(&rows).unwrap();
        let sup = offset_sup_linear(&class, &eps, c, Convention::TWO_EPS_NOISE, Some(&xi)).unwrap();
        assert!(!sup.gram_singular);

        // Oracle: steepest ascent on the concave objective with exact step.
        let m = 2.0;
        let mut a = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                a[j] += eps[i] * xi[i] * rows[i][j];
            }
        }
        let mut g = vec![vec![0.0; p]; p];
        for i in 0..n {
            for r in 0..p {
                for s in 0..p {
                    g[r][s] += rows[i][r] * rows[i][s];
                }
            }
        }
        let objective = |beta: &[f64]| -> f64 {
            let mut lin = 0.0;
            let mut quad = 0.0;
            for r in 0..p {
                lin += a[r] * beta[r];
                for s in 0..p {
                    quad += beta[r] * g[r][s] * beta[s];
                }
            }
            (m * lin - c * quad) / n as f64
        };
        let mut beta = vec![0.0; p];
        for _ in 0..200_000 {
            // gradient of the unnormalized objective
            let mut grad = vec![0.0; p];
            for r in 0..p {
                grad[r] = m * a[r];
                for s in 0..p {
                    grad[r] -= 2.0 * c * g[r][s] * beta[s];
                }
            }
            let gnorm: f64 = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm < 1e-12 {
                break;
            }
            // exact line search along grad for a quadratic: t = g.g / (2c g^T G g)
            let mut ggg = 0.0;
            for r in 0..p {
                for s in 0..p {
                    ggg += grad[r] * g[r][s] * grad[s];
                }
            }
            let t = grad.iter().map(|v| v * v).sum::<f64>() / (2.0 * c * ggg);
            for r in 0..p {
                beta[r] += t * grad[r];
            }
        }
        let oracle = objective(&beta);
        assert_relative_eq!(sup.value, oracle, max_relative = 1e-6);
    }

    #[test]
    fn sup_nonincreasing_in_offset_multiplier() {
        let mut rng = crate::seeding::stream_rng(35, 0);
        let n = 9;
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let dict = FiniteDictionary::new(rows.clone()).unwrap();
        let fstar: Vec<f64> = rows[0].clone();
        let star = shifted_star_class(&dict, &EvaluatedFunction::new(fstar).unwrap()).unwrap();
        let linear =
            LinearClass::from_rows(&rows.iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>())
                .unwrap();
        let eps_full = signs(&mut rng, n);
        let eps_lin = signs(&mut rng, 4);
        let cs = [0.1, 0.2, 0.5, 1.0, 2.0];
        let mut prev_f = f64::INFINITY;
        let mut prev_s = f64::INFINITY;
        let mut prev_l = f64::INFINITY;
        for &c in &cs {
            let vf = offset_sup_finite(&dict, &eps_full, c, Convention::EPS, None).unwrap();
            let vs = offset_sup_star(&star, &eps_full, c, Convention::TWO_EPS, None).unwrap();
            let vl = offset_sup_linear(&linear, &eps_lin, c, Convention::EPS, None)
                .unwrap()
                .value;
            assert!(vf <= prev_f + 1e-10);
            assert!(vs <= prev_s + 1e-10);
            assert!(vl <= prev_l + 1e-10);
            prev_f = vf;
            prev_s = vs;
            prev_l = vl;
        }
    }

    #[test]
    fn linear_two_code_paths_agree() {
        // The solver route and the closed-form quadratic route must agree
        // exactly across conventions.
        let mut rng = crate::seeding::stream_rng(36, 0);
        for trial in 0..20 {
            let n = rng.gen_range(5..30);
            let p = rng.gen_range(1..4);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let class = LinearClass::from_rows(&rows).unwrap();
            let eps = signs(&mut rng, n);
            let c = rng.gen_range(0.05..2.0);

            let x = class.features();
            let gram = x.transpose() * x;
            let signed = DVector::from_fn(n, |i, _| eps[i]);
            let a = x.transpose() * signed;
            let inv = gram.clone().try_inverse();
            if inv.is_none() {
                continue;
            }
            let quad = (inv.unwrap() * &a).dot(&a);

            // coefficient 1: a^T G^-1 a / (4 c n)
            let one = offset_sup_linear(&class, &eps, c, Convention::EPS, None).unwrap();
            assert_relative_eq!(one.value, quad / (4.0 * c * n as f64), max_relative = 1e-10);

            // coefficient 2: a^T G^-1 a / (c n)
            let two = offset_sup_linear(&class, &eps, c, Convention::TWO_EPS, None).unwrap();
            assert_relative_eq!(two.value, quad / (c * n as f64), max_relative = 1e-10);
            let _ = trial;
        }
    }

    #[test]
    fn convention_parsing_round_trips() {
        for name in ["eps", "2eps", "eps-noise", "2eps-noise"] {
            assert_eq!(Convention::parse(name).unwrap().name(), name);
        }
        assert!(Convention::parse("3eps").is_err());
    }

    #[test]
    fn noise_convention_requires_xi() {
        let dict = FiniteDictionary::new(vec![vec![1.0, 2.0]]).unwrap();
        let eps = [1.0, -1.0];
        assert!(offset_sup_finite(&dict, &eps, 1.0, Convention::EPS_NOISE, None).is_err());
    }
}
