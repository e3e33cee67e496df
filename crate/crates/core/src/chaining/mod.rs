//! Empirical L2 covers and the chaining bounds built on them.
//!
//! Minimal covering numbers are NP-hard, so covers here are farthest-point
//! greedy constructions: certified upper bounds (every input provably within
//! the scale of some center), which is all the chaining bounds require. The
//! zero function is always a center; a cover of N points therefore has at
//! most N + 1 centers, and the extra unit of bookkeeping is accepted
//! everywhere.

mod bound;

pub use bound::{
    chaining_bound, chaining_bound_sample, chaining_tail_threshold, dudley_integral, log_grid,
    ChainingBound, EntropySource,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{empirical_distance, empirical_norm};
use crate::seeding::stream_rng;

/// A certified cover: every input point is within `scale` of some center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub scale: f64,
    /// Centers, always including the zero function.
    pub centers: Vec<Vec<f64>>,
    /// Certificate: max over inputs of the distance to the nearest center.
    pub covered_max_dist: f64,
    pub size: usize,
}

impl CoverResult {
    fn from_centers(scale: f64, centers: Vec<Vec<f64>>, covered_max_dist: f64) -> Self {
        CoverResult {
            scale,
            size: centers.len(),
            centers,
            covered_max_dist,
        }
    }
}

/// Farthest-point traversal of a point set, seeded at the zero function.
///
/// The traversal order does not depend on the scale; a cover at scale delta
/// is simply the prefix of centers needed to bring the max distance below
/// delta. Cover sizes are therefore nonincreasing in delta by construction,
/// and evaluating many scales against one profile is cheap.
pub struct FarthestPointProfile {
    points: Vec<Vec<f64>>,
    /// Traversal order: indices into `points` (the implicit zero center comes
    /// before all of them).
    order: Vec<usize>,
    /// radii[k] = max distance of any input to the nearest of the first k+1
    /// centers (zero plus order[..k]).
    radii: Vec<f64>,
}

impl FarthestPointProfile {
    pub fn build(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("cover input"));
        }
        let n = points[0].len();
        if n == 0 {
            return Err(Error::Empty("cover input dimension"));
        }
        for p in points {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "cover input lengths",
                    expected: n,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("cover input"));
            }
        }

        // Distances start from the zero center.
        let mut dist: Vec<f64> = points.iter().map(|p| empirical_norm(p)).collect();
        let mut order = Vec::new();
        let mut radii = Vec::new();
        loop {
            let (far_idx, far_dist) = dist.iter().cloned().enumerate().fold(
                (0usize, f64::NEG_INFINITY),
                |acc, (i, d)| {
                    if d > acc.1 {
                        (i, d)
                    } else {
                        acc
                    }
                },
            );
            radii.push(far_dist);
            if far_dist <= 0.0 {
                break;
            }
            order.push(far_idx);
            for (i, p) in points.iter().enumerate() {
                let d = empirical_distance(p, &points[far_idx]);
                if d < dist[i] {
                    dist[i] = d;
                }
            }
            if order.len() == points.len() {
                radii.push(dist.iter().cloned().fold(0.0, f64::max));
                break;
            }
        }
        Ok(FarthestPointProfile {
            points: points.to_vec(),
            order,
            radii,
        })
    }

    /// Number of centers (including zero) needed to certify scale `delta`.
    pub fn cover_size(&self, delta: f64) -> usize {
        // radii[k] is the certificate with k extra centers.
        let k = self
            .radii
            .iter()
            .position(|&r| r <= delta)
            .unwrap_or(self.radii.len() - 1);
        k + 1
    }

    /// log of the cover size at scale delta.
    pub fn log_cover(&self, delta: f64) -> f64 {
        (self.cover_size(delta) as f64).ln()
    }

    /// Materialize the cover at scale `delta`.
    pub fn cover_at(&self, delta: f64) -> Result<CoverResult> {
        if delta <= 0.0 {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        let size = self.cover_size(delta);
        let n = self.points[0].len();
        let mut centers = Vec::with_capacity(size);
        centers.push(vec![0.0; n]);
        for &idx in self.order.iter().take(size - 1) {
            centers.push(self.points[idx].clone());
        }
        let covered_max_dist = self
            .points
            .iter()
            .map(|p| {
                centers
                    .iter()
                    .map(|c| empirical_distance(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        Ok(CoverResult::from_centers(delta, centers, covered_max_dist))
    }

    /// Largest distance of any input to the zero function.
    pub fn max_norm(&self) -> f64 {
        self.radii[0]
    }
}

/// Greedy farthest-point cover of a sample of functions at scale `delta`.
pub fn greedy_cover(points: &[Vec<f64>], delta: f64) -> Result<CoverResult> {
    FarthestPointProfile::build(points)?.cover_at(delta)
}

/// Cover of the star hull around zero, built from a cover of the base class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarCoverResult {
    /// Valid at scale 2 epsilon.
    pub cover: CoverResult,
    /// Size of the underlying cover of the base class at scale epsilon.
    pub base_cover_size: usize,
    /// Size of the lambda grid used for the construction.
    pub lambda_grid_size: usize,
}

/// Construct a 2-epsilon cover of `star(F) = { lambda f }` as scaled copies
/// of an epsilon-cover of F. Requires F inside the unit ball in empirical
/// norm. The validity certificate is evaluated on a dense lambda sample of
/// `cert_lambdas` points per member (mesh epsilon/2 at minimum).
pub fn star_cover_construct(
    points: &[Vec<f64>],
    epsilon: f64,
    cert_lambdas: usize,
) -> Result<StarCoverResult> {
    if epsilon <= 0.0 || epsilon > 1.0 {
        return Err(Error::InvalidParameter("epsilon must be in (0, 1]".into()));
    }
    for (i, p) in points.iter().enumerate() {
        let norm = empirical_norm(p);
        if norm > 1.0 + 1e-12 {
            return Err(Error::NormBoundViolated {
                index: i,
                norm,
                limit: 1.0,
            });
        }
    }
    let base = greedy_cover(points, epsilon)?;

    // Lambda grid of mesh epsilon over [0,1].
    let grid_steps = (1.0 / epsilon).ceil() as usize;
    let lambdas: Vec<f64> = (0..=grid_steps)
        .map(|k| (k as f64 * epsilon).min(1.0))
        .collect();

    let n = points[0].len();
    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for c in &base.centers {
        for &lambda in &lambdas {
            if lambda == 0.0 {
                continue;
            }
            let scaled: Vec<f64> = c.iter().map(|v| lambda * v).collect();
            if scaled.iter().all(|&v| v == 0.0) {
                continue;
            }
            centers.push(scaled);
        }
    }

    // Certify on a dense lambda sample (mesh at most epsilon/2).
    let cert_count = cert_lambdas.max((2.0 / epsilon).ceil() as usize).max(2);
    let mut covered_max = 0.0f64;
    for p in points {
        for k in 0..=cert_count {
            let lambda = k as f64 / cert_count as f64;
            let member: Vec<f64> = p.iter().map(|v| lambda * v).collect();
            let d = centers
                .iter()
                .map(|c| empirical_distance(&member, c))
                .fold(f64::INFINITY, f64::min);
            covered_max = covered_max.max(d);
        }
    }

    Ok(StarCoverResult {
        cover: CoverResult::from_centers(2.0 * epsilon, centers, covered_max),
        base_cover_size: base.size,
        lambda_grid_size: lambdas.len(),
    })
}

/// Cover of the sum class `F + F'` at the summed scale: pairwise sums of
/// centers, with the certificate evaluated on sampled sums.
pub fn sum_class_cover(
    points_f: &[Vec<f64>],
    cover_f: &CoverResult,
    points_g: &[Vec<f64>],
    cover_g: &CoverResult,
    cert_samples: usize,
    seed: u64,
) -> Result<CoverResult> {
    if points_f.is_empty() || points_g.is_empty() {
        return Err(Error::Empty("sum cover input"));
    }
    let n = points_f[0].len();
    if points_g[0].len() != n {
        return Err(Error::DimensionMismatch {
            what: "sum cover inputs",
            expected: n,
            got: points_g[0].len(),
        });
    }
    let mut centers = Vec::with_capacity(cover_f.size * cover_g.size);
    for cf in &cover_f.centers {
        for cg in &cover_g.centers {
            centers.push(cf.iter().zip(cg).map(|(a, b)| a + b).collect::<Vec<f64>>());
        }
    }
    let scale = cover_f.scale + cover_g.scale;
    let mut rng = stream_rng(seed, 0);
    let mut covered_max = 0.0f64;
    for _ in 0..cert_samples {
        let f = &points_f[rng.gen_range(0..points_f.len())];
        let g = &points_g[rng.gen_range(0..points_g.len())];
        let sum: Vec<f64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
        let d = centers
            .iter()
            .map(|c| empirical_distance(&sum, c))
            .fold(f64::INFINITY, f64::min);
        covered_max = covered_max.max(d);
    }
    Ok(CoverResult::from_centers(scale, centers, covered_max))
}
