//! End-to-end experiments: randomized audits of the geometric inequality,
//! rate verification for the parametric / finite-aggregation / nonparametric
//! regimes, the stochastic-dominance diagnostic, the critical-radius rate,
//! and the exhaustive minimax lower-bound comparison.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaining::{chaining_bound, ChainingBound, EntropySource};
use crate::error::{Error, Result};
use crate::estimators::{erm_linear, star_estimator};
use crate::geometry::{
    audit_fit, excess_loss_decomposition, ExcessDecompositionReport, PopulationView, SampleView,
};
use crate::harness::ratefit::RateFit;
use crate::harness::scenarios::{FiniteSupportScenario, LinearGaussianScenario, NoiseLaw};
use crate::model::{
    shifted_star_class, DesignSample, EvaluatedFunction, FiniteDictionary, FunctionClass,
};
use crate::offset::{
    critical_radius, CritradClass, IsometryClass, LinearCoefficient, LinearCritradInstance,
    StarCritradInstance, StarSupSolver,
};
use crate::seeding::{derive_seed, stream_rng};
use crate::stats;

fn default_seed() -> u64 {
    0
}

fn validate_grid(n_grid: &[usize], trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if n_grid.is_empty() || !n_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(
            "n grid must be nonempty and strictly increasing".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Geometric inequality over randomized instances
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeomConfig {
    pub trials: usize,
    /// Inequality constant to audit; 1/18 for arbitrary finite classes.
    pub c: f64,
    pub tol: f64,
    pub max_members: usize,
    pub max_n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for GeomConfig {
    fn default() -> Self {
        GeomConfig {
            trials: 100_000,
            c: 1.0 / 18.0,
            tol: 1e-9,
            max_members: 6,
            max_n: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeomTrialRow {
    pub trial: usize,
    pub n: usize,
    pub members: usize,
    /// Worst observed lhs/rhs ratio; empty when every member sat at the fit.
    pub min_ratio: Option<f64>,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeomTrialsReport {
    pub rows: Vec<GeomTrialRow>,
    pub total_violations: usize,
    pub worst_ratio: Option<f64>,
    pub c: f64,
    pub tol: f64,
}

/// Audit the geometric inequality on random non-convex Gaussian instances.
pub fn geom_check_trials(cfg: &GeomConfig) -> Result<GeomTrialsReport> {
    if cfg.trials == 0 || cfg.max_members < 2 || cfg.max_n < 2 {
        return Err(Error::InvalidParameter(
            "need trials >= 1, max_members >= 2, max_n >= 2".into(),
        ));
    }
    let rows: Vec<GeomTrialRow> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(cfg.seed, trial as u64);
            let members = rng.gen_range(2..=cfg.max_members);
            let n = rng.gen_range(2..=cfg.max_n);
            let dict_rows: Vec<Vec<f64>> = (0..members)
                .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
            let sample = DesignSample::new(x, y).expect("finite gaussian draws");
            let dict = FiniteDictionary::new(dict_rows).expect("finite gaussian draws");
            let fit = star_estimator(&FunctionClass::Finite(dict.clone()), &sample)
                .expect("finite class star fit");
            let report = audit_fit(
                fit.f_hat.values(),
                dict.rows().iter().map(|r| r.as_slice()),
                sample.y(),
                cfg.c,
                cfg.tol,
            );
            GeomTrialRow {
                trial,
                n,
                members,
                min_ratio: report.min_ratio,
                violations: report.violations_at_c,
            }
        })
        .collect();
    let total_violations = rows.iter().map(|r| r.violations).sum();
    let worst_ratio = rows
        .iter()
        .filter_map(|r| r.min_ratio)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
    Ok(GeomTrialsReport {
        rows,
        total_violations,
        worst_ratio,
        c: cfg.c,
        tol: cfg.tol,
    })
}

/// Pythagorean check on linear subspaces: run least squares, then audit
/// random members of the subspace. Returns the worst |lhs - rhs| observed.
pub fn geom_linear_equality_check(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let mut rng = stream_rng(seed, trial as u64);
        let p = rng.gen_range(1..=3usize);
        let n = rng.gen_range(p + 1..=10);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let class = crate::model::LinearClass::from_rows(&rows)?;
        let fit = erm_linear(&class, &y)?;
        let f_hat = class.evaluate(&fit.weights)?;
        for _ in 0..20 {
            let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = class.evaluate(&w)?;
            let report = audit_fit(f_hat.values(), std::iter::once(h.values()), &y, 1.0, 1e-12);
            let rec = &report.records[0];
            worst = worst.max((rec.lhs - rec.rhs_base).abs());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Parametric rate (well-specified least squares)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametricRateConfig {
    pub p: usize,
    pub sigma: f64,
    pub n_grid: Vec<usize>,
    pub trials_per_n: usize,
    /// Extra high-precision point: n and trial count for the constant-window
    /// check.
    pub window_n: usize,
    pub window_trials: usize,
    /// Noise redraws for the conditional-on-design trace check.
    pub trace_trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for ParametricRateConfig {
    fn default() -> Self {
        ParametricRateConfig {
            p: 5,
            sigma: 1.0,
            n_grid: vec![128, 256, 512, 1024, 2048, 4096, 8192],
            trials_per_n: 400,
            window_n: 500,
            window_trials: 2000,
            trace_trials: 4000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametricRow {
    pub n: usize,
    pub trials: usize,
    pub mean_excess: f64,
    pub stderr: f64,
    /// sigma^2 p / n.
    pub theory: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceCheckReport {
    pub n: usize,
    pub trials: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    /// sigma^2 p / n, the conditional-on-design expectation.
    pub target: f64,
    pub within_three_se: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametricRateReport {
    pub rows: Vec<ParametricRow>,
    pub window: ParametricRow,
    pub fit: RateFit,
    pub trace: TraceCheckReport,
}

fn mean_excess_at(
    scenario: &LinearGaussianScenario,
    n: usize,
    trials: usize,
    seed: u64,
) -> (f64, f64) {
    let excesses: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = scenario
                .generate(n, derive_seed(seed, t as u64))
                .expect("valid scenario");
            let fit = erm_linear(&inst.class, inst.sample.y()).expect("least squares");
            scenario.excess_loss(&fit.weights)
        })
        .collect();
    (stats::mean(&excesses), stats::standard_error(&excesses))
}

/// Mean excess loss of least squares across the n-grid, the constant-window
/// point, the log-log slope, and the Gram-trace identity check.
pub fn experiment_parametric_rate(cfg: &ParametricRateConfig) -> Result<ParametricRateReport> {
    validate_grid(&cfg.n_grid, cfg.trials_per_n.min(cfg.window_trials))?;
    let scenario = LinearGaussianScenario::build(cfg.p, cfg.sigma, derive_seed(cfg.seed, 0xA))?;
    let sig2p = cfg.sigma * cfg.sigma * cfg.p as f64;

    let mut rows = Vec::new();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let (mean, se) = mean_excess_at(
            &scenario,
            n,
            cfg.trials_per_n,
            derive_seed(cfg.seed, i as u64),
        );
        let theory = sig2p / n as f64;
        rows.push(ParametricRow {
            n,
            trials: cfg.trials_per_n,
            mean_excess: mean,
            stderr: se,
            theory,
            ratio: mean / theory,
        });
    }
    let fit = RateFit::fit_log_log(
        &cfg.n_grid,
        &rows.iter().map(|r| r.mean_excess).collect::<Vec<_>>(),
    )?;

    let (wmean, wse) = mean_excess_at(
        &scenario,
        cfg.window_n,
        cfg.window_trials,
        derive_seed(cfg.seed, 0xB),
    );
    let wtheory = sig2p / cfg.window_n as f64;
    let window = ParametricRow {
        n: cfg.window_n,
        trials: cfg.window_trials,
        mean_excess: wmean,
        stderr: wse,
        theory: wtheory,
        ratio: wmean / wtheory,
    };

    // Trace identity, conditional on one fixed design: redraw only the noise
    // and compare the Monte Carlo mean of tr(G^-1 H)/n against sigma^2 p / n.
    let trace_n = cfg.window_n;
    let base = scenario.generate(trace_n, derive_seed(cfg.seed, 0xC))?;
    let x = base.class.features().clone();
    let gram_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("trace check needs a nonsingular design".into()))?;
    let traces: Vec<f64> = (0..cfg.trace_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(derive_seed(cfg.seed, 0xD), t as u64);
            let mut h = DMatrix::<f64>::zeros(cfg.p, cfg.p);
            for i in 0..trace_n {
                let z: f64 = StandardNormal.sample(&mut rng);
                let xi = cfg.sigma * z;
                let row = x.row(i);
                for r in 0..cfg.p {
                    for s in 0..cfg.p {
                        h[(r, s)] += xi * xi * row[r] * row[s];
                    }
                }
            }
            (&gram_inv * h).trace() / trace_n as f64
        })
        .collect();
    let mc_mean = stats::mean(&traces);
    let mc_stderr = stats::standard_error(&traces);
    let target = sig2p / trace_n as f64;
    let trace = TraceCheckReport {
        n: trace_n,
        trials: cfg.trace_trials,
        mc_mean,
        mc_stderr,
        target,
        within_three_se: (mc_mean - target).abs() <= 3.0 * mc_stderr,
    };

    Ok(ParametricRateReport {
        rows,
        window,
        fit,
        trace,
    })
}

// ---------------------------------------------------------------------------
// Finite aggregation rate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationRateConfig {
    pub num_members: usize,
    pub support_size: usize,
    pub noise: NoiseLaw,
    pub well_specified: bool,
    pub n_grid: Vec<usize>,
    pub trials_per_n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for AggregationRateConfig {
    fn default() -> Self {
        AggregationRateConfig {
            num_members: 32,
            support_size: 64,
            noise: NoiseLaw::Gaussian { sigma: 0.5 },
            well_specified: true,
            n_grid: vec![128, 256, 512, 1024, 2048, 4096, 8192],
            trials_per_n: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationRow {
    pub n: usize,
    pub trials: usize,
    pub mean_excess: f64,
    pub q90_excess: f64,
    pub q95_excess: f64,
    pub erm_mean_excess: f64,
    pub erm_q90_excess: f64,
    /// Fraction of trials where step two moved off the ERM (lambda* < 1).
    pub frac_lambda_lt_one: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationRateReport {
    pub rows: Vec<AggregationRow>,
    /// Absent for degenerate classes whose excess vanishes identically
    /// (e.g. a singleton dictionary).
    pub fit_q90: Option<RateFit>,
    pub fit_mean: Option<RateFit>,
}

/// Star-estimator excess loss quantiles across the n-grid, with a plain ERM
/// comparison row.
pub fn experiment_finite_aggregation(cfg: &AggregationRateConfig) -> Result<AggregationRateReport> {
    validate_grid(&cfg.n_grid, cfg.trials_per_n)?;
    let scenario = FiniteSupportScenario::build(
        cfg.num_members,
        cfg.support_size,
        cfg.noise,
        cfg.well_specified,
        derive_seed(cfg.seed, 0xAA),
    )?;
    let mut rows = Vec::new();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let per_trial: Vec<(f64, f64, bool)> = (0..cfg.trials_per_n)
            .into_par_iter()
            .map(|t| {
                let inst = scenario
                    .generate(n, derive_seed(cfg.seed, ((i as u64) << 32) ^ t as u64))
                    .expect("valid scenario");
                let fit = star_estimator(&FunctionClass::Finite(inst.dict.clone()), &inst.sample)
                    .expect("finite star fit");
                let star_support = scenario.fit_support_values(&fit).expect("finite fit");
                let star_excess = scenario.excess_loss(&star_support);
                let erm_idx = match fit.g_hat {
                    crate::estimators::StepOneFit::Finite { index } => index,
                    _ => unreachable!("finite class"),
                };
                let erm_excess = scenario.excess_loss(&scenario.dict_support[erm_idx]);
                (star_excess, erm_excess, fit.lambda_star < 1.0)
            })
            .collect();
        let star: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
        let erm: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
        let star_sorted = stats::sorted(&star);
        let erm_sorted = stats::sorted(&erm);
        rows.push(AggregationRow {
            n,
            trials: cfg.trials_per_n,
            mean_excess: stats::mean(&star),
            q90_excess: stats::quantile(&star_sorted, 0.9),
            q95_excess: stats::quantile(&star_sorted, 0.95),
            erm_mean_excess: stats::mean(&erm),
            erm_q90_excess: stats::quantile(&erm_sorted, 0.9),
            frac_lambda_lt_one: per_trial.iter().filter(|t| t.2).count() as f64
                / cfg.trials_per_n as f64,
        });
    }
    let q90: Vec<f64> = rows.iter().map(|r| r.q90_excess).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean_excess).collect();
    let fit_q90 = if q90.iter().all(|&v| v > 0.0) && q90.len() >= 4 {
        Some(RateFit::fit_log_log(&cfg.n_grid, &q90)?)
    } else {
        None
    };
    let fit_mean = if means.iter().all(|&v| v > 0.0) && means.len() >= 4 {
        Some(RateFit::fit_log_log(&cfg.n_grid, &means)?)
    } else {
        None
    };
    Ok(AggregationRateReport {
        rows,
        fit_q90,
        fit_mean,
    })
}

// ---------------------------------------------------------------------------
// Nonparametric chaining rate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonparametricRateConfig {
    /// Entropy growth exponent p in log N2(delta) = delta^-p.
    pub entropy_exponent: f64,
    pub c_offset: f64,
    pub n_grid: Vec<usize>,
    pub gamma_grid_size: usize,
}

impl Default for NonparametricRateConfig {
    fn default() -> Self {
        NonparametricRateConfig {
            entropy_exponent: 1.0,
            c_offset: 0.25,
            n_grid: vec![128, 256, 512, 1024, 2048, 4096, 8192, 16384],
            gamma_grid_size: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonparametricRow {
    pub n: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub term_finite: f64,
    pub term_alpha: f64,
    pub term_dudley: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonparametricRateReport {
    pub entropy_exponent: f64,
    pub rows: Vec<NonparametricRow>,
    /// Absent when some totals are zero (degenerate classes).
    pub fit: Option<RateFit>,
}

/// Chaining-bound totals across the n-grid under the entropy growth law.
/// Covers at the scales this regime needs cannot be materialized from any
/// storable sample, so the bound is evaluated with the closed-form entropy
/// (any entropy upper bound is admissible in the chaining expression).
pub fn experiment_nonparametric_rate(
    cfg: &NonparametricRateConfig,
) -> Result<NonparametricRateReport> {
    validate_grid(&cfg.n_grid, 1)?;
    if cfg.entropy_exponent <= 0.0 {
        return Err(Error::InvalidParameter(
            "entropy exponent must be positive".into(),
        ));
    }
    let entropy = EntropySource::Analytic {
        exponent: cfg.entropy_exponent,
    };
    let gamma_grid = crate::chaining::log_grid(1e-4, 4.0, cfg.gamma_grid_size.max(2));
    // alpha = 0 plus a log grid, for regimes with a divergent entropy integral
    let mut alpha_grid = vec![0.0];
    alpha_grid.extend(crate::chaining::log_grid(1e-6, 1.0, 60));

    let rows: Vec<NonparametricRow> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let b: ChainingBound =
                chaining_bound(&entropy, n, cfg.c_offset, &gamma_grid, &alpha_grid)?;
            Ok(NonparametricRow {
                n,
                gamma: b.gamma,
                alpha: b.alpha,
                term_finite: b.term_finite,
                term_alpha: b.term_alpha,
                term_dudley: b.term_dudley,
                total: b.total,
            })
        })
        .collect::<Result<_>>()?;

    let fit = if rows.iter().all(|r| r.total > 0.0) && rows.len() >= 4 {
        Some(RateFit::fit_log_log(
            &cfg.n_grid,
            &rows.iter().map(|r| r.total).collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(NonparametricRateReport {
        entropy_exponent: cfg.entropy_exponent,
        rows,
        fit,
    })
}

// ---------------------------------------------------------------------------
// Stochastic dominance diagnostic
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceConfig {
    pub trials: usize,
    pub n: usize,
    pub num_members: usize,
    pub support_size: usize,
    pub noise: NoiseLaw,
    pub well_specified: bool,
    /// Base offset constant C; the quadratic parameter grid is expressed as
    /// multiples of it.
    pub c_offset: f64,
    /// Quadratic constants to tabulate, e.g. {C/4, C/2, C}.
    pub c_tilde_grid: Vec<f64>,
    /// The c' parameter entering the validity floor for u; defaults to C/2.
    pub c_prime: f64,
    pub isometry_trials: usize,
    /// Eta for the isometry measurement (c/4 with c = 1/18 by default).
    pub eta: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for DominanceConfig {
    fn default() -> Self {
        let c_offset = 1.0;
        DominanceConfig {
            trials: 800,
            n: 100,
            num_members: 6,
            support_size: 40,
            noise: NoiseLaw::Gaussian { sigma: 0.5 },
            well_specified: false,
            c_offset,
            c_tilde_grid: vec![c_offset / 4.0, c_offset / 2.0, c_offset],
            c_prime: c_offset / 2.0,
            isometry_trials: 400,
            eta: 1.0 / 72.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceRow {
    pub c_tilde: f64,
    pub u: f64,
    pub prob_excess_gt_4u: f64,
    pub prob_sup_gt_u: f64,
    /// 4 delta-hat + Monte Carlo slack.
    pub allowance: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    /// Measured isometry failure rate at the configured eta. Often 1 at desk
    /// scale: the eta = c/4 premise needs n beyond these sample sizes, which
    /// makes the delta-based allowance generous.
    pub delta_hat: f64,
    pub eta: f64,
    /// sup over the segment family (lambda grid) of E h^4 / (E h^2)^2.
    pub a_moment: f64,
    /// Exact fourth moment of the noise xi.
    pub b_moment: f64,
    /// Validity floor 32 sqrt(A B) / (c' n) for the deviation parameter u.
    pub u_threshold: f64,
    pub violations: usize,
    /// Rows where even the raw ordering P(excess > 4u) <= 4 P(sup > u) + slack
    /// fails, with the delta allowance omitted entirely.
    pub violations_ignoring_delta: usize,
    pub noise: NoiseLaw,
    pub trials: usize,
}

/// Exact infimum over the shifted star family of the empirical-to-population
/// second-moment ratio for one sample: per segment the ratio of two
/// quadratics in lambda, scanned at its critical points and endpoints.
fn star_isometry_inf(scenario: &FiniteSupportScenario, sample_indices: &[usize]) -> f64 {
    let n = sample_indices.len() as f64;
    let nb = scenario.num_members();
    let star = nb; // index of f* in the extended vector list
    let mut support_vectors: Vec<&[f64]> =
        scenario.dict_support.iter().map(|r| r.as_slice()).collect();
    support_vectors.push(scenario.fstar_support());
    let m = support_vectors.len();

    let mut emp = vec![vec![0.0; m]; m];
    let mut pop = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let e: f64 = sample_indices
                .iter()
                .map(|&k| support_vectors[i][k] * support_vectors[j][k])
                .sum::<f64>()
                / n;
            emp[i][j] = e;
            emp[j][i] = e;
            let p: f64 = (0..scenario.support_size())
                .map(|k| scenario.weights[k] * support_vectors[i][k] * support_vectors[j][k])
                .sum();
            pop[i][j] = p;
            pop[j][i] = p;
        }
    }

    let mut inf = f64::INFINITY;
    for j in 0..nb {
        let e_aa = emp[j][j] - 2.0 * emp[j][star] + emp[star][star];
        let p_aa = pop[j][j] - 2.0 * pop[j][star] + pop[star][star];
        for k in 0..nb {
            for l in 0..nb {
                let e_bb = emp[k][k] - 2.0 * emp[k][l] + emp[l][l];
                let e_ab = emp[j][k] - emp[j][l] - emp[star][k] + emp[star][l];
                let p_bb = pop[k][k] - 2.0 * pop[k][l] + pop[l][l];
                let p_ab = pop[j][k] - pop[j][l] - pop[star][k] + pop[star][l];
                // ratio(l) = N(l)/D(l), both quadratics; critical points solve
                // N'D - ND' = 0, a quadratic itself.
                let (n2, n1, n0) = (e_bb, 2.0 * e_ab, e_aa);
                let (d2, d1, d0) = (p_bb, 2.0 * p_ab, p_aa);
                let qa = n2 * d1 - n1 * d2;
                let qb = 2.0 * (n2 * d0 - n0 * d2);
                let qc = n1 * d0 - n0 * d1;
                let mut candidates = vec![0.0, 1.0];
                if qa.abs() > 1e-300 {
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc >= 0.0 {
                        let root = disc.sqrt();
                        candidates.push((-qb - root) / (2.0 * qa));
                        candidates.push((-qb + root) / (2.0 * qa));
                    }
                } else if qb.abs() > 1e-300 {
                    candidates.push(-qc / qb);
                }
                for lam in candidates {
                    if !(0.0..=1.0).contains(&lam) {
                        continue;
                    }
                    let d = d2 * lam * lam + d1 * lam + d0;
                    if d <= 1e-15 {
                        continue; // zero-population-norm member, excluded
                    }
                    let e = n2 * lam * lam + n1 * lam + n0;
                    inf = inf.min(e / d);
                }
            }
        }
    }
    inf
}

/// Empirical-CDF comparison of excess loss against the offset supremum over
/// the shifted star family, across a grid of quadratic constants. Reported as
/// a diagnostic: the theory's absolute constants are unspecified, so rows are
/// tabulated against the measured isometry failure rate, never asserted with
/// invented constants.
pub fn experiment_dominance(cfg: &DominanceConfig) -> Result<DominanceReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let scenario = FiniteSupportScenario::build(
        cfg.num_members,
        cfg.support_size,
        cfg.noise,
        cfg.well_specified,
        derive_seed(cfg.seed, 0xD0),
    )?;

    // Isometry failure rate over the full (continuous-lambda) family.
    let infs: Vec<f64> = (0..cfg.isometry_trials)
        .into_par_iter()
        .map(|t| {
            let inst = scenario
                .generate(cfg.n, derive_seed(cfg.seed, 0xE000 + t as u64))
                .expect("valid scenario");
            star_isometry_inf(&scenario, &inst.sample_indices)
        })
        .collect();
    let delta_hat =
        infs.iter().filter(|&&v| v < 1.0 - cfg.eta).count() as f64 / cfg.isometry_trials as f64;

    // Per-trial excess loss and offset suprema at each c-tilde.
    let per_trial: Vec<(f64, Vec<f64>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let inst = scenario
                .generate(cfg.n, derive_seed(cfg.seed, 0xF000 + t as u64))
                .expect("valid scenario");
            let fit = star_estimator(&FunctionClass::Finite(inst.dict.clone()), &inst.sample)
                .expect("finite star fit");
            let excess =
                scenario.excess_loss(&scenario.fit_support_values(&fit).expect("finite fit"));
            let fstar_sample: Vec<f64> = inst
                .sample_indices
                .iter()
                .map(|&k| scenario.fstar_support()[k])
                .collect();
            let class = shifted_star_class(
                &inst.dict,
                &EvaluatedFunction::new(fstar_sample).expect("finite values"),
            )
            .expect("matched lengths");
            let solver = StarSupSolver::new(&class);
            let mut rng = stream_rng(derive_seed(cfg.seed, 0x1F00), t as u64);
            let eps: Vec<f64> = (0..cfg.n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let xi = inst.sample.truth().expect("generated with truth").xi();
            let sups: Vec<f64> = cfg
                .c_tilde_grid
                .iter()
                .map(|&ct| solver.sup(&eps, ct, LinearCoefficient::One, Some(xi)))
                .collect();
            (excess, sups)
        })
        .collect();

    let excesses: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    // u-grid from pooled quantiles of the supremum scale.
    let pooled: Vec<f64> = per_trial
        .iter()
        .flat_map(|t| t.1.iter().cloned())
        .chain(excesses.iter().map(|&e| e / 4.0))
        .filter(|v| v.is_finite())
        .collect();
    let pooled_sorted = stats::sorted(&pooled);
    let mut u_grid: Vec<f64> = [0.5, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99]
        .iter()
        .map(|&q| stats::quantile(&pooled_sorted, q))
        .collect();
    u_grid.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut rows = Vec::new();
    for (ci, &c_tilde) in cfg.c_tilde_grid.iter().enumerate() {
        let sups: Vec<f64> = per_trial.iter().map(|t| t.1[ci]).collect();
        for &u in &u_grid {
            if u <= 0.0 {
                continue;
            }
            let lhs = stats::exceedance(&excesses, 4.0 * u);
            let rhs = stats::exceedance(&sups, u);
            let slack = 3.0
                * ((lhs.max(1e-12) * (1.0 - lhs) / cfg.trials as f64).sqrt()
                    + 4.0 * (rhs.max(1e-12) * (1.0 - rhs) / cfg.trials as f64).sqrt());
            let allowance = 4.0 * delta_hat + slack;
            rows.push(DominanceRow {
                c_tilde,
                u,
                prob_excess_gt_4u: lhs,
                prob_sup_gt_u: rhs,
                allowance,
                violation: lhs > 4.0 * rhs + allowance,
            });
        }
    }

    // Moment diagnostics on a lambda grid over the support.
    let mut a_moment = 0.0f64;
    let nb = scenario.num_members();
    for j in 0..nb {
        for k in 0..nb {
            for l in 0..nb {
                for lam_step in 0..=8 {
                    let lam = lam_step as f64 / 8.0;
                    let mut e2 = 0.0;
                    let mut e4 = 0.0;
                    for s in 0..scenario.support_size() {
                        let h = (scenario.dict_support[j][s] - scenario.fstar_support()[s])
                            + lam * (scenario.dict_support[k][s] - scenario.dict_support[l][s]);
                        e2 += scenario.weights[s] * h * h;
                        e4 += scenario.weights[s] * h.powi(4);
                    }
                    if e2 > 1e-15 {
                        a_moment = a_moment.max(e4 / (e2 * e2));
                    }
                }
            }
        }
    }
    let b_moment = scenario.xi_fourth_moment();
    let u_threshold = 32.0 * (a_moment * b_moment).sqrt() / (cfg.c_prime * cfg.n as f64);

    let violations = rows.iter().filter(|r| r.violation).count();
    let violations_ignoring_delta = rows
        .iter()
        .filter(|r| r.prob_excess_gt_4u > 4.0 * r.prob_sup_gt_u + (r.allowance - 4.0 * delta_hat))
        .count();
    Ok(DominanceReport {
        rows,
        delta_hat,
        eta: cfg.eta,
        a_moment,
        b_moment,
        u_threshold,
        violations,
        violations_ignoring_delta,
        noise: cfg.noise,
        trials: cfg.trials,
    })
}

// ---------------------------------------------------------------------------
// Critical radius experiments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CritradRateConfig {
    pub p: usize,
    pub sigma: f64,
    pub kappa: f64,
    pub delta: f64,
    pub c_offset: f64,
    pub reps: usize,
    pub n_grid: Vec<usize>,
    pub r_bracket: (f64, f64),
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for CritradRateConfig {
    fn default() -> Self {
        let c_offset = 0.5;
        CritradRateConfig {
            p: 3,
            sigma: 1.0,
            kappa: c_offset * (1.0 - 1.0 / 72.0),
            delta: 0.05,
            c_offset,
            reps: 2000,
            n_grid: vec![128, 256, 512, 1024, 2048, 4096],
            r_bracket: (1e-4, 50.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CritradRateRow {
    pub n: usize,
    pub r: f64,
    pub r_squared: f64,
    pub prob_at_r: f64,
    pub restriction_freq: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CritradRateReport {
    pub rows: Vec<CritradRateRow>,
    pub fit: RateFit,
}

/// Critical radius across the n-grid on the well-specified linear scenario;
/// r^2 should decay like 1/n.
pub fn experiment_critrad_rate(cfg: &CritradRateConfig) -> Result<CritradRateReport> {
    validate_grid(&cfg.n_grid, cfg.reps)?;
    let scenario = LinearGaussianScenario::build(cfg.p, cfg.sigma, derive_seed(cfg.seed, 0xC0))?;
    let mut rows = Vec::new();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        let inst = scenario.generate(n, derive_seed(cfg.seed, 0xC1 + i as u64))?;
        let xi = inst
            .sample
            .truth()
            .ok_or(Error::MissingTruth)?
            .xi()
            .to_vec();
        let class = CritradClass::Linear(LinearCritradInstance {
            features: inst.class.features().clone(),
            covariance: DMatrix::identity(cfg.p, cfg.p),
            xi,
        });
        let res = critical_radius(
            &class,
            cfg.kappa,
            cfg.delta,
            cfg.c_offset,
            cfg.reps,
            cfg.r_bracket,
            derive_seed(cfg.seed, 0xC2 + i as u64),
        )?;
        rows.push(CritradRateRow {
            n,
            r: res.r,
            r_squared: res.r * res.r,
            prob_at_r: res.prob_estimate_at_r,
            restriction_freq: res.restriction_identity_freq,
        });
    }
    let fit = RateFit::fit_log_log(
        &cfg.n_grid,
        &rows.iter().map(|r| r.r_squared).collect::<Vec<_>>(),
    )?;
    Ok(CritradRateReport { rows, fit })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictionIdentityConfig {
    pub num_members: usize,
    pub support_size: usize,
    pub n: usize,
    pub noise: NoiseLaw,
    pub kappa: f64,
    pub delta: f64,
    pub c_offset: f64,
    /// Replications per bisection step of the radius search.
    pub reps_search: usize,
    /// Fresh draws for the final identity frequency.
    pub reps_check: usize,
    pub r_bracket: (f64, f64),
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for RestrictionIdentityConfig {
    fn default() -> Self {
        let c_offset = 0.5;
        RestrictionIdentityConfig {
            num_members: 5,
            support_size: 40,
            n: 200,
            noise: NoiseLaw::Gaussian { sigma: 0.5 },
            kappa: c_offset * (1.0 - 1.0 / 72.0),
            delta: 0.05,
            c_offset,
            reps_search: 2000,
            reps_check: 10_000,
            r_bracket: (1e-4, 50.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictionIdentityReport {
    pub r: f64,
    pub prob_at_r: f64,
    pub identity_freq: f64,
    /// 1 - 2 delta - binomial slack.
    pub required_freq: f64,
    pub pass: bool,
}

/// Restriction identity on a finite-support star family: the unrestricted
/// supremum should equal the r-ball supremum in at least a 1 - 2 delta
/// fraction of draws at the critical radius.
pub fn experiment_restriction_identity(
    cfg: &RestrictionIdentityConfig,
) -> Result<RestrictionIdentityReport> {
    let scenario = FiniteSupportScenario::build(
        cfg.num_members,
        cfg.support_size,
        cfg.noise,
        true,
        derive_seed(cfg.seed, 0xB0),
    )?;
    let inst = scenario.generate(cfg.n, derive_seed(cfg.seed, 0xB1))?;
    let xi = inst
        .sample
        .truth()
        .ok_or(Error::MissingTruth)?
        .xi()
        .to_vec();
    let star = StarCritradInstance {
        dict_support: scenario.dict_support.clone(),
        fstar_support: scenario.fstar_support().to_vec(),
        weights: scenario.weights.clone(),
        sample_indices: inst.sample_indices.clone(),
        xi,
    };
    let class = CritradClass::Star(star);
    let res = critical_radius(
        &class,
        cfg.kappa,
        cfg.delta,
        cfg.c_offset,
        cfg.reps_search,
        cfg.r_bracket,
        derive_seed(cfg.seed, 0xB2),
    )?;
    // Identity frequency at the found radius, on a larger fresh draw.
    let (prob_at_r, identity_freq) = crate::offset::critrad_evaluate_at(
        &class,
        res.r,
        cfg.kappa,
        cfg.c_offset,
        cfg.reps_check,
        derive_seed(cfg.seed, 0xB3),
    )?;
    let slack = stats::binomial_slack(2.0 * cfg.delta, cfg.reps_check);
    let required = 1.0 - 2.0 * cfg.delta - slack;
    Ok(RestrictionIdentityReport {
        r: res.r,
        prob_at_r,
        identity_freq,
        required_freq: required,
        pass: identity_freq >= required,
    })
}

// ---------------------------------------------------------------------------
// Minimax lower bound (exhaustive)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimaxConfig {
    pub instances: usize,
    /// Sample size n of the estimation problem (<= 4).
    pub n: usize,
    /// Oversampling factor c (integer, >= 1); the design has (1+c) n points.
    pub c: usize,
    pub max_members: usize,
    /// Optional lambda grid for the estimator responses; None solves the
    /// per-segment minimization in closed form (zero slack).
    pub lambda_grid: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        MinimaxConfig {
            instances: 10,
            n: 2,
            c: 1,
            max_members: 3,
            lambda_grid: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimaxRecord {
    pub instance: usize,
    pub n: usize,
    pub c: usize,
    pub members: usize,
    /// Offset complexity of F over the full (1+c) n design.
    pub rad_full: f64,
    /// Worst offset complexity of G = F + star(F - F) over c n-point
    /// sub-designs.
    pub rad_sub: f64,
    /// rad_full - c/(1+c) * rad_sub.
    pub lower_bound: f64,
    /// Bayes-optimal average regret over the sign family (a lower bound on
    /// the minimax regret).
    pub minimax_regret: f64,
    /// Discretization slack of the estimator responses (zero for the exact
    /// closed-form minimizer).
    pub slack: f64,
    pub holds: bool,
}

/// Segment data on a subset of design points for G = F + star(F - F).
struct SegmentTable {
    /// Rows of F restricted to the chosen points.
    rows: Vec<Vec<f64>>,
    /// Dot products between rows on those points.
    gram: Vec<Vec<f64>>,
}

impl SegmentTable {
    fn new(values: &[Vec<f64>], points: &[usize]) -> Self {
        let rows: Vec<Vec<f64>> = values
            .iter()
            .map(|r| points.iter().map(|&k| r[k]).collect())
            .collect();
        let nb = rows.len();
        let mut gram = vec![vec![0.0; nb]; nb];
        for i in 0..nb {
            for j in i..nb {
                let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                gram[i][j] = d;
                gram[j][i] = d;
            }
        }
        SegmentTable { rows, gram }
    }

    fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// max over g in G of sum_t (2 eps_t g_t - g_t^2) for signs on the
    /// restricted points (unnormalized).
    fn sup_doubled(&self, eps: &[f64]) -> f64 {
        let nb = self.num_rows();
        let s: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.iter().zip(eps).map(|(v, e)| v * e).sum())
            .collect();
        let g = &self.gram;
        let mut best = f64::NEG_INFINITY;
        for j in 0..nb {
            for k in 0..nb {
                for l in 0..nb {
                    let s_b = s[k] - s[l];
                    let q_bb = g[k][k] - 2.0 * g[k][l] + g[l][l];
                    let q_ab = g[j][k] - g[j][l];
                    let value = if q_bb > 0.0 {
                        let lam = ((s_b - q_ab) / q_bb).clamp(0.0, 1.0);
                        2.0 * (s[j] + lam * s_b) - (g[j][j] + 2.0 * lam * q_ab + lam * lam * q_bb)
                    } else {
                        2.0 * s[j] - g[j][j]
                    };
                    if value > best {
                        best = value;
                    }
                }
            }
        }
        best
    }

    /// min over g in G of sum_t g_t^2 - 2 sum_{t in obs} eps_t g_t, where
    /// `target` holds the observed signs (zeros elsewhere). Returns the
    /// minimum; `lambda_grid` restricts lambda to a grid when given.
    fn min_response(&self, target: &[f64], lambda_grid: Option<usize>) -> f64 {
        let nb = self.num_rows();
        let s: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.iter().zip(target).map(|(v, e)| v * e).sum())
            .collect();
        let g = &self.gram;
        let mut best = f64::INFINITY;
        for j in 0..nb {
            for k in 0..nb {
                for l in 0..nb {
                    let s_b = s[k] - s[l];
                    let q_bb = g[k][k] - 2.0 * g[k][l] + g[l][l];
                    let q_ab = g[j][k] - g[j][l];
                    // psi(lam) = q_aa + 2 lam q_ab + lam^2 q_bb - 2 (s_a + lam s_b)
                    let value = match lambda_grid {
                        None => {
                            let lam = if q_bb > 0.0 {
                                ((s_b - q_ab) / q_bb).clamp(0.0, 1.0)
                            } else {
                                0.0
                            };
                            g[j][j] + 2.0 * lam * q_ab + lam * lam * q_bb - 2.0 * (s[j] + lam * s_b)
                        }
                        Some(grid) => {
                            let mut m = f64::INFINITY;
                            for q in 0..=grid {
                                let lam = q as f64 / grid as f64;
                                let v = g[j][j] + 2.0 * lam * q_ab + lam * lam * q_bb
                                    - 2.0 * (s[j] + lam * s_b);
                                m = m.min(v);
                            }
                            m
                        }
                    };
                    if value < best {
                        best = value;
                    }
                }
            }
        }
        best
    }

    fn max_q_bb(&self) -> f64 {
        let nb = self.num_rows();
        let g = &self.gram;
        let mut worst = 0.0f64;
        for k in 0..nb {
            for l in 0..nb {
                worst = worst.max(g[k][k] - 2.0 * g[k][l] + g[l][l]);
            }
        }
        worst
    }
}

/// max over f in F of sum_t (2 eps_t f_t - f_t^2) (unnormalized).
fn finite_sup_doubled(rows: &[Vec<f64>], eps: &[f64]) -> f64 {
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(eps)
                .map(|(v, e)| 2.0 * e * v - v * v)
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn signs_from_mask(mask: u32, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| if mask & (1 << i) != 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Enumerate multisets of size k from m items, invoking the callback with
/// each (as a sorted index vector).
fn for_each_multiset(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(m, k, i, cur, f);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    rec(m, k, 0, &mut cur, f);
}

/// Exhaustive check of the minimax lower bound for one finite class given by
/// values on the (1+c) n design points.
pub fn minimax_lower_bound_check(
    values: &FiniteDictionary,
    n: usize,
    c: usize,
    lambda_grid: Option<usize>,
) -> Result<MinimaxRecord> {
    if n == 0 || n > 4 {
        return Err(Error::InvalidParameter("n must be in 1..=4".into()));
    }
    if c == 0 {
        return Err(Error::InvalidParameter("c must be >= 1".into()));
    }
    let m_total = (1 + c) * n;
    if m_total > 16 {
        return Err(Error::InstanceTooLarge(format!(
            "(1+c) n = {m_total} exceeds the 2^16 sign-pattern cap"
        )));
    }
    if values.len_n() != m_total {
        return Err(Error::DimensionMismatch {
            what: "design points",
            expected: m_total,
            got: values.len_n(),
        });
    }
    let cn = c * n;
    // multisets of size cn from m_total points, times 2^cn sign patterns
    let multisets = {
        let mut count = 0usize;
        for_each_multiset(m_total, cn, &mut |_| count += 1);
        count
    };
    if multisets.saturating_mul(1 << cn) > 20_000_000 {
        return Err(Error::InstanceTooLarge(
            "sub-design enumeration for the subtracted complexity is too large".into(),
        ));
    }

    let rows = values.rows();
    let m_f = m_total as f64;

    // First complexity: E_eps max_f over the full design.
    let full_points: Vec<usize> = (0..m_total).collect();
    let patterns = 1u32 << m_total;
    let mut acc = 0.0;
    for mask in 0..patterns {
        let eps = signs_from_mask(mask, m_total);
        acc += finite_sup_doubled(rows, &eps) / m_f;
    }
    let rad_full = acc / patterns as f64;

    // Subtracted complexity: worst cn-point multiset for G = F + star(F-F).
    let mut rad_sub = f64::NEG_INFINITY;
    for_each_multiset(m_total, cn, &mut |points| {
        let table = SegmentTable::new(rows, points);
        let sub_patterns = 1u32 << cn;
        let mut sub_acc = 0.0;
        for mask in 0..sub_patterns {
            let eps = signs_from_mask(mask, cn);
            sub_acc += table.sup_doubled(&eps) / cn as f64;
        }
        rad_sub = rad_sub.max(sub_acc / sub_patterns as f64);
    });

    let lower_bound = rad_full - (c as f64 / (1.0 + c as f64)) * rad_sub;

    // Bayes-optimal average regret over the sign family: enumerate samples
    // (sequences of design indices) and observed sign patterns.
    let full_table = SegmentTable::new(rows, &full_points);
    let seq_count = m_total.pow(n as u32);
    let mut bayes_term = 0.0;
    let mut seq = vec![0usize; n];
    for s in 0..seq_count {
        let mut v = s;
        for slot in seq.iter_mut() {
            *slot = v % m_total;
            v /= m_total;
        }
        let mut observed: Vec<usize> = seq.clone();
        observed.sort_unstable();
        observed.dedup();
        let obs_patterns = 1u32 << observed.len();
        let mut seq_acc = 0.0;
        for mask in 0..obs_patterns {
            let mut target = vec![0.0; m_total];
            for (bit, &idx) in observed.iter().enumerate() {
                target[idx] = if mask & (1 << bit) != 0 { 1.0 } else { -1.0 };
            }
            seq_acc += full_table.min_response(&target, lambda_grid) / m_f;
        }
        bayes_term += seq_acc / obs_patterns as f64;
    }
    bayes_term /= seq_count as f64;
    let minimax_regret = rad_full + bayes_term;

    let slack = match lambda_grid {
        None => 0.0,
        Some(grid) => {
            // Off-grid loss of the quadratic in lambda over one grid step.
            let h = 1.0 / grid as f64;
            full_table.max_q_bb() * h * h / (4.0 * m_f)
        }
    };
    let tol = 1e-9 * (1.0 + lower_bound.abs() + minimax_regret.abs());

    Ok(MinimaxRecord {
        instance: 0,
        n,
        c,
        members: rows.len(),
        rad_full,
        rad_sub,
        lower_bound,
        minimax_regret,
        slack,
        holds: minimax_regret >= lower_bound - slack - tol,
    })
}

/// Randomized instances of the exhaustive lower-bound comparison.
pub fn experiment_minimax(cfg: &MinimaxConfig) -> Result<Vec<MinimaxRecord>> {
    let m_total = (1 + cfg.c) * cfg.n;
    let mut records = Vec::with_capacity(cfg.instances);
    for inst in 0..cfg.instances {
        let mut rng = stream_rng(cfg.seed, inst as u64);
        let members = rng.gen_range(1..=cfg.max_members.max(1));
        let rows: Vec<Vec<f64>> = (0..members)
            .map(|_| (0..m_total).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let dict = FiniteDictionary::new(rows)?;
        let mut rec = minimax_lower_bound_check(&dict, cfg.n, cfg.c, cfg.lambda_grid)?;
        rec.instance = inst;
        records.push(rec);
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Excess-loss decomposition demos
// ---------------------------------------------------------------------------

/// Well-specified linear toy with a Monte Carlo population view.
pub fn excess_decomposition_linear_demo(
    p: usize,
    n: usize,
    eval_points: usize,
    sigma: f64,
    c: f64,
    seed: u64,
) -> Result<ExcessDecompositionReport> {
    let scenario = LinearGaussianScenario::build(p, sigma, derive_seed(seed, 1))?;
    let inst = scenario.generate(n, derive_seed(seed, 2))?;
    let fit = erm_linear(&inst.class, inst.sample.y())?;
    let f_hat_sample = inst.class.evaluate(&fit.weights)?;
    let truth = inst.sample.truth().ok_or(Error::MissingTruth)?;

    let mut rng = stream_rng(seed, 3);
    let mut y_e = Vec::with_capacity(eval_points);
    let mut fstar_e = Vec::with_capacity(eval_points);
    let mut fhat_e = Vec::with_capacity(eval_points);
    for _ in 0..eval_points {
        let x: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fs: f64 = x.iter().zip(&scenario.beta_star).map(|(a, b)| a * b).sum();
        let fh: f64 = x.iter().zip(&fit.weights).map(|(a, b)| a * b).sum();
        let z: f64 = StandardNormal.sample(&mut rng);
        y_e.push(fs + sigma * z);
        fstar_e.push(fs);
        fhat_e.push(fh);
    }
    Ok(excess_loss_decomposition(
        &SampleView {
            y: inst.sample.y(),
            f_star: truth.f_star(),
            f_hat: f_hat_sample.values(),
        },
        &PopulationView {
            y: &y_e,
            f_star: &fstar_e,
            f_hat: &fhat_e,
            weights: None,
        },
        c,
    ))
}

/// Misspecified finite dictionary with the exact finite-support population.
pub fn excess_decomposition_finite_demo(
    num_members: usize,
    support_size: usize,
    n: usize,
    noise: NoiseLaw,
    c: f64,
    seed: u64,
) -> Result<ExcessDecompositionReport> {
    let scenario = FiniteSupportScenario::build(
        num_members,
        support_size,
        noise,
        false,
        derive_seed(seed, 1),
    )?;
    let inst = scenario.generate(n, derive_seed(seed, 2))?;
    let fit = star_estimator(&FunctionClass::Finite(inst.dict.clone()), &inst.sample)?;
    let truth = inst.sample.truth().ok_or(Error::MissingTruth)?;
    let fhat_support = scenario.fit_support_values(&fit)?;
    // Conditional means as the population responses keep every term exact
    // (Y enters each term linearly or through the variance, which cancels).
    Ok(excess_loss_decomposition(
        &SampleView {
            y: inst.sample.y(),
            f_star: truth.f_star(),
            f_hat: fit.f_hat.values(),
        },
        &PopulationView {
            y: &scenario.cond_mean,
            f_star: scenario.fstar_support(),
            f_hat: &fhat_support,
            weights: Some(&scenario.weights),
        },
        c,
    ))
}

// ---------------------------------------------------------------------------
// Isometry experiment wrapper
// ---------------------------------------------------------------------------

/// Lower-isometry report for the dictionary of a finite-support scenario.
pub fn isometry_for_scenario(
    scenario: &FiniteSupportScenario,
    eta: f64,
    trials: usize,
    n: usize,
    seed: u64,
) -> Result<crate::offset::IsometryReport> {
    let class = IsometryClass::FiniteOnSupport {
        support_values: scenario.dict_support.clone(),
        weights: scenario.weights.clone(),
    };
    crate::offset::isometry_check(&class, eta, trials, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geom_trials_have_no_violations_at_the_guaranteed_constant() {
        let cfg = GeomConfig {
            trials: 2000,
            ..GeomConfig::default()
        };
        let report = geom_check_trials(&cfg).unwrap();
        assert_eq!(report.total_violations, 0);
        assert_eq!(report.rows.len(), 2000);
    }

    #[test]
    fn linear_equality_is_pythagorean() {
        let worst = geom_linear_equality_check(50, 3).unwrap();
        assert!(worst <= 1e-8, "worst deviation {worst}");
    }

    #[test]
    fn minimax_zero_class_is_degenerate() {
        let dict = FiniteDictionary::new(vec![vec![0.0; 4]]).unwrap();
        let rec = minimax_lower_bound_check(&dict, 2, 1, None).unwrap();
        assert_eq!(rec.rad_full, 0.0);
        assert_eq!(rec.rad_sub, 0.0);
        assert_eq!(rec.lower_bound, 0.0);
        assert_eq!(rec.minimax_regret, 0.0);
        assert!(rec.holds);
    }

    #[test]
    fn minimax_rad_nonnegative_with_zero_member() {
        let mut rng = stream_rng(5, 0);
        let mut rows: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        rows.push(vec![0.0; 4]);
        let dict = FiniteDictionary::new(rows).unwrap();
        let rec = minimax_lower_bound_check(&dict, 2, 1, None).unwrap();
        assert!(rec.rad_full >= 0.0);
        assert!(rec.rad_sub >= 0.0);
    }

    #[test]
    fn minimax_holds_on_small_instances() {
        let cfg = MinimaxConfig {
            instances: 3,
            ..MinimaxConfig::default()
        };
        for rec in experiment_minimax(&cfg).unwrap() {
            assert!(rec.holds, "{rec:?}");
        }
    }

    #[test]
    fn minimax_grid_responses_only_weaken_the_estimator() {
        let mut rng = stream_rng(9, 0);
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let dict = FiniteDictionary::new(rows).unwrap();
        let exact = minimax_lower_bound_check(&dict, 2, 1, None).unwrap();
        let grid = minimax_lower_bound_check(&dict, 2, 1, Some(16)).unwrap();
        assert!(grid.minimax_regret >= exact.minimax_regret - 1e-12);
        assert!(grid.slack > 0.0);
        assert!(grid.holds);
    }

    #[test]
    fn singleton_dictionary_has_identically_zero_excess() {
        let cfg = AggregationRateConfig {
            num_members: 1,
            n_grid: vec![16, 32, 64, 128],
            trials_per_n: 20,
            ..AggregationRateConfig::default()
        };
        let report = experiment_finite_aggregation(&cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.mean_excess, 0.0);
            assert_eq!(row.q90_excess, 0.0);
        }
        assert!(report.fit_q90.is_none());
    }

    #[test]
    fn steep_entropy_regime_is_computed_not_asserted() {
        // Above exponent 2 the entropy integral diverges at zero; the bound is
        // still evaluated (with alpha > 0 picked by the minimizer) and decays,
        // but no slope window applies.
        let cfg = NonparametricRateConfig {
            entropy_exponent: 2.5,
            n_grid: vec![256, 512, 1024, 2048],
            gamma_grid_size: 120,
            ..NonparametricRateConfig::default()
        };
        let report = experiment_nonparametric_rate(&cfg).unwrap();
        for pair in report.rows.windows(2) {
            assert!(pair[1].total < pair[0].total);
        }
        for row in &report.rows {
            assert!(row.alpha > 0.0, "divergent regime needs alpha > 0");
        }
        let fit = report.fit.unwrap();
        assert!(fit.slope < 0.0);
    }

    #[test]
    fn noiseless_dominance_is_trivially_ordered() {
        // Noiseless well-specified linear: the least-squares fit recovers
        // beta* exactly, so the excess is ~0, while the offset supremum over
        // the shifted family is always >= 0 (zero noise kills the linear
        // term). The dominance table itself degenerates (every pooled value
        // is zero) and must report no violations.
        let scenario = LinearGaussianScenario::build(3, 0.0, 7).unwrap();
        let inst = scenario.generate(40, 1).unwrap();
        let fit = erm_linear(&inst.class, inst.sample.y()).unwrap();
        let excess = scenario.excess_loss(&fit.weights);
        assert!(excess.abs() < 1e-18);
        let xi = inst.sample.truth().unwrap().xi();
        let mut rng = stream_rng(3, 0);
        let eps: Vec<f64> = (0..40)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let sup = crate::offset::offset_sup_linear(
            &inst.class,
            &eps,
            0.5,
            crate::offset::Convention::TWO_EPS_NOISE,
            Some(xi),
        )
        .unwrap();
        assert!(sup.value >= 0.0);
        assert!(excess / 4.0 <= sup.value + 1e-18);

        let cfg = DominanceConfig {
            trials: 50,
            isometry_trials: 20,
            n: 30,
            num_members: 4,
            support_size: 16,
            noise: NoiseLaw::Gaussian { sigma: 0.0 },
            well_specified: true,
            ..DominanceConfig::default()
        };
        let report = experiment_dominance(&cfg).unwrap();
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn misordered_n_grid_is_rejected() {
        let cfg = ParametricRateConfig {
            n_grid: vec![256, 128, 512, 1024],
            ..ParametricRateConfig::default()
        };
        assert!(matches!(
            experiment_parametric_rate(&cfg),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn nonparametric_totals_decay() {
        let cfg = NonparametricRateConfig {
            n_grid: vec![128, 256, 512, 1024],
            gamma_grid_size: 120,
            ..NonparametricRateConfig::default()
        };
        let report = experiment_nonparametric_rate(&cfg).unwrap();
        for pair in report.rows.windows(2) {
            assert!(pair[1].total < pair[0].total);
        }
        assert!(report.fit.is_some());
    }

    #[test]
    fn excess_decomposition_finite_demo_holds_exactly() {
        let report = excess_decomposition_finite_demo(
            5,
            24,
            60,
            NoiseLaw::Gaussian { sigma: 0.4 },
            1.0 / 18.0,
            21,
        )
        .unwrap();
        assert!(report.holds_within_margin, "{report:?}");
    }

    #[test]
    fn dominance_report_schema_is_populated() {
        let cfg = DominanceConfig {
            trials: 60,
            isometry_trials: 40,
            n: 40,
            num_members: 4,
            support_size: 16,
            ..DominanceConfig::default()
        };
        let report = experiment_dominance(&cfg).unwrap();
        assert!(!report.rows.is_empty());
        assert!(report.a_moment >= 1.0); // E h^4 >= (E h^2)^2
        assert!(report.b_moment > 0.0);
        assert!(report.u_threshold > 0.0);
        assert!((0.0..=1.0).contains(&report.delta_hat));
    }
}
