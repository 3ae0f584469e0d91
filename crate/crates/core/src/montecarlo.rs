//! Replication harness for coupling-epoch statistics and empirical TV curves.
//!
//! Replication `i` always draws from stream `i` of a purpose-specific key, and
//! results are gathered in replication order, so every output is a pure
//! function of the config regardless of the number of workers.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{exp_constant_for, poly_constant_for, tv_bound_curve, BoundReport};
use crate::coupling::{build_coupling, coupling_epoch, evaluate_state, simulate_backward_path, Horizon};
use crate::decomposition::{decompose, Decomposition, DecompositionSummary};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::regenerative::{tv_transfer_check, BuiltinKernel, TransferReport};
use crate::sampling::UniformStream;
use crate::stats::{self, ks_one_sample, ks_two_sample};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_REPLICATIONS: usize = 1000;
pub const TV_BATCHES: usize = 10;

pub(crate) const PURPOSE_COUPLING: u64 = 1;
pub(crate) const PURPOSE_BACKWARD: u64 = 2;
pub(crate) const PURPOSE_KERNEL: u64 = 3;
pub(crate) const PURPOSE_REFERENCE: u64 = 4;
pub(crate) const PURPOSE_FIDELITY: u64 = 5;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_bins() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpBoundRequest {
    pub gamma: f64,
    /// Upper end of the search interval for the admissible rate.
    pub rate_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub spec: DistributionSpec,
    #[serde(default)]
    pub initial_r: f64,
    pub replications: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default)]
    pub poly_orders: Vec<f64>,
    #[serde(default)]
    pub exp_bound: Option<ExpBoundRequest>,
    #[serde(default)]
    pub kernel: Option<BuiltinKernel>,
    /// Also test the coupled marginals on `t_grid`.
    #[serde(default)]
    pub check_marginals: bool,
}

impl ExperimentConfig {
    pub fn new(spec: DistributionSpec, replications: usize, seed: u64, t_grid: Vec<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            spec,
            initial_r: 0.0,
            replications,
            seed,
            t_grid,
            histogram_bins: default_bins(),
            poly_orders: Vec::new(),
            exp_bound: None,
            kernel: None,
            check_marginals: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        self.spec.validate()?;
        if self.replications < MIN_REPLICATIONS {
            return bad(format!("replications must be at least {MIN_REPLICATIONS}, got {}", self.replications));
        }
        if self.histogram_bins < 10 {
            return bad(format!("histogram_bins must be at least 10, got {}", self.histogram_bins));
        }
        if !(self.initial_r.is_finite() && self.initial_r >= 0.0) {
            return bad(format!("initial_r must be finite and >= 0, got {}", self.initial_r));
        }
        if self.t_grid.is_empty() {
            return bad("t_grid must not be empty".into());
        }
        if self.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("t_grid entries must be finite and >= 0".into());
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("t_grid must be strictly increasing".into());
        }
        if !self.poly_orders.is_empty() && self.t_grid[0] <= 0.0 {
            return bad("polynomial bounds need every t in t_grid to be > 0".into());
        }
        if let Some(k) = self.poly_orders.iter().find(|k| !(k.is_finite() && **k >= 1.0)) {
            return bad(format!("poly_orders entries must be >= 1, got {k}"));
        }
        if let Some(e) = &self.exp_bound {
            if !(e.gamma > 0.0 && e.gamma.is_finite() && e.rate_cap > 0.0 && e.rate_cap.is_finite()) {
                return bad("exp_bound gamma and rate_cap must be positive and finite".into());
            }
        }
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }
}

/// Fixed-size worker pool; the worker count never affects results.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = workers {
            if n == 0 {
                return Err(Error::InvalidConfig("worker count must be positive".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `work(i)` for every replication index and returns results in index order.
    pub fn map<T, F>(&self, replications: usize, work: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        self.pool.install(|| (0..replications as u64).into_par_iter().map(&work).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub replications: usize,
}

impl Estimate {
    fn from_values(values: &[f64]) -> Self {
        let (mean, se) = stats::mean_and_se(values);
        Self { mean, se, replications: values.len() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderedEstimate {
    pub order: f64,
    #[serde(flatten)]
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub replications: usize,
    pub tau: Estimate,
    pub tau_moments: Vec<OrderedEstimate>,
    pub tau_exp_moment: Option<OrderedEstimate>,
    /// `nu_histogram[n - 1]` counts replications with epoch index `n`.
    pub nu_histogram: Vec<u64>,
    pub nu_mean: f64,
    /// Empirical `P(tau > t)` on the grid.
    pub p_tau_gt_t: Vec<f64>,
}

pub fn estimate_epoch_stats(config: &ExperimentConfig, decomp: &Decomposition, runner: &Runner) -> Result<EpochStats> {
    config.validate()?;
    let r = config.initial_r;
    let rows = runner.map(config.replications, |i| {
        let mut stream = UniformStream::for_purpose(config.seed, PURPOSE_COUPLING, i);
        let trace = build_coupling(decomp, r, &mut stream, Horizon::Epoch)?;
        coupling_epoch(&trace)
    })?;
    let taus: Vec<f64> = rows.iter().map(|&(tau, _)| tau).collect();
    let m = taus.len() as f64;

    let tau_moments = config
        .poly_orders
        .iter()
        .map(|&k| {
            let v: Vec<f64> = taus.iter().map(|t| t.powf(k)).collect();
            OrderedEstimate { order: k, estimate: Estimate::from_values(&v) }
        })
        .collect();
    let tau_exp_moment = config.exp_bound.map(|e| {
        let v: Vec<f64> = taus.iter().map(|t| (e.gamma * t).exp()).collect();
        OrderedEstimate { order: e.gamma, estimate: Estimate::from_values(&v) }
    });
    let max_nu = rows.iter().map(|&(_, nu)| nu).max().unwrap_or(1);
    let mut nu_histogram = vec![0u64; max_nu];
    for &(_, nu) in &rows {
        nu_histogram[nu - 1] += 1;
    }
    let nu_mean = rows.iter().map(|&(_, nu)| nu as f64).sum::<f64>() / m;
    let p_tau_gt_t = config.t_grid.iter().map(|&t| taus.iter().filter(|&&x| x > t).count() as f64 / m).collect();
    Ok(EpochStats {
        replications: rows.len(),
        tau: Estimate::from_values(&taus),
        tau_moments,
        tau_exp_moment,
        nu_histogram,
        nu_mean,
        p_tau_gt_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvPoint {
    pub t: f64,
    pub tv_est: f64,
    /// Batch standard error.
    pub tv_se: f64,
    /// Noise allowance `3 sqrt(B / M)`.
    pub allowance: f64,
    pub replications: usize,
}

/// Interior edges `F~^-1(j / B)`, `j = 1..B-1`.
pub fn equilibrium_edges(decomp: &Decomposition, bins: usize) -> Vec<f64> {
    (1..bins)
        .map(|j| decomp.source().equilibrium_quantile_with_mean(decomp.mean(), j as f64 / bins as f64))
        .collect()
}

/// TV of samples against reference cell probabilities, with a batch standard error.
pub(crate) fn tv_with_se(samples: &[f64], edges: &[f64], reference: &[f64]) -> (f64, f64) {
    let tv = stats::l1_distance(&stats::histogram(samples, edges), reference);
    let size = samples.len() / TV_BATCHES;
    let batches: Vec<f64> = (0..TV_BATCHES)
        .map(|b| stats::l1_distance(&stats::histogram(&samples[b * size..(b + 1) * size], edges), reference))
        .collect();
    (tv, stats::batch_se(&batches))
}

/// Ages `N_t` of independent renewal paths, indexed `[t][replication]`.
pub(crate) fn backward_samples(config: &ExperimentConfig, runner: &Runner) -> Result<Vec<Vec<f64>>> {
    let paths = runner.map(config.replications, |i| {
        let mut stream = UniformStream::for_purpose(config.seed, PURPOSE_BACKWARD, i);
        simulate_backward_path(&config.spec, config.initial_r, &config.t_grid, &mut stream)
    })?;
    Ok(transpose(&paths, config.t_grid.len()))
}

pub(crate) fn transpose(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width).map(|j| rows.iter().map(|row| row[j]).collect()).collect()
}

pub fn estimate_tv_curve(config: &ExperimentConfig, decomp: &Decomposition, runner: &Runner) -> Result<Vec<TvPoint>> {
    config.validate()?;
    let samples = backward_samples(config, runner)?;
    Ok(tv_curve_from_samples(config, decomp, &samples))
}

pub(crate) fn tv_curve_from_samples(config: &ExperimentConfig, decomp: &Decomposition, samples: &[Vec<f64>]) -> Vec<TvPoint> {
    let bins = config.histogram_bins;
    let edges = equilibrium_edges(decomp, bins);
    let reference = vec![1.0 / bins as f64; bins];
    config
        .t_grid
        .iter()
        .zip(samples)
        .map(|(&t, xs)| {
            let (tv_est, tv_se) = tv_with_se(xs, &edges, &reference);
            TvPoint { t, tv_est, tv_se, allowance: stats::tv_allowance(bins, xs.len()), replications: xs.len() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityPoint {
    pub t: f64,
    /// Two-sample KS of coupled `Z_t` against independent `N_t`.
    pub z_p_value: f64,
    /// One-sample KS of `Z~_t` against `F~`.
    pub z_tilde_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub replications: usize,
    pub points: Vec<FidelityPoint>,
    pub epochs_finite: usize,
    /// Replications where some grid time after the epoch had `Z_t != Z~_t`.
    pub post_epoch_mismatches: usize,
}

/// Marginal and identity checks of the coupled pair on `t_grid`.
pub fn coupling_fidelity(config: &ExperimentConfig, decomp: &Decomposition, runner: &Runner) -> Result<FidelityReport> {
    config.validate()?;
    let t_max = *config.t_grid.last().expect("validated nonempty");
    let rows = runner.map(config.replications, |i| {
        let mut stream = UniformStream::for_purpose(config.seed, PURPOSE_FIDELITY, i);
        let trace = build_coupling(decomp, config.initial_r, &mut stream, Horizon::EpochAndTime { t: t_max })?;
        let epoch = coupling_epoch(&trace).ok().map(|(e, _)| e);
        let mut z = Vec::with_capacity(config.t_grid.len());
        let mut zt = Vec::with_capacity(config.t_grid.len());
        let mut mismatch = false;
        for &t in &config.t_grid {
            let (a, b) = evaluate_state(&trace, t)?;
            if epoch.is_some_and(|e| t >= e) && a != b {
                mismatch = true;
            }
            z.push(a);
            zt.push(b);
        }
        Ok((z, zt, epoch.is_some(), mismatch))
    })?;
    let width = config.t_grid.len();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
    let zt: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    let z = transpose(&z, width);
    let zt = transpose(&zt, width);
    let reference = backward_samples(config, runner)?;
    let spec = decomp.source();
    let points = (0..width)
        .map(|j| FidelityPoint {
            t: config.t_grid[j],
            z_p_value: ks_two_sample(&z[j], &reference[j]).p_value,
            z_tilde_p_value: ks_one_sample(&zt[j], |s| spec.equilibrium_cdf_with_mean(decomp.mean(), s)).p_value,
        })
        .collect();
    Ok(FidelityReport {
        replications: rows.len(),
        points,
        epochs_finite: rows.iter().filter(|r| r.2).count(),
        post_epoch_mismatches: rows.iter().filter(|r| r.3).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub report: BoundReport,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub decomposition: DecompositionSummary,
    pub epoch: EpochStats,
    pub tv_curve: Vec<TvPoint>,
    pub poly_bounds: Vec<BoundCurve>,
    pub exp_bound: Option<BoundCurve>,
    /// Admissible rate found below `rate_cap`.
    pub beta: Option<f64>,
    pub fidelity: Option<FidelityReport>,
    pub transfer: Option<TransferReport>,
    pub verdicts: Vec<Verdict>,
    pub all_passed: bool,
}

fn verdict(name: impl Into<String>, passed: bool, detail: String) -> Verdict {
    Verdict { name: name.into(), passed, detail }
}

/// Exponential bound at the requested rate, after checking it lies below the
/// admissible rate found under `rate_cap`.
pub fn exp_bound_for(decomp: &Decomposition, r: f64, request: ExpBoundRequest) -> Result<(f64, BoundReport)> {
    let beta = decomp.find_beta(request.rate_cap)?;
    if request.gamma >= beta {
        return Err(Error::InadmissibleRate { rate: request.gamma, eps_tilde: decomp.psi_exp_moment(request.gamma) });
    }
    Ok((beta, exp_constant_for(decomp, r, request.gamma)?))
}

pub fn run_experiment(config: &ExperimentConfig, runner: &Runner) -> Result<ExperimentResult> {
    config.validate()?;
    let decomp = decompose(&config.spec)?;
    let r = config.initial_r;

    let poly_reports =
        config.poly_orders.iter().map(|&k| poly_constant_for(&decomp, r, k)).collect::<Result<Vec<_>>>()?;
    let exp = config.exp_bound.map(|req| exp_bound_for(&decomp, r, req)).transpose()?;

    let epoch = estimate_epoch_stats(config, &decomp, runner)?;
    let tv_curve = estimate_tv_curve(config, &decomp, runner)?;

    let poly_bounds = poly_reports
        .iter()
        .map(|rep| Ok(BoundCurve { report: *rep, values: tv_bound_curve(rep, &config.t_grid)? }))
        .collect::<Result<Vec<_>>>()?;
    let exp_bound = exp
        .map(|(_, rep)| Ok::<_, Error>(BoundCurve { report: rep, values: tv_bound_curve(&rep, &config.t_grid)? }))
        .transpose()?;

    let mut verdicts = Vec::new();
    let spec = &config.spec;
    let mu0 = spec.residual_law(r)?.moment(1.0)?.value;
    let mu = spec.moment(1.0)?.value;
    let limit = mu0 + 2.0 * mu / decomp.kappa();
    verdicts.push(verdict(
        "expectation_bound",
        epoch.tau.mean <= limit + 3.0 * epoch.tau.se,
        format!("mean tau {:.6} (se {:.2e}) vs mu0 + 2 mu / kappa = {limit:.6}", epoch.tau.mean, epoch.tau.se),
    ));
    for (est, rep) in epoch.tau_moments.iter().zip(&poly_reports) {
        let e = est.estimate;
        verdicts.push(verdict(
            format!("moment_bound_k{}", est.order),
            e.mean <= rep.constant + 3.0 * e.se,
            format!("E tau^{} = {:.6} (se {:.2e}) vs constant {:.6}", est.order, e.mean, e.se, rep.constant),
        ));
    }
    if let (Some(est), Some((_, rep))) = (&epoch.tau_exp_moment, &exp) {
        let e = est.estimate;
        verdicts.push(verdict(
            "exp_moment_bound",
            e.mean <= rep.constant + 3.0 * e.se,
            format!("E exp({} tau) = {:.6} (se {:.2e}) vs constant {:.6}", est.order, e.mean, e.se, rep.constant),
        ));
    }
    for curve in &poly_bounds {
        let k = match curve.report.kind {
            crate::bounds::BoundKind::Polynomial { k, .. } => k,
            crate::bounds::BoundKind::Exponential { .. } => unreachable!("polynomial list"),
        };
        verdicts.push(curve_verdict(format!("tv_bound_poly_k{k}"), &tv_curve, &curve.values));
    }
    if let Some(curve) = &exp_bound {
        verdicts.push(curve_verdict("tv_bound_exp".into(), &tv_curve, &curve.values));
    }
    verdicts.push(coupling_inequality_verdict(&tv_curve, &epoch.p_tau_gt_t));

    let fidelity = if config.check_marginals { Some(coupling_fidelity(config, &decomp, runner)?) } else { None };
    if let Some(f) = &fidelity {
        verdicts.extend(fidelity_verdicts(f));
    }

    let transfer = match &config.kernel {
        Some(kernel) => {
            let bound = poly_bounds.last().map(|c| c.values.clone());
            Some(tv_transfer_check(&decomp, kernel, config, bound.as_deref(), runner)?)
        }
        None => None,
    };
    if let Some(t) = &transfer {
        verdicts.push(verdict(
            format!("transfer_{}", t.kernel.label()),
            t.passed,
            format!("bound ok: {}, data processing ok: {}", t.bound_ok, t.data_processing_ok),
        ));
    }

    let all_passed = verdicts.iter().all(|v| v.passed);
    Ok(ExperimentResult {
        config: config.clone(),
        decomposition: decomp.summary(),
        epoch,
        tv_curve,
        poly_bounds,
        beta: exp.map(|(b, _)| b),
        exp_bound,
        fidelity,
        transfer,
        verdicts,
        all_passed,
    })
}

fn curve_verdict(name: String, tv: &[TvPoint], bound: &[f64]) -> Verdict {
    let worst = tv
        .iter()
        .zip(bound)
        .map(|(p, b)| p.tv_est - (b + p.allowance))
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(name, worst <= 0.0, format!("max of tv - (bound + allowance) = {worst:.4e}"))
}

/// Combined allowance for `tv <= 2 P(tau > t)`: binning noise plus three
/// binomial standard errors of the doubled tail probability.
pub fn coupling_allowance(point: &TvPoint, p: f64) -> f64 {
    point.allowance + 6.0 * (p * (1.0 - p) / point.replications as f64).sqrt()
}

fn coupling_inequality_verdict(tv: &[TvPoint], p_tau: &[f64]) -> Verdict {
    let worst = tv
        .iter()
        .zip(p_tau)
        .map(|(pt, &p)| pt.tv_est - (2.0 * p + coupling_allowance(pt, p)))
        .fold(f64::NEG_INFINITY, f64::max);
    verdict("coupling_inequality", worst <= 0.0, format!("max of tv - (2 P(tau > t) + allowance) = {worst:.4e}"))
}

pub const FIDELITY_ALPHA: f64 = 0.01;

pub fn fidelity_verdicts(f: &FidelityReport) -> Vec<Verdict> {
    let z_min = f.points.iter().map(|p| p.z_p_value).fold(1.0, f64::min);
    let zt_min = f.points.iter().map(|p| p.z_tilde_p_value).fold(1.0, f64::min);
    vec![
        verdict("marginal_z", z_min > FIDELITY_ALPHA, format!("smallest KS p-value {z_min:.3e}")),
        verdict("marginal_z_tilde", zt_min > FIDELITY_ALPHA, format!("smallest KS p-value {zt_min:.3e}")),
        verdict(
            "epoch_finite",
            f.epochs_finite == f.replications,
            format!("{} of {} replications reached the epoch", f.epochs_finite, f.replications),
        ),
        verdict(
            "post_epoch_identity",
            f.post_epoch_mismatches == 0,
            format!("{} replications with a post-epoch mismatch", f.post_epoch_mismatches),
        ),
    ]
}

/// Writes `t,tv_est,tv_se,bound_poly_k,bound_exp,p_tau_gt_t`; `bound_poly_k`
/// holds the highest requested order, and absent bounds are left empty.
pub fn write_curve_csv<W: Write>(result: &ExperimentResult, mut out: W) -> Result<()> {
    writeln!(out, "t,tv_est,tv_se,bound_poly_k,bound_exp,p_tau_gt_t")?;
    let poly = result.poly_bounds.last();
    for (j, p) in result.tv_curve.iter().enumerate() {
        let cell = |c: Option<&BoundCurve>| c.map(|c| c.values[j].to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.t,
            p.tv_est,
            p.tv_se,
            cell(poly),
            cell(result.exp_bound.as_ref()),
            result.epoch.p_tau_gt_t[j]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(spec: DistributionSpec) -> ExperimentConfig {
        ExperimentConfig::new(spec, 2000, 42, vec![0.5, 1.0, 2.0])
    }

    #[test]
    fn config_validation() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let mut c = small_config(spec.clone());
        c.validate().unwrap();
        c.replications = 0;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = small_config(spec.clone());
        c.t_grid = vec![1.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = small_config(spec);
        c.histogram_bins = 5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"spec":{"family":"exponential","params":{"rate":1.0}},"replications":1000,"seed":1,"t_grid":[1.0]}"#,
        )
        .unwrap();
        assert_eq!(c.histogram_bins, 50);
        assert_eq!(c.schema_version, SCHEMA_VERSION);
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"spec":{"family":"exponential","params":{"rate":1.0}},"replications":1000,"seed":1,"t_grid":[1.0],"bogus":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn full_overlap_has_unit_epoch_index() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let d = decompose(&spec).unwrap();
        let runner = Runner::new(Some(2)).unwrap();
        let stats = estimate_epoch_stats(&small_config(spec), &d, &runner).unwrap();
        assert_eq!(stats.nu_histogram, vec![2000]);
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let spec = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let mut c = small_config(spec);
        c.poly_orders = vec![1.0];
        let a = run_experiment(&c, &Runner::new(Some(1)).unwrap()).unwrap();
        let b = run_experiment(&c, &Runner::new(Some(3)).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn tv_at_origin_is_maximal_for_a_point_mass() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let d = decompose(&spec).unwrap();
        let c = ExperimentConfig::new(spec, 2000, 3, vec![0.0]);
        let tv = estimate_tv_curve(&c, &d, &Runner::new(Some(2)).unwrap()).unwrap();
        assert!((tv[0].tv_est - 2.0 * (1.0 - 1.0 / 50.0)).abs() < 1e-12);
    }

    #[test]
    fn gamma_above_beta_is_rejected() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let mut c = small_config(spec);
        c.exp_bound = Some(ExpBoundRequest { gamma: 0.6, rate_cap: 0.5 });
        assert!(matches!(
            run_experiment(&c, &Runner::new(Some(1)).unwrap()),
            Err(Error::InadmissibleRate { .. })
        ));
    }
}
