//! Regenerative processes driven by the age of a renewal process.
//!
//! The state is `X_t = g(N_t, U)` for a cycle kernel `g` fed with the current
//! age and one fresh uniform. TV distances of `X_t` inherit the bounds of
//! `N_t`.

use serde::{Deserialize, Serialize};

use crate::coupling::simulate_backward;
use crate::decomposition::Decomposition;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::montecarlo::{
    backward_samples, equilibrium_edges, transpose, tv_curve_from_samples, tv_with_se, ExperimentConfig, Runner,
    PURPOSE_KERNEL, PURPOSE_REFERENCE,
};
use crate::sampling::{UniformSource, UniformStream};
use crate::stats;

pub const REFERENCE_SAMPLES: usize = 1_000_000;

/// Conditional law of the state given the age, as a sampler.
pub trait CycleKernel {
    fn sample(&self, age: f64, u: f64) -> f64;
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinKernel {
    Identity,
    /// `exp(-rate * a)`
    NegExp {
        #[serde(default = "one")]
        rate: f64,
    },
    Constant { value: f64 },
    /// `a + width * U`
    UniformNoise {
        #[serde(default = "one")]
        width: f64,
    },
}

impl BuiltinKernel {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::NegExp { .. } => "neg_exp",
            Self::Constant { .. } => "constant",
            Self::UniformNoise { .. } => "uniform_noise",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Identity => true,
            Self::NegExp { rate } => rate.is_finite() && rate > 0.0,
            Self::Constant { value } => value.is_finite(),
            Self::UniformNoise { width } => width.is_finite() && width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid kernel parameters: {self:?}")))
        }
    }
}

impl CycleKernel for BuiltinKernel {
    fn sample(&self, age: f64, u: f64) -> f64 {
        match *self {
            Self::Identity => age,
            Self::NegExp { rate } => (-rate * age).exp(),
            Self::Constant { value } => value,
            Self::UniformNoise { width } => age + width * u,
        }
    }
}

/// One draw of `X_t` started from age `r`.
pub fn simulate_regenerative<K: CycleKernel, S: UniformSource>(
    spec: &DistributionSpec,
    kernel: &K,
    r: f64,
    t: f64,
    stream: &mut S,
) -> Result<f64> {
    let age = simulate_backward(spec, r, t, stream)?;
    Ok(kernel.sample(age, stream.next_uniform()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferPoint {
    pub t: f64,
    pub tv_x: f64,
    pub tv_x_se: f64,
    pub tv_n: f64,
    /// Noise allowance for `tv_x`, including the reference sample when simulated.
    pub allowance: f64,
    pub allowance_n: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub kernel: BuiltinKernel,
    /// 0 when the stationary cell probabilities are exact.
    pub reference_samples: usize,
    pub points: Vec<TransferPoint>,
    pub bound_ok: bool,
    pub data_processing_ok: bool,
    pub passed: bool,
}

/// Cell edges and stationary cell probabilities for `X`.
fn stationary_reference(decomp: &Decomposition, kernel: &BuiltinKernel, bins: usize, seed: u64) -> (Vec<f64>, Vec<f64>, usize) {
    let uniform = vec![1.0 / bins as f64; bins];
    match *kernel {
        BuiltinKernel::Identity => (equilibrium_edges(decomp, bins), uniform, 0),
        BuiltinKernel::NegExp { rate } => {
            let mut edges: Vec<f64> = equilibrium_edges(decomp, bins).iter().map(|a| (-rate * a).exp()).collect();
            edges.reverse();
            (edges, uniform, 0)
        }
        _ => {
            let spec = decomp.source();
            let mut stream = UniformStream::for_purpose(seed, PURPOSE_REFERENCE, 0);
            let mut xs: Vec<f64> = (0..REFERENCE_SAMPLES)
                .map(|_| {
                    let age = spec.equilibrium_quantile_with_mean(decomp.mean(), stream.next_uniform());
                    kernel.sample(age, stream.next_uniform())
                })
                .collect();
            let probs_input = xs.clone();
            xs.sort_by(f64::total_cmp);
            let edges: Vec<f64> = (1..bins).map(|j| xs[j * REFERENCE_SAMPLES / bins]).collect();
            let probs = stats::histogram(&probs_input, &edges);
            (edges, probs, REFERENCE_SAMPLES)
        }
    }
}

/// Estimates the TV of `X_t` from its stationary law on `config.t_grid` and
/// checks it against `bound` and against the TV of the driving ages.
pub fn tv_transfer_check(
    decomp: &Decomposition,
    kernel: &BuiltinKernel,
    config: &ExperimentConfig,
    bound: Option<&[f64]>,
    runner: &Runner,
) -> Result<TransferReport> {
    config.validate()?;
    kernel.validate()?;
    let bins = config.histogram_bins;
    let ages = backward_samples(config, runner)?;
    let tv_n = tv_curve_from_samples(config, decomp, &ages);

    let width = config.t_grid.len();
    let uniforms = runner.map(config.replications, |i| {
        let mut stream = UniformStream::for_purpose(config.seed, PURPOSE_KERNEL, i);
        Ok((0..width).map(|_| stream.next_uniform()).collect::<Vec<f64>>())
    })?;
    let uniforms = transpose(&uniforms, width);
    let (edges, reference, reference_samples) = stationary_reference(decomp, kernel, bins, config.seed);

    let mut points = Vec::with_capacity(width);
    for j in 0..width {
        let xs: Vec<f64> = ages[j].iter().zip(&uniforms[j]).map(|(&a, &u)| kernel.sample(a, u)).collect();
        let (tv_x, tv_x_se) = tv_with_se(&xs, &edges, &reference);
        let mut allowance = stats::tv_allowance(bins, xs.len());
        if reference_samples > 0 {
            allowance += stats::tv_allowance(bins, reference_samples);
        }
        points.push(TransferPoint {
            t: config.t_grid[j],
            tv_x,
            tv_x_se,
            tv_n: tv_n[j].tv_est,
            allowance,
            allowance_n: tv_n[j].allowance,
            bound: bound.map(|b| b[j]),
        });
    }
    let bound_ok = points.iter().all(|p| p.bound.is_none_or(|b| p.tv_x <= b + p.allowance));
    let data_processing_ok = points.iter().all(|p| p.tv_x <= p.tv_n + p.allowance + p.allowance_n);
    Ok(TransferReport {
        kernel: *kernel,
        reference_samples,
        points,
        bound_ok,
        data_processing_ok,
        passed: bound_ok && data_processing_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::sampling::ReplaySource;

    #[test]
    fn kernel_examples() {
        let spec = DistributionSpec::exponential(1.0).unwrap();
        let id = simulate_regenerative(&spec, &BuiltinKernel::Identity, 0.3, 0.0, &mut ReplaySource::new(vec![0.5, 0.1]));
        assert_eq!(id.unwrap(), 0.3);
        let g = BuiltinKernel::NegExp { rate: 1.0 };
        assert_eq!(g.sample(2.0, 0.9), (-2.0f64).exp());
        assert_eq!(BuiltinKernel::Constant { value: 4.0 }.sample(1.0, 0.2), 4.0);
        assert_eq!(BuiltinKernel::UniformNoise { width: 1.0 }.sample(1.0, 0.25), 1.25);
    }

    #[test]
    fn kernel_json() {
        let k: BuiltinKernel = serde_json::from_str(r#"{"name":"neg_exp"}"#).unwrap();
        assert_eq!(k, BuiltinKernel::NegExp { rate: 1.0 });
        let k: BuiltinKernel = serde_json::from_str(r#"{"name":"constant","value":2.0}"#).unwrap();
        assert_eq!(k, BuiltinKernel::Constant { value: 2.0 });
        assert!(serde_json::from_str::<BuiltinKernel>(r#"{"name":"bogus"}"#).is_err());
    }

    #[test]
    fn identity_report_matches_backward_curve() {
        let spec = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let d = decompose(&spec).unwrap();
        let c = ExperimentConfig::new(spec, 2000, 9, vec![0.5, 2.0]);
        let runner = Runner::new(Some(2)).unwrap();
        let report = tv_transfer_check(&d, &BuiltinKernel::Identity, &c, None, &runner).unwrap();
        let tv = crate::montecarlo::estimate_tv_curve(&c, &d, &runner).unwrap();
        for (p, q) in report.points.iter().zip(&tv) {
            assert_eq!(p.tv_x, q.tv_est);
            assert_eq!(p.tv_x_se, q.tv_se);
        }
        assert_eq!(report.reference_samples, 0);
    }
}
