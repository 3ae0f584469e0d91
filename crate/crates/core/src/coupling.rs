//! Stationary coupling of a backward renewal process `Z` (started from age `r`)
//! with a stationary version `Z~`.
//!
//! Events are processed in time order. A renewal of `Z~` strictly before the
//! next renewal of `Z` only advances `Z~`. A renewal of `Z` draws a joint pair
//! `(Xi, Xi~)`: `Z` continues with period `Xi`, while `Z~` is restarted with
//! pending renewal `Xi~` ahead and a fresh age drawn from `F_{Xi~}`. Once the
//! pair comes from the common part, both processes renew together at the end
//! of that period and share every later period.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::sampling::{age_given_residual, sample_lifetime, sample_stationary_pair, sample_xi_pair, UniformSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum EventKind {
    /// Both processes renew together.
    CommonRenewal,
    /// `Z~` renews before the next renewal of `Z`.
    StationaryRenewal,
    /// `Z` renews and `Z~` is restarted.
    NonstationaryRenewal { coincident: bool },
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::CommonRenewal => "common",
            Self::StationaryRenewal => "stationary",
            Self::NonstationaryRenewal { coincident: false } => "nonstationary",
            Self::NonstationaryRenewal { coincident: true } => "nonstationary_coincident",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingEvent {
    pub time: f64,
    pub kind: EventKind,
    /// States right after the event.
    pub z: f64,
    pub z_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stop", rename_all = "snake_case")]
pub enum Horizon {
    /// Stop at the coupling epoch.
    Epoch,
    /// Process every event up to `t`.
    Time { t: f64 },
    /// Run until both the epoch and `t` are reached.
    EpochAndTime { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Anchor {
    time: f64,
    age: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTrace {
    pub initial_r: f64,
    pub initial_age_tilde: f64,
    pub events: Vec<CouplingEvent>,
    /// Realized renewal times of `Z`.
    pub theta: Vec<f64>,
    /// Realized renewal times of `Z~`.
    pub theta_tilde: Vec<f64>,
    /// `periods[0]` is the residual first period, then the drawn periods of `Z`.
    pub periods: Vec<f64>,
    pub epoch: Option<f64>,
    pub epoch_index: Option<usize>,
    /// The trace determines both states on `[0, horizon]`.
    pub horizon: f64,
    anchors_tilde: Vec<Anchor>,
}

/// Builds one realization of the coupled pair.
pub fn build_coupling<S: UniformSource>(
    decomp: &Decomposition,
    r: f64,
    stream: &mut S,
    horizon: Horizon,
) -> Result<CouplingTrace> {
    let spec = decomp.source();
    let theta0 = spec.residual_quantile(r, stream.next_uniform())?;
    let (age0, residual0) = sample_stationary_pair(decomp, stream)?;

    let mut trace = CouplingTrace {
        initial_r: r,
        initial_age_tilde: age0,
        events: Vec::new(),
        theta: Vec::new(),
        theta_tilde: Vec::new(),
        periods: vec![theta0],
        epoch: None,
        epoch_index: None,
        horizon: 0.0,
        anchors_tilde: vec![Anchor { time: 0.0, age: age0 }],
    };

    let mut next_z = theta0;
    let mut next_tilde = residual0;
    let mut last_z: Option<f64> = None;
    loop {
        let t = if trace.epoch.is_some() { next_z } else { next_z.min(next_tilde) };
        let stop = match horizon {
            Horizon::Epoch => false,
            Horizon::Time { t: end } => t > end,
            Horizon::EpochAndTime { t: end } => trace.epoch.is_some_and(|e| t > end.max(e)),
        };
        if stop {
            break;
        }

        if let Some(epoch) = trace.epoch {
            // shared periods after the epoch
            trace.theta.push(t);
            trace.theta_tilde.push(t);
            trace.anchors_tilde.push(Anchor { time: t, age: 0.0 });
            trace.events.push(CouplingEvent { time: t, kind: EventKind::CommonRenewal, z: 0.0, z_tilde: 0.0 });
            last_z = Some(t);
            if matches!(horizon, Horizon::Epoch) && t == epoch {
                trace.horizon = epoch;
                return Ok(trace);
            }
            let period = sample_lifetime(spec, stream);
            trace.periods.push(period);
            next_z = t + period;
            continue;
        }

        if next_tilde < next_z {
            let period = sample_lifetime(spec, stream);
            trace.theta_tilde.push(t);
            trace.anchors_tilde.push(Anchor { time: t, age: 0.0 });
            let z = last_z.map_or(r + t, |l| t - l);
            trace.events.push(CouplingEvent { time: t, kind: EventKind::StationaryRenewal, z, z_tilde: 0.0 });
            next_tilde = t + period;
        } else {
            let (u, u1, u2, u3) =
                (stream.next_uniform(), stream.next_uniform(), stream.next_uniform(), stream.next_uniform());
            let pair = sample_xi_pair(decomp, u, u1, u2);
            let restart_age = age_given_residual(spec, pair.xi_tilde, u3)?;
            trace.theta.push(t);
            trace.periods.push(pair.xi);
            trace.anchors_tilde.push(Anchor { time: t, age: restart_age });
            trace.events.push(CouplingEvent {
                time: t,
                kind: EventKind::NonstationaryRenewal { coincident: pair.coincident },
                z: 0.0,
                z_tilde: restart_age,
            });
            last_z = Some(t);
            next_z = t + pair.xi;
            next_tilde = t + pair.xi_tilde;
            if pair.coincident {
                trace.epoch = Some(next_z);
                trace.epoch_index = Some(trace.theta.len());
            }
        }
    }
    trace.horizon = match horizon {
        Horizon::Epoch => unreachable!("epoch horizon returns from the loop"),
        Horizon::Time { t } => t,
        Horizon::EpochAndTime { t } => t.max(trace.epoch.unwrap_or(t)),
    };
    Ok(trace)
}

/// `(epoch, index)` with `epoch == theta[index]`.
pub fn coupling_epoch(trace: &CouplingTrace) -> Result<(f64, usize)> {
    match (trace.epoch, trace.epoch_index) {
        (Some(epoch), Some(index)) if epoch <= trace.horizon => Ok((epoch, index)),
        _ => Err(Error::NoEpoch),
    }
}

/// `(Z_t, Z~_t)` for `0 <= t <= horizon`.
pub fn evaluate_state(trace: &CouplingTrace, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if t > trace.horizon {
        return Err(Error::BeyondHorizon { t, horizon: trace.horizon });
    }
    let i = trace.theta.partition_point(|&x| x <= t);
    let z = if i == 0 { trace.initial_r + t } else { t - trace.theta[i - 1] };
    let j = trace.anchors_tilde.partition_point(|a| a.time <= t);
    let anchor = trace.anchors_tilde[j - 1];
    Ok((z, anchor.age + (t - anchor.time)))
}

/// Writes one CSV row per event: `time,kind,z,z_tilde`.
pub fn write_trace_csv<W: Write>(trace: &CouplingTrace, mut out: W) -> Result<()> {
    writeln!(out, "time,kind,z,z_tilde")?;
    for e in &trace.events {
        writeln!(out, "{},{},{},{}", e.time, e.kind.label(), e.z, e.z_tilde)?;
    }
    Ok(())
}

/// One draw of the age `N_t` of an uncoupled renewal process started at age `r`.
pub fn simulate_backward<S: UniformSource>(spec: &DistributionSpec, r: f64, t: f64, stream: &mut S) -> Result<f64> {
    Ok(simulate_backward_path(spec, r, &[t], stream)?[0])
}

/// Ages of one renewal path at every time of a nondecreasing grid.
pub fn simulate_backward_path<S: UniformSource>(
    spec: &DistributionSpec,
    r: f64,
    times: &[f64],
    stream: &mut S,
) -> Result<Vec<f64>> {
    let first = spec.residual_quantile(r, stream.next_uniform())?;
    let mut out = Vec::with_capacity(times.len());
    let mut last: Option<f64> = None;
    let mut next = first;
    for &t in times {
        while next <= t {
            last = Some(next);
            next += sample_lifetime(spec, stream);
        }
        out.push(last.map_or(r + t, |l| t - l));
    }
    Ok(out)
}
