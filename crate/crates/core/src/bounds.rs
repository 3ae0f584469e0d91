//! Convergence-rate constants and total-variation bound curves.
//!
//! Polynomial rate `k`:
//!
//! ```text
//! C(k) = mu0k * kappa * sum_{n>=1} (n+1)^{k-1} kbar^{n-1}
//!      + muk * sum_{n>=1} (kappa n (n+2)^{k-1} + kbar (n+1)^{k-1}) kbar^{n-1}
//! ```
//!
//! with `kbar = 1 - kappa`, and exponential rate `gamma`:
//! `C = eps0 * eps / (1 - eps_tilde)`. TV curves are `2 C t^-k` and
//! `2 C e^{-gamma t}`, clamped to `[0, 2]`.

use serde::Serialize;

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};

/// Summation stops once the certified tail is below this fraction of the sum.
const TAIL_FRACTION: f64 = 1e-13;
const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundKind {
    Polynomial { k: f64, kappa: f64, mu0k: f64, muk: f64 },
    Exponential { gamma: f64, eps0: f64, eps: f64, eps_tilde: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub constant: f64,
    /// Upper bound on the discarded tail of the series.
    pub truncation_error: f64,
    pub terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub t: f64,
    pub bound_k: f64,
    pub bound_k_minus_1: f64,
    /// Unclamped `bound_k / bound_k_minus_1`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalComparison {
    pub k: f64,
    /// Beyond this time the order-`k` curve lies below the order-`k-1` curve.
    pub crossover: f64,
    pub rows: Vec<ComparisonRow>,
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn poly_constant(k: f64, mu0k: f64, muk: f64, kappa: f64) -> Result<BoundReport> {
    if !(k.is_finite() && k >= 1.0) {
        return Err(Error::Domain(format!("polynomial order must be >= 1, got {k}")));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Divergent(format!("overlap mass {kappa} outside (0, 1]")));
    }
    if !(mu0k.is_finite() && muk.is_finite()) {
        return Err(Error::Divergent(format!("moments of order {k} are not finite ({mu0k}, {muk})")));
    }
    if mu0k < 0.0 || muk < 0.0 {
        return Err(Error::Domain("moments must be nonnegative".into()));
    }
    let kbar = 1.0 - kappa;
    let term = |n: f64, geometric: f64| {
        let a = (n + 1.0).powf(k - 1.0);
        let b = n * (n + 2.0).powf(k - 1.0);
        geometric * (mu0k * kappa * a + muk * (kappa * b + kbar * a))
    };
    let mut sum = CompensatedSum::default();
    let mut geometric = 1.0;
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let t = term(nf, geometric);
        sum.add(t);
        if kbar == 0.0 {
            return Ok(polynomial_report(k, kappa, mu0k, muk, sum.value(), 0.0, n));
        }
        let rho = kbar * ((nf + 1.0) / nf).powf(k);
        if rho < 1.0 {
            let tail = t * rho / (1.0 - rho);
            let total = sum.value();
            if tail <= TAIL_FRACTION * total {
                return Ok(polynomial_report(k, kappa, mu0k, muk, total, tail, n));
            }
        }
        geometric *= kbar;
        if geometric == 0.0 {
            return Ok(polynomial_report(k, kappa, mu0k, muk, sum.value(), 0.0, n));
        }
    }
    Err(Error::Divergent(format!("series did not settle within {MAX_TERMS} terms")))
}

fn polynomial_report(k: f64, kappa: f64, mu0k: f64, muk: f64, constant: f64, tail: f64, terms: usize) -> BoundReport {
    BoundReport { kind: BoundKind::Polynomial { k, kappa, mu0k, muk }, constant, truncation_error: tail, terms }
}

pub fn exp_constant(gamma: f64, eps0: f64, eps: f64, eps_tilde: f64) -> Result<BoundReport> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!("exponential rate must be positive, got {gamma}")));
    }
    if !(eps_tilde < 1.0) {
        return Err(Error::InadmissibleRate { rate: gamma, eps_tilde });
    }
    if !(eps0.is_finite() && eps.is_finite()) {
        return Err(Error::Divergent(format!("exponential moments at rate {gamma} are not finite")));
    }
    Ok(BoundReport {
        kind: BoundKind::Exponential { gamma, eps0, eps, eps_tilde },
        constant: eps0 * eps / (1.0 - eps_tilde),
        truncation_error: 0.0,
        terms: 0,
    })
}

/// Polynomial constant with `mu0k` from the residual law `F_r` and `muk` from `F`.
pub fn poly_constant_for(decomp: &Decomposition, r: f64, k: f64) -> Result<BoundReport> {
    let spec = decomp.source();
    let mu0k = spec.residual_law(r)?.moment(k)?.value;
    let muk = spec.moment(k)?.value;
    poly_constant(k, mu0k, muk, decomp.kappa())
}

/// Exponential constant at rate `gamma` for the start age `r`.
pub fn exp_constant_for(decomp: &Decomposition, r: f64, gamma: f64) -> Result<BoundReport> {
    let spec = decomp.source();
    let eps0 = spec.residual_law(r)?.exp_moment(gamma)?.value;
    let eps = spec.exp_moment(gamma)?.value;
    exp_constant(gamma, eps0, eps, decomp.psi_exp_moment(gamma))
}

fn raw_bound(report: &BoundReport, t: f64) -> Result<f64> {
    match report.kind {
        BoundKind::Polynomial { k, .. } => {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("polynomial bound needs t > 0, got {t}")));
            }
            Ok(2.0 * report.constant * t.powf(-k))
        }
        BoundKind::Exponential { gamma, .. } => Ok(2.0 * report.constant * (-gamma * t).exp()),
    }
}

pub fn tv_bound_curve(report: &BoundReport, t_grid: &[f64]) -> Result<Vec<f64>> {
    t_grid.iter().map(|&t| raw_bound(report, t).map(|v| v.clamp(0.0, 2.0))).collect()
}

pub fn classical_comparison(
    poly_k: &BoundReport,
    poly_k_minus_1: &BoundReport,
    t_grid: &[f64],
) -> Result<ClassicalComparison> {
    let (BoundKind::Polynomial { k, .. }, BoundKind::Polynomial { k: k_prev, .. }) = (poly_k.kind, poly_k_minus_1.kind)
    else {
        return Err(Error::Domain("classical comparison needs two polynomial reports".into()));
    };
    if (k - k_prev - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("orders {k} and {k_prev} do not differ by one")));
    }
    let rows = t_grid
        .iter()
        .map(|&t| {
            let a = raw_bound(poly_k, t)?;
            let b = raw_bound(poly_k_minus_1, t)?;
            Ok(ComparisonRow { t, bound_k: a.clamp(0.0, 2.0), bound_k_minus_1: b.clamp(0.0, 2.0), ratio: a / b })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassicalComparison { k, crossover: poly_k.constant / poly_k_minus_1.constant, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::distributions::DistributionSpec;

    #[test]
    fn order_one_matches_closed_form() {
        for &(kappa, mu0, mu) in &[(0.75, 0.5, 0.5), (0.1, 2.0, 3.0), (0.999, 1.0, 0.1), (0.01, 1.0, 1.0)] {
            let r = poly_constant(1.0, mu0, mu, kappa).unwrap();
            let exact = mu0 + mu * (2.0 - kappa) / kappa;
            assert!((r.constant - exact).abs() <= 1e-12 * exact, "{kappa}: {} vs {exact}", r.constant);
            assert!(r.truncation_error <= 1e-9 * r.constant);
        }
    }

    #[test]
    fn full_overlap_keeps_only_first_term() {
        let r = poly_constant(1.0, 0.7, 0.4, 1.0).unwrap();
        assert!((r.constant - 1.1).abs() < 1e-15);
        assert_eq!(r.terms, 1);
        let r = poly_constant(3.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(r.constant, 4.0 + 9.0);
    }

    #[test]
    fn uniform_order_one() {
        let d = decompose(&DistributionSpec::uniform(0.0, 1.0).unwrap()).unwrap();
        let r = poly_constant_for(&d, 0.0, 1.0).unwrap();
        assert!((r.constant - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn order_two_against_direct_sum() {
        let (kappa, mu0, mu): (f64, f64, f64) = (0.3, 1.5, 0.8);
        let kbar = 1.0 - kappa;
        let direct: f64 = (1..5000)
            .map(|n| {
                let n = n as f64;
                kbar.powf(n - 1.0) * (mu0 * kappa * (n + 1.0) + mu * (kappa * n * (n + 2.0) + kbar * (n + 1.0)))
            })
            .sum();
        let r = poly_constant(2.0, mu0, mu, kappa).unwrap();
        assert!((r.constant - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn poly_constant_errors() {
        assert!(matches!(poly_constant(1.0, 1.0, 1.0, 0.0), Err(Error::Divergent(_))));
        assert!(matches!(poly_constant(2.0, f64::INFINITY, 1.0, 0.5), Err(Error::Divergent(_))));
    }

    #[test]
    fn exponential_constant_examples() {
        let d = decompose(&DistributionSpec::exponential(1.0).unwrap()).unwrap();
        let r = exp_constant_for(&d, 0.0, 0.5).unwrap();
        assert!((r.constant - 4.0).abs() < 1e-14);
        assert_eq!(exp_constant(0.5, 3.0, 2.0, 0.0).unwrap().constant, 6.0);
        let near = exp_constant(0.5, 1.0, 1.0, 1.0 - 1e-9).unwrap().constant;
        let nearer = exp_constant(0.5, 1.0, 1.0, 1.0 - 1e-12).unwrap().constant;
        assert!(nearer > near);
        assert!(matches!(exp_constant(0.5, 1.0, 1.0, 1.0), Err(Error::InadmissibleRate { .. })));
    }

    #[test]
    fn curves_and_clamping() {
        let poly = poly_constant(1.0, 0.5, 0.0, 1.0).unwrap();
        let c = tv_bound_curve(&BoundReport { constant: 1.0, ..poly }, &[10.0]).unwrap();
        assert!((c[0] - 0.2).abs() < 1e-15);
        let e = exp_constant(0.5, 2.0, 2.0, 0.0).unwrap();
        assert_eq!(tv_bound_curve(&e, &[0.0]).unwrap(), vec![2.0]);
        assert!(matches!(tv_bound_curve(&poly, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn comparison_ratio_is_inverse_time() {
        let a = poly_constant(3.0, 1.0, 1.0, 0.8).unwrap();
        let b = poly_constant(2.0, 1.0, 1.0, 0.8).unwrap();
        let cmp = classical_comparison(&a, &b, &[10.0, 100.0, 1000.0]).unwrap();
        for row in &cmp.rows {
            let expected = cmp.crossover / row.t;
            assert!((row.ratio - expected).abs() <= 1e-12 * expected);
        }
    }
}
