//! Overlap decomposition of a lifetime law against its equilibrium law.
//!
//! With `f` the density of the absolutely continuous part of `F` and `f~` the
//! equilibrium density, `phi = min(f, f~)`, `Phi(s) = int_0^s phi`,
//! `Psi = F - Phi` and `Psi~ = F~ - Phi`. The half-line is cut at the kinks of
//! `F` and at every crossing of `f` and `f~`; on each resulting segment `phi`
//! equals one of the two densities, so `Phi` is a difference of closed-form
//! CDFs there.

use serde::Serialize;

use crate::distributions::{invert_monotone, Atom, DistributionSpec, BELOW_ONE};
use crate::error::{Error, Result};
use crate::quadrature::integrate_range;

/// Below this residual mass the decomposition is treated as exact overlap.
pub const KAPPA_SNAP: f64 = 1e-13;

/// Relative size under which `f - f~` counts as zero during the crossing scan.
const ZERO_BAND: f64 = 1e-13;

const FINITE_SCAN_POINTS: usize = 512;
const TAIL_SCAN_POINTS: usize = 2048;

/// Safety margin below one for admissible exponential rates.
pub const BETA_MARGIN: f64 = 1e-6;
pub const BETA_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// phi = f
    Density,
    /// phi = f~
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub kind: SegmentKind,
    /// Values of Phi, Psi and Psi~ at `lo`.
    pub phi_lo: f64,
    pub psi_lo: f64,
    pub psi_tilde_lo: f64,
    ac_lo: f64,
    eq_lo: f64,
    atoms_lo: f64,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    source: DistributionSpec,
    mean: f64,
    atoms: Vec<Atom>,
    segments: Vec<Segment>,
    kappa: f64,
    kappa_bar: f64,
    psi_mass: f64,
    psi_tilde_mass: f64,
    /// `kappa_bar` fell below `KAPPA_SNAP`: Psi and Psi~ vanish identically.
    exact_overlap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub kappa: f64,
    pub kappa_bar: f64,
    pub breakpoints: Vec<f64>,
    pub psi_mass: f64,
}

pub fn decompose(spec: &DistributionSpec) -> Result<Decomposition> {
    spec.validate()?;
    let key = spec.validate_key_condition();
    if !key.satisfied {
        return Err(Error::KeyConditionViolated { ac_mass: key.ac_mass, mean_finite: key.mean.finite });
    }
    let mean = key.mean.value;
    let f = |s: f64| spec.ac_density(s);
    let ft = |s: f64| if s < 0.0 { 0.0 } else { spec.survival(s) / mean };
    let sign = |s: f64| {
        let (a, b) = (f(s), ft(s));
        let g = a - b;
        if g.abs() <= ZERO_BAND * (a + b) {
            0
        } else if g > 0.0 {
            1
        } else {
            -1
        }
    };

    let end = spec.support_end();
    let mut cuts: Vec<f64> = vec![0.0];
    cuts.extend(spec.kinks().into_iter().filter(|&x| x > 0.0 && x.is_finite()));
    if end.is_finite() {
        cuts.push(end);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut boundaries = cuts.clone();
    let last = *cuts.last().expect("at least the origin");
    let mut intervals: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    if !end.is_finite() {
        intervals.push((last, f64::INFINITY));
    }
    for &(lo, hi) in &intervals {
        let grid = scan_grid(lo, hi, mean);
        let mut prev: Option<(f64, i32)> = None;
        for &x in &grid {
            let s = sign(x);
            if s == 0 {
                continue;
            }
            if let Some((px, ps)) = prev {
                if ps != s {
                    boundaries.push(refine_crossing(&sign, px, x, ps));
                }
            }
            prev = Some((x, s));
        }
    }
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();

    let atoms = spec.atoms();
    let eq = |s: f64| spec.equilibrium_cdf_with_mean(mean, s);
    let atom_cdf = |s: f64| atoms.iter().filter(|a| a.location <= s).map(|a| a.mass).sum::<f64>();

    let mut segments = Vec::with_capacity(boundaries.len());
    let (mut phi, mut psi, mut psi_t) = (0.0, 0.0, 0.0);
    for (i, &lo) in boundaries.iter().enumerate() {
        let hi = boundaries.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let probe = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + mean.max(1.0) };
        let kind = if f(probe) > ft(probe) && sign(probe) != 0 {
            SegmentKind::Equilibrium
        } else {
            SegmentKind::Density
        };
        let mut seg = Segment {
            lo,
            hi,
            kind,
            phi_lo: phi,
            psi_lo: psi,
            psi_tilde_lo: psi_t,
            ac_lo: spec.ac_cdf(lo),
            eq_lo: eq(lo),
            atoms_lo: atom_cdf(lo),
        };
        if i == 0 {
            // an atom at the origin belongs to Psi from the start
            seg.psi_lo = seg.atoms_lo;
        }
        let (dphi, dpsi, dpsi_t) = increments(&seg, spec.ac_cdf(hi), eq(hi), atom_cdf(hi));
        phi = seg.phi_lo + dphi;
        psi = seg.psi_lo + dpsi;
        psi_t = seg.psi_tilde_lo + dpsi_t;
        segments.push(seg);
    }

    let mut kappa = phi.min(1.0);
    let mut kappa_bar = 1.0 - kappa;
    let exact_overlap = kappa_bar < KAPPA_SNAP;
    if exact_overlap {
        kappa = 1.0;
        kappa_bar = 0.0;
    }
    if kappa < 0.01 {
        log::warn!("overlap mass kappa = {kappa:.3e} is small; coupling constants scale like 1/kappa");
    }
    Ok(Decomposition {
        source: spec.clone(),
        mean,
        atoms,
        segments,
        kappa,
        kappa_bar,
        psi_mass: if exact_overlap { 0.0 } else { psi },
        psi_tilde_mass: if exact_overlap { 0.0 } else { psi_t },
        exact_overlap,
    })
}

fn increments(seg: &Segment, ac: f64, eq: f64, atoms: f64) -> (f64, f64, f64) {
    let dac = ac - seg.ac_lo;
    let deq = eq - seg.eq_lo;
    let datoms = atoms - seg.atoms_lo;
    match seg.kind {
        SegmentKind::Density => (dac.max(0.0), datoms.max(0.0), (deq - dac).max(0.0)),
        SegmentKind::Equilibrium => (deq.max(0.0), (dac - deq).max(0.0) + datoms.max(0.0), 0.0),
    }
}

fn scan_grid(lo: f64, hi: f64, mean: f64) -> Vec<f64> {
    if hi.is_finite() {
        let n = FINITE_SCAN_POINTS;
        (1..n).map(|j| lo + (hi - lo) * j as f64 / n as f64).collect()
    } else {
        let n = TAIL_SCAN_POINTS;
        (1..n)
            .map(|j| {
                let t = j as f64 / n as f64;
                lo + mean * t / (1.0 - t)
            })
            .collect()
    }
}

fn refine_crossing<S: Fn(f64) -> i32>(sign: &S, mut a: f64, mut b: f64, sign_a: i32) -> f64 {
    for _ in 0..200 {
        let mid = a + 0.5 * (b - a);
        if mid <= a || mid >= b {
            break;
        }
        let s = sign(mid);
        if s == sign_a {
            a = mid;
        } else if s == 0 {
            return mid;
        } else {
            b = mid;
        }
    }
    b
}

impl Decomposition {
    pub fn source(&self) -> &DistributionSpec {
        &self.source
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_bar(&self) -> f64 {
        self.kappa_bar
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.lo).collect()
    }

    /// Total mass of Psi (equals `kappa_bar` up to rounding).
    pub fn psi_mass(&self) -> f64 {
        self.psi_mass
    }

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            kappa: self.kappa,
            kappa_bar: self.kappa_bar,
            breakpoints: self.breakpoints(),
            psi_mass: self.psi_mass,
        }
    }

    fn segment_index(&self, s: f64) -> usize {
        self.segments.partition_point(|seg| seg.lo <= s).saturating_sub(1)
    }

    fn eq(&self, s: f64) -> f64 {
        self.source.equilibrium_cdf_with_mean(self.mean, s)
    }

    fn atom_cdf(&self, s: f64) -> f64 {
        self.atoms.iter().filter(|a| a.location <= s).map(|a| a.mass).sum()
    }

    fn values(&self, s: f64) -> (f64, f64, f64) {
        if s < 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let seg = &self.segments[self.segment_index(s)];
        let (dphi, dpsi, dpsi_t) = increments(seg, self.source.ac_cdf(s), self.eq(s), self.atom_cdf(s));
        (seg.phi_lo + dphi, seg.psi_lo + dpsi, seg.psi_tilde_lo + dpsi_t)
    }

    /// Overlap CDF `Phi(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        self.values(s).0
    }

    /// `Psi(s) = F(s) - Phi(s)`; carries every atom of `F`.
    pub fn psi(&self, s: f64) -> f64 {
        if self.exact_overlap {
            0.0
        } else {
            self.values(s).1
        }
    }

    /// `Psi~(s) = F~(s) - Phi(s)`.
    pub fn psi_tilde(&self, s: f64) -> f64 {
        if self.exact_overlap {
            0.0
        } else {
            self.values(s).2
        }
    }

    /// Density of the absolutely continuous part of Psi.
    pub fn psi_density(&self, s: f64) -> f64 {
        if self.exact_overlap || s < 0.0 {
            return 0.0;
        }
        match self.segments[self.segment_index(s)].kind {
            SegmentKind::Equilibrium => (self.f(s) - self.ft(s)).max(0.0),
            SegmentKind::Density => 0.0,
        }
    }

    /// Density of Psi~.
    pub fn psi_tilde_density(&self, s: f64) -> f64 {
        if self.exact_overlap || s < 0.0 {
            return 0.0;
        }
        match self.segments[self.segment_index(s)].kind {
            SegmentKind::Density => (self.ft(s) - self.f(s)).max(0.0),
            SegmentKind::Equilibrium => 0.0,
        }
    }

    fn f(&self, s: f64) -> f64 {
        self.source.ac_density(s)
    }

    fn ft(&self, s: f64) -> f64 {
        self.source.survival(s) / self.mean
    }

    /// `inf{x : Phi(x) >= y}` for `y` in `[0, kappa)`.
    pub fn quantile_phi(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let ends: Vec<f64> = self.segment_ends(|seg| seg.phi_lo, self.kappa_raw());
        let y = y.min(self.kappa_raw() * BELOW_ONE);
        let k = ends.partition_point(|&e| e < y).min(self.segments.len() - 1);
        let seg = &self.segments[k];
        let d = y - seg.phi_lo;
        let x = match seg.kind {
            SegmentKind::Density => self.source.ac_quantile(seg.ac_lo + d),
            SegmentKind::Equilibrium => {
                self.source.equilibrium_quantile_with_mean(self.mean, (seg.eq_lo + d).min(BELOW_ONE))
            }
        };
        x.clamp(seg.lo, seg.hi)
    }

    /// Phi at infinity before any snapping.
    fn kappa_raw(&self) -> f64 {
        let last = self.segments.last().expect("nonempty");
        let (dphi, _, _) = increments(last, self.source.ac_mass(), 1.0, self.atom_cdf(f64::INFINITY));
        last.phi_lo + dphi
    }

    fn segment_ends<G: Fn(&Segment) -> f64>(&self, start: G, total: f64) -> Vec<f64> {
        let mut ends: Vec<f64> = self.segments.iter().skip(1).map(&start).collect();
        ends.push(total);
        ends
    }

    /// `inf{x : Psi(x) >= y}` for `y` in `[0, kappa_bar)`; identically 0 when `kappa = 1`.
    pub fn quantile_psi(&self, y: f64) -> f64 {
        if self.exact_overlap || y <= 0.0 {
            return 0.0;
        }
        let y = y.min(self.psi_mass * BELOW_ONE);
        let first = &self.segments[0];
        if y <= first.psi_lo {
            return 0.0;
        }
        let ends = self.segment_ends(|seg| seg.psi_lo, self.psi_mass);
        let k = ends.partition_point(|&e| e < y).min(self.segments.len() - 1);
        let seg = &self.segments[k];
        let d = y - seg.psi_lo;
        match seg.kind {
            // only the atom at the right end adds Psi mass here
            SegmentKind::Density => seg.hi,
            SegmentKind::Equilibrium => {
                let h = |s: f64| (self.source.ac_cdf(s) - seg.ac_lo) - (self.eq(s) - seg.eq_lo);
                self.invert_on_segment(seg, h, d)
            }
        }
    }

    /// `inf{x : Psi~(x) >= y}` for `y` in `[0, kappa_bar)`; identically 0 when `kappa = 1`.
    pub fn quantile_psi_tilde(&self, y: f64) -> f64 {
        if self.exact_overlap || y <= 0.0 {
            return 0.0;
        }
        let y = y.min(self.psi_tilde_mass * BELOW_ONE);
        let ends = self.segment_ends(|seg| seg.psi_tilde_lo, self.psi_tilde_mass);
        let k = ends.partition_point(|&e| e < y).min(self.segments.len() - 1);
        let seg = &self.segments[k];
        let d = y - seg.psi_tilde_lo;
        let h = |s: f64| (self.eq(s) - seg.eq_lo) - (self.source.ac_cdf(s) - seg.ac_lo);
        self.invert_on_segment(seg, h, d)
    }

    fn invert_on_segment<H: Fn(f64) -> f64>(&self, seg: &Segment, h: H, d: f64) -> f64 {
        let mut hi = seg.hi;
        if hi.is_infinite() {
            let mut step = self.mean.max(1.0);
            hi = seg.lo + step;
            while h(hi) < d && hi < 1e300 {
                step *= 2.0;
                hi = seg.lo + step;
            }
        } else if h(hi) < d {
            return hi;
        }
        invert_monotone(h, d, seg.lo, hi)
    }

    /// `int s^k d(Psi / kappa_bar)`; 0 by convention when `kappa = 1`, `inf` when divergent.
    pub fn psi_moment(&self, k: f64) -> f64 {
        if self.exact_overlap {
            return 0.0;
        }
        if k == 0.0 {
            return 1.0;
        }
        self.psi_integral(|s| s.powf(k), self.source.moment_value(k)) / self.kappa_bar
    }

    /// Un-normalized `int e^{beta s} dPsi(s)`; equals `kappa_bar` at `beta = 0`.
    pub fn psi_exp_moment(&self, beta: f64) -> f64 {
        if self.exact_overlap {
            return 0.0;
        }
        if beta == 0.0 {
            return self.kappa_bar;
        }
        self.psi_integral(|s| (beta * s).exp(), self.source.exp_moment_value(beta))
    }

    fn psi_integral<W: Fn(f64) -> f64>(&self, weight: W, source_value: f64) -> f64 {
        let mut total = 0.0;
        for seg in &self.segments {
            if seg.kind != SegmentKind::Equilibrium {
                continue;
            }
            if seg.hi.is_infinite() && !source_value.is_finite() {
                return f64::INFINITY;
            }
            let q = integrate_range(
                |s| weight(s) * (self.f(s) - self.ft(s)).max(0.0),
                seg.lo,
                seg.hi,
                1e-14,
                1e-11,
            );
            if !q.value.is_finite() || (seg.hi.is_infinite() && !q.converged) {
                return f64::INFINITY;
            }
            total += q.value;
        }
        total + self.atoms.iter().map(|a| a.mass * weight(a.location)).sum::<f64>()
    }

    /// Largest `beta` in `(0, a]` with `int e^{beta s} dPsi <= 1 - BETA_MARGIN`.
    pub fn find_beta(&self, a: f64) -> Result<f64> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("rate cap must be positive and finite, got {a}")));
        }
        if !self.source.exp_moment_value(a).is_finite() {
            return Err(Error::RateNotFound(format!(
                "the lifetime law has no finite exponential moment of rate {a}"
            )));
        }
        let target = 1.0 - BETA_MARGIN;
        if self.psi_exp_moment(a) <= target {
            return Ok(a);
        }
        if self.kappa_bar > target {
            return Err(Error::RateNotFound(format!("residual mass {} leaves no admissible rate", self.kappa_bar)));
        }
        let (mut lo, mut hi) = (0.0, a);
        while hi - lo > BETA_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if self.psi_exp_moment(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > 0.0 {
            Ok(lo)
        } else {
            Err(Error::RateNotFound(format!("no admissible rate above {BETA_TOLERANCE}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> Decomposition {
        decompose(&DistributionSpec::uniform(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn exponential_overlaps_fully() {
        let d = decompose(&DistributionSpec::exponential(2.5).unwrap()).unwrap();
        assert_eq!(d.kappa(), 1.0);
        assert_eq!(d.kappa_bar(), 0.0);
        for s in [0.0, 0.3, 4.0] {
            assert_eq!(d.psi(s), 0.0);
            assert_eq!(d.psi_tilde(s), 0.0);
        }
        assert_eq!(d.quantile_psi(0.3), 0.0);
        assert_eq!(d.psi_moment(2.0), 0.0);
        assert_eq!(d.psi_exp_moment(0.5), 0.0);
    }

    #[test]
    fn uniform_closed_forms() {
        let d = uniform();
        assert!((d.kappa() - 0.75).abs() < 1e-14);
        assert!((d.phi(0.3) - 0.3).abs() < 1e-15);
        assert!((d.psi(0.8) - 0.09).abs() < 1e-14);
        assert!((d.psi_tilde(0.2) - 0.16).abs() < 1e-14);
        assert!((d.quantile_phi(0.375) - 0.375).abs() < 1e-15);
        assert!((d.quantile_psi(0.0625) - 0.75).abs() < 1e-12);
        let expected = (1.0 - 0.75f64.sqrt()) / 2.0;
        assert!((d.quantile_psi_tilde(0.0625) - expected).abs() < 1e-12);
    }

    #[test]
    fn lomax_crossing_and_kappa() {
        let d = decompose(&DistributionSpec::lomax(3.0, 1.0).unwrap()).unwrap();
        assert!((d.kappa() - 23.0 / 27.0).abs() < 1e-12);
        assert!(d.breakpoints().iter().any(|&b| (b - 0.5).abs() < 1e-12));
    }

    #[test]
    fn atoms_go_to_psi() {
        let spec = DistributionSpec::atom_mixture(Some(DistributionSpec::uniform(0.0, 1.0).unwrap()), 0.7, &[(2.0, 0.3)])
            .unwrap();
        let d = decompose(&spec).unwrap();
        assert!(d.psi(2.0) - d.psi(1.999) > 0.3 - 1e-12);
        assert!((d.psi(f64::INFINITY) - d.kappa_bar()).abs() < 1e-12);
        assert!((d.psi_tilde(f64::INFINITY) - d.kappa_bar()).abs() < 1e-12);
        assert_eq!(d.quantile_psi(d.kappa_bar() * 0.999), 2.0);
    }

    #[test]
    fn atom_at_origin_lands_in_psi() {
        let spec =
            DistributionSpec::atom_mixture(Some(DistributionSpec::exponential(1.0).unwrap()), 0.8, &[(0.0, 0.2)])
                .unwrap();
        let d = decompose(&spec).unwrap();
        assert!((d.psi(0.0) - 0.2).abs() < 1e-15);
        assert_eq!(d.quantile_psi(0.1), 0.0);
        for s in [0.0, 0.5, 2.0, 10.0] {
            assert!((d.phi(s) + d.psi(s) - spec.cdf(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn key_condition_is_enforced() {
        let det = DistributionSpec::atom_mixture(None, 0.0, &[(1.0, 1.0)]).unwrap();
        assert!(matches!(decompose(&det), Err(Error::KeyConditionViolated { .. })));
        let heavy = DistributionSpec::lomax(0.9, 1.0).unwrap();
        assert!(matches!(decompose(&heavy), Err(Error::KeyConditionViolated { mean_finite: false, .. })));
    }

    #[test]
    fn psi_moments_for_uniform() {
        let d = uniform();
        assert_eq!(d.psi_moment(0.0), 1.0);
        // int_{1/2}^1 s (2s - 1) ds = 5/24
        assert!((d.psi_moment(1.0) - (5.0 / 24.0) / 0.25).abs() < 1e-10);
        assert_eq!(d.psi_exp_moment(0.0), d.kappa_bar());
        let e = std::f64::consts::E;
        assert!((d.psi_exp_moment(1.0) - (2.0 * e.sqrt() - e)).abs() < 1e-10);
    }

    #[test]
    fn find_beta_examples() {
        let exp = decompose(&DistributionSpec::exponential(1.0).unwrap()).unwrap();
        assert_eq!(exp.find_beta(0.5).unwrap(), 0.5);
        assert_eq!(uniform().find_beta(1.0).unwrap(), 1.0);
        let lomax = decompose(&DistributionSpec::lomax(3.0, 1.0).unwrap()).unwrap();
        assert!(matches!(lomax.find_beta(0.1), Err(Error::RateNotFound(_))));
    }

    #[test]
    fn find_beta_bisects_when_cap_is_too_large() {
        let d = uniform();
        let beta = d.find_beta(5.0).unwrap();
        assert!(beta < 5.0);
        assert!(d.psi_exp_moment(beta) <= 1.0 - BETA_MARGIN);
        assert!(d.psi_exp_moment(beta + 2.0 * BETA_TOLERANCE) > 1.0 - BETA_MARGIN);
    }

    #[test]
    fn summary_serializes() {
        let json = serde_json::to_value(uniform().summary()).unwrap();
        assert!((json["kappa"].as_f64().unwrap() - 0.75).abs() < 1e-14);
        assert!(json["breakpoints"].as_array().unwrap().len() >= 3);
        assert!((json["psi_mass"].as_f64().unwrap() - 0.25).abs() < 1e-14);
    }
}
