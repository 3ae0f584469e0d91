//! Lifetime laws on `[0, inf)`.
//!
//! A closed catalog of analytic families (exponential, uniform, Lomax) plus
//! weighted mixtures and mixtures with atoms. Every law exposes its CDF,
//! generalized inverse, residual-life law, equilibrium (stationary excess)
//! transform and moment functionals, with closed forms wherever the family
//! admits them.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Tolerance on the total probability mass of a mixture.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Largest double strictly below one.
pub(crate) const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub dist: DistributionSpec,
}

/// A lifetime law `F`.
///
/// The canonical JSON form is `{"family": ..., "params": {...}, "atoms": [[loc, mass], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Lomax { shape: f64, scale: f64 },
    WeightedMixture(Vec<Component>),
    AtomMixture {
        continuous: Option<Box<DistributionSpec>>,
        continuous_weight: f64,
        atoms: Vec<Atom>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentOrder {
    Raw { k: f64 },
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub order: MomentOrder,
    /// `+inf` when the moment diverges (serialized as `null`).
    pub value: f64,
    pub finite: bool,
}

impl MomentReport {
    fn new(order: MomentOrder, value: f64) -> Self {
        let finite = value.is_finite();
        Self { order, value: if finite { value } else { f64::INFINITY }, finite }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyConditionReport {
    pub satisfied: bool,
    pub ac_mass: f64,
    pub mean: MomentReport,
}

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        let spec = Self::Exponential { rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let spec = Self::Uniform { a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lomax(shape: f64, scale: f64) -> Result<Self> {
        let spec = Self::Lomax { shape, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn weighted_mixture(components: Vec<(f64, DistributionSpec)>) -> Result<Self> {
        let spec = Self::WeightedMixture(
            components.into_iter().map(|(weight, dist)| Component { weight, dist }).collect(),
        );
        spec.validate()?;
        Ok(spec)
    }

    /// `continuous_weight * continuous + sum of atoms`; pass `None` for a purely
    /// discrete law.
    pub fn atom_mixture(
        continuous: Option<DistributionSpec>,
        continuous_weight: f64,
        atoms: &[(f64, f64)],
    ) -> Result<Self> {
        let spec = Self::AtomMixture {
            continuous: continuous.map(Box::new),
            continuous_weight,
            atoms: atoms.iter().map(|&(location, mass)| Atom { location, mass }).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate must be positive and finite, got {rate}"));
                }
            }
            Self::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && b > a) {
                    return bad(format!("uniform requires 0 <= a < b, got a={a}, b={b}"));
                }
            }
            Self::Lomax { shape, scale } => {
                if !(shape.is_finite() && *shape > 0.0 && scale.is_finite() && *scale > 0.0) {
                    return bad(format!("lomax requires shape > 0 and scale > 0, got {shape}, {scale}"));
                }
            }
            Self::WeightedMixture(components) => {
                if components.is_empty() {
                    return bad("weighted mixture needs at least one component".into());
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight.is_finite() && c.weight >= 0.0) {
                        return bad(format!("mixture weight must be nonnegative, got {}", c.weight));
                    }
                    c.dist.validate()?;
                    total += c.weight;
                }
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return bad(format!("mixture weights sum to {total}, expected 1"));
                }
            }
            Self::AtomMixture { continuous, continuous_weight, atoms } => {
                let w = *continuous_weight;
                if !(0.0..=1.0).contains(&w) {
                    return bad(format!("continuous weight must lie in [0, 1], got {w}"));
                }
                match continuous {
                    Some(c) => c.validate()?,
                    None if w > 0.0 => {
                        return bad("positive continuous weight without a continuous part".into())
                    }
                    None => {}
                }
                let mut total = w;
                for atom in atoms {
                    if !(atom.location.is_finite() && atom.location >= 0.0) {
                        return bad(format!("atom location must be finite and >= 0, got {}", atom.location));
                    }
                    if !(atom.mass.is_finite() && atom.mass > 0.0) {
                        return bad(format!("atom mass must be positive, got {}", atom.mass));
                    }
                    total += atom.mass;
                }
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return bad(format!("continuous weight and atom masses sum to {total}, expected 1"));
                }
            }
        }
        Ok(())
    }

    fn continuous_part(&self) -> Option<(&DistributionSpec, f64)> {
        match self {
            Self::AtomMixture { continuous: Some(c), continuous_weight, .. } if *continuous_weight > 0.0 => {
                Some((c, *continuous_weight))
            }
            _ => None,
        }
    }

    /// `F(s) = P(zeta <= s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -(-rate * s).exp_m1(),
            Self::Uniform { a, b } => ((s - a) / (b - a)).clamp(0.0, 1.0),
            Self::Lomax { shape, scale } => -(-shape * (s / scale).ln_1p()).exp_m1(),
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.cdf(s)).sum(),
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, w)| w * c.cdf(s));
                cont + atoms.iter().filter(|a| a.location <= s).map(|a| a.mass).sum::<f64>()
            }
        }
    }

    /// Left limit `F(s-)`.
    pub fn cdf_left(&self, s: f64) -> f64 {
        match self {
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.cdf_left(s)).sum(),
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, w)| w * c.cdf_left(s));
                cont + atoms.iter().filter(|a| a.location < s).map(|a| a.mass).sum::<f64>()
            }
            _ => self.cdf(s),
        }
    }

    /// `P(zeta > s)`, computed without cancellation in the tail.
    pub fn survival(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => (-rate * s).exp(),
            Self::Uniform { a, b } => ((b - s) / (b - a)).clamp(0.0, 1.0),
            Self::Lomax { shape, scale } => (-shape * (s / scale).ln_1p()).exp(),
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.survival(s)).sum(),
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, w)| w * c.survival(s));
                cont + atoms.iter().filter(|a| a.location > s).map(|a| a.mass).sum::<f64>()
            }
        }
    }

    /// Mass of the absolutely continuous component.
    pub fn ac_mass(&self) -> f64 {
        match self {
            Self::Exponential { .. } | Self::Uniform { .. } | Self::Lomax { .. } => 1.0,
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.ac_mass()).sum(),
            Self::AtomMixture { .. } => self.continuous_part().map_or(0.0, |(c, w)| w * c.ac_mass()),
        }
    }

    /// Unnormalized CDF of the absolutely continuous component.
    pub fn ac_cdf(&self, s: f64) -> f64 {
        match self {
            Self::Exponential { .. } | Self::Uniform { .. } | Self::Lomax { .. } => self.cdf(s),
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.ac_cdf(s)).sum(),
            Self::AtomMixture { .. } => self.continuous_part().map_or(0.0, |(c, w)| w * c.ac_cdf(s)),
        }
    }

    /// Density `F'(s)` of the absolutely continuous component (0 where it does not exist).
    pub fn ac_density(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => rate * (-rate * s).exp(),
            Self::Uniform { a, b } => {
                if s >= *a && s < *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Self::Lomax { shape, scale } => shape / scale * (-(shape + 1.0) * (s / scale).ln_1p()).exp(),
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.ac_density(s)).sum(),
            Self::AtomMixture { .. } => self.continuous_part().map_or(0.0, |(c, w)| w * c.ac_density(s)),
        }
    }

    /// All atoms of the law with their absolute masses, sorted by location.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.collect_atoms(1.0, &mut out);
        out.sort_by(|x, y| x.location.total_cmp(&y.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(out.len());
        for atom in out {
            match merged.last_mut() {
                Some(last) if last.location == atom.location => last.mass += atom.mass,
                _ => merged.push(atom),
            }
        }
        merged
    }

    fn collect_atoms(&self, scale: f64, out: &mut Vec<Atom>) {
        match self {
            Self::WeightedMixture(cs) => {
                for c in cs {
                    c.dist.collect_atoms(scale * c.weight, out);
                }
            }
            Self::AtomMixture { atoms, .. } => {
                out.extend(atoms.iter().map(|a| Atom { location: a.location, mass: scale * a.mass }));
                if let Some((c, w)) = self.continuous_part() {
                    c.collect_atoms(scale * w, out);
                }
            }
            _ => {}
        }
    }

    /// Right end of the support (`inf` for unbounded laws).
    pub fn support_end(&self) -> f64 {
        match self {
            Self::Exponential { .. } | Self::Lomax { .. } => f64::INFINITY,
            Self::Uniform { b, .. } => *b,
            Self::WeightedMixture(cs) => {
                cs.iter().filter(|c| c.weight > 0.0).map(|c| c.dist.support_end()).fold(0.0, f64::max)
            }
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, _)| c.support_end());
                atoms.iter().map(|a| a.location).fold(cont, f64::max)
            }
        }
    }

    /// Points where the density or the survival function may jump.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_kinks(&mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect_kinks(&self, out: &mut Vec<f64>) {
        match self {
            Self::Uniform { a, b } => out.extend([*a, *b]),
            Self::WeightedMixture(cs) => {
                for c in cs.iter().filter(|c| c.weight > 0.0) {
                    c.dist.collect_kinks(out);
                }
            }
            Self::AtomMixture { atoms, .. } => {
                out.extend(atoms.iter().map(|a| a.location));
                if let Some((c, _)) = self.continuous_part() {
                    c.collect_kinks(out);
                }
            }
            _ => {}
        }
    }

    /// `int_0^s (1 - F(u)) du`.
    pub fn integrated_survival(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -(-rate * s).exp_m1() / rate,
            Self::Uniform { a, b } => {
                if s <= *a {
                    s
                } else if s >= *b {
                    0.5 * (a + b)
                } else {
                    let x = s - a;
                    a + x - x * x / (2.0 * (b - a))
                }
            }
            Self::Lomax { shape, scale } => {
                let l = (s / scale).ln_1p();
                if *shape == 1.0 {
                    scale * l
                } else {
                    scale / (1.0 - shape) * ((1.0 - shape) * l).exp_m1()
                }
            }
            Self::WeightedMixture(cs) => cs.iter().map(|c| c.weight * c.dist.integrated_survival(s)).sum(),
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, w)| w * c.integrated_survival(s));
                cont + atoms.iter().map(|a| a.mass * a.location.min(s)).sum::<f64>()
            }
        }
    }

    /// Mean, or an error when it is not finite and positive.
    pub fn finite_mean(&self) -> Result<f64> {
        let m = self.moment_value(1.0);
        if m.is_finite() && m > 0.0 {
            Ok(m)
        } else {
            Err(Error::UnsupportedLaw(format!("equilibrium transform needs a finite positive mean, got {m}")))
        }
    }

    /// Equilibrium CDF `F~(s) = mean^-1 int_0^s (1 - F(u)) du`.
    pub fn equilibrium_cdf(&self, s: f64) -> Result<f64> {
        let mean = self.finite_mean()?;
        Ok(self.equilibrium_cdf_with_mean(mean, s))
    }

    pub(crate) fn equilibrium_cdf_with_mean(&self, mean: f64, s: f64) -> f64 {
        match self {
            Self::Exponential { .. } => self.cdf(s),
            Self::Lomax { shape, scale } if *shape > 1.0 => {
                if s <= 0.0 {
                    0.0
                } else {
                    -(-(shape - 1.0) * (s / scale).ln_1p()).exp_m1()
                }
            }
            _ => (self.integrated_survival(s) / mean).min(1.0),
        }
    }

    /// Equilibrium density `(1 - F(s)) / mean`.
    pub fn equilibrium_density(&self, s: f64) -> Result<f64> {
        let mean = self.finite_mean()?;
        Ok(if s < 0.0 { 0.0 } else { self.survival(s) / mean })
    }

    /// Generalized inverse of the equilibrium CDF.
    pub fn equilibrium_quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let mean = self.finite_mean()?;
        Ok(self.equilibrium_quantile_with_mean(mean, p))
    }

    pub(crate) fn equilibrium_quantile_with_mean(&self, mean: f64, p: f64) -> f64 {
        let p = p.min(BELOW_ONE);
        match self {
            Self::Exponential { .. } => self.quantile_unchecked(p),
            Self::Lomax { shape, scale } if *shape > 1.0 => lomax_quantile(shape - 1.0, *scale, p),
            Self::Uniform { a, b } => {
                let target = p * mean;
                if target <= *a {
                    target
                } else {
                    let len = b - a;
                    let disc = (1.0 - 2.0 * (target - a) / len).max(0.0);
                    // x - x^2/(2 len) = target - a, solved stably
                    let x = 2.0 * (target - a) / (1.0 + disc.sqrt());
                    (a + x).min(*b)
                }
            }
            _ => {
                let hi = upper_bracket(|x| self.equilibrium_cdf_with_mean(mean, x), p, self.support_end());
                invert_monotone(|x| self.equilibrium_cdf_with_mean(mean, x), p, 0.0, hi)
            }
        }
    }

    /// Generalized inverse `F^-1(y) = inf{x : F(x) >= y}` for `y` in `[0, 1)`.
    pub fn quantile(&self, y: f64) -> Result<f64> {
        check_probability(y)?;
        Ok(self.quantile_unchecked(y))
    }

    pub(crate) fn quantile_unchecked(&self, y: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -(-y).ln_1p() / rate,
            Self::Uniform { a, b } => a + y * (b - a),
            Self::Lomax { shape, scale } => lomax_quantile(*shape, *scale, y),
            _ => self.generic_quantile(y),
        }
    }

    fn generic_quantile(&self, y: f64) -> f64 {
        for atom in self.atoms() {
            if self.cdf_left(atom.location) < y && y <= self.cdf(atom.location) {
                return atom.location;
            }
        }
        let hi = upper_bracket(|x| self.cdf(x), y, self.support_end());
        invert_monotone(|x| self.cdf(x), y, 0.0, hi)
    }

    /// Generalized inverse of the unnormalized absolutely continuous CDF, for
    /// levels in `[0, ac_mass)`.
    pub fn ac_quantile(&self, p: f64) -> f64 {
        match self {
            Self::Exponential { .. } | Self::Uniform { .. } | Self::Lomax { .. } => {
                self.quantile_unchecked(p.clamp(0.0, BELOW_ONE))
            }
            Self::AtomMixture { continuous: Some(c), continuous_weight, .. }
                if *continuous_weight > 0.0 && c.is_leaf() =>
            {
                c.quantile_unchecked((p / continuous_weight).clamp(0.0, BELOW_ONE))
            }
            _ => {
                let mass = self.ac_mass();
                let p = p.min(mass * BELOW_ONE);
                let hi = upper_bracket(|x| self.ac_cdf(x), p, self.support_end());
                invert_monotone(|x| self.ac_cdf(x), p, 0.0, hi)
            }
        }
    }

    fn is_leaf(&self) -> bool {
        matches!(self, Self::Exponential { .. } | Self::Uniform { .. } | Self::Lomax { .. })
    }

    fn check_residual(&self, r: f64) -> Result<()> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Domain(format!("elapsed time must be finite and >= 0, got {r}")));
        }
        if self.survival(r) <= 0.0 {
            return Err(Error::DegenerateResidual { elapsed: r });
        }
        Ok(())
    }

    /// Residual-life CDF `F_r(s) = (F(s + r) - F(r)) / (1 - F(r))`.
    pub fn residual_cdf(&self, r: f64, s: f64) -> Result<f64> {
        self.check_residual(r)?;
        if s < 0.0 {
            return Ok(0.0);
        }
        let fr = self.cdf(r);
        if fr < 0.5 {
            Ok(((self.cdf(s + r) - fr) / (1.0 - fr)).clamp(0.0, 1.0))
        } else {
            let sr = self.survival(r);
            Ok(((sr - self.survival(s + r)) / sr).clamp(0.0, 1.0))
        }
    }

    /// The residual-life law `F_r` as a catalog member.
    pub fn residual_law(&self, r: f64) -> Result<DistributionSpec> {
        self.check_residual(r)?;
        if r == 0.0 && self.cdf(0.0) == 0.0 {
            return Ok(self.clone());
        }
        Ok(match self {
            Self::Exponential { .. } => self.clone(),
            Self::Lomax { shape, scale } => Self::Lomax { shape: *shape, scale: scale + r },
            Self::Uniform { a, b } => Self::Uniform { a: (a - r).max(0.0), b: b - r },
            Self::WeightedMixture(cs) => {
                let total = self.survival(r);
                let mut out = Vec::new();
                for c in cs {
                    let sc = c.dist.survival(r);
                    if c.weight > 0.0 && sc > 0.0 {
                        out.push(Component { weight: c.weight * sc / total, dist: c.dist.residual_law(r)? });
                    }
                }
                Self::WeightedMixture(out)
            }
            Self::AtomMixture { atoms, .. } => {
                let total = self.survival(r);
                let (continuous, continuous_weight) = match self.continuous_part() {
                    Some((c, w)) if c.survival(r) > 0.0 => {
                        (Some(Box::new(c.residual_law(r)?)), w * c.survival(r) / total)
                    }
                    _ => (None, 0.0),
                };
                let atoms = atoms
                    .iter()
                    .filter(|a| a.location > r)
                    .map(|a| Atom { location: a.location - r, mass: a.mass / total })
                    .collect();
                Self::AtomMixture { continuous, continuous_weight, atoms }
            }
        })
    }

    /// Generalized inverse of `F_r`.
    pub fn residual_quantile(&self, r: f64, y: f64) -> Result<f64> {
        check_probability(y)?;
        self.check_residual(r)?;
        Ok(match self {
            Self::Exponential { .. } => self.quantile_unchecked(y),
            Self::Lomax { shape, scale } => lomax_quantile(*shape, scale + r, y),
            Self::Uniform { a, b } => {
                let lo = (a - r).max(0.0);
                lo + y * (b - r - lo)
            }
            _ => self.residual_law(r)?.quantile_unchecked(y),
        })
    }

    /// Raw moment `E zeta^k`; divergence is reported, not an error.
    pub fn moment(&self, k: f64) -> Result<MomentReport> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::Domain(format!("moment order must be finite and >= 0, got {k}")));
        }
        Ok(MomentReport::new(MomentOrder::Raw { k }, self.moment_value(k)))
    }

    pub(crate) fn moment_value(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => {
                if is_small_integer(k) {
                    factorial(k as u32) / rate.powi(k as i32)
                } else {
                    (ln_gamma(k + 1.0) - k * rate.ln()).exp()
                }
            }
            Self::Uniform { a, b } => (b.powf(k + 1.0) - a.powf(k + 1.0)) / ((k + 1.0) * (b - a)),
            Self::Lomax { shape, scale } => {
                if k >= *shape {
                    f64::INFINITY
                } else if is_small_integer(k) {
                    let n = k as u32;
                    let denom: f64 = (1..=n).map(|i| shape - f64::from(i)).product();
                    factorial(n) * scale.powi(n as i32) / denom
                } else {
                    (ln_gamma(k + 1.0) + ln_gamma(shape - k) - ln_gamma(*shape)).exp() * scale.powf(k)
                }
            }
            Self::WeightedMixture(cs) => cs
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| c.weight * c.dist.moment_value(k))
                .sum(),
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, w)| w * c.moment_value(k));
                cont + atoms.iter().map(|a| a.mass * a.location.powf(k)).sum::<f64>()
            }
        }
    }

    /// Exponential moment `E exp(alpha * zeta)`.
    pub fn exp_moment(&self, alpha: f64) -> Result<MomentReport> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Domain(format!("exponential rate must be finite and >= 0, got {alpha}")));
        }
        Ok(MomentReport::new(MomentOrder::Exponential { rate: alpha }, self.exp_moment_value(alpha)))
    }

    pub(crate) fn exp_moment_value(&self, alpha: f64) -> f64 {
        if alpha == 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => {
                if alpha < *rate {
                    rate / (rate - alpha)
                } else {
                    f64::INFINITY
                }
            }
            Self::Uniform { a, b } => {
                let x = alpha * (b - a);
                (alpha * a).exp() * x.exp_m1() / x
            }
            Self::Lomax { .. } => f64::INFINITY,
            Self::WeightedMixture(cs) => cs
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| c.weight * c.dist.exp_moment_value(alpha))
                .sum(),
            Self::AtomMixture { atoms, .. } => {
                let cont = self.continuous_part().map_or(0.0, |(c, w)| w * c.exp_moment_value(alpha));
                cont + atoms.iter().map(|a| a.mass * (alpha * a.location).exp()).sum::<f64>()
            }
        }
    }

    /// Positive absolutely continuous mass and a finite mean.
    pub fn validate_key_condition(&self) -> KeyConditionReport {
        let ac_mass = self.ac_mass();
        let mean = MomentReport::new(MomentOrder::Raw { k: 1.0 }, self.moment_value(1.0));
        KeyConditionReport { satisfied: ac_mass > 0.0 && mean.finite, ac_mass, mean }
    }
}

fn check_probability(y: f64) -> Result<()> {
    if (0.0..1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability level must lie in [0, 1), got {y}")))
    }
}

fn lomax_quantile(shape: f64, scale: f64, y: f64) -> f64 {
    scale * (-(-y).ln_1p() / shape).exp_m1()
}

fn is_small_integer(k: f64) -> bool {
    k.fract() == 0.0 && k <= 170.0
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Smallest bracket end `hi` with `f(hi) >= y`, starting from the support end
/// when it is finite.
pub(crate) fn upper_bracket<F: Fn(f64) -> f64>(f: F, y: f64, support_end: f64) -> f64 {
    if support_end.is_finite() {
        return support_end;
    }
    let mut hi = 1.0;
    while f(hi) < y && hi < 1e300 {
        hi *= 2.0;
    }
    hi
}

/// `inf{x in [lo, hi] : f(x) >= y}` for nondecreasing `f` with `f(hi) >= y`,
/// resolved to adjacent doubles.
pub(crate) fn invert_monotone<F: Fn(f64) -> f64>(f: F, y: f64, lo: f64, hi: f64) -> f64 {
    if f(lo) >= y {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..1100 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    family: String,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialParams {
    rate: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformParams {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LomaxParams {
    shape: f64,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureParams {
    components: Vec<Component>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomMixtureParams {
    #[serde(default)]
    continuous: Option<DistributionSpec>,
    continuous_weight: f64,
}

fn params<T: serde::de::DeserializeOwned>(family: &str, value: serde_json::Value) -> Result<T> {
    serde_json::from_value(value)
        .map_err(|e| Error::InvalidSpec(format!("params of family \"{family}\": {e}")))
}

impl TryFrom<SpecJson> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: SpecJson) -> Result<Self> {
        let family = raw.family.as_str();
        if family != "atom_mixture" && !raw.atoms.is_empty() {
            return Err(Error::InvalidSpec(format!("family \"{family}\" does not take atoms")));
        }
        let spec = match family {
            "exponential" => {
                let p: ExponentialParams = params(family, raw.params)?;
                Self::Exponential { rate: p.rate }
            }
            "uniform" => {
                let p: UniformParams = params(family, raw.params)?;
                Self::Uniform { a: p.a, b: p.b }
            }
            "lomax" => {
                let p: LomaxParams = params(family, raw.params)?;
                Self::Lomax { shape: p.shape, scale: p.scale }
            }
            "weighted_mixture" => {
                let p: MixtureParams = params(family, raw.params)?;
                Self::WeightedMixture(p.components)
            }
            "atom_mixture" => {
                let p: AtomMixtureParams = params(family, raw.params)?;
                Self::AtomMixture {
                    continuous: p.continuous.map(Box::new),
                    continuous_weight: p.continuous_weight,
                    atoms: raw.atoms.iter().map(|&[location, mass]| Atom { location, mass }).collect(),
                }
            }
            other => return Err(Error::InvalidSpec(format!("unknown family \"{other}\""))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<DistributionSpec> for SpecJson {
    fn from(spec: DistributionSpec) -> Self {
        let to_value = |v: serde_json::Result<serde_json::Value>| v.expect("params serialize");
        let (family, params, atoms) = match spec {
            DistributionSpec::Exponential { rate } => {
                ("exponential", to_value(serde_json::to_value(ExponentialParams { rate })), vec![])
            }
            DistributionSpec::Uniform { a, b } => {
                ("uniform", to_value(serde_json::to_value(UniformParams { a, b })), vec![])
            }
            DistributionSpec::Lomax { shape, scale } => {
                ("lomax", to_value(serde_json::to_value(LomaxParams { shape, scale })), vec![])
            }
            DistributionSpec::WeightedMixture(components) => (
                "weighted_mixture",
                to_value(serde_json::to_value(MixtureParams { components })),
                vec![],
            ),
            DistributionSpec::AtomMixture { continuous, continuous_weight, atoms } => (
                "atom_mixture",
                to_value(serde_json::to_value(AtomMixtureParams {
                    continuous: continuous.map(|c| *c),
                    continuous_weight,
                })),
                atoms.iter().map(|a| [a.location, a.mass]).collect(),
            ),
        };
        SpecJson { family: family.to_string(), params, atoms }
    }
}
