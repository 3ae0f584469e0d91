//! Uniform streams and inverse-transform samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::Decomposition;
use crate::distributions::DistributionSpec;
use crate::error::Result;

/// A source of i.i.d. uniforms on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

/// Counter-based stream: the draw sequence is a pure function of `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct UniformStream {
    seed: u64,
    stream_id: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl UniformStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, counter: 0, rng }
    }

    /// A stream whose key also depends on `purpose`, so that different
    /// simulation stages driven by one seed never share draws.
    pub fn for_purpose(seed: u64, purpose: u64, stream_id: u64) -> Self {
        let mut s = Self::new(splitmix64(seed ^ splitmix64(purpose)), stream_id);
        s.seed = seed;
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of uniforms drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }
}

impl UniformSource for UniformStream {
    fn next_uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.gen::<f64>()
    }
}

/// Replays a fixed list of uniforms; panics once it is exhausted.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    values: Vec<f64>,
    position: usize,
}

impl ReplaySource {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, position: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.position
    }
}

impl UniformSource for ReplaySource {
    fn next_uniform(&mut self) -> f64 {
        let v = *self.values.get(self.position).expect("replay source exhausted");
        self.position += 1;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiPair {
    pub xi: f64,
    pub xi_tilde: f64,
    /// Drawn from the common part; then `xi == xi_tilde`.
    pub coincident: bool,
}

/// Joint draw with `xi ~ F`, `xi_tilde ~ F~` and `P(coincident) = kappa`.
pub fn sample_xi_pair(decomp: &Decomposition, u: f64, u1: f64, u2: f64) -> XiPair {
    if u < decomp.kappa() {
        let x = decomp.quantile_phi(decomp.kappa() * u1);
        XiPair { xi: x, xi_tilde: x, coincident: true }
    } else {
        let level = decomp.kappa_bar() * u2;
        XiPair { xi: decomp.quantile_psi(level), xi_tilde: decomp.quantile_psi_tilde(level), coincident: false }
    }
}

/// One draw `F^-1(U)`; consumes exactly one uniform.
pub fn sample_lifetime<S: UniformSource>(spec: &DistributionSpec, stream: &mut S) -> f64 {
    spec.quantile_unchecked(stream.next_uniform())
}

/// Stationary `(age, residual)`: `residual ~ F~`, then `age ~ F_residual`.
/// Consumes two uniforms.
pub fn sample_stationary_pair<S: UniformSource>(decomp: &Decomposition, stream: &mut S) -> Result<(f64, f64)> {
    let spec = decomp.source();
    let residual = spec.equilibrium_quantile_with_mean(decomp.mean(), stream.next_uniform());
    let u = stream.next_uniform();
    Ok((age_given_residual(spec, residual, u)?, residual))
}

/// `F_rho^-1(u)`, with the measure-zero endpoint `F(rho) = 1` sent to 0.
pub(crate) fn age_given_residual(spec: &DistributionSpec, rho: f64, u: f64) -> Result<f64> {
    if spec.survival(rho) <= 0.0 {
        Ok(0.0)
    } else {
        spec.residual_quantile(rho, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;

    #[test]
    fn streams_replay_and_differ() {
        let a: Vec<f64> = {
            let mut s = UniformStream::new(7, 3);
            (0..5).map(|_| s.next_uniform()).collect()
        };
        let mut s = UniformStream::new(7, 3);
        let b: Vec<f64> = (0..5).map(|_| s.next_uniform()).collect();
        assert_eq!(a, b);
        assert_eq!(s.counter(), 5);
        let mut other = UniformStream::new(7, 4);
        assert_ne!(a[0], other.next_uniform());
        let mut purposed = UniformStream::for_purpose(7, 1, 3);
        assert_ne!(a[0], purposed.next_uniform());
        assert!(a.iter().all(|u| (0.0..1.0).contains(u)));
    }

    #[test]
    fn xi_pair_examples() {
        let d = decompose(&DistributionSpec::uniform(0.0, 1.0).unwrap()).unwrap();
        let p = sample_xi_pair(&d, 0.0, 0.3, 0.9);
        assert!(p.coincident && p.xi == p.xi_tilde);
        let p = sample_xi_pair(&d, 0.1, 0.5, 0.0);
        assert!(p.coincident);
        assert!((p.xi - 0.375).abs() < 1e-15);
        let p = sample_xi_pair(&d, 0.9, 0.0, 0.25);
        assert!(!p.coincident);
        assert!((p.xi - 0.75).abs() < 1e-12);
        assert!((p.xi_tilde - (1.0 - 0.75f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lifetime_examples() {
        let exp = DistributionSpec::exponential(1.0).unwrap();
        let mut src = ReplaySource::new(vec![0.5]);
        assert!((sample_lifetime(&exp, &mut src) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(src.consumed(), 1);
        let det = DistributionSpec::atom_mixture(None, 0.0, &[(2.0, 1.0)]).unwrap();
        assert_eq!(sample_lifetime(&det, &mut ReplaySource::new(vec![0.123])), 2.0);
    }

    #[test]
    fn stationary_pair_examples() {
        let exp = decompose(&DistributionSpec::exponential(1.0).unwrap()).unwrap();
        let (age, res) = sample_stationary_pair(&exp, &mut ReplaySource::new(vec![0.5, 0.5])).unwrap();
        assert!((age - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((res - std::f64::consts::LN_2).abs() < 1e-15);

        let lomax = decompose(&DistributionSpec::lomax(3.0, 1.0).unwrap()).unwrap();
        let (age, res) = sample_stationary_pair(&lomax, &mut ReplaySource::new(vec![0.5, 0.5])).unwrap();
        let root2 = 2.0f64.sqrt();
        assert!((res - (root2 - 1.0)).abs() < 1e-14);
        assert!((age - root2 * (2.0f64.cbrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn uniform_endpoint_gives_zero_age() {
        let spec = DistributionSpec::uniform(0.0, 1.0).unwrap();
        assert_eq!(age_given_residual(&spec, 1.0, 0.4).unwrap(), 0.0);
    }
}
