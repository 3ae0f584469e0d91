use renewal_coupling::decomposition::decompose;
use renewal_coupling::distributions::DistributionSpec;
use renewal_coupling::quadrature::integrate_to_infinity;
use renewal_coupling::regenerative::{simulate_regenerative, BuiltinKernel};
use renewal_coupling::sampling::{sample_stationary_pair, UniformSource, UniformStream};
use renewal_coupling::stats::{ks_one_sample, ks_two_sample};

const SEED: u64 = 77_001;

fn families() -> Vec<(&'static str, DistributionSpec)> {
    vec![
        ("exponential", DistributionSpec::exponential(1.7).unwrap()),
        ("uniform", DistributionSpec::uniform(0.5, 2.0).unwrap()),
        ("lomax", DistributionSpec::lomax(3.5, 1.0).unwrap()),
        (
            "mixture",
            DistributionSpec::weighted_mixture(vec![
                (0.3, DistributionSpec::uniform(0.0, 1.0).unwrap()),
                (0.7, DistributionSpec::exponential(0.5).unwrap()),
            ])
            .unwrap(),
        ),
    ]
}

#[test]
fn quantile_transform_matches_cdf() {
    for (i, (name, spec)) in families().into_iter().enumerate() {
        let mut stream = UniformStream::new(SEED, i as u64);
        let xs: Vec<f64> = (0..100_000).map(|_| spec.quantile(stream.next_uniform()).unwrap()).collect();
        let p = ks_one_sample(&xs, |s| spec.cdf(s)).p_value;
        assert!(p > 0.01, "{name}: p = {p}");
        let ys: Vec<f64> = (0..100_000).map(|_| spec.equilibrium_quantile(stream.next_uniform()).unwrap()).collect();
        let p = ks_one_sample(&ys, |s| spec.equilibrium_cdf(s).unwrap()).p_value;
        assert!(p > 0.01, "{name} equilibrium: p = {p}");
    }
}

#[test]
fn mean_is_integrated_survival() {
    for (name, spec) in families() {
        let q = integrate_to_infinity(|s| 1.0 - spec.cdf(s), 0.0, 1e-13, 1e-12);
        let m = spec.moment(1.0).unwrap().value;
        assert!((m - q.value).abs() < 1e-8 * m, "{name}: {m} vs {}", q.value);
    }
    let atoms = DistributionSpec::atom_mixture(None, 0.0, &[(1.0, 0.25), (3.0, 0.75)]).unwrap();
    assert!((atoms.moment(1.0).unwrap().value - 2.5).abs() < 1e-14);
}

#[test]
fn equilibrium_density_integrates_to_one() {
    for (name, spec) in families() {
        let q = integrate_to_infinity(|s| spec.equilibrium_density(s).unwrap(), 0.0, 1e-13, 1e-12);
        assert!((q.value - 1.0).abs() < 1e-8, "{name}: {}", q.value);
    }
}

#[test]
fn kappa_matches_brute_force_trapezoid() {
    for (name, spec) in families() {
        let d = decompose(&spec).unwrap();
        let mu = spec.moment(1.0).unwrap().value;
        let n = 2_000_000;
        let top = 80.0;
        let h = top / n as f64;
        let g = |s: f64| spec.ac_density(s).min((1.0 - spec.cdf(s)) / mu);
        let mut sum = 0.5 * (g(0.0) + g(top));
        for i in 1..n {
            sum += g(i as f64 * h);
        }
        let brute = sum * h;
        // density jumps cost O(h) in the trapezoid rule
        assert!((d.kappa() - brute).abs() < 5e-5, "{name}: {} vs {brute}", d.kappa());
    }
}

#[test]
fn noise_kernel_reaches_the_convolved_stationary_law() {
    let spec = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let d = decompose(&spec).unwrap();
    let kernel = BuiltinKernel::UniformNoise { width: 1.0 };

    // two-stage oracle: equilibrium age by inversion of 1 - (1 - s)^2, plus independent noise
    let mut oracle_stream = UniformStream::new(SEED, 1000);
    let oracle: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let age = 1.0 - (1.0 - oracle_stream.next_uniform()).sqrt();
            age + oracle_stream.next_uniform()
        })
        .collect();

    let mut stream = UniformStream::new(SEED, 1001);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| {
            let (age, _) = sample_stationary_pair(&d, &mut stream).unwrap();
            simulate_regenerative(&spec, &kernel, age, 30.0, &mut stream).unwrap()
        })
        .collect();
    let p = ks_two_sample(&xs, &oracle).p_value;
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn stationary_start_stays_stationary() {
    let spec = DistributionSpec::lomax(3.5, 1.0).unwrap();
    let d = decompose(&spec).unwrap();
    let mut stream = UniformStream::new(SEED, 2000);
    for t in [0.0, 2.0] {
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let (age, _) = sample_stationary_pair(&d, &mut stream).unwrap();
                simulate_regenerative(&spec, &BuiltinKernel::Identity, age, t, &mut stream).unwrap()
            })
            .collect();
        let p = ks_one_sample(&xs, |s| spec.equilibrium_cdf(s).unwrap()).p_value;
        assert!(p > 0.01, "t = {t}: p = {p}");
    }
}

#[test]
fn psi_moment_of_uniform() {
    let d = decompose(&DistributionSpec::uniform(0.0, 1.0).unwrap()).unwrap();
    // Psi has density 1 - 2(1 - s) on [1/2, 1]: mass 1/4, first moment 5/24
    assert!((d.psi_moment(1.0) - (5.0 / 24.0) / 0.25).abs() < 1e-10);
    assert!((d.psi_mass() - 0.25).abs() < 1e-12);
}
