use optjam::{
    cf_of, density_from_cf, mmse_estimator, noise_from_estimator, DistributionModel, GridSpec,
};

fn recovers_matching_law(x: DistributionModel) {
    let grid = GridSpec::covering(&[&x, &x]);
    let r = noise_from_estimator(&x, &[0.0, 0.5], &grid).unwrap();
    assert!(r.verdict.is_valid(), "{:?}", r.verdict);
    let d = r.noise_cf.sup_distance(&cf_of(&x, &grid).unwrap()).unwrap();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn gaussian_source_half_gain_recovers_gaussian_noise() {
    recovers_matching_law(DistributionModel::gaussian(1.0).unwrap());
}

#[test]
fn laplace_source_half_gain_recovers_laplace_noise() {
    recovers_matching_law(DistributionModel::laplace(1.0).unwrap());
}

#[test]
fn recovered_noise_reproduces_the_estimator() {
    let x = DistributionModel::laplace(1.0).unwrap();
    let gain = 0.4;
    let grid = GridSpec::new(48.0, 4096).unwrap();
    let r = noise_from_estimator(&x, &[0.0, gain], &grid).unwrap();
    assert!(r.verdict.is_valid());
    let z = DistributionModel::tabulated(density_from_cf(&r.noise_cf).unwrap().normalized()).unwrap();
    let curve = mmse_estimator(&x, &z, &grid).unwrap();
    let l2: f64 = grid
        .xs()
        .iter()
        .zip(&curve.values)
        .zip(&curve.output_density)
        .map(|((u, h), f)| (h - gain * u).powi(2) * f * grid.dx())
        .sum::<f64>()
        .sqrt();
    assert!(l2 < 1e-3, "{l2}");
}

#[test]
fn zero_estimator_has_no_noise_law() {
    for x in [
        DistributionModel::gaussian(1.0).unwrap(),
        DistributionModel::uniform(1.0).unwrap(),
    ] {
        let grid = GridSpec::covering(&[&x]);
        let r = noise_from_estimator(&x, &[0.0, 0.0], &grid).unwrap();
        assert!(!r.verdict.is_valid());
    }
}
