use optjam::{
    nonlinear_energy, worst_noise_search, DistributionModel, FamilyProjection, NoiseFamily,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn linear_bound(x: &DistributionModel, budget: f64) -> f64 {
    x.variance() * budget / (x.variance() + budget)
}

#[test]
fn gaussian_source_finds_gaussian_noise() {
    let x = DistributionModel::gaussian(1.0).unwrap();
    let r = worst_noise_search(&x, 1.0, 6, NoiseFamily::GaussianMixture(2)).unwrap();
    assert!(r.converged);
    assert!(r.objective < 1e-10, "{}", r.objective);
    assert!((r.mmse_attained - 0.5).abs() < 1e-4, "{}", r.mmse_attained);
    assert!((r.noise.variance() - 1.0).abs() < 1e-6);
}

#[test]
fn laplace_source_drives_nonlinear_energy_to_zero() {
    let x = DistributionModel::laplace(1.0).unwrap();
    let r = worst_noise_search(&x, 1.0, 6, NoiseFamily::GaussianMixture(3)).unwrap();
    assert!(r.objective < 1e-3, "{}", r.objective);
    assert!(r.mmse_attained <= linear_bound(&x, 1.0) + 1e-4);
    assert!((r.noise.variance() - 1.0).abs() < 1e-6);

    let proj = FamilyProjection::new(NoiseFamily::GaussianMixture(3), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let start = proj.start();
    for _ in 0..100 {
        let p: Vec<f64> = start
            .iter()
            .map(|s| {
                let n: f64 = StandardNormal.sample(&mut rng);
                s + 1.5 * n
            })
            .collect();
        let (noise, _) = proj.project(&p).unwrap();
        assert!(r.objective <= nonlinear_energy(&x, &noise, 6));
    }
}

#[test]
fn rademacher_source_regression_baseline() {
    let x = DistributionModel::rademacher(1.0).unwrap();
    let r = worst_noise_search(&x, 0.5, 6, NoiseFamily::GaussianMixture(3)).unwrap();
    assert!(r.converged);
    assert!(r.objective > 0.0);
    assert!(r.mmse_attained < linear_bound(&x, 0.5));
    assert!((r.objective - 0.046130948462553126).abs() < 1e-9, "{}", r.objective);
    assert!((r.mmse_attained - 0.01955033862872868).abs() < 1e-9, "{}", r.mmse_attained);
}

#[test]
fn gram_charlier_family_respects_budget() {
    let x = DistributionModel::laplace(1.0).unwrap();
    let r = worst_noise_search(&x, 1.0, 6, NoiseFamily::GramCharlier(6)).unwrap();
    assert!((r.noise.variance() - 1.0).abs() < 1e-6);
    assert!(r.noise.mean().abs() < 1e-9);
    assert!(r.mmse_attained <= linear_bound(&x, 1.0) + 1e-4);
    let gaussian = DistributionModel::gaussian(1.0).unwrap();
    assert!(r.objective <= nonlinear_energy(&x, &gaussian, 6));
}

#[test]
fn search_is_deterministic() {
    let x = DistributionModel::uniform(1.0).unwrap();
    let a = worst_noise_search(&x, 0.8, 4, NoiseFamily::GaussianMixture(2)).unwrap();
    let b = worst_noise_search(&x, 0.8, 4, NoiseFamily::GaussianMixture(2)).unwrap();
    assert_eq!(a, b);
}
