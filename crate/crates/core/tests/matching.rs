use optjam::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matched_variance_error(cfg: &JammingGameConfig) -> Option<f64> {
    let m = synthesize_jammer(cfg, &cfg.default_grid()).unwrap();
    m.is_matched()
        .then(|| (m.jammer_variance - cfg.power_jam).abs() / cfg.power_jam)
}

#[test]
fn matched_jammer_spends_exactly_its_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4d41);
    let mut matched = 0;
    for i in 0..20 {
        let cfg = if i < 10 {
            let sx = rng.random_range(0.5..2.0);
            let sn = rng.random_range(0.2..2.0);
            JammingGameConfig::new(
                DistributionModel::gaussian(sx).unwrap(),
                DistributionModel::gaussian(sn).unwrap(),
                rng.random_range(0.3..3.0),
                rng.random_range(0.3..3.0),
            )
            .unwrap()
        } else {
            let power_tx: f64 = rng.random_range(0.5..2.0);
            let noise = power_tx * rng.random_range(0.2..1.0);
            let beta = rng.random_range(2.0..4.0);
            let power_jam = beta * power_tx - noise;
            JammingGameConfig::new(
                DistributionModel::laplace(rng.random_range(0.5..2.0)).unwrap(),
                DistributionModel::laplace(noise).unwrap(),
                power_tx,
                power_jam,
            )
            .unwrap()
        };
        if let Some(err) = matched_variance_error(&cfg) {
            matched += 1;
            assert!(err < 1e-4, "config {i}: relative variance error {err}");
        }
    }
    assert_eq!(matched, 20);
}

#[test]
fn gaussian_matching_over_power_grid() {
    for power_tx in [0.5, 1.0, 2.0] {
        for power_jam in [0.5, 1.0, 2.0] {
            let g = DistributionModel::gaussian(1.0).unwrap();
            let cfg = JammingGameConfig::new(g.clone(), g, power_tx, power_jam).unwrap();
            let grid = cfg.default_grid();
            let m = synthesize_jammer(&cfg, &grid).unwrap();
            assert!(m.is_matched());
            let target = cf_of(&DistributionModel::gaussian(power_jam).unwrap(), &grid).unwrap();
            assert!(m.jammer_cf.sup_distance(&target).unwrap() < 1e-6);
        }
    }
}
