use optjam::{
    build_basis, build_basis_for_pair, expansion_coeffs, mmse_via_expansion, moment_coeffs,
    DistributionModel, GridSpec, MixtureComponent,
};
use proptest::prelude::*;

fn gaussian(v: f64) -> DistributionModel {
    DistributionModel::gaussian(v).unwrap()
}

#[test]
fn mixed_output_basis_is_orthonormal_by_direct_quadrature() {
    let x = DistributionModel::laplace(1.0).unwrap();
    let z = DistributionModel::mixture(vec![
        MixtureComponent { weight: 0.5, mean: -0.6, variance: 0.4 },
        MixtureComponent { weight: 0.5, mean: 0.6, variance: 0.4 },
    ])
    .unwrap();
    // degree-12 integrands against exponential tails need a wider window than the default
    let grid = GridSpec::new(64.0, 8192).unwrap();
    let basis = build_basis_for_pair(&x, &z, 6, &grid).unwrap();
    assert!(basis.gram_residual < 1e-6);
    let Some(DistributionModel::Tabulated(f)) = &basis.measure else {
        panic!("expected a tabulated output law");
    };
    let us = grid.xs();
    let mut worst: f64 = 0.0;
    for k in 0..=6 {
        for m in 0..=6 {
            let ip: f64 = us
                .iter()
                .zip(&f.values)
                .map(|(&u, &w)| basis.eval(k, u) * basis.eval(m, u) * w * grid.dx())
                .sum();
            worst = worst.max((ip - if k == m { 1.0 } else { 0.0 }).abs());
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn leading_coefficients_positive_and_first_polynomial_standardized() {
    let u = DistributionModel::laplace(2.0).unwrap();
    let b = build_basis(&u, 6).unwrap();
    for (m, row) in b.poly_coeffs.iter().enumerate() {
        assert_eq!(row.len(), m + 1);
        assert!(row[m] > 0.0);
    }
    assert!((b.poly_coeffs[1][1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert!(b.poly_coeffs[1][0].abs() < 1e-15);
}

#[test]
fn uniform_source_gaps_shrink_with_order() {
    let x = DistributionModel::uniform(1.0).unwrap();
    let gaps: Vec<f64> = [2, 4, 6]
        .iter()
        .map(|&m| mmse_via_expansion(&x, &gaussian(1.0), m).unwrap().1)
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn laplace_source_order_six_gap() {
    let x = DistributionModel::laplace(1.0).unwrap();
    let (_, gap) = mmse_via_expansion(&x, &gaussian(1.0), 6).unwrap();
    assert!(gap < 1e-3, "{gap}");
}

#[test]
fn matched_pairs_have_no_nonlinear_terms() {
    let l = DistributionModel::laplace(1.0).unwrap();
    for (x, z) in [(gaussian(2.0), gaussian(1.0)), (l.clone(), l)] {
        let c = moment_coeffs(&x, &z, 8).unwrap();
        assert!(c.c.iter().skip(2).all(|v| v.abs() < 1e-5), "{:?}", c.c);
    }
}

#[test]
fn quadrature_coefficients_through_pair_basis() {
    let x = DistributionModel::laplace(1.0).unwrap();
    let z = gaussian(0.5);
    let grid = GridSpec::covering(&[&x, &z]);
    let basis = build_basis_for_pair(&x, &z, 5, &grid).unwrap();
    let quad = expansion_coeffs(&x, &z, &basis).unwrap();
    let exact = moment_coeffs(&x, &z, 5).unwrap();
    for (a, b) in quad.c.iter().zip(&exact.c) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
    assert!((quad.c[1] - (1.0f64 / 1.5).sqrt()).abs() < 1e-8);
}

fn law() -> impl Strategy<Value = DistributionModel> {
    (0usize..3, 0.3f64..2.0).prop_map(|(f, v)| match f {
        0 => DistributionModel::gaussian(v).unwrap(),
        1 => DistributionModel::laplace(v).unwrap(),
        _ => DistributionModel::uniform(v).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn captured_energy_is_bounded_and_monotone(x in law(), z in law()) {
        let mut previous = 0.0;
        for order in 1..=7 {
            let c = moment_coeffs(&x, &z, order).unwrap();
            let captured: f64 = c.c.iter().map(|v| v * v).sum();
            prop_assert!(c.c[0].abs() < 1e-8);
            prop_assert!(captured <= x.variance() * (1.0 + 1e-9));
            prop_assert!(captured >= previous - 1e-10);
            prop_assert!(c.mmse_poly >= 0.0 && c.mmse_poly <= x.variance());
            previous = captured;
        }
    }

    #[test]
    fn first_coefficient_is_fixed_by_variances(x in law(), z in law()) {
        let c = moment_coeffs(&x, &z, 3).unwrap();
        let (sx, sz) = (x.variance(), z.variance());
        prop_assert!((c.c[1] - (sx * sx / (sx + sz)).sqrt()).abs() < 1e-9);
    }
}
