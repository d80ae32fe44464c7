#![allow(clippy::excessive_precision)]

use std::sync::Arc;

use approx::assert_relative_eq;
use fraclap::grid::{FnSource, GridSpec, RadialFunction, RadialGrid};
use fraclap::kernel::*;
use fraclap::potential::riesz_potential;
use fraclap::Error;
use proptest::prelude::*;

fn grid(nodes: usize, r_max: f64, hint: f64) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::graded(&GridSpec::new(nodes, r_max), hint).unwrap())
}

// 30-digit reference values of the Gamma-ratio constants.
#[test]
fn frozen_constants() {
    assert_relative_eq!(riesz_constant(3, 2.0).unwrap(), 1.0 / (4.0 * std::f64::consts::PI), max_relative = 1e-14);
    assert_relative_eq!(newtonian_constant(3).unwrap(), riesz_constant(3, 2.0).unwrap(), max_relative = 1e-14);
    assert_relative_eq!(riesz_constant(3, 0.5).unwrap(), 0.0317468179671204848928816524673, max_relative = 1e-13);
    assert_relative_eq!(riesz_constant(3, 1.5).unwrap(), 0.0634936359342409697857633049346, max_relative = 1e-13);
    assert_relative_eq!(riesz_constant(1, 0.5).unwrap(), 0.398942280401432677939946059934, max_relative = 1e-13);
    assert_relative_eq!(flap_constant(1, 1.0).unwrap(), 1.0 / std::f64::consts::PI, max_relative = 1e-14);
    assert_relative_eq!(flap_constant(3, 0.5).unwrap(), 0.047620226950680727339322478701, max_relative = 1e-13);
    assert_relative_eq!(flap_constant(3, 1.5).unwrap(), 0.119050567376701818348306196752, max_relative = 1e-13);
    assert_relative_eq!(eigen_pair_constant(3, 1.0).unwrap(), 0.5, max_relative = 1e-13);
    assert_relative_eq!(eigen_pair_constant(3, 1.5).unwrap(), 0.382391037988899996291056001596, max_relative = 1e-13);
    assert_relative_eq!(eigen_pair_constant(1, 0.5).unwrap(), 2.09209924010620329790432425685, max_relative = 1e-13);
    assert!(flap_constant(3, 0.5).unwrap() > 0.0);
    assert!(matches!(riesz_constant(3, 3.0), Err(Error::BadOrder { .. })));
    assert!(matches!(flap_constant(3, 2.0), Err(Error::BadOrder { .. })));
}

/// Mean of `|r e1 - s θ|^{-β}` over a Fibonacci lattice on the sphere.
fn fibonacci_sphere_mean(beta: f64, r: f64, s: f64, points: usize) -> f64 {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut sum = 0.0;
    for k in 0..points {
        let z = 1.0 - (2.0 * k as f64 + 1.0) / points as f64;
        let rho = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        let (x, y) = (rho * phi.cos(), rho * phi.sin());
        let d2 = (r - s * z).powi(2) + (s * x).powi(2) + (s * y).powi(2);
        sum += d2.powf(-beta / 2.0);
    }
    sum / points as f64
}

#[test]
fn angular_kernel_against_sphere_quadrature() {
    let closed = angular_kernel(3, 1.0, 1.0, 0.5).unwrap();
    // shell theorem: the mean of 1/|x - y| over a sphere inside |x| is 1/|x|
    assert_relative_eq!(closed, 1.0, max_relative = 1e-10);
    assert_relative_eq!(closed, fibonacci_sphere_mean(1.0, 1.0, 0.5, 200_000), max_relative = 1e-5);
    let b = angular_kernel(3, 1.5, 1.0, 0.5).unwrap();
    assert_relative_eq!(b, 1.0352761804100830493955953505, max_relative = 1e-10);
    assert_relative_eq!(b, fibonacci_sphere_mean(1.5, 1.0, 0.5, 200_000), max_relative = 1e-5);
    assert_relative_eq!(angular_kernel(3, 0.0, 2.0, 7.0).unwrap(), 1.0, max_relative = 1e-14);
    assert_relative_eq!(angular_kernel(1, 1.0, 2.0, 1.0).unwrap(), 2.0 / 3.0, max_relative = 1e-14);
    assert!(matches!(angular_kernel(3, 3.0, 1.0, 1.0), Err(Error::SingularDiagonal)));
}

#[test]
fn constants_are_annihilated_with_nonnegative_couplings() {
    let g = grid(256, 128.0, 1.0);
    for n in [1, 3] {
        for alpha in [0.3, 1.0, 1.8] {
            let op = assemble_flap_matrix(&g, n, alpha).unwrap();
            assert!(op.couplings_nonnegative());
            let u = RadialFunction::constant(g.clone(), 0.7);
            let out = apply_flap(&op, &u).unwrap();
            assert!(out.max_abs() <= 1e-8, "n={n} alpha={alpha}: {}", out.max_abs());
        }
    }
}

#[test]
fn eigen_pair_ratio_is_constant() {
    for (n, alpha) in [(3usize, 1.0), (3, 1.5), (1, 0.5)] {
        let q = n as f64 - alpha;
        let g = grid(512, 128.0, q);
        let op = assemble_flap_matrix(&g, n, alpha).unwrap();
        let u = RadialFunction::from_fn(g.clone(), |r| (1.0 + r * r).powf(-q / 2.0), 0.0, q).unwrap();
        let lu = apply_flap(&op, &u).unwrap();
        let lambda = eigen_pair_constant(n, alpha).unwrap();
        for i in g.indices_in(0.0, 50.0) {
            let r = g.nodes()[i];
            let ratio = lu.values()[i] / (1.0 + r * r).powf(-(n as f64 + alpha) / 2.0);
            assert_relative_eq!(ratio * lambda, 1.0, max_relative = 1e-3);
        }
    }
}

fn inverse_identity_error(nodes: usize, alpha: f64) -> f64 {
    let g = grid(nodes, 128.0, 3.0 - alpha);
    let w = riesz_potential(&FnSource::bump(2.0), &g, 3, alpha).unwrap();
    let op = assemble_flap_matrix(&g, 3, alpha).unwrap();
    let lw = apply_flap(&op, &w).unwrap();
    let bump = FnSource::bump(2.0);
    g.indices_in(0.0, 64.0)
        .map(|i| (lw.values()[i] - fraclap::grid::RadialSource::value(&bump, g.nodes()[i])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn inverse_identity_converges() {
    let coarse = inverse_identity_error(256, 1.0);
    let fine = inverse_identity_error(512, 1.0);
    assert!(fine <= 1e-3, "error {fine}");
    assert!(fine <= coarse / 2.0, "{coarse} -> {fine}");
}

#[test]
fn classical_limit_on_a_gaussian() {
    let alpha = 1.99;
    let g = grid(512, 64.0, 3.0);
    let op = assemble_flap_matrix(&g, 3, alpha).unwrap();
    let u = RadialFunction::from_fn(g.clone(), |r| (-r * r).exp(), 0.0, 8.0).unwrap();
    let lu = apply_flap(&op, &u).unwrap();
    let scale = 6.0;
    for i in g.indices_in(0.0, 3.0) {
        let r = g.nodes()[i];
        let laplace = (6.0 - 4.0 * r * r) * (-r * r).exp();
        assert!((lu.values()[i] - laplace).abs() <= 0.05 * scale, "r={r}: {} vs {laplace}", lu.values()[i]);
    }
}

#[test]
fn linearity_and_grid_mismatch() {
    let g = grid(128, 64.0, 1.0);
    let op = assemble_flap_matrix(&g, 3, 0.8).unwrap();
    let u = RadialFunction::from_fn(g.clone(), |r| 1.0 / (1.0 + r), 0.0, 1.0).unwrap();
    let v = RadialFunction::from_fn(g.clone(), |r| (-r).exp() + 0.2, 0.2, 1.0).unwrap();
    let lhs = apply_flap(&op, &u.combine(2.0, &v, -3.0).unwrap()).unwrap();
    let (lu, lv) = (apply_flap(&op, &u).unwrap(), apply_flap(&op, &v).unwrap());
    for i in 0..g.len() {
        let rhs = 2.0 * lu.values()[i] - 3.0 * lv.values()[i];
        assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }
    let other = grid(256, 64.0, 1.0);
    let w = RadialFunction::constant(other, 1.0);
    assert_eq!(apply_flap(&op, &w).unwrap_err(), Error::GridMismatch);
}

fn random_grid(h0: f64, ratios: &[f64]) -> RadialGrid {
    let mut nodes = vec![0.0];
    let mut h = h0;
    for rho in ratios {
        nodes.push(nodes.last().unwrap() + h);
        h *= rho;
    }
    RadialGrid::from_nodes(nodes, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_valid_grids_give_nonnegative_couplings(
        h0 in 0.05f64..0.5,
        ratios in prop::collection::vec(1.0f64..1.1, 40..60),
        alpha in 0.1f64..1.9,
        three in any::<bool>(),
    ) {
        let g = Arc::new(random_grid(h0, &ratios));
        let n = if three { 3 } else { 1 };
        match assemble_flap_matrix(&g, n, alpha) {
            Ok(op) => prop_assert!(op.couplings_nonnegative()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn comparison_principle_on_ordered_pairs(
        u in prop::collection::vec(-1.0f64..1.0, 200),
        gap in prop::collection::vec(0.0f64..1.0, 200),
        touch in 0usize..1000,
        limit_gap in 0.0f64..0.5,
        alpha in 0.2f64..1.8,
    ) {
        let g = grid(64, 50.0, 1.0);
        let size = g.len();
        let (u, touch) = (&u[..size], touch % size);
        let op = assemble_flap_matrix(&g, 3, alpha).unwrap();
        let mut v: Vec<f64> = u.iter().zip(&gap[..size]).map(|(a, b)| a + b).collect();
        v[touch] = u[touch];
        let lu = op.apply_values(u, 0.0);
        let lv = op.apply_values(&v, limit_gap);
        prop_assert!(lu[touch] >= lv[touch] - 1e-12 * (1.0 + lu[touch].abs()));
    }
}
