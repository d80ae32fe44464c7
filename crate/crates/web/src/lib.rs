//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! The `*_curve`/`operator_check` functions are plain Rust and return
//! `Result<_, String>`; the exported `js_*` wrappers turn errors into JS
//! exceptions.

use std::sync::Arc;

use fraclap::grid::{GridSpec, RadialFunction, RadialGrid};
use fraclap::kernel::{apply_flap, assemble_flap_matrix, eigen_pair_constant};
use fraclap::potential::{classify_regime, fit_decay_exponent, riesz_potential, Regime};
use fraclap::solver::{admissible_theta, perron_solve, unit_source, SolveOptions, SolverSetup};
use fraclap::weights::{make_coefficient_pair, CoefficientSpec, DecayProfile, Shape};
use wasm_bindgen::prelude::*;

const MAX_NODES: usize = 1024;

fn check_nodes(nodes: usize) -> Result<(), String> {
    if (32..=MAX_NODES).contains(&nodes) {
        Ok(())
    } else {
        Err(format!("nodes must lie in [32, {MAX_NODES}], got {nodes}"))
    }
}

/// Potential of `(1 + ln(1+s))^{-q} (1+s)^{-τ}` in three dimensions.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct PotentialCurve {
    r: Vec<f64>,
    w: Vec<f64>,
    regime: String,
    slope: f64,
}

#[wasm_bindgen]
impl PotentialCurve {
    #[wasm_bindgen(getter)]
    pub fn r(&self) -> Vec<f64> {
        self.r.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn w(&self) -> Vec<f64> {
        self.w.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn regime(&self) -> String {
        self.regime.clone()
    }

    /// Log-log slope of `w` over `[20, 200]` (clipped to the grid).
    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.slope
    }
}

pub fn potential_curve(alpha: f64, tau: f64, q: f64, nodes: usize, r_max: f64) -> Result<PotentialCurve, String> {
    check_nodes(nodes)?;
    let err = |e: fraclap::Error| e.to_string();
    let regime = classify_regime(tau, 3, alpha).map_err(err)?;
    let omega = DecayProfile::shifted_log_power(q);
    let hint = match regime {
        Regime::TauGreaterN => 3.0 - alpha,
        _ => (tau - alpha).max(1e-3),
    };
    let grid = Arc::new(RadialGrid::graded(&GridSpec::new(nodes, r_max), hint).map_err(err)?);
    let w = riesz_potential(&unit_source(&omega, tau), &grid, 3, alpha).map_err(err)?;
    let slope = fit_decay_exponent(&w, 20.0, 200.0f64.min(r_max)).unwrap_or(f64::NAN);
    Ok(PotentialCurve {
        r: grid.nodes().to_vec(),
        w: w.values().to_vec(),
        regime: regime.to_string(),
        slope,
    })
}

/// `u` between `U_a` and `U^a` for random coefficients at the admissible θ.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SolveCurve {
    r: Vec<f64>,
    u: Vec<f64>,
    sub: Vec<f64>,
    sup: Vec<f64>,
    theta: f64,
    iterations: usize,
    limit: f64,
}

#[wasm_bindgen]
impl SolveCurve {
    #[wasm_bindgen(getter)]
    pub fn r(&self) -> Vec<f64> {
        self.r.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sub(&self) -> Vec<f64> {
        self.sub.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sup(&self) -> Vec<f64> {
        self.sup.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    #[wasm_bindgen(getter)]
    pub fn limit(&self) -> f64 {
        self.limit
    }
}

pub fn solve_curve(a: f64, p: f64, tau: f64, seed: u64, nodes: usize) -> Result<SolveCurve, String> {
    check_nodes(nodes)?;
    let err = |e: fraclap::Error| e.to_string();
    let omega = DecayProfile::shifted_log_power(2.0);
    let setup = SolverSetup::new(&GridSpec::new(nodes, 128.0), &omega, tau, 3, 1.0).map_err(err)?;
    let pair = setup.pair(a, &omega, tau, 1.0).map_err(err)?;
    let theta = admissible_theta(&pair, &omega, tau, p, &setup.operator).map_err(err)?;
    let spec = CoefficientSpec {
        theta,
        tau,
        shape_k: Shape::RandomTrig {
            terms: 4,
            offset: 0.5,
            scale: 0.5,
        },
        shape_big_k: Shape::RandomTrig {
            terms: 4,
            offset: 0.0,
            scale: 1.0,
        },
        seed,
    };
    let coeffs = make_coefficient_pair(&spec, &omega, setup.grid(), 1.0).map_err(err)?;
    let res = perron_solve(&pair, &coeffs, p, &setup.operator, &SolveOptions::default()).map_err(err)?;
    Ok(SolveCurve {
        r: setup.grid().nodes().to_vec(),
        u: res.u.values().to_vec(),
        sub: pair.sub.values().to_vec(),
        sup: pair.sup.values().to_vec(),
        theta,
        iterations: res.iterations,
        limit: res.limit_estimate,
    })
}

/// Discrete operator applied to `(1+r²)^{-(n-α)/2}`, divided by
/// `λ (1+r²)^{-(n+α)/2}`; exact answer 1.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct OperatorCheck {
    r: Vec<f64>,
    ratio: Vec<f64>,
    lambda: f64,
    max_error: f64,
    constant_residual: f64,
}

#[wasm_bindgen]
impl OperatorCheck {
    #[wasm_bindgen(getter)]
    pub fn r(&self) -> Vec<f64> {
        self.r.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ratio(&self) -> Vec<f64> {
        self.ratio.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Max of `|ratio - 1|` over `r ≤ 50`.
    #[wasm_bindgen(getter)]
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    /// `max |L 1|`, zero up to rounding.
    #[wasm_bindgen(getter)]
    pub fn constant_residual(&self) -> f64 {
        self.constant_residual
    }
}

pub fn operator_check(n: usize, alpha: f64, nodes: usize) -> Result<OperatorCheck, String> {
    check_nodes(nodes)?;
    let err = |e: fraclap::Error| e.to_string();
    let q = n as f64 - alpha;
    let lambda = eigen_pair_constant(n, alpha).map_err(err)?;
    let grid = Arc::new(RadialGrid::graded(&GridSpec::new(nodes, 128.0), q).map_err(err)?);
    let op = assemble_flap_matrix(&grid, n, alpha).map_err(err)?;
    let u = RadialFunction::from_fn(grid.clone(), |r| (1.0 + r * r).powf(-q / 2.0), 0.0, q).map_err(err)?;
    let lu = apply_flap(&op, &u).map_err(err)?;
    let ratio: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(lu.values())
        .map(|(&r, &v)| lambda * v / (1.0 + r * r).powf(-(n as f64 + alpha) / 2.0))
        .collect();
    let max_error = grid
        .indices_in(0.0, 50.0)
        .map(|i| (ratio[i] - 1.0).abs())
        .fold(0.0, f64::max);
    let one = RadialFunction::constant(grid.clone(), 1.0);
    let constant_residual = apply_flap(&op, &one).map_err(err)?.max_abs();
    Ok(OperatorCheck {
        r: grid.nodes().to_vec(),
        ratio,
        lambda,
        max_error,
        constant_residual,
    })
}

#[wasm_bindgen(js_name = potentialCurve)]
pub fn js_potential_curve(alpha: f64, tau: f64, q: f64, nodes: usize, r_max: f64) -> Result<PotentialCurve, JsError> {
    potential_curve(alpha, tau, q, nodes, r_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = solveCurve)]
pub fn js_solve_curve(a: f64, p: f64, tau: f64, seed: u32, nodes: usize) -> Result<SolveCurve, JsError> {
    solve_curve(a, p, tau, seed as u64, nodes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = operatorCheck)]
pub fn js_operator_check(n: usize, alpha: f64, nodes: usize) -> Result<OperatorCheck, JsError> {
    operator_check(n, alpha, nodes).map_err(|e| JsError::new(&e))
}
