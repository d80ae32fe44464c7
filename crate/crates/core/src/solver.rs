//! Sub/supersolutions `U_a = a - I_α[g_C]`, `U^a = a + I_α[g_C]` with
//! `g_C = C ω(s) (1+s)^{-τ}`, their residual checks, and the monotone
//! iteration between them.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FnSource, GridSpec, RadialFunction, RadialGrid};
use crate::kernel::{apply_flap, assemble_flap_matrix, NonlocalOperator};
use crate::potential::riesz_potential;
use crate::weights::{envelope, make_coefficient_pair, CoefficientPair, CoefficientSpec, DecayProfile, Shape};

/// `g_1(s) = ω(s) (1+s)^{-τ}`.
pub fn unit_source(omega: &DecayProfile, tau: f64) -> FnSource {
    let w = omega.clone();
    FnSource::new(move |s| w.eval(s) * (1.0 + s).powf(-tau), tau).with_breakpoints(omega.breakpoints())
}

/// `I_α[g_1]` on the grid.
pub fn unit_potential(
    omega: &DecayProfile,
    tau: f64,
    grid: &Arc<RadialGrid>,
    n: usize,
    alpha: f64,
) -> Result<RadialFunction> {
    if !(tau >= alpha) {
        return Err(Error::BadTau { tau, alpha });
    }
    riesz_potential(&unit_source(omega, tau), grid, n, alpha)
}

/// Local decay power of `w` near `R_max`, from the log-log slope over
/// `[R_max/4, R_max]`. A better far-field exponent for the operator than the
/// asymptotic one when `ω` still varies at `R_max`.
pub fn local_tail_power(w: &RadialFunction) -> f64 {
    let big_r = w.grid().r_max();
    let idx: Vec<usize> = w.grid().indices_in(big_r / 4.0, big_r).collect();
    let r: Vec<f64> = idx.iter().map(|&i| w.grid().nodes()[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| w.values()[i] - w.limit_at_infinity()).collect();
    match crate::potential::fit_log_slope(&r, &v) {
        Ok(s) if s < 0.0 && r.len() >= 3 => -s,
        _ => w.tail_power(),
    }
}

/// Far-field exponent to hand to the operator for the potential `w1` of a
/// `(1+s)^{-τ}`-weighted source: the fitted local power when `τ ≤ n`, where
/// `ω` still shapes the tail at `R_max`, and the mass-dominated `n - α` otherwise.
pub fn operator_tail_hint(w1: &RadialFunction, tau: f64, n: usize, alpha: f64) -> f64 {
    if tau > n as f64 {
        n as f64 - alpha
    } else {
        local_tail_power(w1)
    }
}

/// Operator and `I_α[g_1]` shared by every solve with the same `(ω, τ)`.
#[derive(Debug, Clone)]
pub struct SolverSetup {
    pub operator: NonlocalOperator,
    pub unit_potential: RadialFunction,
}

impl SolverSetup {
    /// Graded grid, `I_α[g_1]` on it and the operator, whose far-field
    /// exponent comes from [`operator_tail_hint`].
    pub fn new(spec: &GridSpec, omega: &DecayProfile, tau: f64, n: usize, alpha: f64) -> Result<Self> {
        let coarse_hint = tau.min(n as f64) - alpha;
        let grid = Arc::new(RadialGrid::graded(spec, coarse_hint.max(1e-3))?);
        let unit_potential = unit_potential(omega, tau, &grid, n, alpha)?;
        let hint = operator_tail_hint(&unit_potential, tau, n, alpha);
        let operator = assemble_flap_matrix(&Arc::new(grid.with_tail_hint(hint)?), n, alpha)?;
        Ok(SolverSetup {
            operator,
            unit_potential,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.operator.grid()
    }

    pub fn pair(&self, a: f64, omega: &DecayProfile, tau: f64, theta1_budget: f64) -> Result<OrderedPair> {
        OrderedPair::from_unit_potential(a, &self.unit_potential, omega, tau, theta1_budget)
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid("a", format!("{a} must lie in (0, 1)")));
    }
    Ok(())
}

/// Largest `C ≤ budget` with `sup C·w1 ≤ cap`.
fn fit_constant(w1: &RadialFunction, budget: f64, cap: f64) -> Result<f64> {
    if !(budget > 0.0) {
        return Err(Error::invalid("theta1_budget", format!("{budget} must be positive")));
    }
    let sup = w1.values().iter().copied().fold(0.0, f64::max);
    let c = if sup > 0.0 { budget.min(cap / sup) } else { budget };
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::CannotFitBudget);
    }
    Ok(c)
}

pub fn build_subsolution(
    a: f64,
    omega: &DecayProfile,
    tau: f64,
    theta1_budget: f64,
    grid: &Arc<RadialGrid>,
    n: usize,
    alpha: f64,
) -> Result<(RadialFunction, f64)> {
    check_a(a)?;
    let w1 = unit_potential(omega, tau, grid, n, alpha)?;
    let c = fit_constant(&w1, theta1_budget, a / 2.0)?;
    Ok((w1.scaled(-c).shifted(a), c))
}

pub fn build_supersolution(
    a: f64,
    omega: &DecayProfile,
    tau: f64,
    theta1_budget: f64,
    grid: &Arc<RadialGrid>,
    n: usize,
    alpha: f64,
) -> Result<(RadialFunction, f64)> {
    check_a(a)?;
    let w1 = unit_potential(omega, tau, grid, n, alpha)?;
    let c = fit_constant(&w1, theta1_budget, a.min(1.0 - a) / 2.0)?;
    Ok((w1.scaled(c).shifted(a), c))
}

#[derive(Debug, Clone)]
pub struct OrderedPair {
    pub sub: RadialFunction,
    pub sup: RadialFunction,
    pub a: f64,
    pub c_used: f64,
    pub theta1: f64,
    /// `I_α[g_1]`, so that `U^a - U_a = 2 C_used · unit_potential`.
    pub unit_potential: RadialFunction,
    /// `g_1` at the nodes.
    pub unit_source: Vec<f64>,
}

impl OrderedPair {
    /// Builds the pair from a precomputed `I_α[g_1]`, with the common `C`
    /// capped so that `sup C·I_α[g_1] ≤ min(a, 1-a)/2`.
    pub fn from_unit_potential(
        a: f64,
        w1: &RadialFunction,
        omega: &DecayProfile,
        tau: f64,
        theta1_budget: f64,
    ) -> Result<Self> {
        check_a(a)?;
        let c = fit_constant(w1, theta1_budget, a.min(1.0 - a) / 2.0)?;
        let unit_source = w1
            .grid()
            .nodes()
            .iter()
            .map(|&r| envelope(1.0, tau, omega, r))
            .collect();
        let pair = OrderedPair {
            sub: w1.scaled(-c).shifted(a),
            sup: w1.scaled(c).shifted(a),
            a,
            c_used: c,
            theta1: theta1_budget,
            unit_potential: w1.clone(),
            unit_source,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sub.grid().same_nodes(self.sup.grid()) {
            return Err(Error::GridMismatch);
        }
        for (i, (l, u)) in self.sub.values().iter().zip(self.sup.values()).enumerate() {
            if !(*l > 0.0 && l <= u && *u < 1.0) {
                return Err(Error::NotOrdered { node: i });
            }
        }
        if self.sub.limit_at_infinity() != self.sup.limit_at_infinity() {
            return Err(Error::NotOrdered {
                node: self.sub.values().len(),
            });
        }
        Ok(())
    }

    /// `sup_r C·I_α[g_1](r)`.
    pub fn sup_potential(&self) -> f64 {
        self.c_used * self.unit_potential.values().iter().copied().fold(0.0, f64::max)
    }

    /// `C·I_α[g_1](R_max)`.
    pub fn potential_at_r_max(&self) -> f64 {
        self.c_used * self.unit_potential.values().last().copied().unwrap_or(0.0)
    }
}

pub fn build_pair(
    a: f64,
    omega: &DecayProfile,
    tau: f64,
    theta1_budget: f64,
    grid: &Arc<RadialGrid>,
    n: usize,
    alpha: f64,
) -> Result<OrderedPair> {
    let w1 = unit_potential(omega, tau, grid, n, alpha)?;
    OrderedPair::from_unit_potential(a, &w1, omega, tau, theta1_budget)
}

/// `u^p` for `u ∈ (0,1)`, as `exp(p ln max(u, 1e-14))`.
pub fn pow_clamped(u: f64, p: f64) -> f64 {
    (p * u.max(1e-14).ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Sub,
    Super,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub side: Side,
    /// `d = (-Δ)^{α/2}U + kU - KU^p` at every node.
    pub residuals: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `1e-8 + 1e-6·‖terms‖_∞`.
pub fn residual_tolerance(terms_norm: f64) -> f64 {
    1e-8 + 1e-6 * terms_norm
}

fn residual_parts(
    u: &RadialFunction,
    coeffs: &CoefficientPair,
    p: f64,
    op: &NonlocalOperator,
) -> Result<(Vec<f64>, f64)> {
    if !u.grid().same_nodes(coeffs.k.grid()) {
        return Err(Error::GridMismatch);
    }
    let lu = apply_flap(op, u)?;
    let mut norm = 0.0f64;
    let d = (0..u.values().len())
        .map(|i| {
            let v = u.values()[i];
            let a = lu.values()[i];
            let b = coeffs.k.values()[i] * v;
            let c = coeffs.big_k.values()[i] * pow_clamped(v, p);
            norm = norm.max(a.abs()).max(b.abs()).max(c.abs());
            a + b - c
        })
        .collect();
    Ok((d, norm))
}

fn report(side: Side, residuals: Vec<f64>, norm: f64) -> ResidualReport {
    let max = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = residual_tolerance(norm);
    let pass = match side {
        Side::Sub => max <= tol,
        Side::Super => min >= -tol,
    };
    ResidualReport {
        side,
        residuals,
        max,
        min,
        tol,
        pass,
    }
}

/// Passes iff `max d ≤ tol`.
pub fn check_subsolution(
    u: &RadialFunction,
    coeffs: &CoefficientPair,
    p: f64,
    op: &NonlocalOperator,
) -> Result<ResidualReport> {
    let (d, norm) = residual_parts(u, coeffs, p, op)?;
    Ok(report(Side::Sub, d, norm))
}

/// Passes iff `min d ≥ -tol`.
pub fn check_supersolution(
    u: &RadialFunction,
    coeffs: &CoefficientPair,
    p: f64,
    op: &NonlocalOperator,
) -> Result<ResidualReport> {
    let (d, norm) = residual_parts(u, coeffs, p, op)?;
    Ok(report(Side::Super, d, norm))
}

/// The four corner coefficient pairs `k ∈ {0, env}`, `K ∈ {-env, env}`.
pub fn extremal_specs(theta: f64, tau: f64) -> Vec<CoefficientSpec> {
    let mut out = Vec::new();
    for k in [0.0, 1.0] {
        for big_k in [-1.0, 1.0] {
            out.push(CoefficientSpec {
                theta,
                tau,
                shape_k: Shape::constant(k),
                shape_big_k: Shape::constant(big_k),
                seed: 0,
            });
        }
    }
    out
}

/// Whether both residual checks hold at every envelope-extremal
/// coefficient pair of amplitude `theta`.
pub fn residual_checks_pass(
    pair: &OrderedPair,
    omega: &DecayProfile,
    tau: f64,
    p: f64,
    op: &NonlocalOperator,
    theta: f64,
) -> Result<bool> {
    let grid = pair.sub.grid();
    for spec in extremal_specs(theta, tau) {
        let c = make_coefficient_pair(&spec, omega, grid, op.order_alpha())?;
        if !check_subsolution(&pair.sub, &c, p, op)?.pass {
            return Ok(false);
        }
        if !check_supersolution(&pair.sup, &c, p, op)?.pass {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest dyadic `θ = 2^j` for which the residual checks pass for every
/// `0 ≤ k ≤ env`, `|K| ≤ env` (the residuals are affine in `k` and `K`, so
/// the four corners suffice).
pub fn admissible_theta(
    pair: &OrderedPair,
    omega: &DecayProfile,
    tau: f64,
    p: f64,
    op: &NonlocalOperator,
) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::invalid("p", format!("{p} must exceed 1")));
    }
    let lsub = apply_flap(op, &pair.sub)?;
    let lsup = apply_flap(op, &pair.sup)?;
    let nodes = pair.sub.grid().nodes();
    let env: Vec<f64> = nodes.iter().map(|&r| envelope(1.0, tau, omega, r)).collect();
    // worst corners: k = env, K = -env for the sub; k = 0, K = env for the super
    let passes = |theta: f64| {
        let mut sub_max = f64::NEG_INFINITY;
        let mut sub_norm = 0.0f64;
        let mut sup_min = f64::INFINITY;
        let mut sup_norm = 0.0f64;
        #[allow(clippy::needless_range_loop)]
        for i in 0..nodes.len() {
            let e = theta * env[i];
            let (u, v) = (pair.sub.values()[i], pair.sup.values()[i]);
            let (up, vp) = (pow_clamped(u, p), pow_clamped(v, p));
            sub_max = sub_max.max(lsub.values()[i] + e * u + e * up);
            sub_norm = sub_norm.max(lsub.values()[i].abs()).max(e * u).max(e * up);
            sup_min = sup_min.min(lsup.values()[i] - e * vp);
            sup_norm = sup_norm.max(lsup.values()[i].abs()).max(e * v).max(e * vp);
        }
        (
            sub_max <= residual_tolerance(sub_norm) && sup_min >= -residual_tolerance(sup_norm),
            sub_max.max(-sup_min),
        )
    };
    let (ok0, worst0) = passes(0.0);
    if !ok0 {
        return Err(Error::NoAdmissibleTheta { residual: worst0 });
    }
    let mut j = (pair.c_used.log2().ceil() as i32 + 8).min(60);
    while j > -200 {
        let theta = 2f64.powi(j);
        if passes(theta).0 {
            return Ok(theta);
        }
        j -= 1;
    }
    Err(Error::NoAdmissibleTheta { residual: worst0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Start from `U^a` and iterate downwards instead.
    pub from_super: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iter: 200,
            tol: 1e-11,
            from_super: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: RadialFunction,
    pub iterations: usize,
    pub residual_inf: f64,
    pub residuals: Vec<f64>,
    pub limit_estimate: f64,
    pub monotone_violations: usize,
    pub last_update: f64,
}

/// Monotone iteration `(L + k + m) u_{m+1} = K u_m^p + m u_m` with the far
/// field pinned to `a`, starting from `U_a` (or `U^a`).
///
/// The shift is nodewise, `m_i = max(0, -p K_i) (U^a_i)^{p-1}`, the smallest
/// making the right-hand side nondecreasing in `u` on `[U_a, U^a]`.
pub fn perron_solve(
    pair: &OrderedPair,
    coeffs: &CoefficientPair,
    p: f64,
    op: &NonlocalOperator,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    pair.validate()?;
    if !op.grid().same_nodes(pair.sub.grid()) || !op.grid().same_nodes(coeffs.k.grid()) {
        return Err(Error::GridMismatch);
    }
    if !(p > 1.0) {
        return Err(Error::invalid("p", format!("{p} must exceed 1")));
    }
    let size = pair.sub.values().len();
    let k = coeffs.k.values();
    let big_k = coeffs.big_k.values();
    let shift: Vec<f64> = (0..size)
        .map(|i| (-p * big_k[i]).max(0.0) * pow_clamped(pair.sup.values()[i], p - 1.0))
        .collect();
    let mut a_mat: DMatrix<f64> = op.matrix().clone();
    for i in 0..size {
        a_mat[(i, i)] += k[i] + shift[i];
    }
    let lu = a_mat.clone().lu();
    let far: Vec<f64> = op.far_field().iter().map(|f| f * pair.a).collect();
    let solve = |rhs: &DVector<f64>| -> Result<DVector<f64>> {
        let x = lu
            .solve(rhs)
            .ok_or_else(|| Error::LinearSolveFailure("singular shifted operator".into()))?;
        // one step of iterative refinement
        let r = rhs - &a_mat * &x;
        let dx = lu
            .solve(&r)
            .ok_or_else(|| Error::LinearSolveFailure("singular shifted operator".into()))?;
        let x = x + dx;
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::LinearSolveFailure("non-finite iterate".into()))
        }
    };

    let start = if opts.from_super { &pair.sup } else { &pair.sub };
    let mut u: Vec<f64> = start.values().to_vec();
    let mut violations = 0;
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let rhs = DVector::from_fn(size, |i, _| {
            big_k[i] * pow_clamped(u[i], p) + shift[i] * u[i] + far[i]
        });
        let next = solve(&rhs)?;
        iterations += 1;
        let mut update = 0.0f64;
        for i in 0..size {
            let step = next[i] - u[i];
            update = update.max(step.abs());
            let wrong_way = if opts.from_super {
                step > opts.tol
            } else {
                step < -opts.tol
            };
            if wrong_way {
                violations += 1;
            }
            u[i] = next[i];
        }
        last_update = update;
        if update <= opts.tol {
            break;
        }
    }
    if last_update > opts.tol {
        return Err(Error::NoConvergence {
            iterations,
            last_update,
        });
    }
    let sol = RadialFunction::new(
        pair.sub.grid().clone(),
        u,
        pair.a,
        pair.sub.tail_power(),
    )?;
    let (residuals, _) = residual_parts(&sol, coeffs, p, op)?;
    let residual_inf = residuals.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let limit_estimate = limit_at_infinity(&sol)?;
    Ok(SolveResult {
        u: sol,
        iterations,
        residual_inf,
        residuals,
        limit_estimate,
        monotone_violations: violations,
        last_update,
    })
}

/// Extrapolates `u(R/4), u(R/2), u(R)` to `r → ∞` assuming
/// `u ≈ L + c r^{-q}`. Falls back to `u(R)` when the increments do not
/// shrink geometrically.
pub fn limit_at_infinity(u: &RadialFunction) -> Result<f64> {
    let big_r = u.grid().r_max();
    let (u1, u2, u4) = (u.eval(big_r), u.eval(big_r / 2.0), u.eval(big_r / 4.0));
    let last = u1 - u2;
    let previous = u2 - u4;
    if last.abs() > 10.0 * previous.abs() {
        return Err(Error::TailNotSettled { last, previous });
    }
    if last == 0.0 {
        return Ok(u1);
    }
    let ratio = last / previous;
    if ratio > 0.0 && ratio < 1.0 {
        Ok(u1 + last * ratio / (1.0 - ratio))
    } else {
        Ok(u1)
    }
}

/// Inputs shared by every member of a family.
#[derive(Debug, Clone)]
pub struct FamilyInputs {
    pub omega: DecayProfile,
    pub tau: f64,
    pub p: f64,
    pub theta1_budget: f64,
    /// Fixed `θ`; `None` uses the minimum of [`admissible_theta`] over the family.
    pub theta: Option<f64>,
    pub shape_k: Shape,
    pub shape_big_k: Shape,
    pub seed: u64,
    pub opts: SolveOptions,
    /// Members solved concurrently.
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub pair: OrderedPair,
    pub theta_admissible: f64,
    pub result: SolveResult,
}

#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub theta: f64,
    pub coefficients: CoefficientPair,
    pub members: Vec<FamilyMember>,
    /// `|L_i - L_j| ≥ |a_i - a_j| / 2` for all pairs.
    pub distinct: bool,
    /// `min u > 0` for every member.
    pub positive: bool,
}

/// Solves for every `a` in `a_list` under one shared `θ`.
pub fn solution_family(a_list: &[f64], inputs: &FamilyInputs, setup: &SolverSetup) -> Result<FamilyReport> {
    if a_list.is_empty() {
        return Err(Error::invalid("a_list", "must not be empty"));
    }
    for (i, a) in a_list.iter().enumerate() {
        check_a(*a)?;
        if a_list[..i].contains(a) {
            return Err(Error::invalid("a_list", format!("{a} appears twice")));
        }
    }
    let op = &setup.operator;
    let grid = op.grid();
    let pairs = a_list
        .iter()
        .map(|&a| setup.pair(a, &inputs.omega, inputs.tau, inputs.theta1_budget))
        .collect::<Result<Vec<_>>>()?;
    let thetas = pairs
        .iter()
        .map(|pair| admissible_theta(pair, &inputs.omega, inputs.tau, inputs.p, op))
        .collect::<Result<Vec<_>>>()?;
    let theta = inputs
        .theta
        .unwrap_or_else(|| thetas.iter().copied().fold(f64::INFINITY, f64::min));
    let spec = CoefficientSpec {
        theta,
        tau: inputs.tau,
        shape_k: inputs.shape_k.clone(),
        shape_big_k: inputs.shape_big_k.clone(),
        seed: inputs.seed,
    };
    let coefficients = make_coefficient_pair(&spec, &inputs.omega, grid, op.order_alpha())?;
    let results = run_concurrently(pairs.len(), inputs.jobs, |i| {
        perron_solve(&pairs[i], &coefficients, inputs.p, op, &inputs.opts)
    });
    let mut members = Vec::with_capacity(pairs.len());
    for ((pair, theta_admissible), result) in pairs.into_iter().zip(thetas).zip(results) {
        members.push(FamilyMember {
            pair,
            theta_admissible,
            result: result?,
        });
    }
    let mut distinct = true;
    for i in 0..members.len() {
        for j in 0..i {
            let dl = (members[i].result.limit_estimate - members[j].result.limit_estimate).abs();
            let da = (members[i].pair.a - members[j].pair.a).abs();
            distinct &= dl >= 0.5 * da;
        }
    }
    let positive = members
        .iter()
        .all(|m| m.result.u.values().iter().all(|&v| v > 0.0));
    Ok(FamilyReport {
        theta,
        coefficients,
        members,
        distinct,
        positive,
    })
}

/// Runs `f(0..count)` on at most `jobs` threads, keeping the output order.
fn run_concurrently<T: Send>(count: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.max(1).min(count.max(1));
    if jobs == 1 {
        return (0..count).map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let collected = std::sync::Mutex::new(Vec::with_capacity(count));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let v = f(i);
                collected.lock().expect("worker panicked").push((i, v));
            });
        }
    });
    for (i, v) in collected.into_inner().expect("worker panicked") {
        slots[i] = Some(v);
    }
    slots.into_iter().map(|v| v.expect("every index ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::from_nodes((0..=64).map(|i| i as f64 * 2.0).collect(), 1.0).unwrap())
    }

    #[test]
    fn limit_of_constant_is_exact() {
        let u = RadialFunction::constant(grid(), 0.4);
        assert_eq!(limit_at_infinity(&u).unwrap(), 0.4);
    }

    #[test]
    fn limit_of_inverse_power_is_extrapolated() {
        let g = Arc::new(RadialGrid::graded(&GridSpec::new(128, 128.0), 1.0).unwrap());
        let u = RadialFunction::from_fn(g, |r| 0.5 - 1.0 / r.max(1.0), 0.5, 1.0).unwrap();
        assert_relative_eq!(limit_at_infinity(&u).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unsettled_tail_is_reported() {
        let g = grid();
        let u = RadialFunction::from_fn(g, |r| if r > 100.0 { r } else { 0.0 }, 0.0, 1.0).unwrap();
        assert!(matches!(limit_at_infinity(&u), Err(Error::TailNotSettled { .. })));
    }

    #[test]
    fn clamped_power() {
        assert_relative_eq!(pow_clamped(-1e-20, 2.0), 1e-28, max_relative = 1e-12);
        assert_relative_eq!(pow_clamped(0.5, 3.0), 0.125, max_relative = 1e-15);
    }

    #[test]
    fn concurrent_runner_keeps_order() {
        let v = run_concurrently(10, 3, |i| i * i);
        assert_eq!(v, (0..10).map(|i| i * i).collect::<Vec<_>>());
    }
}
