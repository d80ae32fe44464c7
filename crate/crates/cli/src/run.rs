//! The five subcommands. Each writes its files into the output directory
//! and returns the summary line.

use std::path::PathBuf;
use std::sync::Arc;

use fraclap::grid::{FnSource, RadialFunction, RadialGrid};
use fraclap::kernel::{apply_flap, eigen_pair_constant, newtonian_constant, riesz_constant};
use fraclap::potential::{riesz_potential, verify_envelopes};
use fraclap::solver::{
    admissible_theta, perron_solve, residual_checks_pass, solution_family, unit_source, FamilyInputs, SolveResult,
    SolverSetup,
};
use fraclap::weights::{make_coefficient_pair, validate_profile, CoefficientPair, CoefficientSpec, DecayProfile};

use crate::config::{RunConfig, SourceSpec};
use crate::error::{CliError, Result};
use crate::output::{csv, write, Summary};
use crate::plot::{line_plot, Series};

#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub plots: bool,
    pub jobs: usize,
}

impl RunContext {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn plot(&self, name: &str, svg: impl FnOnce() -> String) -> Result<()> {
        if self.plots {
            write(&self.path(name), &svg())?;
        }
        Ok(())
    }
}

fn prepare(cfg: &RunConfig, ctx: &RunContext) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::io(&ctx.out_dir, e))?;
    write(&ctx.path("config.toml"), &cfg.render(crate::config::Format::Toml)?)
}

fn finish(ctx: &RunContext, summary: Summary) -> Result<Summary> {
    write(&ctx.path("summary.txt"), &format!("{}\n", summary.line()))?;
    Ok(summary)
}

/// The weight after the Dini gate, plus its Dini integral.
fn gated_profile(cfg: &RunConfig) -> Result<(DecayProfile, f64)> {
    let omega = cfg.omega()?;
    let report = validate_profile(&omega);
    if !report.positive {
        return Err(CliError::Invalid {
            name: "profile",
            reason: "must be strictly positive".into(),
        });
    }
    if !report.monotone {
        return Err(fraclap::Error::NonMonotone(report.offending).into());
    }
    let dini = report.dini?;
    Ok((omega, dini))
}

fn make_source(cfg: &RunConfig, omega: &DecayProfile) -> FnSource {
    match cfg.source {
        SourceSpec::Weighted => unit_source(omega, cfg.tau),
        SourceSpec::ClosedFormPair => FnSource::eigen_source(cfg.n, cfg.alpha),
        SourceSpec::Bump { radius } => FnSource::bump(radius),
        SourceSpec::Zero => FnSource::new(|_| 0.0, cfg.n as f64 + cfg.alpha + 1.0),
    }
}

/// Graded grid whose tail extrapolation matches the expected decay of `w`.
fn source_grid(cfg: &RunConfig) -> Result<Arc<RadialGrid>> {
    let n = cfg.n as f64;
    let hint = match cfg.source {
        SourceSpec::Weighted => (cfg.tau.min(n) - cfg.alpha).max(1e-3),
        _ => n - cfg.alpha,
    };
    Ok(Arc::new(RadialGrid::graded(&cfg.grid, hint)?))
}

fn closed_form_ratio(cfg: &RunConfig, w: &RadialFunction) -> Vec<f64> {
    let q = cfg.n as f64 - cfg.alpha;
    w.grid()
        .nodes()
        .iter()
        .zip(w.values())
        .map(|(&r, &v)| v / (1.0 + r * r).powf(-q / 2.0))
        .collect()
}

fn variation(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo - 1.0
}

pub fn run_potential(cfg: &RunConfig, ctx: &RunContext) -> Result<Summary> {
    prepare(cfg, ctx)?;
    let omega = cfg.omega()?;
    let grid = source_grid(cfg)?;
    let w = riesz_potential(&make_source(cfg, &omega), &grid, cfg.n, cfg.alpha)?;
    let r = grid.nodes();
    let mut s = Summary::new("potential");
    s.text("source", format!("{:?}", cfg.source))
        .num("w_origin", w.values()[0])
        .num("w_r_max", *w.values().last().unwrap())
        .num("riesz_constant", riesz_constant(cfg.n, cfg.alpha)?);
    if let Some(c) = newtonian_constant(cfg.n) {
        s.num("newtonian_constant", c);
    }
    if cfg.source == SourceSpec::ClosedFormPair {
        let ratio = closed_form_ratio(cfg, &w);
        write(&ctx.path("potential.csv"), &csv(&["r", "w", "ratio"], &[r, w.values(), &ratio]))?;
        s.num("ratio_expected", eigen_pair_constant(cfg.n, cfg.alpha)?)
            .num("ratio_variation", variation(&ratio));
    } else {
        write(&ctx.path("potential.csv"), &csv(&["r", "w"], &[r, w.values()]))?;
    }
    ctx.plot("potential.svg", || {
        line_plot(
            "Riesz potential",
            "w",
            &[Series {
                label: "w".into(),
                x: r,
                y: w.values(),
            }],
            true,
        )
    })?;
    finish(ctx, s)
}

pub fn run_bounds(cfg: &RunConfig, ctx: &RunContext) -> Result<Summary> {
    prepare(cfg, ctx)?;
    let (omega, dini) = gated_profile(cfg)?;
    let grid = source_grid(cfg)?;
    let check = verify_envelopes(
        &make_source(cfg, &omega),
        &omega,
        cfg.n,
        cfg.alpha,
        cfg.tau,
        &grid,
        &cfg.envelope,
    )?;
    let (up, lo) = (&check.upper, &check.lower);
    let upper: Vec<f64> = up.bound_values.iter().map(|v| up.fitted_c * v).collect();
    let lower: Vec<f64> = lo.bound_values.iter().map(|v| lo.fitted_c * v).collect();
    write(
        &ctx.path("envelope.csv"),
        &csv(&["r", "w", "upper_shape", "lower_shape"], &[&up.radii, &up.w_values, &upper, &lower]),
    )?;
    ctx.plot("envelope.svg", || {
        line_plot(
            "Riesz potential against its envelopes",
            "w",
            &[
                Series {
                    label: "w".into(),
                    x: &up.radii,
                    y: &up.w_values,
                },
                Series {
                    label: "C_upper shape".into(),
                    x: &up.radii,
                    y: &upper,
                },
                Series {
                    label: "C_lower shape".into(),
                    x: &up.radii,
                    y: &lower,
                },
            ],
            true,
        )
    })?;
    let mut s = Summary::new("bounds");
    s.text("regime", up.regime)
        .num("fitted_slope", up.fitted_slope)
        .num("predicted_slope", up.predicted_slope)
        .num("C_upper", up.fitted_c)
        .num("C_lower", lo.fitted_c)
        .num("ratio_variation", up.ratio_variation)
        .num("dini", dini)
        .text("pass", check.pass());
    finish(ctx, s)
}

struct Solved {
    setup: SolverSetup,
    pair: fraclap::solver::OrderedPair,
    theta: f64,
    coeffs: CoefficientPair,
    result: SolveResult,
}

fn coefficient_spec(cfg: &RunConfig, theta: f64) -> CoefficientSpec {
    CoefficientSpec {
        theta,
        tau: cfg.tau,
        shape_k: cfg.shape_k.clone(),
        shape_big_k: cfg.shape_big_k.clone(),
        seed: cfg.seed,
    }
}

fn solve_one(cfg: &RunConfig, omega: &DecayProfile) -> Result<Solved> {
    let setup = SolverSetup::new(&cfg.grid, omega, cfg.tau, cfg.n, cfg.alpha)?;
    let pair = setup.pair(cfg.a, omega, cfg.tau, cfg.theta1_budget)?;
    let theta = match cfg.theta.fixed() {
        Some(t) => t,
        None => admissible_theta(&pair, omega, cfg.tau, cfg.p, &setup.operator)?,
    };
    let coeffs = make_coefficient_pair(&coefficient_spec(cfg, theta), omega, setup.grid(), cfg.alpha)?;
    let result = perron_solve(&pair, &coeffs, cfg.p, &setup.operator, &cfg.solve)?;
    Ok(Solved {
        setup,
        pair,
        theta,
        coeffs,
        result,
    })
}

fn solution_csv(pair: &fraclap::solver::OrderedPair, result: &SolveResult) -> String {
    csv(
        &["r", "u", "U_sub", "U_super", "residual"],
        &[
            pair.sub.grid().nodes(),
            result.u.values(),
            pair.sub.values(),
            pair.sup.values(),
            &result.residuals,
        ],
    )
}

fn solution_plot(title: &str, pair: &fraclap::solver::OrderedPair, result: &SolveResult) -> String {
    let r = pair.sub.grid().nodes();
    line_plot(
        title,
        "u",
        &[
            Series {
                label: "u".into(),
                x: r,
                y: result.u.values(),
            },
            Series {
                label: "U_a".into(),
                x: r,
                y: pair.sub.values(),
            },
            Series {
                label: "U^a".into(),
                x: r,
                y: pair.sup.values(),
            },
        ],
        false,
    )
}

pub fn run_solve(cfg: &RunConfig, ctx: &RunContext) -> Result<Summary> {
    prepare(cfg, ctx)?;
    let (omega, _) = gated_profile(cfg)?;
    let Solved {
        pair, theta, result, ..
    } = solve_one(cfg, &omega)?;
    write(&ctx.path("solution.csv"), &solution_csv(&pair, &result))?;
    ctx.plot("solution.svg", || solution_plot(&format!("a = {}", pair.a), &pair, &result))?;
    let mut s = Summary::new("solve");
    s.num("a", pair.a)
        .num("C_used", pair.c_used)
        .num("theta", theta)
        .text("iterations", result.iterations)
        .num("residual_inf", result.residual_inf)
        .num("limit_estimate", result.limit_estimate)
        .text("monotone_violations", result.monotone_violations);
    finish(ctx, s)
}

fn family_inputs(cfg: &RunConfig, omega: DecayProfile, theta: Option<f64>, jobs: usize) -> FamilyInputs {
    FamilyInputs {
        omega,
        tau: cfg.tau,
        p: cfg.p,
        theta1_budget: cfg.theta1_budget,
        theta,
        shape_k: cfg.shape_k.clone(),
        shape_big_k: cfg.shape_big_k.clone(),
        seed: cfg.seed,
        opts: cfg.solve,
        jobs,
    }
}

pub fn run_family(cfg: &RunConfig, ctx: &RunContext) -> Result<Summary> {
    prepare(cfg, ctx)?;
    let (omega, _) = gated_profile(cfg)?;
    let setup = SolverSetup::new(&cfg.grid, &omega, cfg.tau, cfg.n, cfg.alpha)?;
    let family = solution_family(
        &cfg.a_list,
        &family_inputs(cfg, omega, cfg.theta.fixed(), ctx.jobs),
        &setup,
    )?;
    for (i, m) in family.members.iter().enumerate() {
        write(&ctx.path(&format!("solution_{i}.csv")), &solution_csv(&m.pair, &m.result))?;
        ctx.plot(&format!("solution_{i}.svg"), || {
            solution_plot(&format!("a = {}", m.pair.a), &m.pair, &m.result)
        })?;
    }
    let column = |f: &dyn Fn(&fraclap::solver::FamilyMember) -> f64| -> Vec<f64> {
        family.members.iter().map(f).collect()
    };
    let mut s = Summary::new("family");
    s.num("theta", family.theta)
        .nums("a", &cfg.a_list)
        .nums("limit_estimate", &column(&|m| m.result.limit_estimate))
        .nums("residual_inf", &column(&|m| m.result.residual_inf))
        .nums("theta_admissible", &column(&|m| m.theta_admissible))
        .text(
            "iterations",
            family
                .members
                .iter()
                .map(|m| m.result.iterations.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .text(
            "monotone_violations",
            family.members.iter().map(|m| m.result.monotone_violations).sum::<usize>(),
        )
        .text("distinct", family.distinct)
        .text("positive", family.positive);
    finish(ctx, s)
}

/// One line of the verification report.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Runs every invariant check for the configured model.
pub fn verify_checks(cfg: &RunConfig, jobs: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let (omega, dini) = gated_profile(cfg)?;
    out.push(check("dini_gate", dini.is_finite() && dini > 0.0, format!("A={dini:.10e}")));

    let Solved {
        setup,
        pair,
        theta,
        coeffs,
        result,
    } = solve_one(cfg, &omega)?;
    let op = &setup.operator;
    let grid = setup.grid();

    let constant = apply_flap(op, &RadialFunction::constant(grid.clone(), 0.7))?.max_abs();
    out.push(check(
        "constants_annihilated",
        constant <= 1e-8 && op.couplings_nonnegative(),
        format!("max|L 0.7|={constant:.3e} couplings_nonnegative={}", op.couplings_nonnegative()),
    ));

    let eigen_cfg = RunConfig {
        source: SourceSpec::ClosedFormPair,
        ..cfg.clone()
    };
    let eigen_grid = source_grid(&eigen_cfg)?;
    let w = riesz_potential(&make_source(&eigen_cfg, &omega), &eigen_grid, cfg.n, cfg.alpha)?;
    let ratio = closed_form_ratio(&eigen_cfg, &w);
    let inner: Vec<f64> = eigen_grid.indices_in(0.0, 50.0).map(|i| ratio[i]).collect();
    let lambda = eigen_pair_constant(cfg.n, cfg.alpha)?;
    let spread = inner.iter().map(|v| (v / lambda - 1.0).abs()).fold(0.0, f64::max);
    out.push(check("closed_form_pair", spread <= 1e-3, format!("max|ratio/lambda-1|={spread:.3e}")));

    let env_grid = source_grid(&RunConfig {
        source: SourceSpec::Weighted,
        ..cfg.clone()
    })?;
    let env = verify_envelopes(
        &unit_source(&omega, cfg.tau),
        &omega,
        cfg.n,
        cfg.alpha,
        cfg.tau,
        &env_grid,
        &cfg.envelope,
    )?;
    out.push(check(
        "envelopes",
        env.pass(),
        format!(
            "regime={} slope={:.4} predicted={:.4} ratio_variation={:.4} C_lower={:.3e} C_upper={:.3e}",
            env.upper.regime,
            env.upper.fitted_slope,
            env.upper.predicted_slope,
            env.upper.ratio_variation,
            env.lower.fitted_c,
            env.upper.fitted_c
        ),
    ));

    let at_theta = residual_checks_pass(&pair, &omega, cfg.tau, cfg.p, op, theta)?;
    let at_ten = residual_checks_pass(&pair, &omega, cfg.tau, cfg.p, op, 10.0 * theta)?;
    out.push(check(
        "residual_checks",
        at_theta && !at_ten,
        format!("theta={theta:.6e} pass_at_theta={at_theta} pass_at_10theta={at_ten}"),
    ));

    let sandwiched = (0..grid.len()).all(|i| {
        let u = result.u.values()[i];
        pair.sub.values()[i] - 1e-8 <= u && u <= pair.sup.values()[i] + 1e-8
    });
    let converged = result.residual_inf <= 1e-6 * (1.0 + coeffs.big_k_sup());
    out.push(check(
        "perron_sandwich",
        sandwiched && converged && result.monotone_violations == 0,
        format!(
            "iterations={} residual_inf={:.3e} monotone_violations={} sandwiched={sandwiched}",
            result.iterations, result.residual_inf, result.monotone_violations
        ),
    ));

    let bound = 2.0 * pair.potential_at_r_max();
    let gap = (result.limit_estimate - cfg.a).abs();
    out.push(check(
        "limit_at_infinity",
        gap <= bound,
        format!("|lim-a|={gap:.3e} bound={bound:.3e}"),
    ));

    let zero = CoefficientPair::zero(grid, cfg.tau);
    let flat = perron_solve(&pair, &zero, cfg.p, op, &cfg.solve)?;
    let dev = flat.u.values().iter().map(|v| (v - cfg.a).abs()).fold(0.0, f64::max);
    out.push(check(
        "degenerate_constant",
        dev <= 1e-10 && flat.iterations <= 2,
        format!("max|u-a|={dev:.3e} iterations={}", flat.iterations),
    ));

    let family = solution_family(&cfg.a_list, &family_inputs(cfg, omega, None, jobs), &setup)?;
    out.push(check(
        "family",
        family.distinct && family.positive,
        format!(
            "theta={:.6e} distinct={} positive={}",
            family.theta, family.distinct, family.positive
        ),
    ));
    Ok(out)
}

pub fn run_verify(cfg: &RunConfig, ctx: &RunContext) -> Result<Summary> {
    prepare(cfg, ctx)?;
    let checks = verify_checks(cfg, ctx.jobs)?;
    let mut report = String::new();
    for c in &checks {
        report.push_str(&format!("check={} pass={} {}\n", c.name, c.pass, c.detail));
    }
    write(&ctx.path("verify.txt"), &report)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let mut s = Summary::new("verify");
    s.text("checks", checks.len())
        .text("failed", if failed.is_empty() { "none".into() } else { failed.join(",") })
        .text("pass", failed.is_empty());
    let s = finish(ctx, s)?;
    if failed.is_empty() {
        Ok(s)
    } else {
        Err(CliError::VerifyFailed(failed.join(", ")))
    }
}
