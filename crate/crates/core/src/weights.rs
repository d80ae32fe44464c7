//! Monotone decay weights `ω`, the Dini integral `∫_1^∞ ω(r)/r dr`, the
//! coefficient envelope `θ ω(r) (1+r)^{-τ}` and admissible pairs `(k, K)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::quadrature::{self, Tolerance};

type SharedFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied weight; equality compares names only.
#[derive(Clone)]
pub struct CustomProfile {
    pub name: String,
    f: SharedFn,
}

impl CustomProfile {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomProfile {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl std::fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CustomProfile({})", self.name)
    }
}

impl PartialEq for CustomProfile {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileKind {
    /// `r^{-eps}`
    Power { eps: f64 },
    /// `(1 + ln r)^{-q}`
    LogPower { q: f64 },
    /// `(1 + ln(1 + r))^{-q}`
    ShiftedLogPower { q: f64 },
    /// Log-log interpolation of `(r_i, omega_i)`, extended by the tail model
    /// fitted to the last decade of samples.
    Table { r: Vec<f64>, omega: Vec<f64> },
    #[serde(skip)]
    Custom(CustomProfile),
}

/// Asymptotic model of `ω` used for extrapolation and the Dini gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `c r^{-eps}`
    Power { c: f64, eps: f64 },
    /// `c (ln r)^{-q}`
    LogPower { c: f64, q: f64 },
}

/// Smallest power decay accepted as Dini-integrable.
pub const MIN_POWER_DECAY: f64 = 0.01;
/// Smallest logarithmic exponent accepted as Dini-integrable.
pub const MIN_LOG_EXPONENT: f64 = 1.02;
/// Upper end of the direct quadrature for the Dini integral.
pub const R_QUAD: f64 = 1e8;

impl TailModel {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            TailModel::Power { c, eps } => c * r.powf(-eps),
            TailModel::LogPower { c, q } => c * r.ln().powf(-q),
        }
    }

    pub fn converges(&self) -> bool {
        match *self {
            TailModel::Power { eps, .. } => eps > MIN_POWER_DECAY,
            TailModel::LogPower { q, .. } => q > MIN_LOG_EXPONENT,
        }
    }

    /// `∫_r^∞ model(s)/s ds` for a convergent model.
    fn tail_integral(&self, r: f64) -> f64 {
        match *self {
            TailModel::Power { c, eps } => c * r.powf(-eps) / eps,
            TailModel::LogPower { c, q } => c * r.ln().powf(1.0 - q) / (q - 1.0),
        }
    }

    /// Least-squares fits of `ln ω` against `ln r` and against `ln ln r`;
    /// keeps the one with the smaller residual.
    pub fn fit(r: &[f64], omega: &[f64]) -> Result<TailModel> {
        if r.len() < 3 {
            return Err(Error::InsufficientNodes {
                found: r.len(),
                needed: 3,
            });
        }
        if let Some(i) = omega.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::NonPositiveProfile(r[i]));
        }
        let y: Vec<f64> = omega.iter().map(|w| w.ln()).collect();
        let lx: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        let (b_pow, a_pow, rss_pow) = least_squares(&lx, &y);
        let power = TailModel::Power {
            c: a_pow.exp(),
            eps: -b_pow,
        };
        if r[0] <= std::f64::consts::E {
            return Ok(power);
        }
        let llx: Vec<f64> = lx.iter().map(|x| x.ln()).collect();
        let (b_log, a_log, rss_log) = least_squares(&llx, &y);
        if rss_log < rss_pow {
            Ok(TailModel::LogPower {
                c: a_log.exp(),
                q: -b_log,
            })
        } else {
            Ok(power)
        }
    }
}

/// Slope, intercept and residual sum of squares of `y ≈ a + b x`.
pub(crate) fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (b, a, rss)
}

/// The weight `ω` together with the floor below which it is held constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    #[serde(flatten)]
    pub kind: ProfileKind,
    #[serde(default = "default_floor")]
    pub domain_floor: f64,
}

fn default_floor() -> f64 {
    1.0
}

impl DecayProfile {
    pub fn new(kind: ProfileKind, domain_floor: f64) -> Result<Self> {
        if !(domain_floor.is_finite() && domain_floor > 0.0) {
            return Err(Error::invalid("domain_floor", format!("{domain_floor} must be positive")));
        }
        if let ProfileKind::Table { r, omega } = &kind {
            if r.len() != omega.len() || r.len() < 3 {
                return Err(Error::invalid(
                    "table",
                    "needs at least three (r, omega) rows of equal length",
                ));
            }
            if r.windows(2).any(|w| !(w[1] > w[0])) || !(r[0] > 0.0) {
                return Err(Error::invalid("table", "r must be positive and strictly increasing"));
            }
        }
        Ok(DecayProfile { kind, domain_floor })
    }

    pub fn power(eps: f64) -> Self {
        DecayProfile {
            kind: ProfileKind::Power { eps },
            domain_floor: 1.0,
        }
    }

    pub fn log_power(q: f64) -> Self {
        DecayProfile {
            kind: ProfileKind::LogPower { q },
            domain_floor: 1.0,
        }
    }

    pub fn shifted_log_power(q: f64) -> Self {
        DecayProfile {
            kind: ProfileKind::ShiftedLogPower { q },
            domain_floor: 1.0,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        floor: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DecayProfile {
            kind: ProfileKind::Custom(CustomProfile::new(name, f)),
            domain_floor: floor,
        }
    }

    /// Reads a two-column `r,omega` CSV with a header line.
    pub fn from_csv(text: &str, domain_floor: Option<f64>) -> Result<Self> {
        let mut r = Vec::new();
        let mut omega = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let parse = |p: Option<&str>| -> Result<f64> {
                p.and_then(|s| s.parse().ok()).ok_or_else(|| {
                    Error::invalid("table", format!("line {} is not `r,omega`", lineno + 1))
                })
            };
            r.push(parse(parts.next())?);
            omega.push(parse(parts.next())?);
        }
        let floor = domain_floor.unwrap_or_else(|| r.first().copied().unwrap_or(1.0));
        DecayProfile::new(ProfileKind::Table { r, omega }, floor)
    }

    /// The same weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            ProfileKind::Table { r, omega } => ProfileKind::Table {
                r: r.clone(),
                omega: omega.iter().map(|w| c * w).collect(),
            },
            _ => {
                let base = self.clone();
                ProfileKind::Custom(CustomProfile::new(
                    format!("{c}*{}", self.name()),
                    move |r| c * base.eval(r),
                ))
            }
        };
        DecayProfile {
            kind,
            domain_floor: self.domain_floor,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ProfileKind::Power { eps } => format!("power(eps={eps})"),
            ProfileKind::LogPower { q } => format!("log_power(q={q})"),
            ProfileKind::ShiftedLogPower { q } => format!("shifted_log_power(q={q})"),
            ProfileKind::Table { r, .. } => format!("table({} rows)", r.len()),
            ProfileKind::Custom(c) => c.name.clone(),
        }
    }

    /// `ω(r)`, with `ω(r) = ω(domain_floor)` below the floor.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.max(self.domain_floor);
        match &self.kind {
            ProfileKind::Power { eps } => r.powf(-eps),
            ProfileKind::LogPower { q } => (1.0 + r.ln()).powf(-q),
            ProfileKind::ShiftedLogPower { q } => (1.0 + r.ln_1p()).powf(-q),
            ProfileKind::Table { r: rs, omega } => table_eval(rs, omega, r),
            ProfileKind::Custom(c) => (c.f)(r),
        }
    }

    /// `ω(e^t)`, without overflowing `e^t` for the closed-form kinds.
    pub fn eval_log(&self, t: f64) -> f64 {
        if t <= self.domain_floor.ln() {
            return self.eval(self.domain_floor);
        }
        match &self.kind {
            ProfileKind::Power { eps } => (-eps * t).exp(),
            ProfileKind::LogPower { q } => (1.0 + t).powf(-q),
            ProfileKind::ShiftedLogPower { q } => (1.0 + t + (-t).exp().ln_1p()).powf(-q),
            _ => self.eval(t.exp()),
        }
    }

    /// Radii where `ω` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.domain_floor];
        if let ProfileKind::Table { r, .. } = &self.kind {
            b.extend(r.iter().copied().filter(|&x| x > self.domain_floor));
        }
        b
    }

    /// Fits the tail model on `[r_end/10, r_end]`.
    pub fn tail_model(&self) -> Result<TailModel> {
        match &self.kind {
            ProfileKind::Table { r, omega } => {
                let last = *r.last().expect("validated table");
                let mut start = r.partition_point(|&x| x < last / 10.0);
                start = start.min(r.len().saturating_sub(3));
                TailModel::fit(&r[start..], &omega[start..])
            }
            _ => {
                let rs: Vec<f64> = (0..=50)
                    .map(|k| R_QUAD / 10f64.powf(1.0 - k as f64 / 50.0))
                    .collect();
                let ws: Vec<f64> = rs.iter().map(|&r| self.eval(r)).collect();
                TailModel::fit(&rs, &ws)
            }
        }
    }
}

fn table_eval(rs: &[f64], omega: &[f64], r: f64) -> f64 {
    let last = rs.len() - 1;
    if r <= rs[0] {
        return omega[0];
    }
    if r >= rs[last] {
        let start = rs.partition_point(|&x| x < rs[last] / 10.0).min(last.saturating_sub(2));
        return match TailModel::fit(&rs[start..], &omega[start..]) {
            Ok(m) => m.eval(r) * omega[last] / m.eval(rs[last]),
            Err(_) => omega[last],
        };
    }
    let i = rs.partition_point(|&x| x <= r) - 1;
    if omega[i] > 0.0 && omega[i + 1] > 0.0 {
        // log-log interpolation keeps tabulated power laws exact
        let t = (r / rs[i]).ln() / (rs[i + 1] / rs[i]).ln();
        omega[i] * (omega[i + 1] / omega[i]).powf(t)
    } else {
        let t = (r - rs[i]) / (rs[i + 1] - rs[i]);
        omega[i] + t * (omega[i + 1] - omega[i])
    }
}

/// Points used for the monotonicity and positivity checks.
fn sample_radii(profile: &DecayProfile) -> Vec<f64> {
    if let ProfileKind::Table { r, .. } = &profile.kind {
        return r.clone();
    }
    let lo = profile.domain_floor.min(1.0);
    let hi = R_QUAD;
    let count = 400;
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

fn monotonicity_violations(r: &[f64], w: &[f64]) -> Vec<(usize, usize)> {
    let _ = r;
    w.windows(2)
        .enumerate()
        .filter(|(_, p)| p[1] > p[0] * (1.0 + 1e-12))
        .map(|(i, _)| (i, i + 1))
        .collect()
}

/// The Dini integral `A` with the pieces it was assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiniIntegral {
    pub value: f64,
    pub tail_model: TailModel,
    /// `|A(R_QUAD) - A(2 R_QUAD)| / A`.
    pub consistency: f64,
}

/// `∫_1^∞ ω(r)/r dr`, computed as `∫_0^∞ ω(e^t) dt`.
pub fn dini_integral(profile: &DecayProfile) -> Result<f64> {
    dini_integral_detailed(profile).map(|d| d.value)
}

pub fn dini_integral_detailed(profile: &DecayProfile) -> Result<DiniIntegral> {
    let radii = sample_radii(profile);
    let values: Vec<f64> = radii.iter().map(|&r| profile.eval(r)).collect();
    if let Some(i) = values.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::NonPositiveProfile(radii[i]));
    }
    let bad = monotonicity_violations(&radii, &values);
    if !bad.is_empty() {
        return Err(Error::NonMonotone(bad));
    }
    let model = profile.tail_model()?;
    if !model.converges() {
        let what = match model {
            TailModel::Power { eps, .. } => format!("tail fits r^-{eps:.4}"),
            TailModel::LogPower { q, .. } => format!("tail fits (ln r)^-{q:.4}"),
        };
        return Err(Error::DiniDivergent(what));
    }
    let a1 = dini_up_to(profile, &model, R_QUAD)?;
    let a2 = dini_up_to(profile, &model, 2.0 * R_QUAD)?;
    Ok(DiniIntegral {
        value: a1,
        tail_model: model,
        consistency: (a1 - a2).abs() / a1.abs().max(f64::MIN_POSITIVE),
    })
}

/// Quadrature on `[1, r_quad]` plus the remainder beyond it.
fn dini_up_to(profile: &DecayProfile, model: &TailModel, r_quad: f64) -> Result<f64> {
    let g = |t: f64| profile.eval_log(t);
    let tol = Tolerance {
        abs: 1e-16,
        rel: 1e-13,
        max_intervals: 20000,
    };
    let t_end = r_quad.ln();
    let mut cuts: Vec<f64> = profile
        .breakpoints()
        .into_iter()
        .filter(|&b| b > 1.0 && b < r_quad)
        .map(f64::ln)
        .collect();
    cuts.push(0.0);
    cuts.push(t_end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut body = 0.0;
    for w in cuts.windows(2) {
        let piece = quadrature::adaptive(g, w[0], w[1], tol);
        if piece.error > 1e-9 * piece.value.abs().max(1e-300) {
            return Err(Error::QuadratureFailure {
                estimate: piece.value,
                error: piece.error,
            });
        }
        body += piece.value;
    }
    let tail = match &profile.kind {
        ProfileKind::Power { eps } => r_quad.powf(-eps) / eps,
        ProfileKind::LogPower { q } => (1.0 + r_quad.ln()).powf(1.0 - q) / (q - 1.0),
        ProfileKind::Table { r, omega } if r_quad >= *r.last().unwrap() => {
            let last = *r.last().unwrap();
            model.tail_integral(r_quad) * omega[r.len() - 1] / model.eval(last)
        }
        ProfileKind::Table { .. } | ProfileKind::Custom(_) => {
            model.tail_integral(r_quad) * profile.eval(r_quad) / model.eval(r_quad)
        }
        _ => {
            // remaining ∫_T^∞ ω(e^t) dt on the half line, substituted so the
            // fitted decay becomes integrable at the origin
            let power = match *model {
                TailModel::Power { .. } => 1,
                TailModel::LogPower { q, .. } => quadrature::smoothing_power(q - 2.0),
            };
            let piece = quadrature::half_line(g, t_end, power, tol);
            if piece.error > 1e-9 * piece.value.abs().max(1e-300) {
                return Err(Error::QuadratureFailure {
                    estimate: piece.value,
                    error: piece.error,
                });
            }
            piece.value
        }
    };
    Ok(body + tail)
}

/// Outcome of [`validate_profile`]; failures are recorded, never raised.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub samples: usize,
    pub monotone: bool,
    /// Index pairs `(i, i+1)` of samples where `ω` increases.
    pub offending: Vec<(usize, usize)>,
    pub positive: bool,
    pub dini: Result<f64>,
}

impl ProfileReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.positive && self.dini.is_ok()
    }
}

pub fn validate_profile(profile: &DecayProfile) -> ProfileReport {
    let radii = sample_radii(profile);
    let values: Vec<f64> = radii.iter().map(|&r| profile.eval(r)).collect();
    let offending = monotonicity_violations(&radii, &values);
    let positive = values.iter().all(|&w| w > 0.0);
    ProfileReport {
        samples: radii.len(),
        monotone: offending.is_empty(),
        offending,
        positive,
        dini: dini_integral(profile),
    }
}

/// `θ ω(r) (1+r)^{-τ}`.
pub fn envelope(theta: f64, tau: f64, profile: &DecayProfile, r: f64) -> f64 {
    theta * profile.eval(r) * (1.0 + r).powf(-tau)
}

/// Radial shape multiplying the envelope; `k` needs values in `[0, 1]`,
/// `K` in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Constant {
        value: f64,
    },
    /// `amplitude cos(frequency r + phase)`
    Cosine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `offset + scale Σ a_j cos(f_j r + φ_j)` with random coefficients
    /// normalized by `Σ |a_j|`, so values stay in `[offset - scale, offset + scale]`.
    RandomTrig {
        terms: usize,
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    #[serde(skip)]
    Custom(CustomProfile),
}

fn one() -> f64 {
    1.0
}

impl Shape {
    pub fn constant(value: f64) -> Self {
        Shape::Constant { value }
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Shape::Custom(CustomProfile::new(name, f))
    }

    /// Samples the shape at `nodes`; `seed` drives `RandomTrig`.
    pub fn sample(&self, nodes: &[f64], seed: u64) -> Vec<f64> {
        match self {
            Shape::Constant { value } => vec![*value; nodes.len()],
            Shape::Cosine {
                amplitude,
                frequency,
                phase,
            } => nodes
                .iter()
                .map(|r| amplitude * (frequency * r + phase).cos())
                .collect(),
            Shape::RandomTrig {
                terms,
                offset,
                scale,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<(f64, f64, f64)> = (0..(*terms).max(1))
                    .map(|_| {
                        (
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(0.05..2.0),
                            rng.gen_range(0.0..2.0 * PI),
                        )
                    })
                    .collect();
                let norm: f64 = coeffs.iter().map(|c| c.0.abs()).sum::<f64>().max(1e-300);
                nodes
                    .iter()
                    .map(|r| {
                        let s: f64 = coeffs.iter().map(|(a, f, p)| a * (f * r + p).cos()).sum();
                        offset + scale * (s / norm).clamp(-1.0, 1.0)
                    })
                    .collect()
            }
            Shape::Custom(c) => nodes.iter().map(|&r| (c.f)(r)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub theta: f64,
    pub tau: f64,
    pub shape_k: Shape,
    pub shape_big_k: Shape,
    #[serde(default)]
    pub seed: u64,
}

/// Sampled `k ≥ 0` and signed `K`, both bounded by the envelope.
#[derive(Debug, Clone)]
pub struct CoefficientPair {
    pub theta: f64,
    pub tau: f64,
    pub k: RadialFunction,
    pub big_k: RadialFunction,
    /// Envelope values at the nodes.
    pub envelope: Vec<f64>,
}

impl CoefficientPair {
    pub fn zero(grid: &Arc<RadialGrid>, tau: f64) -> Self {
        let zero = RadialFunction::constant(grid.clone(), 0.0);
        CoefficientPair {
            theta: 0.0,
            tau,
            k: zero.clone(),
            big_k: zero,
            envelope: vec![0.0; grid.len()],
        }
    }

    pub fn big_k_sup(&self) -> f64 {
        self.big_k.max_abs()
    }
}

/// Builds `k = θ shape_k ω (1+r)^{-τ}` and `K = θ shape_K ω (1+r)^{-τ}` at
/// the nodes and re-checks the envelope bounds exactly.
pub fn make_coefficient_pair(
    spec: &CoefficientSpec,
    profile: &DecayProfile,
    grid: &Arc<RadialGrid>,
    alpha: f64,
) -> Result<CoefficientPair> {
    if !(spec.tau >= alpha) {
        return Err(Error::BadTau {
            tau: spec.tau,
            alpha,
        });
    }
    if !(spec.theta.is_finite() && spec.theta >= 0.0) {
        return Err(Error::invalid("theta", format!("{} must be nonnegative", spec.theta)));
    }
    let nodes = grid.nodes();
    let env: Vec<f64> = nodes
        .iter()
        .map(|&r| envelope(spec.theta, spec.tau, profile, r))
        .collect();
    let sk = spec.shape_k.sample(nodes, spec.seed);
    let sbk = spec.shape_big_k.sample(nodes, spec.seed.wrapping_add(1));
    let k: Vec<f64> = sk.iter().zip(&env).map(|(s, e)| s * e).collect();
    let big_k: Vec<f64> = sbk.iter().zip(&env).map(|(s, e)| s * e).collect();
    for i in 0..nodes.len() {
        if !(k[i] >= 0.0 && k[i] <= env[i]) {
            return Err(Error::EnvelopeViolation { node: i, which: "k" });
        }
        if !(big_k[i].abs() <= env[i]) {
            return Err(Error::EnvelopeViolation { node: i, which: "K" });
        }
    }
    let tail = spec.tau.max(1e-3);
    Ok(CoefficientPair {
        theta: spec.theta,
        tau: spec.tau,
        k: RadialFunction::new(grid.clone(), k, 0.0, tail)?,
        big_k: RadialFunction::new(grid.clone(), big_k, 0.0, tail)?,
        envelope: env,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_dini_values() {
        assert_relative_eq!(dini_integral(&DecayProfile::power(1.0)).unwrap(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(dini_integral(&DecayProfile::power(0.5)).unwrap(), 2.0, max_relative = 1e-10);
        assert_relative_eq!(dini_integral(&DecayProfile::log_power(2.0)).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn shifted_log_weight_has_its_own_value() {
        // ∫_1^∞ (1 + ln(1+r))^{-2} / r dr, 30-digit reference value
        let d = dini_integral_detailed(&DecayProfile::shifted_log_power(2.0)).unwrap();
        assert_relative_eq!(d.value, 0.728274728541310, max_relative = 1e-9);
        assert!(d.consistency < 1e-8);
    }

    #[test]
    fn divergent_weights_are_rejected() {
        let one = DecayProfile::custom("one", 1.0, |_| 1.0);
        assert!(matches!(dini_integral(&one), Err(Error::DiniDivergent(_))));
        let inv_log = DecayProfile::custom("1/ln(e+r)", 1.0, |r| 1.0 / (std::f64::consts::E + r).ln());
        assert!(matches!(dini_integral(&inv_log), Err(Error::DiniDivergent(_))));
        assert!(matches!(
            dini_integral(&DecayProfile::power(0.0)),
            Err(Error::DiniDivergent(_))
        ));
    }

    #[test]
    fn oscillating_weight_is_not_monotone() {
        let p = DecayProfile::custom("1+sin", 1.0, |r| 1.0 + r.sin());
        let rep = validate_profile(&p);
        assert!(!rep.monotone && !rep.passed());
        assert!(rep.samples >= 200);
        assert!(matches!(rep.dini, Err(Error::NonMonotone(_))));
    }

    #[test]
    fn inverted_table_pair_is_located() {
        let r = vec![1.0, 2.0, 4.0, 8.0, 16.0];
        let omega = vec![1.0, 0.5, 0.6, 0.125, 0.0625];
        let p = DecayProfile::new(ProfileKind::Table { r, omega }, 1.0).unwrap();
        let rep = validate_profile(&p);
        assert_eq!(rep.offending, vec![(1, 2)]);
    }

    #[test]
    fn clipped_inverse_sqrt_passes() {
        let rep = validate_profile(&DecayProfile::power(0.5));
        assert!(rep.passed());
        assert_relative_eq!(rep.dini.unwrap(), 2.0, max_relative = 1e-10);
        assert_eq!(DecayProfile::power(0.5).eval(0.0), 1.0);
    }

    #[test]
    fn csv_table_parses_and_extrapolates() {
        let mut text = String::from("r,omega\n");
        for k in 0..=40 {
            let r = 10f64.powf(k as f64 / 10.0);
            text.push_str(&format!("{r},{}\n", 1.0 / r));
        }
        let p = DecayProfile::from_csv(&text, None).unwrap();
        assert_relative_eq!(p.eval(1e6), 1e-6, max_relative = 1e-8);
        assert_relative_eq!(dini_integral(&p).unwrap(), 1.0, max_relative = 1e-4);
    }

    #[test]
    fn envelope_composition() {
        let p = DecayProfile::power(1.0);
        assert_eq!(envelope(1.0, 2.0, &p, 0.0), 1.0);
        assert_eq!(envelope(0.0, 2.0, &p, 5.0), 0.0);
    }

    #[test]
    fn coefficient_pair_respects_envelope() {
        let g = Arc::new(RadialGrid::graded(&GridSpec::new(64, 100.0), 1.0).unwrap());
        let p = DecayProfile::log_power(2.0);
        let spec = CoefficientSpec {
            theta: 0.3,
            tau: 2.0,
            shape_k: Shape::constant(0.0),
            shape_big_k: Shape::constant(-1.0),
            seed: 0,
        };
        let c = make_coefficient_pair(&spec, &p, &g, 1.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(c.big_k.values()[i], -c.envelope[i]);
            assert_eq!(c.k.values()[i], 0.0);
        }
        let bad = CoefficientSpec {
            shape_k: Shape::constant(1.5),
            ..spec.clone()
        };
        assert!(matches!(
            make_coefficient_pair(&bad, &p, &g, 1.0),
            Err(Error::EnvelopeViolation { which: "k", .. })
        ));
        assert!(matches!(
            make_coefficient_pair(&spec, &p, &g, 2.5),
            Err(Error::BadTau { .. })
        ));
    }
}
