//! Riesz potentials `I_α f = γ(n,α) ∫ f(y) |x-y|^{α-n} dy` of radial sources,
//! their near/middle/far decomposition and the decay-envelope checks.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid, RadialSource};
use crate::kernel::{self, riesz_constant, sphere_area};
use crate::quadrature::{self, Endpoint, Integral, Tolerance};
use crate::weights::{least_squares, DecayProfile};

fn tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-10,
        max_intervals: 2000,
    }
}

/// Distance band `(lo, hi]` of `|x - y|`, as multiples of nothing: absolute.
#[derive(Debug, Clone, Copy)]
struct Band {
    lo: f64,
    hi: f64,
}

impl Band {
    const ALL: Band = Band {
        lo: 0.0,
        hi: f64::INFINITY,
    };
}

/// Spherical mean of `|x - y|^{-β}` restricted to `|x - y| ∈ band`, with
/// `d = |r - s|` supplied exactly by the caller.
fn band_mean(n: usize, beta: f64, r: f64, s: f64, d: f64, band: Band) -> f64 {
    let m = r.max(s);
    if r.min(s) == 0.0 {
        return if m > band.lo && m <= band.hi {
            m.powf(-beta)
        } else {
            0.0
        };
    }
    let full = band.lo == 0.0 && band.hi == f64::INFINITY;
    match n {
        1 => {
            let inside = |x: f64| x > band.lo && x <= band.hi;
            let mut v = 0.0;
            if inside(d) {
                v += d.powf(-beta);
            }
            if inside(r + s) {
                v += (r + s).powf(-beta);
            }
            0.5 * v
        }
        3 => {
            if full {
                return mean3(beta, r, s, d);
            }
            // (1/(2rs)) ∫ t^{1-β} dt over the band part of [|r-s|, r+s]
            let a = d.max(band.lo);
            let b = (r + s).min(band.hi);
            if !(b > a) {
                return 0.0;
            }
            let e = 2.0 - beta;
            let prim = if e.abs() < 1e-14 {
                (b / a).ln()
            } else {
                (b.powf(e) - a.powf(e)) / e
            };
            prim / (2.0 * r * s)
        }
        _ => {
            if full {
                return kernel::angular_mean(n, beta, r, s);
            }
            band_mean_quadrature(n, beta, r, s, band)
        }
    }
}

/// Closed-form `n = 3` mean with the exact distance, accurate near `r = s`.
fn mean3(beta: f64, r: f64, s: f64, d: f64) -> f64 {
    let m = r.max(s);
    let x = r.min(s) / m;
    let e = 2.0 - beta;
    // atanh(x) = ½ ln((2m - d)/d); the logarithmic form keeps digits as d → 0
    let at = if d < 0.5 * m {
        0.5 * ((2.0 * m - d) / d).ln()
    } else {
        x.atanh()
    };
    if e == 0.0 {
        m.powi(-2) * at / x
    } else {
        m.powf(-beta) * (d / m).powf(e) * (2.0 * e * at).exp_m1() / (2.0 * x * e)
    }
}

fn band_mean_quadrature(n: usize, beta: f64, r: f64, s: f64, band: Band) -> f64 {
    let nf = n as f64;
    let norm = (statrs::function::gamma::ln_gamma(nf / 2.0)
        - statrs::function::gamma::ln_gamma((nf - 1.0) / 2.0))
    .exp()
        / PI.sqrt();
    let d2 = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let angle = |dist: f64| {
        if dist * dist <= d2 {
            0.0
        } else {
            2.0 * ((dist * dist - d2) / rs4).sqrt().min(1.0).asin()
        }
    };
    let lo = angle(band.lo);
    let hi = if band.hi.is_finite() { angle(band.hi) } else { PI };
    if !(hi > lo) {
        return 0.0;
    }
    let k = (n - 2) as i32;
    let f = |phi: f64| {
        let h = (0.5 * phi).sin();
        (d2 + rs4 * h * h).powf(-beta / 2.0) * phi.sin().powi(k)
    };
    let p = quadrature::smoothing_power(nf - 2.0 - beta);
    let v = if lo == 0.0 {
        quadrature::endpoint_singular(|phi, _| f(phi), lo, hi, Endpoint::Left, p, tolerance())
    } else {
        quadrature::adaptive(f, lo, hi, tolerance())
    };
    norm * v.value
}

fn check_source(source: &dyn RadialSource, n: usize, alpha: f64) -> Result<f64> {
    let gamma = riesz_constant(n, alpha)?;
    let limit = source.limit_at_infinity();
    if limit != 0.0 {
        return Err(Error::NonzeroSourceLimit(limit));
    }
    if source.support().is_none() && !(source.tail_power() > alpha) {
        return Err(Error::NonIntegrableTail {
            tail_power: source.tail_power(),
            alpha,
        });
    }
    Ok(gamma)
}

/// `γ |S^{n-1}| ∫ f(s) s^{n-1} A_band(r, s) ds` at one radius.
fn potential_integral(
    source: &dyn RadialSource,
    r: f64,
    n: usize,
    alpha: f64,
    gamma: f64,
    band: Band,
    extra_cuts: &[f64],
) -> Result<f64> {
    let beta = n as f64 - alpha;
    let area = sphere_area(n);
    let nm1 = (n - 1) as i32;
    let f = |s: f64, d: f64| {
        let v = source.value(s);
        if v == 0.0 {
            return 0.0;
        }
        v * s.powi(nm1) * band_mean(n, beta, r, s, d, band)
    };
    let tol = tolerance();
    let support = source.support();
    let mut cuts: Vec<f64> = vec![0.0];
    if r > 0.0 {
        cuts.extend([0.5 * r, r, 2.0 * r]);
    }
    cuts.extend(extra_cuts.iter().copied());
    cuts.extend(source.breakpoints());
    let end = match support {
        Some(rad) => rad,
        None => cuts.iter().copied().fold(1.0, f64::max) * 2.0,
    };
    cuts.retain(|&c| c >= 0.0 && c <= end);
    cuts.push(end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let p_sing = quadrature::smoothing_power(alpha - 1.0);
    let mut total = Integral::ZERO;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let piece = if r > 0.0 && b == r {
            quadrature::endpoint_singular(f, a, b, Endpoint::Right, p_sing, tol)
        } else if (r > 0.0 && a == r) || (r == 0.0 && a == 0.0) {
            quadrature::endpoint_singular(f, a, b, Endpoint::Left, p_sing, tol)
        } else {
            quadrature::adaptive(|s| f(s, (s - r).abs()), a, b, tol)
        };
        total = total + piece;
    }
    if support.is_none() {
        // integrand decays like s^{α - p - 1}
        let p = source.tail_power();
        let m = if p.is_finite() {
            ((2.0 / (p - alpha)).ceil() as u32).clamp(1, 12)
        } else {
            1
        };
        total = total + quadrature::half_line(|s| f(s, s - r), end, m, tol);
    }
    let scale = total.value.abs().max(1e-300);
    if !(total.value.is_finite()) || total.error > 1e-6 * scale {
        return Err(Error::QuadratureFailure {
            estimate: total.value,
            error: total.error,
        });
    }
    Ok(gamma * area * total.value)
}

/// `I_α f` at a single radius.
pub fn riesz_potential_at(source: &dyn RadialSource, r: f64, n: usize, alpha: f64) -> Result<f64> {
    let gamma = check_source(source, n, alpha)?;
    potential_integral(source, r, n, alpha, gamma, Band::ALL, &[])
}

/// `I_α f` at every node of `grid`; zero limit at infinity and tail power
/// `min(p, n) - α` for a source decaying like `s^{-p}`.
pub fn riesz_potential(
    source: &dyn RadialSource,
    grid: &Arc<RadialGrid>,
    n: usize,
    alpha: f64,
) -> Result<RadialFunction> {
    let gamma = check_source(source, n, alpha)?;
    let nodes = grid.nodes();
    let values: Vec<Result<f64>> = kernel::map_rows(nodes.len(), |i| {
        potential_integral(source, nodes[i], n, alpha, gamma, Band::ALL, &[])
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let nf = n as f64;
    let p = if source.support().is_some() {
        nf
    } else {
        source.tail_power().min(nf)
    };
    RadialFunction::new(grid.clone(), values, 0.0, p - alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `|y - x| ≤ |x|/2`
    D1,
    /// `|x|/2 < |y - x| ≤ 2|x|`
    D2,
    /// `|y - x| > 2|x|`
    D3,
}

/// Region of a point at distance `distance` from `x`; ties go to the
/// lower-numbered region.
pub fn region_of_distance(x_radius: f64, distance: f64) -> Result<Region> {
    if !(x_radius > 0.0) {
        return Err(Error::invalid("x_radius", "must be positive"));
    }
    Ok(if distance <= 0.5 * x_radius {
        Region::D1
    } else if distance <= 2.0 * x_radius {
        Region::D2
    } else {
        Region::D3
    })
}

/// Region of `y = (y_radius, angle)` relative to `x = (x_radius, 0)`.
pub fn region_split(x_radius: f64, y_radius: f64, angle: f64) -> Result<Region> {
    let d2 = x_radius * x_radius + y_radius * y_radius - 2.0 * x_radius * y_radius * angle.cos();
    region_of_distance(x_radius, d2.max(0.0).sqrt())
}

/// Contributions of `D1`, `D2`, `D3` to `I_α f` at radius `x_radius`.
pub fn split_contributions(
    source: &dyn RadialSource,
    x_radius: f64,
    n: usize,
    alpha: f64,
) -> Result<(f64, f64, f64)> {
    if !(x_radius > 0.0) {
        return Err(Error::invalid("x_radius", "must be positive"));
    }
    let gamma = check_source(source, n, alpha)?;
    let r = x_radius;
    let cuts = [0.5 * r, 1.5 * r, 3.0 * r];
    let part = |lo: f64, hi: f64| {
        potential_integral(source, r, n, alpha, gamma, Band { lo, hi }, &cuts)
    };
    Ok((
        part(0.0, 0.5 * r)?,
        part(0.5 * r, 2.0 * r)?,
        part(2.0 * r, f64::INFINITY)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    TauGreaterN,
    TauEqualsN,
    AlphaLeTauLtN,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::TauGreaterN => "TauGreaterN",
            Regime::TauEqualsN => "TauEqualsN",
            Regime::AlphaLeTauLtN => "AlphaLeTauLtN",
        };
        f.write_str(s)
    }
}

pub fn classify_regime(tau: f64, n: usize, alpha: f64) -> Result<Regime> {
    if !(tau >= alpha) {
        return Err(Error::BadTau { tau, alpha });
    }
    let nf = n as f64;
    Ok(if (tau - nf).abs() <= 1e-12 {
        Regime::TauEqualsN
    } else if tau > nf {
        Regime::TauGreaterN
    } else {
        Regime::AlphaLeTauLtN
    })
}

impl Regime {
    /// Power of `r` in the envelope shape (0 for the logarithmic case).
    pub fn predicted_slope(self, n: usize, alpha: f64, tau: f64) -> f64 {
        match self {
            Regime::TauGreaterN => alpha - n as f64,
            Regime::TauEqualsN => 0.0,
            Regime::AlphaLeTauLtN => alpha - tau,
        }
    }
}

/// `r^{α-n} ω(r)`, `ω(r) ln r` or `ω(r) r^{α-τ}`, without the constant.
pub fn upper_envelope(
    regime: Regime,
    omega: &DecayProfile,
    n: usize,
    alpha: f64,
    tau: f64,
    r: f64,
) -> f64 {
    let w = omega.eval(r);
    match regime {
        Regime::TauGreaterN => r.powf(alpha - n as f64) * w,
        Regime::TauEqualsN => w * r.ln(),
        Regime::AlphaLeTauLtN => w * r.powf(alpha - tau),
    }
}

/// Same shapes as [`upper_envelope`]; the lower bounds mirror the upper ones.
pub fn lower_envelope(
    regime: Regime,
    omega: &DecayProfile,
    n: usize,
    alpha: f64,
    tau: f64,
    r: f64,
) -> f64 {
    upper_envelope(regime, omega, n, alpha, tau, r)
}

/// Least-squares slope of `ln v` against `ln r`.
pub fn fit_log_slope(r: &[f64], v: &[f64]) -> Result<f64> {
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveValues { index: i });
    }
    let lx: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    Ok(least_squares(&lx, &ly).0)
}

pub const MIN_FIT_NODES: usize = 10;

/// Log-log slope of `w` over the nodes in `[r_start, r_end]`.
pub fn fit_decay_exponent(w: &RadialFunction, r_start: f64, r_end: f64) -> Result<f64> {
    let grid = w.grid();
    let idx: Vec<usize> = grid.indices_in(r_start, r_end).collect();
    if idx.len() < MIN_FIT_NODES {
        return Err(Error::InsufficientNodes {
            found: idx.len(),
            needed: MIN_FIT_NODES,
        });
    }
    if let Some(&i) = idx.iter().find(|&&i| !(w.values()[i] > 0.0)) {
        return Err(Error::NonPositiveValues { index: i });
    }
    let r: Vec<f64> = idx.iter().map(|&i| grid.nodes()[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| w.values()[i]).collect();
    fit_log_slope(&r, &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeOptions {
    pub r_start: f64,
    pub r_end: f64,
    pub slope_tol: f64,
    /// Allowed `max/min - 1` of `w / shape` in the logarithmic regime.
    pub ratio_tol: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            r_start: 20.0,
            r_end: 200.0,
            slope_tol: 0.15,
            ratio_tol: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub bound: Bound,
    pub regime: Regime,
    pub radii: Vec<f64>,
    pub w_values: Vec<f64>,
    pub bound_values: Vec<f64>,
    /// `max w/shape` for the upper report, `min w/shape` for the lower one.
    pub fitted_c: f64,
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    /// `max/min - 1` of `w / shape`.
    pub ratio_variation: f64,
    pub pass: bool,
}

/// Potential of the source plus the upper and lower envelope reports.
#[derive(Debug, Clone)]
pub struct EnvelopeCheck {
    pub potential: RadialFunction,
    pub upper: EnvelopeReport,
    pub lower: EnvelopeReport,
}

impl EnvelopeCheck {
    pub fn pass(&self) -> bool {
        self.upper.pass && self.lower.pass
    }
}

/// Computes `w = I_α f` and compares it with the regime's shape on
/// `[r_start, r_end]`.
///
/// The slope is that of `w` when `τ > n` (the potential then decays like the
/// kernel, whatever `ω` does), of `w/ω` when `α ≤ τ < n`, and of
/// `w/(ω ln r)` when `τ = n`, where the verdict uses the ratio variation.
pub fn verify_envelopes(
    source: &dyn RadialSource,
    omega: &DecayProfile,
    n: usize,
    alpha: f64,
    tau: f64,
    grid: &Arc<RadialGrid>,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeCheck> {
    let regime = classify_regime(tau, n, alpha)?;
    let w = riesz_potential(source, grid, n, alpha)?;
    let idx: Vec<usize> = grid.indices_in(opts.r_start, opts.r_end).collect();
    if idx.len() < MIN_FIT_NODES {
        return Err(Error::InsufficientNodes {
            found: idx.len(),
            needed: MIN_FIT_NODES,
        });
    }
    let radii: Vec<f64> = idx.iter().map(|&i| grid.nodes()[i]).collect();
    let w_values: Vec<f64> = idx.iter().map(|&i| w.values()[i]).collect();
    if let Some(k) = w_values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveValues { index: idx[k] });
    }
    let shape: Vec<f64> = radii
        .iter()
        .map(|&r| upper_envelope(regime, omega, n, alpha, tau, r))
        .collect();
    let ratio: Vec<f64> = w_values.iter().zip(&shape).map(|(w, s)| w / s).collect();
    let c_upper = ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c_lower = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = c_upper / c_lower - 1.0;
    let fit_target: Vec<f64> = match regime {
        Regime::TauGreaterN => w_values.clone(),
        Regime::AlphaLeTauLtN => w_values
            .iter()
            .zip(&radii)
            .map(|(w, &r)| w / omega.eval(r))
            .collect(),
        Regime::TauEqualsN => ratio.clone(),
    };
    let slope = fit_log_slope(&radii, &fit_target)?;
    let predicted = regime.predicted_slope(n, alpha, tau);
    let shape_ok = match regime {
        Regime::TauEqualsN => variation <= opts.ratio_tol,
        _ => (slope - predicted).abs() <= opts.slope_tol,
    };
    let report = |bound: Bound, c: f64| {
        let bounded = w_values.iter().zip(&shape).all(|(w, s)| match bound {
            Bound::Upper => *w <= c * s * (1.0 + 1e-12),
            Bound::Lower => *w >= c * s * (1.0 - 1e-12),
        });
        EnvelopeReport {
            bound,
            regime,
            radii: radii.clone(),
            w_values: w_values.clone(),
            bound_values: shape.clone(),
            fitted_c: c,
            fitted_slope: slope,
            predicted_slope: predicted,
            ratio_variation: variation,
            pass: c.is_finite() && c > 0.0 && bounded && shape_ok,
        }
    };
    Ok(EnvelopeCheck {
        upper: report(Bound::Upper, c_upper),
        lower: report(Bound::Lower, c_lower),
        potential: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FnSource, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn regions_follow_distance_bands() {
        assert_eq!(region_of_distance(2.0, 0.0).unwrap(), Region::D1);
        assert_eq!(region_of_distance(2.0, 1.0).unwrap(), Region::D1);
        assert_eq!(region_of_distance(2.0, 3.0).unwrap(), Region::D2);
        assert_eq!(region_of_distance(2.0, 4.0).unwrap(), Region::D2);
        assert_eq!(region_of_distance(2.0, 5.0).unwrap(), Region::D3);
        assert_eq!(region_split(2.0, 2.0, 0.0).unwrap(), Region::D1);
        assert_eq!(region_split(2.0, 3.0, PI).unwrap(), Region::D3);
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(5.0, 3, 1.0).unwrap(), Regime::TauGreaterN);
        assert_eq!(classify_regime(3.0, 3, 1.0).unwrap(), Regime::TauEqualsN);
        assert_eq!(classify_regime(2.0, 3, 1.0).unwrap(), Regime::AlphaLeTauLtN);
        assert_eq!(classify_regime(1.0, 3, 1.0).unwrap(), Regime::AlphaLeTauLtN);
        assert!(matches!(classify_regime(0.5, 3, 1.0), Err(Error::BadTau { .. })));
    }

    #[test]
    fn band_means_add_up() {
        for n in [1, 3, 4] {
            for (r, s) in [(1.0f64, 0.3f64), (1.0, 0.9), (2.0, 5.0), (1.0, 2.5)] {
                let beta = n as f64 - 0.7;
                let d = (r - s).abs();
                let all = band_mean(n, beta, r, s, d, Band::ALL);
                let parts: f64 = [(0.0, 0.5 * r), (0.5 * r, 2.0 * r), (2.0 * r, f64::INFINITY)]
                    .iter()
                    .map(|&(lo, hi)| band_mean(n, beta, r, s, d, Band { lo, hi }))
                    .sum();
                assert_relative_eq!(all, parts, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_potential() {
        let g = Arc::new(RadialGrid::graded(&GridSpec::new(32, 100.0), 1.0).unwrap());
        let w = riesz_potential(&FnSource::new(|_| 0.0, 5.0), &g, 3, 1.0).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn source_preconditions() {
        let src = FnSource::new(|s| (1.0 + s).powi(-1), 1.0);
        assert!(matches!(
            riesz_potential_at(&src, 1.0, 3, 1.0),
            Err(Error::NonIntegrableTail { .. })
        ));
    }

    #[test]
    fn fit_power_law() {
        let g = Arc::new(RadialGrid::graded(&GridSpec::new(256, 400.0), 2.0).unwrap());
        let w = RadialFunction::from_fn(g.clone(), |r| (1.0 + r).powi(-2), 0.0, 2.0).unwrap();
        let s = fit_decay_exponent(&w, 20.0, 200.0).unwrap();
        assert!((s + 2.0).abs() < 0.1);
        let c = RadialFunction::constant(g.clone(), 3.0);
        assert!(fit_decay_exponent(&c, 20.0, 200.0).unwrap().abs() < 1e-9);
        assert!(matches!(
            fit_decay_exponent(&c, 20.0, 21.0),
            Err(Error::InsufficientNodes { .. })
        ));
    }
}
