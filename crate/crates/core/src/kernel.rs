//! Riesz and fractional-Laplacian constants, spherical means of `|x - y|^{-β}`
//! and the dense radial discretization of `(-Δ)^{α/2}`.
//!
//! Row `i` of the operator is `C(n,α) [Σ_j m_ij (u_i - u_j) + f_i (u_i - L)]`
//! where `L` is the value of `u` at infinity. All `m_ij` and `f_i` are
//! nonnegative, so constants are annihilated and the discrete comparison
//! principle holds.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::quadrature::{self, gauss16, gauss32, gauss8, Endpoint, GaussRule, Tolerance};

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dimension", "must be at least 1"));
    }
    Ok(())
}

/// `|S^{n-1}| = 2 π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// `γ(n,α) = Γ((n-α)/2) / (2^α π^{n/2} Γ(α/2))`, the constant making
/// `γ ∫ f(y)|x-y|^{α-n} dy` the inverse of `(-Δ)^{α/2}`.
pub fn riesz_constant(n: usize, alpha: f64) -> Result<f64> {
    check_dimension(n)?;
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::BadOrder {
            n,
            alpha,
            upper: nf,
        });
    }
    Ok(gamma((nf - alpha) / 2.0) / (2f64.powf(alpha) * PI.powf(nf / 2.0) * gamma(alpha / 2.0)))
}

/// The Newtonian constant `[n(n-2)|B_1|]^{-1}`, defined for `n ≥ 3`. It
/// coincides with `riesz_constant(n, 2)`.
pub fn newtonian_constant(n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let ball = PI.powf(nf / 2.0) / gamma(nf / 2.0 + 1.0);
    Some(1.0 / (nf * (nf - 2.0) * ball))
}

/// `C(n,α) = α 2^{α-1} Γ((n+α)/2) / (π^{n/2} Γ(1-α/2))`, the normalization of
/// the principal-value integral defining `(-Δ)^{α/2}`.
pub fn flap_constant(n: usize, alpha: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::BadOrder {
            n,
            alpha,
            upper: 2.0,
        });
    }
    let nf = n as f64;
    Ok(alpha * 2f64.powf(alpha - 1.0) * gamma((nf + alpha) / 2.0)
        / (PI.powf(nf / 2.0) * gamma(1.0 - alpha / 2.0)))
}

/// `λ` with `I_α[(1+s²)^{-(n+α)/2}] = λ (1+r²)^{-(n-α)/2}`.
pub fn eigen_pair_constant(n: usize, alpha: f64) -> Result<f64> {
    let g = riesz_constant(n, alpha)?;
    let nf = n as f64;
    let beta = (ln_gamma(alpha / 2.0) + ln_gamma(nf / 2.0) - ln_gamma((nf + alpha) / 2.0)).exp();
    Ok(g * sphere_area(n) * beta / 2.0)
}

/// Mean of `|r e_1 - s θ|^{-β}` over unit vectors `θ ∈ S^{n-1}`.
pub fn angular_kernel(n: usize, beta: f64, r: f64, s: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(r >= 0.0 && s >= 0.0) {
        return Err(Error::invalid("radius", "radii must be nonnegative"));
    }
    let m = r.max(s);
    if m == 0.0 {
        return if beta > 0.0 {
            Err(Error::SingularDiagonal)
        } else {
            Ok(if beta == 0.0 { 1.0 } else { 0.0 })
        };
    }
    if r.min(s) == 0.0 {
        return Ok(m.powf(-beta));
    }
    if r == s && diagonal_singular(n, beta) {
        return Err(Error::SingularDiagonal);
    }
    Ok(angular_mean(n, beta, r, s))
}

/// Whether the mean is infinite at `r = s > 0`.
fn diagonal_singular(n: usize, beta: f64) -> bool {
    match n {
        1 => beta > 0.0,
        _ => beta >= (n - 1) as f64,
    }
}

/// Unchecked mean for `r, s > 0`; infinite on a singular diagonal.
pub(crate) fn angular_mean(n: usize, beta: f64, r: f64, s: f64) -> f64 {
    let m = r.max(s);
    let x = r.min(s) / m;
    match n {
        1 => 0.5 * ((r - s).abs().powf(-beta) + (r + s).powf(-beta)),
        3 => {
            // [(r+s)^e - |r-s|^e] / (2rs e), e = 2 - β, written in terms of
            // x = min/max so that neither near-equal nor disparate radii cancel.
            let e = 2.0 - beta;
            if x == 1.0 {
                return if e > 0.0 {
                    (2.0 * m).powf(e) / (2.0 * m * m * e)
                } else {
                    f64::INFINITY
                };
            }
            let at = x.atanh();
            if e == 0.0 {
                m.powi(-2) * at / x
            } else {
                m.powf(-beta) * (1.0 - x).powf(e) * (2.0 * e * at).exp_m1() / (2.0 * x * e)
            }
        }
        _ => angular_mean_quadrature(n, beta, r, s),
    }
}

fn angular_mean_quadrature(n: usize, beta: f64, r: f64, s: f64) -> f64 {
    let nf = n as f64;
    let norm = (ln_gamma(nf / 2.0) - ln_gamma((nf - 1.0) / 2.0)).exp() / PI.sqrt();
    let d2 = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let k = (n - 2) as i32;
    let f = |phi: f64| {
        let h = (0.5 * phi).sin();
        (d2 + rs4 * h * h).powf(-beta / 2.0) * phi.sin().powi(k)
    };
    let tol = Tolerance::rel(1e-12);
    if r == s {
        let p = quadrature::smoothing_power(nf - 2.0 - beta);
        let split = 0.5;
        let head = quadrature::endpoint_singular(|phi, _| f(phi), 0.0, split, Endpoint::Left, p, tol);
        return norm * (head + quadrature::adaptive(f, split, PI, tol)).value;
    }
    // resolve the peak of width ~ |r - s| / sqrt(rs) near φ = 0
    let width = ((r - s).abs() / (r * s).sqrt()).min(1.0);
    let mut total = quadrature::Integral::ZERO;
    let mut lo = 0.0;
    for b in [width, 4.0 * width, 16.0 * width, PI] {
        let b = b.min(PI);
        if b > lo {
            total = total + quadrature::adaptive(f, lo, b, tol);
            lo = b;
        }
    }
    norm * total.value
}

/// `|s - r|^{-1-α} - (s + r)^{-1-α}` without cancellation.
fn kernel_difference(alpha: f64, r: f64, s: f64) -> f64 {
    let m = r.max(s);
    let x = r.min(s) / m;
    let p = 1.0 + alpha;
    m.powf(-p) * (1.0 - x).powf(-p) * -(-2.0 * p * x.atanh()).exp_m1()
}

/// Coefficient of `s^{-1-α}` in the kernel seen from the origin.
fn origin_coefficient(n: usize) -> f64 {
    if n == 1 {
        2.0
    } else {
        4.0 * PI
    }
}

/// Radial kernel `|S^{n-1}| s^{n-1} A_{n, n+α}(r, s)` (without `C(n,α)`).
pub fn radial_flap_kernel(n: usize, alpha: f64, r: f64, s: f64) -> f64 {
    if r == 0.0 {
        return origin_coefficient(n) * s.powf(-1.0 - alpha);
    }
    match n {
        1 => (s - r).abs().powf(-1.0 - alpha) + (s + r).powf(-1.0 - alpha),
        _ => 2.0 * PI * s / ((1.0 + alpha) * r) * kernel_difference(alpha, r, s),
    }
}

/// Dense discrete `(-Δ)^{α/2}` on a radial grid.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    grid: Arc<RadialGrid>,
    n: usize,
    alpha: f64,
    constant: f64,
    tail_exponent: f64,
    matrix: DMatrix<f64>,
    far_field: Vec<f64>,
}

impl NonlocalOperator {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order_alpha(&self) -> f64 {
        self.alpha
    }

    /// `C(n,α)`, already folded into [`Self::matrix`].
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Power `q` of the far-field model `L + (u_N - L)(R/s)^q`.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    /// `(Lu)_i = (matrix · u)_i - far_field_i · L`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Row coupling to the value at infinity; this is the tail row correction.
    pub fn far_field(&self) -> &[f64] {
        &self.far_field
    }

    /// Weight `C m_ij ≥ 0` coupling row `i` to node `j ≠ i`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        -self.matrix[(i, j)]
    }

    pub fn couplings_nonnegative(&self) -> bool {
        let n = self.matrix.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] <= 0.0))
            && self.far_field.iter().all(|&f| f >= 0.0)
    }

    /// Applies the operator to nodal values with value `limit` at infinity.
    pub fn apply_values(&self, values: &[f64], limit: f64) -> Vec<f64> {
        let u = DVector::from_column_slice(values);
        let lu = &self.matrix * u;
        lu.iter()
            .zip(&self.far_field)
            .map(|(v, f)| v - f * limit)
            .collect()
    }

    /// Writes the matrix and far-field column as CSV for inspection.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let n = self.matrix.nrows();
        write!(out, "r")?;
        for j in 0..n {
            write!(out, ",m{j}")?;
        }
        writeln!(out, ",far")?;
        for i in 0..n {
            write!(out, "{:e}", self.grid.nodes()[i])?;
            for j in 0..n {
                write!(out, ",{:e}", self.matrix[(i, j)])?;
            }
            writeln!(out, ",{:e}", self.far_field[i])?;
        }
        Ok(())
    }
}

/// `(-Δ)^{α/2} u` at the nodes, with the far field taken from
/// `u.limit_at_infinity()`.
pub fn apply_flap(op: &NonlocalOperator, u: &RadialFunction) -> Result<RadialFunction> {
    if !op.grid.same_nodes(u.grid()) {
        return Err(Error::GridMismatch);
    }
    let values = op.apply_values(u.values(), u.limit_at_infinity());
    let nf = op.n as f64;
    let tail = (u.tail_power() + op.alpha).min(nf + op.alpha);
    RadialFunction::new(u.grid().clone(), values, 0.0, tail)
}

/// Row of couplings before scaling by `C(n,α)`.
struct Row {
    weights: Vec<f64>,
    far: f64,
    window_mass: f64,
    asymmetry: f64,
}

/// Which quantity is interpolated: `u` itself, or `s·u` (used for `n = 3`
/// away from the origin, where it keeps the couplings nonnegative).
#[derive(Clone, Copy)]
enum Interp {
    Plain,
    Weighted,
}

impl Interp {
    fn weight(self, s: f64) -> f64 {
        match self {
            Interp::Plain => 1.0,
            Interp::Weighted => s,
        }
    }
}

struct Assembler<'a> {
    x: &'a [f64],
    n: usize,
    alpha: f64,
    q: f64,
    big_n: usize,
    virtual_node: f64,
}

/// Largest ratio of PV-window asymmetry mass to off-diagonal mass tolerated.
pub const MAX_WINDOW_RATIO: f64 = 0.1;

impl<'a> Assembler<'a> {
    fn rule(&self, a: f64, b: f64, singular: &[f64]) -> &'static GaussRule {
        let len = b - a;
        let d = singular
            .iter()
            .map(|&p| if p < a { a - p } else if p > b { p - b } else { 0.0 })
            .fold(f64::INFINITY, f64::min);
        if d >= 8.0 * len {
            gauss8()
        } else if d >= 2.0 * len {
            gauss16()
        } else {
            gauss32()
        }
    }

    fn row(&self, i: usize, quadratic: bool) -> Row {
        let x = self.x;
        let nn = self.big_n;
        let alpha = self.alpha;
        let mut w = vec![0.0; nn + 1];
        let mut far = 0.0;
        let r = x[i];
        let singular = [r, -r];
        let (interp, kernel): (Interp, Box<dyn Fn(f64) -> f64 + '_>) = if i == 0 {
            let kappa = origin_coefficient(self.n);
            (Interp::Plain, Box::new(move |s: f64| kappa * s.powf(-1.0 - alpha)))
        } else if self.n == 1 {
            (
                Interp::Plain,
                Box::new(move |s: f64| radial_flap_kernel(1, alpha, r, s)),
            )
        } else {
            let c = 2.0 * PI / ((1.0 + alpha) * r);
            (
                Interp::Weighted,
                Box::new(move |s: f64| c * kernel_difference(alpha, r, s)),
            )
        };
        let node_value = |j: usize| if j <= nn { x[j] } else { self.virtual_node };
        // Couplings to the virtual node beyond R fold into the far field.
        let virtual_factor = 1.0 - (self.virtual_node / x[nn]).powf(-self.q);
        let add = |j: usize, v: f64, w: &mut Vec<f64>, far: &mut f64| {
            if j == i {
                return;
            }
            let v = v * interp.weight(node_value(j));
            if j <= nn {
                w[j] += v;
            } else {
                *far += v * virtual_factor;
            }
        };

        let window_mass;
        let mut asymmetry = 0.0;
        let (lo_idx, hi_idx);
        if i == 0 {
            // even quadratic through u_0, u_1 on [0, x_1]
            let x1 = x[1];
            let v = origin_coefficient(self.n) * x1.powf(-alpha) / (2.0 - alpha);
            add(1, v, &mut w, &mut far);
            window_mass = v;
            lo_idx = None;
            hi_idx = 1;
        } else {
            let hl = r - x[i - 1];
            let xr = node_value(i + 1);
            let hr = xr - r;
            let h = hl.min(hr);
            asymmetry = (hr - hl).abs() / hl.max(hr);
            // singular part: c_s PV ∫_{-h}^{h} ℓ(t) |t|^{-1-α} dt keeps only the t² moment
            let c_s = if self.n == 1 {
                1.0
            } else {
                2.0 * PI / ((1.0 + alpha) * r)
            };
            let m2 = c_s * 2.0 * h.powf(2.0 - alpha) / (2.0 - alpha);
            let image_sign = if self.n == 1 { 1.0 } else { -1.0 };
            let image = |t: f64| image_sign * c_s * (2.0 * r + t).powf(-1.0 - alpha);
            let lp = |t: f64| t * (t + hl) / ((hl + hr) * hr);
            let lm = |t: f64| t * (t - hr) / ((hl + hr) * hl);
            let g = gauss32();
            let mut wp = m2 / ((hl + hr) * hr);
            let mut wm = m2 / ((hl + hr) * hl);
            window_mass = wp + wm;
            for (a, b) in [(-h, 0.0), (0.0, h)] {
                wp += g.integrate(|t| lp(t) * image(t), a, b);
                wm += g.integrate(|t| lm(t) * image(t), a, b);
            }
            add(i - 1, wm, &mut w, &mut far);
            add(i + 1, wp, &mut w, &mut far);
            // leftover of the longer neighbouring element, linear
            if hr > h {
                let (a, b) = (r + h, xr);
                let v = self.rule(a, b, &singular).integrate(|s| kernel(s) * (s - r) / hr, a, b);
                add(i + 1, v, &mut w, &mut far);
            }
            if hl > h {
                let (a, b) = (x[i - 1], r - h);
                let v = self.rule(a, b, &singular).integrate(|s| kernel(s) * (r - s) / hl, a, b);
                add(i - 1, v, &mut w, &mut far);
            }
            lo_idx = Some(i - 1);
            hi_idx = i + 1;
        }

        let element = |nodes: &[usize], w: &mut Vec<f64>, far: &mut f64| {
            let a = x[nodes[0]];
            let b = x[*nodes.last().unwrap()];
            let rule = self.rule(a, b, &singular);
            if nodes.len() == 2 {
                let len = b - a;
                let v0 = rule.integrate(|s| kernel(s) * (b - s) / len, a, b);
                let v1 = rule.integrate(|s| kernel(s) * (s - a) / len, a, b);
                add(nodes[0], v0, w, far);
                add(nodes[1], v1, w, far);
            } else {
                let (x0, x1, x2) = (x[nodes[0]], x[nodes[1]], x[nodes[2]]);
                let l0 = |s: f64| (s - x1) * (s - x2) / ((x0 - x1) * (x0 - x2));
                let l1 = |s: f64| (s - x0) * (s - x2) / ((x1 - x0) * (x1 - x2));
                let l2 = |s: f64| (s - x0) * (s - x1) / ((x2 - x0) * (x2 - x1));
                let mut acc = [0.0; 3];
                let half = rule.nodes.len();
                for k in 0..half {
                    let s = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k];
                    let kw = kernel(s) * rule.weights[k] * 0.5 * (b - a);
                    acc[0] += kw * l0(s);
                    acc[1] += kw * l1(s);
                    acc[2] += kw * l2(s);
                }
                for (j, v) in nodes.iter().zip(acc) {
                    add(*j, v, w, far);
                }
            }
        };
        let mut j = hi_idx;
        while j < nn {
            if !quadratic || j + 2 > nn {
                element(&[j, j + 1], &mut w, &mut far);
                j += 1;
            } else {
                element(&[j, j + 1, j + 2], &mut w, &mut far);
                j += 2;
            }
        }
        if let Some(mut j) = lo_idx {
            while j > 0 {
                if !quadratic || j < 2 {
                    element(&[j - 1, j], &mut w, &mut far);
                    j -= 1;
                } else {
                    element(&[j - 2, j - 1, j], &mut w, &mut far);
                    j -= 2;
                }
            }
        }

        // tail beyond R (beyond the virtual node for the last row)
        let big_r = x[nn];
        let start = if i == nn { self.virtual_node } else { big_r };
        let full = |s: f64| radial_flap_kernel(self.n, alpha, r, s);
        let (mut t_int, mut p_int) = (0.0, 0.0);
        let mut lo = start;
        let mut h = self.virtual_node - big_r;
        let stop = 1e4 * big_r;
        while lo < stop {
            let hi = lo + h;
            let rule = self.rule(lo, hi, &singular);
            let half = rule.nodes.len();
            for k in 0..half {
                let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[k];
                let kw = full(s) * rule.weights[k] * 0.5 * (hi - lo);
                t_int += kw;
                p_int += kw * (big_r / s).powf(self.q);
            }
            lo = hi;
            h *= 1.5;
        }
        let kappa = origin_coefficient(self.n);
        t_int += kappa * lo.powf(-alpha) / alpha;
        p_int += kappa * big_r.powf(self.q) * lo.powf(-alpha - self.q) / (alpha + self.q);
        if i != nn {
            w[nn] += p_int;
        }
        far += t_int - p_int;
        Row {
            weights: w,
            far,
            window_mass,
            asymmetry,
        }
    }

    fn assemble_row(&self, i: usize) -> Result<Row> {
        let row = self.row(i, true);
        let negative = |row: &Row| {
            row.weights
                .iter()
                .enumerate()
                .any(|(j, &v)| j != i && v < 0.0)
                || row.far < 0.0
        };
        let row = if negative(&row) {
            let lin = self.row(i, false);
            if negative(&lin) {
                return Err(Error::InvalidGrid(format!(
                    "negative coupling in row {i} even with linear elements"
                )));
            }
            lin
        } else {
            row
        };
        let mass: f64 = row.weights.iter().sum::<f64>() + row.far;
        // near the origin the image term can cancel most of the net mass
        let ratio = row.asymmetry * row.window_mass / mass.max(row.window_mass);
        if ratio > MAX_WINDOW_RATIO {
            return Err(Error::GridTooCoarse { row: i, ratio });
        }
        Ok(row)
    }
}

/// Assembles the operator on `grid` for `n ∈ {1, 3}`, using the grid's tail
/// exponent hint for the far-field model.
pub fn assemble_flap_matrix(
    grid: &Arc<RadialGrid>,
    n: usize,
    alpha: f64,
) -> Result<NonlocalOperator> {
    let constant = flap_constant(n, alpha)?;
    if n != 1 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let x = grid.nodes();
    let nn = x.len() - 1;
    let h_last = x[nn] - x[nn - 1];
    let ratio = h_last / (x[nn - 1] - x[nn - 2]);
    let asm = Assembler {
        x,
        n,
        alpha,
        q: grid.tail_exponent_hint(),
        big_n: nn,
        virtual_node: x[nn] + h_last * ratio,
    };
    let rows: Vec<Result<Row>> = map_rows(nn + 1, |i| asm.assemble_row(i));
    let mut matrix = DMatrix::zeros(nn + 1, nn + 1);
    let mut far_field = Vec::with_capacity(nn + 1);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        let mut diag = row.far;
        for (j, &v) in row.weights.iter().enumerate() {
            if j != i {
                matrix[(i, j)] = -constant * v;
                diag += v;
            }
        }
        matrix[(i, i)] = constant * diag;
        far_field.push(constant * row.far);
    }
    Ok(NonlocalOperator {
        grid: grid.clone(),
        n,
        alpha,
        constant,
        tail_exponent: grid.tail_exponent_hint(),
        matrix,
        far_field,
    })
}

#[cfg(feature = "parallel")]
pub(crate) fn map_rows<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_rows<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;

    #[test]
    fn newtonian_and_half_laplacian_constants() {
        assert_relative_eq!(riesz_constant(3, 2.0).unwrap(), 1.0 / (4.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(
            riesz_constant(3, 2.0).unwrap(),
            newtonian_constant(3).unwrap(),
            max_relative = 1e-14
        );
        assert_relative_eq!(flap_constant(1, 1.0).unwrap(), 1.0 / PI, max_relative = 1e-14);
        let c = flap_constant(3, 0.5).unwrap();
        assert!(c.is_finite() && c > 0.0);
        assert!(matches!(flap_constant(3, 2.0), Err(Error::BadOrder { .. })));
        assert!(matches!(riesz_constant(3, 3.0), Err(Error::BadOrder { .. })));
        assert!(newtonian_constant(2).is_none());
    }

    #[test]
    fn angular_kernel_closed_forms() {
        for (r, s) in [(1.0, 0.5), (3.0, 7.0), (2.0, 2.0)] {
            assert_relative_eq!(angular_kernel(3, 0.0, r, s).unwrap(), 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(angular_kernel(1, 1.0, 2.0, 1.0).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(angular_kernel(1, 1.0, 1.0, 1.0), Err(Error::SingularDiagonal));
        assert_eq!(angular_kernel(3, 2.0, 1.0, 1.0), Err(Error::SingularDiagonal));
        // β < n - 1 is finite on the diagonal: mean of |e - θ|^{-1} over S² is 1
        assert_relative_eq!(angular_kernel(3, 1.0, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(angular_kernel(3, 1.0, 0.0, 4.0).unwrap(), 0.25);
    }

    #[test]
    fn general_dimension_matches_closed_form_for_three() {
        for (beta, r, s) in [(1.0, 1.0, 0.5), (2.5, 1.0, 1.3), (0.7, 5.0, 0.2), (2.0, 1.0, 1.001)] {
            let closed = angular_mean(3, beta, r, s);
            let quad = angular_mean_quadrature(3, beta, r, s);
            assert_relative_eq!(closed, quad, max_relative = 1e-10);
        }
    }

    #[test]
    fn difference_kernel_is_stable() {
        // (s-r)^{-2} - (s+r)^{-2} ≈ 4 r s^{-3} for r ≪ s
        let v = kernel_difference(1.0, 1e-9, 1.0);
        assert_relative_eq!(v, 4e-9, max_relative = 1e-6);
        let direct = (3.0f64 - 1.0).powf(-2.5) - 4.0f64.powf(-2.5);
        assert_relative_eq!(kernel_difference(1.5, 1.0, 3.0), direct, max_relative = 1e-13);
    }

    #[test]
    fn assembled_operator_annihilates_constants() {
        let g = Arc::new(RadialGrid::graded(&GridSpec::new(96, 100.0), 1.0).unwrap());
        for n in [1, 3] {
            for alpha in [0.4, 1.0, 1.7] {
                let op = assemble_flap_matrix(&g, n, alpha).unwrap();
                assert!(op.couplings_nonnegative());
                let out = op.apply_values(&vec![2.5; g.len()], 2.5);
                let worst = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(worst < 1e-8, "n={n} alpha={alpha} worst={worst}");
            }
        }
    }

    #[test]
    fn unsupported_dimension() {
        let g = Arc::new(RadialGrid::graded(&GridSpec::new(32, 100.0), 1.0).unwrap());
        assert_eq!(
            assemble_flap_matrix(&g, 2, 1.0).unwrap_err(),
            Error::UnsupportedDimension(2)
        );
    }
}
