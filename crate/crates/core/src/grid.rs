//! Radial grids and sampled radial functions with a power-law far field.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a graded grid: a uniform core on `[0, core_radius]`
/// followed by geometric nodes `r_max · 2^{-j/m}`, so every dyadic fraction
/// of `r_max` is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Approximate number of intervals.
    pub nodes: usize,
    pub r_max: f64,
    pub core_radius: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nodes: 512,
            r_max: 128.0,
            core_radius: 1.0,
        }
    }
}

impl GridSpec {
    pub fn new(nodes: usize, r_max: f64) -> Self {
        GridSpec {
            nodes,
            r_max,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    tail_exponent_hint: f64,
}

pub const MIN_INTERVALS: usize = 16;

impl RadialGrid {
    pub fn graded(spec: &GridSpec, tail_exponent_hint: f64) -> Result<Self> {
        let GridSpec {
            nodes: n,
            r_max,
            core_radius,
        } = *spec;
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max} must be positive")));
        }
        if !(core_radius.is_finite() && core_radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "core_radius = {core_radius} must be positive"
            )));
        }
        if n < MIN_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_INTERVALS} intervals, asked for {n}"
            )));
        }
        let nodes = if core_radius >= r_max {
            (0..=n).map(|i| r_max * i as f64 / n as f64).collect()
        } else {
            let octaves = (r_max / core_radius).log2();
            let per_octave =
                ((n as f64 / (octaves + std::f64::consts::LOG2_E)).round() as usize).max(1);
            let m = per_octave as f64;
            let geo = |j: usize| r_max * (-(j as f64) / m).exp2();
            let mut j_core = 0;
            while geo(j_core + 1) >= core_radius {
                j_core += 1;
            }
            let rc = geo(j_core);
            let ratio = (1.0 / m).exp2();
            let m0 = (1.0 / (ratio - 1.0)).ceil() as usize;
            let mut nodes: Vec<f64> = (0..m0).map(|i| rc * i as f64 / m0 as f64).collect();
            nodes.extend((0..=j_core).rev().map(geo));
            nodes
        };
        Self::from_nodes(nodes, tail_exponent_hint)
    }

    /// Validates arbitrary nodes: `r_0 = 0`, strictly increasing, at least
    /// [`MIN_INTERVALS`] intervals and consecutive spacing ratios in `[1, 4]`.
    pub fn from_nodes(nodes: Vec<f64>, tail_exponent_hint: f64) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be 0".into()));
        }
        if !(tail_exponent_hint.is_finite() && tail_exponent_hint > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "tail exponent hint {tail_exponent_hint} must be positive"
            )));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "nodes not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        for i in 1..nodes.len() - 1 {
            let ratio = (nodes[i + 1] - nodes[i]) / (nodes[i] - nodes[i - 1]);
            if !(1.0 - 1e-9..=4.0).contains(&ratio) {
                return Err(Error::InvalidGrid(format!(
                    "spacing ratio {ratio:.4} at node {i} outside [1, 4]"
                )));
            }
        }
        Ok(RadialGrid {
            nodes,
            tail_exponent_hint,
        })
    }

    pub fn with_tail_hint(&self, tail_exponent_hint: f64) -> Result<Self> {
        Self::from_nodes(self.nodes.clone(), tail_exponent_hint)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("grid is never empty")
    }

    pub fn tail_exponent_hint(&self) -> f64 {
        self.tail_exponent_hint
    }

    /// Same node set (the tail hint does not matter for compatibility).
    pub fn same_nodes(&self, other: &RadialGrid) -> bool {
        self.nodes == other.nodes
    }

    /// Index `i` with `r_i ≤ r < r_{i+1}`, clamped to the last interval.
    pub fn interval(&self, r: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Index of the node closest to `r`, if it agrees to relative `1e-10`.
    pub fn node_index(&self, r: f64) -> Option<usize> {
        let i = self.interval(r);
        [i, i + 1]
            .into_iter()
            .find(|&j| (self.nodes[j] - r).abs() <= 1e-10 * r.abs().max(1e-300))
    }

    /// Indices of nodes inside `[lo, hi]`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, &r)| r >= lo && r <= hi)
            .map(|(i, _)| i)
    }
}

/// Samples on a grid, linear between nodes, `limit + (v_N - limit)(R/r)^p`
/// beyond `R = r_max`.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    limit: f64,
    tail_power: f64,
}

impl RadialFunction {
    pub fn new(
        grid: Arc<RadialGrid>,
        values: Vec<f64>,
        limit_at_infinity: f64,
        tail_power: f64,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite value at node {i}")));
        }
        if !limit_at_infinity.is_finite() {
            return Err(Error::invalid("limit_at_infinity", "must be finite"));
        }
        if !(tail_power.is_finite() && tail_power > 0.0) {
            return Err(Error::invalid(
                "tail_power",
                format!("{tail_power} must be positive"),
            ));
        }
        Ok(RadialFunction {
            grid,
            values,
            limit: limit_at_infinity,
            tail_power,
        })
    }

    pub fn from_fn(
        grid: Arc<RadialGrid>,
        f: impl Fn(f64) -> f64,
        limit_at_infinity: f64,
        tail_power: f64,
    ) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, limit_at_infinity, tail_power)
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Self {
        let tail_power = grid.tail_exponent_hint();
        let values = vec![c; grid.len()];
        RadialFunction {
            grid,
            values,
            limit: c,
            tail_power,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn limit_at_infinity(&self) -> f64 {
        self.limit
    }

    pub fn tail_power(&self) -> f64 {
        self.tail_power
    }

    pub fn eval(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        let big_r = self.grid.r_max();
        if r >= big_r {
            let last = *self.values.last().expect("non-empty");
            return self.limit + (last - self.limit) * (big_r / r).powf(self.tail_power);
        }
        let r = r.max(0.0);
        let i = self.grid.interval(r);
        let t = (r - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Nodewise `a·self + b·other` (limits combine the same way).
    pub fn combine(&self, a: f64, other: &RadialFunction, b: f64) -> Result<Self> {
        if !self.grid.same_nodes(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(
            self.grid.clone(),
            values,
            a * self.limit + b * other.limit,
            self.tail_power.min(other.tail_power),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        RadialFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            limit: c * self.limit,
            tail_power: self.tail_power,
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        RadialFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c + v).collect(),
            limit: c + self.limit,
            tail_power: self.tail_power,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A radial source that can be evaluated anywhere on `[0, ∞)`.
pub trait RadialSource: Sync {
    fn value(&self, s: f64) -> f64;
    /// `f(s) - limit = O(s^{-tail_power})` as `s → ∞`.
    fn tail_power(&self) -> f64;
    fn limit_at_infinity(&self) -> f64 {
        0.0
    }
    /// Points where the source is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Radius outside which the source vanishes identically.
    fn support(&self) -> Option<f64> {
        None
    }
}

impl RadialSource for RadialFunction {
    fn value(&self, s: f64) -> f64 {
        self.eval(s)
    }
    fn tail_power(&self) -> f64 {
        self.tail_power
    }
    fn limit_at_infinity(&self) -> f64 {
        self.limit
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.grid.nodes()[1..].to_vec()
    }
}

type SharedFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closure-backed source.
#[derive(Clone)]
pub struct FnSource {
    f: SharedFn,
    tail_power: f64,
    breakpoints: Vec<f64>,
    support: Option<f64>,
}

impl std::fmt::Debug for FnSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnSource")
            .field("tail_power", &self.tail_power)
            .field("breakpoints", &self.breakpoints)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl FnSource {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, tail_power: f64) -> Self {
        FnSource {
            f: Arc::new(f),
            tail_power,
            breakpoints: Vec::new(),
            support: None,
        }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    /// Marks the source as vanishing for `s ≥ radius`; `radius` also becomes
    /// a breakpoint.
    pub fn with_support(mut self, radius: f64) -> Self {
        self.support = Some(radius);
        self.breakpoints.push(radius);
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        FnSource {
            f: Arc::new(move |s| c * f(s)),
            ..self.clone()
        }
    }

    /// `exp(1 - 1/(1 - (s/radius)^2))` inside the ball, zero outside.
    pub fn bump(radius: f64) -> Self {
        FnSource::new(
            move |s| {
                let t = s / radius;
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            },
            f64::INFINITY,
        )
        .with_support(radius)
    }

    /// `(1 + s²)^{-(n+α)/2}`, whose Riesz potential is a multiple of
    /// `(1 + r²)^{-(n-α)/2}`.
    pub fn eigen_source(n: usize, alpha: f64) -> Self {
        let e = -(n as f64 + alpha) / 2.0;
        FnSource::new(move |s| (1.0 + s * s).powf(e), n as f64 + alpha)
    }
}

impl RadialSource for FnSource {
    fn value(&self, s: f64) -> f64 {
        match self.support {
            Some(r) if s >= r => 0.0,
            _ => (self.f)(s),
        }
    }
    fn tail_power(&self) -> f64 {
        self.tail_power
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
    fn support(&self) -> Option<f64> {
        self.support
    }
}
