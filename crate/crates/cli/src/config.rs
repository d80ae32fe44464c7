//! Run configuration, read from a TOML or JSON document.

use std::path::{Path, PathBuf};

use fraclap::grid::GridSpec;
use fraclap::potential::EnvelopeOptions;
use fraclap::solver::SolveOptions;
use fraclap::weights::{DecayProfile, Shape};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keyword {
    #[serde(rename = "auto")]
    Auto,
}

/// `"auto"` takes the largest θ passing the residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta {
    Auto(Keyword),
    Value(f64),
}

impl Theta {
    pub fn fixed(self) -> Option<f64> {
        match self {
            Theta::Auto(_) => None,
            Theta::Value(v) => Some(v),
        }
    }
}

impl Default for Theta {
    fn default() -> Self {
        Theta::Auto(Keyword::Auto)
    }
}

/// Source handed to the `potential` and `bounds` subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// `ω(s) (1+s)^{-τ}`
    Weighted,
    /// `(1+s²)^{-(n+α)/2}`, whose potential is a multiple of `(1+r²)^{-(n-α)/2}`.
    ClosedFormPair,
    Bump { radius: f64 },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub alpha: f64,
    pub tau: f64,
    pub p: f64,
    pub theta: Theta,
    pub theta1_budget: f64,
    pub a: f64,
    pub a_list: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Two-column `r,omega` table replacing `profile`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_csv: Option<PathBuf>,
    pub profile: DecayProfile,
    pub grid: GridSpec,
    pub source: SourceSpec,
    pub shape_k: Shape,
    pub shape_big_k: Shape,
    pub solve: SolveOptions,
    pub envelope: EnvelopeOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            alpha: 1.0,
            tau: 2.0,
            p: 2.0,
            theta: Theta::default(),
            theta1_budget: 1.0,
            a: 0.5,
            a_list: vec![0.3, 0.5, 0.7],
            seed: 0,
            out_dir: PathBuf::from("fraclap-out"),
            profile_csv: None,
            profile: DecayProfile::shifted_log_power(2.0),
            grid: GridSpec::default(),
            source: SourceSpec::Weighted,
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
            solve: SolveOptions::default(),
            envelope: EnvelopeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, format: Format) -> Result<Self> {
        match format {
            Format::Toml => toml::from_str(text).map_err(|e| CliError::Config(e.to_string())),
            Format::Json => serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Toml => toml::to_string(self).map_err(|e| CliError::Config(e.to_string())),
            Format::Json => serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, Format::of(path))
    }

    /// The weight, read from `profile_csv` when that is set.
    pub fn omega(&self) -> Result<DecayProfile> {
        match &self.profile_csv {
            None => Ok(self.profile.clone()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Ok(DecayProfile::from_csv(&text, None)?)
            }
        }
    }

    /// Range checks that need no numerics.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(CliError::Invalid { name, reason });
        if !(self.n == 1 || self.n == 3) {
            return bad("n", format!("{} is not supported, use 1 or 3", self.n));
        }
        let upper = (self.n as f64).min(2.0);
        if !(self.alpha > 0.0 && self.alpha < upper) {
            return bad("alpha", format!("{} must lie in (0, {upper})", self.alpha));
        }
        if !(self.tau.is_finite() && self.tau >= self.alpha) {
            return bad("tau", format!("{} must be at least alpha = {}", self.tau, self.alpha));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return bad("p", format!("{} must exceed 1", self.p));
        }
        if let Theta::Value(t) = self.theta {
            if !(t.is_finite() && t >= 0.0) {
                return bad("theta", format!("{t} must be nonnegative"));
            }
        }
        if !(self.theta1_budget.is_finite() && self.theta1_budget > 0.0) {
            return bad("theta1_budget", format!("{} must be positive", self.theta1_budget));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return bad("a", format!("{} must lie in (0, 1)", self.a));
        }
        if self.a_list.is_empty() {
            return bad("a_list", "must not be empty".into());
        }
        if let Some(a) = self.a_list.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad("a_list", format!("{a} must lie in (0, 1)"));
        }
        if !(self.grid.nodes >= 32) {
            return bad("grid.nodes", format!("{} is below 32", self.grid.nodes));
        }
        if !(self.grid.r_max.is_finite() && self.grid.r_max > self.grid.core_radius && self.grid.core_radius > 0.0) {
            return bad(
                "grid.r_max",
                format!("need 0 < core_radius < r_max, got {} and {}", self.grid.core_radius, self.grid.r_max),
            );
        }
        if let SourceSpec::Bump { radius } = self.source {
            if !(radius.is_finite() && radius > 0.0) {
                return bad("source.radius", format!("{radius} must be positive"));
            }
        }
        if !(self.solve.max_iter >= 1 && self.solve.tol > 0.0) {
            return bad("solve", "max_iter must be at least 1 and tol positive".into());
        }
        if !(self.envelope.r_start > 0.0 && self.envelope.r_end > self.envelope.r_start) {
            return bad("envelope", "need 0 < r_start < r_end".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_both_formats() {
        let c = RunConfig::default();
        for f in [Format::Toml, Format::Json] {
            let text = c.render(f).unwrap();
            assert_eq!(RunConfig::parse(&text, f).unwrap(), c, "{text}");
        }
    }

    #[test]
    fn theta_reads_keyword_or_number() {
        let c = RunConfig::parse("theta = \"auto\"", Format::Toml).unwrap();
        assert_eq!(c.theta.fixed(), None);
        let c = RunConfig::parse("{\"theta\": 0.25}", Format::Json).unwrap();
        assert_eq!(c.theta.fixed(), Some(0.25));
        assert!(RunConfig::parse("theta = \"often\"", Format::Toml).is_err());
        assert!(RunConfig::parse("tua = 2.0", Format::Toml).is_err());
    }
}
