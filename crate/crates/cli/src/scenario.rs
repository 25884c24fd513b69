//! Scenario files: flat TOML with one table per concern.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

/// Checks in the order they always run.
pub const CHECK_ORDER: [Check; 7] = [
    Check::LemmaA1,
    Check::Pi0,
    Check::Idempotency,
    Check::Residue,
    Check::Commutator,
    Check::Oracle,
    Check::Truncation,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum Check {
    #[serde(rename = "lemma-a1")]
    LemmaA1,
    #[serde(rename = "pi0")]
    Pi0,
    #[serde(rename = "idempotency")]
    Idempotency,
    #[serde(rename = "residue")]
    Residue,
    #[serde(rename = "commutator")]
    Commutator,
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "truncation")]
    Truncation,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::LemmaA1 => "lemma-a1",
            Check::Pi0 => "pi0",
            Check::Idempotency => "idempotency",
            Check::Residue => "residue",
            Check::Commutator => "commutator",
            Check::Oracle => "oracle",
            Check::Truncation => "truncation",
        }
    }

    /// Whether the check needs a projection symbol.
    pub fn needs_projection(self) -> bool {
        !matches!(self, Check::LemmaA1 | Check::Commutator)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub checks: Vec<Check>,
    pub manifold: Option<ManifoldTable>,
    pub field: Option<FieldTable>,
    #[serde(default)]
    pub projection: ProjectionTable,
    pub lemma_a1: Option<LemmaA1Table>,
    pub commutator: Option<CommutatorTable>,
    #[serde(default)]
    pub truncation: TruncationTable,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldTable {
    pub dim: usize,
    pub n: usize,
    /// Cosphere directions; fixed at 2 on the circle.
    pub dirs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaKind {
    /// `diag(I_rank, 0)`.
    Diagonal,
    /// A seeded non-self-adjoint idempotent of the given rank.
    Oblique,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldTable {
    pub fiber: usize,
    pub rank: usize,
    #[serde(default = "default_beta")]
    pub beta: BetaKind,
    pub epsilon: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: usize,
    #[serde(default = "default_theta_bandwidth")]
    pub theta_bandwidth: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub seed: u64,
}

fn default_beta() -> BetaKind {
    BetaKind::Diagonal
}
fn default_bandwidth() -> usize {
    2
}
fn default_theta_bandwidth() -> usize {
    1
}
fn default_margin() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionTable {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_order() -> usize {
    4
}
fn default_radius() -> f64 {
    0.5
}
fn default_nodes() -> usize {
    32
}

impl Default for ProjectionTable {
    fn default() -> Self {
        Self {
            order: default_order(),
            radius: default_radius(),
            nodes: default_nodes(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaA1Table {
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_sizes")]
    pub max_size: usize,
    #[serde(default = "default_distances")]
    pub distances: Vec<f64>,
    #[serde(default = "default_node_counts")]
    pub nodes: Vec<usize>,
}

fn default_sizes() -> usize {
    4
}
fn default_distances() -> Vec<f64> {
    vec![1.0, 3.0]
}
fn default_node_counts() -> Vec<usize> {
    vec![8, 16, 32, 64, 128]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorTable {
    pub pairs: usize,
    pub seed: u64,
    #[serde(default = "default_commutator_fiber")]
    pub fiber: usize,
    /// Grid for the pairs; defaults to the scenario's manifold.
    pub n: Option<usize>,
    pub dirs: Option<usize>,
}

fn default_commutator_fiber() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TruncationTable {
    /// Bump interval `[lo, hi]` of a no-margin comparison field.
    pub counterexample: Option<[f64; 2]>,
}

/// A parse or validation failure, with a location when one is known.
#[derive(Debug)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.origin, l, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: origin.clone(),
            line: None,
            message: e.to_string(),
        })?;
        let s = Self::parse(&text, &origin)?;
        Ok((s, text))
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError {
            origin: origin.into(),
            line: e.span().map(|sp| text[..sp.start.min(text.len())].matches('\n').count() + 1),
            message: e.message().trim().to_string(),
        })?;
        s.validate().map_err(|message| ConfigError {
            origin: origin.into(),
            line: None,
            message,
        })?;
        Ok(s)
    }

    /// Ranges the pipeline accepts; everything else is refused before any
    /// computation starts.
    pub fn validate(&self) -> Result<(), String> {
        let needs_field = self.checks.iter().any(|c| c.needs_projection());
        if needs_field {
            let m = self.manifold.as_ref().ok_or("checks need a [manifold] table")?;
            let f = self.field.as_ref().ok_or("checks need a [field] table")?;
            if !(m.dim == 1 || m.dim == 2) {
                return Err(format!("manifold.dim must be 1 or 2, got {}", m.dim));
            }
            if m.n < 8 || m.n % 2 != 0 {
                return Err(format!("manifold.n must be even and at least 8, got {}", m.n));
            }
            if m.dim == 2 && m.dirs.is_none() {
                return Err("manifold.dirs is required on the torus".into());
            }
            if f.fiber == 0 || f.fiber > 8 {
                return Err(format!("field.fiber must lie in 1..=8, got {}", f.fiber));
            }
            if f.rank > f.fiber {
                return Err(format!("field.rank {} exceeds field.fiber {}", f.rank, f.fiber));
            }
            if !(f.epsilon >= 0.0 && f.epsilon < 1.0) {
                return Err(format!("field.epsilon must lie in [0, 1), got {}", f.epsilon));
            }
            if !(f.margin > 0.0) {
                return Err(format!("field.margin must be positive, got {}", f.margin));
            }
            let p = &self.projection;
            if p.order > 8 {
                return Err(format!("projection.order must be at most 8, got {}", p.order));
            }
        }
        if self.checks.contains(&Check::LemmaA1) {
            let l = self.lemma_a1.as_ref().ok_or("check lemma-a1 needs a [lemma_a1] table")?;
            if l.count == 0 || l.max_size == 0 || l.nodes.is_empty() || l.distances.is_empty() {
                return Err("lemma_a1 needs positive count and max_size and non-empty lists".into());
            }
            if l.distances.iter().any(|d| !(*d > 0.0)) || l.nodes.contains(&0) {
                return Err("lemma_a1 distances and node counts must be positive".into());
            }
        }
        if self.checks.contains(&Check::Commutator) {
            if self.manifold.is_none() {
                return Err("check commutator needs a [manifold] table".into());
            }
            let c = self.commutator.as_ref().ok_or("check commutator needs a [commutator] table")?;
            if c.pairs == 0 || c.fiber == 0 {
                return Err("commutator.pairs and commutator.fiber must be positive".into());
            }
            if c.n.is_some_and(|n| n < 8 || n % 2 != 0) {
                return Err("commutator.n must be even and at least 8".into());
            }
        }
        if let Some([lo, hi]) = self.truncation.counterexample {
            if !(lo < hi) {
                return Err(format!("truncation.counterexample must be increasing, got [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    /// Requested checks, deduplicated, in [`CHECK_ORDER`].
    pub fn ordered_checks(&self) -> Vec<Check> {
        CHECK_ORDER.into_iter().filter(|c| self.checks.contains(c)).collect()
    }
}
