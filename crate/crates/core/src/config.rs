//! Run configuration.
//!
//! A run is described by one TOML file. Top-level keys: `command`, `seed`
//! (required, no default), `trials` (default 1000) and `output_dir`. Nested
//! sections: `[operator]`, `[test_set]`, `[regularity]`, `[width]`,
//! `[scaling]` and `[bound]`. Unknown keys anywhere are rejected.
//!
//! ```toml
//! command = "distort"
//! seed = 7
//! trials = 500
//!
//! [operator]
//! kind = "circulant"   # gaussian | circulant | identity | file
//! m = 64
//! n = 256
//! rows = "random"      # first | random | list (with row_indices)
//!
//! [test_set]
//! variant = "subspace_ball"
//! n = 256
//! d = 4
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::ensembles::{
    gaussian_operator, partial_circulant, sample_sign_vector, CirculantSpec, EmbeddingOperator,
};
use crate::error::{usage, Error, Result};
use crate::experiments::Family;
use crate::geometry::{TestSet, TestSetSpec, DEFAULT_WIDTH_SAMPLES};
use crate::numerics::{DenseMatrix, RngStream};

pub const DEFAULT_TRIALS: i64 = 1000;
pub const DEFAULT_PROBES: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Regularity,
    Width,
    Distort,
    Tails,
    Scaling,
    Baseline,
    CirculantDemo,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Regularity => "regularity",
            Command::Width => "width",
            Command::Distort => "distort",
            Command::Tails => "tails",
            Command::Scaling => "scaling",
            Command::Baseline => "baseline",
            Command::CirculantDemo => "circulant-demo",
        }
    }
}

/// Seeds may be written as integers or, above `2⁶³ − 1`, as decimal strings.
fn seed_value<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(v) if v >= 0 => Ok(v as u64),
        Raw::Int(v) => Err(serde::de::Error::custom(format!(
            "seed must be nonnegative, got {v}"
        ))),
        Raw::Text(s) => s
            .trim()
            .parse()
            .map_err(|e| serde::de::Error::custom(format!("seed: {e}"))),
    }
}

fn seed_out<S: serde::Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match i64::try_from(*seed) {
        Ok(v) => s.serialize_i64(v),
        Err(_) => s.serialize_str(&seed.to_string()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(deserialize_with = "seed_value", serialize_with = "seed_out")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_set: Option<TestSetConfig>,
    #[serde(default)]
    pub regularity: RegularityConfig,
    #[serde(default)]
    pub width: WidthConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default)]
    pub bound: BoundConfig,
}

fn default_trials() -> i64 {
    DEFAULT_TRIALS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Gaussian,
    Circulant,
    Identity,
    File,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSelection {
    #[default]
    First,
    Random,
    List,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub rows: RowSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_indices: Option<Vec<usize>>,
    /// Matrix text file for `kind = "file"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Either an inline test set or `file = "<key:value file>"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityMode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_k: Option<usize>,
    #[serde(default)]
    pub mode: RegularityMode,
    /// Random probes per sparsity level in sampled mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    /// Fixed δ for `k*`; when absent `δ̂` is selected from the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl WidthConfig {
    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_WIDTH_SAMPLES)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAxisKind {
    #[default]
    Rows,
    SubspaceDim,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub family: Family,
    #[serde(default)]
    pub axis: ScalingAxisKind,
    /// Row counts (`rows`) or subspace dimensions (`subspace_dim`).
    pub values: Vec<usize>,
    pub n: usize,
    /// Fixed row count for the `subspace_dim` axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_u")]
    pub u: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            delta: None,
            u: 1.0,
        }
    }
}

fn default_u() -> f64 {
    1.0
}

/// Independent child streams of the master seed, one per role.
pub mod streams {
    pub const OPERATOR: u64 = 0;
    pub const TEST_SET: u64 = 1;
    pub const TRIALS: u64 = 2;
    pub const WIDTH: u64 = 3;
    pub const REGULARITY: u64 = 4;
    pub const BASELINE: u64 = 5;
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative paths inside it are
    /// rewritten against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("config: cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.rebase(&base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(op) = self.operator.as_mut() {
            op.path.as_mut().map(fix);
        }
        if let Some(ts) = self.test_set.as_mut() {
            ts.file.as_mut().map(fix);
            ts.points_file.as_mut().map(fix);
        }
        if let Some(out) = self.output_dir.as_mut() {
            fix(out);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return usage("trials must be ≥ 1");
        }
        if let Some(op) = &self.operator {
            op.validate()?;
        }
        if let Some(s) = self.regularity.probes {
            if s == 0 {
                return usage("regularity.probes must be ≥ 1");
            }
        }
        if let Some(k) = self.regularity.max_k {
            if k == 0 {
                return usage("regularity.max_k must be ≥ 1");
            }
        }
        if let Some(d) = self.regularity.delta {
            if d.is_nan() || d <= 0.0 {
                return usage("regularity.delta must be positive");
            }
        }
        if let Some(d) = self.bound.delta {
            if d.is_nan() || d <= 0.0 {
                return usage("bound.delta must be positive");
            }
        }
        if self.bound.u.is_nan() || self.bound.u < 1.0 {
            return usage("bound.u must be ≥ 1");
        }
        if self.width.samples() < 100 {
            return usage("width.samples must be ≥ 100");
        }
        let needs_operator = !matches!(self.command, Command::Width | Command::Scaling);
        if needs_operator && self.operator.is_none() {
            return usage(format!(
                "[operator] is required for {}",
                self.command.as_str()
            ));
        }
        let needs_set = !matches!(self.command, Command::Regularity);
        let set_optional = match self.command {
            Command::Scaling => matches!(
                self.scaling.as_ref().map(|s| s.axis),
                Some(ScalingAxisKind::SubspaceDim)
            ),
            _ => false,
        };
        if needs_set && !set_optional && self.test_set.is_none() {
            return usage(format!(
                "[test_set] is required for {}",
                self.command.as_str()
            ));
        }
        if self.command == Command::Scaling {
            let Some(s) = &self.scaling else {
                return usage("[scaling] is required for scaling");
            };
            if s.values.len() < 4 {
                return usage(format!(
                    "scaling.values needs at least 4 points, got {}",
                    s.values.len()
                ));
            }
            if s.axis == ScalingAxisKind::SubspaceDim && s.m.is_none() {
                return usage("scaling.m is required for the subspace_dim axis");
            }
        }
        if self.command == Command::Tails && self.bound.delta.is_none() {
            return usage("bound.delta is required for tails");
        }
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.trials as usize
    }

    pub fn master(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }

    pub fn stream(&self, role: u64) -> RngStream {
        self.master().child(role)
    }

    pub fn operator(&self) -> Result<EmbeddingOperator> {
        match &self.operator {
            Some(op) => op.build(self.stream(streams::OPERATOR)),
            None => usage("[operator] is required"),
        }
    }

    pub fn test_set(&self) -> Result<TestSet> {
        let spec = self.test_set_spec()?;
        spec.build(Path::new(""), self.stream(streams::TEST_SET))
    }

    pub fn test_set_spec(&self) -> Result<TestSetSpec> {
        match &self.test_set {
            Some(ts) => ts.resolve(),
            None => usage("[test_set] is required"),
        }
    }

    /// The config as re-runnable TOML: test-set files are inlined and every
    /// path is absolute.
    pub fn effective(&self, output_dir: &Path) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.output_dir = Some(output_dir.to_path_buf());
        if let Some(ts) = &self.test_set {
            if ts.file.is_some() {
                cfg.test_set = Some(TestSetConfig::from_spec(ts.resolve()?));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("config: {e}")))
    }
}

impl OperatorConfig {
    fn validate(&self) -> Result<()> {
        match self.kind {
            OperatorKind::File => {
                if self.path.is_none() {
                    return usage("operator.path is required for kind = \"file\"");
                }
            }
            OperatorKind::Identity => {
                let n = self
                    .n
                    .ok_or_else(|| Error::Usage("operator.n is required".into()))?;
                if n == 0 {
                    return usage("operator.n must be ≥ 1");
                }
                if self.m.is_some_and(|m| m != n) {
                    return usage("operator.m must equal operator.n for the identity");
                }
            }
            OperatorKind::Gaussian | OperatorKind::Circulant => {
                let m = self
                    .m
                    .ok_or_else(|| Error::Usage("operator.m is required".into()))?;
                let n = self
                    .n
                    .ok_or_else(|| Error::Usage("operator.n is required".into()))?;
                if m == 0 || n == 0 {
                    return usage("operator.m and operator.n must be ≥ 1");
                }
                if m > n {
                    return usage(format!("operator.m ({m}) must not exceed operator.n ({n})"));
                }
            }
        }
        if self.rows == RowSelection::List && self.row_indices.is_none() {
            return usage("operator.row_indices is required when rows = \"list\"");
        }
        Ok(())
    }

    /// Gaussian entries come from `r`; a circulant generator from
    /// `r.child(0)` and a random row set from `r.child(1)`.
    pub fn build(&self, r: RngStream) -> Result<EmbeddingOperator> {
        match self.kind {
            OperatorKind::Gaussian => {
                gaussian_operator(self.m.unwrap_or(0), self.n.unwrap_or(0), r)
            }
            OperatorKind::Identity => Ok(EmbeddingOperator::identity(self.n.unwrap_or(0))),
            OperatorKind::Circulant => {
                let (m, n) = (self.m.unwrap_or(0), self.n.unwrap_or(0));
                let xi = sample_sign_vector(n, r.child(0))?;
                let spec = match self.rows {
                    RowSelection::First => CirculantSpec::first_rows(xi, m)?,
                    RowSelection::Random => CirculantSpec::random_rows(xi, m, r.child(1))?,
                    RowSelection::List => {
                        let rows = self.row_indices.clone().unwrap_or_default();
                        if rows.len() != m {
                            return usage(format!(
                                "operator.row_indices has {} entries but m = {m}",
                                rows.len()
                            ));
                        }
                        CirculantSpec::new(xi, rows)?
                    }
                };
                partial_circulant(spec)
            }
            OperatorKind::File => {
                let path = self.path.as_ref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Usage(format!(
                        "operator.path: cannot read {}: {e}",
                        path.display()
                    ))
                })?;
                let a = DenseMatrix::from_text(&text)?;
                if self.m.is_some_and(|m| m != a.rows()) || self.n.is_some_and(|n| n != a.cols()) {
                    return usage(format!(
                        "operator.path holds a {}x{} matrix, which disagrees with operator.m/n",
                        a.rows(),
                        a.cols()
                    ));
                }
                Ok(EmbeddingOperator::Dense(a))
            }
        }
    }
}

impl TestSetConfig {
    pub fn from_spec(s: TestSetSpec) -> Self {
        Self {
            file: None,
            variant: Some(s.variant),
            n: Some(s.n),
            k: s.k,
            d: s.d,
            radius: s.radius,
            points: s.points,
            points_file: s.points_file,
            seed: s.seed,
            stream: s.stream,
        }
    }

    pub fn resolve(&self) -> Result<TestSetSpec> {
        if let Some(path) = &self.file {
            let inline = self.variant.is_some()
                || self.n.is_some()
                || self.k.is_some()
                || self.d.is_some()
                || self.radius.is_some()
                || self.points.is_some()
                || self.points_file.is_some()
                || self.seed.is_some()
                || self.stream.is_some();
            if inline {
                return usage("test_set.file cannot be combined with inline test_set fields");
            }
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Usage(format!(
                    "test_set.file: cannot read {}: {e}",
                    path.display()
                ))
            })?;
            let mut spec = TestSetSpec::from_key_values(&text)?;
            if let Some(p) = spec.points_file.as_mut() {
                if p.is_relative() {
                    *p = path.parent().unwrap_or(Path::new("")).join(&*p);
                }
            }
            return Ok(spec);
        }
        let variant = self
            .variant
            .clone()
            .ok_or_else(|| Error::Usage("test_set.variant is required".into()))?;
        let n = self
            .n
            .ok_or_else(|| Error::Usage("test_set.n is required".into()))?;
        Ok(TestSetSpec {
            variant,
            n,
            k: self.k,
            d: self.d,
            radius: self.radius,
            points: self.points,
            points_file: self.points_file.clone(),
            seed: self.seed,
            stream: self.stream,
        })
    }
}
