//! TOML run configuration.
//!
//! ```toml
//! model = "xyz"
//! out = "runs/xyz-2x2"
//!
//! [xyz]
//! jx = 0.9
//! lx = 2
//! ly = 2
//!
//! [sweep]
//! param = "Jy"
//! min = 0.9
//! max = 1.1
//! step = 0.005
//! metrics = ["chi_f", "chi_t"]
//!
//! [solver]
//! method = "auto"
//! ```

use std::path::{Path, PathBuf};

use dissipative_core::kerr::{default_n_max, KerrParams};
use dissipative_core::sweep::{self, MetricSet, SolverChoice, DELTA_CHI_F, DELTA_CHI_T};
use dissipative_core::xyz::{BlochVector, BondMultiplicity, XYZParams, DEFAULT_K_RESOLUTION};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config syntax: {0}")]
    Syntax(String),

    #[error("{}{key}: {message}", .line.map(|l| format!("config line {l}, ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        key: String,
        message: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Xyz,
    Kerr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ChiF,
    ChiT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "yes")]
    pub cache: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xyz: Option<XyzSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kerr: Option<KerrSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub mean_field: MeanFieldSection,
    #[serde(default)]
    pub map: MapSection,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XyzSection {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub gamma: f64,
    pub lx: usize,
    pub ly: usize,
    pub coordination: usize,
    pub bonds: BondMultiplicity,
}

impl Default for XyzSection {
    fn default() -> Self {
        let p = XYZParams::default();
        Self {
            jx: p.jx,
            jy: p.jy,
            jz: p.jz,
            gamma: p.gamma,
            lx: p.lx,
            ly: p.ly,
            coordination: p.coordination,
            bonds: p.bonds,
        }
    }
}

impl XyzSection {
    pub fn params(&self) -> XYZParams {
        XYZParams {
            jx: self.jx,
            jy: self.jy,
            jz: self.jz,
            gamma: self.gamma,
            lx: self.lx,
            ly: self.ly,
            coordination: self.coordination,
            bonds: self.bonds,
            ..XYZParams::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KerrSection {
    pub u: f64,
    /// Drive used where no sweep overrides it.
    pub g: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Fock cutoff; the default is the truncation policy at the largest
    /// drive of the sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl Default for KerrSection {
    fn default() -> Self {
        Self {
            u: 0.05,
            g: 1.0,
            delta: 0.0,
            gamma: 1.0,
            n_max: None,
        }
    }
}

impl KerrSection {
    /// Parameters at drive `g` with the cutoff sized for drives up to `g_max`.
    pub fn params(&self, g: f64, g_max: f64) -> KerrParams {
        KerrParams {
            delta: self.delta,
            u: self.u,
            g,
            gamma: self.gamma,
            n_max: self
                .n_max
                .unwrap_or_else(|| default_n_max(self.u, g_max.max(g), self.gamma)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Defaults to 1e-3 when χ_F is requested, else 1e-4.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_p: Option<f64>,
    pub metrics: Vec<Metric>,
    /// Enables a second pass at this spacing around the coarse extremum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_step: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            param: None,
            min: None,
            max: None,
            step: None,
            values: None,
            delta_p: None,
            metrics: vec![Metric::ChiF, Metric::ChiT],
            refine_step: None,
        }
    }
}

impl SweepSection {
    pub fn metric_set(&self) -> MetricSet {
        MetricSet {
            chi_f: self.metrics.contains(&Metric::ChiF),
            chi_t: self.metrics.contains(&Metric::ChiT),
        }
    }

    pub fn delta_p(&self) -> f64 {
        self.delta_p.unwrap_or(if self.metrics.contains(&Metric::ChiF) {
            DELTA_CHI_F
        } else {
            DELTA_CHI_T
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: SolverChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub conv_tol: f64,
    pub t_max: f64,
    pub residual_tol: f64,
    /// Solve in the symmetric sector of the model when one is known.
    pub symmetry: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: SolverChoice::Auto,
            dt: None,
            conv_tol: dissipative_core::steady::DEFAULT_CONV_TOL,
            t_max: dissipative_core::steady::DEFAULT_T_MAX,
            residual_tol: dissipative_core::steady::ED_RESIDUAL_TOL,
            symmetry: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanFieldSection {
    pub conv_tol: f64,
    pub t_max: f64,
    /// Initial Bloch vector `[sx, sy, sz]` of spin runs. The default seed has
    /// sx = sy, which lies on the stable manifold of the all-down state when
    /// Jx + Jy = 2 Jz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<[f64; 3]>,
}

impl Default for MeanFieldSection {
    fn default() -> Self {
        Self {
            conv_tol: 1e-10,
            t_max: 1e6,
            seed: None,
        }
    }
}

impl MeanFieldSection {
    pub fn bloch_seed(&self) -> Result<BlochVector, dissipative_core::Error> {
        match self.seed {
            Some([x, y, z]) => BlochVector::new(x, y, z),
            None => Ok(BlochVector::tilted_seed()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub resolution: usize,
}

impl Default for MapSection {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_K_RESOLUTION,
        }
    }
}

/// A config together with the text it came from, for line-level messages.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_str(&source)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(source: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(source).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let loaded = Self {
            config,
            source: source.to_owned(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn invalid(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            line: line_of(&self.source, section, key),
            key: if section.is_empty() {
                key.to_owned()
            } else {
                format!("{section}.{key}")
            },
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let positive = |section: &str, key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(self.invalid(section, key, format!("must be positive and finite, got {v}")))
            }
        };
        match c.model {
            ModelKind::Xyz => {
                if c.kerr.is_some() {
                    return Err(self.invalid("kerr", "", "a [kerr] table in an xyz config"));
                }
                let x = c.xyz.clone().unwrap_or_default();
                positive("xyz", "gamma", x.gamma)?;
                for (k, v) in [("jx", x.jx), ("jy", x.jy), ("jz", x.jz)] {
                    if !v.is_finite() {
                        return Err(self.invalid("xyz", k, "must be finite"));
                    }
                }
                if x.lx == 0 || x.ly == 0 {
                    return Err(self.invalid("xyz", if x.lx == 0 { "lx" } else { "ly" }, "must be at least 1"));
                }
                if x.coordination == 0 {
                    return Err(self.invalid("xyz", "coordination", "must be at least 1"));
                }
                if let Err(e) = x.params().validate() {
                    return Err(self.invalid("xyz", "lx", e.to_string()));
                }
            }
            ModelKind::Kerr => {
                if c.xyz.is_some() {
                    return Err(self.invalid("xyz", "", "an [xyz] table in a kerr config"));
                }
                let k = c.kerr.clone().unwrap_or_default();
                positive("kerr", "u", k.u)?;
                positive("kerr", "gamma", k.gamma)?;
                if !(k.g >= 0.0 && k.g.is_finite()) {
                    return Err(self.invalid("kerr", "g", "must be nonnegative"));
                }
                if !k.delta.is_finite() {
                    return Err(self.invalid("kerr", "delta", "must be finite"));
                }
                if k.n_max.is_some_and(|n| n < 2) {
                    return Err(self.invalid("kerr", "n_max", "must be at least 2"));
                }
            }
        }
        if let Some(s) = &c.sweep {
            self.param_name()?;
            if s.metrics.is_empty() {
                return Err(self.invalid("sweep", "metrics", "no metric requested"));
            }
            if let Some(d) = s.delta_p {
                positive("sweep", "delta_p", d)?;
            }
            if let Some(r) = s.refine_step {
                positive("sweep", "refine_step", r)?;
                if s.delta_p() > r * (1.0 + 1e-9) {
                    return Err(self.invalid(
                        "sweep",
                        "refine_step",
                        format!("smaller than delta_p = {}", s.delta_p()),
                    ));
                }
            }
            let g = self.grid()?;
            if c.model == ModelKind::Kerr && g[0] < 0.0 {
                return Err(self.invalid("sweep", "min", "the drive must be nonnegative"));
            }
            if let Err(e) = sweep::validate_grid(&g, s.delta_p()) {
                let key = if s.delta_p.is_some() { "delta_p" } else { "step" };
                return Err(self.invalid("sweep", key, e.to_string()));
            }
        }
        let s = &c.solver;
        positive("solver", "conv_tol", s.conv_tol)?;
        positive("solver", "t_max", s.t_max)?;
        positive("solver", "residual_tol", s.residual_tol)?;
        if let Some(dt) = s.dt {
            positive("solver", "dt", dt)?;
        }
        positive("mean_field", "conv_tol", c.mean_field.conv_tol)?;
        positive("mean_field", "t_max", c.mean_field.t_max)?;
        if let Err(e) = c.mean_field.bloch_seed() {
            return Err(self.invalid("mean_field", "seed", e.to_string()));
        }
        if c.map.resolution < 2 {
            return Err(self.invalid("map", "resolution", "must be at least 2"));
        }
        Ok(())
    }

    /// Swept parameter, defaulting to `Jy` or `G`.
    pub fn param_name(&self) -> Result<String, ConfigError> {
        let c = &self.config;
        let name = c.sweep.as_ref().and_then(|s| s.param.clone());
        match (c.model, name.as_deref()) {
            (ModelKind::Xyz, None) => Ok("Jy".into()),
            (ModelKind::Xyz, Some(p @ ("Jx" | "Jy" | "Jz"))) => Ok(p.into()),
            (ModelKind::Kerr, None | Some("G")) => Ok("G".into()),
            (_, Some(other)) => Err(self.invalid(
                "sweep",
                "param",
                format!("cannot sweep {other:?} for this model (Jx, Jy, Jz for xyz; G for kerr)"),
            )),
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>, ConfigError> {
        let s = self
            .config
            .sweep
            .as_ref()
            .ok_or_else(|| self.invalid("sweep", "", "a [sweep] table is required"))?;
        let g = match (&s.values, s.min, s.max, s.step) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(self.invalid("sweep", "values", "empty grid"));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(self.invalid("sweep", "values", "non-finite grid value"));
                }
                if v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(self.invalid("sweep", "values", "grid must be strictly increasing"));
                }
                v.clone()
            }
            (None, Some(lo), Some(hi), Some(step)) => {
                if !(step > 0.0) {
                    return Err(self.invalid("sweep", "step", format!("must be positive, got {step}")));
                }
                if !(hi >= lo) {
                    return Err(self.invalid("sweep", "max", format!("empty grid: max {hi} < min {lo}")));
                }
                sweep::grid(lo, hi, step).map_err(|e| self.invalid("sweep", "step", e.to_string()))?
            }
            _ => return Err(self.invalid("sweep", "", "give either values = [...] or all of min, max and step")),
        };
        Ok(g)
    }
}

/// 1-based line of `key` inside `[section]`; the section header when the key
/// is absent or empty.
pub fn line_of(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_owned();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XYZ: &str = r#"
model = "xyz"

[xyz]
jx = 0.9
lx = 2
ly = 3

[sweep]
min = 0.95
max = 1.1
step = 0.01
"#;

    #[test]
    fn round_trip() {
        let a = LoadedConfig::from_str(XYZ).unwrap().config;
        let text = a.to_toml();
        let b = LoadedConfig::from_str(&text).unwrap().config;
        assert_eq!(a, b);
        assert_eq!(text, b.to_toml());
    }

    #[test]
    fn defaults() {
        let c = LoadedConfig::from_str(XYZ).unwrap();
        assert_eq!(c.param_name().unwrap(), "Jy");
        assert_eq!(c.grid().unwrap().len(), 16);
        let s = c.config.sweep.as_ref().unwrap();
        assert_eq!(s.delta_p(), 1e-3);
        assert_eq!(s.metric_set(), MetricSet::BOTH);
        assert!(c.config.cache);
        assert_eq!(c.config.xyz.unwrap().params().n_sites(), 6);
    }

    #[test]
    fn errors_point_at_lines() {
        let bad = XYZ.replace("step = 0.01", "step = -0.01");
        let err = LoadedConfig::from_str(&bad).unwrap_err().to_string();
        assert!(err.starts_with("config line 12, sweep.step"), "{err}");

        let empty = "model = \"xyz\"\n[sweep]\nvalues = []\n";
        let err = LoadedConfig::from_str(empty).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("empty grid"), "{err}");

        let unknown = XYZ.replace("jx = 0.9", "jq = 0.9");
        assert!(matches!(LoadedConfig::from_str(&unknown), Err(ConfigError::Syntax(_))));

        let wrong = XYZ.replace("[sweep]", "[sweep]\nparam = \"G\"");
        let err = LoadedConfig::from_str(&wrong).unwrap_err().to_string();
        assert!(err.contains("sweep.param"), "{err}");
    }

    #[test]
    fn kerr_cutoff_policy() {
        let c = LoadedConfig::from_str("model = \"kerr\"\n[kerr]\nu = 0.05\n").unwrap();
        let k = c.config.kerr.unwrap();
        assert_eq!(k.params(1.0, 2.0).n_max, 67);
        assert_eq!(k.params(0.5, 0.5).n_max, 15);
    }

    #[test]
    fn delta_larger_than_spacing_is_rejected() {
        let bad = XYZ.replace("step = 0.01", "step = 0.01\ndelta_p = 0.05");
        let err = LoadedConfig::from_str(&bad).unwrap_err().to_string();
        assert!(err.contains("sweep.delta_p"), "{err}");
    }
}
