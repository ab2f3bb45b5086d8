use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::AuditConfig;
use crate::constructions::ConstructionOptions;
use crate::error::{Result, WallError};
use crate::fields::MaterialParams;
use crate::minimize::{Constraint, RelaxOptions};
use crate::sweep::{GridPolicy, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub d: f64,
    pub q: f64,
    pub t: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { d: 1.0, q: 1e-3, t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossoverConfig {
    pub q_values: Vec<f64>,
    pub bracket: [f64; 2],
    pub rel_width: f64,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            q_values: vec![1e-3, 1e-4],
            bracket: [2.0, 16.0],
            rel_width: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Directory for outputs whose path is not given on the command line.
    pub dir: Option<PathBuf>,
    pub svg: bool,
}

/// Everything a run depends on; embedded verbatim in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub params: ParamsConfig,
    pub grid: GridPolicy,
    pub construction: ConstructionOptions,
    pub relax: RelaxOptions,
    pub sweep: SweepSection,
    pub crossover: CrossoverConfig,
    pub audit: AuditSection,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240917,
            params: ParamsConfig::default(),
            grid: GridPolicy::default(),
            construction: ConstructionOptions::default(),
            relax: RelaxOptions::default(),
            sweep: SweepSection::default(),
            crossover: CrossoverConfig::default(),
            audit: AuditSection::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub q_values: Vec<f64>,
    pub t_over_d: Vec<f64>,
    pub bloch_max_iters: usize,
    pub neel_max_iters: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            q_values: s.q_values,
            t_over_d: s.t_over_d,
            bloch_max_iters: s.relax_bloch.max_iters,
            neel_max_iters: s.relax_neel.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditSection {
    pub q: f64,
    pub t_over_d: f64,
    pub perturbations: usize,
    pub max_iters: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        let a = AuditConfig::default();
        Self {
            q: a.q,
            t_over_d: a.t_over_d,
            perturbations: a.perturbations,
            max_iters: a.relax.max_iters,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| WallError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| WallError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: WallError| WallError::Config(e.to_string());
        self.material().map_err(as_config)?;
        self.relax.validate().map_err(as_config)?;
        if self.crossover.bracket[0] <= 0.0 || self.crossover.rel_width <= 0.0 {
            return Err(WallError::Config("crossover bracket and rel_width must be positive".into()));
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialParams> {
        MaterialParams::new(self.params.d, self.params.q, self.params.t)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Comment block: tool version then the full config.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = vec![format!("wallscale {}", env!("CARGO_PKG_VERSION"))];
        out.extend(self.to_toml().lines().map(str::to_string));
        out
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let base = SweepConfig::default();
        SweepConfig {
            q_values: self.sweep.q_values.clone(),
            t_over_d: self.sweep.t_over_d.clone(),
            grid: self.grid,
            construction: self.construction,
            relax_bloch: RelaxOptions {
                max_iters: self.sweep.bloch_max_iters,
                constraint: Constraint::Free,
                ..self.relax
            },
            relax_neel: RelaxOptions {
                max_iters: self.sweep.neel_max_iters,
                constraint: Constraint::NeelClass,
                ..self.relax
            },
            ..base
        }
    }

    pub fn audit_config(&self) -> AuditConfig {
        AuditConfig {
            q: self.audit.q,
            t_over_d: self.audit.t_over_d,
            grid: self.grid,
            perturbations: self.audit.perturbations,
            seed: self.seed,
            relax: RelaxOptions {
                max_iters: self.audit.max_iters,
                ..self.relax
            },
            construction: self.construction,
        }
    }

    pub fn output_path(&self, given: Option<&Path>, default_name: &str) -> PathBuf {
        match given {
            Some(p) => p.to_path_buf(),
            None => self
                .output
                .dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("."))
                .join(default_name),
        }
    }
}
