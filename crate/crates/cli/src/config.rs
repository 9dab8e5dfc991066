//! Pipeline configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use marchenko::inversion::{NystromSpec, RGrid, ReconstructOptions};
use marchenko::kernel::KernelOptions;
use marchenko::morse::{PhaseOptions, SeriesOptions};
use marchenko::MorseModel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelConfig,
    pub k_grid: KGridConfig,
    pub kernel: KernelSampleConfig,
    pub nystrom: NystromConfig,
    pub r_grid: RGridConfig,
    pub s0: S0Policy,
    pub solver: String,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/.cache`.
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    pub workers: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelConfig::default(),
            k_grid: KGridConfig::default(),
            kernel: KernelSampleConfig::default(),
            nystrom: NystromConfig::default(),
            r_grid: RGridConfig::default(),
            s0: S0Policy::default(),
            solver: "householder".into(),
            output_dir: PathBuf::from("out"),
            cache_dir: None,
            workers: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "D")]
    pub d: f64,
    pub alpha: f64,
    #[serde(rename = "Re")]
    pub re: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let m = MorseModel::default();
        ModelConfig {
            d: m.d,
            alpha: m.alpha,
            re: m.re,
            c: m.c,
        }
    }
}

/// Logarithmic k grid of the exported phase table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KGridConfig {
    pub k_min: f64,
    pub k_max: f64,
    pub per_decade: usize,
}

impl Default for KGridConfig {
    fn default() -> Self {
        KGridConfig {
            k_min: 1e-9,
            k_max: 100.0,
            per_decade: 64,
        }
    }
}

/// Quadrature and sampling layout of the kernel transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSampleConfig {
    pub k_min: f64,
    pub log_per_decade: usize,
    pub mid_panels: usize,
    pub high_panels: usize,
    pub filon_panels: usize,
    pub rule_size: usize,
    pub tail_start: f64,
    pub tail_fit_end: f64,
    pub tail_fit_points: usize,
    pub interp_degree: usize,
    /// Upper end of the exported kernel table.
    pub export_end: f64,
}

impl Default for KernelSampleConfig {
    fn default() -> Self {
        let k = KernelOptions::default();
        KernelSampleConfig {
            k_min: k.k_min,
            log_per_decade: k.log_per_decade,
            mid_panels: k.mid_panels,
            high_panels: k.high_panels,
            filon_panels: k.filon_panels,
            rule_size: k.rule_size,
            tail_start: k.tail_start,
            tail_fit_end: k.tail_fit_end,
            tail_fit_points: k.tail_fit_points,
            interp_degree: k.interp_degree,
            export_end: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NystromConfig {
    #[serde(rename = "R")]
    pub r_split: f64,
    pub panels: usize,
    pub points_per_panel: usize,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub mapped_points: usize,
}

impl Default for NystromConfig {
    fn default() -> Self {
        let s = NystromSpec::default();
        NystromConfig {
            r_split: s.r_split,
            panels: s.finite_panels,
            points_per_panel: s.points_per_panel,
            delta: s.delta,
            mapped_points: s.mapped_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RGridConfig {
    pub start: f64,
    pub end: f64,
    pub h: f64,
}

impl Default for RGridConfig {
    fn default() -> Self {
        let g = RGrid::default();
        RGridConfig {
            start: g.start,
            end: g.end,
            h: g.h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Named {
    Theoretical,
}

/// One s₀² value: a number or "theoretical".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum S0Value {
    Value(f64),
    Named(Named),
}

impl S0Value {
    pub fn resolve(self, theoretical: f64) -> f64 {
        match self {
            S0Value::Value(v) => v,
            S0Value::Named(Named::Theoretical) => theoretical,
        }
    }
}

/// "theoretical", an explicit s₀², or a list of them for a family sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum S0Policy {
    Single(S0Value),
    Sweep(Vec<S0Value>),
}

impl Default for S0Policy {
    fn default() -> Self {
        S0Policy::Single(S0Value::Named(Named::Theoretical))
    }
}

impl S0Policy {
    pub fn default_sweep() -> Vec<S0Value> {
        vec![S0Value::Value(0.0), S0Value::Named(Named::Theoretical), S0Value::Value(100.0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub series: f64,
    pub low_energy_beta: f64,
    pub asymptotic: f64,
    pub filon_split: f64,
    pub tail_fit: f64,
    pub interpolation_audit: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let p = PhaseOptions::default();
        let k = KernelOptions::default();
        Tolerances {
            series: p.series.tolerance,
            low_energy_beta: p.low_energy_beta,
            asymptotic: p.asymptotic_tolerance,
            filon_split: k.split_tolerance,
            tail_fit: k.tail_tolerance,
            interpolation_audit: k.audit_tolerance,
            residual: ReconstructOptions::default().residual_tolerance.unwrap_or(1e-8),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: PipelineConfig = match path {
            None => PipelineConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                if !value.is_object() {
                    return Err(CliError::Config(format!("{}: config must be a JSON object", p.display())));
                }
                serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str, v: f64| CliError::Config(format!("{what} must be positive and finite (got {v})"));
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.series", t.series),
            ("tolerances.low_energy_beta", t.low_energy_beta),
            ("tolerances.asymptotic", t.asymptotic),
            ("tolerances.filon_split", t.filon_split),
            ("tolerances.tail_fit", t.tail_fit),
            ("tolerances.interpolation_audit", t.interpolation_audit),
            ("tolerances.residual", t.residual),
            ("k_grid.k_min", self.k_grid.k_min),
            ("kernel.export_end", self.kernel.export_end),
            ("r_grid.h", self.r_grid.h),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(name, v));
            }
        }
        self.model().map_err(|e| CliError::Config(e.to_string()))?;
        if self.k_grid.k_max.partial_cmp(&self.k_grid.k_min) != Some(std::cmp::Ordering::Greater) || self.k_grid.per_decade == 0 {
            return Err(CliError::Config("k_grid needs k_max > k_min and per_decade >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if !marchenko::linalg::linear_solvers().names().contains(&self.solver.as_str()) {
            return Err(CliError::Config(format!(
                "unknown solver `{}` (have {:?})",
                self.solver,
                marchenko::linalg::linear_solvers().names()
            )));
        }
        let s0s: Vec<S0Value> = match &self.s0 {
            S0Policy::Single(v) => vec![*v],
            S0Policy::Sweep(v) => v.clone(),
        };
        if let Some(v) = s0s.iter().find_map(|v| match v {
            S0Value::Value(x) if !(*x >= 0.0 && x.is_finite()) => Some(*x),
            _ => None,
        }) {
            return Err(CliError::Config(format!("s0 values must be >= 0 (got {v})")));
        }
        self.r_grid().points().map_err(|e| CliError::Config(e.to_string()))?;
        marchenko::inversion::NystromGrid::new(self.nystrom_spec()).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn model(&self) -> marchenko::Result<MorseModel> {
        MorseModel::new(self.model.d, self.model.alpha, self.model.re, self.model.c)
    }

    pub fn phase_options(&self) -> PhaseOptions {
        PhaseOptions {
            series: SeriesOptions {
                tolerance: self.tolerances.series,
                ..SeriesOptions::default()
            },
            low_energy_beta: self.tolerances.low_energy_beta,
            asymptotic_tolerance: self.tolerances.asymptotic,
        }
    }

    pub fn kernel_options(&self) -> KernelOptions {
        let k = &self.kernel;
        KernelOptions {
            k_min: k.k_min,
            log_per_decade: k.log_per_decade,
            mid_panels: k.mid_panels,
            high_panels: k.high_panels,
            filon_panels: k.filon_panels,
            rule_size: k.rule_size,
            split_tolerance: self.tolerances.filon_split,
            tail_start: k.tail_start,
            tail_fit_end: k.tail_fit_end,
            tail_fit_points: k.tail_fit_points,
            tail_tolerance: self.tolerances.tail_fit,
            interp_degree: k.interp_degree,
            audit_tolerance: self.tolerances.interpolation_audit,
            phase: self.phase_options(),
        }
    }

    pub fn nystrom_spec(&self) -> NystromSpec {
        let n = &self.nystrom;
        NystromSpec {
            r_split: n.r_split,
            finite_panels: n.panels,
            points_per_panel: n.points_per_panel,
            delta: n.delta,
            mapped_points: n.mapped_points,
        }
    }

    pub fn r_grid(&self) -> RGrid {
        RGrid {
            start: self.r_grid.start,
            end: self.r_grid.end,
            h: self.r_grid.h,
        }
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions {
            solver: self.solver.clone(),
            residual_tolerance: Some(self.tolerances.residual),
            c: self.model.c,
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join(".cache"))
    }
}
