//! JSON experiment configuration: serde mirror types that re-validate into
//! the library's constructor-checked structs on load, so a malformed file
//! fails with the name of the violated invariant rather than deep inside a
//! run.

use otto_heom::{BathSpec, CycleConfig, CycleVariant, SolverSettings, SystemSpec};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "SystemDoc::default_engine")]
    pub system: SystemDoc,
    pub hot_bath: BathDoc,
    pub cold_bath: BathDoc,
    #[serde(default)]
    pub variant: VariantDoc,
    #[serde(default = "default_weak_alpha")]
    pub weak_alpha: f64,
    #[serde(default)]
    pub solver: SolverDoc,
    #[serde(default)]
    pub sweep: SweepDoc,
    #[serde(default)]
    pub trace: TraceDoc,
    /// Output CSV path; the --out flag takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    /// Accepted for reproducibility bookkeeping; no run consumes it.
    #[serde(default)]
    #[allow(dead_code)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub omega_h: f64,
    pub omega_c: f64,
    pub r_x: f64,
    pub r_z: f64,
}

impl SystemDoc {
    fn default_engine() -> Self {
        let s = SystemSpec::default_engine();
        SystemDoc {
            omega_h: s.omega_h,
            omega_c: s.omega_c,
            r_x: s.r_x,
            r_z: s.r_z,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathDoc {
    pub alpha: f64,
    pub omega0: f64,
    #[serde(default = "default_gamma_width")]
    pub gamma_width: f64,
    pub beta: f64,
}

fn default_gamma_width() -> f64 {
    0.05
}

fn default_weak_alpha() -> f64 {
    1e-4
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum VariantDoc {
    #[default]
    Equilibrating,
    InterruptedHot {
        tau_h: f64,
    },
    InterruptedCold {
        tau_c: f64,
    },
}

/// All fields optional; anything unset falls back to the library default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDoc {
    pub k_matsubara_hot: Option<usize>,
    pub k_matsubara_cold: Option<usize>,
    pub depth_hot: Option<usize>,
    pub depth_cold: Option<usize>,
    pub per_index_cap: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub eps_tol: Option<f64>,
    pub max_memory_mb: Option<usize>,
    pub evd_dim_cap: Option<usize>,
    pub lu_dim_cap: Option<usize>,
    pub horizon_cap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    /// Explicit grid for the swept quantity, ascending.
    pub grid: Option<Vec<f64>>,
    /// Alternative to `grid`: geometric spacing between two endpoints.
    pub log_grid: Option<LogGridDoc>,
    /// Stop-time grid for the frequency sweep's inner product.
    pub tau_grid: Option<Vec<f64>>,
    pub tau_log_grid: Option<LogGridDoc>,
    /// Gap thresholds for equilibration scans, descending or any order.
    pub eps_grid: Option<Vec<f64>>,
    /// Which isochores equilibration scans and traces cover.
    pub sides: Option<Vec<SideDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGridDoc {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideDoc {
    Hot,
    Cold,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDoc {
    /// Trace horizon; when absent, twice the measured equilibration time.
    pub t_max: Option<f64>,
    pub points: usize,
}

impl Default for TraceDoc {
    fn default() -> Self {
        TraceDoc {
            t_max: None,
            points: 400,
        }
    }
}

pub fn expand_log_grid(doc: &LogGridDoc) -> Result<Vec<f64>, String> {
    if !(doc.start > 0.0 && doc.stop > doc.start) {
        return Err(format!(
            "log_grid: need 0 < start < stop, got [{}, {}]",
            doc.start, doc.stop
        ));
    }
    if doc.points < 2 {
        return Err("log_grid: need at least 2 points".into());
    }
    let ratio = (doc.stop / doc.start).powf(1.0 / (doc.points - 1) as f64);
    Ok((0..doc.points)
        .map(|i| doc.start * ratio.powi(i as i32))
        .collect())
}

impl SweepDoc {
    /// The main swept grid, from either representation.
    pub fn main_grid(&self) -> Result<Vec<f64>, String> {
        match (&self.grid, &self.log_grid) {
            (Some(_), Some(_)) => Err("sweep: give either grid or log_grid, not both".into()),
            (Some(g), None) => Ok(g.clone()),
            (None, Some(lg)) => expand_log_grid(lg),
            (None, None) => Err("sweep: missing grid (or log_grid)".into()),
        }
    }

    pub fn tau_grid(&self) -> Result<Option<Vec<f64>>, String> {
        match (&self.tau_grid, &self.tau_log_grid) {
            (Some(_), Some(_)) => {
                Err("sweep: give either tau_grid or tau_log_grid, not both".into())
            }
            (Some(g), None) => Ok(Some(g.clone())),
            (None, Some(lg)) => Ok(Some(expand_log_grid(lg)?)),
            (None, None) => Ok(None),
        }
    }

    pub fn sides(&self) -> Vec<SideDoc> {
        self.sides
            .clone()
            .unwrap_or_else(|| vec![SideDoc::Hot, SideDoc::Cold])
    }
}

impl ExperimentConfig {
    /// Re-check every physical invariant through the library constructors
    /// and assemble the cycle description.
    pub fn to_cycle(&self) -> Result<CycleConfig, otto_heom::Error> {
        let system = SystemSpec::new(
            self.system.omega_h,
            self.system.omega_c,
            self.system.r_x,
            self.system.r_z,
        )?;
        let hot_bath = BathSpec::new(
            self.hot_bath.alpha,
            self.hot_bath.omega0,
            self.hot_bath.gamma_width,
            self.hot_bath.beta,
        )?;
        let cold_bath = BathSpec::new(
            self.cold_bath.alpha,
            self.cold_bath.omega0,
            self.cold_bath.gamma_width,
            self.cold_bath.beta,
        )?;
        let variant = match self.variant {
            VariantDoc::Equilibrating => CycleVariant::Equilibrating,
            VariantDoc::InterruptedHot { tau_h } => CycleVariant::InterruptedHot { tau_h },
            VariantDoc::InterruptedCold { tau_c } => CycleVariant::InterruptedCold { tau_c },
        };
        let d = SolverSettings::default();
        let solver = SolverSettings {
            k_matsubara_hot: self.solver.k_matsubara_hot.unwrap_or(d.k_matsubara_hot),
            k_matsubara_cold: self.solver.k_matsubara_cold.unwrap_or(d.k_matsubara_cold),
            depth_hot: self.solver.depth_hot.or(d.depth_hot),
            depth_cold: self.solver.depth_cold.or(d.depth_cold),
            per_index_cap: self.solver.per_index_cap.or(d.per_index_cap),
            rel_tol: self.solver.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.solver.abs_tol.unwrap_or(d.abs_tol),
            eps_tol: self.solver.eps_tol.unwrap_or(d.eps_tol),
            max_memory_mb: self.solver.max_memory_mb.unwrap_or(d.max_memory_mb),
            evd_dim_cap: self.solver.evd_dim_cap.unwrap_or(d.evd_dim_cap),
            lu_dim_cap: self.solver.lu_dim_cap.unwrap_or(d.lu_dim_cap),
            horizon_cap: self.solver.horizon_cap.unwrap_or(d.horizon_cap),
        };
        let cfg = CycleConfig {
            system,
            hot_bath,
            cold_bath,
            variant,
            weak_alpha: self.weak_alpha,
            solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
