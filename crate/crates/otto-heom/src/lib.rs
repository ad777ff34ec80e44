//! Numerically exact simulation of a quantum Otto engine at arbitrary
//! system-bath coupling.
//!
//! The working medium is a two-level system whose level splitting is driven
//! between `omega_c` and `omega_h` by unitary strokes; the isochores couple it
//! to underdamped Brownian-oscillator baths. Bath influence is treated without
//! weak-coupling or Markov approximations through the hierarchical equations
//! of motion (HEOM): the bath correlation function is expanded in decaying
//! exponentials ([`bath`]), the resulting hierarchy of auxiliary density
//! operators is propagated or solved for its steady state ([`hierarchy`]),
//! and per-cycle work, heat, efficiency, power and the hybrid figure of merit
//! are assembled from reduced-state populations and first-tier interaction
//! energies ([`cycle`]). A Bloch-Redfield propagator ([`brme`]) provides the
//! weak-coupling baseline, and [`observables`] hosts the fidelity-threshold
//! equilibration time used to price the cycle duration.
//!
//! Units: `omega_h = 1` throughout; times are in `1/omega_h`, energies in
//! `omega_h`.

pub mod bath;
pub mod brme;
pub mod cycle;
pub mod hierarchy;
mod lapack;
pub mod mat2;
pub mod observables;
pub mod quad;
pub mod rk45;
pub mod spectral;
pub mod system;

pub use bath::{BathExpansion, BathSpec, ExpTerm};
pub use cycle::{
    isochore_relaxer, run_cycle, sweep, CycleConfig, CycleResult, CycleVariant, IsochoreSide,
    SolverSettings, SweepAxis, SweepRow,
};
pub use hierarchy::{AdoIndex, HierarchyGenerator, HierarchyState};
pub use observables::{EquilibrationReport, RelaxOptions, Relaxer};
pub use system::SystemSpec;

use thiserror::Error;

/// Library-wide error type. Variants mirror the failure modes named in the
/// module contracts so callers (and the CLI's per-row error records) can
/// attribute failures to a stroke or solver stage.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },

    #[error("bath is overdamped (omega0 = {omega0}, Gamma = {gamma_width}): requires omega0 > Gamma/2")]
    OverdampedBath { omega0: f64, gamma_width: f64 },

    #[error("hierarchy of {n_ado} ADOs needs ~{need_mb} MiB, exceeding the {budget_mb} MiB budget")]
    AdoBudgetExceeded {
        n_ado: usize,
        need_mb: usize,
        budget_mb: usize,
    },

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}): system too stiff for the requested tolerance")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("steady-state manifold is degenerate (zero-coupling generator has no unique fixed point)")]
    DegenerateSteadyState,

    #[error("steady-state residual {residual:.3e} exceeds bound {bound:.3e}")]
    SteadyStateResidual { residual: f64, bound: f64 },

    #[error("interaction energy has imaginary residue {imag:.3e} (> 1e-8): truncation or convention bug")]
    InteractionEnergyImaginary { imag: f64 },

    #[error("state is not positive within tolerance (min eigenvalue {min_eig:.3e})")]
    NonPositiveState { min_eig: f64 },

    #[error("eigenbasis too ill-conditioned for spectral propagation (relative defect {defect:.3e})")]
    IllConditionedSpectrum { defect: f64 },

    #[error("time budget exhausted before convergence (best tau so far: {best_tau:.6e})")]
    TimeBudgetExhausted { best_tau: f64 },

    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("{stroke} stroke failed: {source}")]
    Stroke {
        stroke: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attribute an error to a named cycle stroke so sweep tables can record
    /// where a point failed.
    pub fn in_stroke(self, stroke: &'static str) -> Self {
        Error::Stroke {
            stroke,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
