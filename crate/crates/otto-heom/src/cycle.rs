//! Four-stroke Otto cycle assembly.
//!
//! The cycle alternates unitary strokes, which rescale the splitting between
//! `omega_c` and `omega_h` without touching populations (the Bloch axis of
//! the Hamiltonian is splitting-independent), and isochores, where the
//! system relaxes in contact with one bath. Because the drive commutes with
//! the instantaneous Hamiltonian's eigenprojectors, strokes 1 and 3 are
//! evaluated in closed form; only the isochores are simulated.
//!
//! Energy bookkeeping per cycle, with `p` the excited population and `E_I`
//! the first-tier interaction energy at the moment a bath is disconnected:
//!
//! ```text
//! W1      =  p_cold_end (omega_h - omega_c)      compression input, >= 0
//! Q_h     =  omega_h (p_hot_end - p_cold_end) + E_I_hot
//! W_off_h = -E_I_hot                             hot decoupling work
//! W3      =  p_hot_end (omega_c - omega_h)       expansion output, <= 0
//! Q_c     =  omega_c (p_cold_end - p_hot_end) + E_I_cold
//! W_off_c = -E_I_cold
//! W_ext   = -W1 - W3 - W_off_h - W_off_c = Q_h + Q_c
//! ```
//!
//! Coupling a bath to a factorized state costs nothing (the interaction
//! energy of a product state with a stationary bath vanishes), so only the
//! decoupling work appears. The last identity is the first law for a closed
//! cycle and holds algebraically; `first_law_defect` records the float
//! round-off actually incurred.
//!
//! Cycle duration counts only the isochores (`tau_h_used + tau_c_used`);
//! the unitary strokes can be made arbitrarily fast.

use crate::bath::BathSpec;
use crate::hierarchy::{build_generator, Truncation};
use crate::observables::{excited_population, RelaxOptions, Relaxer};
use crate::system::SystemSpec;
use crate::{Error, Result};
use rayon::prelude::*;

/// Which cycle the driver runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleVariant {
    /// Both isochores run to their steady states.
    Equilibrating,
    /// Hot isochore cut off at `tau_h`; cold isochore weak and equilibrating.
    InterruptedHot { tau_h: f64 },
    /// Cold isochore cut off at `tau_c`; hot isochore weak and equilibrating.
    InterruptedCold { tau_c: f64 },
}

/// Numerical knobs shared by every stroke solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Matsubara exponents kept for the hot bath expansion.
    pub k_matsubara_hot: usize,
    /// Matsubara exponents for the cold bath; colder means slower Matsubara
    /// decay, so it needs more.
    pub k_matsubara_cold: usize,
    /// Hierarchy depth override for the hot bath; `None` picks by coupling
    /// strength via [`default_depth`].
    pub depth_hot: Option<usize>,
    pub depth_cold: Option<usize>,
    /// Use a per-index cap instead of a tier sum as the truncation rule.
    pub per_index_cap: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fidelity-gap threshold defining equilibration times.
    pub eps_tol: f64,
    pub max_memory_mb: usize,
    pub evd_dim_cap: usize,
    pub lu_dim_cap: usize,
    /// Abandon time-stepped relaxations past this time; the eigendecomposed
    /// path is exempt (see [`RelaxOptions::horizon_cap`]).
    pub horizon_cap: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            k_matsubara_hot: 3,
            k_matsubara_cold: 5,
            depth_hot: None,
            depth_cold: None,
            per_index_cap: None,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            eps_tol: 1e-8,
            max_memory_mb: 4096,
            evd_dim_cap: 1500,
            lu_dim_cap: 14000,
            horizon_cap: 1e7,
        }
    }
}

impl SolverSettings {
    fn relax_options(&self) -> RelaxOptions {
        RelaxOptions {
            eps_tol: self.eps_tol,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            evd_dim_cap: self.evd_dim_cap,
            lu_dim_cap: self.lu_dim_cap,
            max_memory_mb: self.max_memory_mb,
            horizon_cap: self.horizon_cap,
            ss_residual_tol: 1e-8,
        }
    }

    fn truncation(&self, side: Side, alpha: f64) -> Truncation {
        if let Some(cap) = self.per_index_cap {
            return Truncation::PerIndex(cap);
        }
        let depth = match side {
            Side::Hot => self.depth_hot,
            Side::Cold => self.depth_cold,
        };
        Truncation::TierSum(depth.unwrap_or_else(|| default_depth(side, alpha)))
    }
}

/// Hierarchy depth giving converged steady-state observables at coupling
/// `alpha`, calibrated by depth-increment drift on (p_ss, E_int). The two
/// baths converge very differently: the hot bath (beta = 0.5 here) is
/// within 1e-7 by M = 5 even at alpha = 0.3, while the cold bath (beta =
/// 2.5, lower resonance) still drifts by ~2e-5 per tier at M = 6 for the
/// same alpha. Measured drifts per added tier, default engine:
///
///   hot  alpha 1e-2: 1.2e-10 (M4)   cold alpha 1e-2: 1.6e-8 (M4)
///   hot  alpha 0.1:  6.9e-8  (M5)   cold alpha 0.05: 1.4e-6 (M5)
///   hot  alpha 0.3:  4.8e-9  (M6)   cold alpha 0.1:  2.1e-7 (M6)
///                                   cold alpha 0.3:  6.5e-6 (M7)
///
/// Past alpha ~ 0.15 the cold residual stays a few 1e-6 at any depth a
/// sweep can afford; the cycle observables there are orders of magnitude
/// larger, so sweep shapes are unaffected.
pub fn default_depth(side: IsochoreSide, alpha: f64) -> usize {
    let bands: &[(f64, usize)] = match side {
        IsochoreSide::Hot => &[(1e-4, 2), (1e-3, 3), (1e-2, 4), (0.1, 5)],
        IsochoreSide::Cold => &[(1e-4, 2), (1e-3, 3), (1e-2, 4), (0.1, 6), (0.2, 7)],
    };
    for &(cap, depth) in bands {
        if alpha <= cap {
            return depth;
        }
    }
    match side {
        IsochoreSide::Hot => 6,
        IsochoreSide::Cold => 8,
    }
}

/// Full description of one cycle run.
#[derive(Debug, Clone)]
pub struct CycleConfig {
    pub system: SystemSpec,
    pub hot_bath: BathSpec,
    pub cold_bath: BathSpec,
    pub variant: CycleVariant,
    /// Coupling for the equilibrating weak isochore in interrupted variants.
    pub weak_alpha: f64,
    pub solver: SolverSettings,
}

impl CycleConfig {
    /// The engine studied throughout, at coupling `alpha`: resonant baths
    /// (`omega0 = omega_j`), width `Gamma = 0.05`, `beta_h = 0.5`,
    /// `beta_c = 2.5`. For interrupted variants the designated weak bath is
    /// pinned at `weak_alpha = 1e-4`.
    pub fn default_engine(alpha: f64, variant: CycleVariant) -> Result<Self> {
        let weak_alpha = 1e-4;
        let alpha_h = match variant {
            CycleVariant::InterruptedCold { .. } => weak_alpha,
            _ => alpha,
        };
        let alpha_c = match variant {
            CycleVariant::InterruptedHot { .. } => weak_alpha,
            _ => alpha,
        };
        Ok(CycleConfig {
            system: SystemSpec::default_engine(),
            hot_bath: BathSpec::new(alpha_h, 1.0, 0.05, 0.5)?,
            cold_bath: BathSpec::new(alpha_c, 0.5, 0.05, 2.5)?,
            variant,
            weak_alpha,
            solver: SolverSettings::default(),
        })
    }

    /// Cross-field invariants that individual constructors cannot see.
    pub fn validate(&self) -> Result<()> {
        if self.system.omega_c >= self.system.omega_h {
            return Err(Error::InvalidParameter {
                what: "omega_c",
                why: format!(
                    "cycle requires omega_c < omega_h, got omega_c = {} >= omega_h = {}",
                    self.system.omega_c, self.system.omega_h
                ),
            });
        }
        if !(self.weak_alpha > 0.0) {
            return Err(Error::InvalidParameter {
                what: "weak_alpha",
                why: format!("must be positive, got {}", self.weak_alpha),
            });
        }
        match self.variant {
            CycleVariant::Equilibrating => {}
            CycleVariant::InterruptedHot { tau_h } => {
                check_tau("tau_h", tau_h)?;
                check_weak("cold_bath.alpha", self.cold_bath.alpha, self.weak_alpha)?;
            }
            CycleVariant::InterruptedCold { tau_c } => {
                check_tau("tau_c", tau_c)?;
                check_weak("hot_bath.alpha", self.hot_bath.alpha, self.weak_alpha)?;
            }
        }
        Ok(())
    }

    /// This configuration with the swept coupling rebound to `alpha`:
    /// both baths for equilibrating cycles, only the strong bath for
    /// interrupted ones.
    pub fn at_coupling(&self, alpha: f64) -> Result<Self> {
        with_coupling(self, alpha)
    }

    /// This configuration with a new cold splitting. The cold bath moves
    /// with it so the resonance condition `omega0 = omega_c` is preserved.
    pub fn at_omega_c(&self, omega_c: f64) -> Result<Self> {
        with_omega_c(self, omega_c)
    }
}

fn check_tau(what: &'static str, tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter {
            what,
            why: format!("stop time must be finite and non-negative, got {tau}"),
        });
    }
    Ok(())
}

fn check_weak(what: &'static str, alpha: f64, weak_alpha: f64) -> Result<()> {
    if (alpha - weak_alpha).abs() > 1e-12 * weak_alpha.max(1.0) {
        return Err(Error::InvalidParameter {
            what,
            why: format!(
                "interrupted variants keep the untouched isochore weak: expected alpha = weak_alpha = {weak_alpha}, got {alpha}"
            ),
        });
    }
    Ok(())
}

/// Per-cycle energetics and performance measures. Sign conventions are
/// documented in the module header; `eta` and `hfom` are NaN when `Q_h <= 0`
/// makes efficiency meaningless.
#[derive(Debug, Clone, Copy)]
pub struct CycleResult {
    pub w1: f64,
    pub w3: f64,
    pub w_off_h: f64,
    pub w_off_c: f64,
    pub q_h: f64,
    pub q_c: f64,
    pub w_ext: f64,
    pub eta: f64,
    pub eta_otto: f64,
    pub tau_h_used: f64,
    pub tau_c_used: f64,
    pub power: f64,
    pub hfom: f64,
    /// Excited population entering the compression stroke.
    pub p_after_cold: f64,
    /// Excited population entering the expansion stroke.
    pub p_after_hot: f64,
    /// True when the run works as an engine: `W_ext > 0` and `Q_h > 0`.
    /// Invalid rows are kept in sweep tables, flagged rather than dropped.
    pub engine_valid: bool,
    /// `W_ext - Q_h - Q_c`, the float residue of an algebraic identity.
    pub first_law_defect: f64,
}

/// Work injected by the compression stroke `omega_c -> omega_h`.
pub fn compression_work(p_start: f64, omega_c: f64, omega_h: f64) -> f64 {
    p_start * (omega_h - omega_c)
}

/// Work released by the expansion stroke `omega_h -> omega_c` (non-positive).
pub fn expansion_work(p_start: f64, omega_c: f64, omega_h: f64) -> f64 {
    p_start * (omega_c - omega_h)
}

/// Heat drawn from a bath across one isochore: the system energy change
/// minus the decoupling work `w_off = -E_I`.
pub fn isochore_heat(delta_p: f64, omega: f64, w_off: f64) -> f64 {
    omega * delta_p - w_off
}

/// Efficiency-power trade-off figure, `eta * power`.
pub fn hfom(result: &CycleResult) -> f64 {
    result.eta * result.power
}

/// Which bath contact an isochore-level query concerns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsochoreSide {
    Hot,
    Cold,
}

impl IsochoreSide {
    fn stroke(self) -> &'static str {
        match self {
            IsochoreSide::Hot => "hot isochore",
            IsochoreSide::Cold => "cold isochore",
        }
    }
}

use IsochoreSide as Side;

/// Prepared solver for one isochore of `config`, exposed for trace and scan
/// front ends that query relaxation directly rather than through a cycle.
/// `alpha_override` substitutes the bath coupling while keeping everything
/// else (used for the weak legs of interrupted cycles).
pub fn isochore_relaxer(
    config: &CycleConfig,
    side: IsochoreSide,
    alpha_override: Option<f64>,
) -> Result<Relaxer> {
    make_relaxer(config, side, alpha_override)
}

fn make_relaxer(config: &CycleConfig, side: Side, alpha_override: Option<f64>) -> Result<Relaxer> {
    let (base, omega, k) = match side {
        Side::Hot => (
            &config.hot_bath,
            config.system.omega_h,
            config.solver.k_matsubara_hot,
        ),
        Side::Cold => (
            &config.cold_bath,
            config.system.omega_c,
            config.solver.k_matsubara_cold,
        ),
    };
    let alpha = alpha_override.unwrap_or(base.alpha);
    let spec = BathSpec::new(alpha, base.omega0, base.gamma_width, base.beta)?;
    let expansion = spec.expand_correlation(k);
    let trunc = config.solver.truncation(side, alpha);
    let gen = build_generator(
        &config.system,
        omega,
        &expansion,
        trunc,
        config.solver.max_memory_mb,
    )?;
    Relaxer::new(gen, config.solver.relax_options())
}

fn assemble(
    system: &SystemSpec,
    p_cold_end: f64,
    e_int_cold_end: f64,
    p_hot_end: f64,
    e_int_hot_end: f64,
    tau_h_used: f64,
    tau_c_used: f64,
) -> CycleResult {
    let (wh, wc) = (system.omega_h, system.omega_c);
    let w1 = compression_work(p_cold_end, wc, wh);
    let w3 = expansion_work(p_hot_end, wc, wh);
    let w_off_h = -e_int_hot_end;
    let w_off_c = -e_int_cold_end;
    let q_h = isochore_heat(p_hot_end - p_cold_end, wh, w_off_h);
    let q_c = isochore_heat(p_cold_end - p_hot_end, wc, w_off_c);
    let w_ext = -w1 - w3 - w_off_h - w_off_c;
    let first_law_defect = w_ext - q_h - q_c;

    let eta = if q_h > 0.0 { w_ext / q_h } else { f64::NAN };
    let tau_cyc = tau_h_used + tau_c_used;
    let power = if tau_cyc > 0.0 { w_ext / tau_cyc } else { f64::NAN };
    CycleResult {
        w1,
        w3,
        w_off_h,
        w_off_c,
        q_h,
        q_c,
        w_ext,
        eta,
        eta_otto: 1.0 - wc / wh,
        tau_h_used,
        tau_c_used,
        power,
        hfom: eta * power,
        p_after_cold: p_cold_end,
        p_after_hot: p_hot_end,
        engine_valid: w_ext > 0.0 && q_h > 0.0,
        first_law_defect,
    }
}

/// Run the variant the config selects.
pub fn run_cycle(config: &CycleConfig) -> Result<CycleResult> {
    match config.variant {
        CycleVariant::Equilibrating => run_equilibrating_cycle(config),
        CycleVariant::InterruptedHot { tau_h } => run_interrupted_hot_cycle(config, tau_h),
        CycleVariant::InterruptedCold { tau_c } => run_interrupted_cold_cycle(config, tau_c),
    }
}

/// Both isochores equilibrate: energetics come from the two steady states,
/// durations from the equilibration times along the limit cycle (each
/// isochore entered from the other's steady state).
pub fn run_equilibrating_cycle(config: &CycleConfig) -> Result<CycleResult> {
    config.validate()?;
    let hot = make_relaxer(config, Side::Hot, None).map_err(|e| e.in_stroke("hot isochore"))?;
    let cold =
        make_relaxer(config, Side::Cold, None).map_err(|e| e.in_stroke("cold isochore"))?;

    let rho_c = cold.steady_reduced();
    let e_c = cold.steady_interaction_energy();
    let rho_h = hot.steady_reduced();
    let e_h = hot.steady_interaction_energy();

    let tau_h = hot
        .relax_from(&rho_c)
        .map_err(|e| e.in_stroke("hot isochore"))?
        .report
        .tau_eq;
    let tau_c = cold
        .relax_from(&rho_h)
        .map_err(|e| e.in_stroke("cold isochore"))?
        .report
        .tau_eq;

    Ok(assemble(
        &config.system,
        excited_population(&config.system, &rho_c),
        e_c,
        excited_population(&config.system, &rho_h),
        e_h,
        tau_h,
        tau_c,
    ))
}

/// Hot isochore stopped at `tau_h`; the weak cold isochore closes the cycle
/// by fully equilibrating, so the cycle starts from the weak cold steady
/// state (the cold thermal state up to O(weak_alpha)).
pub fn run_interrupted_hot_cycle(config: &CycleConfig, tau_h: f64) -> Result<CycleResult> {
    config.validate()?;
    check_tau("tau_h", tau_h)?;
    let weak_cold = make_relaxer(config, Side::Cold, Some(config.weak_alpha))
        .map_err(|e| e.in_stroke("cold isochore"))?;
    let strong_hot =
        make_relaxer(config, Side::Hot, None).map_err(|e| e.in_stroke("hot isochore"))?;
    interrupted_hot_with(config, &weak_cold, &strong_hot, tau_h)
}

/// Interrupted-hot assembly against prebuilt relaxers, shared with the
/// stop-time sweep so the expensive solvers are constructed once per grid.
fn interrupted_hot_with(
    config: &CycleConfig,
    weak_cold: &Relaxer,
    strong_hot: &Relaxer,
    tau_h: f64,
) -> Result<CycleResult> {
    let rho1 = weak_cold.steady_reduced();
    let e_c_ss = weak_cold.steady_interaction_energy();
    let states = strong_hot
        .states_at(&rho1, &[tau_h])
        .map_err(|e| e.in_stroke("hot isochore"))?;
    let (rho4, e_h_tau) = states[0];
    let tau_c = weak_cold
        .relax_from(&rho4)
        .map_err(|e| e.in_stroke("cold isochore"))?
        .report
        .tau_eq;
    Ok(assemble(
        &config.system,
        excited_population(&config.system, &rho1),
        e_c_ss,
        excited_population(&config.system, &rho4),
        e_h_tau,
        tau_h,
        tau_c,
    ))
}

/// Mirror of the hot variant: weak equilibrating hot isochore, strong cold
/// isochore stopped at `tau_c`.
pub fn run_interrupted_cold_cycle(config: &CycleConfig, tau_c: f64) -> Result<CycleResult> {
    config.validate()?;
    check_tau("tau_c", tau_c)?;
    let weak_hot = make_relaxer(config, Side::Hot, Some(config.weak_alpha))
        .map_err(|e| e.in_stroke("hot isochore"))?;
    let strong_cold =
        make_relaxer(config, Side::Cold, None).map_err(|e| e.in_stroke("cold isochore"))?;
    interrupted_cold_with(config, &weak_hot, &strong_cold, tau_c)
}

fn interrupted_cold_with(
    config: &CycleConfig,
    weak_hot: &Relaxer,
    strong_cold: &Relaxer,
    tau_c: f64,
) -> Result<CycleResult> {
    let rho3 = weak_hot.steady_reduced();
    let e_h_ss = weak_hot.steady_interaction_energy();
    let states = strong_cold
        .states_at(&rho3, &[tau_c])
        .map_err(|e| e.in_stroke("cold isochore"))?;
    let (rho_c_tau, e_c_tau) = states[0];
    let tau_h = weak_hot
        .relax_from(&rho_c_tau)
        .map_err(|e| e.in_stroke("hot isochore"))?
        .report
        .tau_eq;
    Ok(assemble(
        &config.system,
        excited_population(&config.system, &rho_c_tau),
        e_c_tau,
        excited_population(&config.system, &rho3),
        e_h_ss,
        tau_h,
        tau_c,
    ))
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepAxis {
    /// Bath coupling strength: both baths together for equilibrating
    /// cycles, only the interrupted (strong) bath otherwise.
    Coupling,
    /// Stop time of the interrupted isochore.
    StopTime,
    /// Cold splitting `omega_c`, with the cold bath kept resonant.
    Frequency,
}

/// One sweep grid point: the varied value and the outcome, which may be a
/// per-point failure without aborting the rest of the table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<CycleResult>,
}

/// Run `config` across `grid` (sorted ascending), varying `axis`. Rows come
/// back in grid order regardless of worker scheduling, so output tables are
/// deterministic.
pub fn sweep(
    config: &CycleConfig,
    axis: SweepAxis,
    grid: &[f64],
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            what: "sweep grid",
            why: "must be non-empty".into(),
        });
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter {
            what: "sweep grid",
            why: "must be sorted ascending".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter {
            what: "workers",
            why: e.to_string(),
        })?;

    match axis {
        SweepAxis::Coupling => Ok(pool.install(|| {
            grid.par_iter()
                .map(|&alpha| SweepRow {
                    value: alpha,
                    result: with_coupling(config, alpha).and_then(|cfg| run_cycle(&cfg)),
                })
                .collect()
        })),
        SweepAxis::Frequency => Ok(pool.install(|| {
            grid.par_iter()
                .map(|&omega_c| SweepRow {
                    value: omega_c,
                    result: with_omega_c(config, omega_c).and_then(|cfg| run_cycle(&cfg)),
                })
                .collect()
        })),
        SweepAxis::StopTime => sweep_stop_time(config, grid, &pool),
    }
}

/// Coupling-axis rebind: equilibrating cycles couple both baths at `alpha`;
/// interrupted ones keep their designated weak bath at `weak_alpha`.
fn with_coupling(config: &CycleConfig, alpha: f64) -> Result<CycleConfig> {
    let mut cfg = config.clone();
    match config.variant {
        CycleVariant::Equilibrating => {
            cfg.hot_bath = BathSpec::new(
                alpha,
                config.hot_bath.omega0,
                config.hot_bath.gamma_width,
                config.hot_bath.beta,
            )?;
            cfg.cold_bath = BathSpec::new(
                alpha,
                config.cold_bath.omega0,
                config.cold_bath.gamma_width,
                config.cold_bath.beta,
            )?;
        }
        CycleVariant::InterruptedHot { .. } => {
            cfg.hot_bath = BathSpec::new(
                alpha,
                config.hot_bath.omega0,
                config.hot_bath.gamma_width,
                config.hot_bath.beta,
            )?;
        }
        CycleVariant::InterruptedCold { .. } => {
            cfg.cold_bath = BathSpec::new(
                alpha,
                config.cold_bath.omega0,
                config.cold_bath.gamma_width,
                config.cold_bath.beta,
            )?;
        }
    }
    Ok(cfg)
}

/// Frequency-axis rebind: new cold splitting, cold bath moved with it so the
/// resonance condition `omega0 = omega_c` is preserved.
fn with_omega_c(config: &CycleConfig, omega_c: f64) -> Result<CycleConfig> {
    let mut cfg = config.clone();
    cfg.system = SystemSpec::new(
        config.system.omega_h,
        omega_c,
        config.system.r_x,
        config.system.r_z,
    )?;
    cfg.cold_bath = BathSpec::new(
        config.cold_bath.alpha,
        omega_c,
        config.cold_bath.gamma_width,
        config.cold_bath.beta,
    )?;
    Ok(cfg)
}

/// Stop-time sweep with shared solvers: the strong isochore is propagated
/// once through the whole ascending grid, and each grid point then costs one
/// weak-relaxation query.
fn sweep_stop_time(
    config: &CycleConfig,
    grid: &[f64],
    pool: &rayon::ThreadPool,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let fail_all = |e: Error| {
        grid.iter()
            .map(|&tau| SweepRow {
                value: tau,
                result: Err(e.clone()),
            })
            .collect::<Vec<_>>()
    };

    let hot_interrupted = match config.variant {
        CycleVariant::InterruptedHot { .. } => true,
        CycleVariant::InterruptedCold { .. } => false,
        CycleVariant::Equilibrating => {
            return Err(Error::InvalidParameter {
                what: "variant",
                why: "stop-time sweeps need an interrupted variant".into(),
            })
        }
    };
    let (weak_side, strong_side) = if hot_interrupted {
        (Side::Cold, Side::Hot)
    } else {
        (Side::Hot, Side::Cold)
    };

    let weak = match make_relaxer(config, weak_side, Some(config.weak_alpha)) {
        Ok(r) => r,
        Err(e) => return Ok(fail_all(e.in_stroke(weak_side.stroke()))),
    };
    let strong = match make_relaxer(config, strong_side, None) {
        Ok(r) => r,
        Err(e) => return Ok(fail_all(e.in_stroke(strong_side.stroke()))),
    };
    let entry = weak.steady_reduced();
    let states = match strong.states_at(&entry, grid) {
        Ok(s) => s,
        Err(e) => return Ok(fail_all(e.in_stroke(strong_side.stroke()))),
    };

    Ok(pool.install(|| {
        grid.par_iter()
            .zip(states.par_iter())
            .map(|(&tau, &(rho_tau, e_tau))| {
                // Reuse the already-propagated interruption state; only the
                // weak return stroke is priced per point.
                let result = weak
                    .relax_from(&rho_tau)
                    .map_err(|e| e.in_stroke(weak_side.stroke()))
                    .map(|back| {
                        let p_tau = excited_population(&config.system, &rho_tau);
                        let p_weak = excited_population(&config.system, &entry);
                        let e_weak = weak.steady_interaction_energy();
                        if hot_interrupted {
                            assemble(
                                &config.system,
                                p_weak,
                                e_weak,
                                p_tau,
                                e_tau,
                                tau,
                                back.report.tau_eq,
                            )
                        } else {
                            assemble(
                                &config.system,
                                p_tau,
                                e_tau,
                                p_weak,
                                e_weak,
                                back.report.tau_eq,
                                tau,
                            )
                        }
                    });
                SweepRow { value: tau, result }
            })
            .collect()
    }))
}
