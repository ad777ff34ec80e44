//! Reduced-state observables and the fidelity-threshold equilibration time.
//!
//! The equilibration time tau_eq prices an isochore: it is the last time the
//! Uhlmann fidelity gap `1 - F(rho(t), rho_ss)` crosses a threshold
//! `eps_tol`, scanned out to twice that crossing so late recrossings from
//! slow coherent lobes are not missed. [`Relaxer`] prepares one isochore
//! (fixed splitting, fixed bath) and then answers relaxation queries from
//! arbitrary product initial states, choosing between an eigendecomposition
//! of the hierarchy generator (small hierarchies, long weak-coupling
//! horizons) and adaptive time stepping (large hierarchies, short strong-
//! coupling horizons).

use crate::hierarchy::{steady_state, HierarchyGenerator, HierarchyState};
use crate::mat2::{self, Mat2};
use crate::rk45::{self, Rk45Options};
use crate::spectral::SpectralPropagator;
use crate::system::SystemSpec;
use crate::{Error, Result};
use num_complex::Complex64;
use std::ops::ControlFlow;

/// Scan resolution for the fidelity gap: a quarter of the fastest coherent
/// period in the problem (resonance + splitting stay below ~2.2 here), so a
/// recrossing lobe cannot slip between samples.
const GAP_SCAN_STEP: f64 = 0.35;
/// Hard cap on gap evaluations in one backward scan.
const GAP_SCAN_MAX_EVALS: usize = 4_000_000;
/// Margin under `eps_tol` that three staggered probe samples must clear
/// before the probe horizon is trusted (a single sample could sit on an
/// oscillation node).
const PROBE_MARGIN: f64 = 30.0;
/// A direct relaxation stops once the gap has fallen this far under
/// `eps_tol` (and the horizon covers twice the last crossing). Well above
/// the quadratic round-off floor of the fidelity, well below anything that
/// could still recross.
const GAP_STOP_FACTOR: f64 = 1e-3;
/// Accepted steps between convergence checkpoints when propagating a
/// hierarchy too large for the dense steady-state solve.
const CHECKPOINT_EVERY: usize = 256;
/// Maximum (t, gap) pairs kept in a report's trace.
const TRACE_POINTS: usize = 1024;
/// Horizon for the eigendecomposed path's crossing search. Evaluating the
/// analytic solution costs the same at any t, so this is not bounded by
/// `horizon_cap` (which budgets real integration time); it only stops the
/// doubling probe when the requested gap lies below the fidelity's
/// round-off floor and can never be reached.
const SPECTRAL_HORIZON: f64 = 1e12;

/// Uhlmann fidelity with input validation.
///
/// Both arguments must be positive semidefinite within `1e-8` (small
/// negative eigenvalues from propagation round-off are tolerated and
/// clamped); anything worse is a corrupted state and is rejected rather
/// than silently clamped into a plausible-looking number.
pub fn fidelity(rho: &Mat2, sigma: &Mat2) -> Result<f64> {
    for m in [rho, sigma] {
        let [lo, _] = m.hermitize().eigvals_hermitian();
        if lo < -1e-8 {
            return Err(Error::NonPositiveState { min_eig: lo });
        }
    }
    Ok(mat2::fidelity(rho, sigma))
}

/// Excited-level population clamped to `[0, 1]` for reporting.
pub fn excited_population(system: &SystemSpec, rho: &Mat2) -> f64 {
    system.excited_population(rho).clamp(0.0, 1.0)
}

/// Outcome of an equilibration-time measurement.
#[derive(Debug, Clone)]
pub struct EquilibrationReport {
    /// Last time the fidelity gap crossed `tolerance`. Zero when the
    /// trajectory never leaves the threshold ball.
    pub tau_eq: f64,
    /// The gap threshold the measurement used.
    pub tolerance: f64,
    /// `(t, 1 - F(rho(t), rho_ss))` samples covering twice the crossing.
    pub gap_trace: Vec<(f64, f64)>,
    /// False only in best-effort reports attached to a budget error.
    pub converged: bool,
}

/// Everything a relaxation query learns.
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub report: EquilibrationReport,
    /// Reduced state at `tau_eq`.
    pub rho_at_tau: Mat2,
    /// Interaction energy at `tau_eq`.
    pub e_int_at_tau: f64,
}

/// Solver knobs for relaxation queries. The defaults are the ones the cycle
/// driver uses; tests tighten or loosen individual fields.
#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    /// Fidelity-gap threshold defining tau_eq.
    pub eps_tol: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hierarchies up to this Liouville dimension are eigendecomposed;
    /// larger ones are time stepped.
    pub evd_dim_cap: usize,
    /// Largest dimension for the dense null-space steady-state solve.
    pub lu_dim_cap: usize,
    pub max_memory_mb: usize,
    /// Absolute time beyond which a time-stepped relaxation is abandoned.
    /// The eigendecomposed path ignores this: its crossing search is a pure
    /// function evaluation with no integration cost to budget.
    pub horizon_cap: f64,
    /// Residual bound a propagation-converged steady state must meet when
    /// the hierarchy is too large for the dense solve. The integrator's own
    /// noise floor sits near `rel_tol` times the generator norm, so the
    /// effective gate is `max(ss_residual_tol, 100 * rel_tol)`.
    pub ss_residual_tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            eps_tol: 1e-8,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            evd_dim_cap: 1500,
            lu_dim_cap: 14000,
            max_memory_mb: 4096,
            horizon_cap: 1e7,
            ss_residual_tol: 1e-8,
        }
    }
}

enum Path {
    Spectral(SpectralPropagator),
    Direct,
}

/// A prepared isochore: generator, steady state, and a propagation path.
///
/// Building one is the expensive part (dense eigendecomposition or a long
/// convergence propagation); afterwards each query from a new initial state
/// costs one triangular solve plus gap scans, which is what makes the
/// stop-time sweeps affordable.
pub struct Relaxer {
    gen: HierarchyGenerator,
    path: Path,
    ss: HierarchyState,
    e_int_ss: f64,
    opts: RelaxOptions,
}

impl Relaxer {
    pub fn new(gen: HierarchyGenerator, opts: RelaxOptions) -> Result<Self> {
        let dim = gen.dim();
        if dim <= opts.evd_dim_cap {
            match SpectralPropagator::new(&gen, opts.max_memory_mb) {
                Ok(sp) => {
                    if sp.spectral_gap() <= 1e-12 {
                        return Err(Error::DegenerateSteadyState);
                    }
                    // The null-space solve is authoritative for the steady
                    // state (it carries a residual bound); the spectrum only
                    // drives dynamics.
                    let ss = steady_state(&gen, opts.max_memory_mb)?;
                    let e_int_ss = gen.interaction_energy(&ss)?;
                    return Ok(Relaxer {
                        gen,
                        path: Path::Spectral(sp),
                        ss,
                        e_int_ss,
                        opts,
                    });
                }
                // An eigensolver failure is a reason to fall back to time
                // stepping, not to give up.
                Err(Error::Lapack { .. }) | Err(Error::IllConditionedSpectrum { .. }) => {}
                Err(e) => return Err(e),
            }
        }

        let (ss, _) = if dim <= opts.lu_dim_cap {
            (steady_state(&gen, opts.max_memory_mb)?, 0.0)
        } else {
            Self::converge_by_propagation(&gen, &opts)?
        };
        let e_int_ss = gen.interaction_energy(&ss)?;
        Ok(Relaxer {
            gen,
            path: Path::Direct,
            ss,
            e_int_ss,
            opts,
        })
    }

    pub fn generator(&self) -> &HierarchyGenerator {
        &self.gen
    }

    pub fn steady(&self) -> &HierarchyState {
        &self.ss
    }

    pub fn steady_reduced(&self) -> Mat2 {
        self.ss.reduced()
    }

    pub fn steady_interaction_energy(&self) -> f64 {
        self.e_int_ss
    }

    fn rk_options(&self) -> Rk45Options {
        Rk45Options {
            rel_tol: self.opts.rel_tol,
            abs_tol: self.opts.abs_tol,
            h_init: None,
            h_max: Some(self.gen.suggested_h_max()),
        }
    }

    /// Relax a hierarchy too large for the dense solve by propagating the
    /// thermal guess until the full hierarchy vector stops moving across a
    /// horizon doubling (Cauchy criterion). The derivative norm cannot serve
    /// as the stop test: the adaptive integrator keeps tolerance-level noise
    /// in the stiff bath modes alive forever, flooring the residual near
    /// `rel_tol` times the generator norm. Returns the state and stop time.
    fn converge_by_propagation(
        gen: &HierarchyGenerator,
        opts: &RelaxOptions,
    ) -> Result<(HierarchyState, f64)> {
        let guess = gen.system().thermal_state(gen.omega(), 1.0);
        let mut y = HierarchyState::factorized(&guess, gen.n_ado());
        let mut since_check = 0usize;
        let mut checkpoint: Option<(f64, Vec<Complex64>)> = None;
        let mut t_stop = -1.0;
        let rk = Rk45Options {
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol,
            h_init: None,
            h_max: Some(gen.suggested_h_max()),
        };
        rk45::integrate(
            |_, y, dy| gen.apply(y, dy),
            0.0,
            opts.horizon_cap,
            y.data_mut(),
            &rk,
            |t, ydata| {
                since_check += 1;
                if since_check >= CHECKPOINT_EVERY {
                    since_check = 0;
                    match &checkpoint {
                        Some((t0, y0)) if t >= 2.0 * t0 && t >= 20.0 => {
                            let drift = ydata
                                .iter()
                                .zip(y0)
                                .map(|(a, b)| (a - b).norm())
                                .fold(0.0, f64::max);
                            if drift <= 1e-10 {
                                t_stop = t;
                                return ControlFlow::Break(());
                            }
                            checkpoint = Some((t, ydata.to_vec()));
                        }
                        Some(_) => {}
                        None => checkpoint = Some((t, ydata.to_vec())),
                    }
                }
                ControlFlow::Continue(())
            },
        )?;
        if t_stop < 0.0 {
            return Err(Error::TimeBudgetExhausted {
                best_tau: opts.horizon_cap,
            });
        }
        let mut scratch = vec![Complex64::default(); gen.dim()];
        gen.apply(y.data(), &mut scratch);
        let residual = inf_norm(&scratch);
        let bound = opts.ss_residual_tol.max(100.0 * opts.rel_tol);
        if residual > bound {
            return Err(Error::SteadyStateResidual { residual, bound });
        }
        let tr = y.data()[0] + y.data()[3];
        for v in y.data_mut() {
            *v /= tr;
        }
        Ok((y, t_stop))
    }

    /// Equilibration time, steady-state approach data, and the state at
    /// tau_eq for a factorized initial condition `rho0`.
    pub fn relax_from(&self, rho0: &Mat2) -> Result<RelaxOutcome> {
        self.relax_from_with(rho0, self.opts.eps_tol)
    }

    /// Same as [`relax_from`](Self::relax_from) at an explicit gap threshold,
    /// for tolerance scans. Spectral-path rescans are cheap; the direct path
    /// re-propagates per call.
    pub fn relax_from_with(&self, rho0: &Mat2, eps_tol: f64) -> Result<RelaxOutcome> {
        match &self.path {
            Path::Spectral(sp) => self.relax_spectral(sp, rho0, eps_tol),
            Path::Direct => self.relax_direct(rho0, eps_tol),
        }
    }

    /// Reduced state and interaction energy at each requested time
    /// (ascending) along the relaxation from `rho0`.
    pub fn states_at(&self, rho0: &Mat2, times: &[f64]) -> Result<Vec<(Mat2, f64)>> {
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        match &self.path {
            Path::Spectral(sp) => {
                let y0 = HierarchyState::factorized(rho0, self.gen.n_ado());
                let c = sp.expand(y0.data())?;
                let n_lead = 4 * (self.gen.n_exp() + 1).min(self.gen.n_ado());
                let mut lead = vec![Complex64::default(); n_lead];
                times
                    .iter()
                    .map(|&t| {
                        sp.eval_leading(&c, t, &mut lead);
                        let rho = Mat2::from_vec4([lead[0], lead[1], lead[2], lead[3]]);
                        let e_int = self.gen.interaction_energy_from_leading(&lead)?;
                        Ok((rho, e_int))
                    })
                    .collect()
            }
            Path::Direct => {
                let mut y = HierarchyState::factorized(rho0, self.gen.n_ado());
                let rk = self.rk_options();
                let mut out = Vec::with_capacity(times.len());
                let mut t_prev = 0.0;
                for &t in times {
                    if t > t_prev {
                        rk45::integrate(
                            |_, y, dy| self.gen.apply(y, dy),
                            t_prev,
                            t,
                            y.data_mut(),
                            &rk,
                            |_, _| ControlFlow::Continue(()),
                        )?;
                        t_prev = t;
                    }
                    out.push((y.reduced(), self.gen.interaction_energy(&y)?));
                }
                Ok(out)
            }
        }
    }

    fn relax_spectral(
        &self,
        sp: &SpectralPropagator,
        rho0: &Mat2,
        eps: f64,
    ) -> Result<RelaxOutcome> {
        let y0 = HierarchyState::factorized(rho0, self.gen.n_ado());
        let c = sp.expand(y0.data())?;
        let ss_red = self.ss.reduced();

        let mut lead = [Complex64::default(); 4];
        let mut gap_at = |t: f64| -> f64 {
            sp.eval_leading(&c, t, &mut lead);
            // Renormalize: the stationary eigenvalue carries a round-off
            // real part ~1e-15, so the reconstruction's trace drifts like
            // e^(eps*t). Left in, that drift dominates the gap once the
            // probe horizon reaches ~1/eps and convergence is never
            // detected at weak coupling, where horizons are long.
            let rho = Mat2::from_vec4(lead);
            let tr = rho.trace();
            1.0 - mat2::fidelity(&rho.scale(tr.inv()), &ss_red)
        };

        // Push the probe horizon out until three staggered samples sit well
        // under threshold, then walk backwards for the last crossing. The
        // fidelity gap decays at twice the spectral gap, so 12 e-foldings of
        // the slowest mode comfortably covers an eps of 1e-8 from order-one
        // starting gaps.
        let mut t_hi = 12.0 / sp.spectral_gap();
        let tau = loop {
            if t_hi > SPECTRAL_HORIZON {
                return Err(Error::TimeBudgetExhausted { best_tau: t_hi / 2.0 });
            }
            if [1.0, 1.013, 1.029]
                .iter()
                .any(|&s| gap_at(s * t_hi) >= eps / PROBE_MARGIN)
            {
                t_hi *= 2.0;
                continue;
            }
            let dt = (t_hi / GAP_SCAN_MAX_EVALS as f64).max(GAP_SCAN_STEP);
            let mut t = t_hi;
            let mut found = None;
            while t > 0.0 {
                let t_lo = (t - dt).max(0.0);
                if gap_at(t_lo) >= eps {
                    found = Some((t_lo, t));
                    break;
                }
                t = t_lo;
            }
            match found {
                None => break 0.0,
                Some((mut lo, mut hi)) => {
                    if lo > t_hi / 2.0 {
                        // Crossing too close to the horizon: the probe has
                        // not covered twice the candidate yet.
                        t_hi *= 2.0;
                        continue;
                    }
                    while hi - lo > 1e-3 * lo.max(1e-9) {
                        let mid = 0.5 * (lo + hi);
                        if gap_at(mid) >= eps {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    break 0.5 * (lo + hi);
                }
            }
        };

        let mut gap_trace = Vec::with_capacity(TRACE_POINTS);
        gap_trace.push((0.0, gap_at(0.0)));
        let t_min = (t_hi * 1e-6).max(1e-3);
        let ratio = (t_hi / t_min).powf(1.0 / (TRACE_POINTS - 2) as f64);
        let mut t = t_min;
        for _ in 0..TRACE_POINTS - 1 {
            gap_trace.push((t, gap_at(t)));
            t *= ratio;
        }

        let n_lead = 4 * (self.gen.n_exp() + 1).min(self.gen.n_ado());
        let mut lead = vec![Complex64::default(); n_lead];
        sp.eval_leading(&c, tau, &mut lead);
        let rho_at_tau = Mat2::from_vec4([lead[0], lead[1], lead[2], lead[3]]);
        let e_int_at_tau = self.gen.interaction_energy_from_leading(&lead)?;

        Ok(RelaxOutcome {
            report: EquilibrationReport {
                tau_eq: tau,
                tolerance: eps,
                gap_trace,
                converged: true,
            },
            rho_at_tau,
            e_int_at_tau,
        })
    }

    fn relax_direct(&self, rho0: &Mat2, eps: f64) -> Result<RelaxOutcome> {
        let ss_red = self.ss.reduced();
        let mut y = HierarchyState::factorized(rho0, self.gen.n_ado());
        let rk = self.rk_options();

        // One pass records the reduced trajectory; crossings are found
        // afterwards. Stopping needs the gap to sit far below threshold and
        // the horizon to cover twice the last crossing seen so far, mirroring
        // the probe rule of the spectral path. The gap decays monotonically
        // up to coherent lobes, so "far below with double coverage" cannot be
        // faked by a lobe node.
        let mut samples: Vec<(f64, Mat2, f64)> = Vec::new();
        let mut max_imag = 0.0f64;
        let mut t_last_cross = 0.0f64;
        let mut t_end = -1.0;

        rk45::integrate(
            |_, y, dy| self.gen.apply(y, dy),
            0.0,
            self.opts.horizon_cap,
            y.data_mut(),
            &rk,
            |t, ydata| {
                let rho = Mat2(ydata[..4].try_into().unwrap());
                let (e_raw, imag) = raw_interaction_energy(&self.gen, ydata);
                max_imag = max_imag.max(imag);
                samples.push((t, rho, e_raw));
                let gap = 1.0 - mat2::fidelity(&rho, &ss_red);
                if gap >= eps {
                    t_last_cross = t;
                }
                if gap <= eps * GAP_STOP_FACTOR && t >= (2.0 * t_last_cross).max(20.0) {
                    t_end = t;
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            },
        )?;
        if max_imag > 1e-8 {
            return Err(Error::InteractionEnergyImaginary { imag: max_imag });
        }
        if t_end < 0.0 {
            return Err(Error::TimeBudgetExhausted {
                best_tau: t_last_cross,
            });
        }

        // Last crossing on the recorded trace, refined by log-linear
        // interpolation between the bracketing samples.
        let gaps: Vec<f64> = samples
            .iter()
            .map(|(_, rho, _)| 1.0 - mat2::fidelity(rho, &ss_red))
            .collect();
        let last_idx = gaps.iter().rposition(|&g| g >= eps);
        let tau = match last_idx {
            None => 0.0,
            Some(i) if i + 1 >= samples.len() => {
                return Err(Error::TimeBudgetExhausted {
                    best_tau: samples[i].0,
                })
            }
            Some(i) => {
                let (t0, g0) = (samples[i].0, gaps[i].max(eps));
                let (t1, g1) = (samples[i + 1].0, gaps[i + 1].min(eps * (1.0 - 1e-12)));
                t0 + (t1 - t0) * (g0 / eps).ln() / (g0 / g1).ln()
            }
        };

        let nearest = samples
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (a.0 - tau).abs().total_cmp(&(b.0 - tau).abs()))
            .map(|(i, _)| i)
            .unwrap();
        let rho_at_tau = samples[nearest].1;
        let e_int_at_tau = samples[nearest].2;

        let stride = samples.len().div_ceil(TRACE_POINTS);
        let gap_trace: Vec<(f64, f64)> = samples
            .iter()
            .zip(&gaps)
            .step_by(stride)
            .map(|((t, _, _), &g)| (*t, g))
            .collect();

        Ok(RelaxOutcome {
            report: EquilibrationReport {
                tau_eq: tau,
                tolerance: eps,
                gap_trace,
                converged: true,
            },
            rho_at_tau,
            e_int_at_tau,
        })
    }
}

/// One-shot equilibration time for a factorized initial state on the
/// isochore defined by `(system, omega, expansion, truncation)`.
pub fn equilibration_time(
    gen: HierarchyGenerator,
    rho0: &Mat2,
    eps_tol: f64,
) -> Result<EquilibrationReport> {
    let opts = RelaxOptions {
        eps_tol,
        ..RelaxOptions::default()
    };
    Ok(Relaxer::new(gen, opts)?.relax_from(rho0)?.report)
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// First-tier interaction energy without the imaginary-part rejection:
/// returns `(Re, |Im|)` so trajectory recording can defer the error check.
fn raw_interaction_energy(gen: &HierarchyGenerator, data: &[Complex64]) -> (f64, f64) {
    let mut acc = Complex64::default();
    for p in 1..=gen.n_exp().min(gen.n_ado() - 1) {
        // tr(sigma_z rho_p) = rho_p[0] - rho_p[3].
        acc += data[4 * p] - data[4 * p + 3];
    }
    (acc.re, acc.im.abs())
}
