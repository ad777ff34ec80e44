//! One driver per subcommand. Each returns the finished CSV text; the caller
//! owns flag parsing and output placement. Per-point failures follow the
//! strict/non-strict policy in [`crate::csvout::assemble`]; failures that
//! invalidate a whole table (bad config, bad grid, a solver build the rest of
//! the table depends on) abort in both modes.

use crate::config::{ExperimentConfig, SideDoc};
use crate::csvout::{assemble, b, f, Row};
use crate::CliError;
use otto_heom::brme::RedfieldModel;
use otto_heom::observables::excited_population;
use otto_heom::{
    isochore_relaxer, run_cycle, sweep, CycleConfig, CycleResult, CycleVariant, IsochoreSide,
    SweepAxis,
};

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub strict: bool,
    pub workers: usize,
}

impl Ctx<'_> {
    fn cycle(&self) -> Result<CycleConfig, CliError> {
        // Invariant violations in the document are schema errors, not run
        // failures: they must exit with the config status and the name of
        // the offending field.
        self.cfg.to_cycle().map_err(|e| CliError::Config(e.to_string()))
    }

    fn main_grid(&self) -> Result<Vec<f64>, CliError> {
        self.cfg.sweep.main_grid().map_err(CliError::Config)
    }

    fn trace_points(&self) -> Result<usize, CliError> {
        let n = self.cfg.trace.points;
        if n < 2 {
            return Err(CliError::Config(format!(
                "trace.points: need at least 2, got {n}"
            )));
        }
        Ok(n)
    }
}

fn variant_name(v: CycleVariant) -> &'static str {
    match v {
        CycleVariant::Equilibrating => "equilibrating",
        CycleVariant::InterruptedHot { .. } => "interrupted_hot",
        CycleVariant::InterruptedCold { .. } => "interrupted_cold",
    }
}

fn side_name(s: SideDoc) -> &'static str {
    match s {
        SideDoc::Hot => "hot",
        SideDoc::Cold => "cold",
    }
}

fn linear_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect()
}

/// Performance columns shared by the coupling and stop-time sweeps.
const PERF_COLS: &str = "W_ext,Q_h,Q_c,eta,tau_eq_h,tau_eq_c,power,hfom,engine_valid";

fn perf_cells(r: &CycleResult) -> Vec<String> {
    vec![
        f(r.w_ext),
        f(r.q_h),
        f(r.q_c),
        f(r.eta),
        f(r.tau_h_used),
        f(r.tau_c_used),
        f(r.power),
        f(r.hfom),
        b(r.engine_valid),
    ]
}

fn nan_cells(n: usize) -> Vec<String> {
    vec![f(f64::NAN); n]
}

fn perf_filler() -> Vec<String> {
    let mut cells = nan_cells(8);
    cells.push(b(false));
    cells
}

pub fn single_cycle(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let prefix = vec![
        variant_name(cycle.variant).to_string(),
        f(cycle.hot_bath.alpha),
        f(cycle.cold_bath.alpha),
    ];
    let row = match run_cycle(&cycle) {
        Ok(r) => {
            let mut cells = prefix;
            cells.extend([
                f(r.w1),
                f(r.w3),
                f(r.w_off_h),
                f(r.w_off_c),
                f(r.q_h),
                f(r.q_c),
                f(r.w_ext),
                f(r.eta),
                f(r.eta_otto),
                f(r.tau_h_used),
                f(r.tau_c_used),
                f(r.power),
                f(r.hfom),
                f(r.p_after_cold),
                f(r.p_after_hot),
                b(r.engine_valid),
                f(r.first_law_defect),
            ]);
            Row::ok(cells)
        }
        Err(e) => {
            let mut cells = prefix;
            cells.extend(nan_cells(15));
            cells.push(b(false));
            cells.push(f(f64::NAN));
            Row::failed(cells, cycle.hot_bath.alpha, e)
        }
    };
    Ok(assemble(
        "variant,alpha_h,alpha_c,W1,W3,W_off_h,W_off_c,Q_h,Q_c,W_ext,eta,eta_otto,tau_h_used,tau_c_used,power,hfom,p_after_cold,p_after_hot,engine_valid,first_law_defect",
        vec![row],
        ctx.strict,
        "alpha",
    )?)
}

pub fn sweep_coupling(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let grid = ctx.main_grid()?;
    let rows = sweep(&cycle, SweepAxis::Coupling, &grid, ctx.workers)?
        .into_iter()
        .map(|sr| {
            let mut cells = vec![f(sr.value)];
            match sr.result {
                Ok(r) => {
                    cells.extend(perf_cells(&r));
                    Row::ok(cells)
                }
                Err(e) => {
                    cells.extend(perf_filler());
                    Row::failed(cells, sr.value, e)
                }
            }
        })
        .collect();
    Ok(assemble(
        &format!("alpha,{PERF_COLS}"),
        rows,
        ctx.strict,
        "alpha",
    )?)
}

pub fn sweep_stop_time(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let grid = ctx.main_grid()?;
    let rows = sweep(&cycle, SweepAxis::StopTime, &grid, ctx.workers)?
        .into_iter()
        .map(|sr| {
            let mut cells = vec![f(sr.value)];
            match sr.result {
                Ok(r) => {
                    cells.extend(perf_cells(&r));
                    Row::ok(cells)
                }
                Err(e) => {
                    cells.extend(perf_filler());
                    Row::failed(cells, sr.value, e)
                }
            }
        })
        .collect();
    Ok(assemble(
        &format!("tau,{PERF_COLS}"),
        rows,
        ctx.strict,
        "tau",
    )?)
}

pub fn sweep_frequency(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let omegas = ctx.main_grid()?;
    match ctx.cfg.sweep.tau_grid().map_err(CliError::Config)? {
        Some(taus) => frequency_stop_time_product(ctx, &cycle, &omegas, &taus),
        None => {
            let rows = sweep(&cycle, SweepAxis::Frequency, &omegas, ctx.workers)?
                .into_iter()
                .map(|sr| {
                    let mut cells = vec![f(sr.value)];
                    match sr.result {
                        Ok(r) => {
                            cells.extend([
                                f(r.w_ext),
                                f(r.q_h),
                                f(r.q_c),
                                f(r.eta),
                                f(r.eta_otto),
                                f(r.tau_h_used),
                                f(r.tau_c_used),
                                f(r.power),
                                f(r.hfom),
                                b(r.engine_valid),
                            ]);
                            Row::ok(cells)
                        }
                        Err(e) => {
                            cells.extend(nan_cells(9));
                            cells.push(b(false));
                            Row::failed(cells, sr.value, e)
                        }
                    }
                })
                .collect();
            Ok(assemble(
                "omega_c,W_ext,Q_h,Q_c,eta,eta_otto,tau_eq_h,tau_eq_c,power,hfom,engine_valid",
                rows,
                ctx.strict,
                "omega_c",
            )?)
        }
    }
}

/// The two-axis form: for each cold splitting the interrupted stroke is swept
/// over the stop-time grid, reusing one strong-isochore solve per splitting.
fn frequency_stop_time_product(
    ctx: &Ctx,
    cycle: &CycleConfig,
    omegas: &[f64],
    taus: &[f64],
) -> Result<String, CliError> {
    if matches!(cycle.variant, CycleVariant::Equilibrating) {
        return Err(CliError::Config(
            "sweep.tau_grid on a frequency sweep needs an interrupted variant".into(),
        ));
    }
    let mut rows = Vec::with_capacity(omegas.len() * taus.len());
    for &w in omegas {
        match cycle.at_omega_c(w) {
            Ok(cyc_w) => {
                for sr in sweep(&cyc_w, SweepAxis::StopTime, taus, ctx.workers)? {
                    let mut cells = vec![f(w), f(sr.value)];
                    match sr.result {
                        Ok(r) => {
                            cells.extend([
                                f(r.w_ext),
                                f(r.q_h),
                                f(r.q_c),
                                f(r.eta),
                                f(r.eta_otto),
                                f(r.power),
                                f(r.hfom),
                                b(r.engine_valid),
                            ]);
                            rows.push(Row::ok(cells));
                        }
                        Err(e) => {
                            cells.extend(nan_cells(7));
                            cells.push(b(false));
                            rows.push(Row::failed(cells, sr.value, e));
                        }
                    }
                }
            }
            Err(e) => {
                // The splitting itself is invalid: every tau at this omega
                // fails alike.
                for &tau in taus {
                    let mut cells = vec![f(w), f(tau)];
                    cells.extend(nan_cells(7));
                    cells.push(b(false));
                    rows.push(Row::failed(cells, w, e.clone()));
                }
            }
        }
    }
    Ok(assemble(
        "omega_c,tau,W_ext,Q_h,Q_c,eta,eta_otto,power,hfom,engine_valid",
        rows,
        ctx.strict,
        "tau",
    )?)
}

pub fn isochore_trace(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let points = ctx.trace_points()?;
    let hot = isochore_relaxer(&cycle, IsochoreSide::Hot, None)?;
    let cold = isochore_relaxer(&cycle, IsochoreSide::Cold, None)?;
    let mut rows = Vec::new();
    for side in ctx.cfg.sweep.sides() {
        let (relaxer, entry_src, omega, bath, k) = match side {
            SideDoc::Hot => (
                &hot,
                &cold,
                cycle.system.omega_h,
                &cycle.hot_bath,
                cycle.solver.k_matsubara_hot,
            ),
            SideDoc::Cold => (
                &cold,
                &hot,
                cycle.system.omega_c,
                &cycle.cold_bath,
                cycle.solver.k_matsubara_cold,
            ),
        };
        let entry = entry_src.steady_reduced();
        let t_max = match ctx.cfg.trace.t_max {
            Some(t) => t,
            None => {
                let outcome = relaxer.relax_from(&entry)?;
                (2.0 * outcome.report.tau_eq).max(1.0)
            }
        };
        let grid = linear_grid(t_max, points);
        let heom = relaxer.states_at(&entry, &grid)?;
        let model = RedfieldModel::new(&cycle.system, omega, &bath.expand_correlation(k));
        let brme = model.propagate(&entry, &grid)?;
        let p_ss = excited_population(&cycle.system, &relaxer.steady_reduced());
        for ((t, (rho, e_int)), rho_b) in grid.iter().zip(heom).zip(brme) {
            rows.push(Row::ok(vec![
                side_name(side).to_string(),
                f(*t),
                f(excited_population(&cycle.system, &rho)),
                f(e_int),
                f(excited_population(&cycle.system, &rho_b)),
                f(p_ss),
            ]));
        }
    }
    Ok(assemble(
        "side,t,p_heom,e_int_heom,p_brme,p_ss_heom",
        rows,
        ctx.strict,
        "t",
    )?)
}

pub fn equilibration_scan(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let alphas = ctx.main_grid()?;
    let sides = ctx.cfg.sweep.sides();
    let eps_grid = ctx
        .cfg
        .sweep
        .eps_grid
        .clone()
        .unwrap_or_else(|| vec![cycle.solver.eps_tol]);
    if let Some(&bad) = eps_grid.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Config(format!(
            "sweep.eps_grid: thresholds must lie in (0, 1), got {bad}"
        )));
    }

    let mut rows = Vec::new();
    let fail_alpha = |rows: &mut Vec<Row>, alpha: f64, e: &otto_heom::Error| {
        for &side in &sides {
            for &eps in &eps_grid {
                let mut cells = vec![side_name(side).to_string(), f(alpha), f(eps)];
                cells.extend(nan_cells(5));
                rows.push(Row::failed(cells, alpha, e.clone()));
            }
        }
    };
    for &alpha in &alphas {
        let pair = cycle.at_coupling(alpha).and_then(|cyc_a| {
            let hot = isochore_relaxer(&cyc_a, IsochoreSide::Hot, None)?;
            let cold = isochore_relaxer(&cyc_a, IsochoreSide::Cold, None)?;
            Ok((hot, cold))
        });
        let (hot, cold) = match pair {
            Ok(p) => p,
            Err(e) => {
                fail_alpha(&mut rows, alpha, &e);
                continue;
            }
        };
        for &side in &sides {
            let (relaxer, entry_src) = match side {
                SideDoc::Hot => (&hot, &cold),
                SideDoc::Cold => (&cold, &hot),
            };
            let entry = entry_src.steady_reduced();
            let p_ss = excited_population(&cycle.system, &relaxer.steady_reduced());
            let e_int_ss = relaxer.steady_interaction_energy();
            for &eps in &eps_grid {
                let mut cells = vec![side_name(side).to_string(), f(alpha), f(eps)];
                match relaxer.relax_from_with(&entry, eps) {
                    Ok(oc) => {
                        cells.extend([
                            f(oc.report.tau_eq),
                            f(excited_population(&cycle.system, &oc.rho_at_tau)),
                            f(oc.e_int_at_tau),
                            f(p_ss),
                            f(e_int_ss),
                        ]);
                        rows.push(Row::ok(cells));
                    }
                    Err(e) => {
                        cells.extend(nan_cells(5));
                        rows.push(Row::failed(cells, alpha, e));
                    }
                }
            }
        }
    }
    Ok(assemble(
        "side,alpha,eps,tau_eq,p_at_tau,e_int_at_tau,p_ss,e_int_ss",
        rows,
        ctx.strict,
        "alpha",
    )?)
}

pub fn bath_check(ctx: &Ctx) -> Result<String, CliError> {
    let cycle = ctx.cycle()?;
    let points = ctx.trace_points()?;
    let t_max = ctx.cfg.trace.t_max.unwrap_or(200.0);
    let grid = linear_grid(t_max, points);
    let mut rows = Vec::new();
    for (name, bath, k_run) in [
        ("hot", &cycle.hot_bath, cycle.solver.k_matsubara_hot),
        ("cold", &cycle.cold_bath, cycle.solver.k_matsubara_cold),
    ] {
        // Probe the expansion machinery at a depth where the truncated
        // Matsubara tail sits below the reporting tolerance. Runs can use
        // fewer terms because the generator's terminator folds the
        // residual tail back in, but a raw exponential sum cannot, and at
        // t = 0 the tail of a cold bath is a few 1e-5 of C(0).
        let k = k_run.max(12);
        let expansion = bath.expand_correlation(k);
        let scale = bath.correlation_quadrature(0.0, 1e-12).norm();
        for &t in &grid {
            let ce = expansion.correlation(t);
            let cq = bath.correlation_quadrature(t, 1e-12);
            let abs_err = (ce - cq).norm();
            rows.push(Row::ok(vec![
                name.to_string(),
                f(t),
                f(ce.re),
                f(ce.im),
                f(cq.re),
                f(cq.im),
                f(abs_err),
                f(abs_err / scale),
            ]));
        }
    }
    Ok(assemble(
        "bath,t,c_re_expansion,c_im_expansion,c_re_quadrature,c_im_quadrature,abs_err,rel_err",
        rows,
        ctx.strict,
        "t",
    )?)
}
