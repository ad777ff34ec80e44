//! Direct steady-state solve: null space of the hierarchy generator with the
//! physical normalization `tr rho_S = 1` imposed as a row replacement.
//!
//! The generator conserves the reduced trace exactly (its zero-index block
//! row receives only commutator couplings), so the flattened operator always
//! has the trace functional in its left kernel; replacing the first scalar
//! row with the trace constraint removes that deficiency and pins the unique
//! steady state, when one exists. Zero coupling leaves a residual kernel
//! (any mixture of the two energy eigenstates is stationary) and must be
//! reported as degenerate, which surfaces here as a collapsed LU pivot.

use super::{HierarchyGenerator, HierarchyState};
use crate::lapack::LuFactors;
use crate::{Error, Result};
use num_complex::Complex64;

/// Relative pivot collapse below which the constrained system is treated as
/// rank-deficient (degenerate steady-state manifold).
const PIVOT_COLLAPSE: f64 = 1e-12;

/// Solve `G x = 0`, `tr x_0 = 1` by dense LU with one step of iterative
/// refinement. Fails if the assembled matrix would not fit in
/// `max_memory_mb`, if the constrained system is singular (degenerate
/// manifold), or if the final true residual exceeds
/// `1e-12 * ||G||_inf`.
pub fn steady_state(gen: &HierarchyGenerator, max_memory_mb: usize) -> Result<HierarchyState> {
    let dim = gen.dim();
    // Dense matrix plus LU copy and solve vectors.
    let need = dim * dim * std::mem::size_of::<Complex64>() + 4 * dim * 16;
    if need > max_memory_mb.saturating_mul(1 << 20) {
        return Err(Error::AdoBudgetExceeded {
            n_ado: gen.n_ado(),
            need_mb: need >> 20,
            budget_mb: max_memory_mb,
        });
    }

    let mut g = gen.assemble_dense();
    // Row 0 becomes the trace constraint on the zero-index ADO.
    for c in 0..dim {
        g[c * dim] = Complex64::default();
    }
    g[0] = Complex64::new(1.0, 0.0);
    g[3 * dim] = Complex64::new(1.0, 0.0);

    let lu = LuFactors::factor(g, dim)?;
    let (pmin, pmax) = lu.pivot_range();
    if pmin < PIVOT_COLLAPSE * pmax {
        return Err(Error::DegenerateSteadyState);
    }

    let mut x = vec![Complex64::default(); dim];
    x[0] = Complex64::new(1.0, 0.0);
    lu.solve(&mut x)?;

    // One refinement pass against the constrained operator, evaluated
    // matrix-free for a residual unpolluted by the factorization.
    let mut r = vec![Complex64::default(); dim];
    gen.apply(&x, &mut r);
    r[0] = x[0] + x[3] - Complex64::new(1.0, 0.0);
    for v in r.iter_mut() {
        *v = -*v;
    }
    lu.solve(&mut r)?;
    for (xi, di) in x.iter_mut().zip(r.iter()) {
        *xi += di;
    }

    // Normalize the reduced trace exactly, then measure the true residual
    // over every row of the unconstrained generator.
    let tr = x[0] + x[3];
    for v in x.iter_mut() {
        *v /= tr;
    }
    let mut resid = vec![Complex64::default(); dim];
    gen.apply(&x, &mut resid);
    let res = resid.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bound = 1e-12 * gen.norm_inf();
    if res > bound {
        return Err(Error::SteadyStateResidual {
            residual: res,
            bound,
        });
    }

    Ok(HierarchyState::from_raw(x))
}
