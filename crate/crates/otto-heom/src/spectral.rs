//! Eigendecomposition-based propagation of a (dense-assembled) hierarchy
//! generator.
//!
//! Weak coupling makes the hierarchy small but its relaxation horizon
//! enormous (tau_eq ~ 1/alpha), which is exactly the regime where an exact
//! `rho(t) = V e^{w t} V^{-1} rho(0)` beats time stepping: one
//! factorization, then any time is a matrix-vector evaluation, and the
//! fidelity-gap bisection for equilibration times needs only the leading
//! rows of the eigenvector matrix.

use crate::hierarchy::{HierarchyGenerator, HierarchyState};
use crate::lapack::{eig_general, LuFactors};
use crate::{Error, Result};
use num_complex::Complex64;

pub struct SpectralPropagator {
    dim: usize,
    eigvals: Vec<Complex64>,
    /// Right eigenvectors, column-major.
    vr: Vec<Complex64>,
    vr_lu: LuFactors,
    /// Index of the stationary mode (largest real part).
    steady_idx: usize,
    /// Slowest nonzero decay rate, `-max Re w` over non-stationary modes.
    gap: f64,
}

impl SpectralPropagator {
    /// Eigendecompose the generator. Needs roughly `3 dim^2` complex entries
    /// of workspace at peak; refuses politely when that exceeds the budget.
    pub fn new(gen: &HierarchyGenerator, max_memory_mb: usize) -> Result<Self> {
        let dim = gen.dim();
        let need = 3 * dim * dim * std::mem::size_of::<Complex64>();
        if need > max_memory_mb.saturating_mul(1 << 20) {
            return Err(Error::AdoBudgetExceeded {
                n_ado: gen.n_ado(),
                need_mb: need >> 20,
                budget_mb: max_memory_mb,
            });
        }

        let mut dense = gen.assemble_dense();
        let (eigvals, vr) = eig_general(&mut dense, dim)?;
        drop(dense);

        // The stationary mode: eigenvalue with the largest real part. A
        // healthy dissipative generator has exactly one near zero.
        let steady_idx = (0..dim)
            .max_by(|&a, &b| eigvals[a].re.total_cmp(&eigvals[b].re))
            .expect("nonempty spectrum");
        let gap = (0..dim)
            .filter(|&j| j != steady_idx)
            .map(|j| -eigvals[j].re)
            .fold(f64::INFINITY, f64::min);

        let vr_lu = LuFactors::factor(vr.clone(), dim)?;
        Ok(SpectralPropagator {
            dim,
            eigvals,
            vr,
            vr_lu,
            steady_idx,
            gap,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Slowest relaxation rate. Zero or negative means the steady state is
    /// not unique (degenerate manifold).
    pub fn spectral_gap(&self) -> f64 {
        self.gap
    }

    /// Expand an initial condition in the eigenbasis: solves `V c = y0`.
    ///
    /// The reconstruction `V c` is checked against `y0`; a relative defect
    /// above 1e-8 means the eigenbasis is too ill-conditioned to trust and
    /// the caller should fall back to direct time stepping.
    pub fn expand(&self, y0: &[Complex64]) -> Result<Vec<Complex64>> {
        assert_eq!(y0.len(), self.dim);
        let mut c = y0.to_vec();
        self.vr_lu.solve(&mut c)?;

        let scale = y0.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut defect = 0.0f64;
        for r in 0..self.dim {
            let mut acc = Complex64::default();
            for j in 0..self.dim {
                acc += self.vr[j * self.dim + r] * c[j];
            }
            defect = defect.max((acc - y0[r]).norm());
        }
        if defect > 1e-8 * scale {
            return Err(Error::IllConditionedSpectrum {
                defect: defect / scale,
            });
        }
        Ok(c)
    }

    /// Evaluate the leading `n_lead` components of `y(t)` for an expansion
    /// `c`. The reduced state needs `n_lead = 4`; interaction energies need
    /// `4 (n_exp + 1)`.
    pub fn eval_leading(&self, c: &[Complex64], t: f64, out: &mut [Complex64]) {
        let n_lead = out.len();
        debug_assert!(n_lead <= self.dim);
        out.fill(Complex64::default());
        for j in 0..self.dim {
            let w = self.eigvals[j];
            // Guard against round-off-positive stationary eigenvalues
            // blowing up at large probe times.
            let re = w.re.min(0.0);
            let phase = (Complex64::new(re, w.im) * t).exp() * c[j];
            if phase.norm_sqr() < 1e-200 {
                continue;
            }
            let col = &self.vr[j * self.dim..j * self.dim + n_lead];
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += phase * v;
            }
        }
    }

    /// Full state at time `t`.
    pub fn eval_state(&self, c: &[Complex64], t: f64) -> HierarchyState {
        let mut data = vec![Complex64::default(); self.dim];
        self.eval_leading(c, t, &mut data);
        HierarchyState::from_raw(data)
    }

    /// The stationary state, normalized to unit reduced trace.
    ///
    /// Degeneracy shows up as a second eigenvalue hugging zero or as a
    /// stationary vector with no weight in the physical trace; both are
    /// reported rather than normalized away.
    pub fn steady_state(&self) -> Result<HierarchyState> {
        if self.gap <= 1e-12 {
            return Err(Error::DegenerateSteadyState);
        }
        let col = &self.vr[self.steady_idx * self.dim..(self.steady_idx + 1) * self.dim];
        let tr = col[0] + col[3];
        let scale = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tr.norm() < 1e-10 * scale {
            return Err(Error::DegenerateSteadyState);
        }
        let data: Vec<Complex64> = col.iter().map(|&v| v / tr).collect();
        Ok(HierarchyState::from_raw(data))
    }
}
