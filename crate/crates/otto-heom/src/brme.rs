//! Weak-coupling Bloch-Redfield baseline.
//!
//! Second-order perturbative master equation for the same system and bath,
//! used to anchor the weak-coupling limit of the exact hierarchy and to
//! expose where perturbation theory starts lying. The bath enters through
//! the analytic half-Fourier transform of the truncated exponential
//! expansion, so baseline and hierarchy share one bath description exactly.
//!
//! The default generator is the full non-secular Redfield tensor
//!
//! ```text
//! d rho/dt = -i[H, rho] - [V, Lam rho - rho Lam^dag],
//! Lam = sum_w Gamma_half(w) V_w,
//! ```
//!
//! with the frequency-resolved jump operators `V_w` of the coupling `V` and
//! `Gamma_half(w) = int_0^inf C(s) e^{iws} ds`. Imaginary parts of
//! `Gamma_half` (Lamb-type shifts) are kept. The secular mode rotates this
//! into GKSL form: jump dissipators with rates `2 Re Gamma_half(w)` plus an
//! explicit Lamb-shift Hamiltonian, guaranteeing positivity at the price of
//! dropping population-coherence cross terms.

use crate::bath::BathExpansion;
use crate::lapack::LuFactors;
use crate::mat2::{
    self, anticommutator_superop, apply_super4, commutator_superop, sandwich_superop, super4_mul,
    super4_scale, super4_sub, Mat2, Super4,
};
use crate::rk45::{self, Rk45Options};
use crate::system::SystemSpec;
use crate::{Error, Result};
use num_complex::Complex64;
use std::ops::ControlFlow;

/// Frequency-resolved parts of the coupling operator: `v0` commutes with the
/// Hamiltonian, `lower` takes the excited level down (Bohr frequency
/// `+omega`), `raise = lower^dag`.
struct JumpOps {
    v0: Mat2,
    lower: Mat2,
    raise: Mat2,
}

fn jump_ops(system: &SystemSpec) -> JumpOps {
    let p_plus = system.excited_projector();
    let p_minus = Mat2::identity().sub(&p_plus);
    let v = system.coupling_op();
    JumpOps {
        v0: p_plus.mul(&v).mul(&p_plus).add(&p_minus.mul(&v).mul(&p_minus)),
        lower: p_minus.mul(&v).mul(&p_plus),
        raise: p_plus.mul(&v).mul(&p_minus),
    }
}

#[derive(Debug, Clone)]
pub struct RedfieldModel {
    generator: Super4,
    norm_inf: f64,
}

impl RedfieldModel {
    /// Non-secular Redfield generator for the isochore at splitting `omega`.
    pub fn new(system: &SystemSpec, omega: f64, expansion: &BathExpansion) -> Self {
        let j = jump_ops(system);
        let g0 = expansion.half_fourier(0.0);
        let gp = expansion.half_fourier(omega);
        let gm = expansion.half_fourier(-omega);
        let lam = j
            .v0
            .scale(g0)
            .add(&j.lower.scale(gp))
            .add(&j.raise.scale(gm));

        let h = system.hamiltonian(omega);
        let unitary = super4_scale(&commutator_superop(&h), -Complex64::i());
        let inner = super4_sub(
            &mat2::left_mul_superop(&lam),
            &mat2::right_mul_superop(&lam.adjoint()),
        );
        let damping = super4_mul(&commutator_superop(&system.coupling_op()), &inner);
        let generator = super4_sub(&unitary, &damping);
        Self::finish(generator)
    }

    /// Secular GKSL form: jump dissipators at rates `2 Re Gamma_half` plus
    /// the Lamb-shift Hamiltonian `sum_w Im Gamma_half(w) V_w^dag V_w`.
    pub fn new_secular(system: &SystemSpec, omega: f64, expansion: &BathExpansion) -> Self {
        let j = jump_ops(system);
        let channels = [
            (expansion.half_fourier(0.0), &j.v0),
            (expansion.half_fourier(omega), &j.lower),
            (expansion.half_fourier(-omega), &j.raise),
        ];

        let mut h = system.hamiltonian(omega);
        let mut dissipator = [Complex64::default(); 16];
        for (g, a) in channels {
            let ada = a.adjoint().mul(a);
            h = h.add(&ada.scale(Complex64::new(g.im, 0.0)));
            let jump = sandwich_superop(a, &a.adjoint());
            let decay = super4_scale(&anticommutator_superop(&ada), Complex64::new(0.5, 0.0));
            let d = super4_scale(
                &super4_sub(&jump, &decay),
                Complex64::new(2.0 * g.re, 0.0),
            );
            dissipator = mat2::super4_add(&dissipator, &d);
        }
        let unitary = super4_scale(&commutator_superop(&h), -Complex64::i());
        Self::finish(mat2::super4_add(&unitary, &dissipator))
    }

    fn finish(generator: Super4) -> Self {
        let norm_inf = (0..4)
            .map(|r| (0..4).map(|c| generator[r * 4 + c].norm()).sum())
            .fold(0.0f64, f64::max);
        RedfieldModel {
            generator,
            norm_inf,
        }
    }

    pub fn generator(&self) -> &Super4 {
        &self.generator
    }

    /// Right-hand side `L rho`.
    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        Mat2(apply_super4(&self.generator, &rho.0))
    }

    /// States at the requested (ascending) times along the evolution from
    /// `rho0`.
    pub fn propagate(&self, rho0: &Mat2, times: &[f64]) -> Result<Vec<Mat2>> {
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        let opts = Rk45Options::default();
        let mut y = rho0.to_vec4().to_vec();
        let mut out = Vec::with_capacity(times.len());
        let mut t_prev = 0.0;
        for &t in times {
            if t > t_prev {
                rk45::integrate(
                    |_, y, dy| {
                        let v = [y[0], y[1], y[2], y[3]];
                        dy.copy_from_slice(&apply_super4(&self.generator, &v));
                    },
                    t_prev,
                    t,
                    &mut y,
                    &opts,
                    |_, _| ControlFlow::Continue(()),
                )?;
                t_prev = t;
            }
            out.push(Mat2([y[0], y[1], y[2], y[3]]));
        }
        Ok(out)
    }

    /// Null-space steady state, normalized to unit trace. The zero-coupling
    /// generator is purely unitary and has no unique fixed point; that case
    /// is reported as degenerate.
    pub fn steady_state(&self) -> Result<Mat2> {
        // Column-major copy with the redundant first row (trace preservation
        // makes row0 = -row3) replaced by the trace functional.
        let mut g = vec![Complex64::default(); 16];
        for r in 0..4 {
            for c in 0..4 {
                g[c * 4 + r] = if r == 0 {
                    if c == 0 || c == 3 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::default()
                    }
                } else {
                    self.generator[r * 4 + c]
                };
            }
        }
        let lu = LuFactors::factor(g, 4)?;
        let (piv_min, _) = lu.pivot_range();
        if piv_min < 1e-12 * self.norm_inf.max(1.0) {
            return Err(Error::DegenerateSteadyState);
        }
        let mut x = vec![Complex64::default(); 4];
        x[0] = Complex64::new(1.0, 0.0);
        lu.solve(&mut x)?;
        let tr = x[0] + x[3];
        for v in &mut x {
            *v /= tr;
        }

        let rho = Mat2([x[0], x[1], x[2], x[3]]);
        let resid = self.apply(&rho).norm();
        let bound = 1e-12 * self.norm_inf.max(1.0);
        if resid > bound {
            return Err(Error::SteadyStateResidual {
                residual: resid,
                bound,
            });
        }
        Ok(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;

    fn expansion(alpha: f64, omega0: f64, beta: f64, k: usize) -> BathExpansion {
        BathSpec::new(alpha, omega0, 0.05, beta)
            .unwrap()
            .expand_correlation(k)
    }

    #[test]
    fn jump_operators_decompose_the_coupling() {
        let sys = SystemSpec::default_engine();
        let j = jump_ops(&sys);
        let total = j.v0.add(&j.lower).add(&j.raise);
        assert!(total.sub(&sys.coupling_op()).norm() < 1e-14);

        // [H, V_w] = -w V_w for each frequency component.
        let omega = 0.8;
        let h = sys.hamiltonian(omega);
        assert!(h.commutator(&j.v0).norm() < 1e-14);
        let lhs = h.commutator(&j.lower);
        let rhs = j.lower.scale(Complex64::new(-omega, 0.0));
        assert!(lhs.sub(&rhs).norm() < 1e-14);
        assert!(j.raise.sub(&j.lower.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity() {
        let sys = SystemSpec::default_engine();
        let exp = expansion(1e-3, 1.0, 0.5, 3);
        for model in [
            RedfieldModel::new(&sys, 1.0, &exp),
            RedfieldModel::new_secular(&sys, 1.0, &exp),
        ] {
            for seed in 0..50u64 {
                let rho = crate::mat2::tests_support::random_state(seed);
                let d = model.apply(&rho);
                assert!(d.trace().norm() < 1e-14);
                assert!(d.herm_defect() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_coupling_propagation_is_unitary_and_has_no_steady_state() {
        let sys = SystemSpec::default_engine();
        let exp = expansion(0.0, 1.0, 0.5, 3);
        let model = RedfieldModel::new(&sys, 1.0, &exp);
        assert!(matches!(
            model.steady_state(),
            Err(Error::DegenerateSteadyState)
        ));

        // |+x> precesses without losing purity.
        let half = Complex64::new(0.5, 0.0);
        let rho0 = Mat2([half, half, half, half]);
        let states = model.propagate(&rho0, &[3.0, 17.0]).unwrap();
        for rho in &states {
            let p2 = rho.mul(rho).trace().re;
            // Bounded by the integrator tolerance, not exactly conserved.
            assert!((p2 - 1.0).abs() < 1e-7, "purity drifted: {p2}");
        }
    }

    #[test]
    fn weak_coupling_steady_state_sits_on_gibbs() {
        let sys = SystemSpec::default_engine();
        for (omega, beta) in [(1.0, 0.5), (0.5, 2.5)] {
            let exp = expansion(1e-4, omega, beta, 5);
            let gibbs = sys.thermal_state(omega, beta);
            for model in [
                RedfieldModel::new(&sys, omega, &exp),
                RedfieldModel::new_secular(&sys, omega, &exp),
            ] {
                let ss = model.steady_state().unwrap();
                // Half trace norm of the difference.
                let delta = ss.sub(&gibbs).hermitize();
                let [a, b] = delta.eigvals_hermitian();
                let dist = 0.5 * (a.abs() + b.abs());
                assert!(dist < 1e-3, "omega={omega}: trace distance {dist:e}");
            }
        }
    }

    #[test]
    fn propagation_reaches_the_steady_state() {
        let sys = SystemSpec::default_engine();
        let exp = expansion(1e-2, 1.0, 0.5, 3);
        let model = RedfieldModel::new(&sys, 1.0, &exp);
        let ss = model.steady_state().unwrap();
        let rho0 = sys.thermal_state(0.5, 2.5);
        let far = model.propagate(&rho0, &[400.0]).unwrap();
        assert!(far[0].sub(&ss).norm() < 1e-8);
    }

    #[test]
    fn secular_approximation_error_vanishes_with_coupling() {
        // Non-secular steady states keep eigenbasis coherences of order
        // rate/omega, so the two models agree only in the weak limit; the
        // gap must scale down linearly with alpha.
        let sys = SystemSpec::default_engine();
        let gap_at = |alpha: f64| {
            let exp = expansion(alpha, 1.0, 0.5, 3);
            let a = RedfieldModel::new(&sys, 1.0, &exp).steady_state().unwrap();
            let b = RedfieldModel::new_secular(&sys, 1.0, &exp)
                .steady_state()
                .unwrap();
            a.sub(&b).norm()
        };
        let (weak, strong) = (gap_at(1e-4), gap_at(1e-2));
        assert!(weak < 1e-4, "weak-coupling secular gap {weak:e}");
        assert!(
            weak < 0.03 * strong,
            "secular gap did not scale down: {weak:e} vs {strong:e}"
        );
    }
}
