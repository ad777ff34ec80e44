//! The working medium: a two-level system with Hamiltonian
//! `H(omega) = (omega/2)(r_x sigma_x + r_z sigma_z + 1)`, coupled to the
//! baths through `V = sigma_z`.
//!
//! The Bloch axis `(r_x, 0, r_z)` is unit length, so `H(omega)` has
//! eigenvalues `{0, omega}`: the ground state sits at zero energy and the
//! excited level at `omega`. Because the axis does not depend on `omega`,
//! the compression and expansion strokes only rescale the splitting; the
//! eigenbasis (and hence the state, under an instantaneous quench) is left
//! untouched, and the excited-state projector is shared by both isochores.

use crate::mat2::Mat2;
use crate::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub omega_h: f64,
    pub omega_c: f64,
    pub r_x: f64,
    pub r_z: f64,
}

impl SystemSpec {
    /// Validates the constructor invariants: `omega_h > 0`,
    /// `0 < omega_c <= omega_h`, and `r_x^2 + r_z^2 = 1` (within 1e-9).
    pub fn new(omega_h: f64, omega_c: f64, r_x: f64, r_z: f64) -> Result<Self> {
        if !(omega_h > 0.0) {
            return Err(Error::InvalidParameter {
                what: "omega_h",
                why: format!("must be positive, got {omega_h}"),
            });
        }
        if !(omega_c > 0.0 && omega_c <= omega_h) {
            return Err(Error::InvalidParameter {
                what: "omega_c",
                why: format!("must satisfy 0 < omega_c <= omega_h, got {omega_c}"),
            });
        }
        let norm2 = r_x * r_x + r_z * r_z;
        if (norm2 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                what: "(r_x, r_z)",
                why: format!("Bloch axis must be unit length (r_x^2 + r_z^2 = 1), got {norm2}"),
            });
        }
        Ok(SystemSpec {
            omega_h,
            omega_c,
            r_x,
            r_z,
        })
    }

    /// The engine studied throughout: `omega_h = 1`, `omega_c = 1/2`,
    /// Bloch axis at 60 degrees from z (`r_x = sqrt(3)/2`, `r_z = 1/2`).
    pub fn default_engine() -> Self {
        SystemSpec {
            omega_h: 1.0,
            omega_c: 0.5,
            r_x: 0.75f64.sqrt(),
            r_z: 0.5,
        }
    }

    pub fn hamiltonian(&self, omega: f64) -> Mat2 {
        let sx = Mat2::sigma_x().scale(Complex64::new(self.r_x, 0.0));
        let sz = Mat2::sigma_z().scale(Complex64::new(self.r_z, 0.0));
        sx.add(&sz)
            .add(&Mat2::identity())
            .scale(Complex64::new(0.5 * omega, 0.0))
    }

    /// System side of the interaction Hamiltonian.
    pub fn coupling_op(&self) -> Mat2 {
        Mat2::sigma_z()
    }

    /// Projector onto the excited eigenstate, common to both splittings.
    pub fn excited_projector(&self) -> Mat2 {
        let sx = Mat2::sigma_x().scale(Complex64::new(self.r_x, 0.0));
        let sz = Mat2::sigma_z().scale(Complex64::new(self.r_z, 0.0));
        sx.add(&sz)
            .add(&Mat2::identity())
            .scale(Complex64::new(0.5, 0.0))
    }

    /// Excited-state population `tr(P_+ rho)`.
    pub fn excited_population(&self, rho: &Mat2) -> f64 {
        self.excited_projector().mul(rho).trace().re
    }

    /// Mean system energy `tr(H(omega) rho) = omega p`.
    pub fn energy(&self, rho: &Mat2, omega: f64) -> f64 {
        omega * self.excited_population(rho)
    }

    /// Gibbs weight of the excited level, `1 / (1 + e^{beta omega})`.
    pub fn thermal_population(omega: f64, beta: f64) -> f64 {
        1.0 / (1.0 + (beta * omega).exp())
    }

    /// Thermal state of `H(omega)` at inverse temperature `beta`.
    pub fn thermal_state(&self, omega: f64, beta: f64) -> Mat2 {
        let p = Self::thermal_population(omega, beta);
        let proj = self.excited_projector();
        Mat2::identity()
            .scale(Complex64::new(1.0 - p, 0.0))
            .add(&proj.scale(Complex64::new(2.0 * p - 1.0, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_spectrum_is_zero_and_omega() {
        let sys = SystemSpec::default_engine();
        for omega in [0.5, 1.0, 0.37] {
            let vals = sys.hamiltonian(omega).eigvals_hermitian();
            assert!(vals[0].abs() < 1e-14);
            assert!((vals[1] - omega).abs() < 1e-14);
        }
    }

    #[test]
    fn quench_shifts_only_the_excited_level() {
        let sys = SystemSpec::default_engine();
        let dh = sys
            .hamiltonian(sys.omega_h)
            .sub(&sys.hamiltonian(sys.omega_c));
        let expected = sys
            .excited_projector()
            .scale(Complex64::new(sys.omega_h - sys.omega_c, 0.0));
        assert!(dh.sub(&expected).norm() < 1e-14);
    }

    #[test]
    fn thermal_state_populations() {
        let sys = SystemSpec::default_engine();
        // Engine defaults: beta_h omega_h = 0.5 and beta_c omega_h = 2.5.
        let p_h = SystemSpec::thermal_population(1.0, 0.5);
        let p_c = SystemSpec::thermal_population(0.5, 2.5);
        assert!((p_h - 0.377540668798145).abs() < 1e-12);
        assert!((p_c - 0.222700138825309).abs() < 1e-12);

        for (omega, beta) in [(1.0, 0.5), (0.5, 2.5)] {
            let rho = sys.thermal_state(omega, beta);
            assert!((rho.trace().re - 1.0).abs() < 1e-14);
            assert!(rho.herm_defect() < 1e-15);
            let p = sys.excited_population(&rho);
            assert!((p - SystemSpec::thermal_population(omega, beta)).abs() < 1e-14);
            // Thermal states commute with H, so energy is omega * p.
            assert!((sys.energy(&rho, omega) - omega * p).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_unit_bloch_axis() {
        assert!(SystemSpec::new(1.0, 0.5, 0.9, 0.5).is_err());
        assert!(SystemSpec::new(1.0, 0.5, 0.75f64.sqrt(), 0.5).is_ok());
        assert!(SystemSpec::new(-1.0, 0.5, 0.0, 1.0).is_err());
        assert!(SystemSpec::new(1.0, 1.5, 0.0, 1.0).is_err());
    }
}
