//! Dense 2x2 complex matrices and the handful of qubit-specific operations
//! the engine needs: Pauli algebra, closed-form Hermitian eigensystems, PSD
//! square roots and Uhlmann fidelity.
//!
//! Reduced states and system Hamiltonians never leave 2x2, so everything here
//! is closed-form; LAPACK is reserved for the hierarchy-sized problems.

use crate::{Error, Result};
use num_complex::Complex64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2x2 complex matrix: `[m00, m01, m10, m11]`.
///
/// The same layout doubles as the Liouville-space vector order
/// `(rho00, rho01, rho10, rho11)` used by the hierarchy and the
/// Bloch-Redfield propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [Complex64; 4]);

impl Mat2 {
    pub fn zero() -> Self {
        Mat2([ZERO; 4])
    }

    pub fn identity() -> Self {
        Mat2([ONE, ZERO, ZERO, ONE])
    }

    pub fn sigma_x() -> Self {
        Mat2([ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> Self {
        Mat2([ZERO, -I, I, ZERO])
    }

    pub fn sigma_z() -> Self {
        Mat2([ONE, ZERO, ZERO, -ONE])
    }

    /// Diagonal matrix from two real entries.
    pub fn diag(a: f64, b: f64) -> Self {
        Mat2([Complex64::new(a, 0.0), ZERO, ZERO, Complex64::new(b, 0.0)])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0] + self.0[3]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0] * self.0[3] - self.0[1] * self.0[2]
    }

    pub fn adjoint(&self) -> Self {
        Mat2([
            self.0[0].conj(),
            self.0[2].conj(),
            self.0[1].conj(),
            self.0[3].conj(),
        ])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Mat2([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn add(&self, other: &Mat2) -> Self {
        Mat2([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
            self.0[3] + other.0[3],
        ])
    }

    pub fn sub(&self, other: &Mat2) -> Self {
        Mat2([
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
            self.0[3] - other.0[3],
        ])
    }

    pub fn mul(&self, other: &Mat2) -> Self {
        let a = &self.0;
        let b = &other.0;
        Mat2([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    pub fn commutator(&self, other: &Mat2) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn anticommutator(&self, other: &Mat2) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    /// Hermitian part `(A + A^dag)/2`.
    pub fn hermitize(&self) -> Self {
        self.add(&self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    /// Largest absolute deviation from Hermiticity, `max |A - A^dag|_ij`.
    pub fn herm_defect(&self) -> f64 {
        let d = self.sub(&self.adjoint());
        d.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues of a Hermitian matrix, ascending. Uses the real diagonal
    /// and ignores any anti-Hermitian residue.
    pub fn eigvals_hermitian(&self) -> [f64; 2] {
        let a = self.0[0].re;
        let d = self.0[3].re;
        let b = 0.5 * (self.0[1] + self.0[2].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Full eigensystem of a Hermitian matrix: `(eigenvalues ascending,
    /// [v_lo, v_hi])` with orthonormal eigenvectors as column pairs.
    pub fn eigh(&self) -> ([f64; 2], [[Complex64; 2]; 2]) {
        let a = self.0[0].re;
        let d = self.0[3].re;
        let b = 0.5 * (self.0[1] + self.0[2].conj());
        let mean = 0.5 * (a + d);
        let delta = 0.5 * (a - d);
        let r = (delta * delta + b.norm_sqr()).sqrt();
        if b.norm() < 1e-300 {
            // Already diagonal; order eigenvectors to match ascending values.
            let (v_lo, v_hi) = if a <= d {
                ([ONE, ZERO], [ZERO, ONE])
            } else {
                ([ZERO, ONE], [ONE, ZERO])
            };
            return ([mean - r, mean + r], [v_lo, v_hi]);
        }
        // (b, r - delta) is an eigenvector for mean + r; the orthogonal
        // complement serves mean - r.
        let hi = [b, Complex64::new(r - delta, 0.0)];
        let n_hi = (hi[0].norm_sqr() + hi[1].norm_sqr()).sqrt();
        let v_hi = [hi[0] / n_hi, hi[1] / n_hi];
        let v_lo = [-v_hi[1].conj(), v_hi[0].conj()];
        ([mean - r, mean + r], [v_lo, v_hi])
    }

    /// Square root of a positive semidefinite matrix.
    ///
    /// Eigenvalues dipping below zero by at most `1e-10` are treated as
    /// round-off and clamped; a larger violation is reported as an error so
    /// broken states surface instead of propagating NaNs.
    pub fn sqrt_psd(&self) -> Result<Mat2> {
        let (vals, vecs) = self.eigh();
        let mut sq = [0.0f64; 2];
        for (s, &v) in sq.iter_mut().zip(vals.iter()) {
            if v < -1e-10 {
                return Err(Error::NonPositiveState { min_eig: vals[0] });
            }
            *s = v.max(0.0).sqrt();
        }
        let mut out = Mat2::zero();
        for (s, v) in sq.iter().zip(vecs.iter()) {
            let w = Complex64::new(*s, 0.0);
            out.0[0] += w * v[0] * v[0].conj();
            out.0[1] += w * v[0] * v[1].conj();
            out.0[2] += w * v[1] * v[0].conj();
            out.0[3] += w * v[1] * v[1].conj();
        }
        Ok(out)
    }

    /// Liouville-space vector in the `(rho00, rho01, rho10, rho11)` order.
    pub fn to_vec4(&self) -> [Complex64; 4] {
        self.0
    }

    pub fn from_vec4(v: [Complex64; 4]) -> Self {
        Mat2(v)
    }
}

/// Row-major 4x4 superoperator acting on the `(rho00, rho01, rho10, rho11)`
/// vectorization.
pub type Super4 = [Complex64; 16];

/// Kronecker product of two 2x2 matrices, row-major 4x4.
pub fn kron(a: &Mat2, b: &Mat2) -> Super4 {
    let mut out = [ZERO; 16];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(i * 2 + k) * 4 + (j * 2 + l)] = a.0[i * 2 + j] * b.0[k * 2 + l];
                }
            }
        }
    }
    out
}

fn transpose2(a: &Mat2) -> Mat2 {
    Mat2([a.0[0], a.0[2], a.0[1], a.0[3]])
}

/// Superoperator for left multiplication, `vec(A rho) = L vec(rho)`.
pub fn left_mul_superop(a: &Mat2) -> Super4 {
    kron(a, &Mat2::identity())
}

/// Superoperator for right multiplication, `vec(rho B) = R vec(rho)`.
pub fn right_mul_superop(b: &Mat2) -> Super4 {
    kron(&Mat2::identity(), &transpose2(b))
}

/// Superoperator for `[A, .]`.
pub fn commutator_superop(a: &Mat2) -> Super4 {
    let l = left_mul_superop(a);
    let r = right_mul_superop(a);
    std::array::from_fn(|i| l[i] - r[i])
}

/// Superoperator for `{A, .}`.
pub fn anticommutator_superop(a: &Mat2) -> Super4 {
    let l = left_mul_superop(a);
    let r = right_mul_superop(a);
    std::array::from_fn(|i| l[i] + r[i])
}

/// Dense 4x4 apply, `out = M v`.
pub fn apply_super4(m: &Super4, v: &[Complex64; 4]) -> [Complex64; 4] {
    std::array::from_fn(|i| {
        m[i * 4] * v[0] + m[i * 4 + 1] * v[1] + m[i * 4 + 2] * v[2] + m[i * 4 + 3] * v[3]
    })
}

pub fn super4_add(a: &Super4, b: &Super4) -> Super4 {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn super4_sub(a: &Super4, b: &Super4) -> Super4 {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn super4_scale(a: &Super4, s: Complex64) -> Super4 {
    std::array::from_fn(|i| a[i] * s)
}

/// Composition `A B` of two superoperators (apply `B` first).
pub fn super4_mul(a: &Super4, b: &Super4) -> Super4 {
    let mut out = [ZERO; 16];
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += a[r * 4 + k] * b[k * 4 + c];
            }
            out[r * 4 + c] = acc;
        }
    }
    out
}

/// Superoperator for the sandwich `rho -> A rho B`.
pub fn sandwich_superop(a: &Mat2, b: &Mat2) -> Super4 {
    kron(a, &transpose2(b))
}

/// Uhlmann fidelity `F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho))`
/// through the qubit closed form `F^2 = tr(rho sigma) + 2 sqrt(det rho det
/// sigma)`, which is exact for 2x2 states and avoids matrix square roots in
/// the equilibration-time sampling loop.
///
/// Tiny negative determinants from round-off are clamped; the result is
/// clamped to `[0, 1]`.
pub fn fidelity(rho: &Mat2, sigma: &Mat2) -> f64 {
    let tr = rho.mul(sigma).trace().re;
    let d = (rho.det().re).max(0.0) * (sigma.det().re).max(0.0);
    let f2 = tr + 2.0 * d.sqrt();
    f2.clamp(0.0, 1.0).sqrt()
}

/// Reference implementation of the Uhlmann fidelity through PSD square
/// roots. Slower than [`fidelity`]; kept public so tests can pin the two
/// routes against each other on random states.
pub fn fidelity_via_sqrt(rho: &Mat2, sigma: &Mat2) -> Result<f64> {
    let sr = rho.sqrt_psd()?;
    let inner = sr.mul(sigma).mul(&sr).hermitize();
    let m = inner.sqrt_psd()?;
    Ok(m.trace().re.clamp(0.0, 1.0))
}


#[cfg(test)]
mod tests {
    use super::*;

    use super::tests_support::random_state;

    #[test]
    fn eigh_reconstructs_hermitian_matrix() {
        for seed in 0..40u64 {
            let m = random_state(seed)
                .scale(Complex64::new(3.0, 0.0))
                .add(&Mat2::sigma_x().scale(Complex64::new(0.3, 0.0)));
            let h = m.hermitize();
            let (vals, vecs) = h.eigh();
            let mut rec = Mat2::zero();
            for (val, v) in vals.iter().zip(vecs.iter()) {
                let w = Complex64::new(*val, 0.0);
                rec.0[0] += w * v[0] * v[0].conj();
                rec.0[1] += w * v[0] * v[1].conj();
                rec.0[2] += w * v[1] * v[0].conj();
                rec.0[3] += w * v[1] * v[1].conj();
            }
            assert!(rec.sub(&h).norm() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn sqrt_psd_squares_back() {
        for seed in 0..40u64 {
            let rho = random_state(seed);
            let s = rho.sqrt_psd().unwrap();
            assert!(s.mul(&s).sub(&rho).norm() < 1e-12);
        }
    }

    #[test]
    fn fidelity_routes_agree() {
        for seed in 0..60u64 {
            let a = random_state(seed);
            let b = random_state(seed.wrapping_add(1000));
            let fast = fidelity(&a, &b);
            let slow = fidelity_via_sqrt(&a, &b).unwrap();
            assert!(
                (fast - slow).abs() < 1e-12,
                "seed {seed}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn fidelity_is_one_on_identical_states_and_symmetric() {
        for seed in 0..20u64 {
            let a = random_state(seed);
            let b = random_state(seed + 777);
            assert!((fidelity(&a, &a) - 1.0).abs() < 1e-12);
            assert!((fidelity(&a, &b) - fidelity(&b, &a)).abs() < 1e-13);
        }
    }

    #[test]
    fn superops_reproduce_matrix_products() {
        for seed in 0..20u64 {
            let a = random_state(seed).add(&Mat2::sigma_y().scale(Complex64::new(0.2, 0.1)));
            let rho = random_state(seed + 99);
            let v = rho.to_vec4();

            let lv = apply_super4(&left_mul_superop(&a), &v);
            assert!(Mat2::from_vec4(lv).sub(&a.mul(&rho)).norm() < 1e-14);

            let rv = apply_super4(&right_mul_superop(&a), &v);
            assert!(Mat2::from_vec4(rv).sub(&rho.mul(&a)).norm() < 1e-14);

            let cv = apply_super4(&commutator_superop(&a), &v);
            assert!(Mat2::from_vec4(cv).sub(&a.commutator(&rho)).norm() < 1e-14);

            let av = apply_super4(&anticommutator_superop(&a), &v);
            assert!(Mat2::from_vec4(av).sub(&a.anticommutator(&rho)).norm() < 1e-14);
        }
    }

    #[test]
    fn pure_state_fidelity_matches_overlap() {
        // |0><0| vs cos/sin superposition: F = |<0|psi>|.
        let theta: f64 = 0.7;
        let (c, s) = (theta.cos(), theta.sin());
        let psi = Mat2([
            Complex64::new(c * c, 0.0),
            Complex64::new(c * s, 0.0),
            Complex64::new(c * s, 0.0),
            Complex64::new(s * s, 0.0),
        ]);
        let zero = Mat2::diag(1.0, 0.0);
        assert!((fidelity(&zero, &psi) - c.abs()).abs() < 1e-12);
    }
}
