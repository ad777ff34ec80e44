//! Thin safe wrappers over the LAPACK routines the hierarchy solvers use:
//! dense nonsymmetric eigendecomposition (zgeev) and LU factor/solve
//! (zgetrf/zgetrs). All matrices are column-major, as LAPACK expects.
//!
//! lapack-sys only declares the symbols; build.rs links the system OpenBLAS.

use crate::{Error, Result};
use num_complex::Complex64;

/// Eigenvalues and right eigenvectors of a general complex matrix.
///
/// `a` is the n x n matrix in column-major order and is destroyed. Returns
/// `(w, vr)` where `w[j]` pairs with the eigenvector stored in column `j` of
/// `vr` (also column-major).
pub fn eig_general(a: &mut [Complex64], n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    assert_eq!(a.len(), n * n);
    let ni = n as i32;
    let mut w = vec![Complex64::default(); n];
    let mut vr = vec![Complex64::default(); n * n];
    let mut rwork = vec![0.0f64; 2 * n];
    let mut info = 0i32;

    // Workspace query, then the real call.
    let mut query = [Complex64::default(); 1];
    let lwork_query = -1i32;
    unsafe {
        lapack_sys::zgeev_(
            b"N".as_ptr() as *const _,
            b"V".as_ptr() as *const _,
            &ni,
            a.as_mut_ptr() as *mut _,
            &ni,
            w.as_mut_ptr() as *mut _,
            std::ptr::null_mut(),
            &ni,
            vr.as_mut_ptr() as *mut _,
            &ni,
            query.as_mut_ptr() as *mut _,
            &lwork_query,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgeev (workspace query)",
            info,
        });
    }
    let lwork = (query[0].re as i32).max(2 * ni);
    let mut work = vec![Complex64::default(); lwork as usize];
    unsafe {
        lapack_sys::zgeev_(
            b"N".as_ptr() as *const _,
            b"V".as_ptr() as *const _,
            &ni,
            a.as_mut_ptr() as *mut _,
            &ni,
            w.as_mut_ptr() as *mut _,
            std::ptr::null_mut(),
            &ni,
            vr.as_mut_ptr() as *mut _,
            &ni,
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgeev",
            info,
        });
    }
    Ok((w, vr))
}

/// LU factorization of a square matrix, reusable for repeated solves.
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    ipiv: Vec<i32>,
}

impl LuFactors {
    /// Factor the n x n column-major matrix `a` (consumed).
    ///
    /// `info > 0` means an exactly singular U; surfaced as
    /// [`Error::DegenerateSteadyState`] because the only singular systems the
    /// engine ever factors are trace-pinned generators whose null space has
    /// collapsed into degeneracy.
    pub fn factor(mut a: Vec<Complex64>, n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let ni = n as i32;
        let mut ipiv = vec![0i32; n];
        let mut info = 0i32;
        unsafe {
            lapack_sys::zgetrf_(
                &ni,
                &ni,
                a.as_mut_ptr() as *mut _,
                &ni,
                ipiv.as_mut_ptr(),
                &mut info,
            );
        }
        if info > 0 {
            return Err(Error::DegenerateSteadyState);
        }
        if info < 0 {
            return Err(Error::Lapack {
                routine: "zgetrf",
                info,
            });
        }
        Ok(LuFactors { n, lu: a, ipiv })
    }

    /// Solve `A x = b` in place for one or more right-hand sides stored
    /// column-major in `b`.
    pub fn solve(&self, b: &mut [Complex64]) -> Result<()> {
        assert_eq!(b.len() % self.n, 0);
        let nrhs = (b.len() / self.n) as i32;
        let ni = self.n as i32;
        let mut info = 0i32;
        unsafe {
            lapack_sys::zgetrs_(
                b"N".as_ptr() as *const _,
                &ni,
                &nrhs,
                self.lu.as_ptr() as *const _,
                &ni,
                self.ipiv.as_ptr(),
                b.as_mut_ptr() as *mut _,
                &ni,
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Lapack {
                routine: "zgetrs",
                info,
            });
        }
        Ok(())
    }

    /// Smallest and largest magnitude on the U diagonal. A collapsed ratio
    /// means the matrix was numerically rank-deficient even though
    /// factorization nominally succeeded.
    pub fn pivot_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..self.n {
            let m = self.lu[i * self.n + i].norm();
            lo = lo.min(m);
            hi = hi.max(m);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_recovers_known_spectrum() {
        // Column-major [[0, 1], [-2, -3]]: eigenvalues -1 and -2.
        let mut a = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-3.0, 0.0),
        ];
        let (w, vr) = eig_general(&mut a, 2).unwrap();
        let mut re: Vec<f64> = w.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
        // Each eigenvector satisfies A v = w v.
        let a0 = [
            Complex64::new(0.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-3.0, 0.0),
        ];
        for j in 0..2 {
            let v = [vr[j * 2], vr[j * 2 + 1]];
            let av = [a0[0] * v[0] + a0[2] * v[1], a0[1] * v[0] + a0[3] * v[1]];
            for i in 0..2 {
                assert!((av[i] - w[j] * v[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_solves_and_rejects_singular() {
        let a = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(3.0, 0.0),
        ];
        let lu = LuFactors::factor(a.clone(), 2).unwrap();
        let x_true = [Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)];
        let mut b = [
            a[0] * x_true[0] + a[2] * x_true[1],
            a[1] * x_true[0] + a[3] * x_true[1],
        ];
        lu.solve(&mut b).unwrap();
        assert!((b[0] - x_true[0]).norm() < 1e-13);
        assert!((b[1] - x_true[1]).norm() < 1e-13);

        let singular = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ];
        assert!(matches!(
            LuFactors::factor(singular, 2),
            Err(Error::DegenerateSteadyState)
        ));
    }
}
