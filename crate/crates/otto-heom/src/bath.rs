//! Underdamped Brownian-oscillator baths and the exponential expansion of
//! their correlation functions.
//!
//! The spectral density is
//!
//! ```text
//! J(w) = alpha Gamma w0^2 w / ((w^2 - w0^2)^2 + Gamma^2 w^2)
//! ```
//!
//! with coupling strength `alpha`, resonance `w0` and width `Gamma`. For an
//! underdamped mode (`w0 > Gamma/2`) the finite-temperature correlation
//! function `C(t) = C_plus(t) + i C_minus(t)` (symmetric and antisymmetric
//! parts) is a finite sum of decaying exponentials: the symmetric part has a
//! resonant conjugate pair at rates `gamma -+/+ i Omega` plus one real term
//! per Matsubara frequency `nu_k = 2 pi k / beta`, and the antisymmetric part
//! is purely resonant. Here `gamma = Gamma/2` and `Omega = sqrt(w0^2 -
//! gamma^2)`.
//!
//! The Matsubara series truncated at `K` terms leaves a residual that the
//! hierarchy absorbs as a dephasing-like terminator; its full sum
//! `sum_k c_k / nu_k` has a closed form in `beta`, `gamma`, `Omega`, so the
//! residual costs nothing to evaluate.

use crate::quad;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which part of the correlation function an expansion term belongs to.
/// The hierarchy couples downward through the commutator for symmetric terms
/// and through the anticommutator for antisymmetric ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Symmetric part `C_plus` (resonant pair + Matsubara tail).
    Plus,
    /// Antisymmetric part `C_minus` (resonant pair only).
    Minus,
}

/// One exponential, `amp * exp(-rate * t)` with `Re rate >= 0`, inside the
/// family's correlation piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub family: Family,
    pub amp: Complex64,
    pub rate: Complex64,
}

impl ExpTerm {
    /// Prefactor of the downward (lower-tier) coupling this exponent carries,
    /// before the occupation factor `n_k`: `-i c_k` for symmetric terms
    /// (commutator channel), `c_k` for antisymmetric ones (anticommutator
    /// channel).
    pub fn down_factor(&self) -> Complex64 {
        match self.family {
            Family::Plus => -Complex64::i() * self.amp,
            Family::Minus => self.amp,
        }
    }
}

/// Physical parameters of one bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub alpha: f64,
    pub omega0: f64,
    pub gamma_width: f64,
    pub beta: f64,
}

impl BathSpec {
    pub fn new(alpha: f64, omega0: f64, gamma_width: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "alpha",
                why: format!("coupling must be non-negative, got {alpha}"),
            });
        }
        if !(omega0 > 0.0) {
            return Err(Error::InvalidParameter {
                what: "omega0",
                why: format!("resonance frequency must be positive, got {omega0}"),
            });
        }
        if !(gamma_width > 0.0) {
            return Err(Error::InvalidParameter {
                what: "Gamma",
                why: format!("bath width must be positive, got {gamma_width}"),
            });
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter {
                what: "beta",
                why: format!("inverse temperature must be positive, got {beta}"),
            });
        }
        if omega0 <= 0.5 * gamma_width {
            return Err(Error::OverdampedBath {
                omega0,
                gamma_width,
            });
        }
        Ok(BathSpec {
            alpha,
            omega0,
            gamma_width,
            beta,
        })
    }

    /// Resonant half-width `gamma = Gamma / 2`.
    pub fn gamma(&self) -> f64 {
        0.5 * self.gamma_width
    }

    /// Damped resonance `Omega = sqrt(w0^2 - gamma^2)`.
    pub fn resonance(&self) -> f64 {
        (self.omega0 * self.omega0 - self.gamma() * self.gamma()).sqrt()
    }

    /// Matsubara frequency `nu_k = 2 pi k / beta`.
    pub fn matsubara_frequency(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.beta
    }

    /// `J(w)`; odd in `w`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let w0sq = self.omega0 * self.omega0;
        let num = self.alpha * self.gamma_width * w0sq * omega;
        let d1 = omega * omega - w0sq;
        num / (d1 * d1 + self.gamma_width * self.gamma_width * omega * omega)
    }

    /// Reorganization energy `(1/pi) int J(w)/w dw = alpha / 2`, exact for
    /// this spectral density.
    pub fn reorganization_energy(&self) -> f64 {
        0.5 * self.alpha
    }

    /// Exponential expansion with `k_matsubara` explicit Matsubara terms.
    ///
    /// Term order is fixed and relied on by the hierarchy indexing:
    /// the two symmetric resonant terms, then the Matsubara terms in
    /// ascending `k`, then the two antisymmetric resonant terms.
    pub fn expand_correlation(&self, k_matsubara: usize) -> BathExpansion {
        let g = self.gamma();
        let om = self.resonance();
        let w0sq = self.omega0 * self.omega0;
        let a = self.alpha * w0sq / (4.0 * om);

        let mut terms = Vec::with_capacity(k_matsubara + 4);

        // Symmetric resonant pair. coth evaluated at the complex pole keeps
        // C_plus(t) real: the two terms are conjugates of each other.
        let coth_arg = 0.5 * self.beta * Complex64::new(om, -g);
        let coth = coth_arg.tanh().finv();
        terms.push(ExpTerm {
            family: Family::Plus,
            amp: a * coth,
            rate: Complex64::new(g, om),
        });
        terms.push(ExpTerm {
            family: Family::Plus,
            amp: a * coth.conj(),
            rate: Complex64::new(g, -om),
        });

        // Matsubara terms, real amplitudes at real rates.
        for k in 1..=k_matsubara {
            let nu = self.matsubara_frequency(k);
            let d1 = w0sq + nu * nu;
            let den = d1 * d1 - self.gamma_width * self.gamma_width * nu * nu;
            let c = -(4.0 * self.alpha * g * w0sq / self.beta) * nu / den;
            terms.push(ExpTerm {
                family: Family::Plus,
                amp: Complex64::new(c, 0.0),
                rate: Complex64::new(nu, 0.0),
            });
        }

        // Antisymmetric resonant pair:
        // C_minus(t) = -(alpha w0^2 / 2 Omega) sin(Omega t) e^{-gamma t}.
        terms.push(ExpTerm {
            family: Family::Minus,
            amp: Complex64::i() * a,
            rate: Complex64::new(g, -om),
        });
        terms.push(ExpTerm {
            family: Family::Minus,
            amp: -Complex64::i() * a,
            rate: Complex64::new(g, om),
        });

        let truncated: f64 = (1..=k_matsubara)
            .map(|k| {
                let nu = self.matsubara_frequency(k);
                let d1 = w0sq + nu * nu;
                let den = d1 * d1 - self.gamma_width * self.gamma_width * nu * nu;
                -(4.0 * self.alpha * g * w0sq / self.beta) / den
            })
            .sum();

        BathExpansion {
            spec: *self,
            k_matsubara,
            terms,
            terminator: self.matsubara_quotient_sum() - truncated,
        }
    }

    /// Closed form of the full Matsubara quotient series
    /// `sum_{k>=1} c_k / nu_k`.
    pub fn matsubara_quotient_sum(&self) -> f64 {
        let g = self.gamma();
        let om = self.resonance();
        let w0sq = om * om + g * g;
        let b = self.beta;
        let bracket = (b * g * (b * om).sinh() + b * om * (b * g).sin())
            / (4.0 * om * g * w0sq * ((b * om).cosh() - (b * g).cos()))
            - 1.0 / (w0sq * w0sq);
        -(2.0 * self.alpha * g * self.omega0 * self.omega0 / b) * bracket
    }

    /// Direct quadrature of `C(t)`, the validation oracle for the expansion:
    /// `(1/pi) int_0^inf J(w) [coth(beta w / 2) cos(wt) - i sin(wt)] dw`.
    pub fn correlation_quadrature(&self, t: f64, abs_tol: f64) -> Complex64 {
        let f = |w: f64| {
            if w < 1e-12 {
                // J(w) coth(beta w/2) -> 2 alpha Gamma / (beta w0^2) as w -> 0.
                let lim = 2.0 * self.alpha * self.gamma_width / (self.beta * self.omega0 * self.omega0);
                return Complex64::new(lim / PI, 0.0);
            }
            let j = self.spectral_density(w);
            let coth = 1.0 / (0.5 * self.beta * w).tanh();
            Complex64::new(
                j * coth * (w * t).cos() / PI,
                -j * (w * t).sin() / PI,
            )
        };
        let cut = 50.0 * self.omega0;
        let body = quad::integrate_with_breakpoints(
            f,
            0.0,
            cut,
            &[self.resonance(), self.omega0],
            0.5 * abs_tol,
        );
        let tail = quad::integrate_to_infinity(f, cut, 0.5 * abs_tol);
        body + tail
    }
}

/// Exponential expansion of one bath's correlation function, plus the
/// truncation residual the hierarchy terminator absorbs.
#[derive(Debug, Clone, PartialEq)]
pub struct BathExpansion {
    pub spec: BathSpec,
    pub k_matsubara: usize,
    pub terms: Vec<ExpTerm>,
    /// `sum_{k > K} c_k / nu_k`: the part of the Matsubara series not carried
    /// by explicit exponents. Real and negative.
    pub terminator: f64,
}

impl BathExpansion {
    /// Expansion with no exponents at all: the zero-coupling limit, under
    /// which the hierarchy degenerates to the bare system Liouvillian on a
    /// single ADO.
    pub fn empty() -> Self {
        BathExpansion {
            spec: BathSpec {
                alpha: 0.0,
                omega0: 1.0,
                gamma_width: 0.05,
                beta: 1.0,
            },
            k_matsubara: 0,
            terms: Vec::new(),
            terminator: 0.0,
        }
    }

    /// Number of hierarchy directions this bath contributes (`K + 4`).
    pub fn n_exp(&self) -> usize {
        self.terms.len()
    }

    /// Reconstruct `C(t) = C_plus(t) + i C_minus(t)` for `t >= 0` from the
    /// expansion (without the truncated Matsubara residual).
    pub fn correlation(&self, t: f64) -> Complex64 {
        let mut c_plus = Complex64::default();
        let mut c_minus = Complex64::default();
        for term in &self.terms {
            let e = term.amp * (-term.rate * t).exp();
            match term.family {
                Family::Plus => c_plus += e,
                Family::Minus => c_minus += e,
            }
        }
        c_plus + Complex64::i() * c_minus
    }

    /// Half-Fourier transform `int_0^inf C(t) e^{i w t} dt`, summed over the
    /// explicit exponents. Real part is half the golden-rule rate at `w`,
    /// imaginary part feeds the Lamb shift.
    pub fn half_fourier(&self, omega: f64) -> Complex64 {
        let iw = Complex64::new(0.0, omega);
        self.terms
            .iter()
            .map(|term| {
                let base = term.amp / (term.rate - iw);
                match term.family {
                    Family::Plus => base,
                    Family::Minus => Complex64::i() * base,
                }
            })
            .sum()
    }

    /// Smallest time at which the truncated expansion is trustworthy
    /// pointwise: the dropped Matsubara exponents decay at `nu_{K+1}` and
    /// faster, so their imprint is gone a few lifetimes in.
    pub fn pointwise_window(&self) -> f64 {
        5.0 / self.spec.matsubara_frequency(self.k_matsubara + 1)
    }
}
