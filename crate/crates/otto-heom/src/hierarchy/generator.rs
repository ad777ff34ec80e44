//! The hierarchy generator: block-diagonal system Liouvillian plus
//! tier-coupling terms, stored as flat coupling tables and applied
//! matrix-free.
//!
//! Per ADO `n` the equation of motion is
//!
//! ```text
//! d rho_n / dt = (L_S - sum_k n_k s_k) rho_n
//!     - i sum_{k in sym}  c_k n_k [V, rho_{n - e_k}]
//!     +   sum_{k in asym} c_k n_k {V, rho_{n - e_k}}
//!     - i sum_k [V, rho_{n + e_k}]
//! ```
//!
//! with `L_S = -i[H, .]` corrected by the terminator `-Delta [V, [V, .]]`
//! (`Delta` the truncated Matsubara quotient sum), applied at every tier.
//! With `V = sigma_z` both `[V, .]` and `{V, .}` are diagonal masks in the
//! Liouville basis, so every tier coupling touches exactly two of the four
//! components and the whole right-hand side runs in a few multiplies per
//! coupling entry.

use super::{enumerate_ados, AdoIndex, HierarchyState, Truncation};
use crate::bath::{BathExpansion, Family};
use crate::mat2::{commutator_superop, Mat2, Super4};
use crate::system::SystemSpec;
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;

/// Which two-component mask a coupling applies.
const KIND_COMMUTATOR: u8 = 0; // [sigma_z, .]: components 1, 2 with +/-
const KIND_ANTICOMMUTATOR: u8 = 1; // {sigma_z, .}: components 0, 3 with +/-

#[derive(Debug, Clone, Copy)]
struct Coupling {
    nb: u32,
    kind: u8,
    /// Mask amplitude with the factor 2 from sigma_z folded in.
    amp: Complex64,
}

#[derive(Debug, Clone)]
pub struct HierarchyGenerator {
    system: SystemSpec,
    omega: f64,
    n_exp: usize,
    truncation: Truncation,
    indices: Vec<AdoIndex>,
    /// Shared 4x4 block: system Liouvillian plus terminator.
    l_eff: Super4,
    /// Per-ADO damping `-sum_k n_k s_k`, added to the block diagonal.
    damp: Vec<Complex64>,
    row_ptr: Vec<u32>,
    couplings: Vec<Coupling>,
    norm_inf: f64,
}

/// Build the generator for one isochore: system at splitting `omega`,
/// in contact with the bath described by `expansion`, truncated per `trunc`.
///
/// `max_memory_mb` bounds the estimated working set (state, tables, and the
/// integrator's stage vectors); exceeding it fails fast instead of
/// swapping.
pub fn build_generator(
    system: &SystemSpec,
    omega: f64,
    expansion: &BathExpansion,
    trunc: Truncation,
    max_memory_mb: usize,
) -> Result<HierarchyGenerator> {
    let n_exp = expansion.n_exp();
    let indices = enumerate_ados(n_exp, trunc);
    let n_ado = indices.len();

    // Working-set estimate: 11 state-sized vectors (integrator stages plus
    // scratch), coupling table, damping, index map.
    let state_bytes = n_ado * 4 * std::mem::size_of::<Complex64>();
    let coupling_bytes = n_ado * 2 * n_exp.max(1) * std::mem::size_of::<Coupling>();
    let need = state_bytes * 11 + coupling_bytes + n_ado * (n_exp + 24);
    let budget = max_memory_mb.saturating_mul(1 << 20);
    if need > budget {
        return Err(Error::AdoBudgetExceeded {
            n_ado,
            need_mb: need >> 20,
            budget_mb: max_memory_mb,
        });
    }

    let mut pos: HashMap<u128, u32> = HashMap::with_capacity(n_ado * 2);
    for (p, idx) in indices.iter().enumerate() {
        pos.insert(key_of(idx), p as u32);
    }

    let h = system.hamiltonian(omega);
    let mut l_eff = commutator_superop(&h).map(|z| -Complex64::i() * z);
    // Terminator: -Delta [V,[V,.]] with [V,[V,.]] = diag(0, 4, 4, 0).
    let delta = expansion.terminator;
    l_eff[1 * 4 + 1] -= Complex64::new(4.0 * delta, 0.0);
    l_eff[2 * 4 + 2] -= Complex64::new(4.0 * delta, 0.0);

    let mut damp = Vec::with_capacity(n_ado);
    let mut row_ptr = Vec::with_capacity(n_ado + 1);
    let mut couplings = Vec::new();
    row_ptr.push(0u32);

    let mut scratch: AdoIndex = vec![0; n_exp];
    for idx in &indices {
        let mut d = Complex64::default();
        for (k, term) in expansion.terms.iter().enumerate() {
            let n_k = idx[k] as f64;
            if n_k > 0.0 {
                d -= n_k * term.rate;
                // Downward coupling to n - e_k.
                scratch.copy_from_slice(idx);
                scratch[k] -= 1;
                let nb = pos[&key_of(&scratch)];
                let kind = match term.family {
                    Family::Plus => KIND_COMMUTATOR,
                    Family::Minus => KIND_ANTICOMMUTATOR,
                };
                couplings.push(Coupling {
                    nb,
                    kind,
                    amp: 2.0 * n_k * term.down_factor(),
                });
            }
            if trunc.admits_raise(idx, k) {
                // Upward coupling to n + e_k: always -i [V, .].
                scratch.copy_from_slice(idx);
                scratch[k] += 1;
                if let Some(&nb) = pos.get(&key_of(&scratch)) {
                    couplings.push(Coupling {
                        nb,
                        kind: KIND_COMMUTATOR,
                        amp: Complex64::new(0.0, -2.0),
                    });
                }
            }
        }
        damp.push(d);
        row_ptr.push(couplings.len() as u32);
    }

    let mut gen = HierarchyGenerator {
        system: *system,
        omega,
        n_exp,
        truncation: trunc,
        indices,
        l_eff,
        damp,
        row_ptr,
        couplings,
        norm_inf: 0.0,
    };
    gen.norm_inf = gen.compute_norm_inf();
    Ok(gen)
}

fn key_of(idx: &[u8]) -> u128 {
    debug_assert!(idx.len() <= 16);
    let mut key = 0u128;
    for (k, &n) in idx.iter().enumerate() {
        key |= (n as u128) << (8 * k);
    }
    key
}

impl HierarchyGenerator {
    pub fn n_ado(&self) -> usize {
        self.indices.len()
    }

    /// Liouville-space dimension, `4 * n_ado`.
    pub fn dim(&self) -> usize {
        4 * self.indices.len()
    }

    pub fn indices(&self) -> &[AdoIndex] {
        &self.indices
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn n_exp(&self) -> usize {
        self.n_exp
    }

    /// Row-sum norm of the assembled operator; the steady-state residual
    /// bound is relative to this.
    pub fn norm_inf(&self) -> f64 {
        self.norm_inf
    }

    /// `out = G y`, matrix-free.
    pub fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        let n_ado = self.indices.len();
        debug_assert_eq!(y.len(), 4 * n_ado);
        debug_assert_eq!(out.len(), 4 * n_ado);
        let l = &self.l_eff;

        // Block-diagonal part: shared 4x4 plus per-ADO damping.
        for (p, (yb, ob)) in y.chunks_exact(4).zip(out.chunks_exact_mut(4)).enumerate() {
            let d = self.damp[p];
            ob[0] = l[0] * yb[0] + l[1] * yb[1] + l[2] * yb[2] + l[3] * yb[3] + d * yb[0];
            ob[1] = l[4] * yb[0] + l[5] * yb[1] + l[6] * yb[2] + l[7] * yb[3] + d * yb[1];
            ob[2] = l[8] * yb[0] + l[9] * yb[1] + l[10] * yb[2] + l[11] * yb[3] + d * yb[2];
            ob[3] = l[12] * yb[0] + l[13] * yb[1] + l[14] * yb[2] + l[15] * yb[3] + d * yb[3];
        }

        // Tier couplings: two components each.
        for p in 0..n_ado {
            let lo = self.row_ptr[p] as usize;
            let hi = self.row_ptr[p + 1] as usize;
            let base = 4 * p;
            for c in &self.couplings[lo..hi] {
                let q = 4 * c.nb as usize;
                if c.kind == KIND_COMMUTATOR {
                    out[base + 1] += c.amp * y[q + 1];
                    out[base + 2] -= c.amp * y[q + 2];
                } else {
                    out[base] += c.amp * y[q];
                    out[base + 3] -= c.amp * y[q + 3];
                }
            }
        }
    }

    /// Interaction energy `sum_{tier-1} tr(V rho_n)`, from the unit-vector
    /// ADOs sitting at positions `1..=n_exp`. The imaginary residue must
    /// vanish; anything above 1e-8 signals a truncation or convention bug.
    pub fn interaction_energy(&self, state: &HierarchyState) -> Result<f64> {
        self.interaction_energy_from_leading(state.data())
    }

    /// Same as [`Self::interaction_energy`] but reading from any buffer that
    /// holds at least the leading `4 (n_exp + 1)` state components (spectral
    /// propagation evaluates only those).
    pub fn interaction_energy_from_leading(&self, data: &[Complex64]) -> Result<f64> {
        let v = self.system.coupling_op();
        let mut acc = Complex64::default();
        for p in 1..=self.n_exp.min(self.indices.len() - 1) {
            let b = 4 * p;
            let rho = Mat2::from_vec4([data[b], data[b + 1], data[b + 2], data[b + 3]]);
            acc += v.mul(&rho).trace();
        }
        if acc.im.abs() > 1e-8 {
            return Err(Error::InteractionEnergyImaginary { imag: acc.im });
        }
        Ok(acc.re)
    }

    /// Dense column-major assembly of the full operator, for LAPACK-based
    /// eigendecomposition and null-space solves.
    pub fn assemble_dense(&self) -> Vec<Complex64> {
        let n_ado = self.indices.len();
        let dim = 4 * n_ado;
        let mut g = vec![Complex64::default(); dim * dim];
        for p in 0..n_ado {
            let d = self.damp[p];
            for r in 0..4 {
                for c in 0..4 {
                    let mut v = self.l_eff[r * 4 + c];
                    if r == c {
                        v += d;
                    }
                    g[(4 * p + c) * dim + (4 * p + r)] = v;
                }
            }
            let lo = self.row_ptr[p] as usize;
            let hi = self.row_ptr[p + 1] as usize;
            for cp in &self.couplings[lo..hi] {
                let q = 4 * cp.nb as usize;
                if cp.kind == KIND_COMMUTATOR {
                    g[(q + 1) * dim + (4 * p + 1)] += cp.amp;
                    g[(q + 2) * dim + (4 * p + 2)] -= cp.amp;
                } else {
                    g[q * dim + (4 * p)] += cp.amp;
                    g[(q + 3) * dim + (4 * p + 3)] -= cp.amp;
                }
            }
        }
        g
    }

    /// Stability-informed step ceiling for explicit integration: the fastest
    /// mode decays at `max_p |Re damp_p|` plus the block's own scale, and
    /// the Dormand-Prince stability interval along the negative real axis is
    /// about 3.3.
    pub fn suggested_h_max(&self) -> f64 {
        let fastest = self
            .damp
            .iter()
            .map(|d| -d.re)
            .fold(0.0f64, f64::max)
            .max(self.omega)
            .max(1.0);
        3.3 / fastest
    }

    fn compute_norm_inf(&self) -> f64 {
        let n_ado = self.indices.len();
        let mut worst = 0.0f64;
        for p in 0..n_ado {
            let d = self.damp[p];
            let mut rows = [0.0f64; 4];
            for r in 0..4 {
                for c in 0..4 {
                    let mut v = self.l_eff[r * 4 + c];
                    if r == c {
                        v += d;
                    }
                    rows[r] += v.norm();
                }
            }
            let lo = self.row_ptr[p] as usize;
            let hi = self.row_ptr[p + 1] as usize;
            for cp in &self.couplings[lo..hi] {
                let a = cp.amp.norm();
                if cp.kind == KIND_COMMUTATOR {
                    rows[1] += a;
                    rows[2] += a;
                } else {
                    rows[0] += a;
                    rows[3] += a;
                }
            }
            worst = rows.iter().fold(worst, |w, &r| w.max(r));
        }
        worst
    }
}
