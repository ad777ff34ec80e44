//! Hierarchical equations of motion: auxiliary density operator (ADO)
//! bookkeeping, the sparse hierarchy generator, and steady-state solvers.
//!
//! One hierarchy covers one isochore: a fixed system Hamiltonian `H(omega)`
//! in contact with one bath whose correlation function has been expanded in
//! `n_exp` decaying exponentials. Each ADO is a 2x2 operator labelled by a
//! multi-index counting excitations of every exponent; the zero-index ADO is
//! the physical reduced density matrix, and the tier-1 ADOs carry the
//! system-bath interaction energy.

mod generator;
mod steady;

pub use generator::{build_generator, HierarchyGenerator};
pub use steady::steady_state;

use crate::mat2::Mat2;
use num_complex::Complex64;

/// Multi-index of one ADO: occupation of each bath exponent, in the
/// expansion's term order.
pub type AdoIndex = Vec<u8>;

/// Hierarchy truncation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Keep ADOs with `sum_k n_k <= M`. The default: memory-predictable and
    /// standard practice.
    TierSum(usize),
    /// Keep ADOs with `n_k <= M` for every k. Exists for cross-checking the
    /// tier-sum results; the count grows as `(M+1)^n_exp`, so use shallow.
    PerIndex(usize),
}

impl Truncation {
    pub fn depth(&self) -> usize {
        match *self {
            Truncation::TierSum(m) | Truncation::PerIndex(m) => m,
        }
    }

    /// Same scheme, one level deeper (for convergence drift checks).
    pub fn deepen(&self) -> Truncation {
        match *self {
            Truncation::TierSum(m) => Truncation::TierSum(m + 1),
            Truncation::PerIndex(m) => Truncation::PerIndex(m + 1),
        }
    }

    fn admits_raise(&self, index: &[u8], k: usize) -> bool {
        match *self {
            Truncation::TierSum(m) => {
                index.iter().map(|&n| n as usize).sum::<usize>() < m
            }
            Truncation::PerIndex(m) => (index[k] as usize) < m,
        }
    }
}

/// Enumerate all ADO multi-indices admitted by the truncation, tier by tier
/// (total occupation ascending), and within a tier in descending
/// lexicographic order. The zero index always comes first, followed by the
/// `n_exp` unit vectors in term order, which is what the interaction-energy
/// readout relies on.
///
/// For two exponents at tier-sum depth 1 the order is
/// `(0,0), (1,0), (0,1)`.
pub fn enumerate_ados(n_exp: usize, trunc: Truncation) -> Vec<AdoIndex> {
    let mut out = Vec::new();
    let cap = match trunc {
        Truncation::TierSum(m) => m,
        Truncation::PerIndex(m) => m * n_exp,
    };
    let mut scratch = vec![0u8; n_exp];
    for tier in 0..=cap {
        if n_exp == 0 {
            if tier == 0 {
                out.push(Vec::new());
            }
            continue;
        }
        fill_tier(tier, 0, &mut scratch, &trunc, &mut out);
    }
    out
}

/// Recursive composition generator: distribute `remaining` among slots
/// `slot..`, largest first, respecting a per-index cap when present.
fn fill_tier(
    remaining: usize,
    slot: usize,
    scratch: &mut [u8],
    trunc: &Truncation,
    out: &mut Vec<AdoIndex>,
) {
    let per_index_cap = match trunc {
        Truncation::TierSum(_) => usize::MAX,
        Truncation::PerIndex(m) => *m,
    };
    if slot == scratch.len() - 1 {
        if remaining <= per_index_cap {
            scratch[slot] = remaining as u8;
            out.push(scratch.to_vec());
        }
        return;
    }
    let hi = remaining.min(per_index_cap);
    for n in (0..=hi).rev() {
        scratch[slot] = n as u8;
        fill_tier(remaining - n, slot + 1, scratch, trunc, out);
    }
}

/// Flat hierarchy state: `n_ado` stacked 2x2 operators in the Liouville
/// vector order `(rho00, rho01, rho10, rho11)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    data: Vec<Complex64>,
    n_ado: usize,
}

impl HierarchyState {
    /// Factorized initial condition: the system state in the zero-index ADO,
    /// everything above it zero. This encodes switching the bath coupling on
    /// at t = 0 with the bath in its own equilibrium.
    pub fn factorized(rho: &Mat2, n_ado: usize) -> Self {
        assert!(n_ado >= 1);
        let mut data = vec![Complex64::default(); 4 * n_ado];
        data[..4].copy_from_slice(&rho.to_vec4());
        HierarchyState { data, n_ado }
    }

    pub fn from_raw(data: Vec<Complex64>) -> Self {
        assert!(data.len() % 4 == 0 && !data.is_empty());
        let n_ado = data.len() / 4;
        HierarchyState { data, n_ado }
    }

    pub fn n_ado(&self) -> usize {
        self.n_ado
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// The physical reduced density matrix (zero-index ADO).
    pub fn reduced(&self) -> Mat2 {
        Mat2::from_vec4([self.data[0], self.data[1], self.data[2], self.data[3]])
    }

    /// ADO at position `p`.
    pub fn ado(&self, p: usize) -> Mat2 {
        let b = 4 * p;
        Mat2::from_vec4([
            self.data[b],
            self.data[b + 1],
            self.data[b + 2],
            self.data[b + 3],
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn enumeration_order_small() {
        let got = enumerate_ados(2, Truncation::TierSum(1));
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);

        let got = enumerate_ados(2, Truncation::TierSum(2));
        assert_eq!(
            got,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2],
            ]
        );
    }

    #[test]
    fn enumeration_counts_match_binomial() {
        // Tier-sum truncation keeps C(n_exp + M, M) indices.
        let choose = |n: usize, k: usize| -> usize {
            let mut acc = 1usize;
            for i in 0..k {
                acc = acc * (n - i) / (i + 1);
            }
            acc
        };
        for (n_exp, m) in [(7usize, 2usize), (7, 4), (9, 3), (9, 5), (3, 6)] {
            let got = enumerate_ados(n_exp, Truncation::TierSum(m)).len();
            assert_eq!(got, choose(n_exp + m, m), "n_exp={n_exp} m={m}");
        }
    }

    #[test]
    fn per_index_cap_counts_and_bounds() {
        let all = enumerate_ados(3, Truncation::PerIndex(2));
        assert_eq!(all.len(), 27);
        assert!(all.iter().all(|idx| idx.iter().all(|&n| n <= 2)));
        // Still tier-ascending with the zero index first.
        assert_eq!(all[0], vec![0, 0, 0]);
        let tiers: Vec<usize> = all
            .iter()
            .map(|idx| idx.iter().map(|&n| n as usize).sum())
            .collect();
        assert!(tiers.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn unit_vectors_sit_right_after_zero() {
        let all = enumerate_ados(5, Truncation::TierSum(3));
        for k in 0..5 {
            let mut e = vec![0u8; 5];
            e[k] = 1;
            assert_eq!(all[1 + k], e);
        }
    }

    #[test]
    fn empty_expansion_has_single_ado() {
        assert_eq!(enumerate_ados(0, Truncation::TierSum(4)), vec![Vec::new()]);
    }

    #[test]
    fn factorized_state_roundtrip() {
        let rho = Mat2([
            Complex64::new(0.7, 0.0),
            Complex64::new(0.1, 0.05),
            Complex64::new(0.1, -0.05),
            Complex64::new(0.3, 0.0),
        ]);
        let st = HierarchyState::factorized(&rho, 10);
        assert_eq!(st.n_ado(), 10);
        assert!(st.reduced().sub(&rho).norm() < 1e-16);
        for p in 1..10 {
            assert!(st.ado(p).norm() == 0.0);
        }
    }
}
