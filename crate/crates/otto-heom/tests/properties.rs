//! Property tests for the pure layers: stroke energetics, ADO bookkeeping,
//! trace conservation of the hierarchy generator, fidelity axioms, and the
//! exponential expansion against quadrature over a random parameter box.

use num_complex::Complex64;
use otto_heom::cycle::{compression_work, expansion_work, isochore_heat};
use otto_heom::hierarchy::{build_generator, enumerate_ados, Truncation};
use otto_heom::mat2::{fidelity, Mat2};
use otto_heom::{BathSpec, SystemSpec};
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut out = 1usize;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// Density matrix from a Bloch vector of length <= 1.
fn bloch_state(x: f64, y: f64, z: f64) -> Mat2 {
    let half = Complex64::new(0.5, 0.0);
    Mat2::identity()
        .add(&Mat2::sigma_x().scale(Complex64::new(x, 0.0)))
        .add(&Mat2::sigma_y().scale(Complex64::new(y, 0.0)))
        .add(&Mat2::sigma_z().scale(Complex64::new(z, 0.0)))
        .scale(half)
}

proptest! {
    #[test]
    fn stroke_energetics_close_the_first_law(
        p_cold in 0.0f64..=1.0,
        p_hot in 0.0f64..=1.0,
        omega_c in 0.05f64..1.0,
        gap in 0.01f64..2.0,
        e_int_h in -0.5f64..=0.0,
        e_int_c in -0.5f64..=0.0,
    ) {
        let omega_h = omega_c + gap;
        // Compression injects work, expansion extracts it, for any
        // populations.
        prop_assert!(compression_work(p_cold, omega_c, omega_h) >= 0.0);
        prop_assert!(expansion_work(p_hot, omega_c, omega_h) <= 0.0);

        // Heat bookkeeping: isochore heat is the system energy change minus
        // the decoupling work, and the cycle's first law closes to rounding.
        let w1 = compression_work(p_cold, omega_c, omega_h);
        let w3 = expansion_work(p_hot, omega_c, omega_h);
        let (w_off_h, w_off_c) = (-e_int_h, -e_int_c);
        let q_h = isochore_heat(p_hot - p_cold, omega_h, w_off_h);
        let q_c = isochore_heat(p_cold - p_hot, omega_c, w_off_c);
        let w_ext = -w1 - w3 - w_off_h - w_off_c;
        prop_assert!((w_ext - q_h - q_c).abs() < 1e-14);
    }

    #[test]
    fn thermal_population_is_bounded_and_monotone(
        omega in 0.05f64..3.0,
        beta in 0.05f64..6.0,
        d_beta in 0.01f64..2.0,
    ) {
        let p = SystemSpec::thermal_population(omega, beta);
        prop_assert!(p > 0.0 && p < 0.5);
        // Colder bath, smaller excited weight.
        let p_colder = SystemSpec::thermal_population(omega, beta + d_beta);
        prop_assert!(p_colder < p);
    }

    #[test]
    fn ado_enumeration_is_complete_ordered_and_duplicate_free(
        n_exp in 1usize..=6,
        m in 0usize..=5,
    ) {
        let ados = enumerate_ados(n_exp, Truncation::TierSum(m));
        prop_assert_eq!(ados.len(), binomial(n_exp + m, m));

        // Zero index first, then the unit vectors in term order: the
        // interaction-energy readout indexes tier 1 by position.
        prop_assert!(ados[0].iter().all(|&n| n == 0));
        if m > 0 {
            for k in 0..n_exp {
                let unit = &ados[1 + k];
                prop_assert_eq!(unit.iter().map(|&n| n as usize).sum::<usize>(), 1);
                prop_assert_eq!(unit[k], 1);
            }
        }

        // Tiers ascend, and no index repeats.
        let tier = |idx: &Vec<u8>| idx.iter().map(|&n| n as usize).sum::<usize>();
        prop_assert!(ados.windows(2).all(|w| tier(&w[0]) <= tier(&w[1])));
        let mut sorted = ados.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), ados.len());
    }

    #[test]
    fn generator_conserves_the_reduced_trace(
        alpha in 1e-4f64..0.1,
        omega0 in 0.4f64..1.6,
        gamma in 0.02f64..0.12,
        beta in 0.3f64..3.0,
        k in 0usize..=2,
        m in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let sys = SystemSpec::default_engine();
        let bath = BathSpec::new(alpha, omega0, gamma, beta).unwrap();
        let gen = build_generator(
            &sys,
            1.0,
            &bath.expand_correlation(k),
            Truncation::TierSum(m),
            4096,
        )
        .unwrap();

        // Any hierarchy vector, physical or not: the derivative of the
        // tier-0 trace vanishes identically because commutators are
        // traceless and raising terms only feed higher tiers.
        let mut state = seed;
        let mut next = || {
            // xorshift64*, range [-1, 1]
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let u = (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64
                / (1u64 << 53) as f64;
            2.0 * u - 1.0
        };
        let y: Vec<Complex64> = (0..gen.dim())
            .map(|_| Complex64::new(next(), next()))
            .collect();
        let mut dy = vec![Complex64::default(); gen.dim()];
        gen.apply(&y, &mut dy);
        let trace_rate = (dy[0] + dy[3]).norm();
        let scale = y.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(
            trace_rate < 1e-12 * scale * gen.dim() as f64,
            "d tr/dt = {trace_rate:.3e}"
        );
    }

    #[test]
    fn fidelity_satisfies_the_axioms(
        x1 in -1.0f64..=1.0, y1 in -1.0f64..=1.0, z1 in -1.0f64..=1.0,
        x2 in -1.0f64..=1.0, y2 in -1.0f64..=1.0, z2 in -1.0f64..=1.0,
    ) {
        // Scale into the Bloch ball (slightly inside, to stay PSD under
        // rounding).
        let n1 = (x1 * x1 + y1 * y1 + z1 * z1).sqrt().max(1.0) * 1.0001;
        let n2 = (x2 * x2 + y2 * y2 + z2 * z2).sqrt().max(1.0) * 1.0001;
        let rho = bloch_state(x1 / n1, y1 / n1, z1 / n1);
        let sig = bloch_state(x2 / n2, y2 / n2, z2 / n2);

        let f_self = fidelity(&rho, &rho);
        prop_assert!((f_self - 1.0).abs() < 1e-12);

        let f_ab = fidelity(&rho, &sig);
        let f_ba = fidelity(&sig, &rho);
        prop_assert!((f_ab - f_ba).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f_ab));
    }
}

proptest! {
    // Each case runs six adaptive quadratures; keep the count modest.
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn expansion_matches_quadrature_across_the_parameter_box(
        alpha in 1e-4f64..0.1,
        omega0 in 0.4f64..1.6,
        gamma in 0.02f64..0.12,
        beta in 0.3f64..3.0,
    ) {
        let bath = BathSpec::new(alpha, omega0, gamma, beta).unwrap();
        let expansion = bath.expand_correlation(10);
        let scale = bath.correlation_quadrature(0.0, 1e-13).norm();
        for t in [0.3, 2.0, 8.0] {
            let c_exp = expansion.correlation(t);
            let c_quad = bath.correlation_quadrature(t, 1e-12 * scale);
            let err = (c_exp - c_quad).norm();
            prop_assert!(
                err < 1e-5 * scale,
                "expansion error {err:.3e} vs scale {scale:.3e} at t={t} \
                 (alpha={alpha:.3e}, omega0={omega0:.3}, gamma={gamma:.3}, beta={beta:.3})"
            );
        }
    }
}
