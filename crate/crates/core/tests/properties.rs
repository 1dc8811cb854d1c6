use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdi_core::correlations::{check_quantum_symmetry, isf};
use tdi_core::model::{build_chain, build_double_well, density_fourier, InitialState, SiteLattice, TargetModel};
use tdi_core::operator::{expm_hermitian, Operator};
use tdi_core::output::fmt_f64;
use tdi_core::sampling::{random_density, random_hermitian};
use tdi_core::tdi::{classical_intensity_pm, detection_probability, harmonic_fit, intensity_pm, TdiConfig};
use tdi_core::Complex;

fn general_model(seed: u64, dim: usize) -> TargetModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = (0..dim).map(|k| [k as f64 * 0.9, (k % 2) as f64 * 0.4, 0.0]).collect();
    let lattice = SiteLattice::single_particle(sites).unwrap();
    TargetModel::new(
        lattice,
        random_hermitian(dim, 1.0, &mut rng),
        InitialState::Density(random_density(dim, &mut rng)),
    )
    .unwrap()
}

fn double_well() -> impl Strategy<Value = (f64, f64, Complex)> {
    (0.1f64..3.0, 0.0f64..=1.0, 0.0f64..1.0, 0.0f64..(2.0 * PI)).prop_map(|(w, p_l, r, th)| {
        let g = Complex::from_polar(r * (p_l * (1.0 - p_l)).sqrt(), th);
        (w, p_l, g)
    })
}

proptest! {
    #[test]
    fn propagator_is_unitary(seed in any::<u64>(), dim in 1usize..8, t in -20.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(dim, 1.5, &mut rng);
        let u = expm_hermitian(&h, t).unwrap();
        prop_assert!(u.unitarity_residual() < 1e-12);
        let back = &u * &expm_hermitian(&h, -t).unwrap();
        prop_assert!(back.max_abs_diff(&Operator::identity(dim)) < 1e-12);
    }

    #[test]
    fn fourier_operator_adjoint_flips_momentum(seed in any::<u64>(), dim in 2usize..7, px in -4.0f64..4.0, t in 0.0f64..10.0) {
        let m = general_model(seed, dim);
        let p = [px, 0.3 * px, 0.0];
        let lhs = density_fourier(&m, &p, t).adjoint();
        let rhs = density_fourier(&m, &[-p[0], -p[1], -p[2]], t);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn number_operator_is_conserved(n in 2usize..9, hop in 0.0f64..2.0, t in 0.0f64..20.0) {
        let m = build_chain(n, hop, 1.0).unwrap();
        prop_assert!(density_fourier(&m, &[0.0; 3], t).max_abs_diff(&Operator::identity(n)) < 1e-12);
    }

    #[test]
    fn quantum_isf_symmetry((w, p_l, g) in double_well(), px in -5.0f64..5.0, t1 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let m = build_double_well(w, [1.0, 0.5, 0.0], p_l, g).unwrap();
        prop_assert!(check_quantum_symmetry(&m, &[px, 0.0, 0.0], t1, t2, 1e-10).holds);
    }

    #[test]
    fn equal_time_isf_is_one(seed in any::<u64>(), dim in 2usize..7, px in -5.0f64..5.0, t in 0.0f64..10.0) {
        let m = general_model(seed, dim);
        let s = isf(&m, &[px, -px, 0.5], t, t).value;
        prop_assert!((s - 1.0).norm() < 1e-12);
    }

    #[test]
    fn detection_probability_nonnegative(seed in any::<u64>(), dim in 2usize..7, px in -5.0f64..5.0, t1 in 0.0f64..5.0, dt in 0.0f64..5.0, phi in 0.0f64..(2.0 * PI)) {
        let m = general_model(seed, dim);
        let pr = detection_probability(&m, &TdiConfig::new([px, 0.0, 0.0], t1, t1 + dt, phi), 0.0).unwrap();
        prop_assert!(pr >= -1e-12);
        prop_assert!(pr <= 4.0 + 1e-10);
    }

    #[test]
    fn imaginary_coherence_matches_classical_forms(w in 0.1f64..3.0, gi in -0.5f64..0.5, px in -4.0f64..4.0, t1 in 0.0f64..5.0, dt in 0.0f64..5.0, phi in 0.0f64..(2.0 * PI)) {
        let m = build_double_well(w, [1.0, 0.0, 0.0], 0.5, Complex::new(0.0, gi)).unwrap();
        let p = [px, 0.0, 0.0];
        let (ip, im) = intensity_pm(&m, &p, t1, t1 + dt, phi);
        let diag = [isf(&m, &p, t1, t1).value, isf(&m, &p, t1 + dt, t1 + dt).value];
        let (cp, cm) = classical_intensity_pm(diag, isf(&m, &p, t1, t1 + dt).value, phi);
        prop_assert!((ip - 2.0 * cp).abs() < 1e-10);
        prop_assert!((im - 2.0 * cm).abs() < 1e-10);
    }

    #[test]
    fn harmonic_fit_recovers_coefficients(a0 in -5.0f64..5.0, ac in -5.0f64..5.0, as_ in -5.0f64..5.0, n in 6usize..24) {
        let phis: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let y: Vec<f64> = phis.iter().map(|p| a0 + ac * p.cos() + as_ * p.sin()).collect();
        let (fit, w) = harmonic_fit(&phis, &y).unwrap();
        prop_assert!((fit.a0 - a0).abs() < 1e-10 && (fit.a_c - ac).abs() < 1e-10 && (fit.a_s - as_).abs() < 1e-10);
        let direct: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        prop_assert!((direct - fit.a_s).abs() < 1e-10);
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
