use pressure_lab::disk_kernel::DiskKernel;
use pressure_lab::disk_solver::{QuadratureScheme, TestFunction};
use pressure_lab::fields::{make_torus_field, MODES_PER_OCTAVE};
use pressure_lab::holder::{fit_exponent, oscillation_profile, OscillationProfile, ProfileOptions};
use pressure_lab::torus::{bilinear_pressure, pressure_spectral};
use pressure_lab::{Geometry, GridField};
use proptest::prelude::*;

fn disk_point(max_radius: f64) -> impl Strategy<Value = [f64; 2]> {
    (0.0..max_radius, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| [r * a.cos(), r * a.sin()])
}

fn torus_velocity(theta: f64, seed: u64, n: usize) -> GridField {
    let octaves = (n as f64 / 8.0).log2() as u32;
    let spec = make_torus_field(2, theta, octaves, MODES_PER_OCTAVE, seed, None).unwrap();
    GridField::sample_velocity(&spec, Geometry::Torus { dim: 2, n }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric(x in disk_point(0.98), y in disk_point(0.98)) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-6);
        let k = DiskKernel::default();
        let (a, b) = (k.green(x, y).unwrap(), k.green(y, x).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn kernel_has_zero_normal_derivative(x in disk_point(0.95), angle in 0.0..std::f64::consts::TAU) {
        let n = [angle.cos(), angle.sin()];
        let g = DiskKernel::default().gradient_y(x, n).unwrap();
        prop_assert!((g[0] * n[0] + g[1] * n[1]).abs() < 1e-9);
    }

    #[test]
    fn kernel_rejects_points_outside_the_disk(x in disk_point(0.9), r in 1.001..3.0f64) {
        let err = DiskKernel::default().green(x, [r, 0.0]).unwrap_err();
        prop_assert_eq!(err.code(), "E_DOMAIN");
    }

    #[test]
    fn exact_power_laws_are_recovered(alpha in 0.05..1.5f64, c in 0.1..10.0f64) {
        let scales: Vec<f64> = (0..10).rev().map(|k| 0.01 * f64::powi(2.0, k)).collect();
        let omega: Vec<f64> = scales.iter().map(|r| c * r.powf(alpha)).collect();
        let fit = fit_exponent(&OscillationProfile::from_values(scales, omega), 2, 2).unwrap();
        prop_assert!((fit.exponent - alpha).abs() < 1e-10);
        prop_assert!((fit.seminorm - c).abs() < 1e-9 * c);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn test_function_laplacian_is_the_hessian_trace(
        a in 0u32..5, b in 0u32..5, m in 1u32..7, kx in -4.0..4.0f64, ky in -4.0..4.0f64,
        phase in 0.0..6.3f64, y in disk_point(1.0),
    ) {
        let phis = [
            TestFunction::Monomial { a, b },
            TestFunction::Harmonic { m, imaginary: m % 2 == 0 },
            TestFunction::PlaneWave { k: [kx, ky], phase },
        ];
        for phi in phis {
            let h = phi.hessian(y);
            prop_assert!((phi.laplacian(y) - (h[0] + h[2])).abs() < 1e-9 * (1.0 + h[0].abs() + h[2].abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oscillation_is_monotone_in_scale(theta in 0.1..0.9f64, seed in 0u64..1000) {
        let u = torus_velocity(theta, seed, 64);
        let prof = oscillation_profile(&u, &ProfileOptions { seed, ..ProfileOptions::default() }).unwrap();
        for w in prof.omega.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn torus_profiles_are_translation_invariant(seed in 0u64..1000, sx in 0usize..64, sy in 0usize..64) {
        let u = torus_velocity(0.4, seed, 64);
        let n = 64;
        let mut shifted = u.clone();
        for c in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    shifted.values[c * n * n + i * n + j] = u.values[c * n * n + ((i + sx) % n) * n + (j + sy) % n];
                }
            }
        }
        let opts = ProfileOptions::default();
        prop_assert_eq!(
            oscillation_profile(&u, &opts).unwrap().omega,
            oscillation_profile(&shifted, &opts).unwrap().omega
        );
    }

    #[test]
    fn pressure_is_quadratic_and_bilinear_symmetric(theta in 0.1..0.9f64, seed in 0u64..1000, scale in 0.1..5.0f64) {
        let u = torus_velocity(theta, seed, 32);
        let v = torus_velocity(theta, seed + 1, 32);
        let p = pressure_spectral(&u).unwrap();
        let mut su = u.clone();
        su.values.iter_mut().for_each(|x| *x *= scale);
        let sp = pressure_spectral(&su).unwrap();
        let norm = p.max_abs();
        for (a, b) in p.values.iter().zip(&sp.values) {
            prop_assert!((scale * scale * a - b).abs() < 1e-12 * scale * scale * norm);
        }
        let (tuv, tvu) = (bilinear_pressure(&u, &v).unwrap(), bilinear_pressure(&v, &u).unwrap());
        prop_assert!(tuv.max_abs_diff(&tvu).unwrap() <= 1e-12 * tuv.max_abs());
        prop_assert!(p.satisfies_zero_average());
    }

    #[test]
    fn refined_quadrature_stays_valid(near in 1e-4..0.2f64, angles in 4usize..512) {
        let scheme = QuadratureScheme { near_radius: near, far_angles: angles, ..QuadratureScheme::default() };
        prop_assert!(scheme.validate().is_ok());
        let fine = scheme.refined();
        prop_assert!(fine.validate().is_ok());
        prop_assert_eq!(fine.near_radius, near / 2.0);
    }
}
