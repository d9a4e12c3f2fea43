use proptest::prelude::*;

use sqg_sheets::contour::{residual, w_direction, EvalOptions, SheetState};
use sqg_sheets::diagnostics::{curvature, curvature_parametric, mirror_check};
use sqg_sheets::kernels::{even_kernel_apply, measure_multipliers, pv_mean_integral, sine_kernel_apply};
use sqg_sheets::pointvortex::{PointKernel, PointSystem};
use sqg_sheets::solver::ContinuationRecord;
use sqg_sheets::trig::{analyze_even, analyze_odd, differentiate, synth, EvenSeries, Grid, OddSeries};

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synth_analyze_round_trip(a in coeffs(12), b in coeffs(12)) {
        let grid = Grid::new(32).unwrap();
        let even = EvenSeries::new(a.clone()).unwrap();
        let odd = OddSeries::new(b.clone()).unwrap();
        let (back, mean) = analyze_even(&synth(&even, &grid).unwrap(), 12).unwrap();
        prop_assert!(mean.abs() < 1e-14);
        for (x, y) in back.as_slice().iter().zip(&a) {
            prop_assert!((x - y).abs() < 1e-13);
        }
        let back = analyze_odd(&synth(&odd, &grid).unwrap(), 12).unwrap();
        for (x, y) in back.as_slice().iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn second_derivative_scales_by_minus_j_squared(a in coeffs(8)) {
        let p = EvenSeries::new(a.clone()).unwrap();
        let pp = differentiate(&differentiate(&p));
        for (j, (x, y)) in pp.as_slice().iter().zip(&a).enumerate() {
            let j = (j + 1) as f64;
            prop_assert!((x + j * j * y).abs() < 1e-15 * (1.0 + j * j));
        }
    }

    #[test]
    fn odd_integrands_cancel(x in 0.0f64..6.3, c in coeffs(3)) {
        let grid = Grid::new(64).unwrap();
        let f = |t: f64| {
            let u = x - t;
            (c[0] * u.sin() + c[1] * (3.0 * u).sin()) / (1.0 + c[2] * c[2] + u.cos())
        };
        let v = pv_mean_integral(f, x, &grid).unwrap();
        prop_assert!(v.abs() < 1e-14);
    }

    #[test]
    fn kernels_act_diagonally(a in coeffs(6)) {
        let grid = Grid::new(128).unwrap();
        let table = measure_multipliers(6, &grid).unwrap();
        let h = EvenSeries::new(a.clone()).unwrap();
        let sine = analyze_odd(&sine_kernel_apply(&h, &grid).unwrap(), 6).unwrap();
        let (even, mean) = analyze_even(&even_kernel_apply(&h, &grid).unwrap(), 6).unwrap();
        prop_assert!(mean.abs() < 1e-12);
        for r in &table.rows {
            let aj = a[r.j - 1];
            prop_assert!((sine.get(r.j) - r.lambda * aj).abs() < 1e-10 * (1.0 + r.lambda.abs()));
            prop_assert!((even.get(r.j) - r.mu * aj).abs() < 1e-10 * (1.0 + r.mu.abs()));
        }
    }

    #[test]
    fn residual_is_affine_in_speed(eps in 0.005f64..0.2, w in -1.0f64..1.0, a in coeffs(4), b in coeffs(4)) {
        let grid = Grid::new(64).unwrap();
        let base = SheetState::new(eps, 1.0, 0.0, EvenSeries::new(a).unwrap(), EvenSeries::new(b).unwrap()).unwrap();
        let opts = EvalOptions::default();
        let r0 = residual(&base, &grid, 4, &opts).unwrap();
        let rw = residual(&base.with_w(w), &grid, 4, &opts).unwrap();
        let (df, dg) = w_direction(&base, &grid, 4).unwrap();
        for j in 1..=4 {
            prop_assert!((rw.f.get(j) - r0.f.get(j) - w * df.get(j)).abs() < 1e-11);
            prop_assert!((rw.g.get(j) - r0.g.get(j) - w * dg.get(j)).abs() < 1e-11);
        }
    }

    #[test]
    fn curvature_formulas_agree(eps in 0.0f64..0.3, a in coeffs(5)) {
        let grid = Grid::new(64).unwrap();
        let state = SheetState::new(eps, 2.0, 0.0, EvenSeries::new(a).unwrap(), EvenSeries::zeros(1)).unwrap();
        let k1 = curvature(&state, &grid).unwrap();
        let k2 = curvature_parametric(&state, &grid).unwrap();
        for (x, y) in k1.iter().zip(&k2) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn records_survive_json(eps in -0.2f64..0.2, w in 0.0f64..1.0, a in coeffs(4), b in coeffs(4), k in prop::option::of(-10.0f64..10.0)) {
        let rec = ContinuationRecord {
            eps, d: 1.0, w, p_coeffs: a, q_coeffs: b, residual_sup: 1e-12,
            iterations: 2, min_curvature: 0.99, k, wall_ms: None,
        };
        let text = serde_json::to_string(&rec).unwrap();
        let back: ContinuationRecord = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert!(mirror_check(&rec, &back).unwrap().passed);
    }

    #[test]
    fn point_rhs_translation_invariant(pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..6), sx in -5.0f64..5.0, sy in -5.0f64..5.0) {
        let positions: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let strengths = (0..positions.len()).map(|i| 1.0 + i as f64).collect::<Vec<_>>();
        prop_assume!(positions.iter().enumerate().all(|(i, a)| positions[i + 1..].iter().all(|b| (a[0] - b[0]).hypot(a[1] - b[1]) > 0.1)));
        let sys = PointSystem::new(positions.clone(), strengths.clone(), 1.0, PointKernel::default()).unwrap();
        let moved = PointSystem::new(positions.iter().map(|z| [z[0] + sx, z[1] + sy]).collect(), strengths, 1.0, PointKernel::default()).unwrap();
        for (a, b) in sys.rhs().unwrap().iter().zip(moved.rhs().unwrap()) {
            prop_assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
    }
}
