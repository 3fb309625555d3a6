use std::f64::consts::TAU;

use proptest::prelude::*;

use smeasure::measure::{atom_series_partial_sums, integrate_pullback, solve_s_measure, GridMeasure, SolveOptions};
use smeasure::rotation::{build_partition, compare_to_rational, ladder, real_bounds_ratio, RationalOrder};
use smeasure::tongue::{fd_derivative, solve_tongue_point, tongue_derivative};
use smeasure::{AnalyticCircleMap, ContinuedFraction, MonotoneFamily};

const CRITICAL_GOLDEN_A: f64 = 0.6066610634699852;

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn critical() -> AnalyticCircleMap {
    AnalyticCircleMap::arnold(CRITICAL_GOLDEN_A, 1.0 / TAU)
}

fn stock() -> Vec<AnalyticCircleMap> {
    let tau = TAU;
    vec![
        AnalyticCircleMap::rotation(golden()),
        AnalyticCircleMap::arnold(0.61, 0.5 / tau),
        critical(),
        AnalyticCircleMap::new(0.3, vec![4.0 / (3.0 * tau), 1.0 / (6.0 * tau)], vec![]).unwrap(),
        AnalyticCircleMap::new(0.2, vec![0.05], vec![0.03, -0.01]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stock_maps_are_equivariant(i in 0usize..5, x in -5.0..5.0f64) {
        let f = &stock()[i];
        prop_assert!((f.lift(x + 1.0) - f.lift(x) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn stock_inverse_round_trip(i in 0usize..5, x in -2.0..2.0f64) {
        let f = &stock()[i];
        let y = f.lift(x);
        let back = f.inverse_lift(y).unwrap();
        prop_assert!((f.lift(back) - y).abs() <= 1e-13);
        // near a critical point of order d the preimage is only determined to eps^(1/d)
        if f.derivative(x, 1).unwrap() >= 1e-2 {
            prop_assert!((back - x).abs() <= 1e-13);
        }
    }

    #[test]
    fn stock_maps_are_monotone(i in 0usize..5, x in 0.0..1.0f64, u in 0.0..1.0f64) {
        let f = &stock()[i];
        let y = x + u;
        prop_assert!(f.lift(x) <= f.lift(y) && f.lift(y) <= f.lift(x + 1.0));
    }

    #[test]
    fn stock_derivative_consistency(i in 0usize..5, x in 0.0..1.0f64) {
        let f = &stock()[i];
        let d = f.derivative(x, 1).unwrap();
        // stay away from critical points, where the relative test is meaningless
        prop_assume!(d > 1e-2);
        let h = 1e-5;
        let fd = (f.lift(x + h) - f.lift(x - h)) / (2.0 * h);
        prop_assert!((fd - d).abs() <= 1e-6 * d);
    }
}

#[test]
fn bracketing_alternates_for_golden_maps() {
    for f in [AnalyticCircleMap::rotation(golden()), critical()] {
        for (i, (p, q)) in ladder(&f, 12).unwrap().into_iter().enumerate().skip(1) {
            let expect = if i % 2 == 0 { RationalOrder::Above } else { RationalOrder::Below };
            assert_eq!(compare_to_rational(&f, p, q).unwrap(), expect, "{p}/{q}");
        }
    }
}

#[test]
fn partitions_refine() {
    let f = critical();
    let parts: Vec<_> = (2..=9).map(|n| build_partition(&f, n).unwrap()).collect();
    for w in parts.windows(2) {
        let coarse = &w[0].intervals;
        for iv in &w[1].intervals {
            // circular containment, up to endpoint rounding
            let fits = coarse.iter().any(|c| {
                let shift = (c.left - iv.left).round();
                let (l, r) = (iv.left + shift, iv.right + shift);
                l >= c.left - 1e-12 && r <= c.right + 1e-12
                    || {
                        let (l, r) = (l + 1.0, r + 1.0);
                        l >= c.left - 1e-12 && r <= c.right + 1e-12
                    }
            });
            assert!(fits, "level {} interval [{}, {}] not nested", iv.level, iv.left, iv.right);
        }
    }
}

#[test]
fn real_bounds_do_not_grow_for_constant_type_rotations() {
    for a in [golden(), 2f64.sqrt() - 1.0] {
        let f = AnalyticCircleMap::rotation(a);
        let r: Vec<f64> = (3..=14).map(|n| real_bounds_ratio(&build_partition(&f, n).unwrap())).collect();
        assert!(r.windows(2).any(|w| w[1] <= w[0] + 1e-9), "{r:?}");
        assert!(r.iter().all(|&x| x < 3.0), "{r:?}");
    }
}

#[test]
fn tongue_denominator_is_mass() {
    let fam = MonotoneFamily::arnold();
    let nu = 0.5 / TAU;
    let a = solve_tongue_point(&fam, &ContinuedFraction::golden(80), nu, 1e-12).unwrap().a;
    let map = fam.map(a, nu).unwrap();
    let mu = solve_s_measure(&map, -1.0, 4096, &SolveOptions::default(), &GridMeasure::lebesgue(4096).unwrap())
        .unwrap()
        .measure;
    assert!((integrate_pullback(&mu, &map, |x| fam.d_a(x)).unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn finite_differences_have_second_order() {
    let fam = MonotoneFamily::arnold();
    let alpha = ContinuedFraction::golden(80);
    let nu = 0.5 / TAU;
    let hs = [1e-2, 5e-3, 2.5e-3];
    let fd: Vec<f64> = hs.iter().map(|&h| fd_derivative(&fam, &alpha, nu, h, 1e-12).unwrap().0).collect();
    // successive differences shrink by 4 when the error is C·h²
    let ratio = (fd[0] - fd[1]) / (fd[1] - fd[2]);
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}, fd {fd:?}");
    let extrapolated = fd[2] + (fd[2] - fd[1]) / 3.0;
    let a = solve_tongue_point(&fam, &alpha, nu, 1e-12).unwrap().a;
    let map = fam.map(a, nu).unwrap();
    let n = 1 << 14;
    let mu = solve_s_measure(&map, -1.0, n, &SolveOptions::default(), &GridMeasure::lebesgue(n).unwrap())
        .unwrap()
        .measure;
    let d = tongue_derivative(&fam, a, nu, &mu).unwrap();
    assert!((d - extrapolated).abs() <= 1e-4, "measure {d}, extrapolated {extrapolated}");
}

#[test]
fn atom_series_diverges_on_critical_map() {
    let sums = atom_series_partial_sums(&critical(), -1.0, 0.3, 10_000);
    assert!(sums.windows(2).all(|w| w[1] > w[0]));
    assert!(sums[10_000] > 100.0 * sums[10], "{} vs {}", sums[10_000], sums[10]);
}

#[test]
fn mass_defect_is_small_for_smooth_maps() {
    let opts = SolveOptions::default();
    for f in [AnalyticCircleMap::rotation(golden()), AnalyticCircleMap::arnold(0.6145263876788, 0.5 / TAU)] {
        for s in [-1.0, 0.0, 0.5] {
            let m = solve_s_measure(&f, s, 4096, &opts, &GridMeasure::lebesgue(4096).unwrap()).unwrap();
            assert!(m.lambda_defect() <= 10.0 * opts.tol_kr, "s = {s}: lambda {}", m.lambda);
        }
    }
}
