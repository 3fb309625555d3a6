use proptest::prelude::*;

use smeasure::circlemap::{circle_distance, frac};
use smeasure::measure::{kr_distance, GridMeasure, TransferOperator};
use smeasure::rotation::rotation_number;
use smeasure::{AnalyticCircleMap, ContinuedFraction};

/// Maps with total trig amplitude below `1/(2π·2)`, so `F' ≥ 1/2`.
fn diffeo() -> impl Strategy<Value = AnalyticCircleMap> {
    (
        0.0..1.0f64,
        prop::collection::vec(-1.0..1.0f64, 1..4),
        prop::collection::vec(-1.0..1.0f64, 0..4),
    )
        .prop_map(|(a, s, c)| {
            let k_weight: f64 = s.iter().enumerate().chain(c.iter().enumerate()).map(|(k, v)| (k + 1) as f64 * v.abs()).sum();
            let scale = 0.5 / (std::f64::consts::TAU * k_weight.max(1e-9));
            let s = s.iter().map(|v| v * scale).collect();
            let c = c.iter().map(|v| v * scale).collect();
            AnalyticCircleMap::new(a, s, c).unwrap()
        })
}

fn weights(n: usize) -> impl Strategy<Value = GridMeasure> {
    prop::collection::vec(0.0..1.0f64, n).prop_map(|mut w| {
        w[0] += 1e-3;
        GridMeasure::normalized(w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_is_degree_one(f in diffeo(), x in -3.0..3.0f64) {
        prop_assert!((f.lift(x + 1.0) - f.lift(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lift_is_increasing(f in diffeo(), x in 0.0..1.0f64, h in 1e-6..0.5f64) {
        prop_assert!(f.lift(x + h) > f.lift(x));
        prop_assert!(f.is_homeomorphism());
    }

    #[test]
    fn inverse_round_trip(f in diffeo(), x in -2.0..2.0f64) {
        let y = f.lift(x);
        prop_assert!((f.inverse_lift(y).unwrap() - x).abs() < 1e-12);
        let back = f.inverse(frac(y), 1e-12).unwrap();
        prop_assert!((frac(f.lift(back)) - frac(y)).abs() < 1e-12 || (frac(f.lift(back)) - frac(y)).abs() > 1.0 - 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient(f in diffeo(), x in 0.0..1.0f64) {
        let h = 1e-5;
        let fd = (f.lift(x + h) - f.lift(x - h)) / (2.0 * h);
        prop_assert!((f.derivative(x, 1).unwrap() - fd).abs() < 1e-7);
        let fd2 = (f.derivative(x + h, 1).unwrap() - f.derivative(x - h, 1).unwrap()) / (2.0 * h);
        prop_assert!((f.derivative(x, 2).unwrap() - fd2).abs() < 1e-5 * (1.0 + fd2.abs()));
    }

    #[test]
    fn iterate_composes(f in diffeo(), x in 0.0..1.0f64, m in 0i64..20, n in 0i64..20, k in 1i64..4) {
        let a = f.iterate(f.iterate(x, m).unwrap(), n).unwrap();
        let b = f.iterate(x, m + n).unwrap();
        prop_assert!(circle_distance(a, b) < 1e-9);
        // backward steps expand errors by up to 1/min F', so only undo a few
        prop_assert!(circle_distance(f.iterate(f.iterate(x, k).unwrap(), -k).unwrap(), x) < 1e-12);
    }

    #[test]
    fn kr_is_a_metric(a in weights(64), b in weights(64), c in weights(64)) {
        let ab = kr_distance(&a, &b).unwrap();
        prop_assert!(kr_distance(&a, &a).unwrap() < 1e-15);
        prop_assert!((ab - kr_distance(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!(ab <= kr_distance(&a, &c).unwrap() + kr_distance(&c, &b).unwrap() + 1e-15);
        prop_assert!(ab <= 0.5 + 1e-15);
    }

    #[test]
    fn kr_of_rotated_measure(n_shift in 0usize..64, a in weights(64)) {
        let w = a.weights();
        let shifted: Vec<f64> = (0..64).map(|i| w[(i + 64 - n_shift) % 64]).collect();
        let b = GridMeasure::from_weights(shifted).unwrap();
        let k = n_shift.min(64 - n_shift) as f64 / 64.0;
        prop_assert!(kr_distance(&a, &b).unwrap() <= k + 1e-12);
    }

    #[test]
    fn transfer_preserves_positivity(f in diffeo(), s in -2.0..1.0f64, mu in weights(256)) {
        let op = TransferOperator::build(&f, s, 256).unwrap();
        let (next, lambda) = op.apply(&mu).unwrap();
        prop_assert!(lambda > 0.0);
        prop_assert!(next.weights().iter().all(|&w| w >= 0.0));
        prop_assert!((next.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if s == 0.0 {
            prop_assert!((lambda - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_exponent_transfer_is_stochastic(f in diffeo()) {
        let op = TransferOperator::build(&f, 0.0, 128).unwrap();
        for c in op.column_sums() {
            prop_assert!((c - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn measure_files_round_trip(mu in weights(32)) {
        let mut csv = Vec::new();
        mu.write_csv(&mut csv, &["x".into()]).unwrap();
        prop_assert_eq!(&GridMeasure::read_csv(csv.as_slice()).unwrap(), &mu);
        let mut bin = Vec::new();
        mu.write_binary(&mut bin).unwrap();
        prop_assert_eq!(&GridMeasure::read_binary(bin.as_slice()).unwrap(), &mu);
    }

    #[test]
    fn convergents_are_unimodular(q in prop::collection::vec(1u64..20, 1..15), k0 in 0u64..3) {
        let mut quotients = vec![k0];
        quotients.extend(q);
        let cf = ContinuedFraction::from_quotients(quotients).unwrap();
        let c = cf.convergents();
        for w in c.windows(2) {
            let det = w[1].0 as i128 * w[0].1 as i128 - w[0].0 as i128 * w[1].1 as i128;
            prop_assert_eq!(det.abs(), 1);
            prop_assert!(w[1].1 >= w[0].1);
        }
        // convergents alternate around the value
        let v = cf.value();
        for (i, &(p, qq)) in c.iter().enumerate().take(c.len() - 1) {
            let r = p as f64 / qq as f64;
            if i % 2 == 0 { prop_assert!(r <= v + 1e-15) } else { prop_assert!(r >= v - 1e-15) }
        }
    }

    #[test]
    fn rotation_bracket_contains_angle(a in 0.0..1.0f64) {
        let rn = rotation_number(&AnalyticCircleMap::rotation(a), 1e-8, 1 << 22).unwrap();
        if rn.certified {
            let lo = rn.lower.0 as f64 / rn.lower.1 as f64;
            let hi = rn.upper.0 as f64 / rn.upper.1 as f64;
            prop_assert!(lo - 1e-15 <= a && a <= hi + 1e-15, "{} not in [{}, {}]", a, lo, hi);
        } else {
            prop_assert!((rn.estimate - a).abs() < 1e-6);
        }
    }
}
