mod common;

use proptest::prelude::*;

use dithered_onebit::ensemble::{sample_dither, sample_matrix, sample_noise};
use dithered_onebit::quantize::{
    corrupt_bits, empirical_quantizer_mean, one_bit_measure, read_packed, sign_pattern_distance, write_packed,
};
use dithered_onebit::signal::{membership, sample_signal};
use dithered_onebit::{CorruptionStrategy, MeasurementEnsemble, NoiseModel, RowLaw, SeedPlan, SignalSetDescriptor};

fn matrix(law: RowLaw, n: usize, m: usize, seed: u64) -> dithered_onebit::Matrix {
    let ensemble = MeasurementEnsemble::new(law, n, m, 1.0).unwrap();
    sample_matrix(&ensemble, &SeedPlan::new(seed), 0).unwrap()
}

#[test]
fn gaussian_entries_have_unit_variance() {
    let a = matrix(RowLaw::Gaussian, 1, 100_000, 1);
    let v = a.as_slice();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!(var > 0.98 && var < 1.02, "variance {var}");
}

#[test]
fn student_t_entries_have_unit_variance() {
    let a = matrix(RowLaw::StudentT { df: 3.0 }, 1, 1_000_000, 2);
    let v = a.as_slice();
    let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    assert!(var > 0.9 && var < 1.1, "variance {var}");
}

#[test]
fn rademacher_entries_are_signs() {
    let a = matrix(RowLaw::Rademacher, 3, 2, 3);
    assert!(a.as_slice().iter().all(|x| *x == 1.0 || *x == -1.0));
}

#[test]
fn student_t_needs_finite_variance() {
    assert!(MeasurementEnsemble::new(RowLaw::StudentT { df: 2.0 }, 3, 2, 1.0).is_err());
}

#[test]
fn rows_are_isotropic() {
    let (n, m) = (4, 100_000);
    for (law, diag) in [
        (RowLaw::Gaussian, (0.9, 1.1)),
        (RowLaw::Rademacher, (0.9, 1.1)),
        (RowLaw::StudentT { df: 4.0 }, (0.8, 1.25)),
    ] {
        let a = matrix(law, n, m, 4);
        for j in 0..n {
            let mean = a.iter_rows().map(|r| r[j]).sum::<f64>() / m as f64;
            if !matches!(law, RowLaw::StudentT { .. }) {
                assert!(mean.abs() < 0.02, "{law:?}: coordinate {j} mean {mean}");
            }
            for k in 0..n {
                let c = a.iter_rows().map(|r| r[j] * r[k]).sum::<f64>() / m as f64;
                if j == k {
                    assert!(c > diag.0 && c < diag.1, "{law:?}: variance {c}");
                } else {
                    assert!(c.abs() < 0.05, "{law:?}: covariance ({j},{k}) = {c}");
                }
            }
        }
    }
}

#[test]
fn dither_is_uniform_on_the_interval() {
    let t = sample_dither(1_000_000, 2.0, &SeedPlan::new(5), 0).unwrap();
    assert!(t.iter().all(|x| x.abs() <= 2.0));
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let var = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t.len() as f64;
    assert!(mean.abs() < 0.01, "mean {mean}");
    assert!(var > 1.32 && var < 1.35, "variance {var}");
    assert!(sample_dither(10, 0.0, &SeedPlan::new(5), 0).is_err());
}

#[test]
fn sampling_is_deterministic() {
    let e = MeasurementEnsemble::new(RowLaw::StudentT { df: 5.0 }, 7, 50, 1.0).unwrap();
    let plan = SeedPlan::new(6);
    assert_eq!(sample_matrix(&e, &plan, 3).unwrap(), sample_matrix(&e, &plan, 3).unwrap());
    assert_ne!(sample_matrix(&e, &plan, 3).unwrap(), sample_matrix(&e, &plan, 4).unwrap());
    let noise = NoiseModel::Gaussian { sigma: 0.1 };
    assert_eq!(
        sample_noise(&noise, 20, &plan, 1).unwrap(),
        sample_noise(&noise, 20, &plan, 1).unwrap()
    );
}

#[test]
fn sampled_signals_are_members() {
    let sets = [
        SignalSetDescriptor::sparse_ball(2, 8, 1.0).unwrap(),
        SignalSetDescriptor::l1l2_ball(1.0, 4, 1.0).unwrap(),
        SignalSetDescriptor::l1l2_ball(2.5, 10, 3.0).unwrap(),
    ];
    for d in &sets {
        for t in 0..500 {
            let x = sample_signal(d, &SeedPlan::new(7), t).unwrap();
            assert!(membership(d, &x, 1e-9).unwrap());
        }
    }
    let single = SignalSetDescriptor::finite_set(vec![vec![1.0, 0.0]], 1.0).unwrap();
    assert_eq!(sample_signal(&single, &SeedPlan::new(7), 0).unwrap(), vec![1.0, 0.0]);
}

#[test]
fn measurement_matches_direct_evaluation() {
    let (n, m) = (5, 300);
    let a = matrix(RowLaw::Gaussian, n, m, 8);
    let plan = SeedPlan::new(8);
    let x = sample_signal(&SignalSetDescriptor::sparse_ball(2, n, 1.0).unwrap(), &plan, 0).unwrap();
    let dither = sample_dither(m, 1.5, &plan, 0).unwrap();
    let noise = sample_noise(&NoiseModel::Gaussian { sigma: 0.2 }, m, &plan, 0).unwrap();
    let obs = one_bit_measure(&a, &x, &dither, &noise).unwrap();
    for i in 0..m {
        let analog = common::dot(a.row(i), &x) + noise[i] + dither[i];
        assert!((obs.analog[i] - analog).abs() < 1e-12);
        assert_eq!(obs.q[i], if analog >= 0.0 { 1 } else { -1 });
    }
}

#[test]
fn quantizer_mean_within_monte_carlo_tolerance() {
    let n = 1_000_000;
    for (k, (z, lambda)) in [(0.3, 0.5), (-0.45, 0.5), (0.7, 0.5), (-3.0, 2.0)].into_iter().enumerate() {
        let (mean, _) = empirical_quantizer_mean(z, lambda, n, &SeedPlan::new(9), k as u64).unwrap();
        let formula = if z > lambda {
            1.0
        } else if z < -lambda {
            -1.0
        } else {
            z / lambda
        };
        assert!((mean - formula).abs() <= 4.0 / (n as f64).sqrt(), "z = {z}: {mean} vs {formula}");
    }
}

#[test]
fn packed_round_trip() {
    let q: Vec<i8> = (0..37).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
    let mut buf = Vec::new();
    write_packed(&mut buf, &q).unwrap();
    assert_eq!(read_packed(buf.as_slice()).unwrap(), q);
}

fn strategy() -> impl Strategy<Value = CorruptionStrategy> {
    prop_oneof![
        Just(CorruptionStrategy::RandomFlip),
        Just(CorruptionStrategy::AdversarialLargestMargin),
        Just(CorruptionStrategy::AdversarialSmallestMargin),
    ]
}

proptest! {
    #[test]
    fn corruption_flips_exactly_the_budget(
        analog in prop::collection::vec(-3.0f64..3.0, 1..200),
        beta in 0.0f64..=1.0,
        strategy in strategy(),
        seed in any::<u64>(),
    ) {
        let m = analog.len();
        let a = dithered_onebit::Matrix::from_row_major(m, 1, vec![1.0; m]).unwrap();
        let obs = one_bit_measure(&a, &[0.0], &analog, &vec![0.0; m]).unwrap();
        let out = corrupt_bits(&obs, beta, strategy, &SeedPlan::new(seed), 0).unwrap();
        let (count, _) = sign_pattern_distance(&obs.q, &out.q).unwrap();
        prop_assert_eq!(count, (beta * m as f64).floor() as usize);
        prop_assert_eq!(out.flipped(), count);
        if strategy == CorruptionStrategy::AdversarialLargestMargin && count > 0 {
            let flipped_min = (0..m).filter(|&i| out.q[i] != obs.q[i]).map(|i| analog[i].abs()).fold(f64::INFINITY, f64::min);
            let kept_max = (0..m).filter(|&i| out.q[i] == obs.q[i]).map(|i| analog[i].abs()).fold(0.0, f64::max);
            prop_assert!(flipped_min >= kept_max);
        }
    }

    #[test]
    fn sign_distance_is_a_metric(
        bits in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 1..100),
    ) {
        let to = |f: fn(&(bool, bool, bool)) -> bool| -> Vec<i8> {
            bits.iter().map(|b| if f(b) { 1 } else { -1 }).collect()
        };
        let (p, q, r) = (to(|b| b.0), to(|b| b.1), to(|b| b.2));
        let d = |a: &[i8], b: &[i8]| sign_pattern_distance(a, b).unwrap().0;
        prop_assert_eq!(d(&p, &p), 0);
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r));
        if d(&p, &q) == 0 {
            prop_assert_eq!(&p, &q);
        }
    }
}
