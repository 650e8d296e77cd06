use proptest::prelude::*;

use sparsefdr::estimators::{
    penalized_index, penalized_objective, step_down_index, step_up_index, SortedMagnitudes,
};
use sparsefdr::rng::ReplicateStream;
use sparsefdr::FdrBoundary;

fn data(n: usize, spikes: usize, level: f64, seed: u64) -> Vec<f64> {
    let mut s = ReplicateStream::new(seed, 0);
    (0..n)
        .map(|i| if i < spikes { level } else { 0.0 } + s.normal())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn penalized_minimum_sits_between_crossings(
        n in 1usize..200,
        q in 0.01f64..0.99,
        frac in 0.0f64..1.0,
        level in 0.0f64..7.0,
        seed in any::<u64>(),
    ) {
        let y = data(n, (frac * n as f64) as usize, level, seed);
        let b = FdrBoundary::new(n, q).unwrap();
        let sorted = SortedMagnitudes::new(&y);
        let (m, t) = (sorted.magnitudes(), b.thresholds());
        let up = step_up_index(m, t);
        let down = step_down_index(m, t);
        let pen = penalized_index(m, t, 2.0);
        prop_assert!(down <= pen && pen <= up, "down={down} pen={pen} up={up}");

        let s = penalized_objective(m, t, 2.0);
        let best = s.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(s[pen], best);
        prop_assert!(s[..pen].iter().all(|&v| v > best));
    }

    #[test]
    fn crossings_agree_with_boundary_tests(
        n in 1usize..200,
        q in 0.01f64..0.99,
        level in 0.0f64..7.0,
        seed in any::<u64>(),
    ) {
        let y = data(n, n / 3, level, seed);
        let b = FdrBoundary::new(n, q).unwrap();
        let sorted = SortedMagnitudes::new(&y);
        let (m, t) = (sorted.magnitudes(), b.thresholds());
        let up = step_up_index(m, t);
        let down = step_down_index(m, t);
        prop_assert!(m[up..].iter().zip(&t[up..]).all(|(a, b)| a < b));
        prop_assert!(m[..down].iter().zip(&t[..down]).all(|(a, b)| a >= b));
        if down < n {
            prop_assert!(m[down] < t[down]);
        }
    }
}

#[test]
fn step_up_count_near_signal_size() {
    let n = 10_000;
    let b = FdrBoundary::new(n, 0.05).unwrap();
    let reps = 10_000u64;
    let mut y = vec![0.0; n];
    let mut total = 0usize;
    for rep in 0..reps {
        ReplicateStream::new(31, rep).fill_normal(&mut y);
        y[..10].iter_mut().for_each(|v| *v += 5.21);
        total += step_up_index(SortedMagnitudes::new(&y).magnitudes(), b.thresholds());
    }
    let mean = total as f64 / reps as f64;
    assert!((8.5..=11.5).contains(&mean), "mean step-up count {mean}");
}
