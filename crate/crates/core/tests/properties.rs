use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use whid::bla::{estimate_frf, fit_rational, generate_periodic_gaussian};
use whid::lti::{filter_periodic, filter_transient, tf_from_zpk, zpk_from_tf, PoleZeroGain, Signal, TransferFunction};
use whid::model::{simulate_wh, StaticNonlinearity, WienerHammersteinModel};
use whid::seeds;

/// Conjugate-closed roots with magnitudes in `[lo, hi]`.
fn roots(order: usize, lo: f64, hi: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = seeds::rng(seed);
    let mut v = vec![];
    while v.len() < order {
        let r = rng.random_range(lo..=hi);
        if order - v.len() >= 2 && rng.random_bool(0.5) {
            let z = Complex64::from_polar(r, rng.random_range(0.1..3.0));
            v.push(z);
            v.push(z.conj());
        } else {
            v.push(Complex64::new(if rng.random_bool(0.5) { r } else { -r }, 0.0));
        }
    }
    v
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn cheby_model(w2: f64, w3: f64) -> WienerHammersteinModel {
    WienerHammersteinModel::new(
        whid::lti::cheby1_design(3, 3.0, 0.07).unwrap(),
        StaticNonlinearity::cubic(3.0, w2, w3),
        whid::lti::cheby2_design(3, 50.0, 0.1).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tf_zpk_round_trip(order in 1usize..=16, seed in any::<u64>()) {
        let zpk = PoleZeroGain::new(roots(order, 0.1, 0.99, seed), roots(order, 0.1, 0.99, !seed), 0.7);
        let tf = tf_from_zpk(&zpk).unwrap();
        let back = tf_from_zpk(&zpk_from_tf(&tf).unwrap()).unwrap();
        prop_assert!(rel_err(tf.num(), back.num()) < 1e-9);
        prop_assert!(rel_err(tf.den(), back.den()) < 1e-9);
    }

    #[test]
    fn conjugate_closed_factors_expand_to_real(order in 1usize..=16, seed in any::<u64>()) {
        let poles = roots(order, 0.1, 0.99, seed);
        let expanded = poles.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, p| {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * p;
            }
            next
        });
        let tf = tf_from_zpk(&PoleZeroGain::new(vec![], poles, 1.0)).unwrap();
        for (c, a) in expanded.iter().zip(tf.den()) {
            prop_assert!(c.im.abs() < 1e-12);
            prop_assert!((c.re - a).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_matches_transient_steady_state(order in 1usize..=12, seed in any::<u64>(), n in 32usize..200) {
        let tf = tf_from_zpk(&PoleZeroGain::new(roots(order, 0.0, 1.2, !seed), roots(order, 0.0, 0.98, seed), 1.0)).unwrap();
        let u = generate_periodic_gaussian(n, 1.0, &mut seeds::rng(seed)).unwrap();
        let y = filter_periodic(&tf, &u).unwrap();
        // 0.98^(periods * n) must be negligible
        let periods = (20usize).max(2 + 2000 / n);
        let repeated: Vec<f64> = u.samples().iter().copied().cycle().take(periods * n).collect();
        let long = filter_transient(&tf, &Signal::from_samples(repeated).unwrap()).unwrap();
        let tail = &long.samples()[(periods - 1) * n..];
        let diff: Vec<f64> = tail.iter().zip(y.samples()).map(|(a, b)| a - b).collect();
        prop_assert!(rms(&diff) < 1e-8 * rms(y.samples()));
    }

    #[test]
    fn linear_input_path_is_homogeneous(c in -5.0f64..5.0, seed in any::<u64>()) {
        let model = WienerHammersteinModel::new(
            whid::lti::cheby1_design(4, 3.0, 0.1).unwrap(),
            StaticNonlinearity::new(vec![1], vec![2.5]).unwrap(),
            whid::lti::cheby2_design(2, 50.0, 0.2).unwrap(),
        )
        .unwrap();
        let u = generate_periodic_gaussian(256, 1.0, &mut seeds::rng(seed)).unwrap();
        let scaled = u.with_samples(u.samples().iter().map(|v| c * v).collect()).unwrap();
        let y = simulate_wh(&model, &u).unwrap();
        let ys = simulate_wh(&model, &scaled).unwrap();
        for (a, b) in ys.samples().iter().zip(y.samples()) {
            prop_assert!((a - c * b).abs() < 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn simulation_commutes_with_rotation(shift in 0usize..128, seed in any::<u64>()) {
        let model = cheby_model(0.2, -0.1);
        let u = generate_periodic_gaussian(128, 1.0, &mut seeds::rng(seed)).unwrap();
        let mut rotated = u.samples().to_vec();
        rotated.rotate_left(shift);
        let y = simulate_wh(&model, &u).unwrap();
        let yr = simulate_wh(&model, &u.with_samples(rotated).unwrap()).unwrap();
        let mut expect = y.samples().to_vec();
        expect.rotate_left(shift);
        for (a, b) in yr.samples().iter().zip(&expect) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn linear_bla_recovers_coefficients() {
    let truth = TransferFunction::new(vec![0.2, 0.1, -0.05], vec![1.0, -1.1, 0.6, -0.1]).unwrap();
    let model = WienerHammersteinModel::new(truth.clone(), StaticNonlinearity::identity(), TransferFunction::identity()).unwrap();
    let mut rng = seeds::rng(3);
    let us: Vec<Signal> = (0..2).map(|_| generate_periodic_gaussian(256, 1.0, &mut rng).unwrap()).collect();
    let ys: Vec<Signal> = us.iter().map(|u| simulate_wh(&model, u).unwrap()).collect();
    let fit = fit_rational(&estimate_frf(&us, &ys).unwrap(), 2, 3).unwrap();
    assert!(rel_err(truth.num(), fit.model.num()) < 1e-6);
    assert!(rel_err(truth.den(), fit.model.den()) < 1e-6);
}

/// One excitation period measured repeatedly under independent output noise.
/// (With a fresh Gaussian period per realization the ratio `N/U` has no
/// finite variance, so only the repeated-period setting has a clean 1/R law.)
#[test]
fn frf_variance_falls_as_one_over_realizations() {
    let g = TransferFunction::new(vec![0.5, 0.3], vec![1.0, -0.7]).unwrap();
    let n = 1024;
    let mut rng = seeds::rng(77);
    let u = generate_periodic_gaussian(n, 1.0, &mut rng).unwrap();
    let y = filter_periodic(&g, &u).unwrap();
    let mut mean_variance = |count: usize| -> f64 {
        let ys: Vec<Signal> = (0..count)
            .map(|_| {
                let noisy = y.samples().iter().map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
                y.with_samples(noisy).unwrap()
            })
            .collect();
        let frf = estimate_frf(&vec![u.clone(); count], &ys).unwrap();
        frf.sample_variance.iter().sum::<f64>() / frf.sample_variance.len() as f64
    };
    let v4 = mean_variance(4);
    let v16 = mean_variance(16);
    let v64 = mean_variance(64);
    for (ratio, want) in [(v4 / v16, 4.0), (v16 / v64, 4.0), (v4 / v64, 16.0)] {
        assert!(ratio > 0.8 * want && ratio < 1.25 * want, "ratio {ratio}, expected {want}");
    }
}

#[test]
fn cubic_bla_is_scaled_linear_dynamics() {
    let model = cheby_model(0.25, -0.2);
    let dynamics = model.front.series(&model.back);
    let mut rng = seeds::rng(21);
    let us: Vec<Signal> = (0..16).map(|_| generate_periodic_gaussian(1024, 1.0, &mut rng).unwrap()).collect();
    let ys: Vec<Signal> = us.iter().map(|u| simulate_wh(&model, u).unwrap()).collect();
    let frf = estimate_frf(&us, &ys).unwrap();
    let g0 = whid::lti::freq_response(&dynamics, &frf.frequencies).unwrap();
    // least-squares scalar alpha, weighted by 1/variance
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..g0.len() {
        if frf.valid[k] && frf.sample_variance[k] > 0.0 {
            num += (frf.response[k] * g0[k].conj()).re / frf.sample_variance[k];
            den += g0[k].norm_sqr() / frf.sample_variance[k];
        }
    }
    let alpha = num / den;
    assert!(alpha > 2.0 && alpha < 3.0, "alpha {alpha}");
    let checked: Vec<bool> = (1..g0.len() - 1)
        .map(|k| (frf.response[k] - alpha * g0[k]).norm() <= 3.0 * frf.sample_variance[k].sqrt())
        .collect();
    let inside = checked.iter().filter(|&&b| b).count() as f64 / checked.len() as f64;
    assert!(inside >= 0.95, "{inside}");
}
