use std::f64::consts::PI;

use num_complex::Complex64;

use super::poly::poly_eval;
use super::{DftPlan, Signal, TransferFunction};
use crate::error::{Error, Result};

/// Exact rational evaluation at `q = exp(j 2 pi f)` for each normalized `f`.
pub fn freq_response(tf: &TransferFunction, normalized_freqs: &[f64]) -> Result<Vec<Complex64>> {
    normalized_freqs
        .iter()
        .map(|&f| {
            let w = Complex64::from_polar(1.0, -2.0 * PI * f);
            response_at(tf, w).ok_or(Error::SingularResponse(f))
        })
        .collect()
}

fn response_at(tf: &TransferFunction, w: Complex64) -> Option<Complex64> {
    let den = poly_eval(tf.den(), w);
    let scale: f64 = tf.den().iter().map(|a| a.abs()).sum();
    if den.norm() <= 1e-14 * scale {
        return None;
    }
    Some(poly_eval(tf.num(), w) / den)
}

/// Block response on the `N`-point DFT grid.
pub(crate) fn grid_response(tf: &TransferFunction, plan: &DftPlan) -> Result<Vec<Complex64>> {
    let n = plan.len();
    plan.grid()
        .into_iter()
        .enumerate()
        .map(|(k, w)| response_at(tf, w).ok_or(Error::SingularResponse(k as f64 / n as f64)))
        .collect()
}

/// Direct-form difference equation from zero initial conditions.
///
/// Fails only if the output diverges to non-finite values (unstable block).
pub fn filter_transient(tf: &TransferFunction, input: &Signal) -> Result<Signal> {
    let b = tf.num();
    let a = tf.den();
    let x = input.samples();
    let mut y = vec![0.0; x.len()];
    for t in 0..x.len() {
        let mut acc = 0.0;
        for (i, &bi) in b.iter().enumerate().take(t + 1) {
            acc += bi * x[t - i];
        }
        for (i, &ai) in a.iter().enumerate().skip(1).take(t) {
            acc -= ai * y[t - i];
        }
        y[t] = acc;
    }
    input.with_samples(y)
}

/// Periodic steady-state response to one period of a periodic input,
/// computed by bin-wise multiplication in the DFT domain.
pub fn filter_periodic(tf: &TransferFunction, period: &Signal) -> Result<Signal> {
    if period.len() < 2 {
        return Err(Error::InvalidInput("period must have at least 2 samples".into()));
    }
    if let ([b], [_]) = (tf.num(), tf.den()) {
        return period.with_samples(period.samples().iter().map(|x| b * x).collect());
    }
    let radius = tf.spectral_radius()?;
    if radius >= 1.0 {
        return Err(Error::Instability(radius));
    }
    let plan = DftPlan::new(period.len());
    let resp = grid_response(tf, &plan)?;
    period.with_samples(plan.filter(period.samples(), &resp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tf(num: &[f64], den: &[f64]) -> TransferFunction {
        TransferFunction::new(num.to_vec(), den.to_vec()).unwrap()
    }

    #[test]
    fn static_gain_is_exact() {
        let u = Signal::from_samples(vec![0.1, -0.7, 1.0 / 3.0]).unwrap();
        assert_eq!(filter_periodic(&TransferFunction::identity(), &u).unwrap(), u);
        let y = filter_periodic(&TransferFunction::gain(2.0), &u).unwrap();
        assert_eq!(y.samples(), [0.2, -1.4, 2.0 / 3.0]);
    }

    #[test]
    fn unit_delay_is_circular_shift() {
        let u = Signal::from_samples(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = filter_periodic(&tf(&[0.0, 1.0], &[1.0]), &u).unwrap();
        for (a, b) in y.samples().iter().zip([4.0, 1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_gain_doubles() {
        let u = Signal::from_samples(vec![0.3, -1.0, 2.5]).unwrap();
        let y = filter_periodic(&TransferFunction::gain(2.0), &u).unwrap();
        for (a, b) in y.samples().iter().zip(u.samples()) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn unstable_block_rejected() {
        let u = Signal::from_samples(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            filter_periodic(&tf(&[1.0], &[1.0, -1.5]), &u),
            Err(Error::Instability(_))
        ));
        assert!(filter_periodic(&TransferFunction::identity(), &Signal::from_samples(vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn impulse_response_is_geometric() {
        let u = Signal::from_samples(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let y = filter_transient(&tf(&[1.0], &[1.0, -0.5]), &u).unwrap();
        assert_eq!(y.samples(), &[1.0, 0.5, 0.25, 0.125]);
        let y = filter_transient(&TransferFunction::identity(), &u).unwrap();
        assert_eq!(y.samples(), u.samples());
    }

    #[test]
    fn freq_response_examples() {
        let h = freq_response(&TransferFunction::identity(), &[0.0, 0.1, 0.5]).unwrap();
        assert!(h.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let h = freq_response(&tf(&[1.0], &[1.0, -0.5]), &[0.0, 0.5]).unwrap();
        assert!((h[0] - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((h[1] - Complex64::new(1.0 / 1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pole_on_unit_circle_is_singular() {
        let err = freq_response(&tf(&[1.0], &[1.0, -1.0]), &[0.0]).unwrap_err();
        assert!(matches!(err, Error::SingularResponse(_)));
    }

    #[test]
    fn periodic_matches_transient_first_order() {
        let samples: Vec<f64> = (0..64).map(|i| ((i * 37 % 17) as f64 - 8.0) / 5.0).collect();
        let u = Signal::from_samples(samples.clone()).unwrap();
        let h = tf(&[1.0], &[1.0, -0.5]);
        let periodic = filter_periodic(&h, &u).unwrap();
        let long = Signal::from_samples(samples.repeat(20)).unwrap();
        let trans = filter_transient(&h, &long).unwrap();
        let last = &trans.samples()[19 * 64..];
        let rms = (last
            .iter()
            .zip(periodic.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 64.0)
            .sqrt();
        assert!(rms < 1e-8);
    }

    proptest! {
        #[test]
        fn product_response_is_pointwise_product(
            b1 in proptest::collection::vec(-1.0f64..1.0, 1..4),
            b2 in proptest::collection::vec(-1.0f64..1.0, 1..4),
            p1 in -0.9f64..0.9, p2 in -0.9f64..0.9,
            f in 0.0f64..0.5,
        ) {
            prop_assume!(b1[0] != 0.0 && b2[0] != 0.0);
            let h1 = tf(&b1, &[1.0, -p1]);
            let h2 = tf(&b2, &[1.0, -p2]);
            let r1 = freq_response(&h1, &[f]).unwrap()[0];
            let r2 = freq_response(&h2, &[f]).unwrap()[0];
            let r12 = freq_response(&h1.series(&h2), &[f]).unwrap()[0];
            prop_assert!((r12 - r1 * r2).norm() <= 1e-10 * (1.0 + r12.norm()));
        }
    }
}
