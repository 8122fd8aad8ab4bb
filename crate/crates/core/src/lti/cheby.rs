//! Chebyshev low-pass designs: analog prototype, frequency scaling with a
//! prewarped cutoff, then the bilinear transform, all in factored form.
//!
//! Cutoffs are normalized frequencies in cycles per sample (`0 < f < 0.5`).
//! For type 1 the cutoff is the passband edge, where the gain is exactly
//! `-ripple` dB; for type 2 it is the stopband edge, where the gain first
//! reaches `-attenuation` dB.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{tf_from_zpk, PoleZeroGain, TransferFunction};
use crate::error::{Error, Result};

const MAX_ORDER: usize = 20;

/// Analog roots as upper-half-plane representatives plus real roots.
struct AnalogZpk {
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    gain: f64,
}

fn validate(order: usize, level_db: f64, cutoff: f64, what: &str) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::Design(format!("order {order} outside [1, {MAX_ORDER}]")));
    }
    if !(level_db.is_finite() && level_db > 0.0) {
        return Err(Error::Design(format!("{what} must be positive, got {level_db}")));
    }
    if !(cutoff.is_finite() && cutoff > 0.0 && cutoff < 0.5) {
        return Err(Error::Design(format!("cutoff {cutoff} outside (0, 0.5)")));
    }
    Ok(())
}

fn with_conjugates(upper: Vec<Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * upper.len());
    for r in upper {
        if r.im == 0.0 {
            out.push(r);
        } else {
            out.push(r);
            out.push(r.conj());
        }
    }
    out
}

fn cheb1_prototype(order: usize, ripple_db: f64) -> AnalogZpk {
    let n = order as f64;
    let eps = (10f64.powf(0.1 * ripple_db) - 1.0).sqrt();
    let mu = (1.0 / eps).asinh() / n;
    // theta_m = pi m / 2n over m = -n+1, -n+3, ..., n-1; take m <= 0 so the
    // representative has im >= 0.
    let upper: Vec<Complex64> = (0..order.div_ceil(2))
        .map(|i| {
            let m = -(n - 1.0) + 2.0 * i as f64;
            if m == 0.0 {
                return Complex64::new(-mu.sinh(), 0.0);
            }
            let theta = PI * m / (2.0 * n);
            -Complex64::new(mu, theta).sinh()
        })
        .collect();
    let poles = with_conjugates(upper);
    let mut gain = poles.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * (-p)).re;
    if order % 2 == 0 {
        gain /= (1.0 + eps * eps).sqrt();
    }
    AnalogZpk {
        zeros: Vec::new(),
        poles,
        gain,
    }
}

fn cheb2_prototype(order: usize, atten_db: f64) -> AnalogZpk {
    let n = order as f64;
    let de = 1.0 / (10f64.powf(0.1 * atten_db) - 1.0).sqrt();
    let mu = (1.0 / de).asinh() / n;

    // Zeros j / sin(pi m / 2n) for odd-symmetric m, skipping m = 0.
    let zeros_upper: Vec<Complex64> = (0..order / 2)
        .map(|i| {
            let m = (n - 1.0) - 2.0 * i as f64;
            Complex64::new(0.0, 1.0 / (PI * m / (2.0 * n)).sin())
        })
        .collect();

    let poles_upper: Vec<Complex64> = (0..order.div_ceil(2))
        .map(|i| {
            let m = (n - 1.0) - 2.0 * i as f64;
            let p0 = -Complex64::from_polar(1.0, PI * m / (2.0 * n));
            let p = Complex64::new(mu.sinh() * p0.re, mu.cosh() * p0.im);
            let inv = 1.0 / p;
            if m == 0.0 {
                Complex64::new(inv.re, 0.0)
            } else {
                // representative with im >= 0
                if inv.im < 0.0 { inv.conj() } else { inv }
            }
        })
        .collect();

    let zeros = with_conjugates(zeros_upper);
    let poles = with_conjugates(poles_upper);
    let num = zeros.iter().fold(Complex64::new(1.0, 0.0), |acc, z| acc * (-z));
    let den = poles.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * (-p));
    AnalogZpk {
        zeros,
        poles,
        gain: (den / num).re,
    }
}

/// Low-pass scaling to `omega`, then bilinear transform `s = 2 (z-1)/(z+1)`.
fn to_digital(proto: AnalogZpk, cutoff: f64) -> PoleZeroGain {
    const FS2: f64 = 2.0;
    let omega = FS2 * (PI * cutoff).tan();
    let degree = proto.poles.len() - proto.zeros.len();
    let map = |s: Complex64| (FS2 + s) / (FS2 - s);
    let scaled_z: Vec<Complex64> = proto.zeros.iter().map(|z| z * omega).collect();
    let scaled_p: Vec<Complex64> = proto.poles.iter().map(|p| p * omega).collect();
    let gain_a = proto.gain * omega.powi(degree as i32);

    let num = scaled_z.iter().fold(Complex64::new(1.0, 0.0), |acc, z| acc * (FS2 - z));
    let den = scaled_p.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * (FS2 - p));
    let gain = gain_a * (num / den).re;

    // Map each pair once and conjugate, so the digital roots stay exactly
    // conjugate-closed.
    let map_closed = |roots: &[Complex64]| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(roots.len());
        let mut i = 0;
        while i < roots.len() {
            let r = roots[i];
            if r.im == 0.0 {
                out.push(Complex64::new(map(r).re, 0.0));
                i += 1;
            } else {
                let d = map(r);
                out.push(d);
                out.push(d.conj());
                i += 2;
            }
        }
        out
    };
    let mut zeros = map_closed(&scaled_z);
    zeros.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), degree));
    let poles = map_closed(&scaled_p);
    PoleZeroGain::new(zeros, poles, gain)
}

/// Chebyshev type 1 low-pass in factored form.
pub fn cheby1_zpk(order: usize, passband_ripple_db: f64, cutoff: f64) -> Result<PoleZeroGain> {
    validate(order, passband_ripple_db, cutoff, "passband ripple")?;
    Ok(to_digital(cheb1_prototype(order, passband_ripple_db), cutoff))
}

/// Chebyshev type 2 low-pass in factored form.
pub fn cheby2_zpk(order: usize, stopband_atten_db: f64, cutoff: f64) -> Result<PoleZeroGain> {
    validate(order, stopband_atten_db, cutoff, "stopband attenuation")?;
    Ok(to_digital(cheb2_prototype(order, stopband_atten_db), cutoff))
}

pub fn cheby1_design(order: usize, passband_ripple_db: f64, cutoff: f64) -> Result<TransferFunction> {
    tf_from_zpk(&cheby1_zpk(order, passband_ripple_db, cutoff)?)
}

pub fn cheby2_design(order: usize, stopband_atten_db: f64, cutoff: f64) -> Result<TransferFunction> {
    tf_from_zpk(&cheby2_zpk(order, stopband_atten_db, cutoff)?)
}
