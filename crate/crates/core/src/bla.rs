//! Best Linear Approximation front end: periodic Gaussian excitation,
//! nonparametric FRF estimation and rational fitting.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::poly::{expand_groups, pair_conjugates, poly_eval};
use crate::lti::{DftPlan, Signal, TransferFunction, CONJ_TOL};

/// One period of zero-mean Gaussian noise whose population standard
/// deviation is exactly `std`.
pub fn generate_periodic_gaussian<R: Rng>(n: usize, std: f64, rng: &mut R) -> Result<Signal> {
    if n < 2 {
        return Err(Error::InvalidInput("period length must be at least 2".into()));
    }
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::InvalidInput(format!("standard deviation must be positive, got {std}")));
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let sd = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= std / sd);
    Signal::from_samples(x)
}

/// Averaged FRF on DFT bins `0..=N/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrfEstimate {
    /// Bin frequencies in cycles per sample.
    pub frequencies: Vec<f64>,
    pub response: Vec<Complex64>,
    /// Variance of the averaged response (sample variance across
    /// realizations divided by their count); zero with a single realization.
    pub sample_variance: Vec<f64>,
    pub realizations: usize,
    /// `false` where every realization had a zero input bin; such bins are
    /// excluded from fitting.
    pub valid: Vec<bool>,
}

/// Per-bin mean of `Y_i / U_i` over realizations.
pub fn estimate_frf(u_realizations: &[Signal], y_realizations: &[Signal]) -> Result<FrfEstimate> {
    if u_realizations.is_empty() || u_realizations.len() != y_realizations.len() {
        return Err(Error::InvalidInput(format!(
            "need matching, nonempty realization lists ({} inputs, {} outputs)",
            u_realizations.len(),
            y_realizations.len()
        )));
    }
    let n = u_realizations[0].len();
    if n < 2 || u_realizations.iter().chain(y_realizations).any(|s| s.len() != n) {
        return Err(Error::InvalidInput("all realizations must share one length >= 2".into()));
    }
    let plan = DftPlan::new(n);
    let bins = n / 2 + 1;
    let mut per_bin: Vec<Vec<Complex64>> = vec![Vec::new(); bins];
    for (u, y) in u_realizations.iter().zip(y_realizations) {
        let us = plan.forward(u.samples());
        let ys = plan.forward(y.samples());
        let level = (us.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64).sqrt();
        for k in 0..bins {
            if us[k].norm() > 1e-10 * level {
                per_bin[k].push(ys[k] / us[k]);
            }
        }
    }
    let mut response = Vec::with_capacity(bins);
    let mut variance = Vec::with_capacity(bins);
    let mut valid = Vec::with_capacity(bins);
    for g in &per_bin {
        if g.is_empty() {
            response.push(Complex64::new(0.0, 0.0));
            variance.push(0.0);
            valid.push(false);
            continue;
        }
        let m = g.len() as f64;
        let mean = g.iter().sum::<Complex64>() / m;
        let var = if g.len() > 1 {
            g.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (m - 1.0) / m
        } else {
            0.0
        };
        response.push(mean);
        variance.push(var);
        valid.push(true);
    }
    if !valid.iter().any(|&v| v) {
        return Err(Error::SingularResponse(0.0));
    }
    Ok(FrfEstimate {
        frequencies: (0..bins).map(|k| k as f64 / n as f64).collect(),
        response,
        sample_variance: variance,
        realizations: u_realizations.len(),
        valid,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalFit {
    pub model: TransferFunction,
    /// Poles found outside the unit circle and reflected inside.
    pub reflected_poles: usize,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 20;
const STEP_TOL: f64 = 1e-8;

/// Fits `B(q^-1)/A(q^-1)` with `deg B = num_order`, `deg A = den_order`.
///
/// Linearized equation error `B - G A`, reweighted by `1/|A_prev|` each
/// iteration until the parameter step drops below `1e-8` (relative) or 20
/// iterations have run.
pub fn fit_rational(frf: &FrfEstimate, num_order: usize, den_order: usize) -> Result<RationalFit> {
    let noise_weights = noise_weights(frf);
    let data: Vec<(Complex64, Complex64, f64)> = (0..frf.frequencies.len())
        .filter(|&k| frf.valid[k])
        .map(|k| (Complex64::from_polar(1.0, -2.0 * PI * frf.frequencies[k]), frf.response[k], noise_weights[k]))
        .collect();
    let unknowns = num_order + 1 + den_order;
    if data.len() < unknowns {
        return Err(Error::InvalidInput(format!(
            "{} usable bins for {unknowns} parameters",
            data.len()
        )));
    }

    let mut den = vec![1.0];
    den.extend(std::iter::repeat_n(0.0, den_order));
    let mut theta_prev: Option<DVector<f64>> = None;
    let mut iterations = 0;
    let mut num = vec![0.0; num_order + 1];
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let rows = 2 * data.len();
        let mut a = DMatrix::<f64>::zeros(rows, unknowns);
        let mut b = DVector::<f64>::zeros(rows);
        for (r, &(w, g, nw)) in data.iter().enumerate() {
            let weight = nw / poly_eval(&den, w).norm();
            let mut wp = Complex64::new(weight, 0.0);
            let mut entries = Vec::with_capacity(unknowns);
            let mut powers = Vec::with_capacity(unknowns);
            for _ in 0..=num_order.max(den_order) {
                powers.push(wp);
                wp *= w;
            }
            entries.extend(powers.iter().take(num_order + 1).copied());
            entries.extend(powers.iter().skip(1).take(den_order).map(|p| -g * p));
            for (c, e) in entries.iter().enumerate() {
                a[(2 * r, c)] = e.re;
                a[(2 * r + 1, c)] = e.im;
            }
            let rhs = g * weight;
            b[2 * r] = rhs.re;
            b[2 * r + 1] = rhs.im;
        }
        let theta = solve_scaled(a, &b)?;
        num = theta.rows(0, num_order + 1).iter().copied().collect();
        for i in 0..den_order {
            den[i + 1] = theta[num_order + 1 + i];
        }
        let converged = theta_prev
            .as_ref()
            .is_some_and(|p| (&theta - p).norm() <= STEP_TOL * theta.norm().max(1.0));
        theta_prev = Some(theta);
        if converged || den_order == 0 {
            break;
        }
    }

    let fitted = TransferFunction::new(num, den)?;
    let (model, reflected_poles) = stabilize(fitted)?;
    Ok(RationalFit {
        model,
        reflected_poles,
        iterations,
    })
}

/// `1/sigma_k` per bin, normalized to a median of one. Bins with variance
/// below `1e-6` times the median are capped there. Uniform when the estimate
/// carries no usable variance.
fn noise_weights(frf: &FrfEstimate) -> Vec<f64> {
    let mut v: Vec<f64> = (0..frf.frequencies.len())
        .filter(|&k| frf.valid[k] && frf.sample_variance[k].is_finite())
        .map(|k| frf.sample_variance[k])
        .collect();
    v.sort_by(f64::total_cmp);
    let median = if v.is_empty() { 0.0 } else { v[v.len() / 2] };
    if frf.realizations < 2 || !(median > 0.0) {
        return vec![1.0; frf.frequencies.len()];
    }
    frf.sample_variance
        .iter()
        .map(|&s| (median / s.max(1e-6 * median)).sqrt())
        .collect()
}

fn solve_scaled(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let scales: Vec<f64> = a
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 { n } else { 1.0 }
        })
        .collect();
    let mut scaled = a;
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::FitDegenerate(format!(
            "singular value ratio {:e}",
            smin / smax
        )));
    }
    let x = svd
        .solve(b, 0.0)
        .map_err(|e| Error::FitDegenerate(e.to_string()))?;
    Ok(DVector::from_iterator(
        x.len(),
        x.iter().zip(&scales).map(|(v, s)| v / s),
    ))
}

/// Reflects poles with `|p| > 1` to `1/conj(p)`, scaling the numerator so the
/// magnitude response is unchanged.
fn stabilize(tf: TransferFunction) -> Result<(TransferFunction, usize)> {
    let poles = tf.poles()?;
    let outside = poles.iter().filter(|p| p.norm() > 1.0).count();
    if outside == 0 {
        return Ok((tf, 0));
    }
    let mut scale = 1.0;
    let reflected: Vec<Complex64> = poles
        .iter()
        .map(|&p| {
            if p.norm() > 1.0 {
                scale *= p.norm();
                1.0 / p.conj()
            } else {
                p
            }
        })
        .collect();
    let den = expand_groups(&pair_conjugates(&reflected, CONJ_TOL)?);
    let num = tf.num().iter().map(|b| b / scale).collect();
    Ok((TransferFunction::new(num, den)?, outside))
}
