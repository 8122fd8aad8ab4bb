//! Discrete-time rational transfer functions in the backward shift `q^-1`.
//!
//! A block is stored as
//!
//! ```text
//!         b0 + b1 q^-1 + ... + b_nb q^-nb
//! H(q) = ---------------------------------
//!         a0 + a1 q^-1 + ... + a_na q^-na
//! ```
//!
//! with `a0` normalized to one. The factored form uses the digital-filter
//! convention `H(q) = k q^-d prod(1 - z_i q^-1) / prod(1 - p_i q^-1)`, so the
//! stability test is `|p_i| < 1`.

mod cheby;
mod filter;
pub mod poly;
mod spectral;

pub use cheby::{cheby1_design, cheby1_zpk, cheby2_design, cheby2_zpk};
pub use filter::{filter_periodic, filter_transient, freq_response};
pub use poly::{RootGroup, CONJ_TOL};
pub use spectral::DftPlan;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use poly::{expand_groups, pair_conjugates, roots, trim_trailing};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfRepr")]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

#[derive(Deserialize)]
struct TfRepr {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<TfRepr> for TransferFunction {
    type Error = Error;
    fn try_from(r: TfRepr) -> Result<Self> {
        TransferFunction::new(r.num, r.den)
    }
}

impl TransferFunction {
    /// Builds a transfer function, trimming trailing zeros and scaling so
    /// that `den[0] == 1`.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        let num = trim_trailing(num);
        let den = trim_trailing(den);
        if num.is_empty() {
            return Err(Error::Degenerate("numerator is empty or all zero".into()));
        }
        let a0 = match den.first() {
            Some(&a0) if a0 != 0.0 => a0,
            _ => return Err(Error::Degenerate("den[0] must be nonzero".into())),
        };
        Ok(Self {
            num: num.iter().map(|b| b / a0).collect(),
            den: den.iter().map(|a| a / a0).collect(),
        })
    }

    pub fn identity() -> Self {
        Self::gain(1.0)
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// Series connection `self * other`.
    pub fn series(&self, other: &TransferFunction) -> TransferFunction {
        TransferFunction {
            num: poly::poly_mul(&self.num, &other.num),
            den: poly::poly_mul(&self.den, &other.den),
        }
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        roots(&self.den)
    }

    /// Largest pole magnitude, zero for an FIR block.
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.poles()?.iter().map(|p| p.norm()).fold(0.0, f64::max))
    }

    pub fn is_stable(&self) -> bool {
        matches!(self.spectral_radius(), Ok(r) if r < 1.0)
    }
}

/// Factored form of a transfer function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleZeroGain {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
    /// Pure delay `q^-d` in front of the factored numerator.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay: usize,
}

fn is_zero(d: &usize) -> bool {
    *d == 0
}

impl PoleZeroGain {
    pub fn new(zeros: Vec<Complex64>, poles: Vec<Complex64>, gain: f64) -> Self {
        Self {
            zeros,
            poles,
            gain,
            delay: 0,
        }
    }

    /// Response at normalized frequency `f`, evaluated from the factors.
    pub fn response_at(&self, f: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f);
        let one = Complex64::new(1.0, 0.0);
        let num = self.zeros.iter().fold(one, |acc, z| acc * (one - z * w));
        let den = self.poles.iter().fold(one, |acc, p| acc * (one - p * w));
        num / den * self.gain * w.powi(self.delay as i32)
    }

    /// Concatenates the roots of two blocks; gains multiply.
    pub fn cascade(&self, other: &PoleZeroGain) -> PoleZeroGain {
        PoleZeroGain {
            zeros: self.zeros.iter().chain(&other.zeros).copied().collect(),
            poles: self.poles.iter().chain(&other.poles).copied().collect(),
            gain: self.gain * other.gain,
            delay: self.delay + other.delay,
        }
    }
}

pub fn tf_from_zpk(zpk: &PoleZeroGain) -> Result<TransferFunction> {
    if !zpk.gain.is_finite() || zpk.gain == 0.0 {
        return Err(Error::InvalidInput(format!("gain must be finite and nonzero, got {}", zpk.gain)));
    }
    let zero_groups = pair_conjugates(&zpk.zeros, CONJ_TOL)?;
    let pole_groups = pair_conjugates(&zpk.poles, CONJ_TOL)?;
    let mut num = vec![0.0; zpk.delay];
    num.extend(expand_groups(&zero_groups).iter().map(|b| b * zpk.gain));
    TransferFunction::new(num, expand_groups(&pole_groups))
}

pub fn zpk_from_tf(tf: &TransferFunction) -> Result<PoleZeroGain> {
    let delay = tf.num.iter().take_while(|&&b| b == 0.0).count();
    let num = &tf.num[delay..];
    if num.is_empty() {
        return Err(Error::Degenerate("numerator is empty".into()));
    }
    let flatten = |groups: Vec<RootGroup>| -> Vec<Complex64> {
        groups.iter().flat_map(|g| g.roots()).collect()
    };
    let zeros = flatten(pair_conjugates(&roots(num)?, CONJ_TOL)?);
    let poles = flatten(pair_conjugates(&roots(&tf.den)?, CONJ_TOL)?);
    Ok(PoleZeroGain {
        zeros,
        poles,
        gain: num[0] / tf.den[0],
        delay,
    })
}

/// One period (or record) of a sampled real signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("signal must have at least one sample".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidInput(format!("invalid sample rate {sample_rate}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Unit sample rate, i.e. frequencies are fractions of `f_s`.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, 1.0)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same sample rate, new samples. Non-finite samples are rejected.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (normalized by `N`).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / self.len() as f64
    }
}
