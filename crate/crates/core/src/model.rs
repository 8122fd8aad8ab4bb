//! Wiener-Hammerstein models, polynomial static nonlinearities and the random
//! Chebyshev system family used by the Monte Carlo study.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{cheby1_zpk, cheby2_zpk, filter_periodic, tf_from_zpk, PoleZeroGain, Signal, TransferFunction};
use crate::seeds;

/// `f(x) = sum_j w_j x^(d_j)` over distinct monomial degrees `d_j >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NlRepr")]
pub struct StaticNonlinearity {
    degrees: Vec<u32>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct NlRepr {
    degrees: Vec<u32>,
    weights: Vec<f64>,
}

impl TryFrom<NlRepr> for StaticNonlinearity {
    type Error = Error;
    fn try_from(r: NlRepr) -> Result<Self> {
        StaticNonlinearity::new(r.degrees, r.weights)
    }
}

impl StaticNonlinearity {
    pub fn new(degrees: Vec<u32>, weights: Vec<f64>) -> Result<Self> {
        validate_degrees(&degrees)?;
        if degrees.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} degrees but {} weights",
                degrees.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("non-finite nonlinearity weight".into()));
        }
        Ok(Self { degrees, weights })
    }

    pub fn identity() -> Self {
        Self {
            degrees: vec![1],
            weights: vec![1.0],
        }
    }

    /// `linear x + w2 x^2 + w3 x^3`.
    pub fn cubic(linear: f64, w2: f64, w3: f64) -> Self {
        Self {
            degrees: vec![1, 2, 3],
            weights: vec![linear, w2, w3],
        }
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.degrees
            .iter()
            .zip(&self.weights)
            .map(|(&d, &w)| w * x.powi(d as i32))
            .sum()
    }

    pub fn is_linear(&self) -> bool {
        self.degrees.iter().zip(&self.weights).all(|(&d, &w)| d == 1 || w == 0.0)
    }
}

pub(crate) fn validate_degrees(degrees: &[u32]) -> Result<()> {
    if degrees.is_empty() {
        return Err(Error::InvalidInput("nonlinearity basis is empty".into()));
    }
    if degrees.contains(&0) {
        return Err(Error::InvalidInput("monomial degrees must be >= 1".into()));
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != degrees.len() {
        return Err(Error::InvalidInput("monomial degrees must be distinct".into()));
    }
    Ok(())
}

pub fn evaluate_nonlinearity(nl: &StaticNonlinearity, x: &Signal) -> Result<Signal> {
    x.with_samples(x.samples().iter().map(|&v| nl.eval(v)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WhRepr")]
pub struct WienerHammersteinModel {
    pub front: TransferFunction,
    pub nonlinearity: StaticNonlinearity,
    pub back: TransferFunction,
}

#[derive(Deserialize)]
struct WhRepr {
    front: TransferFunction,
    nonlinearity: StaticNonlinearity,
    back: TransferFunction,
}

impl TryFrom<WhRepr> for WienerHammersteinModel {
    type Error = Error;
    fn try_from(r: WhRepr) -> Result<Self> {
        WienerHammersteinModel::new(r.front, r.nonlinearity, r.back)
    }
}

impl WienerHammersteinModel {
    /// Both blocks must be stable.
    pub fn new(front: TransferFunction, nonlinearity: StaticNonlinearity, back: TransferFunction) -> Result<Self> {
        for block in [&front, &back] {
            let r = block.spectral_radius()?;
            if r >= 1.0 {
                return Err(Error::Instability(r));
            }
        }
        Ok(Self {
            front,
            nonlinearity,
            back,
        })
    }
}

/// `y = S[f(H[u])]` in periodic steady state for one input period.
pub fn simulate_wh(model: &WienerHammersteinModel, u_period: &Signal) -> Result<Signal> {
    let x = filter_periodic(&model.front, u_period)?;
    let r = evaluate_nonlinearity(&model.nonlinearity, &x)?;
    filter_periodic(&model.back, &r)
}

/// Parameters of the random system family: Chebyshev type 1 front block,
/// Chebyshev type 2 back block of the same order, and a cubic nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemRecipe {
    pub block_order: usize,
    pub cheby1_ripple_db: f64,
    pub cheby2_atten_db: f64,
    /// Cutoff interval as a fraction of the sample rate.
    pub cutoff_range: (f64, f64),
    pub nl_linear_coeff: f64,
    pub nl_coeff_range: (f64, f64),
    pub rng_seed: u64,
}

impl SystemRecipe {
    /// 3 dB ripple front, 50 dB stopband back, cutoffs in
    /// `[0.025, 0.125] f_s`, `f(x) = 3x + w2 x^2 + w3 x^3` with
    /// `w2, w3` in `[-0.25, 0.25]`.
    pub fn standard(block_order: usize, rng_seed: u64) -> Self {
        Self {
            block_order,
            cheby1_ripple_db: 3.0,
            cheby2_atten_db: 50.0,
            cutoff_range: (0.025, 0.125),
            nl_linear_coeff: 3.0,
            nl_coeff_range: (-0.25, 0.25),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.cutoff_range;
        if !(lo > 0.0 && hi < 0.5 && lo <= hi) {
            return Err(Error::InvalidInput(format!("cutoff range ({lo}, {hi}) not inside (0, 0.5)")));
        }
        let (a, b) = self.nl_coeff_range;
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::InvalidInput(format!("bad nonlinearity range ({a}, {b})")));
        }
        Ok(())
    }
}

/// A generated system together with its exact factored blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSystem {
    pub model: WienerHammersteinModel,
    pub front_zpk: PoleZeroGain,
    pub back_zpk: PoleZeroGain,
    pub front_cutoff: f64,
    pub back_cutoff: f64,
}

impl GeneratedSystem {
    /// Poles and zeros of `H S`, the dynamics the allocation search splits.
    pub fn overall_zpk(&self) -> PoleZeroGain {
        self.front_zpk.cascade(&self.back_zpk)
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        // still consume one draw so the stream order is fixed
        let _: f64 = rng.random();
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws a system from `recipe`, seeded by `recipe.rng_seed`.
///
/// Randomness is consumed in the order front cutoff, back cutoff, `w2`, `w3`.
/// Block order 0 yields unity blocks (a static system).
pub fn random_wh_system(recipe: &SystemRecipe) -> Result<GeneratedSystem> {
    random_wh_system_with(recipe, &mut seeds::rng(recipe.rng_seed))
}

pub fn random_wh_system_with<R: Rng>(recipe: &SystemRecipe, rng: &mut R) -> Result<GeneratedSystem> {
    recipe.validate()?;
    let front_cutoff = uniform(rng, recipe.cutoff_range);
    let back_cutoff = uniform(rng, recipe.cutoff_range);
    let w2 = uniform(rng, recipe.nl_coeff_range);
    let w3 = uniform(rng, recipe.nl_coeff_range);

    let (front_zpk, back_zpk) = if recipe.block_order == 0 {
        let unity = PoleZeroGain::new(vec![], vec![], 1.0);
        (unity.clone(), unity)
    } else {
        (
            cheby1_zpk(recipe.block_order, recipe.cheby1_ripple_db, front_cutoff)?,
            cheby2_zpk(recipe.block_order, recipe.cheby2_atten_db, back_cutoff)?,
        )
    };
    let model = WienerHammersteinModel::new(
        tf_from_zpk(&front_zpk)?,
        StaticNonlinearity::cubic(recipe.nl_linear_coeff, w2, w3),
        tf_from_zpk(&back_zpk)?,
    )?;
    Ok(GeneratedSystem {
        model,
        front_zpk,
        back_zpk,
        front_cutoff,
        back_cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::filter_transient;

    fn rms(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    fn test_input(n: usize) -> Signal {
        Signal::from_samples((0..n).map(|i| ((i as f64) * 0.77).sin() + ((i * i) % 7) as f64 / 7.0 - 0.5).collect()).unwrap()
    }

    #[test]
    fn nonlinearity_examples() {
        let x = Signal::from_samples(vec![-2.0, 0.5, 1.0]).unwrap();
        let id = evaluate_nonlinearity(&StaticNonlinearity::identity(), &x).unwrap();
        assert_eq!(id.samples(), x.samples());
        let nl = StaticNonlinearity::cubic(3.0, 0.1, -0.2);
        assert!((nl.eval(1.0) - 2.9).abs() < 1e-15);
    }

    #[test]
    fn nonlinearity_validation() {
        assert!(StaticNonlinearity::new(vec![], vec![]).is_err());
        assert!(StaticNonlinearity::new(vec![0], vec![1.0]).is_err());
        assert!(StaticNonlinearity::new(vec![1, 1], vec![1.0, 2.0]).is_err());
        assert!(StaticNonlinearity::new(vec![1, 2], vec![1.0]).is_err());
        assert!(StaticNonlinearity::new(vec![1], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn identity_model_passes_input() {
        let m = WienerHammersteinModel::new(
            TransferFunction::identity(),
            StaticNonlinearity::identity(),
            TransferFunction::identity(),
        )
        .unwrap();
        let u = test_input(32);
        let y = simulate_wh(&m, &u).unwrap();
        assert!(rms(y.samples(), u.samples()) < 1e-14);
    }

    #[test]
    fn linear_model_collapses_to_product() {
        let h = TransferFunction::new(vec![1.0, 0.3], vec![1.0, -0.6]).unwrap();
        let s = TransferFunction::new(vec![0.5], vec![1.0, -0.2, 0.1]).unwrap();
        let m = WienerHammersteinModel::new(
            h.clone(),
            StaticNonlinearity::new(vec![1], vec![3.0]).unwrap(),
            s.clone(),
        )
        .unwrap();
        let u = test_input(128);
        let y = simulate_wh(&m, &u).unwrap();
        let direct = filter_periodic(&s.series(&h), &u).unwrap();
        let scaled: Vec<f64> = direct.samples().iter().map(|v| 3.0 * v).collect();
        assert!(rms(y.samples(), &scaled) < 1e-10);
    }

    #[test]
    fn cubic_model_matches_transient_oracle() {
        let sys = random_wh_system(&SystemRecipe::standard(3, 7)).unwrap();
        let n = 256;
        let u = test_input(n);
        let y = simulate_wh(&sys.model, &u).unwrap();
        let long = Signal::from_samples(u.samples().repeat(20)).unwrap();
        let x = filter_transient(&sys.model.front, &long).unwrap();
        let r = evaluate_nonlinearity(&sys.model.nonlinearity, &x).unwrap();
        let yt = filter_transient(&sys.model.back, &r).unwrap();
        let last = &yt.samples()[19 * n..];
        assert!(rms(last, y.samples()) < 1e-8 * rms(y.samples(), &vec![0.0; n]).max(1.0));
    }

    #[test]
    fn generator_is_deterministic_and_in_range() {
        let a = random_wh_system(&SystemRecipe::standard(5, 11)).unwrap();
        let b = random_wh_system(&SystemRecipe::standard(5, 11)).unwrap();
        assert_eq!(a, b);
        for seed in 0..100 {
            let s = random_wh_system(&SystemRecipe::standard(5, seed)).unwrap();
            assert!((0.025..=0.125).contains(&s.front_cutoff));
            assert!((0.025..=0.125).contains(&s.back_cutoff));
            assert!(s.model.front.is_stable() && s.model.back.is_stable());
            let w = s.model.nonlinearity.weights();
            assert_eq!(w[0], 3.0);
            assert!(w[1].abs() <= 0.25 && w[2].abs() <= 0.25);
        }
    }

    #[test]
    fn order_zero_is_static() {
        let s = random_wh_system(&SystemRecipe::standard(0, 3)).unwrap();
        assert!(s.overall_zpk().poles.is_empty());
        assert_eq!(s.model.front, TransferFunction::identity());
    }

    #[test]
    fn model_json_shape() {
        let m = WienerHammersteinModel::new(
            TransferFunction::identity(),
            StaticNonlinearity::cubic(3.0, 0.5, -0.25),
            TransferFunction::new(vec![1.0], vec![1.0, -0.5]).unwrap(),
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            r#"{"front":{"num":[1.0],"den":[1.0]},"nonlinearity":{"degrees":[1,2,3],"weights":[3.0,0.5,-0.25]},"back":{"num":[1.0],"den":[1.0,-0.5]}}"#
        );
        let unstable = r#"{"front":{"num":[1.0],"den":[1.0,-2.0]},"nonlinearity":{"degrees":[1],"weights":[1.0]},"back":{"num":[1.0],"den":[1.0]}}"#;
        assert!(serde_json::from_str::<WienerHammersteinModel>(unstable).is_err());
    }
}
