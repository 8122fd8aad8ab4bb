//! Pole/zero grouping, front/back splits and the allocation cost.
//!
//! Each real pole/zero or conjugate pair of the overall dynamics is one group.
//! An [`AllocationVector`] holds one bit per group: `1` puts the group in the
//! front block `H`, `0` in the back block `S`. Both split blocks are built
//! with unit gain; the overall gain is absorbed into the least-squares
//! weights of the static nonlinearity.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::poly::pair_conjugates;
use crate::lti::{filter_periodic, tf_from_zpk, DftPlan, PoleZeroGain, RootGroup, Signal, TransferFunction};
use crate::model::{validate_degrees, StaticNonlinearity, WienerHammersteinModel};

/// Two costs within this relative distance are treated as a tie.
pub const TIE_REL_TOL: f64 = 1e-14;

/// Regressor matrices with a singular-value ratio beyond this are treated as
/// rank deficient.
pub const RANK_COND_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct PoleZeroGroups {
    pole_groups: Vec<RootGroup>,
    zero_groups: Vec<RootGroup>,
    source_gain: f64,
    delay: usize,
}

fn sort_groups(groups: &mut [RootGroup]) {
    groups.sort_by(|a, b| {
        a.magnitude()
            .total_cmp(&b.magnitude())
            .then(a.angle().total_cmp(&b.angle()))
            .then_with(|| {
                let (ra, rb) = (a.roots()[0], b.roots()[0]);
                ra.re.total_cmp(&rb.re).then(ra.im.total_cmp(&rb.im))
            })
    });
}

/// Groups roots into real singletons and conjugate pairs, ordered by
/// magnitude then angle. Poles come first in the allocation bit order.
pub fn group_conjugates(zpk: &PoleZeroGain, conj_tol: f64) -> Result<PoleZeroGroups> {
    let mut pole_groups = pair_conjugates(&zpk.poles, conj_tol)?;
    let mut zero_groups = pair_conjugates(&zpk.zeros, conj_tol)?;
    sort_groups(&mut pole_groups);
    sort_groups(&mut zero_groups);
    Ok(PoleZeroGroups {
        pole_groups,
        zero_groups,
        source_gain: zpk.gain,
        delay: zpk.delay,
    })
}

impl PoleZeroGroups {
    pub fn pole_groups(&self) -> &[RootGroup] {
        &self.pole_groups
    }

    pub fn zero_groups(&self) -> &[RootGroup] {
        &self.zero_groups
    }

    pub fn source_gain(&self) -> f64 {
        self.source_gain
    }

    /// Number of groups, i.e. the allocation bit length.
    pub fn len(&self) -> usize {
        self.pole_groups.len() + self.zero_groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_poles(&self) -> usize {
        self.pole_groups.iter().map(RootGroup::len).sum()
    }

    pub fn num_zeros(&self) -> usize {
        self.zero_groups.iter().map(RootGroup::len).sum()
    }

    /// Number of distinct allocations, `2^len`.
    pub fn combinations(&self) -> u128 {
        1u128 << self.len()
    }

    pub fn is_stable(&self) -> bool {
        self.pole_groups.iter().all(|g| g.magnitude() < 1.0)
    }

    /// Group at bit position `i`: `(is_pole, group)`.
    pub fn group(&self, i: usize) -> (bool, RootGroup) {
        if i < self.pole_groups.len() {
            (true, self.pole_groups[i])
        } else {
            (false, self.zero_groups[i - self.pole_groups.len()])
        }
    }

    /// One human-readable label per bit, in bit order.
    pub fn labels(&self) -> Vec<String> {
        (0..self.len())
            .map(|i| {
                let (is_pole, g) = self.group(i);
                let kind = if is_pole { "pole" } else { "zero" };
                match g {
                    RootGroup::Real(r) => format!("{kind} {r}"),
                    RootGroup::Pair(p) => format!("{kind} pair {}±{}i", p.re, p.im),
                }
            })
            .collect()
    }
}

/// One bit per group; `true` assigns the group to the front block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AllocationVector(Vec<bool>);

impl AllocationVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn all(len: usize, value: bool) -> Self {
        Self(vec![value; len])
    }

    /// The `index`-th vector of length `len` in lexicographic order; bit 0 is
    /// the most significant.
    pub fn from_index(index: u64, len: usize) -> Self {
        Self((0..len).map(|i| (index >> (len - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }
}

impl fmt::Display for AllocationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for AllocationVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("allocation bit must be 0 or 1, got {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for AllocationVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AllocationVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `a` ranks before `b`: lower cost, or a tie within [`TIE_REL_TOL`] broken
/// by the lexicographically smaller bit vector.
pub fn ranks_before(a: (&AllocationVector, f64), b: (&AllocationVector, f64)) -> bool {
    let (ca, cb) = (a.1, b.1);
    if ca.is_nan() || cb.is_nan() {
        return !ca.is_nan() || (cb.is_nan() && a.0 < b.0);
    }
    if (ca - cb).abs() <= TIE_REL_TOL * ca.abs().max(cb.abs()) {
        a.0 < b.0
    } else {
        ca < cb
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub degrees: Vec<u32>,
    pub weights: Vec<f64>,
    /// Mean squared output error `(1/N) sum (y - y_hat)^2`.
    pub mse: f64,
    pub front: TransferFunction,
    pub back: TransferFunction,
    /// Ratio of extreme singular values of the column-scaled regressor
    /// matrix; infinite when rank deficient.
    pub condition_estimate: f64,
}

impl FitResult {
    pub fn model(&self) -> Result<WienerHammersteinModel> {
        WienerHammersteinModel::new(
            self.front.clone(),
            StaticNonlinearity::new(self.degrees.clone(), self.weights.clone())?,
            self.back.clone(),
        )
    }

    /// Weights re-expressed for blocks `g_front * front` and
    /// `g_back * back`: `w_j / (g_back * g_front^d_j)`.
    pub fn weights_for_block_gains(&self, g_front: f64, g_back: f64) -> Vec<f64> {
        self.degrees
            .iter()
            .zip(&self.weights)
            .map(|(&d, &w)| w / (g_back * g_front.powi(d as i32)))
            .collect()
    }
}

/// Front block gets the groups with bit 1 (and any pure delay), back block the
/// rest; both with unit gain.
pub fn build_split(groups: &PoleZeroGroups, alloc: &AllocationVector) -> Result<(TransferFunction, TransferFunction)> {
    if alloc.len() != groups.len() {
        return Err(Error::InvalidInput(format!(
            "allocation has {} bits for {} groups",
            alloc.len(),
            groups.len()
        )));
    }
    let mut front = PoleZeroGain::new(vec![], vec![], 1.0);
    front.delay = groups.delay;
    let mut back = PoleZeroGain::new(vec![], vec![], 1.0);
    for (i, &bit) in alloc.bits().iter().enumerate() {
        let (is_pole, g) = groups.group(i);
        let target = if bit { &mut front } else { &mut back };
        if is_pole {
            target.poles.extend(g.roots());
        } else {
            target.zeros.extend(g.roots());
        }
    }
    Ok((tf_from_zpk(&front)?, tf_from_zpk(&back)?))
}

struct Regression {
    weights: Vec<f64>,
    mse: f64,
    condition: f64,
}

/// Least squares `min ||y - Phi w||` with unit-RMS column scaling, solved via
/// QR of `Phi` and an SVD of the small triangular factor.
fn solve_regression(columns: &[Vec<f64>], y: &[f64]) -> Regression {
    let n = y.len();
    let p = columns.len();
    let scales: Vec<f64> = columns
        .iter()
        .map(|c| {
            let rms = (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            if rms > 0.0 && rms.is_finite() { rms } else { 1.0 }
        })
        .collect();
    let phi = DMatrix::from_fn(n, p, |i, j| columns[j][i] / scales[j]);
    let qr = phi.clone().qr();
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let r = qr.r();
    let rhs = qty.rows(0, p).into_owned();
    let svd = r.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rank_deficient = !(smin > smax / RANK_COND_LIMIT) || !smax.is_finite();
    let condition = if rank_deficient { f64::INFINITY } else { smax / smin };
    let scaled = svd
        .solve(&rhs, smax / RANK_COND_LIMIT)
        .unwrap_or_else(|_| DVector::zeros(p));
    let fitted = &phi * &scaled;
    let mse = y
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / n as f64;
    Regression {
        weights: scaled.iter().zip(&scales).map(|(w, s)| w / s).collect(),
        mse,
        condition,
    }
}

fn check_data(u: &Signal, y: &Signal, degrees: &[u32]) -> Result<()> {
    validate_degrees(degrees)?;
    if u.len() != y.len() {
        return Err(Error::InvalidInput(format!("u has {} samples, y has {}", u.len(), y.len())));
    }
    if u.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 samples per period".into()));
    }
    Ok(())
}

/// Least-squares fit of the static nonlinearity for fixed front/back blocks.
///
/// Regressor `j` is `back[(front[u])^(d_j)]` in periodic steady state.
pub fn estimate_nonlinearity(
    front: &TransferFunction,
    back: &TransferFunction,
    u: &Signal,
    y: &Signal,
    degrees: &[u32],
) -> Result<FitResult> {
    check_data(u, y, degrees)?;
    let x = filter_periodic(front, u)?;
    let columns = degrees
        .iter()
        .map(|&d| {
            let xd = x.with_samples(x.samples().iter().map(|v| v.powi(d as i32)).collect())?;
            Ok(filter_periodic(back, &xd)?.into_samples())
        })
        .collect::<Result<Vec<_>>>()?;
    let reg = solve_regression(&columns, y.samples());
    Ok(FitResult {
        degrees: degrees.to_vec(),
        weights: reg.weights,
        mse: reg.mse,
        front: front.clone(),
        back: back.clone(),
        condition_estimate: reg.condition,
    })
}

/// Reference composition `build_split -> estimate_nonlinearity -> mse`.
///
/// Scans should use [`AllocationProblem`], which evaluates the same cost
/// with precomputed spectra.
pub fn allocation_cost(
    groups: &PoleZeroGroups,
    alloc: &AllocationVector,
    u: &Signal,
    y: &Signal,
    degrees: &[u32],
) -> Result<f64> {
    let (front, back) = build_split(groups, alloc)?;
    Ok(estimate_nonlinearity(&front, &back, u, y, degrees)?.mse)
}

/// The allocation cost for one dataset, with the input spectrum and every
/// group's response on the DFT grid computed once.
pub struct AllocationProblem {
    groups: PoleZeroGroups,
    degrees: Vec<u32>,
    plan: DftPlan,
    u_spectrum: Vec<Complex64>,
    y: Vec<f64>,
    /// Per-group multiplier on bins `0..=N/2`: `factor` for zeros,
    /// `1/factor` for poles.
    group_half: Vec<Vec<Complex64>>,
    delay_half: Vec<Complex64>,
}

impl fmt::Debug for AllocationProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AllocationProblem")
            .field("groups", &self.groups)
            .field("degrees", &self.degrees)
            .field("n", &self.y.len())
            .finish()
    }
}

impl AllocationProblem {
    pub fn new(groups: PoleZeroGroups, u: &Signal, y: &Signal, degrees: &[u32]) -> Result<Self> {
        check_data(u, y, degrees)?;
        if let Some(g) = groups.pole_groups.iter().find(|g| g.magnitude() >= 1.0) {
            return Err(Error::Instability(g.magnitude()));
        }
        let n = u.len();
        let plan = DftPlan::new(n);
        let grid = plan.grid();
        let half = &grid[..n / 2 + 1];
        let group_half = (0..groups.len())
            .map(|i| {
                let (is_pole, g) = groups.group(i);
                half.iter()
                    .map(|&w| {
                        let v = g.factor_at(w);
                        if is_pole { 1.0 / v } else { v }
                    })
                    .collect()
            })
            .collect();
        let delay_half = half.iter().map(|w| w.powi(groups.delay as i32)).collect();
        Ok(Self {
            u_spectrum: plan.forward(u.samples()),
            y: y.samples().to_vec(),
            degrees: degrees.to_vec(),
            groups,
            plan,
            group_half,
            delay_half,
        })
    }

    pub fn groups(&self) -> &PoleZeroGroups {
        &self.groups
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Full-grid responses of the front and back blocks for `bits`.
    fn split_responses(&self, bits: &[bool]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.y.len();
        let mut front = self.delay_half.clone();
        let mut back = vec![Complex64::new(1.0, 0.0); front.len()];
        for (g, &bit) in self.group_half.iter().zip(bits) {
            let target = if bit { &mut front } else { &mut back };
            for (t, v) in target.iter_mut().zip(g) {
                *t *= v;
            }
        }
        (mirror(front, n), mirror(back, n))
    }

    fn regress(&self, bits: &[bool]) -> Regression {
        let (front, back) = self.split_responses(bits);
        let x_spec: Vec<Complex64> = self.u_spectrum.iter().zip(&front).map(|(u, h)| u * h).collect();
        let filtered = |spec: &[Complex64]| -> Vec<Complex64> { spec.iter().zip(&back).map(|(s, h)| s * h).collect() };

        // Real transforms are done two at a time, packed as re/im parts.
        let mut columns: Vec<Option<Vec<f64>>> = vec![None; self.degrees.len()];
        let x = match self.degrees.iter().position(|&d| d == 1) {
            Some(j) => {
                let (x, col) = self.plan.inverse_real_pair(&x_spec, &filtered(&x_spec));
                columns[j] = Some(col);
                x
            }
            None => self.plan.inverse_real(x_spec),
        };
        let pending: Vec<usize> = (0..self.degrees.len()).filter(|&j| columns[j].is_none()).collect();
        for pair in pending.chunks(2) {
            let power = |j: usize| -> Vec<f64> { x.iter().map(|&v| ipow(v, self.degrees[j])).collect() };
            match *pair {
                [a, b] => {
                    let (sa, sb) = self.plan.forward_pair(&power(a), &power(b));
                    let (ca, cb) = self.plan.inverse_real_pair(&filtered(&sa), &filtered(&sb));
                    columns[a] = Some(ca);
                    columns[b] = Some(cb);
                }
                [a] => columns[a] = Some(self.plan.filter(&power(a), &back)),
                _ => unreachable!(),
            }
        }
        let columns: Vec<Vec<f64>> = columns.into_iter().map(|c| c.expect("every column filled")).collect();
        solve_regression(&columns, &self.y)
    }

    /// Mean squared error of the best nonlinearity for this allocation;
    /// `+inf` if the fit is not finite.
    pub fn cost(&self, bits: &[bool]) -> f64 {
        assert_eq!(bits.len(), self.groups.len(), "allocation length mismatch");
        let mse = self.regress(bits).mse;
        if mse.is_finite() { mse } else { f64::INFINITY }
    }

    pub fn fit(&self, alloc: &AllocationVector) -> Result<FitResult> {
        let (front, back) = build_split(&self.groups, alloc)?;
        let reg = self.regress(alloc.bits());
        Ok(FitResult {
            degrees: self.degrees.clone(),
            weights: reg.weights,
            mse: reg.mse,
            front,
            back,
            condition_estimate: reg.condition,
        })
    }
}

fn ipow(x: f64, d: u32) -> f64 {
    match d {
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(d as i32),
    }
}

/// Extends bins `0..=N/2` of a real signal's spectrum to all `N` bins.
fn mirror(mut half: Vec<Complex64>, n: usize) -> Vec<Complex64> {
    half.reserve(n - half.len());
    for k in (n / 2 + 1)..n {
        let v = half[n - k].conj();
        half.push(v);
    }
    half
}
