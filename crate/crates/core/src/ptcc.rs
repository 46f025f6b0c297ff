//! Partial tail covariance, partial tail correlation (PTCC) and the
//! separation test built on them.
//!
//! For a pair `(i, j)` and conditioning set `S` the partial tail covariance is
//! the Schur complement `Σ_{ij|S} = Σ_{ij,ij} − Σ_{ij,S} Σ_{S,S}⁻¹ Σ_{S,ij}`,
//! and the PTCC `γ_{ij|S}` is its normalized off-diagonal entry.
//!
//! The sample version removes the transformed-linear prediction from `S`,
//!
//! ```text
//! ε = t⁻¹(X_ij) − Σ̂_{ij,S} Σ̂_{S,S}⁻¹ t⁻¹(X_S)
//! ```
//!
//! and re-applies the radial-threshold estimator to the residual pairs `ε_l`.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::linalg::submatrix;
use crate::tla::{softplus_inv_unchecked, StandardizedMatrix};
use crate::tpdm::{estimate_tpdm, tail_moments, Tpdm};
use crate::{Error, Result};

/// `|γ̂|` is kept strictly inside this bound before forming the t statistic.
const GAMMA_CLAMP: f64 = 1.0 - 1e-12;

/// Schur complement of a TPDM and its normalized off-diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialTailResult {
    pub partial_cov: Matrix2<f64>,
    pub gamma: f64,
}

/// Outcome of testing `H₀: σ_{ij|S} = 0` on data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationTestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Residual exceedances `N′`.
    pub exceedances: usize,
    pub cond_size: usize,
    pub reject: bool,
    /// `σ̂_{ij|S}`.
    pub sigma_hat: f64,
    /// `m̂′`, the total mass estimated from residual radii.
    pub mass_hat: f64,
    /// Residual PTCC `γ̂_{ij|S}`.
    pub gamma_hat: f64,
    /// PTCC of the decoupled residual pairing, subtracted before testing
    /// under [`NullCentering::CyclicShift`]; zero otherwise.
    pub null_gamma: f64,
}

fn check_triplet(p: usize, i: usize, j: usize, s: &[usize]) -> Result<()> {
    if i >= p || j >= p || s.iter().any(|&k| k >= p) {
        return Err(Error::InvalidParameter(format!("index out of range for p = {p}")));
    }
    if i == j {
        return Err(Error::InvalidParameter(format!("pair must be distinct, got ({i}, {j})")));
    }
    if s.contains(&i) || s.contains(&j) {
        return Err(Error::InvalidParameter(format!("conditioning set {s:?} overlaps the pair ({i}, {j})")));
    }
    Ok(())
}

/// Prediction coefficients `C = Σ_{ij,S} Σ_{S,S}⁻¹` (2 × |S|).
fn prediction_coefficients(sigma: &DMatrix<f64>, i: usize, j: usize, s: &[usize]) -> Result<DMatrix<f64>> {
    if s.is_empty() {
        return Ok(DMatrix::zeros(2, 0));
    }
    let ss = submatrix(sigma, s, s);
    let s_pair = submatrix(sigma, s, &[i, j]);
    let chol = ss.cholesky().ok_or_else(|| Error::SingularConditioningSet { set: s.to_vec() })?;
    Ok(chol.solve(&s_pair).transpose())
}

/// `Σ_{ij|S}` and `γ_{ij|S}` from a (known or estimated) TPDM.
pub fn partial_tail_cov(sigma: &Tpdm, i: usize, j: usize, s: &[usize]) -> Result<PartialTailResult> {
    let m = &sigma.sigma;
    check_triplet(m.nrows(), i, j, s)?;
    let pair = submatrix(m, &[i, j], &[i, j]);
    let schur = if s.is_empty() {
        pair
    } else {
        let coef = prediction_coefficients(m, i, j, s)?;
        pair - coef * submatrix(m, s, &[i, j])
    };
    let partial_cov = Matrix2::new(schur[(0, 0)], schur[(0, 1)], schur[(1, 0)], schur[(1, 1)]);
    let denom = (partial_cov[(0, 0)] * partial_cov[(1, 1)]).sqrt();
    let gamma = if denom > 0.0 { partial_cov[(0, 1)] / denom } else { 0.0 };
    Ok(PartialTailResult { partial_cov, gamma })
}

/// Residuals `ε` (n × 2) of the pair after removing the prediction from `S`.
pub fn tail_residuals(x: &StandardizedMatrix, i: usize, j: usize, s: &[usize], sigma_hat: &Tpdm) -> Result<DMatrix<f64>> {
    check_triplet(x.p(), i, j, s)?;
    if sigma_hat.p() != x.p() {
        return Err(Error::Dimension {
            expected: format!("{0}×{0} TPDM", x.p()),
            got: format!("{0}×{0}", sigma_hat.p()),
        });
    }
    let pre: Vec<Vec<f64>> = std::iter::once(i)
        .chain(std::iter::once(j))
        .chain(s.iter().copied())
        .map(|c| x.column(c).iter().map(|&v| softplus_inv_unchecked(v)).collect())
        .collect();
    let refs: Vec<&[f64]> = pre.iter().map(Vec::as_slice).collect();
    let coef = prediction_coefficients(&sigma_hat.sigma, i, j, s)?;
    let [ei, ej] = residual_columns(refs[0], refs[1], &refs[2..], &coef);
    let mut out = DMatrix::zeros(x.n(), 2);
    out.column_mut(0).copy_from_slice(&ei);
    out.column_mut(1).copy_from_slice(&ej);
    Ok(out)
}

fn residual_columns(pi: &[f64], pj: &[f64], ps: &[&[f64]], coef: &DMatrix<f64>) -> [Vec<f64>; 2] {
    let mut ei = pi.to_vec();
    let mut ej = pj.to_vec();
    for (k, col) in ps.iter().enumerate() {
        let (ci, cj) = (coef[(0, k)], coef[(1, k)]);
        for (l, &v) in col.iter().enumerate() {
            ei[l] -= ci * v;
            ej[l] -= cj * v;
        }
    }
    [ei, ej]
}

/// Residual-based estimates for one `(i, j, S)` triplet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialTailEstimate {
    /// `σ̂_{ij|S}`
    pub sigma_ij: f64,
    /// Same estimator with `i = j`, used to normalize.
    pub sigma_ii: f64,
    pub sigma_jj: f64,
    pub mass: f64,
    pub threshold: f64,
    pub exceedances: usize,
}

impl PartialTailEstimate {
    pub fn gamma(&self) -> f64 {
        let denom = (self.sigma_ii * self.sigma_jj).sqrt();
        if denom > 0.0 {
            self.sigma_ij / denom
        } else {
            0.0
        }
    }
}

fn residual_estimate(ei: &[f64], ej: &[f64], q: f64, cond_size: usize) -> Result<PartialTailEstimate> {
    let m = tail_moments(&[ei, ej], q, cond_size + 3)?;
    Ok(PartialTailEstimate {
        sigma_ij: m.sigma[(0, 1)],
        sigma_ii: m.sigma[(0, 0)],
        sigma_jj: m.sigma[(1, 1)],
        mass: m.mass,
        threshold: m.threshold,
        exceedances: m.exceedances,
    })
}

/// `σ̂_{ij|S}` from the residuals with a single global TPDM estimated on `x`.
pub fn estimate_partial_tail_cov(x: &StandardizedMatrix, i: usize, j: usize, s: &[usize], q: f64) -> Result<PartialTailEstimate> {
    let sigma_hat = estimate_tpdm(x, q)?;
    let eps = tail_residuals(x, i, j, s, &sigma_hat)?;
    let n = x.n();
    residual_estimate(&eps.as_slice()[..n], &eps.as_slice()[n..], q, s.len())
}

/// `t = γ·sqrt(df / (1 − γ²))` after clamping `|γ|` below 1.
pub fn t_statistic(gamma: f64, df: f64) -> f64 {
    let g = gamma.clamp(-GAMMA_CLAMP, GAMMA_CLAMP);
    g * (df / (1.0 - g * g)).sqrt()
}

/// Two-sided Student-t p-value.
pub fn two_sided_p_value(statistic: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(Error::InvalidParameter(format!("degrees of freedom must be positive, got {df}")));
    }
    if statistic == 0.0 {
        return Ok(1.0);
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Invariant(format!("student t: {e}")))?;
    Ok((2.0 * dist.sf(statistic.abs())).min(1.0))
}

/// How the residual PTCC is centered before the t statistic is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NullCentering {
    /// Test `γ̂` against zero directly.
    None,
    /// Subtract the PTCC of the residual pairs with the second column
    /// cyclically shifted by half the sample. The shifted pairing has the
    /// same margins but no joint extremes, so its PTCC is the finite-threshold
    /// value of `γ̂` under tail uncorrelatedness.
    #[default]
    CyclicShift,
}

/// Tests `H₀: X_i ⊥_TC X_j | S` on `x`, estimating the global TPDM internally.
pub fn ptcc_test(x: &StandardizedMatrix, i: usize, j: usize, s: &[usize], q: f64, alpha: f64) -> Result<SeparationTestResult> {
    PtccTester::new(x, q, alpha)?.run(i, j, s)
}

/// Decision for a separation query, from data or from an exact oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationOutcome {
    pub separated: bool,
    /// PTCC behind the decision.
    pub gamma: f64,
    /// Full statistics for data-driven tests.
    pub detail: Option<SeparationTestResult>,
}

/// A separation test the structure learners can query concurrently.
pub trait SeparationTest: Sync {
    fn p(&self) -> usize;
    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<SeparationOutcome>;
}

/// Data-driven PTCC test with cached preimages and global TPDM.
#[derive(Debug, Clone)]
pub struct PtccTester {
    preimage: Vec<Vec<f64>>,
    sigma_hat: Tpdm,
    q: f64,
    alpha: f64,
    centering: NullCentering,
}

impl PtccTester {
    pub fn new(x: &StandardizedMatrix, q: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let sigma_hat = estimate_tpdm(x, q)?;
        let preimage = (0..x.p())
            .map(|c| x.column(c).iter().map(|&v| softplus_inv_unchecked(v)).collect())
            .collect();
        Ok(Self { preimage, sigma_hat, q, alpha, centering: NullCentering::default() })
    }

    pub fn with_centering(mut self, centering: NullCentering) -> Self {
        self.centering = centering;
        self
    }

    pub fn sigma_hat(&self) -> &Tpdm {
        &self.sigma_hat
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn run(&self, i: usize, j: usize, s: &[usize]) -> Result<SeparationTestResult> {
        check_triplet(self.preimage.len(), i, j, s)?;
        // canonical pair order makes the decision exactly symmetric in (i, j)
        let (i, j) = (i.min(j), i.max(j));
        let coef = prediction_coefficients(&self.sigma_hat.sigma, i, j, s)?;
        let ps: Vec<&[f64]> = s.iter().map(|&k| self.preimage[k].as_slice()).collect();
        let [ei, ej] = residual_columns(&self.preimage[i], &self.preimage[j], &ps, &coef);
        let est = residual_estimate(&ei, &ej, self.q, s.len())?;
        let gamma_hat = est.gamma();
        let null_gamma = match self.centering {
            NullCentering::None => 0.0,
            NullCentering::CyclicShift => {
                let n = ej.len();
                let mut shifted = ej.clone();
                shifted.rotate_left(n / 2);
                residual_estimate(&ei, &shifted, self.q, s.len())?.gamma()
            }
        };
        let df = (est.exceedances - s.len() - 2) as f64;
        let statistic = t_statistic(gamma_hat - null_gamma, df);
        let p_value = two_sided_p_value(statistic, df)?;
        Ok(SeparationTestResult {
            statistic,
            p_value,
            exceedances: est.exceedances,
            cond_size: s.len(),
            reject: p_value < self.alpha,
            sigma_hat: est.sigma_ij,
            mass_hat: est.mass,
            gamma_hat,
            null_gamma,
        })
    }
}

impl SeparationTest for PtccTester {
    fn p(&self) -> usize {
        self.preimage.len()
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<SeparationOutcome> {
        let r = self.run(i, j, s)?;
        Ok(SeparationOutcome { separated: !r.reject, gamma: r.gamma_hat - r.null_gamma, detail: Some(r) })
    }
}

/// Exact test on a known TPDM: separated iff `|γ_{ij|S}| < tolerance`.
#[derive(Debug, Clone)]
pub struct AnalyticSeparation {
    sigma: Tpdm,
    tolerance: f64,
}

impl AnalyticSeparation {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;

    pub fn new(sigma: Tpdm) -> Self {
        Self { sigma, tolerance: Self::DEFAULT_TOLERANCE }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

impl SeparationTest for AnalyticSeparation {
    fn p(&self) -> usize {
        self.sigma.p()
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<SeparationOutcome> {
        let r = partial_tail_cov(&self.sigma, i, j, s)?;
        Ok(SeparationOutcome { separated: r.gamma.abs() < self.tolerance, gamma: r.gamma, detail: None })
    }
}
