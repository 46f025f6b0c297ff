//! Ground-truth generators.
//!
//! Three model families are provided: transformed-linear structural models
//! (cross-sectional and time series), extremal Markov networks parameterized
//! by a precision matrix, and the max-linear structural model.
//!
//! Every generator takes an explicit RNG so outputs are a pure function of
//! parameters and seed. [`mix_seed`] derives per-replicate seeds from a
//! master seed.
//!
//! Sparsity conventions differ between families and follow their own
//! definitions: in [`random_xscm`] and [`random_ts_xscm`] an entry is nonzero
//! with probability `phi`, while in [`random_emn`] an off-diagonal entry is
//! *zero* with probability `phi`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Dag, TsGraph, UndirectedGraph};
use crate::linalg::{from_rows, max_abs, serde_rows, serde_rows_vec, spectral_radius};
use crate::tla::{pareto2_from_uniform, softplus, softplus_inv_unchecked, tl_add, tl_scale, StandardizedMatrix, TailScalar};
use crate::tpdm::{analytic_tpdm, total_effect, Tpdm};
use crate::{Error, Result};

/// Steps simulated and discarded before a time series is emitted.
pub const BURN_IN: usize = 100;

/// Lagged dynamics are redrawn until the companion matrix has spectral
/// radius below this bound.
pub const STABILITY_BOUND: f64 = 0.95;

const MAX_STABILITY_DRAWS: usize = 10_000;

/// Margin added to the largest off-diagonal magnitude on the precision diagonal.
pub const EMN_DIAGONAL_MARGIN: f64 = 0.02;

const EMN_MAX_RETRIES: usize = 20;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index` of a run with seed `master`: SplitMix64 of `master ⊕ index`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index)
}

/// The RNG used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("phi must lie in (0, 1), got {phi}")))
    }
}

/// Pareto(1, 2) source matrix, filled row by row.
fn draw_sources<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(n, p);
    for l in 0..n {
        for i in 0..p {
            z[(l, i)] = pareto2_from_uniform(rng.random());
        }
    }
    z
}

/// Transformed-linear structural model, cross-sectional (`tau = 0`) or time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawXscm")]
pub struct XscmSpec {
    p: usize,
    tau: usize,
    #[serde(rename = "B", with = "serde_rows_vec")]
    b: Vec<DMatrix<f64>>,
    #[serde(rename = "A")]
    a: Vec<f64>,
}

#[derive(Deserialize)]
struct RawXscm {
    p: usize,
    tau: usize,
    #[serde(rename = "B", with = "serde_rows_vec")]
    b: Vec<DMatrix<f64>>,
    #[serde(rename = "A")]
    a: Vec<f64>,
}

impl TryFrom<RawXscm> for XscmSpec {
    type Error = Error;

    fn try_from(raw: RawXscm) -> Result<Self> {
        let spec = XscmSpec::new(raw.b, raw.a)?;
        if spec.p != raw.p || spec.tau != raw.tau {
            return Err(Error::Parse(format!(
                "declared p = {}, tau = {} disagree with matrices (p = {}, tau = {})",
                raw.p, raw.tau, spec.p, spec.tau
            )));
        }
        Ok(spec)
    }
}

impl XscmSpec {
    /// `b[δ]` holds `B₍δ₎`; `b[0]` must have acyclic support.
    pub fn new(b: Vec<DMatrix<f64>>, a: Vec<f64>) -> Result<Self> {
        let p = a.len();
        if p == 0 || b.is_empty() {
            return Err(Error::InvalidParameter("spec needs at least one variable and B₍0₎".into()));
        }
        for (lag, m) in b.iter().enumerate() {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::Dimension {
                    expected: format!("{p}×{p}"),
                    got: format!("{}×{} for lag {lag}", m.nrows(), m.ncols()),
                });
            }
            if let Some(v) = m.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("edge weights must be nonnegative, got {v} at lag {lag}")));
            }
        }
        if let Some(v) = a.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("scales must be positive, got {v}")));
        }
        Dag::from_weighted_adjacency(&b[0])?.topological_order()?;
        Ok(Self { p, tau: b.len() - 1, b, a })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// `B₍lag₎`.
    pub fn b(&self, lag: usize) -> &DMatrix<f64> {
        &self.b[lag]
    }

    pub fn scales(&self) -> &[f64] {
        &self.a
    }

    /// Contemporaneous DAG, edges `j → i` where `B₍0₎ᵢⱼ > 0`.
    pub fn dag(&self) -> Dag {
        Dag::from_weighted_adjacency(&self.b[0]).expect("validated at construction")
    }

    /// Lagged graph, edges `(j, δ, i)` where `B₍δ₎ᵢⱼ > 0`.
    pub fn ts_graph(&self) -> TsGraph {
        let mut edges = Vec::new();
        for (lag, m) in self.b.iter().enumerate() {
            for i in 0..self.p {
                for j in 0..self.p {
                    if m[(i, j)] > 0.0 {
                        edges.push((j, lag, i));
                    }
                }
            }
        }
        TsGraph::new(self.p, self.tau, edges, []).expect("validated at construction")
    }

    /// Exact TPDM of the cross-sectional model.
    pub fn analytic_tpdm(&self) -> Result<Tpdm> {
        if self.tau != 0 {
            return Err(Error::InvalidParameter("analytic TPDM is defined for tau = 0".into()));
        }
        analytic_tpdm(&self.b[0], &self.a)
    }

    /// Spectral radius of the companion matrix of the preimage recursion.
    pub fn companion_spectral_radius(&self) -> Result<f64> {
        let p = self.p;
        if self.tau == 0 {
            return Ok(0.0);
        }
        let inv = total_effect(&self.b[0])?;
        let mut comp = DMatrix::zeros(p * self.tau, p * self.tau);
        for lag in 1..=self.tau {
            let c = &inv * &self.b[lag];
            comp.view_mut((0, (lag - 1) * p), (p, p)).copy_from(&c);
        }
        for k in p..p * self.tau {
            comp[(k, k - p)] = 1.0;
        }
        Ok(spectral_radius(&comp))
    }
}

fn lower_triangle<R: Rng + ?Sized>(p: usize, phi: f64, rng: &mut R) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(p, p);
    for i in 1..p {
        for j in 0..i {
            if rng.random::<f64>() < phi {
                b[(i, j)] = rng.random::<f64>();
            }
        }
    }
    b
}

fn dense_support<R: Rng + ?Sized>(p: usize, phi: f64, rng: &mut R) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            if rng.random::<f64>() < phi {
                b[(i, j)] = rng.random::<f64>();
            }
        }
    }
    b
}

/// Random cross-sectional model: strict lower triangle nonzero with
/// probability `phi`, weights `Uniform(0, 1)`, unit scales.
pub fn random_xscm<R: Rng + ?Sized>(p: usize, phi: f64, rng: &mut R) -> Result<XscmSpec> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("p must be at least 2, got {p}")));
    }
    check_phi(phi)?;
    XscmSpec::new(vec![lower_triangle(p, phi, rng)], vec![1.0; p])
}

/// Direct form `t((I − B)⁻¹ A t⁻¹(z))` applied to each row of `z`.
pub fn evaluate_xscm(spec: &XscmSpec, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if spec.tau != 0 {
        return Err(Error::InvalidParameter("cross-sectional evaluation needs tau = 0".into()));
    }
    if z.ncols() != spec.p {
        return Err(Error::Dimension { expected: format!("{} columns", spec.p), got: format!("{}", z.ncols()) });
    }
    let m = total_effect(&spec.b[0])? * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&spec.a));
    let pre = z.map(softplus_inv_unchecked);
    Ok((pre * m.transpose()).map(softplus))
}

/// Equation-by-equation form `X_i = (⊕_j B_ij ∘ X_j) ⊕ (A_i ∘ Z_i)` in topological order.
pub fn evaluate_xscm_structural(spec: &XscmSpec, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if spec.tau != 0 || z.ncols() != spec.p {
        return Err(Error::InvalidParameter("structural evaluation needs tau = 0 and p columns".into()));
    }
    let order = spec.dag().topological_order()?;
    let b = &spec.b[0];
    let mut x = DMatrix::zeros(z.nrows(), spec.p);
    for l in 0..z.nrows() {
        for &i in &order {
            let mut acc = tl_scale(spec.a[i], TailScalar::new(z[(l, i)])?);
            for j in 0..spec.p {
                if b[(i, j)] > 0.0 {
                    acc = tl_add(acc, tl_scale(b[(i, j)], TailScalar::new(x[(l, j)])?));
                }
            }
            x[(l, i)] = acc.value();
        }
    }
    Ok(x)
}

/// `n` i.i.d. rows of a cross-sectional model.
pub fn sample_xscm<R: Rng + ?Sized>(spec: &XscmSpec, n: usize, rng: &mut R) -> Result<StandardizedMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let z = draw_sources(n, spec.p, rng);
    StandardizedMatrix::new(evaluate_xscm(spec, &z)?, true)
}

/// Random time-series model with maximum lag `tau`.
///
/// `B₍0₎` follows [`random_xscm`] when `contemporaneous`, and is zero
/// otherwise. Lagged matrices have unrestricted support. Draws whose
/// companion spectral radius reaches [`STABILITY_BOUND`] are discarded.
pub fn random_ts_xscm<R: Rng + ?Sized>(p: usize, phi: f64, tau: usize, rng: &mut R, contemporaneous: bool) -> Result<XscmSpec> {
    if tau < 1 {
        return Err(Error::InvalidParameter("tau must be at least 1".into()));
    }
    if p < 1 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    check_phi(phi)?;
    for _ in 0..MAX_STABILITY_DRAWS {
        let mut b = Vec::with_capacity(tau + 1);
        b.push(if contemporaneous { lower_triangle(p, phi, rng) } else { DMatrix::zeros(p, p) });
        for _ in 0..tau {
            b.push(dense_support(p, phi, rng));
        }
        let spec = XscmSpec::new(b, vec![1.0; p])?;
        if spec.companion_spectral_radius()? < STABILITY_BOUND {
            return Ok(spec);
        }
    }
    Err(Error::Generation(format!("no stable draw in {MAX_STABILITY_DRAWS} attempts for p = {p}, phi = {phi}")))
}

/// `t_len` consecutive observations after a burn-in of [`BURN_IN`] steps.
///
/// The recursion runs on preimages, `u_t = (I − B₍0₎)⁻¹(Σ_δ B₍δ₎ u_{t−δ} + A t⁻¹(Z_t))`,
/// and emits `X_t = t(u_t)`. Lags before the first step are fresh source draws.
pub fn sample_ts_xscm<R: Rng + ?Sized>(spec: &XscmSpec, t_len: usize, rng: &mut R) -> Result<StandardizedMatrix> {
    if t_len == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let (p, tau) = (spec.p, spec.tau);
    let inv = total_effect(&spec.b[0])?;
    let coef: Vec<DMatrix<f64>> = spec.b.iter().skip(1).map(|m| &inv * m).collect();
    let source = |rng: &mut R| -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_fn(p, |i, _| spec.a[i] * softplus_inv_unchecked(pareto2_from_uniform(rng.random())))
    };
    // history[k] = u_{t-1-k}
    let mut history: Vec<nalgebra::DVector<f64>> = (0..tau).map(|_| source(rng)).collect();
    let total = BURN_IN + t_len;
    let mut out = DMatrix::zeros(t_len, p);
    for step in 0..total {
        let w = source(rng);
        let mut u = &inv * w;
        for (k, c) in coef.iter().enumerate() {
            u += c * &history[k];
        }
        if step >= BURN_IN {
            for i in 0..p {
                out[(step - BURN_IN, i)] = softplus(u[i]);
            }
        }
        if tau > 0 {
            history.rotate_right(1);
            history[0] = u;
        }
    }
    StandardizedMatrix::new(out, true)
}

/// Extremal Markov network with precision `Q`, `Σ = Q⁻¹` and `Σ = L Lᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEmn")]
pub struct EmnSpec {
    p: usize,
    #[serde(rename = "Q", with = "serde_rows")]
    q: DMatrix<f64>,
    #[serde(rename = "Sigma", with = "serde_rows")]
    sigma: DMatrix<f64>,
    #[serde(rename = "L", with = "serde_rows")]
    l: DMatrix<f64>,
}

#[derive(Deserialize)]
struct RawEmn {
    #[serde(rename = "Q", with = "serde_rows")]
    q: DMatrix<f64>,
}

impl TryFrom<RawEmn> for EmnSpec {
    type Error = Error;

    fn try_from(raw: RawEmn) -> Result<Self> {
        EmnSpec::from_precision(raw.q)
    }
}

impl EmnSpec {
    /// Validates `Q` (symmetric, nonpositive off-diagonals, positive
    /// definite) and derives `Σ` and `L`.
    pub fn from_precision(q: DMatrix<f64>) -> Result<Self> {
        let p = q.nrows();
        if p == 0 || q.ncols() != p {
            return Err(Error::Dimension { expected: "square nonempty Q".into(), got: format!("{}×{}", q.nrows(), q.ncols()) });
        }
        for i in 0..p {
            for j in 0..p {
                if q[(i, j)] != q[(j, i)] {
                    return Err(Error::InvalidParameter(format!("Q is not symmetric at ({i}, {j})")));
                }
                if i != j && q[(i, j)] > 0.0 {
                    return Err(Error::InvalidParameter(format!("Q has positive off-diagonal entry at ({i}, {j})")));
                }
            }
        }
        let chol = q.clone().cholesky().ok_or_else(|| Error::InvalidParameter("Q is not positive definite".into()))?;
        let mut sigma = chol.inverse();
        sigma = (&sigma + sigma.transpose()) * 0.5;
        // an M-matrix inverse is entrywise nonnegative; clear rounding noise
        if let Some(v) = sigma.iter().find(|v| **v < -1e-12) {
            return Err(Error::Invariant(format!("Q⁻¹ has negative entry {v}")));
        }
        sigma.apply(|v| *v = v.max(0.0));
        let l = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Invariant("Σ is not positive definite".into()))?
            .l();
        Ok(Self { p, q, sigma, l })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Edges `{i, j}` with `Q_ij < 0`.
    pub fn graph(&self) -> UndirectedGraph {
        UndirectedGraph::from_precision(&self.q)
    }
}

/// Random network: each off-diagonal pair is zero with probability `phi`,
/// otherwise `Uniform[−1, 0]`; the diagonal is the row maximum magnitude plus
/// [`EMN_DIAGONAL_MARGIN`], inflated by 10% until `Q` is positive definite.
pub fn random_emn<R: Rng + ?Sized>(p: usize, phi: f64, rng: &mut R) -> Result<EmnSpec> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("p must be at least 2, got {p}")));
    }
    check_phi(phi)?;
    let mut q = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() >= phi {
                let v = -rng.random::<f64>();
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
    }
    for i in 0..p {
        let m = (0..p).filter(|&j| j != i).map(|j| q[(i, j)].abs()).fold(0.0, f64::max);
        q[(i, i)] = m + EMN_DIAGONAL_MARGIN;
    }
    for _ in 0..=EMN_MAX_RETRIES {
        if q.clone().cholesky().is_some() {
            return EmnSpec::from_precision(q);
        }
        for i in 0..p {
            q[(i, i)] *= 1.1;
        }
    }
    Err(Error::Generation(format!("precision matrix not positive definite after {EMN_MAX_RETRIES} inflations")))
}

/// `n` rows of `L ∘ Z`, with the Cholesky factor applied as a real-coefficient
/// transformed-linear map (negative entries included).
pub fn sample_emn<R: Rng + ?Sized>(spec: &EmnSpec, n: usize, rng: &mut R) -> Result<StandardizedMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let z = draw_sources(n, spec.p, rng);
    let pre = z.map(softplus_inv_unchecked);
    StandardizedMatrix::new((pre * spec.l.transpose()).map(softplus), true)
}

/// Max-linear model `X_i = max(Z_i, max_j B_ij X_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMaxLinear")]
pub struct MaxLinearSpec {
    p: usize,
    #[serde(rename = "B", with = "serde_rows")]
    b: DMatrix<f64>,
}

#[derive(Deserialize)]
struct RawMaxLinear {
    #[serde(rename = "B", with = "serde_rows")]
    b: DMatrix<f64>,
}

impl TryFrom<RawMaxLinear> for MaxLinearSpec {
    type Error = Error;

    fn try_from(raw: RawMaxLinear) -> Result<Self> {
        MaxLinearSpec::new(raw.b)
    }
}

impl MaxLinearSpec {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        let spec = XscmSpec::new(vec![b.clone()], vec![1.0; b.nrows()])?;
        Ok(Self { p: spec.p, b })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn dag(&self) -> Dag {
        Dag::from_weighted_adjacency(&self.b).expect("validated at construction")
    }
}

/// Random max-linear model with the support and weights of [`random_xscm`].
pub fn random_max_linear<R: Rng + ?Sized>(p: usize, phi: f64, rng: &mut R) -> Result<MaxLinearSpec> {
    let spec = random_xscm(p, phi, rng)?;
    MaxLinearSpec::new(spec.b[0].clone())
}

pub fn sample_max_linear<R: Rng + ?Sized>(spec: &MaxLinearSpec, n: usize, rng: &mut R) -> Result<StandardizedMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let order = spec.dag().topological_order()?;
    let mut x = draw_sources(n, spec.p, rng);
    for l in 0..n {
        for &i in &order {
            let mut v = x[(l, i)];
            for j in 0..spec.p {
                let w = spec.b[(i, j)];
                if w > 0.0 {
                    v = v.max(w * x[(l, j)]);
                }
            }
            x[(l, i)] = v;
        }
    }
    StandardizedMatrix::new(x, true)
}

/// Six-variable DAG model with eleven weighted edges and unit scales.
pub fn reference_xscm() -> XscmSpec {
    let b = from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.13, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.26, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.53, 0.0, 0.0, 0.0, 0.0],
        vec![0.86, 0.54, 0.0, 0.57, 0.0, 0.0],
        vec![0.12, 0.51, 0.37, 0.47, 0.84, 0.0],
    ])
    .expect("rectangular");
    XscmSpec::new(vec![b], vec![1.0; 6]).expect("valid reference model")
}

/// Six-variable network with ten edges and constant diagonal 2.02.
pub fn reference_emn() -> EmnSpec {
    let q = from_rows(&[
        vec![2.02, -0.06, -0.63, -0.63, -0.35, -0.54],
        vec![-0.06, 2.02, -0.70, 0.0, -0.75, 0.0],
        vec![-0.63, -0.70, 2.02, -0.34, 0.0, 0.0],
        vec![-0.63, 0.0, -0.34, 2.02, 0.0, -0.13],
        vec![-0.35, -0.75, 0.0, 0.0, 2.02, -0.42],
        vec![-0.54, 0.0, 0.0, -0.13, -0.42, 2.02],
    ])
    .expect("rectangular");
    EmnSpec::from_precision(q).expect("valid reference network")
}

/// Three-variable lag-one model with contemporaneous effects.
pub fn reference_ts_xscm() -> XscmSpec {
    let b0 = from_rows(&[vec![0.0, 0.0, 0.0], vec![0.33, 0.0, 0.0], vec![0.29, 0.22, 0.0]]).expect("rectangular");
    let b1 = from_rows(&[vec![0.1, 0.31, 0.29], vec![0.26, 0.3, 0.0], vec![0.0, 0.0, 0.0]]).expect("rectangular");
    XscmSpec::new(vec![b0, b1], vec![1.0; 3]).expect("valid reference model")
}

/// The reference lag-one model with its contemporaneous matrix removed.
pub fn reference_ts_xscm_lagged_only() -> XscmSpec {
    let spec = reference_ts_xscm();
    XscmSpec::new(vec![DMatrix::zeros(3, 3), spec.b[1].clone()], vec![1.0; 3]).expect("valid reference model")
}

/// `‖QΣ − I‖_max`.
pub fn inversion_residual(spec: &EmnSpec) -> f64 {
    max_abs(&(&spec.q * &spec.sigma - DMatrix::identity(spec.p, spec.p)))
}
