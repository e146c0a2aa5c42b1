//! Closed-form output weights and supervisory quantities.
//!
//! Everything here works one hidden node at a time, so each solve is either a
//! scalar projection or a 2x2 system. Inner products are sums over samples and
//! are taken separately for each output dimension `q`.
//!
//! The privileged objective couples a normal node output `h` and a privileged
//! node output `h~` through
//!
//! ```text
//! beta   + h'(h beta + h~ beta~ - e)            = 0
//! g beta~ + h~'(h beta + h~ beta~ - e) + C h~'1 = 0
//! ```
//!
//! where `g` is the ridge coefficient on the privileged weights, `C` the slack
//! coefficient and `1` the all-ones `N x m` matrix.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScnError};

/// Relative guard on the 2x2 determinant before a candidate is treated as degenerate.
pub const DEGENERATE_RTOL: f64 = 1e-12;

/// Slack and ridge coefficients of the privileged objective.
///
/// The slack direction is the all-ones `N x m` matrix; it is implicit here since
/// it only ever enters as column sums of `h~`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LupiParams {
    pub c: f64,
    pub gamma: f64,
}

impl Default for LupiParams {
    fn default() -> Self {
        LupiParams { c: 0.1, gamma: 1e5 }
    }
}

impl LupiParams {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        let p = LupiParams { c, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(ScnError::Parameter(format!("C must be >= 0, got {}", self.c)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(ScnError::Parameter(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Per-node supervision bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisionState {
    pub r: f64,
    pub mu: f64,
    pub delta: f64,
    pub xi_per_dim: Vec<f64>,
    pub xi_total: f64,
}

impl SupervisionState {
    pub fn admissible(&self) -> bool {
        self.xi_per_dim.iter().all(|&x| x >= 0.0)
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(ScnError::Parameter(format!("r must lie in (0, 1), got {r}")));
    }
    Ok(())
}

fn check_rows(e: &ArrayView2<f64>, v: &ArrayView1<f64>, what: &str) -> Result<()> {
    if e.nrows() != v.len() {
        return Err(ScnError::Dimension(format!(
            "residual has {} rows, {what} has {}",
            e.nrows(),
            v.len()
        )));
    }
    Ok(())
}

/// `mu_L = (1 - r) / (L + 1)` for node index `L >= 1`.
pub fn mu_schedule(r: f64, node_index: usize) -> Result<f64> {
    check_r(r)?;
    if node_index == 0 {
        return Err(ScnError::Parameter("node index starts at 1".into()));
    }
    Ok((1.0 - r) / (node_index as f64 + 1.0))
}

/// `delta_L = (1 - r - mu_L) * ||e||^2`.
pub fn delta_threshold(e: ArrayView2<f64>, r: f64, mu: f64) -> Result<f64> {
    check_r(r)?;
    if !(mu >= 0.0) || mu > 1.0 - r + 1e-12 {
        return Err(ScnError::Parameter(format!(
            "mu must lie in [0, 1 - r] = [0, {}], got {mu}",
            1.0 - r
        )));
    }
    let sq: f64 = e.iter().map(|v| v * v).sum();
    Ok(((1.0 - r - mu) * sq).max(0.0))
}

/// Squared Euclidean norm of each residual column.
pub fn column_sq_norms(e: ArrayView2<f64>) -> Array1<f64> {
    e.map_axis(Axis(0), |c| c.dot(&c))
}

/// Projection weight of the residual onto a single hidden output: `<e_q, h> / <h, h>`.
pub fn scn_beta(e: ArrayView2<f64>, h: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_rows(&e, &h, "hidden output")?;
    let hh = h.dot(&h);
    if !(hh > 0.0) {
        return Err(ScnError::Degenerate("hidden output has zero norm".into()));
    }
    Ok(e.t().dot(&h) / hh)
}

/// Scalar moments shared by the privileged solves.
#[derive(Clone, Copy, Debug)]
struct Moments {
    s_h: f64,
    s_ht: f64,
    s_c: f64,
    sum_ht: f64,
}

impl Moments {
    fn new(h: ArrayView1<f64>, h_tilde: ArrayView1<f64>) -> Self {
        Moments {
            s_h: h.dot(&h),
            s_ht: h_tilde.dot(&h_tilde),
            s_c: h.dot(&h_tilde),
            sum_ht: h_tilde.sum(),
        }
    }
}

/// Closed-form normal and privileged output weights of one node.
///
/// With `s_h = h'h`, `s_t = h~'h~`, `s_c = h'h~` and `D = (1 + s_h)(g + s_t) - s_c^2`:
///
/// ```text
/// beta_q  = ((g + s_t) h'e_q - s_c h~'e_q + C s_c h~'1) / D
/// beta~_q = ((1 + s_h) h~'e_q - s_c h'e_q - C (1 + s_h) h~'1) / D
/// ```
///
/// Returns [`ScnError::Degenerate`] when `|D| <= 1e-12 (1 + s_h)(g + s_t)`.
pub fn lupi_beta(
    e: ArrayView2<f64>,
    h: ArrayView1<f64>,
    h_tilde: ArrayView1<f64>,
    params: &LupiParams,
) -> Result<(Array1<f64>, Array1<f64>)> {
    check_rows(&e, &h, "hidden output")?;
    check_rows(&e, &h_tilde, "privileged hidden output")?;
    let m = Moments::new(h, h_tilde);
    let g = params.gamma;
    let c = params.c;
    let scale = (1.0 + m.s_h) * (g + m.s_ht);
    let det = scale - m.s_c * m.s_c;
    if !(det.abs() > DEGENERATE_RTOL * scale) {
        return Err(ScnError::Degenerate(format!(
            "privileged system determinant {det:e} below tolerance"
        )));
    }
    let he = e.t().dot(&h);
    let hte = e.t().dot(&h_tilde);
    let slack = c * m.sum_ht;
    let beta = he.mapv(|v| v * (g + m.s_ht)) - &hte.mapv(|v| v * m.s_c) + m.s_c * slack;
    let beta_tilde =
        hte.mapv(|v| v * (1.0 + m.s_h)) - &he.mapv(|v| v * m.s_c) - (1.0 + m.s_h) * slack;
    Ok((beta / det, beta_tilde / det))
}

/// The stacked blocks of the joint `[beta; beta~]` problem.
#[derive(Clone, Debug, PartialEq)]
pub struct JointBlocks {
    /// `diag(1, gamma)`
    pub a: [[f64; 2]; 2],
    /// `diag(0, C)`
    pub b: [[f64; 2]; 2],
    /// `[h, h~]`, `N x 2`
    pub delta_h: Array2<f64>,
}

impl JointBlocks {
    pub fn new(h: ArrayView1<f64>, h_tilde: ArrayView1<f64>, params: &LupiParams) -> Result<Self> {
        if h.len() != h_tilde.len() {
            return Err(ScnError::Dimension(format!(
                "hidden outputs differ in length: {} vs {}",
                h.len(),
                h_tilde.len()
            )));
        }
        let mut delta_h = Array2::zeros((h.len(), 2));
        delta_h.column_mut(0).assign(&h);
        delta_h.column_mut(1).assign(&h_tilde);
        Ok(JointBlocks {
            a: [[1.0, 0.0], [0.0, params.gamma]],
            b: [[0.0, 0.0], [0.0, params.c]],
            delta_h,
        })
    }
}

/// Moore-Penrose inverse of a symmetric 2x2 matrix via its eigendecomposition.
pub fn pinv_sym2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (a, b, c) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    let l1 = a * co * co + 2.0 * b * co * s + c * s * s;
    let l2 = a * s * s - 2.0 * b * co * s + c * co * co;
    let tol = 1e-14 * l1.abs().max(l2.abs());
    let v1 = [co, s];
    let v2 = [-s, co];
    let mut out = [[0.0; 2]; 2];
    for (l, v) in [(l1, v1), (l2, v2)] {
        if l.abs() > tol && l != 0.0 {
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += v[i] * v[j] / l;
                }
            }
        }
    }
    out
}

/// Joint solve `(A + dH'dH)^+ (dH'e - B dH'1)`, returned as a `2 x m` matrix whose
/// rows are `beta` and `beta~`.
pub fn joint_solve(
    e: ArrayView2<f64>,
    h: ArrayView1<f64>,
    h_tilde: ArrayView1<f64>,
    params: &LupiParams,
) -> Result<Array2<f64>> {
    check_rows(&e, &h, "hidden output")?;
    let blocks = JointBlocks::new(h, h_tilde, params)?;
    let dh = &blocks.delta_h;
    let gram = dh.t().dot(dh);
    let mut lhs = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            lhs[i][j] = blocks.a[i][j] + gram[[i, j]];
        }
    }
    let inv = pinv_sym2(lhs);
    let ones = Array2::<f64>::ones(e.raw_dim());
    let dh_ones = dh.t().dot(&ones);
    let mut rhs = dh.t().dot(&e);
    for q in 0..e.ncols() {
        for i in 0..2 {
            let slack: f64 = (0..2).map(|k| blocks.b[i][k] * dh_ones[[k, q]]).sum();
            rhs[[i, q]] -= slack;
        }
    }
    let mut out = Array2::zeros((2, e.ncols()));
    for q in 0..e.ncols() {
        for i in 0..2 {
            out[[i, q]] = inv[i][0] * rhs[[0, q]] + inv[i][1] * rhs[[1, q]];
        }
    }
    Ok(out)
}

/// Max-norm residual of the two stationarity conditions at `(beta, beta~)`.
pub fn stationarity_residual(
    e: ArrayView2<f64>,
    h: ArrayView1<f64>,
    h_tilde: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    beta_tilde: ArrayView1<f64>,
    params: &LupiParams,
) -> f64 {
    let sum_ht = h_tilde.sum();
    let mut worst = 0.0f64;
    for q in 0..e.ncols() {
        let fit = &h * beta[q] + &(&h_tilde * beta_tilde[q]) - e.column(q);
        let r1 = beta[q] + h.dot(&fit);
        let r2 = params.gamma * beta_tilde[q] + h_tilde.dot(&fit) + params.c * sum_ht;
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    worst
}

/// Per-dimension score of the baseline supervisory inequality:
/// `<e_q, h>^2 / <h, h> - (1 - r - mu) ||e_q||^2`.
pub fn xi_scn(e: ArrayView2<f64>, h: ArrayView1<f64>, r: f64, mu: f64) -> Result<Array1<f64>> {
    check_rows(&e, &h, "hidden output")?;
    let hh = h.dot(&h);
    if !(hh > 0.0) {
        return Err(ScnError::Degenerate("hidden output has zero norm".into()));
    }
    let k = 1.0 - r - mu;
    let proj = e.t().dot(&h);
    let sq = column_sq_norms(e);
    Ok(proj.mapv(|p| p * p / hh) - &(sq * k))
}

/// Per-dimension score of the privileged supervisory inequality:
/// `<e_q, h beta_q + h~ beta~_q> - (1 - r - mu) ||e_q||^2`.
pub fn xi_scn_plus(
    e: ArrayView2<f64>,
    h: ArrayView1<f64>,
    h_tilde: Option<ArrayView1<f64>>,
    beta: ArrayView1<f64>,
    beta_tilde: Option<ArrayView1<f64>>,
    r: f64,
    mu: f64,
) -> Result<Array1<f64>> {
    check_rows(&e, &h, "hidden output")?;
    if beta.len() != e.ncols() {
        return Err(ScnError::Dimension("beta length differs from output count".into()));
    }
    let k = 1.0 - r - mu;
    let he = e.t().dot(&h);
    let mut gain = &he * &beta;
    if let (Some(ht), Some(bt)) = (h_tilde, beta_tilde) {
        check_rows(&e, &ht, "privileged hidden output")?;
        gain += &(e.t().dot(&ht) * bt);
    }
    Ok(gain - &(column_sq_norms(e) * k))
}
