//! Incremental construction of SCN, SCN+, IRVFL and IRVFL+ networks.
//!
//! All four variants share one loop. Nodes are added one at a time; for each
//! node the scales are swept in order, `t_max` candidates are drawn per scale,
//! and the best admissible candidate of the first scale that yields one is
//! installed. Supervised variants only admit candidates whose per-output score
//! is non-negative; when a full sweep admits nothing, `r` is pushed towards 1
//! and the sweep is repeated with fresh candidates.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScnError};
use crate::random_config::{hidden_output, sample_candidate, Activation, CandidateNode, RandomStream, ScaleSchedule};
use crate::solvers::{self, LupiParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "scn")]
    Scn,
    #[serde(rename = "scn+")]
    ScnPlus,
    #[serde(rename = "irvfl")]
    Irvfl,
    #[serde(rename = "irvfl+")]
    IrvflPlus,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Scn, Variant::ScnPlus, Variant::Irvfl, Variant::IrvflPlus];

    /// Candidates must pass the supervisory inequality.
    pub fn is_supervised(self) -> bool {
        matches!(self, Variant::Scn | Variant::ScnPlus)
    }

    /// Trains with the privileged view and the coupled weight solve.
    pub fn uses_privileged(self) -> bool {
        matches!(self, Variant::ScnPlus | Variant::IrvflPlus)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Scn => "SCN",
            Variant::ScnPlus => "SCN+",
            Variant::Irvfl => "IRVFL",
            Variant::IrvflPlus => "IRVFL+",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Variant::Scn => "scn",
            Variant::ScnPlus => "scn+",
            Variant::Irvfl => "irvfl",
            Variant::IrvflPlus => "irvfl+",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = ScnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "scn" => Ok(Variant::Scn),
            "scn+" | "scnplus" => Ok(Variant::ScnPlus),
            "irvfl" => Ok(Variant::Irvfl),
            "irvfl+" | "irvflplus" => Ok(Variant::IrvflPlus),
            _ => Err(ScnError::Parameter(format!("unknown variant '{s}'"))),
        }
    }
}

/// What the tolerance is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopMetric {
    /// `||e||_F / sqrt(N m)`
    #[default]
    Rmse,
    /// `||e||_F`
    Frobenius,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub l_max: usize,
    pub epsilon: f64,
    pub schedule: ScaleSchedule,
    pub r_init: f64,
    pub lupi: LupiParams,
    pub activation: Activation,
    pub seed: u64,
    #[serde(default)]
    pub stop_metric: StopMetric,
    /// Maximum r-renewals per node before the best candidate seen is taken.
    pub renewal_cap: usize,
}

impl TrainConfig {
    pub fn new(variant: Variant) -> Self {
        TrainConfig {
            variant,
            l_max: 100,
            epsilon: 0.0,
            schedule: if variant.is_supervised() {
                ScaleSchedule::supervised_default()
            } else {
                ScaleSchedule::unsupervised_default()
            },
            r_init: 0.9,
            lupi: LupiParams::default(),
            activation: Activation::Sigmoid,
            seed: 0,
            stop_metric: StopMetric::Rmse,
            renewal_cap: 10,
        }
    }

    /// Same settings, other variant. Unsupervised variants always draw one
    /// candidate at scale 10.
    pub fn for_variant(&self, variant: Variant) -> Self {
        let mut c = self.clone();
        c.variant = variant;
        if variant.is_supervised() && !self.variant.is_supervised() {
            c.schedule = ScaleSchedule::supervised_default();
        }
        c
    }

    pub fn effective_schedule(&self) -> ScaleSchedule {
        if self.variant.is_supervised() {
            self.schedule.clone()
        } else {
            ScaleSchedule::unsupervised_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_init > 0.0 && self.r_init < 1.0) {
            return Err(ScnError::Parameter(format!("r_init must lie in (0, 1), got {}", self.r_init)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(ScnError::Parameter(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        ScaleSchedule::new(self.schedule.lambdas.clone(), self.schedule.t_max)?;
        if self.variant.uses_privileged() {
            self.lupi.validate()?;
        }
        Ok(())
    }
}

/// Borrowed, already normalized training matrices.
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub x: ArrayView2<'a, f64>,
    pub x_priv: Option<ArrayView2<'a, f64>>,
    pub t: ArrayView2<'a, f64>,
}

/// A hidden node's input weights and bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenNode {
    pub w: Vec<f64>,
    pub b: f64,
}

/// A trained network. Prediction reads only `nodes` and `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub variant: Variant,
    pub activation: Activation,
    pub n_inputs: usize,
    pub n_privileged: usize,
    pub n_outputs: usize,
    pub nodes: Vec<HiddenNode>,
    /// One row of `m` weights per node.
    pub beta: Vec<Vec<f64>>,
    pub priv_nodes: Vec<HiddenNode>,
    pub beta_tilde: Vec<Vec<f64>>,
}

impl Network {
    pub fn empty(variant: Variant, activation: Activation, n_inputs: usize, n_privileged: usize, n_outputs: usize) -> Self {
        Network {
            variant,
            activation,
            n_inputs,
            n_privileged,
            n_outputs,
            nodes: vec![],
            beta: vec![],
            priv_nodes: vec![],
            beta_tilde: vec![],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Hidden-layer output matrix `N x L` on normalized normal features.
    pub fn hidden_matrix(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_inputs {
            return Err(ScnError::Dimension(format!(
                "network expects {} inputs, got {}",
                self.n_inputs,
                x.ncols()
            )));
        }
        let mut h = Array2::zeros((x.nrows(), self.nodes.len()));
        for (j, node) in self.nodes.iter().enumerate() {
            let w = ndarray::ArrayView1::from(&node.w[..]);
            let mut col = h.column_mut(j);
            col.assign(&x.dot(&w));
            col.mapv_inplace(|z| self.activation.apply(z + node.b));
        }
        Ok(h)
    }

    /// `H(x) beta` on normalized normal features.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let h = self.hidden_matrix(x)?;
        Ok(h.dot(&self.beta_matrix()))
    }

    pub fn beta_matrix(&self) -> Array2<f64> {
        let mut b = Array2::zeros((self.beta.len(), self.n_outputs));
        for (i, row) in self.beta.iter().enumerate() {
            b.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
        }
        b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualState {
    pub e: Array2<f64>,
    pub sq_norm_per_dim: Array1<f64>,
    pub rmse: f64,
}

impl ResidualState {
    pub fn new(e: Array2<f64>) -> Self {
        let sq = solvers::column_sq_norms(e.view());
        let rmse = rmse_of(sq.sum(), e.len());
        ResidualState {
            e,
            sq_norm_per_dim: sq,
            rmse,
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.sq_norm_per_dim.sum()
    }

    fn metric(&self, m: StopMetric) -> f64 {
        match m {
            StopMetric::Rmse => self.rmse,
            StopMetric::Frobenius => self.sq_norm().sqrt(),
        }
    }

    /// `e <- e - h beta' (- h~ beta~')`
    fn subtract(&mut self, h: &Array1<f64>, beta: &Array1<f64>, extra: Option<(&Array1<f64>, &Array1<f64>)>) {
        let hc = h.view().insert_axis(Axis(1));
        self.e -= &hc.dot(&beta.view().insert_axis(Axis(0)));
        if let Some((ht, bt)) = extra {
            let htc = ht.view().insert_axis(Axis(1));
            self.e -= &htc.dot(&bt.view().insert_axis(Axis(0)));
        }
        self.sq_norm_per_dim = solvers::column_sq_norms(self.e.view());
        self.rmse = rmse_of(self.sq_norm(), self.e.len());
    }
}

fn rmse_of(sq: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        (sq / count as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ToleranceMet,
    LMaxReached,
}

/// Bookkeeping for one installed node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub r: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Whether the node met the supervisory inequality (always true when unsupervised).
    pub admissible: bool,
    pub xi_total: f64,
    pub sq_norm_before: f64,
    pub sq_norm_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_l: usize,
    pub rmse_history: Vec<f64>,
    pub r_renewals: usize,
    pub candidates_evaluated: usize,
    #[serde(skip)]
    pub wall_time: Duration,
    pub stop_reason: StopReason,
    pub nodes: Vec<NodeRecord>,
}

struct Scored {
    cand: CandidateNode,
    h: Array1<f64>,
    h_tilde: Option<Array1<f64>>,
    beta: Array1<f64>,
    beta_tilde: Option<Array1<f64>>,
    xi_total: f64,
    admissible: bool,
}

fn evaluate(
    cfg: &TrainConfig,
    data: &TrainData,
    e: ArrayView2<f64>,
    cand: CandidateNode,
    r: f64,
    mu: f64,
) -> Result<Option<Scored>> {
    let (h, h_tilde) = hidden_output(&cand, data.x, data.x_priv.filter(|_| cfg.variant.uses_privileged()), cfg.activation)?;
    let outcome = if cfg.variant.uses_privileged() {
        let ht = h_tilde.as_ref().expect("privileged block checked on entry");
        solvers::lupi_beta(e, h.view(), ht.view(), &cfg.lupi).and_then(|(b, bt)| {
            let xi = solvers::xi_scn_plus(e, h.view(), Some(ht.view()), b.view(), Some(bt.view()), r, mu)?;
            Ok((b, Some(bt), xi))
        })
    } else {
        solvers::scn_beta(e, h.view()).and_then(|b| {
            let xi = solvers::xi_scn(e, h.view(), r, mu)?;
            Ok((b, None, xi))
        })
    };
    let (beta, beta_tilde, xi) = match outcome {
        Ok(v) => v,
        Err(ScnError::Degenerate(_)) => return Ok(None),
        Err(err) => return Err(err),
    };
    if beta.iter().chain(beta_tilde.iter().flatten()).any(|v| !v.is_finite()) {
        return Ok(None);
    }
    let admissible = !cfg.variant.is_supervised() || xi.iter().all(|&v| v >= 0.0);
    Ok(Some(Scored {
        cand,
        h,
        h_tilde,
        beta,
        beta_tilde,
        xi_total: xi.sum(),
        admissible,
    }))
}

/// Keeps the highest score, ties to the earliest seen.
fn keep_best(slot: &mut Option<Scored>, s: Scored) {
    if slot.as_ref().is_none_or(|b| s.xi_total > b.xi_total) {
        *slot = Some(s);
    }
}

fn check_data(data: &TrainData, cfg: &TrainConfig) -> Result<()> {
    let n = data.x.nrows();
    if data.t.nrows() != n {
        return Err(ScnError::Dimension(format!("{} input rows but {} target rows", n, data.t.nrows())));
    }
    if data.x.ncols() == 0 {
        return Err(ScnError::Dimension("no normal features".into()));
    }
    if data.t.ncols() == 0 {
        return Err(ScnError::Dimension("no target columns".into()));
    }
    if cfg.variant.uses_privileged() {
        match data.x_priv {
            Some(xp) if xp.nrows() == n && xp.ncols() > 0 => {}
            Some(xp) => {
                return Err(ScnError::Dimension(format!(
                    "privileged block is {}x{}, expected {n} rows and at least one column",
                    xp.nrows(),
                    xp.ncols()
                )))
            }
            None => return Err(ScnError::Dimension(format!("{} requires privileged features", cfg.variant))),
        }
    }
    if data.x.iter().chain(data.t.iter()).any(|v| !v.is_finite()) {
        return Err(ScnError::Data("non-finite training value".into()));
    }
    Ok(())
}

/// Builds a network incrementally until the tolerance is met or `l_max` nodes are installed.
pub fn train(data: TrainData, cfg: &TrainConfig) -> Result<(Network, TrainReport)> {
    let started = Instant::now();
    cfg.validate()?;
    check_data(&data, cfg)?;
    let schedule = cfg.effective_schedule();
    let n_in = data.x.ncols();
    let n_priv = if cfg.variant.uses_privileged() { data.x_priv.map_or(0, |x| x.ncols()) } else { 0 };
    let m = data.t.ncols();

    let mut net = Network::empty(cfg.variant, cfg.activation, n_in, n_priv, m);
    let mut residual = ResidualState::new(data.t.to_owned());
    let mut report = TrainReport {
        final_l: 0,
        rmse_history: vec![],
        r_renewals: 0,
        candidates_evaluated: 0,
        wall_time: Duration::ZERO,
        stop_reason: StopReason::LMaxReached,
        nodes: vec![],
    };

    while net.n_nodes() < cfg.l_max && residual.metric(cfg.stop_metric) > cfg.epsilon {
        let node_index = net.n_nodes() + 1;
        let mut r = cfg.r_init;
        let mut renewal_rng = RandomStream::renewal(cfg.seed, node_index).rng();
        let mut best_seen: Option<Scored> = None;
        let mut chosen: Option<(Scored, f64, f64)> = None;

        'attempts: for attempt in 0..=cfg.renewal_cap {
            let mu = solvers::mu_schedule(r, node_index)?;
            for (si, &lambda) in schedule.lambdas.iter().enumerate() {
                let mut pool: Option<Scored> = None;
                for ci in 0..schedule.t_max {
                    let stream = RandomStream::candidate(cfg.seed, node_index, attempt, si, ci);
                    let cand = sample_candidate(stream, lambda, n_in, n_priv, ci)?;
                    report.candidates_evaluated += 1;
                    let Some(scored) = evaluate(cfg, &data, residual.e.view(), cand, r, mu)? else {
                        continue;
                    };
                    if scored.admissible {
                        keep_best(&mut pool, scored);
                    } else {
                        keep_best(&mut best_seen, scored);
                    }
                }
                if let Some(best) = pool {
                    chosen = Some((best, r, mu));
                    break 'attempts;
                }
            }
            if attempt < cfg.renewal_cap {
                let mut tau = 0.0;
                while tau <= 0.0 {
                    tau = renewal_rng.random_range(0.0..(1.0 - r));
                }
                let next = r + tau;
                if next >= 1.0 {
                    break;
                }
                r = next;
                report.r_renewals += 1;
            }
        }

        let (node, r_used, mu_used) = match chosen {
            Some(c) => c,
            None => match best_seen {
                Some(s) => {
                    let mu = solvers::mu_schedule(r, node_index)?;
                    (s, r, mu)
                }
                None => {
                    return Err(ScnError::TrainingAborted(format!(
                        "every candidate for node {node_index} was degenerate"
                    )))
                }
            },
        };

        let before = residual.sq_norm();
        residual.subtract(
            &node.h,
            &node.beta,
            node.h_tilde.as_ref().zip(node.beta_tilde.as_ref()),
        );
        report.nodes.push(NodeRecord {
            r: r_used,
            mu: mu_used,
            lambda: node.cand.lambda_used,
            admissible: node.admissible,
            xi_total: node.xi_total,
            sq_norm_before: before,
            sq_norm_after: residual.sq_norm(),
        });
        report.rmse_history.push(residual.rmse);
        net.nodes.push(HiddenNode {
            w: node.cand.w.to_vec(),
            b: node.cand.b,
        });
        net.beta.push(node.beta.to_vec());
        if let Some(bt) = node.beta_tilde {
            net.priv_nodes.push(HiddenNode {
                w: node.cand.w_tilde.to_vec(),
                b: node.cand.b_tilde,
            });
            net.beta_tilde.push(bt.to_vec());
        }
    }

    report.final_l = net.n_nodes();
    report.stop_reason = if residual.metric(cfg.stop_metric) <= cfg.epsilon {
        StopReason::ToleranceMet
    } else {
        StopReason::LMaxReached
    };
    report.wall_time = started.elapsed();
    Ok((net, report))
}
