//! Seeded generation of candidate hidden nodes.
//!
//! Every candidate is drawn from its own ChaCha20 stream keyed by the run
//! seed and addressed by a stream id, so a candidate is a pure function of
//! `(seed, stream_id, lambda, index)` and pools can be evaluated in any order.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScnError};

/// Hidden-node activation function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = ScnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" | "logistic" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(ScnError::Parameter(format!("unknown activation '{other}'"))),
        }
    }
}

/// The increasing list of sampling scales and the number of candidates drawn per scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub lambdas: Vec<f64>,
    pub t_max: usize,
}

impl ScaleSchedule {
    pub fn new(lambdas: Vec<f64>, t_max: usize) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(ScnError::Parameter("scale schedule is empty".into()));
        }
        if t_max == 0 || t_max >= 1000 {
            return Err(ScnError::Parameter(format!(
                "t_max must lie in 1..1000, got {t_max}"
            )));
        }
        if lambdas.len() >= 1000 {
            return Err(ScnError::Parameter("at most 999 scales are supported".into()));
        }
        if lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(ScnError::Parameter("scales must be finite and positive".into()));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScnError::Parameter("scales must be strictly increasing".into()));
        }
        Ok(ScaleSchedule { lambdas, t_max })
    }

    /// `{lo : step : hi}` in the inclusive MATLAB range sense.
    pub fn range(lo: f64, step: f64, hi: f64, t_max: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(ScnError::Parameter("range step must be positive".into()));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as i64 + 1;
        if count < 1 {
            return Err(ScnError::Parameter("empty scale range".into()));
        }
        let lambdas = (0..count).map(|k| lo + step * k as f64).collect();
        Self::new(lambdas, t_max)
    }

    /// `{1:1:10}` with ten candidates per scale.
    pub fn supervised_default() -> Self {
        Self::range(1.0, 1.0, 10.0, 10).expect("static schedule")
    }

    /// `{10}` with a single candidate.
    pub fn unsupervised_default() -> Self {
        ScaleSchedule {
            lambdas: vec![10.0],
            t_max: 1,
        }
    }
}

/// Address of an independent random substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// Reserved stream ids for the data pipeline; candidate ids stay below `1 << 56`.
pub const SHUFFLE_STREAM: u64 = 1 << 62;
pub const FEATURE_SPLIT_STREAM: u64 = (1 << 62) | 1;
const RENEWAL_STREAM_BASE: u64 = 1 << 61;
const ATTEMPT_SHIFT: u32 = 40;

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    /// Stream for one candidate: `node * 10^6 + scale * 10^3 + candidate`, with the
    /// r-renewal attempt number in bits 40 and up so retries draw fresh nodes.
    pub fn candidate(
        seed: u64,
        node_index: usize,
        attempt: usize,
        scale_index: usize,
        candidate_index: usize,
    ) -> Self {
        debug_assert!(scale_index < 1000 && candidate_index < 1000);
        let base = node_index as u64 * 1_000_000 + scale_index as u64 * 1_000 + candidate_index as u64;
        debug_assert!(base < 1 << ATTEMPT_SHIFT);
        RandomStream::new(seed, ((attempt as u64) << ATTEMPT_SHIFT) | base)
    }

    /// Stream used to draw the renewal increments `tau` for one node.
    pub fn renewal(seed: u64, node_index: usize) -> Self {
        RandomStream::new(seed, RENEWAL_STREAM_BASE | node_index as u64)
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// One randomly configured hidden node with its privileged twin.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateNode {
    pub w: Array1<f64>,
    pub b: f64,
    pub w_tilde: Array1<f64>,
    pub b_tilde: f64,
    pub lambda_used: f64,
    pub candidate_index: usize,
}

/// Draws `w`, `b`, `w_tilde`, `b_tilde` (in that order) i.i.d. uniform on `[-lambda, lambda]`.
pub fn sample_candidate(
    stream: RandomStream,
    lambda: f64,
    n: usize,
    d: usize,
    index: usize,
) -> Result<CandidateNode> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ScnError::Parameter(format!(
            "sampling scale must be positive, got {lambda}"
        )));
    }
    if n == 0 {
        return Err(ScnError::Parameter("normal feature dimension must be >= 1".into()));
    }
    let mut rng = stream.rng();
    let mut draw = || rng.random_range(-lambda..=lambda);
    let w = Array1::from_shape_fn(n, |_| draw());
    let b = draw();
    let w_tilde = Array1::from_shape_fn(d, |_| draw());
    let b_tilde = if d > 0 { draw() } else { 0.0 };
    Ok(CandidateNode {
        w,
        b,
        w_tilde,
        b_tilde,
        lambda_used: lambda,
        candidate_index: index,
    })
}

fn activations(
    w: ArrayView1<f64>,
    b: f64,
    x: ArrayView2<f64>,
    activation: Activation,
) -> Array1<f64> {
    let mut z = x.dot(&w);
    z.mapv_inplace(|v| activation.apply(v + b));
    z
}

/// Hidden outputs of a candidate on the normal and (if present) privileged views.
pub fn hidden_output(
    candidate: &CandidateNode,
    x: ArrayView2<f64>,
    x_tilde: Option<ArrayView2<f64>>,
    activation: Activation,
) -> Result<(Array1<f64>, Option<Array1<f64>>)> {
    if x.ncols() != candidate.w.len() {
        return Err(ScnError::Dimension(format!(
            "candidate expects {} normal features, data has {}",
            candidate.w.len(),
            x.ncols()
        )));
    }
    let h = activations(candidate.w.view(), candidate.b, x, activation);
    let h_tilde = match x_tilde {
        Some(xt) if !candidate.w_tilde.is_empty() => {
            if xt.ncols() != candidate.w_tilde.len() || xt.nrows() != x.nrows() {
                return Err(ScnError::Dimension(format!(
                    "candidate expects {}x{} privileged block, data has {}x{}",
                    x.nrows(),
                    candidate.w_tilde.len(),
                    xt.nrows(),
                    xt.ncols()
                )));
            }
            Some(activations(candidate.w_tilde.view(), candidate.b_tilde, xt, activation))
        }
        _ => None,
    };
    Ok((h, h_tilde))
}
