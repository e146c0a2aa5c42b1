//! Synthetic problems for tests and smoke runs.

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dataset::{DataTable, FeatureSplit};
use crate::trainers::TrainData;

/// Normalized `y = sin(3x)` regression with a noisy view of the target as the
/// privileged feature.
#[derive(Clone, Debug)]
pub struct SyntheticTask {
    pub x: Array2<f64>,
    pub x_priv: Array2<f64>,
    pub t: Array2<f64>,
}

impl SyntheticTask {
    pub fn data(&self) -> TrainData<'_> {
        TrainData {
            x: self.x.view(),
            x_priv: Some(self.x_priv.view()),
            t: self.t.view(),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }
}

fn min_max(col: &mut ndarray::ArrayViewMut1<f64>) {
    let lo = col.fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = col.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let span = if hi > lo { hi - lo } else { 1.0 };
    col.mapv_inplace(|v| (v - lo) / span);
}

/// Raw samples: `x ~ U[0, 1]`, `y = sin(3x)`, privileged `y + U[-0.1, 0.1]`.
fn sine_raw(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_5e1e);
    let mut raw = Array2::zeros((n, 3));
    for mut row in raw.axis_iter_mut(Axis(0)) {
        let x: f64 = rng.random_range(0.0..=1.0);
        let y = (3.0 * x).sin();
        row[0] = x;
        row[1] = y + rng.random_range(-0.1..=0.1);
        row[2] = y;
    }
    raw
}

/// `n` samples, each column min-max scaled to `[0, 1]`.
pub fn sine_task(n: usize, seed: u64) -> SyntheticTask {
    let mut raw = sine_raw(n, seed);
    for mut c in raw.axis_iter_mut(Axis(1)) {
        min_max(&mut c);
    }
    SyntheticTask {
        x: raw.slice(ndarray::s![.., 0..1]).to_owned(),
        x_priv: raw.slice(ndarray::s![.., 1..2]).to_owned(),
        t: raw.slice(ndarray::s![.., 2..3]).to_owned(),
    }
}

/// The same problem as a raw table (`x`, privileged column, target) with its split.
pub fn sine_table(n: usize, seed: u64) -> (DataTable, FeatureSplit) {
    let raw = sine_raw(n, seed);
    let features = raw.slice(ndarray::s![.., 0..2]).to_owned();
    let targets = raw.column(2).iter().map(|v| format!("{v}")).collect();
    let mut table = DataTable::new(features, targets).expect("synthetic table");
    table.feature_names = Some(vec!["x".into(), "x_priv".into()]);
    let split = FeatureSplit {
        seed: 0,
        normal: vec![0],
        privileged: vec![1],
    };
    (table, split)
}

/// Gaussian-like clusters (sum of uniforms) around random centres in `[0, 1]^p`.
pub fn blobs_table(n: usize, classes: usize, p: usize, spread: f64, seed: u64) -> DataTable {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xb10b5);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..p).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let mut features = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % classes;
        for j in 0..p {
            let noise: f64 = (0..3).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() / 3.0;
            features[[i, j]] = centres[k][j] + spread * noise;
        }
        labels.push(format!("c{k}"));
    }
    DataTable::new(features, labels).expect("synthetic table")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_task_is_normalized_and_seeded() {
        let a = sine_task(200, 1);
        assert_eq!(a.n_samples(), 200);
        for m in [&a.x, &a.x_priv, &a.t] {
            assert!(m.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let b = sine_task(200, 1);
        assert_eq!(a.x, b.x);
        assert_ne!(a.x, sine_task(200, 2).x);
    }

    #[test]
    fn blobs_have_all_classes() {
        let t = blobs_table(30, 3, 4, 0.1, 0);
        assert_eq!(t.n_attributes(), 4);
        let mut l = t.targets_raw.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 3);
    }
}
