//! Trained network plus preprocessing, and its on-disk JSON form.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{argmax_rows, FeatureSplit, NormalizationParams, Preprocessor, TargetEncoding, TaskKind};
use crate::error::{Result, ScnError};
use crate::random_config::Activation;
use crate::trainers::{HiddenNode, Network, Variant};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A network that can be applied to raw attribute rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub network: Network,
    pub preprocessor: Preprocessor,
}

impl Model {
    pub fn new(network: Network, preprocessor: Preprocessor) -> Result<Self> {
        if network.n_inputs != preprocessor.split.normal.len() {
            return Err(ScnError::Dimension(format!(
                "network has {} inputs but the split has {} normal attributes",
                network.n_inputs,
                preprocessor.split.normal.len()
            )));
        }
        if network.n_outputs != preprocessor.targets.n_outputs() {
            return Err(ScnError::Dimension("network outputs differ from target encoding".into()));
        }
        Ok(Model { network, preprocessor })
    }

    pub fn task_kind(&self) -> TaskKind {
        self.preprocessor.targets.task_kind()
    }

    /// Network outputs, in normalized target units, for raw rows carrying the full
    /// attribute set. Only the normal attributes are read.
    pub fn predict(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        let x = self.preprocessor.normal_view(z)?;
        self.network.predict(x.view())
    }

    /// Class labels by argmax, ties to the lowest class index.
    pub fn predict_labels(&self, z: ArrayView2<f64>) -> Result<Vec<String>> {
        let TargetEncoding::Classification { class_labels } = &self.preprocessor.targets else {
            return Err(ScnError::Parameter("label prediction needs a classification model".into()));
        };
        let scores = self.predict(z)?;
        Ok(argmax_rows(scores.view())
            .into_iter()
            .map(|k| class_labels[k].clone())
            .collect())
    }

    pub fn to_file(&self) -> ModelFile {
        let net = &self.network;
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            variant: net.variant,
            activation: net.activation,
            targets: self.preprocessor.targets.clone(),
            normalization: self.preprocessor.normalization.clone(),
            split: self.preprocessor.split.clone(),
            n_outputs: net.n_outputs,
            nodes: net.nodes.clone(),
            beta: net.beta.clone(),
            privileged: PrivilegedPart {
                test_time_unused: true,
                nodes: net.priv_nodes.clone(),
                beta_tilde: net.beta_tilde.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s).map_err(|e| ScnError::Serde(e.to_string()))?;
        file.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| ScnError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| ScnError::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Privileged-side weights, kept for inspection only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivilegedPart {
    pub test_time_unused: bool,
    pub nodes: Vec<HiddenNode>,
    pub beta_tilde: Vec<Vec<f64>>,
}

/// Versioned, explicit-field JSON representation of a [`Model`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub variant: Variant,
    pub activation: Activation,
    pub targets: TargetEncoding,
    pub normalization: NormalizationParams,
    pub split: FeatureSplit,
    pub n_outputs: usize,
    pub nodes: Vec<HiddenNode>,
    pub beta: Vec<Vec<f64>>,
    pub privileged: PrivilegedPart,
}

impl ModelFile {
    pub fn into_model(self) -> Result<Model> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(ScnError::Serde(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        let p = self.normalization.n_columns();
        self.split.validate(p)?;
        let n_in = self.split.normal.len();
        if self.nodes.len() != self.beta.len()
            || self.nodes.iter().any(|n| n.w.len() != n_in)
            || self.beta.iter().any(|b| b.len() != self.n_outputs)
        {
            return Err(ScnError::Serde("inconsistent node or weight shapes".into()));
        }
        let network = Network {
            variant: self.variant,
            activation: self.activation,
            n_inputs: n_in,
            n_privileged: self.privileged.nodes.first().map_or(0, |n| n.w.len()),
            n_outputs: self.n_outputs,
            nodes: self.nodes,
            beta: self.beta,
            priv_nodes: self.privileged.nodes,
            beta_tilde: self.privileged.beta_tilde,
        };
        Model::new(
            network,
            Preprocessor {
                split: self.split,
                normalization: self.normalization,
                targets: self.targets,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Preprocessor;
    use crate::synthetic;
    use crate::trainers::{train, TrainConfig, TrainData};

    fn trained(variant: Variant) -> (Model, crate::dataset::DataTable) {
        let (table, split) = synthetic::sine_table(120, 7);
        let rows: Vec<usize> = (0..100).collect();
        let pre = Preprocessor::fit(&table, &rows, split, TaskKind::Regression).unwrap();
        let d = pre.prepare(&table, &rows).unwrap();
        let mut cfg = TrainConfig::new(variant);
        cfg.epsilon = 0.05;
        let (net, _) = train(TrainData { x: d.x.view(), x_priv: Some(d.x_priv.view()), t: d.t.view() }, &cfg).unwrap();
        (Model::new(net, pre).unwrap(), table)
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let (model, table) = trained(Variant::ScnPlus);
        let back = Model::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        let a = model.predict(table.features.view()).unwrap();
        let b = back.predict(table.features.view()).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(model.to_json().contains("\"test_time_unused\": true"));
    }

    #[test]
    fn privileged_columns_never_read() {
        let (model, table) = trained(Variant::ScnPlus);
        let a = model.predict(table.features.view()).unwrap();
        let mut z = table.features.clone();
        z.column_mut(1).fill(0.0);
        let b = model.predict(z.view()).unwrap();
        z.column_mut(1).fill(1e9);
        let c = model.predict(z.view()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn labels_need_classification() {
        let (model, table) = trained(Variant::Scn);
        assert!(model.predict_labels(table.features.view()).is_err());
        assert!(model.predict(table.features.view().slice(ndarray::s![.., 0..1])).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        let (model, _) = trained(Variant::Scn);
        let mut f = model.to_file();
        f.format_version = 99;
        assert!(f.into_model().is_err());
        let mut f = model.to_file();
        f.beta.pop();
        assert!(f.into_model().is_err());
        assert!(Model::from_json("{").is_err());
    }
}
