//! Versioned JSON model files.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use tmpnn::basis::ORDERING_ID;
use tmpnn::model::Scaling;
use tmpnn::{Scaler, TaylorMapWeights, TmpnnModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub basis_ordering: String,
    pub n_features: usize,
    pub n_targets: usize,
    pub n_latent: usize,
    pub order: usize,
    pub steps: usize,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    /// One row per monomial in basis order, `n_features + n_targets +
    /// n_latent` entries each.
    pub weights: Vec<Vec<f64>>,
    pub init_state: Vec<f64>,
    pub init_trainable: bool,
    pub reg_l1: f64,
    pub reg_l2: f64,
    pub standardize: bool,
    pub feature_scaler: Option<Scaler>,
    pub standardize_targets: bool,
    pub target_scaler: Option<Scaler>,
    pub training: Option<TrainingInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub seed: u64,
    pub epochs_run: usize,
    pub final_train_mse: f64,
    pub final_test_mse: Option<f64>,
}

fn split_scaling(s: &Scaling) -> (bool, Option<Scaler>) {
    match s {
        Scaling::Off => (false, None),
        Scaling::Unfitted => (true, None),
        Scaling::Fitted(sc) => (true, Some(sc.clone())),
    }
}

fn join_scaling(on: bool, scaler: Option<Scaler>, what: &str) -> Result<Scaling> {
    Ok(match (on, scaler) {
        (false, None) => Scaling::Off,
        (true, None) => Scaling::Unfitted,
        (true, Some(s)) => Scaling::Fitted(s),
        (false, Some(_)) => bail!("{what} scaler present but standardization is off"),
    })
}

impl ModelFile {
    pub fn from_model(
        model: &TmpnnModel,
        feature_names: Vec<String>,
        target_names: Vec<String>,
        training: Option<TrainingInfo>,
    ) -> Self {
        let map = model.map();
        let (standardize, feature_scaler) = split_scaling(model.scaling());
        let (standardize_targets, target_scaler) = split_scaling(model.target_scaling());
        let (reg_l1, reg_l2) = model.regularization();
        Self {
            format_version: FORMAT_VERSION,
            basis_ordering: ORDERING_ID.to_string(),
            n_features: model.n_features(),
            n_targets: model.n_targets(),
            n_latent: model.n_latent(),
            order: model.order(),
            steps: model.steps(),
            feature_names,
            target_names,
            weights: map.as_slice().chunks(map.dim()).map(<[f64]>::to_vec).collect(),
            init_state: model.init_state().to_vec(),
            init_trainable: model.init_trainable(),
            reg_l1,
            reg_l2,
            standardize,
            feature_scaler,
            standardize_targets,
            target_scaler,
            training,
        }
    }

    /// Validates every dimension relation and builds the model.
    pub fn to_model(&self) -> Result<TmpnnModel> {
        ensure!(
            self.format_version == FORMAT_VERSION,
            "unsupported model format version {} (expected {FORMAT_VERSION})",
            self.format_version
        );
        ensure!(
            self.basis_ordering == ORDERING_ID,
            "unknown basis ordering `{}` (expected `{ORDERING_ID}`)",
            self.basis_ordering
        );
        ensure!(
            self.feature_names.len() == self.n_features,
            "{} feature names for {} features",
            self.feature_names.len(),
            self.n_features
        );
        ensure!(
            self.target_names.len() == self.n_targets,
            "{} target names for {} targets",
            self.target_names.len(),
            self.n_targets
        );
        let dim = self.n_features + self.n_targets + self.n_latent;
        let basis = tmpnn::build_basis(dim, self.order)?;
        ensure!(
            self.weights.len() == basis.len(),
            "weight matrix has {} rows; order {} in {dim} variables needs {}",
            self.weights.len(),
            self.order,
            basis.len()
        );
        if let Some(i) = self.weights.iter().position(|r| r.len() != dim) {
            bail!("weight row {i} has {} entries, expected {dim}", self.weights[i].len());
        }
        let map = TaylorMapWeights::from_raw(basis.into(), self.weights.concat())?;
        let model = TmpnnModel::from_parts(
            self.n_features,
            self.n_targets,
            self.n_latent,
            self.steps,
            map,
            self.init_state.clone(),
            self.init_trainable,
            (self.reg_l1, self.reg_l2),
            join_scaling(self.standardize, self.feature_scaler.clone(), "feature")?,
            join_scaling(self.standardize_targets, self.target_scaler.clone(), "target")?,
        )?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read model file {}", path.display()))?;
        let file: ModelFile = serde_json::from_str(&text)
            .with_context(|| format!("{} is not a valid model file", path.display()))?;
        file.to_model()
            .with_context(|| format!("invalid model file {}", path.display()))?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
