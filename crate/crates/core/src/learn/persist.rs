use crate::autodiff::{ParamSet, Tensor};
use crate::error::{Error, Result};
use crate::io::{Checkpoint, ModelKind};
use crate::ldl::LabelDistribution;
use crate::learn::bpnet::BpNetModel;
use crate::learn::knn::KnnModel;
use crate::learn::maxent::MaxEntModel;

fn corrupt(e: Error) -> Error {
    Error::CorruptCheckpoint(e.to_string())
}

fn matrix(rows: &[&[f64]], width: usize) -> Tensor<f64> {
    let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    Tensor::new(vec![rows.len(), width], data).expect("rows share the stated width")
}

impl MaxEntModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(ModelKind::MaxEnt)
            .with_meta("label_dim", self.label_dim())
            .with_meta("feature_dim", self.feature_dim());
        let theta = Tensor::new(vec![self.label_dim(), self.feature_dim()], self.theta().to_vec());
        c.tensors64.insert("theta", theta.expect("theta is label_dim x feature_dim"));
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::MaxEnt)?;
        let theta = c.tensor64("theta")?;
        Self::new(theta.data().to_vec(), c.meta_parse("label_dim")?, c.meta_parse("feature_dim")?).map_err(corrupt)
    }
}

impl KnnModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(ModelKind::Knn).with_meta("k", self.k());
        let features: Vec<&[f64]> = self.features().iter().map(Vec::as_slice).collect();
        let targets: Vec<&[f64]> = self.targets().iter().map(LabelDistribution::values).collect();
        c.tensors64.insert("features", matrix(&features, self.feature_dim()));
        c.tensors64.insert("targets", matrix(&targets, self.targets()[0].len()));
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::Knn)?;
        let f = c.tensor64("features")?;
        let t = c.tensor64("targets")?;
        if f.shape().len() != 2 || t.shape().len() != 2 || f.rows() != t.rows() {
            return Err(Error::CorruptCheckpoint("kNN tensors disagree on instance count".into()));
        }
        let features = (0..f.rows()).map(|i| f.row(i).to_vec()).collect();
        let targets = (0..t.rows())
            .map(|i| LabelDistribution::new_exact(t.row(i).to_vec()))
            .collect::<Result<Vec<_>>>()
            .map_err(corrupt)?;
        Self::new(features, targets, c.meta_parse("k")?).map_err(corrupt)
    }
}

impl BpNetModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut c = Checkpoint::new(ModelKind::BpNet)
            .with_meta("feature_dim", self.feature_dim())
            .with_meta("hidden", self.hidden())
            .with_meta("label_dim", self.label_dim());
        c.tensors64 = self.net.params.clone();
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind(ModelKind::BpNet)?;
        let params: ParamSet<f64> = c.tensors64.clone();
        Self::from_params(
            c.meta_parse("feature_dim")?,
            c.meta_parse("hidden")?,
            c.meta_parse("label_dim")?,
            params,
        )
        .map_err(corrupt)
    }
}

/// Any trained label-distribution learner.
#[derive(Debug, Clone, PartialEq)]
pub enum LdlModel {
    MaxEnt(MaxEntModel),
    Knn(KnnModel),
    BpNet(BpNetModel),
}

impl LdlModel {
    pub fn predict(&self, x: &[f64]) -> Result<LabelDistribution> {
        match self {
            LdlModel::MaxEnt(m) => m.predict(x),
            LdlModel::Knn(m) => m.predict(x),
            LdlModel::BpNet(m) => m.predict(x),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            LdlModel::MaxEnt(m) => m.feature_dim(),
            LdlModel::Knn(m) => m.feature_dim(),
            LdlModel::BpNet(m) => m.feature_dim(),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        match self {
            LdlModel::MaxEnt(m) => m.to_checkpoint(),
            LdlModel::Knn(m) => m.to_checkpoint(),
            LdlModel::BpNet(m) => m.to_checkpoint(),
        }
    }

    /// Dispatches on the checkpoint's model kind.
    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        match c.kind {
            ModelKind::MaxEnt => MaxEntModel::from_checkpoint(c).map(LdlModel::MaxEnt),
            ModelKind::Knn => KnnModel::from_checkpoint(c).map(LdlModel::Knn),
            ModelKind::BpNet => BpNetModel::from_checkpoint(c).map(LdlModel::BpNet),
            other => Err(Error::CorruptCheckpoint(format!("{other} is not a label-distribution model"))),
        }
    }
}
