//! Surrogate models of the plant: cubic fits for each pump and fan,
//! small perceptrons for flows, condenser temperature and chillers, and
//! their composition into a total-power predictor.

mod bundle;
mod graph;
mod mlp;
mod poly;
mod train;

pub use bundle::{BundleError, ModelBundle, BUNDLE_SCHEMA_VERSION};
pub use graph::{
    ch_features, chfm_features, cwfm_features, cwtm_features, GraphError, OperatingPoint, PlantModelGraph, PowerBreakdown,
};
pub use mlp::{forward, init_params, loss_and_gradient, MlpConfig, MlpModel, ParamLayout, Standardizer, HIDDEN, MIN_MLP_ROWS};
pub use poly::{PolyModel, Prediction, MIN_POLY_POINTS};
pub use train::{fit_graph, total_mape, train_graph, ModuleRow, TrainConfig, TrainError, TrainReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("design matrix is rank-deficient")]
    Degenerate,
    #[error("non-finite values during fitting")]
    NonFinite,
    #[error("{0}")]
    Shape(String),
}
