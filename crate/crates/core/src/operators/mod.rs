//! Exact bisimulation operators on finite MDPs and their fixed points.

mod fixed_point;
mod metric;
mod operator;
mod similarity;

pub use fixed_point::{fixed_point, solve, FixedPoint};
pub use metric::{AxiomReport, StateMetric};
pub use operator::{
    apply_f_dbc_style, apply_f_eps, apply_f_eps_bar, apply_f_pi, apply_f_psm_style, BisimOperator,
    OperatorKind, OperatorTag,
};
pub use similarity::{ActionEmbedding, SimilarityAxioms, SimilarityG};
