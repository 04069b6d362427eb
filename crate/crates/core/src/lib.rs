//! Line-constraint screening for single-period unit commitment.
//!
//! A DC network with linear generator costs is compiled into a mixed-integer
//! program ([`formulation`]), solved by branch-and-bound ([`milp`]) over a
//! dense simplex ([`lp`]). Line-flow bounds that cannot be attained in the
//! LP relaxation are screened out ([`screening`]), optionally tightened by a
//! learned cost cap ([`predictor`], [`pga`]). [`experiments`] ties the pieces
//! into reproducible evaluations.

pub mod error;
pub mod experiments;
pub mod formulation;
pub mod lp;
pub mod milp;
pub mod netcase;
pub mod pga;
pub mod predictor;
pub mod screening;

pub use error::{Error, Result};
pub use experiments::{evaluate, generate_dataset, Evaluation, ExperimentSpec, Method, MetricsRow, Mode};
pub use formulation::{build_formulation, solve_uc, UcFormulation, UcInstance, UcSolution, UcStatus};
pub use netcase::{load_case, validate_case, LoadVector, NetworkCase};
pub use pga::{project_region, run_pga, PgaConfig, PgaResult};
pub use predictor::{knn_screen, mlp_train, Dataset, KnnRule, MlpModel, Sample, TrainConfig};
pub use screening::{screen_all, screen_all_or_keep, CostBound, LoadRegion, ScreeningContext, ScreeningReport};
