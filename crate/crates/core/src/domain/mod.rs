//! Parameter vectors, feasible sets, sample batches, losses.

mod batch;
mod loss;
mod param;
mod population;
mod set;

pub use batch::{check_stream, SampleBatch};
pub use loss::{pre_average, EmpiricalLoss, LossModel, Objective, Regularity, RegularityConstants};
pub use param::ParamVector;
pub(crate) use param::{dist2, dot, norm2};
pub use population::{Estimate, MonteCarloSpec, PopulationLoss};
pub use set::FeasibleSet;
