//! Time evolution, entropy-production traces, decay fits, the gradient-flow
//! identity and metric, and the decay/log-Sobolev/comparison constants.

mod comparison;
mod constants;
mod inequalities;
mod integrate;
mod metric;
mod optimize;

pub use comparison::{
    comparison_check, comparison_constants, f_knots, hypercontractivity_monitor, theorem_constants,
    weight_function, ComparisonCheck, ComparisonConstants, FKnots, HyperTrace, TheoremConstants,
};
pub use constants::{
    k2_lower, k_lower, linearized_constants, lsi_constants, t2_bound, ConstantsReport, LinearizedConstants,
    LsiBudget,
};
pub use inequalities::{fisher2_bound_check, poincare_check, Fisher2Check, PoincareCheck};
pub use integrate::{
    divergence_trace, fit_decay_rate, integrate, integrate_with, suggest_dt, DecayFit, DivergenceTrace,
    IntegrateOptions, TraceRow, Trajectory,
};
pub use metric::{gradient_flow_residual, metric_eval, MetricTensor};
pub use optimize::{minimize_multistart, MultistartResult};
