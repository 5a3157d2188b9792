//! Geodesics of right-invariant `H^k` metrics on the diffeomorphism group of
//! the circle, discretised pseudo-spectrally on a uniform periodic grid.
//!
//! `k = 0` gives the inviscid Burgers equation `u_t + 3 u u_x = 0`, `k = 1` the
//! Camassa-Holm equation.

mod burgers;
mod field;
mod flow;
mod operators;

pub use burgers::{breaking_time, burgers_exact, min_slope};
pub use field::{wavenumber, PeriodicField, TrigInterpolant};
pub use flow::{
    dexp_at_zero, euler_hk_step, geodesic_flow, lagrangian_step, momentum_k, p0_rhs, p_k, riemannian_exp,
    riemannian_exp_with, step_schedule, FlowMapState, GeodesicFlow, GeodesicSample, Scheme, CONSISTENCY_TOL,
    DEFAULT_DIFFEO_EPS, DEFAULT_EXP_DT,
};
pub use operators::{
    apply_ak, b_k, ch_rhs, euler_hk_rhs, hk_energy, hk_inner, invert_ak, lie_bracket, q_k, MetricOrder,
};
