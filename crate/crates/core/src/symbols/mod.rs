//! State-dependent symbols, the maximal functional `H`, generalized indices,
//! the divergence integral `D` and Monte Carlo estimators of symbols.

pub mod divergence;
pub mod functional;
pub mod grid;
pub mod indices;
pub mod montecarlo;
pub mod state;

pub use divergence::{d_integral, d_integral_jumps, DResult, Verdict};
pub use functional::{h_local, h_uniform, HUniform, HValue};
pub use grid::{BoxDomain, GridConfig};
pub use indices::{
    index_beta_inf_unif, index_beta_inf_unif1, index_beta_inf_x, index_beta_loc, index_from_growth, index_spot,
    GrowthMode, IndexEstimate,
};
pub use montecarlo::{
    alpha_hr_estimate, mc_h_estimate, mc_symbol_estimate, stopped_value, ComplexEstimate, McConfig, RealEstimate, TailEstimate,
};
pub use state::{sde_symbol, AffineCoefficient, CoefficientField, LinearTerm, Provenance, StateSymbol, StateTriplet};
