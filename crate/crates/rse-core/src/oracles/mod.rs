//! Independent verifiers: finite-difference manifold Hessians, seeded Monte Carlo,
//! slope and sandwich checks, a robustness check and exhaustive small-case oracles.

pub mod brute;
mod hessian;
mod monte_carlo;
mod robustness;

pub use hessian::{numeric_hessian, numeric_reg, NumericReg, FD_STEP};
pub use monte_carlo::{
    draw_samples, mc_expectation, sandwich_check, slope_lower_bound, McEstimate, McSettings, Sandwich, SmoothMapHandle, MC_BLOCK,
};
pub use robustness::{robustness_neighborhood_check, NeighborhoodCheck, PerturbationFamily, RobustnessReport};
