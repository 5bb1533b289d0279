//! Solver core for backhaul-aware drone base station placement.
//!
//! A drone base station (DBS) relays traffic between a macro base station
//! (MBS) and ground users: the MBS→DBS backhaul is a free-space-optics (FSO)
//! link, the DBS→user access links are RF. The crate models both links,
//! selects the served user set under bandwidth and backhaul budgets
//! ([`knapsack`]), places the DBS by minimizing the worse of the two link
//! utilizations ([`sqp`]), and alternates the two solvers until the served
//! count stops improving ([`broad`]).
//!
//! `no_std` + `alloc`; all floating-point math goes through `libm` so results
//! are bit-identical across platforms.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

mod math;

pub mod broad;
pub mod knapsack;
pub mod models;
pub mod qp;
pub mod sqp;

pub use broad::{
    plan_at, run_broad, validate_plan, BroadError, BroadErrorKind, BroadIterate, BroadPlan,
    PlanViolation,
};
pub use knapsack::{
    brute_force, is_feasible, run_ga, solve_lp_dual, BitSolution, DualPrices, GaConfig,
    KnapsackError, KnapsackInstance,
};
pub use models::{
    access_rate, attenuation_gamma, average_pathloss_db, dbm_to_watts, fso_rate, los_probability,
    required_bandwidth, scattering_exponent_q, AccessChannelParams, AltitudeBounds,
    AttenuationModel, FsoLinkParams, ModelError, NetworkConfig, Position3D, UserProfile,
};
pub use sqp::{
    path_utilization, sqp_solve, PlacementProblem, SqpError, SqpIterate, SqpSolution,
    UtilizationPair,
};
