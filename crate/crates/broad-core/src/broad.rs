//! The outer placement loop: alternate user admission (GA over the
//! two-constraint knapsack) and DBS placement (SQP) until the satisfied-user
//! count stops increasing, then return the best iterate's plan.
//!
//! Admission at a position builds the knapsack from that position's
//! per-user bandwidth needs and the backhaul capacity there; placement then
//! re-optimizes the position for the admitted set, which changes both, so
//! the loop alternates until the count stalls. A snapshot of the best count
//! is kept so a final non-improving iteration can never degrade the result.

use alloc::vec;
use alloc::vec::Vec;

use crate::knapsack::{self, BitSolution, GaConfig, KnapsackInstance};
use crate::models::{self, ModelError, NetworkConfig, Position3D, UserProfile};
use crate::sqp::{self, PlacementProblem, SqpError, UtilizationPair};

/// Safety cap on outer iterations; the non-improvement guard almost always
/// exits far earlier, but GA stochasticity could oscillate.
const MAX_BROAD_ITERATIONS: usize = 25;
/// Relative slack used by [`validate_plan`] when auditing constraints.
const AUDIT_SLACK: f64 = 1.0e-9;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A deployable solution: where the DBS sits and who it serves with how
/// much access bandwidth.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BroadPlan {
    pub dbs_position: Position3D,
    /// Admission indicator, one bit per user.
    pub selection: BitSolution,
    /// Access bandwidth granted to each user (Hz); zero for unadmitted
    /// users. Sized like `selection`.
    pub per_user_bandwidth: Vec<f64>,
    pub satisfied_count: usize,
    pub utilization: UtilizationPair,
    /// Outer iterations executed by the producing run.
    pub iterations: usize,
}

/// One outer-loop record: the admission count at `position` and the best
/// count seen so far (non-decreasing by construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadIterate {
    /// 1-based outer iteration index.
    pub iteration: usize,
    pub position: Position3D,
    pub satisfied_count: usize,
    pub best_count: usize,
    pub utilization: UtilizationPair,
}

/// Trace sink invoked once per outer iteration.
pub type BroadTrace<'a> = &'a mut dyn FnMut(&BroadIterate);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BroadErrorKind {
    Model(ModelError),
    Placement(SqpError),
}

/// A solver failure, carrying the best plan found before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadError {
    pub kind: BroadErrorKind,
    pub best: Option<BroadPlan>,
}

impl core::fmt::Display for BroadError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match &self.kind {
            BroadErrorKind::Model(e) => write!(f, "model failure: {e}")?,
            BroadErrorKind::Placement(e) => write!(f, "placement failure: {e}")?,
        }
        if self.best.is_some() {
            write!(f, " (best plan so far attached)")?;
        }
        Ok(())
    }
}

/// One audited defect in a plan. Quantities echo what was measured so the
/// message is actionable on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanViolation {
    /// Granted access bandwidth exceeds the bandwidth budget.
    BandwidthBudgetExceeded { used: f64, budget: f64 },
    /// Admitted demand exceeds the backhaul capacity at the DBS position.
    BackhaulCapacityExceeded { used: f64, capacity: f64 },
    /// An admitted user's achievable rate falls short of its requirement.
    UserRateUnmet {
        index: usize,
        achieved: f64,
        required: f64,
    },
    /// The DBS altitude lies outside the permitted band.
    AltitudeOutOfBounds { altitude: f64, min: f64, max: f64 },
    /// The stated satisfied count disagrees with the selection bits.
    CountMismatch { stated: usize, actual: usize },
    /// Selection or bandwidth vector length disagrees with the user list.
    LengthMismatch { expected: usize, actual: usize },
}

impl core::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PlanViolation::BandwidthBudgetExceeded { used, budget } => write!(
                f,
                "granted bandwidth {used:.6e} Hz exceeds the budget {budget:.6e} Hz"
            ),
            PlanViolation::BackhaulCapacityExceeded { used, capacity } => write!(
                f,
                "admitted demand {used:.6e} bit/s exceeds backhaul capacity {capacity:.6e} bit/s"
            ),
            PlanViolation::UserRateUnmet {
                index,
                achieved,
                required,
            } => write!(
                f,
                "user {index} achieves {achieved:.6e} bit/s, below the required {required:.6e} bit/s"
            ),
            PlanViolation::AltitudeOutOfBounds { altitude, min, max } => write!(
                f,
                "altitude {altitude} m outside the permitted band [{min}, {max}] m"
            ),
            PlanViolation::CountMismatch { stated, actual } => write!(
                f,
                "stated satisfied count {stated} but the selection admits {actual}"
            ),
            PlanViolation::LengthMismatch { expected, actual } => write!(
                f,
                "plan vectors sized {actual} for a {expected}-user scenario"
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Admission at a fixed position
// ---------------------------------------------------------------------------

/// Knapsack admission at a fixed DBS position: GA over the instance whose
/// weights are each user's bandwidth need at that position and demand, with
/// the access budget and the backhaul capacity there as the two capacities.
///
/// Users whose bandwidth need cannot be evaluated or is non-finite at this
/// position are unservable there and stay unadmitted.
fn admit_at(
    users: &[UserProfile],
    position: &Position3D,
    mbs: &Position3D,
    config: &NetworkConfig,
    ga: &GaConfig,
) -> Result<(BitSolution, Vec<f64>), ModelError> {
    let capacity = models::fso_rate(mbs, position, &config.fso)?;
    let mut candidate_indices = Vec::new();
    let mut bandwidth_weights = Vec::new();
    let mut rate_weights = Vec::new();
    let mut all_bandwidths = vec![0.0; users.len()];
    for (i, user) in users.iter().enumerate() {
        let Ok(pathloss) = models::average_pathloss_db(position, user, &config.access) else {
            continue;
        };
        let Ok(need) = models::required_bandwidth(user, pathloss, &config.access) else {
            continue;
        };
        if !(need.is_finite() && need > 0.0) {
            continue;
        }
        candidate_indices.push(i);
        bandwidth_weights.push(need);
        rate_weights.push(user.rate_requirement);
        all_bandwidths[i] = need;
    }

    let instance = KnapsackInstance::new(
        bandwidth_weights,
        rate_weights,
        config.access.total_bandwidth,
        capacity,
    );
    let admitted = knapsack::run_ga(&instance, ga);

    let mut selection = BitSolution::zeros(users.len());
    let mut granted = vec![0.0; users.len()];
    for (slot, &index) in candidate_indices.iter().enumerate() {
        if admitted.bits[slot] {
            selection.bits[index] = true;
            granted[index] = all_bandwidths[index];
        }
    }
    Ok((selection, granted))
}

fn snapshot(
    position: Position3D,
    selection: &BitSolution,
    granted: &[f64],
    utilization: UtilizationPair,
) -> BroadPlan {
    BroadPlan {
        dbs_position: position,
        selection: selection.clone(),
        per_user_bandwidth: granted.to_vec(),
        satisfied_count: selection.count(),
        utilization,
        iterations: 0,
    }
}

/// Admission and utilization at one fixed DBS position, packaged as a
/// deployable plan. Fixed-position baselines are searches over this.
pub fn plan_at(
    position: &Position3D,
    users: &[UserProfile],
    mbs: &Position3D,
    config: &NetworkConfig,
    ga: &GaConfig,
) -> Result<BroadPlan, BroadError> {
    let fail = |kind| BroadError { kind, best: None };
    if let Err(e) = config.validate() {
        return Err(fail(BroadErrorKind::Model(e)));
    }
    let position = Position3D::new(position.x, position.y, config.altitude.clamp(position.h));
    let (selection, granted) = admit_at(users, &position, mbs, config, ga)
        .map_err(|e| fail(BroadErrorKind::Model(e)))?;
    let utilization = if selection.count() == 0 {
        UtilizationPair::ZERO
    } else {
        let problem = PlacementProblem::new(users, &selection, *mbs, config);
        sqp::path_utilization(&position, &problem)
            .map_err(|e| fail(BroadErrorKind::Placement(e)))?
    };
    let mut plan = snapshot(position, &selection, &granted, utilization);
    plan.iterations = 1;
    Ok(plan)
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

/// Alternates admission and placement from `initial` until the satisfied
/// count stops increasing (or the safety cap), returning the plan of the
/// best iterate. Each iteration's GA is re-seeded with
/// `ga.rng_seed + iteration index` so iterations explore independently while
/// the whole run stays deterministic. `nu` is the placement solver's
/// ς-step tolerance.
pub fn run_broad(
    users: &[UserProfile],
    mbs: &Position3D,
    config: &NetworkConfig,
    ga: &GaConfig,
    nu: f64,
    initial: &Position3D,
    mut trace: Option<BroadTrace<'_>>,
) -> Result<BroadPlan, BroadError> {
    let fail_model = |e: ModelError, best: Option<BroadPlan>| BroadError {
        kind: BroadErrorKind::Model(e),
        best,
    };
    if let Err(e) = config.validate() {
        return Err(fail_model(e, None));
    }

    let mut position = Position3D::new(initial.x, initial.y, config.altitude.clamp(initial.h));
    let mut best: Option<BroadPlan> = None;
    let mut best_count = 0usize;
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        let ga_here = GaConfig {
            rng_seed: ga.rng_seed.wrapping_add((iterations - 1) as u64),
            ..*ga
        };
        let (selection, granted) = match admit_at(users, &position, mbs, config, &ga_here) {
            Ok(v) => v,
            Err(e) => return Err(fail_model(e, best)),
        };
        let count = selection.count();
        let utilization = if count == 0 {
            UtilizationPair::ZERO
        } else {
            let problem = PlacementProblem::new(users, &selection, *mbs, config);
            match sqp::path_utilization(&position, &problem) {
                Ok(pair) => pair,
                Err(e) => {
                    return Err(BroadError {
                        kind: BroadErrorKind::Placement(e),
                        best,
                    })
                }
            }
        };

        let improved = count > best_count || best.is_none();
        if improved {
            best_count = best_count.max(count);
            best = Some(snapshot(position, &selection, &granted, utilization));
        }

        if let Some(sink) = trace.as_mut() {
            sink(&BroadIterate {
                iteration: iterations,
                position,
                satisfied_count: count,
                best_count,
                utilization,
            });
        }

        if !improved || iterations >= MAX_BROAD_ITERATIONS || count == 0 {
            break;
        }

        // Re-place the DBS for the admitted set; the next admission then
        // re-evaluates bandwidth needs and capacity at the new position.
        let problem = PlacementProblem::new(users, &selection, *mbs, config);
        match sqp::sqp_solve(&position, &problem, nu, None) {
            Ok(solution) => position = solution.position,
            Err(e) => {
                return Err(BroadError {
                    kind: BroadErrorKind::Placement(e),
                    best,
                })
            }
        }
    }

    let mut plan = best.expect("first iteration always records a plan");
    plan.iterations = iterations;
    Ok(plan)
}

// ---------------------------------------------------------------------------
// Plan audit
// ---------------------------------------------------------------------------

/// Audits a plan against every deployment constraint: bandwidth budget,
/// backhaul capacity at the plan's position, each admitted user's rate,
/// altitude bounds, and internal consistency. Empty iff the plan is sound
/// within `1e-9` relative slack.
pub fn validate_plan(
    plan: &BroadPlan,
    users: &[UserProfile],
    mbs: &Position3D,
    config: &NetworkConfig,
) -> Vec<PlanViolation> {
    let mut violations = Vec::new();
    if plan.selection.len() != users.len() || plan.per_user_bandwidth.len() != users.len() {
        let actual = if plan.selection.len() != users.len() {
            plan.selection.len()
        } else {
            plan.per_user_bandwidth.len()
        };
        violations.push(PlanViolation::LengthMismatch {
            expected: users.len(),
            actual,
        });
        return violations;
    }

    let actual_count = plan.selection.count();
    if plan.satisfied_count != actual_count {
        violations.push(PlanViolation::CountMismatch {
            stated: plan.satisfied_count,
            actual: actual_count,
        });
    }

    let bounds = &config.altitude;
    let h = plan.dbs_position.h;
    let altitude_slack = AUDIT_SLACK * bounds.max.abs().max(1.0);
    if h < bounds.min - altitude_slack || h > bounds.max + altitude_slack {
        violations.push(PlanViolation::AltitudeOutOfBounds {
            altitude: h,
            min: bounds.min,
            max: bounds.max,
        });
    }

    let mut used_bandwidth = 0.0;
    let mut admitted_demand = 0.0;
    for (i, user) in users.iter().enumerate() {
        if !plan.selection.bits[i] {
            continue;
        }
        let grant = plan.per_user_bandwidth[i];
        used_bandwidth += grant;
        admitted_demand += user.rate_requirement;
        let achieved = match models::average_pathloss_db(&plan.dbs_position, user, &config.access)
        {
            Ok(pathloss) => models::access_rate(grant, pathloss, &config.access),
            Err(_) => 0.0,
        };
        if achieved < user.rate_requirement * (1.0 - AUDIT_SLACK) {
            violations.push(PlanViolation::UserRateUnmet {
                index: i,
                achieved,
                required: user.rate_requirement,
            });
        }
    }

    let budget = config.access.total_bandwidth;
    if used_bandwidth > budget * (1.0 + AUDIT_SLACK) {
        violations.push(PlanViolation::BandwidthBudgetExceeded {
            used: used_bandwidth,
            budget,
        });
    }

    let capacity = models::fso_rate(mbs, &plan.dbs_position, &config.fso).unwrap_or(0.0);
    if admitted_demand > capacity * (1.0 + AUDIT_SLACK) {
        violations.push(PlanViolation::BackhaulCapacityExceeded {
            used: admitted_demand,
            capacity,
        });
    }

    violations
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
