//! DBS placement for a fixed served set: minimize the worse of backhaul and
//! access utilization over (x, y, h) by sequential quadratic programming.
//!
//! The epigraph form introduces ς bounding both utilizations from above;
//! each iteration linearizes the five constraints, solves a convex QP
//! (BFGS Hessian model, active-set inner solver), damps the step with a
//! backtracking line search on an ℓ1 merit function, and stops once the QP's
//! ς-step falls below the tolerance or the KKT residuals vanish.
//!
//! The solver's 4-vector is (x, y, h, ς) with coordinates in kilometers:
//! utilizations change by O(1) per kilometer, so the identity initial
//! Hessian is well-scaled and the first QP steps are meaningful. Positions
//! in the public API are meters; conversion happens at the boundary.

use crate::knapsack::BitSolution;
use crate::math;
use crate::models::{self, ModelError, NetworkConfig, Position3D, UserProfile};
use crate::qp::{self, QpError, QpSubproblem};

const METERS_PER_KM: f64 = 1000.0;
const MAX_SQP_ITERATIONS: usize = 200;
/// Weight of constraint violations in the line-search merit function.
const MERIT_PENALTY: f64 = 10.0;
/// KKT residual tolerance for declaring the outer problem solved.
const KKT_TOLERANCE: f64 = 1.0e-4;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqpError {
    /// The backhaul link delivers no capacity at an evaluation point.
    ZeroBackhaulCapacity,
    /// A model evaluation failed (see the wrapped error).
    Model(ModelError),
    /// A finite-difference probe produced a non-finite value.
    NonFiniteEvaluation,
    /// The inner QP failed (see the wrapped error).
    Qp(QpError),
}

impl core::fmt::Display for SqpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SqpError::ZeroBackhaulCapacity => write!(f, "backhaul capacity is zero"),
            SqpError::Model(e) => write!(f, "model evaluation failed: {e}"),
            SqpError::NonFiniteEvaluation => write!(f, "non-finite evaluation"),
            SqpError::Qp(e) => write!(f, "placement QP failed: {e}"),
        }
    }
}

impl From<ModelError> for SqpError {
    fn from(e: ModelError) -> Self {
        SqpError::Model(e)
    }
}

/// Load on the two hops of the relay path, each as used/available.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UtilizationPair {
    /// Σ selected demand / backhaul capacity.
    pub backhaul: f64,
    /// Σ selected bandwidth / access bandwidth budget.
    pub access: f64,
}

impl UtilizationPair {
    pub const ZERO: Self = Self {
        backhaul: 0.0,
        access: 0.0,
    };

    /// The placement objective: the worse of the two utilizations.
    pub fn max_utilization(&self) -> f64 {
        self.backhaul.max(self.access)
    }
}

/// Everything the placement solver needs besides the DBS position.
#[derive(Debug, Clone, Copy)]
pub struct PlacementProblem<'a> {
    pub users: &'a [UserProfile],
    /// Served-set indicator, one bit per user.
    pub selection: &'a BitSolution,
    pub mbs: Position3D,
    pub config: &'a NetworkConfig,
}

impl<'a> PlacementProblem<'a> {
    pub fn new(
        users: &'a [UserProfile],
        selection: &'a BitSolution,
        mbs: Position3D,
        config: &'a NetworkConfig,
    ) -> Self {
        debug_assert_eq!(users.len(), selection.len());
        Self {
            users,
            selection,
            mbs,
            config,
        }
    }
}

/// One SQP iterate: solver-space point (x, y, h in km; ς), the multiplier
/// estimates of the five constraints, and the BFGS Hessian model.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementIterate {
    pub point: [f64; 4],
    pub multipliers: [f64; 5],
    pub hessian: [[f64; 4]; 4],
}

impl PlacementIterate {
    /// Fresh iterate at `point`: identity Hessian, zero multipliers.
    pub fn fresh(point: [f64; 4]) -> Self {
        Self {
            point,
            multipliers: [0.0; 5],
            hessian: identity(),
        }
    }
}

/// Per-iteration trace record (positions back in meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqpIterate {
    pub iteration: usize,
    pub position: Position3D,
    pub varsigma: f64,
    pub merit: f64,
    /// Euclidean norm of the accepted step in solver space.
    pub step_norm: f64,
}

/// Trace sink invoked once per iteration (plus once for the start point).
pub type SqpTrace<'a> = &'a mut dyn FnMut(&SqpIterate);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqpSolution {
    pub position: Position3D,
    pub utilization: UtilizationPair,
    /// max(backhaul, access) at `position`.
    pub varsigma: f64,
    pub iterations: usize,
    /// False iff the iteration cap stopped the solve.
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

fn identity() -> [[f64; 4]; 4] {
    let mut h = [[0.0; 4]; 4];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    h
}

fn position_of(u: &[f64; 4]) -> Position3D {
    Position3D::new(
        u[0] * METERS_PER_KM,
        u[1] * METERS_PER_KM,
        u[2] * METERS_PER_KM,
    )
}

/// Both utilizations of the relay path with the DBS at `dbs`.
///
/// backhaul = Σ selected φ_i / r_fso(dbs); access = Σ selected b_i(dbs) / B.
pub fn path_utilization(
    dbs: &Position3D,
    problem: &PlacementProblem,
) -> Result<UtilizationPair, SqpError> {
    let config = problem.config;
    let r_fso = models::fso_rate(&problem.mbs, dbs, &config.fso)?;
    if r_fso <= 0.0 || !r_fso.is_finite() {
        return Err(SqpError::ZeroBackhaulCapacity);
    }
    let mut demand = 0.0;
    let mut bandwidth = 0.0;
    for (user, selected) in problem.users.iter().zip(&problem.selection.bits) {
        if !*selected {
            continue;
        }
        let pathloss = models::average_pathloss_db(dbs, user, &config.access)?;
        bandwidth += models::required_bandwidth(user, pathloss, &config.access)?;
        demand += user.rate_requirement;
    }
    Ok(UtilizationPair {
        backhaul: demand / r_fso,
        access: bandwidth / config.access.total_bandwidth,
    })
}

/// The five placement constraints at solver point `u`, in order:
/// (ς − backhaul, ς − access, 1 − ς, h_max − h, h − h_min); feasible iff all
/// ≥ 0. Altitude entries are in kilometers like the point itself. A failed
/// utilization evaluation maps to −∞ in the first two entries, which the
/// line search rejects naturally.
pub fn constraint_values(u: &[f64; 4], problem: &PlacementProblem) -> [f64; 5] {
    let bounds = &problem.config.altitude;
    let h_min_km = bounds.min / METERS_PER_KM;
    let h_max_km = bounds.max / METERS_PER_KM;
    let (backhaul, access) = match path_utilization(&position_of(u), problem) {
        Ok(pair) => (pair.backhaul, pair.access),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    [
        u[3] - backhaul,
        u[3] - access,
        1.0 - u[3],
        h_max_km - u[2],
        u[2] - h_min_km,
    ]
}

/// Central-difference gradient with per-coordinate step
/// max(1e−4·|u_k|, 1e−6). In solver units the floor is one millimeter for
/// coordinates and 1e−6 for ς.
pub fn numerical_gradient<F: Fn(&[f64; 4]) -> f64>(
    f: F,
    u: &[f64; 4],
) -> Result<[f64; 4], SqpError> {
    let mut grad = [0.0; 4];
    for k in 0..4 {
        let step = (1.0e-4 * math::abs(u[k])).max(1.0e-6);
        let mut up = *u;
        up[k] += step;
        let mut down = *u;
        down[k] -= step;
        let (fu, fd) = (f(&up), f(&down));
        if !fu.is_finite() || !fd.is_finite() {
            return Err(SqpError::NonFiniteEvaluation);
        }
        grad[k] = (fu - fd) / (2.0 * step);
    }
    Ok(grad)
}

/// Constraint values and Jacobian rows at `u`. The two utilization rows use
/// one joint finite-difference pass; the last three rows are exact.
fn constraint_rows(
    u: &[f64; 4],
    problem: &PlacementProblem,
) -> Result<([[f64; 4]; 5], [f64; 5]), SqpError> {
    let values = constraint_values(u, problem);
    if !values.iter().all(|v| v.is_finite()) {
        return Err(SqpError::NonFiniteEvaluation);
    }

    let mut grad_backhaul = [0.0; 4];
    let mut grad_access = [0.0; 4];
    for k in 0..3 {
        let step = (1.0e-4 * math::abs(u[k])).max(1.0e-6);
        let mut up = *u;
        up[k] += step;
        let mut down = *u;
        down[k] -= step;
        let hi = path_utilization(&position_of(&up), problem)
            .map_err(|_| SqpError::NonFiniteEvaluation)?;
        let lo = path_utilization(&position_of(&down), problem)
            .map_err(|_| SqpError::NonFiniteEvaluation)?;
        if !(hi.backhaul.is_finite()
            && hi.access.is_finite()
            && lo.backhaul.is_finite()
            && lo.access.is_finite())
        {
            return Err(SqpError::NonFiniteEvaluation);
        }
        grad_backhaul[k] = (hi.backhaul - lo.backhaul) / (2.0 * step);
        grad_access[k] = (hi.access - lo.access) / (2.0 * step);
    }

    let normals = [
        [
            -grad_backhaul[0],
            -grad_backhaul[1],
            -grad_backhaul[2],
            1.0,
        ],
        [-grad_access[0], -grad_access[1], -grad_access[2], 1.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    Ok((normals, values))
}

/// QP around the iterate: objective ½ΔuᵀHΔu + Δς, constraints
/// c_j(u) + ∇c_j(u)ᵀΔu ≥ 0 in [`constraint_values`] order.
pub fn build_qp(
    state: &PlacementIterate,
    problem: &PlacementProblem,
) -> Result<QpSubproblem, SqpError> {
    let (normals, values) = constraint_rows(&state.point, problem)?;
    Ok(QpSubproblem {
        hessian: state.hessian,
        gradient: [0.0, 0.0, 0.0, 1.0],
        constraint_normals: normals,
        constraint_offsets: values,
    })
}

/// Damped BFGS update of the Hessian model.
///
/// q = ∇L(u_new, m_new) − ∇L(u_old, m_new); when qᵀΔu < 0.2·ΔuᵀHΔu, q is
/// interpolated toward HΔu (Powell damping) so the update stays positive
/// definite. A zero step, or an update that loses positive definiteness to
/// roundoff, returns H unchanged.
pub fn bfgs_update(
    h: &[[f64; 4]; 4],
    delta_u: &[f64; 4],
    grad_l_new: &[f64; 4],
    grad_l_old: &[f64; 4],
) -> [[f64; 4]; 4] {
    let mut hs = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            hs[i] += h[i][j] * delta_u[j];
        }
    }
    let shs: f64 = (0..4).map(|i| delta_u[i] * hs[i]).sum();
    if !(shs > 1.0e-300) {
        return *h;
    }

    let mut q = [0.0; 4];
    for i in 0..4 {
        q[i] = grad_l_new[i] - grad_l_old[i];
    }
    let mut qs: f64 = (0..4).map(|i| q[i] * delta_u[i]).sum();
    if qs < 0.2 * shs {
        let theta = 0.8 * shs / (shs - qs);
        for i in 0..4 {
            q[i] = theta * q[i] + (1.0 - theta) * hs[i];
        }
        qs = (0..4).map(|i| q[i] * delta_u[i]).sum();
        if !(qs > 0.0) {
            return *h;
        }
    }

    let mut updated = *h;
    for i in 0..4 {
        for j in 0..4 {
            updated[i][j] += q[i] * q[j] / qs - hs[i] * hs[j] / shs;
        }
    }
    // Symmetrize away roundoff, then verify positive definiteness.
    for i in 0..4 {
        for j in (i + 1)..4 {
            let avg = 0.5 * (updated[i][j] + updated[j][i]);
            updated[i][j] = avg;
            updated[j][i] = avg;
        }
    }
    if is_positive_definite(&updated) {
        updated
    } else {
        *h
    }
}

/// Cholesky feasibility test.
fn is_positive_definite(m: &[[f64; 4]; 4]) -> bool {
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 1.0e-14 {
                    return false;
                }
                l[i][i] = math::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    true
}

fn merit_of(sigma: f64, values: &[f64; 5]) -> f64 {
    let mut penalty = 0.0;
    for v in values {
        if *v < 0.0 {
            penalty -= v;
        }
    }
    sigma + MERIT_PENALTY * penalty
}

/// ∇_u L(u, m) = e_ς − Σ_j m_j ∇c_j(u), from Jacobian rows at u.
fn lagrangian_gradient(normals: &[[f64; 4]; 5], multipliers: &[f64; 5]) -> [f64; 4] {
    let mut grad = [0.0, 0.0, 0.0, 1.0];
    for (row, m) in normals.iter().zip(multipliers) {
        for i in 0..4 {
            grad[i] -= m * row[i];
        }
    }
    grad
}

/// True when every constraint, including the ς ≤ 1 cap, holds at the point.
fn fully_feasible(values: &[f64; 5]) -> bool {
    values.iter().all(|v| *v >= -1.0e-9)
}

/// Replaces the ς ≤ 1 row with an always-satisfied placeholder, the row set
/// the solver actually works with while the iterate is infeasible.
fn masked_rows(normals: &[[f64; 4]; 5], values: &[f64; 5]) -> ([[f64; 4]; 5], [f64; 5]) {
    let mut n = *normals;
    let mut v = *values;
    n[2] = [0.0; 4];
    v[2] = 1.0;
    (n, v)
}

fn kkt_satisfied(normals: &[[f64; 4]; 5], values: &[f64; 5], multipliers: &[f64; 5]) -> bool {
    let grad = lagrangian_gradient(normals, multipliers);
    let stationarity = grad.iter().fold(0.0f64, |acc, g| acc.max(math::abs(*g)));
    if stationarity > KKT_TOLERANCE {
        return false;
    }
    for (v, m) in values.iter().zip(multipliers) {
        if *v < -KKT_TOLERANCE || math::abs(m * v) > KKT_TOLERANCE {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Minimizes max(backhaul, access) utilization over the DBS position.
///
/// Starts from `start` (altitude projected into bounds), stops when the QP's
/// ς-step magnitude is at most `nu`, the KKT residuals of the outer problem
/// fall below 1e−4, or no step achieves merit descent; the iteration cap
/// clears `converged` instead of failing. Returns the best-utilization
/// iterate seen, so the result is never worse than the start. Deterministic.
///
/// An infeasible iterate (the served set over-uses a link, or ς > 1) drops
/// the ς ≤ 1 row from the QP; the merit function keeps penalizing the
/// violation. The row returns once the iterate satisfies every constraint,
/// so on genuinely oversubscribed sets the solver keeps driving the true
/// max-utilization down instead of parking ς at the cap.
pub fn sqp_solve(
    start: &Position3D,
    problem: &PlacementProblem,
    nu: f64,
    mut trace: Option<SqpTrace<'_>>,
) -> Result<SqpSolution, SqpError> {
    let bounds = &problem.config.altitude;
    let start = Position3D::new(start.x, start.y, bounds.clamp(start.h));
    let utils0 = path_utilization(&start, problem)?;
    let sigma0 = utils0.max_utilization();

    let mut state = PlacementIterate::fresh([
        start.x / METERS_PER_KM,
        start.y / METERS_PER_KM,
        start.h / METERS_PER_KM,
        sigma0,
    ]);
    let (mut normals, mut values) = constraint_rows(&state.point, problem)?;
    let mut merit = merit_of(state.point[3], &values);

    let mut best_point = state.point;
    let mut best_utils = utils0;
    let mut converged = false;
    let mut iterations = 0;

    if let Some(sink) = trace.as_mut() {
        sink(&SqpIterate {
            iteration: 0,
            position: position_of(&state.point),
            varsigma: state.point[3],
            merit,
            step_norm: 0.0,
        });
    }

    let h_lo = bounds.min / METERS_PER_KM;
    let h_hi = bounds.max / METERS_PER_KM;

    for t in 0..MAX_SQP_ITERATIONS {
        iterations = t + 1;

        // The ς ≤ 1 row stays out of the QP until the iterate satisfies
        // every constraint. Restoring it on ς alone would let a too-eager
        // linearized step pin ς at the cap while the true utilizations
        // still exceed it, stalling the solve short of the real optimum.
        let cap_enabled = fully_feasible(&values);
        let make_qp = |hessian: [[f64; 4]; 4], with_cap: bool| {
            let mut qp = QpSubproblem {
                hessian,
                gradient: [0.0, 0.0, 0.0, 1.0],
                constraint_normals: normals,
                constraint_offsets: values,
            };
            if !with_cap {
                qp.constraint_normals[2] = [0.0; 4];
                qp.constraint_offsets[2] = 1.0;
            }
            qp
        };
        let (step, multipliers) = loop {
            let attempt = match qp::active_set_solve(&make_qp(state.hessian, cap_enabled)) {
                Err(QpError::Infeasible) if cap_enabled => {
                    qp::active_set_solve(&make_qp(state.hessian, false))
                }
                other => other,
            };
            match attempt {
                Ok(v) => break v,
                // A degenerate Hessian model is recoverable: restart the
                // curvature estimate rather than abandoning the solve.
                Err(QpError::SingularKkt) if state.hessian != identity() => {
                    state.hessian = identity();
                }
                Err(e) => return Err(SqpError::Qp(e)),
            }
        };
        let delta_sigma = step[3];

        // Backtracking line search: accept the longest halved step that
        // does not increase the merit function.
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let mut trial = state.point;
            for i in 0..4 {
                trial[i] += alpha * step[i];
            }
            // The altitude rows are exact in the QP, but its solution
            // tolerance can leak violations of a few 1e-12; project so the
            // returned position honors the bounds bit-exactly.
            trial[2] = trial[2].clamp(h_lo, h_hi);
            let trial_values = constraint_values(&trial, problem);
            let trial_merit = merit_of(trial[3], &trial_values);
            if trial_merit.is_finite() && trial_merit <= merit + 1.0e-12 * (1.0 + math::abs(merit))
            {
                accepted = Some((trial, trial_merit));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, trial_merit)) = accepted else {
            // No descent at line-search resolution: stationary for our
            // purposes.
            converged = true;
            break;
        };

        let (new_normals, new_values) = constraint_rows(&trial, problem)?;
        let mut actual_step = [0.0; 4];
        let mut step_scale = 0.0f64;
        for i in 0..4 {
            actual_step[i] = trial[i] - state.point[i];
            step_scale = step_scale.max(math::abs(actual_step[i]));
        }
        let grad_old = lagrangian_gradient(&normals, &multipliers);
        let grad_new = lagrangian_gradient(&new_normals, &multipliers);
        // Steps at or below the finite-difference probe size carry no
        // curvature signal, only differencing noise; updating on them
        // compounds garbage into the Hessian model.
        let point_scale = state.point.iter().fold(0.0f64, |acc, v| acc.max(math::abs(*v)));
        if step_scale > 1.0e-5 * (1.0 + point_scale) {
            state.hessian = bfgs_update(&state.hessian, &actual_step, &grad_new, &grad_old);
        }
        state.point = trial;
        state.multipliers = multipliers;
        normals = new_normals;
        values = new_values;
        merit = trial_merit;

        let trial_utils = UtilizationPair {
            backhaul: trial[3] - values[0],
            access: trial[3] - values[1],
        };
        if trial_utils.max_utilization() < best_utils.max_utilization() {
            best_utils = trial_utils;
            best_point = trial;
        }

        if let Some(sink) = trace.as_mut() {
            let norm = math::sqrt((0..4).map(|i| actual_step[i] * actual_step[i]).sum());
            sink(&SqpIterate {
                iteration: iterations,
                position: position_of(&state.point),
                varsigma: state.point[3],
                merit,
                step_norm: norm,
            });
        }

        // Convergence is judged against the row set in force: when the cap
        // is masked (oversubscribed set, ς* > 1), its structural violation
        // must not keep the solve spinning at the relaxed optimum. A tiny
        // ς-step only counts once the working rows are (near-)satisfied;
        // otherwise it can fire mid-descent while ς still trails the true
        // utilizations.
        let (term_normals, term_values) = if fully_feasible(&values) {
            (normals, values)
        } else {
            masked_rows(&normals, &values)
        };
        let violation = term_values.iter().fold(0.0f64, |acc, v| acc.max(-*v));
        let near_feasible = violation <= 1.0e-6 * (1.0 + math::abs(state.point[3]));
        if (math::abs(delta_sigma) <= nu && near_feasible)
            || kkt_satisfied(&term_normals, &term_values, &multipliers)
        {
            converged = true;
            break;
        }
    }

    Ok(SqpSolution {
        position: position_of(&best_point),
        utilization: best_utils,
        varsigma: best_utils.max_utilization(),
        iterations,
        converged,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
