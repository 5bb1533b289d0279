//! Small dense convex quadratic programs solved by a primal active-set
//! method:
//!
//! minimize ½·xᵀHx + gᵀx  subject to  A·x + c ≥ 0,  H symmetric positive
//! definite. Equality-constrained subproblems are solved through an LU
//! factorization of the KKT system; an infeasible start is handled by a
//! regularized phase-1 QP in one extra slack variable.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Placement QP shape: 4 variables (x, y, h, ς), 5 linearized constraints.
pub const PLACEMENT_VARS: usize = 4;
/// See [`PLACEMENT_VARS`].
pub const PLACEMENT_CONSTRAINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpError {
    /// The constraint polyhedron is empty.
    Infeasible,
    /// Active-set iteration cap exceeded.
    IterationLimit,
    /// A KKT system became numerically singular.
    SingularKkt,
}

impl core::fmt::Display for QpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            QpError::Infeasible => write!(f, "constraint polyhedron is empty"),
            QpError::IterationLimit => write!(f, "active-set iteration cap exceeded"),
            QpError::SingularKkt => write!(f, "singular KKT system"),
        }
    }
}

/// One placement QP: objective ½·ΔuᵀHΔu + gᵀΔu over the step Δu, with
/// linearized constraints (rows of `constraint_normals`)·Δu +
/// `constraint_offsets` ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSubproblem {
    pub hessian: [[f64; PLACEMENT_VARS]; PLACEMENT_VARS],
    pub gradient: [f64; PLACEMENT_VARS],
    pub constraint_normals: [[f64; PLACEMENT_VARS]; PLACEMENT_CONSTRAINTS],
    pub constraint_offsets: [f64; PLACEMENT_CONSTRAINTS],
}

/// Solves the placement QP to KKT optimality.
///
/// Returns the minimizing step and one non-negative multiplier per
/// constraint row (zero for rows inactive at the optimum).
pub fn active_set_solve(
    qp: &QpSubproblem,
) -> Result<([f64; PLACEMENT_VARS], [f64; PLACEMENT_CONSTRAINTS]), QpError> {
    let n = PLACEMENT_VARS;
    let m = PLACEMENT_CONSTRAINTS;
    let mut h = [0.0; PLACEMENT_VARS * PLACEMENT_VARS];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = qp.hessian[i][j];
        }
    }
    let mut a = [0.0; PLACEMENT_CONSTRAINTS * PLACEMENT_VARS];
    for r in 0..m {
        for j in 0..n {
            a[r * n + j] = qp.constraint_normals[r][j];
        }
    }
    let x0 = feasible_point(n, m, &a, &qp.constraint_offsets)?;
    let (x, mu) = solve_from_feasible(n, m, &h, &qp.gradient, &a, &qp.constraint_offsets, &x0)?;
    let mut step = [0.0; PLACEMENT_VARS];
    step.copy_from_slice(&x);
    let mut multipliers = [0.0; PLACEMENT_CONSTRAINTS];
    multipliers.copy_from_slice(&mu);
    Ok((step, multipliers))
}

// ---------------------------------------------------------------------------
// Engine (dimension-generic, row-major slices)
// ---------------------------------------------------------------------------

const MAX_ITERATIONS: usize = 100;

/// In-place Gaussian elimination with partial pivoting; `matrix` is n×n
/// row-major, `rhs` becomes the solution.
fn lu_solve(matrix: &mut [f64], rhs: &mut [f64], n: usize) -> Result<(), QpError> {
    debug_assert_eq!(matrix.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    let scale = matrix
        .iter()
        .fold(0.0f64, |acc, v| acc.max(math::abs(*v)))
        .max(1.0e-300);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = math::abs(matrix[col * n + col]);
        for row in (col + 1)..n {
            let mag = math::abs(matrix[row * n + col]);
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag <= 1.0e-14 * scale {
            return Err(QpError::SingularKkt);
        }
        if pivot_row != col {
            for j in 0..n {
                matrix.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = matrix[col * n + col];
        for row in (col + 1)..n {
            let factor = matrix[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                matrix[row * n + j] -= factor * matrix[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= matrix[row * n + j] * rhs[j];
        }
        rhs[row] = acc / matrix[row * n + row];
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(math::abs(*x)))
}

/// Solves the equality-constrained subproblem
///   min ½(x+p)ᵀH(x+p) + gᵀ(x+p)  s.t.  A_W·p = 0
/// for the step p and the working-set multipliers λ via the KKT system
///   [H  −A_Wᵀ][p]   [−(Hx + g)]
///   [A_W   0 ][λ] = [    0    ].
fn equality_step(
    n: usize,
    h: &[f64],
    g: &[f64],
    a: &[f64],
    working: &[usize],
    x: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), QpError> {
    let k = working.len();
    let dim = n + k;
    let mut kkt = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        for j in 0..n {
            kkt[i * dim + j] = h[i * n + j];
        }
        rhs[i] = -(dot(&h[i * n..(i + 1) * n], x) + g[i]);
    }
    for (slot, &row) in working.iter().enumerate() {
        for j in 0..n {
            kkt[j * dim + n + slot] = -a[row * n + j];
            kkt[(n + slot) * dim + j] = a[row * n + j];
        }
    }
    lu_solve(&mut kkt, &mut rhs, dim)?;
    let p = rhs[..n].to_vec();
    let lambda = rhs[n..].to_vec();
    Ok((p, lambda))
}

/// Primal active-set iteration from a feasible `x0`. Returns the optimum and
/// the full multiplier vector (zeros off the final active set).
fn solve_from_feasible(
    n: usize,
    m: usize,
    h: &[f64],
    g: &[f64],
    a: &[f64],
    c: &[f64],
    x0: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), QpError> {
    let mut x = x0.to_vec();
    let mut working: Vec<usize> = Vec::new();
    // True once x is exactly the working-set minimizer (an unblocked full
    // step lands there); the residual step p is then pure solver noise and
    // must not be re-tested against a norm threshold.
    let mut at_minimizer = false;

    for _ in 0..MAX_ITERATIONS {
        let (p, lambda) = equality_step(n, h, g, a, &working, &x)?;

        if at_minimizer || inf_norm(&p) <= 1.0e-11 * (1.0 + inf_norm(&x)) {
            // Stationary on the working set; check dual feasibility. The
            // tolerance scales with the multipliers so LU noise on
            // ill-conditioned systems cannot force spurious drops.
            let drop_tolerance = 1.0e-9 * (1.0 + inf_norm(&lambda));
            let (worst_slot, worst) = lambda
                .iter()
                .enumerate()
                .fold((usize::MAX, f64::INFINITY), |acc, (i, l)| {
                    if *l < acc.1 {
                        (i, *l)
                    } else {
                        acc
                    }
                });
            if worst >= -drop_tolerance {
                let mut mu = vec![0.0; m];
                for (slot, &row) in working.iter().enumerate() {
                    mu[row] = lambda[slot].max(0.0);
                }
                return Ok((x, mu));
            }
            working.remove(worst_slot);
            at_minimizer = false;
            continue;
        }

        // Ratio test: longest step along p keeping all rows feasible.
        let mut alpha = 1.0;
        let mut blocking = None;
        for row in 0..m {
            if working.contains(&row) {
                continue;
            }
            let direction = dot(&a[row * n..(row + 1) * n], &p);
            if direction >= 0.0 {
                continue;
            }
            let slack = (dot(&a[row * n..(row + 1) * n], &x) + c[row]).max(0.0);
            let ratio = slack / -direction;
            if ratio < alpha {
                alpha = ratio;
                blocking = Some(row);
            }
        }
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        match blocking {
            Some(row) => working.push(row),
            None => at_minimizer = true,
        }
    }
    Err(QpError::IterationLimit)
}

/// Finds a feasible point of A·x + c ≥ 0, or proves the polyhedron empty.
///
/// Uses a regularized phase-1 QP over (x, t): minimize t + ½ε(‖x‖² + t²)
/// subject to A_j·x + t + c_j ≥ 0, started from x = 0 with t large enough
/// to be strictly feasible. Any solution with max violation ≤ tolerance
/// yields the feasible x.
fn feasible_point(n: usize, m: usize, a: &[f64], c: &[f64]) -> Result<Vec<f64>, QpError> {
    let worst = c.iter().copied().fold(f64::INFINITY, f64::min);
    if worst >= 0.0 {
        return Ok(vec![0.0; n]);
    }

    const EPS: f64 = 1.0e-8;
    let n1 = n + 1;
    let mut h1 = vec![0.0; n1 * n1];
    for i in 0..n1 {
        h1[i * n1 + i] = EPS;
    }
    let mut g1 = vec![0.0; n1];
    g1[n] = 1.0;
    let mut a1 = vec![0.0; m * n1];
    for row in 0..m {
        a1[row * n1..row * n1 + n].copy_from_slice(&a[row * n..(row + 1) * n]);
        a1[row * n1 + n] = 1.0;
    }
    let mut x0 = vec![0.0; n1];
    x0[n] = -worst + 1.0;

    let (xt, _) = solve_from_feasible(n1, m, &h1, &g1, &a1, c, &x0)?;
    let x = xt[..n].to_vec();
    let scale = 1.0 + c.iter().fold(0.0f64, |acc, v| acc.max(math::abs(*v)));
    for row in 0..m {
        if dot(&a[row * n..(row + 1) * n], &x) + c[row] < -1.0e-8 * scale {
            return Err(QpError::Infeasible);
        }
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
