//! Fixed-position baselines: both search a predetermined candidate set with
//! the same admission machinery the main loop uses, differing only in which
//! positions they may consider.
//!
//! Every candidate is admitted with the same GA seed, so the scan measures
//! position effects rather than harvesting sampling luck across re-draws.

use crate::scenario::Scenario;
use broad_core::{plan_at, BroadError, BroadPlan, GaConfig, Position3D};

/// Altitude candidates for the center-fixed baseline.
const CENTER_ALTITUDE_POINTS: usize = 101;

/// Altitude candidates per block for the grid-search baseline.
const GRID_ALTITUDE_POINTS: usize = 11;

/// Keeps `candidate` when it beats the incumbent's satisfied count;
/// ties keep the incumbent, so earlier candidates win deterministically.
fn keep_best(best: &mut Option<BroadPlan>, candidate: BroadPlan) {
    let better = match best {
        Some(plan) => candidate.satisfied_count > plan.satisfied_count,
        None => true,
    };
    if better {
        *best = Some(candidate);
    }
}

/// Access-only placement: the DBS hovers over the PoI center and only its
/// altitude is searched (evenly spaced candidates spanning the permitted
/// band); the best-count plan wins.
pub fn baseline_center_fixed(
    scenario: &Scenario,
    ga: &GaConfig,
) -> Result<BroadPlan, BroadError> {
    let bounds = &scenario.config.altitude;
    let mut best = None;
    for i in 0..CENTER_ALTITUDE_POINTS {
        let h = bounds.min
            + (bounds.max - bounds.min) * i as f64 / (CENTER_ALTITUDE_POINTS - 1) as f64;
        let position = Position3D::new(scenario.poi_center.0, scenario.poi_center.1, h);
        let plan = plan_at(&position, &scenario.users, &scenario.mbs, &scenario.config, ga)?;
        keep_best(&mut best, plan);
    }
    Ok(best.expect("candidate list is never empty"))
}

/// Exhaustive block search restricted to the PoI footprint: the PoI is cut
/// into `blocks` × `blocks` equal cells and the GA admission is evaluated at
/// every cell center × altitude candidate; the best plan wins.
pub fn baseline_grid_search(
    scenario: &Scenario,
    blocks: usize,
    ga: &GaConfig,
) -> Result<BroadPlan, BroadError> {
    assert!(blocks >= 1, "at least one block per axis");
    let bounds = &scenario.config.altitude;
    let (cx, cy) = scenario.poi_center;
    let (width, depth) = scenario.poi_size;
    let mut best = None;
    for ix in 0..blocks {
        let x = cx - width / 2.0 + width * (ix as f64 + 0.5) / blocks as f64;
        for iy in 0..blocks {
            let y = cy - depth / 2.0 + depth * (iy as f64 + 0.5) / blocks as f64;
            for ih in 0..GRID_ALTITUDE_POINTS {
                let h = bounds.min
                    + (bounds.max - bounds.min) * ih as f64 / (GRID_ALTITUDE_POINTS - 1) as f64;
                let position = Position3D::new(x, y, h);
                let plan = plan_at(
                    &position,
                    &scenario.users,
                    &scenario.mbs,
                    &scenario.config,
                    ga,
                )?;
                keep_best(&mut best, plan);
            }
        }
    }
    Ok(best.expect("candidate list is never empty"))
}
