//! End-to-end acceptance gates. Eight timed criteria run sequentially in a
//! single test so wall-clock budgets are not distorted by parallel siblings;
//! each prints one PASS/FAIL line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use broad_core::qp::{active_set_solve, QpSubproblem};
use broad_core::{
    attenuation_gamma, brute_force, fso_rate, is_feasible, path_utilization, run_broad, run_ga,
    scattering_exponent_q, sqp_solve, validate_plan, AttenuationModel, BitSolution, BroadIterate,
    FsoLinkParams, GaConfig, KnapsackInstance, PlacementProblem, Position3D,
};
use broad_sim::{
    generate_scenario, results_to_string, run_sweep, Algorithm, OutputFormat, ScenarioSpec,
    SweepOptions, SweepSpec, SweepVariable, TrialResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

// ---------------------------------------------------------------------------
// Criterion 1: channel-model oracles
// ---------------------------------------------------------------------------

/// Independently coded scattering exponent, mirroring the piecewise rule.
fn oracle_q(v: f64) -> f64 {
    if v > 50.0 {
        1.6
    } else if v > 6.0 {
        1.3
    } else if v > 1.0 {
        0.16 * v + 0.34
    } else if v > 0.5 {
        v - 0.5
    } else {
        0.0
    }
}

/// Independently coded Kim attenuation, dB/km.
fn oracle_gamma(visibility_km: f64, wavelength_m: f64) -> f64 {
    let q = oracle_q(visibility_km);
    3.91 / visibility_km * (wavelength_m * 1.0e9 / 550.0).powf(-q)
}

/// Independently coded backhaul link budget, bit/s.
fn oracle_fso_rate(mbs: &Position3D, dbs: &Position3D, p: &FsoLinkParams, gamma: f64) -> f64 {
    let l_m = ((mbs.x - dbs.x).powi(2) + (mbs.y - dbs.y).powi(2) + (mbs.h - dbs.h).powi(2)).sqrt();
    let photon_energy = p.planck * 3.0e8 / p.wavelength;
    let numerator = p.tx_power
        * p.tx_efficiency
        * p.rx_efficiency
        * 10f64.powf(-gamma * (l_m / 1000.0) / 10.0)
        * p.aperture_diameter.powi(2);
    let denominator = std::f64::consts::PI
        * (p.divergence / 2.0).powi(2)
        * l_m.powi(2)
        * photon_energy
        * p.receiver_sensitivity;
    numerator / denominator
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0e-300)
}

fn criterion_1_model_oracles() {
    let table = [
        (0.3, 0.0),
        (0.5, 0.0),
        (0.75, 0.25),
        (1.0, 0.5),
        (3.0, 0.82),
        (6.0, 1.3),
        (10.0, 1.3),
        (50.0, 1.3),
        (60.0, 1.6),
    ];
    for (v, expected) in table {
        let q = scattering_exponent_q(v);
        assert!(
            q == oracle_q(v),
            "q({v}) = {q} differs from independent evaluation {}",
            oracle_q(v)
        );
        assert!(
            (q - expected).abs() <= 1.0e-12,
            "q({v}) = {q}, expected {expected}"
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for case in 0..10 {
        let params = FsoLinkParams {
            tx_power: rng.gen_range(1.0e-4..1.0e-2),
            tx_efficiency: rng.gen_range(0.5..1.0),
            rx_efficiency: rng.gen_range(0.5..1.0),
            aperture_diameter: rng.gen_range(0.01..0.10),
            divergence: rng.gen_range(1.0e-5..2.0e-3),
            wavelength: rng.gen_range(0.8e-6..1.8e-6),
            receiver_sensitivity: rng.gen_range(1.0e4..1.0e5),
            visibility_km: rng.gen_range(0.3..60.0),
            attenuation: AttenuationModel::FromVisibility,
            ..FsoLinkParams::default()
        };
        let mbs = Position3D::new(0.0, 0.0, 20.0);
        let dbs = Position3D::new(
            rng.gen_range(500.0..20_000.0),
            rng.gen_range(-3000.0..3000.0),
            rng.gen_range(50.0..500.0),
        );
        let gamma = attenuation_gamma(&params).unwrap();
        let gamma_oracle = oracle_gamma(params.visibility_km, params.wavelength);
        assert!(
            relative_gap(gamma, gamma_oracle) <= 1.0e-10,
            "case {case}: gamma {gamma} vs oracle {gamma_oracle}"
        );
        let rate = fso_rate(&mbs, &dbs, &params).unwrap();
        let rate_oracle = oracle_fso_rate(&mbs, &dbs, &params, gamma_oracle);
        assert!(
            relative_gap(rate, rate_oracle) <= 1.0e-10,
            "case {case}: rate {rate} vs oracle {rate_oracle}"
        );
    }
}

// ---------------------------------------------------------------------------
// Criterion 2: GA vs exhaustive knapsack optimum
// ---------------------------------------------------------------------------

fn criterion_2_knapsack() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let cases = 50;
    let mut exact = 0;
    let mut within_one = 0;
    for case in 0..cases {
        let n = 12;
        let bandwidth: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2e6..3.0e6)).collect();
        let rates: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5e6..8.0e6)).collect();
        let cap_b = bandwidth.iter().sum::<f64>() * rng.gen_range(0.3..0.8);
        let cap_r = rates.iter().sum::<f64>() * rng.gen_range(0.3..0.8);
        let inst = KnapsackInstance::new(bandwidth, rates, cap_b, cap_r);
        let cfg = GaConfig {
            rng_seed: case as u64,
            ..GaConfig::default()
        };
        let sol = run_ga(&inst, &cfg);
        assert!(
            is_feasible(&sol, &inst).unwrap(),
            "case {case}: GA output infeasible"
        );
        let best = brute_force(&inst).unwrap();
        let gap = best.count() - sol.count();
        if gap == 0 {
            exact += 1;
        }
        if gap <= 1 {
            within_one += 1;
        }
    }
    assert!(
        exact * 100 >= cases * 80,
        "GA exact on {exact}/{cases}, need 80%"
    );
    assert!(
        within_one * 100 >= cases * 98,
        "GA within one on {within_one}/{cases}, need 98%"
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: QP solver vs subset-enumeration oracle
// ---------------------------------------------------------------------------

const QN: usize = 4;
const QM: usize = 5;

/// Dense partial-pivot Gaussian elimination; None when near-singular.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1.0e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn qp_objective(qp: &QpSubproblem, x: &[f64; QN]) -> f64 {
    let mut value = 0.0;
    for i in 0..QN {
        value += qp.gradient[i] * x[i];
        for j in 0..QN {
            value += 0.5 * x[i] * qp.hessian[i][j] * x[j];
        }
    }
    value
}

fn qp_slack(qp: &QpSubproblem, x: &[f64; QN], row: usize) -> f64 {
    let mut s = qp.constraint_offsets[row];
    for j in 0..QN {
        s += qp.constraint_normals[row][j] * x[j];
    }
    s
}

/// Exact optimum: every active subset's equality-KKT candidate that is
/// feasible is a feasible point, so the least objective among them (the
/// true active set included) is the constrained minimum.
fn qp_subset_oracle(qp: &QpSubproblem) -> Option<f64> {
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << QM) {
        let rows: Vec<usize> = (0..QM).filter(|r| mask & (1 << r) != 0).collect();
        if rows.len() > QN {
            continue;
        }
        let dim = QN + rows.len();
        let mut a = vec![vec![0.0; dim]; dim];
        let mut b = vec![0.0; dim];
        for i in 0..QN {
            for j in 0..QN {
                a[i][j] = qp.hessian[i][j];
            }
            b[i] = -qp.gradient[i];
        }
        for (slot, &row) in rows.iter().enumerate() {
            for j in 0..QN {
                a[j][QN + slot] = -qp.constraint_normals[row][j];
                a[QN + slot][j] = qp.constraint_normals[row][j];
            }
            b[QN + slot] = -qp.constraint_offsets[row];
        }
        let Some(solution) = gauss_solve(a, b) else {
            continue;
        };
        let mut x = [0.0; QN];
        x.copy_from_slice(&solution[..QN]);
        if !x.iter().all(|v| v.is_finite()) {
            continue;
        }
        let scale = 1.0 + x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if (0..QM).any(|row| qp_slack(qp, &x, row) < -1.0e-7 * scale) {
            continue;
        }
        let value = qp_objective(qp, &x);
        if best.map_or(true, |v| value < v) {
            best = Some(value);
        }
    }
    best
}

fn random_qp(rng: &mut ChaCha8Rng, feasible_at_zero: bool) -> QpSubproblem {
    let mut m = [[0.0; QN]; QN];
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    let mut hessian = [[0.0; QN]; QN];
    for i in 0..QN {
        for j in 0..QN {
            let mut acc = if i == j { 1.0 } else { 0.0 };
            for k in 0..QN {
                acc += m[i][k] * m[j][k];
            }
            hessian[i][j] = acc;
        }
    }
    let mut gradient = [0.0; QN];
    for v in gradient.iter_mut() {
        *v = rng.gen_range(-2.0..2.0);
    }
    let mut normals = [[0.0; QN]; QM];
    for row in normals.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    let mut offsets = [0.0; QM];
    if feasible_at_zero {
        for v in offsets.iter_mut() {
            *v = rng.gen_range(0.05..2.0);
        }
    } else {
        let anchor: Vec<f64> = (0..QN).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (row, offset) in offsets.iter_mut().enumerate() {
            let mut dot = 0.0;
            for j in 0..QN {
                dot += normals[row][j] * anchor[j];
            }
            *offset = rng.gen_range(0.0..1.0) - dot;
        }
    }
    QpSubproblem {
        hessian,
        gradient,
        constraint_normals: normals,
        constraint_offsets: offsets,
    }
}

fn criterion_3_qp_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for case in 0..100 {
        let qp = random_qp(&mut rng, case < 70);
        let oracle = qp_subset_oracle(&qp).expect("constructed feasible");
        let (x, mu) = active_set_solve(&qp)
            .unwrap_or_else(|e| panic!("case {case}: solver failed: {e}"));
        let value = qp_objective(&qp, &x);
        assert!(
            (value - oracle).abs() <= 1.0e-6 * (1.0 + oracle.abs()),
            "case {case}: objective {value} vs oracle {oracle}"
        );
        assert!(mu.iter().all(|v| *v >= 0.0), "case {case}: negative multiplier");
        let scale = 1.0 + x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut stationarity = 0.0f64;
        for i in 0..QN {
            let mut g = qp.gradient[i];
            for j in 0..QN {
                g += qp.hessian[i][j] * x[j];
            }
            for row in 0..QM {
                g -= mu[row] * qp.constraint_normals[row][i];
            }
            stationarity = stationarity.max(g.abs());
        }
        let mut violation = 0.0f64;
        let mut complementarity = 0.0f64;
        for row in 0..QM {
            let s = qp_slack(&qp, &x, row);
            violation = violation.max(-s);
            complementarity = complementarity.max((mu[row] * s).abs());
        }
        assert!(
            stationarity <= 1.0e-7 * scale,
            "case {case}: stationarity {stationarity}"
        );
        assert!(violation <= 1.0e-8 * scale, "case {case}: violation {violation}");
        assert!(
            complementarity <= 1.0e-6 * scale,
            "case {case}: complementarity {complementarity}"
        );
    }
}

// ---------------------------------------------------------------------------
// Criterion 4: placement solver vs position-grid oracle
// ---------------------------------------------------------------------------

fn criterion_4_sqp_vs_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    for case in 0..10u64 {
        let spec = ScenarioSpec {
            users: 20,
            delta_km: rng.gen_range(5.0..20.0),
            ..ScenarioSpec::default()
        };
        let scenario = generate_scenario(&spec, 4000 + case);
        let selection = BitSolution::from_bits(vec![true; 20]);
        let problem = PlacementProblem::new(
            &scenario.users,
            &selection,
            scenario.mbs,
            &scenario.config,
        );
        let bounds = &scenario.config.altitude;
        let start = Position3D::new(0.0, 0.0, (bounds.min + bounds.max) / 2.0);
        let solution = sqp_solve(&start, &problem, 1.0e-5, None).unwrap();

        let mut grid_min = f64::INFINITY;
        for ix in 0..21 {
            let x = -500.0 + (scenario.mbs.x + 500.0) * ix as f64 / 20.0;
            for iy in 0..21 {
                let y = -1000.0 + 2000.0 * iy as f64 / 20.0;
                for ih in 0..11 {
                    let h = bounds.min + (bounds.max - bounds.min) * ih as f64 / 10.0;
                    let position = Position3D::new(x, y, h);
                    if let Ok(pair) = path_utilization(&position, &problem) {
                        grid_min = grid_min.min(pair.max_utilization());
                    }
                }
            }
        }
        assert!(
            solution.varsigma <= grid_min * 1.02,
            "case {case}: solver {:.6} vs grid minimum {:.6}",
            solution.varsigma,
            grid_min
        );
    }
}

// ---------------------------------------------------------------------------
// Criterion 5: constraint audit over random scenarios
// ---------------------------------------------------------------------------

fn criterion_5_constraint_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    for case in 0..100u64 {
        let spec = ScenarioSpec {
            users: rng.gen_range(20..=100),
            delta_km: rng.gen_range(5.0..=20.0),
            ..ScenarioSpec::default()
        };
        let scenario = generate_scenario(&spec, 50_000 + case);
        let ga = GaConfig {
            rng_seed: case,
            ..GaConfig::default()
        };
        let start = Position3D::new(0.0, 0.0, scenario.config.altitude.min);
        let mut best_counts = Vec::new();
        let mut log = |it: &BroadIterate| best_counts.push(it.best_count);
        let plan = run_broad(
            &scenario.users,
            &scenario.mbs,
            &scenario.config,
            &ga,
            1.0e-5,
            &start,
            Some(&mut log),
        )
        .unwrap_or_else(|e| panic!("case {case}: {:?}", e.kind));
        let violations = validate_plan(&plan, &scenario.users, &scenario.mbs, &scenario.config);
        assert!(violations.is_empty(), "case {case}: {violations:?}");
        assert!(!best_counts.is_empty(), "case {case}: empty iterate log");
        assert!(
            best_counts.windows(2).all(|w| w[0] <= w[1]),
            "case {case}: best count decreased: {best_counts:?}"
        );
    }
}

// ---------------------------------------------------------------------------
// Criteria 6-8: sweep trends and determinism
// ---------------------------------------------------------------------------

fn sweep_results(variable: SweepVariable, values: &[f64]) -> Vec<TrialResult> {
    let spec = SweepSpec {
        variable,
        values: values.to_vec(),
        trials_per_point: 10,
        base_seed: 1,
    };
    let options = SweepOptions {
        measure_runtime: false,
        ..SweepOptions::default()
    };
    run_sweep(
        &spec,
        &ScenarioSpec::default(),
        &[Algorithm::Broad, Algorithm::CenterFixed],
        &options,
    )
}

fn mean_over_trials<F: Fn(&TrialResult) -> f64>(
    results: &[TrialResult],
    algorithm: Algorithm,
    value: f64,
    metric: F,
) -> f64 {
    let picked: Vec<f64> = results
        .iter()
        .filter(|r| r.algorithm == algorithm && r.sweep_value == value)
        .map(|r| metric(r))
        .collect();
    assert!(!picked.is_empty(), "no rows for {algorithm:?} at {value}");
    picked.iter().sum::<f64>() / picked.len() as f64
}

fn count_of(r: &TrialResult) -> f64 {
    r.satisfied_count as f64
}

fn offset_of(r: &TrialResult) -> f64 {
    (r.dbs_position.x.powi(2) + r.dbs_position.y.powi(2)).sqrt()
}

fn criterion_6_delta_sweep() {
    let deltas = [5.0, 10.0, 15.0, 20.0];
    let results = sweep_results(SweepVariable::DeltaKm, &deltas);

    // (a) never fewer satisfied users than the center baseline; strictly
    // more where the backhaul binds.
    for &delta in &deltas {
        let broad = mean_over_trials(&results, Algorithm::Broad, delta, count_of);
        let center = mean_over_trials(&results, Algorithm::CenterFixed, delta, count_of);
        assert!(
            broad >= center,
            "delta {delta}: broad mean {broad:.2} below center mean {center:.2}"
        );
        if delta >= 15.0 {
            assert!(
                broad > center,
                "delta {delta}: strict improvement required, got {broad:.2} vs {center:.2}"
            );
        }
    }

    // (b) both path utilizations stay high where the backhaul binds.
    for delta in [15.0, 20.0] {
        let backhaul =
            mean_over_trials(&results, Algorithm::Broad, delta, |r| r.backhaul_utilization);
        let access =
            mean_over_trials(&results, Algorithm::Broad, delta, |r| r.access_utilization);
        assert!(
            backhaul >= 0.85 && access >= 0.85,
            "delta {delta}: utilizations {backhaul:.3}/{access:.3} below 0.85"
        );
    }

    // (c) the DBS shifts further toward the MBS as it moves away, and the
    // mean offset is non-decreasing across the backhaul-bound range.
    let offsets: Vec<f64> = [10.0, 15.0, 20.0]
        .iter()
        .map(|&d| mean_over_trials(&results, Algorithm::Broad, d, offset_of))
        .collect();
    assert!(
        offsets[2] > offsets[0],
        "offset at 20 km ({:.0} m) not larger than at 10 km ({:.0} m)",
        offsets[2],
        offsets[0]
    );
    assert!(
        offsets[0] <= offsets[1] && offsets[1] <= offsets[2],
        "offsets not non-decreasing: {offsets:?}"
    );
}

fn criterion_7_visibility_sweep() {
    let visibilities = [1.0, 2.0, 3.0, 5.0];
    let results = sweep_results(SweepVariable::VisibilityKm, &visibilities);

    for &v in &visibilities {
        let broad = mean_over_trials(&results, Algorithm::Broad, v, count_of);
        let center = mean_over_trials(&results, Algorithm::CenterFixed, v, count_of);
        assert!(
            broad >= center,
            "visibility {v}: broad mean {broad:.2} below center mean {center:.2}"
        );
        if v == 1.0 {
            assert!(
                broad > center,
                "visibility 1 km: strict improvement required, got {broad:.2} vs {center:.2}"
            );
        }
    }
    // Counts may only fall (within one user of trial-mean noise) as the air
    // gets worse.
    for algorithm in [Algorithm::Broad, Algorithm::CenterFixed] {
        let means: Vec<f64> = visibilities
            .iter()
            .map(|&v| mean_over_trials(&results, algorithm, v, count_of))
            .collect();
        for pair in means.windows(2) {
            assert!(
                pair[0] <= pair[1] + 1.0,
                "{algorithm:?}: count mean rose as visibility fell: {means:?}"
            );
        }
    }
}

fn criterion_8_determinism() {
    let deltas = [5.0, 10.0, 15.0, 20.0];
    let first = results_to_string(
        &sweep_results(SweepVariable::DeltaKm, &deltas),
        OutputFormat::Csv,
    );
    let second = results_to_string(
        &sweep_results(SweepVariable::DeltaKm, &deltas),
        OutputFormat::Csv,
    );
    assert!(first == second, "repeated sweep is not byte-identical");
    assert!(!first.is_empty());
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).into()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic".into()
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Duration, fn()); 8] = [
        (
            "1 (channel-model oracles)",
            Duration::from_secs(1),
            criterion_1_model_oracles,
        ),
        (
            "2 (GA vs exhaustive knapsack)",
            Duration::from_secs(30),
            criterion_2_knapsack,
        ),
        (
            "3 (QP KKT + subset oracle)",
            Duration::from_secs(10),
            criterion_3_qp_kkt,
        ),
        (
            "4 (placement vs grid oracle)",
            Duration::from_secs(300),
            criterion_4_sqp_vs_grid,
        ),
        (
            "5 (plan constraint audit)",
            Duration::from_secs(600),
            criterion_5_constraint_audit,
        ),
        (
            "6 (distance sweep trends)",
            Duration::from_secs(900),
            criterion_6_delta_sweep,
        ),
        (
            "7 (visibility sweep trends)",
            Duration::from_secs(900),
            criterion_7_visibility_sweep,
        ),
        (
            "8 (byte-identical reruns)",
            Duration::from_secs(900),
            criterion_8_determinism,
        ),
    ];

    let mut failures = Vec::new();
    for (name, budget, run) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let elapsed = started.elapsed();
        let verdict = match outcome {
            Ok(()) if elapsed <= budget => None,
            Ok(()) => Some(format!(
                "finished but exceeded its {:.0}s budget",
                budget.as_secs_f64()
            )),
            Err(payload) => Some(panic_text(payload)),
        };
        match verdict {
            None => println!("criterion {name}: PASS ({:.2}s)", elapsed.as_secs_f64()),
            Some(reason) => {
                println!(
                    "criterion {name}: FAIL ({:.2}s): {reason}",
                    elapsed.as_secs_f64()
                );
                failures.push(format!("{name}: {reason}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
