//! User access control as a 0-1 two-constraint knapsack.
//!
//! Choose the served user set maximizing the count subject to the access
//! bandwidth budget (Σ b_i ≤ B) and the FSO backhaul capacity (Σ φ_i ≤
//! r_fso). Solved by a genetic algorithm whose infeasible offspring are
//! repaired greedily, guided by the dual prices of the LP relaxation; an
//! exhaustive solver serves as the test oracle.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Largest instance [`brute_force`] accepts (2^n enumeration).
pub const BRUTE_FORCE_LIMIT: usize = 24;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnapsackError {
    DimensionMismatch { expected: usize, actual: usize },
    TooManyItems { count: usize, limit: usize },
    /// Both dual prices are zero; utility ratios are undefined (and no
    /// repair is needed, since the LP constraints are slack).
    DegenerateDuals,
}

impl core::fmt::Display for KnapsackError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KnapsackError::DimensionMismatch { expected, actual } => {
                write!(f, "solution has {actual} bits, instance has {expected} items")
            }
            KnapsackError::TooManyItems { count, limit } => {
                write!(f, "{count} items exceed the exhaustive-search limit of {limit}")
            }
            KnapsackError::DegenerateDuals => write!(f, "both dual prices are zero"),
        }
    }
}

/// One access-control instance: per-user weights and the two capacities.
///
/// Invariants: equal weight-list lengths, all weights and capacities
/// positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KnapsackInstance {
    /// Bandwidth needed to satisfy each user, Hz.
    pub bandwidth_weights: Vec<f64>,
    /// Rate requirement of each user, bits/s.
    pub rate_weights: Vec<f64>,
    /// Total access bandwidth, Hz.
    pub bandwidth_capacity: f64,
    /// Backhaul capacity, bits/s.
    pub rate_capacity: f64,
}

impl KnapsackInstance {
    pub fn new(
        bandwidth_weights: Vec<f64>,
        rate_weights: Vec<f64>,
        bandwidth_capacity: f64,
        rate_capacity: f64,
    ) -> Self {
        debug_assert_eq!(bandwidth_weights.len(), rate_weights.len());
        debug_assert!(bandwidth_weights.iter().all(|w| *w > 0.0));
        debug_assert!(rate_weights.iter().all(|w| *w > 0.0));
        debug_assert!(bandwidth_capacity > 0.0 && rate_capacity > 0.0);
        Self {
            bandwidth_weights,
            rate_weights,
            bandwidth_capacity,
            rate_capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.bandwidth_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bandwidth_weights.is_empty()
    }
}

/// A 0-1 selection, one bit per user.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BitSolution {
    pub bits: Vec<bool>,
}

impl BitSolution {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of selected users.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Σ selected bandwidth weights, Hz.
    pub fn total_bandwidth(&self, inst: &KnapsackInstance) -> f64 {
        self.bits
            .iter()
            .zip(&inst.bandwidth_weights)
            .filter_map(|(z, w)| z.then_some(*w))
            .sum()
    }

    /// Σ selected rate weights, bits/s.
    pub fn total_rate(&self, inst: &KnapsackInstance) -> f64 {
        self.bits
            .iter()
            .zip(&inst.rate_weights)
            .filter_map(|(z, w)| z.then_some(*w))
            .sum()
    }
}

/// Genetic-algorithm knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GaConfig {
    /// Population size n; at least 2 and even.
    pub population_size: usize,
    /// Offspring m bred per generation.
    pub offspring_per_generation: usize,
    /// Bits q flipped in each offspring.
    pub mutation_flips: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            offspring_per_generation: 40,
            mutation_flips: 2,
            rng_seed: 0,
        }
    }
}

/// Optimal dual prices of the LP relaxation's two coupling constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DualPrices {
    /// Price of the backhaul-rate constraint, per (bit/s).
    pub rate_price: f64,
    /// Price of the bandwidth constraint, per Hz.
    pub bandwidth_price: f64,
}

impl DualPrices {
    /// True when both constraints were slack at the LP optimum.
    pub fn is_degenerate(&self) -> bool {
        self.rate_price == 0.0 && self.bandwidth_price == 0.0
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// True iff both capacity constraints hold (boundary equality feasible).
pub fn is_feasible(sol: &BitSolution, inst: &KnapsackInstance) -> Result<bool, KnapsackError> {
    if sol.len() != inst.len() {
        return Err(KnapsackError::DimensionMismatch {
            expected: inst.len(),
            actual: sol.len(),
        });
    }
    Ok(sol.total_bandwidth(inst) <= inst.bandwidth_capacity
        && sol.total_rate(inst) <= inst.rate_capacity)
}

/// Dual objective of the LP relaxation at prices (l1, l2):
/// C_r·l1 + C_B·l2 + Σ max(0, 1 − φ_i·l1 − b_i·l2).
fn dual_objective(inst: &KnapsackInstance, l1: f64, l2: f64) -> f64 {
    let mut total = inst.rate_capacity * l1 + inst.bandwidth_capacity * l2;
    for (phi, b) in inst.rate_weights.iter().zip(&inst.bandwidth_weights) {
        let reduced = 1.0 - phi * l1 - b * l2;
        if reduced > 0.0 {
            total += reduced;
        }
    }
    total
}

/// Exact dual prices of the LP relaxation
/// max Σ z_i  s.t.  Σ φ_i z_i ≤ C_r,  Σ b_i z_i ≤ C_B,  0 ≤ z_i ≤ 1.
///
/// The reduced dual g(l1, l2) is convex piecewise-linear and coercive on the
/// nonnegative quadrant, so its minimum sits on a vertex of the arrangement
/// of the lines φ_i·l1 + b_i·l2 = 1 and the two axes; all O(n²) vertices are
/// enumerated and the best is returned.
pub fn solve_lp_dual(inst: &KnapsackInstance) -> DualPrices {
    let mut best = (0.0, 0.0);
    let mut best_value = dual_objective(inst, 0.0, 0.0);
    let consider = |l1: f64, l2: f64, best: &mut (f64, f64), best_value: &mut f64| {
        if !(l1 >= 0.0 && l2 >= 0.0 && l1.is_finite() && l2.is_finite()) {
            return;
        }
        let value = dual_objective(inst, l1, l2);
        if value < *best_value {
            *best_value = value;
            *best = (l1, l2);
        }
    };

    let n = inst.len();
    for i in 0..n {
        consider(
            1.0 / inst.rate_weights[i],
            0.0,
            &mut best,
            &mut best_value,
        );
        consider(
            0.0,
            1.0 / inst.bandwidth_weights[i],
            &mut best,
            &mut best_value,
        );
    }
    for i in 0..n {
        let (pi, bi) = (inst.rate_weights[i], inst.bandwidth_weights[i]);
        for j in (i + 1)..n {
            let (pj, bj) = (inst.rate_weights[j], inst.bandwidth_weights[j]);
            let det = pi * bj - pj * bi;
            // Parallel reduced-cost lines have no crossing.
            if crate::math::abs(det) <= 1.0e-14 * (crate::math::abs(pi * bj) + crate::math::abs(pj * bi)) {
                continue;
            }
            let l1 = (bj - bi) / det;
            let l2 = (pi - pj) / det;
            consider(l1, l2, &mut best, &mut best_value);
        }
    }

    DualPrices {
        rate_price: best.0,
        bandwidth_price: best.1,
    }
}

/// Repair utility ζ_i = 2 / (l1·φ_i + l2·b_i); the largest ζ is dropped
/// first during repair.
pub fn utility_ratio(
    i: usize,
    duals: &DualPrices,
    inst: &KnapsackInstance,
) -> Result<f64, KnapsackError> {
    let denom = duals.rate_price * inst.rate_weights[i]
        + duals.bandwidth_price * inst.bandwidth_weights[i];
    if denom <= 0.0 {
        return Err(KnapsackError::DegenerateDuals);
    }
    Ok(2.0 / denom)
}

/// Drops selected users (largest ζ_i first; ties to the lowest index) until
/// both capacity constraints hold. Never selects a deselected user.
///
/// When both duals are zero ζ is undefined; the fallback drops the largest
/// normalized load b_i/C_B + φ_i/C_r instead.
pub fn repair(sol: &BitSolution, inst: &KnapsackInstance, duals: &DualPrices) -> BitSolution {
    debug_assert_eq!(sol.len(), inst.len());
    let mut bits = sol.bits.clone();
    let mut sum_b = sol.total_bandwidth(inst);
    let mut sum_r = sol.total_rate(inst);

    while sum_b > inst.bandwidth_capacity || sum_r > inst.rate_capacity {
        let mut victim: Option<(usize, f64)> = None;
        for (i, selected) in bits.iter().enumerate() {
            if !*selected {
                continue;
            }
            let key = if duals.is_degenerate() {
                inst.bandwidth_weights[i] / inst.bandwidth_capacity
                    + inst.rate_weights[i] / inst.rate_capacity
            } else {
                // Largest ζ = smallest denominator; comparing ζ directly
                // keeps the tie-break on the first (lowest) index.
                2.0 / (duals.rate_price * inst.rate_weights[i]
                    + duals.bandwidth_price * inst.bandwidth_weights[i])
            };
            if victim.map_or(true, |(_, best)| key > best) {
                victim = Some((i, key));
            }
        }
        // Selected sums exceed a positive capacity, so a victim exists.
        let (idx, _) = victim.expect("over-capacity selection is non-empty");
        bits[idx] = false;
        sum_b -= inst.bandwidth_weights[idx];
        sum_r -= inst.rate_weights[idx];
    }
    BitSolution { bits }
}

/// Uniform crossover: each bit copied from a uniformly chosen parent.
pub fn crossover<R: Rng>(parent1: &BitSolution, parent2: &BitSolution, rng: &mut R) -> BitSolution {
    debug_assert_eq!(parent1.len(), parent2.len());
    let bits = parent1
        .bits
        .iter()
        .zip(&parent2.bits)
        .map(|(a, b)| if rng.gen::<bool>() { *a } else { *b })
        .collect();
    BitSolution { bits }
}

/// Flips exactly `q` distinct, uniformly chosen positions.
pub fn mutate<R: Rng>(sol: &BitSolution, q: usize, rng: &mut R) -> BitSolution {
    debug_assert!(q <= sol.len());
    let mut bits = sol.bits.clone();
    for idx in rand::seq::index::sample(rng, bits.len(), q) {
        bits[idx] = !bits[idx];
    }
    BitSolution { bits }
}

/// All-zeros start, then admit users in random order while feasible.
fn random_greedy_fill<R: Rng>(inst: &KnapsackInstance, rng: &mut R) -> BitSolution {
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.shuffle(rng);
    let mut bits = vec![false; inst.len()];
    let mut sum_b = 0.0;
    let mut sum_r = 0.0;
    for i in order {
        let b = inst.bandwidth_weights[i];
        let r = inst.rate_weights[i];
        if sum_b + b <= inst.bandwidth_capacity && sum_r + r <= inst.rate_capacity {
            bits[i] = true;
            sum_b += b;
            sum_r += r;
        }
    }
    BitSolution { bits }
}

/// Index of the best solution (highest count) among `half`, first on ties.
fn best_of(half: &[usize], counts: &[usize]) -> usize {
    let mut best = half[0];
    for &i in &half[1..] {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    best
}

/// Genetic algorithm for the access-control knapsack.
///
/// Per generation: the population is randomly split into two halves and the
/// best of each half breed all `m` offspring by uniform crossover; each
/// offspring has `q` bits flipped and is repaired if infeasible; the
/// offspring join the population, which is truncated to the best `n`
/// (by count, ties to the lower bandwidth total). Terminates when the best
/// count stops increasing. Deterministic for a fixed `rng_seed`.
pub fn run_ga(inst: &KnapsackInstance, cfg: &GaConfig) -> BitSolution {
    assert!(
        cfg.population_size >= 2 && cfg.population_size % 2 == 0,
        "population size must be even and at least 2"
    );
    assert!(cfg.offspring_per_generation >= 1);
    if inst.is_empty() {
        return BitSolution::zeros(0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let q = cfg.mutation_flips.min(inst.len());
    let duals = solve_lp_dual(inst);

    let mut population: Vec<BitSolution> = (0..cfg.population_size)
        .map(|_| random_greedy_fill(inst, &mut rng))
        .collect();
    let mut best_count = population.iter().map(BitSolution::count).max().unwrap_or(0);

    loop {
        // Parent selection: random equal split, best of each half.
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.shuffle(&mut rng);
        let counts: Vec<usize> = population.iter().map(BitSolution::count).collect();
        let half = population.len() / 2;
        let k1 = best_of(&order[..half], &counts);
        let k2 = best_of(&order[half..], &counts);

        for _ in 0..cfg.offspring_per_generation {
            let child = crossover(&population[k1], &population[k2], &mut rng);
            let child = mutate(&child, q, &mut rng);
            let child = if is_feasible(&child, inst).expect("offspring length matches") {
                child
            } else {
                repair(&child, inst, &duals)
            };
            population.push(child);
        }

        // Elitist survival: keep the best n of parents plus offspring.
        let mut ranked: Vec<(usize, f64, BitSolution)> = population
            .drain(..)
            .map(|s| (s.count(), s.total_bandwidth(inst), s))
            .collect();
        ranked.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(a.1.partial_cmp(&b.1).expect("finite totals"))
        });
        ranked.truncate(cfg.population_size);
        population = ranked.into_iter().map(|(_, _, s)| s).collect();

        // Elitism makes the best count non-decreasing; stop on no increase.
        let new_best = population[0].count();
        if new_best <= best_count {
            break;
        }
        best_count = new_best;
    }
    population.swap_remove(0)
}

/// Exhaustive optimum for instances of at most [`BRUTE_FORCE_LIMIT`] users.
/// Ties broken by the smaller bandwidth total, then lexicographic bits.
pub fn brute_force(inst: &KnapsackInstance) -> Result<BitSolution, KnapsackError> {
    let n = inst.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(KnapsackError::TooManyItems {
            count: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    // Lexicographically smaller bit vector wins final ties.
    fn lex_less(a: &[bool], b: &[bool]) -> bool {
        for (x, y) in a.iter().zip(b) {
            if x != y {
                return !*x;
            }
        }
        false
    }

    let mut best_bits = vec![false; n];
    let mut best_count = 0usize;
    let mut best_bandwidth = 0.0f64;
    for mask in 0u64..(1u64 << n) {
        let mut count = 0usize;
        let mut sum_b = 0.0;
        let mut sum_r = 0.0;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                count += 1;
                sum_b += inst.bandwidth_weights[i];
                sum_r += inst.rate_weights[i];
            }
        }
        if sum_b > inst.bandwidth_capacity || sum_r > inst.rate_capacity {
            continue;
        }
        if count < best_count {
            continue;
        }
        let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let better = count > best_count
            || sum_b < best_bandwidth
            || (sum_b == best_bandwidth && lex_less(&bits, &best_bits));
        if better {
            best_count = count;
            best_bandwidth = sum_b;
            best_bits = bits;
        }
    }
    Ok(BitSolution { bits: best_bits })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
