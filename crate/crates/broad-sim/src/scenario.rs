//! Random deployment scenarios: users scattered over a rectangular point of
//! interest with truncated-exponential rate demands, and the macro base
//! station offset along the x-axis.

use broad_core::{FsoLinkParams, NetworkConfig, Position3D, UserProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default beam divergence for experiments, radians.
///
/// The core default (1 mrad, an ordinary commercial transmitter) puts the
/// backhaul capacity at kilobits per second beyond a few kilometers, so
/// every sweep would sit in the trivial zero-admission regime. Narrowing
/// the beam moves the backhaul/access capacity crossover into the swept
/// distance range, which is the regime the experiments study. Divergence
/// only rescales the backhaul rate, so nothing else shifts.
pub const EXPERIMENT_DIVERGENCE_RAD: f64 = 6.0e-5;

/// Everything needed to build a scenario except the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Number of users to scatter.
    pub users: usize,
    /// Horizontal PoI-center-to-MBS distance, km.
    pub delta_km: f64,
    /// PoI center, meters.
    pub poi_center: (f64, f64),
    /// PoI extent along x, meters.
    pub poi_width_m: f64,
    /// PoI extent along y, meters.
    pub poi_depth_m: f64,
    /// Mean of the rate-demand exponential before truncation, bit/s.
    pub mean_rate: f64,
    /// Lower truncation bound on demands, bit/s.
    pub min_rate: f64,
    /// Upper truncation bound on demands, bit/s.
    pub max_rate: f64,
    /// MBS antenna altitude, meters.
    pub mbs_altitude_m: f64,
    pub config: NetworkConfig,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            users: 100,
            delta_km: 5.0,
            poi_center: (0.0, 0.0),
            poi_width_m: 500.0,
            poi_depth_m: 500.0,
            mean_rate: 5.0e6,
            min_rate: 5.0e5,
            max_rate: 5.0e8,
            mbs_altitude_m: 20.0,
            config: default_experiment_config(),
        }
    }
}

impl ScenarioSpec {
    /// Rejects nonsensical parameters with a message naming the field.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.delta_km.is_finite() && self.delta_km >= 0.0) {
            return Err("delta_km must be non-negative".into());
        }
        if !(self.poi_width_m > 0.0 && self.poi_depth_m > 0.0) {
            return Err("PoI extents must be positive".into());
        }
        if !(self.mean_rate > 0.0) {
            return Err("mean_rate must be positive".into());
        }
        if !(self.min_rate > 0.0 && self.min_rate < self.max_rate) {
            return Err("rate truncation bounds must satisfy 0 < min_rate < max_rate".into());
        }
        if !(self.mbs_altitude_m > 0.0) {
            return Err("mbs_altitude_m must be positive".into());
        }
        self.config.validate().map_err(|e| e.to_string())
    }
}

/// A concrete deployment: the users, the MBS, and the physics in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub users: Vec<UserProfile>,
    pub mbs: Position3D,
    /// PoI center, meters.
    pub poi_center: (f64, f64),
    /// PoI extent (x, y), meters.
    pub poi_size: (f64, f64),
    pub config: NetworkConfig,
    pub seed: u64,
}

/// Network constants used by the experiments: core defaults with the
/// calibrated beam divergence.
pub fn default_experiment_config() -> NetworkConfig {
    NetworkConfig {
        fso: FsoLinkParams {
            divergence: EXPERIMENT_DIVERGENCE_RAD,
            ..FsoLinkParams::default()
        },
        ..NetworkConfig::default()
    }
}

/// One truncated-exponential draw: redraw until the sample lands inside
/// `[min, max]`, preserving the exponential shape within the bounds.
fn truncated_exponential<R: Rng>(rng: &mut R, mean: f64, min: f64, max: f64) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let sample = -mean * (1.0 - u).ln();
        if (min..=max).contains(&sample) {
            return sample;
        }
    }
}

/// Builds the scenario deterministically from `seed`: user positions are
/// i.i.d. uniform over the PoI rectangle, demands truncated-exponential,
/// and the MBS sits on the x-axis `delta_km` from the PoI center.
pub fn generate_scenario(spec: &ScenarioSpec, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = spec.poi_center;
    let half_w = spec.poi_width_m / 2.0;
    let half_d = spec.poi_depth_m / 2.0;
    let users = (0..spec.users)
        .map(|_| {
            let x = rng.gen_range(cx - half_w..cx + half_w);
            let y = rng.gen_range(cy - half_d..cy + half_d);
            let rate = truncated_exponential(&mut rng, spec.mean_rate, spec.min_rate, spec.max_rate);
            UserProfile::new(x, y, rate)
        })
        .collect();
    Scenario {
        users,
        mbs: Position3D::new(cx + spec.delta_km * 1000.0, cy, spec.mbs_altitude_m),
        poi_center: spec.poi_center,
        poi_size: (spec.poi_width_m, spec.poi_depth_m),
        config: spec.config,
        seed,
    }
}
