//! Flat key-value configuration files: one `key = value` pair per line,
//! `#` comments, keys named after the scenario and channel parameters.

use crate::scenario::ScenarioSpec;
use broad_core::AttenuationModel;
use std::fmt;

/// A rejected configuration line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

pub const KNOWN_KEYS: &[&str] = &[
    "users",
    "delta_km",
    "visibility_km",
    "attenuation_db_per_km",
    "poi_center_x_m",
    "poi_center_y_m",
    "poi_width_m",
    "poi_depth_m",
    "mean_rate",
    "min_rate",
    "max_rate",
    "mbs_altitude_m",
    "carrier_frequency",
    "excess_loss_los_db",
    "excess_loss_nlos_db",
    "los_alpha",
    "los_beta",
    "tx_power",
    "noise_power",
    "total_bandwidth",
    "speed_of_light",
    "p_fso",
    "tau_tx",
    "tau_rx",
    "aperture_diameter",
    "divergence",
    "wavelength",
    "planck",
    "receiver_sensitivity",
    "altitude_min_m",
    "altitude_max_m",
];

/// Applies every assignment in `text` to `spec`, in file order. Unknown
/// keys and malformed lines are errors; later assignments win.
/// `visibility_km` switches the attenuation model to visibility-derived,
/// `attenuation_db_per_km` switches it to the fixed factor.
pub fn apply_config_text(spec: &mut ScenarioSpec, text: &str) -> Result<(), ConfigError> {
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let fail = |message: String| ConfigError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(fail("expected `key = value`".into()));
        };
        let key = key.trim();
        let value = value.trim();
        let number = || -> Result<f64, ConfigError> {
            value
                .parse::<f64>()
                .map_err(|_| fail(format!("value {value:?} for {key} is not a number")))
        };
        match key {
            "users" => {
                spec.users = value
                    .parse()
                    .map_err(|_| fail(format!("value {value:?} for users is not a count")))?;
            }
            "delta_km" => spec.delta_km = number()?,
            "visibility_km" => {
                spec.config.fso.visibility_km = number()?;
                spec.config.fso.attenuation = AttenuationModel::FromVisibility;
            }
            "attenuation_db_per_km" => {
                spec.config.fso.attenuation = AttenuationModel::FixedDbPerKm(number()?);
            }
            "poi_center_x_m" => spec.poi_center.0 = number()?,
            "poi_center_y_m" => spec.poi_center.1 = number()?,
            "poi_width_m" => spec.poi_width_m = number()?,
            "poi_depth_m" => spec.poi_depth_m = number()?,
            "mean_rate" => spec.mean_rate = number()?,
            "min_rate" => spec.min_rate = number()?,
            "max_rate" => spec.max_rate = number()?,
            "mbs_altitude_m" => spec.mbs_altitude_m = number()?,
            "carrier_frequency" => spec.config.access.carrier_frequency = number()?,
            "excess_loss_los_db" => spec.config.access.excess_loss_los_db = number()?,
            "excess_loss_nlos_db" => spec.config.access.excess_loss_nlos_db = number()?,
            "los_alpha" => spec.config.access.los_alpha = number()?,
            "los_beta" => spec.config.access.los_beta = number()?,
            "tx_power" => spec.config.access.tx_power = number()?,
            "noise_power" => spec.config.access.noise_power = number()?,
            "total_bandwidth" => spec.config.access.total_bandwidth = number()?,
            "speed_of_light" => spec.config.access.speed_of_light = number()?,
            "p_fso" => spec.config.fso.tx_power = number()?,
            "tau_tx" => spec.config.fso.tx_efficiency = number()?,
            "tau_rx" => spec.config.fso.rx_efficiency = number()?,
            "aperture_diameter" => spec.config.fso.aperture_diameter = number()?,
            "divergence" => spec.config.fso.divergence = number()?,
            "wavelength" => spec.config.fso.wavelength = number()?,
            "planck" => spec.config.fso.planck = number()?,
            "receiver_sensitivity" => spec.config.fso.receiver_sensitivity = number()?,
            "altitude_min_m" => spec.config.altitude.min = number()?,
            "altitude_max_m" => spec.config.altitude.max = number()?,
            other => {
                return Err(fail(format!(
                    "unknown key {other:?}; known keys: {}",
                    KNOWN_KEYS.join(", ")
                )));
            }
        }
    }
    Ok(())
}
