//! Channel models for the two hops of the relay path.
//!
//! Access side (DBS → ground users): free-space pathloss plus an
//! elevation-angle-dependent blend of line-of-sight and non-line-of-sight
//! excess losses, giving per-user SNR, achievable rate, and the bandwidth
//! needed to meet a rate requirement.
//!
//! Backhaul side (MBS → DBS): an FSO photon-budget link with atmospheric
//! attenuation either fixed (dB/km) or derived from meteorological
//! visibility via the Kim piecewise scattering exponent.

use crate::math;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Nominal speed of light, m/s. Shared default for the access-channel
/// parameter and the photon-energy computation.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelError {
    /// Link endpoints coincide; geometry (and the model) is undefined.
    CoincidentPoints,
    /// Pathloss requested at zero propagation distance.
    ZeroDistance,
    /// Received SNR is not positive; no finite bandwidth meets the demand.
    NonPositiveSnr,
    /// Visibility-derived attenuation requested with zero visibility.
    ZeroVisibility,
    /// A configuration value violates its documented range.
    InvalidParameter(&'static str),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::CoincidentPoints => write!(f, "link endpoints coincide"),
            ModelError::ZeroDistance => write!(f, "zero propagation distance"),
            ModelError::NonPositiveSnr => write!(f, "non-positive SNR"),
            ModelError::ZeroVisibility => write!(f, "zero visibility"),
            ModelError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A point in space: ground coordinates plus altitude above ground, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Self { x, y, h }
    }

    /// Straight-line distance to another point.
    pub fn distance_to(&self, other: &Position3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dh = self.h - other.h;
        math::sqrt(dx * dx + dy * dy + dh * dh)
    }

    /// Ground-plane distance to a ground point.
    pub fn horizontal_distance_to(&self, x: f64, y: f64) -> f64 {
        math::hypot(self.x - x, self.y - y)
    }
}

/// A ground user: position (meters) and data-rate requirement (bits/s).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct UserProfile {
    pub x: f64,
    pub y: f64,
    /// Required downlink rate, bits/s. Must be positive.
    pub rate_requirement: f64,
}

impl UserProfile {
    pub fn new(x: f64, y: f64, rate_requirement: f64) -> Self {
        Self {
            x,
            y,
            rate_requirement,
        }
    }
}

/// RF access-channel parameters (DBS → users).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AccessChannelParams {
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    /// Excess loss beyond free space under line of sight, dB.
    pub excess_loss_los_db: f64,
    /// Excess loss beyond free space without line of sight, dB.
    pub excess_loss_nlos_db: f64,
    /// Environment constant of the LoS-probability sigmoid.
    pub los_alpha: f64,
    /// Environment constant of the LoS-probability sigmoid.
    pub los_beta: f64,
    /// DBS transmit power, W.
    pub tx_power: f64,
    /// Receiver noise power, W.
    pub noise_power: f64,
    /// Total access bandwidth available at the DBS, Hz.
    pub total_bandwidth: f64,
    /// Speed of light, m/s.
    pub speed_of_light: f64,
}

impl Default for AccessChannelParams {
    fn default() -> Self {
        Self {
            carrier_frequency: 2.0e9,
            excess_loss_los_db: 1.0,
            excess_loss_nlos_db: 20.0,
            los_alpha: 9.6,
            los_beta: 0.28,
            tx_power: 0.1,
            // -104 dBm.
            noise_power: 3.981_071_705_534_972e-14,
            total_bandwidth: 20.0e6,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

/// How the FSO attenuation factor (dB/km) is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum AttenuationModel {
    /// Fixed attenuation, dB/km.
    FixedDbPerKm(f64),
    /// Derived from meteorological visibility via [`attenuation_gamma`].
    FromVisibility,
}

/// FSO backhaul-link parameters (MBS → DBS).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FsoLinkParams {
    /// Optical transmit power, W.
    pub tx_power: f64,
    /// Transmitter optical efficiency, in (0, 1].
    pub tx_efficiency: f64,
    /// Receiver optical efficiency, in (0, 1].
    pub rx_efficiency: f64,
    /// Receiver aperture diameter, m.
    pub aperture_diameter: f64,
    /// Full transmit-beam divergence angle, rad.
    pub divergence: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Planck constant, J·s.
    pub planck: f64,
    /// Receiver sensitivity, photons/bit.
    pub receiver_sensitivity: f64,
    /// Meteorological visibility, km. Used by [`AttenuationModel::FromVisibility`].
    pub visibility_km: f64,
    pub attenuation: AttenuationModel,
}

impl Default for FsoLinkParams {
    fn default() -> Self {
        Self {
            tx_power: 1.0e-3,
            tx_efficiency: 0.9,
            rx_efficiency: 0.7,
            aperture_diameter: 0.0425,
            divergence: 1.0e-3,
            wavelength: 1.55e-6,
            planck: 6.626e-34,
            receiver_sensitivity: 67_885.0,
            visibility_km: 10.0,
            attenuation: AttenuationModel::FixedDbPerKm(1.0),
        }
    }
}

impl FsoLinkParams {
    /// Energy of one photon at the carrier wavelength, J.
    pub fn photon_energy(&self) -> f64 {
        self.planck * SPEED_OF_LIGHT / self.wavelength
    }

    /// Attenuation factor in effect, dB/km, resolving [`Self::attenuation`].
    pub fn attenuation_db_per_km(&self) -> Result<f64, ModelError> {
        match self.attenuation {
            AttenuationModel::FixedDbPerKm(gamma) => Ok(gamma),
            AttenuationModel::FromVisibility => attenuation_gamma(self),
        }
    }
}

/// Permitted DBS flight altitudes, meters. `0 < min ≤ max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AltitudeBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for AltitudeBounds {
    fn default() -> Self {
        Self {
            min: 50.0,
            max: 500.0,
        }
    }
}

impl AltitudeBounds {
    pub fn clamp(&self, h: f64) -> f64 {
        h.clamp(self.min, self.max)
    }

    pub fn contains(&self, h: f64) -> bool {
        h >= self.min && h <= self.max
    }
}

/// Every physical constant the solvers need, bundled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NetworkConfig {
    pub access: AccessChannelParams,
    pub fso: FsoLinkParams,
    pub altitude: AltitudeBounds,
}

impl NetworkConfig {
    /// Rejects out-of-range parameters with the offending field named.
    pub fn validate(&self) -> Result<(), ModelError> {
        let a = &self.access;
        let check = |ok: bool, what: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter(what))
            }
        };
        check(a.carrier_frequency > 0.0, "carrier frequency must be positive")?;
        check(a.excess_loss_los_db >= 0.0, "LoS excess loss must be non-negative")?;
        check(
            a.excess_loss_nlos_db >= a.excess_loss_los_db,
            "NLoS excess loss must be at least the LoS excess loss",
        )?;
        check(a.los_alpha > 0.0, "LoS alpha must be positive")?;
        check(a.los_beta > 0.0, "LoS beta must be positive")?;
        check(a.tx_power > 0.0, "DBS transmit power must be positive")?;
        check(a.noise_power > 0.0, "noise power must be positive")?;
        check(a.total_bandwidth > 0.0, "total bandwidth must be positive")?;
        check(a.speed_of_light > 0.0, "speed of light must be positive")?;

        let f = &self.fso;
        check(f.tx_power > 0.0, "FSO transmit power must be positive")?;
        check(
            f.tx_efficiency > 0.0 && f.tx_efficiency <= 1.0,
            "FSO transmitter efficiency must be in (0, 1]",
        )?;
        check(
            f.rx_efficiency > 0.0 && f.rx_efficiency <= 1.0,
            "FSO receiver efficiency must be in (0, 1]",
        )?;
        check(f.aperture_diameter > 0.0, "aperture diameter must be positive")?;
        check(f.divergence > 0.0, "beam divergence must be positive")?;
        check(f.wavelength > 0.0, "wavelength must be positive")?;
        check(f.planck > 0.0, "Planck constant must be positive")?;
        check(
            f.receiver_sensitivity > 0.0,
            "receiver sensitivity must be positive",
        )?;
        check(f.visibility_km > 0.0, "visibility must be positive")?;
        if let AttenuationModel::FixedDbPerKm(g) = f.attenuation {
            check(g >= 0.0, "fixed attenuation must be non-negative")?;
        }

        let b = &self.altitude;
        check(
            b.min > 0.0 && b.min <= b.max,
            "altitude bounds must satisfy 0 < min <= max",
        )?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Access-channel operations
// ---------------------------------------------------------------------------

/// Slant distance from the DBS to a ground user, meters.
pub fn distance_3d(dbs: &Position3D, user: &UserProfile) -> f64 {
    let l = dbs.horizontal_distance_to(user.x, user.y);
    math::hypot(l, dbs.h)
}

/// Probability of line of sight between the DBS and a ground user.
///
/// Sigmoid in the elevation angle θ (degrees): 1/(1 + α·exp(−β(θ − α))).
/// Directly overhead (zero horizontal offset) maps to θ = 90°.
pub fn los_probability(
    dbs: &Position3D,
    user: &UserProfile,
    params: &AccessChannelParams,
) -> Result<f64, ModelError> {
    let l = dbs.horizontal_distance_to(user.x, user.y);
    if l == 0.0 && dbs.h == 0.0 {
        return Err(ModelError::CoincidentPoints);
    }
    let theta_deg = if l == 0.0 {
        90.0
    } else {
        math::atan(dbs.h / l) * (180.0 / core::f64::consts::PI)
    };
    let a = params.los_alpha;
    Ok(1.0 / (1.0 + a * math::exp(-params.los_beta * (theta_deg - a))))
}

/// Expected pathloss DBS → user in dB: free-space loss plus the
/// LoS-probability-weighted blend of the two excess losses.
pub fn average_pathloss_db(
    dbs: &Position3D,
    user: &UserProfile,
    params: &AccessChannelParams,
) -> Result<f64, ModelError> {
    let d = distance_3d(dbs, user);
    if d == 0.0 {
        return Err(ModelError::ZeroDistance);
    }
    let rho = los_probability(dbs, user, params)?;
    let fspl = 20.0
        * math::log10(
            4.0 * core::f64::consts::PI * params.carrier_frequency * d / params.speed_of_light,
        );
    Ok(fspl + rho * params.excess_loss_los_db + (1.0 - rho) * params.excess_loss_nlos_db)
}

/// Linear receive SNR at the given pathloss.
pub fn snr(pathloss_db: f64, params: &AccessChannelParams) -> f64 {
    params.tx_power * math::db_to_linear(-pathloss_db) / params.noise_power
}

/// Shannon rate over `bandwidth` Hz at the given pathloss, bits/s.
pub fn access_rate(bandwidth: f64, pathloss_db: f64, params: &AccessChannelParams) -> f64 {
    bandwidth * math::log2(1.0 + snr(pathloss_db, params))
}

/// Bandwidth that exactly meets the user's rate requirement, Hz.
///
/// Inverse of [`access_rate`] in its bandwidth argument.
pub fn required_bandwidth(
    user: &UserProfile,
    pathloss_db: f64,
    params: &AccessChannelParams,
) -> Result<f64, ModelError> {
    let s = snr(pathloss_db, params);
    if s <= 0.0 {
        return Err(ModelError::NonPositiveSnr);
    }
    Ok(user.rate_requirement / math::log2(1.0 + s))
}

// ---------------------------------------------------------------------------
// FSO backhaul operations
// ---------------------------------------------------------------------------

/// Kim-model scattering exponent as a piecewise function of visibility (km).
///
/// Each boundary belongs to the branch whose inequality includes it:
/// q(50) = 1.3, q(6) = 0.16·6 + 0.34, q(1) = 0.5, q(0.5) = 0.
pub fn scattering_exponent_q(visibility_km: f64) -> f64 {
    debug_assert!(visibility_km >= 0.0);
    let v = visibility_km;
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

/// Atmospheric attenuation from visibility, dB/km:
/// (3.91/v)·(λ_nm/550)^(−q).
pub fn attenuation_gamma(params: &FsoLinkParams) -> Result<f64, ModelError> {
    let v = params.visibility_km;
    if v <= 0.0 {
        return Err(ModelError::ZeroVisibility);
    }
    let q = scattering_exponent_q(v);
    let wavelength_nm = params.wavelength * 1.0e9;
    Ok(3.91 / v * math::powf(wavelength_nm / 550.0, -q))
}

/// Achievable FSO backhaul rate MBS → DBS, bits/s.
///
/// Photon budget: transmit power through both optics efficiencies and the
/// atmospheric loss, collected over the aperture out of the diverged beam
/// footprint, divided by the energy of the photons a bit requires. The
/// attenuation exponent takes the link length in kilometers (γ is dB/km);
/// the geometric spreading takes it in meters.
pub fn fso_rate(
    mbs: &Position3D,
    dbs: &Position3D,
    params: &FsoLinkParams,
) -> Result<f64, ModelError> {
    let l_m = mbs.distance_to(dbs);
    if l_m == 0.0 {
        return Err(ModelError::CoincidentPoints);
    }
    let gamma = params.attenuation_db_per_km()?;
    let l_km = l_m / 1000.0;
    let aperture = params.aperture_diameter;
    let half_divergence = params.divergence / 2.0;
    let numerator = params.tx_power
        * params.tx_efficiency
        * params.rx_efficiency
        * math::db_to_linear(-gamma * l_km)
        * aperture
        * aperture;
    let denominator = core::f64::consts::PI
        * half_divergence
        * half_divergence
        * l_m
        * l_m
        * params.photon_energy()
        * params.receiver_sensitivity;
    Ok(numerator / denominator)
}

/// dBm → watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1.0e-3 * math::db_to_linear(dbm)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
