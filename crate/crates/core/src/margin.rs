//! Voltage stability indices on a reduced corridor and the alarm rule.
//!
//! All three indices reach their collapse value together on an exact
//! two-ended Thevenin equivalent:
//!
//! | index | stable side | collapse |
//! |-------|-------------|----------|
//! | apparent power, `100 |S_gl| / |S_l|` | < 100 | 100 |
//! | impedance match, `100 |Z_gl| / |Z_l|` | < 100 | 100 |
//! | voltage ratio, `|V_l| / |V_g - V_l|` | > 1 | 1 |

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::reduction::{ReducedSystem, EPSILON_CURRENT, EPSILON_DV};

pub const DEFAULT_THRESHOLD_PCT: f64 = 80.0;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MarginError {
    #[error("reduced load voltage is zero")]
    ZeroLoadVoltage,
    #[error("corridor current is zero")]
    ZeroCurrent,
    #[error("reduced load impedance is zero")]
    ZeroLoadImpedance,
    #[error("voltage across the corridor is below {0:e} pu")]
    DegenerateVoltageDifference(f64),
    #[error("threshold {0} outside (0, 200]")]
    BadThreshold(f64),
}

/// `100 |S_gl| / |S_l|` with `S_gl = V_gl conj(I_gl)` and `S_l = V_l conj(I_gl)`:
/// the loading as a percentage of the maximum deliverable apparent power.
pub fn apparent_power_index(rs: &ReducedSystem) -> Result<f64, MarginError> {
    if !(rs.i_gl.norm() >= EPSILON_CURRENT) {
        return Err(MarginError::ZeroCurrent);
    }
    if !(rs.v_l.norm() > 0.0) {
        return Err(MarginError::ZeroLoadVoltage);
    }
    let s_gl = rs.v_gl * rs.i_gl.conj();
    let s_l = rs.v_l * rs.i_gl.conj();
    Ok(100.0 * s_gl.norm() / s_l.norm())
}

/// `100 |Z_gl| / |Z_l|`; reaches 100 when load and Thevenin impedance
/// magnitudes match.
pub fn impedance_match_index(rs: &ReducedSystem) -> Result<f64, MarginError> {
    let th = rs.thevenin.ok_or(MarginError::ZeroCurrent)?;
    if !(th.z_l.norm() > 0.0) {
        return Err(MarginError::ZeroLoadImpedance);
    }
    Ok(100.0 * th.z_gl.norm() / th.z_l.norm())
}

/// `|V_l| / |V_g - V_l|`, taking the reduced generator voltage as the
/// Thevenin source. Equals 1 at collapse.
pub fn voltage_ratio_index(rs: &ReducedSystem) -> Result<f64, MarginError> {
    let drop = rs.v_gl.norm();
    if !(drop > EPSILON_DV) {
        return Err(MarginError::DegenerateVoltageDifference(EPSILON_DV));
    }
    Ok(rs.v_l.norm() / drop)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IndexKind {
    #[default]
    Apparent,
    Impedance,
    VoltageRatio,
}

impl FromStr for IndexKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "apparent" => Ok(IndexKind::Apparent),
            "impedance" => Ok(IndexKind::Impedance),
            "vratio" => Ok(IndexKind::VoltageRatio),
            other => Err(format!(
                "unknown index `{other}` (apparent, impedance, vratio)"
            )),
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::Apparent => "apparent",
            IndexKind::Impedance => "impedance",
            IndexKind::VoltageRatio => "vratio",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginConfig {
    pub index: IndexKind,
    pub threshold_pct: f64,
}

impl Default for MarginConfig {
    fn default() -> Self {
        MarginConfig {
            index: IndexKind::Apparent,
            threshold_pct: DEFAULT_THRESHOLD_PCT,
        }
    }
}

impl MarginConfig {
    pub fn new(index: IndexKind, threshold_pct: f64) -> Result<Self, MarginError> {
        if !(threshold_pct > 0.0 && threshold_pct <= 200.0) {
            return Err(MarginError::BadThreshold(threshold_pct));
        }
        Ok(MarginConfig {
            index,
            threshold_pct,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginReport {
    pub timestamp_us: i64,
    pub apparent_power_index_pct: Result<f64, MarginError>,
    pub impedance_match_pct: Result<f64, MarginError>,
    pub voltage_ratio: Result<f64, MarginError>,
    pub chosen: IndexKind,
    /// Chosen index expressed as a percentage of its collapse value.
    pub chosen_pct: f64,
    pub threshold_pct: f64,
    pub alarm: bool,
}

/// Computes every index and raises the alarm when the chosen one is at or
/// above the threshold. The voltage ratio is compared as `100 / ratio` so
/// the same percentage threshold applies to all three.
///
/// Fails only when the chosen index cannot be computed.
pub fn evaluate(rs: &ReducedSystem, config: &MarginConfig) -> Result<MarginReport, MarginError> {
    let apparent = apparent_power_index(rs);
    let impedance = impedance_match_index(rs);
    let ratio = voltage_ratio_index(rs);
    let chosen_pct = match config.index {
        IndexKind::Apparent => apparent.clone()?,
        IndexKind::Impedance => impedance.clone()?,
        IndexKind::VoltageRatio => 100.0 / ratio.clone()?,
    };
    Ok(MarginReport {
        timestamp_us: rs.timestamp_us,
        apparent_power_index_pct: apparent,
        impedance_match_pct: impedance,
        voltage_ratio: ratio,
        chosen: config.index,
        chosen_pct,
        threshold_pct: config.threshold_pct,
        alarm: chosen_pct >= config.threshold_pct,
    })
}
