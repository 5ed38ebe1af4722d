//! Radio parameters, power-law path loss and the SINR feasibility oracle.
//!
//! Everything in here works in linear units: milliwatts for power, meters for
//! distance, plain ratios for SINR. Decibel inputs are converted once when a
//! [`RadioParams`] is built.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack applied when a linear SINR is compared against the threshold.
pub const SINR_REL_TOL: f64 = 1e-9;

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_mw(x_dbm: f64) -> f64 {
    10f64.powf(x_dbm / 10.0)
}

pub fn mw_to_dbm(x_mw: f64) -> f64 {
    10.0 * x_mw.log10()
}

/// A position in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Uniform radio parameters shared by every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    power_mw: f64,
    noise_mw: f64,
    alpha: f64,
    gamma_lin: f64,
}

impl RadioParams {
    pub fn new(power_mw: f64, noise_mw: f64, alpha: f64, gamma_lin: f64) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("power_mw", power_mw)?;
        positive("noise_mw", noise_mw)?;
        positive("alpha", alpha)?;
        positive("gamma_lin", gamma_lin)?;
        Ok(RadioParams {
            power_mw,
            noise_mw,
            alpha,
            gamma_lin,
        })
    }

    /// Builds parameters from the usual datasheet units.
    pub fn from_db(power_mw: f64, noise_dbm: f64, gamma_db: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("noise_dbm", noise_dbm), ("gamma_db", gamma_db)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        Self::new(power_mw, dbm_to_mw(noise_dbm), alpha, db_to_linear(gamma_db))
    }

    /// 802.11b-like outdoor setting: P = 1000 mW, N0 = -96 dBm,
    /// threshold 7 dB, path-loss exponent 4.5.
    pub fn paper_defaults() -> Self {
        Self::from_db(1000.0, -96.0, 7.0, 4.5).expect("default parameters are valid")
    }

    pub fn power_mw(&self) -> f64 {
        self.power_mw
    }

    pub fn noise_mw(&self) -> f64 {
        self.noise_mw
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma_lin(&self) -> f64 {
        self.gamma_lin
    }

    /// Power received at distance `d` from a transmitter, `P / d^alpha`.
    pub fn received_power(&self, d: f64) -> Result<f64> {
        if d.is_nan() || d <= 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "path loss evaluated at distance {d}"
            )));
        }
        Ok(self.power_mw / d.powf(self.alpha))
    }

    /// Longest link a lone transmitter can sustain against noise alone.
    pub fn communication_range(&self) -> f64 {
        (self.power_mw / (self.noise_mw * self.gamma_lin)).powf(1.0 / self.alpha)
    }

    /// `d <= R_c`, inclusive and with the shared relative tolerance.
    pub fn within_range(&self, d: f64) -> bool {
        d <= self.communication_range() * (1.0 + SINR_REL_TOL)
    }

    /// Whether a linear SINR value clears the threshold.
    pub fn meets_threshold(&self, sinr: f64) -> bool {
        sinr >= self.gamma_lin * (1.0 - SINR_REL_TOL)
    }
}

/// A transmitter/receiver position pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub tx: Point,
    pub rx: Point,
}

impl LinkGeometry {
    pub fn new(tx: Point, rx: Point) -> Self {
        LinkGeometry { tx, rx }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    /// Linear SINR at the receiver of each link, in input order.
    pub sinr: Vec<f64>,
    /// Smallest `sinr - gamma_lin`; `+inf` for an empty link set.
    pub min_margin: f64,
    pub feasible: bool,
}

impl SinrReport {
    /// True iff every receiver is strictly above the threshold, with no slack.
    pub fn strictly_above(&self, params: &RadioParams) -> bool {
        self.sinr.iter().all(|&s| s > params.gamma_lin)
    }
}

/// Evaluates the SINR at every receiver of a set of simultaneous transmissions.
///
/// This works directly from geometry and never looks at line-graph weights,
/// so it serves as the reference the schedulers are checked against.
pub fn sinr_feasible(params: &RadioParams, links: &[LinkGeometry]) -> Result<SinrReport> {
    let mut sinr = Vec::with_capacity(links.len());
    for (i, link) in links.iter().enumerate() {
        let signal = params
            .received_power(link.tx.distance(&link.rx))
            .map_err(|_| degenerate_pair(i, i))?;
        let mut interference = 0.0;
        for (j, other) in links.iter().enumerate() {
            if j == i {
                continue;
            }
            interference += params
                .received_power(other.tx.distance(&link.rx))
                .map_err(|_| degenerate_pair(j, i))?;
        }
        sinr.push(signal / (params.noise_mw + interference));
    }
    let min_margin = sinr
        .iter()
        .map(|s| s - params.gamma_lin)
        .fold(f64::INFINITY, f64::min);
    let feasible = sinr.iter().all(|&s| params.meets_threshold(s));
    Ok(SinrReport {
        sinr,
        min_margin,
        feasible,
    })
}

fn degenerate_pair(tx_of: usize, rx_of: usize) -> Error {
    Error::DegenerateGeometry(format!(
        "transmitter of link {tx_of} coincides with receiver of link {rx_of}"
    ))
}
