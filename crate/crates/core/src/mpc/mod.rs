//! Receding-horizon problem assembly for the three control schemes.
//!
//! Every scheme minimises, per zone, `α·Jᵛ + Jᵘ` with
//!
//! ```text
//! Jᵛ = Σₗ δ(k+l) · v(k+l)²          l = 1..P
//! Jᵘ = Σₗ λ(k+l−1) · u(k+l−1)²
//! ```
//!
//! subject to the zone's prediction model, input boxes and the soft comfort
//! band `y_min ≤ y + v`, `y_max ≥ y − v`, `v ≥ 0`. The schemes differ only in
//! how the shared cap enters: a coupling row (centralized), an equal split
//! (decentralized) or a per-zone allowance (distributed).

mod assembly;
mod strategies;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{DiscreteZoneModel, DisturbanceSample, MultiZoneModel, ZoneState, ZoneVector};

pub use strategies::{
    solve_centralized, solve_decentralized, solve_distributed_local, CentralizedPlan,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonConfig {
    /// Prediction steps `P`.
    pub horizon: usize,
    /// Comfort weight.
    pub alpha: f64,
    /// Per-zone weight in the centralized objective.
    pub theta: Vec<f64>,
    /// Per-zone input bounds, W.
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
}

impl HorizonConfig {
    /// Same bounds and unit weights for `n` zones.
    pub fn uniform(n: usize, horizon: usize, alpha: f64, u_min: f64, u_max: f64) -> Self {
        HorizonConfig {
            horizon,
            alpha,
            theta: vec![1.0; n],
            u_min: vec![u_min; n],
            u_max: vec![u_max; n],
        }
    }

    pub fn n_zones(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least one step".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be ≥ 0, got {}", self.alpha)));
        }
        let n = self.theta.len();
        for (ctx, len) in [("u_min", self.u_min.len()), ("u_max", self.u_max.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n,
                    actual: len,
                });
            }
        }
        if let Some(t) = self.theta.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {t}")));
        }
        for m in 0..n {
            if !(0.0 <= self.u_min[m] && self.u_min[m] <= self.u_max[m]) {
                return Err(Error::InvalidParameter(format!(
                    "zone {m}: need 0 ≤ u_min ≤ u_max, got [{}, {}]",
                    self.u_min[m], self.u_max[m]
                )));
            }
        }
        Ok(())
    }

    /// True when `theta` is non-increasing in zone order.
    pub fn theta_is_ordered(&self) -> bool {
        self.theta.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Comfort band for steps `k+1 ..= k+P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComfortWindow {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub occupied: Vec<bool>,
}

impl ComfortWindow {
    pub fn no_limit(len: usize) -> Self {
        ComfortWindow {
            lower: vec![f64::NEG_INFINITY; len],
            upper: vec![f64::INFINITY; len],
            occupied: vec![false; len],
        }
    }

    pub fn constant(len: usize, lower: f64, upper: f64) -> Self {
        ComfortWindow {
            lower: vec![lower; len],
            upper: vec![upper; len],
            occupied: vec![true; len],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        if self.upper.len() != n || self.occupied.len() != n {
            return Err(Error::DimensionMismatch {
                context: "comfort window",
                expected: n,
                actual: self.upper.len().min(self.occupied.len()),
            });
        }
        for l in 0..n {
            if self.lower[l] > self.upper[l] || self.lower[l].is_nan() || self.upper[l].is_nan() {
                return Err(Error::InvalidParameter(format!(
                    "comfort band at step {l} is empty: [{}, {}]",
                    self.lower[l], self.upper[l]
                )));
            }
        }
        Ok(())
    }
}

/// Time-of-day electricity tariff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBand {
    pub start_hour: f64,
    pub end_hour: f64,
    /// CNY/kWh
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceSchedule {
    pub bands: Vec<PriceBand>,
}

impl PriceSchedule {
    /// Shenzhen commercial time-of-use tariff.
    pub fn shenzhen() -> Self {
        let band = |start_hour, end_hour, price| PriceBand {
            start_hour,
            end_hour,
            price,
        };
        PriceSchedule {
            bands: vec![
                band(0.0, 8.0, 0.3358),
                band(8.0, 14.0, 0.6629),
                band(14.0, 17.0, 1.0881),
                band(17.0, 19.0, 0.6629),
                band(19.0, 22.0, 1.0881),
                band(22.0, 24.0, 0.6629),
            ],
        }
    }

    /// Price in force at `hour` of day (start inclusive, end exclusive).
    pub fn price_at(&self, hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        self.bands
            .iter()
            .find(|b| b.start_hour <= h && h < b.end_hour)
            .map(|b| b.price)
            .unwrap_or(f64::NAN)
    }

    /// Checks that the bands tile the day with positive prices.
    pub fn validate(&self) -> Result<()> {
        let mut t = 0.0;
        for b in &self.bands {
            if b.start_hour != t || b.end_hour <= b.start_hour || !(b.price > 0.0) {
                return Err(Error::Config(format!(
                    "price bands must tile 0–24 h with positive prices (at {t} h)"
                )));
            }
            t = b.end_hour;
        }
        if t != 24.0 {
            return Err(Error::Config("price bands must end at 24 h".into()));
        }
        Ok(())
    }
}

/// Weights of the two cost terms over one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTerms {
    /// `δ(k+l)`, l = 1..P
    pub comfort_weights: Vec<f64>,
    /// `λ(k+l−1)`, l = 1..P
    pub energy_weights: Vec<f64>,
}

impl CostTerms {
    pub fn comfort_cost(&self, v: &[f64]) -> f64 {
        self.comfort_weights.iter().zip(v).map(|(d, v)| d * v * v).sum()
    }

    pub fn energy_cost(&self, u: &[f64]) -> f64 {
        self.energy_weights.iter().zip(u).map(|(l, u)| l * u * u).sum()
    }
}

pub fn build_cost_terms(window: &ComfortWindow, prices: &[f64], horizon: usize) -> Result<CostTerms> {
    window.validate()?;
    for (context, len) in [("comfort window", window.len()), ("price horizon", prices.len())] {
        if len != horizon {
            return Err(Error::DimensionMismatch {
                context,
                expected: horizon,
                actual: len,
            });
        }
    }
    if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidParameter(format!("prices must be positive, got {p}")));
    }
    Ok(CostTerms {
        comfort_weights: window.occupied.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect(),
        energy_weights: prices.to_vec(),
    })
}

/// Affine output map `y = free + gain · u` over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Free response `y(k+l)` with `u ≡ 0`, l = 1..P.
    pub free: Vec<f64>,
    /// Lower-triangular `P × P` Toeplitz matrix of `C Aˡ B`.
    pub gain: DMatrix<f64>,
}

impl Prediction {
    pub fn horizon(&self) -> usize {
        self.free.len()
    }

    pub fn outputs(&self, u: &[f64]) -> Vec<f64> {
        (0..self.horizon())
            .map(|l| self.free[l] + (0..=l).map(|j| self.gain[(l, j)] * u[j]).sum::<f64>())
            .collect()
    }
}

/// Prediction from precomputed discrete disturbances `d(k) .. d(k+P−1)`.
pub fn build_prediction_from(
    model: &DiscreteZoneModel,
    x0: &ZoneState,
    disturbances: &[ZoneVector],
    horizon: usize,
) -> Result<Prediction> {
    if disturbances.len() != horizon {
        return Err(Error::DimensionMismatch {
            context: "disturbance forecast",
            expected: horizon,
            actual: disturbances.len(),
        });
    }
    let mut free = Vec::with_capacity(horizon);
    let mut x = x0.0;
    for d in disturbances {
        x = model.a * x + d;
        free.push(x[0]);
    }
    let mut impulse = Vec::with_capacity(horizon);
    let mut g = model.b;
    for _ in 0..horizon {
        impulse.push(g[0]);
        g = model.a * g;
    }
    let gain = DMatrix::from_fn(horizon, horizon, |l, j| if j <= l { impulse[l - j] } else { 0.0 });
    Ok(Prediction { free, gain })
}

pub fn build_prediction(
    model: &DiscreteZoneModel,
    x0: &ZoneState,
    forecast: &[DisturbanceSample],
    horizon: usize,
) -> Result<Prediction> {
    let d: Vec<ZoneVector> = forecast.iter().map(|s| model.disturbance(s)).collect();
    build_prediction_from(model, x0, &d, horizon)
}

/// Per-zone predictions of a composed model. Neighbour temperatures seen
/// through zone-facing walls are frozen at their value in `x0`.
pub fn build_multizone_prediction(
    model: &MultiZoneModel,
    x0: &[ZoneState],
    forecasts: &[Vec<DisturbanceSample>],
    horizon: usize,
) -> Result<Vec<Prediction>> {
    let n = model.n_zones();
    for (context, len) in [("zone states", x0.len()), ("zone forecasts", forecasts.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                actual: len,
            });
        }
    }
    let temps: Vec<f64> = x0.iter().map(|s| s.zone_temperature()).collect();
    let mut resolved: Vec<Vec<DisturbanceSample>> = vec![Vec::with_capacity(horizon); n];
    for l in 0..horizon {
        let step: Vec<DisturbanceSample> = forecasts
            .iter()
            .map(|f| f.get(l).copied())
            .collect::<Option<_>>()
            .ok_or(Error::DimensionMismatch {
                context: "disturbance forecast",
                expected: horizon,
                actual: forecasts.iter().map(Vec::len).min().unwrap_or(0),
            })?;
        for (m, s) in model.resolve_disturbances(&temps, &step)?.into_iter().enumerate() {
            resolved[m].push(s);
        }
    }
    (0..n)
        .map(|m| build_prediction(model.zone(m), &x0[m], &resolved[m], horizon))
        .collect()
}

/// Everything one zone's local problem needs at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneForecast {
    pub x0: ZoneState,
    /// Disturbances over `k .. k+P−1`.
    pub disturbances: Vec<DisturbanceSample>,
    /// Comfort band over `k+1 ..= k+P`.
    pub window: ComfortWindow,
    /// Prices over `k .. k+P−1`.
    pub prices: Vec<f64>,
}

/// Optimised input and slack sequences of one zone.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPlan {
    pub zone: usize,
    /// `u(k) .. u(k+P−1)`, W.
    pub u: Vec<f64>,
    /// `v(k+1) .. v(k+P)`, °C.
    pub v: Vec<f64>,
    /// Predicted `y(k+1) .. y(k+P)`, °C.
    pub y: Vec<f64>,
    /// Input upper bound that was imposed, W.
    pub u_upper: Vec<f64>,
    pub comfort_cost: f64,
    pub energy_cost: f64,
    /// `α·Jᵛ + Jᵘ`
    pub objective: f64,
}

impl LocalPlan {
    pub fn first_input(&self) -> f64 {
        self.u[0]
    }
}
