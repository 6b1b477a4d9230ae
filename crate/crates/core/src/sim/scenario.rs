//! Scenario description, builtin scenarios and the schedules derived from them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::PriorityAssignment;
use crate::error::{Error, Result};
use crate::mpc::{ComfortWindow, HorizonConfig, PriceSchedule};
use crate::thermal::{
    compose_multizone, DiscreteZoneModel, DisturbanceSample, HvacMode, MultiZoneModel, Orientation, WallBoundary,
    ZoneThermalParams,
};

/// Builtin scenario configs, identical to [`build_small_scale`] and [`build_large_scale`].
pub const SMALL3_TOML: &str = include_str!("../../scenarios/small3.toml");
pub const LARGE36_TOML: &str = include_str!("../../scenarios/large36.toml");

/// Per-step shared cap for every three zones.
pub const SUFFICIENT_CAP_PER_3: f64 = 2500.0;
pub const SCARCE_CAP_PER_3: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Centralized,
    Decentralized,
    Distributed,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Centralized, Strategy::Decentralized, Strategy::Distributed];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Centralized => "centralized",
            Strategy::Decentralized => "decentralized",
            Strategy::Distributed => "distributed",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Allowance protocol of the distributed strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// One-to-one when every level has one zone, multi-to-one otherwise.
    #[default]
    Auto,
    OneToOne,
    MultiToOne,
}

/// Shared cap over the day, W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapProfile {
    Constant(f64),
    /// 24 hourly values.
    Hourly(Vec<f64>),
}

impl CapProfile {
    pub fn at_hour(&self, hour: f64) -> f64 {
        match self {
            CapProfile::Constant(c) => *c,
            CapProfile::Hourly(v) => v[(hour.rem_euclid(24.0).floor() as usize).min(23)],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            CapProfile::Constant(c) => c.is_finite() && *c >= 0.0,
            CapProfile::Hourly(v) => v.len() == 24 && v.iter().all(|c| c.is_finite() && *c >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("cap must be a non-negative constant or 24 hourly values".into()))
        }
    }
}

/// `[start_hour, end_hour)` of the day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourWindow {
    pub start_hour: f64,
    pub end_hour: f64,
}

impl HourWindow {
    pub fn contains(&self, hour: f64) -> bool {
        let h = hour.rem_euclid(24.0);
        self.start_hour <= h && h < self.end_hour
    }
}

/// Comfort band in force over part of the day; no limit elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortBand {
    pub start_hour: f64,
    pub end_hour: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSpec {
    pub horizon: usize,
    pub alpha: f64,
    /// Weight of each priority level in the centralized objective.
    pub theta: Vec<f64>,
    pub u_min: f64,
    pub u_max: f64,
    #[serde(default)]
    pub mode: HvacMode,
}

/// Diurnal synthetic weather.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weather {
    pub mean_temp: f64,
    pub amplitude: f64,
    pub peak_hour: f64,
    /// Peak radiation absorbed on the east, south and west outside surfaces, W.
    pub wall_solar_peak: f64,
    /// Peak solar gain into the zone air, W.
    pub zone_solar_peak: f64,
}

impl Weather {
    pub fn outdoor_temp(&self, hour: f64) -> f64 {
        self.mean_temp + self.amplitude * (2.0 * PI * (hour - self.peak_hour) / 24.0).cos()
    }

    /// Daylight half-sine between 06:00 and 18:00.
    fn daylight(hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        if (6.0..=18.0).contains(&h) {
            (PI * (h - 6.0) / 12.0).sin()
        } else {
            0.0
        }
    }

    pub fn wall_radiation(&self, hour: f64, wall: Orientation) -> f64 {
        let peak = match wall {
            Orientation::East => 9.0,
            Orientation::South => 12.0,
            Orientation::West => 15.0,
            Orientation::North => return 0.0,
        };
        let h = hour.rem_euclid(24.0);
        if !(6.0..=18.0).contains(&h) {
            return 0.0;
        }
        self.wall_solar_peak * (PI * (h - peak) / 12.0).cos().max(0.0)
    }

    pub fn zone_radiation(&self, hour: f64) -> f64 {
        self.zone_solar_peak * Self::daylight(hour)
    }
}

/// Internal gains per zone during occupied hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalGains {
    pub floor_area: f64,
    /// m² per occupant.
    pub area_per_person: f64,
    /// Sensible heat per occupant, W.
    pub sensible_per_person: f64,
    /// W/m²
    pub lighting: f64,
    /// W/m²
    pub equipment: f64,
}

impl InternalGains {
    pub fn occupied_load(&self) -> f64 {
        self.floor_area * (self.sensible_per_person / self.area_per_person + self.lighting + self.equipment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub name: String,
    pub priority: usize,
    pub initial_temp: f64,
    /// Reference parameters when omitted.
    #[serde(default, skip_serializing_if = "is_reference")]
    pub thermal: ZoneThermalParams,
    /// Boundary of each wall; all ambient when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walls: Option<[WallBoundary; 4]>,
    pub comfort: Vec<ComfortBand>,
}

impl ZoneSpec {
    pub fn band_at(&self, hour: f64) -> (f64, f64) {
        let h = hour.rem_euclid(24.0);
        self.comfort
            .iter()
            .find(|b| b.start_hour <= h && h < b.end_hour)
            .map(|b| (b.lower, b.upper))
            .unwrap_or((f64::NEG_INFINITY, f64::INFINITY))
    }
}

/// Plant deviation from the controller's model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    /// Relative R/C perturbation, each zone drawn uniformly in `±mismatch`.
    #[serde(default)]
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Closed-loop steps `K`.
    pub steps: usize,
    pub step_seconds: f64,
    pub start_hour: f64,
    pub strategy: Strategy,
    #[serde(default)]
    pub protocol: Protocol,
    pub seed: u64,
    pub cap: CapProfile,
    pub control: ControlSpec,
    pub occupancy: HourWindow,
    pub weather: Weather,
    pub gains: InternalGains,
    #[serde(default)]
    pub plant: PlantSpec,
    pub prices: PriceSchedule,
    pub zones: Vec<ZoneSpec>,
}

fn is_reference(p: &ZoneThermalParams) -> bool {
    *p == ZoneThermalParams::reference()
}

fn band(start_hour: f64, end_hour: f64, upper: f64) -> ComfortBand {
    ComfortBand {
        start_hour,
        end_hour,
        lower: 22.0,
        upper,
    }
}

fn base(name: &str, n_zones: usize) -> Scenario {
    Scenario {
        name: name.into(),
        steps: 672,
        step_seconds: 900.0,
        start_hour: 0.0,
        strategy: Strategy::Distributed,
        protocol: Protocol::Auto,
        seed: 0,
        cap: CapProfile::Constant(SCARCE_CAP_PER_3 * n_zones as f64 / 3.0),
        control: ControlSpec {
            horizon: 8,
            alpha: 1e6,
            theta: vec![1.0, 0.1, 0.01],
            u_min: 0.0,
            u_max: 1500.0,
            mode: HvacMode::Cooling,
        },
        occupancy: HourWindow {
            start_hour: 10.0,
            end_hour: 20.0,
        },
        weather: Weather {
            mean_temp: 28.0,
            amplitude: 6.0,
            peak_hour: 15.0,
            wall_solar_peak: 60.0,
            zone_solar_peak: 40.0,
        },
        gains: InternalGains {
            floor_area: 36.0,
            area_per_person: 12.0,
            sensible_per_person: 60.0,
            lighting: 0.75,
            equipment: 0.4,
        },
        plant: PlantSpec::default(),
        prices: PriceSchedule::shenzhen(),
        zones: Vec::new(),
    }
}

/// Comfort bands of a zone whose upper limits step by `offset` from the first zone's.
fn office_bands(offset: f64) -> Vec<ComfortBand> {
    vec![
        band(10.0, 14.0, 24.0 + offset),
        band(14.0, 17.0, 25.0 + offset),
        band(17.0, 19.0, 24.0 + offset),
        band(19.0, 20.0, 25.0 + offset),
    ]
}

fn zone(name: String, priority: usize, comfort: Vec<ComfortBand>) -> ZoneSpec {
    ZoneSpec {
        name,
        priority,
        initial_temp: 26.0,
        thermal: ZoneThermalParams::reference(),
        walls: None,
        comfort,
    }
}

/// Three zones, priorities 1/2/3, scarce cap.
pub fn build_small_scale() -> Scenario {
    let mut s = base("small3", 3);
    s.zones = (0..3)
        .map(|m| zone(format!("zone{}", m + 1), m + 1, office_bands(0.5 * m as f64)))
        .collect();
    s
}

/// Nine floors of four zones; floor 1 is level 1, floor 3 level 2, the rest level 3.
pub fn build_large_scale() -> Scenario {
    let mut s = base("large36", 36);
    s.zones = (1..=9)
        .flat_map(|floor| {
            (1..=4).map(move |x| {
                let priority = match floor {
                    1 => 1,
                    3 => 2,
                    _ => 3,
                };
                zone(format!("{floor}{x:02}"), priority, office_bands(0.5 * (x - 1) as f64))
            })
        })
        .collect();
    s
}

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "small3" => Some(build_small_scale()),
        "large36" => Some(build_large_scale()),
        _ => None,
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::Config("scenario has no zones".into()));
        }
        if !(self.step_seconds > 0.0) {
            return Err(Error::Config("step_seconds must be positive".into()));
        }
        self.cap.validate()?;
        self.prices.validate()?;
        let assignment = self.assignment()?;
        if self.control.theta.len() != assignment.n_levels() {
            return Err(Error::Config(format!(
                "theta has {} entries for {} priority levels",
                self.control.theta.len(),
                assignment.n_levels()
            )));
        }
        if let Some(z) = self.zones.iter().find(|z| z.comfort.iter().any(|b| b.lower > b.upper)) {
            return Err(Error::Config(format!("zone {} has an empty comfort band", z.name)));
        }
        if !(0.0..1.0).contains(&self.plant.mismatch) {
            return Err(Error::Config("plant mismatch must be in [0, 1)".into()));
        }
        for z in &self.zones {
            z.thermal.validate()?;
        }
        self.horizon_config().validate()?;
        self.nominal_model()?;
        Ok(())
    }

    pub fn assignment(&self) -> Result<PriorityAssignment> {
        PriorityAssignment::new(self.zones.iter().map(|z| z.priority).collect())
    }

    pub fn hour_at(&self, step: usize) -> f64 {
        self.start_hour + step as f64 * self.step_seconds / 3600.0
    }

    pub fn horizon_config(&self) -> HorizonConfig {
        let c = &self.control;
        let theta = self
            .zones
            .iter()
            .map(|z| c.theta.get(z.priority.wrapping_sub(1)).copied().unwrap_or(f64::NAN))
            .collect();
        HorizonConfig {
            theta,
            ..HorizonConfig::uniform(self.n_zones(), c.horizon, c.alpha, c.u_min, c.u_max)
        }
    }

    fn adjacency(&self) -> Vec<[WallBoundary; 4]> {
        if self.zones.iter().all(|z| z.walls.is_none()) {
            Vec::new()
        } else {
            self.zones.iter().map(|z| z.walls.unwrap_or_default()).collect()
        }
    }

    fn compose(&self, params: Vec<ZoneThermalParams>) -> Result<MultiZoneModel> {
        let zones = params
            .iter()
            .map(|p| DiscreteZoneModel::new(p, self.step_seconds, self.control.mode))
            .collect::<Result<_>>()?;
        compose_multizone(zones, self.adjacency())
    }

    /// The controller's model.
    pub fn nominal_model(&self) -> Result<MultiZoneModel> {
        self.compose(self.zones.iter().map(|z| z.thermal).collect())
    }

    /// The simulated building; R and C perturbed when a mismatch is set.
    pub fn plant_model(&self) -> Result<MultiZoneModel> {
        let m = self.plant.mismatch;
        if m == 0.0 {
            return self.nominal_model();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let params = self
            .zones
            .iter()
            .map(|z| {
                let r = 1.0 + rng.random_range(-m..=m);
                let c = 1.0 + rng.random_range(-m..=m);
                z.thermal.scaled(r, c)
            })
            .collect();
        self.compose(params)
    }

    pub fn occupied(&self, step: usize) -> bool {
        self.occupancy.contains(self.hour_at(step))
    }

    /// Raw disturbances of every zone over `[step, step + 1)`.
    pub fn disturbances(&self, step: usize) -> Vec<DisturbanceSample> {
        // Mid-interval sampling keeps the zero-order hold centred on the interval.
        let hour = self.hour_at(step) + 0.5 * self.step_seconds / 3600.0;
        let w = &self.weather;
        let t_out = w.outdoor_temp(hour);
        let mut wall_radiation = [0.0; 4];
        for o in Orientation::ALL {
            wall_radiation[o.index()] = w.wall_radiation(hour, o);
        }
        let internal_gains = if self.occupancy.contains(self.hour_at(step)) {
            self.gains.occupied_load()
        } else {
            0.0
        };
        let sample = DisturbanceSample {
            outdoor_temp: [t_out; 4],
            wall_radiation,
            internal_gains,
            zone_radiation: w.zone_radiation(hour),
        };
        vec![sample; self.n_zones()]
    }

    /// Comfort band at the end of `step`, i.e. at time `step`.
    pub fn band(&self, zone: usize, step: usize) -> (f64, f64) {
        self.zones[zone].band_at(self.hour_at(step))
    }

    /// Band and occupancy over `step + 1 ..= step + P`.
    pub fn comfort_window(&self, zone: usize, step: usize, horizon: usize) -> ComfortWindow {
        let mut w = ComfortWindow::no_limit(horizon);
        for l in 0..horizon {
            let t = step + l + 1;
            let (lo, hi) = self.band(zone, t);
            w.lower[l] = lo;
            w.upper[l] = hi;
            w.occupied[l] = self.occupied(t);
        }
        w
    }

    pub fn price(&self, step: usize) -> f64 {
        self.prices.price_at(self.hour_at(step))
    }

    pub fn cap_at(&self, step: usize) -> f64 {
        self.cap.at_hour(self.hour_at(step))
    }

    /// Cap over `step .. step + P`.
    pub fn cap_window(&self, step: usize, horizon: usize) -> Vec<f64> {
        (step..step + horizon).map(|k| self.cap_at(k)).collect()
    }

    /// Constant cap scaled by the zone count from a per-three-zone figure.
    pub fn with_cap_per_three(mut self, per_three: f64) -> Self {
        self.cap = CapProfile::Constant(per_three * self.n_zones() as f64 / 3.0);
        self
    }

    pub fn resolved_protocol(&self) -> Result<Protocol> {
        Ok(match self.protocol {
            Protocol::Auto if self.assignment()?.is_one_to_one() => Protocol::OneToOne,
            Protocol::Auto => Protocol::MultiToOne,
            p => p,
        })
    }
}
