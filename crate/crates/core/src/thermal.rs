//! Lumped RC thermal network of a four-walled zone.
//!
//! State layout of one zone (°C):
//!
//! ```text
//! [T_z, Ti_n, Ti_e, Ti_w, Ti_s, To_n, To_e, To_w, To_s]
//! ```
//!
//! where `Ti_*` are inside wall-surface temperatures and `To_*` outside
//! wall-surface temperatures. The continuous model is `x' = Ā x + B̄ q + d̄`
//! with `q` the heat flux delivered to the zone air. Discretisation uses a
//! zero-order hold on both the input and the disturbance.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZONE_STATES: usize = 9;

pub type ZoneMatrix = SMatrix<f64, ZONE_STATES, ZONE_STATES>;
pub type ZoneVector = SVector<f64, ZONE_STATES>;

/// Wall orientation. The discriminant is the wall's slot in per-wall arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    North = 0,
    East = 1,
    West = 2,
    South = 3,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::North,
        Orientation::East,
        Orientation::West,
        Orientation::South,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// State index of the inside surface node.
    #[inline]
    pub fn inside_node(self) -> usize {
        1 + self.index()
    }

    /// State index of the outside surface node.
    #[inline]
    pub fn outside_node(self) -> usize {
        5 + self.index()
    }
}

/// Resistances in K/W, capacity in J/K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallParams {
    /// Convection on the inside surface.
    pub inside_resistance: f64,
    /// Conduction through the wall.
    pub conduction_resistance: f64,
    /// Convection on the outside surface.
    pub outside_resistance: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneThermalParams {
    pub north: WallParams,
    pub east: WallParams,
    pub west: WallParams,
    pub south: WallParams,
    /// Zone air capacity, J/K.
    pub zone_capacity: f64,
}

impl ZoneThermalParams {
    /// Reference office-zone values (east/west and north/south walls paired).
    pub fn reference() -> Self {
        let east_west = WallParams {
            inside_resistance: 0.0232,
            conduction_resistance: 0.0179,
            outside_resistance: 0.0087,
            capacity: 1.1e6,
        };
        let north_south = WallParams {
            inside_resistance: 0.0310,
            conduction_resistance: 0.0238,
            outside_resistance: 0.0116,
            capacity: 8.5e5,
        };
        ZoneThermalParams {
            north: north_south,
            east: east_west,
            west: east_west,
            south: north_south,
            zone_capacity: 4.8e4,
        }
    }

    pub fn wall(&self, o: Orientation) -> &WallParams {
        match o {
            Orientation::North => &self.north,
            Orientation::East => &self.east,
            Orientation::West => &self.west,
            Orientation::South => &self.south,
        }
    }

    pub fn wall_mut(&mut self, o: Orientation) -> &mut WallParams {
        match o {
            Orientation::North => &mut self.north,
            Orientation::East => &mut self.east,
            Orientation::West => &mut self.west,
            Orientation::South => &mut self.south,
        }
    }

    /// Sum of inside convective conductances, W/K.
    pub fn inside_conductance(&self) -> f64 {
        Orientation::ALL
            .iter()
            .map(|&o| 1.0 / self.wall(o).inside_resistance)
            .sum()
    }

    /// Scales every resistance and capacity by `factor`.
    pub fn scaled(&self, resistance_factor: f64, capacity_factor: f64) -> Self {
        let mut out = *self;
        for o in Orientation::ALL {
            let w = out.wall_mut(o);
            w.inside_resistance *= resistance_factor;
            w.conduction_resistance *= resistance_factor;
            w.outside_resistance *= resistance_factor;
            w.capacity *= capacity_factor;
        }
        out.zone_capacity *= capacity_factor;
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, o: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{o} {name} must be positive and finite, got {v}"
                )))
            }
        };
        for o in Orientation::ALL {
            let w = self.wall(o);
            let tag = format!("{o:?}").to_lowercase();
            positive("inside_resistance", &tag, w.inside_resistance)?;
            positive("conduction_resistance", &tag, w.conduction_resistance)?;
            positive("outside_resistance", &tag, w.outside_resistance)?;
            positive("capacity", &tag, w.capacity)?;
        }
        positive("zone_capacity", "zone", self.zone_capacity)
    }
}

impl Default for ZoneThermalParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Exogenous inputs acting on one zone over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceSample {
    /// Temperature beyond each wall, °C (indexed by [`Orientation`]).
    pub outdoor_temp: [f64; 4],
    /// Solar radiation absorbed on each outside surface, W.
    pub wall_radiation: [f64; 4],
    /// Internal gains (occupants, lighting, equipment), W.
    pub internal_gains: f64,
    /// Solar gain entering the zone air, W.
    pub zone_radiation: f64,
}

impl DisturbanceSample {
    pub fn uniform_outdoor(temp: f64) -> Self {
        DisturbanceSample {
            outdoor_temp: [temp; 4],
            ..Default::default()
        }
    }
}

/// Sign of the delivered heat flux relative to the non-negative input power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HvacMode {
    Heating,
    #[default]
    Cooling,
}

impl HvacMode {
    #[inline]
    pub fn flux_sign(self) -> f64 {
        match self {
            HvacMode::Heating => 1.0,
            HvacMode::Cooling => -1.0,
        }
    }
}

/// Single zone state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneState(pub ZoneVector);

impl ZoneState {
    /// Every node at the same temperature.
    pub fn uniform(temp: f64) -> Self {
        ZoneState(ZoneVector::from_element(temp))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != ZONE_STATES {
            return Err(Error::DimensionMismatch {
                context: "zone state",
                expected: ZONE_STATES,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("zone state must be finite".into()));
        }
        Ok(ZoneState(ZoneVector::from_column_slice(values)))
    }

    #[inline]
    pub fn zone_temperature(&self) -> f64 {
        self.0[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousZoneModel {
    pub a: ZoneMatrix,
    /// Heat-flux input column; only entry 0 is nonzero.
    pub b: ZoneVector,
    pub mode: HvacMode,
    params: ZoneThermalParams,
}

/// Assembles `Ā`, `B̄` for one zone from its R/C values.
pub fn build_zone_matrices(params: &ZoneThermalParams) -> Result<ContinuousZoneModel> {
    params.validate()?;
    let cz = params.zone_capacity;
    let mut a = ZoneMatrix::zeros();
    a[(0, 0)] = -params.inside_conductance() / cz;
    for o in Orientation::ALL {
        let w = params.wall(o);
        let (r, rw, ro, cw) = (
            w.inside_resistance,
            w.conduction_resistance,
            w.outside_resistance,
            w.capacity,
        );
        let (i, e) = (o.inside_node(), o.outside_node());
        a[(0, i)] = 1.0 / (cz * r);

        a[(i, 0)] = 1.0 / (cw * r);
        a[(i, i)] = (-r - rw) / (cw * r * rw);
        a[(i, e)] = 1.0 / (cw * rw);

        a[(e, i)] = 1.0 / (cw * rw);
        a[(e, e)] = (-ro - rw) / (cw * ro * rw);
    }
    let mut b = ZoneVector::zeros();
    b[0] = 1.0 / cz;
    Ok(ContinuousZoneModel {
        a,
        b,
        mode: HvacMode::Cooling,
        params: *params,
    })
}

impl ContinuousZoneModel {
    pub fn with_mode(mut self, mode: HvacMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn params(&self) -> &ZoneThermalParams {
        &self.params
    }

    /// Continuous-time disturbance term `d̄` for one sample.
    pub fn disturbance(&self, s: &DisturbanceSample) -> ZoneVector {
        let p = &self.params;
        let mut d = ZoneVector::zeros();
        d[0] = (s.internal_gains + s.zone_radiation) / p.zone_capacity;
        for o in Orientation::ALL {
            let w = p.wall(o);
            let k = o.index();
            d[o.outside_node()] = s.outdoor_temp[k] / (w.capacity * w.outside_resistance)
                + s.wall_radiation[k] / w.capacity;
        }
        d
    }

    /// Time derivative of the state under input power `u` (W, non-negative).
    pub fn derivative(&self, x: &ZoneVector, u: f64, s: &DisturbanceSample) -> ZoneVector {
        self.a * x + self.b * (self.mode.flux_sign() * u) + self.disturbance(s)
    }

    /// Zero-order-hold discretisation with sampling period `dt` seconds.
    pub fn discretize(&self, dt: f64) -> Result<DiscreteZoneModel> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling period must be positive, got {dt}"
            )));
        }
        // exp([[A dt, I dt], [0, 0]]) = [[e^{A dt}, ∫ e^{A s} ds], [0, I]]
        let n = ZONE_STATES;
        let mut aug = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug[(r, c)] = self.a[(r, c)] * dt;
            }
            aug[(r, n + r)] = dt;
        }
        let e = aug.exp();
        let a_d = ZoneMatrix::from_fn(|r, c| e[(r, c)]);
        let gamma = ZoneMatrix::from_fn(|r, c| e[(r, n + c)]);
        let b_d = gamma * self.b * self.mode.flux_sign();
        Ok(DiscreteZoneModel {
            a: a_d,
            b: b_d,
            gamma,
            dt,
            continuous: self.clone(),
        })
    }
}

/// `x(k+1) = A x(k) + B u(k) + d(k)`, `y = x[0]`.
///
/// `B` already carries the mode sign, so `u` is always non-negative power.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteZoneModel {
    pub a: ZoneMatrix,
    pub b: ZoneVector,
    /// `∫₀^dt e^{Ā s} ds`, maps `d̄` to the discrete disturbance.
    pub gamma: ZoneMatrix,
    pub dt: f64,
    continuous: ContinuousZoneModel,
}

impl DiscreteZoneModel {
    /// Builds and discretises in one call.
    pub fn new(params: &ZoneThermalParams, dt: f64, mode: HvacMode) -> Result<Self> {
        build_zone_matrices(params)?.with_mode(mode).discretize(dt)
    }

    pub fn continuous(&self) -> &ContinuousZoneModel {
        &self.continuous
    }

    pub fn mode(&self) -> HvacMode {
        self.continuous.mode
    }

    pub fn params(&self) -> &ZoneThermalParams {
        self.continuous.params()
    }

    /// Discrete disturbance `d_m(k)` for a sample held over the step.
    pub fn disturbance(&self, s: &DisturbanceSample) -> ZoneVector {
        self.gamma * self.continuous.disturbance(s)
    }

    #[inline]
    pub fn output(&self, x: &ZoneState) -> f64 {
        x.zone_temperature()
    }

    pub fn step(&self, x: &ZoneState, u: f64, s: &DisturbanceSample) -> ZoneState {
        self.step_with(x, u, &self.disturbance(s))
    }

    /// Step with a precomputed discrete disturbance vector.
    #[inline]
    pub fn step_with(&self, x: &ZoneState, u: f64, d: &ZoneVector) -> ZoneState {
        ZoneState(self.a * x.0 + self.b * u + d)
    }
}

/// What lies beyond a wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "zone")]
pub enum WallBoundary {
    #[default]
    Ambient,
    /// Another zone; its air temperature replaces the outdoor temperature.
    Zone(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiZoneModel {
    zones: Vec<DiscreteZoneModel>,
    adjacency: Vec<[WallBoundary; 4]>,
}

/// Block-diagonal composition of per-zone models.
///
/// An empty `adjacency` means every wall faces ambient air.
pub fn compose_multizone(
    zones: Vec<DiscreteZoneModel>,
    adjacency: Vec<[WallBoundary; 4]>,
) -> Result<MultiZoneModel> {
    if zones.is_empty() {
        return Err(Error::InvalidParameter("multi-zone model needs at least one zone".into()));
    }
    let n = zones.len();
    let adjacency = if adjacency.is_empty() {
        vec![[WallBoundary::Ambient; 4]; n]
    } else {
        adjacency
    };
    if adjacency.len() != n {
        return Err(Error::DimensionMismatch {
            context: "adjacency",
            expected: n,
            actual: adjacency.len(),
        });
    }
    for (m, walls) in adjacency.iter().enumerate() {
        for (w, b) in walls.iter().enumerate() {
            if let WallBoundary::Zone(j) = *b {
                if j == m {
                    return Err(Error::InvalidAdjacency(format!(
                        "zone {m} wall {w} mapped to itself"
                    )));
                }
                if j >= n {
                    return Err(Error::InvalidAdjacency(format!(
                        "zone {m} wall {w} references zone {j} of {n}"
                    )));
                }
            }
        }
    }
    Ok(MultiZoneModel { zones, adjacency })
}

impl MultiZoneModel {
    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    pub fn state_dim(&self) -> usize {
        ZONE_STATES * self.zones.len()
    }

    pub fn zones(&self) -> &[DiscreteZoneModel] {
        &self.zones
    }

    pub fn zone(&self, m: usize) -> &DiscreteZoneModel {
        &self.zones[m]
    }

    pub fn adjacency(&self) -> &[[WallBoundary; 4]] {
        &self.adjacency
    }

    pub fn is_all_ambient(&self) -> bool {
        self.adjacency
            .iter()
            .all(|w| w.iter().all(|b| *b == WallBoundary::Ambient))
    }

    /// Dense block-diagonal `A`.
    pub fn a_matrix(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        let mut a = DMatrix::zeros(n, n);
        for (m, z) in self.zones.iter().enumerate() {
            a.view_mut((m * ZONE_STATES, m * ZONE_STATES), (ZONE_STATES, ZONE_STATES))
                .copy_from(&z.a);
        }
        a
    }

    pub fn b_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.state_dim(), self.n_zones());
        for (m, z) in self.zones.iter().enumerate() {
            b.view_mut((m * ZONE_STATES, m), (ZONE_STATES, 1)).copy_from(&z.b);
        }
        b
    }

    pub fn c_matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n_zones(), self.state_dim());
        for m in 0..self.n_zones() {
            c[(m, m * ZONE_STATES)] = 1.0;
        }
        c
    }

    pub fn split_state(&self, x: &DVector<f64>) -> Result<Vec<ZoneState>> {
        self.check_len("multi-zone state", self.state_dim(), x.len())?;
        Ok((0..self.n_zones())
            .map(|m| ZoneState(ZoneVector::from_fn(|r, _| x[m * ZONE_STATES + r])))
            .collect())
    }

    pub fn join_states(states: &[ZoneState]) -> DVector<f64> {
        DVector::from_iterator(
            states.len() * ZONE_STATES,
            states.iter().flat_map(|s| s.0.iter().copied()),
        )
    }

    pub fn outputs(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_len("multi-zone state", self.state_dim(), x.len())?;
        Ok((0..self.n_zones()).map(|m| x[m * ZONE_STATES]).collect())
    }

    /// Replaces the outdoor temperature of zone-facing walls by the neighbour's
    /// current air temperature.
    pub fn resolve_disturbances(
        &self,
        zone_temps: &[f64],
        samples: &[DisturbanceSample],
    ) -> Result<Vec<DisturbanceSample>> {
        self.check_len("zone temperatures", self.n_zones(), zone_temps.len())?;
        self.check_len("disturbance samples", self.n_zones(), samples.len())?;
        Ok(samples
            .iter()
            .zip(&self.adjacency)
            .map(|(s, walls)| {
                let mut s = *s;
                for (w, b) in walls.iter().enumerate() {
                    if let WallBoundary::Zone(j) = *b {
                        s.outdoor_temp[w] = zone_temps[j];
                    }
                }
                s
            })
            .collect())
    }

    /// Stacked discrete disturbance `d(k)` given the current state.
    pub fn disturbance(&self, x: &DVector<f64>, samples: &[DisturbanceSample]) -> Result<DVector<f64>> {
        let temps = self.outputs(x)?;
        let resolved = self.resolve_disturbances(&temps, samples)?;
        Ok(DVector::from_iterator(
            self.state_dim(),
            self.zones
                .iter()
                .zip(&resolved)
                .flat_map(|(z, s)| z.disturbance(s).iter().copied().collect::<Vec<_>>()),
        ))
    }

    pub fn step(
        &self,
        x: &DVector<f64>,
        u: &[f64],
        samples: &[DisturbanceSample],
    ) -> Result<DVector<f64>> {
        self.check_len("input", self.n_zones(), u.len())?;
        let states = self.split_state(x)?;
        let temps: Vec<f64> = states.iter().map(|s| s.zone_temperature()).collect();
        let resolved = self.resolve_disturbances(&temps, samples)?;
        let next: Vec<ZoneState> = self
            .zones
            .iter()
            .zip(states.iter().zip(u.iter().zip(&resolved)))
            .map(|(z, (x, (&u, s)))| z.step(x, u, s))
            .collect();
        Ok(Self::join_states(&next))
    }

    fn check_len(&self, context: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            })
        }
    }
}

impl From<DiscreteZoneModel> for MultiZoneModel {
    fn from(z: DiscreteZoneModel) -> Self {
        MultiZoneModel {
            zones: vec![z],
            adjacency: vec![[WallBoundary::Ambient; 4]],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DT: f64 = 900.0;

    fn reference_cont() -> ContinuousZoneModel {
        build_zone_matrices(&ZoneThermalParams::reference()).unwrap()
    }

    #[test]
    fn reference_air_node_diagonal() {
        let m = reference_cont();
        let expected = -(1.0 / 0.0310 + 1.0 / 0.0232 + 1.0 / 0.0232 + 1.0 / 0.0310) / 4.8e4;
        assert_relative_eq!(m.a[(0, 0)], expected, max_relative = 1e-14);
        assert_eq!(m.b.iter().filter(|v| **v != 0.0).count(), 1);
        assert_relative_eq!(m.b[0], 1.0 / 4.8e4);
    }

    #[test]
    fn equal_resistances_give_symmetric_coupling() {
        let r = 0.05;
        let mut p = ZoneThermalParams::reference();
        for o in Orientation::ALL {
            p.wall_mut(o).inside_resistance = r;
        }
        let m = build_zone_matrices(&p).unwrap();
        for o in Orientation::ALL {
            assert_relative_eq!(m.a[(0, o.inside_node())], 1.0 / (p.zone_capacity * r));
        }
    }

    #[test]
    fn zero_sources_give_zero_disturbance() {
        let m = reference_cont();
        assert_eq!(m.disturbance(&DisturbanceSample::default()), ZoneVector::zeros());
    }

    #[test]
    fn rejects_non_positive_parameters() {
        let mut p = ZoneThermalParams::reference();
        p.east.conduction_resistance = 0.0;
        assert!(matches!(build_zone_matrices(&p), Err(Error::InvalidParameter(_))));
        let mut p = ZoneThermalParams::reference();
        p.zone_capacity = -1.0;
        assert!(build_zone_matrices(&p).is_err());
    }

    #[test]
    fn rejects_non_positive_dt() {
        let m = reference_cont();
        assert!(m.discretize(0.0).is_err());
        assert!(m.discretize(-900.0).is_err());
        assert!(m.discretize(f64::NAN).is_err());
    }

    #[test]
    fn tiny_step_is_identity() {
        let d = reference_cont().discretize(1e-9).unwrap();
        assert_relative_eq!(d.a, ZoneMatrix::identity(), epsilon = 1e-9);
        assert!(d.b.norm() < 1e-12);
    }

    #[test]
    fn doubling_zone_capacity_halves_input_gain() {
        let p = ZoneThermalParams::reference();
        let mut p2 = p;
        p2.zone_capacity *= 2.0;
        let dt = 1.0;
        let b1 = DiscreteZoneModel::new(&p, dt, HvacMode::Heating).unwrap().b[0];
        let b2 = DiscreteZoneModel::new(&p2, dt, HvacMode::Heating).unwrap().b[0];
        assert_relative_eq!(b2 / b1, 0.5, max_relative = 1e-2);
    }

    #[test]
    fn cooling_sign_flips_input_column() {
        let p = ZoneThermalParams::reference();
        let h = DiscreteZoneModel::new(&p, DT, HvacMode::Heating).unwrap();
        let c = DiscreteZoneModel::new(&p, DT, HvacMode::Cooling).unwrap();
        assert_relative_eq!(h.b, -c.b);
        assert!(c.b[0] < 0.0);
    }

    #[test]
    fn zero_in_zero_out() {
        let d = reference_cont().discretize(DT).unwrap();
        let x = d.step(&ZoneState::uniform(0.0), 0.0, &DisturbanceSample::default());
        assert_eq!(x.0, ZoneVector::zeros());
    }

    #[test]
    fn converges_to_fixed_point() {
        let d = reference_cont().discretize(DT).unwrap();
        let s = DisturbanceSample {
            outdoor_temp: [30.0, 31.0, 32.0, 29.0],
            wall_radiation: [0.0, 50.0, 80.0, 120.0],
            internal_gains: 200.0,
            zone_radiation: 40.0,
        };
        let dv = d.disturbance(&s);
        let fixed = (ZoneMatrix::identity() - d.a).lu().solve(&dv).unwrap();
        let mut x = ZoneState::uniform(20.0);
        for _ in 0..10_000 {
            x = d.step_with(&x, 0.0, &dv);
        }
        assert_relative_eq!(x.0, fixed, epsilon = 1e-9);
    }

    #[test]
    fn compose_rejects_empty_and_self_reference() {
        assert!(compose_multizone(vec![], vec![]).is_err());
        let z = reference_cont().discretize(DT).unwrap();
        let mut adj = [WallBoundary::Ambient; 4];
        adj[1] = WallBoundary::Zone(0);
        assert!(matches!(
            compose_multizone(vec![z.clone()], vec![adj]),
            Err(Error::InvalidAdjacency(_))
        ));
        adj[1] = WallBoundary::Zone(5);
        assert!(compose_multizone(vec![z.clone(), z], vec![adj; 2]).is_err());
    }

    #[test]
    fn single_zone_composition_matches_zone() {
        let z = reference_cont().discretize(DT).unwrap();
        let mz = compose_multizone(vec![z.clone()], vec![]).unwrap();
        assert_eq!(mz.a_matrix(), DMatrix::from_column_slice(9, 9, z.a.as_slice()));
        assert_eq!(mz.b_matrix(), DMatrix::from_column_slice(9, 1, z.b.as_slice()));
        assert_eq!(mz.c_matrix()[(0, 0)], 1.0);
        assert_eq!(mz.c_matrix().sum(), 1.0);
    }

    #[test]
    fn identical_zones_give_identical_blocks() {
        let z = reference_cont().discretize(DT).unwrap();
        let mz = compose_multizone(vec![z.clone(); 3], vec![]).unwrap();
        let a = mz.a_matrix();
        assert_eq!(a.nrows(), 27);
        for m in 0..3 {
            for k in 0..3 {
                let block = a.view((m * 9, k * 9), (9, 9));
                if m == k {
                    assert_eq!(block, DMatrix::from_column_slice(9, 9, z.a.as_slice()));
                } else {
                    assert!(block.iter().all(|v| *v == 0.0));
                }
            }
        }
    }

    #[test]
    fn neighbour_wall_reads_neighbour_air() {
        let z = reference_cont().discretize(DT).unwrap();
        let mut adj = vec![[WallBoundary::Ambient; 4]; 2];
        adj[0][Orientation::East.index()] = WallBoundary::Zone(1);
        let mz = compose_multizone(vec![z.clone(), z], adj).unwrap();
        let samples = vec![DisturbanceSample::uniform_outdoor(30.0); 2];
        let r = mz.resolve_disturbances(&[24.0, 21.5], &samples).unwrap();
        assert_eq!(r[0].outdoor_temp, [30.0, 21.5, 30.0, 30.0]);
        assert_eq!(r[1].outdoor_temp, [30.0; 4]);
    }

    #[test]
    fn multizone_step_rejects_bad_dimensions() {
        let z = reference_cont().discretize(DT).unwrap();
        let mz = compose_multizone(vec![z; 2], vec![]).unwrap();
        let x = DVector::zeros(18);
        let s = vec![DisturbanceSample::default(); 2];
        assert!(mz.step(&x, &[0.0], &s).is_err());
        assert!(mz.step(&DVector::zeros(9), &[0.0, 0.0], &s).is_err());
        assert!(mz.step(&x, &[0.0, 0.0], &s[..1]).is_err());
    }

    fn arb_wall() -> impl Strategy<Value = WallParams> {
        (0.005f64..0.2, 0.005f64..0.2, 0.002f64..0.1, 1e5f64..5e6).prop_map(|(r, rw, ro, c)| {
            WallParams {
                inside_resistance: r,
                conduction_resistance: rw,
                outside_resistance: ro,
                capacity: c,
            }
        })
    }

    fn arb_params() -> impl Strategy<Value = ZoneThermalParams> {
        (arb_wall(), arb_wall(), arb_wall(), arb_wall(), 1e4f64..5e5).prop_map(
            |(north, east, west, south, zone_capacity)| ZoneThermalParams {
                north,
                east,
                west,
                south,
                zone_capacity,
            },
        )
    }

    fn allowed(r: usize, c: usize) -> bool {
        if r == c {
            return true;
        }
        match (r, c) {
            (0, 1..=4) | (1..=4, 0) => true,
            (1..=4, 5..=8) | (5..=8, 1..=4) => c + 4 == r || r + 4 == c,
            _ => false,
        }
    }

    proptest! {
        #[test]
        fn sparsity_and_signs(p in arb_params()) {
            let m = build_zone_matrices(&p).unwrap();
            for r in 0..9 {
                prop_assert!(m.a[(r, r)] < 0.0);
                for c in 0..9 {
                    if r == c { continue; }
                    if allowed(r, c) {
                        prop_assert!(m.a[(r, c)] > 0.0, "({r},{c}) should be positive");
                    } else {
                        prop_assert_eq!(m.a[(r, c)], 0.0);
                    }
                }
            }
        }

        #[test]
        fn cooling_never_warms_the_next_step(
            p in arb_params(),
            u in 0.0f64..2000.0,
            du in 0.0f64..500.0,
            t in 15.0f64..35.0,
        ) {
            let d = DiscreteZoneModel::new(&p, DT, HvacMode::Cooling).unwrap();
            let x = ZoneState::uniform(t);
            let s = DisturbanceSample::uniform_outdoor(t + 3.0);
            let y1 = d.step(&x, u, &s).zone_temperature();
            let y2 = d.step(&x, u + du, &s).zone_temperature();
            prop_assert!(y2 <= y1 + 1e-12);
        }

        #[test]
        fn step_is_affine(
            x1 in prop::array::uniform9(-5.0f64..40.0),
            x2 in prop::array::uniform9(-5.0f64..40.0),
            u1 in 0.0f64..1500.0,
            u2 in 0.0f64..1500.0,
            t1 in 0.0f64..40.0,
            t2 in 0.0f64..40.0,
        ) {
            let d = reference_cont().discretize(DT).unwrap();
            let s1 = DisturbanceSample { internal_gains: 100.0, ..DisturbanceSample::uniform_outdoor(t1) };
            let s2 = DisturbanceSample { zone_radiation: 50.0, ..DisturbanceSample::uniform_outdoor(t2) };
            let s12 = DisturbanceSample {
                outdoor_temp: [t1 + t2; 4],
                internal_gains: 100.0,
                zone_radiation: 50.0,
                ..Default::default()
            };
            let xa = ZoneState::from_slice(&x1).unwrap();
            let xb = ZoneState::from_slice(&x2).unwrap();
            let lhs = d.step(&ZoneState(xa.0 + xb.0), u1 + u2, &s12).0;
            let rhs = d.step(&xa, u1, &s1).0 + d.step(&xb, u2, &s2).0
                - d.step(&ZoneState::uniform(0.0), 0.0, &DisturbanceSample::default()).0;
            for i in 0..9 {
                prop_assert!((lhs[i] - rhs[i]).abs() <= 1e-9 * (1.0 + lhs[i].abs()));
            }
        }

        #[test]
        fn composition_commutes_with_stepping(
            temps in prop::collection::vec(15.0f64..35.0, 3),
            u in prop::collection::vec(0.0f64..1500.0, 3),
            tout in 20.0f64..36.0,
        ) {
            let zones: Vec<_> = [1.0, 1.3, 0.8]
                .iter()
                .map(|f| DiscreteZoneModel::new(&ZoneThermalParams::reference().scaled(*f, 1.0), DT, HvacMode::Cooling).unwrap())
                .collect();
            let mz = compose_multizone(zones.clone(), vec![]).unwrap();
            let states: Vec<_> = temps.iter().map(|t| ZoneState::uniform(*t)).collect();
            let samples = vec![DisturbanceSample { internal_gains: 250.0, ..DisturbanceSample::uniform_outdoor(tout) }; 3];
            let mut x = MultiZoneModel::join_states(&states);
            let mut singles = states.clone();
            for _ in 0..20 {
                x = mz.step(&x, &u, &samples).unwrap();
                for m in 0..3 {
                    singles[m] = zones[m].step(&singles[m], u[m], &samples[m]);
                }
            }
            let joined = MultiZoneModel::join_states(&singles);
            prop_assert_eq!(x, joined);
        }
    }
}
