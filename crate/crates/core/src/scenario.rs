//! Hard-landing descent experiment: truth propagation, detect → estimate loop,
//! error series, RMSE windows and the crater-limit sweep.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::catalog::{CraterCatalog, CraterRecord};
use crate::dynamics::{nadir_attitude, propagate, EpochState, Propagated, SpecificForce};
use crate::error::{Error, Result};
use crate::estimator::{InitialGuess, NlsSettings, PoseEstimate, PoseEstimator, PositionStatus};
use crate::frames::{moon_rotation_angle, MoonConstants, Quaternion, Vec3};
use crate::sensor::{detect, CameraModel, NoiseSpec, SensorModel, SensorRng, ThresholdUnits};

/// Periapsis radius (km) that puts surface impact at t ≈ 3000 s for the
/// default orbit at a 1 s step. See [`calibrate_periapsis_radius`].
pub const DEFAULT_PERIAPSIS_RADIUS_KM: f64 = 1708.71;

/// Limits used in the crater-limit sweep when none are given.
pub const DEFAULT_SWEEP_LIMITS: [CraterLimit; 6] = [
    CraterLimit::Count(10),
    CraterLimit::Count(20),
    CraterLimit::Count(50),
    CraterLimit::Count(100),
    CraterLimit::Count(200),
    CraterLimit::Unlimited,
];

/// RNG stream for the random selection policy; sensor streams are 1 and 2.
const SELECTION_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CraterLimit {
    Count(usize),
    Unlimited,
}

impl CraterLimit {
    pub fn admits(&self, n: usize) -> bool {
        match self {
            CraterLimit::Count(l) => n <= *l,
            CraterLimit::Unlimited => true,
        }
    }
}

impl fmt::Display for CraterLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CraterLimit::Count(n) => write!(f, "{n}"),
            CraterLimit::Unlimited => f.write_str("unlimited"),
        }
    }
}

impl FromStr for CraterLimit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unlimited") || s.eq_ignore_ascii_case("none") {
            return Ok(CraterLimit::Unlimited);
        }
        s.parse().map(CraterLimit::Count).map_err(|_| {
            Error::Config(format!(
                "crater limit must be a nonnegative integer or `unlimited`, got `{s}`"
            ))
        })
    }
}

/// Parses a comma-separated list such as `10,20,unlimited`.
pub fn parse_limits(s: &str) -> Result<Vec<CraterLimit>> {
    let limits = s.split(',').map(str::parse).collect::<Result<Vec<_>>>()?;
    if limits.is_empty() {
        return Err(Error::Config("empty crater limit list".into()));
    }
    Ok(limits)
}

impl Serialize for CraterLimit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CraterLimit::Count(n) => s.serialize_u64(*n as u64),
            CraterLimit::Unlimited => s.serialize_str("unlimited"),
        }
    }
}

impl<'de> Deserialize<'de> for CraterLimit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) if n >= 0 => Ok(CraterLimit::Count(n as usize)),
            Raw::Int(n) => Err(serde::de::Error::custom(format!(
                "crater limit must be nonnegative, got {n}"
            ))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How craters are chosen when more are identified than the limit allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Largest diameter first, ties by id.
    #[default]
    LargestDiameter,
    /// Uniform random subset from a seeded stream.
    Random,
}

/// One descent experiment. Angles are in degrees, every key carries its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub apoapsis_altitude_km: f64,
    pub periapsis_radius_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub argument_of_periapsis_deg: f64,
    /// 180° starts the run at apoapsis.
    pub start_true_anomaly_deg: f64,
    pub duration_s: f64,
    pub time_step_s: f64,
    pub angle_of_view_deg: f64,
    pub sigma_direction: f64,
    pub sigma_range_km: f64,
    pub identification_probability: f64,
    pub crater_limit: CraterLimit,
    pub selection_policy: SelectionPolicy,
    pub seed: u64,
    pub eq9_units: ThresholdUnits,
    pub nls_tolerance_km: f64,
    pub nls_max_iterations: usize,
    pub rmse_window_start_s: f64,
    pub rmse_window_end_s: f64,
    pub moon_radius_km: f64,
    pub moon_mu_km3_s2: f64,
    pub moon_rotation_rate_rad_s: f64,
    /// Catalog file, relative to the working directory. The command line may override it.
    pub catalog_path: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let noise = NoiseSpec::default();
        let moon = MoonConstants::LUNAR;
        Self {
            apoapsis_altitude_km: 300.0,
            periapsis_radius_km: DEFAULT_PERIAPSIS_RADIUS_KM,
            inclination_deg: 15.0,
            raan_deg: 0.0,
            argument_of_periapsis_deg: 180.0,
            start_true_anomaly_deg: 180.0,
            duration_s: 4000.0,
            time_step_s: 1.0,
            angle_of_view_deg: 45.0,
            sigma_direction: noise.sigma_direction,
            sigma_range_km: noise.sigma_range_km,
            identification_probability: noise.identification_probability,
            crater_limit: CraterLimit::Unlimited,
            selection_policy: SelectionPolicy::LargestDiameter,
            seed: noise.seed,
            eq9_units: ThresholdUnits::Kilometers,
            nls_tolerance_km: 1e-9,
            nls_max_iterations: 50,
            rmse_window_start_s: 1800.0,
            rmse_window_end_s: 2400.0,
            moon_radius_km: moon.radius_km,
            moon_mu_km3_s2: moon.mu_km3_s2,
            moon_rotation_rate_rad_s: moon.rotation_rate_rad_s,
            catalog_path: None,
        }
    }
}

impl ScenarioConfig {
    pub fn moon(&self) -> MoonConstants {
        MoonConstants {
            radius_km: self.moon_radius_km,
            mu_km3_s2: self.moon_mu_km3_s2,
            rotation_rate_rad_s: self.moon_rotation_rate_rad_s,
        }
    }

    pub fn camera(&self) -> Result<CameraModel> {
        CameraModel::new(self.angle_of_view_deg.to_radians())
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            sigma_direction: self.sigma_direction,
            sigma_range_km: self.sigma_range_km,
            identification_probability: self.identification_probability,
            seed: self.seed,
        }
    }

    pub fn sensor(&self) -> Result<SensorModel> {
        Ok(SensorModel {
            camera: self.camera()?,
            noise: self.noise(),
            threshold_units: self.eq9_units,
        })
    }

    pub fn nls(&self) -> NlsSettings {
        NlsSettings {
            tolerance_km: self.nls_tolerance_km,
            max_iterations: self.nls_max_iterations,
            initial_guess: InitialGuess::CraterCentroid,
        }
    }

    /// Zero noise and certain identification.
    pub fn noiseless(mut self) -> Self {
        self.sigma_direction = 0.0;
        self.sigma_range_km = 0.0;
        self.identification_probability = 1.0;
        self
    }

    pub fn apoapsis_radius_km(&self) -> f64 {
        self.moon_radius_km + self.apoapsis_altitude_km
    }

    pub fn validate(&self) -> Result<()> {
        self.moon().validate()?;
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.apoapsis_altitude_km > 0.0) {
            return bad("apoapsis_altitude_km must be positive");
        }
        if !(self.periapsis_radius_km > 0.0) {
            return bad("periapsis_radius_km must be positive");
        }
        if self.periapsis_radius_km > self.apoapsis_radius_km() {
            return bad("periapsis_radius_km exceeds the apoapsis radius");
        }
        if !(self.time_step_s > 0.0) {
            return bad("time_step_s must be positive");
        }
        if !(self.duration_s >= 0.0) {
            return bad("duration_s must be nonnegative");
        }
        if !(self.rmse_window_end_s >= self.rmse_window_start_s) {
            return bad("rmse_window_end_s precedes rmse_window_start_s");
        }
        for (name, v) in [
            ("inclination_deg", self.inclination_deg),
            ("raan_deg", self.raan_deg),
            ("argument_of_periapsis_deg", self.argument_of_periapsis_deg),
            ("start_true_anomaly_deg", self.start_true_anomaly_deg),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        self.camera()?;
        self.noise().validate()?;
        self.nls().validate()
    }
}

/// Two-body state at the configured start point with a nadir-locked attitude.
pub fn build_initial_state(cfg: &ScenarioConfig) -> Result<EpochState> {
    cfg.validate()?;
    let mu = cfg.moon_mu_km3_s2;
    let r_a = cfg.apoapsis_radius_km();
    let r_p = cfg.periapsis_radius_km;
    let a = 0.5 * (r_a + r_p);
    let e = (r_a - r_p) / (r_a + r_p);
    let p = a * (1.0 - e * e);
    let nu = cfg.start_true_anomaly_deg.to_radians();
    let r = p / (1.0 + e * nu.cos());
    let vis_viva = (mu * (2.0 / r - 1.0 / a)).sqrt();
    // Perifocal position and velocity.
    let sqrt_mu_p = (mu / p).sqrt();
    let r_pf = Vec3::new(r * nu.cos(), r * nu.sin(), 0.0);
    let v_pf = Vec3::new(-sqrt_mu_p * nu.sin(), sqrt_mu_p * (e + nu.cos()), 0.0);
    debug_assert!((v_pf.norm() - vis_viva).abs() <= 1e-9 * vis_viva.max(1.0));

    let rot = |axis: &Vec3, deg: f64| Quaternion::from_axis_angle(axis, deg.to_radians());
    let q = rot(&Vec3::z(), cfg.raan_deg)
        * rot(&Vec3::x(), cfg.inclination_deg)
        * rot(&Vec3::z(), cfg.argument_of_periapsis_deg);
    let position = q.rotate(&r_pf);
    let velocity = q.rotate(&v_pf);
    Ok(EpochState {
        t: 0.0,
        position,
        velocity,
        attitude: nadir_attitude(&position, &velocity)?,
    })
}

/// Keeps the `limit` largest craters (ties by id); unchanged when within the limit.
pub fn select_craters(identified: &[CraterRecord], limit: CraterLimit) -> Vec<CraterRecord> {
    match limit {
        CraterLimit::Count(l) if identified.len() > l => {
            let mut sorted = identified.to_vec();
            sorted.sort_by(|a, b| b.diameter_km.total_cmp(&a.diameter_km).then(a.id.cmp(&b.id)));
            sorted.truncate(l);
            sorted
        }
        _ => identified.to_vec(),
    }
}

/// Uniform random subset of size `limit`; unchanged (and no draws) when within the limit.
pub fn select_craters_random(
    identified: &[CraterRecord],
    limit: CraterLimit,
    rng: &mut ChaCha8Rng,
) -> Vec<CraterRecord> {
    match limit {
        CraterLimit::Count(l) if identified.len() > l => {
            let mut picked = index::sample(rng, identified.len(), l).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| identified[i].clone()).collect()
        }
        _ => identified.to_vec(),
    }
}

/// 3-2-1 Euler angles (φ, θ, ψ), degrees, of the body-frame error rotation
/// `q_true⁻¹ ⊗ q̂`.
pub fn attitude_error_euler(q_hat: &Quaternion, q_true: &Quaternion) -> [f64; 3] {
    let dq = q_true.conjugate() * *q_hat;
    let m = *dq.to_dcm().matrix();
    let psi = m[(1, 0)].atan2(m[(0, 0)]);
    let theta = -m[(2, 0)].clamp(-1.0, 1.0).asin();
    let phi = m[(2, 1)].atan2(m[(2, 2)]);
    [phi.to_degrees(), theta.to_degrees(), psi.to_degrees()]
}

/// One epoch of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub truth: EpochState,
    pub altitude_km: f64,
    pub visible_count: usize,
    pub identified_count: usize,
    pub used_count: usize,
    pub estimate: PoseEstimate,
    /// Estimate minus truth, MCI axes, metres.
    pub position_error_m: Option<Vec3>,
    /// (φ, θ, ψ), degrees.
    pub attitude_error_deg: Option<[f64; 3]>,
}

impl StepRecord {
    pub fn status(&self) -> PositionStatus {
        self.estimate.status
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    SurfaceImpact,
    DurationReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub records: Vec<StepRecord>,
    pub termination: Termination,
    /// Time of the first propagated state at or below the surface, if reached.
    pub impact_time_s: Option<f64>,
}

/// Runs the descent: detect, limit, estimate and record at every step until
/// impact or the configured duration.
pub fn run_scenario(cfg: &ScenarioConfig, catalog: &CraterCatalog) -> Result<ScenarioRun> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut state = build_initial_state(cfg)?;
    let moon = cfg.moon();
    let sensor = cfg.sensor()?;
    let mut sensor_rng = SensorRng::from_seed(cfg.seed);
    let mut selection_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    selection_rng.set_stream(SELECTION_STREAM);
    let mut estimator = PoseEstimator::new(cfg.nls());
    let steps = (cfg.duration_s / cfg.time_step_s).floor() as u64;
    let mut records = Vec::with_capacity(steps as usize + 1);

    let mut k = 0u64;
    let termination = loop {
        records.push(step(
            cfg,
            catalog,
            &sensor,
            &moon,
            &state,
            &mut sensor_rng,
            &mut selection_rng,
            &mut estimator,
        )?);
        if k >= steps {
            break Termination::DurationReached;
        }
        k += 1;
        match propagate(&state, cfg.time_step_s, &SpecificForce::ZERO, &Vec3::zeros(), &moon)? {
            Propagated::InFlight(next) => {
                // Truth attitude is a kinematic nadir lock.
                state = EpochState {
                    t: k as f64 * cfg.time_step_s,
                    attitude: nadir_attitude(&next.position, &next.velocity)?,
                    ..next
                };
            }
            Propagated::SurfaceImpact(_) => break Termination::SurfaceImpact,
        }
    };
    let impact_time_s = (termination == Termination::SurfaceImpact).then_some(k as f64 * cfg.time_step_s);
    info!(
        "run finished after {} steps ({:?}, limit {})",
        records.len(),
        termination,
        cfg.crater_limit
    );
    Ok(ScenarioRun {
        records,
        termination,
        impact_time_s,
    })
}

#[allow(clippy::too_many_arguments)]
fn step(
    cfg: &ScenarioConfig,
    catalog: &CraterCatalog,
    sensor: &SensorModel,
    moon: &MoonConstants,
    state: &EpochState,
    sensor_rng: &mut SensorRng,
    selection_rng: &mut ChaCha8Rng,
    estimator: &mut PoseEstimator,
) -> Result<StepRecord> {
    let theta_m = moon_rotation_angle(state.t, moon.rotation_rate_rad_s);
    let detection = detect(state, catalog, sensor, theta_m, moon, sensor_rng)?;
    let selected = match cfg.selection_policy {
        SelectionPolicy::LargestDiameter => select_craters(&detection.identified, cfg.crater_limit),
        SelectionPolicy::Random => select_craters_random(&detection.identified, cfg.crater_limit, selection_rng),
    };
    let used_ids: BTreeSet<_> = selected.iter().map(|c| c.id).collect();
    let used: Vec<_> = detection
        .observations
        .iter()
        .filter(|o| used_ids.contains(&o.crater_id))
        .cloned()
        .collect();
    let estimate = estimator.estimate(&used, &detection.matched);
    let position_error_m = estimate.position.map(|p| (p - state.position) * 1000.0);
    let attitude_error_deg = estimate.attitude.map(|q| attitude_error_euler(&q, &state.attitude));
    debug!(
        "t = {}: visible {}, identified {}, used {}, {}",
        state.t,
        detection.visible_count,
        detection.identified.len(),
        used.len(),
        estimate.status.as_str()
    );
    Ok(StepRecord {
        t: state.t,
        truth: *state,
        altitude_km: state.altitude(moon),
        visible_count: detection.visible_count,
        identified_count: detection.identified.len(),
        used_count: used.len(),
        estimate,
        position_error_m,
        attitude_error_deg,
    })
}

/// Per-axis RMSE over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseRow {
    /// X, Y, Z in metres.
    pub position_m: [f64; 3],
    /// φ, θ, ψ in degrees.
    pub attitude_deg: [f64; 3],
    pub converged_steps: usize,
    pub skipped_steps: usize,
}

/// RMSE over steps with `t_start ≤ t ≤ t_end` and a converged estimate.
pub fn rmse_window(records: &[StepRecord], t_start: f64, t_end: f64) -> Result<RmseRow> {
    let in_window: Vec<&StepRecord> = records.iter().filter(|r| r.t >= t_start && r.t <= t_end).collect();
    let empty = || Error::EmptyWindow {
        start: t_start,
        end: t_end,
    };
    let position: Vec<Vec3> = in_window.iter().filter_map(|r| r.position_error_m).collect();
    if position.is_empty() {
        return Err(empty());
    }
    let attitude: Vec<[f64; 3]> = in_window.iter().filter_map(|r| r.attitude_error_deg).collect();
    let rms = |it: &mut dyn Iterator<Item = f64>, n: usize| {
        if n == 0 {
            0.0
        } else {
            (it.map(|v| v * v).sum::<f64>() / n as f64).sqrt()
        }
    };
    let mut row = RmseRow {
        position_m: [0.0; 3],
        attitude_deg: [0.0; 3],
        converged_steps: position.len(),
        skipped_steps: in_window.len() - position.len(),
    };
    for axis in 0..3 {
        row.position_m[axis] = rms(&mut position.iter().map(|e| e[axis]), position.len());
        row.attitude_deg[axis] = rms(&mut attitude.iter().map(|e| e[axis]), attitude.len());
    }
    Ok(row)
}

/// RMSE per crater limit, in the order the limits were given.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseTable {
    pub window: (f64, f64),
    pub columns: Vec<(CraterLimit, RmseRow)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub table: RmseTable,
    /// One run per limit, aligned with `table.columns`.
    pub runs: Vec<ScenarioRun>,
}

/// Runs the scenario once per limit (same seeds) in parallel and tabulates the window RMSE.
pub fn crater_limit_sweep(
    cfg: &ScenarioConfig,
    catalog: &CraterCatalog,
    limits: &[CraterLimit],
    window: (f64, f64),
) -> Result<SweepResult> {
    if limits.is_empty() {
        return Err(Error::Config("no crater limits given".into()));
    }
    let outcomes: Vec<Result<(RmseRow, ScenarioRun)>> = limits
        .par_iter()
        .map(|&limit| {
            let run = run_scenario(
                &ScenarioConfig {
                    crater_limit: limit,
                    ..cfg.clone()
                },
                catalog,
            )?;
            Ok((rmse_window(&run.records, window.0, window.1)?, run))
        })
        .collect();
    let mut columns = Vec::with_capacity(limits.len());
    let mut runs = Vec::with_capacity(limits.len());
    for (limit, outcome) in limits.iter().zip(outcomes) {
        let (row, run) = outcome?;
        columns.push((*limit, row));
        runs.push(run);
    }
    Ok(SweepResult {
        table: RmseTable { window, columns },
        runs,
    })
}

/// Time of surface impact for the configured orbit, or `None` within `max_time_s`.
pub fn impact_time(cfg: &ScenarioConfig, max_time_s: f64) -> Result<Option<f64>> {
    let moon = cfg.moon();
    let mut s = build_initial_state(cfg)?;
    let mut k = 0u64;
    while (k as f64) * cfg.time_step_s < max_time_s {
        k += 1;
        match propagate(&s, cfg.time_step_s, &SpecificForce::ZERO, &Vec3::zeros(), &moon)? {
            Propagated::InFlight(next) => s = next,
            Propagated::SurfaceImpact(_) => return Ok(Some(k as f64 * cfg.time_step_s)),
        }
    }
    Ok(None)
}

/// Bisection on the periapsis radius so that impact happens at `target_s`.
/// A lower periapsis means an earlier impact.
pub fn calibrate_periapsis_radius(cfg: &ScenarioConfig, target_s: f64) -> Result<f64> {
    let horizon = 4.0 * target_s;
    let impact_at = |rp: f64| {
        impact_time(
            &ScenarioConfig {
                periapsis_radius_km: rp,
                ..cfg.clone()
            },
            horizon,
        )
        .map(|t| t.unwrap_or(f64::INFINITY))
    };
    let (mut lo, mut hi) = (1.0, cfg.moon_radius_km);
    if impact_at(lo)? > target_s || impact_at(hi)? < target_s {
        return Err(Error::InvalidParameter(format!(
            "no periapsis radius inside the Moon gives impact at {target_s} s"
        )));
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if impact_at(mid)? < target_s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
