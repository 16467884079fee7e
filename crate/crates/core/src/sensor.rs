//! Camera and crater-measurement model.
//!
//! The camera is a square pyramid along body +z. Each step: the four corner
//! rays are intersected with the Moon, their selenographic bounding box picks
//! candidate craters, a diameter threshold that grows with altitude decides
//! which are visible, a Bernoulli draw decides which are identified, and
//! Gaussian noise is added to the true line of sight and range.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::catalog::{crater_position_mci, CraterCatalog, CraterId, CraterRecord, Region};
use crate::dynamics::EpochState;
use crate::error::{Error, Result};
use crate::frames::{mcmf_to_mci_dcm, mcmf_to_selenographic, MoonConstants, Quaternion, Vec3};

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    /// Full angle of the square field of view, rad.
    pub angle_of_view: f64,
}

impl CameraModel {
    pub fn new(angle_of_view: f64) -> Result<Self> {
        if !(angle_of_view > 0.0 && angle_of_view < PI) {
            return Err(Error::InvalidParameter(format!(
                "angle of view {angle_of_view} rad must lie in (0, π)"
            )));
        }
        Ok(Self { angle_of_view })
    }

    pub fn half_angle_tan(&self) -> f64 {
        (0.5 * self.angle_of_view).tan()
    }

    /// Whether a body-frame direction lies inside the pyramid.
    pub fn sees(&self, dir_body: &Vec3) -> bool {
        let t = self.half_angle_tan();
        dir_body.z > 0.0 && dir_body.x.abs() <= t * dir_body.z && dir_body.y.abs() <= t * dir_body.z
    }
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            angle_of_view: 45f64.to_radians(),
        }
    }
}

/// Unit of the diameter threshold `0.1826·exp(0.01701·h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ThresholdUnits {
    /// Threshold read as kilometres.
    #[default]
    #[serde(rename = "km")]
    Kilometers,
    /// Threshold read as metres (much more permissive).
    #[serde(rename = "m")]
    Meters,
}

impl ThresholdUnits {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdUnits::Kilometers => "km",
            ThresholdUnits::Meters => "m",
        }
    }
}

impl std::str::FromStr for ThresholdUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "km" => Ok(ThresholdUnits::Kilometers),
            "m" => Ok(ThresholdUnits::Meters),
            other => Err(Error::Config(format!("threshold units must be km or m, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Per-component standard deviation added to the unit line of sight.
    pub sigma_direction: f64,
    /// Range noise standard deviation, km.
    pub sigma_range_km: f64,
    /// Probability that a visible crater is identified.
    pub identification_probability: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_direction >= 0.0 && self.sigma_range_km >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise standard deviations must be nonnegative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.identification_probability) {
            return Err(Error::InvalidParameter(
                "identification probability must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn noiseless(seed: u64) -> Self {
        Self {
            sigma_direction: 0.0,
            sigma_range_km: 0.0,
            identification_probability: 1.0,
            seed,
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_direction: 1e-4,
            sigma_range_km: 0.010,
            identification_probability: 0.85,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorModel {
    pub camera: CameraModel,
    pub noise: NoiseSpec,
    pub threshold_units: ThresholdUnits,
}

/// Independent random streams for identification and measurement noise, so
/// that changing the noise levels never changes which craters are identified.
#[derive(Debug, Clone)]
pub struct SensorRng {
    pub identification: ChaCha8Rng,
    pub measurement: ChaCha8Rng,
}

impl SensorRng {
    pub fn from_seed(seed: u64) -> Self {
        let mut identification = ChaCha8Rng::seed_from_u64(seed);
        identification.set_stream(1);
        let mut measurement = ChaCha8Rng::seed_from_u64(seed);
        measurement.set_stream(2);
        Self {
            identification,
            measurement,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CraterObservation {
    pub crater_id: CraterId,
    /// Unit line of sight from the spacecraft to the crater, body frame.
    pub direction_body: Vec3,
    /// km
    pub range_km: f64,
}

/// The four corner directions of the field of view, in MCI.
pub fn corner_rays(q_ib: &Quaternion, camera: &CameraModel) -> [Vec3; 4] {
    let t = camera.half_angle_tan();
    let r_ib = q_ib.to_dcm();
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .map(|(sx, sy)| r_ib.apply(&Vec3::new(sx * t, sy * t, 1.0).normalize()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Vec3,
    pub distance: f64,
}

/// Near intersection of the ray `origin + d·dir` (`d ≥ 0`) with a sphere.
pub fn ray_sphere_intersection(origin: &Vec3, dir: &Vec3, centre: &Vec3, radius: f64) -> Result<Option<RayHit>> {
    if (dir.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Domain(format!(
            "ray direction is not a unit vector (norm {})",
            dir.norm()
        )));
    }
    let oc = origin - centre;
    let b = dir.dot(&oc);
    let delta = b * b - (oc.norm_squared() - radius * radius);
    // Rounding can push a tangent ray slightly negative.
    if delta < -1e-12 * radius * radius {
        return Ok(None);
    }
    let distance = -b - delta.max(0.0).sqrt();
    if distance < 0.0 {
        return Ok(None);
    }
    Ok(Some(RayHit {
        point: origin + dir * distance,
        distance,
    }))
}

/// Selenographic bounding box of the footprint corners (MCI points).
///
/// The longitude range is the shortest arc holding all four corners, so it
/// wraps across the ±180° seam when the footprint straddles it.
pub fn footprint_region(corners: &[Vec3; 4], theta_m: f64) -> Result<Region> {
    let r_mi = mcmf_to_mci_dcm(theta_m).transpose();
    let mut lat_min = f64::INFINITY;
    let mut lat_max = f64::NEG_INFINITY;
    let mut lons = [0.0; 4];
    for (lon, c) in lons.iter_mut().zip(corners) {
        let p = mcmf_to_selenographic(&r_mi.apply(c))?;
        lat_min = lat_min.min(p.lat);
        lat_max = lat_max.max(p.lat);
        *lon = p.lon;
    }
    lons.sort_by(f64::total_cmp);
    // The box is the complement of the largest gap between consecutive longitudes.
    let mut best_gap = lons[0] + TAU - lons[3];
    let (mut start, mut end) = (lons[0], lons[3]);
    for k in 0..3 {
        let gap = lons[k + 1] - lons[k];
        if gap > best_gap {
            best_gap = gap;
            start = lons[k + 1];
            end = lons[k];
        }
    }
    Region::new(lat_min, lat_max, start, end)
}

/// Footprint of the camera on the Moon, or `None` when a corner ray misses.
pub fn camera_footprint(
    state: &EpochState,
    camera: &CameraModel,
    theta_m: f64,
    moon: &MoonConstants,
) -> Result<Option<Region>> {
    let mut corners = [Vec3::zeros(); 4];
    for (slot, ray) in corners.iter_mut().zip(corner_rays(&state.attitude, camera)) {
        match ray_sphere_intersection(&state.position, &ray, &Vec3::zeros(), moon.radius_km)? {
            Some(hit) => *slot = hit.point,
            None => return Ok(None),
        }
    }
    let mut region = footprint_region(&corners, theta_m)?;
    // A pole inside the field of view is not bounded by the corner latitudes.
    let r_im = mcmf_to_mci_dcm(theta_m);
    let r_bi = state.attitude.to_dcm().transpose();
    for sign in [1.0, -1.0] {
        let pole = r_im.apply(&Vec3::new(0.0, 0.0, sign * moon.radius_km));
        let facing = state.position.dot(&pole) > moon.radius_km * moon.radius_km;
        if facing && camera.sees(&r_bi.apply(&(pole - state.position))) {
            if sign > 0.0 {
                region.lat_max = FRAC_PI_2;
            } else {
                region.lat_min = -FRAC_PI_2;
            }
            region.lon_start = -PI;
            region.lon_end = PI;
        }
    }
    Ok(Some(region))
}

/// Smallest visible diameter (km) at altitude `h_km`.
pub fn visibility_threshold_km(h_km: f64, units: ThresholdUnits) -> f64 {
    let value = 0.1826 * (0.01701 * h_km).exp();
    match units {
        ThresholdUnits::Kilometers => value,
        ThresholdUnits::Meters => value * 1e-3,
    }
}

pub fn visibility_filter(candidates: Vec<&CraterRecord>, h_km: f64, units: ThresholdUnits) -> Vec<&CraterRecord> {
    let threshold = visibility_threshold_km(h_km, units);
    candidates.into_iter().filter(|c| c.diameter_km > threshold).collect()
}

/// Independent Bernoulli(p) keep decision per crater. Exactly one uniform
/// draw is consumed per crater whatever `p` is.
pub fn identification_filter<'a, R: Rng + ?Sized>(
    visible: Vec<&'a CraterRecord>,
    p: f64,
    rng: &mut R,
) -> Vec<&'a CraterRecord> {
    visible.into_iter().filter(|_| rng.random::<f64>() < p).collect()
}

/// Noisy body-frame line of sight and range for each crater.
///
/// Four normal draws are consumed per crater (three for the direction, one for
/// the range) regardless of the noise levels.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    state: &EpochState,
    craters: &[(CraterId, Vec3)],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Vec<CraterObservation> {
    let r_bi = state.attitude.to_dcm().transpose();
    let mut out = Vec::with_capacity(craters.len());
    for (id, pos) in craters {
        let mut gauss = || -> f64 { rng.sample(StandardNormal) };
        let nd = Vec3::new(gauss(), gauss(), gauss()) * noise.sigma_direction;
        let nr = gauss() * noise.sigma_range_km;
        let rel = pos - state.position;
        let range = rel.norm();
        if !(range > 0.0) {
            warn!("crater {id} coincides with the spacecraft; observation dropped");
            continue;
        }
        let truth = r_bi.apply(&(rel / range));
        let noisy = truth + nd;
        let n = noisy.norm();
        let measured_range = range + nr;
        if !(n > 0.0) || !(measured_range > 0.0) {
            debug!("crater {id}: degenerate noisy measurement dropped");
            continue;
        }
        out.push(CraterObservation {
            crater_id: *id,
            direction_body: noisy / n,
            range_km: measured_range,
        });
    }
    out
}

/// Everything the sensor produced at one epoch.
#[derive(Debug, Clone, Default)]
pub struct Detection {
    pub footprint: Option<Region>,
    pub candidate_count: usize,
    pub visible_count: usize,
    pub identified: Vec<CraterRecord>,
    pub observations: Vec<CraterObservation>,
    /// MCI position of every identified crater.
    pub matched: BTreeMap<CraterId, Vec3>,
}

/// Footprint, candidates, visibility, identification and measurement.
pub fn detect(
    state: &EpochState,
    catalog: &CraterCatalog,
    sensor: &SensorModel,
    theta_m: f64,
    moon: &MoonConstants,
    rng: &mut SensorRng,
) -> Result<Detection> {
    let h = state.altitude(moon);
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "spacecraft altitude {h} km is not above the surface"
        )));
    }
    let Some(footprint) = camera_footprint(state, &sensor.camera, theta_m, moon)? else {
        debug!("t = {}: footprint incomplete, no detections", state.t);
        return Ok(Detection::default());
    };
    let candidates = catalog.query_region(&footprint);
    let candidate_count = candidates.len();
    let visible = visibility_filter(candidates, h, sensor.threshold_units);
    let visible_count = visible.len();
    let identified = identification_filter(
        visible,
        sensor.noise.identification_probability,
        &mut rng.identification,
    );
    let positions: Vec<(CraterId, Vec3)> = identified
        .iter()
        .map(|r| (r.id, crater_position_mci(r, theta_m, moon)))
        .collect();
    let observations = synthesize_measurements(state, &positions, &sensor.noise, &mut rng.measurement);
    Ok(Detection {
        footprint: Some(footprint),
        candidate_count,
        visible_count,
        identified: identified.into_iter().cloned().collect(),
        observations,
        matched: positions.into_iter().collect(),
    })
}
