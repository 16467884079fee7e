//! Pose estimation from crater observations.
//!
//! Position comes from the crater ranges by Newton iteration on the squared
//! range residuals `f_j(x) = ‖c_j - x‖² - ρ_j²`, each step solved as a
//! minimum-norm least-squares problem. Attitude comes from QUEST applied to the
//! measured body-frame lines of sight and the inertial lines of sight rebuilt
//! from the estimated position.

use std::collections::BTreeMap;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector, Matrix3};

use crate::catalog::CraterId;
use crate::error::{Error, Result};
use crate::frames::{Quaternion, Vec3};
use crate::sensor::CraterObservation;

/// Minimum number of ranges for a position fix.
pub const MIN_CRATERS_FOR_POSITION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    /// Centroid direction of the matched craters, lifted by the mean range.
    CraterCentroid,
    /// Caller-supplied prior, e.g. from inertial navigation.
    Fixed(Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsSettings {
    /// Convergence threshold on the Newton step norm, km.
    pub tolerance_km: f64,
    pub max_iterations: usize,
    /// Used only when no warm start is available.
    pub initial_guess: InitialGuess,
}

impl Default for NlsSettings {
    fn default() -> Self {
        Self {
            tolerance_km: 1e-9,
            max_iterations: 50,
            initial_guess: InitialGuess::CraterCentroid,
        }
    }
}

impl NlsSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_km > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "NLS tolerance must be positive and max iterations at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PositionStatus {
    Converged,
    SkippedInsufficientCraters,
    Diverged,
}

impl PositionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PositionStatus::Converged => "converged",
            PositionStatus::SkippedInsufficientCraters => "skipped",
            PositionStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionSolution {
    /// Set only when converged.
    pub position: Option<Vec3>,
    pub status: PositionStatus,
    pub crater_count: usize,
    pub iterations: usize,
    pub final_step_norm: f64,
    /// `‖F‖²` at each iterate, starting with the initial guess.
    pub cost_trace: Vec<f64>,
}

impl PositionSolution {
    fn skipped(n: usize) -> Self {
        Self {
            position: None,
            status: PositionStatus::SkippedInsufficientCraters,
            crater_count: n,
            iterations: 0,
            final_step_norm: 0.0,
            cost_trace: Vec::new(),
        }
    }
}

/// `f_j = ‖c_j - x‖² - ρ_j²`, km².
pub fn nls_residuals(x: &Vec3, craters: &[Vec3], ranges: &[f64]) -> DVector<f64> {
    assert_eq!(craters.len(), ranges.len(), "one range per crater");
    DVector::from_iterator(
        craters.len(),
        craters
            .iter()
            .zip(ranges)
            .map(|(c, rho)| (c - x).norm_squared() - rho * rho),
    )
}

/// Row `j` is `∂f_j/∂x = -2 (c_j - x)ᵀ`.
pub fn nls_jacobian(x: &Vec3, craters: &[Vec3]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(craters.len(), 3);
    for (i, c) in craters.iter().enumerate() {
        let d = (c - x) * -2.0;
        j[(i, 0)] = d.x;
        j[(i, 1)] = d.y;
        j[(i, 2)] = d.z;
    }
    j
}

/// Cold start: centroid direction of the craters at mean crater radius plus mean range.
pub fn centroid_guess(craters: &[Vec3], ranges: &[f64]) -> Vec3 {
    let n = craters.len() as f64;
    let centroid = craters.iter().sum::<Vec3>() / n;
    let mean_radius = craters.iter().map(|c| c.norm()).sum::<f64>() / n;
    let mean_range = ranges.iter().sum::<f64>() / n;
    centroid.normalize() * (mean_radius + mean_range)
}

/// Newton iteration from `start` on paired crater positions and ranges.
pub fn solve_position(craters: &[Vec3], ranges: &[f64], settings: &NlsSettings, start: Vec3) -> PositionSolution {
    let n = craters.len();
    if n < MIN_CRATERS_FOR_POSITION {
        return PositionSolution::skipped(n);
    }
    let mut x = start;
    let mut trace = Vec::with_capacity(8);
    let mut step_norm = f64::INFINITY;
    let diverged = |iterations, step, trace| PositionSolution {
        position: None,
        status: PositionStatus::Diverged,
        crater_count: n,
        iterations,
        final_step_norm: step,
        cost_trace: trace,
    };
    for k in 1..=settings.max_iterations {
        let f = nls_residuals(&x, craters, ranges);
        trace.push(f.norm_squared());
        let j = nls_jacobian(&x, craters);
        let svd = j.svd(true, true);
        let s = &svd.singular_values;
        let (smax, smin) = (s.max(), s.min());
        if !(smin > 1e-12 * smax) {
            warn!(
                "position solve: rank-deficient Jacobian (σ_min/σ_max = {:e})",
                smin / smax
            );
            return diverged(k, step_norm, trace);
        }
        let delta = match svd.solve(&f, 0.0) {
            Ok(d) => d,
            Err(e) => {
                warn!("position solve: {e}");
                return diverged(k, step_norm, trace);
            }
        };
        let delta = Vec3::new(delta[0], delta[1], delta[2]);
        x -= delta;
        step_norm = delta.norm();
        if !x.iter().all(|v| v.is_finite()) {
            return diverged(k, step_norm, trace);
        }
        if step_norm <= settings.tolerance_km {
            trace.push(nls_residuals(&x, craters, ranges).norm_squared());
            return PositionSolution {
                position: Some(x),
                status: PositionStatus::Converged,
                crater_count: n,
                iterations: k,
                final_step_norm: step_norm,
                cost_trace: trace,
            };
        }
    }
    debug!(
        "position solve: no convergence after {} iterations (step {step_norm:e} km)",
        settings.max_iterations
    );
    diverged(settings.max_iterations, step_norm, trace)
}

/// Pairs each observation with its matched crater; unmatched ids are dropped.
fn paired<'a>(
    obs: &'a [CraterObservation],
    matched: &'a BTreeMap<CraterId, Vec3>,
) -> impl Iterator<Item = (&'a CraterObservation, Vec3)> + 'a {
    obs.iter().filter_map(move |o| match matched.get(&o.crater_id) {
        Some(p) => Some((o, *p)),
        None => {
            warn!("observation of crater {} has no matched catalog position", o.crater_id);
            None
        }
    })
}

/// Position fix from observed ranges. Skips when fewer than three craters are available.
pub fn estimate_position(
    obs: &[CraterObservation],
    matched: &BTreeMap<CraterId, Vec3>,
    settings: &NlsSettings,
    warm_start: Option<Vec3>,
) -> PositionSolution {
    let (craters, ranges): (Vec<Vec3>, Vec<f64>) = paired(obs, matched).map(|(o, p)| (p, o.range_km)).unzip();
    if craters.len() < MIN_CRATERS_FOR_POSITION {
        return PositionSolution::skipped(craters.len());
    }
    let start = warm_start.unwrap_or_else(|| match settings.initial_guess {
        InitialGuess::Fixed(p) => p,
        InitialGuess::CraterCentroid => centroid_guess(&craters, &ranges),
    });
    solve_position(&craters, &ranges, settings, start)
}

/// Matched body and inertial unit vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorPairs {
    pub body: Vec<Vec3>,
    pub reference: Vec<Vec3>,
}

/// Inertial unit vectors `(c - r) / ‖c - r‖` from the estimated position to each crater.
/// Pairs whose crater coincides with the position are dropped from both lists.
pub fn build_reference_vectors(body: &[Vec3], craters: &[Vec3], position: &Vec3) -> VectorPairs {
    let mut pairs = VectorPairs::default();
    for (b, c) in body.iter().zip(craters) {
        let d = c - position;
        let n = d.norm();
        if n > 0.0 && n.is_finite() {
            pairs.body.push(*b);
            pairs.reference.push(d / n);
        } else {
            warn!("crater at {c:?} coincides with the position estimate; pair dropped");
        }
    }
    pairs
}

/// Weighted Wahba loss `Σ wᵢ ‖rᵢ - R(q) bᵢ‖²` for `q = q_ib`.
pub fn wahba_loss(q: &Quaternion, body: &[Vec3], reference: &[Vec3], weights: &[f64]) -> f64 {
    let r = q.to_dcm();
    body.iter()
        .zip(reference)
        .zip(weights)
        .map(|((b, rf), w)| w * (rf - r.apply(b)).norm_squared())
        .sum()
}

fn all_parallel(v: &[Vec3]) -> bool {
    let first = v[0];
    v.iter()
        .all(|x| first.cross(x).norm() <= 1e-12 * first.norm() * x.norm())
}

/// Rotations by 180° about x, y and z, as (quaternion, matrix).
fn half_turns() -> [(Quaternion, Matrix3<f64>); 3] {
    [
        (
            Quaternion::new(0.0, 1.0, 0.0, 0.0),
            Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)),
        ),
        (
            Quaternion::new(0.0, 0.0, 1.0, 0.0),
            Matrix3::from_diagonal(&Vec3::new(-1.0, 1.0, -1.0)),
        ),
        (
            Quaternion::new(0.0, 0.0, 0.0, 1.0),
            Matrix3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0)),
        ),
    ]
}

fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

/// Davenport quantities of the profile matrix `M = Σ w r bᵀ`.
struct Profile {
    sigma: f64,
    s: Matrix3<f64>,
    z: Vec3,
}

impl Profile {
    fn new(m: &Matrix3<f64>) -> Self {
        Self {
            sigma: m.trace(),
            s: m + m.transpose(),
            z: Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]),
        }
    }

    /// Largest root of the characteristic equation by Newton's method from `start`.
    fn lambda_max(&self, start: f64) -> f64 {
        let (sigma, s, z) = (self.sigma, &self.s, &self.z);
        let kappa = adjugate(s).trace();
        let delta = s.determinant();
        let a = sigma * sigma - kappa;
        let b = sigma * sigma + z.norm_squared();
        let c = delta + z.dot(&(s * z));
        let d = z.dot(&(s * (s * z)));
        let mut lambda = start;
        for _ in 0..100 {
            let l2 = lambda * lambda;
            let f = (l2 - a) * (l2 - b) - c * lambda + c * sigma - d;
            let fp = 4.0 * l2 * lambda - 2.0 * (a + b) * lambda - c;
            if fp == 0.0 {
                break;
            }
            let step = f / fp;
            lambda -= step;
            if step.abs() <= 1e-15 * start.abs() {
                break;
            }
        }
        lambda
    }

    /// Unnormalized optimal quaternion `(det X, adj(X) z)` with `X = (λ+σ)I - S`.
    fn quaternion(&self, lambda: f64) -> Quaternion {
        let x = Matrix3::identity() * (lambda + self.sigma) - self.s;
        Quaternion::from_scalar_vector(x.determinant(), &(adjugate(&x) * self.z))
    }
}

/// Optimal `q_ib` for Wahba's problem: body vectors `bᵢ`, inertial reference
/// vectors `rᵢ`, nonnegative weights. The result has a nonnegative scalar part.
pub fn estimate_attitude_quest(body: &[Vec3], reference: &[Vec3], weights: &[f64]) -> Result<Quaternion> {
    let n = body.len();
    if reference.len() != n || weights.len() != n {
        return Err(Error::InvalidParameter(
            "body, reference and weight lists differ in length".into(),
        ));
    }
    if n < 2 {
        return Err(Error::Underdetermined(format!("need at least 2 vector pairs, got {n}")));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let pick = |v: &[Vec3]| active.iter().map(|&i| v[i]).collect::<Vec<_>>();
    if active.len() < 2 || all_parallel(&pick(body)) || all_parallel(&pick(reference)) {
        return Err(Error::Underdetermined("all weighted vectors are parallel".into()));
    }

    let m: Matrix3<f64> = (0..n).map(|i| reference[i] * body[i].transpose() * weights[i]).sum();
    let weight_sum: f64 = weights.iter().sum();
    let profile = Profile::new(&m);
    let lambda = profile.lambda_max(weight_sum);

    let q = profile.quaternion(lambda);
    let norm = q.norm();
    // Near 180° the scalar part vanishes; re-solve in a frame turned by 180°.
    let q = if q.w.abs() >= 0.1 * norm {
        q
    } else {
        half_turns()
            .into_iter()
            .map(|(e, r)| e * profile_quaternion(&(r * m), lambda))
            .max_by(|a, b| (a.w.abs() / a.norm()).total_cmp(&(b.w.abs() / b.norm())))
            .map(|candidate| {
                if candidate.w.abs() / candidate.norm() > q.w.abs() / norm {
                    candidate
                } else {
                    q
                }
            })
            .unwrap_or(q)
    };
    let q = q.normalize();
    if !q.to_array().iter().all(|c| c.is_finite()) {
        return Err(Error::Underdetermined("QUEST produced a non-finite quaternion".into()));
    }
    Ok(q.canonical())
}

/// Optimal quaternion of a rotated profile, as seen from the rotated frame.
fn profile_quaternion(m: &Matrix3<f64>, lambda: f64) -> Quaternion {
    // The Davenport eigenvalues do not change under a reference-frame rotation.
    let p = Profile::new(m);
    let q = p.quaternion(lambda);
    let n = q.norm();
    if n > 0.0 {
        Quaternion::new(q.w / n, q.x / n, q.y / n, q.z / n)
    } else {
        q
    }
}

/// Full estimate for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub position: Option<Vec3>,
    pub attitude: Option<Quaternion>,
    pub crater_count: usize,
    pub status: PositionStatus,
    pub iterations: usize,
    pub final_step_norm: f64,
    /// Warm start held by the estimator when this estimate was made.
    pub warm_start: Option<Vec3>,
}

/// Position, then (if it converged) attitude from the position-derived reference vectors.
pub fn estimate_pose(
    obs: &[CraterObservation],
    matched: &BTreeMap<CraterId, Vec3>,
    settings: &NlsSettings,
    warm_start: Option<Vec3>,
) -> PoseEstimate {
    let fix = estimate_position(obs, matched, settings, warm_start);
    let attitude = fix.position.and_then(|position| {
        let (body, craters): (Vec<Vec3>, Vec<Vec3>) = paired(obs, matched).map(|(o, p)| (o.direction_body, p)).unzip();
        let pairs = build_reference_vectors(&body, &craters, &position);
        let w = 1.0 / pairs.body.len().max(1) as f64;
        let weights = vec![w; pairs.body.len()];
        match estimate_attitude_quest(&pairs.body, &pairs.reference, &weights) {
            Ok(q) => Some(q),
            Err(e) => {
                warn!("attitude skipped: {e}");
                None
            }
        }
    });
    PoseEstimate {
        position: fix.position,
        attitude,
        crater_count: fix.crater_count,
        status: fix.status,
        iterations: fix.iterations,
        final_step_norm: fix.final_step_norm,
        warm_start,
    }
}

/// Carries the last converged position between epochs as the warm start.
#[derive(Debug, Clone, Default)]
pub struct PoseEstimator {
    pub settings: NlsSettings,
    warm_start: Option<Vec3>,
}

impl PoseEstimator {
    pub fn new(settings: NlsSettings) -> Self {
        Self {
            settings,
            warm_start: None,
        }
    }

    pub fn warm_start(&self) -> Option<Vec3> {
        self.warm_start
    }

    pub fn estimate(&mut self, obs: &[CraterObservation], matched: &BTreeMap<CraterId, Vec3>) -> PoseEstimate {
        let est = estimate_pose(obs, matched, &self.settings, self.warm_start);
        if let Some(p) = est.position {
            self.warm_start = Some(p);
        }
        est
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn observations(
        truth: &Vec3,
        craters: &[Vec3],
        q_ib: &Quaternion,
    ) -> (Vec<CraterObservation>, BTreeMap<CraterId, Vec3>) {
        let r_bi = q_ib.to_dcm().transpose();
        let obs = craters
            .iter()
            .enumerate()
            .map(|(i, c)| CraterObservation {
                crater_id: i as u64,
                direction_body: r_bi.apply(&(c - truth).normalize()),
                range_km: (c - truth).norm(),
            })
            .collect();
        let matched = craters.iter().enumerate().map(|(i, c)| (i as u64, *c)).collect();
        (obs, matched)
    }

    fn surface_craters() -> Vec<Vec3> {
        let rm = 1737.4;
        [(0.0, 0.0), (0.02, 0.01), (-0.015, 0.02), (0.01, -0.025)]
            .iter()
            .map(|&(lat, lon): &(f64, f64)| Vec3::new(lat.cos() * lon.sin(), lat.cos() * lon.cos(), lat.sin()) * rm)
            .collect()
    }

    #[test]
    fn residual_examples() {
        let x = Vec3::zeros();
        let f = nls_residuals(&x, &[Vec3::new(1.0, 0.0, 0.0)], &[2.0]);
        assert_eq!(f[0], -3.0);
        let craters = surface_craters();
        let truth = Vec3::new(10.0, 1850.0, -5.0);
        let ranges: Vec<f64> = craters.iter().map(|c| (c - truth).norm()).collect();
        assert!(nls_residuals(&truth, &craters, &ranges).amax() < 1e-9);
        let scaled: Vec<Vec3> = craters.iter().map(|c| c * 2.0).collect();
        let scaled_ranges: Vec<f64> = ranges.iter().map(|r| r * 2.0).collect();
        let x = Vec3::new(3.0, 1800.0, 1.0);
        let a = nls_residuals(&x, &craters, &ranges);
        let b = nls_residuals(&(x * 2.0), &scaled, &scaled_ranges);
        assert!((b - a * 4.0).amax() < 1e-6);
    }

    #[test]
    fn jacobian_examples() {
        let j = nls_jacobian(&Vec3::zeros(), &[Vec3::new(1.0, 0.0, 0.0)]);
        assert_eq!((j[(0, 0)], j[(0, 1)], j[(0, 2)]), (-2.0, 0.0, 0.0));
        let c = Vec3::new(4.0, 5.0, 6.0);
        let j = nls_jacobian(&c, &[c]);
        assert_eq!(j.row(0).amax(), 0.0);
    }

    #[test]
    fn skip_rule() {
        let craters = surface_craters();
        let truth = Vec3::new(0.0, 1837.4, 0.0);
        let (obs, matched) = observations(&truth, &craters[..2], &Quaternion::IDENTITY);
        let warm = Some(Vec3::new(1.0, 2.0, 3.0));
        let fix = estimate_position(&obs, &matched, &NlsSettings::default(), warm);
        assert_eq!(fix.status, PositionStatus::SkippedInsufficientCraters);
        assert_eq!(fix.position, None);
        let pose = estimate_pose(&obs, &matched, &NlsSettings::default(), warm);
        assert_eq!(pose.attitude, None);
        assert_eq!(pose.crater_count, 2);
    }

    #[test]
    fn converges_from_warm_start_with_monotone_cost() {
        let craters = surface_craters();
        let truth = Vec3::new(3.0, 1837.4, -2.0);
        let (obs, matched) = observations(&truth, &craters, &Quaternion::IDENTITY);
        let warm = truth + Vec3::new(6.0, -8.0, 0.0);
        let fix = estimate_position(&obs, &matched, &NlsSettings::default(), Some(warm));
        assert_eq!(fix.status, PositionStatus::Converged);
        assert!((fix.position.unwrap() - truth).norm() < 1e-6);
        assert!(fix.iterations <= 10);
        assert!(fix.final_step_norm <= 1e-9);
        for w in fix.cost_trace.windows(2) {
            assert!(w[1] <= w[0] || w[1] < 1e-12, "cost increased: {:?}", fix.cost_trace);
        }
    }

    #[test]
    fn collinear_craters_diverge() {
        let craters: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 1737.4, 0.0)).collect();
        let truth = Vec3::new(2.0, 1837.4, 0.0);
        let (obs, matched) = observations(&truth, &craters, &Quaternion::IDENTITY);
        // Start in the plane containing the craters and the truth: rank 2 forever.
        let fix = estimate_position(
            &obs,
            &matched,
            &NlsSettings::default(),
            Some(Vec3::new(1.0, 1830.0, 0.0)),
        );
        assert_eq!(fix.status, PositionStatus::Diverged);
        assert_eq!(fix.position, None);
    }

    #[test]
    fn reference_vector_examples() {
        let pairs = build_reference_vectors(&[Vec3::z()], &[Vec3::new(0.0, 0.0, 1737.4)], &Vec3::zeros());
        assert_eq!(pairs.reference, vec![Vec3::z()]);
        let dropped = build_reference_vectors(
            &[Vec3::z(), Vec3::x()],
            &[Vec3::zeros(), Vec3::new(5.0, 0.0, 0.0)],
            &Vec3::zeros(),
        );
        assert_eq!(dropped.body, vec![Vec3::x()]);
        assert_eq!(dropped.reference, vec![Vec3::x()]);
    }

    #[test]
    fn quest_identity_and_known_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let refs: Vec<Vec3> = (0..6)
            .map(|_| {
                Vec3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                )
                .normalize()
            })
            .collect();
        let w = vec![1.0 / 6.0; 6];
        let q = estimate_attitude_quest(&refs, &refs, &w).unwrap();
        assert!(q.sign_agnostic_distance(&Quaternion::IDENTITY) < 1e-12);

        for q_true in [
            Quaternion::new(0.4, -0.3, 0.8, 0.1).normalize(),
            Quaternion::from_axis_angle(&Vec3::new(1.0, 2.0, -0.5), 3.1),
            Quaternion::from_axis_angle(&Vec3::x(), std::f64::consts::PI),
        ] {
            let r_bi = q_true.to_dcm().transpose();
            let body: Vec<Vec3> = refs.iter().map(|r| r_bi.apply(r)).collect();
            let q = estimate_attitude_quest(&body, &refs, &w).unwrap();
            assert!(q.sign_agnostic_distance(&q_true) < 1e-10, "{q} vs {q_true}");
            assert!((q.norm() - 1.0).abs() < 1e-12);
            assert!(q.w >= 0.0);
        }
    }

    #[test]
    fn quest_weight_scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut v = || {
            Vec3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            )
            .normalize()
        };
        let refs: Vec<Vec3> = (0..5).map(|_| v()).collect();
        let body: Vec<Vec3> = (0..5).map(|_| v()).collect();
        let w = vec![0.1, 0.3, 0.2, 0.25, 0.15];
        let w7: Vec<f64> = w.iter().map(|x| x * 7.0).collect();
        let a = estimate_attitude_quest(&body, &refs, &w).unwrap();
        let b = estimate_attitude_quest(&body, &refs, &w7).unwrap();
        assert!(a.sign_agnostic_distance(&b) < 1e-12);
    }

    #[test]
    fn quest_rejects_degenerate_sets() {
        let w2 = vec![0.5, 0.5];
        assert!(matches!(
            estimate_attitude_quest(&[Vec3::x()], &[Vec3::x()], &[1.0]),
            Err(Error::Underdetermined(_))
        ));
        assert!(matches!(
            estimate_attitude_quest(&[Vec3::x(), -Vec3::x()], &[Vec3::y(), -Vec3::y()], &w2),
            Err(Error::Underdetermined(_))
        ));
        assert!(estimate_attitude_quest(&[Vec3::x(), Vec3::y()], &[Vec3::x()], &w2).is_err());
        assert!(estimate_attitude_quest(&[Vec3::x(), Vec3::y()], &[Vec3::x(), Vec3::y()], &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn pose_estimator_keeps_warm_start_across_skips() {
        let craters = surface_craters();
        let truth = Vec3::new(3.0, 1837.4, -2.0);
        let q = Quaternion::new(0.2, 0.9, -0.1, 0.3).normalize();
        let (obs, matched) = observations(&truth, &craters, &q);
        let mut est = PoseEstimator::new(NlsSettings::default());
        let first = est.estimate(&obs, &matched);
        assert_eq!(first.warm_start, None);
        assert!((first.position.unwrap() - truth).norm() < 1e-6);
        assert!(first.attitude.unwrap().sign_agnostic_distance(&q) < 1e-9);
        let kept = est.warm_start();
        let skipped = est.estimate(&obs[..2], &matched);
        assert_eq!(skipped.status, PositionStatus::SkippedInsufficientCraters);
        assert_eq!(est.warm_start(), kept);
        let again = est.estimate(&obs, &matched);
        assert_eq!(again.warm_start, kept);
    }
}
