//! Truth propagation: point-mass gravity, quaternion kinematics, RK4.

use crate::error::{Error, Result};
use crate::frames::{orbit_frame_dcm, Dcm, MoonConstants, Quaternion, Vec3};

/// Ground-truth spacecraft state in MCI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochState {
    /// Seconds since scenario start.
    pub t: f64,
    /// km
    pub position: Vec3,
    /// km/s
    pub velocity: Vec3,
    /// `q_ib`
    pub attitude: Quaternion,
}

impl EpochState {
    pub fn radius(&self) -> f64 {
        self.position.norm()
    }

    pub fn altitude(&self, moon: &MoonConstants) -> f64 {
        self.radius() - moon.radius_km
    }

    /// Specific orbital energy `v²/2 - μ/r`, km²/s².
    pub fn specific_energy(&self, moon: &MoonConstants) -> f64 {
        0.5 * self.velocity.norm_squared() - moon.mu_km3_s2 / self.radius()
    }

    pub fn angular_momentum(&self) -> Vec3 {
        self.position.cross(&self.velocity)
    }
}

/// Non-gravitational acceleration in the body frame, km/s².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecificForce(pub Vec3);

impl SpecificForce {
    pub const ZERO: SpecificForce = SpecificForce(Vec3::new(0.0, 0.0, 0.0));
}

/// Time derivative of an [`EpochState`]; `attitude_rate` is not a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub attitude_rate: Quaternion,
}

/// Gravity in the orbit frame: `μ/r²` along +z (nadir).
pub fn gravity_orbit_frame(radius_km: f64, moon: &MoonConstants) -> Result<Vec3> {
    if !(radius_km > 0.0) {
        return Err(Error::Domain(format!(
            "gravity needs a positive radius, got {radius_km}"
        )));
    }
    Ok(Vec3::new(0.0, 0.0, moon.mu_km3_s2 / (radius_km * radius_km)))
}

/// `0.5 · Ω(ω) · q` with `ω` the body rate in body axes.
pub fn quaternion_rate(q: &Quaternion, omega_body: &Vec3) -> Quaternion {
    let w = Quaternion::from_scalar_vector(0.0, omega_body);
    let d = *q * w;
    Quaternion::new(0.5 * d.w, 0.5 * d.x, 0.5 * d.y, 0.5 * d.z)
}

pub fn state_derivative(
    s: &EpochState,
    force: &SpecificForce,
    omega_body: &Vec3,
    moon: &MoonConstants,
) -> Result<StateDerivative> {
    let r_io = orbit_frame_dcm(&s.position, &s.velocity)?;
    let g_o = gravity_orbit_frame(s.radius(), moon)?;
    let r_ib = s.attitude.to_dcm();
    Ok(StateDerivative {
        velocity: s.velocity,
        acceleration: r_ib.apply(&force.0) + r_io.apply(&g_o),
        attitude_rate: quaternion_rate(&s.attitude, omega_body),
    })
}

/// Outcome of one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagated {
    InFlight(EpochState),
    /// The step ended at or below the mean surface.
    SurfaceImpact(EpochState),
}

impl Propagated {
    pub fn state(&self) -> &EpochState {
        match self {
            Propagated::InFlight(s) | Propagated::SurfaceImpact(s) => s,
        }
    }

    pub fn is_impact(&self) -> bool {
        matches!(self, Propagated::SurfaceImpact(_))
    }
}

fn advance(s: &EpochState, d: &StateDerivative, h: f64) -> EpochState {
    let q = s.attitude;
    let dq = d.attitude_rate;
    EpochState {
        t: s.t + h,
        position: s.position + d.velocity * h,
        velocity: s.velocity + d.acceleration * h,
        attitude: Quaternion::new(q.w + h * dq.w, q.x + h * dq.x, q.y + h * dq.y, q.z + h * dq.z),
    }
}

/// One classical RK4 step of length `dt`; the attitude is renormalized after the step.
pub fn propagate(
    s: &EpochState,
    dt: f64,
    force: &SpecificForce,
    omega_body: &Vec3,
    moon: &MoonConstants,
) -> Result<Propagated> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let f = |x: &EpochState| state_derivative(x, force, omega_body, moon);
    let k1 = f(s)?;
    let k2 = f(&advance(s, &k1, 0.5 * dt))?;
    let k3 = f(&advance(s, &k2, 0.5 * dt))?;
    let k4 = f(&advance(s, &k3, dt))?;

    let sum3 = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + (b + c) * 2.0 + d) * (dt / 6.0);
    let qsum = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * (b + c) + d) * (dt / 6.0);
    let (q, a, b, c, d) = (
        s.attitude,
        k1.attitude_rate,
        k2.attitude_rate,
        k3.attitude_rate,
        k4.attitude_rate,
    );
    let next = EpochState {
        t: s.t + dt,
        position: s.position + sum3(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
        velocity: s.velocity + sum3(k1.acceleration, k2.acceleration, k3.acceleration, k4.acceleration),
        attitude: Quaternion::new(
            q.w + qsum(a.w, b.w, c.w, d.w),
            q.x + qsum(a.x, b.x, c.x, d.x),
            q.y + qsum(a.y, b.y, c.y, d.y),
            q.z + qsum(a.z, b.z, c.z, d.z),
        )
        .normalize(),
    };
    if next.radius() <= moon.radius_km {
        Ok(Propagated::SurfaceImpact(next))
    } else {
        Ok(Propagated::InFlight(next))
    }
}

/// Attitude that aligns the body frame with the orbit frame (camera at nadir).
pub fn nadir_attitude(r: &Vec3, v: &Vec3) -> Result<Quaternion> {
    let r_io: Dcm = orbit_frame_dcm(r, v)?;
    Ok(r_io.to_quaternion())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const MOON: MoonConstants = MoonConstants::LUNAR;

    fn circular(a: f64) -> EpochState {
        let r = Vec3::new(a, 0.0, 0.0);
        let v = Vec3::new(0.0, (MOON.mu_km3_s2 / a).sqrt(), 0.0);
        EpochState {
            t: 0.0,
            position: r,
            velocity: v,
            attitude: nadir_attitude(&r, &v).unwrap(),
        }
    }

    #[test]
    fn surface_gravity_magnitude() {
        let g = gravity_orbit_frame(MOON.radius_km, &MOON).unwrap();
        assert_eq!((g.x, g.y), (0.0, 0.0));
        assert!((g.z - 4902.8 / (1737.4 * 1737.4)).abs() < 1e-18);
        assert!((g.z - 1.624e-3).abs() < 1e-6);
        let g2 = gravity_orbit_frame(2.0 * MOON.radius_km, &MOON).unwrap();
        assert!((g.z / g2.z - 4.0).abs() < 1e-12);
        assert!(gravity_orbit_frame(0.0, &MOON).is_err());
    }

    #[test]
    fn circular_orbit_acceleration_points_to_centre() {
        let s = circular(1837.4);
        let d = state_derivative(&s, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).unwrap();
        let expected = MOON.mu_km3_s2 / 1837.4_f64.powi(2);
        assert!((d.acceleration.norm() - expected).abs() < 1e-12 * expected);
        let cos = d.acceleration.normalize().dot(&s.position.normalize());
        assert!((cos + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quaternion_kinematics() {
        let s = circular(1837.4);
        let d = state_derivative(&s, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).unwrap();
        assert_eq!(d.attitude_rate.to_array(), [0.0; 4]);
        let q = Quaternion::new(0.3, -0.5, 0.7, 0.1).normalize();
        let dq = quaternion_rate(&q, &Vec3::new(0.01, -0.2, 0.05));
        assert!(q.dot(&dq).abs() < 1e-12);
    }

    #[test]
    fn body_rate_spins_the_body_about_its_own_axis() {
        // Rotation about body z must leave the body z axis fixed in inertial space.
        let q0 = Quaternion::new(0.9, 0.1, -0.3, 0.2).normalize();
        let mut s = circular(1837.4);
        s.attitude = q0;
        let omega = Vec3::new(0.0, 0.0, 0.01);
        for _ in 0..100 {
            s = *propagate(&s, 0.1, &SpecificForce::ZERO, &omega, &MOON).unwrap().state();
        }
        let q1 = s.attitude;
        assert!((q1.rotate(&Vec3::z()) - q0.rotate(&Vec3::z())).norm() < 1e-12);
        let expected = q0 * Quaternion::from_axis_angle(&Vec3::z(), 0.1);
        assert!(q1.sign_agnostic_distance(&expected) < 1e-10);
    }

    #[test]
    fn one_period_returns_to_start() {
        let a = 1837.4;
        let period = TAU * (a * a * a / MOON.mu_km3_s2).sqrt();
        let steps = 10_000;
        let dt = period / steps as f64;
        let s0 = circular(a);
        let mut s = s0;
        for _ in 0..steps {
            s = *propagate(&s, dt, &SpecificForce::ZERO, &Vec3::zeros(), &MOON)
                .unwrap()
                .state();
        }
        assert!((s.position - s0.position).norm() < 1e-6);
    }

    #[test]
    fn specific_force_adds_body_acceleration() {
        let s = circular(1837.4);
        let f = SpecificForce(Vec3::new(0.0, 0.0, 1e-3));
        let with = state_derivative(&s, &f, &Vec3::zeros(), &MOON).unwrap();
        let without = state_derivative(&s, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).unwrap();
        let thrust = with.acceleration - without.acceleration;
        // Body z is nadir under the nadir lock.
        assert!((thrust - (-s.position.normalize() * 1e-3)).norm() < 1e-15);
    }

    #[test]
    fn translation_is_independent_of_attitude() {
        let s = circular(1900.0);
        let mut tumbling = s;
        tumbling.attitude = Quaternion::new(0.2, 0.4, -0.1, 0.9).normalize();
        let omega = Vec3::new(0.02, 0.01, -0.03);
        let a = propagate(&s, 1.0, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).unwrap();
        let b = propagate(&tumbling, 1.0, &SpecificForce::ZERO, &omega, &MOON).unwrap();
        assert_eq!(a.state().position, b.state().position);
        assert_eq!(a.state().velocity, b.state().velocity);
    }

    #[test]
    fn impact_is_flagged() {
        let r = Vec3::new(MOON.radius_km + 0.5, 0.0, 0.0);
        let v = Vec3::new(-1.0, 0.1, 0.0);
        let s = EpochState {
            t: 0.0,
            position: r,
            velocity: v,
            attitude: Quaternion::IDENTITY,
        };
        let out = propagate(&s, 1.0, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).unwrap();
        assert!(out.is_impact());
        assert!(propagate(&s, 0.0, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).is_err());
    }

    #[test]
    fn nadir_attitude_examples() {
        let r = Vec3::new(2000.0, 0.0, 0.0);
        let v = Vec3::new(0.0, 1.5, 0.0);
        let q = nadir_attitude(&r, &v).unwrap();
        let r_io = orbit_frame_dcm(&r, &v).unwrap();
        assert!((q.to_dcm().matrix() - r_io.matrix()).abs().max() < 1e-12);
        assert!((q.rotate(&Vec3::z()) - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-10);

        let r = Vec3::new(1200.0, -900.0, 700.0);
        let v = Vec3::new(0.3, 1.1, -0.4);
        let q = nadir_attitude(&r, &v).unwrap();
        assert!((q.rotate(&Vec3::z()) + r.normalize()).norm() < 1e-10);
    }
}
