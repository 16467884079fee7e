//! Reference frames and rotation algebra.
//!
//! Frames used throughout the crate:
//!
//! - **MCI**: Moon-centred inertial, z along the spin axis.
//! - **MCMF**: Moon-centred Moon-fixed, coincident with MCI at `t = 0` and
//!   rotated from it by `theta_m` about z.
//! - **Selenographic**: latitude / longitude / radius in the MCMF frame, with
//!   `(lat, lon) = (0, 0)` on the MCMF +Y axis and `lon = 90°` on +X.
//! - **Orbit**: z toward nadir, y along the negative orbit normal.
//! - **Body**: fixed to the spacecraft, camera boresight along +z.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Physical constants of the spherical Moon model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoonConstants {
    /// Mean radius, km.
    pub radius_km: f64,
    /// Gravitational parameter, km^3/s^2.
    pub mu_km3_s2: f64,
    /// Sidereal rotation rate, rad/s.
    pub rotation_rate_rad_s: f64,
}

impl MoonConstants {
    pub const LUNAR: MoonConstants = MoonConstants {
        radius_km: 1737.4,
        mu_km3_s2: 4902.8,
        rotation_rate_rad_s: 2.6617e-6,
    };

    pub fn validate(&self) -> Result<()> {
        if self.radius_km > 0.0 && self.mu_km3_s2 > 0.0 && self.rotation_rate_rad_s > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "moon constants must be strictly positive".into(),
            ))
        }
    }
}

impl Default for MoonConstants {
    fn default() -> Self {
        Self::LUNAR
    }
}

/// Unit quaternion, scalar first, Hamilton product.
///
/// As an attitude `q_ib`, it maps body-frame coordinates to inertial ones:
/// `v_i = q ⊗ (0, v_b) ⊗ q*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_scalar_vector(w: f64, v: &Vec3) -> Self {
        Self::new(w, v.x, v.y, v.z)
    }

    /// Rotation by `angle` radians about `axis` (right-hand rule).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_scalar_vector(c, &(axis * (s / n)))
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalize(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Sign representative with a nonnegative scalar part.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            -*self
        } else {
            *self
        }
    }

    /// Distance between the rotations, insensitive to the quaternion sign.
    pub fn sign_agnostic_distance(&self, other: &Quaternion) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        let (mut plus, mut minus) = (0.0_f64, 0.0_f64);
        for i in 0..4 {
            plus = plus.max((a[i] - b[i]).abs());
            minus = minus.max((a[i] + b[i]).abs());
        }
        plus.min(minus)
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * self.vector().norm().atan2(self.w.abs())
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.to_dcm().apply(v)
    }

    /// `R_ib` for this `q_ib`. Every entry is a quadratic form in the
    /// components, so `q` and `-q` give bit-identical matrices.
    pub fn to_dcm(&self) -> Dcm {
        let Quaternion { w, x, y, z } = *self;
        let (ww, xx, yy, zz) = (w * w, x * x, y * y, z * z);
        let m = Matrix3::new(
            ww + xx - yy - zz,
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            ww - xx + yy - zz,
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            ww - xx - yy + zz,
        );
        Dcm(m)
    }

    /// Shepperd's method: pivot on the largest of the trace and diagonal.
    pub fn from_dcm(r: &Dcm) -> Self {
        let m = &r.0;
        let tr = m.trace();
        let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        let q = if tr >= diag[0] && tr >= diag[1] && tr >= diag[2] {
            let w = 0.5 * (1.0 + tr).sqrt();
            let f = 0.25 / w;
            Self::new(
                w,
                (m[(2, 1)] - m[(1, 2)]) * f,
                (m[(0, 2)] - m[(2, 0)]) * f,
                (m[(1, 0)] - m[(0, 1)]) * f,
            )
        } else if diag[0] >= diag[1] && diag[0] >= diag[2] {
            let x = 0.5 * (1.0 + diag[0] - diag[1] - diag[2]).sqrt();
            let f = 0.25 / x;
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) * f,
                x,
                (m[(0, 1)] + m[(1, 0)]) * f,
                (m[(0, 2)] + m[(2, 0)]) * f,
            )
        } else if diag[1] >= diag[2] {
            let y = 0.5 * (1.0 - diag[0] + diag[1] - diag[2]).sqrt();
            let f = 0.25 / y;
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) * f,
                (m[(0, 1)] + m[(1, 0)]) * f,
                y,
                (m[(1, 2)] + m[(2, 1)]) * f,
            )
        } else {
            let z = 0.5 * (1.0 - diag[0] - diag[1] + diag[2]).sqrt();
            let f = 0.25 / z;
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) * f,
                (m[(0, 2)] + m[(2, 0)]) * f,
                (m[(1, 2)] + m[(2, 1)]) * f,
                z,
            )
        };
        q.normalize()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        Quaternion::new(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.w, self.x, self.y, self.z)
    }
}

/// Direction cosine matrix. `Dcm::new` checks orthonormality and handedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dcm(Matrix3<f64>);

impl Dcm {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::Domain(format!(
                "matrix is not orthonormal (max |RᵀR - I| = {err:e})"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::Domain(format!("matrix is not a proper rotation (det = {det})")));
        }
        Ok(Dcm(m))
    }

    /// Wraps a matrix the caller knows to be a rotation.
    pub fn new_unchecked(m: Matrix3<f64>) -> Self {
        Dcm(m)
    }

    pub fn identity() -> Self {
        Dcm(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Dcm(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    /// Largest deviation of `RᵀR` from identity.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn to_quaternion(&self) -> Quaternion {
        Quaternion::from_dcm(self)
    }
}

impl Mul for Dcm {
    type Output = Dcm;

    fn mul(self, rhs: Dcm) -> Dcm {
        Dcm(self.0 * rhs.0)
    }
}

pub fn quat_to_dcm(q: &Quaternion) -> Dcm {
    q.to_dcm()
}

pub fn dcm_to_quat(r: &Dcm) -> Quaternion {
    Quaternion::from_dcm(r)
}

/// Point in selenographic coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelenographicPoint {
    /// Latitude, rad, in `[-π/2, π/2]`.
    pub lat: f64,
    /// Longitude, rad, in `(-π, π]`.
    pub lon: f64,
    /// Radius, km.
    pub radius: f64,
}

impl SelenographicPoint {
    pub fn new(lat: f64, lon: f64, radius: f64) -> Result<Self> {
        if !(-PI / 2.0..=PI / 2.0).contains(&lat) {
            return Err(Error::Domain(format!("latitude {lat} outside [-π/2, π/2]")));
        }
        if !(lon > -PI && lon <= PI) {
            return Err(Error::Domain(format!("longitude {lon} outside (-π, π]")));
        }
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("radius {radius} must be positive")));
        }
        Ok(Self { lat, lon, radius })
    }
}

/// Moon rotation angle `ω·t`, reduced to `[0, 2π)`.
pub fn moon_rotation_angle(t: f64, rate: f64) -> f64 {
    (rate * t).rem_euclid(TAU)
}

/// `R_im`: MCMF coordinates to MCI coordinates.
pub fn mcmf_to_mci_dcm(theta_m: f64) -> Dcm {
    let (s, c) = theta_m.sin_cos();
    Dcm(Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0))
}

pub fn selenographic_to_mcmf(p: &SelenographicPoint) -> Vec3 {
    let (slat, clat) = p.lat.sin_cos();
    let (slon, clon) = p.lon.sin_cos();
    Vec3::new(p.radius * clat * slon, p.radius * clat * clon, p.radius * slat)
}

/// Inverse of [`selenographic_to_mcmf`]. On the polar axis the longitude is 0.
pub fn mcmf_to_selenographic(v: &Vec3) -> Result<SelenographicPoint> {
    let radius = v.norm();
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(
            "cannot convert a zero or non-finite vector to selenographic coordinates".into(),
        ));
    }
    let equatorial = v.x.hypot(v.y);
    let lat = v.z.atan2(equatorial);
    let lon = if equatorial == 0.0 {
        0.0
    } else {
        wrap_longitude(v.x.atan2(v.y))
    };
    Ok(SelenographicPoint { lat, lon, radius })
}

/// Maps any angle into `(-π, π]`.
pub fn wrap_longitude(lon: f64) -> f64 {
    let w = (lon + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// `R_io`: orbit-frame coordinates to inertial coordinates.
///
/// Columns are the orbit axes in MCI: z toward the Moon's centre, y opposite
/// the orbital angular momentum, x completing the right-handed triad.
pub fn orbit_frame_dcm(r: &Vec3, v: &Vec3) -> Result<Dcm> {
    let rn = r.norm();
    let h = r.cross(v);
    let hn = h.norm();
    if !(rn > 0.0) || !(hn > 1e-12 * rn * v.norm()) {
        return Err(Error::DegenerateOrbit);
    }
    let z = -r / rn;
    let y = -h / hn;
    let x = y.cross(&z);
    Ok(Dcm(Matrix3::from_columns(&[x, y, z])))
}
