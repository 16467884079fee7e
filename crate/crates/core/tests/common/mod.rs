//! Independent reference solvers and shared fixtures for the integration tests.
#![allow(dead_code)]

use std::sync::OnceLock;

use craternav::catalog::{generate_synthetic, CraterCatalog, SyntheticSpec};
use craternav::Vec3;
use nalgebra::Matrix3;
use rand::Rng;

/// The 2M-crater catalog with the lunar size distribution, built once per test binary.
pub fn lunar_catalog() -> &'static CraterCatalog {
    static CAT: OnceLock<CraterCatalog> = OnceLock::new();
    CAT.get_or_init(|| generate_synthetic(&SyntheticSpec::lunar(1)).expect("lunar catalog"))
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Optimal `R_ib` for Wahba's problem by SVD of `B = Σ w r bᵀ`:
/// maximizes `Σ w rᵀ R b` over proper rotations.
pub fn wahba_svd(body: &[Vec3], reference: &[Vec3], weights: &[f64]) -> Matrix3<f64> {
    let mut b = Matrix3::zeros();
    for i in 0..body.len() {
        b += reference[i] * body[i].transpose() * weights[i];
    }
    let svd = b.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant().signum();
    u * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * v_t
}

/// `Σ w ‖r - R b‖²`.
pub fn wahba_loss_of(r: &Matrix3<f64>, body: &[Vec3], reference: &[Vec3], weights: &[f64]) -> f64 {
    (0..body.len())
        .map(|i| weights[i] * (reference[i] - r * body[i]).norm_squared())
        .sum()
}

/// Rotation matrix of a scalar-first quaternion, written out from the
/// Euler-Rodrigues formula.
pub fn rotation_of(q: [f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = q;
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Scalar-first quaternion of a rotation matrix, choosing the best-conditioned branch.
pub fn quaternion_of(m: &Matrix3<f64>) -> [f64; 4] {
    let t = m.trace();
    let q = if t > m[(0, 0)] && t > m[(1, 1)] && t > m[(2, 2)] {
        let s = (1.0 + t).sqrt() * 2.0;
        [
            0.25 * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        ]
    } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
        let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
        [
            (m[(2, 1)] - m[(1, 2)]) / s,
            0.25 * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        ]
    } else if m[(1, 1)] >= m[(2, 2)] {
        let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
        [
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            0.25 * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        ]
    } else {
        let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
        [
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            0.25 * s,
        ]
    };
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    q.map(|c| c / n)
}

/// Distance between quaternions up to sign.
pub fn quat_distance(a: [f64; 4], b: [f64; 4]) -> f64 {
    let d = |s: f64| (0..4).map(|i| (a[i] - s * b[i]).powi(2)).sum::<f64>().sqrt();
    d(1.0).min(d(-1.0))
}

/// `Σ (‖c - x‖² - ρ²)²`.
pub fn range_cost(x: &Vec3, craters: &[Vec3], ranges: &[f64]) -> f64 {
    craters
        .iter()
        .zip(ranges)
        .map(|(c, r)| ((c - x).norm_squared() - r * r).powi(2))
        .sum()
}

/// Coarse-to-fine grid search for the minimizer of [`range_cost`] inside a cube.
/// The grid is recentred on its best point until that point stays at the
/// centre, and only then refined, so it can follow long narrow valleys.
pub fn grid_minimize(craters: &[Vec3], ranges: &[f64], centre: Vec3, half_width: f64, final_width: f64) -> Vec3 {
    const N: i32 = 10;
    let mut best = centre;
    let mut best_cost = range_cost(&best, craters, ranges);
    let mut h = half_width;
    while h > final_width {
        for _ in 0..1000 {
            let c = best;
            for i in -N..=N {
                for j in -N..=N {
                    for k in -N..=N {
                        let p = c + Vec3::new(i as f64, j as f64, k as f64) * (h / N as f64);
                        let cost = range_cost(&p, craters, ranges);
                        if cost < best_cost {
                            best_cost = cost;
                            best = p;
                        }
                    }
                }
            }
            if best == c {
                break;
            }
        }
        h *= 0.25;
    }
    best
}

/// Spacecraft at altitude `h` above a random surface point and `n` craters
/// scattered around nadir within `spread` radians.
pub fn descent_geometry<R: Rng>(rng: &mut R, n: usize, h: f64, spread: f64) -> (Vec3, Vec<Vec3>) {
    let rm = 1737.4;
    let up = random_unit(rng);
    let e1 = up.cross(&Vec3::z()).normalize();
    let e2 = up.cross(&e1);
    let craters = (0..n)
        .map(|_| {
            let a = rng.random_range(-spread..spread);
            let b = rng.random_range(-spread..spread);
            (up + e1 * a + e2 * b).normalize() * rm
        })
        .collect();
    (up * (rm + h), craters)
}

/// Renders a pass/fail line the acceptance target prints for every criterion.
pub fn report(id: &str, pass: bool, detail: &str) -> bool {
    println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
