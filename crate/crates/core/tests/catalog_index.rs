use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use craternav::catalog::*;
use craternav::MoonConstants;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ten_k() -> CraterCatalog {
    generate_synthetic(&SyntheticSpec {
        count: 10_000,
        ..SyntheticSpec::lunar(42)
    })
    .unwrap()
}

fn linear_scan(cat: &CraterCatalog, r: &Region) -> BTreeSet<u64> {
    cat.records()
        .iter()
        .filter(|c| r.contains(c.lat, c.lon))
        .map(|c| c.id)
        .collect()
}

#[test]
fn index_equals_linear_scan_on_random_regions() {
    let cat = ten_k();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut nonempty = 0;
    for _ in 0..1000 {
        let a = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let b = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let region = Region::new(a.min(b), a.max(b), rng.random_range(-PI..PI), rng.random_range(-PI..PI)).unwrap();
        let got: BTreeSet<u64> = cat.query_region(&region).iter().map(|c| c.id).collect();
        let want = linear_scan(&cat, &region);
        assert_eq!(got, want, "{region:?}");
        nonempty += (!want.is_empty()) as usize;
    }
    assert!(nonempty > 500);
}

#[test]
fn boundary_craters_are_included() {
    let cat = ten_k();
    // Regions whose edges pass exactly through catalogued craters.
    for c in cat.records().iter().step_by(97) {
        let region = Region::new(c.lat, c.lat, c.lon, c.lon).unwrap();
        let got: Vec<u64> = cat.query_region(&region).iter().map(|r| r.id).collect();
        assert!(got.contains(&c.id));
        assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), linear_scan(&cat, &region));
    }
}

#[test]
fn canonical_round_trip_is_bit_exact() {
    let cat = ten_k();
    let mut buf = Vec::new();
    write_catalog(&cat, &mut buf).unwrap();
    let (back, report) = load_catalog(&buf[..], &LoadOptions::default()).unwrap();
    assert!(report.rejected.is_empty());
    assert_eq!(back.len(), cat.len());
    for (a, b) in cat.records().iter().zip(back.records()) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.name, b.name);
        assert_eq!(a.lat.to_bits(), b.lat.to_bits());
        assert_eq!(a.lon.to_bits(), b.lon.to_bits());
        assert_eq!(a.diameter_km.to_bits(), b.diameter_km.to_bits());
    }
    let mut again = Vec::new();
    write_catalog(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn crater_positions_sit_on_the_sphere() {
    let cat = ten_k();
    let moon = MoonConstants::LUNAR;
    for (k, c) in cat.records().iter().enumerate().step_by(13) {
        let p = crater_position_mci(c, k as f64 * 0.37, &moon);
        assert!((p.norm() - moon.radius_km).abs() < 1e-9);
    }
}

#[test]
fn lunar_calibration_reproduces_the_count_breakdown() {
    let cat = generate_synthetic(&SyntheticSpec::lunar(1)).unwrap();
    let s = cat.summary();
    assert_eq!(s.total, 2_000_000);
    // Counts are binomial; 5σ bounds around the calibrated expectations.
    assert!((s.above_1km as f64 - 1.3e6).abs() < 5.0 * 1.3e6f64.sqrt() * 0.6);
    assert!((s.above_5km as f64 - 83_000.0).abs() < 5.0 * 83_000f64.sqrt());
    let ratio = s.above_5km as f64 / s.above_1km as f64;
    assert!((ratio - 0.064).abs() < 0.002, "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn seam_wrapping_regions_match_scan(lat0 in -1.5f64..1.5, dlat in 0.0f64..0.3, start in 2.0f64..PI, width in 0.0f64..1.5) {
        let cat = ten_k_cached();
        let end = craternav::frames::wrap_longitude(start + width);
        let region = Region::new(lat0, (lat0 + dlat).min(FRAC_PI_2), start, end).unwrap();
        let got: BTreeSet<u64> = cat.query_region(&region).iter().map(|c| c.id).collect();
        prop_assert_eq!(got, linear_scan(cat, &region));
    }
}

fn ten_k_cached() -> &'static CraterCatalog {
    static CAT: std::sync::OnceLock<CraterCatalog> = std::sync::OnceLock::new();
    CAT.get_or_init(ten_k)
}
