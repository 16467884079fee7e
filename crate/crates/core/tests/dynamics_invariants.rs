use craternav::dynamics::*;
use craternav::scenario::{build_initial_state, ScenarioConfig};
use craternav::{MoonConstants, Quaternion, Vec3};
use proptest::prelude::*;

const MOON: MoonConstants = MoonConstants::LUNAR;

fn ballistic(s0: EpochState, dt: f64, steps: usize, omega: Vec3) -> Vec<EpochState> {
    let mut out = vec![s0];
    let mut s = s0;
    for _ in 0..steps {
        s = *propagate(&s, dt, &SpecificForce::ZERO, &omega, &MOON).unwrap().state();
        out.push(s);
    }
    out
}

#[test]
fn angular_momentum_and_quaternion_norm_are_preserved() {
    let s0 = build_initial_state(&ScenarioConfig::default()).unwrap();
    let h0 = s0.angular_momentum();
    let path = ballistic(s0, 1.0, 2990, Vec3::new(0.01, -0.02, 0.005));
    for s in &path {
        assert!((s.angular_momentum() - h0).norm() <= 1e-9 * h0.norm());
        assert!((s.attitude.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn descent_ends_in_impact() {
    let mut s = build_initial_state(&ScenarioConfig::default()).unwrap();
    let mut t_impact = None;
    for k in 1..=4000 {
        match propagate(&s, 1.0, &SpecificForce::ZERO, &Vec3::zeros(), &MOON).unwrap() {
            Propagated::InFlight(next) => s = next,
            Propagated::SurfaceImpact(last) => {
                assert!(last.radius() <= MOON.radius_km);
                t_impact = Some(k);
                break;
            }
        }
    }
    let t = t_impact.expect("impact");
    assert!((2900..=3100).contains(&t));
}

#[test]
fn thrust_along_velocity_raises_energy() {
    let s0 = build_initial_state(&ScenarioConfig::default()).unwrap();
    let e0 = s0.specific_energy(&MOON);
    // Body x is the along-track axis of the nadir frame.
    let s1 = *propagate(
        &s0,
        1.0,
        &SpecificForce(Vec3::new(1e-3, 0.0, 0.0)),
        &Vec3::zeros(),
        &MOON,
    )
    .unwrap()
    .state();
    assert!(s1.specific_energy(&MOON) > e0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn attitude_rate_does_not_touch_translation(wx in -0.1f64..0.1, wy in -0.1f64..0.1, wz in -0.1f64..0.1) {
        let mut s0 = build_initial_state(&ScenarioConfig::default()).unwrap();
        let a = ballistic(s0, 2.0, 50, Vec3::zeros());
        s0.attitude = Quaternion::new(0.5, 0.5, -0.5, 0.5);
        let b = ballistic(s0, 2.0, 50, Vec3::new(wx, wy, wz));
        prop_assert_eq!(a.last().unwrap().position, b.last().unwrap().position);
        prop_assert_eq!(a.last().unwrap().velocity, b.last().unwrap().velocity);
    }
}
