use std::f64::consts::{FRAC_2_PI, PI};

use vortexcorr::density::FormVariant;
use vortexcorr::kind::StateKind;
use vortexcorr::pairs::{
    angle_distribution, closed_form_distance, closed_form_distance_variant, distance_distribution, radial_marginal,
    ring_radial_density, summarize, two_angle_distribution, DistanceLaw,
};
use vortexcorr::Error;

#[test]
fn distance_laws_are_normalized_with_second_moment_four() {
    for kind in StateKind::shipped() {
        let d = distance_distribution(&kind.build().unwrap(), 401).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-8, "{}: {}", kind.name(), d.integral());
        let s = summarize(&d).unwrap();
        assert!(
            (s.second_moment - 4.0).abs() < 1e-8,
            "{}: {}",
            kind.name(),
            s.second_moment
        );
    }
}

#[test]
fn thermal_distance_law_is_the_exchange_mix() {
    for (a, b) in [(1.0, 1.0), (0.3, 1.7), (2.0, 0.5)] {
        let kind = StateKind::Thermal { nbar_a: a, nbar_b: b };
        let d = distance_distribution(&kind.build().unwrap(), 161).unwrap();
        assert!(d.sup_diff(|x| closed_form_distance(&kind, x).unwrap()) < 1e-8);
    }
    // equal occupations: A ∝ 3 + cos 2Δ, one third bunched, two thirds uncorrelated
    let kind = StateKind::Thermal {
        nbar_a: 1.0,
        nbar_b: 1.0,
    };
    let mix =
        |x: f64| DistanceLaw::Bose(FormVariant::Corrected).eval(x) / 3.0 + 2.0 * DistanceLaw::Coherent.eval(x) / 3.0;
    for x in [0.3, 1.0, 2.2, 4.0] {
        assert!((closed_form_distance(&kind, x).unwrap() - mix(x)).abs() < 1e-12);
    }
}

#[test]
fn printed_bose_law_is_not_normalized() {
    let kind = StateKind::BoseFock { n: 1, m: 1 };
    let d = distance_distribution(&kind.build().unwrap(), 401).unwrap();
    let gap = d.sup_diff(|x| closed_form_distance_variant(&kind, x, FormVariant::Printed).unwrap());
    assert!(gap > 0.1);
}

#[test]
fn relative_angle_laws() {
    type Law = fn(f64) -> f64;
    let cases: [(StateKind, Law); 3] = [
        (StateKind::FermiFock, |t| FRAC_2_PI * t.sin().powi(2)),
        (StateKind::BoseFock { n: 1, m: 1 }, |t| FRAC_2_PI * t.cos().powi(2)),
        (StateKind::unit_coherent(), |_| 1.0 / PI),
    ];
    for (kind, law) in cases {
        let d = angle_distribution(&kind.build().unwrap(), 181).unwrap();
        assert!(d.sup_diff(law) < 1e-10, "{}", kind.name());
        assert!((d.integral() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn anisotropic_state_has_no_relative_angle_law() {
    let err = angle_distribution(&StateKind::Noon.build().unwrap(), 91).unwrap_err();
    assert!(matches!(err, Error::AnisotropicState { .. }));
}

#[test]
fn noon_joint_angles_follow_the_sum() {
    let d = two_angle_distribution(&StateKind::Noon.build().unwrap(), 32).unwrap();
    let n = d.grid.len();
    let scale = d.values.iter().cloned().fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            let want = (d.grid[i] + d.grid[j]).sin().powi(2);
            assert!((d.values[i * n + j] / scale - want).abs() < 1e-10);
        }
    }
}

#[test]
fn single_particle_state_has_no_pairs() {
    let s = StateKind::BoseFock { n: 1, m: 0 }.build().unwrap();
    assert!(matches!(distance_distribution(&s, 11), Err(Error::NoPairs(_))));
    assert!(matches!(angle_distribution(&s, 11), Err(Error::NoPairs(_))));
}

#[test]
fn radial_marginal_is_the_ring() {
    for kind in StateKind::shipped() {
        let d = radial_marginal(&kind.build().unwrap(), 121).unwrap();
        assert!(d.sup_diff(ring_radial_density) < 1e-10, "{}", kind.name());
    }
}
