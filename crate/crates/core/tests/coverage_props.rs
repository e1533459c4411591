mod common;

use common::*;
use urbanreach::coverage::{evaluate_coverage, parks_assessment_from_areas};
use urbanreach::synthetic::{synthetic_city, BUNDLED_SEED};
use urbanreach::{PlanningStandard, ServiceCode};

#[test]
fn served_share_grows_with_radius() {
    let city = synthetic_city(BUNDLED_SEED);
    let sites = &city.services[3].points;
    let mut last = -1.0;
    for k in 1..=10 {
        let std = PlanningStandard::derived(ServiceCode::Sec, 0.15 * k as f64);
        let r = evaluate_coverage(sites, &std, &city.border, &city.built_up, &city.districts).unwrap();
        assert!(r.served_pct >= last);
        last = r.served_pct;
    }
}

#[test]
fn additivity_and_district_consistency() {
    let city = synthetic_city(BUNDLED_SEED);
    for layer in &city.services {
        let std = PlanningStandard::derived(ServiceCode::Kg, 0.6);
        let r = evaluate_coverage(&layer.points, &std, &city.border, &city.built_up, &city.districts).unwrap();
        assert!(rel_err(r.served_km2 + r.unserved_km2, r.built_up_km2) < 1e-6);
        assert!((r.served_pct + r.unserved_pct - 100.0).abs() < 0.01);
        let mut weighted = 0.0;
        let mut share = 0.0;
        for d in &r.per_district {
            assert!((0.0..=100.0).contains(&d.served_pct) && (0.0..=100.0).contains(&d.unserved_pct));
            assert!(rel_err(d.served_km2 + d.unserved_km2, d.built_up_km2) < 1e-6);
            weighted += d.served_pct * d.built_up_km2;
            share += d.built_up_km2;
        }
        assert!(rel_err(share, r.built_up_km2) < 1e-6);
        assert!((weighted / share - r.served_pct).abs() < 0.1);
    }
}

#[test]
fn empty_layer_serves_nothing() {
    let city = synthetic_city(BUNDLED_SEED);
    let std = PlanningStandard::derived(ServiceCode::Post, 1.0);
    let r = evaluate_coverage(&[], &std, &city.border, &city.built_up, &city.districts).unwrap();
    assert_eq!(r.served_pct, 0.0);
    assert_eq!(r.unserved_pct, 100.0);
    assert_eq!(r.warnings.len(), 1);
}

#[test]
fn hospital_standard_covers_the_whole_city() {
    let city = synthetic_city(BUNDLED_SEED);
    let hosp = &city.services.iter().find(|l| l.service == Some(ServiceCode::Hosp)).unwrap().points;
    let std = urbanreach::standards::fixed_standards().get(ServiceCode::Hosp).unwrap().clone();
    let r = evaluate_coverage(hosp, &std, &city.border, &city.built_up, &city.districts).unwrap();
    assert!((r.served_pct - 100.0).abs() < 1e-6);
}

#[test]
fn zero_population_is_fully_satisfied() {
    let p = parks_assessment_from_areas(&[("empty".into(), 0.0, 0.0)], 11.0).unwrap();
    let row = &p.per_district[0];
    assert_eq!((row.share_km2, row.parks_km2, row.deficiency_km2), (0.0, 0.0, 0.0));
    assert_eq!(row.pct_of_share, 100.0);
    assert_eq!(row.deficiency_pct, 0.0);
}
