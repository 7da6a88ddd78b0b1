mod common;

use common::sample;
use harmorph::foliation::{
    classify_type, conformality_residual, conformality_residual_lie, fiber_minimality_residual, rho_and_closedness,
    tension_via_frames, vertical_field, FibrationType,
};
use harmorph::gallery::{all_bundles, hopf, quadratic_r4_r3};
use harmorph::kernel::riemann_and_sectional;
use harmorph::morphism::{dilation, harmonic_morphism_residual, pullback_metric, tension_field};
use nalgebra::DMatrix;

#[test]
fn every_bundle_is_a_harmonic_morphism() {
    for b in all_bundles() {
        let mut worst: f64 = 0.0;
        for p in sample(&b.region, b.map.source_chart(), 200, 11) {
            let res = harmonic_morphism_residual(&b.map, &b.g, &b.h, &p).unwrap();
            assert!(!res.degenerate, "{}: degenerate at {:?}", b.name, p.coords);
            worst = worst.max(res.max_norm());
        }
        assert!(worst < 1e-7, "{}: residual {worst:e}", b.name);
    }
}

#[test]
fn perturbations_are_detected() {
    for b in all_bundles() {
        let pert = b.perturbed(0, 0.05).unwrap();
        let worst = sample(&b.region, b.map.source_chart(), 200, 12)
            .iter()
            .map(|p| {
                harmonic_morphism_residual(&pert.map, &pert.g, &pert.h, p)
                    .unwrap()
                    .max_norm()
            })
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "{}: perturbation residual {worst:e}", b.name);
    }
}

#[test]
fn declared_curvature_holds() {
    for b in all_bundles() {
        let k = b.curvature_k.unwrap();
        for p in sample(&b.region, b.map.source_chart(), 30, 13) {
            let dev = riemann_and_sectional(&b.g, &p).unwrap().space_form_deviation(k);
            assert!(dev < 1e-7, "{}: deviation {dev:e}", b.name);
        }
    }
}

#[test]
fn classification_matches_metadata() {
    for b in all_bundles() {
        let Some(expected) = b.expected_type else { continue };
        let u = vertical_field(&b.map, &b.g).unwrap();
        for p in sample(&b.region, b.map.source_chart(), 10, 14) {
            let rep = classify_type(&u, &b.g, b.curvature_k.unwrap(), &p).unwrap();
            assert_eq!(rep.verdict, expected, "{} at {:?}: {rep:?}", b.name, p.coords);
        }
    }
}

#[test]
fn frame_routes_agree() {
    for b in all_bundles() {
        if b.n() < 3 {
            continue;
        }
        let u = vertical_field(&b.map, &b.g).unwrap();
        for p in sample(&b.region, b.map.source_chart(), 20, 15) {
            let direct = tension_field(&b.map, &b.g, &b.h, &p).unwrap();
            let frames = tension_via_frames(&b.map, &b.g, &b.h, &p).unwrap();
            assert!((direct - &frames).amax() < 1e-6, "{}: {frames:?}", b.name);
            let c1 = conformality_residual(&u, &b.g, &p).unwrap();
            let c2 = conformality_residual_lie(&u, &b.g, &p).unwrap();
            assert!(c1 < 1e-8 && (c1 - c2).abs() < 1e-8, "{}: {c1:e} {c2:e}", b.name);
            let closed = rho_and_closedness(&u, &b.g, &p).unwrap().residual;
            assert!(closed < 1e-6, "{}: dρ {closed:e}", b.name);
        }
    }
}

#[test]
fn hopf_fibers_are_minimal_with_constant_dilation() {
    let b = hopf().unwrap();
    let u = vertical_field(&b.map, &b.g).unwrap();
    let mut dil = Vec::new();
    for p in sample(&b.region, b.map.source_chart(), 200, 16) {
        assert!(fiber_minimality_residual(&u, &b.g, &p).unwrap() < 1e-8);
        let v = u.at(&p).unwrap();
        assert!((b.map.jacobian(&p).unwrap() * v).amax() < 1e-10);
        dil.push(dilation(&b.map, &b.g, &b.h, &p).unwrap());
    }
    let spread = dil.iter().cloned().fold(f64::MIN, f64::max) - dil.iter().cloned().fold(f64::MAX, f64::min);
    assert!(
        spread < 1e-8 && (dil[0] - 2.0).abs() < 1e-8,
        "spread {spread:e}, first {}",
        dil[0]
    );
}

#[test]
fn quadratic_pullback_identity() {
    let b = quadratic_r4_r3().unwrap();
    for p in sample(&b.region, b.map.source_chart(), 100, 17) {
        let x = &p.coords;
        let xv = nalgebra::DVector::from_vec(vec![-x[1], x[0], -x[3], x[2]]);
        let expected = DMatrix::identity(4, 4) * xv.norm_squared() - &xv * xv.transpose();
        let pull = pullback_metric(&b.map, &b.h, &p).unwrap();
        assert!((pull - expected).amax() < 1e-10);
    }
}

#[test]
fn type_two_has_vanishing_r0() {
    let b = quadratic_r4_r3().unwrap();
    let u = vertical_field(&b.map, &b.g).unwrap();
    for p in sample(&b.region, b.map.source_chart(), 20, 18) {
        let rep = classify_type(&u, &b.g, 0.0, &p).unwrap();
        assert!(rep.r0.abs() < 1e-9);
        assert_eq!(rep.verdict, FibrationType::Type2);
    }
}
