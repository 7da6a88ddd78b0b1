//! The named check suites. Each suite returns its reports grouped by bundle
//! name in lexicographic order, checks within a bundle in a fixed order.

use std::time::Instant;

use harmorph::constructors::{
    build_metric_corank1, build_metric_corank_p, halfspace_normal_form, killing_quotient_residual, random_corank2,
    random_normal_form, CorankPData,
};
use harmorph::error::Result;
use harmorph::fd::jet_fd_mismatch;
use harmorph::field::{MetricField, Point, SmoothMap, VectorField};
use harmorph::foliation::{
    classify_type_with_tol, conformality_residual, conformality_residual_lie, fiber_minimality_residual,
    rho_and_closedness, tension_via_frames, torsion_s, vertical_field, FibrationType,
};
use harmorph::gallery::{all_bundles, killing_fields_catalog, quadratic_r4_r3, MorphismBundle};
use harmorph::kernel::{riemann_and_sectional, MetricJet};
use harmorph::morphism::{dilation, harmonic_morphism_residual, pullback_metric, tension_field};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{CheckConfig, Suite};
use crate::error::VerifyError;
use crate::report::{ResidualReport, FAILED_EVALUATION};
use crate::sampling::{sample_points, stream};

/// Perturbed bundles must exceed this residual somewhere.
pub const DETECTION_FLOOR: f64 = 1e-3;
/// The reciprocal-exponent quotient must exceed this residual somewhere.
pub const WRONG_EXPONENT_FLOOR: f64 = 1e-2;
/// Generic torsion inputs must exceed this somewhere in `S`.
pub const TORSION_BRANCH_FLOOR: f64 = 1e-10;
pub const TORSION_DRAWS: usize = 500;
pub const PERTURBATION_AMPLITUDE: f64 = 0.05;
pub const NORMAL_FORM_SEEDS: u64 = 20;
pub const FRAME_ROUTE_SEEDS: u64 = 10;
pub const CORANK2_SEEDS: u64 = 4;

type Residuals = Vec<(f64, Vec<f64>)>;

/// Runs the selected suites in canonical order.
pub fn run_suite(cfg: &CheckConfig) -> std::result::Result<Vec<ResidualReport>, VerifyError> {
    let suites = cfg.validate()?;
    let mut out = Vec::new();
    for s in suites {
        let mut reports = match s {
            Suite::Morphism => morphism(cfg)?,
            Suite::Classify => classify(cfg)?,
            Suite::Curvature => curvature(cfg)?,
            Suite::Torsion => torsion(cfg)?,
            Suite::Theorem1 => theorem1(cfg)?,
            Suite::Killing => killing(cfg)?,
        };
        reports.sort_by(|a, b| a.bundle.cmp(&b.bundle));
        out.extend(reports);
    }
    Ok(out)
}

/// Evaluates `f` at every point; failed evaluations count as `FAILED_EVALUATION`.
fn sweep<F>(points: &[Point], f: F) -> Residuals
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    points
        .par_iter()
        .map(|p| (f(p).unwrap_or(FAILED_EVALUATION), p.coords.clone()))
        .collect()
}

struct Collector<'a> {
    cfg: &'a CheckConfig,
    bundle: String,
    reports: Vec<ResidualReport>,
}

impl<'a> Collector<'a> {
    fn new(cfg: &'a CheckConfig, bundle: &str) -> Self {
        Collector {
            cfg,
            bundle: bundle.into(),
            reports: Vec::new(),
        }
    }

    fn check<F>(&mut self, check: &str, tol: f64, points: &[Point], f: F)
    where
        F: Fn(&Point) -> Result<f64> + Sync,
    {
        let start = Instant::now();
        let res = sweep(points, f);
        self.push(check, tol, &res, start);
    }

    fn push(&mut self, check: &str, tol: f64, res: &[(f64, Vec<f64>)], start: Instant) {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        self.reports.push(ResidualReport::from_residuals(
            check,
            &self.bundle,
            res,
            tol,
            self.cfg.seed,
            ms,
        ));
    }
}

fn indicator(failed: bool) -> f64 {
    if failed {
        1.0
    } else {
        0.0
    }
}

fn bundle_points(cfg: &CheckConfig, b: &MorphismBundle, count: usize) -> Result<Vec<Point>> {
    sample_points(&b.region, b.map.source_chart(), count, cfg.seed, &b.name, cfg.margin)
}

fn morphism(cfg: &CheckConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for b in all_bundles() {
        let pts = bundle_points(cfg, &b, cfg.samples)?;
        let mut c = Collector::new(cfg, &b.name);
        let (g, h, map) = (&b.g, &b.h, &b.map);
        c.check("tension_norm", cfg.tolerance, &pts, |p| {
            Ok(harmonic_morphism_residual(map, g, h, p)?.tension_norm)
        });
        c.check("hwc_defect", cfg.tolerance, &pts, |p| {
            Ok(harmonic_morphism_residual(map, g, h, p)?.hwc_norm)
        });

        let start = Instant::now();
        let pert = b.perturbed(0, PERTURBATION_AMPLITUDE)?;
        let res = sweep(&pts, |p| Ok(harmonic_morphism_residual(&pert.map, g, h, p)?.max_norm()));
        let peak = res.iter().map(|r| r.0).fold(0.0, f64::max);
        let worst = res
            .iter()
            .find(|r| r.0 == peak)
            .map(|r| r.1.clone())
            .unwrap_or_default();
        c.push(
            "perturbation_detected",
            cfg.tolerance,
            &[(indicator(!(peak > DETECTION_FLOOR)), worst)],
            start,
        );

        let u = vertical_field(map, g)?;
        if b.n() >= 3 {
            c.check("tension_frame_route", cfg.fd_tolerance, &pts, |p| {
                Ok((tension_field(map, g, h, p)? - tension_via_frames(map, g, h, p)?).amax())
            });
            c.check("conformality_frame", cfg.tolerance, &pts, |p| {
                conformality_residual(&u, g, p)
            });
            c.check("conformality_route_gap", cfg.tolerance, &pts, |p| {
                Ok((conformality_residual(&u, g, p)? - conformality_residual_lie(&u, g, p)?).abs())
            });
        } else {
            c.check("fiber_minimality", cfg.tolerance, &pts, |p| {
                fiber_minimality_residual(&u, g, p)
            });
            let reference = dilation(map, g, h, &pts[0])?;
            c.check("dilation_spread", cfg.tolerance, &pts, |p| {
                Ok((dilation(map, g, h, p)? - reference).abs())
            });
        }
        out.extend(c.reports);
    }
    Ok(out)
}

fn classify(cfg: &CheckConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for b in all_bundles() {
        let (Some(expected), Some(k)) = (b.expected_type, b.curvature_k) else {
            continue;
        };
        let pts = bundle_points(cfg, &b, cfg.samples)?;
        let u = vertical_field(&b.map, &b.g)?;
        let g = &b.g;
        let start = Instant::now();
        let reps: Vec<_> = pts
            .par_iter()
            .map(|p| classify_type_with_tol(&u, g, k, p, cfg.fd_tolerance))
            .collect();
        let mut c = Collector::new(cfg, &b.name);
        let per_point = |f: &dyn Fn(&harmorph::foliation::TypeReport) -> f64| -> Residuals {
            reps.iter()
                .zip(&pts)
                .map(|(r, p)| (r.as_ref().map_or(FAILED_EVALUATION, f), p.coords.clone()))
                .collect()
        };
        c.push(
            "classify_verdict",
            cfg.tolerance,
            &per_point(&|r| indicator(r.verdict != expected)),
            start,
        );
        let vanishing = per_point(&|r| match expected {
            FibrationType::Type1 => r.type1_residual,
            FibrationType::Type2 => r.type2_residual,
            FibrationType::Both => r.type1_residual.max(r.type2_residual),
            FibrationType::Neither => 0.0,
        });
        c.push("classify_residual", cfg.fd_tolerance, &vanishing, start);
        if expected == FibrationType::Type2 {
            c.push("r0_vanishing", cfg.tolerance, &per_point(&|r| r.r0.abs()), start);
        }
        c.check("rho_closedness", cfg.fd_tolerance, &pts, |p| {
            Ok(rho_and_closedness(&u, g, p)?.residual)
        });
        out.extend(c.reports);
    }
    Ok(out)
}

fn metric_checks(c: &mut Collector, cfg: &CheckConfig, g: &MetricField, k: Option<f64>, pts: &[Point]) {
    if let Some(k) = k {
        c.check("space_form", cfg.tolerance, pts, |p| {
            Ok(riemann_and_sectional(g, p)?.space_form_deviation(k))
        });
    }
    c.check("riemann_symmetry", cfg.tolerance, pts, |p| {
        Ok(riemann_and_sectional(g, p)?.riemann.symmetry_defect())
    });
    c.check("metric_compatibility", cfg.tolerance, pts, |p| {
        Ok(MetricJet::at(g, p, 1)?.compatibility_defect())
    });
}

fn jet_fd_worst(map: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point, order: usize) -> Result<f64> {
    let image = map.eval(p)?;
    Ok(jet_fd_mismatch(map.field(), p, order)?
        .max(jet_fd_mismatch(g.field(), p, order)?)
        .max(jet_fd_mismatch(h.field(), &image, order)?))
}

fn curvature(cfg: &CheckConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for b in all_bundles() {
        let pts = bundle_points(cfg, &b, cfg.samples)?;
        let mut c = Collector::new(cfg, &b.name);
        metric_checks(&mut c, cfg, &b.g, b.curvature_k, &pts);
        c.check("jet_fd", cfg.fd_tolerance, &pts, |p| {
            jet_fd_worst(&b.map, &b.g, &b.h, p, cfg.jet_order)
        });
        out.extend(c.reports);
    }
    Ok(out)
}

/// Dyadic inputs: `p_i = (n−2)k/64` and `a_ij = k/64`, so every
/// intermediate, including the division by `n − 2`, is exact.
fn dyadic_draw(rng: &mut impl Rng, n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let mut tick = || rng.gen_range(-64i32..=64) as f64 / 64.0;
    let p: Vec<f64> = (0..n).map(|_| (n - 2) as f64 * tick()).collect();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = tick();
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    (p, a)
}

fn torsion(cfg: &CheckConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for n in 3..=5 {
        let name = format!("synthetic_n{n}");
        let mut rng = stream(cfg.seed, &name);
        let mut draws = Vec::with_capacity(TORSION_DRAWS);
        while draws.len() < TORSION_DRAWS {
            let (p, a) = dyadic_draw(&mut rng, n);
            let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if p_norm >= 0.1 && a.norm() >= 0.1 {
                draws.push((p, a));
            }
        }
        let mut c = Collector::new(cfg, &name);
        let start = Instant::now();
        let mut identities = Vec::new();
        let mut zero_loci = Vec::new();
        let mut branch = Vec::new();
        for (p, a) in &draws {
            let s = torsion_s(p, a, n)?;
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let trace: f64 = (0..n).map(|i| s.get(i, i, j)).sum();
                worst = worst.max(trace.abs());
                for i in 0..n {
                    for k in 0..n {
                        worst = worst.max((s.get(i, j, k) + s.get(i, k, j)).abs());
                    }
                }
            }
            identities.push((worst, p.clone()));
            let on_z1 = torsion_s(p, &DMatrix::zeros(n, n), n)?.max_abs();
            let on_z2 = torsion_s(&vec![0.0; n], a, n)?.max_abs();
            zero_loci.push((on_z1.max(on_z2), p.clone()));
            branch.push((indicator(s.max_abs() < TORSION_BRANCH_FLOOR), p.clone()));
        }
        c.push("torsion_identities", cfg.tolerance, &identities, start);
        c.push("torsion_zero_loci", cfg.tolerance, &zero_loci, start);
        c.push("torsion_branch", cfg.tolerance, &branch, start);
        out.extend(c.reports);
    }
    Ok(out)
}

/// Number of points per randomized instance.
fn instance_points(cfg: &CheckConfig) -> usize {
    (cfg.samples / 2).max(1)
}

fn theorem1(cfg: &CheckConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    let count = instance_points(cfg);
    for seed in 0..NORMAL_FORM_SEEDS {
        let n = 3 + (seed % 2) as usize;
        let name = format!("normal_form_seed{seed:02}");
        let d = random_normal_form(n, seed)?;
        let (g, phi) = build_metric_corank1(&d)?;
        let (gp, _) = build_metric_corank_p(&CorankPData::from_normal_form(&d))?;
        let pts = sample_points(&d.region, d.total_chart, count, cfg.seed, &name, cfg.margin)?;
        let mut c = Collector::new(cfg, &name);
        c.check("morphism_residual", cfg.tolerance, &pts, |p| {
            Ok(harmonic_morphism_residual(&phi, &g, &d.h, p)?.max_norm())
        });
        c.check("corank_p_agreement", cfg.tolerance, &pts, |p| {
            Ok((g.matrix(p)? - gp.matrix(p)?).amax())
        });
        if seed < FRAME_ROUTE_SEEDS {
            c.check("tension_frame_route", cfg.fd_tolerance, &pts, |p| {
                Ok((tension_field(&phi, &g, &d.h, p)? - tension_via_frames(&phi, &g, &d.h, p)?).amax())
            });
        }
        out.extend(c.reports);
    }
    for n in [3, 4] {
        let name = format!("halfspace_roundtrip_n{n}");
        let d = halfspace_normal_form(n)?;
        let (g, _) = build_metric_corank1(&d)?;
        let target = harmorph::gallery::halfspace_metric(n + 1);
        let pts = sample_points(&d.region, d.total_chart, count, cfg.seed, &name, cfg.margin)?;
        let mut c = Collector::new(cfg, &name);
        c.check("halfspace_roundtrip", cfg.tolerance, &pts, |p| {
            // y = r(t) and dy = y^{n−1} dt
            let y = d.r_fn.at(p)?;
            let mut coords = p.coords.clone();
            coords[n] = y;
            let mut rebuilt = target.matrix(&target.point(coords))?;
            let s = y.powi(n as i32 - 1);
            for a in 0..=n {
                rebuilt[(a, n)] *= s;
                rebuilt[(n, a)] *= s;
            }
            Ok((g.matrix(p)? - rebuilt).amax())
        });
        out.extend(c.reports);
    }
    for seed in 0..CORANK2_SEEDS {
        let name = format!("corank2_seed{seed:02}");
        let d = random_corank2(3, seed)?;
        let (g, phi) = build_metric_corank_p(&d)?;
        let pts = sample_points(&d.region, d.total_chart, count, cfg.seed, &name, cfg.margin)?;
        let mut c = Collector::new(cfg, &name);
        c.check("morphism_residual", cfg.tolerance, &pts, |p| {
            Ok(harmonic_morphism_residual(&phi, &g, &d.h, p)?.max_norm())
        });
        out.extend(c.reports);
    }
    Ok(out)
}

fn quotient_checks(c: &mut Collector, cfg: &CheckConfig, x: &VectorField, g: &MetricField, pts: &[Point]) {
    c.check("quotient_exponent_plus", cfg.tolerance, pts, |p| {
        killing_quotient_residual(x, g, p, 1.0)
    });
    let start = Instant::now();
    let res = sweep(pts, |p| killing_quotient_residual(x, g, p, -1.0));
    let peak = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst = res
        .iter()
        .find(|r| r.0 == peak)
        .map(|r| r.1.clone())
        .unwrap_or_default();
    c.push(
        "quotient_exponent_minus",
        cfg.tolerance,
        &[(indicator(!(peak > WRONG_EXPONENT_FLOOR)), worst)],
        start,
    );
}

fn killing(cfg: &CheckConfig) -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for ex in killing_fields_catalog() {
        let pts = sample_points(
            &ex.region,
            ex.metric.chart(),
            cfg.samples,
            cfg.seed,
            &ex.name,
            cfg.margin,
        )?;
        let mut c = Collector::new(cfg, &ex.name);
        c.check("killing_residual", cfg.tolerance, &pts, |p| {
            harmorph::foliation::killing_residual(&ex.field, &ex.metric, p)
        });
        if ex.metric.dim() >= 4 {
            quotient_checks(&mut c, cfg, &ex.field, &ex.metric, &pts);
        }
        out.extend(c.reports);
    }
    let b = quadratic_r4_r3()?;
    if let Some(x) = &b.killing {
        let pts = bundle_points(cfg, &b, cfg.samples)?;
        let mut c = Collector::new(cfg, &b.name);
        c.check("killing_residual", cfg.tolerance, &pts, |p| {
            harmorph::foliation::killing_residual(x, &b.g, p)
        });
        quotient_checks(&mut c, cfg, x, &b.g, &pts);
        c.check("killing_pullback", cfg.tolerance, &pts, |p| {
            let gm = b.g.matrix(p)?;
            let xv = x.at(p)?;
            let flat = &gm * &xv;
            let expected = &gm * xv.dot(&flat) - &flat * flat.transpose();
            Ok((pullback_metric(&b.map, &b.h, p)? - expected).amax())
        });
        out.extend(c.reports);
    }
    Ok(out)
}
