//! Closed-form harmonic morphisms with their expected fibration types.
//!
//! Spheres use the stereographic chart from the north pole (last ambient
//! coordinate `= 1`), `σ⁻¹(u) = (2u, |u|² − 1)/(1 + |u|²)`, with metric
//! `4(1 + |u|²)⁻² δ`. Hyperbolic space uses the upper half-space chart.

use std::fmt;

use crate::error::{GeometryError, Result};
use crate::field::{ChartId, MetricField, SmoothMap, VectorField};
use crate::foliation::FibrationType;
use crate::jet::Jet;
use crate::region::Region;

/// Largest height `σ⁻¹(u)_d` of target sphere points kept away from the chart pole.
pub const POLE_CAP: f64 = 0.9;

/// A map with its source and target geometry and sampling metadata.
#[derive(Clone)]
pub struct MorphismBundle {
    pub name: String,
    pub g: MetricField,
    pub h: MetricField,
    pub map: SmoothMap,
    /// Constant curvature of `g`, when it is a space form.
    pub curvature_k: Option<f64>,
    /// `None` when the dichotomy does not apply (`n = 2`).
    pub expected_type: Option<FibrationType>,
    pub region: Region,
    /// A Killing field tangent to the fibers.
    pub killing: Option<VectorField>,
    pub notes: &'static str,
}

impl fmt::Debug for MorphismBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MorphismBundle")
            .field("name", &self.name)
            .field("m", &self.map.m_dim())
            .field("n", &self.map.n_dim())
            .field("curvature_k", &self.curvature_k)
            .field("expected_type", &self.expected_type)
            .finish()
    }
}

impl MorphismBundle {
    /// Number of horizontal directions.
    pub fn n(&self) -> usize {
        self.map.n_dim()
    }

    /// A copy with `amplitude · sin(x₁)` added to one component of the map.
    pub fn perturbed(&self, component: usize, amplitude: f64) -> Result<MorphismBundle> {
        let mut out = self.clone();
        out.map = self.map.perturbed(component, amplitude)?;
        out.name = format!("{}+perturbation", self.name);
        out.expected_type = None;
        out.killing = None;
        Ok(out)
    }
}

fn norm_sq(x: &[Jet]) -> Jet {
    let mut s = &x[0] * &x[0];
    for c in &x[1..] {
        s = s + c * c;
    }
    s
}

/// `σ(X) = X[..d] / (1 − X_d)` for `X ∈ S^d ⊂ R^{d+1}`.
pub fn stereographic(x: &[Jet]) -> Vec<Jet> {
    let d = x.len() - 1;
    let inv = (1.0 - &x[d]).recip();
    x[..d].iter().map(|c| c * &inv).collect()
}

/// `σ⁻¹(u) = (2u, |u|² − 1) / (1 + |u|²)`.
pub fn inverse_stereographic(u: &[Jet]) -> Vec<Jet> {
    let s = norm_sq(u);
    let inv = (&s + 1.0).recip();
    let mut out: Vec<Jet> = u.iter().map(|c| 2.0 * c * &inv).collect();
    out.push((&s - 1.0) * &inv);
    out
}

pub fn sphere_chart(d: usize) -> ChartId {
    ChartId::intern(&format!("S{d}"))
}

pub fn euclidean_chart(d: usize) -> ChartId {
    ChartId::intern(&format!("R{d}"))
}

pub fn halfspace_chart(d: usize) -> ChartId {
    ChartId::intern(&format!("H{d}"))
}

/// Round unit sphere in the stereographic chart, `4(1 + |u|²)⁻² δ`.
pub fn sphere_metric(d: usize) -> MetricField {
    MetricField::conformal(format!("round_S{d}"), sphere_chart(d), d, |u| {
        (norm_sq(u) + 1.0).powi(-2) * 4.0
    })
    .with_curvature(1.0)
}

/// Hyperbolic space `y⁻²(dx² + dy²)` with `y` the last coordinate.
pub fn halfspace_metric(d: usize) -> MetricField {
    MetricField::conformal(format!("hyperbolic_H{d}"), halfspace_chart(d), d, move |x| {
        x[d - 1].powi(-2)
    })
    .with_curvature(-1.0)
    .with_domain(move |x| x[d - 1] > 0.0)
}

fn check_n(n: usize) -> Result<()> {
    if !(3..=7).contains(&n) {
        return Err(GeometryError::Dimension(format!("bundle needs 3 ≤ n ≤ 7, got {n}")));
    }
    Ok(())
}

fn with_region_domain(map: SmoothMap, region: &Region) -> SmoothMap {
    let region = region.clone();
    map.with_domain(move |x, margin| region.satisfies_constraints(x, margin))
}

/// Flat `R^{n+1} → R^n`, `(x, t) ↦ x`.
pub fn euclidean_projection(n: usize) -> Result<MorphismBundle> {
    check_n(n)?;
    let (src, dst) = (euclidean_chart(n + 1), euclidean_chart(n));
    let region = Region::cube(n + 1, 2.0);
    let map = SmoothMap::new(format!("projection_R{}_R{n}", n + 1), src, dst, n + 1, n, move |x| {
        x[..n].to_vec()
    });
    Ok(MorphismBundle {
        name: format!("euclidean_projection_n{n}"),
        g: MetricField::flat(src, n + 1),
        h: MetricField::flat(dst, n),
        map: with_region_domain(map, &region),
        curvature_k: Some(0.0),
        expected_type: Some(FibrationType::Both),
        region,
        killing: None,
        notes: "fibers are parallel lines",
    })
}

/// Flat `R^{n+1} \ {0} → S^n`, `x ↦ σ(x/|x|)`.
pub fn radial_projection(n: usize) -> Result<MorphismBundle> {
    check_n(n)?;
    let src = euclidean_chart(n + 1);
    let region = Region::cube(n + 1, 2.0)
        .with_constraint("|x| > 0.1", |x, m| {
            x.iter().map(|c| c * c).sum::<f64>().sqrt() > 0.1 + m
        })
        .with_constraint("x/|x| away from the chart pole", move |x, m| {
            x[n] < (POLE_CAP - m) * x.iter().map(|c| c * c).sum::<f64>().sqrt()
        });
    let map = SmoothMap::new(format!("radial_R{}_S{n}", n + 1), src, sphere_chart(n), n + 1, n, |x| {
        let len = norm_sq(x).sqrt();
        let unit: Vec<Jet> = x.iter().map(|c| c / &len).collect();
        stereographic(&unit)
    });
    Ok(MorphismBundle {
        name: format!("radial_projection_n{n}"),
        g: MetricField::flat(src, n + 1),
        h: sphere_metric(n),
        map: with_region_domain(map, &region),
        curvature_k: Some(0.0),
        expected_type: Some(FibrationType::Type1),
        region,
        killing: None,
        notes: "implemented as x/|x|; fibers are rays orthogonal to concentric spheres",
    })
}

/// `S⁴ → S³`, `(X_0, …, X_4) ↦ (X_0, …, X_3)/√(1 − X_4²)`, undefined at `X_4 = ±1`.
pub fn sphere_umbilic() -> Result<MorphismBundle> {
    let n = 3;
    let src = sphere_chart(n + 1);
    let lift = |u: &[f64]| {
        let s: f64 = u.iter().map(|c| c * c).sum();
        let mut x: Vec<f64> = u.iter().map(|c| 2.0 * c / (1.0 + s)).collect();
        x.push((s - 1.0) / (1.0 + s));
        x
    };
    let region = Region::cube(n + 1, 2.5)
        .with_constraint("away from the source poles", move |u, m| {
            lift(u)[n + 1].abs() < POLE_CAP - m
        })
        .with_constraint("image away from the chart pole", move |u, m| {
            let x = lift(u);
            x[n] < (POLE_CAP - m) * (1.0 - x[n + 1] * x[n + 1]).sqrt()
        });
    let map = SmoothMap::new("umbilic_S4_S3", src, sphere_chart(n), n + 1, n, move |u| {
        let x = inverse_stereographic(u);
        let inv = (1.0 - &x[n + 1] * &x[n + 1]).sqrt().recip();
        let y: Vec<Jet> = x[..=n].iter().map(|c| c * &inv).collect();
        stereographic(&y)
    });
    Ok(MorphismBundle {
        name: "sphere_umbilic".into(),
        g: sphere_metric(n + 1),
        h: sphere_metric(n),
        map: with_region_domain(map, &region),
        curvature_k: Some(1.0),
        expected_type: Some(FibrationType::Type1),
        region,
        killing: None,
        notes: "fibers are great-circle arcs through the poles",
    })
}

/// Hyperbolic half-space onto its boundary, `(x, y) ↦ x`.
pub fn halfspace_projection(n: usize) -> Result<MorphismBundle> {
    check_n(n)?;
    let (src, dst) = (halfspace_chart(n + 1), euclidean_chart(n));
    let mut lo = vec![-2.0; n + 1];
    let mut hi = vec![2.0; n + 1];
    lo[n] = 0.2;
    hi[n] = 3.0;
    let region = Region::new(lo, hi).with_constraint("y > 0.2", move |x, m| x[n] > 0.2 + m);
    let map = SmoothMap::new(format!("horocyclic_H{}_R{n}", n + 1), src, dst, n + 1, n, move |x| {
        x[..n].to_vec()
    });
    Ok(MorphismBundle {
        name: format!("halfspace_projection_n{n}"),
        g: halfspace_metric(n + 1),
        h: MetricField::flat(dst, n),
        map: with_region_domain(map, &region),
        curvature_k: Some(-1.0),
        expected_type: Some(FibrationType::Type1),
        region,
        killing: None,
        notes: "fibers are geodesics orthogonal to horospheres",
    })
}

/// Rotation `x₁∂₂ − x₂∂₁ + x₃∂₄ − x₄∂₃` on `R⁴`.
pub fn double_rotation() -> VectorField {
    VectorField::new("double_rotation", euclidean_chart(4), 4, |x| {
        vec![-&x[1], x[0].clone(), -&x[3], x[2].clone()]
    })
}

/// Flat `R⁴ → R³`, quadratic and constant along the orbits of [`double_rotation`].
pub fn quadratic_r4_r3() -> Result<MorphismBundle> {
    let (src, dst) = (euclidean_chart(4), euclidean_chart(3));
    let region = Region::cube(4, 1.5).with_constraint("|x| > 0.1", |x, m| {
        x.iter().map(|c| c * c).sum::<f64>().sqrt() > 0.1 + m
    });
    let map = SmoothMap::new("quadratic_R4_R3", src, dst, 4, 3, |x| {
        vec![
            0.5 * (&x[0] * &x[0] + &x[1] * &x[1] - &x[2] * &x[2] - &x[3] * &x[3]),
            &x[0] * &x[3] - &x[1] * &x[2],
            &x[0] * &x[2] + &x[1] * &x[3],
        ]
    });
    Ok(MorphismBundle {
        name: "quadratic_r4_r3".into(),
        g: MetricField::flat(src, 4),
        h: MetricField::flat(dst, 3),
        map: with_region_domain(map, &region),
        curvature_k: Some(0.0),
        expected_type: Some(FibrationType::Type2),
        region,
        killing: Some(double_rotation()),
        notes: "pulls back h to |X|²g − (X♭)²",
    })
}

/// Hopf fibration of the unit `S³` onto the unit `S²`, dilation 2.
pub fn hopf() -> Result<MorphismBundle> {
    let src = sphere_chart(3);
    let region = Region::cube(3, 2.0).with_constraint("image away from the chart pole", |u, m| {
        let s: f64 = u.iter().map(|c| c * c).sum();
        let x: Vec<f64> = u
            .iter()
            .map(|c| 2.0 * c / (1.0 + s))
            .chain(std::iter::once((s - 1.0) / (1.0 + s)))
            .collect();
        2.0 * (x[1] * x[2] - x[0] * x[3]) < POLE_CAP - m
    });
    let map = SmoothMap::new("hopf_S3_S2", src, sphere_chart(2), 3, 2, |u| {
        let x = inverse_stereographic(u);
        let w = [
            &x[0] * &x[0] + &x[1] * &x[1] - &x[2] * &x[2] - &x[3] * &x[3],
            2.0 * (&x[0] * &x[2] + &x[1] * &x[3]),
            2.0 * (&x[1] * &x[2] - &x[0] * &x[3]),
        ];
        stereographic(&w)
    });
    Ok(MorphismBundle {
        name: "hopf".into(),
        g: sphere_metric(3),
        h: sphere_metric(2),
        map: with_region_domain(map, &region),
        curvature_k: Some(1.0),
        expected_type: None,
        region,
        killing: None,
        notes: "target is the unit sphere, so the dilation is 2",
    })
}

/// Every bundle exercised by the verifier, sorted by name.
pub fn all_bundles() -> Vec<MorphismBundle> {
    let mut out = vec![
        euclidean_projection(3),
        euclidean_projection(4),
        radial_projection(3),
        radial_projection(4),
        halfspace_projection(3),
        halfspace_projection(4),
        sphere_umbilic(),
        quadratic_r4_r3(),
        hopf(),
    ]
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .expect("built-in bundles have valid dimensions");
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

pub fn bundle_by_name(name: &str) -> Option<MorphismBundle> {
    all_bundles().into_iter().find(|b| b.name == name)
}

/// A Killing field with the metric it preserves and a region to sample it on.
#[derive(Clone, Debug)]
pub struct KillingExample {
    pub name: String,
    pub field: VectorField,
    pub metric: MetricField,
    /// Sampling region; zeros of the field lie outside it.
    pub region: Region,
}

/// Rotation `x_a ∂_b − x_b ∂_a` on flat `R^d`.
pub fn plane_rotation(d: usize, a: usize, b: usize) -> VectorField {
    VectorField::new(format!("rotation_{a}{b}_R{d}"), euclidean_chart(d), d, move |x| {
        let mut v = vec![x[0].lift(0.0); d];
        v[a] = -&x[b];
        v[b] = x[a].clone();
        v
    })
}

/// `∂₀ + m₁(x₁∂₂ − x₂∂₁)` on flat `R⁴`.
pub fn screw_field(m1: f64) -> VectorField {
    VectorField::new(format!("screw_m{m1}"), euclidean_chart(4), 4, move |x| {
        vec![x[0].lift(1.0), -&x[2] * m1, &x[1] * m1, x[0].lift(0.0)]
    })
}

/// Push-forward to the stereographic chart of `S^d` of the ambient rotation
/// `X_0 ∂_{X_d} − X_d ∂_{X_0}`, which moves the chart pole.
pub fn sphere_rotation(d: usize) -> VectorField {
    VectorField::new(format!("pole_rotation_S{d}"), sphere_chart(d), d, move |u| {
        let x = inverse_stereographic(u);
        let mut amb = vec![u[0].lift(0.0); d + 1];
        amb[0] = -&x[d];
        amb[d] = x[0].clone();
        // dσ_a = dX_a/(1 − X_d) + X_a dX_d/(1 − X_d)²
        let inv = (1.0 - &x[d]).recip();
        (0..d).map(|a| &amb[a] * &inv + &x[a] * &amb[d] * &inv * &inv).collect()
    })
}

pub fn killing_fields_catalog() -> Vec<KillingExample> {
    let away_from = |radius: f64, axes: [usize; 2]| move |x: &[f64], m: f64| x[axes[0]].hypot(x[axes[1]]) > radius + m;
    vec![
        KillingExample {
            name: "rotation_R3".into(),
            field: plane_rotation(3, 0, 1),
            metric: MetricField::flat(euclidean_chart(3), 3),
            region: Region::cube(3, 1.5).with_constraint("off the axis", away_from(0.1, [0, 1])),
        },
        KillingExample {
            name: "rotation_R4".into(),
            field: plane_rotation(4, 0, 1),
            metric: MetricField::flat(euclidean_chart(4), 4),
            region: Region::cube(4, 1.5).with_constraint("off the axis", away_from(0.1, [0, 1])),
        },
        KillingExample {
            name: "double_rotation_R4".into(),
            field: double_rotation(),
            metric: MetricField::flat(euclidean_chart(4), 4),
            region: Region::cube(4, 1.5).with_constraint("|x| > 0.1", |x, m| {
                x.iter().map(|c| c * c).sum::<f64>().sqrt() > 0.1 + m
            }),
        },
        KillingExample {
            name: "screw_R4".into(),
            field: screw_field(2.0),
            metric: MetricField::flat(euclidean_chart(4), 4),
            region: Region::cube(4, 1.5).with_constraint("off the axis", away_from(0.1, [1, 2])),
        },
        KillingExample {
            name: "pole_rotation_S4".into(),
            field: sphere_rotation(4),
            metric: sphere_metric(4),
            region: Region::cube(4, 2.0).with_constraint("off the fixed sphere", |u, m| {
                let s: f64 = u.iter().map(|c| c * c).sum();
                let x0 = 2.0 * u[0] / (1.0 + s);
                let xd = (s - 1.0) / (1.0 + s);
                x0.hypot(xd) > 0.1 + m
            }),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Point;
    use approx::assert_relative_eq;

    #[test]
    fn stereographic_round_trip() {
        let u = Jet::variables(&[0.3, -1.2, 0.5], 1);
        let back = stereographic(&inverse_stereographic(&u));
        for (a, b) in back.iter().zip(&u) {
            assert_relative_eq!(a.value(), b.value(), epsilon = 1e-15);
        }
    }

    #[test]
    fn projections_act_on_coordinates() {
        let b = euclidean_projection(3).unwrap();
        let p = Point::new(b.map.source_chart(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(b.map.eval(&p).unwrap().coords, vec![1.0, 2.0, 3.0]);
        let b = halfspace_projection(3).unwrap();
        let p = Point::new(b.map.source_chart(), vec![1.0, 2.0, 3.0, 5.0]);
        assert_eq!(b.map.eval(&p).unwrap().coords, vec![1.0, 2.0, 3.0]);
        let b = quadratic_r4_r3().unwrap();
        let p = Point::new(b.map.source_chart(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.map.eval(&p).unwrap().coords, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn radial_projection_of_unit_axis() {
        let b = radial_projection(3).unwrap();
        let y = b
            .map
            .eval(&Point::new(b.map.source_chart(), vec![2.0, 0.0, 0.0, 0.0]))
            .unwrap();
        // σ(1, 0, 0, 0) = (1, 0, 0)
        assert_eq!(y.coords, vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            b.map.eval(&Point::new(b.map.source_chart(), vec![0.05, 0.0, 0.0, 0.0])),
            Err(GeometryError::Domain { .. })
        ));
    }

    #[test]
    fn umbilic_map_is_identity_on_the_equator() {
        let b = sphere_umbilic().unwrap();
        // |u| = 1 lifts to (u, 0); its image is σ(u) in the target chart
        let u = [0.6, 0.0, 0.48, -0.64];
        let y = b.map.eval(&Point::new(b.map.source_chart(), u.to_vec())).unwrap();
        for a in 0..3 {
            assert_relative_eq!(y.coords[a], u[a] / (1.0 - u[3]), epsilon = 1e-15);
        }
    }

    #[test]
    fn bundle_names_are_unique_and_sorted() {
        let names: Vec<String> = all_bundles().into_iter().map(|b| b.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted);
        assert!(bundle_by_name("hopf").is_some());
        assert!(bundle_by_name("bogus").is_none());
    }

    #[test]
    fn dimension_bounds() {
        assert!(matches!(euclidean_projection(2), Err(GeometryError::Dimension(_))));
    }
}
