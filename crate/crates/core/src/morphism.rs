//! Pointwise residuals of the harmonic-morphism property: a map is a
//! harmonic morphism iff its tension field vanishes and it is horizontally
//! weakly conformal, `g^{ab} ∂_aφ^i ∂_bφ^k h_kj = R δ^i_j`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::field::{MetricField, Point, SmoothMap};
use crate::jet::Jet;
use crate::kernel::MetricJet;

/// `R` below this is treated as a critical point of the map.
pub const DEGENERATE_DILATION: f64 = 1e-12;

/// Residuals of a map at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorphismResidual {
    /// h-norm of the tension field.
    pub tension_norm: f64,
    /// Frobenius norm of `M − R·Id`.
    pub hwc_norm: f64,
    /// `R = ‖φ′‖² / n`.
    pub dilation_sq: f64,
    /// Set when `R < 1e-12`; such points pass by convention.
    pub degenerate: bool,
}

impl MorphismResidual {
    pub fn max_norm(&self) -> f64 {
        self.tension_norm.max(self.hwc_norm)
    }
}

/// Conformality operator and its defect.
#[derive(Clone, Debug, PartialEq)]
pub struct HwcResidual {
    /// `M^i_j = g^{ab} ∂_aφ^i ∂_bφ^k h_kj`.
    pub operator: DMatrix<f64>,
    pub defect: DMatrix<f64>,
    pub dilation_sq: f64,
}

/// Everything needed for the residuals at a point, evaluated once.
#[derive(Clone, Debug)]
pub struct MapJet {
    pub source: Point,
    pub target: Point,
    pub g: MetricJet,
    pub h: MetricJet,
    /// `∂_a φ^i`, `n × m`.
    pub jacobian: DMatrix<f64>,
    jets: Vec<Jet>,
}

impl MapJet {
    /// `order = 1` suffices for everything but the tension field.
    pub fn new(phi: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point, order: usize) -> Result<MapJet> {
        check_compatible(phi, g, h)?;
        let jets = phi.jets(p, order)?;
        let target = Point::new(phi.target_chart(), jets.iter().map(Jet::value).collect());
        let gj = MetricJet::at(g, p, order - 1)?;
        let hj = MetricJet::at(h, &target, order - 1)?;
        let m = phi.m_dim();
        let jacobian = DMatrix::from_fn(phi.n_dim(), m, |i, a| jets[i].partial(&[a]));
        Ok(MapJet {
            source: p.clone(),
            target,
            g: gj,
            h: hj,
            jacobian,
            jets,
        })
    }

    pub fn m_dim(&self) -> usize {
        self.jacobian.ncols()
    }

    pub fn n_dim(&self) -> usize {
        self.jacobian.nrows()
    }

    pub fn conformality_operator(&self) -> DMatrix<f64> {
        &self.jacobian * &self.g.ginv * self.jacobian.transpose() * &self.h.g
    }

    pub fn energy_density(&self) -> f64 {
        self.conformality_operator().trace()
    }

    pub fn hwc(&self) -> HwcResidual {
        let operator = self.conformality_operator();
        let n = self.n_dim();
        let dilation_sq = operator.trace() / n as f64;
        let defect = &operator - DMatrix::identity(n, n) * dilation_sq;
        HwcResidual {
            operator,
            defect,
            dilation_sq,
        }
    }

    /// Requires order-2 jets.
    pub fn tension(&self) -> DVector<f64> {
        assert!(self.jets[0].order() >= 2, "tension field needs second derivatives");
        let (m, n) = (self.m_dim(), self.n_dim());
        let gamma_g = self.g.christoffel();
        let gamma_h = self.h.christoffel();
        let j = &self.jacobian;
        DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for a in 0..m {
                for b in 0..m {
                    let gab = self.g.ginv[(a, b)];
                    if gab == 0.0 {
                        continue;
                    }
                    let mut hess = self.jets[i].partial(&[a, b]);
                    for c in 0..m {
                        hess -= gamma_g.get(c, a, b) * j[(i, c)];
                    }
                    for jj in 0..n {
                        for k in 0..n {
                            hess += gamma_h.get(i, jj, k) * j[(jj, a)] * j[(k, b)];
                        }
                    }
                    s += gab * hess;
                }
            }
            s
        })
    }

    pub fn pullback(&self) -> DMatrix<f64> {
        self.jacobian.transpose() * &self.h.g * &self.jacobian
    }

    pub fn residual(&self) -> MorphismResidual {
        let hwc = self.hwc();
        let tau = self.tension();
        MorphismResidual {
            tension_norm: self.h.norm(&tau),
            hwc_norm: hwc.defect.norm(),
            dilation_sq: hwc.dilation_sq,
            degenerate: hwc.dilation_sq < DEGENERATE_DILATION,
        }
    }
}

fn check_compatible(phi: &SmoothMap, g: &MetricField, h: &MetricField) -> Result<()> {
    if g.chart() != phi.source_chart() || g.dim() != phi.m_dim() {
        return Err(GeometryError::Shape(format!(
            "metric `{}` ({}, dim {}) does not match the source of `{}` ({}, dim {})",
            g.name(),
            g.chart(),
            g.dim(),
            phi.name(),
            phi.source_chart(),
            phi.m_dim()
        )));
    }
    if h.chart() != phi.target_chart() || h.dim() != phi.n_dim() {
        return Err(GeometryError::Shape(format!(
            "metric `{}` ({}, dim {}) does not match the target of `{}` ({}, dim {})",
            h.name(),
            h.chart(),
            h.dim(),
            phi.name(),
            phi.target_chart(),
            phi.n_dim()
        )));
    }
    Ok(())
}

/// `‖φ′‖² = g^{ab} h_ij ∂_aφ^i ∂_bφ^j`.
pub fn energy_density(phi: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point) -> Result<f64> {
    Ok(MapJet::new(phi, g, h, p, 1)?.energy_density())
}

/// `r = sqrt(‖φ′‖² / n)`.
pub fn dilation(phi: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point) -> Result<f64> {
    let mj = MapJet::new(phi, g, h, p, 1)?;
    Ok((mj.energy_density() / mj.n_dim() as f64).max(0.0).sqrt())
}

pub fn hwc_residual(phi: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point) -> Result<HwcResidual> {
    Ok(MapJet::new(phi, g, h, p, 1)?.hwc())
}

/// Tension field `τ(φ)^i` in target coordinates.
pub fn tension_field(phi: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point) -> Result<DVector<f64>> {
    Ok(MapJet::new(phi, g, h, p, 2)?.tension())
}

pub fn harmonic_morphism_residual(
    phi: &SmoothMap,
    g: &MetricField,
    h: &MetricField,
    p: &Point,
) -> Result<MorphismResidual> {
    Ok(MapJet::new(phi, g, h, p, 2)?.residual())
}

/// `(φ*h)_ab = h_ij(φ(p)) ∂_aφ^i ∂_bφ^j`.
pub fn pullback_metric(phi: &SmoothMap, h: &MetricField, p: &Point) -> Result<DMatrix<f64>> {
    if h.chart() != phi.target_chart() || h.dim() != phi.n_dim() {
        return Err(GeometryError::Shape(format!(
            "metric `{}` does not match the target of `{}`",
            h.name(),
            phi.name()
        )));
    }
    let jets = phi.jets(p, 1)?;
    let target = Point::new(phi.target_chart(), jets.iter().map(Jet::value).collect());
    let hm = h.matrix(&target)?;
    let j = DMatrix::from_fn(phi.n_dim(), phi.m_dim(), |i, a| jets[i].partial(&[a]));
    Ok(j.transpose() * hm * j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ChartId;
    use approx::assert_relative_eq;

    const R1: ChartId = ChartId("R1");
    const R2: ChartId = ChartId("R2");
    const R3: ChartId = ChartId("R3");
    const R4: ChartId = ChartId("R4");

    fn identity3() -> SmoothMap {
        SmoothMap::new("id", R3, R3, 3, 3, |x| x.to_vec())
    }

    fn quadratic() -> SmoothMap {
        SmoothMap::new("quadratic", R4, R3, 4, 3, |x| {
            vec![
                0.5 * (&x[0] * &x[0] + &x[1] * &x[1] - &x[2] * &x[2] - &x[3] * &x[3]),
                &x[0] * &x[3] - &x[1] * &x[2],
                &x[0] * &x[2] + &x[1] * &x[3],
            ]
        })
    }

    #[test]
    fn identity_map() {
        let g = MetricField::flat(R3, 3);
        let p = g.point(vec![0.1, 0.2, 0.3]);
        assert_eq!(energy_density(&identity3(), &g, &g, &p).unwrap(), 3.0);
        assert_eq!(dilation(&identity3(), &g, &g, &p).unwrap(), 1.0);
        let tau = tension_field(&identity3(), &g, &g, &p).unwrap();
        assert!(tau.iter().all(|v| *v == 0.0));
        assert_eq!(pullback_metric(&identity3(), &g, &p).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn one_dimensional_maps() {
        let g = MetricField::flat(R1, 1);
        let p = g.point(vec![0.7]);
        let double = SmoothMap::new("2x", R1, R1, 1, 1, |x| vec![2.0 * &x[0]]);
        assert_eq!(energy_density(&double, &g, &g, &p).unwrap(), 4.0);
        let square = SmoothMap::new("x^2", R1, R1, 1, 1, |x| vec![&x[0] * &x[0]]);
        assert_eq!(tension_field(&square, &g, &g, &p).unwrap()[0], 2.0);
    }

    #[test]
    fn constant_map_is_degenerate() {
        let g = MetricField::flat(R3, 3);
        let c = SmoothMap::new("const", R3, R3, 3, 3, |x| vec![x[0].lift(1.0); 3]);
        let p = g.point(vec![0.4, 0.0, -0.2]);
        assert_eq!(dilation(&c, &g, &g, &p).unwrap(), 0.0);
        let res = harmonic_morphism_residual(&c, &g, &g, &p).unwrap();
        assert_eq!(res.tension_norm, 0.0);
        assert_eq!(res.hwc_norm, 0.0);
        assert_eq!(res.dilation_sq, 0.0);
        assert!(res.degenerate);
    }

    #[test]
    fn non_conformal_defect_is_exact() {
        let g = MetricField::flat(R3, 3);
        let h = MetricField::flat(R2, 2);
        let phi = SmoothMap::new("(x,2y)", R3, R2, 3, 2, |x| vec![x[0].clone(), 2.0 * &x[1]]);
        let hwc = hwc_residual(&phi, &g, &h, &g.point(vec![0.3, 0.1, 0.9])).unwrap();
        assert_eq!(hwc.dilation_sq, 2.5);
        assert_eq!(hwc.defect, DMatrix::from_diagonal(&DVector::from_vec(vec![-1.5, 1.5])));
    }

    #[test]
    fn orthogonal_projection_is_conformal() {
        let g = MetricField::flat(R4, 4);
        let h = MetricField::flat(R3, 3);
        let phi = SmoothMap::new("proj", R4, R3, 4, 3, |x| x[..3].to_vec());
        let hwc = hwc_residual(&phi, &g, &h, &g.point(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(hwc.dilation_sq, 1.0);
        assert!(hwc.defect.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quadratic_map_at_unit_point() {
        let g = MetricField::flat(R4, 4);
        let h = MetricField::flat(R3, 3);
        let p = g.point(vec![1.0, 0.0, 0.0, 0.0]);
        let phi = quadratic();
        assert_eq!(phi.eval(&p).unwrap().coords, vec![0.5, 0.0, 0.0]);
        assert_eq!(energy_density(&phi, &g, &h, &p).unwrap(), 3.0);
        let res = harmonic_morphism_residual(&phi, &g, &h, &p).unwrap();
        assert_eq!(res.dilation_sq, 1.0);
        assert_eq!(res.hwc_norm, 0.0);
        assert_eq!(res.tension_norm, 0.0);
    }

    #[test]
    fn mismatched_metric_is_rejected() {
        let g = MetricField::flat(R3, 3);
        let h = MetricField::flat(R2, 2);
        let p = g.point(vec![0.0; 3]);
        assert!(matches!(
            energy_density(&identity3(), &g, &h, &p),
            Err(GeometryError::Shape(_))
        ));
    }

    #[test]
    fn tension_into_curved_target_uses_target_connection() {
        // t ↦ (t, 1) into the half-plane is a horizontal line, not a geodesic:
        // τ = Γ^y_xx = 1/y = 1 in coordinates.
        let g = MetricField::flat(R1, 1);
        let h = MetricField::conformal("half_plane", R2, 2, |y| y[1].powi(-2));
        let phi = SmoothMap::new("line", R1, R2, 1, 2, |x| vec![x[0].clone(), x[0].lift(1.0)]);
        let tau = tension_field(&phi, &g, &h, &g.point(vec![0.3])).unwrap();
        assert_relative_eq!(tau[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(tau[1], 1.0, epsilon = 1e-15);
    }
}
