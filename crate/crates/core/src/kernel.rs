//! Chart-level tensor calculus: Levi-Civita connection, curvature, Lie and
//! exterior derivatives, musical isomorphisms, adapted frames and the
//! Laplace–Beltrami operator.
//!
//! Sign convention: [`laplace_beltrami`] returns `Δf = −g^{ab}∇_a∇_b f`, i.e.
//! minus the analyst's Laplacian, so that `Δ(x²) = −2` on flat space. The
//! tension field of a map into flat space is therefore `τ^i = −Δφ^i`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{GeometryError, Result};
use crate::field::{MetricField, OneFormField, Point, ScalarField, VectorField};
use crate::jet::Jet;

/// Residual g-norm below which a Gram–Schmidt candidate is skipped.
pub const FRAME_PIVOT_TOL: f64 = 1e-8;

/// Metric components and their partial derivatives at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    dim: usize,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    /// `∂_c g_ab`, stored at `[(c * dim + a) * dim + b]`.
    dg: Vec<f64>,
    /// `∂_d ∂_c g_ab`, stored at `[((d * dim + c) * dim + a) * dim + b]`.
    d2g: Option<Vec<f64>>,
}

impl MetricJet {
    /// Evaluates `g` at `p` with derivatives up to `order` (0, 1 or 2).
    pub fn at(metric: &MetricField, p: &Point, order: usize) -> Result<MetricJet> {
        let jets = metric.jets(p, order)?;
        Self::from_jets(metric.name(), metric.dim(), &jets, &p.coords)
    }

    pub(crate) fn from_jets(name: &str, dim: usize, jets: &[Jet], coords: &[f64]) -> Result<MetricJet> {
        let order = jets[0].order();
        let g = DMatrix::from_fn(dim, dim, |a, b| jets[a * dim + b].value());
        let singular = || GeometryError::SingularMetric {
            metric: name.to_string(),
            coords: coords.to_vec(),
        };
        if (0..dim).any(|a| (0..a).any(|b| (g[(a, b)] - g[(b, a)]).abs() > 1e-12 * (1.0 + g[(a, b)].abs()))) {
            return Err(GeometryError::Precondition(format!(
                "metric `{name}` is not symmetric at {coords:?}"
            )));
        }
        let chol = Cholesky::new(g.clone()).ok_or_else(singular)?;
        let ginv = chol.inverse();
        let mut dg = vec![0.0; dim * dim * dim];
        if order >= 1 {
            for c in 0..dim {
                for a in 0..dim {
                    for b in 0..dim {
                        dg[(c * dim + a) * dim + b] = jets[a * dim + b].partial(&[c]);
                    }
                }
            }
        }
        let d2g = (order >= 2).then(|| {
            let mut d2 = vec![0.0; dim * dim * dim * dim];
            for d in 0..dim {
                for c in 0..dim {
                    for a in 0..dim {
                        for b in 0..dim {
                            d2[((d * dim + c) * dim + a) * dim + b] = jets[a * dim + b].partial(&[c, d]);
                        }
                    }
                }
            }
            d2
        });
        Ok(MetricJet {
            dim,
            g,
            ginv,
            chol,
            dg,
            d2g,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `∂_c g_ab`.
    pub fn dg(&self, c: usize, a: usize, b: usize) -> f64 {
        self.dg[(c * self.dim + a) * self.dim + b]
    }

    fn d2g(&self, d: usize, c: usize, a: usize, b: usize) -> f64 {
        let n = self.dim;
        self.d2g.as_ref().expect("second derivatives requested")[((d * n + c) * n + a) * n + b]
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    pub fn lower(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    pub fn raise(&self, alpha: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(alpha)
    }

    /// Christoffel symbols of the second kind.
    pub fn christoffel(&self) -> Christoffel {
        let n = self.dim;
        let mut first = vec![0.0; n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    first[(d * n + b) * n + c] = 0.5 * (self.dg(b, d, c) + self.dg(c, d, b) - self.dg(d, b, c));
                }
            }
        }
        let mut data = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let s: f64 = (0..n).map(|d| self.ginv[(a, d)] * first[(d * n + b) * n + c]).sum();
                    data[(a * n + b) * n + c] = s;
                    data[(a * n + c) * n + b] = s;
                }
            }
        }
        Christoffel { dim: n, data }
    }

    /// `∂_e Γ^a_bc`, stored at `[((e * n + a) * n + b) * n + c]`.
    fn christoffel_derivative(&self) -> Vec<f64> {
        let n = self.dim;
        let mut first = vec![0.0; n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    first[(d * n + b) * n + c] = 0.5 * (self.dg(b, d, c) + self.dg(c, d, b) - self.dg(d, b, c));
                }
            }
        }
        let mut out = vec![0.0; n * n * n * n];
        for e in 0..n {
            // ∂_e g^{-1} = −g^{-1} (∂_e g) g^{-1}
            let dge = DMatrix::from_fn(n, n, |a, b| self.dg(e, a, b));
            let dginv = -(&self.ginv * dge * &self.ginv);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            let dfirst = 0.5 * (self.d2g(e, b, d, c) + self.d2g(e, c, d, b) - self.d2g(e, d, b, c));
                            s += dginv[(a, d)] * first[(d * n + b) * n + c] + self.ginv[(a, d)] * dfirst;
                        }
                        out[((e * n + a) * n + b) * n + c] = s;
                    }
                }
            }
        }
        out
    }

    /// Fully covariant Riemann tensor; requires order-2 metric jets.
    pub fn riemann(&self) -> Riemann {
        let n = self.dim;
        let gamma = self.christoffel();
        let dgamma = self.christoffel_derivative();
        let dg = |e: usize, a: usize, b: usize, c: usize| dgamma[((e * n + a) * n + b) * n + c];
        // R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb
        let mut up = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = dg(c, a, d, b) - dg(d, a, c, b);
                        for e in 0..n {
                            s += gamma.get(a, c, e) * gamma.get(e, d, b) - gamma.get(a, d, e) * gamma.get(e, c, b);
                        }
                        up[((a * n + b) * n + c) * n + d] = s;
                    }
                }
            }
        }
        let mut data = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        data[((a * n + b) * n + c) * n + d] =
                            (0..n).map(|e| self.g[(a, e)] * up[((e * n + b) * n + c) * n + d]).sum();
                    }
                }
            }
        }
        Riemann { dim: n, data }
    }

    /// `max |∂_c g_ab − Γ^d_ca g_db − Γ^d_cb g_ad|`.
    pub fn compatibility_defect(&self) -> f64 {
        let n = self.dim;
        let gamma = self.christoffel();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = self.dg(c, a, b);
                    for d in 0..n {
                        s -= gamma.get(d, c, a) * self.g[(d, b)] + gamma.get(d, c, b) * self.g[(a, d)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// Columns form a g-orthonormal basis (`Eᵀ g E = I`).
    pub fn orthonormal_basis(&self) -> DMatrix<f64> {
        let l = self.chol.l();
        l.transpose()
            .try_inverse()
            .expect("Cholesky factor of a positive definite matrix is invertible")
    }
}

/// Christoffel symbols `Γ^a_bc`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    /// `Γ^a_bc v^b w^c`.
    pub fn contract(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|a| {
                let mut s = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        s += self.get(a, b, c) * v[b] * w[c];
                    }
                }
                s
            })
            .collect()
    }
}

/// Fully covariant Riemann tensor `R_abcd = ⟨R(∂_c, ∂_d)∂_b, ∂_a⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim;
        self.data[((a * n + b) * n + c) * n + d]
    }

    /// `R(u, v, w, z) = R_abcd u^a v^b w^c z^d`.
    pub fn apply(&self, u: &[f64], v: &[f64], w: &[f64], z: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        s += self.get(a, b, c, d) * u[a] * v[b] * w[c] * z[d];
                    }
                }
            }
        }
        s
    }

    /// Components in the frame given by the columns of `frame`.
    pub fn in_frame(&self, frame: &DMatrix<f64>) -> Riemann {
        let n = self.dim;
        let mut data = vec![0.0; n * n * n * n];
        let col = |k: usize| frame.column(k).iter().copied().collect::<Vec<f64>>();
        let cols: Vec<Vec<f64>> = (0..n).map(col).collect();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        data[((a * n + b) * n + c) * n + d] = self.apply(&cols[a], &cols[b], &cols[c], &cols[d]);
                    }
                }
            }
        }
        Riemann { dim: n, data }
    }

    /// Largest violation among antisymmetry in `ab`, in `cd`, pair symmetry
    /// and the first Bianchi identity.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        worst = worst
                            .max((r + self.get(b, a, c, d)).abs())
                            .max((r + self.get(a, b, d, c)).abs())
                            .max((r - self.get(c, d, a, b)).abs())
                            .max((r + self.get(a, c, d, b) + self.get(a, d, b, c)).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |R_abcd − K(δ_ac δ_bd − δ_ad δ_bc)|`; meaningful for orthonormal components.
    pub fn space_form_deviation(&self, k: f64) -> f64 {
        let n = self.dim;
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let expected = k * (delta(a, c) * delta(b, d) - delta(a, d) * delta(b, c));
                        worst = worst.max((self.get(a, b, c, d) - expected).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Riemann tensor at a point together with the metric needed for sectional curvature.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub riemann: Riemann,
    pub metric: DMatrix<f64>,
    orthonormal: DMatrix<f64>,
}

impl Curvature {
    /// Sectional curvature of the plane spanned by `u` and `v`.
    pub fn sectional(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let uu = DVector::from_column_slice(u);
        let vv = DVector::from_column_slice(v);
        let guu = (uu.transpose() * &self.metric * &uu)[(0, 0)];
        let gvv = (vv.transpose() * &self.metric * &vv)[(0, 0)];
        let guv = (uu.transpose() * &self.metric * &vv)[(0, 0)];
        let area = guu * gvv - guv * guv;
        if area <= 1e-14 * guu.max(gvv).max(1.0).powi(2) {
            return Err(GeometryError::Precondition(
                "sectional curvature needs two independent vectors".into(),
            ));
        }
        Ok(self.riemann.apply(u, v, u, v) / area)
    }

    /// Components in the Cholesky orthonormal frame.
    pub fn orthonormal_riemann(&self) -> Riemann {
        self.riemann.in_frame(&self.orthonormal)
    }

    pub fn space_form_deviation(&self, k: f64) -> f64 {
        self.orthonormal_riemann().space_form_deviation(k)
    }
}

fn check_dims(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(GeometryError::Shape(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}

pub fn christoffel(g: &MetricField, p: &Point) -> Result<Christoffel> {
    Ok(MetricJet::at(g, p, 1)?.christoffel())
}

pub fn riemann_and_sectional(g: &MetricField, p: &Point) -> Result<Curvature> {
    let mj = MetricJet::at(g, p, 2)?;
    Ok(Curvature {
        riemann: mj.riemann(),
        orthonormal: mj.orthonormal_basis(),
        metric: mj.g,
    })
}

/// `(L_X T)_ab = X^c ∂_c T_ab + T_cb ∂_a X^c + T_ac ∂_b X^c` from order-1 jets.
pub(crate) fn lie_sym2_from_jets(x: &[Jet], t: &[Jet], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |a, b| {
        let mut s = 0.0;
        for c in 0..dim {
            s += x[c].value() * t[a * dim + b].partial(&[c]);
            s += t[c * dim + b].value() * x[c].partial(&[a]);
            s += t[a * dim + c].value() * x[c].partial(&[b]);
        }
        s
    })
}

/// Lie derivative of a symmetric 2-tensor field along `x`.
pub fn lie_derivative_metric(x: &VectorField, t: &MetricField, p: &Point) -> Result<DMatrix<f64>> {
    check_dims("lie_derivative", x.dim(), t.dim())?;
    let xj = x.jets(p, 1)?;
    let tj = t.jets(p, 1)?;
    Ok(lie_sym2_from_jets(&xj, &tj, t.dim()))
}

/// Lie derivative of a one-form along `x`: `X^c ∂_c α_a + α_c ∂_a X^c`.
pub fn lie_derivative_form(x: &VectorField, alpha: &OneFormField, p: &Point) -> Result<DVector<f64>> {
    check_dims("lie_derivative", x.dim(), alpha.dim())?;
    let n = x.dim();
    let xj = x.jets(p, 1)?;
    let aj = alpha.jets(p, 1)?;
    Ok(DVector::from_fn(n, |a, _| {
        (0..n)
            .map(|c| xj[c].value() * aj[a].partial(&[c]) + aj[c].value() * xj[c].partial(&[a]))
            .sum()
    }))
}

/// `(dα)_ab = ∂_a α_b − ∂_b α_a`.
pub fn exterior_derivative_1form(alpha: &OneFormField, p: &Point) -> Result<DMatrix<f64>> {
    let n = alpha.dim();
    let aj = alpha.jets(p, 1)?;
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let v = aj[b].partial(&[a]) - aj[a].partial(&[b]);
            out[(a, b)] = v;
            out[(b, a)] = -v;
        }
    }
    Ok(out)
}

/// Index lowering `v ↦ v♭ = g v`.
pub fn flat(g: &MetricField, p: &Point, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims("flat", g.dim(), v.len())?;
    Ok(MetricJet::at(g, p, 0)?.lower(v))
}

/// Index raising `α ↦ α♯ = g⁻¹ α`.
pub fn sharp(g: &MetricField, p: &Point, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    check_dims("sharp", g.dim(), alpha.len())?;
    Ok(MetricJet::at(g, p, 0)?.raise(alpha))
}

/// g-orthonormal frame whose first vector is a distinguished unit vector.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub base: Point,
    pub vectors: Vec<DVector<f64>>,
}

impl AdaptedFrame {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Frame vectors as matrix columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vectors)
    }

    pub fn gram(&self, mj: &MetricJet) -> DMatrix<f64> {
        let e = self.matrix();
        e.transpose() * &mj.g * e
    }
}

pub(crate) fn adapted_frame_with(mj: &MetricJet, p: &Point, u: &DVector<f64>) -> Result<AdaptedFrame> {
    let n = mj.dim();
    check_dims("adapted_frame", n, u.len())?;
    let uu = mj.inner(u, u);
    if (uu - 1.0).abs() > 1e-9 {
        return Err(GeometryError::Precondition(format!(
            "adapted frame needs a unit vector, g(u,u) = {uu}"
        )));
    }
    let mut vectors = vec![u.clone()];
    for k in 0..n {
        if vectors.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[k] = 1.0;
        // two projection passes keep the Gram matrix at rounding level
        for _ in 0..2 {
            for e in &vectors {
                let c = mj.inner(&w, e);
                w -= e * c;
            }
        }
        let norm = mj.norm(&w);
        if norm < FRAME_PIVOT_TOL {
            continue;
        }
        vectors.push(w / norm);
    }
    if vectors.len() < n {
        return Err(GeometryError::Frame(format!(
            "only {} independent directions found at {:?}",
            vectors.len(),
            p.coords
        )));
    }
    Ok(AdaptedFrame {
        base: p.clone(),
        vectors,
    })
}

/// Gram–Schmidt of `(u, ∂_0, …, ∂_{n−1})` under `g`, skipping candidates
/// whose residual norm falls below [`FRAME_PIVOT_TOL`].
pub fn adapted_frame(g: &MetricField, p: &Point, u: &DVector<f64>) -> Result<AdaptedFrame> {
    let mj = MetricJet::at(g, p, 0)?;
    adapted_frame_with(&mj, p, u)
}

/// `Δf = −g^{ab}(∂_a∂_b f − Γ^c_ab ∂_c f)` (note the sign).
pub fn laplace_beltrami(g: &MetricField, f: &ScalarField, p: &Point) -> Result<f64> {
    check_dims("laplace_beltrami", g.dim(), f.dim())?;
    let n = g.dim();
    let mj = MetricJet::at(g, p, 1)?;
    let gamma = mj.christoffel();
    let fj = f.jet(p, 2)?;
    let grad = fj.gradient();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            let hess = fj.partial(&[a, b]) - (0..n).map(|c| gamma.get(c, a, b) * grad[c]).sum::<f64>();
            s += mj.ginv[(a, b)] * hess;
        }
    }
    Ok(-s)
}

/// Covariant derivative `(∇_b X)^a = ∂_b X^a + Γ^a_bc X^c` as a matrix `[a, b]`.
pub fn covariant_derivative(g: &MetricField, x: &VectorField, p: &Point) -> Result<DMatrix<f64>> {
    check_dims("covariant_derivative", g.dim(), x.dim())?;
    let mj = MetricJet::at(g, p, 1)?;
    let xj = x.jets(p, 1)?;
    Ok(covariant_derivative_with(&mj, &xj))
}

pub(crate) fn covariant_derivative_with(mj: &MetricJet, xj: &[Jet]) -> DMatrix<f64> {
    let n = mj.dim();
    let gamma = mj.christoffel();
    DMatrix::from_fn(n, n, |a, b| {
        xj[a].partial(&[b]) + (0..n).map(|c| gamma.get(a, b, c) * xj[c].value()).sum::<f64>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ChartId;
    use approx::assert_relative_eq;

    const R2: ChartId = ChartId("R2");
    const H2: ChartId = ChartId("H2");

    fn half_plane() -> MetricField {
        MetricField::conformal("half_plane", H2, 2, |x| x[1].powi(-2))
            .with_curvature(-1.0)
            .with_domain(|x| x[1] > 0.0)
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let g = MetricField::flat(R2, 2);
        let gamma = christoffel(&g, &g.point(vec![0.3, -2.0])).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    assert_eq!(gamma.get(a, b, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn half_plane_christoffel_at_unit_height() {
        // For g = y⁻²δ: Γ^x_xy = −1/y, Γ^y_xx = 1/y, Γ^y_yy = −1/y.
        let g = half_plane();
        let gamma = christoffel(&g, &g.point(vec![0.0, 1.0])).unwrap();
        assert_relative_eq!(gamma.get(0, 0, 1), -1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.get(0, 1, 0), -1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.get(1, 0, 0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.get(1, 1, 1), -1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.get(0, 0, 0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.get(1, 0, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn half_plane_has_curvature_minus_one() {
        let g = half_plane();
        let curv = riemann_and_sectional(&g, &g.point(vec![0.4, 2.5])).unwrap();
        assert_relative_eq!(curv.sectional(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), -1.0, epsilon = 1e-12);
        assert!(curv.space_form_deviation(-1.0) < 1e-12);
        assert!(curv.riemann.symmetry_defect() < 1e-12);
    }

    #[test]
    fn singular_metric_is_reported() {
        let g = MetricField::conformal("degenerate", R2, 2, |x| &x[0] * &x[0]);
        assert!(matches!(
            christoffel(&g, &g.point(vec![0.0, 1.0])),
            Err(GeometryError::SingularMetric { .. })
        ));
    }

    #[test]
    fn lie_derivative_of_rotation_and_dilation() {
        let g = MetricField::flat(R2, 2);
        let rot = VectorField::new("rot", R2, 2, |x| vec![-&x[1], x[0].clone()]);
        let dil = VectorField::new("dil", R2, 2, |x| x.to_vec());
        let p = g.point(vec![0.7, -1.3]);
        let l = lie_derivative_metric(&rot, &g, &p).unwrap();
        assert!(l.iter().all(|v| v.abs() < 1e-15));
        let l = lie_derivative_metric(&dil, &g, &p).unwrap();
        assert_relative_eq!(l, DMatrix::identity(2, 2) * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn lie_derivative_rejects_dimension_mismatch() {
        let g = MetricField::flat(ChartId("R3"), 3);
        let rot = VectorField::new("rot", R2, 2, |x| vec![-&x[1], x[0].clone()]);
        assert!(matches!(
            lie_derivative_metric(&rot, &g, &Point::new(R2, vec![0.0, 0.0])),
            Err(GeometryError::Shape(_))
        ));
    }

    #[test]
    fn exterior_derivative_examples() {
        let p = Point::new(R2, vec![0.4, 1.1]);
        let x_dy = OneFormField::new("x dy", R2, 2, |x| vec![x[0].lift(0.0), x[0].clone()]);
        let d = exterior_derivative_1form(&x_dy, &p).unwrap();
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], -1.0);
        // d(x²y) = 2xy dx + x² dy
        let exact = OneFormField::new("d(x2y)", R2, 2, |x| vec![2.0 * &x[0] * &x[1], &x[0] * &x[0]]);
        let d = exterior_derivative_1form(&exact, &p).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn musical_isomorphisms() {
        let g = half_plane();
        let p = g.point(vec![0.0, 2.0]);
        let v = DVector::from_vec(vec![1.0, 0.0]);
        let vf = flat(&g, &p, &v).unwrap();
        assert_relative_eq!(vf[0], 0.25, epsilon = 1e-15);
        assert_eq!(vf[1], 0.0);
        let back = sharp(&g, &p, &vf).unwrap();
        assert_relative_eq!(back, v, epsilon = 1e-14);
    }

    #[test]
    fn adapted_frame_in_flat_r4() {
        let g = MetricField::flat(ChartId("R4"), 4);
        let mut u = DVector::zeros(4);
        u[3] = 1.0;
        let frame = adapted_frame(&g, &g.point(vec![0.0; 4]), &u).unwrap();
        assert_eq!(frame.vectors[0], u);
        for e in &frame.vectors {
            let nonzero: Vec<f64> = e.iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nonzero.len(), 1);
            assert_eq!(nonzero[0].abs(), 1.0);
        }
    }

    #[test]
    fn adapted_frame_rejects_non_unit() {
        let g = MetricField::flat(R2, 2);
        let u = DVector::from_vec(vec![2.0, 0.0]);
        assert!(matches!(
            adapted_frame(&g, &g.point(vec![0.0, 0.0]), &u),
            Err(GeometryError::Precondition(_))
        ));
    }

    #[test]
    fn adapted_frame_is_orthonormal_on_half_plane() {
        let g = half_plane();
        let p = g.point(vec![0.3, 0.7]);
        let u = DVector::from_vec(vec![0.6 * 0.7, 0.8 * 0.7]);
        let frame = adapted_frame(&g, &p, &u).unwrap();
        let mj = MetricJet::at(&g, &p, 0).unwrap();
        assert!((frame.gram(&mj) - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn laplacian_sign_convention() {
        let g = MetricField::flat(R2, 2);
        let p = g.point(vec![0.3, 0.9]);
        let harmonic = ScalarField::new("x2-y2", R2, 2, |x| &x[0] * &x[0] - &x[1] * &x[1]);
        assert!(laplace_beltrami(&g, &harmonic, &p).unwrap().abs() < 1e-15);
        let sq = ScalarField::new("x2", R2, 2, |x| &x[0] * &x[0]);
        assert_eq!(laplace_beltrami(&g, &sq, &p).unwrap(), -2.0);
    }

    #[test]
    fn laplacian_of_log_y_on_half_plane() {
        // Δ_analyst(log y) = y²·(−1/y²) = −1, so the returned value is +1.
        let g = half_plane();
        let f = ScalarField::new("log y", H2, 2, |x| x[1].ln()).with_domain(|x| x[1] > 0.0);
        for y in [0.5, 1.0, 3.0] {
            let v = laplace_beltrami(&g, &f, &g.point(vec![0.2, y])).unwrap();
            assert_relative_eq!(v, 1.0, epsilon = 1e-13);
        }
    }
}
