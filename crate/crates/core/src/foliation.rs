//! Corank-one fibrations through the covariant derivative of the vertical
//! unit field `u`.
//!
//! In an adapted frame `(u, e_1, …, e_n)` write `M_ij = ⟨∇_{e_j} u, e_i⟩`
//! and `v_i = ⟨∇_u u, e_i⟩`. Then
//!
//! * `r0 = −tr(M)/n`, so that the radial field `x/|x|` has `r0 = −1/|x|`;
//! * `a = (M − Mᵀ)/2` measures non-integrability of the horizontal space;
//! * `r_i = −v_i/(n−2)` is the scaled fiber mean curvature;
//! * `sym(M) + r0·Id` is the conformality defect, zero iff `L_u g′ = −2 r0 g′`.
//!
//! The closed form `ρ = r0 u♭ − (∇_u u)♭/(n−2)` satisfies `dr/r = ρ` for the
//! dilation `r` of any harmonic morphism with these fibers.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::fd;
use crate::field::{Field, MetricField, Point, SmoothMap, VectorField};
use crate::jet::{Jet, MAX_ORDER};
use crate::kernel::{self, adapted_frame_with, covariant_derivative_with, AdaptedFrame, MetricJet};
use crate::morphism::MapJet;

/// Default tolerance for the type classification.
pub const CLASSIFY_TOL: f64 = 1e-6;

/// Largest conformality defect accepted by [`tension_via_frames`].
pub const FRAME_TENSION_HWC_TOL: f64 = 1e-6;

/// Tolerance of the space-form check performed before classification.
pub const CURVATURE_CHECK_TOL: f64 = 1e-7;

/// Determinants of all `n × n` column minors of an `n × (n+1)` jet matrix,
/// `cofactor[a] = (−1)^a det(J with column a removed)`.
fn kernel_cofactors(rows: &[Vec<Jet>]) -> Vec<Jet> {
    let n = rows.len();
    let cols = n + 1;
    let zero = rows[0][0].lift(0.0);
    // dp[mask] = det of the first popcount(mask) rows restricted to `mask`
    let mut dp: BTreeMap<u32, Jet> = BTreeMap::new();
    dp.insert(0, rows[0][0].lift(1.0));
    for (k, row) in rows.iter().enumerate() {
        let mut next: BTreeMap<u32, Jet> = BTreeMap::new();
        for (mask, det) in &dp {
            for (c, entry) in row.iter().enumerate().take(cols) {
                if mask & (1 << c) != 0 {
                    continue;
                }
                let above = (mask >> (c + 1)).count_ones();
                let term = det * entry;
                let slot = next.entry(mask | (1 << c)).or_insert_with(|| zero.clone());
                if above % 2 == 0 {
                    *slot = &*slot + &term;
                } else {
                    *slot = &*slot - &term;
                }
            }
        }
        dp = next;
        debug_assert!(dp.keys().all(|m| m.count_ones() as usize == k + 1));
    }
    let full = (1u32 << cols) - 1;
    (0..cols)
        .map(|a| {
            let det = dp.get(&(full & !(1 << a))).cloned().unwrap_or_else(|| zero.clone());
            if a % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

/// The g-unit generator of `ker dφ` as a field with jets up to order 2.
/// The sign makes the first component of largest magnitude positive.
pub fn vertical_field(phi: &SmoothMap, g: &MetricField) -> Result<VectorField> {
    let m = phi.m_dim();
    let n = phi.n_dim();
    if m != n + 1 {
        return Err(GeometryError::Dimension(format!(
            "`{}` has corank {}, expected 1",
            phi.name(),
            m as i64 - n as i64
        )));
    }
    if g.chart() != phi.source_chart() || g.dim() != m {
        return Err(GeometryError::Shape(format!(
            "metric `{}` does not match the source of `{}`",
            g.name(),
            phi.name()
        )));
    }
    let map = phi.clone();
    let metric = g.clone();
    let chart = phi.source_chart();
    let field = Field::pointwise(format!("u[{}]", phi.name()), chart, m, m, move |x, order| {
        if order >= MAX_ORDER {
            return Err(GeometryError::Config(format!(
                "vertical field jets are available to order {}",
                MAX_ORDER - 1
            )));
        }
        let p = Point::new(chart, x.to_vec());
        let jets = map.jets(&p, order + 1)?;
        let rows: Vec<Vec<Jet>> = jets.iter().map(|f| (0..m).map(|a| f.derivative(a)).collect()).collect();
        let v = kernel_cofactors(&rows);
        let scale = rows
            .iter()
            .flatten()
            .map(|j| j.value().abs())
            .fold(0.0_f64, f64::max)
            .max(1.0)
            .powi(n as i32);
        let euclid = v.iter().map(|j| j.value() * j.value()).sum::<f64>().sqrt();
        if euclid <= 1e-12 * scale {
            return Err(GeometryError::Submersion { coords: x.to_vec() });
        }
        let gj = metric.jets(&p, order)?;
        let mut norm_sq = v[0].lift(0.0);
        for a in 0..m {
            for b in 0..m {
                norm_sq = norm_sq + &gj[a * m + b] * &v[a] * &v[b];
            }
        }
        let mut pivot = 0;
        for a in 1..m {
            if v[a].value().abs() > v[pivot].value().abs() {
                pivot = a;
            }
        }
        let mut inv = norm_sq.sqrt().recip();
        if v[pivot].value() < 0.0 {
            inv = -inv;
        }
        Ok(v.iter().map(|c| c * &inv).collect())
    });
    VectorField::from_field(field)
}

/// Value of [`vertical_field`] at `p`.
pub fn vertical_unit_field(phi: &SmoothMap, g: &MetricField, p: &Point) -> Result<DVector<f64>> {
    vertical_field(phi, g)?.at(p)
}

/// Invariants of the covariant derivative of a unit field in an adapted frame.
#[derive(Clone, Debug)]
pub struct FrameInvariants {
    pub r0: f64,
    pub r: DVector<f64>,
    pub a: DMatrix<f64>,
    pub conformality_defect: DMatrix<f64>,
    /// `∇_u u` in coordinates.
    pub nabla_u_u: DVector<f64>,
    /// `u` at the base point, in coordinates.
    pub u: DVector<f64>,
    pub frame: AdaptedFrame,
}

fn fiber_codim(dim: usize) -> Result<usize> {
    let n = dim - 1;
    if n < 3 {
        return Err(GeometryError::Dimension(format!(
            "frame invariants need n ≥ 3 horizontal directions, got n = {n} (the factor n−2 degenerates)"
        )));
    }
    Ok(n)
}

fn check_unit_field(u: &VectorField, g: &MetricField) -> Result<()> {
    if u.chart() != g.chart() || u.dim() != g.dim() {
        return Err(GeometryError::Shape(format!(
            "field `{}` does not live on the chart of `{}`",
            u.name(),
            g.name()
        )));
    }
    Ok(())
}

/// `∇u` at a point with the metric data used to build the frame.
struct UnitJet {
    mj: MetricJet,
    u: DVector<f64>,
    /// `(∇_b u)^a` at `[a, b]`.
    nabla: DMatrix<f64>,
}

impl UnitJet {
    fn at(u: &VectorField, g: &MetricField, p: &Point) -> Result<UnitJet> {
        check_unit_field(u, g)?;
        let mj = MetricJet::at(g, p, 1)?;
        let uj = u.jets(p, 1)?;
        let nabla = covariant_derivative_with(&mj, &uj);
        let uval = DVector::from_iterator(uj.len(), uj.iter().map(Jet::value));
        let uu = mj.inner(&uval, &uval);
        if (uu - 1.0).abs() > 1e-9 {
            return Err(GeometryError::Precondition(format!(
                "`{}` is not unit at {:?}: g(u,u) = {uu}",
                u.name(),
                p.coords
            )));
        }
        Ok(UnitJet { mj, u: uval, nabla })
    }

    fn nabla_u_u(&self) -> DVector<f64> {
        &self.nabla * &self.u
    }
}

pub fn frame_invariants(u: &VectorField, g: &MetricField, p: &Point) -> Result<FrameInvariants> {
    let n = fiber_codim(g.dim())?;
    let uj = UnitJet::at(u, g, p)?;
    let frame = adapted_frame_with(&uj.mj, p, &uj.u)?;
    let e = frame.matrix();
    // C[i, j] = ⟨∇_{e_j} u, e_i⟩ over the full frame
    let c = e.transpose() * &uj.mj.g * &uj.nabla * &e;
    let m = c.view((1, 1), (n, n)).into_owned();
    let v = c.view((1, 0), (n, 1)).column(0).into_owned();
    let r0 = -m.trace() / n as f64;
    let mut a = DMatrix::zeros(n, n);
    let mut defect = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i < j {
                let w = 0.5 * (m[(i, j)] - m[(j, i)]);
                a[(i, j)] = w;
                a[(j, i)] = -w;
            }
            defect[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
        defect[(i, i)] += r0;
    }
    let r = v / -((n - 2) as f64);
    Ok(FrameInvariants {
        r0,
        r,
        a,
        conformality_defect: defect,
        nabla_u_u: uj.nabla_u_u(),
        u: uj.u,
        frame,
    })
}

/// Frobenius norm of the conformality defect.
pub fn conformality_residual(u: &VectorField, g: &MetricField, p: &Point) -> Result<f64> {
    Ok(frame_invariants(u, g, p)?.conformality_defect.norm())
}

/// The same quantity from `½‖Eᵀ(L_u g′ + 2 r0 g′)E‖` with `g′ = g − u♭⊗u♭`,
/// `r0 = −g^{ab}(L_u g′)_ab / 2n` and no frame derivatives involved.
pub fn conformality_residual_lie(u: &VectorField, g: &MetricField, p: &Point) -> Result<f64> {
    let n = fiber_codim(g.dim())?;
    check_unit_field(u, g)?;
    let dim = g.dim();
    let uj = u.jets(p, 1)?;
    let gj = g.jets(p, 1)?;
    let flat: Vec<Jet> = (0..dim)
        .map(|a| {
            let mut s = &gj[a * dim] * &uj[0];
            for b in 1..dim {
                s = s + &gj[a * dim + b] * &uj[b];
            }
            s
        })
        .collect();
    let gprime: Vec<Jet> = (0..dim * dim)
        .map(|k| &gj[k] - &flat[k / dim] * &flat[k % dim])
        .collect();
    let lie = kernel::lie_sym2_from_jets(&uj, &gprime, dim);
    let mj = MetricJet::from_jets(g.name(), dim, &gj, &p.coords)?;
    let r0 = -(mj.ginv.component_mul(&lie)).sum() / (2 * n) as f64;
    let gp = DMatrix::from_fn(dim, dim, |a, b| gprime[a * dim + b].value());
    let uval = DVector::from_iterator(dim, uj.iter().map(Jet::value));
    let e = adapted_frame_with(&mj, p, &uval)?.matrix();
    Ok(0.5 * (e.transpose() * (lie + gp * (2.0 * r0)) * e).norm())
}

/// `ρ = r0 u♭ − (∇_u u)♭/(n−2)` at a point.
pub fn rho_at(u: &VectorField, g: &MetricField, p: &Point) -> Result<DVector<f64>> {
    let n = fiber_codim(g.dim())?;
    let fi = frame_invariants(u, g, p)?;
    let mj = MetricJet::at(g, p, 0)?;
    Ok(mj.lower(&fi.u) * fi.r0 - mj.lower(&fi.nabla_u_u) / (n - 2) as f64)
}

#[derive(Clone, Debug)]
pub struct RhoClosedness {
    pub rho: DVector<f64>,
    /// `dρ` by central differences.
    pub d_rho: DMatrix<f64>,
    /// Frobenius norm of `dρ`.
    pub residual: f64,
}

pub fn rho_and_closedness(u: &VectorField, g: &MetricField, p: &Point) -> Result<RhoClosedness> {
    let rho = rho_at(u, g, p)?;
    let d = fd::exterior_derivative(&p.coords, |x| {
        Ok(rho_at(u, g, &p.with_coords(x.to_vec()))?.iter().copied().collect())
    })?;
    let dim = g.dim();
    let d_rho = DMatrix::from_fn(dim, dim, |a, b| d[a][b]);
    let residual = d_rho.norm();
    Ok(RhoClosedness { rho, d_rho, residual })
}

/// Outcome of the umbilic / Killing dichotomy on a space form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FibrationType {
    /// Geodesic fibers orthogonal to totally umbilic hypersurfaces.
    Type1,
    /// Fibers are orbits of a Killing field.
    Type2,
    Both,
    Neither,
}

impl FibrationType {
    pub fn from_residuals(type1: f64, type2: f64, tol: f64) -> FibrationType {
        match (type1 < tol, type2 < tol) {
            (true, true) => FibrationType::Both,
            (true, false) => FibrationType::Type1,
            (false, true) => FibrationType::Type2,
            (false, false) => FibrationType::Neither,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FibrationType::Type1 => "Type1",
            FibrationType::Type2 => "Type2",
            FibrationType::Both => "Both",
            FibrationType::Neither => "Neither",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeReport {
    /// `max(|r_i|, |a_ij|, ‖dr0 − (r0² + K) u♭‖)`.
    pub type1_residual: f64,
    /// `max(|r0|, ‖dρ‖)`.
    pub type2_residual: f64,
    /// The last term of the type-1 residual alone.
    pub umbilic_residual: f64,
    pub r0: f64,
    pub verdict: FibrationType,
}

/// `r0` at `x`, with the orientation of `u` aligned to `reference`.
fn aligned_r0(u: &VectorField, g: &MetricField, p: &Point, reference: &DVector<f64>) -> Result<f64> {
    let fi = frame_invariants(u, g, p)?;
    Ok(if fi.u.dot(reference) < 0.0 { -fi.r0 } else { fi.r0 })
}

pub fn classify_type(u: &VectorField, g: &MetricField, k: f64, p: &Point) -> Result<TypeReport> {
    classify_type_with_tol(u, g, k, p, CLASSIFY_TOL)
}

pub fn classify_type_with_tol(u: &VectorField, g: &MetricField, k: f64, p: &Point, tol: f64) -> Result<TypeReport> {
    let deviation = kernel::riemann_and_sectional(g, p)?.space_form_deviation(k);
    if !(deviation < CURVATURE_CHECK_TOL) {
        return Err(GeometryError::Precondition(format!(
            "`{}` does not have constant curvature {k} at {:?} (deviation {deviation:e})",
            g.name(),
            p.coords
        )));
    }
    let fi = frame_invariants(u, g, p)?;
    let mj = MetricJet::at(g, p, 0)?;
    let dr0 = fd::gradient(&p.coords, |x| aligned_r0(u, g, &p.with_coords(x.to_vec()), &fi.u))?;
    let omega0 = mj.lower(&fi.u);
    let c = DVector::from_vec(dr0) - omega0 * (fi.r0 * fi.r0 + k);
    let umbilic = c.dot(&mj.raise(&c)).max(0.0).sqrt();
    let type1 = fi.r.amax().max(fi.a.amax()).max(umbilic);
    let closed = rho_and_closedness(u, g, p)?.residual;
    let type2 = fi.r0.abs().max(closed);
    Ok(TypeReport {
        type1_residual: type1,
        type2_residual: type2,
        umbilic_residual: umbilic,
        r0: fi.r0,
        verdict: FibrationType::from_residuals(type1, type2, tol),
    })
}

/// Frobenius norm of `L_X g`.
pub fn killing_residual(x: &VectorField, g: &MetricField, p: &Point) -> Result<f64> {
    Ok(kernel::lie_derivative_metric(x, g, p)?.norm())
}

/// g-norm of the horizontal part of `∇_u u`; zero iff the fibers are minimal.
pub fn fiber_minimality_residual(u: &VectorField, g: &MetricField, p: &Point) -> Result<f64> {
    let uj = UnitJet::at(u, g, p)?;
    let w = uj.nabla_u_u();
    let horizontal = &w - &uj.u * uj.mj.inner(&w, &uj.u);
    Ok(uj.mj.norm(&horizontal))
}

/// Horizontal frame components of `(n−2)∇ log r + ∇_u u`, given `d log r`.
/// They vanish iff a horizontally conformal map with dilation `r` and these
/// fibers is harmonic.
pub fn frame_harmonicity_components(
    u: &VectorField,
    g: &MetricField,
    p: &Point,
    dlog_r: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = fiber_codim(g.dim())?;
    let uj = UnitJet::at(u, g, p)?;
    let frame = adapted_frame_with(&uj.mj, p, &uj.u)?;
    let w = uj.nabla_u_u();
    Ok(DVector::from_fn(n, |i, _| {
        let e = &frame.vectors[i + 1];
        (n - 2) as f64 * dlog_r.dot(e) + uj.mj.inner(&w, e)
    }))
}

/// Tension field of a horizontally conformal submersion from its dilation
/// and fiber geometry: `τ = −dφ((n−2)∇^H log r + ∇_u u)`, with `d log r`
/// by central differences.
pub fn tension_via_frames(phi: &SmoothMap, g: &MetricField, h: &MetricField, p: &Point) -> Result<DVector<f64>> {
    fiber_codim(g.dim())?;
    let base = MapJet::new(phi, g, h, p, 1)?;
    let hwc = base.hwc();
    if !(hwc.defect.norm() < FRAME_TENSION_HWC_TOL) {
        return Err(GeometryError::Precondition(format!(
            "`{}` is not horizontally conformal at {:?} (defect {:e})",
            phi.name(),
            p.coords,
            hwc.defect.norm()
        )));
    }
    if hwc.dilation_sq < crate::morphism::DEGENERATE_DILATION {
        return Err(GeometryError::Submersion {
            coords: p.coords.clone(),
        });
    }
    let u = vertical_field(phi, g)?;
    let dlog_r = fd::gradient(&p.coords, |x| {
        let mj = MapJet::new(phi, g, h, &p.with_coords(x.to_vec()), 1)?;
        Ok(0.5 * (mj.energy_density() / mj.n_dim() as f64).ln())
    })?;
    let c = frame_harmonicity_components(&u, g, p, &DVector::from_vec(dlog_r))?;
    let mj = MetricJet::at(g, p, 0)?;
    let uval = u.at(p)?;
    let frame = adapted_frame_with(&mj, p, &uval)?;
    let mut w = DVector::zeros(g.dim());
    for (i, ci) in c.iter().enumerate() {
        w += &frame.vectors[i + 1] * *ci;
    }
    Ok(-(&base.jacobian * w))
}

/// Torsion tensor of the prolonged system, `S_ijk` for `i, j, k < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Torsion {
    n: usize,
    data: Vec<f64>,
}

impl Torsion {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(n−2) S_ijk = (n−1)(p_j a_ki − p_k a_ji − 2 p_i a_jk) − 3(δ_ij p_l a_kl − δ_ik p_l a_jl)`.
pub fn torsion_s(p: &[f64], a: &DMatrix<f64>, n: usize) -> Result<Torsion> {
    if n < 3 {
        return Err(GeometryError::Dimension(format!("torsion needs n ≥ 3, got {n}")));
    }
    if p.len() != n || a.nrows() != n || a.ncols() != n {
        return Err(GeometryError::Shape(format!(
            "torsion inputs must have length {n} and shape {n}×{n}"
        )));
    }
    let scale = a.amax().max(1.0);
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] + a[(j, i)]).abs() > 1e-12 * scale {
                return Err(GeometryError::Precondition(format!(
                    "a is not antisymmetric: a[{i},{j}] + a[{j},{i}] = {:e}",
                    a[(i, j)] + a[(j, i)]
                )));
            }
        }
    }
    // q_k = p_l a_kl
    let q: Vec<f64> = (0..n).map(|k| (0..n).map(|l| p[l] * a[(k, l)]).sum()).collect();
    let c1 = (n - 1) as f64;
    let c0 = (n - 2) as f64;
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = c1 * (p[j] * a[(k, i)] - p[k] * a[(j, i)] - 2.0 * p[i] * a[(j, k)]);
                if i == j {
                    s -= 3.0 * q[k];
                }
                if i == k {
                    s += 3.0 * q[j];
                }
                data[(i * n + j) * n + k] = s / c0;
            }
        }
    }
    Ok(Torsion { n, data })
}

/// `p_i = s_i − (n−2) r0 r_i`.
pub fn torsion_p_from_prolongation(s: &[f64], r0: f64, r: &[f64]) -> Vec<f64> {
    let n = s.len();
    s.iter()
        .zip(r)
        .map(|(si, ri)| si - (n as f64 - 2.0) * r0 * ri)
        .collect()
}

/// Nodes and weights of the `k`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

const SCALE_PANELS: usize = 8;
const SCALE_NODES: usize = 8;

/// `r(p) = exp ∫₀¹ ρ(base + t(p − base))·(p − base) dt`, normalized so that
/// `r(base) = 1`, by 64-node composite Gauss–Legendre quadrature.
pub fn reconstruct_scale(u: &VectorField, g: &MetricField, base: &Point, p: &Point) -> Result<f64> {
    if base.chart != p.chart || base.dim() != p.dim() {
        return Err(GeometryError::Shape(
            "base and target point lie on different charts".into(),
        ));
    }
    let dir: Vec<f64> = p.coords.iter().zip(&base.coords).map(|(a, b)| a - b).collect();
    let at = |t: f64| base.with_coords(base.coords.iter().zip(&dir).map(|(b, d)| b + t * d).collect());
    for t in [0.0, 0.5, 1.0] {
        let closed = rho_and_closedness(u, g, &at(t))?.residual;
        if !(closed < 1e-6) {
            return Err(GeometryError::Precondition(format!(
                "ρ is not closed along the segment (‖dρ‖ = {closed:e} at t = {t})"
            )));
        }
    }
    let rule = gauss_legendre(SCALE_NODES);
    let width = 1.0 / SCALE_PANELS as f64;
    let mut integral = 0.0;
    for panel in 0..SCALE_PANELS {
        let mid = (panel as f64 + 0.5) * width;
        for (x, w) in &rule {
            let t = mid + 0.5 * width * x;
            let rho = rho_at(u, g, &at(t))?;
            let along: f64 = rho.iter().zip(&dir).map(|(r, d)| r * d).sum();
            integral += 0.5 * width * w * along;
        }
    }
    Ok(integral.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ChartId;
    use approx::assert_relative_eq;

    const R3: ChartId = ChartId("R3");
    const R4: ChartId = ChartId("R4");

    fn flat4() -> MetricField {
        MetricField::flat(R4, 4)
    }

    fn parallel() -> VectorField {
        VectorField::new("e4", R4, 4, |x| {
            let z = x[0].lift(0.0);
            vec![z.clone(), z.clone(), z, x[0].lift(1.0)]
        })
    }

    fn radial() -> VectorField {
        VectorField::new("radial", R4, 4, |x| {
            let r = (&x[0] * &x[0] + &x[1] * &x[1] + &x[2] * &x[2] + &x[3] * &x[3]).sqrt();
            x.iter().map(|c| c / &r).collect()
        })
    }

    #[test]
    fn cofactors_span_the_kernel() {
        let x = Jet::variables(&[0.3, -0.2, 0.5, 0.1], 1);
        let rows = vec![
            vec![x[0].clone(), x[1].clone(), x[2].lift(2.0), x[3].lift(0.0)],
            vec![x[0].lift(1.0), x[1].lift(0.0), x[2].clone(), x[3].lift(1.0)],
            vec![x[0].lift(0.0), x[1].lift(3.0), x[2].lift(1.0), &x[3] * &x[0]],
        ];
        let v = kernel_cofactors(&rows);
        for row in &rows {
            let s: f64 = row.iter().zip(&v).map(|(a, b)| a.value() * b.value()).sum();
            assert!(s.abs() < 1e-14);
        }
    }

    #[test]
    fn projection_kernel_is_last_axis() {
        let phi = SmoothMap::new("proj", R4, R3, 4, 3, |x| x[..3].to_vec());
        let u = vertical_unit_field(&phi, &flat4(), &Point::new(R4, vec![0.2, 0.1, -0.3, 0.4])).unwrap();
        assert_eq!(u.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn singular_map_reports_submersion_error() {
        let phi = SmoothMap::new("fold", R4, R3, 4, 3, |x| {
            vec![x[0].clone(), x[1].clone(), &x[2] * &x[2]]
        });
        assert!(matches!(
            vertical_unit_field(&phi, &flat4(), &Point::new(R4, vec![0.2, 0.1, 0.0, 0.4])),
            Err(GeometryError::Submersion { .. })
        ));
    }

    #[test]
    fn parallel_field_has_trivial_invariants() {
        let p = Point::new(R4, vec![0.1, 0.7, -0.4, 1.2]);
        let fi = frame_invariants(&parallel(), &flat4(), &p).unwrap();
        assert_eq!(fi.r0, 0.0);
        assert_eq!(fi.r.amax(), 0.0);
        assert_eq!(fi.a.amax(), 0.0);
        assert_eq!(fi.conformality_defect.amax(), 0.0);
        let rho = rho_and_closedness(&parallel(), &flat4(), &p).unwrap();
        assert_eq!(rho.rho.amax(), 0.0);
        assert_eq!(rho.residual, 0.0);
        assert_eq!(
            reconstruct_scale(&parallel(), &flat4(), &p.with_coords(vec![0.0; 4]), &p).unwrap(),
            1.0
        );
    }

    #[test]
    fn radial_field_invariants() {
        let p = Point::new(R4, vec![0.6, -0.8, 1.0, 0.5]);
        let len = p.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        let fi = frame_invariants(&radial(), &flat4(), &p).unwrap();
        assert_relative_eq!(fi.r0, -1.0 / len, epsilon = 1e-14);
        assert!(fi.r.amax() < 1e-14);
        assert!(fi.a.amax() < 1e-14);
        assert!(fi.conformality_defect.amax() < 1e-14);
        assert!(fi.conformality_defect.trace().abs() < 1e-12);
    }

    #[test]
    fn radial_rho_is_minus_dlog_norm() {
        let p = Point::new(R4, vec![0.6, -0.8, 1.0, 0.5]);
        let len2: f64 = p.coords.iter().map(|c| c * c).sum();
        let res = rho_and_closedness(&radial(), &flat4(), &p).unwrap();
        for a in 0..4 {
            assert_relative_eq!(res.rho[a], -p.coords[a] / len2, epsilon = 1e-14);
        }
        assert!(res.residual < 1e-6);
    }

    #[test]
    fn radial_scale_is_inverse_norm() {
        let base = Point::new(R4, vec![0.0, 1.0, 0.0, 0.0]);
        let p = Point::new(R4, vec![1.5, 0.5, -0.7, 0.2]);
        let r = reconstruct_scale(&radial(), &flat4(), &base, &p).unwrap();
        let len = p.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert_relative_eq!(r, 1.0 / len, epsilon = 1e-8);
    }

    #[test]
    fn two_routes_for_conformality_agree() {
        let p = Point::new(R4, vec![0.6, -0.8, 1.0, 0.5]);
        let shear = VectorField::new("shear", R4, 4, |x| {
            let n = (1.0 + &x[0] * &x[0]).sqrt();
            vec![x[0].lift(0.0), x[0].lift(0.0), &x[0] / &n, n.recip()]
        });
        let frame = conformality_residual(&shear, &flat4(), &p).unwrap();
        let lie = conformality_residual_lie(&shear, &flat4(), &p).unwrap();
        assert!(frame > 1e-2);
        assert!((frame - lie).abs() < 1e-12);
        assert!(conformality_residual_lie(&radial(), &flat4(), &p).unwrap() < 1e-14);
    }

    #[test]
    fn small_corank_one_is_rejected() {
        let g = MetricField::flat(R3, 3);
        let u = VectorField::new("e3", R3, 3, |x| vec![x[0].lift(0.0), x[0].lift(0.0), x[0].lift(1.0)]);
        assert!(matches!(
            frame_invariants(&u, &g, &g.point(vec![0.0; 3])),
            Err(GeometryError::Dimension(_))
        ));
    }

    #[test]
    fn circle_field_curvature() {
        let g = MetricField::flat(R3, 3);
        let circles = VectorField::new("circles", R3, 3, |x| {
            let r = (&x[0] * &x[0] + &x[1] * &x[1]).sqrt();
            vec![-&x[1] / &r, &x[0] / &r, x[0].lift(0.0)]
        });
        let res = fiber_minimality_residual(&circles, &g, &g.point(vec![0.0, 2.0, 0.3])).unwrap();
        assert_relative_eq!(res, 0.5, epsilon = 1e-14);
        let res = fiber_minimality_residual(&radial(), &flat4(), &Point::new(R4, vec![1.0, 2.0, 0.0, 0.0])).unwrap();
        assert!(res < 1e-15);
    }

    #[test]
    fn torsion_reference_value() {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = -1.0;
        let s = torsion_s(&[1.0, 0.0, 0.0], &a, 3).unwrap();
        assert_eq!(s.get(0, 0, 1), -3.0);
        assert_eq!(s.get(0, 1, 0), 3.0);
    }

    #[test]
    fn torsion_rejects_symmetric_input() {
        let a = DMatrix::identity(3, 3);
        assert!(matches!(
            torsion_s(&[1.0, 0.0, 0.0], &a, 3),
            Err(GeometryError::Precondition(_))
        ));
    }

    #[test]
    fn prolongation_helper() {
        assert_eq!(
            torsion_p_from_prolongation(&[1.0, 2.0, 3.0], 0.5, &[2.0, 0.0, -2.0]),
            vec![0.0, 2.0, 4.0]
        );
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let wsum: f64 = rule.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
        let x14: f64 = rule.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(x14, 2.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn verdict_table() {
        assert_eq!(FibrationType::from_residuals(0.0, 0.0, 1e-6), FibrationType::Both);
        assert_eq!(FibrationType::from_residuals(1.0, 0.0, 1e-6), FibrationType::Type2);
        assert_eq!(FibrationType::from_residuals(0.0, 1.0, 1e-6), FibrationType::Type1);
        assert_eq!(FibrationType::from_residuals(1.0, 1.0, 1e-6), FibrationType::Neither);
    }
}
