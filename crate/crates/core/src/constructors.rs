//! Metrics for which a given projection is a harmonic morphism.
//!
//! * Corank one: on coordinates `(x_1, …, x_n, t)`,
//!   `g = r⁻² h + r^{2n−4} (dt + ψ0)²` makes `(x, t) ↦ x` a harmonic
//!   morphism onto `(N, h)` with dilation `r`, for any positive `r`.
//! * Corank `p`: on `(x_1, …, x_n, y_1, …, y_p)`,
//!   `g = R^{−p} h + R^{n−2} G_αβ θ_α θ_β` with `θ_α = dy_α + P_αi dx_i`,
//!   provided `det G = 1` and `Σ_α ∂P_αi/∂y_α = 0`.
//! * Killing quotients: for a Killing field `X` the orbit projection has
//!   dilation `r = |X|^{1/(n−2)}` and pulls `h` back to `r² g′`, where
//!   `g′ = g − (X♭/|X|)²`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeometryError, Result};
use crate::field::{ChartId, Field, MetricField, OneFormField, Point, ScalarField, SmoothMap, VectorField};
use crate::foliation::{frame_harmonicity_components, killing_residual};
use crate::jet::Jet;
use crate::kernel::MetricJet;
use crate::region::Region;

/// Tolerance on `det G − 1`.
pub const FIBER_DET_TOL: f64 = 1e-10;
/// Tolerance on `Σ_α ∂P_αi/∂y_α`.
pub const DIVERGENCE_TOL: f64 = 1e-8;
/// `|X|` below this is treated as a zero of the Killing field.
pub const KILLING_ZERO_TOL: f64 = 1e-10;
/// Largest `‖L_X g‖` accepted as Killing.
pub const KILLING_TOL: f64 = 1e-8;

/// Grid resolution used when validating data on a region.
const VALIDATION_GRID: usize = 3;

fn nan_like(x: &[Jet], len: usize) -> Vec<Jet> {
    vec![x[0].lift(f64::NAN); len]
}

/// Data of the corank-one normal form.
#[derive(Clone, Debug)]
pub struct NormalFormData {
    pub n: usize,
    /// Metric on the base chart (dimension `n`).
    pub h: MetricField,
    /// Connection potential on the base chart, `ψ = dt + ψ0`.
    pub psi0: OneFormField,
    /// Dilation, a positive function on the total chart.
    pub r_fn: ScalarField,
    pub total_chart: ChartId,
    /// Region of the total chart on which the data is used.
    pub region: Region,
}

impl NormalFormData {
    fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 3 {
            return Err(GeometryError::Dimension(format!("normal form needs n ≥ 3, got {n}")));
        }
        if self.h.dim() != n || self.psi0.dim() != n || self.psi0.chart() != self.h.chart() {
            return Err(GeometryError::Shape(
                "h and ψ0 must live on the same n-dimensional base chart".into(),
            ));
        }
        if self.r_fn.dim() != n + 1 || self.r_fn.field().chart() != self.total_chart || self.region.dim() != n + 1 {
            return Err(GeometryError::Shape(
                "r and the region must live on the (n+1)-dimensional total chart".into(),
            ));
        }
        for x in self.region.grid(VALIDATION_GRID, 0.0)? {
            let r = self.r_fn.at(&Point::new(self.total_chart, x.clone()))?;
            if !(r > 0.0) {
                return Err(GeometryError::Precondition(format!("r = {r} is not positive at {x:?}")));
            }
        }
        Ok(())
    }
}

/// `g = r⁻² h + r^{2n−4}(dt + ψ0)²` and the projection `(x, t) ↦ x`.
pub fn build_metric_corank1(d: &NormalFormData) -> Result<(MetricField, SmoothMap)> {
    d.validate()?;
    let n = d.n;
    let dim = n + 1;
    let (h, psi0, r_fn) = (d.h.clone(), d.psi0.clone(), d.r_fn.clone());
    let region = d.region.clone();
    let g = MetricField::new(
        format!("normal_form[{}]", d.total_chart),
        d.total_chart,
        dim,
        move |x| {
            let base = &x[..n];
            let (Ok(hm), Ok(psi), Ok(r)) = (h.compose(base), psi0.compose(base), r_fn.compose(x)) else {
                return nan_like(x, dim * dim);
            };
            let inv_r2 = r.powi(-2);
            let fiber = r.powi(2 * n as i32 - 4);
            let mut out = Vec::with_capacity(dim * dim);
            for a in 0..dim {
                for b in 0..dim {
                    out.push(match (a < n, b < n) {
                        (true, true) => &inv_r2 * &hm[a * n + b] + &fiber * &psi[a] * &psi[b],
                        (true, false) => &fiber * &psi[a],
                        (false, true) => &fiber * &psi[b],
                        (false, false) => fiber.clone(),
                    });
                }
            }
            out
        },
    )
    .with_domain(move |x| region.in_box(x, 0.0));
    let region = d.region.clone();
    let phi = SmoothMap::new(
        format!("projection[{}]", d.total_chart),
        d.total_chart,
        d.h.chart(),
        dim,
        n,
        move |x| x[..n].to_vec(),
    )
    .with_domain(move |x, margin| region.contains(x, margin));
    Ok((g, phi))
}

fn draw(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-0.3..=0.3)
}

/// Seeded instance: `h = δ + 0.1·(trig)`, polynomial `ψ0`, `r = exp(0.2·poly)`
/// on `[−1, 1]^{n+1}`, all coefficients uniform in `[−0.3, 0.3]`.
pub fn random_normal_form(n: usize, seed: u64) -> Result<NormalFormData> {
    if n < 3 {
        return Err(GeometryError::Dimension(format!("normal form needs n ≥ 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = ChartId::intern(&format!("N{n}"));
    let total = ChartId::intern(&format!("N{n}xR"));

    let mut amp = vec![0.0; n * n];
    let mut phase = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            amp[i * n + j] = a;
            amp[j * n + i] = a;
            phase[i * n + j] = b;
            phase[j * n + i] = b;
        }
    }
    let h = MetricField::new(format!("h_random{seed}"), base, n, move |x| {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let wave = (&x[i] + &x[j] + phase[i * n + j]).sin() * (0.1 * amp[i * n + j]);
                out.push(if i == j { wave + 1.0 } else { wave });
            }
        }
        out
    });

    let c: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
    let lin: Vec<f64> = (0..n * n).map(|_| draw(&mut rng)).collect();
    let quad: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
    let psi0 = OneFormField::new(format!("psi0_random{seed}"), base, n, move |x| {
        (0..n)
            .map(|i| {
                let mut s = &x[(i + 1) % n] * &x[i] * quad[i] + c[i];
                for j in 0..n {
                    s = s + &x[j] * lin[i * n + j];
                }
                s
            })
            .collect()
    });

    let e0 = draw(&mut rng);
    let e1: Vec<f64> = (0..=n).map(|_| draw(&mut rng)).collect();
    let e2: Vec<f64> = (0..=n).map(|_| draw(&mut rng)).collect();
    let r_fn = ScalarField::new(format!("r_random{seed}"), total, n + 1, move |x| {
        let mut s = x[0].lift(e0);
        for a in 0..=n {
            s = s + &x[a] * e1[a] + &x[a] * &x[a] * e2[a];
        }
        (s * 0.2).exp()
    });

    Ok(NormalFormData {
        n,
        h,
        psi0,
        r_fn,
        total_chart: total,
        region: Region::cube(n + 1, 1.0),
    })
}

/// The upper half-space `y⁻²(dx² + dy²)` written in normal form: `h` flat,
/// `ψ0 = 0`, `t = −y^{2−n}/(n−2)` and `r(t) = (−(n−2)t)^{−1/(n−2)} = y`.
pub fn halfspace_normal_form(n: usize) -> Result<NormalFormData> {
    if n < 3 {
        return Err(GeometryError::Dimension(format!("normal form needs n ≥ 3, got {n}")));
    }
    let base = ChartId::intern(&format!("R{n}"));
    let total = ChartId::intern(&format!("H{}_t", n + 1));
    let k = (n - 2) as f64;
    let h = MetricField::flat(base, n);
    let psi0 = OneFormField::new("zero", base, n, move |x| vec![x[0].lift(0.0); n]);
    let r_fn = ScalarField::new("halfspace_height", total, n + 1, move |x| (&x[n] * -k).powf(-1.0 / k))
        .with_domain(move |x| x[n] < 0.0);
    let t_of = |y: f64| -y.powf(2.0 - n as f64) / k;
    let mut lo = vec![-2.0; n + 1];
    let mut hi = vec![2.0; n + 1];
    lo[n] = t_of(0.25);
    hi[n] = t_of(3.0);
    Ok(NormalFormData {
        n,
        h,
        psi0,
        r_fn,
        total_chart: total,
        region: Region::new(lo, hi),
    })
}

/// Data of the corank-`p` normal form.
#[derive(Clone, Debug)]
pub struct CorankPData {
    pub n: usize,
    pub p: usize,
    /// Metric on the `n`-dimensional base chart.
    pub h: MetricField,
    /// Positive function on the total chart.
    pub big_r: ScalarField,
    /// `P_αi`, `(n+p) → p·n` values in row-major `[α][i]` order.
    pub connection: Field,
    /// `G_αβ`, `(n+p) → p·p` values.
    pub fiber_metric: Field,
    pub total_chart: ChartId,
    pub region: Region,
}

impl CorankPData {
    /// The corank-one data with `R = r²`, `P = ψ0` and `G = 1`.
    pub fn from_normal_form(d: &NormalFormData) -> CorankPData {
        let n = d.n;
        let psi0 = d.psi0.clone();
        let r_fn = d.r_fn.clone();
        let big_r = ScalarField::new(
            format!("{}^2", d.r_fn.name()),
            d.total_chart,
            n + 1,
            move |x| match r_fn.compose(x) {
                Ok(r) => &r * &r,
                Err(_) => x[0].lift(f64::NAN),
            },
        );
        let connection = Field::composable("psi0", d.total_chart, n + 1, n, move |x| {
            psi0.compose(&x[..n]).unwrap_or_else(|_| nan_like(x, n))
        });
        let fiber_metric = Field::composable("one", d.total_chart, n + 1, 1, |x| vec![x[0].lift(1.0)]);
        CorankPData {
            n,
            p: 1,
            h: d.h.clone(),
            big_r,
            connection,
            fiber_metric,
            total_chart: d.total_chart,
            region: d.region.clone(),
        }
    }

    /// Checks `det G = 1`, `Σ_α ∂P_αi/∂y_α = 0` and `R > 0` on a grid over the region.
    pub fn validate(&self) -> Result<()> {
        let (n, p) = (self.n, self.p);
        let dim = n + p;
        if n < 3 || p < 1 {
            return Err(GeometryError::Dimension(format!(
                "need n ≥ 3 and p ≥ 1, got n = {n}, p = {p}"
            )));
        }
        if self.h.dim() != n
            || self.big_r.dim() != dim
            || self.connection.dim_in() != dim
            || self.connection.dim_out() != p * n
            || self.fiber_metric.dim_in() != dim
            || self.fiber_metric.dim_out() != p * p
            || self.region.dim() != dim
        {
            return Err(GeometryError::Shape("corank-p data has inconsistent dimensions".into()));
        }
        let mut det_worst = (0.0, Vec::new());
        let mut div_worst = (0.0, Vec::new());
        for x in self.region.grid(VALIDATION_GRID, 0.0)? {
            let pt = Point::new(self.total_chart, x.clone());
            let r = self.big_r.at(&pt)?;
            if !(r > 0.0) {
                return Err(GeometryError::Precondition(format!("R = {r} is not positive at {x:?}")));
            }
            let gf = self.fiber_metric.values(&pt)?;
            let det = DMatrix::from_row_slice(p, p, &gf).determinant();
            let e = (det - 1.0).abs();
            if e > det_worst.0 || det_worst.1.is_empty() {
                det_worst = (e, x.clone());
            }
            let pj = self.connection.jets(&pt, 1)?;
            for i in 0..n {
                let div: f64 = (0..p).map(|a| pj[a * n + i].partial(&[n + a])).sum();
                if div.abs() > div_worst.0 || div_worst.1.is_empty() {
                    div_worst = (div.abs(), x.clone());
                }
            }
        }
        if !(det_worst.0 <= FIBER_DET_TOL) {
            return Err(GeometryError::Validation {
                constraint: "det(g_fiber) = 1".into(),
                residual: det_worst.0,
                worst_point: det_worst.1,
            });
        }
        if !(div_worst.0 <= DIVERGENCE_TOL) {
            return Err(GeometryError::Validation {
                constraint: "sum_alpha dP_alpha_i/dx_alpha = 0".into(),
                residual: div_worst.0,
                worst_point: div_worst.1,
            });
        }
        Ok(())
    }
}

/// `g = R^{−p} h + R^{n−2} G_αβ θ_α θ_β` and the projection onto the first `n` coordinates.
pub fn build_metric_corank_p(d: &CorankPData) -> Result<(MetricField, SmoothMap)> {
    d.validate()?;
    let (n, p) = (d.n, d.p);
    let dim = n + p;
    let (h, big_r, conn, fiber) = (
        d.h.clone(),
        d.big_r.clone(),
        d.connection.clone(),
        d.fiber_metric.clone(),
    );
    let region = d.region.clone();
    let g = MetricField::new(format!("corank{p}[{}]", d.total_chart), d.total_chart, dim, move |x| {
        let (Ok(hm), Ok(r), Ok(pm), Ok(gf)) = (h.compose(&x[..n]), big_r.compose(x), conn.compose(x), fiber.compose(x))
        else {
            return nan_like(x, dim * dim);
        };
        let base_factor = r.powi(-(p as i32));
        let fiber_factor = r.powi(n as i32 - 2);
        // θ_α = Σ_a T[α][a] dx_a with T = [P | Id]
        let zero = x[0].lift(0.0);
        let theta = |alpha: usize, a: usize| -> Jet {
            if a < n {
                pm[alpha * n + a].clone()
            } else if a - n == alpha {
                x[0].lift(1.0)
            } else {
                zero.clone()
            }
        };
        let mut out = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let mut s = if a < n && b < n {
                    &base_factor * &hm[a * n + b]
                } else {
                    zero.clone()
                };
                let mut f = zero.clone();
                for al in 0..p {
                    for be in 0..p {
                        f = f + &gf[al * p + be] * theta(al, a) * theta(be, b);
                    }
                }
                s = s + &fiber_factor * f;
                out.push(s);
            }
        }
        out
    })
    .with_domain(move |x| region.in_box(x, 0.0));
    let region = d.region.clone();
    let phi = SmoothMap::new(
        format!("projection[{}]", d.total_chart),
        d.total_chart,
        d.h.chart(),
        dim,
        n,
        move |x| x[..n].to_vec(),
    )
    .with_domain(move |x, margin| region.contains(x, margin));
    Ok((g, phi))
}

/// Seeded corank-2 instance on `[−1, 1]^{n+2}` with `G = diag(e^s, e^{−s})`,
/// `P_1i` independent of `y_1` and `P_2i` independent of `y_2`, so both
/// constraints hold identically.
pub fn random_corank2(n: usize, seed: u64) -> Result<CorankPData> {
    if n < 3 {
        return Err(GeometryError::Dimension(format!("normal form needs n ≥ 3, got {n}")));
    }
    let d = random_normal_form(n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let total = ChartId::intern(&format!("N{n}xR2"));
    let dim = n + 2;
    let rc: Vec<f64> = (0..dim).map(|_| draw(&mut rng)).collect();
    let big_r = ScalarField::new(format!("R_random{seed}"), total, dim, move |x| {
        let mut s = x[0].lift(0.0);
        for a in 0..dim {
            s = s + &x[a] * rc[a];
        }
        (s * 0.2).exp()
    });
    let pc: Vec<f64> = (0..2 * n).map(|_| draw(&mut rng)).collect();
    let connection = Field::composable(format!("P_random{seed}"), total, dim, 2 * n, move |x| {
        let (y1, y2) = (&x[n], &x[n + 1]);
        let mut out: Vec<Jet> = (0..n).map(|i| (&x[i] + y2).cos() * pc[i]).collect();
        out.extend((0..n).map(|i| &x[i] * y1.sin() * pc[n + i]));
        out
    });
    let sc = draw(&mut rng);
    let fiber_metric = Field::composable(format!("G_random{seed}"), total, dim, 4, move |x| {
        let s = (&x[0] + &x[n]).sin() * sc;
        let zero = x[0].lift(0.0);
        vec![s.exp(), zero.clone(), zero, (-s).exp()]
    });
    Ok(CorankPData {
        n,
        p: 2,
        h: d.h,
        big_r,
        connection,
        fiber_metric,
        total_chart: total,
        region: Region::cube(dim, 1.0),
    })
}

/// `X / |X|_g` as a composable field.
pub fn unit_direction(x: &VectorField, g: &MetricField) -> Result<VectorField> {
    if x.chart() != g.chart() || x.dim() != g.dim() {
        return Err(GeometryError::Shape(format!(
            "`{}` does not live on the chart of `{}`",
            x.name(),
            g.name()
        )));
    }
    if !x.field().is_composable() || !g.field().is_composable() {
        return Err(GeometryError::Config("unit direction needs composable fields".into()));
    }
    let dim = g.dim();
    let (xf, gf) = (x.clone(), g.clone());
    let u = VectorField::new(format!("{}/|{}|", x.name(), x.name()), x.chart(), dim, move |y| {
        let (Ok(v), Ok(gm)) = (xf.compose(y), gf.compose(y)) else {
            return nan_like(y, dim);
        };
        let mut norm_sq = y[0].lift(0.0);
        for a in 0..dim {
            for b in 0..dim {
                norm_sq = norm_sq + &gm[a * dim + b] * &v[a] * &v[b];
            }
        }
        let inv = norm_sq.sqrt().recip();
        v.iter().map(|c| c * &inv).collect()
    });
    Ok(u)
}

/// Dilation and pulled-back target metric of a Killing quotient at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct KillingQuotient {
    pub r: f64,
    /// `r² g′` with `g′ = g − (X♭/|X|)²`.
    pub pullback: DMatrix<f64>,
}

fn killing_setup(x: &VectorField, g: &MetricField, p: &Point) -> Result<(usize, MetricJet, Vec<Jet>)> {
    let n = g.dim() - 1;
    if n < 3 {
        return Err(GeometryError::Dimension(format!(
            "Killing quotient needs n ≥ 3, got n = {n}"
        )));
    }
    let mj = MetricJet::at(g, p, 1)?;
    let xj = x.jets(p, 1)?;
    let xv = DVector::from_iterator(xj.len(), xj.iter().map(Jet::value));
    let norm = mj.norm(&xv);
    if norm < KILLING_ZERO_TOL {
        return Err(GeometryError::ZeroLocus {
            norm,
            coords: p.coords.clone(),
        });
    }
    // the defining property is checked at p and at nearby points
    let h = 1e-3 * p.coords.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    let mut worst = killing_residual(x, g, p)?;
    for a in 0..p.dim() {
        for s in [-h, h] {
            let q = p.shifted(a, s);
            if x.field().in_domain(&q.coords) && g.field().in_domain(&q.coords) {
                worst = worst.max(killing_residual(x, g, &q)?);
            }
        }
    }
    if !(worst < KILLING_TOL) {
        return Err(GeometryError::Precondition(format!(
            "`{}` is not a Killing field near {:?} (‖L_X g‖ = {worst:e})",
            x.name(),
            p.coords
        )));
    }
    Ok((n, mj, xj))
}

/// `r = |X|^{1/(n−2)}` and `r² g′`.
pub fn killing_quotient_scale(x: &VectorField, g: &MetricField, p: &Point) -> Result<KillingQuotient> {
    let (n, mj, xj) = killing_setup(x, g, p)?;
    let xv = DVector::from_iterator(xj.len(), xj.iter().map(Jet::value));
    let norm = mj.norm(&xv);
    let r = norm.powf(1.0 / (n - 2) as f64);
    let flat = mj.lower(&xv) / norm;
    let gprime = &mj.g - &flat * flat.transpose();
    Ok(KillingQuotient {
        r,
        pullback: gprime * (r * r),
    })
}

/// Harmonicity residual `|(n−2)∇^H log r + ∇_u u|` of the orbit projection
/// of `X` for the trial dilation `r = |X|^{exponent/(n−2)}`. It vanishes for
/// `exponent = 1`.
pub fn killing_quotient_residual(x: &VectorField, g: &MetricField, p: &Point, exponent: f64) -> Result<f64> {
    let (n, mj, xj) = killing_setup(x, g, p)?;
    let dim = n + 1;
    let xv = DVector::from_iterator(dim, xj.iter().map(Jet::value));
    let norm_sq = mj.inner(&xv, &xv);
    // ∂_c |X|² = ∂_c g_ab X^a X^b + 2 g_ab X^a ∂_c X^b
    let dlog_norm = DVector::from_fn(dim, |c, _| {
        let mut s = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                s += mj.dg(c, a, b) * xv[a] * xv[b] + 2.0 * mj.g[(a, b)] * xv[a] * xj[b].partial(&[c]);
            }
        }
        0.5 * s / norm_sq
    });
    let dlog_r = dlog_norm * (exponent / (n - 2) as f64);
    let u = unit_direction(x, g)?;
    Ok(frame_harmonicity_components(&u, g, p, &dlog_r)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphism::harmonic_morphism_residual;
    use approx::assert_relative_eq;

    #[test]
    fn trivial_data_gives_flat_product() {
        let base = ChartId("R3");
        let total = ChartId("R3xR");
        let d = NormalFormData {
            n: 3,
            h: MetricField::flat(base, 3),
            psi0: OneFormField::new("zero", base, 3, |x| vec![x[0].lift(0.0); 3]),
            r_fn: ScalarField::new("one", total, 4, |x| x[0].lift(1.0)),
            total_chart: total,
            region: Region::cube(4, 1.0),
        };
        let (g, _) = build_metric_corank1(&d).unwrap();
        assert_eq!(
            g.matrix(&g.point(vec![0.1, 0.2, 0.3, 0.4])).unwrap(),
            DMatrix::identity(4, 4)
        );
    }

    #[test]
    fn nonpositive_dilation_is_rejected() {
        let mut d = random_normal_form(3, 1).unwrap();
        d.r_fn = ScalarField::new("signed", d.total_chart, 4, |x| x[0].clone());
        assert!(matches!(build_metric_corank1(&d), Err(GeometryError::Precondition(_))));
    }

    #[test]
    fn random_instance_is_a_harmonic_morphism() {
        let d = random_normal_form(3, 5).unwrap();
        let (g, phi) = build_metric_corank1(&d).unwrap();
        for x in [[0.1, -0.4, 0.7, 0.2], [-0.8, 0.3, 0.0, -0.5]] {
            let res = harmonic_morphism_residual(&phi, &g, &d.h, &g.point(x.to_vec())).unwrap();
            assert!(res.tension_norm < 1e-10 && res.hwc_norm < 1e-10, "{res:?}");
        }
    }

    #[test]
    fn corank_p_matches_corank_one() {
        let d = random_normal_form(4, 2).unwrap();
        let (g1, _) = build_metric_corank1(&d).unwrap();
        let (gp, _) = build_metric_corank_p(&CorankPData::from_normal_form(&d)).unwrap();
        let p = g1.point(vec![0.3, -0.2, 0.5, 0.1, -0.6]);
        assert!((g1.matrix(&p).unwrap() - gp.matrix(&p).unwrap()).amax() < 1e-12);
    }

    #[test]
    fn corank_two_instance_is_a_harmonic_morphism() {
        let d = random_corank2(3, 4).unwrap();
        let (g, phi) = build_metric_corank_p(&d).unwrap();
        let res = harmonic_morphism_residual(&phi, &g, &d.h, &g.point(vec![0.1, 0.2, -0.3, 0.4, 0.5])).unwrap();
        assert!(res.tension_norm < 1e-12 && res.hwc_norm < 1e-12, "{res:?}");
    }

    #[test]
    fn fiber_determinant_is_validated() {
        let mut d = random_corank2(3, 4).unwrap();
        d.fiber_metric = Field::composable("diag(2,1)", d.total_chart, 5, 4, |x| {
            vec![x[0].lift(2.0), x[0].lift(0.0), x[0].lift(0.0), x[0].lift(1.0)]
        });
        match build_metric_corank_p(&d) {
            Err(GeometryError::Validation {
                constraint, residual, ..
            }) => {
                assert_eq!(constraint, "det(g_fiber) = 1");
                assert_eq!(residual, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_killing_field_has_unit_scale() {
        let chart = ChartId("R4");
        let g = MetricField::flat(chart, 4);
        let x = VectorField::new("e1", chart, 4, |y| {
            vec![y[0].lift(1.0), y[0].lift(0.0), y[0].lift(0.0), y[0].lift(0.0)]
        });
        let q = killing_quotient_scale(&x, &g, &g.point(vec![0.3, 0.2, 0.1, 0.0])).unwrap();
        assert_eq!(q.r, 1.0);
        let zero = VectorField::new("zero", chart, 4, |y| vec![y[0].lift(0.0); 4]);
        assert!(matches!(
            killing_quotient_scale(&zero, &g, &g.point(vec![0.0; 4])),
            Err(GeometryError::ZeroLocus { .. })
        ));
        let dil = VectorField::new("dilation", chart, 4, |y| y.to_vec());
        assert!(matches!(
            killing_quotient_scale(&dil, &g, &g.point(vec![1.0, 0.0, 0.0, 0.0])),
            Err(GeometryError::Precondition(_))
        ));
    }

    #[test]
    fn rotation_quotient_exponent() {
        let chart = ChartId("R4");
        let g = MetricField::flat(chart, 4);
        let x = VectorField::new("rot", chart, 4, |y| vec![-&y[1], y[0].clone(), -&y[3], y[2].clone()]);
        let p = g.point(vec![0.4, -0.3, 0.8, 0.5]);
        let q = killing_quotient_scale(&x, &g, &p).unwrap();
        let len = p.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert_relative_eq!(q.r, len, epsilon = 1e-14);
        assert!(killing_quotient_residual(&x, &g, &p, 1.0).unwrap() < 1e-12);
        assert!(killing_quotient_residual(&x, &g, &p, -1.0).unwrap() > 1e-2);
    }
}
