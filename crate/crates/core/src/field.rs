//! Points, charts and jet-evaluable fields.
//!
//! Every field is backed either by a *composable* component function written
//! in jet arithmetic (so it can be evaluated at a point or composed with other
//! jets), or by a *pointwise* evaluator that only knows how to produce jets at
//! a concrete point (used for derived fields such as the unit kernel field of
//! a submersion).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::jet::{Jet, MAX_ORDER};

/// Identifier of a coordinate chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChartId(pub &'static str);

impl ChartId {
    /// Chart id for a runtime name; each distinct name is allocated once.
    pub fn intern(name: &str) -> ChartId {
        static NAMES: OnceLock<Mutex<HashMap<String, &'static str>>> = OnceLock::new();
        let mut names = NAMES
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        if let Some(s) = names.get(name) {
            return ChartId(s);
        }
        let leaked: &'static str = Box::leak(name.to_string().into_boxed_str());
        names.insert(name.to_string(), leaked);
        ChartId(leaked)
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// A point given by its coordinates in a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub chart: ChartId,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: ChartId, coords: Vec<f64>) -> Point {
        Point { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Same chart, coordinates shifted by `step` along axis `axis`.
    pub fn shifted(&self, axis: usize, step: f64) -> Point {
        let mut coords = self.coords.clone();
        coords[axis] += step;
        Point::new(self.chart, coords)
    }

    pub fn with_coords(&self, coords: Vec<f64>) -> Point {
        Point::new(self.chart, coords)
    }
}

pub type ComposeFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;
pub type PointwiseFn = dyn Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync;
pub type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

#[derive(Clone)]
enum Repr {
    Composable(Arc<ComposeFn>),
    Pointwise(Arc<PointwiseFn>),
}

/// A jet-evaluable map from chart coordinates to `dim_out` real components.
#[derive(Clone)]
pub struct Field {
    name: String,
    chart: ChartId,
    dim_in: usize,
    dim_out: usize,
    repr: Repr,
    domain: Option<Arc<DomainFn>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("composable", &matches!(self.repr, Repr::Composable(_)))
            .finish()
    }
}

impl Field {
    pub fn composable<F>(name: impl Into<String>, chart: ChartId, dim_in: usize, dim_out: usize, f: F) -> Field
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        Field {
            name: name.into(),
            chart,
            dim_in,
            dim_out,
            repr: Repr::Composable(Arc::new(f)),
            domain: None,
        }
    }

    pub fn pointwise<F>(name: impl Into<String>, chart: ChartId, dim_in: usize, dim_out: usize, f: F) -> Field
    where
        F: Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync + 'static,
    {
        Field {
            name: name.into(),
            chart,
            dim_in,
            dim_out,
            repr: Repr::Pointwise(Arc::new(f)),
            domain: None,
        }
    }

    pub fn with_domain<D>(mut self, domain: D) -> Field
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.domain = Some(Arc::new(domain));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_composable(&self) -> bool {
        matches!(self.repr, Repr::Composable(_))
    }

    pub fn in_domain(&self, coords: &[f64]) -> bool {
        coords.iter().all(|c| c.is_finite()) && self.domain.as_ref().is_none_or(|d| d(coords))
    }

    fn domain_error(&self, coords: &[f64]) -> GeometryError {
        GeometryError::Domain {
            field: self.name.clone(),
            coords: coords.to_vec(),
        }
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.chart != self.chart {
            return Err(GeometryError::Shape(format!(
                "point in chart `{}` passed to `{}` on chart `{}`",
                p.chart, self.name, self.chart
            )));
        }
        if p.dim() != self.dim_in {
            return Err(GeometryError::Shape(format!(
                "`{}` expects {} coordinates, got {}",
                self.name,
                self.dim_in,
                p.dim()
            )));
        }
        if !self.in_domain(&p.coords) {
            return Err(self.domain_error(&p.coords));
        }
        Ok(())
    }

    /// Componentwise jets of the field at `p`, to the given order (0 gives
    /// plain values).
    pub fn jets(&self, p: &Point, order: usize) -> Result<Vec<Jet>> {
        if order > MAX_ORDER {
            return Err(GeometryError::Config(format!(
                "jet order {order} exceeds maximum {MAX_ORDER}"
            )));
        }
        self.check_point(p)?;
        let out = match &self.repr {
            Repr::Composable(f) => f(&Jet::variables(&p.coords, order)),
            Repr::Pointwise(f) => f(&p.coords, order)?,
        };
        self.check_output(out, &p.coords)
    }

    fn check_output(&self, out: Vec<Jet>, coords: &[f64]) -> Result<Vec<Jet>> {
        if out.len() != self.dim_out {
            return Err(GeometryError::Shape(format!(
                "`{}` produced {} components, expected {}",
                self.name,
                out.len(),
                self.dim_out
            )));
        }
        if out.iter().any(|j| !j.is_finite()) {
            return Err(self.domain_error(coords));
        }
        Ok(out)
    }

    /// Evaluates the field on arbitrary input jets (chain rule through the
    /// component functions). Only available for composable fields.
    pub fn compose(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        if x.len() != self.dim_in {
            return Err(GeometryError::Shape(format!(
                "`{}` expects {} inputs, got {}",
                self.name,
                self.dim_in,
                x.len()
            )));
        }
        let values: Vec<f64> = x.iter().map(Jet::value).collect();
        if !self.in_domain(&values) {
            return Err(self.domain_error(&values));
        }
        match &self.repr {
            Repr::Composable(f) => self.check_output(f(x), &values),
            Repr::Pointwise(_) => Err(GeometryError::Config(format!(
                "`{}` is evaluated pointwise and cannot be composed",
                self.name
            ))),
        }
    }

    pub fn values(&self, p: &Point) -> Result<Vec<f64>> {
        Ok(self.jets(p, 0)?.iter().map(Jet::value).collect())
    }
}

/// Symmetric 2-tensor field on a chart.
#[derive(Clone, Debug)]
pub struct MetricField {
    field: Field,
    dim: usize,
    constant_curvature: Option<f64>,
}

impl MetricField {
    /// `f` returns the `dim × dim` component matrix in row-major order.
    pub fn new<F>(name: impl Into<String>, chart: ChartId, dim: usize, f: F) -> MetricField
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        MetricField {
            field: Field::composable(name, chart, dim, dim * dim, f),
            dim,
            constant_curvature: None,
        }
    }

    pub fn from_field(field: Field, dim: usize) -> Result<MetricField> {
        if field.dim_in() != dim || field.dim_out() != dim * dim {
            return Err(GeometryError::Shape(format!(
                "metric `{}` needs {dim} inputs and {} outputs",
                field.name(),
                dim * dim
            )));
        }
        Ok(MetricField {
            field,
            dim,
            constant_curvature: None,
        })
    }

    /// The Euclidean metric `δ_ab`.
    pub fn flat(chart: ChartId, dim: usize) -> MetricField {
        MetricField::new(format!("flat_R{dim}"), chart, dim, move |x| {
            let mut out = Vec::with_capacity(dim * dim);
            for a in 0..dim {
                for b in 0..dim {
                    out.push(x[0].lift(if a == b { 1.0 } else { 0.0 }));
                }
            }
            out
        })
        .with_curvature(0.0)
    }

    /// Conformally flat metric `λ(x) δ_ab`.
    pub fn conformal<F>(name: impl Into<String>, chart: ChartId, dim: usize, factor: F) -> MetricField
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        MetricField::new(name, chart, dim, move |x| {
            let lambda = factor(x);
            let zero = x[0].lift(0.0);
            let mut out = Vec::with_capacity(dim * dim);
            for a in 0..dim {
                for b in 0..dim {
                    out.push(if a == b { lambda.clone() } else { zero.clone() });
                }
            }
            out
        })
    }

    pub fn with_curvature(mut self, k: f64) -> MetricField {
        self.constant_curvature = Some(k);
        self
    }

    pub fn with_domain<D>(mut self, domain: D) -> MetricField
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.field = self.field.with_domain(domain);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        self.field.name()
    }

    pub fn chart(&self) -> ChartId {
        self.field.chart()
    }

    pub fn constant_curvature(&self) -> Option<f64> {
        self.constant_curvature
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn point(&self, coords: Vec<f64>) -> Point {
        Point::new(self.chart(), coords)
    }

    /// Row-major component jets.
    pub fn jets(&self, p: &Point, order: usize) -> Result<Vec<Jet>> {
        self.field.jets(p, order)
    }

    pub fn compose(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        self.field.compose(x)
    }

    /// Component matrix at `p`.
    pub fn matrix(&self, p: &Point) -> Result<DMatrix<f64>> {
        let v = self.field.values(p)?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &v))
    }
}

macro_rules! vector_like {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug)]
        pub struct $name {
            field: Field,
        }

        impl $name {
            pub fn new<F>(name: impl Into<String>, chart: ChartId, dim: usize, f: F) -> $name
            where
                F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
            {
                $name {
                    field: Field::composable(name, chart, dim, dim, f),
                }
            }

            pub fn from_field(field: Field) -> Result<$name> {
                if field.dim_in() != field.dim_out() {
                    return Err(GeometryError::Shape(format!(
                        "`{}` maps {} coordinates to {} components",
                        field.name(),
                        field.dim_in(),
                        field.dim_out()
                    )));
                }
                Ok($name { field })
            }

            pub fn with_domain<D>(mut self, domain: D) -> $name
            where
                D: Fn(&[f64]) -> bool + Send + Sync + 'static,
            {
                self.field = self.field.with_domain(domain);
                self
            }

            pub fn dim(&self) -> usize {
                self.field.dim_in()
            }

            pub fn name(&self) -> &str {
                self.field.name()
            }

            pub fn chart(&self) -> ChartId {
                self.field.chart()
            }

            pub fn field(&self) -> &Field {
                &self.field
            }

            pub fn jets(&self, p: &Point, order: usize) -> Result<Vec<Jet>> {
                self.field.jets(p, order)
            }

            pub fn compose(&self, x: &[Jet]) -> Result<Vec<Jet>> {
                self.field.compose(x)
            }

            pub fn at(&self, p: &Point) -> Result<DVector<f64>> {
                Ok(DVector::from_vec(self.field.values(p)?))
            }
        }
    };
}

vector_like!(
    /// Tangent vector field, components in the coordinate basis `∂_a`.
    VectorField
);
vector_like!(
    /// One-form field, components in the coordinate coframe `dx_a`.
    OneFormField
);

/// Real-valued function on a chart.
#[derive(Clone, Debug)]
pub struct ScalarField {
    field: Field,
}

impl ScalarField {
    pub fn new<F>(name: impl Into<String>, chart: ChartId, dim: usize, f: F) -> ScalarField
    where
        F: Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    {
        ScalarField {
            field: Field::composable(name, chart, dim, 1, move |x| vec![f(x)]),
        }
    }

    pub fn with_domain<D>(mut self, domain: D) -> ScalarField
    where
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.field = self.field.with_domain(domain);
        self
    }

    pub fn dim(&self) -> usize {
        self.field.dim_in()
    }

    pub fn name(&self) -> &str {
        self.field.name()
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn jet(&self, p: &Point, order: usize) -> Result<Jet> {
        Ok(self.field.jets(p, order)?.remove(0))
    }

    pub fn compose(&self, x: &[Jet]) -> Result<Jet> {
        Ok(self.field.compose(x)?.remove(0))
    }

    pub fn at(&self, p: &Point) -> Result<f64> {
        Ok(self.jet(p, 0)?.value())
    }
}

pub type MarginDomainFn = dyn Fn(&[f64], f64) -> bool + Send + Sync;

/// Smooth map between two charts, `m_dim → n_dim`.
#[derive(Clone)]
pub struct SmoothMap {
    field: Field,
    target_chart: ChartId,
    domain_ok: Arc<MarginDomainFn>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("field", &self.field)
            .field("target_chart", &self.target_chart)
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(
        name: impl Into<String>,
        source: ChartId,
        target: ChartId,
        m_dim: usize,
        n_dim: usize,
        f: F,
    ) -> SmoothMap
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        SmoothMap {
            field: Field::composable(name, source, m_dim, n_dim, f),
            target_chart: target,
            domain_ok: Arc::new(|_, _| true),
        }
    }

    /// `domain_ok(x, margin)` must hold for evaluation (with margin 0).
    pub fn with_domain<D>(mut self, domain_ok: D) -> SmoothMap
    where
        D: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        let d: Arc<MarginDomainFn> = Arc::new(domain_ok);
        let inner = d.clone();
        self.field = self.field.with_domain(move |x| inner(x, 0.0));
        self.domain_ok = d;
        self
    }

    pub fn name(&self) -> &str {
        self.field.name()
    }

    pub fn m_dim(&self) -> usize {
        self.field.dim_in()
    }

    pub fn n_dim(&self) -> usize {
        self.field.dim_out()
    }

    pub fn source_chart(&self) -> ChartId {
        self.field.chart()
    }

    pub fn target_chart(&self) -> ChartId {
        self.target_chart
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn domain_ok(&self, coords: &[f64], margin: f64) -> bool {
        coords.iter().all(|c| c.is_finite()) && (self.domain_ok)(coords, margin)
    }

    pub fn jets(&self, p: &Point, order: usize) -> Result<Vec<Jet>> {
        self.field.jets(p, order)
    }

    pub fn eval(&self, p: &Point) -> Result<Point> {
        Ok(Point::new(self.target_chart, self.field.values(p)?))
    }

    /// Jacobian `∂_a φ^i` as an `n_dim × m_dim` matrix.
    pub fn jacobian(&self, p: &Point) -> Result<DMatrix<f64>> {
        let jets = self.jets(p, 1)?;
        let m = self.m_dim();
        Ok(DMatrix::from_fn(self.n_dim(), m, |i, a| jets[i].partial(&[a])))
    }

    /// The same map with `amplitude · sin(x₁)` added to one output component.
    pub fn perturbed(&self, component: usize, amplitude: f64) -> Result<SmoothMap> {
        if component >= self.n_dim() {
            return Err(GeometryError::Shape(format!(
                "component {component} out of range for `{}`",
                self.name()
            )));
        }
        if !self.field.is_composable() {
            return Err(GeometryError::Config(format!("`{}` cannot be perturbed", self.name())));
        }
        let base = self.field.clone();
        let domain_ok = self.domain_ok.clone();
        let mut out = SmoothMap::new(
            format!("{}+{amplitude}sin(x1)", self.name()),
            self.source_chart(),
            self.target_chart,
            self.m_dim(),
            self.n_dim(),
            move |x| {
                let mut y = base
                    .compose(x)
                    .unwrap_or_else(|_| vec![x[0].lift(f64::NAN); base.dim_out()]);
                y[component] = &y[component] + x[0].sin() * amplitude;
                y
            },
        );
        let d = domain_ok.clone();
        out.field = out.field.with_domain(move |x| d(x, 0.0));
        out.domain_ok = domain_ok;
        Ok(out)
    }
}
