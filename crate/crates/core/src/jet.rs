//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a scalar
//! function for every multi-index `α` with `|α| ≤ order`, densely, in graded
//! order. Arithmetic on jets is exact polynomial arithmetic truncated at the
//! jet order, so any expression built from jets carries exact partial
//! derivatives of the composite function.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{GeometryError, Result};

/// Highest supported jet order.
pub const MAX_ORDER: usize = 3;

/// Monomial table shared by all jets with the same variable count and order.
pub struct Layout {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.exponents.len())
            .finish()
    }
}

fn monomials(nvars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == nvars {
        prefix.push(degree as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=degree).rev() {
        prefix.push(k as u8);
        monomials(nvars, degree - k, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exponents = Vec::new();
        for d in 0..=order {
            if nvars == 0 {
                if d == 0 {
                    exponents.push(Vec::new());
                }
                continue;
            }
            monomials(nvars, d, &mut Vec::with_capacity(nvars), &mut exponents);
        }
        let index: HashMap<Vec<u8>, usize> = exponents.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let degree = |e: &Vec<u8>| e.iter().map(|&k| k as usize).sum::<usize>();
        let mut products = Vec::new();
        for (i, ei) in exponents.iter().enumerate() {
            for (j, ej) in exponents.iter().enumerate() {
                if degree(ei) + degree(ej) > order {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        Layout {
            nvars,
            order,
            exponents,
            index,
            products,
        }
    }

    /// Shared layout for `nvars` variables truncated at `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn position(&self, exponent: &[u8]) -> Option<usize> {
        self.index.get(exponent).copied()
    }
}

/// Validates a requested jet order against the supported range `1..=3`.
pub fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(GeometryError::Config(format!(
            "jet order {order} outside supported range 1..={MAX_ORDER}"
        )))
    }
}

/// Truncated Taylor expansion of a scalar function of `nvars` variables.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet {
            layout: layout.clone(),
            coeffs,
        }
    }

    /// The coordinate function `x_var` expanded about `value`.
    pub fn variable(layout: &Arc<Layout>, var: usize, value: f64) -> Jet {
        let mut jet = Jet::constant(layout, value);
        if layout.order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[var] = 1;
            let k = layout.position(&e).expect("first-order monomial");
            jet.coeffs[k] = 1.0;
        }
        jet
    }

    /// Seeds one variable jet per coordinate of `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        let layout = Layout::get(point.len(), order);
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(&layout, i, v))
            .collect()
    }

    /// A constant sharing this jet's layout.
    pub fn lift(&self, value: f64) -> Jet {
        Jet::constant(&self.layout, value)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Mixed partial derivative along the listed variables, e.g. `&[0, 1]`
    /// for `∂²/∂x₀∂x₁`. Returns zero beyond the stored order.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        if vars.len() > self.layout.order {
            return 0.0;
        }
        let mut e = vec![0u8; self.layout.nvars];
        for &v in vars {
            e[v] += 1;
        }
        let k = match self.layout.position(&e) {
            Some(k) => k,
            None => return 0.0,
        };
        let factorial: f64 = e.iter().map(|&m| (1..=m as u32).product::<u32>() as f64).product();
        self.coeffs[k] * factorial
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.layout.nvars).map(|i| self.partial(&[i])).collect()
    }

    /// Partial derivative `∂f/∂x_var` as a jet one order lower.
    ///
    /// # Panics
    /// Panics if the jet has order zero.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.layout.order >= 1, "cannot differentiate an order-0 jet");
        let lower = Layout::get(self.layout.nvars, self.layout.order - 1);
        let mut coeffs = vec![0.0; lower.len()];
        for (k, e) in self.layout.exponents.iter().enumerate() {
            if e.is_empty() || e[var] == 0 || self.coeffs[k] == 0.0 {
                continue;
            }
            let mut reduced = e.clone();
            reduced[var] -= 1;
            if let Some(dst) = lower.position(&reduced) {
                coeffs[dst] += e[var] as f64 * self.coeffs[k];
            }
        }
        Jet { layout: lower, coeffs }
    }

    /// Re-expands this jet with a lower truncation order.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.layout.order {
            return self.clone();
        }
        let lower = Layout::get(self.layout.nvars, order);
        let coeffs = self.coeffs[..lower.len()].to_vec();
        Jet { layout: lower, coeffs }
    }

    fn check_layout(&self, other: &Jet) {
        assert!(
            Arc::ptr_eq(&self.layout, &other.layout)
                || (self.layout.nvars == other.layout.nvars && self.layout.order == other.layout.order),
            "jet layout mismatch: ({}, {}) vs ({}, {})",
            self.layout.nvars,
            self.layout.order,
            other.layout.nvars,
            other.layout.order
        );
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_layout(other);
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|&a| f(a)).collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        self.check_layout(other);
        let mut coeffs = vec![0.0; self.layout.len()];
        for &(i, j, k) in &self.layout.products {
            let (a, b) = (self.coeffs[i as usize], other.coeffs[j as usize]);
            if a != 0.0 && b != 0.0 {
                coeffs[k as usize] += a * b;
            }
        }
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    /// Composes a univariate function with this jet, given the function's
    /// derivatives `f⁽ᵏ⁾(a₀)` at the jet value for `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.layout.order;
        debug_assert!(derivs.len() > order);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = self.lift(derivs[0]);
        let mut power = self.lift(1.0);
        let mut factorial = 1.0;
        for (k, &d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.product(&delta);
            factorial *= k as f64;
            let scale = d / factorial;
            if scale != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += scale * p;
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let mut d = Vec::with_capacity(MAX_ORDER + 1);
        let mut coef = 1.0;
        for k in 0..=self.layout.order {
            // d^k/dx^k x^{-1} = (-1)^k k! x^{-(k+1)}
            d.push(coef / a.powi(k as i32 + 1));
            coef *= -((k + 1) as f64);
        }
        self.compose(&d)
    }

    pub fn powf(&self, s: f64) -> Jet {
        let a = self.value();
        let mut d = Vec::with_capacity(MAX_ORDER + 1);
        let mut coef = 1.0;
        for k in 0..=self.layout.order {
            d.push(coef * a.powf(s - k as f64));
            coef *= s - k as f64;
        }
        self.compose(&d)
    }

    pub fn powi(&self, n: i32) -> Jet {
        match n {
            0 => self.lift(1.0),
            1 => self.clone(),
            2 => self.product(self),
            _ if n > 0 => {
                let mut out = self.clone();
                for _ in 1..n {
                    out = out.product(self);
                }
                out
            }
            _ => self.powi(-n).recip(),
        }
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.layout.order + 1])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut d = vec![a.ln()];
        let mut coef = 1.0;
        for k in 1..=self.layout.order {
            d.push(coef / a.powi(k as i32));
            coef *= -(k as f64);
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.layout.order).map(|k| cycle[k % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.layout.order).map(|k| cycle[k % 4]).collect();
        self.compose(&d)
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr, $scalar_rhs:expr, $scalar_lhs:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $scalar_rhs;
                f(self, rhs)
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(f64, &Jet) -> Jet = $scalar_lhs;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(
    Add,
    add,
    |a, b| a.zip_with(b, |x, y| x + y),
    |a, s| {
        let mut out = a.clone();
        out.coeffs[0] += s;
        out
    },
    |s, a| {
        let mut out = a.clone();
        out.coeffs[0] += s;
        out
    }
);

jet_binop!(
    Sub,
    sub,
    |a, b| a.zip_with(b, |x, y| x - y),
    |a, s| {
        let mut out = a.clone();
        out.coeffs[0] -= s;
        out
    },
    |s, a| {
        let mut out = -a;
        out.coeffs[0] += s;
        out
    }
);

jet_binop!(Mul, mul, |a, b| a.product(b), |a, s| a.map(|x| x * s), |s, a| a
    .map(|x| s * x));

jet_binop!(
    Div,
    div,
    |a, b| a.product(&b.recip()),
    |a, s| a.map(|x| x / s),
    |s, a| a.recip().map(|x| s * x)
);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|x| -x)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

/// Sum of a non-empty slice of jets.
pub fn sum<'a>(terms: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut iter = terms.into_iter();
    let first = iter.next()?.clone();
    Some(iter.fold(first, |acc, t| acc + t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn layout_sizes_match_binomials() {
        // C(d + k, k)
        assert_eq!(Layout::get(2, 2).len(), 6);
        assert_eq!(Layout::get(4, 2).len(), 15);
        assert_eq!(Layout::get(8, 3).len(), 165);
        assert_eq!(Layout::get(3, 0).len(), 1);
    }

    #[test]
    fn constant_has_zero_partials() {
        let layout = Layout::get(3, 2);
        let c = Jet::constant(&layout, 5.0);
        assert_eq!(c.value(), 5.0);
        assert!(c.coeffs()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn polynomial_partials() {
        let x = Jet::variables(&[1.0, 2.0], 2);
        let f = &x[0] * &x[0] * &x[1];
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.partial(&[0]), 4.0);
        assert_eq!(f.partial(&[1]), 1.0);
        assert_eq!(f.partial(&[0, 0]), 4.0);
        assert_eq!(f.partial(&[0, 1]), 2.0);
        assert_eq!(f.partial(&[1, 1]), 0.0);
    }

    #[test]
    fn third_order_partials() {
        let x = Jet::variables(&[0.5, -1.5], 3);
        let f = x[0].powi(3) * &x[1];
        assert_relative_eq!(f.partial(&[0, 0, 0]), 6.0 * -1.5);
        assert_relative_eq!(f.partial(&[0, 0, 1]), 6.0 * 0.5);
        assert_eq!(f.partial(&[0, 1, 1]), 0.0);
    }

    #[test]
    fn transcendental_chain_rule() {
        let x = Jet::variables(&[0.3, 0.7], 2);
        let f = (&x[0] * &x[1]).sin();
        let (a, b) = (0.3f64, 0.7f64);
        assert_relative_eq!(f.partial(&[0]), b * (a * b).cos(), epsilon = 1e-15);
        assert_relative_eq!(
            f.partial(&[0, 1]),
            (a * b).cos() - a * b * (a * b).sin(),
            epsilon = 1e-15
        );
        let g = x[0].exp().ln();
        assert_relative_eq!(g.partial(&[0]), 1.0, epsilon = 1e-14);
        assert_relative_eq!(g.partial(&[0, 0]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn division_and_sqrt() {
        let x = Jet::variables(&[2.0], 3);
        let f = 1.0 / &x[0];
        assert_relative_eq!(f.partial(&[0]), -0.25);
        assert_relative_eq!(f.partial(&[0, 0]), 0.25);
        assert_relative_eq!(f.partial(&[0, 0, 0]), -6.0 / 16.0);
        let s = x[0].sqrt();
        assert_relative_eq!(s.partial(&[0]), 0.5 / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet::variables(&[1.0, 2.0], 3);
        let f = &x[0] * &x[0] * &x[1];
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 4.0);
        assert_eq!(fx.partial(&[0]), 4.0);
        assert_eq!(fx.partial(&[1]), 2.0);
        assert_eq!(fx.partial(&[0, 1]), 2.0);
    }

    #[test]
    fn order_range_is_enforced() {
        assert!(check_order(0).is_err());
        assert!(check_order(4).is_err());
        assert!(check_order(2).is_ok());
    }
}
