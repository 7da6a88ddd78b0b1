//! Sampling regions: a coordinate box with named interior constraints.

use std::fmt;
use std::sync::Arc;

use crate::error::{GeometryError, Result};

pub type ConstraintFn = dyn Fn(&[f64], f64) -> bool + Send + Sync;

/// A named predicate `ok(x, margin)` that must hold inside the region.
#[derive(Clone)]
pub struct Constraint {
    pub name: String,
    ok: Arc<ConstraintFn>,
}

impl Constraint {
    pub fn new<F>(name: impl Into<String>, ok: F) -> Constraint
    where
        F: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        Constraint {
            name: name.into(),
            ok: Arc::new(ok),
        }
    }

    pub fn holds(&self, x: &[f64], margin: f64) -> bool {
        (self.ok)(x, margin)
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Constraint").field(&self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl Region {
    pub fn cube(dim: usize, half_width: f64) -> Region {
        Region::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Region {
        assert_eq!(lo.len(), hi.len(), "box corners must have the same dimension");
        Region {
            lo,
            hi,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint<F>(mut self, name: impl Into<String>, ok: F) -> Region
    where
        F: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        self.constraints.push(Constraint::new(name, ok));
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Box shrunk by `margin` on every side.
    pub fn shrunk(&self, margin: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let lo: Vec<f64> = self.lo.iter().map(|v| v + margin).collect();
        let hi: Vec<f64> = self.hi.iter().map(|v| v - margin).collect();
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(GeometryError::Sampling(format!(
                "box is empty after applying margin {margin}"
            )));
        }
        Ok((lo, hi))
    }

    pub fn in_box(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (lo, hi))| *v > lo + margin && *v < hi - margin)
    }

    pub fn satisfies_constraints(&self, x: &[f64], margin: f64) -> bool {
        self.constraints.iter().all(|c| c.holds(x, margin))
    }

    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        self.in_box(x, margin) && self.satisfies_constraints(x, margin)
    }

    /// First violated constraint, if any.
    pub fn violated(&self, x: &[f64], margin: f64) -> Option<&str> {
        if !self.in_box(x, margin) {
            return Some("box");
        }
        self.constraints
            .iter()
            .find(|c| !c.holds(x, margin))
            .map(|c| c.name.as_str())
    }

    /// Points of the `k^dim` tensor grid spanning the shrunk box, endpoints included.
    pub fn grid(&self, k: usize, margin: f64) -> Result<Vec<Vec<f64>>> {
        let (lo, hi) = self.shrunk(margin)?;
        let dim = self.dim();
        let k = k.max(2);
        let total = k.pow(dim as u32);
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut x = Vec::with_capacity(dim);
            for a in 0..dim {
                let i = idx % k;
                idx /= k;
                x.push(lo[a] + (hi[a] - lo[a]) * i as f64 / (k - 1) as f64);
            }
            if self.satisfies_constraints(&x, margin) {
                out.push(x);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_shrinks_box_and_constraints() {
        let r = Region::cube(2, 1.0).with_constraint("|x| > 0.1", |x, m| x[0].hypot(x[1]) > 0.1 + m);
        assert!(r.contains(&[0.5, 0.5], 0.05));
        assert!(!r.contains(&[0.98, 0.0], 0.05));
        assert!(r.contains(&[0.12, 0.0], 0.0));
        assert!(!r.contains(&[0.12, 0.0], 0.05));
        assert_eq!(r.violated(&[0.0, 0.0], 0.0), Some("|x| > 0.1"));
    }

    #[test]
    fn empty_box_is_a_sampling_error() {
        assert!(matches!(
            Region::cube(3, 0.1).shrunk(0.2),
            Err(GeometryError::Sampling(_))
        ));
    }

    #[test]
    fn grid_respects_constraints() {
        let r = Region::cube(2, 1.0).with_constraint("x > 0", |x, _| x[0] > 0.0);
        let g = r.grid(3, 0.0).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|x| x[0] == 1.0));
    }
}
