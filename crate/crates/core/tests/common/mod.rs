#![allow(dead_code)]

use harmorph::field::{ChartId, Point};
use harmorph::region::Region;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MARGIN: f64 = 0.05;

/// Seeded rejection sampling inside a region.
pub fn sample(region: &Region, chart: ChartId, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = region.shrunk(MARGIN).unwrap();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        assert!(tries < 100 * count + 1000, "region too small");
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
        if region.contains(&x, MARGIN) {
            out.push(Point::new(chart, x));
        }
    }
    out
}
