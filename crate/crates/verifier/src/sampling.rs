use harmorph::error::{GeometryError, Result};
use harmorph::field::{ChartId, Point};
use harmorph::region::Region;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Draws beyond `REJECTION_LIMIT × count` mean the acceptance rate is below 1%.
const REJECTION_LIMIT: usize = 100;

/// 64-bit FNV-1a, stable across platforms and releases.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Stream generator for a named consumer of the global seed.
pub fn stream(seed: u64, name: &str) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed ^ fnv1a(name))
}

/// Uniform rejection sampling in the margin-shrunk box of `region`,
/// keeping points that satisfy every constraint at that margin.
pub fn sample_points(
    region: &Region,
    chart: ChartId,
    count: usize,
    seed: u64,
    name: &str,
    margin: f64,
) -> Result<Vec<Point>> {
    let (lo, hi) = region.shrunk(margin)?;
    let mut rng = stream(seed, name);
    let mut out = Vec::with_capacity(count);
    let mut draws = 0usize;
    while out.len() < count {
        if draws >= REJECTION_LIMIT * count.max(1) {
            return Err(GeometryError::Sampling(format!(
                "`{name}`: accepted {} of {draws} draws (rejection rate above 99%)",
                out.len()
            )));
        }
        draws += 1;
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
            .collect();
        if region.contains(&x, margin) {
            out.push(Point::new(chart, x));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let r = Region::cube(3, 1.0);
        let c = ChartId("R3");
        let a = sample_points(&r, c, 10, 7, "box", 0.0).unwrap();
        assert_eq!(a, sample_points(&r, c, 10, 7, "box", 0.0).unwrap());
        assert_ne!(a, sample_points(&r, c, 10, 8, "box", 0.0).unwrap());
        assert_ne!(a, sample_points(&r, c, 10, 7, "other", 0.0).unwrap());
    }

    #[test]
    fn tiny_acceptance_is_an_error() {
        let r = Region::cube(4, 1.0).with_constraint("corner", |x, _| x.iter().all(|v| *v > 0.9));
        assert!(matches!(
            sample_points(&r, ChartId("R4"), 50, 1, "corner", 0.0),
            Err(GeometryError::Sampling(_))
        ));
    }
}
