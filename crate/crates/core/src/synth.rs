//! Synthetic Gaussian-mixture data for benchmarks and tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Dataset, Embedding};
use crate::error::{Error, Result};

pub const COMPONENTS: usize = 8;
pub const RADIUS: f64 = 10.0;

/// Center of mixture component `c` in `m` dimensions. The first two
/// coordinates lie on a circle of radius [`RADIUS`]; the others vary with
/// the component so every attribute carries some signal.
pub fn component_center(c: usize, m: usize) -> Vec<f64> {
    let theta = 2.0 * std::f64::consts::PI * c as f64 / COMPONENTS as f64;
    (0..m)
        .map(|j| match j {
            0 => RADIUS * theta.cos(),
            1 => RADIUS * theta.sin(),
            _ => 0.5 * RADIUS * ((j as f64) * theta + j as f64).sin(),
        })
        .collect()
}

/// `n` points from an 8-component unit-variance mixture in `m >= 2`
/// dimensions; the embedding is the first two coordinates. Point `i` comes
/// from component `i % 8`.
pub fn gaussian_mixture(n: usize, m: usize, seed: u64) -> Result<(Dataset, Embedding)> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 features, got {m}")));
    }
    let centers: Vec<Vec<f64>> = (0..COMPONENTS).map(|c| component_center(c, m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            centers[i % COMPONENTS]
                .iter()
                .map(|&mu| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + z
                })
                .collect()
        })
        .collect();
    let names = (0..m).map(|j| format!("f{j}")).collect();
    let data = Dataset::numeric(names, &rows)?;
    let embedding = Embedding::new(rows.iter().map(|r| [r[0], r[1]]).collect())?;
    Ok((data, embedding))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let (d, e) = gaussian_mixture(100, 9, 1).unwrap();
        assert_eq!((d.n(), d.m(), e.len()), (100, 9, 100));
        assert_eq!(
            e.coords()[5],
            [d.numeric_row(5).unwrap()[0], d.numeric_row(5).unwrap()[1]]
        );
        let (d2, _) = gaussian_mixture(100, 9, 1).unwrap();
        assert_eq!(d, d2);
        assert!(gaussian_mixture(10, 1, 0).is_err());
    }

    #[test]
    fn centers_on_circle() {
        for c in 0..COMPONENTS {
            let v = component_center(c, 2);
            assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - RADIUS).abs() < 1e-12);
        }
    }
}
