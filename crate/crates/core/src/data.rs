//! Initial-data recipes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::spectral::{japanese, Band, Field, Grid, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DataRecipe {
    /// `exp(-(x-x0)^2 / (2 w^2)) exp(i v x)`.
    Gaussian {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// `sech((x-x0)/w) exp(i v x)`.
    Sech {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Coefficients `<xi>^{-s-1/2} z_k` with `z_k` standard complex Gaussians on the band.
    Rough {
        s: f64,
        seed: u64,
        /// Highest populated mode as a fraction of `K/2`; defaults to the solver band.
        #[serde(default)]
        band_fraction: Option<f64>,
    },
    /// Rough data with every mode above `kmax` removed.
    LowBand { kmax: i64, seed: u64 },
}

fn one() -> f64 {
    1.0
}

impl DataRecipe {
    /// Builds the field and rescales it so that `||f||_2 = target_norm` (when given).
    pub fn build(&self, grid: Grid, band: Band, target_norm: Option<f64>) -> Field {
        let f = match *self {
            DataRecipe::Gaussian { center, width, velocity } => gaussian(grid, center, width, velocity),
            DataRecipe::Sech { center, width, velocity } => sech(grid, center, width, velocity),
            DataRecipe::Rough { s, seed, band_fraction } => {
                let b = band_fraction.map(|fr| Band::retained(&grid, fr)).unwrap_or(band);
                rough(grid, b, s, seed)
            }
            DataRecipe::LowBand { kmax, seed } => rough(grid, Band { kmax: kmax.min(band.kmax) }, 0.5, seed),
        };
        match target_norm {
            Some(t) => rescaled(&f, t),
            None => f,
        }
    }
}

pub fn gaussian(grid: Grid, center: f64, width: f64, velocity: f64) -> Field {
    Field::from_fn(grid, |x| {
        let y = (x - center) / width;
        C64::from_polar((-0.5 * y * y).exp(), velocity * x)
    })
}

pub fn sech(grid: Grid, center: f64, width: f64, velocity: f64) -> Field {
    Field::from_fn(grid, |x| {
        let y = (x - center) / width;
        C64::from_polar(1.0 / y.cosh(), velocity * x)
    })
}

pub fn rough(grid: Grid, band: Band, s: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs: Vec<C64> = (grid.k_min()..=grid.k_max())
        .map(|k| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if band.contains(k) {
                C64::new(re, im) * (scale * japanese(grid.xi(k)).powf(-s - 0.5))
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    Field::from_coeffs(grid, coeffs).expect("finite coefficients")
}

pub fn rescaled(f: &Field, target_norm: f64) -> Field {
    let n = f.l2_norm();
    if n == 0.0 {
        f.clone()
    } else {
        f.scaled(target_norm / n)
    }
}
