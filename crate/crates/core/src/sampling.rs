//! Seeded random band-limited fields.
//!
//! The generator is ChaCha8 seeded from a `u64`, so a seed yields the same
//! samples on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::torus::{Field, MeanZeroField, TorusGrid};

pub const DEFAULT_SEED: u64 = 42;
/// Highest wavenumber per axis in a sample.
pub const DEFAULT_BAND: i32 = 4;

pub struct FieldSampler {
    rng: ChaCha8Rng,
    band: i32,
}

impl FieldSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_band(seed, DEFAULT_BAND)
    }

    pub fn with_band(seed: u64, band: i32) -> Self {
        assert!(band >= 1, "band must be at least 1");
        FieldSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            band,
        }
    }

    /// `Σ (a cos 2π(kx+ly) + b sin 2π(kx+ly)) / (1 + k² + l²)` over the
    /// half-plane of modes with `|k|, |l| ≤ band`, coefficients uniform in
    /// `[−1, 1]`.
    pub fn field(&mut self, grid: TorusGrid) -> MeanZeroField {
        let b = self.band;
        let mut modes = Vec::new();
        for k in 0..=b {
            for l in -b..=b {
                if k == 0 && l <= 0 {
                    continue;
                }
                let w = 1.0 / (1.0 + (k * k + l * l) as f64);
                let a = self.rng.gen_range(-1.0..=1.0) * w;
                let s = self.rng.gen_range(-1.0..=1.0) * w;
                modes.push((k as f64, l as f64, a, s));
            }
        }
        // cos/sin of 2π(kx + ly) expanded into per-axis tables
        let n = grid.n();
        let tau = 2.0 * std::f64::consts::PI;
        let table = |m: f64| -> (Vec<f64>, Vec<f64>) {
            (0..n).map(|i| (tau * m * i as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).unzip()
        };
        let mut values = vec![0.0; n * n];
        for &(k, l, a, s) in &modes {
            let (cx, sx) = table(k);
            let (cy, sy) = table(l);
            for i in 0..n {
                let row = &mut values[i * n..(i + 1) * n];
                for j in 0..n {
                    let c = cx[i] * cy[j] - sx[i] * sy[j];
                    let si = sx[i] * cy[j] + cx[i] * sy[j];
                    row[j] += a * c + s * si;
                }
            }
        }
        MeanZeroField::project(Field::from_values(grid, values).expect("finite samples"))
    }

    /// A sample rescaled to energy norm `norm`.
    pub fn field_with_norm(&mut self, grid: TorusGrid, norm: f64) -> MeanZeroField {
        let f = self.field(grid);
        let current = crate::torus::h1_norm_sq(&f).sqrt();
        f.scaled(norm / current)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
}
