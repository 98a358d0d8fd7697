//! Seed-deterministic band-limited random fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{HVectorField, ScalarField};
use crate::grid::{FieldBc, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub count: usize,
    /// Highest wavenumber per axis.
    pub cutoff: usize,
    /// Coefficients scale like `(1 + |k|)^(-decay)`.
    pub decay: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(count: usize, cutoff: usize, decay: f64, seed: u64) -> Result<Self> {
        let s = Self {
            count,
            cutoff,
            decay,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidArgument("ensemble count must be >= 1".into()));
        }
        if !self.decay.is_finite() {
            return Err(Error::InvalidArgument("ensemble decay must be finite".into()));
        }
        Ok(())
    }

    /// Generator for member `index`; members are independent streams.
    pub fn member_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Evaluates `f` on every member in parallel; results are in member
    /// order regardless of scheduling.
    pub fn map_members<T: Send>(
        &self,
        f: impl Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
    ) -> Vec<T> {
        (0..self.count)
            .into_par_iter()
            .map(|i| {
                let mut rng = self.member_rng(i);
                f(i, &mut rng)
            })
            .collect()
    }
}

/// Basis on `[0, len]`: index 0 is the constant, `2k - 1` is
/// `cos(pi k s / len)` and `2k` is `sin(pi k s / len)`.
fn basis(n: usize, spacing: f64, len: f64, cutoff: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let m = 2 * cutoff + 1;
    let mut rows = Vec::with_capacity(m);
    let mut wavenumbers = Vec::with_capacity(m);
    for a in 0..m {
        let k = (a + 1) / 2;
        wavenumbers.push(k);
        rows.push(
            (0..n)
                .map(|i| {
                    let s = (i as f64 + 0.5) * spacing;
                    let arg = PI * k as f64 * s / len;
                    if a == 0 {
                        1.0
                    } else if a % 2 == 1 {
                        arg.cos()
                    } else {
                        arg.sin()
                    }
                })
                .collect(),
        );
    }
    (rows, wavenumbers)
}

/// Random trigonometric sum with at most `cutoff` half-waves per axis and
/// coefficients uniform in `[-amplitude, amplitude] * (1 + |k|)^(-decay)`.
pub fn band_limited_field(
    grid: GridSpec,
    bc: FieldBc,
    cutoff: usize,
    decay: f64,
    amplitude: f64,
    rng: &mut impl Rng,
) -> ScalarField {
    let (bx, kx) = basis(grid.nx, grid.dx, grid.lx, cutoff);
    let (by, ky) = basis(grid.ny, grid.dy, grid.ly, cutoff);
    let (bz, kz) = basis(grid.nz, grid.dz, grid.h, cutoff);
    let m = 2 * cutoff + 1;
    let mut coef = vec![0.0; m * m * m];
    for c in 0..m {
        for b in 0..m {
            for a in 0..m {
                let k2 = (kx[a] * kx[a] + ky[b] * ky[b] + kz[c] * kz[c]) as f64;
                let u: f64 = rng.gen_range(-1.0..=1.0);
                coef[a + m * (b + m * c)] = amplitude * u * (1.0 + k2.sqrt()).powf(-decay);
            }
        }
    }
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    // Contract one axis at a time.
    let mut t1 = vec![0.0; nx * m * m];
    for bc_ in 0..m * m {
        for a in 0..m {
            let w = coef[a + m * bc_];
            if w == 0.0 {
                continue;
            }
            for i in 0..nx {
                t1[i + nx * bc_] += w * bx[a][i];
            }
        }
    }
    let mut t2 = vec![0.0; nx * ny * m];
    for c in 0..m {
        for b in 0..m {
            for j in 0..ny {
                let w = by[b][j];
                for i in 0..nx {
                    t2[i + nx * (j + ny * c)] += w * t1[i + nx * (b + m * c)];
                }
            }
        }
    }
    let mut data = vec![0.0; grid.n_cells()];
    for k in 0..nz {
        for c in 0..m {
            let w = bz[c][k];
            let src = &t2[nx * ny * c..nx * ny * (c + 1)];
            let dst = &mut data[nx * ny * k..nx * ny * (k + 1)];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    ScalarField { grid, data, bc }
}

pub fn band_limited_vector(
    grid: GridSpec,
    bc: FieldBc,
    cutoff: usize,
    decay: f64,
    amplitude: f64,
    rng: &mut impl Rng,
) -> HVectorField {
    HVectorField {
        x: band_limited_field(grid, bc, cutoff, decay, amplitude, rng),
        y: band_limited_field(grid, bc, cutoff, decay, amplitude, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let g = GridSpec::new(1.0, 1.0, 0.5, 8, 6, 4).unwrap();
        let spec = EnsembleSpec::new(3, 3, 1.5, 42).unwrap();
        let a = band_limited_field(g, FieldBc::neumann(), 3, 1.5, 1.0, &mut spec.member_rng(1));
        let b = band_limited_field(g, FieldBc::neumann(), 3, 1.5, 1.0, &mut spec.member_rng(1));
        let c = band_limited_field(g, FieldBc::neumann(), 3, 1.5, 1.0, &mut spec.member_rng(2));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn contraction_matches_direct_sum() {
        let g = GridSpec::new(1.0, 2.0, 0.5, 5, 4, 4).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let f = band_limited_field(g, FieldBc::neumann(), 1, 0.0, 1.0, &mut r1);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let basis1 = |k: usize, s: f64, len: f64| match k {
            0 => 1.0,
            1 => (PI * s / len).cos(),
            _ => (PI * s / len).sin(),
        };
        let mut coef = [0.0; 27];
        for c in coef.iter_mut() {
            *c = r2.gen_range(-1.0..=1.0);
        }
        let direct = ScalarField::from_fn(g, FieldBc::neumann(), |x, y, z| {
            let mut s = 0.0;
            for c in 0..3 {
                for b in 0..3 {
                    for a in 0..3 {
                        s += coef[a + 3 * (b + 3 * c)]
                            * basis1(a, x, g.lx)
                            * basis1(b, y, g.ly)
                            * basis1(c, z + g.h, g.h);
                    }
                }
            }
            s
        });
        for (p, q) in f.data.iter().zip(&direct.data) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn members_come_back_in_order() {
        let spec = EnsembleSpec::new(16, 2, 1.0, 3).unwrap();
        let out = spec.map_members(|i, rng| (i, rng.gen::<u64>()));
        let again = spec.map_members(|i, rng| (i, rng.gen::<u64>()));
        assert_eq!(out, again);
        assert!(out.iter().enumerate().all(|(i, (j, _))| i == *j));
    }

    #[test]
    fn zero_count_rejected() {
        assert!(EnsembleSpec::new(0, 2, 1.0, 0).is_err());
    }
}
