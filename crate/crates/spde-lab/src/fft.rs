//! Torus Fourier transforms with the crate's fixed convention baked in:
//!
//! ```text
//! forward:  f̂(ξ_k) = Σ_j f(x_j) e^{-i ξ_k · x_j} dx^d
//! inverse:  f(x_j) = (1/L^d) Σ_k f̂(ξ_k) e^{+i ξ_k · x_j}
//! ```
//!
//! with `ξ_k = 2π k̃ / L`. The discrete Parseval identity then reads
//! `Σ_j f g dx^d = (1/L^d) Σ_k f̂ conj(ĝ)`.

use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Spectrum of a grid function: one complex amplitude per lattice mode,
/// laid out exactly like the spatial data.
pub type Spectrum = Vec<Complex64>;

/// Planned transforms for one grid; build once and reuse in hot loops.
pub struct TorusFft {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl TorusFft {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n());
        let inv = planner.plan_fft_inverse(grid.n());
        TorusFft { grid, fwd, inv }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn transform_nd(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let plan = if inverse { &self.inv } else { &self.fwd };
        match self.grid.dim() {
            1 => plan.process(data),
            _ => {
                // rows (contiguous), then columns via a scratch strip
                for row in data.chunks_exact_mut(n) {
                    plan.process(row);
                }
                let mut strip = vec![Complex64::default(); n];
                for col in 0..n {
                    for (i, s) in strip.iter_mut().enumerate() {
                        *s = data[i * n + col];
                    }
                    plan.process(&mut strip);
                    for (i, s) in strip.iter().enumerate() {
                        data[i * n + col] = *s;
                    }
                }
            }
        }
    }

    /// Forward transform of a real field.
    pub fn forward(&self, real: &[f64]) -> Spectrum {
        debug_assert_eq!(real.len(), self.grid.cells());
        let mut data: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_nd(&mut data, false);
        let scale = self.grid.cell_volume();
        for v in &mut data {
            *v *= scale;
        }
        data
    }

    /// Forward transform of complex data, in place.
    pub fn forward_complex(&self, data: &mut [Complex64]) {
        self.transform_nd(data, false);
        let scale = self.grid.cell_volume();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Inverse transform; returns the real part (imaginary residue of a
    /// Hermitian spectrum is at rounding level).
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(spec.len(), self.grid.cells());
        let mut data = spec.to_vec();
        self.transform_nd(&mut data, true);
        let scale = 1.0 / self.grid.len().powi(self.grid.dim() as i32);
        data.into_iter().map(|v| v.re * scale).collect()
    }

    /// Inverse transform keeping the complex values.
    pub fn inverse_complex(&self, spec: &[Complex64]) -> Spectrum {
        let mut data = spec.to_vec();
        self.transform_nd(&mut data, true);
        let scale = 1.0 / self.grid.len().powi(self.grid.dim() as i32);
        for v in &mut data {
            *v *= scale;
        }
        data
    }

    /// Circular convolution with the cell-weighted sum:
    /// `(f * g)(x) = Σ_y f(x-y) g(y) dx^d`.
    pub fn convolve(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let fh = self.forward(f);
        let gh = self.forward(g);
        let prod: Spectrum = fh.iter().zip(&gh).map(|(a, b)| a * b).collect();
        self.inverse(&prod)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;
    use approx::assert_relative_eq;

    #[test]
    fn constant_transforms_to_dc_mass() {
        let g = Grid::new(1, 16, 4.0, 0.1, 1).unwrap();
        let fft = TorusFft::new(g);
        let spec = fft.forward(&vec![2.5; 16]);
        assert_relative_eq!(spec[0].re, 2.5 * 4.0, max_relative = 1e-13);
        for k in 1..16 {
            assert!(spec[k].norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_1d_and_2d() {
        for (d, n) in [(1usize, 32usize), (2, 8)] {
            let g = Grid::new(d, n, 3.0, 0.1, 1).unwrap();
            let f = GridFunction::from_fn(g, |x, y| (x * 2.1).sin() + 0.3 * (y * 1.7).cos() + 0.1 * x * y);
            let fft = TorusFft::new(g);
            let back = fft.inverse(&fft.forward(&f.values));
            for (a, b) in f.values.iter().zip(&back) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn parseval_identity() {
        let g = Grid::new(2, 16, 5.0, 0.1, 1).unwrap();
        let f = GridFunction::from_fn(g, |x, y| (1.3 * x).cos() * (0.9 * y).sin() + 0.2);
        let fft = TorusFft::new(g);
        let spec = fft.forward(&f.values);
        let phys: f64 = f.values.iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        let spect: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() / g.len().powi(2);
        assert_relative_eq!(phys, spect, max_relative = 1e-12);
    }

    #[test]
    fn convention_matches_continuum_gaussian_transform() {
        // tabulated e^{-x²/2} on a wide torus transforms to √(2π) e^{-ξ²/2}
        let g = Grid::new(1, 512, 40.0, 0.1, 1).unwrap();
        let f = GridFunction::from_fn(g, |x, _| {
            let r = if x > 20.0 { x - 40.0 } else { x };
            (-0.5 * r * r).exp()
        });
        let fft = TorusFft::new(g);
        let spec = fft.forward(&f.values);
        for k in [0usize, 1, 5, 20, 40] {
            let xi = 2.0 * std::f64::consts::PI * g.signed_freq(k) as f64 / g.len();
            let want = (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * xi * xi).exp();
            assert_relative_eq!(spec[k].re, want, max_relative = 1e-9, epsilon = 1e-12);
            assert!(spec[k].im.abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_theorem_matches_direct_sum() {
        let g = Grid::new(1, 16, 2.0, 0.1, 1).unwrap();
        let f = GridFunction::from_fn(g, |x, _| (3.1 * x).sin());
        let h = GridFunction::from_fn(g, |x, _| (-x).exp());
        let fft = TorusFft::new(g);
        let conv = fft.convolve(&f.values, &h.values);
        for x_idx in [0usize, 3, 9] {
            let mut direct = 0.0;
            for y_idx in 0..16 {
                let diff = (x_idx + 16 - y_idx) % 16;
                direct += f.values[diff] * h.values[y_idx] * g.cell_volume();
            }
            assert_relative_eq!(conv[x_idx], direct, epsilon = 1e-12);
        }
    }
}
