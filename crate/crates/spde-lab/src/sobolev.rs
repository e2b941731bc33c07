//! Fractional Sobolev norms on the torus through Bessel-potential Fourier
//! multipliers, the `(u, φ)` duality pairing, and the stencil-Laplacian
//! comparison inequality used by the weak-formulation analysis.

use crate::error::Error;
use crate::fft::TorusFft;
use crate::grid::{Grid, GridFunction};
use crate::Result;
use std::collections::HashMap;

/// Applies `(1 - Δ)^{n/2}`, i.e. the Fourier multiplier `(1 + |ξ|²)^{n/2}`,
/// on the torus.
pub fn bessel_potential(u: &GridFunction, n: f64) -> GridFunction {
    let fft = TorusFft::new(u.grid);
    bessel_potential_with(&fft, u, n)
}

/// Same as [`bessel_potential`] with a reusable plan.
pub fn bessel_potential_with(fft: &TorusFft, u: &GridFunction, n: f64) -> GridFunction {
    let grid = u.grid;
    let mut spec = fft.forward(&u.values);
    for (idx, v) in spec.iter_mut().enumerate() {
        *v *= (1.0 + grid.xi_sq(idx)).powf(0.5 * n);
    }
    GridFunction { grid, values: fft.inverse(&spec) }
}

/// Cell-weighted `L_p` norm of `(1 - Δ)^{n/2} u`.
pub fn sobolev_norm(u: &GridFunction, n: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("exponent p must be >= 1, got {p}")));
    }
    Ok(bessel_potential(u, n).lp_norm(p))
}

/// The duality pairing `(u, φ) = Σ (1-Δ)^{n/2}u · (1-Δ)^{-n/2}φ · dx^d`;
/// independent of `n` in exact arithmetic.
pub fn sobolev_pairing(u: &GridFunction, phi: &GridFunction, n: f64) -> Result<f64> {
    u.same_grid(phi)?;
    let a = bessel_potential(u, n);
    let b = bessel_potential(phi, -n);
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * u.grid.cell_volume())
}

/// Multiplier caches for repeated norm evaluations on one grid.
pub struct SobolevNormCalculator {
    grid: Grid,
    fft: TorusFft,
    multipliers: HashMap<u64, Vec<f64>>,
}

impl SobolevNormCalculator {
    pub fn new(grid: Grid) -> Self {
        SobolevNormCalculator { grid, fft: TorusFft::new(grid), multipliers: HashMap::new() }
    }

    /// Multiplier array `(1 + |ξ_k|²)^{n/2}`; the zero-frequency entry is 1
    /// for every order.
    pub fn multiplier(&mut self, n: f64) -> &[f64] {
        let grid = self.grid;
        self.multipliers.entry(n.to_bits()).or_insert_with(|| {
            (0..grid.cells()).map(|idx| (1.0 + grid.xi_sq(idx)).powf(0.5 * n)).collect()
        })
    }

    pub fn apply(&mut self, u: &GridFunction, n: f64) -> GridFunction {
        let mut spec = self.fft.forward(&u.values);
        let mult = self.multiplier(n);
        for (v, m) in spec.iter_mut().zip(mult) {
            *v *= *m;
        }
        GridFunction { grid: self.grid, values: self.fft.inverse(&spec) }
    }

    pub fn norm(&mut self, u: &GridFunction, n: f64, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::domain(format!("exponent p must be >= 1, got {p}")));
        }
        Ok(self.apply(u, n).lp_norm(p))
    }
}

/// Standard `2d+1`-point second-difference Laplacian.
pub fn laplacian_stencil(u: &GridFunction) -> GridFunction {
    let grid = u.grid;
    let n = grid.n();
    let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    let mut out = vec![0.0; grid.cells()];
    match grid.dim() {
        1 => {
            for i in 0..n {
                let c = u.values[i];
                let l = u.values[(i + n - 1) % n];
                let r = u.values[(i + 1) % n];
                out[i] = (l - 2.0 * c + r) * inv_dx2;
            }
        }
        _ => {
            for iy in 0..n {
                for ix in 0..n {
                    let idx = grid.index(ix, iy);
                    let c = u.values[idx];
                    let xm = u.values[grid.index(ix + n - 1, iy)];
                    let xp = u.values[grid.index(ix + 1, iy)];
                    let ym = u.values[grid.index(ix, iy + n - 1)];
                    let yp = u.values[grid.index(ix, iy + 1)];
                    out[idx] = (xm + xp + ym + yp - 4.0 * c) * inv_dx2;
                }
            }
        }
    }
    GridFunction { grid, values: out }
}

/// Symbol of the stencil Laplacian at a spectral index:
/// `σ_h(k) = Σ_axes 2(1 - cos(ξ dx))/dx²` (so that `Δ_h e_k = -σ_h e_k`).
pub fn stencil_symbol(grid: Grid, idx: usize) -> f64 {
    let dx = grid.dx();
    let base = 2.0 * std::f64::consts::PI / grid.len();
    let c = grid.coords(idx);
    let mut s = 0.0;
    for axis in 0..grid.dim() {
        let xi = grid.signed_freq(c[axis]) as f64 * base;
        s += 2.0 * (1.0 - (xi * dx).cos()) / (dx * dx);
    }
    s
}

/// Ratio `‖(1-Δ)^α ψ‖_q / (‖Δ_h ψ‖_q + ‖ψ‖_q)` with the stencil Laplacian
/// in the denominator; the comparison constant of the smoothing inequality
/// is the empirical supremum of this ratio.
pub fn smoothing_ratio(psi: &GridFunction, alpha: f64, q: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(q > 1.0) {
        return Err(Error::domain(format!("q must lie in (1, inf), got {q}")));
    }
    let denom = laplacian_stencil(psi).lp_norm(q) + psi.lp_norm(q);
    if denom == 0.0 {
        return Err(Error::Degenerate("smoothing_ratio: psi is identically zero".into()));
    }
    let num = bessel_potential(psi, 2.0 * alpha).lp_norm(q);
    Ok(num / denom)
}
