//! Periodic spatial lattice plus uniform time mesh — the discretization
//! frame shared by every module.

use crate::error::Error;
use crate::Result;
use serde::Serialize;

/// Periodic lattice on `[0, L)^d` with `N` points per axis (power of two)
/// and a uniform time mesh of `n_steps` steps of size `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    d: usize,
    n: usize,
    len: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl Grid {
    pub fn new(d: usize, n: usize, len: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::domain(format!("dimension must be 1 or 2, got {d}")));
        }
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::domain(format!("points per axis must be a power of two, got {n}")));
        }
        if !(len > 0.0) {
            return Err(Error::domain(format!("period length must be > 0, got {len}")));
        }
        if !(dt > 0.0) || n_steps == 0 {
            return Err(Error::domain(format!("need dt > 0 and n_steps > 0, got dt={dt}, n_steps={n_steps}")));
        }
        Ok(Grid { d, n, len, dt, n_steps })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Period length per axis.
    pub fn len(&self) -> f64 {
        self.len
    }

    /// Lattice spacing `L / N`.
    pub fn dx(&self) -> f64 {
        self.len / self.n as f64
    }

    /// Total number of lattice cells `N^d`.
    pub fn cells(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Cell volume `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// Time horizon `T = n_steps · dt`.
    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    /// Explicit-scheme stability certificate: `dt ≤ dx²/(2 d K)` with `K`
    /// the ellipticity upper bound. Schemes with `θ ≥ 1/2` are exempt.
    pub fn stability_certificate(&self, theta: f64, ellipticity_upper: f64) -> Result<()> {
        if theta >= 0.5 {
            return Ok(());
        }
        let dt_max = self.dx() * self.dx() / (2.0 * self.d as f64 * ellipticity_upper);
        if self.dt <= dt_max {
            Ok(())
        } else {
            Err(Error::Stability { dt: self.dt, dt_max })
        }
    }

    /// Decompose a linear cell index into per-axis indices.
    pub fn coords(&self, idx: usize) -> [usize; 2] {
        debug_assert!(idx < self.cells());
        match self.d {
            1 => [idx, 0],
            _ => [idx % self.n, idx / self.n],
        }
    }

    /// Linear index of per-axis indices (each taken modulo N).
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        match self.d {
            1 => ix % self.n,
            _ => (ix % self.n) + self.n * (iy % self.n),
        }
    }

    /// Physical coordinates of a cell, in `[0, L)^d`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let c = self.coords(idx);
        [c[0] as f64 * self.dx(), c[1] as f64 * self.dx()]
    }

    /// Signed frequency index of an axis index: `k` for `k < N/2`, else
    /// `k - N`.
    pub fn signed_freq(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// `|ξ|²` of the linear spectral index under `ξ = 2π k̃ / L`.
    pub fn xi_sq(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        let base = 2.0 * std::f64::consts::PI / self.len;
        let kx = self.signed_freq(c[0]) as f64 * base;
        match self.d {
            1 => kx * kx,
            _ => {
                let ky = self.signed_freq(c[1]) as f64 * base;
                kx * kx + ky * ky
            }
        }
    }

    /// Minimum-image distance of a lattice offset from the origin.
    pub fn min_image_dist(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        let half = self.n / 2;
        let fold = |k: usize| -> f64 {
            let s = if k <= half { k as f64 } else { k as f64 - self.n as f64 };
            s * self.dx()
        };
        let x = fold(c[0]);
        match self.d {
            1 => x.abs(),
            _ => {
                let y = fold(c[1]);
                (x * x + y * y).sqrt()
            }
        }
    }

    /// Linear index shifted by a lattice offset (periodic).
    pub fn shifted(&self, idx: usize, sx: usize, sy: usize) -> usize {
        let c = self.coords(idx);
        self.index(c[0] + sx, c[1] + sy)
    }
}

/// Real array over the spatial lattice of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.cells()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("grid function entries must be finite".into()));
        }
        Ok(GridFunction { grid, values })
    }

    /// Build from physical coordinates in `[0, L)^d`.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.cells())
            .map(|idx| {
                let p = grid.point(idx);
                f(p[0], p[1])
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid functions live on different lattices".into()))
        }
    }

    /// Cell-weighted discrete `L_p` norm, `p ≥ 1`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        debug_assert!(p >= 1.0);
        let vol = self.grid.cell_volume();
        if p == 2.0 {
            (self.values.iter().map(|v| v * v).sum::<f64>() * vol).sqrt()
        } else {
            (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * vol).powf(1.0 / p)
        }
    }

    /// Pointwise translate by a lattice shift: `(τ_s f)(x) = f(x + s)`.
    pub fn translate(&self, sx: usize, sy: usize) -> GridFunction {
        let values = (0..self.grid.cells())
            .map(|idx| self.values[self.grid.shifted(idx, sx, sy)])
            .collect();
        GridFunction { grid: self.grid, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 100, 1.0, 0.1, 10).is_err()); // not a power of two
        assert!(Grid::new(3, 64, 1.0, 0.1, 10).is_err());
        assert!(Grid::new(1, 64, 0.0, 0.1, 10).is_err());
        assert!(Grid::new(2, 64, 1.0, 0.1, 10).is_ok());
        assert!(Grid::new(1, 1, 1.0, 0.1, 10).is_ok()); // 1 = 2^0 is allowed
    }

    #[test]
    fn stability_certificate() {
        let g = Grid::new(1, 64, 1.0, 1e-3, 10).unwrap();
        // dx = 1/64, dx² / (2·1·1) ≈ 1.22e-4 < 1e-3: explicit scheme refused
        assert!(g.stability_certificate(0.0, 1.0).is_err());
        // θ ≥ 1/2 exempt
        assert!(g.stability_certificate(0.5, 1.0).is_ok());
    }

    #[test]
    fn index_round_trip_2d() {
        let g = Grid::new(2, 8, 4.0, 0.1, 5).unwrap();
        for idx in 0..g.cells() {
            let c = g.coords(idx);
            assert_eq!(g.index(c[0], c[1]), idx);
        }
        assert_eq!(g.shifted(g.index(7, 7), 1, 1), g.index(0, 0));
    }

    #[test]
    fn min_image_distance_folds() {
        let g = Grid::new(1, 8, 8.0, 0.1, 5).unwrap();
        assert_relative_eq!(g.min_image_dist(1), 1.0);
        assert_relative_eq!(g.min_image_dist(7), 1.0); // wraps to -1
        assert_relative_eq!(g.min_image_dist(4), 4.0);
    }

    #[test]
    fn lp_norm_cell_weighted() {
        let g = Grid::new(1, 4, 2.0, 0.1, 5).unwrap();
        let f = GridFunction::constant(g, 3.0);
        // (Σ 3^p · dx)^{1/p} = 3 · L^{1/p}
        assert_relative_eq!(f.lp_norm(2.0), 3.0 * 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(f.lp_norm(4.0), 3.0 * 2f64.powf(0.25), max_relative = 1e-14);
    }
}
