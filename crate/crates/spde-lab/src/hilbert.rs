//! Discrete realization of the reproducing Hilbert space H of the noise on
//! the periodic lattice: the inner product `<f,g>_H = Σ_z C(z)(f*g̃)(z)dx^d`,
//! its complete orthonormal system, the fields `v_k`, and the smoothed
//! H-norm field `h̄` behind the norm identity of the noise coefficient.
//!
//! Construction of the torus covariance pair `(C, S)`:
//!
//! * white noise — exact: `C = δ/dx^d`, `S ≡ 1`;
//! * gaussian / exponential — physical folding of Γ over periodic images,
//!   then `S = DFT(C)` with tiny negative eigenvalues clipped (budget
//!   reported and bounded);
//! * riesz — the image sum diverges, so the lattice pair is built from the
//!   spectral side: `S[k] = (2π)^d ·` (cell average of μ over the k-th
//!   frequency cell, with the singular origin cell integrated exactly),
//!   and `C = IDFT(S)`.
//!
//! After construction the pair is self-consistent (`S = DFT(C)` exactly),
//! so every downstream identity (Parseval, the Fubini chain, sampler
//! covariance) is exact linear algebra up to rounding.

use crate::correlation::{nu_finite_rule, CorrelationModel, Covariance};
use crate::error::Error;
use crate::fft::TorusFft;
use crate::grid::{Grid, GridFunction};
use crate::Result;
use num_complex::Complex64;

/// Default budget for clipped negative spectral mass, as a fraction of the
/// total spectral mass.
pub const CLIP_BUDGET: f64 = 1e-6;

/// Discrete reproducing Hilbert structure; immutable after construction.
pub struct HilbertStructure {
    grid: Grid,
    model: CorrelationModel,
    correlation_on_torus: Vec<f64>,
    spectral_weights: Vec<f64>,
    clipped_mass: f64,
    clipped_fraction: f64,
    fold_tail_fraction: f64,
    fft: TorusFft,
}

impl std::fmt::Debug for HilbertStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HilbertStructure")
            .field("grid", &self.grid)
            .field("model", &self.model)
            .field("clipped_mass", &self.clipped_mass)
            .field("clipped_fraction", &self.clipped_fraction)
            .field("fold_tail_fraction", &self.fold_tail_fraction)
            .finish()
    }
}

/// 5-point Gauss-Legendre rule on [-1, 1].
const GL5_X: [f64; 5] = [-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664];
const GL5_W: [f64; 5] = [0.23692688505618908, 0.47862867049936647, 0.5688888888888889, 0.47862867049936647, 0.23692688505618908];

impl HilbertStructure {
    /// Build with the default clip policy (only roundoff negatives).
    pub fn build(grid: Grid, model: &CorrelationModel) -> Result<Self> {
        Self::build_with_clip_floor(grid, model, 0.0)
    }

    /// Build and additionally clip spectral weights below
    /// `floor · max(S)` to zero (used to study clipping effects; the
    /// default policy is floor = 0).
    pub fn build_with_clip_floor(grid: Grid, model: &CorrelationModel, floor: f64) -> Result<Self> {
        if grid.dim() != model.dim() {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} vs model dimension {}",
                grid.dim(),
                model.dim()
            )));
        }
        let fft = TorusFft::new(grid);
        let cells = grid.cells();
        let (mut s_raw, fold_tail_fraction) = match model.kind() {
            Covariance::WhiteNoise => (vec![1.0; cells], 0.0),
            Covariance::Riesz { .. } => (spectral_cells(grid, model)?, 0.0),
            _ => {
                let (c, tail) = fold_covariance(grid, model)?;
                let spec = fft.forward(&c);
                (spec.iter().map(|v| v.re).collect::<Vec<f64>>(), tail)
            }
        };
        // symmetrize over k <-> -k (kills rounding asymmetry; exact for the
        // analytic spectrum)
        for idx in 0..cells {
            let nidx = negate_index(grid, idx);
            if nidx > idx {
                let avg = 0.5 * (s_raw[idx] + s_raw[nidx]);
                s_raw[idx] = avg;
                s_raw[nidx] = avg;
            }
        }
        let total: f64 = s_raw.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return Err(Error::Degenerate("all-zero spectrum (degenerate covariance)".into()));
        }
        let cut = floor * s_raw.iter().cloned().fold(0.0, f64::max);
        let mut clipped_mass = 0.0;
        let mut s = s_raw;
        for v in &mut s {
            if *v < 0.0 || *v <= cut {
                clipped_mass += v.abs();
                *v = 0.0;
            }
        }
        let clipped_fraction = clipped_mass / total;
        let negatives_only = floor == 0.0;
        if negatives_only && clipped_fraction > CLIP_BUDGET {
            return Err(Error::Degenerate(format!(
                "clipped negative spectral mass {clipped_fraction:.3e} exceeds budget {CLIP_BUDGET:.1e}"
            )));
        }
        if s.iter().all(|v| *v == 0.0) {
            return Err(Error::Degenerate("clipping removed the entire spectrum".into()));
        }
        // covariance consistent with the clipped spectrum
        let correlation_on_torus = match model.kind() {
            Covariance::WhiteNoise => {
                let mut c = vec![0.0; cells];
                c[0] = 1.0 / grid.cell_volume();
                c
            }
            _ => {
                let spec: Vec<Complex64> = s.iter().map(|v| Complex64::new(*v, 0.0)).collect();
                fft.inverse(&spec)
            }
        };
        Ok(HilbertStructure {
            grid,
            model: model.clone(),
            correlation_on_torus,
            spectral_weights: s,
            clipped_mass,
            clipped_fraction,
            fold_tail_fraction,
            fft,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn model(&self) -> &CorrelationModel {
        &self.model
    }

    /// Torus covariance `C[j]` at lattice offsets.
    pub fn correlation_on_torus(&self) -> &[f64] {
        &self.correlation_on_torus
    }

    /// Eigenvalues `S[k] ≥ 0` of the circulant Gram operator.
    pub fn spectral_weights(&self) -> &[f64] {
        &self.spectral_weights
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    /// Relative contribution of periodic images to the folded covariance,
    /// on the C(0) scale (zero when the construction is spectral).
    pub fn fold_tail_fraction(&self) -> f64 {
        self.fold_tail_fraction
    }

    pub fn fft(&self) -> &TorusFft {
        &self.fft
    }

    /// `<f, g>_H = Σ_z C(z) (f * g̃)(z) dx^d`, evaluated spectrally as
    /// `(1/L^d) Σ_k S[k] f̂_k conj(ĝ_k)`.
    pub fn h_inner(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let fh = self.fft.forward(&f.values);
        let gh = self.fft.forward(&g.values);
        let mut acc = 0.0;
        for ((a, b), s) in fh.iter().zip(&gh).zip(&self.spectral_weights) {
            acc += s * (a * b.conj()).re;
        }
        Ok(acc / self.grid.len().powi(self.grid.dim() as i32))
    }

    pub fn h_norm_sq(&self, f: &GridFunction) -> Result<f64> {
        self.h_inner(f, f)
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("grid function does not live on this structure's lattice".into()))
        }
    }

    /// Orthonormal family of the circulant Gram operator: real Fourier
    /// modes normalized in `<·,·>_H`, zero-weight directions dropped.
    pub fn build_cons(&self) -> Result<Cons> {
        let grid = self.grid;
        let ld = grid.len().powi(grid.dim() as i32);
        let mut modes = Vec::new();
        for idx in 0..grid.cells() {
            let s = self.spectral_weights[idx];
            if s <= 0.0 {
                continue;
            }
            let nidx = negate_index(grid, idx);
            let norm = 1.0 / (s * ld).sqrt();
            if nidx == idx {
                modes.push(ConsMode { spectral_index: idx, phase: Phase::Cos, weight: s, norm, self_paired: true });
            } else if idx < nidx {
                modes.push(ConsMode { spectral_index: idx, phase: Phase::Cos, weight: s, norm, self_paired: false });
                modes.push(ConsMode { spectral_index: idx, phase: Phase::Sin, weight: s, norm, self_paired: false });
            }
        }
        if modes.is_empty() {
            return Err(Error::Degenerate("no positive spectral weight: cannot build a CONS".into()));
        }
        Ok(Cons { grid, modes })
    }

    /// `v_k(x) = Σ_y C(y) e_k(x - y) dx^d`, the covariance-smoothed CONS
    /// member.
    pub fn v_field(&self, e: &GridFunction) -> Result<GridFunction> {
        self.check(e)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self.fft.convolve(&self.correlation_on_torus, &e.values),
        })
    }

    /// Lattice kernel of `(1 - Δ)^{-η/2}`: the inverse transform of the
    /// multiplier `(1 + |ξ_k|²)^{-η/2}`. This is the kernel used in
    /// [`Self::h_bar`], so the Fubini–Parseval chain is exact on the
    /// lattice.
    pub fn lattice_bessel_kernel(&self, eta: f64) -> GridFunction {
        let grid = self.grid;
        let spec: Vec<Complex64> = (0..grid.cells())
            .map(|idx| Complex64::new((1.0 + grid.xi_sq(idx)).powf(-0.5 * eta), 0.0))
            .collect();
        GridFunction { grid, values: self.fft.inverse(&spec) }
    }

    /// `h̄(x) = ||R_η(x - ·) h||_H` with the lattice Bessel kernel.
    ///
    /// Requires `ν_{η,d} < ∞` for this structure's model.
    pub fn h_bar(&self, h: &GridFunction, eta: f64) -> Result<GridFunction> {
        self.check(h)?;
        if !nu_finite_rule(&self.model, eta) {
            return Err(Error::Admissibility(format!(
                "nu_(eta,d) is infinite for this model at eta = {eta}; h_bar undefined"
            )));
        }
        let r_lat = self.lattice_bessel_kernel(eta);
        let grid = self.grid;
        let n = grid.n();
        let ld = grid.len().powi(grid.dim() as i32);
        let mut out = vec![0.0; grid.cells()];
        let mut g = vec![0.0; grid.cells()];
        for x_idx in 0..grid.cells() {
            let xc = grid.coords(x_idx);
            for y_idx in 0..grid.cells() {
                let yc = grid.coords(y_idx);
                // R(x - y): lattice offset with wrap
                let off = grid.index(xc[0] + n - yc[0] % n, xc[1] + n - yc[1] % n);
                g[y_idx] = r_lat.values[off] * h.values[y_idx];
            }
            let gh = self.fft.forward(&g);
            let mut acc = 0.0;
            for (a, s) in gh.iter().zip(&self.spectral_weights) {
                acc += s * a.norm_sqr();
            }
            out[x_idx] = (acc / ld).max(0.0).sqrt();
        }
        Ok(GridFunction { grid, values: out })
    }

    /// Debug dump of the torus pair: one row per lattice index with the
    /// spectral weight and the covariance value.
    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("index,spectral_weight,correlation\n");
        for idx in 0..self.grid.cells() {
            s.push_str(&format!("{idx},{},{}\n", self.spectral_weights[idx], self.correlation_on_torus[idx]));
        }
        s
    }

    /// Coefficients `<f, e_i>_H` for every CONS member, via one transform.
    pub fn cons_project(&self, cons: &Cons, f: &GridFunction) -> Result<Vec<f64>> {
        self.check(f)?;
        let fh = self.fft.forward(&f.values);
        let sqrt2 = std::f64::consts::SQRT_2;
        Ok(cons
            .modes
            .iter()
            .map(|m| {
                let s = self.spectral_weights[m.spectral_index];
                let amp = if m.self_paired { 1.0 } else { sqrt2 };
                match m.phase {
                    Phase::Cos => s * m.norm * amp * fh[m.spectral_index].re,
                    Phase::Sin => -s * m.norm * amp * fh[m.spectral_index].im,
                }
            })
            .collect())
    }

    /// Synthesize `Σ_i c_i e_i` from CONS coefficients.
    pub fn cons_synthesize(&self, cons: &Cons, coeffs: &[f64]) -> Result<GridFunction> {
        if coeffs.len() != cons.len() {
            return Err(Error::Degenerate(format!(
                "expected {} coefficients, got {}",
                cons.len(),
                coeffs.len()
            )));
        }
        let grid = self.grid;
        let ld = grid.len().powi(grid.dim() as i32);
        let mut spec = vec![Complex64::default(); grid.cells()];
        let sqrt2 = std::f64::consts::SQRT_2;
        for (m, c) in cons.modes.iter().zip(coeffs) {
            let nidx = negate_index(grid, m.spectral_index);
            if m.self_paired {
                spec[m.spectral_index] += Complex64::new(c * m.norm * ld, 0.0);
            } else {
                let half = 0.5 * c * m.norm * sqrt2 * ld;
                match m.phase {
                    Phase::Cos => {
                        spec[m.spectral_index] += Complex64::new(half, 0.0);
                        spec[nidx] += Complex64::new(half, 0.0);
                    }
                    Phase::Sin => {
                        // sin = (e^{ikx} - e^{-ikx}) / (2i)
                        spec[m.spectral_index] += Complex64::new(0.0, -half);
                        spec[nidx] += Complex64::new(0.0, half);
                    }
                }
            }
        }
        Ok(GridFunction { grid, values: self.fft.inverse(&spec) })
    }
}

/// Linear index of `-k` on the frequency lattice.
pub fn negate_index(grid: Grid, idx: usize) -> usize {
    let n = grid.n();
    let c = grid.coords(idx);
    grid.index((n - c[0] % n) % n, (n - c[1] % n) % n)
}

/// Physical folding of a summable-tail covariance over periodic images.
/// Returns the folded values and the worst-case relative image
/// contribution on the C(0) scale.
fn fold_covariance(grid: Grid, model: &CorrelationModel) -> Result<(Vec<f64>, f64)> {
    let len = grid.len();
    // image range from the decay scale of the model
    let m_max = match model.kind() {
        Covariance::Gaussian { sigma } => ((sigma * (2.0 * 700.0f64).sqrt()) / len).ceil() as i64 + 1,
        Covariance::Exponential { lambda } => ((700.0 / lambda) / len).ceil() as i64 + 1,
        _ => unreachable!("fold_covariance only used on smooth summable models"),
    };
    let mut c = vec![0.0; grid.cells()];
    let mut tail_max = 0.0f64;
    let mut c0 = 0.0;
    for idx in 0..grid.cells() {
        let p = grid.point(idx);
        let mut direct = 0.0f64;
        let mut total = 0.0f64;
        match grid.dim() {
            1 => {
                for m in -m_max..=m_max {
                    let r = (p[0] + m as f64 * len).abs();
                    let v = model.gamma_value(r).map(|g| g.density).unwrap_or(0.0);
                    total += v;
                    // the direct (nearest-image) term
                    if (r - grid.min_image_dist(idx)).abs() < 0.5 * grid.dx() {
                        direct = direct.max(v);
                    }
                }
            }
            _ => {
                for mx in -m_max..=m_max {
                    for my in -m_max..=m_max {
                        let rx = p[0] + mx as f64 * len;
                        let ry = p[1] + my as f64 * len;
                        let r = (rx * rx + ry * ry).sqrt();
                        let v = model.gamma_value(r).map(|g| g.density).unwrap_or(0.0);
                        total += v;
                        if (r - grid.min_image_dist(idx)).abs() < 0.5 * grid.dx() {
                            direct = direct.max(v);
                        }
                    }
                }
            }
        }
        c[idx] = total;
        if idx == 0 {
            c0 = total;
        }
        tail_max = tail_max.max(total - direct);
    }
    if c0 <= 0.0 {
        return Err(Error::Degenerate("folded covariance vanished at the origin".into()));
    }
    Ok((c, tail_max / c0))
}

/// Spectral-cell construction for the Riesz family: `S[k] = (2π)^d` times
/// the cell average of μ over the k-th frequency cell.
fn spectral_cells(grid: Grid, model: &CorrelationModel) -> Result<Vec<f64>> {
    let d = grid.dim();
    let alpha = match model.kind() {
        Covariance::Riesz { alpha } => alpha,
        _ => unreachable!(),
    };
    let cal = model.riesz_calibration().expect("riesz model carries its calibration");
    let c = cal.constant;
    let two_pi = 2.0 * std::f64::consts::PI;
    let h = std::f64::consts::PI / grid.len(); // half cell width in frequency
    let cell_vol = (2.0 * h).powi(d as i32);
    let lead = two_pi.powi(d as i32);
    let mut s = vec![0.0; grid.cells()];
    for idx in 0..grid.cells() {
        let coords = grid.coords(idx);
        let base = two_pi / grid.len();
        let kx = grid.signed_freq(coords[0]) as f64 * base;
        let cell_avg = if idx == 0 {
            // exact integral over the singular origin cell
            match d {
                1 => 2.0 * c * h.powf(alpha) / alpha / cell_vol,
                _ => {
                    let theta_int = crate::quadrature::tanh_sinh(
                        |t: f64| t.cos().powf(-alpha),
                        0.0,
                        std::f64::consts::FRAC_PI_4,
                        1e-12,
                    )?
                    .value;
                    8.0 * c * h.powf(alpha) / alpha * theta_int / cell_vol
                }
            }
        } else {
            match d {
                1 => {
                    let mut acc = 0.0;
                    for (x, w) in GL5_X.iter().zip(&GL5_W) {
                        let xi = (kx + h * x).abs();
                        acc += w * c * xi.powf(alpha - 1.0);
                    }
                    acc * 0.5 // weights sum to 2 over [-1,1]
                }
                _ => {
                    let ky = grid.signed_freq(coords[1]) as f64 * base;
                    let mut acc = 0.0;
                    for (x, wx) in GL5_X.iter().zip(&GL5_W) {
                        for (y, wy) in GL5_X.iter().zip(&GL5_W) {
                            let xi_x = kx + h * x;
                            let xi_y = ky + h * y;
                            let r2 = xi_x * xi_x + xi_y * xi_y;
                            acc += wx * wy * c * r2.powf(0.5 * (alpha - 2.0));
                        }
                    }
                    acc * 0.25
                }
            }
        };
        s[idx] = lead * cell_avg;
    }
    Ok(s)
}

/// Trigonometric phase of a real CONS member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

/// One member of the orthonormal family, stored compactly; the grid
/// function is generated on demand.
#[derive(Debug, Clone, Copy)]
pub struct ConsMode {
    pub spectral_index: usize,
    pub phase: Phase,
    /// Gram eigenvalue S[k] of the underlying mode.
    pub weight: f64,
    norm: f64,
    self_paired: bool,
}

impl ConsMode {
    /// Peak amplitude of the member: `norm` times `√2` for paired modes.
    pub fn amplitude(&self) -> f64 {
        self.norm * if self.self_paired { 1.0 } else { std::f64::consts::SQRT_2 }
    }
}

/// Complete orthonormal system of the retained (positive-weight) span.
#[derive(Debug, Clone)]
pub struct Cons {
    grid: Grid,
    modes: Vec<ConsMode>,
}

impl Cons {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.modes[i].weight
    }

    pub fn modes(&self) -> &[ConsMode] {
        &self.modes
    }

    /// Materialize the i-th orthonormal member.
    pub fn member(&self, i: usize) -> GridFunction {
        let m = &self.modes[i];
        let grid = self.grid;
        let n = grid.n();
        let kc = grid.coords(m.spectral_index);
        let amp = m.norm * if m.self_paired { 1.0 } else { std::f64::consts::SQRT_2 };
        let values = (0..grid.cells())
            .map(|idx| {
                let jc = grid.coords(idx);
                let t = (kc[0] * jc[0] + kc[1] * jc[1]) % n;
                let theta = 2.0 * std::f64::consts::PI * t as f64 / n as f64;
                match m.phase {
                    Phase::Cos => amp * theta.cos(),
                    Phase::Sin => amp * theta.sin(),
                }
            })
            .collect();
        GridFunction { grid, values }
    }
}

/// Discrete analogue of the squared H-norm of a point mass, used by the
/// `Σ_k v_k(x)²` diagnostics.
pub fn point_mass(grid: Grid, at: usize) -> GridFunction {
    let mut f = GridFunction::zeros(grid);
    f.values[at] = 1.0 / grid.cell_volume();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::nu_eta_d;
    use crate::sobolev::bessel_potential_with;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn rand_fn(grid: Grid, seed: u64) -> GridFunction {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        GridFunction { grid, values: (0..grid.cells()).map(|_| rng.random::<f64>() - 0.5).collect() }
    }

    #[test]
    fn white_noise_inner_product_is_l2() {
        let grid = Grid::new(1, 64, 8.0, 0.01, 4).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let f = rand_fn(grid, 1);
        let g = rand_fn(grid, 2);
        let l2: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
        assert_relative_eq!(h.h_inner(&f, &g).unwrap(), l2, max_relative = 1e-11);
    }

    #[test]
    fn inner_product_is_bilinear_symmetric_psd() {
        let grid = Grid::new(1, 32, 16.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let f = rand_fn(grid, 3);
        let g = rand_fn(grid, 4);
        let w = rand_fn(grid, 5);
        let lhs = h.h_inner(&GridFunction {
            grid,
            values: f.values.iter().zip(&g.values).map(|(a, b)| 2.0 * a + 3.0 * b).collect(),
        }, &w).unwrap();
        let rhs = 2.0 * h.h_inner(&f, &w).unwrap() + 3.0 * h.h_inner(&g, &w).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        assert_relative_eq!(h.h_inner(&f, &g).unwrap(), h.h_inner(&g, &f).unwrap(), max_relative = 1e-12);
        for seed in 0..100 {
            let f = rand_fn(grid, 100 + seed);
            assert!(h.h_norm_sq(&f).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn inner_product_translation_invariant() {
        let grid = Grid::new(2, 8, 8.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(0.7, 2).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let f = rand_fn(grid, 6);
        let g = rand_fn(grid, 7);
        let base = h.h_inner(&f, &g).unwrap();
        for (sx, sy) in [(1usize, 0usize), (3, 5), (7, 2)] {
            let v = h.h_inner(&f.translate(sx, sy), &g.translate(sx, sy)).unwrap();
            assert_relative_eq!(v, base, max_relative = 1e-10);
        }
    }

    #[test]
    fn spectral_inner_product_matches_physical_formula() {
        // Σ_z C(z)(f*g̃)(z) dx^d computed directly
        let grid = Grid::new(1, 32, 16.0, 0.01, 4).unwrap();
        let model = CorrelationModel::exponential(1.0, 1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let f = rand_fn(grid, 8);
        let g = rand_fn(grid, 9);
        let n = grid.n();
        let vol = grid.cell_volume();
        let mut phys = 0.0;
        for z in 0..n {
            // (f * g̃)(z) = Σ_y f(z + y) g(y) dx   [g̃(u) = g(-u)]
            let mut conv = 0.0;
            for y in 0..n {
                conv += f.values[(z + y) % n] * g.values[y] * vol;
            }
            phys += h.correlation_on_torus()[z] * conv * vol;
        }
        assert_relative_eq!(h.h_inner(&f, &g).unwrap(), phys, max_relative = 1e-10);
    }

    #[test]
    fn white_noise_cons_counts_all_modes_and_parseval_holds() {
        let grid = Grid::new(1, 32, 8.0, 0.01, 4).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let cons = h.build_cons().unwrap();
        assert_eq!(cons.len(), grid.cells());
        // orthonormality spot check
        for i in [0usize, 1, 5, 31] {
            for j in [0usize, 1, 5, 31] {
                let v = h.h_inner(&cons.member(i), &cons.member(j)).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "<e{i}, e{j}> = {v}");
            }
        }
        let f = rand_fn(grid, 10);
        let coeffs = h.cons_project(&cons, &f).unwrap();
        let sum_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        assert_relative_eq!(sum_sq, h.h_norm_sq(&f).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn gaussian_cons_parseval_on_retained_span() {
        let grid = Grid::new(1, 64, 24.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let cons = h.build_cons().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..cons.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let f = h.cons_synthesize(&cons, &coeffs).unwrap();
        let back = h.cons_project(&cons, &f).unwrap();
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9, "projection must invert synthesis: {a} vs {b}");
        }
        let sum_sq: f64 = back.iter().map(|c| c * c).sum();
        assert_relative_eq!(sum_sq, h.h_norm_sq(&f).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn aggressive_clipping_bookkeeping() {
        let grid = Grid::new(1, 64, 24.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let full = HilbertStructure::build(grid, &model).unwrap();
        let clipped = HilbertStructure::build_with_clip_floor(grid, &model, 1e-4).unwrap();
        let dropped_expected: f64 = full
            .spectral_weights()
            .iter()
            .zip(clipped.spectral_weights())
            .filter(|(_, c)| **c == 0.0)
            .map(|(f, _)| f.abs())
            .sum();
        assert_relative_eq!(clipped.clipped_mass(), dropped_expected, max_relative = 1e-10);
        let cons = clipped.build_cons().unwrap();
        assert!(cons.len() < grid.cells());
        // everything clipped -> degenerate
        assert!(HilbertStructure::build_with_clip_floor(grid, &model, 2.0).is_err());
    }

    #[test]
    fn fold_tail_reported_and_small_for_wide_torus() {
        let grid = Grid::new(1, 64, 24.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        assert!(h.fold_tail_fraction() < 1e-4, "tail fraction {}", h.fold_tail_fraction());
    }

    #[test]
    fn fourier_consistency_of_folded_models() {
        // DFT of the tabulated covariance matches (2π)^d μ(ξ) pointwise
        // within 1e-3 relative at moderate frequencies on a fine grid
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = Grid::new(1, 1024, 40.0, 0.01, 4).unwrap();
        for model in [
            CorrelationModel::gaussian(1.0, 1).unwrap(),
            CorrelationModel::exponential(1.0, 1).unwrap(),
        ] {
            let h = HilbertStructure::build(grid, &model).unwrap();
            for k in [1usize, 3, 8, 13] {
                let xi = two_pi * k as f64 / grid.len();
                let want = two_pi * model.spectral_value(xi).unwrap();
                let got = h.spectral_weights()[k];
                assert_relative_eq!(got, want, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn riesz_spectral_construction_positive_and_dc_finite() {
        let grid = Grid::new(2, 16, 8.0, 0.01, 4).unwrap();
        let model = CorrelationModel::riesz(1.2, 2).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        assert!(h.spectral_weights().iter().all(|s| *s > 0.0));
        assert!(h.correlation_on_torus()[0].is_finite());
        assert_eq!(h.clipped_mass(), 0.0);
    }

    #[test]
    fn v_field_white_noise_returns_the_member() {
        let grid = Grid::new(1, 16, 8.0, 0.01, 4).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let h = HilbertStructure::build(grid, &model).unwrap();
        let cons = h.build_cons().unwrap();
        for i in [0usize, 3, 9] {
            let e = cons.member(i);
            let v = h.v_field(&e).unwrap();
            for (a, b) in e.values.iter().zip(&v.values) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn v_field_pairing_identity() {
        // <h, e_k>_H = Σ_y h(y) v_k(y) dx^d
        let grid = Grid::new(1, 32, 16.0, 0.01, 4).unwrap();
        for model in [
            CorrelationModel::gaussian(1.0, 1).unwrap(),
            CorrelationModel::riesz(0.5, 1).unwrap(),
        ] {
            let hs = HilbertStructure::build(grid, &model).unwrap();
            let cons = hs.build_cons().unwrap();
            let h = rand_fn(grid, 12);
            let coeffs = hs.cons_project(&cons, &h).unwrap();
            for i in [0usize, 1, 7, 15] {
                let v = hs.v_field(&cons.member(i)).unwrap();
                let rhs: f64 = h.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
                assert!(
                    (coeffs[i] - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()),
                    "pairing identity failed: {} vs {rhs}",
                    coeffs[i]
                );
            }
        }
    }

    #[test]
    fn sum_of_v_fields_squared_is_point_mass_norm() {
        // Σ_k v_k(x)² = <δ_x, δ_x>_H on the retained span
        let grid = Grid::new(1, 32, 16.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let hs = HilbertStructure::build(grid, &model).unwrap();
        let cons = hs.build_cons().unwrap();
        let x_idx = 5;
        let mut acc = 0.0;
        for i in 0..cons.len() {
            let v = hs.v_field(&cons.member(i)).unwrap();
            acc += v.values[x_idx] * v.values[x_idx];
        }
        let delta = point_mass(grid, x_idx);
        let want = hs.h_norm_sq(&delta).unwrap();
        assert_relative_eq!(acc, want, max_relative = 1e-8);
    }

    #[test]
    fn h_bar_zero_input_gives_zero() {
        let grid = Grid::new(1, 32, 16.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let hs = HilbertStructure::build(grid, &model).unwrap();
        let hb = hs.h_bar(&GridFunction::zeros(grid), 0.75).unwrap();
        assert!(hb.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn h_bar_requires_admissibility() {
        let grid = Grid::new(2, 8, 8.0, 0.01, 4).unwrap();
        let model = CorrelationModel::riesz(1.5, 2).unwrap();
        let hs = HilbertStructure::build(grid, &model).unwrap();
        // 2η = 1.0 < α = 1.5: inadmissible
        assert!(matches!(hs.h_bar(&rand_fn(grid, 13), 0.5), Err(Error::Admissibility(_))));
    }

    #[test]
    fn norm_identity_inequality_and_cons_route_equality() {
        let grid = Grid::new(1, 64, 24.0, 0.01, 4).unwrap();
        let eta = 0.75;
        for model in [
            CorrelationModel::gaussian(1.0, 1).unwrap(),
            CorrelationModel::riesz(0.5, 1).unwrap(),
        ] {
            let hs = HilbertStructure::build(grid, &model).unwrap();
            let nu = nu_eta_d(&model, eta).unwrap().finite().unwrap();
            let cons = hs.build_cons().unwrap();
            let v_fields: Vec<GridFunction> =
                (0..cons.len()).map(|i| hs.v_field(&cons.member(i)).unwrap()).collect();
            for seed in 0..10 {
                let h = rand_fn(grid, 200 + seed);
                let hb = hs.h_bar(&h, eta).unwrap();
                for p in [2.0, 4.0] {
                    let ratio = hb.lp_norm(p) / h.lp_norm(p);
                    assert!(
                        ratio <= nu.sqrt() + 1e-8,
                        "norm-identity bound violated: ratio {ratio} vs sqrt(nu) {}",
                        nu.sqrt()
                    );
                }
                // CONS route: ‖ (Σ_k |(1-Δ)^{-η/2}(v_k h)|²)^{1/2} ‖_p = ‖h̄‖_p
                let mut sq = vec![0.0; grid.cells()];
                for v in &v_fields {
                    let gk = GridFunction {
                        grid,
                        values: v.values.iter().zip(&h.values).map(|(a, b)| a * b).collect(),
                    };
                    let smooth = bessel_potential_with(hs.fft(), &gk, -eta);
                    for (s, val) in sq.iter_mut().zip(&smooth.values) {
                        *s += val * val;
                    }
                }
                let seq_norm = GridFunction { grid, values: sq.iter().map(|v| v.sqrt()).collect() };
                for p in [2.0, 4.0] {
                    let a = seq_norm.lp_norm(p);
                    let b = hb.lp_norm(p);
                    assert_relative_eq!(a, b, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn lattice_bessel_kernel_spectrally_near_continuum_at_low_modes() {
        // bridge between the multiplier kernel and the tabulated continuum
        // kernel: their transforms agree at low frequencies (the tabulated
        // kernel aliases at high ones, which is why h_bar uses the lattice
        // multiplier form)
        use crate::correlation::{bessel_kernel, bessel_kernel_origin_cell_average, BesselKernelParams};
        let grid = Grid::new(1, 256, 32.0, 0.01, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let hs = HilbertStructure::build(grid, &model).unwrap();
        let eta = 0.75;
        let params = BesselKernelParams::new(eta, 1).unwrap();
        let mut tab = vec![0.0; grid.cells()];
        for idx in 0..grid.cells() {
            let r = grid.min_image_dist(idx);
            tab[idx] = if idx == 0 {
                bessel_kernel_origin_cell_average(&params, grid.dx()).unwrap()
            } else {
                bessel_kernel(&params, r).unwrap().value
            };
        }
        let tab_spec = hs.fft().forward(&tab);
        for k in [0usize, 1, 2, 4] {
            let want = (1.0 + grid.xi_sq(k)).powf(-0.5 * eta);
            assert_relative_eq!(tab_spec[k].re, want, max_relative = 0.15);
        }
    }
}
