//! Seedable generation of the driving noise increments ΔF: white across
//! time steps, spatially homogeneous with the torus covariance of the
//! Hilbert structure, so that `Cov(ΔF(x), ΔF(y)) = dt · C(x - y)` exactly
//! on the lattice (up to the reported clipping).
//!
//! Stream contract (version 1): the normal draws of time step `i` come
//! from a ChaCha12 stream keyed by `(seed, i, version)`; within a row the
//! draws are consumed in ascending linear mode index, one real normal per
//! self-conjugate mode and one complex pair per `{k, -k}` pair (lower
//! index first). `(seed, step) → row` is therefore a pure function, rows
//! are mutually independent, and replicas with distinct seeds are
//! independent.

use crate::correlation::CorrelationModel;
use crate::error::Error;
use crate::fft::TorusFft;
use crate::grid::{Grid, GridFunction};
use crate::hilbert::{negate_index, Cons, HilbertStructure};
use crate::Result;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::{Read, Write};

/// Version tag of the noise stream contract.
pub const STREAM_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Inverse transform of `sqrt(dt·S[k]·L^d)` times Hermitian complex
    /// normals (default; reuses the Hilbert structure's spectrum).
    Spectral,
    /// Factorization of the circulant covariance directly from the
    /// tabulated `C[j]` (cross-check route; identical in law).
    CirculantEmbedding,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub method: SamplingMethod,
    /// Budget for spectral mass clipped to zero, relative to the total.
    pub clip_budget: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { method: SamplingMethod::Spectral, clip_budget: crate::hilbert::CLIP_BUDGET }
    }
}

/// Sampled increments ΔF(t_i, x_j); row i covers the interval
/// `[i·dt, (i+1)·dt)`.
#[derive(Debug, Clone)]
pub struct NoiseIncrements {
    pub grid: Grid,
    pub model: CorrelationModel,
    pub seed: u64,
    pub method: SamplingMethod,
    data: Vec<f64>,
}

impl NoiseIncrements {
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.grid.cells();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Build directly from raw rows (used by coarse-graining and tests).
    pub fn from_rows(grid: Grid, model: CorrelationModel, seed: u64, method: SamplingMethod, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.cells() * grid.n_steps {
            return Err(Error::GridMismatch(format!(
                "noise data length {} does not match {} steps x {} cells",
                data.len(),
                grid.n_steps,
                grid.cells()
            )));
        }
        Ok(NoiseIncrements { grid, model, seed, method, data })
    }
}

/// Reusable sampler bound to one Hilbert structure.
pub struct Sampler {
    grid: Grid,
    model: CorrelationModel,
    method: SamplingMethod,
    /// per-mode amplitude `sqrt(dt · S[k] · L^d)`
    amplitude: Vec<f64>,
    fft: TorusFft,
}

impl Sampler {
    pub fn new(structure: &HilbertStructure, config: SamplerConfig) -> Result<Self> {
        let grid = structure.grid();
        let ld = grid.len().powi(grid.dim() as i32);
        let weights: Vec<f64> = match config.method {
            SamplingMethod::Spectral => structure.spectral_weights().to_vec(),
            SamplingMethod::CirculantEmbedding => {
                // independent factorization route straight from C[j]
                let spec = structure.fft().forward(structure.correlation_on_torus());
                let raw: Vec<f64> = spec.iter().map(|v| v.re).collect();
                let total: f64 = raw.iter().map(|v| v.abs()).sum();
                let clipped: f64 = raw.iter().filter(|v| **v < 0.0).map(|v| v.abs()).sum();
                if total > 0.0 && clipped / total > config.clip_budget {
                    return Err(Error::Degenerate(format!(
                        "circulant embedding clipped {:.3e} of spectral mass (budget {:.1e})",
                        clipped / total,
                        config.clip_budget
                    )));
                }
                raw.into_iter().map(|v| v.max(0.0)).collect()
            }
        };
        let amplitude = weights.iter().map(|s| (grid.dt * s * ld).sqrt()).collect();
        Ok(Sampler {
            grid,
            model: structure.model().clone(),
            method: config.method,
            amplitude,
            fft: TorusFft::new(grid),
        })
    }

    /// Deterministic sample of all `n_steps` rows for one seed.
    pub fn sample(&self, seed: u64) -> NoiseIncrements {
        let cells = self.grid.cells();
        let mut data = vec![0.0; self.grid.n_steps * cells];
        for step in 0..self.grid.n_steps {
            let row = self.sample_row(seed, step);
            data[step * cells..(step + 1) * cells].copy_from_slice(&row);
        }
        NoiseIncrements { grid: self.grid, model: self.model.clone(), seed, method: self.method, data }
    }

    /// One row of increments, a pure function of `(seed, step)`.
    pub fn sample_row(&self, seed: u64, step: usize) -> Vec<f64> {
        self.fft.inverse(&self.sample_row_spectrum(seed, step))
    }

    /// The Hermitian spectrum of one row (the transform of
    /// [`Self::sample_row`]); lets spectral-space solvers skip a transform
    /// round trip.
    pub fn sample_row_spectrum(&self, seed: u64, step: usize) -> Vec<Complex64> {
        let mut rng = row_rng(seed, step);
        let cells = self.grid.cells();
        let mut spec = vec![Complex64::default(); cells];
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        for idx in 0..cells {
            let nidx = negate_index(self.grid, idx);
            if nidx == idx {
                let a: f64 = StandardNormal.sample(&mut rng);
                spec[idx] = Complex64::new(self.amplitude[idx] * a, 0.0);
            } else if idx < nidx {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                spec[idx] = self.amplitude[idx] * Complex64::new(a * inv_sqrt2, b * inv_sqrt2);
                spec[nidx] = self.amplitude[nidx] * Complex64::new(a * inv_sqrt2, -b * inv_sqrt2);
            }
        }
        spec
    }
}

fn row_rng(seed: u64, step: usize) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(step as u64).to_le_bytes());
    key[16..20].copy_from_slice(&STREAM_VERSION.to_le_bytes());
    key[20..28].copy_from_slice(b"dF-rows\0");
    ChaCha12Rng::from_seed(key)
}

/// Sample the driving increments for `(grid, model, seed)` with the
/// default (spectral) method.
pub fn sample_noise(grid: Grid, model: &CorrelationModel, seed: u64) -> Result<NoiseIncrements> {
    let structure = HilbertStructure::build(grid, model)?;
    let sampler = Sampler::new(&structure, SamplerConfig::default())?;
    Ok(sampler.sample(seed))
}

/// `F(t, φ) = Σ_{s < t_index} Σ_x φ(x) ΔF(s, x) dx^d`: the Walsh pairing
/// of the noise with a (time-constant) test function up to time
/// `t_index · dt`.
pub fn pair_with_test_function(noise: &NoiseIncrements, phi: &GridFunction, t_index: usize) -> Result<f64> {
    if phi.grid != noise.grid {
        return Err(Error::GridMismatch("test function on a different grid than the noise".into()));
    }
    if t_index > noise.grid.n_steps {
        return Err(Error::domain(format!(
            "t_index {t_index} out of range (n_steps = {})",
            noise.grid.n_steps
        )));
    }
    let vol = noise.grid.cell_volume();
    let mut acc = 0.0;
    for s in 0..t_index {
        let row = noise.row(s);
        let mut dot = 0.0;
        for (p, df) in phi.values.iter().zip(row) {
            dot += p * df;
        }
        acc += dot * vol;
    }
    Ok(acc)
}

/// Brownian coordinates of the noise: increments
/// `ΔW^k_i = Σ_x e_k(x) ΔF(i, x) dx^d` for every CONS member, one
/// transform per row.
pub fn brownian_increments(noise: &NoiseIncrements, structure: &HilbertStructure, cons: &Cons) -> Result<Vec<Vec<f64>>> {
    if structure.grid() != noise.grid {
        return Err(Error::GridMismatch("structure grid differs from noise grid".into()));
    }
    let mut out = Vec::with_capacity(noise.grid.n_steps);
    for i in 0..noise.grid.n_steps {
        let spec = structure.fft().forward(noise.row(i));
        let row: Vec<f64> = cons
            .modes()
            .iter()
            .map(|m| match m.phase {
                crate::hilbert::Phase::Cos => m.amplitude() * spec[m.spectral_index].re,
                crate::hilbert::Phase::Sin => -m.amplitude() * spec[m.spectral_index].im,
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Reconstructs `F(t, φ)` through the CONS series
/// `Σ_k <φ, e_k>_H W^k(t)` and returns the absolute difference from the
/// direct pairing. Exact (up to rounding) on the retained span.
pub fn cons_expansion_check(
    noise: &NoiseIncrements,
    phi: &GridFunction,
    structure: &HilbertStructure,
    cons: &Cons,
    t_index: usize,
) -> Result<f64> {
    let direct = pair_with_test_function(noise, phi, t_index)?;
    let coeffs = structure.cons_project(cons, phi)?;
    let dw = brownian_increments(noise, structure, cons)?;
    let mut series = 0.0;
    for row in dw.iter().take(t_index) {
        for (c, w) in coeffs.iter().zip(row) {
            series += c * w;
        }
    }
    Ok((series - direct).abs())
}

/// Exact martingale coarse-graining: coarse increments are sums of fine
/// increments over coarse cells and steps (cell masses add; the stored
/// densities are re-normalized by the coarse cell volume).
pub fn coarsen(noise: &NoiseIncrements, coarse: Grid) -> Result<NoiseIncrements> {
    let fine = noise.grid;
    if fine.dim() != coarse.dim() || (fine.len() - coarse.len()).abs() > 1e-12 {
        return Err(Error::GridMismatch("coarse grid must share dimension and period".into()));
    }
    if fine.n() % coarse.n() != 0 || fine.n_steps % coarse.n_steps != 0 {
        return Err(Error::GridMismatch("coarse resolution must divide the fine resolution".into()));
    }
    let fs = fine.n() / coarse.n();
    let ft = fine.n_steps / coarse.n_steps;
    let scale = fine.cell_volume() / coarse.cell_volume();
    let mut data = vec![0.0; coarse.n_steps * coarse.cells()];
    for ci in 0..coarse.n_steps {
        for fi in ci * ft..(ci + 1) * ft {
            let row = noise.row(fi);
            for c_idx in 0..coarse.cells() {
                let cc = coarse.coords(c_idx);
                let mut acc = 0.0;
                match fine.dim() {
                    1 => {
                        for ox in 0..fs {
                            acc += row[fine.index(cc[0] * fs + ox, 0)];
                        }
                    }
                    _ => {
                        for oy in 0..fs {
                            for ox in 0..fs {
                                acc += row[fine.index(cc[0] * fs + ox, cc[1] * fs + oy)];
                            }
                        }
                    }
                }
                data[ci * coarse.cells() + c_idx] += acc * scale;
            }
        }
    }
    NoiseIncrements::from_rows(coarse, noise.model.clone(), noise.seed, noise.method, data)
}

fn model_tag(model: &CorrelationModel) -> (u8, f64) {
    use crate::correlation::Covariance::*;
    match model.kind() {
        WhiteNoise => (0, 0.0),
        Riesz { alpha } => (1, alpha),
        Gaussian { sigma } => (2, sigma),
        Exponential { lambda } => (3, lambda),
    }
}

fn model_from_tag(tag: u8, param: f64, d: usize) -> Result<CorrelationModel> {
    match tag {
        0 => CorrelationModel::white_noise(d),
        1 => CorrelationModel::riesz(param, d),
        2 => CorrelationModel::gaussian(param, d),
        3 => CorrelationModel::exponential(param, d),
        _ => Err(Error::Config(format!("unknown model tag {tag}"))),
    }
}

impl NoiseIncrements {
    /// Flat little-endian binary layout:
    /// header `(d: u32, N: u32, L: f64, dt: f64, n_steps: u32,
    /// model: (tag u8, param f64), seed: u64, method: u8, version: u32)`
    /// followed by row-major f64 data.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        w.write_all(&self.grid.len().to_le_bytes())?;
        w.write_all(&self.grid.dt.to_le_bytes())?;
        w.write_all(&(self.grid.n_steps as u32).to_le_bytes())?;
        let (tag, param) = model_tag(&self.model);
        w.write_all(&[tag])?;
        w.write_all(&param.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&[match self.method {
            SamplingMethod::Spectral => 0u8,
            SamplingMethod::CirculantEmbedding => 1u8,
        }])?;
        w.write_all(&STREAM_VERSION.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut u32b = [0u8; 4];
        let mut u64b = [0u8; 8];
        let mut u8b = [0u8; 1];
        r.read_exact(&mut u32b)?;
        let d = u32::from_le_bytes(u32b) as usize;
        r.read_exact(&mut u32b)?;
        let n = u32::from_le_bytes(u32b) as usize;
        r.read_exact(&mut u64b)?;
        let len = f64::from_le_bytes(u64b);
        r.read_exact(&mut u64b)?;
        let dt = f64::from_le_bytes(u64b);
        r.read_exact(&mut u32b)?;
        let n_steps = u32::from_le_bytes(u32b) as usize;
        r.read_exact(&mut u8b)?;
        let tag = u8b[0];
        r.read_exact(&mut u64b)?;
        let param = f64::from_le_bytes(u64b);
        r.read_exact(&mut u64b)?;
        let seed = u64::from_le_bytes(u64b);
        r.read_exact(&mut u8b)?;
        let method = match u8b[0] {
            0 => SamplingMethod::Spectral,
            1 => SamplingMethod::CirculantEmbedding,
            other => return Err(Error::Config(format!("unknown sampling method tag {other}"))),
        };
        r.read_exact(&mut u32b)?;
        let version = u32::from_le_bytes(u32b);
        if version != STREAM_VERSION {
            return Err(Error::Config(format!(
                "noise file stream version {version} != supported {STREAM_VERSION}"
            )));
        }
        let grid = Grid::new(d, n, len, dt, n_steps)?;
        let model = model_from_tag(tag, param, d)?;
        let mut data = vec![0.0; n_steps * grid.cells()];
        for v in &mut data {
            r.read_exact(&mut u64b)?;
            *v = f64::from_le_bytes(u64b);
        }
        NoiseIncrements::from_rows(grid, model, seed, method, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn white_noise_entries_iid_with_variance_dt_over_cell() {
        let grid = Grid::new(1, 16, 4.0, 0.02, 2).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let mut sq = Vec::new();
        for seed in 0..2000 {
            let n = sampler.sample(seed);
            sq.extend(n.data().iter().map(|v| v * v));
        }
        let want = grid.dt / grid.cell_volume();
        let (mean, se) = mean_and_stderr(&sq);
        assert!(
            (mean - want).abs() <= 3.0 * se,
            "variance {mean} vs target {want} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn determinism_same_seed_bit_identical() {
        let grid = Grid::new(2, 8, 4.0, 0.01, 3).unwrap();
        let model = CorrelationModel::gaussian(0.8, 2).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let a = sampler.sample(7);
        let b = sampler.sample(7);
        assert_eq!(a.data(), b.data());
        let c = sampler.sample(8);
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn spatial_covariance_matches_torus_target() {
        let grid = Grid::new(1, 32, 16.0, 0.05, 1).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let n_rep = 4000usize;
        let lags = [0usize, 1, 2, 5, 9];
        let mut per_rep: Vec<Vec<f64>> = vec![Vec::with_capacity(n_rep); lags.len()];
        for seed in 0..n_rep {
            let noise = sampler.sample(seed as u64);
            let row = noise.row(0);
            for (li, lag) in lags.iter().enumerate() {
                let mut acc = 0.0;
                for x in 0..grid.cells() {
                    acc += row[x] * row[(x + lag) % grid.cells()];
                }
                per_rep[li].push(acc / grid.cells() as f64);
            }
        }
        for (li, lag) in lags.iter().enumerate() {
            let want = grid.dt * structure.correlation_on_torus()[*lag];
            let (mean, se) = mean_and_stderr(&per_rep[li]);
            assert!(
                (mean - want).abs() <= 3.0 * se,
                "lag {lag}: got {mean}, want {want}, 3se {}",
                3.0 * se
            );
        }
    }

    #[test]
    fn rows_are_white_in_time_and_stationary() {
        let grid = Grid::new(1, 16, 8.0, 0.05, 2).unwrap();
        let model = CorrelationModel::exponential(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let n_rep = 3000;
        let mut cross = Vec::new();
        let mut cov_at_0 = Vec::new();
        let mut cov_at_7 = Vec::new();
        for seed in 0..n_rep {
            let noise = sampler.sample(seed);
            let (r0, r1) = (noise.row(0), noise.row(1));
            cross.push(r0.iter().zip(r1).map(|(a, b)| a * b).sum::<f64>() / grid.cells() as f64);
            // same lag at two different base points (stationarity)
            cov_at_0.push(r0[0] * r0[3]);
            cov_at_7.push(r0[7] * r0[10]);
        }
        let (m, se) = mean_and_stderr(&cross);
        assert!(m.abs() <= 3.0 * se, "time-whiteness violated: {m} vs 3se {}", 3.0 * se);
        let (m0, se0) = mean_and_stderr(&cov_at_0);
        let (m7, se7) = mean_and_stderr(&cov_at_7);
        assert!(
            (m0 - m7).abs() <= 3.0 * (se0 * se0 + se7 * se7).sqrt(),
            "stationarity violated: {m0} vs {m7}"
        );
    }

    #[test]
    fn per_cell_kurtosis_is_gaussian() {
        let grid = Grid::new(1, 8, 4.0, 0.05, 1).unwrap();
        let model = CorrelationModel::gaussian(0.5, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let n_rep = 6000;
        let mut samples = Vec::with_capacity(n_rep);
        for seed in 0..n_rep {
            samples.push(sampler.sample(seed as u64).row(0)[3]);
        }
        let (mean, _) = mean_and_stderr(&samples);
        let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n_rep as f64;
        let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n_rep as f64;
        let kurt = m4 / (m2 * m2);
        let se = (24.0 / n_rep as f64).sqrt();
        assert!((kurt - 3.0).abs() <= 3.0 * se, "kurtosis {kurt} vs 3 +- {}", 3.0 * se);
    }

    #[test]
    fn circulant_embedding_agrees_with_spectral_in_law_and_close_numerically() {
        let grid = Grid::new(1, 32, 16.0, 0.05, 1).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let spectral = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let circ = Sampler::new(
            &structure,
            SamplerConfig { method: SamplingMethod::CirculantEmbedding, ..Default::default() },
        )
        .unwrap();
        // the two factorizations of the same circulant differ only at
        // rounding level, so equal seeds give nearly equal fields
        let a = spectral.sample(123);
        let b = circ.sample(123);
        let scale = a.data().iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn pairing_mean_variance_and_bilinearity() {
        let grid = Grid::new(1, 16, 8.0, 0.05, 4).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let phi = GridFunction::from_fn(grid, |x, _| (0.7 * x).sin() + 0.2);
        let psi = GridFunction::from_fn(grid, |x, _| (1.3 * x).cos());
        let t_index = 3;
        let mut vals = Vec::new();
        for seed in 0..4000 {
            let noise = sampler.sample(seed);
            let f = pair_with_test_function(&noise, &phi, t_index).unwrap();
            vals.push(f);
            if seed < 16 {
                // exact bilinearity
                let g = pair_with_test_function(&noise, &psi, t_index).unwrap();
                let combo = GridFunction {
                    grid,
                    values: phi.values.iter().zip(&psi.values).map(|(a, b)| 2.0 * a - 0.5 * b).collect(),
                };
                let h = pair_with_test_function(&noise, &combo, t_index).unwrap();
                assert_relative_eq!(h, 2.0 * f - 0.5 * g, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
        let (mean, se) = mean_and_stderr(&vals);
        assert!(mean.abs() <= 3.0 * se, "mean {mean} vs 3se {}", 3.0 * se);
        let t = t_index as f64 * grid.dt;
        let target_var = t * structure.h_norm_sq(&phi).unwrap();
        let n = vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let var_se = var * (2.0 / (n - 1.0)).sqrt();
        assert!(
            (var - target_var).abs() <= 3.0 * var_se,
            "variance {var} vs target {target_var} (3se {})",
            3.0 * var_se
        );
        // out of range
        assert!(pair_with_test_function(&sampler.sample(0), &phi, 5).is_err());
    }

    #[test]
    fn cons_expansion_residual_tiny_on_retained_span() {
        let grid = Grid::new(1, 16, 8.0, 0.05, 3).unwrap();
        for model in [
            CorrelationModel::white_noise(1).unwrap(),
            CorrelationModel::gaussian(1.0, 1).unwrap(),
        ] {
            let structure = HilbertStructure::build(grid, &model).unwrap();
            let cons = structure.build_cons().unwrap();
            let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
            let noise = sampler.sample(99);
            let phi = GridFunction::from_fn(grid, |x, _| (0.7 * x).sin() - 0.1 * (1.5 * x).cos());
            let scale = structure.h_norm_sq(&phi).unwrap().sqrt();
            let res = cons_expansion_check(&noise, &phi, &structure, &cons, 3).unwrap();
            assert!(res <= 1e-8 * scale.max(1.0), "residual {res}");
        }
    }

    #[test]
    fn cons_expansion_single_mode_has_single_coefficient() {
        let grid = Grid::new(1, 16, 8.0, 0.05, 1).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let cons = structure.build_cons().unwrap();
        // φ = a single Fourier mode
        let phi = GridFunction::from_fn(grid, |x, _| (2.0 * std::f64::consts::PI * 3.0 * x / 8.0).cos());
        let coeffs = structure.cons_project(&cons, &phi).unwrap();
        let nonzero = coeffs.iter().filter(|c| c.abs() > 1e-10).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn inflated_clipping_degrades_expansion_at_clipped_scale() {
        let grid = Grid::new(1, 32, 16.0, 0.05, 2).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let full = HilbertStructure::build(grid, &model).unwrap();
        let clipped = HilbertStructure::build_with_clip_floor(grid, &model, 1e-3).unwrap();
        let cons_full = full.build_cons().unwrap();
        let cons_clip = clipped.build_cons().unwrap();
        assert!(cons_clip.len() < cons_full.len());
        let sampler = Sampler::new(&full, SamplerConfig::default()).unwrap();
        let noise = sampler.sample(5);
        // physical test function with mass everywhere in the spectrum
        let mut phi = GridFunction::zeros(grid);
        phi.values[4] = 1.0;
        let res_full = cons_expansion_check(&noise, &phi, &full, &cons_full, 2).unwrap();
        let res_clip = cons_expansion_check(&noise, &phi, &clipped, &cons_clip, 2).unwrap();
        assert!(res_clip > 10.0 * res_full.max(1e-14), "clipped {res_clip} vs full {res_full}");
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let grid = Grid::new(2, 8, 4.0, 0.01, 2).unwrap();
        let model = CorrelationModel::exponential(1.3, 2).unwrap();
        let noise = sample_noise(grid, &model, 321).unwrap();
        let mut buf = Vec::new();
        noise.write_to(&mut buf).unwrap();
        let back = NoiseIncrements::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid, noise.grid);
        assert_eq!(back.seed, noise.seed);
        assert_eq!(back.data(), noise.data());
    }

    #[test]
    fn coarsening_preserves_increment_masses() {
        let fine = Grid::new(1, 32, 8.0, 0.01, 4).unwrap();
        let coarse = Grid::new(1, 16, 8.0, 0.02, 2).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let noise = sample_noise(fine, &model, 17).unwrap();
        let c = coarsen(&noise, coarse).unwrap();
        // total mass over the whole torus and horizon is conserved
        let mass_f: f64 = noise.data().iter().sum::<f64>() * fine.cell_volume();
        let mass_c: f64 = c.data().iter().sum::<f64>() * coarse.cell_volume();
        assert_relative_eq!(mass_f, mass_c, max_relative = 1e-12);
        // and per coarse block
        let block: f64 = (0..2)
            .map(|fi| {
                (0..2).map(|ox| noise.row(fi)[4 + ox] * fine.cell_volume()).sum::<f64>()
            })
            .sum();
        assert_relative_eq!(c.row(0)[2] * coarse.cell_volume(), block, max_relative = 1e-12);
    }
}
