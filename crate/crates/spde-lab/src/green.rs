//! Fundamental solutions: the Gaussian kernel `G_0`, exact Green functions
//! for constant SPD coefficients, θ-scheme evolved-delta columns for
//! variable coefficients, and the spectral bound
//! `∫_0^t ds ∫ μ(dξ)|F G_0(s)(ξ)|² ≤ C ∫ μ(dξ)/(1+|ξ|²)`.

use crate::coeffs::CoefficientField;
use crate::correlation::{dalang_integral, surface_factor, CorrelationModel, Extended};
use crate::error::Error;
use crate::fft::TorusFft;
use crate::grid::Grid;
use crate::quadrature::radial_integral;
use crate::weak::{SchemeConfig, ThetaStepper};
use crate::Result;
use num_complex::Complex64;
use std::collections::HashMap;

/// The d-dimensional Gaussian density with mean zero and covariance
/// `t · Id`.
pub fn g0(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("g0 requires t > 0, got {t}")));
    }
    let d = x.len();
    if d == 0 || d > 2 {
        return Err(Error::domain("g0 supports d = 1, 2"));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((2.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0) * (-0.5 * r2 / t).exp())
}

/// Exact fundamental solution of `∂_t - a^{ij}∂²_{ij}` for a constant SPD
/// matrix: the Gaussian density with covariance `2·a·τ` evaluated at the
/// space offset.
pub fn const_green(a: [[f64; 2]; 2], d: usize, tau: f64, dx: &[f64]) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("const_green requires t - s > 0, got {tau}")));
    }
    match d {
        1 => {
            let s2 = 2.0 * a[0][0] * tau;
            if !(s2 > 0.0) {
                return Err(Error::domain("diffusion coefficient must be positive"));
            }
            Ok((2.0 * std::f64::consts::PI * s2).powf(-0.5) * (-0.5 * dx[0] * dx[0] / s2).exp())
        }
        2 => {
            if (a[0][1] - a[1][0]).abs() > 1e-14 {
                return Err(Error::domain("diffusion matrix must be symmetric"));
            }
            let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if !(a[0][0] > 0.0 && det_a > 0.0) {
                return Err(Error::domain("diffusion matrix must be SPD"));
            }
            let c = 2.0 * tau;
            let det_sigma = c * c * det_a;
            // Σ^{-1} = (1/(2τ)) a^{-1}
            let inv = [
                [a[1][1] / (det_a * c), -a[0][1] / (det_a * c)],
                [-a[1][0] / (det_a * c), a[0][0] / (det_a * c)],
            ];
            let q = dx[0] * (inv[0][0] * dx[0] + inv[0][1] * dx[1])
                + dx[1] * (inv[1][0] * dx[0] + inv[1][1] * dx[1]);
            Ok((2.0 * std::f64::consts::PI).powi(-1) * det_sigma.powf(-0.5) * (-0.5 * q).exp())
        }
        _ => Err(Error::domain("const_green supports d = 1, 2")),
    }
}

/// Exact one-step Fourier multiplier `exp(dt·λ(ξ))` of the constant
/// coefficient operator, `λ(ξ) = -ξ^T a ξ + i b·ξ` (continuum symbol, not
/// the stencil).
pub fn exact_step_multiplier(grid: Grid, coeffs: &CoefficientField) -> Result<Vec<Complex64>> {
    let (a11, a22, a12) = coeffs.a_at(0);
    let (b1, b2) = coeffs.b_at(0);
    // constant coefficients only: verify a few probes
    for probe in [grid.cells() / 3, grid.cells() - 1] {
        if coeffs.a_at(probe) != (a11, a22, a12) || coeffs.b_at(probe) != (b1, b2) {
            return Err(Error::domain(
                "exact Green multiplier requires constant coefficients",
            ));
        }
    }
    let base = 2.0 * std::f64::consts::PI / grid.len();
    Ok((0..grid.cells())
        .map(|idx| {
            let c = grid.coords(idx);
            let x1 = grid.signed_freq(c[0]) as f64 * base;
            let x2 = if grid.dim() == 2 { grid.signed_freq(c[1]) as f64 * base } else { 0.0 };
            let q = a11 * x1 * x1 + 2.0 * a12 * x1 * x2 + a22 * x2 * x2;
            let lam = Complex64::new(-q, b1 * x1 + b2 * x2);
            (grid.dt * lam).exp()
        })
        .collect())
}

/// Construction route of a Green evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenKind {
    AnalyticConstant,
    NumericVariable,
}

/// Evolved-delta column `G(t_n, ·; t_s, y)` for `n = s..=n_steps`.
#[derive(Debug, Clone)]
pub struct GreenColumn {
    pub s_idx: usize,
    pub y_idx: usize,
    /// `levels[j]` is the field at time index `s_idx + j`; `levels[0]` is
    /// the mollified delta.
    pub levels: Vec<Vec<f64>>,
    /// Negative mass clamped to zero, relative to the unit kernel mass.
    pub clamped_mass: f64,
    /// Standard deviation of the mollified initial column.
    pub mollification_width: f64,
}

impl GreenColumn {
    /// Lattice mass `Σ_x G(t, x; s, y) dx^d` at a level.
    pub fn mass(&self, level: usize, grid: Grid) -> f64 {
        self.levels[level].iter().sum::<f64>() * grid.cell_volume()
    }

    /// Debug dump: one row per cell of the requested level.
    pub fn level_csv(&self, level: usize) -> String {
        let mut s = String::from("cell,value\n");
        for (idx, v) in self.levels[level].iter().enumerate() {
            s.push_str(&format!("{idx},{v}\n"));
        }
        s
    }
}

/// Fundamental-solution evaluator with a build-once, read-many column
/// cache.
pub struct GreenEvaluator {
    pub kind: GreenKind,
    grid: Grid,
    coeffs: CoefficientField,
    stepper: Option<ThetaStepper>,
    exact_mult: Option<Vec<Complex64>>,
    fft: TorusFft,
    cache: HashMap<(usize, usize), GreenColumn>,
}

impl GreenEvaluator {
    /// Exact route for constant coefficients.
    pub fn analytic_constant(grid: Grid, coeffs: &CoefficientField) -> Result<Self> {
        let exact_mult = Some(exact_step_multiplier(grid, coeffs)?);
        Ok(GreenEvaluator {
            kind: GreenKind::AnalyticConstant,
            grid,
            coeffs: coeffs.clone(),
            stepper: None,
            exact_mult,
            fft: TorusFft::new(grid),
            cache: HashMap::new(),
        })
    }

    /// θ-scheme route for (possibly) variable coefficients.
    pub fn numeric_variable(grid: Grid, coeffs: &CoefficientField, scheme: &SchemeConfig) -> Result<Self> {
        coeffs.ellipticity_certificate(grid)?;
        let stepper = Some(ThetaStepper::new(grid, coeffs, scheme)?);
        Ok(GreenEvaluator {
            kind: GreenKind::NumericVariable,
            grid,
            coeffs: coeffs.clone(),
            stepper,
            exact_mult: None,
            fft: TorusFft::new(grid),
            cache: HashMap::new(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &CoefficientField {
        &self.coeffs
    }

    /// The evolved-delta column for a source `(t_s, y)`; cached.
    pub fn column(&mut self, s_idx: usize, y_idx: usize) -> Result<&GreenColumn> {
        if s_idx >= self.grid.n_steps {
            return Err(Error::domain(format!(
                "source time index {s_idx} out of range (n_steps = {})",
                self.grid.n_steps
            )));
        }
        if !self.cache.contains_key(&(s_idx, y_idx)) {
            let col = self.build_column(s_idx, y_idx)?;
            self.cache.insert((s_idx, y_idx), col);
        }
        Ok(&self.cache[&(s_idx, y_idx)])
    }

    fn build_column(&self, s_idx: usize, y_idx: usize) -> Result<GreenColumn> {
        let grid = self.grid;
        let cells = grid.cells();
        let mut delta = vec![0.0; cells];
        delta[y_idx] = 1.0 / grid.cell_volume();
        // mollify: one application of the implicit step (kills checkerboard
        // modes that a raw Kronecker delta would excite)
        let mut cur = match (&self.stepper, &self.exact_mult) {
            (Some(st), _) => st.implicit_solve(&delta)?,
            (_, Some(mult)) => {
                let mut spec = self.fft.forward(&delta);
                for (v, m) in spec.iter_mut().zip(mult) {
                    *v *= *m;
                }
                self.fft.inverse(&spec)
            }
            _ => unreachable!(),
        };
        let mut clamped_mass = 0.0;
        let width = {
            let mut mass = 0.0;
            let mut second = 0.0;
            for (idx, v) in cur.iter().enumerate() {
                let r = offset_dist(grid, idx, y_idx);
                mass += v;
                second += v * r * r;
            }
            (second / mass.max(1e-300)).max(0.0).sqrt()
        };
        let mut levels = Vec::with_capacity(grid.n_steps - s_idx + 1);
        clamp_negative(&mut cur, &mut clamped_mass);
        levels.push(cur.clone());
        for _n in s_idx..grid.n_steps {
            cur = match (&self.stepper, &self.exact_mult) {
                (Some(st), _) => st.step(&cur, &vec![0.0; cells])?,
                (_, Some(mult)) => {
                    let mut spec = self.fft.forward(&cur);
                    for (v, m) in spec.iter_mut().zip(mult) {
                        *v *= *m;
                    }
                    self.fft.inverse(&spec)
                }
                _ => unreachable!(),
            };
            clamp_negative(&mut cur, &mut clamped_mass);
            levels.push(cur.clone());
        }
        let clamped_mass = clamped_mass * grid.cell_volume();
        Ok(GreenColumn { s_idx, y_idx, levels, clamped_mass, mollification_width: width })
    }
}

fn clamp_negative(v: &mut [f64], clamped: &mut f64) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *clamped += -*x;
            *x = 0.0;
        }
    }
}

fn offset_dist(grid: Grid, idx: usize, center: usize) -> f64 {
    let n = grid.n();
    let a = grid.coords(idx);
    let b = grid.coords(center);
    let off = grid.index(a[0] + n - b[0] % n, a[1] + n - b[1] % n);
    grid.min_image_dist(off)
}

/// Result of the spectral bound comparison at η = 1.
#[derive(Debug, Clone, Copy)]
pub struct SpectralBound {
    /// `∫_0^t ds ∫ μ(dξ) |F G_0(s)(ξ)|² = ∫ μ(dξ)(1 - e^{-t|ξ|²})/|ξ|²`.
    pub lhs: f64,
    /// `C(t) · ∫ μ(dξ)/(1+|ξ|²)`.
    pub rhs: f64,
    /// The calibrated constant `C(t) = sup_q (1-e^{-tq})(1+q)/q`.
    pub constant: f64,
}

/// Verify the time-integrated Gaussian spectral bound for a model with a
/// finite Dalang integral.
pub fn spectral_bound_check(model: &CorrelationModel, t: f64) -> Result<SpectralBound> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("horizon must be > 0, got {t}")));
    }
    let dalang = match dalang_integral(model, 1.0)? {
        Extended::Finite(v) => v,
        Extended::Infinite => {
            return Err(Error::Admissibility(
                "Dalang integral diverges at eta = 1; the spectral bound does not apply".into(),
            ))
        }
    };
    let d = model.dim();
    let m = model.clone();
    let q = radial_integral(
        move |k: f64| {
            let rho = m.spectral_value(k.max(1e-300)).unwrap_or(0.0);
            let ksq = k * k;
            let w = if ksq * t < 1e-8 {
                t * (1.0 - 0.5 * ksq * t)
            } else {
                -(-t * ksq).exp_m1() / ksq
            };
            rho * w
        },
        d,
        1e-9,
    )?;
    let lhs = surface_factor(d) * q.value;
    // C(t) = sup_{q>0} (1-e^{-tq})(1+q)/q, by scan over a log grid
    let mut constant = t.min(1.0); // limits at q→0 (value t) and q→∞ (value 1)
    constant = constant.max(t).max(1.0);
    let mut best = 0.0f64;
    for i in 0..4000 {
        let lq = -18.0 + 36.0 * (i as f64) / 3999.0;
        let qq = lq.exp();
        let g = (-(-t * qq).exp_m1()) * (1.0 + qq) / qq;
        best = best.max(g);
    }
    let constant = constant.max(best) * (1.0 + 1e-9);
    Ok(SpectralBound { lhs, rhs: constant * dalang, constant })
}
