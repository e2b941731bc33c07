//! Coefficient fields of the differential operator
//! `L = ∂_t - a^{ij} ∂²_{ij} - b^i ∂_i`: constant and variable diffusion
//! matrices, drifts, declared Hölder order, and the sampled ellipticity
//! certificate.

use crate::error::Error;
use crate::fft::TorusFft;
use crate::grid::{Grid, GridFunction};
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Diffusion part `a(t, x)`; realizations used here are time-constant.
#[derive(Debug, Clone)]
pub enum DiffusionField {
    /// `a = c · Id`.
    ConstIso(f64),
    /// Constant symmetric 2x2 matrix (d = 2 only).
    ConstMatrix2([[f64; 2]; 2]),
    /// `a(x) = field(x) · Id` with a smooth positive field.
    VarIso(GridFunction),
}

/// Drift part `b(t, x)`.
#[derive(Debug, Clone)]
pub enum DriftField {
    Zero,
    Const(Vec<f64>),
    /// One grid function per component.
    Var(Vec<GridFunction>),
}

/// Diffusion and drift coefficients with their declared regularity and
/// ellipticity window.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub diffusion: DiffusionField,
    pub drift: DriftField,
    /// Declared Hölder order of `a(·, x)` in x.
    pub coeff_alpha: f64,
    /// `(δ, K)`: lower and upper ellipticity bounds.
    pub ellipticity: (f64, f64),
    /// Set by constructors that guarantee a self-adjoint operator
    /// (`b ≡ 0` with constant symmetric `a`, or divergence form
    /// `b^i = ∂_j a^{ij}`).
    self_adjoint: bool,
}

impl CoefficientField {
    /// The heat operator `a = Id/2`, `b = 0`.
    pub fn heat() -> Self {
        CoefficientField {
            diffusion: DiffusionField::ConstIso(0.5),
            drift: DriftField::Zero,
            coeff_alpha: 1.0,
            ellipticity: (0.5, 0.5),
            self_adjoint: true,
        }
    }

    pub fn const_iso(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::domain(format!("diffusion constant must be > 0, got {c}")));
        }
        Ok(CoefficientField {
            diffusion: DiffusionField::ConstIso(c),
            drift: DriftField::Zero,
            coeff_alpha: 1.0,
            ellipticity: (c, c),
            self_adjoint: true,
        })
    }

    /// Constant symmetric positive definite matrix diffusion (d = 2).
    pub fn const_matrix2(a: [[f64; 2]; 2], drift: DriftField) -> Result<Self> {
        if (a[0][1] - a[1][0]).abs() > 1e-14 {
            return Err(Error::domain("diffusion matrix must be symmetric"));
        }
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(tr > 0.0 && det > 0.0) {
            return Err(Error::domain("diffusion matrix must be positive definite"));
        }
        let disc = (0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[0][1]).sqrt();
        let (lo, hi) = (0.5 * tr - disc, 0.5 * tr + disc);
        let self_adjoint = matches!(drift, DriftField::Zero);
        Ok(CoefficientField {
            diffusion: DiffusionField::ConstMatrix2(a),
            drift,
            coeff_alpha: 1.0,
            ellipticity: (lo, hi),
            self_adjoint,
        })
    }

    /// Constant isotropic diffusion with a constant drift.
    pub fn const_iso_with_drift(c: f64, b: Vec<f64>) -> Result<Self> {
        let mut cf = Self::const_iso(c)?;
        cf.drift = DriftField::Const(b);
        cf.self_adjoint = false;
        Ok(cf)
    }

    /// Variable isotropic diffusion `a(x)·Id` with drift; caller supplies
    /// the declared Hölder order and ellipticity window.
    pub fn var_iso(a: GridFunction, drift: DriftField, coeff_alpha: f64, ellipticity: (f64, f64)) -> Self {
        CoefficientField { diffusion: DiffusionField::VarIso(a), drift, coeff_alpha, ellipticity, self_adjoint: false }
    }

    /// One-dimensional divergence-form operator `∂_x(a(x) ∂_x ·)` with
    /// `a(x) = a0 + a1 cos(2πx/L)`: the drift `b = a'` makes the operator
    /// formally self-adjoint.
    pub fn divergence_form_cosine(grid: Grid, a0: f64, a1: f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::domain("divergence_form_cosine is a d=1 construction"));
        }
        if !(a0 > a1.abs()) {
            return Err(Error::domain("need a0 > |a1| for ellipticity"));
        }
        let len = grid.len();
        let w = 2.0 * std::f64::consts::PI / len;
        let a = GridFunction::from_fn(grid, |x, _| a0 + a1 * (w * x).cos());
        let b = GridFunction::from_fn(grid, |x, _| -a1 * w * (w * x).sin());
        Ok(CoefficientField {
            diffusion: DiffusionField::VarIso(a),
            drift: DriftField::Var(vec![b]),
            coeff_alpha: 1.0,
            ellipticity: (a0 - a1.abs(), a0 + a1.abs()),
            self_adjoint: true,
        })
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    /// Diffusion matrix entries `(a11, a22, a12)` at a cell.
    pub fn a_at(&self, idx: usize) -> (f64, f64, f64) {
        match &self.diffusion {
            DiffusionField::ConstIso(c) => (*c, *c, 0.0),
            DiffusionField::ConstMatrix2(m) => (m[0][0], m[1][1], m[0][1]),
            DiffusionField::VarIso(f) => (f.values[idx], f.values[idx], 0.0),
        }
    }

    /// Drift components `(b1, b2)` at a cell.
    pub fn b_at(&self, idx: usize) -> (f64, f64) {
        match &self.drift {
            DriftField::Zero => (0.0, 0.0),
            DriftField::Const(v) => (v[0], v.get(1).copied().unwrap_or(0.0)),
            DriftField::Var(fs) => (
                fs[0].values[idx],
                fs.get(1).map(|f| f.values[idx]).unwrap_or(0.0),
            ),
        }
    }

    pub fn sup_drift(&self) -> f64 {
        match &self.drift {
            DriftField::Zero => 0.0,
            DriftField::Const(v) => v.iter().map(|b| b.abs()).fold(0.0, f64::max),
            DriftField::Var(fs) => fs
                .iter()
                .flat_map(|f| f.values.iter())
                .map(|b| b.abs())
                .fold(0.0, f64::max),
        }
    }

    /// Verify `δ|λ|² ≤ a^{ij}λ^iλ^j ≤ K|λ|²` on sampled Rayleigh quotients
    /// over a probe set of cells and directions.
    pub fn ellipticity_certificate(&self, grid: Grid) -> Result<()> {
        let (delta, upper) = self.ellipticity;
        if !(delta > 0.0 && upper >= delta) {
            return Err(Error::Admissibility(format!(
                "declared ellipticity window ({delta}, {upper}) is not positive"
            )));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0x0e11157_u64);
        let cells = grid.cells();
        let tol = 1e-12;
        for probe in 0..256 {
            let idx = (probe * 7919) % cells;
            let (a11, a22, a12) = self.a_at(idx);
            let (l1, l2): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let (l1, l2) = if grid.dim() == 1 { (1.0, 0.0) } else { (l1, l2) };
            let norm2 = l1 * l1 + l2 * l2;
            if norm2 == 0.0 {
                continue;
            }
            let quad = a11 * l1 * l1 + 2.0 * a12 * l1 * l2 + a22 * l2 * l2;
            let q = quad / norm2;
            if q < delta * (1.0 - tol) - tol || q > upper * (1.0 + tol) + tol {
                return Err(Error::Admissibility(format!(
                    "Rayleigh quotient {q} outside declared window ({delta}, {upper}) at cell {idx}"
                )));
            }
        }
        Ok(())
    }
}

/// Smooth random field in a declared Hölder class: a truncated random
/// Fourier series with amplitude decay `|k|^{-(α + d/2 + 0.05)}`, squashed
/// into the ellipticity window `(δ, K)` by an affine-tanh map; fixed per
/// replica through the seed.
pub fn random_hoelder_iso(
    grid: Grid,
    coeff_alpha: f64,
    delta: f64,
    upper: f64,
    seed: u64,
) -> Result<CoefficientField> {
    if !(delta > 0.0 && upper > delta) {
        return Err(Error::domain("need 0 < delta < K"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xc0ef_f1e1d_u64);
    let fft = TorusFft::new(grid);
    let decay = coeff_alpha + grid.dim() as f64 / 2.0 + 0.05;
    let mut spec = vec![num_complex::Complex64::default(); grid.cells()];
    for idx in 1..grid.cells() {
        let nidx = crate::hilbert::negate_index(grid, idx);
        let ksq = grid.xi_sq(idx);
        let amp = ksq.sqrt().powf(-decay);
        if nidx == idx {
            let a: f64 = StandardNormal.sample(&mut rng);
            spec[idx] = num_complex::Complex64::new(amp * a, 0.0);
        } else if idx < nidx {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            spec[idx] = amp * num_complex::Complex64::new(a, b);
            spec[nidx] = amp * num_complex::Complex64::new(a, -b);
        }
    }
    let raw = fft.inverse(&spec);
    let scale = raw.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    let mid = 0.5 * (delta + upper);
    let half = 0.5 * (upper - delta);
    let values: Vec<f64> = raw.iter().map(|v| mid + half * (1.5 * v / scale).tanh() * 0.98).collect();
    let a = GridFunction { grid, values };
    Ok(CoefficientField::var_iso(a, DriftField::Zero, coeff_alpha, (delta, upper)))
}
