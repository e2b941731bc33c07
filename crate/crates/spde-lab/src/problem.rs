//! Problem specification shared by both solvers: coefficients, reaction
//! and noise-coefficient function families, initial data, correlation
//! model, grid — plus the solution container with provenance.

use crate::coeffs::CoefficientField;
use crate::correlation::CorrelationModel;
use crate::error::Error;
use crate::grid::{Grid, GridFunction};
use crate::Result;
use serde::Serialize;
use std::io::Write;

/// Pointwise function family for the reaction term `f(t, x, u)` and the
/// noise coefficient `h(t, x, u)`: the affine family plus a small registry
/// of bounded-Lipschitz nonlinearities with stated Lipschitz constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum ReactionFn {
    Zero,
    /// `u ↦ c` (additive forcing).
    Const { c: f64 },
    /// `u ↦ c0 + c1·u`.
    Affine { c0: f64, c1: f64 },
    /// `u ↦ scale·tanh(gain·u)`; Lipschitz constant `scale·gain`.
    Tanh { scale: f64, gain: f64 },
    /// `u ↦ scale·sin(freq·u)`; Lipschitz constant `scale·freq`.
    SinWave { scale: f64, freq: f64 },
}

impl ReactionFn {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            ReactionFn::Zero => 0.0,
            ReactionFn::Const { c } => *c,
            ReactionFn::Affine { c0, c1 } => c0 + c1 * u,
            ReactionFn::Tanh { scale, gain } => scale * (gain * u).tanh(),
            ReactionFn::SinWave { scale, freq } => scale * (freq * u).sin(),
        }
    }

    /// Declared Lipschitz constant in u.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ReactionFn::Zero | ReactionFn::Const { .. } => 0.0,
            ReactionFn::Affine { c1, .. } => c1.abs(),
            ReactionFn::Tanh { scale, gain } => (scale * gain).abs(),
            ReactionFn::SinWave { scale, freq } => (scale * freq).abs(),
        }
    }

    /// `true` when the value does not depend on u (so the fixed-point map
    /// is constant and one application solves the equation).
    pub fn is_u_independent(&self) -> bool {
        matches!(self, ReactionFn::Zero | ReactionFn::Const { .. })
    }

    /// Validate the declared Lipschitz constant against sampled difference
    /// quotients.
    pub fn validate_lipschitz(&self) -> Result<()> {
        let k = self.lipschitz();
        let mut worst = 0.0f64;
        let n = 400;
        for i in 0..n {
            let u = -6.0 + 12.0 * (i as f64) / n as f64;
            let v = u + 1e-3 + (i as f64) * 1.7e-5;
            let q = (self.eval(u) - self.eval(v)).abs() / (u - v).abs();
            worst = worst.max(q);
        }
        if worst <= k * (1.0 + 1e-6) + 1e-300 {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "sampled difference quotient {worst} exceeds declared Lipschitz constant {k}"
            )))
        }
    }
}

/// Full problem description for `du = [a^{ij}u_{x^i x^j} + b^i u_{x^i}
/// + f(t,x,u)]dt + h(t,x,u)F(dt,x)` on the periodic lattice.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub coeffs: CoefficientField,
    pub f: ReactionFn,
    pub h: ReactionFn,
    pub u0: GridFunction,
    pub model: CorrelationModel,
    pub grid: Grid,
}

impl ProblemSpec {
    pub fn new(
        coeffs: CoefficientField,
        f: ReactionFn,
        h: ReactionFn,
        u0: GridFunction,
        model: CorrelationModel,
        grid: Grid,
    ) -> Result<Self> {
        if u0.grid != grid {
            return Err(Error::GridMismatch("initial condition grid differs from problem grid".into()));
        }
        if model.dim() != grid.dim() {
            return Err(Error::GridMismatch("model dimension differs from grid dimension".into()));
        }
        f.validate_lipschitz()?;
        h.validate_lipschitz()?;
        coeffs.ellipticity_certificate(grid)?;
        Ok(ProblemSpec { coeffs, f, h, u0, model, grid })
    }

    /// The additive-noise heat equation: `a = Id/2`, `b = 0`, `f = 0`,
    /// `h ≡ sigma`, `u0 = 0`.
    pub fn additive_heat(grid: Grid, model: CorrelationModel, sigma: f64) -> Result<Self> {
        ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Zero,
            ReactionFn::Const { c: sigma },
            GridFunction::zeros(grid),
            model,
            grid,
        )
    }

    /// `true` when both free coefficients are u-independent, so the mild
    /// fixed-point map is constant.
    pub fn is_linear_additive(&self) -> bool {
        self.f.is_u_independent() && self.h.is_u_independent()
    }
}

/// Run metadata carried by every solution field.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub scheme: String,
    pub seed: u64,
    pub tolerance: f64,
    pub iterations: u32,
    /// Picard increment history (empty for the single-pass weak march).
    pub increments: Vec<f64>,
    pub library_version: String,
}

impl Provenance {
    pub fn new(scheme: impl Into<String>, seed: u64, tolerance: f64) -> Self {
        Provenance {
            scheme: scheme.into(),
            seed,
            tolerance,
            iterations: 0,
            increments: Vec::new(),
            library_version: crate::VERSION.to_string(),
        }
    }

    /// Ratios of successive Picard increments (measured contraction).
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.increments.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
    }
}

/// Space-time solution array `u(t_n, x_j)`, `n = 0..=n_steps`.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub grid: Grid,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl SolutionField {
    pub fn from_levels(grid: Grid, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != (grid.n_steps + 1) * grid.cells() {
            return Err(Error::GridMismatch(format!(
                "expected {} values ({} levels x {} cells), got {}",
                (grid.n_steps + 1) * grid.cells(),
                grid.n_steps + 1,
                grid.cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("solution field contains non-finite entries".into()));
        }
        Ok(SolutionField { grid, values, provenance })
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let c = self.grid.cells();
        &self.values[n * c..(n + 1) * c]
    }

    pub fn level_fn(&self, n: usize) -> GridFunction {
        GridFunction { grid: self.grid, values: self.level(n).to_vec() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Discrete `L_p` norm over the full space-time lattice:
    /// `(Σ_n Σ_x |u|^p dx^d dt)^{1/p}`.
    pub fn space_time_lp(&self, p: f64) -> f64 {
        let w = self.grid.cell_volume() * self.grid.dt;
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }

    /// Same norm for the difference of two fields on one grid.
    pub fn space_time_lp_distance(&self, other: &SolutionField, p: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("solution fields on different grids".into()));
        }
        let w = self.grid.cell_volume() * self.grid.dt;
        Ok((self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs().powf(p))
            .sum::<f64>()
            * w)
            .powf(1.0 / p))
    }

    /// Binary persistence: the same flat layout as the noise files
    /// (header then row-major levels); provenance goes to a JSON sidecar.
    pub fn write_binary(&self, w: &mut impl Write, model: &CorrelationModel, seed: u64) -> Result<()> {
        let noise_like = crate::noise::NoiseIncrements::from_rows(
            Grid::new(
                self.grid.dim(),
                self.grid.n(),
                self.grid.len(),
                self.grid.dt,
                self.grid.n_steps + 1,
            )?,
            model.clone(),
            seed,
            crate::noise::SamplingMethod::Spectral,
            self.values.clone(),
        )?;
        noise_like.write_to(w)
    }

    pub fn provenance_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.provenance)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reaction_families_and_lipschitz() {
        let f = ReactionFn::Affine { c0: 1.0, c1: -2.0 };
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.lipschitz(), 2.0);
        f.validate_lipschitz().unwrap();
        ReactionFn::Tanh { scale: 0.3, gain: 2.0 }.validate_lipschitz().unwrap();
        ReactionFn::SinWave { scale: 1.0, freq: 0.5 }.validate_lipschitz().unwrap();
        assert!(ReactionFn::Zero.is_u_independent());
        assert!(ReactionFn::Const { c: 3.0 }.is_u_independent());
        assert!(!ReactionFn::Affine { c0: 0.0, c1: 1.0 }.is_u_independent());
    }

    #[test]
    fn problem_validation() {
        let grid = Grid::new(1, 16, 4.0, 0.001, 8).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let p = ProblemSpec::additive_heat(grid, model.clone(), 1.0).unwrap();
        assert!(p.is_linear_additive());
        // mismatched initial-condition grid
        let other = Grid::new(1, 32, 4.0, 0.001, 8).unwrap();
        assert!(ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Zero,
            ReactionFn::Zero,
            GridFunction::zeros(other),
            model,
            grid,
        )
        .is_err());
    }

    #[test]
    fn solution_field_norms_and_levels() {
        let grid = Grid::new(1, 4, 2.0, 0.5, 2).unwrap();
        let values = vec![1.0; 3 * 4];
        let s = SolutionField::from_levels(grid, values, Provenance::new("test", 0, 0.0)).unwrap();
        assert_eq!(s.level(2), &[1.0; 4]);
        // (Σ 1 · dx · dt)^{1/2}: 12 entries · 0.5 · 0.5 = 3
        approx::assert_relative_eq!(s.space_time_lp(2.0), 3f64.sqrt(), max_relative = 1e-14);
        assert!(SolutionField::from_levels(grid, vec![f64::NAN; 12], Provenance::new("t", 0, 0.0)).is_err());
    }
}
