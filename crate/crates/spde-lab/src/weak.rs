//! θ-scheme method of lines for the weak form on the periodic lattice:
//! time-march `(I - θ·dt·L_h) u_{n+1} = (I + (1-θ)·dt·L_h) u_n + dt·f + h ⊙ ΔF_n`
//! with `L_h` the centered second-order discretization of
//! `a^{ij} D_{ij} + b^i D_i`, plus the weak-pairing residual diagnostics.
//!
//! The noise term is always explicit (left point), preserving the Itô
//! predictability of the integrand.

use crate::coeffs::{CoefficientField, DiffusionField, DriftField};
use crate::error::Error;
use crate::fft::TorusFft;
use crate::grid::{Grid, GridFunction};
use crate::noise::NoiseIncrements;
use crate::problem::{ProblemSpec, Provenance, SolutionField};
use crate::Result;
use num_complex::Complex64;

/// Time discretization parameters; stencil is centered second-order.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    /// Implicitness in [0, 1]; 1/2 is the default (Crank-Nicolson drift,
    /// explicit noise).
    pub theta: f64,
    /// Relative tolerance of the inner linear solves (iterative path).
    pub solve_tol: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig { theta: 0.5, solve_tol: 1e-12 }
    }
}

enum ImplicitSolver {
    /// Direct Sherman-Morrison / Thomas solve (d = 1, variable
    /// coefficients allowed).
    CyclicTridiag { sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64> },
    /// Exact diagonalization of the stencil operator (constant
    /// coefficients, any d).
    Circulant { inv_implicit: Vec<Complex64> },
    /// Matrix-free BiCGStab with a mean-coefficient circulant
    /// preconditioner (d = 2, variable coefficients).
    BiCgStab { precond_inv: Vec<Complex64>, tol: f64 },
}

/// One-step θ-scheme operator for a fixed coefficient field.
pub struct ThetaStepper {
    grid: Grid,
    theta: f64,
    a11: Vec<f64>,
    a22: Vec<f64>,
    a12: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    solver: ImplicitSolver,
    fft: TorusFft,
}

fn coeffs_are_constant(c: &CoefficientField) -> bool {
    let diff_const = matches!(c.diffusion, DiffusionField::ConstIso(_) | DiffusionField::ConstMatrix2(_));
    let drift_const = matches!(c.drift, DriftField::Zero | DriftField::Const(_));
    diff_const && drift_const
}

impl ThetaStepper {
    pub fn new(grid: Grid, coeffs: &CoefficientField, scheme: &SchemeConfig) -> Result<Self> {
        let theta = scheme.theta;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::domain(format!("theta must lie in [0,1], got {theta}")));
        }
        grid.stability_certificate(theta, coeffs.ellipticity.1)?;
        let cells = grid.cells();
        let mut a11 = vec![0.0; cells];
        let mut a22 = vec![0.0; cells];
        let mut a12 = vec![0.0; cells];
        let mut b1 = vec![0.0; cells];
        let mut b2 = vec![0.0; cells];
        for idx in 0..cells {
            let (x11, x22, x12) = coeffs.a_at(idx);
            let (y1, y2) = coeffs.b_at(idx);
            a11[idx] = x11;
            a22[idx] = x22;
            a12[idx] = x12;
            b1[idx] = y1;
            b2[idx] = y2;
        }
        let fft = TorusFft::new(grid);
        let dt = grid.dt;
        let dx = grid.dx();
        let solver = if coeffs_are_constant(coeffs) {
            // implicit symbol 1 - θ·dt·λ(k)
            let inv_implicit = (0..cells)
                .map(|k| {
                    let lam = stencil_operator_symbol(grid, k, a11[0], a22[0], a12[0], b1[0], b2[0]);
                    let den = Complex64::new(1.0, 0.0) - theta * dt * lam;
                    1.0 / den
                })
                .collect();
            ImplicitSolver::Circulant { inv_implicit }
        } else if grid.dim() == 1 {
            let mut sub = vec![0.0; cells];
            let mut diag = vec![0.0; cells];
            let mut sup = vec![0.0; cells];
            for i in 0..cells {
                let ad = a11[i] / (dx * dx);
                let bd = b1[i] / (2.0 * dx);
                sub[i] = -theta * dt * (ad - bd);
                diag[i] = 1.0 + 2.0 * theta * dt * ad;
                sup[i] = -theta * dt * (ad + bd);
            }
            ImplicitSolver::CyclicTridiag { sub, diag, sup }
        } else {
            // mean-coefficient circulant preconditioner
            let n = cells as f64;
            let (m11, m22, m12) = (
                a11.iter().sum::<f64>() / n,
                a22.iter().sum::<f64>() / n,
                a12.iter().sum::<f64>() / n,
            );
            let (mb1, mb2) = (b1.iter().sum::<f64>() / n, b2.iter().sum::<f64>() / n);
            let precond_inv = (0..cells)
                .map(|k| {
                    let lam = stencil_operator_symbol(grid, k, m11, m22, m12, mb1, mb2);
                    1.0 / (Complex64::new(1.0, 0.0) - theta * dt * lam)
                })
                .collect();
            ImplicitSolver::BiCgStab { precond_inv, tol: scheme.solve_tol }
        };
        Ok(ThetaStepper { grid, theta, a11, a22, a12, b1, b2, solver, fft })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Centered stencil `L_h u = a^{ij} D_{ij} u + b^i D_i u`.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        let grid = self.grid;
        let n = grid.n();
        let dx = grid.dx();
        let inv_dx2 = 1.0 / (dx * dx);
        let inv_2dx = 1.0 / (2.0 * dx);
        let mut out = vec![0.0; grid.cells()];
        match grid.dim() {
            1 => {
                for i in 0..n {
                    let um = u[(i + n - 1) % n];
                    let uc = u[i];
                    let up = u[(i + 1) % n];
                    out[i] = self.a11[i] * (um - 2.0 * uc + up) * inv_dx2
                        + self.b1[i] * (up - um) * inv_2dx;
                }
            }
            _ => {
                for iy in 0..n {
                    for ix in 0..n {
                        let idx = grid.index(ix, iy);
                        let uc = u[idx];
                        let uxm = u[grid.index(ix + n - 1, iy)];
                        let uxp = u[grid.index(ix + 1, iy)];
                        let uym = u[grid.index(ix, iy + n - 1)];
                        let uyp = u[grid.index(ix, iy + 1)];
                        let upp = u[grid.index(ix + 1, iy + 1)];
                        let upm = u[grid.index(ix + 1, iy + n - 1)];
                        let ump = u[grid.index(ix + n - 1, iy + 1)];
                        let umm = u[grid.index(ix + n - 1, iy + n - 1)];
                        out[idx] = self.a11[idx] * (uxm - 2.0 * uc + uxp) * inv_dx2
                            + self.a22[idx] * (uym - 2.0 * uc + uyp) * inv_dx2
                            + 2.0 * self.a12[idx] * (upp - upm - ump + umm) * (0.25 * inv_dx2)
                            + self.b1[idx] * (uxp - uxm) * inv_2dx
                            + self.b2[idx] * (uyp - uym) * inv_2dx;
                    }
                }
            }
        }
        out
    }

    /// Solve `(I - θ·dt·L_h) x = rhs`.
    pub fn implicit_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.solver {
            ImplicitSolver::Circulant { inv_implicit } => {
                let mut spec = self.fft.forward(rhs);
                for (v, m) in spec.iter_mut().zip(inv_implicit) {
                    *v *= *m;
                }
                Ok(self.fft.inverse(&spec))
            }
            ImplicitSolver::CyclicTridiag { sub, diag, sup } => Ok(cyclic_tridiag(sub, diag, sup, rhs)?),
            ImplicitSolver::BiCgStab { precond_inv, tol } => {
                let apply = |v: &[f64]| -> Vec<f64> {
                    let lv = self.apply_l(v);
                    v.iter()
                        .zip(&lv)
                        .map(|(x, l)| x - self.theta * self.grid.dt * l)
                        .collect()
                };
                let precond = |v: &[f64]| -> Vec<f64> {
                    let mut spec = self.fft.forward(v);
                    for (s, m) in spec.iter_mut().zip(precond_inv) {
                        *s *= *m;
                    }
                    self.fft.inverse(&spec)
                };
                bicgstab(&apply, &precond, rhs, *tol, 500)
            }
        }
    }

    /// One θ-step: `(I - θ·dt·L) u' = (I + (1-θ)·dt·L) u + forcing`.
    pub fn step(&self, u: &[f64], forcing: &[f64]) -> Result<Vec<f64>> {
        let dt = self.grid.dt;
        let lu = self.apply_l(u);
        let rhs: Vec<f64> = u
            .iter()
            .zip(&lu)
            .zip(forcing)
            .map(|((x, l), f)| x + (1.0 - self.theta) * dt * l + f)
            .collect();
        self.implicit_solve(&rhs)
    }
}

/// Symbol of the centered stencil operator at one spectral index:
/// `λ(k) = -(a11 s1 + a22 s2) - 2 a12 sin1 sin2/dx² + i(b1 sin1 + b2 sin2)/dx`.
pub fn stencil_operator_symbol(grid: Grid, idx: usize, a11: f64, a22: f64, a12: f64, b1: f64, b2: f64) -> Complex64 {
    let dx = grid.dx();
    let base = 2.0 * std::f64::consts::PI / grid.len();
    let c = grid.coords(idx);
    let x1 = grid.signed_freq(c[0]) as f64 * base * dx;
    let (s1, t1) = (2.0 * (1.0 - x1.cos()) / (dx * dx), x1.sin() / dx);
    let (s2, t2, cross) = if grid.dim() == 2 {
        let x2 = grid.signed_freq(c[1]) as f64 * base * dx;
        (2.0 * (1.0 - x2.cos()) / (dx * dx), x2.sin() / dx, x1.sin() * x2.sin() / (dx * dx))
    } else {
        (0.0, 0.0, 0.0)
    };
    Complex64::new(-(a11 * s1 + a22 * s2) - 2.0 * a12 * cross, b1 * t1 + b2 * t2)
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::LinearSolve("tridiagonal pivot vanished".into()));
    }
    dp[0] = rhs[0] / beta;
    for i in 1..n {
        cp[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * cp[i - 1];
        if beta == 0.0 {
            return Err(Error::LinearSolve("tridiagonal pivot vanished".into()));
        }
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / beta;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }
    Ok(x)
}

/// Periodic tridiagonal solve by the Sherman-Morrison correction.
fn cyclic_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if n < 3 {
        return Err(Error::LinearSolve("cyclic tridiagonal system needs n >= 3".into()));
    }
    let alpha = sup[n - 1]; // corner A[n-1][0]
    let beta = sub[0]; // corner A[0][n-1]
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = thomas(sub, &bb, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(sub, &bb, sup, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bicgstab(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let b_norm = dot(b, b).sqrt().max(1e-300);
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::LinearSolve("bicgstab breakdown (rho = 0)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = apply(&p_hat);
        alpha = rho_new / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if dot(&s, &s).sqrt() <= tol * b_norm {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(x);
        }
        let s_hat = precond(&s);
        let t = apply(&s_hat);
        omega = dot(&t, &s) / dot(&t, &t).max(1e-300);
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return Ok(x);
        }
        rho = rho_new;
    }
    Err(Error::LinearSolve(format!("bicgstab did not converge in {max_iter} iterations")))
}

/// Time-march the weak form. Coefficients may be random (realized per
/// replica); the noise enters explicitly through the left point.
pub fn solve_weak(problem: &ProblemSpec, noise: &NoiseIncrements, scheme: &SchemeConfig) -> Result<SolutionField> {
    if noise.grid != problem.grid {
        return Err(Error::GridMismatch("noise grid differs from problem grid".into()));
    }
    problem.coeffs.ellipticity_certificate(problem.grid)?;
    let grid = problem.grid;
    let stepper = ThetaStepper::new(grid, &problem.coeffs, scheme)?;
    let cells = grid.cells();
    let dt = grid.dt;
    let mut values = Vec::with_capacity((grid.n_steps + 1) * cells);
    values.extend_from_slice(&problem.u0.values);
    let mut cur = problem.u0.values.clone();
    let mut forcing = vec![0.0; cells];
    for n in 0..grid.n_steps {
        let row = noise.row(n);
        for i in 0..cells {
            forcing[i] = dt * problem.f.eval(cur[i]) + problem.h.eval(cur[i]) * row[i];
        }
        cur = stepper.step(&cur, &forcing)?;
        values.extend_from_slice(&cur);
    }
    let mut prov = Provenance::new(
        format!("theta_scheme(theta={}, stencil=centered2)", scheme.theta),
        noise.seed,
        scheme.solve_tol,
    );
    prov.iterations = grid.n_steps as u32;
    SolutionField::from_levels(grid, values, prov)
}

/// Max-over-time residual of the discrete weak identity
/// `(u(t), φ) = (u0, φ) + Σ_s dt (L_h u_s + f(u_s), φ) + Σ_s (h(u_s)⊙ΔF_s, φ)`
/// for a time-constant test function.
pub fn weak_pairing_residual(
    u: &SolutionField,
    phi: &GridFunction,
    problem: &ProblemSpec,
    noise: &NoiseIncrements,
) -> Result<f64> {
    if phi.grid != u.grid {
        return Err(Error::GridMismatch("test function on a different grid".into()));
    }
    let levels: Vec<GridFunction> = (0..=u.grid.n_steps).map(|_| phi.clone()).collect();
    time_dependent_pairing_residual(u, &levels, problem, noise)
}

/// Max-over-time residual of the time-dependent pairing identity,
/// including the `Σ (u_s, ∂_s Φ_s)` term with the forward difference of Φ.
pub fn time_dependent_pairing_residual(
    u: &SolutionField,
    phi_levels: &[GridFunction],
    problem: &ProblemSpec,
    noise: &NoiseIncrements,
) -> Result<f64> {
    let grid = u.grid;
    if phi_levels.len() != grid.n_steps + 1 {
        return Err(Error::GridMismatch(format!(
            "need {} test-function levels, got {}",
            grid.n_steps + 1,
            phi_levels.len()
        )));
    }
    for p in phi_levels {
        if p.grid != grid {
            return Err(Error::GridMismatch("test-function level on a different grid".into()));
        }
    }
    if noise.grid != grid {
        return Err(Error::GridMismatch("noise grid differs from solution grid".into()));
    }
    let scheme = SchemeConfig::default();
    let stepper = ThetaStepper::new(grid, &problem.coeffs, &scheme)?;
    let vol = grid.cell_volume();
    let dt = grid.dt;
    let pair = |a: &[f64], b: &[f64]| -> f64 { dot(a, b) * vol };
    let u0 = u.level(0);
    let base = pair(u0, &phi_levels[0].values);
    let mut running = 0.0;
    let mut worst = 0.0f64;
    for m in 0..grid.n_steps {
        let um = u.level(m);
        let lum = stepper.apply_l(um);
        let fm: Vec<f64> = um.iter().map(|v| problem.f.eval(*v)).collect();
        let noise_term: Vec<f64> = um
            .iter()
            .zip(noise.row(m))
            .map(|(v, df)| problem.h.eval(*v) * df)
            .collect();
        let dphi: Vec<f64> = phi_levels[m + 1]
            .values
            .iter()
            .zip(&phi_levels[m].values)
            .map(|(a, b)| a - b)
            .collect();
        running += pair(um, &dphi); // (u_m, Φ_{m+1} - Φ_m) = dt·(u_m, ∂_sΦ)
        running += dt * (pair(&lum, &phi_levels[m].values) + pair(&fm, &phi_levels[m].values));
        running += pair(&noise_term, &phi_levels[m].values);
        let lhs = pair(u.level(m + 1), &phi_levels[m + 1].values);
        worst = worst.max((lhs - base - running).abs());
    }
    Ok(worst)
}
