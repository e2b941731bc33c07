//! Picard fixed-point solver for the evolution (mild) form: the map
//!
//! ```text
//! T u(t_n) = G(t_n,0) u0 + Σ_{i<n} G(t_n,t_i) [ dt·f(u(t_i)) + h(u(t_i)) ⊙ ΔF_i ]
//! ```
//!
//! with LEFT-POINT evaluation of the noise coefficient (Itô/Walsh
//! predictability). The Green kernel is the exact Gaussian multiplier for
//! constant coefficients (fast path) and the θ-scheme evolution for
//! variable ones; either way `G(t_n, t_i)` is the (n-i)-fold one-step
//! propagator, so one application of T is a single forward sweep.

use crate::correlation::nu_finite_rule;
use crate::error::Error;
use crate::fft::TorusFft;
use crate::green::exact_step_multiplier;
use crate::grid::Grid;
use crate::noise::NoiseIncrements;
use crate::problem::{ProblemSpec, Provenance, SolutionField};
use crate::weak::{SchemeConfig, ThetaStepper};
use crate::Result;
use num_complex::Complex64;

/// Options of the mild solver.
#[derive(Debug, Clone, Copy)]
pub struct MildOptions {
    /// Exponent of the space-time norm used for Picard increments.
    pub p: f64,
    /// θ-scheme parameters for the variable-coefficient propagator.
    pub scheme: SchemeConfig,
}

impl Default for MildOptions {
    fn default() -> Self {
        MildOptions { p: 2.0, scheme: SchemeConfig::default() }
    }
}

enum Propagator {
    Exact { mult: Vec<Complex64>, fft: TorusFft },
    Theta(Box<ThetaStepper>),
}

impl Propagator {
    fn build(problem: &ProblemSpec, options: &MildOptions) -> Result<Self> {
        match exact_step_multiplier(problem.grid, &problem.coeffs) {
            Ok(mult) => Ok(Propagator::Exact { mult, fft: TorusFft::new(problem.grid) }),
            Err(_) => Ok(Propagator::Theta(Box::new(ThetaStepper::new(
                problem.grid,
                &problem.coeffs,
                &options.scheme,
            )?))),
        }
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            Propagator::Exact { mult, fft } => {
                let mut spec = fft.forward(v);
                for (s, m) in spec.iter_mut().zip(mult) {
                    *s *= *m;
                }
                Ok(fft.inverse(&spec))
            }
            Propagator::Theta(st) => st.step(v, &vec![0.0; v.len()]),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Propagator::Exact { .. } => "mild_picard(green=exact_spectral)",
            Propagator::Theta(_) => "mild_picard(green=theta_scheme)",
        }
    }
}

fn check_inputs(problem: &ProblemSpec, noise: &NoiseIncrements) -> Result<()> {
    if noise.grid != problem.grid {
        return Err(Error::GridMismatch("noise grid differs from problem grid".into()));
    }
    // the function-valued mild theory needs the Dalang condition at η = 1
    if !nu_finite_rule(&problem.model, 1.0) {
        return Err(Error::Admissibility(
            "Dalang integral diverges at eta = 1; the mild formulation is not function-valued".into(),
        ));
    }
    Ok(())
}

fn apply_t_with(
    input: &SolutionField,
    problem: &ProblemSpec,
    noise: &NoiseIncrements,
    prop: &Propagator,
) -> Result<SolutionField> {
    let grid = problem.grid;
    if input.grid != grid {
        return Err(Error::GridMismatch("iterate grid differs from problem grid".into()));
    }
    let cells = grid.cells();
    let dt = grid.dt;
    let mut out = Vec::with_capacity((grid.n_steps + 1) * cells);
    out.extend_from_slice(&problem.u0.values);
    let mut v = problem.u0.values.clone();
    for n in 1..=grid.n_steps {
        let m = n - 1; // left point
        let u_m = input.level(m);
        let row = noise.row(m);
        for i in 0..cells {
            v[i] += dt * problem.f.eval(u_m[i]) + problem.h.eval(u_m[i]) * row[i];
        }
        v = prop.apply(&v)?;
        out.extend_from_slice(&v);
    }
    let mut prov = Provenance::new(prop.name(), noise.seed, 0.0);
    prov.iterations = 1;
    SolutionField::from_levels(grid, out, prov)
}

/// One application of the fixed-point map to an iterate.
pub fn apply_t(input: &SolutionField, problem: &ProblemSpec, noise: &NoiseIncrements) -> Result<SolutionField> {
    check_inputs(problem, noise)?;
    let prop = Propagator::build(problem, &MildOptions::default())?;
    apply_t_with(input, problem, noise, &prop)
}

/// Discrete space-time `L_p` norm of `u - T(u)`.
pub fn picard_residual(u: &SolutionField, problem: &ProblemSpec, noise: &NoiseIncrements, p: f64) -> Result<f64> {
    let tu = apply_t(u, problem, noise)?;
    u.space_time_lp_distance(&tu, p)
}

/// Extend the initial condition constantly over all time levels (the
/// Picard starting iterate).
pub fn initial_extension(problem: &ProblemSpec) -> SolutionField {
    let grid = problem.grid;
    let mut values = Vec::with_capacity((grid.n_steps + 1) * grid.cells());
    for _ in 0..=grid.n_steps {
        values.extend_from_slice(&problem.u0.values);
    }
    SolutionField::from_levels(grid, values, Provenance::new("initial_extension", noise_seed_unset(), 0.0))
        .expect("finite by construction")
}

fn noise_seed_unset() -> u64 {
    0
}

/// Picard iteration of the fixed-point map until the space-time `L_p`
/// increment drops below `tol`; fails with the increment history after
/// `max_iter` applications.
pub fn solve_mild(problem: &ProblemSpec, noise: &NoiseIncrements, tol: f64, max_iter: usize) -> Result<SolutionField> {
    solve_mild_with(problem, noise, tol, max_iter, &MildOptions::default())
}

pub fn solve_mild_with(
    problem: &ProblemSpec,
    noise: &NoiseIncrements,
    tol: f64,
    max_iter: usize,
    options: &MildOptions,
) -> Result<SolutionField> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    check_inputs(problem, noise)?;
    let prop = Propagator::build(problem, options)?;
    if problem.is_linear_additive() {
        // T does not depend on the iterate: one application reaches the
        // fixed point exactly
        let mut sol = apply_t_with(&initial_extension(problem), problem, noise, &prop)?;
        sol.provenance = Provenance::new(prop.name(), noise.seed, tol);
        sol.provenance.iterations = 1;
        sol.provenance.increments = vec![0.0];
        return Ok(sol);
    }
    let mut current = initial_extension(problem);
    let mut increments = Vec::new();
    for k in 1..=max_iter {
        let next = apply_t_with(&current, problem, noise, &prop)?;
        let inc = next.space_time_lp_distance(&current, options.p)?;
        increments.push(inc);
        current = next;
        if inc <= tol {
            current.provenance = Provenance::new(prop.name(), noise.seed, tol);
            current.provenance.iterations = k as u32;
            current.provenance.increments = increments;
            return Ok(current);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last: *increments.last().unwrap_or(&f64::NAN),
        history: increments,
    })
}

/// Memory-light fast path for the linear additive case on long horizons:
/// march the exact-multiplier recursion in spectral space, generating the
/// noise rows spectrally, and keep only every `decimation`-th level from
/// `keep_from_level` on. The result lives on the decimated time mesh
/// (`dt' = decimation·dt`), with level 0 of the output equal to time
/// level `keep_from_level` of the full march.
pub fn solve_additive_streaming(
    problem: &ProblemSpec,
    sampler: &crate::noise::Sampler,
    seed: u64,
    decimation: usize,
    keep_from_level: usize,
) -> Result<SolutionField> {
    if !problem.is_linear_additive() {
        return Err(Error::domain(
            "streaming fast path requires u-independent f and h (linear additive problem)",
        ));
    }
    if !nu_finite_rule(&problem.model, 1.0) {
        return Err(Error::Admissibility(
            "Dalang integral diverges at eta = 1; the mild formulation is not function-valued".into(),
        ));
    }
    let grid = problem.grid;
    if decimation == 0
        || keep_from_level % decimation != 0
        || (grid.n_steps - keep_from_level) % decimation != 0
        || keep_from_level >= grid.n_steps
    {
        return Err(Error::domain(format!(
            "decimation {decimation} must divide the kept window [{keep_from_level}, {}]",
            grid.n_steps
        )));
    }
    let mult = exact_step_multiplier(grid, &problem.coeffs)?;
    let fft = TorusFft::new(grid);
    let sigma = problem.h.eval(0.0);
    let f0 = problem.f.eval(0.0);
    let ld = grid.len().powi(grid.dim() as i32);
    let mut state = fft.forward(&problem.u0.values);
    let kept_steps = (grid.n_steps - keep_from_level) / decimation;
    let mut values = Vec::with_capacity((kept_steps + 1) * grid.cells());
    if keep_from_level == 0 {
        values.extend_from_slice(&problem.u0.values);
    }
    for n in 1..=grid.n_steps {
        let noise_spec = sampler.sample_row_spectrum(seed, n - 1);
        for ((s, m), df) in state.iter_mut().zip(&mult).zip(&noise_spec) {
            *s = m * (*s + sigma * df);
        }
        // constant reaction forcing enters at the zero mode only
        if f0 != 0.0 {
            state[0] += mult[0] * Complex64::new(grid.dt * f0 * ld, 0.0);
        }
        if n >= keep_from_level && (n - keep_from_level) % decimation == 0 {
            values.extend_from_slice(&fft.inverse(&state));
        }
    }
    let out_grid = Grid::new(
        grid.dim(),
        grid.n(),
        grid.len(),
        grid.dt * decimation as f64,
        kept_steps.max(1),
    )?;
    let mut prov = Provenance::new("mild_exact_spectral_streaming", seed, 0.0);
    prov.iterations = 1;
    SolutionField::from_levels(out_grid, values, prov)
}

/// The exact discrete variance of the additive-noise mild scheme at time
/// level `n`: `σ² dt (1/L^d) Σ_k S[k] Σ_{j=1}^{n} |m_k|^{2j}` with the
/// exact one-step multipliers `m_k`. Space-independent by homogeneity.
pub fn additive_variance_oracle(
    problem: &ProblemSpec,
    structure: &crate::hilbert::HilbertStructure,
    sigma: f64,
    n_level: usize,
) -> Result<f64> {
    let grid = problem.grid;
    let mult = exact_step_multiplier(grid, &problem.coeffs)?;
    let ld = grid.len().powi(grid.dim() as i32);
    let mut acc = 0.0;
    for (k, m) in mult.iter().enumerate() {
        let r = m.norm_sqr();
        let s = structure.spectral_weights()[k];
        // Σ_{j=1..n} r^j
        let geo = if (1.0 - r).abs() < 1e-14 {
            n_level as f64
        } else {
            r * (1.0 - r.powi(n_level as i32)) / (1.0 - r)
        };
        acc += s * geo;
    }
    Ok(sigma * sigma * grid.dt * acc / ld)
}

/// A copy of `noise` whose rows at indices `>= from_step` are replaced by
/// freshly sampled rows from a different stream (the future-resampling
/// probe of predictability).
pub fn resample_future(noise: &NoiseIncrements, structure: &crate::hilbert::HilbertStructure, from_step: usize, alt_seed: u64) -> Result<NoiseIncrements> {
    let sampler = crate::noise::Sampler::new(structure, crate::noise::SamplerConfig::default())?;
    let grid = noise.grid;
    let cells = grid.cells();
    let mut data = noise.data().to_vec();
    for step in from_step..grid.n_steps {
        let row = sampler.sample_row(alt_seed, step);
        data[step * cells..(step + 1) * cells].copy_from_slice(&row);
    }
    NoiseIncrements::from_rows(grid, noise.model.clone(), noise.seed, noise.method, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientField;
    use crate::correlation::CorrelationModel;
    use crate::grid::{Grid, GridFunction};
    use crate::hilbert::HilbertStructure;
    use crate::noise::{sample_noise, NoiseIncrements, Sampler, SamplerConfig, SamplingMethod};
    use crate::problem::ReactionFn;
    use approx::assert_relative_eq;

    fn zero_noise(grid: Grid, model: &CorrelationModel) -> NoiseIncrements {
        NoiseIncrements::from_rows(
            grid,
            model.clone(),
            0,
            SamplingMethod::Spectral,
            vec![0.0; grid.n_steps * grid.cells()],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_heat_flow_matches_analytic_convolution() {
        // f = h = 0: T(anything) is the Green evolution of u0
        let grid = Grid::new(1, 128, 2.0 * std::f64::consts::PI, 0.01, 25).unwrap();
        let model = CorrelationModel::white_noise(1).unwrap();
        let u0 = GridFunction::from_fn(grid, |x, _| (3.0 * x).sin() + 0.5 * x.cos());
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Zero,
            ReactionFn::Zero,
            u0,
            model.clone(),
            grid,
        )
        .unwrap();
        let noise = zero_noise(grid, &model);
        let sol = solve_mild(&problem, &noise, 1e-10, 5).unwrap();
        assert_eq!(sol.provenance.iterations, 1);
        let t = grid.horizon();
        for idx in [0usize, 17, 60, 101] {
            let x = grid.point(idx)[0];
            let exact = (-0.5 * 9.0 * t).exp() * (3.0 * x).sin() + 0.5 * (-0.5 * t).exp() * x.cos();
            assert_relative_eq!(sol.level(grid.n_steps)[idx], exact, epsilon = 1e-6);
        }
        // residual of the returned solution
        let res = picard_residual(&sol, &problem, &noise, 2.0).unwrap();
        assert!(res <= 2.0 * 1e-10, "residual {res}");
    }

    #[test]
    fn lipschitz_problem_contracts_geometrically() {
        let grid = Grid::new(1, 32, 8.0, 0.01, 20).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Tanh { scale: 0.4, gain: 1.0 },
            ReactionFn::Tanh { scale: 0.8, gain: 1.0 },
            GridFunction::from_fn(grid, |x, _| 0.3 * (x * 0.9).sin()),
            model.clone(),
            grid,
        )
        .unwrap();
        let noise = sample_noise(grid, &model, 7).unwrap();
        let sol = solve_mild(&problem, &noise, 1e-10, 60).unwrap();
        let ratios = sol.provenance.contraction_ratios();
        assert!(!ratios.is_empty());
        // after the first step the iteration contracts
        for r in ratios.iter().skip(1) {
            assert!(*r < 1.0, "contraction violated: {ratios:?}");
        }
        let res = picard_residual(&sol, &problem, &noise, 2.0).unwrap();
        assert!(res <= 2.0 * 1e-10, "residual {res}");
        // residual decreases monotonically along the iterates after the
        // first step
        let mut iterate = initial_extension(&problem);
        let mut residuals = Vec::new();
        for _ in 0..6 {
            iterate = apply_t(&iterate, &problem, &noise).unwrap();
            residuals.push(picard_residual(&iterate, &problem, &noise, 2.0).unwrap());
        }
        for w in residuals.windows(2).skip(1) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "residuals along iterates: {residuals:?}");
        }
    }

    #[test]
    fn additive_case_depends_on_iterate_only_through_f() {
        // with h constant, T(u) and T(u') differ exactly by the propagated
        // f-term difference; with f = 0 they coincide for any iterates
        let grid = Grid::new(1, 16, 8.0, 0.01, 6).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let problem = ProblemSpec::additive_heat(grid, model.clone(), 1.0).unwrap();
        let noise = sample_noise(grid, &model, 2).unwrap();
        let u = initial_extension(&problem);
        let mut vals = u.values().to_vec();
        for (i, v) in vals.iter_mut().enumerate() {
            *v += ((i as f64) * 0.3).sin();
        }
        let u_prime = SolutionField::from_levels(grid, vals, u.provenance.clone()).unwrap();
        let a = apply_t(&u, &problem, &noise).unwrap();
        let b = apply_t(&u_prime, &problem, &noise).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn tolerance_refinement_is_cauchy() {
        let grid = Grid::new(1, 32, 8.0, 0.01, 16).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Zero,
            ReactionFn::Affine { c0: 0.8, c1: 0.4 },
            GridFunction::zeros(grid),
            model.clone(),
            grid,
        )
        .unwrap();
        let noise = sample_noise(grid, &model, 13).unwrap();
        let tol = 1e-6;
        let a = solve_mild(&problem, &noise, tol, 60).unwrap();
        let b = solve_mild(&problem, &noise, tol / 10.0, 60).unwrap();
        let d = a.space_time_lp_distance(&b, 2.0).unwrap();
        assert!(d <= tol, "tol refinement moved the solution by {d} > {tol}");
    }

    #[test]
    fn non_convergence_reports_history() {
        let grid = Grid::new(1, 16, 4.0, 0.01, 8).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Zero,
            ReactionFn::Affine { c0: 1.0, c1: 0.5 },
            GridFunction::zeros(grid),
            model.clone(),
            grid,
        )
        .unwrap();
        let noise = sample_noise(grid, &model, 3).unwrap();
        match solve_mild(&problem, &noise, 1e-300, 3) {
            Err(Error::NonConvergence { iterations, history, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn additive_variance_matches_exact_discrete_oracle() {
        let grid = Grid::new(1, 32, 16.0, 0.02, 12).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let sigma = 1.0;
        let problem = ProblemSpec::additive_heat(grid, model.clone(), sigma).unwrap();
        let n_rep = 1500;
        let probes = [3usize, 17, 30];
        let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(n_rep); probes.len()];
        let mut means: Vec<Vec<f64>> = vec![Vec::with_capacity(n_rep); probes.len()];
        for seed in 0..n_rep {
            let noise = sampler.sample(seed as u64);
            let sol = solve_mild(&problem, &noise, 1e-12, 4).unwrap();
            for (j, p) in probes.iter().enumerate() {
                let v = sol.level(grid.n_steps)[*p];
                samples[j].push(v * v);
                means[j].push(v);
            }
        }
        let target = additive_variance_oracle(&problem, &structure, sigma, grid.n_steps).unwrap();
        for j in 0..probes.len() {
            let n = n_rep as f64;
            let mean_sq = samples[j].iter().sum::<f64>() / n;
            let var_of_sq = samples[j].iter().map(|v| (v - mean_sq) * (v - mean_sq)).sum::<f64>() / (n - 1.0);
            let se = (var_of_sq / n).sqrt();
            assert!(
                (mean_sq - target).abs() <= 3.0 * se,
                "probe {j}: variance {mean_sq} vs oracle {target} (3se {})",
                3.0 * se
            );
            let mean = means[j].iter().sum::<f64>() / n;
            let se_mean = (mean_sq / n).sqrt();
            assert!(mean.abs() <= 3.0 * se_mean, "mean {mean} not centered");
        }
    }

    #[test]
    fn streaming_fast_path_matches_full_solve() {
        let grid = Grid::new(1, 32, 8.0, 0.01, 12).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let sampler = Sampler::new(&structure, SamplerConfig::default()).unwrap();
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Const { c: 0.3 },
            ReactionFn::Const { c: 1.0 },
            GridFunction::from_fn(grid, |x, _| 0.2 * (x * 0.8).sin()),
            model.clone(),
            grid,
        )
        .unwrap();
        let seed = 77;
        let noise = sampler.sample(seed);
        let full = solve_mild(&problem, &noise, 1e-12, 4).unwrap();
        let streamed = solve_additive_streaming(&problem, &sampler, seed, 2, 4).unwrap();
        assert_eq!(streamed.grid.n_steps, 4);
        let scale = full.level_fn(grid.n_steps).lp_norm(2.0).max(1.0);
        for k in 0..=4 {
            let full_level = full.level(4 + 2 * k);
            let got = streamed.level(k);
            for (a, b) in full_level.iter().zip(got) {
                assert!((a - b).abs() <= 1e-11 * scale, "level {k}: {a} vs {b}");
            }
        }
        // misaligned windows are refused
        assert!(solve_additive_streaming(&problem, &sampler, seed, 5, 4).is_err());
    }

    #[test]
    fn predictability_under_future_resampling() {
        let grid = Grid::new(1, 16, 8.0, 0.01, 10).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let structure = HilbertStructure::build(grid, &model).unwrap();
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Zero,
            ReactionFn::Affine { c0: 1.0, c1: 0.4 },
            GridFunction::zeros(grid),
            model.clone(),
            grid,
        )
        .unwrap();
        let noise_a = sample_noise(grid, &model, 21).unwrap();
        let cut = 6usize;
        let noise_b = resample_future(&noise_a, &structure, cut, 9999).unwrap();
        assert_ne!(noise_a.data(), noise_b.data());
        // the fixed-point map applied k times is a function of the past
        // noise only, level by level
        let mut ua = initial_extension(&problem);
        let mut ub = initial_extension(&problem);
        for _ in 0..4 {
            ua = apply_t(&ua, &problem, &noise_a).unwrap();
            ub = apply_t(&ub, &problem, &noise_b).unwrap();
        }
        for level in 0..=cut {
            assert_eq!(ua.level(level), ub.level(level), "level {level} changed by future noise");
        }
        assert_ne!(ua.level(grid.n_steps), ub.level(grid.n_steps));
    }

    #[test]
    fn same_seed_gives_bit_identical_solution() {
        let grid = Grid::new(1, 16, 8.0, 0.01, 6).unwrap();
        let model = CorrelationModel::gaussian(1.0, 1).unwrap();
        let problem = ProblemSpec::new(
            CoefficientField::heat(),
            ReactionFn::Affine { c0: 0.1, c1: -0.3 },
            ReactionFn::Tanh { scale: 0.5, gain: 1.0 },
            GridFunction::zeros(grid),
            model.clone(),
            grid,
        )
        .unwrap();
        let n1 = sample_noise(grid, &model, 5).unwrap();
        let n2 = sample_noise(grid, &model, 5).unwrap();
        let a = solve_mild(&problem, &n1, 1e-9, 40).unwrap();
        let b = solve_mild(&problem, &n2, 1e-9, 40).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn mild_requires_dalang_condition() {
        let grid = Grid::new(2, 8, 4.0, 0.001, 4).unwrap();
        let model = CorrelationModel::white_noise(2).unwrap();
        let problem = ProblemSpec::additive_heat(grid, model.clone(), 1.0).unwrap();
        let noise = zero_noise(grid, &model);
        assert!(matches!(
            solve_mild(&problem, &noise, 1e-8, 5),
            Err(Error::Admissibility(_))
        ));
    }
}
