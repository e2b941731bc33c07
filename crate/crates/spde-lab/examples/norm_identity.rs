//! The discrete Hilbert space of the noise: Parseval on the orthonormal
//! system, the smoothed norm field h̄, the norm identity
//! `‖g‖_{-η,p} = ‖h̄‖_p ≤ ν^{1/2}‖h‖_p`, and the stencil smoothing
//! inequality ratio.
//!
//! Run with `cargo run --release --example norm_identity`.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use spde_lab::correlation::{nu_eta_d, CorrelationModel};
use spde_lab::grid::{Grid, GridFunction};
use spde_lab::hilbert::HilbertStructure;
use spde_lab::sobolev::{bessel_potential_with, smoothing_ratio};

fn main() -> spde_lab::Result<()> {
    let grid = Grid::new(1, 128, 32.0, 0.01, 1)?;
    let eta = 0.75;
    let model = CorrelationModel::riesz(0.5, 1)?;
    let structure = HilbertStructure::build(grid, &model)?;
    let nu = nu_eta_d(&model, eta)?.finite().expect("admissible");

    // Parseval on the retained span
    let cons = structure.build_cons()?;
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let coeffs: Vec<f64> = (0..cons.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let f = structure.cons_synthesize(&cons, &coeffs)?;
    let back = structure.cons_project(&cons, &f)?;
    let parseval_defect = (back.iter().map(|c| c * c).sum::<f64>() - structure.h_norm_sq(&f)?).abs();
    println!("Parseval defect on {} retained modes: {parseval_defect:.3e}", cons.len());

    // norm identity: CONS route vs smoothed-field route, and the nu bound
    let v_fields: Vec<GridFunction> = (0..cons.len())
        .map(|i| structure.v_field(&cons.member(i)))
        .collect::<spde_lab::Result<_>>()?;
    println!("\n{:>4} {:>12} {:>12} {:>12}", "h#", "‖h̄‖₂/‖h‖₂", "CONS route", "√ν bound");
    for seed in 0..5 {
        let h = GridFunction {
            grid,
            values: {
                let mut r = ChaCha12Rng::seed_from_u64(100 + seed);
                (0..grid.cells()).map(|_| r.random::<f64>() - 0.5).collect()
            },
        };
        let hb = structure.h_bar(&h, eta)?;
        let mut sq = vec![0.0; grid.cells()];
        for v in &v_fields {
            let gk = GridFunction {
                grid,
                values: v.values.iter().zip(&h.values).map(|(a, b)| a * b).collect(),
            };
            let smooth = bessel_potential_with(structure.fft(), &gk, -eta);
            for (s, val) in sq.iter_mut().zip(&smooth.values) {
                *s += val * val;
            }
        }
        let seq = GridFunction { grid, values: sq.iter().map(|v| v.sqrt()).collect() };
        println!(
            "{seed:>4} {:>12.6} {:>12.6} {:>12.6}",
            hb.lp_norm(2.0) / h.lp_norm(2.0),
            seq.lp_norm(2.0) / h.lp_norm(2.0),
            nu.sqrt()
        );
    }

    // smoothing-inequality ratio across random smooth fields
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut r = ChaCha12Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..grid.cells()).map(|_| r.random::<f64>() - 0.5).collect();
        let mut spec = structure.fft().forward(&raw);
        for (idx, v) in spec.iter_mut().enumerate() {
            *v *= (-0.25 * grid.xi_sq(idx)).exp();
        }
        let psi = GridFunction { grid, values: structure.fft().inverse(&spec) };
        worst = worst.max(smoothing_ratio(&psi, 0.5, 2.0)?);
    }
    println!("\nsmoothing inequality: sup ‖(1-Δ)^0.5 ψ‖₂ / (‖Δψ‖₂+‖ψ‖₂) over 50 fields = {worst:.4}");
    Ok(())
}
