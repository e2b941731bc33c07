//! Property-based invariants over randomized inputs.

use proptest::prelude::*;
use spde_lab::correlation::CorrelationModel;
use spde_lab::grid::{Grid, GridFunction};
use spde_lab::hilbert::HilbertStructure;
use spde_lab::noise::{sample_noise, NoiseIncrements};
use spde_lab::regularity::{estimate_exponent, structure_fn, Axis};
use spde_lab::sobolev::bessel_potential;

fn small_field(grid: Grid, seed: u64) -> GridFunction {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    GridFunction {
        grid,
        values: (0..grid.cells()).map(|_| rng.random::<f64>() - 0.5).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// <.,.>_H is symmetric, bilinear and positive semidefinite for every
    /// model family and random fields.
    #[test]
    fn h_inner_is_a_semi_inner_product(
        seed in 0u64..1000,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        model_pick in 0usize..4,
    ) {
        let grid = Grid::new(1, 16, 8.0, 0.01, 2).unwrap();
        let model = match model_pick {
            0 => CorrelationModel::white_noise(1).unwrap(),
            1 => CorrelationModel::gaussian(0.8, 1).unwrap(),
            2 => CorrelationModel::exponential(1.2, 1).unwrap(),
            _ => CorrelationModel::riesz(0.5, 1).unwrap(),
        };
        let hs = HilbertStructure::build(grid, &model).unwrap();
        let f = small_field(grid, seed);
        let g = small_field(grid, seed + 1);
        let w = small_field(grid, seed + 2);
        let sym = (hs.h_inner(&f, &g).unwrap() - hs.h_inner(&g, &f).unwrap()).abs();
        prop_assert!(sym <= 1e-12);
        let combo = GridFunction {
            grid,
            values: f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect(),
        };
        let lhs = hs.h_inner(&combo, &w).unwrap();
        let rhs = a * hs.h_inner(&f, &w).unwrap() + b * hs.h_inner(&g, &w).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert!(hs.h_norm_sq(&f).unwrap() >= -1e-12);
    }

    /// Bessel-potential multipliers compose additively in the order and
    /// invert exactly.
    #[test]
    fn bessel_potential_group_law(seed in 0u64..1000, n1 in -1.5f64..1.5, n2 in -1.5f64..1.5) {
        let grid = Grid::new(1, 32, 8.0, 0.01, 2).unwrap();
        let u = small_field(grid, seed);
        let a = bessel_potential(&bessel_potential(&u, n1), n2);
        let b = bessel_potential(&u, n1 + n2);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        let back = bessel_potential(&bessel_potential(&u, n1), -n1);
        for (x, y) in back.values.iter().zip(&u.values) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    /// The exponent estimator is exactly invariant under positive scaling
    /// of the field.
    #[test]
    fn exponent_estimator_scale_invariant(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let grid = Grid::new(1, 1, 1.0, 1.0, 512).unwrap();
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut path = vec![0.0f64];
        for _ in 0..512 {
            path.push(path.last().unwrap() + rng.random::<f64>() - 0.5);
        }
        let f1 = spde_lab::problem::SolutionField::from_levels(
            grid, path.clone(), spde_lab::problem::Provenance::new("p", 0, 0.0)).unwrap();
        let scaled: Vec<f64> = path.iter().map(|v| v * scale).collect();
        let f2 = spde_lab::problem::SolutionField::from_levels(
            grid, scaled, spde_lab::problem::Provenance::new("p", 0, 0.0)).unwrap();
        let lags = [1usize, 2, 4, 8, 16, 32, 64];
        let e1 = estimate_exponent(&structure_fn(&f1, Axis::Time, 2, &lags, None).unwrap()).unwrap();
        let e2 = estimate_exponent(&structure_fn(&f2, Axis::Time, 2, &lags, None).unwrap()).unwrap();
        prop_assert!((e1.gamma_hat - e2.gamma_hat).abs() <= 1e-10);
    }

    /// Binary persistence of noise fields is a bit-exact round trip for
    /// every shape, model and seed.
    #[test]
    fn noise_binary_round_trip(seed in 0u64..500, d in 1usize..3, steps in 1usize..4) {
        let n = if d == 1 { 16 } else { 8 };
        let grid = Grid::new(d, n, 4.0, 0.01, steps).unwrap();
        let model = CorrelationModel::exponential(1.0, d).unwrap();
        let noise = sample_noise(grid, &model, seed).unwrap();
        let mut buf = Vec::new();
        noise.write_to(&mut buf).unwrap();
        let back = NoiseIncrements::read_from(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.data(), noise.data());
        prop_assert_eq!(back.seed, noise.seed);
        prop_assert_eq!(back.grid, noise.grid);
    }
}
