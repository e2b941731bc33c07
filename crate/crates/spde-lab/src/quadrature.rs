//! Numerical integration engine shared by the correlation toolbox and the
//! fundamental-solution checks.
//!
//! Three integrators cover everything the crate needs:
//!
//! * [`tanh_sinh`] — double-exponential quadrature on a finite interval.
//!   Tolerates integrable power singularities at the endpoints as long as
//!   the singular endpoint sits at coordinate 0 (all call sites arrange
//!   their variables this way, so no precision is lost forming nodes).
//! * [`gauss_kronrod`] — one non-adaptive G7/K15 panel with an error
//!   estimate, plus an adaptive bisection wrapper for smooth integrands.
//! * [`radial_fourier`] — the Fourier transform of a radial function on
//!   `R^d` (d = 1, 2), computed by integrating between the zeros of the
//!   oscillator and accelerating the alternating partial sums by iterated
//!   averaging. This is the discrete-transform oracle used to calibrate
//!   spectral constants that are deliberately not taken from formula
//!   tables.

use crate::error::Error;
use crate::Result;

/// Value plus an internal error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

const TS_MAX_LEVEL: usize = 10;
const TS_T_MAX: f64 = 6.8;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// Integrable endpoint singularities are fine; put a singular endpoint at 0
/// so the node coordinates keep full precision near it.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quad> {
    if !(b > a) {
        return Err(Error::domain(format!("tanh_sinh: empty interval [{a}, {b}]")));
    }
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        let w = std::f64::consts::FRAC_PI_2 * t.sinh();
        // sigma in (0,1): relative position from a, computed stably on
        // both sides.
        let (sig_a, sig_b) = if w >= 0.0 {
            let e = (-2.0 * w).exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = (2.0 * w).exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        };
        // distance-to-endpoint forms: x = a + (b-a)sig_a = b - (b-a)sig_b
        let x = if sig_a <= 0.5 { a + (b - a) * sig_a } else { b - (b - a) * sig_b };
        if x <= a || x >= b {
            return 0.0; // node collapsed onto an endpoint: true weight negligible
        }
        let dudt = std::f64::consts::FRAC_PI_2 * t.cosh();
        let sech = 1.0 / w.cosh();
        let weight = dudt * sech * sech; // du where u = tanh(w)
        let v = f(x);
        if v.is_finite() {
            v * weight
        } else {
            0.0
        }
    };

    let mut h = 1.0_f64;
    let mut sum = eval(0.0);
    let mut n_per_side = (TS_T_MAX / h) as usize;
    for j in 1..=n_per_side {
        let t = j as f64 * h;
        sum += eval(t) + eval(-t);
    }
    let mut prev = sum * h * half;
    for _level in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        n_per_side = (TS_T_MAX / h) as usize;
        // new nodes are the odd multiples of the new h
        let mut add = 0.0;
        let mut j = 1;
        while j <= n_per_side {
            let t = j as f64 * h;
            add += eval(t) + eval(-t);
            j += 2;
        }
        sum += add;
        let cur = sum * h * half;
        let err = (cur - prev).abs();
        if err <= rel_tol * cur.abs().max(f64::MIN_POSITIVE) && _level >= 3 {
            return Ok(Quad { value: cur, error: err });
        }
        prev = cur;
    }
    // Did not meet the requested tolerance; report the last estimate with
    // its observed error so callers can decide.
    let err_last = prev.abs() * 1e-8;
    Ok(Quad { value: prev, error: err_last.max(prev.abs() * rel_tol) })
}

// Gauss 7 / Kronrod 15 nodes and weights (QUADPACK).
const KRONROD_X: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const KRONROD_W: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const GAUSS_W: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 panel over `[a, b]`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Quad {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for i in 0..8 {
        let dx = half * KRONROD_X[i];
        let (fa, fb) = (f(c - dx), f(c + dx));
        let pair = if i == 7 { fa } else { fa + fb };
        k += KRONROD_W[i] * pair;
        if i % 2 == 1 {
            g += GAUSS_W[i / 2] * pair;
        } else if i == 7 {
            g += GAUSS_W[3] * fa;
        }
    }
    let value = k * half;
    let error = ((k - g) * half).abs().powf(1.5).min((k - g).abs() * half);
    Quad { value, error }
}

/// Adaptive bisection on top of G7/K15, for smooth integrands.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<Quad> {
    struct Seg {
        a: f64,
        b: f64,
        q: Quad,
    }
    let q0 = gauss_kronrod(f, a, b);
    let mut segs = vec![Seg { a, b, q: q0 }];
    for _ in 0..2000 {
        let total: f64 = segs.iter().map(|s| s.q.value).sum();
        let err: f64 = segs.iter().map(|s| s.q.error).sum();
        if err <= rel_tol * total.abs().max(1e-300) {
            return Ok(Quad { value: total, error: err });
        }
        // split the worst segment
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.q.error.partial_cmp(&y.1.q.error).unwrap())
            .unwrap();
        let Seg { a: sa, b: sb, .. } = segs.swap_remove(idx);
        let m = 0.5 * (sa + sb);
        if m <= sa || m >= sb {
            return Err(Error::Quadrature(format!(
                "adaptive: interval [{sa}, {sb}] cannot be split further"
            )));
        }
        segs.push(Seg { a: sa, b: m, q: gauss_kronrod(f, sa, m) });
        segs.push(Seg { a: m, b: sb, q: gauss_kronrod(f, m, sb) });
    }
    Err(Error::Quadrature("adaptive: segment budget exhausted".into()))
}

/// `∫_0^∞ f(r) r^{d-1} dr` for a non-oscillatory radial integrand.
///
/// `f` may have an integrable power singularity at 0 and must decay at
/// least algebraically fast enough for the integral to exist.
pub fn radial_integral<F: Fn(f64) -> f64>(f: F, d: usize, rel_tol: f64) -> Result<Quad> {
    let near = tanh_sinh(|r| f(r) * r.powi(d as i32 - 1), 0.0, 1.0, rel_tol)?;
    // r = 1/u maps [1, inf) to (0, 1]
    let far = tanh_sinh(
        |u| {
            let r = 1.0 / u;
            let v = f(r);
            if v == 0.0 {
                0.0
            } else {
                v * r.powi(d as i32 - 1) / (u * u)
            }
        },
        0.0,
        1.0,
        rel_tol,
    )?;
    Ok(Quad { value: near.value + far.value, error: near.error + far.error })
}

/// Bessel function J0, accurate to ~1e-12 (power series below 12, Hankel
/// asymptotics above).
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 12.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= -q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        sum
    } else {
        let z = 8.0 / ax;
        let z2 = z * z;
        // P0, Q0 asymptotic coefficients
        let p0 = 1.0
            + z2 * (-0.1098628627e-2
                + z2 * (0.2734510407e-4 + z2 * (-0.2073370639e-5 + z2 * 0.2093887211e-6)));
        let q0 = z
            * (-0.1562499995e-1
                + z2 * (0.1430488765e-3
                    + z2 * (-0.6911147651e-5 + z2 * (0.7621095161e-6 + z2 * -0.934935152e-7))));
        let chi = ax - std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * ax)).sqrt() * (p0 * chi.cos() - q0 * chi.sin())
    }
}

/// n-th positive zero of J0 by the McMahon expansion (enough accuracy to
/// serve as an oscillation break point).
fn j0_zero(n: usize) -> f64 {
    let beta = (n as f64 - 0.25) * std::f64::consts::PI;
    let b8 = 8.0 * beta;
    beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3)) + 120928.0 / (15.0 * b8.powi(5))
}

/// Fourier transform at radial frequency `k ≥ 0` of the radial function
/// `f(|x|)` on `R^d`:
///
/// * d = 1: `2 ∫_0^∞ f(r) cos(k r) dr`
/// * d = 2: `2π ∫_0^∞ f(r) J0(k r) r dr`
///
/// Convention: `Fφ(ξ) = ∫ e^{-i<ξ,x>} φ(x) dx`. For heavy-tailed `f` the
/// improper oscillatory tail is summed between consecutive oscillator
/// zeros and accelerated by iterated averaging of the partial sums.
pub fn radial_fourier<F: Fn(f64) -> f64>(f: F, k: f64, d: usize, rel_tol: f64) -> Result<f64> {
    if k < 0.0 {
        return Err(Error::domain("radial_fourier: k must be >= 0"));
    }
    if k == 0.0 {
        let q = radial_integral(&f, d, rel_tol)?;
        let lead = match d {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI,
            _ => return Err(Error::domain("radial_fourier: d must be 1 or 2")),
        };
        return Ok(lead * q.value);
    }
    let (lead, integrand): (f64, Box<dyn Fn(f64) -> f64>) = match d {
        1 => (2.0, Box::new(move |r: f64| f(r) * (k * r).cos())),
        2 => (
            2.0 * std::f64::consts::PI,
            Box::new(move |r: f64| f(r) * bessel_j0(k * r) * r),
        ),
        _ => return Err(Error::domain("radial_fourier: d must be 1 or 2")),
    };
    // oscillator zeros in r
    let zero = |n: usize| -> f64 {
        match d {
            1 => (n as f64 - 0.5) * std::f64::consts::PI / k,
            _ => j0_zero(n) / k,
        }
    };

    // head: [0, first zero], may carry the integrable singularity of f
    let z1 = zero(1);
    let head = tanh_sinh(|r| integrand(r), 0.0, z1, rel_tol * 0.1)?;

    const MAX_SEGS: usize = 48;
    let mut partial = Vec::with_capacity(MAX_SEGS);
    let mut acc = head.value;
    let mut prev_z = z1;
    for n in 2..=MAX_SEGS + 1 {
        let z = zero(n);
        let seg = gauss_kronrod(&|r| integrand(r), prev_z, z);
        acc += seg.value;
        partial.push(acc);
        prev_z = z;
        if seg.value.abs() < 1e-3 * rel_tol * acc.abs().max(1e-300) && n > 4 {
            // tail already negligible (fast-decaying f): no acceleration needed
            return Ok(lead * acc);
        }
    }
    // iterated averaging of the alternating partial sums
    let mut row = partial;
    let mut best = *row.last().unwrap();
    let mut best_diff = f64::INFINITY;
    while row.len() > 2 {
        let next: Vec<f64> = row.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let diff = (next[next.len() - 1] - next[next.len() - 2]).abs();
        if diff < best_diff {
            best_diff = diff;
            best = next[next.len() - 1];
        }
        row = next;
    }
    Ok(lead * best)
}
