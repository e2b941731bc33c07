//! Hölder-exponent estimation from structure functions: the empirical
//! p-th moment of increments at dyadic lags, fitted in log-log axes. The
//! fit range excludes the smallest lag (discretization bias) and the top
//! quarter of lags (saturation); this policy is fixed and reported.

use crate::error::Error;
use crate::grid::GridFunction;
use crate::problem::SolutionField;
use crate::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Time,
    Space,
}

/// Empirical structure function `S_p(ℓ)` with sample counts.
#[derive(Debug, Clone, Serialize)]
pub struct StructureFunction {
    pub axis: Axis,
    pub p_moment: u32,
    /// Lags in lattice units, strictly increasing.
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub counts: Vec<u64>,
    /// Physical size of one lag unit (dt or dx).
    pub lag_scale: f64,
}

impl StructureFunction {
    /// Count-weighted merge of two accumulations over the same lags.
    pub fn merge(mut self, other: &StructureFunction) -> Result<StructureFunction> {
        if self.lags != other.lags || self.axis != other.axis || self.p_moment != other.p_moment {
            return Err(Error::Degenerate("cannot merge structure functions with different layouts".into()));
        }
        for i in 0..self.values.len() {
            let n1 = self.counts[i] as f64;
            let n2 = other.counts[i] as f64;
            if n1 + n2 > 0.0 {
                self.values[i] = (self.values[i] * n1 + other.values[i] * n2) / (n1 + n2);
            }
            self.counts[i] += other.counts[i];
        }
        Ok(self)
    }
}

fn validate_lags(lags: &[usize]) -> Result<()> {
    if lags.is_empty() || lags.windows(2).any(|w| w[1] <= w[0]) || lags[0] == 0 {
        return Err(Error::domain("lags must be strictly increasing and positive"));
    }
    Ok(())
}

fn validate_p(p_moment: u32) -> Result<()> {
    if p_moment == 0 || p_moment % 2 != 0 {
        return Err(Error::domain(format!("p_moment must be a positive even integer, got {p_moment}")));
    }
    Ok(())
}

/// Structure function of one space-time field along an axis, averaged
/// over the homogeneous directions and the time window (level indices
/// `window.0 .. window.1`, end exclusive).
pub fn structure_fn(
    field: &SolutionField,
    axis: Axis,
    p_moment: u32,
    lags: &[usize],
    window: Option<(usize, usize)>,
) -> Result<StructureFunction> {
    validate_lags(lags)?;
    validate_p(p_moment)?;
    let grid = field.grid;
    let n_levels = grid.n_steps + 1;
    let (w0, w1) = window.unwrap_or((0, n_levels));
    if w0 >= w1 || w1 > n_levels {
        return Err(Error::domain(format!("invalid level window ({w0}, {w1})")));
    }
    let p = p_moment as i32;
    let mut values = vec![0.0; lags.len()];
    let mut counts = vec![0u64; lags.len()];
    match axis {
        Axis::Time => {
            if *lags.last().unwrap() >= w1 - w0 {
                return Err(Error::Degenerate("largest time lag exceeds the window".into()));
            }
            for (li, lag) in lags.iter().enumerate() {
                for t in w0..(w1 - lag) {
                    let a = field.level(t);
                    let b = field.level(t + lag);
                    for (x, y) in a.iter().zip(b) {
                        values[li] += (y - x).powi(p);
                        counts[li] += 1;
                    }
                }
            }
        }
        Axis::Space => {
            let n = grid.n();
            if *lags.last().unwrap() >= n {
                return Err(Error::Degenerate("largest spatial lag exceeds the lattice".into()));
            }
            for t in w0..w1 {
                let u = field.level(t);
                for (li, lag) in lags.iter().enumerate() {
                    match grid.dim() {
                        1 => {
                            for x in 0..n {
                                let d = u[(x + lag) % n] - u[x];
                                values[li] += d.powi(p);
                                counts[li] += 1;
                            }
                        }
                        _ => {
                            for iy in 0..n {
                                for ix in 0..n {
                                    let base = grid.index(ix, iy);
                                    let dx_ = u[grid.index(ix + lag, iy)] - u[base];
                                    let dy_ = u[grid.index(ix, iy + lag)] - u[base];
                                    values[li] += dx_.powi(p) + dy_.powi(p);
                                    counts[li] += 2;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for (v, c) in values.iter_mut().zip(&counts) {
        if *c == 0 {
            return Err(Error::Degenerate("empty averaging set for a lag".into()));
        }
        *v /= *c as f64;
    }
    let lag_scale = match axis {
        Axis::Time => grid.dt,
        Axis::Space => grid.dx(),
    };
    Ok(StructureFunction { axis, p_moment, lags: lags.to_vec(), values, counts, lag_scale })
}

/// Spatial structure function of plain lattice fields (no time axis),
/// pooled over the fields.
pub fn spatial_structure_function(fields: &[GridFunction], p_moment: u32, lags: &[usize]) -> Result<StructureFunction> {
    validate_lags(lags)?;
    validate_p(p_moment)?;
    if fields.is_empty() {
        return Err(Error::Degenerate("no fields given".into()));
    }
    let grid = fields[0].grid;
    let n = grid.n();
    let p = p_moment as i32;
    let mut values = vec![0.0; lags.len()];
    let mut counts = vec![0u64; lags.len()];
    for f in fields {
        if f.grid != grid {
            return Err(Error::GridMismatch("fields on different grids".into()));
        }
        for (li, lag) in lags.iter().enumerate() {
            match grid.dim() {
                1 => {
                    for x in 0..n {
                        let d = f.values[(x + lag) % n] - f.values[x];
                        values[li] += d.powi(p);
                        counts[li] += 1;
                    }
                }
                _ => {
                    for iy in 0..n {
                        for ix in 0..n {
                            let base = grid.index(ix, iy);
                            let dx_ = f.values[grid.index(ix + lag, iy)] - f.values[base];
                            let dy_ = f.values[grid.index(ix, iy + lag)] - f.values[base];
                            values[li] += dx_.powi(p) + dy_.powi(p);
                            counts[li] += 2;
                        }
                    }
                }
            }
        }
    }
    for (v, c) in values.iter_mut().zip(&counts) {
        *v /= (*c).max(1) as f64;
    }
    Ok(StructureFunction {
        axis: Axis::Space,
        p_moment,
        lags: lags.to_vec(),
        values,
        counts,
        lag_scale: grid.dx(),
    })
}

/// Hölder exponent estimate from a log-log fit.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentEstimate {
    pub gamma_hat: f64,
    pub ci_half_width: f64,
    /// Lags actually used by the fixed fit policy.
    pub fit_range: Vec<usize>,
    pub r_squared: f64,
}

fn t_quantile_975(dof: usize) -> f64 {
    const TABLE: [(usize, f64); 12] = [
        (1, 12.706),
        (2, 4.303),
        (3, 3.182),
        (4, 2.776),
        (5, 2.571),
        (6, 2.447),
        (7, 2.365),
        (8, 2.306),
        (10, 2.228),
        (15, 2.131),
        (20, 2.086),
        (30, 2.042),
    ];
    for (d, t) in TABLE {
        if dof <= d {
            return t;
        }
    }
    1.96
}

/// Lags retained by the fixed fit policy: drop the smallest lag and the
/// top quarter.
pub fn fit_range(lags: &[usize]) -> Vec<usize> {
    let drop_top = lags.len().div_ceil(4);
    lags[1..lags.len().saturating_sub(drop_top)].to_vec()
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let ss_xx = sxx - sx * sx / n;
    let slope = (sxy - sx * sy / n) / ss_xx;
    let intercept = (sy - slope * sx) / n;
    let y_mean = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let pred = slope * x + intercept;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let dof = xs.len().saturating_sub(2).max(1);
    let se_slope = (ss_res / dof as f64 / ss_xx).sqrt();
    (slope, intercept, r2, se_slope)
}

/// Least-squares slope of `log S_p` against `log ℓ`, divided by the
/// moment order; the confidence half-width comes from the regression.
pub fn estimate_exponent(sf: &StructureFunction) -> Result<ExponentEstimate> {
    let used = fit_range(&sf.lags);
    if used.len() < 4 {
        return Err(Error::domain(format!(
            "need at least 4 lags in the fit range, have {} (from {} lags)",
            used.len(),
            sf.lags.len()
        )));
    }
    let mut xs = Vec::with_capacity(used.len());
    let mut ys = Vec::with_capacity(used.len());
    for (lag, v) in sf.lags.iter().zip(&sf.values) {
        if used.contains(lag) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Degenerate(format!("non-positive structure function at lag {lag}")));
            }
            xs.push((*lag as f64 * sf.lag_scale).ln());
            ys.push(v.ln());
        }
    }
    let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-12 {
        return Err(Error::Degenerate("degenerate fit: structure function is flat across lags".into()));
    }
    let (slope, _intercept, r2, se_slope) = ols(&xs, &ys);
    let p = sf.p_moment as f64;
    let gamma = (slope / p).clamp(0.0, 1.0);
    let t = t_quantile_975(xs.len().saturating_sub(2).max(1));
    Ok(ExponentEstimate { gamma_hat: gamma, ci_half_width: t * se_slope / p, fit_range: used, r_squared: r2 })
}

/// Pooled estimate with a replica-batched confidence interval: the point
/// estimate comes from the count-merged structure function, the CI from
/// the dispersion of per-batch estimates.
pub fn estimate_exponent_batched(per_batch: &[StructureFunction]) -> Result<ExponentEstimate> {
    if per_batch.is_empty() {
        return Err(Error::Degenerate("no batches given".into()));
    }
    let mut pooled = per_batch[0].clone();
    for other in &per_batch[1..] {
        pooled = pooled.merge(other)?;
    }
    let mut est = estimate_exponent(&pooled)?;
    if per_batch.len() >= 2 {
        let gammas: Vec<f64> = per_batch
            .iter()
            .map(estimate_exponent)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.gamma_hat)
            .collect();
        let b = gammas.len() as f64;
        let mean = gammas.iter().sum::<f64>() / b;
        let var = gammas.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (b - 1.0);
        est.ci_half_width = t_quantile_975(gammas.len() - 1) * (var / b).sqrt();
    }
    Ok(est)
}
