//! Finite-size-scaling fits: collapse-variance minimization, Binder-crossing,
//! and susceptibility-peak scaling.

use super::simplex::nelder_mead;
use super::{CiBounds, FitMethod, FssDataset, ScalingFit};
use crate::error::{AqiaError, Result};

/// One (size, gamma, order-parameter) sample entering the collapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsePoint {
    pub n_agents: f64,
    pub gamma: f64,
    pub value: f64,
}

impl FssDataset {
    pub(crate) fn collapse_points(&self) -> Vec<CollapsePoint> {
        self.points
            .iter()
            .map(|p| CollapsePoint {
                n_agents: p.n_agents as f64,
                gamma: p.gamma,
                value: p.mean_abs_polarization,
            })
            .collect()
    }
}

/// Fitting box for the scaling parameters.
///
/// The raw variance objective has degenerate minima: a strongly negative
/// beta/nu shrinks every scaled y toward zero, and a tiny nu spreads the
/// scaled x so far that the binned master curve threads the points; both
/// "collapse" anything. The box keeps the fit in the physical region
/// (non-negative order-parameter exponent, correlation-length exponent of
/// order one, critical point near the sampled window).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBox {
    pub gamma_c: (f64, f64),
    pub nu: (f64, f64),
    pub beta_over_nu: (f64, f64),
}

impl FitBox {
    /// Box derived from the sampled gamma hull, widened by half its span.
    pub fn for_points(points: &[CollapsePoint]) -> FitBox {
        let g_min = points.iter().map(|p| p.gamma).fold(f64::INFINITY, f64::min);
        let g_max = points
            .iter()
            .map(|p| p.gamma)
            .fold(f64::NEG_INFINITY, f64::max);
        let span = (g_max - g_min).max(1e-3);
        FitBox {
            gamma_c: (g_min - 0.5 * span, g_max + 0.5 * span),
            nu: (0.1, 5.0),
            beta_over_nu: (0.0, 1.0),
        }
    }

    fn contains(&self, gamma_c: f64, nu: f64, beta_over_nu: f64) -> bool {
        (self.gamma_c.0..=self.gamma_c.1).contains(&gamma_c)
            && (self.nu.0..=self.nu.1).contains(&nu)
            && (self.beta_over_nu.0..=self.beta_over_nu.1).contains(&beta_over_nu)
    }

    fn clamp3(&self, start: &[f64; 3]) -> [f64; 3] {
        [
            start[0].clamp(self.gamma_c.0, self.gamma_c.1),
            start[1].clamp(self.nu.0, self.nu.1),
            start[2].clamp(self.beta_over_nu.0, self.beta_over_nu.1),
        ]
    }
}

/// Variance of the scaled data around the binned master curve.
///
/// Points are rescaled to (x, y) = ((gamma - gamma_c) N^(1/nu), value
/// N^(beta/nu)); the master curve is the piecewise-linear interpolant of
/// bin-averaged y over `bins` equal-width x bins, extended linearly beyond
/// the outermost bin centers. Parameters outside `fit_box` score infinity.
pub fn collapse_variance_boxed(
    points: &[CollapsePoint],
    gamma_c: f64,
    nu: f64,
    beta_over_nu: f64,
    bins: usize,
    fit_box: &FitBox,
) -> f64 {
    if !gamma_c.is_finite() || !fit_box.contains(gamma_c, nu, beta_over_nu) {
        return f64::INFINITY;
    }
    collapse_variance_unchecked(points, gamma_c, nu, beta_over_nu, bins)
}

/// Unconstrained variance evaluation (loose guards against overflow only).
pub fn collapse_variance(
    points: &[CollapsePoint],
    gamma_c: f64,
    nu: f64,
    beta_over_nu: f64,
    bins: usize,
) -> f64 {
    if !(0.05..=20.0).contains(&nu) || beta_over_nu.abs() > 5.0 || !gamma_c.is_finite() {
        return f64::INFINITY;
    }
    collapse_variance_unchecked(points, gamma_c, nu, beta_over_nu, bins)
}

fn collapse_variance_unchecked(
    points: &[CollapsePoint],
    gamma_c: f64,
    nu: f64,
    beta_over_nu: f64,
    bins: usize,
) -> f64 {
    let scaled: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let x = (p.gamma - gamma_c) * p.n_agents.powf(1.0 / nu);
            let y = p.value * p.n_agents.powf(beta_over_nu);
            (x, y)
        })
        .collect();
    if scaled.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return f64::INFINITY;
    }

    let x_min = scaled.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = scaled.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let n_pts = scaled.len() as f64;
    if x_max <= x_min {
        let mean = scaled.iter().map(|p| p.1).sum::<f64>() / n_pts;
        return scaled.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / n_pts;
    }

    let width = (x_max - x_min) / bins as f64;
    let mut sum = vec![0.0; bins];
    let mut sum_x = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for &(x, y) in &scaled {
        let b = (((x - x_min) / width) as usize).min(bins - 1);
        sum[b] += y;
        sum_x[b] += x;
        count[b] += 1;
    }
    let knots: Vec<(f64, f64)> = (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (sum_x[b] / count[b] as f64, sum[b] / count[b] as f64))
        .collect();

    let master = |x: f64| -> f64 {
        if knots.len() == 1 {
            return knots[0].1;
        }
        // Segment lookup with linear extrapolation at both ends.
        let seg = match knots.iter().position(|k| k.0 > x) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => knots.len() - 2,
        };
        let (x0, y0) = knots[seg];
        let (x1, y1) = knots[seg + 1];
        if x1 == x0 {
            0.5 * (y0 + y1)
        } else {
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    };

    scaled.iter().map(|&(x, y)| (y - master(x)).powi(2)).sum::<f64>() / n_pts
}

/// Default multi-start grid covering mean-field and 2D-Ising-like exponents.
pub(crate) fn default_starts() -> Vec<[f64; 3]> {
    let mut starts = Vec::new();
    for &gc in &[0.8, 1.0, 1.2] {
        for &nu in &[0.5, 1.0, 1.5] {
            for &bn in &[0.1, 0.3, 0.5] {
                starts.push([gc, nu, bn]);
            }
        }
    }
    starts
}

fn require_sizes(data: &FssDataset, need: usize) -> Result<()> {
    let got = data.sizes().len();
    if got < need {
        return Err(AqiaError::TooFewSizes { need, got });
    }
    Ok(())
}

/// Fit (gamma_c, nu, beta/nu) by minimizing the collapse variance with
/// multi-start simplex search.
pub fn collapse_fit(
    data: &FssDataset,
    starts: Option<&[[f64; 3]]>,
    bins: usize,
) -> Result<ScalingFit> {
    require_sizes(data, 3)?;
    if bins < 5 {
        return Err(AqiaError::InvalidInput {
            what: "collapse fit needs at least 5 bins".into(),
        });
    }
    let points = data.collapse_points();
    let fit_box = FitBox::for_points(&points);
    let default = default_starts();
    let starts = starts.unwrap_or(&default);

    let objective =
        |x: &[f64]| collapse_variance_boxed(&points, x[0], x[1], x[2], bins, &fit_box);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut improved = false;
    for start in starts {
        let start = fit_box.clamp3(start);
        let initial = objective(&start);
        let r = nelder_mead(&objective, &start, &[0.05, 0.1, 0.05], 1e-14, 600);
        if r.value < initial {
            improved = true;
        }
        if best.as_ref().map_or(true, |(v, _)| r.value < *v) {
            best = Some((r.value, r.x));
        }
    }
    let (value, x) = best.expect("at least one start");
    Ok(ScalingFit {
        gamma_c: x[0],
        nu: x[1],
        beta_over_nu: x[2],
        collapse_variance: value,
        ci95: None,
        method: FitMethod::Collapse,
        improved,
        peak_height_exponent: None,
        excluded_sizes: vec![],
    })
}

/// Pairwise Binder-cumulant crossing points, linearly interpolated; the
/// first crossing per size pair in ascending gamma.
fn binder_crossings(data: &FssDataset) -> Vec<f64> {
    let sizes = data.sizes();
    let mut crossings = Vec::new();
    for (ai, &a) in sizes.iter().enumerate() {
        for &b in &sizes[(ai + 1)..] {
            let ca = data.curve(a);
            let cb = data.curve(b);
            if ca.len() != cb.len() {
                continue;
            }
            for k in 0..ca.len().saturating_sub(1) {
                let d0 = ca[k].u4 - cb[k].u4;
                let d1 = ca[k + 1].u4 - cb[k + 1].u4;
                if !d0.is_finite() || !d1.is_finite() {
                    continue;
                }
                if d0 == 0.0 {
                    crossings.push(ca[k].gamma);
                    break;
                }
                if d0 * d1 < 0.0 {
                    let t = d0 / (d0 - d1);
                    crossings.push(ca[k].gamma + t * (ca[k + 1].gamma - ca[k].gamma));
                    break;
                }
            }
        }
    }
    crossings
}

/// Fix gamma_c at the mean Binder crossing, then fit only (nu, beta/nu).
pub fn binder_crossing_fit(data: &FssDataset, bins: usize) -> Result<ScalingFit> {
    require_sizes(data, 2)?;
    let crossings = binder_crossings(data);
    if crossings.is_empty() {
        return Err(AqiaError::NoCrossing);
    }
    let gamma_c = crossings.iter().sum::<f64>() / crossings.len() as f64;

    let points = data.collapse_points();
    let fit_box = FitBox::for_points(&points);
    let objective =
        |x: &[f64]| collapse_variance_boxed(&points, gamma_c, x[0], x[1], bins, &fit_box);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut improved = false;
    for &nu in &[0.5, 1.0, 1.5] {
        for &bn in &[0.1, 0.3, 0.5] {
            let start = [nu, bn];
            let initial = objective(&start);
            let r = nelder_mead(&objective, &start, &[0.1, 0.05], 1e-14, 600);
            if r.value < initial {
                improved = true;
            }
            if best.as_ref().map_or(true, |(v, _)| r.value < *v) {
                best = Some((r.value, r.x));
            }
        }
    }
    let (value, x) = best.expect("at least one start");
    Ok(ScalingFit {
        gamma_c,
        nu: x[0],
        beta_over_nu: x[1],
        collapse_variance: value,
        ci95: None,
        method: FitMethod::BinderCrossing,
        improved,
        peak_height_exponent: None,
        excluded_sizes: vec![],
    })
}

/// Vertex of the parabola through three points; `None` if degenerate.
fn quadratic_vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curv = (d1 - d0) / (x2 - x0);
    if curv >= 0.0 {
        return None;
    }
    // y = y1 + d0 (x - x0's midpoint form); vertex from the two slopes.
    let xm0 = 0.5 * (x0 + x1);
    let xm1 = 0.5 * (x1 + x2);
    let x_star = xm0 - d0 * (xm1 - xm0) / (d1 - d0);
    let a = curv;
    // Evaluate the interpolating parabola at the vertex via Newton form.
    let y_star = y0 + d0 * (x_star - x0) + a * (x_star - x0) * (x_star - x1);
    Some((x_star, y_star))
}

/// Least-squares slope of y against x.
fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Linear interpolation of a size's order-parameter curve at `gamma`.
fn interpolate_order(data: &FssDataset, n: usize, gamma: f64) -> Option<f64> {
    let curve = data.curve(n);
    if curve.len() < 2 {
        return None;
    }
    let k = match curve.iter().position(|p| p.gamma > gamma) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => curve.len() - 2,
    };
    let (g0, y0) = (curve[k].gamma, curve[k].mean_abs_polarization);
    let (g1, y1) = (curve[k + 1].gamma, curve[k + 1].mean_abs_polarization);
    Some(y0 + (y1 - y0) * (gamma - g0) / (g1 - g0))
}

/// Fit nu from the susceptibility-peak drift gamma*(N) = gamma_c + a N^(-1/nu),
/// then beta/nu from the order parameter at gamma_c; also reports the
/// peak-height growth exponent.
pub fn peak_scaling_fit(data: &FssDataset, bins: usize) -> Result<ScalingFit> {
    let sizes = data.sizes();
    let mut peaks: Vec<(f64, f64, f64)> = Vec::new(); // (N, gamma*, chi*)
    let mut excluded_sizes = Vec::new();
    for &n in &sizes {
        let curve = data.curve(n);
        if curve.len() < 3 {
            excluded_sizes.push(n);
            continue;
        }
        let mut k_max = 0;
        for (k, p) in curve.iter().enumerate() {
            if p.chi > curve[k_max].chi {
                k_max = k;
            }
        }
        if k_max == 0 || k_max == curve.len() - 1 {
            excluded_sizes.push(n);
            continue;
        }
        let triple = [
            (curve[k_max - 1].gamma, curve[k_max - 1].chi),
            (curve[k_max].gamma, curve[k_max].chi),
            (curve[k_max + 1].gamma, curve[k_max + 1].chi),
        ];
        match quadratic_vertex(triple) {
            Some((g_star, chi_star)) => peaks.push((n as f64, g_star, chi_star)),
            None => excluded_sizes.push(n),
        }
    }
    if peaks.len() < 3 {
        if let Some(&n) = excluded_sizes.first() {
            return Err(AqiaError::PeakOnBoundary { n });
        }
        return Err(AqiaError::TooFewSizes {
            need: 3,
            got: peaks.len(),
        });
    }

    let fit_box = FitBox::for_points(&data.collapse_points());
    // Variable projection: for given (gamma_c, nu) the amplitude a is the
    // closed-form least-squares solution.
    let objective = |x: &[f64]| -> f64 {
        let (gamma_c, nu) = (x[0], x[1]);
        if !gamma_c.is_finite()
            || !(fit_box.nu.0..=fit_box.nu.1).contains(&nu)
            || !(fit_box.gamma_c.0..=fit_box.gamma_c.1).contains(&gamma_c)
        {
            return f64::INFINITY;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for &(n, g_star, _) in &peaks {
            let basis = n.powf(-1.0 / nu);
            num += (g_star - gamma_c) * basis;
            den += basis * basis;
        }
        let a = num / den;
        peaks
            .iter()
            .map(|&(n, g_star, _)| {
                let pred = gamma_c + a * n.powf(-1.0 / nu);
                (g_star - pred).powi(2)
            })
            .sum()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut improved = false;
    for &gc in &[0.8, 1.0, 1.2] {
        for &nu in &[0.5, 1.0, 1.5] {
            let start = [gc, nu];
            let initial = objective(&start);
            let r = nelder_mead(&objective, &start, &[0.05, 0.1], 1e-16, 800);
            if r.value < initial {
                improved = true;
            }
            if best.as_ref().map_or(true, |(v, _)| r.value < *v) {
                best = Some((r.value, r.x));
            }
        }
    }
    let (_, x) = best.expect("at least one start");
    let (gamma_c, nu) = (x[0], x[1]);

    // beta/nu from log <|S|>(gamma_c) against log N.
    let mut log_n = Vec::new();
    let mut log_s = Vec::new();
    for &(n, _, _) in &peaks {
        if let Some(s) = interpolate_order(data, n as usize, gamma_c) {
            if s > 0.0 {
                log_n.push(n.ln());
                log_s.push(s.ln());
            }
        }
    }
    let beta_over_nu = if log_n.len() >= 2 {
        -regression_slope(&log_n, &log_s)
    } else {
        f64::NAN
    };

    // Peak-height exponent from log chi_max against log N.
    let (hn, hv): (Vec<f64>, Vec<f64>) = peaks
        .iter()
        .filter(|&&(_, _, chi)| chi > 0.0)
        .map(|&(n, _, chi)| (n.ln(), chi.ln()))
        .unzip();
    let peak_height_exponent = if hn.len() >= 2 {
        Some(regression_slope(&hn, &hv))
    } else {
        None
    };

    let points = data.collapse_points();
    let collapse_var = collapse_variance(&points, gamma_c, nu, beta_over_nu, bins);
    Ok(ScalingFit {
        gamma_c,
        nu,
        beta_over_nu,
        collapse_variance: collapse_var,
        ci95: None,
        method: FitMethod::PeakScaling,
        improved,
        peak_height_exponent,
        excluded_sizes,
    })
}

/// Type-7 (linear interpolation) percentile of a sample.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub(crate) fn ci_bounds_from(samples: &mut [Vec<f64>]) -> (Vec<f64>, CiBounds) {
    for s in samples.iter_mut() {
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    let medians: Vec<f64> = samples.iter().map(|s| percentile(s, 0.5)).collect();
    let lo: Vec<f64> = samples.iter().map(|s| percentile(s, 0.025)).collect();
    let hi: Vec<f64> = samples.iter().map(|s| percentile(s, 0.975)).collect();
    (
        medians,
        CiBounds {
            gamma_c: (lo[0], hi[0]),
            nu: (lo[1], hi[1]),
            beta_over_nu: (lo[2], hi[2]),
        },
    )
}
