//! Lobe and interference diagnostics.
//!
//! Lobes are located on the field smoothed with a vacuum-width Gaussian
//! (variance ½ per quadrature), i.e. the Husimi Q function. The raw Wigner
//! function of a cat carries interference fringes whose maxima exceed half
//! the lobe height, which would otherwise be reported as lobes.

use serde::Serialize;

use super::WignerField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lobe {
    pub x: f64,
    pub p: f64,
    pub radius: f64,
    /// Phase-space angle in degrees, [0, 360).
    pub angle_deg: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LobeReport {
    pub peaks: Vec<Lobe>,
    pub notes: Vec<String>,
}

fn blur_axis(values: &[f64], n_outer: usize, n_inner: usize, h: f64, along_inner: bool) -> Vec<f64> {
    // Gaussian exp(−d²) sampled at spacing h, cut at 6σ
    let reach = ((6.0 * std::f64::consts::FRAC_1_SQRT_2) / h).ceil() as isize;
    let mut weights: Vec<f64> = (-reach..=reach)
        .map(|k| {
            let d = k as f64 * h;
            (-d * d).exp()
        })
        .collect();
    // normalize on the lattice so the cut tails do not leak mass
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let idx = |o: usize, i: usize| o * n_inner + i;
    let mut out = vec![0.0; values.len()];
    for o in 0..n_outer {
        for i in 0..n_inner {
            let mut acc = 0.0;
            for (w, k) in weights.iter().zip(-reach..=reach) {
                if along_inner {
                    let t = i as isize + k;
                    if t >= 0 && (t as usize) < n_inner {
                        acc += w * values[idx(o, t as usize)];
                    }
                } else {
                    let t = o as isize + k;
                    if t >= 0 && (t as usize) < n_outer {
                        acc += w * values[idx(t as usize, i)];
                    }
                }
            }
            out[idx(o, i)] = acc;
        }
    }
    out
}

/// W convolved with the vacuum Gaussian (1/π)exp(−Δx² − Δp²).
pub fn husimi_smoothed(field: &WignerField) -> WignerField {
    let g = &field.grid;
    let along_p = blur_axis(&field.values, g.nx, g.np, g.dp(), true);
    let both = blur_axis(&along_p, g.nx, g.np, g.dx(), false);
    WignerField {
        grid: *g,
        values: both,
        convention: field.convention,
    }
}

fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let den = left - 2.0 * mid + right;
    if den.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        (0.5 * (left - right) / den).clamp(-0.5, 0.5)
    }
}

/// Local maxima of the smoothed field above half its global maximum, with
/// sub-grid parabolic refinement.
pub fn lobe_positions(field: &WignerField, expected: Option<usize>) -> LobeReport {
    let q = husimi_smoothed(field);
    let g = &q.grid;
    let top = q.max();
    let mut peaks = Vec::new();
    for i in 1..g.nx - 1 {
        for j in 1..g.np - 1 {
            let v = q.at(i, j);
            if v < 0.5 * top {
                continue;
            }
            let mut is_max = true;
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let n = q.at((i as isize + di) as usize, (j as isize + dj) as usize);
                    // ties broken toward the lower index
                    if n > v || (n == v && (di, dj) < (0, 0)) {
                        is_max = false;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let ox = parabolic_offset(q.at(i - 1, j), v, q.at(i + 1, j));
            let op = parabolic_offset(q.at(i, j - 1), v, q.at(i, j + 1));
            let x = g.x(i) + ox * g.dx();
            let p = g.p(j) + op * g.dp();
            let mut angle = p.atan2(x).to_degrees();
            if angle < 0.0 {
                angle += 360.0;
            }
            peaks.push(Lobe {
                x,
                p,
                radius: x.hypot(p),
                angle_deg: angle,
                height: v,
            });
        }
    }
    peaks.sort_by(|a, b| a.angle_deg.total_cmp(&b.angle_deg));
    let mut notes = Vec::new();
    if let Some(n) = expected {
        if peaks.len() < n {
            notes.push(format!(
                "found {} of {} expected lobes; lobes may have merged",
                peaks.len(),
                n
            ));
        } else if peaks.len() > n {
            notes.push(format!("found {} lobes, expected {}", peaks.len(), n));
        }
    }
    LobeReport { peaks, notes }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CheckerboardReport {
    pub radius: f64,
    pub positive_maxima: usize,
    pub negative_minima: usize,
    pub detected: bool,
}

/// Counts alternating-sign extrema of the raw field inside |x|, |p| ≤ radius.
/// Extrema smaller than 5% of max |W| are ignored.
pub fn checkerboard(field: &WignerField, radius: f64) -> CheckerboardReport {
    let g = &field.grid;
    let thresh = 0.05 * field.max_abs();
    let (mut pos, mut neg) = (0, 0);
    for i in 1..g.nx - 1 {
        for j in 1..g.np - 1 {
            if g.x(i).abs() > radius || g.p(j).abs() > radius {
                continue;
            }
            let v = field.at(i, j);
            let nb = [
                field.at(i - 1, j),
                field.at(i + 1, j),
                field.at(i, j - 1),
                field.at(i, j + 1),
            ];
            if v > thresh && nb.iter().all(|&n| n < v) {
                pos += 1;
            }
            if v < -thresh && nb.iter().all(|&n| n > v) {
                neg += 1;
            }
        }
    }
    CheckerboardReport {
        radius,
        positive_maxima: pos,
        negative_minima: neg,
        detected: pos >= 2 && neg >= 2,
    }
}
