//! Ulam discretization of the transfer operator.
//!
//! For families whose first coordinate ignores `y` the operator of the
//! one-dimensional `x`-map is discretized on `bins` equal intervals with
//! exact overlaps. Other families use `bins × Y_BINS` cells and sampled
//! transitions. Rows are normalized, so mass carried beyond the truncated
//! alphabet is redistributed over the surviving transitions.

use rayon::prelude::*;

use super::{DecayFit, DecayMethod, Observable};
use crate::error::{invalid, Result};
use crate::manifolds::solve_x;
use crate::map_model::{MapFamily, Point, Step};

/// Rows of the `y` direction for two-dimensional grids.
const Y_BINS: usize = 8;
/// Sample points per cell side for two-dimensional grids.
const CELL_SAMPLES: usize = 4;
/// Sample points per bin for observable averages.
const AVERAGE_SAMPLES: usize = 8;
const POWER_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct UlamReport {
    /// Correlations from operator powers with their decay fit.
    pub fit: DecayFit,
    /// `‖ρP‖₁ / ‖ρ‖₁` at the computed invariant density.
    pub leading_eigenvalue: f64,
    /// Second eigenvalue estimate: the fitted decay rate of the operator
    /// correlations.
    pub second_eigenvalue: f64,
    /// `‖uP − u‖∞ / ‖u‖∞` for the uniform density `u`.
    pub uniform_defect: f64,
    pub x_bins: usize,
    pub y_bins: usize,
    /// Largest fraction of a cell's mass lost before row normalization.
    pub lost_mass: f64,
}

type SparseRow = Vec<(usize, f64)>;
/// Normalized rows with the largest lost fraction.
type Rows = (Vec<SparseRow>, f64);

struct Grid {
    x_bins: usize,
    y_bins: usize,
}

impl Grid {
    fn cells(&self) -> usize {
        self.x_bins * self.y_bins
    }

    fn cell_of(&self, z: Point) -> usize {
        let i = ((z.x * self.x_bins as f64) as usize).min(self.x_bins - 1);
        let j = ((z.y * self.y_bins as f64) as usize).min(self.y_bins - 1);
        j * self.x_bins + i
    }

    fn point(&self, cell: usize, s: f64, t: f64) -> Point {
        let (i, j) = (cell % self.x_bins, cell / self.x_bins);
        Point::new((i as f64 + s) / self.x_bins as f64, (j as f64 + t) / self.y_bins as f64)
    }
}

/// Exact overlaps of `[a, b]` with the bins of width `1/bins`.
fn spread(row: &mut [Vec<(usize, f64)>], bins: usize, a: f64, b: f64, target: usize) {
    if b <= a {
        return;
    }
    let first = ((a * bins as f64) as usize).min(bins - 1);
    let last = ((b * bins as f64) as usize).min(bins - 1);
    for (src, entries) in row.iter_mut().enumerate().take(last + 1).skip(first) {
        let lo = a.max(src as f64 / bins as f64);
        let hi = b.min((src + 1) as f64 / bins as f64);
        if hi > lo {
            entries.push((target, hi - lo));
        }
    }
}

fn merge(mut row: SparseRow) -> SparseRow {
    row.sort_by_key(|e| e.0);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out
}

/// Normalizes each row and returns the largest lost fraction.
fn normalize(rows: &mut [SparseRow], full: &[f64]) -> f64 {
    let mut lost: f64 = 0.0;
    for (row, &m) in rows.iter_mut().zip(full) {
        let total: f64 = row.iter().map(|e| e.1).sum();
        if total > 0.0 {
            lost = lost.max(1.0 - total / m);
            row.iter_mut().for_each(|e| e.1 /= total);
        } else {
            lost = 1.0;
        }
    }
    lost
}

/// Transition rows of the `x`-map with exact interval overlaps.
fn x_factor_rows(fam: &MapFamily, bins: usize) -> Rows {
    let per_branch: Vec<Vec<SparseRow>> = fam
        .branches()
        .par_iter()
        .map(|b| {
            let i = b.index();
            let mut rows = vec![Vec::new(); bins];
            let mut prev = b.domain().left.eval(0.5);
            for t in 0..bins {
                let next = if t + 1 == bins {
                    b.domain().right.eval(0.5)
                } else {
                    solve_x(fam, i, 0.5, (t + 1) as f64 / bins as f64)
                };
                spread(&mut rows, bins, prev, next, t);
                prev = next;
            }
            rows
        })
        .collect();
    let mut rows = vec![Vec::new(); bins];
    for part in per_branch {
        for (r, p) in rows.iter_mut().zip(part) {
            r.extend(p);
        }
    }
    let mut rows: Vec<SparseRow> = rows.into_iter().map(merge).collect();
    let full = vec![1.0 / bins as f64; bins];
    let lost = normalize(&mut rows, &full);
    (rows, lost)
}

/// Transition rows from `CELL_SAMPLES²` mapped points per cell.
fn sampled_rows(fam: &MapFamily, grid: &Grid) -> Rows {
    let mut rows: Vec<SparseRow> = (0..grid.cells())
        .into_par_iter()
        .map(|c| {
            let mut row = Vec::with_capacity(CELL_SAMPLES * CELL_SAMPLES);
            for a in 0..CELL_SAMPLES {
                for b in 0..CELL_SAMPLES {
                    let s = (a as f64 + 0.5) / CELL_SAMPLES as f64;
                    let t = (b as f64 + 0.5) / CELL_SAMPLES as f64;
                    if let Step::Mapped { image, .. } = fam.apply(grid.point(c, s, t)) {
                        row.push((grid.cell_of(image), 1.0));
                    }
                }
            }
            merge(row)
        })
        .collect();
    let full = vec![(CELL_SAMPLES * CELL_SAMPLES) as f64; grid.cells()];
    let lost = normalize(&mut rows, &full);
    (rows, lost)
}

/// `w ↦ wP` for a row-stochastic sparse matrix.
fn push(rows: &[SparseRow], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    for (row, &m) in rows.iter().zip(w) {
        if m != 0.0 {
            for &(j, p) in row {
                out[j] += m * p;
            }
        }
    }
    out
}

fn averages(grid: &Grid, obs: &Observable) -> Vec<f64> {
    (0..grid.cells())
        .map(|c| {
            let n = AVERAGE_SAMPLES;
            let ty: Vec<f64> = if grid.y_bins == 1 {
                vec![0.5]
            } else {
                (0..n).map(|b| (b as f64 + 0.5) / n as f64).collect()
            };
            let mut sum = 0.0;
            for a in 0..n {
                for &t in &ty {
                    sum += obs.eval(grid.point(c, (a as f64 + 0.5) / n as f64, t));
                }
            }
            sum / (n * ty.len()) as f64
        })
        .collect()
}

/// Operator correlations `C(n) = Σ_b f_b (ρ·g)P^n_b − ⟨f⟩⟨g⟩` for
/// `n = 0..=lags`, fitted above the floor `1/bins`.
///
/// Power-of-two bins align with the dyadic branch ends. On such grids the
/// discretized operator coarsens piecewise-constant densities by at least one
/// bit per step, so its literal spectrum below 1 is `{0}`; the decay rate of
/// the correlations is reported as the second eigenvalue instead. The same
/// coarsening biases `C(n)` by `O(1/bins)`, which sets the floor.
pub fn ulam_decay(
    fam: &MapFamily,
    obs1: &Observable,
    obs2: &Observable,
    bins: usize,
    lags: usize,
) -> Result<UlamReport> {
    if bins < 256 || !bins.is_power_of_two() {
        return invalid(format!("bins must be a power of two of at least 2^8, got {bins}"));
    }
    if lags > 20 {
        return invalid(format!("at most 20 lags are supported, got {lags}"));
    }
    let one_dim = fam.is_x_factor() && obs1.x_only && obs2.x_only;
    let grid = if one_dim {
        Grid {
            x_bins: bins,
            y_bins: 1,
        }
    } else {
        Grid {
            x_bins: bins,
            y_bins: Y_BINS,
        }
    };
    let (rows, lost) = if one_dim {
        x_factor_rows(fam, bins)
    } else {
        sampled_rows(fam, &grid)
    };
    let cells = grid.cells();

    let uniform = vec![1.0 / cells as f64; cells];
    let pu = push(&rows, &uniform);
    let uniform_defect = pu.iter().zip(&uniform).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) * cells as f64;

    let mut rho = uniform;
    for _ in 0..POWER_ITERATIONS {
        let next = push(&rows, &rho);
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|v| v / total).collect();
        let change: f64 = next.iter().zip(&rho).map(|(a, b)| (a - b).abs()).sum();
        rho = next;
        if change < 1e-14 {
            break;
        }
    }
    let leading = push(&rows, &rho).iter().sum::<f64>() / rho.iter().sum::<f64>();

    let f = averages(&grid, obs1);
    let g = averages(&grid, obs2);
    let ef: f64 = f.iter().zip(&rho).map(|(a, r)| a * r).sum();
    let eg: f64 = g.iter().zip(&rho).map(|(a, r)| a * r).sum();
    let var_f: f64 = f.iter().zip(&rho).map(|(a, r)| (a - ef).powi(2) * r).sum();
    let var_g: f64 = g.iter().zip(&rho).map(|(a, r)| (a - eg).powi(2) * r).sum();
    let zero = var_f <= 1e-14 * ef.abs().max(1e-300).powi(2) || var_g <= 1e-14 * eg.abs().max(1e-300).powi(2);
    let mut w: Vec<f64> = g.iter().zip(&rho).map(|(a, r)| (a - eg) * r).collect();
    let mut corr = Vec::with_capacity(lags + 1);
    for n in 0..=lags {
        if n > 0 {
            w = push(&rows, &w);
        }
        corr.push(if zero {
            0.0
        } else {
            f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        });
    }
    let floor = 1.0 / bins as f64;
    let fit = DecayFit::from_correlations(corr, floor, DecayMethod::Operator, zero);
    Ok(UlamReport {
        second_eigenvalue: fit.fitted_eta,
        fit,
        leading_eigenvalue: leading,
        uniform_defect,
        x_bins: grid.x_bins,
        y_bins: grid.y_bins,
        lost_mass: lost,
    })
}
