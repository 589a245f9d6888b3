//! Small numerical kernels shared by the geometric and statistical layers.

/// Root of a monotone function on `[lo, hi]`.
///
/// `f` returns the value and derivative. Newton steps are accepted while they
/// stay inside the current bracket, otherwise the bracket is bisected. When
/// the endpoints do not bracket a sign change the endpoint with the smaller
/// residual is returned.
pub fn solve_monotone<F>(f: F, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.signum() == fb.signum() {
        return if fa.abs() <= fb.abs() { a } else { b };
    }
    // orient so that g(a) < 0 < g(b)
    let sign = if fa < 0.0 { 1.0 } else { -1.0 };
    let mut x = a - fa * (b - a) / (fb - fa);
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        let gx = sign * fx;
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = if dfx != 0.0 && dfx.is_finite() {
            x - fx / dfx
        } else {
            f64::NAN
        };
        let next = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs().max(1e-300)
            || b - a <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
        {
            return x;
        }
    }
    x
}

/// Pairwise (tree-order) summation; deterministic for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Outcome of summing a nonnegative-index series to infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesSum {
    Finite(f64),
    Divergent,
}

impl SeriesSum {
    pub fn value(self) -> f64 {
        match self {
            SeriesSum::Finite(v) => v,
            SeriesSum::Divergent => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, SeriesSum::Finite(_))
    }
}

const SERIES_CAP: usize = 1 << 20;

/// Sums `term(k)` for `k = start, start + 1, ...`.
///
/// Stops once three consecutive terms are negligible relative to the partial
/// sum. At the term cap the series is accepted only if `k·|term_k|` is below
/// 1e-3 of the partial sum (a tail at least as thin as `k^-2`).
pub fn sum_series<F: Fn(usize) -> f64>(start: usize, term: F) -> SeriesSum {
    let mut sum = 0.0;
    let mut small = 0;
    let mut last = 0.0;
    for k in start..start + SERIES_CAP {
        let t = term(k);
        if !t.is_finite() {
            return SeriesSum::Divergent;
        }
        sum += t;
        if !sum.is_finite() {
            return SeriesSum::Divergent;
        }
        last = t;
        if t.abs() <= 1e-17 * sum.abs().max(1e-300) || t == 0.0 {
            small += 1;
            if small >= 3 {
                return SeriesSum::Finite(sum);
            }
        } else {
            small = 0;
        }
    }
    let k = (start + SERIES_CAP) as f64;
    if k * last.abs() <= 1e-3 * sum.abs() {
        SeriesSum::Finite(sum)
    } else {
        SeriesSum::Divergent
    }
}

/// Least-squares fit of `value ≈ c·rate^t` in log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub c: f64,
    pub rate: f64,
    /// Root-mean-square of the natural-log residuals.
    pub residual: f64,
    pub points: usize,
}

/// Fits `ln v = ln c + t ln rate` over the strictly positive samples.
/// Returns `None` with fewer than two usable points.
pub fn fit_geometric(samples: &[(f64, f64)]) -> Option<GeometricFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if stt == 0.0 {
        return None;
    }
    let stl: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let slope = stl / stt;
    let intercept = ml - slope * mt;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some(GeometricFit {
        c: intercept.exp(),
        rate: slope.exp(),
        residual: (rss / n).sqrt(),
        points: pts.len(),
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
