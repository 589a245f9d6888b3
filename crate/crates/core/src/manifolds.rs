//! Stable and unstable curves, the unstable slope field, and the empirical
//! variation and bounded-ratio estimates built on them.
//!
//! Two constructions are used side by side. Whole curves come from the graph
//! transform ([`push_graph`] for unstable curves, cylinder boundaries for
//! stable ones). Individual attractor points come from [`shoot`], which
//! solves for an orbit segment with prescribed symbols by fixing `y` at the
//! start and `x` at the end, the two well-conditioned ends of a hyperbolic
//! orbit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::map_model::{
    push_graph, slope_transport, strip_crossing, unstable_derivative, MapFamily, Point, SampledGraph, GRAPH_SAMPLES,
};
use crate::numerics::{fit_geometric, fmt_f64, solve_monotone};
use crate::symbolic::{build_cylinder, MixedRect, Word};

/// Generation depth of the reference unstable curve and of the past used
/// to place attractor points.
pub const REFERENCE_DEPTH: usize = 30;

/// Symbols appended to a future so that the end condition `x = 0.5` is
/// forgotten by the time the orbit is read.
pub const FUTURE_MARGIN: usize = 48;

/// Symbols used when sampling random pasts and continuations.
pub const SAMPLING_ALPHABET: usize = 6;

const SHOOT_MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Stable,
    Unstable,
}

impl CurveKind {
    fn as_str(self) -> &'static str {
        match self {
            CurveKind::Stable => "stable",
            CurveKind::Unstable => "unstable",
        }
    }
}

/// A sampled graph `y(x)` (unstable) or `x(y)` (stable) with its tangent
/// slope at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCurve {
    pub kind: CurveKind,
    pub graph: SampledGraph,
    pub slopes: SampledGraph,
    pub word: Word,
    pub depth: usize,
}

impl ManifoldCurve {
    /// `(abscissa, ordinate)` pairs.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        (0..self.graph.len())
            .map(|k| (self.graph.abscissa(k), self.graph.values()[k]))
            .collect()
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.slopes.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Unstable curve approximating the leaf with past `neg`: the line `y = 0`
/// pushed forward through the last `depth` symbols of `neg`.
pub fn unstable_curve(fam: &MapFamily, neg: &Word, depth: usize) -> Result<ManifoldCurve> {
    if depth > neg.len() {
        return invalid(format!("depth {depth} exceeds word length {}", neg.len()));
    }
    neg.validate(fam)?;
    let word = neg.suffix(depth);
    let mut graph = SampledGraph::constant(0.0, GRAPH_SAMPLES);
    let mut slopes = SampledGraph::constant(0.0, GRAPH_SAMPLES);
    for &s in word.symbols() {
        let (g, a) = push_graph(fam.branch(s), &graph, Some(&slopes));
        if !g
            .values()
            .iter()
            .all(|v| v.is_finite() && (-1e-12..=1.0 + 1e-12).contains(v))
        {
            return Err(Error::NumericalFailure(format!(
                "unstable curve {word} left the square"
            )));
        }
        graph = g;
        slopes = a;
    }
    Ok(ManifoldCurve {
        kind: CurveKind::Unstable,
        graph,
        slopes,
        word,
        depth,
    })
}

/// The reference unstable curve: the leaf through the fixed point of
/// branch 1 at generation depth [`REFERENCE_DEPTH`].
pub fn reference_unstable(fam: &MapFamily) -> Result<ManifoldCurve> {
    unstable_curve(fam, &Word::constant(1, REFERENCE_DEPTH), REFERENCE_DEPTH)
}

/// Stable curve with future `pos`: the midline of the cylinder `E_pos`.
pub fn stable_curve(fam: &MapFamily, pos: &Word) -> Result<ManifoldCurve> {
    let cyl = build_cylinder(fam, pos)?;
    let graph = cyl.midline();
    let n = graph.len();
    let h = graph.spacing();
    let v = graph.values();
    let slopes = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (v[b] - v[a]) / ((b - a) as f64 * h)
        })
        .collect();
    Ok(ManifoldCurve {
        kind: CurveKind::Stable,
        graph,
        slopes: SampledGraph::new(slopes),
        word: pos.clone(),
        depth: pos.len(),
    })
}

/// Unique crossing of an unstable and a stable curve.
pub fn crossing(unstable: &ManifoldCurve, stable: &ManifoldCurve) -> Result<Point> {
    if unstable.kind != CurveKind::Unstable || stable.kind != CurveKind::Stable {
        return invalid("crossing needs an unstable and a stable curve");
    }
    Ok(strip_crossing(&unstable.graph, &stable.graph))
}

/// Orbit `z_0, …, z_L` with `z_{k+1} = f_{s_k}(z_k)`, `z_0.y = y_start` and
/// `z_L.x = x_end`.
///
/// Alternates a backward sweep in `x` (solving `f1(x, y_k) = x_{k+1}`) with
/// a forward sweep in `y`; both directions contract, so the sweeps converge
/// for any admissible symbol sequence.
pub fn shoot(fam: &MapFamily, symbols: &[usize], y_start: f64, x_end: f64) -> Result<Vec<Point>> {
    symbols.iter().try_for_each(|&s| fam.check_symbol(s))?;
    let l = symbols.len();
    let mut xs: Vec<f64> = symbols
        .iter()
        .map(|&s| fam.branch(s).domain().point_at(0.5, 0.5).x)
        .chain(std::iter::once(x_end))
        .collect();
    let mut ys = vec![y_start; l + 1];
    for k in 0..l {
        ys[k + 1] = fam.branch(symbols[k]).image(Point::new(xs[k], ys[k])).y;
    }
    for _ in 0..SHOOT_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for k in (0..l).rev() {
            let x = solve_x(fam, symbols[k], ys[k], xs[k + 1]);
            change = change.max((x - xs[k]).abs());
            xs[k] = x;
        }
        for k in 0..l {
            let y = fam.branch(symbols[k]).image(Point::new(xs[k], ys[k])).y;
            change = change.max((y - ys[k + 1]).abs());
            ys[k + 1] = y;
        }
        if change <= 1e-15 {
            return Ok(xs.into_iter().zip(ys).map(|(x, y)| Point::new(x, y)).collect());
        }
    }
    Err(Error::NumericalFailure(format!(
        "orbit shooting did not converge for a word of length {l}"
    )))
}

/// `x ∈ E_s` at height `y` with `f1_s(x, y) = target`.
pub(crate) fn solve_x(fam: &MapFamily, s: usize, y: f64, target: f64) -> f64 {
    let b = fam.branch(s);
    let dom = b.domain();
    solve_monotone(
        |x| {
            let j = b.jet(Point::new(x, y));
            (j.f1 - target, j.f1x)
        },
        dom.left.eval(y),
        dom.right.eval(y),
    )
}

/// Unstable slopes along an orbit, transported from `a0` at its first point.
pub fn transport_slopes(fam: &MapFamily, symbols: &[usize], orbit: &[Point], a0: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(orbit.len());
    let mut a = a0;
    out.push(a);
    for (k, &s) in symbols.iter().enumerate() {
        a = slope_transport(&fam.branch(s).jet(orbit[k]), a)?;
        out.push(a);
    }
    Ok(out)
}

/// A point of the attractor with its unstable slope and symbol at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorPoint {
    pub point: Point,
    pub slope: f64,
    pub symbol: usize,
}

impl AttractorPoint {
    pub fn unstable_derivative(&self, fam: &MapFamily) -> Result<f64> {
        unstable_derivative(&fam.branch(self.symbol).jet(self.point), self.slope)
    }
}

/// The point with backward itinerary `past` (oldest symbol first) and forward
/// itinerary `future`. Both are padded so that the point is resolved well
/// below 1e-10.
pub fn attractor_point(fam: &MapFamily, past: &Word, future: &Word) -> Result<AttractorPoint> {
    if future.is_empty() {
        return invalid("attractor point needs a nonempty future");
    }
    let past = Word::constant(1, REFERENCE_DEPTH.saturating_sub(past.len())).concat(past);
    let future = future.concat(&Word::constant(1, FUTURE_MARGIN));
    let syms = past.concat(&future);
    let orbit = shoot(fam, syms.symbols(), 0.5, 0.5)?;
    let slopes = transport_slopes(fam, &syms.symbols()[..past.len()], &orbit, 0.0)?;
    let m = past.len();
    Ok(AttractorPoint {
        point: orbit[m],
        slope: slopes[m],
        symbol: syms.symbols()[m],
    })
}

pub(crate) fn random_word(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Word {
    Word((0..n).map(|_| rng.gen_range(1..=k)).collect())
}

/// Pasts ending in `neg` and futures starting with `pos`: the two constant
/// extremes first, then random extensions.
fn sample_extensions(fam: &MapFamily, neg: &Word, pos: &Word, samples: usize, seed: u64) -> (Vec<Word>, Vec<Word>) {
    let k = fam.trunc_n().min(SAMPLING_ALPHABET);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = REFERENCE_DEPTH;
    let mut pasts = vec![Word::constant(1, pad).concat(neg), Word::constant(k, pad).concat(neg)];
    let mut futures = vec![pos.concat(&Word::constant(1, pad)), pos.concat(&Word::constant(k, pad))];
    while pasts.len() < samples.max(2) {
        pasts.push(random_word(&mut rng, k, pad).concat(neg));
        futures.push(pos.concat(&random_word(&mut rng, k, pad)));
    }
    (pasts, futures)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeGap {
    pub gap: f64,
    pub crossings: usize,
}

/// Largest difference of unstable slopes at points of one stable curve
/// inside `R`, over sampled pasts sharing the negative word of `R`.
pub fn slope_field_gap(fam: &MapFamily, mixed: &MixedRect, samples: usize, seed: u64) -> Result<SlopeGap> {
    let neg = mixed.neg_word();
    if neg.is_empty() {
        return invalid("slope gaps need a rectangle with m ≥ 1");
    }
    let (pasts, futures) = sample_extensions(fam, neg, mixed.pos_word(), samples, seed);
    let future = &futures[0];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut crossings = 0;
    for past in &pasts {
        let p = attractor_point(fam, past, future)?;
        if mixed.contains(p.point) || on_closure(mixed, p.point) {
            crossings += 1;
            lo = lo.min(p.slope);
            hi = hi.max(p.slope);
        }
    }
    if crossings < 2 {
        return Err(Error::InsufficientData(format!(
            "{crossings} crossings inside the rectangle"
        )));
    }
    Ok(SlopeGap {
        gap: hi - lo,
        crossings,
    })
}

fn on_closure(r: &MixedRect, z: Point) -> bool {
    let t = 1e-9;
    z.x >= r.cylinder.left.eval(z.y) - t
        && z.x <= r.cylinder.right.eval(z.y) + t
        && z.y >= r.strip.bottom.eval(z.x) - t
        && z.y <= r.strip.top.eval(z.x) + t
}

/// `max − min` of `log DᵘF` over sampled attractor points of `R`.
pub fn variation_log_du(fam: &MapFamily, mixed: &MixedRect, samples: usize, seed: u64) -> Result<f64> {
    let (pasts, futures) = sample_extensions(fam, mixed.neg_word(), mixed.pos_word(), samples, seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for past in &pasts {
        for future in &futures {
            let p = attractor_point(fam, past, future)?;
            let v = p.unstable_derivative(fam)?.ln();
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(hi - lo)
}

/// `value ≤ c0 · theta0^min(m, n)` fitted in log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationFit {
    pub c0: f64,
    pub theta0: f64,
    /// RMS of natural-log residuals.
    pub residual: f64,
    pub depths: Vec<(usize, usize)>,
}

/// Fits the positive entries of `(m, n, value)`. `None` when fewer than two
/// entries are positive.
pub fn fit_variation(data: &[(usize, usize, f64)]) -> Option<VariationFit> {
    let used: Vec<_> = data.iter().filter(|d| d.2 > 0.0).collect();
    let pts: Vec<(f64, f64)> = used.iter().map(|d| (d.0.min(d.1) as f64, d.2)).collect();
    let fit = fit_geometric(&pts)?;
    Some(VariationFit {
        c0: fit.c,
        theta0: fit.rate,
        residual: fit.residual,
        depths: used.iter().map(|d| (d.0, d.1)).collect(),
    })
}

/// Bounded-ratio measurements for one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRatios {
    pub branch: usize,
    /// `max |f_ix| / min |f_ix|` over the domain.
    pub derivative: f64,
    /// `max δ_z / min δ_z` over horizontal sections.
    pub width: f64,
    /// `max DᵘF / min DᵘF` over attractor points.
    pub unstable_derivative: f64,
    /// Ratio of unstable cross-section lengths.
    pub cross_section: f64,
}

impl BranchRatios {
    pub fn max(&self) -> f64 {
        self.derivative
            .max(self.width)
            .max(self.unstable_derivative)
            .max(self.cross_section)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub branches: Vec<BranchRatios>,
    /// Cross-section ratio inside cylinders of length `depth`.
    pub cylinder_cross_section: f64,
    pub depth: usize,
}

impl RatioReport {
    pub fn max(&self) -> f64 {
        self.branches
            .iter()
            .map(BranchRatios::max)
            .fold(self.cylinder_cross_section, f64::max)
    }
}

/// Ratios within each of the first `branches` branches and within cylinders
/// of length `depth`.
pub fn bounded_ratio_suite(fam: &MapFamily, depth: usize, branches: usize, seed: u64) -> Result<RatioReport> {
    if depth == 0 || depth > 6 {
        return invalid(format!("depth must lie in 1..=6, got {depth}"));
    }
    let n = branches.min(fam.trunc_n());
    let k = fam.trunc_n().min(SAMPLING_ALPHABET);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaf_words: Vec<Word> = [Word::constant(1, 12), Word::constant(k, 12)]
        .into_iter()
        .chain((0..4).map(|_| random_word(&mut rng, k, 12)))
        .collect();
    let leaves: Vec<ManifoldCurve> = leaf_words
        .iter()
        .map(|w| unstable_curve(fam, w, w.len()))
        .collect::<Result<_>>()?;
    let ratio = |v: &[f64]| {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };
    let section = |left: &SampledGraph, right: &SampledGraph| -> Vec<f64> {
        leaves
            .iter()
            .map(|c| strip_crossing(&c.graph, right).x - strip_crossing(&c.graph, left).x)
            .collect()
    };

    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let b = fam.branch(i);
        let dom = b.domain();
        let grid = 33;
        let mut f1x = Vec::with_capacity(grid * grid);
        for r in 0..grid {
            for c in 0..grid {
                let z = dom.point_at(c as f64 / (grid - 1) as f64, r as f64 / (grid - 1) as f64);
                f1x.push(b.jet(z).f1x.abs());
            }
        }
        let (pasts, futures) = sample_extensions(fam, &Word::default(), &Word::new(vec![i]), 6, seed ^ i as u64);
        let mut du = Vec::new();
        for past in &pasts {
            for future in &futures {
                du.push(attractor_point(fam, past, future)?.unstable_derivative(fam)?);
            }
        }
        out.push(BranchRatios {
            branch: i,
            derivative: ratio(&f1x),
            width: dom.max_width() / dom.min_width(),
            unstable_derivative: ratio(&du),
            cross_section: ratio(&section(&dom.left, &dom.right)),
        });
    }

    let mut cyl_words = vec![Word::constant(1, depth), Word::constant(k, depth)];
    cyl_words.extend((0..4).map(|_| random_word(&mut rng, k, depth)));
    let mut worst: f64 = 1.0;
    for w in &cyl_words {
        let c = build_cylinder(fam, w)?;
        worst = worst.max(ratio(&section(&c.left, &c.right)));
    }
    Ok(RatioReport {
        branches: out,
        cylinder_cross_section: worst,
        depth,
    })
}

pub const CURVE_CSV_HEADER: &str = "kind,word,abscissa,ordinate,slope";

pub fn curves_to_csv(curves: &[ManifoldCurve]) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for c in curves {
        for (k, (a, o)) in c.samples().into_iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.kind.as_str(),
                c.word,
                fmt_f64(a),
                fmt_f64(o),
                fmt_f64(c.slopes.values()[k])
            ));
        }
    }
    out
}
