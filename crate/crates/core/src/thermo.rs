//! The potential `φ = −log DᵘF`, its cohomologous one-sided version `φᵘ`,
//! partition sums over periodic orbits, pressure, and the Ruelle operator.
//!
//! One-sided words are realized on the reference unstable curve `W⁰ᵤ`, the
//! leaf `y = 0` through the fixed point of branch 1: the point with forward
//! itinerary `v` is found by shooting `1^30 · v` from `y = 0`. A finite word
//! stands for its periodic extension.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::manifolds::{
    random_word, reference_unstable, shoot, solve_x, transport_slopes, ManifoldCurve, FUTURE_MARGIN, REFERENCE_DEPTH,
    SAMPLING_ALPHABET,
};
use crate::map_model::{slope_transport, strip_crossing, unstable_derivative, MapFamily, Point};
use crate::numerics::{fit_geometric, fmt_f64, pairwise_sum, sum_series, SeriesSum};
use crate::symbolic::{
    build_cylinder, check_finitely_many_images, is_topologically_mixing, CylinderRect, TransitionStructure, Word,
};

pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_SERIES_TERMS: usize = 64;

/// Largest number of words a partition sum may enumerate.
pub const ENUMERATION_BUDGET: u128 = 200_000;

/// Allowed `|Σφᵘ − Σφ|` over a periodic cycle.
pub const COBOUNDARY_TOLERANCE: f64 = 1e-8;

const COBOUNDARY_SAMPLES: usize = 8;
const PERIODIC_MAX_SWEEPS: usize = 1000;
const PERIODIC_RESIDUAL: f64 = 1e-10;
const HOLDER_PREFIXES: usize = 4;
const CONTINUATION_LENGTH: usize = 8;

/// A constant added to `φ`, used to build potentials with nonzero or
/// divergent pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PotentialShift {
    #[default]
    None,
    /// `φ + c` at every step.
    PerStep(f64),
    /// `φ + c·i` on `E_i`.
    PerIndex(f64),
}

impl PotentialShift {
    pub fn at(self, symbol: usize) -> f64 {
        match self {
            PotentialShift::None => 0.0,
            PotentialShift::PerStep(c) => c,
            PotentialShift::PerIndex(c) => c * symbol as f64,
        }
    }
}

impl fmt::Display for PotentialShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialShift::None => f.write_str("none"),
            PotentialShift::PerStep(c) => write!(f, "step:{c}"),
            PotentialShift::PerIndex(c) => write!(f, "index:{c}"),
        }
    }
}

impl FromStr for PotentialShift {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "none" {
            return Ok(PotentialShift::None);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("unknown shift '{s}' (none|step:C|index:C)"))?;
        let c: f64 = value.parse().map_err(|_| format!("bad shift value '{value}'"))?;
        if !c.is_finite() {
            return Err(format!("shift value must be finite, got {value}"));
        }
        match kind {
            "step" => Ok(PotentialShift::PerStep(c)),
            "index" => Ok(PotentialShift::PerIndex(c)),
            other => Err(format!("unknown shift kind '{other}' (step|index)")),
        }
    }
}

/// A family with its reference unstable curve and series settings.
#[derive(Debug, Clone)]
pub struct PotentialContext {
    family: MapFamily,
    reference: ManifoldCurve,
    series_tolerance: f64,
    max_series_terms: usize,
    shift: PotentialShift,
}

impl PotentialContext {
    pub fn new(family: MapFamily) -> Result<Self> {
        let reference = reference_unstable(&family)?;
        let ends = (reference.graph.values()[0], *reference.graph.values().last().unwrap());
        if !(ends.0.is_finite() && ends.1.is_finite()) {
            return Err(Error::NumericalFailure(
                "reference unstable curve is not full width".into(),
            ));
        }
        Ok(Self {
            family,
            reference,
            series_tolerance: DEFAULT_SERIES_TOLERANCE,
            max_series_terms: DEFAULT_MAX_SERIES_TERMS,
            shift: PotentialShift::None,
        })
    }

    pub fn with_series(mut self, tolerance: f64, max_terms: usize) -> Result<Self> {
        if tolerance.is_nan() || tolerance <= 0.0 {
            return invalid(format!("series tolerance must be positive, got {tolerance}"));
        }
        if max_terms < 2 {
            return invalid(format!("at least two series terms are needed, got {max_terms}"));
        }
        self.series_tolerance = tolerance;
        self.max_series_terms = max_terms;
        Ok(self)
    }

    pub fn with_shift(mut self, shift: PotentialShift) -> Self {
        self.shift = shift;
        self
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn reference(&self) -> &ManifoldCurve {
        &self.reference
    }

    pub fn shift(&self) -> PotentialShift {
        self.shift
    }

    pub fn series_tolerance(&self) -> f64 {
        self.series_tolerance
    }

    /// `φ` on `E_symbol` at `z` with unstable slope `a`.
    pub fn phi_on(&self, symbol: usize, z: Point, a: f64) -> Result<f64> {
        let du = unstable_derivative(&self.family.branch(symbol).jet(z), a)?;
        Ok(-du.ln() + self.shift.at(symbol))
    }

    /// Orbit of the `W⁰ᵤ` point with forward itinerary `future`, with slopes.
    fn leaf_orbit(&self, future: &[usize]) -> Result<(Vec<Point>, Vec<f64>)> {
        let mut syms = vec![1; REFERENCE_DEPTH];
        syms.extend_from_slice(future);
        let orbit = shoot(&self.family, &syms, 0.0, 0.5)?;
        let slopes = transport_slopes(&self.family, &syms, &orbit, 0.0)?;
        Ok((orbit[REFERENCE_DEPTH..].to_vec(), slopes[REFERENCE_DEPTH..].to_vec()))
    }

    /// Sums `term(k)` until two consecutive terms are below the tolerance.
    fn series(&self, term: impl Fn(usize) -> Result<f64>) -> Result<f64> {
        let mut sum = 0.0;
        let mut small = 0;
        let mut last = f64::NAN;
        for k in 0..self.max_series_terms {
            let t = term(k)?;
            sum += t;
            last = t;
            if t.abs() < self.series_tolerance {
                small += 1;
                if small == 2 {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::HolderFailure {
            last_term: last.abs(),
            terms: self.max_series_terms,
        })
    }

    fn future_length(&self) -> usize {
        self.max_series_terms + FUTURE_MARGIN + 1
    }
}

/// `φ(z) = −log DᵘF(z)` at a point of the attractor with unstable slope `a`.
pub fn phi(ctx: &PotentialContext, z: Point, a: f64) -> Result<f64> {
    let i = ctx
        .family
        .locate_branch(z)
        .ok_or_else(|| Error::InvalidArgument(format!("({}, {}) is not in a branch interior", z.x, z.y)))?;
    ctx.phi_on(i, z, a)
}

/// `u(z) = Σ_k φ(F^k z) − φ(F^k z₀)` with `z₀ = W^s(z) ∩ W⁰ᵤ`, for the point
/// with backward itinerary `past` and forward itinerary `future`.
pub fn u_series(ctx: &PotentialContext, past: &Word, future: &Word) -> Result<f64> {
    if future.is_empty() {
        return invalid("u needs a nonempty future");
    }
    past.validate(&ctx.family)?;
    future.validate(&ctx.family)?;
    let past = Word::constant(1, REFERENCE_DEPTH.saturating_sub(past.len())).concat(past);
    let n = ctx.future_length();
    let fut: Vec<usize> = future
        .symbols()
        .iter()
        .copied()
        .chain(std::iter::repeat(1))
        .take(n.max(future.len()))
        .collect();
    let syms: Vec<usize> = past.symbols().iter().chain(fut.iter()).copied().collect();
    let a_orbit = shoot(&ctx.family, &syms, 0.5, 0.5)?;
    let a_slopes = transport_slopes(&ctx.family, &syms, &a_orbit, 0.0)?;
    let (b_orbit, b_slopes) = ctx.leaf_orbit(&fut)?;
    let m = past.len();
    ctx.series(|k| {
        Ok(ctx.phi_on(fut[k], a_orbit[m + k], a_slopes[m + k])? - ctx.phi_on(fut[k], b_orbit[k], b_slopes[k])?)
    })
}

fn periodic_extension(word: &Word, n: usize) -> Vec<usize> {
    word.symbols().iter().copied().cycle().take(n.max(word.len())).collect()
}

/// `φᵘ` of the one-sided sequence `word^∞`: `ψ = φ − u + u∘F` evaluated at
/// the `W⁰ᵤ` point with that forward itinerary.
pub fn phi_u(ctx: &PotentialContext, word: &Word) -> Result<f64> {
    let first = word
        .first()
        .ok_or_else(|| Error::InvalidArgument("φᵘ needs a nonempty word".into()))?;
    word.validate(&ctx.family)?;
    if ctx.family.has_constant_expansions() {
        let w = ctx.family.branch(first).constant_expansion().unwrap();
        return Ok(-w.ln() + ctx.shift.at(first));
    }
    let v = periodic_extension(word, ctx.future_length());
    let (a_orbit, a_slopes) = ctx.leaf_orbit(&v)?;
    let (b_orbit, b_slopes) = ctx.leaf_orbit(&v[1..])?;
    let head = ctx.phi_on(v[0], a_orbit[0], a_slopes[0])?;
    let tail = ctx.series(|k| {
        Ok(ctx.phi_on(v[k + 1], a_orbit[k + 1], a_slopes[k + 1])? - ctx.phi_on(v[k + 1], b_orbit[k], b_slopes[k])?)
    })?;
    Ok(head + tail)
}

/// Sampled variations `V_n` of `φᵘ` with a geometric fit.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub per_n: Vec<(usize, f64)>,
    pub fitted_c: f64,
    pub fitted_theta: f64,
    pub residual: f64,
    /// All sampled variations vanish.
    pub exact: bool,
}

impl HolderEstimate {
    pub fn passed(&self) -> bool {
        self.exact || self.fitted_theta < 1.0
    }
}

pub const HOLDER_CSV_HEADER: &str = "n,v_n,fit_c,fit_theta,fit_residual";

pub fn holder_to_csv(est: &HolderEstimate) -> String {
    let mut out = String::from(HOLDER_CSV_HEADER);
    out.push('\n');
    for &(n, v) in &est.per_n {
        out.push_str(&format!(
            "{n},{},{},{},{}\n",
            fmt_f64(v),
            fmt_f64(est.fitted_c),
            fmt_f64(est.fitted_theta),
            fmt_f64(est.residual)
        ));
    }
    out
}

/// `V_n(φᵘ)` for `n = 1..=n_max`, fitted over `n ≥ 2`.
///
/// For each `n` the prefixes `1^n`, `k^n` and random words are combined with
/// `samples_per_cyl` continuations. Values sharing a prefix of length `n′`
/// also share every shorter prefix, so each group counts towards all
/// `V_n` with `n ≤ n′`.
pub fn holder_variation(
    ctx: &PotentialContext,
    n_max: usize,
    samples_per_cyl: usize,
    seed: u64,
) -> Result<HolderEstimate> {
    if n_max < 2 {
        return invalid(format!("n_max must be at least 2, got {n_max}"));
    }
    let k = ctx.family.trunc_n().min(SAMPLING_ALPHABET);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conts = vec![
        Word::constant(1, CONTINUATION_LENGTH),
        Word::constant(k, CONTINUATION_LENGTH),
    ];
    while conts.len() < samples_per_cyl.max(2) {
        conts.push(random_word(&mut rng, k, CONTINUATION_LENGTH));
    }
    let mut groups = Vec::new();
    for n in 1..=n_max {
        let mut prefixes = vec![Word::constant(1, n), Word::constant(k, n)];
        while prefixes.len() < HOLDER_PREFIXES {
            prefixes.push(random_word(&mut rng, k, n));
        }
        groups.extend(prefixes.into_iter().map(|p| (n, p)));
    }
    let spreads: Vec<(usize, f64)> = groups
        .par_iter()
        .map(|(n, p)| {
            let vals = conts
                .iter()
                .map(|c| phi_u(ctx, &p.concat(c)))
                .collect::<Result<Vec<f64>>>()?;
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok((*n, hi - lo))
        })
        .collect::<Result<_>>()?;
    let per_n: Vec<(usize, f64)> = (1..=n_max)
        .map(|n| {
            let v = spreads.iter().filter(|s| s.0 >= n).map(|s| s.1).fold(0.0, f64::max);
            (n, v)
        })
        .collect();
    let exact = per_n.iter().all(|&(_, v)| v == 0.0);
    let pts: Vec<(f64, f64)> = per_n.iter().filter(|d| d.0 >= 2).map(|&(n, v)| (n as f64, v)).collect();
    let (fitted_c, fitted_theta, residual) = match (exact, fit_geometric(&pts)) {
        (true, _) => (0.0, 0.0, 0.0),
        (false, Some(f)) => (f.c, f.rate, f.residual),
        (false, None) => (f64::NAN, f64::NAN, f64::NAN),
    };
    Ok(HolderEstimate {
        per_n,
        fitted_c,
        fitted_theta,
        residual,
        exact,
    })
}

/// The periodic orbit with itinerary `word^∞`, with unstable slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub word: Word,
    pub points: Vec<Point>,
    pub slopes: Vec<f64>,
}

impl PeriodicOrbit {
    /// `Σ_k φ(F^k p)`.
    pub fn phi_sum(&self, ctx: &PotentialContext) -> Result<f64> {
        let terms = self
            .word
            .symbols()
            .iter()
            .zip(self.points.iter().zip(&self.slopes))
            .map(|(&s, (&z, &a))| ctx.phi_on(s, z, a))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

/// Solves the cyclic boundary problem `z_{k+1} = f_{w_k}(z_k)`, indices mod
/// `n`, by alternating backward `x` sweeps and forward `y` sweeps.
///
/// The result is checked one step at a time, in the direction each
/// coordinate is well conditioned: the `x` mismatch of `f_{w_k}(z_k)` and
/// `z_{k+1}` is pulled back by `f1x`, the `y` mismatch is taken as is, and
/// both must be within 1e-10.
pub fn periodic_orbit(fam: &MapFamily, word: &Word) -> Result<PeriodicOrbit> {
    if word.is_empty() {
        return invalid("periodic orbits need a nonempty word");
    }
    word.validate(fam)?;
    let w = word.symbols();
    let n = w.len();
    let mut xs: Vec<f64> = w.iter().map(|&s| fam.branch(s).domain().point_at(0.5, 0.5).x).collect();
    let mut ys = vec![0.5; n];
    let mut converged = false;
    for _ in 0..PERIODIC_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for k in (0..n).rev() {
            let x = solve_x(fam, w[k], ys[k], xs[(k + 1) % n]);
            change = change.max((x - xs[k]).abs());
            xs[k] = x;
        }
        for k in 0..n {
            let y = fam.branch(w[k]).image(Point::new(xs[k], ys[k])).y;
            change = change.max((y - ys[(k + 1) % n]).abs());
            ys[(k + 1) % n] = y;
        }
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "periodic orbit {word} did not converge"
        )));
    }
    let points: Vec<Point> = xs.into_iter().zip(ys).map(|(x, y)| Point::new(x, y)).collect();
    for k in 0..n {
        let jet = fam.branch(w[k]).jet(points[k]);
        let next = points[(k + 1) % n];
        let r = ((jet.f1 - next.x) / jet.f1x).abs().max((jet.f2 - next.y).abs());
        if r > PERIODIC_RESIDUAL {
            return Err(Error::NumericalFailure(format!(
                "periodic orbit {word} has step residual {r:e} at position {k}"
            )));
        }
    }
    let mut slopes = vec![0.0; n];
    let mut a = 0.0;
    for _ in 0..PERIODIC_MAX_SWEEPS {
        let start = a;
        for k in 0..n {
            slopes[k] = a;
            a = slope_transport(&fam.branch(w[k]).jet(points[k]), a)?;
        }
        if (a - start).abs() <= 1e-16 {
            break;
        }
    }
    Ok(PeriodicOrbit {
        word: word.clone(),
        points,
        slopes,
    })
}

/// The point of the periodic orbit with itinerary `word^∞` in `E_{w_0}`.
pub fn periodic_point(fam: &MapFamily, word: &Word) -> Result<Point> {
    Ok(periodic_orbit(fam, word)?.points[0])
}

/// `Σφᵘ` over the rotations of `word` minus `Σφ` over its periodic orbit.
pub fn coboundary_defect(ctx: &PotentialContext, word: &Word) -> Result<f64> {
    let orbit = periodic_orbit(&ctx.family, word)?;
    let n = word.len();
    let rotations = (0..n)
        .map(|r| {
            let s = word.symbols();
            phi_u(ctx, &Word(s[r..].iter().chain(&s[..r]).copied().collect()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&rotations) - orbit.phi_sum(ctx)?)
}

fn decode_word(anchor: usize, mut index: u128, alphabet: usize, n: usize) -> Word {
    let mut s = vec![anchor; n];
    for k in (1..n).rev() {
        s[k] = (index % alphabet as u128) as usize + 1;
        index /= alphabet as u128;
    }
    Word(s)
}

fn enumeration_size(alphabet: usize, n: usize) -> u128 {
    (alphabet as u128).saturating_pow(n.saturating_sub(1) as u32)
}

fn uses_product_sum(ctx: &PotentialContext) -> bool {
    ctx.family.has_constant_expansions()
}

/// `Z_n(φ, a) = Σ e^{φ_n(p)}` over the periodic points of all `n`-words
/// starting with `a` over the truncated alphabet.
///
/// With constant expansions the sum factorizes as `e^{φ_a} S^{n−1}`,
/// `S = Σ_i e^{φ_i}`. Otherwise every word is enumerated, and for `n ≤ 4`
/// a spread of words is cross-checked against `Σφᵘ`.
pub fn partition_sum(ctx: &PotentialContext, a: usize, n: usize) -> Result<f64> {
    ctx.family.check_symbol(a)?;
    if n == 0 {
        return invalid("partition sums need n ≥ 1");
    }
    let big_n = ctx.family.trunc_n();
    if uses_product_sum(ctx) {
        let weight = |i: usize| {
            let w = ctx.family.branch(i).constant_expansion().unwrap();
            (-w.ln() + ctx.shift.at(i)).exp()
        };
        let s = pairwise_sum(&(1..=big_n).map(weight).collect::<Vec<_>>());
        return Ok(weight(a) * s.powi(n as i32 - 1));
    }
    let count = enumeration_size(big_n, n);
    if count > ENUMERATION_BUDGET {
        return Err(Error::EnumerationBudget {
            words: count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let terms = (0..count as u64)
        .into_par_iter()
        .map(|idx| {
            let word = decode_word(a, idx as u128, big_n, n);
            Ok(periodic_orbit(&ctx.family, &word)?.phi_sum(ctx)?.exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    if n <= 4 {
        let step = (count / COBOUNDARY_SAMPLES as u128).max(1);
        for j in 0..COBOUNDARY_SAMPLES.min(count as usize) {
            let word = decode_word(a, j as u128 * step, big_n, n);
            let d = coboundary_defect(ctx, &word)?;
            if d.abs() > COBOUNDARY_TOLERANCE {
                return Err(Error::NumericalFailure(format!(
                    "Σφᵘ and Σφ differ by {d:e} on the cycle {word}"
                )));
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

/// `Σ_{i > truncN} e^{φ_i}` bounded through the tail widths, or `None`
/// without a tail model. Widths that underflow fall back to the logarithmic
/// minimum width so that index-proportional shifts still register.
pub fn tail_weight(ctx: &PotentialContext) -> Option<SeriesSum> {
    let tail = ctx.family.tail()?;
    let shift = ctx.shift;
    Some(sum_series(ctx.family.trunc_n() + 1, |i| {
        let w = tail.width_max(i);
        let lw = if w > 0.0 { w.ln() } else { tail.log_width_min(i) };
        (lw + shift.at(i)).exp()
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    pub anchor: usize,
    /// `(n, Z_n, log(Z_n)/n)`.
    pub values: Vec<(usize, f64, f64)>,
    pub lambda: f64,
    /// `min` and `max` of `Z_n / λ^n`.
    pub recurrence_band: (f64, f64),
    pub p: f64,
    /// Geometric-tail bound on `|P − lim Δ_n|` from the last increments
    /// `Δ_n = log Z_n − log Z_{n−1}`; infinite when they do not contract.
    pub p_error: f64,
    /// Largest `n` actually used, at most the requested `n_max`.
    pub n_used: usize,
    /// Weight of the symbols beyond the truncation; `None` without a tail model.
    pub tail: Option<SeriesSum>,
}

impl PressureEstimate {
    /// The full alphabet carries infinite weight, so `Z_n = ∞`.
    pub fn divergent(&self) -> bool {
        matches!(self.tail, Some(SeriesSum::Divergent))
    }

    pub fn tail_value(&self) -> f64 {
        self.tail.map_or(0.0, SeriesSum::value)
    }
}

pub const PRESSURE_CSV_HEADER: &str = "anchor,n,z_n,log_z_n_over_n,lambda,pressure,pressure_error,tail_weight";

pub fn pressure_to_csv(estimates: &[PressureEstimate]) -> String {
    let mut out = String::from(PRESSURE_CSV_HEADER);
    out.push('\n');
    for e in estimates {
        for &(n, z, l) in &e.values {
            out.push_str(&format!(
                "{},{n},{},{},{},{},{},{}\n",
                e.anchor,
                fmt_f64(z),
                fmt_f64(l),
                fmt_f64(e.lambda),
                fmt_f64(e.p),
                fmt_f64(e.p_error),
                fmt_f64(e.tail_value())
            ));
        }
    }
    out
}

/// Largest `n ≤ n_max` whose partition sum fits the enumeration budget.
pub fn feasible_depth(ctx: &PotentialContext, n_max: usize) -> usize {
    if uses_product_sum(ctx) {
        return n_max;
    }
    (1..=n_max)
        .take_while(|&n| enumeration_size(ctx.family.trunc_n(), n) <= ENUMERATION_BUDGET)
        .last()
        .unwrap_or(0)
}

/// `P = log Z_n − log Z_{n−1}` at the largest usable `n`, with `λ = e^P`
/// and the observed recurrence band of `Z_n / λ^n`.
pub fn pressure(ctx: &PotentialContext, a: usize, n_max: usize) -> Result<PressureEstimate> {
    if n_max < 3 {
        return invalid(format!("n_max must be at least 3, got {n_max}"));
    }
    ctx.family.check_symbol(a)?;
    let n_used = feasible_depth(ctx, n_max);
    if n_used < 3 {
        return Err(Error::EnumerationBudget {
            words: enumeration_size(ctx.family.trunc_n(), 3),
            budget: ENUMERATION_BUDGET,
        });
    }
    let tail = tail_weight(ctx);
    let values = (1..=n_used)
        .map(|n| {
            let z = partition_sum(ctx, a, n)?;
            Ok((n, z, z.ln() / n as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    if matches!(tail, Some(SeriesSum::Divergent)) {
        return Ok(PressureEstimate {
            anchor: a,
            values,
            lambda: f64::INFINITY,
            recurrence_band: (f64::NAN, f64::NAN),
            p: f64::INFINITY,
            p_error: f64::INFINITY,
            n_used,
            tail,
        });
    }
    let p = values[n_used - 1].1.ln() - values[n_used - 2].1.ln();
    let increments: Vec<f64> = values.windows(2).map(|w| w[1].1.ln() - w[0].1.ln()).collect();
    let p_error = extrapolation_error(&increments);
    let lambda = p.exp();
    let ratios: Vec<f64> = values.iter().map(|&(n, z, _)| (z.ln() - n as f64 * p).exp()).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(PressureEstimate {
        anchor: a,
        values,
        lambda,
        recurrence_band: (lo, hi),
        p,
        p_error,
        n_used,
        tail,
    })
}

/// `|d_n| ρ / (1 − ρ)` with `d_n` the last difference of increments and
/// `ρ = |d_n / d_{n−1}|`; `|d_n|` when only one difference exists.
fn extrapolation_error(increments: &[f64]) -> f64 {
    let d: Vec<f64> = increments.windows(2).map(|w| w[1] - w[0]).collect();
    match d.as_slice() {
        [] => f64::INFINITY,
        [.., last] if *last == 0.0 => 0.0,
        [last] => last.abs(),
        [.., prev, last] => {
            let rho = (last / prev).abs();
            if rho < 1.0 {
                last.abs() * rho / (1.0 - rho)
            } else {
                f64::INFINITY
            }
        }
    }
}

/// `L_φ f(x) = Σ_{i ≤ truncN} e^{φᵘ(i·x)} f(i·x)`.
pub fn ruelle_apply(ctx: &PotentialContext, f: &dyn Fn(&Word) -> f64, x: &Word) -> Result<f64> {
    let terms = (1..=ctx.family.trunc_n())
        .map(|i| {
            let y = x.prepend(i);
            let v = f(&y);
            if v == 0.0 {
                return Ok(0.0);
            }
            Ok(phi_u(ctx, &y)?.exp() * v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuelleBound {
    /// Largest sampled `L_φ1(x)`.
    pub sup: f64,
    pub samples: usize,
    pub tail: Option<SeriesSum>,
}

impl RuelleBound {
    pub fn finite(&self) -> bool {
        self.sup.is_finite() && !matches!(self.tail, Some(SeriesSum::Divergent))
    }
}

/// `sup_x L_φ1(x)` over random words of length 8 on the first
/// [`SAMPLING_ALPHABET`] symbols.
pub fn ruelle_sup(ctx: &PotentialContext, samples: usize, seed: u64) -> Result<RuelleBound> {
    let k = ctx.family.trunc_n().min(SAMPLING_ALPHABET);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Word> = (0..samples.max(1))
        .map(|_| random_word(&mut rng, k, CONTINUATION_LENGTH))
        .collect();
    let one = |_: &Word| 1.0;
    let vals = words
        .par_iter()
        .map(|x| ruelle_apply(ctx, &one, x))
        .collect::<Result<Vec<f64>>>()?;
    let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RuelleBound {
        sup,
        samples: vals.len(),
        tail: tail_weight(ctx),
    })
}

/// Length of the piece of the reference unstable curve inside `cyl`,
/// measured in `x` (the max-norm length of a graph with slope below 1).
pub fn cross_section_length(reference: &ManifoldCurve, cyl: &CylinderRect) -> f64 {
    let l = strip_crossing(&reference.graph, &cyl.left).x;
    let r = strip_crossing(&reference.graph, &cyl.right).x;
    r - l
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsLength {
    pub word: Word,
    /// `e^{Σφ}` over the periodic orbit of the word.
    pub weight: f64,
    pub length: f64,
}

impl GibbsLength {
    pub fn ratio(&self) -> f64 {
        self.weight / self.length
    }
}

/// Periodic weights against `W⁰ᵤ` cross-sections for every word of length
/// `1..=max_len` on the first [`SAMPLING_ALPHABET`] symbols.
pub fn gibbs_length_ratios(ctx: &PotentialContext, max_len: usize) -> Result<Vec<GibbsLength>> {
    let k = ctx.family.trunc_n().min(SAMPLING_ALPHABET);
    let words: Vec<Word> = (1..=max_len).flat_map(|n| crate::symbolic::all_words(k, n)).collect();
    words
        .par_iter()
        .map(|w| {
            let weight = periodic_orbit(&ctx.family, w)?.phi_sum(ctx)?.exp();
            let length = cross_section_length(&ctx.reference, &build_cylinder(&ctx.family, w)?);
            Ok(GibbsLength {
                word: w.clone(),
                weight,
                length,
            })
        })
        .collect()
}

/// Settings for [`verify_hypotheses`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub anchor: usize,
    pub n_max: usize,
    pub holder_n_max: usize,
    pub holder_samples: usize,
    pub ruelle_samples: usize,
    pub pressure_tolerance: f64,
    pub mixing_horizon: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            anchor: 1,
            n_max: 8,
            holder_n_max: 8,
            holder_samples: 6,
            ruelle_samples: 200,
            pressure_tolerance: 1e-3,
            mixing_horizon: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Mixing transitions with finitely many distinct rows.
    A,
    /// Locally Hölder potential.
    B,
    /// Finite pressure, here close to zero.
    C,
    /// Bounded `L_φ1`.
    D,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::A => "a",
            Hypothesis::B => "b",
            Hypothesis::C => "c",
            Hypothesis::D => "d",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisEntry {
    pub hypothesis: Hypothesis,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesesReport {
    pub entries: Vec<HypothesisEntry>,
    pub holder: HolderEstimate,
    pub pressure: PressureEstimate,
    pub ruelle: RuelleBound,
    /// How positive recurrence follows from the checked items.
    pub derivation: String,
}

impl HypothesesReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &String> {
        self.entries.iter().flat_map(|e| &e.warnings)
    }
}

pub const HYPOTHESES_CSV_HEADER: &str = "hypothesis,status,value,detail";

pub fn hypotheses_to_csv(report: &HypothesesReport) -> String {
    let mut out = String::from(HYPOTHESES_CSV_HEADER);
    out.push('\n');
    for e in &report.entries {
        let status = match (e.passed, e.warnings.is_empty()) {
            (false, _) => "fail",
            (true, true) => "pass",
            (true, false) => "pass-with-warnings",
        };
        out.push_str(&format!(
            "{},{status},{},\"{}\"\n",
            e.hypothesis,
            fmt_f64(e.value),
            e.detail
        ));
    }
    out
}

/// Window accepted for `P`: `[log(1 − 2·tail) − tol, tol]`, the pressure of
/// the truncated system being below zero by about its missing weight.
pub fn pressure_window(tail: f64, tol: f64) -> (f64, f64) {
    ((1.0 - (2.0 * tail).min(0.999)).ln() - tol, tol)
}

/// Checks the four hypotheses behind positive recurrence and the Gibbs
/// property: (a) symbolic structure, (b) Hölder fit, (c) pressure near
/// zero, (d) bounded `L_φ1`.
pub fn verify_hypotheses(ctx: &PotentialContext, opts: &VerifyOptions) -> Result<HypothesesReport> {
    let fam = &ctx.family;
    let big_n = fam.trunc_n();
    let ts = TransitionStructure::new(vec![vec![true; big_n]; big_n], Some(vec![true; big_n]))?;
    let mixing = is_topologically_mixing(&ts, opts.mixing_horizon)?;
    let images = check_finitely_many_images(&ts);
    let a = HypothesisEntry {
        hypothesis: Hypothesis::A,
        passed: mixing,
        value: images as f64,
        detail: format!("mixing={mixing}; distinct rows={images}"),
        warnings: Vec::new(),
    };

    let holder = holder_variation(ctx, opts.holder_n_max, opts.holder_samples, opts.seed)?;
    let b = HypothesisEntry {
        hypothesis: Hypothesis::B,
        passed: holder.passed(),
        value: holder.fitted_theta,
        detail: if holder.exact {
            "all variations vanish".to_string()
        } else {
            format!(
                "theta={} C={} residual={}",
                fmt_f64(holder.fitted_theta),
                fmt_f64(holder.fitted_c),
                fmt_f64(holder.residual)
            )
        },
        warnings: Vec::new(),
    };

    let pressure = pressure(ctx, opts.anchor, opts.n_max)?;
    let mut c_warn = Vec::new();
    let c_pass = if pressure.divergent() {
        false
    } else {
        let tail = pressure.tail_value();
        let (lo, hi) = pressure_window(tail, opts.pressure_tolerance);
        let p = pressure.p;
        let inside = p >= lo && p <= hi;
        let within_error = p - pressure.p_error <= hi && p + pressure.p_error >= lo;
        if p.abs() > opts.pressure_tolerance && inside {
            c_warn.push(format!(
                "pressure below zero by the truncated tail weight {}",
                fmt_f64(tail)
            ));
        }
        if !inside && within_error {
            c_warn.push(format!(
                "pressure consistent with zero only within the extrapolation error {}",
                fmt_f64(pressure.p_error)
            ));
        }
        if pressure.tail.is_none() {
            c_warn.push("no tail model; truncation not accounted".to_string());
        }
        if pressure.n_used < opts.n_max {
            c_warn.push(format!("enumeration stopped at n = {}", pressure.n_used));
        }
        within_error
    };
    let c = HypothesisEntry {
        hypothesis: Hypothesis::C,
        passed: c_pass,
        value: pressure.p,
        detail: if pressure.divergent() {
            "P = +inf: the potential has infinite total weight".to_string()
        } else {
            format!(
                "P={} error={} n_used={}",
                fmt_f64(pressure.p),
                fmt_f64(pressure.p_error),
                pressure.n_used
            )
        },
        warnings: c_warn,
    };

    let ruelle = ruelle_sup(ctx, opts.ruelle_samples, opts.seed)?;
    let d = HypothesisEntry {
        hypothesis: Hypothesis::D,
        passed: ruelle.finite(),
        value: ruelle.sup + ruelle.tail.map_or(0.0, SeriesSum::value),
        detail: format!("sup L1={} over {} words", fmt_f64(ruelle.sup), ruelle.samples),
        warnings: Vec::new(),
    };

    let derivation = format!(
        "finitely many images ({}) and sup L1 < inf ({}) give positive recurrence",
        if a.passed { "holds" } else { "fails" },
        if d.passed { "holds" } else { "fails" }
    );
    Ok(HypothesesReport {
        entries: vec![a, b, c, d],
        holder,
        pressure,
        ruelle,
        derivation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{make_dyadic_family, make_perturbed_family, EpsDecay, PerturbedParams};
    use std::f64::consts::LN_2;

    fn dyadic(n: usize) -> PotentialContext {
        PotentialContext::new(make_dyadic_family(n).unwrap()).unwrap()
    }

    fn perturbed(n: usize, eps: f64, decay: EpsDecay, shear: f64) -> PotentialContext {
        let fam = make_perturbed_family(PerturbedParams {
            trunc_n: n,
            eps,
            decay,
            shear,
        })
        .unwrap();
        PotentialContext::new(fam).unwrap()
    }

    #[test]
    fn phi_on_dyadic_branches() {
        let ctx = dyadic(20);
        assert!((phi(&ctx, Point::new(0.3, 0.4), 0.2).unwrap() + LN_2).abs() < 1e-15);
        let z = ctx.family().branch(5).domain().point_at(0.5, 0.5);
        assert!((phi(&ctx, z, 0.0).unwrap() + 5.0 * LN_2).abs() < 1e-14);
        assert!(phi(&ctx, Point::new(0.5, 0.2), 0.0).is_err());
    }

    #[test]
    fn phi_on_perturbed_branches_stays_in_range() {
        let ctx = perturbed(10, 0.15, EpsDecay::Constant, 0.15);
        for i in 1..=10 {
            for &(s, y) in &[(0.01, 0.0), (0.5, 0.5), (0.99, 1.0)] {
                let z = ctx.family().branch(i).domain().point_at(s, y);
                let v = ctx.phi_on(i, z, 0.5).unwrap();
                let lo = -((i + 1) as f64) * LN_2 - 0.3;
                let hi = -(i as f64) * LN_2 + 0.3;
                assert!(v >= lo && v <= hi, "branch {i}: {v}");
            }
        }
    }

    #[test]
    fn u_vanishes_without_shear() {
        let ctx = perturbed(10, 0.1, EpsDecay::Geometric, 0.0);
        let u = u_series(&ctx, &Word::new([3, 1, 2]), &Word::new([2, 4, 1])).unwrap();
        assert!(u.abs() < 1e-12, "{u}");
    }

    #[test]
    fn u_is_bounded_with_shear() {
        let ctx = perturbed(10, 0.1, EpsDecay::Geometric, 0.1);
        for (p, f) in [([2, 5, 1], [1, 3]), ([4, 4, 4], [2, 2]), ([1, 1, 6], [6, 1])] {
            let u = u_series(&ctx, &Word::new(p), &Word::new(f)).unwrap();
            assert!(u.abs() < 1.0 && u != 0.0, "{u}");
        }
    }

    #[test]
    fn u_on_the_reference_leaf_is_zero() {
        let ctx = perturbed(10, 0.1, EpsDecay::Geometric, 0.1);
        let u = u_series(&ctx, &Word::constant(1, 30), &Word::new([3, 2])).unwrap();
        assert!(u.abs() < 1e-12, "{u}");
    }

    #[test]
    fn series_tolerance_barely_moves_phi_u() {
        let fam = make_perturbed_family(PerturbedParams {
            trunc_n: 10,
            eps: 0.1,
            decay: EpsDecay::Geometric,
            shear: 0.1,
        })
        .unwrap();
        let fine = PotentialContext::new(fam.clone())
            .unwrap()
            .with_series(1e-14, 64)
            .unwrap();
        let coarse = PotentialContext::new(fam).unwrap().with_series(1e-10, 64).unwrap();
        let w = Word::new([2, 1, 3]);
        let d = phi_u(&fine, &w).unwrap() - phi_u(&coarse, &w).unwrap();
        assert!(d.abs() < 1e-9, "{d}");
    }

    #[test]
    fn non_decaying_series_is_a_holder_failure() {
        let ctx = perturbed(10, 0.1, EpsDecay::Geometric, 0.1)
            .with_series(1e-300, 4)
            .unwrap();
        assert!(matches!(
            phi_u(&ctx, &Word::new([2, 3])),
            Err(Error::HolderFailure { terms: 4, .. })
        ));
    }

    #[test]
    fn phi_u_on_dyadic_depends_on_first_symbol_only() {
        let ctx = dyadic(20);
        for i in 1..=20 {
            let v = phi_u(&ctx, &Word::new([i, 3, 1])).unwrap();
            assert_eq!(v, -(i as f64) * LN_2);
        }
        let h = holder_variation(&ctx, 8, 4, 1).unwrap();
        assert!(h.exact && h.per_n.iter().all(|d| d.1 == 0.0));
    }

    #[test]
    fn shear_free_phi_u_matches_the_general_path() {
        let ctx = perturbed(10, 0.1, EpsDecay::Geometric, 0.0);
        let w = Word::new([2, 1, 3]);
        let orbit = shoot(
            ctx.family(),
            &[vec![1; 30], periodic_extension(&w, 60)].concat(),
            0.0,
            0.5,
        )
        .unwrap();
        let z = orbit[30];
        let expected = ctx.phi_on(2, z, 0.0).unwrap();
        assert!((phi_u(&ctx, &w).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn holder_variation_is_monotone_and_decays() {
        let ctx = perturbed(10, 0.1, EpsDecay::Geometric, 0.1);
        let h = holder_variation(&ctx, 6, 4, 2).unwrap();
        for w in h.per_n.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert!(!h.exact && h.fitted_theta < 1.0, "{h:?}");
    }

    #[test]
    fn dyadic_periodic_points() {
        let fam = make_dyadic_family(20).unwrap();
        let p = periodic_point(&fam, &Word::new([1])).unwrap();
        assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12);
        let p = periodic_point(&fam, &Word::new([2])).unwrap();
        assert!((p.x - 2.0 / 3.0).abs() < 1e-12 && (p.y - 2.0 / 7.0).abs() < 1e-12);
        // x: 2/7 -> 4/7 -> 2/7; y solves y1 = y0/4, y0 = 1/4 + y1/8
        let o = periodic_orbit(&fam, &Word::new([1, 2])).unwrap();
        assert!((o.points[0].x - 2.0 / 7.0).abs() < 1e-12);
        assert!((o.points[1].x - 4.0 / 7.0).abs() < 1e-12);
        assert!((o.points[0].y - 8.0 / 31.0).abs() < 1e-12);
        assert!((o.points[1].y - 2.0 / 31.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_orbit_rejects_bad_words() {
        let fam = make_dyadic_family(5).unwrap();
        assert!(periodic_orbit(&fam, &Word::default()).is_err());
        assert!(periodic_orbit(&fam, &Word::new([6])).is_err());
    }

    #[test]
    fn dyadic_partition_sums() {
        let ctx = dyadic(20);
        let s = 1.0 - 2f64.powi(-20);
        assert!((partition_sum(&ctx, 1, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((partition_sum(&ctx, 1, 3).unwrap() - 0.5 * s * s).abs() < 1e-15);
        for n in 1..=6 {
            let z = partition_sum(&ctx, 3, n).unwrap();
            assert!((z - 0.125 * s.powi(n as i32 - 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn enumerated_sum_matches_product_sum() {
        // numerically dyadic, but without the constant-expansion flag
        let dy = dyadic(6);
        let fam = make_perturbed_family(PerturbedParams {
            trunc_n: 6,
            eps: 1e-300,
            decay: EpsDecay::Constant,
            shear: 0.0,
        })
        .unwrap();
        let ctx = PotentialContext::new(fam).unwrap();
        assert!(!ctx.family().has_constant_expansions());
        for n in 1..=3 {
            let a = partition_sum(&ctx, 2, n).unwrap();
            let b = partition_sum(&dy, 2, n).unwrap();
            assert!((a - b).abs() < 1e-12 * b, "{a} {b}");
        }
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let ctx = perturbed(20, 0.1, EpsDecay::Geometric, 0.1);
        assert!(matches!(
            partition_sum(&ctx, 1, 6),
            Err(Error::EnumerationBudget { .. })
        ));
        assert_eq!(feasible_depth(&ctx, 8), 5);
    }

    #[test]
    fn coboundary_cancels_on_cycles() {
        let ctx = perturbed(8, 0.1, EpsDecay::Geometric, 0.1);
        for w in [vec![1], vec![2, 3], vec![1, 4, 2], vec![3, 1, 1, 2]] {
            let d = coboundary_defect(&ctx, &Word(w)).unwrap();
            assert!(d.abs() < COBOUNDARY_TOLERANCE, "{d}");
        }
    }

    #[test]
    fn dyadic_pressure_is_the_truncated_value() {
        let ctx = dyadic(20);
        let est = pressure(&ctx, 1, 8).unwrap();
        let exact = (1.0 - 2f64.powi(-20)).ln();
        assert!((est.p - exact).abs() < 1e-14);
        assert!(est.p >= -2e-6 && est.p <= 0.0);
        assert!(est.recurrence_band.0 >= 0.49 && est.recurrence_band.1 <= 0.51);
        let p2 = pressure(&ctx, 2, 8).unwrap().p;
        assert!((est.p - p2).abs() <= 1e-6);
        assert!(!est.divergent());
    }

    #[test]
    fn pressure_needs_three_terms() {
        assert!(matches!(pressure(&dyadic(20), 1, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn shifted_potentials() {
        let ctx = dyadic(20).with_shift(PotentialShift::PerStep(0.5));
        let z3 = partition_sum(&ctx, 1, 3).unwrap();
        let s = 1.0 - 2f64.powi(-20);
        let expected = 0.5f64.exp() / 2.0 * (0.5f64.exp() * s).powi(2);
        assert!((z3 - expected).abs() < 1e-12 * expected);
        let est = pressure(&ctx, 1, 8).unwrap();
        assert!((est.p - 0.5 - s.ln()).abs() < 1e-12);
        let div = pressure(&dyadic(20).with_shift(PotentialShift::PerIndex(0.7)), 1, 8).unwrap();
        assert!(div.divergent() && div.p == f64::INFINITY, "{div:?}");
    }

    #[test]
    fn shift_parsing() {
        assert_eq!("none".parse::<PotentialShift>().unwrap(), PotentialShift::None);
        assert_eq!(
            "step:0.5".parse::<PotentialShift>().unwrap(),
            PotentialShift::PerStep(0.5)
        );
        assert_eq!(
            "index:0.7".parse::<PotentialShift>().unwrap(),
            PotentialShift::PerIndex(0.7)
        );
        assert!("step".parse::<PotentialShift>().is_err());
        assert!("other:1".parse::<PotentialShift>().is_err());
    }

    #[test]
    fn ruelle_on_dyadic() {
        let ctx = dyadic(20);
        let x = Word::new([3, 1, 4, 1, 5]);
        let v = ruelle_apply(&ctx, &|_| 1.0, &x).unwrap();
        assert!((v - (1.0 - 2f64.powi(-20))).abs() < 1e-15);
        assert_eq!(ruelle_apply(&ctx, &|_| 0.0, &x).unwrap(), 0.0);
        let b = ruelle_sup(&ctx, 50, 4).unwrap();
        assert!(b.finite() && b.sup <= 1.0);
    }

    #[test]
    fn cross_sections_of_dyadic_cylinders() {
        let ctx = dyadic(10);
        let cyl = build_cylinder(ctx.family(), &Word::new([2, 1])).unwrap();
        assert!((cross_section_length(ctx.reference(), &cyl) - 0.125).abs() < 1e-12);
    }

    #[test]
    fn dyadic_hypotheses_pass() {
        let ctx = dyadic(20);
        let r = verify_hypotheses(
            &ctx,
            &VerifyOptions {
                ruelle_samples: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.warnings().count(), 0);
        assert!(hypotheses_to_csv(&r).lines().count() == 5);
    }

    #[test]
    fn extrapolation_error_bounds_a_geometric_tail() {
        let inc: Vec<f64> = (0..6).map(|n| 0.1 * 0.5f64.powi(n)).collect();
        // remaining distance to the limit after the last increment
        let rest = 0.1 * 0.5f64.powi(5);
        assert!((extrapolation_error(&inc) - rest).abs() < 1e-15);
        assert_eq!(extrapolation_error(&[0.2, 0.2, 0.2]), 0.0);
        assert_eq!(extrapolation_error(&[0.1, 0.2, 0.4]), f64::INFINITY);
    }

    #[test]
    fn pressure_window_widens_with_the_tail() {
        let (lo, hi) = pressure_window(1.0 / 16.0, 1e-3);
        assert!((lo - (0.875f64.ln() - 1e-3)).abs() < 1e-15 && hi == 1e-3);
    }
}
