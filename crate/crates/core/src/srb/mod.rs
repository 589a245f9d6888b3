//! Orbit statistics of the SRB measure: Birkhoff averages, the Lyapunov
//! exponent and entropy formula, correlation decay along one long orbit,
//! an Ulam discretization of the transfer operator, and cylinder
//! frequencies against unstable cross-sections.
//!
//! Orbits are dithered by default. Every expanding step discards the low
//! bits of `x`, so an exact floating-point orbit of the dyadic family runs
//! out of bits within a few dozen steps and lands on the fixed point
//! `(0, 0)`. Each step therefore adds to the new `x` a uniform perturbation
//! of size [`DEFAULT_DITHER`] times the step's expansion `∂F1/∂x`, which
//! refills the discarded bits and keeps orbits typical. A perturbation of
//! fixed size leaves runs of zero bits behind steps that expand by more than
//! `2^3` and biases orbits towards small `x`. `dither = 0` gives exact orbits.

mod gibbs;
mod ulam;

pub use gibbs::{gibbs_to_csv, gibbs_vs_srb, GibbsReport, GibbsRow, GIBBS_CSV_HEADER};
pub use ulam::{ulam_decay, UlamReport};

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::map_model::{slope_transport, unstable_derivative, MapFamily, Point, Step};
use crate::numerics::{fit_geometric, fmt_f64};

/// Amplitude of the per-step perturbation of `x` per unit of expansion, `2^{-50}`.
pub const DEFAULT_DITHER: f64 = 8.881784197001252e-16;

/// Escape fraction above which an orbit carries a truncation warning.
pub const ESCAPE_WARNING_RATE: f64 = 0.01;

/// Noise floor `3 N^{-1/2}` of an empirical correlation from `N` samples.
pub fn noise_floor(samples: usize) -> f64 {
    3.0 / (samples as f64).sqrt()
}

/// Iterates `F` with dithering and seeded restarts after escapes.
struct Walker<'a> {
    fam: &'a MapFamily,
    rng: ChaCha8Rng,
    z: Point,
    dither: f64,
}

impl<'a> Walker<'a> {
    fn new(fam: &'a MapFamily, start: Point, seed: u64, dither: f64) -> Self {
        Self {
            fam,
            rng: ChaCha8Rng::seed_from_u64(seed),
            z: start,
            dither,
        }
    }

    /// Current point and its branch, then advance. `None` marks an escape.
    fn step(&mut self) -> (Point, Option<usize>) {
        let z = self.z;
        match self.fam.apply(z) {
            Step::Mapped { image, branch } => {
                let mut x = image.x;
                if self.dither > 0.0 {
                    let scale = self.fam.branch(branch).jet(z).f1x.abs();
                    x += scale * self.dither * (2.0 * self.rng.gen::<f64>() - 1.0);
                    if x < 0.0 {
                        x = -x;
                    } else if x > 1.0 {
                        x = 2.0 - x;
                    }
                }
                self.z = Point::new(x, image.y);
                (z, Some(branch))
            }
            Step::Escape => {
                self.z = Point::new(self.rng.gen(), self.rng.gen());
                (z, None)
            }
        }
    }
}

/// A point drawn uniformly from the square by `seed`.
pub fn random_start(seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    Point::new(rng.gen(), rng.gen())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub seed: u64,
    pub start: Point,
    pub length: usize,
    pub dither: f64,
    pub points: Vec<Point>,
    /// Branch of each point; 0 where the point escaped.
    pub branches: Vec<u32>,
    /// Positions of escaped points, each followed by a seeded restart.
    pub escapes: Vec<usize>,
}

impl Orbit {
    pub fn escape_rate(&self) -> f64 {
        self.escapes.len() as f64 / self.length.max(1) as f64
    }

    /// More than 1% of the steps escaped: the truncation is too small.
    pub fn truncation_warning(&self) -> bool {
        self.escape_rate() > ESCAPE_WARNING_RATE
    }

    /// Indices of points that were mapped.
    pub fn mapped(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.length).filter(|&k| self.branches[k] != 0)
    }
}

/// Dithered orbit of `length` points from `start`.
pub fn simulate(fam: &MapFamily, start: Point, length: usize, seed: u64) -> Result<Orbit> {
    simulate_with(fam, start, length, seed, DEFAULT_DITHER)
}

/// Orbit with the given dither amplitude; `0` gives `points[k+1] = F(points[k])`
/// exactly between escapes.
pub fn simulate_with(fam: &MapFamily, start: Point, length: usize, seed: u64, dither: f64) -> Result<Orbit> {
    if !start.in_square() {
        return invalid(format!("start ({}, {}) is outside the square", start.x, start.y));
    }
    if !(0.0..1e-6).contains(&dither) {
        return invalid(format!("dither must lie in [0, 1e-6), got {dither}"));
    }
    let mut w = Walker::new(fam, start, seed, dither);
    let mut points = Vec::with_capacity(length);
    let mut branches = Vec::with_capacity(length);
    let mut escapes = Vec::new();
    for k in 0..length {
        let (z, b) = w.step();
        points.push(z);
        match b {
            Some(i) => branches.push(i as u32),
            None => {
                branches.push(0);
                escapes.push(k);
            }
        }
    }
    Ok(Orbit {
        seed,
        start,
        length,
        dither,
        points,
        branches,
        escapes,
    })
}

/// A real function on the square with a Hölder bound
/// `|f(p) − f(q)| ≤ c·d(p, q)^γ` in the max norm.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    eval: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub holder_exponent: f64,
    pub holder_constant: f64,
    /// Depends on `x` only.
    pub x_only: bool,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("holder_exponent", &self.holder_exponent)
            .field("holder_constant", &self.holder_constant)
            .finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(Point) -> f64 + Send + Sync + 'static,
        holder_exponent: f64,
        holder_constant: f64,
    ) -> Result<Self> {
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return invalid(format!("Hölder exponent must lie in (0,1], got {holder_exponent}"));
        }
        if !(holder_constant >= 0.0 && holder_constant.is_finite()) {
            return invalid(format!(
                "Hölder constant must be finite and nonnegative, got {holder_constant}"
            ));
        }
        Ok(Self {
            name: name.into(),
            eval: Arc::new(eval),
            holder_exponent,
            holder_constant,
            x_only: false,
        })
    }

    /// Declares that the observable ignores `y`.
    pub fn with_x_only(mut self) -> Self {
        self.x_only = true;
        self
    }

    pub fn x() -> Self {
        Self::new("x", |z| z.x, 1.0, 1.0).unwrap().with_x_only()
    }

    pub fn y() -> Self {
        Self::new("y", |z| z.y, 1.0, 1.0).unwrap()
    }

    pub fn constant(value: f64) -> Self {
        Self::new("constant", move |_| value, 1.0, 0.0).unwrap().with_x_only()
    }

    /// `|x − 1/2|^{1/2}`, Hölder with exponent 1/2.
    pub fn sqrt_x() -> Self {
        Self::new("sqrt_x", |z| (z.x - 0.5).abs().sqrt(), 0.5, 1.0)
            .unwrap()
            .with_x_only()
    }

    /// `x`, `y`, `constant`, `sqrt_x`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "x" => Ok(Self::x()),
            "y" => Ok(Self::y()),
            "constant" => Ok(Self::constant(1.0)),
            "sqrt_x" => Ok(Self::sqrt_x()),
            other => invalid(format!("unknown observable '{other}' (x|y|constant|sqrt_x)")),
        }
    }

    pub fn eval(&self, z: Point) -> f64 {
        (self.eval)(z)
    }

    /// Largest `|f(p) − f(q)| / (c·d^γ)` over random pairs; at most 1 when
    /// the declared bound holds.
    pub fn holder_spot_check(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for k in 0..pairs {
            let p = Point::new(rng.gen(), rng.gen());
            let scale = 0.5f64.powi((k % 20) as i32);
            let q = Point::new(
                (p.x + scale * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0),
                (p.y + scale * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0),
            );
            let d = p.dist(q);
            if d == 0.0 {
                continue;
            }
            let diff = (self.eval(p) - self.eval(q)).abs();
            let bound = self.holder_constant * d.powf(self.holder_exponent);
            let r = if bound > 0.0 {
                diff / bound
            } else if diff > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(r);
        }
        worst
    }
}

/// Time average of `obs` over the mapped points of `orbit`.
pub fn birkhoff(orbit: &Orbit, obs: &Observable) -> Result<f64> {
    if orbit.length < 1000 {
        return invalid(format!(
            "Birkhoff averages need at least 1000 points, got {}",
            orbit.length
        ));
    }
    let mut acc = Accumulator::default();
    for k in orbit.mapped() {
        acc.add(obs.eval(orbit.points[k]));
    }
    Ok(acc.mean())
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    comp: f64,
    count: usize,
}

impl Accumulator {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }

    fn mean(&self) -> f64 {
        self.total() / self.count as f64
    }
}

/// Unstable slopes along `orbit`, starting from 0 and after every escape.
fn orbit_slopes(fam: &MapFamily, orbit: &Orbit) -> Result<Vec<f64>> {
    let mut slopes = Vec::with_capacity(orbit.length);
    let mut a = 0.0;
    for (z, &b) in orbit.points.iter().zip(&orbit.branches) {
        slopes.push(a);
        a = match b {
            0 => 0.0,
            i => slope_transport(&fam.branch(i as usize).jet(*z), a)?,
        };
    }
    Ok(slopes)
}

/// Lyapunov exponent from the growth of the tangent vector `(1, a_k)`:
/// the mean of `log ‖DF (1, a_k)‖∞` over mapped points.
pub fn lyapunov(fam: &MapFamily, orbit: &Orbit) -> Result<f64> {
    if orbit.length < 10_000 {
        return invalid(format!(
            "Lyapunov estimates need at least 10^4 points, got {}",
            orbit.length
        ));
    }
    let slopes = orbit_slopes(fam, orbit)?;
    let mut acc = Accumulator::default();
    for k in orbit.mapped() {
        let jet = fam.branch(orbit.branches[k] as usize).jet(orbit.points[k]);
        let v = jet.apply(crate::map_model::Vector2::new(1.0, slopes[k]));
        acc.add(v.norm().ln());
    }
    Ok(acc.mean())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyCheck {
    /// Birkhoff average of `log DᵘF`.
    pub birkhoff: f64,
    /// Tangent-vector growth rate.
    pub lyapunov: f64,
    pub residual: f64,
}

/// Both sides of the entropy formula on the same orbit.
pub fn entropy_check(fam: &MapFamily, orbit: &Orbit) -> Result<EntropyCheck> {
    let lyap = lyapunov(fam, orbit)?;
    let slopes = orbit_slopes(fam, orbit)?;
    let mut acc = Accumulator::default();
    for k in orbit.mapped() {
        let jet = fam.branch(orbit.branches[k] as usize).jet(orbit.points[k]);
        acc.add(unstable_derivative(&jet, slopes[k])?.ln());
    }
    let b = acc.mean();
    Ok(EntropyCheck {
        birkhoff: b,
        lyapunov: lyap,
        residual: (b - lyap).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMethod {
    Orbit,
    Operator,
}

impl fmt::Display for DecayMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayMethod::Orbit => "orbit",
            DecayMethod::Operator => "operator",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Fitted,
    /// One observable has zero variance, so every correlation vanishes.
    ZeroCorrelation,
    /// Fewer than two lags rise above the noise floor.
    NoiseLimited,
}

/// Correlations `C(n)` with a fit `|C(n)| ≈ c·η^n` over the lags above the
/// noise floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub lags: Vec<usize>,
    pub correlations: Vec<f64>,
    pub fitted_c: f64,
    pub fitted_eta: f64,
    pub residual: f64,
    pub floor: f64,
    pub used_lags: Vec<usize>,
    pub method: DecayMethod,
    pub status: FitStatus,
}

impl DecayFit {
    pub(crate) fn from_correlations(correlations: Vec<f64>, floor: f64, method: DecayMethod, zero: bool) -> Self {
        let lags: Vec<usize> = (0..correlations.len()).collect();
        let used: Vec<(f64, f64)> = correlations
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() >= floor)
            .map(|(n, c)| (n as f64, c.abs()))
            .collect();
        let fit = fit_geometric(&used);
        let status = match (zero, &fit) {
            (true, _) => FitStatus::ZeroCorrelation,
            (false, Some(_)) => FitStatus::Fitted,
            (false, None) => FitStatus::NoiseLimited,
        };
        let (fitted_c, fitted_eta, residual) = match (status, fit) {
            (FitStatus::Fitted, Some(f)) => (f.c, f.rate, f.residual),
            (FitStatus::ZeroCorrelation, _) => (0.0, 0.0, 0.0),
            _ => (f64::NAN, f64::NAN, f64::NAN),
        };
        Self {
            lags,
            correlations,
            fitted_c,
            fitted_eta,
            residual,
            floor,
            used_lags: used.iter().map(|p| p.0 as usize).collect(),
            method,
            status,
        }
    }

    /// Fitted with `η < 1`, or identically zero.
    pub fn passed(&self) -> bool {
        match self.status {
            FitStatus::Fitted => self.fitted_eta < 1.0,
            FitStatus::ZeroCorrelation => true,
            FitStatus::NoiseLimited => false,
        }
    }
}

pub const DECAY_CSV_HEADER: &str = "lag,correlation,fit_c,fit_eta,method";

pub fn decay_to_csv(fits: &[DecayFit]) -> String {
    let mut out = String::from(DECAY_CSV_HEADER);
    out.push('\n');
    for f in fits {
        for (&n, &c) in f.lags.iter().zip(&f.correlations) {
            out.push_str(&format!(
                "{n},{},{},{},{}\n",
                fmt_f64(c),
                fmt_f64(f.fitted_c),
                fmt_f64(f.fitted_eta),
                f.method
            ));
        }
    }
    out
}

/// Empirical `C(n) = ⟨f · g∘F^n⟩ − ⟨f⟩⟨g⟩` for `n = 0..=lags` from one
/// dithered orbit of `orbit_length` points, streamed through a ring buffer.
/// Pairs that straddle an escape are skipped.
pub fn correlation(
    fam: &MapFamily,
    obs1: &Observable,
    obs2: &Observable,
    orbit_length: usize,
    lags: usize,
    seed: u64,
) -> Result<DecayFit> {
    if orbit_length < 1000 {
        return invalid(format!("orbit length must be at least 1000, got {orbit_length}"));
    }
    if lags > 20 {
        return invalid(format!("at most 20 lags are supported, got {lags}"));
    }
    let mut w = Walker::new(fam, random_start(seed), seed, DEFAULT_DITHER);
    let ring = lags + 1;
    let mut past_f = vec![0.0; ring];
    let mut run = 0usize;
    let mut sums = vec![Accumulator::default(); ring];
    let (mut mf, mut mg, mut mff, mut mgg) = (
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
    );
    for k in 0..orbit_length {
        let (z, b) = w.step();
        if b.is_none() {
            run = 0;
            continue;
        }
        let f = obs1.eval(z);
        let g = obs2.eval(z);
        mf.add(f);
        mg.add(g);
        mff.add(f * f);
        mgg.add(g * g);
        past_f[k % ring] = f;
        run += 1;
        for n in 0..ring.min(run) {
            sums[n].add(past_f[(k + ring - n) % ring] * g);
        }
    }
    if mf.count < 2 {
        return Err(Error::InsufficientData("the orbit escaped at every step".into()));
    }
    let (ef, eg) = (mf.mean(), mg.mean());
    let zero = mff.mean() - ef * ef <= 1e-14 * mff.mean().max(1e-300)
        || mgg.mean() - eg * eg <= 1e-14 * mgg.mean().max(1e-300);
    let corr: Vec<f64> = sums
        .iter()
        .map(|s| if zero { 0.0 } else { s.mean() - ef * eg })
        .collect();
    Ok(DecayFit::from_correlations(
        corr,
        noise_floor(mf.count),
        DecayMethod::Orbit,
        zero,
    ))
}
