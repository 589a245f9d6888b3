//! Branch maps, the almost-everywhere map `F`, and the built-in families.
//!
//! A family is a truncated, indexed collection of branches `f_i : E_i → S_i`
//! where every `E_i` is a full-height curvilinear rectangle and every `S_i` a
//! full-width strip of the unit square. Countability is handled by cutting
//! the alphabet at `trunc_n` and describing the widths beyond the cut with a
//! [`TailModel`].

mod families;
mod graph;
mod transform;

use std::sync::Arc;

use crate::error::{invalid, Error, Result};

pub use families::{make_dyadic_family, make_perturbed_family, EpsDecay, PerturbedParams};
pub use graph::{SampledGraph, GRAPH_SAMPLES};
pub use transform::{pull_graph, push_graph, strip_crossing};

/// Points closer than this to the unit square are treated as inside it.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Step used for central differences when a branch supplies its image only.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Max-norm distance.
    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn in_square(self) -> bool {
        let t = BOUNDARY_TOLERANCE;
        self.x.is_finite()
            && self.y.is_finite()
            && self.x >= -t
            && self.x <= 1.0 + t
            && self.y >= -t
            && self.y <= 1.0 + t
    }
}

/// Tangent vector; norms are max norms throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector2 {
    pub v1: f64,
    pub v2: f64,
}

impl Vector2 {
    pub const fn new(v1: f64, v2: f64) -> Self {
        Self { v1, v2 }
    }

    pub fn norm(self) -> f64 {
        self.v1.abs().max(self.v2.abs())
    }

    pub fn in_unstable_cone(self, alpha: f64, tol: f64) -> bool {
        self.v2.abs() <= alpha * self.v1.abs() + tol * self.norm()
    }

    pub fn in_stable_cone(self, alpha: f64, tol: f64) -> bool {
        self.v1.abs() <= alpha * self.v2.abs() + tol * self.norm()
    }
}

/// Image and first/second partial derivatives of a branch at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub f1: f64,
    pub f2: f64,
    pub f1x: f64,
    pub f1y: f64,
    pub f2x: f64,
    pub f2y: f64,
    pub f1xx: f64,
    pub f1xy: f64,
    pub f1yy: f64,
    pub f2xx: f64,
    pub f2xy: f64,
    pub f2yy: f64,
}

impl Jet2 {
    pub fn image(&self) -> Point {
        Point::new(self.f1, self.f2)
    }

    /// `|F1x·F2y − F1y·F2x|`.
    pub fn jacobian(&self) -> f64 {
        (self.f1x * self.f2y - self.f1y * self.f2x).abs()
    }

    /// Largest second partial in absolute value.
    pub fn d2_max(&self) -> f64 {
        [self.f1xx, self.f1xy, self.f1yy, self.f2xx, self.f2xy, self.f2yy]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn apply(&self, v: Vector2) -> Vector2 {
        Vector2::new(self.f1x * v.v1 + self.f1y * v.v2, self.f2x * v.v1 + self.f2y * v.v2)
    }

    pub fn apply_inverse(&self, v: Vector2) -> Vector2 {
        let det = self.f1x * self.f2y - self.f1y * self.f2x;
        Vector2::new(
            (self.f2y * v.v1 - self.f1y * v.v2) / det,
            (-self.f2x * v.v1 + self.f1x * v.v2) / det,
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.f1, self.f2, self.f1x, self.f1y, self.f2x, self.f2y, self.f1xx, self.f1xy, self.f1yy, self.f2xx,
            self.f2xy, self.f2yy,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Central-difference jet of an image map.
    pub fn from_image(image: &dyn Fn(Point) -> Point, z: Point) -> Jet2 {
        let h = FD_STEP;
        let c = image(z);
        let xp = image(Point::new(z.x + h, z.y));
        let xm = image(Point::new(z.x - h, z.y));
        let yp = image(Point::new(z.x, z.y + h));
        let ym = image(Point::new(z.x, z.y - h));
        let pp = image(Point::new(z.x + h, z.y + h));
        let pm = image(Point::new(z.x + h, z.y - h));
        let mp = image(Point::new(z.x - h, z.y + h));
        let mm = image(Point::new(z.x - h, z.y - h));
        let d1 = |p: f64, m: f64| (p - m) / (2.0 * h);
        let d2 = |p: f64, c: f64, m: f64| (p - 2.0 * c + m) / (h * h);
        let dxy = |pp: f64, pm: f64, mp: f64, mm: f64| (pp - pm - mp + mm) / (4.0 * h * h);
        Jet2 {
            f1: c.x,
            f2: c.y,
            f1x: d1(xp.x, xm.x),
            f1y: d1(yp.x, ym.x),
            f2x: d1(xp.y, xm.y),
            f2y: d1(yp.y, ym.y),
            f1xx: d2(xp.x, c.x, xm.x),
            f1xy: dxy(pp.x, pm.x, mp.x, mm.x),
            f1yy: d2(yp.x, c.x, ym.x),
            f2xx: d2(xp.y, c.y, xm.y),
            f2xy: dxy(pp.y, pm.y, mp.y, mm.y),
            f2yy: d2(yp.y, c.y, ym.y),
        }
    }
}

/// A full-height curvilinear rectangle bounded left and right by graphs `x(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullHeightRect {
    pub index: usize,
    pub left: SampledGraph,
    pub right: SampledGraph,
}

impl FullHeightRect {
    pub fn vertical(index: usize, left: f64, right: f64) -> Self {
        Self {
            index,
            left: SampledGraph::constant(left, GRAPH_SAMPLES),
            right: SampledGraph::constant(right, GRAPH_SAMPLES),
        }
    }

    /// The z-width `δ_z`: length of the horizontal section at height `y`.
    pub fn width_at(&self, y: f64) -> f64 {
        self.right.eval(y) - self.left.eval(y)
    }

    fn section_widths(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.left.len().max(self.right.len());
        (0..n).map(move |k| self.width_at(k as f64 / (n - 1) as f64))
    }

    pub fn max_width(&self) -> f64 {
        self.section_widths().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_width(&self) -> f64 {
        self.section_widths().fold(f64::INFINITY, f64::min)
    }

    pub fn contains_interior(&self, z: Point) -> bool {
        z.x > self.left.eval(z.y) && z.x < self.right.eval(z.y)
    }

    /// Point at relative position `s ∈ [0, 1]` across the section at height `y`.
    pub fn point_at(&self, s: f64, y: f64) -> Point {
        let l = self.left.eval(y);
        Point::new(l + s * (self.right.eval(y) - l), y)
    }
}

/// A full-width strip bounded below and above by graphs `y(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullWidthStrip {
    pub bottom: SampledGraph,
    pub top: SampledGraph,
}

impl FullWidthStrip {
    pub fn height_at(&self, x: f64) -> f64 {
        self.top.eval(x) - self.bottom.eval(x)
    }

    pub fn max_height(&self) -> f64 {
        let n = self.bottom.len().max(self.top.len());
        (0..n)
            .map(|k| self.height_at(k as f64 / (n - 1) as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub type JetFn = Arc<dyn Fn(Point) -> Jet2 + Send + Sync>;
pub type PointFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Analytic(JetFn),
    ImageOnly(PointFn),
}

/// One branch `f_i` together with its domain and inverse.
#[derive(Clone)]
pub struct BranchMap {
    index: usize,
    domain: FullHeightRect,
    eval: Evaluator,
    inverse: PointFn,
    constant_expansion: Option<f64>,
    x_factor: bool,
}

impl std::fmt::Debug for BranchMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BranchMap")
            .field("index", &self.index)
            .field("analytic", &self.has_analytic_jets())
            .field("constant_expansion", &self.constant_expansion)
            .finish()
    }
}

impl BranchMap {
    /// Branch with analytic first and second partials.
    pub fn analytic(
        index: usize,
        domain: FullHeightRect,
        jet: impl Fn(Point) -> Jet2 + Send + Sync + 'static,
        inverse: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self {
            index,
            domain,
            eval: Evaluator::Analytic(Arc::new(jet)),
            inverse: Arc::new(inverse),
            constant_expansion: None,
            x_factor: false,
        }
    }

    /// Branch that supplies its image only; partials are synthesized by
    /// central differences and condition reports flag them as approximate.
    pub fn image_only(
        index: usize,
        domain: FullHeightRect,
        image: impl Fn(Point) -> Point + Send + Sync + 'static,
        inverse: impl Fn(Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        Self {
            index,
            domain,
            eval: Evaluator::ImageOnly(Arc::new(image)),
            inverse: Arc::new(inverse),
            constant_expansion: None,
            x_factor: false,
        }
    }

    /// Declares that `|DᵘF|` is the constant `value` on the whole branch
    /// (affine first coordinate independent of `y`).
    pub fn with_constant_expansion(mut self, value: f64) -> Self {
        self.constant_expansion = Some(value);
        self
    }

    /// Declares that the first coordinate does not depend on `y`.
    pub fn with_x_factor(mut self) -> Self {
        self.x_factor = true;
        self
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn domain(&self) -> &FullHeightRect {
        &self.domain
    }

    pub fn has_analytic_jets(&self) -> bool {
        matches!(self.eval, Evaluator::Analytic(_))
    }

    pub fn constant_expansion(&self) -> Option<f64> {
        self.constant_expansion
    }

    pub fn is_x_factor(&self) -> bool {
        self.x_factor
    }

    pub fn jet(&self, z: Point) -> Jet2 {
        match &self.eval {
            Evaluator::Analytic(f) => f(z),
            Evaluator::ImageOnly(f) => Jet2::from_image(f.as_ref(), z),
        }
    }

    pub fn image(&self, z: Point) -> Point {
        match &self.eval {
            Evaluator::Analytic(f) => f(z).image(),
            Evaluator::ImageOnly(f) => f(z),
        }
    }

    pub fn inverse(&self, w: Point) -> Point {
        (self.inverse)(w)
    }

    /// The image strip `S_i = f_i(E_i)`.
    pub fn image_strip(&self) -> FullWidthStrip {
        let bottom = push_graph(self, &SampledGraph::constant(0.0, GRAPH_SAMPLES), None).0;
        let top = push_graph(self, &SampledGraph::constant(1.0, GRAPH_SAMPLES), None).0;
        FullWidthStrip { bottom, top }
    }
}

/// Branch widths beyond the truncation index, used for tail sums.
#[derive(Clone)]
pub struct TailModel {
    width_max: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    log_width_min: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for TailModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TailModel")
    }
}

impl TailModel {
    /// `width_max(i) = δ_{i,max}` and `log_width_min(i) = log δ_{i,min}`.
    pub fn new(
        width_max: impl Fn(usize) -> f64 + Send + Sync + 'static,
        log_width_min: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            width_max: Arc::new(width_max),
            log_width_min: Arc::new(log_width_min),
        }
    }

    /// Widths `δ_i = 2^{-i}`.
    pub fn dyadic() -> Self {
        Self::new(|i| 0.5f64.powi(i as i32), |i| -(i as f64) * std::f64::consts::LN_2)
    }

    pub fn width_max(&self, i: usize) -> f64 {
        (self.width_max)(i)
    }

    pub fn log_width_min(&self, i: usize) -> f64 {
        (self.log_width_min)(i)
    }
}

/// Result of one application of `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Mapped {
        image: Point,
        branch: usize,
    },
    /// The point is on a domain boundary or beyond the truncated alphabet.
    Escape,
}

/// A truncated countable family of branches with its hyperbolicity and
/// distortion constants.
#[derive(Debug, Clone)]
pub struct MapFamily {
    name: String,
    branches: Vec<BranchMap>,
    order: Vec<usize>,
    alpha: f64,
    k0: f64,
    c0: f64,
    tail: Option<TailModel>,
}

impl MapFamily {
    pub fn new(
        name: impl Into<String>,
        branches: Vec<BranchMap>,
        alpha: f64,
        k0: f64,
        c0: f64,
        tail: Option<TailModel>,
    ) -> Result<Self> {
        if branches.is_empty() {
            return invalid("a family needs at least one branch");
        }
        for (k, b) in branches.iter().enumerate() {
            if b.index != k + 1 {
                return invalid(format!("branch at position {k} has index {}", b.index));
            }
        }
        let mut fam = Self {
            name: name.into(),
            branches,
            order: Vec::new(),
            alpha: 0.5,
            k0: 2.0,
            c0: 1.0,
            tail,
        };
        fam.set_parameters(alpha, k0, c0)?;
        let mut order: Vec<usize> = (0..fam.branches.len()).collect();
        order.sort_by(|&a, &b| {
            let la = fam.branches[a].domain.left.eval(0.5);
            let lb = fam.branches[b].domain.left.eval(0.5);
            la.total_cmp(&lb)
        });
        fam.order = order;
        Ok(fam)
    }

    fn set_parameters(&mut self, alpha: f64, k0: f64, c0: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("alpha must lie in (0,1), got {alpha}"));
        }
        if !(k0 > 1.0 && k0.is_finite()) {
            return invalid(format!("K0 must exceed 1, got {k0}"));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return invalid(format!("C0 must be positive, got {c0}"));
        }
        self.alpha = alpha;
        self.k0 = k0;
        self.c0 = c0;
        Ok(())
    }

    /// Same branches with different reference constants.
    pub fn with_parameters(&self, alpha: f64, k0: f64, c0: f64) -> Result<Self> {
        let mut fam = self.clone();
        fam.set_parameters(alpha, k0, c0)?;
        Ok(fam)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn trunc_n(&self) -> usize {
        self.branches.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn tail(&self) -> Option<&TailModel> {
        self.tail.as_ref()
    }

    pub fn branches(&self) -> &[BranchMap] {
        &self.branches
    }

    /// Branch `i` (1-based).
    pub fn branch(&self, i: usize) -> &BranchMap {
        &self.branches[i - 1]
    }

    pub fn check_symbol(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.trunc_n() {
            invalid(format!("symbol {i} outside 1..={}", self.trunc_n()))
        } else {
            Ok(())
        }
    }

    pub fn all_analytic(&self) -> bool {
        self.branches.iter().all(|b| b.has_analytic_jets())
    }

    /// True when every branch declares a constant unstable derivative.
    pub fn has_constant_expansions(&self) -> bool {
        self.branches.iter().all(|b| b.constant_expansion.is_some())
    }

    /// True when the first coordinate of every branch ignores `y`.
    pub fn is_x_factor(&self) -> bool {
        self.branches.iter().all(|b| b.x_factor)
    }

    /// Index `i` such that `z` lies strictly inside `E_i`.
    ///
    /// Boundaries shared by two domains, or facing the gap beyond the
    /// truncation, belong to no branch. A domain side lying on the edge of
    /// the square is shared with nothing and counts as part of the domain.
    pub fn locate_branch(&self, z: Point) -> Option<usize> {
        let pp = self
            .order
            .partition_point(|&k| self.branches[k].domain.left.eval(z.y) <= z.x);
        if pp == 0 {
            return None;
        }
        let k = self.order[pp - 1];
        let dom = &self.branches[k].domain;
        let on_outer_edge = z.x == dom.left.eval(z.y) && z.x <= 0.0 || z.x == dom.right.eval(z.y) && z.x >= 1.0;
        if dom.contains_interior(z) || on_outer_edge && z.y >= 0.0 && z.y <= 1.0 {
            Some(k + 1)
        } else {
            None
        }
    }

    /// `F(z) = f_i(z)` for `z ∈ int E_i`.
    pub fn apply(&self, z: Point) -> Step {
        match self.locate_branch(z) {
            Some(i) => Step::Mapped {
                image: self.branch(i).image(z),
                branch: i,
            },
            None => Step::Escape,
        }
    }
}

/// `|DᵘF| = |F1x + a·F1y|` for the unstable direction `(1, a)`.
pub fn unstable_derivative(jet: &Jet2, a: f64) -> Result<f64> {
    let v = (jet.f1x + a * jet.f1y).abs();
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::HyperbolicityViolation { value: v })
    }
}

/// Slope of `DF·(1, a)` after normalizing its first coordinate.
pub fn slope_transport(jet: &Jet2, a: f64) -> Result<f64> {
    let denom = 1.0 + jet.f1y / jet.f1x * a;
    if denom.abs() <= 1e-14 || !denom.is_finite() {
        return Err(Error::ConeViolation { denominator: denom });
    }
    Ok((jet.f2x / jet.f1x + jet.f2y / jet.f1x * a) / denom)
}
