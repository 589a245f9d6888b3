//! Symbolic dynamics over the truncated alphabet: itineraries, cylinders
//! `E_{i0…i(n-1)}`, strips `S_{i(-m)…i(-1)}`, mixed rectangles and the
//! transition-structure predicates.

use std::collections::HashMap;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::map_model::{pull_graph, push_graph, strip_crossing, MapFamily, Point, SampledGraph, Step, GRAPH_SAMPLES};
use crate::numerics::fmt_f64;

/// A finite block of branch indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: impl Into<Vec<usize>>) -> Self {
        Word(symbols.into())
    }

    /// `symbol` repeated `n` times.
    pub fn constant(symbol: usize, n: usize) -> Self {
        Word(vec![symbol; n])
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// `symbol · self`.
    pub fn prepend(&self, symbol: usize) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(symbol);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// `self · symbol`.
    pub fn append(&self, symbol: usize) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    /// The word with its first symbol removed.
    pub fn shift(&self) -> Word {
        Word(self.0.get(1..).unwrap_or_default().to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The last `n` symbols (or all of them).
    pub fn suffix(&self, n: usize) -> Word {
        Word(self.0[self.len().saturating_sub(n)..].to_vec())
    }

    pub fn validate(&self, fam: &MapFamily) -> Result<()> {
        self.0.iter().try_for_each(|&s| fam.check_symbol(s))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    /// Parses `"1-2-3"`; the empty string is the empty word.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(Word::default());
        }
        s.split('-')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(Error::InvalidArgument(format!("bad symbol '{t}' in word '{s}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// Every word of length `n` over the symbols `1..=k`, in lexicographic order.
pub fn all_words(k: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Word::default()];
    for _ in 0..n {
        out = out.iter().flat_map(|w| (1..=k).map(move |s| w.append(s))).collect();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Itinerary {
    pub word: Word,
    /// Position at which the orbit left the interiors of the domains.
    pub escape_at: Option<usize>,
}

/// Symbols of the first `n` iterates of `z`, stopping at an escape.
pub fn itinerary(fam: &MapFamily, z: Point, n: usize) -> Result<Itinerary> {
    if n == 0 {
        return invalid("itinerary length must be positive");
    }
    if !z.in_square() {
        return invalid(format!("({}, {}) is outside the unit square", z.x, z.y));
    }
    let mut word = Vec::with_capacity(n);
    let mut p = z;
    for k in 0..n {
        match fam.apply(p) {
            Step::Mapped { image, branch } => {
                word.push(branch);
                p = image;
            }
            Step::Escape => {
                return Ok(Itinerary {
                    word: Word(word),
                    escape_at: Some(k),
                });
            }
        }
    }
    Ok(Itinerary {
        word: Word(word),
        escape_at: None,
    })
}

/// The full-height cylinder `E_w`, bounded left and right by graphs `x(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderRect {
    pub word: Word,
    pub left: SampledGraph,
    pub right: SampledGraph,
}

impl CylinderRect {
    pub fn width_at(&self, y: f64) -> f64 {
        self.right.eval(y) - self.left.eval(y)
    }

    pub fn max_width(&self) -> f64 {
        sample_max(self.left.len(), |y| self.width_at(y))
    }

    pub fn min_width(&self) -> f64 {
        -sample_max(self.left.len(), |y| -self.width_at(y))
    }

    pub fn contains(&self, z: Point) -> bool {
        z.x > self.left.eval(z.y) && z.x < self.right.eval(z.y)
    }

    /// The curve halfway between the two boundaries.
    pub fn midline(&self) -> SampledGraph {
        self.left.midline(&self.right)
    }
}

fn sample_max(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    (0..n)
        .map(|k| f(k as f64 / (n - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `E_{i·w} = E_i ∩ f_i⁻¹(E_w)`, given the cylinder of `w`.
pub fn extend_cylinder(fam: &MapFamily, symbol: usize, tail: &CylinderRect) -> Result<CylinderRect> {
    fam.check_symbol(symbol)?;
    let b = fam.branch(symbol);
    let left = pull_graph(b, &tail.left);
    let right = pull_graph(b, &tail.right);
    let word = tail.word.prepend(symbol);
    let n = left.len();
    let empty = (0..n).any(|k| {
        let y = left.abscissa(k);
        right.eval(y) <= left.eval(y)
    });
    if empty {
        return Err(Error::EmptyIntersection(format!("cylinder {word} has no interior")));
    }
    Ok(CylinderRect { word, left, right })
}

/// The cylinder `E_w`, built by pulling back the boundaries of the domain of
/// the last symbol through the inverse branches.
pub fn build_cylinder(fam: &MapFamily, word: &Word) -> Result<CylinderRect> {
    if word.is_empty() {
        return invalid("cylinder word must be nonempty");
    }
    word.validate(fam)?;
    let syms = word.symbols();
    let last = *syms.last().unwrap();
    let dom = fam.branch(last).domain();
    let mut cyl = CylinderRect {
        word: Word(vec![last]),
        left: dom.left.clone(),
        right: dom.right.clone(),
    };
    for &s in syms[..syms.len() - 1].iter().rev() {
        cyl = extend_cylinder(fam, s, &cyl)?;
    }
    Ok(cyl)
}

/// Cylinders of every word of length `1..=n` over the symbols `1..=k`, built
/// by suffix so that each pull-back is done once. Returned by length.
pub fn cylinder_tree(fam: &MapFamily, k: usize, n: usize) -> Result<Vec<Vec<CylinderRect>>> {
    use rayon::prelude::*;
    if k > fam.trunc_n() {
        return invalid(format!("alphabet {k} exceeds truncation {}", fam.trunc_n()));
    }
    let mut levels: Vec<Vec<CylinderRect>> = Vec::with_capacity(n);
    let base: Vec<CylinderRect> = (1..=k)
        .map(|i| build_cylinder(fam, &Word(vec![i])))
        .collect::<Result<_>>()?;
    levels.push(base);
    for _ in 1..n {
        let prev = levels.last().unwrap();
        let next: Vec<CylinderRect> = (1..=k)
            .into_par_iter()
            .flat_map_iter(|s| prev.iter().map(move |c| extend_cylinder(fam, s, c)))
            .collect::<Result<_>>()?;
        levels.push(next);
    }
    Ok(levels)
}

/// The full-width strip `S_w`, bounded below and above by graphs `y(X)`.
/// The empty word gives the whole square.
#[derive(Debug, Clone, PartialEq)]
pub struct StripRect {
    pub word: Word,
    pub bottom: SampledGraph,
    pub top: SampledGraph,
}

impl StripRect {
    pub fn whole_square() -> Self {
        StripRect {
            word: Word::default(),
            bottom: SampledGraph::constant(0.0, GRAPH_SAMPLES),
            top: SampledGraph::constant(1.0, GRAPH_SAMPLES),
        }
    }

    pub fn height_at(&self, x: f64) -> f64 {
        self.top.eval(x) - self.bottom.eval(x)
    }

    pub fn max_height(&self) -> f64 {
        sample_max(self.bottom.len(), |x| self.height_at(x))
    }

    pub fn contains(&self, z: Point) -> bool {
        z.y > self.bottom.eval(z.x) && z.y < self.top.eval(z.x)
    }
}

/// `S_{i(-m)…i(-1)}`: the image strip of `i(-m)` pushed forward through the
/// remaining symbols in order.
pub fn build_strip(fam: &MapFamily, word: &Word) -> Result<StripRect> {
    word.validate(fam)?;
    let mut strip = StripRect::whole_square();
    for &s in word.symbols() {
        let b = fam.branch(s);
        strip = StripRect {
            word: strip.word.append(s),
            bottom: push_graph(b, &strip.bottom, None).0,
            top: push_graph(b, &strip.top, None).0,
        };
    }
    Ok(strip)
}

/// `R = S_neg ∩ E_pos`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRect {
    pub strip: StripRect,
    pub cylinder: CylinderRect,
}

impl MixedRect {
    pub fn neg_word(&self) -> &Word {
        &self.strip.word
    }

    pub fn pos_word(&self) -> &Word {
        &self.cylinder.word
    }

    /// Corners `[bottom-left, bottom-right, top-left, top-right]`.
    pub fn corners(&self) -> [Point; 4] {
        let s = &self.strip;
        let c = &self.cylinder;
        [
            strip_crossing(&s.bottom, &c.left),
            strip_crossing(&s.bottom, &c.right),
            strip_crossing(&s.top, &c.left),
            strip_crossing(&s.top, &c.right),
        ]
    }

    /// Horizontal and vertical extent of the boundary arcs.
    pub fn extents(&self) -> (f64, f64) {
        let [bl, br, tl, tr] = self.corners();
        let n = GRAPH_SAMPLES;
        let arc = |g: &SampledGraph, a: f64, b: f64, max: bool| {
            (0..n).map(|k| g.eval(a + (b - a) * k as f64 / (n - 1) as f64)).fold(
                if max { f64::NEG_INFINITY } else { f64::INFINITY },
                |m, v| {
                    if max {
                        m.max(v)
                    } else {
                        m.min(v)
                    }
                },
            )
        };
        let x_max = arc(&self.cylinder.right, br.y, tr.y, true);
        let x_min = arc(&self.cylinder.left, bl.y, tl.y, false);
        let y_max = arc(&self.strip.top, tl.x, tr.x, true);
        let y_min = arc(&self.strip.bottom, bl.x, br.x, false);
        (x_max - x_min, y_max - y_min)
    }

    /// Max-norm diameter.
    pub fn diameter(&self) -> f64 {
        let (dx, dy) = self.extents();
        dx.max(dy)
    }

    pub fn contains(&self, z: Point) -> bool {
        self.strip.contains(z) && self.cylinder.contains(z)
    }
}

pub fn build_mixed(fam: &MapFamily, neg: &Word, pos: &Word) -> Result<MixedRect> {
    Ok(MixedRect {
        strip: build_strip(fam, neg)?,
        cylinder: build_cylinder(fam, pos)?,
    })
}

/// 0/1 transition matrix over the truncated alphabet, with the common row of
/// all symbols beyond the cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionStructure {
    rows: Vec<Vec<bool>>,
    tail_row: Option<Vec<bool>>,
}

impl TransitionStructure {
    pub fn new(rows: Vec<Vec<bool>>, tail_row: Option<Vec<bool>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return invalid("transition matrix must be nonempty");
        }
        if rows.iter().chain(tail_row.iter()).any(|r| r.len() != n) {
            return invalid("transition matrix must be square");
        }
        Ok(Self { rows, tail_row })
    }

    pub fn from_01(rows: &[&[u8]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&v| v != 0).collect()).collect(), None)
    }

    /// The full shift on `n` symbols, whose tail symbols also go everywhere.
    pub fn full_shift(n: usize) -> Self {
        Self {
            rows: vec![vec![true; n]; n],
            tail_row: Some(vec![true; n]),
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.rows[i - 1][j - 1]
    }

    pub fn is_admissible(&self, w: &Word) -> bool {
        let n = self.size();
        w.symbols().iter().all(|&s| s >= 1 && s <= n) && w.symbols().windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    fn step(&self, set: &[bool]) -> Vec<bool> {
        let mut out = vec![false; self.size()];
        for (i, _) in set.iter().enumerate().filter(|(_, &on)| on) {
            for (j, o) in out.iter_mut().enumerate() {
                *o |= self.rows[i][j];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixingResult {
    pub mixing: bool,
    /// Least `n ≥ |C1|` from which `C1 ∩ T⁻ⁿ C2 ≠ ∅` for every later `n`.
    pub first: Option<usize>,
}

/// Decides whether `C1 ∩ T⁻ⁿ C2` is nonempty for all `n` from some point on,
/// with `C2` placed after `C1` (`n ≥ |C1|`).
///
/// The sets of symbols reachable in exactly `k` steps form an eventually
/// periodic sequence, so the answer is exact once a set repeats. It is
/// `true` only if the stable run starts no later than `horizon`.
pub fn check_topological_mixing(
    ts: &TransitionStructure,
    c1: &Word,
    c2: &Word,
    horizon: usize,
) -> Result<MixingResult> {
    if horizon == 0 {
        return invalid("horizon must be at least 1");
    }
    if c1.is_empty() || c2.is_empty() {
        return invalid("mixing words must be nonempty");
    }
    let no = MixingResult {
        mixing: false,
        first: None,
    };
    if !ts.is_admissible(c1) || !ts.is_admissible(c2) {
        return Ok(no);
    }
    let target = c2.first().unwrap() - 1;
    let mut set = vec![false; ts.size()];
    set[c1.last().unwrap() - 1] = true;
    // hits[k - 1] records whether the target is reachable in exactly k steps
    let mut hits = Vec::new();
    let mut seen: HashMap<Vec<bool>, usize> = HashMap::new();
    let cycle_start = loop {
        set = ts.step(&set);
        if let Some(&k) = seen.get(&set) {
            break k;
        }
        seen.insert(set.clone(), hits.len());
        hits.push(set[target]);
    };
    if !hits[cycle_start..].iter().all(|&h| h) {
        return Ok(no);
    }
    let stable_from = hits.iter().rposition(|&h| !h).map_or(0, |p| p + 1);
    // k steps from the last symbol of C1 place C2 at n = |C1| + k − 1
    let first = c1.len() + stable_from;
    Ok(MixingResult {
        mixing: first <= horizon,
        first: Some(first),
    })
}

/// Mixing of the whole matrix: every ordered pair of symbols is connected.
pub fn is_topologically_mixing(ts: &TransitionStructure, horizon: usize) -> Result<bool> {
    let n = ts.size();
    for i in 1..=n {
        for j in 1..=n {
            if !check_topological_mixing(ts, &Word(vec![i]), &Word(vec![j]), horizon)?.mixing {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Number of distinct rows, counting the tail-row class.
pub fn check_finitely_many_images(ts: &TransitionStructure) -> usize {
    let mut rows: Vec<&Vec<bool>> = ts.rows.iter().chain(ts.tail_row.iter()).collect();
    rows.sort();
    rows.dedup();
    rows.len()
}

/// Largest mismatch between `f_i(∂E_{i·w})` and `∂E_w`, sampled along both
/// boundary graphs of `E_{i·w}`.
pub fn markov_refinement_defect(fam: &MapFamily, parent: &CylinderRect, child: &CylinderRect) -> f64 {
    let i = parent.word.first().expect("nonempty word");
    let b = fam.branch(i);
    let n = parent.left.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let y = parent.left.abscissa(k);
        for (pg, cg) in [(&parent.left, &child.left), (&parent.right, &child.right)] {
            let img = b.image(Point::new(pg.eval(y), y));
            worst = worst.max((img.x - cg.eval(img.y)).abs());
        }
    }
    worst
}

/// Largest amount by which `inner` sticks out of `outer`; zero when nested.
pub fn nesting_defect(outer: &CylinderRect, inner: &CylinderRect) -> f64 {
    let n = outer.left.len().max(inner.left.len());
    (0..n)
        .map(|k| {
            let y = k as f64 / (n - 1) as f64;
            let l = outer.left.eval(y) - inner.left.eval(y);
            let r = inner.right.eval(y) - outer.right.eval(y);
            l.max(r).max(0.0)
        })
        .fold(0.0, f64::max)
}

pub const GEOMETRY_CSV_HEADER: &str = "kind,word,grid_index,coord";

fn graph_rows(out: &mut String, kind: &str, word: &Word, g: &SampledGraph) {
    for (k, v) in g.values().iter().enumerate() {
        out.push_str(&format!("{kind},{word},{k},{}\n", fmt_f64(*v)));
    }
}

pub fn cylinders_to_csv(cylinders: &[CylinderRect], strips: &[StripRect]) -> String {
    let mut out = String::from(GEOMETRY_CSV_HEADER);
    out.push('\n');
    for c in cylinders {
        graph_rows(&mut out, "cylinder_left", &c.word, &c.left);
        graph_rows(&mut out, "cylinder_right", &c.word, &c.right);
    }
    for s in strips {
        graph_rows(&mut out, "strip_bottom", &s.word, &s.bottom);
        graph_rows(&mut out, "strip_top", &s.word, &s.top);
    }
    out
}
