/// Number of samples used for boundary graphs unless stated otherwise.
pub const GRAPH_SAMPLES: usize = 257;

/// A function on `[0, 1]` sampled on a uniform grid, evaluated by linear
/// interpolation. Used both for `x(y)` boundaries of full-height rectangles
/// and for `y(x)` boundaries of full-width strips.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    values: Vec<f64>,
}

impl SampledGraph {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "a sampled graph needs at least two samples");
        Self { values }
    }

    pub fn constant(value: f64, samples: usize) -> Self {
        Self::new(vec![value; samples])
    }

    pub fn from_fn(samples: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = 1.0 / (samples - 1) as f64;
        Self::new((0..samples).map(|k| f(k as f64 * h)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    /// Abscissa of grid sample `k`.
    pub fn abscissa(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    fn cell(&self, t: f64) -> (usize, f64) {
        let n = self.values.len() - 1;
        let s = t.clamp(0.0, 1.0) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        (k, s - k as f64)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (k, w) = self.cell(t);
        let v0 = self.values[k];
        let v1 = self.values[k + 1];
        if v0 == v1 {
            v0
        } else {
            v0 + w * (v1 - v0)
        }
    }

    /// Slope of the interpolant on the cell containing `t`.
    pub fn slope(&self, t: f64) -> f64 {
        let (k, _) = self.cell(t);
        (self.values[k + 1] - self.values[k]) / self.spacing()
    }

    pub fn max_abs_slope(&self) -> f64 {
        let h = self.spacing();
        self.values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / h).abs())
            .fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Largest pointwise distance to another graph on a common refinement.
    pub fn sup_distance(&self, other: &SampledGraph) -> f64 {
        let n = self.len().max(other.len());
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                (self.eval(t) - other.eval(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise mean of two graphs on the finer of the two grids.
    pub fn midline(&self, other: &SampledGraph) -> SampledGraph {
        let n = self.len().max(other.len());
        SampledGraph::from_fn(n, |t| 0.5 * (self.eval(t) + other.eval(t)))
    }
}
