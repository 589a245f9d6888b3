use super::{slope_transport, BranchMap, Point, SampledGraph};
use crate::numerics::solve_monotone;

/// Crossing of a graph `y = horizontal(x)` with a graph `x = vertical(y)`.
///
/// Both slopes are bounded by α < 1, so `x − vertical(horizontal(x))` is
/// increasing and the crossing is unique.
pub fn strip_crossing(horizontal: &SampledGraph, vertical: &SampledGraph) -> Point {
    let x = solve_monotone(
        |x| {
            let y = horizontal.eval(x);
            (x - vertical.eval(y), 1.0 - vertical.slope(y) * horizontal.slope(x))
        },
        0.0,
        1.0,
    );
    Point::new(x, horizontal.eval(x))
}

/// Image under `branch` of the part of the curve `y = curve(x)` lying in the
/// branch domain, resampled on a uniform grid of `curve.len()` abscissae.
///
/// Returns the image graph and the transported tangent slopes. `slopes`
/// supplies the tangent slope field along `curve`; without it the slope of
/// the interpolant is used.
pub fn push_graph(
    branch: &BranchMap,
    curve: &SampledGraph,
    slopes: Option<&SampledGraph>,
) -> (SampledGraph, SampledGraph) {
    let dom = branch.domain();
    let xl = strip_crossing(curve, &dom.left).x;
    let xr = strip_crossing(curve, &dom.right).x;
    let n = curve.len();
    let mut ys = Vec::with_capacity(n);
    let mut ss = Vec::with_capacity(n);
    for k in 0..n {
        let target = k as f64 / (n - 1) as f64;
        let x = solve_monotone(
            |x| {
                let jet = branch.jet(Point::new(x, curve.eval(x)));
                (jet.f1 - target, jet.f1x + jet.f1y * curve.slope(x))
            },
            xl,
            xr,
        );
        let z = Point::new(x, curve.eval(x));
        let jet = branch.jet(z);
        let a = slopes.map_or_else(|| curve.slope(x), |s| s.eval(x));
        ys.push(jet.f2);
        ss.push(slope_transport(&jet, a).unwrap_or(f64::NAN));
    }
    (SampledGraph::new(ys), SampledGraph::new(ss))
}

/// Preimage under `branch` of the curve `x = curve(y)`, as a graph `x(y)`
/// inside the branch domain.
pub fn pull_graph(branch: &BranchMap, curve: &SampledGraph) -> SampledGraph {
    let dom = branch.domain();
    let n = curve.len().max(dom.left.len());
    let xs = (0..n)
        .map(|k| {
            let y = k as f64 / (n - 1) as f64;
            solve_monotone(
                |x| {
                    let jet = branch.jet(Point::new(x, y));
                    (jet.f1 - curve.eval(jet.f2), jet.f1x - curve.slope(jet.f2) * jet.f2x)
                },
                dom.left.eval(y),
                dom.right.eval(y),
            )
        })
        .collect();
    SampledGraph::new(xs)
}
