use super::{BranchMap, FullHeightRect, Jet2, MapFamily, Point, TailModel};
use crate::error::{invalid, Result};

/// Left end `1 − 2^{1−i}` of the dyadic interval `I_i`.
fn left_end(i: usize) -> f64 {
    1.0 - 2.0 * 0.5f64.powi(i as i32)
}

/// Bottom `1/2 − 2^{−i}` of the image strip `S_i`.
fn strip_base(i: usize) -> f64 {
    0.5 - 0.5f64.powi(i as i32)
}

/// The affine full-shift family on dyadic intervals:
/// `f_i(x, y) = (2^i (x − l_i), c_i + 2^{−(i+1)} y)` on `E_i = I_i × [0, 1]`,
/// with reference constants α = 0.5, K₀ = 2, C₀ = 1.
pub fn make_dyadic_family(trunc_n: usize) -> Result<MapFamily> {
    if trunc_n < 2 {
        return invalid(format!("trunc_n must be at least 2, got {trunc_n}"));
    }
    let branches = (1..=trunc_n)
        .map(|i| {
            let l = left_end(i);
            let w = 2f64.powi(i as i32);
            let c = strip_base(i);
            let h = 0.5f64.powi(i as i32 + 1);
            let domain = FullHeightRect::vertical(i, l, 1.0 - 0.5f64.powi(i as i32));
            BranchMap::analytic(
                i,
                domain,
                move |z: Point| Jet2 {
                    f1: w * (z.x - l),
                    f2: c + h * z.y,
                    f1x: w,
                    f2y: h,
                    ..Default::default()
                },
                move |p: Point| Point::new(l + p.x / w, (p.y - c) / h),
            )
            .with_constant_expansion(w)
            .with_x_factor()
        })
        .collect();
    MapFamily::new("dyadic", branches, 0.5, 2.0, 1.0, Some(TailModel::dyadic()))
}

/// How the perturbation amplitude depends on the branch index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsDecay {
    /// `ε_i = eps`
    Constant,
    /// `ε_i = eps · 2^{−i}`
    Geometric,
}

impl std::str::FromStr for EpsDecay {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "constant" => Ok(EpsDecay::Constant),
            "geometric" => Ok(EpsDecay::Geometric),
            other => Err(format!("unknown decay '{other}' (constant|geometric)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedParams {
    pub trunc_n: usize,
    pub eps: f64,
    pub decay: EpsDecay,
    pub shear: f64,
}

/// Reference K₀ of the perturbed family. Expansion on `E_1` drops to
/// `2(1 − ε(1 + shear)) ≥ 1.52` over the admissible parameter range.
pub const PERTURBED_K0: f64 = 1.5;

/// Nonlinear perturbation of the dyadic family on the same domains.
///
/// With `t = 2^i (x − l_i)`, `q = t(1 − t)` and `h_i = 2^{−(i+1)}`:
///
/// ```text
/// F1 = t + ε_i q (1 + shear·y)
/// F2 = c_i + h_i y (1 + shear·(q − 1/4))
/// ```
///
/// The bend factor in `F2` keeps `S_i` inside `[0,1] × [c_i, c_i + h_i]` with
/// the bottom edge fixed, and makes unstable slopes depend on the point, so
/// slope gaps between unstable leaves are nontrivial once `shear > 0`.
pub fn make_perturbed_family(p: PerturbedParams) -> Result<MapFamily> {
    if p.trunc_n < 2 {
        return invalid(format!("trunc_n must be at least 2, got {}", p.trunc_n));
    }
    if !(p.eps >= 0.0 && p.eps < 0.2) {
        return invalid(format!("eps must lie in [0, 0.2), got {}", p.eps));
    }
    if !(p.shear >= 0.0 && p.shear < 0.2) {
        return invalid(format!("shear must lie in [0, 0.2), got {}", p.shear));
    }
    let s = p.shear;
    let branches = (1..=p.trunc_n)
        .map(|i| {
            let l = left_end(i);
            let w = 2f64.powi(i as i32);
            let c = strip_base(i);
            let h = 0.5f64.powi(i as i32 + 1);
            let eps = match p.decay {
                EpsDecay::Constant => p.eps,
                EpsDecay::Geometric => p.eps * 0.5f64.powi(i as i32),
            };
            let domain = FullHeightRect::vertical(i, l, 1.0 - 0.5f64.powi(i as i32));
            let jet = move |z: Point| {
                let t = w * (z.x - l);
                let y = z.y;
                let q = t * (1.0 - t);
                let dq = 1.0 - 2.0 * t;
                let sy = 1.0 + s * y;
                let bend = 1.0 + s * (q - 0.25);
                Jet2 {
                    f1: t + eps * q * sy,
                    f2: c + h * y * bend,
                    f1x: w * (1.0 + eps * dq * sy),
                    f1y: eps * q * s,
                    f2x: h * s * w * dq * y,
                    f2y: h * bend,
                    f1xx: -2.0 * w * w * eps * sy,
                    f1xy: w * eps * dq * s,
                    f1yy: 0.0,
                    f2xx: -2.0 * h * s * w * w * y,
                    f2xy: h * s * w * dq,
                    f2yy: 0.0,
                }
            };
            let inverse = move |pt: Point| {
                let eta = (pt.y - c) / h;
                let mut y = eta;
                let mut t = pt.x;
                for _ in 0..100 {
                    let e = eps * (1.0 + s * y);
                    let t_new = 2.0 * pt.x / ((1.0 + e) + ((1.0 + e).powi(2) - 4.0 * e * pt.x).max(0.0).sqrt());
                    let y_new = eta / (1.0 + s * (t_new * (1.0 - t_new) - 0.25));
                    let done = (t_new - t).abs() <= 1e-17 && (y_new - y).abs() <= 1e-17;
                    t = t_new;
                    y = y_new;
                    if done {
                        break;
                    }
                }
                Point::new(l + t / w, y)
            };
            let mut b = BranchMap::analytic(i, domain, jet, inverse);
            if eps == 0.0 {
                b = b.with_constant_expansion(w);
            }
            if eps == 0.0 || s == 0.0 {
                b = b.with_x_factor();
            }
            b
        })
        .collect();
    MapFamily::new("perturbed", branches, 0.5, PERTURBED_K0, 1.0, Some(TailModel::dyadic()))
}
