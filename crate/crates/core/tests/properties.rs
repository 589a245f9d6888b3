use proptest::prelude::*;

use hypershift::conditions::{check_distortion, check_geometric, check_hyperbolicity};
use hypershift::manifolds::{crossing, stable_curve, unstable_curve};
use hypershift::map_model::{
    make_dyadic_family, make_perturbed_family, slope_transport, unstable_derivative, EpsDecay, Jet2, MapFamily,
    PerturbedParams, Point,
};
use hypershift::srb::{birkhoff, correlation, random_start, simulate, ulam_decay, FitStatus, Observable, Orbit};
use hypershift::symbolic::{build_cylinder, build_mixed, markov_refinement_defect, nesting_defect, Word};
use hypershift::thermo::{coboundary_defect, gibbs_length_ratios, partition_sum, pressure, PotentialContext};

fn perturbed(trunc_n: usize, eps: f64, decay: EpsDecay, shear: f64) -> MapFamily {
    make_perturbed_family(PerturbedParams {
        trunc_n,
        eps,
        decay,
        shear,
    })
    .unwrap()
}

fn family() -> impl Strategy<Value = MapFamily> {
    prop_oneof![
        Just(make_dyadic_family(20).unwrap()),
        (0.0..0.15f64, 0.0..0.15f64).prop_map(|(e, s)| perturbed(20, e, EpsDecay::Geometric, s)),
        (0.0..0.1f64, 0.0..0.15f64).prop_map(|(e, s)| perturbed(20, e, EpsDecay::Constant, s)),
    ]
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=6usize, 1..=max_len).prop_map(Word::new)
}

fn interior(fam: &MapFamily, i: usize, s: f64, y: f64) -> Point {
    fam.branch(i).domain().point_at(s, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_undoes_each_branch(fam in family(), i in 1..=20usize, s in 0.0..1.0f64, y in 0.0..=1.0f64) {
        let z = interior(&fam, i, s, y);
        let back = fam.branch(i).inverse(fam.branch(i).image(z));
        prop_assert!(back.dist(z) <= 1e-10, "{z:?} -> {back:?}");
    }

    #[test]
    fn analytic_jets_match_central_differences(fam in family(), i in 1..=4usize, s in 0.02..0.98f64, y in 0.02..0.98f64) {
        let b = fam.branch(i);
        let z = interior(&fam, i, s, y);
        let a = b.jet(z);
        let fd = Jet2::from_image(&|p| b.image(p), z);
        let w2 = 4f64.powi(i as i32);
        for (x, f) in [(a.f1x, fd.f1x), (a.f1y, fd.f1y), (a.f2x, fd.f2x), (a.f2y, fd.f2y)] {
            prop_assert!((x - f).abs() <= 1e-5 * x.abs().max(1.0), "{x} vs {f}");
        }
        for (x, f) in [(a.f1xx, fd.f1xx), (a.f1xy, fd.f1xy), (a.f1yy, fd.f1yy), (a.f2xx, fd.f2xx), (a.f2xy, fd.f2xy), (a.f2yy, fd.f2yy)] {
            prop_assert!((x - f).abs() <= 1e-5 * (x.abs() + w2), "{x} vs {f}");
        }
    }

    #[test]
    fn dyadic_domains_tile_up_to_the_truncation(n in 2..=40usize) {
        let fam = make_dyadic_family(n).unwrap();
        let total: f64 = fam.branches().iter().map(|b| b.domain().max_width()).sum();
        prop_assert!(total >= 1.0 - 0.5f64.powi(n as i32) - 1e-15);
    }

    #[test]
    fn transported_slopes_stay_in_the_cone(
        fam in family(),
        a0 in -0.5..=0.5f64,
        path in prop::collection::vec((1..=20usize, 0.0..1.0f64, 0.0..=1.0f64), 1..12),
    ) {
        let alpha = fam.alpha();
        let mut a = a0;
        for (i, s, y) in path {
            let jet = fam.branch(i).jet(interior(&fam, i, s, y));
            prop_assert!(unstable_derivative(&jet, a).unwrap() >= fam.k0() - 1e-12);
            a = slope_transport(&jet, a).unwrap();
            prop_assert!(a.abs() <= alpha + 1e-12, "{a}");
        }
    }

    #[test]
    fn cylinders_nest_and_refine(w in word(4), j in 1..=6usize) {
        let fam = perturbed(20, 0.1, EpsDecay::Geometric, 0.1);
        let outer = build_cylinder(&fam, &w).unwrap();
        let inner = build_cylinder(&fam, &w.append(j)).unwrap();
        prop_assert!(nesting_defect(&outer, &inner) <= 1e-12);
        let parent = build_cylinder(&fam, &w.prepend(j)).unwrap();
        prop_assert!(markov_refinement_defect(&fam, &parent, &outer) <= 1e-10);
    }

    #[test]
    fn cylinder_widths_shrink_with_the_expansion(fam in family(), w in word(5)) {
        let cyl = build_cylinder(&fam, &w).unwrap();
        let first = fam.branch(w.first().unwrap()).domain().max_width();
        let bound = first * fam.k0().powi(1 - w.len() as i32) * (1.0 + fam.alpha());
        prop_assert!(cyl.max_width() <= bound, "{} > {bound}", cyl.max_width());
    }

    #[test]
    fn unstable_curves_have_cone_slopes(fam in family(), neg in word(6)) {
        let c = unstable_curve(&fam, &neg, neg.len()).unwrap();
        prop_assert!(c.max_abs_slope() <= fam.alpha() + 1e-12);
    }

    #[test]
    fn stable_and_unstable_curves_cross_inside_the_rectangle(fam in family(), neg in word(4), pos in word(4)) {
        let u = unstable_curve(&fam, &neg, neg.len()).unwrap();
        let s = stable_curve(&fam, &pos).unwrap();
        let p = crossing(&u, &s).unwrap();
        prop_assert!((p.y - u.graph.eval(p.x)).abs() <= 1e-12);
        prop_assert!((p.x - s.graph.eval(p.y)).abs() <= 1e-12);
        let r = build_mixed(&fam, &neg, &pos).unwrap();
        prop_assert!(r.cylinder.contains(p));
    }

    #[test]
    fn graph_transform_contracts(fam in family(), neg in word(10)) {
        let rho = fam.k0().powi(-2) + fam.alpha().powi(2);
        let curves: Vec<_> = (0..=neg.len()).map(|d| unstable_curve(&fam, &neg, d).unwrap()).collect();
        for d in 0..neg.len() {
            let gap = curves[d].graph.sup_distance(&curves[d + 1].graph);
            prop_assert!(gap <= rho.powi(d as i32) + 1e-15, "depth {d}: {gap}");
        }
    }

    #[test]
    fn refining_the_grid_never_improves_a_margin(eps in 0.0..0.15f64, shear in 0.0..0.15f64, g in 16..24usize) {
        let fam = perturbed(8, eps, EpsDecay::Constant, shear);
        let margins = |grid: usize| -> Vec<f64> {
            let mut m: Vec<f64> = check_geometric(&fam, grid).unwrap().iter().map(|r| r.worst_margin).collect();
            m.extend(check_hyperbolicity(&fam, grid).unwrap().iter().map(|r| r.worst_margin));
            m.extend(check_distortion(&fam, grid).unwrap().iter().map(|r| r.worst_margin));
            m
        };
        let coarse = margins(g);
        let fine = margins(2 * g - 1);
        for (k, (c, f)) in coarse.iter().zip(&fine).enumerate() {
            prop_assert!(f <= c, "report {k}: {f} > {c}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn periodic_sums_of_both_potentials_agree(fam in family(), w in word(4)) {
        let ctx = PotentialContext::new(fam).unwrap();
        prop_assert!(coboundary_defect(&ctx, &w).unwrap() <= 1e-8);
    }

    #[test]
    fn partition_sums_grow_with_the_truncation(n in 1..=4usize, t in 4..12usize) {
        let z = |trunc: usize| {
            let ctx = PotentialContext::new(make_dyadic_family(trunc).unwrap()).unwrap();
            partition_sum(&ctx, 1, n).unwrap()
        };
        prop_assert!(z(t + 1) >= z(t));
    }

    #[test]
    fn orbits_are_deterministic(seed in any::<u64>(), n in 1..2000usize) {
        let fam = perturbed(12, 0.1, EpsDecay::Geometric, 0.1);
        let start = random_start(seed);
        prop_assert_eq!(simulate(&fam, start, n, seed).unwrap(), simulate(&fam, start, n, seed).unwrap());
    }

    #[test]
    fn escapes_are_rare(trunc in 4..=12usize, seed in any::<u64>()) {
        let fam = make_dyadic_family(trunc).unwrap();
        let o = simulate(&fam, random_start(seed), 100_000, seed).unwrap();
        prop_assert!(o.escape_rate() <= 0.5f64.powi(trunc as i32 - 4));
    }
}

/// Standard error of the mean of `values` from 100 batch means.
fn batch_se(values: &[f64]) -> f64 {
    let k = 100;
    let m = values.len() / k;
    let means: Vec<f64> = values
        .chunks_exact(m)
        .map(|c| c.iter().sum::<f64>() / m as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

fn halves(orbit: &Orbit, obs: &Observable) -> (f64, f64, f64) {
    let n = orbit.length / 2;
    let split = |range: std::ops::Range<usize>| Orbit {
        points: orbit.points[range.clone()].to_vec(),
        branches: orbit.branches[range.clone()].to_vec(),
        escapes: orbit
            .escapes
            .iter()
            .filter(|&&e| range.contains(&e))
            .map(|e| e - range.start)
            .collect(),
        length: range.len(),
        ..orbit.clone()
    };
    let (a, b) = (split(0..n), split(n..2 * n));
    let values = |o: &Orbit| -> Vec<f64> { o.mapped().map(|k| obs.eval(o.points[k])).collect() };
    let se = (batch_se(&values(&a)).powi(2) + batch_se(&values(&b)).powi(2)).sqrt();
    (birkhoff(&a, obs).unwrap(), birkhoff(&b, obs).unwrap(), se)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn birkhoff_averages_are_stationary(seed in any::<u64>(), shear in 0.0..0.15f64, name in prop::sample::select(vec!["x", "y", "sqrt_x"])) {
        let fam = perturbed(20, 0.1, EpsDecay::Geometric, shear);
        let obs = Observable::by_name(name).unwrap();
        let orbit = simulate(&fam, random_start(seed), 1_000_000, seed).unwrap();
        let (a, b, se) = halves(&orbit, &obs);
        prop_assert!((a - b).abs() <= 3.0 * se, "{a} vs {b}, se {se}");
    }

    #[test]
    fn holder_observables_decay(seed in any::<u64>(), shear in 0.0..0.15f64, name in prop::sample::select(vec!["x", "y", "sqrt_x"])) {
        let fam = perturbed(20, 0.1, EpsDecay::Geometric, shear);
        let obs = Observable::by_name(name).unwrap();
        let fit = correlation(&fam, &obs, &obs, 1_000_000, 8, seed).unwrap();
        prop_assert_eq!(fit.status, FitStatus::Fitted);
        prop_assert!(fit.fitted_eta < 1.0, "{}", fit.fitted_eta);
    }

    #[test]
    fn orbit_and_operator_rates_agree(seed in any::<u64>(), log_bins in 10..=12u32) {
        let fam = make_dyadic_family(20).unwrap();
        let x = Observable::x();
        let orbit = correlation(&fam, &x, &x, 1_000_000, 8, seed).unwrap();
        let operator = ulam_decay(&fam, &x, &x, 1 << log_bins, 8).unwrap();
        prop_assert!((orbit.fitted_eta - operator.second_eigenvalue).abs() <= 0.05);
    }
}

#[test]
fn cylinder_weights_match_cross_section_lengths() {
    for fam in [
        make_dyadic_family(20).unwrap(),
        perturbed(20, 0.1, EpsDecay::Geometric, 0.1),
    ] {
        let ctx = PotentialContext::new(fam).unwrap();
        for g in gibbs_length_ratios(&ctx, 4).unwrap() {
            assert!((0.5..=2.0).contains(&g.ratio()), "{}: {}", g.word, g.ratio());
        }
    }
}

#[test]
fn pressure_does_not_depend_on_the_anchor() {
    let ctx = PotentialContext::new(make_dyadic_family(20).unwrap()).unwrap();
    let p: Vec<f64> = (1..=3).map(|a| pressure(&ctx, a, 8).unwrap().p).collect();
    let spread = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - p.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread <= 1e-5, "{p:?}");
}

#[test]
fn pressure_rises_towards_zero_with_the_truncation() {
    let p: Vec<f64> = [4, 6, 8, 12, 16, 20]
        .iter()
        .map(|&n| {
            pressure(&PotentialContext::new(make_dyadic_family(n).unwrap()).unwrap(), 1, 6)
                .unwrap()
                .p
        })
        .collect();
    assert!(p.windows(2).all(|w| w[0] < w[1]), "{p:?}");
    assert!(p.iter().all(|&v| v < 0.0));
}
