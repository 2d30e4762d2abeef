use std::sync::Arc;

use avglr_core::density::*;
use avglr_core::invariance::*;
use avglr_core::statistics::*;

fn stats_for(null: Arc<dyn Density>, alts: Vec<Arc<dyn Density>>) -> (FiniteAlternatives, FiniteAlternatives) {
    let a = FiniteAlternatives::new(null, alts, None).unwrap();
    (a.clone(), a)
}

#[test]
fn orbit_average_is_group_invariant() {
    let quad = quad_9x2y2();
    let group = GroupAction::reflect_2d_quad();
    let alts = quad.alternatives();
    for x in probe_points(2, 10_000, 99) {
        let at = |y: &[f64]| log_sum_exp(alts.iter().map(|a| a.log_pdf(y))) - 4f64.ln();
        let here = at(&x);
        for g in 0..group.order() {
            assert!((at(&group.apply(g, &x).unwrap()) - here).abs() <= 1e-12);
        }
    }
}

#[test]
fn finite_statistics_are_invariant_on_probes() {
    let cases: Vec<(GroupAction, Arc<dyn Density>, Vec<Arc<dyn Density>>)> = vec![
        (
            GroupAction::reflect_1d(1).unwrap(),
            Arc::new(Uniform::unit_cube(1).unwrap()),
            make_symmetric_pair(&Shape1D::concave_sqrt(), 1).unwrap().alternatives(),
        ),
        (
            GroupAction::reflect_1d(5).unwrap(),
            Arc::new(Uniform::unit_cube(5).unwrap()),
            make_symmetric_pair(&Shape1D::convex_3x2(), 5).unwrap().alternatives(),
        ),
        (GroupAction::reflect_2d_quad(), Arc::new(Uniform::unit_square()), quad_9x2y2().alternatives()),
    ];
    for (group, null, alts) in cases {
        let (m, a) = stats_for(null, alts);
        for x in probe_points(group.dim(), 10_000, 7) {
            let (m0, a0) = (max_lr(&x, &m).unwrap().value, avg_lr(&x, &a).unwrap().value);
            for g in 0..group.order() {
                let y = group.apply(g, &x).unwrap();
                assert!((max_lr(&y, &m).unwrap().value - m0).abs() <= 1e-12);
                assert!((avg_lr(&y, &a).unwrap().value - a0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn induced_permutations_compose() {
    let quad = quad_9x2y2();
    let group = GroupAction::reflect_2d_quad();
    let perms = induced_permutations(&group, &quad.alternatives()).unwrap();
    assert!(permutations_compose(&group, &perms));
    // the induced permutation satisfies p_{π(i)}(x) = p_i(g^{-1} x) on fresh points
    let alts = quad.alternatives();
    for x in probe_points(2, 1000, 5) {
        for p in &perms {
            let y = group.apply(group.inverse(p.group_element_index), &x).unwrap();
            for (i, &j) in p.permutation.iter().enumerate() {
                assert!((alts[j].log_pdf(&x) - alts[i].log_pdf(&y)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn symmetric_threshold_regions_pass_the_region_check() {
    let pair = make_symmetric_pair(&Shape1D::concave_sqrt(), 1).unwrap();
    let a = FiniteAlternatives::new(Arc::new(Uniform::unit_cube(1).unwrap()), pair.alternatives(), None).unwrap();
    let group = GroupAction::reflect_1d(1).unwrap();
    // dyadic probes reflect exactly, so threshold decisions cannot straddle by rounding
    let probes: Vec<Vec<f64>> = (1..10_000).map(|k| vec![k as f64 / 16384.0]).collect();
    let c = 0.05;
    let r = symmetrize_region_check(|x| avg_lr(x, &a).unwrap().value > c, &group, &probes).unwrap();
    assert!(r.invariant(), "{:?}", &r.violations[..r.violations.len().min(5)]);
}
