use orbifold_core::charts::Embedding;
use orbifold_core::groupoid::ObjPoint;
use orbifold_core::fixtures::{atlas_v1, atlas_v2, constant_zero_rep, identity_lift_over, square_rep};
use orbifold_core::groupoid::{GroupoidHom, MarkedAtlasGroupoid};
use orbifold_core::maps::*;
use orbifold_core::rational::{one, q, qi};
use orbifold_core::{Interval, Q};
use proptest::prelude::*;

/// A restriction atlas of `V₁`: a symmetric chart `(−a,a)` plus one or two
/// side charts reaching the boundary, each with a random sign.
fn identity_lift() -> impl Strategy<Value = ChartedMap> {
    (2i64..8, any::<bool>(), prop::collection::vec((1i64..8, any::<bool>(), any::<bool>()), 1..3)).prop_map(|(a, s0, sides)| {
        let mut charts = vec![(Interval::open(q(-a, 8), q(a, 8)), s0)];
        for (b, left, neg) in sides {
            let b = b.min(a - 1);
            let i = if left { Interval::open(qi(-1), q(-b, 8)) } else { Interval::open(q(b, 8), one()) };
            charts.push((i, neg));
        }
        identity_lift_over(&charts, "W")
    })
}

fn probe_germs(h: &GroupoidHom) -> Vec<(Embedding, Q)> {
    let mut out = Vec::new();
    for a in &h.arrow_map {
        for i in a.generator.map.domain().intervals() {
            if let Some(x) = i.sample() {
                out.push((a.generator.clone(), x));
            }
        }
    }
    out
}

fn fixture_reps() -> Vec<MapRep> {
    vec![constant_zero_rep(false), constant_zero_rep(true), square_rep()]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn identity_lifts_are_recognised(m in identity_lift()) {
        prop_assert!(validate_representative(&m.rep).is_valid());
        prop_assert!(is_identity_lift(&m));
        let g = MarkedAtlasGroupoid::build(&m.rep.src).unwrap();
        let v = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
        let h = to_hom(&m.rep, &atlas_v1()).unwrap();
        prop_assert_eq!(unit_weak_equivalence_check(&h, &g, &v), UweCheck { by_lift: true, by_structure: true });
    }

    #[test]
    fn f1_f2_round_trips(m in identity_lift(), k in 0usize..3) {
        let fixed = fixture_reps();
        for r in [&fixed[k], &m.rep] {
            let src = MarkedAtlasGroupoid::build(&r.src).unwrap();
            let dst = MarkedAtlasGroupoid::build(&r.dst).unwrap();
            let h = to_hom(r, &r.dst).unwrap();
            let back = from_hom(&h, &src, &dst).unwrap();
            prop_assert!(representatives_equivalent(&back, r).unwrap());
            let again = to_hom(&back, &r.dst).unwrap();
            for (l, x) in probe_germs(&h) {
                prop_assert_eq!(again.apply_germ(&l, &x).unwrap(), h.apply_germ(&l, &x).unwrap());
            }
        }
    }

    #[test]
    fn composition_is_functorial(m in identity_lift(), negate in any::<bool>()) {
        let g = ChartedMap::new(constant_zero_rep(negate), "V1", "V1");
        let c = compose_reps(&g, &m).unwrap();
        prop_assert!(validate_representative(&c.rep).is_valid());
        let (hf, hg) = (to_hom(&m.rep, &atlas_v1()).unwrap(), to_hom(&g.rep, &atlas_v1()).unwrap());
        let hc = to_hom(&c.rep, &atlas_v1()).unwrap();
        for (l, x) in probe_germs(&hf) {
            let a = hf.assignment_at(&l, &x).unwrap();
            let y = hf.apply_obj(&ObjPoint::new(&l.source, x.clone())).unwrap();
            let want = hg.apply_germ(&a.image, &y.x).unwrap();
            prop_assert_eq!(hc.apply_germ(&l, &x).unwrap(), want);
        }
    }

    #[test]
    fn identity_lifts_are_equivalent(a in identity_lift(), b in identity_lift()) {
        match common_refinement_witness(&a, &b) {
            WitnessSearch::Found(w) => {
                prop_assert!(verify_equivalence_witness(&a, &b, &w));
                prop_assert!(verify_equivalence_witness(&b, &a, &w.mirrored()));
                let (ga, gb) = (MarkedAtlasGroupoid::build(&a.rep.src).unwrap(), MarkedAtlasGroupoid::build(&b.rep.src).unwrap());
                let (ha, hb) = (to_hom(&a.rep, &atlas_v1()).unwrap(), to_hom(&b.rep, &atlas_v1()).unwrap());
                prop_assert_eq!(refute_hom_equivalence(&ha, &ga, &hb, &gb).unwrap(), Refutation::NoRefutation);
            }
            WitnessSearch::Unknown(m) => prop_assert!(false, "no witness: {}", m),
        }
    }

    #[test]
    fn constant_maps_through_refinements(m in identity_lift(), negate in any::<bool>()) {
        // ĝ∘ε is witness-connected to ĝ and is never refuted against it
        let g = ChartedMap::new(constant_zero_rep(negate), "V1", "V1");
        let c = compose_reps(&g, &m).unwrap();
        let found = matches!(common_refinement_witness(&g, &c), WitnessSearch::Found(_));
        prop_assert!(found);
        let (gv, gw) = (MarkedAtlasGroupoid::build(&atlas_v1()).unwrap(), MarkedAtlasGroupoid::build(&m.rep.src).unwrap());
        let (hg, hc) = (to_hom(&g.rep, &atlas_v1()).unwrap(), to_hom(&c.rep, &atlas_v1()).unwrap());
        prop_assert_eq!(refute_hom_equivalence(&hg, &gv, &hc, &gw).unwrap(), Refutation::NoRefutation);
        let other = to_hom(&constant_zero_rep(!negate), &atlas_v1()).unwrap();
        let refuted = matches!(refute_hom_equivalence(&other, &gv, &hc, &gw).unwrap(), Refutation::Certificate { .. });
        prop_assert!(refuted);
    }
}

#[test]
fn square_lift_is_not_a_unit_weak_equivalence() {
    let g1 = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let g2 = MarkedAtlasGroupoid::build(&atlas_v2()).unwrap();
    let h = to_hom(&square_rep(), &atlas_v1()).unwrap();
    let c = unit_weak_equivalence_check(&h, &g2, &g1);
    assert_eq!(c.by_lift, c.by_structure);
    assert!(!c.by_lift);
}
