use orbifold_core::charts::{restrict_chart, Atlas, Embedding};
use orbifold_core::fixtures::{atlas_v1, atlas_v2, half_open_space, neg, trivial_manifold, two_chart_manifold, unit_interval, v1};
use orbifold_core::groupoid::{
    induced_orbit_map, psi_generators, recover_atlas, validate_hom, validate_quasi_pseudogroup, ArrowAssignment,
    GroupoidHom, MarkedAtlasGroupoid, ObjComponent, ObjPoint, QuasiPseudogroup, SaturationStatus,
};
use orbifold_core::rational::{one, q, zero};
use orbifold_core::symfun::{parse_fn, Germ};
use orbifold_core::{DomainSet, Interval, PiecewiseFn};

fn f(s: &str) -> PiecewiseFn {
    parse_fn(s).unwrap()
}

fn p(x: orbifold_core::Q) -> ObjPoint {
    ObjPoint::new("V1", x)
}

#[test]
fn quasi_pseudogroup_examples() {
    let id = PiecewiseFn::identity_on(&unit_interval());
    let pm = QuasiPseudogroup { elements: vec![Embedding::new("V", "V", id.clone()), Embedding::new("V", "V", neg())] };
    assert!(validate_quasi_pseudogroup(&pm).is_valid());
    let shift = QuasiPseudogroup { elements: vec![Embedding::new("V", "V", f("piece(1, odd, 0, 1, 1) on (0,1)"))] };
    assert!(validate_quasi_pseudogroup(&shift).failed("qp-inverse"));
    let m = trivial_manifold();
    let idm = QuasiPseudogroup { elements: vec![Embedding::new("M", "M", m.charts[0].group[0].clone())] };
    assert!(validate_quasi_pseudogroup(&idm).is_valid());
}

#[test]
fn generators_examples() {
    for a in [atlas_v1(), atlas_v2()] {
        let g = psi_generators(&a).unwrap();
        let maps: Vec<_> = g.elements.iter().map(|e| e.map.clone()).collect();
        assert_eq!(maps, vec![PiecewiseFn::identity_on(&unit_interval()), neg()]);
    }
    let g = psi_generators(&two_chart_manifold()).unwrap();
    let mut ends: Vec<(String, String)> = g.elements.iter().map(|e| (e.source.clone(), e.target.clone())).collect();
    ends.sort();
    let want: Vec<(String, String)> =
        [("A", "A"), ("A", "B"), ("B", "A"), ("B", "B")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    assert_eq!(ends, want);
    assert!(psi_generators(&Atlas::new(half_open_space(), vec![v1(), orbifold_core::fixtures::v2()], vec![])).is_err());
}

#[test]
fn arrow_table() {
    let g = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let (a, st) = g.arrows_between(&p(zero()), &p(zero())).unwrap();
    assert_eq!(st, SaturationStatus::Saturated);
    let germs: Vec<Germ> = a.iter().map(|a| a.germ.clone()).collect();
    assert_eq!(germs.len(), 2);
    assert!(germs.contains(&Germ::of(&PiecewiseFn::identity_on(&unit_interval()), &zero()).unwrap()));
    assert!(germs.contains(&Germ::of(&neg(), &zero()).unwrap()));
    for x in [q(1, 2), q(-1, 2), q(1, 4), q(-1, 4)] {
        let (same, _) = g.arrows_between(&p(x.clone()), &p(x.clone())).unwrap();
        assert_eq!(same.len(), 1);
        let (flip, _) = g.arrows_between(&p(x.clone()), &p(-x.clone())).unwrap();
        assert_eq!(flip.len(), 1);
        assert_eq!(flip[0].germ, Germ::of(&neg(), &x).unwrap());
    }
    let (none, st) = g.arrows_between(&p(q(1, 2)), &p(q(1, 4))).unwrap();
    assert!(none.is_empty());
    assert_eq!(st, SaturationStatus::Saturated);
}

#[test]
fn orbits_and_markings() {
    let g1 = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let g2 = MarkedAtlasGroupoid::build(&atlas_v2()).unwrap();
    assert_eq!(g1.orbit(&p(q(1, 2))).unwrap().0, vec![p(q(-1, 2)), p(q(1, 2))]);
    assert_eq!(g1.orbit(&p(zero())).unwrap().0, vec![p(zero())]);
    let m = MarkedAtlasGroupoid::build(&trivial_manifold()).unwrap();
    let x = ObjPoint::new("M", q(1, 3));
    assert_eq!(m.orbit(&x).unwrap().0, vec![x.clone()]);

    assert_eq!(g1.marking_value(&p(q(1, 2))).unwrap(), q(1, 2));
    assert_eq!(g2.marking_value(&ObjPoint::new("V2", q(1, 2))).unwrap(), q(1, 4));
    assert_eq!(g1.marking_value(&p(zero())).unwrap(), zero());
    assert_eq!(g2.marking_value(&ObjPoint::new("V2", zero())).unwrap(), zero());
}

#[test]
fn serialization_and_recovery() {
    let a1 = atlas_v1();
    let a2 = orbifold_core::charts::Atlas { charts: vec![atlas_v2().charts[0].clone().with_id("V1")], ..atlas_v2() };
    let g1 = MarkedAtlasGroupoid::build(&a1).unwrap();
    let g2 = MarkedAtlasGroupoid::build(&a2).unwrap();
    assert_eq!(g1.serialize(false), g2.serialize(false));
    assert_ne!(g1.serialize(true), g2.serialize(true));
    assert_eq!(recover_atlas(&g1.serialize(true)).unwrap(), a1.canonical());
    assert_eq!(recover_atlas(&g2.serialize(true)).unwrap(), a2.canonical());
    assert_ne!(recover_atlas(&g1.serialize(true)).unwrap(), recover_atlas(&g2.serialize(true)).unwrap());
    for a in [trivial_manifold(), two_chart_manifold()] {
        let g = MarkedAtlasGroupoid::build(&a).unwrap();
        assert_eq!(recover_atlas(&g.serialize(true)).unwrap(), a.canonical());
    }
    assert!(recover_atlas(&g1.serialize(false)).is_err());
    assert!(recover_atlas("groupoid\nobject V1 (-1,1)\n").is_err());
}

fn constant_hom(neg_image: bool) -> GroupoidHom {
    let v = unit_interval();
    let zero_map = PiecewiseFn::constant(zero(), &DomainSet::single(v.clone()));
    let id = PiecewiseFn::identity_on(&v);
    GroupoidHom {
        obj_map: vec![ObjComponent { source: "V1".into(), target: "V1".into(), map: zero_map }],
        arrow_map: vec![
            ArrowAssignment { generator: Embedding::new("V1", "V1", id.clone()), image: Embedding::new("V1", "V1", id.clone()) },
            ArrowAssignment {
                generator: Embedding::new("V1", "V1", neg()),
                image: Embedding::new("V1", "V1", if neg_image { neg() } else { id }),
            },
        ],
    }
}

#[test]
fn hom_examples() {
    let g = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let phi = constant_hom(false);
    let psi = constant_hom(true);
    assert!(validate_hom(&phi, &g, &g).is_valid(), "{}", validate_hom(&phi, &g, &g));
    assert!(validate_hom(&psi, &g, &g).is_valid(), "{}", validate_hom(&psi, &g, &g));
    let mut bad = constant_hom(false);
    bad.arrow_map[0].image.map = neg();
    let rep = validate_hom(&bad, &g, &g);
    assert!(rep.failed("unit"), "{}", rep);

    let zero_q = PiecewiseFn::constant(zero(), &DomainSet::single(Interval::closed_open(zero(), one())));
    assert_eq!(induced_orbit_map(&phi, &g, &g).unwrap(), zero_q);

    let id_hom = GroupoidHom {
        obj_map: vec![ObjComponent { source: "V1".into(), target: "V1".into(), map: PiecewiseFn::identity_on(&unit_interval()) }],
        arrow_map: g.generators.elements.iter().map(|e| ArrowAssignment { generator: e.clone(), image: e.clone() }).collect(),
    };
    assert!(validate_hom(&id_hom, &g, &g).is_valid());
    assert_eq!(induced_orbit_map(&id_hom, &g, &g).unwrap(), PiecewiseFn::identity_on(&Interval::closed_open(zero(), one())));

    // x² lift from the V2-marked groupoid to the V1-marked one
    let g2 = MarkedAtlasGroupoid::build(&atlas_v2()).unwrap();
    let sq = GroupoidHom {
        obj_map: vec![ObjComponent { source: "V2".into(), target: "V1".into(), map: f("piece(1, even, 0, 2, 0) on (-1,1)") }],
        arrow_map: g2
            .generators
            .elements
            .iter()
            .map(|e| ArrowAssignment {
                generator: e.clone(),
                image: Embedding::new("V1", "V1", PiecewiseFn::identity_on(&unit_interval())),
            })
            .collect(),
    };
    assert!(validate_hom(&sq, &g2, &g).is_valid(), "{}", validate_hom(&sq, &g2, &g));
    assert_eq!(induced_orbit_map(&sq, &g2, &g).unwrap(), PiecewiseFn::identity_on(&Interval::closed_open(zero(), one())));
}

#[test]
fn restriction_atlas_generators() {
    let s = restrict_chart(&v1(), &Interval::open(zero(), one())).unwrap().with_id("P");
    let w = Embedding::new("P", "V1", PiecewiseFn::identity_on(&s.domain));
    let a = Atlas::new(half_open_space(), vec![v1(), s], vec![w]);
    let rep = orbifold_core::charts::validate_atlas(&a);
    assert!(rep.is_valid(), "{}", rep);
    let g = MarkedAtlasGroupoid::build(&a).unwrap();
    let (arrows, _) = g.arrows_between(&ObjPoint::new("P", q(1, 2)), &p(q(-1, 2))).unwrap();
    assert_eq!(arrows.len(), 1);
}

#[test]
fn marked_text_layout() {
    let g = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let text = g.serialize(true);
    println!("{}", text);
    assert!(text.starts_with("groupoid\nobject V1 (-1,1)\n"));
    assert!(text.contains("marking V1 : piece(1, even, 0, 1, 0) on (-1,1)"));
    assert!(text.ends_with("end\n"));
}
