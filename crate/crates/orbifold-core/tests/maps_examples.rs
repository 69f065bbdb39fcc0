use orbifold_core::charts::{restrict_chart, Embedding};
use orbifold_core::fixtures::{
    atlas_v1, atlas_v2, constant_zero_rep, identity_lift, neg, sqrt_lift_candidates, sqrt_map, square_rep, trivial_manifold,
    unit_interval, v1, v2,
};
use orbifold_core::groupoid::{validate_hom, MarkedAtlasGroupoid, ObjPoint};
use orbifold_core::maps::*;
use orbifold_core::rational::{one, q, qi, zero};
use orbifold_core::symfun::{parse_fn, Germ};
use orbifold_core::{DomainSet, Interval, PiecewiseFn, Q};

fn f(s: &str) -> PiecewiseFn {
    parse_fn(s).unwrap()
}

fn id_v1() -> PiecewiseFn {
    PiecewiseFn::identity_on(&unit_interval())
}

fn charted(r: MapRep) -> ChartedMap {
    ChartedMap::new(r, "V", "V'")
}

fn nu_image_at(r: &MapRep, map: &PiecewiseFn, x: &Q) -> Germ {
    let k = r.p.iter().position(|l| l.map.defined_near(x) && Germ::of(&l.map, x).unwrap() == Germ::of(map, x).unwrap()).unwrap();
    let y = r.lifts[0].map.eval_q(x).unwrap();
    Germ::of(&r.nu[k].map, &y).unwrap()
}

#[test]
fn local_lift_checks() {
    let zero_lift = LocalLift::new("V1", "V1", PiecewiseFn::constant(zero(), &DomainSet::single(unit_interval())));
    let zero_map = constant_zero_rep(false).f;
    assert!(verify_local_lift(&zero_lift, &zero_map, &v1(), &v1()).is_valid());

    for c in sqrt_lift_candidates() {
        let rep = verify_local_lift(&c, &sqrt_map(), &v1(), &v1());
        assert!(rep.failed("lift-smooth"), "{}", c);
        let detail = &rep.issues.iter().find(|i| i.check == "lift-smooth").unwrap().detail;
        assert!(detail.starts_with("NotSmooth(0,"), "{}", detail);
        // each sign choice does lift the square root
        assert!(!rep.failed("lift-square"));
    }

    let sq = &square_rep().lifts[0];
    assert!(verify_local_lift(sq, &square_rep().f, &v2(), &v1()).is_valid());
    // the same map is no lift from V1 to V1
    assert!(verify_local_lift(&LocalLift::new("V1", "V1", sq.map.clone()), &square_rep().f, &v1(), &v1()).failed("lift-square"));
}

#[test]
fn representative_checks() {
    assert!(validate_representative(&constant_zero_rep(false)).is_valid());
    assert!(validate_representative(&constant_zero_rep(true)).is_valid());
    assert!(validate_representative(&square_rep()).is_valid());
    let mut bad = constant_zero_rep(false);
    bad.nu[1] = Embedding::new("V1", "V1", f("piece(1, odd, 0, 1, 1/2) on (-1,1)"));
    assert!(validate_representative(&bad).failed("R4a"));
    let mut missing = constant_zero_rep(false);
    missing.p.pop();
    missing.nu.pop();
    assert!(validate_representative(&missing).failed("R3-generation"));
}

#[test]
fn f1_examples() {
    let phi = to_hom(&constant_zero_rep(false), &atlas_v1()).unwrap();
    let psi = to_hom(&constant_zero_rep(true), &atlas_v1()).unwrap();
    let flip = Embedding::new("V1", "V1", neg());
    assert_eq!(phi.apply_germ(&flip, &q(1, 2)).unwrap(), Germ::identity(zero()));
    assert_eq!(psi.apply_germ(&flip, &q(1, 2)).unwrap(), Germ::of(&neg(), &zero()).unwrap());
    let g = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    assert!(validate_hom(&phi, &g, &g).is_valid());
    assert!(validate_hom(&psi, &g, &g).is_valid());

    let m = trivial_manifold();
    let id = to_hom(&identity_rep(&m).unwrap(), &m).unwrap();
    for c in &id.obj_map {
        assert!(c.map.is_identity());
    }
    for a in &id.arrow_map {
        assert_eq!(a.generator, a.image);
    }

    assert_eq!(
        to_hom(&constant_zero_rep(false), &atlas_v2()),
        Err(MapError::RangeFamilyNotContained("V1".into()))
    );
}

#[test]
fn f2_examples() {
    let g = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    for negate in [false, true] {
        let r = constant_zero_rep(negate);
        let back = from_hom(&to_hom(&r, &atlas_v1()).unwrap(), &g, &g).unwrap();
        assert!(representatives_equivalent(&back, &r).unwrap());
        assert!(!representatives_equivalent(&back, &constant_zero_rep(!negate)).unwrap());
    }
    let m = trivial_manifold();
    let gm = MarkedAtlasGroupoid::build(&m).unwrap();
    let idr = identity_rep(&m).unwrap();
    let back = from_hom(&to_hom(&idr, &m).unwrap(), &gm, &gm).unwrap();
    assert!(representatives_equivalent(&back, &idr).unwrap());
    assert_eq!(back.f, PiecewiseFn::identity(&m.space.carrier));
}

#[test]
fn equivalence_of_representatives() {
    let (a, b) = (constant_zero_rep(false), constant_zero_rep(true));
    assert!(!representatives_equivalent(&a, &b).unwrap());
    assert!(representatives_equivalent(&a, &a).unwrap());
    // P enlarged by restrictions of −id with ν restricted accordingly
    for r in [a.clone(), b.clone()] {
        let mut big = r.clone();
        for s in [Interval::open(zero(), one()), Interval::open(q(-1, 2), q(1, 2))] {
            big.p.push(Embedding::new("V1", "V1", neg().restrict_interval(&s)));
            big.nu.push(r.nu[1].clone());
        }
        assert!(validate_representative(&big).is_valid());
        assert!(representatives_equivalent(&big, &r).unwrap());
        assert!(representatives_equivalent(&r, &big).unwrap());
    }
    assert!(matches!(representatives_equivalent(&a, &square_rep()), Err(MapError::AtlasMismatch(_))));
}

#[test]
fn induced_local_lifts() {
    let s = Interval::open(q(-1, 2), q(1, 2));
    let incl = |src: &str, dst: &str, s: &Interval| Embedding::new(src, dst, PiecewiseFn::identity_on(s));
    let idl = LocalLift::new("V1", "V1", id_v1());
    let r = induce_local_lift(&idl, &incl("W", "V1", &s), &incl("U", "V1", &s)).unwrap();
    assert_eq!(r, LocalLift::new("W", "U", PiecewiseFn::identity_on(&s)));

    let pos = Interval::open(zero(), one());
    let sq = &square_rep().lifts[0];
    let r = induce_local_lift(sq, &incl("W", "V2", &pos), &incl("U", "V1", &pos)).unwrap();
    assert_eq!(r.map.domain(), DomainSet::single(pos.clone()));
    for k in 1..8 {
        let x = q(k, 8);
        assert_eq!(r.map.eval_q(&x).unwrap(), &x * &x);
    }
    assert!(r.map.is_local_diffeomorphism().is_diffeo());

    let half = Interval::open(zero(), q(1, 2));
    assert_eq!(induce_local_lift(sq, &incl("W", "V2", &pos), &incl("U", "V1", &half)), Err(MapError::ImageNotContained(0)));
}

#[test]
fn identity_lift_completion() {
    let a = atlas_v1();
    let r = complete_identity_lift(&a, &a, vec![LocalLift::new("V1", "V1", id_v1())]).unwrap();
    assert!(validate_representative(&r).is_valid());
    assert!(representatives_equivalent(&r, &identity_rep(&a).unwrap()).unwrap());

    let r = complete_identity_lift(&a, &a, vec![LocalLift::new("V1", "V1", neg())]).unwrap();
    assert!(validate_representative(&r).is_valid());
    // π∘(−id) = π
    assert_eq!(orbifold_core::symfun::compose(&v1().proj, &neg()).unwrap(), v1().proj);
    assert!(is_identity_lift(&charted(r)));

    let sq = square_rep().lifts;
    assert_eq!(complete_identity_lift(&atlas_v2(), &a, sq), Err(MapError::NotLocalDiffeo(0)));
}

#[test]
fn identity_lift_recognition() {
    assert!(is_identity_lift(&charted(identity_rep(&atlas_v1()).unwrap())));
    assert!(!is_identity_lift(&charted(square_rep())));
    assert!(!is_identity_lift(&charted(constant_zero_rep(false))));
    for k in 0..orbifold_core::fixtures::IDENTITY_LIFT_COUNT {
        let m = identity_lift(k);
        assert!(is_identity_lift(&m));
        assert!(validate_representative(&m.rep).is_valid(), "lift {}", k);
    }
}

#[test]
fn induced_charted_maps() {
    let a = atlas_v1();
    let ids = [Embedding::new("V1", "V1", id_v1())];
    let w = restriction_atlas(&a, &[(v1(), ids[0].clone())]).unwrap();
    let nu2 = charted(constant_zero_rep(true));
    let same = induce_charted_map(&nu2, &w, &ids, &[v1()], &ids).unwrap();
    assert!(representatives_equivalent(&same.rep, &nu2.rep).unwrap());

    // onto (−1/2,1/2) and (1/4,1) in the domain, (−1/2,1/2) in the range
    let (s0, s1) = (Interval::open(q(-1, 2), q(1, 2)), Interval::open(q(1, 4), one()));
    let c0 = restrict_chart(&v1(), &s0).unwrap().with_id("W0");
    let c1 = restrict_chart(&v1(), &s1).unwrap().with_id("W1");
    let l0 = Embedding::new("W0", "V1", PiecewiseFn::identity_on(&s0));
    let l1 = Embedding::new("W1", "V1", PiecewiseFn::identity_on(&s1));
    let w = restriction_atlas(&a, &[(c0.clone(), l0.clone()), (c1.clone(), l1.clone())]).unwrap();
    let u0 = restrict_chart(&v1(), &s0).unwrap().with_id("U0");
    let m0 = Embedding::new("U0", "V1", PiecewiseFn::identity_on(&s0));
    let nu1 = charted(constant_zero_rep(false));
    let ind = induce_charted_map(&nu1, &w, &[l0.clone(), l1.clone()], std::slice::from_ref(&u0), &[m0.clone(), m0.clone()]).unwrap();
    assert!(validate_representative(&ind.rep).is_valid());
    assert_eq!(ind.rep.lifts[0].map, PiecewiseFn::constant(zero(), &DomainSet::single(s0.clone())));
    assert_eq!(ind.rep.lifts[1].map, PiecewiseFn::constant(zero(), &DomainSet::single(s1.clone())));
    // U0 does not cover Q, so V1 is appended
    assert_eq!(ind.rep.dst.charts.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(), vec!["U0", "V1"]);

    // triangle: ε′∘ĥ ≡ f̂∘ε
    let eps = ChartedMap::new(
        complete_identity_lift(&w, &a, vec![LocalLift::new("W0", "V1", l0.map.clone()), LocalLift::new("W1", "V1", l1.map.clone())])
            .unwrap(),
        "W",
        "V",
    );
    let mus: Vec<LocalLift> = ind
        .rep
        .dst
        .charts
        .iter()
        .map(|c| LocalLift::new(&c.id, "V1", if c.id == "U0" { m0.map.clone() } else { id_v1() }))
        .collect();
    let eps_p = ChartedMap::new(complete_identity_lift(&ind.rep.dst, &a, mus).unwrap(), "W'", "V");
    let left = compose_reps(&eps_p, &ind).unwrap();
    let right = compose_reps(&nu1, &eps).unwrap();
    assert!(representatives_equivalent(&left.rep, &right.rep).unwrap());

    // x² becomes a local diffeomorphism on (0,1)
    let pos = Interval::open(zero(), one());
    let sq = charted(square_rep());
    let cw = restrict_chart(&v2(), &pos).unwrap().with_id("W");
    let cu = restrict_chart(&v1(), &pos).unwrap().with_id("U");
    let lw = Embedding::new("W", "V2", PiecewiseFn::identity_on(&pos));
    let lu = Embedding::new("U", "V1", PiecewiseFn::identity_on(&pos));
    let wa = restriction_atlas(&atlas_v2(), &[(cw, lw.clone())]).unwrap();
    let ind = induce_charted_map(&sq, &wa, &[lw], &[cu], &[lu]).unwrap();
    assert_eq!(ind.rep.lifts[0].map, f("piece(1, even, 0, 2, 0) on (-1,1)").restrict_interval(&pos));
    assert!(ind.rep.lifts[0].map.is_local_diffeomorphism().is_diffeo());
}

#[test]
fn composition() {
    let nu1 = charted(constant_zero_rep(false));
    let nu2 = charted(constant_zero_rep(true));
    let idm = charted(identity_rep(&atlas_v1()).unwrap());
    for m in [&nu1, &nu2] {
        assert!(representatives_equivalent(&compose_reps(m, &idm).unwrap().rep, &m.rep).unwrap());
        assert!(representatives_equivalent(&compose_reps(&idm, m).unwrap().rep, &m.rep).unwrap());
    }

    // ν₂∘ν₂: constant 0 with −id sent to (−id)
    let c = compose_reps(&nu2, &nu2).unwrap();
    assert!(validate_representative(&c.rep).is_valid());
    assert_eq!(c.rep.f, PiecewiseFn::constant(zero(), &atlas_v1().space.carrier));
    for x in [q(-1, 2), zero(), q(1, 3)] {
        assert_eq!(nu_image_at(&c.rep, &neg(), &x), Germ::of(&neg(), &zero()).unwrap());
        assert_eq!(nu_image_at(&c.rep, &id_v1(), &x), Germ::identity(zero()));
    }
    // ν₁ after ν₂ forgets the flip
    let c = compose_reps(&nu1, &nu2).unwrap();
    assert!(representatives_equivalent(&c.rep, &nu1.rep).unwrap());

    // associativity, with a pointwise check of the lifts
    let sq = charted(square_rep());
    let l = compose_reps(&compose_reps(&nu2, &nu1).unwrap(), &sq).unwrap();
    let r = compose_reps(&nu2, &compose_reps(&nu1, &sq).unwrap()).unwrap();
    assert!(representatives_equivalent(&l.rep, &r.rep).unwrap());
    for k in -7..8 {
        let x = q(k, 8);
        assert_eq!(l.rep.lifts[0].map.eval_q(&x).unwrap(), zero());
    }

    assert_eq!(compose_reps(&sq, &nu1), Err(MapError::AtlasChainMismatch));
}

#[test]
fn witness_verification() {
    let nu1 = charted(constant_zero_rep(false));
    let nu2 = charted(constant_zero_rep(true));
    let e = charted(identity_rep(&atlas_v1()).unwrap());
    let w = EquivalenceWitness {
        w: atlas_v1(),
        w_prime: atlas_v1(),
        eps1: e.clone(),
        eps2: e.clone(),
        eps1_prime: e.clone(),
        eps2_prime: e.clone(),
        h: nu1.clone(),
    };
    assert!(verify_equivalence_witness(&nu1, &nu1, &w));
    assert!(!verify_equivalence_witness(&nu1, &nu2, &w));
    let bad = EquivalenceWitness { h: nu2.clone(), ..w.clone() };
    assert!(!verify_equivalence_witness(&nu1, &nu1, &bad));

    let (a, b) = (identity_lift(1), identity_lift(3));
    match common_refinement_witness(&a, &b) {
        WitnessSearch::Found(w) => {
            assert!(verify_equivalence_witness(&a, &b, &w));
            assert!(verify_equivalence_witness(&b, &a, &w.mirrored()));
        }
        WitnessSearch::Unknown(m) => panic!("{}", m),
    }
}

#[test]
fn witness_search() {
    // the inducing data is a witness
    let nu2 = charted(constant_zero_rep(true));
    let s0 = Interval::open(q(-1, 2), q(1, 2));
    let s1 = Interval::open(qi(-1), q(-1, 4));
    let c0 = restrict_chart(&v1(), &s0).unwrap().with_id("W0");
    let c1 = restrict_chart(&v1(), &s1).unwrap().with_id("W1");
    let l0 = Embedding::new("W0", "V1", PiecewiseFn::identity_on(&s0));
    let l1 = Embedding::new("W1", "V1", PiecewiseFn::identity_on(&s1));
    let w = restriction_atlas(&atlas_v1(), &[(c0, l0.clone()), (c1, l1.clone())]).unwrap();
    let ind = induce_charted_map(&nu2, &w, &[l0, l1], &[v1()], &vec![Embedding::new("V1", "V1", id_v1()); 2]).unwrap();
    assert!(matches!(common_refinement_witness(&nu2, &ind), WitnessSearch::Found(_)));

    let nu1 = charted(constant_zero_rep(false));
    assert!(matches!(common_refinement_witness(&nu1, &nu2), WitnessSearch::Unknown(_)));
    assert!(matches!(common_refinement_witness(&identity_lift(0), &identity_lift(4)), WitnessSearch::Found(_)));
}

#[test]
fn composition_across_atlases() {
    let nu2 = charted(constant_zero_rep(true));
    // f̂ into 𝒱₁, ĝ out of a restriction atlas of 𝒱₁
    let g = identity_lift(3);
    let g = ChartedMap::new(
        complete_identity_lift(&g.rep.src, &atlas_v1(), g.rep.lifts.clone()).unwrap(),
        "W",
        "V1",
    );
    let h = compose_orbifold_maps(&g, &nu2).unwrap();
    assert!(validate_representative(&h.rep).is_valid());
    assert_eq!(h.rep.f, nu2.rep.f);

    // composing with an identity class changes nothing
    for k in [2, 4] {
        let h = compose_orbifold_maps(&nu2, &identity_lift(k)).unwrap();
        assert!(validate_representative(&h.rep).is_valid());
        assert!(matches!(common_refinement_witness(&h, &compose_reps(&nu2, &identity_lift(k)).unwrap()), WitnessSearch::Found(_)));
    }

    // three maps, two bracketings
    let (a, b, c) = (identity_lift(1), nu2.clone(), identity_lift(2));
    let c_to_v1 = ChartedMap::new(
        complete_identity_lift(&c.rep.src, &atlas_v1(), c.rep.lifts.clone()).unwrap(),
        "W2",
        "V1",
    );
    let left = compose_orbifold_maps(&c_to_v1, &compose_orbifold_maps(&b, &a).unwrap()).unwrap();
    let right = compose_orbifold_maps(&compose_orbifold_maps(&c_to_v1, &b).unwrap(), &a).unwrap();
    assert_eq!(left.rep.f, right.rep.f);
    assert!(matches!(common_refinement_witness(&left, &right), WitnessSearch::Found(_)));
}

#[test]
fn unit_weak_equivalences() {
    let g1 = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let g2 = MarkedAtlasGroupoid::build(&atlas_v2()).unwrap();
    let id = to_hom(&identity_rep(&atlas_v1()).unwrap(), &atlas_v1()).unwrap();
    assert_eq!(unit_weak_equivalence_check(&id, &g1, &g1), UweCheck { by_lift: true, by_structure: true });
    let sq = to_hom(&square_rep(), &atlas_v1()).unwrap();
    assert_eq!(unit_weak_equivalence_check(&sq, &g2, &g1), UweCheck { by_lift: false, by_structure: false });
    let phi = to_hom(&constant_zero_rep(false), &atlas_v1()).unwrap();
    assert!(!is_unit_weak_equivalence(&phi, &g1, &g1));
}

#[test]
fn refuter() {
    let g = MarkedAtlasGroupoid::build(&atlas_v1()).unwrap();
    let phi = to_hom(&constant_zero_rep(false), &atlas_v1()).unwrap();
    let psi = to_hom(&constant_zero_rep(true), &atlas_v1()).unwrap();
    match refute_hom_equivalence(&phi, &g, &psi, &g).unwrap() {
        Refutation::Certificate { point, first, second, .. } => {
            assert_eq!(point, ObjPoint::new("V1", zero()));
            assert_eq!((first, second), (1, 2));
        }
        Refutation::NoRefutation => panic!("expected a certificate"),
    }
    assert_eq!(refute_hom_equivalence(&phi, &g, &phi, &g).unwrap(), Refutation::NoRefutation);
    let (a, b) = (identity_lift(1), identity_lift(4));
    let (ga, gb) = (MarkedAtlasGroupoid::build(&a.rep.src).unwrap(), MarkedAtlasGroupoid::build(&b.rep.src).unwrap());
    let (ha, hb) = (to_hom(&a.rep, &atlas_v1()).unwrap(), to_hom(&b.rep, &atlas_v1()).unwrap());
    assert_eq!(refute_hom_equivalence(&ha, &ga, &hb, &gb).unwrap(), Refutation::NoRefutation);
}
