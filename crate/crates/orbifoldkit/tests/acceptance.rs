//! The acceptance criteria, one line each. Criteria run on separate threads;
//! lines are printed in order once all are done.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use orbifold_core::charts::{charts_compatible, failure_text, validate_atlas, Atlas, Compatibility, Embedding};
use orbifold_core::fixtures::*;
use orbifold_core::groupoid::{chart_probes, recover_atlas, GermArrow, GroupoidHom, MarkedAtlasGroupoid, ObjPoint, SaturationStatus};
use orbifold_core::maps::*;
use orbifold_core::rational::{one, q, qi, zero};
use orbifold_core::symfun::{compose, invert, Germ};
use orbifold_core::{Interval, Q};
use orbifoldkit::{run_file, Options};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn v1_groupoid() -> MarkedAtlasGroupoid {
    MarkedAtlasGroupoid::build(&atlas_v1()).unwrap()
}

fn criterion_1() -> Verdict {
    let Compatibility::Incompatible { y, x, candidates } = charts_compatible(&v1(), &v2()) else {
        return Err("V1, V2 not reported incompatible".into());
    };
    ensure!(y == zero() && x == zero(), "fiber pair ({}, {})", y, x);
    let texts: Vec<String> = candidates.iter().map(|c| failure_text(&c.failure)).collect();
    let critical = texts.iter().filter(|t| *t == "CriticalPoint(0)").count();
    let smooth = texts.iter().filter(|t| *t == "NotSmooth(0, order 2)").count();
    ensure!(texts.len() == 4 && critical == 2 && smooth == 2, "candidate failures {:?}", texts);
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/notcompatible.orb");
    let report = run_file(&fixture, &Options::default()).map_err(|e| e.to_string())?;
    ensure!(report.exit_code(false) == 0, "fixture exit code {}", report.exit_code(false));
    Ok("4 candidates rejected: 2 CriticalPoint(0), 2 NotSmooth(0, order 2); fixture exits 0".into())
}

fn criterion_2() -> Verdict {
    let g = v1_groupoid();
    let p = |x: Q| ObjPoint::new("V1", x);
    let count = |a: Q, b: Q| -> Result<usize, String> {
        let (arrows, status) = g.arrows_between(&p(a), &p(b)).map_err(|e| e.to_string())?;
        ensure!(status == SaturationStatus::Saturated, "saturation {:?}", status);
        Ok(arrows.len())
    };
    ensure!(count(zero(), zero())? == 2, "|Γ(0,0)| != 2");
    for x in [q(1, 2), q(-1, 2), q(1, 4), q(-1, 4)] {
        ensure!(count(x.clone(), x.clone())? == 1, "|Γ({x},{x})| != 1");
        ensure!(count(x.clone(), -x.clone())? == 1, "|Γ({x},-{x})| != 1");
    }
    ensure!(count(q(1, 2), q(1, 4))? == 0, "Γ(1/2,1/4) not empty");
    Ok("|Γ(0,0)|=2, |Γ(x,±x)|=1 at ±1/2, ±1/4, Γ(1/2,1/4)=∅, saturated".into())
}

fn criterion_3() -> Verdict {
    let g1 = v1_groupoid();
    // same chart id, so only the marking can tell the groupoids apart
    let a2 = Atlas { charts: vec![v2().with_id("V1")], ..atlas_v2() };
    let g2 = MarkedAtlasGroupoid::build(&a2).unwrap();
    let at = ObjPoint::new("V1", q(1, 2));
    let (m1, m2) = (g1.marking_value(&at).unwrap(), g2.marking_value(&at).unwrap());
    ensure!(m1 == q(1, 2) && m2 == q(1, 4), "markings {} and {}", m1, m2);
    ensure!(g1.serialize(false) == g2.serialize(false), "unmarked serializations differ");
    ensure!(g1.serialize(true) != g2.serialize(true), "marked serializations agree");
    Ok("markings 1/2 vs 1/4; marked texts differ, unmarked identical".into())
}

fn criterion_4() -> Verdict {
    let (f, c) = (sqrt_map(), v1());
    let candidates = sqrt_lift_candidates();
    for l in &candidates {
        let r = verify_local_lift(l, &f, &c, &c);
        let at_zero = r.issues.iter().any(|i| i.check == "lift-smooth" && i.detail.starts_with("NotSmooth(0,"));
        ensure!(at_zero, "{} gave {}", l.map, r);
    }
    Ok(format!("all {} candidates fail with NotSmooth at 0", candidates.len()))
}

fn criterion_5() -> Verdict {
    let (r1, r2) = (constant_zero_rep(false), constant_zero_rep(true));
    for r in [&r1, &r2] {
        let v = validate_representative(r);
        ensure!(v.is_valid(), "{}", v);
    }
    let (h1, h2) = (to_hom(&r1, &atlas_v1()).unwrap(), to_hom(&r2, &atlas_v1()).unwrap());
    let minus = Embedding::new("V1", "V1", neg());
    let mut probes = chart_probes(&v1());
    for x in (-7..8).map(|k| q(k, 8)) {
        if !probes.contains(&x) {
            probes.push(x);
        }
    }
    for x in &probes {
        let (a, b) = (h1.apply_germ(&minus, x).unwrap(), h2.apply_germ(&minus, x).unwrap());
        ensure!(a != b, "images of germ_{}(-id) agree", x);
    }
    ensure!(!representatives_equivalent(&r1, &r2).unwrap(), "representatives equivalent");
    Ok(format!("both valid; homs differ on germ_x(-id) at all {} probes; not equivalent", probes.len()))
}

fn fixture_reps() -> Vec<MapRep> {
    let mut v = vec![constant_zero_rep(false), constant_zero_rep(true), square_rep(), identity_rep(&atlas_v1()).unwrap()];
    v.extend((0..IDENTITY_LIFT_COUNT).map(|k| identity_lift(k).rep));
    v
}

fn same_on_generators(a: &GroupoidHom, b: &GroupoidHom) -> bool {
    a.arrow_map.iter().all(|s| {
        s.generator.map.domain().intervals().iter().filter_map(Interval::sample).all(|x| {
            matches!((a.apply_germ(&s.generator, &x), b.apply_germ(&s.generator, &x)), (Ok(g), Ok(h)) if g == h)
        })
    })
}

fn criterion_6() -> Verdict {
    let reps = fixture_reps();
    for r in &reps {
        let (src, dst) = (MarkedAtlasGroupoid::build(&r.src).unwrap(), MarkedAtlasGroupoid::build(&r.dst).unwrap());
        let h = to_hom(r, &r.dst).map_err(|e| e.to_string())?;
        let back = from_hom(&h, &src, &dst).map_err(|e| e.to_string())?;
        ensure!(representatives_equivalent(&back, r) == Ok(true), "F1(F2(r)) differs from\n{}", r);
        let again = to_hom(&back, &r.dst).map_err(|e| e.to_string())?;
        ensure!(same_on_generators(&h, &again), "F2(F1(h)) differs on generators");
    }
    Ok(format!("round trips hold for {} representatives and their homs", reps.len()))
}

fn criterion_7() -> Verdict {
    let mut atlases = vec![atlas_v1(), atlas_v2(), two_chart_manifold(), trivial_manifold()];
    atlases.extend((0..IDENTITY_LIFT_COUNT).map(|k| identity_lift(k).rep.src));
    atlases.push(reflection_atlas(&q(1, 4), &q(3, 4), &qi(2), &[(Piecelet::Symmetric(q(1, 2)), qi(2)), (Piecelet::Side(q(1, 8), q(5, 8)), qi(-3))]));
    for a in &atlases {
        let text = MarkedAtlasGroupoid::build(a).unwrap().serialize(true);
        let back = recover_atlas(&text).map_err(|e| e.to_string())?;
        ensure!(back == a.canonical(), "recovered atlas differs");
        ensure!(MarkedAtlasGroupoid::build(&back).unwrap().serialize(true) == text, "re-serialization differs");
    }
    Ok(format!("recover o build = id on {} atlases, byte-exact", atlases.len()))
}

fn criterion_8() -> Verdict {
    let v = v1_groupoid();
    for k in 0..IDENTITY_LIFT_COUNT {
        let m = identity_lift(k);
        let h = to_hom(&m.rep, &atlas_v1()).unwrap();
        let c = unit_weak_equivalence_check(&h, &MarkedAtlasGroupoid::build(&m.rep.src).unwrap(), &v);
        ensure!(c.by_lift && c.by_structure, "identity lift {} gave {:?}", k, c);
    }
    let sq = to_hom(&square_rep(), &atlas_v1()).unwrap();
    let c = unit_weak_equivalence_check(&sq, &MarkedAtlasGroupoid::build(&atlas_v2()).unwrap(), &v);
    ensure!(!c.by_lift && !c.by_structure, "x² hom gave {:?}", c);
    let zero_hom = to_hom(&constant_zero_rep(false), &atlas_v1()).unwrap();
    let c = unit_weak_equivalence_check(&zero_hom, &v, &v);
    ensure!(!c.by_lift && !c.by_structure, "constant hom gave {:?}", c);
    Ok(format!("{} identity lifts are unit weak equivalences, x² and constant 0 are not; checks agree", IDENTITY_LIFT_COUNT))
}

fn criterion_9() -> Verdict {
    let lifts: Vec<ChartedMap> = (0..IDENTITY_LIFT_COUNT).map(identity_lift).collect();
    let mut n = 0;
    for i in 0..lifts.len() {
        for j in i..lifts.len() {
            let WitnessSearch::Found(w) = common_refinement_witness(&lifts[i], &lifts[j]) else {
                return Err(format!("no witness for ({}, {})", i, j));
            };
            ensure!(verify_equivalence_witness(&lifts[i], &lifts[j], &w), "witness ({}, {}) fails", i, j);
            ensure!(verify_equivalence_witness(&lifts[j], &lifts[i], &w.mirrored()), "mirrored witness ({}, {}) fails", j, i);
            n += if i == j { 1 } else { 2 };
        }
    }
    Ok(format!("witnesses found and verified for all {} ordered pairs", n))
}

/// A random restriction atlas of `V₁` lifted onto `V₁` by `±x` per chart.
fn random_identity_lift(rng: &mut ChaCha8Rng, name: &str) -> ChartedMap {
    let a: i64 = rng.gen_range(2..8);
    let mut charts = vec![(Interval::open(q(-a, 8), q(a, 8)), rng.gen_bool(0.5))];
    for _ in 0..rng.gen_range(1..3) {
        let b: i64 = rng.gen_range(1..a);
        let side = if rng.gen_bool(0.5) { Interval::open(qi(-1), q(-b, 8)) } else { Interval::open(q(b, 8), one()) };
        charts.push((side, rng.gen_bool(0.5)));
    }
    identity_lift_over(&charts, name)
}

fn criterion_10() -> Verdict {
    let v = v1_groupoid();
    let (phi, psi) = (to_hom(&constant_zero_rep(false), &atlas_v1()).unwrap(), to_hom(&constant_zero_rep(true), &atlas_v1()).unwrap());
    match refute_hom_equivalence(&phi, &v, &psi, &v).map_err(|e| e.to_string())? {
        Refutation::Certificate { point, first: 1, second: 2, .. } if point.x == zero() => {}
        r => return Err(format!("expected a certificate at 0 with sizes 1 vs 2, got {}", r)),
    }
    // classes: each base map and its composites with random identity lifts,
    // each composite joined to its base by a verified witness
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b1f);
    let bases =
        [identity_rep(&atlas_v1()).unwrap(), constant_zero_rep(false), constant_zero_rep(true)].map(|r| ChartedMap::new(r, "V1", "V1"));
    let mut classes: Vec<Vec<(GroupoidHom, MarkedAtlasGroupoid)>> = Vec::new();
    for g in &bases {
        let mut class = vec![(to_hom(&g.rep, &atlas_v1()).unwrap(), v.clone())];
        for k in 0..6 {
            let e = random_identity_lift(&mut rng, &format!("R{}", k));
            let c = compose_reps(g, &e).map_err(|e| e.to_string())?;
            let WitnessSearch::Found(w) = common_refinement_witness(g, &c) else {
                return Err(format!("no witness joining a composite to its base:\n{}", c.rep));
            };
            ensure!(verify_equivalence_witness(g, &c, &w), "witness does not verify");
            class.push((to_hom(&c.rep, &atlas_v1()).unwrap(), MarkedAtlasGroupoid::build(&c.rep.src).unwrap()));
        }
        classes.push(class);
    }
    for _ in 0..100 {
        let class = &classes[rng.gen_range(0..classes.len())];
        let (a, b) = (&class[rng.gen_range(0..class.len())], &class[rng.gen_range(0..class.len())]);
        let r = refute_hom_equivalence(&a.0, &a.1, &b.0, &b.1).map_err(|e| e.to_string())?;
        ensure!(r == Refutation::NoRefutation, "certificate for a witness-connected pair: {}", r);
    }
    Ok("certificate at 0 with sizes 1 vs 2; none over 100 witness-connected pairs".into())
}

fn random_reflection_atlas(rng: &mut ChaCha8Rng) -> Atlas {
    let c = q(rng.gen_range(-4..5), 4);
    let a: i64 = rng.gen_range(4..17);
    let s = [qi(1), qi(2), q(1, 2)][rng.gen_range(0..3)].clone();
    let mut extras = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        let shape = if rng.gen_bool(0.5) {
            Piecelet::Symmetric(q(rng.gen_range(1..a), 8))
        } else {
            let u = rng.gen_range(0..a);
            let w = rng.gen_range(u + 1..=a);
            if rng.gen_bool(0.5) {
                Piecelet::Side(q(-w, 8), q(-u, 8))
            } else {
                Piecelet::Side(q(u, 8), q(w, 8))
            }
        };
        extras.push((shape, qi(rng.gen_range(-3..4))));
    }
    reflection_atlas(&c, &q(a, 8), &s, &extras)
}

fn after(b: &GermArrow, a: &GermArrow) -> Option<Germ> {
    Germ::of(&compose(&b.rep, &a.rep).ok()?, &a.source.x).ok()
}

fn criterion_11() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut triples = 0usize;
    let cases = 10;
    for _ in 0..cases {
        let a = random_reflection_atlas(&mut rng);
        ensure!(a.charts.len() <= 3 && validate_atlas(&a).is_valid(), "generated atlas invalid");
        let g = MarkedAtlasGroupoid::build(&a).unwrap();
        let mut memo: BTreeMap<ObjPoint, Vec<GermArrow>> = BTreeMap::new();
        let mut from = |x: &ObjPoint| -> Result<Vec<GermArrow>, String> {
            if !memo.contains_key(x) {
                let s = g.saturate(x).map_err(|e| e.to_string())?;
                ensure!(s.status == SaturationStatus::Saturated, "saturation capped at {}", x);
                memo.insert(x.clone(), s.arrows);
            }
            Ok(memo[x].clone())
        };
        for x in g.probe_objects() {
            let out = from(&x)?;
            ensure!(out.iter().any(|f| f.target == x && f.germ.is_identity()), "(i) no unit at {}", x);
            let chart = g.chart(&x.chart).unwrap();
            let oracle = chart.group.iter().filter(|h| h.eval_q(&x.x).ok().as_ref() == Some(&x.x)).count();
            ensure!(out.iter().filter(|f| f.target == x).count() == oracle, "|arrows(x,x)| != group oracle at {}", x);
            for f in &out {
                ensure!(f.source == x && f.germ.value() == Some(f.target.x.clone()), "(ii) source/target of {}", f.germ);
                let inv = invert(&f.rep).map_err(|e| e.to_string())?;
                let back = Germ::of(&inv, &f.target.x).map_err(|e| e.to_string())?;
                let from_y = from(&f.target)?;
                ensure!(from_y.iter().any(|b| b.target == x && b.germ == back), "(iv) no inverse of {}", f.germ);
                for h in &from_y {
                    let c = after(h, f).ok_or("composite")?;
                    ensure!(out.iter().any(|b| b.target == h.target && b.germ == c), "(iii) composite missing at {}", x);
                    for k in from(&h.target)?.iter().take(2) {
                        let l = compose(&k.rep, &compose(&h.rep, &f.rep).unwrap()).unwrap();
                        let r = compose(&compose(&k.rep, &h.rep).unwrap(), &f.rep).unwrap();
                        ensure!(Germ::of(&l, &x.x).ok() == Germ::of(&r, &x.x).ok(), "(v) associativity at {}", x);
                        triples += 1;
                    }
                }
            }
        }
    }
    Ok(format!("axioms and isotropy oracle hold on {} atlases, {} triples", cases, triples))
}

type Criterion = (&'static str, fn() -> Verdict);

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("incompatible charts", criterion_1),
        ("germ groupoid table", criterion_2),
        ("markings", criterion_3),
        ("no lift of the square root", criterion_4),
        ("two homs from one lift family", criterion_5),
        ("F1/F2 round trips", criterion_6),
        ("marked groupoid faithfulness", criterion_7),
        ("identity-lift characterization", criterion_8),
        ("identity class", criterion_9),
        ("non-equivalence and soundness", criterion_10),
        ("groupoid axioms", criterion_11),
    ];
    let results: Vec<(Verdict, std::time::Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let t = std::time::Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
                    (r, t.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    // bypasses libtest capture so the lines always show
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (n, ((name, _), (r, t))) in criteria.iter().zip(&results).enumerate() {
        let (tag, msg) = match r {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed.push(n + 1);
                ("FAIL", m)
            }
        };
        writeln!(out, "acceptance {:>2} {} {}: {} [{:.2}s]", n + 1, tag, name, msg, t.as_secs_f64()).unwrap();
    }
    out.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
