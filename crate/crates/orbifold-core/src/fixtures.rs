//! Worked reflection-orbifold examples over `Q = [0,1)`, used by tests and
//! the bundled scenarios.

use alloc::vec;
use alloc::vec::Vec;

use crate::charts::{restrict_chart, Atlas, Chart, Embedding, Space};
use crate::maps::{complete_identity_lift, restriction_atlas, ChartedMap, LocalLift, MapRep};
use crate::interval::{DomainSet, Interval};
use crate::rational::{one, q, qi, zero};
use crate::symfun::{parse_fn, PiecewiseFn};

fn f(s: &str) -> PiecewiseFn {
    parse_fn(s).expect("fixture function")
}

pub fn unit_interval() -> Interval {
    Interval::open(qi(-1), one())
}

/// `Q = [0,1)`.
pub fn half_open_space() -> Space {
    Space { carrier: DomainSet::single(Interval::closed_open(zero(), one())) }
}

pub fn neg() -> PiecewiseFn {
    f("piece(-1, odd, 0, 1, 0) on (-1,1)")
}

pub fn reflection_group() -> Vec<PiecewiseFn> {
    vec![PiecewiseFn::identity_on(&unit_interval()), neg()]
}

/// `((−1,1), {±id}, |x|)`.
pub fn v1() -> Chart {
    Chart::new(
        "V1",
        unit_interval(),
        reflection_group(),
        f("piece(1, even, 0, 1, 0) on (-1,1)"),
        Interval::closed_open(zero(), one()),
    )
}

/// `((−1,1), {±id}, x²)`.
pub fn v2() -> Chart {
    Chart::new(
        "V2",
        unit_interval(),
        reflection_group(),
        f("piece(1, even, 0, 2, 0) on (-1,1)"),
        Interval::closed_open(zero(), one()),
    )
}

pub fn atlas_v1() -> Atlas {
    Atlas::new(half_open_space(), vec![v1()], vec![])
}

pub fn atlas_v2() -> Atlas {
    Atlas::new(half_open_space(), vec![v2()], vec![])
}

/// `(0,2)` covered by `(0,3/2)` and `(1/2,2)` with trivial groups.
pub fn two_chart_manifold() -> Atlas {
    let a = Interval::open(zero(), q(3, 2));
    let b = Interval::open(q(1, 2), qi(2));
    let ca = Chart::new("A", a.clone(), vec![PiecewiseFn::identity_on(&a)], PiecewiseFn::identity_on(&a), a.clone());
    let cb = Chart::new("B", b.clone(), vec![PiecewiseFn::identity_on(&b)], PiecewiseFn::identity_on(&b), b.clone());
    let w = Embedding::new("A", "B", PiecewiseFn::identity_on(&Interval::open(q(1, 2), q(3, 2))));
    Atlas::new(Space { carrier: DomainSet::single(Interval::open(zero(), qi(2))) }, vec![ca, cb], vec![w])
}

/// One chart `(0,1)` with the trivial group over `Q = (0,1)`.
pub fn trivial_manifold() -> Atlas {
    let i = Interval::open(zero(), one());
    let c = Chart::new("M", i.clone(), vec![PiecewiseFn::identity_on(&i)], PiecewiseFn::identity_on(&i), i.clone());
    Atlas::new(Space { carrier: DomainSet::single(i) }, vec![c], vec![])
}

/// Shape of an extra chart in [`reflection_atlas`], in model coordinates
/// relative to the reflection center.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Piecelet {
    /// `(c−b, c+b)`, keeps the reflection.
    Symmetric(crate::Q),
    /// `(c+u, c+v)` with `0 ≤ u < v` or `u < v ≤ 0`, trivial group.
    Side(crate::Q, crate::Q),
}

/// A reflection orbifold: the model chart `(c−a, c+a)` with group
/// `{id, x ↦ 2c−x}` and projection `s·|x−c|` over `[0, s·a)`, plus
/// restrictions of the model translated by `t` and joined to it by `x ↦ x−t`.
pub fn reflection_atlas(c: &crate::Q, a: &crate::Q, s: &crate::Q, extras: &[(Piecelet, crate::Q)]) -> Atlas {
    use crate::symfun::{compose, Parity};
    let dom = Interval::open(c - a, c + a);
    let refl = PiecewiseFn::affine(qi(-1), c * qi(2), &DomainSet::single(dom.clone()));
    let proj = PiecewiseFn::single(s.clone(), Parity::Even, c.clone(), one(), zero(), dom.clone()).expect("projection");
    let model = Chart::new("M", dom.clone(), vec![PiecewiseFn::identity_on(&dom), refl], proj, Interval::closed_open(c.clone(), c + a));
    let mut charts = vec![model.clone()];
    let mut witnesses = Vec::new();
    for (n, (shape, t)) in extras.iter().enumerate() {
        let sub = match shape {
            Piecelet::Symmetric(b) => Interval::open(c - b, c + b),
            Piecelet::Side(u, v) => Interval::open(c + u, c + v),
        };
        let r = restrict_chart(&model, &sub).expect("stable restriction");
        let moved = Interval::open(sub.lo.fin().unwrap() + t, sub.hi.fin().unwrap() + t);
        let back = PiecewiseFn::affine(one(), -t.clone(), &DomainSet::single(moved.clone()));
        let fwd = PiecewiseFn::affine(one(), t.clone(), &DomainSet::single(sub.clone()));
        let conj = |g: &PiecewiseFn| compose(&fwd, &compose(g, &back).expect("conjugate")).expect("conjugate");
        let id = alloc::format!("C{}", n + 1);
        let fd = r.fundamental.clone();
        let fd = Interval::new(
            fd.lo.fin().map(|x| crate::interval::Ext::Fin(x + t)).unwrap_or(fd.lo.clone()),
            fd.hi.fin().map(|x| crate::interval::Ext::Fin(x + t)).unwrap_or(fd.hi.clone()),
            fd.lo_open,
            fd.hi_open,
        );
        let chart = Chart::new(
            &id,
            moved.clone(),
            r.group.iter().map(conj).collect(),
            compose(&r.proj, &back).expect("projection"),
            fd,
        );
        charts.push(chart);
        witnesses.push(Embedding::new(&id, "M", back));
    }
    Atlas::new(Space { carrier: DomainSet::single(Interval::closed_open(zero(), s * a)) }, charts, witnesses)
}

fn carrier() -> DomainSet {
    half_open_space().carrier
}

fn v1_transitions() -> Vec<Embedding> {
    reflection_group().into_iter().map(|g| Embedding::new("V1", "V1", g)).collect()
}

/// The constant map `q ↦ 0` on `(Q, 𝒱₁)` with lift `f̃ ≡ 0` and `P = {±id}`;
/// `ν(−id)` is `id` for the first case and `−id` for the second.
pub fn constant_zero_rep(negate: bool) -> MapRep {
    let zero_lift = PiecewiseFn::constant(zero(), &DomainSet::single(unit_interval()));
    let images = if negate { reflection_group() } else { vec![PiecewiseFn::identity_on(&unit_interval()); 2] };
    MapRep {
        src: atlas_v1(),
        dst: atlas_v1(),
        f: PiecewiseFn::constant(zero(), &carrier()),
        lifts: vec![LocalLift::new("V1", "V1", zero_lift)],
        p: v1_transitions(),
        nu: images.into_iter().map(|g| Embedding::new("V1", "V1", g)).collect(),
    }
}

/// `id_Q` from `(Q, 𝒱₂)` to `(Q, 𝒱₁)` lifted by `x ↦ x²`.
pub fn square_rep() -> MapRep {
    let id = PiecewiseFn::identity_on(&unit_interval());
    MapRep {
        src: atlas_v2(),
        dst: atlas_v1(),
        f: PiecewiseFn::identity(&carrier()),
        lifts: vec![LocalLift::new("V2", "V1", f("piece(1, even, 0, 2, 0) on (-1,1)"))],
        p: reflection_group().into_iter().map(|g| Embedding::new("V2", "V2", g)).collect(),
        nu: vec![Embedding::new("V1", "V1", id.clone()), Embedding::new("V1", "V1", id)],
    }
}

/// `q ↦ √q` on `Q`.
pub fn sqrt_map() -> PiecewiseFn {
    f("piece(1, odd, 0, 1/2, 0) on [0,1)")
}

/// The four sign choices `x ↦ ±√|x|` on each side of `0` in `V₁`.
pub fn sqrt_lift_candidates() -> Vec<LocalLift> {
    ["piece(1, even, 0, 1/2, 0)", "piece(-1, even, 0, 1/2, 0)", "piece(1, odd, 0, 1/2, 0)", "piece(-1, odd, 0, 1/2, 0)"]
        .iter()
        .map(|p| LocalLift::new("V1", "V1", f(&alloc::format!("{} on (-1,1)", p))))
        .collect()
}

/// Charts `(lo, hi)` of `V₁` with a sign for the lift `x ↦ ±x`.
type Refinement = &'static [((i64, i64), (i64, i64), bool)];

const REFINEMENTS: [Refinement; 5] = [
    &[((-1, 1), (1, 1), true)],
    &[((-1, 2), (1, 2), false), ((1, 4), (1, 1), false)],
    &[((-3, 4), (3, 4), true), ((-1, 1), (-1, 2), true)],
    &[((-1, 4), (1, 4), false), ((1, 8), (3, 4), false), ((-1, 1), (-1, 2), false)],
    &[((-1, 2), (1, 2), true), ((-1, 1), (-1, 4), true), ((1, 3), (1, 1), false)],
];

pub const IDENTITY_LIFT_COUNT: usize = REFINEMENTS.len();

/// The `k`-th generated lift of `id_Q` from a restriction atlas of `𝒱₁`.
pub fn identity_lift(k: usize) -> ChartedMap {
    let charts: Vec<(Interval, bool)> =
        REFINEMENTS[k].iter().map(|((a, b), (c, d), neg)| (Interval::open(q(*a, *b), q(*c, *d)), *neg)).collect();
    identity_lift_over(&charts, &alloc::format!("W{}", k))
}

/// The lift of `id_Q` onto `𝒱₁` from the restriction atlas with the given
/// stable intervals of `V₁`, each lifted by `x ↦ −x` when flagged, else by
/// the inclusion.
pub fn identity_lift_over(charts: &[(Interval, bool)], name: &str) -> ChartedMap {
    let base = atlas_v1();
    let v = v1();
    let mut parts = Vec::new();
    let mut lifts = Vec::new();
    for (n, (s, negate)) in charts.iter().enumerate() {
        let id = alloc::format!("W{}", n);
        let chart = restrict_chart(&v, s).expect("stable interval").with_id(&id);
        let incl = PiecewiseFn::identity_on(s);
        let lift = if *negate { PiecewiseFn::affine(qi(-1), zero(), &DomainSet::single(s.clone())) } else { incl.clone() };
        parts.push((chart, Embedding::new(&id, "V1", incl)));
        lifts.push(LocalLift::new(&id, "V1", lift));
    }
    let w = restriction_atlas(&base, &parts).expect("restriction atlas");
    let rep = complete_identity_lift(&w, &base, lifts).expect("identity lift");
    ChartedMap::new(rep, name, "V1")
}
