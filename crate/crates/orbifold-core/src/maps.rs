//! Orbifold map representatives and their groupoid homomorphisms, composition,
//! lifts of the identity, and equivalence of charted maps.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::charts::{
    charts_compatible, local_changes, maximal_stable_neighborhood, restrict_chart, validate_atlas, validate_transition, Atlas, Chart,
    ChartError, Embedding,
};
use crate::groupoid::{
    base_generators, germ_laws, induced_orbit_map, psi_generators_unchecked, validate_quasi_pseudogroup, ArrowAssignment,
    GroupoidError, GroupoidHom, MarkedAtlasGroupoid, ObjComponent, ObjPoint, QuasiPseudogroup, Saturation, Transition,
};
use crate::interval::{DomainSet, Interval};
use crate::probe;
use crate::rational::{fmt_q, Q};
use crate::report::ValidationReport;
use crate::symfun::{agreement_component, compose, invert, Germ, PiecewiseFn, Smoothness, SymError};

/// Pieces any single transition may be split into by the transport policy.
const MAX_PIECES: usize = 64;
/// Refinement pieces tried before a search gives up.
const MAX_REFINEMENT_PIECES: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("range family is not contained in the range atlas: {0}")]
    RangeFamilyNotContained(String),
    #[error("atlas mismatch: {0}")]
    AtlasMismatch(String),
    #[error("image of lift {0} is not contained in its target chart")]
    ImageNotContained(usize),
    #[error("lift {0} is not a local diffeomorphism")]
    NotLocalDiffeo(usize),
    #[error("range atlas of the first map is not the domain atlas of the second")]
    AtlasChainMismatch,
    #[error("not in fragment: {0}")]
    NotInFragment(String),
    #[error("refinement failed: {0}")]
    RefinementFailed(String),
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
}

impl From<ChartError> for MapError {
    fn from(e: ChartError) -> Self {
        match e {
            ChartError::UnknownChart(id) => MapError::UnknownChart(id),
            ChartError::Sym(s) => MapError::Sym(s),
            other => MapError::NotInFragment(other.to_string()),
        }
    }
}

/// A local lift `f̃: V → V′` of the carrier map between two charts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalLift {
    pub map: PiecewiseFn,
    pub src_chart: String,
    pub dst_chart: String,
}

impl LocalLift {
    pub fn new(src_chart: &str, dst_chart: &str, map: PiecewiseFn) -> Self {
        LocalLift { map, src_chart: src_chart.into(), dst_chart: dst_chart.into() }
    }
}

impl fmt::Display for LocalLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : {}", self.src_chart, self.dst_chart, self.map)
    }
}

/// A representative `(f, {f̃ᵢ}, P, ν)`. `nu[k]` is the image of `p[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapRep {
    pub src: Atlas,
    pub dst: Atlas,
    pub f: PiecewiseFn,
    pub lifts: Vec<LocalLift>,
    pub p: Vec<Transition>,
    pub nu: Vec<Transition>,
}

impl MapRep {
    pub fn lift(&self, chart: &str) -> Option<&LocalLift> {
        self.lifts.iter().find(|l| l.src_chart == chart)
    }

    fn lift_or_err(&self, chart: &str) -> Result<&LocalLift, MapError> {
        self.lift(chart).ok_or_else(|| MapError::UnknownChart(chart.into()))
    }

    pub fn components(&self) -> Vec<ObjComponent> {
        self.lifts
            .iter()
            .map(|l| ObjComponent { source: l.src_chart.clone(), target: l.dst_chart.clone(), map: l.map.clone() })
            .collect()
    }
}

impl fmt::Display for MapRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rep")?;
        writeln!(f, "map {}", self.f)?;
        for l in &self.lifts {
            writeln!(f, "lift {}", l)?;
        }
        for (p, n) in self.p.iter().zip(&self.nu) {
            writeln!(f, "nu {} => {}", p, n)?;
        }
        write!(f, "end")
    }
}

/// A representative together with the names of its domain and range atlases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartedMap {
    pub rep: MapRep,
    pub domain_atlas: String,
    pub range_atlas: String,
}

impl ChartedMap {
    pub fn new(rep: MapRep, domain_atlas: &str, range_atlas: &str) -> Self {
        ChartedMap { rep, domain_atlas: domain_atlas.into(), range_atlas: range_atlas.into() }
    }
}

/// Data showing two charted maps equivalent: identity lifts
/// `ε₁, ε₂: 𝒲 → 𝒱₁, 𝒱₂`, `ε′₁, ε′₂: 𝒲′ → 𝒱′₁, 𝒱′₂` and a bridge `ĥ: 𝒲 → 𝒲′`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceWitness {
    pub w: Atlas,
    pub w_prime: Atlas,
    pub eps1: ChartedMap,
    pub eps2: ChartedMap,
    pub eps1_prime: ChartedMap,
    pub eps2_prime: ChartedMap,
    pub h: ChartedMap,
}

impl EquivalenceWitness {
    /// The same witness for the swapped pair of maps.
    pub fn mirrored(&self) -> Self {
        EquivalenceWitness {
            eps1: self.eps2.clone(),
            eps2: self.eps1.clone(),
            eps1_prime: self.eps2_prime.clone(),
            eps2_prime: self.eps1_prime.clone(),
            ..self.clone()
        }
    }
}

impl fmt::Display for EquivalenceWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "witness")?;
        for c in &self.w.charts {
            writeln!(f, "chart {} {}", c.id, c.domain)?;
        }
        for c in &self.w_prime.charts {
            writeln!(f, "range-chart {} {}", c.id, c.domain)?;
        }
        for (name, m) in [("eps1", &self.eps1), ("eps2", &self.eps2), ("eps1'", &self.eps1_prime), ("eps2'", &self.eps2_prime), ("h", &self.h)] {
            for l in &m.rep.lifts {
                writeln!(f, "{} {}", name, l)?;
            }
        }
        write!(f, "end")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessSearch {
    Found(alloc::boxed::Box<EquivalenceWitness>),
    Unknown(String),
}

/// Checks `π′∘f̃ = f∘π` as piece forms, smoothness, domain and image.
pub fn verify_local_lift(ft: &LocalLift, f: &PiecewiseFn, c: &Chart, c2: &Chart) -> ValidationReport {
    let mut rep = ValidationReport::new();
    if ft.map.domain() != c.dom_set() {
        rep.fail("lift-domain", alloc::format!("lift on `{}` has domain {}", c.id, ft.map.domain()));
    }
    match ft.map.image() {
        Ok(img) if img.is_subset(&c2.dom_set()) => {}
        Ok(img) => rep.fail("lift-image", alloc::format!("image {} leaves `{}`", img, c2.id)),
        Err(e) => rep.unknown("lift-image", e.to_string()),
    }
    match (compose(&c2.proj, &ft.map), compose(f, &c.proj)) {
        (Ok(l), Ok(r)) if l == r => {}
        (Ok(l), Ok(r)) => rep.fail("lift-square", alloc::format!("projection of the lift is {} but the map after projection is {}", l, r)),
        (Err(e), _) | (_, Err(e)) => rep.unknown("lift-square", e.to_string()),
    }
    if let Smoothness::NotSmooth { at, order, .. } = ft.map.is_smooth() {
        rep.fail("lift-smooth", alloc::format!("NotSmooth({}, order {})", fmt_q(&at), order));
    }
    rep
}

fn element_points(l: &Transition) -> Vec<Q> {
    let mut pts = Vec::new();
    for i in l.map.domain().intervals() {
        pts.extend(probe::grid(i, &[&l.map], &[]).into_iter().filter(|x| i.contains_interior(x)));
    }
    pts
}

fn germ_matches(l: &Transition, x: &Q, g: &Germ) -> bool {
    l.map.defined_near(x) && Germ::of(&l.map, x).ok().as_ref() == Some(g)
}

/// Verifies (R1)–(R4) for a representative.
pub fn validate_representative(r: &MapRep) -> ValidationReport {
    let mut rep = ValidationReport::new();
    rep.absorb("domain atlas: ", validate_atlas(&r.src));
    rep.absorb("range atlas: ", validate_atlas(&r.dst));
    // R1
    if r.f.domain() != r.src.space.carrier {
        rep.fail("R1", alloc::format!("map has domain {} instead of {}", r.f.domain(), r.src.space.carrier));
    }
    if !r.f.is_continuous() {
        rep.fail("R1", "map is not continuous");
    }
    match r.f.image() {
        Ok(img) if img.is_subset(&r.dst.space.carrier) => {}
        Ok(img) => rep.fail("R1", alloc::format!("image {} leaves the range space", img)),
        Err(e) => rep.unknown("R1", e.to_string()),
    }
    // R2
    for c in &r.src.charts {
        let n = r.lifts.iter().filter(|l| l.src_chart == c.id).count();
        if n != 1 {
            rep.fail("R2", alloc::format!("chart `{}` has {} lifts", c.id, n));
        }
    }
    for l in &r.lifts {
        match (r.src.chart(&l.src_chart), r.dst.chart(&l.dst_chart)) {
            (Ok(c), Ok(c2)) => rep.absorb(&alloc::format!("R2 lift on `{}`: ", c.id), verify_local_lift(l, &r.f, c, c2)),
            _ => rep.fail("R2", alloc::format!("lift {} uses an unknown chart", l)),
        }
    }
    if rep.has_failures() {
        return rep;
    }
    // R3
    if r.p.len() != r.nu.len() {
        rep.fail("R3", "P and ν have different lengths");
        return rep;
    }
    for (i, l) in r.p.iter().enumerate() {
        match (r.src.chart(&l.source), r.src.chart(&l.target)) {
            (Ok(s), Ok(t)) => rep.absorb(&alloc::format!("R3 element {}: ", i), validate_transition(l, s, t)),
            _ => rep.fail("R3", alloc::format!("element {} uses an unknown chart", i)),
        }
    }
    rep.absorb("R3 ", validate_quasi_pseudogroup(&QuasiPseudogroup { elements: r.p.clone() }));
    for g in base_generators(&r.src) {
        for x in element_points(&g) {
            let Ok(gx) = Germ::of(&g.map, &x) else { continue };
            if !r.p.iter().any(|l| l.source == g.source && l.target == g.target && germ_matches(l, &x, &gx)) {
                rep.fail("R3-generation", alloc::format!("germ of {} at {} is missing from P", g, fmt_q(&x)));
            }
        }
    }
    // R4a
    for (i, (l, n)) in r.p.iter().zip(&r.nu).enumerate() {
        let (Some(ls), Some(lt)) = (r.lift(&l.source), r.lift(&l.target)) else { continue };
        if n.source != ls.dst_chart || n.target != lt.dst_chart {
            rep.fail("R4a", alloc::format!("image of element {} joins the wrong charts", i));
            continue;
        }
        if let (Ok(s), Ok(t)) = (r.dst.chart(&n.source), r.dst.chart(&n.target)) {
            rep.absorb(&alloc::format!("R4a image {}: ", i), validate_transition(n, s, t));
        }
        let lhs = compose(&lt.map, &l.map);
        let rhs = compose(&n.map, &ls.map.restrict(&l.map.domain()));
        match (lhs, rhs) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => rep.fail("R4a", alloc::format!("lifts do not intertwine element {} with its image", i)),
            (Err(e), _) | (_, Err(e)) => rep.unknown("R4a", alloc::format!("element {}: {}", i, e)),
        }
    }
    if rep.has_failures() {
        return rep;
    }
    rep.absorb("R4 ", germ_laws(&r.src, &r.components(), &r.p, &r.nu));
    rep
}

/// F1: the homomorphism `φ₀ = ⊔f̃ᵢ`, `φ₁(germ λ) = germ ν(λ)`.
pub fn to_hom(r: &MapRep, range_atlas: &Atlas) -> Result<GroupoidHom, MapError> {
    for l in &r.lifts {
        if range_atlas.chart(&l.dst_chart).is_err() {
            return Err(MapError::RangeFamilyNotContained(l.dst_chart.clone()));
        }
    }
    for n in &r.nu {
        for id in [&n.source, &n.target] {
            if range_atlas.chart(id).is_err() {
                return Err(MapError::RangeFamilyNotContained(id.clone()));
            }
        }
    }
    Ok(GroupoidHom {
        obj_map: r.components(),
        arrow_map: r.p.iter().zip(&r.nu).map(|(g, i)| ArrowAssignment { generator: g.clone(), image: i.clone() }).collect(),
    })
}

/// F2: repackages a homomorphism as a representative over the groupoids' atlases.
pub fn from_hom(h: &GroupoidHom, src: &MarkedAtlasGroupoid, dst: &MarkedAtlasGroupoid) -> Result<MapRep, MapError> {
    let f = induced_orbit_map(h, src, dst)?;
    let mut lifts = Vec::new();
    for c in &src.atlas.charts {
        let comp = h.component(&c.id).ok_or_else(|| MapError::UnknownChart(c.id.clone()))?;
        lifts.push(LocalLift::new(&comp.source, &comp.target, comp.map.clone()));
    }
    Ok(MapRep {
        src: src.atlas.clone(),
        dst: dst.atlas.clone(),
        f,
        lifts,
        p: h.arrow_map.iter().map(|a| a.generator.clone()).collect(),
        nu: h.arrow_map.iter().map(|a| a.image.clone()).collect(),
    })
}

/// Same map with domain atlas, equal lifts, and equal `ν`-germs wherever the
/// `P`-germs agree on the probe grid.
pub fn representatives_equivalent(r1: &MapRep, r2: &MapRep) -> Result<bool, MapError> {
    if r1.src.canonical() != r2.src.canonical() {
        return Err(MapError::AtlasMismatch("domain atlases differ".into()));
    }
    if r1.dst.canonical() != r2.dst.canonical() {
        return Err(MapError::AtlasMismatch("range atlases differ".into()));
    }
    if r1.f != r2.f {
        return Ok(false);
    }
    for c in &r1.src.charts {
        if r1.lift(&c.id) != r2.lift(&c.id) {
            return Ok(false);
        }
    }
    for (a, n1) in r1.p.iter().zip(&r1.nu) {
        let Some(lift) = r1.lift(&a.source) else { return Ok(false) };
        for (b, n2) in r2.p.iter().zip(&r2.nu) {
            if a.source != b.source || a.target != b.target {
                continue;
            }
            let d = a.map.domain().intersect(&b.map.domain());
            for comp in d.intervals() {
                let la = lift.map.restrict_interval(comp);
                let mut extra = Vec::new();
                for n in [n1, n2] {
                    if let Ok(c) = compose(&n.map, &la) {
                        extra.extend(c.special_points());
                    }
                }
                for x in probe::grid(comp, &[&a.map, &b.map, &la], &extra) {
                    if !comp.contains_interior(&x) {
                        continue;
                    }
                    let (Ok(ga), Ok(gb)) = (Germ::of(&a.map, &x), Germ::of(&b.map, &x)) else { continue };
                    if ga != gb {
                        continue;
                    }
                    let y = la.eval_q(&x)?;
                    match (Germ::of(&n1.map, &y), Germ::of(&n2.map, &y)) {
                        (Ok(g1), Ok(g2)) if g1 == g2 => {}
                        _ => return Ok(false),
                    }
                }
            }
        }
    }
    Ok(true)
}

/// `μ⁻¹∘f̃∘λ`.
pub fn induce_local_lift(ft: &LocalLift, lambda: &Embedding, mu: &Embedding) -> Result<LocalLift, MapError> {
    if lambda.target != ft.src_chart || mu.target != ft.dst_chart {
        return Err(MapError::AtlasMismatch(alloc::format!("embeddings do not meet the lift {}", ft)));
    }
    let inner = compose(&ft.map, &lambda.map)?;
    if inner.domain() != lambda.map.domain() || !inner.image()?.is_subset(&mu.map.image()?) {
        return Err(MapError::ImageNotContained(0));
    }
    let map = compose(&invert(&mu.map)?, &inner)?;
    Ok(LocalLift::new(&lambda.source, &mu.source, map))
}

/// The unique-up-to-equivalence `(P, ν)` completing lifts of `id_Q`:
/// `ν(λ|C) = f̃ⱼ∘λ∘(f̃ᵢ|C)⁻¹` on each component `C` of `dom λ`.
pub fn complete_identity_lift(src: &Atlas, dst: &Atlas, lifts: Vec<LocalLift>) -> Result<MapRep, MapError> {
    for (i, l) in lifts.iter().enumerate() {
        if !l.map.is_local_diffeomorphism().is_diffeo() {
            return Err(MapError::NotLocalDiffeo(i));
        }
    }
    let mut ordered = Vec::new();
    for c in &src.charts {
        let l = lifts.iter().find(|l| l.src_chart == c.id).ok_or_else(|| MapError::UnknownChart(c.id.clone()))?;
        ordered.push(l.clone());
    }
    let rep = MapRep {
        src: src.clone(),
        dst: dst.clone(),
        f: PiecewiseFn::identity(&src.space.carrier),
        lifts: ordered,
        p: Vec::new(),
        nu: Vec::new(),
    };
    let (mut p, mut nu) = (Vec::new(), Vec::new());
    for l in psi_generators_unchecked(src).elements {
        let (ls, lt) = (rep.lift_or_err(&l.source)?, rep.lift_or_err(&l.target)?);
        for comp in l.map.domain().intervals() {
            let lc = l.map.restrict_interval(comp);
            let back = invert(&ls.map.restrict_interval(comp))?;
            let n = compose(&lt.map, &compose(&lc, &back)?)?;
            p.push(Embedding::new(&l.source, &l.target, lc));
            nu.push(Embedding::new(&ls.dst_chart, &lt.dst_chart, n));
        }
    }
    Ok(MapRep { p, nu, ..rep })
}

/// The identity lift of an atlas onto itself.
pub fn identity_rep(a: &Atlas) -> Result<MapRep, MapError> {
    let lifts = a.charts.iter().map(|c| LocalLift::new(&c.id, &c.id, c.identity())).collect();
    complete_identity_lift(a, a, lifts)
}

/// Is `m` a lift of the identity: carrier map `id_Q`, local diffeomorphic
/// lifts, and domain and range charts pairwise compatible?
pub fn is_identity_lift(m: &ChartedMap) -> bool {
    let r = &m.rep;
    if r.src.space != r.dst.space || r.f != PiecewiseFn::identity(&r.src.space.carrier) {
        return false;
    }
    if !r.lifts.iter().all(|l| l.map.is_local_diffeomorphism().is_diffeo()) {
        return false;
    }
    r.src.charts.iter().all(|c| r.dst.charts.iter().all(|d| charts_compatible(d, c).is_compatible()))
}

fn next_point(todo: &DomainSet, f: &PiecewiseFn) -> Option<Q> {
    let comp = todo.intervals().first()?;
    probe::grid(comp, &[f], &[]).into_iter().find(|x| comp.contains(x)).or_else(|| comp.sample())
}

fn component_around(d: &DomainSet, x: &Q) -> Option<Interval> {
    let c = d.component_of(x)?.interior();
    if c.contains(x) {
        Some(c)
    } else {
        None
    }
}

/// Splits each transition into restrictions `γ|U` around successive probe
/// points, pairing each with the image `choose` certifies on `U`.
fn transport<F>(gammas: &[Transition], mut choose: F) -> Result<(Vec<Transition>, Vec<Transition>), MapError>
where
    F: FnMut(usize, &Q) -> Result<(Interval, Transition), MapError>,
{
    let (mut p, mut nu): (Vec<Transition>, Vec<Transition>) = (Vec::new(), Vec::new());
    for (i, g) in gammas.iter().enumerate() {
        let dom = g.map.domain();
        let mut todo = dom.clone();
        let mut pieces = 0;
        while let Some(x) = next_point(&todo, &g.map) {
            pieces += 1;
            if pieces > MAX_PIECES {
                return Err(MapError::NotInFragment(alloc::format!("{} needs more than {} pieces", g, MAX_PIECES)));
            }
            let (u, image) = choose(i, &x)?;
            let u = component_around(&dom.intersect_interval(&u), &x)
                .ok_or_else(|| MapError::NotInFragment(alloc::format!("no neighbourhood of {} for {}", fmt_q(&x), g)))?;
            let piece = Embedding::new(&g.source, &g.target, g.map.restrict_interval(&u));
            if !p.iter().zip(&nu).any(|(a, b)| *a == piece && *b == image) {
                p.push(piece);
                nu.push(image);
            }
            todo = todo.minus(&DomainSet::single(u));
        }
    }
    Ok((p, nu))
}

fn first_matching<'a>(p: &'a [Transition], source: &str, target: &str, y: &Q, g: &Germ) -> Option<(usize, &'a Transition)> {
    p.iter().enumerate().find(|(_, l)| l.source == source && l.target == target && germ_matches(l, y, g))
}

fn preimage(f: &PiecewiseFn, s: &DomainSet) -> Result<DomainSet, SymError> {
    let mut atoms = Vec::new();
    for i in s.intervals() {
        atoms.extend(PiecewiseFn::identity_on(i).atoms());
    }
    Ok(compose(&PiecewiseFn::from_atoms(atoms)?, f)?.domain())
}

fn compose_maprep(g: &MapRep, f: &MapRep) -> Result<MapRep, MapError> {
    if f.dst.canonical() != g.src.canonical() {
        return Err(MapError::AtlasChainMismatch);
    }
    let h = compose(&g.f, &f.f)?;
    let mut lifts = Vec::new();
    for fl in &f.lifts {
        let gl = g.lift(&fl.dst_chart).ok_or(MapError::AtlasChainMismatch)?;
        lifts.push(LocalLift::new(&fl.src_chart, &gl.dst_chart, compose(&gl.map, &fl.map)?));
    }
    let (p, nu) = transport(&f.p, |i, x| {
        let (mu, nf) = (&f.p[i], &f.nu[i]);
        let fl = f.lift_or_err(&mu.source)?;
        let y = fl.map.eval_q(x)?;
        let gn = Germ::of(&nf.map, &y)?;
        let (k, xi) = first_matching(&g.p, &nf.source, &nf.target, &y, &gn)
            .ok_or_else(|| MapError::NotInFragment(alloc::format!("no element of P_g matches {} at {}", nf, fmt_q(&y))))?;
        let agree = agreement_component(&xi.map, &nf.map, &y)
            .ok_or_else(|| MapError::NotInFragment(alloc::format!("no agreement around {}", fmt_q(&y))))?;
        let pre = preimage(&fl.map.restrict(&mu.map.domain()), &DomainSet::single(agree))?;
        let u = component_around(&pre, x).ok_or_else(|| MapError::NotInFragment(alloc::format!("degenerate piece at {}", fmt_q(x))))?;
        Ok((u, g.nu[k].clone()))
    })?;
    Ok(MapRep { src: f.src.clone(), dst: g.dst.clone(), f: h, lifts, p, nu })
}

/// `ĝ∘f̂` by the germ-matching policy: for each element of `P_f` and probe
/// point, the first element of `P_g` matching the image germ.
pub fn compose_reps(g: &ChartedMap, f: &ChartedMap) -> Result<ChartedMap, MapError> {
    let rep = compose_maprep(&g.rep, &f.rep)?;
    Ok(ChartedMap::new(rep, &f.domain_atlas, &g.range_atlas))
}

/// Atlas on the same space from charts `W` with embeddings `λ: W → V` into
/// `base`. Witnesses are the changes of charts of `base` pulled back.
pub fn restriction_atlas(base: &Atlas, parts: &[(Chart, Embedding)]) -> Result<Atlas, MapError> {
    let gens = psi_generators_unchecked(base).elements;
    let mut witnesses: Vec<Embedding> = Vec::new();
    for (a, (ca, la)) in parts.iter().enumerate() {
        for (cb, lb) in parts.iter().skip(a) {
            let back = invert(&lb.map)?;
            for g in gens.iter().filter(|g| g.source == la.target && g.target == lb.target) {
                let w = compose(&back, &compose(&g.map, &la.map)?)?;
                if w.is_empty() {
                    continue;
                }
                if ca.id == cb.id && ca.group.iter().any(|e| crate::symfun::extends(e, &w)) {
                    continue;
                }
                let e = Embedding::new(&ca.id, &cb.id, w);
                if !witnesses.contains(&e) {
                    witnesses.push(e);
                }
            }
        }
    }
    Ok(Atlas::new(base.space.clone(), parts.iter().map(|(c, _)| c.clone()).collect(), witnesses))
}

/// The map induced on `(𝒲, 𝒲′)`: `h̃ⱼ = μ⁻¹∘f̃∘λⱼ` where `targets[j]` names
/// the chart of `𝒲′` receiving `Wⱼ`; `(P, ν)` transported from `f̂`.
fn induce_onto(
    f: &MapRep,
    w: &Atlas,
    lambdas: &[Embedding],
    w_prime: &Atlas,
    mus: &[Embedding],
    targets: &[String],
) -> Result<MapRep, MapError> {
    let lam = |id: &str| lambdas.iter().find(|l| l.source == id).ok_or_else(|| MapError::UnknownChart(id.into()));
    let mu = |id: &str| mus.iter().find(|l| l.source == id).ok_or_else(|| MapError::UnknownChart(id.into()));
    let mut lifts = Vec::new();
    for (j, c) in w.charts.iter().enumerate() {
        let l = lam(&c.id)?;
        let m = mu(&targets[j])?;
        let fl = f.lift_or_err(&l.target)?;
        let h = induce_local_lift(fl, l, m).map_err(|e| match e {
            MapError::ImageNotContained(_) => MapError::ImageNotContained(j),
            other => other,
        })?;
        lifts.push(h);
    }
    let shell = MapRep { src: w.clone(), dst: w_prime.clone(), f: f.f.clone(), lifts, p: Vec::new(), nu: Vec::new() };
    let gammas = psi_generators_unchecked(w).elements;
    let (p, nu) = transport(&gammas, |i, x| {
        let g = &gammas[i];
        let (lj, lk) = (lam(&g.source)?, lam(&g.target)?);
        let (hj, hk) = (shell.lift_or_err(&g.source)?, shell.lift_or_err(&g.target)?);
        let (mj, mk) = (mu(&hj.dst_chart)?, mu(&hk.dst_chart)?);
        let y = lj.map.eval_q(x)?;
        let moved = compose(&lk.map, &compose(&g.map, &invert(&lj.map)?)?)?;
        let gm = Germ::of(&moved, &y)?;
        let (b, beta) = first_matching(&f.p, &lj.target, &lk.target, &y, &gm)
            .ok_or_else(|| MapError::NotInFragment(alloc::format!("no element of P matches {} at {}", g, fmt_q(&y))))?;
        let agree = agreement_component(&beta.map, &moved, &y)
            .ok_or_else(|| MapError::NotInFragment(alloc::format!("no agreement around {}", fmt_q(&y))))?;
        let image = compose(&invert(&mk.map)?, &compose(&f.nu[b].map, &mj.map)?)?;
        let d = preimage(&lj.map, &DomainSet::single(agree))?
            .intersect(&compose(&image, &hj.map)?.domain())
            .intersect(&g.map.domain());
        let u = component_around(&d, x).ok_or_else(|| MapError::NotInFragment(alloc::format!("degenerate piece at {}", fmt_q(x))))?;
        Ok((u, Embedding::new(&hj.dst_chart, &hk.dst_chart, image)))
    })?;
    Ok(MapRep { p, nu, ..shell })
}

/// The map induced along `λⱼ: Wⱼ → V` and `μⱼ: W′ⱼ → V′`. The range family
/// is completed to an atlas by appending range charts of `f̂` with identity
/// embeddings until it covers.
pub fn induce_charted_map(
    f: &ChartedMap,
    w: &Atlas,
    lambdas: &[Embedding],
    w_prime_charts: &[Chart],
    mus: &[Embedding],
) -> Result<ChartedMap, MapError> {
    if lambdas.len() != w.charts.len() || mus.len() != lambdas.len() {
        return Err(MapError::AtlasMismatch("one λ and one μ per chart are required".into()));
    }
    let mut parts: Vec<(Chart, Embedding)> = Vec::new();
    for m in mus {
        if parts.iter().any(|(c, _)| c.id == m.source) {
            continue;
        }
        let c = w_prime_charts.iter().find(|c| c.id == m.source).ok_or_else(|| MapError::UnknownChart(m.source.clone()))?;
        parts.push((c.clone(), m.clone()));
    }
    let carrier = &f.rep.dst.space.carrier;
    let covered = |parts: &[(Chart, Embedding)]| -> Result<bool, MapError> {
        let mut img = DomainSet::empty();
        for (c, _) in parts {
            img = img.union(&c.image()?);
        }
        Ok(carrier.is_subset(&img))
    };
    for c in &f.rep.dst.charts {
        if covered(&parts)? {
            break;
        }
        if !parts.iter().any(|(p, _)| p.id == c.id) {
            parts.push((c.clone(), Embedding::new(&c.id, &c.id, c.identity())));
        }
    }
    let w_prime = restriction_atlas(&f.rep.dst, &parts)?;
    let all_mus: Vec<Embedding> = parts.iter().map(|(_, m)| m.clone()).collect();
    let targets: Vec<String> = w
        .charts
        .iter()
        .map(|c| {
            let j = lambdas.iter().position(|l| l.source == c.id).ok_or_else(|| MapError::UnknownChart(c.id.clone()))?;
            Ok(mus[j].source.clone())
        })
        .collect::<Result<_, MapError>>()?;
    let rep = induce_onto(&f.rep, w, lambdas, &w_prime, &all_mus, &targets)?;
    Ok(ChartedMap::new(rep, &alloc::format!("{}*", f.domain_atlas), &alloc::format!("{}*", f.range_atlas)))
}

fn identity_lift_of(src: &Atlas, dst: &Atlas, lambdas: &[Embedding], name: &str) -> Result<ChartedMap, MapError> {
    let lifts = lambdas.iter().map(|l| LocalLift::new(&l.source, &l.target, l.map.clone())).collect();
    Ok(ChartedMap::new(complete_identity_lift(src, dst, lifts)?, name, "target"))
}

/// Checks both squares `ε′ᵢ∘ĥ ≡ f̂ᵢ∘εᵢ` and that the `ε`s are identity lifts.
pub fn verify_equivalence_witness(f1: &ChartedMap, f2: &ChartedMap, w: &EquivalenceWitness) -> bool {
    let same = |a: &Atlas, b: &Atlas| a.canonical() == b.canonical();
    let shapes = same(&w.eps1.rep.src, &w.w)
        && same(&w.eps2.rep.src, &w.w)
        && same(&w.h.rep.src, &w.w)
        && same(&w.eps1_prime.rep.src, &w.w_prime)
        && same(&w.eps2_prime.rep.src, &w.w_prime)
        && same(&w.h.rep.dst, &w.w_prime)
        && same(&w.eps1.rep.dst, &f1.rep.src)
        && same(&w.eps2.rep.dst, &f2.rep.src)
        && same(&w.eps1_prime.rep.dst, &f1.rep.dst)
        && same(&w.eps2_prime.rep.dst, &f2.rep.dst);
    if !shapes {
        return false;
    }
    if ![&w.eps1, &w.eps2, &w.eps1_prime, &w.eps2_prime].iter().all(|e| is_identity_lift(e)) {
        return false;
    }
    let square = |fi: &ChartedMap, e: &ChartedMap, ep: &ChartedMap| -> bool {
        match (compose_reps(ep, &w.h), compose_reps(fi, e)) {
            (Ok(a), Ok(b)) => matches!(representatives_equivalent(&a.rep, &b.rep), Ok(true)),
            _ => false,
        }
    };
    square(f1, &w.eps1, &w.eps1_prime) && square(f2, &w.eps2, &w.eps2_prime)
}

/// Points of chart `c` lying over the set `u` of the carrier.
fn points_over(u: &DomainSet, c: &Chart) -> Vec<Q> {
    let Ok(img) = c.image() else { return Vec::new() };
    let mut values = Vec::new();
    for comp in u.intervals() {
        values.extend(comp.finite_ends().into_iter().filter(|v| comp.contains(v)));
        if let Some(s) = comp.sample() {
            values.push(s);
        }
        values.extend(probe::grid(comp, &[], &[]).into_iter().filter(|v| comp.contains(v)));
    }
    let mut pts = Vec::new();
    for v in values.iter().filter(|v| img.contains(v)) {
        if let Ok(pre) = c.proj.preimages(v) {
            for x in pre.into_iter().filter(|x| c.domain.contains(x)) {
                if !pts.contains(&x) {
                    pts.push(x);
                }
            }
        }
    }
    pts
}

/// Fiber points over `v` in the charts of `a`, in chart order.
fn fiber(a: &Atlas, v: &Q) -> Vec<(usize, Q)> {
    let mut out = Vec::new();
    for (i, c) in a.charts.iter().enumerate() {
        if let Ok(pre) = c.proj.preimages(v) {
            out.extend(pre.into_iter().filter(|x| c.domain.contains(x)).map(|x| (i, x)));
        }
    }
    out
}

/// A chart restricted to `s`, renamed, with its inclusion into `c`.
fn restricted(c: &Chart, s: &Interval, id: &str) -> Result<(Chart, Embedding), MapError> {
    let r = restrict_chart(c, s)?.with_id(id);
    Ok((r, Embedding::new(id, &c.id, PiecewiseFn::identity_on(s))))
}

/// A change of charts from a neighbourhood of `x ∈ c` into some chart of `a`,
/// with the stable neighbourhood of `x` it is defined on.
fn chart_change_into(c: &Chart, x: &Q, a: &Atlas) -> Result<Option<(Interval, Embedding)>, MapError> {
    let v = c.proj.eval_q(x)?;
    for (i, xb) in fiber(a, &v) {
        let cb = &a.charts[i];
        let Ok(changes) = local_changes(cb, c, x, &xb) else { continue };
        for t in changes {
            let Some(dom) = component_around(&t.domain(), x) else { continue };
            if let Ok(s) = maximal_stable_neighborhood(x, c, &dom) {
                return Ok(Some((s.clone(), Embedding::new(&c.id, &cb.id, t.restrict_interval(&s)))));
            }
        }
    }
    Ok(None)
}

struct DomainPiece {
    s: Interval,
    chart: usize,
    tau: Embedding,
    wp: Interval,
    range_chart: usize,
    sigma: Embedding,
}

/// Do the pieces `m` and `n` carry each `ν₁(γ)` for `γ: Sₘ → Sₙ` to the
/// `ν₂`-image of `τₙ∘γ∘τₘ⁻¹`, after conjugating by the `σ`s?
fn consistent(f1: &MapRep, f2: &MapRep, m: &DomainPiece, n: &DomainPiece) -> Result<bool, MapError> {
    let (cm, cn) = (&f1.src.charts[m.chart], &f1.src.charts[n.chart]);
    let fl1 = f1.lift_or_err(&cm.id)?;
    let fl2 = f2.lift_or_err(&m.tau.target)?;
    let back_tau = invert(&m.tau.map)?;
    let back_sigma = invert(&m.sigma.map)?;
    for (g, n1) in f1.p.iter().zip(&f1.nu) {
        if g.source != cm.id || g.target != cn.id {
            continue;
        }
        let moved = compose(&n.tau.map, &compose(&g.map, &back_tau)?)?;
        let d = g.map.domain().intersect_interval(&m.s);
        let d = d.intersect(&preimage(&g.map, &DomainSet::single(n.s.clone()))?);
        for comp in d.intervals() {
            for x in probe::grid(comp, &[&g.map], &[]).into_iter().filter(|x| comp.contains_interior(x)) {
                let (xt, y2) = (m.tau.map.eval_q(&x)?, m.sigma.map.eval_q(&fl1.map.eval_q(&x)?)?);
                let gm = Germ::of(&moved, &xt)?;
                let Some((k, _)) = first_matching(&f2.p, &m.tau.target, &n.tau.target, &xt, &gm) else { return Ok(false) };
                let lhs = compose(&n.sigma.map, &compose(&n1.map, &back_sigma)?)?;
                if Germ::of(&lhs, &y2).ok() != Some(Germ::of(&f2.nu[k].map, &y2)?) || fl2.map.eval_q(&xt)? != y2 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A neighbourhood `S` of `x` in `V₁` with `τ: S → V₂` and a range
/// neighbourhood `W′ ⊇ f̃₁(S)` with `σ: W′ → V′₂` such that `f̃₂∘τ = σ∘f̃₁`.
fn domain_piece(f1: &MapRep, f2: &MapRep, a: usize, x: &Q, earlier: &[DomainPiece]) -> Result<Option<DomainPiece>, MapError> {
    let ca = &f1.src.charts[a];
    let fl1 = f1.lift_or_err(&ca.id)?;
    let rc = f1.dst.chart_index(&fl1.dst_chart).ok_or_else(|| MapError::UnknownChart(fl1.dst_chart.clone()))?;
    let cr = &f1.dst.charts[rc];
    let y1 = fl1.map.eval_q(x)?;
    let v = ca.proj.eval_q(x)?;
    for (b, xb) in fiber(&f2.src, &v) {
        let cb = &f2.src.charts[b];
        let fl2 = f2.lift_or_err(&cb.id)?;
        let cr2 = f2.dst.chart(&fl2.dst_chart)?;
        let y2 = fl2.map.eval_q(&xb)?;
        let Ok(taus) = local_changes(cb, ca, x, &xb) else { continue };
        let Ok(sigmas) = local_changes(cr2, cr, &y1, &y2) else { continue };
        for tau in &taus {
            for sigma in &sigmas {
                let Some(sd) = component_around(&sigma.domain(), &y1) else { continue };
                let Ok(wp) = maximal_stable_neighborhood(&y1, cr, &sd) else { continue };
                let allowed = tau.domain().intersect(&preimage(&fl1.map, &DomainSet::single(wp.clone()))?);
                let Some(allowed) = component_around(&allowed, x) else { continue };
                let Ok(s) = maximal_stable_neighborhood(x, ca, &allowed) else { continue };
                let t = tau.restrict_interval(&s);
                let lhs = compose(&fl2.map, &t)?;
                let rhs = compose(sigma, &fl1.map.restrict_interval(&s))?;
                if lhs != rhs {
                    continue;
                }
                let piece = DomainPiece {
                    s,
                    chart: a,
                    tau: Embedding::new("", &cb.id, t),
                    sigma: Embedding::new("", &cr2.id, sigma.restrict_interval(&wp)),
                    wp,
                    range_chart: rc,
                };
                let mut ok = consistent(f1, f2, &piece, &piece)?;
                for old in earlier {
                    if !ok {
                        break;
                    }
                    ok = consistent(f1, f2, old, &piece)? && consistent(f1, f2, &piece, old)?;
                }
                if ok {
                    return Ok(Some(piece));
                }
            }
        }
    }
    Ok(None)
}

/// Builds refinements `𝒲`, `𝒲′` per point, with the bridge induced from
/// `f̂₁`, and returns the witness if it verifies.
pub fn common_refinement_witness(f1: &ChartedMap, f2: &ChartedMap) -> WitnessSearch {
    match search_witness(f1, f2) {
        Ok(Some(w)) if verify_equivalence_witness(f1, f2, &w) => WitnessSearch::Found(alloc::boxed::Box::new(w)),
        Ok(Some(_)) => WitnessSearch::Unknown("constructed witness does not verify".into()),
        Ok(None) => WitnessSearch::Unknown("no refinement found".into()),
        Err(e) => WitnessSearch::Unknown(e.to_string()),
    }
}

fn search_witness(f1: &ChartedMap, f2: &ChartedMap) -> Result<Option<EquivalenceWitness>, MapError> {
    let (r1, r2) = (&f1.rep, &f2.rep);
    if r1.src.space != r2.src.space || r1.dst.space != r2.dst.space {
        return Err(MapError::AtlasMismatch("maps live on different spaces".into()));
    }
    if r1.f != r2.f {
        return Ok(None);
    }
    // same atlases and equivalent representatives: the identity witness
    if r1.src.canonical() == r2.src.canonical()
        && r1.dst.canonical() == r2.dst.canonical()
        && representatives_equivalent(r1, r2)?
    {
        let (es, ed) = (identity_rep(&r1.src)?, identity_rep(&r1.dst)?);
        let e = ChartedMap::new(es, &f1.domain_atlas, &f1.domain_atlas);
        let ep = ChartedMap::new(ed, &f1.range_atlas, &f1.range_atlas);
        return Ok(Some(EquivalenceWitness {
            w: r1.src.clone(),
            w_prime: r1.dst.clone(),
            eps1: e.clone(),
            eps2: e,
            eps1_prime: ep.clone(),
            eps2_prime: ep,
            h: f1.clone(),
        }));
    }
    let mut pieces: Vec<DomainPiece> = Vec::new();
    let mut uncovered = r1.src.space.carrier.clone();
    while !uncovered.is_empty() {
        if pieces.len() >= MAX_REFINEMENT_PIECES {
            return Ok(None);
        }
        let mut found = None;
        'search: for (a, c) in r1.src.charts.iter().enumerate() {
            for x in points_over(&uncovered, c) {
                if let Some(p) = domain_piece(r1, r2, a, &x, &pieces)? {
                    found = Some(p);
                    break 'search;
                }
            }
        }
        let Some(p) = found else { return Ok(None) };
        let c = &r1.src.charts[p.chart];
        uncovered = uncovered.minus(&c.proj.image_of(&p.s)?);
        pieces.push(p);
    }
    let (mut w_parts, mut lam2) = (Vec::new(), Vec::new());
    let (mut wp_parts, mut mu2) = (Vec::new(), Vec::new());
    let mut targets = Vec::new();
    for (n, p) in pieces.iter().enumerate() {
        let (id, idp) = (alloc::format!("W{}", n), alloc::format!("W{}'", n));
        w_parts.push(restricted(&r1.src.charts[p.chart], &p.s, &id)?);
        lam2.push(Embedding::new(&id, &p.tau.target, p.tau.map.clone()));
        wp_parts.push(restricted(&r1.dst.charts[p.range_chart], &p.wp, &idp)?);
        mu2.push(Embedding::new(&idp, &p.sigma.target, p.sigma.map.clone()));
        targets.push(idp);
    }
    // range charts not reached by the domain pieces
    let mut uncovered = r1.dst.space.carrier.clone();
    for (c, _) in &wp_parts {
        uncovered = uncovered.minus(&c.image()?);
    }
    while !uncovered.is_empty() {
        if wp_parts.len() >= MAX_REFINEMENT_PIECES {
            return Ok(None);
        }
        let mut found = None;
        'range: for c in &r1.dst.charts {
            for x in points_over(&uncovered, c) {
                if let Some((s, sigma)) = chart_change_into(c, &x, &r2.dst)? {
                    found = Some((c.clone(), s, sigma));
                    break 'range;
                }
            }
        }
        let Some((c, s, sigma)) = found else { return Ok(None) };
        let idp = alloc::format!("W{}'", wp_parts.len());
        uncovered = uncovered.minus(&c.proj.image_of(&s)?);
        wp_parts.push(restricted(&c, &s, &idp)?);
        mu2.push(Embedding::new(&idp, &sigma.target, sigma.map));
    }
    let w = restriction_atlas(&r1.src, &w_parts)?;
    let w_prime = restriction_atlas(&r1.dst, &wp_parts)?;
    let lam1: Vec<Embedding> = w_parts.iter().map(|(_, l)| l.clone()).collect();
    let mu1: Vec<Embedding> = wp_parts.iter().map(|(_, m)| m.clone()).collect();
    let h = induce_onto(r1, &w, &lam1, &w_prime, &mu1, &targets)?;
    Ok(Some(EquivalenceWitness {
        eps1: identity_lift_of(&w, &r1.src, &lam1, "W")?,
        eps2: identity_lift_of(&w, &r2.src, &lam2, "W")?,
        eps1_prime: identity_lift_of(&w_prime, &r1.dst, &mu1, "W'")?,
        eps2_prime: identity_lift_of(&w_prime, &r2.dst, &mu2, "W'")?,
        h: ChartedMap::new(h, "W", "W'"),
        w,
        w_prime,
    }))
}

/// `ĝ∘f̂` when the range atlas of `f̂` and the domain atlas of `ĝ` differ:
/// both are induced onto a common middle refinement and then composed.
pub fn compose_orbifold_maps(g: &ChartedMap, f: &ChartedMap) -> Result<ChartedMap, MapError> {
    if f.rep.dst.canonical() == g.rep.src.canonical() {
        return compose_reps(g, f);
    }
    let fail = |m: &str| MapError::RefinementFailed(m.into());
    if f.rep.dst.space != g.rep.src.space {
        return Err(fail("middle spaces differ"));
    }
    let (fr, gr) = (&f.rep, &g.rep);
    // middle pieces K′ ⊆ Vβ with changes of charts into the domain of ĝ
    let mut middle: Vec<(usize, Interval, Embedding)> = Vec::new();
    let add_middle = |middle: &mut Vec<(usize, Interval, Embedding)>, b: usize, y: &Q| -> Result<usize, MapError> {
        let c = &fr.dst.charts[b];
        let (s, t) = chart_change_into(c, y, &gr.src)?.ok_or_else(|| fail("no change of charts into the middle atlas"))?;
        middle.push((b, s, t));
        Ok(middle.len() - 1)
    };
    let mut pieces: Vec<(usize, Interval, usize)> = Vec::new();
    let mut uncovered = fr.src.space.carrier.clone();
    while !uncovered.is_empty() {
        if pieces.len() >= MAX_REFINEMENT_PIECES {
            return Err(fail("domain refinement does not terminate"));
        }
        let (a, x) = fr
            .src
            .charts
            .iter()
            .enumerate()
            .find_map(|(a, c)| points_over(&uncovered, c).into_iter().next().map(|x| (a, x)))
            .ok_or_else(|| fail("uncovered points without rational fibers"))?;
        let ca = &fr.src.charts[a];
        let fl = fr.lift_or_err(&ca.id)?;
        let b = fr.dst.chart_index(&fl.dst_chart).ok_or_else(|| MapError::UnknownChart(fl.dst_chart.clone()))?;
        let y = fl.map.eval_q(&x)?;
        let k = match middle.iter().position(|(mb, s, _)| *mb == b && s.contains_interior(&y)) {
            Some(k) => k,
            None => add_middle(&mut middle, b, &y)?,
        };
        let allowed = preimage(&fl.map, &DomainSet::single(middle[k].1.clone()))?;
        let allowed = component_around(&allowed, &x).ok_or_else(|| fail("lift leaves the middle piece"))?;
        let s = maximal_stable_neighborhood(&x, ca, &allowed)?;
        uncovered = uncovered.minus(&ca.proj.image_of(&s)?);
        pieces.push((a, s, k));
    }
    let mut uncovered = fr.dst.space.carrier.clone();
    for (b, s, _) in &middle {
        uncovered = uncovered.minus(&fr.dst.charts[*b].proj.image_of(s)?);
    }
    while !uncovered.is_empty() {
        if middle.len() >= MAX_REFINEMENT_PIECES {
            return Err(fail("middle refinement does not terminate"));
        }
        let (b, y) = fr
            .dst
            .charts
            .iter()
            .enumerate()
            .find_map(|(b, c)| points_over(&uncovered, c).into_iter().next().map(|y| (b, y)))
            .ok_or_else(|| fail("uncovered middle points without rational fibers"))?;
        let k = add_middle(&mut middle, b, &y)?;
        uncovered = uncovered.minus(&fr.dst.charts[b].proj.image_of(&middle[k].1)?);
    }
    let mut k_parts = Vec::new();
    let mut targets = Vec::new();
    for (n, (a, s, k)) in pieces.iter().enumerate() {
        k_parts.push(restricted(&fr.src.charts[*a], s, &alloc::format!("K{}", n))?);
        targets.push(alloc::format!("K{}'", k));
    }
    let mut m_parts = Vec::new();
    let mut into_g = Vec::new();
    for (n, (b, s, t)) in middle.iter().enumerate() {
        let id = alloc::format!("K{}'", n);
        m_parts.push(restricted(&fr.dst.charts[*b], s, &id)?);
        into_g.push(Embedding::new(&id, &t.target, t.map.clone()));
    }
    let k_atlas = restriction_atlas(&fr.src, &k_parts)?;
    let m_atlas = restriction_atlas(&fr.dst, &m_parts)?;
    let lam: Vec<Embedding> = k_parts.iter().map(|(_, l)| l.clone()).collect();
    let mu: Vec<Embedding> = m_parts.iter().map(|(_, m)| m.clone()).collect();
    let f_ind = induce_onto(fr, &k_atlas, &lam, &m_atlas, &mu, &targets)?;
    let ids: Vec<Embedding> = gr.dst.charts.iter().map(|c| Embedding::new(&c.id, &c.id, c.identity())).collect();
    let g_targets: Vec<String> = m_atlas
        .charts
        .iter()
        .map(|c| {
            let t = into_g.iter().find(|e| e.source == c.id).expect("middle chart");
            Ok(gr.lift_or_err(&t.target)?.dst_chart.clone())
        })
        .collect::<Result<_, MapError>>()?;
    let g_ind = induce_onto(gr, &m_atlas, &into_g, &gr.dst, &ids, &g_targets)?;
    let rep = compose_maprep(&g_ind, &f_ind)?;
    Ok(ChartedMap::new(rep, &alloc::format!("{}*", f.domain_atlas), &g.range_atlas))
}

/// Both answers of the unit-weak-equivalence test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UweCheck {
    /// `F2(h)` is a lift of the identity.
    pub by_lift: bool,
    /// Essential surjectivity and full faithfulness on probe objects.
    pub by_structure: bool,
}

pub fn unit_weak_equivalence_check(h: &GroupoidHom, src: &MarkedAtlasGroupoid, dst: &MarkedAtlasGroupoid) -> UweCheck {
    let by_lift = match from_hom(h, src, dst) {
        Ok(r) => src.atlas.space == dst.atlas.space && is_identity_lift(&ChartedMap::new(r, "src", "dst")),
        Err(_) => false,
    };
    let by_structure = structural_uwe(h, src, dst).unwrap_or(false);
    UweCheck { by_lift, by_structure }
}

/// Is `h` a unit weak equivalence? Decided through `F2(h)`.
pub fn is_unit_weak_equivalence(h: &GroupoidHom, src: &MarkedAtlasGroupoid, dst: &MarkedAtlasGroupoid) -> bool {
    unit_weak_equivalence_check(h, src, dst).by_lift
}

fn structural_uwe(h: &GroupoidHom, src: &MarkedAtlasGroupoid, dst: &MarkedAtlasGroupoid) -> Result<bool, MapError> {
    if src.atlas.space != dst.atlas.space {
        return Ok(false);
    }
    // essential surjectivity: the image objects meet every orbit
    let mut reached = DomainSet::empty();
    for comp in &h.obj_map {
        let t = dst.chart(&comp.target)?;
        reached = reached.union(&compose(&t.proj, &comp.map)?.image()?);
    }
    if !dst.atlas.space.carrier.is_subset(&reached) {
        return Ok(false);
    }
    // full faithfulness on probe pairs
    let gens = &src.generators.elements;
    let objs = src.probe_objects();
    let mut dst_sats: BTreeMap<ObjPoint, Saturation> = BTreeMap::new();
    for x in &objs {
        let sat = src.saturate(x)?;
        let fx = h.apply_obj(x)?;
        if !dst_sats.contains_key(&fx) {
            dst_sats.insert(fx.clone(), dst.saturate(&fx)?);
        }
        for y in &objs {
            let fy = h.apply_obj(y)?;
            let ours = sat.to(y);
            let theirs: Vec<&Germ> = dst_sats[&fx].to(&fy).into_iter().map(|a| &a.germ).collect();
            let mut images: Vec<Germ> = Vec::new();
            for a in ours {
                let g = h.apply_arrow(gens, a)?;
                if images.contains(&g) || !theirs.contains(&&g) {
                    return Ok(false);
                }
                images.push(g);
            }
            if images.len() != theirs.len() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    /// Points with equal markings whose isotropy images have different sizes.
    Certificate { point: ObjPoint, other: ObjPoint, marking: Q, first: usize, second: usize },
    NoRefutation,
}

impl fmt::Display for Refutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Refutation::Certificate { point, other, marking, first, second } => write!(
                f,
                "certificate at {} / {} over {}: isotropy images of size {} and {}",
                point,
                other,
                fmt_q(marking),
                first,
                second
            ),
            Refutation::NoRefutation => f.write_str("no refutation"),
        }
    }
}

fn isotropy_image(h: &GroupoidHom, g: &MarkedAtlasGroupoid, x: &ObjPoint) -> Result<usize, MapError> {
    let (arrows, _) = g.arrows_between(x, x)?;
    let mut images: Vec<Germ> = Vec::new();
    for a in &arrows {
        let im = h.apply_arrow(&g.generators.elements, a)?;
        if !images.contains(&im) {
            images.push(im);
        }
    }
    Ok(images.len())
}

/// Compares the sizes of the images of isotropy groups over equally marked
/// points. A difference cannot survive unit weak equivalences.
pub fn refute_hom_equivalence(
    phi: &GroupoidHom,
    phi_src: &MarkedAtlasGroupoid,
    psi: &GroupoidHom,
    psi_src: &MarkedAtlasGroupoid,
) -> Result<Refutation, MapError> {
    for x in phi_src.probe_objects() {
        let m = phi_src.marking_value(&x)?;
        let Some((i, y)) = fiber(&psi_src.atlas, &m).into_iter().next() else { continue };
        let other = ObjPoint::new(&psi_src.atlas.charts[i].id, y);
        let (a, b) = (isotropy_image(phi, phi_src, &x)?, isotropy_image(psi, psi_src, &other)?);
        if a != b {
            return Ok(Refutation::Certificate { point: x, other, marking: m, first: a, second: b });
        }
    }
    Ok(Refutation::NoRefutation)
}
