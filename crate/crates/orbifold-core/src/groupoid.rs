//! The pseudogroup of an atlas, its marked germ groupoid, homomorphisms
//! between such groupoids, and recovery of the atlas from the groupoid.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::charts::{validate_atlas_with, validate_transition, Atlas, Chart, Embedding, Space};
use crate::interval::DomainSet;
use crate::probe;
use crate::rational::{fmt_q, Q};
use crate::report::ValidationReport;
use crate::symfun::{compose, invert, parse_fn, parse_interval, Germ, PiecewiseFn, Smoothness, SymError};

pub const DEFAULT_DEPTH_CAP: usize = 8;

/// A (partial) change of charts between two chart domains.
pub type Transition = Embedding;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GroupoidError {
    #[error("invalid atlas: {0}")]
    InvalidAtlas(ValidationReport),
    #[error("malformed input at line {line}: {message}")]
    MalformedInput { line: usize, message: String },
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("no image assigned to generator {0}")]
    MissingImage(String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjPoint {
    pub chart: String,
    pub x: Q,
}

impl ObjPoint {
    pub fn new(chart: &str, x: Q) -> Self {
        ObjPoint { chart: chart.to_string(), x }
    }
}

impl fmt::Display for ObjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.chart, fmt_q(&self.x))
    }
}

/// An arrow of the germ groupoid, with the generator word that produced it
/// and a representative transition defined near the source.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GermArrow {
    pub source: ObjPoint,
    pub target: ObjPoint,
    pub germ: Germ,
    pub word: Vec<usize>,
    pub rep: PiecewiseFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuasiPseudogroup {
    pub elements: Vec<Transition>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SaturationStatus {
    Saturated,
    DepthCapped(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Saturation {
    pub arrows: Vec<GermArrow>,
    pub status: SaturationStatus,
}

impl Saturation {
    pub fn to(&self, y: &ObjPoint) -> Vec<&GermArrow> {
        self.arrows.iter().filter(|a| a.target == *y).collect()
    }

    pub fn points(&self) -> Vec<ObjPoint> {
        let set: BTreeSet<ObjPoint> = self.arrows.iter().map(|a| a.target.clone()).collect();
        set.into_iter().collect()
    }
}

/// Breadth-first closure of `start` under words in `gens` of length at most `cap`.
pub fn saturate(gens: &[Transition], domains: &BTreeMap<String, DomainSet>, start: &ObjPoint, cap: usize) -> Result<Saturation, GroupoidError> {
    let dom = domains.get(&start.chart).ok_or_else(|| GroupoidError::UnknownChart(start.chart.clone()))?;
    let comp = dom.component_of(&start.x).ok_or(SymError::OutOfDomain(start.x.clone()))?;
    let id = PiecewiseFn::identity_on(comp);
    let first = GermArrow {
        source: start.clone(),
        target: start.clone(),
        germ: Germ::of(&id, &start.x)?,
        word: Vec::new(),
        rep: id,
    };
    let mut seen: BTreeSet<(ObjPoint, Germ)> = BTreeSet::new();
    seen.insert((start.clone(), first.germ.clone()));
    let mut arrows = alloc::vec![first.clone()];
    let mut frontier = alloc::vec![first];
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for a in &frontier {
            for (gi, g) in gens.iter().enumerate() {
                if g.source != a.target.chart || !g.map.defined_near(&a.target.x) {
                    continue;
                }
                let rep = compose(&g.map, &a.rep)?;
                let Some(c) = rep.domain().component_of(&start.x).cloned() else { continue };
                let rep = rep.restrict_interval(&c);
                if !rep.defined_near(&start.x) {
                    continue;
                }
                let y = g.map.eval_q(&a.target.x)?;
                let target = ObjPoint::new(&g.target, y);
                let germ = Germ::of(&rep, &start.x)?;
                if seen.insert((target.clone(), germ.clone())) {
                    let mut word = a.word.clone();
                    word.push(gi);
                    next.push(GermArrow { source: start.clone(), target, germ, word, rep });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        if depth == cap {
            return Ok(Saturation { arrows, status: SaturationStatus::DepthCapped(cap) });
        }
        depth += 1;
        arrows.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(Saturation { arrows, status: SaturationStatus::Saturated })
}

fn chart_domains(a: &Atlas) -> BTreeMap<String, DomainSet> {
    a.charts.iter().map(|c| (c.id.clone(), c.dom_set())).collect()
}

/// Chart group elements, atlas witnesses, and inverses of the witnesses.
pub fn base_generators(a: &Atlas) -> Vec<Transition> {
    let mut elements: Vec<Transition> = Vec::new();
    let mut push = |e: Transition| {
        if !elements.contains(&e) {
            elements.push(e);
        }
    };
    for c in &a.charts {
        for g in &c.group {
            push(Embedding::new(&c.id, &c.id, g.clone()));
        }
    }
    for w in &a.witnesses {
        push(w.clone());
    }
    for w in &a.witnesses {
        if let Ok(inv) = invert(&w.map) {
            push(Embedding::new(&w.target, &w.source, inv));
        }
    }
    elements
}

/// Upper bound on the size of the generator closure.
pub const MAX_GENERATORS: usize = 512;

fn covered(els: &[Transition], t: &Transition) -> bool {
    els.iter().any(|e| e.source == t.source && e.target == t.target && crate::symfun::extends(&e.map, &t.map))
}

/// The base generators closed under inverses and composites, skipping
/// transitions that are restrictions of ones already present.
pub fn psi_generators_unchecked(a: &Atlas) -> QuasiPseudogroup {
    let mut elements = base_generators(a);
    let mut start = 0;
    while start < elements.len() && elements.len() < MAX_GENERATORS {
        let end = elements.len();
        let mut fresh: Vec<Transition> = Vec::new();
        for i in 0..end {
            for j in 0..end {
                if i < start && j < start {
                    continue;
                }
                let (l, m) = (&elements[i], &elements[j]);
                if m.source != l.target {
                    continue;
                }
                let Ok(c) = compose(&m.map, &l.map) else { continue };
                if c.is_empty() {
                    continue;
                }
                let t = Embedding::new(&l.source, &m.target, c);
                if !covered(&elements, &t) && !covered(&fresh, &t) {
                    fresh.push(t);
                }
            }
        }
        for t in fresh.clone() {
            if let Ok(inv) = invert(&t.map) {
                let e = Embedding::new(&t.target, &t.source, inv);
                if !covered(&elements, &e) && !covered(&fresh, &e) {
                    fresh.push(e);
                }
            }
        }
        start = end;
        elements.extend(fresh);
    }
    elements.truncate(MAX_GENERATORS);
    QuasiPseudogroup { elements }
}

pub fn psi_generators(a: &Atlas) -> Result<QuasiPseudogroup, GroupoidError> {
    let rep = validate_atlas_with(a, DEFAULT_DEPTH_CAP);
    if rep.has_failures() {
        return Err(GroupoidError::InvalidAtlas(rep));
    }
    Ok(psi_generators_unchecked(a))
}

fn element_probes(t: &Transition) -> Vec<Q> {
    let mut v = Vec::new();
    for i in t.map.domain().intervals() {
        v.extend(probe::grid(i, &[&t.map], &[]));
    }
    v
}

/// Local inverses and local composites exist in the list at every probe point.
pub fn validate_quasi_pseudogroup(p: &QuasiPseudogroup) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let els = &p.elements;
    for (i, l) in els.iter().enumerate() {
        let inv = match invert(&l.map) {
            Ok(v) => v,
            Err(e) => {
                rep.fail("qp-inverse", alloc::format!("element {} is not invertible: {}", i, e));
                continue;
            }
        };
        for x in element_probes(l) {
            let Ok(y) = l.map.eval_q(&x) else {
                rep.unknown("qp-probe", alloc::format!("element {} at {}: irrational value", i, fmt_q(&x)));
                continue;
            };
            let has_inverse = els.iter().any(|m| {
                m.source == l.target
                    && m.target == l.source
                    && m.map.defined_near(&y)
                    && Germ::of(&m.map, &y).ok() == Germ::of(&inv, &y).ok()
            });
            if !has_inverse {
                rep.fail("qp-inverse", alloc::format!("no local inverse of element {} at {}", i, fmt_q(&x)));
            }
            for (j, l2) in els.iter().enumerate() {
                if l2.source != l.target || !l2.map.defined_near(&y) {
                    continue;
                }
                let comp = match compose(&l2.map, &l.map) {
                    Ok(c) => c,
                    Err(e) => {
                        rep.unknown("qp-composite", alloc::format!("{} after {}: {}", j, i, e));
                        continue;
                    }
                };
                let g = Germ::of(&comp, &x).ok();
                let has = els.iter().any(|m| {
                    m.source == l.source && m.target == l2.target && m.map.defined_near(&x) && Germ::of(&m.map, &x).ok() == g
                });
                if !has {
                    rep.fail("qp-composite", alloc::format!("no local composite of {} after {} at {}", j, i, fmt_q(&x)));
                }
            }
        }
    }
    rep
}

/// Probe points of a chart: endpoints, centers, fixed points, midpoints.
pub fn chart_probes(c: &Chart) -> Vec<Q> {
    let mut fns: Vec<&PiecewiseFn> = alloc::vec![&c.proj];
    fns.extend(c.group.iter());
    probe::grid(&c.domain, &fns, &[])
}

/// Every probe fiber pair is joined by a generator word.
pub fn generation_check(a: &Atlas, gens: &QuasiPseudogroup, cap: usize) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let domains = chart_domains(a);
    for c in &a.charts {
        for y in chart_probes(c) {
            let start = ObjPoint::new(&c.id, y.clone());
            let sat = match saturate(&gens.elements, &domains, &start, cap) {
                Ok(s) => s,
                Err(e) => {
                    rep.unknown("generation", alloc::format!("from {}: {}", start, e));
                    continue;
                }
            };
            if let SaturationStatus::DepthCapped(k) = sat.status {
                rep.unknown("generation", alloc::format!("saturation from {} capped at depth {}", start, k));
            }
            let Ok(v) = c.proj.eval_q(&y) else { continue };
            let reached = sat.points();
            for d in &a.charts {
                let Ok(fiber) = d.proj.preimages(&v) else {
                    rep.unknown("generation", alloc::format!("fiber over {} in {}", fmt_q(&v), d.id));
                    continue;
                };
                for x in fiber.into_iter().filter(|x| d.domain.contains(x)) {
                    let p = ObjPoint::new(&d.id, x);
                    if !reached.contains(&p) {
                        rep.unknown("generation", alloc::format!("no generator word from {} to {}", start, p));
                    }
                }
            }
        }
    }
    rep
}

/// `(Γ(𝒱), α, Q)` presented by the atlas and its generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedAtlasGroupoid {
    pub atlas: Atlas,
    pub generators: QuasiPseudogroup,
    pub depth_cap: usize,
}

impl MarkedAtlasGroupoid {
    pub fn build(atlas: &Atlas) -> Result<Self, GroupoidError> {
        Self::build_with(atlas, DEFAULT_DEPTH_CAP)
    }

    pub fn build_with(atlas: &Atlas, depth_cap: usize) -> Result<Self, GroupoidError> {
        let rep = validate_atlas_with(atlas, depth_cap);
        if rep.has_failures() {
            return Err(GroupoidError::InvalidAtlas(rep));
        }
        Ok(Self::build_unchecked(atlas, depth_cap))
    }

    pub fn build_unchecked(atlas: &Atlas, depth_cap: usize) -> Self {
        let atlas = atlas.canonical();
        let generators = psi_generators_unchecked(&atlas);
        MarkedAtlasGroupoid { atlas, generators, depth_cap }
    }

    pub fn domains(&self) -> BTreeMap<String, DomainSet> {
        chart_domains(&self.atlas)
    }

    pub fn chart(&self, id: &str) -> Result<&Chart, GroupoidError> {
        self.atlas.chart(id).map_err(|_| GroupoidError::UnknownChart(id.to_string()))
    }

    pub fn saturate(&self, x: &ObjPoint) -> Result<Saturation, GroupoidError> {
        saturate(&self.generators.elements, &self.domains(), x, self.depth_cap)
    }

    /// All arrows from `x` to `y`, with the saturation status of the search.
    pub fn arrows_between(&self, x: &ObjPoint, y: &ObjPoint) -> Result<(Vec<GermArrow>, SaturationStatus), GroupoidError> {
        let s = self.saturate(x)?;
        Ok((s.to(y).into_iter().cloned().collect(), s.status))
    }

    pub fn orbit(&self, x: &ObjPoint) -> Result<(Vec<ObjPoint>, SaturationStatus), GroupoidError> {
        let s = self.saturate(x)?;
        Ok((s.points(), s.status))
    }

    pub fn marking_value(&self, x: &ObjPoint) -> Result<Q, GroupoidError> {
        Ok(self.chart(&x.chart)?.proj.eval_q(&x.x)?)
    }

    /// Probe objects over all charts.
    pub fn probe_objects(&self) -> Vec<ObjPoint> {
        let mut v = Vec::new();
        for c in &self.atlas.charts {
            for x in chart_probes(c) {
                v.push(ObjPoint::new(&c.id, x));
            }
        }
        v
    }

    /// Canonical text. The marked form adds the marking, transversals and space.
    pub fn serialize(&self, marked: bool) -> String {
        let mut s = String::from("groupoid\n");
        for c in &self.atlas.charts {
            s += &alloc::format!("object {} {}\n", c.id, c.domain);
        }
        for g in base_generators(&self.atlas) {
            s += &alloc::format!("arrow {}\n", g);
        }
        if marked {
            s += &alloc::format!("space {}\n", self.atlas.space.carrier);
            for c in &self.atlas.charts {
                s += &alloc::format!("marking {} : {}\n", c.id, c.proj);
                s += &alloc::format!("transversal {} {}\n", c.id, c.fundamental);
            }
        }
        s += "end\n";
        s
    }
}

fn malformed(line: usize, message: impl Into<String>) -> GroupoidError {
    GroupoidError::MalformedInput { line, message: message.into() }
}

/// Parses `{}` or intervals joined by ` u `.
pub fn parse_domain_set(s: &str) -> Result<DomainSet, SymError> {
    if s.trim() == "{}" {
        return Ok(DomainSet::empty());
    }
    let mut v = Vec::new();
    for part in s.split(" u ") {
        v.push(parse_interval(part)?);
    }
    Ok(DomainSet::from_intervals(v))
}

/// Rebuilds the atlas from a marked serialization.
pub fn recover_atlas(text: &str) -> Result<Atlas, GroupoidError> {
    let mut objects: Vec<(String, crate::interval::Interval)> = Vec::new();
    let mut arrows: Vec<Transition> = Vec::new();
    let mut markings: BTreeMap<String, PiecewiseFn> = BTreeMap::new();
    let mut transversals: BTreeMap<String, crate::interval::Interval> = BTreeMap::new();
    let mut space = None;
    let mut ended = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if ended {
            return Err(malformed(line, "content after `end`"));
        }
        if line == 1 || (objects.is_empty() && l == "groupoid") {
            if l != "groupoid" {
                return Err(malformed(line, "expected `groupoid`"));
            }
            continue;
        }
        let (kw, rest) = l.split_once(' ').unwrap_or((l, ""));
        match kw {
            "object" => {
                let (id, dom) = rest.split_once(' ').ok_or_else(|| malformed(line, "expected `object ID INTERVAL`"))?;
                let dom = parse_interval(dom).map_err(|e| malformed(line, e.to_string()))?;
                objects.push((id.to_string(), dom));
            }
            "arrow" => {
                let (ends, f) = rest.split_once(" : ").ok_or_else(|| malformed(line, "expected `arrow A -> B : MAP`"))?;
                let (a, b) = ends.split_once(" -> ").ok_or_else(|| malformed(line, "expected `A -> B`"))?;
                let f = parse_fn(f).map_err(|e| malformed(line, e.to_string()))?;
                arrows.push(Embedding::new(a.trim(), b.trim(), f));
            }
            "space" => space = Some(parse_domain_set(rest).map_err(|e| malformed(line, e.to_string()))?),
            "marking" => {
                let (id, f) = rest.split_once(" : ").ok_or_else(|| malformed(line, "expected `marking ID : MAP`"))?;
                let f = parse_fn(f).map_err(|e| malformed(line, e.to_string()))?;
                markings.insert(id.trim().to_string(), f);
            }
            "transversal" => {
                let (id, i) = rest.split_once(' ').ok_or_else(|| malformed(line, "expected `transversal ID INTERVAL`"))?;
                let i = parse_interval(i).map_err(|e| malformed(line, e.to_string()))?;
                transversals.insert(id.to_string(), i);
            }
            "end" => ended = true,
            other => return Err(malformed(line, alloc::format!("unknown keyword `{}`", other))),
        }
    }
    if !ended {
        return Err(malformed(text.lines().count(), "missing `end`"));
    }
    let space = space.ok_or_else(|| malformed(0, "unmarked groupoid: no `space` line"))?;
    let mut charts = Vec::new();
    for (id, dom) in &objects {
        let proj = markings.remove(id).ok_or_else(|| malformed(0, alloc::format!("no marking for `{}`", id)))?;
        let fundamental = transversals.remove(id).ok_or_else(|| malformed(0, alloc::format!("no transversal for `{}`", id)))?;
        let full = DomainSet::single(dom.clone());
        let group = arrows
            .iter()
            .filter(|a| a.source == *id && a.target == *id && a.map.domain() == full && a.map.image().ok().as_ref() == Some(&full))
            .map(|a| a.map.clone())
            .collect();
        charts.push(Chart::new(id, dom.clone(), group, proj, fundamental));
    }
    let witnesses: Vec<Embedding> = arrows
        .into_iter()
        .filter(|a| {
            let full = objects.iter().find(|(id, _)| *id == a.source).map(|(_, d)| DomainSet::single(d.clone()));
            !(a.source == a.target && Some(a.map.domain()) == full && a.map.image().ok() == full)
        })
        .collect();
    Ok(Atlas::new(Space { carrier: space }, charts, witnesses).canonical())
}

/// One component `φ₀|Vᵢ` of the object map.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjComponent {
    pub source: String,
    pub target: String,
    pub map: PiecewiseFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArrowAssignment {
    pub generator: Transition,
    pub image: Transition,
}

/// `φ = (φ₀, φ₁)` with `φ₁` determined on generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupoidHom {
    pub obj_map: Vec<ObjComponent>,
    pub arrow_map: Vec<ArrowAssignment>,
}

impl fmt::Display for GroupoidHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hom")?;
        for c in &self.obj_map {
            writeln!(f, "obj {} -> {} : {}", c.source, c.target, c.map)?;
        }
        for a in &self.arrow_map {
            writeln!(f, "arrow {} => {}", a.generator, a.image)?;
        }
        write!(f, "end")
    }
}

impl GroupoidHom {
    pub fn component(&self, chart: &str) -> Option<&ObjComponent> {
        self.obj_map.iter().find(|c| c.source == chart)
    }

    pub fn apply_obj(&self, p: &ObjPoint) -> Result<ObjPoint, GroupoidError> {
        let c = self.component(&p.chart).ok_or_else(|| GroupoidError::UnknownChart(p.chart.clone()))?;
        Ok(ObjPoint::new(&c.target, c.map.eval_q(&p.x)?))
    }

    /// The assignment whose generator has the germ of `l` at `x`.
    pub fn assignment_at(&self, l: &Transition, x: &Q) -> Result<&ArrowAssignment, GroupoidError> {
        let g = Germ::of(&l.map, x)?;
        self.arrow_map
            .iter()
            .find(|a| {
                a.generator.source == l.source
                    && a.generator.target == l.target
                    && a.generator.map.defined_near(x)
                    && Germ::of(&a.generator.map, x).ok().as_ref() == Some(&g)
            })
            .ok_or_else(|| GroupoidError::MissingImage(alloc::format!("{} at {}", l, fmt_q(x))))
    }

    /// `φ₁` on the germ of `l` at `x`.
    pub fn apply_germ(&self, l: &Transition, x: &Q) -> Result<Germ, GroupoidError> {
        let a = self.assignment_at(l, x)?;
        let y = self.apply_obj(&ObjPoint::new(&l.source, x.clone()))?;
        Ok(Germ::of(&a.image.map, &y.x)?)
    }

    /// Image of a generator word from `x`: each letter is matched by germ
    /// against the assigned generators and the images are composed.
    pub fn apply_word(&self, gens: &[Transition], word: &[usize], x: &ObjPoint) -> Result<Germ, GroupoidError> {
        let y = self.apply_obj(x)?;
        let mut acc: Option<PiecewiseFn> = None;
        let mut at = x.x.clone();
        for &i in word {
            let g = &gens[i];
            let img = &self.assignment_at(g, &at)?.image.map;
            acc = Some(match acc {
                None => img.clone(),
                Some(f) => compose(img, &f)?,
            });
            at = g.map.eval_q(&at)?;
        }
        match acc {
            None => Ok(Germ::identity(y.x)),
            Some(f) => Ok(Germ::of(&f, &y.x)?),
        }
    }

    /// `φ₁` on an arrow found by saturation over `gens`.
    pub fn apply_arrow(&self, gens: &[Transition], a: &GermArrow) -> Result<Germ, GroupoidError> {
        self.apply_word(gens, &a.word, &a.source)
    }

    /// The generators this homomorphism is defined on.
    pub fn generators(&self) -> Vec<Transition> {
        self.arrow_map.iter().map(|a| a.generator.clone()).collect()
    }
}

/// Germ-level laws (well-definedness, multiplicativity, units, inverses)
/// for an assignment `ν` of target transitions to source transitions.
pub fn germ_laws(src: &Atlas, lifts: &[ObjComponent], p: &[Transition], nu: &[Transition]) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let lift = |chart: &str| lifts.iter().find(|l| l.source == chart);
    let germ_at = |f: &PiecewiseFn, x: &Q| Germ::of(f, x).ok();
    for (i, l) in p.iter().enumerate() {
        let Some(fi) = lift(&l.source) else {
            rep.fail("germ-lift", alloc::format!("no lift on chart `{}`", l.source));
            continue;
        };
        let mut pts = element_probes(l);
        if let Ok(c) = src.chart(&l.source) {
            pts.retain(|x| c.domain.contains(x));
        }
        for x in pts {
            let Ok(fx) = fi.map.eval_q(&x) else { continue };
            let gl = germ_at(&l.map, &x);
            let Some(nu_i) = germ_at(&nu[i].map, &fx) else {
                rep.fail("germ-defined", alloc::format!("image of element {} is not defined at {}", i, fmt_q(&fx)));
                continue;
            };
            // unit law
            if l.source == l.target && gl.as_ref().map(|g| g.is_identity()).unwrap_or(false) && !nu_i.is_identity() {
                rep.fail("unit", alloc::format!("element {} has identity germ at {} but its image does not", i, fmt_q(&x)));
            }
            for (j, l2) in p.iter().enumerate() {
                if j <= i && l2.source == l.source && l2.target == l.target && l2.map.defined_near(&x) && germ_at(&l2.map, &x) == gl {
                    let nu_j = germ_at(&nu[j].map, &fx);
                    if nu_j.as_ref() != Some(&nu_i) {
                        rep.fail(
                            "well-defined",
                            alloc::format!("elements {} and {} share a germ at {} but their images differ", i, j, fmt_q(&x)),
                        );
                    }
                }
                let Ok(y) = l.map.eval_q(&x) else { continue };
                if l2.source != l.target || !l2.map.defined_near(&y) {
                    continue;
                }
                let Ok(comp) = compose(&l2.map, &l.map) else { continue };
                let gc = germ_at(&comp, &x);
                let nu_comp = compose(&nu[j].map, &nu[i].map).ok().and_then(|c| germ_at(&c, &fx));
                for (k, m) in p.iter().enumerate() {
                    if m.source == l.source
                        && m.target == l2.target
                        && m.map.defined_near(&x)
                        && germ_at(&m.map, &x) == gc
                        && germ_at(&nu[k].map, &fx) != nu_comp
                    {
                        rep.fail("multiplicative", alloc::format!("image of {} differs from image of {} after {} at {}", k, j, i, fmt_q(&x)));
                    }
                }
            }
        }
    }
    rep
}

/// Checks that `h` is a homomorphism from `src` to `dst`.
pub fn validate_hom(h: &GroupoidHom, src: &MarkedAtlasGroupoid, dst: &MarkedAtlasGroupoid) -> ValidationReport {
    let mut rep = ValidationReport::new();
    for c in &src.atlas.charts {
        let Some(comp) = h.component(&c.id) else {
            rep.fail("obj-map", alloc::format!("no component on `{}`", c.id));
            continue;
        };
        if comp.map.domain() != c.dom_set() {
            rep.fail("obj-map", alloc::format!("component on `{}` has domain {}", c.id, comp.map.domain()));
        }
        match dst.chart(&comp.target) {
            Ok(t) => match comp.map.image() {
                Ok(img) if img.is_subset(&t.dom_set()) => {}
                Ok(img) => rep.fail("obj-map", alloc::format!("component on `{}` leaves `{}`: {}", c.id, t.id, img)),
                Err(e) => rep.unknown("obj-map", alloc::format!("{}", e)),
            },
            Err(_) => rep.fail("obj-map", alloc::format!("unknown target chart `{}`", comp.target)),
        }
        if let Smoothness::NotSmooth { at, order, .. } = comp.map.is_smooth() {
            rep.fail("obj-smooth", alloc::format!("component on `{}` not smooth at {} (order {})", c.id, fmt_q(&at), order));
        }
    }
    if rep.has_failures() {
        return rep;
    }
    for (i, a) in h.arrow_map.iter().enumerate() {
        let (Ok(s), Ok(t)) = (src.chart(&a.generator.source), src.chart(&a.generator.target)) else {
            rep.fail("arrow-map", alloc::format!("generator {} uses an unknown chart", i));
            continue;
        };
        rep.absorb(&alloc::format!("generator {}:", i), validate_transition(&a.generator, s, t));
        let (Ok(s2), Ok(t2)) = (dst.chart(&a.image.source), dst.chart(&a.image.target)) else {
            rep.fail("arrow-map", alloc::format!("image {} uses an unknown chart", i));
            continue;
        };
        rep.absorb(&alloc::format!("image {}:", i), validate_transition(&a.image, s2, t2));
        let (fs, ft) = (h.component(&a.generator.source).unwrap(), h.component(&a.generator.target).unwrap());
        if fs.target != a.image.source || ft.target != a.image.target {
            rep.fail("arrow-map", alloc::format!("image {} joins the wrong charts", i));
            continue;
        }
        let dom = a.generator.map.domain();
        let lhs = compose(&ft.map, &a.generator.map);
        let rhs = compose(&a.image.map, &fs.map).map(|r| r.restrict(&dom));
        match (lhs, rhs) {
            (Ok(l), Ok(r)) if l == r => {}
            (Ok(_), Ok(_)) => rep.fail("commute", alloc::format!("object map does not intertwine generator {} with its image", i)),
            (Err(e), _) | (_, Err(e)) => rep.unknown("commute", alloc::format!("generator {}: {}", i, e)),
        }
    }
    let p: Vec<Transition> = h.arrow_map.iter().map(|a| a.generator.clone()).collect();
    let nu: Vec<Transition> = h.arrow_map.iter().map(|a| a.image.clone()).collect();
    rep.absorb("", germ_laws(&src.atlas, &h.obj_map, &p, &nu));
    rep
}

/// `β∘|φ|∘α⁻¹` as a map on the carrier, checked on the probe grid.
pub fn induced_orbit_map(h: &GroupoidHom, src: &MarkedAtlasGroupoid, dst: &MarkedAtlasGroupoid) -> Result<PiecewiseFn, GroupoidError> {
    let mut covered = DomainSet::empty();
    let mut atoms = Vec::new();
    let mut parts: Vec<PiecewiseFn> = Vec::new();
    for c in &src.atlas.charts {
        let comp = h.component(&c.id).ok_or_else(|| GroupoidError::UnknownChart(c.id.clone()))?;
        let t = dst.chart(&comp.target)?;
        let section = invert(&c.proj.restrict_interval(&c.fundamental))?;
        let down = compose(&t.proj, &compose(&comp.map, &section)?)?;
        for p in &parts {
            let overlap = p.domain().intersect(&down.domain());
            if p.restrict(&overlap) != down.restrict(&overlap) {
                return Err(GroupoidError::Sym(SymError::Invalid("induced maps disagree on chart overlaps".into())));
            }
        }
        let fresh = down.domain().minus(&covered);
        atoms.extend(down.restrict(&fresh).atoms());
        covered = covered.union(&down.domain());
        parts.push(down);
    }
    let f = PiecewiseFn::from_atoms(atoms)?;
    for x in src.probe_objects() {
        let c = src.chart(&x.chart)?;
        let y = h.apply_obj(&x)?;
        let lhs = f.eval_q(&c.proj.eval_q(&x.x)?)?;
        let rhs = dst.marking_value(&y)?;
        if lhs != rhs {
            return Err(GroupoidError::Sym(SymError::Invalid(alloc::format!("marking square fails at {}", x))));
        }
    }
    Ok(f)
}
