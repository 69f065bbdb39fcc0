//! Reduced orbifold charts over subsets of the real line, stable sets,
//! restrictions, open embeddings, compatibility and atlases.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::Signed;

use crate::interval::{DomainSet, Ext, Interval};
use crate::probe;
use crate::rational::{fmt_q, min, qi, Q};
use crate::report::ValidationReport;
use crate::symfun::{compose, invert, Atom, Diffeo, DiffeoFailure, PiecewiseFn, SymError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ChartError {
    #[error("{0} is not stable: {1}")]
    NotStable(Interval, String),
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("no group element matches element {0} under the embedding")]
    NoMatch(usize),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// The underlying space `Q`, a subset of the line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    pub carrier: DomainSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    pub id: String,
    pub domain: Interval,
    pub group: Vec<PiecewiseFn>,
    pub proj: PiecewiseFn,
    pub fundamental: Interval,
}

impl Chart {
    pub fn new(id: &str, domain: Interval, group: Vec<PiecewiseFn>, proj: PiecewiseFn, fundamental: Interval) -> Self {
        Chart { id: id.to_string(), domain, group, proj, fundamental }
    }

    pub fn dom_set(&self) -> DomainSet {
        DomainSet::single(self.domain.clone())
    }

    pub fn identity(&self) -> PiecewiseFn {
        PiecewiseFn::identity_on(&self.domain)
    }

    /// Indices of group elements fixing `x`.
    pub fn isotropy(&self, x: &Q) -> Vec<usize> {
        (0..self.group.len()).filter(|&i| self.group[i].eval_q(x).ok().as_ref() == Some(x)).collect()
    }

    /// `π(V)`.
    pub fn image(&self) -> Result<DomainSet, SymError> {
        self.proj.image()
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }
}

/// A map between chart domains. As an atlas witness it may be a partial
/// change of charts; as an open embedding its domain is the whole source.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Embedding {
    pub source: String,
    pub target: String,
    pub map: PiecewiseFn,
}

impl Embedding {
    pub fn new(source: &str, target: &str, map: PiecewiseFn) -> Self {
        Embedding { source: source.to_string(), target: target.to_string(), map }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atlas {
    pub space: Space,
    pub charts: Vec<Chart>,
    pub witnesses: Vec<Embedding>,
}

impl Atlas {
    pub fn new(space: Space, charts: Vec<Chart>, witnesses: Vec<Embedding>) -> Self {
        Atlas { space, charts, witnesses }
    }

    pub fn chart(&self, id: &str) -> Result<&Chart, ChartError> {
        self.charts.iter().find(|c| c.id == id).ok_or_else(|| ChartError::UnknownChart(id.to_string()))
    }

    pub fn chart_index(&self, id: &str) -> Option<usize> {
        self.charts.iter().position(|c| c.id == id)
    }

    /// Charts sorted by id, group elements and witnesses sorted by text, and
    /// of each witness and its inverse only the one with the smaller text.
    pub fn canonical(&self) -> Atlas {
        let mut charts = self.charts.clone();
        charts.sort_by(|a, b| a.id.cmp(&b.id));
        for c in &mut charts {
            c.group.sort_by_key(|g| g.to_text());
            c.group.dedup();
        }
        let mut ws: Vec<(String, Embedding)> = Vec::new();
        for w in &self.witnesses {
            let mut pick = (w.to_string(), w.clone());
            if let Ok(inv) = invert(&w.map) {
                let e = Embedding::new(&w.target, &w.source, inv);
                let t = e.to_string();
                if t < pick.0 {
                    pick = (t, e);
                }
            }
            if !ws.iter().any(|(t, _)| *t == pick.0) {
                ws.push(pick);
            }
        }
        ws.sort_by(|a, b| a.0.cmp(&b.0));
        Atlas { space: self.space.clone(), charts, witnesses: ws.into_iter().map(|(_, e)| e).collect() }
    }
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : {}", self.source, self.target, self.map)
    }
}

fn ids_text(c: &Chart) -> String {
    alloc::format!("chart `{}`", c.id)
}

/// Checks the defining properties of a reduced orbifold chart.
pub fn validate_chart(c: &Chart) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let v = c.dom_set();
    if !c.domain.is_open() {
        rep.fail("domain-open", alloc::format!("{} domain {} is not open", ids_text(c), c.domain));
    }
    for (i, g) in c.group.iter().enumerate() {
        if g.domain() != v {
            rep.fail("group-domain", alloc::format!("element {} has domain {}", i, g.domain()));
            continue;
        }
        match g.image() {
            Ok(img) if img == v => {}
            Ok(img) => rep.fail("group-image", alloc::format!("element {} has image {}", i, img)),
            Err(e) => rep.unknown("group-image", alloc::format!("element {}: {}", i, e)),
        }
        if let Diffeo::Fails(r) = g.is_diffeomorphism() {
            rep.fail("group-diffeo", alloc::format!("element {} is not a diffeomorphism: {:?}", i, r));
        }
    }
    if !c.group.iter().any(|g| g.is_identity() && g.domain() == v) {
        rep.fail("group-identity", "identity is missing");
    }
    let member = |f: &PiecewiseFn| c.group.iter().any(|g| g == f);
    for (i, g) in c.group.iter().enumerate() {
        match invert(g) {
            Ok(inv) if member(&inv) => {}
            Ok(_) => rep.fail("group-inverse", alloc::format!("inverse of element {} is missing", i)),
            Err(e) => rep.fail("group-inverse", alloc::format!("element {}: {}", i, e)),
        }
        for (j, h) in c.group.iter().enumerate() {
            match compose(g, h) {
                Ok(gh) if member(&gh) => {}
                Ok(_) => rep.fail("group-closure", alloc::format!("element {} after {} is missing", i, j)),
                Err(e) => rep.unknown("group-closure", alloc::format!("{} after {}: {}", i, j, e)),
            }
        }
    }
    if c.proj.domain() != v {
        rep.fail("proj-domain", alloc::format!("projection has domain {}", c.proj.domain()));
    }
    for (i, g) in c.group.iter().enumerate() {
        match compose(&c.proj, g) {
            Ok(pg) if pg == c.proj => {}
            Ok(_) => rep.fail("proj-invariant", alloc::format!("projection is not invariant under element {}", i)),
            Err(e) => rep.unknown("proj-invariant", alloc::format!("element {}: {}", i, e)),
        }
    }
    if !c.fundamental.is_subset(&c.domain) {
        rep.fail("fundamental-domain", alloc::format!("{} is not inside {}", c.fundamental, c.domain));
        return rep;
    }
    let pf = c.proj.restrict_interval(&c.fundamental);
    match invert(&pf) {
        Ok(_) => {}
        Err(SymError::NotInjective(x, y)) => rep.fail(
            "fundamental-injective",
            alloc::format!("projection identifies {} and {} inside {}", fmt_q(&x), fmt_q(&y), c.fundamental),
        ),
        Err(e) => rep.fail("fundamental-injective", alloc::format!("{}", e)),
    }
    match (pf.image(), c.proj.image()) {
        (Ok(a), Ok(b)) if a == b => {}
        (Ok(a), Ok(b)) => rep.fail("fundamental-image", alloc::format!("image {} differs from {}", a, b)),
        (Err(e), _) | (_, Err(e)) => rep.unknown("fundamental-image", alloc::format!("{}", e)),
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stability {
    /// Indices of the elements with `gS = S`.
    Stable(Vec<usize>),
    NotStable { element: usize, overlap: Interval },
}

/// Image of an interval under a group element, as an interval.
fn image_interval(g: &PiecewiseFn, s: &Interval) -> Result<Interval, SymError> {
    let img = g.image_of(s)?;
    img.as_interval()
        .cloned()
        .ok_or_else(|| SymError::Invalid(alloc::format!("image of {} is disconnected", s)))
}

pub fn stable_isotropy(s: &Interval, c: &Chart) -> Result<Stability, SymError> {
    let mut iso = Vec::new();
    for (i, g) in c.group.iter().enumerate() {
        let gs = image_interval(g, s)?;
        if gs == *s {
            iso.push(i);
            continue;
        }
        let o = gs.intersect(s);
        if !o.is_empty() {
            return Ok(Stability::NotStable { element: i, overlap: o });
        }
    }
    Ok(Stability::Stable(iso))
}

/// The restriction `(S, G_S, π|S)` with a fundamental domain inside `S`.
pub fn restrict_chart(c: &Chart, s: &Interval) -> Result<Chart, ChartError> {
    let iso = match stable_isotropy(s, c)? {
        Stability::Stable(iso) => iso,
        Stability::NotStable { element, overlap } => {
            return Err(ChartError::NotStable(s.clone(), alloc::format!("element {} overlaps on {}", element, overlap)))
        }
    };
    let group: Vec<PiecewiseFn> = iso.iter().map(|&i| c.group[i].restrict_interval(s)).collect();
    let proj = c.proj.restrict_interval(s);
    let mut candidates = Vec::new();
    if iso.len() == 1 {
        candidates.push(s.clone());
    }
    candidates.push(c.fundamental.intersect(s));
    for g in &c.group {
        if let Ok(gf) = image_interval(g, &c.fundamental) {
            candidates.push(gf.intersect(s));
        }
    }
    let target = proj.image().ok();
    let fundamental = candidates
        .iter()
        .find(|f| {
            if f.is_empty() {
                return false;
            }
            let pf = proj.restrict_interval(f);
            invert(&pf).is_ok() && pf.image().ok() == target
        })
        .cloned()
        .unwrap_or_else(|| c.fundamental.intersect(s));
    let id = alloc::format!("{}|{}", c.id, s);
    Ok(Chart { id, domain: s.clone(), group, proj, fundamental })
}

/// Checks a (possibly partial) change of charts between two charts.
pub fn validate_transition(e: &Embedding, source: &Chart, target: &Chart) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let dom = e.map.domain();
    if dom.is_empty() {
        rep.fail("transition-domain", "empty domain");
        return rep;
    }
    if !dom.is_subset(&source.dom_set()) || dom.intervals().iter().any(|i| !i.is_open()) {
        rep.fail("transition-domain", alloc::format!("domain {} is not open in {}", dom, source.domain));
    }
    if let Diffeo::Fails(r) = e.map.is_diffeomorphism() {
        rep.fail("transition-diffeo", alloc::format!("{:?}", r));
    }
    match e.map.image() {
        Ok(img) if img.is_subset(&target.dom_set()) => {}
        Ok(img) => rep.fail("transition-image", alloc::format!("image {} leaves {}", img, target.domain)),
        Err(err) => rep.unknown("transition-image", alloc::format!("{}", err)),
    }
    match compose(&target.proj, &e.map) {
        Ok(pm) if pm == source.proj.restrict(&dom) => {}
        Ok(_) => rep.fail("transition-projection", "target projection after the map differs from the source projection"),
        Err(err) => rep.unknown("transition-projection", alloc::format!("{}", err)),
    }
    rep
}

/// Checks an open embedding of `source` into `target`.
pub fn validate_embedding(e: &Embedding, charts: &[Chart]) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let find = |id: &str| charts.iter().find(|c| c.id == id);
    let (Some(s), Some(t)) = (find(&e.source), find(&e.target)) else {
        rep.fail("embedding-ids", alloc::format!("unknown chart in {} -> {}", e.source, e.target));
        return rep;
    };
    if e.map.domain() != s.dom_set() {
        rep.fail("embedding-domain", alloc::format!("domain {} is not {}", e.map.domain(), s.domain));
    }
    rep.absorb("", validate_transition(e, s, t));
    if let Ok(img) = e.map.image() {
        if let Some(i) = img.as_interval() {
            match stable_isotropy(i, t) {
                Ok(Stability::Stable(_)) => {}
                Ok(Stability::NotStable { element, overlap }) => rep.fail(
                    "embedding-stable",
                    alloc::format!("image {} is not stable: element {} overlaps on {}", i, element, overlap),
                ),
                Err(err) => rep.unknown("embedding-stable", alloc::format!("{}", err)),
            }
        }
    }
    rep
}

/// For each `g` of the source group, the index of the unique `h` with `μ∘g = h∘μ`.
pub fn induced_group_iso(e: &Embedding, charts: &[Chart]) -> Result<Vec<(usize, usize)>, ChartError> {
    let find = |id: &str| charts.iter().find(|c| c.id == id).ok_or_else(|| ChartError::UnknownChart(id.to_string()));
    let s = find(&e.source)?;
    let t = find(&e.target)?;
    let mut out = Vec::new();
    for (i, g) in s.group.iter().enumerate() {
        let lhs = compose(&e.map, g)?;
        let j = t
            .group
            .iter()
            .position(|h| compose(h, &e.map).ok().as_ref() == Some(&lhs))
            .ok_or(ChartError::NoMatch(i))?;
        out.push((i, j));
    }
    Ok(out)
}

/// A local change of charts `h` from the second chart into the first with
/// `π₁∘h = π₂` and `h(y) = x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChangeOfCharts {
    pub y: Q,
    pub x: Q,
    pub map: PiecewiseFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub map: PiecewiseFn,
    pub failure: DiffeoFailure,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Compatibility {
    Compatible(Vec<ChangeOfCharts>),
    /// At the fiber pair `(y, x)` every branch candidate fails.
    Incompatible { y: Q, x: Q, candidates: Vec<Candidate> },
    Unknown(String),
}

impl Compatibility {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Compatibility::Compatible(_))
    }
}

impl fmt::Display for Compatibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compatibility::Compatible(w) => write!(f, "compatible ({} witnesses)", w.len()),
            Compatibility::Incompatible { y, x, candidates } => {
                write!(f, "incompatible at ({}, {}):", fmt_q(y), fmt_q(x))?;
                for c in candidates {
                    write!(f, " [{} fails {}]", c.map, failure_text(&c.failure))?;
                }
                Ok(())
            }
            Compatibility::Unknown(m) => write!(f, "unknown: {}", m),
        }
    }
}

pub fn failure_text(d: &DiffeoFailure) -> String {
    match d {
        DiffeoFailure::NotSmooth { at, order, kind } => {
            alloc::format!("NotSmooth({}, order {}{})", fmt_q(at), order, match kind {
                crate::symfun::JetFailure::Jump => "",
                crate::symfun::JetFailure::Unbounded => " unbounded",
            })
        }
        DiffeoFailure::CriticalPoint(x) => alloc::format!("CriticalPoint({})", fmt_q(x)),
        DiffeoFailure::NotInjective(x, y) => alloc::format!("NotInjective({}, {})", fmt_q(x), fmt_q(y)),
        DiffeoFailure::NotInjectiveOverlap(i) => alloc::format!("NotInjective(overlap {})", i),
        DiffeoFailure::Undecided(m) => alloc::format!("Undecided({})", m),
    }
}

/// Atoms of `f` active just left and just right of `x`, each extended to contain `x`.
fn sides_at(f: &PiecewiseFn, x: &Q) -> (Option<Atom>, Option<Atom>) {
    let xe = Ext::Fin(x.clone());
    let (mut l, mut r) = (None, None);
    for a in f.atoms() {
        if a.support.lo < xe && xe <= a.support.hi {
            let s = Interval::new(a.support.lo.clone(), xe.clone(), a.support.lo_open, false);
            l = Some(Atom { form: a.form.clone(), support: s });
        }
        if a.support.lo <= xe && xe < a.support.hi {
            let s = Interval::new(xe.clone(), a.support.hi.clone(), false, a.support.hi_open);
            r = Some(Atom { form: a.form.clone(), support: s });
        }
    }
    (l, r)
}

/// Side of `q` (as a sign) that an atom's values occupy near the end `x`.
fn value_side(a: &Atom, atom_is_right_of_x: bool) -> i32 {
    let d = a.form.direction();
    if atom_is_right_of_x {
        d
    } else {
        -d
    }
}

fn single(a: &Atom) -> PiecewiseFn {
    PiecewiseFn::from_atoms(alloc::vec![a.clone()]).expect("one atom")
}

/// Branch candidates `h` near `y` with `π₁∘h = π₂`, `h(y) = x`.
fn branch_candidates(c1: &Chart, c2: &Chart, y: &Q, x: &Q) -> Result<Vec<PiecewiseFn>, SymError> {
    let (l2, r2) = sides_at(&c2.proj, y);
    let (l1, r1) = sides_at(&c1.proj, x);
    let (Some(l2), Some(r2)) = (l2, r2) else {
        return Err(SymError::Invalid("probe point on the chart boundary".into()));
    };
    // inverse branches of π₁ at x, with the value side each covers (0 = both)
    let mut branches: Vec<(PiecewiseFn, i32)> = Vec::new();
    match (&l1, &r1) {
        (Some(a), Some(b)) if a.form == b.form => {
            let s = DomainSet::from_intervals([a.support.clone(), b.support.clone()]);
            let joined = Atom { form: a.form.clone(), support: s.as_interval().expect("joined").clone() };
            branches.push((invert(&single(&joined))?, 0));
        }
        _ => {
            for (a, right) in [(&l1, false), (&r1, true)] {
                if let Some(a) = a {
                    if a.form.direction() == 0 {
                        return Err(SymError::NotInFragment("projection is locally constant".into()));
                    }
                    branches.push((invert(&single(a))?, value_side(a, right)));
                }
            }
        }
    }
    let tau_l = value_side(&l2, false);
    let tau_r = value_side(&r2, true);
    if tau_l == 0 || tau_r == 0 {
        return Err(SymError::NotInFragment("projection is locally constant".into()));
    }
    // whole atoms first, then shrinking neighbourhoods of y when clipping
    // against a branch image would need an irrational breakpoint
    let mut radius: Option<Q> = None;
    loop {
        match assemble(&branches, &l2, &r2, tau_l, tau_r, y, radius.as_ref()) {
            Err(SymError::NotInFragment(m)) => {
                let r = radius.map(|r| r / qi(2)).unwrap_or_else(|| qi(1) / qi(4));
                if r < qi(1) / qi(1 << 20) {
                    return Err(SymError::NotInFragment(m));
                }
                radius = Some(r);
            }
            other => return other,
        }
    }
}

fn assemble(
    branches: &[(PiecewiseFn, i32)],
    l2: &Atom,
    r2: &Atom,
    tau_l: i32,
    tau_r: i32,
    y: &Q,
    radius: Option<&Q>,
) -> Result<Vec<PiecewiseFn>, SymError> {
    let mut l2 = l2.clone();
    let mut r2 = r2.clone();
    if let Some(r) = radius {
        l2.support = l2.support.intersect(&Interval::open(y - r, y + r));
        r2.support = r2.support.intersect(&Interval::open(y - r, y + r));
    }
    let left_part = single(&l2);
    let mut right_atom = r2;
    right_atom.support.lo_open = true;
    let right_part = single(&right_atom);
    let mut out = Vec::new();
    for (bl, sl) in branches {
        if *sl != 0 && *sl != tau_l {
            continue;
        }
        for (br, sr) in branches {
            if *sr != 0 && *sr != tau_r {
                continue;
            }
            let hl = compose(bl, &left_part)?;
            let hr = compose(br, &right_part)?;
            let mut atoms = hl.atoms();
            atoms.extend(hr.atoms());
            let h = PiecewiseFn::from_atoms(atoms)?;
            let comp = match h.domain().component_of(y) {
                Some(c) => c.interior(),
                None => continue,
            };
            if !comp.contains(y) {
                continue;
            }
            let h = h.restrict_interval(&comp);
            if !out.contains(&h) {
                out.push(h);
            }
        }
    }
    Ok(out)
}

fn structural_points(c: &Chart) -> Vec<Q> {
    let mut v = c.proj.special_points();
    for g in &c.group {
        v.extend(g.fixed_points());
    }
    v.retain(|x| c.domain.contains(x));
    v
}

/// Fiber pairs `(y, x)` with `π₂(y) = π₁(x)` over values drawn from the
/// probe grids of both charts. Values over structural points must have
/// rational fibers; elsewhere values with irrational fibers are skipped.
fn fiber_pairs(c1: &Chart, c2: &Chart) -> Result<Vec<(Q, Q)>, String> {
    let mut structural: Vec<Q> = Vec::new();
    let mut values: Vec<Q> = Vec::new();
    for c in [c1, c2] {
        for p in structural_points(c) {
            if let Ok(v) = c.proj.eval_q(&p) {
                structural.push(v);
            }
        }
        let mut fns: Vec<&PiecewiseFn> = alloc::vec![&c.proj];
        fns.extend(c.group.iter());
        for p in probe::grid(&c.domain, &fns, &[]) {
            if let Ok(v) = c.proj.eval_q(&p) {
                values.push(v);
            }
        }
    }
    values.extend(structural.iter().cloned());
    values.sort();
    values.dedup();
    let (img1, img2) = match (c1.image(), c2.image()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Err(alloc::format!("chart image: {}", e)),
    };
    let overlap = img1.intersect(&img2);
    let mut pairs = Vec::new();
    let mut hit = DomainSet::empty();
    for v in values.iter().filter(|v| overlap.contains(v)) {
        let fibers = (c1.proj.preimages(v), c2.proj.preimages(v));
        let (f1, f2) = match fibers {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                if structural.contains(v) {
                    return Err(alloc::format!("fiber over {}: {}", fmt_q(v), e));
                }
                continue;
            }
        };
        hit = hit.union(&DomainSet::single(Interval::point(v.clone())));
        for y in f2.iter().filter(|y| c2.domain.contains(y)) {
            for x in f1.iter().filter(|x| c1.domain.contains(x)) {
                pairs.push((y.clone(), x.clone()));
            }
        }
    }
    for comp in overlap.intervals() {
        if !hit.intersect_interval(comp).is_empty() {
            continue;
        }
        let v = rational_fiber_value(c1, c2, comp).ok_or_else(|| alloc::format!("no rational fiber pair over {}", comp))?;
        let (f1, f2) = (c1.proj.preimages(&v).unwrap_or_default(), c2.proj.preimages(&v).unwrap_or_default());
        for y in f2.iter().filter(|y| c2.domain.contains(y)) {
            for x in f1.iter().filter(|x| c1.domain.contains(x)) {
                pairs.push((y.clone(), x.clone()));
            }
        }
    }
    Ok(pairs)
}

/// A value `(n/d)^e` in `comp` whose fibers in both charts are rational.
fn rational_fiber_value(c1: &Chart, c2: &Chart, comp: &Interval) -> Option<Q> {
    for d in 1..=32i64 {
        for e in 1..=4u32 {
            for n in -64i64..=64 {
                let v = crate::rational::powi(&Q::new(n.into(), d.into()), e as i32);
                if !comp.contains(&v) {
                    continue;
                }
                if c1.proj.preimages(&v).is_ok() && c2.proj.preimages(&v).is_ok() {
                    return Some(v);
                }
            }
        }
    }
    None
}

/// Decides compatibility by enumerating branch candidates at every probed
/// fiber pair. Witness maps go from the second chart into the first.
pub fn charts_compatible(c1: &Chart, c2: &Chart) -> Compatibility {
    let pairs = match fiber_pairs(c1, c2) {
        Ok(p) => p,
        Err(e) => return Compatibility::Unknown(e),
    };
    let mut witnesses: Vec<ChangeOfCharts> = Vec::new();
    for (y, x) in pairs {
        let cands = match branch_candidates(c1, c2, &y, &x) {
            Ok(c) => c,
            Err(e) => return Compatibility::Unknown(alloc::format!("branches at ({}, {}): {}", fmt_q(&y), fmt_q(&x), e)),
        };
        let mut failures = Vec::new();
        let mut found = None;
        for h in cands {
            match h.is_diffeomorphism() {
                Diffeo::Diffeo => {
                    found = Some(h);
                    break;
                }
                Diffeo::Fails(r) => failures.push(Candidate { map: h, failure: r }),
            }
        }
        match found {
            Some(map) => {
                if !witnesses.iter().any(|w| w.map == map) {
                    witnesses.push(ChangeOfCharts { y, x, map });
                }
            }
            None => return Compatibility::Incompatible { y, x, candidates: failures },
        }
    }
    Compatibility::Compatible(witnesses)
}

/// An open `G_x`-stable neighbourhood of `x` with isotropy `G_x`.
pub fn stable_neighborhood(x: &Q, c: &Chart) -> Result<Interval, SymError> {
    let iso = c.isotropy(x);
    let mut radius: Option<Q> = None;
    let mut bound = |d: Q| {
        radius = Some(match &radius {
            Some(r) => min(r, &d),
            None => d,
        });
    };
    if let Ext::Fin(lo) = &c.domain.lo {
        bound(x - lo);
    }
    if let Ext::Fin(hi) = &c.domain.hi {
        bound(hi - x);
    }
    for (i, g) in c.group.iter().enumerate() {
        if iso.contains(&i) {
            continue;
        }
        let gx = g.eval_q(x)?;
        bound((gx - x).abs() / qi(2));
        for p in g.fixed_points() {
            bound((p - x).abs() / qi(2));
        }
    }
    let r = radius.unwrap_or_else(|| qi(2)) / qi(2);
    let mut s = Interval::open(x - &r, x + &r);
    for &i in &iso {
        let gs = image_interval(&c.group[i], &s)?;
        s = s.intersect(&gs);
    }
    Ok(s)
}

/// Is `d` open in the subspace topology of `carrier`?
pub fn relatively_open(d: &DomainSet, carrier: &DomainSet) -> bool {
    for i in d.intervals() {
        for (end, open, at_lo) in [(&i.lo, i.lo_open, true), (&i.hi, i.hi_open, false)] {
            if open {
                continue;
            }
            let Ext::Fin(e) = end else { continue };
            let Some(comp) = carrier.component_of(e) else { return false };
            let edge = if at_lo { &comp.lo } else { &comp.hi };
            if *edge != Ext::Fin(e.clone()) {
                return false;
            }
        }
    }
    true
}

/// Full atlas validation with the default saturation depth.
pub fn validate_atlas(a: &Atlas) -> ValidationReport {
    validate_atlas_with(a, crate::groupoid::DEFAULT_DEPTH_CAP)
}

pub fn validate_atlas_with(a: &Atlas, depth_cap: usize) -> ValidationReport {
    let mut rep = ValidationReport::new();
    for (i, c) in a.charts.iter().enumerate() {
        if a.charts[..i].iter().any(|d| d.id == c.id) {
            rep.fail("atlas-ids", alloc::format!("duplicate chart id `{}`", c.id));
        }
        rep.absorb(&alloc::format!("{}:", c.id), validate_chart(c));
    }
    let mut cover = DomainSet::empty();
    for c in &a.charts {
        match c.image() {
            Ok(img) => {
                if !img.is_subset(&a.space.carrier) {
                    rep.fail("atlas-image", alloc::format!("{} projects outside the space: {}", c.id, img));
                } else if !relatively_open(&img, &a.space.carrier) {
                    rep.fail("atlas-image", alloc::format!("{} has non-open image {}", c.id, img));
                }
                cover = cover.union(&img);
            }
            Err(e) => rep.unknown("atlas-image", alloc::format!("{}: {}", c.id, e)),
        }
    }
    if cover != a.space.carrier {
        rep.fail("atlas-cover", alloc::format!("charts cover {} instead of {}", cover, a.space.carrier));
    }
    for w in &a.witnesses {
        match (a.chart(&w.source), a.chart(&w.target)) {
            (Ok(s), Ok(t)) => rep.absorb(&alloc::format!("witness {}->{}:", w.source, w.target), validate_transition(w, s, t)),
            _ => rep.fail("atlas-witness", alloc::format!("unknown chart in witness {} -> {}", w.source, w.target)),
        }
    }
    for i in 0..a.charts.len() {
        for j in i + 1..a.charts.len() {
            match charts_compatible(&a.charts[i], &a.charts[j]) {
                Compatibility::Compatible(_) => {}
                c @ Compatibility::Incompatible { .. } => {
                    rep.fail("atlas-compatible", alloc::format!("{} vs {}: {}", a.charts[i].id, a.charts[j].id, c))
                }
                Compatibility::Unknown(m) => {
                    rep.unknown("atlas-compatible", alloc::format!("{} vs {}: {}", a.charts[i].id, a.charts[j].id, m))
                }
            }
        }
    }
    if rep.has_failures() {
        return rep;
    }
    let gens = crate::groupoid::psi_generators_unchecked(a);
    rep.absorb("generators:", crate::groupoid::validate_quasi_pseudogroup(&gens));
    rep.absorb("", crate::groupoid::generation_check(a, &gens, depth_cap));
    rep
}

/// Local changes of charts `h` from `c2` near `y` into `c1` with `h(y) = x`
/// and `π₁∘h = π₂`, keeping only the diffeomorphic branch candidates.
pub fn local_changes(c1: &Chart, c2: &Chart, y: &Q, x: &Q) -> Result<Vec<PiecewiseFn>, SymError> {
    let mut out = branch_candidates(c1, c2, y, x)?;
    out.retain(|h| h.is_diffeomorphism().is_diffeo());
    Ok(out)
}

/// The largest `G_x`-stable interval around `x` inside `allowed` whose
/// isotropy is `G_x`, found by cutting at fixed points of the other
/// elements. Falls back to shrinking [`stable_neighborhood`].
pub fn maximal_stable_neighborhood(x: &Q, c: &Chart, allowed: &Interval) -> Result<Interval, SymError> {
    let iso = c.isotropy(x);
    let comp = |s: &Interval| -> Option<Interval> {
        let s = s.interior();
        if s.contains(x) {
            Some(s)
        } else {
            None
        }
    };
    let mut s = comp(&allowed.intersect(&c.domain)).ok_or_else(|| SymError::Invalid("point outside the allowed set".into()))?;
    for (i, g) in c.group.iter().enumerate() {
        if iso.contains(&i) {
            continue;
        }
        for p in g.fixed_points() {
            let half = if p < *x {
                Interval::new(Ext::Fin(p), Ext::PosInf, true, true)
            } else {
                Interval::new(Ext::NegInf, Ext::Fin(p), true, true)
            };
            s = s.intersect(&half);
        }
    }
    for _ in 0..4 {
        let mut t = s.clone();
        for &i in &iso {
            t = t.intersect(&image_interval(&c.group[i], &t)?);
        }
        s = match comp(&t) {
            Some(t) => t,
            None => break,
        };
        if let Ok(Stability::Stable(got)) = stable_isotropy(&s, c) {
            if got == iso {
                return Ok(s);
            }
        }
    }
    // translation-like elements: fall back to the radius policy
    let mut s = stable_neighborhood(x, c)?;
    for _ in 0..40 {
        if s.is_subset(allowed) {
            return Ok(s);
        }
        let r = match (&s.lo, &s.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => (b - a) / qi(4),
            _ => return Err(SymError::Invalid("unbounded neighbourhood".into())),
        };
        let mut t = Interval::open(x - &r, x + &r);
        for &i in &iso {
            t = t.intersect(&image_interval(&c.group[i], &t)?);
        }
        s = t;
    }
    Err(SymError::NotInFragment(alloc::format!("no stable neighbourhood of {} inside {}", fmt_q(x), allowed)))
}
