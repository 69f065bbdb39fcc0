//! Exact piecewise signed-power maps `x -> a*e(x-h)*|x-h|^r + k` on rational
//! interval unions, where `e` is `1` (even) or `sign` (odd).

mod form;
mod ops;
mod text;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

pub use form::{Form, Monomial};
pub use ops::{agreement_component, compose, extends, germ_equal, invert, Diffeo, DiffeoFailure, JetFailure, Smoothness};
pub use text::{parse_fn, parse_interval};

use crate::interval::{DomainSet, Ext, Interval};
use crate::rational::{qi, Q};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SymError {
    #[error("point {} is outside the domain", crate::rational::fmt_q(.0))]
    OutOfDomain(Q),
    #[error("not in fragment: {0}")]
    NotInFragment(String),
    #[error("not injective: f({}) = f({})", crate::rational::fmt_q(.0), crate::rational::fmt_q(.1))]
    NotInjective(Q, Q),
    #[error("not injective: images overlap on {0}")]
    NotInjectiveOverlap(Interval),
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

/// One piece `a*e(x-h)*|x-h|^r + k` on `support`. Constants have `a == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub a: Q,
    pub parity: Parity,
    pub h: Q,
    pub r: Q,
    pub k: Q,
    pub support: Interval,
}

impl Piece {
    pub fn new(a: Q, parity: Parity, h: Q, r: Q, k: Q, support: Interval) -> Self {
        Piece { a, parity, h, r, k, support }
    }

    fn side_form(&self, right: bool) -> Form {
        let c = if right || self.parity == Parity::Even { self.a.clone() } else { -self.a.clone() };
        Form::power(self.h.clone(), self.r.clone(), right, c, self.k.clone())
    }

    fn atoms(&self) -> Vec<Atom> {
        if self.a.is_zero() {
            return alloc::vec![Atom { form: Form::constant(self.k.clone()), support: self.support.clone() }];
        }
        if self.support.contains_interior(&self.h) {
            let (l, r) = self.support.split_at(&self.h, true);
            return alloc::vec![
                Atom { form: self.side_form(false), support: l },
                Atom { form: self.side_form(true), support: r },
            ];
        }
        let right = Ext::Fin(self.h.clone()) <= self.support.lo;
        alloc::vec![Atom { form: self.side_form(right), support: self.support.clone() }]
    }

    fn from_atom(at: &Atom) -> Piece {
        match &at.form {
            Form::Affine { a, b } => Piece::new(a.clone(), Parity::Odd, qi(0), qi(1), b.clone(), at.support.clone()),
            Form::Power { h, r, right, c, k } => Piece::new(
                if *right { c.clone() } else { -c.clone() },
                Parity::Odd,
                h.clone(),
                r.clone(),
                k.clone(),
                at.support.clone(),
            ),
        }
    }

    /// Two touching atoms that form a single two-sided piece.
    fn join(l: &Atom, r: &Atom, m: &Q) -> Option<Piece> {
        let support = DomainSet::from_intervals([l.support.clone(), r.support.clone()])
            .as_interval()?
            .clone();
        match (&l.form, &r.form) {
            (
                Form::Power { h: h1, r: r1, right: false, c: c1, k: k1 },
                Form::Power { h: h2, r: r2, right: true, c: c2, k: k2 },
            ) if h1 == m && h2 == m && r1 == r2 && k1 == k2 => {
                let parity = if c1 == c2 {
                    Parity::Even
                } else if *c1 == -c2.clone() {
                    Parity::Odd
                } else {
                    return None;
                };
                Some(Piece::new(c2.clone(), parity, m.clone(), r1.clone(), k1.clone(), support))
            }
            (Form::Affine { a: a1, b: b1 }, Form::Affine { a: a2, b: b2 })
                if !a2.is_zero() && *a1 == -a2.clone() && a1 * m + b1 == a2 * m + b2 =>
            {
                Some(Piece::new(a2.clone(), Parity::Even, m.clone(), qi(1), a2 * m + b2, support))
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.a.is_zero()
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::rational::fmt_q;
        write!(
            f,
            "piece({}, {}, {}, {}, {}) on {}",
            fmt_q(&self.a),
            match self.parity {
                Parity::Even => "even",
                Parity::Odd => "odd",
            },
            fmt_q(&self.h),
            fmt_q(&self.r),
            fmt_q(&self.k),
            self.support
        )
    }
}

/// A one-sided form together with the interval it lives on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub form: Form,
    pub support: Interval,
}

impl Atom {
    pub fn image(&self) -> Result<Interval, SymError> {
        self.form.image(&self.support)
    }
}

fn touching_point(l: &Interval, r: &Interval) -> Option<Q> {
    match (&l.hi, &r.lo) {
        (Ext::Fin(a), Ext::Fin(b)) if a == b && (l.hi_open != r.lo_open) => Some(a.clone()),
        _ => None,
    }
}

/// Exact value `coef*base^exp + offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerValue {
    pub term: Monomial,
    pub offset: Q,
}

impl PowerValue {
    pub fn to_rational(&self) -> Option<Q> {
        self.term.to_rational().map(|v| v + &self.offset)
    }
}

impl fmt::Display for PowerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::rational::fmt_q;
        match self.to_rational() {
            Some(v) => f.write_str(&fmt_q(&v)),
            None => write!(
                f,
                "{}*{}^({}) + {}",
                fmt_q(&self.term.coef),
                fmt_q(&self.term.base),
                fmt_q(&self.term.exp),
                fmt_q(&self.offset)
            ),
        }
    }
}

/// A canonical piecewise map. Two maps are equal as functions exactly when
/// they are equal as values of this type.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseFn {
    pieces: Vec<Piece>,
}

impl PiecewiseFn {
    pub fn new(pieces: Vec<Piece>) -> Result<Self, SymError> {
        for p in &pieces {
            if !p.a.is_zero() && !p.r.is_positive() {
                return Err(SymError::Invalid("exponent must be positive".into()));
            }
        }
        Self::from_atoms(pieces.iter().flat_map(|p| p.atoms()).collect())
    }

    pub fn empty() -> Self {
        PiecewiseFn { pieces: Vec::new() }
    }

    pub fn from_atoms(mut atoms: Vec<Atom>) -> Result<Self, SymError> {
        atoms.retain(|a| !a.support.is_empty());
        atoms.sort_by(|x, y| (&x.support.lo, x.support.lo_open).cmp(&(&y.support.lo, y.support.lo_open)));
        for w in atoms.windows(2) {
            let (l, r) = (&w[0].support, &w[1].support);
            if !l.intersect(r).is_empty() {
                return Err(SymError::Invalid(alloc::format!("supports {} and {} overlap", l, r)));
            }
        }
        // a single-point atom joins a neighbour taking the same value there
        let mut i = 0;
        while i < atoms.len() {
            if atoms[i].support.is_point() {
                let p = atoms[i].support.lo.fin().expect("finite point").clone();
                let v = atoms[i].form.eval_q(&p);
                let left = i > 0 && touching_point(&atoms[i - 1].support, &atoms[i].support).is_some();
                let right = i + 1 < atoms.len() && touching_point(&atoms[i].support, &atoms[i + 1].support).is_some();
                if v.is_some() && left && atoms[i - 1].form.eval_q(&p) == v {
                    atoms[i - 1].support.hi_open = false;
                    atoms.remove(i);
                    continue;
                }
                if v.is_some() && right && atoms[i + 1].form.eval_q(&p) == v {
                    atoms[i + 1].support.lo_open = false;
                    atoms.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        // a shared breakpoint where both sides agree belongs to the left atom
        for i in 0..atoms.len().saturating_sub(1) {
            if let Some(m) = touching_point(&atoms[i].support, &atoms[i + 1].support) {
                if atoms[i].support.hi_open {
                    let vl = atoms[i].form.eval_q(&m);
                    let vr = atoms[i + 1].form.eval_q(&m);
                    if vl.is_some() && vl == vr {
                        atoms[i].support.hi_open = false;
                        atoms[i + 1].support.lo_open = true;
                    }
                }
            }
        }
        let mut merged: Vec<Atom> = Vec::new();
        for a in atoms {
            if let Some(last) = merged.last_mut() {
                if last.form == a.form && touching_point(&last.support, &a.support).is_some() {
                    last.support = DomainSet::from_intervals([last.support.clone(), a.support])
                        .as_interval()
                        .expect("touching supports join")
                        .clone();
                    continue;
                }
            }
            merged.push(a);
        }
        let mut pieces = Vec::new();
        let mut i = 0;
        while i < merged.len() {
            if i + 1 < merged.len() {
                if let Some(m) = touching_point(&merged[i].support, &merged[i + 1].support) {
                    if let Some(p) = Piece::join(&merged[i], &merged[i + 1], &m) {
                        pieces.push(p);
                        i += 2;
                        continue;
                    }
                }
            }
            pieces.push(Piece::from_atom(&merged[i]));
            i += 1;
        }
        Ok(PiecewiseFn { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn atoms(&self) -> Vec<Atom> {
        self.pieces.iter().flat_map(|p| p.atoms()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn domain(&self) -> DomainSet {
        DomainSet::from_intervals(self.pieces.iter().map(|p| p.support.clone()))
    }

    pub fn identity(d: &DomainSet) -> Self {
        Self::affine(qi(1), qi(0), d)
    }

    pub fn identity_on(i: &Interval) -> Self {
        Self::identity(&DomainSet::single(i.clone()))
    }

    pub fn constant(k: Q, d: &DomainSet) -> Self {
        Self::affine(qi(0), k, d)
    }

    /// `x -> a*x + b` on `d`.
    pub fn affine(a: Q, b: Q, d: &DomainSet) -> Self {
        let atoms = d
            .intervals()
            .iter()
            .map(|i| Atom { form: Form::Affine { a: a.clone(), b: b.clone() }, support: i.clone() })
            .collect();
        Self::from_atoms(atoms).expect("disjoint components")
    }

    /// A single piece on one interval.
    pub fn single(a: Q, parity: Parity, h: Q, r: Q, k: Q, support: Interval) -> Result<Self, SymError> {
        Self::new(alloc::vec![Piece::new(a, parity, h, r, k, support)])
    }

    pub fn restrict(&self, d: &DomainSet) -> Self {
        let mut atoms = Vec::new();
        for a in self.atoms() {
            for i in d.intervals() {
                let s = a.support.intersect(i);
                if !s.is_empty() {
                    atoms.push(Atom { form: a.form.clone(), support: s });
                }
            }
        }
        Self::from_atoms(atoms).expect("restriction keeps supports disjoint")
    }

    pub fn restrict_interval(&self, i: &Interval) -> Self {
        self.restrict(&DomainSet::single(i.clone()))
    }

    fn atom_at(&self, x: &Q) -> Option<Atom> {
        self.atoms().into_iter().find(|a| a.support.contains(x))
    }

    pub fn evaluate(&self, x: &Q) -> Result<PowerValue, SymError> {
        let a = self.atom_at(x).ok_or_else(|| SymError::OutOfDomain(x.clone()))?;
        let (term, offset) = a.form.value(x);
        Ok(PowerValue { term, offset })
    }

    /// Value at `x`, required to be rational.
    pub fn eval_q(&self, x: &Q) -> Result<Q, SymError> {
        let v = self.evaluate(x)?;
        v.to_rational().ok_or_else(|| {
            SymError::NotInFragment(alloc::format!("value at {} is irrational", crate::rational::fmt_q(x)))
        })
    }

    /// Image as a union of intervals with rational endpoints.
    pub fn image(&self) -> Result<DomainSet, SymError> {
        let mut v = Vec::new();
        for a in self.atoms() {
            v.push(a.image()?);
        }
        Ok(DomainSet::from_intervals(v))
    }

    /// Image of a subset of the domain.
    pub fn image_of(&self, s: &Interval) -> Result<DomainSet, SymError> {
        self.restrict_interval(s).image()
    }

    /// Rational solutions of `f(x) = y`, sorted.
    pub fn preimages(&self, y: &Q) -> Result<Vec<Q>, SymError> {
        let mut out = Vec::new();
        for a in self.atoms() {
            if a.form.is_constant() {
                if a.form.eval_q(&a.support.sample().unwrap_or_else(Q::zero)).as_ref() == Some(y) {
                    return Err(SymError::NotInFragment("constant piece has a continuum of preimages".into()));
                }
                continue;
            }
            let p = a.form.preimage(&Interval::point(y.clone()))?.intersect(&a.support);
            if let Some(x) = p.sample() {
                if p.is_point() {
                    out.push(x);
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Points where the local form may change: centers and breakpoints.
    pub fn special_points(&self) -> Vec<Q> {
        let mut v = Vec::new();
        for p in &self.pieces {
            v.extend(p.support.finite_ends());
            if !p.a.is_zero() && !(p.r.is_one() && p.parity == Parity::Odd) {
                v.push(p.h.clone());
            }
        }
        v.sort();
        v.dedup();
        v
    }

    /// Rational fixed points, plus `None` if some piece is the identity.
    pub fn fixed_points(&self) -> Vec<Q> {
        let mut v = Vec::new();
        for a in self.atoms() {
            match &a.form {
                Form::Affine { a: s, b } => {
                    if !s.is_one() {
                        let x = b / (qi(1) - s);
                        if a.support.contains(&x) {
                            v.push(x);
                        }
                    }
                }
                Form::Power { h, .. } => {
                    if a.support.contains(h) && a.form.eval_q(h).as_ref() == Some(h) {
                        v.push(h.clone());
                    }
                }
            }
        }
        v.sort();
        v.dedup();
        v
    }

    pub fn is_identity(&self) -> bool {
        self.atoms().iter().all(|a| a.form.is_identity())
    }

    pub fn to_text(&self) -> String {
        alloc::format!("{}", self)
    }
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return f.write_str("empty");
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}", p)?;
        }
        Ok(())
    }
}

/// Germ of a map at `base`: the one-sided forms active just left and right of it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Germ {
    pub base: Q,
    pub left: Option<Form>,
    pub right: Option<Form>,
}

impl Germ {
    pub fn of(f: &PiecewiseFn, x: &Q) -> Result<Germ, SymError> {
        if !f.domain().contains(x) {
            return Err(SymError::OutOfDomain(x.clone()));
        }
        let xe = Ext::Fin(x.clone());
        let mut g = Germ { base: x.clone(), left: None, right: None };
        for a in f.atoms() {
            if a.support.lo < xe && xe <= a.support.hi {
                g.left = Some(a.form.clone());
            }
            if a.support.lo <= xe && xe < a.support.hi {
                g.right = Some(a.form.clone());
            }
        }
        if g.left.is_none() && g.right.is_none() {
            return Err(SymError::OutOfDomain(x.clone()));
        }
        Ok(g)
    }

    /// Germ of the identity at `x`.
    pub fn identity(x: Q) -> Germ {
        Germ { base: x, left: Some(Form::identity()), right: Some(Form::identity()) }
    }

    pub fn is_identity(&self) -> bool {
        self.left.iter().chain(self.right.iter()).all(|f| f.is_identity())
    }

    /// Value at the base point.
    pub fn value(&self) -> Option<Q> {
        self.right.as_ref().or(self.left.as_ref()).and_then(|f| f.eval_q(&self.base))
    }

    /// Germs agree on every side both define.
    pub fn agrees(&self, other: &Germ) -> bool {
        if self.base != other.base {
            return false;
        }
        let mut shared = false;
        for (a, b) in [(&self.left, &other.left), (&self.right, &other.right)] {
            if let (Some(a), Some(b)) = (a, b) {
                shared = true;
                if a != b {
                    return false;
                }
            }
        }
        shared
    }

    /// A representative map on a small neighbourhood.
    pub fn representative(&self, radius: &Q) -> PiecewiseFn {
        let mut atoms = Vec::new();
        if let Some(l) = &self.left {
            atoms.push(Atom {
                form: l.clone(),
                support: Interval::open_closed(&self.base - radius, self.base.clone())
                    .intersect(&l.natural_domain()),
            });
        }
        if let Some(r) = &self.right {
            let lo_open = self.left.is_some();
            atoms.push(Atom {
                form: r.clone(),
                support: Interval::new(Ext::Fin(self.base.clone()), Ext::Fin(&self.base + radius), lo_open, true)
                    .intersect(&r.natural_domain()),
            });
        }
        PiecewiseFn::from_atoms(atoms).expect("germ sides are disjoint")
    }
}

impl fmt::Display for Germ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rep = self.representative(&qi(1));
        write!(f, "germ@{}[{}]", crate::rational::fmt_q(&self.base), rep)
    }
}
