use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::form::{rational_samples, Form};
use super::{Atom, Germ, PiecewiseFn, SymError};
use crate::interval::{DomainSet, Interval};
use crate::rational::{floor, is_integer, qi, Q};

/// `outer ∘ inner` on `inner⁻¹(dom outer ∩ cod inner)`.
pub fn compose(outer: &PiecewiseFn, inner: &PiecewiseFn) -> Result<PiecewiseFn, SymError> {
    let outer_atoms = outer.atoms();
    let outer_dom = outer.domain();
    let mut out = Vec::new();
    for a in inner.atoms() {
        if a.form.is_constant() {
            let k = a.form.eval_q(&qi(0)).expect("constant");
            if outer_dom.contains(&k) {
                let v = outer.eval_q(&k)?;
                out.push(Atom { form: Form::constant(v), support: a.support.clone() });
            }
            continue;
        }
        let img = a.image().ok();
        for b in &outer_atoms {
            let target = match &img {
                Some(i) => b.support.intersect(i),
                None => b.support.clone(),
            };
            if target.is_empty() {
                continue;
            }
            let pre = a.form.preimage(&target)?.intersect(&a.support);
            if pre.is_empty() {
                continue;
            }
            out.push(Atom { form: b.form.after(&a.form)?, support: pre });
        }
    }
    PiecewiseFn::from_atoms(out)
}

/// Looks for rational `x1 != x2` with `a1(x1) = a2(x2)`, both in `overlap`.
fn rational_witness(a1: &Atom, a2: &Atom, overlap: &Interval) -> Option<(Q, Q)> {
    let region = a1
        .form
        .preimage(overlap)
        .map(|p| p.intersect(&a1.support))
        .unwrap_or_else(|_| a1.support.clone());
    let inv2 = a2.form.inverse().ok();
    for x1 in rational_samples(&region, 64) {
        let Some(y) = a1.form.eval_q(&x1) else { continue };
        if !overlap.contains(&y) {
            continue;
        }
        let x2 = match &inv2 {
            Some(inv) => inv.eval_q(&y),
            None => a2.support.sample(),
        };
        if let Some(x2) = x2 {
            if x2 != x1 && a2.support.contains(&x2) {
                return Some(if x1 < x2 { (x1, x2) } else { (x2, x1) });
            }
        }
    }
    None
}

/// Injectivity check; on success returns the atom images.
fn check_injective(f: &PiecewiseFn) -> Result<Vec<(Atom, Interval)>, SymError> {
    let atoms = f.atoms();
    let mut imgs = Vec::new();
    for a in &atoms {
        if a.form.is_constant() && !a.support.is_point() {
            let s = rational_samples(&a.support, 3);
            return Err(SymError::NotInjective(s[1].clone().min(s[2].clone()), s[1].clone().max(s[2].clone())));
        }
        imgs.push((a.clone(), a.image()?));
    }
    for i in 0..imgs.len() {
        for j in i + 1..imgs.len() {
            let o = imgs[i].1.intersect(&imgs[j].1);
            if o.is_empty() {
                continue;
            }
            return Err(match rational_witness(&imgs[i].0, &imgs[j].0, &o) {
                Some((x, y)) => SymError::NotInjective(x, y),
                None => SymError::NotInjectiveOverlap(o),
            });
        }
    }
    Ok(imgs)
}

/// Inverse of an injective map, defined on its image.
pub fn invert(f: &PiecewiseFn) -> Result<PiecewiseFn, SymError> {
    let imgs = check_injective(f)?;
    let mut out = Vec::new();
    for (a, img) in imgs {
        let form = if a.form.is_constant() {
            Form::constant(a.support.sample().expect("nonempty"))
        } else {
            a.form.inverse()?
        };
        out.push(Atom { form, support: img });
    }
    PiecewiseFn::from_atoms(out)
}

/// Do `f` and `g` have the same germ at `x`?
pub fn germ_equal(f: &PiecewiseFn, g: &PiecewiseFn, x: &Q) -> Result<bool, SymError> {
    let a = Germ::of(f, x)?;
    let b = Germ::of(g, x)?;
    let both = (a.left.is_some() && b.left.is_some()) || (a.right.is_some() && b.right.is_some());
    if !both {
        return Err(SymError::OutOfDomain(x.clone()));
    }
    Ok(a.agrees(&b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JetFailure {
    /// One-sided derivatives of this order disagree.
    Jump,
    /// The derivative of this order is unbounded.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Smoothness {
    Smooth,
    NotSmooth { at: Q, order: u32, kind: JetFailure },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DiffeoFailure {
    NotSmooth { at: Q, order: u32, kind: JetFailure },
    CriticalPoint(Q),
    NotInjective(Q, Q),
    /// Images of two pieces overlap but no rational witness pair was found.
    NotInjectiveOverlap(Interval),
    /// Injectivity could not be decided inside the fragment.
    Undecided(alloc::string::String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Diffeo {
    Diffeo,
    Fails(DiffeoFailure),
}

impl Diffeo {
    pub fn is_diffeo(&self) -> bool {
        matches!(self, Diffeo::Diffeo)
    }
}

const MAX_JET_ORDER: u32 = 12;

/// First order at which the jets of `l` (from the left) and `r` (from the right) differ at `m`.
fn jet_mismatch(l: &Form, r: &Form, m: &Q) -> Option<(u32, JetFailure)> {
    let (vl, vr) = (l.value(m), r.value(m));
    if !Form::values_equal(&vl, &vr) {
        return Some((0, JetFailure::Jump));
    }
    let top = match (l.poly_degree(), r.poly_degree()) {
        (Some(a), Some(b)) => a.max(b),
        _ => MAX_JET_ORDER,
    };
    for n in 1..=top {
        match (l.derivative(n, m), r.derivative(n, m)) {
            (Some(a), Some(b)) => {
                if !a.equals(&b) {
                    return Some((n, JetFailure::Jump));
                }
            }
            _ => return Some((n, JetFailure::Unbounded)),
        }
    }
    None
}

impl PiecewiseFn {
    pub fn is_smooth(&self) -> Smoothness {
        let dom = self.domain();
        let atoms = self.atoms();
        let mut fails: Vec<(Q, u32, JetFailure)> = Vec::new();
        for a in &atoms {
            if let Form::Power { h, r, .. } = &a.form {
                if !is_integer(r) && a.support.closure_contains(h) && dom.contains(h) {
                    let order = floor(r) + qi(1);
                    let order = crate::rational::as_small_u32(&order).unwrap_or(u32::MAX);
                    fails.push((h.clone(), order, JetFailure::Unbounded));
                }
            }
        }
        for w in atoms.windows(2) {
            if let Some(m) = super::touching_point(&w[0].support, &w[1].support) {
                if let Some((n, kind)) = jet_mismatch(&w[0].form, &w[1].form, &m) {
                    fails.push((m, n, kind));
                }
            }
        }
        fails.sort();
        match fails.into_iter().next() {
            None => Smoothness::Smooth,
            Some((at, order, kind)) => Smoothness::NotSmooth { at, order, kind },
        }
    }

    pub fn is_continuous(&self) -> bool {
        let atoms = self.atoms();
        atoms.windows(2).all(|w| match super::touching_point(&w[0].support, &w[1].support) {
            Some(m) => Form::values_equal(&w[0].form.value(&m), &w[1].form.value(&m)),
            None => true,
        })
    }

    /// Interior points where the derivative vanishes (first one).
    pub fn critical_point(&self) -> Option<Q> {
        let dom = self.domain();
        let mut found = Vec::new();
        for a in self.atoms() {
            match &a.form {
                Form::Affine { a: s, .. } if s.is_zero() => {
                    if let Some(x) = a.support.interior().sample() {
                        if !a.support.is_point() {
                            found.push(x);
                        }
                    }
                }
                Form::Power { h, r, .. } if *r > Q::one() => {
                    let interior = dom.intervals().iter().any(|i| i.contains_interior(h));
                    if a.support.closure_contains(h) && interior {
                        found.push(h.clone());
                    }
                }
                _ => {}
            }
        }
        found.into_iter().min()
    }

    /// Smooth with nonvanishing derivative.
    pub fn is_local_diffeomorphism(&self) -> Diffeo {
        if let Smoothness::NotSmooth { at, order, kind } = self.is_smooth() {
            return Diffeo::Fails(DiffeoFailure::NotSmooth { at, order, kind });
        }
        if let Some(c) = self.critical_point() {
            return Diffeo::Fails(DiffeoFailure::CriticalPoint(c));
        }
        Diffeo::Diffeo
    }

    pub fn is_diffeomorphism(&self) -> Diffeo {
        let local = self.is_local_diffeomorphism();
        if !local.is_diffeo() {
            return local;
        }
        match check_injective(self) {
            Ok(_) => Diffeo::Diffeo,
            Err(SymError::NotInjective(x, y)) => Diffeo::Fails(DiffeoFailure::NotInjective(x, y)),
            Err(SymError::NotInjectiveOverlap(o)) => Diffeo::Fails(DiffeoFailure::NotInjectiveOverlap(o)),
            Err(e) => {
                // Irrational image endpoints: a continuous map on an interval whose
                // pieces all move the same way is still injective.
                if self.monotone_on_components() {
                    Diffeo::Diffeo
                } else {
                    Diffeo::Fails(DiffeoFailure::Undecided(alloc::format!("{}", e)))
                }
            }
        }
    }

    fn monotone_on_components(&self) -> bool {
        let d = self.domain();
        if d.intervals().len() != 1 || !self.is_continuous() {
            return false;
        }
        let dirs: Vec<i32> = self.atoms().iter().map(|a| a.form.direction()).collect();
        dirs.iter().all(|&s| s != 0 && s == dirs[0])
    }

    /// Is the map defined on a neighbourhood of `x`?
    pub fn defined_near(&self, x: &Q) -> bool {
        self.domain().intervals().iter().any(|i| i.contains_interior(x))
    }
}

/// Does `f` restricted to the domain of `g` equal `g`, and `dom g ⊆ dom f`?
pub fn extends(f: &PiecewiseFn, g: &PiecewiseFn) -> bool {
    let d = g.domain();
    d.is_subset(&f.domain()) && f.restrict(&d) == *g
}

/// Largest open set around `x` on which `f` and `g` agree, as an interval.
pub fn agreement_component(f: &PiecewiseFn, g: &PiecewiseFn, x: &Q) -> Option<Interval> {
    let d = f.domain().intersect(&g.domain());
    let mut good = Vec::new();
    for a in f.restrict(&d).atoms() {
        for b in g.restrict(&d).atoms() {
            let s = a.support.intersect(&b.support);
            if !s.is_empty() && a.form == b.form {
                good.push(s);
            }
        }
    }
    let set = DomainSet::from_intervals(good);
    let comp = set.component_of(x)?.clone();
    let open = comp.interior();
    if open.contains(x) {
        Some(open)
    } else {
        None
    }
}

