//! One-sided normal forms. Every piece splits into at most two of these
//! (left and right of its center), and the split is unique for a given map,
//! which makes structural equality of canonical maps semantic equality.

use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::SymError;
use crate::interval::{Ext, Interval};
use crate::rational::{is_integer, pow_rat, powi, qi, Q};

/// A monotone (or constant) closed-form map on an interval lying on one side
/// of its center.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    /// `x -> a*x + b`; `a == 0` is a constant.
    Affine { a: Q, b: Q },
    /// `x -> c*|x-h|^r + k` for `x` on the `right` (or left) side of `h`.
    /// Never has `r == 1` or `c == 0`.
    Power { h: Q, r: Q, right: bool, c: Q, k: Q },
}

/// `coef * base^exp` with `base >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coef: Q,
    pub base: Q,
    pub exp: Q,
}

impl Monomial {
    pub fn rational(v: Q) -> Self {
        Monomial { coef: v, base: qi(1), exp: qi(1) }
    }

    pub fn to_rational(&self) -> Option<Q> {
        if self.coef.is_zero() {
            return Some(Q::zero());
        }
        pow_rat(&self.base, &self.exp).map(|p| &self.coef * p)
    }

    pub fn equals(&self, other: &Monomial) -> bool {
        crate::rational::monomials_equal(
            &self.coef,
            &self.base,
            &self.exp,
            &other.coef,
            &other.base,
            &other.exp,
        )
    }
}

impl Form {
    pub fn identity() -> Self {
        Form::Affine { a: qi(1), b: qi(0) }
    }

    pub fn constant(k: Q) -> Self {
        Form::Affine { a: qi(0), b: k }
    }

    /// Builds a power form, collapsing `c == 0` and `r == 1` to affine forms.
    pub fn power(h: Q, r: Q, right: bool, c: Q, k: Q) -> Self {
        if c.is_zero() {
            return Form::constant(k);
        }
        if r.is_one() {
            return if right {
                Form::Affine { b: k - &c * &h, a: c }
            } else {
                Form::Affine { b: k + &c * &h, a: -c }
            };
        }
        Form::Power { h, r, right, c, k }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Form::Affine { a, .. } if a.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Form::Affine { a, b } if a.is_one() && b.is_zero())
    }

    /// +1 increasing, -1 decreasing, 0 constant.
    pub fn direction(&self) -> i32 {
        match self {
            Form::Affine { a, .. } => crate::rational::sign(a),
            Form::Power { right, c, .. } => {
                let s = crate::rational::sign(c);
                if *right {
                    s
                } else {
                    -s
                }
            }
        }
    }

    /// Exact value as `coef*base^exp + k`.
    pub fn value(&self, x: &Q) -> (Monomial, Q) {
        match self {
            Form::Affine { a, b } => (Monomial::rational(a * x), b.clone()),
            Form::Power { h, r, c, k, .. } => (
                Monomial { coef: c.clone(), base: (x - h).abs(), exp: r.clone() },
                k.clone(),
            ),
        }
    }

    pub fn eval_q(&self, x: &Q) -> Option<Q> {
        let (m, k) = self.value(x);
        m.to_rational().map(|v| v + k)
    }

    /// The `n`-th derivative at `x` for `n >= 1`; `None` when it blows up.
    pub fn derivative(&self, n: u32, x: &Q) -> Option<Monomial> {
        match self {
            Form::Affine { a, b } => Some(match n {
                0 => Monomial::rational(a * x + b),
                1 => Monomial::rational(a.clone()),
                _ => Monomial::rational(Q::zero()),
            }),
            Form::Power { h, r, right, c, .. } => {
                let mut coef = c.clone();
                for i in 0..n {
                    coef *= r - qi(i as i64);
                }
                if !*right && n % 2 == 1 {
                    coef = -coef;
                }
                let t = (x - h).abs();
                let exp = r - qi(n as i64);
                let mut m = Monomial { coef, base: t.clone(), exp: exp.clone() };
                if t.is_zero() {
                    if m.coef.is_zero() || exp.is_positive() {
                        m = Monomial::rational(Q::zero());
                    } else if exp.is_zero() {
                        m = Monomial::rational(m.coef.clone());
                    } else {
                        return None;
                    }
                }
                Some(m)
            }
        }
    }

    /// Exact equality of two `(monomial, constant)` values.
    pub fn values_equal(x: &(Monomial, Q), y: &(Monomial, Q)) -> bool {
        match (x.0.to_rational(), y.0.to_rational()) {
            (Some(a), Some(b)) => a + &x.1 == b + &y.1,
            (None, None) => x.1 == y.1 && x.0.equals(&y.0),
            _ => false,
        }
    }

    /// Highest order with a nonzero derivative when the form is polynomial.
    pub fn poly_degree(&self) -> Option<u32> {
        match self {
            Form::Affine { a, .. } => Some(if a.is_zero() { 0 } else { 1 }),
            Form::Power { r, .. } => {
                if is_integer(r) {
                    crate::rational::as_small_u32(r)
                } else {
                    None
                }
            }
        }
    }

    /// Values `y` the form attains on its natural one-sided domain.
    pub fn natural_range(&self) -> Interval {
        match self {
            Form::Affine { a, b } if a.is_zero() => Interval::point(b.clone()),
            Form::Affine { .. } => Interval::real_line(),
            Form::Power { c, k, .. } => {
                if c.is_positive() {
                    Interval::new(Ext::Fin(k.clone()), Ext::PosInf, false, true)
                } else {
                    Interval::new(Ext::NegInf, Ext::Fin(k.clone()), true, false)
                }
            }
        }
    }

    /// Natural one-sided domain of the form.
    pub fn natural_domain(&self) -> Interval {
        match self {
            Form::Affine { .. } => Interval::real_line(),
            Form::Power { h, right: true, .. } => {
                Interval::new(Ext::Fin(h.clone()), Ext::PosInf, false, true)
            }
            Form::Power { h, right: false, .. } => {
                Interval::new(Ext::NegInf, Ext::Fin(h.clone()), true, false)
            }
        }
    }

    /// Inverse form of a non-constant form.
    pub fn inverse(&self) -> Result<Form, SymError> {
        match self {
            Form::Affine { a, b } => {
                if a.is_zero() {
                    return Err(SymError::NotInFragment("constant map has no inverse".into()));
                }
                Ok(Form::Affine { a: a.recip(), b: -(b / a) })
            }
            Form::Power { h, r, right, c, k } => {
                let rinv = r.recip();
                let scale = pow_rat(&c.abs(), &(-&rinv)).ok_or_else(|| {
                    SymError::NotInFragment(alloc::format!(
                        "inverse scale |{}|^(-1/{}) is irrational",
                        crate::rational::fmt_q(c),
                        crate::rational::fmt_q(r)
                    ))
                })?;
                let s = if *right { scale } else { -scale };
                Ok(Form::power(k.clone(), rinv, c.is_positive(), s, h.clone()))
            }
        }
    }

    /// Image of an endpoint under the form, extended to infinities.
    pub fn map_ext(&self, e: &Ext) -> Result<Ext, SymError> {
        match e {
            Ext::Fin(x) => self
                .eval_q(x)
                .map(Ext::Fin)
                .ok_or_else(|| SymError::NotInFragment("irrational interval endpoint".into())),
            inf => {
                let d = self.direction();
                if d == 0 {
                    return Ok(Ext::Fin(match self {
                        Form::Affine { b, .. } => b.clone(),
                        _ => unreachable!(),
                    }));
                }
                let up = (*inf == Ext::PosInf) == (d > 0);
                Ok(if up { Ext::PosInf } else { Ext::NegInf })
            }
        }
    }

    /// Image of an interval inside the natural domain.
    pub fn image(&self, s: &Interval) -> Result<Interval, SymError> {
        let d = self.direction();
        if d == 0 {
            return Ok(Interval::point(match self {
                Form::Affine { b, .. } => b.clone(),
                _ => unreachable!(),
            }));
        }
        let lo = self.map_ext(&s.lo)?;
        let hi = self.map_ext(&s.hi)?;
        Ok(if d > 0 {
            Interval::new(lo, hi, s.lo_open, s.hi_open)
        } else {
            Interval::new(hi, lo, s.hi_open, s.lo_open)
        })
    }

    /// `{x in natural domain : form(x) in t}`.
    pub fn preimage(&self, t: &Interval) -> Result<Interval, SymError> {
        if self.direction() == 0 {
            let b = match self {
                Form::Affine { b, .. } => b,
                _ => unreachable!(),
            };
            return Ok(if t.contains(b) { Interval::real_line() } else { Interval::empty() });
        }
        let tt = t.intersect(&self.natural_range());
        if tt.is_empty() {
            return Ok(Interval::empty());
        }
        let inv = self.inverse_lenient();
        let img = inv.image_nat(&tt)?;
        Ok(img.intersect(&self.natural_domain()))
    }

    /// Inverse used only on endpoints: exact when roots are rational.
    fn inverse_lenient(&self) -> InverseMap<'_> {
        InverseMap { f: self }
    }

    /// Composition `self ∘ inner`, where `inner` maps into the natural domain of `self`.
    pub fn after(&self, inner: &Form) -> Result<Form, SymError> {
        match (self, inner) {
            (Form::Affine { a, b }, _) if a.is_zero() => Ok(Form::constant(b.clone())),
            (_, Form::Affine { a, b }) if a.is_zero() => {
                let v = self.eval_q(b).ok_or_else(|| {
                    SymError::NotInFragment("constant composite has irrational value".into())
                })?;
                Ok(Form::constant(v))
            }
            (Form::Affine { a: a2, b: b2 }, Form::Affine { a: a1, b: b1 }) => {
                Ok(Form::Affine { a: a2 * a1, b: a2 * b1 + b2 })
            }
            (Form::Affine { a: a2, b: b2 }, Form::Power { h, r, right, c, k }) => Ok(Form::power(
                h.clone(),
                r.clone(),
                *right,
                a2 * c,
                a2 * k + b2,
            )),
            (Form::Power { h: h2, r: r2, right: s2, c: c2, k: k2 }, Form::Affine { a: a1, b: b1 }) => {
                let m = (h2 - b1) / a1;
                let scale = pow_rat(&a1.abs(), r2).ok_or_else(|| {
                    SymError::NotInFragment("rescaled power has irrational coefficient".into())
                })?;
                let side = if a1.is_positive() { *s2 } else { !*s2 };
                Ok(Form::power(m, r2.clone(), side, c2 * scale, k2.clone()))
            }
            (
                Form::Power { h: h2, r: r2, c: c2, k: k2, .. },
                Form::Power { h: h1, r: r1, right: s1, c: c1, k: k1 },
            ) => {
                if k1 != h2 {
                    return Err(SymError::NotInFragment(alloc::format!(
                        "power center {} does not match inner offset {}",
                        crate::rational::fmt_q(h2),
                        crate::rational::fmt_q(k1)
                    )));
                }
                let scale = pow_rat(&c1.abs(), r2).ok_or_else(|| {
                    SymError::NotInFragment("composite power has irrational coefficient".into())
                })?;
                Ok(Form::power(h1.clone(), r1 * r2, *s1, c2 * scale, k2.clone()))
            }
        }
    }
}

struct InverseMap<'a> {
    f: &'a Form,
}

impl InverseMap<'_> {
    /// Image of `t` (inside the natural range) under the inverse.
    fn image_nat(&self, t: &Interval) -> Result<Interval, SymError> {
        let d = self.f.direction();
        let map = |e: &Ext| -> Result<Ext, SymError> {
            match e {
                Ext::Fin(y) => self.inv_point(y).map(Ext::Fin),
                inf => {
                    // infinities map to the unbounded end of the natural domain
                    let up = (*inf == Ext::PosInf) == (d > 0);
                    Ok(if up { Ext::PosInf } else { Ext::NegInf })
                }
            }
        };
        let lo = map(&t.lo)?;
        let hi = map(&t.hi)?;
        Ok(if d > 0 {
            Interval::new(lo, hi, t.lo_open, t.hi_open)
        } else {
            Interval::new(hi, lo, t.hi_open, t.lo_open)
        })
    }

    fn inv_point(&self, y: &Q) -> Result<Q, SymError> {
        match self.f {
            Form::Affine { a, b } => Ok((y - b) / a),
            Form::Power { h, r, right, c, k } => {
                let u = (y - k) / c;
                let root = pow_rat(&u, &r.recip()).ok_or_else(|| {
                    SymError::NotInFragment(alloc::format!(
                        "breakpoint preimage of {} is irrational",
                        crate::rational::fmt_q(y)
                    ))
                })?;
                Ok(if *right { h + root } else { h - root })
            }
        }
    }
}

/// Sample points used to look for rational witnesses inside an interval.
pub(crate) fn rational_samples(s: &Interval, n: usize) -> Vec<Q> {
    let mut v = Vec::new();
    match (&s.lo, &s.hi) {
        (Ext::Fin(a), Ext::Fin(b)) => {
            let w = b - a;
            if w.is_zero() {
                v.push(a.clone());
                return v;
            }
            // midpoint first, then dyadic fractions
            v.push(a + &w / qi(2));
            let mut den = 4i64;
            while v.len() < n && den <= 1 << 12 {
                for j in (1..den).step_by(2) {
                    v.push(a + &w * Q::new(j.into(), den.into()));
                    if v.len() >= n {
                        break;
                    }
                }
                den *= 2;
            }
        }
        _ => {
            let c = s.sample().unwrap_or_else(Q::zero);
            for j in 0..n as i64 {
                let p = &c + qi(j) * powi(&qi(2), -(j as i32 % 3));
                if s.contains(&p) {
                    v.push(p);
                }
            }
        }
    }
    v
}
