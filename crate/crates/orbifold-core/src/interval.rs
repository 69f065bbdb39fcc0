//! Intervals with rational or infinite endpoints, and finite unions of them.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::rational::{fmt_q, mid, qi, Q};

/// Extended rational: a finite value or one of the two infinities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    NegInf,
    Fin(Q),
    PosInf,
}

impl Ext {
    pub fn fin(&self) -> Option<&Q> {
        match self {
            Ext::Fin(q) => Some(q),
            _ => None,
        }
    }
}

impl From<Q> for Ext {
    fn from(q: Q) -> Self {
        Ext::Fin(q)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => f.write_str("-inf"),
            Ext::PosInf => f.write_str("inf"),
            Ext::Fin(q) => f.write_str(&fmt_q(q)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Ext,
    pub hi: Ext,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn new(lo: Ext, hi: Ext, lo_open: bool, hi_open: bool) -> Self {
        let lo_open = lo_open || lo == Ext::NegInf;
        let hi_open = hi_open || hi == Ext::PosInf;
        Interval { lo, hi, lo_open, hi_open }
    }

    pub fn open(lo: Q, hi: Q) -> Self {
        Self::new(Ext::Fin(lo), Ext::Fin(hi), true, true)
    }

    pub fn closed(lo: Q, hi: Q) -> Self {
        Self::new(Ext::Fin(lo), Ext::Fin(hi), false, false)
    }

    /// `[lo, hi)`
    pub fn closed_open(lo: Q, hi: Q) -> Self {
        Self::new(Ext::Fin(lo), Ext::Fin(hi), false, true)
    }

    /// `(lo, hi]`
    pub fn open_closed(lo: Q, hi: Q) -> Self {
        Self::new(Ext::Fin(lo), Ext::Fin(hi), true, false)
    }

    pub fn point(x: Q) -> Self {
        Self::closed(x.clone(), x)
    }

    pub fn real_line() -> Self {
        Self::new(Ext::NegInf, Ext::PosInf, true, true)
    }

    pub fn empty() -> Self {
        Self::open(qi(0), qi(0))
    }

    pub fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Greater => true,
            Ordering::Equal => self.lo_open || self.hi_open,
            Ordering::Less => false,
        }
    }

    pub fn is_point(&self) -> bool {
        !self.is_empty() && self.lo == self.hi
    }

    pub fn is_open(&self) -> bool {
        self.lo_open && self.hi_open
    }

    pub fn contains(&self, x: &Q) -> bool {
        let x = Ext::Fin(x.clone());
        let lo_ok = if self.lo_open { self.lo < x } else { self.lo <= x };
        let hi_ok = if self.hi_open { x < self.hi } else { x <= self.hi };
        lo_ok && hi_ok
    }

    pub fn contains_interior(&self, x: &Q) -> bool {
        let x = Ext::Fin(x.clone());
        self.lo < x && x < self.hi
    }

    /// True when `x` lies in the topological closure.
    pub fn closure_contains(&self, x: &Q) -> bool {
        if self.is_empty() {
            return false;
        }
        let x = Ext::Fin(x.clone());
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_open) = match self.lo.cmp(&other.lo) {
            Ordering::Less => (other.lo.clone(), other.lo_open),
            Ordering::Greater => (self.lo.clone(), self.lo_open),
            Ordering::Equal => (self.lo.clone(), self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_open),
            Ordering::Greater => (other.hi.clone(), other.hi_open),
            Ordering::Equal => (self.hi.clone(), self.hi_open || other.hi_open),
        };
        Interval::new(lo, hi, lo_open, hi_open)
    }

    pub fn is_subset(&self, other: &Interval) -> bool {
        self.is_empty() || self.intersect(other) == *self
    }

    pub fn interior(&self) -> Interval {
        Interval::new(self.lo.clone(), self.hi.clone(), true, true)
    }

    /// Part strictly left of `x` together with `x` (if `keep_x`), and the rest.
    pub fn split_at(&self, x: &Q, left_owns: bool) -> (Interval, Interval) {
        let l = Interval::new(self.lo.clone(), Ext::Fin(x.clone()), self.lo_open, !left_owns);
        let r = Interval::new(Ext::Fin(x.clone()), self.hi.clone(), left_owns, self.hi_open);
        (self.intersect(&l), self.intersect(&r))
    }

    /// A rational point inside a nonempty interval.
    pub fn sample(&self) -> Option<Q> {
        if self.is_empty() {
            return None;
        }
        Some(match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => mid(a, b),
            (Ext::Fin(a), Ext::PosInf) => a + qi(1),
            (Ext::NegInf, Ext::Fin(b)) => b - qi(1),
            _ => qi(0),
        })
    }

    /// Finite endpoints that belong to the interval's closure.
    pub fn finite_ends(&self) -> Vec<Q> {
        let mut v = Vec::new();
        if let Ext::Fin(a) = &self.lo {
            v.push(a.clone());
        }
        if let Ext::Fin(b) = &self.hi {
            if v.last() != Some(b) {
                v.push(b.clone());
            }
        }
        v
    }

    pub fn to_text(&self) -> String {
        alloc::format!("{}", self)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Orders intervals by left end (closed before open at equal ends).
fn lo_key(i: &Interval) -> (Ext, bool) {
    (i.lo.clone(), i.lo_open)
}

/// Do `a` and `b` (with `a.lo <= b.lo`) overlap or touch?
fn joinable(a: &Interval, b: &Interval) -> bool {
    match a.hi.cmp(&b.lo) {
        Ordering::Greater => true,
        Ordering::Equal => !(a.hi_open && b.lo_open),
        Ordering::Less => false,
    }
}

/// A finite union of pairwise disjoint, non-touching intervals, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct DomainSet {
    intervals: Vec<Interval>,
}

impl DomainSet {
    pub fn empty() -> Self {
        DomainSet { intervals: Vec::new() }
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(it: I) -> Self {
        let mut v: Vec<Interval> = it.into_iter().filter(|i| !i.is_empty()).collect();
        v.sort_by_key(lo_key);
        let mut out: Vec<Interval> = Vec::new();
        for i in v {
            if let Some(last) = out.last_mut() {
                if joinable(last, &i) {
                    match last.hi.cmp(&i.hi) {
                        Ordering::Less => {
                            last.hi = i.hi.clone();
                            last.hi_open = i.hi_open;
                        }
                        Ordering::Equal => last.hi_open = last.hi_open && i.hi_open,
                        Ordering::Greater => {}
                    }
                    continue;
                }
            }
            out.push(i);
        }
        DomainSet { intervals: out }
    }

    pub fn single(i: Interval) -> Self {
        Self::from_intervals([i])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn union(&self, other: &DomainSet) -> DomainSet {
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).cloned())
    }

    pub fn intersect(&self, other: &DomainSet) -> DomainSet {
        let mut v = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                v.push(a.intersect(b));
            }
        }
        Self::from_intervals(v)
    }

    pub fn intersect_interval(&self, i: &Interval) -> DomainSet {
        self.intersect(&DomainSet::single(i.clone()))
    }

    pub fn is_subset(&self, other: &DomainSet) -> bool {
        self.intersect(other) == *self
    }

    /// Points of `self` not in `other`.
    pub fn minus(&self, other: &DomainSet) -> DomainSet {
        let mut current: Vec<Interval> = self.intervals.clone();
        for o in &other.intervals {
            let mut next = Vec::new();
            for i in current {
                let left = Interval::new(i.lo.clone(), o.lo.clone(), i.lo_open, !o.lo_open);
                let right = Interval::new(o.hi.clone(), i.hi.clone(), !o.hi_open, i.hi_open);
                next.push(i.intersect(&left));
                next.push(i.intersect(&right));
            }
            current = next.into_iter().filter(|i| !i.is_empty()).collect();
        }
        Self::from_intervals(current)
    }

    /// Component containing `x`.
    pub fn component_of(&self, x: &Q) -> Option<&Interval> {
        self.intervals.iter().find(|i| i.contains(x))
    }

    pub fn as_interval(&self) -> Option<&Interval> {
        if self.intervals.len() == 1 {
            self.intervals.first()
        } else {
            None
        }
    }
}

impl fmt::Display for DomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        for (n, i) in self.intervals.iter().enumerate() {
            if n > 0 {
                f.write_str(" u ")?;
            }
            write!(f, "{}", i)?;
        }
        Ok(())
    }
}
