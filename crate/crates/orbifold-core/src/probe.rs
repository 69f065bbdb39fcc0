//! Deterministic probe grids: interval endpoints, piece centers, fixed points
//! and midpoints between consecutive such points.

use alloc::vec::Vec;

use crate::interval::{Ext, Interval};
use crate::rational::{mid, qi, Q};
use crate::symfun::PiecewiseFn;

pub fn grid(domain: &Interval, fns: &[&PiecewiseFn], extra: &[Q]) -> Vec<Q> {
    let mut pts: Vec<Q> = domain.finite_ends();
    for f in fns {
        pts.extend(f.special_points());
        pts.extend(f.fixed_points());
    }
    pts.extend(extra.iter().cloned());
    pts.retain(|p| domain.closure_contains(p));
    if let Ext::Fin(a) = &domain.lo {
        if domain.hi == Ext::PosInf {
            pts.push(a + qi(1));
        }
    }
    if let Ext::Fin(b) = &domain.hi {
        if domain.lo == Ext::NegInf {
            pts.push(b - qi(1));
        }
    }
    if pts.is_empty() {
        pts.push(domain.sample().unwrap_or_else(|| qi(0)));
    }
    pts.sort();
    pts.dedup();
    let mut out = Vec::new();
    for w in pts.windows(2) {
        out.push(w[0].clone());
        out.push(mid(&w[0], &w[1]));
    }
    out.push(pts.last().expect("nonempty").clone());
    if pts.len() == 1 {
        if let Some(s) = domain.sample() {
            out.push(s);
        }
    }
    out.retain(|p| domain.contains(p));
    out.sort();
    out.dedup();
    out
}
