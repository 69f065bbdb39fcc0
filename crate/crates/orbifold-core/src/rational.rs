//! Exact rational helpers on top of `num_rational::BigRational`.

use alloc::string::String;
use core::fmt::Write;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = num_rational::BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

/// `x` as a `u32` when it is a small non-negative integer.
pub fn as_small_u32(x: &Q) -> Option<u32> {
    if is_integer(x) && !x.is_negative() {
        x.numer().to_u32()
    } else {
        None
    }
}

pub fn sign(x: &Q) -> i32 {
    match x.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Floor of a rational, as a rational.
pub fn floor(x: &Q) -> Q {
    x.floor()
}

fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    if k == 1 || n.is_zero() || n.is_one() {
        return Some(n.clone());
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// Exact `k`-th root of a non-negative rational, if it is rational.
pub fn exact_root(x: &Q, k: u32) -> Option<Q> {
    if x.is_negative() || k == 0 {
        return None;
    }
    let n = int_root(x.numer(), k)?;
    let d = int_root(x.denom(), k)?;
    Some(Q::new(n, d))
}

/// `base^exp` for `base >= 0`, when the result is rational.
pub fn pow_rat(base: &Q, exp: &Q) -> Option<Q> {
    if base.is_negative() {
        return None;
    }
    if exp.is_zero() {
        return Some(one());
    }
    if base.is_zero() {
        return if exp.is_positive() { Some(zero()) } else { None };
    }
    let s = exp.denom().to_u32()?;
    let p = exp.numer().abs().to_u32()?;
    let root = exact_root(base, s)?;
    let v = num_traits::pow(root, p as usize);
    Some(if exp.is_negative() { v.recip() } else { v })
}

/// Integer power (negative exponents allowed for non-zero bases).
pub fn powi(base: &Q, e: i32) -> Q {
    let v = num_traits::pow(base.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        v.recip()
    } else {
        v
    }
}

pub fn min(a: &Q, b: &Q) -> Q {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Q, b: &Q) -> Q {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn mid(a: &Q, b: &Q) -> Q {
    (a + b) / qi(2)
}

/// `n` for integers, `p/q` otherwise.
pub fn fmt_q(x: &Q) -> String {
    let mut s = String::new();
    if x.denom().is_one() {
        let _ = write!(s, "{}", x.numer());
    } else {
        let _ = write!(s, "{}/{}", x.numer(), x.denom());
    }
    s
}

/// Parses `n` or `p/q` (optional sign, no spaces inside).
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

/// Rational power of a possibly-irrational magnitude: `coef * base^exp`.
/// Equality is decided by raising both sides to a common integer power.
pub fn monomials_equal(c1: &Q, b1: &Q, e1: &Q, c2: &Q, b2: &Q, e2: &Q) -> bool {
    if sign(c1) != sign(c2) {
        return false;
    }
    if c1.is_zero() {
        return true;
    }
    // base == 0 with positive exponent makes the monomial zero
    let z1 = b1.is_zero() && e1.is_positive();
    let z2 = b2.is_zero() && e2.is_positive();
    if z1 || z2 {
        return z1 && z2;
    }
    let m = e1.denom().lcm(e2.denom());
    let Some(m) = m.to_u32() else { return false };
    let p1 = e1 * Q::from_integer(BigInt::from(m));
    let p2 = e2 * Q::from_integer(BigInt::from(m));
    let (Some(p1), Some(p2)) = (p1.to_integer().to_i32(), p2.to_integer().to_i32()) else {
        return false;
    };
    let lhs = powi(&c1.abs(), m as i32) * powi(b1, p1);
    let rhs = powi(&c2.abs(), m as i32) * powi(b2, p2);
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots() {
        assert_eq!(exact_root(&q(1, 4), 2), Some(q(1, 2)));
        assert_eq!(exact_root(&q(1, 2), 2), None);
        assert_eq!(pow_rat(&q(1, 4), &q(3, 2)), Some(q(1, 8)));
        assert_eq!(pow_rat(&q(4, 1), &q(-1, 2)), Some(q(1, 2)));
    }

    #[test]
    fn text() {
        assert_eq!(fmt_q(&q(-3, 6)), "-1/2");
        assert_eq!(fmt_q(&qi(4)), "4");
        assert_eq!(parse_q("-1/2"), Some(q(-1, 2)));
        assert_eq!(parse_q("1/0"), None);
    }

    #[test]
    fn monomials() {
        // sqrt(2) * 2 == sqrt(8)
        assert!(monomials_equal(&qi(2), &qi(2), &q(1, 2), &qi(1), &qi(8), &q(1, 2)));
        assert!(!monomials_equal(&qi(1), &qi(2), &q(1, 2), &qi(1), &qi(3), &q(1, 2)));
    }
}
