use alloc::string::ToString;
use alloc::vec::Vec;

use super::{Parity, Piece, PiecewiseFn, SymError};
use crate::interval::{Ext, Interval};
use crate::rational::parse_q;

fn parse_ext(s: &str) -> Option<Ext> {
    match s.trim() {
        "-inf" => Some(Ext::NegInf),
        "inf" | "+inf" => Some(Ext::PosInf),
        t => parse_q(t).map(Ext::Fin),
    }
}

/// Parses `(lo,hi)`, `[lo,hi)`, `(lo,hi]` or `[lo,hi]`.
pub fn parse_interval(s: &str) -> Result<Interval, SymError> {
    let s = s.trim();
    let err = || SymError::Parse(alloc::format!("expected interval, got `{}`", s));
    if s.len() < 2 {
        return Err(err());
    }
    let lo_open = match s.as_bytes()[0] {
        b'(' => true,
        b'[' => false,
        _ => return Err(err()),
    };
    let hi_open = match s.as_bytes()[s.len() - 1] {
        b')' => true,
        b']' => false,
        _ => return Err(err()),
    };
    let (a, b) = s[1..s.len() - 1].split_once(',').ok_or_else(err)?;
    let lo = parse_ext(a).ok_or_else(err)?;
    let hi = parse_ext(b).ok_or_else(err)?;
    let i = Interval::new(lo, hi, lo_open, hi_open);
    if i.is_empty() {
        return Err(SymError::Parse(alloc::format!("empty interval `{}`", s)));
    }
    Ok(i)
}

fn parse_piece(s: &str) -> Result<Piece, SymError> {
    let s = s.trim();
    let err = |m: &str| SymError::Parse(alloc::format!("{} in `{}`", m, s));
    let rest = s.strip_prefix("piece(").ok_or_else(|| err("expected `piece(`"))?;
    let (args, tail) = rest.split_once(')').ok_or_else(|| err("missing `)`"))?;
    let support = tail.trim().strip_prefix("on").ok_or_else(|| err("expected `on`"))?;
    let parts: Vec<&str> = args.split(',').map(|p| p.trim()).collect();
    if parts.len() != 5 {
        return Err(err("expected 5 arguments"));
    }
    let num = |t: &str| parse_q(t).ok_or_else(|| err("bad rational"));
    let parity = match parts[1] {
        "even" => Parity::Even,
        "odd" => Parity::Odd,
        _ => return Err(err("parity must be `even` or `odd`")),
    };
    Ok(Piece::new(num(parts[0])?, parity, num(parts[2])?, num(parts[3])?, num(parts[4])?, parse_interval(support)?))
}

/// Parses `piece(a, eps, h, r, k) on I; piece(...) on J; ...` or `empty`.
pub fn parse_fn(s: &str) -> Result<PiecewiseFn, SymError> {
    let s = s.trim();
    if s == "empty" {
        return Ok(PiecewiseFn::empty());
    }
    let mut pieces = Vec::new();
    for part in s.split(';') {
        if part.trim().is_empty() {
            continue;
        }
        pieces.push(parse_piece(part)?);
    }
    if pieces.is_empty() {
        return Err(SymError::Parse("no pieces".to_string()));
    }
    PiecewiseFn::new(pieces)
}
