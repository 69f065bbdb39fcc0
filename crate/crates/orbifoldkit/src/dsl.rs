//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [fn neg]
//! map = piece(-1, odd, 0, 1, 0) on (-1,1)
//!
//! [chart V1]
//! domain = (-1,1)
//! group = id neg
//! proj = piece(1, even, 0, 1, 0) on (-1,1)
//! fundamental = [0,1)
//!
//! [run]
//! check-compat V1 V2 expect=incompatible
//! ```
//!
//! Blocks `[kind id]` hold `key = value` lines; `[run]` blocks hold commands.
//! Items are kept in file order and executed in that order.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("line {line}: expected {expected}")]
    Parse { line: usize, expected: String },
    #[error("line {line}: unknown id `{id}`")]
    UnknownId { line: usize, id: String },
    #[error("line {line}: {command}: {message}")]
    Command { line: usize, command: String, message: String },
}

pub fn parse_error(line: usize, expected: impl Into<String>) -> DslError {
    DslError::Parse { line, expected: expected.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Space,
    Fn,
    Chart,
    Atlas,
    Rep,
    Hom,
    Witness,
}

impl Kind {
    fn parse(s: &str) -> Option<Kind> {
        Some(match s {
            "space" => Kind::Space,
            "fn" => Kind::Fn,
            "chart" => Kind::Chart,
            "atlas" => Kind::Atlas,
            "rep" => Kind::Rep,
            "hom" => Kind::Hom,
            "witness" => Kind::Witness,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Space => "space",
            Kind::Fn => "fn",
            Kind::Chart => "chart",
            Kind::Atlas => "atlas",
            Kind::Rep => "rep",
            Kind::Hom => "hom",
            Kind::Witness => "witness",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Kind::Space => &["carrier"],
            Kind::Fn => &["map"],
            Kind::Chart => &["domain", "group", "proj", "fundamental"],
            Kind::Atlas => &["space", "charts", "witness"],
            Kind::Rep => &["src", "dst", "map", "lift", "nu", "complete"],
            Kind::Hom => &["src", "dst", "obj", "arrow"],
            Kind::Witness => &["eps1", "eps2", "eps1p", "eps2p", "h"],
        }
    }

    fn repeatable(self, key: &str) -> bool {
        matches!((self, key), (Kind::Atlas, "witness") | (Kind::Rep, "lift" | "nu") | (Kind::Hom, "obj" | "arrow"))
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Kind::Space => &["carrier"],
            Kind::Fn => &["map"],
            Kind::Chart => &["domain", "group", "proj", "fundamental"],
            Kind::Atlas => &["space", "charts"],
            Kind::Rep => &["src", "dst", "map"],
            Kind::Hom => &["src", "dst"],
            Kind::Witness => &["eps1", "eps2", "eps1p", "eps2p", "h"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub line: usize,
    pub kind: Kind,
    pub id: String,
    pub entries: Vec<Entry>,
}

impl Block {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verb {
    Validate,
    CheckCompat,
    BuildGroupoid,
    Recover,
    F1,
    F2,
    RepsEqual,
    Compose,
    CheckIdlift,
    CheckUwe,
    Equiv,
    RefuteEquiv,
}

impl Verb {
    fn parse(s: &str) -> Option<Verb> {
        Some(match s {
            "validate" => Verb::Validate,
            "check-compat" => Verb::CheckCompat,
            "build-groupoid" => Verb::BuildGroupoid,
            "recover" => Verb::Recover,
            "f1" => Verb::F1,
            "f2" => Verb::F2,
            "reps-equal" => Verb::RepsEqual,
            "compose" => Verb::Compose,
            "check-idlift" => Verb::CheckIdlift,
            "check-uwe" => Verb::CheckUwe,
            "equiv" => Verb::Equiv,
            "refute-equiv" => Verb::RefuteEquiv,
            _ => return None,
        })
    }

    /// Positional arity, the required keyword and its allowed values.
    fn shape(self) -> (usize, Option<(&'static str, &'static [&'static str])>) {
        const BOOL: &[&str] = &["true", "false"];
        match self {
            Verb::Validate => (0, None),
            Verb::CheckCompat => (2, Some(("expect", &["compatible", "incompatible"]))),
            Verb::BuildGroupoid => (1, Some(("out", &[]))),
            Verb::Recover => (1, Some(("expect", &[]))),
            Verb::F1 | Verb::F2 => (1, Some(("out", &[]))),
            Verb::RepsEqual => (2, Some(("expect", BOOL))),
            Verb::Compose => (2, Some(("out", &[]))),
            Verb::CheckIdlift | Verb::CheckUwe => (1, Some(("expect", BOOL))),
            Verb::Equiv => (2, Some(("witness", &[]))),
            Verb::RefuteEquiv => (2, Some(("expect", &["certificate", "none"]))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Command {
    pub line: usize,
    pub verb: Verb,
    /// The command line as written, whitespace-normalized.
    pub text: String,
    pub args: Vec<String>,
    pub keyword: Option<String>,
}

impl Command {
    /// Ids this command reads, and the id it declares. `equiv` declares its
    /// witness only when it is not declared yet.
    fn ids(&self) -> (Vec<&str>, Option<&str>) {
        let a: Vec<&str> = self.args.iter().map(String::as_str).collect();
        let kw = self.keyword.as_deref();
        match self.verb {
            Verb::Validate => (vec![], None),
            Verb::BuildGroupoid => (a, None),
            Verb::Recover => (kw.into_iter().collect(), None),
            Verb::F1 | Verb::F2 | Verb::Compose | Verb::Equiv => (a, kw),
            _ => (a, None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Block(Block),
    Command(Command),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub items: Vec<Item>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '*' | '.' | '-'))
}

/// A function slot holds either the id of an `[fn]` block or inline text.
/// `id` is reserved for the identity on the relevant domain.
pub fn fn_ref(value: &str) -> Option<&str> {
    let v = value.trim();
    (is_ident(v) && v != "empty" && v != "id").then_some(v)
}

/// Source chart, target chart and function text.
pub type MapSlot<'a> = (&'a str, &'a str, &'a str);

/// Splits `S -> T : F`.
pub fn split_map(value: &str) -> Option<MapSlot<'_>> {
    let (ends, f) = value.split_once(':')?;
    let (s, t) = ends.split_once("->")?;
    let (s, t, f) = (s.trim(), t.trim(), f.trim());
    (is_ident(s) && is_ident(t) && !f.is_empty()).then_some((s, t, f))
}

/// Splits `S -> T : F => S2 -> T2 : G`.
pub fn split_pair(value: &str) -> Option<(MapSlot<'_>, MapSlot<'_>)> {
    let (a, b) = value.split_once("=>")?;
    Some((split_map(a)?, split_map(b)?))
}

fn parse_command(line: usize, l: &str) -> Result<Command, DslError> {
    let mut toks = l.split_whitespace();
    let head = toks.next().unwrap_or_default();
    let verb = Verb::parse(head).ok_or_else(|| parse_error(line, format!("a command, found `{}`", head)))?;
    let (arity, kw) = verb.shape();
    let mut args = Vec::new();
    let mut keyword = None;
    for t in toks {
        match t.split_once('=') {
            Some((k, v)) => {
                let (want, allowed) = kw.ok_or_else(|| parse_error(line, format!("no keyword arguments for `{}`", head)))?;
                if k != want || keyword.is_some() {
                    return Err(parse_error(line, format!("`{}=...`, found `{}`", want, t)));
                }
                if v.is_empty() || (!allowed.is_empty() && !allowed.contains(&v)) {
                    let alts = if allowed.is_empty() { "a value".to_string() } else { allowed.join("|") };
                    return Err(parse_error(line, format!("`{}={}`", want, alts)));
                }
                keyword = Some(v.to_string());
            }
            None => args.push(t.to_string()),
        }
    }
    if args.len() != arity {
        return Err(parse_error(line, format!("{} argument(s) for `{}`", arity, head)));
    }
    if let Some((want, _)) = kw {
        if keyword.is_none() {
            return Err(parse_error(line, format!("`{}=` for `{}`", want, head)));
        }
    }
    let text = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Ok(Command { line, verb, text, args, keyword })
}

enum Section {
    None,
    Block(Block),
    Run,
}

fn close(section: Section, items: &mut Vec<Item>) -> Result<(), DslError> {
    if let Section::Block(b) = section {
        for key in b.kind.required() {
            if b.get(key).is_none() {
                return Err(parse_error(b.line, format!("`{}` in [{} {}]", key, b.kind.name(), b.id)));
            }
        }
        items.push(Item::Block(b));
    }
    Ok(())
}

/// Parses and checks that every id is declared once, before its first use.
pub fn parse(text: &str) -> Result<Scenario, DslError> {
    let mut items = Vec::new();
    let mut section = Section::None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if let Some(inner) = l.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| parse_error(line, "`]`"))?;
            close(std::mem::replace(&mut section, Section::None), &mut items)?;
            let mut parts = inner.split_whitespace();
            section = match (parts.next(), parts.next(), parts.next()) {
                (Some("run"), None, _) => Section::Run,
                (Some(k), Some(id), None) => {
                    let kind = Kind::parse(k).ok_or_else(|| parse_error(line, "a block kind: space, fn, chart, atlas, rep, hom, witness or run"))?;
                    if !is_ident(id) {
                        return Err(parse_error(line, format!("an identifier, found `{}`", id)));
                    }
                    Section::Block(Block { line, kind, id: id.to_string(), entries: Vec::new() })
                }
                _ => return Err(parse_error(line, "`[kind id]` or `[run]`")),
            };
            continue;
        }
        match &mut section {
            Section::None => return Err(parse_error(line, "a `[kind id]` or `[run]` header")),
            Section::Run => items.push(Item::Command(parse_command(line, l)?)),
            Section::Block(b) => {
                let (k, v) = l.split_once('=').ok_or_else(|| parse_error(line, "`key = value`"))?;
                let (k, v) = (k.trim(), v.trim());
                if !b.kind.keys().contains(&k) {
                    return Err(parse_error(line, format!("one of {} in [{}]", b.kind.keys().join(", "), b.kind.name())));
                }
                if b.get(k).is_some() && !b.kind.repeatable(k) {
                    return Err(parse_error(line, format!("a single `{}`", k)));
                }
                if v.is_empty() {
                    return Err(parse_error(line, format!("a value for `{}`", k)));
                }
                b.entries.push(Entry { line, key: k.to_string(), value: v.to_string() });
            }
        }
    }
    close(section, &mut items)?;
    let s = Scenario { items };
    check_ids(&s)?;
    Ok(s)
}

/// Ids referenced by a block entry.
fn entry_refs(kind: Kind, e: &Entry) -> Vec<String> {
    let v = e.value.as_str();
    let mut out: Vec<&str> = Vec::new();
    match (kind, e.key.as_str()) {
        (Kind::Fn, _) | (Kind::Chart, "domain" | "fundamental") | (Kind::Space, _) | (Kind::Rep, "complete") => {}
        (Kind::Chart, "group") => out.extend(v.split_whitespace().filter(|t| *t != "id")),
        (Kind::Chart, "proj") | (Kind::Rep, "map") => out.extend(fn_ref(v)),
        (Kind::Atlas, "charts") => out.extend(v.split_whitespace()),
        (Kind::Atlas, "witness") | (Kind::Rep, "lift") | (Kind::Hom, "obj") => {
            if let Some((_, _, f)) = split_map(v) {
                out.extend(fn_ref(f));
            }
        }
        (Kind::Rep, "nu") | (Kind::Hom, "arrow") => {
            if let Some(((_, _, f), (_, _, g))) = split_pair(v) {
                out.extend(fn_ref(f));
                out.extend(fn_ref(g));
            }
        }
        _ => out.push(v),
    }
    out.into_iter().map(str::to_string).collect()
}

fn check_ids(s: &Scenario) -> Result<(), DslError> {
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let declare = |id: &str, line: usize, declared: &mut BTreeSet<String>| {
        if declared.insert(id.to_string()) {
            Ok(())
        } else {
            Err(parse_error(line, format!("a fresh id, `{}` is already declared", id)))
        }
    };
    for item in &s.items {
        match item {
            Item::Block(b) => {
                for e in &b.entries {
                    for r in entry_refs(b.kind, e) {
                        if !declared.contains(&r) {
                            return Err(DslError::UnknownId { line: e.line, id: r });
                        }
                    }
                }
                declare(&b.id, b.line, &mut declared)?;
            }
            Item::Command(c) => {
                let (reads, writes) = c.ids();
                for r in reads {
                    if !declared.contains(r) {
                        return Err(DslError::UnknownId { line: c.line, id: r.to_string() });
                    }
                }
                if let Some(w) = writes {
                    if c.verb == Verb::Equiv && declared.contains(w) {
                        continue;
                    }
                    if !is_ident(w) {
                        return Err(parse_error(c.line, format!("an identifier, found `{}`", w)));
                    }
                    declare(w, c.line, &mut declared)?;
                }
            }
        }
    }
    Ok(())
}
