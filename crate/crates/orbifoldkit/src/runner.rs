//! Executes a parsed scenario against a registry of declared objects.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use orbifold_core::charts::{charts_compatible, validate_atlas_with, validate_chart, Atlas, Chart, Compatibility, Embedding, Space};
use orbifold_core::charts::failure_text;
use orbifold_core::groupoid::{
    parse_domain_set, recover_atlas, validate_hom, ArrowAssignment, GroupoidHom, MarkedAtlasGroupoid, ObjComponent, DEFAULT_DEPTH_CAP,
};
use orbifold_core::maps::{
    common_refinement_witness, complete_identity_lift, compose_orbifold_maps, from_hom, is_identity_lift, refute_hom_equivalence,
    representatives_equivalent, to_hom, unit_weak_equivalence_check, validate_representative, ChartedMap, EquivalenceWitness,
    LocalLift, MapRep, Refutation, WitnessSearch,
};
use orbifold_core::rational::fmt_q;
use orbifold_core::report::{Outcome, ValidationReport};
use orbifold_core::symfun::{parse_fn, parse_interval};
use orbifold_core::{Interval, PiecewiseFn};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::dsl::{fn_ref, parse_error, split_map, split_pair, Block, Command, DslError, Entry, Item, Kind, Scenario, Verb};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub depth_cap: usize,
    pub allow_unknown: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { depth_cap: DEFAULT_DEPTH_CAP, allow_unknown: false }
    }
}

/// One line of the machine-readable report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommandRecord {
    pub scenario: String,
    pub command: String,
    pub outcome: String,
    pub details: Json,
    #[serde(skip)]
    pub line: usize,
    #[serde(skip)]
    pub summary: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    pub commands: Vec<CommandRecord>,
}

impl ScenarioReport {
    pub fn count(&self, o: Outcome) -> usize {
        self.commands.iter().filter(|c| c.outcome == o.to_string()).count()
    }

    /// 0 iff no command failed; unknown counts as failure unless allowed.
    pub fn exit_code(&self, allow_unknown: bool) -> i32 {
        let bad = self.count(Outcome::Fail) + if allow_unknown { 0 } else { self.count(Outcome::Unknown) };
        i32::from(bad > 0)
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        for c in &self.commands {
            s += &format!("{}:{}: {:<7} {}: {}\n", self.scenario, c.line, c.outcome, c.command, c.summary);
        }
        s += &format!(
            "{}: {} command(s), {} pass, {} fail, {} unknown\n",
            self.scenario,
            self.commands.len(),
            self.count(Outcome::Pass),
            self.count(Outcome::Fail),
            self.count(Outcome::Unknown)
        );
        s
    }
}

#[derive(Clone, Debug)]
struct HomEntry {
    hom: GroupoidHom,
    src: Atlas,
    dst: Atlas,
    src_name: String,
    dst_name: String,
}

#[derive(Clone, Debug)]
enum Value {
    Space(Space),
    Fn(PiecewiseFn),
    Chart(Chart),
    Atlas(Atlas),
    Rep(ChartedMap),
    Hom(HomEntry),
    Witness(EquivalenceWitness),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Space(_) => "space",
            Value::Fn(_) => "fn",
            Value::Chart(_) => "chart",
            Value::Atlas(_) => "atlas",
            Value::Rep(_) => "rep",
            Value::Hom(_) => "hom",
            Value::Witness(_) => "witness",
        }
    }
}

struct Registry {
    order: Vec<String>,
    values: BTreeMap<String, Value>,
}

/// A command failure with its message; becomes a `fail` record.
struct CmdErr(String);

impl<E: Display> From<E> for CmdErr {
    fn from(e: E) -> Self {
        CmdErr(e.to_string())
    }
}

type CmdResult = Result<(Outcome, String, Json), CmdErr>;

macro_rules! lookup {
    ($reg:expr, $id:expr, $variant:ident) => {
        match $reg.values.get($id) {
            Some(Value::$variant(v)) => Ok(v),
            Some(other) => Err(CmdErr(format!("`{}` is a {}, expected {}", $id, other.kind(), stringify!($variant).to_lowercase()))),
            None => Err(CmdErr(format!("unknown id `{}`", $id))),
        }
    };
}

impl Registry {
    fn insert(&mut self, id: &str, v: Value) {
        self.order.push(id.to_string());
        self.values.insert(id.to_string(), v);
    }

    /// `id` is the identity on `domain`; other idents name `[fn]` blocks.
    fn function(&self, value: &str, domain: Option<&Interval>) -> Result<PiecewiseFn, CmdErr> {
        let v = value.trim();
        if v == "id" {
            let d = domain.ok_or_else(|| CmdErr("`id` needs a known domain here".into()))?;
            return Ok(PiecewiseFn::identity_on(d));
        }
        match fn_ref(v) {
            Some(name) => lookup!(self, name, Fn).cloned(),
            None => Ok(parse_fn(v)?),
        }
    }

    fn domain_in(atlas: &Atlas, chart: &str) -> Option<Interval> {
        atlas.chart(chart).ok().map(|c| c.domain.clone())
    }

    fn map_entry(&self, e: &Entry, atlas: Option<&Atlas>) -> Result<(String, String, PiecewiseFn), CmdErr> {
        let (s, t, f) = split_map(&e.value).ok_or_else(|| CmdErr("expected `S -> T : MAP`".into()))?;
        let dom = atlas.and_then(|a| Self::domain_in(a, s));
        Ok((s.to_string(), t.to_string(), self.function(f, dom.as_ref())?))
    }

    fn pair_entry(&self, e: &Entry, left: &Atlas, right: &Atlas) -> Result<(Embedding, Embedding), CmdErr> {
        let ((s1, t1, f1), (s2, t2, f2)) = split_pair(&e.value).ok_or_else(|| CmdErr("expected `S -> T : MAP => S -> T : MAP`".into()))?;
        let d1 = Self::domain_in(left, s1);
        let d2 = Self::domain_in(right, s2);
        Ok((Embedding::new(s1, t1, self.function(f1, d1.as_ref())?), Embedding::new(s2, t2, self.function(f2, d2.as_ref())?)))
    }

    fn build(&self, b: &Block) -> Result<Value, CmdErr> {
        let req = |k: &str| &b.get(k).expect("required key checked by the parser").value;
        Ok(match b.kind {
            Kind::Space => Value::Space(Space { carrier: parse_domain_set(req("carrier"))? }),
            Kind::Fn => Value::Fn(self.function(req("map"), None)?),
            Kind::Chart => {
                let domain = parse_interval(req("domain"))?;
                let group = req("group").split_whitespace().map(|g| self.function(g, Some(&domain))).collect::<Result<Vec<_>, _>>()?;
                let proj = self.function(req("proj"), Some(&domain))?;
                Value::Chart(Chart::new(&b.id, domain, group, proj, parse_interval(req("fundamental"))?))
            }
            Kind::Atlas => {
                let space = lookup!(self, req("space"), Space)?.clone();
                let charts = req("charts").split_whitespace().map(|c| lookup!(self, c, Chart).cloned()).collect::<Result<Vec<_>, _>>()?;
                let mut a = Atlas::new(space, charts, Vec::new());
                for e in b.all("witness") {
                    let (s, t, f) = self.map_entry(e, None)?;
                    a.witnesses.push(Embedding::new(&s, &t, f));
                }
                Value::Atlas(a)
            }
            Kind::Rep => {
                let (src_name, dst_name) = (req("src"), req("dst"));
                let src = lookup!(self, src_name, Atlas)?.clone();
                let dst = lookup!(self, dst_name, Atlas)?.clone();
                let f = match req("map").as_str() {
                    "id" => PiecewiseFn::identity(&src.space.carrier),
                    m => self.function(m, None)?,
                };
                let mut lifts = Vec::new();
                for e in b.all("lift") {
                    let (s, t, m) = self.map_entry(e, Some(&src))?;
                    lifts.push(LocalLift::new(&s, &t, m));
                }
                let rep = match b.get("complete").map(|e| e.value.as_str()) {
                    Some("identity") => {
                        if b.get("nu").is_some() {
                            return Err(CmdErr("`complete = identity` computes `nu`; remove the `nu` lines".into()));
                        }
                        let mut r = complete_identity_lift(&src, &dst, lifts)?;
                        r.f = f;
                        r
                    }
                    Some(other) => return Err(CmdErr(format!("unknown completion `{}`, expected `identity`", other))),
                    None => {
                        let (mut p, mut nu) = (Vec::new(), Vec::new());
                        for e in b.all("nu") {
                            let (a, n) = self.pair_entry(e, &src, &dst)?;
                            p.push(a);
                            nu.push(n);
                        }
                        MapRep { src, dst, f, lifts, p, nu }
                    }
                };
                Value::Rep(ChartedMap::new(rep, src_name, dst_name))
            }
            Kind::Hom => {
                let (src_name, dst_name) = (req("src"), req("dst"));
                let src = lookup!(self, src_name, Atlas)?.clone();
                let dst = lookup!(self, dst_name, Atlas)?.clone();
                let mut hom = GroupoidHom { obj_map: Vec::new(), arrow_map: Vec::new() };
                for e in b.all("obj") {
                    let (source, target, map) = self.map_entry(e, Some(&src))?;
                    hom.obj_map.push(ObjComponent { source, target, map });
                }
                for e in b.all("arrow") {
                    let (generator, image) = self.pair_entry(e, &src, &dst)?;
                    hom.arrow_map.push(ArrowAssignment { generator, image });
                }
                Value::Hom(HomEntry { hom, src, dst, src_name: src_name.clone(), dst_name: dst_name.clone() })
            }
            Kind::Witness => {
                let rep = |k: &str| lookup!(self, req(k), Rep).cloned();
                let (eps1, eps2, eps1_prime, eps2_prime, h) = (rep("eps1")?, rep("eps2")?, rep("eps1p")?, rep("eps2p")?, rep("h")?);
                Value::Witness(EquivalenceWitness { w: eps1.rep.src.clone(), w_prime: eps1_prime.rep.src.clone(), eps1, eps2, eps1_prime, eps2_prime, h })
            }
        })
    }
}

fn issues(r: &ValidationReport) -> Json {
    Json::Array(
        r.issues
            .iter()
            .map(|i| json!({ "check": i.check, "detail": i.detail, "severity": format!("{:?}", i.severity).to_lowercase() }))
            .collect(),
    )
}

fn worst(a: Outcome, b: Outcome) -> Outcome {
    match (a, b) {
        (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
        (Outcome::Unknown, _) | (_, Outcome::Unknown) => Outcome::Unknown,
        _ => Outcome::Pass,
    }
}

fn expect_bool(c: &Command) -> bool {
    c.keyword.as_deref() == Some("true")
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

struct Runner<'a> {
    reg: Registry,
    opts: &'a Options,
    base: PathBuf,
}

impl Runner<'_> {
    fn groupoid(&self, a: &Atlas) -> Result<MarkedAtlasGroupoid, CmdErr> {
        Ok(MarkedAtlasGroupoid::build_with(a, self.opts.depth_cap)?)
    }

    fn path(&self, file: &str) -> PathBuf {
        self.base.join(file)
    }

    fn execute(&mut self, c: &Command) -> CmdResult {
        let arg = |i: usize| c.args[i].as_str();
        let kw = c.keyword.clone().unwrap_or_default();
        match c.verb {
            Verb::Validate => {
                let mut overall = Outcome::Pass;
                let mut objects = Vec::new();
                for id in &self.reg.order {
                    let report = match &self.reg.values[id] {
                        Value::Chart(ch) => validate_chart(ch),
                        Value::Atlas(a) => validate_atlas_with(a, self.opts.depth_cap),
                        Value::Rep(m) => validate_representative(&m.rep),
                        Value::Hom(h) => match (self.groupoid(&h.src), self.groupoid(&h.dst)) {
                            (Ok(g), Ok(d)) => validate_hom(&h.hom, &g, &d),
                            (Err(e), _) | (_, Err(e)) => {
                                let mut r = ValidationReport::new();
                                r.fail("groupoid", e.0);
                                r
                            }
                        },
                        _ => continue,
                    };
                    overall = worst(overall, report.outcome());
                    objects.push(json!({ "id": id, "kind": self.reg.values[id].kind(), "outcome": report.outcome().to_string(), "issues": issues(&report) }));
                }
                let summary = format!("{} object(s) checked", objects.len());
                Ok((overall, summary, json!({ "objects": objects })))
            }
            Verb::CheckCompat => {
                let (a, b) = (lookup!(self.reg, arg(0), Chart)?, lookup!(self.reg, arg(1), Chart)?);
                let result = charts_compatible(a, b);
                let details = match &result {
                    Compatibility::Compatible(w) => json!({ "result": "compatible", "changes": w.len() }),
                    Compatibility::Incompatible { y, x, candidates } => json!({
                        "result": "incompatible",
                        "fiber": [fmt_q(y), fmt_q(x)],
                        "candidates": candidates.iter().map(|c| json!({ "map": c.map.to_text(), "failure": failure_text(&c.failure) })).collect::<Vec<_>>(),
                    }),
                    Compatibility::Unknown(m) => json!({ "result": "unknown", "reason": m }),
                };
                let outcome = match &result {
                    Compatibility::Unknown(_) => Outcome::Unknown,
                    r => verdict(r.is_compatible() == (kw == "compatible")),
                };
                Ok((outcome, result.to_string(), details))
            }
            Verb::BuildGroupoid => {
                let a = lookup!(self.reg, arg(0), Atlas)?;
                let g = self.groupoid(a)?;
                let text = g.serialize(true);
                std::fs::write(self.path(&kw), &text).map_err(|e| CmdErr(format!("cannot write `{}`: {}", kw, e)))?;
                let summary = format!("marked groupoid of `{}` written to {}", arg(0), kw);
                Ok((Outcome::Pass, summary, json!({ "file": kw, "serialization": text })))
            }
            Verb::Recover => {
                let text = std::fs::read_to_string(self.path(arg(0))).map_err(|e| CmdErr(format!("cannot read `{}`: {}", arg(0), e)))?;
                let recovered = recover_atlas(&text)?;
                let want = lookup!(self.reg, kw.as_str(), Atlas)?;
                let same = recovered.canonical() == want.canonical();
                let summary = if same { format!("recovered `{}`", kw) } else { format!("recovered atlas differs from `{}`", kw) };
                Ok((verdict(same), summary, json!({ "file": arg(0), "matches": same })))
            }
            Verb::F1 => {
                let m = lookup!(self.reg, arg(0), Rep)?.clone();
                let hom = to_hom(&m.rep, &m.rep.dst)?;
                let text = hom.to_string();
                let entry = HomEntry { hom, src: m.rep.src, dst: m.rep.dst, src_name: m.domain_atlas, dst_name: m.range_atlas };
                self.reg.insert(&kw, Value::Hom(entry));
                Ok((Outcome::Pass, format!("`{}` = F1(`{}`)", kw, arg(0)), json!({ "hom": text })))
            }
            Verb::F2 => {
                let h = lookup!(self.reg, arg(0), Hom)?.clone();
                let rep = from_hom(&h.hom, &self.groupoid(&h.src)?, &self.groupoid(&h.dst)?)?;
                let text = rep.to_string();
                self.reg.insert(&kw, Value::Rep(ChartedMap::new(rep, &h.src_name, &h.dst_name)));
                Ok((Outcome::Pass, format!("`{}` = F2(`{}`)", kw, arg(0)), json!({ "rep": text })))
            }
            Verb::RepsEqual => {
                let (a, b) = (lookup!(self.reg, arg(0), Rep)?, lookup!(self.reg, arg(1), Rep)?);
                let eq = representatives_equivalent(&a.rep, &b.rep)?;
                Ok((verdict(eq == expect_bool(c)), format!("equivalent = {}", eq), json!({ "equivalent": eq })))
            }
            Verb::Compose => {
                let (g, f) = (lookup!(self.reg, arg(0), Rep)?, lookup!(self.reg, arg(1), Rep)?);
                let h = compose_orbifold_maps(g, f)?;
                let report = validate_representative(&h.rep);
                let text = h.rep.to_string();
                self.reg.insert(&kw, Value::Rep(h));
                let summary = format!("`{}` = `{}` o `{}`: {}", kw, arg(0), arg(1), report);
                Ok((report.outcome(), summary, json!({ "rep": text, "issues": issues(&report) })))
            }
            Verb::CheckIdlift => {
                let m = lookup!(self.reg, arg(0), Rep)?;
                let yes = is_identity_lift(m);
                Ok((verdict(yes == expect_bool(c)), format!("identity lift = {}", yes), json!({ "identity_lift": yes })))
            }
            Verb::CheckUwe => {
                let h = lookup!(self.reg, arg(0), Hom)?;
                let check = unit_weak_equivalence_check(&h.hom, &self.groupoid(&h.src)?, &self.groupoid(&h.dst)?);
                let details = json!({ "by_lift": check.by_lift, "by_structure": check.by_structure });
                if check.by_lift != check.by_structure {
                    return Ok((Outcome::Unknown, "lift and structural checks disagree".into(), details));
                }
                Ok((verdict(check.by_lift == expect_bool(c)), format!("unit weak equivalence = {}", check.by_lift), details))
            }
            Verb::Equiv => {
                let (f1, f2) = (lookup!(self.reg, arg(0), Rep)?.clone(), lookup!(self.reg, arg(1), Rep)?.clone());
                if let Some(v) = self.reg.values.get(&kw) {
                    let Value::Witness(w) = v else {
                        return Err(CmdErr(format!("`{}` is a {}, expected witness", kw, v.kind())));
                    };
                    let ok = orbifold_core::maps::verify_equivalence_witness(&f1, &f2, w);
                    let summary = format!("witness `{}` {}", kw, if ok { "verifies" } else { "does not verify" });
                    return Ok((verdict(ok), summary, json!({ "witness": w.to_string(), "searched": false, "verified": ok })));
                }
                match common_refinement_witness(&f1, &f2) {
                    WitnessSearch::Found(w) => {
                        let ok = orbifold_core::maps::verify_equivalence_witness(&f1, &f2, &w);
                        let text = w.to_string();
                        self.reg.insert(&kw, Value::Witness(*w));
                        let summary = format!("found witness `{}`, {}", kw, if ok { "verified" } else { "not verified" });
                        Ok((verdict(ok), summary, json!({ "witness": text, "searched": true, "verified": ok })))
                    }
                    WitnessSearch::Unknown(m) => Ok((Outcome::Unknown, format!("no witness found: {}", m), json!({ "searched": true, "reason": m }))),
                }
            }
            Verb::RefuteEquiv => {
                let (a, b) = (lookup!(self.reg, arg(0), Hom)?, lookup!(self.reg, arg(1), Hom)?);
                let r = refute_hom_equivalence(&a.hom, &self.groupoid(&a.src)?, &b.hom, &self.groupoid(&b.src)?)?;
                let details = match &r {
                    Refutation::Certificate { point, other, marking, first, second } => json!({
                        "result": "certificate",
                        "point": point.to_string(),
                        "other": other.to_string(),
                        "marking": fmt_q(marking),
                        "image_sizes": [first, second],
                    }),
                    Refutation::NoRefutation => json!({ "result": "none" }),
                };
                let got = matches!(r, Refutation::Certificate { .. });
                Ok((verdict(got == (kw == "certificate")), r.to_string(), details))
            }
        }
    }
}

fn fatal(line: usize, what: String, e: CmdErr) -> DslError {
    DslError::Command { line, command: what, message: e.0 }
}

/// Runs a parsed scenario. Files named by commands resolve against `base`.
pub fn run(scenario: &Scenario, name: &str, base: &Path, opts: &Options) -> Result<ScenarioReport, DslError> {
    let mut r = Runner { reg: Registry { order: Vec::new(), values: BTreeMap::new() }, opts, base: base.to_path_buf() };
    let mut report = ScenarioReport { scenario: name.to_string(), commands: Vec::new() };
    for item in &scenario.items {
        match item {
            Item::Block(b) => {
                let v = r.reg.build(b).map_err(|e| fatal(b.line, format!("[{} {}]", b.kind.name(), b.id), e))?;
                r.reg.insert(&b.id, v);
            }
            Item::Command(c) => {
                let (outcome, summary, details) = match r.execute(c) {
                    Ok(x) => x,
                    Err(e) => {
                        let msg = fatal(c.line, c.text.clone(), e).to_string();
                        (Outcome::Fail, msg.clone(), json!({ "error": msg }))
                    }
                };
                report.commands.push(CommandRecord {
                    scenario: name.to_string(),
                    command: c.text.clone(),
                    outcome: outcome.to_string(),
                    details,
                    line: c.line,
                    summary,
                });
            }
        }
    }
    Ok(report)
}

/// Reads, parses and runs a scenario file.
pub fn run_file(path: &Path, opts: &Options) -> Result<ScenarioReport, DslError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(0, format!("a readable scenario file: {}", e)))?;
    let scenario = crate::dsl::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run(&scenario, &path.display().to_string(), base, opts)
}

/// Pretty JSON of all records, one object per command, newline-terminated.
pub fn to_json(reports: &[ScenarioReport]) -> String {
    let all: Vec<&CommandRecord> = reports.iter().flat_map(|r| &r.commands).collect();
    let mut s = serde_json::to_string_pretty(&all).expect("report serializes");
    s.push('\n');
    s
}
