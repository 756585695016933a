//! The experiment file format.
//!
//! Line oriented: `[section]` headers, `key = value` pairs, `#` comments.
//! Values are integers, bare words, ranges `LO..HI`, or double-quoted strings
//! (polynomials, coordinates). Repeatable keys (`closed`, `removed`, `gen`,
//! `point`, `vector`, `component`) accumulate in file order.
//!
//! Parsing is two-pass. The syntax pass yields an [`ExperimentConfig`] with
//! polynomials rewritten in canonical form; the semantic pass builds the
//! field, the schemes and the points, and rejects inputs that break the
//! hypotheses (inhomogeneous equations, a `Y` point on `Z`, a singular `U`).

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use bertini_core::density::{Instance, LocalConditionSet};
use bertini_core::geom::{self, ClosedPoint, SchemeDesc, DEFAULT_POINT_BUDGET};
use bertini_core::gf::{Elem, FieldTower};
use bertini_core::mpoly::{parse_polynomial, HomogeneousPolynomial};
use bertini_core::Error as CoreError;
use sha2::{Digest, Sha256};

pub const DEFAULT_LEVEL_BOUND: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    /// A hypothesis of the sieve setting fails.
    Hypothesis,
    /// The field or a point enumeration is larger than configured.
    Budget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TMode {
    Full,
    Zero,
    Nonzero,
    Explicit,
}

impl TMode {
    fn word(self) -> &'static str {
        match self {
            TMode::Full => "full",
            TMode::Zero => "zero",
            TMode::Nonzero => "nonzero",
            TMode::Explicit => "explicit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Fixed(usize),
    /// Per-degree bound on singular-point degrees, for open subsets of `P^1`, `P^2`.
    Bezout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Auto,
    Exact,
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Lex,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YPoint {
    pub level: usize,
    /// Packed elements of the level field.
    pub coords: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub d: (usize, usize),
    pub r: usize,
    /// `None` means `r − 1`.
    pub horizon: Option<Horizon>,
    pub trials: u64,
    pub seed: u64,
    pub zeta_cutoff: usize,
    pub exhaustive_cap: u32,
    pub method: Method,
    pub order: Order,
    pub tries: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: (1, 4),
            r: 2,
            horizon: None,
            trials: 1000,
            seed: 0,
            zeta_cutoff: 3,
            exhaustive_cap: bertini_core::density::DEFAULT_EXHAUSTIVE_CAP,
            method: Method::Auto,
            order: Order::Lex,
            tries: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub p: u32,
    pub a: usize,
    pub level_bound: usize,
    pub budget: u64,
    pub n: usize,
    pub closed: Vec<String>,
    pub removed: Vec<String>,
    pub dim: Option<usize>,
    pub z: Vec<String>,
    /// Stratum `e` ↦ forced dimension.
    pub dim_override: BTreeMap<usize, usize>,
    pub y: Vec<YPoint>,
    pub t_mode: TMode,
    pub t_vectors: Vec<Vec<u32>>,
    /// Each component is a list of generators.
    pub components: Vec<Vec<String>>,
    pub snc_l: usize,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p: 2,
            a: 1,
            level_bound: DEFAULT_LEVEL_BOUND,
            budget: DEFAULT_POINT_BUDGET,
            n: 1,
            closed: vec![],
            removed: vec![],
            dim: None,
            z: vec![],
            dim_override: BTreeMap::new(),
            y: vec![],
            t_mode: TMode::Full,
            t_vectors: vec![],
            components: vec![],
            snc_l: 1,
            run: RunConfig::default(),
        }
    }
}

/// Everything the commands need, built from a validated config.
pub struct Setup {
    pub tower: FieldTower,
    pub x: SchemeDesc,
    pub z: Vec<HomogeneousPolynomial>,
    pub y: Vec<ClosedPoint>,
    pub t: LocalConditionSet,
    pub components: Vec<Vec<HomogeneousPolynomial>>,
    pub budget: u64,
}

impl Setup {
    pub fn instance(&self) -> bertini_core::Result<Instance<'_>> {
        Ok(Instance::new(&self.tower, self.x.clone(), self.z.clone(), self.y.clone(), self.t.clone())?
            .with_budget(self.budget))
    }
}

/// Where each entry sits in the source, for semantic errors.
#[derive(Default)]
struct Spans {
    entries: BTreeMap<(String, String, usize), (usize, usize)>,
    sections: BTreeMap<String, usize>,
}

impl Spans {
    fn at(&self, section: &str, key: &str, index: usize) -> (usize, usize) {
        self.entries
            .get(&(section.to_string(), key.to_string(), index))
            .copied()
            .or_else(|| self.sections.get(section).map(|&l| (l, 1)))
            .unwrap_or((1, 1))
    }
}

enum Value {
    Int(u64),
    Word(String),
    Range(usize, usize),
    Str(String),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Int(_) => "an integer",
            Value::Word(_) => "a word",
            Value::Range(..) => "a range",
            Value::Str(_) => "a quoted string",
        }
    }
}

struct Entry {
    line: usize,
    key_col: usize,
    val_col: usize,
    key: String,
    value: Value,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, column, kind: ErrorKind::Syntax, message: message.into() }
}

/// Splits one line into an entry; `None` for blank and comment lines.
fn lex_entry(line_no: usize, line: &str) -> Result<Option<Entry>, ConfigError> {
    let eq = match line.find('=') {
        Some(i) => i,
        None => return Err(syntax(line_no, 1, "expected `key = value`")),
    };
    let key = line[..eq].trim();
    let key_col = line.len() - line.trim_start().len() + 1;
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || "_.@".contains(c)) {
        return Err(syntax(line_no, key_col, format!("bad key `{key}`")));
    }
    let rest = &line[eq + 1..];
    let lead = rest.len() - rest.trim_start().len();
    let val_col = eq + 2 + lead;
    let raw = rest.trim_start();
    let (value, tail) = if let Some(body) = raw.strip_prefix('"') {
        let close = body.find('"').ok_or_else(|| syntax(line_no, val_col, "unterminated string"))?;
        (Value::Str(body[..close].to_string()), &body[close + 1..])
    } else {
        let end = raw.find('#').unwrap_or(raw.len());
        let tok = raw[..end].trim_end();
        if tok.is_empty() {
            return Err(syntax(line_no, val_col, "missing value"));
        }
        (bare_value(tok).map_err(|m| syntax(line_no, val_col, m))?, &raw[end..])
    };
    let tail = tail.trim_start();
    if !tail.is_empty() && !tail.starts_with('#') {
        return Err(syntax(line_no, line.len() - tail.len() + 1, "unexpected text after value"));
    }
    Ok(Some(Entry { line: line_no, key_col, val_col, key: key.to_string(), value }))
}

fn bare_value(tok: &str) -> Result<Value, String> {
    if let Some((lo, hi)) = tok.split_once("..") {
        let lo = lo.trim().parse().map_err(|_| format!("bad range start `{lo}`"))?;
        let hi = hi.trim().parse().map_err(|_| format!("bad range end `{hi}`"))?;
        return Ok(Value::Range(lo, hi));
    }
    if tok.chars().all(|c| c.is_ascii_digit()) {
        return tok.parse().map(Value::Int).map_err(|_| format!("integer `{tok}` out of range"));
    }
    if tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Ok(Value::Word(tok.to_string()));
    }
    Err(format!("cannot read value `{tok}`"))
}

const SECTIONS: [&str; 8] = ["field", "ambient", "X", "Z", "Y", "T", "snc", "run"];

/// Parses and validates. Returns every syntax error found, or the first
/// semantic error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let (cfg, spans) = parse_syntax(text)?;
    match build(&cfg, &spans) {
        Ok(_) => Ok(cfg),
        Err(e) => Err(vec![e]),
    }
}

/// Parses, validates and builds the field and schemes.
pub fn load(text: &str) -> Result<(ExperimentConfig, Setup), Vec<ConfigError>> {
    let (cfg, spans) = parse_syntax(text)?;
    let setup = build(&cfg, &spans).map_err(|e| vec![e])?;
    Ok((cfg, setup))
}

fn parse_syntax(text: &str) -> Result<(ExperimentConfig, Spans), Vec<ConfigError>> {
    let mut cfg = ExperimentConfig::default();
    let mut spans = Spans::default();
    let mut errors = Vec::new();
    let mut section: Option<String> = None;
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut seen_single: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let col = raw.len() - raw.trim_start().len() + 1;
            match rest.split_once(']') {
                Some((name, tail)) if tail.trim().is_empty() || tail.trim().starts_with('#') => {
                    let name = name.trim();
                    if !SECTIONS.contains(&name) {
                        errors.push(syntax(line_no, col + 1, format!("unknown section `{name}`")));
                        section = None;
                    } else if spans.sections.contains_key(name) {
                        errors.push(syntax(line_no, col, format!("section `{name}` appears twice")));
                        section = None;
                    } else {
                        spans.sections.insert(name.to_string(), line_no);
                        section = Some(name.to_string());
                    }
                }
                _ => errors.push(syntax(line_no, col, "malformed section header")),
            }
            continue;
        }
        let entry = match lex_entry(line_no, raw) {
            Ok(Some(e)) => e,
            Ok(None) => continue,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        let Some(sec) = section.clone() else {
            errors.push(syntax(line_no, entry.key_col, "entry outside a known section"));
            continue;
        };
        let base_key = entry.key.split(['.', '@']).next().unwrap_or("").to_string();
        let repeatable = matches!(
            (sec.as_str(), base_key.as_str()),
            ("X", "closed" | "removed") | ("Z", "gen") | ("Y", "point") | ("T", "vector") | ("snc", "component")
        );
        let idx_key = if repeatable { base_key.clone() } else { entry.key.clone() };
        let index = {
            let c = counts.entry((sec.clone(), idx_key.clone())).or_default();
            *c += 1;
            *c - 1
        };
        if !repeatable {
            if let Some(prev) = seen_single.insert((sec.clone(), entry.key.clone()), line_no) {
                errors.push(syntax(line_no, entry.key_col, format!("`{}` already set on line {prev}", entry.key)));
                continue;
            }
        }
        spans.entries.insert((sec.clone(), idx_key, index), (entry.line, entry.val_col));
        if let Err(e) = apply(&mut cfg, &sec, &entry) {
            errors.push(e);
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    if cfg.run.d.0 > cfg.run.d.1 {
        let (l, c) = spans.at("run", "d", 0);
        return Err(vec![syntax(l, c, "empty degree range")]);
    }
    canonicalize(&mut cfg, &spans).map_err(|e| vec![e])?;
    Ok((cfg, spans))
}

fn apply(cfg: &mut ExperimentConfig, sec: &str, e: &Entry) -> Result<(), ConfigError> {
    let bad = |what: &str| syntax(e.line, e.val_col, format!("`{}` expects {what}, got {}", e.key, e.value.describe()));
    let int = || match e.value {
        Value::Int(v) => Ok(v),
        _ => Err(bad("an integer")),
    };
    let string = || match &e.value {
        Value::Str(s) => Ok(s.clone()),
        _ => Err(bad("a quoted string")),
    };
    let word = || match &e.value {
        Value::Word(w) => Ok(w.as_str()),
        _ => Err(bad("a word")),
    };
    let small = |v: u64| usize::try_from(v).map_err(|_| bad("a smaller integer"));
    let unknown = || syntax(e.line, e.key_col, format!("unknown key `{}` in [{sec}]", e.key));
    match (sec, e.key.as_str()) {
        ("field", "p") => cfg.p = u32::try_from(int()?).map_err(|_| bad("a small prime"))?,
        ("field", "a") => cfg.a = small(int()?)?,
        ("field", "level_bound") => cfg.level_bound = small(int()?)?,
        ("field", "budget") => cfg.budget = int()?,
        ("ambient", "n") => cfg.n = small(int()?)?,
        ("X", "closed") => cfg.closed.push(string()?),
        ("X", "removed") => cfg.removed.push(string()?),
        ("X", "dim") => cfg.dim = Some(small(int()?)?),
        ("Z", "gen") => cfg.z.push(string()?),
        ("Z", k) if k.starts_with("dim_override.") => {
            let s = &k["dim_override.".len()..];
            let stratum = s.parse().map_err(|_| syntax(e.line, e.key_col, format!("bad stratum index `{s}`")))?;
            cfg.dim_override.insert(stratum, small(int()?)?);
        }
        ("Y", "point") => cfg.y.push(YPoint { level: 1, coords: coords(&string()?, e)? }),
        ("Y", k) if k.starts_with("point@") => {
            let s = &k["point@".len()..];
            let level = s.parse().ok().filter(|&l: &usize| l >= 1);
            let level = level.ok_or_else(|| syntax(e.line, e.key_col, format!("bad level `{s}`")))?;
            cfg.y.push(YPoint { level, coords: coords(&string()?, e)? });
        }
        ("T", "mode") => {
            cfg.t_mode = match word()? {
                "full" => TMode::Full,
                "zero" => TMode::Zero,
                "nonzero" | "nonzero-per-component" => TMode::Nonzero,
                "explicit" => TMode::Explicit,
                w => return Err(syntax(e.line, e.val_col, format!("unknown T mode `{w}`"))),
            }
        }
        ("T", "vector") => {
            let s = string()?;
            let v: Result<Vec<u32>, _> = s.split(',').map(|x| x.trim().parse()).collect();
            cfg.t_vectors.push(v.map_err(|_| syntax(e.line, e.val_col + 1, format!("bad vector `{s}`")))?);
        }
        ("snc", "component") => {
            cfg.components.push(string()?.split(',').map(|g| g.trim().to_string()).collect());
        }
        ("snc", "l") => cfg.snc_l = small(int()?)?,
        ("run", "d") => {
            cfg.run.d = match e.value {
                Value::Range(lo, hi) => (lo, hi),
                Value::Int(v) => (small(v)?, small(v)?),
                _ => return Err(bad("a degree or a range `LO..HI`")),
            }
        }
        ("run", "r") => cfg.run.r = small(int()?)?,
        ("run", "horizon") => {
            cfg.run.horizon = Some(match &e.value {
                Value::Int(v) => Horizon::Fixed(small(*v)?),
                Value::Word(w) if w == "bezout" => Horizon::Bezout,
                _ => return Err(bad("an integer or `bezout`")),
            })
        }
        ("run", "trials") => cfg.run.trials = int()?,
        ("run", "seed") => cfg.run.seed = int()?,
        ("run", "zeta_cutoff") => cfg.run.zeta_cutoff = small(int()?)?,
        ("run", "exhaustive_cap") => cfg.run.exhaustive_cap = u32::try_from(int()?).map_err(|_| bad("a bit count"))?,
        ("run", "method") => {
            cfg.run.method = match word()? {
                "auto" => Method::Auto,
                "exact" => Method::Exact,
                "sample" => Method::Sample,
                w => return Err(syntax(e.line, e.val_col, format!("unknown method `{w}`"))),
            }
        }
        ("run", "order") => {
            cfg.run.order = match word()? {
                "lex" => Order::Lex,
                "random" => Order::Random,
                w => return Err(syntax(e.line, e.val_col, format!("unknown order `{w}`"))),
            }
        }
        ("run", "tries") => cfg.run.tries = int()?,
        _ => return Err(unknown()),
    }
    Ok(())
}

fn coords(s: &str, e: &Entry) -> Result<Vec<u32>, ConfigError> {
    s.split(':')
        .map(|x| x.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| syntax(e.line, e.val_col + 1, format!("bad coordinates `{s}`, expected `c0:c1:...`")))
}

/// Rewrites every polynomial in canonical form, so equal schemes serialize
/// equally. Only needs `p` and `n`.
fn canonicalize(cfg: &mut ExperimentConfig, spans: &Spans) -> Result<(), ConfigError> {
    let p = cfg.p;
    if !(2..=65_521).contains(&p) || !(2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d)) {
        let (l, c) = spans.at("field", "p", 0);
        return Err(ConfigError { line: l, column: c, kind: ErrorKind::Syntax, message: format!("p = {p} is not a prime") });
    }
    let n = cfg.n;
    let canon = |text: &str, sec: &str, key: &str, i: usize| -> Result<String, ConfigError> {
        let (l, c) = spans.at(sec, key, i);
        let terms = parse_polynomial(text, n + 1, p).map_err(|pe| ConfigError {
            line: l,
            column: c + pe.column,
            kind: ErrorKind::Syntax,
            message: pe.message.clone(),
        })?;
        Ok(canonical_text(terms, p))
    };
    for (list, key, sec) in [(&mut cfg.closed, "closed", "X"), (&mut cfg.removed, "removed", "X"), (&mut cfg.z, "gen", "Z")] {
        for (i, s) in list.iter_mut().enumerate() {
            *s = canon(s, sec, key, i)?;
        }
    }
    for (i, comp) in cfg.components.iter_mut().enumerate() {
        for g in comp.iter_mut() {
            *g = canon(g, "snc", "component", i)?;
        }
    }
    Ok(())
}

/// Terms merged, zero terms dropped, descending lex order.
fn canonical_text(terms: Vec<(Vec<u32>, u32)>, p: u32) -> String {
    let mut merged: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    for (e, c) in terms {
        let slot = merged.entry(e).or_default();
        *slot = (*slot + c) % p;
    }
    let parts: Vec<String> = merged
        .into_iter()
        .rev()
        .filter(|(_, c)| *c != 0)
        .map(|(e, c)| {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{i}") } else { format!("x{i}^{k}") })
                .collect();
            match (c, mono.is_empty()) {
                (_, true) => c.to_string(),
                (1, false) => mono.join("*"),
                _ => format!("{c}*{}", mono.join("*")),
            }
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

pub fn classify(e: &CoreError) -> ErrorKind {
    match e {
        CoreError::BoundExceeded { .. }
        | CoreError::MissingLevel(_)
        | CoreError::BudgetExceeded { .. }
        | CoreError::CapExceeded { .. } => ErrorKind::Budget,
        CoreError::NotPrime(_) | CoreError::IndexOutOfRange { .. } | CoreError::CoordinateCount { .. } => ErrorKind::Syntax,
        _ => ErrorKind::Hypothesis,
    }
}

fn build(cfg: &ExperimentConfig, spans: &Spans) -> Result<Setup, ConfigError> {
    let at = |sec: &str, key: &str, i: usize, e: CoreError| {
        let (line, column) = spans.at(sec, key, i);
        ConfigError { line, column, kind: classify(&e), message: e.to_string() }
    };
    let tower = FieldTower::new(cfg.p, cfg.a, cfg.level_bound.max(1)).map_err(|e| at("field", "level_bound", 0, e))?;
    let base = tower.base();
    let forms = |list: &[String], sec: &str, key: &str| -> Result<Vec<HomogeneousPolynomial>, ConfigError> {
        list.iter()
            .enumerate()
            .map(|(i, s)| {
                let terms = parse_polynomial(s, cfg.n + 1, cfg.p).expect("canonical text reparses");
                let terms: Vec<(Vec<u32>, Elem)> = terms.into_iter().map(|(e, c)| (e, Elem(c))).collect();
                HomogeneousPolynomial::from_terms(cfg.n, &terms, base).map_err(|e| at(sec, key, i, e))
            })
            .collect()
    };
    let closed = forms(&cfg.closed, "X", "closed")?;
    let removed = forms(&cfg.removed, "X", "removed")?;
    let z = forms(&cfg.z, "Z", "gen")?;
    let mut components = Vec::new();
    for (i, comp) in cfg.components.iter().enumerate() {
        components.push(forms(comp, "snc", "component").map_err(|mut e| {
            (e.line, e.column) = spans.at("snc", "component", i);
            e
        })?);
    }
    let x = SchemeDesc::new(cfg.n, closed, removed, cfg.dim).map_err(|e| at("X", "dim", 0, e))?;
    x.dim().map_err(|e| at("X", "dim", 0, e))?;
    let mut y = Vec::new();
    for (i, yp) in cfg.y.iter().enumerate() {
        let level = tower.level(yp.level).map_err(|e| at("Y", "point", i, e))?;
        if yp.coords.len() != cfg.n + 1 {
            return Err(at("Y", "point", i, CoreError::CoordinateCount { expected: cfg.n + 1, got: yp.coords.len() }));
        }
        if let Some(&c) = yp.coords.iter().find(|&&c| c >= level.order()) {
            return Err(at("Y", "point", i, CoreError::Invalid(format!("{c} is not an element of the level {} field", yp.level))));
        }
        let coords: Vec<Elem> = yp.coords.iter().map(|&c| Elem(c)).collect();
        let pt = ClosedPoint::from_coords(&tower, yp.level, &coords).map_err(|e| at("Y", "point", i, e))?;
        if !geom::contains(&tower, &x, &pt).map_err(|e| at("Y", "point", i, e))? {
            return Err(at("Y", "point", i, CoreError::Invalid(format!("Y point {pt} is not on X"))));
        }
        if y.contains(&pt) {
            return Err(at("Y", "point", i, CoreError::Invalid(format!("Y point {pt} listed twice"))));
        }
        y.push(pt);
    }
    let t = match cfg.t_mode {
        TMode::Full => LocalConditionSet::Full,
        TMode::Zero => LocalConditionSet::Zero,
        TMode::Nonzero => LocalConditionSet::NonzeroPerComponent,
        TMode::Explicit => {
            LocalConditionSet::Explicit(cfg.t_vectors.iter().map(|v| v.iter().map(|&c| Elem(c)).collect()).collect())
        }
    };
    if cfg.t_mode != TMode::Explicit && !cfg.t_vectors.is_empty() {
        return Err(at("T", "vector", 0, CoreError::BadConditions("vectors given but mode is not explicit".into())));
    }
    for (i, pt) in y.iter().enumerate() {
        if geom::on_zero_set(&tower, &z, pt).map_err(|e| at("Y", "point", i, e))? {
            return Err(at("Y", "point", i, CoreError::YMeetsZ(pt.to_string())));
        }
    }
    let setup = Setup { tower, x, z, y, t, components, budget: cfg.budget };
    // the T shape is checked by the instance
    if let Err(e) = setup.instance() {
        let sec = if matches!(e, CoreError::BadConditions(_)) { "T" } else { "X" };
        return Err(at(sec, if sec == "T" { "mode" } else { "dim" }, 0, e));
    }
    Ok(setup)
}

impl ExperimentConfig {
    /// Canonical text: every key written, fixed order. Reparses to `self`.
    pub fn serialize(&self) -> String {
        let mut o = String::new();
        let q = |s: &str| format!("\"{s}\"");
        let joined = |v: &[u32], sep: &str| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(sep);
        let _ = writeln!(o, "[field]\np = {}\na = {}\nlevel_bound = {}\nbudget = {}", self.p, self.a, self.level_bound, self.budget);
        let _ = writeln!(o, "\n[ambient]\nn = {}", self.n);
        let _ = writeln!(o, "\n[X]");
        for s in &self.closed {
            let _ = writeln!(o, "closed = {}", q(s));
        }
        for s in &self.removed {
            let _ = writeln!(o, "removed = {}", q(s));
        }
        if let Some(d) = self.dim {
            let _ = writeln!(o, "dim = {d}");
        }
        let _ = writeln!(o, "\n[Z]");
        for s in &self.z {
            let _ = writeln!(o, "gen = {}", q(s));
        }
        for (e, d) in &self.dim_override {
            let _ = writeln!(o, "dim_override.{e} = {d}");
        }
        let _ = writeln!(o, "\n[Y]");
        for p in &self.y {
            let key = if p.level == 1 { "point".to_string() } else { format!("point@{}", p.level) };
            let _ = writeln!(o, "{key} = {}", q(&joined(&p.coords, ":")));
        }
        let _ = writeln!(o, "\n[T]\nmode = {}", self.t_mode.word());
        for v in &self.t_vectors {
            let _ = writeln!(o, "vector = {}", q(&joined(v, ",")));
        }
        let _ = writeln!(o, "\n[snc]");
        for comp in &self.components {
            let _ = writeln!(o, "component = {}", q(&comp.join(", ")));
        }
        let _ = writeln!(o, "l = {}", self.snc_l);
        let r = &self.run;
        let _ = writeln!(o, "\n[run]\nd = {}..{}\nr = {}", r.d.0, r.d.1, r.r);
        match r.horizon {
            Some(Horizon::Fixed(b)) => {
                let _ = writeln!(o, "horizon = {b}");
            }
            Some(Horizon::Bezout) => {
                let _ = writeln!(o, "horizon = bezout");
            }
            None => {}
        }
        let _ = writeln!(
            o,
            "trials = {}\nseed = {}\nzeta_cutoff = {}\nexhaustive_cap = {}\nmethod = {}\norder = {}\ntries = {}",
            r.trials,
            r.seed,
            r.zeta_cutoff,
            r.exhaustive_cap,
            format!("{:?}", r.method).to_lowercase(),
            format!("{:?}", r.order).to_lowercase(),
            r.tries
        );
        o
    }

    /// SHA-256 of the canonical text, hex.
    pub fn digest(&self) -> String {
        format!("{:x}", Sha256::digest(self.serialize().as_bytes()))
    }

    /// The singular-point degree bound at `d`.
    pub fn horizon_at(&self, setup: &Setup, d: usize) -> Result<usize, String> {
        match self.run.horizon {
            None => Ok(self.run.r.saturating_sub(1)),
            Some(Horizon::Fixed(b)) => Ok(b),
            Some(Horizon::Bezout) => bertini_core::density::bezout_horizon(&setup.x, d).ok_or_else(|| {
                "horizon = bezout needs U open in P^1 or P^2 (no closed or removed equations)".to_string()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[field]\np = 2\na = 1\n[ambient]\nn = 1\n[T]\nmode = full\n";

    #[test]
    fn minimal_config_is_the_projective_line() {
        let (cfg, setup) = load(MINIMAL).unwrap();
        assert_eq!((cfg.p, cfg.a, cfg.n), (2, 1, 1));
        assert!(setup.x.closed_eqs.is_empty() && setup.z.is_empty() && setup.y.is_empty());
        assert_eq!(setup.x.dim().unwrap(), 1);
    }

    #[test]
    fn y_on_z_is_a_hypothesis_violation() {
        let text = "[field]\np = 2\n[ambient]\nn = 2\n[Z]\ngen = \"x1\"\n[Y]\npoint = \"1:0:1\"\n";
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs[0].kind, ErrorKind::Hypothesis);
        assert!(errs[0].message.contains("Y∩Z=∅"), "{}", errs[0]);
        assert_eq!(errs[0].line, 8);
    }

    #[test]
    fn inhomogeneous_generator_is_rejected() {
        let text = "[field]\np = 2\n[ambient]\nn = 1\n[Z]\ngen = \"x0 + x1^2\"\n";
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs[0].kind, ErrorKind::Hypothesis);
        assert!(errs[0].message.contains("not homogeneous"));
        assert_eq!((errs[0].line, errs[0].column), (6, 7));
    }

    #[test]
    fn syntax_errors_are_positioned_and_collected() {
        let text = "[field]\np = 2\nbogus = 3\n[nowhere]\n[ambient]\nn = x y\n";
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs.len(), 3);
        assert_eq!((errs[0].line, errs[0].column), (3, 1));
        assert_eq!(errs[1].line, 4);
        assert_eq!((errs[2].line, errs[2].column), (6, 5));
        assert!(errs.iter().all(|e| e.kind == ErrorKind::Syntax));
    }

    #[test]
    fn polynomial_errors_point_into_the_string() {
        let text = "[ambient]\nn = 1\n[Z]\ngen = \"x0 + x7\"\n";
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs[0].line, 4);
        assert!(errs[0].column > 7, "{}", errs[0]);
    }

    #[test]
    fn serialization_round_trips() {
        let text = "\
# crossing lines with one avoided point
[field]
p = 3
level_bound = 3
[ambient]
n = 2
[Z]
gen = \"x2*x1 + 0*x0^2\"   # written loosely
dim_override.1 = 1
[Y]
point = \"1:1:1\"
point@2 = \"1:3:1\"
[T]
mode = explicit
vector = \"1, 2\"
[snc]
component = \"x1\"
component = \"x2\"
[run]
d = 2..5
horizon = bezout
seed = 9
";
        let a = parse_config(text).unwrap();
        assert_eq!(a.z, vec!["x1*x2".to_string()]);
        let b = parse_config(&a.serialize()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.serialize(), b.serialize());
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn duplicate_keys_are_errors() {
        let errs = parse_config("[ambient]\nn = 1\nn = 2\n").unwrap_err();
        assert!(errs[0].message.contains("already set on line 2"));
    }
}
