//! JSON configuration files describing systems, together with named shrink
//! specifications, merge plans, generator scales and test functions.
//!
//! Numbers are strings: `p/q` or an integer for exact rationals, a decimal
//! with `.` or `e` for floats, and `-inf`/`+inf` for infinite endpoints.
//! Intervals are written `[a, b)` and open windows `(a, b)`.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use effint::cantor::{CantorSpec, Fractions};
use effint::catalog;
use effint::energy::TestFunction;
use effint::family::{Chain, FamilyKind, IntervalFamily};
use effint::measure::{AcPiece, CantorPiece, Density, Mask, MemberRule, Piece, Precision, ScaleMeasure};
use effint::merge::{MergePlan, Selection, ShrinkSpec};
use effint::system::EffectiveSystem;
use effint::thinned::ThinnedSet;
use effint::{ExtReal, Interval, Real, Window};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use schemars::JsonSchema;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Version written to and required from every configuration file.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the directory for relative config paths.
pub const CONFIG_DIR_ENV: &str = "EFFINT_CONFIG_DIR";

/// Problems reading or interpreting a configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}: line {line}, column {column}, at `{field}`: {message}")]
    Parse { origin: String, line: usize, column: usize, field: String, message: String },
    #[error("{origin}: at `{field}`: {message}")]
    Invalid { origin: String, field: String, message: String },
    #[error("unknown built-in system {0:?}")]
    UnknownBuiltin(String),
    #[error("{origin}: no {what} named {name:?}")]
    MissingName { origin: String, what: &'static str, name: String },
}

/// A value stored as its display string.
#[derive(Clone, Debug, PartialEq)]
pub struct Str<T>(pub T);

impl<T: fmt::Display> Serialize for Str<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de, T> Deserialize<'de> for Str<T>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);
        impl<T> serde::de::Visitor<'_> for V<T>
        where
            T: FromStr,
            T::Err: fmt::Display,
        {
            type Value = Str<T>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a string")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Str<T>, E> {
                v.parse().map(Str).map_err(E::custom)
            }
        }
        d.deserialize_str(V(PhantomData))
    }
}

impl<T> JsonSchema for Str<T> {
    fn schema_name() -> String {
        "NumberString".into()
    }

    fn json_schema(gen: &mut schemars::gen::SchemaGenerator) -> schemars::schema::Schema {
        String::json_schema(gen)
    }
}

/// An exact rational; decimals such as `0.01` are read exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Rat(pub BigRational);

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Real::Exact(self.0.clone()))
    }
}

impl FromStr for Rat {
    type Err = String;

    fn from_str(s: &str) -> Result<Rat, String> {
        parse_rational(s).map(Rat).ok_or_else(|| format!("cannot parse rational number from {s:?}"))
    }
}

/// Parses `p`, `p/q` or a finite decimal such as `-1.25e-3` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let d: BigInt = d.trim().parse().ok()?;
        let n: BigInt = n.trim().parse().ok()?;
        return (!d.is_zero()).then(|| BigRational::new(n, d));
    }
    let (mant, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut q = BigRational::from_integer(digits);
    for _ in 0..shift.unsigned_abs() {
        q = if shift > 0 { q * &ten } else { q / &ten };
    }
    Some(if neg { -q } else { q })
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Str::<Rat>::deserialize(d).map(|s| s.0)
    }
}

impl JsonSchema for Rat {
    fn schema_name() -> String {
        "RationalString".into()
    }

    fn json_schema(gen: &mut schemars::gen::SchemaGenerator) -> schemars::schema::Schema {
        String::json_schema(gen)
    }
}

/// A complete system description.
#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub state: Str<Interval>,
    pub speed: Vec<PieceConfig>,
    pub entries: Vec<FamilyConfig>,
    pub scale: Vec<PieceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub killing: Option<Vec<PieceConfig>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub shrinks: BTreeMap<String, ShrinkConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub plans: BTreeMap<String, PlanConfig>,
    /// Generator scales, each a list of measure pieces.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub generators: BTreeMap<String, Vec<PieceConfig>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub test_functions: BTreeMap<String, TestFunctionConfig>,
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PieceConfig {
    /// A density times Lebesgue measure on an open window, optionally masked.
    Density {
        window: Str<Window>,
        #[serde(default = "MaskConfig::full", skip_serializing_if = "MaskConfig::is_full")]
        mask: MaskConfig,
        density: DensityConfig,
    },
    /// `scale` times the staircase measure of a Cantor-type set, seen through a window.
    Cantor { spec: SpecConfig, scale: Str<Real>, window: Str<Window> },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskConfig {
    Full,
    OffCantor { spec: SpecConfig },
    OnCantor { spec: SpecConfig },
    /// The thinned open set built from these parameters.
    InBalls { interval: Str<Interval>, base: Vec<PieceConfig>, eps: Rat, depth: usize },
}

impl MaskConfig {
    fn full() -> MaskConfig {
        MaskConfig::Full
    }

    fn is_full(&self) -> bool {
        *self == MaskConfig::Full
    }
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Constant { value: Str<Real> },
    /// `coef * x^exponent` on a window inside `(0, inf)`.
    PowerLaw { coef: Str<Real>, exponent: Rat },
    /// A constant on each member of a family, fixed by `rule`.
    PerMember { family: FamilyConfig, rule: RuleConfig },
    Taper { coef: Str<Real>, anchor: Str<Real>, base: Box<DensityConfig> },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    /// Mass `mass` spread evenly over each member.
    InverseLength { mass: Str<Real> },
    CoreWeights { stride: u64, offset: u64, base: Box<DensityConfig> },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub lo: Rat,
    pub hi: Rat,
    pub fractions: FractionsConfig,
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FractionsConfig {
    Constant { value: Rat },
    Geometric { first: Rat, factor: Rat },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Explicit {
        members: Vec<Str<Interval>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip: Option<[Str<ExtReal>; 2]>,
    },
    /// Adjacent intervals with endpoints `limit + scale / (j + offset)`.
    Chain {
        limit: Rat,
        scale: Rat,
        offset: Rat,
        left_closed: bool,
        right_closed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip: Option<[Str<ExtReal>; 2]>,
    },
    CantorGaps {
        spec: SpecConfig,
        left_closed: bool,
        right_closed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip: Option<[Str<ExtReal>; 2]>,
    },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ShrinkConfig {
    pub default: SelectionConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_entry: Vec<EntrySelection>,
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EntrySelection {
    pub entry: usize,
    pub selection: SelectionConfig,
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionConfig {
    Full,
    Windows { windows: Vec<Str<Window>> },
    OffCantor { spec: SpecConfig },
    Thinned { eps: Rat, depth: usize },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlanConfig {
    EachMember,
    /// Pre-merging point pairs `[left, right]`.
    Pairs { pairs: Vec<[Str<ExtReal>; 2]> },
}

#[derive(Serialize, Deserialize, JsonSchema, Clone, Debug, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionConfig {
    /// Linear interpolation of `[t, value]` knots.
    PiecewiseLinear {
        knots: Vec<[Str<Real>; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        through: Option<Vec<PieceConfig>>,
    },
    Bump {
        center: Str<Real>,
        radius: Str<Real>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        through: Option<Vec<PieceConfig>>,
    },
}

/// A loaded configuration together with the system it describes.
#[derive(Clone, Debug)]
pub struct Loaded {
    /// Where it came from, for diagnostics.
    pub origin: String,
    pub config: SystemConfig,
    pub system: EffectiveSystem,
}

impl Loaded {
    pub fn shrink(&self, name: &str) -> Result<ShrinkSpec, ConfigError> {
        let c = self.config.shrinks.get(name).ok_or_else(|| self.missing("shrink", name))?;
        shrink_spec(c).map_err(|(f, m)| self.invalid(&format!("shrinks.{name}{f}"), m))
    }

    pub fn plan(&self, name: &str) -> Result<MergePlan, ConfigError> {
        let c = self.config.plans.get(name).ok_or_else(|| self.missing("plan", name))?;
        Ok(merge_plan(c))
    }

    /// A generator scale from the file, or one of `lebesgue` and `cantor-shift`.
    pub fn generator(&self, name: &str) -> Result<ScaleMeasure, ConfigError> {
        if let Some(c) = self.config.generators.get(name) {
            return measure(c).map_err(|(f, m)| self.invalid(&format!("generators.{name}{f}"), m));
        }
        builtin_generator(name).ok_or_else(|| self.missing("generator", name))
    }

    pub fn test_function(&self, name: &str) -> Result<TestFunction, ConfigError> {
        let c = self.config.test_functions.get(name).ok_or_else(|| self.missing("test function", name))?;
        test_function(c).map_err(|(f, m)| self.invalid(&format!("test_functions.{name}{f}"), m))
    }

    fn missing(&self, what: &'static str, name: &str) -> ConfigError {
        ConfigError::MissingName { origin: self.origin.clone(), what, name: name.to_string() }
    }

    fn invalid(&self, field: &str, message: String) -> ConfigError {
        ConfigError::Invalid { origin: self.origin.clone(), field: field.to_string(), message }
    }
}

/// Generator scales available by name in every configuration.
pub fn builtin_generator(name: &str) -> Option<ScaleMeasure> {
    match name {
        "lebesgue" | "identity" => Some(catalog::lebesgue()),
        "cantor-shift" => Some(catalog::shifted_identity(1)),
        _ => None,
    }
}

/// Resolves a reference: `builtin:<name>` or a path, relative paths being
/// taken from the config directory variable when it is set.
pub fn load(reference: &str) -> Result<Loaded, ConfigError> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        let config = builtin_config(name).ok_or_else(|| ConfigError::UnknownBuiltin(name.to_string()))?;
        return from_config(reference, config);
    }
    let path = resolve(reference);
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse(&path.display().to_string(), &text)
}

fn resolve(reference: &str) -> PathBuf {
    let p = Path::new(reference);
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

/// Parses configuration text.
pub fn parse(origin: &str, text: &str) -> Result<Loaded, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: SystemConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = strip_position(&inner.to_string());
        ConfigError::Parse { origin: origin.to_string(), line: inner.line(), column: inner.column(), field, message }
    })?;
    from_config(origin, config)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Builds the system of a parsed configuration.
pub fn from_config(origin: &str, config: SystemConfig) -> Result<Loaded, ConfigError> {
    let invalid = |field: String, message: String| ConfigError::Invalid { origin: origin.to_string(), field, message };
    if config.schema_version != SCHEMA_VERSION {
        return Err(invalid("schema_version".into(), format!("expected {SCHEMA_VERSION}, found {}", config.schema_version)));
    }
    let speed = measure(&config.speed).map_err(|(f, m)| invalid(format!("speed{f}"), m))?;
    let scale = measure(&config.scale).map_err(|(f, m)| invalid(format!("scale{f}"), m))?;
    let mut entries = Vec::new();
    for (i, e) in config.entries.iter().enumerate() {
        entries.push(family(e).map_err(|(f, m)| invalid(format!("entries[{i}]{f}"), m))?);
    }
    let killing = match &config.killing {
        Some(k) => Some(measure(k).map_err(|(f, m)| invalid(format!("killing{f}"), m))?),
        None => None,
    };
    let system = EffectiveSystem::new(config.state.0.clone(), speed, entries, scale, killing);
    let loaded = Loaded { origin: origin.to_string(), config, system };
    // Named items are checked up front so that errors point at the file.
    for name in loaded.config.shrinks.keys() {
        loaded.shrink(name)?;
    }
    for name in loaded.config.generators.keys() {
        loaded.generator(name)?;
    }
    for name in loaded.config.test_functions.keys() {
        loaded.test_function(name)?;
    }
    Ok(loaded)
}

/// A conversion failure: field path suffix and message.
type Fail = (String, String);

fn at<T>(r: effint::Result<T>, field: &str) -> Result<T, Fail> {
    r.map_err(|e| (field.to_string(), e.to_string()))
}

fn nest<T>(r: Result<T, Fail>, prefix: &str) -> Result<T, Fail> {
    r.map_err(|(f, m)| (format!("{prefix}{f}"), m))
}

/// The measure described by a list of pieces.
pub fn measure(pieces: &[PieceConfig]) -> Result<ScaleMeasure, Fail> {
    let mut out = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        out.push(nest(piece(p), &format!("[{i}]"))?);
    }
    Ok(ScaleMeasure::from_pieces(out))
}

fn piece(p: &PieceConfig) -> Result<Piece, Fail> {
    Ok(match p {
        PieceConfig::Density { window, mask: m, density: d } => {
            let mask = nest(mask(m), ".mask")?;
            let density = nest(density(d), ".density")?;
            Piece::Ac(at(AcPiece::new(window.0.clone(), mask, density), "")?)
        }
        PieceConfig::Cantor { spec: s, scale, window } => {
            Piece::Cantor(CantorPiece { spec: nest(spec(s), ".spec")?, scale: scale.0.clone(), window: window.0.clone() })
        }
    })
}

fn mask(m: &MaskConfig) -> Result<Mask, Fail> {
    Ok(match m {
        MaskConfig::Full => Mask::Full,
        MaskConfig::OffCantor { spec: s } => Mask::OffCantor(nest(spec(s), ".spec")?),
        MaskConfig::OnCantor { spec: s } => Mask::OnCantor(nest(spec(s), ".spec")?),
        MaskConfig::InBalls { interval, base, eps, depth } => {
            let base = nest(measure(base), ".base")?;
            Mask::InBalls(at(ThinnedSet::build(&interval.0, &base, eps.0.clone(), *depth, &Precision::default()), "")?)
        }
    })
}

fn density(d: &DensityConfig) -> Result<Density, Fail> {
    Ok(match d {
        DensityConfig::Constant { value } => Density::Constant(value.0.clone()),
        DensityConfig::PowerLaw { coef, exponent } => Density::PowerLaw { coef: coef.0.clone(), exponent: exponent.0.clone() },
        DensityConfig::PerMember { family: f, rule: r } => {
            let rule = match r {
                RuleConfig::InverseLength { mass } => MemberRule::InverseLength { mass: mass.0.clone() },
                RuleConfig::CoreWeights { stride, offset, base } => {
                    MemberRule::CoreWeights { stride: *stride, offset: *offset, base: Box::new(nest(density(base), ".rule.base")?) }
                }
            };
            Density::PerMember { family: nest(family(f), ".family")?, rule }
        }
        DensityConfig::Taper { coef, anchor, base } => {
            Density::Taper { coef: coef.0.clone(), anchor: anchor.0.clone(), base: Box::new(nest(density(base), ".base")?) }
        }
    })
}

fn spec(s: &SpecConfig) -> Result<CantorSpec, Fail> {
    let fractions = match &s.fractions {
        FractionsConfig::Constant { value } => Fractions::Constant(value.0.clone()),
        FractionsConfig::Geometric { first, factor } => Fractions::Geometric { first: first.0.clone(), factor: factor.0.clone() },
    };
    at(CantorSpec::new(s.lo.0.clone(), s.hi.0.clone(), fractions), "")
}

fn family(f: &FamilyConfig) -> Result<IntervalFamily, Fail> {
    let (fam, clip) = match f {
        FamilyConfig::Explicit { members, clip } => (IntervalFamily::explicit(members.iter().map(|m| m.0.clone()).collect()), clip),
        FamilyConfig::Chain { limit, scale, offset, left_closed, right_closed, clip } => {
            let chain = at(Chain::new(limit.0.clone(), scale.0.clone(), offset.0.clone(), *left_closed, *right_closed), "")?;
            (IntervalFamily::chain(chain), clip)
        }
        FamilyConfig::CantorGaps { spec: s, left_closed, right_closed, clip } => {
            let kind = FamilyKind::CantorGaps { spec: nest(spec(s), ".spec")?, left_closed: *left_closed, right_closed: *right_closed };
            (IntervalFamily { kind, clip: None }, clip)
        }
    };
    match clip {
        None => Ok(fam),
        Some([lo, hi]) => fam.clipped(&lo.0, &hi.0).ok_or_else(|| (".clip".to_string(), format!("clip [{}, {}] leaves no members", lo.0, hi.0))),
    }
}

fn shrink_spec(c: &ShrinkConfig) -> Result<ShrinkSpec, Fail> {
    let default = nest(selection(&c.default), ".default")?;
    let mut per_entry = Vec::new();
    for (i, e) in c.per_entry.iter().enumerate() {
        per_entry.push((e.entry, nest(selection(&e.selection), &format!(".per_entry[{i}].selection"))?));
    }
    Ok(ShrinkSpec { default, per_entry })
}

fn selection(c: &SelectionConfig) -> Result<Selection, Fail> {
    Ok(match c {
        SelectionConfig::Full => Selection::Full,
        SelectionConfig::Windows { windows } => Selection::Windows(windows.iter().map(|w| w.0.clone()).collect()),
        SelectionConfig::OffCantor { spec: s } => Selection::OffCantor(nest(spec(s), ".spec")?),
        SelectionConfig::Thinned { eps, depth } => Selection::Thinned { eps: eps.0.clone(), depth: *depth },
    })
}

fn merge_plan(c: &PlanConfig) -> MergePlan {
    match c {
        PlanConfig::EachMember => MergePlan::EachMember,
        PlanConfig::Pairs { pairs } => MergePlan::Pairs(pairs.iter().map(|[a, b]| (a.0.clone(), b.0.clone())).collect()),
    }
}

fn test_function(c: &TestFunctionConfig) -> Result<TestFunction, Fail> {
    let (u, through) = match c {
        TestFunctionConfig::PiecewiseLinear { knots, through } => {
            let knots = knots.iter().map(|[t, v]| (t.0.clone(), v.0.clone())).collect();
            (at(TestFunction::piecewise_linear(knots), ".knots")?, through)
        }
        TestFunctionConfig::Bump { center, radius, through } => (at(TestFunction::bump(center.0.clone(), radius.0.clone()), "")?, through),
    };
    Ok(match through {
        Some(m) => u.through(nest(measure(m), ".through")?),
        None => u,
    })
}

/// The configuration describing `system`, with no named items.
pub fn to_config(system: &EffectiveSystem) -> SystemConfig {
    SystemConfig {
        schema_version: SCHEMA_VERSION,
        description: None,
        state: Str(system.state.clone()),
        speed: pieces_config(&system.speed),
        entries: system.entries.iter().map(family_config).collect(),
        scale: pieces_config(&system.scale),
        killing: system.killing.as_ref().map(pieces_config),
        shrinks: BTreeMap::new(),
        plans: BTreeMap::new(),
        generators: BTreeMap::new(),
        test_functions: BTreeMap::new(),
    }
}

pub fn pieces_config(m: &ScaleMeasure) -> Vec<PieceConfig> {
    m.pieces().iter().map(piece_config).collect()
}

fn piece_config(p: &Piece) -> PieceConfig {
    match p {
        Piece::Ac(a) => PieceConfig::Density { window: Str(a.window.clone()), mask: mask_config(&a.mask), density: density_config(&a.density) },
        Piece::Cantor(c) => PieceConfig::Cantor { spec: spec_config(&c.spec), scale: Str(c.scale.clone()), window: Str(c.window.clone()) },
    }
}

fn mask_config(m: &Mask) -> MaskConfig {
    match m {
        Mask::Full => MaskConfig::Full,
        Mask::OffCantor(s) => MaskConfig::OffCantor { spec: spec_config(s) },
        Mask::OnCantor(s) => MaskConfig::OnCantor { spec: spec_config(s) },
        Mask::InBalls(t) => MaskConfig::InBalls { interval: Str(t.interval.clone()), base: pieces_config(&t.base), eps: Rat(t.eps.clone()), depth: t.depth() },
    }
}

fn density_config(d: &Density) -> DensityConfig {
    match d {
        Density::Constant(c) => DensityConfig::Constant { value: Str(c.clone()) },
        Density::PowerLaw { coef, exponent } => DensityConfig::PowerLaw { coef: Str(coef.clone()), exponent: Rat(exponent.clone()) },
        Density::PerMember { family, rule } => {
            let rule = match rule {
                MemberRule::InverseLength { mass } => RuleConfig::InverseLength { mass: Str(mass.clone()) },
                MemberRule::CoreWeights { stride, offset, base } => RuleConfig::CoreWeights { stride: *stride, offset: *offset, base: Box::new(density_config(base)) },
            };
            DensityConfig::PerMember { family: family_config(family), rule }
        }
        Density::Taper { coef, anchor, base } => DensityConfig::Taper { coef: Str(coef.clone()), anchor: Str(anchor.clone()), base: Box::new(density_config(base)) },
    }
}

fn spec_config(s: &CantorSpec) -> SpecConfig {
    let fractions = match &s.fractions {
        Fractions::Constant(v) => FractionsConfig::Constant { value: Rat(v.clone()) },
        Fractions::Geometric { first, factor } => FractionsConfig::Geometric { first: Rat(first.clone()), factor: Rat(factor.clone()) },
    };
    SpecConfig { lo: Rat(s.lo.clone()), hi: Rat(s.hi.clone()), fractions }
}

fn family_config(f: &IntervalFamily) -> FamilyConfig {
    let clip = f.clip.as_ref().map(|(lo, hi)| [Str(lo.clone()), Str(hi.clone())]);
    match &f.kind {
        FamilyKind::Explicit(members) => FamilyConfig::Explicit { members: members.iter().cloned().map(Str).collect(), clip },
        FamilyKind::Chain(c) => FamilyConfig::Chain {
            limit: Rat(c.limit.clone()),
            scale: Rat(c.scale.clone()),
            offset: Rat(c.offset.clone()),
            left_closed: c.left_closed,
            right_closed: c.right_closed,
            clip,
        },
        FamilyKind::CantorGaps { spec, left_closed, right_closed } => {
            FamilyConfig::CantorGaps { spec: spec_config(spec), left_closed: *left_closed, right_closed: *right_closed, clip }
        }
    }
}

fn pair(a: ExtReal, b: ExtReal) -> [Str<ExtReal>; 2] {
    [Str(a), Str(b)]
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// Built-in systems with a few named plans, shrinks and test functions.
pub fn builtin_config(name: &str) -> Option<SystemConfig> {
    let system = catalog::named_system(name)?;
    let mut c = to_config(&system);
    let tent = TestFunctionConfig::PiecewiseLinear { knots: vec![[Str(Real::int(-1)), Str(Real::zero())], [Str(Real::zero()), Str(Real::one())], [Str(Real::one()), Str(Real::zero())]], through: None };
    c.test_functions.insert("tent".into(), tent);
    c.plans.insert("identity".into(), PlanConfig::EachMember);
    match name {
        "brownian" => {
            c.description = Some("Brownian motion on the line".into());
            c.shrinks.insert("off-cantor".into(), ShrinkConfig { default: SelectionConfig::OffCantor { spec: spec_config(&CantorSpec::standard()) }, per_entry: vec![] });
            c.shrinks.insert("thinned".into(), ShrinkConfig { default: SelectionConfig::Thinned { eps: Rat(BigRational::new(1.into(), 10.into())), depth: 12 }, per_entry: vec![] });
        }
        "cantor-trap" => {
            c.description = Some("rays and closed gaps around the middle-thirds Cantor set, natural scales".into());
            c.plans.insert("ray-to-first-gap".into(), PlanConfig::Pairs { pairs: vec![pair(ExtReal::NegInf, ExtReal::ratio(2, 3))] });
            c.plans.insert("inside-gap".into(), PlanConfig::Pairs { pairs: vec![pair(ExtReal::ratio(1, 3), ExtReal::ratio(2, 3))] });
            c.plans.insert("gap-end-to-ray".into(), PlanConfig::Pairs { pairs: vec![pair(ExtReal::ratio(2, 3), ExtReal::int(1))] });
        }
        "bessel" => {
            c.description = Some("two-dimensional Bessel process on [0, +inf)".into());
            c.shrinks.insert("thinned".into(), ShrinkConfig { default: SelectionConfig::Thinned { eps: Rat(BigRational::new(1.into(), 10.into())), depth: 12 }, per_entry: vec![] });
        }
        "split-at-zero" | "harmonic-chain" | "double-chain" => {
            c.description = Some("natural scales on intervals accumulating inside [-1, 1]; not adapted".into());
        }
        "unit-mass-gaps" => c.description = Some("trap intervals with unit scale mass on every gap".into()),
        "fat-cantor" => c.description = Some("rays and closed gaps around a fat Cantor set, natural scales".into()),
        _ => {}
    }
    if name == "brownian" || name == "cantor-trap" {
        c.shrinks.insert("half-window".into(), ShrinkConfig {
            default: SelectionConfig::Full,
            per_entry: vec![EntrySelection { entry: 0, selection: SelectionConfig::Windows { windows: vec![Str(Window::new(ExtReal::NegInf, ExtReal::Finite(Real::Exact(-half())))), Str(Window::new(ExtReal::Finite(Real::Exact(-half())), ExtReal::PosInf))] } }],
        });
    }
    Some(c)
}

/// Pretty JSON with a trailing newline.
pub fn to_json(c: &SystemConfig) -> String {
    let mut s = serde_json::to_string_pretty(c).expect("configs serialize");
    s.push('\n');
    s
}

/// The JSON schema of configuration files.
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(SystemConfig);
    let mut s = serde_json::to_string_pretty(&schema).expect("schemas serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_exactly() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(parse_rational("0.01"), Some(q(1, 100)));
        assert_eq!(parse_rational("-1.25e-1"), Some(q(-1, 8)));
        assert_eq!(parse_rational("3/6"), Some(q(1, 2)));
        assert_eq!(parse_rational("2e3"), Some(q(2000, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("."), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn builtins_round_trip() {
        for name in ["brownian", "cantor-trap", "unit-mass-gaps", "fat-cantor", "split-at-zero", "harmonic-chain", "double-chain", "bessel"] {
            let c = builtin_config(name).unwrap();
            let text = to_json(&c);
            let a = parse(name, &text).unwrap();
            assert_eq!(a.config, c, "{name}");
            assert_eq!(a.system, catalog::named_system(name).unwrap(), "{name}");
            assert_eq!(to_json(&to_config(&a.system)), to_json(&to_config(&catalog::named_system(name).unwrap())));
        }
    }

    #[test]
    fn unknown_fields_are_rejected_with_a_path() {
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&builtin_config("brownian").unwrap())).unwrap();
        v["entries"][0]["colour"] = "red".into();
        let err = parse("t", &serde_json::to_string_pretty(&v).unwrap()).unwrap_err();
        let ConfigError::Parse { field, line, .. } = err else { panic!("{err}") };
        assert_eq!(field, "entries[0]");
        assert!(line > 1);
    }

    #[test]
    fn bad_interval_reports_field() {
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&builtin_config("brownian").unwrap())).unwrap();
        v["state"] = "[+inf, 0)".into();
        let err = parse("t", &v.to_string()).unwrap_err();
        assert!(matches!(&err, ConfigError::Parse { field, .. } if field == "state"), "{err}");
    }

    #[test]
    fn invalid_cantor_spec_reports_field() {
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&builtin_config("cantor-trap").unwrap())).unwrap();
        v["entries"][1]["spec"]["hi"] = "-1".into();
        let err = parse("t", &v.to_string()).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "entries[1].spec"), "{err}");
    }

    #[test]
    fn thinned_masks_round_trip() {
        let s = catalog::brownian();
        let spec = ShrinkSpec { default: Selection::Thinned { eps: BigRational::new(1.into(), 10.into()), depth: 5 }, per_entry: vec![] };
        let out = effint::merge::shrink(&s, &spec, &Precision::default()).unwrap();
        let back = parse("t", &to_json(&to_config(&out))).unwrap();
        assert_eq!(back.system, out);
    }
}
