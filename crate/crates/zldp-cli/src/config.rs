//! Flat dotted-key JSON configuration: schema, defaults, validation.

use serde_json::{json, Map, Value};
use zldp::ladder::build_ladder;
use zldp::ledger::{ConstantsLedger, Profile};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Float,
    UInt,
    FloatList,
    OptFloat,
    Bool,
    Text(&'static [&'static str]),
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: fn() -> Value,
}

macro_rules! key {
    ($name:expr, $kind:expr, $default:expr) => {
        Key { name: $name, kind: $kind, default: || json!($default) }
    };
}

const PROFILES: &[&str] = &["paper", "desk"];

fn schema() -> Vec<Key> {
    use Kind::*;
    vec![
        key!("run.profile", Text(PROFILES), "desk"),
        key!("run.seed", UInt, 42),
        key!("run.samples", UInt, 100_000),
        key!("run.T", Float, 1e6),
        key!("sieve.limit", UInt, 1_000_000),
        key!("zeta.t", FloatList, [14.134725141734693, 100.0, 1000.0]),
        key!("zeta.checked", Bool, false),
        key!("dirichlet.pairs", UInt, 20),
        key!("dirichlet.terms", UInt, 12),
        key!("dirichlet.split", Float, 10.0),
        key!("dirichlet.ell", UInt, 0),
        key!("dirichlet.j", OptFloat, Value::Null),
        key!("dirichlet.k", OptFloat, Value::Null),
        key!("dirichlet.q", UInt, 1),
        key!("ladder.alpha", Float, 1.0),
        key!("ladder.V", OptFloat, Value::Null),
        key!("model.block", OptFloat, Value::Null),
        key!("model.lo", Float, 100.0),
        key!("model.hi", Float, 10_000.0),
        key!("model.lambda", FloatList, [0.5, 1.0, 2.0]),
        key!("model.q", FloatList, [1, 2, 3, 4]),
        key!("model.v", FloatList, [-1.0, 0.0, 1.0]),
        key!("model.delta", FloatList, [1.0, 2.0, 4.0]),
        key!("model.grid", UInt, 41),
        key!("majorant.delta", Float, 3.0),
        key!("majorant.A", OptFloat, Value::Null),
        key!("majorant.nu", OptFloat, Value::Null),
        key!("majorant.grid", UInt, 10_000),
        key!("majorant.u", FloatList, [0.0, 1.0]),
        key!("experiment.alpha", FloatList, [0.5, 1.0, 1.5]),
        key!("experiment.beta", FloatList, [0.5, 1.0, 2.0]),
        key!("experiment.theta", Float, 1.0),
        key!("experiment.windows", UInt, 200),
        key!("experiment.grid_a", Float, zldp::experiments::DEFAULT_GRID_A),
        key!("experiment.y", FloatList, [0.0, 1.0, 2.0]),
        key!("experiment.short_beta", FloatList, [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]),
        key!("experiment.critical_y", FloatList, [-2.0, -1.0, 0.0, 1.0, 2.0]),
        key!("experiment.model_cutoff", Float, 0.5),
    ]
}

const LEDGER_KEYS: &[&str] = &[
    "s_multiplier",
    "barrier_factor",
    "a_const",
    "d_const",
    "e_omega",
    "e_m",
    "e_q",
    "e_c",
    "length_fraction",
    "coeff_fraction",
    "majorant_a",
    "nu_exponent",
    "band_exponent",
    "sieve_limit",
    "tuple_cap",
    "length_cap",
];

/// Validated configuration with every key present.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub map: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn f64(&self, k: &str) -> f64 {
        self.map[k].as_f64().unwrap_or_else(|| panic!("config key {k} is not a number"))
    }

    pub fn opt_f64(&self, k: &str) -> Option<f64> {
        self.map.get(k).and_then(Value::as_f64)
    }

    pub fn u64(&self, k: &str) -> u64 {
        self.map[k].as_u64().unwrap_or_else(|| panic!("config key {k} is not an integer"))
    }

    pub fn usize(&self, k: &str) -> usize {
        self.u64(k) as usize
    }

    pub fn list(&self, k: &str) -> Vec<f64> {
        self.map[k].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
    }

    pub fn bool(&self, k: &str) -> bool {
        self.map[k].as_bool().unwrap_or_else(|| panic!("config key {k} is not a boolean"))
    }

    pub fn str(&self, k: &str) -> &str {
        self.map[k].as_str().unwrap_or_else(|| panic!("config key {k} is not a string"))
    }

    pub fn profile(&self) -> Profile {
        self.str("run.profile").parse().expect("validated profile")
    }

    /// Profile ledger with any `ledger.*` overrides applied.
    pub fn ledger(&self) -> ConstantsLedger {
        let mut l = ConstantsLedger::for_profile(self.profile());
        for (k, v) in &self.map {
            if let Some(field) = k.strip_prefix("ledger.") {
                l.set(field, v.as_f64().expect("validated ledger value")).expect("validated ledger key");
            }
        }
        l
    }
}

fn check_kind(name: &str, kind: Kind, v: &Value, errors: &mut Vec<String>) -> bool {
    let ok = match kind {
        Kind::Float => v.as_f64().is_some_and(f64::is_finite),
        Kind::UInt => v.as_u64().is_some() || v.as_f64().is_some_and(|x| x >= 0.0 && x.fract() == 0.0 && x < 9.0e15),
        Kind::FloatList => v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(|x| x.as_f64().is_some_and(f64::is_finite))),
        Kind::OptFloat => v.is_null() || v.as_f64().is_some_and(f64::is_finite),
        Kind::Bool => v.is_boolean(),
        Kind::Text(allowed) => v.as_str().is_some_and(|s| allowed.contains(&s)),
    };
    if !ok {
        let want = match kind {
            Kind::Float => "a finite number".to_string(),
            Kind::UInt => "a non-negative integer".to_string(),
            Kind::FloatList => "a non-empty list of numbers".to_string(),
            Kind::OptFloat => "a number or null".to_string(),
            Kind::Bool => "true or false".to_string(),
            Kind::Text(a) => format!("one of {}", a.join("|")),
        };
        errors.push(format!("{name}: expected {want}, got {v}"));
    }
    ok
}

fn normalize(kind: Kind, v: Value) -> Value {
    match kind {
        Kind::UInt => json!(v.as_u64().unwrap_or_else(|| v.as_f64().unwrap_or(0.0) as u64)),
        Kind::Float => json!(v.as_f64()),
        _ => v,
    }
}

/// Parses `json_text`, fills defaults and collects every error.
pub fn validate_config(json_text: &str) -> Result<Resolved, Vec<String>> {
    let parsed: Value = serde_json::from_str(json_text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
    let Value::Object(obj) = parsed else {
        return Err(vec!["configuration must be a JSON object".to_string()]);
    };
    validate_map(obj)
}

pub fn validate_map(obj: Map<String, Value>) -> Result<Resolved, Vec<String>> {
    let keys = schema();
    let mut errors = Vec::new();
    let mut map = Map::new();
    for k in &keys {
        map.insert(k.name.to_string(), (k.default)());
    }
    for (name, v) in obj {
        if let Some(k) = keys.iter().find(|k| k.name == name) {
            // a mistyped value keeps its default so range checks stay meaningful
            if check_kind(&name, k.kind, &v, &mut errors) {
                map.insert(name, normalize(k.kind, v));
            }
        } else if let Some(field) = name.strip_prefix("ledger.") {
            if !LEDGER_KEYS.contains(&field) {
                errors.push(format!("{name}: unknown ledger constant"));
            } else if let Some(x) = v.as_f64() {
                if let Err(e) = ConstantsLedger::desk().set(field, x) {
                    errors.push(e);
                } else {
                    map.insert(name, json!(x));
                }
            } else {
                errors.push(format!("{name}: expected a number, got {v}"));
            }
        } else {
            errors.push(format!("{name}: unknown key"));
        }
    }
    range_checks(&map, &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    let mut r = Resolved { map, warnings: Vec::new() };
    feasibility_warnings(&mut r);
    Ok(r)
}

fn range_checks(map: &Map<String, Value>, errors: &mut Vec<String>) {
    let f = |k: &str| map[k].as_f64().unwrap_or(f64::NAN);
    let list = |k: &str| -> Vec<f64> { map[k].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default() };
    let big_t = f("run.T");
    if !(10.0..=zldp::zeta::MAX_HEIGHT / 2.0).contains(&big_t) {
        errors.push(format!("run.T = {big_t}: must lie in [10, {:e}]", zldp::zeta::MAX_HEIGHT / 2.0));
    }
    if map["run.samples"].as_u64() == Some(0) {
        errors.push("run.samples: must be positive".into());
    }
    if map["experiment.windows"].as_u64() == Some(0) {
        errors.push("experiment.windows: must be positive".into());
    }
    let alpha = f("ladder.alpha");
    if !(alpha > 0.0 && alpha < 2.0) {
        errors.push(format!("ladder.alpha = {alpha}: outside the unconditional range (0, 2)"));
    }
    for a in list("experiment.alpha") {
        if !(a > 0.0 && a < 2.0) {
            errors.push(format!("experiment.alpha = {a}: outside the unconditional range (0, 2)"));
        }
    }
    for b in list("experiment.beta") {
        if !(b > 0.0 && b < 4.0) {
            errors.push(format!("experiment.beta = {b}: outside (0, 4)"));
        }
    }
    for b in list("experiment.short_beta") {
        if b < 0.0 {
            errors.push(format!("experiment.short_beta = {b}: must be non-negative"));
        }
    }
    let theta = f("experiment.theta");
    if !(0.0..3.0).contains(&theta) {
        errors.push(format!("experiment.theta = {theta}: outside [0, 3)"));
    }
    let c = f("experiment.model_cutoff");
    if !(c > 0.0 && c <= 1.0) {
        errors.push(format!("experiment.model_cutoff = {c}: outside (0, 1]"));
    }
    if f("experiment.grid_a") <= 0.0 {
        errors.push("experiment.grid_a: must be positive".into());
    }
    let d = f("majorant.delta");
    if d < 3.0 {
        errors.push(format!("majorant.delta = {d}: must be at least 3"));
    }
    if !(f("model.lo") >= 1.0 && f("model.hi") > f("model.lo")) {
        errors.push(format!("model.lo/model.hi = {}/{}: need 1 <= lo < hi", f("model.lo"), f("model.hi")));
    }
    if let Some(b) = map["model.block"].as_f64() {
        if !(b >= 1.0 && b.fract() == 0.0) {
            errors.push(format!("model.block = {b}: must be a positive integer"));
        }
    }
    if map["dirichlet.q"].as_u64() == Some(0) {
        errors.push("dirichlet.q: must be positive".into());
    }
    for q in list("model.q") {
        if !(q >= 1.0 && q.fract() == 0.0) {
            errors.push(format!("model.q = {q}: must be a positive integer"));
        }
    }
    for d in list("model.delta") {
        if d <= 0.0 {
            errors.push(format!("model.delta = {d}: must be positive"));
        }
    }
    for t in list("zeta.t") {
        if !(t > 0.0 && t <= zldp::zeta::MAX_HEIGHT) {
            errors.push(format!("zeta.t = {t}: outside (0, {:e}]", zldp::zeta::MAX_HEIGHT));
        }
    }
}

fn feasibility_warnings(r: &mut Resolved) {
    let big_t = r.f64("run.T");
    let alpha = r.f64("ladder.alpha");
    let t = big_t.ln().ln();
    let v = r.opt_f64("ladder.V").unwrap_or(alpha * t);
    if r.profile() == Profile::Paper && build_ladder(big_t, alpha, v, &r.ledger()).is_err() {
        r.warnings.push(format!(
            "ladder infeasible under the paper profile at T = {big_t:e} (t = {t:.4}); sampling commands need run.profile = \"desk\""
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let r = validate_config("{}").unwrap();
        assert_eq!(r.u64("run.seed"), 42);
        assert_eq!(r.u64("run.samples"), 100_000);
        assert_eq!(r.f64("run.T"), 1e6);
        assert_eq!(r.profile(), Profile::Desk);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn errors_are_collected() {
        let e = validate_config(r#"{"ladder.alpha": 2.5, "experiment.theta": 4, "bogus": 1, "run.seed": -1}"#).unwrap_err();
        assert_eq!(e.len(), 4, "{e:?}");
        assert!(e.iter().any(|m| m.contains("ladder.alpha") && m.contains("(0, 2)")));
    }

    #[test]
    fn paper_profile_warns() {
        let r = validate_config(r#"{"run.profile": "paper", "run.T": 1e6}"#).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("desk"));
    }

    #[test]
    fn ledger_overrides_apply() {
        let r = validate_config(r#"{"ledger.e_omega": 4}"#).unwrap();
        assert_eq!(r.ledger().e_omega, 4.0);
        assert!(validate_config(r#"{"ledger.nope": 1}"#).is_err());
    }
}
