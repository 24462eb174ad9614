//! Benchmark configuration files.
//!
//! A config is a TOML document with the sections `target`, `family`,
//! `theta1`, `schedule`, `seeds`, `run`, `grid` and any number of `[[psi]]`
//! tables. Unknown keys are rejected, and every problem found is reported
//! with its key path.

use std::fmt;
use std::path::{Path, PathBuf};

use amis::{
    derive_seed, make_banana_target, make_gaussian_target, make_mixture_target,
    make_uniform_target, Algorithm, BoxBounds, FamilySpec, GridSpec, Integrand, NamedIntegrand,
    Normalization, ProposalParams, Schedule, TargetModel,
};
use toml::{Table, Value};

pub const DEFAULT_GRID_CELLS: usize = 100;

/// One invalid field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    /// Paths of every invalid field.
    pub fn paths(&self) -> Vec<&str> {
        match self {
            ConfigError::Invalid(v) => v.iter().map(|i| i.path.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    Derived { base: u64, replicates: usize },
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Derived { base, replicates } => {
                (0..*replicates as u64).map(|r| derive_seed(*base, r)).collect()
            }
            SeedSpec::List(v) => v.clone(),
        }
    }
}

/// A validated benchmark configuration.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub target: TargetModel,
    pub family: FamilySpec,
    pub theta1: ProposalParams,
    pub schedule: Schedule,
    pub seeds: SeedSpec,
    pub algorithms: Vec<Algorithm>,
    pub normalization: Normalization,
    pub output: Option<PathBuf>,
    pub grid: GridSpec,
    pub psi: Vec<NamedIntegrand>,
}

impl BenchConfig {
    /// Replaces the base seed; an explicit seed list becomes a derived
    /// sequence of the same length.
    pub fn override_seed(&mut self, base: u64) {
        let replicates = match &self.seeds {
            SeedSpec::Derived { replicates, .. } => *replicates,
            SeedSpec::List(v) => v.len(),
        };
        self.seeds = SeedSpec::Derived { base, replicates };
    }
}

pub fn parse_config(path: &Path) -> Result<BenchConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<BenchConfig, ConfigError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut cx = Cx::default();
    let cfg = build(&root, &mut cx);
    match cfg {
        Some(c) if cx.issues.is_empty() => Ok(c),
        _ => Err(ConfigError::Invalid(cx.issues)),
    }
}

#[derive(Default)]
struct Cx {
    issues: Vec<ConfigIssue>,
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

impl Cx {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn allow(&mut self, t: &Table, prefix: &str, keys: &[&str]) {
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                self.issue(join(prefix, k), "unknown key");
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, prefix: &str, key: &str, required: bool) -> Option<&'a Table> {
        match t.get(key) {
            Some(Value::Table(s)) => Some(s),
            Some(_) => {
                self.issue(join(prefix, key), "expected a table");
                None
            }
            None => {
                if required {
                    self.issue(join(prefix, key), "missing section");
                }
                None
            }
        }
    }

    fn float(&mut self, t: &Table, prefix: &str, key: &str, required: bool) -> Option<f64> {
        match t.get(key) {
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Integer(v)) => Some(*v as f64),
            Some(_) => {
                self.issue(join(prefix, key), "expected a number");
                None
            }
            None => {
                if required {
                    self.issue(join(prefix, key), "missing");
                }
                None
            }
        }
    }

    fn int(&mut self, t: &Table, prefix: &str, key: &str, required: bool) -> Option<i64> {
        match t.get(key) {
            Some(Value::Integer(v)) => Some(*v),
            Some(_) => {
                self.issue(join(prefix, key), "expected an integer");
                None
            }
            None => {
                if required {
                    self.issue(join(prefix, key), "missing");
                }
                None
            }
        }
    }

    fn positive(&mut self, t: &Table, prefix: &str, key: &str, required: bool) -> Option<usize> {
        let v = self.int(t, prefix, key, required)?;
        if v < 1 {
            self.issue(join(prefix, key), format!("must be a positive integer, got {v}"));
            return None;
        }
        Some(v as usize)
    }

    fn seed(&mut self, v: &Value, path: &str) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.issue(path, "seeds must be non-negative integers");
                None
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, prefix: &str, key: &str, required: bool) -> Option<&'a str> {
        match t.get(key) {
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.issue(join(prefix, key), "expected a string");
                None
            }
            None => {
                if required {
                    self.issue(join(prefix, key), "missing");
                }
                None
            }
        }
    }

    fn floats(&mut self, t: &Table, prefix: &str, key: &str, required: bool) -> Option<Vec<f64>> {
        let path = join(prefix, key);
        match t.get(key) {
            Some(v) => self.float_array(v, &path),
            None => {
                if required {
                    self.issue(path, "missing");
                }
                None
            }
        }
    }

    fn float_array(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(a) = v else {
            self.issue(path, "expected an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(a.len());
        for (i, x) in a.iter().enumerate() {
            match x {
                Value::Float(f) => out.push(*f),
                Value::Integer(n) => out.push(*n as f64),
                _ => {
                    self.issue(format!("{path}[{i}]"), "expected a number");
                    return None;
                }
            }
        }
        Some(out)
    }

    fn float_rows(&mut self, t: &Table, prefix: &str, key: &str) -> Option<Vec<Vec<f64>>> {
        let path = join(prefix, key);
        match t.get(key) {
            Some(Value::Array(rows)) => {
                let mut out = Vec::new();
                let mut ok = true;
                for (i, r) in rows.iter().enumerate() {
                    match self.float_array(r, &format!("{path}[{i}]")) {
                        Some(v) => out.push(v),
                        None => ok = false,
                    }
                }
                ok.then_some(out)
            }
            Some(_) => {
                self.issue(path, "expected an array of arrays");
                None
            }
            None => {
                self.issue(path, "missing");
                None
            }
        }
    }
}

fn build(root: &Table, cx: &mut Cx) -> Option<BenchConfig> {
    cx.allow(
        root,
        "",
        &["target", "family", "theta1", "schedule", "seeds", "run", "grid", "psi"],
    );
    let target = cx.table(root, "", "target", true).and_then(|t| parse_target(t, cx));
    let dim = target.as_ref().map(|t| t.dim());
    let family = parse_family(root, dim, cx);
    let theta1 = cx
        .table(root, "", "theta1", true)
        .and_then(|t| parse_theta1(t, dim, cx));
    let schedule = cx.table(root, "", "schedule", true).and_then(|t| parse_schedule(t, cx));
    let seeds = cx.table(root, "", "seeds", true).and_then(|t| parse_seeds(t, cx));
    let (algorithms, normalization, output) = parse_run(cx.table(root, "", "run", false), cx);
    let grid = parse_grid(cx.table(root, "", "grid", false), target.as_ref(), cx);
    let psi = parse_psi(root, dim, cx);
    Some(BenchConfig {
        target: target?,
        family: family?,
        theta1: theta1?,
        schedule: schedule?,
        seeds: seeds?,
        algorithms: algorithms?,
        normalization: normalization?,
        output,
        grid: grid?,
        psi: psi?,
    })
}

fn square(cx: &mut Cx, path: String, v: &[f64], d: usize) -> bool {
    if v.len() != d * d {
        cx.issue(path, format!("expected {} entries (row-major {d}x{d}), got {}", d * d, v.len()));
        false
    } else {
        true
    }
}

fn parse_target(t: &Table, cx: &mut Cx) -> Option<TargetModel> {
    let p = "target";
    let kind = cx.string(t, p, "kind", true)?.to_string();
    let hidden = cx.float(t, p, "hidden_log_constant", false);
    let target = match kind.as_str() {
        "gaussian" => {
            cx.allow(t, p, &["kind", "mean", "cov", "hidden_log_constant"]);
            let mean = cx.floats(t, p, "mean", true);
            let cov = cx.floats(t, p, "cov", true);
            let (mean, cov) = (mean?, cov?);
            if !square(cx, join(p, "cov"), &cov, mean.len()) {
                return None;
            }
            make_gaussian_target(&mean, &cov).map_err(|e| cx.issue(join(p, "cov"), e.to_string())).ok()
        }
        "mixture" => {
            cx.allow(t, p, &["kind", "weights", "means", "covs", "hidden_log_constant"]);
            let w = cx.floats(t, p, "weights", true);
            let means = cx.float_rows(t, p, "means");
            let covs = cx.float_rows(t, p, "covs");
            let (w, means, covs) = (w?, means?, covs?);
            if means.len() != w.len() || covs.len() != w.len() {
                cx.issue(join(p, "means"), "weights, means and covs need the same length");
                return None;
            }
            let mut comps = Vec::new();
            for (k, (m, c)) in means.iter().zip(&covs).enumerate() {
                let path = format!("{p}.covs[{k}]");
                if !square(cx, path.clone(), c, m.len()) {
                    return None;
                }
                match ProposalParams::from_slices(m, c) {
                    Ok(c) => comps.push(c),
                    Err(e) => {
                        cx.issue(path, e.to_string());
                        return None;
                    }
                }
            }
            make_mixture_target(&w, &comps).map_err(|e| cx.issue(join(p, "weights"), e.to_string())).ok()
        }
        "banana" => {
            cx.allow(t, p, &["kind", "b", "sigma1_sq", "hidden_log_constant"]);
            let b = cx.float(t, p, "b", true);
            let s = cx.float(t, p, "sigma1_sq", true);
            let (b, s) = (b?, s?);
            if !(s > 0.0) {
                cx.issue(join(p, "sigma1_sq"), "must be positive");
                return None;
            }
            make_banana_target(b, s).map_err(|e| cx.issue(p, e.to_string())).ok()
        }
        "uniform" => {
            cx.allow(t, p, &["kind", "lower", "upper", "hidden_log_constant"]);
            let lo = cx.floats(t, p, "lower", true);
            let hi = cx.floats(t, p, "upper", true);
            make_uniform_target(lo?, hi?).map_err(|e| cx.issue(join(p, "upper"), e.to_string())).ok()
        }
        other => {
            cx.issue(join(p, "kind"), format!("unknown target kind `{other}` (gaussian, mixture, banana, uniform)"));
            None
        }
    }?;
    Some(match hidden {
        Some(c) => target.with_hidden_constant(c),
        None => target,
    })
}

fn parse_family(root: &Table, dim: Option<usize>, cx: &mut Cx) -> Option<FamilySpec> {
    let p = "family";
    let Some(t) = cx.table(root, "", p, false) else {
        return dim.map(FamilySpec::gaussian);
    };
    cx.allow(t, p, &["dim", "truncation"]);
    let declared = cx.positive(t, p, "dim", false);
    let dim = match (declared, dim) {
        (Some(a), Some(b)) if a != b => {
            cx.issue(join(p, "dim"), format!("target has dimension {b}"));
            return None;
        }
        (_, d) => d?,
    };
    let Some(tr) = cx.table(t, p, "truncation", false) else {
        return Some(FamilySpec::gaussian(dim));
    };
    let tp = "family.truncation";
    cx.allow(tr, tp, &["lower", "upper"]);
    let lo = cx.floats(tr, tp, "lower", true);
    let hi = cx.floats(tr, tp, "upper", true);
    let (lo, hi) = (lo?, hi?);
    if lo.len() != dim || hi.len() != dim {
        cx.issue(tp, format!("bounds must have {dim} entries"));
        return None;
    }
    match BoxBounds::new(lo, hi) {
        Ok(b) => Some(FamilySpec::truncated(b)),
        Err(e) => {
            cx.issue(tp, e.to_string());
            None
        }
    }
}

fn parse_theta1(t: &Table, dim: Option<usize>, cx: &mut Cx) -> Option<ProposalParams> {
    let p = "theta1";
    cx.allow(t, p, &["mean", "cov", "variance"]);
    let mean = cx.floats(t, p, "mean", true)?;
    if let Some(d) = dim {
        if mean.len() != d {
            cx.issue(join(p, "mean"), format!("expected {d} entries"));
            return None;
        }
    }
    let cov = cx.floats(t, p, "cov", false);
    let var = cx.float(t, p, "variance", false);
    let res = match (cov, var) {
        (Some(_), Some(_)) => {
            cx.issue(join(p, "variance"), "give either cov or variance, not both");
            return None;
        }
        (Some(c), None) => {
            if !square(cx, join(p, "cov"), &c, mean.len()) {
                return None;
            }
            ProposalParams::from_slices(&mean, &c)
        }
        (None, Some(v)) => ProposalParams::isotropic(&mean, v),
        (None, None) => {
            cx.issue(join(p, "cov"), "missing (or give variance)");
            return None;
        }
    };
    res.map_err(|e| cx.issue(join(p, "cov"), e.to_string())).ok()
}

fn parse_schedule(t: &Table, cx: &mut Cx) -> Option<Schedule> {
    let p = "schedule";
    let kind = cx.string(t, p, "kind", true)?;
    match kind {
        "linear" | "quadratic" => {
            cx.allow(t, p, &["kind", "N", "T"]);
            let n = cx.positive(t, p, "N", true);
            let big_t = cx.positive(t, p, "T", true);
            let (n, big_t) = (n?, big_t?);
            let s = if kind == "linear" {
                Schedule::linear(n, big_t)
            } else {
                Schedule::quadratic(n, big_t)
            };
            s.map_err(|e| cx.issue(p, e.to_string())).ok()
        }
        "explicit" => {
            cx.allow(t, p, &["kind", "sizes"]);
            let sizes = cx.floats(t, p, "sizes", true)?;
            if sizes.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                cx.issue(join(p, "sizes"), "sizes must be positive integers");
                return None;
            }
            Schedule::explicit(sizes.iter().map(|v| *v as usize).collect())
                .map_err(|e| cx.issue(join(p, "sizes"), e.to_string()))
                .ok()
        }
        "paper-schedule" => {
            cx.allow(t, p, &["kind"]);
            Some(Schedule::preset())
        }
        other => {
            cx.issue(
                join(p, "kind"),
                format!("unknown schedule `{other}` (linear, quadratic, explicit, paper-schedule)"),
            );
            None
        }
    }
}

fn parse_seeds(t: &Table, cx: &mut Cx) -> Option<SeedSpec> {
    let p = "seeds";
    cx.allow(t, p, &["base", "replicates", "list"]);
    if let Some(v) = t.get("list") {
        if t.contains_key("base") || t.contains_key("replicates") {
            cx.issue(join(p, "list"), "give either list or base/replicates");
            return None;
        }
        let Value::Array(a) = v else {
            cx.issue(join(p, "list"), "expected an array of seeds");
            return None;
        };
        if a.is_empty() {
            cx.issue(join(p, "list"), "needs at least one seed");
            return None;
        }
        let seeds: Option<Vec<u64>> = a
            .iter()
            .enumerate()
            .map(|(i, s)| cx.seed(s, &format!("seeds.list[{i}]")))
            .collect();
        return seeds.map(SeedSpec::List);
    }
    let base = t.get("base").map(|v| cx.seed(v, "seeds.base"));
    let replicates = cx.positive(t, p, "replicates", true);
    match base {
        None => {
            cx.issue(join(p, "base"), "missing");
            None
        }
        Some(b) => Some(SeedSpec::Derived {
            base: b?,
            replicates: replicates?,
        }),
    }
}

#[allow(clippy::type_complexity)]
fn parse_run(
    t: Option<&Table>,
    cx: &mut Cx,
) -> (Option<Vec<Algorithm>>, Option<Normalization>, Option<PathBuf>) {
    let p = "run";
    let Some(t) = t else {
        return (Some(Algorithm::all().to_vec()), Some(Normalization::default()), None);
    };
    cx.allow(t, p, &["algorithms", "normalization", "output"]);
    let algorithms = match t.get("algorithms") {
        None => Some(Algorithm::all().to_vec()),
        Some(Value::Array(a)) if !a.is_empty() => {
            let mut out = Vec::new();
            let mut ok = true;
            for (i, v) in a.iter().enumerate() {
                match v.as_str().and_then(Algorithm::from_label) {
                    Some(alg) if !out.contains(&alg) => out.push(alg),
                    Some(_) => {
                        cx.issue(format!("run.algorithms[{i}]"), "duplicate algorithm");
                        ok = false;
                    }
                    None => {
                        cx.issue(format!("run.algorithms[{i}]"), "expected one of \"a\", \"b\", \"c\"");
                        ok = false;
                    }
                }
            }
            out.sort_by_key(|a| a.label());
            ok.then_some(out)
        }
        Some(_) => {
            cx.issue("run.algorithms", "expected a non-empty array of labels");
            None
        }
    };
    let normalization = match cx.string(t, p, "normalization", false) {
        None => Some(Normalization::default()),
        Some("self-normalized") => Some(Normalization::SelfNormalized),
        Some("normalized") => Some(Normalization::Normalized),
        Some(other) => {
            cx.issue(
                "run.normalization",
                format!("unknown mode `{other}` (normalized, self-normalized)"),
            );
            None
        }
    };
    let output = cx.string(t, p, "output", false).map(PathBuf::from);
    (algorithms, normalization, output)
}

fn parse_grid(t: Option<&Table>, target: Option<&TargetModel>, cx: &mut Cx) -> Option<GridSpec> {
    let p = "grid";
    let (cells, bounds) = match t {
        None => (DEFAULT_GRID_CELLS, None),
        Some(t) => {
            cx.allow(t, p, &["points", "lower", "upper"]);
            let cells = cx.positive(t, p, "points", false).unwrap_or(DEFAULT_GRID_CELLS);
            let lo = cx.floats(t, p, "lower", false);
            let hi = cx.floats(t, p, "upper", false);
            let bounds = match (lo, hi) {
                (Some(l), Some(h)) => Some((l, h)),
                (None, None) => None,
                _ => {
                    cx.issue(join(p, "lower"), "give both lower and upper, or neither");
                    return None;
                }
            };
            (cells, bounds)
        }
    };
    let target = target?;
    if target.dim() > 2 {
        cx.issue("target", "distribution distances need dimension 1 or 2");
        return None;
    }
    let res = match bounds {
        Some((l, h)) => {
            if l.len() != target.dim() || h.len() != target.dim() {
                cx.issue(join(p, "lower"), format!("bounds must have {} entries", target.dim()));
                return None;
            }
            GridSpec::uniform(l, h, cells)
        }
        None => target.default_grid(cells),
    };
    res.map_err(|e| cx.issue(p, e.to_string())).ok()
}

fn parse_psi(root: &Table, dim: Option<usize>, cx: &mut Cx) -> Option<Vec<NamedIntegrand>> {
    let Some(v) = root.get("psi") else {
        return Some(Vec::new());
    };
    let Value::Array(items) = v else {
        cx.issue("psi", "expected [[psi]] tables");
        return None;
    };
    let mut out: Vec<NamedIntegrand> = Vec::new();
    let mut ok = true;
    for (i, item) in items.iter().enumerate() {
        let p = format!("psi[{i}]");
        let Value::Table(t) = item else {
            cx.issue(p, "expected a table");
            ok = false;
            continue;
        };
        match parse_one_psi(t, &p, dim, cx) {
            Some(n) if out.iter().any(|o| o.name == n.name) => {
                cx.issue(join(&p, "name"), format!("duplicate name `{}`", n.name));
                ok = false;
            }
            Some(n) => out.push(n),
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn parse_one_psi(t: &Table, p: &str, dim: Option<usize>, cx: &mut Cx) -> Option<NamedIntegrand> {
    let name = cx.string(t, p, "name", true).map(str::to_string);
    if let Some(n) = &name {
        if n.is_empty() || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            cx.issue(join(p, "name"), "names use letters, digits and underscores");
        }
    }
    let kind = cx.string(t, p, "kind", true)?;
    let integrand = match kind {
        "constant" => {
            cx.allow(t, p, &["name", "kind", "value"]);
            Integrand::Constant(cx.float(t, p, "value", true)?)
        }
        "monomial" => {
            cx.allow(t, p, &["name", "kind", "powers"]);
            let pw = cx.floats(t, p, "powers", true)?;
            if pw.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
                cx.issue(join(p, "powers"), "powers must be non-negative integers");
                return None;
            }
            if dim.is_some_and(|d| d != pw.len()) {
                cx.issue(join(p, "powers"), "one power per coordinate");
                return None;
            }
            Integrand::Monomial(pw.iter().map(|v| *v as u32).collect())
        }
        "indicator" => {
            cx.allow(t, p, &["name", "kind", "axis", "threshold", "above"]);
            let axis = cx.int(t, p, "axis", true);
            let threshold = cx.float(t, p, "threshold", true);
            let above = match t.get("above") {
                None => true,
                Some(Value::Boolean(b)) => *b,
                Some(_) => {
                    cx.issue(join(p, "above"), "expected true or false");
                    return None;
                }
            };
            let axis = axis?;
            if axis < 0 || dim.is_some_and(|d| axis as usize >= d) {
                cx.issue(join(p, "axis"), "axis out of range");
                return None;
            }
            Integrand::Indicator {
                axis: axis as usize,
                threshold: threshold?,
                above,
            }
        }
        other => {
            cx.issue(
                join(p, "kind"),
                format!("unknown integrand `{other}` (constant, monomial, indicator)"),
            );
            return None;
        }
    };
    Some(NamedIntegrand::new(name?, integrand))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[target]
kind = "gaussian"
mean = [1.0, -1.0]
cov = [1.0, 0.0, 0.0, 1.0]

[theta1]
mean = [0.0, 0.0]
variance = 5.0

[schedule]
kind = "quadratic"
N = 50
T = 10

[seeds]
base = 1
replicates = 3
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.grid.cells(), &[100, 100]);
        assert_eq!(c.normalization, Normalization::SelfNormalized);
        assert_eq!(c.algorithms, Algorithm::all().to_vec());
        assert_eq!(c.seeds.seeds().len(), 3);
        assert!(c.psi.is_empty());
    }

    #[test]
    fn negative_n_names_the_field() {
        let text = MINIMAL.replace("N = 50", "N = -5");
        let err = parse_config_str(&text).unwrap_err();
        assert_eq!(err.paths(), vec!["schedule.N"]);
    }

    #[test]
    fn schedule_preset() {
        let text = MINIMAL.replace("kind = \"quadratic\"\nN = 50\nT = 10", "kind = \"paper-schedule\"");
        let c = parse_config_str(&text).unwrap();
        assert_eq!(c.schedule.iterations(), 45);
        assert!(c.schedule.sizes().iter().enumerate().all(|(t, n)| *n == 100 * (t + 1)));
    }

    #[test]
    fn every_problem_is_reported() {
        let text = MINIMAL
            .replace("N = 50", "N = 0")
            .replace("variance = 5.0", "variance = 5.0\ncolour = 1")
            .replace("replicates = 3", "replicates = 3\n[extra]\nx = 1");
        let err = parse_config_str(&text).unwrap_err();
        let mut paths = err.paths();
        paths.sort();
        assert_eq!(paths, vec!["extra", "schedule.N", "theta1.colour"]);
    }

    #[test]
    fn psi_and_run_sections() {
        let text = format!(
            "{MINIMAL}\n[run]\nalgorithms = [\"c\", \"a\"]\nnormalization = \"normalized\"\n\
             [[psi]]\nname = \"x1\"\nkind = \"monomial\"\npowers = [1, 0]\n\
             [[psi]]\nname = \"tail\"\nkind = \"indicator\"\naxis = 0\nthreshold = 1.0\n"
        );
        let c = parse_config_str(&text).unwrap();
        assert_eq!(c.algorithms, vec![Algorithm::NaiveRecycling, Algorithm::ModifiedAmis]);
        assert_eq!(c.normalization, Normalization::Normalized);
        assert_eq!(c.psi.len(), 2);
    }

    #[test]
    fn bad_labels_and_kinds() {
        let text = format!("{MINIMAL}\n[run]\nalgorithms = [\"d\"]\n[[psi]]\nname = \"q\"\nkind = \"cubic\"\n");
        let err = parse_config_str(&text).unwrap_err();
        let mut paths = err.paths();
        paths.sort();
        assert_eq!(paths, vec!["psi[0].kind", "run.algorithms[0]"]);
    }

    #[test]
    fn seed_override_replaces_list() {
        let text = MINIMAL.replace("base = 1\nreplicates = 3", "list = [4, 5]");
        let mut c = parse_config_str(&text).unwrap();
        assert_eq!(c.seeds.seeds(), vec![4, 5]);
        c.override_seed(9);
        assert_eq!(c.seeds.seeds().len(), 2);
        assert_ne!(c.seeds.seeds(), vec![4, 5]);
    }

    #[test]
    fn truncated_family_and_mixture_target() {
        let text = r#"
[target]
kind = "mixture"
weights = [0.5, 0.5]
means = [[-2.0, 0.0], [2.0, 0.0]]
covs = [[1.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 1.0]]
[family.truncation]
lower = [-10.0, -10.0]
upper = [10.0, 10.0]
[theta1]
mean = [0.0, 0.0]
cov = [4.0, 0.0, 0.0, 4.0]
[schedule]
kind = "explicit"
sizes = [10, 20]
[seeds]
list = [1]
[grid]
points = 20
"#;
        let c = parse_config_str(text).unwrap();
        assert!(c.family.truncation().is_some());
        assert_eq!(c.grid.cells(), &[20, 20]);
    }
}
