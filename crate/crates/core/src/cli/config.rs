//! Experiment configuration: sectioned TOML, strictly parsed.
//!
//! Every problem found is reported, each with the dotted key path it refers
//! to. Unknown keys are errors and come with a spelling suggestion when a
//! known key is close.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

use crate::geometry::{build_table, TableGeometry, TableSpec};
use crate::induced::ReducedSpaceRule;
use crate::observables::Observable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    Parse,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub kind: IssueKind,
    /// Dotted key path, empty for the document itself.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            IssueKind::Parse => "parse error",
            IssueKind::Validation => "invalid value",
        };
        if self.path.is_empty() {
            write!(f, "{kind}: {}", self.message)
        } else {
            write!(f, "{kind} at `{}`: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl ConfigError {
    pub fn single(kind: IssueKind, path: &str, message: impl Into<String>) -> Self {
        Self {
            issues: vec![ConfigIssue {
                kind,
                path: path.to_string(),
                message: message.into(),
            }],
        }
    }

    pub fn at(&self, path: &str) -> Option<&ConfigIssue> {
        self.issues.iter().find(|i| i.path == path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// The table's own rule.
    Auto,
    Obstacle,
    ArcFirst,
    CuspExterior,
    FlatExterior,
    Everything,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleConfig {
    pub kind: RuleKind,
    /// Cusp neighbourhood size as a fraction of each arc.
    pub fraction: Option<f64>,
    /// Flat-point neighbourhood half-width.
    pub radius: Option<f64>,
}

impl RuleConfig {
    pub fn resolve(&self, table: &TableGeometry) -> ReducedSpaceRule {
        let auto = ReducedSpaceRule::for_table(table);
        match self.kind {
            RuleKind::Auto => match auto {
                ReducedSpaceRule::CuspExterior { fraction } => ReducedSpaceRule::CuspExterior {
                    fraction: self.fraction.unwrap_or(fraction),
                },
                ReducedSpaceRule::FlatExterior { radius } => ReducedSpaceRule::FlatExterior {
                    radius: self.radius.unwrap_or(radius),
                },
                other => other,
            },
            RuleKind::Obstacle => ReducedSpaceRule::ObstacleCollisions,
            RuleKind::ArcFirst => ReducedSpaceRule::ArcFirstCollisions,
            RuleKind::CuspExterior => ReducedSpaceRule::CuspExterior {
                fraction: self.fraction.unwrap_or(crate::induced::DEFAULT_CUSP_FRACTION),
            },
            RuleKind::FlatExterior => ReducedSpaceRule::FlatExterior {
                radius: match (self.radius, auto) {
                    (Some(r), _) => r,
                    (None, ReducedSpaceRule::FlatExterior { radius }) => radius,
                    (None, _) => 0.0,
                },
            },
            RuleKind::Everything => ReducedSpaceRule::Everything,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrMethod {
    Ensemble,
    Orbit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Number of independent samples (`K`).
    pub k: u64,
    pub n_max: usize,
    /// Largest excursion followed before giving up.
    pub cap: u64,
    pub burn_in: usize,
    pub method: CorrMethod,
    /// Induced steps of the single orbit when `method = "orbit"`.
    pub orbit_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableConfig {
    #[serde(serialize_with = "display")]
    pub f: Observable,
    #[serde(serialize_with = "display")]
    pub g: Observable,
}

fn display<S: serde::Serializer>(o: &Observable, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(o)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitConfig {
    pub steps: usize,
    /// `(component, r, φ)`; sampled from `μ_𝓜` when absent.
    pub start: Option<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellsConfig {
    pub clouds: bool,
    pub per_cell: usize,
    pub max_n: u64,
    /// Smallest tail count allowed at the top of the automatic fit window.
    pub min_tail: u64,
    /// Smallest return time in the diameter fits.
    pub diameter_n_min: u64,
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    pub deltas: Vec<f64>,
    pub curves: usize,
    pub lambda_samples: usize,
    /// Backward iterates in the unstable-radius proxy.
    pub n_back: usize,
    pub r: Vec<f64>,
    pub z_samples: usize,
    pub z_iterates: usize,
    /// Also run the cell-exponent check (uses `sampling.k`).
    pub h6: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    Exponential,
    PowerTail,
    PowerLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub kind: FitKind,
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub table: TableSpec,
    pub reduced: RuleConfig,
    pub observables: ObservableConfig,
    pub sampling: SamplingConfig,
    pub orbit: OrbitConfig,
    pub cells: CellsConfig,
    pub diagnostics: DiagnosticsConfig,
    pub fit: FitConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("empty config is valid")
    }
}

struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

struct Parser {
    issues: Vec<ConfigIssue>,
}

impl Parser {
    fn parse_issue(&mut self, path: String, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            kind: IssueKind::Parse,
            path,
            message: message.into(),
        });
    }

    fn invalid(&mut self, path: String, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            kind: IssueKind::Validation,
            path,
            message: message.into(),
        });
    }

    fn section<'a>(&mut self, parent: &Section<'a>, key: &'static str) -> Section<'a> {
        let path = join(&parent.path, key);
        let table = match parent.table.and_then(|t| t.get(key)) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(v) => {
                self.parse_issue(path.clone(), format!("expected a section, found {}", type_name(v)));
                None
            }
        };
        Section {
            path,
            table,
            used: BTreeSet::new(),
        }
    }

    fn raw<'a>(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<&'a Value> {
        s.used.insert(key);
        s.table.and_then(|t| t.get(key))
    }

    fn float(&mut self, s: &mut Section, key: &'static str) -> Option<f64> {
        let path = join(&s.path, key);
        match self.raw(s, key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            v => {
                self.parse_issue(path, format!("expected a number, found {}", type_name(v)));
                None
            }
        }
    }

    fn int(&mut self, s: &mut Section, key: &'static str) -> Option<u64> {
        let path = join(&s.path, key);
        match self.raw(s, key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.invalid(path, format!("must be non-negative (got {i})"));
                None
            }
            v => {
                self.parse_issue(path, format!("expected an integer, found {}", type_name(v)));
                None
            }
        }
    }

    fn boolean(&mut self, s: &mut Section, key: &'static str) -> Option<bool> {
        let path = join(&s.path, key);
        match self.raw(s, key)? {
            Value::Boolean(b) => Some(*b),
            v => {
                self.parse_issue(path, format!("expected a boolean, found {}", type_name(v)));
                None
            }
        }
    }

    fn string(&mut self, s: &mut Section, key: &'static str) -> Option<String> {
        let path = join(&s.path, key);
        match self.raw(s, key)? {
            Value::String(x) => Some(x.clone()),
            v => {
                self.parse_issue(path, format!("expected a string, found {}", type_name(v)));
                None
            }
        }
    }

    fn floats(&mut self, s: &mut Section, key: &'static str) -> Option<Vec<f64>> {
        let path = join(&s.path, key);
        match self.raw(s, key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(x) => out.push(*x as f64),
                        v => {
                            self.parse_issue(
                                format!("{path}[{i}]"),
                                format!("expected a number, found {}", type_name(v)),
                            );
                            return None;
                        }
                    }
                }
                Some(out)
            }
            v => {
                self.parse_issue(path, format!("expected an array, found {}", type_name(v)));
                None
            }
        }
    }

    fn positive(&mut self, s: &mut Section, key: &'static str, default: f64) -> f64 {
        let path = join(&s.path, key);
        match self.float(s, key) {
            Some(x) if x > 0.0 && x.is_finite() => x,
            Some(x) => {
                self.invalid(path, format!("must be positive (got {x})"));
                default
            }
            None => default,
        }
    }

    fn window(&mut self, s: &mut Section, key: &'static str) -> Option<(f64, f64)> {
        let path = join(&s.path, key);
        let w = self.floats(s, key)?;
        match w.as_slice() {
            [lo, hi] if lo <= hi => Some((*lo, *hi)),
            _ => {
                self.invalid(path, "expected [low, high] with low <= high");
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, s: &mut Section, key: &'static str, options: &[(&str, T)], default: T) -> T {
        let path = join(&s.path, key);
        let Some(v) = self.string(s, key) else {
            return default;
        };
        match options.iter().find(|(name, _)| *name == v) {
            Some((_, t)) => *t,
            None => {
                let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                let hint = suggest(&v, &names).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
                self.invalid(path, format!("unknown value `{v}` (expected one of {}){hint}", names.join(", ")));
                default
            }
        }
    }

    /// Unknown keys in a section are reported with the closest known key.
    fn finish(&mut self, s: Section) {
        let Some(t) = s.table else { return };
        for key in t.keys() {
            if !s.used.contains(key.as_str()) {
                let known: Vec<&str> = s.used.iter().copied().collect();
                let hint = suggest(key, &known).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
                self.parse_issue(join(&s.path, key), format!("unknown key `{key}`{hint}"));
            }
        }
    }
}

/// Closest candidate by edit distance, if it is close enough to be a typo.
pub fn suggest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::damerau_levenshtein(word, c), *c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

const SECTIONS: [&str; 9] = [
    "table",
    "reduced",
    "observables",
    "sampling",
    "orbit",
    "cells",
    "diagnostics",
    "fit",
    "output",
];

fn parse_table(p: &mut Parser, root: &Section) -> TableSpec {
    let mut s = p.section(root, "table");
    let family = p.string(&mut s, "family").unwrap_or_else(|| "sinai".into());
    let spec = match family.as_str() {
        "sinai" | "semi-dispersing-square" => {
            let side = p.positive(&mut s, "side", 1.0);
            let rho = p.positive(&mut s, "rho", 0.25);
            if rho >= side / 2.0 {
                p.invalid(join(&s.path, "rho"), format!("must be below side/2 = {}", side / 2.0));
            }
            TableSpec::sinai(side, rho)
        }
        "stadium" => {
            let radius = p.positive(&mut s, "radius", 1.0);
            let length = p.positive(&mut s, "length", 2.0);
            TableSpec::stadium(radius, length)
        }
        "cusp" => {
            let path = join(&s.path, "radii");
            let radii = match p.floats(&mut s, "radii") {
                None => [1.0; 3],
                Some(v) if v.len() == 3 && v.iter().all(|r| *r > 0.0 && r.is_finite()) => [v[0], v[1], v[2]],
                Some(_) => {
                    p.invalid(path, "expected three positive radii");
                    [1.0; 3]
                }
            };
            TableSpec::cusp(radii)
        }
        "flat-point" => {
            let path = join(&s.path, "beta");
            let beta = match p.float(&mut s, "beta") {
                Some(b) if b > 2.0 && b.is_finite() => b,
                Some(b) => {
                    p.invalid(path, format!("flatness exponent must exceed 2 (got {b})"));
                    4.0
                }
                None => 4.0,
            };
            match TableSpec::flat_point(beta) {
                TableSpec::FlatPoint {
                    half_height,
                    flat_half_width,
                    blend_radius,
                    half_width,
                    side_radius,
                    ..
                } => TableSpec::FlatPoint {
                    beta,
                    half_height: p.positive(&mut s, "half_height", half_height),
                    flat_half_width: p.positive(&mut s, "flat_half_width", flat_half_width),
                    blend_radius: p.positive(&mut s, "blend_radius", blend_radius),
                    half_width: p.positive(&mut s, "half_width", half_width),
                    side_radius: p.positive(&mut s, "side_radius", side_radius),
                },
                other => other,
            }
        }
        other => {
            let names = ["sinai", "semi-dispersing-square", "stadium", "cusp", "flat-point"];
            let hint = suggest(other, &names).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
            p.invalid(join(&s.path, "family"), format!("unknown family `{other}`{hint}"));
            TableSpec::sinai(1.0, 0.25)
        }
    };
    p.finish(s);
    spec
}

fn parse_observable(p: &mut Parser, s: &mut Section, key: &'static str, default: Observable) -> Observable {
    let path = join(&s.path, key);
    match p.string(s, key) {
        None => default,
        Some(text) => match text.parse::<Observable>() {
            Ok(o) => o,
            Err(_) => {
                p.invalid(
                    path,
                    format!("unknown observable `{text}` (expected R, R_trunc(cap), free_path, cos_phi, cos_r, const(c) or induced_sum(fhat=...))"),
                );
                default
            }
        },
    }
}

/// Parse and validate an experiment config. All problems are collected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let doc: Table = toml::from_str(text).map_err(|e| {
        ConfigError::single(IssueKind::Parse, "", e.message().to_string())
    })?;
    let mut p = Parser { issues: Vec::new() };
    let mut root = Section {
        path: String::new(),
        table: Some(&doc),
        used: BTreeSet::new(),
    };
    root.used.extend(SECTIONS);

    let table = parse_table(&mut p, &root);

    let mut s = p.section(&root, "reduced");
    let kind = p.choice(
        &mut s,
        "rule",
        &[
            ("auto", RuleKind::Auto),
            ("obstacle", RuleKind::Obstacle),
            ("arc-first", RuleKind::ArcFirst),
            ("cusp-exterior", RuleKind::CuspExterior),
            ("flat-exterior", RuleKind::FlatExterior),
            ("everything", RuleKind::Everything),
        ],
        RuleKind::Auto,
    );
    let fpath = join(&s.path, "fraction");
    let fraction = p.float(&mut s, "fraction");
    if fraction.is_some_and(|f| !(f > 0.0 && f < 0.5)) {
        p.invalid(fpath, "must lie in (0, 0.5)");
    }
    let rpath = join(&s.path, "radius");
    let radius = p.float(&mut s, "radius");
    if radius.is_some_and(|r| !(r > 0.0)) {
        p.invalid(rpath, "must be positive");
    }
    p.finish(s);
    let reduced = RuleConfig { kind, fraction, radius };

    let mut s = p.section(&root, "observables");
    let f = parse_observable(&mut p, &mut s, "f", Observable::ReturnTime);
    let g = parse_observable(&mut p, &mut s, "g", f);
    p.finish(s);
    let observables = ObservableConfig { f, g };

    let mut s = p.section(&root, "sampling");
    let seed = p.int(&mut s, "seed").unwrap_or(1);
    let kpath = join(&s.path, "k");
    let k = p.int(&mut s, "k").unwrap_or(100_000);
    if k == 0 {
        p.invalid(kpath, "sample count must be at least 1");
    }
    let n_max = p.int(&mut s, "n_max").unwrap_or(30) as usize;
    let cpath = join(&s.path, "cap");
    let cap = p.int(&mut s, "cap").unwrap_or(10_000);
    if cap == 0 {
        p.invalid(cpath, "must be at least 1");
    }
    let burn_in = p.int(&mut s, "burn_in").unwrap_or(100) as usize;
    let method = p.choice(
        &mut s,
        "method",
        &[("ensemble", CorrMethod::Ensemble), ("orbit", CorrMethod::Orbit)],
        CorrMethod::Ensemble,
    );
    let opath = join(&s.path, "orbit_length");
    let orbit_length = p.int(&mut s, "orbit_length").unwrap_or(1_000_000) as usize;
    if method == CorrMethod::Orbit && orbit_length <= n_max {
        p.invalid(opath, "must exceed n_max");
    }
    p.finish(s);
    let sampling = SamplingConfig {
        seed,
        k,
        n_max,
        cap,
        burn_in,
        method,
        orbit_length,
    };

    let mut s = p.section(&root, "orbit");
    let steps = p.int(&mut s, "steps").unwrap_or(1000) as usize;
    let spath = join(&s.path, "start");
    let start = match p.floats(&mut s, "start") {
        None => None,
        Some(v) if v.len() == 3 && v[0] >= 0.0 && v[0].fract() == 0.0 => Some((v[0] as usize, v[1], v[2])),
        Some(_) => {
            p.invalid(spath, "expected [component, r, phi]");
            None
        }
    };
    p.finish(s);
    let orbit = OrbitConfig { steps, start };

    let mut s = p.section(&root, "cells");
    let cells = CellsConfig {
        clouds: p.boolean(&mut s, "clouds").unwrap_or(true),
        per_cell: p.int(&mut s, "per_cell").unwrap_or(4000) as usize,
        max_n: p.int(&mut s, "max_n").unwrap_or(400),
        min_tail: p.int(&mut s, "min_tail").unwrap_or(25),
        diameter_n_min: p.int(&mut s, "diameter_n_min").unwrap_or(4),
        window: p.window(&mut s, "window"),
    };
    p.finish(s);

    let mut s = p.section(&root, "diagnostics");
    let dpath = join(&s.path, "deltas");
    let deltas = p.floats(&mut s, "deltas").unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        p.invalid(dpath, "curve lengths must be positive");
    }
    let curves = p.int(&mut s, "curves").unwrap_or(1000) as usize;
    let lambda_samples = p.int(&mut s, "lambda_samples").unwrap_or(10_000) as usize;
    let n_back = p.int(&mut s, "n_back").unwrap_or(5) as usize;
    let rpath = join(&s.path, "r");
    let r = p.floats(&mut s, "r").unwrap_or_else(|| vec![0.5, 1.0]);
    if r.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
        p.invalid(rpath, "exponents must lie in (0, 1]");
    }
    let z_samples = p.int(&mut s, "z_samples").unwrap_or(2000) as usize;
    let z_iterates = p.int(&mut s, "z_iterates").unwrap_or(8) as usize;
    let h6 = p.boolean(&mut s, "h6").unwrap_or(false);
    for (key, v) in [("curves", curves), ("lambda_samples", lambda_samples), ("z_samples", z_samples)] {
        if v == 0 {
            p.invalid(join(&s.path, key), "must be at least 1");
        }
    }
    p.finish(s);
    let diagnostics = DiagnosticsConfig {
        deltas,
        curves,
        lambda_samples,
        n_back,
        r,
        z_samples,
        z_iterates,
        h6,
    };

    let mut s = p.section(&root, "fit");
    let input = p.string(&mut s, "input").map(PathBuf::from);
    let kind = p.choice(
        &mut s,
        "kind",
        &[
            ("exponential", FitKind::Exponential),
            ("power-tail", FitKind::PowerTail),
            ("power-level", FitKind::PowerLevel),
        ],
        FitKind::Exponential,
    );
    let window = p.window(&mut s, "window");
    p.finish(s);
    let fit = FitConfig { input, kind, window };

    let mut s = p.section(&root, "output");
    let dir = p.string(&mut s, "dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    let format = p.choice(&mut s, "format", &[("csv", Format::Csv), ("json", Format::Json)], Format::Csv);
    p.finish(s);
    let output = OutputConfig { dir, format };

    // unknown top-level sections
    for key in doc.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            let hint = suggest(key, &SECTIONS).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
            p.parse_issue(key.clone(), format!("unknown key `{key}`{hint}"));
        }
    }

    if p.issues.is_empty() {
        if let Err(e) = build_table(table.clone()) {
            p.invalid("table".into(), e.to_string());
        }
    }
    if !p.issues.is_empty() {
        return Err(ConfigError { issues: p.issues });
    }
    Ok(ExperimentConfig {
        table,
        reduced,
        observables,
        sampling,
        orbit,
        cells,
        diagnostics,
        fit,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sinai_config_fills_defaults() {
        let c = parse_config("[table]\nfamily = \"sinai\"\nrho = 0.25\n[sampling]\nseed = 7\nk = 1000\n").unwrap();
        assert_eq!(c.table, TableSpec::sinai(1.0, 0.25));
        assert_eq!(c.sampling.seed, 7);
        assert_eq!(c.sampling.k, 1000);
        assert_eq!(c.sampling.cap, 10_000);
        assert_eq!(c.observables.f, Observable::ReturnTime);
        assert_eq!(c.output.format, Format::Csv);
    }

    #[test]
    fn negative_rho_is_a_validation_error_at_its_path() {
        let e = parse_config("[table]\nfamily = \"sinai\"\nrho = -1\n").unwrap_err();
        let issue = e.at("table.rho").unwrap();
        assert_eq!(issue.kind, IssueKind::Validation);
    }

    #[test]
    fn misspelled_section_suggests_the_right_one() {
        let e = parse_config("[tabel]\nfamily = \"sinai\"\n").unwrap_err();
        let issue = e.at("tabel").unwrap();
        assert_eq!(issue.kind, IssueKind::Parse);
        assert!(issue.message.contains("did you mean `table`"), "{}", issue.message);
    }

    #[test]
    fn every_problem_is_reported() {
        let e = parse_config("[table]\nrho = -1\nsdie = 2\n[sampling]\nk = 0\ncap = \"x\"\n").unwrap_err();
        let paths: Vec<&str> = e.issues.iter().map(|i| i.path.as_str()).collect();
        for p in ["table.rho", "table.sdie", "sampling.k", "sampling.cap"] {
            assert!(paths.contains(&p), "{paths:?}");
        }
        assert!(e.at("table.sdie").unwrap().message.contains("`side`"));
    }

    #[test]
    fn geometry_failures_surface_at_table() {
        let e = parse_config("[table]\nfamily = \"sinai\"\nside = 1.0\nrho = 0.6\n").unwrap_err();
        assert!(e.at("table.rho").is_some());
        let e = parse_config("[table]\nfamily = \"flat-point\"\nbeta = 1.5\n").unwrap_err();
        assert!(e.at("table.beta").is_some());
    }

    #[test]
    fn observables_and_families_parse() {
        let c = parse_config(
            "[table]\nfamily = \"stadium\"\n[observables]\nf = \"R_trunc(100)\"\n[reduced]\nrule = \"auto\"\n",
        )
        .unwrap();
        assert_eq!(c.observables.f, Observable::TruncatedReturnTime { cap: 100 });
        assert_eq!(c.observables.g, c.observables.f);
        let e = parse_config("[observables]\nf = \"Rtrunc\"\n").unwrap_err();
        assert!(e.at("observables.f").is_some());
        let c = parse_config("[table]\nfamily = \"cusp\"\nradii = [1, 1, 1]\n").unwrap();
        assert_eq!(c.table, TableSpec::cusp([1.0; 3]));
        let e = parse_config("[table]\nfamily = \"stadum\"\n").unwrap_err();
        assert!(e.at("table.family").unwrap().message.contains("`stadium`"));
    }

    #[test]
    fn syntax_errors_are_parse_errors() {
        let e = parse_config("[table\n").unwrap_err();
        assert_eq!(e.issues[0].kind, IssueKind::Parse);
    }
}
