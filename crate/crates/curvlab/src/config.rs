//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! [chart]
//! kind = sphere_polar
//! n = 5
//! conformal_factor = "0.25*cos(th1)"
//!
//! [tasks]
//! run = decomposition, kw_sigma2
//! kw_sigma2.tol = 1e-6
//! ```
//!
//! Sections: `[chart]`, `[field]`, `[conformal]`, `[tasks]`, `[quadrature]`,
//! `[output]`. Values are `key = value`; expressions are double-quoted.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use curvlab_core::conformal::{builtin_fields, FdSettings, VectorField};
use curvlab_core::curvature::{coord_names, Chart, ChartKind, CosineTerm};
use curvlab_core::expr::{parse, Expr};
use curvlab_core::quadrature::{QuadratureSpec, Rule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::catalog::{self, TaskKind};

/// Smallest number of sample points accepted for pointwise tasks.
pub const MIN_POINTS: usize = 8;

const SECTIONS: [&str; 6] = ["chart", "field", "conformal", "tasks", "quadrature", "output"];

/// A configuration problem, located by 1-based line number (0 when the
/// problem is not tied to a line).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub quoted: bool,
    pub line: usize,
}

/// Sections and entries exactly as written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (idx, full) in text.lines().enumerate() {
            let line = idx + 1;
            let body = strip_comment(full).trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return err(line, format!("malformed section header `{body}`"));
                };
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return err(line, format!("unknown section [{name}]; expected one of {SECTIONS:?}"));
                }
                if raw.sections.contains_key(name) {
                    return err(line, format!("section [{name}] appears twice"));
                }
                raw.sections.insert(name.to_string(), (line, BTreeMap::new()));
                current = Some(name.to_string());
                continue;
            }
            let Some(section) = &current else {
                return err(line, "entry outside of any section");
            };
            let Some((key, value)) = body.split_once('=') else {
                return err(line, format!("expected `key = value`, found `{body}`"));
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return err(line, format!("invalid key `{key}`"));
            }
            let value = value.trim();
            let (value, quoted) = if let Some(inner) = value.strip_prefix('"') {
                match inner.strip_suffix('"') {
                    Some(v) if !v.contains('"') => (v.to_string(), true),
                    _ => return err(line, "unterminated or nested quotes"),
                }
            } else {
                (value.to_string(), false)
            };
            let entries = &mut raw.sections.get_mut(section).unwrap().1;
            if entries.contains_key(key) {
                return err(line, format!("duplicate key `{key}` in [{section}]"));
            }
            entries.insert(key.to_string(), Entry { value, quoted, line });
        }
        Ok(raw)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(name).map(|s| &s.1)
    }

    fn section_line(&self, name: &str) -> usize {
        self.sections.get(name).map_or(0, |s| s.0)
    }

    /// Section → key → value, for echoing into reports.
    pub fn echo(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        self.sections
            .iter()
            .map(|(s, (_, e))| (s.clone(), e.iter().map(|(k, v)| (k.clone(), v.value.clone())).collect()))
            .collect()
    }
}

/// Drops a `#` comment that is not inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// A requested task with its per-task overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRequest {
    pub name: String,
    pub tol: Option<f64>,
    pub order: Option<usize>,
}

/// A fully interpreted configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub chart: Chart,
    pub field: Option<VectorField>,
    pub eta: Option<Expr>,
    pub fd: FdSettings,
    pub tasks: Vec<TaskRequest>,
    pub points: usize,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
    pub output: Option<PathBuf>,
}

/// Typed access to one section, tracking which keys were consumed.
struct Section<'a> {
    name: &'static str,
    header: usize,
    entries: Option<&'a BTreeMap<String, Entry>>,
    used: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(raw: &'a RawConfig, name: &'static str) -> Self {
        Section {
            name,
            header: raw.section_line(name),
            entries: raw.section(name),
            used: Vec::new(),
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Entry> {
        let e = self.entries?.get(key)?;
        self.used.push(key.to_string());
        Some(e)
    }

    fn require(&mut self, key: &str) -> Result<&'a Entry, ConfigError> {
        let (header, name) = (self.header, self.name);
        self.get(key)
            .ok_or_else(|| ConfigError {
                line: header,
                message: format!("[{name}] needs `{key}`"),
            })
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|e| e.value.parse().or_else(|_| err(e.line, format!("`{key}` must be a non-negative integer"))))
            .transpose()
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(number).transpose()
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get(key)
            .map(|e| match e.value.as_str() {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                other => err(e.line, format!("`{key}` must be true or false, found `{other}`")),
            })
            .transpose()
    }

    /// Entries nobody asked for.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some(entries) = self.entries {
            for (k, e) in entries {
                if !self.used.contains(k) {
                    return err(e.line, format!("unknown key `{k}` in [{}]", self.name));
                }
            }
        }
        Ok(())
    }
}

/// A numeric value, possibly a constant expression such as `2*pi`.
fn number(e: &Entry) -> Result<f64, ConfigError> {
    parse(&e.value, &[])
        .and_then(|x| x.eval(&[]))
        .or_else(|x| err(e.line, format!("invalid number `{}`: {x}", e.value)))
}

fn expression(e: &Entry, names: &[String]) -> Result<Expr, ConfigError> {
    parse(&e.value, names).or_else(|x| err(e.line, format!("invalid expression `{}`: {x}", e.value)))
}

fn list(e: &Entry, sep: char) -> Vec<String> {
    e.value.split(sep).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let raw = RawConfig::parse(text)?;
        let chart = chart(&raw)?;
        let names = chart.names().to_vec();

        let mut field_sec = Section::new(&raw, "field");
        let field = if let Some(e) = field_sec.get("builtin") {
            let all = builtin_fields(chart.kind(), chart.dim()).or_else(|x| err(e.line, x.to_string()))?;
            let labels: Vec<String> = all.iter().map(|f| f.label().to_string()).collect();
            let found = all.into_iter().find(|f| f.label() == e.value);
            Some(found.ok_or_else(|| ConfigError {
                line: e.line,
                message: format!("no builtin field `{}`; available: {labels:?}", e.value),
            })?)
        } else if let Some(e) = field_sec.get("components") {
            let comps = list(e, ';');
            if comps.len() != chart.dim() {
                return err(e.line, format!("{} components for a {}-dimensional chart", comps.len(), chart.dim()));
            }
            let texts: Vec<&str> = comps.iter().map(String::as_str).collect();
            let label = field_sec.get("label").map_or("custom field".to_string(), |l| l.value.clone());
            Some(VectorField::parse(&texts, &names, label).or_else(|x| err(e.line, x.to_string()))?)
        } else {
            None
        };
        field_sec.finish()?;

        let mut conf = Section::new(&raw, "conformal");
        let eta = conf.get("eta").map(|e| expression(e, &names)).transpose()?;
        let mut fd = FdSettings::default();
        if let Some(h) = conf.number("h")? {
            if h.is_nan() || h <= 0.0 {
                return err(conf.get("h").unwrap().line, "`h` must be positive");
            }
            fd.h = h;
        }
        if let Some(e) = conf.get("t_values") {
            fd.t_values = list(e, ',')
                .iter()
                .map(|t| t.parse::<f64>().or_else(|_| err(e.line, format!("invalid t value `{t}`"))))
                .collect::<Result<_, _>>()?;
        }
        conf.finish()?;

        let (tasks, points, seed) = tasks(&raw)?;
        let quadrature = quadrature(&raw, &chart)?;

        let mut out = Section::new(&raw, "output");
        let output = out.get("path").map(|e| PathBuf::from(&e.value));
        out.finish()?;

        Ok(Config {
            raw,
            chart,
            field,
            eta,
            fd,
            tasks,
            points,
            seed,
            quadrature,
            output,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Config, crate::Error> {
        let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Config::parse(&text)?)
    }
}

/// `g<i><j>` metric entries (1-based, `i ≤ j`), defaulting to `δ_ij`.
fn metric_entries(sec: &mut Section, n: usize, names: &[String]) -> Result<Option<Vec<Expr>>, ConfigError> {
    if n > 9 {
        return Ok(None);
    }
    let mut any = false;
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for i in 1..=n {
        for j in i..=n {
            upper.push(match sec.get(&format!("g{i}{j}")) {
                Some(e) => {
                    any = true;
                    expression(e, names)?
                }
                None => Expr::constant(if i == j { 1.0 } else { 0.0 }),
            });
        }
    }
    Ok(any.then_some(upper))
}

/// Identity plus one random cosine per upper-triangle entry.
pub fn random_perturbation(n: usize, seed: u64, amplitude: f64) -> Vec<CosineTerm> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for row in 0..n {
        for col in row..n {
            let wave: Vec<i32> = loop {
                let w: Vec<i32> = (0..n).map(|_| r.gen_range(-1..=1)).collect();
                if w.iter().any(|&k| k != 0) {
                    break w;
                }
            };
            terms.push(CosineTerm {
                row,
                col,
                amplitude: amplitude * r.gen_range(-1.0..1.0),
                wave,
                phase: r.gen_range(0.0..2.0 * PI),
            });
        }
    }
    terms
}

fn chart(raw: &RawConfig) -> Result<Chart, ConfigError> {
    let mut sec = Section::new(raw, "chart");
    if sec.entries.is_none() {
        return err(0, "missing [chart] section");
    }
    let kind_entry = sec.require("kind")?;
    let kind = ChartKind::from_name(&kind_entry.value).or_else(|e| err(kind_entry.line, e.to_string()))?;
    let header = sec.header;
    let dim = |sec: &mut Section| -> Result<usize, ConfigError> {
        let e = sec.require("n")?;
        match e.value.parse::<usize>() {
            Ok(n) if (2..=9).contains(&n) => Ok(n),
            _ => err(e.line, format!("`n` must be an integer in 2..=9, found `{}`", e.value)),
        }
    };
    let built = match kind {
        ChartKind::SpherePolar => {
            let n = dim(&mut sec)?;
            let mut names: Vec<String> = (1..n).map(|i| format!("th{i}")).collect();
            names.push("phi".into());
            let phi = sec.get("conformal_factor").map(|e| expression(e, &names)).transpose()?;
            Chart::sphere_polar(n, phi.as_ref())
        }
        ChartKind::Torus => {
            let n = dim(&mut sec)?;
            let names = coord_names(n);
            let period = sec.number("period")?.unwrap_or(2.0 * PI);
            let w = sec.get("w").map(|e| expression(e, &names)).transpose()?;
            let metric = metric_entries(&mut sec, n, &names)?;
            let seed = sec.get("perturbation_seed");
            let amplitude = sec.number("perturbation_amplitude")?;
            let chosen = [w.is_some(), metric.is_some(), seed.is_some()].iter().filter(|&&b| b).count();
            if chosen > 1 {
                return err(header, "torus takes only one of `w`, `g<i><j>` entries or `perturbation_seed`");
            }
            if let Some(e) = seed {
                let s: u64 = e.value.parse().or_else(|_| err(e.line, "`perturbation_seed` must be an integer"))?;
                if (period - 2.0 * PI).abs() > 1e-12 {
                    return err(e.line, "perturbed tori use period 2*pi");
                }
                Chart::torus_perturbed(n, &random_perturbation(n, s, amplitude.unwrap_or(0.1)))
            } else if let Some(w) = w {
                Chart::torus_conformal(n, period, &w)
            } else {
                let metric = metric.unwrap_or_else(|| {
                    (0..n * n)
                        .map(|k| Expr::constant(if k / n == k % n { 1.0 } else { 0.0 }))
                        .collect()
                });
                Chart::torus(n, period, metric)
            }
        }
        ChartKind::FlatBox => Chart::flat_box(dim(&mut sec)?),
        ChartKind::ProductS2xS2 => {
            let (r1, r2) = match sec.get("radii") {
                Some(e) => {
                    let r: Vec<f64> = list(e, ',')
                        .iter()
                        .map(|t| t.parse::<f64>().or_else(|_| err(e.line, format!("invalid radius `{t}`"))))
                        .collect::<Result<_, _>>()?;
                    if r.len() != 2 {
                        return err(e.line, "`radii` takes two values");
                    }
                    (r[0], r[1])
                }
                None => (1.0, 1.0),
            };
            Chart::product_s2xs2(r1, r2)
        }
        ChartKind::Inline => {
            let names_entry = sec.require("names")?;
            let names = list(names_entry, ',');
            let n = names.len();
            let bounds = |sec: &mut Section, key: &str| -> Result<Vec<f64>, ConfigError> {
                let e = sec.require(key)?;
                let v: Vec<f64> = list(e, ',')
                    .iter()
                    .map(|t| {
                        number(&Entry {
                            value: t.clone(),
                            quoted: false,
                            line: e.line,
                        })
                    })
                    .collect::<Result<_, _>>()?;
                if v.len() != n {
                    return err(e.line, format!("`{key}` needs {n} values"));
                }
                Ok(v)
            };
            let lower = bounds(&mut sec, "lower")?;
            let upper = bounds(&mut sec, "upper")?;
            let periodic = match sec.get("periodic") {
                Some(e) => {
                    let v: Vec<bool> = list(e, ',')
                        .iter()
                        .map(|t| match t.as_str() {
                            "true" | "yes" => Ok(true),
                            "false" | "no" => Ok(false),
                            _ => err(e.line, format!("invalid periodic flag `{t}`")),
                        })
                        .collect::<Result<_, _>>()?;
                    if v.len() != n {
                        return err(e.line, format!("`periodic` needs {n} values"));
                    }
                    v
                }
                None => vec![false; n],
            };
            let metric = metric_entries(&mut sec, n, &names)?
                .ok_or_else(|| ConfigError {
                    line: header,
                    message: "inline charts need `g<i><j>` metric entries".into(),
                })?;
            let label = sec.get("label").map_or("inline chart".to_string(), |e| e.value.clone());
            let domain = lower.into_iter().zip(upper).collect();
            Chart::new(ChartKind::Inline, names, domain, periodic, metric, label)
        }
    };
    let chart = built.or_else(|e| err(header, e.to_string()))?;
    chart.validate().or_else(|e| err(header, e.to_string()))?;
    sec.finish()?;
    Ok(chart)
}

fn tasks(raw: &RawConfig) -> Result<(Vec<TaskRequest>, usize, u64), ConfigError> {
    let mut sec = Section::new(raw, "tasks");
    let run = sec.require("run")?;
    let mut requests: Vec<TaskRequest> = Vec::new();
    for name in list(run, ',') {
        if catalog::lookup(&name).is_none() {
            return err(run.line, format!("unknown task `{name}` (see `curvlab list-tasks`)"));
        }
        if requests.iter().any(|r| r.name == name) {
            return err(run.line, format!("task `{name}` listed twice"));
        }
        requests.push(TaskRequest {
            name,
            tol: None,
            order: None,
        });
    }
    if requests.is_empty() {
        return err(run.line, "no tasks listed");
    }
    let points = sec.usize("points")?.unwrap_or(MIN_POINTS);
    if points < MIN_POINTS {
        return err(sec.get("points").unwrap().line, format!("pointwise tasks need at least {MIN_POINTS} points"));
    }
    let seed = match sec.get("seed") {
        Some(e) => e.value.parse().or_else(|_| err(e.line, "`seed` must be an unsigned integer"))?,
        None => 0,
    };
    if let Some(entries) = sec.entries {
        for (key, e) in entries {
            let Some((task, what)) = key.split_once('.') else {
                continue;
            };
            let Some(req) = requests.iter_mut().find(|r| r.name == task) else {
                return err(e.line, format!("override for `{task}`, which is not in `run`"));
            };
            match what {
                "tol" => {
                    let tol = number(e)?;
                    if tol.is_nan() || tol <= 0.0 {
                        return err(e.line, "tolerances must be positive");
                    }
                    req.tol = Some(tol);
                }
                "order" => {
                    if !matches!(catalog::lookup(task).unwrap().kind, TaskKind::Pointwise(_)) {
                        return err(e.line, "jet-order overrides apply to pointwise tasks only");
                    }
                    req.order = Some(e.value.parse().or_else(|_| err(e.line, "`order` must be an integer"))?);
                }
                other => return err(e.line, format!("unknown task override `{other}`")),
            }
            sec.used.push(key.clone());
        }
    }
    sec.finish()?;
    Ok((requests, points, seed))
}

fn quadrature(raw: &RawConfig, chart: &Chart) -> Result<QuadratureSpec, ConfigError> {
    let mut sec = Section::new(raw, "quadrature");
    let n = chart.dim();
    let header = sec.header;
    let mut spec = QuadratureSpec::for_chart(chart, 12).or_else(|e| err(header, e.to_string()))?;
    let per_axis = |e: &Entry| -> Result<Vec<String>, ConfigError> {
        let v = list(e, ',');
        match v.len() {
            1 => Ok(vec![v[0].clone(); n]),
            k if k == n => Ok(v),
            k => err(e.line, format!("{k} values for a {n}-dimensional chart")),
        }
    };
    let rules = match sec.get("rules") {
        Some(e) => per_axis(e)?
            .iter()
            .map(|r| Rule::from_name(r).or_else(|x| err(e.line, x.to_string())))
            .collect::<Result<Vec<_>, _>>()?,
        None => spec.rules().to_vec(),
    };
    let nodes = match sec.get("nodes") {
        Some(e) => per_axis(e)?
            .iter()
            .map(|c| c.parse::<usize>().or_else(|_| err(e.line, format!("invalid node count `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => spec.nodes().to_vec(),
    };
    let ladder = match sec.get("ladder") {
        Some(e) => list(e, ',')
            .iter()
            .map(|c| c.parse::<usize>().or_else(|_| err(e.line, format!("invalid ladder multiplier `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => spec.ladder().to_vec(),
    };
    let axisymmetric = sec.flag("axisymmetric")?.unwrap_or(false);
    spec = QuadratureSpec::new(rules, nodes, axisymmetric, ladder).or_else(|e| err(header, e.to_string()))?;
    spec.validate(chart).or_else(|e| err(header, e.to_string()))?;
    sec.finish()?;
    Ok(spec)
}
