//! Coordinate charts carrying an analytic metric.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Expr, Func};
use crate::tensor::{Co, PointTensor};

/// Family a chart was built from; selects the builtin vector-field library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartKind {
    SpherePolar,
    Torus,
    FlatBox,
    ProductS2xS2,
    Inline,
}

impl ChartKind {
    pub fn name(self) -> &'static str {
        match self {
            ChartKind::SpherePolar => "sphere_polar",
            ChartKind::Torus => "torus",
            ChartKind::FlatBox => "flat_box",
            ChartKind::ProductS2xS2 => "product_s2xs2",
            ChartKind::Inline => "inline",
        }
    }

    pub fn from_name(name: &str) -> Result<ChartKind> {
        Ok(match name {
            "sphere_polar" => ChartKind::SpherePolar,
            "torus" => ChartKind::Torus,
            "flat_box" => ChartKind::FlatBox,
            "product_s2xs2" => ChartKind::ProductS2xS2,
            "inline" => ChartKind::Inline,
            other => return Err(Error::UnknownChartKind(other.to_string())),
        })
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One `s · cos(k·x + phase)` term added to a metric entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineTerm {
    pub row: usize,
    pub col: usize,
    pub amplitude: f64,
    pub wave: Vec<i32>,
    pub phase: f64,
}

/// A coordinate box with periodicity flags and a symmetric matrix of metric
/// component expressions.
#[derive(Debug, Clone)]
pub struct Chart {
    kind: ChartKind,
    names: Vec<String>,
    domain: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    /// Row-major n×n; entries (i, j) and (j, i) hold the same expression.
    metric: Vec<Expr>,
    label: String,
}

fn sin_sq(var: usize) -> Expr {
    Expr::pow(Expr::call(Func::Sin, Expr::var(var)), Expr::constant(2.0))
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

/// `exp(2·w)`, or `None` when `w` is absent.
fn conformal_weight(w: Option<&Expr>) -> Option<Expr> {
    w.map(|w| Expr::call(Func::Exp, Expr::mul(Expr::constant(2.0), w.clone())))
}

impl Chart {
    /// General constructor; `metric` is the upper triangle row by row
    /// (`n(n+1)/2` entries) or the full row-major matrix.
    pub fn new(
        kind: ChartKind,
        names: Vec<String>,
        domain: Vec<(f64, f64)>,
        periodic: Vec<bool>,
        metric: Vec<Expr>,
        label: impl Into<String>,
    ) -> Result<Chart> {
        let n = names.len();
        if n < 2 {
            return Err(Error::InvalidChart(format!("dimension {n} is below 2")));
        }
        if domain.len() != n || periodic.len() != n {
            return Err(Error::InvalidChart(
                "domain and periodicity lists must have one entry per coordinate".into(),
            ));
        }
        for (i, &(a, b)) in domain.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::InvalidChart(format!(
                    "axis {} has an empty or unbounded interval [{a}, {b}]",
                    names[i]
                )));
            }
        }
        let full = if metric.len() == n * n {
            for i in 0..n {
                for j in 0..i {
                    if metric[i * n + j] != metric[j * n + i] {
                        return Err(Error::InvalidChart(format!(
                            "metric entries ({i},{j}) and ({j},{i}) differ"
                        )));
                    }
                }
            }
            metric
        } else if metric.len() == n * (n + 1) / 2 {
            let mut full = vec![Expr::constant(0.0); n * n];
            let mut it = metric.into_iter();
            for i in 0..n {
                for j in i..n {
                    let e = it.next().unwrap();
                    full[i * n + j] = e.clone();
                    full[j * n + i] = e;
                }
            }
            full
        } else {
            return Err(Error::InvalidChart(format!(
                "a {n}-dimensional metric needs {} or {} entries, got {}",
                n * (n + 1) / 2,
                n * n,
                metric.len()
            )));
        };
        for e in &full {
            if e.max_var().is_some_and(|v| v >= n) {
                return Err(Error::InvalidChart(format!(
                    "metric entry {e} refers to a coordinate beyond dimension {n}"
                )));
            }
        }
        Ok(Chart {
            kind,
            names,
            domain,
            periodic,
            metric: full,
            label: label.into(),
        })
    }

    /// Unit round `S^n` in polar coordinates `th1 … th{n−1}, phi`, optionally
    /// multiplied by `e^{2φ}` for a conformal factor `φ` over those coordinates.
    pub fn sphere_polar(n: usize, conformal_factor: Option<&Expr>) -> Result<Chart> {
        if n < 2 {
            return Err(Error::InvalidChart("sphere_polar needs n ≥ 2".into()));
        }
        let mut names: Vec<String> = (1..n).map(|i| format!("th{i}")).collect();
        names.push("phi".into());
        let mut domain = vec![(0.0, PI); n - 1];
        domain.push((0.0, 2.0 * PI));
        let mut periodic = vec![false; n - 1];
        periodic.push(true);
        let weight = conformal_weight(conformal_factor);
        let mut metric = vec![Expr::constant(0.0); n * n];
        let mut prod: Option<Expr> = None;
        for k in 0..n {
            let base = prod.clone().unwrap_or(Expr::constant(1.0));
            metric[k * n + k] = match &weight {
                Some(w) => Expr::mul(w.clone(), base),
                None => base,
            };
            if k + 1 < n {
                let s = sin_sq(k);
                prod = Some(match prod {
                    Some(p) => Expr::mul(p, s),
                    None => s,
                });
            }
        }
        let label = match conformal_factor {
            Some(f) => format!("S^{n} with conformal factor {}", f.to_text(&names)),
            None => format!("unit round S^{n}"),
        };
        Chart::new(ChartKind::SpherePolar, names, domain, periodic, metric, label)
    }

    /// Torus `[0, period)^n` with explicit metric entries (upper triangle or
    /// full matrix) over coordinates `x1 … xn`.
    pub fn torus(n: usize, period: f64, metric: Vec<Expr>) -> Result<Chart> {
        let names = coord_names(n);
        Chart::new(
            ChartKind::Torus,
            names,
            vec![(0.0, period); n],
            vec![true; n],
            metric,
            format!("T^{n} with explicit metric"),
        )
    }

    /// Torus `[0, period)^n` with the conformally flat metric `e^{2w} δ`.
    pub fn torus_conformal(n: usize, period: f64, w: &Expr) -> Result<Chart> {
        let names = coord_names(n);
        let weight = conformal_weight(Some(w)).unwrap();
        let metric = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    weight.clone()
                } else {
                    Expr::constant(0.0)
                }
            })
            .collect();
        let label = format!("T^{n} with metric e^(2w)·flat, w = {}", w.to_text(&names));
        Chart::new(ChartKind::Torus, names, vec![(0.0, period); n], vec![true; n], metric, label)
    }

    /// Torus `[0, 2π)^n` with metric `δ_ij + Σ s·cos(k·x + phase)` built from
    /// the given terms, each added symmetrically to entry (row, col).
    pub fn torus_perturbed(n: usize, terms: &[CosineTerm]) -> Result<Chart> {
        let mut metric: Vec<Expr> = (0..n * n)
            .map(|k| Expr::constant(if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        for t in terms {
            if t.row >= n || t.col >= n || t.wave.len() != n {
                return Err(Error::InvalidChart(format!(
                    "perturbation term {t:?} does not fit dimension {n}"
                )));
            }
            let mut arg = Expr::constant(t.phase);
            for (i, &k) in t.wave.iter().enumerate() {
                if k != 0 {
                    arg = Expr::add(arg, Expr::mul(Expr::constant(k as f64), Expr::var(i)));
                }
            }
            let term = Expr::mul(Expr::constant(t.amplitude), Expr::call(Func::Cos, arg));
            let (i, j) = (t.row.min(t.col), t.row.max(t.col));
            let e = Expr::add(metric[i * n + j].clone(), term);
            metric[i * n + j] = e.clone();
            metric[j * n + i] = e;
        }
        let mut chart = Chart::torus(n, 2.0 * PI, metric)?;
        chart.label = format!("T^{n} with {} cosine perturbation terms", terms.len());
        Ok(chart)
    }

    /// Flat `[−1, 1]^n` in Cartesian coordinates.
    pub fn flat_box(n: usize) -> Result<Chart> {
        let metric = (0..n * n)
            .map(|k| Expr::constant(if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        Chart::new(
            ChartKind::FlatBox,
            coord_names(n),
            vec![(-1.0, 1.0); n],
            vec![false; n],
            metric,
            format!("flat box [-1,1]^{n}"),
        )
    }

    /// `S^2(r1) × S^2(r2)` in coordinates `th1, ph1, th2, ph2`.
    pub fn product_s2xs2(r1: f64, r2: f64) -> Result<Chart> {
        let names: Vec<String> = ["th1", "ph1", "th2", "ph2"].iter().map(|s| s.to_string()).collect();
        let c = Expr::constant;
        let diag = [
            c(r1 * r1),
            Expr::mul(c(r1 * r1), sin_sq(0)),
            c(r2 * r2),
            Expr::mul(c(r2 * r2), sin_sq(2)),
        ];
        let mut metric = vec![c(0.0); 16];
        for (k, e) in diag.into_iter().enumerate() {
            metric[k * 4 + k] = e;
        }
        Chart::new(
            ChartKind::ProductS2xS2,
            names,
            vec![(0.0, PI), (0.0, 2.0 * PI), (0.0, PI), (0.0, 2.0 * PI)],
            vec![false, true, false, true],
            metric,
            format!("S^2({r1}) x S^2({r2})"),
        )
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expr {
        &self.metric[i * self.dim() + j]
    }

    /// Same box and kind with every metric entry multiplied by `factor`.
    pub fn with_metric_factor(&self, factor: &Expr, label: String) -> Chart {
        let metric = self
            .metric
            .iter()
            .map(|e| {
                if is_zero(e) {
                    e.clone()
                } else {
                    Expr::mul(factor.clone(), e.clone())
                }
            })
            .collect();
        Chart {
            kind: self.kind,
            names: self.names.clone(),
            domain: self.domain.clone(),
            periodic: self.periodic.clone(),
            metric,
            label,
        }
    }

    /// Metric jets `g_ij` of the given order at `point`.
    pub fn metric_at(&self, point: &[f64], order: usize) -> Result<PointTensor> {
        let n = self.dim();
        if point.len() != n {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart has {n}",
                point.len()
            )));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(self.metric[i * n + j].eval_jet(point, order)?);
            }
        }
        let pos = |i: usize, j: usize| {
            let (i, j) = (i.min(j), i.max(j));
            i * n - i * (i + 1) / 2 + j
        };
        Ok(PointTensor::from_fn(n, &[Co, Co], |ix| upper[pos(ix[0], ix[1])].clone()))
    }

    /// Plain metric values at `point`, row-major.
    pub fn metric_values(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.metric.iter().map(|e| e.eval(point)).collect()
    }

    /// A fixed, well-spread set of interior points used for sanity checks.
    pub fn probe_points(&self) -> Vec<Vec<f64>> {
        let fractions = [0.173, 0.419, 0.5, 0.737, 0.911, 0.281];
        (0..fractions.len())
            .map(|s| {
                (0..self.dim())
                    .map(|i| {
                        let f = fractions[(s + 2 * i + i / 3) % fractions.len()];
                        let (a, b) = self.domain[i];
                        a + f * (b - a)
                    })
                    .collect()
            })
            .collect()
    }

    /// Check positive definiteness at a deterministic set of interior points
    /// and periodicity of the metric across every periodic axis.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for point in self.probe_points() {
            let g = self.metric_at(&point, 0).map_err(|e| {
                Error::InvalidChart(format!("metric not evaluable at {point:?}: {e}"))
            })?;
            crate::tensor::metric_inverse(&g)
                .map_err(|e| Error::InvalidChart(format!("at {point:?}: {e}")))?;
            for axis in 0..n {
                if !self.periodic[axis] {
                    continue;
                }
                let (a, b) = self.domain[axis];
                let mut lo = point.clone();
                let mut hi = point.clone();
                lo[axis] = a;
                hi[axis] = b;
                let (va, vb) = (self.metric_values(&lo)?, self.metric_values(&hi)?);
                let scale = va.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                let diff = va.iter().zip(&vb).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
                if diff > 1e-10 * scale {
                    return Err(Error::InvalidChart(format!(
                        "metric is not periodic along {} (mismatch {diff:e})",
                        self.names[axis]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Coordinate names `x1 … xn`.
pub fn coord_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}
