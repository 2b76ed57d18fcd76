//! Scalar expressions over chart coordinates, evaluated as Taylor jets.

mod jet;
mod parser;

use std::fmt;
use std::sync::Arc;

pub use jet::{layout, Jet, Layout, MAX_DIM, MAX_ORDER};
pub use parser::parse;

pub(crate) use jet::factorial;

use crate::error::{Error, Result};

/// Elementary functions accepted by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply_jet(self, j: &Jet) -> Result<Jet> {
        match self {
            Func::Sin => Ok(j.sin()),
            Func::Cos => Ok(j.cos()),
            Func::Tan => j.tan(),
            Func::Exp => Ok(j.exp()),
            Func::Log => j.ln(),
            Func::Sqrt => j.sqrt(),
        }
    }

    fn apply(self, x: f64) -> Result<f64> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => {
                if x.cos() == 0.0 {
                    return Err(Error::Domain(format!("tan evaluated at a pole ({x})")));
                }
                x.tan()
            }
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!("log of non-positive value {x}")));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative value {x}")));
                }
                x.sqrt()
            }
        };
        Ok(y)
    }
}

/// Parsed scalar expression. Subtrees are reference counted so composed
/// expressions (conformal rescalings, pullbacks) share structure.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Arc::new(a), Arc::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Arc::new(a), Arc::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Arc::new(a), Arc::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Arc::new(a), Arc::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::Pow(Arc::new(a), Arc::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Arc::new(a))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Arc::new(a))
    }

    /// Number of direct children of this node.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Neg(_) | Expr::Call(..) => 1,
            _ => 2,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => point[*i],
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Expr::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Expr::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Expr::Div(a, b) => {
                let d = b.eval(point)?;
                if d == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a.eval(point)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval(point)?;
                let e = b.eval(point)?;
                if e.fract() == 0.0 && e.abs() <= 64.0 {
                    if base == 0.0 && e < 0.0 {
                        return Err(Error::Domain("negative power of zero".into()));
                    }
                    base.powi(e as i32)
                } else {
                    if base < 0.0 {
                        return Err(Error::Domain(format!(
                            "non-integer power of negative value {base}"
                        )));
                    }
                    base.powf(e)
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(point)?)?,
        })
    }

    /// Evaluate as a jet of the given order at `point`: the coefficient for
    /// multi-index α is `∂^α e(point) / α!`.
    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        let dim = point.len();
        if let Some(v) = self.max_var() {
            if v >= dim {
                return Err(Error::Dimension(format!(
                    "expression uses coordinate {v} but the point has dimension {dim}"
                )));
            }
        }
        self.jet(point, order)
    }

    fn jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        let dim = point.len();
        Ok(match self {
            Expr::Const(c) => Jet::constant(dim, order, *c),
            Expr::Var(i) => Jet::variable(dim, order, *i, point[*i]),
            Expr::Neg(a) => a.jet(point, order)?.neg(),
            Expr::Add(a, b) => a.jet(point, order)?.add(&b.jet(point, order)?),
            Expr::Sub(a, b) => a.jet(point, order)?.sub(&b.jet(point, order)?),
            Expr::Mul(a, b) => {
                // constant factors are common in composed metrics
                if let Expr::Const(c) = a.as_ref() {
                    b.jet(point, order)?.scale(*c)
                } else if let Expr::Const(c) = b.as_ref() {
                    a.jet(point, order)?.scale(*c)
                } else {
                    a.jet(point, order)?.mul(&b.jet(point, order)?)
                }
            }
            Expr::Div(a, b) => {
                if let Expr::Const(c) = b.as_ref() {
                    if *c == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    a.jet(point, order)?.scale(1.0 / c)
                } else {
                    a.jet(point, order)?.div(&b.jet(point, order)?)?
                }
            }
            Expr::Pow(a, b) => {
                let base = a.jet(point, order)?;
                if b.max_var().is_none() {
                    base.powf(b.eval(&[])?)?
                } else {
                    let e = b.jet(point, order)?;
                    e.mul(&base.ln()?).exp()
                }
            }
            Expr::Call(f, a) => f.apply_jet(&a.jet(point, order)?)?,
        })
    }

    /// Serialize using the given coordinate names. The output is fully
    /// parenthesized so that re-parsing reproduces the same tree.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        self.write(&mut s, names);
        s
    }

    fn write(&self, out: &mut String, names: &[String]) {
        use std::fmt::Write;
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    let _ = write!(out, "(-{:?})", -c);
                } else {
                    let _ = write!(out, "{:?}", c);
                }
            }
            Expr::Var(i) => match names.get(*i) {
                Some(n) => out.push_str(n),
                None => {
                    let _ = write!(out, "x{}", i + 1);
                }
            },
            Expr::Neg(a) => {
                // `(-(c))` keeps a negated literal distinct from a negative constant.
                let literal = matches!(a.as_ref(), Expr::Const(_));
                out.push_str(if literal { "(-(" } else { "(-" });
                a.write(out, names);
                out.push_str(if literal { "))" } else { ")" });
            }
            Expr::Add(a, b) => bin(out, names, a, "+", b),
            Expr::Sub(a, b) => bin(out, names, a, "-", b),
            Expr::Mul(a, b) => bin(out, names, a, "*", b),
            Expr::Div(a, b) => bin(out, names, a, "/", b),
            Expr::Pow(a, b) => bin(out, names, a, "^", b),
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, names);
                out.push(')');
            }
        }
    }
}

fn bin(out: &mut String, names: &[String], a: &Expr, op: &str, b: &Expr) {
    out.push('(');
    a.write(out, names);
    out.push_str(op);
    b.write(out, names);
    out.push(')');
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(&[]))
    }
}

/// Jet of `e` at `point` truncated at `order`.
pub fn eval_jet(e: &Expr, point: &[f64], order: usize) -> Result<Jet> {
    e.eval_jet(point, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cubic_taylor_coefficients() {
        let e = parse("x1^3", &names(&["x1"])).unwrap();
        let j = e.eval_jet(&[2.0], 3).unwrap();
        assert_eq!(j.coeffs(), &[8.0, 12.0, 6.0, 1.0]);
    }

    #[test]
    fn sine_maclaurin() {
        let e = parse("sin(x1)", &names(&["x1"])).unwrap();
        let j = e.eval_jet(&[0.0], 5).unwrap();
        let want = [0.0, 1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0];
        for (a, b) in j.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-16, "{a} vs {b}");
        }
    }

    #[test]
    fn domain_errors_surface() {
        let n = names(&["x"]);
        let e = parse("log(x)", &n).unwrap();
        assert!(matches!(e.eval_jet(&[-1.0], 2), Err(Error::Domain(_))));
        let e = parse("1/(x - 1)", &n).unwrap();
        assert!(matches!(e.eval_jet(&[1.0], 2), Err(Error::Domain(_))));
        assert!(matches!(e.eval(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn variable_power_matches_exp_log() {
        let n = names(&["x", "y"]);
        let a = parse("x^y", &n).unwrap().eval_jet(&[1.3, 0.7], 3).unwrap();
        let b = parse("exp(y*log(x))", &n)
            .unwrap()
            .eval_jet(&[1.3, 0.7], 3)
            .unwrap();
        for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_checked() {
        let e = parse("x2", &names(&["x1", "x2"])).unwrap();
        assert!(matches!(e.eval_jet(&[1.0], 1), Err(Error::Dimension(_))));
    }
}
