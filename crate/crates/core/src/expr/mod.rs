//! Scalar expressions in the two variables `x` and `u`.
//!
//! Expressions are parsed from a small infix grammar (see [`parse`]) and can
//! be evaluated either as plain `f64` or as a truncated Taylor [`Jet`] in `u`,
//! which yields every `u`-derivative the Adomian machinery needs.

mod jet;
mod parser;

use std::fmt;

use thiserror::Error;

pub use jet::Jet;
pub use parser::parse;

/// Elementary functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
    ];
}

/// Abstract syntax tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    X,
    U,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },
    #[error("domain error in `{subexpr}` at x={x}, u={u}: {reason}")]
    Domain {
        subexpr: String,
        x: f64,
        u: f64,
        reason: String,
    },
}

impl ExprError {
    pub fn is_domain(&self) -> bool {
        matches!(self, ExprError::Domain { .. })
    }
}

/// A parsed scalar formula `f(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn new(root: Node) -> Self {
        Expression { root }
    }

    pub fn constant(value: f64) -> Self {
        Expression::new(Node::Const(value))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn depends_on_u(&self) -> bool {
        self.root.depends_on_u()
    }

    pub fn depends_on_x(&self) -> bool {
        self.root.depends_on_x()
    }

    /// Plain IEEE evaluation.
    pub fn eval(&self, x: f64, u: f64) -> Result<f64, ExprError> {
        self.root.eval(x, u)
    }

    /// Truncated Taylor expansion in `u` about `u0`: `coeffs[p] = (1/p!) d^p/du^p`.
    pub fn jet_eval(&self, x: f64, u0: f64, order: usize) -> Result<Jet, ExprError> {
        let u = Jet::variable(u0, order);
        self.root.eval_jet(x, &u)
    }

    /// Evaluates with `u` replaced by an arbitrary jet (e.g. a series in a
    /// formal parameter `t`).
    pub fn eval_with_u_jet(&self, x: f64, u: &Jet) -> Result<Jet, ExprError> {
        self.root.eval_jet(x, u)
    }

    /// Value and first `u`-derivative, without allocating.
    pub fn eval_du(&self, x: f64, u: f64) -> Result<(f64, f64), ExprError> {
        self.root.eval_dual(x, u)
    }

    /// Degree of the expression as a polynomial in `u`, or `None` when `u`
    /// enters non-polynomially.
    pub fn u_degree(&self) -> Option<usize> {
        self.root.u_degree()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Node {
    pub fn depends_on_u(&self) -> bool {
        match self {
            Node::Const(_) | Node::X => false,
            Node::U => true,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on_u(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.depends_on_u() || b.depends_on_u(),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Node::Const(_) | Node::U => false,
            Node::X => true,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on_x(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    /// Value of a subtree that references neither variable.
    fn constant_value(&self) -> Option<f64> {
        if self.depends_on_u() || self.depends_on_x() {
            return None;
        }
        self.eval(0.0, 0.0).ok()
    }

    /// Integer exponent of a constant power, if it is one.
    fn integer_exponent(exponent: &Node) -> Option<i32> {
        let p = exponent.constant_value()?;
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            Some(p as i32)
        } else {
            None
        }
    }

    fn u_degree(&self) -> Option<usize> {
        match self {
            Node::Const(_) | Node::X => Some(0),
            Node::U => Some(1),
            Node::Neg(a) => a.u_degree(),
            Node::Add(a, b) | Node::Sub(a, b) => Some(a.u_degree()?.max(b.u_degree()?)),
            Node::Mul(a, b) => Some(a.u_degree()? + b.u_degree()?),
            Node::Div(a, b) => {
                if b.depends_on_u() {
                    None
                } else {
                    a.u_degree()
                }
            }
            Node::Pow(a, b) => {
                if !a.depends_on_u() && !b.depends_on_u() {
                    return Some(0);
                }
                if b.depends_on_u() {
                    return None;
                }
                match Node::integer_exponent(b) {
                    Some(n) if n >= 0 => Some(a.u_degree()? * n as usize),
                    _ => None,
                }
            }
            Node::Call(_, a) => {
                if a.depends_on_u() {
                    None
                } else {
                    Some(0)
                }
            }
        }
    }

    fn domain(&self, x: f64, u: f64, reason: &str) -> ExprError {
        ExprError::Domain {
            subexpr: self.to_string(),
            x,
            u,
            reason: reason.to_string(),
        }
    }

    fn finite(&self, v: f64, x: f64, u: f64) -> Result<f64, ExprError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain(x, u, "non-finite result"))
        }
    }

    pub fn eval(&self, x: f64, u: f64) -> Result<f64, ExprError> {
        let v = match self {
            Node::Const(c) => *c,
            Node::X => x,
            Node::U => u,
            Node::Neg(a) => -a.eval(x, u)?,
            Node::Add(a, b) => a.eval(x, u)? + b.eval(x, u)?,
            Node::Sub(a, b) => a.eval(x, u)? - b.eval(x, u)?,
            Node::Mul(a, b) => a.eval(x, u)? * b.eval(x, u)?,
            Node::Div(a, b) => {
                let num = a.eval(x, u)?;
                let den = b.eval(x, u)?;
                if den == 0.0 {
                    return Err(self.domain(x, u, "division by zero"));
                }
                num / den
            }
            Node::Pow(a, b) => {
                let base = a.eval(x, u)?;
                match Node::integer_exponent(b) {
                    Some(n) => {
                        if n < 0 && base == 0.0 {
                            return Err(self.domain(x, u, "division by zero"));
                        }
                        base.powi(n)
                    }
                    None => {
                        let p = b.eval(x, u)?;
                        if base <= 0.0 {
                            return Err(self.domain(
                                x,
                                u,
                                "non-integer power of a non-positive base",
                            ));
                        }
                        (p * base.ln()).exp()
                    }
                }
            }
            Node::Call(func, a) => {
                let v = a.eval(x, u)?;
                match func {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(self.domain(x, u, "logarithm of a non-positive value"));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(self.domain(x, u, "square root of a negative value"));
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                }
            }
        };
        self.finite(v, x, u)
    }

    /// Forward-mode dual evaluation: `(f, df/du)`.
    fn eval_dual(&self, x: f64, u: f64) -> Result<(f64, f64), ExprError> {
        let (v, d) = match self {
            Node::Const(c) => (*c, 0.0),
            Node::X => (x, 0.0),
            Node::U => (u, 1.0),
            Node::Neg(a) => {
                let (v, d) = a.eval_dual(x, u)?;
                (-v, -d)
            }
            Node::Add(a, b) => {
                let (av, ad) = a.eval_dual(x, u)?;
                let (bv, bd) = b.eval_dual(x, u)?;
                (av + bv, ad + bd)
            }
            Node::Sub(a, b) => {
                let (av, ad) = a.eval_dual(x, u)?;
                let (bv, bd) = b.eval_dual(x, u)?;
                (av - bv, ad - bd)
            }
            Node::Mul(a, b) => {
                let (av, ad) = a.eval_dual(x, u)?;
                let (bv, bd) = b.eval_dual(x, u)?;
                (av * bv, ad * bv + av * bd)
            }
            Node::Div(a, b) => {
                let (av, ad) = a.eval_dual(x, u)?;
                let (bv, bd) = b.eval_dual(x, u)?;
                if bv == 0.0 {
                    return Err(self.domain(x, u, "division by zero"));
                }
                let q = av / bv;
                (q, (ad - q * bd) / bv)
            }
            Node::Pow(a, b) => {
                let (av, ad) = a.eval_dual(x, u)?;
                match Node::integer_exponent(b) {
                    Some(0) => (1.0, 0.0),
                    Some(n) => {
                        if n < 0 && av == 0.0 {
                            return Err(self.domain(x, u, "division by zero"));
                        }
                        (av.powi(n), n as f64 * av.powi(n - 1) * ad)
                    }
                    None => {
                        let (bv, bd) = b.eval_dual(x, u)?;
                        if av <= 0.0 {
                            return Err(self.domain(
                                x,
                                u,
                                "non-integer power of a non-positive base",
                            ));
                        }
                        let ln = av.ln();
                        let v = (bv * ln).exp();
                        (v, v * (bd * ln + bv * ad / av))
                    }
                }
            }
            Node::Call(func, a) => {
                let (v, d) = a.eval_dual(x, u)?;
                match func {
                    Func::Sin => (v.sin(), v.cos() * d),
                    Func::Cos => (v.cos(), -v.sin() * d),
                    Func::Exp => {
                        let e = v.exp();
                        (e, e * d)
                    }
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(self.domain(x, u, "logarithm of a non-positive value"));
                        }
                        (v.ln(), d / v)
                    }
                    Func::Sqrt => {
                        if v < 0.0 || (v == 0.0 && d != 0.0) {
                            return Err(self.domain(x, u, "square root of a non-positive value"));
                        }
                        let s = v.sqrt();
                        (s, if d == 0.0 { 0.0 } else { d / (2.0 * s) })
                    }
                    Func::Abs => {
                        if v == 0.0 && d != 0.0 {
                            return Err(self.domain(x, u, "abs is not differentiable at zero"));
                        }
                        (v.abs(), v.signum() * d)
                    }
                }
            }
        };
        Ok((self.finite(v, x, u)?, self.finite(d, x, u)?))
    }

    fn eval_jet(&self, x: f64, u: &Jet) -> Result<Jet, ExprError> {
        let order = u.order();
        let u0 = u.value();
        let wrap = |node: &Node, r: Result<Jet, &'static str>| -> Result<Jet, ExprError> {
            let j = r.map_err(|reason| node.domain(x, u0, reason))?;
            if j.coeffs().iter().all(|c| c.is_finite()) {
                Ok(j)
            } else {
                Err(node.domain(x, u0, "non-finite result"))
            }
        };
        match self {
            Node::Const(c) => Ok(Jet::constant(*c, order)),
            Node::X => Ok(Jet::constant(x, order)),
            Node::U => Ok(u.clone()),
            Node::Neg(a) => Ok(-&a.eval_jet(x, u)?),
            Node::Add(a, b) => wrap(self, Ok(&a.eval_jet(x, u)? + &b.eval_jet(x, u)?)),
            Node::Sub(a, b) => wrap(self, Ok(&a.eval_jet(x, u)? - &b.eval_jet(x, u)?)),
            Node::Mul(a, b) => wrap(self, Ok(&a.eval_jet(x, u)? * &b.eval_jet(x, u)?)),
            Node::Div(a, b) => {
                let num = a.eval_jet(x, u)?;
                let den = b.eval_jet(x, u)?;
                wrap(self, num.div(&den))
            }
            Node::Pow(a, b) => {
                let base = a.eval_jet(x, u)?;
                match Node::integer_exponent(b) {
                    Some(n) => wrap(self, base.powi(n)),
                    None => {
                        let p = b.eval_jet(x, u)?;
                        wrap(self, base.pow(&p))
                    }
                }
            }
            Node::Call(func, a) => {
                let v = a.eval_jet(x, u)?;
                let r = match func {
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Exp => Ok(v.exp()),
                    Func::Ln => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                };
                wrap(self, r)
            }
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips.
    write!(f, "{:?}", c)
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write_const(f, *c),
            Node::X => write!(f, "x"),
            Node::U => write!(f, "u"),
            Node::Neg(a) => write!(f, "(-{})", a),
            Node::Add(a, b) => write!(f, "({} + {})", a, b),
            Node::Sub(a, b) => write!(f, "({} - {})", a, b),
            Node::Mul(a, b) => write!(f, "({} * {})", a, b),
            Node::Div(a, b) => write!(f, "({} / {})", a, b),
            Node::Pow(a, b) => write!(f, "({} ^ {})", a, b),
            Node::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}
