//! Small arithmetic-expression language used for coefficient fields and
//! boundary data in experiment configs.
//!
//! Grammar: `+ - * / ^`, parentheses, numeric literals, the constants `pi`
//! and `e`, the functions `sin cos tan exp log sqrt abs`, and a fixed set of
//! named variables chosen by the caller. Expressions can be differentiated
//! symbolically, which gives analytic gradients and Hessians for tensor
//! coefficient fields.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression over an ordered list of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

impl Expr {
    /// Parses `src`; identifiers must be one of `vars` or a known constant.
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        if p.pos != tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected trailing input in `{src}` at token {}",
                p.pos
            )));
        }
        Ok(Expr {
            root,
            vars: vars.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn constant(value: f64, vars: &[&str]) -> Expr {
        Expr {
            root: Node::Num(value),
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Evaluates with `values[i]` bound to the i-th variable.
    pub fn eval(&self, values: &[f64]) -> f64 {
        eval(&self.root, values)
    }

    /// Symbolic partial derivative with respect to variable `index`.
    pub fn diff(&self, index: usize) -> Expr {
        Expr {
            root: simplify(diff(&self.root, index)),
            vars: self.vars.clone(),
        }
    }

    /// Returns the value if the expression does not depend on any variable.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.root {
            Node::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.vars, f)
    }
}

fn write_node(n: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Num(v) => write!(f, "{v:?}"),
        Node::Var(i) => write!(f, "{}", vars[*i]),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, vars, f)?;
            write!(f, ")")
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            let op = match n {
                Node::Add(..) => "+",
                Node::Sub(..) => "-",
                Node::Mul(..) => "*",
                Node::Div(..) => "/",
                _ => "^",
            };
            write!(f, "(")?;
            write_node(a, vars, f)?;
            write!(f, "{op}")?;
            write_node(b, vars, f)?;
            write!(f, ")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, vars, f)?;
            write!(f, ")")
        }
    }
}

fn eval(n: &Node, x: &[f64]) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval(a, x),
        Node::Add(a, b) => eval(a, x) + eval(b, x),
        Node::Sub(a, b) => eval(a, x) - eval(b, x),
        Node::Mul(a, b) => eval(a, x) * eval(b, x),
        Node::Div(a, b) => eval(a, x) / eval(b, x),
        Node::Pow(a, b) => {
            let base = eval(a, x);
            match b.as_ref() {
                Node::Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(*e as i32),
                _ => base.powf(eval(b, x)),
            }
        }
        Node::Call(func, a) => func.apply(eval(a, x)),
    }
}

fn num(v: f64) -> Box<Node> {
    Box::new(Node::Num(v))
}

fn diff(n: &Node, k: usize) -> Node {
    use Node::*;
    match n {
        Num(_) => Num(0.0),
        Var(i) => Num(if *i == k { 1.0 } else { 0.0 }),
        Neg(a) => Neg(Box::new(diff(a, k))),
        Add(a, b) => Add(Box::new(diff(a, k)), Box::new(diff(b, k))),
        Sub(a, b) => Sub(Box::new(diff(a, k)), Box::new(diff(b, k))),
        Mul(a, b) => Add(
            Box::new(Mul(Box::new(diff(a, k)), b.clone())),
            Box::new(Mul(a.clone(), Box::new(diff(b, k)))),
        ),
        Div(a, b) => Div(
            Box::new(Sub(
                Box::new(Mul(Box::new(diff(a, k)), b.clone())),
                Box::new(Mul(a.clone(), Box::new(diff(b, k)))),
            )),
            Box::new(Mul(b.clone(), b.clone())),
        ),
        Pow(a, b) => {
            if let Num(e) = b.as_ref() {
                // e * a^(e-1) * a'
                Mul(
                    Box::new(Mul(num(*e), Box::new(Pow(a.clone(), num(e - 1.0))))),
                    Box::new(diff(a, k)),
                )
            } else {
                // a^b * (b' ln a + b a'/a)
                Mul(
                    Box::new(n.clone()),
                    Box::new(Add(
                        Box::new(Mul(
                            Box::new(diff(b, k)),
                            Box::new(Call(Func::Log, a.clone())),
                        )),
                        Box::new(Div(
                            Box::new(Mul(b.clone(), Box::new(diff(a, k)))),
                            a.clone(),
                        )),
                    )),
                )
            }
        }
        Call(func, a) => {
            let inner = Box::new(diff(a, k));
            let outer = match func {
                Func::Sin => Call(Func::Cos, a.clone()),
                Func::Cos => Neg(Box::new(Call(Func::Sin, a.clone()))),
                Func::Tan => Div(
                    num(1.0),
                    Box::new(Pow(Box::new(Call(Func::Cos, a.clone())), num(2.0))),
                ),
                Func::Exp => Call(Func::Exp, a.clone()),
                Func::Log => Div(num(1.0), a.clone()),
                Func::Sqrt => Div(num(0.5), Box::new(Call(Func::Sqrt, a.clone()))),
                Func::Abs => Div(a.clone(), Box::new(Call(Func::Abs, a.clone()))),
            };
            Mul(Box::new(outer), inner)
        }
    }
}

fn simplify(n: Node) -> Node {
    use Node::*;
    match n {
        Neg(a) => match simplify(*a) {
            Num(v) => Num(-v),
            s => Neg(Box::new(s)),
        },
        Add(a, b) => match (simplify(*a), simplify(*b)) {
            (Num(x), Num(y)) => Num(x + y),
            (Num(z), s) | (s, Num(z)) if z == 0.0 => s,
            (s, t) => Add(Box::new(s), Box::new(t)),
        },
        Sub(a, b) => match (simplify(*a), simplify(*b)) {
            (Num(x), Num(y)) => Num(x - y),
            (s, Num(z)) if z == 0.0 => s,
            (Num(z), s) if z == 0.0 => Neg(Box::new(s)),
            (s, t) => Sub(Box::new(s), Box::new(t)),
        },
        Mul(a, b) => match (simplify(*a), simplify(*b)) {
            (Num(x), Num(y)) => Num(x * y),
            (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
            (Num(o), s) | (s, Num(o)) if o == 1.0 => s,
            (s, t) => Mul(Box::new(s), Box::new(t)),
        },
        Div(a, b) => match (simplify(*a), simplify(*b)) {
            (Num(x), Num(y)) if y != 0.0 => Num(x / y),
            (Num(z), _) if z == 0.0 => Num(0.0),
            (s, Num(o)) if o == 1.0 => s,
            (s, t) => Div(Box::new(s), Box::new(t)),
        },
        Pow(a, b) => match (simplify(*a), simplify(*b)) {
            (Num(x), Num(y)) => Num(x.powf(y)),
            (_, Num(z)) if z == 0.0 => Num(1.0),
            (s, Num(o)) if o == 1.0 => s,
            (s, t) => Pow(Box::new(s), Box::new(t)),
        },
        Call(f, a) => match simplify(*a) {
            Num(v) => Num(f.apply(v)),
            s => Call(f, Box::new(s)),
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1.5e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number `{text}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!(
                "unexpected character `{c}` in `{src}`"
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expression(format!(
                "expected `{c}` at token {}",
                self.pos
            )))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(Error::Expression(format!("unknown identifier `{name}`"))),
                }
            }
            other => Err(Error::Expression(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: &[&str] = &["x1", "x2"];

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expr::parse("1 + 2*3^2 - -4/2", XY).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 1.0 + 18.0 + 2.0);
        let e = Expr::parse("-2^2", XY).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), -4.0);
        let e = Expr::parse("2^3^2", XY).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 512.0);
    }

    #[test]
    fn variables_functions_constants() {
        let e = Expr::parse("sin(pi*x1) + exp(x2) * cos(0)", XY).unwrap();
        let v = e.eval(&[0.5, 1.0]);
        assert!((v - (1.0 + std::f64::consts::E)).abs() < 1e-14);
        let e = Expr::parse("1.5e-3*x1", XY).unwrap();
        assert!((e.eval(&[2.0, 0.0]) - 3e-3).abs() < 1e-18);
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let e = Expr::parse("x1^3*x2 + sin(x1*x2) / (2 + x2^2) + exp(-x1)", XY).unwrap();
        let p = [0.3, -0.7];
        for k in 0..2 {
            let d = e.diff(k).eval(&p);
            let h = 1e-6;
            let mut pp = p;
            let mut pm = p;
            pp[k] += h;
            pm[k] -= h;
            let fd = (e.eval(&pp) - e.eval(&pm)) / (2.0 * h);
            assert!((d - fd).abs() < 1e-8, "k={k}: {d} vs {fd}");
        }
    }

    #[test]
    fn derivative_of_constant_folds() {
        let e = Expr::parse("3*x1 + 2", XY).unwrap();
        assert_eq!(e.diff(0).as_constant(), Some(3.0));
        assert_eq!(e.diff(1).as_constant(), Some(0.0));
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("x3 + 1", XY).is_err());
        assert!(Expr::parse("(1 + 2", XY).is_err());
        assert!(Expr::parse("1 $ 2", XY).is_err());
        assert!(Expr::parse("1 2", XY).is_err());
    }
}
