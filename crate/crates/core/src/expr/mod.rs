//! Scalar expressions in `x` and `y`.
//!
//! Expressions are parsed once into an immutable tree and evaluated many
//! times. The grammar is ordinary infix arithmetic with `^` for powers, the
//! functions `sqrt abs sign pow exp ln min max`, and a guarded form
//!
//! ```text
//! piecewise(y >= 0: sqrt(y), y < 0 && x > 1: 0, else: -1)
//! ```
//!
//! whose first branch with a true guard is taken. Guards are comparisons
//! joined by `&&` and `||` (`&&` binds tighter).

mod parser;

use std::fmt;

use crate::error::{EvalError, Result};

/// Negative `sqrt` arguments this close to zero are read as zero. Points that
/// sit on curves like `y = x^2` land there through roundoff.
pub const SQRT_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Sign,
    Pow,
    Exp,
    Ln,
    Min,
    Max,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "pow" => Func::Pow,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Pow => "pow",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Gt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lhs: Node,
    pub op: CmpOp,
    pub rhs: Node,
}

impl Comparison {
    /// Signed margin, positive when the comparison holds strictly.
    pub fn margin(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let l = self.lhs.eval(x, y)?;
        let r = self.rhs.eval(x, y)?;
        Ok(match self.op {
            CmpOp::Lt | CmpOp::Le => r - l,
            CmpOp::Gt | CmpOp::Ge => l - r,
        })
    }

    pub fn holds(&self, x: f64, y: f64) -> Result<bool, EvalError> {
        let m = self.margin(x, y)?;
        Ok(if self.op.is_strict() { m > 0.0 } else { m >= 0.0 })
    }
}

/// Disjunction of conjunctions of comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub any: Vec<Vec<Comparison>>,
}

impl Predicate {
    pub fn holds(&self, x: f64, y: f64) -> Result<bool, EvalError> {
        for conj in &self.any {
            let mut all = true;
            for c in conj {
                if !c.holds(x, y)? {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn parse(text: &str) -> Result<Predicate> {
        parser::parse_predicate(text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// `None` is the `else` branch.
    pub guard: Option<Predicate>,
    pub value: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
    Piecewise(Vec<Branch>),
}

impl Node {
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let v = match self {
            Node::Const(c) => *c,
            Node::Var(Var::X) => x,
            Node::Var(Var::Y) => y,
            Node::Neg(a) => -a.eval(x, y)?,
            Node::Bin(op, a, b) => {
                let a = a.eval(x, y)?;
                let b = b.eval(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
            Node::Call(f, args) => {
                let a = args[0].eval(x, y)?;
                match f {
                    Func::Sqrt => {
                        if a < 0.0 {
                            if a >= -SQRT_CLAMP {
                                0.0
                            } else {
                                return Err(EvalError::Domain { func: "sqrt", arg: a });
                            }
                        } else {
                            a.sqrt()
                        }
                    }
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain { func: "ln", arg: a });
                        }
                        a.ln()
                    }
                    Func::Pow => power(a, args[1].eval(x, y)?)?,
                    Func::Min => a.min(args[1].eval(x, y)?),
                    Func::Max => a.max(args[1].eval(x, y)?),
                }
            }
            Node::Piecewise(branches) => {
                let mut hit = None;
                for br in branches {
                    let take = match &br.guard {
                        None => true,
                        Some(p) => p.holds(x, y)?,
                    };
                    if take {
                        hit = Some(&br.value);
                        break;
                    }
                }
                match hit {
                    Some(v) => v.eval(x, y)?,
                    None => return Err(EvalError::NoBranch { x, y }),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn mentions(&self, var: Var) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(v) => *v == var,
            Node::Neg(a) => a.mentions(var),
            Node::Bin(_, a, b) => a.mentions(var) || b.mentions(var),
            Node::Call(_, args) => args.iter().any(|a| a.mentions(var)),
            Node::Piecewise(brs) => brs.iter().any(|b| {
                b.value.mentions(var)
                    || b.guard.as_ref().is_some_and(|g| {
                        g.any
                            .iter()
                            .flatten()
                            .any(|c| c.lhs.mentions(var) || c.rhs.mentions(var))
                    })
            }),
        }
    }
}

fn power(a: f64, b: f64) -> Result<f64, EvalError> {
    if a == 0.0 && b < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        return Ok(a.powi(b as i32));
    }
    if a < 0.0 {
        return Err(EvalError::Domain { func: "pow", arg: a });
    }
    Ok(a.powf(b))
}

/// Parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        Ok(Expr {
            root: parser::parse_expr(text)?,
        })
    }

    pub fn constant(c: f64) -> Expr {
        Expr {
            root: Node::Const(c),
        }
    }

    pub fn from_node(root: Node) -> Expr {
        Expr { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.root.eval(x, y)
    }

    /// Evaluates an expression of `x` alone.
    #[inline]
    pub fn eval_x(&self, x: f64) -> Result<f64, EvalError> {
        self.root.eval(x, 0.0)
    }

    pub fn uses_y(&self) -> bool {
        self.root.mentions(Var::Y)
    }

    pub fn uses_x(&self) -> bool {
        self.root.mentions(Var::X)
    }

    /// Samples an `n`-by-`n` grid of the box and returns the first admissible
    /// point at which no piecewise branch applies.
    pub fn uncovered_point(
        &self,
        bbox: [f64; 4],
        n: usize,
        admissible: impl Fn(f64, f64) -> bool,
    ) -> Option<(f64, f64)> {
        let [x0, x1, y0, y1] = bbox;
        let n = n.max(2);
        for i in 0..n {
            let x = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let y = y0 + (y1 - y0) * j as f64 / (n - 1) as f64;
                if admissible(x, y) {
                    if let Err(EvalError::NoBranch { .. }) = self.eval(x, y) {
                        return Some((x, y));
                    }
                }
            }
        }
        None
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{:?})", c.abs())
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(Var::X) => write!(f, "x"),
            Node::Var(Var::Y) => write!(f, "y"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Node::Piecewise(brs) => {
                write!(f, "piecewise(")?;
                for (i, br) in brs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match &br.guard {
                        None => write!(f, "else")?,
                        Some(p) => write!(f, "{p}")?,
                    }
                    write!(f, ": {}", br.value)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, conj) in self.any.iter().enumerate() {
            if i > 0 {
                write!(f, " || ")?;
            }
            for (j, c) in conj.iter().enumerate() {
                if j > 0 {
                    write!(f, " && ")?;
                }
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn ev(s: &str, x: f64, y: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x, y).unwrap()
    }

    #[test]
    fn example1_field() {
        let e = Expr::parse("3*sqrt(x)*sqrt(y)").unwrap();
        assert_eq!(e.eval(4.0, 9.0).unwrap(), 3.0 * 2.0 * 3.0);
        assert_eq!(ev("0", 1.0, 2.0), 0.0);
    }

    #[test]
    fn piecewise_selects_first_true_guard() {
        let e = Expr::parse("piecewise(y>=0: sqrt(y), y<0: 0)").unwrap();
        assert_eq!(e.eval(0.0, -1.0).unwrap(), 0.0);
        assert_eq!(e.eval(0.0, 4.0).unwrap(), 2.0);
        let e = Expr::parse("piecewise(x > 1 && y > 1: 1, x > 1 || y > 1: 2, else: 3)").unwrap();
        assert_eq!(e.eval(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(e.eval(0.0, 2.0).unwrap(), 2.0);
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn counterexample2_field_values() {
        let f = "sqrt(y) - 2*sqrt(x^2 - y) + x";
        assert_eq!(ev(f, 1.0, 1.0), 2.0);
        for &x in &[0.1, 0.5, 1.0, 3.7] {
            assert!((ev(f, x, 0.0) + x).abs() < 1e-15);
            assert!((ev(f, x, x * x) - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("1.5e-3*2", 0.0, 0.0), 3e-3);
        assert_eq!(ev("min(x, y) + max(x, y)", 1.0, 5.0), 6.0);
        assert_eq!(ev("sign(x) * abs(x)", -3.0, 0.0), -3.0);
        assert_eq!(ev("pow(-8, 2)", 0.0, 0.0), 64.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        let e = Expr::parse("sqrt(y)").unwrap();
        assert!(matches!(e.eval(0.0, -1.0), Err(EvalError::Domain { .. })));
        assert_eq!(e.eval(0.0, -1e-13).unwrap(), 0.0);
        assert!(Expr::parse("ln(x)").unwrap().eval(0.0, 0.0).is_err());
        assert!(Expr::parse("1/x").unwrap().eval(0.0, 0.0).is_err());
        assert!(Expr::parse("x^0.5").unwrap().eval(-1.0, 0.0).is_err());
        assert!(Expr::parse("exp(x)").unwrap().eval(1e4, 0.0).is_err());
        let pw = Expr::parse("piecewise(x > 0: 1)").unwrap();
        assert!(matches!(pw.eval(-1.0, 0.0), Err(EvalError::NoBranch { .. })));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Expr::parse("3*"), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("z + 1"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(Expr::parse("foo(1)"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(Expr::parse("sqrt(1, 2)"), Err(Error::Arity { .. })));
        assert!(matches!(Expr::parse("min(1)"), Err(Error::Arity { .. })));
        assert!(matches!(Expr::parse("(x + 1"), Err(Error::Syntax { .. })));
        assert!(matches!(Expr::parse("x y"), Err(Error::Syntax { .. })));
        match Expr::parse("x + $") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn print_reparses_to_same_tree() {
        for s in [
            "3*sqrt(x)*sqrt(y)",
            "-x^2 + (-1.25)*y",
            "piecewise(y >= 0 && y <= x^2: sqrt(y) - 2*sqrt(x^2 - y) + x, else: sqrt(x^2 + y) - 2*x)",
            "2^-3 - -x",
            "min(pow(x, 1.5), 1e-12) / max(1, abs(y))",
        ] {
            let e = Expr::parse(s).unwrap();
            let back = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, back, "{s} -> {e}");
        }
    }

    #[test]
    fn uses_variables() {
        assert!(!Expr::parse("x^2").unwrap().uses_y());
        assert!(Expr::parse("piecewise(y > 0: 1, else: 0)").unwrap().uses_y());
    }

    #[test]
    fn coverage_sampling_finds_gaps() {
        let e = Expr::parse("piecewise(y >= 0: 1, y < -1: 2)").unwrap();
        let gap = e.uncovered_point([0.0, 1.0, -2.0, 2.0], 41, |_, _| true).unwrap();
        assert!(gap.1 < 0.0 && gap.1 >= -1.0);
        let ok = Expr::parse("piecewise(y >= 0: 1, y < 0: 2)").unwrap();
        assert!(ok.uncovered_point([0.0, 1.0, -2.0, 2.0], 41, |_, _| true).is_none());
    }
}
