use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
    Min,
    Max,
    /// `lnmu(t) = ln(1 + mu + t)`, with `mu` bound at validation time.
    LnMu,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::LnMu => "lnmu",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "lnmu" => Func::LnMu,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Expression tree over the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, vec![arg])
    }

    /// `true` if the subtree references `x`.
    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(e) => e.depends_on_x(),
            Expr::Binary(_, a, b) => a.depends_on_x() || b.depends_on_x(),
            Expr::Call(_, args) => args.iter().any(Expr::depends_on_x),
        }
    }

    pub fn uses_lnmu(&self) -> bool {
        match self {
            Expr::Var | Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(e) => e.uses_lnmu(),
            Expr::Binary(_, a, b) => a.uses_lnmu() || b.uses_lnmu(),
            Expr::Call(f, args) => *f == Func::LnMu || args.iter().any(Expr::uses_lnmu),
        }
    }

    /// Value of an `x`-free subtree that needs no `mu`.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Const(c) => Some(c.value()),
            Expr::Neg(e) => e.constant_value().map(|v| -v),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.constant_value()?, b.constant_value()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                })
            }
            _ => None,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Var | Expr::Num(_) | Expr::Const(_) => 1,
            Expr::Neg(e) => 1 + e.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
            Expr::Call(_, args) => 1 + args.iter().map(Expr::node_count).sum::<usize>(),
        }
    }
}

/// Canonical form: every compound node is parenthesized, numbers use the
/// shortest representation that parses back to the same `f64`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var => f.write_str("x"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
