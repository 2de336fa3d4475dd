//! Flattened postfix form of an expression, evaluated on a small stack.

use super::ast::{BinOp, Expr, Func};
use super::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Push(f64),
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    PowI(i32),
    PowC(f64),
    Pow,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
    Min,
    Max,
    LnMu,
}

/// Arithmetic needed by the evaluator.
pub trait Scalar: Copy + Default {
    fn lift(v: f64) -> Self;
    fn var(x: f64) -> Self;
    fn value(&self) -> f64;
    fn neg(self) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, c: f64) -> Self;
    fn pow(self, e: Self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn abs(self) -> Self;
    fn min(self, o: Self) -> Self;
    fn max(self, o: Self) -> Self;
    fn ln_mu(self, mu: f64) -> Self;
}

impl Scalar for f64 {
    fn lift(v: f64) -> Self {
        v
    }
    fn var(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn neg(self) -> Self {
        -self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
    fn pow(self, e: Self) -> Self {
        // Same route as the jet so value paths agree bit for bit.
        (e * f64::ln(self)).exp()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn min(self, o: Self) -> Self {
        if self.is_nan() || o.is_nan() {
            f64::NAN
        } else if self <= o {
            self
        } else {
            o
        }
    }
    fn max(self, o: Self) -> Self {
        if self.is_nan() || o.is_nan() {
            f64::NAN
        } else if self >= o {
            self
        } else {
            o
        }
    }
    fn ln_mu(self, mu: f64) -> Self {
        (1.0 + mu + self).ln()
    }
}

impl Scalar for Jet {
    fn lift(v: f64) -> Self {
        Jet::constant(v)
    }
    fn var(x: f64) -> Self {
        Jet::variable(x)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn neg(self) -> Self {
        -self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn powi(self, n: i32) -> Self {
        Jet::powi(self, n)
    }
    fn powf(self, c: f64) -> Self {
        Jet::powf(self, c)
    }
    fn pow(self, e: Self) -> Self {
        Jet::pow(self, e)
    }
    fn exp(self) -> Self {
        Jet::exp(self)
    }
    fn ln(self) -> Self {
        Jet::ln(self)
    }
    fn sin(self) -> Self {
        Jet::sin(self)
    }
    fn cos(self) -> Self {
        Jet::cos(self)
    }
    fn abs(self) -> Self {
        Jet::abs(self)
    }
    fn min(self, o: Self) -> Self {
        Jet::min(self, o)
    }
    fn max(self, o: Self) -> Self {
        Jet::max(self, o)
    }
    fn ln_mu(self, mu: f64) -> Self {
        Jet::ln_mu(self, mu)
    }
}

const INLINE_STACK: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
}

impl Program {
    pub fn compile(expr: &Expr) -> Program {
        let mut ops = Vec::with_capacity(expr.node_count());
        emit(expr, &mut ops);
        let mut depth = 0usize;
        let mut cur = 0isize;
        for op in &ops {
            cur += match op {
                Op::Push(_) | Op::Var => 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow | Op::Min | Op::Max => -1,
                _ => 0,
            };
            depth = depth.max(cur as usize);
        }
        Program { ops, depth }
    }

    /// Evaluates at `x`. Returns `None` as soon as an intermediate value is
    /// not finite.
    pub fn run<S: Scalar>(&self, x: f64, mu: f64) -> Option<S> {
        if self.depth <= INLINE_STACK {
            let mut buf = [S::default(); INLINE_STACK];
            self.run_on(&mut buf, x, mu)
        } else {
            let mut buf = vec![S::default(); self.depth];
            self.run_on(&mut buf, x, mu)
        }
    }

    fn run_on<S: Scalar>(&self, st: &mut [S], x: f64, mu: f64) -> Option<S> {
        let mut top = 0usize;
        for op in &self.ops {
            match *op {
                Op::Push(v) => {
                    st[top] = S::lift(v);
                    top += 1;
                }
                Op::Var => {
                    st[top] = S::var(x);
                    top += 1;
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow | Op::Min | Op::Max => {
                    top -= 1;
                    let (a, b) = (st[top - 1], st[top]);
                    st[top - 1] = match *op {
                        Op::Add => a.add(b),
                        Op::Sub => a.sub(b),
                        Op::Mul => a.mul(b),
                        Op::Div => a.div(b),
                        Op::Pow => a.pow(b),
                        Op::Min => a.min(b),
                        _ => a.max(b),
                    };
                }
                unary => {
                    let a = st[top - 1];
                    st[top - 1] = match unary {
                        Op::Neg => a.neg(),
                        Op::PowI(n) => a.powi(n),
                        Op::PowC(c) => a.powf(c),
                        Op::Exp => a.exp(),
                        Op::Ln => a.ln(),
                        Op::Sin => a.sin(),
                        Op::Cos => a.cos(),
                        Op::Abs => a.abs(),
                        _ => a.ln_mu(mu),
                    };
                }
            }
            if !st[top - 1].value().is_finite() {
                return None;
            }
        }
        Some(st[0])
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Num(v) => ops.push(Op::Push(*v)),
        Expr::Const(c) => ops.push(Op::Push(c.value())),
        Expr::Var => ops.push(Op::Var),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Binary(BinOp::Pow, base, exponent) => {
            emit(base, ops);
            match exponent.constant_value() {
                Some(c) if c.fract() == 0.0 && c.abs() <= 1024.0 => ops.push(Op::PowI(c as i32)),
                Some(c) => ops.push(Op::PowC(c)),
                None => {
                    emit(exponent, ops);
                    ops.push(Op::Pow);
                }
            }
        }
        Expr::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => unreachable!(),
            });
        }
        Expr::Call(f, args) => {
            for a in args {
                emit(a, ops);
            }
            ops.push(match f {
                Func::Exp => Op::Exp,
                Func::Ln => Op::Ln,
                Func::Sin => Op::Sin,
                Func::Cos => Op::Cos,
                Func::Abs => Op::Abs,
                Func::Min => Op::Min,
                Func::Max => Op::Max,
                Func::LnMu => Op::LnMu,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcexpr::parser::parse_expr;

    fn run(src: &str, x: f64) -> Option<f64> {
        Program::compile(&parse_expr(src).unwrap()).run::<f64>(x, 1.0)
    }

    #[test]
    fn evaluates() {
        assert_eq!(run("x^2 + 1", 0.5), Some(1.25));
        assert_eq!(run("2^3^2", 0.0), Some(512.0));
        assert_eq!(run("lnmu(x)", 1.0), Some(3.0_f64.ln()));
        assert_eq!(run("max(0, 1 - abs(4*x - 2))", 0.5), Some(1.0));
        assert_eq!(run("ln(0 - 1)", 0.5), None);
        assert_eq!(run("1/x", 0.0), None);
    }

    #[test]
    fn deep_expressions_use_heap_stack() {
        let src = format!("{}x{}", "(1 + ".repeat(100), ")".repeat(100));
        assert_eq!(run(&src, 0.5), Some(100.5));
        let src = format!("{}x", "1 + (".repeat(60)) + &")".repeat(60);
        assert_eq!(run(&src, 0.5), Some(60.5));
    }

    #[test]
    fn value_paths_agree() {
        let e = parse_expr("exp(-x) * sin(pi*x)^2 / lnmu(x) + x^x + x^0.5").unwrap();
        let p = Program::compile(&e);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let a = p.run::<f64>(x, 0.5).unwrap();
            let j = p.run::<Jet>(x, 0.5).unwrap();
            assert_eq!(a.to_bits(), j.v.to_bits(), "x = {x}");
        }
    }
}
