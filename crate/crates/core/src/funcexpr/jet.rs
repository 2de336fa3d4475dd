//! Second-order forward-mode dual numbers.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value with first and second derivative with respect to `x`.
///
/// `kink` is set once any non-differentiable operation (`abs` at zero,
/// `min`/`max` at a tie with different slopes, a fractional power at zero)
/// has been crossed exactly; the derivatives are then one-sided averages
/// or subgradients and should not be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub kink: bool,
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        Jet { v, d1: 0.0, d2: 0.0, kink: false }
    }

    pub fn variable(x: f64) -> Jet {
        Jet { v: x, d1: 1.0, d2: 0.0, kink: false }
    }

    /// Chain rule for a scalar function with value `f0`, slope `f1` and
    /// curvature `f2` at `self.v`.
    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Jet {
        Jet {
            v: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
            kink: self.kink,
        }
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    /// `ln(1 + mu + self)`.
    pub fn ln_mu(self, mu: f64) -> Jet {
        let s = 1.0 + mu + self.v;
        let r = 1.0 / s;
        self.chain(s.ln(), r, -r * r)
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    /// Subgradient 0 at the origin.
    pub fn abs(self) -> Jet {
        if self.v > 0.0 {
            self
        } else if self.v < 0.0 {
            -self
        } else {
            Jet { v: 0.0, d1: 0.0, d2: 0.0, kink: self.kink || self.d1 != 0.0 || self.d2 != 0.0 }
        }
    }

    fn pick(a: Jet, b: Jet, take_a: bool) -> Jet {
        let mut out = if take_a { a } else { b };
        out.kink = a.kink || b.kink;
        out
    }

    fn tie(a: Jet, b: Jet) -> Jet {
        let kink = a.kink || b.kink || a.d1 != b.d1 || a.d2 != b.d2;
        Jet { v: a.v, d1: 0.5 * (a.d1 + b.d1), d2: 0.5 * (a.d2 + b.d2), kink }
    }

    pub fn min(self, other: Jet) -> Jet {
        if self.v.is_nan() || other.v.is_nan() {
            return Jet::constant(f64::NAN);
        }
        if self.v == other.v {
            Jet::tie(self, other)
        } else {
            Jet::pick(self, other, self.v < other.v)
        }
    }

    pub fn max(self, other: Jet) -> Jet {
        if self.v.is_nan() || other.v.is_nan() {
            return Jet::constant(f64::NAN);
        }
        if self.v == other.v {
            Jet::tie(self, other)
        } else {
            Jet::pick(self, other, self.v > other.v)
        }
    }

    /// Integer power.
    pub fn powi(self, n: i32) -> Jet {
        match n {
            0 => Jet { kink: self.kink, ..Jet::constant(1.0) },
            1 => self,
            _ => {
                let nf = n as f64;
                let f1 = nf * self.v.powi(n - 1);
                let f2 = nf * (nf - 1.0) * self.v.powi(n - 2);
                self.chain(self.v.powi(n), f1, f2)
            }
        }
    }

    /// Constant real power. At a zero base the derivatives that blow up are
    /// replaced by zero and the kink flag is raised.
    pub fn powf(self, c: f64) -> Jet {
        let v = self.v.powf(c);
        if self.v == 0.0 {
            let f1 = if c > 1.0 { 0.0 } else if c == 1.0 { 1.0 } else { f64::NAN };
            let f2 = if c > 2.0 || c == 1.0 { 0.0 } else if c == 2.0 { 2.0 } else { f64::NAN };
            let mut out = self.chain(v, if f1.is_nan() { 0.0 } else { f1 }, if f2.is_nan() { 0.0 } else { f2 });
            out.kink |= f1.is_nan() || f2.is_nan();
            return out;
        }
        let f1 = c * self.v.powf(c - 1.0);
        let f2 = c * (c - 1.0) * self.v.powf(c - 2.0);
        self.chain(v, f1, f2)
    }

    /// `self^e` with a variable exponent, as `exp(e ln self)`.
    pub fn pow(self, e: Jet) -> Jet {
        (e * self.ln()).exp()
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2, kink: self.kink || o.kink }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2, kink: self.kink || o.kink }
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            kink: self.kink || o.kink,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        let d1 = (self.d1 - q * o.d1) / o.v;
        let d2 = (self.d2 - 2.0 * d1 * o.d1 - q * o.d2) / o.v;
        Jet { v: q, d1, d2, kink: self.kink || o.kink }
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2, kink: self.kink }
    }
}
