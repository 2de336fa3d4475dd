//! Extended-precision reference implementations, independent of the
//! library: 256-bit arithmetic, direct summation, the test functions
//! written out by hand and a 32-point Gauss rule computed in the same
//! precision.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
    nodes: Vec<BigFloat>,
    weights: Vec<BigFloat>,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle::new()
    }
}

impl Oracle {
    pub fn new() -> Oracle {
        let mut o = Oracle { cc: Consts::new().expect("constants cache"), nodes: Vec::new(), weights: Vec::new() };
        o.build_gauss(32);
        o
    }

    pub fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, P)
    }

    pub fn int(&self, v: u64) -> BigFloat {
        BigFloat::from_u64(v, P)
    }

    pub fn to_f64(&mut self, b: &BigFloat) -> f64 {
        let s = b.format(Radix::Dec, RM, &mut self.cc).expect("decimal formatting");
        s.parse().unwrap_or_else(|_| panic!("cannot parse {s}"))
    }

    fn ln(&mut self, b: &BigFloat) -> BigFloat {
        b.ln(P, RM, &mut self.cc)
    }

    fn exp(&mut self, b: &BigFloat) -> BigFloat {
        b.exp(P, RM, &mut self.cc)
    }

    fn sin(&mut self, b: &BigFloat) -> BigFloat {
        b.sin(P, RM, &mut self.cc)
    }

    pub fn ln_mu(&mut self, mu: f64, x: &BigFloat) -> BigFloat {
        let s = self.int(1).add(&self.num(mu), P, RM).add(x, P, RM);
        self.ln(&s)
    }

    /// `ln(1 + x eps) / ln(1 + eps)` with `eps = 1 / (m (1 + mu))`.
    pub fn reparam(&mut self, m: u64, mu: f64, x: &BigFloat) -> BigFloat {
        let one = self.int(1);
        let eps = one.div(&self.int(m).mul(&one.add(&self.num(mu), P, RM), P, RM), P, RM);
        let num = self.ln(&one.add(&x.mul(&eps, P, RM), P, RM));
        let den = self.ln(&one.add(&eps, P, RM));
        num.div(&den, P, RM)
    }

    /// `max_x (a_m(x) - x)`, attained where `a_m'(x) = 1`, i.e. at
    /// `x* = (eps / ln(1 + eps) - 1) / eps`.
    pub fn reparam_gap_max(&mut self, m: u64, mu: f64) -> BigFloat {
        let one = self.int(1);
        let eps = one.div(&self.int(m).mul(&one.add(&self.num(mu), P, RM), P, RM), P, RM);
        let l = self.ln(&one.add(&eps, P, RM));
        let xs = eps.div(&l, P, RM).sub(&one, P, RM).div(&eps, P, RM);
        self.reparam(m, mu, &xs).sub(&xs, P, RM)
    }

    pub fn binomial(&self, n: u64, k: u64) -> BigFloat {
        let k = k.min(n - k);
        let mut b = self.int(1);
        for i in 0..k {
            b = b.mul(&self.int(n - i), P, RM).div(&self.int(i + 1), P, RM);
        }
        b
    }

    pub fn basis(&self, n: u64, k: u64, y: &BigFloat) -> BigFloat {
        let one = self.int(1);
        let u = one.sub(y, P, RM);
        let yk = if k == 0 { one.clone() } else { y.powi(k as usize, P, RM) };
        let uk = if n == k { one.clone() } else { u.powi((n - k) as usize, P, RM) };
        self.binomial(n, k).mul(&yk, P, RM).mul(&uk, P, RM)
    }

    /// The registry test functions, written out directly.
    pub fn test_fn(&mut self, name: &str, mu: f64, t: &BigFloat) -> BigFloat {
        let one = self.int(1);
        match name {
            "e0" => one,
            "e1" => t.clone(),
            "x2" => t.mul(t, P, RM),
            "x_lnmu" => t.mul(&self.ln_mu(mu, t), P, RM),
            "lnmu" => self.ln_mu(mu, t),
            "sin_pi" => {
                let pi = self.cc.pi(P, RM);
                self.sin(&pi.mul(t, P, RM))
            }
            "exp" => self.exp(t),
            "abs_half" => t.sub(&self.num(0.5), P, RM).abs(),
            "hat" => {
                let four = self.int(4);
                let two = self.int(2);
                let a = four.mul(t, P, RM).sub(&two, P, RM).abs();
                let v = one.sub(&a, P, RM);
                if v.is_negative() {
                    self.int(0)
                } else {
                    v
                }
            }
            other => panic!("oracle has no function {other}"),
        }
    }

    fn kinks(name: &str) -> &'static [f64] {
        match name {
            "abs_half" => &[0.5],
            "hat" => &[0.25, 0.5, 0.75],
            _ => &[],
        }
    }

    fn build_gauss(&mut self, order: usize) {
        let one = self.int(1);
        let two = self.int(2);
        let mut nodes = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        for i in 1..=order {
            let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (order as f64 + 0.5)).cos();
            let mut x = self.num(guess);
            let mut dp = one.clone();
            for _ in 0..12 {
                let (mut p0, mut p1) = (one.clone(), x.clone());
                for j in 2..=order {
                    let jf = self.int(j as u64);
                    let a = self.int(2 * j as u64 - 1).mul(&x, P, RM).mul(&p1, P, RM);
                    let b = self.int(j as u64 - 1).mul(&p0, P, RM);
                    let p2 = a.sub(&b, P, RM).div(&jf, P, RM);
                    p0 = p1;
                    p1 = p2;
                }
                // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
                let x2m1 = x.mul(&x, P, RM).sub(&one, P, RM);
                dp = self
                    .int(order as u64)
                    .mul(&x.mul(&p1, P, RM).sub(&p0, P, RM), P, RM)
                    .div(&x2m1, P, RM);
                x = x.sub(&p1.div(&dp, P, RM), P, RM);
            }
            let w = two.div(&one.sub(&x.mul(&x, P, RM), P, RM).mul(&dp.mul(&dp, P, RM), P, RM), P, RM);
            nodes.push(x);
            weights.push(w);
        }
        self.nodes = nodes;
        self.weights = weights;
    }

    fn gauss<F: FnMut(&mut Oracle, &BigFloat) -> BigFloat>(&mut self, a: &BigFloat, b: &BigFloat, mut g: F) -> BigFloat {
        let half = self.num(0.5);
        let mid = a.add(b, P, RM).mul(&half, P, RM);
        let rad = b.sub(a, P, RM).mul(&half, P, RM);
        let mut s = self.int(0);
        for i in 0..self.nodes.len() {
            let t = mid.add(&rad.mul(&self.nodes[i], P, RM), P, RM);
            let w = self.weights[i].clone();
            s = s.add(&w.mul(&g(self, &t), P, RM), P, RM);
        }
        s.mul(&rad, P, RM)
    }

    /// `(n+1) int f_mu` over the k-th cell, split at the kinks of `f`.
    pub fn cell_average(&mut self, name: &str, mu: f64, n: u64, k: u64) -> BigFloat {
        let m = self.int(n + 1);
        let a = self.int(k).div(&m, P, RM);
        let b = self.int(k + 1).div(&m, P, RM);
        let mut cuts = vec![a.clone()];
        for &c in Oracle::kinks(name) {
            // Kinks are dyadic, so comparing c (n+1) with k is exact.
            let scaled = c * (n + 1) as f64;
            if scaled > k as f64 && scaled < (k + 1) as f64 {
                cuts.push(self.num(c));
            }
        }
        cuts.push(b);
        let mut s = self.int(0);
        for w in cuts.windows(2) {
            let piece = self.gauss(&w[0], &w[1], |o, t| {
                let v = o.test_fn(name, mu, t);
                v.div(&o.ln_mu(mu, t), P, RM)
            });
            s = s.add(&piece, P, RM);
        }
        s.mul(&m, P, RM)
    }

    /// `ln_mu(x) sum_k p_{n,k}(a_{n+1}(x)) (n+1) int_cell f_mu` by direct
    /// summation over every `k`.
    pub fn log_kantorovich(&mut self, name: &str, n: u64, mu: f64, x: f64) -> f64 {
        let xb = self.num(x);
        let y = self.reparam(n + 1, mu, &xb);
        let mut s = self.int(0);
        for k in 0..=n {
            let c = self.cell_average(name, mu, n, k);
            s = s.add(&self.basis(n, k, &y).mul(&c, P, RM), P, RM);
        }
        let v = self.ln_mu(mu, &xb).mul(&s, P, RM);
        self.to_f64(&v)
    }
}
