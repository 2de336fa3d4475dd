//! Scalar building blocks: the logarithmic weight, the reparameterization
//! curve feeding the Bernstein basis, the basis itself, its moments and the
//! derived constants that appear in the quantitative estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Basis values below this are treated as zero by the row evaluator.
pub const FLUSH_THRESHOLD: f64 = 1e-300;

/// `ln(sqrt(2*pi))`.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("mu must be positive and finite, got {0}")]
    InvalidMu(f64),
    #[error("x = {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn check_unit(x: f64) -> Result<(), BasisError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(BasisError::OutOfDomain(x))
    }
}

/// The weight `ln_mu(x) = ln(1 + mu + x)` fixed by the logarithmic operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWeight {
    mu: f64,
}

impl LogWeight {
    pub fn new(mu: f64) -> Result<Self, BasisError> {
        if mu.is_finite() && mu > 0.0 {
            Ok(Self { mu })
        } else {
            Err(BasisError::InvalidMu(mu))
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `ln_mu(x)` with a domain check.
    pub fn ln_mu(&self, x: f64) -> Result<f64, BasisError> {
        check_unit(x)?;
        Ok(self.at(x))
    }

    /// `ln_mu(x)` without the domain check; used on hot paths.
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        (1.0 + self.mu + x).ln()
    }

    /// `ln(1 + mu)`, the minimum of the weight on `[0, 1]`.
    pub fn lower(&self) -> f64 {
        self.mu.ln_1p()
    }

    /// `ln(2 + mu)`, the maximum of the weight on `[0, 1]`.
    pub fn upper(&self) -> f64 {
        (2.0 + self.mu).ln()
    }
}

/// The increasing concave map
/// `a_m(x) = ln(1 + x eps) / ln(1 + eps)` with `eps = 1 / (m (1 + mu))`.
///
/// The Kantorovich operator of degree `n` uses index `m = n + 1`; the sampled
/// operator uses `m = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReparamCurve {
    index: u64,
    mu: f64,
    eps: f64,
    log_denominator: f64,
}

impl ReparamCurve {
    pub fn new(index: u64, mu: f64) -> Result<Self, BasisError> {
        if index == 0 {
            return Err(BasisError::InvalidParameter("curve index must be >= 1".into()));
        }
        LogWeight::new(mu)?;
        let eps = 1.0 / (index as f64 * (1.0 + mu));
        Ok(Self {
            index,
            mu,
            eps,
            log_denominator: eps.ln_1p(),
        })
    }

    /// The curve `a_{n+1}` used by the Kantorovich operator of degree `n`.
    pub fn for_degree(n: u64, mu: f64) -> Result<Self, BasisError> {
        Self::new(n + 1, mu)
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `eps = 1 / (index (1 + mu))`.
    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn reparam(&self, x: f64) -> Result<f64, BasisError> {
        check_unit(x)?;
        Ok(self.at(x))
    }

    /// Unchecked evaluation. Exact at both endpoints and never below `x`.
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        ((x * self.eps).ln_1p() / self.log_denominator).clamp(x, 1.0)
    }

    /// `a(x) - x`.
    pub fn gap(&self, x: f64) -> f64 {
        self.at(x) - x
    }

    /// The limit of `n (a_{n+1}(x) - x)`, namely `(x - x^2) / (2 (1 + mu))`.
    pub fn gap_limit(&self, x: f64) -> f64 {
        reparam_gap_limit(self.mu, x)
    }
}

pub fn reparam_gap_limit(mu: f64, x: f64) -> f64 {
    (x - x * x) / (2.0 * (1.0 + mu))
}

/// Stirling series remainder `ln(k!) - (k + 1/2) ln k + k - ln sqrt(2 pi)`
/// for k = 1..=15.
#[allow(clippy::excessive_precision)]
const STIRLING_ERR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_26,
    0.041_340_695_955_409_294_093_822_08,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_57,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_319,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_153,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_69,
];

fn stirling_err(k: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if k <= 15.0 {
        return STIRLING_ERR[k as usize];
    }
    let kk = k * k;
    if k > 500.0 {
        (S0 - S1 / kk) / k
    } else if k > 80.0 {
        (S0 - (S1 - S2 / kk) / kk) / k
    } else if k > 35.0 {
        (S0 - (S1 - (S2 - S3 / kk) / kk) / kk) / k
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / kk) / kk) / kk) / kk) / k
    }
}

/// Deviance term `x ln(x / m) + m - x`, evaluated by series when `x ~ m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `p_{n,k}(y) = C(n,k) y^k (1-y)^(n-k)`.
///
/// The logarithm is accumulated from Stirling remainders and deviance terms
/// and exponentiated once, so the result keeps full relative accuracy for
/// degrees in the thousands. `0^0 = 1` at the endpoints.
pub fn bernstein_basis(n: u64, k: u64, y: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if n == 0 {
        return 1.0;
    }
    let q = 1.0 - y;
    if y <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if y >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    let kf = k as f64;
    let log_p = if k == 0 {
        if y < 0.1 {
            -deviance(nf, nf * q) - nf * y
        } else {
            nf * q.ln()
        }
    } else if k == n {
        if q < 0.1 {
            -deviance(nf, nf * y) - nf * q
        } else {
            nf * y.ln()
        }
    } else {
        let lc = stirling_err(nf)
            - stirling_err(kf)
            - stirling_err(nf - kf)
            - deviance(kf, nf * y)
            - deviance(nf - kf, nf * q);
        let lf = 2.0 * LN_SQRT_2PI + kf.ln() + (-kf / nf).ln_1p();
        lc - 0.5 * lf
    };
    if log_p < -745.0 {
        0.0
    } else {
        log_p.exp()
    }
}

/// The nonnegligible part of a basis row `k -> p_{n,k}(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    /// Index of `weights[0]`.
    pub start: usize,
    pub weights: Vec<f64>,
}

impl BasisRow {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.start + i, w))
    }
}

/// Evaluates the whole row `p_{n,0}(y), ..., p_{n,n}(y)`, dropping entries
/// below [`FLUSH_THRESHOLD`].
///
/// The mode is evaluated with [`bernstein_basis`] and the rest by the ratio
/// recurrence walking outward, which is much cheaper than one logarithmic
/// evaluation per entry.
pub fn bernstein_row(n: u64, y: f64) -> BasisRow {
    let nu = n as usize;
    if y <= 0.0 {
        return BasisRow { start: 0, weights: vec![1.0] };
    }
    if y >= 1.0 {
        return BasisRow { start: nu, weights: vec![1.0] };
    }
    let mode = (((n + 1) as f64 * y).floor() as usize).min(nu);
    let ratio = y / (1.0 - y);
    let peak = bernstein_basis(n, mode as u64, y);

    let mut below = Vec::new();
    let mut p = peak;
    let mut k = mode;
    while k > 0 {
        p *= k as f64 / ((nu - k + 1) as f64 * ratio);
        if p < FLUSH_THRESHOLD {
            break;
        }
        below.push(p);
        k -= 1;
    }
    let start = mode - below.len();
    below.reverse();
    let mut weights = below;
    weights.push(peak);

    let mut p = peak;
    let mut k = mode;
    while k < nu {
        p *= (nu - k) as f64 / (k + 1) as f64 * ratio;
        if p < FLUSH_THRESHOLD {
            break;
        }
        weights.push(p);
        k += 1;
    }
    BasisRow { start, weights }
}

/// `int_0^1 p_{n,k}(t) dt = 1 / (n + 1)`.
pub fn basis_integral(n: u64, k: u64) -> f64 {
    if k > n {
        0.0
    } else {
        1.0 / (n + 1) as f64
    }
}

/// Zeroth, first and second moments of the basis against the nodes
/// `k / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KingMoments {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Closed forms: `m0 = 1`, `m1 = n y / (n+1)`,
/// `m2 = (n y + n (n-1) y^2) / (n+1)^2`.
pub fn king_moments(n: u64, y: f64) -> KingMoments {
    let nf = n as f64;
    let np1 = nf + 1.0;
    KingMoments {
        m0: 1.0,
        m1: nf * y / np1,
        m2: (nf * y + nf * (nf - 1.0) * y * y) / (np1 * np1),
    }
}

/// The same moments by direct summation over the basis.
pub fn king_moments_direct(n: u64, y: f64) -> KingMoments {
    let np1 = (n + 1) as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..=n {
        let p = bernstein_basis(n, k, y);
        let node = k as f64 / np1;
        m0 += p;
        m1 += node * p;
        m2 += node * node * p;
    }
    KingMoments { m0, m1, m2 }
}

/// `sum_k |y - k/(n+1)| p_{n,k}(y)`.
pub fn basis_abs_deviation(n: u64, y: f64) -> f64 {
    let np1 = (n + 1) as f64;
    bernstein_row(n, y)
        .iter()
        .map(|(k, p)| (y - k as f64 / np1).abs() * p)
        .sum()
}

/// `max_{x in [0,1]} (a(x) - x)`, located by ternary search on the concave
/// gap function.
pub fn gamma_n(curve: &ReparamCurve) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-12 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if curve.gap(m1) < curve.gap(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    curve.gap(0.5 * (lo + hi)).max(0.0)
}

/// `K_mu = 1 + 1 / (1 + mu)`.
pub fn k_mu(mu: f64) -> f64 {
    1.0 + 1.0 / (1.0 + mu)
}

/// Default Hardy-Littlewood constant `C_p = p / (p - 1)`.
pub fn default_c_p(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Constants of the quantitative estimates for one `(n, mu, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConstants {
    pub n: u64,
    pub mu: f64,
    pub p: f64,
    pub k_mu: f64,
    pub gamma_n: f64,
    pub t_n: f64,
    pub lambda_n: f64,
    /// `Gamma_n`, the argument of the Sobolev K-functional.
    pub gamma_n_cap: f64,
    pub c_p: f64,
    pub c_p_mu: f64,
    /// `ln(2 + mu) / ln(1 + mu)`.
    pub norm_ratio: f64,
}

/// `T_n = 1 / (2 (n+1)) + sqrt(2) / sqrt(n+1) + gamma_n`.
pub fn t_n(n: u64, mu: f64) -> Result<f64, BasisError> {
    let curve = ReparamCurve::for_degree(n, mu)?;
    let np1 = (n + 1) as f64;
    Ok(0.5 / np1 + std::f64::consts::SQRT_2 / np1.sqrt() + gamma_n(&curve))
}

/// `Lambda_n`, the argument of the C^1 K-functional. Valid for every `p >= 1`.
pub fn lambda_n(n: u64, mu: f64) -> Result<f64, BasisError> {
    let w = LogWeight::new(mu)?;
    let ratio = w.upper() / w.lower();
    Ok(ratio * (1.0 + 1.0 / ((1.0 + mu) * w.lower())) / (k_mu(mu) + 1.0) * t_n(n, mu)?)
}

/// Fills every constant for `n >= 2`, `mu > 0`, `p > 1`. `c_p` defaults to
/// `p / (p - 1)`.
pub fn operator_constants(
    n: u64,
    mu: f64,
    p: f64,
    c_p: Option<f64>,
) -> Result<OperatorConstants, BasisError> {
    if n < 2 {
        return Err(BasisError::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(BasisError::InvalidParameter(format!(
            "p must lie in (1, inf) for the maximal-function constants, got {p}"
        )));
    }
    let c_p = c_p.unwrap_or_else(|| default_c_p(p));
    if !(c_p > 0.0 && c_p.is_finite()) {
        return Err(BasisError::InvalidParameter(format!("C_p must be positive, got {c_p}")));
    }
    let w = LogWeight::new(mu)?;
    let curve = ReparamCurve::for_degree(n, mu)?;
    let gamma = gamma_n(&curve);
    let t = t_n(n, mu)?;
    let k = k_mu(mu);
    let ratio = w.upper() / w.lower();
    let c_p_mu = (1.0 / ((1.0 + mu) * w.lower())).max(c_p);
    Ok(OperatorConstants {
        n,
        mu,
        p,
        k_mu: k,
        gamma_n: gamma,
        t_n: t,
        lambda_n: lambda_n(n, mu)?,
        gamma_n_cap: 2f64.powf((p - 1.0) / p) * c_p_mu * ratio / (k + 1.0) * t,
        c_p,
        c_p_mu,
        norm_ratio: ratio,
    })
}
