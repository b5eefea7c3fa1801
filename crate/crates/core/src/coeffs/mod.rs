//! Coefficient pipelines for the tail expansions: series constructions,
//! Lagrange inversion, the linear recursions linking the density expansion
//! to the height/diameter expansions, and the closed-form constants.

pub mod rational;
pub mod series;

pub use rational::Rat;
pub use series::TruncatedSeries;

use crate::numeric::{gamma_fn, integrate};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

/// Scalar abstraction so the coefficient recursions run both in f64 and in
/// exact rational arithmetic.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_i64(n: i64) -> Self;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }
}

impl Scalar for Rat {
    fn from_i64(n: i64) -> Self {
        Rat::int(n as i128)
    }
}

/// Coefficients a_k of `((1+u)^γ − 1 − γu)/(γu) = Σ_{k≥1} a_k u^k`,
/// i.e. a_k = binom(γ, k+1)/γ. Returned with the zero constant term.
pub fn correction_ratio_series(gamma: f64, order: usize) -> TruncatedSeries {
    let mut c = vec![0.0; order + 1];
    // binom(γ, k+1) built iteratively from binom(γ, 1) = γ.
    let mut binom = gamma;
    for k in 1..=order {
        binom *= (gamma - k as f64) / (k as f64 + 1.0);
        c[k] = binom / gamma;
    }
    TruncatedSeries::new(c)
}

/// Power-series coefficients of the logarithmic correction
/// `G(y) = ∫_0^y (du/u) ((u+1)^γ − 1 − γu)/((u+1)^γ − 1)`; G(0) = 0.
pub fn g_series(gamma: f64, order: usize) -> TruncatedSeries {
    let s = correction_ratio_series(gamma, order);
    let one_plus_s = TruncatedSeries::one(order).add(&s);
    let ratio = s.mul(&one_plus_s.reciprocal().expect("constant term is 1"));
    let mut g = vec![0.0; order + 1];
    for k in 1..=order {
        g[k] = ratio.coeff(k) / k as f64;
    }
    TruncatedSeries::new(g)
}

/// exp(G) as a power series; its coefficients A_n satisfy
/// `1 + Σ |A_n| < e^{γ−1}`.
pub fn exp_g(gamma: f64, order: usize) -> TruncatedSeries {
    g_series(gamma, order).exp()
}

/// The additive constant of the exponential decay of `w − 1`:
/// `C0 = γ ∫_1^∞ du/((u+1)^γ − 1) − ∫_0^1 (du/u)((u+1)^γ − 1 − γu)/((u+1)^γ − 1)`.
///
/// The second integrand has a removable singularity at 0 (limit (γ−1)/2) and
/// suffers catastrophic cancellation for small u; it is evaluated through
/// the series form there.
pub fn c0(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let up = 30.0;
    let first = integrate(
        |u| 1.0 / ((u + 1.0).powf(gamma) - 1.0),
        1.0,
        up,
        1e-14,
        1e-13,
        2000,
    )?
    .value
        + tail_of_first_integral(gamma, up);

    let order = 40;
    let s = correction_ratio_series(gamma, order);
    let one_plus_s = TruncatedSeries::one(order).add(&s);
    let ratio = s.mul(&one_plus_s.reciprocal().expect("constant term is 1"));
    // integrand(u) = ratio(u)/u, regular at 0.
    let small = integrate(
        |u| {
            let mut acc = 0.0;
            let mut p = 1.0;
            for k in 1..=order {
                acc += ratio.coeff(k) * p;
                p *= u;
            }
            acc
        },
        0.0,
        0.5,
        1e-14,
        1e-13,
        2000,
    )?
    .value;
    let large = integrate(
        |u| {
            let num = (u + 1.0).powf(gamma) - 1.0 - gamma * u;
            let den = u * ((u + 1.0).powf(gamma) - 1.0);
            num / den
        },
        0.5,
        1.0,
        1e-14,
        1e-13,
        2000,
    )?
    .value;
    Ok(gamma * first - small - large)
}

/// Exact tail `∫_U^∞ du/((u+1)^γ − 1) = Σ_{k≥1} (U+1)^{1−kγ}/(kγ − 1)`.
fn tail_of_first_integral(gamma: f64, up: f64) -> f64 {
    let base = (up + 1.0).powf(-gamma);
    let mut acc = 0.0;
    let mut p = (up + 1.0) * base;
    let mut k = 1.0;
    while p.abs() > 1e-18 {
        acc += p / (k * gamma - 1.0);
        p *= base;
        k += 1.0;
    }
    acc
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(Error::domain(format!("gamma must lie in (1, 2], got {gamma}")));
    }
    Ok(())
}

/// Lagrange inversion: power-series coefficients of the solution `x(z)` of
/// `x = z H(x)` via coefficient extraction, `x_n = [y^{n−1}] H(y)^n / n`.
/// The result is a series in `z` with zero constant term.
pub fn lagrange_invert(h: &TruncatedSeries, n: usize) -> Result<TruncatedSeries> {
    if h.coeff(0) == 0.0 {
        return Err(Error::domain(
            "lagrange_invert: H must have a nonzero constant term",
        ));
    }
    let h = h.clone().truncate(n);
    let mut out = vec![0.0; n + 1];
    let mut power = TruncatedSeries::one(n);
    for m in 1..=n {
        power = power.mul(&h);
        out[m] = power.coeff(m - 1) / m as f64;
    }
    Ok(TruncatedSeries::new(out))
}

/// Independent route for the same inversion: fixed-point iteration
/// `x ← z H(x)`, which pins one further coefficient per pass.
pub fn lagrange_invert_fixed_point(h: &TruncatedSeries, n: usize) -> Result<TruncatedSeries> {
    if h.coeff(0) == 0.0 {
        return Err(Error::domain(
            "lagrange_invert: H must have a nonzero constant term",
        ));
    }
    let h = h.clone().truncate(n);
    let mut x = TruncatedSeries::zero(n);
    for _ in 0..=n {
        let comp = h.compose(&x)?;
        let mut c = vec![0.0; n + 1];
        for k in 0..n {
            c[k + 1] = comp.coeff(k);
        }
        x = TruncatedSeries::new(c);
    }
    Ok(x)
}

/// Coefficients β_n of the exponential expansion `w(y) − 1 = Σ β_n e^{−γny}`;
/// returned as a vector with `out[n] = β_n` and `out[0] = 0`.
pub fn beta_coeffs(gamma: f64, n: usize) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let c0 = c0(gamma)?;
    let h = exp_g(gamma, n).scale(c0.exp());
    let f = lagrange_invert(&h, n)?;
    Ok(f.coeffs().to_vec())
}

/// Coefficients (γ_n, δ_n), n ≥ 2, of the diameter-side expansion
/// `L_1(y, 0) = Σ (n γ_n y + δ_n) e^{−γny}`; entries 0 and 1 are zero.
pub fn gammadelta_coeffs(gamma: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_gamma(gamma)?;
    if n < 2 {
        return Err(Error::domain("gammadelta_coeffs: need n ≥ 2"));
    }
    let order = n;
    let c0 = c0(gamma)?;
    let h = exp_g(gamma, order).scale(c0.exp());
    let f = lagrange_invert(&h, order)?;
    // H(f(x)) = f(x)/x by the defining equation.
    let mut hf = vec![0.0; order + 1];
    for k in 0..order {
        hf[k] = f.coeff(k + 1);
    }
    let hf = TruncatedSeries::new(hf);
    let hf2 = hf.mul(&hf);

    // K(u) = ((u+1)^γ − 1)² / (γu)² = (1 + S(u))².
    let s = correction_ratio_series(gamma, order);
    let one_plus_s = TruncatedSeries::one(order).add(&s);
    let k_series = one_plus_s.mul(&one_plus_s);
    // M(u) = ((u+1)^{γ+1} − 1 − (γ+1)u) / (γ(γ+1)u²/2).
    let mut m = vec![0.0; order + 1];
    let mut binom = (gamma + 1.0) * gamma / 2.0; // binom(γ+1, 2)
    for j in 0..=order {
        m[j] = binom * 2.0 / (gamma * (gamma + 1.0));
        binom *= (gamma + 1.0 - (j as f64 + 2.0)) / (j as f64 + 3.0);
    }
    let m_series = TruncatedSeries::new(m);

    let gp = hf2
        .mul(&k_series.compose(&f)?)
        .scale(gamma * (gamma - 1.0));
    let dp = hf2
        .mul(&m_series.compose(&f)?)
        .scale(-(gamma + 1.0) / 2.0);

    let mut gam = vec![0.0; n + 1];
    let mut del = vec![0.0; n + 1];
    for m in 2..=n {
        gam[m] = gp.coeff(m - 2) / m as f64;
        del[m] = dp.coeff(m - 2);
    }
    Ok((gam, del))
}

/// Recursion for the kernel-expansion coefficients V from the density
/// expansion coefficients S:
/// `V_{n+1} = S_{n+1} + (n − 1/2 − 1/(γ−1)) S_n − (n − 1/2 − 1/γ) V_n`.
pub fn v_from_s<T: Scalar>(s: &[T], gamma: T) -> Vec<T> {
    let one = T::from_i64(1);
    let half = one / T::from_i64(2);
    let mut v = Vec::with_capacity(s.len());
    v.push(s[0]);
    for n in 0..s.len() - 1 {
        let nn = T::from_i64(n as i64);
        let next = s[n + 1] + (nn - half - one / (gamma - one)) * s[n]
            - (nn - half - one / gamma) * v[n];
        v.push(next);
    }
    v
}

/// `T_{n+1} = S_{n+1} + (n − 1/2 − 1/(γ−1)) S_n`.
pub fn t_from_s<T: Scalar>(s: &[T], gamma: T) -> Vec<T> {
    let one = T::from_i64(1);
    let half = one / T::from_i64(2);
    let mut t = Vec::with_capacity(s.len());
    t.push(s[0]);
    for n in 0..s.len() - 1 {
        let nn = T::from_i64(n as i64);
        t.push(s[n + 1] + (nn - half - one / (gamma - one)) * s[n]);
    }
    t
}

/// `U_n = T_n − (γ+1)/(γ(γ−1)) V_{n−1}`, with U_0 = 1.
pub fn u_from_tv<T: Scalar>(t: &[T], v: &[T], gamma: T) -> Vec<T> {
    let one = T::from_i64(1);
    let factor = (gamma + one) / (gamma * (gamma - one));
    let mut u = Vec::with_capacity(t.len());
    u.push(t[0]);
    for n in 1..t.len() {
        u.push(t[n] - factor * v[n - 1]);
    }
    u
}

/// Closed-form constants of the large-r leading asymptotics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub lambda_cr: f64,
}

pub fn constants(gamma: f64) -> Result<Constants> {
    check_gamma(gamma)?;
    let c0 = c0(gamma)?;
    let gm1 = gamma - 1.0;
    let ge = gamma_fn(gm1 / gamma);
    let c1 = (2.0 * PI).powf(-0.5) * gm1.powf(0.5 + 1.0 / gamma) * gamma.powf(1.5) * ge * c0.exp();
    let c2 = (8.0 * PI).powf(-0.5)
        * gm1.powf(1.5 + 1.0 / gamma)
        * gamma.powf(2.5)
        * ge
        * (2.0 * c0).exp();
    Ok(Constants {
        c1,
        c2,
        lambda_cr: lambda_cr(gamma),
    })
}

/// Critical exponential rate of the lower tails:
/// `λ_cr = ((π/γ)/sin(π/γ))^{γ/(γ−1)}`.
pub fn lambda_cr(gamma: f64) -> f64 {
    let ratio = (PI / gamma) / (PI / gamma).sin();
    ratio.powf(gamma / (gamma - 1.0))
}

/// Small-r tail constants (C, C') for γ strictly inside (1, 2); the Brownian
/// index is a different regime and is rejected.
pub fn small_r_constants(gamma: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    if gamma == 2.0 {
        return Err(Error::UnsupportedCase(
            "small-r constants are defined only for gamma in (1, 2)".into(),
        ));
    }
    let lcr = lambda_cr(gamma);
    let c = (gamma - 1.0).powf(gamma + 2.0) * gamma_fn(1.0 - 1.0 / gamma)
        / (gamma.powf(gamma - 1.0) * lcr * gamma_fn(2.0 - gamma));
    Ok((c, 2.0 * lcr * c))
}

/// Experimental least-squares estimate of the density-expansion coefficients
/// S_1..S_n; delegated to the density module's fit. Never treated as ground
/// truth: the fit reports its residual and is excluded from acceptance use.
pub fn estimate_sn(gamma: f64, n: usize) -> Result<crate::stablefn::SnFit> {
    crate::stablefn::fit_expansion_coeffs(gamma, n)
}

/// Full coefficient table for one stable index.
#[derive(Debug, Clone, Serialize)]
pub struct CoeffTables {
    pub gamma: f64,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    /// β_1, β_2, ... (the n = 0 slot is dropped).
    pub beta: Vec<f64>,
    /// γ_2, γ_3, ...
    pub gamma_n: Vec<f64>,
    /// δ_2, δ_3, ...
    pub delta_n: Vec<f64>,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub lambda_cr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_small: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cprime_small: Option<f64>,
    /// "exact" at γ = 2; "fitted (experimental)" otherwise.
    pub s_method: String,
}

/// Assemble the coefficient tables at a given truncation order.
pub fn coeff_tables(gamma: f64, order: usize) -> Result<CoeffTables> {
    check_gamma(gamma)?;
    let (s, s_method) = if gamma == 2.0 {
        let mut s = vec![0.0; order + 1];
        s[0] = 1.0;
        (s, "exact".to_string())
    } else {
        let fit = estimate_sn(gamma, 3.min(order))?;
        let mut s = fit.s;
        s.resize(order + 1, 0.0);
        (s, "fitted (experimental)".to_string())
    };
    let v = v_from_s(&s, gamma);
    let t = t_from_s(&s, gamma);
    let u = u_from_tv(&t, &v, gamma);
    let beta = beta_coeffs(gamma, order)?[1..].to_vec();
    let (gn, dn) = gammadelta_coeffs(gamma, order.max(2))?;
    let consts = constants(gamma)?;
    let (c_small, cprime_small) = match small_r_constants(gamma) {
        Ok((c, cp)) => (Some(c), Some(cp)),
        Err(_) => (None, None),
    };
    Ok(CoeffTables {
        gamma,
        s,
        t,
        v,
        u,
        beta,
        gamma_n: gn[2..].to_vec(),
        delta_n: dn[2..].to_vec(),
        c0: c0(gamma)?,
        c1: consts.c1,
        c2: consts.c2,
        lambda_cr: consts.lambda_cr,
        c_small,
        cprime_small,
        s_method,
    })
}
