//! The one-sided stable density `s_γ` with Laplace transform
//! `exp(−γ λ^{(γ−1)/γ})`, its derivative, the kernel
//! `θ(x) = (γ−1)x^{−1}s_γ(x) − ((γ−1)/γ) x^{−1−1/γ} ∫_0^x y^{1/γ−1}s_γ(y) dy`,
//! and the tail kernels ξ, ξ̄ obtained from θ and s′ by a change of variable.
//!
//! Evaluation is split at a small-argument crossover: above it an integral
//! representation over an angular variable is integrated adaptively; below
//! it the saddle-type expansion in powers of `x^{γ−1}` (scaled by
//! `e^{−b(x)}`, `b(x) = ((γ−1)/x)^{γ−1}`) is used. The expansion
//! coefficients beyond the leading one are not available in closed form for
//! γ < 2; they are fitted once per index from quadrature values on a grid
//! just below the crossover, and the fit residual is reported.

use crate::numeric::{gamma_fn, integrate};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Angular factor of the integral representation:
/// `m_γ(v) = (γ sin((γ−1)v/γ)/sin v)^{γ−1} · γ sin(v/γ)/sin v`,
/// increasing from `(γ−1)^{γ−1}` at 0 to ∞ at π.
pub fn m_gamma(v: f64, gamma: f64) -> Result<f64> {
    if !(0.0..PI).contains(&v) {
        return Err(Error::domain(format!("m_gamma: v={v} outside [0, π)")));
    }
    if v == 0.0 {
        return Ok((gamma - 1.0).powf(gamma - 1.0));
    }
    let s = v.sin();
    let first = gamma * ((gamma - 1.0) * v / gamma).sin() / s;
    let second = gamma * (v / gamma).sin() / s;
    Ok(first.powf(gamma - 1.0) * second)
}

/// Tolerances of the adaptive quadratures and the crossover override.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Crossover to the expansion branch; `None` places it where the decay
    /// exponent `b(x)` reaches 35.
    pub small_x_switch: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
            small_x_switch: None,
        }
    }
}

/// Result of the experimental expansion-coefficient fit.
#[derive(Debug, Clone)]
pub struct SnFit {
    /// S_0 = 1 followed by the fitted S_1..S_N.
    pub s: Vec<f64>,
    /// Root-mean-square relative residual of the fit.
    pub residual: f64,
}

struct CumTable {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

/// Evaluator of `s_γ` and its derived kernels for one stable index.
pub struct StableDensity {
    pub gamma: f64,
    /// α = (γ−1)/γ: the stability index of the Laplace exponent.
    pub alpha: f64,
    pub cfg: QuadratureConfig,
    x_switch: f64,
    s_star: Vec<f64>,
    v_star: Vec<f64>,
    t_star: Vec<f64>,
    fit_residual: f64,
    cum: OnceLock<CumTable>,
}

const FIT_ORDER: usize = 3;

impl StableDensity {
    pub fn new(gamma: f64, cfg: QuadratureConfig) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(Error::domain(format!("gamma must lie in (1, 2], got {gamma}")));
        }
        if !(cfg.abs_tol > 0.0 && cfg.rel_tol > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        // At γ = 2 the expansion terminates and equals the closed form for
        // every x, so the quadrature branch is never needed by default.
        let x_switch = cfg.small_x_switch.unwrap_or_else(|| {
            if gamma == 2.0 {
                f64::INFINITY
            } else {
                x_at_decay(gamma, 35.0)
            }
        });
        let s0_star = s0_star(gamma);
        let (s_star, fit_residual) = if gamma == 2.0 {
            (vec![s0_star, 0.0, 0.0, 0.0], 0.0)
        } else {
            let fit = fit_raw(gamma, FIT_ORDER, &cfg, 0)?;
            let gm1 = gamma - 1.0;
            let mut s_star = vec![s0_star];
            for (n, sn) in fit.s.iter().enumerate().skip(1) {
                s_star.push(s0_star * sn * gm1.powf(-(n as f64) * gm1));
            }
            (s_star, fit.residual)
        };
        let v_star = v_star_from(&s_star, gamma);
        let t_star = t_star_from(&s_star, gamma);
        Ok(StableDensity {
            gamma,
            alpha: (gamma - 1.0) / gamma,
            cfg,
            x_switch,
            s_star,
            v_star,
            t_star,
            fit_residual,
            cum: OnceLock::new(),
        })
    }

    pub fn with_defaults(gamma: f64) -> Result<Self> {
        StableDensity::new(gamma, QuadratureConfig::default())
    }

    /// Decay exponent `b(x) = ((γ−1)/x)^{γ−1}`.
    pub fn b(&self, x: f64) -> f64 {
        ((self.gamma - 1.0) / x).powf(self.gamma - 1.0)
    }

    pub fn small_x_switch(&self) -> f64 {
        self.x_switch
    }

    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    fn angular_integral(&self, c: f64, power: u32) -> Result<f64> {
        // ∫_0^π m^power e^{−c m} dv, cut where the integrand underflows.
        let m0 = (self.gamma - 1.0).powf(self.gamma - 1.0);
        let cutoff_m = 745.0 / c;
        if cutoff_m <= m0 {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = PI * (1.0 - 1e-14);
        if m_gamma(hi, self.gamma)? > cutoff_m {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if m_gamma(mid, self.gamma)? > cutoff_m {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        let g = self.gamma;
        // Relative-error driven: the integral scale ranges over hundreds of
        // decades with x, so an absolute floor would swallow small values.
        let r = integrate(
            move |v| {
                let m = m_gamma(v, g).unwrap_or(f64::INFINITY);
                let e = (-c * m).exp();
                match power {
                    1 => m * e,
                    _ => m * m * e,
                }
            },
            0.0,
            hi,
            1e-300,
            self.cfg.rel_tol,
            self.cfg.max_subdivisions,
        )?;
        Ok(r.value)
    }

    fn density_quadrature(&self, x: f64) -> Result<f64> {
        let c = x.powf(-(self.gamma - 1.0));
        let integral = self.angular_integral(c, 1)?;
        Ok((self.gamma - 1.0) / PI * x.powf(-self.gamma) * integral)
    }

    fn expansion_value(&self, x: f64, coeffs: &[f64], base_power: f64) -> f64 {
        let eb = (-self.b(x)).exp();
        if eb == 0.0 {
            return 0.0;
        }
        let gm1 = self.gamma - 1.0;
        let mut acc = 0.0;
        for (n, &cn) in coeffs.iter().enumerate() {
            acc += cn * x.powf(n as f64 * gm1 + base_power);
        }
        acc * eb
    }

    /// The density `s_γ(x)` for x > 0.
    pub fn density(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::domain(format!("density: need x > 0, got {x}")));
        }
        if x <= self.x_switch {
            Ok(self.expansion_value(x, &self.s_star, -(self.gamma + 1.0) / 2.0))
        } else {
            self.density_quadrature(x)
        }
    }

    /// The derivative `s'_γ(x)`, as the difference of the two positive
    /// angular integrals away from 0 and by its expansion near 0.
    pub fn density_deriv(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::domain(format!(
                "density_deriv: need x > 0, got {x}"
            )));
        }
        if x <= self.x_switch {
            return Ok(self.expansion_value(x, &self.t_star, -(3.0 * self.gamma + 1.0) / 2.0));
        }
        let gm1 = self.gamma - 1.0;
        let c = x.powf(-gm1);
        let plus = gm1 * gm1 / PI * x.powf(-2.0 * self.gamma) * self.angular_integral(c, 2)?;
        let minus = self.gamma / x * self.density_quadrature(x)?;
        Ok(plus - minus)
    }

    fn cum_table(&self) -> Result<&CumTable> {
        if let Some(t) = self.cum.get() {
            return Ok(t);
        }
        let x_max: f64 = 150.0;
        let n_panels = 320;
        let mut xs = Vec::with_capacity(n_panels + 1);
        for i in 0..=n_panels {
            xs.push(self.x_switch * (x_max / self.x_switch).powf(i as f64 / n_panels as f64));
        }
        let mut cum = Vec::with_capacity(n_panels + 1);
        cum.push(self.lower_integral_expansion(self.x_switch));
        for i in 0..n_panels {
            let part = integrate(
                |y| y.powf(1.0 / self.gamma - 1.0) * self.density(y).unwrap_or(0.0),
                xs[i],
                xs[i + 1],
                1e-300,
                self.cfg.rel_tol,
                self.cfg.max_subdivisions,
            )?;
            cum.push(cum[i] + part.value);
        }
        let _ = self.cum.set(CumTable { xs, cum });
        Ok(self.cum.get().unwrap())
    }

    /// `∫_0^x y^{1/γ−1} s_γ(y) dy` via the expansion term-by-term
    /// (valid below the crossover).
    fn lower_integral_expansion(&self, x: f64) -> f64 {
        // integrand y^{1/γ−1} s(y) ≈ Σ_n S_n* y^{a_n} e^{−b(y)} with
        // a_n = 1/γ − (γ+3)/2 + n(γ−1)
        let gm1 = self.gamma - 1.0;
        let mut acc = 0.0;
        for (n, &sn) in self.s_star.iter().enumerate() {
            let a = 1.0 / self.gamma - (self.gamma + 3.0) / 2.0 + n as f64 * gm1;
            acc += sn * self.j_expansion(x, a, 12);
        }
        acc
    }

    /// `∫_0^x y^{1/γ−1} s_γ(y) dy` for any x > 0.
    pub fn lower_integral(&self, x: f64) -> Result<f64> {
        if x <= self.x_switch {
            return Ok(self.lower_integral_expansion(x));
        }
        let table = self.cum_table()?;
        if x >= *table.xs.last().unwrap() {
            let extra = integrate(
                |y| y.powf(1.0 / self.gamma - 1.0) * self.density(y).unwrap_or(0.0),
                *table.xs.last().unwrap(),
                x,
                1e-300,
                self.cfg.rel_tol,
                self.cfg.max_subdivisions,
            )?;
            return Ok(table.cum.last().unwrap() + extra.value);
        }
        let k = table.xs.partition_point(|&t| t <= x) - 1;
        let part = integrate(
            |y| y.powf(1.0 / self.gamma - 1.0) * self.density(y).unwrap_or(0.0),
            table.xs[k],
            x,
            1e-300,
            self.cfg.rel_tol,
            self.cfg.max_subdivisions,
        )?;
        Ok(table.cum[k] + part.value)
    }

    /// The kernel θ(x); integrable, with Laplace transform
    /// `λ^{1/γ} e^{−γ λ^{(γ−1)/γ}}`.
    pub fn theta(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::domain(format!("theta: need x > 0, got {x}")));
        }
        if x <= self.x_switch {
            return Ok(self.expansion_value(x, &self.v_star, -(self.gamma + 3.0) / 2.0));
        }
        let gm1 = self.gamma - 1.0;
        let h_plus = gm1 / x * self.density(x)?;
        let h_minus =
            gm1 / self.gamma * x.powf(-1.0 - 1.0 / self.gamma) * self.lower_integral(x)?;
        Ok(h_plus - h_minus)
    }

    /// `ξ(r) = r^{−(γ+1)/(γ−1)} θ(r^{−γ/(γ−1)})`.
    pub fn xi(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::domain(format!("xi: need r > 0, got {r}")));
        }
        let gm1 = self.gamma - 1.0;
        Ok(r.powf(-(self.gamma + 1.0) / gm1) * self.theta(r.powf(-self.gamma / gm1))?)
    }

    /// `ξ̄(r) = r^{−(γ+1)/(γ−1)} s'_γ(r^{−γ/(γ−1)})`.
    pub fn xi_bar(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::domain(format!("xi_bar: need r > 0, got {r}")));
        }
        let gm1 = self.gamma - 1.0;
        Ok(r.powf(-(self.gamma + 1.0) / gm1) * self.density_deriv(r.powf(-self.gamma / gm1))?)
    }

    /// `J_a(x) = ∫_0^x y^a e^{−b(y)} dy` by adaptive quadrature.
    pub fn j_quadrature(&self, x: f64, a: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::domain("j_quadrature: need x > 0"));
        }
        // The integrand underflows to exactly 0 below b(y) = 745.
        let lo = x_at_decay(self.gamma, 745.0);
        if lo >= x {
            return Ok(0.0);
        }
        let b = |y: f64| ((self.gamma - 1.0) / y).powf(self.gamma - 1.0);
        Ok(integrate(
            |y| y.powf(a) * (-b(y)).exp(),
            lo,
            x,
            1e-300,
            self.cfg.rel_tol,
            self.cfg.max_subdivisions,
        )?
        .value)
    }

    /// The p-step unrolled integration-by-parts form of J_a:
    /// `J_a(x) = Σ_{q<p} c_q(a, γ) x^{a+γ+q(γ−1)} e^{−b(x)}
    ///          + (γ−1)^γ c_p(a, γ) J_{a+p(γ−1)}(x)`,
    /// the p-step integration-by-parts identity with its exact remainder
    /// evaluated by quadrature. Unavailable at a = −γ, where the first
    /// parts step degenerates.
    pub fn j_recursion(&self, x: f64, a: f64, p: usize) -> Result<f64> {
        if (a + self.gamma).abs() < 1e-12 {
            return Err(Error::UnsupportedCase(
                "J_a recursion unavailable at a = -gamma; use quadrature".into(),
            ));
        }
        let gm1 = self.gamma - 1.0;
        let eb = (-self.b(x)).exp();
        let mut acc = 0.0;
        for q in 0..p {
            acc += c_q(a, self.gamma, q) * x.powf(a + self.gamma + q as f64 * gm1) * eb;
        }
        acc += gm1.powf(self.gamma)
            * c_q(a, self.gamma, p)
            * self.j_quadrature(x, a + p as f64 * gm1)?;
        Ok(acc)
    }

    /// Truncation of the parts identity without its remainder: accurate for
    /// small x, with the summation stopped at the asymptotically optimal
    /// term. Used internally below the crossover where the remainder is
    /// beneath double precision.
    fn j_expansion(&self, x: f64, a: f64, p: usize) -> f64 {
        let eb = (-self.b(x)).exp();
        if eb == 0.0 {
            return 0.0;
        }
        let gm1 = self.gamma - 1.0;
        let mut acc = 0.0;
        let mut prev = f64::INFINITY;
        for q in 0..p {
            let term = c_q(a, self.gamma, q) * x.powf(a + self.gamma + q as f64 * gm1);
            if term.abs() > prev {
                break;
            }
            acc += term;
            prev = term.abs();
        }
        acc * eb
    }

    /// Upper tail `∫_x^∞ s_γ(y) dy` by the convergent large-argument series
    /// `(1/π) Σ_k (−1)^{k+1} γ^k Γ(αk) sin(πkα) x^{−αk} / k!`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut fact = 1.0;
        let mut small = 0;
        for k in 1..400 {
            let kf = k as f64;
            fact *= kf;
            if !fact.is_finite() {
                break;
            }
            // sin(πkα) vanishes identically at even k when α = 1/2; such
            // zero terms must not trigger the convergence stop.
            let term = (-1.0f64).powi(k + 1) * self.gamma.powf(kf) * gamma_fn(self.alpha * kf)
                * (PI * kf * self.alpha).sin()
                * x.powf(-self.alpha * kf)
                / fact;
            acc += term;
            if term.abs() < 1e-17 * acc.abs().max(1e-300) {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        acc / PI
    }

    /// `∫_0^∞ s_γ = 1` assembled from the three evaluation regimes.
    pub fn total_mass(&self) -> Result<f64> {
        let mid = 40.0;
        let split = x_at_decay(self.gamma, 35.0).min(self.x_switch);
        let below = {
            let gm1 = self.gamma - 1.0;
            let mut acc = 0.0;
            for (n, &sn) in self.s_star.iter().enumerate() {
                let a = n as f64 * gm1 - (self.gamma + 1.0) / 2.0;
                acc += sn * self.j_expansion(split, a, 12);
            }
            acc
        };
        let main = integrate(
            |x| self.density(x).unwrap_or(0.0),
            split,
            mid,
            1e-300,
            self.cfg.rel_tol,
            self.cfg.max_subdivisions,
        )?
        .value;
        Ok(below + main + self.upper_tail(mid))
    }

    /// Numerical Laplace transform of the density.
    pub fn laplace_density(&self, lambda: f64) -> Result<f64> {
        self.laplace_of(lambda, |x| self.density(x))
    }

    /// Numerical Laplace transform of θ.
    pub fn laplace_theta(&self, lambda: f64) -> Result<f64> {
        self.laplace_of(lambda, |x| self.theta(x))
    }

    /// Numerical Laplace transform of s'.
    pub fn laplace_density_deriv(&self, lambda: f64) -> Result<f64> {
        self.laplace_of(lambda, |x| self.density_deriv(x))
    }

    fn laplace_of<F: Fn(f64) -> Result<f64>>(&self, lambda: f64, f: F) -> Result<f64> {
        if lambda <= 0.0 {
            return Err(Error::domain("laplace transform: need λ > 0"));
        }
        let hi = (40.0 / lambda).max(45.0);
        let lo = x_at_decay(self.gamma, 700.0);
        Ok(integrate(
            |x| (-lambda * x).exp() * f(x).unwrap_or(0.0),
            lo,
            hi,
            self.cfg.abs_tol,
            self.cfg.rel_tol.max(1e-10),
            self.cfg.max_subdivisions,
        )?
        .value)
    }
}

/// Leading expansion coefficient `S_0^* = (2π(1−1/γ))^{−1/2} (γ−1)^{(γ+1)/2}`.
fn s0_star(gamma: f64) -> f64 {
    (2.0 * PI * (1.0 - 1.0 / gamma)).powf(-0.5) * (gamma - 1.0).powf((gamma + 1.0) / 2.0)
}

/// Inverse of the decay exponent: the x with `b(x) = target`.
fn x_at_decay(gamma: f64, target: f64) -> f64 {
    (gamma - 1.0) * target.powf(-1.0 / (gamma - 1.0))
}

/// `c_q(a, γ) = (−1)^q (γ−1)^{−(q+1)γ} Π_{1≤k≤q} (a+1+k(γ−1))`,
/// with `c_0 = (γ−1)^{−γ}`.
pub fn c_q(a: f64, gamma: f64, q: usize) -> f64 {
    let gm1 = gamma - 1.0;
    let mut prod = gm1.powf(-gamma);
    for k in 1..=q {
        prod *= -(a + 1.0 + k as f64 * gm1) * gm1.powf(-gamma);
    }
    prod
}

fn v_star_from(s_star: &[f64], gamma: f64) -> Vec<f64> {
    let gm1 = gamma - 1.0;
    let mut v = vec![gm1 * s_star[0]];
    for n in 0..s_star.len() - 1 {
        let nf = n as f64;
        let next = (gm1.powf(gamma) * s_star[n + 1]
            + gm1 * (nf - 0.5 - 1.0 / gm1) * s_star[n]
            - (nf - 0.5 - 1.0 / gamma) * v[n])
            / gm1.powf(gm1);
        v.push(next);
    }
    v
}

fn t_star_from(s_star: &[f64], gamma: f64) -> Vec<f64> {
    let gm1 = gamma - 1.0;
    let mut t = vec![gm1.powf(gamma) * s_star[0]];
    for n in 1..s_star.len() {
        let nf = n as f64;
        t.push(gm1.powf(gamma) * s_star[n] + (nf * gm1 - (3.0 * gamma - 1.0) / 2.0) * s_star[n - 1]);
    }
    t
}

/// Fit the unstarred expansion coefficients S_1..S_n on a geometric grid
/// below the crossover, optionally offsetting the grid (for the split-grid
/// self-consistency check).
fn fit_raw(gamma: f64, n: usize, cfg: &QuadratureConfig, grid_offset: usize) -> Result<SnFit> {
    let npts = 12;
    let gm1 = gamma - 1.0;
    let s0 = s0_star(gamma);
    let temp = StableDensity {
        gamma,
        alpha: gm1 / gamma,
        cfg: *cfg,
        x_switch: 0.0, // force the quadrature branch during the fit
        s_star: vec![s0],
        v_star: vec![],
        t_star: vec![],
        fit_residual: 0.0,
        cum: OnceLock::new(),
    };
    let mut xs = Vec::with_capacity(npts);
    for i in 0..npts {
        let frac = (2 * i + grid_offset) as f64 / (2 * npts) as f64;
        let b = 36.0 + 22.0 * frac;
        xs.push(x_at_decay(gamma, b));
    }
    // Response: s(x) x^{(γ+1)/2} e^{b(x)} / S0* − 1 = Σ κ_n x^{n(γ−1)},
    // with κ_n = S_n (γ−1)^{−n(γ−1)}.
    let mut rows = Vec::with_capacity(npts);
    let mut rhs = Vec::with_capacity(npts);
    for &x in &xs {
        let s = temp.density_quadrature(x)?;
        let resp = s * x.powf((gamma + 1.0) / 2.0) * temp.b(x).exp() / s0 - 1.0;
        let row: Vec<f64> = (1..=n).map(|k| x.powf(k as f64 * gm1)).collect();
        rows.push(row);
        rhs.push(resp);
    }
    // Column-scaled normal equations.
    let mut scale = vec![0.0f64; n];
    for row in &rows {
        for (j, v) in row.iter().enumerate() {
            scale[j] = scale[j].max(v.abs());
        }
    }
    let mut gram = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for (row, &y) in rows.iter().zip(&rhs) {
        for i in 0..n {
            let ri = row[i] / scale[i];
            b[i] += ri * y;
            for j in 0..n {
                gram[i][j] += ri * row[j] / scale[j];
            }
        }
    }
    let kappa_scaled = solve_small(&mut gram, &mut b)?;
    let mut s_out = vec![1.0];
    for k in 1..=n {
        let kappa = kappa_scaled[k - 1] / scale[k - 1];
        s_out.push(kappa * gm1.powf(k as f64 * gm1));
    }
    // Residual of the fit.
    let mut ss = 0.0;
    for (row, &y) in rows.iter().zip(&rhs) {
        let pred: f64 = row
            .iter()
            .enumerate()
            .map(|(j, v)| v * kappa_scaled[j] / scale[j])
            .sum();
        ss += (pred - y) * (pred - y);
    }
    Ok(SnFit {
        s: s_out,
        residual: (ss / npts as f64).sqrt(),
    })
}

fn solve_small(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (piv, &max) = a[col..]
            .iter()
            .map(|r| &r[col])
            .enumerate()
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .unwrap();
        if max.abs() < 1e-13 {
            return Err(Error::Conditioning(1.0 / max.abs().max(1e-300)));
        }
        a.swap(col, col + piv);
        b.swap(col, col + piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Ok(x)
}

/// Experimental fit of S_1..S_n (the expansion coefficients around 0);
/// `s[0]` is forced to 1 and the RMS residual is reported.
pub fn fit_expansion_coeffs(gamma: f64, n: usize) -> Result<SnFit> {
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(Error::domain(
            "expansion-coefficient fit applies to gamma in (1, 2)",
        ));
    }
    if n > 3 {
        return Err(Error::domain("fit order is limited to n ≤ 3"));
    }
    fit_raw(gamma, n, &QuadratureConfig::default(), 0)
}

/// Same fit on a disjoint (offset) grid, for self-consistency checks.
pub fn fit_expansion_coeffs_offset_grid(gamma: f64, n: usize) -> Result<SnFit> {
    fit_raw(gamma, n, &QuadratureConfig::default(), 1)
}
