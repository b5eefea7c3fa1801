//! The stable branching mechanism `Ψ(λ) = λ^γ` and the implicit functions
//! every law formula consumes: the height-tail bijection `v`, the truncated
//! Laplace solution `w` of `∫_{w(y)}^∞ du/(u^γ − 1) = y`, its two-parameter
//! version `w_λ`, and `φ = w − 1`.

use crate::coeffs::{self, TruncatedSeries};
use crate::numeric::{gamma_fn, newton_bisect};
use crate::{Error, Result};

/// A stable index γ ∈ (1, 2] with its derived constants.
#[derive(Debug, Clone, Copy)]
pub struct StableIndex {
    pub gamma: f64,
    /// Normalization of the lifetime density: 1/c_γ = γ Γ((γ−1)/γ).
    pub c_gamma: f64,
    /// δ = 1 − 1/γ.
    pub delta: f64,
}

impl StableIndex {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(Error::domain(format!(
                "stable index must lie in (1, 2], got {gamma}"
            )));
        }
        Ok(StableIndex {
            gamma,
            c_gamma: 1.0 / (gamma * gamma_fn((gamma - 1.0) / gamma)),
            delta: 1.0 - 1.0 / gamma,
        })
    }

    /// Branching mechanism Ψ(λ) = λ^γ.
    pub fn psi(&self, lambda: f64) -> f64 {
        lambda.powf(self.gamma)
    }

    /// Ψ'(λ) = γ λ^{γ−1}.
    pub fn psi_prime(&self, lambda: f64) -> f64 {
        self.gamma * lambda.powf(self.gamma - 1.0)
    }
}

/// Tolerances and branch selection for the implicit solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// The power-series branch of the tail integral is used when
    /// `x^{−γ} ≤ series_cutoff`; closer to 1 the logarithmic branch takes over.
    pub series_cutoff: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_iter: 200,
            series_cutoff: 0.9,
        }
    }
}

/// Solver bundle for one stable index: caches the constant `C0` and the
/// logarithmic-correction series that the near-1 branch of the tail
/// integral needs.
#[derive(Debug, Clone)]
pub struct Branching {
    pub idx: StableIndex,
    pub cfg: SolverConfig,
    c0: f64,
    g: TruncatedSeries,
    x_cut: f64,
    y_cut: f64,
}

impl Branching {
    pub fn new(gamma: f64) -> Result<Self> {
        Branching::with_config(gamma, SolverConfig::default())
    }

    pub fn with_config(gamma: f64, cfg: SolverConfig) -> Result<Self> {
        let idx = StableIndex::new(gamma)?;
        if !(cfg.abs_tol > 0.0 && cfg.rel_tol > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if !(cfg.series_cutoff > 0.0 && cfg.series_cutoff < 1.0) {
            return Err(Error::Validation("series_cutoff must lie in (0,1)".into()));
        }
        let c0 = coeffs::c0(gamma)?;
        let g = coeffs::g_series(gamma, 48);
        let x_cut = cfg.series_cutoff.powf(-1.0 / gamma);
        let y_cut = tail_integral_series(gamma, x_cut);
        Ok(Branching {
            idx,
            cfg,
            c0,
            g,
            x_cut,
            y_cut,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.idx.gamma
    }

    /// C0, the additive constant in `log φ(y) = C0 − γy + G(φ(y))`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Tail of the total height under the excursion measure:
    /// `v(t) = ((γ−1) t)^{−1/(γ−1)}`, the inverse of `t = ∫_v^∞ dλ/λ^γ`.
    pub fn v(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::domain(format!("v: need t > 0, got {t}")));
        }
        let gm1 = self.idx.gamma - 1.0;
        Ok((gm1 * t).powf(-1.0 / gm1))
    }

    /// The point y0 with φ(y0) = 1, i.e. `F(2)`.
    pub fn y0(&self) -> f64 {
        self.tail_integral(2.0).expect("2 is in the domain")
    }

    /// `F(x) = ∫_x^∞ du/(u^γ − 1)` for x > 1.
    ///
    /// Uses the convergent expansion `F(x) = (1/γ) x^{1−γ} Σ x^{−γn}/(n+1−1/γ)`
    /// away from 1 and the logarithmic form `(C0 − ln(x−1) + G(x−1))/γ`
    /// close to 1.
    pub fn tail_integral(&self, x: f64) -> Result<f64> {
        if x <= 1.0 {
            return Err(Error::domain(format!("tail integral needs x > 1, got {x}")));
        }
        let gamma = self.idx.gamma;
        if x.powf(-gamma) <= self.cfg.series_cutoff {
            Ok(tail_integral_series(gamma, x))
        } else {
            let phi = x - 1.0;
            Ok((self.c0 - phi.ln() + self.g.eval(phi)) / gamma)
        }
    }

    /// `w(y)`: the unique solution in (1, ∞) of `∫_{w}^∞ du/(u^γ − 1) = y`.
    pub fn w(&self, y: f64) -> Result<f64> {
        Ok(1.0 + self.phi(y)?)
    }

    /// The tail integral evaluated at `x = 1 + φ` without forming `1 + φ`,
    /// which keeps full precision when φ is tiny.
    pub fn tail_integral_from_phi(&self, phi: f64) -> Result<f64> {
        if phi <= 0.0 {
            return Err(Error::domain("tail integral needs phi > 0"));
        }
        if phi <= self.x_cut - 1.0 {
            Ok((self.c0 - phi.ln() + self.g.eval(phi)) / self.idx.gamma)
        } else {
            self.tail_integral(1.0 + phi)
        }
    }

    /// `φ(y) = w(y) − 1`, evaluated without cancellation for large y.
    pub fn phi(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Err(Error::domain(format!("phi: need y > 0, got {y}")));
        }
        let gamma = self.idx.gamma;
        if y < self.y_cut {
            // Solve F(x) = y with the power-series branch; bracket from
            // v(y) ≤ w(y) ≤ v(y) + 1. For huge v the +1 falls below one ulp,
            // so widen the bracket multiplicatively as well.
            let seed = self.v(y)?;
            // nudge the low edge so series roundoff cannot flip its sign
            let lo = (seed * (1.0 - 1e-9)).max(self.x_cut);
            let hi = (seed + 1.0 + 1e-9).max(seed * (1.0 + 4e-12));
            let f = |x: f64| tail_integral_series(gamma, x) - y;
            let df = |x: f64| -1.0 / (x.powf(gamma) - 1.0);
            let x = newton_bisect(f, df, seed.max(lo), lo, hi, self.cfg.abs_tol, self.cfg.max_iter)?;
            Ok(x - 1.0)
        } else if gamma * y - self.c0 > 700.0 {
            // φ would underflow to zero at double precision.
            Ok(0.0)
        } else {
            // Solve C0 − L + G(e^L) = γ y for L = ln φ, which keeps the
            // answer accurate in relative terms however small φ gets.
            let target = gamma * y;
            let seed = self.c0 - target;
            let lo = seed - 1.5;
            let hi = (self.x_cut - 1.0).ln();
            let f = |l: f64| self.c0 - l + self.g.eval(l.exp()) - target;
            let df = |l: f64| -1.0 + self.g_prime(l.exp()) * l.exp();
            let l = newton_bisect(f, df, seed.min(hi), lo, hi, self.cfg.abs_tol, self.cfg.max_iter)?;
            Ok(l.exp())
        }
    }

    fn g_prime(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        let mut pw = 1.0;
        for k in 1..=self.g.order() {
            acc += k as f64 * self.g.coeff(k) * pw;
            pw *= p;
        }
        acc
    }

    /// `w_λ(a) = λ^{1/γ} w(a λ^{(γ−1)/γ})`, the solution of
    /// `∫_{w_λ(a)}^∞ du/(u^γ − λ) = a`.
    pub fn w_lambda(&self, a: f64, lambda: f64) -> Result<f64> {
        if a <= 0.0 || lambda <= 0.0 {
            return Err(Error::domain(format!(
                "w_lambda: need a, λ > 0, got ({a}, {lambda})"
            )));
        }
        let gamma = self.idx.gamma;
        let scale = lambda.powf((gamma - 1.0) / gamma);
        Ok(lambda.powf(1.0 / gamma) * self.w(a * scale)?)
    }
}

/// Power-series branch of the tail integral, valid for any x > 1 and
/// rapidly convergent once `x^{−γ}` is bounded away from 1.
fn tail_integral_series(gamma: f64, x: f64) -> f64 {
    let q = x.powf(-gamma);
    let mut acc = 0.0;
    let mut p = 1.0;
    let mut n = 0.0;
    loop {
        let term = p / (n + 1.0 - 1.0 / gamma);
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() || n > 100_000.0 {
            break;
        }
        p *= q;
        n += 1.0;
    }
    x.powf(1.0 - gamma) * acc / gamma
}
