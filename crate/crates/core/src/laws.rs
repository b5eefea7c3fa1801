//! Evaluable distribution laws of stable Lévy trees: the diameter law under
//! the excursion measure, the conditional diameter law given the height, the
//! joint Laplace functional, the height/diameter tails of the tree
//! normalized to unit lifetime, first moments by two independent routes, and
//! the Laplace-transform consistency checks tying them together.

use crate::branching::Branching;
use crate::coeffs::{self, TruncatedSeries};
use crate::numeric::{digamma, gamma_fn, integrate};
use crate::stablefn::{QuadratureConfig, StableDensity};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Number of terms the tail series may use before refusing the evaluation.
const MAX_SERIES_TERMS: usize = 64;

/// A sampled curve (tail, density, or conditional law) on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct TailCurve {
    pub kind: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// First moments of the normalized tree with the evaluation routes used.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub gamma: f64,
    pub mean_height: f64,
    pub mean_diam: f64,
    pub ratio: f64,
    pub mean_height_series: f64,
    pub mean_height_quadrature: f64,
    pub mean_diam_quadrature: f64,
    pub mean_diam_series: f64,
    pub method: String,
}

/// Both evaluation routes of one moment.
#[derive(Debug, Clone, Copy)]
pub struct MomentRoutes {
    pub series: f64,
    pub quadrature: f64,
}

/// Outcome of the forward Laplace-transform comparison.
#[derive(Debug, Clone, Serialize)]
pub struct LaplaceReport {
    pub gamma: f64,
    pub lambdas: Vec<f64>,
    pub height_rel_err: Vec<f64>,
    pub diam_rel_err: Vec<f64>,
    pub max_rel_err: f64,
    pub truncation_warning: Option<String>,
}

/// The asymptotic exponents of the four tail regimes on an r-grid, plus the
/// closed-form constants of the small-r laws.
#[derive(Debug, Clone, Serialize)]
pub struct Table1Report {
    pub gamma: f64,
    pub grid: Vec<f64>,
    /// −log N_nr(Γ > r) leading order, large r.
    pub height_large_r: Vec<f64>,
    /// −log N_nr(D > r) leading order, large r.
    pub diam_large_r: Vec<f64>,
    /// −log N_nr(Γ ≤ r) leading order, small r.
    pub height_small_r: Vec<f64>,
    /// −log N_nr(D ≤ r) leading order, small r.
    pub diam_small_r: Vec<f64>,
    pub lambda_cr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_small: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cprime_small: Option<f64>,
    /// At γ = 2: the prefactors of the two small-r closed forms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brownian_small_r_prefactors: Option<(f64, f64)>,
}

/// Law evaluator for one stable index.
pub struct Laws {
    pub br: Branching,
    pub sd: StableDensity,
    beta: Vec<f64>,
    gamma_n: Vec<f64>,
    delta_n: Vec<f64>,
    pub constants: coeffs::Constants,
    refusal_height: OnceLock<f64>,
    refusal_diam: OnceLock<f64>,
}

impl Laws {
    pub fn new(gamma: f64) -> Result<Self> {
        Laws::with_config(
            gamma,
            crate::branching::SolverConfig::default(),
            QuadratureConfig {
                abs_tol: 1e-300,
                rel_tol: 1e-12,
                max_subdivisions: 8000,
                small_x_switch: None,
            },
        )
    }

    pub fn with_config(
        gamma: f64,
        solver: crate::branching::SolverConfig,
        quad: QuadratureConfig,
    ) -> Result<Self> {
        let br = Branching::with_config(gamma, solver)?;
        let sd = StableDensity::new(gamma, quad)?;
        let beta = coeffs::beta_coeffs(gamma, MAX_SERIES_TERMS)?;
        let (gamma_n, delta_n) = coeffs::gammadelta_coeffs(gamma, MAX_SERIES_TERMS)?;
        let constants = coeffs::constants(gamma)?;
        Ok(Laws {
            br,
            sd,
            beta,
            gamma_n,
            delta_n,
            constants,
            refusal_height: OnceLock::new(),
            refusal_diam: OnceLock::new(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.br.gamma()
    }

    fn c_gamma(&self) -> f64 {
        self.br.idx.c_gamma
    }

    // ----- laws under the (unnormalized) excursion measure -----

    /// Tail of the diameter under the excursion measure:
    /// `N(D > 2r) = v(r) − Ψ(v(r))² ∫_{v(r)}^∞ dλ/Ψ(λ)²`,
    /// where the integral is `v(r)^{1−2γ}/(2γ−1)` for `Ψ(λ) = λ^γ`.
    pub fn diam_tail_measure(&self, r: f64) -> Result<f64> {
        let gamma = self.gamma();
        let v = self.br.v(r)?;
        let inner = v.powf(1.0 - 2.0 * gamma) / (2.0 * gamma - 1.0);
        Ok(v - v.powf(2.0 * gamma) * inner)
    }

    /// Density of the diameter under the excursion measure, at diameter `s`:
    /// `φ(2r) = Ψ(v(r)) − Ψ(v(r))² Ψ'(v(r)) ∫_{v(r)}^∞ dλ/Ψ(λ)²`.
    pub fn diam_density(&self, s: f64) -> Result<f64> {
        let gamma = self.gamma();
        let v = self.br.v(s / 2.0)?;
        let inner = v.powf(1.0 - 2.0 * gamma) / (2.0 * gamma - 1.0);
        Ok(self.br.idx.psi(v) - self.br.idx.psi(v).powi(2) * self.br.idx.psi_prime(v) * inner)
    }

    /// Conditional law of the diameter given total height r:
    /// `P(D ≤ y | Γ = r) = Ψ(v(y/2))² / (Ψ(v(r)) Ψ(v(y−r)))` on r < y < 2r,
    /// 0 at or below r and 1 at or beyond 2r.
    pub fn cond_diam_given_height(&self, y: f64, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::domain("cond_diam_given_height: need r > 0"));
        }
        if y <= r {
            return Ok(0.0);
        }
        if y >= 2.0 * r {
            return Ok(1.0);
        }
        let psi_v = |t: f64| -> Result<f64> { Ok(self.br.idx.psi(self.br.v(t)?)) };
        Ok(psi_v(y / 2.0)?.powi(2) / (psi_v(r)? * psi_v(y - r)?))
    }

    /// Joint Laplace functional at rate 1:
    /// `L_1(y, z) = w(y∨z) − 1 − (1/γ) 1_{z<2y} (w(y)^γ−1)²
    ///              (w(m)/(w(m)^γ−1) − (γ−1)m)`, with m = y ∧ (2y − z).
    pub fn l1(&self, y: f64, z: f64) -> Result<f64> {
        if y < 0.0 || z < 0.0 || (y == 0.0 && z == 0.0) {
            return Err(Error::domain(format!(
                "l1: need y, z ≥ 0, not both zero; got ({y}, {z})"
            )));
        }
        let gamma = self.gamma();
        let top = self.br.w(y.max(z))? - 1.0;
        if z >= 2.0 * y {
            return Ok(top);
        }
        let m = y.min(2.0 * y - z);
        let wy = self.br.w(y)?;
        let wm = self.br.w(m)?;
        let py = wy.powf(gamma) - 1.0;
        let pm = wm.powf(gamma) - 1.0;
        Ok(top - py * py / gamma * (wm / pm - (gamma - 1.0) * m))
    }

    /// Joint Laplace functional at rate λ via the scaling relation
    /// `L_λ(y, z) = λ^{1/γ} L_1(λ^{(γ−1)/γ} y, λ^{(γ−1)/γ} z)`.
    pub fn l_lambda(&self, y: f64, z: f64, lambda: f64) -> Result<f64> {
        if lambda <= 0.0 {
            return Err(Error::domain("l_lambda: need λ > 0"));
        }
        let gamma = self.gamma();
        let s = lambda.powf((gamma - 1.0) / gamma);
        Ok(lambda.powf(1.0 / gamma) * self.l1(s * y, s * z)?)
    }

    /// The diameter-side expansion `Σ_{n≥2} (n γ_n y + δ_n) e^{−γny}`,
    /// valid beyond the expansion radius; dual route for `l1(y, 0)`.
    pub fn l1_series(&self, y: f64) -> f64 {
        let gamma = self.gamma();
        let mut acc = 0.0;
        for n in 2..self.gamma_n.len() {
            let e = (-gamma * n as f64 * y).exp();
            acc += (n as f64 * self.gamma_n[n] * y + self.delta_n[n]) * e;
        }
        acc
    }

    // ----- normalized laws -----

    /// Height tail of the normalized tree through the kernel series
    /// `c_γ N_nr(Γ > r) = Σ_n β_n ξ(nr)`.
    pub fn height_tail_series(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::domain("height tail: need r > 0"));
        }
        let mut acc = 0.0;
        let mut small = 0;
        let mut biggest: f64 = 0.0;
        for n in 1..=MAX_SERIES_TERMS {
            let term = self.beta[n] * self.sd.xi(n as f64 * r)?;
            acc += term;
            biggest = biggest.max(term.abs());
            if term.abs() <= 1e-16 * acc.abs().max(1e-300) {
                small += 1;
                if small >= 2 {
                    // cancellation guard: refuse once the kernel-evaluation
                    // precision on the largest term costs more than 1e−10 of
                    // the sum (the expansions are exact at γ = 2)
                    let eval_eps = if self.gamma() == 2.0 { 1e-15 } else { 1e-12 };
                    if biggest * eval_eps > 1e-10 * acc.abs().max(1e-300) {
                        break;
                    }
                    return Ok((acc / self.c_gamma()).clamp(0.0, 1.0));
                }
            } else {
                small = 0;
            }
        }
        Err(Error::UnsupportedRange(format!(
            "height tail series loses accuracy at r={r} \
             (below the supported radius for gamma={})",
            self.gamma()
        )))
    }

    /// Diameter tail `N_nr(D > r)` through
    /// `c_γ N_nr(D > 2r') = Σ_{n≥2} γ_n ξ̄(nr') + δ_n ξ(nr')` at r' = r/2.
    pub fn diam_tail_series(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::domain("diam tail: need r > 0"));
        }
        let half = r / 2.0;
        let mut acc = 0.0;
        let mut small = 0;
        let mut biggest: f64 = 0.0;
        for n in 2..=MAX_SERIES_TERMS {
            let nr = n as f64 * half;
            let t1 = self.gamma_n[n] * self.sd.xi_bar(nr)?;
            let t2 = self.delta_n[n] * self.sd.xi(nr)?;
            let term = t1 + t2;
            acc += term;
            biggest = biggest.max(t1.abs()).max(t2.abs());
            if term.abs() <= 1e-16 * acc.abs().max(1e-300) {
                small += 1;
                if small >= 2 {
                    let eval_eps = if self.gamma() == 2.0 { 1e-15 } else { 1e-12 };
                    if biggest * eval_eps > 1e-10 * acc.abs().max(1e-300) {
                        break;
                    }
                    return Ok((acc / self.c_gamma()).clamp(0.0, 1.0));
                }
            } else {
                small = 0;
            }
        }
        Err(Error::UnsupportedRange(format!(
            "diameter tail series loses accuracy at r={r} \
             (below the supported radius for gamma={})",
            self.gamma()
        )))
    }

    /// `N_nr(Γ > r)`: Brownian closed forms at γ = 2 (theta-function form
    /// below r = 0.6), kernel series otherwise.
    pub fn nr_height_tail(&self, r: f64) -> Result<f64> {
        if self.gamma() == 2.0 {
            if r <= 0.0 {
                return Err(Error::domain("height tail: need r > 0"));
            }
            Ok(if r < 0.6 {
                1.0 - brownian_height_cdf_small(r)
            } else {
                brownian_height_tail(r)
            })
        } else {
            self.height_tail_series(r)
        }
    }

    /// `N_nr(Γ ≤ r)`.
    pub fn nr_height_cdf(&self, r: f64) -> Result<f64> {
        if self.gamma() == 2.0 {
            if r <= 0.0 {
                return Err(Error::domain("height cdf: need r > 0"));
            }
            Ok(if r < 0.6 {
                brownian_height_cdf_small(r)
            } else {
                1.0 - brownian_height_tail(r)
            })
        } else {
            Ok(1.0 - self.height_tail_series(r)?)
        }
    }

    /// `N_nr(D > r)`.
    pub fn nr_diam_tail(&self, r: f64) -> Result<f64> {
        if self.gamma() == 2.0 {
            if r <= 0.0 {
                return Err(Error::domain("diam tail: need r > 0"));
            }
            Ok(if r < 1.2 {
                1.0 - brownian_diam_cdf_small(r)
            } else {
                brownian_diam_tail(r)
            })
        } else {
            self.diam_tail_series(r)
        }
    }

    /// `N_nr(D ≤ r)`.
    pub fn nr_diam_cdf(&self, r: f64) -> Result<f64> {
        if self.gamma() == 2.0 {
            if r <= 0.0 {
                return Err(Error::domain("diam cdf: need r > 0"));
            }
            Ok(if r < 1.2 {
                brownian_diam_cdf_small(r)
            } else {
                1.0 - brownian_diam_tail(r)
            })
        } else {
            Ok(1.0 - self.diam_tail_series(r)?)
        }
    }

    /// Smallest height-tail radius the series supports for this index.
    pub fn refusal_radius_height(&self) -> f64 {
        *self.refusal_height.get_or_init(|| {
            if self.gamma() == 2.0 {
                return 0.0;
            }
            scan_refusal(|r| self.height_tail_series(r).is_ok())
        })
    }

    /// Smallest diameter-tail radius the series supports for this index.
    pub fn refusal_radius_diam(&self) -> f64 {
        *self.refusal_diam.get_or_init(|| {
            if self.gamma() == 2.0 {
                return 0.0;
            }
            scan_refusal(|r| self.diam_tail_series(r).is_ok())
        })
    }

    /// Leading small-r behaviour of `N_nr(Γ ≤ r)` for γ < 2, reported where
    /// the series refuses: `C r^{γ+2+1/(γ−1)} exp(−λ_cr r^{−γ/(γ−1)})`.
    pub fn small_r_asymptote_height(&self, r: f64) -> Result<f64> {
        let gamma = self.gamma();
        let (c, _) = coeffs::small_r_constants(gamma)?;
        let lcr = self.constants.lambda_cr;
        Ok(c * r.powf(gamma + 2.0 + 1.0 / (gamma - 1.0))
            * (-lcr * r.powf(-gamma / (gamma - 1.0))).exp())
    }

    /// Leading small-r behaviour of `N_nr(D ≤ 2r)` for γ < 2:
    /// `C' r^{γ+1} exp(−λ_cr r^{−γ/(γ−1)})`.
    pub fn small_r_asymptote_diam(&self, r: f64) -> Result<f64> {
        let gamma = self.gamma();
        let (_, cp) = coeffs::small_r_constants(gamma)?;
        let lcr = self.constants.lambda_cr;
        Ok(cp * r.powf(gamma + 1.0) * (-lcr * r.powf(-gamma / (gamma - 1.0))).exp())
    }

    /// The large-r normalized height quantity
    /// `(1/C1) r^{−1−γ/2} e^{r^γ} N_nr(Γ > r (γ−1)^{−(γ−1)/γ})`, which tends
    /// to 1 with corrections `Σ V_n r^{−nγ}`.
    pub fn height_tail_normalized_large_r(&self, r: f64) -> Result<f64> {
        let gamma = self.gamma();
        let arg = r * (gamma - 1.0).powf(-(gamma - 1.0) / gamma);
        let tail = self.nr_height_tail(arg)?;
        Ok(tail / self.constants.c1 * r.powf(-1.0 - gamma / 2.0) * r.powf(gamma).exp())
    }

    /// Same normalization for the diameter:
    /// `(1/C2) r^{−1−3γ/2} e^{r^γ} N_nr(D > r (γ−1)^{−(γ−1)/γ})`.
    pub fn diam_tail_normalized_large_r(&self, r: f64) -> Result<f64> {
        let gamma = self.gamma();
        let arg = r * (gamma - 1.0).powf(-(gamma - 1.0) / gamma);
        let tail = self.nr_diam_tail(arg)?;
        Ok(tail / self.constants.c2 * r.powf(-1.0 - 1.5 * gamma) * r.powf(gamma).exp())
    }

    // ----- moments -----

    /// Mean height of the normalized tree by quadrature and by the
    /// digamma-series closed form.
    pub fn moment_height(&self) -> Result<MomentRoutes> {
        let gamma = self.gamma();
        let delta = 1.0 - 1.0 / gamma;
        let pref = 2.0f64.powf(-1.0 + 2.0 / gamma) * PI.sqrt() / gamma_fn(1.5 - 1.0 / gamma);
        // Quadrature over v = t^{γ/(γ−1)}, which removes the v^{−1/γ}
        // endpoint singularity: the factor (1−v^{(γ−1)/γ}) becomes (1−t).
        let p = gamma / (gamma - 1.0);
        let integral = integrate(
            |t| {
                if t >= 1.0 - 1e-14 {
                    return p * (gamma - 1.0) / (gamma * gamma);
                }
                let v = t.powf(p);
                p * (1.0 - t.powf(p / gamma)) * (1.0 - t) / ((1.0 - v) * (1.0 - v))
            },
            0.0,
            1.0,
            1e-14,
            1e-12,
            4000,
        )?
        .value;
        let quadrature = pref * integral;

        // Series route: partial fractions of the summand reduce the sum to
        // digamma values.
        let a = 1.0 / delta;
        let b = -1.0 / (1.0 - delta);
        let c = -(1.0 - 2.0 * delta) / (delta * (1.0 - delta));
        let sum =
            -a * digamma(1.0 + delta) - b * digamma(2.0 + delta) - c * digamma(1.0 + 2.0 * delta);
        let pref2 = PI.sqrt() * 2.0f64.powf(-2.0 * delta) / gamma_fn(0.5 + delta);
        let series =
            pref2 * (1.0 / delta - 2.0 * delta / (1.0 + delta) + 2.0 * delta * (1.0 - delta) * sum);
        Ok(MomentRoutes { series, quadrature })
    }

    /// Mean diameter of the normalized tree by two independent routes:
    /// quadrature of the W-integrand (with an exact series tail beyond the
    /// finite window), and integration of the kernel tail series,
    /// `N_nr[D] = ∫_0^∞ N_nr(D > r) dr`. Below the refusal radius of the
    /// series the tail is 1 at double precision (the lower tail decays as
    /// `exp(−λ_cr (r/2)^{−γ/(γ−1)})`), so that region contributes exactly
    /// its length.
    pub fn moment_diam(&self) -> Result<MomentRoutes> {
        let gamma = self.gamma();
        let pref = 2.0f64.powf(2.0 / gamma) * PI.sqrt() / gamma_fn(1.5 - 1.0 / gamma);
        let x_max = 40.0;
        let finite = integrate(
            |x| self.diam_moment_integrand(x),
            1.0,
            x_max,
            1e-13,
            1e-11,
            8000,
        )?
        .value;
        let quadrature = pref * (finite + self.diam_moment_tail(x_max));

        let r_min = if self.gamma() == 2.0 {
            1e-8
        } else {
            let r = self.refusal_radius_diam();
            if !r.is_finite() {
                return Err(Error::UnsupportedRange(
                    "diameter tail series unsupported at this index".into(),
                ));
            }
            r
        };
        let r_max = 2.0 * (45.0 / (gamma - 1.0).powf(gamma - 1.0)).powf(1.0 / gamma) + r_min;
        let series = r_min
            + integrate(
                |r| self.nr_diam_tail(r).unwrap_or(1.0),
                r_min,
                r_max,
                1e-13,
                1e-10,
                8000,
            )?
            .value;
        Ok(MomentRoutes { series, quadrature })
    }

    /// Integrand of the diameter moment:
    /// `W(x) = 2(γ−1)² x^{γ−1}(x^γ−1) F(x)² − ((γ−1)(2γ+1)/γ)(x^γ−1) F(x)
    ///        − (x−1)/(x^γ−1) + x/γ` with F the tail integral.
    fn diam_moment_integrand(&self, x: f64) -> f64 {
        let gamma = self.gamma();
        if x <= 1.0 {
            // all four terms cancel in pairs in the x → 1+ limit
            return 0.0;
        }
        let f = self.br.tail_integral(x).unwrap_or(0.0);
        let pg = x.powf(gamma) - 1.0;
        2.0 * (gamma - 1.0) * (gamma - 1.0) * x.powf(gamma - 1.0) * pg * f * f
            - (gamma - 1.0) * (2.0 * gamma + 1.0) / gamma * pg * f
            - (x - 1.0) / pg
            + x / gamma
    }

    /// Exact tail `∫_X^∞ W` via the two power families of W's large-x
    /// expansion: `W(x) = x·A(ε) + B(ε)` with `ε = x^{−γ}` and B(ε) = ε/(1−ε).
    fn diam_moment_tail(&self, x_max: f64) -> f64 {
        let gamma = self.gamma();
        let order = 30usize;
        // G(ε) = (1/γ) Σ ε^n/(n+1−1/γ), so that F(x) = x ε G(ε).
        let g = TruncatedSeries::new(
            (0..=order)
                .map(|n| 1.0 / (gamma * (n as f64 + 1.0 - 1.0 / gamma)))
                .collect(),
        );
        let mut omc = vec![0.0; order + 1];
        omc[0] = 1.0;
        omc[1] = -1.0;
        let one_minus_eps = TruncatedSeries::new(omc);
        let g2 = g.mul(&g);
        let term1 = g2
            .mul(&one_minus_eps)
            .scale(2.0 * (gamma - 1.0) * (gamma - 1.0));
        let term2 = g
            .mul(&one_minus_eps)
            .scale(-(gamma - 1.0) * (2.0 * gamma + 1.0) / gamma);
        let mut c = term1.add(&term2).coeffs().to_vec();
        c[0] += 1.0 / gamma;
        for ck in c.iter_mut().skip(1) {
            *ck -= 1.0;
        }
        let a = TruncatedSeries::new(c);
        debug_assert!(a.coeff(0).abs() < 1e-10 && a.coeff(1).abs() < 1e-10);
        let eps = x_max.powf(-gamma);
        let mut tail = 0.0;
        // x·ε^k family: ∫_X^∞ x^{1−kγ} dx = X^{2−kγ}/(kγ−2), k ≥ 2.
        let mut ek = eps * eps;
        for k in 2..=order {
            tail += a.coeff(k) * x_max * x_max * ek / (k as f64 * gamma - 2.0);
            ek *= eps;
        }
        // ε^k family with unit coefficients: ∫_X^∞ x^{−kγ} dx.
        let mut ek = eps;
        for k in 1..=order {
            tail += x_max * ek / (k as f64 * gamma - 1.0);
            ek *= eps;
        }
        tail
    }

    pub fn moment_report(&self) -> Result<MomentReport> {
        let h = self.moment_height()?;
        let d = self.moment_diam()?;
        // The height series is a digamma closed form, exact at every index;
        // the diameter tail-series route loses its footing as γ → 1 (the
        // supported radius grows into the bulk of the law), so the
        // W-quadrature with its analytic tail is the primary value there.
        Ok(MomentReport {
            gamma: self.gamma(),
            mean_height: h.series,
            mean_diam: d.quadrature,
            ratio: d.quadrature / h.series,
            mean_height_series: h.series,
            mean_height_quadrature: h.quadrature,
            mean_diam_quadrature: d.quadrature,
            mean_diam_series: d.series,
            method: "height: digamma closed form (quadrature cross-check); \
                     diam: W-quadrature (tail-series cross-check)"
                .into(),
        })
    }

    // ----- Laplace cross-checks -----

    /// Forward-integrate the series-built tail transforms and compare with
    /// the closed forms `λ^{1/γ}(w(λ^{(γ−1)/γ})−1)` (height) and
    /// `λ^{1/γ} L_1(λ^{(γ−1)/γ}, 0)` (diameter).
    pub fn laplace_crosscheck(&self, lambda_grid: &[f64]) -> Result<LaplaceReport> {
        let gamma = self.gamma();
        let cg = self.c_gamma();
        let exp_pow = (gamma - 1.0) / gamma;
        // x-domain where the series supports the tails
        let r_min_h = self.refusal_radius_height().max(1e-9);
        let r_min_d = self.refusal_radius_diam().max(2e-9);
        let x_hi_h_series = r_min_h.powf(-1.0 / exp_pow);
        let x_hi_d_series = (r_min_d / 2.0).powf(-1.0 / exp_pow);
        // x below which the tails underflow entirely
        let r_big = (720.0 / (gamma - 1.0).powf(gamma - 1.0)).powf(1.0 / gamma);
        let x_lo = r_big.powf(-1.0 / exp_pow);
        let mut height_rel = Vec::with_capacity(lambda_grid.len());
        let mut diam_rel = Vec::with_capacity(lambda_grid.len());
        let mut max_rel: f64 = 0.0;
        let mut warning = None;
        for &lam in lambda_grid {
            if lam <= 0.0 {
                return Err(Error::domain("laplace_crosscheck: λ must be positive"));
            }
            // the analytic continuation runs to x_stop = max(45/λ, …);
            // warn only if mass beyond that could exceed the tolerance
            let x_stop = 48.0 / lam;
            // the e^{−λx} factor caps the useful domain regardless of the
            // supported series radius
            let x_hi_h = x_hi_h_series.min(48.0 / lam);
            let x_hi_d = x_hi_d_series.min(48.0 / lam);
            let trunc = (-lam * x_stop).exp();
            if trunc > 1e-8 {
                warning = Some(format!(
                    "integrand tail bound e^(-lambda x) = {trunc:.2e} at the \
                     integration stop x={x_stop:.3} exceeds tolerance"
                ));
            }
            let lhs_h = integrate(
                |x| {
                    let r = x.powf(-exp_pow);
                    match self.nr_height_tail(r) {
                        Ok(t) => (-lam * x).exp() * cg * x.powf(-1.0 - 1.0 / gamma) * t,
                        Err(_) => 0.0,
                    }
                },
                x_lo,
                x_hi_h,
                1e-300,
                1e-10,
                8000,
            )?
            .value
                + self.refused_region_transform(lam, x_hi_h, true)?;
            let rhs_h = lam.powf(1.0 / gamma) * (self.br.w(lam.powf(exp_pow))? - 1.0);
            let rel_h = ((lhs_h - rhs_h) / rhs_h).abs();

            let lhs_d = integrate(
                |x| {
                    let r = x.powf(-exp_pow);
                    match self.nr_diam_tail(2.0 * r) {
                        Ok(t) => (-lam * x).exp() * cg * x.powf(-1.0 - 1.0 / gamma) * t,
                        Err(_) => 0.0,
                    }
                },
                x_lo,
                x_hi_d,
                1e-300,
                1e-10,
                8000,
            )?
            .value
                + self.refused_region_transform(lam, x_hi_d, false)?;
            let rhs_d = lam.powf(1.0 / gamma) * self.l1(lam.powf(exp_pow), 0.0)?;
            let rel_d = ((lhs_d - rhs_d) / rhs_d).abs();

            max_rel = max_rel.max(rel_h).max(rel_d);
            height_rel.push(rel_h);
            diam_rel.push(rel_d);
        }
        Ok(LaplaceReport {
            gamma,
            lambdas: lambda_grid.to_vec(),
            height_rel_err: height_rel,
            diam_rel_err: diam_rel,
            max_rel_err: max_rel,
            truncation_warning: warning,
        })
    }

    /// Contribution to the forward transforms from beyond the supported
    /// series radius, where the tail is 1 up to the lower-tail mass; the
    /// leading small-r asymptote stands in for that mass (exact at double
    /// precision for all but indices very close to 2).
    fn refused_region_transform(&self, lam: f64, x_from: f64, height: bool) -> Result<f64> {
        if self.gamma() == 2.0 || !x_from.is_finite() {
            return Ok(0.0);
        }
        let gamma = self.gamma();
        let cg = self.c_gamma();
        let exp_pow = (gamma - 1.0) / gamma;
        let x_stop = (45.0 / lam).max(2.0 * x_from);
        if x_stop <= x_from {
            return Ok(0.0);
        }
        Ok(integrate(
            |x| {
                let r = x.powf(-exp_pow);
                let cdf = if height {
                    self.small_r_asymptote_height(r).unwrap_or(0.0)
                } else {
                    self.small_r_asymptote_diam(r).unwrap_or(0.0)
                };
                (-lam * x).exp() * cg * x.powf(-1.0 - 1.0 / gamma) * (1.0 - cdf)
            },
            x_from,
            x_stop,
            1e-300,
            1e-10,
            8000,
        )?
        .value)
    }

    // ----- asymptotic-exponent table -----

    pub fn table1(&self, grid: &[f64]) -> Result<Table1Report> {
        let gamma = self.gamma();
        let mut h_large = Vec::with_capacity(grid.len());
        let mut d_large = Vec::with_capacity(grid.len());
        let mut h_small = Vec::with_capacity(grid.len());
        let mut d_small = Vec::with_capacity(grid.len());
        for &r in grid {
            if r <= 0.0 {
                return Err(Error::domain("table1: grid must be positive"));
            }
            if gamma == 2.0 {
                h_large.push(r * r);
                d_large.push(r * r);
                h_small.push(PI * PI / (r * r));
                d_small.push(4.0 * PI * PI / (r * r));
            } else {
                let lead = (gamma - 1.0).powf(gamma - 1.0) * r.powf(gamma);
                h_large.push(lead);
                d_large.push(lead);
                let expo = -gamma / (gamma - 1.0);
                h_small.push((gamma * (PI / gamma).sin() / PI * r).powf(expo));
                d_small.push((gamma * (PI / gamma).sin() / (2.0 * PI) * r).powf(expo));
            }
        }
        let (c_small, cprime_small) = match coeffs::small_r_constants(gamma) {
            Ok((c, cp)) => (Some(c), Some(cp)),
            Err(_) => (None, None),
        };
        Ok(Table1Report {
            gamma,
            grid: grid.to_vec(),
            height_large_r: h_large,
            diam_large_r: d_large,
            height_small_r: h_small,
            diam_small_r: d_small,
            lambda_cr: self.constants.lambda_cr,
            c_small,
            cprime_small,
            brownian_small_r_prefactors: if gamma == 2.0 {
                Some((4.0 * PI.powf(2.5), 2.0f64.powi(12) / 3.0 * PI.powf(6.5)))
            } else {
                None
            },
        })
    }
}

fn scan_refusal(ok: impl Fn(f64) -> bool) -> f64 {
    // Grow until the series settles (the supported radius can exceed the
    // starting point for indices near 1), then walk back down to its edge.
    let mut r = 4.0;
    while !ok(r) {
        r *= 1.3;
        if r > 1e5 {
            return f64::INFINITY;
        }
    }
    let mut last_good = r;
    while r > 1e-3 {
        if ok(r) {
            last_good = r;
            r *= 0.95;
        } else {
            break;
        }
    }
    last_good * 1.02
}

// ----- Brownian closed forms -----

/// `N_nr(Γ > r) = 2 Σ_{n≥1} (2n²r² − 1) e^{−n²r²}`.
pub fn brownian_height_tail(r: f64) -> f64 {
    let mut acc = 0.0f64;
    for n in 1..400 {
        let nr2 = (n * n) as f64 * r * r;
        let e = (-nr2).exp();
        if n > 2 && e * nr2 < 1e-20 * acc.abs().max(1e-300) {
            break;
        }
        acc += 2.0 * (2.0 * nr2 - 1.0) * e;
    }
    acc.clamp(0.0, 1.0)
}

/// `N_nr(Γ ≤ r) = (4π^{5/2}/r³) Σ_{n≥1} n² e^{−n²π²/r²}`.
pub fn brownian_height_cdf_small(r: f64) -> f64 {
    let mut acc = 0.0f64;
    for n in 1..400u64 {
        let a = (n * n) as f64 * PI * PI / (r * r);
        let e = (-a).exp();
        if n > 1 && (n * n) as f64 * e < 1e-20 * acc.abs().max(1e-300) {
            break;
        }
        acc += (n * n) as f64 * e;
    }
    (4.0 * PI.powf(2.5) / (r * r * r) * acc).clamp(0.0, 1.0)
}

/// `N_nr(D > r) = Σ_{n≥2} (n²−1) ((1/6)n⁴r⁴ − 2n²r² + 2) e^{−n²r²/4}`.
pub fn brownian_diam_tail(r: f64) -> f64 {
    let mut acc = 0.0f64;
    for n in 2..400 {
        let n2 = (n * n) as f64;
        let q = n2 * r * r;
        let e = (-q / 4.0).exp();
        if n > 3 && e * q * q < 1e-20 * acc.abs().max(1e-300) {
            break;
        }
        acc += (n2 - 1.0) * (q * q / 6.0 - 2.0 * q + 2.0) * e;
    }
    acc.clamp(0.0, 1.0)
}

/// `N_nr(D ≤ r) = (√π/3) Σ_{n≥1} ((8/r³)(24a − 36a² + 8a³) + (16/r)a²) e^{−a}`
/// with `a = 4(πn/r)²`.
pub fn brownian_diam_cdf_small(r: f64) -> f64 {
    let mut acc = 0.0f64;
    for n in 1..400 {
        let a = 4.0 * (PI * n as f64 / r) * (PI * n as f64 / r);
        let e = (-a).exp();
        if n > 1 && e * a * a * a < 1e-20 * acc.abs().max(1e-300) {
            break;
        }
        acc += (8.0 / (r * r * r) * (24.0 * a - 36.0 * a * a + 8.0 * a * a * a)
            + 16.0 / r * a * a)
            * e;
    }
    (PI.sqrt() / 3.0 * acc).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diam_tail_measure_closed_form() {
        let laws = Laws::new(2.0).unwrap();
        // v(1) = 1, Ψ(v) = 1, inner integral 1/3 → N(D > 2) = 2/3
        assert!((laws.diam_tail_measure(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        // D ≤ 2Γ: N(D > 2r) ≤ N(Γ > r) = v(r)
        for &gamma in &[1.3, 1.7, 2.0] {
            let laws = Laws::new(gamma).unwrap();
            for &r in &[0.2, 1.0, 3.0] {
                assert!(laws.diam_tail_measure(r).unwrap() <= laws.br.v(r).unwrap());
            }
        }
    }

    #[test]
    fn diam_density_consistency() {
        let laws = Laws::new(2.0).unwrap();
        assert!((laws.diam_density(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // −d/dr N(D > 2r) = 2 φ(2r) by finite differences
        let laws = Laws::new(1.5).unwrap();
        let r = 1.0;
        let h = 1e-6;
        let fd = -(laws.diam_tail_measure(r + h).unwrap()
            - laws.diam_tail_measure(r - h).unwrap())
            / (2.0 * h);
        let want = 2.0 * laws.diam_density(2.0 * r).unwrap();
        assert!((fd - want).abs() < 1e-7 * want.abs());
        // nonnegative on a scan
        for i in 1..60 {
            let s = 0.1 + 9.9 * i as f64 / 60.0;
            assert!(laws.diam_density(s).unwrap() >= 0.0);
        }
    }

    #[test]
    fn diam_density_integrates_to_tail() {
        // ∫_{2r0}^{2R} φ(u) du = N(D > 2r0) − N(D > 2R) by quadrature
        let laws = Laws::new(1.5).unwrap();
        let r0 = 0.8;
        let big = 500.0;
        let q = integrate(
            |u| laws.diam_density(u).unwrap(),
            2.0 * r0,
            2.0 * big,
            1e-12,
            1e-11,
            8000,
        )
        .unwrap()
        .value;
        let want = laws.diam_tail_measure(r0).unwrap() - laws.diam_tail_measure(big).unwrap();
        assert!((q - want).abs() < 1e-8 * want, "{q} vs {want}");
    }

    #[test]
    fn cond_diam_given_height_values() {
        let laws = Laws::new(2.0).unwrap();
        assert_eq!(laws.cond_diam_given_height(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(laws.cond_diam_given_height(0.9, 1.0).unwrap(), 0.0);
        let got = laws.cond_diam_given_height(1.5, 1.0).unwrap();
        assert!((got - 256.0 / 324.0).abs() < 1e-13, "{got}");
        // non-decreasing in y and continuous at 2r
        for &gamma in &[1.4, 2.0] {
            let laws = Laws::new(gamma).unwrap();
            let r = 0.7;
            let mut prev = -1.0;
            for i in 0..=100 {
                let y = r * (1.0 + i as f64 / 100.0);
                let v = laws.cond_diam_given_height(y, r).unwrap();
                assert!(v >= prev - 1e-12);
                prev = v;
            }
            assert!(
                (laws.cond_diam_given_height(2.0 * r - 1e-9, r).unwrap() - 1.0).abs() < 1e-6
            );
        }
    }

    #[test]
    fn l1_special_cases() {
        for &gamma in &[1.5, 2.0] {
            let laws = Laws::new(gamma).unwrap();
            for &z in &[0.3, 1.0, 2.5] {
                let a = laws.l1(0.0, z).unwrap();
                let b = laws.br.w(z).unwrap() - 1.0;
                assert!((a - b).abs() < 1e-13, "L1(0,z) = w(z) − 1");
            }
            // z ≥ 2y: the indicator vanishes
            let a = laws.l1(0.4, 0.9).unwrap();
            let b = laws.br.w(0.9).unwrap() - 1.0;
            assert!((a - b).abs() < 1e-13);
            assert!(laws.l1(0.0, 0.0).is_err());
        }
    }

    #[test]
    fn l1_monotone_nonnegative() {
        let laws = Laws::new(1.5).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=40 {
            let y = 0.05 * i as f64;
            let v = laws.l1(y, 0.0).unwrap();
            assert!(v >= 0.0 && v <= prev + 1e-12, "y={y}: {v}");
            prev = v;
        }
    }

    #[test]
    fn l1_matches_tail_series_route() {
        // dual route at moderate y where the expansion has converged
        for &gamma in &[1.5, 2.0] {
            let laws = Laws::new(gamma).unwrap();
            for &y in &[2.5, 3.0, 4.0] {
                let direct = laws.l1(y, 0.0).unwrap();
                let series = laws.l1_series(y);
                assert!(
                    (direct - series).abs() < 1e-8 * direct.abs().max(1e-12),
                    "γ={gamma}, y={y}: {direct} vs {series}"
                );
            }
        }
    }

    #[test]
    fn brownian_series_identity_height() {
        // the kernel series and the theta-series closed form are termwise
        // identical at γ = 2
        let laws = Laws::new(2.0).unwrap();
        for i in 0..=20 {
            let r = 0.8 + 2.2 * i as f64 / 20.0;
            let a = laws.height_tail_series(r).unwrap();
            let b = brownian_height_tail(r);
            assert!((a - b).abs() < 1e-12, "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn brownian_series_identity_diam() {
        let laws = Laws::new(2.0).unwrap();
        for i in 0..=20 {
            let r = 1.6 + 4.4 * i as f64 / 20.0;
            let a = laws.diam_tail_series(r).unwrap();
            let b = brownian_diam_tail(r);
            assert!((a - b).abs() < 1e-12, "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn brownian_complementarity() {
        for &r in &[1.2, 1.5] {
            let s = brownian_height_tail(r) + brownian_height_cdf_small(r);
            assert!((s - 1.0).abs() < 1e-10, "height at r={r}: {s}");
            let s = brownian_diam_tail(r) + brownian_diam_cdf_small(r);
            assert!((s - 1.0).abs() < 1e-8, "diam at r={r}: {s}");
        }
    }

    #[test]
    fn tails_monotone_and_ordered() {
        for &gamma in &[1.5, 2.0] {
            let laws = Laws::new(gamma).unwrap();
            let lo = laws
                .refusal_radius_height()
                .max(laws.refusal_radius_diam())
                .max(0.7);
            let mut prev_h = 2.0;
            let mut prev_d = 2.0;
            for i in 0..=30 {
                let r = lo + 3.0 * i as f64 / 30.0;
                let h = laws.nr_height_tail(r).unwrap();
                let d = laws.nr_diam_tail(r).unwrap();
                assert!(h <= prev_h + 1e-10 && (0.0..=1.0).contains(&h));
                assert!(d <= prev_d + 1e-10 && (0.0..=1.0).contains(&d));
                // {D > 2r} ⊆ {Γ > r}
                let d2 = laws.nr_diam_tail(2.0 * r).unwrap();
                assert!(d2 <= h + 1e-12, "γ={gamma}, r={r}");
                prev_h = h;
                prev_d = d;
            }
        }
    }

    #[test]
    fn moment_brownian_closed_forms() {
        let laws = Laws::new(2.0).unwrap();
        let h = laws.moment_height().unwrap();
        assert!((h.series - PI.sqrt()).abs() < 1e-12, "series {}", h.series);
        assert!(
            (h.quadrature - PI.sqrt()).abs() < 1e-8,
            "quadrature {}",
            h.quadrature
        );
        let d = laws.moment_diam().unwrap();
        assert!(
            (d.series - 4.0 / 3.0 * PI.sqrt()).abs() < 1e-10,
            "series {}",
            d.series
        );
        assert!(
            (d.quadrature - 4.0 / 3.0 * PI.sqrt()).abs() < 1e-6,
            "quadrature {}",
            d.quadrature
        );
    }

    #[test]
    fn moment_routes_agree() {
        for &gamma in &[1.3, 1.5, 1.8] {
            let laws = Laws::new(gamma).unwrap();
            let h = laws.moment_height().unwrap();
            assert!(
                (h.series - h.quadrature).abs() < 1e-8 * h.series,
                "γ={gamma} height: {} vs {}",
                h.series,
                h.quadrature
            );
            let d = laws.moment_diam().unwrap();
            assert!(
                (d.series - d.quadrature).abs() < 1e-6 * d.series,
                "γ={gamma} diam: {} vs {}",
                d.series,
                d.quadrature
            );
        }
    }

    #[test]
    fn moment_gamma_to_one_endpoints() {
        // N_nr[Γ] − 1/(γ−1) → γ_e + 1 and N_nr[D] − 2/(γ−1) → 2γ_e − 1;
        // near 1 only the closed-form/quadrature routes stay valid.
        use crate::numeric::special::EULER_GAMMA;
        let laws = Laws::new(1.02).unwrap();
        let h = laws.moment_height().unwrap().series - 1.0 / 0.02;
        let d = laws.moment_diam().unwrap().quadrature - 2.0 / 0.02;
        assert!((h - (EULER_GAMMA + 1.0)).abs() < 0.1, "height excess {h}");
        assert!(
            (d - (2.0 * EULER_GAMMA - 1.0)).abs() < 0.2,
            "diam excess {d}"
        );
    }

    #[test]
    fn table1_structure() {
        let laws = Laws::new(2.0).unwrap();
        let t = laws.table1(&[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(t.height_large_r, vec![0.25, 1.0, 4.0]);
        assert!((t.height_small_r[1] - PI * PI).abs() < 1e-12);
        assert!((t.diam_small_r[1] - 4.0 * PI * PI).abs() < 1e-12);
        let (p1, p2) = t.brownian_small_r_prefactors.unwrap();
        assert!((p1 - 4.0 * PI.powf(2.5)).abs() < 1e-10 * p1);
        assert!((p2 - 4096.0 / 3.0 * PI.powf(6.5)).abs() < 1e-10 * p2);

        let laws = Laws::new(1.5).unwrap();
        let t = laws.table1(&[1.0, 2.0]).unwrap();
        // diameter exponent = height exponent evaluated at r/2
        let h_at_half = (1.5 * (PI / 1.5).sin() / PI * 0.5f64).powf(-3.0);
        assert!((t.diam_small_r[0] - h_at_half).abs() < 1e-10 * h_at_half);
        assert!(t.c_small.is_some() && t.cprime_small.is_some());
    }
}
