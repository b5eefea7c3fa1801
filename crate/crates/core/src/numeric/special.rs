//! Gamma-family special functions.

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Euler gamma function Γ(x).
pub fn gamma_fn(x: f64) -> f64 {
    libm::tgamma(x)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Coefficients B_{2k}/(2k) of the asymptotic expansion of digamma.
const DIGAMMA_TAIL: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// Digamma function ψ(x) for x > 0: recurrence up to x ≥ 8, then the
/// asymptotic series ψ(x) ≈ ln x − 1/(2x) − Σ B_{2k}/(2k x^{2k}).
pub fn digamma(mut x: f64) -> f64 {
    assert!(x > 0.0, "digamma: need x > 0, got {x}");
    let mut acc = 0.0;
    while x < 8.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut tail = 0.0;
    let mut p = inv2;
    for c in DIGAMMA_TAIL {
        tail += c * p;
        p *= inv2;
    }
    acc + x.ln() - 0.5 / x - tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-13);
        // ψ(1/2) = −γ − 2 ln 2
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * std::f64::consts::LN_2).abs() < 1e-13);
        // ψ(2) = 1 − γ
        assert!((digamma(2.0) - (1.0 - EULER_GAMMA)).abs() < 1e-13);
    }

    #[test]
    fn digamma_recurrence() {
        for &x in &[0.1, 0.37, 1.9, 3.3, 11.0] {
            assert!((digamma(x + 1.0) - digamma(x) - 1.0 / x).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_half() {
        assert!((gamma_fn(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }
}
