//! Log-domain probability arithmetic. Impossible events carry an explicit
//! `f64::NEG_INFINITY` sentinel; sums go through logsumexp so long products
//! of small probabilities never underflow.

pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// ln(e^a + e^b), tolerating `LOG_ZERO` operands.
pub fn lse2(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Σ e^x over a slice, `LOG_ZERO` for an empty or all-impossible slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(LOG_ZERO, f64::max);
    if hi == LOG_ZERO {
        return LOG_ZERO;
    }
    let sum: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// Accumulator for ln Σ e^x built one term at a time.
#[derive(Debug, Clone, Copy)]
pub struct LseAcc(f64);

impl LseAcc {
    pub fn new() -> Self {
        LseAcc(LOG_ZERO)
    }

    pub fn add(&mut self, x: f64) {
        self.0 = lse2(self.0, x);
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for LseAcc {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_linear_domain() {
        let xs = [0.3f64.ln(), 0.5f64.ln(), 0.2f64.ln()];
        assert!((logsumexp(&xs) - 0.0).abs() < 1e-12);
        assert!((lse2(0.5f64.ln(), 0.25f64.ln()) - 0.75f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sentinel_is_absorbing() {
        assert_eq!(logsumexp(&[]), LOG_ZERO);
        assert_eq!(logsumexp(&[LOG_ZERO, LOG_ZERO]), LOG_ZERO);
        assert_eq!(lse2(LOG_ZERO, -1.0), -1.0);
        let mut acc = LseAcc::new();
        acc.add(LOG_ZERO);
        assert_eq!(acc.value(), LOG_ZERO);
        acc.add(-2.0);
        assert!((acc.value() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_underflow_on_long_chains() {
        let mut acc = LseAcc::new();
        for _ in 0..1000 {
            acc.add(-800.0);
        }
        let expected = -800.0 + 1000f64.ln();
        assert!((acc.value() - expected).abs() < 1e-9);
    }
}
