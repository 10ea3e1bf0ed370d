use super::DiagnosticsError;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Log-probability terms for one continue-vs-stop decision: a shared prefix,
/// an optional extra segment, and the EOS probabilities at both stopping
/// points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationSample {
    pub log_p_pre: f64,
    pub log_p_last: f64,
    pub log_eos_pre: f64,
    pub log_eos_full: f64,
    pub len_pre: usize,
    pub len_last: usize,
    pub alpha: f64,
}

impl DerivationSample {
    pub fn lambda_ratio(&self) -> f64 {
        self.len_last as f64 / self.len_pre as f64
    }

    fn validate(&self) -> Result<(), DiagnosticsError> {
        if self.len_pre == 0 || self.len_last == 0 {
            return Err(DiagnosticsError::BadSample("lengths must be ≥ 1".into()));
        }
        let logs = [
            self.log_p_pre,
            self.log_p_last,
            self.log_eos_pre,
            self.log_eos_full,
        ];
        if logs.iter().any(|v| !(*v <= 0.0)) {
            return Err(DiagnosticsError::BadSample(
                "log terms must be ≤ 0 and not NaN".into(),
            ));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(DiagnosticsError::BadSample(
                "alpha must be finite and ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationOutcome {
    pub eq2_holds: bool,
    pub eq3_holds: bool,
    pub agree: bool,
    pub lambda_ratio: f64,
}

/// Evaluates the exact length-normalized comparison between stopping early
/// and emitting the extra segment (eq2) and its first-order rearrangement
/// (eq3), reporting whether the two tests pick the same side.
pub fn derivation_check(sample: &DerivationSample) -> Result<DerivationOutcome, DiagnosticsError> {
    sample.validate()?;
    let len_pre = sample.len_pre as f64;
    let len_last = sample.len_last as f64;
    let full = sample.log_p_pre + sample.log_p_last + sample.log_eos_full;
    let pre = sample.log_p_pre + sample.log_eos_pre;
    let eq2_holds =
        full / (len_pre + len_last).powf(sample.alpha) > pre / len_pre.powf(sample.alpha);
    let eq3_holds = -sample.log_eos_pre / len_last
        > sample.alpha * pre / len_pre - (sample.log_p_last + sample.log_eos_full) / len_last;
    Ok(DerivationOutcome {
        eq2_holds,
        eq3_holds,
        agree: eq2_holds == eq3_holds,
        lambda_ratio: sample.lambda_ratio(),
    })
}

/// Random sample with per-token log-probability rates drawn uniformly from
/// [−3, 0] and len_last capped so lambda_ratio ≤ max_ratio.
pub fn sample_derivation<R: Rng>(rng: &mut R, alpha: f64, max_ratio: f64) -> DerivationSample {
    assert!(max_ratio > 0.0 && max_ratio.is_finite());
    let min_pre = (1.0 / max_ratio).ceil() as usize;
    let lo = min_pre.max(1);
    let hi = lo.max(60);
    let len_pre = rng.gen_range(lo..=hi);
    let max_last = ((len_pre as f64 * max_ratio).floor() as usize).max(1);
    let len_last = rng.gen_range(1..=max_last);
    let rate_pre: f64 = rng.gen_range(-3.0..=0.0);
    let rate_last: f64 = rng.gen_range(-3.0..=0.0);
    DerivationSample {
        log_p_pre: rate_pre * len_pre as f64,
        log_p_last: rate_last * len_last as f64,
        log_eos_pre: rng.gen_range(-3.0..=0.0),
        log_eos_full: rng.gen_range(-3.0..=0.0),
        len_pre,
        len_last,
        alpha,
    }
}

/// Fraction of `n` random samples on which eq2 and eq3 agree.
pub fn derivation_agreement<R: Rng>(rng: &mut R, n: usize, alpha: f64, max_ratio: f64) -> f64 {
    let mut agreed = 0usize;
    for _ in 0..n {
        let sample = sample_derivation(rng, alpha, max_ratio);
        if derivation_check(&sample).expect("sampler emits valid samples").agree {
            agreed += 1;
        }
    }
    agreed as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_example() {
        let sample = DerivationSample {
            log_p_pre: -20.0,
            log_p_last: -8.0,
            log_eos_pre: -1.5,
            log_eos_full: -0.1,
            len_pre: 40,
            len_last: 4,
            alpha: 1.0,
        };
        let out = derivation_check(&sample).unwrap();
        assert!(!out.eq2_holds);
        assert!(!out.eq3_holds);
        assert!(out.agree);
        assert!((out.lambda_ratio - 0.1).abs() < 1e-12);
        // eq2 compares −0.63864 against −0.5375; eq3 compares 0.375 against 1.4875.
        let full: f64 = (-20.0 - 8.0 - 0.1) / 44.0;
        assert!((full + 0.63864).abs() < 1e-5);
        let pre: f64 = (-20.0 - 1.5) / 40.0;
        assert!((pre + 0.5375).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_always_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let sample = sample_derivation(&mut rng, 0.0, 1.0);
            assert!(derivation_check(&sample).unwrap().agree);
        }
    }

    #[test]
    fn sampler_respects_ratio_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..2000 {
            let sample = sample_derivation(&mut rng, 1.0, 0.05);
            assert!(sample.lambda_ratio() <= 0.05 + 1e-12);
            assert!(sample.len_last >= 1);
            sample.validate().unwrap();
        }
    }

    #[test]
    fn invalid_samples_rejected() {
        let mut sample = DerivationSample {
            log_p_pre: -1.0,
            log_p_last: -1.0,
            log_eos_pre: -1.0,
            log_eos_full: -1.0,
            len_pre: 1,
            len_last: 1,
            alpha: 1.0,
        };
        sample.len_pre = 0;
        assert!(derivation_check(&sample).is_err());
        sample.len_pre = 1;
        sample.log_p_pre = 0.5;
        assert!(derivation_check(&sample).is_err());
    }
}
