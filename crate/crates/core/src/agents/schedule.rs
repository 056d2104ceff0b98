use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Step sizes `alpha_t`, indexed by the 1-based update count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StepSchedule {
    /// `1 / (1 + c * mu_min * (1 - sqrt(gamma)) * t / log(max(t, 2)))`.
    Theorem42 { c: f64, mu_min: f64, gamma: f64 },
    Constant { alpha: f64 },
    /// Explicit values; the last one repeats. Values may be 0 or 1, which
    /// makes degenerate runs expressible.
    Custom { alphas: Vec<f64> },
}

impl StepSchedule {
    pub fn theorem42(c: f64, mu_min: f64, gamma: f64) -> Result<Self> {
        let s = Self::Theorem42 { c, mu_min, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        let s = Self::Constant { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Theorem42 { c, mu_min, gamma } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(invalid("c", "must be positive"));
                }
                if !(*mu_min > 0.0 && *mu_min <= 1.0) {
                    return Err(invalid("mu_min", "must lie in (0, 1]"));
                }
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(invalid("gamma", "must lie in (0, 1)"));
                }
            }
            Self::Constant { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(invalid("alpha", "a constant step must lie in (0, 1)"));
                }
            }
            Self::Custom { alphas } => {
                if alphas.is_empty() || alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
                    return Err(invalid("alphas", "need at least one value, all in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self, t: usize) -> f64 {
        match self {
            Self::Theorem42 { c, mu_min, gamma } => {
                let t = t.max(1) as f64;
                1.0 / (1.0 + c * mu_min * (1.0 - gamma.sqrt()) * t / t.max(2.0).ln())
            }
            Self::Constant { alpha } => *alpha,
            Self::Custom { alphas } => alphas[(t.max(1) - 1).min(alphas.len() - 1)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem42_values() {
        let s = StepSchedule::theorem42(1.0, 0.5, 0.25).unwrap();
        // c * mu_min * (1 - sqrt(gamma)) = 0.25
        assert!((s.alpha(1) - 1.0 / (1.0 + 0.25 / 2f64.ln())).abs() < 1e-15);
        assert!((s.alpha(100) - 1.0 / (1.0 + 25.0 / 100f64.ln())).abs() < 1e-15);
        let mut prev = 1.0;
        for t in 2..10_000 {
            let a = s.alpha(t);
            assert!(a > 0.0 && a <= 1.0);
            assert!(a <= prev + 1e-15 || t < 4);
            prev = a;
        }
    }

    #[test]
    fn constant_must_be_interior() {
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::constant(1.0).is_err());
        assert_eq!(StepSchedule::constant(0.3).unwrap().alpha(7), 0.3);
    }

    #[test]
    fn custom_repeats_last() {
        let s = StepSchedule::Custom { alphas: vec![1.0, 0.5] };
        s.validate().unwrap();
        assert_eq!(s.alpha(1), 1.0);
        assert_eq!(s.alpha(2), 0.5);
        assert_eq!(s.alpha(50), 0.5);
        assert!(StepSchedule::Custom { alphas: vec![1.5] }.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let s = StepSchedule::Constant { alpha: 0.25 };
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"kind":"constant","alpha":0.25}"#);
    }
}
