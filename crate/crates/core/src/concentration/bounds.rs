use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Parameters of the `W_k`-dependent Freedman bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreedmanParams {
    pub delta: f64,
    pub h: u32,
    /// Almost-sure upper bound on `W_n`.
    pub sigma2: f64,
    /// Almost-sure bound on each difference norm.
    pub b: f64,
}

impl FreedmanParams {
    pub fn new(delta: f64, h: u32, sigma2: f64, b: f64) -> Result<Self> {
        let p = Self { delta, h, sigma2, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if self.h < 1 {
            return Err(invalid("h", "must be at least 1"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(invalid("sigma2", "must be positive"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(invalid("b", "must be nonnegative"));
        }
        Ok(())
    }

    /// `H = ceil(2 log2(1 / (1 - gamma)))`, at least 1.
    pub fn horizon_for_discount(gamma: f64) -> u32 {
        ((2.0 * (1.0 / (1.0 - gamma)).log2()).ceil() as u32).max(1)
    }
}

/// `sqrt(8 max{W_k, sigma^2 / 2^H} log(2H / delta)) + (4/3) b log(2H / delta)`.
pub fn freedman_bound(w_k: f64, params: &FreedmanParams) -> Result<f64> {
    params.validate()?;
    if !(w_k >= 0.0) {
        return Err(invalid("w_k", "must be nonnegative"));
    }
    Ok(freedman_bound_unchecked(w_k, params))
}

pub(crate) fn freedman_bound_unchecked(w_k: f64, p: &FreedmanParams) -> f64 {
    let log = (2.0 * p.h as f64 / p.delta).ln();
    let floor = p.sigma2 / 2f64.powi(p.h as i32);
    (8.0 * w_k.max(floor) * log).sqrt() + 4.0 / 3.0 * p.b * log
}

/// `2 exp(-(eps^2 / 2) / (sigma^2 + b eps / 3))`.
pub fn freedman_tail(eps: f64, sigma2: f64, b: f64) -> Result<f64> {
    if !(eps > 0.0) || !(sigma2 > 0.0) || !(b >= 0.0) {
        return Err(invalid("eps", "eps and sigma2 must be positive, b nonnegative"));
    }
    Ok(2.0 * (-(eps * eps / 2.0) / (sigma2 + b * eps / 3.0)).exp())
}

/// `sqrt(2 n b^2 log(2 / delta))`.
pub fn azuma_bound(n: usize, b: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid("delta", "must lie in (0, 2)"));
    }
    Ok((2.0 * n as f64 * b * b * (2.0 / delta).ln()).sqrt())
}

/// `sqrt(4 sigma^2 log(2 / delta))`.
pub fn bernstein_crude_bound(sigma2: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid("delta", "must lie in (0, 2)"));
    }
    if !(sigma2 >= 0.0) {
        return Err(invalid("sigma2", "must be nonnegative"));
    }
    Ok((4.0 * sigma2 * (2.0 / delta).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_value() {
        let p = FreedmanParams::new(0.1, 1, 1.0, 1.0).unwrap();
        let l = 20f64.ln();
        let expect = (8.0 * l).sqrt() + 4.0 / 3.0 * l;
        assert!((freedman_bound(1.0, &p).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn large_horizon_leaves_linear_term() {
        let p = FreedmanParams::new(0.1, 60, 1.0, 1.0).unwrap();
        let l = (120.0f64 / 0.1).ln();
        let v = freedman_bound(0.0, &p).unwrap();
        assert!((v - 4.0 / 3.0 * l).abs() < 1e-7);
    }

    #[test]
    fn domain_checks() {
        assert!(FreedmanParams::new(1.0, 1, 1.0, 1.0).is_err());
        assert!(FreedmanParams::new(0.5, 0, 1.0, 1.0).is_err());
        assert!(freedman_bound(-1.0, &FreedmanParams::new(0.5, 1, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn comparison_examples() {
        assert!((azuma_bound(1, 1.0, 2.0 / std::f64::consts::E.powi(2)).unwrap() - 2.0).abs() < 1e-12);
        assert!((bernstein_crude_bound(1.0, 2.0 / std::f64::consts::E).unwrap() - 2.0).abs() < 1e-12);
        assert!((freedman_tail(1.0, 1.0, 1.0).unwrap() - 2.0 * (-0.375f64).exp()).abs() < 1e-15);
        assert!((freedman_tail(1e-9, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_each_argument() {
        let base = FreedmanParams::new(0.1, 3, 4.0, 1.0).unwrap();
        let f = |w: f64, p: FreedmanParams| freedman_bound(w, &p).unwrap();
        let mut prev = 0.0;
        for i in 0..50 {
            let v = f(i as f64 * 0.2, base);
            assert!(v >= prev);
            prev = v;
        }
        for (lo, hi) in [(0.5, 1.0), (1.0, 2.0)] {
            assert!(f(1.0, FreedmanParams { b: lo, ..base }) <= f(1.0, FreedmanParams { b: hi, ..base }));
        }
        // monotone in H once W_k >= sigma^2 / 2, so the floor never binds
        for h in 1..20 {
            assert!(f(2.0, FreedmanParams { h, ..base }) <= f(2.0, FreedmanParams { h: h + 1, ..base }) + 1e-12);
        }
        for d in [0.01, 0.05, 0.1, 0.5] {
            assert!(f(1.0, FreedmanParams { delta: d, ..base }) >= f(1.0, FreedmanParams { delta: d * 1.5, ..base }));
        }
    }
}
