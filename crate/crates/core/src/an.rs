//! Asymmetric squared loss and the asymmetric normal (AN) law whose location
//! parameter is the τ-expectile.
//!
//! The AN density is `c(τ)/σ · exp(-ω_τ((y-μ)/σ))` with
//! `ω_τ(u) = u²|τ - 1(u<0)|` and `c(τ) = 2√(τ(1-τ)) / (√π (√τ + √(1-τ)))`.
//! It is a split normal: the left half has scale `σ/√(2(1-τ))`, the right half
//! `σ/√(2τ)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Expectile level τ, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ExpectileLevel(f64);

impl ExpectileLevel {
    pub const MEAN: ExpectileLevel = ExpectileLevel(0.5);

    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau > 0.0 && tau < 1.0 {
            Ok(ExpectileLevel(tau))
        } else {
            Err(Error::InvalidTau(tau))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Loss weight `|τ - 1(u<0)|` for a residual `u`.
    #[inline]
    pub fn weight(self, u: f64) -> f64 {
        if u < 0.0 {
            1.0 - self.0
        } else {
            self.0
        }
    }
}

impl TryFrom<f64> for ExpectileLevel {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        ExpectileLevel::new(v)
    }
}

impl From<ExpectileLevel> for f64 {
    fn from(t: ExpectileLevel) -> f64 {
        t.0
    }
}

impl std::fmt::Display for ExpectileLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `ω_τ(u) = u² |τ - 1(u < 0)|`.
#[inline]
pub fn asymmetric_loss(u: f64, tau: ExpectileLevel) -> f64 {
    u * u * tau.weight(u)
}

/// Location, scale and asymmetry of an AN law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnParams {
    pub mu: f64,
    pub sigma: f64,
    pub tau: ExpectileLevel,
}

impl AnParams {
    pub fn new(mu: f64, sigma: f64, tau: ExpectileLevel) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite {
                what: "AN location",
                index: 0,
            });
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidScale(sigma));
        }
        Ok(AnParams { mu, sigma, tau })
    }

    /// Probability mass of the right half (`y ≥ μ`).
    pub fn right_mass(&self) -> f64 {
        let t = self.tau.value();
        let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
        b / (a + b)
    }
}

/// `ln c(τ)`, the part of the log normalising constant that does not depend on σ.
#[inline]
pub fn log_normalizer(tau: ExpectileLevel) -> f64 {
    let t = tau.value();
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    (2.0 * a * b).ln() - 0.5 * PI.ln() - (a + b).ln()
}

/// AN log density with a precomputed `ln c(τ)`. No validation; hot path for
/// emission matrices.
#[inline]
pub(crate) fn an_logpdf_raw(y: f64, mu: f64, sigma: f64, tau: ExpectileLevel, log_c: f64) -> f64 {
    log_c - sigma.ln() - asymmetric_loss((y - mu) / sigma, tau)
}

/// Log density of `AN(μ, σ, τ)` at `y`.
pub fn an_logpdf(y: f64, p: &AnParams) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::NonFinite {
            what: "AN argument",
            index: 0,
        });
    }
    Ok(an_logpdf_raw(y, p.mu, p.sigma, p.tau, log_normalizer(p.tau)))
}

/// One exact draw from `AN(μ, σ, τ)` by picking a half with its mass and then
/// drawing a half-normal with that half's scale.
pub fn an_sample<R: Rng + ?Sized>(p: &AnParams, rng: &mut R) -> f64 {
    let t = p.tau.value();
    let side: f64 = rng.random();
    let z: f64 = rng.sample::<f64, _>(StandardNormal).abs();
    if side < p.right_mass() {
        p.mu + p.sigma / (2.0 * t).sqrt() * z
    } else {
        p.mu - p.sigma / (2.0 * (1.0 - t)).sqrt() * z
    }
}

/// Empirical τ-expectile: the root of `Σ|τ - 1(v<m)|(v - m) = 0`.
pub fn expectile_of_sample(values: &[f64], tau: ExpectileLevel) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("expectile sample"));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "expectile sample",
            index,
        });
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo == hi {
        return Ok(lo);
    }
    // strictly decreasing in m; g(lo) >= 0 >= g(hi)
    let score = |m: f64| -> f64 { values.iter().map(|&v| tau.weight(v - m) * (v - m)).sum() };
    Ok(bisect(score, lo, hi, 0.0))
}
