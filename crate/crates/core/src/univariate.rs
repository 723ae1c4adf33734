//! One-dimensional truncated normal kernels.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{erfcx, f, norm_cdf, norm_pdf, quantile_unchecked};

/// sqrt(2/pi)
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Standardized cut beyond which the sampler switches from inverse-cdf to
/// exponential rejection.
const INVERSE_CDF_LIMIT: f64 = 5.0;

/// A one-sided truncation of a single coordinate, named by its support:
/// `Left { cut: a }` keeps `[a, inf)`, `Right { cut: b }` keeps `(-inf, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "side", rename_all = "lowercase")]
pub enum TruncationBound {
    Left { cut: f64 },
    Right { cut: f64 },
}

impl TruncationBound {
    pub fn left(cut: f64) -> Self {
        Self::Left { cut }
    }

    pub fn right(cut: f64) -> Self {
        Self::Right { cut }
    }

    #[inline]
    pub fn cut(&self) -> f64 {
        match *self {
            Self::Left { cut } | Self::Right { cut } => cut,
        }
    }

    #[inline]
    pub fn is_left(&self) -> bool {
        matches!(self, Self::Left { .. })
    }

    /// Whether `x` lies in the (closed) support.
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Self::Left { cut } => x >= cut,
            Self::Right { cut } => x <= cut,
        }
    }

    /// The point `scale` inside the support, measured from the cut.
    #[inline]
    pub fn inset(&self, scale: f64) -> f64 {
        match *self {
            Self::Left { cut } => cut + scale,
            Self::Right { cut } => cut - scale,
        }
    }

    /// The bound seen through `x -> -x`.
    pub fn reflect(&self) -> Self {
        match *self {
            Self::Left { cut } => Self::Right { cut: -cut },
            Self::Right { cut } => Self::Left { cut: -cut },
        }
    }
}

/// Mean of `N(mu, sigma^2)` restricted to `[a, b]`.
///
/// Intervals lying in a tail are mirrored to the lower side and evaluated in
/// erfcx-scaled form, so only genuinely empty intervals fail.
pub fn truncated_mean_two_sided(mu: f64, sigma: f64, a: f64, b: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    let mut alpha = (a - mu) / sigma;
    let mut beta = (b - mu) / sigma;
    // Mirror so the interval reaches into the upper half line.
    let sign = if beta <= 0.0 {
        (alpha, beta) = (-beta, -alpha);
        -1.0
    } else {
        1.0
    };
    let ratio = if alpha >= 0.0 {
        // Both ends in the upper tail: divide numerator and denominator by
        // phi(alpha).
        let decay = (-(beta - alpha) * (beta + alpha) * 0.5).exp();
        let num = 1.0 - decay;
        let den = (PI / 2.0).sqrt()
            * (erfcx(alpha * FRAC_1_SQRT_2) - erfcx(beta * FRAC_1_SQRT_2) * decay);
        if !(den > 0.0) {
            return Err(Error::DegenerateInterval);
        }
        num / den
    } else {
        let den = norm_cdf(beta) - norm_cdf(alpha);
        if !(den > 0.0) {
            return Err(Error::DegenerateInterval);
        }
        (norm_pdf(alpha) - norm_pdf(beta)) / den
    };
    let w = mu + sign * ratio * sigma;
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::DegenerateInterval)
    }
}

/// Mean of `N(mu, sigma^2)` truncated on one side.
///
/// `Left(a)`: `mu + sqrt(2/pi) f((mu - a)/(sqrt2 sigma)) sigma`;
/// `Right(b)`: `mu - sqrt(2/pi) f((b - mu)/(sqrt2 sigma)) sigma`.
#[inline]
pub fn truncated_mean_one_sided(mu: f64, sigma: f64, bound: TruncationBound) -> f64 {
    debug_assert!(sigma > 0.0);
    match bound {
        TruncationBound::Left { cut } => {
            mu + SQRT_2_OVER_PI * f((mu - cut) / (SQRT_2 * sigma)) * sigma
        }
        TruncationBound::Right { cut } => {
            mu - SQRT_2_OVER_PI * f((cut - mu) / (SQRT_2 * sigma)) * sigma
        }
    }
}

/// Draw from the standard normal restricted to `[alpha, inf)`.
fn sample_standard_left<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha <= INVERSE_CDF_LIMIT {
        // P(Z > z | Z > alpha) = Q(z) / Q(alpha); draw Q(z) uniformly on
        // (0, Q(alpha)] and invert through the lower tail for accuracy.
        let upper = norm_cdf(-alpha);
        let u = 1.0 - rng.random::<f64>();
        let z = -quantile_unchecked(u * upper);
        return z.max(alpha);
    }
    // Robert (1995): translated exponential proposal with the optimal rate.
    let lambda = 0.5 * (alpha + (alpha * alpha + 4.0).sqrt());
    loop {
        let e = -(1.0 - rng.random::<f64>()).ln() / lambda;
        let z = alpha + e;
        let d = z - lambda;
        let u = 1.0 - rng.random::<f64>();
        if u.ln() <= -0.5 * d * d {
            return z;
        }
    }
}

/// One exact draw from `N(mu, sigma^2)` truncated by `bound`.
///
/// Uses inverse-cdf sampling while the standardized cut is at most 5 and
/// exponential rejection beyond, so far-tail draws stay exact.
pub fn sample_truncated<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    bound: TruncationBound,
    rng: &mut R,
) -> f64 {
    debug_assert!(sigma > 0.0);
    match bound {
        TruncationBound::Left { cut } => {
            let z = sample_standard_left((cut - mu) / sigma, rng);
            (mu + sigma * z).max(cut)
        }
        TruncationBound::Right { cut } => {
            let z = sample_standard_left((mu - cut) / sigma, rng);
            (mu - sigma * z).min(cut)
        }
    }
}
