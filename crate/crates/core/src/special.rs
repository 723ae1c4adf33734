//! Scalar special functions.
//!
//! `erfc` and `erfcx` use W. J. Cody's rational Chebyshev approximations
//! (the SPECFUN `CALERF` routine), which are accurate to roughly machine
//! precision over the whole real line. Everything else in the crate that needs
//! a Gaussian tail ratio goes through [`erfcx`] so that nothing underflows to
//! `0/0` in the far tails.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// 1/sqrt(pi)
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
/// sqrt(pi)
pub const SQRT_PI: f64 = 1.772_453_850_905_516;
/// 1/sqrt(2 pi)
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

// |x| <= 0.46875
const A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302_02,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
const B: [f64; 4] = [
    23.601_290_952_344_122,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
// 0.46875 < |x| <= 4
const C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_13,
    881.952_221_241_769_1,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_5,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_5e-8,
];
const D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_7,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];
// |x| > 4
const P: [f64; 6] = [
    0.305_326_634_961_232_36,
    0.360_344_899_949_804_45,
    0.125_781_726_111_229_26,
    0.016_083_785_148_742_275,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_097,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_460_4,
    0.527_905_102_951_428_4,
    0.060_518_341_312_441_32,
    0.002_335_204_976_268_691_8,
];

const THRESH: f64 = 0.468_75;
const XSMALL: f64 = 1.11e-16;
/// Above this erfc underflows.
const XBIG: f64 = 26.543;
/// Above this erfcx(x) = 1/(x sqrt(pi)) to working precision.
const XHUGE: f64 = 6.71e7;
/// Below this erfcx overflows.
const XNEG: f64 = -26.628;

/// exp(-y^2) with the argument split so the rounding error of y*y does not
/// get amplified by the exponential.
#[inline]
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

#[inline]
fn exp_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (ysq * ysq).exp() * del.exp()
}

/// erf(y) on |y| <= THRESH.
#[inline]
fn erf_small(y: f64) -> f64 {
    let ysq = if y.abs() > XSMALL { y * y } else { 0.0 };
    let mut num = A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + A[i]) * ysq;
        den = (den + B[i]) * ysq;
    }
    y * (num + A[3]) / (den + B[3])
}

/// erfcx(y) for y > THRESH.
#[inline]
fn erfcx_positive(y: f64) -> f64 {
    if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (num + C[7]) / (den + D[7])
    } else if y >= XHUGE {
        FRAC_1_SQRT_PI / y
    } else {
        let ysq = 1.0 / (y * y);
        let mut num = P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + P[i]) * ysq;
            den = (den + Q[i]) * ysq;
        }
        let r = ysq * (num + P[4]) / (den + Q[4]);
        (FRAC_1_SQRT_PI - r) / y
    }
}

/// Complementary error function, `2/sqrt(pi) * int_x^inf exp(-t^2) dt`.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= THRESH {
        return 1.0 - erf_small(x);
    }
    let tail = if y >= XBIG {
        0.0
    } else {
        erfcx_positive(y) * exp_neg_sq(y)
    };
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}

/// Scaled complementary error function `exp(x^2) * erfc(x)`.
///
/// Finite for every `x > -26.628`; below that it overflows and returns
/// `+inf`.
pub fn erfcx(x: f64) -> f64 {
    let y = x.abs();
    if y <= THRESH {
        let ysq = if y > XSMALL { y * y } else { 0.0 };
        return (1.0 - erf_small(x)) * ysq.exp();
    }
    let r = erfcx_positive(y);
    if x > 0.0 {
        r
    } else if x < XNEG {
        f64::INFINITY
    } else {
        let e = exp_sq(y);
        (e + e) - r
    }
}

/// The ratio `exp(-x^2) / erfc(-x)` that drives the one-sided truncated mean.
///
/// Evaluated as `1 / erfcx(-x)`; strictly positive, approaches `sqrt(pi)*|x|`
/// as `x -> -inf` and underflows to zero only for `x` beyond ~26.6.
#[inline]
pub fn f(x: f64) -> f64 {
    1.0 / erfcx(-x)
}

/// Derivative of [`f`]: `-2x f(x) - (2/sqrt(pi)) f(x)^2`.
///
/// Always in `[-sqrt(pi), 0]`.
pub fn f_prime(x: f64) -> f64 {
    let fx = f(x);
    // -2 f (x + f/sqrt(pi)); the factored form keeps the cancellation for
    // very negative x to a single subtraction.
    -2.0 * fx * (x + fx * FRAC_1_SQRT_PI)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, `erfc(-x/sqrt 2) / 2`.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)`, without cancellation for large `x`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse of [`norm_cdf`].
///
/// Acklam's rational approximation followed by one Halley step against the
/// erfc-based cdf.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(quantile_unchecked(p))
}

pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let lower_tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };

    let x = if p < P_LOW {
        lower_tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -lower_tail(1.0 - p)
    };

    // Halley refinement. In the upper half, work with the survival function
    // so the residual is not swamped by rounding near 1.
    let (e, z) = if x <= 0.0 {
        (norm_cdf(x) - p, x)
    } else {
        ((1.0 - p) - norm_sf(x), x)
    };
    let u = e * SQRT_2PI * (0.5 * z * z).exp();
    if !u.is_finite() {
        return x;
    }
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    // erfc(x) for x in {-6, -3, -1, -0.3, 0.2, 0.5, 1, 2, 3, 4.5, 6, 10, 26},
    // evaluated by 50-digit quadrature of 2/sqrt(pi) * int_x^inf exp(-t^2) dt.
    const ERFC_REFERENCE: [(f64, f64); 13] = [
        (-6.0, 1.999_999_999_999_999_978_480_263_287_501_087),
        (-3.0, 1.999_977_909_503_001_414_558_627_223_870_418),
        (-1.0, 1.842_700_792_949_714_869_341_220_635_082_609),
        (-0.3, 1.328_626_759_459_127_427_638_914_047_866_757),
        (0.2, 0.777_297_410_789_521_545_859_860_993_199_856_2),
        (0.5, 0.479_500_122_186_953_462_317_253_346_108_035_5),
        (1.0, 0.157_299_207_050_285_130_658_779_364_917_390_7),
        (2.0, 0.004_677_734_981_047_265_837_930_743_632_747_071),
        (3.0, 2.209_049_699_858_544_137_277_612_958_232_038e-5),
        (4.5, 1.966_160_441_542_887_476_279_160_367_664_333e-10),
        (6.0, 2.151_973_671_249_891_311_659_335_039_918_738e-17),
        (10.0, 2.088_487_583_763_116_480_823_313_069_085_661e-45),
        (26.0, 5.663_192_408_856_142_846_475_727_896_926_092e-296),
    ];

    #[test]
    fn erfc_matches_high_precision_reference() {
        for &(x, want) in &ERFC_REFERENCE {
            let got = erfc(x);
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "erfc({x}) = {got:e}, want {want:e}, rel {rel:e}");
        }
        assert_eq!(erfc(0.0), 1.0);
        assert_eq!(erfc(30.0), 0.0);
        assert_eq!(erfc(-30.0), 2.0);
    }

    #[test]
    fn erfcx_values() {
        assert_eq!(erfcx(0.0), 1.0);
        let e1 = 1f64.exp() * 0.157_299_207_050_285_130_658_779_364_917_39;
        assert!(((erfcx(1.0) - e1) / e1).abs() < 1e-13);
        assert!((e1 - 0.427_583_576_155_807).abs() < 1e-14);
        let x = 1e4;
        let asym = 1.0 / (x * SQRT_PI);
        assert!(((erfcx(x) - asym) / asym).abs() < 1e-6);
        // Still finite and positive far out.
        let big = erfcx(1e6);
        assert!(big.is_finite() && big > 0.0);
        assert!(((big * 1e6 * SQRT_PI) - 1.0).abs() < 1e-12);
        assert!(erfcx(-27.0).is_infinite());
    }

    #[test]
    fn erfcx_consistent_with_erfc_on_negative_axis() {
        for &(x, want) in ERFC_REFERENCE.iter().filter(|(x, _)| *x < 0.0) {
            let scaled = want * (x * x).exp();
            let got = erfcx(x);
            assert!(((got - scaled) / scaled).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn f_at_known_points() {
        assert_eq!(f(0.0), 1.0);
        let want = (-1f64).exp() / 1.842_700_792_949_714_869_341_220_635_082_6;
        assert!((f(1.0) - want).abs() < 1e-15);
        assert!((want - 0.199_641).abs() < 1e-6);
        // Naive ratio would be 0/0 here.
        let y = 40.0;
        assert!(f(-y).is_finite());
        assert!((f(-y) / (SQRT_PI * y) - 1.0).abs() < 1e-3);
        assert!(f(30.0) >= 0.0);
    }

    #[test]
    fn f_prime_at_zero() {
        assert!((f_prime(0.0) + 2.0 * FRAC_1_SQRT_PI).abs() < 1e-15);
    }

    #[test]
    fn normal_basics() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        let q = norm_quantile(norm_cdf(1.7)).unwrap();
        assert!((q - 1.7).abs() < 1e-8);
        assert!(norm_quantile(0.0).is_err());
        assert!(norm_quantile(1.0).is_err());
        assert!(norm_quantile(f64::NAN).is_err());
        assert!(norm_quantile(-0.2).is_err());
    }

    #[test]
    fn quantile_round_trip_grid() {
        let mut p = 1e-300;
        while p < 1.0 {
            let x = norm_quantile(p).unwrap();
            assert!((norm_cdf(x) - p).abs() <= 1e-10 * p.max(1e-300).min(1.0) + 1e-16, "p = {p}");
            p *= 1.7;
        }
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = norm_quantile(p).unwrap();
            assert!((norm_cdf(x) - p).abs() <= 1e-10, "p = {p}");
        }
    }
}
