//! Standard normal distribution and quantile functions with relative accuracy
//! deep into the lower tail.
//!
//! `normal_cdf` follows W. J. Cody's rational Chebyshev approximations. In the
//! tails the Gaussian factor is evaluated as `exp(-xs²/2)·exp(-(x-xs)(x+xs)/2)`
//! with `xs` rounded to a multiple of 1/16, so the squaring of a large argument
//! does not leak rounding error into the result.
//!
//! `normal_quantile` starts from Wichura's AS241 approximation and applies two
//! Halley steps against `log_normal_cdf`, which keeps `|Φ(Φ⁻¹(p)) - p| / p`
//! near machine precision down to `p = 1e-300` and lets the log-domain variant
//! reach probabilities far below the smallest positive double.

#![allow(clippy::excessive_precision)]

use crate::error::{AloeError, Result};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_4;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_6;
const SQRT_32: f64 = 5.656_854_249_492_380_195_206_754_896_838_8;
/// Φ⁻¹(3/4); inside this band the central rational form is used.
const CENTRAL_SPLIT: f64 = 0.674_489_75;

const A: [f64; 5] = [
    2.235_252_035_460_683_928_7,
    161.028_231_068_555_878_81,
    1_067.689_485_460_370_958_2,
    18_154.981_253_343_561_249,
    0.065_682_337_918_207_449_113,
];
const B: [f64; 4] = [
    47.202_581_904_688_241_87,
    976.098_551_737_776_693_22,
    10_260.932_208_618_978_205,
    45_507.789_335_026_729_956,
];
const C: [f64; 9] = [
    0.398_941_512_088_134_667_64,
    8.883_149_794_388_375_941_2,
    93.506_656_132_177_855_979,
    597.270_276_394_800_262_26,
    2_494.537_585_290_372_671_1,
    6_848.190_450_536_282_332_6,
    11_602.651_437_647_350_124,
    9_842.714_838_383_978_021_8,
    1.076_557_677_372_019_231_7e-8,
];
const D: [f64; 8] = [
    22.266_688_044_328_115_691,
    235.387_901_782_624_998_61,
    1_519.377_599_407_554_805,
    6_485.558_298_266_760_755,
    18_615.571_640_885_098_091,
    34_900.952_721_145_977_266,
    38_912.003_286_093_271_411,
    19_685.429_676_859_990_727,
];
const P: [f64; 6] = [
    0.215_898_534_057_956_99,
    0.127_401_161_160_247_363_9,
    0.022_235_277_870_649_807,
    0.001_421_619_193_227_893_466,
    2.911_287_495_116_879_2e-5,
    0.023_073_441_764_940_173_03,
];
const Q: [f64; 5] = [
    1.284_260_096_144_911_21,
    0.468_238_212_480_865_118,
    0.065_988_137_868_928_551_5,
    0.003_782_396_332_027_582_44,
    7.297_515_550_839_662_05e-5,
];

/// Lower-tail probability of a point `x <= -CENTRAL_SPLIT`, split as
/// `exp(-xs²/2) · exp(-del/2) · factor`. Returned as `(log_gauss, factor)`
/// where `log_gauss = -xs²/2 - del/2`.
fn lower_tail_parts(x: f64) -> (f64, f64) {
    debug_assert!(x <= -CENTRAL_SPLIT);
    let y = -x;
    let factor = if y <= SQRT_32 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (num + C[7]) / (den + D[7])
    } else {
        let xsq = 1.0 / (y * y);
        let mut num = P[5] * xsq;
        let mut den = xsq;
        for i in 0..4 {
            num = (num + P[i]) * xsq;
            den = (den + Q[i]) * xsq;
        }
        let r = xsq * (num + P[4]) / (den + Q[4]);
        (FRAC_1_SQRT_2PI - r) / y
    };
    let xs = (y * 16.0).trunc() / 16.0;
    let del = (y - xs) * (y + xs);
    (-xs * xs * 0.5 - del * 0.5, factor)
}

/// `Φ(x) - 1/2` for `|x| <= CENTRAL_SPLIT`.
fn central_offset(x: f64) -> f64 {
    let (num, den) = if x.abs() > f64::EPSILON * 0.5 {
        let xsq = x * x;
        let mut num = A[4] * xsq;
        let mut den = xsq;
        for i in 0..3 {
            num = (num + A[i]) * xsq;
            den = (den + B[i]) * xsq;
        }
        (num, den)
    } else {
        (0.0, 0.0)
    };
    x * (num + A[3]) / (den + B[3])
}

/// Standard normal CDF Φ(x).
///
/// Relative error stays below 1e-13 for `x >= -37`; below roughly -38.4 the
/// result underflows to exactly 0. NaN propagates.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= CENTRAL_SPLIT {
        return 0.5 + central_offset(x);
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    let (lg, factor) = lower_tail_parts(-x.abs());
    let tail = if lg < -800.0 {
        0.0
    } else {
        split_exp(lg) * factor
    };
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Upper-tail probability `1 - Φ(x) = Φ(-x)`.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

// `exp(a + b)` where `a` carries the exactly-representable part. Splitting the
// evaluation keeps the product from underflowing early.
fn split_exp(lg: f64) -> f64 {
    let half = lg * 0.5;
    half.exp() * (lg - half).exp()
}

/// Natural log of Φ(x), finite for every finite `x`.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x <= -CENTRAL_SPLIT {
        let (lg, factor) = lower_tail_parts(x);
        lg + factor.ln()
    } else if x <= 0.0 {
        (0.5 + central_offset(x)).ln()
    } else {
        (-normal_cdf(-x)).ln_1p()
    }
}

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
fn log_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Inverse standard normal CDF Φ⁻¹(p) for `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AloeError::Domain(format!(
            "normal_quantile requires 0 < p < 1, got {p}"
        )));
    }
    if p > 0.5 {
        // 1 - p is exact here.
        return Ok(-lower_quantile(1.0 - p, (1.0 - p).ln()));
    }
    Ok(lower_quantile(p, p.ln()))
}

/// Inverse CDF from a log-probability: returns `x` with `log Φ(x) = log_p`.
///
/// Accepts `log_p` far below `ln(f64::MIN_POSITIVE)`, which is how conditional
/// sampling reaches thresholds whose tail probability times a small uniform
/// variate would underflow.
pub fn normal_quantile_from_log(log_p: f64) -> Result<f64> {
    if !(log_p < 0.0) || log_p == f64::NEG_INFINITY {
        return Err(AloeError::Domain(format!(
            "normal_quantile_from_log requires -inf < log_p < 0, got {log_p}"
        )));
    }
    if log_p > -std::f64::consts::LN_2 {
        // p > 1/2: work with the complement, -expm1(log_p) = 1 - p accurately.
        let q = -log_p.exp_m1();
        return Ok(-lower_quantile(q, q.ln()));
    }
    let p = log_p.exp();
    Ok(lower_quantile(p, log_p))
}

/// Φ⁻¹ for `p <= 1/2`, given both `p` (possibly underflowed to 0) and `ln p`.
fn lower_quantile(p: f64, log_p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = as241_lower(p, log_p);
    for _ in 0..2 {
        let lcdf = log_normal_cdf(x);
        // f = ln Φ(x) - ln p, formed as a ratio while p is a normal double.
        let f = if p >= 1e-300 {
            let cdf = normal_cdf(x);
            ((cdf - p) / p).ln_1p()
        } else {
            lcdf - log_p
        };
        if f == 0.0 || !f.is_finite() {
            break;
        }
        let r = (log_normal_pdf(x) - lcdf).exp();
        let h = f / r;
        x -= h / (1.0 + 0.5 * h * (x + r));
    }
    x
}

/// Wichura's AS241 (PPND16) starting value for `p <= 1/2`.
#[allow(clippy::excessive_precision)]
fn as241_lower(p: f64, log_p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
            + 6.726_577_092_700_870_085_3e4)
            * r
            + 4.592_195_393_154_987_145_7e4)
            * r
            + 1.373_169_376_550_946_112_5e4)
            * r
            + 1.971_590_950_306_551_442_7e3)
            * r
            + 1.331_416_678_917_843_774_5e2)
            * r
            + 3.387_132_872_796_366_608_0;
        let den = ((((((5.226_495_278_852_854_561_0e3 * r + 2.872_908_573_572_194_267_4e4) * r
            + 3.930_789_580_009_271_061_0e4)
            * r
            + 2.121_379_430_158_659_586_7e4)
            * r
            + 5.394_196_021_424_751_107_7e3)
            * r
            + 6.871_870_074_920_579_083_0e2)
            * r
            + 4.231_333_070_160_091_125_2e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let mut r = (-log_p).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_40e-4 * r + 2.272_384_498_926_918_458_33e-2)
            * r
            + 2.417_807_251_774_506_117_70e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_50)
            * r
            + 4.630_337_846_156_545_295_90)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946_00e-4)
            * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_90e-1)
            * r
            + 6.897_673_349_851_000_045_50e-1)
            * r
            + 1.676_384_830_183_803_849_40)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5)
            * r
            + 1.242_660_947_388_078_438_60e-3)
            * r
            + 2.653_218_952_657_612_309_30e-2)
            * r
            + 2.965_605_718_285_048_912_30e-1)
            * r
            + 1.784_826_539_917_291_335_80)
            * r
            + 5.463_784_911_164_114_369_90)
            * r
            + 6.657_904_643_501_103_777_20;
        let den =
            ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_70e-7) * r
                + 1.846_318_317_510_054_681_80e-5)
                * r
                + 7.868_691_311_456_132_591_00e-4)
                * r
                + 1.487_536_129_085_061_485_25e-2)
                * r
                + 1.369_298_809_227_358_053_10e-1)
                * r
                + 5.998_322_065_558_879_376_90e-1)
                * r
                + 1.0;
        num / den
    };
    -val
}
