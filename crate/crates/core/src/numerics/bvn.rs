//! Bivariate normal rectangle probabilities.
//!
//! The orthant kernel is Genz's double-precision refinement of the
//! Drezner–Wesolowsky integral over the correlation coefficient, evaluated
//! with a fixed Gauss–Legendre rule (6, 12 or 20 points depending on |ρ|).
//! Rectangles are reduced to orthants by inclusion–exclusion after
//! standardizing to unit variances.

#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};

use super::normal::std_normal_cdf;
use crate::error::{Error, Result};

/// Standardized limits beyond this are treated as infinite.
pub const LIMIT_CLAMP: f64 = 8.5;

const TWO_PI: f64 = std::f64::consts::TAU;

// Half of each symmetric Gauss–Legendre rule on [-1, 1]: (weight, node), nodes negative.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197_0),
];
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

fn rule(abs_r: f64) -> &'static [(f64, f64)] {
    if abs_r < 0.3 {
        &GL6
    } else if abs_r < 0.75 {
        &GL12
    } else {
        &GL20
    }
}

/// `P(X > h, Y > k)` for a standard bivariate normal pair with correlation `r`.
pub fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let quad = rule(r.abs());
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for &(w, x) in quad {
            for sign in [1.0, -1.0] {
                let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * TWO_PI) + std_normal_cdf(-h) * std_normal_cdf(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let a_sq = (1.0 - r) * (1.0 + r);
        let mut a = a_sq.sqrt();
        let b_sq = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(b_sq / a_sq + hk) / 2.0).exp()
            * (1.0 - c * (b_sq - a_sq) * (1.0 - d * b_sq / 5.0) / 3.0 + c * d * a_sq * a_sq / 5.0);
        if hk > -160.0 {
            let b = b_sq.sqrt();
            bvn -= (-hk / 2.0).exp()
                * TWO_PI.sqrt()
                * std_normal_cdf(-b / a)
                * b
                * (1.0 - c * b_sq * (1.0 - d * b_sq / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in quad {
            let xs = (a * (x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * w
                * ((-b_sq / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                    - (-(b_sq / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            let xs = a_sq * (1.0 - x).powi(2) / 4.0;
            let rs = (1.0 - xs).sqrt();
            bvn += a
                * w
                * (-(b_sq / xs + hk) / 2.0).exp()
                * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                    - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn += std_normal_cdf(-h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += std_normal_cdf(k) - std_normal_cdf(h);
            } else {
                bvn += std_normal_cdf(-h) - std_normal_cdf(-k);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X < x, Y < y)` for standardized limits already clamped to ±[`LIMIT_CLAMP`].
fn lower_orthant(x: f64, y: f64, r: f64) -> f64 {
    if x <= -LIMIT_CLAMP || y <= -LIMIT_CLAMP {
        0.0
    } else if x >= LIMIT_CLAMP {
        std_normal_cdf(y)
    } else if y >= LIMIT_CLAMP {
        std_normal_cdf(x)
    } else {
        upper_orthant(-x, -y, r)
    }
}

/// Axis-aligned rectangle in the plane; coordinates may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Rect2 {
    pub fn new(lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        for i in 0..2 {
            if lower[i].is_nan() || upper[i].is_nan() || lower[i] > upper[i] {
                return Err(Error::Domain(format!(
                    "rectangle coordinate {i}: lower {} exceeds upper {}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn plane() -> Self {
        Self {
            lower: [f64::NEG_INFINITY; 2],
            upper: [f64::INFINITY; 2],
        }
    }

    /// `(0, ∞) × (−∞, 0)`
    pub fn upper_left_quadrant() -> Self {
        Self {
            lower: [0.0, f64::NEG_INFINITY],
            upper: [f64::INFINITY, 0.0],
        }
    }

    /// `(−∞, 0) × (0, ∞)`
    pub fn lower_right_quadrant() -> Self {
        Self {
            lower: [f64::NEG_INFINITY, 0.0],
            upper: [0.0, f64::INFINITY],
        }
    }
}

/// Probability that a `N(mu, sigma)` pair falls in `rect`.
pub fn bvn_rect(rect: &Rect2, mu: [f64; 2], sigma: [[f64; 2]; 2]) -> Result<f64> {
    let (s11, s22, s12) = (sigma[0][0], sigma[1][1], sigma[0][1]);
    if (s12 - sigma[1][0]).abs() > 1e-12 * (s11.abs() + s22.abs()) {
        return Err(Error::Domain("covariance matrix is not symmetric".into()));
    }
    let det = s11 * s22 - s12 * s12;
    if !(s11 > 0.0 && s22 > 0.0 && det > 0.0) || !det.is_finite() {
        return Err(Error::Domain(format!(
            "covariance matrix is not positive definite: [[{s11}, {s12}], [{s12}, {s22}]]"
        )));
    }
    if rect.lower[0] == rect.upper[0] || rect.lower[1] == rect.upper[1] {
        return Ok(0.0);
    }
    let sd = [s11.sqrt(), s22.sqrt()];
    let r = (s12 / (sd[0] * sd[1])).clamp(-1.0, 1.0);
    let z = |v: f64, i: usize| ((v - mu[i]) / sd[i]).clamp(-LIMIT_CLAMP, LIMIT_CLAMP);
    let (a0, b0) = (z(rect.lower[0], 0), z(rect.upper[0], 0));
    let (a1, b1) = (z(rect.lower[1], 1), z(rect.upper[1], 1));

    let p = lower_orthant(b0, b1, r) - lower_orthant(a0, b1, r) - lower_orthant(b0, a1, r)
        + lower_orthant(a0, a1, r);
    Ok(p.clamp(0.0, 1.0))
}
