//! Independent numerical oracles for the integration tests.
//!
//! Nothing here calls the library's normal CDF or bivariate normal code;
//! the reference CDF comes from `statrs`.

#![allow(dead_code)]

use std::sync::OnceLock;

use hetfx::model::{ArmCoefs, BinaryParams, ContinuousParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn ref_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn ref_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to an absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// `Φ(z)` by quadrature of the normal density.
pub fn phi_by_quadrature(z: f64) -> f64 {
    let lower_tail = |t: f64| integrate(&ref_pdf, t - 16.0, t, 1e-16);
    if z <= 0.0 {
        lower_tail(z)
    } else {
        1.0 - lower_tail(-z)
    }
}

/// Gauss–Hermite rule for the weight `exp(−x²)` by the Golub–Welsch
/// eigenvalue method.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule.into_iter().unzip()
}

/// `E f(U)` for standard normal `U` with 200 Gauss–Hermite nodes.
pub fn normal_expectation<F: Fn(f64) -> f64>(f: F) -> f64 {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (x, w) = RULE.get_or_init(|| gauss_hermite(200));
    let s: f64 = x
        .iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(std::f64::consts::SQRT_2 * xi))
        .sum();
    s / std::f64::consts::PI.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn loc(c: &ArmCoefs, x: &[f64]) -> f64 {
    c.intercept + dot(&c.main, x)
}

fn load(c: &ArmCoefs, x: &[f64]) -> f64 {
    c.loading + dot(&c.interaction, x)
}

/// `∫ Φ((w₁ + w₂u)/w₃) φ(u) du` with `Y₁ − Y₀ − c = w₁ + w₂U + noise`.
pub fn benefit_oracle(m: &ContinuousParams, x: &[f64], c: f64) -> f64 {
    let w1 = loc(&m.arms[1], x) - loc(&m.arms[0], x) - c;
    let w2 = load(&m.arms[1], x) - load(&m.arms[0], x);
    let w3 = (m.noise_var[0] + m.noise_var[1]).sqrt();
    normal_expectation(|u| ref_cdf((w1 + w2 * u) / w3))
}

pub fn harm_oracle(m: &ContinuousParams, x: &[f64], c: f64) -> f64 {
    let w1 = loc(&m.arms[0], x) - loc(&m.arms[1], x) - c;
    let w2 = load(&m.arms[0], x) - load(&m.arms[1], x);
    let w3 = (m.noise_var[0] + m.noise_var[1]).sqrt();
    normal_expectation(|u| ref_cdf((w1 + w2 * u) / w3))
}

/// `∫ {1 − Φ(a₀ + h₀u)} Φ(a₁ + h₁u) φ(u) du`.
pub fn g01_oracle(m: &BinaryParams, x: &[f64]) -> f64 {
    let (a0, h0) = (loc(&m.arms[0], x), load(&m.arms[0], x));
    let (a1, h1) = (loc(&m.arms[1], x), load(&m.arms[1], x));
    normal_expectation(|u| ref_cdf(-(a0 + h0 * u)) * ref_cdf(a1 + h1 * u))
}

/// Same integral as [`g01_oracle`] by adaptive quadrature, valid for any loading.
pub fn g01_adaptive_oracle(m: &BinaryParams, x: &[f64]) -> f64 {
    let (a0, h0) = (loc(&m.arms[0], x), load(&m.arms[0], x));
    let (a1, h1) = (loc(&m.arms[1], x), load(&m.arms[1], x));
    let f = |u: f64| ref_pdf(u) * ref_cdf(-(a0 + h0 * u)) * ref_cdf(a1 + h1 * u);
    integrate(&f, -40.0, 40.0, 1e-13)
}

pub fn g10_oracle(m: &BinaryParams, x: &[f64]) -> f64 {
    let (a0, h0) = (loc(&m.arms[0], x), load(&m.arms[0], x));
    let (a1, h1) = (loc(&m.arms[1], x), load(&m.arms[1], x));
    normal_expectation(|u| ref_cdf(a0 + h0 * u) * ref_cdf(-(a1 + h1 * u)))
}

/// `P(X > h, Y > k)` for unit-variance normals with correlation `r`, by
/// one-dimensional quadrature of `φ(x)·P(Y > k | X = x)`.
pub fn upper_orthant_oracle(h: f64, k: f64, r: f64) -> f64 {
    let s = (1.0 - r * r).sqrt();
    let f = |x: f64| ref_pdf(x) * ref_cdf((r * x - k) / s);
    let top = h.max(0.0) + 40.0;
    integrate(&f, h.max(-40.0), top, 1e-14)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_arm(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> ArmCoefs {
    let mut u = || rng.gen_range(-scale..scale);
    ArmCoefs {
        intercept: u(),
        main: (0..p).map(|_| u()).collect(),
        loading: u(),
        interaction: (0..p).map(|_| u()).collect(),
    }
}

pub fn random_continuous(rng: &mut ChaCha8Rng, p: usize) -> ContinuousParams {
    let a0 = random_arm(rng, p, 1.5);
    let a1 = random_arm(rng, p, 1.5);
    ContinuousParams {
        arms: [a0, a1],
        noise_var: [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)],
    }
}

/// Coefficients in ±1, where the 200-node Gauss–Hermite oracle for the
/// quadrant probabilities is accurate to a few 1e-9. Larger loadings make
/// its integrand too sharp for the rule.
pub fn random_binary(rng: &mut ChaCha8Rng, p: usize) -> BinaryParams {
    let a0 = random_arm(rng, p, 1.0);
    let a1 = random_arm(rng, p, 1.0);
    BinaryParams { arms: [a0, a1] }
}

pub fn random_binary_wide(rng: &mut ChaCha8Rng, p: usize) -> BinaryParams {
    let a0 = random_arm(rng, p, 2.0);
    let a1 = random_arm(rng, p, 2.0);
    BinaryParams { arms: [a0, a1] }
}

pub fn random_covariates(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| normal(rng)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
