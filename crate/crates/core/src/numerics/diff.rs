//! Central finite differences.

use crate::error::{Error, Result};

fn grad_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

fn hess_step(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

fn probe<F: Fn(&[f64]) -> f64>(f: &F, at: &[f64]) -> Result<f64> {
    let v = f(at);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { probe: at.to_vec() })
    }
}

/// Gradient by central differences with step `cbrt(eps) * max(1, |θ_i|)`.
pub fn num_grad<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64]) -> Result<Vec<f64>> {
    let mut x = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let h = grad_step(theta[i]);
        x[i] = theta[i] + h;
        let up = probe(&f, &x)?;
        x[i] = theta[i] - h;
        let down = probe(&f, &x)?;
        x[i] = theta[i];
        // Use the representable step actually taken.
        let span = (theta[i] + h) - (theta[i] - h);
        grad[i] = (up - down) / span;
    }
    Ok(grad)
}

/// Symmetric Hessian by second-order central differences of `f`.
pub fn num_hessian<F: Fn(&[f64]) -> f64>(f: F, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = theta.len();
    let steps: Vec<f64> = theta.iter().map(|&t| hess_step(t)).collect();
    let f0 = probe(&f, theta)?;
    let mut x = theta.to_vec();
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        let hi = steps[i];
        x[i] = theta[i] + hi;
        let up = probe(&f, &x)?;
        x[i] = theta[i] - hi;
        let down = probe(&f, &x)?;
        x[i] = theta[i];
        hess[i][i] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let mut corner = |si: f64, sj: f64| {
                x[i] = theta[i] + si * hi;
                x[j] = theta[j] + sj * hj;
                let v = probe(&f, &x);
                x[i] = theta[i];
                x[j] = theta[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * hi * hj);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

/// Jacobian of a vector-valued map (rows: outputs), by central differences.
///
/// Applied to an analytic gradient this yields a Hessian with `O(h^2)` error
/// and far less cancellation than second differences of the function; the
/// result is symmetrized by the caller when that is what it represents.
pub fn num_jacobian<F>(g: F, theta: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let d = theta.len();
    let mut x = theta.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let h = grad_step(theta[i]);
        x[i] = theta[i] + h;
        let up = g(&x);
        x[i] = theta[i] - h;
        let down = g(&x);
        x[i] = theta[i];
        if up.iter().chain(down.iter()).any(|v| !v.is_finite()) {
            x[i] = theta[i] + h;
            return Err(Error::Evaluation { probe: x });
        }
        let span = (theta[i] + h) - (theta[i] - h);
        cols.push(up.iter().zip(&down).map(|(u, d)| (u - d) / span).collect());
    }
    let m = cols.first().map_or(0, Vec::len);
    Ok((0..m).map(|r| cols.iter().map(|c| c[r]).collect()).collect())
}

/// Replace `a` by `(a + aᵀ) / 2`.
pub fn symmetrize(a: &mut [Vec<f64>]) {
    let d = a.len();
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_gradient() {
        let f = |t: &[f64]| 3.0 * t[0] - 2.0 * t[1];
        for theta in [[0.0, 0.0], [1e3, -7.5], [-0.3, 42.0]] {
            let g = num_grad(f, &theta).unwrap();
            assert!((g[0] - 3.0).abs() < 1e-8 && (g[1] + 2.0).abs() < 1e-8, "{g:?}");
        }
    }

    #[test]
    fn quadratic_gradient() {
        let g = num_grad(|t: &[f64]| t.iter().map(|v| v * v).sum(), &[1.0, 2.0]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_hessian() {
        let a = [[2.0, 1.0], [1.0, 4.0]];
        let f = |t: &[f64]| {
            0.5 * (a[0][0] * t[0] * t[0] + 2.0 * a[0][1] * t[0] * t[1] + a[1][1] * t[1] * t[1])
        };
        let h = num_hessian(f, &[0.7, -1.3]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - a[i][j]).abs() < 1e-4, "{h:?}");
            }
        }
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn affine_hessian_vanishes() {
        let h = num_hessian(|t: &[f64]| 5.0 * t[0] - t[1] + 2.0, &[3.0, 4.0]).unwrap();
        assert!(h.iter().flatten().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn non_finite_probe_is_reported() {
        let f = |t: &[f64]| if t[0] > 1.0 { f64::NAN } else { t[0] };
        match num_grad(f, &[1.0]) {
            Err(Error::Evaluation { probe }) => assert!(probe[0] > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobian_of_gradient() {
        let grad = |t: &[f64]| vec![2.0 * t[0] + t[1], t[0] + 4.0 * t[1]];
        let j = num_jacobian(grad, &[0.2, 0.3]).unwrap();
        assert!((j[0][0] - 2.0).abs() < 1e-8 && (j[0][1] - 1.0).abs() < 1e-8);
        assert!((j[1][0] - 1.0).abs() < 1e-8 && (j[1][1] - 4.0).abs() < 1e-8);
    }
}
