//! Small quadrature toolbox: double-exponential (tanh-sinh) rules for
//! integrands with endpoint singularities, and Gauss-Legendre nodes.

use std::f64::consts::PI;

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface area of the unit sphere in `n` dimensions (`n * omega_n`).
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` with the two endpoint
/// distances computed without cancellation, so singular factors like
/// `|s - x|^(-p)` can be evaluated accurately right at an endpoint.
/// Levels are refined until successive estimates agree to `rel_tol`.
pub fn tanh_sinh(f: impl Fn(f64, f64, f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    const T_MAX: f64 = 4.0;
    let node = |t: f64| -> Option<f64> {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // distance from the nearer endpoint, in units of `half`: 1 - tanh|u|
        let comp = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let d = half * comp;
        if d <= 0.0 || w * half < 1e-300 {
            return None;
        }
        let (x, da, db) = if u < 0.0 {
            (a + d, d, (b - a) - d)
        } else {
            (b - d, (b - a) - d, d)
        };
        Some(half * w * f(x, da, db))
    };
    let mut step = 0.5;
    let mut sum = half * 0.5 * PI * f(mid, mid - a, b - mid);
    let mut k = 1;
    loop {
        let t = k as f64 * step;
        if t > T_MAX {
            break;
        }
        sum += node(t).unwrap_or(0.0) + node(-t).unwrap_or(0.0);
        k += 1;
    }
    let mut estimate = sum * step;
    for _level in 0..10 {
        step *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * step;
            if t > T_MAX {
                break;
            }
            sum += node(t).unwrap_or(0.0) + node(-t).unwrap_or(0.0);
            k += 2;
        }
        let next = sum * step;
        let done = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pm) = (p1, p0);
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let v = tanh_sinh(|x, _, _| x * x, 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        // int_0^1 x^(-1/2) = 2
        let v = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        // int_0^1 ln(1 - x) = -1
        let v = tanh_sinh(|_, _, db| db.ln(), 0.0, 1.0, 1e-13);
        assert!((v + 1.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 8, 13] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((got - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
    }
}
