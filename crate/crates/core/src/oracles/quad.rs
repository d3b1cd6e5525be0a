//! Quadrature nodes.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| v * h).collect())
}

/// Exp-sinh rule for `int_0^inf`: nodes `exp(pi/2 sinh t)` on a uniform `t`
/// grid of step `h` over `[-4.5, 4]`, with the Jacobian folded into the weights.
pub fn exp_sinh(h: f64) -> (Vec<f64>, Vec<f64>) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let lo = (-4.5 / h).floor() as i64;
    let hi = (4.0 / h).ceil() as i64;
    let mut x = Vec::new();
    let mut w = Vec::new();
    for k in lo..=hi {
        let t = k as f64 * h;
        let node = (half_pi * t.sinh()).exp();
        x.push(node);
        w.push(h * half_pi * t.cosh() * node);
    }
    (x, w)
}
