//! Gauss–Legendre quadrature on `[0, 1]`.

use std::sync::OnceLock;

/// Nodes and weights on `[−1, 1]` from Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[k] = -z;
        x[n - 1 - k] = z;
        w[k] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - k] = w[k];
    }
    (x, w)
}

/// 16-node rule mapped to `[0, 1]`.
pub fn gl16_unit() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(16);
        x.into_iter()
            .zip(w)
            .map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0))
            .collect()
    })
}

/// `∫₀¹ f(t) dt` with the 16-node rule; stops at the first error.
pub fn integrate_unit<E>(mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    let mut acc = 0.0;
    for &(t, w) in gl16_unit() {
        acc += w * f(t)?;
    }
    Ok(acc)
}
