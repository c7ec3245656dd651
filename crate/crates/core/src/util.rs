//! Small numeric helpers shared across modules.

/// Pairwise (cascade) summation; result is independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Composite trapezoid rule on (possibly non-uniform) nodes.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(nodes.len(), values.len());
    let terms: Vec<f64> = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(z, v)| 0.5 * (z[1] - z[0]) * (v[0] + v[1]))
        .collect();
    pairwise_sum(&terms)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx).powi(2)).collect();
    let slope = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_exact_for_linear() {
        let z: Vec<f64> = (0..11).map(|k| -1.0 + 0.1 * k as f64).collect();
        let v: Vec<f64> = z.iter().map(|z| 3.0 * z + 2.0).collect();
        assert!((trapezoid(&z, &v) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|x| -0.7 * x + 1.5).collect();
        let (m, c) = linear_fit(&x, &y);
        assert!((m + 0.7).abs() < 1e-12 && (c - 1.5).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive() {
        let x: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = x.iter().sum();
        assert!((pairwise_sum(&x) - naive).abs() < 1e-10);
    }
}
