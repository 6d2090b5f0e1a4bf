//! Gauss-Legendre quadrature rules.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence; exact for
/// polynomials of degree 2n-1. Deterministic to machine precision.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut rule = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d2) = legendre_with_derivative(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((-x, w));
    }
    // Mirror to the full rule, midpoint included once for odd n.
    for i in (0..m).rev() {
        let (x, w) = rule[i];
        if x != 0.0 {
            rule.push((-x, w));
        }
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

/// The same rule mapped to [a, b].
pub fn gauss_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_match_tables() {
        let r1 = gauss_legendre(1);
        assert_eq!(r1.len(), 1);
        assert!((r1[0].0).abs() < 1e-15 && (r1[0].1 - 2.0).abs() < 1e-15);

        let r2 = gauss_legendre(2);
        let x = 1.0 / 3.0_f64.sqrt();
        assert!((r2[0].0 + x).abs() < 1e-15 && (r2[1].0 - x).abs() < 1e-15);
        assert!((r2[0].1 - 1.0).abs() < 1e-15);

        let r3 = gauss_legendre(3);
        assert!((r3[1].0).abs() < 1e-15);
        assert!((r3[1].1 - 8.0 / 9.0).abs() < 1e-15);
        assert!((r3[0].0 + (0.6_f64).sqrt()).abs() < 1e-15);
        assert!((r3[0].1 - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1.
        for n in 1..=10 {
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                let num: f64 = gauss_legendre(n)
                    .iter()
                    .map(|&(x, w)| w * x.powi(deg as i32))
                    .sum();
                assert!(
                    (num - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn mapped_rule_integrates_on_interval() {
        // int_0^pi sin = 2, with a 7-point rule.
        let s: f64 = gauss_on(0.0, std::f64::consts::PI, 7)
            .iter()
            .map(|&(x, w)| w * x.sin())
            .sum();
        assert!((s - 2.0).abs() < 1e-10);
    }
}
