//! Gauss-Legendre rules and composite panels.

use std::f64::consts::PI;
use std::sync::OnceLock;

const ORDER: usize = 8;

/// Nodes and weights of the `ORDER`-point rule on [-1, 1].
fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Composite rule on `[a, b]` with panels no wider than `max_width`.
pub(crate) fn composite(a: f64, b: f64, max_width: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let rule = legendre_rule();
    let mut out = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(t, w) in rule {
            out.push((mid + 0.5 * h * t, 0.5 * h * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = composite(-1.0, 2.0, 3.0);
        let integral: f64 = rule.iter().map(|&(x, w)| w * x.powi(15)).sum();
        let exact = (2f64.powi(16) - 1.0) / 16.0;
        assert!((integral - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn composite_handles_smooth_functions() {
        let rule = composite(0.0, PI, 0.5);
        let integral: f64 = rule.iter().map(|&(x, w)| w * x.sin()).sum();
        assert!((integral - 2.0).abs() < 1e-14);
    }
}
