//! Oracles shared by the integration tests. None of them call into the
//! closed-form or transform code they are used to check.
#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svtk_core::quadrature::gauss_legendre;

/// Two-state forward equations `P₀' = -(λ+μ)P₀ + ηP₁`, `P₁' = λP₀ - ηP₁`
/// from `(1, 0)`, classical RK4 with step halving until successive
/// answers agree to `tol`.
pub fn rk4_two_state(lambda: f64, mu: f64, eta: f64, t: f64, tol: f64) -> (f64, f64) {
    let run = |steps: usize| {
        let h = t / steps as f64;
        let f = |p: [f64; 2]| [-(lambda + mu) * p[0] + eta * p[1], lambda * p[0] - eta * p[1]];
        let mut p = [1.0, 0.0];
        for _ in 0..steps {
            let k1 = f(p);
            let k2 = f([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]]);
            let k3 = f([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]]);
            let k4 = f([p[0] + h * k3[0], p[1] + h * k3[1]]);
            for i in 0..2 {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        p
    };
    let mut steps = 16;
    let mut prev = run(steps);
    loop {
        steps *= 2;
        let next = run(steps);
        let change = (next[0] - prev[0]).abs().max((next[1] - prev[1]).abs());
        if change < tol || steps > 1 << 20 {
            return (next[0], next[1]);
        }
        prev = next;
    }
}

/// Composite 20-point Gauss–Legendre on `[a, b]` with `panels` equal panels.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in nodes.iter().zip(&weights) {
            sum += w * half * f(mid + half * x);
        }
    }
    sum
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Seeded uniform triples in `[lo, hi]³`.
pub fn random_triples(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = move || lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (0..count).map(|_| (u(), u(), u())).collect()
}

/// `|a − b| ≤ tol·max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
