//! Independent numerical oracles used to freeze expected values in tests.
//!
//! Nothing here calls into the library's numerics: quadrature is composite
//! Gauss-Legendre on geometrically graded panels, and the ratio-game oracle is
//! a brute-force sweep of the probability simplex.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// ∫ f over [lo, hi] with panels refined geometrically towards `lo`.
/// The innermost sliver of relative width 2^-levels is left out; callers add
/// an analytic remainder when `f` is singular at `lo`.
pub fn integrate_graded_at_lo(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, levels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let w = hi - lo;
    let mut total = 0.0;
    for k in 0..levels {
        let a = lo + w * 0.5f64.powi(k as i32 + 1);
        let b = lo + w * 0.5f64.powi(k as i32);
        total += gl_panel(f, a, b, &rule);
    }
    total
}

/// Composite Gauss-Legendre on `panels` equal panels (smooth integrands).
pub fn integrate_uniform(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (hi - lo) / panels as f64;
    (0..panels).map(|k| gl_panel(f, lo + k as f64 * h, lo + (k + 1) as f64 * h, &rule)).sum()
}

/// ∫₀ˣ u^{a−1}(1−u)^{b−1} du by graded quadrature with analytic endpoint slivers.
pub fn beta_quadrature(x: f64, a: f64, b: f64) -> f64 {
    const LEVELS: usize = 90;
    let m = 0.5 * x;
    let left_f = |u: f64| u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0);
    let mut left = integrate_graded_at_lo(&left_f, 0.0, m, LEVELS);
    let eps = m * 0.5f64.powi(LEVELS as i32);
    left += eps.powf(a) / a;

    // right half in v = 1 − u, graded towards v = 1 − x
    let v_lo = 1.0 - x;
    let v_hi = 1.0 - m;
    let right_f = |v: f64| v.powf(b - 1.0) * (1.0 - v).powf(a - 1.0);
    let mut right = integrate_graded_at_lo(&right_f, v_lo, v_hi, LEVELS);
    let eps = (v_hi - v_lo) * 0.5f64.powi(LEVELS as i32);
    if v_lo == 0.0 {
        right += eps.powf(b) / b;
    } else {
        right += eps * right_f(v_lo + 0.5 * eps);
    }
    left + right
}

/// E[min{C, T}] = ∫₀ᵀ S(t) dt for a survival function given in closed form.
pub fn truncated_mean_quadrature(survival: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    integrate_uniform(survival, 0.0, t, 400)
}

/// Max over the simplex (grid step 1/steps) of min_j (λ·d_j)/(λ·κ).
/// Returns (best weights, best value). Supports 2 or 3 actions.
pub fn ratio_game_grid(rows: &[Vec<f64>], costs: &[f64], steps: usize) -> (Vec<f64>, f64) {
    let eval = |w: &[f64]| {
        let denom: f64 = w.iter().zip(costs).map(|(a, b)| a * b).sum();
        rows.iter().map(|d| d.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / denom).fold(f64::INFINITY, f64::min)
    };
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    match costs.len() {
        2 => {
            for i in 0..=steps {
                let w = [i as f64 / steps as f64, 1.0 - i as f64 / steps as f64];
                let v = eval(&w);
                if v > best.1 {
                    best = (w.to_vec(), v);
                }
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let w = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                    let v = eval(&w);
                    if v > best.1 {
                        best = (w.to_vec(), v);
                    }
                }
            }
        }
        n => panic!("grid oracle supports 2 or 3 actions, got {n}"),
    }
    best
}
