//! Independent oracles shared by the integration suites. Nothing here may
//! call into the implementation paths it is used to check.

#![allow(dead_code)]

/// Scaled Bessel ratios b_n = e^{−K} I_n(K) by Miller's backward
/// recurrence, normalized with e^{−K}(I_0 + 2Σ I_n) = 1.
pub fn scaled_bessel_ratios(k: f64, n_max: usize) -> Vec<f64> {
    assert!(k > 0.0);
    let start = n_max + (k.sqrt() * 30.0) as usize + 60;
    let mut t = vec![0.0f64; start + 2];
    t[start + 1] = 0.0;
    t[start] = 1e-280;
    for n in (1..=start).rev() {
        t[n - 1] = (2.0 * n as f64 / k) * t[n] + t[n + 1];
        if t[n - 1] > 1e260 {
            let scale = 1e-260;
            for v in t.iter_mut().skip(n - 1) {
                *v *= scale;
            }
        }
    }
    let norm: f64 = t[0] + 2.0 * t[1..].iter().sum::<f64>();
    t.into_iter().take(n_max + 1).map(|v| v / norm).collect()
}

/// The cyclic loop integral by its exact transfer-matrix form:
/// Z_C(p, K) = Σ_n (e^{−K} I_n(K))^p.
pub fn cyclic_loop_integral_bessel(p: usize, k: f64) -> f64 {
    let n_max = ((2.0 * k * 60.0).sqrt() as usize).max(16);
    let b = scaled_bessel_ratios(k, n_max);
    let mut z = b[0].powi(p as i32);
    for bn in &b[1..] {
        z += 2.0 * bn.powi(p as i32);
    }
    z
}

/// 1-d adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// The p = 3 cyclic loop integral by nested adaptive Simpson over the two
/// independent phase differences.
pub fn cyclic_loop_integral_simpson_p3(k: f64, tol: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let outer = |t1: f64| -> f64 {
        let inner = |t2: f64| -> f64 { (-k * (3.0 - (t1 - t2).cos() - t2.cos() - t1.cos())).exp() };
        adaptive_simpson(&inner, -std::f64::consts::PI, std::f64::consts::PI, tol)
    };
    adaptive_simpson(&outer, -std::f64::consts::PI, std::f64::consts::PI, tol) / (tau * tau)
}

/// Per-wire minimization of the site energy over one matter phase by grid
/// scan plus golden-section refinement, never using the closed form.
pub fn minimize_matter_phase(theta: &[f64; 4], w_row: &[i32; 4]) -> f64 {
    let energy = |x: f64| -> f64 {
        -(0..4)
            .map(|i| w_row[i] as f64 * (x - theta[i]).cos())
            .sum::<f64>()
    };
    let grid = 512;
    let mut best_x = 0.0;
    let mut best_e = f64::INFINITY;
    for k in 0..grid {
        let x = std::f64::consts::TAU * k as f64 / grid as f64;
        let e = energy(x);
        if e < best_e {
            best_e = e;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = (best_x - 0.02, best_x + 0.02);
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..90 {
        let m1 = hi - gr * (hi - lo);
        let m2 = lo + gr * (hi - lo);
        if energy(m1) < energy(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    (lo + hi) / 2.0
}
