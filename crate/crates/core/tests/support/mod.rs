//! Shared oracles for the integration suites.
//!
//! Everything here recomputes reference values through code paths that are
//! independent of the library internals under test: the convection oracle is
//! a direct coefficient-space convolution (no FFT), and the delay oracle is
//! an exact interval-by-interval solution of the scalar delayed ODE in a
//! polynomial/exponential basis (no time stepping).

#![allow(dead_code)]

use num_complex::Complex64;

use nsv_core::spectral::SpectralField;

/// Direct dense convolution of `(u . grad) v` over the retained band:
/// `out_j(k) = sum_{p+q=k} u_a(p) * (i kappa_a(q)) * v_j(q)`, mean mode
/// zeroed, no Leray projection — the same contract as the pseudospectral
/// product, so the two must agree to round-off.
pub fn dense_convection(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let grid = u.grid();
    assert_eq!(grid, v.grid(), "oracle inputs must share a grid");
    let dim = grid.dim();
    let mc = grid.mode_count();
    let ks = grid.k_scale();
    let zero = grid.encode_mode(&[0, 0, 0]).expect("mean mode is always in band");
    let mut out = SpectralField::zeros(grid);
    for idx_k in 0..mc {
        if idx_k == zero {
            continue;
        }
        let k = grid.decode_mode(idx_k);
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for idx_q in 0..mc {
                let q = grid.decode_mode(idx_q);
                let p = [k[0] - q[0], k[1] - q[1], k[2] - q[2]];
                let Ok(idx_p) = grid.encode_mode(&p) else {
                    continue;
                };
                let vj = v.coeff(j, idx_q);
                for a in 0..dim {
                    let ik = Complex64::new(0.0, ks * q[a] as f64);
                    acc += u.coeff(a, idx_p) * ik * vj;
                }
            }
            out.coeffs_mut()[j * mc + idx_k] = acc;
        }
    }
    out
}

/// Largest coefficient distance between two fields, relative to the larger
/// field magnitude (absolute when both are tiny).
pub fn rel_coeff_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1e-300);
    a.coeffs()
        .iter()
        .zip(b.coeffs().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

// ---------------------------------------------------------------------------
// Exact scalar delay oracle.
//
// The single-mode amplitude obeys `m x'(t) = -c x(t) + gamma x(t - h)` with
// constant history `x0`.  Writing `a = c/m`, `b = gamma/m`, the solution on
// the j-th interval `[jh, (j+1)h]` has the closed form
// `x(jh + theta) = P_j(theta) + exp(-a theta) S_j(theta)` with polynomials
// P_j, S_j obtained recursively through variation of constants, so the
// oracle is exact up to f64 rounding — no discretization error at all.

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Polynomial `R` with `R' + a R = P`, solved coefficient-by-coefficient
/// from the top degree down.
fn poly_resolvent(p: &[f64], a: f64) -> Vec<f64> {
    let d = p.len();
    let mut r = vec![0.0; d];
    for i in (0..d).rev() {
        let upper = if i + 1 < d { (i as f64 + 1.0) * r[i + 1] } else { 0.0 };
        r[i] = (p[i] - upper) / a;
    }
    r
}

/// Antiderivative with zero constant term.
fn poly_antiderivative(s: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; s.len() + 1];
    for (i, c) in s.iter().enumerate() {
        t[i + 1] = c / (i as f64 + 1.0);
    }
    t
}

/// Exact method-of-steps value of `x(intervals * h)` for
/// `x'(t) = -a x(t) + b x(t - h)`, `x = x0` on `(-inf, 0]`.
pub fn dde_exact(a: f64, b: f64, x0: f64, h: f64, intervals: usize) -> f64 {
    assert!(a > 0.0 && h > 0.0);
    // Interval -1 is the constant history.
    let mut p_prev: Vec<f64> = vec![x0];
    let mut s_prev: Vec<f64> = vec![0.0];
    let mut x_left = x0;
    let mut x_right = x0;
    for _ in 0..intervals {
        let r = poly_resolvent(&p_prev, a);
        let t = poly_antiderivative(&s_prev);
        // x_j(theta) = b R(theta) + e^{-a theta} [x_j(0) - b R(0) + b T(theta)].
        let p_cur: Vec<f64> = r.iter().map(|c| b * c).collect();
        let mut s_cur: Vec<f64> = t.iter().map(|c| b * c).collect();
        s_cur[0] += x_left - b * r[0];
        x_right = poly_eval(&p_cur, h) + (-a * h).exp() * poly_eval(&s_cur, h);
        p_prev = p_cur;
        s_prev = s_cur;
        x_left = x_right;
    }
    x_right
}

/// Closed-form amplitude of a free single mode: `x0 e^{-nu kappa^2 t / m}`
/// with Voigt mass `m = 1 + alpha^2 kappa^2`.
pub fn free_mode_exact(x0: f64, nu: f64, alpha: f64, kappa_sq: f64, t: f64) -> f64 {
    x0 * (-nu * kappa_sq * t / (1.0 + alpha * alpha * kappa_sq)).exp()
}
