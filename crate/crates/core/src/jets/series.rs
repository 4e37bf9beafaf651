//! Univariate Taylor series: coefficient generators for the elementary
//! functions and a small truncated-series algebra used for collar expansions.

use super::{JetError, SINGULAR_EPS};

/// Coefficients of `(a0 + t)^r` in powers of `t`.
pub fn powf_coeffs(a0: f64, r: f64, order: usize, name: &'static str) -> Result<Vec<f64>, JetError> {
    let is_int = r.fract() == 0.0 && r >= 0.0;
    if !is_int && (a0.abs() < SINGULAR_EPS || (a0 < 0.0 && r.fract() != 0.0)) {
        return Err(JetError::Singular { function: name, value: a0 });
    }
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for m in 0..=order {
        if m > 0 {
            binom *= (r - (m as f64 - 1.0)) / m as f64;
        }
        out.push(if binom == 0.0 { 0.0 } else { binom * a0.powf(r - m as f64) });
    }
    Ok(out)
}

pub fn exp_coeffs(a0: f64, order: usize) -> Vec<f64> {
    let mut out = vec![a0.exp()];
    for m in 1..=order {
        let prev = out[m - 1];
        out.push(prev / m as f64);
    }
    out
}

pub fn ln_coeffs(a0: f64, order: usize) -> Result<Vec<f64>, JetError> {
    if a0 < SINGULAR_EPS {
        return Err(JetError::Singular { function: "log", value: a0 });
    }
    let mut out = vec![a0.ln()];
    for m in 1..=order {
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        out.push(sign / (m as f64 * a0.powi(m as i32)));
    }
    Ok(out)
}

fn sin_cos(a0: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (s0, c0) = a0.sin_cos();
    // derivatives cycle through (s, c, −s, −c)
    let cycle_s = [s0, c0, -s0, -c0];
    let cycle_c = [c0, -s0, -c0, s0];
    let mut fact = 1.0;
    let mut s = Vec::with_capacity(order + 1);
    let mut c = Vec::with_capacity(order + 1);
    for m in 0..=order {
        if m > 0 {
            fact *= m as f64;
        }
        s.push(cycle_s[m % 4] / fact);
        c.push(cycle_c[m % 4] / fact);
    }
    (s, c)
}

pub fn sin_coeffs(a0: f64, order: usize) -> Vec<f64> {
    sin_cos(a0, order).0
}

pub fn cos_coeffs(a0: f64, order: usize) -> Vec<f64> {
    sin_cos(a0, order).1
}

/// tanh via the ODE `T' = 1 − T²`.
pub fn tanh_coeffs(a0: f64, order: usize) -> Vec<f64> {
    let mut t = vec![a0.tanh()];
    for m in 0..order {
        let conv: f64 = (0..=m).map(|i| t[i] * t[m - i]).sum();
        let rhs = if m == 0 { 1.0 - conv } else { -conv };
        t.push(rhs / (m as f64 + 1.0));
    }
    t
}

/// Truncated product of two univariate series.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
}

/// `f(g(t))` for `g` with zero constant term.
pub fn compose(f: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut g0 = g.to_vec();
    if !g0.is_empty() {
        g0[0] = 0.0;
    }
    let mut acc = vec![0.0; n];
    for &c in f.iter().take(n).rev() {
        acc = mul(&acc, &g0);
        acc[0] += c;
    }
    acc
}

/// Compositional inverse of `g(t) = g1 t + g2 t² + …` (requires `g1 ≠ 0`).
pub fn revert(g: &[f64]) -> Result<Vec<f64>, JetError> {
    let n = g.len();
    if n < 2 || g[1].abs() < SINGULAR_EPS {
        return Err(JetError::Singular { function: "series reversion", value: g.get(1).copied().unwrap_or(0.0) });
    }
    // Newton-free fixed point: t = (s − Σ_{k≥2} g_k t^k) / g1, refined order by order.
    let mut t = vec![0.0; n];
    t[1] = 1.0 / g[1];
    for _ in 2..n {
        let mut higher = g.to_vec();
        higher[0] = 0.0;
        higher[1] = 0.0;
        let h = compose(&higher, &t);
        let mut next = vec![0.0; n];
        next[1] = 1.0 / g[1];
        for k in 2..n {
            next[k] = -h[k] / g[1];
        }
        t = next;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_matches_known_series() {
        let t = tanh_coeffs(0.0, 5);
        let expect = [0.0, 1.0, 0.0, -1.0 / 3.0, 0.0, 2.0 / 15.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn reversion_roundtrip() {
        let g = [0.0, 2.0, 0.5, -0.3, 0.1, 0.07];
        let t = revert(&g).unwrap();
        let id = compose(&g, &t);
        for (k, c) in id.iter().enumerate() {
            let e = if k == 1 { 1.0 } else { 0.0 };
            assert!((c - e).abs() < 1e-13, "{k}: {c}");
        }
    }

    #[test]
    fn sqrt_series() {
        let c = powf_coeffs(4.0, 0.5, 2, "sqrt").unwrap();
        assert!((c[0] - 2.0).abs() < 1e-15);
        assert!((c[1] - 0.25).abs() < 1e-15);
        assert!((c[2] + 1.0 / 64.0).abs() < 1e-15);
    }
}
