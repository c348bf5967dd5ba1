//! Cubic splines on uniform knots, in index coordinates (knot spacing 1).

fn thomas_141(rhs: &mut [f64]) {
    // Solves tridiag(1, 4, 1) x = rhs in place.
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let mut c_prime = vec![0.0; n];
    let mut denom = 4.0;
    c_prime[0] = 1.0 / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = 4.0 - c_prime[i - 1];
        c_prime[i] = 1.0 / denom;
        rhs[i] = (rhs[i] - rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
}

/// Second derivatives of the natural cubic spline through `y`.
pub(crate) fn natural_moments(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n <= 2 {
        return m;
    }
    let mut rhs: Vec<f64> = (1..n - 1)
        .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]))
        .collect();
    thomas_141(&mut rhs);
    m[1..n - 1].copy_from_slice(&rhs);
    m
}

/// Second derivatives of the periodic cubic spline through `y` (y[n] ≡ y[0]).
pub(crate) fn periodic_moments(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let rhs: Vec<f64> = (0..n)
        .map(|i| 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]))
        .collect();
    match n {
        0 | 1 => vec![0.0; n],
        2 => {
            // [[4, 2], [2, 4]] m = rhs
            let det = 12.0;
            vec![
                (4.0 * rhs[0] - 2.0 * rhs[1]) / det,
                (4.0 * rhs[1] - 2.0 * rhs[0]) / det,
            ]
        }
        _ => {
            // Sherman–Morrison on the cyclic system with unit corners.
            let gamma = -4.0;
            let mut diag = vec![4.0; n];
            diag[0] -= gamma;
            diag[n - 1] -= 1.0 / gamma;
            let x = solve_tridiag_unit_offdiag(&diag, &rhs);
            let mut u = vec![0.0; n];
            u[0] = gamma;
            u[n - 1] = 1.0;
            let z = solve_tridiag_unit_offdiag(&diag, &u);
            let fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
            x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
        }
    }
}

fn solve_tridiag_unit_offdiag(diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut d = rhs.to_vec();
    let mut denom = diag[0];
    c_prime[0] = 1.0 / denom;
    d[0] /= denom;
    for i in 1..n {
        denom = diag[i] - c_prime[i - 1];
        c_prime[i] = 1.0 / denom;
        d[i] = (d[i] - d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c_prime[i] * d[i + 1];
    }
    d
}

/// Evaluates the spline on cell `[i, i+1]` at local coordinate `t ∈ [0, 1]`.
/// `t == 0` returns `y_i` exactly and `t == 1` returns `y_{i+1}` exactly.
#[inline]
pub(crate) fn eval_cell(y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    if t == 0.0 {
        return y0;
    }
    if t == 1.0 {
        return y1;
    }
    let s = 1.0 - t;
    y0 + t * (y1 - y0) + ((s * s * s - s) * m0 + (t * t * t - t) * m1) / 6.0
}

/// Resamples a non-periodic uniform sequence (knots at `i/(n-1)`) onto `m`
/// uniform nodes including both endpoints.
pub(crate) fn resample_natural(y: &[f64], m: usize) -> Vec<f64> {
    let n = y.len();
    if n == 1 {
        return vec![y[0]; m];
    }
    let moments = natural_moments(y);
    let (num, den) = ((n - 1) as u64, (m.max(2) - 1) as u64);
    (0..m as u64)
        .map(|k| {
            let mut i = (k * num / den) as usize;
            let r = k * num % den;
            let mut t = r as f64 / den as f64;
            if i == n - 1 {
                i = n - 2;
                t = 1.0;
            }
            eval_cell(y[i], y[i + 1], moments[i], moments[i + 1], t)
        })
        .collect()
}

/// Resamples a periodic uniform sequence (knots at `i/n`) onto `m` nodes at `k/m`.
pub(crate) fn resample_periodic(y: &[f64], m: usize) -> Vec<f64> {
    let n = y.len();
    let moments = periodic_moments(y);
    let (num, den) = (n as u64, m as u64);
    (0..m as u64)
        .map(|k| {
            let i = (k * num / den) as usize;
            let r = k * num % den;
            let t = r as f64 / den as f64;
            let j = (i + 1) % n;
            eval_cell(y[i], y[j], moments[i], moments[j], t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_spline_reproduces_linear_data() {
        let y: Vec<f64> = (0..9).map(|i| 0.25 * i as f64 - 1.0).collect();
        let out = resample_natural(&y, 17);
        for (k, v) in out.iter().enumerate() {
            let expect = 0.125 * k as f64 - 1.0;
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_moments_satisfy_cyclic_system() {
        let y: Vec<f64> = (0..7).map(|i| ((i * i) % 5) as f64).collect();
        let m = periodic_moments(&y);
        let n = y.len();
        for i in 0..n {
            let lhs = m[(i + n - 1) % n] + 4.0 * m[i] + m[(i + 1) % n];
            let rhs = 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn resampling_hits_source_nodes_exactly() {
        let y = [0.3, -1.2, 2.5, 0.7, 4.1];
        let out = resample_natural(&y, 9);
        for (i, v) in y.iter().enumerate() {
            assert_eq!(out[2 * i], *v);
        }
        let out = resample_periodic(&y, 15);
        for (i, v) in y.iter().enumerate() {
            assert_eq!(out[3 * i], *v);
        }
    }
}
