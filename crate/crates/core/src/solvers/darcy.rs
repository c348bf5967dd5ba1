use crate::error::{shape, Error, Result};
use crate::grid::{Domain, GridFunction};

/// `-∇·(a∇u) = f` on the unit square with `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub a: GridFunction,
    pub f: GridFunction,
}

impl EllipticProblem {
    pub fn new(a: GridFunction, f: GridFunction) -> Self {
        Self { a, f }
    }

    fn validate(&self) -> Result<usize> {
        if self.a.domain() != Domain::Box2d || !self.a.same_grid(&self.f) {
            return Err(shape("coefficient and forcing must share a box2d grid"));
        }
        let n = self.a.resolution();
        if n < 3 {
            return Err(Error::Config(format!("resolution must be at least 3, got {n}")));
        }
        if let Some((idx, v)) = self
            .a
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0))
        {
            return Err(Error::Domain(format!(
                "coefficient must be positive, found {v} at node {idx}"
            )));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

const CG_TOLERANCE: f64 = 1e-10;

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Harmonic-mean coefficients on every face of the full grid: the
/// `n·(n-1)` horizontal faces `(i,j)–(i,j+1)` first, then the vertical faces
/// `(i,j)–(i+1,j)`, both row-major.
pub(crate) fn face_coefficients(a: &GridFunction) -> Vec<f64> {
    let n = a.resolution();
    let mut out = Vec::with_capacity(2 * n * (n - 1));
    for i in 0..n {
        for j in 0..n - 1 {
            out.push(harmonic(a.at(i, j), a.at(i, j + 1)));
        }
    }
    for i in 0..n - 1 {
        for j in 0..n {
            out.push(harmonic(a.at(i, j), a.at(i + 1, j)));
        }
    }
    out
}

/// Matrix-free five-point operator on the interior unknowns.
struct Stencil {
    m: usize,
    inv_h2: f64,
    // Face coefficients, (m+1) faces per interior line.
    east: Vec<f64>,  // east[i * (m+1) + j]: between columns j and j+1 in interior row i
    north: Vec<f64>, // north[j * (m+1) + i]: between rows i and i+1 in interior column j
    diag: Vec<f64>,
}

impl Stencil {
    fn new(a: &GridFunction) -> Self {
        let n = a.resolution();
        let m = n - 2;
        let h = 1.0 / (n - 1) as f64;
        let inv_h2 = 1.0 / (h * h);
        let mut east = vec![0.0; m * (m + 1)];
        let mut north = vec![0.0; m * (m + 1)];
        for r in 0..m {
            let gi = r + 1;
            for c in 0..=m {
                // grid columns c and c+1 on grid row gi
                east[r * (m + 1) + c] = harmonic(a.at(gi, c), a.at(gi, c + 1));
                // grid rows c and c+1 on grid column gi
                north[r * (m + 1) + c] = harmonic(a.at(c, gi), a.at(c + 1, gi));
            }
        }
        let mut diag = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                diag[r * m + c] = inv_h2
                    * (east[r * (m + 1) + c]
                        + east[r * (m + 1) + c + 1]
                        + north[c * (m + 1) + r]
                        + north[c * (m + 1) + r + 1]);
            }
        }
        Self {
            m,
            inv_h2,
            east,
            north,
            diag,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        let mp = m + 1;
        for r in 0..m {
            for c in 0..m {
                let k = r * m + c;
                let mut acc = self.diag[k] * x[k];
                let mut off = 0.0;
                if c > 0 {
                    off += self.east[r * mp + c] * x[k - 1];
                }
                if c + 1 < m {
                    off += self.east[r * mp + c + 1] * x[k + 1];
                }
                if r > 0 {
                    off += self.north[c * mp + r] * x[k - m];
                }
                if r + 1 < m {
                    off += self.north[c * mp + r + 1] * x[k + m];
                }
                acc -= self.inv_h2 * off;
                y[k] = acc;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conservative second-order finite differences with harmonic-mean face
/// coefficients, solved by Jacobi-preconditioned conjugate gradients to a
/// relative residual of `1e-10` (at most `20·n` iterations).
pub fn solve_darcy(p: &EllipticProblem) -> Result<GridFunction> {
    solve_darcy_with_stats(p).map(|(u, _)| u)
}

pub fn solve_darcy_with_stats(p: &EllipticProblem) -> Result<(GridFunction, CgStats)> {
    let n = p.validate()?;
    let m = n - 2;
    let stencil = Stencil::new(&p.a);
    let mut b = Vec::with_capacity(m * m);
    for r in 1..n - 1 {
        for c in 1..n - 1 {
            b.push(p.f.at(r, c));
        }
    }
    let b_norm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; m * m];
    let mut stats = CgStats {
        iterations: 0,
        relative_residual: 0.0,
    };
    if b_norm > 0.0 {
        let max_iter = 20 * n;
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&stencil.diag).map(|(r, d)| r / d).collect();
        let mut dir = z.clone();
        let mut q = vec![0.0; m * m];
        let mut rz = dot(&r, &z);
        let mut res = 1.0;
        let mut converged = false;
        for it in 1..=max_iter {
            stencil.apply(&dir, &mut q);
            let alpha = rz / dot(&dir, &q);
            for k in 0..x.len() {
                x[k] += alpha * dir[k];
                r[k] -= alpha * q[k];
            }
            res = dot(&r, &r).sqrt() / b_norm;
            stats.iterations = it;
            if !res.is_finite() {
                break;
            }
            if res < CG_TOLERANCE {
                converged = true;
                break;
            }
            for k in 0..z.len() {
                z[k] = r[k] / stencil.diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..dir.len() {
                dir[k] = z[k] + beta * dir[k];
            }
        }
        stats.relative_residual = res;
        if !converged {
            return Err(Error::Numerical(format!(
                "conjugate gradients stopped after {} iterations with relative residual {res:e}",
                stats.iterations
            )));
        }
    }
    let mut values = vec![0.0; n * n];
    for r in 0..m {
        values[(r + 1) * n + 1..(r + 1) * n + 1 + m].copy_from_slice(&x[r * m..(r + 1) * m]);
    }
    Ok((GridFunction::new(Domain::Box2d, n, values)?, stats))
}

/// `-Δu = f` with homogeneous Dirichlet data.
pub fn solve_poisson(f: &GridFunction) -> Result<GridFunction> {
    let a = GridFunction::constant(Domain::Box2d, f.resolution(), 1.0);
    solve_darcy(&EllipticProblem::new(a, f.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn manufactured_error(n: usize) -> f64 {
        let f = GridFunction::from_fn_box(n, |a, b| 2.0 * PI * PI * (PI * a).sin() * (PI * b).sin())
            .unwrap();
        let exact = GridFunction::from_fn_box(n, |a, b| (PI * a).sin() * (PI * b).sin()).unwrap();
        solve_poisson(&f).unwrap().sub(&exact).unwrap().max_abs()
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let e: Vec<f64> = [17, 33, 65].iter().map(|&n| manufactured_error(n)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order}, errors {e:?}");
        }
    }

    /// Series solution of -Δu = 1 on the unit square at its center.
    fn poisson_center_series() -> f64 {
        let mut sum = 0.0;
        for j in (1..400).step_by(2) {
            for k in (1..400).step_by(2) {
                let (jf, kf) = (j as f64, k as f64);
                let coeff = 16.0 / (PI * PI * jf * kf);
                let sign = if ((j + k) / 2 - 1) % 2 == 0 { 1.0 } else { -1.0 };
                // sin(jπ/2) sin(kπ/2) = (-1)^((j-1)/2 + (k-1)/2)
                sum += sign * coeff / (PI * PI * (jf * jf + kf * kf));
            }
        }
        sum
    }

    #[test]
    fn unit_forcing_center_value() {
        let oracle = poisson_center_series();
        assert!((oracle - 0.07367).abs() < 1e-4, "{oracle}");
        let u = solve_poisson(&GridFunction::constant(Domain::Box2d, 129, 1.0)).unwrap();
        assert!((u.at(64, 64) - oracle).abs() < 1e-3);
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let a = GridFunction::from_fn_box(17, |x, y| 1.0 + x * y).unwrap();
        let u = solve_darcy(&EllipticProblem::new(a, GridFunction::zeros(Domain::Box2d, 17))).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn rejects_non_positive_coefficient() {
        let mut v = vec![1.0; 81];
        v[40] = 0.0;
        let a = GridFunction::new(Domain::Box2d, 9, v).unwrap();
        let f = GridFunction::constant(Domain::Box2d, 9, 1.0);
        assert!(matches!(
            solve_darcy(&EllipticProblem::new(a, f)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn linearity() {
        let f1 = GridFunction::from_fn_box(33, |a, b| a * (1.0 - b)).unwrap();
        let f2 = GridFunction::from_fn_box(33, |a, b| (3.0 * a).cos() + b).unwrap();
        let combo = solve_poisson(&f2.add_scaled(2.5, &f1).unwrap()).unwrap();
        let sep = solve_poisson(&f2)
            .unwrap()
            .add_scaled(2.5, &solve_poisson(&f1).unwrap())
            .unwrap();
        assert!(combo.sub(&sep).unwrap().max_abs() < 1e-8 * combo.max_abs());
    }

    #[test]
    fn maximum_principle_and_symmetry() {
        // Symmetric two-phase coefficient and forcing.
        let a = GridFunction::from_fn_box(33, |x, y| if (x - 0.5) * (y - 0.5) > 0.0 { 12.0 } else { 3.0 })
            .unwrap();
        let f = GridFunction::from_fn_box(33, |x, y| 1.0 + x * y).unwrap();
        let u = solve_darcy(&EllipticProblem::new(a, f)).unwrap();
        assert!(u.values().iter().all(|v| *v >= -1e-12));
        let scale = u.max_abs();
        for i in 0..33 {
            for j in 0..33 {
                assert!((u.at(i, j) - u.at(j, i)).abs() < 1e-8 * scale);
            }
        }
    }
}
