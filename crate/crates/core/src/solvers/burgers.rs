use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{shape, Error, Result};
use crate::grid::{Domain, GridFunction};

/// `u_t + ½(u²)_s = β u_ss` on the unit torus.
#[derive(Debug, Clone)]
pub struct BurgersProblem {
    pub u0: GridFunction,
    pub viscosity: f64,
    pub t_final: f64,
}

impl BurgersProblem {
    pub fn new(u0: GridFunction, viscosity: f64, t_final: f64) -> Self {
        Self {
            u0,
            viscosity,
            t_final,
        }
    }

    fn validate(&self) -> Result<usize> {
        if self.u0.domain() != Domain::Torus1d {
            return Err(shape("Burgers initial data must live on the torus"));
        }
        if !(self.viscosity > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "viscosity and final time must be positive (got {}, {})",
                self.viscosity, self.t_final
            )));
        }
        Ok(self.u0.resolution())
    }
}

struct Transforms {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers `2πk` in FFT ordering, zero at the Nyquist index.
    wavenumber: Vec<f64>,
    /// 2/3-rule dealiasing mask.
    keep: Vec<bool>,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let signed = |i: usize| -> i64 {
            if i <= n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let wavenumber = (0..n)
            .map(|i| {
                let k = signed(i);
                if n.is_multiple_of(2) && i == n / 2 {
                    0.0
                } else {
                    2.0 * PI * k as f64
                }
            })
            .collect();
        let keep = (0..n).map(|i| 3 * signed(i).unsigned_abs() < n as u64).collect();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wavenumber,
            keep,
        }
    }

    fn to_spectral(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn to_physical(&self, hat: &[Complex64]) -> Vec<f64> {
        let mut buf = hat.to_vec();
        self.inverse.process(&mut buf);
        let inv_n = 1.0 / self.n as f64;
        buf.iter().map(|z| z.re * inv_n).collect()
    }

    /// Spectral derivative of a real field.
    fn derivative(&self, hat: &[Complex64]) -> Vec<Complex64> {
        hat.iter()
            .zip(&self.wavenumber)
            .map(|(z, k)| z * Complex64::new(0.0, *k))
            .collect()
    }

    /// Dealiased `-½ ∂_s(u²)` in spectral space.
    fn advection(&self, hat: &[Complex64]) -> Vec<Complex64> {
        let u = self.to_physical(hat);
        let sq: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        let sq_hat = self.to_spectral(&sq);
        sq_hat
            .iter()
            .zip(&self.wavenumber)
            .zip(&self.keep)
            .map(|((z, k), keep)| {
                if *keep {
                    -(z * Complex64::new(0.0, *k))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}

/// Pseudo-spectral solution at `t_final`.
///
/// Diffusion is integrated exactly through the factors `exp(-β(2πk)²t)`; the
/// dealiased advection term is advanced with classical RK4. The step is the
/// advective CFL bound `0.5·Δs / max|u₀|`, shortened so that it divides
/// `t_final` evenly (the maximum principle keeps `max|u|` from growing).
pub fn solve_burgers(p: &BurgersProblem) -> Result<GridFunction> {
    let t = p.t_final;
    solve_burgers_with_dumps(p, &[t]).map(|mut v| v.pop().expect("one dump"))
}

/// Solution at each of the (increasing) `times`, the last of which must be `t_final`.
pub fn solve_burgers_with_dumps(p: &BurgersProblem, times: &[f64]) -> Result<Vec<GridFunction>> {
    let n = p.validate()?;
    if !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "Burgers resolution must be a power of two, got {n}"
        )));
    }
    if times.is_empty()
        || times.windows(2).any(|w| w[1] <= w[0])
        || times[0] <= 0.0
        || (times[times.len() - 1] - p.t_final).abs() > 1e-12 * p.t_final
    {
        return Err(Error::Config(
            "dump times must be positive, increasing and end at t_final".into(),
        ));
    }
    let umax = p.u0.max_abs();
    if umax == 0.0 {
        return Ok(vec![p.u0.clone(); times.len()]);
    }
    let tr = Transforms::new(n);
    let dx = 1.0 / n as f64;
    let dt_cfl = 0.5 * dx / umax;
    let beta = p.viscosity;

    let mut hat = tr.to_spectral(p.u0.values());
    let mut out = Vec::with_capacity(times.len());
    let mut t_now = 0.0;
    for &t_dump in times {
        let span = t_dump - t_now;
        let steps = (span / dt_cfl).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let half: Vec<f64> = tr
            .wavenumber
            .iter()
            .map(|k| (-beta * k * k * dt * 0.5).exp())
            .collect();
        let full: Vec<f64> = half.iter().map(|e| e * e).collect();
        for step in 0..steps {
            let a: Vec<Complex64> = tr.advection(&hat).iter().map(|z| z * dt).collect();
            let stage: Vec<Complex64> = (0..n).map(|i| half[i] * (hat[i] + a[i] * 0.5)).collect();
            let b: Vec<Complex64> = tr.advection(&stage).iter().map(|z| z * dt).collect();
            let stage: Vec<Complex64> = (0..n).map(|i| half[i] * hat[i] + b[i] * 0.5).collect();
            let c: Vec<Complex64> = tr.advection(&stage).iter().map(|z| z * dt).collect();
            let stage: Vec<Complex64> = (0..n).map(|i| full[i] * hat[i] + half[i] * c[i]).collect();
            let d: Vec<Complex64> = tr.advection(&stage).iter().map(|z| z * dt).collect();
            for i in 0..n {
                hat[i] = full[i] * hat[i]
                    + (full[i] * a[i] + (b[i] + c[i]) * (2.0 * half[i]) + d[i]) / 6.0;
            }
            if hat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numerical(format!(
                    "Burgers solution blew up at t = {:.6} (step {} of {steps}, dt = {dt:e})",
                    t_now + (step + 1) as f64 * dt,
                    step + 1
                )));
            }
        }
        t_now = t_dump;
        out.push(GridFunction::new(Domain::Torus1d, n, tr.to_physical(&hat))?);
    }
    Ok(out)
}

/// Cole–Hopf solution `u = -2β ∂_s log θ`, `θ_t = β θ_ss`,
/// `θ(0) = exp(-∫u₀ / 2β)`, evaluated spectrally. Validation only.
pub fn oracle_burgers_colehopf(p: &BurgersProblem) -> Result<GridFunction> {
    let n = p.validate()?;
    let mean = p.u0.mean();
    if mean.abs() > 1e-12 * p.u0.max_abs().max(1.0) {
        return Err(Error::Domain(format!(
            "Cole–Hopf oracle needs mean-zero data, mean is {mean:e}"
        )));
    }
    let tr = Transforms::new(n);
    let beta = p.viscosity;
    let u_hat = tr.to_spectral(p.u0.values());
    // Periodic primitive of u0.
    let prim_hat: Vec<Complex64> = u_hat
        .iter()
        .zip(&tr.wavenumber)
        .map(|(z, k)| {
            if *k == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z / Complex64::new(0.0, *k)
            }
        })
        .collect();
    let prim = tr.to_physical(&prim_hat);
    let exponent: Vec<f64> = prim.iter().map(|v| -v / (2.0 * beta)).collect();
    let shift = exponent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let theta0: Vec<f64> = exponent.iter().map(|e| (e - shift).exp()).collect();
    let theta_hat: Vec<Complex64> = tr
        .to_spectral(&theta0)
        .iter()
        .zip(&tr.wavenumber)
        .enumerate()
        .map(|(i, (z, k))| {
            // Keep the Nyquist mode's own decay even though its derivative is dropped.
            let kk = if n % 2 == 0 && i == n / 2 {
                PI * n as f64
            } else {
                *k
            };
            z * (-beta * kk * kk * p.t_final).exp()
        })
        .collect();
    let theta = tr.to_physical(&theta_hat);
    let theta_s = tr.to_physical(&tr.derivative(&theta_hat));
    let values = theta
        .iter()
        .zip(&theta_s)
        .map(|(th, ds)| -2.0 * beta * ds / th)
        .collect();
    GridFunction::new(Domain::Torus1d, n, values)
}
