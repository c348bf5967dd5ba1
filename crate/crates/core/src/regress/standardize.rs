use nalgebra::DMatrix;

use crate::error::{shape, Result};

/// Per-coordinate affine rescaling of latent inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Z-scoring statistics of the rows of `data`. With `center = false` only
    /// the root-mean-square scale is removed. Constant coordinates keep scale 1.
    pub fn fit(data: &DMatrix<f64>, center: bool) -> Self {
        let (rows, cols) = data.shape();
        let mut mean = vec![0.0; cols];
        let mut scale = vec![1.0; cols];
        if rows == 0 {
            return Self { mean, scale };
        }
        for j in 0..cols {
            let col = data.column(j);
            let mu = if center { col.sum() / rows as f64 } else { 0.0 };
            let var = col.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / rows as f64;
            mean[j] = mu;
            if var > 0.0 {
                scale[j] = var.sqrt();
            }
        }
        Self { mean, scale }
    }

    /// Per-coordinate centering (optional) with one shared scale, the root
    /// mean variance over coordinates. Relative weights of coordinates are kept.
    pub fn fit_global(data: &DMatrix<f64>, center: bool) -> Self {
        let per = Self::fit(data, center);
        let cols = data.ncols();
        let var = if data.nrows() == 0 || cols == 0 {
            0.0
        } else {
            (0..cols)
                .map(|j| {
                    let m = per.mean[j];
                    data.column(j).iter().map(|x| (x - m).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
                / (data.nrows() * cols) as f64
        };
        let s = if var > 0.0 { var.sqrt() } else { 1.0 };
        Self {
            mean: per.mean,
            scale: vec![s; cols],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.dim() {
            return Err(shape(format!(
                "standardizer has dimension {}, input has {}",
                self.dim(),
                s.len()
            )));
        }
        Ok(s.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, sd))| (x - m) / sd)
            .collect())
    }

    pub fn apply_batch(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.dim() {
            return Err(shape(format!(
                "standardizer has dimension {}, input has {} columns",
                self.dim(),
                data.ncols()
            )));
        }
        let mut out = data.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (m, sd) = (self.mean[j], self.scale[j]);
            col.apply(|x| *x = (*x - m) / sd);
        }
        Ok(out)
    }
}

impl Standardizer {
    /// Inverse map `z ↦ mean + scale·z`.
    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(shape(format!(
                "standardizer has dimension {}, input has {}",
                self.dim(),
                z.len()
            )));
        }
        Ok(z.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(z, (m, sd))| m + sd * z)
            .collect())
    }

    pub fn invert_batch(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.dim() {
            return Err(shape(format!(
                "standardizer has dimension {}, input has {} columns",
                self.dim(),
                data.ncols()
            )));
        }
        let mut out = data.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (m, sd) = (self.mean[j], self.scale[j]);
            col.apply(|x| *x = m + sd * *x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zscore_statistics() {
        let data = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 3.0, 5.0, 5.0, 5.0, 7.0, 5.0]);
        let st = Standardizer::fit(&data, true);
        assert_eq!(st.mean, vec![4.0, 5.0]);
        assert!((st.scale[0] - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(st.scale[1], 1.0);
        let z = st.apply_batch(&data).unwrap();
        assert!(z.column(0).sum().abs() < 1e-14);
        assert_eq!(st.apply(&[4.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        let back = st.invert_batch(&z).unwrap();
        assert!((back - &data).amax() < 1e-14);
    }

    #[test]
    fn global_scale_is_shared() {
        let data = DMatrix::from_row_slice(2, 2, &[1.0, 10.0, -1.0, -10.0]);
        let st = Standardizer::fit_global(&data, true);
        // Mean variance over coordinates: (1 + 100) / 2.
        assert_eq!(st.scale[0], st.scale[1]);
        assert!((st.scale[0] - 50.5f64.sqrt()).abs() < 1e-14);
        let z = st.apply(&[1.0, 10.0]).unwrap();
        let back = st.invert(&z).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-15 && (back[1] - 10.0).abs() < 1e-14);
    }
}
