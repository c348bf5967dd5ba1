//! Fitted surrogates on disk.
//!
//! A model directory holds a `meta` header and one raw tensor file per array:
//!
//! | file | shape |
//! |------|-------|
//! | `pca_in_basis.f64`, `pca_out_basis.f64` | `d × points` (one basis function per row) |
//! | `pca_in_eigenvalues.f64`, `pca_out_eigenvalues.f64` | `m` |
//! | `input_mean.f64`, `input_scale.f64` | `d_in` |
//! | `output_mean.f64`, `output_scale.f64` | `d_out` |
//! | `linear_matrix.f64`, `linear_bias.f64` | `d_out × d_in`, `d_out` |
//! | `layer<i>_weights.f64`, `layer<i>_bias.f64` | `rows × cols`, `rows` |
//!
//! Header keys not used for reconstruction (problem, seeds, training
//! settings) are carried along untouched.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use pcanet_core::pca::PcaModel;
use pcanet_core::regress::{Dense, LinearModel, MlpModel, Regressor, Standardizer};
use pcanet_core::surrogate::Surrogate;
use pcanet_core::{Domain, InnerProduct};

use crate::error::{io_err, HarnessError, Result};
use crate::meta::Meta;
use crate::tensor;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Keys owned by the serializer; caller metadata may not use them.
const RESERVED: &[&str] = &[
    "model_format_version",
    "regressor",
    "domain",
    "inner_product",
    "pca_in_resolution",
    "pca_in_dim",
    "pca_in_eigenvalue_count",
    "pca_out_resolution",
    "pca_out_dim",
    "pca_out_eigenvalue_count",
    "layer_dims",
];

fn format_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Format(msg.into())
}

/// Header and named tensor payloads for `sur`, with `extra` merged in.
pub fn to_parts(sur: &Surrogate, extra: &Meta) -> Result<(Meta, BTreeMap<String, Vec<u8>>)> {
    let mut meta = Meta::new();
    meta.set("model_format_version", MODEL_FORMAT_VERSION)?;
    meta.set("regressor", sur.regressor.kind())?;
    meta.set("domain", sur.pca_in.domain().name())?;
    meta.set("inner_product", sur.pca_in.inner_product().name())?;
    let mut blobs = BTreeMap::new();
    for (tag, pca) in [("pca_in", &sur.pca_in), ("pca_out", &sur.pca_out)] {
        meta.set(&format!("{tag}_resolution"), pca.resolution())?;
        meta.set(&format!("{tag}_dim"), pca.dim())?;
        meta.set(&format!("{tag}_eigenvalue_count"), pca.eigenvalues().len())?;
        // Column-major storage of the points × d basis is row-major d × points.
        blobs.insert(format!("{tag}_basis.f64"), tensor::encode(pca.basis_matrix().as_slice()));
        blobs.insert(format!("{tag}_eigenvalues.f64"), tensor::encode(pca.eigenvalues()));
    }
    for (tag, st) in [("input", &sur.input_scaling), ("output", &sur.output_scaling)] {
        blobs.insert(format!("{tag}_mean.f64"), tensor::encode(&st.mean));
        blobs.insert(format!("{tag}_scale.f64"), tensor::encode(&st.scale));
    }
    match &sur.regressor {
        Regressor::Linear(m) => {
            blobs.insert("linear_matrix.f64".into(), tensor::encode(m.matrix.transpose().as_slice()));
            blobs.insert("linear_bias.f64".into(), tensor::encode(m.bias.as_slice()));
        }
        Regressor::Mlp(m) => {
            meta.set_list("layer_dims", &m.dims())?;
            for (i, l) in m.layers.iter().enumerate() {
                blobs.insert(format!("layer{i}_weights.f64"), tensor::encode(l.weights.transpose().as_slice()));
                blobs.insert(format!("layer{i}_bias.f64"), tensor::encode(l.bias.as_slice()));
            }
        }
    }
    for (k, v) in extra.entries() {
        if RESERVED.contains(&k.as_str()) {
            return Err(HarnessError::Usage(format!("model metadata key `{k}` is reserved")));
        }
        meta.set(k, v)?;
    }
    Ok((meta, blobs))
}

fn fetch(blobs: &dyn Fn(&str) -> Option<Vec<u8>>, name: &str) -> Result<Vec<u8>> {
    blobs(name).ok_or_else(|| format_err(format!("missing tensor `{name}`")))
}

fn read_vec(blobs: &dyn Fn(&str) -> Option<Vec<u8>>, name: &str, len: usize) -> Result<Vec<f64>> {
    let v = tensor::decode_shaped(&fetch(blobs, name)?, &[len])
        .map_err(|e| format_err(format!("{name}: {e}")))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format_err(format!("{name} has non-finite entries")));
    }
    Ok(v)
}

/// Row-major `rows × cols` matrix.
fn read_matrix(blobs: &dyn Fn(&str) -> Option<Vec<u8>>, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| format_err(format!("{name}: shape {rows}×{cols} overflows")))?;
    Ok(DMatrix::from_row_slice(rows, cols, &read_vec(blobs, name, len)?))
}

fn read_pca(meta: &Meta, blobs: &dyn Fn(&str) -> Option<Vec<u8>>, tag: &str, domain: Domain, inner: InnerProduct) -> Result<PcaModel> {
    let n: usize = meta.parse_value(&format!("{tag}_resolution"))?;
    let d: usize = meta.parse_value(&format!("{tag}_dim"))?;
    let m: usize = meta.parse_value(&format!("{tag}_eigenvalue_count"))?;
    domain.check_resolution(n)?;
    let points = domain.num_points(n);
    let basis = read_matrix(blobs, &format!("{tag}_basis.f64"), d, points)?.transpose();
    let eig = read_vec(blobs, &format!("{tag}_eigenvalues.f64"), m)?;
    Ok(PcaModel::from_parts(domain, n, inner, basis, eig)?)
}

fn read_scaling(blobs: &dyn Fn(&str) -> Option<Vec<u8>>, tag: &str, dim: usize) -> Result<Standardizer> {
    let mean = read_vec(blobs, &format!("{tag}_mean.f64"), dim)?;
    let scale = read_vec(blobs, &format!("{tag}_scale.f64"), dim)?;
    if scale.iter().any(|s| !(*s > 0.0)) {
        return Err(format_err(format!("{tag} scales must be positive")));
    }
    Ok(Standardizer { mean, scale })
}

/// Rebuilds a surrogate from a header and a tensor lookup by file name.
pub fn from_parts(meta: &Meta, blobs: &dyn Fn(&str) -> Option<Vec<u8>>) -> Result<Surrogate> {
    let version: u32 = meta.parse_value("model_format_version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(format_err(format!("unsupported model_format_version {version}")));
    }
    let domain_name = meta.require("domain")?;
    let domain = Domain::parse(domain_name).ok_or_else(|| format_err(format!("unknown domain {domain_name:?}")))?;
    let inner_name = meta.require("inner_product")?;
    let inner = InnerProduct::parse(inner_name)
        .ok_or_else(|| format_err(format!("unknown inner product {inner_name:?}")))?;
    let pca_in = read_pca(meta, blobs, "pca_in", domain, inner)?;
    let pca_out = read_pca(meta, blobs, "pca_out", domain, inner)?;
    let (d_in, d_out) = (pca_in.dim(), pca_out.dim());
    let input_scaling = read_scaling(blobs, "input", d_in)?;
    let output_scaling = read_scaling(blobs, "output", d_out)?;
    let regressor = match meta.require("regressor")? {
        "linear" => Regressor::Linear(LinearModel::new(
            read_matrix(blobs, "linear_matrix.f64", d_out, d_in)?,
            DVector::from_vec(read_vec(blobs, "linear_bias.f64", d_out)?),
        )?),
        "nn" => {
            let dims: Vec<usize> = meta.parse_list("layer_dims")?;
            if dims.len() < 2 || dims[0] != d_in || dims[dims.len() - 1] != d_out {
                return Err(format_err(format!("layer_dims {dims:?} do not connect {d_in} to {d_out}")));
            }
            let mut layers = Vec::with_capacity(dims.len() - 1);
            for (i, w) in dims.windows(2).enumerate() {
                layers.push(Dense {
                    weights: read_matrix(blobs, &format!("layer{i}_weights.f64"), w[1], w[0])?,
                    bias: DVector::from_vec(read_vec(blobs, &format!("layer{i}_bias.f64"), w[1])?),
                });
            }
            Regressor::Mlp(MlpModel::from_layers(layers)?)
        }
        other => return Err(format_err(format!("unknown regressor {other:?}"))),
    };
    Ok(Surrogate::new(pca_in, pca_out, input_scaling, output_scaling, regressor)?)
}

pub fn save(sur: &Surrogate, extra: &Meta, dir: &Path) -> Result<()> {
    let (meta, blobs) = to_parts(sur, extra)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, bytes) in &blobs {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(io_err(p))?;
    }
    let p = dir.join("meta");
    fs::write(&p, meta.to_string()).map_err(io_err(p))
}

/// The surrogate and its full header.
pub fn load(dir: &Path) -> Result<(Surrogate, Meta)> {
    let p = dir.join("meta");
    let meta = Meta::parse(&fs::read_to_string(&p).map_err(io_err(&p))?)?;
    let blobs = |name: &str| fs::read(dir.join(name)).ok();
    let sur = from_parts(&meta, &blobs)?;
    Ok((sur, meta))
}
