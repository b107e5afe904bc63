//! JSON documents for channels, states and bare matrices.
//!
//! Matrices are flat row-major arrays in the quadrature ordering
//! `(x1, p1, ..., xn, pn)`. Floats survive a write/read cycle bit for bit.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::GaussianChannel;
use crate::error::{Error, Result};
use crate::matrix::{from_row_major, max_abs, max_abs_diff, symmetrize, to_row_major, RMatrix};
use crate::state::GaussianState;

pub const SCHEMA_VERSION: &str = "1.0";

/// Self-description attached to every document this crate writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub ordering: String,
    pub omega: String,
    pub displacement: String,
    pub vacuum_covariance: String,
    pub channel_action: String,
    pub matrix_layout: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            ordering: "x1,p1,...,xn,pn".into(),
            omega: "block-diagonal [[0,1],[-1,0]]".into(),
            displacement: "D(xi) = exp(-i sqrt(2) xi^T R)".into(),
            vacuum_covariance: "identity".into(),
            channel_action: "V -> X^T V X + Y, m -> X^T m".into(),
            matrix_layout: "row-major".into(),
        }
    }
}

fn check_conventions(c: &Option<Conventions>) -> Result<()> {
    match c {
        Some(c) if *c != Conventions::default() => Err(Error::Malformed(format!(
            "document declares unsupported conventions: {}",
            serde_json::to_string(c).unwrap_or_default()
        ))),
        _ => Ok(()),
    }
}

fn check_version(v: &str) -> Result<()> {
    let major = v.split('.').next().unwrap_or("");
    if major != "1" {
        return Err(Error::Malformed(format!("unsupported schema_version {v:?}")));
    }
    Ok(())
}

fn square(name: &str, data: &[f64], dim: usize) -> Result<RMatrix> {
    if data.len() != dim * dim {
        return Err(Error::Malformed(format!(
            "{name} has {} entries, expected {} for a {dim}x{dim} matrix",
            data.len(),
            dim * dim
        )));
    }
    if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::Malformed(format!("{name} contains non-finite value {bad}")));
    }
    from_row_major(dim, dim, data)
}

fn check_modes(modes: usize) -> Result<usize> {
    if modes == 0 {
        return Err(Error::Malformed("modes must be at least 1".into()));
    }
    Ok(2 * modes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub schema_version: String,
    pub modes: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<Conventions>,
    /// Only trace-preserving maps are modelled; `false` is rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_preserving: Option<bool>,
}

impl ChannelDocument {
    pub fn from_channel(ch: &GaussianChannel, metadata: Option<Map<String, Value>>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            modes: ch.modes(),
            x: to_row_major(ch.x()),
            y: to_row_major(ch.y()),
            metadata,
            conventions: Some(Conventions::default()),
            trace_preserving: Some(true),
        }
    }

    /// Parses the matrices. Complete positivity is not checked here.
    pub fn to_channel(&self) -> Result<GaussianChannel> {
        check_version(&self.schema_version)?;
        check_conventions(&self.conventions)?;
        if self.trace_preserving == Some(false) {
            return Err(Error::Malformed("non-trace-preserving maps are not supported".into()));
        }
        let dim = check_modes(self.modes)?;
        let x = square("x", &self.x, dim)?;
        let y = square("y", &self.y, dim)?;
        let asym = max_abs_diff(&y, &y.transpose());
        if asym > 1e-9 * (1.0 + max_abs(&y)) {
            return Err(Error::Malformed(format!("y is not symmetric (max |y - y^T| = {asym:.3e})")));
        }
        GaussianChannel::new_unchecked(x, symmetrize(&y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub schema_version: String,
    pub modes: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<Conventions>,
}

impl StateDocument {
    pub fn from_state(st: &GaussianState, metadata: Option<Map<String, Value>>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            modes: st.modes(),
            mean: st.mean().iter().copied().collect(),
            cov: to_row_major(st.cov()),
            metadata,
            conventions: Some(Conventions::default()),
        }
    }

    /// Parses and validates `V + iΩ ⪰ 0`; any failure is a malformed document.
    pub fn to_state(&self) -> Result<GaussianState> {
        check_version(&self.schema_version)?;
        check_conventions(&self.conventions)?;
        let dim = check_modes(self.modes)?;
        if self.mean.len() != dim {
            return Err(Error::Malformed(format!("mean has {} entries, expected {dim}", self.mean.len())));
        }
        if let Some(bad) = self.mean.iter().find(|v| !v.is_finite()) {
            return Err(Error::Malformed(format!("mean contains non-finite value {bad}")));
        }
        let cov = square("cov", &self.cov, dim)?;
        let asym = max_abs_diff(&cov, &cov.transpose());
        if asym > 1e-9 * (1.0 + max_abs(&cov)) {
            return Err(Error::Malformed(format!("cov is not symmetric (max |V - V^T| = {asym:.3e})")));
        }
        GaussianState::new(DVector::from_row_slice(&self.mean), symmetrize(&cov))
            .map_err(|e| Error::Malformed(format!("invalid state: {e}")))
    }
}

/// A bare `2n × 2n` matrix, e.g. for decompositions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub schema_version: String,
    pub modes: usize,
    pub matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<Conventions>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &RMatrix) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            modes: m.nrows() / 2,
            matrix: to_row_major(m),
            conventions: Some(Conventions::default()),
        }
    }

    pub fn to_matrix(&self) -> Result<RMatrix> {
        check_version(&self.schema_version)?;
        check_conventions(&self.conventions)?;
        let dim = check_modes(self.modes)?;
        square("matrix", &self.matrix, dim)
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
}
