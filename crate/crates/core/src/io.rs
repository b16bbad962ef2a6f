//! JSON file formats for operators, frames, and POVMs.
//!
//! Matrices serialize as `{"rows", "cols", "re", "im"}` with row-major
//! entry order (see [`crate::matrix::CMatrix`]). Frames add a
//! `{"dim_h", "dim_k", "weights"}` header around a matrix array; POVMs add
//! `{"dim", "dim_h", "dim_k"}`. Loading validates every structural
//! invariant before handing objects to the rest of the crate.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::OperatorFrame;
use crate::matrix::CMatrix;
use crate::povm::{DensityMatrix, Observable, Povm};

/// On-disk form of an operator frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameFile {
    pub dim_h: usize,
    pub dim_k: usize,
    /// Quadrature weights, folded into the elements as `√w_i` on load.
    /// Absent means all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub elements: Vec<CMatrix>,
}

impl FrameFile {
    pub fn into_frame(self) -> Result<OperatorFrame> {
        for (i, e) in self.elements.iter().enumerate() {
            if e.shape() != (self.dim_h, self.dim_k) {
                return Err(Error::ShapeMismatch(format!(
                    "frame element {i} has shape {:?}, header says {}x{}",
                    e.shape(),
                    self.dim_h,
                    self.dim_k
                )));
            }
        }
        match self.weights {
            Some(w) => OperatorFrame::weighted(self.elements, &w),
            None => OperatorFrame::new(self.elements),
        }
    }

    pub fn from_frame(frame: &OperatorFrame) -> Self {
        Self {
            dim_h: frame.dim_h(),
            dim_k: frame.dim_k(),
            weights: None,
            elements: frame.elements().to_vec(),
        }
    }
}

/// On-disk form of a POVM.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_k: Option<usize>,
    pub elements: Vec<CMatrix>,
}

impl PovmFile {
    pub fn into_povm(self) -> Result<Povm> {
        let split = match (self.dim_h, self.dim_k) {
            (Some(h), Some(k)) => Some((h, k)),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidPovm(
                    "dim_h and dim_k must be given together".into(),
                ))
            }
        };
        for (i, e) in self.elements.iter().enumerate() {
            if e.shape() != (self.dim, self.dim) {
                return Err(Error::ShapeMismatch(format!(
                    "POVM element {i} has shape {:?}, header says {dim}x{dim}",
                    e.shape(),
                    dim = self.dim
                )));
            }
        }
        Povm::new(self.elements, split)
    }

    pub fn from_povm(povm: &Povm) -> Self {
        let (dim_h, dim_k) = match povm.split() {
            Some((h, k)) => (Some(h), Some(k)),
            None => (None, None),
        };
        Self {
            dim: povm.dim(),
            dim_h,
            dim_k,
            elements: povm.elements().to_vec(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<CMatrix> {
    read_json(path)
}

pub fn load_density(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::new(load_matrix(path)?)
}

pub fn load_observable(path: &Path) -> Result<Observable> {
    let m = load_matrix(path)?;
    if m.is_hermitian(crate::tolerances::HERMITIAN_TOL) {
        Observable::hermitian(m)
    } else {
        Observable::general(m)
    }
}

pub fn load_frame(path: &Path) -> Result<OperatorFrame> {
    read_json::<FrameFile>(path)?.into_frame()
}

pub fn load_povm(path: &Path) -> Result<Povm> {
    read_json::<PovmFile>(path)?.into_povm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::pauli;
    use num_complex::Complex64;

    #[test]
    fn frame_file_round_trip_with_weights() {
        let file = FrameFile {
            dim_h: 2,
            dim_k: 2,
            weights: Some(vec![4.0, 1.0]),
            elements: vec![CMatrix::identity(2), pauli::x()],
        };
        let frame = file.into_frame().unwrap();
        // first element picked up √4 = 2
        assert!((frame.element(0) - &CMatrix::identity(2).scale(2.0)).frobenius_norm() < 1e-15);
        assert!((frame.element(1) - &pauli::x()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn frame_header_mismatch_is_rejected() {
        let file = FrameFile {
            dim_h: 3,
            dim_k: 3,
            weights: None,
            elements: vec![CMatrix::identity(2)],
        };
        assert!(file.into_frame().is_err());
    }

    #[test]
    fn povm_file_round_trip() {
        let half = CMatrix::identity(2).scale(0.5);
        let file = PovmFile {
            dim: 2,
            dim_h: None,
            dim_k: None,
            elements: vec![half.clone(), half],
        };
        let json = serde_json::to_string(&file).unwrap();
        let povm = serde_json::from_str::<PovmFile>(&json)
            .unwrap()
            .into_povm()
            .unwrap();
        assert_eq!(povm.len(), 2);
        assert!(povm.split().is_none());
    }

    #[test]
    fn density_loading_validates() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.json");
        write_json(&good, &CMatrix::identity(2).scale(0.5)).unwrap();
        assert!(load_density(&good).is_ok());

        let bad = dir.path().join("bad.json");
        write_json(&bad, &pauli::z()).unwrap();
        assert!(load_density(&bad).is_err());
    }

    #[test]
    fn observable_loading_detects_hermiticity() {
        let dir = tempfile::tempdir().unwrap();
        let h = dir.path().join("h.json");
        write_json(&h, &pauli::y()).unwrap();
        assert!(load_observable(&h).unwrap().is_hermitian());

        let g = dir.path().join("g.json");
        let nonherm = CMatrix::from_fn(2, 2, |r, c| {
            if (r, c) == (0, 1) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        write_json(&g, &nonherm).unwrap();
        assert!(!load_observable(&g).unwrap().is_hermitian());
    }
}
