//! File-format boundary: audio ingestion, NPY feature matrices, model files.

mod audio;
mod model;
pub mod npy;

use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use audio::{conform, load_audio, write_wav, Waveform};
pub(crate) use audio::rms as audio_rms;
pub use model::{load_model, model_from_str, model_to_string, save_model, Persist, SCHEMA_VERSION};

use crate::config::DEFAULT_FRAME_RATE;
use crate::error::{Error, Result};

/// `T x D` frame-level speech representation at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f32>,
    frame_rate: f64,
}

impl FeatureMatrix {
    pub fn new(data: Array2<f32>, frame_rate: f64) -> Result<Self> {
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::invalid(format!("frame rate must be positive, got {frame_rate}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature matrix has a non-finite entry at flat index {pos}"
            )));
        }
        Ok(Self { data, frame_rate })
    }

    pub fn from_rows(rows: &[Vec<f32>], frame_rate: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged rows"));
        }
        let flat: Vec<f32> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), dim), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(data, frame_rate)
    }

    pub fn empty(dim: usize, frame_rate: f64) -> Result<Self> {
        Self::new(Array2::zeros((0, dim)), frame_rate)
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.frames() == 0
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / self.frame_rate
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f32> {
        self.data.row(t)
    }

    pub fn view(&self) -> ArrayView2<'_, f32> {
        self.data.view()
    }

    pub fn data(&self) -> &Array2<f32> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f32> {
        self.data
    }

    /// Copy of frames `[start, end)`.
    pub fn slice_frames(&self, start: usize, end: usize) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.slice(s![start..end, ..]).to_owned(),
            frame_rate: self.frame_rate,
        }
    }

    /// Stacks matrices along the frame axis. All parts must share `dim`.
    pub fn concat(parts: &[FeatureMatrix], dim: usize, frame_rate: f64) -> Result<FeatureMatrix> {
        if let Some(bad) = parts.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        let views: Vec<_> = parts.iter().map(|p| p.data.view()).collect();
        let data = if views.is_empty() {
            Array2::zeros((0, dim))
        } else {
            ndarray::concatenate(Axis(0), &views).map_err(|e| Error::invalid(e.to_string()))?
        };
        Ok(FeatureMatrix { data, frame_rate })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    frame_rate: f64,
}

/// Metadata file stored next to a feature file: `utt.npy` -> `utt.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Reads a 2-D float NPY file. The frame rate comes from the sidecar when
/// present, else [`DEFAULT_FRAME_RATE`].
pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    read_feature_matrix_or(path, DEFAULT_FRAME_RATE)
}

pub fn read_feature_matrix_or(path: impl AsRef<Path>, default_rate: f64) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let data = npy::decode(&bytes).map_err(|e| match e {
        Error::Npy(msg) => Error::Npy(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let side = sidecar_path(path);
    let frame_rate = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let meta: Sidecar = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("{}: {e}", side.display())))?;
        meta.frame_rate
    } else {
        default_rate
    };
    FeatureMatrix::new(data, frame_rate)
}

/// Writes `matrix` as NPY v1.0 little-endian float32 plus its frame-rate sidecar.
pub fn write_feature_matrix(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = npy::encode(matrix.data.view())?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let meta = serde_json::to_string(&Sidecar { frame_rate: matrix.frame_rate })
        .expect("sidecar serializes");
    std::fs::write(&side, meta).map_err(|e| Error::io(&side, e))
}
