use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ZoqError};
use crate::rng::SeededRng;

/// `d x q` matrix of i.i.d. standard normal query directions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionBlock {
    pub directions: DMatrix<f64>,
    /// Seed and stream of the generator that produced the block.
    pub seed: u64,
    pub stream_id: u64,
}

impl DirectionBlock {
    /// Wrap an explicit matrix, e.g. a hand-picked block in a test.
    pub fn from_matrix(directions: DMatrix<f64>) -> Result<Self> {
        let (d, q) = directions.shape();
        if q < 1 || q > d {
            return Err(ZoqError::InvalidArgument(format!(
                "direction block must satisfy 1 <= q <= d, got d={d}, q={q}"
            )));
        }
        if directions.iter().any(|v| !v.is_finite()) {
            return Err(ZoqError::InvalidArgument(
                "direction block has non-finite entries".into(),
            ));
        }
        Ok(Self {
            directions,
            seed: 0,
            stream_id: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.nrows()
    }

    pub fn q(&self) -> usize {
        self.directions.ncols()
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.directions.column(i).into_owned()
    }
}

/// Draw a fresh block. Columns are filled one after another, each column
/// taking `dim` consecutive normals from `rng`.
pub fn sample_direction_block(dim: usize, q: usize, rng: &mut SeededRng) -> Result<DirectionBlock> {
    if q < 1 || q > dim {
        return Err(ZoqError::InvalidArgument(format!(
            "block size q={q} outside [1, {dim}]"
        )));
    }
    let seed = rng.seed();
    let stream_id = rng.stream_id();
    // nalgebra storage is column-major, so a flat fill is column by column.
    let mut data = vec![0.0; dim * q];
    rng.fill_normal(&mut data);
    Ok(DirectionBlock {
        directions: DMatrix::from_vec(dim, q, data),
        seed,
        stream_id,
    })
}
