use crate::error::{Error, Result};

/// Sliding windows of PIT data: row `t` is `(U_t, ..., U_{t+p})` flattened
/// time-major, so slice `s` occupies columns `s*d .. s*d + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    d: usize,
    p: usize,
    data: Vec<f64>,
}

impl BlockMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn width(&self) -> usize {
        (self.p + 1) * self.d
    }

    pub fn n_blocks(&self) -> usize {
        self.data.len() / self.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.width())
    }

    /// The trailing `n` blocks.
    pub fn tail(&self, n: usize) -> BlockMatrix {
        let n = n.min(self.n_blocks());
        let start = (self.n_blocks() - n) * self.width();
        BlockMatrix {
            d: self.d,
            p: self.p,
            data: self.data[start..].to_vec(),
        }
    }
}

/// Checks an `n x d` PIT matrix and returns `d`.
pub(crate) fn check_pit(pit: &[Vec<f64>]) -> Result<usize> {
    let d = pit.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::InsufficientData("empty PIT matrix".into()));
    }
    for (t, row) in pit.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Precondition(format!("PIT row {t} has {} columns, expected {d}", row.len())));
        }
        if row.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return Err(Error::Domain(format!("PIT row {t} has entries outside (0,1)")));
        }
    }
    Ok(d)
}

/// Stacks `p + 1` consecutive observations per row.
pub fn build_blocks(pit: &[Vec<f64>], p: usize) -> Result<BlockMatrix> {
    let d = check_pit(pit)?;
    let n = pit.len();
    if n <= p + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} observations cannot form blocks of order {p}"
        )));
    }
    let rows = n - p;
    let mut data = Vec::with_capacity(rows * (p + 1) * d);
    for t in 0..rows {
        for row in &pit[t..=t + p] {
            data.extend_from_slice(row);
        }
    }
    Ok(BlockMatrix { d, p, data })
}
