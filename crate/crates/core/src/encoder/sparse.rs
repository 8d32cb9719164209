use ndarray::{Array2, ArrayView2, Axis};

use crate::graph::SignedGraph;

/// Row-normalized adjacency in CSR form. Rows without neighbours are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RowNormalized {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    weight: Vec<f64>,
}

impl RowNormalized {
    pub fn from_neighbors<'a>(n: usize, rows: impl Fn(usize) -> &'a [usize]) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut weight = Vec::new();
        indptr.push(0);
        for i in 0..n {
            let nb = rows(i);
            let w = if nb.is_empty() { 0.0 } else { 1.0 / nb.len() as f64 };
            indices.extend_from_slice(nb);
            weight.extend(std::iter::repeat_n(w, nb.len()));
            indptr.push(indices.len());
        }
        RowNormalized {
            indptr,
            indices,
            weight,
        }
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    /// `A X`.
    pub fn mul(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows(), x.ncols()));
        for (i, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for (j, w) in self.row(i) {
                out_row.scaled_add(w, &x.row(j));
            }
        }
        out
    }

    /// `A^T G`.
    pub fn mul_transpose(&self, g: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows(), g.ncols()));
        for i in 0..self.nrows() {
            let gi = g.row(i);
            for (j, w) in self.row(i) {
                out.row_mut(j).scaled_add(w, &gi);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.nrows();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for (j, w) in self.row(i) {
                out[[i, j]] += w;
            }
        }
        out
    }
}

/// The positive and negative propagation matrices of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub pos: RowNormalized,
    pub neg: RowNormalized,
}

impl Propagation {
    pub fn new(graph: &SignedGraph) -> Self {
        let n = graph.num_nodes();
        Propagation {
            pos: RowNormalized::from_neighbors(n, |i| graph.pos_neighbors(i)),
            neg: RowNormalized::from_neighbors(n, |i| graph.neg_neighbors(i)),
        }
    }
}
