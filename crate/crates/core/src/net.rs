//! Feed-forward ReLU networks `[(W_1, b_1), ..., (W_L, b_L)]` with sparse
//! weight matrices.
//!
//! The activation is applied after every layer except the last one, so a
//! depth-1 network is a plain affine map. Weight matrices are stored in CSR
//! form and never hold explicit zeros, which makes the weight count
//! `M = sum_l (nnz(W_l) + nnz(b_l))` equal to the number of stored entries
//! plus the nonzero biases.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};

/// One affine layer `x -> W x + b` with `W` stored row-compressed.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    /// Builds a layer from `(row, col, value)` triplets in any order.
    ///
    /// Zero values are dropped. Duplicate positions are kept so that
    /// [`validate`] can report them.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I, bias: Vec<f64>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if bias.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: bias.len(),
            });
        }
        if cols > u32::MAX as usize {
            return Err(invalid("layer input width exceeds u32 range"));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(invalid(alloc::format!(
                    "triplet ({i}, {j}) outside a {rows}x{cols} layer"
                )));
            }
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = entries.iter().map(|e| e.1 as u32).collect();
        let values = entries.iter().map(|e| e.2).collect();
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            bias,
        })
    }

    /// Depth-1 building block with no weights at all.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            bias: vec![0.0; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Stored (hence nonzero) weight entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn bias_nnz(&self) -> usize {
        self.bias.iter().filter(|b| **b != 0.0).count()
    }

    /// `M_l = ||W_l||_0 + ||b_l||_0`.
    pub fn weight_count(&self) -> usize {
        self.nnz() + self.bias_nnz()
    }

    /// Column indices and values of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j as usize, v))
        })
    }

    /// `out = W x + b`.
    pub(crate) fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(self.rows);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j as usize];
            }
            out.push(acc + self.bias[i]);
        }
    }
}

/// Incremental row-by-row layer assembly used by the network constructions.
pub(crate) struct LayerBuilder {
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    bias: Vec<f64>,
    scratch: Vec<(u32, f64)>,
}

impl LayerBuilder {
    pub(crate) fn new(cols: usize) -> Self {
        Self {
            cols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
            bias: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Appends one output neuron. Column indices must be distinct.
    pub(crate) fn push_row<I>(&mut self, entries: I, bias: f64)
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        self.scratch.clear();
        for (j, v) in entries {
            debug_assert!(j < self.cols);
            if v != 0.0 {
                self.scratch.push((j as u32, v));
            }
        }
        self.scratch.sort_by_key(|e| e.0);
        debug_assert!(self.scratch.windows(2).all(|w| w[0].0 != w[1].0));
        for &(j, v) in &self.scratch {
            self.col_idx.push(j);
            self.values.push(v);
        }
        self.row_ptr.push(self.col_idx.len());
        self.bias.push(bias);
    }

    pub(crate) fn finish(self) -> Layer {
        Layer {
            rows: self.bias.len(),
            cols: self.cols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
            bias: self.bias,
        }
    }
}

/// A structural problem found by [`validate`]. Layer numbers are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Defect {
    Empty,
    Chaining {
        layer: usize,
        expected_cols: usize,
        found_cols: usize,
    },
    NonFiniteWeight { layer: usize, row: usize, col: usize },
    NonFiniteBias { layer: usize, row: usize },
    DuplicateEntry { layer: usize, row: usize, col: usize },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::Empty => write!(f, "network has no layers"),
            Defect::Chaining {
                layer,
                expected_cols,
                found_cols,
            } => write!(
                f,
                "layer {layer} has {found_cols} input columns, previous layer outputs {expected_cols}"
            ),
            Defect::NonFiniteWeight { layer, row, col } => {
                write!(f, "layer {layer} weight ({row}, {col}) is not finite")
            }
            Defect::NonFiniteBias { layer, row } => {
                write!(f, "layer {layer} bias entry {row} is not finite")
            }
            Defect::DuplicateEntry { layer, row, col } => {
                write!(f, "layer {layer} stores position ({row}, {col}) more than once")
            }
        }
    }
}

/// Lists every structural defect of a layer stack; empty iff the stack is a
/// valid network.
pub fn validate(layers: &[Layer]) -> Vec<Defect> {
    let mut defects = Vec::new();
    if layers.is_empty() {
        defects.push(Defect::Empty);
        return defects;
    }
    for (idx, layer) in layers.iter().enumerate() {
        let number = idx + 1;
        if idx > 0 && layer.cols != layers[idx - 1].rows {
            defects.push(Defect::Chaining {
                layer: number,
                expected_cols: layers[idx - 1].rows,
                found_cols: layer.cols,
            });
        }
        for i in 0..layer.rows {
            let (cols, vals) = layer.row(i);
            for (k, (&j, &v)) in cols.iter().zip(vals).enumerate() {
                if !v.is_finite() {
                    defects.push(Defect::NonFiniteWeight {
                        layer: number,
                        row: i,
                        col: j as usize,
                    });
                }
                if k > 0 && cols[k - 1] == j {
                    defects.push(Defect::DuplicateEntry {
                        layer: number,
                        row: i,
                        col: j as usize,
                    });
                }
            }
        }
        for (i, b) in layer.bias.iter().enumerate() {
            if !b.is_finite() {
                defects.push(Defect::NonFiniteBias { layer: number, row: i });
            }
        }
    }
    defects
}

/// Depth and weight bookkeeping of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkStats {
    pub depth: usize,
    pub weights: usize,
    pub per_layer: Vec<usize>,
    pub max_width: usize,
    pub input_dim: usize,
    pub output_dim: usize,
}

/// A validated ReLU network. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let defects = validate(&layers);
        if defects.is_empty() {
            Ok(Self { layers })
        } else {
            Err(Error::InvalidNetwork(defects))
        }
    }

    /// Used by the combinators, whose outputs are valid by construction.
    pub(crate) fn from_layers(layers: Vec<Layer>) -> Self {
        debug_assert!(!layers.is_empty());
        debug_assert!(layers.windows(2).all(|w| w[1].cols == w[0].rows));
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    /// `N_0, ..., N_L`.
    pub fn widths(&self) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.layers.len() + 1);
        widths.push(self.input_dim());
        widths.extend(self.layers.iter().map(Layer::rows));
        widths
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(Layer::weight_count).sum()
    }

    pub fn stats(&self) -> NetworkStats {
        let per_layer: Vec<usize> = self.layers.iter().map(Layer::weight_count).collect();
        NetworkStats {
            depth: self.depth(),
            weights: per_layer.iter().sum(),
            per_layer,
            max_width: self.widths().into_iter().max().unwrap_or(0),
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
        }
    }

    pub fn evaluate(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.evaluate_with(input, |_, _| {})
    }

    /// Evaluates the network and hands every hidden activation (after the
    /// ReLU) to `visit` together with its 1-based layer number.
    pub fn evaluate_with<F>(&self, input: &[f64], mut visit: F) -> Result<Vec<f64>>
    where
        F: FnMut(usize, &[f64]),
    {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: input.len(),
            });
        }
        let depth = self.layers.len();
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.apply(&current, &mut next);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: idx + 1 });
            }
            if idx + 1 < depth {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
                visit(idx + 1, &next);
            }
            core::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }
}
