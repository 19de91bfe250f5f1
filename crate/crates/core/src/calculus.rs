//! Network combinators: identity networks, affine wrappers, sparse
//! concatenation, parallelization.
//!
//! Two compositions are provided. [`concat`] is the plain composition that
//! merges the last layer of the inner network with the first layer of the
//! outer one; it is used to attach affine pre/post maps. [`concat_sparse`]
//! inserts a depth-2 identity between the two networks so that the weight
//! count stays additively bounded: depth adds up exactly and
//! `M(f o g) <= 2 (M(f) + M(g))`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::net::{Layer, LayerBuilder, ReluNetwork};

/// Identity on `R^k` with the given depth, using the split
/// `x = relu(x) - relu(-x)` on every coordinate. Uses exactly `2 k L` weights.
pub fn identity_net(k: usize, depth: usize) -> Result<ReluNetwork> {
    if depth < 2 {
        return Err(invalid("identity network needs depth >= 2"));
    }
    let mut layers = Vec::with_capacity(depth);
    let mut first = LayerBuilder::new(k);
    for i in 0..k {
        first.push_row([(i, 1.0)], 0.0);
    }
    for i in 0..k {
        first.push_row([(i, -1.0)], 0.0);
    }
    layers.push(first.finish());
    for _ in 2..depth {
        let mut mid = LayerBuilder::new(2 * k);
        for i in 0..2 * k {
            mid.push_row([(i, 1.0)], 0.0);
        }
        layers.push(mid.finish());
    }
    let mut last = LayerBuilder::new(2 * k);
    for i in 0..k {
        last.push_row([(i, 1.0), (k + i, -1.0)], 0.0);
    }
    layers.push(last.finish());
    Ok(ReluNetwork::from_layers(layers))
}

/// Depth-1 network computing `x -> W x + b` for the given layer.
pub fn affine_net(layer: Layer) -> ReluNetwork {
    ReluNetwork::from_layers(vec![layer])
}

/// Depth-2 network on `R^n x R^n` computing `(x, y) -> alpha x + y` exactly.
pub fn scale_add_net(alpha: f64, n: usize) -> ReluNetwork {
    let mut first = LayerBuilder::new(2 * n);
    for sign in [1.0, -1.0] {
        for i in 0..n {
            first.push_row([(i, sign)], 0.0);
        }
    }
    for sign in [1.0, -1.0] {
        for i in 0..n {
            first.push_row([(n + i, sign)], 0.0);
        }
    }
    let mut second = LayerBuilder::new(4 * n);
    for i in 0..n {
        second.push_row(
            [
                (i, alpha),
                (n + i, -alpha),
                (2 * n + i, 1.0),
                (3 * n + i, -1.0),
            ],
            0.0,
        );
    }
    ReluNetwork::from_layers(vec![first.finish(), second.finish()])
}

/// Affine composition `outer o inner` of two layers.
pub(crate) fn compose_layers(outer: &Layer, inner: &Layer) -> Layer {
    debug_assert_eq!(outer.cols(), inner.rows());
    let mut builder = LayerBuilder::new(inner.cols());
    let mut accum = vec![0.0f64; inner.cols()];
    let mut seen = vec![false; inner.cols()];
    let mut touched: Vec<usize> = Vec::new();
    for i in 0..outer.rows() {
        let (ocols, ovals) = outer.row(i);
        let mut bias = 0.0;
        for (&k, &w) in ocols.iter().zip(ovals) {
            let k = k as usize;
            bias += w * inner.bias()[k];
            let (icols, ivals) = inner.row(k);
            for (&j, &v) in icols.iter().zip(ivals) {
                let j = j as usize;
                if !seen[j] {
                    seen[j] = true;
                    touched.push(j);
                }
                accum[j] += w * v;
            }
        }
        bias += outer.bias()[i];
        builder.push_row(touched.iter().map(|&j| (j, accum[j])), bias);
        for &j in &touched {
            accum[j] = 0.0;
            seen[j] = false;
        }
        touched.clear();
    }
    builder.finish()
}

/// `[W; -W]` with bias `[b; -b]`.
fn stack_negated(layer: &Layer) -> Layer {
    let mut builder = LayerBuilder::new(layer.cols());
    for sign in [1.0, -1.0] {
        for i in 0..layer.rows() {
            let (cols, vals) = layer.row(i);
            builder.push_row(
                cols.iter().zip(vals).map(|(&j, &v)| (j as usize, sign * v)),
                sign * layer.bias()[i],
            );
        }
    }
    builder.finish()
}

/// `[W, -W]` with bias `b`.
fn split_negated(layer: &Layer) -> Layer {
    let c = layer.cols();
    let mut builder = LayerBuilder::new(2 * c);
    for i in 0..layer.rows() {
        let (cols, vals) = layer.row(i);
        let pos = cols.iter().zip(vals).map(|(&j, &v)| (j as usize, v));
        let neg = cols.iter().zip(vals).map(move |(&j, &v)| (c + j as usize, -v));
        builder.push_row(pos.chain(neg), layer.bias()[i]);
    }
    builder.finish()
}

fn check_chain(outer: &ReluNetwork, inner: &ReluNetwork) -> Result<()> {
    if outer.input_dim() != inner.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: outer.input_dim(),
            found: inner.output_dim(),
        });
    }
    Ok(())
}

/// Plain composition `outer . inner`: the last layer of `inner` and the first
/// layer of `outer` are merged into one. Depth is `L_outer + L_inner - 1`.
pub fn concat(outer: ReluNetwork, inner: ReluNetwork) -> Result<ReluNetwork> {
    check_chain(&outer, &inner)?;
    let mut layers = inner.into_layers();
    let inner_last = layers.pop().expect("non-empty network");
    let mut outer_layers = outer.into_layers().into_iter();
    let outer_first = outer_layers.next().expect("non-empty network");
    layers.push(compose_layers(&outer_first, &inner_last));
    layers.extend(outer_layers);
    Ok(ReluNetwork::from_layers(layers))
}

/// Sparse concatenation `outer o inner = outer . id . inner` with a depth-2
/// identity in between. Realizes `x -> outer(inner(x))` with depth
/// `L_outer + L_inner`.
pub fn concat_sparse(outer: ReluNetwork, inner: ReluNetwork) -> Result<ReluNetwork> {
    check_chain(&outer, &inner)?;
    let mut layers = inner.into_layers();
    let inner_last = layers.pop().expect("non-empty network");
    let mut outer_layers = outer.into_layers().into_iter();
    let outer_first = outer_layers.next().expect("non-empty network");
    layers.push(stack_negated(&inner_last));
    layers.push(split_negated(&outer_first));
    layers.extend(outer_layers);
    Ok(ReluNetwork::from_layers(layers))
}

/// Extends `net` to `depth` layers by appending an identity at its output.
pub fn pad_to_depth(net: ReluNetwork, depth: usize) -> Result<ReluNetwork> {
    let current = net.depth();
    if current > depth {
        return Err(invalid("cannot pad a network to a smaller depth"));
    }
    if current == depth {
        return Ok(net);
    }
    let id = identity_net(net.output_dim(), depth - current + 1)?;
    concat(id, net)
}

/// Block-diagonal stacking of several networks; shorter members are padded to
/// the common depth at their output side.
pub fn parallelize(nets: Vec<ReluNetwork>) -> Result<ReluNetwork> {
    if nets.is_empty() {
        return Err(invalid("parallelization of an empty list"));
    }
    let depth = nets.iter().map(ReluNetwork::depth).max().unwrap_or(0);
    let padded = nets
        .into_iter()
        .map(|net| pad_to_depth(net, depth))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let blocks: Vec<&Layer> = padded.iter().map(|net| &net.layers()[l]).collect();
        layers.push(block_diagonal(&blocks));
    }
    Ok(ReluNetwork::from_layers(layers))
}

pub(crate) fn block_diagonal(blocks: &[&Layer]) -> Layer {
    let cols: usize = blocks.iter().map(|b| b.cols()).sum();
    let mut builder = LayerBuilder::new(cols);
    let mut offset = 0;
    for block in blocks {
        for i in 0..block.rows() {
            let (bcols, bvals) = block.row(i);
            builder.push_row(
                bcols.iter().zip(bvals).map(|(&j, &v)| (offset + j as usize, v)),
                block.bias()[i],
            );
        }
        offset += block.cols();
    }
    builder.finish()
}

/// 0/1 layer whose output `i` is input `picks[i]`.
pub(crate) fn selection_layer(cols: usize, picks: &[usize]) -> Layer {
    let mut builder = LayerBuilder::new(cols);
    for &j in picks {
        builder.push_row([(j, 1.0)], 0.0);
    }
    builder.finish()
}
