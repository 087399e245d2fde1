//! Op implementations for the autodiff graph.
//!
//! Shapes are explicit everywhere: elementwise ops require identical shapes
//! (no broadcasting), the one affine exception being [`LayerScale`] which
//! applies per-channel scale and shift along axis 0.

mod attention;
mod conv2d;
mod conv3d;
mod elementwise;
mod gather;
mod linalg;
mod loss;
mod shape;
mod softmax;

pub use attention::{DaaLogits, GroupMix};
pub use conv2d::{Conv2d, Deconv2d};
pub use conv3d::{Conv3d, Deconv3d};
pub use elementwise::{Add, LayerScale, Mul, Relu, Sum};
pub use gather::{TapTable, WeightedGather};
pub use linalg::MatMul;
pub use loss::MaskedCrossEntropy;
pub use shape::{Concat, Crop, Permute, Reshape};
pub use softmax::Softmax;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub(crate) fn expect_arity(op: &'static str, inputs: &[&Tensor], n: usize) -> Result<()> {
    if inputs.len() != n {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("expected {} inputs, got {}", n, inputs.len()),
        });
    }
    Ok(())
}

pub(crate) fn expect_same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
        });
    }
    Ok(())
}
