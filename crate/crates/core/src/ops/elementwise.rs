use super::{expect_arity, expect_same_shape};
use crate::error::{Error, Result};
use crate::graph::Op;
use crate::tensor::Tensor;

/// Elementwise sum of two same-shape tensors.
pub struct Add;

impl Op for Add {
    fn name(&self) -> &'static str {
        "add"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("add", inputs, 2)?;
        expect_same_shape("add", inputs[0], inputs[1])?;
        let data = inputs[0]
            .data()
            .iter()
            .zip(inputs[1].data())
            .map(|(a, b)| a + b)
            .collect();
        Tensor::new(inputs[0].shape().to_vec(), data)
    }

    fn backward(
        &self,
        _inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let g = |need: bool| need.then(|| grad_out.to_vec());
        Ok(vec![g(needs[0]), g(needs[1])])
    }
}

/// Elementwise product of two same-shape tensors.
pub struct Mul;

impl Op for Mul {
    fn name(&self) -> &'static str {
        "mul"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("mul", inputs, 2)?;
        expect_same_shape("mul", inputs[0], inputs[1])?;
        let data = inputs[0]
            .data()
            .iter()
            .zip(inputs[1].data())
            .map(|(a, b)| a * b)
            .collect();
        Tensor::new(inputs[0].shape().to_vec(), data)
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let da = needs[0].then(|| {
            grad_out.iter().zip(inputs[1].data()).map(|(g, b)| g * b).collect()
        });
        let db = needs[1].then(|| {
            grad_out.iter().zip(inputs[0].data()).map(|(g, a)| g * a).collect()
        });
        Ok(vec![da, db])
    }
}

pub struct Relu;

impl Op for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("relu", inputs, 1)?;
        let data = inputs[0].data().iter().map(|&x| x.max(0.0)).collect();
        Tensor::new(inputs[0].shape().to_vec(), data)
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let g = needs[0].then(|| {
            grad_out
                .iter()
                .zip(inputs[0].data())
                .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                .collect()
        });
        Ok(vec![g])
    }
}

/// Per-channel affine along axis 0: `out[c, ..] = x[c, ..] * gamma[c] + beta[c]`.
///
/// Stands in for batch statistics, which degenerate at batch size 1.
pub struct LayerScale;

impl Op for LayerScale {
    fn name(&self) -> &'static str {
        "layer_scale"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("layer_scale", inputs, 3)?;
        let (x, gamma, beta) = (inputs[0], inputs[1], inputs[2]);
        let channels = x.shape()[0];
        if gamma.shape() != [channels] || beta.shape() != [channels] {
            return Err(Error::ShapeMismatch {
                op: "layer_scale",
                detail: format!(
                    "x has {} channels, gamma {:?}, beta {:?}",
                    channels,
                    gamma.shape(),
                    beta.shape()
                ),
            });
        }
        let inner = x.len() / channels;
        let mut data = vec![0.0f32; x.len()];
        for c in 0..channels {
            let (g, b) = (gamma.data()[c], beta.data()[c]);
            let src = &x.data()[c * inner..(c + 1) * inner];
            let dst = &mut data[c * inner..(c + 1) * inner];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s * g + b;
            }
        }
        Tensor::new(x.shape().to_vec(), data)
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let (x, gamma) = (inputs[0], inputs[1]);
        let channels = x.shape()[0];
        let inner = x.len() / channels;
        let dx = needs[0].then(|| {
            let mut dx = vec![0.0f32; x.len()];
            for c in 0..channels {
                let g = gamma.data()[c];
                for i in 0..inner {
                    dx[c * inner + i] = grad_out[c * inner + i] * g;
                }
            }
            dx
        });
        let dgamma = needs[1].then(|| {
            (0..channels)
                .map(|c| {
                    let mut acc = 0.0f64;
                    for i in 0..inner {
                        acc += f64::from(grad_out[c * inner + i])
                            * f64::from(x.data()[c * inner + i]);
                    }
                    acc as f32
                })
                .collect()
        });
        let dbeta = needs[2].then(|| {
            (0..channels)
                .map(|c| {
                    let mut acc = 0.0f64;
                    for i in 0..inner {
                        acc += f64::from(grad_out[c * inner + i]);
                    }
                    acc as f32
                })
                .collect()
        });
        Ok(vec![dx, dgamma, dbeta])
    }
}

/// Sum of all elements, producing a scalar. Accumulates in f64.
pub struct Sum;

impl Op for Sum {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("sum", inputs, 1)?;
        let total: f64 = inputs[0].data().iter().map(|&x| f64::from(x)).sum();
        Ok(Tensor::scalar(total as f32))
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let g = needs[0].then(|| vec![grad_out[0]; inputs[0].len()]);
        Ok(vec![g])
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::Graph;
    use crate::tensor::Tensor;

    #[test]
    fn relu_clamps_negatives() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap());
        let y = g.apply(super::Relu, &[x]).unwrap();
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn add_rejects_shape_mismatch() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::zeros(&[2, 3]));
        let b = g.leaf(Tensor::zeros(&[3, 2]));
        assert!(g.apply(super::Add, &[a, b]).is_err());
    }

    #[test]
    fn layer_scale_applies_per_channel() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let gamma = g.leaf(Tensor::new(vec![2], vec![2.0, 10.0]).unwrap());
        let beta = g.leaf(Tensor::new(vec![2], vec![0.5, 0.0]).unwrap());
        let y = g.apply(super::LayerScale, &[x, gamma, beta]).unwrap();
        assert_eq!(g.value(y).data(), &[2.5, 4.5, 30.0, 40.0]);
    }
}
