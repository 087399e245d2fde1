use super::expect_arity;
use crate::error::{Error, Result};
use crate::graph::Op;
use crate::tensor::{strides_of, Tensor};

/// Reinterpret the flat buffer under a new shape with the same element count.
pub struct Reshape {
    pub shape: Vec<usize>,
}

impl Op for Reshape {
    fn name(&self) -> &'static str {
        "reshape"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("reshape", inputs, 1)?;
        let n: usize = self.shape.iter().product();
        if n != inputs[0].len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                detail: format!("{:?} -> {:?}", inputs[0].shape(), self.shape),
            });
        }
        Tensor::new(self.shape.clone(), inputs[0].data().to_vec())
    }

    fn backward(
        &self,
        _inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        Ok(vec![needs[0].then(|| grad_out.to_vec())])
    }
}

/// Permute axes: output axis `i` is input axis `perm[i]`.
pub struct Permute {
    pub perm: Vec<usize>,
}

impl Permute {
    fn out_shape(&self, shape: &[usize]) -> Vec<usize> {
        self.perm.iter().map(|&a| shape[a]).collect()
    }

    fn permute_data(&self, data: &[f32], in_shape: &[usize]) -> Vec<f32> {
        let out_shape = self.out_shape(in_shape);
        let in_strides = strides_of(in_shape);
        let out_strides = strides_of(&out_shape);
        let mut out = vec![0.0f32; data.len()];
        let rank = in_shape.len();
        let mut idx = vec![0usize; rank];
        for (flat_out, slot) in out.iter_mut().enumerate() {
            let mut rem = flat_out;
            for d in 0..rank {
                idx[d] = rem / out_strides[d];
                rem %= out_strides[d];
            }
            let mut flat_in = 0;
            for d in 0..rank {
                flat_in += idx[d] * in_strides[self.perm[d]];
            }
            *slot = data[flat_in];
        }
        out
    }
}

impl Op for Permute {
    fn name(&self) -> &'static str {
        "permute"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("permute", inputs, 1)?;
        let rank = inputs[0].rank();
        let mut seen = vec![false; rank];
        if self.perm.len() != rank || self.perm.iter().any(|&a| a >= rank || std::mem::replace(&mut seen[a], true)) {
            return Err(Error::ShapeMismatch {
                op: "permute",
                detail: format!("perm {:?} is not a permutation of rank {}", self.perm, rank),
            });
        }
        let out = self.permute_data(inputs[0].data(), inputs[0].shape());
        Tensor::new(self.out_shape(inputs[0].shape()), out)
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let g = needs[0].then(|| {
            let mut inverse = vec![0usize; self.perm.len()];
            for (i, &a) in self.perm.iter().enumerate() {
                inverse[a] = i;
            }
            Permute { perm: inverse }
                .permute_data(grad_out, &self.out_shape(inputs[0].shape()))
        });
        Ok(vec![g])
    }
}

/// Concatenate along `axis`; all other extents must match.
pub struct Concat {
    pub axis: usize,
}

impl Op for Concat {
    fn name(&self) -> &'static str {
        "concat"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        if inputs.is_empty() {
            return Err(Error::ShapeMismatch { op: "concat", detail: "no inputs".into() });
        }
        let rank = inputs[0].rank();
        if self.axis >= rank {
            return Err(Error::ShapeMismatch {
                op: "concat",
                detail: format!("axis {} out of range for rank {}", self.axis, rank),
            });
        }
        let mut out_shape = inputs[0].shape().to_vec();
        for t in &inputs[1..] {
            if t.rank() != rank
                || (0..rank).any(|d| d != self.axis && t.shape()[d] != out_shape[d])
            {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    detail: format!("{:?} vs {:?}", out_shape, t.shape()),
                });
            }
            out_shape[self.axis] += t.shape()[self.axis];
        }
        let outer: usize = out_shape[..self.axis].iter().product();
        let inner: usize = out_shape[self.axis + 1..].iter().product();
        let mut data = vec![0.0f32; out_shape.iter().product()];
        let row = out_shape[self.axis] * inner;
        let mut offset = 0;
        for t in inputs {
            let t_axis = t.shape()[self.axis];
            for o in 0..outer {
                let src = &t.data()[o * t_axis * inner..(o + 1) * t_axis * inner];
                let dst_start = o * row + offset * inner;
                data[dst_start..dst_start + t_axis * inner].copy_from_slice(src);
            }
            offset += t_axis;
        }
        Tensor::new(out_shape, data)
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let out_shape = output.shape();
        let outer: usize = out_shape[..self.axis].iter().product();
        let inner: usize = out_shape[self.axis + 1..].iter().product();
        let row = out_shape[self.axis] * inner;
        let mut grads = Vec::with_capacity(inputs.len());
        let mut offset = 0;
        for (t, need) in inputs.iter().zip(needs) {
            let t_axis = t.shape()[self.axis];
            if *need {
                let mut g = vec![0.0f32; t.len()];
                for o in 0..outer {
                    let src_start = o * row + offset * inner;
                    g[o * t_axis * inner..(o + 1) * t_axis * inner]
                        .copy_from_slice(&grad_out[src_start..src_start + t_axis * inner]);
                }
                grads.push(Some(g));
            } else {
                grads.push(None);
            }
            offset += t_axis;
        }
        Ok(grads)
    }
}

/// Slice a box out of the input: `out[i] = in[start + i]` per axis.
pub struct Crop {
    pub start: Vec<usize>,
    pub size: Vec<usize>,
}

impl Op for Crop {
    fn name(&self) -> &'static str {
        "crop"
    }

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor> {
        expect_arity("crop", inputs, 1)?;
        let shape = inputs[0].shape();
        let rank = shape.len();
        if self.start.len() != rank
            || self.size.len() != rank
            || (0..rank).any(|d| self.size[d] == 0 || self.start[d] + self.size[d] > shape[d])
        {
            return Err(Error::ShapeMismatch {
                op: "crop",
                detail: format!(
                    "start {:?} size {:?} out of bounds for {:?}",
                    self.start, self.size, shape
                ),
            });
        }
        let in_strides = strides_of(shape);
        let out_strides = strides_of(&self.size);
        let n: usize = self.size.iter().product();
        let mut data = vec![0.0f32; n];
        for (flat_out, slot) in data.iter_mut().enumerate() {
            let mut rem = flat_out;
            let mut flat_in = 0;
            for d in 0..rank {
                let i = rem / out_strides[d];
                rem %= out_strides[d];
                flat_in += (self.start[d] + i) * in_strides[d];
            }
            *slot = inputs[0].data()[flat_in];
        }
        Tensor::new(self.size.clone(), data)
    }

    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>> {
        let g = needs[0].then(|| {
            let shape = inputs[0].shape();
            let rank = shape.len();
            let in_strides = strides_of(shape);
            let out_strides = strides_of(&self.size);
            let mut g = vec![0.0f32; inputs[0].len()];
            for (flat_out, &go) in grad_out.iter().enumerate() {
                let mut rem = flat_out;
                let mut flat_in = 0;
                for d in 0..rank {
                    let i = rem / out_strides[d];
                    rem %= out_strides[d];
                    flat_in += (self.start[d] + i) * in_strides[d];
                }
                g[flat_in] = go;
            }
            g
        });
        Ok(vec![g])
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::Graph;
    use crate::tensor::Tensor;

    #[test]
    fn reshape_preserves_flat_order() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[2, 6], |i| i as f32));
        let y = g.apply(super::Reshape { shape: vec![3, 4] }, &[x]).unwrap();
        assert_eq!(g.value(y).shape(), &[3, 4]);
        assert_eq!(g.value(y).data(), g.value(x).data());
    }

    #[test]
    fn permute_transposes() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![2, 3], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap());
        let y = g.apply(super::Permute { perm: vec![1, 0] }, &[x]).unwrap();
        assert_eq!(g.value(y).shape(), &[3, 2]);
        assert_eq!(g.value(y).data(), &[0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
    }

    #[test]
    fn concat_axis0_stacks() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap());
        let b = g.leaf(Tensor::new(vec![2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap());
        let y = g.apply(super::Concat { axis: 0 }, &[a, b]).unwrap();
        assert_eq!(g.value(y).shape(), &[3, 2]);
        assert_eq!(g.value(y).data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn crop_slices_box() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[3, 3], |i| i as f32));
        let y = g
            .apply(super::Crop { start: vec![1, 0], size: vec![2, 2] }, &[x])
            .unwrap();
        assert_eq!(g.value(y).data(), &[3.0, 4.0, 6.0, 7.0]);
    }
}
