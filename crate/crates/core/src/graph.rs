//! Reverse-mode autodiff tape.
//!
//! A [`Graph`] records one forward pass as an ordered list of op nodes; node
//! indices are topological by construction. [`Graph::backward`] walks the
//! list once in reverse and accumulates gradients into every node that
//! requires them. Graphs are cheap and short-lived: training builds a fresh
//! one per step.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to a node (and its output tensor) in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// A differentiable operation.
///
/// `forward` consumes input tensors and produces the output; `backward`
/// receives the upstream gradient and returns one gradient buffer per input
/// (`None` where `needs[i]` is false). Saved state beyond inputs/output
/// (stride, tap tables, labels) lives in the op struct itself.
pub trait Op: Send + Sync {
    fn name(&self) -> &'static str;

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor>;

    fn backward(
        &self,
        inputs: &[&Tensor],
        output: &Tensor,
        grad_out: &[f32],
        needs: &[bool],
    ) -> Result<Vec<Option<Vec<f32>>>>;
}

struct Node {
    value: Tensor,
    grad: Option<Vec<f32>>,
    requires_grad: bool,
    recorded: Option<(Box<dyn Op>, Vec<Var>)>,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a constant input (no gradient tracked).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, false, None)
    }

    /// Insert a trainable input; `backward` will populate its gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, true, None)
    }

    fn push(
        &mut self,
        value: Tensor,
        requires_grad: bool,
        recorded: Option<(Box<dyn Op>, Vec<Var>)>,
    ) -> Var {
        self.nodes.push(Node { value, grad: None, requires_grad, recorded });
        Var(self.nodes.len() - 1)
    }

    /// Record `op` applied to `inputs` and return the output var.
    pub fn apply(&mut self, op: impl Op + 'static, inputs: &[Var]) -> Result<Var> {
        let tensors: Vec<&Tensor> = inputs.iter().map(|v| &self.nodes[v.0].value).collect();
        let out = op.forward(&tensors)?;
        if cfg!(debug_assertions) {
            out.check_finite(op.name())?;
        }
        let requires = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(out, requires, Some((Box::new(op), inputs.to_vec()))))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of `v`, if `backward` has populated one.
    pub fn grad(&self, v: Var) -> Option<&[f32]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reverse sweep from `loss`, which must be scalar. Each node is visited
    /// exactly once, in reverse topological order.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::NonScalarLoss(self.nodes[loss.0].value.shape().to_vec()));
        }
        self.backward_done = true;
        self.nodes[loss.0].grad = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || self.nodes[i].grad.is_none() {
                continue;
            }
            let Some((op, inputs)) = self.nodes[i].recorded.take() else {
                continue;
            };
            let needs: Vec<bool> =
                inputs.iter().map(|v| self.nodes[v.0].requires_grad).collect();
            let grads = {
                let tensors: Vec<&Tensor> =
                    inputs.iter().map(|v| &self.nodes[v.0].value).collect();
                let grad_out = self.nodes[i].grad.as_deref().unwrap();
                op.backward(&tensors, &self.nodes[i].value, grad_out, &needs)?
            };
            if grads.len() != inputs.len() {
                return Err(Error::ShapeMismatch {
                    op: op.name(),
                    detail: "backward returned wrong arity".into(),
                });
            }
            for (v, g) in inputs.iter().zip(grads) {
                let Some(g) = g else { continue };
                let node = &mut self.nodes[v.0];
                if g.len() != node.value.len() {
                    return Err(Error::ShapeMismatch {
                        op: op.name(),
                        detail: format!(
                            "input gradient has {} elements, tensor has {}",
                            g.len(),
                            node.value.len()
                        ),
                    });
                }
                match &mut node.grad {
                    Some(acc) => {
                        for (a, b) in acc.iter_mut().zip(&g) {
                            *a += b;
                        }
                    }
                    None => node.grad = Some(g),
                }
            }
            self.nodes[i].recorded = Some((op, inputs));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{Add, Mul, Sum};

    #[test]
    fn sum_grad_is_ones() {
        let mut g = Graph::new();
        let x = g.param(Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap());
        let s = g.apply(Sum, &[x]).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_grad_is_two_x() {
        let mut g = Graph::new();
        let x = g.param(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let sq = g.apply(Mul, &[x, x]).unwrap();
        let s = g.apply(Sum, &[sq]).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn backward_twice_errors() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(2.0));
        let y = g.apply(Add, &[x, x]).unwrap();
        g.backward(y).unwrap();
        assert!(matches!(g.backward(y), Err(Error::BackwardTwice)));
    }

    #[test]
    fn backward_on_non_scalar_errors() {
        let mut g = Graph::new();
        let x = g.param(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let y = g.apply(Add, &[x, x]).unwrap();
        assert!(matches!(g.backward(y), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn leaves_get_no_grad() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(2.0));
        let p = g.param(Tensor::scalar(3.0));
        let y = g.apply(Mul, &[x, p]).unwrap();
        g.backward(y).unwrap();
        assert!(g.grad(x).is_none());
        assert_eq!(g.grad(p).unwrap(), &[2.0]);
    }
}
