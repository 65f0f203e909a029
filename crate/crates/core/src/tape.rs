//! Tape-based reverse-mode automatic differentiation.
//!
//! The tape records a small set of tensor primitives — enough to express an
//! MLP forward pass and its loss — and replays them in reverse to accumulate
//! adjoints with respect to any leaf. Leaves are marked as weight-leaves or
//! input-leaves so callers can pull gradients for training (w.r.t. weights)
//! or attribution (w.r.t. inputs) from the same backward pass.
//!
//! Node ids are append-ordered, so inputs always precede consumers and a
//! single reverse sweep visits every node exactly once. Local partials are
//! captured at record time; the backward pass never re-executes forward
//! computation.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Distinguishes trainable-parameter leaves from data-input leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Weight,
    Input,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf(LeafKind),
    /// W[m x n] · x[n] -> [m]
    MatVec { w: NodeId, x: NodeId },
    Add { a: NodeId, b: NodeId },
    Relu { a: NodeId },
    Sigmoid { a: NodeId },
    /// -[y ln p + (1-y) ln(1-p)] on a probability node; `dp` is the local
    /// partial d(loss)/dp captured at record time.
    BceLoss { p: NodeId, dp: f64 },
    /// Fused sigmoid + BCE in logit space: softplus(z) - y z; `dz` is the
    /// local partial sigma(z) - y captured at record time.
    SigmoidBceLoss { z: NodeId, dz: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Numerically stable logistic function.
///
/// Branches on the sign of `z` so neither exponential can overflow; extreme
/// negative inputs underflow gracefully to 0.
pub fn stable_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable ln(1 + e^z).
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Gradients produced by [`Tape::backward`]: one adjoint tensor per leaf.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<Option<Tensor>>,
}

impl Gradients {
    /// The adjoint of a leaf node, `None` for non-leaf ids.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.adjoints.get(id.0).and_then(|a| a.as_ref())
    }
}

/// A recorded computation. Single-owner while recording; the produced
/// [`Gradients`] and [`Tensor`]s are immutable values.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value computed at `id` during the forward pass.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// The leaf marker of a node, `None` for interior nodes.
    pub fn leaf_kind(&self, id: NodeId) -> Option<LeafKind> {
        match self.nodes[id.0].op {
            Op::Leaf(kind) => Some(kind),
            _ => None,
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    pub fn leaf(&mut self, value: Tensor, kind: LeafKind) -> NodeId {
        self.push(Op::Leaf(kind), value)
    }

    pub fn weight_leaf(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, LeafKind::Weight)
    }

    pub fn input_leaf(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, LeafKind::Input)
    }

    /// Record `W · x` for a matrix leaf/node `w` and vector node `x`.
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId> {
        let (wt, xt) = (self.value(w), self.value(x));
        let ok = wt.shape().len() == 2 && xt.shape().len() == 1 && wt.shape()[1] == xt.shape()[0];
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "matvec",
                left: wt.shape().to_vec(),
                right: xt.shape().to_vec(),
            });
        }
        let (m, n) = (wt.shape()[0], wt.shape()[1]);
        let mut out = vec![0.0; m];
        let wd = wt.data();
        let xd = xt.data();
        for i in 0..m {
            let row = &wd[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * xd[j];
            }
            out[i] = acc;
        }
        Ok(self.push(Op::MatVec { w, x }, Tensor::vector(out)))
    }

    /// Elementwise sum of two equally shaped nodes.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::ShapeMismatch {
                op: "add",
                left: self.value(a).shape().to_vec(),
                right: self.value(b).shape().to_vec(),
            });
        }
        let data = self
            .value(a)
            .iter()
            .zip(self.value(b).iter())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        let value = Tensor::new(shape, data).expect("shapes already checked");
        Ok(self.push(Op::Add { a, b }, value))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = Tensor::new(
            self.value(a).shape().to_vec(),
            self.value(a).iter().map(|&v| v.max(0.0)).collect(),
        )
        .expect("same shape");
        self.push(Op::Relu { a }, value)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value = Tensor::new(
            self.value(a).shape().to_vec(),
            self.value(a).iter().map(|&v| stable_sigmoid(v)).collect(),
        )
        .expect("same shape");
        self.push(Op::Sigmoid { a }, value)
    }

    fn check_label(y: u8) -> Result<f64> {
        if y > 1 {
            return Err(Error::Contract(format!("label must be 0 or 1, got {y}")));
        }
        Ok(f64::from(y))
    }

    /// Binary cross-entropy on a probability node strictly inside (0, 1).
    ///
    /// Training should prefer [`Tape::sigmoid_bce_loss`], which fuses the
    /// sigmoid and works in logit space so log(0) cannot occur.
    pub fn bce_loss(&mut self, p: NodeId, y: u8) -> Result<NodeId> {
        let yf = Self::check_label(y)?;
        let pt = self.value(p);
        if !pt.is_scalar() {
            return Err(Error::NonScalarOutput {
                shape: pt.shape().to_vec(),
            });
        }
        let pv = pt.item();
        if !(pv > 0.0 && pv < 1.0) {
            return Err(Error::Domain(format!(
                "bce_loss requires p strictly in (0,1), got {pv}"
            )));
        }
        let loss = -(yf * pv.ln() + (1.0 - yf) * (1.0 - pv).ln());
        let dp = (pv - yf) / (pv * (1.0 - pv));
        Ok(self.push(Op::BceLoss { p, dp }, Tensor::scalar(loss)))
    }

    /// Fused sigmoid + BCE from a logit node: softplus(z) - y z.
    pub fn sigmoid_bce_loss(&mut self, z: NodeId, y: u8) -> Result<NodeId> {
        let yf = Self::check_label(y)?;
        let zt = self.value(z);
        if !zt.is_scalar() {
            return Err(Error::NonScalarOutput {
                shape: zt.shape().to_vec(),
            });
        }
        let zv = zt.item();
        let loss = softplus(zv) - yf * zv;
        let dz = stable_sigmoid(zv) - yf;
        Ok(self.push(Op::SigmoidBceLoss { z, dz }, Tensor::scalar(loss)))
    }

    /// Reverse sweep from a scalar output; returns the adjoint of every leaf.
    pub fn backward(&self, output: NodeId) -> Result<Gradients> {
        let out_value = self.value(output);
        if !out_value.is_scalar() {
            return Err(Error::NonScalarOutput {
                shape: out_value.shape().to_vec(),
            });
        }

        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        adj[output.0][0] = 1.0;

        for id in (0..=output.0).rev() {
            let out_adj = std::mem::take(&mut adj[id]);
            match &self.nodes[id].op {
                Op::Leaf(_) => {}
                Op::MatVec { w, x } => {
                    let wt = self.value(*w);
                    let (m, n) = (wt.shape()[0], wt.shape()[1]);
                    let wd = wt.data();
                    let xd = self.value(*x).data().to_vec();
                    {
                        let wa = &mut adj[w.0];
                        for i in 0..m {
                            let g = out_adj[i];
                            if g != 0.0 {
                                for j in 0..n {
                                    wa[i * n + j] += g * xd[j];
                                }
                            }
                        }
                    }
                    {
                        let xa = &mut adj[x.0];
                        for i in 0..m {
                            let g = out_adj[i];
                            if g != 0.0 {
                                let row = &wd[i * n..(i + 1) * n];
                                for j in 0..n {
                                    xa[j] += g * row[j];
                                }
                            }
                        }
                    }
                }
                Op::Add { a, b } => {
                    for (dst, g) in adj[a.0].iter_mut().zip(&out_adj) {
                        *dst += g;
                    }
                    for (dst, g) in adj[b.0].iter_mut().zip(&out_adj) {
                        *dst += g;
                    }
                }
                Op::Relu { a } => {
                    let inputs = self.value(*a).data().to_vec();
                    for ((dst, g), v) in adj[a.0].iter_mut().zip(&out_adj).zip(inputs) {
                        if v > 0.0 {
                            *dst += g;
                        }
                    }
                }
                Op::Sigmoid { a } => {
                    let outputs = self.nodes[id].value.data().to_vec();
                    for ((dst, g), s) in adj[a.0].iter_mut().zip(&out_adj).zip(outputs) {
                        *dst += g * s * (1.0 - s);
                    }
                }
                Op::BceLoss { p, dp } => {
                    adj[p.0][0] += out_adj[0] * dp;
                }
                Op::SigmoidBceLoss { z, dz } => {
                    adj[z.0][0] += out_adj[0] * dz;
                }
            }
            adj[id] = out_adj;
        }

        let adjoints = self
            .nodes
            .iter()
            .zip(adj)
            .map(|(node, a)| match node.op {
                Op::Leaf(_) => Some(
                    Tensor::new(node.value.shape().to_vec(), a).expect("adjoint matches shape"),
                ),
                _ => None,
            })
            .collect();
        Ok(Gradients { adjoints })
    }
}
