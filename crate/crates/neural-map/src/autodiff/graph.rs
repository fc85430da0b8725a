//! Define-by-run tape. A `Graph` records one forward pass; `backward` replays
//! it in reverse creation order, which is always a valid reverse topological
//! order, and accumulates chain-rule contributions into each node's gradient.
//!
//! Graphs are rebuilt every forward pass and confined to one thread. Anything
//! that must outlive a graph (parameters, recurrent carries) is snapshotted to
//! plain arrays and re-imported as leaves of the next graph.

use super::error::{AdError, AdResult};
use super::scalar::Real;
use super::shape::Shape;

/// Handle to a node in a [`Graph`]. Only meaningful for the graph that
/// created it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Value(u32);

impl Value {
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

/// Backward rule of one node: given the node's output gradient (and read-only
/// access to the data of the node and its parents), produce one gradient
/// contribution per parent, each shaped like that parent.
pub type BackwardFn<E> = Box<dyn FnOnce(&BackCtx<'_, E>) -> Vec<Vec<E>>>;

pub(crate) struct Node<E: Real> {
    shape: Shape,
    data: Vec<E>,
    grad: Vec<E>,
    parents: Vec<Value>,
    backward: Option<BackwardFn<E>>,
    /// True once any gradient has been accumulated here. Nodes never seeded
    /// cannot contribute and their backward rule is skipped.
    seeded: bool,
}

/// Read-only view handed to backward rules.
pub struct BackCtx<'a, E: Real> {
    nodes: &'a [Node<E>],
    idx: usize,
}

impl<'a, E: Real> BackCtx<'a, E> {
    pub fn out_data(&self) -> &[E] {
        &self.nodes[self.idx].data
    }

    pub fn out_grad(&self) -> &[E] {
        &self.nodes[self.idx].grad
    }

    pub fn out_shape(&self) -> &Shape {
        &self.nodes[self.idx].shape
    }

    pub fn parent_data(&self, i: usize) -> &[E] {
        let p = self.nodes[self.idx].parents[i];
        &self.nodes[p.index()].data
    }

    pub fn parent_shape(&self, i: usize) -> &Shape {
        let p = self.nodes[self.idx].parents[i];
        &self.nodes[p.index()].shape
    }

    pub fn parent_count(&self) -> usize {
        self.nodes[self.idx].parents.len()
    }
}

pub struct Graph<E: Real> {
    nodes: Vec<Node<E>>,
    recording: bool,
}

impl<E: Real> Graph<E> {
    /// A recording graph: nodes carry gradients and backward rules.
    pub fn new() -> Self {
        Graph { nodes: Vec::new(), recording: true }
    }

    /// An inference graph: forward values only. Backward rules and gradient
    /// buffers are dropped at creation, roughly halving memory per node.
    pub fn inference() -> Self {
        Graph { nodes: Vec::new(), recording: false }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf node with no parents. Gradients accumulate here but backward
    /// recurses no further.
    pub fn leaf(&mut self, data: Vec<E>, shape: Shape) -> Value {
        assert_eq!(data.len(), shape.count(), "leaf data/shape length mismatch");
        self.push(shape, data, Vec::new(), None)
    }

    pub fn scalar(&mut self, x: E) -> Value {
        self.leaf(vec![x], Shape::scalar())
    }

    pub fn constant_vec(&mut self, data: Vec<E>) -> Value {
        let shape = Shape::vector(data.len());
        self.leaf(data, shape)
    }

    /// Node with caller-supplied data, parents and backward rule. This is the
    /// escape hatch all built-in operations go through; it is public so tests
    /// can register deliberately wrong rules to prove the checker catches them.
    pub fn custom(
        &mut self,
        shape: Shape,
        data: Vec<E>,
        parents: Vec<Value>,
        backward: BackwardFn<E>,
    ) -> Value {
        assert_eq!(data.len(), shape.count(), "custom data/shape length mismatch");
        self.push(shape, data, parents, Some(backward))
    }

    pub(crate) fn push(
        &mut self,
        shape: Shape,
        data: Vec<E>,
        parents: Vec<Value>,
        backward: Option<BackwardFn<E>>,
    ) -> Value {
        debug_assert_eq!(data.len(), shape.count());
        let idx = self.nodes.len();
        assert!(idx < u32::MAX as usize, "graph node limit exceeded");
        let grad = if self.recording { vec![E::zero(); data.len()] } else { Vec::new() };
        let backward = if self.recording { backward } else { None };
        self.nodes.push(Node { shape, data, grad, parents, backward, seeded: false });
        Value(idx as u32)
    }

    pub fn data(&self, v: Value) -> &[E] {
        &self.nodes[v.index()].data
    }

    pub fn shape(&self, v: Value) -> &Shape {
        &self.nodes[v.index()].shape
    }

    /// Gradient buffer of a node. All zeros until `backward` has run.
    pub fn grad(&self, v: Value) -> &[E] {
        &self.nodes[v.index()].grad
    }

    /// Detached copy of a node's data, e.g. for inspection exports.
    pub fn detach(&self, v: Value) -> Vec<E> {
        self.nodes[v.index()].data.clone()
    }

    pub fn zero_grads(&mut self) {
        for node in &mut self.nodes {
            node.grad.iter_mut().for_each(|g| *g = E::zero());
            node.seeded = false;
        }
    }

    /// Reverse pass from a scalar root. Every node is visited at most once, in
    /// reverse creation order; a node that feeds several consumers receives the
    /// sum of their contributions before its own rule fires.
    pub fn backward(&mut self, root: Value) -> AdResult<()> {
        if !self.recording {
            return Err(AdError::NotRecording);
        }
        let root_idx = root.index();
        if !self.nodes[root_idx].shape.is_scalar() {
            return Err(AdError::NonScalarRoot(self.nodes[root_idx].shape.clone()));
        }
        self.nodes[root_idx].grad[0] = E::one();
        self.nodes[root_idx].seeded = true;

        for idx in (0..=root_idx).rev() {
            if !self.nodes[idx].seeded {
                continue;
            }
            let Some(rule) = self.nodes[idx].backward.take() else { continue };
            let parents = self.nodes[idx].parents.clone();
            let contributions = {
                let ctx = BackCtx { nodes: &self.nodes, idx };
                rule(&ctx)
            };
            debug_assert_eq!(contributions.len(), parents.len(), "backward rule arity");
            for (parent, contribution) in parents.into_iter().zip(contributions) {
                let node = &mut self.nodes[parent.index()];
                debug_assert_eq!(contribution.len(), node.grad.len(), "backward rule shape");
                for (g, c) in node.grad.iter_mut().zip(contribution) {
                    *g += c;
                }
                node.seeded = true;
            }
        }
        Ok(())
    }
}

impl<E: Real> Default for Graph<E> {
    fn default() -> Self {
        Graph::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_scalar_root_rejected() {
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![1.0, 2.0], Shape::vector(2));
        assert!(matches!(g.backward(x), Err(AdError::NonScalarRoot(_))));
    }

    #[test]
    fn inference_graph_refuses_backward() {
        let mut g: Graph<f64> = Graph::inference();
        let x = g.scalar(1.0);
        assert!(matches!(g.backward(x), Err(AdError::NotRecording)));
    }

    #[test]
    fn fan_out_accumulates_both_contributions() {
        // root = sum(x) + sum(2x)  =>  dx = 3 everywhere
        let mut g: Graph<f64> = Graph::new();
        let x = g.leaf(vec![1.0, -2.0, 0.5], Shape::vector(3));
        let a = g.sum(x).unwrap();
        let x2 = g.scale(x, 2.0).unwrap();
        let b = g.sum(x2).unwrap();
        let root = g.add(a, b).unwrap();
        g.backward(root).unwrap();
        assert_eq!(g.grad(x), &[3.0, 3.0, 3.0]);
    }
}
