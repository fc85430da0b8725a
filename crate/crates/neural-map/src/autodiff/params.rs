//! Named trainable parameters, their initialization, and per-pass binding
//! into a graph.
//!
//! Parameter data lives outside any graph so it survives across forward
//! passes; `bind` copies it in as leaves at the start of each pass, and the
//! optimizer reads gradients back out of the graph afterwards.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::error::{AdError, AdResult};
use super::graph::{Graph, Value};
use super::scalar::Real;
use super::shape::Shape;

/// Stable handle into a [`ParamStore`]. Ordering follows registration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Const(f64),
    /// Uniform on `[-b, b]` with `b = sqrt(6 / (fan_in + fan_out))`.
    Glorot,
    /// Random orthonormal square matrix via Gram-Schmidt on a Gaussian draw.
    Orthogonal,
}

#[derive(Debug)]
pub(crate) struct Param<E> {
    pub name: String,
    pub shape: Shape,
    pub data: Vec<E>,
}

/// All trainable parameters of a model, keyed by unique path-style names
/// (for example `map/write/w1`).
#[derive(Debug, Default)]
pub struct ParamStore<E> {
    params: Vec<Param<E>>,
}

impl<E: Real> ParamStore<E> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    /// Registers a tensor under `name`. Fan-in/fan-out for Glorot are taken
    /// from the trailing two extents (or the whole count for vectors);
    /// orthogonal init requires a square matrix.
    pub fn register(
        &mut self,
        name: &str,
        shape: Shape,
        init: Init,
        rng: &mut ChaCha8Rng,
    ) -> AdResult<ParamId> {
        if self.params.iter().any(|p| p.name == name) {
            return Err(AdError::DuplicateParameter(name.to_string()));
        }
        let n = shape.count();
        let data: Vec<E> = match init {
            Init::Zeros => vec![E::zero(); n],
            Init::Const(c) => vec![E::lit(c); n],
            Init::Glorot => {
                let (fan_in, fan_out) = fan_in_out(&shape);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (0..n).map(|_| E::lit(rng.random_range(-bound..bound))).collect()
            }
            Init::Orthogonal => {
                if shape.rank() != 2 || shape.dims()[0] != shape.dims()[1] {
                    return Err(AdError::Argument {
                        op: "register",
                        message: format!("orthogonal init needs a square matrix, got {shape}"),
                    });
                }
                orthogonal(shape.dims()[0], rng).into_iter().map(E::lit).collect()
            }
        };
        self.params.push(Param { name: name.to_string(), shape, data });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn shape(&self, id: ParamId) -> &Shape {
        &self.params[id.0].shape
    }

    pub fn data(&self, id: ParamId) -> &[E] {
        &self.params[id.0].data
    }

    pub fn data_mut(&mut self, id: ParamId) -> &mut [E] {
        &mut self.params[id.0].data
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.params.len()).map(ParamId)
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Total scalar count across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.shape.count()).sum()
    }

    /// Copies every parameter into `graph` as a leaf and returns the handle
    /// table used to look gradients up after `backward`.
    pub fn bind(&self, graph: &mut Graph<E>) -> Binding {
        let values = self
            .params
            .iter()
            .map(|p| graph.leaf(p.data.clone(), p.shape.clone()))
            .collect();
        Binding { values }
    }

    /// Re-materializes this store at a different precision (used to run
    /// 64-bit gradient checks against 32-bit training parameters).
    pub fn cast<T: Real>(&self) -> ParamStore<T> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: p.data.iter().map(|&v| T::lit(v.as_f64())).collect(),
                })
                .collect(),
        }
    }
}

/// Per-pass leaf handles, indexed by [`ParamId`].
#[derive(Debug, Clone)]
pub struct Binding {
    values: Vec<Value>,
}

impl Binding {
    /// Builds a binding from pre-made leaves, one per parameter in
    /// registration order (gradient checks own their leaves).
    pub fn from_values(values: Vec<Value>) -> Binding {
        Binding { values }
    }

    pub fn value(&self, id: ParamId) -> Value {
        self.values[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn fan_in_out(shape: &Shape) -> (usize, usize) {
    let d = shape.dims();
    match d.len() {
        1 => (d[0], d[0]),
        2 => (d[0], d[1]),
        // conv kernels [C_out, C_in, kh, kw]: fans include the receptive field
        _ => {
            let rf: usize = d[2..].iter().product();
            (d[1] * rf, d[0] * rf)
        }
    }
}

/// Gram-Schmidt orthonormalization of a Gaussian matrix, row by row.
/// Degenerate draws (vanishing residual) are retried with a fresh row.
fn orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for prev in &rows {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (vi, pi) in v.iter_mut().zip(prev) {
                *vi -= dot * pi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        rows.push(v);
    }
    rows.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut store: ParamStore<f32> = ParamStore::new();
        let mut r = rng();
        store.register("w", Shape::vector(3), Init::Zeros, &mut r).unwrap();
        assert!(matches!(
            store.register("w", Shape::vector(3), Init::Zeros, &mut r),
            Err(AdError::DuplicateParameter(_))
        ));
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut r = rng();
        let n = 16;
        let m = orthogonal(n, &mut r);
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9, "rows {i},{j}: {dot}");
            }
        }
    }

    #[test]
    fn orthogonal_requires_square() {
        let mut store: ParamStore<f64> = ParamStore::new();
        let mut r = rng();
        assert!(store.register("w", Shape::matrix(3, 4), Init::Orthogonal, &mut r).is_err());
    }

    #[test]
    fn glorot_within_bound() {
        let mut store: ParamStore<f64> = ParamStore::new();
        let mut r = rng();
        let id = store.register("w", Shape::matrix(20, 30), Init::Glorot, &mut r).unwrap();
        let bound = (6.0 / 50.0f64).sqrt();
        assert!(store.data(id).iter().all(|v| v.abs() <= bound));
        // not degenerate
        assert!(store.data(id).iter().any(|v| v.abs() > bound / 10.0));
    }

    #[test]
    fn bind_round_trips_data() {
        let mut store: ParamStore<f64> = ParamStore::new();
        let mut r = rng();
        let id = store.register("w", Shape::vector(4), Init::Const(1.5), &mut r).unwrap();
        let mut g = Graph::new();
        let binding = store.bind(&mut g);
        assert_eq!(g.data(binding.value(id)), &[1.5; 4]);
    }

    #[test]
    fn cast_preserves_values() {
        let mut store: ParamStore<f32> = ParamStore::new();
        let mut r = rng();
        let id = store.register("w", Shape::vector(2), Init::Const(0.25), &mut r).unwrap();
        let wide: ParamStore<f64> = store.cast();
        assert_eq!(wide.data(ParamId(id.0)), &[0.25, 0.25]);
    }
}
