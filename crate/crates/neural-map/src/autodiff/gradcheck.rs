//! Finite-difference verification of backward rules.
//!
//! Every check builds a scalar-valued function of one or more leaf tensors,
//! runs reverse mode once, then compares each analytic partial against a
//! central difference `(f(x+h) - f(x-h)) / 2h` computed from two fresh
//! forward passes. All checks run in 64-bit precision with `h = 1e-5`;
//! error is relative, `|ad - fd| / max(1, |ad|, |fd|)`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::error::AdResult;
use super::graph::{Graph, Value};
use super::shape::Shape;

pub const STEP: f64 = 1e-5;
/// Tolerance for individually smooth operations.
pub const TOL_SMOOTH: f64 = 1e-6;
/// Tolerance for composed multi-op functions.
pub const TOL_COMPOSED: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub max_rel_err: f64,
    /// `(input ordinal, flat element)` of the worst disagreement.
    pub worst_index: (usize, usize),
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<40} max_rel_err {:.3e} (input {} elem {}) tol {:.0e} {}",
            self.name,
            self.max_rel_err,
            self.worst_index.0,
            self.worst_index.1,
            self.tolerance,
            if self.passed { "ok" } else { "FAIL" }
        )
    }
}

/// A scalar-valued differentiable function under test.
pub type BuildFn<'a> = dyn FnMut(&mut Graph<f64>, &[Value]) -> AdResult<Value> + 'a;

/// Checks `build` over the given leaf tensors. Panics on builder errors:
/// checks are fixtures, so a failure to construct is a bug in the check
/// itself, not a gradient mismatch.
pub fn check(
    name: &str,
    tolerance: f64,
    inputs: &[(Vec<f64>, Shape)],
    build: &mut BuildFn<'_>,
) -> CheckResult {
    let eval = |datasets: &[Vec<f64>], build: &mut BuildFn<'_>| -> f64 {
        let mut g = Graph::new();
        let leaves: Vec<Value> = datasets
            .iter()
            .zip(inputs)
            .map(|(d, (_, s))| g.leaf(d.clone(), s.clone()))
            .collect();
        let root = build(&mut g, &leaves).unwrap_or_else(|e| panic!("{name}: build failed: {e}"));
        assert!(g.shape(root).is_scalar(), "{name}: check output must be scalar");
        g.data(root)[0]
    };

    // analytic pass
    let base: Vec<Vec<f64>> = inputs.iter().map(|(d, _)| d.clone()).collect();
    let analytic: Vec<Vec<f64>> = {
        let mut g = Graph::new();
        let leaves: Vec<Value> = base
            .iter()
            .zip(inputs)
            .map(|(d, (_, s))| g.leaf(d.clone(), s.clone()))
            .collect();
        let root = build(&mut g, &leaves).unwrap_or_else(|e| panic!("{name}: build failed: {e}"));
        g.backward(root).unwrap_or_else(|e| panic!("{name}: backward failed: {e}"));
        leaves.iter().map(|&v| g.grad(v).to_vec()).collect()
    };

    let mut max_rel_err = 0.0f64;
    let mut worst_index = (0usize, 0usize);
    for (k, data) in base.iter().enumerate() {
        for i in 0..data.len() {
            let mut plus = base.clone();
            plus[k][i] += STEP;
            let mut minus = base.clone();
            minus[k][i] -= STEP;
            let fd = (eval(&plus, build) - eval(&minus, build)) / (2.0 * STEP);
            let ad = analytic[k][i];
            let rel = (ad - fd).abs() / 1.0f64.max(ad.abs()).max(fd.abs());
            if rel > max_rel_err {
                max_rel_err = rel;
                worst_index = (k, i);
            }
        }
    }
    CheckResult {
        name: name.to_string(),
        max_rel_err,
        worst_index,
        tolerance,
        passed: max_rel_err <= tolerance,
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Uniform draw excluding a band around zero (keeps piecewise-linear ops
/// away from their kink, where finite differences are meaningless).
fn uniform_off_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = rng.random_range(0.2..1.5);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Probes an arbitrary-shaped output down to a scalar with fixed random
/// weights, so every output element influences the check independently.
fn probe(g: &mut Graph<f64>, out: Value, rng: &mut ChaCha8Rng) -> AdResult<Value> {
    let shape = g.shape(out).clone();
    let weights = g.leaf(uniform(rng, shape.count(), -1.0, 1.0), shape);
    let prod = g.mul(out, weights)?;
    g.sum(prod)
}

/// Finite-difference checks for every differentiable operation, at small
/// fixed sizes. Deterministic for a given seed.
pub fn op_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    let run = |name: &str,
                   tol: f64,
                   inputs: Vec<(Vec<f64>, Shape)>,
                   rng: ChaCha8Rng,
                   f: &mut dyn FnMut(&mut Graph<f64>, &[Value], &mut ChaCha8Rng) -> AdResult<Value>,
                   out: &mut Vec<CheckResult>| {
        let mut build = |g: &mut Graph<f64>, leaves: &[Value]| {
            // fresh probe stream per evaluation so probes are identical
            // across the analytic pass and every perturbed pass
            let mut probe_rng = rng.clone();
            f(g, leaves, &mut probe_rng)
        };
        out.push(check(name, tol, &inputs, &mut build));
    };

    {
        let data = vec![
            (uniform(&mut rng, 12, -1.0, 1.0), Shape::matrix(4, 3)),
            (uniform(&mut rng, 6, -1.0, 1.0), Shape::matrix(3, 2)),
        ];
        let pr = rng.clone();
        run("matmul", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.matmul(l[0], l[1])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![
            (uniform(&mut rng, 2 * 16, -1.0, 1.0), Shape::new([2, 4, 4])),
            (uniform(&mut rng, 3 * 2 * 9, -1.0, 1.0), Shape::new([3, 2, 3, 3])),
            (uniform(&mut rng, 3, -1.0, 1.0), Shape::vector(3)),
        ];
        let pr = rng.clone();
        run("conv2d", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.conv2d(l[0], l[1], l[2])?;
            probe(g, out, r)
        }, &mut results);
    }
    for (name, f) in [
        ("sigmoid", (|g: &mut Graph<f64>, x| g.sigmoid(x)) as fn(&mut Graph<f64>, Value) -> AdResult<Value>),
        ("tanh", |g, x| g.tanh(x)),
        ("exp", |g, x| g.exp(x)),
    ] {
        let data = vec![(uniform(&mut rng, 8, -2.0, 2.0), Shape::vector(8))];
        let pr = rng.clone();
        run(name, TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = f(g, l[0])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform_off_zero(&mut rng, 8), Shape::vector(8))];
        let pr = rng.clone();
        run("relu", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.relu(l[0])?;
            probe(g, out, r)
        }, &mut results);
    }
    for (name, f) in [
        ("add", (|g: &mut Graph<f64>, a, b| g.add(a, b)) as fn(&mut Graph<f64>, Value, Value) -> AdResult<Value>),
        ("sub", |g, a, b| g.sub(a, b)),
        ("mul", |g, a, b| g.mul(a, b)),
    ] {
        let data = vec![
            (uniform(&mut rng, 6, -1.0, 1.0), Shape::vector(6)),
            (uniform(&mut rng, 6, -1.0, 1.0), Shape::vector(6)),
        ];
        let pr = rng.clone();
        run(name, TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = f(g, l[0], l[1])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 5, -1.0, 1.0), Shape::vector(5))];
        let pr = rng.clone();
        run("scale", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.scale(l[0], -0.37)?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 12, -1.0, 1.0), Shape::matrix(3, 4))];
        let pr = rng.clone();
        run("reshape", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.reshape(l[0], Shape::new([2, 2, 3]))?;
            let nl = g.tanh(out)?;
            probe(g, nl, r)
        }, &mut results);
    }
    {
        let data = vec![
            (uniform(&mut rng, 4, -1.0, 1.0), Shape::vector(4)),
            (uniform(&mut rng, 3, -1.0, 1.0), Shape::vector(3)),
            (uniform(&mut rng, 2, -1.0, 1.0), Shape::vector(2)),
        ];
        let pr = rng.clone();
        run("concat_axis0", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.concat(&[l[0], l[1], l[2]], 0)?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![
            (uniform(&mut rng, 6, -1.0, 1.0), Shape::matrix(2, 3)),
            (uniform(&mut rng, 4, -1.0, 1.0), Shape::matrix(2, 2)),
        ];
        let pr = rng.clone();
        run("concat_axis1", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.concat(&[l[0], l[1]], 1)?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 24, -1.0, 1.0), Shape::new([2, 3, 4]))];
        let pr = rng.clone();
        run("slice", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.slice(l[0], 1, 1, 2)?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 9, -2.0, 2.0), Shape::matrix(3, 3))];
        let pr = rng.clone();
        run("softmax_positions", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.softmax_positions(l[0])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 5, -2.0, 2.0), Shape::vector(5))];
        let pr = rng.clone();
        run("log_softmax", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.log_softmax(l[0])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 6, -1.0, 1.0), Shape::vector(6))];
        run("pick", TOL_SMOOTH, data, rng.clone(), &mut |g, l, _| g.pick(l[0], 4), &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 7, -1.0, 1.0), Shape::vector(7))];
        run("sum", TOL_SMOOTH, data, rng.clone(), &mut |g, l, _| g.sum(l[0]), &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 7, -1.0, 1.0), Shape::vector(7))];
        run("mean", TOL_SMOOTH, data, rng.clone(), &mut |g, l, _| g.mean(l[0]), &mut results);
    }
    {
        let data = vec![
            (uniform(&mut rng, 3 * 9, -1.0, 1.0), Shape::new([3, 3, 3])),
            (uniform(&mut rng, 9, -1.0, 1.0), Shape::matrix(3, 3)),
        ];
        let pr = rng.clone();
        run("weighted_sum", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.weighted_sum(l[0], l[1])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![
            (uniform(&mut rng, 2 * 9, -1.0, 1.0), Shape::new([2, 3, 3])),
            (uniform(&mut rng, 2, -1.0, 1.0), Shape::vector(2)),
        ];
        let pr = rng.clone();
        run("scatter_write", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.scatter_write(l[0], (1, 2), l[1])?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 2 * 9, -1.0, 1.0), Shape::new([2, 3, 3]))];
        let pr = rng.clone();
        run("column", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.column(l[0], (2, 0))?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 2 * 16, -1.0, 1.0), Shape::new([2, 4, 4]))];
        let pr = rng.clone();
        run("shift2d", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.shift2d(l[0], (1, -1))?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![(uniform(&mut rng, 2 * 16, -1.0, 1.0), Shape::new([2, 4, 4]))];
        let pr = rng.clone();
        run("crop2d", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.crop2d(l[0], (0, 1), 3)?;
            probe(g, out, r)
        }, &mut results);
    }
    {
        let data = vec![
            (uniform(&mut rng, 4, -1.0, 1.0), Shape::vector(4)),
            (uniform(&mut rng, 12, -1.0, 1.0), Shape::matrix(4, 3)),
            (uniform(&mut rng, 3, -1.0, 1.0), Shape::vector(3)),
        ];
        let pr = rng.clone();
        run("affine", TOL_SMOOTH, data, pr, &mut |g, l, r| {
            let out = g.affine(l[0], l[1], l[2])?;
            probe(g, out, r)
        }, &mut results);
    }
    results
}
