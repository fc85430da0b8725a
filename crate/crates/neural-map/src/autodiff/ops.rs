//! Differentiable operations. Each constructor validates shapes, computes the
//! forward value, and registers a backward rule producing one gradient
//! contribution per parent.
//!
//! Conventions: matrices are `[rows, cols]` row-major; feature blocks are
//! `[C, H, W]` with flat index `c*H*W + y*W + x`; map positions are `(x, y)`
//! pairs with `x` the column and `y` the row.

use super::error::{AdError, AdResult};
use super::graph::{Graph, Value};
use super::scalar::Real;
use super::shape::Shape;

impl<E: Real> Graph<E> {
    // ── Linear algebra ──────────────────────────────────────────────────

    /// `[m,k] · [k,n] -> [m,n]`
    pub fn matmul(&mut self, a: Value, b: Value) -> AdResult<Value> {
        let (sa, sb) = (self.shape(a).clone(), self.shape(b).clone());
        if sa.rank() != 2 || sb.rank() != 2 || sa.dims()[1] != sb.dims()[0] {
            return Err(AdError::ShapeMismatch { op: "matmul", lhs: sa, rhs: sb });
        }
        let (m, k, n) = (sa.dims()[0], sa.dims()[1], sb.dims()[1]);
        let (ad, bd) = (self.data(a), self.data(b));
        let mut out = vec![E::zero(); m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = ad[i * k + p];
                let brow = &bd[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += aip * brow[j];
                }
            }
        }
        Ok(self.custom(
            Shape::matrix(m, n),
            out,
            vec![a, b],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let ad = ctx.parent_data(0);
                let bd = ctx.parent_data(1);
                // da += g . b^T
                let mut da = vec![E::zero(); m * k];
                for i in 0..m {
                    for p in 0..k {
                        let mut acc = E::zero();
                        for j in 0..n {
                            acc += g[i * n + j] * bd[p * n + j];
                        }
                        da[i * k + p] = acc;
                    }
                }
                // db += a^T . g
                let mut db = vec![E::zero(); k * n];
                for p in 0..k {
                    for i in 0..m {
                        let aip = ad[i * k + p];
                        let grow = &g[i * n..(i + 1) * n];
                        let drow = &mut db[p * n..(p + 1) * n];
                        for j in 0..n {
                            drow[j] += aip * grow[j];
                        }
                    }
                }
                vec![da, db]
            }),
        ))
    }

    /// 3x3 cross-correlation with zero padding 1 and stride 1; spatial extent
    /// is preserved. `input [C_in,H,W]`, `kernels [C_out,C_in,3,3]`,
    /// `bias [C_out]` -> `[C_out,H,W]`.
    pub fn conv2d(&mut self, input: Value, kernels: Value, bias: Value) -> AdResult<Value> {
        let si = self.shape(input).clone();
        let sk = self.shape(kernels).clone();
        let sb = self.shape(bias).clone();
        if si.rank() != 3 {
            return Err(AdError::BadShape { op: "conv2d", expected: "CxHxW input".into(), actual: si });
        }
        let (c_in, h, w) = (si.dims()[0], si.dims()[1], si.dims()[2]);
        if sk.rank() != 4 || sk.dims()[1] != c_in || sk.dims()[2] != 3 || sk.dims()[3] != 3 {
            return Err(AdError::BadShape {
                op: "conv2d",
                expected: format!("C_outx{c_in}x3x3 kernels"),
                actual: sk,
            });
        }
        let c_out = sk.dims()[0];
        if sb.dims() != [c_out] {
            return Err(AdError::BadShape { op: "conv2d", expected: format!("{c_out} biases"), actual: sb });
        }

        let (xd, kd, bd) = (self.data(input), self.data(kernels), self.data(bias));
        let mut out = vec![E::zero(); c_out * h * w];
        for o in 0..c_out {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = bd[o];
                    for i in 0..c_in {
                        for ky in 0..3usize {
                            let yy = y as i64 + ky as i64 - 1;
                            if yy < 0 || yy >= h as i64 {
                                continue;
                            }
                            for kx in 0..3usize {
                                let xx = x as i64 + kx as i64 - 1;
                                if xx < 0 || xx >= w as i64 {
                                    continue;
                                }
                                acc += xd[(i * h + yy as usize) * w + xx as usize]
                                    * kd[((o * c_in + i) * 3 + ky) * 3 + kx];
                            }
                        }
                    }
                    out[(o * h + y) * w + x] = acc;
                }
            }
        }
        Ok(self.custom(
            Shape::new([c_out, h, w]),
            out,
            vec![input, kernels, bias],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let xd = ctx.parent_data(0);
                let kd = ctx.parent_data(1);
                let mut dx = vec![E::zero(); c_in * h * w];
                let mut dk = vec![E::zero(); c_out * c_in * 9];
                let mut db = vec![E::zero(); c_out];
                for o in 0..c_out {
                    for y in 0..h {
                        for x in 0..w {
                            let go = g[(o * h + y) * w + x];
                            db[o] += go;
                            for i in 0..c_in {
                                for ky in 0..3usize {
                                    let yy = y as i64 + ky as i64 - 1;
                                    if yy < 0 || yy >= h as i64 {
                                        continue;
                                    }
                                    for kx in 0..3usize {
                                        let xx = x as i64 + kx as i64 - 1;
                                        if xx < 0 || xx >= w as i64 {
                                            continue;
                                        }
                                        let xi = (i * h + yy as usize) * w + xx as usize;
                                        let ki = ((o * c_in + i) * 3 + ky) * 3 + kx;
                                        dx[xi] += go * kd[ki];
                                        dk[ki] += go * xd[xi];
                                    }
                                }
                            }
                        }
                    }
                }
                vec![dx, dk, db]
            }),
        ))
    }

    // ── Elementwise ─────────────────────────────────────────────────────

    pub fn sigmoid(&mut self, x: Value) -> AdResult<Value> {
        let shape = self.shape(x).clone();
        let half = E::lit(0.5);
        // tanh form; stable for large magnitudes of either sign
        let out: Vec<E> = self.data(x).iter().map(|&v| half * ((v * half).tanh() + E::one())).collect();
        Ok(self.custom(
            shape,
            out,
            vec![x],
            Box::new(|ctx| {
                let s = ctx.out_data();
                let g = ctx.out_grad();
                vec![s.iter().zip(g).map(|(&s, &g)| g * s * (E::one() - s)).collect()]
            }),
        ))
    }

    pub fn tanh(&mut self, x: Value) -> AdResult<Value> {
        let shape = self.shape(x).clone();
        let out: Vec<E> = self.data(x).iter().map(|&v| v.tanh()).collect();
        Ok(self.custom(
            shape,
            out,
            vec![x],
            Box::new(|ctx| {
                let t = ctx.out_data();
                let g = ctx.out_grad();
                vec![t.iter().zip(g).map(|(&t, &g)| g * (E::one() - t * t)).collect()]
            }),
        ))
    }

    pub fn relu(&mut self, x: Value) -> AdResult<Value> {
        let shape = self.shape(x).clone();
        let out: Vec<E> = self.data(x).iter().map(|&v| v.max(E::zero())).collect();
        Ok(self.custom(
            shape,
            out,
            vec![x],
            Box::new(|ctx| {
                let xd = ctx.parent_data(0);
                let g = ctx.out_grad();
                vec![xd
                    .iter()
                    .zip(g)
                    .map(|(&x, &g)| if x > E::zero() { g } else { E::zero() })
                    .collect()]
            }),
        ))
    }

    pub fn exp(&mut self, x: Value) -> AdResult<Value> {
        let shape = self.shape(x).clone();
        let out: Vec<E> = self.data(x).iter().map(|&v| v.exp()).collect();
        Ok(self.custom(
            shape,
            out,
            vec![x],
            Box::new(|ctx| {
                let e = ctx.out_data();
                let g = ctx.out_grad();
                vec![e.iter().zip(g).map(|(&e, &g)| g * e).collect()]
            }),
        ))
    }

    fn binary_same_shape(
        &mut self,
        op: &'static str,
        a: Value,
        b: Value,
    ) -> AdResult<Shape> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(AdError::ShapeMismatch { op, lhs: sa.clone(), rhs: sb.clone() });
        }
        Ok(sa.clone())
    }

    pub fn add(&mut self, a: Value, b: Value) -> AdResult<Value> {
        let shape = self.binary_same_shape("add", a, b)?;
        let out: Vec<E> = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| x + y).collect();
        Ok(self.custom(
            shape,
            out,
            vec![a, b],
            Box::new(|ctx| {
                let g = ctx.out_grad().to_vec();
                vec![g.clone(), g]
            }),
        ))
    }

    pub fn sub(&mut self, a: Value, b: Value) -> AdResult<Value> {
        let shape = self.binary_same_shape("sub", a, b)?;
        let out: Vec<E> = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| x - y).collect();
        Ok(self.custom(
            shape,
            out,
            vec![a, b],
            Box::new(|ctx| {
                let g = ctx.out_grad();
                vec![g.to_vec(), g.iter().map(|&g| -g).collect()]
            }),
        ))
    }

    /// Hadamard product.
    pub fn mul(&mut self, a: Value, b: Value) -> AdResult<Value> {
        let shape = self.binary_same_shape("mul", a, b)?;
        let out: Vec<E> = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| x * y).collect();
        Ok(self.custom(
            shape,
            out,
            vec![a, b],
            Box::new(|ctx| {
                let g = ctx.out_grad();
                let ad = ctx.parent_data(0);
                let bd = ctx.parent_data(1);
                vec![
                    g.iter().zip(bd).map(|(&g, &b)| g * b).collect(),
                    g.iter().zip(ad).map(|(&g, &a)| g * a).collect(),
                ]
            }),
        ))
    }

    /// Multiply by a compile-time constant (not a graph input).
    pub fn scale(&mut self, x: Value, c: f64) -> AdResult<Value> {
        let shape = self.shape(x).clone();
        let ce = E::lit(c);
        let out: Vec<E> = self.data(x).iter().map(|&v| v * ce).collect();
        Ok(self.custom(
            shape,
            out,
            vec![x],
            Box::new(move |ctx| vec![ctx.out_grad().iter().map(|&g| g * ce).collect()]),
        ))
    }

    // ── Shape plumbing ──────────────────────────────────────────────────

    pub fn reshape(&mut self, x: Value, shape: Shape) -> AdResult<Value> {
        let old = self.shape(x).clone();
        if old.count() != shape.count() {
            return Err(AdError::ShapeMismatch { op: "reshape", lhs: old, rhs: shape });
        }
        let out = self.data(x).to_vec();
        Ok(self.custom(shape, out, vec![x], Box::new(|ctx| vec![ctx.out_grad().to_vec()])))
    }

    /// Juxtaposition along `axis`. All parts must agree on every other extent.
    pub fn concat(&mut self, parts: &[Value], axis: usize) -> AdResult<Value> {
        if parts.is_empty() {
            return Err(AdError::Argument { op: "concat", message: "empty part list".into() });
        }
        let first = self.shape(parts[0]).clone();
        if axis >= first.rank() {
            return Err(AdError::Argument {
                op: "concat",
                message: format!("axis {axis} out of range for rank {}", first.rank()),
            });
        }
        let mut axis_lens = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            if s.rank() != first.rank()
                || s.dims().iter().enumerate().any(|(i, &d)| i != axis && d != first.dims()[i])
            {
                return Err(AdError::ShapeMismatch { op: "concat", lhs: first, rhs: s.clone() });
            }
            axis_lens.push(s.dims()[axis]);
        }
        let total: usize = axis_lens.iter().sum();
        let mut dims = first.dims().to_vec();
        dims[axis] = total;
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();

        let mut out = vec![E::zero(); outer * total * inner];
        let mut offset = 0usize;
        for (&p, &alen) in parts.iter().zip(&axis_lens) {
            let pd = self.data(p);
            for o in 0..outer {
                let src = &pd[o * alen * inner..(o + 1) * alen * inner];
                let dst_start = (o * total + offset) * inner;
                out[dst_start..dst_start + alen * inner].copy_from_slice(src);
            }
            offset += alen;
        }
        Ok(self.custom(
            Shape::new(dims),
            out,
            parts.to_vec(),
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let mut grads = Vec::with_capacity(axis_lens.len());
                let mut offset = 0usize;
                for &alen in &axis_lens {
                    let mut dp = vec![E::zero(); outer * alen * inner];
                    for o in 0..outer {
                        let src_start = (o * total + offset) * inner;
                        dp[o * alen * inner..(o + 1) * alen * inner]
                            .copy_from_slice(&g[src_start..src_start + alen * inner]);
                    }
                    grads.push(dp);
                    offset += alen;
                }
                grads
            }),
        ))
    }

    /// Contiguous sub-block `[start, start+len)` along `axis`.
    pub fn slice(&mut self, x: Value, axis: usize, start: usize, len: usize) -> AdResult<Value> {
        let s = self.shape(x).clone();
        if axis >= s.rank() || start + len > s.dims()[axis] || len == 0 {
            return Err(AdError::Argument {
                op: "slice",
                message: format!("range {start}..{} on axis {axis} of {s}", start + len),
            });
        }
        let axis_len = s.dims()[axis];
        let outer: usize = s.dims()[..axis].iter().product();
        let inner: usize = s.dims()[axis + 1..].iter().product();
        let mut dims = s.dims().to_vec();
        dims[axis] = len;

        let xd = self.data(x);
        let mut out = vec![E::zero(); outer * len * inner];
        for o in 0..outer {
            let src_start = (o * axis_len + start) * inner;
            out[o * len * inner..(o + 1) * len * inner]
                .copy_from_slice(&xd[src_start..src_start + len * inner]);
        }
        Ok(self.custom(
            Shape::new(dims),
            out,
            vec![x],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let mut dx = vec![E::zero(); outer * axis_len * inner];
                for o in 0..outer {
                    let dst_start = (o * axis_len + start) * inner;
                    dx[dst_start..dst_start + len * inner]
                        .copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
                }
                vec![dx]
            }),
        ))
    }

    // ── Reductions and normalizations ───────────────────────────────────

    pub fn sum(&mut self, x: Value) -> AdResult<Value> {
        let out: E = self.data(x).iter().copied().sum();
        let n = self.data(x).len();
        Ok(self.custom(
            Shape::scalar(),
            vec![out],
            vec![x],
            Box::new(move |ctx| {
                let g = ctx.out_grad()[0];
                vec![vec![g; n]]
            }),
        ))
    }

    /// Softmax over every position of an `[H,W]` score grid, with
    /// max-subtraction for overflow safety. Output is strictly positive and
    /// sums to one.
    pub fn softmax_positions(&mut self, scores: Value) -> AdResult<Value> {
        let s = self.shape(scores).clone();
        if s.rank() != 2 {
            return Err(AdError::BadShape { op: "softmax_positions", expected: "HxW scores".into(), actual: s });
        }
        let xd = self.data(scores);
        if let Some(i) = xd.iter().position(|v| !v.is_finite()) {
            return Err(AdError::NonFinite { op: "softmax_positions", index: i });
        }
        let max = xd.iter().copied().fold(E::neg_infinity(), E::max);
        let exps: Vec<E> = xd.iter().map(|&v| (v - max).exp()).collect();
        let total: E = exps.iter().copied().sum();
        let out: Vec<E> = exps.iter().map(|&e| e / total).collect();
        Ok(self.custom(
            s,
            out,
            vec![scores],
            Box::new(|ctx| {
                let p = ctx.out_data();
                let g = ctx.out_grad();
                let dot: E = p.iter().zip(g).map(|(&p, &g)| p * g).sum();
                vec![p.iter().zip(g).map(|(&p, &g)| p * (g - dot)).collect()]
            }),
        ))
    }

    /// Numerically stable `log(softmax(x))` over all elements, via
    /// log-sum-exp. Never computed as `log` of a softmax output.
    pub fn log_softmax(&mut self, x: Value) -> AdResult<Value> {
        let shape = self.shape(x).clone();
        let xd = self.data(x);
        if let Some(i) = xd.iter().position(|v| !v.is_finite()) {
            return Err(AdError::NonFinite { op: "log_softmax", index: i });
        }
        let max = xd.iter().copied().fold(E::neg_infinity(), E::max);
        let lse = max + xd.iter().map(|&v| (v - max).exp()).sum::<E>().ln();
        let out: Vec<E> = xd.iter().map(|&v| v - lse).collect();
        Ok(self.custom(
            shape,
            out,
            vec![x],
            Box::new(|ctx| {
                let ls = ctx.out_data();
                let g = ctx.out_grad();
                let gsum: E = g.iter().copied().sum();
                vec![ls.iter().zip(g).map(|(&l, &g)| g - l.exp() * gsum).collect()]
            }),
        ))
    }

    /// Select one element by flat index.
    pub fn pick(&mut self, x: Value, index: usize) -> AdResult<Value> {
        let n = self.data(x).len();
        if index >= n {
            return Err(AdError::IndexOutOfBounds { op: "pick", index, count: n });
        }
        let v = self.data(x)[index];
        Ok(self.custom(
            Shape::scalar(),
            vec![v],
            vec![x],
            Box::new(move |ctx| {
                let mut dx = vec![E::zero(); n];
                dx[index] = ctx.out_grad()[0];
                vec![dx]
            }),
        ))
    }

    // ── Map-structured operations ───────────────────────────────────────

    fn check_pos(op: &'static str, shape: &Shape, x: i64, y: i64) -> AdResult<(usize, usize)> {
        let (h, w) = (shape.dims()[1] as i64, shape.dims()[2] as i64);
        if x < 0 || x >= w || y < 0 || y >= h {
            return Err(AdError::OutOfBounds { op, x, y, shape: shape.clone() });
        }
        Ok((x as usize, y as usize))
    }

    /// Per-channel sum of map columns weighted by an `[H,W]` distribution:
    /// `out[c] = sum_{y,x} weights[y,x] * map[c,y,x]`.
    pub fn weighted_sum(&mut self, map: Value, weights: Value) -> AdResult<Value> {
        let sm = self.shape(map).clone();
        let sw = self.shape(weights).clone();
        if sm.rank() != 3 || sw.rank() != 2 || sm.dims()[1..] != *sw.dims() {
            return Err(AdError::ShapeMismatch { op: "weighted_sum", lhs: sm, rhs: sw });
        }
        let (c, h, w) = (sm.dims()[0], sm.dims()[1], sm.dims()[2]);
        let (md, wd) = (self.data(map), self.data(weights));
        let hw = h * w;
        let mut out = vec![E::zero(); c];
        for ch in 0..c {
            let plane = &md[ch * hw..(ch + 1) * hw];
            out[ch] = plane.iter().zip(wd).map(|(&m, &a)| m * a).sum();
        }
        Ok(self.custom(
            Shape::vector(c),
            out,
            vec![map, weights],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let md = ctx.parent_data(0);
                let wd = ctx.parent_data(1);
                let mut dm = vec![E::zero(); c * hw];
                let mut dw = vec![E::zero(); hw];
                for ch in 0..c {
                    let gc = g[ch];
                    let plane = &md[ch * hw..(ch + 1) * hw];
                    let dplane = &mut dm[ch * hw..(ch + 1) * hw];
                    for i in 0..hw {
                        dplane[i] = gc * wd[i];
                        dw[i] += gc * plane[i];
                    }
                }
                vec![dm, dw]
            }),
        ))
    }

    /// Functional column replacement: output equals `map` everywhere except
    /// the column at `pos`, which becomes `vec`.
    pub fn scatter_write(&mut self, map: Value, pos: (i64, i64), vec_: Value) -> AdResult<Value> {
        let sm = self.shape(map).clone();
        if sm.rank() != 3 {
            return Err(AdError::BadShape { op: "scatter_write", expected: "CxHxW map".into(), actual: sm });
        }
        let (c, h, w) = (sm.dims()[0], sm.dims()[1], sm.dims()[2]);
        let sv = self.shape(vec_).clone();
        if sv.dims() != [c] {
            return Err(AdError::BadShape { op: "scatter_write", expected: format!("{c}-vector"), actual: sv });
        }
        let (x, y) = Self::check_pos("scatter_write", &sm, pos.0, pos.1)?;
        let hw = h * w;
        let mut out = self.data(map).to_vec();
        let vd = self.data(vec_);
        for ch in 0..c {
            out[ch * hw + y * w + x] = vd[ch];
        }
        Ok(self.custom(
            sm,
            out,
            vec![map, vec_],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let mut dm = g.to_vec();
                let mut dv = vec![E::zero(); c];
                for ch in 0..c {
                    let idx = ch * hw + y * w + x;
                    dv[ch] = g[idx];
                    dm[idx] = E::zero();
                }
                vec![dm, dv]
            }),
        ))
    }

    /// Read the feature column at one map position.
    pub fn column(&mut self, map: Value, pos: (i64, i64)) -> AdResult<Value> {
        let sm = self.shape(map).clone();
        if sm.rank() != 3 {
            return Err(AdError::BadShape { op: "column", expected: "CxHxW map".into(), actual: sm });
        }
        let (c, h, w) = (sm.dims()[0], sm.dims()[1], sm.dims()[2]);
        let (x, y) = Self::check_pos("column", &sm, pos.0, pos.1)?;
        let hw = h * w;
        let md = self.data(map);
        let out: Vec<E> = (0..c).map(|ch| md[ch * hw + y * w + x]).collect();
        Ok(self.custom(
            Shape::vector(c),
            out,
            vec![map],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let mut dm = vec![E::zero(); c * hw];
                for ch in 0..c {
                    dm[ch * hw + y * w + x] = g[ch];
                }
                vec![dm]
            }),
        ))
    }

    /// Translate every channel plane by `(du,dv)` (columns shift by `du`,
    /// rows by `dv`), filling vacated cells with zero. Cells shifted out of
    /// range are dropped and receive zero gradient.
    pub fn shift2d(&mut self, map: Value, delta: (i64, i64)) -> AdResult<Value> {
        let sm = self.shape(map).clone();
        if sm.rank() != 3 {
            return Err(AdError::BadShape { op: "shift2d", expected: "CxHxW map".into(), actual: sm });
        }
        let (c, h, w) = (sm.dims()[0], sm.dims()[1], sm.dims()[2]);
        let (du, dv) = delta;
        let hw = h * w;
        let md = self.data(map);
        let mut out = vec![E::zero(); c * hw];
        for ch in 0..c {
            for y in 0..h {
                let sy = y as i64 - dv;
                if sy < 0 || sy >= h as i64 {
                    continue;
                }
                for x in 0..w {
                    let sx = x as i64 - du;
                    if sx < 0 || sx >= w as i64 {
                        continue;
                    }
                    out[ch * hw + y * w + x] = md[ch * hw + sy as usize * w + sx as usize];
                }
            }
        }
        Ok(self.custom(
            sm,
            out,
            vec![map],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let mut dm = vec![E::zero(); c * hw];
                for ch in 0..c {
                    for y in 0..h {
                        let ty = y as i64 + dv;
                        if ty < 0 || ty >= h as i64 {
                            continue;
                        }
                        for x in 0..w {
                            let tx = x as i64 + du;
                            if tx < 0 || tx >= w as i64 {
                                continue;
                            }
                            dm[ch * hw + y * w + x] = g[ch * hw + ty as usize * w + tx as usize];
                        }
                    }
                }
                vec![dm]
            }),
        ))
    }

    /// `k`x`k` window centered on `center`, zero-padded where the window
    /// extends past the map edge. `k` must be odd.
    pub fn crop2d(&mut self, map: Value, center: (i64, i64), k: usize) -> AdResult<Value> {
        let sm = self.shape(map).clone();
        if sm.rank() != 3 {
            return Err(AdError::BadShape { op: "crop2d", expected: "CxHxW map".into(), actual: sm });
        }
        if k % 2 == 0 || k == 0 {
            return Err(AdError::Argument { op: "crop2d", message: format!("window {k} must be odd") });
        }
        let (c, h, w) = (sm.dims()[0], sm.dims()[1], sm.dims()[2]);
        let (cx, cy) = Self::check_pos("crop2d", &sm, center.0, center.1)?;
        let half = (k / 2) as i64;
        let hw = h * w;
        let md = self.data(map);
        let mut out = vec![E::zero(); c * k * k];
        for ch in 0..c {
            for j in 0..k {
                let sy = cy as i64 - half + j as i64;
                if sy < 0 || sy >= h as i64 {
                    continue;
                }
                for i in 0..k {
                    let sx = cx as i64 - half + i as i64;
                    if sx < 0 || sx >= w as i64 {
                        continue;
                    }
                    out[(ch * k + j) * k + i] = md[ch * hw + sy as usize * w + sx as usize];
                }
            }
        }
        Ok(self.custom(
            Shape::new([c, k, k]),
            out,
            vec![map],
            Box::new(move |ctx| {
                let g = ctx.out_grad();
                let mut dm = vec![E::zero(); c * hw];
                for ch in 0..c {
                    for j in 0..k {
                        let sy = cy as i64 - half + j as i64;
                        if sy < 0 || sy >= h as i64 {
                            continue;
                        }
                        for i in 0..k {
                            let sx = cx as i64 - half + i as i64;
                            if sx < 0 || sx >= w as i64 {
                                continue;
                            }
                            dm[ch * hw + sy as usize * w + sx as usize] += g[(ch * k + j) * k + i];
                        }
                    }
                }
                vec![dm]
            }),
        ))
    }

    // ── Conveniences built from the primitives above ────────────────────

    /// `x [n] · w [n,m] + b [m] -> [m]`
    pub fn affine(&mut self, x: Value, w: Value, b: Value) -> AdResult<Value> {
        let n = self.shape(x).count();
        let row = self.reshape(x, Shape::matrix(1, n))?;
        let prod = self.matmul(row, w)?;
        let m = self.shape(prod).dims()[1];
        let flat = self.reshape(prod, Shape::vector(m))?;
        self.add(flat, b)
    }

    /// Mean of all elements, as a scalar node.
    pub fn mean(&mut self, x: Value) -> AdResult<Value> {
        let n = self.data(x).len() as f64;
        let s = self.sum(x)?;
        self.scale(s, 1.0 / n)
    }
}
