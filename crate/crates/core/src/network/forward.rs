use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::{Activation, BatchNormState, BnBlock, BnSite, Network, ParameterVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Normalize with batch statistics and update the running statistics.
    Train,
    /// Normalize with running statistics; state is left unchanged.
    Infer,
}

#[derive(Debug, Clone)]
struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    /// Features whose batch variance fell below the floor (train mode only).
    floored: Vec<bool>,
    train: bool,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    bn: Option<BnCache>,
    /// Post-normalization pre-activation; `None` for the output layer.
    pre_activation: Option<Array2<f64>>,
    activation: Option<Array2<f64>>,
}

/// Intermediates of one forward pass, consumed by the backward passes.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    batch: usize,
    input_bn: Option<BnCache>,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub values: Array1<f64>,
    pub bn: BatchNormState,
    pub cache: ForwardCache,
}

fn check_finite(a: &Array2<f64>, layer: usize) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation { layer })
    }
}

impl Network {
    fn normalize(
        &self,
        z: &mut Array2<f64>,
        block: &BnBlock,
        params: &[f64],
        state: &mut BatchNormState,
        mode: Mode,
    ) -> BnCache {
        let arch = self.architecture();
        let (eps, momentum) = (arch.bn_epsilon, arch.bn_momentum);
        let scale = &params[block.scale()];
        let shift = &params[block.shift()];
        let features = block.features;
        if !z.is_standard_layout() {
            *z = z.as_standard_layout().into_owned();
        }
        let mut means = vec![0.0; features];
        let mut inv_std = Array1::zeros(features);
        let mut floored = vec![false; features];
        let train = mode == Mode::Train;
        if train {
            let n = z.nrows() as f64;
            let data = z.as_slice().expect("standard layout");
            for row in data.chunks_exact(features) {
                for (m, &v) in means.iter_mut().zip(row) {
                    *m += v;
                }
            }
            means.iter_mut().for_each(|m| *m /= n);
            let mut vars = vec![0.0; features];
            for row in data.chunks_exact(features) {
                for ((s, &v), &m) in vars.iter_mut().zip(row).zip(&means) {
                    *s += (v - m) * (v - m);
                }
            }
            for c in 0..features {
                let var = vars[c] / n;
                state.update(block.feature_offset + c, means[c], var, momentum);
                floored[c] = var < eps;
                inv_std[c] = 1.0 / var.max(eps).sqrt();
            }
        } else {
            for c in 0..features {
                let (mean, var) = state.inference_stats(block.feature_offset + c, momentum);
                means[c] = mean;
                inv_std[c] = 1.0 / var.max(eps).sqrt();
            }
        }
        let mut xhat = Array2::zeros(z.raw_dim());
        let inv = inv_std.as_slice().expect("contiguous");
        let zs = z.as_slice_mut().expect("standard layout");
        let xs = xhat.as_slice_mut().expect("standard layout");
        for (zrow, xrow) in zs.chunks_exact_mut(features).zip(xs.chunks_exact_mut(features)) {
            for c in 0..features {
                let x = (zrow[c] - means[c]) * inv[c];
                xrow[c] = x;
                zrow[c] = x * scale[c] + shift[c];
            }
        }
        BnCache { xhat, inv_std, floored, train }
    }

    fn affine_forward(&self, h: &Array2<f64>, i: usize, params: &[f64]) -> Array2<f64> {
        let block = &self.layout().affine[i];
        let w = ArrayView2::from_shape((block.fan_out, block.fan_in), &params[block.weights()])
            .expect("layout sized");
        let b = &params[block.bias()];
        let mut z = h.dot(&w.t());
        if !z.is_standard_layout() {
            z = z.as_standard_layout().into_owned();
        }
        for row in z.as_slice_mut().expect("standard layout").chunks_exact_mut(block.fan_out) {
            for (v, &bi) in row.iter_mut().zip(b) {
                *v += bi;
            }
        }
        z
    }

    /// Evaluates the network on the rows of `x`.
    pub fn forward(
        &self,
        params: &ParameterVector,
        bn: &BatchNormState,
        x: ArrayView2<f64>,
        mode: Mode,
    ) -> Result<ForwardOutput> {
        let arch = self.architecture();
        let layout = self.layout();
        if x.ncols() != arch.input_dim {
            return Err(Error::DimensionMismatch { expected: arch.input_dim, got: x.ncols() });
        }
        if params.len() != layout.len {
            return Err(Error::DimensionMismatch { expected: layout.len, got: params.len() });
        }
        if bn.len() != layout.features {
            return Err(Error::DimensionMismatch { expected: layout.features, got: bn.len() });
        }
        let batch = x.nrows();
        if batch == 0 || (mode == Mode::Train && batch < 2) {
            return Err(Error::BatchTooSmall(batch));
        }
        let p = params.as_slice();
        let mut state = bn.clone();
        let mut h = x.to_owned();
        let input_bn = layout
            .bn_block(BnSite::Input)
            .map(|block| self.normalize(&mut h, block, p, &mut state, mode));
        check_finite(&h, 0)?;

        let depth = arch.depth;
        let mut layers = Vec::with_capacity(depth);
        let mut values = None;
        for i in 0..depth {
            let mut z = self.affine_forward(&h, i, p);
            let bn_cache = layout
                .bn_block(BnSite::Affine(i))
                .map(|block| self.normalize(&mut z, block, p, &mut state, mode));
            check_finite(&z, i + 1)?;
            let input = std::mem::take(&mut h);
            if i + 1 == depth {
                values = Some(z.column(0).to_owned());
                layers.push(LayerCache { input, bn: bn_cache, pre_activation: None, activation: None });
            } else {
                let act = arch.activation;
                h = z.mapv(|v| act.apply(v));
                let activation = match act {
                    Activation::Logistic => Some(h.clone()),
                    _ => None,
                };
                layers.push(LayerCache { input, bn: bn_cache, pre_activation: Some(z), activation });
            }
        }
        let cache = ForwardCache { generation: params.generation(), batch, input_bn, layers };
        Ok(ForwardOutput { values: values.expect("depth >= 1"), bn: state, cache })
    }

    /// Inference-mode values only.
    pub fn predict(
        &self,
        params: &ParameterVector,
        bn: &BatchNormState,
        x: ArrayView2<f64>,
    ) -> Result<Array1<f64>> {
        Ok(self.forward(params, bn, x, Mode::Infer)?.values)
    }

    /// Gradient of the batch output weighted by `upstream` with respect to
    /// every parameter. Batch statistics of a train-mode pass are treated as
    /// functions of the batch.
    pub fn grad_params(
        &self,
        params: &ParameterVector,
        cache: &ForwardCache,
        upstream: ArrayView1<f64>,
    ) -> Result<Vec<f64>> {
        if cache.generation != params.generation() {
            return Err(Error::StaleCache);
        }
        if upstream.len() != cache.batch {
            return Err(Error::DimensionMismatch { expected: cache.batch, got: upstream.len() });
        }
        let mut grad = vec![0.0; self.layout().len];
        self.backward(params.as_slice(), cache, upstream, Some(&mut grad), false);
        Ok(grad)
    }

    /// Input gradient of the inference-mode network at every row of `x`.
    /// Also returns the values, which come for free.
    pub fn value_and_grad_x(
        &self,
        params: &ParameterVector,
        bn: &BatchNormState,
        x: ArrayView2<f64>,
    ) -> Result<(Array1<f64>, Array2<f64>)> {
        let out = self.forward(params, bn, x, Mode::Infer)?;
        let ones = Array1::ones(out.cache.batch);
        let dx = self
            .backward(params.as_slice(), &out.cache, ones.view(), None, true)
            .expect("input gradient requested");
        Ok((out.values, dx))
    }

    pub fn grad_x(
        &self,
        params: &ParameterVector,
        bn: &BatchNormState,
        x: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        Ok(self.value_and_grad_x(params, bn, x)?.1)
    }

    fn backward(
        &self,
        p: &[f64],
        cache: &ForwardCache,
        upstream: ArrayView1<f64>,
        mut grad: Option<&mut Vec<f64>>,
        want_input: bool,
    ) -> Option<Array2<f64>> {
        let arch = self.architecture();
        let layout = self.layout();
        let depth = arch.depth;
        let mut dh: Array2<f64> = upstream.to_owned().insert_axis(Axis(1));
        for i in (0..depth).rev() {
            let layer = &cache.layers[i];
            let mut dz = match (&layer.pre_activation, i + 1 == depth) {
                (_, true) => dh,
                (Some(a), false) => {
                    let act = arch.activation;
                    let mut dz = dh;
                    match &layer.activation {
                        Some(y) => Zip::from(&mut dz)
                            .and(a)
                            .and(y)
                            .for_each(|g, &x, &y| *g *= act.derivative(x, y)),
                        None => Zip::from(&mut dz).and(a).for_each(|g, &x| *g *= act.derivative(x, 0.0)),
                    }
                    dz
                }
                (None, false) => unreachable!("hidden layers cache their pre-activation"),
            };
            if let (Some(bn), Some(block)) = (&layer.bn, layout.bn_block(BnSite::Affine(i))) {
                dz = bn_backward(dz, bn, block, p, grad.as_deref_mut());
            }
            let block = &layout.affine[i];
            if let Some(g) = grad.as_deref_mut() {
                let dw = dz.t().dot(&layer.input);
                for (dst, src) in g[block.weights()].iter_mut().zip(dw.iter()) {
                    *dst += src;
                }
                let db = dz.sum_axis(Axis(0));
                for (dst, src) in g[block.bias()].iter_mut().zip(db.iter()) {
                    *dst += src;
                }
            }
            let need_input_grad = i > 0 || want_input || cache.input_bn.is_some() && grad.is_some();
            if !need_input_grad {
                return None;
            }
            let w = ArrayView2::from_shape((block.fan_out, block.fan_in), &p[block.weights()])
                .expect("layout sized");
            dh = dz.dot(&w);
        }
        if let (Some(bn), Some(block)) = (&cache.input_bn, layout.bn_block(BnSite::Input)) {
            dh = bn_backward(dh, bn, block, p, grad.as_deref_mut());
        }
        want_input.then_some(dh)
    }
}

fn bn_backward(
    dy: Array2<f64>,
    cache: &BnCache,
    block: &BnBlock,
    p: &[f64],
    grad: Option<&mut Vec<f64>>,
) -> Array2<f64> {
    let scale = &p[block.scale()];
    let n = dy.nrows() as f64;
    let features = block.features;
    let mut dx = if dy.is_standard_layout() { dy } else { dy.as_standard_layout().into_owned() };
    let xs = cache.xhat.as_slice().expect("standard layout");
    let inv = cache.inv_std.as_slice().expect("contiguous");
    let mut sum_dy = vec![0.0; features];
    let mut sum_dy_xhat = vec![0.0; features];
    let ds = dx.as_slice_mut().expect("standard layout");
    for (drow, xrow) in ds.chunks_exact(features).zip(xs.chunks_exact(features)) {
        for c in 0..features {
            sum_dy[c] += drow[c];
            sum_dy_xhat[c] += drow[c] * xrow[c];
        }
    }
    if let Some(g) = grad {
        for c in 0..features {
            g[block.scale().start + c] += sum_dy_xhat[c];
            g[block.shift().start + c] += sum_dy[c];
        }
    }
    let k: Vec<f64> = (0..features).map(|c| scale[c] * inv[c]).collect();
    // per-feature a, b with dx = k (dy - a - xhat b)
    let (a, b): (Vec<f64>, Vec<f64>) = (0..features)
        .map(|c| match (cache.train, cache.floored[c]) {
            (false, _) => (0.0, 0.0),
            (true, true) => (sum_dy[c] / n, 0.0),
            (true, false) => (sum_dy[c] / n, sum_dy_xhat[c] / n),
        })
        .unzip();
    for (drow, xrow) in ds.chunks_exact_mut(features).zip(xs.chunks_exact(features)) {
        for c in 0..features {
            drow[c] = k[c] * (drow[c] - a[c] - xrow[c] * b[c]);
        }
    }
    dx
}
