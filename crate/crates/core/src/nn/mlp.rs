use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Row-major `rows x cols` block of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "batch data length");
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Side-by-side concatenation `[self | other]`.
    pub fn hcat(&self, other: &Batch) -> Batch {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Batch {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Columns `start..start + len`.
    pub fn columns(&self, start: usize, len: usize) -> Batch {
        let mut data = Vec::with_capacity(self.rows * len);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..start + len]);
        }
        Batch {
            rows: self.rows,
            cols: len,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerShape {
    fn weight_count(&self) -> usize {
        self.inputs * self.outputs
    }

    fn param_count(&self) -> usize {
        self.weight_count() + self.outputs
    }
}

/// Dense feed-forward network. All parameters live in one flat vector,
/// layer by layer, each layer as row-major weights (`outputs x inputs`)
/// followed by the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr", into = "MlpRepr")]
pub struct Mlp {
    shapes: Vec<LayerShape>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MlpRepr {
    shapes: Vec<LayerShape>,
    params: Vec<f64>,
}

impl From<Mlp> for MlpRepr {
    fn from(net: Mlp) -> Self {
        Self {
            shapes: net.shapes,
            params: net.params,
        }
    }
}

impl TryFrom<MlpRepr> for Mlp {
    type Error = Error;

    fn try_from(repr: MlpRepr) -> Result<Self> {
        if repr.shapes.is_empty() {
            return Err(Error::Checkpoint("network has no layers".into()));
        }
        if repr.shapes.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return Err(Error::Checkpoint("layer widths do not chain".into()));
        }
        let mut net = Mlp::from_shapes(repr.shapes);
        if repr.params.len() != net.params.len() {
            return Err(Error::DimensionMismatch {
                context: "network parameters",
                expected: net.params.len(),
                got: repr.params.len(),
            });
        }
        net.params = repr.params;
        Ok(net)
    }
}

/// Saved activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[k + 1]` the output of layer `k`.
    activations: Vec<Batch>,
}

impl ForwardCache {
    pub fn output(&self) -> &Batch {
        self.activations.last().expect("cache holds the input")
    }
}

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the strides describe matrices inside the given slices and `c`
    // is a distinct row-major `m x n` buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Zero-initialized network with the given widths.
    pub fn zeros(widths: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(widths.len() >= 2, "need at least input and output width");
        let n = widths.len() - 1;
        let shapes: Vec<LayerShape> = (0..n)
            .map(|k| LayerShape {
                inputs: widths[k],
                outputs: widths[k + 1],
                activation: if k + 1 == n { output } else { hidden },
            })
            .collect();
        Self::from_shapes(shapes)
    }

    pub fn from_shapes(shapes: Vec<LayerShape>) -> Self {
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut total = 0;
        for s in &shapes {
            offsets.push(total);
            total += s.param_count();
        }
        Self {
            shapes,
            offsets,
            params: vec![0.0; total],
        }
    }

    /// Uniform `±1/sqrt(fan_in)` initialization; the last layer is further
    /// scaled by `output_scale`.
    pub fn random<R: Rng + ?Sized>(
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        output_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(widths, hidden, output);
        let last = net.shapes.len() - 1;
        for k in 0..net.shapes.len() {
            let shape = net.shapes[k];
            let mut bound = 1.0 / (shape.inputs as f64).sqrt();
            if k == last {
                bound *= output_scale;
            }
            let off = net.offsets[k];
            for p in &mut net.params[off..off + shape.param_count()] {
                *p = rng.gen_range(-bound..=bound);
            }
        }
        net
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn input_dim(&self) -> usize {
        self.shapes[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.shapes.last().map_or(0, |s| s.outputs)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.shapes == other.shapes
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let off = self.offsets[layer];
        &self.params[off..off + self.shapes[layer].weight_count()]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let s = self.shapes[layer];
        let off = self.offsets[layer] + s.weight_count();
        &self.params[off..off + s.outputs]
    }

    fn layer_slices_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let s = self.shapes[layer];
        let off = self.offsets[layer];
        self.params[off..off + s.param_count()].split_at_mut(s.weight_count())
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        self.layer_slices_mut(layer).0
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        self.layer_slices_mut(layer).1
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut x = input.to_vec();
        for (k, s) in self.shapes.iter().enumerate() {
            let w = self.weights(k);
            let b = self.bias(k);
            let y: Vec<f64> = (0..s.outputs)
                .map(|o| {
                    let row = &w[o * s.inputs..(o + 1) * s.inputs];
                    let z = row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b[o];
                    s.activation.apply(z)
                })
                .collect();
            x = y;
        }
        Ok(x)
    }

    pub fn forward_batch(&self, input: &Batch) -> Result<ForwardCache> {
        if input.cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network batch input",
                expected: self.input_dim(),
                got: input.cols,
            });
        }
        let mut activations = Vec::with_capacity(self.shapes.len() + 1);
        activations.push(input.clone());
        for (k, s) in self.shapes.iter().enumerate() {
            let x = activations.last().expect("non-empty");
            let n = x.rows;
            let mut z = Batch::zeros(n, s.outputs);
            let b = self.bias(k);
            for i in 0..n {
                z.row_mut(i).copy_from_slice(b);
            }
            // Z = X W^T + b
            gemm(
                n,
                s.inputs,
                s.outputs,
                &x.data,
                (s.inputs as isize, 1),
                self.weights(k),
                (1, s.inputs as isize),
                1.0,
                &mut z.data,
            );
            if s.activation != Activation::Identity {
                for v in &mut z.data {
                    *v = s.activation.apply(*v);
                }
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse-mode pass through a cached forward. Returns the flat parameter
    /// gradient (same layout as [`Mlp::params`]) summed over the batch, and
    /// the gradient with respect to the input batch.
    pub fn backward_cached(
        &self,
        cache: &ForwardCache,
        output_grad: &Batch,
    ) -> Result<(Vec<f64>, Batch)> {
        let out = cache.output();
        if output_grad.cols != out.cols || output_grad.rows != out.rows {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: out.rows * out.cols,
                got: output_grad.rows * output_grad.cols,
            });
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = output_grad.clone();
        for k in (0..self.shapes.len()).rev() {
            let s = self.shapes[k];
            let y = &cache.activations[k + 1];
            let x = &cache.activations[k];
            let n = x.rows;
            if s.activation != Activation::Identity {
                for (d, &yv) in delta.data.iter_mut().zip(&y.data) {
                    *d *= s.activation.derivative_from_output(yv);
                }
            }
            let off = self.offsets[k];
            let (gw, gb) = grads[off..off + s.param_count()].split_at_mut(s.weight_count());
            // dW = delta^T X
            gemm(
                s.outputs,
                n,
                s.inputs,
                &delta.data,
                (1, s.outputs as isize),
                &x.data,
                (s.inputs as isize, 1),
                0.0,
                gw,
            );
            for i in 0..n {
                for (g, d) in gb.iter_mut().zip(delta.row(i)) {
                    *g += d;
                }
            }
            // dX = delta W
            let mut dx = Batch::zeros(n, s.inputs);
            gemm(
                n,
                s.outputs,
                s.inputs,
                &delta.data,
                (s.outputs as isize, 1),
                self.weights(k),
                (s.inputs as isize, 1),
                0.0,
                &mut dx.data,
            );
            delta = dx;
        }
        Ok((grads, delta))
    }

    pub fn backward(&self, input: &Batch, output_grad: &Batch) -> Result<(Vec<f64>, Batch)> {
        let cache = self.forward_batch(input)?;
        self.backward_cached(&cache, output_grad)
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn polyak_update(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if !self.same_shape(source) {
            return Err(Error::DimensionMismatch {
                context: "polyak update",
                expected: self.params.len(),
                got: source.params.len(),
            });
        }
        if tau == 1.0 {
            self.params.copy_from_slice(&source.params);
        } else if tau != 0.0 {
            for (t, s) in self.params.iter_mut().zip(&source.params) {
                *t = tau * s + (1.0 - tau) * *t;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[5, 7, 3], Activation::Relu, Activation::Tanh);
        assert_eq!(
            net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn identity_linear_layer() {
        let mut net = Mlp::zeros(&[3, 3], Activation::Relu, Activation::Identity);
        let w = net.weights_mut(0);
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let x = [0.3, -1.2, 4.0];
        assert_eq!(net.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::random(
            &[4, 16, 16, 2],
            Activation::Relu,
            Activation::Tanh,
            1.0,
            &mut rng,
        );
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| (0..4).map(|j| (i * 4 + j) as f64 * 0.1 - 1.0).collect())
            .collect();
        let cache = net.forward_batch(&Batch::from_rows(&rows)).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let single = net.forward(r).unwrap();
            for (a, b) in single.iter().zip(cache.output().row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let net = Mlp::zeros(&[3, 2], Activation::Relu, Activation::Tanh);
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn linear_weight_gradient_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = Mlp::random(
            &[3, 2],
            Activation::Relu,
            Activation::Identity,
            1.0,
            &mut rng,
        );
        let x = Batch::from_vec(1, 3, vec![0.5, -1.0, 2.0]);
        let g = Batch::from_vec(1, 2, vec![3.0, -0.25]);
        let (grads, dx) = net.backward(&x, &g).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(grads[o * 3 + i], g.data[o] * x.data[i]);
            }
            assert_eq!(grads[6 + o], g.data[o]);
        }
        let w = net.weights(0);
        for i in 0..3 {
            let expected = g.data[0] * w[i] + g.data[1] * w[3 + i];
            assert!((dx.data[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::random(
            &[4, 8, 2],
            Activation::Relu,
            Activation::Tanh,
            1.0,
            &mut rng,
        );
        let x = Batch::from_vec(2, 4, vec![0.1; 8]);
        let (grads, dx) = net.backward(&x, &Batch::zeros(2, 2)).unwrap();
        assert!(grads.iter().all(|&g| g == 0.0));
        assert!(dx.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn polyak_edge_cases() {
        let mut target = Mlp::zeros(&[2, 2], Activation::Relu, Activation::Identity);
        let mut source = target.clone();
        source.params_mut().iter_mut().for_each(|p| *p = 1.0);

        let mut t = target.clone();
        t.polyak_update(&source, 0.0).unwrap();
        assert_eq!(t, target);

        t.polyak_update(&source, 0.005).unwrap();
        assert!(t.params().iter().all(|&p| p == 0.005));

        target.polyak_update(&source, 1.0).unwrap();
        assert_eq!(target, source);

        let other = Mlp::zeros(&[2, 3], Activation::Relu, Activation::Identity);
        assert!(target.polyak_update(&other, 0.5).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::random(
            &[4, 6, 2],
            Activation::Relu,
            Activation::Tanh,
            1.0,
            &mut rng,
        );
        let text = serde_json::to_string(&net).unwrap();
        let back: Mlp = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn json_with_wrong_param_count_rejected() {
        let text =
            r#"{"shapes":[{"inputs":2,"outputs":1,"activation":"identity"}],"params":[1.0]}"#;
        assert!(serde_json::from_str::<Mlp>(text).is_err());
    }
}
