use super::matrix::{dot, Matrix};
use super::rng::Rng;
use crate::error::{Error, Result};

/// Fully connected network: tanh on hidden layers, identity on the output.
///
/// Parameters live in one flat buffer, layer by layer, each layer storing its
/// `out x in` weight block (row-major) followed by its `out` biases. The flat
/// layout is what [`super::Adam`] and the checkpoint format operate on.
#[derive(Debug, Clone)]
pub struct Mlp {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    params: Vec<f64>,
    version: u64,
}

/// Activations cached by [`Mlp::forward`]: the input followed by every
/// layer's post-activation output.
#[derive(Debug, Clone)]
pub struct Tape {
    activations: Vec<Vec<f64>>,
    version: u64,
}

impl Tape {
    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Equality compares architecture and parameter values; the tape version
/// counter is bookkeeping and ignored.
impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.params == other.params
    }
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0;
        for w in sizes.windows(2) {
            offsets.push(total);
            total += w[0] * w[1] + w[1];
        }
        offsets.push(total);
        Ok(Self {
            sizes: sizes.to_vec(),
            offsets,
            params: vec![0.0; total],
            version: 0,
        })
    }

    /// Uniform `±1/sqrt(fan_in)` weights and zero biases, with the output
    /// layer's weights multiplied by `output_gain`.
    pub fn new(sizes: &[usize], output_gain: f64, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let n_layers = net.num_layers();
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let gain = if l + 1 == n_layers { output_gain } else { 1.0 };
            let start = net.offsets[l];
            for w in &mut net.params[start..start + fan_in * fan_out] {
                *w = gain * rng.uniform_range(-bound, bound);
            }
        }
        Ok(net)
    }

    /// Builds a network from explicit per-layer weights (`out x in`) and biases.
    pub fn from_layers(weights: &[Matrix], biases: &[Vec<f64>]) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Shape("need one bias vector per weight matrix".into()));
        }
        let mut sizes = vec![weights[0].cols()];
        for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
            if w.cols() != *sizes.last().unwrap_or(&0) || b.len() != w.rows() {
                return Err(Error::Shape(format!("layer {l} does not chain with its predecessor")));
            }
            sizes.push(w.rows());
        }
        let mut net = Self::zeros(&sizes)?;
        for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
            let start = net.offsets[l];
            let nw = w.data().len();
            net.params[start..start + nw].copy_from_slice(w.data());
            net.params[start + nw..start + nw + b.len()].copy_from_slice(b);
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access. Invalidates every outstanding [`Tape`].
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn layer_weights(&self, l: usize) -> Matrix {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let start = self.offsets[l];
        Matrix::from_vec(fan_out, fan_in, self.params[start..start + fan_in * fan_out].to_vec())
            .expect("layer block has out*in entries")
    }

    pub fn layer_bias(&self, l: usize) -> &[f64] {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let start = self.offsets[l] + fan_in * fan_out;
        &self.params[start..start + fan_out]
    }

    /// Range of the flat parameter buffer holding layer `l`'s weights.
    pub fn weight_range(&self, l: usize) -> std::ops::Range<usize> {
        let start = self.offsets[l];
        start..start + self.sizes[l] * self.sizes[l + 1]
    }

    /// Range of the flat parameter buffer holding layer `l`'s biases.
    pub fn bias_range(&self, l: usize) -> std::ops::Range<usize> {
        let end = self.offsets[l + 1];
        end - self.sizes[l + 1]..end
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let n_layers = self.num_layers();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let start = self.offsets[l];
            let w = &self.params[start..start + fan_in * fan_out];
            let b = &self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out];
            let h = &activations[l];
            let hidden = l + 1 < n_layers;
            let out: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let z = dot(&w[o * fan_in..(o + 1) * fan_in], h) + b[o];
                    if hidden {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            activations.push(out);
        }
        let output = activations[n_layers].clone();
        Ok((
            output,
            Tape {
                activations,
                version: self.version,
            },
        ))
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward(input).map(|(out, _)| out)
    }

    /// Backpropagates `output_grad` through the cached tape, returning the
    /// flat parameter gradient and the gradient with respect to the input.
    pub fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grads = vec![0.0; self.num_params()];
        let input_grad = self.backward_into(tape, output_grad, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`Mlp::backward`] but accumulates the parameter gradient into `grads`.
    pub fn backward_into(&self, tape: &Tape, output_grad: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if tape.version != self.version || tape.activations.len() != self.sizes.len() {
            return Err(Error::StaleTape {
                tape: tape.version,
                net: self.version,
            });
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient has length {}, network emits {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        if grads.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "gradient buffer has {} slots for {} parameters",
                grads.len(),
                self.num_params()
            )));
        }
        let n_layers = self.num_layers();
        let mut delta = output_grad.to_vec();
        for l in (0..n_layers).rev() {
            if l + 1 < n_layers {
                // tanh'(z) = 1 - tanh(z)^2
                for (d, h) in delta.iter_mut().zip(&tape.activations[l + 1]) {
                    *d *= 1.0 - h * h;
                }
            }
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let start = self.offsets[l];
            let h_in = &tape.activations[l];
            let w = &self.params[start..start + fan_in * fan_out];
            let (gw, gb) = grads[start..start + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            let mut next = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = o * fan_in..(o + 1) * fan_in;
                for ((g, &h), (n, &wv)) in gw[row.clone()].iter_mut().zip(h_in).zip(next.iter_mut().zip(&w[row])) {
                    *g += d * h;
                    *n += d * wv;
                }
            }
            delta = next;
        }
        Ok(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2]).unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let net = Mlp::from_layers(&[Matrix::identity(2)], &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(net.predict(&[0.5, -0.2]).unwrap(), vec![0.5, -0.2]);
    }

    #[test]
    fn rejects_wrong_input_length() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn linear_input_gradient_is_transpose_product() {
        let w = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap();
        let net = Mlp::from_layers(&[w.clone()], &[vec![0.1, 0.2]]).unwrap();
        let (_, tape) = net.forward(&[0.3, 0.1, -0.7]).unwrap();
        let dy = [0.25, -2.0];
        let (_, dx) = net.backward(&tape, &dy).unwrap();
        assert_eq!(dx, w.transpose_matvec(&dy).unwrap());
    }

    #[test]
    fn constant_output_has_zero_input_gradient() {
        let mut rng = Rng::new(3);
        let mut net = Mlp::new(&[4, 6, 2], 1.0, &mut rng).unwrap();
        let r = net.weight_range(1);
        net.params_mut()[r].iter_mut().for_each(|w| *w = 0.0);
        let (_, tape) = net.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let (_, dx) = net.backward(&tape, &[1.0, -1.0]).unwrap();
        assert!(dx.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn stale_tape_is_rejected() {
        let mut rng = Rng::new(1);
        let mut net = Mlp::new(&[2, 3, 1], 1.0, &mut rng).unwrap();
        let (_, tape) = net.forward(&[0.0, 1.0]).unwrap();
        net.params_mut()[0] += 1.0;
        assert!(matches!(net.backward(&tape, &[1.0]), Err(Error::StaleTape { .. })));
    }

    #[test]
    fn from_layers_rejects_broken_chain() {
        let w0 = Matrix::zeros(3, 2);
        let w1 = Matrix::zeros(1, 4);
        assert!(Mlp::from_layers(&[w0, w1], &[vec![0.0; 3], vec![0.0]]).is_err());
    }
}
