use crate::error::{Error, Result};
use crate::numerics::{Mlp, Rng, Tape};

/// State-value estimate `V(s)` over a tanh MLP with a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFn {
    net: Mlp,
}

impl ValueFn {
    pub fn new(state_dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Ok(Self {
            net: Mlp::new(&sizes, 1.0, rng)?,
        })
    }

    pub fn from_net(net: Mlp) -> Result<Self> {
        if net.output_dim() != 1 {
            return Err(Error::Shape(format!("value network must emit 1 value, emits {}", net.output_dim())));
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.forward(state)?.0)
    }

    pub fn forward(&self, state: &[f64]) -> Result<(f64, Tape)> {
        let (out, tape) = self.net.forward(state)?;
        if !out[0].is_finite() {
            return Err(Error::Divergence(format!("value estimate {} at state {state:?}", out[0])));
        }
        Ok((out[0], tape))
    }

    /// Accumulates `d_value * dV/dparams` into `grads`.
    pub fn accumulate_grad(&self, tape: &Tape, d_value: f64, grads: &mut [f64]) -> Result<()> {
        self.net.backward_into(tape, &[d_value], grads).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_vector_output() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(ValueFn::from_net(net).is_err());
    }

    #[test]
    fn zero_net_values_zero() {
        let v = ValueFn::from_net(Mlp::zeros(&[3, 4, 1]).unwrap()).unwrap();
        assert_eq!(v.value(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }
}
