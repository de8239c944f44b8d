//! Dense linear algebra, tanh MLPs with manual backpropagation, Adam, and
//! seeded random streams.

mod adam;
mod checkpoint;
mod matrix;
mod mlp;
mod rng;

pub use adam::{clip_grad_norm, Adam, AdamConfig};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use matrix::Matrix;
pub use mlp::{Mlp, Tape};
pub use rng::Rng;

/// Mean of a slice, `0.0` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}
