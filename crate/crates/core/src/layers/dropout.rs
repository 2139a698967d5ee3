use rand::Rng;

use super::Mode;
use crate::error::Result;
use crate::numeric::{DenseMatrix, Tape, Var};

/// Inverted-dropout mask: 0 with probability `rate`, else `1/(1−rate)`.
pub fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut impl Rng) -> DenseMatrix {
    let keep = 1.0 / (1.0 - rate);
    DenseMatrix::from_fn(rows, cols, |_, _| if rng.gen::<f64>() < rate { 0.0 } else { keep })
}

/// Identity in eval mode or at rate 0; otherwise records a masked copy.
pub fn dropout(tape: &mut Tape, x: Var, rate: f64, mode: Mode, rng: &mut impl Rng) -> Result<Var> {
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x);
    }
    let (r, c) = tape.value(x).shape();
    let mask = dropout_mask(r, c, rate, rng);
    tape.mask(x, mask)
}
