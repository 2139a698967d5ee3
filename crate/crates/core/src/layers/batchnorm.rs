use super::conv::LayerParams;
use super::Mode;
use crate::error::Result;
use crate::numeric::{Tape, Var};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Batch normalization over the node dimension.
///
/// Training mode normalizes with batch statistics and folds them into the
/// running estimates (`r ← (1−m)·r + m·batch`, unbiased variance).
/// Evaluation mode uses the running estimates.
pub fn batch_norm(
    tape: &mut Tape,
    x: Var,
    gain: Var,
    bias: Var,
    params: &mut LayerParams,
    mode: Mode,
) -> Result<Var> {
    match mode {
        Mode::Train => {
            let n = tape.value(x).rows() as f64;
            let (y, stats) = tape.batch_norm_train(x, gain, bias, BN_EPS)?;
            let unbias = n / (n - 1.0);
            for (r, m) in params.running_mean.iter_mut().zip(&stats.mean) {
                *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * m;
            }
            for (r, v) in params.running_var.iter_mut().zip(&stats.var) {
                *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v * unbias;
            }
            Ok(y)
        }
        Mode::Eval => tape.batch_norm_eval(
            x,
            gain,
            bias,
            &params.running_mean,
            &params.running_var,
            BN_EPS,
        ),
    }
}
