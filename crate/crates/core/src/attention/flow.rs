//! Linear-interpolation flow matching.

use super::Mat;
use crate::error::{Error, Result};

fn same_shape(a: &Mat, b: &Mat) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimensions(format!(
            "shape {:?} does not match {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `t x1 + (1 - t) x0`.
pub fn fm_interpolate(x0: &Mat, x1: &Mat, t: f64) -> Result<Mat> {
    same_shape(x0, x1)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidValue(format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    if t == 1.0 {
        return Ok(x1.clone());
    }
    Ok(x1 * t + x0 * (1.0 - t))
}

/// Velocity `x1 - x0`.
pub fn fm_target(x0: &Mat, x1: &Mat) -> Result<Mat> {
    same_shape(x0, x1)?;
    Ok(x1 - x0)
}

/// Mean squared error between `pred` and the target velocity.
pub fn fm_loss(pred: &Mat, x0: &Mat, x1: &Mat) -> Result<f64> {
    let target = fm_target(x0, x1)?;
    same_shape(pred, &target)?;
    if pred.is_empty() {
        return Err(Error::Dimensions("empty prediction".into()));
    }
    Ok((pred - target).map(|v| v * v).sum() / pred.len() as f64)
}
