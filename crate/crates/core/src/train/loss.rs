use crate::error::{Error, Result};

/// Predictions are clamped to `[CLAMP, 1 - CLAMP]` before taking logs.
pub const CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy and its gradient with respect to the predictions.
pub fn bce_loss(z: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if z.len() != y.len() {
        return Err(Error::Dimension(format!("{} predictions for {} targets", z.len(), y.len())));
    }
    if z.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let t = z.len() as f64;
    let mut loss = 0.0;
    let grad = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| {
            let zc = zi.clamp(CLAMP, 1.0 - CLAMP);
            loss -= yi * zc.ln() + (1.0 - yi) * (1.0 - zc).ln();
            (zc - yi) / (zc * (1.0 - zc)) / t
        })
        .collect();
    Ok((loss / t, grad))
}
