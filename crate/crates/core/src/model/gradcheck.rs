use super::network::{loss_and_gradient, sample_loss, LossWeights, Sample};
use super::params::ModelParams;
use super::Result;

/// Comparison of analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `‖a − n‖ / max(‖a‖, ‖n‖)` over the whole parameter vector.
    pub vector_rel: f64,
    /// Largest per-component `|a − n| / max(|a|, |n|, floor)`.
    pub max_component_rel: f64,
    /// Flat parameter index of that component.
    pub worst: usize,
    pub params: usize,
}

impl GradCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.vector_rel < tol && self.max_component_rel < tol
    }
}

/// Checks the analytic gradient of the total loss against central
/// differences with step `1e-5 · max(1, |θ|)`. Components whose gradients
/// are both below `floor` in magnitude are compared against `floor`.
pub fn gradient_check(
    params: &ModelParams,
    sample: &Sample,
    weights: LossWeights,
    teacher: Option<&[f64]>,
    floor: f64,
) -> Result<GradCheck> {
    let mut analytic = params.clone();
    analytic.fill(0.0);
    loss_and_gradient(params, sample, weights, teacher, &mut analytic)?;
    let analytic = analytic.to_flat();
    let theta = params.to_flat();
    let mut probe = params.clone();
    let mut numeric = vec![0.0; theta.len()];
    let mut shifted = theta.clone();
    for i in 0..theta.len() {
        let h = 1e-5 * theta[i].abs().max(1.0);
        shifted[i] = theta[i] + h;
        probe.set_flat(&shifted);
        let up = sample_loss(&probe, sample, weights, teacher)?.total;
        shifted[i] = theta[i] - h;
        probe.set_flat(&shifted);
        let down = sample_loss(&probe, sample, weights, teacher)?.total;
        shifted[i] = theta[i];
        numeric[i] = (up - down) / (2.0 * h);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    let scale = norm(&analytic).max(norm(&numeric));
    let vector_rel = if scale == 0.0 { 0.0 } else { norm(&diff) / scale };
    let (mut worst, mut max_component_rel) = (0, 0.0);
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(floor);
        if rel > max_component_rel {
            max_component_rel = rel;
            worst = i;
        }
    }
    Ok(GradCheck {
        vector_rel,
        max_component_rel,
        worst,
        params: theta.len(),
    })
}
