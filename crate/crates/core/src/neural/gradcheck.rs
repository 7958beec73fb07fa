//! Central finite-difference verification of analytic gradients.
//!
//! The relative error of one entry is `|a - n| / max(|a|, |n|, floor)`; the
//! floor keeps entries whose true gradient is essentially zero from turning
//! rounding noise into huge ratios.
//!
//! The default five-point stencil `(8(f(+e) - f(-e)) - (f(+2e) - f(-2e))) / 12e`
//! is still a central difference but with fourth-order truncation error,
//! which matters next to batch normalization's strong curvature.

use super::{NeuralError, ParamSet, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(+e) - f(-e)) / 2e`
    ThreePoint,
    FivePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    pub stencil: Stencil,
    pub tolerance: f64,
    pub floor: f64,
    /// Check at most this many evenly spaced entries of each parameter.
    pub max_entries_per_param: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { epsilon: 1e-4, stencil: Stencil::FivePoint, tolerance: 1e-6, floor: 1e-4, max_entries_per_param: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
    pub passed: bool,
}

/// `loss` evaluates the model on fixed inputs; when its flag is `true` it
/// must also accumulate analytic gradients into the parameter set (which is
/// zeroed beforehand). Only trainable parameters are checked.
pub fn grad_check<F>(ps: &mut ParamSet<f64>, mut loss: F, opts: &GradCheckOptions) -> Result<GradCheckReport, NeuralError>
where
    F: FnMut(&mut ParamSet<f64>, bool) -> Result<f64, NeuralError>,
{
    ps.zero_grad();
    loss(ps, true)?;
    let analytic = ps.clone();
    ps.zero_grad();
    compare(&analytic, ps, loss, opts)
}

/// Compares gradients already accumulated in `analytic` (any precision, same
/// parameter order as `reference`) against finite differences of `loss` on
/// the 64-bit `reference` parameters.
pub fn grad_check_against<T, F>(analytic: &ParamSet<T>, reference: &mut ParamSet<f64>, loss: F, opts: &GradCheckOptions) -> Result<GradCheckReport, NeuralError>
where
    T: Scalar,
    F: FnMut(&mut ParamSet<f64>, bool) -> Result<f64, NeuralError>,
{
    if analytic.params().len() != reference.params().len() || analytic.params().iter().zip(reference.params()).any(|(a, r)| a.name != r.name || a.value.shape() != r.value.shape()) {
        return Err(NeuralError::ShapeMismatch("analytic and reference parameter sets differ".into()));
    }
    compare(analytic, reference, loss, opts)
}

fn compare<T, F>(analytic: &ParamSet<T>, ps: &mut ParamSet<f64>, mut loss: F, opts: &GradCheckOptions) -> Result<GradCheckReport, NeuralError>
where
    T: Scalar,
    F: FnMut(&mut ParamSet<f64>, bool) -> Result<f64, NeuralError>,
{
    let a = loss(ps, false)?;
    let b = loss(ps, false)?;
    if a.to_bits() != b.to_bits() {
        return Err(NeuralError::NonDeterministicModel(a, b));
    }
    let mut report = GradCheckReport { max_rel_error: 0.0, worst_param: String::new(), worst_index: 0, analytic_at_worst: 0.0, numeric_at_worst: 0.0, checked: 0, passed: false };
    let ids: Vec<_> = ps.ids().filter(|&id| ps.is_trainable(id)).collect();
    for id in ids {
        let n = ps.value(id).len();
        let stride = match opts.max_entries_per_param {
            Some(m) if m > 0 && n > m => n.div_ceil(m),
            _ => 1,
        };
        for k in (0..n).step_by(stride) {
            let orig = ps.value(id)[k];
            let e = opts.epsilon;
            let mut at = |delta: f64, ps: &mut ParamSet<f64>| -> Result<f64, NeuralError> {
                ps.value_mut(id)[k] = orig + delta;
                let v = loss(ps, false);
                ps.value_mut(id)[k] = orig;
                v
            };
            let numeric = match opts.stencil {
                Stencil::ThreePoint => (at(e, ps)? - at(-e, ps)?) / (2.0 * e),
                Stencil::FivePoint => {
                    let near = at(e, ps)? - at(-e, ps)?;
                    let far = at(2.0 * e, ps)? - at(-2.0 * e, ps)?;
                    (8.0 * near - far) / (12.0 * e)
                }
            };
            let an = analytic.grad(id)[k].as_f64();
            let rel = (an - numeric).abs() / an.abs().max(numeric.abs()).max(opts.floor);
            if !rel.is_finite() {
                return Err(NeuralError::NumericFailure(format!("gradient check of {} produced {rel}", ps.name(id))));
            }
            report.checked += 1;
            if rel > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = rel;
                report.worst_param = ps.name(id).to_string();
                report.worst_index = k;
                report.analytic_at_worst = an;
                report.numeric_at_worst = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < opts.tolerance;
    Ok(report)
}
