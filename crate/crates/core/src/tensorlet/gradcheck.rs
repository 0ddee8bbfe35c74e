use super::TensorError;

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `f` at `params`,
/// coordinate by coordinate, and returns the worst relative error.
pub fn finite_difference_check<F>(
    mut f: F,
    params: &[f64],
    analytic: &[f64],
    h: f64,
) -> Result<f64, TensorError>
where
    F: FnMut(&[f64]) -> f64,
{
    if params.len() != analytic.len() {
        return Err(TensorError::Argument(format!(
            "{} parameters but {} gradient entries",
            params.len(),
            analytic.len()
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(TensorError::Argument(format!("step must be positive, got {h}")));
    }
    let mut theta = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let plus = f(&theta);
        theta[i] = orig - h;
        let minus = f(&theta);
        theta[i] = orig;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(TensorError::NonFinite("finite-difference objective"));
        }
        let numeric = (plus - minus) / (2.0 * h);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let theta = [0.3, -1.2, 2.5, 0.0];
        let f = |p: &[f64]| 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        assert!(finite_difference_check(f, &theta, &theta, 1e-5).unwrap() < 1e-9);
    }

    #[test]
    fn constant() {
        let theta = [1.0, 2.0];
        assert!(finite_difference_check(|_| 4.2, &theta, &[0.0, 0.0], 1e-5).unwrap() < 1e-9);
        // a wrong analytic gradient is caught
        assert!(finite_difference_check(|_| 4.2, &theta, &[1e-3, 0.0], 1e-5).unwrap() > 0.5);
    }

    #[test]
    fn non_finite_objective() {
        let r = finite_difference_check(|p: &[f64]| p[0].ln(), &[0.0], &[1.0], 1e-5);
        assert_eq!(r, Err(TensorError::NonFinite("finite-difference objective")));
    }
}
