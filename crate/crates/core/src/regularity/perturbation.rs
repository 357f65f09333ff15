use crate::error::{Error, Result};

fn check(tau: f64, delta: f64, ybar_norm: f64, alpha: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(ybar_norm >= 0.0) || !ybar_norm.is_finite() {
        return Err(Error::InvalidParameter(format!("‖ȳ‖ must be ≥ 0, got {ybar_norm}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// `γ = α‖ȳ‖ / (‖ȳ‖ + δ(1 − α))`.
pub fn perturbation_gamma(delta: f64, ybar_norm: f64, alpha: f64) -> f64 {
    alpha * ybar_norm / (ybar_norm + delta * (1.0 - alpha))
}

/// Largest admissible Lipschitz constant: `δ(1 − α)α / (τ((1 + α)‖ȳ‖ + δ(1 − α)))`.
pub fn perturbation_limit(tau: f64, delta: f64, ybar_norm: f64, alpha: f64) -> Result<f64> {
    check(tau, delta, ybar_norm, alpha)?;
    Ok(delta * (1.0 - alpha) * alpha / (tau * ((1.0 + alpha) * ybar_norm + delta * (1.0 - alpha))))
}

/// Modulus bound `((1 − γ)/(τ(1 + γ)) − L)⁻¹` for `F + g` with `g` `L`-Lipschitz.
/// Fails with [`Error::InvalidPerturbation`] unless `L` is below [`perturbation_limit`].
pub fn perturbation_bound(tau: f64, delta: f64, ybar_norm: f64, alpha: f64, lipschitz: f64) -> Result<f64> {
    let limit = perturbation_limit(tau, delta, ybar_norm, alpha)?;
    if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
        return Err(Error::InvalidParameter(format!("L must be ≥ 0, got {lipschitz}")));
    }
    if lipschitz >= limit {
        return Err(Error::InvalidPerturbation { lipschitz, limit });
    }
    let gamma = perturbation_gamma(delta, ybar_norm, alpha);
    Ok(1.0 / ((1.0 - gamma) / (tau * (1.0 + gamma)) - lipschitz))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert!((perturbation_gamma(0.5, 1.0, 0.5) - 0.4).abs() < 1e-15);
        let b = perturbation_bound(1.0, 0.5, 1.0, 0.5, 0.05).unwrap();
        assert!((b - 2.641509433962264).abs() < 1e-12, "{b}");
        let lim = perturbation_limit(1.0, 0.5, 1.0, 0.5).unwrap();
        assert!((lim - 0.07142857142857142).abs() < 1e-15);
        let b = perturbation_bound(2.0, 1.0, 1.0, 1e-9, 0.0).unwrap();
        assert!((b - 2.0).abs() < 1e-6, "{b}");
        assert!(matches!(
            perturbation_bound(1.0, 0.5, 1.0, 0.5, 0.08),
            Err(Error::InvalidPerturbation { .. })
        ));
    }

    #[test]
    fn parameter_ranges() {
        assert!(matches!(perturbation_bound(1.0, 0.5, 1.0, 1.0, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(perturbation_bound(0.0, 0.5, 1.0, 0.5, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(perturbation_bound(1.0, 0.0, 1.0, 0.5, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(perturbation_bound(1.0, 0.5, 1.0, 0.5, -0.1), Err(Error::InvalidParameter(_))));
    }
}
