use super::{ModelConfig, ModelError};

/// `w_i = log(u_i/u_0) + β z_i Φ` with `u_0 = 1 − Σ_i u_i`.
pub fn entropy_variables(u: &[f64], phi: f64, config: &ModelConfig) -> Result<Vec<f64>, ModelError> {
    if u.len() != config.num_species() {
        return Err(ModelError::Domain(format!("expected {} concentrations, got {}", config.num_species(), u.len())));
    }
    let u0 = 1.0 - u.iter().sum::<f64>();
    if !(u0 > 0.0) || u.iter().any(|v| !(*v > 0.0)) {
        return Err(ModelError::Domain(format!("{u:?} is not in the open simplex")));
    }
    Ok(u.iter()
        .zip(&config.species)
        .map(|(ui, s)| (ui / u0).ln() + config.beta * s.z * phi)
        .collect())
}

/// `u_i = exp(w_i − βz_iΦ) / (1 + Σ_j exp(w_j − βz_jΦ))`, evaluated with a
/// shifted exponent. The result is kept strictly inside the open simplex:
/// components that underflow are raised to the smallest positive normal and
/// a sum that rounds to 1 is scaled back by one ulp.
pub fn invert_entropy_variables(w: &[f64], phi: f64, config: &ModelConfig) -> Vec<f64> {
    let a: Vec<f64> = w
        .iter()
        .zip(&config.species)
        .map(|(wi, s)| wi - config.beta * s.z * phi)
        .collect();
    let shift = a.iter().copied().fold(0.0f64, f64::max);
    let e: Vec<f64> = a.iter().map(|ai| (ai - shift).exp()).collect();
    let denom = (-shift).exp() + e.iter().sum::<f64>();
    let mut u: Vec<f64> = e.iter().map(|ei| (ei / denom).max(f64::MIN_POSITIVE)).collect();
    let s: f64 = u.iter().sum();
    let cap = 1.0 - f64::EPSILON;
    if s >= cap {
        for ui in &mut u {
            *ui *= cap / s;
        }
    }
    u
}
