//! Single-edge flux formulas.

/// Values on both sides of an edge. On a Dirichlet edge the `l` side holds
/// the boundary traces.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSides {
    pub tau: f64,
    pub u0k: f64,
    pub u0l: f64,
    pub phik: f64,
    pub phil: f64,
}

/// Everything the double upwind flux of one species selects on one edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdgeFlux {
    /// `F_{i,K,σ}`, oriented out of `K`.
    pub flux: f64,
    /// `V_{i,K,σ}`.
    pub drift: f64,
    /// `u_{i,σ}`.
    pub ui_sigma: f64,
    /// `u_{0,σ}`.
    pub u0_sigma: f64,
    /// `û_{0,σ,i}`.
    pub u0_hat: f64,
}

/// `V = D(u_0) − û β z D(Φ)` and `û`; the potential term is dropped when
/// `drift` is false.
pub fn drift_part(s: &EdgeSides, z: f64, beta: f64, drift: bool) -> (f64, f64) {
    let dphi = s.phil - s.phik;
    let hat = if z * dphi >= 0.0 { s.u0k } else { s.u0l };
    let v = if drift { (s.u0l - s.u0k) - hat * beta * z * dphi } else { s.u0l - s.u0k };
    (v, hat)
}

pub fn edge_flux(s: &EdgeSides, uik: f64, uil: f64, d: f64, z: f64, beta: f64, drift: bool) -> EdgeFlux {
    let (v, hat) = drift_part(s, z, beta, drift);
    let u0_sigma = s.u0k.max(s.u0l);
    let ui_sigma = if v >= 0.0 { uik } else { uil };
    EdgeFlux {
        flux: -s.tau * d * (u0_sigma * (uil - uik) - ui_sigma * v),
        drift: v,
        ui_sigma,
        u0_sigma,
        u0_hat: hat,
    }
}

/// Flux of species `i` together with its derivatives with respect to the
/// local unknowns `(u_{1..n,K}, Φ_K, u_{1..n,L}, Φ_L)`, written to `grad`
/// (length `2(n+1)`). Upwind choices are frozen at the current values.
#[allow(clippy::too_many_arguments)]
pub(crate) fn edge_flux_with_gradient(
    s: &EdgeSides,
    uk: &[f64],
    ul: &[f64],
    i: usize,
    d: f64,
    z: f64,
    beta: f64,
    drift: bool,
    grad: &mut [f64],
) -> EdgeFlux {
    let n = uk.len();
    let b = n + 1;
    let out = edge_flux(s, uk[i], ul[i], d, z, beta, drift);
    grad.fill(0.0);
    let c = -s.tau * d;
    let du = ul[i] - uk[i];
    let dphi = s.phil - s.phik;

    // u_{0,σ}: u_0 on the selected side depends on every species there
    let sigma_side = if s.u0k >= s.u0l { 0 } else { b };
    for j in 0..n {
        grad[sigma_side + j] -= c * du;
    }
    grad[i] -= c * out.u0_sigma;
    grad[b + i] += c * out.u0_sigma;
    let up_side = if out.drift >= 0.0 { 0 } else { b };
    grad[up_side + i] -= c * out.drift;

    let a = -c * out.ui_sigma;
    let hat_side = if z * dphi >= 0.0 { 0 } else { b };
    let bz = beta * z;
    for j in 0..n {
        grad[j] += a;
        grad[b + j] -= a;
        if drift {
            grad[hat_side + j] += a * bz * dphi;
        }
    }
    if drift {
        grad[n] += a * bz * out.u0_hat;
        grad[b + n] -= a * bz * out.u0_hat;
    }
    out
}

/// Flux of the simplified scheme without drift and with equal diffusion:
/// `−τD(u_{0,σ}(u_L − u_K) − u_{i,σ}(u_{0,L} − u_{0,K}))`, with `u_{i,σ}`
/// taken from the side of the smaller solvent concentration.
pub fn simplified_flux(tau: f64, d: f64, u0k: f64, u0l: f64, uik: f64, uil: f64) -> f64 {
    let ui_sigma = if u0k - u0l <= 0.0 { uik } else { uil };
    -tau * d * (u0k.max(u0l) * (uil - uik) - ui_sigma * (u0l - u0k))
}

/// The same flux rewritten with square roots of the solvent concentration.
/// Returns `None` if a solvent value is negative.
pub fn sqrt_form_flux(tau: f64, d: f64, u0k: f64, u0l: f64, uik: f64, uil: f64) -> Option<f64> {
    if !(u0k >= 0.0) || !(u0l >= 0.0) {
        return None;
    }
    let ui_sigma = if u0k - u0l <= 0.0 { uik } else { uil };
    let (rk, rl) = (u0k.sqrt(), u0l.sqrt());
    let rs = u0k.max(u0l).sqrt();
    Some(tau * d * (rs * (rk * uik - rl * uil) - ui_sigma * (rk - rl) * (rs + rk + rl)))
}
