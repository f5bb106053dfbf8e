//! The nonlinear representation on which one Cramér semi-gradient step
//! breaks expectation-equivalence while the value learner stands still.
//!
//! Setup on the grid `z = (-1, 0, 1)`: the CDF is predicted by
//! `ψ_W(x) = (σ(w₁x₁), σ(w₂x₂), 1)` with `W₀ = (-ln 2, -ln(½)/2)` and
//! input `x = (1, 2)`, so `F_ψ = (1/3, 2/3, 1)` and `E[Z₀] = 0`. The
//! value learner reads its prediction through the expectation map and
//! also starts at 0. One squared-Cramér descent step toward the target
//! CDF `(0, 1, 1)` — whose expectation is also 0, so the TD error is 0
//! and `Q₁ = Q₀` — moves `E[Z₁]` to about `-0.046`.

/// Golden values of the sigmoid-CDF counterexample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SigmoidCounterexample {
    /// Gradient of ½·ℓ₂² with respect to `(w₁, w₂)`: `(2/27, -4/27)`.
    pub gradient: [f64; 2],
    /// Expectation of the initial predicted distribution: 0.
    pub e_z0: f64,
    /// Initial value prediction: 0.
    pub q0: f64,
    /// Expectation after one descent step with α = 1: about `-0.046`.
    pub e_z1: f64,
    /// Value prediction after its (zero) update: exactly 0.
    pub q1: f64,
}

fn sigmoid(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}

/// Expectation of the CDF `(F₁, F₂, 1)` on `z = (-1, 0, 1)`:
/// `-F₁ + (1 - F₂)`.
fn expectation_on_unit_grid(f1: f64, f2: f64) -> f64 {
    -f1 + (1.0 - f2)
}

/// Runs the counterexample and returns its golden quantities.
pub fn sigmoid_cdf_counterexample() -> SigmoidCounterexample {
    let x = [1.0, 2.0];
    let w0 = [-(2.0f64.ln()), -(0.5f64.ln()) / 2.0];
    let target_cdf = [0.0, 1.0, 1.0];
    let alpha = 1.0;

    let f_psi = [sigmoid(w0[0] * x[0]), sigmoid(w0[1] * x[1])];
    let e_z0 = expectation_on_unit_grid(f_psi[0], f_psi[1]);

    // Value side: θ₀ = (0, 0) matches E[Z₀] = 0, and the target CDF has
    // expectation 0, so the TD error and hence the θ update vanish.
    let q0 = 0.0;
    let target_value = expectation_on_unit_grid(target_cdf[0], target_cdf[1]);
    let q1 = q0 + alpha * (target_value - q0);

    // ∂(½ℓ₂²)/∂wᵢ = (F_ψ(zᵢ) − F_target(zᵢ)) σ'(wᵢxᵢ) xᵢ on the
    // 1-spaced grid (the last CDF component carries no weight).
    let gradient = [0, 1].map(|i| {
        let s = sigmoid(w0[i] * x[i]);
        (f_psi[i] - target_cdf[i]) * s * (1.0 - s) * x[i]
    });

    let w1 = [w0[0] - alpha * gradient[0], w0[1] - alpha * gradient[1]];
    let e_z1 = expectation_on_unit_grid(sigmoid(w1[0] * x[0]), sigmoid(w1[1] * x[1]));

    SigmoidCounterexample {
        gradient,
        e_z0,
        q0,
        e_z1,
        q1,
    }
}
