//! Linear function approximation: scalar values `θᵀφ` and categorical
//! CDFs `Wφ`, their semi-gradient TD updates, the `zᵀC⁻¹` expectation
//! map, and matched initialization so a value learner and a CDF learner
//! start expectation-equal.

use thiserror::Error;

use crate::dist::{cdf_to_pmf, pmf_to_cdf, project_weighted_atoms, DistError, Support};

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("feature vector has {got} components, model expects {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("CDF weights require a 1-spaced support")]
    NotUnitSpaced,
    #[error("matched initialization needs a solvable feature system")]
    SingularSystem,
}

/// Scalar value model `Q(φ) = θᵀφ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    theta: Vec<f64>,
}

impl LinearQ {
    pub fn zeros(dim: usize) -> Self {
        LinearQ {
            theta: vec![0.0; dim],
        }
    }

    pub fn from_theta(theta: Vec<f64>) -> Self {
        LinearQ { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn check_dim(&self, phi: &[f64]) -> Result<(), LinearError> {
        if phi.len() != self.theta.len() {
            return Err(LinearError::DimMismatch {
                expected: self.theta.len(),
                got: phi.len(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, phi: &[f64]) -> Result<f64, LinearError> {
        self.check_dim(phi)?;
        Ok(dot(&self.theta, phi))
    }

    /// TD(0) semi-gradient: `θ ← θ + α (r + γ θᵀφ' − θᵀφ) φ`, where
    /// `phi_next = None` marks a terminal transition (γ masked to 0).
    pub fn semigradient_update(
        &mut self,
        phi: &[f64],
        reward: f64,
        gamma: f64,
        phi_next: Option<&[f64]>,
        alpha: f64,
    ) -> Result<(), LinearError> {
        self.check_dim(phi)?;
        let bootstrap = match phi_next {
            Some(next) => {
                self.check_dim(next)?;
                gamma * dot(&self.theta, next)
            }
            None => 0.0,
        };
        let td_error = reward + bootstrap - dot(&self.theta, phi);
        for (t, &f) in self.theta.iter_mut().zip(phi) {
            *t += alpha * td_error * f;
        }
        Ok(())
    }
}

/// Categorical CDF model `F(φ)[i] = (Wφ)[i]` on a 1-spaced support.
///
/// Predictions extend off-grid as a mixture-of-Diracs CDF: 0 below the
/// first atom and constant at `F(z_K)` above the last. Predictions may
/// be improper (components outside `[0,1]`, total mass ≠ 1); nothing
/// here clips them.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearZ {
    support: Support,
    dim: usize,
    /// Row-major K×d.
    w: Vec<f64>,
}

impl LinearZ {
    pub fn zeros(support: Support, dim: usize) -> Result<Self, LinearError> {
        if support.spacing() != Some(1.0) {
            return Err(LinearError::NotUnitSpaced);
        }
        let k = support.num_atoms();
        Ok(LinearZ {
            support,
            dim,
            w: vec![0.0; k * dim],
        })
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_atoms(&self) -> usize {
        self.support.num_atoms()
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.w[i * self.dim..(i + 1) * self.dim]
    }

    fn check_dim(&self, phi: &[f64]) -> Result<(), LinearError> {
        if phi.len() != self.dim {
            return Err(LinearError::DimMismatch {
                expected: self.dim,
                got: phi.len(),
            });
        }
        Ok(())
    }

    /// CDF values `Wφ` at the atoms.
    pub fn predict_cdf(&self, phi: &[f64]) -> Result<Vec<f64>, LinearError> {
        self.check_dim(phi)?;
        Ok((0..self.num_atoms())
            .map(|i| dot(self.row(i), phi))
            .collect())
    }

    /// PMF view of the prediction (first differences of the CDF); sums
    /// to the predicted `F(z_K)`.
    pub fn predict_mass(&self, phi: &[f64]) -> Result<Vec<f64>, LinearError> {
        Ok(cdf_to_pmf(&self.predict_cdf(phi)?))
    }

    /// `zᵀ C⁻¹ W φ`: the expectation of the predicted signed measure,
    /// computed through the first-difference map.
    pub fn expectation(&self, phi: &[f64]) -> Result<f64, LinearError> {
        let mass = self.predict_mass(phi)?;
        Ok(self
            .support
            .atoms()
            .iter()
            .zip(&mass)
            .map(|(z, m)| z * m)
            .sum())
    }

    /// The d-vector `zᵀC⁻¹W`, i.e. the linear functional mapping φ to
    /// the predicted expectation. Matched initialization copies this
    /// into θ₀.
    pub fn expectation_map(&self) -> Vec<f64> {
        let z = self.support.atoms();
        let k = self.num_atoms();
        let mut out = vec![0.0; self.dim];
        for i in 0..k {
            // C⁻¹ takes row differences; z_i multiplies row_i − row_{i+1}
            // summed as z·diff, rearranged per row.
            let coeff = if i + 1 < k { z[i] - z[i + 1] } else { z[i] };
            for (o, &wij) in out.iter_mut().zip(self.row(i)) {
                *o += coeff * wij;
            }
        }
        out
    }

    /// Projected distributional TD target
    /// `Π_C (r + γ Z(φ'))` as CDF values on the support. Terminal
    /// transitions (`phi_next = None`) yield `Π_C δ_r`. Total mass is
    /// preserved; expectation is preserved when the shifted support
    /// stays inside `[z_1, z_K]`.
    pub fn projected_target_cdf(
        &self,
        reward: f64,
        gamma: f64,
        phi_next: Option<&[f64]>,
    ) -> Result<Vec<f64>, LinearError> {
        let mass = match phi_next {
            Some(next) if gamma > 0.0 => {
                let next_mass = self.predict_mass(next)?;
                project_weighted_atoms(
                    self.support
                        .atoms()
                        .iter()
                        .zip(next_mass)
                        .map(|(&z, m)| (reward + gamma * z, m)),
                    &self.support,
                )
            }
            _ => project_weighted_atoms([(reward, 1.0)], &self.support),
        };
        Ok(pmf_to_cdf(&mass))
    }

    /// Semi-gradient CDF update
    /// `W ← W + α (F_target − Wφ) φᵀ` with the projected sampled
    /// target. Rank-one in W; leaves `F(z_K)` invariant wherever the
    /// model already predicts total mass 1.
    pub fn semigradient_cdf_update(
        &mut self,
        phi: &[f64],
        reward: f64,
        gamma: f64,
        phi_next: Option<&[f64]>,
        alpha: f64,
    ) -> Result<(), LinearError> {
        self.check_dim(phi)?;
        let target = self.projected_target_cdf(reward, gamma, phi_next)?;
        let predicted = self.predict_cdf(phi)?;
        for i in 0..self.num_atoms() {
            let residual = alpha * (target[i] - predicted[i]);
            if residual == 0.0 {
                continue;
            }
            for (w, &f) in self.row_mut(i).iter_mut().zip(phi) {
                *w += residual * f;
            }
        }
        Ok(())
    }
}

/// Matched initialization: `W₀` has rows `1..K-1` zero and its last row
/// solves `w_K · φ = 1` across the given feature vectors (least squares
/// when the system is not square), so every prediction starts as the
/// proper CDF `(0, …, 0, 1)` — the Dirac on `z_K` — and `θ₀` is set to
/// the expectation map of `W₀`. Both learners then predict identical
/// values at every feature vector.
pub fn matched_init(
    support: Support,
    features: &[Vec<f64>],
) -> Result<(LinearZ, LinearQ), LinearError> {
    let dim = features
        .first()
        .ok_or(LinearError::SingularSystem)?
        .len();
    let mut z = LinearZ::zeros(support, dim)?;
    let last_row = solve_least_squares(features, dim)?;
    let k = z.num_atoms();
    z.row_mut(k - 1).copy_from_slice(&last_row);
    let theta = z.expectation_map();
    Ok((z, LinearQ::from_theta(theta)))
}

/// The uncorrected initialization: all-zero weights on both sides.
/// Expectations agree (0 = 0) but the predicted distributions carry
/// total mass 0, not 1, so the mass assumption behind the linear
/// equivalence does not hold.
pub fn zero_init(support: Support, dim: usize) -> Result<(LinearZ, LinearQ), LinearError> {
    Ok((LinearZ::zeros(support, dim)?, LinearQ::zeros(dim)))
}

/// Minimum-residual solution of `features · w = 1` via the normal
/// equations with partial-pivot elimination. The systems here are tiny
/// (d ≤ a few dozen).
#[allow(clippy::needless_range_loop)]
fn solve_least_squares(features: &[Vec<f64>], dim: usize) -> Result<Vec<f64>, LinearError> {
    for f in features {
        if f.len() != dim {
            return Err(LinearError::DimMismatch {
                expected: dim,
                got: f.len(),
            });
        }
    }
    // A = ΦᵀΦ, b = Φᵀ1.
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for f in features {
        for i in 0..dim {
            for j in 0..dim {
                a[i][j] += f[i] * f[j];
            }
            a[i][dim] += f[i];
        }
    }
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(LinearError::SingularSystem);
        }
        a.swap(col, pivot);
        let diag = a[col][col];
        for k in col..=dim {
            a[col][k] /= diag;
        }
        for row in 0..dim {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col];
                for k in col..=dim {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Ok((0..dim).map(|i| a[i][dim]).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
