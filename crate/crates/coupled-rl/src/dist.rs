//! Categorical distributions on fixed atom grids: expectation, Cramér
//! distance, the Cramér projection, CDF/PMF views, and the two update
//! directions (CDF-based and PMF-based) used by the distributional
//! learners.
//!
//! Masses are plain `f64` vectors and may be signed: unconstrained
//! linear or gradient parameterizations produce negative components, and
//! the update rules in [`crate::tabular`] are expected to operate on
//! them unchanged. Σmass = 1 is enforced only when constructing proper
//! distributions.

use thiserror::Error;

/// Absolute tolerance for Σmass = 1 checks at construction.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Atoms closer than this are merged by summing their masses.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("support needs at least two atoms, got {0}")]
    TooFewAtoms(usize),
    #[error("atoms must be strictly ascending at index {0}")]
    AtomsNotAscending(usize),
    #[error("atoms and mass have different lengths ({atoms} vs {mass})")]
    LengthMismatch { atoms: usize, mass: usize },
    #[error("mass sums to {0}, expected 1")]
    MassNotNormalized(f64),
    #[error("negative mass {mass} at index {index}")]
    NegativeMass { index: usize, mass: f64 },
    #[error("operands live on different supports")]
    SupportMismatch,
    #[error("operation requires an evenly spaced support")]
    NotEvenlySpaced,
    #[error("non-finite value encountered")]
    NonFinite,
}

/// Ordered grid of return atoms `z_1 < z_2 < … < z_K`.
///
/// When the grid is c-spaced the constant is kept alongside the atoms so
/// spacing-dependent operations ([`grad_cramer_cdf`], [`grad_cramer_pmf`])
/// can use it exactly rather than re-deriving it from differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    atoms: Vec<f64>,
    spacing: Option<f64>,
}

impl Support {
    /// Builds a support from explicit atoms. Spacing is recorded when
    /// every atom equals `atoms[0] + i * c` exactly in `f64` arithmetic.
    pub fn new(atoms: Vec<f64>) -> Result<Self, DistError> {
        if atoms.len() < 2 {
            return Err(DistError::TooFewAtoms(atoms.len()));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(DistError::NonFinite);
        }
        for i in 1..atoms.len() {
            if atoms[i] <= atoms[i - 1] {
                return Err(DistError::AtomsNotAscending(i));
            }
        }
        let c = atoms[1] - atoms[0];
        let spacing = atoms
            .iter()
            .enumerate()
            .all(|(i, &z)| z == atoms[0] + i as f64 * c)
            .then_some(c);
        Ok(Support { atoms, spacing })
    }

    /// Grid `start + i * spacing` for `i` in `0..len`.
    pub fn evenly_spaced(start: f64, spacing: f64, len: usize) -> Result<Self, DistError> {
        if len < 2 {
            return Err(DistError::TooFewAtoms(len));
        }
        if !spacing.is_finite() || spacing <= 0.0 || !start.is_finite() {
            return Err(DistError::NonFinite);
        }
        let atoms = (0..len).map(|i| start + i as f64 * spacing).collect();
        Ok(Support {
            atoms,
            spacing: Some(spacing),
        })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// The constant atom gap, if the grid is evenly spaced.
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn min(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max(&self) -> f64 {
        *self.atoms.last().unwrap()
    }

    /// True when `[-radius, radius] ⊆ [z_1, z_K]`, i.e. the grid brackets
    /// every attainable return of magnitude up to `radius`.
    pub fn brackets(&self, radius: f64) -> bool {
        self.min() <= -radius && self.max() >= radius
    }
}

/// Distribution on a fixed [`Support`]: one (possibly signed) mass per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    support: Support,
    mass: Vec<f64>,
}

impl Categorical {
    /// Masses may be negative but must sum to 1 within [`MASS_TOLERANCE`].
    pub fn new(support: Support, mass: Vec<f64>) -> Result<Self, DistError> {
        let d = Self::new_unnormalized(support, mass)?;
        let total = d.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistError::MassNotNormalized(total));
        }
        Ok(d)
    }

    /// Skips the Σmass = 1 check. Update rules that deliberately leak
    /// mass (the PMF-gradient counterexample) construct through here.
    pub fn new_unnormalized(support: Support, mass: Vec<f64>) -> Result<Self, DistError> {
        if mass.len() != support.num_atoms() {
            return Err(DistError::LengthMismatch {
                atoms: support.num_atoms(),
                mass: mass.len(),
            });
        }
        if mass.iter().any(|m| !m.is_finite()) {
            return Err(DistError::NonFinite);
        }
        Ok(Categorical { support, mass })
    }

    /// Unit mass on the atom at `index`.
    pub fn dirac(support: Support, index: usize) -> Result<Self, DistError> {
        if index >= support.num_atoms() {
            return Err(DistError::LengthMismatch {
                atoms: support.num_atoms(),
                mass: index,
            });
        }
        let mut mass = vec![0.0; support.num_atoms()];
        mass[index] = 1.0;
        Ok(Categorical { support, mass })
    }

    /// Reconstructs masses from CDF values at the atoms.
    pub fn from_cdf(support: Support, cdf: &[f64]) -> Result<Self, DistError> {
        Self::new_unnormalized(support, cdf_to_pmf(cdf))
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// CDF view: `F(z_i) = Σ_{j≤i} mass_j`.
    pub fn cdf(&self) -> Vec<f64> {
        pmf_to_cdf(&self.mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn expectation(&self) -> f64 {
        expectation_of(&self.support.atoms, &self.mass)
    }

    /// Nonnegative masses summing to 1 within [`MASS_TOLERANCE`].
    pub fn is_proper(&self) -> bool {
        self.mass.iter().all(|&m| m >= -MASS_TOLERANCE)
            && (self.total_mass() - 1.0).abs() <= MASS_TOLERANCE
    }
}

/// Finite discrete distribution on arbitrary (grid-free) locations.
/// Holds unprojected targets `r + γZ` before they are pushed back onto a
/// grid by [`cramer_project`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDiscrete {
    locations: Vec<f64>,
    mass: Vec<f64>,
}

impl GeneralDiscrete {
    /// Sorts by location, merges atoms within [`MERGE_TOLERANCE`] by
    /// summing their masses, and validates nonnegativity and Σmass = 1.
    pub fn new(locations: Vec<f64>, mass: Vec<f64>) -> Result<Self, DistError> {
        if locations.len() != mass.len() {
            return Err(DistError::LengthMismatch {
                atoms: locations.len(),
                mass: mass.len(),
            });
        }
        Self::from_weighted_atoms(locations.into_iter().zip(mass))
    }

    /// Same as [`GeneralDiscrete::new`] from `(location, mass)` pairs.
    pub fn from_weighted_atoms(
        atoms: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self, DistError> {
        let merged = merge_weighted_atoms(atoms)?;
        let (locations, mass): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        if locations.is_empty() {
            return Err(DistError::TooFewAtoms(0));
        }
        for (index, &m) in mass.iter().enumerate() {
            if m < -MASS_TOLERANCE {
                return Err(DistError::NegativeMass { index, mass: m });
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistError::MassNotNormalized(total));
        }
        Ok(GeneralDiscrete { locations, mass })
    }

    /// Unit mass at a single point.
    pub fn dirac(location: f64) -> Self {
        GeneralDiscrete {
            locations: vec![location],
            mass: vec![1.0],
        }
    }

    /// Rebuilds an entry from atoms already sorted, merged, and known
    /// proper by construction (mixtures of proper inputs). Skips the
    /// long-vector mass-sum revalidation.
    pub(crate) fn from_merged_unchecked(atoms: Vec<(f64, f64)>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
        let (locations, mass) = atoms.into_iter().unzip();
        GeneralDiscrete { locations, mass }
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn num_atoms(&self) -> usize {
        self.locations.len()
    }

    pub fn expectation(&self) -> f64 {
        expectation_of(&self.locations, &self.mass)
    }

    /// Law of `shift + scale·X` for `scale ≥ 0`. With `scale = 0` every
    /// atom collapses onto `shift`.
    pub fn shift_scale(&self, shift: f64, scale: f64) -> Self {
        assert!(scale >= 0.0, "scale must be nonnegative");
        if scale == 0.0 {
            return GeneralDiscrete::dirac(shift);
        }
        GeneralDiscrete {
            locations: self.locations.iter().map(|z| shift + scale * z).collect(),
            mass: self.mass.clone(),
        }
    }

    /// Convex mixture Σ wᵢ·dᵢ. Weights must be nonnegative and sum to 1.
    pub fn mix(components: &[(f64, &GeneralDiscrete)]) -> Result<Self, DistError> {
        Self::from_weighted_atoms(components.iter().flat_map(|(w, d)| {
            d.locations
                .iter()
                .zip(&d.mass)
                .map(move |(&z, &m)| (z, w * m))
        }))
    }
}

/// Sort-and-merge shared by [`GeneralDiscrete`] and the table updates in
/// [`crate::tabular`]. Zero-mass atoms are dropped.
pub(crate) fn merge_weighted_atoms(
    atoms: impl IntoIterator<Item = (f64, f64)>,
) -> Result<Vec<(f64, f64)>, DistError> {
    let mut pairs: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, m)| m != 0.0).collect();
    if pairs.iter().any(|(z, m)| !z.is_finite() || !m.is_finite()) {
        return Err(DistError::NonFinite);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (z, m) in pairs {
        match merged.last_mut() {
            Some(last) if (z - last.0).abs() <= MERGE_TOLERANCE => last.1 += m,
            _ => merged.push((z, m)),
        }
    }
    Ok(merged)
}

fn expectation_of(locations: &[f64], mass: &[f64]) -> f64 {
    locations.iter().zip(mass).map(|(z, m)| z * m).sum()
}

/// Prefix sum: PMF to CDF.
pub fn pmf_to_cdf(mass: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    mass.iter()
        .map(|m| {
            acc += m;
            acc
        })
        .collect()
}

/// Adjacent differences with first-element passthrough: CDF to PMF.
/// Exact inverse of [`pmf_to_cdf`] up to rounding.
pub fn cdf_to_pmf(cdf: &[f64]) -> Vec<f64> {
    cdf.iter()
        .enumerate()
        .map(|(i, &f)| if i == 0 { f } else { f - cdf[i - 1] })
        .collect()
}

/// Cramér distance between two categoricals on one support:
/// `sqrt( Σ_{i<K} (z_{i+1} − z_i) (F_p(z_i) − F_q(z_i))² )`.
pub fn cramer_distance(p: &Categorical, q: &Categorical) -> Result<f64, DistError> {
    if p.support != q.support {
        return Err(DistError::SupportMismatch);
    }
    let (fp, fq) = (p.cdf(), q.cdf());
    let z = p.support.atoms();
    let sum: f64 = (0..z.len() - 1)
        .map(|i| (z[i + 1] - z[i]) * (fp[i] - fq[i]).powi(2))
        .sum();
    Ok(sum.sqrt())
}

/// Squared Cramér distance; the loss minimized by the Cramér learners.
pub fn cramer_distance_sq(p: &Categorical, q: &Categorical) -> Result<f64, DistError> {
    cramer_distance(p, q).map(|d| d * d)
}

/// Splits one weighted point onto the grid: clamp below `z_1`, clamp
/// above `z_K`, linear split between the two neighbouring atoms
/// otherwise. Works for signed weights; accumulates into `out`.
pub fn project_atom_onto(support: &Support, location: f64, weight: f64, out: &mut [f64]) {
    let z = support.atoms();
    let k = z.len();
    if location <= z[0] {
        out[0] += weight;
    } else if location > z[k - 1] {
        out[k - 1] += weight;
    } else {
        // First atom index with z[i] >= location; location > z[0] here.
        let hi = z.partition_point(|&a| a < location);
        let lo = hi - 1;
        let gap = z[hi] - z[lo];
        out[lo] += weight * (z[hi] - location) / gap;
        out[hi] += weight * (location - z[lo]) / gap;
    }
}

/// Projects a list of (possibly signed) weighted points onto a grid and
/// returns the resulting mass vector. Linear in the input, preserves
/// total mass, and preserves expectation for points inside `[z_1, z_K]`.
pub fn project_weighted_atoms(
    atoms: impl IntoIterator<Item = (f64, f64)>,
    support: &Support,
) -> Vec<f64> {
    let mut out = vec![0.0; support.num_atoms()];
    for (z, m) in atoms {
        project_atom_onto(support, z, m, &mut out);
    }
    out
}

/// Cramér projection `Π_C` of a discrete distribution onto a grid.
pub fn cramer_project(d: &GeneralDiscrete, target: &Support) -> Categorical {
    let mass = project_weighted_atoms(
        d.locations.iter().copied().zip(d.mass.iter().copied()),
        target,
    );
    Categorical {
        support: target.clone(),
        mass,
    }
}

fn shared_spacing(p: &Categorical, target: &Categorical) -> Result<f64, DistError> {
    if p.support != target.support {
        return Err(DistError::SupportMismatch);
    }
    p.support.spacing().ok_or(DistError::NotEvenlySpaced)
}

/// CDF update direction `v_i = 2c (F_target(z_i) − F_p(z_i))` on a
/// c-spaced support.
///
/// Applied additively (`F ← F + α'·v`) this moves the CDF toward the
/// target; with `α' = α/(2c)` it is exactly the mixture update
/// `(1−α)F + αF_target`. The calculus gradient of the squared Cramér
/// distance with respect to `F_p` is the negation of `v`.
pub fn grad_cramer_cdf(p: &Categorical, target: &Categorical) -> Result<Vec<f64>, DistError> {
    let c = shared_spacing(p, target)?;
    let (fp, ft) = (p.cdf(), target.cdf());
    Ok(fp
        .iter()
        .zip(&ft)
        .map(|(f, t)| 2.0 * c * (t - f))
        .collect())
}

/// PMF update direction on a c-spaced support: component `i` is
/// `Σ_{i ≤ j ≤ K−1} 2c (F_target(z_j) − F_p(z_j))`.
///
/// Applied additively (`P ← P + α·v`) this is the PMF-side analogue of
/// [`grad_cramer_cdf`]. Unlike the CDF direction it does not sum to
/// zero, so it shifts both total mass and expectation: on
/// `z = (0,1,2)` with CDFs `(1/3,2/3,1)` and `(1/2,1/2,1)` the updated
/// distribution has expectation `1 − α/3`.
pub fn grad_cramer_pmf(p: &Categorical, target: &Categorical) -> Result<Vec<f64>, DistError> {
    let c = shared_spacing(p, target)?;
    let (fp, ft) = (p.cdf(), target.cdf());
    let k = fp.len();
    // Suffix sums over components 1..=K-1 (the last CDF value carries no
    // spacing weight in the finite-sum distance).
    let mut out = vec![0.0; k];
    let mut acc = 0.0;
    for i in (0..k - 1).rev() {
        acc += 2.0 * c * (ft[i] - fp[i]);
        out[i] = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z012() -> Support {
        Support::new(vec![0.0, 1.0, 2.0]).unwrap()
    }

    fn cat(support: Support, mass: &[f64]) -> Categorical {
        Categorical::new(support, mass.to_vec()).unwrap()
    }

    #[test]
    fn support_rejects_bad_atoms() {
        assert_eq!(
            Support::new(vec![1.0]).unwrap_err(),
            DistError::TooFewAtoms(1)
        );
        assert_eq!(
            Support::new(vec![0.0, 0.0]).unwrap_err(),
            DistError::AtomsNotAscending(1)
        );
        assert_eq!(
            Support::new(vec![0.0, -1.0]).unwrap_err(),
            DistError::AtomsNotAscending(1)
        );
    }

    #[test]
    fn support_detects_exact_spacing() {
        assert_eq!(z012().spacing(), Some(1.0));
        let uneven = Support::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(uneven.spacing(), None);
        let grid = Support::evenly_spaced(-4.0, 0.25, 33).unwrap();
        assert_eq!(grid.spacing(), Some(0.25));
        assert_eq!(grid.num_atoms(), 33);
        assert_eq!(grid.max(), 4.0);
    }

    #[test]
    fn categorical_checks_mass_sum() {
        let err = Categorical::new(z012(), vec![0.5, 0.2, 0.2]).unwrap_err();
        assert!(matches!(err, DistError::MassNotNormalized(_)));
        // Signed masses are fine as long as the sum is 1.
        let signed = cat(z012(), &[1.2, -0.5, 0.3]);
        assert!(!signed.is_proper());
    }

    #[test]
    fn dirac_expectation() {
        let d = Categorical::dirac(z012(), 1).unwrap();
        assert_eq!(d.expectation(), 1.0);
    }

    #[test]
    fn uniform_expectation_is_one() {
        // CDF (1/3, 2/3, 1) on z = (0,1,2).
        let d = cat(z012(), &[1.0 / 3.0; 3]);
        assert!((d.expectation() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_matches_weighted_sum_oracle() {
        // Independent oracle: accumulate the weighted sum in reverse order.
        let locations = [-1.5, -0.25, 0.5, 1.25, 3.0];
        let mass = [0.1, 0.3, 0.2, 0.25, 0.15];
        let d = GeneralDiscrete::new(locations.to_vec(), mass.to_vec()).unwrap();
        let oracle: f64 = locations.iter().zip(&mass).rev().map(|(z, m)| z * m).sum();
        assert!((d.expectation() - oracle).abs() < 1e-12);
    }

    #[test]
    fn cramer_distance_zero_on_equal_args() {
        let p = cat(z012(), &[0.2, 0.5, 0.3]);
        assert_eq!(cramer_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn cramer_distance_worked_value() {
        // F_p = (1/3, 2/3, 1), F_q = (1/2, 1/2, 1):
        // (1/3-1/2)^2 + (2/3-1/2)^2 = 1/36 + 1/36 = 1/18.
        let p = cat(z012(), &[1.0 / 3.0; 3]);
        let q = cat(z012(), &[0.5, 0.0, 0.5]);
        let d = cramer_distance(&p, &q).unwrap();
        assert!((d - (1.0f64 / 18.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cramer_distance_uniform_vs_dirac() {
        let z01 = Support::new(vec![0.0, 1.0]).unwrap();
        let uniform = cat(z01.clone(), &[0.5, 0.5]);
        let dirac = Categorical::dirac(z01, 1).unwrap();
        // Single term: (1/2 - 0)^2 weighted by gap 1.
        let d = cramer_distance(&uniform, &dirac).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cramer_distance_support_mismatch() {
        let p = cat(z012(), &[1.0 / 3.0; 3]);
        let other = Support::new(vec![0.0, 1.0, 3.0]).unwrap();
        let q = cat(other, &[1.0 / 3.0; 3]);
        assert_eq!(
            cramer_distance(&p, &q).unwrap_err(),
            DistError::SupportMismatch
        );
    }

    #[test]
    fn projection_of_grid_atom_is_identity() {
        let d = GeneralDiscrete::dirac(1.0);
        let p = cramer_project(&d, &z012());
        assert_eq!(p.mass(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn projection_splits_midpoint_evenly() {
        let z01 = Support::new(vec![0.0, 1.0]).unwrap();
        let p = cramer_project(&GeneralDiscrete::dirac(0.5), &z01);
        assert_eq!(p.mass(), &[0.5, 0.5]);
    }

    #[test]
    fn projection_clamps_below_support() {
        let z = Support::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let p = cramer_project(&GeneralDiscrete::dirac(-3.0), &z);
        assert_eq!(p.mass(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn projection_preserves_in_bracket_expectation() {
        let d = GeneralDiscrete::new(vec![0.3, 1.7], vec![0.5, 0.5]).unwrap();
        let p = cramer_project(&d, &z012());
        assert!((p.expectation() - 1.0).abs() < 1e-15);
        assert!((d.expectation() - 1.0).abs() < 1e-15);
        assert!(p.is_proper());
    }

    #[test]
    fn cdf_direction_is_zero_at_fixed_point() {
        let p = cat(z012(), &[0.25, 0.5, 0.25]);
        let v = grad_cramer_cdf(&p, &p).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cdf_direction_worked_value() {
        let p = cat(z012(), &[1.0 / 3.0; 3]);
        let t = cat(z012(), &[0.5, 0.0, 0.5]);
        let v = grad_cramer_cdf(&p, &t).unwrap();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((v[1] + 1.0 / 3.0).abs() < 1e-12);
        assert!(v[2].abs() < 1e-12);
    }

    #[test]
    fn cdf_direction_requires_even_spacing() {
        let s = Support::new(vec![0.0, 1.0, 3.0]).unwrap();
        let p = Categorical::new(s.clone(), vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(
            grad_cramer_cdf(&p, &p).unwrap_err(),
            DistError::NotEvenlySpaced
        );
    }

    #[test]
    fn pmf_direction_matches_published_counterexample() {
        let p = cat(z012(), &[1.0 / 3.0; 3]);
        let t = cat(z012(), &[0.5, 0.0, 0.5]);
        let v = grad_cramer_pmf(&p, &t).unwrap();
        assert!(v[0].abs() < 1e-12);
        assert!((v[1] + 1.0 / 3.0).abs() < 1e-12);
        assert!(v[2].abs() < 1e-12);

        // P + α·v has expectation 1 − α/3: the PMF direction leaks mass.
        for alpha in [0.1, 0.5, 1.0] {
            let mass: Vec<f64> = p.mass().iter().zip(&v).map(|(m, g)| m + alpha * g).collect();
            let shifted = Categorical::new_unnormalized(z012(), mass).unwrap();
            assert!((shifted.expectation() - (1.0 - alpha / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_direction_zero_at_fixed_point() {
        let p = cat(z012(), &[0.1, 0.2, 0.7]);
        let v = grad_cramer_pmf(&p, &p).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pmf_cdf_conversion_round_trip() {
        let pmf = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let cdf = pmf_to_cdf(&pmf);
        assert!((cdf[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((cdf[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((cdf[2] - 1.0).abs() < 1e-15);
        let back = cdf_to_pmf(&cdf);
        for (a, b) in back.iter().zip(&pmf) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn general_discrete_merges_coincident_atoms() {
        let d = GeneralDiscrete::new(vec![1.0, 1.0 + 1e-14, 2.0], vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(d.num_atoms(), 2);
        assert!((d.mass()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shift_scale_with_zero_scale_collapses() {
        let d = GeneralDiscrete::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let s = d.shift_scale(3.0, 0.0);
        assert_eq!(s.locations(), &[3.0]);
        assert_eq!(s.mass(), &[1.0]);
    }

    #[test]
    fn mix_is_convex_combination() {
        let a = GeneralDiscrete::dirac(0.0);
        let b = GeneralDiscrete::dirac(2.0);
        let m = GeneralDiscrete::mix(&[(0.25, &a), (0.75, &b)]).unwrap();
        assert!((m.expectation() - 1.5).abs() < 1e-15);
    }
}
