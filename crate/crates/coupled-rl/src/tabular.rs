//! Tabular update rules: expected and distributional Bellman operators
//! (evaluation and optimality), their projected variants, SARSA and
//! Q-learning, and the mixture / CDF-direction / PMF-direction sampled
//! updates on categorical tables.

use thiserror::Error;

use crate::dist::{
    cdf_to_pmf, grad_cramer_cdf, grad_cramer_pmf, merge_weighted_atoms, pmf_to_cdf,
    project_weighted_atoms, Categorical, DistError, GeneralDiscrete, Support,
};
use crate::env::finite::{FiniteMdp, TabularPolicy};
use crate::env::source::{argmax, TransitionSample};

/// Atom budget per unprojected table entry. Mixture-style updates grow
/// supports roughly geometrically, so the ops error out past this
/// rather than approximate silently; project onto a fixed support to
/// stay bounded.
pub const DEFAULT_ATOM_CAP: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(
        "entry ({state},{action}) needs {atoms} atoms, over the cap {cap}; \
         project onto a fixed support to keep the representation bounded"
    )]
    SupportCapExceeded {
        state: usize,
        action: usize,
        atoms: usize,
        cap: usize,
    },
    #[error(
        "support [{min}, {max}] does not bracket the return radius {radius}; \
         projection would clamp attainable returns"
    )]
    BracketViolation { min: f64, max: f64, radius: f64 },
    #[error("table shaped for {expected} state-action pairs, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Action-selection rule for bootstrapped sample targets: SARSA follows
/// the sampled next action, Q-learning the greedy one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bootstrap {
    NextAction,
    Greedy,
}

/// Backup flavour for the model-based operators.
#[derive(Clone, Copy)]
pub enum Backup<'a> {
    Evaluation(&'a TabularPolicy),
    Optimality,
}

/// State-action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn constant(n_states: usize, n_actions: usize, value: f64) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![value; n_states * n_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn action_values(&self, state: usize) -> &[f64] {
        let base = state * self.n_actions;
        &self.values[base..base + self.n_actions]
    }

    pub fn greedy_action(&self, state: usize) -> usize {
        argmax(self.action_values(state))
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.action_values(state)
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute difference to another table.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Return-distribution table in categorical mode: every entry shares
/// one [`Support`] and stores a (possibly signed) mass vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTable {
    n_states: usize,
    n_actions: usize,
    support: Support,
    mass: Vec<Vec<f64>>,
}

impl ZTable {
    /// Every entry starts as a Dirac on the atom at `index`.
    pub fn from_dirac(
        n_states: usize,
        n_actions: usize,
        support: Support,
        index: usize,
    ) -> Result<Self, LearnError> {
        let proto = Categorical::dirac(support.clone(), index)?;
        Ok(ZTable {
            n_states,
            n_actions,
            support,
            mass: vec![proto.mass().to_vec(); n_states * n_actions],
        })
    }

    /// Entries from explicit mass vectors, row-major by (state, action).
    pub fn from_mass(
        n_states: usize,
        n_actions: usize,
        support: Support,
        mass: Vec<Vec<f64>>,
    ) -> Result<Self, LearnError> {
        if mass.len() != n_states * n_actions {
            return Err(LearnError::ShapeMismatch {
                expected: n_states * n_actions,
                got: mass.len(),
            });
        }
        for entry in &mass {
            if entry.len() != support.num_atoms() {
                return Err(LearnError::Dist(DistError::LengthMismatch {
                    atoms: support.num_atoms(),
                    mass: entry.len(),
                }));
            }
        }
        Ok(ZTable {
            n_states,
            n_actions,
            support,
            mass,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions(&self) -> usize {
        self.n_actions
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn mass_at(&self, state: usize, action: usize) -> &[f64] {
        &self.mass[state * self.n_actions + action]
    }

    fn mass_at_mut(&mut self, state: usize, action: usize) -> &mut Vec<f64> {
        &mut self.mass[state * self.n_actions + action]
    }

    pub fn dist(&self, state: usize, action: usize) -> Categorical {
        Categorical::new_unnormalized(self.support.clone(), self.mass_at(state, action).to_vec())
            .expect("table entries share the table support")
    }

    pub fn expectation(&self, state: usize, action: usize) -> f64 {
        self.support
            .atoms()
            .iter()
            .zip(self.mass_at(state, action))
            .map(|(z, m)| z * m)
            .sum()
    }

    /// Expectation of every entry, as a value table.
    pub fn expectations(&self) -> QTable {
        let mut q = QTable::zeros(self.n_states, self.n_actions);
        for x in 0..self.n_states {
            for a in 0..self.n_actions {
                q.set(x, a, self.expectation(x, a));
            }
        }
        q
    }

    /// Greedy action by expected value, ties to the lowest index.
    pub fn greedy_action(&self, state: usize) -> usize {
        let values: Vec<f64> = (0..self.n_actions)
            .map(|a| self.expectation(state, a))
            .collect();
        argmax(&values)
    }

    /// Errors unless the support brackets `radius` (see
    /// [`FiniteMdp::return_radius`]).
    pub fn check_bracket(&self, radius: f64) -> Result<(), LearnError> {
        if self.support.brackets(radius) {
            Ok(())
        } else {
            Err(LearnError::BracketViolation {
                min: self.support.min(),
                max: self.support.max(),
                radius,
            })
        }
    }
}

/// Return-distribution table in unprojected mode: per-entry discrete
/// distributions on free locations, capped at `cap` atoms per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct UnprojectedZTable {
    n_states: usize,
    n_actions: usize,
    dists: Vec<GeneralDiscrete>,
    cap: usize,
}

impl UnprojectedZTable {
    /// Every entry starts as a Dirac at `location`.
    pub fn from_dirac(n_states: usize, n_actions: usize, location: f64) -> Self {
        UnprojectedZTable {
            n_states,
            n_actions,
            dists: vec![GeneralDiscrete::dirac(location); n_states * n_actions],
            cap: DEFAULT_ATOM_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn dist(&self, state: usize, action: usize) -> &GeneralDiscrete {
        &self.dists[state * self.n_actions + action]
    }

    pub fn expectation(&self, state: usize, action: usize) -> f64 {
        self.dist(state, action).expectation()
    }

    pub fn expectations(&self) -> QTable {
        let mut q = QTable::zeros(self.n_states, self.n_actions);
        for x in 0..self.n_states {
            for a in 0..self.n_actions {
                q.set(x, a, self.expectation(x, a));
            }
        }
        q
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions(&self) -> usize {
        self.n_actions
    }

    pub fn max_atoms(&self) -> usize {
        self.dists.iter().map(|d| d.num_atoms()).max().unwrap_or(0)
    }

    fn replace_entry(
        &mut self,
        state: usize,
        action: usize,
        atoms: Vec<(f64, f64)>,
    ) -> Result<(), LearnError> {
        if atoms.len() > self.cap {
            return Err(LearnError::SupportCapExceeded {
                state,
                action,
                atoms: atoms.len(),
                cap: self.cap,
            });
        }
        self.dists[state * self.n_actions + action] =
            GeneralDiscrete::from_merged_unchecked(atoms);
        Ok(())
    }
}

/// One expected Bellman backup `T^π Q` (or `T* Q` in optimality mode).
pub fn bellman_expected(q: &QTable, mdp: &FiniteMdp, backup: Backup) -> QTable {
    let mut out = QTable::zeros(q.n_states, q.n_actions);
    for x in 0..q.n_states {
        for a in 0..q.n_actions {
            let mut value = mdp.expected_reward(x, a);
            for (x_next, &p) in mdp.transition_row(x, a).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let next_value = if mdp.is_terminal(x_next) {
                    0.0
                } else {
                    match backup {
                        Backup::Evaluation(policy) => policy
                            .probs(x_next)
                            .iter()
                            .enumerate()
                            .map(|(a_next, &pi)| pi * q.get(x_next, a_next))
                            .sum(),
                        Backup::Optimality => q.max_value(x_next),
                    }
                };
                value += mdp.gamma() * p * next_value;
            }
            out.set(x, a, value);
        }
    }
    out
}

/// Weighted next-pair list for one backup: `(x', a', weight)`.
fn successor_weights(
    mdp: &FiniteMdp,
    x: usize,
    a: usize,
    backup: Backup,
    greedy: impl Fn(usize) -> usize,
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for (x_next, &p) in mdp.transition_row(x, a).iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        match backup {
            Backup::Evaluation(policy) => {
                for (a_next, &pi) in policy.probs(x_next).iter().enumerate() {
                    if pi > 0.0 {
                        out.push((x_next, a_next, p * pi));
                    }
                }
            }
            Backup::Optimality => out.push((x_next, greedy(x_next), p)),
        }
    }
    out
}

/// One distributional Bellman backup on the unprojected table: each
/// entry becomes the exact discrete law of `R(x,a) + γ Z(X', A')`.
/// Terminal successors contribute `δ_r`. Optimality mode picks
/// `a' = argmax E[Z(x', ·)]` with ties to the lowest index.
pub fn bellman_dist(
    z: &UnprojectedZTable,
    mdp: &FiniteMdp,
    backup: Backup,
) -> Result<UnprojectedZTable, LearnError> {
    let mut out = z.clone();
    let expectations = matches!(backup, Backup::Optimality).then(|| z.expectations());
    for x in 0..z.n_states {
        for a in 0..z.n_actions {
            let succ = successor_weights(mdp, x, a, backup, |x_next| {
                argmax(expectations.as_ref().unwrap().action_values(x_next))
            });
            let reward = mdp.reward(x, a);
            let mut atoms: Vec<(f64, f64)> = Vec::new();
            for (&r, &rw) in reward.locations().iter().zip(reward.mass()) {
                for &(x_next, a_next, w) in &succ {
                    if mdp.is_terminal(x_next) || mdp.gamma() == 0.0 {
                        atoms.push((r, rw * w));
                    } else {
                        let next = z.dist(x_next, a_next);
                        for (&loc, &m) in next.locations().iter().zip(next.mass()) {
                            atoms.push((r + mdp.gamma() * loc, rw * w * m));
                        }
                    }
                }
            }
            out.replace_entry(x, a, merge_weighted_atoms(atoms)?)?;
        }
    }
    Ok(out)
}

/// Projected distributional backup: the unprojected backup of each
/// entry pushed back onto the table support. Requires the support to
/// bracket the attainable returns, which makes the projection
/// expectation-preserving.
pub fn bellman_dist_projected(
    z: &ZTable,
    mdp: &FiniteMdp,
    backup: Backup,
) -> Result<ZTable, LearnError> {
    z.check_bracket(mdp.return_radius())?;
    let mut out = z.clone();
    let expectations = matches!(backup, Backup::Optimality).then(|| z.expectations());
    for x in 0..z.n_states {
        for a in 0..z.n_actions {
            let succ = successor_weights(mdp, x, a, backup, |x_next| {
                argmax(expectations.as_ref().unwrap().action_values(x_next))
            });
            let reward = mdp.reward(x, a);
            let mut projected = vec![0.0; z.support.num_atoms()];
            for (&r, &rw) in reward.locations().iter().zip(reward.mass()) {
                for &(x_next, a_next, w) in &succ {
                    if mdp.is_terminal(x_next) || mdp.gamma() == 0.0 {
                        crate::dist::project_atom_onto(&z.support, r, rw * w, &mut projected);
                    } else {
                        let next_mass = z.mass_at(x_next, a_next);
                        for (&zj, &m) in z.support.atoms().iter().zip(next_mass) {
                            crate::dist::project_atom_onto(
                                &z.support,
                                r + mdp.gamma() * zj,
                                rw * w * m,
                                &mut projected,
                            );
                        }
                    }
                }
            }
            *out.mass_at_mut(x, a) = projected;
        }
    }
    Ok(out)
}

/// SARSA: `Q(x,a) ← (1−α) Q(x,a) + α (r + γ Q(x',a'))`, with γ masked
/// to zero on terminal transitions. Touches exactly one entry.
pub fn sarsa_update(q: &mut QTable, t: &TransitionSample, alpha: f64, gamma: f64) {
    let bootstrap = if t.next_terminal {
        0.0
    } else {
        q.get(t.next_state, t.next_action)
    };
    let target = t.reward + gamma * bootstrap;
    let old = q.get(t.state, t.action);
    q.set(t.state, t.action, old + alpha * (target - old));
}

/// Q-learning: SARSA with `max_a Q(x',a)` in place of `Q(x',a')`.
pub fn q_learning_update(q: &mut QTable, t: &TransitionSample, alpha: f64, gamma: f64) {
    let bootstrap = if t.next_terminal {
        0.0
    } else {
        q.max_value(t.next_state)
    };
    let target = t.reward + gamma * bootstrap;
    let old = q.get(t.state, t.action);
    q.set(t.state, t.action, old + alpha * (target - old));
}

fn bootstrap_action_categorical(z: &ZTable, t: &TransitionSample, bootstrap: Bootstrap) -> usize {
    match bootstrap {
        Bootstrap::NextAction => t.next_action,
        Bootstrap::Greedy => z.greedy_action(t.next_state),
    }
}

/// Projected sampled target `Π_C (r + γ Z(x',a'))` as a mass vector on
/// the table support. Terminal transitions yield `Π_C δ_r`.
pub fn projected_sample_target(
    z: &ZTable,
    t: &TransitionSample,
    gamma: f64,
    bootstrap: Bootstrap,
) -> Vec<f64> {
    if t.next_terminal || gamma == 0.0 {
        return project_weighted_atoms([(t.reward, 1.0)], &z.support);
    }
    let a_next = bootstrap_action_categorical(z, t, bootstrap);
    let next_mass = z.mass_at(t.next_state, a_next);
    project_weighted_atoms(
        z.support
            .atoms()
            .iter()
            .zip(next_mass)
            .map(|(&zj, &m)| (t.reward + gamma * zj, m)),
        &z.support,
    )
}

/// Unprojected mixture update: the touched entry becomes
/// `(1−α)·Z(x,a) + α·(r + γ Z(x',a'))` as an exact discrete mixture.
pub fn mixture_update(
    z: &mut UnprojectedZTable,
    t: &TransitionSample,
    alpha: f64,
    gamma: f64,
    bootstrap: Bootstrap,
) -> Result<(), LearnError> {
    let a_next = match bootstrap {
        Bootstrap::NextAction => t.next_action,
        Bootstrap::Greedy => {
            let values: Vec<f64> = (0..z.n_actions)
                .map(|a| z.expectation(t.next_state, a))
                .collect();
            argmax(&values)
        }
    };
    let target = if t.next_terminal || gamma == 0.0 {
        GeneralDiscrete::dirac(t.reward)
    } else {
        z.dist(t.next_state, a_next).shift_scale(t.reward, gamma)
    };
    let old = z.dist(t.state, t.action);
    let atoms = merge_weighted_atoms(
        old.locations()
            .iter()
            .zip(old.mass())
            .map(|(&loc, &m)| (loc, (1.0 - alpha) * m))
            .chain(
                target
                    .locations()
                    .iter()
                    .zip(target.mass())
                    .map(|(&loc, &m)| (loc, alpha * m)),
            ),
    )?;
    z.replace_entry(t.state, t.action, atoms)
}

/// Projected mixture update on the categorical table:
/// `(1−α)·mass + α·Π_C(r + γ Z(x',a'))` componentwise.
pub fn projected_mixture_update(
    z: &mut ZTable,
    t: &TransitionSample,
    alpha: f64,
    gamma: f64,
    bootstrap: Bootstrap,
) {
    let target = projected_sample_target(z, t, gamma, bootstrap);
    let entry = z.mass_at_mut(t.state, t.action);
    for (m, tm) in entry.iter_mut().zip(target) {
        *m = (1.0 - alpha) * *m + alpha * tm;
    }
}

/// CDF-direction update on a c-spaced support:
/// `F(x,a) ← F(x,a) + α'·2c(F_target − F)` with the projected sampled
/// target. With `α' = α/(2c)` this equals the projected mixture update
/// with step α up to rounding.
pub fn cdf_gradient_update(
    z: &mut ZTable,
    t: &TransitionSample,
    alpha_prime: f64,
    gamma: f64,
    bootstrap: Bootstrap,
) -> Result<(), LearnError> {
    let c = z
        .support
        .spacing()
        .ok_or(LearnError::Dist(DistError::NotEvenlySpaced))?;
    let target_mass = projected_sample_target(z, t, gamma, bootstrap);
    let target_cdf = pmf_to_cdf(&target_mass);
    let entry = z.mass_at_mut(t.state, t.action);
    let mut cdf = pmf_to_cdf(entry);
    for (f, ft) in cdf.iter_mut().zip(&target_cdf) {
        *f += alpha_prime * 2.0 * c * (ft - *f);
    }
    *entry = cdf_to_pmf(&cdf);
    Ok(())
}

/// PMF-direction update on a c-spaced support:
/// `P(x,a) ← P(x,a) + α·v` where `v` is the PMF direction toward the
/// projected sampled target. Not expectation-preserving: this is the
/// update that breaks the coupling.
pub fn pmf_gradient_update(
    z: &mut ZTable,
    t: &TransitionSample,
    alpha: f64,
    gamma: f64,
    bootstrap: Bootstrap,
) -> Result<(), LearnError> {
    let target_mass = projected_sample_target(z, t, gamma, bootstrap);
    let current = z.dist(t.state, t.action);
    let target = Categorical::new_unnormalized(z.support.clone(), target_mass)?;
    let direction = grad_cramer_pmf(&current, &target)?;
    let entry = z.mass_at_mut(t.state, t.action);
    for (m, g) in entry.iter_mut().zip(direction) {
        *m += alpha * g;
    }
    Ok(())
}

/// Direction form of [`cdf_gradient_update`] for callers that want the
/// raw vector (the linear and network learners chain it through their
/// heads).
pub fn cdf_direction(
    current: &Categorical,
    target: &Categorical,
) -> Result<Vec<f64>, DistError> {
    grad_cramer_cdf(current, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::finite::RandomMdpParams;
    use crate::env::source::{sample_transition, SampleSource};

    /// Independent fixed-point oracle: solve (I − M) q = r directly by
    /// Gaussian elimination in state-action space, where
    /// M[(x,a),(x',a')] = γ P(x'|x,a) π(a'|x').
    #[allow(clippy::needless_range_loop)]
    fn q_pi_by_linear_solve(mdp: &FiniteMdp, policy: &TabularPolicy) -> Vec<f64> {
        let n = mdp.num_states() * mdp.num_actions();
        let na = mdp.num_actions();
        let mut a = vec![vec![0.0; n + 1]; n];
        for x in 0..mdp.num_states() {
            for act in 0..na {
                let row = x * na + act;
                a[row][row] += 1.0;
                for (x_next, &p) in mdp.transition_row(x, act).iter().enumerate() {
                    if mdp.is_terminal(x_next) {
                        continue;
                    }
                    for (a_next, &pi) in policy.probs(x_next).iter().enumerate() {
                        a[row][x_next * na + a_next] -= mdp.gamma() * p * pi;
                    }
                }
                a[row][n] = mdp.expected_reward(x, act);
            }
        }
        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, pivot);
            let diag = a[col][col];
            for k in col..=n {
                a[col][k] /= diag;
            }
            for row in 0..n {
                if row != col && a[row][col] != 0.0 {
                    let factor = a[row][col];
                    for k in col..=n {
                        a[row][k] -= factor * a[col][k];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n]).collect()
    }

    fn random_mdp(seed: u64) -> FiniteMdp {
        FiniteMdp::random(&RandomMdpParams {
            n_states: 4,
            n_actions: 2,
            reward_atoms: 3,
            gamma: 0.9,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn zero_discount_backup_returns_expected_rewards() {
        let mdp = FiniteMdp::random(&RandomMdpParams {
            gamma: 0.0,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let policy = TabularPolicy::uniform(4, 2);
        let q = bellman_expected(&QTable::zeros(4, 2), &mdp, Backup::Evaluation(&policy));
        for x in 0..4 {
            for a in 0..2 {
                assert_eq!(q.get(x, a), mdp.expected_reward(x, a));
            }
        }
    }

    #[test]
    fn repeated_backup_converges_to_linear_solve() {
        let mdp = random_mdp(17);
        let policy = TabularPolicy::random(4, 2, 99);
        let mut q = QTable::zeros(4, 2);
        for _ in 0..400 {
            q = bellman_expected(&q, &mdp, Backup::Evaluation(&policy));
        }
        let oracle = q_pi_by_linear_solve(&mdp, &policy);
        for x in 0..4 {
            for a in 0..2 {
                assert!(
                    (q.get(x, a) - oracle[x * 2 + a]).abs() < 1e-8,
                    "({x},{a}): {} vs {}",
                    q.get(x, a),
                    oracle[x * 2 + a]
                );
            }
        }
    }

    #[test]
    fn chain3_optimal_policy_walks_to_the_paying_ends() {
        let mdp = FiniteMdp::chain3();
        let mut q = QTable::zeros(3, 2);
        for _ in 0..600 {
            q = bellman_expected(&q, &mdp, Backup::Optimality);
        }
        assert_eq!(q.greedy_action(0), 0, "left in the leftmost state");
        assert_eq!(q.greedy_action(2), 1, "right in the rightmost state");
        // Q*(0, left) = 1/(1-γ) = 10.
        assert!((q.get(0, 0) - 10.0).abs() < 1e-6);
    }

    #[test]
    fn dist_backup_with_zero_discount_is_the_reward_law() {
        let mdp = FiniteMdp::random(&RandomMdpParams {
            gamma: 0.0,
            seed: 8,
            ..Default::default()
        })
        .unwrap();
        let policy = TabularPolicy::uniform(4, 2);
        let z = UnprojectedZTable::from_dirac(4, 2, 0.0);
        let next = bellman_dist(&z, &mdp, Backup::Evaluation(&policy)).unwrap();
        for x in 0..4 {
            for a in 0..2 {
                assert!(
                    (next.expectation(x, a) - mdp.expected_reward(x, a)).abs() < 1e-14
                );
            }
        }
    }

    #[test]
    fn deterministic_chain_backup_is_a_dirac() {
        let mdp = FiniteMdp::chain3();
        let policy = TabularPolicy::deterministic(&[0, 0, 0], 2);
        let z = UnprojectedZTable::from_dirac(3, 2, 0.0);
        let next = bellman_dist(&z, &mdp, Backup::Evaluation(&policy)).unwrap();
        for x in 0..3 {
            for a in 0..2 {
                assert_eq!(next.dist(x, a).num_atoms(), 1);
            }
        }
        // One backup of Z≡δ_0: the entry (0, left) is δ_1.
        assert_eq!(next.dist(0, 0).locations(), &[1.0]);
    }

    #[test]
    fn dist_backup_commutes_with_expectation() {
        for seed in 0..5 {
            let mdp = random_mdp(seed);
            let policy = TabularPolicy::random(4, 2, seed + 100);
            let z = UnprojectedZTable::from_dirac(4, 2, 0.25);
            let q = z.expectations();
            let z_next = bellman_dist(&z, &mdp, Backup::Evaluation(&policy)).unwrap();
            let q_next = bellman_expected(&q, &mdp, Backup::Evaluation(&policy));
            assert!(z_next.expectations().max_abs_diff(&q_next) < 1e-12);
        }
    }

    #[test]
    fn zero_discount_on_grid_projection_is_identity() {
        // γ = 0 with rewards sitting on atoms: the projected backup is
        // exactly the reward law, no splitting.
        let support = Support::evenly_spaced(-2.0, 1.0, 5).unwrap();
        let transition = vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]];
        let rewards = vec![
            GeneralDiscrete::new(vec![-1.0, 1.0], vec![0.25, 0.75]).unwrap(),
            GeneralDiscrete::dirac(2.0),
            GeneralDiscrete::dirac(0.0),
            GeneralDiscrete::new(vec![-2.0, 0.0], vec![0.5, 0.5]).unwrap(),
        ];
        let mdp =
            FiniteMdp::new(2, 2, transition, rewards, 0.0, vec![false, false]).unwrap();
        let policy = TabularPolicy::uniform(2, 2);
        let z = ZTable::from_dirac(2, 2, support, 2).unwrap();
        let next = bellman_dist_projected(&z, &mdp, Backup::Evaluation(&policy)).unwrap();
        assert_eq!(next.mass_at(0, 0), &[0.0, 0.25, 0.0, 0.75, 0.0]);
        assert_eq!(next.mass_at(0, 1), &[0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(next.mass_at(1, 1), &[0.5, 0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn projected_backup_rejects_narrow_supports() {
        let mdp = random_mdp(2);
        // Radius is 1/(1-0.9) = 10; this support stops at 1.
        let support = Support::evenly_spaced(-1.0, 0.125, 17).unwrap();
        let z = ZTable::from_dirac(4, 2, support, 8).unwrap();
        assert!(matches!(
            bellman_dist_projected(&z, &mdp, Backup::Optimality),
            Err(LearnError::BracketViolation { .. })
        ));
    }

    #[test]
    fn projected_backup_tracks_expected_backup() {
        let mdp = random_mdp(31);
        let policy = TabularPolicy::random(4, 2, 7);
        let support = Support::evenly_spaced(-10.0, 0.5, 41).unwrap();
        let mut z = ZTable::from_dirac(4, 2, support, 20).unwrap();
        let mut q = z.expectations();
        for _ in 0..200 {
            z = bellman_dist_projected(&z, &mdp, Backup::Evaluation(&policy)).unwrap();
            q = bellman_expected(&q, &mdp, Backup::Evaluation(&policy));
        }
        assert!(z.expectations().max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn support_cap_is_enforced() {
        let mdp = random_mdp(12);
        let policy = TabularPolicy::uniform(4, 2);
        let mut z = UnprojectedZTable::from_dirac(4, 2, 0.0).with_cap(500);
        let mut hit_cap = false;
        for _ in 0..10 {
            match bellman_dist(&z, &mdp, Backup::Evaluation(&policy)) {
                Ok(next) => z = next,
                Err(LearnError::SupportCapExceeded { cap, .. }) => {
                    assert_eq!(cap, 500);
                    hit_cap = true;
                    break;
                }
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert!(hit_cap, "stochastic unprojected backups must outgrow the cap");
    }

    #[test]
    fn sarsa_hand_values() {
        let t = TransitionSample {
            state: 0,
            action: 1,
            reward: 2.0,
            next_state: 1,
            next_action: 0,
            next_terminal: false,
        };
        let mut q = QTable::zeros(2, 2);
        sarsa_update(&mut q, &t, 0.0, 0.9);
        assert_eq!(q.values(), &[0.0; 4]);

        sarsa_update(&mut q, &t, 1.0, 0.0);
        assert_eq!(q.get(0, 1), 2.0);

        let mut q = QTable::zeros(2, 2);
        sarsa_update(&mut q, &t, 0.5, 0.9);
        assert_eq!(q.get(0, 1), 1.0);
    }

    #[test]
    fn updates_touch_exactly_one_entry() {
        let t = TransitionSample {
            state: 1,
            action: 0,
            reward: 0.5,
            next_state: 0,
            next_action: 1,
            next_terminal: false,
        };
        let support = Support::evenly_spaced(-2.0, 0.5, 9).unwrap();
        let mut z = ZTable::from_dirac(2, 2, support, 4).unwrap();
        let before = z.clone();
        projected_mixture_update(&mut z, &t, 0.3, 0.9, Bootstrap::NextAction);
        for x in 0..2 {
            for a in 0..2 {
                if (x, a) == (1, 0) {
                    assert_ne!(z.mass_at(x, a), before.mass_at(x, a));
                } else {
                    assert_eq!(z.mass_at(x, a), before.mass_at(x, a));
                }
            }
        }
    }

    #[test]
    fn mixture_alpha_one_zero_discount_is_dirac_at_reward() {
        let t = TransitionSample {
            state: 0,
            action: 0,
            reward: 1.5,
            next_state: 1,
            next_action: 1,
            next_terminal: false,
        };
        let mut z = UnprojectedZTable::from_dirac(2, 2, 0.0);
        mixture_update(&mut z, &t, 1.0, 0.0, Bootstrap::NextAction).unwrap();
        assert_eq!(z.dist(0, 0).locations(), &[1.5]);
        assert_eq!(z.dist(0, 0).mass(), &[1.0]);

        let support = Support::evenly_spaced(0.0, 1.0, 3).unwrap();
        let mut zc = ZTable::from_dirac(2, 2, support, 0).unwrap();
        projected_mixture_update(&mut zc, &t, 1.0, 0.0, Bootstrap::NextAction);
        assert_eq!(zc.mass_at(0, 0), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn mixture_of_two_diracs_is_half_half() {
        let t = TransitionSample {
            state: 0,
            action: 0,
            reward: 1.0,
            next_state: 1,
            next_action: 0,
            next_terminal: true,
        };
        let mut z = UnprojectedZTable::from_dirac(2, 1, 0.0);
        mixture_update(&mut z, &t, 0.5, 0.9, Bootstrap::NextAction).unwrap();
        assert_eq!(z.dist(0, 0).locations(), &[0.0, 1.0]);
        assert_eq!(z.dist(0, 0).mass(), &[0.5, 0.5]);
    }

    #[test]
    fn mixture_expectation_matches_sarsa_on_coupled_stream() {
        let mdp = random_mdp(5);
        let policy = TabularPolicy::random(4, 2, 55);
        let mut source = SampleSource::new(40);
        let mut q = QTable::zeros(4, 2);
        let mut z = UnprojectedZTable::from_dirac(4, 2, 0.0);
        let (mut x, mut a) = (0, 0);
        for _ in 0..60 {
            let t = sample_transition(&mdp, &policy, x, a, &mut source).unwrap();
            sarsa_update(&mut q, &t, 0.25, mdp.gamma());
            mixture_update(&mut z, &t, 0.25, mdp.gamma(), Bootstrap::NextAction).unwrap();
            assert!(z.expectations().max_abs_diff(&q) < 1e-12);
            (x, a) = (t.next_state, t.next_action);
        }
    }

    #[test]
    fn cdf_gradient_fixed_point_is_unchanged() {
        // Self-loop whose target equals the stored distribution.
        let support = Support::evenly_spaced(0.0, 1.0, 3).unwrap();
        let mut z = ZTable::from_dirac(1, 1, support, 0).unwrap();
        let t = TransitionSample {
            state: 0,
            action: 0,
            reward: 0.0,
            next_state: 0,
            next_action: 0,
            next_terminal: false,
        };
        let before = z.mass_at(0, 0).to_vec();
        cdf_gradient_update(&mut z, &t, 0.25, 0.9, Bootstrap::NextAction).unwrap();
        assert_eq!(z.mass_at(0, 0), &before[..]);
    }

    #[test]
    fn cdf_gradient_with_matched_step_equals_projected_mixture() {
        let mdp = random_mdp(23);
        let policy = TabularPolicy::random(4, 2, 6);
        let support = Support::evenly_spaced(-10.0, 0.5, 41).unwrap();
        let c = 0.5;
        let alpha = 0.3;
        let mut source = SampleSource::new(9);
        let mut z_mix = ZTable::from_dirac(4, 2, support.clone(), 20).unwrap();
        let mut z_grad = z_mix.clone();
        let (mut x, mut a) = (0, 0);
        for _ in 0..200 {
            let t = sample_transition(&mdp, &policy, x, a, &mut source).unwrap();
            projected_mixture_update(&mut z_mix, &t, alpha, mdp.gamma(), Bootstrap::NextAction);
            cdf_gradient_update(
                &mut z_grad,
                &t,
                alpha / (2.0 * c),
                mdp.gamma(),
                Bootstrap::NextAction,
            )
            .unwrap();
            for (m, g) in z_mix.mass_at(t.state, t.action).iter().zip(z_grad.mass_at(t.state, t.action)) {
                assert!((m - g).abs() < 1e-14);
            }
            (x, a) = (t.next_state, t.next_action);
        }
    }

    #[test]
    fn cdf_gradient_requires_even_spacing() {
        let support = Support::new(vec![0.0, 1.0, 3.0]).unwrap();
        let mut z = ZTable::from_dirac(1, 1, support, 0).unwrap();
        let t = TransitionSample {
            state: 0,
            action: 0,
            reward: 0.0,
            next_state: 0,
            next_action: 0,
            next_terminal: false,
        };
        assert!(matches!(
            cdf_gradient_update(&mut z, &t, 0.1, 0.9, Bootstrap::NextAction),
            Err(LearnError::Dist(DistError::NotEvenlySpaced))
        ));
    }

    #[test]
    fn pmf_gradient_breaks_the_expectation_coupling() {
        // Self-loop: Z₀ = δ_1 on z = (0,1,2), r = 1, γ = 0.5. The
        // projected target is (0, ½, ½), the PMF direction (−1, −1, 0),
        // so E[Z₁] = 1 − α while SARSA moves to 1 + α/2.
        let support = Support::evenly_spaced(0.0, 1.0, 3).unwrap();
        let mut z = ZTable::from_dirac(1, 1, support, 1).unwrap();
        let mut q = QTable::constant(1, 1, 1.0);
        let t = TransitionSample {
            state: 0,
            action: 0,
            reward: 1.0,
            next_state: 0,
            next_action: 0,
            next_terminal: false,
        };
        let alpha = 0.1;
        pmf_gradient_update(&mut z, &t, alpha, 0.5, Bootstrap::NextAction).unwrap();
        sarsa_update(&mut q, &t, alpha, 0.5);
        assert!((z.expectation(0, 0) - (1.0 - alpha)).abs() < 1e-12);
        assert!((q.get(0, 0) - 1.05).abs() < 1e-12);
        let gap = (z.expectation(0, 0) - q.get(0, 0)).abs();
        assert!(gap > 1e-3, "gap {gap}");
    }

    #[test]
    fn pmf_gradient_fixed_point_is_unchanged() {
        let support = Support::evenly_spaced(0.0, 1.0, 3).unwrap();
        let mut z = ZTable::from_dirac(1, 1, support, 0).unwrap();
        let t = TransitionSample {
            state: 0,
            action: 0,
            reward: 0.0,
            next_state: 0,
            next_action: 0,
            next_terminal: false,
        };
        let before = z.mass_at(0, 0).to_vec();
        pmf_gradient_update(&mut z, &t, 0.5, 0.9, Bootstrap::NextAction).unwrap();
        assert_eq!(z.mass_at(0, 0), &before[..]);
    }

    #[test]
    fn narrow_support_projection_biases_expectation() {
        // Negative control for the bracket condition: a return past z_K
        // clamps and loses expectation.
        let support = Support::evenly_spaced(0.0, 1.0, 3).unwrap();
        let out_of_range = GeneralDiscrete::dirac(5.0);
        let projected = crate::dist::cramer_project(&out_of_range, &support);
        assert_eq!(projected.expectation(), 2.0);
        assert!((projected.expectation() - out_of_range.expectation()).abs() > 1.0);
    }
}
