//! Finite MDPs with tabular transition and reward models, plus the
//! stock environments: the 3-state chain, the 12x12 gridworld, and
//! seeded random models for property checks.

use thiserror::Error;

use crate::dist::GeneralDiscrete;
use crate::env::source::SampleSource;

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("transition row ({state},{action}) sums to {sum}, expected 1")]
    TransitionNotNormalized { state: usize, action: usize, sum: f64 },
    #[error("discount must lie in [0,1), got {0}")]
    BadDiscount(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("table size mismatch: {0}")]
    ShapeMismatch(String),
}

/// Tolerance for transition-row normalization checks.
const ROW_TOLERANCE: f64 = 1e-12;

/// Tabular MDP `(X, A, R, P, γ)` with per-(x,a) discrete reward
/// distributions over bounded rewards and per-state terminal flags.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// `transition[x * n_actions + a][x']`
    transition: Vec<Vec<f64>>,
    /// `rewards[x * n_actions + a]`
    rewards: Vec<GeneralDiscrete>,
    gamma: f64,
    terminal: Vec<bool>,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<Vec<f64>>,
        rewards: Vec<GeneralDiscrete>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self, MdpError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(MdpError::BadDiscount(gamma));
        }
        let pairs = n_states * n_actions;
        if transition.len() != pairs || rewards.len() != pairs || terminal.len() != n_states {
            return Err(MdpError::ShapeMismatch(format!(
                "expected {pairs} state-action rows for {n_states} states x {n_actions} actions"
            )));
        }
        for (idx, row) in transition.iter().enumerate() {
            if row.len() != n_states {
                return Err(MdpError::ShapeMismatch(format!(
                    "transition row {idx} has {} entries",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE || row.iter().any(|&p| p < 0.0) {
                return Err(MdpError::TransitionNotNormalized {
                    state: idx / n_actions,
                    action: idx % n_actions,
                    sum,
                });
            }
        }
        Ok(FiniteMdp {
            n_states,
            n_actions,
            transition,
            rewards,
            gamma,
            terminal,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    fn pair(&self, state: usize, action: usize) -> usize {
        debug_assert!(state < self.n_states && action < self.n_actions);
        state * self.n_actions + action
    }

    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        &self.transition[self.pair(state, action)]
    }

    pub fn reward(&self, state: usize, action: usize) -> &GeneralDiscrete {
        &self.rewards[self.pair(state, action)]
    }

    pub fn expected_reward(&self, state: usize, action: usize) -> f64 {
        self.reward(state, action).expectation()
    }

    /// Largest reward magnitude in the model; `R_MAX` in bracket checks.
    pub fn reward_magnitude(&self) -> f64 {
        self.rewards
            .iter()
            .flat_map(|d| d.locations().iter())
            .fold(0.0f64, |m, &z| m.max(z.abs()))
    }

    /// `R_MAX / (1 − γ)`: every attainable return lies within this
    /// radius, so a support bracketing it keeps projections unbiased.
    pub fn return_radius(&self) -> f64 {
        self.reward_magnitude() / (1.0 - self.gamma)
    }

    /// Three states in a line, actions {0: left, 1: right}, reward +1
    /// for left in the leftmost state and right in the rightmost state,
    /// 0 otherwise, γ = 0.9, continuing (no terminal state).
    pub fn chain3() -> Self {
        let n_states = 3;
        let n_actions = 2;
        let mut transition = Vec::with_capacity(n_states * n_actions);
        let mut rewards = Vec::with_capacity(n_states * n_actions);
        for state in 0..n_states {
            for action in 0..n_actions {
                let next = match action {
                    0 => state.saturating_sub(1),
                    _ => (state + 1).min(n_states - 1),
                };
                let mut row = vec![0.0; n_states];
                row[next] = 1.0;
                transition.push(row);
                let r = match (state, action) {
                    (0, 0) | (2, 1) => 1.0,
                    _ => 0.0,
                };
                rewards.push(GeneralDiscrete::dirac(r));
            }
        }
        FiniteMdp::new(n_states, n_actions, transition, rewards, 0.9, vec![false; 3]).unwrap()
    }

    /// 12x12 gridworld: 144 row-major cells, actions
    /// {0: up, 1: down, 2: left, 3: right}, deterministic moves that
    /// stay in place at walls, reward +1 on the move that enters the
    /// goal cell 143 (bottom-right), 0 otherwise, γ = 0.99, goal
    /// terminal. Start cell for episode runners is 0 (top-left).
    pub fn gridworld12() -> Self {
        const SIDE: usize = 12;
        let n_states = SIDE * SIDE;
        let n_actions = 4;
        let goal = n_states - 1;
        let mut transition = Vec::with_capacity(n_states * n_actions);
        let mut rewards = Vec::with_capacity(n_states * n_actions);
        for state in 0..n_states {
            let (row, col) = (state / SIDE, state % SIDE);
            for action in 0..n_actions {
                let (nr, nc) = match action {
                    0 => (row.saturating_sub(1), col),
                    1 => ((row + 1).min(SIDE - 1), col),
                    2 => (row, col.saturating_sub(1)),
                    _ => (row, (col + 1).min(SIDE - 1)),
                };
                let next = nr * SIDE + nc;
                let mut p = vec![0.0; n_states];
                p[next] = 1.0;
                transition.push(p);
                let r = if next == goal && state != goal { 1.0 } else { 0.0 };
                rewards.push(GeneralDiscrete::dirac(r));
            }
        }
        let mut terminal = vec![false; n_states];
        terminal[goal] = true;
        FiniteMdp::new(n_states, n_actions, transition, rewards, 0.99, terminal).unwrap()
    }

    /// Start state used by the episode runners.
    pub const GRIDWORLD_START: usize = 0;

    /// Seeded random MDP. Stochastic transitions (normalized uniforms),
    /// stochastic rewards on up to `reward_atoms` atoms in [-1, 1],
    /// continuing (no terminals).
    pub fn random(params: &RandomMdpParams) -> Result<Self, MdpError> {
        params.validate()?;
        let mut source = SampleSource::with_stream(params.seed, Self::RANDOM_MDP_STREAM);
        let pairs = params.n_states * params.n_actions;
        let mut transition = Vec::with_capacity(pairs);
        let mut rewards = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            transition.push(random_simplex_row(params.n_states, &mut source));
            rewards.push(random_reward(params.reward_atoms, &mut source));
        }
        FiniteMdp::new(
            params.n_states,
            params.n_actions,
            transition,
            rewards,
            params.gamma,
            vec![false; params.n_states],
        )
    }

    /// Seeded random MDP with deterministic transitions, deterministic
    /// rewards in [-1, 1], and no terminals. Under a deterministic
    /// policy every return distribution is a single point, which keeps
    /// unprojected distributional iteration exact at any horizon.
    pub fn random_deterministic(params: &RandomMdpParams) -> Result<Self, MdpError> {
        params.validate()?;
        let mut source = SampleSource::with_stream(params.seed, Self::RANDOM_MDP_STREAM + 1);
        let pairs = params.n_states * params.n_actions;
        let mut transition = Vec::with_capacity(pairs);
        let mut rewards = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            let mut row = vec![0.0; params.n_states];
            row[source.next_below(params.n_states)] = 1.0;
            transition.push(row);
            rewards.push(GeneralDiscrete::dirac(source.next_range(-1.0, 1.0)));
        }
        FiniteMdp::new(
            params.n_states,
            params.n_actions,
            transition,
            rewards,
            params.gamma,
            vec![false; params.n_states],
        )
    }

    const RANDOM_MDP_STREAM: u64 = 0x4d44_5030;
}

fn random_simplex_row(n: usize, source: &mut SampleSource) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| source.next_uniform() + 1e-3).collect();
    let sum: f64 = row.iter().sum();
    for p in &mut row {
        *p /= sum;
    }
    // Nudge the last entry so the row sums to 1 at full precision.
    let partial: f64 = row[..n - 1].iter().sum();
    row[n - 1] = 1.0 - partial;
    row
}

fn random_reward(max_atoms: usize, source: &mut SampleSource) -> GeneralDiscrete {
    let n = 1 + source.next_below(max_atoms);
    let locations: Vec<f64> = (0..n).map(|_| source.next_range(-1.0, 1.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| source.next_uniform() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    let mut mass: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    let partial: f64 = mass[..n - 1].iter().sum();
    mass[n - 1] = 1.0 - partial;
    GeneralDiscrete::new(locations, mass).expect("random reward construction")
}

/// Parameters for the seeded random MDP generators.
#[derive(Debug, Clone)]
pub struct RandomMdpParams {
    pub n_states: usize,
    pub n_actions: usize,
    pub reward_atoms: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for RandomMdpParams {
    fn default() -> Self {
        RandomMdpParams {
            n_states: 4,
            n_actions: 2,
            reward_atoms: 3,
            gamma: 0.9,
            seed: 0,
        }
    }
}

impl RandomMdpParams {
    fn validate(&self) -> Result<(), MdpError> {
        if self.n_states < 2 || self.n_states > 64 {
            return Err(MdpError::BadParameter(format!(
                "n_states {} outside 2..=64",
                self.n_states
            )));
        }
        if self.n_actions < 1 || self.n_actions > 8 {
            return Err(MdpError::BadParameter(format!(
                "n_actions {} outside 1..=8",
                self.n_actions
            )));
        }
        if self.reward_atoms < 1 || self.reward_atoms > 8 {
            return Err(MdpError::BadParameter(format!(
                "reward_atoms {} outside 1..=8",
                self.reward_atoms
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(MdpError::BadDiscount(self.gamma));
        }
        Ok(())
    }
}

/// Stochastic tabular policy π(a|x).
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    probs: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        TabularPolicy {
            probs: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let probs = actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        TabularPolicy { probs }
    }

    /// Seeded random stochastic policy.
    pub fn random(n_states: usize, n_actions: usize, seed: u64) -> Self {
        let mut source = SampleSource::with_stream(seed, 0x504f_4c49);
        TabularPolicy {
            probs: (0..n_states)
                .map(|_| random_simplex_row(n_actions, &mut source))
                .collect(),
        }
    }

    pub fn probs(&self, state: usize) -> &[f64] {
        &self.probs[state]
    }

    pub fn num_actions(&self) -> usize {
        self.probs[0].len()
    }
}
