//! Deterministic sample streams and the transitions drawn from them.
//!
//! A [`SampleSource`] is the coupling device: two learners driven from
//! the same source (or from clones of it) consume bit-identical
//! randomness. Every primitive draw consumes exactly one 64-bit word of
//! ChaCha8 output, and every operation in this crate documents how many
//! draws it consumes, so stream positions stay aligned by construction.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::finite::{FiniteMdp, TabularPolicy};

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("action values are empty")]
    EmptyActionSet,
    #[error("state {0} is terminal; reset before sampling")]
    TerminalState(usize),
}

/// Seeded deterministic stream of uniform draws.
///
/// Streams are split by label (`split`) rather than by consuming parent
/// draws, so sibling streams never overlap and adding a consumer does
/// not shift anyone else's randomness. Cloning a source at transition
/// counter `t` reproduces the remaining stream exactly.
#[derive(Debug, Clone)]
pub struct SampleSource {
    seed: u64,
    stream: u64,
    transitions: u64,
    rng: ChaCha8Rng,
}

impl SampleSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Stream `label` of the given seed. Distinct labels are
    /// independent ChaCha8 streams over the same key.
    pub fn with_stream(seed: u64, label: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(label);
        SampleSource {
            seed,
            stream: label,
            transitions: 0,
            rng,
        }
    }

    /// Fresh source on stream `label`, independent of `self`'s position.
    pub fn split(&self, label: u64) -> Self {
        Self::with_stream(self.seed, label)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of transitions drawn so far (advanced by
    /// [`sample_transition`], not by raw draws).
    pub fn transitions_emitted(&self) -> u64 {
        self.transitions
    }

    pub(crate) fn count_transition(&mut self) {
        self.transitions += 1;
    }

    /// Uniform draw in `[0, 1)` built from the top 53 bits of one ChaCha8
    /// word. One word per call, independent of later library versions.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`. One word.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Uniform integer in `0..n` via `⌊u·n⌋`. One word always; the
    /// `2^-53` truncation bias is irrelevant at this scale and keeps the
    /// word count fixed (rejection sampling would not).
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_uniform() * n as f64) as usize).min(n - 1)
    }

    /// Index drawn by CDF inversion over (unnormalized) nonnegative
    /// weights. One word.
    pub fn next_index(&mut self, weights: &[f64]) -> usize {
        debug_assert!(!weights.is_empty());
        let total: f64 = weights.iter().sum();
        let mut u = self.next_uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }
}

/// One sampled transition `(x, a, r, x', a')` plus the terminal marker
/// used to mask γ at episode boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSample {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub next_action: usize,
    pub next_terminal: bool,
}

/// Draws one transition from `(state, action)` under `policy`.
///
/// Consumes exactly three draws: reward atom, next state, next action.
/// The next action is drawn even when the next state is terminal so the
/// draw count per transition is constant.
pub fn sample_transition(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    state: usize,
    action: usize,
    source: &mut SampleSource,
) -> Result<TransitionSample, SampleError> {
    if mdp.is_terminal(state) {
        return Err(SampleError::TerminalState(state));
    }
    let reward_dist = mdp.reward(state, action);
    let reward = reward_dist.locations()[source.next_index(reward_dist.mass())];
    let next_state = source.next_index(mdp.transition_row(state, action));
    let next_action = source.next_index(policy.probs(next_state));
    source.count_transition();
    Ok(TransitionSample {
        state,
        action,
        reward,
        next_state,
        next_action,
        next_terminal: mdp.is_terminal(next_state),
    })
}

/// ε-greedy action choice over per-action values.
///
/// Consumes exactly two draws (explore test, then uniform action) no
/// matter which branch is taken, so coupled learners consulting the same
/// source stay aligned even while they disagree. Greedy ties break to
/// the lowest action index.
pub fn epsilon_greedy(
    values: &[f64],
    epsilon: f64,
    source: &mut SampleSource,
) -> Result<usize, SampleError> {
    if values.is_empty() {
        return Err(SampleError::EmptyActionSet);
    }
    let explore = source.next_uniform() < epsilon;
    let uniform = source.next_below(values.len());
    if explore {
        return Ok(uniform);
    }
    Ok(argmax(values))
}

/// Lowest-index argmax.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::finite::FiniteMdp;

    #[test]
    fn same_seed_reproduces_draws() {
        let mut a = SampleSource::new(7);
        let mut b = SampleSource::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn clone_reproduces_suffix() {
        let mut a = SampleSource::new(3);
        for _ in 0..17 {
            a.next_uniform();
        }
        let mut b = a.clone();
        for _ in 0..50 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn streams_differ_by_label() {
        let mut a = SampleSource::with_stream(3, 0);
        let mut b = a.split(1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_uniform().to_bits()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_uniform().to_bits()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn coupled_sample_transitions_are_identical() {
        let mdp = FiniteMdp::chain3();
        let policy = TabularPolicy::uniform(mdp.num_states(), mdp.num_actions());
        let mut a = SampleSource::new(11);
        let mut b = a.clone();
        for _ in 0..20 {
            let ta = sample_transition(&mdp, &policy, 1, 0, &mut a).unwrap();
            let tb = sample_transition(&mdp, &policy, 1, 0, &mut b).unwrap();
            assert_eq!(ta, tb);
        }
        assert_eq!(a.transitions_emitted(), 20);
    }

    #[test]
    fn deterministic_mdp_sample_matches_model() {
        let mdp = FiniteMdp::chain3();
        let policy = TabularPolicy::deterministic(&[1, 1, 1], 2);
        let mut source = SampleSource::new(0);
        let t = sample_transition(&mdp, &policy, 0, 1, &mut source).unwrap();
        // Right from the leftmost state: no reward, moves to state 1.
        assert_eq!(t.next_state, 1);
        assert_eq!(t.reward, 0.0);
        assert_eq!(t.next_action, 1);
    }

    #[test]
    fn greedy_picks_argmax_with_low_index_ties() {
        let mut source = SampleSource::new(0);
        assert_eq!(epsilon_greedy(&[1.0, 3.0, 2.0], 0.0, &mut source).unwrap(), 1);
        assert_eq!(epsilon_greedy(&[2.0, 2.0], 0.0, &mut source).unwrap(), 0);
        assert_eq!(
            epsilon_greedy(&[], 0.0, &mut source).unwrap_err(),
            SampleError::EmptyActionSet
        );
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut source = SampleSource::new(42);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[epsilon_greedy(&[0.0; 4], 1.0, &mut source).unwrap()] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn epsilon_greedy_consumes_two_draws_on_both_branches() {
        let mut greedy = SampleSource::new(5);
        let mut explore = SampleSource::new(5);
        epsilon_greedy(&[1.0, 0.0], 0.0, &mut greedy).unwrap();
        epsilon_greedy(&[1.0, 0.0], 1.0, &mut explore).unwrap();
        assert_eq!(
            greedy.next_uniform().to_bits(),
            explore.next_uniform().to_bits()
        );
    }
}
