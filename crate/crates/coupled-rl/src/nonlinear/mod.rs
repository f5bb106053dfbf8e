//! Nonlinear parameterizations: small ReLU networks, the DQN-lite /
//! C51-lite / S51-lite agents, and the sigmoid-CDF construction where
//! one distributional step breaks expectation-equivalence.

pub mod agent;
pub mod counterexample;
pub mod mlp;

pub use agent::{
    c51_batch_gradient, dqn_batch_gradient, run_control_episodes, s51_batch_gradient, softmax,
    AgentConfig, AgentError, BatchSample, ContinuousTransition, Encoder, EpisodeStats,
    EpsilonSchedule, HeadKind, MlpAgent, ReplayBuffer, S51Mode, SampleTarget,
};
pub use counterexample::{sigmoid_cdf_counterexample, SigmoidCounterexample};
pub use mlp::{Mlp, Optimizer, OptimizerKind};
