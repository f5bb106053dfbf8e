//! Expected and distributional reinforcement learning update rules that
//! can be driven in lockstep from one sample stream.
//!
//! The crate pairs every expected-value update (Bellman backups, SARSA,
//! TD semi-gradients, DQN-style batches) with its distributional
//! analogue over categorical return distributions, couples both sides
//! on identical sampled transitions, and measures whether the
//! distributional learner's expectations track the expected learner
//! exactly. Equivalences hold for mixture and CDF-direction updates in
//! tabular and linear settings; PMF-direction and nonlinear updates
//! break them, and both failure modes are reproduced as runnable
//! checks.
//!
//! Modules:
//! - [`dist`]: categorical distributions, Cramér distance and
//!   projection, CDF/PMF update directions.
//! - [`env`]: finite MDPs, CartPole/Acrobot, Fourier features, seeded
//!   sample streams.
//! - [`tabular`]: table-backed operators and sampled update rules.
//! - [`linear`]: linear value and CDF models with semi-gradient updates.
//! - [`nonlinear`]: small networks, the lite agents, and the sigmoid
//!   counterexample.
//! - [`coupling`]: drives coupled pairs and verifies the equivalence
//!   claims.

pub mod coupling;
pub mod dist;
pub mod env;
pub mod linear;
pub mod nonlinear;
pub mod tabular;

// The book's code snippets run as doc-tests so the guide can never
// drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/environments.md")]
    mod environments {}
    #[doc = include_str!("../../../book/src/tabular.md")]
    mod tabular {}
    #[doc = include_str!("../../../book/src/linear.md")]
    mod linear {}
    #[doc = include_str!("../../../book/src/nonlinear.md")]
    mod nonlinear {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    mod coupling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
