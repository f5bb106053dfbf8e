//! Environments and the shared sample machinery: finite MDPs,
//! classic-control physics, Fourier features, and seeded sample streams.

pub mod classic;
pub mod finite;
pub mod fourier;
pub mod source;

pub use classic::{Acrobot, CartPole, ClassicControlEnv, StepOutcome};
pub use finite::{FiniteMdp, MdpError, RandomMdpParams, TabularPolicy};
pub use fourier::{FourierBasis, FourierError};
pub use source::{
    argmax, epsilon_greedy, sample_transition, SampleError, SampleSource, TransitionSample,
};
