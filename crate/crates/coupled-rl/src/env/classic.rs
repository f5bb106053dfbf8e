//! CartPole and Acrobot with the standard published dynamics.
//!
//! Every physics constant, the integration scheme, the termination
//! rules, and the reset draw counts are fixed here (and documented in
//! the book's environment reference) so trajectories are bit-for-bit
//! reproducible from a seed.

use std::f64::consts::PI;

use crate::env::source::SampleSource;

/// Result of one control step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Episode over, by termination or by the step cap. Learners mask γ
    /// to 0 on `done` transitions.
    pub done: bool,
}

/// Cart with a hinged pole. State `(x, ẋ, θ, θ̇) ∈ ℝ⁴`.
///
/// Constants: gravity 9.8, cart mass 1.0, pole mass 0.1, half pole
/// length 0.5, force ±10, Euler integration at τ = 0.02 s. Episode ends
/// when |x| > 2.4, |θ| > 12° or after 200 steps; every step pays +1.
/// Reset draws each state component uniformly from (-0.05, 0.05):
/// exactly 4 draws.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: [f64; 4],
    steps: usize,
}

impl CartPole {
    pub const GRAVITY: f64 = 9.8;
    pub const CART_MASS: f64 = 1.0;
    pub const POLE_MASS: f64 = 0.1;
    pub const HALF_POLE_LENGTH: f64 = 0.5;
    pub const FORCE_MAG: f64 = 10.0;
    pub const TAU: f64 = 0.02;
    pub const X_LIMIT: f64 = 2.4;
    /// 12 degrees.
    pub const THETA_LIMIT: f64 = 12.0 * PI / 180.0;
    pub const STEP_CAP: usize = 200;

    pub fn new() -> Self {
        CartPole {
            state: [0.0; 4],
            steps: 0,
        }
    }

    pub fn reset(&mut self, source: &mut SampleSource) -> Vec<f64> {
        for v in &mut self.state {
            *v = source.next_range(-0.05, 0.05);
        }
        self.steps = 0;
        self.state.to_vec()
    }

    /// Actions: 0 pushes left, 1 pushes right.
    pub fn step(&mut self, action: usize) -> StepOutcome {
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 {
            Self::FORCE_MAG
        } else {
            -Self::FORCE_MAG
        };
        let total_mass = Self::CART_MASS + Self::POLE_MASS;
        let polemass_length = Self::POLE_MASS * Self::HALF_POLE_LENGTH;
        let (sin_t, cos_t) = theta.sin_cos();
        let temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
        let theta_acc = (Self::GRAVITY * sin_t - cos_t * temp)
            / (Self::HALF_POLE_LENGTH
                * (4.0 / 3.0 - Self::POLE_MASS * cos_t * cos_t / total_mass));
        let x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

        self.state = [
            x + Self::TAU * x_dot,
            x_dot + Self::TAU * x_acc,
            theta + Self::TAU * theta_dot,
            theta_dot + Self::TAU * theta_acc,
        ];
        self.steps += 1;

        let fell = self.state[0].abs() > Self::X_LIMIT || self.state[2].abs() > Self::THETA_LIMIT;
        StepOutcome {
            observation: self.state.to_vec(),
            reward: 1.0,
            done: fell || self.steps >= Self::STEP_CAP,
        }
    }

    /// Per-dimension ranges used to normalize states for feature maps.
    pub fn observation_bounds() -> Vec<(f64, f64)> {
        vec![
            (-Self::X_LIMIT, Self::X_LIMIT),
            (-3.0, 3.0),
            (-Self::THETA_LIMIT, Self::THETA_LIMIT),
            (-3.5, 3.5),
        ]
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

/// Two-link underactuated pendulum. Internal state
/// `(θ₁, θ₂, θ̇₁, θ̇₂)`; observation
/// `(cos θ₁, sin θ₁, cos θ₂, sin θ₂, θ̇₁, θ̇₂) ∈ ℝ⁶`.
///
/// Constants: unit masses and link lengths, centers of mass at 0.5,
/// unit inertias, gravity 9.8, torque ∈ {-1, 0, +1}, RK4 integration at
/// dt = 0.2 s. Angular velocities clamp to ±4π and ±9π. Episode ends
/// when `-cos θ₁ - cos(θ₁ + θ₂) > 1` or after 500 steps; every
/// non-terminating step pays -1. Reset draws the four internal
/// components uniformly from (-0.1, 0.1): exactly 4 draws.
#[derive(Debug, Clone)]
pub struct Acrobot {
    state: [f64; 4],
    steps: usize,
}

impl Acrobot {
    pub const GRAVITY: f64 = 9.8;
    pub const LINK_LENGTH_1: f64 = 1.0;
    pub const LINK_MASS_1: f64 = 1.0;
    pub const LINK_MASS_2: f64 = 1.0;
    pub const LINK_COM_1: f64 = 0.5;
    pub const LINK_COM_2: f64 = 0.5;
    pub const LINK_INERTIA: f64 = 1.0;
    pub const DT: f64 = 0.2;
    pub const MAX_VEL_1: f64 = 4.0 * PI;
    pub const MAX_VEL_2: f64 = 9.0 * PI;
    pub const STEP_CAP: usize = 500;

    pub fn new() -> Self {
        Acrobot {
            state: [0.0; 4],
            steps: 0,
        }
    }

    pub fn reset(&mut self, source: &mut SampleSource) -> Vec<f64> {
        for v in &mut self.state {
            *v = source.next_range(-0.1, 0.1);
        }
        self.steps = 0;
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        let [t1, t2, d1, d2] = self.state;
        vec![t1.cos(), t1.sin(), t2.cos(), t2.sin(), d1, d2]
    }

    fn derivatives(state: [f64; 4], torque: f64) -> [f64; 4] {
        let [theta1, theta2, dtheta1, dtheta2] = state;
        let m1 = Self::LINK_MASS_1;
        let m2 = Self::LINK_MASS_2;
        let l1 = Self::LINK_LENGTH_1;
        let lc1 = Self::LINK_COM_1;
        let lc2 = Self::LINK_COM_2;
        let i1 = Self::LINK_INERTIA;
        let i2 = Self::LINK_INERTIA;
        let g = Self::GRAVITY;

        let d1 = m1 * lc1 * lc1
            + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos())
            + i1
            + i2;
        let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
        let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
        let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
            - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
            + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
            + phi2;
        let ddtheta2 = (torque + (d2 / d1) * phi1
            - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin()
            - phi2)
            / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
        let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
        [dtheta1, dtheta2, ddtheta1, ddtheta2]
    }

    fn rk4_step(state: [f64; 4], torque: f64, dt: f64) -> [f64; 4] {
        let add = |s: [f64; 4], k: [f64; 4], h: f64| {
            [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
        };
        let k1 = Self::derivatives(state, torque);
        let k2 = Self::derivatives(add(state, k1, dt / 2.0), torque);
        let k3 = Self::derivatives(add(state, k2, dt / 2.0), torque);
        let k4 = Self::derivatives(add(state, k3, dt), torque);
        let mut out = state;
        for i in 0..4 {
            out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Actions: 0, 1, 2 apply torque -1, 0, +1 to the second joint.
    pub fn step(&mut self, action: usize) -> StepOutcome {
        let torque = action as f64 - 1.0;
        let mut s = Self::rk4_step(self.state, torque, Self::DT);
        s[0] = wrap_angle(s[0]);
        s[1] = wrap_angle(s[1]);
        s[2] = s[2].clamp(-Self::MAX_VEL_1, Self::MAX_VEL_1);
        s[3] = s[3].clamp(-Self::MAX_VEL_2, Self::MAX_VEL_2);
        self.state = s;
        self.steps += 1;

        let raised = -s[0].cos() - (s[0] + s[1]).cos() > 1.0;
        StepOutcome {
            observation: self.observation(),
            reward: if raised { 0.0 } else { -1.0 },
            done: raised || self.steps >= Self::STEP_CAP,
        }
    }

    pub fn observation_bounds() -> Vec<(f64, f64)> {
        vec![
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 1.0),
            (-Self::MAX_VEL_1, Self::MAX_VEL_1),
            (-Self::MAX_VEL_2, Self::MAX_VEL_2),
        ]
    }
}

impl Default for Acrobot {
    fn default() -> Self {
        Self::new()
    }
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = (x + PI) % (2.0 * PI);
    if y < 0.0 {
        y += 2.0 * PI;
    }
    y - PI
}

/// Either classic-control task behind one stepping interface.
#[derive(Debug, Clone)]
pub enum ClassicControlEnv {
    CartPole(CartPole),
    Acrobot(Acrobot),
}

impl ClassicControlEnv {
    pub fn cartpole() -> Self {
        ClassicControlEnv::CartPole(CartPole::new())
    }

    pub fn acrobot() -> Self {
        ClassicControlEnv::Acrobot(Acrobot::new())
    }

    pub fn reset(&mut self, source: &mut SampleSource) -> Vec<f64> {
        match self {
            ClassicControlEnv::CartPole(e) => e.reset(source),
            ClassicControlEnv::Acrobot(e) => e.reset(source),
        }
    }

    pub fn step(&mut self, action: usize) -> StepOutcome {
        match self {
            ClassicControlEnv::CartPole(e) => e.step(action),
            ClassicControlEnv::Acrobot(e) => e.step(action),
        }
    }

    pub fn observation_dim(&self) -> usize {
        match self {
            ClassicControlEnv::CartPole(_) => 4,
            ClassicControlEnv::Acrobot(_) => 6,
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            ClassicControlEnv::CartPole(_) => 2,
            ClassicControlEnv::Acrobot(_) => 3,
        }
    }

    pub fn observation_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            ClassicControlEnv::CartPole(_) => CartPole::observation_bounds(),
            ClassicControlEnv::Acrobot(_) => Acrobot::observation_bounds(),
        }
    }

    /// Worst-case episode return magnitude; sizes value supports.
    pub fn reward_magnitude(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartpole_dimensions() {
        let mut env = ClassicControlEnv::cartpole();
        let mut source = SampleSource::new(1);
        let obs = env.reset(&mut source);
        assert_eq!(obs.len(), 4);
        assert_eq!(env.num_actions(), 2);
        assert!(obs.iter().all(|v| v.abs() < 0.05));
    }

    #[test]
    fn acrobot_dimensions() {
        let mut env = ClassicControlEnv::acrobot();
        let mut source = SampleSource::new(1);
        let obs = env.reset(&mut source);
        assert_eq!(obs.len(), 6);
        assert_eq!(env.num_actions(), 3);
    }

    #[test]
    fn cartpole_trajectory_is_deterministic() {
        let run = |seed: u64| {
            let mut env = CartPole::new();
            let mut source = SampleSource::new(seed);
            env.reset(&mut source);
            let mut trace = Vec::new();
            for i in 0..50 {
                let out = env.step(i % 2);
                trace.push(out.observation);
                if out.done {
                    break;
                }
            }
            trace
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn cartpole_untouched_pole_falls() {
        let mut env = CartPole::new();
        let mut source = SampleSource::new(12);
        env.reset(&mut source);
        let mut done_at = None;
        for i in 0..CartPole::STEP_CAP {
            // Constant pushes destabilize quickly.
            if env.step(0).done {
                done_at = Some(i + 1);
                break;
            }
        }
        let steps = done_at.expect("constant action should end the episode");
        assert!(steps < CartPole::STEP_CAP);
    }

    #[test]
    fn acrobot_rewards_are_negative_until_cap() {
        let mut env = Acrobot::new();
        let mut source = SampleSource::new(2);
        env.reset(&mut source);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let out = env.step(1);
            total += out.reward;
            steps += 1;
            if out.done {
                break;
            }
        }
        // Zero torque never swings up; the cap ends the episode.
        assert_eq!(steps, Acrobot::STEP_CAP);
        assert_eq!(total, -(Acrobot::STEP_CAP as f64));
    }

    #[test]
    fn angle_wrapping_stays_in_pi_range() {
        for x in [-10.0, -3.2, 0.0, 3.2, 10.0, 100.0] {
            let w = wrap_angle(x);
            assert!((-PI..=PI).contains(&w), "{x} wrapped to {w}");
        }
    }
}
