//! Executes experiment configs: seeded episode runs fanned out over a
//! thread per seed, merged in seed order, and written as RunRecord CSV.

use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use coupled_rl::coupling::{TabularControlAlgo, TabularControlConfig, TabularControlSession};
use coupled_rl::dist::Support;
use coupled_rl::env::{ClassicControlEnv, FiniteMdp, FourierBasis, SampleSource};
use coupled_rl::nonlinear::{
    run_control_episodes, AgentConfig, Encoder, EpsilonSchedule, HeadKind, MlpAgent,
};

use crate::config::{AlgoName, EnvName, ExperimentConfig};

/// One CSV row: `seed,episode,return,length,wallclock_ms,config_hash`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub episode: usize,
    pub ret: f64,
    pub length: usize,
    pub wallclock_ms: u64,
    pub config_hash: String,
}

pub const CSV_HEADER: &str = "seed,episode,return,length,wallclock_ms,config_hash";

pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.seed, r.episode, r.ret, r.length, r.wallclock_ms, r.config_hash
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    if header != CSV_HEADER {
        return Err(anyhow!("unexpected CSV header: {header}"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(anyhow!("line {}: expected 6 fields", i + 2));
            }
            Ok(RunRecord {
                seed: fields[0].parse()?,
                episode: fields[1].parse()?,
                ret: fields[2].parse()?,
                length: fields[3].parse()?,
                wallclock_ms: fields[4].parse()?,
                config_hash: fields[5].to_string(),
            })
        })
        .collect()
}

fn tabular_algo(algo: AlgoName) -> TabularControlAlgo {
    match algo {
        AlgoName::QLearning => TabularControlAlgo::QLearning,
        AlgoName::DistCdfQ => TabularControlAlgo::DistCdfQ,
        AlgoName::DistPmfQ => TabularControlAlgo::DistPmfQ,
        _ => unreachable!("validated as tabular"),
    }
}

fn finite_env(env: EnvName) -> (FiniteMdp, usize) {
    match env {
        EnvName::Chain3 => (FiniteMdp::chain3(), 1),
        EnvName::Gridworld12 => (FiniteMdp::gridworld12(), FiniteMdp::GRIDWORLD_START),
        _ => unreachable!("validated as tabular"),
    }
}

fn run_tabular_seed(config: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    let (mdp, start) = finite_env(config.env);
    // chain3 is continuing; episodes are fixed windows.
    let episode_cap = match config.env {
        EnvName::Chain3 => config.episode_cap.min(50),
        _ => config.episode_cap,
    };
    let control = TabularControlConfig {
        algo: tabular_algo(config.algo),
        alpha: config.alpha,
        epsilon: EpsilonSchedule {
            start: config.epsilon_start,
            end: config.epsilon_end,
            decay_steps: config.epsilon_decay_steps,
        },
        episode_cap,
        support_atoms: config.support_atoms,
        optimistic_init: true,
    };
    let mut session = TabularControlSession::new(mdp, start, control, seed)
        .map_err(|e| anyhow!("tabular session: {e}"))?;
    let hash = config.hash();
    let mut records = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let t0 = Instant::now();
        let stats = session
            .run_episode()
            .map_err(|e| anyhow!("episode {episode}: {e}"))?;
        records.push(RunRecord {
            seed,
            episode,
            ret: stats.ret,
            length: stats.length,
            wallclock_ms: t0.elapsed().as_millis() as u64,
            config_hash: hash.clone(),
        });
    }
    Ok(records)
}

/// Number of Fourier features the config produces on this env; logged
/// at run start.
pub fn feature_count(config: &ExperimentConfig) -> Option<usize> {
    if config.env.is_tabular() || config.fourier_order == 0 {
        return None;
    }
    let env = classic_env(config.env);
    let basis = FourierBasis::new(config.fourier_order, env.observation_bounds()).ok()?;
    Some(basis.num_features())
}

fn classic_env(env: EnvName) -> ClassicControlEnv {
    match env {
        EnvName::CartPole => ClassicControlEnv::cartpole(),
        EnvName::Acrobot => ClassicControlEnv::acrobot(),
        _ => unreachable!("validated as classic control"),
    }
}

fn agent_for(config: &ExperimentConfig, env: &ClassicControlEnv, seed: u64) -> Result<MlpAgent> {
    let head = match config.algo {
        AlgoName::DqnLite => HeadKind::Dqn,
        AlgoName::C51Lite => HeadKind::C51,
        AlgoName::S51LiteCdf => HeadKind::S51Cdf,
        AlgoName::S51LitePmf => HeadKind::S51Pmf,
        _ => unreachable!("validated as classic control"),
    };
    let encoder = if config.fourier_order > 0 {
        Encoder::Fourier(
            FourierBasis::new(config.fourier_order, env.observation_bounds())
                .map_err(|e| anyhow!("fourier basis: {e}"))?,
        )
    } else {
        Encoder::Identity(env.observation_dim())
    };
    let mut agent_config = AgentConfig::new(head)
        .with_hidden(config.hidden.clone())
        .with_gamma(config.gamma)
        .with_optimizer(config.optimizer, config.learning_rate);
    agent_config.epsilon = EpsilonSchedule {
        start: config.epsilon_start,
        end: config.epsilon_end,
        decay_steps: config.epsilon_decay_steps,
    };
    if head.is_distributional() {
        // Odd atom count over ±R_MAX/(1−γ) keeps 0 on the grid and
        // brackets every attainable return.
        let radius = env.reward_magnitude() / (1.0 - config.gamma);
        let atoms = if config.support_atoms.is_multiple_of(2) {
            config.support_atoms + 1
        } else {
            config.support_atoms
        };
        let spacing = 2.0 * radius / (atoms - 1) as f64;
        let support = Support::evenly_spaced(-radius, spacing, atoms)
            .map_err(|e| anyhow!("support: {e}"))?;
        agent_config = agent_config.with_support(support);
    }
    let source = SampleSource::new(seed);
    MlpAgent::new(agent_config, encoder, env.num_actions(), &source)
        .map_err(|e| anyhow!("agent: {e}"))
}

fn run_classic_seed(config: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    let mut env = classic_env(config.env);
    let mut agent = agent_for(config, &env, seed)?;
    let mut source = SampleSource::new(seed);
    let hash = config.hash();
    let mut records = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let t0 = Instant::now();
        let stats = run_control_episodes(&mut agent, &mut env, 1, &mut source)
            .map_err(|e| anyhow!("episode {episode}: {e}"))?;
        records.push(RunRecord {
            seed,
            episode,
            ret: stats[0].ret,
            length: stats[0].length,
            wallclock_ms: t0.elapsed().as_millis() as u64,
            config_hash: hash.clone(),
        });
    }
    Ok(records)
}

/// Runs every seed of the experiment, one thread per seed, and returns
/// the records merged in seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let results: Vec<Result<Vec<RunRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| {
                scope.spawn(move || {
                    if config.env.is_tabular() {
                        run_tabular_seed(config, seed)
                    } else {
                        run_classic_seed(config, seed)
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });
    let mut records = Vec::new();
    for result in results {
        records.extend(result?);
    }
    Ok(records)
}

/// Mean return of the final `window` episodes, per seed.
pub fn final_window_means(records: &[RunRecord], window: usize) -> Vec<(u64, f64)> {
    let mut seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds
        .into_iter()
        .map(|seed| {
            let mut rets: Vec<(usize, f64)> = records
                .iter()
                .filter(|r| r.seed == seed)
                .map(|r| (r.episode, r.ret))
                .collect();
            rets.sort_unstable_by_key(|&(e, _)| e);
            let tail: Vec<f64> = rets
                .iter()
                .rev()
                .take(window)
                .map(|&(_, ret)| ret)
                .collect();
            let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
            (seed, mean)
        })
        .collect()
}
