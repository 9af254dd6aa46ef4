//! Monte Carlo wave-function trajectories.
//!
//! Each step of length `dt` either collapses the state through one of the
//! jump channels, with total probability dp = dt·Σ_k Γ_k |⟨from_k|ψ⟩|², or
//! applies the exact no-jump propagator exp(−i H_NH dt) and renormalizes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_h_nh, jump_channels, JumpChannel, JumpLabel, Level};
use crate::linalg::{basis, ComplexMatrix4, StateVector4, I};
use crate::scheme::{departure_rates, SchemeParams};

/// Largest admissible per-step jump probability.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

/// `dt` may not exceed this fraction of the shortest departure time 1/G_max.
pub const DT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// Step length, units of γ₂₁⁻¹.
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub initial_level: Level,
}

impl TrajectoryConfig {
    /// Largest step allowed for `p`.
    pub fn max_dt(p: &SchemeParams) -> f64 {
        let g = departure_rates(p).max();
        if g > 0.0 {
            DT_FRACTION / g
        } else {
            f64::INFINITY
        }
    }

    /// Config with the largest admissible step for `p`.
    pub fn for_params(p: &SchemeParams, t_max: f64, seed: u64) -> Self {
        Self { dt: Self::max_dt(p), t_max, seed, initial_level: Level::Two }
    }

    pub fn validate(&self, p: &SchemeParams) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_max >= self.dt) {
            return Err(Error::InvalidConfig(format!("t_max = {} must be at least dt = {}", self.t_max, self.dt)));
        }
        let limit = Self::max_dt(p);
        // small slack so that `for_params` output always validates
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds {DT_FRACTION}/G_max = {limit}",
                self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_max / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: JumpLabel,
    pub post_level: Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: TrajectoryConfig,
    pub events: Vec<JumpEvent>,
    pub final_state: StateVector4,
    /// Number of steps that applied the no-jump propagator.
    pub coherent_steps: u64,
}

/// exp(−i H_NH dt).
pub fn no_jump_propagator(p: &SchemeParams, dt: f64) -> ComplexMatrix4 {
    (build_h_nh(p) * (-I * dt)).exp()
}

/// Precomputed per-(params, dt) data for stepping.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub propagator: ComplexMatrix4,
    pub channels: [JumpChannel; 4],
    pub dt: f64,
}

impl Stepper {
    pub fn new(p: &SchemeParams, dt: f64) -> Self {
        Self { propagator: no_jump_propagator(p, dt), channels: jump_channels(p), dt }
    }

    /// Per-channel jump probabilities dt·Γ_k·|⟨from_k|ψ⟩|² and their sum.
    pub fn jump_probabilities(&self, psi: &StateVector4) -> ([f64; 4], f64) {
        let mut terms = [0.0; 4];
        for (slot, ch) in terms.iter_mut().zip(&self.channels) {
            *slot = self.dt * ch.rate * psi[ch.from_level.index()].norm_sqr();
        }
        (terms, terms.iter().sum())
    }

    /// One step from a normalized state. Returns the new normalized state and
    /// the channel that fired, if any.
    pub fn step<R: Rng + ?Sized>(&self, psi: &StateVector4, rng: &mut R) -> Result<(StateVector4, Option<JumpLabel>)> {
        let (terms, dp) = self.jump_probabilities(psi);
        if dp > MAX_JUMP_PROBABILITY {
            return Err(Error::StepTooLarge { dp });
        }
        let r: f64 = rng.gen();
        if r < dp {
            let mut pick = rng.gen::<f64>() * dp;
            let mut chosen = None;
            for (term, ch) in terms.iter().zip(&self.channels) {
                if *term > 0.0 {
                    // last nonzero channel absorbs rounding in `pick`
                    chosen = Some(ch);
                    if pick < *term {
                        break;
                    }
                    pick -= term;
                }
            }
            let ch = chosen.expect("r < dp implies a nonzero channel");
            return Ok((basis(ch.to_level.index()), Some(ch.label)));
        }
        let next = self.propagator * psi;
        let norm = next.norm();
        Ok((next.unscale(norm), None))
    }
}

/// Runs one trajectory, handing the state after every step to `observer`
/// together with the step index (1-based; index 0 is the initial state).
pub fn run_trajectory_observed<F>(p: &SchemeParams, cfg: &TrajectoryConfig, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(u64, &StateVector4),
{
    p.validate()?;
    cfg.validate(p)?;
    let stepper = Stepper::new(p, cfg.dt);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut psi = basis(cfg.initial_level.index());
    let mut events = Vec::new();
    let mut coherent_steps = 0;
    observer(0, &psi);
    for n in 1..=cfg.steps() {
        let (next, jump) = stepper.step(&psi, &mut rng)?;
        psi = next;
        match jump {
            Some(label) => events.push(JumpEvent { time: n as f64 * cfg.dt, channel: label, post_level: label.to_level() }),
            None => coherent_steps += 1,
        }
        observer(n, &psi);
    }
    Ok(Trajectory { config: *cfg, events, final_state: psi, coherent_steps })
}

pub fn run_trajectory(p: &SchemeParams, cfg: &TrajectoryConfig) -> Result<Trajectory> {
    run_trajectory_observed(p, cfg, |_, _| {})
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in an ensemble with seed `base`:
/// `splitmix64(base ⊕ splitmix64(index))`. Depends only on the pair, so
/// ensembles are reproducible under any execution order.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Configs for `n` trajectories sharing `cfg` apart from their seeds.
pub fn ensemble_configs(cfg: &TrajectoryConfig, n: usize) -> Vec<TrajectoryConfig> {
    (0..n as u64).map(|i| TrajectoryConfig { seed: derive_seed(cfg.seed, i), ..*cfg }).collect()
}

/// Runs `n_traj` trajectories in parallel; output order follows the index.
pub fn run_ensemble(p: &SchemeParams, cfg: &TrajectoryConfig, n_traj: usize) -> Result<Vec<Trajectory>> {
    ensemble_configs(cfg, n_traj).par_iter().map(|c| run_trajectory(p, c)).collect()
}

/// Ensemble-averaged populations with standard errors at sampled times.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSeries {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 4]>,
    pub stderr: Vec<[f64; 4]>,
    pub n_traj: usize,
}

// Trajectories per reduction block; block sums are combined in index order
// so results do not depend on thread scheduling.
const BLOCK: usize = 32;

/// Mean |c_i|² over `n_traj` trajectories, sampled every `stride` steps
/// (starting with the initial state).
pub fn ensemble_populations(
    p: &SchemeParams,
    cfg: &TrajectoryConfig,
    n_traj: usize,
    stride: u64,
) -> Result<PopulationSeries> {
    if n_traj == 0 {
        return Err(Error::InvalidConfig("n_traj must be at least 1".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidConfig("sampling stride must be at least 1".into()));
    }
    let n_samples = (cfg.steps() / stride + 1) as usize;
    let configs = ensemble_configs(cfg, n_traj);

    type Sums = (Vec<[f64; 4]>, Vec<[f64; 4]>);
    let blocks: Vec<Sums> = configs
        .par_chunks(BLOCK)
        .map(|chunk| -> Result<Sums> {
            let mut sum = vec![[0.0; 4]; n_samples];
            let mut sq = vec![[0.0; 4]; n_samples];
            for c in chunk {
                run_trajectory_observed(p, c, |n, psi| {
                    if n % stride == 0 {
                        let k = (n / stride) as usize;
                        for l in 0..4 {
                            let pop = psi[l].norm_sqr();
                            sum[k][l] += pop;
                            sq[k][l] += pop * pop;
                        }
                    }
                })?;
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;

    let mut sum = vec![[0.0; 4]; n_samples];
    let mut sq = vec![[0.0; 4]; n_samples];
    for (bs, bq) in &blocks {
        for k in 0..n_samples {
            for l in 0..4 {
                sum[k][l] += bs[k][l];
                sq[k][l] += bq[k][l];
            }
        }
    }
    let n = n_traj as f64;
    let mut mean = vec![[0.0; 4]; n_samples];
    let mut stderr = vec![[0.0; 4]; n_samples];
    for k in 0..n_samples {
        for l in 0..4 {
            let m = sum[k][l] / n;
            mean[k][l] = m;
            stderr[k][l] = if n_traj > 1 {
                let var = ((sq[k][l] - n * m * m) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            } else {
                0.0
            };
        }
    }
    let times = (0..n_samples).map(|k| (k as u64 * stride) as f64 * cfg.dt).collect();
    Ok(PopulationSeries { times, mean, stderr, n_traj })
}

/// Header of the jump-event CSV dump.
pub const EVENT_CSV_HEADER: &str = "trajectory,time,channel,post_level";

/// Writes one row per jump event: trajectory index, time, channel label,
/// post-jump level.
pub fn write_events_csv<W: Write>(out: &mut W, trajectories: &[Trajectory]) -> Result<()> {
    writeln!(out, "{EVENT_CSV_HEADER}")?;
    for (i, traj) in trajectories.iter().enumerate() {
        for ev in &traj.events {
            writeln!(out, "{i},{},{},{}", ev.time, ev.channel, ev.post_level)?;
        }
    }
    Ok(())
}
