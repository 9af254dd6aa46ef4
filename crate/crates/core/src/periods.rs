//! Coherent periods between consecutive jumps and their statistics.
//!
//! A period starts in the level a jump lands in and ends in the level the
//! next jump departs from. Photon bookkeeping follows the manifold offsets:
//! the atom+field state |k⟩ carries relative photon numbers (weak, strong,
//! probe) fixed per level, so a period (i, j) changes the photon numbers by
//! offsets(j) − offsets(i).

use std::io::Write;

use crate::error::{Error, Result};
use crate::hamiltonian::Level;
use crate::mcwf::Trajectory;

/// Relative photon numbers (weak, strong, probe) of each level within one
/// manifold.
pub const MANIFOLD_OFFSETS: [(i8, i8, i8); 4] = [(-1, 1, 1), (-1, 1, 0), (-1, 0, 0), (0, 0, 0)];

pub fn manifold_offsets(level: Level) -> (i8, i8, i8) {
    MANIFOLD_OFFSETS[level.index()]
}

/// Levels a period can start in: every jump lands in 1, 2 or 4.
pub const START_LEVELS: [Level; 3] = [Level::One, Level::Two, Level::Four];
/// Levels a period can end in: every jump departs from 1, 2 or 3.
pub const END_LEVELS: [Level; 3] = [Level::One, Level::Two, Level::Three];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentPeriod {
    pub start_level: Level,
    pub end_level: Level,
    pub start_time: f64,
    pub duration: f64,
}

/// Photon-number changes (ΔN_w, ΔN_s, ΔN_p) over a period from `start` to
/// `end`.
pub fn photon_deltas(start: Level, end: Level) -> (i8, i8, i8) {
    let (a, b) = (manifold_offsets(start), manifold_offsets(end));
    (b.0 - a.0, b.1 - a.1, b.2 - a.2)
}

impl CoherentPeriod {
    pub fn photon_deltas(&self) -> (i8, i8, i8) {
        photon_deltas(self.start_level, self.end_level)
    }
}

/// Complete periods of a trajectory. The segment before the first jump and
/// the one after the last jump are truncated and dropped.
pub fn extract_periods(traj: &Trajectory) -> Vec<CoherentPeriod> {
    traj.events
        .windows(2)
        .map(|w| CoherentPeriod {
            start_level: w[0].post_level,
            end_level: w[1].channel.from_level(),
            start_time: w[0].time,
            duration: w[1].time - w[0].time,
        })
        .collect()
}

/// Pooled counts of period(i, j), indexed `counts[i-1][j-1]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeriodStats {
    pub counts: [[u64; 4]; 4],
    pub total: u64,
}

impl PeriodStats {
    pub fn add(&mut self, period: &CoherentPeriod) {
        self.counts[period.start_level.index()][period.end_level.index()] += 1;
        self.total += 1;
    }

    /// Pooling is a plain sum, so any merge order gives the same result.
    pub fn merge(&mut self, other: &PeriodStats) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        self.total += other.total;
    }

    pub fn count(&self, i: Level, j: Level) -> u64 {
        self.counts[i.index()][j.index()]
    }

    fn fraction(&self, n: u64) -> f64 {
        n as f64 / self.total as f64
    }

    /// Fraction of periods starting in `i`.
    pub fn p_start(&self, i: Level) -> f64 {
        self.fraction(self.counts[i.index()].iter().sum())
    }

    /// Fraction of periods that are period(i, j).
    pub fn p_pair(&self, i: Level, j: Level) -> f64 {
        self.fraction(self.count(i, j))
    }

    /// Binomial standard error of `p_pair`.
    pub fn stderr_pair(&self, i: Level, j: Level) -> f64 {
        binomial_stderr(self.p_pair(i, j), self.total)
    }

    /// P(2,1) + P(4,1) − P(1,2) − P(1,3).
    pub fn mean_delta_np(&self) -> f64 {
        use Level::*;
        self.p_pair(Two, One) + self.p_pair(Four, One) - self.p_pair(One, Two) - self.p_pair(One, Three)
    }

    /// Standard error of `mean_delta_np`, treating each period's ΔN_p as an
    /// independent draw.
    pub fn mean_delta_np_stderr(&self) -> f64 {
        if self.total < 2 {
            return 0.0;
        }
        let mut second = 0.0;
        for i in Level::ALL {
            for j in Level::ALL {
                let dn = f64::from(photon_deltas(i, j).2);
                second += dn * dn * self.p_pair(i, j);
            }
        }
        let mean = self.mean_delta_np();
        ((second - mean * mean).max(0.0) / self.total as f64).sqrt()
    }
}

pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Pools the complete periods of all trajectories that start at or after
/// `burn_in`.
pub fn empirical_stats(trajectories: &[Trajectory], burn_in: f64) -> Result<PeriodStats> {
    let mut stats = PeriodStats::default();
    for traj in trajectories {
        for period in extract_periods(traj) {
            if period.start_time >= burn_in {
                stats.add(&period);
            }
        }
    }
    if stats.total == 0 {
        return Err(Error::EmptyStatistics);
    }
    Ok(stats)
}

/// Probe photon change P(2,1) + P(4,1) − P(1,2) − P(1,3).
pub fn mean_probe_change(stats: &PeriodStats) -> f64 {
    stats.mean_delta_np()
}

/// Net probe photons emitted over one trajectory's complete periods.
pub fn trajectory_probe_change(traj: &Trajectory) -> i64 {
    extract_periods(traj).iter().map(|p| i64::from(p.photon_deltas().2)).sum()
}

pub const STATS_CSV_HEADER: &str = "i,j,count,P_ij,stderr";

/// One row per (i, j) with i a start level and j an end level, then a
/// summary row `mean_delta_np,,total,value,stderr`.
pub fn write_stats_csv<W: Write>(out: &mut W, stats: &PeriodStats) -> Result<()> {
    writeln!(out, "{STATS_CSV_HEADER}")?;
    for i in START_LEVELS {
        for j in END_LEVELS {
            writeln!(out, "{i},{j},{},{},{}", stats.count(i, j), stats.p_pair(i, j), stats.stderr_pair(i, j))?;
        }
    }
    writeln!(out, "mean_delta_np,,{},{},{}", stats.total, stats.mean_delta_np(), stats.mean_delta_np_stderr())?;
    Ok(())
}
