//! Randomized per-pose timing of the full update-and-sweep path.
//!
//! Poses come from xoshiro256** seeded through SplitMix64
//! (`seed_from_u64`). Each joint value is `lo + u·(hi − lo)` with
//! `u = (next_u64 >> 11)·2⁻⁵³`, drawn joint by joint in joint-vector order;
//! continuous joints use `[−π, π)`.

use std::io::Write;
use std::time::Instant;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;

use crate::gjk::SupportStrategy;
use crate::kinematics::{KinematicChain, LimitMode};
use crate::world::{CheckMode, PairResult, Robot, WorldError};

/// Deterministic uniform joint vectors within limits.
#[derive(Clone, Debug)]
pub struct PoseSampler {
    rng: Xoshiro256StarStar,
    ranges: Vec<[f64; 2]>,
}

impl PoseSampler {
    pub fn new(chain: &KinematicChain, seed: u64) -> Self {
        Self {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            ranges: chain.sampling_ranges(),
        }
    }

    pub fn dof(&self) -> usize {
        self.ranges.len()
    }

    pub fn next_into(&mut self, theta: &mut [f64]) {
        for (x, [lo, hi]) in theta.iter_mut().zip(&self.ranges) {
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            *x = lo + u * (hi - lo);
        }
    }

    pub fn next_pose(&mut self) -> Vec<f64> {
        let mut theta = vec![0.0; self.dof()];
        self.next_into(&mut theta);
        theta
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub poses: usize,
    pub seed: u64,
    pub mode: CheckMode,
    /// Spread pair queries over threads (exhaustive sweep).
    pub parallel: bool,
    pub keep_samples: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            poses: 20_000,
            seed: 0,
            mode: CheckMode::EarlyExit,
            parallel: false,
            keep_samples: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub pose_index: usize,
    pub time_ms: f64,
    pub colliding: bool,
    /// Smallest distance among the pairs queried for this pose.
    pub min_distance: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

impl Stats {
    /// Mean and sample standard deviation.
    pub fn of(times: impl Iterator<Item = f64> + Clone) -> Self {
        let count = times.clone().count();
        if count == 0 {
            return Self::default();
        }
        let mean = times.clone().sum::<f64>() / count as f64;
        let var = if count > 1 {
            times.map(|t| (t - mean) * (t - mean)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            count,
            mean_ms: mean,
            std_ms: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub robot: String,
    pub poses: usize,
    pub seed: u64,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub collision_count: usize,
    pub colliding: Stats,
    pub free: Stats,
    pub nonconverged_pairs: usize,
    pub epsilon: f64,
    pub excluded_pairs: usize,
    pub queried_pairs: usize,
    pub strategy: SupportStrategy,
    pub mode: &'static str,
    pub parallel: bool,
    pub first_pose: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Sample>>,
}

/// Times `cfg.poses` random poses of `robot`.
pub fn run_bench(robot: &mut Robot, cfg: &BenchConfig) -> Result<BenchReport, WorldError> {
    assert!(cfg.poses >= 1, "at least one pose");
    let mut sampler = PoseSampler::new(&robot.chain, cfg.seed);
    let mut theta = vec![0.0; sampler.dof()];
    let mut results: Vec<PairResult> = Vec::with_capacity(robot.world.pair_count());
    let mut samples = Vec::with_capacity(cfg.poses);
    let mut first_pose = Vec::new();
    let mut nonconverged = 0;

    for index in 0..cfg.poses {
        sampler.next_into(&mut theta);
        if index == 0 {
            first_pose = theta.clone();
        }
        let start = Instant::now();
        robot.world.update_pose(&robot.chain, &theta, LimitMode::Strict)?;
        let colliding = if cfg.parallel {
            robot.world.check_parallel(&mut results)?
        } else {
            robot.world.check_into(cfg.mode, &mut results)?
        };
        let time_ms = start.elapsed().as_secs_f64() * 1e3;
        nonconverged += results.iter().filter(|r| !r.converged).count();
        let min_distance = results.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min);
        samples.push(Sample {
            pose_index: index,
            time_ms,
            colliding,
            min_distance,
        });
    }

    let all = Stats::of(samples.iter().map(|s| s.time_ms));
    let hit = Stats::of(samples.iter().filter(|s| s.colliding).map(|s| s.time_ms));
    let free = Stats::of(samples.iter().filter(|s| !s.colliding).map(|s| s.time_ms));
    let n = robot.world.components().len();
    Ok(BenchReport {
        robot: robot.chain.name.clone(),
        poses: cfg.poses,
        seed: cfg.seed,
        mean_ms: all.mean_ms,
        std_ms: all.std_ms,
        collision_count: hit.count,
        colliding: hit,
        free,
        nonconverged_pairs: nonconverged,
        epsilon: robot.world.epsilon(),
        excluded_pairs: n * n.saturating_sub(1) / 2 - robot.world.pair_count(),
        queried_pairs: robot.world.pair_count(),
        strategy: robot.world.config().support_strategy,
        mode: match (cfg.parallel, cfg.mode) {
            (true, _) => "parallel",
            (false, CheckMode::EarlyExit) => "early_exit",
            (false, CheckMode::Exhaustive) => "exhaustive",
        },
        parallel: cfg.parallel,
        first_pose,
        samples: cfg.keep_samples.then_some(samples),
    })
}

/// CSV with columns `pose_index,time_ms,colliding,min_distance`.
pub fn write_csv(samples: &[Sample], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "pose_index,time_ms,colliding,min_distance")?;
    for s in samples {
        writeln!(out, "{},{},{},{}", s.pose_index, s.time_ms, s.colliding, s.min_distance)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::parse_urdf;

    #[test]
    fn sampler_is_reproducible_and_in_range() {
        let xml = r#"<robot name="r"><link name="a"/><link name="b"/><link name="c"/>
          <joint name="j1" type="revolute"><parent link="a"/><child link="b"/><limit lower="-1" upper="2"/></joint>
          <joint name="j2" type="continuous"><parent link="b"/><child link="c"/></joint></robot>"#;
        let chain = parse_urdf(xml).unwrap();
        let mut a = PoseSampler::new(&chain, 7);
        let mut b = PoseSampler::new(&chain, 7);
        for _ in 0..1000 {
            let (x, y) = (a.next_pose(), b.next_pose());
            assert_eq!(x, y);
            assert!((-1.0..2.0).contains(&x[0]));
            assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&x[1]));
        }
        assert_ne!(PoseSampler::new(&chain, 8).next_pose(), PoseSampler::new(&chain, 7).next_pose());
    }

    /// Reference SplitMix64 seeding and xoshiro256** stepping.
    fn reference_stream(seed: u64, n: usize) -> Vec<u64> {
        let mut sm = seed;
        let mut split = || {
            sm = sm.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        let mut s = [split(), split(), split(), split()];
        (0..n)
            .map(|_| {
                let out = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
                let t = s[1] << 17;
                s[2] ^= s[0];
                s[3] ^= s[1];
                s[1] ^= s[2];
                s[0] ^= s[3];
                s[2] ^= t;
                s[3] = s[3].rotate_left(45);
                out
            })
            .collect()
    }

    #[test]
    fn generator_matches_reference_stream() {
        for seed in [0, 7, u64::MAX] {
            let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
            let got: Vec<u64> = (0..16).map(|_| rng.next_u64()).collect();
            assert_eq!(got, reference_stream(seed, 16));
        }
    }

    #[test]
    fn stats() {
        let s = Stats::of([1.0, 2.0, 3.0].into_iter());
        assert_eq!(s.count, 3);
        assert_eq!(s.mean_ms, 2.0);
        assert_eq!(s.std_ms, 1.0);
        assert_eq!(Stats::of([5.0].into_iter()).std_ms, 0.0);
    }

    #[test]
    fn csv_header() {
        let mut out = Vec::new();
        write_csv(
            &[Sample {
                pose_index: 0,
                time_ms: 0.5,
                colliding: true,
                min_distance: 0.0,
            }],
            &mut out,
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "pose_index,time_ms,colliding,min_distance\n0,0.5,true,0\n");
    }
}
