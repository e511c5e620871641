use super::state::CliqueState;
use crate::error::Result;
use serde::Serialize;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub size: usize,
    pub overlap: usize,
    pub temp_index: usize,
}

/// How often the series is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Thinning {
    /// Every step when `T <= 100_000`, otherwise every `ceil(T / 100_000)`.
    Auto,
    Every(u64),
    /// Summary only.
    Off,
}

impl Thinning {
    pub(crate) fn interval(self, max_steps: u64) -> Option<u64> {
        match self {
            Thinning::Auto => Some(max_steps.div_ceil(100_000).max(1)),
            Thinning::Every(k) => Some(k.max(1)),
            Thinning::Off => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub points: Vec<TrajectoryPoint>,
    pub steps_run: u64,
    pub first_hit_size: Option<u64>,
    pub first_hit_overlap: Option<u64>,
    pub removals_count: u64,
    pub accepted_moves: u64,
    pub final_state: CliqueState,
    pub final_temp_index: usize,
}

impl TrajectoryRecord {
    /// Trajectory CSV: `step,size,overlap,temp_index`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,size,overlap,temp_index")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.step, p.size, p.overlap, p.temp_index)?;
        }
        Ok(())
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().map(|p| p.size)
    }
}

/// Tracks hits and thinning while a chain runs.
pub(crate) struct Recorder {
    interval: Option<u64>,
    size_target: Option<usize>,
    overlap_target: Option<usize>,
    pub points: Vec<TrajectoryPoint>,
    pub first_hit_size: Option<u64>,
    pub first_hit_overlap: Option<u64>,
    last_recorded: Option<u64>,
}

impl Recorder {
    pub fn new(
        max_steps: u64,
        thinning: Thinning,
        size_target: Option<usize>,
        overlap_target: Option<usize>,
    ) -> Self {
        let interval = thinning.interval(max_steps);
        let cap = interval.map_or(0, |i| (max_steps / i + 2).min(1 << 22) as usize);
        Self {
            interval,
            size_target,
            overlap_target,
            points: Vec::with_capacity(cap),
            first_hit_size: None,
            first_hit_overlap: None,
            last_recorded: None,
        }
    }

    /// Updates first-hit times; returns true once any target has been hit.
    #[inline]
    pub fn check_hits(&mut self, step: u64, size: usize, overlap: usize) -> bool {
        if self.first_hit_size.is_none() && self.size_target.is_some_and(|t| size >= t) {
            self.first_hit_size = Some(step);
        }
        if self.first_hit_overlap.is_none() && self.overlap_target.is_some_and(|t| overlap >= t) {
            self.first_hit_overlap = Some(step);
        }
        self.first_hit_size.is_some() || self.first_hit_overlap.is_some()
    }

    #[inline]
    pub fn sample(&mut self, step: u64, size: usize, overlap: usize, temp_index: usize) {
        if let Some(i) = self.interval {
            if step.is_multiple_of(i) {
                self.push(step, size, overlap, temp_index);
            }
        }
    }

    /// Always records the final state (once).
    pub fn finish(&mut self, step: u64, size: usize, overlap: usize, temp_index: usize) {
        if self.interval.is_some() && self.last_recorded != Some(step) {
            self.push(step, size, overlap, temp_index);
        }
    }

    fn push(&mut self, step: u64, size: usize, overlap: usize, temp_index: usize) {
        self.points.push(TrajectoryPoint {
            step,
            size,
            overlap,
            temp_index,
        });
        self.last_recorded = Some(step);
    }
}
