use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::csv_f64;
use crate::process::{SimConfig, VarianceProfile};

/// Positions and genealogy labels of all particles alive at one checkpoint.
///
/// Particles are ordered by the deterministic first-child-first traversal of
/// the branching tree, so index `k` addresses the same particle in every run
/// with the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSnapshot {
    /// Snapshot time.
    pub time: f64,
    /// Position of each particle alive at `time`.
    pub positions: Vec<f64>,
    /// Checkpoint times strictly before `time` for which ancestor labels
    /// were recorded, ascending.
    pub ancestor_checkpoints: Vec<f64>,
    /// `ancestors[j][k]` = index, among particles alive at
    /// `ancestor_checkpoints[j]`, of particle `k`'s ancestor.
    pub ancestors: Vec<Vec<u32>>,
    /// Per-particle "lineage exceeded the barrier line" flag; present iff
    /// the run had a `BarrierSpec`. Monotone along genealogy.
    pub barrier_exceeded: Option<Vec<bool>>,
    /// Master seed of the run that produced this snapshot.
    pub seed: u64,
    /// Replica id of the run that produced this snapshot.
    pub replica_id: u64,
}

impl ParticleSnapshot {
    /// Number of particles alive.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Largest position.
    pub fn max_position(&self) -> f64 {
        self.positions.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Barrier flags, or an error if the run had no barrier.
    pub fn barrier_flags(&self) -> Result<&[bool]> {
        self.barrier_exceeded
            .as_deref()
            .ok_or(Error::MissingBarrierFlags)
    }

    /// Dump as CSV with an 8-line header recording run provenance.
    ///
    /// Columns: `particle_id,position,ancestor_at_<r>...[,barrier_exceeded]`.
    pub fn write_csv<W: Write>(
        &self,
        config: &SimConfig,
        profile: &VarianceProfile,
        out: &mut W,
    ) -> Result<()> {
        let barrier = match &config.barrier {
            Some(b) => format!("{}:{}", b.start_time, b.slope),
            None => "none".to_string(),
        };
        writeln!(out, "# bbm-lab snapshot")?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# replica_id={}", self.replica_id)?;
        writeln!(out, "# horizon={}", config.horizon)?;
        writeln!(out, "# time={}", self.time)?;
        writeln!(out, "# profile={}", profile)?;
        writeln!(out, "# barrier={}", barrier)?;
        writeln!(out, "# particles={}", self.len())?;

        write!(out, "particle_id,position")?;
        for r in &self.ancestor_checkpoints {
            write!(out, ",ancestor_at_{r}")?;
        }
        if self.barrier_exceeded.is_some() {
            write!(out, ",barrier_exceeded")?;
        }
        writeln!(out)?;

        for k in 0..self.len() {
            write!(out, "{},{}", k, csv_f64(self.positions[k]))?;
            for col in &self.ancestors {
                write!(out, ",{}", col[k])?;
            }
            if let Some(flags) = &self.barrier_exceeded {
                write!(out, ",{}", flags[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Group particle indices of `snapshot` by their ancestor alive at time `r`.
///
/// `groups[i]` lists the particles descending from particle `i` of the
/// time-`r` snapshot; the groups partition `0..snapshot.len()` and every
/// particle alive at `r` owns a non-empty group (lineages never die).
pub fn split_by_ancestor(snapshot: &ParticleSnapshot, r: f64) -> Result<Vec<Vec<usize>>> {
    if r == snapshot.time {
        return Ok((0..snapshot.len()).map(|k| vec![k]).collect());
    }
    if r == 0.0 {
        return Ok(vec![(0..snapshot.len()).collect()]);
    }
    let j = snapshot
        .ancestor_checkpoints
        .iter()
        .position(|&c| c == r)
        .ok_or(Error::CheckpointNotRecorded { requested: r })?;
    let col = &snapshot.ancestors[j];
    let n_r = col.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut groups = vec![Vec::new(); n_r];
    for (k, &a) in col.iter().enumerate() {
        groups[a as usize].push(k);
    }
    Ok(groups)
}
