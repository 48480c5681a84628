use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::process::{ParticleSnapshot, SimConfig, VarianceProfile};
use crate::rng::{LineageKey, StreamLabel};

/// Crossing probability of a Brownian bridge (variance rate `var_rate`)
/// against a line it starts `d0` and ends `d1` below.
#[inline]
fn crossing_probability(d0: f64, d1: f64, var_rate: f64, duration: f64) -> f64 {
    (-2.0 * d0 * d1 / (var_rate * duration)).exp()
}

/// Sample whether a Brownian bridge crosses a line it starts `start_dist`
/// and ends `end_dist` below, over `duration` at diffusion rate
/// `variance_rate`.
///
/// A negative distance means the endpoint is already above the line: the
/// crossing is certain and no randomness is consumed. Zero distance gives
/// crossing probability one.
pub fn sample_barrier_crossing<R: Rng + ?Sized>(
    start_dist: f64,
    end_dist: f64,
    duration: f64,
    variance_rate: f64,
    rng: &mut R,
) -> Result<bool> {
    if !(duration > 0.0) {
        return Err(Error::Domain(format!(
            "bridge duration must be > 0, got {duration}"
        )));
    }
    if !(variance_rate > 0.0) {
        return Err(Error::Domain(format!(
            "variance rate must be > 0, got {variance_rate}"
        )));
    }
    if start_dist < 0.0 || end_dist < 0.0 {
        return Ok(true);
    }
    let p = crossing_probability(start_dist, end_dist, variance_rate, duration);
    Ok(rng.gen::<f64>() < p)
}

/// One entry of the depth-first traversal stack: a particle at its birth.
struct Frame {
    key: LineageKey,
    birth: f64,
    pos: f64,
    flagged: bool,
    /// Number of checkpoints already passed on the path from the root.
    ctx_len: usize,
    /// Index into the boundary schedule of the first boundary after birth.
    next_boundary: usize,
}

/// Per-checkpoint accumulation buffers.
struct SnapshotBuilder {
    time: f64,
    positions: Vec<f64>,
    flags: Vec<bool>,
    /// One ancestor column per earlier checkpoint.
    ancestors: Vec<Vec<u32>>,
}

/// Run one replica of the branching diffusion and return a snapshot per
/// checkpoint.
///
/// Output is bit-identical for identical `(config, profile)`: every lineage
/// draws from its own key-derived stream, so neither traversal order nor
/// the caller's threading can change the result.
pub fn simulate(config: &SimConfig, profile: &VarianceProfile) -> Result<Vec<ParticleSnapshot>> {
    config.validate()?;
    if !profile.covers(config.horizon) {
        return Err(Error::Config(format!(
            "variance profile ends at {} and does not cover horizon {}",
            profile.end(),
            config.horizon
        )));
    }

    // Event schedule: all deterministic times in (0, horizon] at which a
    // segment must end. Branch times are random and handled separately.
    let mut boundaries: Vec<f64> = Vec::new();
    boundaries.extend(config.checkpoints.iter().copied().filter(|&c| c > 0.0));
    boundaries.extend(
        profile
            .interior_breakpoints()
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < config.horizon),
    );
    if let Some(b) = &config.barrier {
        if b.start_time > 0.0 && b.start_time < config.horizon {
            boundaries.push(b.start_time);
        }
    }
    boundaries.sort_by(|a, b| a.partial_cmp(b).expect("finite boundaries"));
    boundaries.dedup();

    // checkpoint_of[i] = Some(snapshot index) if boundary i is a checkpoint.
    let checkpoint_of: Vec<Option<usize>> = boundaries
        .iter()
        .map(|b| config.checkpoints.iter().position(|c| c == b))
        .collect();

    let mut builders: Vec<SnapshotBuilder> = config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(c, &time)| SnapshotBuilder {
            time,
            positions: Vec::new(),
            flags: Vec::new(),
            ancestors: vec![Vec::new(); c],
        })
        .collect();

    let barrier = config.barrier;
    let root_key = LineageKey::root(config.seed, config.replica_id);

    // The root may sit exactly on a recorded checkpoint at time zero.
    let mut ctx: Vec<u32> = Vec::new();
    if config.checkpoints[0] == 0.0 {
        builders[0].positions.push(0.0);
        builders[0].flags.push(false);
        ctx.push(0);
    }

    if config.horizon == 0.0 {
        return Ok(finish(builders, config, barrier.is_some()));
    }

    let mut stack: Vec<Frame> = vec![Frame {
        key: root_key,
        birth: 0.0,
        pos: 0.0,
        flagged: false,
        ctx_len: ctx.len(),
        next_boundary: 0,
    }];

    while let Some(frame) = stack.pop() {
        ctx.truncate(frame.ctx_len);
        let mut motion = frame.key.stream(StreamLabel::Motion);
        let mut barrier_rng = barrier.map(|_| frame.key.stream(StreamLabel::Barrier));

        let lifetime: f64 = motion.sample(Exp1);
        let death = frame.birth + lifetime;
        let end = death.min(config.horizon);
        let branches = death < config.horizon;

        let mut t = frame.birth;
        let mut x = frame.pos;
        let mut flagged = frame.flagged;
        let mut bi = frame.next_boundary;

        let advance = |t0: f64,
                           t1: f64,
                           x0: f64,
                           flagged0: bool,
                           motion: &mut rand_chacha::ChaCha8Rng,
                           barrier_rng: &mut Option<rand_chacha::ChaCha8Rng>|
         -> (f64, bool) {
            let dt = t1 - t0;
            let rate = profile.rate_at(t0);
            let z: f64 = motion.sample(StandardNormal);
            let x1 = x0 + z * (rate * dt).sqrt();
            let mut flagged1 = flagged0;
            if let Some(brng) = barrier_rng {
                // Draw one uniform per segment unconditionally so that runs
                // differing only in the barrier window stay path-coupled.
                let u: f64 = brng.gen();
                let spec = barrier.expect("barrier rng implies barrier");
                if t0 >= spec.start_time && !flagged1 {
                    let d0 = spec.slope * t0 - x0;
                    let d1 = spec.slope * t1 - x1;
                    flagged1 = d0 < 0.0
                        || d1 < 0.0
                        || u < crossing_probability(d0, d1, rate, dt);
                }
            }
            (x1, flagged1)
        };

        while bi < boundaries.len() && boundaries[bi] <= end {
            let s = boundaries[bi];
            if s > t {
                let (x1, f1) = advance(t, s, x, flagged, &mut motion, &mut barrier_rng);
                x = x1;
                flagged = f1;
                t = s;
            }
            if let Some(spec) = &barrier {
                if s >= spec.start_time && x > spec.slope * s {
                    flagged = true;
                }
            }
            if let Some(c) = checkpoint_of[bi] {
                let b = &mut builders[c];
                if b.positions.len() >= config.max_particles {
                    return Err(Error::PopulationCap {
                        time_reached: b.time,
                        limit: config.max_particles,
                    });
                }
                let k = b.positions.len() as u32;
                b.positions.push(x);
                b.flags.push(flagged);
                for (j, col) in b.ancestors.iter_mut().enumerate() {
                    col.push(ctx[j]);
                }
                ctx.push(k);
            }
            bi += 1;
        }

        if branches {
            if end > t {
                let (x1, f1) = advance(t, end, x, flagged, &mut motion, &mut barrier_rng);
                x = x1;
                flagged = f1;
            }
            if let Some(spec) = &barrier {
                if end >= spec.start_time && x > spec.slope * end {
                    flagged = true;
                }
            }
            let ctx_len = ctx.len();
            stack.push(Frame {
                key: frame.key.child(1),
                birth: end,
                pos: x,
                flagged,
                ctx_len,
                next_boundary: bi,
            });
            stack.push(Frame {
                key: frame.key.child(0),
                birth: end,
                pos: x,
                flagged,
                ctx_len,
                next_boundary: bi,
            });
        }
        // A leaf ends exactly at the horizon, which is always the last
        // checkpoint, so its final state was recorded in the loop above.
    }

    Ok(finish(builders, config, barrier.is_some()))
}

fn finish(
    builders: Vec<SnapshotBuilder>,
    config: &SimConfig,
    with_barrier: bool,
) -> Vec<ParticleSnapshot> {
    let checkpoints = &config.checkpoints;
    builders
        .into_iter()
        .enumerate()
        .map(|(c, b)| ParticleSnapshot {
            time: b.time,
            positions: b.positions,
            ancestor_checkpoints: checkpoints[..c].to_vec(),
            ancestors: b.ancestors,
            barrier_exceeded: with_barrier.then_some(b.flags),
            seed: config.seed,
            replica_id: config.replica_id,
        })
        .collect()
}
