//! Single-site heat-bath dynamics for the hard-core model on `Q_d`.

use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{is_odd, CubeBitset, Dim};
use crate::symbolic::{rat_to_string, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartState {
    Empty,
    EvenFull,
    OddFull,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub d: u32,
    pub lambda: Rat,
    pub steps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    /// ChaCha stream; distinct chains sharing a seed use distinct streams.
    pub stream: u64,
    pub start: StartState,
}

impl ChainConfig {
    /// Burn-in `10·2^d·d`, one snapshot per sweep, `samples` snapshots.
    pub fn with_samples(d: u32, lambda: Rat, samples: u64, seed: u64) -> Self {
        let sweep = 1u64 << d.min(40);
        let burn_in = default_burn_in(d);
        ChainConfig {
            d,
            lambda,
            steps: burn_in + samples * sweep,
            burn_in,
            thin: sweep,
            seed,
            stream: 0,
            start: StartState::EvenFull,
        }
    }

    /// Keep one snapshot every `sweeps` sweeps, same snapshot count.
    pub fn thinned(mut self, sweeps: u64) -> Self {
        let samples = self.snapshots();
        self.thin = (1u64 << self.d.min(40)) * sweeps.max(1);
        self.steps = self.burn_in + samples * self.thin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = Dim::new(self.d)?;
        if d.get() > CubeBitset::MAX_DIM {
            return Err(Error::InvalidDimension(d.get(), format!("sampler supports d ≤ {}", CubeBitset::MAX_DIM)));
        }
        if !self.lambda.is_positive() {
            return Err(Error::InvalidParameter(format!("fugacity must be positive, got {}", self.lambda)));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be ≥ 1".into()));
        }
        if self.steps < self.burn_in {
            return Err(Error::InvalidParameter(format!("steps {} < burn-in {}", self.steps, self.burn_in)));
        }
        acceptance(&self.lambda)?;
        Ok(())
    }

    pub fn snapshots(&self) -> u64 {
        (self.steps - self.burn_in) / self.thin
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "d": self.d,
            "lambda": rat_to_string(&self.lambda),
            "steps": self.steps,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.seed,
            "stream": self.stream,
            "start": self.start,
            "rng": "ChaCha8",
        })
    }
}

pub fn default_burn_in(d: u32) -> u64 {
    10 * (1u64 << d.min(40)) * d as u64
}

/// `λ = a/b` gives occupation probability `a/(a+b)`, drawn exactly.
fn acceptance(lambda: &Rat) -> Result<(u64, u64)> {
    let a = lambda.numer().to_u64();
    let b = lambda.denom().to_u64();
    match (a, b) {
        (Some(a), Some(b)) if a.checked_add(b).is_some() => Ok((a, a + b)),
        _ => Err(Error::InvalidParameter(format!(
            "fugacity {} has a numerator or denominator beyond 64 bits",
            lambda.numer().clone()
        ))),
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    d: u32,
    occ: CubeBitset,
    size: u64,
    odd: u64,
    step: u64,
    rng: ChaCha8Rng,
    accept: (u64, u64),
}

impl ChainState {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let d = Dim::new(cfg.d)?;
        let mut occ = CubeBitset::new(d)?;
        let (mut size, mut odd) = (0, 0);
        let want = match cfg.start {
            StartState::Empty => None,
            StartState::EvenFull => Some(false),
            StartState::OddFull => Some(true),
        };
        if let Some(w) = want {
            for v in 0..d.num_vertices() {
                if is_odd(v) == w {
                    occ.set(v, true);
                    size += 1;
                    odd += w as u64;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(cfg.stream);
        Ok(ChainState { d: cfg.d, occ, size, odd, step: 0, rng, accept: acceptance(&cfg.lambda)? })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn odd(&self) -> u64 {
        self.odd
    }

    pub fn even(&self) -> u64 {
        self.size - self.odd
    }

    pub fn occupancy(&self) -> &CubeBitset {
        &self.occ
    }

    pub fn is_occupied(&self, v: u64) -> bool {
        self.occ.get(v)
    }

    pub fn occupied(&self) -> Vec<u64> {
        self.occ.iter().collect()
    }

    /// The occupied set as a bitmask over vertices, when `2^d ≤ 64`.
    pub fn small_mask(&self) -> Option<u64> {
        (self.d <= 6).then(|| self.occ.words()[0])
    }

    fn has_occupied_neighbor(&self, v: u64) -> bool {
        (0..self.d).any(|i| self.occ.get(v ^ (1 << i)))
    }

    /// One heat-bath update at a uniformly random vertex.
    pub fn step(&mut self) {
        let v = self.rng.gen_range(0..(1u64 << self.d));
        let (a, total) = self.accept;
        let occupy = !self.has_occupied_neighbor(v) && self.rng.gen_range(0..total) < a;
        let was = self.occ.get(v);
        if occupy != was {
            self.occ.set(v, occupy);
            let delta_odd = is_odd(v) as u64;
            if occupy {
                self.size += 1;
                self.odd += delta_odd;
            } else {
                self.size -= 1;
                self.odd -= delta_odd;
            }
        }
        self.step += 1;
    }

    pub fn is_independent(&self) -> bool {
        self.occ.iter().all(|v| !self.has_occupied_neighbor(v))
    }
}

/// Runs the chain, calling `visit` after burn-in every `thin` steps.
pub fn glauber_run(cfg: &ChainConfig, mut visit: impl FnMut(&ChainState) -> Result<()>) -> Result<u64> {
    let mut state = ChainState::new(cfg)?;
    for _ in 0..cfg.burn_in {
        state.step();
    }
    let mut emitted = 0;
    for _ in 0..cfg.snapshots() {
        for _ in 0..cfg.thin {
            state.step();
        }
        debug_assert!(state.is_independent(), "snapshot at step {} is not independent", state.step);
        visit(&state)?;
        emitted += 1;
    }
    Ok(emitted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub size: u64,
    pub odd: u64,
    pub even: u64,
    pub mask: Option<u64>,
}

pub fn glauber_snapshots(cfg: &ChainConfig) -> Result<Vec<Snapshot>> {
    let mut out = Vec::with_capacity(cfg.snapshots().min(1 << 24) as usize);
    glauber_run(cfg, |s| {
        out.push(Snapshot { step: s.step_count(), size: s.size(), odd: s.odd(), even: s.even(), mask: s.small_mask() });
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::rat;

    fn cfg(d: u32, steps: u64, burn: u64, thin: u64) -> ChainConfig {
        ChainConfig { d, lambda: rat(1, 1), steps, burn_in: burn, thin, seed: 7, stream: 0, start: StartState::Empty }
    }

    #[test]
    fn empty_stream_when_steps_equal_burn_in() {
        assert!(glauber_snapshots(&cfg(4, 100, 100, 1)).unwrap().is_empty());
    }

    #[test]
    fn reproducible_and_valid() {
        let c = cfg(5, 20_000, 1000, 37);
        let a = glauber_snapshots(&c).unwrap();
        let b = glauber_snapshots(&c).unwrap();
        assert_eq!(a, b);
        let mut other = c.clone();
        other.stream = 1;
        assert_ne!(glauber_snapshots(&other).unwrap(), a);
        glauber_run(&c, |s| {
            assert!(s.is_independent());
            assert_eq!(s.occupied().len() as u64, s.size());
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn start_states() {
        let mut c = cfg(3, 0, 0, 1);
        c.start = StartState::OddFull;
        let s = ChainState::new(&c).unwrap();
        assert_eq!((s.odd(), s.even()), (4, 0));
        assert!(s.is_independent());
        c.start = StartState::EvenFull;
        let s = ChainState::new(&c).unwrap();
        assert_eq!((s.odd(), s.even()), (0, 4));
    }

    #[test]
    fn bad_configs() {
        assert!(ChainState::new(&cfg(0, 10, 0, 1)).is_err());
        assert!(ChainState::new(&cfg(25, 10, 0, 1)).is_err());
        assert!(ChainState::new(&cfg(3, 10, 20, 1)).is_err());
        assert!(ChainState::new(&cfg(3, 10, 0, 0)).is_err());
        let mut c = cfg(3, 10, 0, 1);
        c.lambda = rat(-1, 2);
        assert!(ChainState::new(&c).is_err());
    }
}
