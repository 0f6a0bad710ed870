//! Counter-based substreams: one ChaCha20 stream per `(n, replicate, role)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::sample::{Sample, SeedProvenance};

pub const GENERATOR: &str = "chacha20";

/// Largest sample size representable in a stream id.
pub const MAX_N: usize = (1 << 24) - 1;
/// Largest replicate index representable in a stream id.
pub const MAX_REPLICATE: u64 = (1 << 39) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Signal,
    Error,
}

/// `n << 40 | replicate << 1 | role`; injective on the documented ranges.
pub fn stream_id(n: usize, replicate: u64, role: Role) -> Result<u64> {
    if n > MAX_N || replicate > MAX_REPLICATE {
        return Err(Error::Argument(format!(
            "stream key out of range (n = {n}, replicate = {replicate})"
        )));
    }
    let r = match role {
        Role::Signal => 0,
        Role::Error => 1,
    };
    Ok(((n as u64) << 40) | (replicate << 1) | r)
}

#[derive(Debug, Clone)]
pub struct Substream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl Substream {
    pub fn new(seed: u64, n: usize, replicate: u64, role: Role) -> Result<Self> {
        Ok(Self::from_stream(seed, stream_id(n, replicate, role)?))
    }

    pub fn from_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    pub fn provenance(&self) -> SeedProvenance {
        SeedProvenance {
            generator: GENERATOR.to_string(),
            seed: self.seed,
            stream: self.stream,
        }
    }
}

/// `n` draws from `spec`, tagged with the stream they came from.
pub fn sample_law(spec: &DensitySpec, n: usize, stream: &mut Substream) -> Result<Sample> {
    if n < 1 {
        return Err(Error::Argument("sample size must be at least 1".into()));
    }
    spec.validate()?;
    let values = spec.sample(n, stream.rng());
    Ok(Sample::new(values)?.with_provenance(stream.provenance()))
}

pub fn sample_signal(spec: &DensitySpec, n: usize, stream: &mut Substream) -> Result<Sample> {
    sample_law(spec, n, stream)
}

pub fn sample_error(spec: &DensitySpec, n: usize, stream: &mut Substream) -> Result<Sample> {
    sample_law(spec, n, stream)
}

/// `Y = X · U`.
pub fn sample_y(signal: &Sample, error: &Sample) -> Result<Sample> {
    Sample::product(signal.values(), error.values())
}

/// Signal and error draws for one replicate, from independent substreams.
pub fn draw_replicate(
    signal: &DensitySpec,
    error: &DensitySpec,
    seed: u64,
    n: usize,
    replicate: u64,
) -> Result<Sample> {
    let x = sample_signal(signal, n, &mut Substream::new(seed, n, replicate, Role::Signal)?)?;
    let u = sample_error(error, n, &mut Substream::new(seed, n, replicate, Role::Error)?)?;
    sample_y(&x, &u)
}
