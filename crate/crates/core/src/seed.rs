//! Counter-based seeding: every random draw is a pure function of
//! `(master_seed, stream, trial)`, so trials can run in any order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Purpose tag of a random stream. Different purposes within the same trial
/// never share random bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Matrix,
    Dither,
    Noise,
    Signal,
    Corruption,
    Width,
    Net,
    Search,
    Probe,
    Pairs,
    Custom(u32),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Matrix => 1,
            Stream::Dither => 2,
            Stream::Noise => 3,
            Stream::Signal => 4,
            Stream::Corruption => 5,
            Stream::Width => 6,
            Stream::Net => 7,
            Stream::Search => 8,
            Stream::Probe => 9,
            Stream::Pairs => 10,
            Stream::Custom(k) => 0x1_0000_0000 + u64::from(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master_seed: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent generator for `(stream, trial)`.
    ///
    /// The ChaCha key is derived from the master seed and the stream tag; the
    /// trial index selects the ChaCha stream, so child generators are
    /// independent without any sequential state.
    pub fn rng(&self, stream: Stream, trial: u64) -> ChaCha8Rng {
        let key = splitmix64(self.master_seed ^ splitmix64(stream.tag()));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(trial);
        rng
    }

    /// Derives a child plan, e.g. one per sweep cell.
    pub fn child(&self, index: u64) -> SeedPlan {
        SeedPlan::new(splitmix64(self.master_seed.wrapping_add(splitmix64(index ^ 0x5eed))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
