//! Counter-based keyed randomness: every draw is a pure function of its key.

pub const STREAM_FIELD: u64 = 0x4649_454c_44;
pub const STREAM_CFTP: u64 = 0x4346_5450;
pub const STREAM_COUPLING: u64 = 0x434f_5550;
pub const STREAM_AUX: u64 = 0x4155_58;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of a word sequence; distinct sequences give independent-looking outputs.
#[inline]
pub fn key(words: &[u64]) -> u64 {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for &w in words {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix64(w));
    }
    h
}

/// Uniform in the open interval (0, 1) from the top 53 bits.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn site_word(x: i32, y: i32) -> u64 {
    ((x as u32 as u64) << 32) | (y as u32 as u64)
}

/// Uniform draw keyed by `(seed, stream, a, b)`.
#[inline]
pub fn uniform(seed: u64, stream: u64, a: u64, b: u64) -> f64 {
    unit_open(key(&[seed, stream, a, b]))
}

/// Child seed for task `index` under `tag`.
#[inline]
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    key(&[seed, STREAM_AUX, tag, index])
}

/// Sequential generator over a keyed counter, for auxiliary randomness.
#[derive(Clone, Debug)]
pub struct KeyedRng {
    seed: u64,
    counter: u64,
}

impl KeyedRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        key(&[self.seed, STREAM_AUX, self.counter])
    }

    pub fn uniform(&mut self) -> f64 {
        unit_open(self.next_u64())
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}
