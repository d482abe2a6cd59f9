//! Counter-addressed deterministic randomness.
//!
//! Every draw is a pure function of (master_seed, cycle_index, call_index),
//! never of wall clock, thread identity, or draw order across cycles. A cycle
//! evaluator is therefore a pure function of its stream, and batches over
//! cycle_index parallelize without coordination.

/// Mantissa bits used per uniform draw unless overridden.
pub const DEFAULT_BIT_WIDTH: u32 = 53;

const CYCLE_TAG: u64 = 0x9e37_79b9_7f4a_7c15;
const WORD_TAG: u64 = 0xd1b5_4a32_d192_ed03;
const DRAW_TAG: u64 = 0x2545_f491_4f6c_dd1d;

// splitmix64 finalizer; full-period bijection on u64.
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// One uniform variate in [0, 1), an exact multiple of 2^-bit_width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDraw {
    pub value: f64,
    pub bit_width: u32,
}

/// A value-type stream of uniforms addressed by (master_seed, cycle_index,
/// call_index). Copy it, fork it per cycle, use it concurrently: there is no
/// shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master_seed: u64,
    cycle_index: u64,
    call_index: u64,
    bit_width: u32,
    key: u64,
}

impl SeedStream {
    /// Stream for one regeneration cycle, positioned at call_index = 0.
    pub fn fork_cycle(master_seed: u64, cycle_index: u64) -> Self {
        let key = mix64(master_seed ^ mix64(cycle_index ^ CYCLE_TAG));
        SeedStream {
            master_seed,
            cycle_index,
            call_index: 0,
            bit_width: DEFAULT_BIT_WIDTH,
            key,
        }
    }

    /// Brute-force mode: the m-bit integer `seed_word` *is* the entire
    /// randomness tape. Enumerating 0..2^m yields exactly 2^m distinct
    /// streams, which is what exact amplitude computation iterates over.
    pub fn from_seed_word(seed_word: u64, bits_m: u32) -> Self {
        assert!(bits_m >= 1 && bits_m <= 64, "seed word width out of range");
        let mask = if bits_m == 64 { u64::MAX } else { (1u64 << bits_m) - 1 };
        let word = seed_word & mask;
        let key = mix64(word ^ WORD_TAG);
        SeedStream {
            master_seed: word,
            cycle_index: 0,
            call_index: 0,
            bit_width: DEFAULT_BIT_WIDTH,
            key,
        }
    }

    pub fn with_bit_width(mut self, bit_width: u32) -> Self {
        assert!(bit_width >= 1 && bit_width <= 53);
        self.bit_width = bit_width;
        self
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn cycle_index(&self) -> u64 {
        self.cycle_index
    }

    /// Number of draws consumed so far (the j of the next draw is this + 1).
    pub fn call_index(&self) -> u64 {
        self.call_index
    }

    /// The j-th uniform of this stream without consuming anything.
    pub fn peek_at(&self, j: u64) -> f64 {
        let bits = mix64(self.key ^ j.wrapping_mul(DRAW_TAG));
        (bits >> (64 - self.bit_width)) as f64 / (1u64 << self.bit_width) as f64
    }

    /// Draw the next uniform; increments call_index by exactly 1.
    pub fn draw_uniform(&mut self) -> UniformDraw {
        self.call_index += 1;
        UniformDraw {
            value: self.peek_at(self.call_index),
            bit_width: self.bit_width,
        }
    }

    /// Convenience: the value of the next draw.
    pub fn draw_f64(&mut self) -> f64 {
        self.draw_uniform().value
    }
}
