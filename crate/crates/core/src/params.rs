//! Accuracy parameters and the per-scale level layout they imply.
//!
//! Every weight is a power of two `2^e` with `e >= 0`, so levels are
//! addressed by weight exponent. `eps = 2^-a`.

/// Constant-probability or high-probability parameterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    Constant,
    /// `q = log2 log2(1/delta)`, at least 1.
    HighProb { q: u32 },
}

/// Multiplier `c` in the high-probability constants.
pub const HIGH_PROB_C: u64 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Params {
    /// `a` with `eps = 2^-a`.
    pub eps_log2: u32,
    pub mode: Mode,
}

/// Where the levels of one hierarchy sit on the weight axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layout {
    /// Block size of every compactor.
    pub k: usize,
    /// Weight exponent of compactor 0; also the sampling shift (keys are
    /// kept with probability `2^-base_exp`).
    pub base_exp: u32,
    /// Number of compactors. The buffer has exponent `base_exp + levels`.
    pub levels: usize,
    pub buffer_cap: usize,
}

impl Layout {
    pub fn buffer_exp(&self) -> u32 {
        self.base_exp + self.levels as u32
    }

    pub fn weight(&self, level: usize) -> u64 {
        1u64 << (self.base_exp + level as u32)
    }
}

impl Params {
    pub fn constant(eps_log2: u32) -> Self {
        Self {
            eps_log2,
            mode: Mode::Constant,
        }
    }

    /// High-probability mode for failure probability `2^-delta_log2`.
    ///
    /// `log2(1/delta)` is rounded up to a power of two so that
    /// `log log(1/delta)` is an integer.
    pub fn high_prob(eps_log2: u32, delta_log2: u32) -> Self {
        let m = delta_log2.max(2).next_power_of_two();
        Self {
            eps_log2,
            mode: Mode::HighProb {
                q: m.trailing_zeros(),
            },
        }
    }

    pub fn inv_eps(&self) -> u64 {
        1u64 << self.eps_log2
    }

    /// Keys per staging batch.
    pub fn batch_size(&self) -> usize {
        1usize << self.eps_log2
    }

    /// Block size of every compactor.
    pub fn block_size(&self) -> usize {
        match self.mode {
            Mode::Constant => (self.inv_eps() as usize).max(2),
            Mode::HighProb { q } => (HIGH_PROB_C * u64::from(q * q) * self.inv_eps()) as usize,
        }
    }

    /// Factor applied to the bracketed term of the space rule.
    pub fn space_unit(&self) -> u64 {
        match self.mode {
            Mode::Constant => self.inv_eps(),
            Mode::HighProb { q } => self.block_size() as u64 * u64::from(q),
        }
    }

    /// Layout of the sub-sketch at `scale`, with `R = 2^(a + scale)`.
    pub fn scale_layout(&self, scale: u32) -> Layout {
        self.layout(self.eps_log2 + scale, false)
    }

    /// Layout of a hierarchy with horizon `R = 2^r_log2`. `standalone`
    /// selects the discarding buffer of the top-R problem.
    pub fn layout(&self, r_log2: u32, standalone: bool) -> Layout {
        let a = self.eps_log2 as i64;
        let r = r_log2 as i64;
        let k = self.block_size();
        // Weight exponent of level 0 and the number of levels.
        let (base, count, cap) = match self.mode {
            Mode::Constant => {
                let inv = self.inv_eps() as usize;
                let cap = if standalone { inv } else { 3 * inv };
                (r - 2 * a, a, cap)
            }
            Mode::HighProb { q } => {
                let q = i64::from(q);
                let two_log_q = 2 * (63 - (q as u64).leading_zeros() as i64);
                let h = q + a - two_log_q;
                let cap = if standalone { k } else { 3 * k };
                (r - 2 * a - 7 - q, h, cap)
            }
        };
        let buffer = base + count;
        if buffer <= 0 {
            // Weights would drop below one: store every key exactly.
            let cap = if standalone { 1usize << r } else { 3usize << r };
            return Layout {
                k,
                base_exp: 0,
                levels: 0,
                buffer_cap: cap,
            };
        }
        let base_exp = base.max(0);
        Layout {
            k,
            base_exp: base_exp as u32,
            levels: (buffer - base_exp) as usize,
            buffer_cap: cap,
        }
    }

    /// `log2 log2(1/delta)` in high-probability mode, 1 otherwise.
    pub fn q(&self) -> u64 {
        match self.mode {
            Mode::Constant => 1,
            Mode::HighProb { q } => u64::from(q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_layouts() {
        let p = Params::constant(4);
        let l0 = p.scale_layout(0);
        assert_eq!((l0.levels, l0.buffer_exp(), l0.buffer_cap), (0, 0, 48));
        let l1 = p.scale_layout(1);
        assert_eq!((l1.base_exp, l1.levels, l1.buffer_exp()), (0, 1, 1));
        let l6 = p.scale_layout(6);
        assert_eq!((l6.base_exp, l6.levels, l6.buffer_exp()), (2, 4, 6));
        assert_eq!(l6.buffer_cap, 48);
    }

    #[test]
    fn degenerate_eps_one() {
        let p = Params::constant(0);
        assert_eq!(p.block_size(), 2);
        let l = p.layout(0, true);
        assert_eq!((l.base_exp, l.levels, l.buffer_exp()), (0, 0, 0));
    }

    #[test]
    fn high_prob_buffer_weight_covers_cap() {
        for a in 1..6 {
            for d in [2u32, 4, 8, 16, 32] {
                let p = Params::high_prob(a, d);
                for scale in 0..20 {
                    let l = p.scale_layout(scale);
                    let r = 1u128 << (a + scale);
                    let covered = l.buffer_cap as u128 * (1u128 << l.buffer_exp());
                    assert!(covered >= 3 * r, "a={a} d={d} scale={scale}");
                }
            }
        }
    }
}
