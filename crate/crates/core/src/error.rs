use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A constructor argument is outside its documented range.
    InvalidParameter(&'static str),
    /// The progress measure of a compactor would reach 1.
    CapacityExhausted,
    /// A block index outside `1..=block_count`.
    BlockOutOfRange { start: usize, blocks: usize },
    /// A batch larger than the compactor's current capacity.
    BatchTooLarge { len: usize, capacity: usize },
    /// Removal from an empty structure.
    Empty,
    /// The operation needs instrumentation that was not enabled.
    InstrumentationDisabled,
    /// A migrated key carries a weight the receiving scale has no level for.
    WeightNotRepresentable { exp: u32 },
    /// An interval potential does not fit in 128 bits.
    PotentialOverflow,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::CapacityExhausted => f.write_str("capacity exhausted: progress measure reached 1"),
            Error::BlockOutOfRange { start, blocks } => {
                write!(f, "start block {start} outside 1..={blocks}")
            }
            Error::BatchTooLarge { len, capacity } => {
                write!(f, "batch of {len} keys exceeds capacity {capacity}")
            }
            Error::Empty => f.write_str("structure is empty"),
            Error::InstrumentationDisabled => f.write_str("instrumentation is disabled"),
            Error::WeightNotRepresentable { exp } => {
                write!(f, "no level for weight 2^{exp}")
            }
            Error::PotentialOverflow => f.write_str("interval potential overflowed"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
