//! Blind watermarking for relational tables.
//!
//! A binary image is embedded twice: in the least significant bit of
//! numeric attributes and in the seconds field of datetime attributes, on
//! the tuples whose key is a multiple of the owner's `k1`. Extraction needs
//! only the keys and the watermark size. The [`attacks`] and [`bench`]
//! modules measure how much of the mark survives subset attacks.

pub mod attacks;
pub mod bench;
pub mod cli;
pub mod codec;
pub mod embed;
pub mod error;
pub mod extract;
pub mod model;
pub mod pbm;

pub use codec::ChannelBit;
pub use embed::{embed, EmbedStats};
pub use error::{Error, Result};
pub use extract::{fuse_and_match, recover, verify, RecoveryReport};
pub use model::{MarkConfig, Relation, SecretKeys, WatermarkBits};
