//! Blind extraction. Everything here reads only the suspect relation, the
//! keys, the column roles and the watermark length; the original watermark
//! enters only as the scoring input of [`fuse_and_match`].

use crate::codec::{decode_ss, ChannelBit};
use crate::embed::for_each_selected;
use crate::error::{Error, Result};
use crate::model::{Cell, MarkConfig, Relation, SecretKeys, WatermarkBits};

/// Running vote count for one watermark position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VoteTally {
    pub ones: u32,
    pub zeros: u32,
}

impl VoteTally {
    pub fn cast(&mut self, bit: bool) {
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
    }

    pub fn merge(self, other: VoteTally) -> VoteTally {
        VoteTally {
            ones: self.ones + other.ones,
            zeros: self.zeros + other.zeros,
        }
    }

    /// Strict majority; ties and empty tallies are erased.
    pub fn resolve(self) -> ChannelBit {
        use std::cmp::Ordering::*;
        match self.ones.cmp(&self.zeros) {
            Greater => ChannelBit::One,
            Less => ChannelBit::Zero,
            Equal => ChannelBit::Erased,
        }
    }
}

pub fn majority(votes: &[bool]) -> ChannelBit {
    votes
        .iter()
        .fold(VoteTally::default(), |mut t, &b| {
            t.cast(b);
            t
        })
        .resolve()
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        Err(Error::EmptyWatermark)
    } else {
        Ok(())
    }
}

pub fn extract_phase1(
    relation: &Relation,
    keys: &SecretKeys,
    config: &MarkConfig,
    len: usize,
) -> Result<Vec<ChannelBit>> {
    check_len(len)?;
    if !config.channel1_enabled() {
        return Ok(vec![ChannelBit::Erased; len]);
    }
    let key = relation.require_key(config)?;
    let columns = config
        .numeric_columns()
        .iter()
        .map(|(name, scale)| relation.numeric_index(name, *scale))
        .collect::<Result<Vec<_>>>()?;
    let mut tallies = vec![VoteTally::default(); len];
    let tuples = relation.tuples();
    for_each_selected(relation, key, keys.k1(), len, |row, bit| {
        for &col in &columns {
            if let Cell::Number(d) = &tuples[row].cells[col] {
                tallies[bit].cast(d.lsb());
            }
        }
    });
    Ok(tallies.into_iter().map(VoteTally::resolve).collect())
}

pub fn extract_phase2(
    relation: &Relation,
    keys: &SecretKeys,
    config: &MarkConfig,
    len: usize,
) -> Result<Vec<ChannelBit>> {
    check_len(len)?;
    if !config.channel2_enabled() {
        return Ok(vec![ChannelBit::Erased; len]);
    }
    let key = relation.require_key(config)?;
    let columns = config
        .datetime_columns()
        .iter()
        .map(|name| relation.datetime_index(name))
        .collect::<Result<Vec<_>>>()?;
    let (k1, k2) = (keys.k1(), keys.k2());
    let mut tallies = vec![VoteTally::default(); len];
    let tuples = relation.tuples();
    for_each_selected(relation, key, k1, len, |row, bit| {
        for &col in &columns {
            if let Cell::DateTime(dt) = &tuples[row].cells[col] {
                if dt.time.mm() % k1 != 0 {
                    continue;
                }
                if let Some(b) = decode_ss(dt.time.ss(), k2).as_bool() {
                    tallies[bit].cast(b);
                }
            }
        }
    });
    Ok(tallies.into_iter().map(VoteTally::resolve).collect())
}

/// Per-channel extraction result for a suspect relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub wm1: Vec<ChannelBit>,
    pub wm2: Vec<ChannelBit>,
}

impl Extraction {
    pub fn run(relation: &Relation, keys: &SecretKeys, config: &MarkConfig, len: usize) -> Result<Self> {
        Ok(Extraction {
            wm1: extract_phase1(relation, keys, config, len)?,
            wm2: extract_phase2(relation, keys, config, len)?,
        })
    }

    /// Blind estimate: channel 2 first (key-verified), then channel 1,
    /// then 0.
    pub fn recovered(&self) -> Vec<bool> {
        recover_bits(&self.wm1, &self.wm2)
    }
}

fn recover_bits(wm1: &[ChannelBit], wm2: &[ChannelBit]) -> Vec<bool> {
    wm1.iter()
        .zip(wm2)
        .map(|(a, b)| b.as_bool().or(a.as_bool()).unwrap_or(false))
        .collect()
}

pub fn recover(relation: &Relation, keys: &SecretKeys, config: &MarkConfig, len: usize) -> Result<Vec<bool>> {
    Ok(Extraction::run(relation, keys, config, len)?.recovered())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub len: usize,
    pub wm1: Vec<ChannelBit>,
    pub wm2: Vec<ChannelBit>,
    pub recovered: Vec<bool>,
    pub matchcount: usize,
    pub totalcount: usize,
    /// Percent, `100 * matchcount / totalcount`.
    pub rate: f64,
}

impl RecoveryReport {
    /// Positions with a definite (non-erased) bit in channel 1.
    pub fn channel1_coverage(&self) -> usize {
        self.wm1.iter().filter(|b| !b.is_erased()).count()
    }

    pub fn channel2_coverage(&self) -> usize {
        self.wm2.iter().filter(|b| !b.is_erased()).count()
    }

    pub fn is_exact(&self) -> bool {
        self.matchcount == self.totalcount
    }
}

/// A position counts as matched when either channel reproduces the owner's
/// bit there. Erased positions never match.
pub fn fuse_and_match(wm: &WatermarkBits, wm1: &[ChannelBit], wm2: &[ChannelBit]) -> Result<RecoveryReport> {
    for actual in [wm1.len(), wm2.len()] {
        if actual != wm.len() {
            return Err(Error::LengthMismatch {
                expected: wm.len(),
                actual,
            });
        }
    }
    let matchcount = wm
        .bits()
        .iter()
        .zip(wm1.iter().zip(wm2))
        .filter(|(&w, (a, b))| a.matches(w) || b.matches(w))
        .count();
    let totalcount = wm.len();
    Ok(RecoveryReport {
        len: totalcount,
        wm1: wm1.to_vec(),
        wm2: wm2.to_vec(),
        recovered: recover_bits(wm1, wm2),
        matchcount,
        totalcount,
        rate: 100.0 * matchcount as f64 / totalcount as f64,
    })
}

/// Extraction followed by scoring against the owner's watermark.
pub fn verify(relation: &Relation, keys: &SecretKeys, config: &MarkConfig, wm: &WatermarkBits) -> Result<RecoveryReport> {
    let ex = Extraction::run(relation, keys, config, wm.len())?;
    fuse_and_match(wm, &ex.wm1, &ex.wm2)
}
