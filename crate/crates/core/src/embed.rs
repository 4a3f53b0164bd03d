//! Watermark insertion: numeric LSBs (channel 1) and datetime seconds
//! fields (channel 2), both on the tuples picked by `k1`.

use crate::codec::{bit_index, encode_ss};
use crate::error::Result;
use crate::model::{is_selected, pk_to_int, Cell, MarkConfig, Relation, SecretKeys, WatermarkBits};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmbedStats {
    /// Carrier cells per watermark bit in channel 1.
    pub channel1_carriers: Vec<usize>,
    /// Carrier cells per watermark bit in channel 2.
    pub channel2_carriers: Vec<usize>,
    /// Tuples picked by `k1`.
    pub marked_tuples: usize,
    /// Cells whose value actually changed.
    pub modified_cells: usize,
}

impl EmbedStats {
    fn empty(len: usize) -> Self {
        EmbedStats {
            channel1_carriers: vec![0; len],
            channel2_carriers: vec![0; len],
            marked_tuples: 0,
            modified_cells: 0,
        }
    }

    /// Combines the stats of the two phases run over the same relation.
    pub fn merge(mut self, other: &EmbedStats) -> EmbedStats {
        let add = |a: &mut Vec<usize>, b: &[usize]| {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        };
        add(&mut self.channel1_carriers, &other.channel1_carriers);
        add(&mut self.channel2_carriers, &other.channel2_carriers);
        self.marked_tuples = self.marked_tuples.max(other.marked_tuples);
        self.modified_cells += other.modified_cells;
        self
    }

    /// Bit indices with no carrier in either channel.
    pub fn uncovered_bits(&self) -> Vec<usize> {
        self.channel1_carriers
            .iter()
            .zip(&self.channel2_carriers)
            .enumerate()
            .filter(|(_, (a, b))| **a == 0 && **b == 0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Visits every tuple picked by `k1` with its assigned watermark position.
pub(crate) fn for_each_selected<F>(relation: &Relation, key: usize, k1: u8, len: usize, mut f: F)
where
    F: FnMut(usize, usize),
{
    for (row, tuple) in relation.tuples().iter().enumerate() {
        let Cell::Text(pk) = &tuple.cells[key] else {
            continue;
        };
        let pk = pk_to_int(pk);
        if is_selected(pk, k1) {
            f(row, bit_index(pk, k1, len));
        }
    }
}

pub fn embed_phase1(
    relation: &Relation,
    keys: &SecretKeys,
    wm: &WatermarkBits,
    config: &MarkConfig,
) -> Result<(Relation, EmbedStats)> {
    let key = relation.require_key(config)?;
    let columns = config
        .numeric_columns()
        .iter()
        .map(|(name, scale)| relation.numeric_index(name, *scale))
        .collect::<Result<Vec<_>>>()?;

    let mut out = relation.clone();
    let mut stats = EmbedStats::empty(wm.len());
    let mut targets = Vec::new();
    for_each_selected(relation, key, keys.k1(), wm.len(), |row, bit| targets.push((row, bit)));
    stats.marked_tuples = targets.len();

    let tuples = out.tuples_mut();
    for (row, bit) in targets {
        let value = wm.bit(bit);
        for &col in &columns {
            if let Cell::Number(d) = &mut tuples[row].cells[col] {
                stats.channel1_carriers[bit] += 1;
                let marked = d.with_lsb(value);
                if marked != *d {
                    *d = marked;
                    stats.modified_cells += 1;
                }
            }
        }
    }
    Ok((out, stats))
}

pub fn embed_phase2(
    relation: &Relation,
    keys: &SecretKeys,
    wm: &WatermarkBits,
    config: &MarkConfig,
) -> Result<(Relation, EmbedStats)> {
    let key = relation.require_key(config)?;
    let columns = config
        .datetime_columns()
        .iter()
        .map(|name| relation.datetime_index(name))
        .collect::<Result<Vec<_>>>()?;

    let mut out = relation.clone();
    let mut stats = EmbedStats::empty(wm.len());
    let mut targets = Vec::new();
    for_each_selected(relation, key, keys.k1(), wm.len(), |row, bit| targets.push((row, bit)));
    stats.marked_tuples = targets.len();

    let k1 = keys.k1();
    let tuples = out.tuples_mut();
    for (row, bit) in targets {
        let ss = encode_ss(wm.bit(bit), keys.k2());
        for &col in &columns {
            if let Cell::DateTime(dt) = &mut tuples[row].cells[col] {
                if dt.time.mm() % k1 != 0 {
                    continue;
                }
                stats.channel2_carriers[bit] += 1;
                if dt.time.ss() != ss {
                    dt.time = dt.time.with_ss(ss);
                    stats.modified_cells += 1;
                }
            }
        }
    }
    Ok((out, stats))
}

/// Runs channel 1 then channel 2 (each only if configured).
///
/// Watermark positions left without any carrier are logged as a warning
/// and listed by [`EmbedStats::uncovered_bits`].
pub fn embed(
    relation: &Relation,
    keys: &SecretKeys,
    wm: &WatermarkBits,
    config: &MarkConfig,
) -> Result<(Relation, EmbedStats)> {
    let mut current = relation.clone();
    let mut stats = EmbedStats::empty(wm.len());
    if config.channel1_enabled() {
        let (out, s) = embed_phase1(&current, keys, wm, config)?;
        current = out;
        stats = stats.merge(&s);
    }
    if config.channel2_enabled() {
        let (out, s) = embed_phase2(&current, keys, wm, config)?;
        current = out;
        stats = stats.merge(&s);
    }
    let uncovered = stats.uncovered_bits();
    if !uncovered.is_empty() {
        log::warn!(
            "{} of {} watermark bits have no carrier: {:?}",
            uncovered.len(),
            wm.len(),
            uncovered
        );
    }
    Ok((current, stats))
}
