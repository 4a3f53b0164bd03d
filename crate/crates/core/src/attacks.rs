//! Seeded models of the four subset attacks: addition, deletion,
//! alteration and selection.
//!
//! Every attack draws from [`SplitMix64`] in a fixed order, so a given
//! `(relation, spec)` pair always produces the same output.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Cell, ColumnKind, Decimal, Relation, TimeValue, Tuple};

/// SplitMix64: a Weyl-sequence state (`+= 0x9E3779B97F4A7C15`) passed
/// through a xor-shift/multiply finalizer.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GOLDEN);
        Self::mix(self.state)
    }

    /// Unbiased draw from `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// `k` distinct indices from `0..n`, ascending.
    pub fn choose(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    Add,
    Delete,
    Alter,
    Select,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [AttackKind::Add, AttackKind::Delete, AttackKind::Alter, AttackKind::Select];

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::Add => "ADD",
            AttackKind::Delete => "DELETE",
            AttackKind::Alter => "ALTER",
            AttackKind::Select => "SELECT",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "add" => Ok(AttackKind::Add),
            "delete" => Ok(AttackKind::Delete),
            "alter" => Ok(AttackKind::Alter),
            "select" => Ok(AttackKind::Select),
            _ => Err(Error::Config(format!("unknown attack `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AlterMode {
    #[default]
    Numeric,
    Time,
    Both,
}

impl AlterMode {
    fn numeric(self) -> bool {
        matches!(self, AlterMode::Numeric | AlterMode::Both)
    }

    fn time(self) -> bool {
        matches!(self, AlterMode::Time | AlterMode::Both)
    }
}

impl fmt::Display for AlterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlterMode::Numeric => "NUMERIC",
            AlterMode::Time => "TIME",
            AlterMode::Both => "BOTH",
        })
    }
}

impl FromStr for AlterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numeric" => Ok(AlterMode::Numeric),
            "time" => Ok(AlterMode::Time),
            "both" => Ok(AlterMode::Both),
            _ => Err(Error::Config(format!("unknown alter mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Intensity: share added, deleted, altered, or kept.
    pub fraction: f64,
    pub alter_mode: AlterMode,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind, fraction: f64, seed: u64) -> Self {
        AttackSpec {
            kind,
            fraction,
            alter_mode: AlterMode::default(),
            seed,
        }
    }

    pub fn with_alter_mode(self, alter_mode: AlterMode) -> Self {
        AttackSpec { alter_mode, ..self }
    }

    pub fn apply(&self, relation: &Relation) -> Result<Relation> {
        match self.kind {
            AttackKind::Add => attack_add(relation, self.fraction, self.seed),
            AttackKind::Delete => attack_delete(relation, self.fraction, self.seed),
            AttackKind::Alter => attack_alter(relation, self.fraction, self.alter_mode, self.seed),
            AttackKind::Select => attack_select(relation, self.fraction, self.seed),
        }
    }
}

fn count_for(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

fn check_unit(fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::InvalidFraction(fraction))
    }
}

/// Appends `round(fraction * n)` tuples with fresh keys and cell values
/// drawn from each column's observed range.
pub fn attack_add(relation: &Relation, fraction: f64, seed: u64) -> Result<Relation> {
    if !(fraction >= 0.0 && fraction.is_finite()) {
        return Err(Error::InvalidFraction(fraction));
    }
    let n = relation.len();
    let extra = count_for(fraction, n);
    let mut out = relation.clone();
    if extra == 0 {
        return Ok(out);
    }
    let mut rng = SplitMix64::new(seed);
    let mut keys = KeySource::new(relation);
    let columns = relation.columns();
    let ranges: Vec<Option<(i128, i128)>> = columns
        .iter()
        .enumerate()
        .map(|(c, col)| match col.kind {
            ColumnKind::Numeric { .. } => numeric_range(relation, c),
            _ => None,
        })
        .collect();
    let dated: Vec<Vec<usize>> = columns
        .iter()
        .enumerate()
        .map(|(c, _)| {
            (0..n)
                .filter(|&r| matches!(relation.tuples()[r].cells[c], Cell::DateTime(_)))
                .collect()
        })
        .collect();

    for _ in 0..extra {
        let mut cells = Vec::with_capacity(columns.len());
        for (c, col) in columns.iter().enumerate() {
            let cell = match col.kind {
                ColumnKind::Key => Cell::Text(keys.next()),
                ColumnKind::Numeric { scale } => match ranges[c] {
                    Some((lo, hi)) => {
                        let span = u64::try_from(hi - lo).unwrap_or(u64::MAX - 1);
                        let units = lo + i128::from(rng.below(span + 1));
                        Decimal::from_signed(units, scale).map_or(Cell::Null, Cell::Number)
                    }
                    None => Cell::Null,
                },
                ColumnKind::DateTime => {
                    if dated[c].is_empty() {
                        Cell::Null
                    } else {
                        let donor = dated[c][rng.below(dated[c].len() as u64) as usize];
                        let Cell::DateTime(mut dt) = relation.tuples()[donor].cells[c] else {
                            unreachable!()
                        };
                        let hh = rng.below(24) as u8;
                        let mm = rng.below(60) as u8;
                        let ss = rng.below(60) as u8;
                        dt.time = TimeValue::new(hh, mm, ss).expect("drawn within range");
                        Cell::DateTime(dt)
                    }
                }
                ColumnKind::Other => {
                    let donor = rng.below(n as u64) as usize;
                    relation.tuples()[donor].cells[c].clone()
                }
            };
            cells.push(cell);
        }
        out.push_unchecked(Tuple::new(cells));
    }
    Ok(out)
}

fn numeric_range(relation: &Relation, col: usize) -> Option<(i128, i128)> {
    relation
        .tuples()
        .iter()
        .filter_map(|t| match t.cells[col] {
            Cell::Number(d) => Some(d.signed_units()),
            _ => None,
        })
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

/// Fresh key values: the next integers after the current maximum when every
/// key is a plain non-negative integer, `add-<i>` otherwise.
struct KeySource {
    next_int: Option<u64>,
    counter: u64,
    taken: HashSet<String>,
}

impl KeySource {
    fn new(relation: &Relation) -> Self {
        let keys: Vec<&str> = (0..relation.len()).filter_map(|r| relation.pk(r)).collect();
        let ints: Option<Vec<u64>> = keys
            .iter()
            .map(|k| {
                k.bytes()
                    .all(|b| b.is_ascii_digit())
                    .then(|| k.parse::<u64>().ok())
                    .flatten()
            })
            .collect();
        let next_int = ints.and_then(|v| v.into_iter().max().unwrap_or(0).checked_add(1));
        KeySource {
            next_int,
            counter: 0,
            taken: keys.into_iter().map(str::to_string).collect(),
        }
    }

    fn next(&mut self) -> String {
        if let Some(k) = self.next_int {
            if let Some(after) = k.checked_add(1) {
                self.next_int = Some(after);
                return k.to_string();
            }
            self.next_int = None;
        }
        loop {
            self.counter += 1;
            let candidate = format!("add-{}", self.counter);
            if self.taken.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

/// Removes `round(fraction * n)` uniformly chosen tuples.
pub fn attack_delete(relation: &Relation, fraction: f64, seed: u64) -> Result<Relation> {
    check_unit(fraction)?;
    let n = relation.len();
    let doomed = SplitMix64::new(seed).choose(n, count_for(fraction, n));
    Ok(keep_rows(relation, complement(&doomed, n)))
}

/// Keeps `round(fraction * n)` uniformly chosen tuples in their original order.
pub fn attack_select(relation: &Relation, fraction: f64, seed: u64) -> Result<Relation> {
    if fraction == 0.0 {
        return Err(Error::EmptySelection);
    }
    check_unit(fraction)?;
    let n = relation.len();
    let kept = SplitMix64::new(seed).choose(n, count_for(fraction, n));
    Ok(keep_rows(relation, kept))
}

fn complement(sorted: &[usize], n: usize) -> Vec<usize> {
    let mut it = sorted.iter().peekable();
    (0..n)
        .filter(|i| {
            if it.peek() == Some(&i) {
                it.next();
                false
            } else {
                true
            }
        })
        .collect()
}

fn keep_rows(relation: &Relation, rows: Vec<usize>) -> Relation {
    let mut out = relation.empty_like();
    for r in rows {
        out.push_unchecked(relation.tuples()[r].clone());
    }
    out
}

/// Perturbs `round(fraction * n)` uniformly chosen tuples.
///
/// Numeric cells move by one unit at their scale in a random direction,
/// which always flips the LSB. Datetime cells get a uniform seconds value.
/// Keys and unmarked columns are left alone.
pub fn attack_alter(relation: &Relation, fraction: f64, mode: AlterMode, seed: u64) -> Result<Relation> {
    check_unit(fraction)?;
    let n = relation.len();
    let mut rng = SplitMix64::new(seed);
    let victims = rng.choose(n, count_for(fraction, n));
    let kinds: Vec<ColumnKind> = relation.columns().iter().map(|c| c.kind).collect();
    let mut out = relation.clone();
    let tuples = out.tuples_mut();
    for row in victims {
        for (cell, kind) in tuples[row].cells.iter_mut().zip(&kinds) {
            match (cell, kind) {
                (Cell::Number(d), ColumnKind::Numeric { .. }) if mode.numeric() => {
                    let step = if rng.coin() { 1 } else { -1 };
                    let units = d.signed_units();
                    *d = Decimal::from_signed(units + step, d.scale)
                        .or_else(|| Decimal::from_signed(units - step, d.scale))
                        .expect("one direction stays in range");
                }
                (Cell::DateTime(dt), ColumnKind::DateTime) if mode.time() => {
                    dt.time = dt.time.with_ss(rng.below(60) as u8);
                }
                _ => {}
            }
        }
    }
    Ok(out)
}
