//! Domain types: owner keys, the watermark bitstring, column roles, and the
//! in-memory relation the two channels operate on.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Owner secrets. `k1` picks the carrier tuples (and gates datetime cells
/// on their minute field); `k2` is the nibble stored next to each
/// seconds-field bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretKeys {
    k1: u8,
    k2: u8,
}

impl SecretKeys {
    pub const K1_MAX: i64 = 31;
    pub const K2_MAX: i64 = 15;

    pub fn new(k1: i64, k2: i64) -> Result<Self> {
        if !(1..=Self::K1_MAX).contains(&k1) {
            return Err(Error::InvalidK1(k1));
        }
        if !(0..=Self::K2_MAX).contains(&k2) {
            return Err(Error::InvalidK2(k2));
        }
        Ok(SecretKeys {
            k1: k1 as u8,
            k2: k2 as u8,
        })
    }

    pub fn k1(&self) -> u8 {
        self.k1
    }

    pub fn k2(&self) -> u8 {
        self.k2
    }
}

/// A binary image flattened row-major into `width * height` bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WatermarkBits {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl WatermarkBits {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        let expected = width
            .checked_mul(height)
            .ok_or(Error::DimensionMismatch {
                width,
                height,
                expected: usize::MAX,
                actual: bits.len(),
            })?;
        if expected == 0 {
            return Err(Error::EmptyWatermark);
        }
        if bits.len() != expected {
            return Err(Error::DimensionMismatch {
                width,
                height,
                expected,
                actual: bits.len(),
            });
        }
        Ok(WatermarkBits {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Bit count `L`.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, index: usize) -> bool {
        self.bits[index]
    }
}

/// Which columns take part in each channel.
///
/// Channel 1 is enabled when `numeric_columns` is non-empty, channel 2 when
/// `datetime_columns` is non-empty. At least one must be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkConfig {
    pk_column: String,
    numeric_columns: Vec<(String, u32)>,
    datetime_columns: Vec<String>,
}

impl MarkConfig {
    pub fn new(
        pk_column: impl Into<String>,
        numeric_columns: Vec<(String, u32)>,
        datetime_columns: Vec<String>,
    ) -> Result<Self> {
        let pk_column = pk_column.into();
        if pk_column.is_empty() {
            return Err(Error::InvalidMarkConfig("empty primary-key column name".into()));
        }
        if numeric_columns.is_empty() && datetime_columns.is_empty() {
            return Err(Error::InvalidMarkConfig(
                "no channel enabled: configure numeric and/or datetime columns".into(),
            ));
        }
        let mut seen = HashSet::new();
        seen.insert(pk_column.as_str());
        let names = numeric_columns
            .iter()
            .map(|(n, _)| n.as_str())
            .chain(datetime_columns.iter().map(String::as_str));
        for name in names {
            if name.is_empty() {
                return Err(Error::InvalidMarkConfig("empty column name".into()));
            }
            if !seen.insert(name) {
                return Err(Error::InvalidMarkConfig(format!(
                    "column `{name}` is listed more than once"
                )));
            }
        }
        if let Some((name, scale)) = numeric_columns.iter().find(|(_, d)| *d > MAX_SCALE) {
            return Err(Error::InvalidMarkConfig(format!(
                "column `{name}`: scale {scale} exceeds {MAX_SCALE}"
            )));
        }
        Ok(MarkConfig {
            pk_column,
            numeric_columns,
            datetime_columns,
        })
    }

    pub fn pk_column(&self) -> &str {
        &self.pk_column
    }

    pub fn numeric_columns(&self) -> &[(String, u32)] {
        &self.numeric_columns
    }

    pub fn datetime_columns(&self) -> &[String] {
        &self.datetime_columns
    }

    pub fn channel1_enabled(&self) -> bool {
        !self.numeric_columns.is_empty()
    }

    pub fn channel2_enabled(&self) -> bool {
        !self.datetime_columns.is_empty()
    }

    /// Same roles, different key column. Used after an auto key is added.
    pub fn with_pk_column(&self, pk_column: impl Into<String>) -> Self {
        MarkConfig {
            pk_column: pk_column.into(),
            ..self.clone()
        }
    }

    pub fn kind_of(&self, column: &str) -> ColumnKind {
        if column == self.pk_column {
            ColumnKind::Key
        } else if let Some((_, scale)) = self.numeric_columns.iter().find(|(n, _)| n == column) {
            ColumnKind::Numeric { scale: *scale }
        } else if self.datetime_columns.iter().any(|n| n == column) {
            ColumnKind::DateTime
        } else {
            ColumnKind::Other
        }
    }
}

/// Largest supported decimal scale; 10^18 still fits a u64.
pub const MAX_SCALE: u32 = 18;

/// A fixed-point number: sign plus `units` at `scale` decimal places.
///
/// The sign is kept apart from the magnitude so `-0.00` survives a round
/// trip and the LSB is always taken of the magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    pub negative: bool,
    pub units: u64,
    pub scale: u32,
}

impl Decimal {
    pub fn new(negative: bool, units: u64, scale: u32) -> Self {
        Decimal {
            negative,
            units,
            scale,
        }
    }

    pub fn from_signed(units: i128, scale: u32) -> Option<Self> {
        let magnitude = u64::try_from(units.unsigned_abs()).ok()?;
        Some(Decimal::new(units < 0, magnitude, scale))
    }

    pub fn signed_units(&self) -> i128 {
        let m = self.units as i128;
        if self.negative {
            -m
        } else {
            m
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.signed_units() as f64 / 10f64.powi(self.scale as i32)
    }

    /// Parses `[+-]digits[.digits]` at a fixed scale, rounding extra
    /// fractional digits half away from zero.
    pub fn parse(text: &str, scale: u32) -> std::result::Result<Self, String> {
        let text = text.trim();
        let (negative, body) = match text.as_bytes().first() {
            Some(b'-') => (true, &text[1..]),
            Some(b'+') => (false, &text[1..]),
            _ => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err("no digits".into());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err("not a decimal number".into());
        }
        let overflow = || "value too large".to_string();
        let mut units: u64 = 0;
        let frac = frac_part.as_bytes();
        let digits = int_part
            .bytes()
            .chain((0..scale as usize).map(|i| frac.get(i).copied().unwrap_or(b'0')));
        for b in digits {
            units = units
                .checked_mul(10)
                .and_then(|u| u.checked_add(u64::from(b - b'0')))
                .ok_or_else(overflow)?;
        }
        if frac.get(scale as usize).is_some_and(|&b| b >= b'5') {
            units = units.checked_add(1).ok_or_else(overflow)?;
        }
        Ok(Decimal::new(negative, units, scale))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        if self.scale == 0 {
            return write!(f, "{}", self.units);
        }
        let digits = format!("{:0>width$}", self.units, width = self.scale as usize + 1);
        let split = digits.len() - self.scale as usize;
        write!(f, "{}.{}", &digits[..split], &digits[split..])
    }
}

/// Clock part of a datetime cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeValue {
    hh: u8,
    mm: u8,
    ss: u8,
}

impl TimeValue {
    pub fn new(hh: u8, mm: u8, ss: u8) -> Option<Self> {
        (hh <= 23 && mm <= 59 && ss <= 59).then_some(TimeValue { hh, mm, ss })
    }

    pub fn hh(&self) -> u8 {
        self.hh
    }

    pub fn mm(&self) -> u8 {
        self.mm
    }

    pub fn ss(&self) -> u8 {
        self.ss
    }

    pub fn with_ss(self, ss: u8) -> Self {
        assert!(ss <= 59, "seconds out of range: {ss}");
        TimeValue { ss, ..self }
    }
}

/// Gregorian calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Date {
    pub year: u16,
    pub month: u8,
    pub day: u8,
}

impl Date {
    pub fn new(year: u16, month: u8, day: u8) -> Option<Self> {
        if year > 9999 || !(1..=12).contains(&month) || day == 0 {
            return None;
        }
        let leap = (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400);
        let days = match month {
            2 if leap => 29,
            2 => 28,
            4 | 6 | 9 | 11 => 30,
            _ => 31,
        };
        (day <= days).then_some(Date { year, month, day })
    }
}

/// `YYYY-MM-DD HH:MM:SS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateTime {
    pub date: Date,
    pub time: TimeValue,
}

impl DateTime {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let b = text.trim().as_bytes();
        let shape_ok = b.len() == 19
            && b.iter().enumerate().all(|(i, c)| match i {
                4 | 7 => *c == b'-',
                10 => *c == b' ',
                13 | 16 => *c == b':',
                _ => c.is_ascii_digit(),
            });
        if !shape_ok {
            return Err("expected YYYY-MM-DD HH:MM:SS".into());
        }
        let num = |r: std::ops::Range<usize>| {
            b[r].iter()
                .fold(0u16, |acc, c| acc * 10 + u16::from(c - b'0'))
        };
        let date = Date::new(num(0..4), num(5..7) as u8, num(8..10) as u8)
            .ok_or_else(|| "invalid calendar date".to_string())?;
        let time = TimeValue::new(num(11..13) as u8, num(14..16) as u8, num(17..19) as u8)
            .ok_or_else(|| "time field out of range".to_string())?;
        Ok(DateTime { date, time })
    }
}

impl fmt::Display for DateTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02} {:02}:{:02}:{:02}",
            self.date.year,
            self.date.month,
            self.date.day,
            self.time.hh,
            self.time.mm,
            self.time.ss
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Key,
    Numeric { scale: u32 },
    DateTime,
    Other,
}

impl ColumnKind {
    fn name(&self) -> &'static str {
        match self {
            ColumnKind::Key => "key",
            ColumnKind::Numeric { .. } => "numeric",
            ColumnKind::DateTime => "datetime",
            ColumnKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column {
            name: name.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Null,
    Text(String),
    Number(Decimal),
    DateTime(DateTime),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    fn fits(&self, kind: ColumnKind) -> bool {
        match (self, kind) {
            (Cell::Null, _) => true,
            (Cell::Text(_), ColumnKind::Key | ColumnKind::Other) => true,
            (Cell::Number(d), ColumnKind::Numeric { scale }) => d.scale == scale,
            (Cell::DateTime(_), ColumnKind::DateTime) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Null => Ok(()),
            Cell::Text(s) => f.write_str(s),
            Cell::Number(d) => d.fmt(f),
            Cell::DateTime(dt) => dt.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tuple {
    pub cells: Vec<Cell>,
}

impl Tuple {
    pub fn new(cells: Vec<Cell>) -> Self {
        Tuple { cells }
    }
}

/// A table: typed column schema plus tuples in file order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    columns: Vec<Column>,
    tuples: Vec<Tuple>,
}

impl Relation {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut names = HashSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        if columns.iter().filter(|c| c.kind == ColumnKind::Key).count() > 1 {
            return Err(Error::Schema("more than one key column".into()));
        }
        Ok(Relation {
            columns,
            tuples: Vec::new(),
        })
    }

    /// Builds the column schema for a header row from the configured roles.
    pub fn from_header<S: AsRef<str>>(header: &[S], config: &MarkConfig) -> Result<Self> {
        let columns = header
            .iter()
            .map(|name| Column::new(name.as_ref(), config.kind_of(name.as_ref())))
            .collect();
        Relation::new(columns)
    }

    pub fn push(&mut self, tuple: Tuple) -> Result<()> {
        if tuple.cells.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "tuple has {} cells, schema has {} columns",
                tuple.cells.len(),
                self.columns.len()
            )));
        }
        if let Some((cell, col)) = tuple
            .cells
            .iter()
            .zip(&self.columns)
            .find(|(cell, col)| !cell.fits(col.kind))
        {
            return Err(Error::Schema(format!(
                "cell {cell:?} does not fit {} column `{}`",
                col.kind.name(),
                col.name
            )));
        }
        self.tuples.push(tuple);
        Ok(())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub(crate) fn tuples_mut(&mut self) -> &mut [Tuple] {
        &mut self.tuples
    }

    pub(crate) fn empty_like(&self) -> Relation {
        Relation {
            columns: self.columns.clone(),
            tuples: Vec::new(),
        }
    }

    pub(crate) fn push_unchecked(&mut self, tuple: Tuple) {
        debug_assert_eq!(tuple.cells.len(), self.columns.len());
        self.tuples.push(tuple);
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn key_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::Key)
    }

    /// Raw key text of tuple `row`, if the relation has a key and it is set.
    pub fn pk(&self, row: usize) -> Option<&str> {
        let k = self.key_index()?;
        match &self.tuples[row].cells[k] {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// True when a key column exists and every tuple has a distinct,
    /// non-null value in it.
    pub fn has_valid_key(&self) -> bool {
        let Some(k) = self.key_index() else {
            return false;
        };
        let mut seen = HashSet::with_capacity(self.tuples.len());
        self.tuples.iter().all(|t| match &t.cells[k] {
            Cell::Text(s) => seen.insert(s.as_str()),
            _ => false,
        })
    }

    pub(crate) fn numeric_index(&self, name: &str, scale: u32) -> Result<usize> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        match self.columns[idx].kind {
            ColumnKind::Numeric { scale: s } if s == scale => Ok(idx),
            _ => Err(Error::ColumnKind {
                column: name.to_string(),
                expected: "numeric",
            }),
        }
    }

    pub(crate) fn datetime_index(&self, name: &str) -> Result<usize> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        match self.columns[idx].kind {
            ColumnKind::DateTime => Ok(idx),
            _ => Err(Error::ColumnKind {
                column: name.to_string(),
                expected: "datetime",
            }),
        }
    }

    pub(crate) fn require_key(&self, config: &MarkConfig) -> Result<usize> {
        let idx = self
            .column_index(config.pk_column())
            .ok_or_else(|| Error::MissingColumn(config.pk_column().to_string()))?;
        if self.columns[idx].kind != ColumnKind::Key {
            return Err(Error::ColumnKind {
                column: config.pk_column().to_string(),
                expected: "key",
            });
        }
        Ok(idx)
    }
}

/// Guarantees a unique, non-null key column.
///
/// If `pk_column` is absent a column of that name holding `1..=n` is
/// appended. If it exists but has nulls or duplicates, the old column is
/// demoted to an ordinary column and a fresh `1..=n` column (named
/// `<pk_column>_auto`, suffixed further on a clash) is appended and becomes
/// the key. A relation whose key is already valid is returned unchanged.
pub fn ensure_primary_key(relation: Relation, pk_column: &str) -> Relation {
    let existing = relation.column_index(pk_column);
    if let Some(idx) = existing {
        if relation.columns[idx].kind == ColumnKind::Key && relation.has_valid_key() {
            return relation;
        }
    }
    let mut relation = relation;
    for col in relation.columns.iter_mut() {
        if col.kind == ColumnKind::Key {
            col.kind = ColumnKind::Other;
        }
    }
    let name = if existing.is_none() {
        pk_column.to_string()
    } else {
        let mut candidate = format!("{pk_column}_auto");
        let mut n = 2;
        while relation.column_index(&candidate).is_some() {
            candidate = format!("{pk_column}_auto{n}");
            n += 1;
        }
        candidate
    };
    relation.columns.push(Column::new(name, ColumnKind::Key));
    for (i, t) in relation.tuples.iter_mut().enumerate() {
        t.cells.push(Cell::Text((i + 1).to_string()));
    }
    relation
}

/// Maps a raw key to the integer used for tuple selection.
///
/// Numeric keys (`[+-]digits[.digits]`) map to the absolute value of their
/// integer part. Anything else, including integers too large for a u64, is
/// folded bytewise: `acc = (acc * 31 + b) mod 2^32` from `acc = 0`.
pub fn pk_to_int(pk: &str) -> u64 {
    numeric_integer_part(pk.trim()).unwrap_or_else(|| fold_bytes(pk.as_bytes()))
}

fn numeric_integer_part(s: &str) -> Option<u64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    int_part.parse().ok()
}

fn fold_bytes(bytes: &[u8]) -> u64 {
    let acc = bytes
        .iter()
        .fold(0u32, |acc, &b| acc.wrapping_mul(31).wrapping_add(u32::from(b)));
    u64::from(acc)
}

pub fn is_selected(pk_int: u64, k1: u8) -> bool {
    pk_int.is_multiple_of(u64::from(k1))
}
