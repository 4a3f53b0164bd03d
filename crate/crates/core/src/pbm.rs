//! Plain (P1) portable bitmap reading and writing. Pixel `1` is bit 1.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::WatermarkBits;

pub fn decode(text: &str) -> Result<WatermarkBits> {
    let mut tokens = Tokens::new(text);
    if tokens.word() != Some("P1") {
        return Err(Error::Pbm("missing P1 magic".into()));
    }
    let mut dim = |what: &str| -> Result<usize> {
        let w = tokens.word().ok_or_else(|| Error::Pbm(format!("missing {what}")))?;
        w.parse().map_err(|_| Error::Pbm(format!("bad {what} `{w}`")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::Pbm("dimensions overflow".into()))?;
    if expected == 0 {
        return Err(Error::EmptyWatermark);
    }
    let mut bits = Vec::with_capacity(expected);
    // raster digits may be packed without separators
    while bits.len() < expected {
        let Some(word) = tokens.word() else {
            return Err(Error::Pbm(format!("expected {expected} pixels, found {}", bits.len())));
        };
        for b in word.bytes() {
            match b {
                b'0' => bits.push(false),
                b'1' => bits.push(true),
                _ => return Err(Error::Pbm(format!("invalid pixel `{}`", b as char))),
            }
        }
    }
    bits.truncate(expected);
    WatermarkBits::new(width, height, bits)
}

pub fn encode(wm: &WatermarkBits) -> String {
    let mut out = format!("P1\n{} {}\n", wm.width(), wm.height());
    for row in wm.bits().chunks(wm.width()) {
        let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read(path: &Path) -> Result<WatermarkBits> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text)
}

pub fn write(path: &Path, wm: &WatermarkBits) -> Result<()> {
    fs::write(path, encode(wm)).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated words with `#` comments stripped.
struct Tokens<'a> {
    lines: std::str::Lines<'a>,
    current: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            lines: text.lines(),
            current: "".split_ascii_whitespace(),
        }
    }

    fn word(&mut self) -> Option<&'a str> {
        loop {
            if let Some(w) = self.current.next() {
                return Some(w);
            }
            let line = self.lines.next()?;
            let line = line.split_once('#').map_or(line, |(before, _)| before);
            self.current = line.split_ascii_whitespace();
        }
    }
}
