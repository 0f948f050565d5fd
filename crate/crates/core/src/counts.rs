//! Unigram count tables `c(f)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lexicon::{tsv_fields, Lexicon};

/// Non-negative counts per surface form, kept in sorted form order so that
/// every sum over the table is taken in the same order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTable {
    counts: BTreeMap<String, f64>,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` to `form`. Negative or non-finite counts are rejected.
    pub fn add(&mut self, form: impl Into<String>, count: f64) -> Result<()> {
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::InvalidArgument(format!("count {count} is not a non-negative number")));
        }
        *self.counts.entry(form.into()).or_insert(0.0) += count;
        Ok(())
    }

    pub fn get(&self, form: &str) -> f64 {
        self.counts.get(form).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.counts.iter().map(|(f, &c)| (f.as_str(), c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of all counts, accumulated in form order.
    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.counts
            .values()
            .all(|&c| c.fract() == 0.0 && c <= (1u64 << 53) as f64)
    }

    /// Keeps only forms the lexicon lists; returns the kept table and the
    /// number of dropped (out-of-lexicon) tokens.
    pub fn restrict_to(&self, lexicon: &Lexicon) -> (CountTable, f64) {
        let mut kept = CountTable::new();
        let mut dropped = 0.0;
        for (form, &c) in &self.counts {
            if lexicon.contains_form(form) {
                kept.counts.insert(form.clone(), c);
            } else {
                dropped += c;
            }
        }
        (kept, dropped)
    }

    /// Counts whitespace-separated tokens of raw text.
    pub fn from_text(text: &str) -> Self {
        let mut table = CountTable::new();
        for token in text.split_whitespace() {
            *table.counts.entry(token.to_string()).or_insert(0.0) += 1.0;
        }
        table
    }

    /// Reads `form<TAB>count` lines. A first line `form<TAB>count` is taken
    /// as a header; blank lines and lines starting with `#` are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut table = CountTable::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = tsv_fields(line);
            if fields.len() != 2 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 2 tab-separated fields, found {}", fields.len()),
                ));
            }
            if i == 0 && fields[0] == "form" && fields[1] == "count" {
                continue;
            }
            let count: f64 = fields[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count {:?}", fields[1])))?;
            table
                .add(fields[0].trim(), count)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        Ok(table)
    }

    /// Writes `form<TAB>count` lines for every non-zero count.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (form, c) in self.iter().filter(|(_, c)| *c > 0.0) {
            out.push_str(form);
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }
}

impl FromIterator<(String, f64)> for CountTable {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        let mut table = CountTable::new();
        for (form, c) in iter {
            *table.counts.entry(form).or_insert(0.0) += c;
        }
        table
    }
}
