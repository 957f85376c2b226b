//! Line-oriented reader shared by the network and profile file formats.
//!
//! Every record is one line: a keyword followed by whitespace-separated
//! tokens. Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) struct Records<'a> {
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    what: &'static str,
}

pub(crate) struct Record<'a> {
    pub line: usize,
    pub tokens: Vec<&'a str>,
}

impl<'a> Records<'a> {
    pub fn new(text: &'a str, what: &'static str) -> Self {
        let iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Records {
            lines: iter.peekable(),
            what,
        }
    }

    /// Next record, which must start with `keyword`.
    pub fn expect(&mut self, keyword: &str) -> Result<Record<'a>> {
        let (line, text) = self.lines.next().ok_or_else(|| {
            Error::Truncated(format!("{}: expected '{keyword}' record", self.what))
        })?;
        let mut tokens = text.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        if head != keyword {
            return Err(Error::parse(
                line,
                format!("expected '{keyword}', found '{head}'"),
            ));
        }
        Ok(Record {
            line,
            tokens: tokens.collect(),
        })
    }

    pub fn peek_keyword(&mut self) -> Option<&'a str> {
        self.lines
            .peek()
            .and_then(|(_, l)| l.split_whitespace().next())
    }

    pub fn finish(&mut self) -> Result<()> {
        match self.lines.next() {
            None => Ok(()),
            Some((line, _)) => Err(Error::parse(line, "unexpected content after 'end'")),
        }
    }
}

impl Record<'_> {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn get<T: FromStr>(&self, idx: usize, name: &str) -> Result<T> {
        let tok = self
            .tokens
            .get(idx)
            .ok_or_else(|| Error::parse(self.line, format!("missing {name}")))?;
        tok.parse()
            .map_err(|_| Error::parse(self.line, format!("invalid {name} '{tok}'")))
    }

    pub fn all<T: FromStr>(&self, from: usize, name: &str) -> Result<Vec<T>> {
        self.tokens[from.min(self.tokens.len())..]
            .iter()
            .map(|tok| {
                tok.parse()
                    .map_err(|_| Error::parse(self.line, format!("invalid {name} '{tok}'")))
            })
            .collect()
    }

    /// Single-token value after the keyword.
    pub fn value<T: FromStr>(&self, name: &str) -> Result<T> {
        if self.tokens.len() != 1 {
            return Err(Error::parse(self.line, format!("expected one value for {name}")));
        }
        self.get(0, name)
    }
}

/// Appends `keyword v1 v2 ...` with round-trip formatting of reals.
pub(crate) fn push_reals<'a>(out: &mut String, keyword: &str, values: impl IntoIterator<Item = &'a f64>) {
    out.push_str(keyword);
    for v in values {
        write!(out, " {v:?}").unwrap();
    }
    out.push('\n');
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
