//! Line-oriented tokenizing shared by the model document parsers.

use crate::error::ParseError;

pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-empty line with comments stripped, split on whitespace.
    pub(crate) fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            self.last = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((idx + 1, tokens));
            }
        }
        None
    }

    /// Like [`next_tokens`](Self::next_tokens) but keeps the raw line.
    pub(crate) fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.inner.by_ref() {
            self.last = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Some((idx + 1, content));
            }
        }
        None
    }

    pub(crate) fn last_line(&self) -> usize {
        self.last.max(1)
    }

    pub(crate) fn expect_header(&mut self) -> Result<(), ParseError> {
        match self.next_tokens() {
            Some((_, t)) if t[..] == ["format", "1"] => Ok(()),
            Some((line, t)) if t[0] == "format" => Err(ParseError::new(
                line,
                format!("unsupported format version `{}`", t[1..].join(" ")),
            )),
            Some((line, _)) => Err(ParseError::new(line, "expected `format 1` header")),
            None => Err(ParseError::new(1, "empty document, expected `format 1` header")),
        }
    }
}

pub(crate) fn parse_f64(s: &str, line: usize) -> Result<f64, ParseError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::new(line, format!("invalid number `{s}`"))),
    }
}

pub(crate) fn parse_floats<const N: usize>(s: &str, line: usize) -> Result<[f64; N], ParseError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != N {
        return Err(ParseError::new(
            line,
            format!("expected {N} numbers, found {}", parts.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_f64(p, line)?;
    }
    Ok(out)
}
