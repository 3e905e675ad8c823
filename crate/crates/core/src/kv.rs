//! Line-oriented `key = value` text shared by the configuration, cost-model
//! and report formats.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry<'a> {
    /// 1-based line number in the source text.
    pub line: usize,
    pub key: &'a str,
    pub value: &'a str,
}

/// A line that is neither blank, a comment, nor `key = value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub text: String,
}

/// Splits `text` into entries. Accepts LF and CRLF endings; `#` starts a
/// comment anywhere on a line.
pub fn parse(text: &str) -> Result<Vec<Entry<'_>>, SyntaxError> {
    let mut out = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if body.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(SyntaxError {
                line: line_no,
                text: raw.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) || value.is_empty() {
            return Err(SyntaxError {
                line: line_no,
                text: raw.to_string(),
            });
        }
        out.push(Entry {
            line: line_no,
            key,
            value,
        });
    }
    Ok(out)
}

/// Accumulates `key=value` lines in insertion order.
#[derive(Debug, Default)]
pub struct Writer {
    buf: String,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.buf, "{key}={value}");
        self
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_blanks_and_comments() {
        let entries = parse("# header\n\n a = 1 # trailing\r\nb=two\n").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(
            entries[0],
            Entry {
                line: 3,
                key: "a",
                value: "1"
            }
        );
        assert_eq!(
            entries[1],
            Entry {
                line: 4,
                key: "b",
                value: "two"
            }
        );
    }

    #[test]
    fn reports_line_of_garbage() {
        let err = parse("a=1\nnot a pair\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse("a=\n").is_err());
        assert!(parse("=3\n").is_err());
    }
}
