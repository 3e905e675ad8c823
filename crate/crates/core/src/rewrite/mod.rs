//! Token-based rewriting of VHDL templates.
//!
//! A line is split into whitespace-separated tokens. A [`RewriteAction`]
//! fires on lines whose first token is its anchor (and, for constants, whose
//! second token names the constant). The token right after the action's
//! delimiter holds the value; only that value is replaced, every other byte
//! of the line is kept.

mod generate;
mod plan;

pub use generate::{
    check_memory_image, dry_run_report, generate, generate_in, render, GenError, GenReport,
    RenderedFile, TemplateSource,
};
pub use plan::{plan_actions, PlannedAction, TemplateKind};

use std::fmt;

use thiserror::Error;

/// Characters that separate tokens.
pub fn is_delimiter(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r')
}

/// Splits `line` into maximal runs of non-delimiter characters.
pub fn tokenize_line(line: &str) -> Vec<&str> {
    token_spans(line).into_iter().map(|(_, t)| t).collect()
}

/// Tokens together with their byte offset in `line`.
pub fn token_spans(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (is_delimiter(c), start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out
}

/// Token after which the value is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delimiter {
    /// `:=`, constant and variable initialisers.
    Assign,
    /// `=>`, generic and port map associations.
    Arrow,
    /// `STD_LOGIC_VECTOR` (any case); the value is the width inside the
    /// following range, e.g. `(10 - 1 DOWNTO 0)`.
    VectorRange,
}

impl Delimiter {
    pub fn as_str(self) -> &'static str {
        match self {
            Delimiter::Assign => ":=",
            Delimiter::Arrow => "=>",
            Delimiter::VectorRange => "STD_LOGIC_VECTOR",
        }
    }

    fn matches(self, token: &str) -> bool {
        match self {
            Delimiter::VectorRange => token.eq_ignore_ascii_case(self.as_str()),
            _ => token == self.as_str(),
        }
    }
}

impl fmt::Display for Delimiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RewriteAction {
    anchor: String,
    target_name: Option<String>,
    delimiter: Delimiter,
    new_value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("invalid rewrite action: {0}")]
    InvalidAction(String),
    #[error("`{anchor}` line has no `{delimiter}` token: {line}")]
    DelimiterNotFound {
        anchor: String,
        delimiter: Delimiter,
        line: String,
    },
    #[error("`{anchor}` line has nothing after `{delimiter}`: {line}")]
    MissingValue {
        anchor: String,
        delimiter: Delimiter,
        line: String,
    },
    #[error("{file}: no line matched {action}")]
    AnchorNeverMatched { file: String, action: RewriteAction },
}

fn bad_token(s: &str) -> bool {
    s.is_empty() || s.chars().any(is_delimiter)
}

impl RewriteAction {
    /// `anchor` must be a single token; `new_value` must be a non-empty
    /// token that does not start with `(` or end with `;`, `,` or `)`.
    pub fn new(
        anchor: impl Into<String>,
        target_name: Option<String>,
        delimiter: Delimiter,
        new_value: impl Into<String>,
    ) -> Result<Self, RewriteError> {
        let anchor = anchor.into();
        let new_value = new_value.into();
        if bad_token(&anchor) {
            return Err(RewriteError::InvalidAction(format!("anchor `{anchor}`")));
        }
        if target_name.as_deref().is_some_and(bad_token) {
            return Err(RewriteError::InvalidAction(format!(
                "target name {target_name:?}"
            )));
        }
        if bad_token(&new_value) || split_value(&new_value).1 != new_value {
            return Err(RewriteError::InvalidAction(format!("value `{new_value}`")));
        }
        Ok(RewriteAction {
            anchor,
            target_name,
            delimiter,
            new_value,
        })
    }

    /// `constant <name> : <type> := <value>;`
    pub fn constant(name: &str, value: impl Into<String>) -> Result<Self, RewriteError> {
        Self::new("constant", Some(name.to_string()), Delimiter::Assign, value)
    }

    /// `<anchor> => <value>,`
    pub fn association(anchor: &str, value: impl Into<String>) -> Result<Self, RewriteError> {
        Self::new(anchor, None, Delimiter::Arrow, value)
    }

    /// `<anchor> : IN STD_LOGIC_VECTOR (<value> - 1 DOWNTO 0);`
    pub fn vector_width(anchor: &str, width: u32) -> Result<Self, RewriteError> {
        Self::new(anchor, None, Delimiter::VectorRange, width.to_string())
    }

    pub fn anchor(&self) -> &str {
        &self.anchor
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target_name.as_deref()
    }

    pub fn delimiter(&self) -> Delimiter {
        self.delimiter
    }

    pub fn new_value(&self) -> &str {
        &self.new_value
    }

    fn selects(&self, tokens: &[(usize, &str)]) -> bool {
        let Some(&(_, first)) = tokens.first() else {
            return false;
        };
        if first != self.anchor {
            return false;
        }
        match &self.target_name {
            Some(name) => tokens
                .get(1)
                .is_some_and(|(_, t)| t.eq_ignore_ascii_case(name)),
            None => true,
        }
    }

    fn value_token<'a>(
        &self,
        line: &'a str,
        tokens: &[(usize, &'a str)],
    ) -> Result<(usize, &'a str), RewriteError> {
        let skip = if self.target_name.is_some() { 2 } else { 1 };
        let pos = tokens
            .iter()
            .skip(skip)
            .position(|(_, t)| self.delimiter.matches(t))
            .ok_or_else(|| RewriteError::DelimiterNotFound {
                anchor: self.anchor.clone(),
                delimiter: self.delimiter,
                line: line.to_string(),
            })?;
        let missing = || RewriteError::MissingValue {
            anchor: self.anchor.clone(),
            delimiter: self.delimiter,
            line: line.to_string(),
        };
        let &(offset, token) = tokens.get(skip + pos + 1).ok_or_else(missing)?;
        if split_value(token).1.is_empty() {
            return Err(missing());
        }
        Ok((offset, token))
    }
}

impl fmt::Display for RewriteAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.target_name {
            Some(name) => write!(
                f,
                "{} {} {} {}",
                self.anchor, name, self.delimiter, self.new_value
            ),
            None => write!(f, "{} {} {}", self.anchor, self.delimiter, self.new_value),
        }
    }
}

/// Splits a value token into `(prefix, value, suffix)`: leading `(` and
/// trailing `;` `,` `)` are punctuation, not value.
fn split_value(token: &str) -> (&str, &str, &str) {
    let body_start = token.len() - token.trim_start_matches('(').len();
    let rest = &token[body_start..];
    let body = rest.trim_end_matches([';', ',', ')']);
    (&token[..body_start], body, &rest[body.len()..])
}

/// Applies `action` to one line. Returns the (possibly) new line and whether
/// the action matched it.
pub fn rewrite_line(line: &str, action: &RewriteAction) -> Result<(String, bool), RewriteError> {
    let tokens = token_spans(line);
    if !action.selects(&tokens) {
        return Ok((line.to_string(), false));
    }
    let (offset, token) = action.value_token(line, &tokens)?;
    let (prefix, value, _) = split_value(token);
    let start = offset + prefix.len();
    let end = start + value.len();
    let mut out = String::with_capacity(line.len() + action.new_value.len());
    out.push_str(&line[..start]);
    out.push_str(&action.new_value);
    out.push_str(&line[end..]);
    Ok((out, true))
}

/// Reads back the value `action` would replace on `line`, if it selects it.
pub fn extract_value(line: &str, action: &RewriteAction) -> Option<String> {
    let tokens = token_spans(line);
    if !action.selects(&tokens) {
        return None;
    }
    let (_, token) = action.value_token(line, &tokens).ok()?;
    Some(split_value(token).1.to_string())
}

/// A VHDL source held as lines. Line endings are normalised to LF.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateFile {
    pub name: String,
    pub lines: Vec<String>,
}

impl TemplateFile {
    pub fn from_text(name: impl Into<String>, text: &str) -> Self {
        let normalized = text.replace("\r\n", "\n");
        TemplateFile {
            name: name.into(),
            lines: normalized.split('\n').map(str::to_string).collect(),
        }
    }

    /// Joins the lines with LF; inverse of [`TemplateFile::from_text`] for
    /// LF input.
    pub fn to_text(&self) -> String {
        self.lines.join("\n")
    }

    /// Number of text lines, not counting the empty piece after a final LF.
    pub fn line_count(&self) -> usize {
        self.to_text().lines().count()
    }
}

/// Result of [`apply_to_file`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewritten {
    pub file: TemplateFile,
    /// Lines matched by each action, in action order.
    pub applied: Vec<usize>,
    /// 0-based indices of lines matched by at least one action.
    pub matched_lines: Vec<usize>,
}

/// Tests every line against every action in order.
///
/// Fails with [`RewriteError::AnchorNeverMatched`] when an action matches no
/// line, which means the template and the plan disagree.
pub fn apply_to_file(
    file: &TemplateFile,
    actions: &[RewriteAction],
) -> Result<Rewritten, RewriteError> {
    let mut applied = vec![0usize; actions.len()];
    let mut matched_lines = Vec::new();
    let mut lines = Vec::with_capacity(file.lines.len());
    for (idx, line) in file.lines.iter().enumerate() {
        let mut current = line.clone();
        let mut hit = false;
        for (count, action) in applied.iter_mut().zip(actions) {
            let (next, matched) = rewrite_line(&current, action)?;
            if matched {
                *count += 1;
                hit = true;
                current = next;
            }
        }
        if hit {
            matched_lines.push(idx);
        }
        lines.push(current);
    }
    if let Some(i) = applied.iter().position(|&n| n == 0) {
        return Err(RewriteError::AnchorNeverMatched {
            file: file.name.clone(),
            action: actions[i].clone(),
        });
    }
    Ok(Rewritten {
        file: TemplateFile {
            name: file.name.clone(),
            lines,
        },
        applied,
        matched_lines,
    })
}
