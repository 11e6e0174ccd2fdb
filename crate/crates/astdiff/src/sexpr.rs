//! A toy grammar for tests: `(kind[:value] child*)`.
//!
//! Values run to the next whitespace or parenthesis, or are double-quoted
//! with `\"` and `\\` escapes.

use thiserror::Error;

use crate::tree::{NodeId, Span, SyntaxTree, TreeBuilder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SexprError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected {found:?} at byte {at}")]
    Unexpected { found: char, at: usize },
    #[error("empty node kind at byte {0}")]
    EmptyKind(usize),
    #[error("trailing input at byte {0}")]
    Trailing(usize),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SexprError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(found) => Err(SexprError::Unexpected { found, at: self.pos }),
            None => Err(SexprError::Eof),
        }
    }

    fn bare(&mut self, stop_at_colon: bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '(' || c == ')' || (stop_at_colon && c == ':') {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn quoted(&mut self) -> Result<String, SexprError> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let c = self.peek().ok_or(SexprError::Eof)?;
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(out),
                '\\' => {
                    let e = self.peek().ok_or(SexprError::Eof)?;
                    self.pos += e.len_utf8();
                    out.push(e);
                }
                _ => out.push(c),
            }
        }
    }

    fn node(&mut self, builder: &mut TreeBuilder, parent: Option<NodeId>) -> Result<(), SexprError> {
        self.expect('(')?;
        let start = self.pos - 1;
        let kind = self.bare(true);
        if kind.is_empty() {
            return Err(SexprError::EmptyKind(self.pos));
        }
        let value = if self.peek() == Some(':') {
            self.pos += 1;
            if self.peek() == Some('"') {
                self.quoted()?
            } else {
                self.bare(false).to_string()
            }
        } else {
            String::new()
        };
        let line = self.src[..start].matches('\n').count() + 1;
        let id = builder.push(parent, kind, value, Span { start, end: start, line });
        loop {
            self.skip_ws();
            match self.peek() {
                Some(')') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some('(') => self.node(builder, Some(id))?,
                Some(found) => return Err(SexprError::Unexpected { found, at: self.pos }),
                None => return Err(SexprError::Eof),
            }
        }
    }
}

pub fn parse_sexpr(src: &str) -> Result<SyntaxTree, SexprError> {
    let mut parser = Parser { src, pos: 0 };
    let mut builder = TreeBuilder::new();
    parser.node(&mut builder, None)?;
    parser.skip_ws();
    if parser.pos < src.len() {
        return Err(SexprError::Trailing(parser.pos));
    }
    Ok(builder.finish())
}

fn needs_quotes(value: &str) -> bool {
    value.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\\'))
}

pub(crate) fn render(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    let mut stack = vec![(SyntaxTree::ROOT, false)];
    while let Some((id, close)) = stack.pop() {
        if close {
            out.push(')');
            continue;
        }
        if !out.is_empty() && !out.ends_with('(') {
            out.push(' ');
        }
        out.push('(');
        out.push_str(tree.kind(id));
        let value = tree.value(id);
        if !value.is_empty() {
            out.push(':');
            if needs_quotes(value) {
                out.push('"');
                for c in value.chars() {
                    if c == '"' || c == '\\' {
                        out.push('\\');
                    }
                    out.push(c);
                }
                out.push('"');
            } else {
                out.push_str(value);
            }
        }
        stack.push((id, true));
        stack.extend(tree.children(id).iter().rev().map(|&c| (c, false)));
    }
    out
}
