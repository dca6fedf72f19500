//! Tolerant tokenizer for HTML-style table markup and the reduction of
//! arbitrary table markup to the `<table>`/`<tr>`/`<td>` vocabulary.

use std::fmt;

use crate::error::{Error, Result};

/// Spans larger than this are clamped while reading markup.
pub const MAX_SPAN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme {
    Open {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    Close {
        name: String,
    },
    Text(String),
}

/// One `<td>` of a normalized table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkupCell {
    pub rowspan: usize,
    pub colspan: usize,
    pub content: String,
}

impl MarkupCell {
    pub fn new(content: impl Into<String>) -> Self {
        Self {
            rowspan: 1,
            colspan: 1,
            content: content.into(),
        }
    }

    pub fn with_span(content: impl Into<String>, rowspan: usize, colspan: usize) -> Self {
        Self {
            rowspan: rowspan.max(1),
            colspan: colspan.max(1),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkupRow {
    pub cells: Vec<MarkupCell>,
}

/// A table as written: rows of cells in document order, before any grid
/// placement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkupTable {
    pub rows: Vec<MarkupRow>,
}

impl MarkupTable {
    pub fn from_rows(rows: Vec<Vec<MarkupCell>>) -> Self {
        Self {
            rows: rows.into_iter().map(|cells| MarkupRow { cells }).collect(),
        }
    }

    /// Writes the canonical markup: lowercase tags, spans only when > 1, no
    /// whitespace between tags.
    pub fn to_markup(&self) -> String {
        let mut out = String::from("<table>");
        for row in &self.rows {
            out.push_str("<tr>");
            for cell in &row.cells {
                out.push_str("<td");
                if cell.rowspan > 1 {
                    out.push_str(&format!(" rowspan=\"{}\"", cell.rowspan));
                }
                if cell.colspan > 1 {
                    out.push_str(&format!(" colspan=\"{}\"", cell.colspan));
                }
                out.push('>');
                escape_into(&cell.content, &mut out);
                out.push_str("</td>");
            }
            out.push_str("</tr>");
        }
        out.push_str("</table>");
        out
    }
}

/// Table markup restricted to the three-tag vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedMarkup {
    markup: String,
    table: MarkupTable,
}

impl NormalizedMarkup {
    pub fn as_str(&self) -> &str {
        &self.markup
    }

    pub fn table(&self) -> &MarkupTable {
        &self.table
    }

    pub fn into_table(self) -> MarkupTable {
        self.table
    }
}

impl From<MarkupTable> for NormalizedMarkup {
    fn from(table: MarkupTable) -> Self {
        let table = MarkupTable::from_rows(
            table
                .rows
                .into_iter()
                .map(|r| {
                    r.cells
                        .into_iter()
                        .map(|c| MarkupCell {
                            rowspan: c.rowspan.clamp(1, MAX_SPAN),
                            colspan: c.colspan.clamp(1, MAX_SPAN),
                            content: collapse_whitespace(&c.content),
                        })
                        .collect()
                })
                .collect(),
        );
        Self {
            markup: table.to_markup(),
            table,
        }
    }
}

impl fmt::Display for NormalizedMarkup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.markup)
    }
}

/// Reduces the first table in `markup` to `<table>`, `<tr>` and `<td>`.
///
/// Section wrappers (`thead`, `tbody`, `tfoot`) are dropped, `th` becomes
/// `td`, inline tags inside cells are removed while their text is kept, and
/// every attribute except `rowspan`/`colspan` is discarded. Cell text has its
/// whitespace collapsed. Captions are not cells and are removed.
pub fn normalize_markup(markup: &str) -> Result<NormalizedMarkup> {
    let lexemes = lex(markup)?;
    let table = build_table(&lexemes, markup.len())?;
    Ok(NormalizedMarkup {
        markup: table.to_markup(),
        table,
    })
}

struct Builder {
    rows: Vec<MarkupRow>,
    row: Option<MarkupRow>,
    cell: Option<MarkupCell>,
}

impl Builder {
    fn close_cell(&mut self) {
        if let Some(mut cell) = self.cell.take() {
            cell.content = collapse_whitespace(&cell.content);
            self.row.get_or_insert_with(MarkupRow::default).cells.push(cell);
        }
    }

    fn close_row(&mut self) {
        self.close_cell();
        if let Some(row) = self.row.take() {
            self.rows.push(row);
        }
    }
}

fn build_table(lexemes: &[Lexeme], input_len: usize) -> Result<MarkupTable> {
    let Some(start) = lexemes
        .iter()
        .position(|l| matches!(l, Lexeme::Open { name, .. } if name == "table"))
    else {
        return Err(Error::NoTable);
    };

    let mut b = Builder {
        rows: Vec::new(),
        row: None,
        cell: None,
    };
    // Depth of tables nested inside the outer one; their structure is
    // flattened into the enclosing cell's text.
    let mut nested = 0usize;
    let mut in_caption = false;

    for lexeme in &lexemes[start + 1..] {
        match lexeme {
            Lexeme::Text(text) => {
                if in_caption {
                    continue;
                }
                if let Some(cell) = b.cell.as_mut() {
                    cell.content.push_str(text);
                }
            }
            Lexeme::Open { name, attrs, self_closing } => {
                if name == "table" && !self_closing {
                    nested += 1;
                    push_separator(&mut b);
                    continue;
                }
                if nested > 0 || in_caption {
                    push_separator(&mut b);
                    continue;
                }
                match name.as_str() {
                    "tr" => {
                        b.close_row();
                        b.row = Some(MarkupRow::default());
                    }
                    "td" | "th" => {
                        b.close_cell();
                        b.cell = Some(MarkupCell {
                            rowspan: span_attr(attrs, "rowspan"),
                            colspan: span_attr(attrs, "colspan"),
                            content: String::new(),
                        });
                    }
                    "thead" | "tbody" | "tfoot" => b.close_row(),
                    "caption" => {
                        if !self_closing {
                            in_caption = true;
                        }
                    }
                    _ => push_separator(&mut b),
                }
            }
            Lexeme::Close { name } => {
                if name == "table" {
                    if nested > 0 {
                        nested -= 1;
                        push_separator(&mut b);
                        continue;
                    }
                    b.close_row();
                    return Ok(MarkupTable { rows: b.rows });
                }
                if nested > 0 {
                    push_separator(&mut b);
                    continue;
                }
                match name.as_str() {
                    "caption" => in_caption = false,
                    "td" | "th" => b.close_cell(),
                    "tr" | "thead" | "tbody" | "tfoot" => b.close_row(),
                    _ => push_separator(&mut b),
                }
            }
        }
    }

    Err(Error::Parse {
        offset: input_len,
        message: "unclosed <table> element".into(),
    })
}

/// Inline and block tags inside a cell separate words.
fn push_separator(b: &mut Builder) {
    if let Some(cell) = b.cell.as_mut() {
        cell.content.push(' ');
    }
}

fn span_attr(attrs: &[(String, String)], key: &str) -> usize {
    attrs
        .iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| {
            let digits: String = v.trim().chars().take_while(char::is_ascii_digit).collect();
            digits.parse::<usize>().ok()
        })
        .filter(|&n| n > 0)
        .map_or(1, |n| n.min(MAX_SPAN))
}

/// Collapses runs of whitespace to one space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn escape_into(text: &str, out: &mut String) {
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(ch),
        }
    }
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let entity = &rest[1..semi];
            let ch = match entity {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                _ => {
                    let code = if let Some(hex) = entity
                        .strip_prefix("#x")
                        .or_else(|| entity.strip_prefix("#X"))
                    {
                        u32::from_str_radix(hex, 16).ok()
                    } else if let Some(dec) = entity.strip_prefix('#') {
                        dec.parse::<u32>().ok()
                    } else {
                        None
                    };
                    code.and_then(char::from_u32)
                }
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((ch, semi)) => {
                out.push(ch);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn lex(input: &str) -> Result<Vec<Lexeme>> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;

    let flush = |out: &mut Vec<Lexeme>, from: usize, to: usize| {
        if from < to {
            out.push(Lexeme::Text(decode_entities(&input[from..to])));
        }
    };

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let next = bytes.get(pos + 1).copied();
        match next {
            Some(b'!') if input[pos..].starts_with("<!--") => {
                flush(&mut out, text_start, pos);
                let end = input[pos + 4..].find("-->").ok_or_else(|| Error::Parse {
                    offset: pos,
                    message: "unterminated comment".into(),
                })?;
                pos += 4 + end + 3;
                text_start = pos;
            }
            Some(b'!') | Some(b'?') => {
                flush(&mut out, text_start, pos);
                let end = input[pos..].find('>').ok_or_else(|| Error::Parse {
                    offset: pos,
                    message: "unterminated declaration".into(),
                })?;
                pos += end + 1;
                text_start = pos;
            }
            Some(b'/') if bytes.get(pos + 2).is_some_and(u8::is_ascii_alphabetic) => {
                flush(&mut out, text_start, pos);
                let end = input[pos..].find('>').ok_or_else(|| Error::Parse {
                    offset: pos,
                    message: "unterminated closing tag".into(),
                })?;
                let name = input[pos + 2..pos + end]
                    .trim()
                    .split(|c: char| c.is_whitespace())
                    .next()
                    .unwrap_or("")
                    .to_ascii_lowercase();
                out.push(Lexeme::Close { name });
                pos += end + 1;
                text_start = pos;
            }
            Some(c) if c.is_ascii_alphabetic() => {
                flush(&mut out, text_start, pos);
                let (lexeme, end) = lex_open_tag(input, pos)?;
                out.push(lexeme);
                pos = end;
                text_start = pos;
            }
            // A bare '<' that does not start a tag is text.
            _ => pos += 1,
        }
    }
    flush(&mut out, text_start, bytes.len());
    Ok(out)
}

/// Lexes `<name attr=value ...>` starting at `start`; returns the lexeme and
/// the byte offset just past the closing `>`.
fn lex_open_tag(input: &str, start: usize) -> Result<(Lexeme, usize)> {
    let bytes = input.as_bytes();
    let unterminated = || Error::Parse {
        offset: start,
        message: "unterminated tag".into(),
    };
    let mut pos = start + 1;
    let name_start = pos;
    while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'-' || bytes[pos] == b':') {
        pos += 1;
    }
    let name = input[name_start..pos].to_ascii_lowercase();
    let mut attrs = Vec::new();
    let mut self_closing = false;

    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        match bytes.get(pos) {
            None => return Err(unterminated()),
            Some(b'>') => {
                pos += 1;
                break;
            }
            Some(b'/') => {
                self_closing = true;
                pos += 1;
                continue;
            }
            _ => {}
        }
        self_closing = false;
        let key_start = pos;
        while pos < bytes.len() && !matches!(bytes[pos], b'=' | b'>' | b'/') && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let key = input[key_start..pos].to_ascii_lowercase();
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let mut value = String::new();
        if bytes.get(pos) == Some(&b'=') {
            pos += 1;
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            match bytes.get(pos) {
                None => return Err(unterminated()),
                Some(&q @ (b'"' | b'\'')) => {
                    let close = input[pos + 1..].find(q as char).ok_or_else(unterminated)?;
                    value = decode_entities(&input[pos + 1..pos + 1 + close]);
                    pos += close + 2;
                }
                Some(_) => {
                    let v_start = pos;
                    while pos < bytes.len() && bytes[pos] != b'>' && !bytes[pos].is_ascii_whitespace() {
                        pos += 1;
                    }
                    value = decode_entities(&input[v_start..pos]);
                }
            }
        }
        if !key.is_empty() {
            attrs.push((key, value));
        }
    }
    Ok((
        Lexeme::Open {
            name,
            attrs,
            self_closing,
        },
        pos,
    ))
}
