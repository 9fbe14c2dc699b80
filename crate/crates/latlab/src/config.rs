//! Key-value experiment configs: one `key = value` per line, `#` comments,
//! decimal numbers, quoted strings, booleans, and arbitrarily nested
//! bracketed arrays. Human-diffable and trivially parseable.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Bool(bool),
    Array(Vec<Value>),
}

#[derive(Clone, Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, Value>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(Error::Config(format!("line {}: bad key `{key}`", lineno + 1)));
            }
            let mut cursor = Cursor { text: value.trim(), at: 0 };
            let v = cursor.parse_value().map_err(|e| {
                Error::Config(format!("line {}: {e}", lineno + 1))
            })?;
            cursor.skip_ws();
            if !cursor.done() {
                return Err(Error::Config(format!(
                    "line {}: trailing input after value",
                    lineno + 1
                )));
            }
            entries.insert(key.to_string(), v);
        }
        Ok(Config { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.entries
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Number(v) => Ok(*v),
            _ => Err(Error::Config(format!("key `{key}` must be a number"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.f64(key)?;
        if v < 0.0 || v.fract() != 0.0 || v > 1e15 {
            return Err(Error::Config(format!("key `{key}` must be a nonnegative integer")));
        }
        Ok(v as usize)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.has(key) {
            self.usize(key)
        } else {
            Ok(default)
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        if self.has(key) {
            Ok(self.usize(key)? as u64)
        } else {
            Ok(default)
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            Value::Str(s) => Ok(s),
            _ => Err(Error::Config(format!("key `{key}` must be a quoted string"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        if self.has(key) {
            self.str(key)
        } else {
            Ok(default)
        }
    }

    pub fn f64_array(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Number(x) => Ok(*x),
                    _ => Err(Error::Config(format!("key `{key}` must be a flat number array"))),
                })
                .collect(),
            _ => Err(Error::Config(format!("key `{key}` must be an array"))),
        }
    }

    /// Array of matrices (each a nested array of number rows).
    pub fn f64_tensor3(&self, key: &str) -> Result<Vec<Vec<Vec<f64>>>> {
        let wrong =
            || Error::Config(format!("key `{key}` must be an array of matrices"));
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|mat| match mat {
                    Value::Array(rows) => rows
                        .iter()
                        .map(|row| match row {
                            Value::Array(cells) => cells
                                .iter()
                                .map(|x| match x {
                                    Value::Number(n) => Ok(*n),
                                    _ => Err(wrong()),
                                })
                                .collect(),
                            _ => Err(wrong()),
                        })
                        .collect(),
                    _ => Err(wrong()),
                })
                .collect(),
            _ => Err(wrong()),
        }
    }

    /// Array of arrays of numbers (rays, matrices given row by row).
    pub fn f64_matrix(&self, key: &str) -> Result<Vec<Vec<f64>>> {
        match self.get(key)? {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::Array(row) => row
                        .iter()
                        .map(|x| match x {
                            Value::Number(n) => Ok(*n),
                            _ => Err(Error::Config(format!(
                                "key `{key}` must be an array of number arrays"
                            ))),
                        })
                        .collect(),
                    _ => Err(Error::Config(format!(
                        "key `{key}` must be an array of number arrays"
                    ))),
                })
                .collect(),
            _ => Err(Error::Config(format!("key `{key}` must be an array"))),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Cursor<'a> {
    text: &'a str,
    at: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.at..]
    }

    fn done(&self) -> bool {
        self.at >= self.text.len()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.at += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn parse_value(&mut self) -> std::result::Result<Value, String> {
        self.skip_ws();
        match self.rest().chars().next() {
            None => Err("empty value".into()),
            Some('[') => {
                self.at += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.rest().starts_with(']') {
                        self.at += 1;
                        return Ok(Value::Array(items));
                    }
                    if !items.is_empty() {
                        if !self.rest().starts_with(',') {
                            return Err("expected `,` or `]` in array".into());
                        }
                        self.at += 1;
                        self.skip_ws();
                        // allow trailing comma
                        if self.rest().starts_with(']') {
                            self.at += 1;
                            return Ok(Value::Array(items));
                        }
                    }
                    items.push(self.parse_value()?);
                }
            }
            Some('"') => {
                self.at += 1;
                let rest = self.rest();
                let end = rest.find('"').ok_or("unterminated string")?;
                let s = rest[..end].to_string();
                self.at += end + 1;
                Ok(Value::Str(s))
            }
            Some(_) => {
                let rest = self.rest();
                let end = rest
                    .find(|c: char| c == ',' || c == ']' || c.is_whitespace())
                    .unwrap_or(rest.len());
                let token = &rest[..end];
                self.at += end;
                match token {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ => token
                        .parse::<f64>()
                        .map(Value::Number)
                        .map_err(|_| format!("cannot parse `{token}` as a number")),
                }
            }
        }
    }
}
