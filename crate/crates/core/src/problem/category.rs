use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::registry::ToolSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FormatCategory {
    Trs,
    Ctrs,
    HigherOrder,
    Unknown,
}

impl FormatCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FormatCategory::Trs => "TRS",
            FormatCategory::Ctrs => "CTRS",
            FormatCategory::HigherOrder => "HIGHER_ORDER",
            FormatCategory::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for FormatCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormatCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TRS" => Ok(FormatCategory::Trs),
            "CTRS" => Ok(FormatCategory::Ctrs),
            "HIGHER_ORDER" => Ok(FormatCategory::HigherOrder),
            "UNKNOWN" => Ok(FormatCategory::Unknown),
            _ => Err(format!("unknown category '{s}'")),
        }
    }
}

/// Top-level `(KEYWORD body)` sections, tolerating malformed input: an
/// unclosed section runs to the end of the text.
fn sections(source: &str) -> Vec<(&str, &str)> {
    let mut out = Vec::new();
    let mut rest = source;
    while let Some(open) = rest.find('(') {
        let after = &rest[open + 1..];
        let mut depth = 0usize;
        let mut end = after.len();
        for (i, c) in after.char_indices() {
            match c {
                '(' => depth += 1,
                ')' if depth == 0 => {
                    end = i;
                    break;
                }
                ')' => depth -= 1,
                _ => {}
            }
        }
        let inner = after[..end].trim_start();
        let kw_len = inner
            .find(|c: char| c.is_whitespace() || matches!(c, '(' | ')'))
            .unwrap_or(inner.len());
        out.push((&inner[..kw_len], &inner[kw_len..]));
        rest = after.get(end + 1..).unwrap_or("");
    }
    out
}

/// Classifies a problem by the sections it declares. Total: never fails and
/// does not need the problem to parse.
pub fn infer_category(source: &str) -> FormatCategory {
    let secs = sections(source);
    if secs.is_empty() {
        return FormatCategory::Unknown;
    }
    if secs.iter().any(|(k, _)| *k == "CONDITIONTYPE") {
        return FormatCategory::Ctrs;
    }
    let typed = secs.iter().any(|(k, body)| match *k {
        "VAR" => body.contains(':'),
        "FUN" => body.contains("->"),
        _ => false,
    });
    if typed {
        return FormatCategory::HigherOrder;
    }
    if secs.iter().all(|(k, _)| matches!(*k, "VAR" | "RULES" | "COMMENT")) {
        FormatCategory::Trs
    } else {
        FormatCategory::Unknown
    }
}

/// Categories a tool group accepts; `None` means any.
fn accepted_by_group(group: &str) -> Option<&'static [FormatCategory]> {
    match group.to_ascii_lowercase().as_str() {
        "trs" | "cr" => Some(&[FormatCategory::Trs]),
        "ctrs" | "ccr" => Some(&[FormatCategory::Ctrs]),
        "hrs" | "ho" | "higher-order" | "higher_order" => Some(&[FormatCategory::HigherOrder]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionWarning {
    pub tool_id: String,
    pub tool_group: String,
    pub problem_category: FormatCategory,
    pub message: String,
}

/// One advisory warning per tool whose group does not handle `category`.
pub fn validate_selection(category: FormatCategory, tools: &[ToolSpec]) -> Vec<SelectionWarning> {
    if category == FormatCategory::Unknown {
        return Vec::new();
    }
    tools
        .iter()
        .filter(|t| accepted_by_group(&t.category_group).is_some_and(|ok| !ok.contains(&category)))
        .map(|t| SelectionWarning {
            tool_id: t.id.clone(),
            tool_group: t.category_group.clone(),
            problem_category: category,
            message: format!(
                "tool {} is in group {} but the problem looks like {}",
                t.id, t.category_group, category
            ),
        })
        .collect()
}
