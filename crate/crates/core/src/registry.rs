//! Tool registry built from a `<config_root>/<year>/<group>/<tool>.conf` tree.
//!
//! A config file sets two variables, e.g.
//!
//! ```text
//! TOOLDIR="Saigawa-2012/bin"
//! TOOL="./starexec_run_saigawa -t $TO $FILE"
//! ```
//!
//! Only plain `KEY="value"` assignments are understood; the file is never
//! handed to a shell.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_EXTENSION: &str = "conf";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub id: String,
    pub display_name: String,
    pub year: String,
    pub category_group: String,
    pub tool_dir: String,
    pub command_template: String,
}

impl ToolSpec {
    pub fn new(
        year: impl Into<String>,
        group: impl Into<String>,
        name: impl Into<String>,
        tool_dir: impl Into<String>,
        command_template: impl Into<String>,
    ) -> Self {
        let (year, group, name) = (year.into(), group.into(), name.into());
        ToolSpec {
            id: format!("{year}/{group}/{name}"),
            display_name: name,
            year,
            category_group: group,
            tool_dir: tool_dir.into(),
            command_template: command_template.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} missing")]
    MissingKey(&'static str),
    #[error("TOOL does not reference $FILE")]
    NoFilePlaceholder,
}

/// True if `template` contains the placeholder `$name` or `${name}`, not as
/// a prefix of a longer variable name.
pub(crate) fn has_placeholder(template: &str, name: &str) -> bool {
    let mut found = false;
    crate::engine::substitute(template, &mut |var| {
        if var == name {
            found = true;
        }
        None
    });
    found
}

fn unquote(value: &str) -> &str {
    let v = value.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

/// Extracts `TOOLDIR` and `TOOL` from a config file. Other lines are ignored;
/// a repeated key keeps its last value.
pub fn parse_tool_config(
    contents: &str,
    year: &str,
    group: &str,
    name: &str,
) -> Result<ToolSpec, ConfigError> {
    let mut tool_dir = None;
    let mut tool = None;
    for line in contents.lines() {
        let line = line.trim();
        let Some((key, value)) = line.split_once('=') else { continue };
        match key {
            "TOOLDIR" => tool_dir = Some(unquote(value).to_string()),
            "TOOL" => tool = Some(unquote(value).to_string()),
            _ => {}
        }
    }
    let tool_dir = tool_dir.ok_or(ConfigError::MissingKey("TOOLDIR"))?;
    let tool = tool.ok_or(ConfigError::MissingKey("TOOL"))?;
    if !has_placeholder(&tool, "FILE") {
        return Err(ConfigError::NoFilePlaceholder);
    }
    Ok(ToolSpec::new(year, group, name, tool_dir, tool))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupNode {
    pub group: String,
    pub tools: Vec<ToolSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearNode {
    pub year: String,
    pub groups: Vec<GroupNode>,
}

/// The year/group/tool menu. Years are newest first; groups and tools are
/// sorted lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryTree {
    pub years: Vec<YearNode>,
}

impl RegistryTree {
    /// All tools in menu order.
    pub fn tools(&self) -> impl Iterator<Item = &ToolSpec> {
        self.years.iter().flat_map(|y| y.groups.iter().flat_map(|g| g.tools.iter()))
    }

    pub fn get(&self, id: &str) -> Option<&ToolSpec> {
        self.tools().find(|t| t.id == id)
    }

    pub fn len(&self) -> usize {
        self.tools().count()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("config root {path} is not a readable directory: {source}")]
    Root {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanWarning {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    pub tree: RegistryTree,
    pub warnings: Vec<ScanWarning>,
}

fn compare_years(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => y.cmp(&x),
        _ => b.cmp(a),
    }
}

/// Visible subdirectories and files of `dir`, sorted by name.
fn entries(dir: &Path) -> std::io::Result<Vec<(String, PathBuf, bool)>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir)? {
        let e = e?;
        let name = e.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        let path = e.path();
        let is_dir = path.is_dir();
        out.push((name, path, is_dir));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Scans `config_root`. Malformed or unreadable config files become warnings;
/// only a missing or unreadable root is an error.
pub fn scan_registry(config_root: &Path) -> Result<ScanReport, RegistryError> {
    let root_err = |source| RegistryError::Root { path: config_root.to_path_buf(), source };
    let years = entries(config_root).map_err(root_err)?;
    let mut report = ScanReport::default();
    let mut warn = |path: &Path, message: String| {
        report.warnings.push(ScanWarning { path: path.to_path_buf(), message })
    };

    let mut tree = RegistryTree::default();
    for (year, year_path, is_dir) in years {
        if !is_dir {
            continue;
        }
        let groups = match entries(&year_path) {
            Ok(g) => g,
            Err(e) => {
                warn(&year_path, e.to_string());
                continue;
            }
        };
        let mut year_node = YearNode { year: year.clone(), groups: Vec::new() };
        for (group, group_path, is_dir) in groups {
            if !is_dir {
                continue;
            }
            let files = match entries(&group_path) {
                Ok(f) => f,
                Err(e) => {
                    warn(&group_path, e.to_string());
                    continue;
                }
            };
            let mut group_node = GroupNode { group: group.clone(), tools: Vec::new() };
            for (_, file, is_dir) in files {
                if is_dir || file.extension().and_then(|e| e.to_str()) != Some(CONFIG_EXTENSION) {
                    continue;
                }
                let Some(stem) = file.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
                    continue;
                };
                let parsed = fs::read_to_string(&file)
                    .map_err(|e| e.to_string())
                    .and_then(|c| parse_tool_config(&c, &year, &group, &stem).map_err(|e| e.to_string()));
                match parsed {
                    Ok(spec) => group_node.tools.push(spec),
                    Err(msg) => warn(&file, msg),
                }
            }
            if !group_node.tools.is_empty() {
                year_node.groups.push(group_node);
            }
        }
        if !year_node.groups.is_empty() {
            tree.years.push(year_node);
        }
    }
    tree.years.sort_by(|a, b| compare_years(&a.year, &b.year));
    report.tree = tree;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown tool ids: {}", .0.join(", "))]
pub struct LookupError(pub Vec<String>);

/// Looks up `ids` in request order, dropping repeated ids.
pub fn resolve_tools<S: AsRef<str>>(ids: &[S], tree: &RegistryTree) -> Result<Vec<ToolSpec>, LookupError> {
    let mut seen = HashSet::new();
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for id in ids {
        let id = id.as_ref();
        if !seen.insert(id) {
            continue;
        }
        match tree.get(id) {
            Some(t) => found.push(t.clone()),
            None => missing.push(id.to_string()),
        }
    }
    if missing.is_empty() {
        Ok(found)
    } else {
        Err(LookupError(missing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAIGAWA: &str = "        TOOLDIR=\"Saigawa-2012/bin\"\n        TOOL=\"./starexec_run_saigawa -t $TO $FILE\"\n";

    #[test]
    fn saigawa_config() {
        let t = parse_tool_config(SAIGAWA, "2012", "trs", "saigawa").unwrap();
        assert_eq!(t.id, "2012/trs/saigawa");
        assert_eq!(t.tool_dir, "Saigawa-2012/bin");
        assert_eq!(t.command_template, "./starexec_run_saigawa -t $TO $FILE");
    }

    #[test]
    fn missing_keys() {
        let e = parse_tool_config("TOOLDIR=\"x\"", "y", "g", "n").unwrap_err();
        assert_eq!(e.to_string(), "TOOL missing");
        let e = parse_tool_config("TOOL=\"x $FILE\"", "y", "g", "n").unwrap_err();
        assert_eq!(e, ConfigError::MissingKey("TOOLDIR"));
    }

    #[test]
    fn file_placeholder_required() {
        let e = parse_tool_config("TOOLDIR=\"d\"\nTOOL=\"./t -t $TO\"", "y", "g", "n").unwrap_err();
        assert_eq!(e, ConfigError::NoFilePlaceholder);
        let e = parse_tool_config("TOOLDIR=\"d\"\nTOOL=\"./t $FILENAME\"", "y", "g", "n").unwrap_err();
        assert_eq!(e, ConfigError::NoFilePlaceholder);
    }

    #[test]
    fn single_quotes_and_no_timeout() {
        let t = parse_tool_config("TOOLDIR=mocks\nTOOL='cat $FILE'\n# comment\nFOO=bar", "y", "g", "n").unwrap();
        assert_eq!(t.tool_dir, "mocks");
        assert_eq!(t.command_template, "cat $FILE");
    }

    #[test]
    fn year_order() {
        let mut ys = vec!["2012", "2015", "999", "2014"];
        ys.sort_by(|a, b| compare_years(a, b));
        assert_eq!(ys, ["2015", "2014", "2012", "999"]);
    }

    #[test]
    fn resolve_dedup_and_unknown() {
        let tree = RegistryTree {
            years: vec![YearNode {
                year: "2012".into(),
                groups: vec![GroupNode {
                    group: "trs".into(),
                    tools: vec![
                        ToolSpec::new("2012", "trs", "a", "d", "./a $FILE"),
                        ToolSpec::new("2012", "trs", "b", "d", "./b $FILE"),
                    ],
                }],
            }],
        };
        let ids: Vec<_> = resolve_tools(&["2012/trs/b", "2012/trs/a", "2012/trs/b"], &tree)
            .unwrap()
            .into_iter()
            .map(|t| t.id)
            .collect();
        assert_eq!(ids, ["2012/trs/b", "2012/trs/a"]);
        assert!(resolve_tools::<&str>(&[], &tree).unwrap().is_empty());
        assert_eq!(
            resolve_tools(&["nope", "2012/trs/a", "x"], &tree).unwrap_err(),
            LookupError(vec!["nope".into(), "x".into()])
        );
    }
}
