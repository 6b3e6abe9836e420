//! Building blocks for running confluence tools on rewrite-system problems.
//!
//! * [`problem`] parses, renders and classifies Cops-style problem texts.
//! * [`registry`] discovers tools from a `year/group/tool.conf` directory tree.
//! * [`engine`] runs tools under the soft/term/kill timeout protocol.

pub mod engine;
pub mod problem;
pub mod registry;

pub use engine::{
    classify_answer, expand_command, Answer, CommandLine, Engine, ExpansionError, RunResult,
    TerminatedBy, TimeoutPolicy,
};
pub use problem::{
    infer_category, parse_problem, render_problem, validate_selection, ConditionType,
    FormatCategory, ParseError, Problem, Rule, SelectionWarning, Term,
};
pub use registry::{
    parse_tool_config, resolve_tools, scan_registry, ConfigError, LookupError, RegistryError,
    RegistryTree, ScanReport, ToolSpec,
};
