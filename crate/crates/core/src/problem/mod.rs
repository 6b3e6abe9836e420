//! Cops-style rewrite-system problems.
//!
//! Problems are sequences of parenthesized sections:
//!
//! ```text
//! (CONDITIONTYPE ORIENTED)
//! (VAR x y)
//! (RULES
//!   f(x) -> y | x == y
//! )
//! ```
//!
//! Tools always receive the submitted bytes; parsing exists to classify the
//! problem and to warn about tool selections that do not fit it.

mod category;
mod parse;
mod render;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use category::{infer_category, validate_selection, FormatCategory, SelectionWarning};
pub use parse::{parse_problem, ParseError, ParseErrorKind};
pub use render::render_problem;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn app(function: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(function.into(), args)
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(name.into(), Vec::new())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Visits every function application in pre-order.
    pub fn for_each_app<'a>(&'a self, f: &mut impl FnMut(&'a str, usize)) {
        if let Term::App(name, args) = self {
            f(name, args.len());
            for a in args {
                a.for_each_app(f);
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::App(name, args) if args.is_empty() => f.write_str(name),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub lhs: Term,
    pub rhs: Term,
    pub conditions: Vec<(Term, Term)>,
}

impl Rule {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Rule { lhs, rhs, conditions: Vec::new() }
    }

    pub fn is_conditional(&self) -> bool {
        !self.conditions.is_empty()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)?;
        for (i, (s, t)) in self.conditions.iter().enumerate() {
            f.write_str(if i == 0 { " | " } else { ", " })?;
            write!(f, "{s} == {t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionType {
    #[serde(rename = "ORIENTED")]
    Oriented,
    #[serde(rename = "JOIN")]
    Join,
    #[serde(rename = "SEMI-EQUATIONAL")]
    SemiEquational,
}

impl ConditionType {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionType::Oriented => "ORIENTED",
            ConditionType::Join => "JOIN",
            ConditionType::SemiEquational => "SEMI-EQUATIONAL",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "ORIENTED" => Some(ConditionType::Oriented),
            "JOIN" => Some(ConditionType::Join),
            "SEMI-EQUATIONAL" => Some(ConditionType::SemiEquational),
            _ => None,
        }
    }
}

impl fmt::Display for ConditionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A `FUN` or `SIG` section kept as raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSection {
    pub keyword: String,
    pub body: String,
}

/// A parsed first-order (possibly conditional) rewrite system.
///
/// Equality is structural: variables, rules and condition type. Comments,
/// raw signature sections and the source text are metadata and do not take
/// part in it.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    pub variables: BTreeSet<String>,
    pub rules: Vec<Rule>,
    pub condition_type: Option<ConditionType>,
    pub comments: Vec<String>,
    pub signature: Vec<RawSection>,
    pub raw_source: String,
}

impl PartialEq for Problem {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
            && self.rules == other.rules
            && self.condition_type == other.condition_type
    }
}

impl Eq for Problem {}

impl Problem {
    pub fn is_conditional(&self) -> bool {
        self.condition_type.is_some()
    }

    /// Constants that occur in right-hand sides or conditions but never on a
    /// left-hand side. These are accepted, but often indicate a typo.
    pub fn rhs_only_constants(&self) -> BTreeSet<String> {
        let mut lhs_symbols = BTreeSet::new();
        for r in &self.rules {
            r.lhs.for_each_app(&mut |name, _| {
                lhs_symbols.insert(name.to_string());
            });
        }
        let mut out = BTreeSet::new();
        let mut visit = |t: &Term| {
            t.for_each_app(&mut |name, arity| {
                if arity == 0 && !lhs_symbols.contains(name) {
                    out.insert(name.to_string());
                }
            })
        };
        for r in &self.rules {
            visit(&r.rhs);
            for (s, t) in &r.conditions {
                visit(s);
                visit(t);
            }
        }
        out
    }
}
