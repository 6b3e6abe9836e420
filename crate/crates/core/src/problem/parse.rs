use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::{ConditionType, Problem, RawSection, Rule, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnbalancedParens,
    UnknownSection,
    MissingArrow,
    MalformedCondition,
    UnexpectedToken,
    InvalidRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    offset: usize,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Pipe,
    Arrow,
    EqEq,
    Ident(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::EqEq => f.write_str("'=='"),
            Tok::Ident(s) => write!(f, "'{s}'"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | '|'))
}

fn err(pos: Pos, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
    ParseError { line: pos.line, column: pos.column, kind, message: message.into() }
}

struct Lexer<'a> {
    src: &'a str,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: Pos { offset: 0, line: 1, column: 1 } }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos.offset..]
    }

    fn peek_char(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos.offset += c.len_utf8();
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek_char().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn at_eof(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    /// Next token and its start position. `->` and `==` are split out of
    /// identifier runs, so `f(x)->x` lexes the same as `f(x) -> x`.
    fn next(&mut self) -> Option<(Pos, Tok)> {
        self.skip_ws();
        let start = self.pos;
        let c = self.peek_char()?;
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(t) = single {
            self.bump();
            return Some((start, t));
        }
        let rest = self.rest();
        if rest.starts_with("->") {
            self.bump();
            self.bump();
            return Some((start, Tok::Arrow));
        }
        if rest.starts_with("==") {
            self.bump();
            self.bump();
            return Some((start, Tok::EqEq));
        }
        let mut ident = String::new();
        while let Some(c) = self.peek_char() {
            let r = self.rest();
            if !is_ident_char(c) || r.starts_with("->") || r.starts_with("==") {
                break;
            }
            ident.push(c);
            self.bump();
        }
        Some((start, Tok::Ident(ident)))
    }

    /// Raw text up to the `)` closing the current section, which is consumed.
    fn raw_body(&mut self, open: Pos, keyword: &str) -> Result<String, ParseError> {
        let begin = self.pos.offset;
        let mut depth = 0usize;
        while let Some(c) = self.peek_char() {
            match c {
                '(' => depth += 1,
                ')' if depth == 0 => {
                    let body = self.src[begin..self.pos.offset].to_string();
                    self.bump();
                    return Ok(body);
                }
                ')' => depth -= 1,
                _ => {}
            }
            self.bump();
        }
        Err(err(open, ParseErrorKind::UnbalancedParens, format!("unclosed {keyword} section")))
    }

    /// Tokens up to the `)` closing the current section, which is consumed.
    fn token_body(&mut self, open: Pos, keyword: &str) -> Result<Vec<(Pos, Tok)>, ParseError> {
        let mut out = Vec::new();
        let mut depth = 0usize;
        loop {
            let Some((pos, tok)) = self.next() else {
                return Err(err(
                    open,
                    ParseErrorKind::UnbalancedParens,
                    format!("unclosed {keyword} section"),
                ));
            };
            match tok {
                Tok::LParen => depth += 1,
                Tok::RParen if depth == 0 => return Ok(out),
                Tok::RParen => depth -= 1,
                _ => {}
            }
            out.push((pos, tok));
        }
    }
}

/// Parses a problem text. The returned problem keeps `source` verbatim in
/// `raw_source`.
pub fn parse_problem(source: &str) -> Result<Problem, ParseError> {
    let mut lx = Lexer::new(source);
    let mut problem = Problem { raw_source: source.to_string(), ..Problem::default() };
    let mut rule_sections = Vec::new();

    while !lx.at_eof() {
        let (open, tok) = lx.next().expect("not at eof");
        if tok != Tok::LParen {
            return Err(err(
                open,
                ParseErrorKind::UnexpectedToken,
                format!("expected '(' to start a section, found {tok}"),
            ));
        }
        let keyword = match lx.next() {
            Some((_, Tok::Ident(k))) => k,
            Some((pos, t)) => {
                return Err(err(
                    pos,
                    ParseErrorKind::UnexpectedToken,
                    format!("expected a section keyword, found {t}"),
                ))
            }
            None => {
                return Err(err(open, ParseErrorKind::UnbalancedParens, "unclosed section"));
            }
        };
        match keyword.as_str() {
            "VAR" => {
                for (pos, tok) in lx.token_body(open, "VAR")? {
                    match tok {
                        Tok::Ident(v) => {
                            problem.variables.insert(v);
                        }
                        t => {
                            return Err(err(
                                pos,
                                ParseErrorKind::UnexpectedToken,
                                format!("expected a variable name, found {t}"),
                            ))
                        }
                    }
                }
            }
            "RULES" => rule_sections.push(lx.token_body(open, "RULES")?),
            "CONDITIONTYPE" => {
                let body = lx.token_body(open, "CONDITIONTYPE")?;
                let ct = match body.as_slice() {
                    [(pos, Tok::Ident(k))] => ConditionType::from_keyword(k).ok_or_else(|| {
                        err(
                            *pos,
                            ParseErrorKind::UnexpectedToken,
                            format!("unknown condition type '{k}'"),
                        )
                    })?,
                    _ => {
                        return Err(err(
                            open,
                            ParseErrorKind::UnexpectedToken,
                            "CONDITIONTYPE expects one of ORIENTED, JOIN, SEMI-EQUATIONAL",
                        ))
                    }
                };
                if problem.condition_type.replace(ct).is_some() {
                    return Err(err(
                        open,
                        ParseErrorKind::UnexpectedToken,
                        "duplicate CONDITIONTYPE section",
                    ));
                }
            }
            "COMMENT" => problem.comments.push(lx.raw_body(open, "COMMENT")?),
            "FUN" | "SIG" => {
                let body = lx.raw_body(open, &keyword)?;
                problem.signature.push(RawSection { keyword, body });
            }
            other => {
                return Err(err(
                    open,
                    ParseErrorKind::UnknownSection,
                    format!("unknown section keyword '{other}'"),
                ))
            }
        }
    }

    let mut rules = RuleParser {
        variables: &problem.variables,
        arities: HashMap::new(),
        toks: Vec::new(),
        idx: 0,
        end: lx.pos,
    };
    for section in rule_sections {
        rules.toks = section;
        rules.idx = 0;
        while rules.idx < rules.toks.len() {
            let rule = rules.rule()?;
            problem.rules.push(rule);
        }
    }

    if problem.condition_type.is_none() {
        if let Some(r) = problem.rules.iter().find(|r| r.is_conditional()) {
            return Err(ParseError {
                line: 1,
                column: 1,
                kind: ParseErrorKind::InvalidRule,
                message: format!("conditional rule '{r}' requires a CONDITIONTYPE section"),
            });
        }
    }
    Ok(problem)
}

struct RuleParser<'v> {
    variables: &'v BTreeSet<String>,
    arities: HashMap<String, usize>,
    toks: Vec<(Pos, Tok)>,
    idx: usize,
    end: Pos,
}

impl RuleParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.idx).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<(Pos, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let start = self.pos();
        let lhs = self.term()?;
        if lhs.is_var() {
            return Err(err(
                start,
                ParseErrorKind::InvalidRule,
                format!("left-hand side '{lhs}' is a variable"),
            ));
        }
        match self.advance() {
            Some((_, Tok::Arrow)) => {}
            other => {
                let (pos, found) = match other {
                    Some((p, t)) => (p, t.to_string()),
                    None => (self.end, "end of section".to_string()),
                };
                return Err(err(
                    pos,
                    ParseErrorKind::MissingArrow,
                    format!("expected '->' after '{lhs}', found {found}"),
                ));
            }
        }
        let rhs = self.term()?;
        let mut conditions = Vec::new();
        if self.peek() == Some(&Tok::Pipe) {
            self.advance();
            loop {
                conditions.push(self.condition()?);
                if self.peek() == Some(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        Ok(Rule { lhs, rhs, conditions })
    }

    fn condition(&mut self) -> Result<(Term, Term), ParseError> {
        let malformed = |pos: Pos, msg: String| err(pos, ParseErrorKind::MalformedCondition, msg);
        if !matches!(self.peek(), Some(Tok::Ident(_))) {
            return Err(malformed(self.pos(), "expected a term in condition list".into()));
        }
        let left = self.term()?;
        match self.advance() {
            Some((_, Tok::EqEq | Tok::Arrow)) => {}
            Some((pos, t)) => {
                return Err(malformed(pos, format!("expected '==' or '->' in condition, found {t}")))
            }
            None => return Err(malformed(self.end, "condition ends without '=='".into())),
        }
        if !matches!(self.peek(), Some(Tok::Ident(_))) {
            return Err(malformed(self.pos(), "expected a term after condition operator".into()));
        }
        let right = self.term()?;
        Ok((left, right))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let (pos, name) = match self.advance() {
            Some((p, Tok::Ident(n))) => (p, n),
            Some((p, t)) => {
                return Err(err(p, ParseErrorKind::UnexpectedToken, format!("expected a term, found {t}")))
            }
            None => {
                return Err(err(self.end, ParseErrorKind::UnexpectedToken, "expected a term, found end of section"))
            }
        };
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.advance();
            loop {
                args.push(self.term()?);
                match self.advance() {
                    Some((_, Tok::Comma)) => continue,
                    Some((_, Tok::RParen)) => break,
                    Some((p, t)) => {
                        return Err(err(p, ParseErrorKind::UnexpectedToken, format!("expected ',' or ')', found {t}")))
                    }
                    None => {
                        return Err(err(pos, ParseErrorKind::UnbalancedParens, format!("unclosed argument list of '{name}'")))
                    }
                }
            }
        }
        if self.variables.contains(&name) {
            if !args.is_empty() {
                return Err(err(
                    pos,
                    ParseErrorKind::InvalidRule,
                    format!("variable '{name}' applied to arguments"),
                ));
            }
            return Ok(Term::Var(name));
        }
        match self.arities.get(&name) {
            Some(&a) if a != args.len() => {
                return Err(err(
                    pos,
                    ParseErrorKind::InvalidRule,
                    format!("'{name}' used with {} arguments, previously with {a}", args.len()),
                ))
            }
            Some(_) => {}
            None => {
                self.arities.insert(name.clone(), args.len());
            }
        }
        Ok(Term::App(name, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_problem() {
        let p = parse_problem("(VAR x) (RULES f(x) -> x)").unwrap();
        assert_eq!(p.variables, BTreeSet::from(["x".to_string()]));
        assert_eq!(p.rules, vec![Rule::new(Term::app("f", vec![Term::var("x")]), Term::var("x"))]);
        assert_eq!(p.condition_type, None);
        assert_eq!(p.raw_source, "(VAR x) (RULES f(x) -> x)");
    }

    #[test]
    fn unclosed_section_reports_its_opening() {
        let e = parse_problem("(VAR x) (RULES").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnbalancedParens);
        assert_eq!((e.line, e.column), (1, 9));
    }

    #[test]
    fn conditional_rule() {
        let p = parse_problem("(CONDITIONTYPE ORIENTED) (VAR x y) (RULES f(x) -> y | x == y)").unwrap();
        assert_eq!(p.condition_type, Some(ConditionType::Oriented));
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.rules[0].conditions, vec![(Term::var("x"), Term::var("y"))]);
    }

    #[test]
    fn arrow_without_spaces() {
        let p = parse_problem("(VAR x)(RULES f(x)->x g(x,a)->f(x))").unwrap();
        assert_eq!(p.rules.len(), 2);
    }

    #[test]
    fn var_after_rules() {
        let p = parse_problem("(RULES f(x) -> x) (VAR x)").unwrap();
        assert_eq!(p.rules[0].rhs, Term::var("x"));
    }

    #[test]
    fn unknown_section() {
        let e = parse_problem("(VAR x) (STRATEGY INNERMOST)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSection);
    }

    #[test]
    fn missing_arrow() {
        let e = parse_problem("(VAR x) (RULES f(x) x)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingArrow);
        assert_eq!((e.line, e.column), (1, 21));
    }

    #[test]
    fn malformed_conditions() {
        for src in [
            "(CONDITIONTYPE JOIN) (VAR x) (RULES f(x) -> x | )",
            "(CONDITIONTYPE JOIN) (VAR x) (RULES f(x) -> x | x)",
            "(CONDITIONTYPE JOIN) (VAR x) (RULES f(x) -> x | x == )",
            "(CONDITIONTYPE JOIN) (VAR x) (RULES f(x) -> x | x == x, )",
        ] {
            let e = parse_problem(src).unwrap_err();
            assert_eq!(e.kind, ParseErrorKind::MalformedCondition, "{src}: {e}");
        }
    }

    #[test]
    fn trailing_garbage() {
        let e = parse_problem("(VAR x) (RULES f(x) -> x) junk").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedToken);
        let e = parse_problem("(VAR x) (RULES f(x) -> x))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedToken);
    }

    #[test]
    fn variable_lhs_rejected() {
        let e = parse_problem("(VAR x) (RULES x -> a)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidRule);
    }

    #[test]
    fn inconsistent_arity_rejected() {
        let e = parse_problem("(VAR x) (RULES f(x) -> f(x,x))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidRule);
        assert!(e.message.contains("'f'"));
    }

    #[test]
    fn undeclared_rhs_identifier_is_constant() {
        let p = parse_problem("(VAR x) (RULES f(x) -> c)").unwrap();
        assert_eq!(p.rules[0].rhs, Term::constant("c"));
        assert_eq!(p.rhs_only_constants(), BTreeSet::from(["c".to_string()]));
    }

    #[test]
    fn conditional_rule_needs_conditiontype() {
        let e = parse_problem("(VAR x y) (RULES f(x) -> y | x == y)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidRule);
    }

    #[test]
    fn comments_kept_verbatim() {
        let src = "(VAR x)\n(RULES f(x) -> x)\n(COMMENT  see (Example 2), p. 3\n)";
        let p = parse_problem(src).unwrap();
        assert_eq!(p.comments, vec!["  see (Example 2), p. 3\n".to_string()]);
    }

    #[test]
    fn multiline_positions() {
        let e = parse_problem("(VAR x)\n(RULES\n  f(x) -> x\n  g(x) x\n)").unwrap_err();
        assert_eq!((e.line, e.column), (4, 8));
    }

    #[test]
    fn bad_conditiontype() {
        assert!(parse_problem("(CONDITIONTYPE oriented) (VAR x) (RULES f(x) -> x)").is_err());
        assert!(parse_problem("(CONDITIONTYPE) (VAR x) (RULES f(x) -> x)").is_err());
    }
}
