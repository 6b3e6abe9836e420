use std::fmt::Write;

use super::Problem;

/// Canonical text for `p`. Parsing the result yields a problem structurally
/// equal to `p`; comments and signature sections are emitted verbatim.
pub fn render_problem(p: &Problem) -> String {
    let mut out = String::new();
    if let Some(ct) = p.condition_type {
        writeln!(out, "(CONDITIONTYPE {ct})").unwrap();
    }
    out.push_str("(VAR");
    for v in &p.variables {
        out.push(' ');
        out.push_str(v);
    }
    out.push_str(")\n");
    for s in &p.signature {
        writeln!(out, "({}{})", s.keyword, s.body).unwrap();
    }
    if p.rules.is_empty() {
        out.push_str("(RULES)\n");
    } else {
        out.push_str("(RULES\n");
        for r in &p.rules {
            writeln!(out, "  {r}").unwrap();
        }
        out.push_str(")\n");
    }
    for c in &p.comments {
        writeln!(out, "(COMMENT{c})").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{parse_problem, Rule, Term};

    #[test]
    fn empty_problem() {
        let p = Problem::default();
        let text = render_problem(&p);
        assert_eq!(text, "(VAR)\n(RULES)\n");
        assert_eq!(parse_problem(&text).unwrap(), p);
    }

    #[test]
    fn keeps_sections() {
        let p = Problem {
            variables: ["x".to_string()].into(),
            rules: vec![Rule::new(Term::app("f", vec![Term::var("x")]), Term::var("x"))],
            ..Problem::default()
        };
        let text = render_problem(&p);
        assert!(text.contains("(VAR x)"));
        assert!(text.contains("(RULES\n  f(x) -> x\n)"));
        assert_eq!(parse_problem(&text).unwrap(), p);
    }

    #[test]
    fn comments_survive() {
        let src = "(VAR x) (RULES f(x) -> x) (COMMENT from (somewhere))";
        let p = parse_problem(src).unwrap();
        let again = parse_problem(&render_problem(&p)).unwrap();
        assert_eq!(again.comments, p.comments);
    }
}
