use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use cocoweb_core::problem::{
    infer_category, parse_problem, render_problem, ConditionType, FormatCategory, ParseErrorKind, Problem, Term,
};
use cocoweb_testkit::problems::problem_strategy;
use proptest::prelude::*;
use regex::Regex;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/problems").join(name);
    fs::read_to_string(p).unwrap()
}

/// Independent reference reader: blanks out COMMENT sections, tokenizes with a
/// regex and rebuilds rules as canonical strings (`f(x,y)`, no spaces).
mod oracle {
    use super::*;

    /// (lhs, rhs, [(cond lhs, cond rhs)]) as text.
    pub type RuleShape = (String, String, Vec<(String, String)>);

    #[derive(Debug, PartialEq)]
    pub struct Shape {
        pub vars: BTreeSet<String>,
        pub condition_type: Option<String>,
        pub rules: Vec<RuleShape>,
    }

    fn strip_comments(src: &str) -> String {
        let mut out = String::new();
        let mut rest = src;
        while let Some(i) = rest.find("(COMMENT") {
            out.push_str(&rest[..i]);
            let mut depth = 0;
            let mut end = rest.len();
            for (j, c) in rest[i..].char_indices() {
                if c == '(' {
                    depth += 1;
                } else if c == ')' {
                    depth -= 1;
                    if depth == 0 {
                        end = i + j + 1;
                        break;
                    }
                }
            }
            rest = &rest[end..];
        }
        out.push_str(rest);
        out
    }

    pub fn read(src: &str) -> Option<Shape> {
        let src = strip_comments(src);
        let re = Regex::new(r"->|==|[(),|]|(?:[^\s(),|=\-]|-[^>\s(),|]|-$|=[^=\s(),|])+|-|=").unwrap();
        let toks: Vec<&str> = re.find_iter(&src).map(|m| m.as_str()).collect();
        let mut i = 0;
        let mut vars = BTreeSet::new();
        let mut ct = None;
        let mut rule_toks: Vec<Vec<&str>> = Vec::new();
        while i < toks.len() {
            if toks[i] != "(" {
                return None;
            }
            let kw = *toks.get(i + 1)?;
            i += 2;
            let mut body = Vec::new();
            let mut depth = 0;
            loop {
                let t = *toks.get(i)?;
                i += 1;
                if t == "(" {
                    depth += 1;
                } else if t == ")" {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                body.push(t);
            }
            match kw {
                "VAR" => vars.extend(body.iter().map(|s| s.to_string())),
                "CONDITIONTYPE" => ct = Some(body.concat()),
                "RULES" => rule_toks.push(body),
                _ => return None,
            }
        }
        let mut rules = Vec::new();
        for body in rule_toks {
            let mut j = 0;
            while j < body.len() {
                let l = term(&body, &mut j)?;
                if body.get(j) != Some(&"->") {
                    return None;
                }
                j += 1;
                let r = term(&body, &mut j)?;
                let mut conds = Vec::new();
                if body.get(j) == Some(&"|") {
                    j += 1;
                    loop {
                        let a = term(&body, &mut j)?;
                        if !matches!(body.get(j), Some(&"==") | Some(&"->")) {
                            return None;
                        }
                        j += 1;
                        let b = term(&body, &mut j)?;
                        conds.push((a, b));
                        if body.get(j) == Some(&",") {
                            j += 1;
                        } else {
                            break;
                        }
                    }
                }
                rules.push((l, r, conds));
            }
        }
        Some(Shape { vars, condition_type: ct, rules })
    }

    fn term(t: &[&str], j: &mut usize) -> Option<String> {
        let name = *t.get(*j)?;
        if matches!(name, "(" | ")" | "," | "|" | "->" | "==") {
            return None;
        }
        *j += 1;
        if t.get(*j) != Some(&"(") {
            return Some(name.to_string());
        }
        *j += 1;
        let mut args = vec![term(t, j)?];
        while t.get(*j) == Some(&",") {
            *j += 1;
            args.push(term(t, j)?);
        }
        if t.get(*j) != Some(&")") {
            return None;
        }
        *j += 1;
        Some(format!("{name}({})", args.join(",")))
    }
}

fn shape_of(p: &Problem) -> oracle::Shape {
    oracle::Shape {
        vars: p.variables.clone(),
        condition_type: p.condition_type.map(|c| c.to_string()),
        rules: p
            .rules
            .iter()
            .map(|r| {
                (
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.conditions.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                )
            })
            .collect(),
    }
}

#[test]
fn conditional_example_matches_oracle() {
    let src = "(CONDITIONTYPE ORIENTED) (VAR x y) (RULES f(x) -> y | x == y)";
    let p = parse_problem(src).unwrap();
    assert_eq!(p.condition_type, Some(ConditionType::Oriented));
    assert_eq!(p.rules.len(), 1);
    assert!(p.rules[0].is_conditional());
    let expected = oracle::read(src).unwrap();
    assert_eq!(
        expected.rules,
        vec![("f(x)".to_string(), "y".to_string(), vec![("x".to_string(), "y".to_string())])]
    );
    assert_eq!(shape_of(&p), expected);
}

#[test]
fn fixtures_match_oracle() {
    for name in ["trs.trs", "ctrs.trs", "unusual-whitespace.trs"] {
        let src = fixture(name);
        let p = parse_problem(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(p.raw_source, src);
        assert_eq!(shape_of(&p), oracle::read(&src).unwrap(), "{name}");
        assert_eq!(parse_problem(&render_problem(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn fixture_categories() {
    assert_eq!(infer_category(&fixture("trs.trs")), FormatCategory::Trs);
    assert_eq!(infer_category(&fixture("ctrs.trs")), FormatCategory::Ctrs);
    assert_eq!(infer_category(&fixture("ho.trs")), FormatCategory::HigherOrder);
    assert_eq!(infer_category(&fixture("unusual-whitespace.trs")), FormatCategory::Trs);
    assert_eq!(infer_category(""), FormatCategory::Unknown);
}

#[test]
fn higher_order_is_not_parsed() {
    assert!(parse_problem(&fixture("ho.trs")).is_err());
}

#[test]
fn comments_do_not_affect_equality() {
    let a = parse_problem("(VAR x) (RULES f(x) -> x) (COMMENT one)").unwrap();
    let b = parse_problem("(COMMENT two) (VAR x)\n(RULES\n f(x)->x)").unwrap();
    assert_eq!(a, b);
}

fn count_symbols(p: &Problem) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    let mut visit = |t: &Term| {
        t.for_each_app(&mut |name, _| *counts.entry(name.to_string()).or_insert(0) += 1);
    };
    for r in &p.rules {
        visit(&r.lhs);
        visit(&r.rhs);
        for (a, b) in &r.conditions {
            visit(a);
            visit(b);
        }
    }
    counts
}

/// Changes the argument count of the `target`-th application of `symbol`.
fn mutate(t: &Term, symbol: &str, target: usize, seen: &mut usize) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => {
            let mut args: Vec<Term> = args.iter().map(|a| mutate(a, symbol, target, seen)).collect();
            if f == symbol {
                // growing never deletes other occurrences of `symbol`
                if *seen == target {
                    args.push(Term::constant("a"));
                }
                *seen += 1;
            }
            Term::App(f.clone(), args)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_then_parse_round_trips(p in problem_strategy()) {
        let text = render_problem(&p);
        let q = parse_problem(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(q.raw_source, text.clone());
        prop_assert_eq!(shape_of(&p), oracle::read(&text).unwrap());
    }

    #[test]
    fn arity_mutation_is_rejected(p in problem_strategy(), pick in any::<proptest::sample::Index>(), occ in any::<proptest::sample::Index>()) {
        let repeated: Vec<(String, usize)> = count_symbols(&p).into_iter().filter(|(_, n)| *n >= 2).collect();
        prop_assume!(!repeated.is_empty());
        let (symbol, n) = pick.get(&repeated).clone();
        let target = occ.index(n);
        let mut seen = 0;
        let mut m = p.clone();
        for r in &mut m.rules {
            r.lhs = mutate(&r.lhs, &symbol, target, &mut seen);
            r.rhs = mutate(&r.rhs, &symbol, target, &mut seen);
            for (a, b) in &mut r.conditions {
                *a = mutate(a, &symbol, target, &mut seen);
                *b = mutate(b, &symbol, target, &mut seen);
            }
        }
        let e = parse_problem(&render_problem(&m)).unwrap_err();
        prop_assert_eq!(e.kind, ParseErrorKind::InvalidRule);
    }

    #[test]
    fn infer_category_is_total_and_deterministic(s in ".{0,200}") {
        prop_assert_eq!(infer_category(&s), infer_category(&s));
    }

    #[test]
    fn infer_category_total_on_section_soup(s in "[()VARULESCOMNTDIPYF :>x\\- ]{0,80}") {
        let _ = infer_category(&s);
        let _ = parse_problem(&s);
    }

    #[test]
    fn accepted_sources_are_kept_verbatim(ws in "[ \t\r\n]{0,4}", ws2 in "[ \t\r\n]{0,4}") {
        let src = format!("{ws}(VAR x){ws2}(RULES{ws} f(x){ws2}->{ws}x){ws2}");
        let p = parse_problem(&src).unwrap();
        prop_assert_eq!(p.raw_source.as_bytes(), src.as_bytes());
    }
}
