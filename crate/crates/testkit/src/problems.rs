//! Random problem generators.

use cocoweb_core::problem::{ConditionType, Problem, Rule, Term};
use proptest::prelude::*;

/// Function symbols with their fixed arities, including identifiers made of
/// punctuation that the lexer must keep apart from `->` and `==`.
pub const SYMBOLS: &[(&str, usize)] = &[
    ("f", 2),
    ("g", 1),
    ("h", 3),
    ("s", 1),
    ("+", 2),
    ("cons", 2),
    ("a", 0),
    ("b", 0),
    ("0", 0),
    ("nil", 0),
    ("f'", 1),
    ("-", 2),
    ("=", 1),
];
pub const VARS: &[&str] = &["x", "y", "z", "xs", "x'"];

pub fn term_strategy(vars: Vec<String>) -> impl Strategy<Value = Term> {
    let constants: Vec<Term> = SYMBOLS.iter().filter(|s| s.1 == 0).map(|s| Term::constant(s.0)).collect();
    let mut leaves: Vec<Term> = vars.into_iter().map(Term::Var).collect();
    leaves.extend(constants);
    let leaf = proptest::sample::select(leaves);
    leaf.prop_recursive(4, 24, 3, |inner| {
        let nonconst: Vec<(&str, usize)> = SYMBOLS.iter().copied().filter(|s| s.1 > 0).collect();
        (proptest::sample::select(nonconst), proptest::collection::vec(inner, 3))
            .prop_map(|((f, n), mut args)| {
                args.truncate(n);
                Term::app(f, args)
            })
    })
}

pub fn app_strategy(vars: Vec<String>) -> impl Strategy<Value = Term> {
    let nonconst: Vec<(&str, usize)> = SYMBOLS.iter().copied().filter(|s| s.1 > 0).collect();
    (proptest::sample::select(nonconst), proptest::collection::vec(term_strategy(vars), 3)).prop_map(
        |((f, n), mut args)| {
            args.truncate(n);
            Term::app(f, args)
        },
    )
}

/// Well-formed problems: consistent arities, declared variables only, and
/// conditions only when a condition type is present.
pub fn problem_strategy() -> impl Strategy<Value = Problem> {
    (
        proptest::sample::subsequence(VARS.to_vec(), 0..=VARS.len()),
        proptest::option::of(proptest::sample::select(vec![
            ConditionType::Oriented,
            ConditionType::Join,
            ConditionType::SemiEquational,
        ])),
    )
        .prop_flat_map(|(vars, ct)| {
            let vars: Vec<String> = vars.into_iter().map(String::from).collect();
            let max_conds = if ct.is_some() { 3 } else { 0 };
            let rule = (
                app_strategy(vars.clone()),
                term_strategy(vars.clone()),
                proptest::collection::vec((term_strategy(vars.clone()), term_strategy(vars.clone())), 0..=max_conds),
            )
                .prop_map(|(lhs, rhs, conditions)| Rule { lhs, rhs, conditions });
            (Just(vars), Just(ct), proptest::collection::vec(rule, 0..6))
        })
        .prop_map(|(vars, condition_type, rules)| Problem {
            variables: vars.into_iter().collect(),
            rules,
            condition_type,
            ..Problem::default()
        })
}

