//! Generators shared by property tests.

use proptest::prelude::*;

use crate::reader::format_real;

/// Well-formed surface expressions over a few names and the special forms.
pub fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["x", "y", "a", "f", "+", "*", "sin"])
            .prop_map(String::from),
        (-100.0f64..100.0).prop_map(format_real),
        Just("()".to_string()),
    ];
    leaf.prop_recursive(4, 40, 3, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["x", "y", "a"]), inner.clone())
                .prop_map(|(p, b)| format!("(lambda ({p}) {b})")),
            inner.clone().prop_map(|b| format!("(lambda (x y) {b})")),
            (inner.clone(), inner.clone()).prop_map(|(f, a)| format!("({f} {a})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(f, a, b)| format!("({f} {a} {b})")),
            (inner.clone(), inner.clone()).prop_map(|(v, b)| format!("(let ((y {v})) {b})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| format!("(if {c} {a} {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(cons {a} {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(list {a} {b})")),
            (prop::sample::select(vec!["car", "cdr"]), inner.clone())
                .prop_map(|(op, a)| format!("({op} {a})")),
        ]
    })
}

/// A lambda expression whose body is generated.
pub fn lambda_text() -> impl Strategy<Value = String> {
    expr_text().prop_map(|b| format!("(lambda (x) {b})"))
}
