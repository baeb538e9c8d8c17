//! The naive and custom-derivative library programs side by side.

mod common;

use common::*;

const PRELUDE: &str = "
(define sum (lambda (v) (((fold (lambda (q) (+ (car q) (cdr q)))) 0) v)))
";

const PAIRS: [(&str, &str, &[f64]); 4] = [
    ("log1pexp", "log1pexp-custom", &[-30.0, -3.0, -0.5, 0.0, 0.5, 2.0, 10.0, 40.0, 1000.0]),
    ("one-sided", "one-sided-custom", &[0.0, 1e-6, 0.25, 1.0, 4.0, 9.0, 100.0]),
    ("sqrt-newton", "sqrt-newton-custom", &[0.5, 2.0, 4.0, 9.0, 25.0]),
    ("sin-approx", "sin-custom", &[-3.0, -1.0, 0.0, 0.3, 1.0, 2.5, 7.0]),
];

#[test]
fn primal_outputs_are_bit_identical() {
    for (naive, custom, xs) in PAIRS {
        let exprs = xs
            .iter()
            .flat_map(|x| [format!("({naive} {x:?})"), format!("({custom} {x:?})")])
            .collect();
        let got = eval_reals("", exprs, BIG);
        for (x, pair) in xs.iter().zip(got.chunks(2)) {
            assert_eq!(pair[0].to_bits(), pair[1].to_bits(), "{naive} at {x}");
        }
    }
    let lists = "(list -1 0.5 2 3.25)";
    let a = eval_print(&format!("((map sin) {lists})"), BIG).unwrap();
    let b = eval_print(&format!("((map-custom sin) {lists})"), BIG).unwrap();
    assert_eq!(a, b);
}

/// Analytic derivatives where the naive gradient is NaN.
fn analytic(custom: &str, x: f64) -> f64 {
    match custom {
        "log1pexp-custom" => 1.0 / (1.0 + (-x).exp()),
        "one-sided-custom" => {
            let z = 1.0 + x.sqrt();
            (1.0 + z) / (2.0 * z * z)
        }
        _ => unreachable!("{custom}"),
    }
}

#[test]
fn gradients_agree() {
    for (naive, custom, xs) in &PAIRS[..3] {
        let exprs = xs
            .iter()
            .flat_map(|x| [format!("(gradient {naive} {x:?})"), format!("(gradient {custom} {x:?})")])
            .collect();
        let got = eval_reals("", exprs, BIG);
        for (x, pair) in xs.iter().zip(got.chunks(2)) {
            let (n, c) = (pair[0], pair[1]);
            if n.is_finite() {
                assert!(rel_err(c, n) <= 1e-5, "{custom} at {x}: {c} vs {n}");
            } else {
                assert!(c.is_finite(), "{custom} at {x}");
                assert!((c - analytic(custom, *x)).abs() <= 1e-10, "{custom} at {x}: {c}");
            }
        }
    }
}

#[test]
fn naive_failures_and_custom_fixes() {
    let got = eval_reals(
        "",
        vec![
            "(gradient log1pexp 1000)".into(),
            "(gradient log1pexp-custom 1000)".into(),
            "(gradient log1pexp-custom 0)".into(),
            "(gradient one-sided 0)".into(),
            "(gradient one-sided-custom 0)".into(),
            "(gradient one-sided-custom 4)".into(),
            "(gradient one-sided 4)".into(),
        ],
        BIG,
    );
    assert!(got[0].is_nan());
    assert_eq!(got[1], 1.0);
    assert!((got[2] - 0.5).abs() <= 1e-12);
    assert!(got[3].is_nan());
    assert!((got[4] - 1.0).abs() <= 1e-12);
    assert!((got[5] - 4.0 / 18.0).abs() <= 1e-10, "{}", got[5]);
    assert!((got[5] - got[6]).abs() <= 1e-10);
}

#[test]
fn sin_custom_at_a_knot() {
    let got = eval_reals(
        "",
        vec!["(sin-custom 0)".into(), "(gradient sin-custom 0)".into(), "(cos-approx 0)".into()],
        BIG,
    );
    assert_eq!(got[0], 0.0);
    assert!((got[1] - 1.0).abs() <= 1e-12);
    assert_eq!(got[1], got[2]);
}

#[test]
fn map_loss_gradients() {
    for m in ["map", "map-custom"] {
        let g = eval_real(
            &format!("{PRELUDE} (gradient (lambda (a) (sum (({m} (lambda (x) (* a x))) (list 1 2 3)))) 5)"),
            BIG,
        );
        assert!((g - 6.0).abs() <= 1e-10, "{m}: {g}");
    }
}

/// Runs the `map-custom` backpropagator by hand on `(map-custom f) xs` with
/// `f = λx. a × sin x` and the output sensitivity of `sum`.
fn map_custom_backprop(a: f64, xs: &[f64]) -> String {
    let list = xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    let ones = xs.iter().fold("()".to_string(), |acc, _| format!("(list 1 {acc})"));
    format!(
        "(let* ((a {a:?})
                (f (lambda (x) (* a (sin x))))
                (out ((rad (map-custom f)) (rad (list {list}))))
                (r ((cdr out) {ones})))
           r)"
    )
}

#[test]
fn map_custom_input_sensitivities() {
    let src = "(let* ((a 5)
                (f (lambda (x) (* a x)))
                (out ((rad (map-custom f)) (rad (list 1 2 3)))))
           (cdr ((cdr out) (list 1 (list 1 (list 1 ()))))))";
    assert_eq!(eval_print(src, BIG).unwrap(), "(5 (5 (5 ())))");
}

#[test]
fn map_custom_closure_sensitivity_matches_finite_differences() {
    let xs = [0.3, -1.2, 2.0, 0.7];
    let a = 1.7;
    // ḟ is the bree-ordered list over f's free variables (*, a, sin).
    let fdot = eval_print(&format!("(car (car {}))", map_custom_backprop(a, &xs)), BIG).unwrap();
    let da = eval_real(&format!("(car (cdr (car (car {}))))", map_custom_backprop(a, &xs)), BIG);
    assert!(fdot.starts_with("(() "), "{fdot}");
    let loss = |a: f64| {
        let list = xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        eval_real(
            &format!("{PRELUDE} (sum ((map (lambda (x) (* {a:?} (sin x)))) (list {list})))"),
            BIG,
        )
    };
    let h = 1e-6;
    let fd = (loss(a + h) - loss(a - h)) / (2.0 * h);
    assert!(rel_err(da, fd) <= 1e-4, "{da} vs {fd}");
    let exact: f64 = xs.iter().map(|x| x.sin()).sum();
    assert!((da - exact).abs() <= 1e-12);
}

#[test]
fn naive_fix_at_an_exact_starting_point() {
    // Newton from a = 1 starts at the fixed point, so fix returns its input untouched and
    // the naive gradient is that of the identity. The custom rule still gives 1/(2√a).
    let got = eval_reals(
        "",
        vec!["(gradient sqrt-newton 1)".into(), "(gradient sqrt-newton-custom 1)".into()],
        BIG,
    );
    assert_eq!(got[0], 1.0);
    assert!((got[1] - 0.5).abs() <= 1e-6, "{}", got[1]);
}

#[test]
fn fix_diverges_with_a_resource_error() {
    let e = eval_print("(((fix (lambda (x y) false)) (lambda (y) y)) 1)", 100_000).unwrap_err();
    assert!(e.contains("step budget"), "{e}");
}
