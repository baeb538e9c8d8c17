//! Laws of 0, ⊕, J and J⁻¹ on random values.

mod common;

use common::algebra;

const CASES: u32 = 1000;

fn run(check: fn(u32) -> Result<(), String>) {
    if let Err(e) = vlad::runtime::with_big_stack(move || check(CASES)) {
        panic!("{e}");
    }
}

#[test]
fn inverse_after_j_is_identity() {
    run(algebra::inverse_after_j);
}

#[test]
fn j_after_inverse_is_identity_on_reverse_values() {
    run(algebra::j_after_inverse);
}

#[test]
fn attached_derivatives_project_to_the_primal() {
    run(algebra::projections);
}

#[test]
fn j_and_inverse_of_attached_derivatives() {
    run(algebra::j_rules);
}

#[test]
fn plus_and_zero_form_a_commutative_monoid() {
    run(algebra::monoid);
}

#[test]
fn non_conformant_plus_names_the_path() {
    run(algebra::non_conformance);
}
