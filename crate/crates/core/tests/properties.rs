mod common;

use common::props;

#[test]
fn printed_scripts_parse_back() {
    props::parser_round_trip(2000).unwrap();
}

#[test]
fn elaborated_variants_pass_the_il_checker() {
    props::elaboration_rechecks(300).unwrap();
}

#[test]
fn extracted_algorithms_bind_before_use() {
    props::binding_soundness(300).unwrap();
}

#[test]
fn valid_programs_respect_stack_discipline() {
    props::stack_discipline(1000).unwrap();
}
