//! Empirical suppression orders of the corrected sequences, one channel at a time.

use dcnot::analysis::{evaluate_with_error, suppression_order, SuppressionOrder, INFIDELITY_FLOOR};
use dcnot::catalog::named_sequence;
use dcnot::params::ParamTable;
use dcnot::su4::PauliString;

fn slope(id: &str, channel: PauliString, amplitudes: &[f64]) -> SuppressionOrder {
    let s = named_sequence(id, ParamTable::refined()).unwrap();
    let reference = s.sequence.ideal();
    suppression_order(&|d| evaluate_with_error(&s.sequence, d), &reference, channel, amplitudes, INFIDELITY_FLOOR)
        .unwrap()
}

fn assert_slope(id: &str, channel: PauliString, amplitudes: &[f64], expected: f64) {
    match slope(id, channel, amplitudes) {
        SuppressionOrder::Measured { slope, .. } => {
            assert!((slope - expected).abs() < 0.3, "{id} {channel}: slope {slope}, expected {expected}")
        }
        SuppressionOrder::Absent => panic!("{id} {channel}: no error above the floor"),
    }
}

const RANGE: [f64; 3] = [1e-3, 3e-3, 1e-2];

#[test]
fn length5_orders() {
    assert_slope("length5", PauliString::XI, &RANGE, 4.0);
    assert_slope("length5", PauliString::ZZ, &RANGE, 2.0);
}

#[test]
fn two_pulse_cnot_single_anticommuting_channel() {
    assert_slope("cnot-k20", PauliString::XI, &RANGE, 4.0);
    assert_slope("cnot-k20", PauliString::IY, &RANGE, 4.0);
}

#[test]
fn final_cnot_orders_depend_on_channel() {
    // ZZ errors first survive at second order; a lone anticommuting channel
    // cancels one order further.
    assert_slope("cnot-final-k20", PauliString::ZZ, &RANGE, 4.0);
    assert_slope("cnot-final-k20", PauliString::XI, &RANGE, 6.0);
    assert_slope("cnot-final-k20", PauliString::IY, &RANGE, 6.0);
}

#[test]
fn second_order_cnot_zz_channel() {
    assert_slope("cnot-second-order", PauliString::ZZ, &RANGE, 8.0);
}
