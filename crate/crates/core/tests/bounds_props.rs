//! Numerical properties of the trigger-bound calculators.

use proptest::prelude::*;

use emsr_core::bounds::{c0_max_p1, c0_max_p1b, c0_max_p2, c_from_c0};
use emsr_core::msr::ProtocolKind;

fn forward(protocol: ProtocolKind, gamma: f64, n: usize, c: f64) -> f64 {
    match protocol {
        ProtocolKind::P1 => c0_max_p1(gamma, n, c).unwrap(),
        ProtocolKind::P1B => c0_max_p1b(gamma, n, c).unwrap(),
        ProtocolKind::P2 => c0_max_p2(gamma, n, c).unwrap(),
    }
}

proptest! {
    // Inverting the largest admissible offset recovers the error level.
    #[test]
    fn round_trip_recovers_the_error_level(
        gamma in 0.01f64..=0.5,
        n in 2usize..12,
        c in 1e-6f64..1e3,
    ) {
        for protocol in [ProtocolKind::P1, ProtocolKind::P1B, ProtocolKind::P2] {
            let c0 = forward(protocol, gamma, n, c);
            let back = c_from_c0(protocol, gamma, n, c0).unwrap();
            prop_assert!(
                (back - c).abs() <= 1e-12 * c.abs(),
                "{protocol}: {back} vs {c}"
            );
        }
    }

    #[test]
    fn offsets_order_p2_above_p1_above_p1b(
        gamma in 0.01f64..=0.5,
        n in 2usize..12,
        c in 1e-6f64..1e3,
    ) {
        let p1 = forward(ProtocolKind::P1, gamma, n, c);
        let p1b = forward(ProtocolKind::P1B, gamma, n, c);
        let p2 = forward(ProtocolKind::P2, gamma, n, c);
        prop_assert!(p2 > p1, "gamma={gamma} n={n} c={c}: {p2} !> {p1}");
        prop_assert!(p1 > p1b, "gamma={gamma} n={n} c={c}: {p1} !> {p1b}");
    }

    #[test]
    fn offsets_grow_with_c_and_shrink_with_n(
        gamma in 0.01f64..=0.5,
        n in 2usize..11,
        c in 1e-3f64..1e3,
    ) {
        for protocol in [ProtocolKind::P1, ProtocolKind::P1B, ProtocolKind::P2] {
            let base = forward(protocol, gamma, n, c);
            prop_assert!(forward(protocol, gamma, n, c * 2.0) > base, "{protocol} not increasing in c");
            prop_assert!(forward(protocol, gamma, n + 1, c) < base, "{protocol} not decreasing in n");
        }
    }
}

// A fixed grid over the admissible parameter space, denser than the random
// sampling above so the ordering claim is anchored deterministically.
#[test]
fn ordering_holds_on_a_dense_grid() {
    for gi in 1..=50 {
        let gamma = gi as f64 * 0.01;
        for n in 2..=10 {
            for c in [1e-4, 1e-2, 1.0, 1e2] {
                let p1 = forward(ProtocolKind::P1, gamma, n, c);
                let p1b = forward(ProtocolKind::P1B, gamma, n, c);
                let p2 = forward(ProtocolKind::P2, gamma, n, c);
                assert!(p2 > p1 && p1 > p1b, "gamma={gamma} n={n} c={c}");
            }
        }
    }
}
