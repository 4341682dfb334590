//! Shared proptest strategies.

use crate::design::{build_design, DesignResult};
use crate::envelope::DecayEnvelope;
use crate::profile::Profile;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Observable design of order 1..=3 with an arbitrary gain and envelope constants.
pub fn design_with_envelope() -> impl Strategy<Value = (DesignResult, DecayEnvelope)> {
    (1usize..=3)
        .prop_flat_map(|n| {
            let q_max = 0.95 * ((n + 1) as f64 * PI).powi(2);
            let coeff = (0.05f64..1.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m });
            (
                0.0..q_max,
                prop::collection::vec(coeff, n + 1),
                prop::collection::vec(-20.0f64..20.0, n + 1),
                1.0f64..20.0,
                0.1f64..5.0,
            )
        })
        .prop_map(|(q, c, l, r, omega)| {
            let order = c.len() - 1;
            let d = build_design(q, order, &Profile::Coefficients(c)).unwrap().with_gain(l).unwrap();
            (d, DecayEnvelope { r, omega })
        })
}
