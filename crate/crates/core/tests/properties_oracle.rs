mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use cylmatter::bloch::{MeasurementMode, MeasurementSpec};
use cylmatter::lattice::{grid_edges, ExperimentSpec, GateOp, InputState, ScheduleStep};
use cylmatter::oracle::exact_distribution;

/// Random 2×3 grid specs: gates in round 0, one measurement per node afterwards.
fn grid_specs() -> impl Strategy<Value = ExperimentSpec> {
    (
        prop::collection::vec((0.0..PI, 0.0..2.0 * PI), 6),
        prop::collection::vec(0.0..2.0 * PI, 7),
        prop::collection::vec((any::<bool>(), 0.0..2.0 * PI), 6),
    )
        .prop_map(|(inputs, phases, meas)| {
            let inputs = inputs.into_iter().map(|(theta, azimuth)| InputState { azimuth, ..InputState::pure(theta) }).collect();
            let gates = grid_edges(2, 3).into_iter().zip(phases).map(|(edge, phi)| GateOp { edge, phi, round: 0 }).collect();
            let schedule = meas
                .into_iter()
                .enumerate()
                .map(|(k, (z, omega))| {
                    let m = if z { MeasurementSpec::z() } else { MeasurementSpec::xy(omega) };
                    ScheduleStep { round: 1, ..ScheduleStep::new(k, m) }
                })
                .collect();
            ExperimentSpec::new(inputs, gates, schedule)
        })
}

fn max_gap(a: &std::collections::BTreeMap<String, f64>, b: &std::collections::BTreeMap<String, f64>) -> f64 {
    a.keys().chain(b.keys()).map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(common::config(30, 51))]

    #[test]
    fn destructive_and_quasi_destructive_agree(spec in grid_specs()) {
        let mut quasi = spec.clone();
        for s in &mut quasi.schedule {
            s.measurement.mode = MeasurementMode::QuasiDestructive;
        }
        let (d, q) = (exact_distribution(&spec).unwrap(), exact_distribution(&quasi).unwrap());
        prop_assert!(max_gap(&d, &q) < 1e-10);
    }

    #[test]
    fn measurement_order_is_irrelevant(spec in grid_specs(), order in Just((0u32..6).collect::<Vec<_>>()).prop_shuffle()) {
        let mut permuted = spec.clone();
        for (s, r) in permuted.schedule.iter_mut().zip(order) {
            s.round = 1 + r;
        }
        let (d, p) = (exact_distribution(&spec).unwrap(), exact_distribution(&permuted).unwrap());
        prop_assert!(max_gap(&d, &p) < 1e-10);
        prop_assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
