use std::collections::BTreeMap;

use dynatomo_cli::config::{
    parse_config, ExperimentConfig, FamilySpec, GeometricGrid, GridSpec, OutputSpec, OverrideSpec, ProtocolKind,
    ScheduleSpec, StateSpec, UniformGrid,
};
use proptest::prelude::*;

fn increasing(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..3.0, n).prop_map(|steps| {
        let mut t = 0.0;
        steps
            .into_iter()
            .map(|s| {
                let v = t;
                t += s;
                v
            })
            .collect()
    })
}

fn grid(n: usize) -> impl Strategy<Value = Option<GridSpec>> {
    prop_oneof![
        Just(None),
        increasing(n).prop_map(|t| Some(GridSpec::Instants(t))),
        (0.0f64..1.0, 0.01f64..1.0).prop_map(|(start, step)| Some(GridSpec::Uniform(UniformGrid { start, step }))),
        (1.5f64..20.0, 0.1f64..5.0).prop_map(|(ratio, scale)| Some(GridSpec::Geometric(GeometricGrid { ratio, scale }))),
    ]
}

fn unit_phase() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..std::f64::consts::TAU).prop_map(|a| [a.cos(), a.sin()])
}

fn state() -> impl Strategy<Value = Option<StateSpec>> {
    prop_oneof![
        Just(None),
        Just(Some(StateSpec::MaximallyMixed)),
        any::<Option<u64>>().prop_map(|seed| Some(StateSpec::Random { seed })),
    ]
}

fn output() -> impl Strategy<Value = Option<OutputSpec>> {
    prop_oneof![
        Just(None),
        ("[a-z]{1,8}", proptest::option::of("[a-z]{1,8}")).prop_map(|(j, c)| Some(OutputSpec {
            json: Some(format!("{j}.json")),
            csv: c.map(|c| format!("{c}.csv")),
        })),
    ]
}

fn rud_config() -> impl Strategy<Value = ExperimentConfig> {
    (2usize..4, 0usize..3).prop_flat_map(|(d, extra)| {
        let x = d * d + extra;
        (
            Just((d, x)),
            proptest::option::of(1..=x),
            proptest::option::of(increasing(x - 1).prop_map(|t| t.into_iter().map(|v| v + 0.5).collect::<Vec<_>>())),
            grid(x),
            any::<Option<u64>>(),
            any::<Option<u64>>(),
            proptest::option::of(unit_phase()),
            state(),
            output(),
        )
            .prop_map(|((d, x), j, thetas, grid, shots, seed, eta, state, output)| {
                let mut overrides = BTreeMap::new();
                if let Some(eta) = eta {
                    overrides.insert(x, OverrideSpec { eta: Some(eta), ..Default::default() });
                }
                ExperimentConfig {
                    dimension: Some(d),
                    family: Some(FamilySpec::Random { count: x }),
                    outcome_index: j,
                    schedule: thetas.map(|t| ScheduleSpec { thetas: Some(t), gammas: None }),
                    grid,
                    shots,
                    seed,
                    overrides,
                    state,
                    output,
                    ..ExperimentConfig::new(ProtocolKind::Rud)
                }
            })
    })
}

fn avg_config() -> impl Strategy<Value = ExperimentConfig> {
    (2usize..4).prop_flat_map(|d| {
        (
            Just(d),
            proptest::option::of(prop::collection::vec(0.0f64..10.0, d * d)),
            grid(d * d),
            any::<Option<u64>>(),
            state(),
            any::<bool>(),
        )
            .prop_map(|(d, gammas, grid, seed, state, sic)| ExperimentConfig {
                dimension: Some(d),
                schedule: gammas.map(|g| ScheduleSpec { thetas: None, gammas: Some(g) }),
                grid,
                seed,
                state,
                ..ExperimentConfig::new(if sic { ProtocolKind::SicSimulate } else { ProtocolKind::Avgchannel })
            })
    })
}

proptest! {
    #[test]
    fn rud_config_round_trips(cfg in rud_config()) {
        let back = parse_config(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn single_projector_config_round_trips(cfg in avg_config()) {
        let back = parse_config(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn example_and_demo_configs_round_trip() {
    for cfg in [
        ExperimentConfig::new(ProtocolKind::Example48),
        ExperimentConfig { dimension: Some(5), ..ExperimentConfig::new(ProtocolKind::WhDemo) },
        ExperimentConfig {
            family: Some(FamilySpec::Builder("example-4-8".into())),
            ..ExperimentConfig::new(ProtocolKind::IcCheck)
        },
    ] {
        assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg);
    }
}
