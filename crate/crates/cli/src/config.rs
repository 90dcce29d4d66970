//! Experiment configuration: JSON schema, loading and invariant checks.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use dynatomo::matcore::{self, c, CMatrix, C64};
use dynatomo::povm::{ProjectorFamily, SubnormalizedProjector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complex number as `[re, im]`.
pub type Complex = [f64; 2];

pub fn to_c64(z: &Complex) -> C64 {
    c(z[0], z[1])
}

pub fn to_c64_vec(v: &[Complex]) -> Vec<C64> {
    v.iter().map(to_c64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Rud,
    Avgchannel,
    SicSimulate,
    IcCheck,
    #[serde(rename = "example-4-8")]
    Example48,
    WhDemo,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProtocolKind::Rud => "rud",
            ProtocolKind::Avgchannel => "avgchannel",
            ProtocolKind::SicSimulate => "sic-simulate",
            ProtocolKind::IcCheck => "ic-check",
            ProtocolKind::Example48 => "example-4-8",
            ProtocolKind::WhDemo => "wh-demo",
        };
        f.write_str(s)
    }
}

pub const EXAMPLE_BUILDER: &str = "example-4-8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Named family; only `"example-4-8"` ships.
    Builder(String),
    /// `[weight, [[re, im], …]]` per projector.
    Projectors(Vec<ProjectorSpec>),
    /// Random spanning family drawn from the master seed.
    Random { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSpec(pub f64, pub Vec<Complex>);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// Decay rates of the mixing distribution (`x − 1` of them).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    /// Decay rates of the average channel (`d²` of them).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Instants(Vec<f64>),
    Uniform(UniformGrid),
    Geometric(GeometricGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub ratio: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// Random density matrix; seed defaults to one derived from the master seed.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    MaximallyMixed,
    Pure(Vec<Complex>),
    Matrix(Vec<Vec<Complex>>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Complex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Complex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_tilde: Option<Vec<Complex>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// 1-based.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Keyed by 1-based outcome index.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<usize, OverrideSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    /// Probe state for the single-projector protocols.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<Complex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolKind) -> Self {
        Self {
            protocol,
            dimension: None,
            family: None,
            outcome_index: None,
            schedule: None,
            grid: None,
            shots: None,
            seed: None,
            overrides: BTreeMap::new(),
            state: None,
            probe: None,
            output: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{p}: {}", self.message)
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        let inner = e.into_inner();
        if inner.is_data() {
            CliError::Schema {
                pointer,
                message: inner.to_string(),
            }
        } else {
            CliError::Parse(inner.to_string())
        }
    })?;
    check_grid_order(&cfg)?;
    let violations = validate(&cfg);
    if !violations.is_empty() {
        return Err(CliError::Invariant(violations));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}

fn check_grid_order(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if let Some(GridSpec::Instants(t)) = &cfg.grid {
        if let Some(i) = t.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CliError::Schema {
                pointer: format!("/grid/{i}"),
                message: format!("time instant {} must be finite and nonnegative", t[i]),
            });
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(CliError::Schema {
                pointer: format!("/grid/{}", i + 1),
                message: format!(
                    "time instants must be strictly increasing ({} follows {})",
                    t[i + 1],
                    t[i]
                ),
            });
        }
    }
    Ok(())
}

/// The dimension stated or implied by the config.
pub fn inferred_dimension(cfg: &ExperimentConfig) -> Option<usize> {
    if let Some(d) = cfg.dimension {
        return Some(d);
    }
    match &cfg.family {
        Some(FamilySpec::Builder(b)) if b == EXAMPLE_BUILDER => return Some(3),
        Some(FamilySpec::Projectors(p)) => return p.first().map(|s| s.1.len()),
        _ => {}
    }
    if cfg.protocol == ProtocolKind::Example48 {
        return Some(3);
    }
    cfg.probe.as_ref().map(Vec::len)
}

pub fn family_size(cfg: &ExperimentConfig) -> Option<usize> {
    match &cfg.family {
        Some(FamilySpec::Builder(b)) if b == EXAMPLE_BUILDER => Some(9),
        Some(FamilySpec::Builder(_)) => None,
        Some(FamilySpec::Projectors(p)) => Some(p.len()),
        Some(FamilySpec::Random { count }) => Some(*count),
        None if cfg.protocol == ProtocolKind::Example48 => Some(9),
        None => None,
    }
}

fn grid_len(g: &GridSpec) -> Option<usize> {
    match g {
        GridSpec::Instants(t) => Some(t.len()),
        _ => None,
    }
}

fn is_unit(v: &[Complex]) -> bool {
    (matcore::norm(&to_c64_vec(v)) - 1.0).abs() <= 1e-10
}

/// Collects every invariant violation.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |pointer: &str, message: String| {
        out.push(Violation {
            pointer: pointer.to_string(),
            message,
        })
    };
    let d = inferred_dimension(cfg);
    let x = family_size(cfg);
    let needs_family = matches!(cfg.protocol, ProtocolKind::Rud | ProtocolKind::IcCheck);
    let single_projector = matches!(
        cfg.protocol,
        ProtocolKind::Avgchannel | ProtocolKind::SicSimulate
    );

    match d {
        Some(d) if d < 2 => bad("/dimension", format!("dimension {d} must be at least 2")),
        None if cfg.protocol != ProtocolKind::Example48 => {
            bad("/dimension", "dimension is required and cannot be inferred".into())
        }
        _ => {}
    }
    if let (Some(stated), Some(FamilySpec::Projectors(p))) = (cfg.dimension, &cfg.family) {
        if let Some(first) = p.first() {
            if first.1.len() != stated {
                bad(
                    "/dimension",
                    format!("dimension {stated} disagrees with projector length {}", first.1.len()),
                );
            }
        }
    }

    if needs_family && cfg.family.is_none() {
        bad("/family", format!("protocol {} needs a family", cfg.protocol));
    }
    match &cfg.family {
        Some(FamilySpec::Builder(b)) if b != EXAMPLE_BUILDER => {
            bad("/family/builder", format!("unknown builder {b:?}"))
        }
        Some(FamilySpec::Projectors(p)) => {
            if p.is_empty() {
                bad("/family/projectors", "no projectors".into());
            }
            let len = p.first().map(|s| s.1.len()).unwrap_or(0);
            for (i, ProjectorSpec(w, v)) in p.iter().enumerate() {
                if !(w.is_finite() && *w > 0.0) {
                    bad(&format!("/family/projectors/{i}/0"), format!("weight {w} must be positive"));
                }
                if v.len() != len {
                    bad(&format!("/family/projectors/{i}/1"), format!("vector has length {}, expected {len}", v.len()));
                } else if !is_unit(v) {
                    bad(&format!("/family/projectors/{i}/1"), "vector must have unit norm".into());
                }
            }
        }
        _ => {}
    }
    if let (Some(d), Some(x)) = (d, x) {
        if (needs_family || cfg.family.is_some()) && x < d * d {
            bad(
                "/family",
                format!("{x} projectors cannot be informationally complete in dimension {d} (need at least {})", d * d),
            );
        }
    }

    if let Some(j) = cfg.outcome_index {
        match x {
            Some(x) if j == 0 || j > x => {
                bad("/outcome_index", format!("outcome index {j} is outside 1..={x}"))
            }
            None => bad("/outcome_index", "outcome index needs a family".into()),
            _ => {}
        }
    }
    for (k, ov) in &cfg.overrides {
        let base = format!("/overrides/{k}");
        if let Some(x) = x {
            if *k == 0 || *k > x {
                bad(&base, format!("override index {k} is outside 1..={x}"));
            }
        }
        for (name, z) in [("z", ov.z), ("eta", ov.eta)] {
            if let Some(z) = z {
                if (to_c64(&z).norm() - 1.0).abs() > 1e-12 {
                    bad(&format!("{base}/{name}"), "phase must have unit modulus".into());
                }
            }
        }
        if let (Some(u), Some(d)) = (&ov.u_tilde, d) {
            if u.len() != d {
                bad(&format!("{base}/u_tilde"), format!("expected {d} entries"));
            }
        }
    }

    if let Some(s) = &cfg.schedule {
        if let Some(t) = &s.thetas {
            if let Some(x) = x {
                if t.len() + 1 != x {
                    bad("/schedule/thetas", format!("expected {} rates, got {}", x.saturating_sub(1), t.len()));
                }
            }
            if t.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                bad("/schedule/thetas", "rates must be positive".into());
            }
        }
        if let Some(g) = &s.gammas {
            if let Some(d) = d {
                if g.len() != d * d {
                    bad("/schedule/gammas", format!("expected {} rates, got {}", d * d, g.len()));
                }
            }
            if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                bad("/schedule/gammas", "rates must be nonnegative".into());
            }
        }
    }
    if let Some(g) = &cfg.grid {
        let expect = if single_projector { d.map(|d| d * d) } else { x };
        if let (Some(n), Some(e)) = (grid_len(g), expect) {
            if n != e {
                bad("/grid", format!("expected {e} instants, got {n}"));
            }
        }
        if let GridSpec::Geometric(GeometricGrid { ratio, scale }) = g {
            if !(*ratio > 1.0 && *scale > 0.0) {
                bad("/grid", "geometric grid needs ratio > 1 and scale > 0".into());
            }
        }
        if let GridSpec::Uniform(UniformGrid { start, step }) = g {
            if !(*start >= 0.0 && *step > 0.0) {
                bad("/grid", "uniform grid needs start >= 0 and step > 0".into());
            }
        }
    }

    if let Some(p) = &cfg.probe {
        if let Some(d) = d {
            if p.len() != d {
                bad("/probe", format!("expected {d} entries, got {}", p.len()));
            }
        }
        if !is_unit(p) {
            bad("/probe", "probe state must have unit norm".into());
        }
    } else if single_projector {
        if let Some(d) = d {
            if !(2..=3).contains(&d) {
                bad("/probe", format!("no built-in fiducial for dimension {d}; supply a probe"));
            }
        }
    }
    if cfg.protocol == ProtocolKind::SicSimulate {
        if let Some(d) = d {
            if !(2..=3).contains(&d) && cfg.probe.is_none() {
                bad("/dimension", "sic-simulate ships fiducials for d = 2 and 3 only".into());
            }
        }
    }

    match (&cfg.state, d) {
        (Some(StateSpec::Pure(v)), Some(d)) => {
            if v.len() != d {
                bad("/state/pure", format!("expected {d} entries"));
            } else if !is_unit(v) {
                bad("/state/pure", "state vector must have unit norm".into());
            }
        }
        (Some(StateSpec::Matrix(m)), Some(d)) => {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                bad("/state/matrix", format!("expected a {d}x{d} matrix"));
            } else {
                let rho = CMatrix::from_fn(d, d, |r, c| to_c64(&m[r][c]));
                if let Err(e) = dynatomo::rud::validate_state(&rho) {
                    bad("/state/matrix", e.to_string());
                }
            }
        }
        _ => {}
    }
    out
}

/// Builds the projector family named by the config.
pub fn build_family(cfg: &ExperimentConfig, d: usize, seed: u64) -> dynatomo::Result<ProjectorFamily> {
    match &cfg.family {
        None => Ok(dynatomo::worked_example::family()),
        Some(FamilySpec::Builder(_)) => Ok(dynatomo::worked_example::family()),
        Some(FamilySpec::Projectors(p)) => {
            let projectors = p
                .iter()
                .map(|ProjectorSpec(w, v)| SubnormalizedProjector::new(*w, to_c64_vec(v)))
                .collect::<dynatomo::Result<Vec<_>>>()?;
            ProjectorFamily::new(d, projectors)
        }
        Some(FamilySpec::Random { count }) => {
            ProjectorFamily::random(d, *count, &mut dynatomo::rng::stream(seed, 1))
        }
    }
}

/// Initial state; random states draw from a stream of the master seed
/// unless the config pins their own seed.
pub fn build_state(cfg: &ExperimentConfig, d: usize, seed: u64) -> CMatrix {
    match &cfg.state {
        None => matcore::random_density_matrix(d, &mut dynatomo::rng::stream(seed, 2)),
        Some(StateSpec::Random { seed: Some(s) }) => matcore::random_density_matrix_seeded(d, *s),
        Some(StateSpec::Random { seed: None }) => {
            matcore::random_density_matrix(d, &mut dynatomo::rng::stream(seed, 2))
        }
        Some(StateSpec::MaximallyMixed) => CMatrix::identity(d).scale_real(1.0 / d as f64),
        Some(StateSpec::Pure(v)) => CMatrix::projector(&to_c64_vec(v)),
        Some(StateSpec::Matrix(m)) => CMatrix::from_fn(d, d, |r, c| to_c64(&m[r][c])),
    }
}

pub fn build_overrides(cfg: &ExperimentConfig) -> dynatomo::householder::Overrides {
    cfg.overrides
        .iter()
        .map(|(k, o)| {
            (
                k - 1,
                dynatomo::householder::IndexOverride {
                    z: o.z.as_ref().map(to_c64),
                    eta: o.eta.as_ref().map(to_c64),
                    u_tilde: o.u_tilde.as_deref().map(to_c64_vec),
                },
            )
        })
        .collect()
}

pub fn build_grid(
    spec: Option<&GridSpec>,
    n: usize,
    default_scale: f64,
) -> dynatomo::Result<dynatomo::schedule::TimeGrid> {
    use dynatomo::schedule::{TimeGrid, DEFAULT_RATIO};
    match spec {
        None => TimeGrid::geometric(n, DEFAULT_RATIO, default_scale),
        Some(GridSpec::Instants(t)) => TimeGrid::new(t.clone()),
        Some(GridSpec::Uniform(u)) => TimeGrid::uniform(n, u.start, u.step),
        Some(GridSpec::Geometric(g)) => TimeGrid::geometric(n, g.ratio, g.scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_infers_dimension() {
        let cfg = parse_config(r#"{"protocol": "rud", "family": {"builder": "example-4-8"}}"#).unwrap();
        assert_eq!(inferred_dimension(&cfg), Some(3));
        assert_eq!(family_size(&cfg), Some(9));
    }

    #[test]
    fn unknown_keys_rejected_with_pointer() {
        let err = parse_config(r#"{"protocol": "rud", "family": {"builder": "example-4-8"}, "sedd": 1}"#)
            .unwrap_err();
        assert!(matches!(err, CliError::Schema { .. }), "{err}");
        let err = parse_config(r#"{"protocol": "rud", "family": {"projectors": [[1.0, [[1, 0], [0, "x"]]]]}}"#)
            .unwrap_err();
        match err {
            CliError::Schema { pointer, .. } => assert_eq!(pointer, "/family/projectors/0/1/1/1"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn duplicate_instants_name_the_grid() {
        let err = parse_config(
            r#"{"protocol": "rud", "dimension": 2, "family": {"random": {"count": 4}}, "grid": [0.1, 0.2, 0.2, 0.3]}"#,
        )
        .unwrap_err();
        match err {
            CliError::Schema { pointer, .. } => assert!(pointer.starts_with("/grid")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn too_few_projectors_is_an_invariant_error() {
        let vecs: Vec<String> = (0..8).map(|_| "[0.5, [[1,0],[0,0],[0,0]]]".to_string()).collect();
        let text = format!(r#"{{"protocol": "rud", "family": {{"projectors": [{}]}}}}"#, vecs.join(","));
        match parse_config(&text).unwrap_err() {
            CliError::Invariant(v) => assert!(v.iter().any(|v| v.pointer == "/family")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"{"protocol": "rud", "family": {"builder": "example-4-8"}, "outcome_index": 12,
                      "schedule": {"thetas": [1.0]}, "grid": [0.1, 0.2]}"#;
        match parse_config(text).unwrap_err() {
            CliError::Invariant(v) => assert_eq!(v.len(), 3, "{v:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn grid_forms_parse() {
        for g in ["[0.0, 1.0, 2.0, 3.0]", r#"{"start": 0.1, "step": 0.1}"#, r#"{"ratio": 16, "scale": 2}"#] {
            let text = format!(r#"{{"protocol": "rud", "dimension": 2, "family": {{"random": {{"count": 4}}}}, "grid": {g}}}"#);
            parse_config(&text).unwrap();
        }
    }
}
