//! Scenario files.
//!
//! A scenario is a flat key-value file with dotted sections, read with a TOML
//! parser:
//!
//! ```text
//! [topology]
//! kind = "torus"
//! rows = 5
//! cols = 5
//!
//! [protocol]
//! period = 10000
//! epsilon = 0.01
//! sigma = 0.005
//! s_th = 80
//!
//! [sweep]
//! s_th = [20, 40, 60, 80, 95]
//! ```
//!
//! Every key is optional except `topology.kind` and the keys that kind needs.
//! Unknown keys, wrong types and out-of-range values are rejected with the
//! key path and line. The full key list is in the README.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ebs_core::protocol::mrf::MrfConfig;
use ebs_core::protocol::{ProtocolConfig, Variant};
use ebs_core::sim::{
    ChurnAction, ChurnEvent, ClockDriftModel, DelayKind, DelayModel, InitialPhases, JoinSpec, LinkFaultModel, Protocol,
    Scenario, SimTime, StartMode,
};
use ebs_core::topology::{make_complete, make_random_geometric, make_regular_grid, radius_for_average_degree};
use ebs_core::{CouplingParams, NodeId, Phase, Ticks, Topology};
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::topology_file::load_topology;

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    /// Four-neighbour grid with wraparound.
    Torus {
        rows: u32,
        cols: u32,
    },
    Grid {
        rows: u32,
        cols: u32,
    },
    Complete {
        n: u32,
    },
    /// Random geometric graph in the unit square; `radius` or a target
    /// average degree, which is converted to a radius for this seed.
    RandomGeometric {
        n: u32,
        radius: RggRadius,
        seed: u64,
    },
    File {
        path: String,
        directed: bool,
        nodes: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RggRadius {
    Fixed(f64),
    AverageDegree(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySpec {
    None,
    /// One-way delay in ticks.
    Ticks(Ticks),
    /// Phase delay `δ`; the tick delay follows the period.
    Phase(f64),
    Uniform {
        lo: Ticks,
        hi: Ticks,
    },
}

impl DelaySpec {
    pub fn model(&self, period: Ticks) -> DelayModel {
        match *self {
            DelaySpec::None => DelayModel::default(),
            DelaySpec::Ticks(0) => DelayModel::default(),
            DelaySpec::Ticks(nu) => DelayModel::new(DelayKind::Deterministic(nu)),
            DelaySpec::Phase(delta) => DelayModel::from_phase_delay(delta, period),
            DelaySpec::Uniform { lo, hi } => DelayModel::new(DelayKind::Uniform { lo, hi }),
        }
    }

    /// Deterministic delay in ticks as used by the closed-form checks. For a
    /// uniform delay this is the upper bound.
    pub fn nu(&self, period: Ticks) -> Ticks {
        match self.model(period).kind {
            DelayKind::None => 0,
            DelayKind::Deterministic(nu) => nu,
            DelayKind::Uniform { hi, .. } => hi,
        }
    }
}

/// Baseline comparison run. `None` fields follow the period: `T/2` and
/// `floor(εT)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MrfSpec {
    pub refractory: Option<Ticks>,
    pub guard: Option<Ticks>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChurnSpec {
    Leave { at: u32, node: u32 },
    Join { at: u32, node: u32, links: Vec<u32> },
}

impl ChurnSpec {
    pub fn at(&self) -> u32 {
        match self {
            ChurnSpec::Leave { at, .. } | ChurnSpec::Join { at, .. } => *at,
        }
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Period,
    Epsilon,
    Sigma,
    SyncThreshold,
    C0,
    Delta,
    Nu,
    Loss,
    Airtime,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 9] = [
        SweepAxis::Period,
        SweepAxis::Epsilon,
        SweepAxis::Sigma,
        SweepAxis::SyncThreshold,
        SweepAxis::C0,
        SweepAxis::Delta,
        SweepAxis::Nu,
        SweepAxis::Loss,
        SweepAxis::Airtime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Period => "period",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Sigma => "sigma",
            SweepAxis::SyncThreshold => "s_th",
            SweepAxis::C0 => "c0",
            SweepAxis::Delta => "delta",
            SweepAxis::Nu => "nu",
            SweepAxis::Loss => "loss",
            SweepAxis::Airtime => "airtime",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        SweepAxis::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Key the axis overrides, for messages.
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Period => "protocol.period",
            SweepAxis::Epsilon => "protocol.epsilon",
            SweepAxis::Sigma => "protocol.sigma",
            SweepAxis::SyncThreshold => "protocol.s_th",
            SweepAxis::C0 => "protocol.c0",
            SweepAxis::Delta => "delay.delta",
            SweepAxis::Nu => "delay.nu",
            SweepAxis::Loss => "faults.loss",
            SweepAxis::Airtime => "faults.airtime",
        }
    }

    fn integral(self) -> bool {
        matches!(
            self,
            SweepAxis::Period | SweepAxis::C0 | SweepAxis::Nu | SweepAxis::Airtime
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Directory that relative topology paths resolve against.
    pub base_dir: PathBuf,
    pub topology: TopologySpec,
    pub protocol: ProtocolConfig,
    pub mrf: Option<MrfSpec>,
    pub delay: DelaySpec,
    pub faults: LinkFaultModel,
    pub drift: ClockDriftModel,
    pub churn: Vec<ChurnSpec>,
    pub horizon: u32,
    pub seed: u64,
    /// Seeds per sweep point, consecutive from `seed`.
    pub seeds: u32,
    pub start_mode: StartMode,
    /// Explicit initial phases in node id order; random when absent.
    pub phases: Option<Vec<f64>>,
    pub payload_rate: f64,
    /// First period of the steady-state averages; defaults to `horizon / 2`.
    pub steady_from: Option<u32>,
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolKind {
    Ebs,
    Mrf,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Ebs => "ebs",
            ProtocolKind::Mrf => "mrf",
        }
    }
}

/// One simulation of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    /// Sweep value, absent for a plain run.
    pub point: Option<f64>,
    pub seed: u64,
    pub kind: ProtocolKind,
    pub config: ScenarioConfig,
}

impl PlannedRun {
    /// File stem for this run's outputs.
    pub fn stem(&self, axis: Option<SweepAxis>) -> String {
        match (axis, self.point) {
            (Some(a), Some(v)) => format!("{}-{}-{}-seed{}", self.kind.as_str(), a.name(), fmt_num(v), self.seed),
            _ => format!("{}-seed{}", self.kind.as_str(), self.seed),
        }
    }
}

impl ScenarioConfig {
    /// A configuration with every default filled in.
    pub fn with_topology(topology: TopologySpec) -> Self {
        ScenarioConfig {
            base_dir: PathBuf::from("."),
            topology,
            protocol: ProtocolConfig::default(),
            mrf: None,
            delay: DelaySpec::None,
            faults: LinkFaultModel::lossless(),
            drift: ClockDriftModel::default(),
            churn: Vec::new(),
            horizon: 60,
            seed: 0,
            seeds: 1,
            start_mode: StartMode::Initialization,
            phases: None,
            payload_rate: 1.0,
            steady_from: None,
            sweep: None,
        }
    }

    pub fn steady_from(&self) -> u32 {
        self.steady_from.unwrap_or(self.horizon / 2)
    }

    pub fn build_topology(&self) -> Result<Topology> {
        Ok(match &self.topology {
            TopologySpec::Torus { rows, cols } => make_regular_grid(*rows, *cols, true)?,
            TopologySpec::Grid { rows, cols } => make_regular_grid(*rows, *cols, false)?,
            TopologySpec::Complete { n } => make_complete(*n)?,
            TopologySpec::RandomGeometric { n, radius, seed } => {
                let r = match *radius {
                    RggRadius::Fixed(r) => r,
                    RggRadius::AverageDegree(d) => radius_for_average_degree(*n, d, *seed)?,
                };
                make_random_geometric(*n, r, *seed)?
            }
            TopologySpec::File { path, directed, nodes } => {
                load_topology(&self.base_dir.join(path), *directed, *nodes)?
            }
        })
    }

    pub fn mrf_config(&self) -> MrfConfig {
        let spec = self.mrf.unwrap_or_default();
        let mut m = MrfConfig::half_period(self.protocol.period, self.protocol.epsilon);
        if let Some(r) = spec.refractory {
            m.refractory = r;
        }
        if let Some(g) = spec.guard {
            m.guard = g;
        }
        m
    }

    /// The engine scenario for one protocol and seed.
    pub fn to_scenario(&self, kind: ProtocolKind, seed: u64) -> Result<Scenario> {
        let topology = self.build_topology()?;
        let period = self.protocol.period;
        let protocol = match kind {
            ProtocolKind::Ebs => Protocol::Ebs(self.protocol.clone()),
            ProtocolKind::Mrf => Protocol::Mrf {
                config: self.mrf_config(),
                coupling: CouplingParams::new(self.protocol.epsilon, self.protocol.sigma)?,
            },
        };
        let initial = match &self.phases {
            None => InitialPhases::Random,
            Some(values) => {
                if values.len() != topology.len() {
                    return Err(Error::Plan(format!(
                        "run.phases has {} entries for {} nodes",
                        values.len(),
                        topology.len()
                    )));
                }
                let mut map = std::collections::BTreeMap::new();
                for (id, &v) in topology.node_ids().zip(values) {
                    map.insert(id, Phase::new(v)?);
                }
                InitialPhases::Explicit(map)
            }
        };
        let churn = self
            .churn
            .iter()
            .map(|c| ChurnEvent {
                at: SimTime(c.at() as Ticks * period),
                action: match c {
                    ChurnSpec::Leave { node, .. } => ChurnAction::Leave(NodeId(*node)),
                    ChurnSpec::Join { node, links, .. } => ChurnAction::Join(JoinSpec {
                        id: NodeId(*node),
                        links: links.iter().copied().map(NodeId).collect(),
                    }),
                },
            })
            .collect();
        let mut s = Scenario::new(topology, protocol, self.horizon, seed);
        s.delay = self.delay.model(period);
        s.faults = self.faults;
        s.drift = self.drift.clone();
        s.churn = churn;
        s.initial = initial;
        s.start_mode = self.start_mode;
        s.payload_rate = self.payload_rate;
        s.validate()?;
        Ok(s)
    }

    /// Copy with one sweep value applied.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
        let mut c = self.clone();
        c.sweep = None;
        let bad = |reason: &str| Error::Plan(format!("sweep value {} for `{}`: {reason}", fmt_num(value), axis.key()));
        if axis.integral() && (value < 0.0 || value.fract() != 0.0) {
            return Err(bad("must be a non-negative integer"));
        }
        let v = value as Ticks;
        match axis {
            SweepAxis::Period => c.protocol.period = v,
            SweepAxis::Epsilon => c.protocol.epsilon = value,
            SweepAxis::Sigma => c.protocol.sigma = value,
            SweepAxis::SyncThreshold => c.protocol.sync_threshold = value,
            SweepAxis::C0 => c.protocol.c0 = v,
            SweepAxis::Delta => c.delay = DelaySpec::Phase(value),
            SweepAxis::Nu => c.delay = DelaySpec::Ticks(v),
            SweepAxis::Loss => c.faults.loss_probability = value,
            SweepAxis::Airtime => c.faults.airtime = v,
        }
        c.protocol.validate().map_err(|e| bad(&e.to_string()))?;
        c.faults.validate().map_err(|e| bad(&e.to_string()))?;
        if let DelaySpec::Phase(d) = c.delay {
            if !(0.0..1.0).contains(&d) {
                return Err(bad("must lie in [0, 1)"));
            }
        }
        Ok(c)
    }

    /// Every run to execute, in output order: sweep point, then seed, then
    /// EBS before its MRF pair. Without `sweep` the base values run once per
    /// seed.
    pub fn plan(&self, sweep: bool) -> Result<Vec<PlannedRun>> {
        let points: Vec<(Option<f64>, ScenarioConfig)> = match (&self.sweep, sweep) {
            (Some(s), true) => s
                .values
                .iter()
                .map(|&v| Ok((Some(v), self.with_axis(s.axis, v)?)))
                .collect::<Result<_>>()?,
            (None, true) => return Err(Error::Plan("scenario has no [sweep] section".into())),
            (_, false) => {
                let mut c = self.clone();
                c.sweep = None;
                vec![(None, c)]
            }
        };
        let mut runs = Vec::new();
        for (point, config) in points {
            for k in 0..self.seeds as u64 {
                let seed = self.seed.wrapping_add(k);
                runs.push(PlannedRun {
                    point,
                    seed,
                    kind: ProtocolKind::Ebs,
                    config: config.clone(),
                });
                if self.mrf.is_some() {
                    runs.push(PlannedRun {
                        point,
                        seed,
                        kind: ProtocolKind::Mrf,
                        config: config.clone(),
                    });
                }
            }
        }
        Ok(runs)
    }

    /// The configuration in scenario syntax with every default written out.
    /// Resolving a parsed resolution gives the same text.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let p = &self.protocol;
        let _ = writeln!(s, "[topology]");
        match &self.topology {
            TopologySpec::Torus { rows, cols } | TopologySpec::Grid { rows, cols } => {
                let kind = if matches!(self.topology, TopologySpec::Torus { .. }) {
                    "torus"
                } else {
                    "grid"
                };
                let _ = writeln!(s, "kind = \"{kind}\"\nrows = {rows}\ncols = {cols}");
            }
            TopologySpec::Complete { n } => {
                let _ = writeln!(s, "kind = \"complete\"\nn = {n}");
            }
            TopologySpec::RandomGeometric { n, radius, seed } => {
                let _ = writeln!(s, "kind = \"rgg\"\nn = {n}");
                match radius {
                    RggRadius::Fixed(r) => {
                        let _ = writeln!(s, "radius = {}", fmt_float(*r));
                    }
                    RggRadius::AverageDegree(d) => {
                        let _ = writeln!(s, "avg_degree = {}", fmt_float(*d));
                    }
                }
                let _ = writeln!(s, "seed = {seed}");
            }
            TopologySpec::File { path, directed, nodes } => {
                let _ = writeln!(s, "kind = \"file\"\npath = {}\ndirected = {directed}", quote(path));
                if let Some(n) = nodes {
                    let _ = writeln!(s, "nodes = {n}");
                }
            }
        }
        let variant = match p.variant {
            Variant::NoReachback => "no-reachback",
            Variant::PartialReachback => "partial-reachback",
        };
        let _ = writeln!(
            s,
            "\n[protocol]\nperiod = {}\nepsilon = {}\nsigma = {}\ns_th = {}\nc0 = {}\nvariant = \"{variant}\"\n\
             adaptive_c = {}\ninit_listen_periods = {}\nduty_cycling = {}",
            p.period,
            fmt_float(p.epsilon),
            fmt_float(p.sigma),
            fmt_float(p.sync_threshold),
            p.c0,
            p.adaptive_c,
            p.init_listen_periods,
            p.duty_cycling
        );
        if self.mrf.is_some() {
            let m = self.mrf_config();
            let _ = writeln!(
                s,
                "\n[mrf]\nenabled = true\nrefractory = {}\nguard = {}",
                m.refractory, m.guard
            );
        }
        let _ = writeln!(s, "\n[delay]");
        match self.delay {
            DelaySpec::None => {
                let _ = writeln!(s, "kind = \"none\"");
            }
            DelaySpec::Ticks(nu) => {
                let _ = writeln!(s, "kind = \"fixed\"\nnu = {nu}");
            }
            DelaySpec::Phase(d) => {
                let _ = writeln!(s, "kind = \"fixed\"\ndelta = {}", fmt_float(d));
            }
            DelaySpec::Uniform { lo, hi } => {
                let _ = writeln!(s, "kind = \"uniform\"\nlo = {lo}\nhi = {hi}");
            }
        }
        let f = &self.faults;
        let _ = writeln!(
            s,
            "\n[faults]\nloss = {}\ncollisions = {}\nairtime = {}",
            fmt_float(f.loss_probability),
            f.collisions,
            f.airtime
        );
        let _ = writeln!(s, "\n[drift]\nppm = {}", fmt_float(self.drift.default_ppm));
        if !self.drift.per_node_ppm.is_empty() {
            let _ = writeln!(s, "\n[drift.nodes]");
            for (id, ppm) in &self.drift.per_node_ppm {
                let _ = writeln!(s, "\"{}\" = {}", id.0, fmt_float(*ppm));
            }
        }
        let start = match self.start_mode {
            StartMode::Initialization => "init",
            StartMode::Synchronization => "sync",
        };
        let _ = writeln!(
            s,
            "\n[run]\nhorizon = {}\nseed = {}\nseeds = {}\nstart = \"{start}\"\npayload_rate = {}\nsteady_from = {}",
            self.horizon,
            self.seed,
            self.seeds,
            fmt_float(self.payload_rate),
            self.steady_from()
        );
        match &self.phases {
            None => {
                let _ = writeln!(s, "phases = \"random\"");
            }
            Some(v) => {
                let items: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
                let _ = writeln!(s, "phases = [{}]", items.join(", "));
            }
        }
        for c in &self.churn {
            match c {
                ChurnSpec::Leave { at, node } => {
                    let _ = writeln!(s, "\n[[churn]]\nat = {at}\nleave = {node}");
                }
                ChurnSpec::Join { at, node, links } => {
                    let l: Vec<String> = links.iter().map(u32::to_string).collect();
                    let _ = writeln!(s, "\n[[churn]]\nat = {at}\njoin = {node}\nlinks = [{}]", l.join(", "));
                }
            }
        }
        if let Some(sw) = &self.sweep {
            let v: Vec<String> = sw.values.iter().map(|x| fmt_num(*x)).collect();
            let _ = writeln!(s, "\n[sweep]\n{} = [{}]", sw.axis.name(), v.join(", "));
        }
        s
    }
}

/// Integers without a fraction, other values in shortest round-trip form.
pub fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Float literal that always reads back as a float.
fn fmt_float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_scenario(&text)?;
    cfg.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(cfg)
}

type Value<'i> = Spanned<DeValue<'i>>;

fn line_at(src: &str, offset: usize) -> usize {
    let end = offset.min(src.len());
    src.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

fn type_name(v: &DeValue<'_>) -> &'static str {
    match v {
        DeValue::String(_) => "string",
        DeValue::Integer(_) => "integer",
        DeValue::Float(_) => "float",
        DeValue::Boolean(_) => "boolean",
        DeValue::Datetime(_) => "datetime",
        DeValue::Array(_) => "array",
        DeValue::Table(_) => "table",
    }
}

/// Reads one table, remembering which keys were consumed.
struct Section<'a, 'i> {
    src: &'a str,
    prefix: String,
    table: Option<&'a DeTable<'i>>,
    seen: BTreeSet<String>,
}

impl<'a, 'i> Section<'a, 'i> {
    fn new(src: &'a str, prefix: impl Into<String>, table: Option<&'a DeTable<'i>>) -> Self {
        Section {
            src,
            prefix: prefix.into(),
            table,
            seen: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn line(&self, v: &Value<'_>) -> usize {
        line_at(self.src, v.span().start)
    }

    fn present(&self) -> bool {
        self.table.is_some()
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value<'i>> {
        let table = self.table?;
        let (_, v) = table.iter().find(|(k, _)| k.get_ref().as_ref() == key)?;
        self.seen.insert(key.to_string());
        Some(v)
    }

    fn has(&self, key: &str) -> bool {
        self.table
            .is_some_and(|t| t.iter().any(|(k, _)| k.get_ref().as_ref() == key))
    }

    fn type_error(&self, key: &str, v: &Value<'_>, expected: &'static str) -> Error {
        Error::Type {
            key: self.path(key),
            line: self.line(v),
            expected,
            found: type_name(v.get_ref()),
        }
    }

    fn range(&self, key: &str, line: usize, reason: impl Into<String>) -> Error {
        Error::Range {
            key: self.path(key),
            line,
            reason: reason.into(),
        }
    }

    fn integer_of(&self, key: &str, v: &Value<'_>) -> Result<i64> {
        match v.get_ref() {
            DeValue::Integer(i) => i64::from_str_radix(i.as_str(), i.radix())
                .map_err(|_| self.range(key, self.line(v), "integer out of range")),
            _ => Err(self.type_error(key, v, "integer")),
        }
    }

    fn float_of(&self, key: &str, v: &Value<'_>) -> Result<f64> {
        let x = match v.get_ref() {
            DeValue::Integer(_) => self.integer_of(key, v)? as f64,
            DeValue::Float(f) => f
                .as_str()
                .parse::<f64>()
                .map_err(|_| self.range(key, self.line(v), "malformed number"))?,
            _ => return Err(self.type_error(key, v, "number")),
        };
        if !x.is_finite() {
            return Err(self.range(key, self.line(v), "must be finite"));
        }
        Ok(x)
    }

    fn uint(&mut self, key: &str) -> Result<Option<(u64, usize)>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let i = self.integer_of(key, v)?;
        let line = self.line(v);
        if i < 0 {
            return Err(self.range(key, line, "must be non-negative"));
        }
        Ok(Some((i as u64, line)))
    }

    fn u32(&mut self, key: &str) -> Result<Option<(u32, usize)>> {
        match self.uint(key)? {
            None => Ok(None),
            Some((v, line)) => u32::try_from(v)
                .map(|x| Some((x, line)))
                .map_err(|_| self.range(key, line, "too large")),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        Ok(Some((self.float_of(key, v)?, self.line(v))))
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        match v.get_ref() {
            DeValue::Boolean(b) => Ok(Some(*b)),
            _ => Err(self.type_error(key, v, "boolean")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<(String, usize)>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        match v.get_ref() {
            DeValue::String(s) => Ok(Some((s.to_string(), self.line(v)))),
            _ => Err(self.type_error(key, v, "string")),
        }
    }

    fn float_list(&self, key: &str, v: &Value<'_>) -> Result<Vec<f64>> {
        match v.get_ref() {
            DeValue::Array(items) => items.iter().map(|x| self.float_of(key, x)).collect(),
            _ => Err(self.type_error(key, v, "array of numbers")),
        }
    }

    fn u32_list(&mut self, key: &str) -> Result<Option<(Vec<u32>, usize)>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let DeValue::Array(items) = v.get_ref() else {
            return Err(self.type_error(key, v, "array of integers"));
        };
        let mut out = Vec::with_capacity(items.len());
        for x in items.iter() {
            let i = self.integer_of(key, x)?;
            let id = u32::try_from(i).map_err(|_| self.range(key, self.line(x), "node ids are 32-bit non-negative"))?;
            out.push(id);
        }
        Ok(Some((out, self.line(v))))
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::Missing { key: self.path(key) })
    }

    /// Rejects every key that was not read.
    fn finish(self) -> Result<()> {
        let Some(table) = self.table else {
            return Ok(());
        };
        for (k, _) in table.iter() {
            let name: &str = k.get_ref().as_ref();
            if !self.seen.contains(name) {
                return Err(Error::UnknownKey {
                    key: self.path(name),
                    line: line_at(self.src, k.span().start),
                });
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 9] = [
    "topology", "protocol", "mrf", "delay", "faults", "drift", "run", "churn", "sweep",
];

/// Parses scenario text. Relative topology paths resolve against the current
/// directory; [`load_scenario`] sets the file's directory instead.
pub fn parse_scenario(src: &str) -> Result<ScenarioConfig> {
    let doc = DeTable::parse(src).map_err(|e| Error::Syntax {
        line: e.span().map(|s| line_at(src, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let root = doc.get_ref();
    for (k, v) in root.iter() {
        let name: &str = k.get_ref().as_ref();
        let line = line_at(src, k.span().start);
        if !SECTIONS.contains(&name) {
            return Err(Error::UnknownKey { key: name.into(), line });
        }
        let ok = match name {
            "churn" => matches!(v.get_ref(), DeValue::Array(_)),
            _ => matches!(v.get_ref(), DeValue::Table(_)),
        };
        if !ok {
            return Err(Error::Type {
                key: name.into(),
                line,
                expected: if name == "churn" { "array of tables" } else { "table" },
                found: type_name(v.get_ref()),
            });
        }
    }
    let table = |name: &str| -> Option<&DeTable<'_>> {
        root.iter()
            .find(|(k, _)| k.get_ref().as_ref() == name)
            .and_then(|(_, v)| v.get_ref().as_table())
    };

    let mut topo = Section::new(src, "topology", table("topology"));
    if !topo.present() {
        return Err(Error::Missing { key: "topology".into() });
    }
    let topology = parse_topology(&mut topo)?;
    topo.finish()?;

    let mut cfg = ScenarioConfig::with_topology(topology);

    let mut p = Section::new(src, "protocol", table("protocol"));
    parse_protocol(&mut p, &mut cfg.protocol)?;
    p.finish()?;

    let mut m = Section::new(src, "mrf", table("mrf"));
    if m.present() {
        let enabled = m.boolean("enabled")?.unwrap_or(true);
        let mut spec = MrfSpec::default();
        if let Some((r, line)) = m.uint("refractory")? {
            if r == 0 || r >= cfg.protocol.period {
                return Err(m.range("refractory", line, "must lie in (0, period)"));
            }
            spec.refractory = Some(r);
        }
        if let Some((g, line)) = m.uint("guard")? {
            spec.guard = Some(g);
            let refractory = spec.refractory.unwrap_or(cfg.protocol.period / 2);
            if g > refractory {
                return Err(m.range("guard", line, "must not exceed the refractory period"));
            }
        }
        if enabled {
            cfg.mrf = Some(spec);
        }
    }
    m.finish()?;

    let mut d = Section::new(src, "delay", table("delay"));
    cfg.delay = parse_delay(&mut d)?;
    d.finish()?;

    let mut f = Section::new(src, "faults", table("faults"));
    if let Some((loss, line)) = f.float("loss")? {
        if !(0.0..=1.0).contains(&loss) {
            return Err(f.range("loss", line, "must lie in [0, 1]"));
        }
        cfg.faults.loss_probability = loss;
    }
    if let Some(c) = f.boolean("collisions")? {
        cfg.faults.collisions = c;
    }
    if let Some((a, _)) = f.uint("airtime")? {
        cfg.faults.airtime = a;
    }
    f.finish()?;

    let mut dr = Section::new(src, "drift", table("drift"));
    if let Some((ppm, line)) = dr.float("ppm")? {
        if ppm <= -1e6 {
            return Err(dr.range("ppm", line, "must exceed -1e6"));
        }
        cfg.drift.default_ppm = ppm;
    }
    if let Some(v) = dr.raw("nodes") {
        let DeValue::Table(nodes) = v.get_ref() else {
            return Err(dr.type_error("nodes", v, "table"));
        };
        let mut ns = Section::new(src, "drift.nodes", Some(nodes));
        for (k, _) in nodes.iter() {
            let name: &str = k.get_ref().as_ref();
            let line = line_at(src, k.span().start);
            let id: u32 = name
                .parse()
                .map_err(|_| ns.range(name, line, "node keys are non-negative integers"))?;
            let (ppm, line) = ns.float(name)?.expect("key listed by the table");
            if ppm <= -1e6 {
                return Err(ns.range(name, line, "must exceed -1e6"));
            }
            cfg.drift.per_node_ppm.insert(NodeId(id), ppm);
        }
        ns.finish()?;
    }
    dr.finish()?;

    let mut r = Section::new(src, "run", table("run"));
    parse_run(&mut r, &mut cfg)?;
    r.finish()?;

    if let Some((_, v)) = root.iter().find(|(k, _)| k.get_ref().as_ref() == "churn") {
        let DeValue::Array(items) = v.get_ref() else {
            unreachable!("checked above")
        };
        for (i, item) in items.iter().enumerate() {
            let prefix = format!("churn[{i}]");
            let DeValue::Table(t) = item.get_ref() else {
                return Err(Error::Type {
                    key: prefix,
                    line: line_at(src, item.span().start),
                    expected: "table",
                    found: type_name(item.get_ref()),
                });
            };
            let mut c = Section::new(src, prefix, Some(t));
            cfg.churn.push(parse_churn(&mut c, cfg.horizon)?);
            c.finish()?;
        }
    }

    let mut sw = Section::new(src, "sweep", table("sweep"));
    if let Some(t) = sw.table {
        let mut keys = t.iter();
        let Some((k, v)) = keys.next() else {
            return Err(Error::Missing {
                key: "sweep.<axis>".into(),
            });
        };
        if let Some((k2, _)) = keys.next() {
            return Err(Error::Range {
                key: sw.path(k2.get_ref()),
                line: line_at(src, k2.span().start),
                reason: "a sweep varies exactly one parameter".into(),
            });
        }
        let name: &str = k.get_ref().as_ref();
        let line = line_at(src, k.span().start);
        let Some(axis) = SweepAxis::from_name(name) else {
            let names: Vec<&str> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
            return Err(sw.range(
                name,
                line,
                format!("not a sweepable parameter (one of {})", names.join(", ")),
            ));
        };
        sw.seen.insert(name.to_string());
        let values = sw.float_list(name, v)?;
        if values.is_empty() {
            return Err(sw.range(name, line, "needs at least one value"));
        }
        for &x in &values {
            cfg.with_axis(axis, x)
                .map_err(|e| sw.range(name, line, e.to_string()))?;
        }
        cfg.sweep = Some(Sweep { axis, values });
    }
    sw.finish()?;

    Ok(cfg)
}

fn parse_topology(t: &mut Section<'_, '_>) -> Result<TopologySpec> {
    let (kind, kline) = {
        let v = t.string("kind")?;
        t.required("kind", v)?
    };
    let positive = |t: &mut Section<'_, '_>, key: &str| -> Result<u32> {
        let (v, line) = {
            let v = t.u32(key)?;
            t.required(key, v)?
        };
        if v == 0 {
            return Err(t.range(key, line, "must be positive"));
        }
        Ok(v)
    };
    Ok(match kind.as_str() {
        "torus" | "grid" => {
            let rows = positive(t, "rows")?;
            let cols = positive(t, "cols")?;
            if kind == "torus" {
                TopologySpec::Torus { rows, cols }
            } else {
                TopologySpec::Grid { rows, cols }
            }
        }
        "complete" => TopologySpec::Complete { n: positive(t, "n")? },
        "rgg" => {
            let n = positive(t, "n")?;
            let radius = match (t.float("radius")?, t.float("avg_degree")?) {
                (Some((r, line)), None) => {
                    if r.is_nan() || r <= 0.0 {
                        return Err(t.range("radius", line, "must be positive"));
                    }
                    RggRadius::Fixed(r)
                }
                (None, Some((d, line))) => {
                    if !(d > 0.0 && d < n as f64) {
                        return Err(t.range("avg_degree", line, "must lie in (0, n)"));
                    }
                    RggRadius::AverageDegree(d)
                }
                (Some((_, line)), Some(_)) => {
                    return Err(t.range("avg_degree", line, "give either radius or avg_degree, not both"))
                }
                (None, None) => return Err(Error::Missing { key: t.path("radius") }),
            };
            let seed = t.uint("seed")?.map_or(0, |(s, _)| s);
            TopologySpec::RandomGeometric { n, radius, seed }
        }
        "file" => {
            let (path, _) = {
                let v = t.string("path")?;
                t.required("path", v)?
            };
            let directed = t.boolean("directed")?.unwrap_or(false);
            let nodes = t.u32("nodes")?.map(|(n, _)| n);
            TopologySpec::File { path, directed, nodes }
        }
        other => {
            return Err(t.range(
                "kind",
                kline,
                format!("unknown topology kind `{other}` (torus, grid, complete, rgg, file)"),
            ))
        }
    })
}

fn parse_protocol(p: &mut Section<'_, '_>, cfg: &mut ProtocolConfig) -> Result<()> {
    if let Some((v, line)) = p.uint("period")? {
        if v < 2 {
            return Err(p.range("period", line, "must be at least 2 ticks"));
        }
        cfg.period = v;
    }
    if let Some((v, line)) = p.float("epsilon")? {
        if !(v > 0.0 && v <= 0.5) {
            return Err(p.range("epsilon", line, "must lie in (0, 0.5]"));
        }
        cfg.epsilon = v;
    }
    if let Some((v, line)) = p.float("sigma")? {
        if !(v > 0.0 && v < 1.0) {
            return Err(p.range("sigma", line, "must lie in (0, 1)"));
        }
        cfg.sigma = v;
    }
    if let Some((v, line)) = p.float("s_th")? {
        if !(0.0..=100.0).contains(&v) {
            return Err(p.range("s_th", line, "must lie in [0, 100]"));
        }
        cfg.sync_threshold = v;
    }
    if let Some((v, line)) = p.uint("c0")? {
        if v == 0 {
            return Err(p.range("c0", line, "must be positive"));
        }
        cfg.c0 = v;
    }
    if let Some((v, line)) = p.string("variant")? {
        cfg.variant = match v.as_str() {
            "no-reachback" => Variant::NoReachback,
            "partial-reachback" => Variant::PartialReachback,
            other => {
                return Err(p.range(
                    "variant",
                    line,
                    format!("unknown variant `{other}` (no-reachback, partial-reachback)"),
                ))
            }
        };
    }
    if let Some(v) = p.boolean("adaptive_c")? {
        cfg.adaptive_c = v;
    }
    if let Some((v, line)) = p.u32("init_listen_periods")? {
        if v == 0 {
            return Err(p.range("init_listen_periods", line, "must be at least 1"));
        }
        cfg.init_listen_periods = v;
    }
    if let Some(v) = p.boolean("duty_cycling")? {
        cfg.duty_cycling = v;
    }
    Ok(())
}

fn parse_delay(d: &mut Section<'_, '_>) -> Result<DelaySpec> {
    let kind = d.string("kind")?;
    let kind_name = match &kind {
        Some((k, _)) => k.as_str(),
        None if d.has("lo") || d.has("hi") => "uniform",
        None if d.has("nu") || d.has("delta") => "fixed",
        None => "none",
    };
    Ok(match kind_name {
        "none" => DelaySpec::None,
        "fixed" => match (d.uint("nu")?, d.float("delta")?) {
            (Some((nu, _)), None) => DelaySpec::Ticks(nu),
            (None, Some((delta, line))) => {
                if !(0.0..1.0).contains(&delta) {
                    return Err(d.range("delta", line, "must lie in [0, 1)"));
                }
                DelaySpec::Phase(delta)
            }
            (Some(_), Some((_, line))) => return Err(d.range("delta", line, "give either nu or delta, not both")),
            (None, None) => return Err(Error::Missing { key: d.path("nu") }),
        },
        "uniform" => {
            let (lo, _) = {
                let v = d.uint("lo")?;
                d.required("lo", v)?
            };
            let (hi, line) = {
                let v = d.uint("hi")?;
                d.required("hi", v)?
            };
            if hi < lo {
                return Err(d.range("hi", line, "must be at least lo"));
            }
            DelaySpec::Uniform { lo, hi }
        }
        other => {
            let line = kind.as_ref().map_or(0, |k| k.1);
            return Err(d.range(
                "kind",
                line,
                format!("unknown delay kind `{other}` (none, fixed, uniform)"),
            ));
        }
    })
}

fn parse_run(r: &mut Section<'_, '_>, cfg: &mut ScenarioConfig) -> Result<()> {
    if let Some((v, line)) = r.u32("horizon")? {
        if v == 0 {
            return Err(r.range("horizon", line, "must be at least 1"));
        }
        cfg.horizon = v;
    }
    if let Some((v, _)) = r.uint("seed")? {
        cfg.seed = v;
    }
    if let Some((v, line)) = r.u32("seeds")? {
        if v == 0 {
            return Err(r.range("seeds", line, "must be at least 1"));
        }
        cfg.seeds = v;
    }
    if let Some((v, line)) = r.string("start")? {
        cfg.start_mode = match v.as_str() {
            "init" => StartMode::Initialization,
            "sync" => StartMode::Synchronization,
            other => return Err(r.range("start", line, format!("unknown start mode `{other}` (init, sync)"))),
        };
    }
    if let Some((v, line)) = r.float("payload_rate")? {
        if !(0.0..=1.0).contains(&v) {
            return Err(r.range("payload_rate", line, "must lie in [0, 1]"));
        }
        cfg.payload_rate = v;
    }
    if let Some((v, line)) = r.u32("steady_from")? {
        if v >= cfg.horizon {
            return Err(r.range("steady_from", line, "must be below the horizon"));
        }
        cfg.steady_from = Some(v);
    }
    if let Some(v) = r.raw("phases") {
        let line = r.line(v);
        match v.get_ref() {
            DeValue::String(s) if s.as_ref() == "random" => cfg.phases = None,
            DeValue::String(s) => return Err(r.range("phases", line, format!("`{s}`: expected \"random\" or a list"))),
            DeValue::Array(_) => {
                let values = r.float_list("phases", v)?;
                if values.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(r.range("phases", line, "every phase must lie in [0, 1]"));
                }
                cfg.phases = Some(values);
            }
            _ => return Err(r.type_error("phases", v, "\"random\" or array of numbers")),
        }
    }
    Ok(())
}

fn parse_churn(c: &mut Section<'_, '_>, horizon: u32) -> Result<ChurnSpec> {
    let (at, line) = {
        let v = c.u32("at")?;
        c.required("at", v)?
    };
    if at >= horizon {
        return Err(c.range("at", line, "must fall before the horizon"));
    }
    match (c.u32("leave")?, c.u32("join")?) {
        (Some((node, _)), None) => Ok(ChurnSpec::Leave { at, node }),
        (None, Some((node, _))) => {
            let links = c.u32_list("links")?.map(|(l, _)| l).unwrap_or_default();
            Ok(ChurnSpec::Join { at, node, links })
        }
        (Some(_), Some((_, line))) => Err(c.range("join", line, "an entry either joins or leaves")),
        (None, None) => Err(Error::Missing { key: c.path("leave") }),
    }
}
