//! Declarative scenario configs, deterministic execution, and plot-ready
//! emission.
//!
//! A scenario is described by a single TOML document with a versioned
//! schema; unknown keys are rejected. Every run is identified by a `u64`
//! seed and produces a [`ResultRecord`]: ordered metadata (the numeric
//! conventions in force, effective parameters, seed) plus named tables whose
//! columns carry units. Records emit either as one CSV file per table
//! (`delimited-table`) or as a single self-describing JSON document
//! (`structured-tree`). Fixed config + seed gives byte-identical payloads.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::consts;
use crate::domain::{domain_section, SectionPlane};
use crate::dynamics::{cp_check, compose_families, counterexample_family, dephasing_as_family,
                      p_div_check, ConstantRateFamily, CounterexampleParams, DephasingModel,
                      PhaseCovariant};
use crate::measure::{multi_nm_measure, nm_measure, pair_trajectory, robustness_map, uniform_grid,
                     RevivalReport, SearchConfig};
use crate::quant::{jsd_geom, td_geom, PairGeom, QuantifierId};
use crate::sample::{random_pair, stream_rng};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Scenario identifiers mirrored by the CLI subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    BoundsSweep,
    RobustnessMap,
    DivisibilityReport,
    DomainSection,
    Counterexample,
    Measure,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::BoundsSweep => "bounds-sweep",
            ScenarioKind::RobustnessMap => "robustness-map",
            ScenarioKind::DivisibilityReport => "divisibility-report",
            ScenarioKind::DomainSection => "domain-section",
            ScenarioKind::Counterexample => "counterexample",
            ScenarioKind::Measure => "measure",
        }
    }
}

/// Family specification. Externally tagged so each variant table can reject
/// unknown keys.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyConfig {
    #[serde(rename = "dephasing")]
    Dephasing {
        coupling: f64,
        ohmicity: f64,
        cutoff: f64,
        #[serde(default)]
        system_freq: f64,
    },
    /// Constant-rate phase-covariant master equation.
    #[serde(rename = "phase-covariant-parametric")]
    PhaseCovariantParametric { gamma_plus: f64, gamma_minus: f64, gamma_z: f64 },
    #[serde(rename = "counterexample")]
    Counterexample {
        #[serde(default = "d_mu1")]
        mu1: f64,
        #[serde(default = "d_mu2")]
        mu2: f64,
        #[serde(default = "d_a_par")]
        a_par: f64,
        #[serde(default = "d_a_perp")]
        a_perp: f64,
        #[serde(default = "d_a_kappa")]
        a_kappa: f64,
        #[serde(default = "d_alpha")]
        alpha: f64,
    },
    #[serde(rename = "composed")]
    Composed { first: Box<FamilyConfig>, second: Box<FamilyConfig>, switch_time: f64 },
}

fn d_mu1() -> f64 {
    5.0
}
fn d_mu2() -> f64 {
    4.0
}
fn d_a_par() -> f64 {
    0.01
}
fn d_a_perp() -> f64 {
    1.01
}
fn d_a_kappa() -> f64 {
    0.45
}
fn d_alpha() -> f64 {
    5.0
}

impl FamilyConfig {
    pub fn counterexample_defaults() -> Self {
        FamilyConfig::Counterexample {
            mu1: d_mu1(),
            mu2: d_mu2(),
            a_par: d_a_par(),
            a_perp: d_a_perp(),
            a_kappa: d_a_kappa(),
            alpha: d_alpha(),
        }
    }

    pub fn dephasing_defaults() -> Self {
        FamilyConfig::Dephasing { coupling: 3.0, ohmicity: 3.0, cutoff: 1.0, system_freq: 0.0 }
    }

    pub fn build(&self) -> Result<Box<dyn PhaseCovariant>> {
        Ok(match self.clone() {
            FamilyConfig::Dephasing { coupling, ohmicity, cutoff, system_freq } => Box::new(
                dephasing_as_family(DephasingModel::new(coupling, ohmicity, cutoff, system_freq)),
            ),
            FamilyConfig::PhaseCovariantParametric { gamma_plus, gamma_minus, gamma_z } => {
                Box::new(ConstantRateFamily::new(gamma_plus, gamma_minus, gamma_z))
            }
            FamilyConfig::Counterexample { mu1, mu2, a_par, a_perp, a_kappa, alpha } => {
                Box::new(counterexample_family(CounterexampleParams {
                    mu1,
                    mu2,
                    a_par,
                    a_perp,
                    a_kappa,
                    alpha,
                }))
            }
            FamilyConfig::Composed { first, second, switch_time } => {
                Box::new(compose_families(first.build()?, second.build()?, switch_time)?)
            }
        })
    }

    pub fn describe(&self) -> String {
        match self {
            FamilyConfig::Dephasing { coupling, ohmicity, cutoff, system_freq } => format!(
                "dephasing(coupling={coupling}, ohmicity={ohmicity}, cutoff={cutoff}, system_freq={system_freq})"
            ),
            FamilyConfig::PhaseCovariantParametric { gamma_plus, gamma_minus, gamma_z } => {
                format!("constant-rates(g+={gamma_plus}, g-={gamma_minus}, gz={gamma_z})")
            }
            FamilyConfig::Counterexample { mu1, mu2, a_par, a_perp, a_kappa, alpha } => format!(
                "counterexample(mu1={mu1}, mu2={mu2}, a_par={a_par}, a_perp={a_perp}, a_kappa={a_kappa}, alpha={alpha})"
            ),
            FamilyConfig::Composed { first, second, switch_time } => {
                format!("composed({} ; {} @ t1={switch_time})", first.describe(), second.describe())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Vec<f64>> {
        if !(self.stop > self.start) || self.points < 2 {
            return Err(Error::Config(format!(
                "bad grid: start={}, stop={}, points={}",
                self.start, self.stop, self.points
            )));
        }
        Ok(uniform_grid(self.start, self.stop, self.points))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantifierConfig {
    pub kind: String,
    #[serde(default)]
    pub bias: Option<f64>,
    #[serde(default)]
    pub skew: Option<f64>,
}

impl QuantifierConfig {
    pub fn build(&self) -> Result<QuantifierId> {
        let q = match self.kind.as_str() {
            "td" | "trace-distance" => QuantifierId::TraceDistance,
            "helstrom" => QuantifierId::Helstrom { bias: self.bias.unwrap_or(0.5) },
            "jsd" => QuantifierId::Jsd,
            "sqrt-jsd" => QuantifierId::SqrtJsd,
            "holevo-skew" => QuantifierId::HolevoSkew { skew: self.skew.unwrap_or(0.5) },
            "quantum-skew" => QuantifierId::QuantumSkew { skew: self.skew.unwrap_or(0.5) },
            other => return Err(Error::Config(format!("unknown quantifier kind '{other}'"))),
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBudgetConfig {
    #[serde(default = "d_directions")]
    pub antipodal_directions: usize,
    #[serde(default)]
    pub random_pairs: usize,
    #[serde(default = "d_sweep")]
    pub parameter_sweep: Vec<f64>,
    #[serde(default = "d_true")]
    pub refine_parameter: bool,
}

fn d_directions() -> usize {
    2048
}
fn d_sweep() -> Vec<f64> {
    SearchConfig::default_sweep()
}
fn d_true() -> bool {
    true
}

impl Default for SearchBudgetConfig {
    fn default() -> Self {
        Self {
            antipodal_directions: d_directions(),
            random_pairs: 0,
            parameter_sweep: d_sweep(),
            refine_parameter: true,
        }
    }
}

impl SearchBudgetConfig {
    pub fn build(&self, grid: Vec<f64>, seed: u64) -> SearchConfig {
        SearchConfig {
            grid,
            antipodal_directions: self.antipodal_directions,
            random_pairs: self.random_pairs,
            parameter_sweep: self.parameter_sweep.clone(),
            refine_parameter: self.refine_parameter,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub diag: [f64; 3],
    #[serde(default)]
    pub shift: [f64; 3],
}

/// Full scenario description. Missing sections fall back to the defaults of
/// the selected scenario (recorded in the emitted metadata).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: ScenarioKind,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default)]
    pub pairs: Option<usize>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub quantifier: Option<QuantifierConfig>,
    #[serde(default)]
    pub search: Option<SearchBudgetConfig>,
    #[serde(default)]
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub plane: Option<SectionPlane>,
}

fn d_seed() -> u64 {
    42
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario,
            seed: d_seed(),
            pairs: None,
            resolution: None,
            budget: None,
            family: None,
            grid: None,
            quantifier: None,
            search: None,
            map: None,
            plane: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(())
    }
}

/// One typed cell of a payload table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Int(v) => format!("{v}"),
            Value::Float(v) => format!("{v:?}"),
            Value::Text(s) => s.clone(),
        }
    }

    fn parse(cell: &str) -> Value {
        if let Ok(v) = cell.parse::<i64>() {
            return Value::Int(v);
        }
        if let Ok(v) = cell.parse::<f64>() {
            return Value::Float(v);
        }
        Value::Text(cell.to_string())
    }
}

/// Column declaration: every payload column carries a name and a unit
/// (`"1"` stands for dimensionless).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<Column>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn floats(&self, name: &str) -> Vec<f64> {
        let idx = self.column_index(name).expect("column exists");
        self.rows
            .iter()
            .map(|r| match &r[idx] {
                Value::Float(v) => *v,
                Value::Int(v) => *v as f64,
                Value::Text(_) => f64::NAN,
            })
            .collect()
    }
}

/// Output of one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub scenario: String,
    /// Ordered key/value metadata: seed, conventions, effective parameters.
    pub metadata: BTreeMap<String, String>,
    pub tables: Vec<Table>,
}

impl ResultRecord {
    fn new(kind: ScenarioKind, seed: u64) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("seed".into(), seed.to_string());
        metadata.insert("rng".into(), "chacha8 counter-based, per-item streams".into());
        metadata.insert("state_sampler".into(), "uniform-ball (cube rejection)".into());
        metadata.insert("convention.log_base".into(), "2".into());
        metadata.insert(
            "convention.decoherence_prefactor".into(),
            format!("{:?}", consts::DECOHERENCE_PREFACTOR),
        );
        metadata.insert(
            "convention.decoherence_exponent".into(),
            "Gamma(t) = prefactor * int_0^inf J(w)(1-cos wt)/w^2 dw (zero temperature)".into(),
        );
        metadata.insert("convention.revival_floor".into(), format!("{:?}", consts::REVIVAL_FLOOR));
        metadata.insert("convention.measure_floor".into(), format!("{:?}", consts::MEASURE_FLOOR));
        metadata.insert("convention.eig_clamp".into(), format!("{:?}", consts::EIG_CLAMP));
        metadata.insert("convention.support_eps".into(), format!("{:?}", consts::SUPPORT_EPS));
        metadata.insert("convention.cp_tol".into(), format!("{:?}", consts::CP_TOL));
        metadata.insert("convention.p_div_tol".into(), format!("{:?}", consts::P_DIV_TOL));
        metadata.insert("convention.state_tol".into(), format!("{:?}", consts::STATE_TOL));
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            scenario: kind.name().into(),
            metadata,
            tables: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Canonical JSON rendering (used by `structured-tree` emission and by
    /// byte-level determinism checks).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// Output format of [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitFormat {
    DelimitedTable,
    StructuredTree,
}

/// Renders one table as CSV: header row `name [unit]`, comma separator,
/// decimal-point floats in shortest round-trip form.
pub fn render_delimited(table: &Table) -> String {
    let mut out = String::new();
    let header: Vec<String> = table
        .columns
        .iter()
        .map(|c| {
            if c.unit.is_empty() || c.unit == "1" {
                c.name.clone()
            } else {
                format!("{} [{}]", c.name, c.unit)
            }
        })
        .collect();
    let _ = writeln!(out, "{}", header.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| v.render()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Parses a CSV document produced by [`render_delimited`] back into a table.
pub fn parse_delimited(name: &str, text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty table".into()))?;
    let columns: Vec<Column> = header
        .split(',')
        .map(|cell| match cell.rfind(" [") {
            Some(pos) if cell.ends_with(']') => {
                Column::new(&cell[..pos], &cell[pos + 2..cell.len() - 1])
            }
            _ => Column::new(cell, "1"),
        })
        .collect();
    let mut table = Table::new(name, columns);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        table.push(line.split(',').map(Value::parse).collect());
    }
    Ok(table)
}

/// Writes the record under `dir`, returning the created paths.
///
/// `delimited-table`: one `<scenario>_<table>.csv` per payload table plus a
/// `<scenario>_metadata.csv` key/value file. `structured-tree`: a single
/// `<scenario>.json` containing metadata and all tables.
pub fn emit(record: &ResultRecord, format: EmitFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match format {
        EmitFormat::StructuredTree => {
            let path = dir.join(format!("{}.json", record.scenario));
            std::fs::write(&path, record.to_json())?;
            written.push(path);
        }
        EmitFormat::DelimitedTable => {
            let meta_path = dir.join(format!("{}_metadata.csv", record.scenario));
            let mut meta = String::from("key,value\n");
            for (k, v) in &record.metadata {
                let _ = writeln!(meta, "{k},{v}");
            }
            std::fs::write(&meta_path, meta)?;
            written.push(meta_path);
            for table in &record.tables {
                let path = dir.join(format!("{}_{}.csv", record.scenario, table.name));
                std::fs::write(&path, render_delimited(table))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Runs a scenario to a [`ResultRecord`]. Deterministic under a fixed
/// config: identical configs and seeds give byte-identical payloads.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    cfg.validate()?;
    match cfg.scenario {
        ScenarioKind::BoundsSweep => bounds_sweep(cfg),
        ScenarioKind::RobustnessMap => robustness_scenario(cfg),
        ScenarioKind::DivisibilityReport => divisibility_scenario(cfg),
        ScenarioKind::DomainSection => domain_scenario(cfg),
        ScenarioKind::Counterexample => counterexample_scenario(cfg),
        ScenarioKind::Measure => measure_scenario(cfg),
    }
}

fn bounds_sweep(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let pairs = cfg.pairs.unwrap_or(100_000);
    let mut record = ResultRecord::new(ScenarioKind::BoundsSweep, cfg.seed);
    record.meta("pairs", pairs);
    let mut table = Table::new(
        "pairs",
        vec![Column::new("td", "1"), Column::new("jsd", "1")],
    );
    let mut violations_lower = 0usize;
    let mut violations_upper = 0usize;
    let mut rng = stream_rng(cfg.seed, 0);
    for _ in 0..pairs {
        let (a, b) = random_pair(&mut rng);
        let g = PairGeom::of(a, b);
        let d = td_geom(&g);
        let j = jsd_geom(&g);
        if j - 0.5 * d * d < -1e-10 {
            violations_lower += 1;
        }
        if d - j < -1e-10 {
            violations_upper += 1;
        }
        table.push(vec![Value::Float(d), Value::Float(j)]);
    }
    record.meta("violations_lower", violations_lower);
    record.meta("violations_upper", violations_upper);
    record.meta("bound", "td^2/2 <= jsd <= td with slack -1e-10");
    record.tables.push(table);
    Ok(record)
}

fn default_grid_for_family(family: &FamilyConfig) -> GridConfig {
    match family {
        FamilyConfig::Dephasing { .. } => GridConfig { start: 0.0, stop: 10.0, points: 2000 },
        _ => GridConfig { start: 0.0, stop: 4.0, points: 4000 },
    }
}

fn robustness_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let family_cfg = cfg.family.clone().unwrap_or_else(FamilyConfig::dephasing_defaults);
    let family = family_cfg.build()?;
    let grid_cfg = cfg.grid.unwrap_or_else(|| default_grid_for_family(&family_cfg));
    let grid = grid_cfg.build()?;
    let resolution = cfg.resolution.unwrap_or(512);

    let mut record = ResultRecord::new(ScenarioKind::RobustnessMap, cfg.seed);
    record.meta("family", family_cfg.describe());
    record.meta("grid", format!("[{}, {}] x {}", grid_cfg.start, grid_cfg.stop, grid_cfg.points));
    record.meta("resolution", resolution);

    for q in [QuantifierId::TraceDistance, QuantifierId::Jsd, QuantifierId::SqrtJsd] {
        let map = robustness_map(q, &family, &grid, resolution)?;
        let mut table = Table::new(
            q.kind_label(),
            vec![
                Column::new("x", "1"),
                Column::new("y", "1"),
                Column::new("z", "1"),
                Column::new("measure", "1"),
                Column::new("rescaled", "1"),
            ],
        );
        let rescaled = map.rescaled();
        for (i, u) in map.directions.iter().enumerate() {
            table.push(vec![
                Value::Float(u.x),
                Value::Float(u.y),
                Value::Float(u.z),
                Value::Float(map.totals[i]),
                Value::Float(rescaled[i]),
            ]);
        }
        record.meta(
            &format!("reference.{}", q.kind_label()),
            format!("{:?}", map.reference),
        );
        record.tables.push(table);
    }
    Ok(record)
}

fn divisibility_table<F: PhaseCovariant + ?Sized>(family: &F, grid: &[f64]) -> Table {
    let verdict = p_div_check(family, grid);
    let cp = cp_check(family, grid);
    let mut table = Table::new(
        "divisibility",
        vec![
            Column::new("t", "T"),
            Column::new("eta_par", "1"),
            Column::new("eta_perp", "1"),
            Column::new("kappa_z", "1"),
            Column::new("gamma_plus", "1/T"),
            Column::new("gamma_minus", "1/T"),
            Column::new("gamma_z", "1/T"),
            Column::new("p_div_function", "1/T"),
            Column::new("cp_ok", "bool"),
            Column::new("class", "label"),
        ],
    );
    for (i, &t) in grid.iter().enumerate() {
        let (gp, gm, gz, pf) = match verdict.rates[i] {
            Some(r) => (
                Value::Float(r.gamma_plus),
                Value::Float(r.gamma_minus),
                Value::Float(r.gamma_z),
                Value::Float(r.p_div_function()),
            ),
            None => (
                Value::Text(String::new()),
                Value::Text(String::new()),
                Value::Text(String::new()),
                Value::Text(String::new()),
            ),
        };
        table.push(vec![
            Value::Float(t),
            Value::Float(family.eta_par(t)),
            Value::Float(family.eta_perp(t)),
            Value::Float(family.kappa_z(t)),
            gp,
            gm,
            gz,
            pf,
            Value::Int(cp[i] as i64),
            Value::Text(verdict.classes[i].label().into()),
        ]);
    }
    table
}

fn divisibility_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let family_cfg = cfg.family.clone().unwrap_or_else(FamilyConfig::counterexample_defaults);
    let family = family_cfg.build()?;
    let grid_cfg = cfg.grid.unwrap_or_else(|| default_grid_for_family(&family_cfg));
    let grid = grid_cfg.build()?;

    let mut record = ResultRecord::new(ScenarioKind::DivisibilityReport, cfg.seed);
    record.meta("family", family_cfg.describe());
    record.meta("grid", format!("[{}, {}] x {}", grid_cfg.start, grid_cfg.stop, grid_cfg.points));
    let verdict = p_div_check(&family, &grid);
    record.meta(
        "first_violation",
        verdict.first_violation.map_or("none".to_string(), |t| format!("{t:?}")),
    );
    record.meta(
        "first_undefined",
        verdict.first_undefined.map_or("none".to_string(), |t| format!("{t:?}")),
    );
    let cp_all = cp_check(&family, &grid).iter().all(|&b| b);
    record.meta("cp_all_ok", cp_all);
    record.tables.push(divisibility_table(&family, &grid));
    Ok(record)
}

fn domain_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let map_cfg = cfg.map.unwrap_or(MapConfig { diag: [1.1, 1.1, 0.1], shift: [0.0, 0.0, 0.0] });
    let map = crate::qubit::AffineMap::new(map_cfg.diag, map_cfg.shift);
    let plane = cfg.plane.unwrap_or(SectionPlane { axis: crate::domain::Axis::Y, offset: 0.0 });
    let resolution = cfg.resolution.unwrap_or(256);
    let budget = cfg.budget.unwrap_or(10_000);

    let section = domain_section(&map, plane, resolution, budget, cfg.seed)?;
    let mut record = ResultRecord::new(ScenarioKind::DomainSection, cfg.seed);
    record.meta("map", format!("diag={:?}, shift={:?}", map.diag, map.shift));
    record.meta("plane", format!("{:?}={}", plane.axis, plane.offset));
    record.meta("resolution", resolution);
    record.meta("budget_per_point", budget);
    record.meta(
        "partner_sampling",
        "26 deterministic boundary candidates + antipode + center preimage, then uniform-PD / boundary-biased draws",
    );

    let mut table = Table::new(
        "section",
        vec![Column::new("u", "1"), Column::new("v", "1"), Column::new("label", "label")],
    );
    for i in 0..resolution {
        for j in 0..resolution {
            let (u, v) = section.coords(i, j);
            table.push(vec![
                Value::Float(u),
                Value::Float(v),
                Value::Text(section.label_at(i, j).label().into()),
            ]);
        }
    }
    record.tables.push(table);
    Ok(record)
}

fn measures_table(reports: &[(String, &RevivalReport)]) -> Table {
    let mut table = Table::new(
        "measures",
        vec![
            Column::new("quantifier", "label"),
            Column::new("measure", "1"),
            Column::new("argmax_x", "1"),
            Column::new("argmax_y", "1"),
            Column::new("argmax_z", "1"),
            Column::new("argmax_parameter", "1"),
            Column::new("pairs_searched", "count"),
            Column::new("max_raw_increment", "1"),
        ],
    );
    for (label, rep) in reports {
        let pair = rep.argmax_pair.unwrap_or((crate::qubit::BlochVector::ZERO, crate::qubit::BlochVector::ZERO));
        table.push(vec![
            Value::Text(label.clone()),
            Value::Float(rep.total),
            Value::Float(pair.0.x),
            Value::Float(pair.0.y),
            Value::Float(pair.0.z),
            match rep.argmax_parameter {
                Some(p) => Value::Float(p),
                None => Value::Text(String::new()),
            },
            Value::Int(rep.pairs_searched as i64),
            Value::Float(rep.max_raw_increment),
        ]);
    }
    table
}

/// The full reproduction pipeline for the three-stage family: curves, rates,
/// divisibility verdict, and the measure separation between the trace
/// distance and every entropic quantifier, under both the antipodal and the
/// full-pair search.
fn counterexample_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let family_cfg = cfg.family.clone().unwrap_or_else(FamilyConfig::counterexample_defaults);
    let family = family_cfg.build()?;
    let grid_cfg = cfg.grid.unwrap_or(GridConfig { start: 0.0, stop: 4.0, points: 4000 });
    let grid = grid_cfg.build()?;
    let search = cfg.search.clone().unwrap_or(SearchBudgetConfig {
        antipodal_directions: 2048,
        random_pairs: 100_000,
        parameter_sweep: SearchConfig::default_sweep(),
        refine_parameter: true,
    });

    let mut record = ResultRecord::new(ScenarioKind::Counterexample, cfg.seed);
    record.meta("family", family_cfg.describe());
    record.meta("grid", format!("[{}, {}] x {}", grid_cfg.start, grid_cfg.stop, grid_cfg.points));
    record.meta("search.antipodal_directions", search.antipodal_directions);
    record.meta("search.random_pairs", search.random_pairs);
    record.meta(
        "search.parameter_sweep",
        format!(
            "[{}]",
            search.parameter_sweep.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(", ")
        ),
    );

    // divisibility analysis
    let verdict = p_div_check(&family, &grid);
    record.meta(
        "first_violation",
        verdict.first_violation.map_or("none".to_string(), |t| format!("{t:?}")),
    );
    record.meta(
        "first_undefined",
        verdict.first_undefined.map_or("none".to_string(), |t| format!("{t:?}")),
    );
    record.meta("cp_all_ok", cp_check(&family, &grid).iter().all(|&b| b));
    record.tables.push(divisibility_table(&family, &grid));

    // fused measure search: td, jsd, sqrt-jsd at fixed kind; skew families
    // expanded over the sweep
    let mut quantifiers = vec![QuantifierId::TraceDistance, QuantifierId::Jsd, QuantifierId::SqrtJsd];
    let k0 = quantifiers.len();
    for &mu in &search.parameter_sweep {
        quantifiers.push(QuantifierId::HolevoSkew { skew: mu });
    }
    let s0 = quantifiers.len();
    for &mu in &search.parameter_sweep {
        quantifiers.push(QuantifierId::QuantumSkew { skew: mu });
    }
    let sweep_cfg = search.build(grid.clone(), cfg.seed);
    let reports = multi_nm_measure(&quantifiers, &family, &sweep_cfg)?;

    // group the sweeps back into one row per quantifier family
    let best_in = |range: std::ops::Range<usize>| -> RevivalReport {
        let mut best = range.start;
        for i in range.clone() {
            if reports[i].total > reports[best].total {
                best = i;
            }
        }
        let mut rep = reports[best].clone();
        rep.argmax_parameter = quantifiers[best].parameter();
        rep.max_raw_increment =
            range.map(|i| reports[i].max_raw_increment).fold(f64::MIN, f64::max);
        rep
    };
    let td = reports[0].clone();
    let jsd_rep = reports[1].clone();
    let sqrt_rep = reports[2].clone();
    let holevo = best_in(k0..s0);
    let qskew = best_in(s0..quantifiers.len());

    // Helstrom sweep over the antipodal stage (the biased trace norm obeys
    // the same orthogonal-optimal-pair restriction)
    let antipodal_cfg = SearchConfig {
        random_pairs: 0,
        ..search.build(grid.clone(), cfg.seed)
    };
    let helstrom = nm_measure(QuantifierId::Helstrom { bias: 0.5 }, &family, &antipodal_cfg)?;

    let rows = [
        ("td".to_string(), &td),
        ("jsd".to_string(), &jsd_rep),
        ("sqrt-jsd".to_string(), &sqrt_rep),
        ("holevo-skew".to_string(), &holevo),
        ("quantum-skew".to_string(), &qskew),
        ("helstrom".to_string(), &helstrom),
    ];
    record.tables.push(measures_table(&rows));

    // trajectory of the trace-distance argmax pair, with cumulative revival
    // for both the td and the jsd along the same pair
    let (p1, p2) = td.argmax_pair.expect("td search ran");
    let td_traj = pair_trajectory(QuantifierId::TraceDistance, &family, p1, p2, &grid)?;
    let j_traj = pair_trajectory(QuantifierId::Jsd, &family, p1, p2, &grid)?;
    let mut table = Table::new(
        "optimal_pair_trajectory",
        vec![
            Column::new("t", "T"),
            Column::new("td", "1"),
            Column::new("td_cumulative_revival", "1"),
            Column::new("jsd", "1"),
            Column::new("jsd_cumulative_revival", "1"),
        ],
    );
    let mut cum_td = 0.0;
    let mut cum_j = 0.0;
    for i in 0..grid.len() {
        if i > 0 {
            let inc_td = td_traj.values[i] - td_traj.values[i - 1];
            if inc_td > consts::REVIVAL_FLOOR {
                cum_td += inc_td;
            }
            let inc_j = j_traj.values[i] - j_traj.values[i - 1];
            if inc_j > consts::REVIVAL_FLOOR {
                cum_j += inc_j;
            }
        }
        table.push(vec![
            Value::Float(grid[i]),
            Value::Float(td_traj.values[i]),
            Value::Float(cum_td),
            Value::Float(j_traj.values[i]),
            Value::Float(cum_j),
        ]);
    }
    record.tables.push(table);

    record.meta("measure.td", format!("{:?}", td.total));
    record.meta("measure.jsd", format!("{:?}", jsd_rep.total));
    record.meta("measure.sqrt_jsd", format!("{:?}", sqrt_rep.total));
    record.meta("measure.holevo_skew", format!("{:?}", holevo.total));
    record.meta("measure.quantum_skew", format!("{:?}", qskew.total));
    record.meta("measure.helstrom", format!("{:?}", helstrom.total));
    Ok(record)
}

fn measure_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord> {
    let family_cfg = cfg
        .family
        .clone()
        .ok_or_else(|| Error::Config("measure scenario requires a [family] section".into()))?;
    let family = family_cfg.build()?;
    let grid_cfg = cfg.grid.unwrap_or_else(|| default_grid_for_family(&family_cfg));
    let grid = grid_cfg.build()?;
    let q = match &cfg.quantifier {
        Some(qc) => qc.build()?,
        None => QuantifierId::TraceDistance,
    };
    let search = cfg.search.clone().unwrap_or_default();
    let report = nm_measure(q, &family, &search.build(grid, cfg.seed))?;

    let mut record = ResultRecord::new(ScenarioKind::Measure, cfg.seed);
    record.meta("family", family_cfg.describe());
    record.meta("grid", format!("[{}, {}] x {}", grid_cfg.start, grid_cfg.stop, grid_cfg.points));
    record.meta("quantifier", q.label());
    record.meta("search.antipodal_directions", search.antipodal_directions);
    record.meta("search.random_pairs", search.random_pairs);
    record.meta("measure", format!("{:?}", report.total));
    record.meta("is_zero_at_floor", report.is_zero());

    let rows = [(q.kind_label().to_string(), &report)];
    record.tables.push(measures_table(&rows));

    let mut intervals = Table::new(
        "revival_intervals",
        vec![Column::new("start", "T"), Column::new("end", "T"), Column::new("gain", "1")],
    );
    for iv in &report.intervals {
        intervals.push(vec![
            Value::Float(iv.start),
            Value::Float(iv.end),
            Value::Float(iv.gain),
        ]);
    }
    record.tables.push(intervals);
    Ok(record)
}

/// Convenience wrapper: run from a TOML document.
pub fn run_toml(text: &str) -> Result<ResultRecord> {
    run_scenario(&ScenarioConfig::from_toml(text)?)
}
