//! Run artifacts: result.json, trace.csv, moves.csv, directives.txt and
//! floorplan.json.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fado::floorplan::{CutReport, Floorplan};
use fado::model::{
    design_latency, Configuration, DesignGraph, DeviceModel, Instance, QoRLibrary, ResourceVector,
};
use fado::packer::PackState;
use fado::pipeliner::{CrossingKind, RouteState};
use fado::search::{Initial, IterationRecord, LevelBound, SearchState};
use fado::Problem;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub design: Option<String>,
    pub qor: Option<String>,
    pub device: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub util_limit: Option<f64>,
    pub sll_limit: Option<f64>,
    pub lookahead: Option<usize>,
    pub iteration_cap: Option<usize>,
    pub seed: Option<u64>,
    pub initial: Option<Initial>,
    pub level_bound: Option<LevelBound>,
    #[serde(default)]
    pub frozen_floorplan: bool,
}

/// Provenance of a run, recorded verbatim into result.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: InputPaths,
    pub flags: Flags,
    pub started: String,
    pub finished: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, inputs: InputPaths, flags: Flags) -> Self {
        RunManifest {
            tool: "fado".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            inputs,
            flags,
            started: now(),
            finished: String::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn finish(&mut self, wall_time_s: f64) {
        self.finished = now();
        self.wall_time_s = wall_time_s;
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// The effective inputs of a run (after flag overrides), so the result can be
/// checked without the original files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedInstance {
    pub device: Value,
    pub design: Value,
    pub qor: Value,
}

impl EmbeddedInstance {
    pub fn from_instance(inst: &Instance) -> Self {
        let parse = |s: String| serde_json::from_str(&s).expect("own output parses");
        EmbeddedInstance {
            device: parse(inst.device.to_json()),
            design: parse(inst.design.to_json()),
            qor: parse(inst.qor.to_json()),
        }
    }

    pub fn to_instance(&self) -> fado::Result<Instance> {
        let device = DeviceModel::from_json(&self.device.to_string())?;
        let design = DesignGraph::from_json(&self.design.to_string())?;
        let qor = QoRLibrary::from_json(&self.qor.to_string(), &design)?;
        Ok(Instance::new(device, design, qor))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: usize,
    pub x: usize,
    pub y: usize,
    pub usage: ResourceVector,
    pub capacity: ResourceVector,
    pub utilization: f64,
    pub functions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllReport {
    pub boundary: usize,
    pub half: usize,
    pub used: u64,
    pub capacity: u64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub edge: usize,
    pub src: String,
    pub dst: String,
    pub width: u64,
    pub register_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub manifest: RunManifest,
    pub design_latency: u64,
    pub baseline_latency: u64,
    pub iterations: usize,
    pub cap_reached: bool,
    pub lookahead_n: Option<usize>,
    pub max_utilization: f64,
    pub max_sll_utilization: f64,
    /// Function name to chosen point id.
    pub configuration: BTreeMap<String, String>,
    /// Function name to slot.
    pub assignment: BTreeMap<String, usize>,
    pub slots: Vec<SlotReport>,
    pub sll: Vec<SllReport>,
    /// FIFO edges that cross at least one boundary.
    pub registers: Vec<EdgeReport>,
    pub route: RouteState,
    pub instance: EmbeddedInstance,
}

impl ResultFile {
    pub fn new(problem: &Problem, state: &PackState, manifest: RunManifest) -> Self {
        let inst = &problem.instance;
        let design = &inst.design;
        let device = &inst.device;
        let fp = &state.floorplan;
        let baseline = Configuration::baseline(&inst.qor);
        let slots = device
            .slots
            .iter()
            .enumerate()
            .map(|(s, slot)| SlotReport {
                slot: s,
                x: slot.x,
                y: slot.y,
                usage: *fp.usage(s),
                capacity: slot.capacity,
                utilization: fp.utilization(problem, s),
                functions: fp
                    .functions_on(s)
                    .map(|f| design.function_name(f).to_string())
                    .collect(),
            })
            .collect();
        let mut sll = Vec::new();
        for (b, row) in state.route.sll_table().iter().enumerate() {
            for (h, &used) in row.iter().enumerate() {
                sll.push(SllReport {
                    boundary: b,
                    half: h,
                    used,
                    capacity: device.sll_capacity(b, h),
                    budget: device.sll_budget(b, h),
                });
            }
        }
        let registers = design
            .edges
            .iter()
            .enumerate()
            .filter(|&(i, _)| state.route.register_groups(i) > 0)
            .map(|(i, e)| EdgeReport {
                edge: i,
                src: design.function_name(e.src).to_string(),
                dst: design.function_name(e.dst).to_string(),
                width: e.width,
                register_groups: state.route.register_groups(i),
            })
            .collect();
        ResultFile {
            manifest,
            design_latency: design_latency(design, &state.config, &inst.qor)
                .expect("complete configuration"),
            baseline_latency: design_latency(design, &baseline, &inst.qor)
                .expect("complete configuration"),
            iterations: 0,
            cap_reached: false,
            lookahead_n: None,
            max_utilization: fp.max_utilization(problem),
            max_sll_utilization: state.route.max_sll_utilization(device),
            configuration: state.config.to_named(design, &inst.qor),
            assignment: (0..design.num_functions())
                .map(|f| (design.function_name(f).to_string(), fp.slot_of(f)))
                .collect(),
            slots,
            sll,
            registers,
            route: state.route.clone(),
            instance: EmbeddedInstance::from_instance(inst),
        }
    }

    pub fn with_search(mut self, st: &SearchState) -> Self {
        self.iterations = st.log.len();
        self.cap_reached = st.cap_reached;
        self.lookahead_n = Some(st.lookahead);
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Rebuilds the state from its named form. The stored route is taken as is.
    pub fn state(&self, problem: &Problem) -> fado::Result<PackState> {
        let design = &problem.instance.design;
        let config = Configuration::from_named(&self.configuration, design, &problem.instance.qor)?;
        let mut assignment = Vec::with_capacity(design.num_functions());
        for f in 0..design.num_functions() {
            let name = design.function_name(f);
            let slot = self
                .assignment
                .get(name)
                .ok_or_else(|| fado::Error::Schema(format!("no slot assigned to `{name}`")))?;
            assignment.push(*slot);
        }
        if let Some(extra) = self
            .assignment
            .keys()
            .find(|k| design.function_id(k).is_none())
        {
            return Err(fado::Error::UnknownFunction(extra.clone()));
        }
        let floorplan = Floorplan::new(problem, assignment, &config);
        Ok(PackState {
            floorplan,
            config,
            route: self.route.clone(),
        })
    }
}

/// Iteration log, one row per iteration. Lists are `;`-separated.
pub fn write_trace(path: &Path, log: &[IterationRecord]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "iter",
        "stage",
        "batch",
        "dropped",
        "points",
        "design_latency",
        "max_util",
        "max_sll_util",
        "moves",
    ])?;
    for r in log {
        let points: Vec<String> = r
            .batch
            .iter()
            .zip(&r.accepted)
            .map(|(f, p)| format!("{f}:{p}"))
            .collect();
        w.write_record([
            r.iter.to_string(),
            r.stage.name().to_string(),
            r.batch.join(";"),
            r.dropped.join(";"),
            points.join(";"),
            r.design_latency.to_string(),
            format!("{:.4}", r.max_utilization),
            format!("{:.4}", r.max_sll_utilization),
            r.moves.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Floorplan move trace: one row per relocated function.
pub fn write_moves(path: &Path, log: &[IterationRecord]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["iter", "stage", "function", "from", "to"])?;
    for r in log {
        for m in &r.moves {
            w.write_record([
                r.iter.to_string(),
                m.stage.name().to_string(),
                m.function.clone(),
                m.from.to_string(),
                m.to.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Chosen directives per function as plain text.
pub fn directives_text(problem: &Problem, config: &Configuration) -> String {
    let design = &problem.instance.design;
    let qor = &problem.instance.qor;
    let mut out = String::from("# function point directives\n");
    for f in 0..design.num_functions() {
        let p = config.point(qor, f);
        let dirs: Vec<String> = p
            .directives
            .iter()
            .map(|(k, v)| format!("{k} {v}"))
            .collect();
        let dirs = if dirs.is_empty() {
            "-".to_string()
        } else {
            dirs.join("; ")
        };
        out.push_str(&format!("{} {} {}\n", design.function_name(f), p.id, dirs));
    }
    out
}

/// TCL-like rendering of the directives. For inspection only.
pub fn tcl_stub(problem: &Problem, config: &Configuration) -> String {
    let design = &problem.instance.design;
    let qor = &problem.instance.qor;
    let mut out = String::from(
        "# Directive stub generated by fado; not validated against any vendor tool.\n",
    );
    for f in 0..design.num_functions() {
        let name = design.function_name(f);
        for (key, value) in &config.point(qor, f).directives {
            let (kind, target) = key.split_once(':').unwrap_or((key.as_str(), ""));
            let mut line = format!("set_directive_{}", kind.to_lowercase());
            for kv in value.split_whitespace() {
                match kv.split_once('=') {
                    Some((k, v)) => line.push_str(&format!(" -{} {v}", k.to_lowercase())),
                    None => line.push_str(&format!(" {kv}")),
                }
            }
            match kind {
                "ARRAY_PARTITION" | "BIND_STORAGE" => {
                    line.push_str(&format!(" \"{name}\" {target}"))
                }
                _ => line.push_str(&format!(" \"{name}/{target}\"")),
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct FloorplanJson<'a> {
    assignment: &'a BTreeMap<String, usize>,
    slots: &'a [SlotReport],
    /// Total width of FIFO edges whose ends sit on different slots.
    cut_width: u64,
    die_crossing_width: u64,
    boot: Option<&'a CutReport>,
}

pub fn write_floorplan(
    path: &Path,
    problem: &Problem,
    result: &ResultFile,
    boot: Option<&CutReport>,
) -> Result<()> {
    let design = &problem.instance.design;
    let mut cut_width = 0;
    let mut die_crossing_width = 0;
    for (i, e) in design.edges.iter().enumerate() {
        let route = result.route.route(i);
        if !route.is_empty() {
            cut_width += e.width;
        }
        die_crossing_width +=
            e.width * route.iter().filter(|c| c.kind == CrossingKind::Die).count() as u64;
    }
    let json = FloorplanJson {
        assignment: &result.assignment,
        slots: &result.slots,
        cut_width,
        die_crossing_width,
        boot,
    };
    fs::write(path, serde_json::to_string_pretty(&json)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}
