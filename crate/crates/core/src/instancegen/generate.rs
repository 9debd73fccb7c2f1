//! Seeded synthetic instances. The cost model is parametric and synthetic: latency
//! follows loop trip counts under UNROLL and PIPELINE, resources grow with the
//! resulting parallelism, and array directives trade BRAM banks for ports.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::directives::{gen_directive_space, ArrayInfo, PartitionKind, Skeleton, Storage};
use super::InstanceBuilder;
use crate::error::{Error, Result};
use crate::model::{
    DesignFile, DesignGraph, DeviceModel, EdgeKind, EdgeSpec, FunctionSpec, Instance, KernelKind,
    KernelSpec, LoopInfo, NameRule, QoRLibrary, QoRPoint, QorFile, ResourceVector, Template,
    BASELINE_ID,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    /// Faster points never use less of any resource than slower ones.
    Monotone,
    /// Perturbed costs, including a resource bump at moderate II on loops with
    /// carried dependences.
    NonMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DevicePreset {
    /// The two-slot toy device; selects the toy fixture as a whole.
    Toy,
    /// One column of two dies, each slot a quarter of the U250 lower half.
    U250Column,
    /// The U250 lower half as a 2x2 grid.
    U250Lower,
}

impl DevicePreset {
    pub fn device(self) -> DeviceModel {
        let slot = ResourceVector::new(504, 1296, 329_760, 164_880, 136);
        match self {
            DevicePreset::Toy => {
                let mut d =
                    DeviceModel::uniform("toy", 1, 2, ResourceVector::new(0, 0, 0, 100, 0), 1000);
                d.util_limit = 0.7;
                d
            }
            DevicePreset::U250Column => DeviceModel::uniform("u250-column", 1, 2, slot, 11_520),
            DevicePreset::U250Lower => DeviceModel::uniform("u250-lower", 2, 2, slot, 11_520),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub dataflow_kernels: usize,
    pub non_dataflow_kernels: usize,
    /// Inclusive range of functions per dataflow kernel.
    pub functions_per_dataflow: (usize, usize),
    /// Inclusive range of loop nest depth per template.
    pub nest_depth: (usize, usize),
    pub mode: Monotonicity,
    pub device: DevicePreset,
    /// Cap on directive configurations per template.
    pub max_points: usize,
    /// Number of shared templates, resolved through name rules; 0 gives every
    /// function its own template.
    pub templates: usize,
    /// Baseline resource use as a fraction of the device's usable capacity.
    pub fill: f64,
}

impl GenSpec {
    pub fn toy() -> Self {
        GenSpec {
            seed: 0,
            dataflow_kernels: 2,
            non_dataflow_kernels: 1,
            functions_per_dataflow: (2, 2),
            nest_depth: (1, 1),
            mode: Monotonicity::Monotone,
            device: DevicePreset::Toy,
            max_points: 2,
            templates: 0,
            fill: 0.0,
        }
    }

    /// Benchmark-like mix: four large dataflow kernels bridged by non-dataflow
    /// kernels on the 2x2 device.
    pub fn mixed(seed: u64) -> Self {
        GenSpec {
            seed,
            dataflow_kernels: 4,
            non_dataflow_kernels: 2,
            functions_per_dataflow: (100, 110),
            nest_depth: (1, 3),
            mode: Monotonicity::NonMonotone,
            device: DevicePreset::U250Lower,
            max_points: 16,
            templates: 48,
            fill: 0.4,
        }
    }

    /// One dataflow kernel of at most six functions with at most four points each,
    /// on two slots.
    pub fn small(seed: u64, mode: Monotonicity) -> Self {
        GenSpec {
            seed,
            dataflow_kernels: 1,
            non_dataflow_kernels: 0,
            functions_per_dataflow: (2, 6),
            nest_depth: (1, 2),
            mode,
            device: DevicePreset::U250Column,
            max_points: 4,
            templates: 0,
            fill: 0.45,
        }
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "toy" => Ok(GenSpec::toy()),
            "mixed" => Ok(GenSpec::mixed(seed)),
            "small" => Ok(GenSpec::small(seed, Monotonicity::Monotone)),
            _ => Err(Error::Schema(format!(
                "unknown preset `{name}` (toy, mixed, small)"
            ))),
        }
    }

    fn check(&self) -> Result<()> {
        let (lo, hi) = self.functions_per_dataflow;
        let (dlo, dhi) = self.nest_depth;
        if self.dataflow_kernels + self.non_dataflow_kernels == 0 {
            return Err(Error::Schema("no kernels requested".into()));
        }
        if lo == 0 || lo > hi || dlo == 0 || dlo > dhi || self.max_points == 0 {
            return Err(Error::Schema("empty range in generator spec".into()));
        }
        if !(self.fill > 0.0 && self.fill < 1.0) {
            return Err(Error::Schema(format!("fill {} outside (0, 1)", self.fill)));
        }
        Ok(())
    }
}

/// Generated input files.
#[derive(Debug, Clone)]
pub struct Generated {
    pub design: DesignFile,
    pub qor: QorFile,
    pub device: DeviceModel,
}

impl Generated {
    pub fn design_json(&self) -> String {
        serde_json::to_string_pretty(&self.design).expect("design serializes")
    }

    pub fn qor_json(&self) -> String {
        serde_json::to_string_pretty(&self.qor).expect("qor serializes")
    }

    pub fn device_json(&self) -> String {
        self.device.to_json()
    }

    pub fn instance(&self) -> Result<Instance> {
        let design = DesignGraph::from_file(self.design.clone())?;
        let qor = QoRLibrary::from_file(self.qor.clone(), &design)?;
        Ok(Instance::new(self.device.clone().validated()?, design, qor))
    }

    /// Writes `design.json`, `qor.json` and `device.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path, e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, text) in [
            ("design.json", self.design_json()),
            ("qor.json", self.qor_json()),
            ("device.json", self.device_json()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

/// Two slots at 70%, FIFO widths 16 (A to B) and 8 (D to E), RAM group {B, C, D}.
pub fn toy_builder() -> InstanceBuilder {
    InstanceBuilder::new(DevicePreset::Toy.device())
        .dataflow("K1", &["A", "B"])
        .non_dataflow("K2", "C")
        .dataflow("K3", &["D", "E"])
        .fifo("A", "B", 16)
        .fifo("D", "E", 8)
        .ram("B", "C")
        .ram("C", "D")
        .lut_points("A", &[(5, 30), (3, 55)])
        .lut_points("B", &[(6, 5), (4, 10)])
        .lut_points("C", &[(4, 10), (2, 60)])
        .lut_points("D", &[(7, 20), (5, 30)])
        .lut_points("E", &[(8, 15), (5, 20)])
}

/// Per-template data the cost model works from.
struct TemplateShape {
    loops: Vec<LoopInfo>,
    arrays: Vec<ArrayInfo>,
    /// BRAM blocks per array before partitioning.
    array_bram: Vec<u64>,
    base: ResourceVector,
    carried: bool,
}

const PAR_CAP: f64 = 1024.0;

fn banks(d: &Option<(PartitionKind, u32)>, a: &ArrayInfo, unroll: u64) -> Option<u64> {
    match d {
        None => Some(1),
        Some((PartitionKind::Complete, _)) => None,
        Some((_, dim)) => Some(unroll.max(2).min(a.dims[*dim as usize - 1])),
    }
}

/// Latency in cycles and parallelism of one configuration.
fn latency_of(shape: &TemplateShape, sk: &Skeleton) -> (u64, f64) {
    let inner_unroll = sk.loops[0].unroll;
    // Two ports per bank; complete partitioning removes the limit.
    let ports = shape
        .arrays
        .iter()
        .zip(&sk.arrays)
        .filter_map(|(a, d)| banks(&d.partition, a, inner_unroll))
        .map(|b| 2 * b)
        .min();
    let mut body = shape.loops[0].iter_latency;
    let mut par = 1.0f64;
    for (k, (l, d)) in shape.loops.iter().zip(&sk.loops).enumerate() {
        let lat = match d.pipeline_ii {
            Some(ii) => {
                // Port pressure raises the II of a pipelined innermost loop.
                let ii = if k == 0 {
                    ports.map_or(ii, |p| ii.max(d.unroll.div_ceil(p)))
                } else {
                    ii
                };
                let ii = ii.min(body);
                par *= (body as f64 / ii as f64).max(1.0);
                (l.bound.div_ceil(d.unroll) - 1) * ii + body
            }
            None => {
                // Without pipelining, port pressure caps the useful unroll factor.
                let u = if k == 0 {
                    ports.map_or(d.unroll, |p| d.unroll.min(p))
                } else {
                    d.unroll
                };
                l.bound.div_ceil(u) * body
            }
        };
        par *= d.unroll as f64;
        body = lat + 2;
    }
    (body, par.min(PAR_CAP))
}

fn resources_of(
    shape: &TemplateShape,
    sk: &Skeleton,
    par: f64,
    mode: Monotonicity,
    rng: &mut ChaCha8Rng,
) -> ResourceVector {
    let b = shape.base;
    let mut lut = b.lut as f64 * par.powf(0.75);
    let mut ff = b.ff as f64 * par.powf(0.8);
    let dsp = b.dsp as f64 * par;
    let mut bram = b.bram as f64;
    let mut uram = 0.0;
    let inner_unroll = sk.loops[0].unroll;
    for ((a, d), &blocks) in shape.arrays.iter().zip(&sk.arrays).zip(&shape.array_bram) {
        let elems: u64 = a.dims.iter().product();
        match banks(&d.partition, a, inner_unroll) {
            None => {
                ff += (elems * 32) as f64;
                lut += (elems * 4) as f64;
            }
            Some(n) => {
                let total = blocks.max(n) as f64;
                match d.storage {
                    Storage::Bram => bram += total,
                    Storage::Uram => uram += (total / 4.0).ceil(),
                }
            }
        }
    }
    if mode == Monotonicity::NonMonotone {
        let l = &shape.loops[0];
        if let Some(ii) = sk.loops[0].pipeline_ii {
            if shape.carried && ii > l.min_ii && ii <= 2 * l.min_ii {
                lut *= 1.5;
                ff *= 1.5;
            }
        }
        let mut jitter = |v: f64| v * rng.gen_range(0.85..1.15);
        lut = jitter(lut);
        ff = jitter(ff);
        bram = jitter(bram);
    }
    ResourceVector::new(
        bram.round() as u64,
        dsp.round() as u64,
        ff.round() as u64,
        lut.round() as u64,
        uram.round() as u64,
    )
}

fn gen_shape(
    rng: &mut ChaCha8Rng,
    spec: &GenSpec,
    unit: &ResourceVector,
    frac: f64,
) -> TemplateShape {
    let depth = rng.gen_range(spec.nest_depth.0..=spec.nest_depth.1);
    let mut loops = Vec::with_capacity(depth);
    let min_ii = rng.gen_range(1..=3);
    let mut il = min_ii + rng.gen_range(1..=12);
    for k in 0..depth {
        let bound = if k == 0 {
            *[16u64, 24, 32, 64, 100, 128]
                .choose(rng)
                .expect("non-empty")
        } else {
            rng.gen_range(2..=16)
        };
        let loop_min_ii = if k == 0 { min_ii } else { 1 };
        loops.push(LoopInfo {
            label: format!("L{}", k + 1),
            nest: Some("N0".into()),
            depth: k as u32 + 1,
            bound,
            min_ii: loop_min_ii,
            iter_latency: il,
        });
        il = bound * il + 2;
    }
    let n_arrays = rng.gen_range(1..=2);
    let arrays: Vec<ArrayInfo> = (0..n_arrays)
        .map(|i| ArrayInfo {
            name: format!("buf{i}"),
            dims: (0..rng.gen_range(1..=2))
                .map(|_| *[16u64, 32, 64, 128].choose(rng).expect("non-empty"))
                .collect(),
        })
        .collect();
    let scale = |rng: &mut ChaCha8Rng, cap: u64, lo: f64| -> u64 {
        ((cap as f64 * frac * rng.gen_range(lo..1.0)).round() as u64).max(1)
    };
    let dsp = if rng.gen_bool(0.7) {
        scale(rng, unit.dsp, 0.2)
    } else {
        0
    };
    let ff = scale(rng, unit.ff, 0.3);
    let lut = scale(rng, unit.lut, 0.5);
    let base = ResourceVector::new(0, dsp, ff, lut, 0);
    let array_bram = arrays
        .iter()
        .map(|_| {
            ((unit.bram as f64 * frac * rng.gen_range(0.2..1.0)) / n_arrays as f64)
                .round()
                .max(1.0) as u64
        })
        .collect();
    TemplateShape {
        loops,
        arrays,
        array_bram,
        base,
        carried: rng.gen_bool(0.5),
    }
}

fn gen_points(rng: &mut ChaCha8Rng, spec: &GenSpec, shape: &TemplateShape) -> Vec<QoRPoint> {
    let skeletons = gen_directive_space(&shape.loops, &shape.arrays, spec.max_points, rng);
    let mut seen = HashSet::new();
    let mut pts: Vec<QoRPoint> = Vec::new();
    for (i, sk) in skeletons.iter().enumerate() {
        let (latency, par) = latency_of(shape, sk);
        let resources = resources_of(shape, sk, par, spec.mode, rng);
        if !seen.insert((latency, resources)) {
            continue;
        }
        pts.push(QoRPoint {
            id: if i == 0 {
                BASELINE_ID.to_string()
            } else {
                format!("p{i}")
            },
            directives: sk.directives(&shape.loops, &shape.arrays),
            latency,
            resources,
        });
    }
    if spec.mode == Monotonicity::Monotone {
        // Slowest first; the baseline wins latency ties.
        pts.sort_by(|a, b| {
            b.latency
                .cmp(&a.latency)
                .then((b.id == BASELINE_ID).cmp(&(a.id == BASELINE_ID)))
                .then(a.id.cmp(&b.id))
        });
        pts.dedup_by(|later, kept| later.latency == kept.latency);
        let base = pts
            .iter()
            .position(|p| p.id == BASELINE_ID)
            .expect("baseline kept");
        pts.drain(..base);
        let mut floor = ResourceVector::ZERO;
        for p in &mut pts {
            let m: Vec<u64> = p
                .resources
                .to_array()
                .iter()
                .zip(floor.to_array())
                .map(|(&a, b)| a.max(b))
                .collect();
            p.resources = ResourceVector::from_array([m[0], m[1], m[2], m[3], m[4]]);
            floor = p.resources;
        }
    }
    pts
}

fn width(rng: &mut ChaCha8Rng) -> u64 {
    if rng.gen_bool(0.05) {
        *[256u64, 512].choose(rng).expect("non-empty")
    } else {
        *[8u64, 16, 32, 64, 128].choose(rng).expect("non-empty")
    }
}

/// Generates design, QoR library and device for `spec`. The toy device preset
/// returns the toy fixture.
pub fn gen_instance(spec: &GenSpec) -> Result<Generated> {
    if spec.device == DevicePreset::Toy {
        let (design, qor, device) = toy_builder().into_files();
        return Ok(Generated {
            design,
            qor,
            device,
        });
    }
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let device = spec.device.device();

    // Kernel order: non-dataflow kernels spread between dataflow ones.
    let nd = spec.dataflow_kernels;
    let nn = spec.non_dataflow_kernels;
    let mut kinds = Vec::with_capacity(nd + nn);
    for i in 0..nd {
        kinds.push(KernelKind::Dataflow);
        let due = (i + 1) * nn / nd.max(1) - i * nn / nd.max(1);
        kinds.extend(std::iter::repeat_n(KernelKind::NonDataflow, due));
    }
    if nd == 0 {
        kinds.extend(std::iter::repeat_n(KernelKind::NonDataflow, nn));
    }

    let sizes: Vec<usize> = kinds
        .iter()
        .map(|k| match k {
            KernelKind::Dataflow => {
                rng.gen_range(spec.functions_per_dataflow.0..=spec.functions_per_dataflow.1)
            }
            KernelKind::NonDataflow => 1,
        })
        .collect();
    let n_functions: usize = sizes.iter().sum();
    let slots = device.num_slots() as f64;
    let mean_frac = spec.fill * device.util_limit * slots / n_functions as f64;
    let unit = *device.capacity(0);

    let shared = spec.templates > 0;
    let n_templates = if shared {
        spec.templates.min(n_functions)
    } else {
        n_functions
    };
    let mut templates = BTreeMap::new();
    let mut template_names = Vec::with_capacity(n_templates);
    for t in 0..n_templates {
        let frac = mean_frac * rng.gen_range(0.5..1.5);
        let shape = gen_shape(&mut rng, spec, &unit, frac);
        let points = gen_points(&mut rng, spec, &shape);
        let name = if shared {
            format!("t{t:02}")
        } else {
            format!("f{t}")
        };
        template_names.push(name.clone());
        templates.insert(
            name,
            Template {
                loops: shape.loops,
                points,
            },
        );
    }

    let mut kernels = Vec::new();
    let mut members: Vec<Vec<String>> = Vec::new();
    let mut next_private = 0;
    for (k, (&kind, &size)) in kinds.iter().zip(&sizes).enumerate() {
        let mut functions = Vec::with_capacity(size);
        for j in 0..size {
            let name = if shared {
                let t = rng.gen_range(0..n_templates);
                format!("{}_{k}_{j}", template_names[t])
            } else {
                next_private += 1;
                template_names[next_private - 1].clone()
            };
            functions.push(FunctionSpec {
                name,
                template: None,
            });
        }
        members.push(functions.iter().map(|f| f.name.clone()).collect());
        kernels.push(KernelSpec {
            name: format!("K{k}"),
            kind,
            functions,
        });
    }

    let mut edges = Vec::new();
    let fifo = |src: &str, dst: &str, w: u64| EdgeSpec {
        src: src.to_string(),
        dst: dst.to_string(),
        kind: EdgeKind::Fifo,
        width: w,
    };
    let ram = |src: &str, dst: &str| EdgeSpec {
        src: src.to_string(),
        dst: dst.to_string(),
        kind: EdgeKind::Ram,
        width: 0,
    };
    for (k, fs) in members.iter().enumerate() {
        if kinds[k] != KernelKind::Dataflow {
            continue;
        }
        for j in 1..fs.len() {
            if rng.gen_bool(0.05) {
                edges.push(ram(&fs[j - 1], &fs[j]));
            } else {
                edges.push(fifo(&fs[j - 1], &fs[j], width(&mut rng)));
            }
            if j >= 2 && rng.gen_bool(0.3) {
                let i = rng.gen_range(j.saturating_sub(4)..j - 1);
                edges.push(fifo(&fs[i], &fs[j], width(&mut rng)));
            }
        }
    }
    // Kernel-level links follow the kernel order, keeping the kernel graph acyclic.
    for k in 1..members.len() {
        let (a, b) = (&members[k - 1], &members[k]);
        match (kinds[k - 1], kinds[k]) {
            (KernelKind::Dataflow, KernelKind::Dataflow) => {
                edges.push(fifo(a.last().expect("non-empty"), &b[0], width(&mut rng)));
            }
            (KernelKind::Dataflow, KernelKind::NonDataflow) => {
                for f in a.iter().rev().take(rng.gen_range(1..=2)) {
                    edges.push(ram(f, &b[0]));
                }
            }
            (KernelKind::NonDataflow, KernelKind::Dataflow) => {
                for f in b.iter().take(rng.gen_range(1..=2)) {
                    edges.push(ram(&a[0], f));
                }
            }
            (KernelKind::NonDataflow, KernelKind::NonDataflow) => edges.push(ram(&a[0], &b[0])),
        }
    }

    let name_rules = if shared {
        template_names
            .iter()
            .map(|t| NameRule {
                regex: format!("^{t}_[0-9]+_[0-9]+$"),
                template: t.clone(),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Generated {
        design: DesignFile { kernels, edges },
        qor: QorFile {
            templates,
            name_rules,
        },
        device,
    })
}
