//! Function-level QoR library: per-template directive configurations with their
//! latency and resource cost, plus the name rules that map functions to templates.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::design::DesignGraph;
use super::resources::{Resource, ResourceVector};
use crate::error::{Error, Result};

/// Id of the no-directive point every template must carry.
pub const BASELINE_ID: &str = "baseline";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub label: String,
    /// Loops sharing a nest name form one loop nest. Defaults to the label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nest: Option<String>,
    /// 1 = innermost.
    #[serde(alias = "nest_depth_index")]
    pub depth: u32,
    pub bound: u64,
    pub min_ii: u64,
    pub iter_latency: u64,
}

impl LoopInfo {
    pub fn nest_name(&self) -> &str {
        self.nest.as_deref().unwrap_or(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QoRPoint {
    pub id: String,
    /// Directive name (with its target, e.g. `PIPELINE:L1`) to parameter value.
    #[serde(default)]
    pub directives: BTreeMap<String, String>,
    pub latency: u64,
    pub resources: ResourceVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    #[serde(default)]
    pub loops: Vec<LoopInfo>,
    pub points: Vec<QoRPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameRule {
    pub regex: String,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QorFile {
    pub templates: BTreeMap<String, Template>,
    #[serde(default)]
    pub name_rules: Vec<NameRule>,
}

#[derive(Debug, Clone)]
pub struct QoRLibrary {
    names: Vec<String>,
    templates: Vec<Template>,
    name_rules: Vec<NameRule>,
    /// Resolved template index for each function of the design.
    resolution: Vec<usize>,
    baseline: Vec<usize>,
    /// Templates whose baseline point is not the slowest one.
    pub non_maximal_baseline: Vec<String>,
}

impl QoRLibrary {
    pub fn load(path: impl AsRef<Path>, graph: &DesignGraph) -> Result<QoRLibrary> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        QoRLibrary::from_json(&text, graph)
    }

    pub fn from_json(text: &str, graph: &DesignGraph) -> Result<QoRLibrary> {
        let file: QorFile = serde_json::from_str(text).map_err(|source| Error::Json {
            what: "qor library".into(),
            source,
        })?;
        QoRLibrary::from_file(file, graph)
    }

    pub fn from_file(file: QorFile, graph: &DesignGraph) -> Result<QoRLibrary> {
        let mut names = Vec::new();
        let mut templates = Vec::new();
        let mut baseline = Vec::new();
        let mut non_maximal_baseline = Vec::new();
        for (name, mut t) in file.templates {
            validate_template(&name, &t)?;
            sort_points(&mut t.points);
            let b = t
                .points
                .iter()
                .position(|p| p.id == BASELINE_ID)
                .ok_or_else(|| {
                    Error::schema(format!("template `{name}` has no `{BASELINE_ID}` point"))
                })?;
            if t.points[b].latency < t.points.last().unwrap().latency {
                log::warn!("template `{name}`: baseline point is not the slowest");
                non_maximal_baseline.push(name.clone());
            }
            baseline.push(b);
            names.push(name);
            templates.push(t);
        }
        let index: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        let mut rules = Vec::with_capacity(file.name_rules.len());
        for r in &file.name_rules {
            let re = Regex::new(&format!("^(?:{})$", r.regex))
                .map_err(|e| Error::schema(format!("bad name rule `{}`: {e}", r.regex)))?;
            let t = *index.get(r.template.as_str()).ok_or_else(|| {
                Error::schema(format!(
                    "name rule targets unknown template `{}`",
                    r.template
                ))
            })?;
            rules.push((re, t));
        }

        let mut resolution = Vec::with_capacity(graph.num_functions());
        for f in &graph.functions {
            let t = if let Some(explicit) = &f.template {
                *index
                    .get(explicit.as_str())
                    .ok_or_else(|| Error::UnresolvedFunction {
                        function: f.name.clone(),
                    })?
            } else {
                let hits: Vec<usize> = rules
                    .iter()
                    .filter(|(re, _)| re.is_match(&f.name))
                    .map(|(_, t)| *t)
                    .collect();
                match hits.as_slice() {
                    [t] => *t,
                    [] => *index
                        .get(f.name.as_str())
                        .ok_or_else(|| Error::UnresolvedFunction {
                            function: f.name.clone(),
                        })?,
                    many => {
                        return Err(Error::AmbiguousFunction {
                            function: f.name.clone(),
                            templates: many.iter().map(|&t| names[t].clone()).collect(),
                        })
                    }
                }
            };
            resolution.push(t);
        }

        Ok(QoRLibrary {
            names,
            templates,
            name_rules: file.name_rules,
            resolution,
            baseline,
            non_maximal_baseline,
        })
    }

    pub fn to_file(&self) -> QorFile {
        QorFile {
            templates: self
                .names
                .iter()
                .cloned()
                .zip(self.templates.iter().cloned())
                .collect(),
            name_rules: self.name_rules.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("qor serializes")
    }

    pub fn template_name(&self, f: usize) -> &str {
        &self.names[self.resolution[f]]
    }

    pub fn template(&self, f: usize) -> &Template {
        &self.templates[self.resolution[f]]
    }

    pub fn templates(&self) -> impl Iterator<Item = (&str, &Template)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.templates.iter())
    }

    /// Points of the function's template, latency ascending.
    pub fn points(&self, f: usize) -> &[QoRPoint] {
        &self.templates[self.resolution[f]].points
    }

    pub fn point(&self, f: usize, idx: usize) -> &QoRPoint {
        &self.points(f)[idx]
    }

    /// Q_ij: number of directive choices for the function.
    pub fn num_points(&self, f: usize) -> usize {
        self.points(f).len()
    }

    pub fn baseline_index(&self, f: usize) -> usize {
        self.baseline[self.resolution[f]]
    }

    pub fn point_index(&self, f: usize, id: &str) -> Result<usize> {
        self.points(f)
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPoint {
                template: self.template_name(f).to_string(),
                point: id.to_string(),
            })
    }

    pub fn num_functions(&self) -> usize {
        self.resolution.len()
    }
}

fn validate_template(name: &str, t: &Template) -> Result<()> {
    if t.points.is_empty() {
        return Err(Error::schema(format!("template `{name}` has no points")));
    }
    let mut ids = std::collections::HashSet::new();
    for p in &t.points {
        if !ids.insert(p.id.as_str()) {
            return Err(Error::schema(format!(
                "template `{name}` has duplicate point id `{}`",
                p.id
            )));
        }
        if p.latency == 0 {
            return Err(Error::schema(format!(
                "template `{name}` point `{}` has zero latency",
                p.id
            )));
        }
    }
    for l in &t.loops {
        if l.bound == 0 || l.min_ii == 0 || l.iter_latency < l.min_ii || l.depth == 0 {
            return Err(Error::schema(format!(
                "template `{name}` loop `{}` violates B >= 1, MinII >= 1, IL >= MinII, depth >= 1",
                l.label
            )));
        }
    }
    Ok(())
}

/// Latency ascending; ties by max-utilization (normalized by the per-resource maxima
/// over the template's points) ascending, then id.
fn sort_points(points: &mut [QoRPoint]) {
    let mut norm = [0u64; 5];
    for p in points.iter() {
        for (i, r) in Resource::ALL.iter().enumerate() {
            norm[i] = norm[i].max(p.resources.get(*r));
        }
    }
    let util = |p: &QoRPoint| {
        Resource::ALL
            .iter()
            .enumerate()
            .filter(|(i, _)| norm[*i] > 0)
            .map(|(i, r)| p.resources.get(*r) as f64 / norm[i] as f64)
            .fold(0.0, f64::max)
    };
    points.sort_by(|a, b| {
        a.latency
            .cmp(&b.latency)
            .then_with(|| util(a).partial_cmp(&util(b)).unwrap_or(Ordering::Equal))
            .then_with(|| a.id.cmp(&b.id))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(names: &[&str]) -> DesignGraph {
        let fns: Vec<String> = names
            .iter()
            .map(|n| format!(r#"{{"name": "{n}"}}"#))
            .collect();
        DesignGraph::from_json(&format!(
            r#"{{"kernels": [{{"name": "K", "kind": "dataflow", "functions": [{}]}}]}}"#,
            fns.join(",")
        ))
        .unwrap()
    }

    fn lib_json(rules: &str) -> String {
        format!(
            r#"{{"templates": {{
                "funcA": {{"points": [
                    {{"id": "baseline", "latency": 10, "resources": {{"lut": 5}}}},
                    {{"id": "p1", "latency": 4, "resources": {{"lut": 9}}}},
                    {{"id": "p2", "latency": 4, "resources": {{"lut": 7}}}}]}},
                "funcB": {{"points": [{{"id": "baseline", "latency": 3, "resources": {{"lut": 1}}}}]}}
            }}, "name_rules": {rules}}}"#
        )
    }

    #[test]
    fn regex_rule_resolves_template() {
        let g = graph(&["funcA_0_1"]);
        let lib = QoRLibrary::from_json(
            &lib_json(r#"[{"regex": "funcA_[0-9]_[0-9]", "template": "funcA"}]"#),
            &g,
        )
        .unwrap();
        assert_eq!(lib.template_name(0), "funcA");
        assert_eq!(lib.num_points(0), 3);
    }

    #[test]
    fn exact_name_fallback() {
        let g = graph(&["funcB"]);
        let lib = QoRLibrary::from_json(&lib_json("[]"), &g).unwrap();
        assert_eq!(lib.template_name(0), "funcB");
    }

    #[test]
    fn ambiguous_rules_are_rejected() {
        let g = graph(&["funcA_0_1"]);
        let err = QoRLibrary::from_json(
            &lib_json(
                r#"[{"regex": "funcA_[0-9]_[0-9]", "template": "funcA"},
                    {"regex": "func.*", "template": "funcB"}]"#,
            ),
            &g,
        )
        .unwrap_err();
        assert!(matches!(err, Error::AmbiguousFunction { .. }));
    }

    #[test]
    fn unresolved_function() {
        let g = graph(&["mystery"]);
        assert!(matches!(
            QoRLibrary::from_json(&lib_json("[]"), &g),
            Err(Error::UnresolvedFunction { .. })
        ));
    }

    #[test]
    fn points_sorted_with_util_tie_break() {
        let g = graph(&["funcA"]);
        let lib = QoRLibrary::from_json(&lib_json("[]"), &g).unwrap();
        let ids: Vec<&str> = lib.points(0).iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["p2", "p1", "baseline"]);
        assert_eq!(lib.baseline_index(0), 2);
        assert!(lib.non_maximal_baseline.is_empty());
    }

    #[test]
    fn duplicate_ids_and_empty_points_are_rejected() {
        let g = graph(&["t"]);
        let dup = r#"{"templates": {"t": {"points": [
            {"id": "baseline", "latency": 1, "resources": {}},
            {"id": "baseline", "latency": 2, "resources": {}}]}}}"#;
        assert!(QoRLibrary::from_json(dup, &g).is_err());
        let empty = r#"{"templates": {"t": {"points": []}}}"#;
        assert!(QoRLibrary::from_json(empty, &g).is_err());
    }

    #[test]
    fn fast_baseline_is_flagged() {
        let g = graph(&["t"]);
        let text = r#"{"templates": {"t": {"points": [
            {"id": "baseline", "latency": 1, "resources": {}},
            {"id": "slow", "latency": 2, "resources": {}}]}}}"#;
        let lib = QoRLibrary::from_json(text, &g).unwrap();
        assert_eq!(lib.non_maximal_baseline, vec!["t".to_string()]);
    }

    #[test]
    fn round_trip() {
        let g = graph(&["funcA_1_2", "funcB"]);
        let lib = QoRLibrary::from_json(
            &lib_json(r#"[{"regex": "funcA_[0-9]_[0-9]", "template": "funcA"}]"#),
            &g,
        )
        .unwrap();
        let back = QoRLibrary::from_json(&lib.to_json(), &g).unwrap();
        assert_eq!(lib.to_file(), back.to_file());
        assert_eq!(lib.resolution, back.resolution);
    }
}
