//! Multi-die device description: a grid of slots separated by die boundaries
//! (rows, SLL-budgeted) and I/O columns (pipeline-only).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::resources::ResourceVector;
use crate::error::{Error, Result};

pub const DEFAULT_UTIL_LIMIT: f64 = 0.65;
pub const DEFAULT_SLL_LIMIT: f64 = 0.90;

fn default_util_limit() -> f64 {
    DEFAULT_UTIL_LIMIT
}

fn default_sll_limit() -> f64 {
    DEFAULT_SLL_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub id: usize,
    pub x: usize,
    pub y: usize,
    pub capacity: ResourceVector,
}

/// One of the `width` segments of a die boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHalf {
    pub x: usize,
    pub sll_capacity: u64,
}

/// Horizontal boundary between slot rows `y` and `y + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DieBoundary {
    pub y: usize,
    pub halves: Vec<BoundaryHalf>,
}

/// Vertical boundary between slot columns `x` and `x + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoBoundary {
    pub x: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    #[serde(default)]
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub slots: Vec<Slot>,
    #[serde(default)]
    pub die_boundaries: Vec<DieBoundary>,
    #[serde(default)]
    pub io_boundaries: Vec<IoBoundary>,
    #[serde(default = "default_util_limit")]
    pub util_limit: f64,
    #[serde(default = "default_sll_limit")]
    pub sll_limit: f64,
}

/// On-disk form. Either `slots` or `total_capacity` (split evenly over the grid) must be given.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceFile {
    #[serde(default)]
    name: String,
    width: usize,
    height: usize,
    slots: Option<Vec<Slot>>,
    total_capacity: Option<ResourceVector>,
    #[serde(default)]
    die_boundaries: Vec<DieBoundary>,
    #[serde(default)]
    io_boundaries: Vec<IoBoundary>,
    util_limit: Option<f64>,
    sll_limit: Option<f64>,
}

impl DeviceModel {
    pub fn load(path: impl AsRef<Path>) -> Result<DeviceModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        DeviceModel::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<DeviceModel> {
        let file: DeviceFile = serde_json::from_str(text).map_err(|source| Error::Json {
            what: "device".into(),
            source,
        })?;
        let slots = match (file.slots, file.total_capacity) {
            (Some(slots), None) => slots,
            (None, Some(total)) => even_split(file.width, file.height, total)?,
            (Some(_), Some(_)) => {
                return Err(Error::schema(
                    "give either `slots` or `total_capacity`, not both",
                ))
            }
            (None, None) => return Err(Error::schema("device needs `slots` or `total_capacity`")),
        };
        let device = DeviceModel {
            name: file.name,
            width: file.width,
            height: file.height,
            slots,
            die_boundaries: file.die_boundaries,
            io_boundaries: file.io_boundaries,
            util_limit: file.util_limit.unwrap_or(DEFAULT_UTIL_LIMIT),
            sll_limit: file.sll_limit.unwrap_or(DEFAULT_SLL_LIMIT),
        };
        device.validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device serializes")
    }

    /// Uniform `width x height` grid with identical slots and SLL capacity on every half.
    pub fn uniform(
        name: &str,
        width: usize,
        height: usize,
        slot_capacity: ResourceVector,
        sll_capacity: u64,
    ) -> DeviceModel {
        let slots = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .enumerate()
            .map(|(id, (x, y))| Slot {
                id,
                x,
                y,
                capacity: slot_capacity,
            })
            .collect();
        DeviceModel {
            name: name.to_string(),
            width,
            height,
            slots,
            die_boundaries: (0..height.saturating_sub(1))
                .map(|y| DieBoundary {
                    y,
                    halves: (0..width)
                        .map(|x| BoundaryHalf { x, sll_capacity })
                        .collect(),
                })
                .collect(),
            io_boundaries: (0..width.saturating_sub(1))
                .map(|x| IoBoundary { x })
                .collect(),
            util_limit: DEFAULT_UTIL_LIMIT,
            sll_limit: DEFAULT_SLL_LIMIT,
        }
    }

    /// Checks every structural invariant and returns the device with slots and
    /// boundaries in canonical (id / index) order.
    pub fn validated(mut self) -> Result<DeviceModel> {
        let (w, h) = (self.width, self.height);
        if w == 0 || h == 0 {
            return Err(Error::schema("device grid must be at least 1x1"));
        }
        if !(self.util_limit > 0.0 && self.util_limit <= 1.0) {
            return Err(Error::schema(format!(
                "util_limit must be in (0, 1], got {}",
                self.util_limit
            )));
        }
        if !(self.sll_limit > 0.0 && self.sll_limit <= 1.0) {
            return Err(Error::schema(format!(
                "sll_limit must be in (0, 1], got {}",
                self.sll_limit
            )));
        }
        if self.slots.len() != w * h {
            return Err(Error::schema(format!(
                "{}x{} grid needs {} slots, found {}",
                w,
                h,
                w * h,
                self.slots.len()
            )));
        }
        self.slots.sort_by_key(|s| s.id);
        let mut seen = vec![false; w * h];
        for (idx, slot) in self.slots.iter().enumerate() {
            if slot.id != idx {
                return Err(Error::schema(format!(
                    "slot ids must be 0..{}, found {}",
                    w * h,
                    slot.id
                )));
            }
            if slot.x >= w || slot.y >= h {
                return Err(Error::schema(format!(
                    "slot {} at ({}, {}) lies outside the {}x{} grid",
                    slot.id, slot.x, slot.y, w, h
                )));
            }
            let cell = slot.y * w + slot.x;
            if std::mem::replace(&mut seen[cell], true) {
                return Err(Error::schema(format!(
                    "grid cell ({}, {}) covered twice",
                    slot.x, slot.y
                )));
            }
            if slot.capacity.is_zero() {
                return Err(Error::schema(format!("slot {} has no capacity", slot.id)));
            }
        }

        self.die_boundaries.sort_by_key(|b| b.y);
        if self.die_boundaries.len() != h - 1
            || self
                .die_boundaries
                .iter()
                .enumerate()
                .any(|(i, b)| b.y != i)
        {
            return Err(Error::schema(format!(
                "expected one die boundary for each of the {} row gaps",
                h - 1
            )));
        }
        for b in &mut self.die_boundaries {
            b.halves.sort_by_key(|half| half.x);
            if b.halves.len() != w || b.halves.iter().enumerate().any(|(i, half)| half.x != i) {
                return Err(Error::schema(format!(
                    "die boundary {} must have exactly {} halves, one per column",
                    b.y, w
                )));
            }
            if let Some(half) = b.halves.iter().find(|half| half.sll_capacity == 0) {
                return Err(Error::schema(format!(
                    "die boundary {} half {} has zero SLL capacity",
                    b.y, half.x
                )));
            }
        }

        self.io_boundaries.sort_by_key(|b| b.x);
        if self.io_boundaries.len() != w - 1
            || self.io_boundaries.iter().enumerate().any(|(i, b)| b.x != i)
        {
            return Err(Error::schema(format!(
                "expected one I/O boundary for each of the {} column gaps",
                w - 1
            )));
        }
        Ok(self)
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_at(&self, x: usize, y: usize) -> Option<usize> {
        self.slots.iter().position(|s| s.x == x && s.y == y)
    }

    pub fn capacity(&self, slot: usize) -> &ResourceVector {
        &self.slots[slot].capacity
    }

    pub fn total_capacity(&self) -> ResourceVector {
        self.slots.iter().map(|s| s.capacity).sum()
    }

    pub fn sll_capacity(&self, boundary_y: usize, half_x: usize) -> u64 {
        self.die_boundaries[boundary_y].halves[half_x].sll_capacity
    }

    /// Largest SLL usage admitted on a half (`beta * B_h`).
    pub fn sll_budget(&self, boundary_y: usize, half_x: usize) -> f64 {
        self.sll_limit * self.sll_capacity(boundary_y, half_x) as f64
    }
}

fn even_split(width: usize, height: usize, total: ResourceVector) -> Result<Vec<Slot>> {
    let n = (width * height) as u64;
    if n == 0 {
        return Err(Error::schema("device grid must be at least 1x1"));
    }
    let per = total.scale_div(n);
    Ok(DeviceModel::uniform("", width, height, per, 1).slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u250_lower_half_splits_evenly() {
        let text = r#"{
            "name": "u250-lower",
            "width": 2, "height": 2,
            "total_capacity": {"bram": 2016, "dsp": 5184, "ff": 1319040, "lut": 659520, "uram": 544},
            "die_boundaries": [{"y": 0, "halves": [{"x": 0, "sll_capacity": 11520}, {"x": 1, "sll_capacity": 11520}]}],
            "io_boundaries": [{"x": 0}]
        }"#;
        let d = DeviceModel::from_json(text).unwrap();
        assert_eq!(d.num_slots(), 4);
        for s in &d.slots {
            assert_eq!(
                s.capacity,
                ResourceVector::new(504, 1296, 329760, 164880, 136)
            );
        }
        assert_eq!(d.util_limit, 0.65);
        assert_eq!(d.sll_limit, 0.90);
    }

    #[test]
    fn single_slot_has_no_boundaries() {
        let text = r#"{"width": 1, "height": 1,
            "slots": [{"id": 0, "x": 0, "y": 0, "capacity": {"lut": 100}}]}"#;
        let d = DeviceModel::from_json(text).unwrap();
        assert!(d.die_boundaries.is_empty());
        assert!(d.io_boundaries.is_empty());
    }

    #[test]
    fn missing_half_is_rejected() {
        let text = r#"{"width": 2, "height": 2,
            "total_capacity": {"lut": 400},
            "die_boundaries": [{"y": 0, "halves": [{"x": 0, "sll_capacity": 100}]}],
            "io_boundaries": [{"x": 0}]}"#;
        let err = DeviceModel::from_json(text).unwrap_err();
        assert!(err.to_string().contains("exactly 2 halves"), "{err}");
    }

    #[test]
    fn duplicate_cell_is_rejected() {
        let mut d = DeviceModel::uniform("t", 2, 1, ResourceVector::new(0, 0, 0, 10, 0), 1);
        d.slots[1].x = 0;
        assert!(d.validated().is_err());
    }

    #[test]
    fn zero_capacity_slot_is_rejected() {
        let d = DeviceModel::uniform("t", 1, 1, ResourceVector::ZERO, 1);
        assert!(d.validated().is_err());
    }

    #[test]
    fn limits_are_range_checked() {
        let mut d = DeviceModel::uniform("t", 1, 1, ResourceVector::new(1, 1, 1, 1, 1), 1);
        d.util_limit = 0.0;
        assert!(d.clone().validated().is_err());
        d.util_limit = 0.5;
        d.sll_limit = 1.5;
        assert!(d.validated().is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = DeviceModel::uniform("t", 2, 4, ResourceVector::new(1, 2, 3, 4, 5), 77);
        let back = DeviceModel::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
    }
}
