use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FPGA resource kinds, in the fixed order used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Bram,
    Dsp,
    Ff,
    Lut,
    Uram,
}

impl Resource {
    pub const ALL: [Resource; 5] = [
        Resource::Bram,
        Resource::Dsp,
        Resource::Ff,
        Resource::Lut,
        Resource::Uram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Resource::Bram => "BRAM",
            Resource::Dsp => "DSP",
            Resource::Ff => "FF",
            Resource::Lut => "LUT",
            Resource::Uram => "URAM",
        }
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Amounts of the five resource kinds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceVector {
    #[serde(default)]
    pub bram: u64,
    #[serde(default)]
    pub dsp: u64,
    #[serde(default)]
    pub ff: u64,
    #[serde(default)]
    pub lut: u64,
    #[serde(default)]
    pub uram: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector {
        bram: 0,
        dsp: 0,
        ff: 0,
        lut: 0,
        uram: 0,
    };

    pub fn new(bram: u64, dsp: u64, ff: u64, lut: u64, uram: u64) -> Self {
        ResourceVector {
            bram,
            dsp,
            ff,
            lut,
            uram,
        }
    }

    pub fn from_array(values: [u64; 5]) -> Self {
        let [bram, dsp, ff, lut, uram] = values;
        ResourceVector::new(bram, dsp, ff, lut, uram)
    }

    pub fn to_array(self) -> [u64; 5] {
        [self.bram, self.dsp, self.ff, self.lut, self.uram]
    }

    pub fn get(&self, r: Resource) -> u64 {
        match r {
            Resource::Bram => self.bram,
            Resource::Dsp => self.dsp,
            Resource::Ff => self.ff,
            Resource::Lut => self.lut,
            Resource::Uram => self.uram,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == ResourceVector::ZERO
    }

    /// Component-wise subtraction; errors instead of wrapping below zero.
    pub fn checked_sub(&self, rhs: &ResourceVector) -> Result<ResourceVector> {
        let a = self.to_array();
        let b = rhs.to_array();
        let mut out = [0u64; 5];
        for i in 0..5 {
            out[i] = a[i].checked_sub(b[i]).ok_or_else(|| Error::Underflow {
                lhs: self.to_string(),
                rhs: rhs.to_string(),
            })?;
        }
        Ok(ResourceVector::from_array(out))
    }

    /// Subtraction for internal bookkeeping where the caller guarantees `rhs <= self`.
    pub(crate) fn sub_unchecked(&self, rhs: &ResourceVector) -> ResourceVector {
        self.checked_sub(rhs)
            .expect("usage bookkeeping went negative")
    }

    /// `true` when every component is `<=` the corresponding one in `other`.
    pub fn le(&self, other: &ResourceVector) -> bool {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .all(|(a, b)| a <= b)
    }

    pub fn scale_div(&self, divisor: u64) -> ResourceVector {
        let a = self.to_array();
        ResourceVector::from_array(a.map(|v| v / divisor))
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;
    fn add(self, rhs: ResourceVector) -> ResourceVector {
        let a = self.to_array();
        let b = rhs.to_array();
        ResourceVector::from_array([
            a[0] + b[0],
            a[1] + b[1],
            a[2] + b[2],
            a[3] + b[3],
            a[4] + b[4],
        ])
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: ResourceVector) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> ResourceVector {
        iter.fold(ResourceVector::ZERO, |acc, v| acc + v)
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(BRAM {}, DSP {}, FF {}, LUT {}, URAM {})",
            self.bram, self.dsp, self.ff, self.lut, self.uram
        )
    }
}

/// Per-resource ratios `used / cap`. A resource with zero capacity and zero use has ratio 0.
pub fn resource_ratios(used: &ResourceVector, cap: &ResourceVector) -> Result<[f64; 5]> {
    let mut out = [0.0; 5];
    for (i, r) in Resource::ALL.iter().enumerate() {
        let (u, c) = (used.get(*r), cap.get(*r));
        out[i] = match (u, c) {
            (0, _) => 0.0,
            (u, 0) => {
                return Err(Error::ZeroCapacity {
                    resource: r.name(),
                    used: u,
                })
            }
            (u, c) => u as f64 / c as f64,
        };
    }
    Ok(out)
}

/// Utilization of `used` against `cap`: the maximum over the five normalized ratios.
pub fn utilization_ratio(used: &ResourceVector, cap: &ResourceVector) -> Result<f64> {
    Ok(resource_ratios(used, cap)?.into_iter().fold(0.0, f64::max))
}

/// Whether `used` stays within `limit * cap` on every resource.
pub fn fits_within(used: &ResourceVector, cap: &ResourceVector, limit: f64) -> bool {
    Resource::ALL.iter().all(|r| {
        let u = used.get(*r);
        u == 0 || (u as f64) <= limit * cap.get(*r) as f64 + 1e-9
    })
}
