//! Binary checkpoint format.
//!
//! Layout, all little-endian: magic `GRWF`, version u32, mesh descriptor
//! (m u32, topology u32, n u32, L f64, metric kind u32, φ amplitude f64),
//! s f64, step count u64, u as f64 values, then a u64 checksum equal to the
//! wrapping sum of every preceding byte.

use std::path::Path;

use crate::error::{GrwError, Result};
use crate::mesh::{MeshSpec, MetricSpec, Topology};

pub const MAGIC: &[u8; 4] = b"GRWF";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub mesh: MeshSpec,
    pub s: f64,
    /// Number of steps taken, i.e. the length of the dt history.
    pub steps: u64,
    pub u: Vec<f64>,
}

fn checksum(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| acc.wrapping_add(b as u64))
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.u.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.mesh.m as u32).to_le_bytes());
        let topo: u32 = match self.mesh.topology {
            Topology::Periodic => 0,
            Topology::DirichletRectangle => 1,
        };
        out.extend_from_slice(&topo.to_le_bytes());
        out.extend_from_slice(&(self.mesh.n as u32).to_le_bytes());
        out.extend_from_slice(&self.mesh.length.to_le_bytes());
        let (kind, amp): (u32, f64) = match self.mesh.metric {
            MetricSpec::Flat => (0, 0.0),
            MetricSpec::ConformalSine { amplitude } => (1, amplitude),
            MetricSpec::ConformalCustom => (2, 0.0),
        };
        out.extend_from_slice(&kind.to_le_bytes());
        out.extend_from_slice(&amp.to_le_bytes());
        out.extend_from_slice(&self.s.to_le_bytes());
        out.extend_from_slice(&self.steps.to_le_bytes());
        for x in &self.u {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| GrwError::CorruptCheckpoint(msg.to_string());
        const HEADER: usize = 4 + 4 + 4 + 4 + 4 + 8 + 4 + 8 + 8 + 8;
        if bytes.len() < HEADER + 8 {
            return Err(bad("file too short"));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("bad magic bytes"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if checksum(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
            return Err(bad("checksum mismatch"));
        }
        let mut pos = 4;
        let mut take = |k: usize| {
            let s = &body[pos..pos + k];
            pos += k;
            s
        };
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let version = u32_at(take(4));
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let m = u32_at(take(4)) as usize;
        let topology = match u32_at(take(4)) {
            0 => Topology::Periodic,
            1 => Topology::DirichletRectangle,
            _ => return Err(bad("unknown topology code")),
        };
        let n = u32_at(take(4)) as usize;
        let length = f64_at(take(8));
        let kind = u32_at(take(4));
        let amp = f64_at(take(8));
        let metric = match kind {
            0 => MetricSpec::Flat,
            1 => MetricSpec::ConformalSine { amplitude: amp },
            2 => MetricSpec::ConformalCustom,
            _ => return Err(bad("unknown metric code")),
        };
        let s = f64_at(take(8));
        let steps = u64::from_le_bytes(take(8).try_into().unwrap());
        if !(m == 1 || m == 2) || n == 0 {
            return Err(bad("invalid mesh descriptor"));
        }
        let count = n.checked_pow(m as u32).ok_or_else(|| bad("mesh too large"))?;
        if body.len() - HEADER != 8 * count {
            return Err(bad("payload length does not match mesh descriptor"));
        }
        let u = body[HEADER..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { mesh: MeshSpec { m, topology, n, length, metric }, s, steps, u })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())
            .map_err(|e| GrwError::CorruptCheckpoint(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| GrwError::CorruptCheckpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::decode(&bytes)
    }
}
