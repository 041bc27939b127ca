//! Pulse sets for the simulator, optimized on demand and cached on disk.
//!
//! Cached files are named after the gate, backend, neighbour count and pulse
//! duration, plus a digest of the coupling strength and optimizer settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zzsched::pulse::{optimize, Backend, NativeGate, OptimizeConfig, PulseSpec, RegionModel};
use zzsched::sim::PulseSet;

/// What to optimize: one basic region per gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseRequest {
    pub backend: Backend,
    /// Idle neighbours per gate qubit.
    pub neighbors: usize,
    /// Coupling strength of the region, Hz.
    pub lambda_hz: f64,
    pub optimizer: OptimizeConfig,
}

impl PulseRequest {
    fn cache_name(&self, gate: NativeGate) -> String {
        let t_ns = self.optimizer.duration.unwrap_or_else(|| self.backend.duration(gate)) * 1e9;
        let settings = serde_json::to_vec(&(self.lambda_hz, &self.optimizer)).expect("plain data serializes");
        let digest = format!("{:x}", Sha256::digest(&settings));
        format!("{gate}-{}-m{}-T{t_ns}-{}.json", self.backend, self.neighbors, &digest[..16])
    }

    fn model(&self, gate: NativeGate) -> RegionModel {
        RegionModel::for_gate(gate, self.neighbors, 2.0 * std::f64::consts::PI * self.lambda_hz)
    }
}

/// Pulses for `gates`. Fixed backends are built directly; optimized ones are
/// read from `cache` when present and written back after optimizing.
pub fn pulse_set(req: &PulseRequest, gates: &[NativeGate], cache: Option<&Path>) -> Result<PulseSet> {
    match req.backend {
        Backend::Gaussian => return Ok(restrict(PulseSet::gaussian(), gates)),
        Backend::Dcg => return Ok(restrict(PulseSet::dcg(), gates)),
        _ => {}
    }
    let cached = |g: NativeGate| -> Option<PathBuf> { cache.map(|dir| dir.join(req.cache_name(g))) };
    let mut pulses = BTreeMap::new();
    let mut missing = Vec::new();
    for &g in gates {
        match cached(g).filter(|p| p.exists()) {
            Some(path) => {
                debug!("using cached {}", path.display());
                pulses.insert(g, read_pulse(&path)?);
            }
            None => missing.push(g),
        }
    }
    let fresh: Vec<(NativeGate, PulseSpec)> = missing
        .par_iter()
        .map(|&g| {
            info!("optimizing {g} ({} backend, {} neighbours)", req.backend, req.neighbors);
            optimize(&req.model(g), g, req.backend, &req.optimizer).map(|p| (g, p))
        })
        .collect::<zzsched::error::Result<_>>()?;
    if let Some(dir) = cache {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    for (g, p) in fresh {
        if let Some(path) = cached(g) {
            write_text(&path, &to_json(&p)?)?;
        }
        pulses.insert(g, p);
    }
    Ok(PulseSet { backend: req.backend, pulses })
}

fn restrict(mut set: PulseSet, gates: &[NativeGate]) -> PulseSet {
    set.pulses.retain(|g, _| gates.contains(g));
    set
}

pub fn read_pulse(path: &Path) -> Result<PulseSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let pulse: PulseSpec = serde_json::from_str(&text).with_context(|| format!("parsing pulse {}", path.display()))?;
    pulse.validate()?;
    Ok(pulse)
}

/// Loads `<gate>.json` for every gate in `gates` from `dir`.
pub fn read_pulse_dir(dir: &Path, gates: &[NativeGate]) -> Result<PulseSet> {
    let mut pulses = BTreeMap::new();
    let mut backend = None;
    for &g in gates {
        let p = read_pulse(&dir.join(format!("{g}.json")))?;
        backend.get_or_insert(p.backend);
        pulses.insert(g, p);
    }
    Ok(PulseSet { backend: backend.unwrap_or(Backend::Gaussian), pulses })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
