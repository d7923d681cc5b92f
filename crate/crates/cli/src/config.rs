use std::path::Path;

use ldlab::optimize::AnnealConfig;
use ldlab::{Kernel, NonlocalMethod, PerimeterMethod};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub kernel: KernelConfig,
    pub grid: GridConfig,
    pub anneal: AnnealSection,
    pub sweep: SweepConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub n: usize,
    pub alpha: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { n: 3, alpha: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub perimeter: PerimeterMethod,
    pub nonlocal: NonlocalMethod,
    /// Half-width of the annealing box; unset means twice the ball radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_half: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            h: 0.0625,
            perimeter: PerimeterMethod::SurfaceMesh,
            nonlocal: NonlocalMethod::Convolution,
            box_half: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSection {
    pub mass: f64,
    pub moves: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub decay: f64,
    pub far_weight: f64,
    pub seed: u64,
    pub snapshot_period: u64,
    pub refresh_period: u64,
    pub tournament: usize,
}

impl Default for AnnealSection {
    fn default() -> Self {
        let core = AnnealConfig::default();
        Self {
            mass: 0.5,
            moves: core.moves,
            t0: core.t0,
            decay: core.decay,
            far_weight: core.far_weight,
            seed: core.seed,
            snapshot_period: core.snapshot_period,
            refresh_period: core.refresh_period,
            tournament: core.tournament,
        }
    }
}

impl AnnealSection {
    pub fn to_core(&self) -> AnnealConfig {
        AnnealConfig {
            target_cells: None,
            moves: self.moves,
            t0: self.t0,
            decay: self.decay,
            far_weight: self.far_weight,
            seed: self.seed,
            snapshot_period: self.snapshot_period,
            refresh_period: self.refresh_period,
            tournament: self.tournament,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Empty means the study's own default mass list.
    pub masses: Vec<f64>,
    pub spacing_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub samples: usize,
    pub cells_per_radius: f64,
    pub separations: Vec<f64>,
    pub density_threshold: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            masses: Vec::new(),
            spacing_factor: 10.0,
            beta: None,
            samples: 100,
            cells_per_radius: 12.0,
            separations: vec![10.0],
            density_threshold: 0.25,
            seed: 0,
        }
    }
}

/// One documented key: section, name, default as TOML text (`None` when
/// unset by default), unit, description.
pub struct KeyDoc {
    pub section: &'static str,
    pub key: &'static str,
    pub default: Option<&'static str>,
    pub unit: &'static str,
    pub doc: &'static str,
}

const fn key(
    section: &'static str,
    key: &'static str,
    default: Option<&'static str>,
    unit: &'static str,
    doc: &'static str,
) -> KeyDoc {
    KeyDoc {
        section,
        key,
        default,
        unit,
        doc,
    }
}

pub const KEYS: &[KeyDoc] = &[
    key("kernel", "n", Some("3"), "-", "space dimension (2 or 3)"),
    key("kernel", "alpha", Some("1.0"), "-", "Riesz exponent, 0 < alpha < n"),
    key("grid", "h", Some("0.0625"), "length", "mesh size"),
    key("grid", "perimeter", Some("\"surface_mesh\""), "-", "facet | surface_mesh | stencil"),
    key("grid", "nonlocal", Some("\"convolution\""), "-", "direct | convolution"),
    key("grid", "box_half", None, "length", "half-width of the annealing box (unset: 2x ball radius)"),
    key("anneal", "mass", Some("0.5"), "volume", "mass of the random initial blob"),
    key("anneal", "moves", Some("200000"), "proposals", "proposed swaps"),
    key("anneal", "t0", None, "energy", "initial temperature (unset: h^(n-1)/2)"),
    key("anneal", "decay", Some("0.999"), "per sweep", "temperature factor per sweep"),
    key("anneal", "far_weight", Some("0.05"), "probability", "chance an added cell is drawn from the whole box"),
    key("anneal", "seed", Some("0"), "-", "ChaCha8 seed for the blob and the moves"),
    key("anneal", "snapshot_period", Some("0"), "proposals", "trace spacing (0: final point only)"),
    key("anneal", "refresh_period", Some("5000"), "accepted moves", "full potential recomputation period"),
    key("anneal", "tournament", Some("3"), "candidates", "candidates per proposal (1: uniform)"),
    key("sweep", "masses", Some("[]"), "volume", "mass list (empty: the study default)"),
    key("sweep", "spacing_factor", Some("10.0"), "diameters", "ball spacing in grid chains"),
    key("sweep", "beta", None, "energy/volume", "equipartition threshold (unset: 1.5 min e(m)/m)"),
    key("sweep", "samples", Some("100"), "count", "random sets, pairs or Monte-Carlo samples"),
    key("sweep", "cells_per_radius", Some("12.0"), "cells", "resolution of interpolation balls"),
    key("sweep", "separations", Some("[10.0]"), "extents", "split translations for the cut probe"),
    key("sweep", "density_threshold", Some("0.25"), "-", "local mass floor as a fraction of min(1, m)"),
    key("sweep", "seed", Some("0"), "-", "ChaCha8 seed for random sets"),
];

pub fn keys_help() -> String {
    let mut out = String::from("Config keys (TOML, file given by --config):\n");
    let mut section = "";
    for k in KEYS {
        if k.section != section {
            section = k.section;
            out.push_str(&format!("  [{section}]\n"));
        }
        out.push_str(&format!(
            "    {:<18} default {:<16} unit {:<15} {}\n",
            k.key,
            k.default.unwrap_or("unset"),
            k.unit,
            k.doc
        ));
    }
    out
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.to_string().trim())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Err(e) = Kernel::new(self.kernel.n, self.kernel.alpha) {
            return usage(format!("kernel: {e}"));
        }
        if !(self.grid.h > 0.0 && self.grid.h.is_finite()) {
            return usage(format!("grid.h must be positive, got {}", self.grid.h));
        }
        if let Some(b) = self.grid.box_half {
            if !(b > 0.0) {
                return usage(format!("grid.box_half must be positive, got {b}"));
            }
        }
        if !(self.anneal.mass > 0.0) {
            return usage(format!("anneal.mass must be positive, got {}", self.anneal.mass));
        }
        if let Err(e) = self.anneal.to_core().validate() {
            return usage(format!("anneal: {e}"));
        }
        if self.sweep.masses.iter().any(|&m| !(m > 0.0)) {
            return usage("sweep.masses must be positive".into());
        }
        if !(self.sweep.spacing_factor >= 1.0) {
            return usage("sweep.spacing_factor must be at least 1".into());
        }
        if let Some(b) = self.sweep.beta {
            if !(b > 0.0) {
                return usage(format!("sweep.beta must be positive, got {b}"));
            }
        }
        if !(self.sweep.cells_per_radius > 0.0) {
            return usage("sweep.cells_per_radius must be positive".into());
        }
        if self.sweep.separations.iter().any(|&s| !(s > 0.0)) {
            return usage("sweep.separations must be positive".into());
        }
        Ok(())
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::new(self.kernel.n, self.kernel.alpha).expect("validated kernel")
    }
}
