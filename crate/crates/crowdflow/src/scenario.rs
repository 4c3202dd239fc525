//! Declarative scenario files: schema, built-in presets, TOML merging,
//! command-line overrides and validation.
//!
//! A scenario file selects a `mode`; every key it sets overrides the
//! corresponding preset value, so files can be minimal. `custom` starts
//! from a small 1D base. Validation collects every violated constraint
//! before reporting.

use crate::error::{Error, Result};
use crate::fundamental::{FundamentalDiagram, MotionSensitivity};
use crate::geometry::{BoundaryKind, BoundarySegment, Edge, Grid, WalkingDomain};
use crate::perception::{DegenerateInteraction, PerceptionConfig, Strategy};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    PerceptionTest1d,
    PerceptionTest2d,
    Footbridge,
    Station,
    Custom,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s.replace('_', "-").as_str() {
            "perception-test-1d" => Ok(Mode::PerceptionTest1d),
            "perception-test-2d" => Ok(Mode::PerceptionTest2d),
            "footbridge" => Ok(Mode::Footbridge),
            "station" => Ok(Mode::Station),
            "custom" => Ok(Mode::Custom),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

impl Default for GridSpec {
    fn default() -> GridSpec {
        GridSpec { n1: 100, n2: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleSpec {
    /// Axis-aligned rectangle [x0, y0, x1, y1] in nondimensional units.
    pub rect: [f64; 4],
}

impl Default for ObstacleSpec {
    fn default() -> ObstacleSpec {
        ObstacleSpec { rect: [0.0, 0.0, 0.0, 0.0] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundarySpec {
    pub edge: String,
    pub span: [f64; 2],
    pub kind: String,
    pub name: String,
}

impl Default for BoundarySpec {
    fn default() -> BoundarySpec {
        BoundarySpec { edge: "right".into(), span: [0.0, 1.0], kind: "exit".into(), name: String::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainSpec {
    /// Nondimensional extents; cells are square, so size/grid counts must
    /// agree on both axes.
    pub size: [f64; 2],
    /// Metres per nondimensional length unit (the walking-area scale L).
    pub length_m: f64,
    pub obstacles: Vec<ObstacleSpec>,
    pub boundaries: Vec<BoundarySpec>,
}

impl Default for DomainSpec {
    fn default() -> DomainSpec {
        DomainSpec {
            size: [1.0, 0.01],
            length_m: 1.0,
            obstacles: Vec::new(),
            boundaries: vec![
                BoundarySpec { edge: "left".into(), span: [0.0, 0.01], kind: "inlet".into(), name: "in".into() },
                BoundarySpec { edge: "right".into(), span: [0.0, 0.01], kind: "exit".into(), name: "out".into() },
            ],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct FdSpec {
    /// "europe-rush" or "asia-rush"; empty for explicit values.
    pub preset: String,
    pub v_max: f64,
    pub rho_max: f64,
    pub gamma: f64,
}

impl Default for FdSpec {
    fn default() -> FdSpec {
        FdSpec { preset: "asia-rush".into(), v_max: 0.0, rho_max: 0.0, gamma: 0.0 }
    }
}

impl FdSpec {
    pub fn resolve(&self) -> Result<FundamentalDiagram> {
        match self.preset.as_str() {
            "europe-rush" => Ok(FundamentalDiagram::europe_rush()),
            "asia-rush" => Ok(FundamentalDiagram::asia_rush()),
            "" => Ok(FundamentalDiagram { v_max: self.v_max, rho_max: self.rho_max, gamma: self.gamma }),
            other => Err(Error::Parse(format!(
                "unknown fundamental-diagram preset '{other}' (europe-rush|asia-rush or explicit values)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionSpec {
    pub strategy: Strategy,
    pub alpha_deg: f64,
    pub delta0: f64,
    pub mu: f64,
    pub theta: f64,
    pub tau1_steps: usize,
    pub epsilon: f64,
    /// Behaviour when the perception point coincides with the position.
    pub degenerate: DegenerateInteraction,
    /// Optional fixed free visual depth (periodic domains).
    pub depth_cap: Option<f64>,
}

impl Default for PerceptionSpec {
    fn default() -> PerceptionSpec {
        PerceptionSpec {
            strategy: Strategy::S3,
            alpha_deg: 85.0,
            delta0: 0.05,
            mu: 1.0,
            theta: 0.7,
            tau1_steps: 0,
            epsilon: 1e-4,
            degenerate: DegenerateInteraction::OpposeDesired,
            depth_cap: None,
        }
    }
}

impl PerceptionSpec {
    pub fn resolve(&self) -> PerceptionConfig {
        let mut cfg = PerceptionConfig::new(self.strategy);
        cfg.law.delta0 = self.delta0;
        cfg.law.half_angle = self.alpha_deg.to_radians();
        cfg.law.mu = self.mu;
        cfg.law.tau1_steps = self.tau1_steps;
        cfg.theta = self.theta;
        cfg.epsilon = self.epsilon;
        cfg.degenerate = self.degenerate;
        cfg.depth_cap = self.depth_cap;
        cfg
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct InletSpec {
    /// Piecewise-linear (t, density) history applied at inlet cells.
    pub points: Vec<[f64; 2]>,
}

impl Default for InletSpec {
    fn default() -> InletSpec {
        InletSpec { points: vec![[0.0, 0.0]] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSpec {
    pub uniform: f64,
}

impl Default for InitialSpec {
    fn default() -> InitialSpec {
        InitialSpec { uniform: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSpec {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub dump_every: f64,
    pub n_eta: usize,
    pub emptying_threshold: f64,
    /// Low-pass window as a fraction of the run length.
    pub lowpass_window_frac: f64,
    pub max_steps: u64,
}

impl Default for RunSpec {
    fn default() -> RunSpec {
        RunSpec {
            t_end: 1.0,
            cfl: 0.9,
            dt_max: 0.1,
            dump_every: 0.1,
            n_eta: 64,
            emptying_threshold: 0.01,
            lowpass_window_frac: 0.1,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct FluxSegmentSpec {
    pub name: String,
    /// "vertical" (flux in +x1) or "horizontal" (flux in +x2).
    pub axis: String,
    /// Coordinate of the grid line the segment lies on.
    pub position: f64,
    pub from: f64,
    pub to: f64,
}

impl Default for FluxSegmentSpec {
    fn default() -> FluxSegmentSpec {
        FluxSegmentSpec { name: String::new(), axis: "vertical".into(), position: 0.0, from: 0.0, to: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StructureSpec {
    /// "motionless", "imposed" or "two-way" (the built-in force hook is
    /// zero, so two-way reduces to a motionless crowd with oscillator
    /// bookkeeping unless a force model is supplied programmatically).
    pub setup: String,
    pub freq_hz: f64,
    pub damping_ratio: f64,
    pub deck_mass_per_area: f64,
    pub width_m: f64,
    pub ped_mass: f64,
    /// Tabulated mode shape; empty uses the two-span sine default.
    pub mode_shape: Vec<f64>,
    /// Imposed-motion envelope parameters (m/s^2, 1/s).
    pub accel_max: f64,
    pub beta: f64,
    /// Probe positions, nondimensional.
    pub probes: Vec<f64>,
    pub motion: MotionSpec,
}

impl Default for StructureSpec {
    fn default() -> StructureSpec {
        StructureSpec {
            setup: "motionless".into(),
            freq_hz: 0.9,
            damping_ratio: 0.007,
            deck_mass_per_area: 800.0,
            width_m: 5.25,
            ped_mass: 80.0,
            mode_shape: Vec::new(),
            accel_max: 0.25,
            beta: 0.02,
            probes: vec![0.3],
            motion: MotionSpec::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionSpec {
    pub accel_perception: f64,
    pub accel_stop: f64,
    pub delay: f64,
    pub hold: f64,
}

impl Default for MotionSpec {
    fn default() -> MotionSpec {
        MotionSpec { accel_perception: 0.1, accel_stop: 2.1, delay: 1.0, hold: 5.0 }
    }
}

impl MotionSpec {
    pub fn resolve(&self) -> MotionSensitivity {
        MotionSensitivity {
            accel_perception: self.accel_perception,
            accel_stop: self.accel_stop,
            delay: self.delay,
            hold: self.hold,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    pub periodic: bool,
}

impl Default for SolverSpec {
    fn default() -> SolverSpec {
        SolverSpec { periodic: false }
    }
}

/// Gaussian test-density parameters for the perception-test modes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BumpSpec {
    pub rho0: f64,
    pub drho: f64,
    pub ell: f64,
    pub centre: [f64; 2],
}

impl Default for BumpSpec {
    fn default() -> BumpSpec {
        BumpSpec { rho0: 0.25, drho: 0.3, ell: 1.0 / 35.0, centre: [0.4, 0.5] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub mode: Mode,
    pub title: String,
    pub grid: GridSpec,
    pub domain: DomainSpec,
    pub fd: FdSpec,
    pub perception: PerceptionSpec,
    pub inlet: InletSpec,
    pub initial: InitialSpec,
    pub run: RunSpec,
    pub flux_segments: Vec<FluxSegmentSpec>,
    pub structure: StructureSpec,
    pub solver: SolverSpec,
    pub bump: BumpSpec,
}

impl Default for Scenario {
    fn default() -> Scenario {
        Scenario {
            mode: Mode::Custom,
            title: "custom run".into(),
            grid: GridSpec::default(),
            domain: DomainSpec::default(),
            fd: FdSpec::default(),
            perception: PerceptionSpec::default(),
            inlet: InletSpec::default(),
            initial: InitialSpec::default(),
            run: RunSpec::default(),
            flux_segments: Vec::new(),
            structure: StructureSpec::default(),
            solver: SolverSpec::default(),
            bump: BumpSpec::default(),
        }
    }
}

impl Scenario {
    pub fn preset(mode: Mode) -> Scenario {
        match mode {
            Mode::PerceptionTest1d => preset_perception_1d(),
            Mode::PerceptionTest2d => preset_perception_2d(),
            Mode::Footbridge => preset_footbridge(),
            Mode::Station => preset_station(),
            Mode::Custom => Scenario::default(),
        }
    }

    /// Parse a scenario document: the file's `mode` selects the preset, and
    /// every key present in the file overrides the preset value.
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let overlay: toml::Value =
            text.parse().map_err(|e| Error::Parse(format!("TOML: {e}")))?;
        let mode = overlay
            .get("mode")
            .and_then(|m| m.as_str())
            .map(|s| s.parse::<Mode>())
            .transpose()?
            .unwrap_or(Mode::Custom);
        let base = toml::Value::try_from(Scenario::preset(mode))
            .map_err(|e| Error::Parse(format!("preset serialisation: {e}")))?;
        let merged = merge_toml(base, overlay);
        merged.try_into().map_err(|e| Error::Parse(format!("scenario: {e}")))
    }

    /// Apply `key=value` overrides with dotted paths, e.g.
    /// `perception.theta=0.5` or `run.t_end=2`.
    pub fn apply_overrides(self, overrides: &[String]) -> Result<Scenario> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut value =
            toml::Value::try_from(&self).map_err(|e| Error::Parse(format!("{e}")))?;
        for ov in overrides {
            let (path, raw) = ov
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("override '{ov}' is not key=value")))?;
            let leaf = parse_literal(raw);
            set_path(&mut value, path.trim(), leaf)?;
        }
        value.try_into().map_err(|e| Error::Parse(format!("after overrides: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    pub fn grid_handle(&self) -> Grid {
        Grid::new(self.grid.n1, self.grid.n2, self.domain.size[0] / self.grid.n1 as f64)
    }

    /// Build the walking domain (grid, rasterised obstacles, typed
    /// boundary).
    pub fn build_domain(&self) -> Result<WalkingDomain> {
        let grid = self.grid_handle();
        let mut segments = Vec::new();
        for b in &self.domain.boundaries {
            let edge = match b.edge.as_str() {
                "left" => Edge::Left,
                "right" => Edge::Right,
                "bottom" => Edge::Bottom,
                "top" => Edge::Top,
                other => return Err(Error::Parse(format!("unknown edge '{other}'"))),
            };
            let kind = match b.kind.as_str() {
                "wall" => BoundaryKind::Wall,
                "inlet" => BoundaryKind::Inlet,
                "exit" => BoundaryKind::Exit,
                other => return Err(Error::Parse(format!("unknown boundary kind '{other}'"))),
            };
            segments.push(BoundarySegment::new(edge, (b.span[0], b.span[1]), kind, &b.name));
        }
        let mut dom = WalkingDomain::new(grid, segments);
        for o in &self.domain.obstacles {
            dom.add_obstacle_rect(o.rect[0], o.rect[1], o.rect[2], o.rect[3]);
        }
        Ok(dom)
    }

    /// Collect every violated constraint; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let p = &self.perception;
        if !(0.0..=1.0).contains(&p.theta) {
            v.push(format!("perception.theta must lie in [0, 1], got {}", p.theta));
        }
        if !(p.alpha_deg > 0.0 && p.alpha_deg <= 90.0) {
            v.push(format!("perception.alpha_deg must lie in (0, 90], got {}", p.alpha_deg));
        }
        if p.delta0 <= 0.0 {
            v.push(format!("perception.delta0 must be positive, got {}", p.delta0));
        }
        if p.mu < 0.0 {
            v.push(format!("perception.mu must be non-negative, got {}", p.mu));
        }
        if p.epsilon <= 0.0 {
            v.push(format!("perception.epsilon must be positive, got {}", p.epsilon));
        }
        let r = &self.run;
        if !(r.cfl > 0.0 && r.cfl <= 1.0) {
            v.push(format!("run.cfl must lie in (0, 1], got {}", r.cfl));
        }
        if r.t_end <= 0.0 {
            v.push(format!("run.t_end must be positive, got {}", r.t_end));
        }
        if r.dump_every <= 0.0 {
            v.push(format!("run.dump_every must be positive, got {}", r.dump_every));
        }
        if r.dt_max <= 0.0 {
            v.push(format!("run.dt_max must be positive, got {}", r.dt_max));
        }
        if r.n_eta < 2 {
            v.push(format!("run.n_eta must be at least 2, got {}", r.n_eta));
        }
        if !(r.emptying_threshold > 0.0 && r.emptying_threshold < 1.0) {
            v.push(format!(
                "run.emptying_threshold must lie in (0, 1), got {}",
                r.emptying_threshold
            ));
        }
        if self.grid.n1 < 1 || self.grid.n2 < 1 {
            v.push(format!("grid must have at least one cell per axis, got {}x{}", self.grid.n1, self.grid.n2));
        }
        if self.domain.size[0] <= 0.0 || self.domain.size[1] <= 0.0 {
            v.push(format!("domain.size must be positive, got {:?}", self.domain.size));
        }
        if self.domain.length_m <= 0.0 {
            v.push(format!("domain.length_m must be positive, got {}", self.domain.length_m));
        }
        let dx1 = self.domain.size[0] / self.grid.n1 as f64;
        let dx2 = self.domain.size[1] / self.grid.n2 as f64;
        if self.grid.n1 >= 1 && self.grid.n2 >= 1 && (dx1 - dx2).abs() > 1e-9 * dx1.abs().max(dx2.abs()) {
            v.push(format!(
                "cells must be square: size/grid gives dx1 = {dx1}, dx2 = {dx2}"
            ));
        }
        match self.fd.resolve() {
            Err(e) => v.push(e.to_string()),
            Ok(fd) => {
                if fd.v_max <= 0.0 || fd.rho_max <= 0.0 || fd.gamma <= 0.0 {
                    v.push(format!(
                        "fundamental diagram needs positive v_max, rho_max, gamma, got ({}, {}, {})",
                        fd.v_max, fd.rho_max, fd.gamma
                    ));
                }
            }
        }
        let ts = crate::series::TimeSeries::new(
            self.inlet.points.iter().map(|p| (p[0], p[1])).collect(),
        );
        if !ts.is_sorted() {
            v.push("inlet.points must be strictly increasing in time".to_string());
        }
        if self.inlet.points.iter().any(|p| !(0.0..=1.0).contains(&p[1])) {
            v.push("inlet.points densities must lie in [0, 1] (nondimensional)".to_string());
        }
        if !(0.0..=1.0).contains(&self.initial.uniform) {
            v.push(format!("initial.uniform must lie in [0, 1], got {}", self.initial.uniform));
        }
        if !self.solver.periodic {
            match self.build_domain() {
                Err(e) => v.push(e.to_string()),
                Ok(dom) => {
                    if let Err(Error::InvalidScenario(list)) = dom.validate() {
                        v.extend(list);
                    }
                    let size = self.domain.size;
                    for b in &self.domain.boundaries {
                        let max = match b.edge.as_str() {
                            "left" | "right" => size[1],
                            _ => size[0],
                        };
                        if b.span[0] < -1e-12 || b.span[1] > max + 1e-12 {
                            v.push(format!(
                                "boundary segment '{}' span {:?} exceeds the {} edge (length {max})",
                                b.name, b.span, b.edge
                            ));
                        }
                    }
                }
            }
        }
        let dx = dx1;
        for f in &self.flux_segments {
            if f.axis != "vertical" && f.axis != "horizontal" {
                v.push(format!("flux segment '{}': axis must be vertical|horizontal", f.name));
            }
            if f.from > f.to {
                v.push(format!("flux segment '{}': from > to", f.name));
            }
            let max_line = if f.axis == "vertical" { self.domain.size[0] } else { self.domain.size[1] };
            if f.position < 0.0 || f.position > max_line + 0.5 * dx {
                v.push(format!("flux segment '{}': position {} outside the domain", f.name, f.position));
            }
        }
        let s = &self.structure;
        if !["motionless", "imposed", "two-way"].contains(&s.setup.as_str()) {
            v.push(format!("structure.setup must be motionless|imposed|two-way, got '{}'", s.setup));
        }
        if s.freq_hz <= 0.0 {
            v.push(format!("structure.freq_hz must be positive, got {}", s.freq_hz));
        }
        if !(0.0..1.0).contains(&s.damping_ratio) {
            v.push(format!("structure.damping_ratio must lie in [0, 1), got {}", s.damping_ratio));
        }
        if s.deck_mass_per_area <= 0.0 || s.width_m <= 0.0 || s.ped_mass <= 0.0 {
            v.push("structure masses and width must be positive".to_string());
        }
        if !(s.motion.accel_perception > 0.0 && s.motion.accel_perception < s.motion.accel_stop) {
            v.push(format!(
                "structure.motion thresholds need 0 < accel_perception < accel_stop, got ({}, {})",
                s.motion.accel_perception, s.motion.accel_stop
            ));
        }
        if s.probes.iter().any(|x| !(0.0..=1.0).contains(x)) {
            v.push("structure.probes must lie in [0, 1]".to_string());
        }
        if !s.mode_shape.is_empty() && s.mode_shape.len() != self.grid.n1 {
            v.push(format!(
                "structure.mode_shape has {} samples but the grid has {} cells",
                s.mode_shape.len(),
                self.grid.n1
            ));
        }
        v
    }
}

fn merge_toml(base: toml::Value, overlay: toml::Value) -> toml::Value {
    match (base, overlay) {
        (toml::Value::Table(mut b), toml::Value::Table(o)) => {
            for (k, vo) in o {
                match b.remove(&k) {
                    Some(vb) => {
                        b.insert(k, merge_toml(vb, vo));
                    }
                    None => {
                        b.insert(k, vo);
                    }
                }
            }
            toml::Value::Table(b)
        }
        (_, o) => o,
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    let t = raw.trim();
    if t == "true" {
        return toml::Value::Boolean(true);
    }
    if t == "false" {
        return toml::Value::Boolean(false);
    }
    if let Ok(i) = t.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = t.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(t.to_string())
}

fn set_path(value: &mut toml::Value, path: &str, leaf: toml::Value) -> Result<()> {
    let mut node = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("override path '{path}': '{part}' is not a table")))?;
        if k == parts.len() - 1 {
            // keep integer/float distinction consistent with the schema
            let insert = match (table.get(*part), &leaf) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => {
                    toml::Value::Float(*i as f64)
                }
                _ => leaf.clone(),
            };
            table.insert(part.to_string(), insert);
            return Ok(());
        }
        node = table
            .get_mut(*part)
            .ok_or_else(|| Error::Parse(format!("override path '{path}': unknown key '{part}'")))?;
    }
    Ok(())
}

fn preset_perception_1d() -> Scenario {
    Scenario {
        mode: Mode::PerceptionTest1d,
        title: "perceived-density test, 1D Gaussian bump".into(),
        grid: GridSpec { n1: 200, n2: 1 },
        domain: DomainSpec {
            size: [1.0, 0.005],
            length_m: 1.0,
            obstacles: Vec::new(),
            boundaries: vec![
                BoundarySpec { edge: "left".into(), span: [0.0, 0.005], kind: "inlet".into(), name: "in".into() },
                BoundarySpec { edge: "right".into(), span: [0.0, 0.005], kind: "exit".into(), name: "out".into() },
            ],
        },
        fd: FdSpec { preset: "europe-rush".into(), ..Default::default() },
        perception: PerceptionSpec { strategy: Strategy::S1, ..Default::default() },
        ..Default::default()
    }
}

fn preset_perception_2d() -> Scenario {
    Scenario {
        mode: Mode::PerceptionTest2d,
        title: "perceived-density test, 2D Gaussian bump".into(),
        grid: GridSpec { n1: 200, n2: 200 },
        domain: DomainSpec {
            size: [1.0, 1.0],
            length_m: 1.0,
            obstacles: Vec::new(),
            boundaries: vec![
                BoundarySpec { edge: "left".into(), span: [0.0, 1.0], kind: "inlet".into(), name: "in".into() },
                BoundarySpec { edge: "right".into(), span: [0.0, 1.0], kind: "exit".into(), name: "out".into() },
            ],
        },
        fd: FdSpec { preset: "europe-rush".into(), ..Default::default() },
        perception: PerceptionSpec { strategy: Strategy::S1, ..Default::default() },
        ..Default::default()
    }
}

fn preset_footbridge() -> Scenario {
    Scenario {
        mode: Mode::Footbridge,
        title: "two-span footbridge, crowd-structure interaction".into(),
        grid: GridSpec { n1: 200, n2: 1 },
        domain: DomainSpec {
            size: [1.0, 0.005],
            length_m: 180.0,
            obstacles: Vec::new(),
            boundaries: vec![
                BoundarySpec { edge: "left".into(), span: [0.0, 0.005], kind: "inlet".into(), name: "in".into() },
                BoundarySpec { edge: "right".into(), span: [0.0, 0.005], kind: "exit".into(), name: "out".into() },
            ],
        },
        fd: FdSpec { preset: "asia-rush".into(), ..Default::default() },
        perception: PerceptionSpec { strategy: Strategy::S3, ..Default::default() },
        // abrupt evacuation start, steady plateau, smooth tail
        inlet: InletSpec {
            points: vec![
                [0.0, 0.0],
                [0.05, 0.17],
                [2.0, 0.17],
                [2.3, 0.12],
                [2.6, 0.07],
                [2.9, 0.035],
                [3.2, 0.012],
                [3.5, 0.0],
            ],
        },
        run: RunSpec { t_end: 5.0, dump_every: 0.1, ..Default::default() },
        structure: StructureSpec::default(),
        ..Default::default()
    }
}

/// Underground-station map: the published map is not fully dimensioned, so
/// every dimension here is an approximation chosen to preserve its
/// topology. Walking area 25 m x 15 m (nondimensional 1.0 x 0.6, L = 25 m).
/// The platform occupies the top strip; a barrier row at x2 in [0.48, 0.52]
/// leaves three 2 m passages (left, middle, right); three 1 m wide, 4 m
/// long corridors at the right edge lead to the exits. Passage positions
/// make the right passage serve the largest platform share.
fn preset_station() -> Scenario {
    let barrier = |x0: f64, x1: f64| ObstacleSpec { rect: [x0, 0.48, x1, 0.52] };
    let corridor_block = |y0: f64, y1: f64| ObstacleSpec { rect: [0.84, y0, 1.0, y1] };
    Scenario {
        mode: Mode::Station,
        title: "underground station with three corridors (approximate map)".into(),
        grid: GridSpec { n1: 100, n2: 60 },
        domain: DomainSpec {
            size: [1.0, 0.6],
            length_m: 25.0,
            obstacles: vec![
                // pillar/handrail row below the platform; passages at
                // [0.06, 0.14], [0.32, 0.40], [0.64, 0.72]
                barrier(0.0, 0.06),
                barrier(0.14, 0.32),
                barrier(0.40, 0.64),
                barrier(0.72, 1.0),
                // blocks separating the three corridors
                corridor_block(0.0, 0.08),
                corridor_block(0.12, 0.24),
                corridor_block(0.28, 0.40),
                corridor_block(0.44, 0.48),
            ],
            boundaries: vec![
                BoundarySpec { edge: "top".into(), span: [0.0, 1.0], kind: "inlet".into(), name: "platform".into() },
                BoundarySpec { edge: "right".into(), span: [0.40, 0.44], kind: "exit".into(), name: "upper".into() },
                BoundarySpec { edge: "right".into(), span: [0.24, 0.28], kind: "exit".into(), name: "middle".into() },
                BoundarySpec { edge: "right".into(), span: [0.08, 0.12], kind: "exit".into(), name: "lower".into() },
            ],
        },
        fd: FdSpec { preset: "asia-rush".into(), ..Default::default() },
        perception: PerceptionSpec { strategy: Strategy::S2, ..Default::default() },
        // train arrival and restart
        inlet: InletSpec { points: vec![[0.0, 0.0], [0.05, 0.02], [0.5, 0.02], [0.6, 0.0]] },
        run: RunSpec { t_end: 6.0, dump_every: 0.25, ..Default::default() },
        flux_segments: vec![
            FluxSegmentSpec { name: "upper".into(), axis: "vertical".into(), position: 0.84, from: 0.40, to: 0.44 },
            FluxSegmentSpec { name: "middle".into(), axis: "vertical".into(), position: 0.84, from: 0.24, to: 0.28 },
            FluxSegmentSpec { name: "lower".into(), axis: "vertical".into(), position: 0.84, from: 0.08, to: 0.12 },
        ],
        ..Default::default()
    }
}
