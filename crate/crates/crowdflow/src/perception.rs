//! Sensory regions and the four localisation strategies that turn a true
//! density field into perceived density, perception points and interaction
//! directions.
//!
//! `build_region` and the `strategy_*` functions are the cell-level
//! reference operations; `perceive_2d`/`perceive_1d` are the full-field
//! drivers used by the solvers. The drivers take shortcuts (endpoint lookup
//! for s1, skipping regions that contain no crowd) that are output-equivalent
//! to the reference path.

use crate::error::{Error, Result};
use crate::fundamental::{distance_weight_unchecked, SensoryLaw};
use crate::geometry::{ScalarField, VectorField, WalkingDomain};
use serde::{Deserialize, Serialize};

/// Localisation strategy. `Local` is the classical local model
/// (`rho_p = rho`), kept for the comparisons the applications need.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    S1,
    S2,
    S3,
    S4,
    Local,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            "s3" => Ok(Strategy::S3),
            "s4" => Ok(Strategy::S4),
            "local" => Ok(Strategy::Local),
            other => Err(Error::Parse(format!(
                "unknown strategy '{other}' (expected s1|s2|s3|s4|local)"
            ))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::S1 => "s1",
            Strategy::S2 => "s2",
            Strategy::S3 => "s3",
            Strategy::S4 => "s4",
            Strategy::Local => "local",
        };
        f.write_str(s)
    }
}

/// Behaviour of the interaction direction when the perception point
/// coincides with the pedestrian position (within half a cell).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateInteraction {
    /// e_i = -e_d: maximal avoidance of the own cell (default).
    OpposeDesired,
    /// e_i = e_d: no interaction.
    FollowDesired,
}

/// Everything the perception step needs besides the fields themselves.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PerceptionConfig {
    pub strategy: Strategy,
    pub law: SensoryLaw,
    /// Attitude weight in the walking direction, [0, 1].
    pub theta: f64,
    /// Density-difference threshold of the discrete convection velocity.
    pub epsilon: f64,
    pub degenerate: DegenerateInteraction,
    /// Override for the free visual depth (used by periodic 1D domains,
    /// where a ray never exits).
    pub depth_cap: Option<f64>,
}

impl PerceptionConfig {
    pub fn new(strategy: Strategy) -> PerceptionConfig {
        PerceptionConfig {
            strategy,
            law: SensoryLaw::default_visual(),
            theta: 0.7,
            epsilon: 1e-4,
            degenerate: DegenerateInteraction::OpposeDesired,
            depth_cap: None,
        }
    }
}

/// One cell of a sensory region.
#[derive(Clone, Copy, Debug)]
pub struct RegionMember {
    pub cell: (usize, usize),
    /// Offset of the member cell centre from the region centre.
    pub offset: [f64; 2],
    pub distance: f64,
    /// Angle to the desired direction; 0 for the centre cell.
    pub angle: f64,
    /// Lateral fading weight G(angle); identically 1 on 1D grids.
    pub weight: f64,
}

/// Discrete sensory region: the cells within depth `delta` of the centre and
/// inside the vision cone around the desired direction. The centre cell is
/// always a member; obstacle cells and cells outside the domain never are.
#[derive(Clone, Debug)]
pub struct SensoryRegion {
    pub centre: (usize, usize),
    pub centre_point: [f64; 2],
    pub delta: f64,
    pub members: Vec<RegionMember>,
}

/// Cone-and-ball membership test shared by region construction and the
/// field drivers (squared form; `cos_half >= 0`).
#[inline]
fn in_cone(dx: f64, dy: f64, delta2: f64, ex: f64, ey: f64, cos2_half: f64) -> bool {
    let r2 = dx * dx + dy * dy;
    if r2 > delta2 {
        return false;
    }
    let dot = dx * ex + dy * ey;
    dot >= 0.0 && dot * dot >= r2 * cos2_half
}

/// Row range of cell indices whose centres can lie within `half_w` of `c`
/// (conservatively widened by one cell).
#[inline]
fn index_range(c: f64, half_w: f64, dx: f64, n: usize) -> (usize, usize) {
    let lo = ((c - half_w) / dx - 0.5).floor() as isize - 1;
    let hi = ((c + half_w) / dx - 0.5).ceil() as isize + 1;
    (lo.max(0) as usize, (hi.min(n as isize - 1)).max(0) as usize)
}

/// Build the discrete sensory region of one cell.
pub fn build_region(
    domain: &WalkingDomain,
    cell: (usize, usize),
    e_d: [f64; 2],
    delta: f64,
    law: &SensoryLaw,
) -> Result<SensoryRegion> {
    let (ci, cj) = cell;
    if domain.is_obstacle(ci, cj) {
        return Err(Error::InsideObstacle(ci, cj));
    }
    let g = domain.grid;
    let centre = g.cell_centre(ci, cj);
    let mut members = Vec::new();
    if g.is_1d() {
        // forward interval [x, x + delta], G == 1 (formally zero half-angle)
        for i in ci..g.n1 {
            let off = g.cell_centre(i, 0)[0] - centre[0];
            if off > delta {
                break;
            }
            if domain.is_obstacle(i, 0) {
                continue;
            }
            members.push(RegionMember {
                cell: (i, 0),
                offset: [off, 0.0],
                distance: off,
                angle: 0.0,
                weight: 1.0,
            });
        }
    } else {
        let cos_half = law.half_angle.cos();
        let cos2 = cos_half * cos_half;
        let d2 = delta * delta;
        let (j_lo, j_hi) = index_range(centre[1], delta, g.dx, g.n2);
        for j in j_lo..=j_hi {
            let dy = g.cell_centre(0, j)[1] - centre[1];
            let rem = d2 - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let (i_lo, i_hi) = index_range(centre[0], rem.sqrt(), g.dx, g.n1);
            for i in i_lo..=i_hi {
                if domain.is_obstacle(i, j) {
                    continue;
                }
                if i == ci && j == cj {
                    members.push(RegionMember {
                        cell,
                        offset: [0.0, 0.0],
                        distance: 0.0,
                        angle: 0.0,
                        weight: 1.0,
                    });
                    continue;
                }
                let dx = g.cell_centre(i, 0)[0] - centre[0];
                if !in_cone(dx, dy, d2, e_d[0], e_d[1], cos2) {
                    continue;
                }
                let r = (dx * dx + dy * dy).sqrt();
                let alpha = ((dx * e_d[0] + dy * e_d[1]) / r).clamp(-1.0, 1.0).acos();
                members.push(RegionMember {
                    cell: (i, j),
                    offset: [dx, dy],
                    distance: r,
                    angle: alpha,
                    weight: law.lateral_fading(alpha),
                });
            }
        }
    }
    Ok(SensoryRegion { centre: cell, centre_point: centre, delta, members })
}

/// Perception point and perceived density returned by a strategy.
#[derive(Clone, Copy, Debug)]
pub struct Percept {
    pub x_p: [f64; 2],
    pub rho_p: f64,
}

/// s1, resolute: perceive at the far boundary of the sensory region along
/// the desired direction. The perception point is exactly `x + delta e_d`;
/// the density is read at the member cell nearest to it (ties by lowest
/// linear index).
pub fn strategy_s1(region: &SensoryRegion, rho: &ScalarField, e_d: [f64; 2]) -> Percept {
    let c = region.centre_point;
    let target = [c[0] + region.delta * e_d[0], c[1] + region.delta * e_d[1]];
    if region.members.is_empty() {
        return Percept { x_p: c, rho_p: rho.at(region.centre.0, region.centre.1) };
    }
    let g = rho.grid;
    let mut best = (f64::INFINITY, usize::MAX, 0.0);
    for m in &region.members {
        let p = g.cell_centre(m.cell.0, m.cell.1);
        let d2 = (p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2);
        let lin = g.idx(m.cell.0, m.cell.1);
        if d2 < best.0 || (d2 == best.0 && lin < best.1) {
            best = (d2, lin, rho.values[lin]);
        }
    }
    Percept { x_p: target, rho_p: best.2 }
}

/// s2, anxious: perceive at the point of maximal density in the region;
/// ties go to the member closest to the centre, then to the lowest linear
/// cell index.
pub fn strategy_s2(region: &SensoryRegion, rho: &ScalarField) -> Percept {
    if region.members.is_empty() {
        return Percept {
            x_p: region.centre_point,
            rho_p: rho.at(region.centre.0, region.centre.1),
        };
    }
    let g = rho.grid;
    let mut best: Option<(f64, f64, usize, [f64; 2])> = None;
    for m in &region.members {
        let lin = g.idx(m.cell.0, m.cell.1);
        let val = rho.values[lin];
        let better = match &best {
            None => true,
            Some((bv, bd, bl, _)) => {
                val > *bv
                    || (val == *bv && (m.distance < *bd || (m.distance == *bd && lin < *bl)))
            }
        };
        if better {
            best = Some((val, m.distance, lin, g.cell_centre(m.cell.0, m.cell.1)));
        }
    }
    let (val, _, _, point) = best.unwrap();
    Percept { x_p: point, rho_p: val }
}

/// s3, self-conscious: the s2 perception point, with the perceived density a
/// distance-weighted average of the local and the maximal density.
pub fn strategy_s3(region: &SensoryRegion, rho: &ScalarField) -> Percept {
    let p2 = strategy_s2(region, rho);
    let c = region.centre_point;
    let r_p = ((p2.x_p[0] - c[0]).powi(2) + (p2.x_p[1] - c[1]).powi(2)).sqrt();
    let g = distance_weight_unchecked(region.delta, r_p);
    let local = rho.at(region.centre.0, region.centre.1);
    Percept { x_p: p2.x_p, rho_p: (1.0 - g) * local + g * p2.rho_p }
}

/// s4, curious: perceive the fading-weighted average of the crowd in the
/// whole region; the perception point is its weighted centre of mass. With
/// an empty crowd the density is 0 and the centre point is returned (the
/// interaction direction then falls back per configuration).
pub fn strategy_s4(region: &SensoryRegion, rho: &ScalarField) -> Percept {
    if region.members.is_empty() {
        return Percept {
            x_p: region.centre_point,
            rho_p: rho.at(region.centre.0, region.centre.1),
        };
    }
    let g = rho.grid;
    let (mut m_sum, mut a_sum, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for m in &region.members {
        let val = rho.at(m.cell.0, m.cell.1);
        a_sum += m.weight;
        if val > 0.0 {
            let w = val * m.weight;
            m_sum += w;
            let p = g.cell_centre(m.cell.0, m.cell.1);
            sx += p[0] * w;
            sy += p[1] * w;
        }
    }
    if m_sum > 0.0 {
        Percept { x_p: [sx / m_sum, sy / m_sum], rho_p: m_sum / a_sum }
    } else {
        Percept { x_p: region.centre_point, rho_p: 0.0 }
    }
}

/// Interaction direction: steer away from the perception point. Offsets
/// below half a cell are degenerate and resolved by configuration.
pub fn interaction_direction(
    offset: [f64; 2],
    e_d: [f64; 2],
    dx: f64,
    rule: DegenerateInteraction,
) -> [f64; 2] {
    let n = (offset[0] * offset[0] + offset[1] * offset[1]).sqrt();
    if n < 0.5 * dx {
        return match rule {
            DegenerateInteraction::OpposeDesired => [-e_d[0], -e_d[1]],
            DegenerateInteraction::FollowDesired => e_d,
        };
    }
    [-offset[0] / n, -offset[1] / n]
}

/// Walking direction: normalized combination of desired and interaction
/// directions. Near-cancellation (only possible at theta = 0.5) falls back
/// to the desired direction.
pub fn walking_direction(e_d: [f64; 2], e_i: [f64; 2], theta: f64) -> [f64; 2] {
    let wx = theta * e_d[0] + (1.0 - theta) * e_i[0];
    let wy = theta * e_d[1] + (1.0 - theta) * e_i[1];
    let n = (wx * wx + wy * wy).sqrt();
    if n < 1e-12 {
        e_d
    } else {
        [wx / n, wy / n]
    }
}

/// Sensory depth per cell from the free visual depth and the delayed speed.
pub fn depth_field(
    delta_s: &[f64],
    v_delayed: &[f64],
    law: &SensoryLaw,
    v_max: f64,
    depth_cap: Option<f64>,
) -> Vec<f64> {
    delta_s
        .iter()
        .zip(v_delayed)
        .map(|(&ds, &v)| law.depth(depth_cap.unwrap_or(ds), v, v_max))
        .collect()
}

/// Per-cell output of a perception sweep.
#[derive(Clone, Debug)]
pub struct PerceptionOutput {
    pub rho_p: Vec<f64>,
    pub x_p: Vec<[f64; 2]>,
    pub e_i: Vec<[f64; 2]>,
}

/// Row-wise prefix counts of cells with positive density, for the
/// empty-region shortcut.
struct Positivity {
    prefix: Vec<u32>,
    n1: usize,
    bbox: Option<(usize, usize, usize, usize)>, // (i_lo, i_hi, j_lo, j_hi)
}

impl Positivity {
    fn build(rho: &ScalarField) -> Positivity {
        let (n1, n2) = (rho.grid.n1, rho.grid.n2);
        let mut prefix = vec![0u32; (n1 + 1) * n2];
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for j in 0..n2 {
            let row = &rho.values[j * n1..(j + 1) * n1];
            let base = j * (n1 + 1);
            let mut acc = 0u32;
            for (i, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    acc += 1;
                    bbox = Some(match bbox {
                        None => (i, i, j, j),
                        Some((a, b, c, d)) => (a.min(i), b.max(i), c.min(j), d.max(j)),
                    });
                }
                prefix[base + i + 1] = acc;
            }
        }
        Positivity { prefix, n1, bbox }
    }

    #[inline]
    fn any_in_row(&self, j: usize, i_lo: usize, i_hi: usize) -> bool {
        let base = j * (self.n1 + 1);
        self.prefix[base + i_hi + 1] > self.prefix[base + i_lo]
    }
}

/// Angles of relative cell offsets for a spatially uniform desired
/// direction; avoids one `acos` per member per cell in strategy s4.
struct OffsetAngleTable {
    half: isize,
    stride: usize,
    angle: Vec<f64>,
}

impl OffsetAngleTable {
    fn build(e_d: [f64; 2], dx: f64, max_delta: f64) -> OffsetAngleTable {
        let half = (max_delta / dx).ceil() as isize + 2;
        let stride = (2 * half + 1) as usize;
        let mut angle = vec![0.0; stride * stride];
        for dj in -half..=half {
            for di in -half..=half {
                let (ox, oy) = (di as f64 * dx, dj as f64 * dx);
                let r = (ox * ox + oy * oy).sqrt();
                let a = if r == 0.0 {
                    0.0
                } else {
                    ((ox * e_d[0] + oy * e_d[1]) / r).clamp(-1.0, 1.0).acos()
                };
                angle[(dj + half) as usize * stride + (di + half) as usize] = a;
            }
        }
        OffsetAngleTable { half, stride, angle }
    }

    #[inline]
    fn get(&self, di: isize, dj: isize) -> f64 {
        self.angle[(dj + self.half) as usize * self.stride + (di + self.half) as usize]
    }
}

/// Full-field 2D perception sweep.
///
/// `delta` is the per-cell sensory depth (already combining the free visual
/// depth with the delayed speed). Obstacle cells get zero density, the
/// centre point and a degenerate interaction direction.
pub fn perceive_2d(
    domain: &WalkingDomain,
    rho: &ScalarField,
    e_d: &VectorField,
    delta: &[f64],
    cfg: &PerceptionConfig,
) -> PerceptionOutput {
    let g = domain.grid;
    let n = g.cells();
    assert_eq!(rho.values.len(), n);
    assert_eq!(e_d.values.len(), n);
    assert_eq!(delta.len(), n);

    let mut out = PerceptionOutput {
        rho_p: vec![0.0; n],
        x_p: vec![[0.0, 0.0]; n],
        e_i: vec![[0.0, 0.0]; n],
    };

    let pos = match cfg.strategy {
        Strategy::S2 | Strategy::S3 | Strategy::S4 => Some(Positivity::build(rho)),
        _ => None,
    };
    // offset-angle table only pays off when e_d is uniform (bitwise)
    let angle_table = if cfg.strategy == Strategy::S4 {
        let first = e_d.values[0];
        let uniform = e_d.values.iter().all(|v| v[0] == first[0] && v[1] == first[1]);
        if uniform {
            let dmax = delta.iter().cloned().fold(0.0f64, f64::max);
            Some(OffsetAngleTable::build(first, g.dx, dmax))
        } else {
            None
        }
    } else {
        None
    };

    let cos_half = cfg.law.half_angle.cos();
    let cos2 = cos_half * cos_half;

    for cj in 0..g.n2 {
        for ci in 0..g.n1 {
            let k = g.idx(ci, cj);
            if domain.is_obstacle(ci, cj) {
                let ed = e_d.values[k];
                out.x_p[k] = g.cell_centre(ci, cj);
                out.e_i[k] = interaction_direction([0.0, 0.0], ed, g.dx, cfg.degenerate);
                continue;
            }
            let centre = g.cell_centre(ci, cj);
            let ed = e_d.values[k];
            let dl = delta[k];

            let (x_p, rho_p, ei_offset): ([f64; 2], f64, [f64; 2]) = match cfg.strategy {
                Strategy::Local => (centre, rho.values[k], [0.0, 0.0]),
                Strategy::S1 => {
                    let target = [centre[0] + dl * ed[0], centre[1] + dl * ed[1]];
                    let rp = s1_lookup(domain, rho, (ci, cj), centre, target, ed, dl, cos2);
                    (target, rp, [dl * ed[0], dl * ed[1]])
                }
                Strategy::S2 | Strategy::S3 | Strategy::S4 => {
                    let p = pos.as_ref().unwrap();
                    if region_has_no_crowd(p, g.n1, g.n2, centre, dl, g.dx) {
                        (centre, 0.0, [0.0, 0.0])
                    } else {
                        match cfg.strategy {
                            Strategy::S4 => {
                                let (xp, rp) = scan_s4(
                                    domain, rho, (ci, cj), centre, ed, dl, cos2, cfg,
                                    angle_table.as_ref(),
                                );
                                (xp, rp, [xp[0] - centre[0], xp[1] - centre[1]])
                            }
                            _ => {
                                let (xp, vmax, r) =
                                    scan_argmax(domain, rho, (ci, cj), centre, ed, dl, cos2);
                                let rho_p = if cfg.strategy == Strategy::S2 {
                                    vmax
                                } else {
                                    let gw = distance_weight_unchecked(dl, r);
                                    (1.0 - gw) * rho.values[k] + gw * vmax
                                };
                                (xp, rho_p, [xp[0] - centre[0], xp[1] - centre[1]])
                            }
                        }
                    }
                }
            };

            out.rho_p[k] = rho_p;
            out.x_p[k] = x_p;
            out.e_i[k] = interaction_direction(ei_offset, ed, g.dx, cfg.degenerate);
        }
    }
    out
}

/// True when no cell of the scan bounding box carries positive density, in
/// which case every strategy yields `rho_p = 0` with the centre as the
/// perception point.
#[inline]
fn region_has_no_crowd(
    pos: &Positivity,
    n1: usize,
    n2: usize,
    centre: [f64; 2],
    delta: f64,
    dx: f64,
) -> bool {
    let Some((bi_lo, bi_hi, bj_lo, bj_hi)) = pos.bbox else {
        return true;
    };
    let (i_lo, i_hi) = index_range(centre[0], delta, dx, n1);
    let (j_lo, j_hi) = index_range(centre[1], delta, dx, n2);
    if i_hi < bi_lo || i_lo > bi_hi || j_hi < bj_lo || j_lo > bj_hi {
        return true;
    }
    for j in j_lo.max(bj_lo)..=j_hi.min(bj_hi) {
        if pos.any_in_row(j, i_lo, i_hi) {
            return false;
        }
    }
    true
}

/// s1 density lookup: the member cell nearest to the endpoint, found by an
/// outward ring search around the endpoint.
#[allow(clippy::too_many_arguments)]
fn s1_lookup(
    domain: &WalkingDomain,
    rho: &ScalarField,
    centre_cell: (usize, usize),
    centre: [f64; 2],
    target: [f64; 2],
    ed: [f64; 2],
    delta: f64,
    cos2: f64,
) -> f64 {
    let g = domain.grid;
    let [sx, sy] = g.size();
    let eps = g.dx * 1e-9;
    let clamped = [target[0].clamp(eps, sx - eps), target[1].clamp(eps, sy - eps)];
    let (c0i, c0j) = g.cell_of(clamped).expect("clamped point inside domain");
    let anchor = g.cell_centre(c0i, c0j);
    let off_anchor =
        ((target[0] - anchor[0]).powi(2) + (target[1] - anchor[1]).powi(2)).sqrt();
    let d2cap = delta * delta;

    let mut best: Option<(f64, usize, f64)> = None; // (dist2 to target, lin idx, rho)
    let max_ring = g.n1.max(g.n2) as isize;
    for ring in 0..=max_ring {
        if let Some((bd2, _, _)) = best {
            // cells on this ring are at least (ring*dx - |target-anchor|) away
            let reach = ring as f64 * g.dx - off_anchor;
            if reach > 0.0 && reach * reach > bd2 {
                break;
            }
        }
        let lo_i = c0i as isize - ring;
        let hi_i = c0i as isize + ring;
        let lo_j = c0j as isize - ring;
        let hi_j = c0j as isize + ring;
        let visit = |ii: isize, jj: isize, best: &mut Option<(f64, usize, f64)>| {
            if ii < 0 || jj < 0 || ii >= g.n1 as isize || jj >= g.n2 as isize {
                return;
            }
            let (i, j) = (ii as usize, jj as usize);
            if domain.is_obstacle(i, j) {
                return;
            }
            let is_member = if (i, j) == centre_cell {
                true
            } else {
                let p = g.cell_centre(i, j);
                in_cone(p[0] - centre[0], p[1] - centre[1], d2cap, ed[0], ed[1], cos2)
            };
            if !is_member {
                return;
            }
            let p = g.cell_centre(i, j);
            let d2 = (p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2);
            let lin = g.idx(i, j);
            let better = match best {
                None => true,
                Some((bd2, bl, _)) => d2 < *bd2 || (d2 == *bd2 && lin < *bl),
            };
            if better {
                *best = Some((d2, lin, rho.values[lin]));
            }
        };
        if ring == 0 {
            visit(lo_i, lo_j, &mut best);
        } else {
            for ii in lo_i..=hi_i {
                visit(ii, lo_j, &mut best);
                visit(ii, hi_j, &mut best);
            }
            for jj in (lo_j + 1)..hi_j {
                visit(lo_i, jj, &mut best);
                visit(hi_i, jj, &mut best);
            }
        }
    }
    match best {
        Some((_, _, v)) => v,
        // region effectively empty: fall back to the local density
        None => rho.at(centre_cell.0, centre_cell.1),
    }
}

/// Max-density scan over the region (strategies s2/s3). Returns the
/// perception point, its density and the distance to the centre.
fn scan_argmax(
    domain: &WalkingDomain,
    rho: &ScalarField,
    centre_cell: (usize, usize),
    centre: [f64; 2],
    ed: [f64; 2],
    delta: f64,
    cos2: f64,
) -> ([f64; 2], f64, f64) {
    let g = domain.grid;
    let d2 = delta * delta;
    let centre_lin = g.idx(centre_cell.0, centre_cell.1);
    // centre cell is always a member at distance zero
    let mut best = (rho.values[centre_lin], 0.0f64, centre_lin, centre);
    let (j_lo, j_hi) = index_range(centre[1], delta, g.dx, g.n2);
    for j in j_lo..=j_hi {
        let y = (j as f64 + 0.5) * g.dx;
        let dy = y - centre[1];
        let rem = d2 - dy * dy;
        if rem < 0.0 {
            continue;
        }
        let (i_lo, i_hi) = index_range(centre[0], rem.sqrt(), g.dx, g.n1);
        let row = j * g.n1;
        for i in i_lo..=i_hi {
            if i == centre_cell.0 && j == centre_cell.1 {
                continue;
            }
            if domain.is_obstacle(i, j) {
                continue;
            }
            let x = (i as f64 + 0.5) * g.dx;
            let dx = x - centre[0];
            if !in_cone(dx, dy, d2, ed[0], ed[1], cos2) {
                continue;
            }
            let lin = row + i;
            let val = rho.values[lin];
            let r2 = dx * dx + dy * dy;
            let better = val > best.0
                || (val == best.0
                    && (r2 < best.1 * best.1
                        || (r2 == best.1 * best.1 && lin < best.2)));
            if better {
                best = (val, r2.sqrt(), lin, [x, y]);
            }
        }
    }
    (best.3, best.0, best.1)
}

/// Weighted-average scan over the region (strategy s4).
#[allow(clippy::too_many_arguments)]
fn scan_s4(
    domain: &WalkingDomain,
    rho: &ScalarField,
    centre_cell: (usize, usize),
    centre: [f64; 2],
    ed: [f64; 2],
    delta: f64,
    cos2: f64,
    cfg: &PerceptionConfig,
    table: Option<&OffsetAngleTable>,
) -> ([f64; 2], f64) {
    let g = domain.grid;
    let d2 = delta * delta;
    let (mut m_sum, mut a_sum, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
    let (j_lo, j_hi) = index_range(centre[1], delta, g.dx, g.n2);
    for j in j_lo..=j_hi {
        let y = (j as f64 + 0.5) * g.dx;
        let dy = y - centre[1];
        let rem = d2 - dy * dy;
        if rem < 0.0 {
            continue;
        }
        let (i_lo, i_hi) = index_range(centre[0], rem.sqrt(), g.dx, g.n1);
        let row = j * g.n1;
        for i in i_lo..=i_hi {
            if domain.is_obstacle(i, j) {
                continue;
            }
            let x = (i as f64 + 0.5) * g.dx;
            let dx = x - centre[0];
            let own = i == centre_cell.0 && j == centre_cell.1;
            if !own && !in_cone(dx, dy, d2, ed[0], ed[1], cos2) {
                continue;
            }
            let alpha = if own {
                0.0
            } else if let Some(t) = table {
                t.get(i as isize - centre_cell.0 as isize, j as isize - centre_cell.1 as isize)
            } else {
                let r = (dx * dx + dy * dy).sqrt();
                ((dx * ed[0] + dy * ed[1]) / r).clamp(-1.0, 1.0).acos()
            };
            let w = cfg.law.lateral_fading(alpha);
            a_sum += w;
            let val = rho.values[row + i];
            if val > 0.0 {
                let vw = val * w;
                m_sum += vw;
                sx += x * vw;
                sy += y * vw;
            }
        }
    }
    if m_sum > 0.0 {
        ([sx / m_sum, sy / m_sum], m_sum / a_sum)
    } else {
        (centre, 0.0)
    }
}

/// Full-field 1D perception sweep. The sensory region of cell `j` is the
/// forward window of cells whose centres lie in `[x_j, x_j + delta_j]`
/// (wrapping when periodic).
pub fn perceive_1d(
    domain: &WalkingDomain,
    rho: &[f64],
    delta: &[f64],
    strategy: Strategy,
    periodic: bool,
) -> (Vec<f64>, Vec<f64>) {
    let g = domain.grid;
    let n = g.n1;
    assert!(g.is_1d());
    assert_eq!(rho.len(), n);
    let mut rho_p = vec![0.0; n];
    let mut x_p = vec![0.0; n];

    for j in 0..n {
        let xj = g.cell_centre(j, 0)[0];
        if domain.is_obstacle(j, 0) {
            x_p[j] = xj;
            continue;
        }
        if strategy == Strategy::Local {
            rho_p[j] = rho[j];
            x_p[j] = xj;
            continue;
        }
        let dl = delta[j];
        // collect the forward window as (coordinate, cell) pairs
        let window = window_1d(domain, j, dl, periodic);
        match strategy {
            Strategy::S1 => {
                let target = xj + dl;
                let mut best = (f64::INFINITY, 0usize);
                for &(xk, k) in &window {
                    let d = (xk - target).abs();
                    if d < best.0 {
                        best = (d, k);
                    }
                }
                rho_p[j] = if window.is_empty() { rho[j] } else { rho[best.1] };
                x_p[j] = target;
            }
            Strategy::S2 | Strategy::S3 => {
                let mut best: Option<(f64, f64)> = None; // (value, coordinate)
                for &(xk, k) in &window {
                    // ascending distance: strict improvement keeps the nearest
                    if best.map_or(true, |(bv, _)| rho[k] > bv) {
                        best = Some((rho[k], xk));
                    }
                }
                let (vmax, xmax) = best.unwrap_or((rho[j], xj));
                if strategy == Strategy::S2 {
                    rho_p[j] = vmax;
                } else {
                    let gw = distance_weight_unchecked(dl, xmax - xj);
                    rho_p[j] = (1.0 - gw) * rho[j] + gw * vmax;
                }
                x_p[j] = xmax;
            }
            Strategy::S4 => {
                // G == 1 in one dimension: plain average and centre of mass
                let (mut m_sum, mut a_sum, mut sx) = (0.0, 0.0, 0.0);
                for &(xk, k) in &window {
                    a_sum += 1.0;
                    if rho[k] > 0.0 {
                        m_sum += rho[k];
                        sx += xk * rho[k];
                    }
                }
                if a_sum > 0.0 {
                    rho_p[j] = m_sum / a_sum;
                }
                x_p[j] = if m_sum > 0.0 { sx / m_sum } else { xj };
            }
            Strategy::Local => unreachable!(),
        }
    }
    (rho_p, x_p)
}

/// Forward 1D window of `(coordinate, cell)` pairs; coordinates are
/// unwrapped so they increase monotonically even across the periodic seam.
fn window_1d(
    domain: &WalkingDomain,
    j: usize,
    delta: f64,
    periodic: bool,
) -> Vec<(f64, usize)> {
    let g = domain.grid;
    let n = g.n1;
    let xj = g.cell_centre(j, 0)[0];
    let mut out = Vec::new();
    if periodic {
        for m in 0..n {
            let off = m as f64 * g.dx;
            if off > delta {
                break;
            }
            let k = (j + m) % n;
            if !domain.is_obstacle(k, 0) {
                out.push((xj + off, k));
            }
        }
    } else {
        for k in j..n {
            let xk = g.cell_centre(k, 0)[0];
            if xk - xj > delta {
                break;
            }
            if !domain.is_obstacle(k, 0) {
                out.push((xk, k));
            }
        }
    }
    out
}
