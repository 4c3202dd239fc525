//! Uniform Cartesian grids, walking domains with obstacles and typed
//! boundaries, and the geometric queries the perception model needs.
//!
//! All geometry is immutable after construction; queries are pure.

use crate::error::{Error, Result};

/// Uniform Cartesian grid of square cells. `n2 == 1` means 1D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, dx: f64) -> Grid {
        assert!(n1 >= 1 && n2 >= 1, "grid needs at least one cell per axis");
        assert!(dx > 0.0, "cell spacing must be positive");
        Grid { n1, n2, dx }
    }

    pub fn new_1d(n: usize, dx: f64) -> Grid {
        Grid::new(n, 1, dx)
    }

    pub fn is_1d(&self) -> bool {
        self.n2 == 1
    }

    pub fn cells(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2);
        j * self.n1 + i
    }

    #[inline]
    pub fn cell_centre(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dx]
    }

    pub fn size(&self) -> [f64; 2] {
        [self.n1 as f64 * self.dx, self.n2 as f64 * self.dx]
    }

    pub fn diagonal(&self) -> f64 {
        let [sx, sy] = self.size();
        (sx * sx + sy * sy).sqrt()
    }

    /// Cell containing a point, or `None` outside the domain rectangle.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let [sx, sy] = self.size();
        if p[0] < 0.0 || p[0] >= sx || p[1] < 0.0 || p[1] >= sy {
            return None;
        }
        let i = ((p[0] / self.dx) as usize).min(self.n1 - 1);
        let j = ((p[1] / self.dx) as usize).min(self.n2 - 1);
        Some((i, j))
    }
}

/// Cell-centred scalar samples on a grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> ScalarField {
        ScalarField { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn constant(grid: Grid, c: f64) -> ScalarField {
        ScalarField { grid, values: vec![c; grid.cells()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> ScalarField {
        assert_eq!(values.len(), grid.cells());
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }
}

/// Cell-centred 2-vector samples on a grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: Grid,
    pub values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> VectorField {
        VectorField { grid, values: vec![[0.0, 0.0]; grid.cells()] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[self.grid.idx(i, j)]
    }
}

/// Outer edge of the domain rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    /// Length of the edge in cells.
    fn cell_count(&self, grid: &Grid) -> usize {
        match self {
            Edge::Left | Edge::Right => grid.n2,
            Edge::Bottom | Edge::Top => grid.n1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Wall,
    Inlet,
    Exit,
}

/// Interval of an outer edge with a prescribed kind. `span` is measured along
/// the edge coordinate (x2 for left/right edges, x1 for bottom/top).
#[derive(Clone, Debug)]
pub struct BoundarySegment {
    pub edge: Edge,
    pub span: (f64, f64),
    pub kind: BoundaryKind,
    pub name: String,
}

impl BoundarySegment {
    pub fn new(edge: Edge, span: (f64, f64), kind: BoundaryKind, name: &str) -> BoundarySegment {
        BoundarySegment { edge, span, kind, name: name.to_string() }
    }
}

/// What a given outer-edge face of a boundary cell is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Wall,
    Inlet,
    /// Index into `WalkingDomain::exit_segments()`.
    Exit(usize),
}

/// Walking area: grid, rasterised obstacles and typed outer boundary.
/// Edges not covered by any segment are walls. Obstacle faces are implicit
/// walls and never carry boundary segments.
#[derive(Clone, Debug)]
pub struct WalkingDomain {
    pub grid: Grid,
    obstacle: Vec<bool>,
    pub segments: Vec<BoundarySegment>,
}

impl WalkingDomain {
    pub fn new(grid: Grid, segments: Vec<BoundarySegment>) -> WalkingDomain {
        WalkingDomain { grid, obstacle: vec![false; grid.cells()], segments }
    }

    /// Rasterise an axis-aligned rectangle `[x0, x1] x [y0, y1]` into obstacle
    /// cells. A cell belongs to the obstacle when its centre lies inside.
    pub fn add_obstacle_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        for j in 0..self.grid.n2 {
            for i in 0..self.grid.n1 {
                let c = self.grid.cell_centre(i, j);
                if c[0] > x0 && c[0] < x1 && c[1] > y0 && c[1] < y1 {
                    let k = self.grid.idx(i, j);
                    self.obstacle[k] = true;
                }
            }
        }
    }

    #[inline]
    pub fn is_obstacle(&self, i: usize, j: usize) -> bool {
        self.obstacle[self.grid.idx(i, j)]
    }

    pub fn obstacle_mask(&self) -> &[bool] {
        &self.obstacle
    }

    /// True when the point lies outside the domain rectangle or inside an
    /// obstacle cell.
    pub fn blocked_point(&self, p: [f64; 2]) -> bool {
        match self.grid.cell_of(p) {
            None => true,
            Some((i, j)) => self.is_obstacle(i, j),
        }
    }

    /// Along-edge centre coordinate of the `along`-th boundary cell of `edge`.
    fn edge_coord(&self, _edge: Edge, along: usize) -> f64 {
        (along as f64 + 0.5) * self.grid.dx
    }

    /// Kind of the outer face of the boundary cell at position `along` on
    /// `edge`. Faces not covered by a segment are walls.
    pub fn face_kind(&self, edge: Edge, along: usize) -> FaceKind {
        let c = self.edge_coord(edge, along);
        let mut exit_no = 0;
        for seg in &self.segments {
            let is_here = seg.edge == edge && c >= seg.span.0 && c <= seg.span.1;
            match seg.kind {
                BoundaryKind::Exit => {
                    if is_here {
                        return FaceKind::Exit(exit_no);
                    }
                    exit_no += 1;
                }
                BoundaryKind::Inlet if is_here => return FaceKind::Inlet,
                _ => {}
            }
        }
        FaceKind::Wall
    }

    pub fn exit_segments(&self) -> Vec<&BoundarySegment> {
        self.segments.iter().filter(|s| s.kind == BoundaryKind::Exit).collect()
    }

    /// Non-obstacle boundary cells adjacent to segments of `kind`.
    pub fn boundary_cells(&self, kind: BoundaryKind) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let g = &self.grid;
        for seg in self.segments.iter().filter(|s| s.kind == kind) {
            for along in 0..seg.edge.cell_count(g) {
                let c = self.edge_coord(seg.edge, along);
                if c < seg.span.0 || c > seg.span.1 {
                    continue;
                }
                let (i, j) = match seg.edge {
                    Edge::Left => (0, along),
                    Edge::Right => (g.n1 - 1, along),
                    Edge::Bottom => (along, 0),
                    Edge::Top => (along, g.n2 - 1),
                };
                if !self.is_obstacle(i, j) && !out.contains(&(i, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Structural checks: segment overlap per edge and exit presence.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.exit_segments().is_empty() {
            problems.push("domain: at least one exit segment is required".to_string());
        }
        for (a, sa) in self.segments.iter().enumerate() {
            if sa.span.0 >= sa.span.1 {
                problems.push(format!("boundary segment {a}: empty span {:?}", sa.span));
            }
            for sb in self.segments.iter().skip(a + 1) {
                if sa.edge == sb.edge && sa.span.0 < sb.span.1 && sb.span.0 < sa.span.1 {
                    problems.push(format!(
                        "boundary segments overlap on {:?}: {:?} and {:?}",
                        sa.edge, sa.span, sb.span
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(problems))
        }
    }
}

/// Free visual depth from a cell centre along a unit direction: distance to
/// the first obstacle cell or to the domain boundary, marched in steps of
/// `dx/4` and clamped to the domain diagonal.
pub fn ray_depth(domain: &WalkingDomain, cell: (usize, usize), e_d: [f64; 2]) -> Result<f64> {
    let (i, j) = cell;
    if domain.is_obstacle(i, j) {
        return Err(Error::InsideObstacle(i, j));
    }
    let origin = domain.grid.cell_centre(i, j);
    let step = domain.grid.dx / 4.0;
    let cap = domain.grid.diagonal();
    let mut t = step;
    while t <= cap {
        let p = [origin[0] + t * e_d[0], origin[1] + t * e_d[1]];
        if domain.blocked_point(p) {
            return Ok(t);
        }
        t += step;
    }
    Ok(cap)
}

/// Angle in `[0, pi]` between an offset vector and the desired direction.
pub fn angle_to(e_d: [f64; 2], offset: [f64; 2]) -> Result<f64> {
    let n = (offset[0] * offset[0] + offset[1] * offset[1]).sqrt();
    if n == 0.0 {
        return Err(Error::DegenerateOffset);
    }
    let c = (offset[0] * e_d[0] + offset[1] * e_d[1]) / n;
    Ok(c.clamp(-1.0, 1.0).acos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> WalkingDomain {
        let grid = Grid::new(n, n, 1.0 / n as f64);
        WalkingDomain::new(
            grid,
            vec![BoundarySegment::new(Edge::Right, (0.0, 1.0), BoundaryKind::Exit, "out")],
        )
    }

    /// Independent oracle: brute-force march at dx/64 resolution.
    fn ray_depth_oracle(domain: &WalkingDomain, cell: (usize, usize), e: [f64; 2]) -> f64 {
        let origin = domain.grid.cell_centre(cell.0, cell.1);
        let step = domain.grid.dx / 64.0;
        let cap = domain.grid.diagonal();
        let mut t = step;
        while t <= cap {
            if domain.blocked_point([origin[0] + t * e[0], origin[1] + t * e[1]]) {
                return t;
            }
            t += step;
        }
        cap
    }

    #[test]
    fn depth_in_empty_square() {
        let d = unit_square(20);
        let got = ray_depth(&d, (10, 10), [1.0, 0.0]).unwrap();
        assert!((got - 0.475).abs() <= d.grid.dx / 4.0 + 1e-12, "got {got}");
    }

    #[test]
    fn depth_stops_at_obstacle_block() {
        let mut d = unit_square(20);
        d.add_obstacle_rect(0.6, 0.0, 0.7, 1.0);
        let x = d.grid.cell_centre(10, 10)[0];
        let got = ray_depth(&d, (10, 10), [1.0, 0.0]).unwrap();
        assert!((got - (0.6 - x)).abs() <= d.grid.dx / 4.0 + 1e-12, "got {got}");
    }

    #[test]
    fn depth_1d_matches_fine_march_oracle() {
        let grid = Grid::new_1d(100, 0.01);
        let d = WalkingDomain::new(
            grid,
            vec![BoundarySegment::new(Edge::Right, (0.0, 0.01), BoundaryKind::Exit, "out")],
        );
        // x = 0.2 is the centre of cell 19 (0.195) .. use cell 20, centre 0.205
        let cell = (19, 0);
        let got = ray_depth(&d, cell, [1.0, 0.0]).unwrap();
        let want = ray_depth_oracle(&d, cell, [1.0, 0.0]);
        assert!((got - want).abs() <= d.grid.dx / 4.0 + 1e-12, "got {got} want {want}");
        assert!((got - (1.0 - 0.195)).abs() <= d.grid.dx / 4.0 + 1e-12);
    }

    #[test]
    fn depth_monotone_under_obstacle_insertion() {
        let free = unit_square(32);
        let mut blocked = unit_square(32);
        blocked.add_obstacle_rect(0.55, 0.4, 0.75, 0.6, );
        for j in [5usize, 16, 26] {
            let a = ray_depth(&free, (3, j), [1.0, 0.0]).unwrap();
            let b = ray_depth(&blocked, (3, j), [1.0, 0.0]).unwrap();
            assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn depth_chord_property() {
        let d = unit_square(25);
        for cell in [(4usize, 7usize), (12, 12), (20, 3)] {
            let fwd = ray_depth(&d, cell, [1.0, 0.0]).unwrap();
            let back = ray_depth(&d, cell, [-1.0, 0.0]).unwrap();
            assert!((fwd + back - 1.0).abs() <= d.grid.dx / 2.0 + 1e-12);
        }
    }

    #[test]
    fn depth_query_inside_obstacle_errors() {
        let mut d = unit_square(10);
        d.add_obstacle_rect(0.38, 0.38, 0.62, 0.62);
        assert!(matches!(ray_depth(&d, (5, 5), [1.0, 0.0]), Err(Error::InsideObstacle(5, 5))));
    }

    #[test]
    fn angle_examples() {
        assert!(angle_to([1.0, 0.0], [2.0, 0.0]).unwrap().abs() < 1e-15);
        assert!((angle_to([1.0, 0.0], [0.0, 3.0]).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((angle_to([1.0, 0.0], [1.0, 1.0]).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(matches!(angle_to([1.0, 0.0], [0.0, 0.0]), Err(Error::DegenerateOffset)));
    }

    #[test]
    fn angle_scale_invariant() {
        let e = [0.6, 0.8];
        for s in [1e-6, 0.5, 3.0, 1e6] {
            let a = angle_to(e, [0.3, -1.2]).unwrap();
            let b = angle_to(e, [0.3 * s, -1.2 * s]).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_cells_and_faces() {
        let grid = Grid::new(10, 6, 0.1);
        let mut dom = WalkingDomain::new(
            grid,
            vec![
                BoundarySegment::new(Edge::Right, (0.1, 0.3), BoundaryKind::Exit, "a"),
                BoundarySegment::new(Edge::Top, (0.0, 1.0), BoundaryKind::Inlet, "in"),
            ],
        );
        dom.validate().unwrap();
        assert_eq!(dom.face_kind(Edge::Right, 1), FaceKind::Exit(0));
        assert_eq!(dom.face_kind(Edge::Right, 4), FaceKind::Wall);
        assert_eq!(dom.face_kind(Edge::Top, 3), FaceKind::Inlet);
        assert_eq!(dom.boundary_cells(BoundaryKind::Exit), vec![(9, 1), (9, 2)]);
        dom.add_obstacle_rect(0.0, 0.52, 0.35, 0.68);
        assert_eq!(dom.boundary_cells(BoundaryKind::Inlet).len(), 7);
    }

    #[test]
    fn overlapping_segments_rejected() {
        let grid = Grid::new(8, 8, 0.125);
        let dom = WalkingDomain::new(
            grid,
            vec![
                BoundarySegment::new(Edge::Left, (0.0, 0.5), BoundaryKind::Exit, "a"),
                BoundarySegment::new(Edge::Left, (0.4, 0.9), BoundaryKind::Wall, "b"),
            ],
        );
        assert!(dom.validate().is_err());
    }
}
