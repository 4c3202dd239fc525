//! Desired-direction field from a harmonic potential on the walking domain.
//!
//! The potential solves the 5-point discrete Laplace equation with u = 1 on
//! exit cells, u = 0 on inlet cells (anchoring; with pure Neumann walls the
//! solution would be constant) and homogeneous Neumann conditions, realised
//! as mirror ghost cells, on walls and obstacle faces.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryKind, ScalarField, VectorField, WalkingDomain};
use std::collections::VecDeque;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub omega: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions { omega: 1.8, tol: 1e-8, max_iters: 100_000 }
    }
}

/// Harmonic potential and its normalized gradient.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub u: ScalarField,
    pub e_d: VectorField,
}

#[derive(Clone, Copy, PartialEq)]
enum CellClass {
    Obstacle,
    Fixed(f64),
    Free,
}

fn classify(domain: &WalkingDomain) -> Vec<CellClass> {
    let g = domain.grid;
    let mut class = vec![CellClass::Free; g.cells()];
    for j in 0..g.n2 {
        for i in 0..g.n1 {
            if domain.is_obstacle(i, j) {
                class[g.idx(i, j)] = CellClass::Obstacle;
            }
        }
    }
    for (i, j) in domain.boundary_cells(BoundaryKind::Exit) {
        class[g.idx(i, j)] = CellClass::Fixed(1.0);
    }
    for (i, j) in domain.boundary_cells(BoundaryKind::Inlet) {
        class[g.idx(i, j)] = CellClass::Fixed(0.0);
    }
    class
}

/// Solve the discrete Laplace equation by SOR sweeps until the maximum
/// 5-point residual drops below `tol`.
pub fn solve_potential(domain: &WalkingDomain, opts: SolveOptions) -> Result<PotentialField> {
    let g = domain.grid;
    if domain.boundary_cells(BoundaryKind::Exit).is_empty() {
        return Err(Error::NoExit);
    }
    let class = classify(domain);
    // seed free cells with the mean Dirichlet value; when the boundary is
    // all-exit this is already the exact solution
    let (mut fixed_sum, mut fixed_count) = (0.0, 0usize);
    for c in &class {
        if let CellClass::Fixed(v) = c {
            fixed_sum += v;
            fixed_count += 1;
        }
    }
    let seed = if fixed_count > 0 { fixed_sum / fixed_count as f64 } else { 0.0 };
    let mut u = vec![seed; g.cells()];
    for (k, c) in class.iter().enumerate() {
        if let CellClass::Fixed(v) = c {
            u[k] = *v;
        }
    }

    // precomputed neighbour indices; usize::MAX marks a mirror ghost
    // (homogeneous Neumann at walls and obstacle faces)
    const GHOST: usize = usize::MAX;
    let mut nb = vec![[GHOST; 4]; g.cells()];
    let free: Vec<usize> = (0..g.cells()).filter(|&k| class[k] == CellClass::Free).collect();
    for j in 0..g.n2 as isize {
        for i in 0..g.n1 as isize {
            let k = g.idx(i as usize, j as usize);
            for (slot, (di, dj)) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)].iter().enumerate() {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= g.n1 as isize || nj >= g.n2 as isize {
                    continue;
                }
                let kn = g.idx(ni as usize, nj as usize);
                if class[kn] != CellClass::Obstacle {
                    nb[k][slot] = kn;
                }
            }
        }
    }
    let stencil_sum = |u: &[f64], k: usize| -> f64 {
        let n = nb[k];
        let uk = u[k];
        let a = if n[0] == GHOST { uk } else { u[n[0]] };
        let b = if n[1] == GHOST { uk } else { u[n[1]] };
        let c = if n[2] == GHOST { uk } else { u[n[2]] };
        let d = if n[3] == GHOST { uk } else { u[n[3]] };
        a + b + c + d
    };

    // the residual pass costs a full sweep, so it runs every few sweeps
    let mut iters = 0;
    let mut residual = f64::INFINITY;
    while iters < opts.max_iters {
        iters += 1;
        for &k in &free {
            let s = stencil_sum(&u, k);
            u[k] += opts.omega * (0.25 * s - u[k]);
        }
        if iters % 8 == 0 || iters == opts.max_iters {
            residual = 0.0;
            for &k in &free {
                let r = (stencil_sum(&u, k) - 4.0 * u[k]).abs();
                if r > residual {
                    residual = r;
                }
            }
            if residual < opts.tol {
                let u = ScalarField::from_values(g, u);
                let e_d = gradient_direction(&u, domain);
                return Ok(PotentialField { u, e_d });
            }
        }
    }
    Err(Error::NotConverged { residual, iters })
}

/// Normalized gradient of the potential: central differences where both
/// neighbours are open, one-sided at walls and obstacle faces. Cells with a
/// vanishing gradient inherit the direction of the nearest cell that has
/// one (breadth-first); if no cell has a gradient at all, a constant (1, 0)
/// is used.
pub fn gradient_direction(u: &ScalarField, domain: &WalkingDomain) -> VectorField {
    let g = u.grid;
    let open = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= g.n1 as isize || j >= g.n2 as isize {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if domain.is_obstacle(i, j) {
            None
        } else {
            Some(g.idx(i, j))
        }
    };
    let mut e = VectorField::zeros(g);
    let mut assigned = vec![false; g.cells()];
    let mut queue = VecDeque::new();
    for j in 0..g.n2 as isize {
        for i in 0..g.n1 as isize {
            let Some(k) = open(i, j) else { continue };
            let diff = |a: Option<usize>, b: Option<usize>| -> f64 {
                match (a, b) {
                    (Some(ka), Some(kb)) => (u.values[kb] - u.values[ka]) / (2.0 * g.dx),
                    (None, Some(kb)) => (u.values[kb] - u.values[k]) / g.dx,
                    (Some(ka), None) => (u.values[k] - u.values[ka]) / g.dx,
                    (None, None) => 0.0,
                }
            };
            let mut gx = diff(open(i - 1, j), open(i + 1, j));
            let mut gy = diff(open(i, j - 1), open(i, j + 1));
            // components at the iterative solver's noise floor are snapped
            // to zero so axis-aligned fields come out exactly axis-aligned
            if gx.abs() < 1e-9 * gy.abs() {
                gx = 0.0;
            }
            if gy.abs() < 1e-9 * gx.abs() {
                gy = 0.0;
            }
            let n = (gx * gx + gy * gy).sqrt();
            if n >= 1e-12 {
                e.values[k] = [gx / n, gy / n];
                assigned[k] = true;
                queue.push_back((i as usize, j as usize));
            }
        }
    }
    // breadth-first fill of degenerate cells
    while let Some((i, j)) = queue.pop_front() {
        let k = g.idx(i, j);
        let dir = e.values[k];
        let steps: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        for (di, dj) in steps {
            if let Some(kn) = open(i as isize + di, j as isize + dj) {
                if !assigned[kn] {
                    assigned[kn] = true;
                    e.values[kn] = dir;
                    queue.push_back((kn % g.n1, kn / g.n1));
                }
            }
        }
    }
    for j in 0..g.n2 {
        for i in 0..g.n1 {
            let k = g.idx(i, j);
            if !assigned[k] && !domain.is_obstacle(i, j) {
                e.values[k] = [1.0, 0.0];
            }
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundarySegment, Edge, Grid};

    fn strip(n1: usize, n2: usize) -> WalkingDomain {
        let grid = Grid::new(n1, n2, 1.0 / n1 as f64);
        let h = n2 as f64 * grid.dx;
        WalkingDomain::new(
            grid,
            vec![
                BoundarySegment::new(Edge::Right, (0.0, h), BoundaryKind::Exit, "out"),
                BoundarySegment::new(Edge::Left, (0.0, h), BoundaryKind::Inlet, "in"),
            ],
        )
    }

    #[test]
    fn strip_gives_uniform_direction() {
        let dom = strip(24, 6);
        let p = solve_potential(&dom, SolveOptions::default()).unwrap();
        for v in &p.e_d.values {
            assert!((v[0] - 1.0).abs() < 1e-6 && v[1].abs() < 1e-6, "e_d = {v:?}");
        }
        // linear potential: interior residual is tiny by construction
        assert!(p.u.values.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn maximum_principle_and_residual() {
        let grid = Grid::new(20, 12, 0.05);
        let mut dom = WalkingDomain::new(
            grid,
            vec![
                BoundarySegment::new(Edge::Right, (0.2, 0.4), BoundaryKind::Exit, "out"),
                BoundarySegment::new(Edge::Top, (0.1, 0.9), BoundaryKind::Inlet, "in"),
            ],
        );
        dom.add_obstacle_rect(0.3, 0.15, 0.5, 0.35);
        let opts = SolveOptions::default();
        let p = solve_potential(&dom, opts).unwrap();
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                if dom.is_obstacle(i, j) {
                    continue;
                }
                let v = p.u.at(i, j);
                assert!((-1e-12..=1.0 + 1e-12).contains(&v), "u out of Dirichlet range: {v}");
                let n = p.e_d.at(i, j);
                let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
                assert!((norm - 1.0).abs() < 1e-12, "e_d not unit: {norm}");
            }
        }
    }

    #[test]
    fn all_exit_boundary_degenerates_cleanly() {
        let grid = Grid::new(10, 10, 0.1);
        let dom = WalkingDomain::new(
            grid,
            vec![
                BoundarySegment::new(Edge::Left, (0.0, 1.0), BoundaryKind::Exit, "l"),
                BoundarySegment::new(Edge::Right, (0.0, 1.0), BoundaryKind::Exit, "r"),
                BoundarySegment::new(Edge::Top, (0.0, 1.0), BoundaryKind::Exit, "t"),
                BoundarySegment::new(Edge::Bottom, (0.0, 1.0), BoundaryKind::Exit, "b"),
            ],
        );
        let p = solve_potential(&dom, SolveOptions::default()).unwrap();
        assert!(p.u.values.iter().all(|&v| (v - 1.0).abs() < 1e-9));
        assert!(p.e_d.values.iter().all(|v| !v[0].is_nan() && !v[1].is_nan()));
        assert!(p.e_d.values.iter().all(|v| *v == [1.0, 0.0]));
    }

    #[test]
    fn no_exit_errors() {
        let grid = Grid::new(8, 8, 0.125);
        let dom = WalkingDomain::new(grid, vec![]);
        assert!(matches!(solve_potential(&dom, SolveOptions::default()), Err(Error::NoExit)));
    }

    #[test]
    fn not_converged_reports_residual() {
        let dom = strip(30, 10);
        let opts = SolveOptions { max_iters: 2, ..Default::default() };
        match solve_potential(&dom, opts) {
            Err(Error::NotConverged { residual, iters }) => {
                assert_eq!(iters, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn explicit_gradient_fields() {
        let grid = Grid::new(16, 16, 1.0 / 16.0);
        let dom = WalkingDomain::new(
            grid,
            vec![BoundarySegment::new(Edge::Right, (0.0, 1.0), BoundaryKind::Exit, "out")],
        );
        // u = x1: e_d = (1, 0) everywhere
        let mut u = ScalarField::zeros(grid);
        for j in 0..16 {
            for i in 0..16 {
                let c = grid.cell_centre(i, j);
                u.set(i, j, c[0]);
            }
        }
        let e = gradient_direction(&u, &dom);
        assert!(e.values.iter().all(|v| (v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12));

        // u = x1 + x2: diagonal
        for j in 0..16 {
            for i in 0..16 {
                let c = grid.cell_centre(i, j);
                u.set(i, j, c[0] + c[1]);
            }
        }
        let e = gradient_direction(&u, &dom);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for v in &e.values {
            assert!((v[0] - s).abs() < 1e-12 && (v[1] - s).abs() < 1e-12);
        }

        // constant u: fallback fill, no NaN
        let u0 = ScalarField::constant(grid, 0.3);
        let e = gradient_direction(&u0, &dom);
        assert!(e.values.iter().all(|v| !v[0].is_nan() && !v[1].is_nan()));
    }

    /// Dense oracle on an 8x8 grid: assemble the same 5-point system with
    /// mirror Neumann and Dirichlet cells and solve it by Gaussian
    /// elimination with partial pivoting.
    #[test]
    fn sor_matches_dense_solve_on_8x8() {
        let grid = Grid::new(8, 8, 0.125);
        let dom = WalkingDomain::new(
            grid,
            vec![
                BoundarySegment::new(Edge::Right, (0.375, 0.625), BoundaryKind::Exit, "out"),
                BoundarySegment::new(Edge::Left, (0.25, 0.75), BoundaryKind::Inlet, "in"),
            ],
        );
        let p = solve_potential(&dom, SolveOptions { tol: 1e-12, ..Default::default() }).unwrap();

        let n = grid.cells();
        let class = classify(&dom);
        let mut a = vec![vec![0.0f64; n]; n];
        let mut b = vec![0.0f64; n];
        for j in 0..8i64 {
            for i in 0..8i64 {
                let k = grid.idx(i as usize, j as usize);
                match class[k] {
                    CellClass::Fixed(v) => {
                        a[k][k] = 1.0;
                        b[k] = v;
                    }
                    CellClass::Obstacle => {
                        a[k][k] = 1.0;
                    }
                    CellClass::Free => {
                        let mut diag = 0.0;
                        for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                            let (ni, nj) = (i + di, j + dj);
                            if ni < 0 || nj < 0 || ni >= 8 || nj >= 8 {
                                continue; // mirror: cancels
                            }
                            let kn = grid.idx(ni as usize, nj as usize);
                            if class[kn] == CellClass::Obstacle {
                                continue; // mirror
                            }
                            diag -= 1.0;
                            a[k][kn] = 1.0;
                        }
                        a[k][k] = diag;
                    }
                }
            }
        }
        // gaussian elimination
        for col in 0..n {
            let piv = (col..n).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col];
            assert!(d.abs() > 1e-14);
            for r in (col + 1)..n {
                let f = a[r][col] / d;
                if f == 0.0 {
                    continue;
                }
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0f64; n];
        for r in (0..n).rev() {
            let mut s = b[r];
            for c in (r + 1)..n {
                s -= a[r][c] * x[c];
            }
            x[r] = s / a[r][r];
        }
        let u_dense = ScalarField::from_values(grid, x);
        let e_dense = gradient_direction(&u_dense, &dom);
        for k in 0..n {
            assert!(
                (p.u.values[k] - u_dense.values[k]).abs() < 1e-6,
                "u mismatch at {k}: {} vs {}",
                p.u.values[k],
                u_dense.values[k]
            );
            let (ea, eb) = (p.e_d.values[k], e_dense.values[k]);
            assert!((ea[0] - eb[0]).abs() < 1e-6 && (ea[1] - eb[1]).abs() < 1e-6);
        }
        // left-right symmetry about the exit axis (y = 0.5)
        for j in 0..4usize {
            for i in 0..8usize {
                let k1 = grid.idx(i, j);
                let k2 = grid.idx(i, 7 - j);
                assert!((p.u.values[k1] - p.u.values[k2]).abs() < 1e-6);
            }
        }
    }
}
