use crowdflow::geometry::*;
use crowdflow::potential::*;
use std::time::Instant;
fn main() {
    let grid = Grid::new(200, 200, 1.0 / 200.0);
    let dom = WalkingDomain::new(
        grid,
        vec![
            BoundarySegment::new(Edge::Right, (0.0, 1.0), BoundaryKind::Exit, "out"),
            BoundarySegment::new(Edge::Left, (0.0, 1.0), BoundaryKind::Inlet, "in"),
        ],
    );
    let t0 = Instant::now();
    let p = solve_potential(&dom, SolveOptions::default()).unwrap();
    println!("200x200 strip solve: {:?}, u[mid] = {}", t0.elapsed(), p.u.at(100, 100));
}
