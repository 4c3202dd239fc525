//! Derived quantities for validation and figures: corridor fluxes, low-pass
//! filtering, L2 energy, total mass, emptying time and the Gaussian test
//! density.

use crate::geometry::{Grid, ScalarField, WalkingDomain};

/// Orientation of a flux segment lying on a grid line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentAxis {
    /// Vertical segment on the boundary between columns `line-1` and `line`;
    /// positive flux points in +x1.
    Vertical,
    /// Horizontal segment between rows `line-1` and `line`; positive flux
    /// points in +x2.
    Horizontal,
}

/// Segment on a grid line across which the integral pedestrian flux is
/// measured.
#[derive(Clone, Debug)]
pub struct FluxSegment {
    pub name: String,
    pub axis: SegmentAxis,
    /// Grid-line index: cells `line-1` and `line` sit on either side.
    pub line: usize,
    /// Transverse cell range, inclusive.
    pub from: usize,
    pub to: usize,
}

/// Midpoint-rule line integral of the normal component of `rho v` across
/// the segment: the edge value is the mean of the two adjacent cells
/// (one-sided where a side is an obstacle or outside the grid).
pub fn corridor_flux(
    rho: &ScalarField,
    velocity: &[[f64; 2]],
    domain: &WalkingDomain,
    seg: &FluxSegment,
) -> f64 {
    let g = rho.grid;
    let comp = match seg.axis {
        SegmentAxis::Vertical => 0,
        SegmentAxis::Horizontal => 1,
    };
    let side = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i >= g.n1 as isize || j >= g.n2 as isize {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if domain.is_obstacle(i, j) {
            return None;
        }
        let k = g.idx(i, j);
        Some(rho.values[k] * velocity[k][comp])
    };
    let mut q = 0.0;
    for s in seg.from..=seg.to {
        let (a, b) = match seg.axis {
            SegmentAxis::Vertical => (
                side(seg.line as isize - 1, s as isize),
                side(seg.line as isize, s as isize),
            ),
            SegmentAxis::Horizontal => (
                side(s as isize, seg.line as isize - 1),
                side(s as isize, seg.line as isize),
            ),
        };
        q += match (a, b) {
            (Some(x), Some(y)) => 0.5 * (x + y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => 0.0,
        };
    }
    q * g.dx
}

/// Centred moving average over `window` samples (effective half-width
/// `window/2`), shrinking at the series ends.
pub fn lowpass(values: &[f64], window: usize) -> Vec<f64> {
    if values.is_empty() || window <= 1 {
        return values.to_vec();
    }
    let half = window / 2;
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lo = k.saturating_sub(half);
        let hi = (k + half).min(n - 1);
        let s: f64 = values[lo..=hi].iter().sum();
        out.push(s / (hi - lo + 1) as f64);
    }
    out
}

/// Discrete L2 energy `sum(rho^2) * measure` (measure = dx in 1D, dx^2 in
/// 2D).
pub fn l2_energy(values: &[f64], cell_measure: f64) -> f64 {
    values.iter().map(|r| r * r).sum::<f64>() * cell_measure
}

/// Discrete total mass `sum(rho) * measure`.
pub fn total_mass(values: &[f64], cell_measure: f64) -> f64 {
    values.iter().sum::<f64>() * cell_measure
}

/// Gaussian test density on a 1D grid: the cross-section of the 2D bump at
/// the bump centre row.
pub fn gaussian_bump_1d(grid: Grid, rho0: f64, drho: f64, ell: f64, x_c: f64) -> Vec<f64> {
    (0..grid.n1)
        .map(|i| {
            let x = grid.cell_centre(i, 0)[0];
            rho0 + drho * (-((x - x_c) * (x - x_c)) / (ell * ell)).exp()
        })
        .collect()
}

/// Gaussian test density on a 2D grid.
pub fn gaussian_bump_2d(
    grid: Grid,
    rho0: f64,
    drho: f64,
    ell: f64,
    centre: [f64; 2],
) -> ScalarField {
    let mut f = ScalarField::zeros(grid);
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let c = grid.cell_centre(i, j);
            let r2 = (c[0] - centre[0]).powi(2) + (c[1] - centre[1]).powi(2);
            f.set(i, j, rho0 + drho * (-r2 / (ell * ell)).exp());
        }
    }
    f
}

/// Emptying time of a mass series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EmptyingTime {
    /// First time the mass drops to the threshold fraction of its peak
    /// (linear interpolation between samples).
    At(f64),
    /// Never reached within the series.
    Unbounded { final_fraction: f64 },
}

pub fn emptying_time(mass: &[(f64, f64)], threshold_frac: f64) -> EmptyingTime {
    if mass.is_empty() {
        return EmptyingTime::At(0.0);
    }
    // scan forward from the peak: before it the area is still filling
    let k_peak = mass
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .unwrap();
    let peak = mass[k_peak].1;
    if peak <= 0.0 {
        return EmptyingTime::At(mass[0].0);
    }
    let target = threshold_frac * peak;
    for w in mass[k_peak..].windows(2) {
        let (t0, m0) = w[0];
        let (t1, m1) = w[1];
        if m0 > target && m1 <= target {
            let t = if m0 == m1 { t1 } else { t0 + (t1 - t0) * (m0 - target) / (m0 - m1) };
            return EmptyingTime::At(t);
        }
    }
    EmptyingTime::Unbounded { final_fraction: mass.last().unwrap().1 / peak }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryKind, BoundarySegment, Edge, WalkingDomain};

    #[test]
    fn corridor_flux_uniform() {
        let grid = Grid::new(10, 10, 0.1);
        let dom = WalkingDomain::new(
            grid,
            vec![BoundarySegment::new(Edge::Right, (0.0, 1.0), BoundaryKind::Exit, "out")],
        );
        let rho = ScalarField::constant(grid, 0.3);
        let vel = vec![[0.7, 0.0]; grid.cells()];
        // unit-length vertical segment: the whole right column boundary
        let seg = FluxSegment {
            name: "out".into(),
            axis: SegmentAxis::Vertical,
            line: 5,
            from: 0,
            to: 9,
        };
        let q = corridor_flux(&rho, &vel, &dom, &seg);
        assert!((q - 0.3 * 0.7).abs() < 1e-14, "q = {q}");
        // tangential velocity: no flux
        let vel_t = vec![[0.0, 0.7]; grid.cells()];
        assert_eq!(corridor_flux(&rho, &vel_t, &dom, &seg), 0.0);
    }

    #[test]
    fn lowpass_constant_and_impulse() {
        let c = vec![2.5; 40];
        assert_eq!(lowpass(&c, 7), c);
        let mut imp = vec![0.0; 21];
        imp[10] = 1.0;
        let f = lowpass(&imp, 5);
        for k in 8..=12 {
            assert!((f[k] - 0.2).abs() < 1e-15, "k = {k}: {}", f[k]);
        }
        assert_eq!(f[5], 0.0);
    }

    #[test]
    fn lowpass_attenuates_fast_sinusoid() {
        // period 8 samples, window 83 samples (~10 periods): the analytic
        // moving-average gain |sin(pi m / p) / (m sin(pi / p))| is ~0.01
        let n = 600;
        let p = 8.0;
        let xs: Vec<f64> = (0..n).map(|k| (std::f64::consts::TAU * k as f64 / p).sin()).collect();
        let f = lowpass(&xs, 83);
        let amp = f[100..500].iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(amp < 0.1, "residual amplitude {amp}");
    }

    #[test]
    fn lowpass_preserves_interior_mass() {
        // signal supported away from the ends: every sample spreads over
        // full windows, so the total is preserved exactly
        let mut xs = vec![0.0; 200];
        for k in 50..150 {
            xs[k] = (k as f64 * 0.37).sin() + 0.5;
        }
        let f = lowpass(&xs, 11);
        let sum_in: f64 = xs.iter().sum();
        let sum_out: f64 = f.iter().sum();
        assert!((sum_in - sum_out).abs() < 1e-12, "{sum_in} vs {sum_out}");
    }

    #[test]
    fn energy_and_mass_basics() {
        assert_eq!(l2_energy(&[0.0; 8], 0.1), 0.0);
        assert_eq!(total_mass(&[0.0; 8], 0.1), 0.0);
        let ones = vec![1.0; 8];
        assert!((l2_energy(&ones, 0.1) - 0.8).abs() < 1e-15);
        assert!((total_mass(&ones, 0.1) - 0.8).abs() < 1e-15);
        // homogeneity
        let xs = vec![0.2, 0.4, 0.7];
        let c = 3.0;
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        assert!((total_mass(&scaled, 0.5) - c * total_mass(&xs, 0.5)).abs() < 1e-14);
        assert!((l2_energy(&scaled, 0.5) - c * c * l2_energy(&xs, 0.5)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_bump_values_and_integrals() {
        let grid = Grid::new_1d(4000, 1.0 / 4000.0);
        let rho = gaussian_bump_1d(grid, 0.25, 0.3, 1.0 / 35.0, 0.4);
        // peak cell close to rho0 + drho
        let peak = rho.iter().cloned().fold(0.0f64, f64::max);
        assert!((peak - 0.55).abs() < 1e-4);
        // far field
        assert!((rho[3999] - 0.25).abs() < 1e-12);
        // at |x - xc| = ell the value is rho0 + drho/e
        let x_at = 0.4 + 1.0 / 35.0;
        let i = (x_at / grid.dx - 0.5).round() as usize;
        assert!((rho[i] - (0.25 + 0.3 / std::f64::consts::E)).abs() < 2e-3);
        // frozen analytic integrals (40-digit erf evaluation):
        // mass = 0.26519246157919014, energy = 0.07331903857126350
        let mass = total_mass(&rho, grid.dx);
        assert!((mass - 0.26519246157919014).abs() < 0.005 * 0.265);
        let energy = l2_energy(&rho, grid.dx);
        assert!((energy - 0.07331903857126350).abs() < 0.005 * 0.0733);

        let g2 = Grid::new(500, 500, 1.0 / 500.0);
        let f2 = gaussian_bump_2d(g2, 0.25, 0.3, 1.0 / 35.0, [0.4, 0.5]);
        // frozen: 2D mass = 0.25076936962945056, energy = 0.06300009025914287
        let m2 = total_mass(&f2.values, g2.dx * g2.dx);
        assert!((m2 - 0.25076936962945056).abs() < 0.005 * 0.2508);
        let e2 = l2_energy(&f2.values, g2.dx * g2.dx);
        assert!((e2 - 0.06300009025914287).abs() < 0.005 * 0.063);
    }

    #[test]
    fn emptying_time_cases() {
        // already below threshold at t = 0 (all-zero series)
        assert_eq!(emptying_time(&[(0.0, 0.0), (1.0, 0.0)], 0.01), EmptyingTime::At(0.0));
        // linear drain from 10 to 0 over [0, 1]: crosses 1% of peak at 0.99
        let series: Vec<(f64, f64)> =
            (0..=100).map(|k| (k as f64 / 100.0, 10.0 * (1.0 - k as f64 / 100.0))).collect();
        match emptying_time(&series, 0.01) {
            EmptyingTime::At(t) => assert!((t - 0.99).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        // never drains
        let flat = vec![(0.0, 5.0), (1.0, 5.0)];
        match emptying_time(&flat, 0.01) {
            EmptyingTime::Unbounded { final_fraction } => {
                assert!((final_fraction - 1.0).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }
}
