//! Godunov-type finite-volume integrator for the 1D non-local mass
//! conservation law with adaptive CFL time stepping.
//!
//! The interface flux follows the entropic min/max construction over linear
//! interpolants of density and perceived density. Equispaced sampling alone
//! misses interior extrema by O(1/n_eta^2), so every bracketed sample
//! extremum is polished by golden-section search; endpoint extrema are exact
//! by construction.

use crate::error::{Error, Result};
use crate::fundamental::FundamentalDiagram;
use crate::geometry::WalkingDomain;
use crate::perception::{depth_field, perceive_1d, PerceptionConfig};
use std::collections::VecDeque;

/// Discrete convection velocity at a cell interface (Eq. of the non-local
/// scheme): midpoint interpolants with the density-difference threshold
/// `eps` protecting the ratio; `sign(0) = +1`.
pub fn convection_velocity(
    rho_l: f64,
    rho_r: f64,
    rhop_l: f64,
    rhop_r: f64,
    fd: &FundamentalDiagram,
    eps: f64,
) -> f64 {
    convection_velocity_damped(rho_l, rho_r, rhop_l, rhop_r, 1.0, 1.0, fd, eps)
}

/// Convection velocity including the motion-factor field `g`; with `g == 1`
/// on both sides this reduces exactly to `convection_velocity`.
#[allow(clippy::too_many_arguments)]
pub fn convection_velocity_damped(
    rho_l: f64,
    rho_r: f64,
    rhop_l: f64,
    rhop_r: f64,
    g_l: f64,
    g_r: f64,
    fd: &FundamentalDiagram,
    eps: f64,
) -> f64 {
    let rho_mid = 0.5 * (rho_l + rho_r);
    let rhop_mid = 0.5 * (rhop_l + rhop_r);
    let g_mid = 0.5 * (g_l + g_r);
    let d_rhop = rhop_mid - rhop_l;
    let d_g = g_mid - g_l;
    let mut d_rho = rho_mid - rho_l;
    if d_rho.abs() <= eps {
        d_rho = if d_rho < 0.0 { -eps } else { eps };
    }
    let v = fd.speed_unchecked(rhop_mid);
    let dv = fd.speed_derivative(rhop_mid);
    g_mid * (v + rho_mid * dv * (d_rhop / d_rho)) + rho_mid * v * (d_g / d_rho)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_min(mut a: f64, mut b: f64, h: &impl Fn(f64) -> f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut hc = h(c);
    let mut hd = h(d);
    for _ in 0..48 {
        if hc < hd {
            b = d;
            d = c;
            hd = hc;
            c = b - INV_PHI * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + INV_PHI * (b - a);
            hd = h(d);
        }
    }
    hc.min(hd)
}

/// Entropic interface flux: min of `q(rho^eta, rho_p^eta)` over the
/// interpolation parameter when the density increases across the interface,
/// max otherwise.
pub fn interface_flux(
    rho_l: f64,
    rho_r: f64,
    rhop_l: f64,
    rhop_r: f64,
    fd: &FundamentalDiagram,
    n_eta: usize,
) -> f64 {
    interface_flux_damped(rho_l, rho_r, rhop_l, rhop_r, 1.0, 1.0, fd, n_eta)
}

/// Entropic flux including the motion-factor field, interpolated along eta
/// together with the densities.
#[allow(clippy::too_many_arguments)]
pub fn interface_flux_damped(
    rho_l: f64,
    rho_r: f64,
    rhop_l: f64,
    rhop_r: f64,
    g_l: f64,
    g_r: f64,
    fd: &FundamentalDiagram,
    n_eta: usize,
) -> f64 {
    debug_assert!(n_eta >= 2);
    if rho_l == rho_r && rhop_l == rhop_r && g_l == g_r {
        return rho_l * fd.speed_unchecked(rhop_l) * g_l;
    }
    let minimize = rho_l <= rho_r;
    let q = |eta: f64| {
        let r = (1.0 - eta) * rho_l + eta * rho_r;
        let p = (1.0 - eta) * rhop_l + eta * rhop_r;
        let g = (1.0 - eta) * g_l + eta * g_r;
        r * fd.speed_unchecked(p) * g
    };
    let h = |eta: f64| if minimize { q(eta) } else { -q(eta) };

    let n = n_eta;
    let vals: Vec<f64> = (0..=n).map(|k| h(k as f64 / n as f64)).collect();
    let mut best = f64::INFINITY;
    for &v in &vals {
        if v < best {
            best = v;
        }
    }
    // polish each bracketed sample minimum (first sample of a flat basin)
    for k in 0..=n {
        let left_ok = k == 0 || vals[k] < vals[k - 1];
        let right_ok = k == n || vals[k] <= vals[k + 1];
        if left_ok && right_ok {
            let a = if k == 0 { 0.0 } else { (k - 1) as f64 / n as f64 };
            let b = if k == n { 1.0 } else { (k + 1) as f64 / n as f64 };
            let refined = golden_min(a, b, &h);
            if refined < best {
                best = refined;
            }
        }
    }
    if minimize {
        best
    } else {
        -best
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Solver1dParams {
    pub cfl: f64,
    pub dt_max: f64,
    pub n_eta: usize,
}

impl Default for Solver1dParams {
    fn default() -> Solver1dParams {
        Solver1dParams { cfl: 0.9, dt_max: 0.1, n_eta: 64 }
    }
}

/// State of the 1D crowd: density at time `t`, plus the perception and
/// speed fields used by the latest update.
#[derive(Clone, Debug)]
pub struct State1d {
    pub rho: Vec<f64>,
    pub rho_p: Vec<f64>,
    pub x_p: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub steps: u64,
    speed_hist: VecDeque<Vec<f64>>,
}

/// Per-step bookkeeping: the adaptive step and the boundary fluxes, with
/// which the mass balance closes exactly.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo1d {
    pub dt: f64,
    pub flux_in: f64,
    pub flux_out: f64,
}

/// Non-local Godunov solver over a fixed 1D walking domain.
pub struct Solver1d {
    pub domain: WalkingDomain,
    pub fd: FundamentalDiagram,
    pub perception: PerceptionConfig,
    pub params: Solver1dParams,
    pub periodic: bool,
    delta_s: Vec<f64>,
}

impl Solver1d {
    pub fn new(
        domain: WalkingDomain,
        fd: FundamentalDiagram,
        perception: PerceptionConfig,
        params: Solver1dParams,
        periodic: bool,
    ) -> Result<Solver1d> {
        assert!(domain.grid.is_1d(), "Solver1d needs a 1D grid");
        let n = domain.grid.n1;
        let mut delta_s = vec![0.0; n];
        let length = domain.grid.size()[0];
        for j in 0..n {
            delta_s[j] = if domain.is_obstacle(j, 0) {
                0.0
            } else if periodic {
                // no boundary to hit; clamp at the domain length
                length
            } else {
                crate::geometry::ray_depth(&domain, (j, 0), [1.0, 0.0])?
            };
        }
        Ok(Solver1d { domain, fd, perception, params, periodic, delta_s })
    }

    pub fn free_depth(&self) -> &[f64] {
        &self.delta_s
    }

    /// Initial state; the speed field is bootstrapped from the local
    /// density.
    pub fn initial_state(&self, rho: Vec<f64>) -> Result<State1d> {
        let n = self.domain.grid.n1;
        assert_eq!(rho.len(), n);
        let mut v = vec![0.0; n];
        for j in 0..n {
            v[j] = self.fd.speed(rho[j])?;
        }
        let mut speed_hist = VecDeque::new();
        speed_hist.push_back(v.clone());
        Ok(State1d {
            rho_p: rho.clone(),
            x_p: (0..n).map(|j| self.domain.grid.cell_centre(j, 0)[0]).collect(),
            rho,
            v,
            t: 0.0,
            dt: 0.0,
            steps: 0,
            speed_hist,
        })
    }

    /// Advance one adaptive step.
    ///
    /// `inflow` is the prescribed inlet density at the current time (ignored
    /// for periodic domains, where it must be `None`). `motion` is the
    /// per-cell walking-speed corrective factor, 1 everywhere when absent.
    pub fn step(
        &self,
        state: &mut State1d,
        inflow: Option<f64>,
        motion: Option<&[f64]>,
    ) -> Result<StepInfo1d> {
        let n = self.domain.grid.n1;
        let dx = self.domain.grid.dx;
        assert_eq!(self.periodic, inflow.is_none(), "inflow iff non-periodic");

        let v_delayed = state.speed_hist.front().expect("speed history seeded");
        let delta = depth_field(
            &self.delta_s,
            v_delayed,
            &self.perception.law,
            self.fd.v_max,
            self.perception.depth_cap,
        );
        let (mut rho_p, x_p) =
            perceive_1d(&self.domain, &state.rho, &delta, self.perception.strategy, self.periodic);
        for p in rho_p.iter_mut() {
            *p = p.clamp(0.0, self.fd.rho_max);
        }

        let mut v = vec![0.0; n];
        for j in 0..n {
            let g = motion.map_or(1.0, |m| m[j]);
            v[j] = self.fd.speed(rho_p[j])? * g;
        }

        // ghost states: inlet carries the prescribed density, outlet copies
        // the last cell (free outflow); periodic wraps
        let gf = |j: usize| motion.map_or(1.0, |m| m[j]);
        let (left, right) = if self.periodic {
            (
                (state.rho[n - 1], rho_p[n - 1], gf(n - 1)),
                (state.rho[0], rho_p[0], gf(0)),
            )
        } else {
            (
                (inflow.unwrap(), rho_p[0], gf(0)),
                (state.rho[n - 1], rho_p[n - 1], gf(n - 1)),
            )
        };

        // interface loop: q[j] is the flux through the left face of cell j
        let eps = self.perception.epsilon;
        let mut q = vec![0.0; n + 1];
        let mut max_speed = 0.0f64;
        for j in 0..=n {
            let (rl, pl, gl) = if j == 0 {
                left
            } else {
                (state.rho[j - 1], rho_p[j - 1], gf(j - 1))
            };
            let (rr, pr, gr) = if j == n { right } else { (state.rho[j], rho_p[j], gf(j)) };
            let vc = convection_velocity_damped(rl, rr, pl, pr, gl, gr, &self.fd, eps);
            max_speed = max_speed.max(vc.abs());
            q[j] = interface_flux_damped(rl, rr, pl, pr, gl, gr, &self.fd, self.params.n_eta);
        }
        for &vj in &v {
            max_speed = max_speed.max(vj.abs());
        }

        let dt = if max_speed > 0.0 {
            (self.params.cfl * dx / max_speed).min(self.params.dt_max)
        } else {
            self.params.dt_max
        };

        let lam = dt / dx;
        let mut rho_new = state.rho.clone();
        for j in 0..n {
            rho_new[j] -= lam * (q[j + 1] - q[j]);
            if rho_new[j].is_nan() {
                // leave the state at its last valid contents
                return Err(Error::NanDetected { field: "rho", step: state.steps + 1 });
            }
        }

        state.rho = rho_new;
        state.rho_p = rho_p;
        state.x_p = x_p;
        state.v = v.clone();
        state.t += dt;
        state.dt = dt;
        state.steps += 1;
        state.speed_hist.push_back(v);
        while state.speed_hist.len() > self.perception.law.tau1_steps + 1 {
            state.speed_hist.pop_front();
        }

        Ok(StepInfo1d { dt, flux_in: q[0], flux_out: q[n] })
    }
}
