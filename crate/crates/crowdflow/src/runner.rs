//! Run orchestration: turns a validated scenario into solver runs and a
//! deterministic set of output files (manifest, density snapshots,
//! diagnostics and flux CSVs).

use crate::diagnostics::{
    corridor_flux, emptying_time, l2_energy, total_mass, gaussian_bump_1d, gaussian_bump_2d,
    EmptyingTime, FluxSegment, SegmentAxis,
};
use crate::error::{Error, Result};
use crate::output::CsvWriter;
use crate::perception::{depth_field, perceive_1d, perceive_2d};
use crate::potential::{solve_potential, PotentialField, SolveOptions};
use crate::scenario::{Mode, Scenario};
use crate::series::TimeSeries;
use crate::solver1d::{Solver1d, Solver1dParams};
use crate::solver2d::Solver2d;
use crate::structure::{coupled_run, CoupledParams, ModalStructure, MotionMode, ZeroForce};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub dump_potential: bool,
    /// Recorded in the manifest; runs are deterministic and never consume
    /// randomness.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub initial_mass: f64,
    pub injected: f64,
    pub exited: f64,
    pub final_mass: f64,
    pub audit_residual: f64,
    pub peak_mass: f64,
    pub emptying: Option<EmptyingTime>,
    pub files: Vec<String>,
}

/// Validate and execute a scenario, writing all outputs under
/// `opts.out_dir`.
pub fn run_scenario(scn: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let problems = scn.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidScenario(problems));
    }
    std::fs::create_dir_all(&opts.out_dir)?;
    match scn.mode {
        Mode::PerceptionTest1d => run_perception_test(scn, opts, false),
        Mode::PerceptionTest2d => run_perception_test(scn, opts, true),
        Mode::Footbridge => run_1d(scn, opts),
        Mode::Station => run_2d(scn, opts),
        Mode::Custom => {
            if scn.grid.n2 == 1 {
                run_1d(scn, opts)
            } else {
                run_2d(scn, opts)
            }
        }
    }
}

fn resolve_flux_segments(scn: &Scenario, grid: crate::geometry::Grid) -> Vec<FluxSegment> {
    scn.flux_segments
        .iter()
        .map(|f| {
            let axis = if f.axis == "vertical" { SegmentAxis::Vertical } else { SegmentAxis::Horizontal };
            let n_trans = match axis {
                SegmentAxis::Vertical => grid.n2,
                SegmentAxis::Horizontal => grid.n1,
            };
            let line = (f.position / grid.dx).round() as usize;
            let mut from = n_trans;
            let mut to = 0;
            for s in 0..n_trans {
                let c = (s as f64 + 0.5) * grid.dx;
                if c >= f.from && c <= f.to {
                    from = from.min(s);
                    to = to.max(s);
                }
            }
            FluxSegment { name: f.name.clone(), axis, line, from, to: to.max(from.min(n_trans - 1)) }
        })
        .collect()
}

fn run_perception_test(scn: &Scenario, opts: &RunOptions, two_d: bool) -> Result<RunSummary> {
    let domain = scn.build_domain()?;
    let grid = domain.grid;
    let fd = scn.fd.resolve()?.normalized();
    let cfg = scn.perception.resolve();
    let b = &scn.bump;

    let mut files = Vec::new();
    let (mass, energy);
    if two_d {
        let rho = gaussian_bump_2d(grid, b.rho0, b.drho, b.ell, b.centre);
        let potential = solve_potential(&domain, SolveOptions::default())?;
        let mut delta_s = vec![0.0; grid.cells()];
        let mut v0 = vec![0.0; grid.cells()];
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let k = grid.idx(i, j);
                if !domain.is_obstacle(i, j) {
                    delta_s[k] =
                        crate::geometry::ray_depth(&domain, (i, j), potential.e_d.values[k])?;
                    v0[k] = fd.speed(rho.values[k])?;
                }
            }
        }
        let delta = depth_field(&delta_s, &v0, &cfg.law, fd.v_max, cfg.depth_cap);
        let out = perceive_2d(&domain, &rho, &potential.e_d, &delta, &cfg);
        let path = opts.out_dir.join("rho_p.csv");
        let mut w = CsvWriter::create(&path, &["x1", "x2", "rho", "rho_p", "xp1", "xp2"])?;
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let k = grid.idx(i, j);
                let c = grid.cell_centre(i, j);
                w.row(&[c[0], c[1], rho.values[k], out.rho_p[k], out.x_p[k][0], out.x_p[k][1]])?;
            }
        }
        w.finish()?;
        files.push("rho_p.csv".to_string());
        if opts.dump_potential {
            write_potential(&opts.out_dir, &potential, &mut files)?;
        }
        mass = total_mass(&rho.values, grid.dx * grid.dx);
        energy = l2_energy(&rho.values, grid.dx * grid.dx);
    } else {
        let rho = gaussian_bump_1d(grid, b.rho0, b.drho, b.ell, b.centre[0]);
        let mut delta_s = vec![0.0; grid.n1];
        let mut v0 = vec![0.0; grid.n1];
        for i in 0..grid.n1 {
            if !domain.is_obstacle(i, 0) {
                delta_s[i] = crate::geometry::ray_depth(&domain, (i, 0), [1.0, 0.0])?;
                v0[i] = fd.speed(rho[i])?;
            }
        }
        let delta = depth_field(&delta_s, &v0, &cfg.law, fd.v_max, cfg.depth_cap);
        let (rho_p, x_p) = perceive_1d(&domain, &rho, &delta, cfg.strategy, false);
        let path = opts.out_dir.join("rho_p.csv");
        let mut w = CsvWriter::create(&path, &["x", "rho", "rho_p", "x_p"])?;
        for i in 0..grid.n1 {
            w.row(&[grid.cell_centre(i, 0)[0], rho[i], rho_p[i], x_p[i]])?;
        }
        w.finish()?;
        files.push("rho_p.csv".to_string());
        mass = total_mass(&rho, grid.dx);
        energy = l2_energy(&rho, grid.dx);
    }

    let summary = RunSummary {
        initial_mass: mass,
        injected: 0.0,
        exited: 0.0,
        final_mass: mass,
        audit_residual: 0.0,
        peak_mass: mass,
        emptying: None,
        files,
    };
    let mut extra = String::new();
    let _ = writeln!(extra, "l2_energy = {energy:.16e}");
    write_manifest(&opts.out_dir, scn, opts, &summary, "ok", &extra)?;
    Ok(summary)
}

/// Build the modal structure from the scenario (mode shape integral taken
/// discretely for tabulated shapes).
pub fn build_structure(scn: &Scenario) -> ModalStructure {
    let n = scn.grid.n1;
    let shape = if scn.structure.mode_shape.is_empty() {
        ModalStructure::two_span_sine(n)
    } else {
        scn.structure.mode_shape.clone()
    };
    let dx = scn.domain.size[0] / n as f64;
    let shape_sq: f64 = shape.iter().map(|p| p * p).sum::<f64>() * dx;
    let s = &scn.structure;
    ModalStructure {
        mode_shape: shape,
        modal_mass: s.deck_mass_per_area * s.width_m * scn.domain.length_m * shape_sq,
        freq_hz: s.freq_hz,
        damping_ratio: s.damping_ratio,
        deck_width: s.width_m,
        ped_mass: s.ped_mass,
        length: scn.domain.length_m,
    }
}

fn run_1d(scn: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let domain = scn.build_domain()?;
    let grid = domain.grid;
    let fd_dim = scn.fd.resolve()?;
    let fd = fd_dim.normalized();
    let cfg = scn.perception.resolve();
    let params = Solver1dParams { cfl: scn.run.cfl, dt_max: scn.run.dt_max, n_eta: scn.run.n_eta };
    let solver = Solver1d::new(domain, fd, cfg, params, scn.solver.periodic)?;
    let state0 = solver.initial_state(vec![scn.initial.uniform; grid.n1])?;

    let structure = build_structure(scn);
    let mode = match scn.structure.setup.as_str() {
        "imposed" => MotionMode::Imposed { accel_max: scn.structure.accel_max, beta: scn.structure.beta },
        "two-way" => MotionMode::TwoWay { force: &ZeroForce },
        _ => MotionMode::Motionless,
    };
    let coupled = CoupledParams {
        time_scale: scn.domain.length_m / fd_dim.v_max,
        t_end: scn.run.t_end,
        dump_every: scn.run.dump_every,
        probes: scn.structure.probes.clone(),
        motion: scn.structure.motion.resolve(),
        rho_jam: fd_dim.rho_max,
        max_steps: scn.run.max_steps,
    };
    let inlet = TimeSeries::new(scn.inlet.points.iter().map(|p| (p[0], p[1])).collect());

    let run = coupled_run(&solver, state0, Some(&structure), mode, &coupled, &inlet)?;

    let mut files = Vec::new();
    for (k, snap) in run.snapshots.iter().enumerate() {
        let name = format!("density_{k:04}.csv");
        let mut w = CsvWriter::create(
            &opts.out_dir.join(&name),
            &["t", "x", "rho", "v", "envelope"],
        )?;
        for i in 0..grid.n1 {
            w.row(&[snap.t, grid.cell_centre(i, 0)[0], snap.rho[i], snap.v[i], snap.envelope[i]])?;
        }
        w.finish()?;
        files.push(name);
    }

    let mut header = vec!["t".to_string()];
    for k in 0..coupled.probes.len() {
        header.push(format!("zdd_p{k}"));
        header.push(format!("rho_p{k}"));
        header.push(format!("v_p{k}"));
    }
    let hdr: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut w = CsvWriter::create(&opts.out_dir.join("probes.csv"), &hdr)?;
    for (t, cols) in &run.probe_rows {
        let mut row = vec![*t];
        for (z, r, v) in cols {
            row.extend_from_slice(&[*z, *r, *v]);
        }
        w.row(&row)?;
    }
    w.finish()?;
    files.push("probes.csv".to_string());

    let mut w = CsvWriter::create(
        &opts.out_dir.join("diagnostics.csv"),
        &["t", "total_mass", "l2_energy", "flux_in", "flux_out"],
    )?;
    for (k, ((t, m), (_, e))) in run.mass.iter().zip(&run.energy).enumerate() {
        let (qin, qout) = if k == 0 { (0.0, 0.0) } else { (run.boundary[k - 1].1, run.boundary[k - 1].2) };
        w.row(&[*t, *m, *e, qin, qout])?;
    }
    w.finish()?;
    files.push("diagnostics.csv".to_string());

    let initial_mass = run.mass.first().map_or(0.0, |p| p.1);
    let final_mass = run.mass.last().map_or(0.0, |p| p.1);
    let peak_mass = run.mass.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let residual = final_mass - (initial_mass + run.injected - run.exited);
    let summary = RunSummary {
        initial_mass,
        injected: run.injected,
        exited: run.exited,
        final_mass,
        audit_residual: residual,
        peak_mass,
        emptying: Some(emptying_time(&run.mass, scn.run.emptying_threshold)),
        files,
    };
    write_manifest(&opts.out_dir, scn, opts, &summary, "ok", "")?;
    Ok(summary)
}

fn run_2d(scn: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let domain = scn.build_domain()?;
    let grid = domain.grid;
    let fd_dim = scn.fd.resolve()?;
    let fd = fd_dim.normalized();
    let cfg = scn.perception.resolve();
    let potential = solve_potential(&domain, SolveOptions::default())?;
    let solver = Solver2d::new(domain, potential, fd, cfg, scn.run.cfl, scn.run.dt_max)?;
    let segments = resolve_flux_segments(scn, grid);
    let inlet = TimeSeries::new(scn.inlet.points.iter().map(|p| (p[0], p[1])).collect());

    let mut state = solver.initial_state();
    if scn.initial.uniform != 0.0 {
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                if !solver.domain.is_obstacle(i, j) {
                    state.rho.set(i, j, scn.initial.uniform);
                }
            }
        }
    }

    let area = grid.dx * grid.dx;
    let mut files = Vec::new();
    let mut diag_header = vec!["t".to_string(), "total_mass".to_string(), "l2_energy".to_string()];
    for s in &segments {
        diag_header.push(format!("Q_{}", s.name));
    }
    let dh: Vec<&str> = diag_header.iter().map(|s| s.as_str()).collect();
    let mut diag = CsvWriter::create(&opts.out_dir.join("diagnostics.csv"), &dh)?;
    let mut flux_header = vec!["t".to_string()];
    for s in &segments {
        flux_header.push(format!("Q_{}", s.name));
    }
    let fh: Vec<&str> = flux_header.iter().map(|s| s.as_str()).collect();
    let mut flux = CsvWriter::create(&opts.out_dir.join("flux.csv"), &fh)?;

    let mut mass_series: Vec<(f64, f64)> = Vec::new();
    let mut injected = 0.0f64;
    let mut exited = 0.0f64;
    let initial_mass = total_mass(&state.rho.values, area);
    let mut dump_no = 0usize;
    let mut next_dump = 0.0f64;

    let dump =
        |state: &crate::solver2d::State2d, dump_no: &mut usize, files: &mut Vec<String>| -> Result<()> {
            let name = format!("density_{:04}.csv", *dump_no);
            let mut w = CsvWriter::create(&opts.out_dir.join(&name), &["x1", "x2", "rho"])?;
            for j in 0..grid.n2 {
                for i in 0..grid.n1 {
                    let c = grid.cell_centre(i, j);
                    w.row(&[c[0], c[1], state.rho.at(i, j)])?;
                }
            }
            w.finish()?;
            files.push(name);
            *dump_no += 1;
            Ok(())
        };

    let record = |state: &crate::solver2d::State2d,
                  diag: &mut CsvWriter,
                  flux: &mut CsvWriter,
                  mass_series: &mut Vec<(f64, f64)>,
                  solver: &Solver2d,
                  segments: &[FluxSegment]|
     -> Result<()> {
        let m = total_mass(&state.rho.values, area);
        let e = l2_energy(&state.rho.values, area);
        mass_series.push((state.t, m));
        let mut row = vec![state.t, m, e];
        let mut frow = vec![state.t];
        for s in segments {
            let q = corridor_flux(&state.rho, &state.velocity, &solver.domain, s);
            row.push(q);
            frow.push(q);
        }
        diag.row(&row)?;
        flux.row(&frow)?;
        Ok(())
    };

    record(&state, &mut diag, &mut flux, &mut mass_series, &solver, &segments)?;
    dump(&state, &mut dump_no, &mut files)?;
    next_dump += scn.run.dump_every;

    let abort_dump = |state: &crate::solver2d::State2d, files: &mut Vec<String>| -> Result<()> {
        let mut w =
            CsvWriter::create(&opts.out_dir.join("density_abort.csv"), &["x1", "x2", "rho"])?;
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let c = grid.cell_centre(i, j);
                w.row(&[c[0], c[1], state.rho.at(i, j)])?;
            }
        }
        w.finish()?;
        files.push("density_abort.csv".to_string());
        Ok(())
    };

    while state.t < scn.run.t_end {
        if state.steps >= scn.run.max_steps {
            return Err(Error::StepLimit { t: state.t, steps: state.steps });
        }
        let inflow = inlet.eval(state.t);
        match solver.step(&mut state, inflow) {
            Ok(info) => {
                injected += info.injected;
                exited += info.exited.iter().sum::<f64>();
            }
            Err(e) => {
                abort_dump(&state, &mut files)?;
                let summary = RunSummary {
                    initial_mass,
                    injected,
                    exited,
                    final_mass: total_mass(&state.rho.values, area),
                    audit_residual: f64::NAN,
                    peak_mass: mass_series.iter().map(|p| p.1).fold(0.0f64, f64::max),
                    emptying: None,
                    files: files.clone(),
                };
                write_manifest(&opts.out_dir, scn, opts, &summary, &format!("error: {e}"), "")?;
                return Err(e);
            }
        }
        record(&state, &mut diag, &mut flux, &mut mass_series, &solver, &segments)?;
        if state.t >= next_dump || state.t >= scn.run.t_end {
            dump(&state, &mut dump_no, &mut files)?;
            while next_dump <= state.t {
                next_dump += scn.run.dump_every;
            }
        }
    }
    diag.finish()?;
    flux.finish()?;
    files.push("diagnostics.csv".to_string());
    files.push("flux.csv".to_string());

    if opts.dump_potential {
        write_potential(&opts.out_dir, &solver.potential, &mut files)?;
    }

    let final_mass = total_mass(&state.rho.values, area);
    let peak_mass = mass_series.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let residual = final_mass - (initial_mass + injected - exited);
    // reference inlet flux for normalising the corridor series: plateau
    // density times its walking speed (nondimensional, per unit width), and
    // in ped/s through one metre of inlet width
    let plateau = scn.inlet.points.iter().map(|p| p[1]).fold(0.0f64, f64::max);
    let mut extra = String::new();
    if plateau > 0.0 {
        let q_ref = plateau * solver.fd.speed(plateau)?;
        let rho_dim = plateau * fd_dim.rho_max;
        let q_dim = rho_dim * fd_dim.speed(rho_dim)?;
        let _ = writeln!(extra, "inlet_plateau_density = {plateau:.16e}");
        let _ = writeln!(extra, "inlet_flux_nondim_per_unit_width = {q_ref:.16e}");
        let _ = writeln!(extra, "inlet_flux_ped_per_s_per_m = {q_dim:.16e}");
    }
    let summary = RunSummary {
        initial_mass,
        injected,
        exited,
        final_mass,
        audit_residual: residual,
        peak_mass,
        emptying: Some(emptying_time(&mass_series, scn.run.emptying_threshold)),
        files,
    };
    write_manifest(&opts.out_dir, scn, opts, &summary, "ok", &extra)?;
    Ok(summary)
}

fn write_potential(dir: &Path, potential: &PotentialField, files: &mut Vec<String>) -> Result<()> {
    let grid = potential.u.grid;
    let mut w = CsvWriter::create(&dir.join("potential.csv"), &["x1", "x2", "u", "ed1", "ed2"])?;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let c = grid.cell_centre(i, j);
            let k = grid.idx(i, j);
            let e = potential.e_d.values[k];
            w.row(&[c[0], c[1], potential.u.values[k], e[0], e[1]])?;
        }
    }
    w.finish()?;
    files.push("potential.csv".to_string());
    Ok(())
}

fn write_manifest(
    dir: &Path,
    scn: &Scenario,
    opts: &RunOptions,
    summary: &RunSummary,
    status: &str,
    extra: &str,
) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# crowdflow run manifest");
    let _ = writeln!(text, "status = {status}");
    let _ = writeln!(text, "strategy = {}", scn.perception.strategy);
    let _ = writeln!(
        text,
        "seed = {}",
        opts.seed.map_or("none".to_string(), |s| s.to_string())
    );
    let _ = writeln!(text, "initial_mass = {:.16e}", summary.initial_mass);
    let _ = writeln!(text, "injected_mass = {:.16e}", summary.injected);
    let _ = writeln!(text, "exited_mass = {:.16e}", summary.exited);
    let _ = writeln!(text, "final_mass = {:.16e}", summary.final_mass);
    let _ = writeln!(text, "audit_residual = {:.16e}", summary.audit_residual);
    let _ = writeln!(text, "peak_mass = {:.16e}", summary.peak_mass);
    match summary.emptying {
        Some(EmptyingTime::At(t)) => {
            let _ = writeln!(text, "emptying_time = {t:.16e}");
        }
        Some(EmptyingTime::Unbounded { final_fraction }) => {
            let _ = writeln!(text, "emptying_time = unbounded (final fraction {final_fraction:.6e})");
        }
        None => {}
    }
    text.push_str(extra);
    let _ = writeln!(text, "files = {}", summary.files.join(", "));
    let _ = writeln!(text);
    let _ = writeln!(text, "## resolved scenario (run is reconstructible from this block)");
    text.push_str(&scn.to_toml_string());
    std::fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

/// Convenience used by the binary and tests: load a scenario from a preset
/// name or a TOML file path.
pub fn load_scenario(which: &str) -> Result<Scenario> {
    let path = Path::new(which);
    if path.exists() || which.ends_with(".toml") {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_toml_str(&text)
    } else {
        let mode: Mode = which.parse()?;
        Ok(Scenario::preset(mode))
    }
}
