//! Comparison of two run directories: emptying-time ratios, corridor flux
//! peaks, density differences and speed-curve crossings.

use crate::diagnostics::{emptying_time, lowpass, EmptyingTime};
use crate::error::{Error, Result};
use crate::output::read_csv;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    EmptyingTime,
    FluxPeaks,
    DensityDiff,
    SpeedCrossing,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Metric> {
        match s {
            "emptying-time" => Ok(Metric::EmptyingTime),
            "flux-peaks" => Ok(Metric::FluxPeaks),
            "density-diff" => Ok(Metric::DensityDiff),
            "speed-crossing" => Ok(Metric::SpeedCrossing),
            other => Err(Error::Parse(format!(
                "unknown metric '{other}' (emptying-time|flux-peaks|density-diff|speed-crossing)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub lines: Vec<String>,
}

pub fn compare(dir_a: &Path, dir_b: &Path, metric: Metric, threshold: f64) -> Result<CompareReport> {
    match metric {
        Metric::EmptyingTime => emptying_cmp(dir_a, dir_b, threshold),
        Metric::FluxPeaks => flux_cmp(dir_a, dir_b),
        Metric::DensityDiff => density_cmp(dir_a, dir_b),
        Metric::SpeedCrossing => crossing_cmp(dir_a, dir_b),
    }
}

fn mass_series(dir: &Path) -> Result<Vec<(f64, f64)>> {
    let (header, rows) = read_csv(&dir.join("diagnostics.csv"))?;
    let t_col = header.iter().position(|h| h == "t").unwrap_or(0);
    let m_col = header
        .iter()
        .position(|h| h == "total_mass")
        .ok_or_else(|| Error::Parse("diagnostics.csv lacks total_mass".into()))?;
    Ok(rows.iter().map(|r| (r[t_col], r[m_col])).collect())
}

fn emptying_cmp(dir_a: &Path, dir_b: &Path, threshold: f64) -> Result<CompareReport> {
    let mut lines = Vec::new();
    let ta = emptying_time(&mass_series(dir_a)?, threshold);
    let tb = emptying_time(&mass_series(dir_b)?, threshold);
    let show = |e: &EmptyingTime| match e {
        EmptyingTime::At(t) => format!("{t:.6}"),
        EmptyingTime::Unbounded { final_fraction } => {
            format!("unbounded (final fraction {final_fraction:.3e})")
        }
    };
    lines.push(format!("emptying_time_a = {}", show(&ta)));
    lines.push(format!("emptying_time_b = {}", show(&tb)));
    if let (EmptyingTime::At(a), EmptyingTime::At(b)) = (ta, tb) {
        if b > 0.0 {
            lines.push(format!("ratio_a_over_b = {:.6}", a / b));
        }
    }
    Ok(CompareReport { lines })
}

fn flux_cmp(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let (ha, ra) = read_csv(&dir_a.join("flux.csv"))?;
    let (hb, rb) = read_csv(&dir_b.join("flux.csv"))?;
    if ha != hb {
        return Err(Error::IncompatibleGrids(format!(
            "flux columns differ: {ha:?} vs {hb:?}"
        )));
    }
    let mut lines = Vec::new();
    for c in 1..ha.len() {
        let peak = |rows: &[Vec<f64>]| -> (f64, f64) {
            let vals: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let w = (vals.len() / 10).max(3) | 1;
            let f = lowpass(&vals, w);
            let (mut pt, mut pv) = (0.0, f64::NEG_INFINITY);
            for (k, &v) in f.iter().enumerate() {
                if v > pv {
                    pv = v;
                    pt = rows[k][0];
                }
            }
            (pt, pv)
        };
        let (ta, va) = peak(&ra);
        let (tb, vb) = peak(&rb);
        lines.push(format!(
            "{}: peak_a = {:.6e} at t = {:.4}, peak_b = {:.6e} at t = {:.4}, ratio = {:.4}",
            ha[c],
            va,
            ta,
            vb,
            tb,
            if vb != 0.0 { va / vb } else { f64::INFINITY }
        ));
    }
    Ok(CompareReport { lines })
}

fn last_snapshot(dir: &Path) -> Result<std::path::PathBuf> {
    let mut best: Option<std::path::PathBuf> = None;
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("density_") && name.ends_with(".csv") && !name.contains("abort") {
            if best.as_ref().map_or(true, |b| p > *b) {
                best = Some(p.clone());
            }
        }
    }
    best.ok_or_else(|| Error::Parse(format!("no density snapshots in {dir:?}")))
}

fn density_cmp(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let (ha, ra) = read_csv(&last_snapshot(dir_a)?)?;
    let (hb, rb) = read_csv(&last_snapshot(dir_b)?)?;
    if ha != hb || ra.len() != rb.len() {
        return Err(Error::IncompatibleGrids(format!(
            "snapshots differ in shape: {} vs {} rows",
            ra.len(),
            rb.len()
        )));
    }
    let rho_col = ha
        .iter()
        .position(|h| h == "rho")
        .ok_or_else(|| Error::Parse("snapshot lacks rho column".into()))?;
    let mut max_diff = 0.0f64;
    let mut l2 = 0.0f64;
    for (a, b) in ra.iter().zip(&rb) {
        let d = a[rho_col] - b[rho_col];
        max_diff = max_diff.max(d.abs());
        l2 += d * d;
    }
    let lines = vec![
        format!("cells = {}", ra.len()),
        format!("max_abs_density_diff = {:.6e}", max_diff),
        format!("l2_density_diff = {:.6e}", (l2 / ra.len() as f64).sqrt()),
    ];
    Ok(CompareReport { lines })
}

fn crossing_cmp(dir_a: &Path, dir_b: &Path) -> Result<CompareReport> {
    let (ha, ra) = read_csv(&last_snapshot(dir_a)?)?;
    let (hb, rb) = read_csv(&last_snapshot(dir_b)?)?;
    let v_a = ha.iter().position(|h| h == "v");
    let v_b = hb.iter().position(|h| h == "v");
    let (Some(va), Some(vb)) = (v_a, v_b) else {
        return Err(Error::Parse("speed-crossing needs 1D snapshots with a v column".into()));
    };
    if ra.len() != rb.len() {
        return Err(Error::IncompatibleGrids("snapshots differ in length".into()));
    }
    let x_col = ha.iter().position(|h| h == "x").unwrap_or(1);
    let mut crossings = Vec::new();
    let noise = 1e-10;
    let mut prev: Option<(f64, f64)> = None;
    for (a, b) in ra.iter().zip(&rb) {
        let d = a[va] - b[vb];
        if let Some((px, pd)) = prev {
            if pd.abs() > noise && d.abs() > noise && pd.signum() != d.signum() {
                let x = px + (a[x_col] - px) * pd / (pd - d);
                crossings.push(x);
            }
        }
        prev = Some((a[x_col], d));
    }
    let mut lines = vec![
        format!("t_a = {:.6}, t_b = {:.6}", ra[0][0], rb[0][0]),
        format!("speed_curve_crossings = {}", crossings.len()),
    ];
    for (k, x) in crossings.iter().enumerate() {
        lines.push(format!("crossing_{k} at x = {x:.5}"));
    }
    Ok(CompareReport { lines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{run_scenario, RunOptions};
    use crate::scenario::{Mode, Scenario};

    #[test]
    fn identical_runs_compare_to_zero() {
        let mut scn = Scenario::preset(Mode::Station);
        scn.grid = crate::scenario::GridSpec { n1: 50, n2: 30 };
        scn.run.t_end = 0.4;
        let base = std::env::temp_dir().join("crowdflow_compare_test");
        let _ = std::fs::remove_dir_all(&base);
        let (da, db) = (base.join("a"), base.join("b"));
        for d in [&da, &db] {
            run_scenario(
                &scn,
                &RunOptions { out_dir: d.clone(), dump_potential: false, seed: None },
            )
            .unwrap();
        }
        let rep = compare(&da, &db, Metric::DensityDiff, 0.01).unwrap();
        assert!(rep.lines.iter().any(|l| l.contains("max_abs_density_diff = 0.0")), "{:?}", rep.lines);
        let rep = compare(&da, &db, Metric::EmptyingTime, 0.01).unwrap();
        assert_eq!(rep.lines[0], rep.lines[1].replace("_b", "_a"));
        let rep = compare(&da, &db, Metric::FluxPeaks, 0.01).unwrap();
        assert!(rep.lines.iter().all(|l| l.contains("ratio = 1.0000") || l.contains("ratio = inf")
            || l.contains("ratio = NaN") || !l.contains("ratio")), "{:?}", rep.lines);
        std::fs::remove_dir_all(&base).ok();
    }
}
