use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use phasenls::integrator::Snapshot;
use phasenls::{ObservableRecord, Trajectory, WaveFunction};

use crate::config::{coordinate_names, RunConfig};

/// 17 significant digits, enough to round-trip an `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(dims: usize, two_body: bool) -> Vec<String> {
    let per_axis = |name: &str| -> Vec<String> {
        if dims == 1 {
            vec![name.to_string()]
        } else {
            (1..=dims).map(|a| format!("{name}_{a}")).collect()
        }
    };
    let mut h: Vec<String> = [
        "t",
        "norm",
        "energy",
        "kinetic_R",
        "kinetic_S",
        "nonlinear",
        "potential",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for name in ["x_mean", "p_mean", "I1", "I2"] {
        h.extend(per_axis(name));
    }
    h.push("continuity_residual".into());
    if two_body {
        h.push("correlation_defect".into());
    }
    h
}

fn row(r: &ObservableRecord, two_body: bool) -> Vec<String> {
    let p = &r.energy_parts;
    let mut out: Vec<String> = [
        r.t,
        r.norm,
        r.energy_total,
        p.kinetic_r,
        p.kinetic_s,
        p.nonlinear,
        p.potential,
    ]
    .into_iter()
    .map(num)
    .collect();
    for v in [&r.x_mean, &r.p_mean, &r.i1, &r.i2] {
        out.extend(v.iter().map(|&x| num(x)));
    }
    out.push(num(r.continuity_residual));
    if two_body {
        out.push(num(r.correlation_defect.unwrap_or(f64::NAN)));
    }
    out
}

pub fn write_observables(
    path: &Path,
    traj: &Trajectory,
    dims: usize,
    two_body: bool,
    stride: usize,
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header(dims, two_body))?;
    let last = traj.records.len().saturating_sub(1);
    // The final record is always kept so the file ends at the last time reached.
    for (i, r) in traj.records.iter().enumerate() {
        if i % stride == 0 || i == last {
            w.write_record(row(r, two_body))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_state(path: &Path, psi: &WaveFunction, eps_rel: f64) -> Result<()> {
    let grid = psi.grid();
    let hydro = psi.hydro_view(eps_rel);
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut h: Vec<&str> = coordinate_names(grid.dims()).to_vec();
    h.extend(["re", "im", "rho", "delta_S"]);
    w.write_record(&h)?;
    for (i, z) in psi.values().iter().enumerate() {
        let mut r: Vec<String> = (0..grid.dims())
            .map(|a| num(grid.coordinate(i, a)))
            .collect();
        r.extend([
            num(z.re),
            num(z.im),
            num(hydro.rho.values()[i]),
            num(hydro.delta_s.values()[i]),
        ]);
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SnapshotEntry {
    file: String,
    t: f64,
}

/// Run facts that are not part of the configuration.
#[derive(Serialize)]
pub struct Summary {
    pub version: &'static str,
    /// `completed`, or the failure message when the run stopped early.
    pub status: String,
    pub t_reached: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub seam_decayed: bool,
    snapshots: Vec<SnapshotEntry>,
}

/// Writes every output of a (possibly partial) run into `dir`.
pub fn write_run(dir: &Path, config: &RunConfig, traj: &Trajectory, status: String) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let eps_rel = config
        .model
        .as_ref()
        .map(|m| m.eps_rel)
        .or(config.two_body.as_ref().map(|m| m.eps_rel))
        .unwrap_or(0.0);
    write_observables(
        &dir.join("observables.csv"),
        traj,
        config.grid.dims(),
        config.two_body.is_some(),
        config.outputs.observable_stride,
    )?;
    let mut snapshots = Vec::new();
    let mut write = |name: String, s_t: f64, psi: &WaveFunction| -> Result<()> {
        write_state(&dir.join(&name), psi, eps_rel)?;
        snapshots.push(SnapshotEntry { file: name, t: s_t });
        Ok(())
    };
    for (k, Snapshot { t, psi, .. }) in traj.snapshots.iter().enumerate() {
        write(format!("psi_{k}.csv"), *t, psi)?;
    }
    let t_reached = traj.records.last().map_or(0.0, |r| r.t);
    write("psi_final.csv".into(), t_reached, &traj.final_state)?;

    let meta = serde_json::to_string_pretty(config)?;
    fs::write(dir.join("run_meta.json"), meta + "\n")?;
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        status,
        t_reached,
        accepted_steps: traj.stats.accepted,
        rejected_steps: traj.stats.rejected,
        seam_decayed: traj.records.iter().all(|r| r.seam_decayed),
        snapshots,
    };
    fs::write(
        dir.join("run_summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn headers_by_shape() {
        assert_eq!(
            header(1, false).join(","),
            "t,norm,energy,kinetic_R,kinetic_S,nonlinear,potential,x_mean,p_mean,I1,I2,continuity_residual"
        );
        let h = header(2, true);
        assert!(h.contains(&"I2_2".to_string()));
        assert_eq!(h.last().unwrap(), "correlation_defect");
    }
}
