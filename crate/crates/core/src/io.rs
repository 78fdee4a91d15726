//! CSV export of profiles, moments, collision layers, fields and reports.
//!
//! Numbers are written in Rust's shortest round-trip form, so identical data
//! always produce identical bytes.

use std::fs::File;
use std::path::Path;

use csv::Writer;

use crate::dynamics::{PerturbedTrajectory, TailField};
use crate::error::Result;
use crate::interaction::{InteractionSolution, SigmaTable};
use crate::nonlinearity::AdmissibilityReport;
use crate::pde::WaveField;
use crate::profile::{MomentSet, SolitonProfile};
use crate::validation::{BalanceReport, ComparisonReport, WeakResidualReport};

fn writer(path: &Path) -> Result<Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn rows<const N: usize>(path: &Path, header: [&str; N], data: impl Iterator<Item = [f64; N]>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in data {
        w.write_record(r.iter().map(|&v| num(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Key/value pairs, one per line.
pub fn write_key_values(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["key", "value"])?;
    for (k, v) in pairs {
        w.write_record([*k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile(path: &Path, p: &SolitonProfile) -> Result<()> {
    rows(
        path,
        ["eta", "omega"],
        p.grid.points().zip(&p.omega).map(|(e, &w)| [e, w]),
    )
}

pub fn write_moments(path: &Path, m: &MomentSet) -> Result<()> {
    let pairs = [
        ("a1", m.a1),
        ("a2", m.a2),
        ("a3", m.a3),
        ("a2_prime", m.a2_prime),
        ("a_g", m.a_g),
        ("a_gprime", m.a_gprime),
        ("a_g2", m.a_g2),
    ];
    let owned: Vec<(&str, String)> = pairs.iter().map(|(k, v)| (*k, num(*v))).collect();
    write_key_values(path, &owned)
}

pub fn write_interaction(path: &Path, s: &InteractionSolution) -> Result<()> {
    rows(
        path,
        ["tau", "sigma", "sigma_tilde", "S1", "S2", "phi11", "phi21"],
        s.tau.points().enumerate().map(|(k, tau)| {
            [
                tau,
                s.sigma[k],
                s.sigma_tilde[k],
                s.s1[k],
                s.s2[k],
                s.phi11[k],
                s.phi21[k],
            ]
        }),
    )
}

pub fn write_sigma_table(path: &Path, t: &SigmaTable) -> Result<()> {
    rows(
        path,
        ["sigma", "R0", "S1", "S2", "kappa1", "kappa2", "f", "Q", "dQ", "frak_F", "rho"],
        t.grid.points().enumerate().map(|(k, sigma)| {
            let st = &t.states[k];
            [
                sigma,
                t.conv[k].r0,
                st.s[0],
                st.s[1],
                st.kappa[0],
                st.kappa[1],
                t.f[k],
                t.q[k],
                t.dq[k],
                t.frak_f[k],
                t.rho[k],
            ]
        }),
    )
}

pub fn write_admissibility(path: &Path, rep: &AdmissibilityReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["check", "passed", "detail"])?;
    for c in &rep.checks {
        w.write_record([c.name, if c.passed { "true" } else { "false" }, c.detail.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_interaction_summary(path: &Path, s: &InteractionSolution) -> Result<()> {
    let g = &s.collision.geometry;
    let n = s.sigma_tilde.len();
    let pairs = vec![
        ("theta", num(g.theta)),
        ("t_star", num(g.t_star)),
        ("x_star", num(g.x_star)),
        ("psi_dot", num(g.psi_dot)),
        ("sigma_tilde_minus", num(s.sigma_tilde[0])),
        ("sigma_tilde_plus", num(s.sigma_tilde[n - 1])),
        ("phi11_plus", num(s.phase_limits[0])),
        ("phi21_plus", num(s.phase_limits[1])),
        ("warnings", s.warnings.join("; ")),
    ];
    write_key_values(path, &pairs)
}

pub fn write_field(path: &Path, f: &WaveField) -> Result<()> {
    rows(path, ["x", "u"], (0..f.n()).map(|j| [f.x(j), f.u[j]]))
}

/// One CSV per snapshot plus `snapshots.csv` listing them.
pub fn write_snapshots(dir: &Path, snaps: &[WaveField]) -> Result<()> {
    let mut w = writer(&dir.join("snapshots.csv"))?;
    w.write_record(["index", "t", "mass", "momentum", "file"])?;
    for (k, s) in snaps.iter().enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        write_field(&dir.join(&name), s)?;
        let (m, p) = s.invariants();
        w.write_record([k.to_string(), num(s.t), num(m), num(p), name])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, tr: &PerturbedTrajectory) -> Result<()> {
    rows(
        path,
        ["t", "A", "beta", "phi", "Fbar"],
        (0..tr.t.len()).map(|k| [tr.t[k], tr.a[k], tr.beta[k], tr.phi[k], tr.fbar[k]]),
    )
}

/// Long format: one row per `(t, x)`.
pub fn write_tail(path: &Path, tail: &TailField) -> Result<()> {
    rows(
        path,
        ["t", "x", "u_minus"],
        tail.t.iter().enumerate().flat_map(|(k, &t)| {
            tail.x
                .iter()
                .enumerate()
                .map(move |(j, &x)| [t, x, tail.u[k][j]])
        }),
    )
}

pub fn write_residuals(path: &Path, reports: &[WeakResidualReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["epsilon", "psi_id", "t", "residual_eq5", "residual_eq6"])?;
    for rep in reports {
        for r in &rep.rows {
            w.write_record([num(rep.eps), r.psi_id.to_string(), num(r.t), num(r.mass), num(r.energy)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per test function: maxima for every `ε` and the fitted orders.
pub fn write_residual_summary(
    path: &Path,
    reports: &[WeakResidualReport],
    orders: &[(Option<f64>, Option<f64>)],
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["psi_id", "epsilon", "max_eq5", "max_eq6", "order_eq5", "order_eq6"])?;
    let fmt = |o: Option<f64>| o.map(num).unwrap_or_else(|| "nan".into());
    for (j, &(o5, o6)) in orders.iter().enumerate() {
        for rep in reports {
            w.write_record([
                j.to_string(),
                num(rep.eps),
                num(rep.max_mass[j]),
                num(rep.max_energy[j]),
                fmt(o5),
                fmt(o6),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_balance(path: &Path, reports: &[BalanceReport]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["epsilon", "t", "mass", "momentum", "first_moment", "energy_moment"])?;
    for rep in reports {
        for (t, d) in rep.t.iter().zip(&rep.drifts) {
            w.write_record([num(rep.eps), num(*t), num(d[0]), num(d[1]), num(d[2]), num(d[3])])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison(path: &Path, rep: &ComparisonReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "source", "rank", "x", "amplitude", "merged"])?;
    for c in &rep.checkpoints {
        for (k, &(x, a)) in c.pde_peaks.iter().enumerate() {
            w.write_record([num(c.t), "pde".into(), k.to_string(), num(x), num(a), c.merged.to_string()])?;
        }
        if let Some(m) = &c.model_peaks {
            for (k, &(x, a)) in m.iter().enumerate() {
                w.write_record([num(c.t), "model".into(), k.to_string(), num(x), num(a), c.merged.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
