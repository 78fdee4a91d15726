//! Scenario drivers.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gkdv_core::dynamics::{
    critical_time, evolve_one_phase, solve_tail, LocalForce, LogisticLaw, TailModel,
};
use gkdv_core::interaction::{Collision, InteractionConfig, InteractionSolution, SolveOptions};
use gkdv_core::io;
use gkdv_core::nonlinearity::{check_terms, PowerTerm};
use gkdv_core::pde::{evolve, SolverConfig, WaveField};
use gkdv_core::profile::identity_residuals;
use gkdv_core::validation::{
    balance_laws, compare_pde_ansatz, default_test_functions, fastest_speed, interaction_times,
    residual_order, weak_residual, CollisionAnsatz, PdeGrid, QuadratureOptions, TestFunction,
};
use gkdv_core::{Error, Nonlinearity, Result, SolitonProfile};

use crate::config::{Config, GridConfig, TailKind};

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::Inadmissible(_) => 2,
        Error::Regime(_) => 3,
        Error::Numerical(_) => 4,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

pub struct Context {
    out: PathBuf,
    config_text: String,
    seed: u64,
    verbose: bool,
    outputs: Vec<String>,
    warnings: Vec<String>,
    timings: Vec<(String, f64)>,
    clock: Instant,
}

impl Context {
    pub fn new(out: PathBuf, config_text: String, seed: u64, verbose: bool) -> Self {
        Self {
            out,
            config_text,
            seed,
            verbose,
            outputs: Vec::new(),
            warnings: Vec::new(),
            timings: Vec::new(),
            clock: Instant::now(),
        }
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        self.outputs.push(name.to_string());
        Ok(self.out.join(name))
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{:8.3}s] {}", self.clock.elapsed().as_secs_f64(), msg.as_ref());
        }
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    fn lap(&mut self, stage: &str, start: Instant) {
        self.timings.push((stage.to_string(), start.elapsed().as_secs_f64()));
        self.log(format!("{stage} done"));
    }

    pub fn finish(&mut self, scenario: &str, err: Option<&Error>) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let mut pairs = vec![
            ("tool", "gkdv".to_string()),
            ("version", env!("CARGO_PKG_VERSION").to_string()),
            ("scenario", scenario.to_string()),
            ("seed", self.seed.to_string()),
            ("status", err.map(|e| format!("error: {e}")).unwrap_or_else(|| "ok".into())),
            ("outputs", self.outputs.join(";")),
            ("warnings", self.warnings.join(";")),
            ("config", self.config_text.clone()),
        ];
        if let Some(e) = err {
            pairs.push(("exit_code", exit_code(e).to_string()));
        }
        io::write_key_values(&self.out.join("manifest.csv"), &pairs)?;
        let mut w = csv::Writer::from_path(self.out.join("timings.csv"))?;
        w.write_record(["stage", "seconds"])?;
        for (s, t) in &self.timings {
            w.write_record([s.clone(), t.to_string()])?;
        }
        w.write_record(["total".to_string(), self.clock.elapsed().as_secs_f64().to_string()])?;
        w.flush()?;
        Ok(())
    }
}

fn missing(section: &str) -> Error {
    Error::InvalidInput(format!("config has no [{section}] section"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive (got {v})")))
    }
}

fn grid(g: &GridConfig) -> PdeGrid {
    PdeGrid {
        x0: g.x0,
        length: g.length,
        n: g.n,
    }
}

fn pair(nl: Nonlinearity, a1: f64, a2: f64, x1: f64, x2: f64) -> Result<InteractionConfig> {
    InteractionConfig::new(nl, a1, a2, x1, x2)
}

pub fn validate_nl(cfg: &Config, ctx: &mut Context) -> Result<()> {
    let nc = &cfg.nonlinearity;
    let terms: Vec<PowerTerm> = match (&nc.kappa, &nc.terms) {
        (Some(k), None) => vec![PowerTerm::new(1.0 / (k + 1.0), k - 1.0)],
        (None, Some(t)) => t.iter().map(|t| PowerTerm::new(t.coeff, t.exponent)).collect(),
        _ => return nc.build().map(|_| ()),
    };
    let start = Instant::now();
    let report = check_terms(&terms, nc.u_max);
    io::write_admissibility(&ctx.path("admissibility.csv")?, &report)?;
    if !report.is_admissible() {
        let names: Vec<&str> = report.failures().iter().map(|c| c.name).collect();
        return Err(Error::Inadmissible(names.join(", ")));
    }
    let nl = nc.build()?;
    let spec = cfg.validate_nl.clone();
    let mut amps = spec.as_ref().map(|s| s.amplitudes.clone()).unwrap_or_default();
    if let Some(s) = &spec {
        let [lo, hi] = s.amplitude_range;
        positive("amplitude_range[0]", lo)?;
        if !(hi > lo) {
            return Err(Error::InvalidInput("amplitude_range must be increasing".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        for _ in 0..s.random_amplitudes {
            let u: f64 = rng.gen();
            amps.push(lo * (hi / lo).powf(u));
        }
    }
    if amps.is_empty() {
        amps = vec![1.0];
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(ctx.path("identities.csv")?)?;
    w.write_record(["amplitude", "speed", "beta", "r_speed", "r_energy", "r_virial", "r_combined", "r_derivative"])?;
    for a in amps {
        positive("amplitude", a)?;
        if a > nl.u_max() {
            return Err(Error::InvalidInput(format!("amplitude {a} exceeds u_max")));
        }
        let p = SolitonProfile::solve(&nl, a)?;
        let r = identity_residuals(&nl, a, &p.moments(&nl)?);
        let mut rec = vec![a, p.speed, p.beta];
        rec.extend(r.as_array());
        w.write_record(rec.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    ctx.lap("validate-nl", start);
    Ok(())
}

pub fn profile(cfg: &Config, ctx: &mut Context) -> Result<()> {
    let nl = cfg.nonlinearity.build()?;
    let pc = cfg.profile.as_ref().ok_or_else(|| missing("profile"))?;
    let start = Instant::now();
    let p = match (pc.eta_max, pc.points) {
        (None, None) => SolitonProfile::solve(&nl, pc.amplitude)?,
        (e, n) => SolitonProfile::solve_with(
            &nl,
            pc.amplitude,
            e.unwrap_or(gkdv_core::profile::DEFAULT_ETA_MAX),
            n.unwrap_or(gkdv_core::profile::DEFAULT_POINTS),
        )?,
    };
    let m = p.moments(&nl)?;
    ctx.lap("profile", start);
    io::write_profile(&ctx.path("profile.csv")?, &p)?;
    io::write_moments(&ctx.path("moments.csv")?, &m)?;
    let f = |v: f64| format!("{v}");
    io::write_key_values(
        &ctx.path("profile_summary.csv")?,
        &[
            ("amplitude", f(p.amplitude)),
            ("speed", f(p.speed)),
            ("beta", f(p.beta)),
            ("decay_rate", f(p.decay_rate)),
            ("eta_max", f(p.eta_max())),
            ("points", p.omega.len().to_string()),
        ],
    )?;
    Ok(())
}

fn solve_collision(
    ic: InteractionConfig,
    opts: SolveOptions,
    ctx: &mut Context,
) -> Result<InteractionSolution> {
    let start = Instant::now();
    let sol = InteractionSolution::solve(Collision::new(ic)?, opts)?;
    ctx.lap("collision", start);
    for w in &sol.warnings {
        ctx.warn(w.clone());
    }
    Ok(sol)
}

pub fn collide(cfg: &Config, ctx: &mut Context) -> Result<()> {
    let nl = cfg.nonlinearity.build()?;
    let cc = cfg.collide.as_ref().ok_or_else(|| missing("collide"))?;
    let ic = pair(nl, cc.a1, cc.a2, cc.x1_0, cc.x2_0)?;
    let mut opts = SolveOptions::default();
    if let Some(s) = cc.sigma_step {
        positive("sigma_step", s)?;
        opts.sigma_step = s;
    }
    if let Some(s) = cc.tau_step {
        positive("tau_step", s)?;
        opts.tau_step = s;
    }
    let theta = ic.geometry().theta;
    let sol = match solve_collision(ic, opts, ctx) {
        Ok(s) => s,
        Err(e) => {
            if matches!(e, Error::Regime(_)) {
                ctx.warn(format!("no collision layer for theta = {theta}: {e}"));
            }
            return Err(e);
        }
    };
    io::write_interaction(&ctx.path("interaction.csv")?, &sol)?;
    io::write_interaction_summary(&ctx.path("interaction_summary.csv")?, &sol)?;
    io::write_sigma_table(&ctx.path("sigma_table.csv")?, &sol.table)?;
    if let Some(eps) = cc.eps {
        positive("eps", eps)?;
        let g = cc
            .grid
            .ok_or_else(|| Error::InvalidInput("[collide] eps needs a grid".into()))?;
        for (k, &t) in cc.field_times.iter().enumerate() {
            let f = sol.assemble(eps, t, g.x0, g.length, g.n)?;
            io::write_field(&ctx.path(&format!("field_{k:03}.csv"))?, &f)?;
        }
    }
    Ok(())
}

pub fn simulate(cfg: &Config, ctx: &mut Context) -> Result<()> {
    let nl = cfg.nonlinearity.build()?;
    let sc = cfg.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    positive("eps", sc.eps)?;
    positive("length", sc.grid.length)?;
    if sc.solitons.is_empty() {
        return Err(Error::InvalidInput("[simulate] needs at least one soliton".into()));
    }
    let start = Instant::now();
    let mut parts = Vec::new();
    for s in &sc.solitons {
        parts.push((SolitonProfile::solve(&nl, s.amplitude)?, s.position));
    }
    let l = sc.grid.length;
    let field = WaveField::from_fn(sc.grid.x0, l, sc.grid.n, sc.eps, 0.0, |x| {
        parts
            .iter()
            .map(|(p, c)| {
                let d = x - c;
                let d = d - l * (d / l).round();
                p.amplitude * p.omega_at(p.beta * d / sc.eps)
            })
            .sum()
    })?;
    let mut solver = SolverConfig::new(
        sc.dt.unwrap_or_else(|| SolverConfig::stable_dt(&nl, &field)),
        sc.t_end,
    );
    solver.snapshots = sc.snapshots.clone();
    solver.clamp_negative = sc.clamp_negative;
    solver.dealias = sc.dealias;
    let force = sc.force.map(|f| LocalForce::logistic(f.mu, f.alpha));
    let closure = force.as_ref().map(|f| f.as_pde_force());
    let snaps = evolve(
        &field,
        &nl,
        &solver,
        closure.as_ref().map(|c| c as &(dyn Fn(f64, f64, f64) -> f64 + Sync)),
    )?;
    ctx.lap("pde", start);
    let mut all = vec![field];
    all.extend(snaps);
    std::fs::create_dir_all(&ctx.out)?;
    io::write_snapshots(&ctx.out, &all)?;
    ctx.outputs.push("snapshots.csv".into());
    for k in 0..all.len() {
        ctx.outputs.push(format!("snapshot_{k:04}.csv"));
    }
    let min_amp = 0.5 * sc.solitons.iter().map(|s| s.amplitude).fold(f64::INFINITY, f64::min);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(ctx.path("peaks.csv")?)?;
    w.write_record(["t", "rank", "x", "amplitude"])?;
    for s in &all {
        let mut peaks = s.extract_solitons(min_amp);
        peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (k, (x, a)) in peaks.iter().enumerate() {
            w.write_record([format!("{}", s.t), k.to_string(), format!("{x}"), format!("{a}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn perturb(cfg: &Config, ctx: &mut Context) -> Result<()> {
    let nl = cfg.nonlinearity.build()?;
    let pc = cfg.perturb.as_ref().ok_or_else(|| missing("perturb"))?;
    positive("eps", pc.eps)?;
    positive("mu", pc.mu)?;
    positive("alpha", pc.alpha)?;
    positive("t_end", pc.t_end)?;
    let force = LocalForce::logistic(pc.mu, pc.alpha);
    let mut summary = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(ctx.path("perturb_summary.csv")?)?;
    summary.write_record([
        "index",
        "a0",
        "a_final",
        "a_star",
        "max_rel_law_error",
        "t_critical_estimate",
        "t_critical_measured",
    ])?;
    let f = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_else(|| "nan".into());
    for (k, &a0) in pc.amplitudes.iter().enumerate() {
        positive("amplitude", a0)?;
        let start = Instant::now();
        let traj = evolve_one_phase(&nl, &force, a0, 0.0, pc.t_end, pc.n_out)?;
        ctx.lap(&format!("trajectory {k}"), start);
        io::write_trajectory(&ctx.path(&format!("trajectory_{k}.csv"))?, &traj)?;
        let law = LogisticLaw::new(&nl, a0, pc.mu, pc.alpha).ok();
        let law_err = law.as_ref().map(|l| {
            traj.t
                .iter()
                .zip(&traj.a)
                .map(|(&t, &a)| ((a - l.at(t)) / l.at(t)).abs())
                .fold(0.0, f64::max)
        });
        if let Some(tc) = &pc.tail {
            let start = Instant::now();
            let phi_end = *traj.phi.last().unwrap_or(&0.0);
            if tc.nx < 2 || tc.nt < 2 {
                return Err(Error::InvalidInput("[perturb.tail] needs nx, nt >= 2".into()));
            }
            let xs: Vec<f64> = (0..tc.nx).map(|j| phi_end * j as f64 / (tc.nx - 1) as f64).collect();
            let ts: Vec<f64> = (0..tc.nt).map(|j| pc.t_end * j as f64 / (tc.nt - 1) as f64).collect();
            let model = match tc.model {
                TailKind::Linear => TailModel::Linear,
                TailKind::Retained => TailModel::Retained { eps: pc.eps },
            };
            let tail = solve_tail(&nl, &force, &traj, &xs, &ts, model)?;
            ctx.lap(&format!("tail {k}"), start);
            io::write_tail(&ctx.path(&format!("tail_{k}.csv"))?, &tail)?;
        }
        let (est, meas) = if pc.critical_time {
            let c = critical_time(&nl, pc.eps, pc.mu, pc.alpha, a0)?;
            (Some(c.estimate), c.measured)
        } else {
            (None, None)
        };
        summary.write_record([
            k.to_string(),
            format!("{a0}"),
            format!("{}", traj.a.last().unwrap()),
            f(law.map(|l| l.a_star)),
            f(law_err),
            f(est),
            f(meas),
        ])?;
    }
    summary.flush()?;
    Ok(())
}

pub fn validate(cfg: &Config, ctx: &mut Context) -> Result<()> {
    let nl = cfg.nonlinearity.build()?;
    let vc = cfg.validate.as_ref().ok_or_else(|| missing("validate"))?;
    if vc.eps.len() < 3 {
        return Err(Error::InvalidInput("[validate] needs at least three eps values".into()));
    }
    for &e in &vc.eps {
        positive("eps", e)?;
    }
    if vc.n_times < 2 {
        return Err(Error::InvalidInput("[validate] n_times must be >= 2".into()));
    }
    let ic = pair(nl.clone(), vc.a1, vc.a2, vc.x1_0, vc.x2_0)?;
    let sol = match solve_collision(ic.clone(), SolveOptions::default(), ctx) {
        Ok(s) => Some(s),
        Err(Error::Regime(msg)) => {
            ctx.warn(format!("collision model unavailable: {msg}"));
            if let Some(cc) = &vc.compare {
                let rep = compare_pde_ansatz(&ic, None, cc.eps, &cc.checkpoints, &grid(&cc.grid))?;
                write_comparison(ctx, &rep)?;
            }
            return Err(Error::Regime(msg));
        }
        Err(e) => return Err(e),
    };
    let sol = sol.unwrap();
    let t_end = vc.t_end.unwrap_or(2.0 * sol.collision.geometry.t_star);
    let tests: Vec<TestFunction> = match &vc.tests {
        Some(ts) => ts.iter().map(|t| TestFunction::new(t.center, t.width, t.tilt)).collect(),
        None => default_test_functions(&ic, t_end),
    };
    let opts = QuadratureOptions::default();
    let mut reports = Vec::new();
    let mut balances = Vec::new();
    for &eps in &vc.eps {
        let start = Instant::now();
        let fam = CollisionAnsatz {
            solution: &sol,
            eps,
        };
        let ts = interaction_times(&sol, eps, vc.tau_half, vc.n_times);
        reports.push(weak_residual(&fam, &nl, &tests, &ts, fastest_speed(&sol), None, &opts)?);
        balances.push(balance_laws(&fam, &nl, &ts, fastest_speed(&sol), &opts));
        ctx.lap(&format!("residuals eps={eps}"), start);
    }
    let orders: Vec<(Option<f64>, Option<f64>)> = (0..tests.len())
        .map(|j| {
            let m5: Vec<f64> = reports.iter().map(|r| r.max_mass[j]).collect();
            let m6: Vec<f64> = reports.iter().map(|r| r.max_energy[j]).collect();
            (residual_order(&vc.eps, &m5), residual_order(&vc.eps, &m6))
        })
        .collect();
    io::write_residuals(&ctx.path("residuals.csv")?, &reports)?;
    io::write_residual_summary(&ctx.path("residual_summary.csv")?, &reports, &orders)?;
    io::write_balance(&ctx.path("balance.csv")?, &balances)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(ctx.path("balance_summary.csv")?)?;
    w.write_record(["law", "epsilon", "max_drift", "order"])?;
    for (k, name) in ["mass", "momentum", "first_moment", "energy_moment"].iter().enumerate() {
        let m: Vec<f64> = balances.iter().map(|b| b.max_abs()[k]).collect();
        let o = residual_order(&vc.eps, &m).map(|o| format!("{o}")).unwrap_or_else(|| "nan".into());
        for (b, v) in balances.iter().zip(&m) {
            w.write_record([name.to_string(), format!("{}", b.eps), format!("{v}"), o.clone()])?;
        }
    }
    w.flush()?;
    if let Some(cc) = &vc.compare {
        let start = Instant::now();
        let rep = compare_pde_ansatz(&ic, Some(&sol), cc.eps, &cc.checkpoints, &grid(&cc.grid))?;
        ctx.lap("comparison", start);
        write_comparison(ctx, &rep)?;
    }
    Ok(())
}

fn write_comparison(ctx: &mut Context, rep: &gkdv_core::validation::ComparisonReport) -> Result<()> {
    io::write_comparison(&ctx.path("comparison.csv")?, rep)?;
    let pair = |v: Option<[f64; 2]>| {
        v.map(|a| format!("{};{}", a[0], a[1])).unwrap_or_else(|| "nan".into())
    };
    io::write_key_values(
        &ctx.path("comparison_summary.csv")?,
        &[
            ("epsilon", format!("{}", rep.eps)),
            ("amplitude_errors", pair(rep.amplitude_errors)),
            ("pde_phase_shifts", pair(rep.pde_phase_shifts)),
            ("model_phase_shifts", pair(rep.model_phase_shifts)),
            ("mass_drift", format!("{}", rep.mass_drift)),
        ],
    )
}
