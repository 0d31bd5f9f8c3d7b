//! Command dispatch for the `fujita-lab` binary. Each command validates its
//! configuration, computes, and writes its artifacts into the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::blowup::{calibrate_amplitude, scan_threshold};
use crate::capacity::{capacity_exponent_fit, log_capacity_fit, CutoffPair};
use crate::config::{CapacityMode, Command, ExperimentConfig};
use crate::error::{Error, Result};
use crate::exponents::{ExponentReport, REPORT_COLUMNS};
use crate::mild::{solve_global_small, solve_local_lq};
use crate::report::{csv_writer, num};
use crate::semigroup::{
    critical_source, default_t_list, scaling_identity_check, smoothing_slope, weighted_critical_source,
    weighted_smoothing_check,
};

/// Runs one experiment and returns the paths written.
pub fn run(config: &ExperimentConfig, command: Command, out_dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    config.validate(command)?;
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| config.out.clone());
    fs::create_dir_all(&dir)?;
    let mut out = Artifacts { dir, written: Vec::new() };
    match command {
        Command::Exponents => exponents(config, &mut out)?,
        Command::TransformCheck => transform_check(config, &mut out)?,
        Command::SemigroupCheck => semigroup_check(config, &mut out)?,
        Command::MildSolve => mild_solve(config, &mut out)?,
        Command::BlowupScan => blowup_scan(config, &mut out)?,
        Command::CapacityFit => capacity_fit(config, &mut out)?,
        Command::LocalSolve => local_solve(config, &mut out)?,
    }
    Ok(out.written)
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }
}

fn exponents(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let mut ps = vec![cfg.params.p];
    ps.extend(&cfg.exponents.p_list);
    let reports: Vec<ExponentReport> = ps
        .iter()
        .map(|&p| ExponentReport::compute(&cfg.params.with_p(p), cfg.exponents.mass, cfg.exponents.r))
        .collect::<Result<_>>()?;
    let mut w = csv_writer(out.create("exponents.csv")?, &cfg.params.describe())?;
    w.write_record(REPORT_COLUMNS)?;
    for r in &reports {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

fn transform_check(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.params;
    let op = cfg.grid.operator(&params)?;
    let (u0, w) = cfg.data.fields(&op)?;
    let t = &cfg.transform;
    let mut times = t.times.clone();
    times.sort_by(f64::total_cmp);
    let bc = crate::blowup::BlowupConfig {
        t_max: *times.last().expect("validated"),
        dt_rel: t.dt_rel,
        dt_max: t.dt_rel,
        ..cfg.blowup.resolve()
    };
    let run = crate::blowup::integrate_nonlinear(&op, &u0, &w, &params, &bc, &times)?;
    if run.records.len() < 3 {
        return Err(Error::Config(format!("only {} of the requested times were reached", run.records.len())));
    }
    let (rt, rf): (Vec<f64>, Vec<_>) = run.records.into_iter().unzip();
    let w_profile = cfg.data.forcing_profile(&op)?;
    let samples = crate::transform::residual_check(&rt, &rf, |r| w_profile.eval(r), &params, &t.test_times)?;
    let mut wr = csv_writer(out.create("transform_residual.csv")?, &params.describe())?;
    wr.write_record(["t", "tau", "residual_l2", "reference_l2", "relative"])?;
    for s in samples {
        wr.write_record([num(s.t), num(s.tau), num(s.residual_l2), num(s.reference_l2), num(s.relative())])?;
    }
    wr.flush()?;
    Ok(())
}

fn semigroup_check(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.params;
    let s = &cfg.semigroup;
    let op = cfg.grid.operator(&params)?;
    let t_list = default_t_list(s.t_max, s.n_times);
    let mut w = csv_writer(out.create("semigroup_slopes.csv")?, &params.describe())?;
    w.write_record(["kind", "q1", "q2", "gamma", "fitted_slope", "theory_slope", "relative_error", "r_squared"])?;
    for &[a, b] in &s.pairs {
        let src = critical_source(&op, a)?;
        let st = smoothing_slope(&op, a, b, &src, &t_list)?;
        w.write_record([
            "plain".into(),
            num(a),
            num(b),
            num(0.0),
            num(st.fitted()),
            num(st.theory),
            num(st.relative_error()),
            num(st.fit.r_squared),
        ])?;
    }
    for &[q1, q2, g] in &s.weighted {
        let src = weighted_critical_source(&op, q1, g)?;
        let st = weighted_smoothing_check(&op, q1, q2, g, &src, &t_list)?;
        w.write_record([
            "weighted".into(),
            num(q1),
            num(q2),
            num(g),
            num(st.fitted()),
            num(st.theory),
            num(st.relative_error()),
            num(st.fit.r_squared),
        ])?;
    }
    w.flush()?;

    let (u0, _) = cfg.data.fields(&op)?;
    let src = if u0.max_abs() > 0.0 {
        u0
    } else {
        crate::grid::RadialField::from_profile(
            op.grid().clone(),
            params.n(),
            &crate::grid::Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 },
        )
    };
    let sc = scaling_identity_check(&op, s.scaling_lambda, s.scaling_t, &src)?;
    let mass0 = op.weighted_mass(&src.values);
    let mass1 = op.weighted_mass(&op.apply(&src, 1.0)?.values);
    let mut w = csv_writer(out.create("semigroup_invariants.csv")?, &params.describe())?;
    w.write_record(["check", "value", "nodes"])?;
    w.write_record(["scaling_discrepancy".into(), num(sc.discrepancy), sc.compared_nodes.to_string()])?;
    w.write_record([
        "mass_drift_unit_time".into(),
        num((mass1 - mass0).abs() / mass0.abs()),
        op.grid().len().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn mild_solve(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.params;
    let op = cfg.grid.operator(&params)?;
    let (u0, w) = cfg.data.fields(&op)?;
    let mc = cfg.mild.resolve(&params)?;
    let rep = solve_global_small(&op, &u0, &w, &params, &mc)?;
    let comment = format!("{} r={} mu={}", params.describe(), mc.r, mc.mu);
    let grid = mc.time_grid()?;
    rep.trajectory.write_csv(out.create("mild_trajectory.csv")?, &comment, mc.r, mc.mu, grid.outputs())?;
    rep.write_convergence_csv(out.create("picard.csv")?, &comment)?;
    let mut s = out.create("mild_summary.txt")?;
    writeln!(
        s,
        "converged={}\niterations={}\nresidual={}\nx_norm={}",
        rep.converged,
        rep.iterations(),
        num(rep.residual),
        num(rep.trajectory.x_norm)
    )?;
    if !rep.converged {
        return Err(Error::NotContracting { ratios: rep.ratios });
    }
    Ok(())
}

fn local_solve(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.params;
    let op = cfg.grid.operator(&params)?;
    let (u0, w) = cfg.data.fields(&op)?;
    let lc = cfg.local.resolve();
    let sol = solve_local_lq(&op, &u0, &w, &params, &lc)?;
    let comment = format!("{} q={}", params.describe(), lc.q);
    let traj = &sol.report.trajectory;
    let mut wr = csv_writer(out.create("local_trace.csv")?, &comment)?;
    wr.write_record(["t", "lq_norm"])?;
    for (t, n) in traj.times.iter().zip(traj.norm_trace(lc.q)) {
        wr.write_record([num(*t), num(n)])?;
    }
    wr.flush()?;
    sol.report.write_convergence_csv(out.create("picard.csv")?, &comment)?;
    let mut s = out.create("local_summary.txt")?;
    writeln!(
        s,
        "T={}\nalpha={}\nradius={}\nmax_jump={}\ncontinuous={}\nconverged={}",
        num(sol.t_final),
        num(sol.alpha),
        num(sol.radius),
        num(sol.max_jump),
        sol.continuous,
        sol.report.converged
    )?;
    Ok(())
}

fn blowup_scan(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.params;
    let b = &cfg.blowup;
    let op = cfg.grid.operator(&params)?;
    let (u0, mut w) = cfg.data.fields(&op)?;
    if b.calibrate {
        let cal = crate::blowup::BlowupConfig { t_max: b.calibrate_t_max, ..b.resolve() };
        let amp = calibrate_amplitude(&op, &u0, &w, &params.with_p(b.calibrate_p), &cal, &b.ladder())?
            .ok_or_else(|| Error::NoBracket { outcome: "no ladder amplitude blew up during calibration".into() })?;
        w = w.scaled(amp);
    }
    let rep = scan_threshold(&op, &u0, &w, &params, &b.p_grid, &b.resolve(), b.bisections)?;
    let comment = format!("{} amplitude={} t_max={}", params.describe(), rep.amplitude, b.t_max);
    rep.write_csv(out.create("scan.csv")?, &comment)?;
    out.create("scan_summary.txt")?.write_all(rep.summary().as_bytes())?;
    Ok(())
}

fn capacity_fit(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let cut = CutoffPair::default();
    let c = &cfg.capacity;
    match c.mode()? {
        CapacityMode::Fit(rule) => {
            let fit = capacity_exponent_fit(&cfg.params, &c.r_list, rule, &cut)?;
            fit.write_csv(out.create("capacity.csv")?)?;
        }
        CapacityMode::Log => {
            let fit = log_capacity_fit(&cfg.params, &c.r_list, &cut)?;
            fit.write_csv(out.create("capacity_log.csv")?)?;
        }
    }
    Ok(())
}
