use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use grwflow::decay::trailing_half_fit;
use grwflow::flow::{FlowObserver, FlowOutcome, MonitorRow, Termination};
use grwflow::graph::{GeometrySnapshot, GraphState};
use grwflow::identities::{property_suite, run_identities, Contract};
use grwflow::warp::{check_timelike_convergence, TimelikeMode, TIMELIKE_SEED};
use grwflow::{BaseMesh, Checkpoint, FlowEngine, PrescribedCurvature};

use crate::config::{parse_config, ConfigErrors, PrescribedSource, RunConfig};
use crate::error::CliError;
use crate::output::{read_field, read_series, write_field, FieldDump, SeriesWriter};

pub const RUN_CFG: &str = "run.cfg";

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(parse_config(&text, base)?)
}

fn prescribed(cfg: &RunConfig, mesh: &BaseMesh) -> Result<PrescribedCurvature, CliError> {
    Ok(match &cfg.prescribed {
        PrescribedSource::Constant(v) => PrescribedCurvature::constant(mesh, *v)?,
        PrescribedSource::SliceMatching(c) => PrescribedCurvature::slice_matching(mesh, &cfg.warp, *c),
        PrescribedSource::Grid(path) => {
            let dump = read_field(path)?;
            let ny = if mesh.m == 2 { mesh.n } else { 1 };
            if dump.nx != mesh.n || dump.ny != ny {
                return Err(ConfigErrors(vec![format!(
                    "prescribed.file: grid is {}x{}, mesh needs {}x{}",
                    dump.nx, dump.ny, mesh.n, ny
                )])
                .into());
            }
            PrescribedCurvature::grid(mesh, dump.values)?
        }
    })
}

fn create_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
}

/// Writes rows, field dumps and checkpoints as the engine produces them.
struct RunFiles {
    dir: PathBuf,
    mesh_n: usize,
    mesh_m: usize,
    series: SeriesWriter,
    series_every: u64,
    fields_every: u64,
    rows_seen: u64,
    last_written_s: Option<f64>,
    last_row: Option<MonitorRow>,
    last_state: Option<(u64, GraphState)>,
    last_dumped: Option<u64>,
    error: Option<CliError>,
}

impl RunFiles {
    fn keep(&mut self, r: Result<(), CliError>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }

    fn dump(&mut self, steps: u64, state: &GraphState) {
        let dump = FieldDump {
            s: state.s,
            step: steps,
            nx: self.mesh_n,
            ny: if self.mesh_m == 2 { self.mesh_n } else { 1 },
            values: state.u.clone(),
        };
        let path = self.dir.join("fields").join(format!("u_{steps:08}.csv"));
        let r = write_field(&path, &dump);
        self.keep(r);
        self.last_dumped = Some(steps);
    }

    fn finish(&mut self, out: &FlowOutcome) -> Result<(), CliError> {
        // An interrupted run leaves the last row to the restart.
        if let (Some(row), Termination::Completed) = (self.last_row, out.termination) {
            if self.last_written_s != Some(row.s) {
                let path = self.dir.join("series.csv");
                self.series.push(&row).map_err(|e| CliError::io(&path, e))?;
            }
        }
        if self.last_dumped != Some(out.steps) {
            self.dump(out.steps, &out.state);
        }
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl FlowObserver for RunFiles {
    fn row(&mut self, row: &MonitorRow) {
        if self.rows_seen.is_multiple_of(self.series_every) {
            let path = self.dir.join("series.csv");
            let r = self.series.push(row).map_err(|e| CliError::io(&path, e));
            self.keep(r);
            self.last_written_s = Some(row.s);
        }
        self.rows_seen += 1;
        self.last_row = Some(*row);
    }

    fn checkpoint(&mut self, ckpt: &Checkpoint) {
        let path = self.dir.join("checkpoints").join(format!("ckpt_{:08}.grwf", ckpt.steps));
        let r = ckpt.write_to(&path).map_err(CliError::from);
        self.keep(r);
    }

    fn event(&mut self, msg: &str) {
        eprintln!("[grwflow] {msg}");
        let path = self.dir.join("events.log");
        let r = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .and_then(|mut f| std::io::Write::write_all(&mut f, format!("{msg}\n").as_bytes()))
            .map_err(|e| CliError::io(&path, e));
        self.keep(r);
    }

    fn state(&mut self, steps: u64, state: &GraphState) {
        if self.fields_every != 0 && steps.is_multiple_of(self.fields_every) {
            self.dump(steps, state);
        }
        self.last_state = Some((steps, state.clone()));
    }
}

fn summary(cfg: &RunConfig, out: &FlowOutcome) -> String {
    let last = out.record.rows.last();
    let mut s = String::new();
    let _ = writeln!(s, "termination = {:?}", out.termination);
    let _ = writeln!(s, "steps = {}", out.steps);
    let _ = writeln!(s, "s = {}", out.state.s);
    if let Some(r) = last {
        let _ = writeln!(s, "sup_H_err = {:e}", r.sup_h_err);
        let _ = writeln!(s, "min_H_err = {:e}", r.min_h_err);
        let _ = writeln!(s, "u_sup = {}", r.u_sup);
        let _ = writeln!(s, "u_inf = {}", r.u_inf);
        let _ = writeln!(s, "v_sup = {}", r.v_sup);
    }
    let v_max = out.record.rows.iter().map(|r| r.v_sup).fold(0.0, f64::max);
    let _ = writeln!(s, "v_sup_max = {v_max}");
    let _ = writeln!(s, "out_dir = {}", cfg.out.dir.display());
    s
}

fn finish_run(
    cfg: &RunConfig,
    files: &mut RunFiles,
    result: grwflow::Result<FlowOutcome>,
) -> Result<(), CliError> {
    let out = match result {
        Ok(out) => out,
        Err(e) => {
            // Keep whatever was recorded, then report the engine error.
            if let Some((steps, st)) = files.last_state.take() {
                files.dump(steps, &st);
            }
            return Err(e.into());
        }
    };
    files.finish(&out)?;
    let text = summary(cfg, &out);
    let path = cfg.out.dir.join("summary.txt");
    fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    print!("{text}");
    Ok(())
}

fn open_run_files(cfg: &RunConfig, mesh: &BaseMesh, series: SeriesWriter, rows_seen: u64) -> RunFiles {
    RunFiles {
        dir: cfg.out.dir.clone(),
        mesh_n: mesh.n,
        mesh_m: mesh.m,
        series,
        series_every: cfg.out.series_every,
        fields_every: cfg.out.fields_every,
        rows_seen,
        last_written_s: None,
        last_row: None,
        last_state: None,
        last_dumped: None,
        error: None,
    }
}

pub fn cmd_run(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mesh = cfg.mesh.build()?;
    let hcal = prescribed(&cfg, &mesh)?;
    let u0 = cfg.init.sample(&mesh);
    let dir = &cfg.out.dir;
    create_dir(dir)?;
    create_dir(&dir.join("fields"))?;
    create_dir(&dir.join("checkpoints"))?;
    let _ = fs::remove_file(dir.join("events.log"));
    let run_cfg = dir.join("checkpoints").join(RUN_CFG);
    fs::write(&run_cfg, cfg.render()).map_err(|e| CliError::io(&run_cfg, e))?;
    let engine = FlowEngine::new(&mesh, &cfg.warp, &hcal, cfg.flow.clone())?;
    let series = SeriesWriter::create(&dir.join("series.csv"))?;
    let mut files = open_run_files(&cfg, &mesh, series, 0);
    files.dump(0, &GraphState::new(u0.clone()));
    let result = engine.run_observed(u0, &mut files);
    finish_run(&cfg, &mut files, result)
}

pub fn cmd_restart(checkpoint: &Path) -> Result<(), CliError> {
    let ckpt = Checkpoint::read_from(checkpoint)?;
    let dir = checkpoint.parent().unwrap_or(Path::new("."));
    let cfg_path = dir.join(RUN_CFG);
    if !cfg_path.is_file() {
        return Err(CliError::MissingData(format!("{} not found beside the checkpoint", cfg_path.display())));
    }
    let mut cfg = load_config(&cfg_path)?;
    cfg.flow.stop_after_steps = None;
    let mesh = cfg.mesh.build()?;
    let hcal = prescribed(&cfg, &mesh)?;
    let engine = FlowEngine::new(&mesh, &cfg.warp, &hcal, cfg.flow.clone())?;
    create_dir(&cfg.out.dir.join("fields"))?;
    let series_path = cfg.out.dir.join("series.csv");
    let series = if series_path.is_file() {
        SeriesWriter::truncate_at(&series_path, ckpt.s)?
    } else {
        SeriesWriter::create(&series_path)?
    };
    let mut files = open_run_files(&cfg, &mesh, series, ckpt.steps);
    let result = engine.resume_observed(&ckpt, &mut files);
    finish_run(&cfg, &mut files, result)
}

pub fn cmd_check_identities(config: &Path, ladder: Vec<usize>) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    if ladder.len() < 3 {
        return Err(ConfigErrors(vec![format!("--ladder: need at least 3 grid sizes, got {}", ladder.len())]).into());
    }
    let plan = cfg.identity_plan(ladder)?;
    let reports = run_identities(&plan, &cfg.checks.identities)?;
    create_dir(&cfg.out.dir)?;
    let csv_path = cfg.out.dir.join("identities.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    let io = |e: csv::Error| CliError::io(&csv_path, e);
    w.write_record(["id", "n", "h", "ds", "sup", "l2", "order_sup", "order_l2", "contract", "pass"]).map_err(io)?;
    let fmt_opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    let mut failed = Vec::new();
    println!("{:<26} {:>10} {:>10} {:>10}  contract     result", "identity", "sup(fine)", "order_sup", "order_l2");
    for r in &reports {
        let contract = match r.contract {
            Contract::Order(o) => format!("order>={o}"),
            Contract::Tolerance(t) => format!("tol<={t:e}"),
        };
        for l in &r.levels {
            w.write_record([
                r.id.clone(),
                l.n.to_string(),
                l.h.to_string(),
                fmt_opt(l.ds),
                l.report.sup.to_string(),
                l.report.l2.to_string(),
                fmt_opt(r.order_sup),
                fmt_opt(r.order_l2),
                contract.clone(),
                r.pass.to_string(),
            ])
            .map_err(io)?;
        }
        let fine = r.levels.last().map_or(f64::NAN, |l| l.report.sup);
        let fitted = matches!(r.contract, Contract::Order(_));
        let show = |x: Option<f64>| x.filter(|_| fitted).map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<26} {:>10.3e} {:>10} {:>10}  {:<12} {}",
            r.id,
            fine,
            show(r.order_sup),
            show(r.order_l2),
            contract,
            if r.pass { "PASS" } else { "FAIL" }
        );
        if !r.pass {
            failed.push(r.id.clone());
        }
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    if failed.is_empty() {
        println!("PASS: all {} identities meet their contracts", reports.len());
        Ok(())
    } else {
        println!("FAIL: {}", failed.join(", "));
        Err(CliError::CheckFailed(format!("identities out of contract: {}", failed.join(", "))))
    }
}

pub fn cmd_check_geometry(config: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let mesh = cfg.mesh.build()?;
    let hcal = prescribed(&cfg, &mesh)?;
    let u0 = cfg.init.sample(&mesh);
    let snap = GeometrySnapshot::build(&mesh, &cfg.warp, &u0, cfg.flow.eps_sl)?;
    let w = &cfg.warp;
    let mut text = String::new();
    let _ = writeln!(text, "warp c1 = {}\nwarp c2 = {}\nwarp c3 = {}", w.c1, w.c2, w.c3);
    let _ = writeln!(text, "Lambda_max = {}", snap.lambda_max());
    let inv = snap.invariant_errors();
    let _ = writeln!(text, "v_min = {}", inv.min_v);
    let _ = writeln!(text, "v_max = {}", snap.v().iter().copied().fold(0.0, f64::max));
    let invariants = [
        ("grad_norm_identity", inv.grad_norm),
        ("ricci_gradient_identity", inv.ric_identity),
        ("metric_inverse", inv.metric_inverse),
        ("tangent_field", inv.tangent),
    ];
    let mut failed = Vec::new();
    for (name, err) in invariants {
        let ok = err <= 1e-9;
        let _ = writeln!(text, "{name} = {err:e} {}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(name.to_string());
        }
    }
    let report = property_suite(&snap, &mesh, w, &hcal);
    for item in &report.items {
        let tag = match (item.counted, item.pass) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "info:holds",
            (false, false) => "info:fails",
        };
        let _ = writeln!(text, "property {} c = {} worst = {:e} {tag}", item.name, item.constant, item.worst);
        if item.counted && !item.pass {
            failed.push(item.name.clone());
        }
    }
    let range = cfg.flow.timelike_range.unwrap_or_else(|| {
        let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - 1.0, hi)
    });
    let mode = cfg.flow.timelike.unwrap_or(TimelikeMode::NonNeg);
    let tl = check_timelike_convergence(w, &mesh, range, 4096, mode, TIMELIKE_SEED)?;
    let gated = cfg.flow.timelike.is_some();
    let _ = writeln!(
        text,
        "timelike {:?} on [{}, {}]: min {:e} max {:e} {}",
        mode,
        range.0,
        range.1,
        tl.min,
        tl.max,
        match (gated, tl.pass) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "info:holds",
            (false, false) => "info:fails",
        }
    );
    if gated && !tl.pass {
        failed.push("timelike_convergence".into());
    }
    create_dir(&cfg.out.dir)?;
    let path = cfg.out.dir.join("geometry.txt");
    fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    print!("{text}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}

/// Decay fit and convergence verdict over `dir/series.csv`.
pub fn report_text(dir: &Path, threshold: f64) -> Result<String, CliError> {
    let rows = read_series(&dir.join("series.csv"))?;
    if rows.len() < 10 {
        return Err(CliError::MissingData(format!("series.csv has {} rows, need at least 10", rows.len())));
    }
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.sup_h_err).collect();
    let last = rows.len() - 1;
    // first index from which every sample is below the threshold
    let mut settled = None;
    for i in (0..rows.len()).rev() {
        if e[i] <= threshold {
            settled = Some(i);
        } else {
            break;
        }
    }
    let mut t = String::new();
    let _ = writeln!(t, "[report]");
    let _ = writeln!(t, "rows = {}", rows.len());
    let _ = writeln!(t, "s_final = {}", s[last]);
    let _ = writeln!(t, "final_sup_H_err = {:e}", e[last]);
    let _ = writeln!(t, "threshold = {threshold:e}");
    match trailing_half_fit(&s, &e) {
        Some(fit) => {
            let _ = writeln!(t, "fit = trailing_half");
            let _ = writeln!(t, "fit_samples = {}", fit.samples);
            let _ = writeln!(t, "slope = {}", fit.slope);
            let _ = writeln!(t, "intercept = {}", fit.intercept);
            let _ = writeln!(t, "r2 = {}", fit.r2);
        }
        None => {
            let _ = writeln!(t, "fit = skipped");
        }
    }
    match settled {
        Some(i) => {
            let _ = writeln!(t, "converged = true");
            let _ = writeln!(t, "converged_at = {}", s[i]);
            let _ = writeln!(t, "verdict = converged at s={}", s[i]);
        }
        None => {
            let _ = writeln!(t, "converged = false");
            let _ = writeln!(t, "verdict = not converged");
        }
    }
    Ok(t)
}

pub fn cmd_report(dir: &Path, threshold: f64) -> Result<(), CliError> {
    let text = report_text(dir, threshold)?;
    let path = dir.join("report.txt");
    fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::SeriesWriter;

    fn series(dir: &Path, errs: impl Iterator<Item = (f64, f64)>) {
        let mut w = SeriesWriter::create(&dir.join("series.csv")).unwrap();
        for (s, e) in errs {
            let row = MonitorRow {
                s,
                u_sup: 0.0,
                u_inf: 0.0,
                v_sup: 1.0,
                sup_h_err: e,
                min_h_err: e,
                dt: 0.1,
                lambda_max: 1.0,
            };
            w.push(&row).unwrap();
        }
    }

    fn value<'a>(t: &'a str, key: &str) -> &'a str {
        t.lines().find_map(|l| l.strip_prefix(&format!("{key} = "))).unwrap()
    }

    #[test]
    fn exact_exponential_series() {
        let dir = tempfile::tempdir().unwrap();
        series(dir.path(), (0..40).map(|i| (i as f64 * 0.25, (-(i as f64) * 0.25).exp())));
        let t = report_text(dir.path(), 1e-5).unwrap();
        let slope: f64 = value(&t, "slope").parse().unwrap();
        let r2: f64 = value(&t, "r2").parse().unwrap();
        assert!((slope + 1.0).abs() < 1e-6, "{t}");
        assert!((r2 - 1.0).abs() < 1e-12);
        assert_eq!(value(&t, "converged"), "false");
    }

    #[test]
    fn fixed_point_series() {
        let dir = tempfile::tempdir().unwrap();
        series(dir.path(), (0..12).map(|i| (i as f64, 0.0)));
        let t = report_text(dir.path(), 1e-5).unwrap();
        assert_eq!(value(&t, "fit"), "skipped");
        assert_eq!(value(&t, "verdict"), "converged at s=0");
    }

    #[test]
    fn short_series_is_missing_data() {
        let dir = tempfile::tempdir().unwrap();
        series(dir.path(), (0..4).map(|i| (i as f64, 1.0)));
        assert!(matches!(report_text(dir.path(), 1e-5), Err(CliError::MissingData(_))));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(report_text(empty.path(), 1e-5), Err(CliError::MissingData(_))));
    }
}
