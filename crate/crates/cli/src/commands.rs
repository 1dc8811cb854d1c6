use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tdi_core::classical::{classical_isf_family, ClassicalModel};
use tdi_core::correlations::{dcf_all, isf, IsfSource};
use tdi_core::doublewell::{doublewell_report, DoubleWellReport, ReportGrid};
use tdi_core::model::TargetModel;
use tdi_core::model_file::{LoadedModel, ModelSpec};
use tdi_core::output::{
    write_dcf_csv, write_isf_csv, write_json, write_moessbauer_csv, write_scan_csv, DcfRow, IsfRow, Sidecar,
};
use tdi_core::tdi::{
    check_discriminator_grid, discriminate, harmonic_fit, moessbauer_signal, phase_scan_averaged, phase_scan_source,
    PhaseScan, Verdict,
};
use tdi_core::{TdiError, Tolerances, Vec3};

use crate::args::{parse_num, Cli, Command, GlobalOpts, GridOpts, PhaseOpts};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<TdiError> for CliError {
    fn from(e: TdiError) -> Self {
        match e {
            TdiError::NonFinite(_) => Self::Numeric(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub enum Outcome {
    Done,
    ClassicalExcluded,
}

/// Resolved model and run settings shared by all subcommands.
struct Context<'a> {
    global: &'a GlobalOpts,
    spec: ModelSpec,
    model: LoadedModel,
    seed: u64,
    tol: Tolerances,
}

impl Context<'_> {
    fn quantum(&self, what: &str) -> Result<&TargetModel> {
        match &self.model {
            LoadedModel::Quantum(m) => Ok(m),
            LoadedModel::Classical(_) => Err(CliError::Config(format!("{what} needs a quantum model"))),
        }
    }

    fn momentum(&self, pd: f64) -> Vec3 {
        match &self.model {
            LoadedModel::Quantum(m) => m.momentum_for(pd),
            LoadedModel::Classical(cm) => {
                let d = match cm.sites() {
                    [a, b, ..] => [b[0] - a[0], b[1] - a[1], b[2] - a[2]],
                    _ => [1.0, 0.0, 0.0],
                };
                let n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                [pd * d[0] / n2, pd * d[1] / n2, pd * d[2] / n2]
            }
        }
    }

    fn source(&self, n_traj: usize) -> IsfSource<'_> {
        match &self.model {
            LoadedModel::Quantum(m) => IsfSource::Quantum(m),
            LoadedModel::Classical(cm) => IsfSource::Classical { model: cm, n_traj },
        }
    }

    fn sidecar(&self, command: &str, extra: Value) -> Sidecar {
        let config = json!({
            "model": self.spec,
            "seed": self.seed,
            "tolerances": self.tol,
            "average_t1": self.global.average_t1,
            "allow_sparse": self.global.allow_sparse,
            "params": self.global.params,
            "command": extra,
        });
        Sidecar::new(command, self.model.id(), self.seed, config)
    }
}

fn load_spec(name: &str) -> Result<ModelSpec> {
    let path = Path::new(name);
    if path.is_file() {
        return Ok(ModelSpec::from_path(path)?);
    }
    ModelSpec::builtin(name)
        .ok_or_else(|| CliError::Config(format!("model file not found and no built-in named '{name}'")))
}

fn context(global: &GlobalOpts) -> Result<Context<'_>> {
    let mut spec = load_spec(&global.model)?;
    for kv in &global.params {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| CliError::Config(format!("--param expects key=value, got '{kv}'")))?;
        spec.set_param(k.trim(), v.trim())?;
    }
    let file_seed = match &spec {
        ModelSpec::ClassicalCtmc { seed, .. } => *seed,
        _ => None,
    };
    let seed = global.seed.or(file_seed).unwrap_or(0);
    let model = spec.to_model(Some(seed))?;
    let tol = match global.tol {
        Some(t) => Tolerances::default().with_algebraic(t)?,
        None => Tolerances::default(),
    };
    Ok(Context { global, spec, model, seed, tol })
}

fn check_sorted(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(CliError::Config(format!("--{name} grid is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("--{name} grid has non-finite values")));
    }
    if v.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::Config(format!("--{name} grid must be sorted")));
    }
    Ok(())
}

fn check_grid(g: &GridOpts) -> Result<()> {
    check_sorted("pd", &g.pd)?;
    check_sorted("t1", &g.t1)?;
    check_sorted("dt", &g.dt)?;
    if g.n_traj == 0 {
        return Err(CliError::Config("--n-traj must be at least 1".into()));
    }
    Ok(())
}

fn single(name: &str, v: &[f64]) -> Result<f64> {
    match v {
        [x] => Ok(*x),
        _ => Err(CliError::Config(format!("this command takes a single --{name} value"))),
    }
}

fn finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("NaN or infinity in {what}")))
    }
}

fn grid_json(g: &GridOpts) -> Value {
    json!({ "pd": g.pd, "t1": g.t1, "dt": g.dt, "n_traj": g.n_traj })
}

/// Files are buffered and only written once every check has passed.
#[derive(Default)]
struct Files(Vec<(String, Vec<u8>)>);

impl Files {
    fn add(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> tdi_core::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.0.push((name.to_string(), buf));
        Ok(())
    }

    fn flush(self, dir: &str) -> Result<()> {
        let dir = PathBuf::from(dir);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        for (name, bytes) in self.0 {
            let path = dir.join(name);
            std::fs::write(&path, bytes)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = context(&cli.global)?;
    let mut files = Files::default();
    let mut outcome = Outcome::Done;
    match &cli.cmd {
        Command::Isf { grid } => {
            check_grid(grid)?;
            let rows = isf_rows(&ctx, grid)?;
            files.add("isf.csv", |w| write_isf_csv(w, &rows))?;
            let side = ctx.sidecar("isf", grid_json(grid));
            files.add("isf.json", |w| write_json(w, &side))?;
        }
        Command::Classical { grid } => {
            check_grid(grid)?;
            if !matches!(ctx.model, LoadedModel::Classical(_)) {
                return Err(CliError::Config("classical needs a classical-ctmc model".into()));
            }
            let rows = isf_rows(&ctx, grid)?;
            files.add("classical.csv", |w| write_isf_csv(w, &rows))?;
            let side = ctx.sidecar("classical", grid_json(grid));
            files.add("classical.json", |w| write_json(w, &side))?;
        }
        Command::Dcf { grid } => {
            check_grid(grid)?;
            let m = ctx.quantum("dcf")?;
            let mut rows = Vec::new();
            for &t1 in &grid.t1 {
                for &dt in &grid.dt {
                    rows.extend(dcf_all(m, t1, t1 + dt).into_iter().map(|(r, value)| DcfRow {
                        r,
                        t1,
                        t2: t1 + dt,
                        value,
                    }));
                }
            }
            finite("DCF", rows.iter().flat_map(|r| [r.value.re, r.value.im]))?;
            files.add("dcf.csv", |w| write_dcf_csv(w, &rows))?;
            let side = ctx.sidecar("dcf", grid_json(grid));
            files.add("dcf.json", |w| write_json(w, &side))?;
        }
        Command::TdiScan { grid, phase } => {
            let phis = phase_grid(phase)?;
            if let Err(e) = check_discriminator_grid(&phis) {
                if !ctx.global.allow_sparse {
                    return Err(CliError::Config(format!("{e} (pass --allow-sparse to scan anyway)")));
                }
                eprintln!("tdi: warning: {e}; the scan cannot feed the discriminator");
            }
            let (scan, side) = scan(&ctx, grid, phase, &phis, "tdi-scan")?;
            files.add("scan.csv", |w| write_scan_csv(w, &scan))?;
            files.add("scan.json", |w| write_json(w, &side))?;
        }
        Command::Discriminate { grid, phase } => {
            let phis = phase_grid(phase)?;
            check_discriminator_grid(&phis)?;
            let (scan, side) = scan(&ctx, grid, phase, &phis, "discriminate")?;
            let verdict = discriminate(&scan, &ctx.tol)?;
            if verdict.classical_excluded {
                outcome = Outcome::ClassicalExcluded;
            }
            #[derive(Serialize)]
            struct VerdictFile<'a> {
                #[serde(flatten)]
                verdict: &'a Verdict,
                run: &'a Sidecar,
            }
            files.add("scan.csv", |w| write_scan_csv(w, &scan))?;
            files.add("verdict.json", |w| write_json(w, &VerdictFile { verdict: &verdict, run: &side }))?;
            println!("classical_excluded = {}", verdict.classical_excluded);
        }
        Command::Moessbauer { pd, t_grid, lifetime, doppler, phase } => {
            let m = ctx.quantum("moessbauer")?;
            let t = parse_t_grid(t_grid)?;
            let p = ctx.momentum(*pd);
            let intensity = moessbauer_signal(m, &p, &t, *lifetime, *doppler, *phase)?;
            finite("intensity", intensity.iter().copied())?;
            files.add("moessbauer.csv", |w| write_moessbauer_csv(w, &t, &intensity))?;
            let mut side = ctx.sidecar(
                "moessbauer",
                json!({ "pd": pd, "t_grid": t_grid, "lifetime": lifetime, "doppler": doppler, "phase": phase }),
            );
            side.p = Some(p);
            side.time_units = Some("ns".into());
            files.add("moessbauer.json", |w| write_json(w, &side))?;
        }
        Command::DoublewellReport => {
            let mut grid = ReportGrid::default();
            if let ModelSpec::DoubleWell { omega, d, .. } = &ctx.spec {
                grid.omega = *omega;
                grid.d = *d;
            }
            let report = doublewell_report(&grid)?;
            finite("report", report.entries.iter().map(|e| e.abs_diff))?;
            #[derive(Serialize)]
            struct ReportFile<'a> {
                #[serde(flatten)]
                report: &'a DoubleWellReport,
                run: &'a Sidecar,
            }
            let side = ctx.sidecar("doublewell-report", json!({}));
            files.add("doublewell_report.json", |w| write_json(w, &ReportFile { report: &report, run: &side }))?;
            for s in &report.summary {
                println!("{:<12} points {:>4}  max |literal - oracle| {:.3e}", s.quantity, s.points, s.max_abs_diff);
            }
        }
    }
    files.flush(&ctx.global.out)?;
    Ok(outcome)
}

fn isf_rows(ctx: &Context<'_>, grid: &GridOpts) -> Result<Vec<IsfRow>> {
    let mut rows = Vec::new();
    for &pd in &grid.pd {
        let p = ctx.momentum(pd);
        for &t1 in &grid.t1 {
            for &dt in &grid.dt {
                let t2 = t1 + dt;
                let row = match &ctx.model {
                    LoadedModel::Quantum(m) => {
                        IsfRow { p_dot_d: pd, t1, t2, value: isf(m, &p, t1, t2).value, stderr: None }
                    }
                    LoadedModel::Classical(cm) => classical_row(cm, pd, &p, t1, t2, grid.n_traj)?,
                };
                rows.push(row);
            }
        }
    }
    finite("ISF", rows.iter().flat_map(|r| [r.value.re, r.value.im, r.stderr.unwrap_or(0.0)]))?;
    Ok(rows)
}

fn classical_row(cm: &ClassicalModel, pd: f64, p: &Vec3, t1: f64, t2: f64, n_traj: usize) -> Result<IsfRow> {
    let est = classical_isf_family(cm, p, t1, t2, n_traj, 0)?;
    Ok(IsfRow { p_dot_d: pd, t1, t2, value: est.mean, stderr: Some(est.stderr) })
}

fn phase_grid(phase: &PhaseOpts) -> Result<Vec<f64>> {
    match &phase.phi {
        Some(v) => Ok(v.clone()),
        None if phase.phi_points == 0 => Err(CliError::Config("--phi-points must be positive".into())),
        None => {
            Ok((0..phase.phi_points).map(|k| 2.0 * std::f64::consts::PI * k as f64 / phase.phi_points as f64).collect())
        }
    }
}

fn scan(
    ctx: &Context<'_>,
    grid: &GridOpts,
    phase: &PhaseOpts,
    phis: &[f64],
    command: &str,
) -> Result<(PhaseScan, Sidecar)> {
    check_grid(grid)?;
    let pd = single("pd", &grid.pd)?;
    let t1 = single("t1", &grid.t1)?;
    let dt = single("dt", &grid.dt)?;
    let p = ctx.momentum(pd);
    let source = ctx.source(grid.n_traj);
    let scan = if ctx.global.average_t1 {
        let period = match (phase.period, &ctx.spec) {
            (Some(t), _) => t,
            (None, ModelSpec::DoubleWell { omega, .. }) if *omega != 0.0 => 2.0 * std::f64::consts::PI / omega.abs(),
            _ => return Err(CliError::Config("--average-t1 needs --period for this model".into())),
        };
        phase_scan_averaged(&source, &p, dt, phis, period, phase.t1_samples)?
    } else {
        phase_scan_source(&source, &p, t1, t1 + dt, phis)?
    };
    let mut extra = grid_json(grid);
    extra["phi"] = json!(phis);
    extra["period"] = json!(phase.period);
    extra["t1_samples"] = json!(phase.t1_samples);
    let mut side = ctx.sidecar(command, extra);
    side.p = Some(scan.meta.p);
    side.t1 = Some(scan.meta.t1);
    side.t2 = Some(scan.meta.t2);
    if phis.len() >= 3 {
        let i_plus: Vec<f64> = scan.rows.iter().map(|r| r.i_plus).collect();
        side.fit = harmonic_fit(phis, &i_plus).ok().map(|(fit, _)| fit);
    }
    Ok((scan, side))
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma list.
fn parse_t_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |e: String| CliError::Config(format!("--t-grid: {e}"));
    let t = if let [a, b, n] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b) = (parse_num(a).map_err(bad)?, parse_num(b).map_err(bad)?);
        let n: usize = n.trim().parse().map_err(|e| bad(format!("bad count '{n}': {e}")))?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',').map(|x| parse_num(x).map_err(bad)).collect::<Result<_>>()?
    };
    check_sorted("t-grid", &t)?;
    Ok(t)
}
