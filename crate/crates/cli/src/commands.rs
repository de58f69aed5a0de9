//! Subcommand implementations.

use crate::manifest::{verify_manifest, RunManifest};
use anyhow::{bail, Context, Result};
use dirac2d::config::{parse_config, HMatrix, SimConfig};
use dirac2d::diagnostics::rows_to_csv;
use dirac2d::evolve::{run, RunArtifacts};
use dirac2d::identities::{corrupted_rep, run_identity_suite};
use dirac2d::scattering::{scattering_error, ScatteringReport};
use dirac2d::snapshot::{load_snapshot, save_snapshot};
use dirac2d::spectral::SpectralOps;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Exit codes: 0 success, 1 usage, 2 numeric failure, 3 identity failure.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_IDENTITY: i32 = 3;

pub fn output_root(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var("DIRAC2D_OUT") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from("dirac2d-out")
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing {}", path.display()))
}

// ---------------------------------------------------------------- check

pub fn cmd_check_identities(n: usize, corrupt: Option<&str>) -> Result<i32> {
    let rep = match corrupt {
        None => {
            let cfg = SimConfig::default();
            cfg.rep::<f64>()
        }
        Some("gamma1") => corrupted_rep(1.1),
        Some(other) => bail!("unknown corruption target `{other}` (expected `gamma1`)"),
    };
    let checks = run_identity_suite(&rep, n)?;
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(20);
    println!(
        "{:<width$}  {:>12}  {:>9}  status",
        "identity", "residual", "tol"
    );
    let mut failures = 0;
    for c in &checks {
        let status = if c.passed() { "pass" } else { "FAIL" };
        if !c.passed() {
            failures += 1;
        }
        println!(
            "{:<width$}  {:>12.3e}  {:>9.1e}  {status}",
            c.name, c.residual, c.tolerance
        );
    }
    println!("{} checks, {} failures", checks.len(), failures);
    Ok(if failures == 0 {
        EXIT_OK
    } else {
        EXIT_IDENTITY
    })
}

// ---------------------------------------------------------------- run

fn snapshot_name(t: f64) -> String {
    format!("snapshots/snap_t{:012.6}.drc2", t)
}

/// Write every artifact of a finished run and the checksummed manifest.
pub fn write_run_artifacts(run_dir: &Path, art: &RunArtifacts<f64>, start_unix: u64) -> Result<()> {
    std::fs::create_dir_all(run_dir.join("snapshots"))?;
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        start_unix,
        end_unix: 0,
        t_valid: art.t_valid,
        t_end_effective: art.t_end_effective,
        weighted_data_norm: art.weighted_data_norm,
        abort: art.abort.clone(),
        config_echo: art.config.echo(),
        artifacts: Vec::new(),
    };
    std::fs::write(run_dir.join("config_echo.cfg"), art.config.echo())?;
    manifest.add_artifact(run_dir, "config_echo.cfg")?;

    std::fs::write(run_dir.join("diagnostics.csv"), rows_to_csv(&art.rows))?;
    manifest.add_artifact(run_dir, "diagnostics.csv")?;

    let mut fnorms = String::from("t,f_h0,f_h1,f_h2,f_h3,int_f_h0,int_f_h1,int_f_h2,int_f_h3\n");
    for ((t, f), (_, fi)) in art.f_hs_series.iter().zip(art.f_hs_integral_series.iter()) {
        fnorms.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t, f[0], f[1], f[2], f[3], fi[0], fi[1], fi[2], fi[3]
        ));
    }
    std::fs::write(run_dir.join("fnorms.csv"), fnorms)?;
    manifest.add_artifact(run_dir, "fnorms.csv")?;

    let mut wave_bound = String::from("t,wave_linf,bound,ratio\n");
    for s in &art.wave_bound_series {
        wave_bound.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.t, s.linf, s.bound, s.ratio
        ));
    }
    std::fs::write(run_dir.join("wave_bound.csv"), wave_bound)?;
    manifest.add_artifact(run_dir, "wave_bound.csv")?;

    save_snapshot(&run_dir.join("snapshots/psi0.drc2"), &art.psi0)?;
    manifest.add_artifact(run_dir, "snapshots/psi0.drc2")?;
    for snap in &art.snapshots {
        let rel = snapshot_name(snap.time);
        save_snapshot(&run_dir.join(&rel), snap)?;
        manifest.add_artifact(run_dir, &rel)?;
    }
    save_snapshot(&run_dir.join("snapshots/final.drc2"), &art.final_psi)?;
    manifest.add_artifact(run_dir, "snapshots/final.drc2")?;

    if let Some(psi_plus) = &art.psi_plus {
        save_snapshot(&run_dir.join("psi_plus.drc2"), psi_plus)?;
        manifest.add_artifact(run_dir, "psi_plus.drc2")?;
    }
    for (t, cand) in &art.psi_plus_partials {
        let rel = format!("psi_plus_t{:012.6}.drc2", t);
        save_snapshot(&run_dir.join(&rel), cand)?;
        manifest.add_artifact(run_dir, &rel)?;
    }

    if art.psi_plus.is_some() && !art.snapshots.is_empty() {
        let report = compute_report(art)?;
        std::fs::write(run_dir.join("scatter_report.csv"), report.to_csv())?;
        manifest.add_artifact(run_dir, "scatter_report.csv")?;
    }

    manifest.end_unix = now_unix();
    manifest.write(run_dir)?;
    verify_manifest(run_dir).context("manifest self-check")?;
    Ok(())
}

fn compute_report(art: &RunArtifacts<f64>) -> Result<ScatteringReport<f64>> {
    let psi_plus = art
        .psi_plus
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("run has no scattering state"))?;
    let rep = art.config.rep::<f64>();
    let mut ops = SpectralOps::new(&psi_plus.grid);
    Ok(scattering_error(
        &mut ops,
        &rep,
        art.config.mass,
        &art.snapshots,
        psi_plus,
        &art.f_hs_integral_series,
    )?)
}

fn warn_if_beyond_t_valid(config: &SimConfig) -> Result<()> {
    let grid = dirac2d::grid::Grid2D::<f64>::new(config.n, config.length)?;
    let psi0 = dirac2d::evolve::make_initial_data(&grid, config)?;
    let t_valid = dirac2d::diagnostics::t_valid(&psi0);
    if config.t_end > t_valid {
        eprintln!("===============================================================");
        eprintln!(
            "WARNING: t_end = {} exceeds t_valid = {t_valid:.3}; light-cone",
            config.t_end
        );
        eprintln!("diagnostics beyond t_valid are contaminated by wrap-around.");
        eprintln!("===============================================================");
    }
    Ok(())
}

pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> Result<i32> {
    let start = now_unix();
    let config = load_config(config_path)?;
    let stem = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run");
    let run_dir = output_root(out).join(stem);
    std::fs::create_dir_all(&run_dir)?;
    warn_if_beyond_t_valid(&config)?;
    let art = run::<f64>(&config)?;
    write_run_artifacts(&run_dir, &art, start)?;
    println!("run dir: {}", run_dir.display());
    println!("t_valid = {:.6}", art.t_valid);
    println!("weighted data norm = {:.6e}", art.weighted_data_norm);
    if let Some(last) = art.rows.last() {
        println!(
            "final: t = {:.3}, charge = {:.9e}, D1 = {:.6e}, ghost energy = {:.9e}",
            last.t, last.charge, last.d1, last.ghost_energy
        );
    }
    if let Some(reason) = &art.abort {
        eprintln!("run aborted: {reason} (last good field written to snapshots/final.drc2)");
        return Ok(EXIT_NUMERIC);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- convergence

/// Charge fraction of the data spectrum outside the two-thirds band.
fn spectral_tail_fraction(config: &SimConfig) -> Result<f64> {
    let grid = dirac2d::grid::Grid2D::<f64>::new(config.n, config.length)?;
    let psi0 = dirac2d::evolve::make_initial_data(&grid, config)?;
    let mut ops = SpectralOps::new(&grid);
    let mut planes = [psi0.comps[0].clone(), psi0.comps[1].clone()];
    let mut total = 0.0;
    let mut tail = 0.0;
    let n = config.n;
    let cut = n / 3;
    for p in &mut planes {
        ops.forward_plane(p);
    }
    for k in 0..2 {
        for i in 0..n {
            for j in 0..n {
                let si = dirac2d::spectral::signed_index(i, n).unsigned_abs();
                let sj = dirac2d::spectral::signed_index(j, n).unsigned_abs();
                let m = planes[k][[i, j]].norm_sqr();
                total += m;
                if si > cut || sj > cut {
                    tail += m;
                }
            }
        }
    }
    Ok(if total > 0.0 { tail / total } else { 0.0 })
}

pub fn cmd_convergence(config_path: &Path) -> Result<i32> {
    let config = load_config(config_path)?;
    if config.h_matrix == HMatrix::Zero {
        println!(
            "linear problem (H = 0): the split linear flow is exact, there is no \
             splitting error; order check skipped"
        );
        return Ok(EXIT_OK);
    }
    let tail = spectral_tail_fraction(&config)?;
    if tail > 1e-10 {
        eprintln!(
            "WARNING: initial data is under-resolved on this grid \
             (spectral tail fraction {tail:.3e} beyond the 2/3 band); \
             refusing to measure a convergence order"
        );
        return Ok(EXIT_NUMERIC);
    }
    let dt = config.dt_effective();
    let (order, errs) = dirac2d::evolve::self_convergence_order::<f64>(&config, dt)?;
    println!(
        "dt = {dt:.6e}, halving errors: {:.6e}, {:.6e}",
        errs[0], errs[1]
    );
    println!("observed order = {order:.4}");
    if (1.8..=2.2).contains(&order) {
        Ok(EXIT_OK)
    } else {
        eprintln!("order outside [1.8, 2.2]");
        Ok(EXIT_NUMERIC)
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    Mass,
    Delta,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "epsilon" => Some(Self::Epsilon),
            "mass" => Some(Self::Mass),
            "delta" => Some(Self::Delta),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Epsilon => "epsilon",
            Self::Mass => "mass",
            Self::Delta => "delta",
        }
    }

    fn apply(&self, config: &mut SimConfig, value: f64) {
        match self {
            Self::Epsilon => config.epsilon = value,
            Self::Mass => config.mass = value,
            Self::Delta => config.delta = value,
        }
    }
}

struct SweepCell {
    value: f64,
    max_d1: f64,
    max_d2: f64,
    final_ghost_energy: f64,
    scattering_ratio: f64,
    status: String,
    ok: bool,
}

fn sweep_cell(base: &SimConfig, axis: SweepAxis, value: f64, root: &Path, start: u64) -> SweepCell {
    let mut config = base.clone();
    axis.apply(&mut config, value);
    let dir = root.join(format!("{}_{}", axis.name(), value));
    let fail = |msg: String| SweepCell {
        value,
        max_d1: f64::NAN,
        max_d2: f64::NAN,
        final_ghost_energy: f64::NAN,
        scattering_ratio: f64::NAN,
        status: msg,
        ok: false,
    };
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return fail(format!("io:{e}"));
    }
    if let Err(e) = config.validate() {
        return fail(format!("config:{e}"));
    }
    let art = match run::<f64>(&config) {
        Ok(a) => a,
        Err(e) => return fail(format!("run:{e}")),
    };
    if let Err(e) = write_run_artifacts(&dir, &art, start) {
        return fail(format!("write:{e}"));
    }
    let max_d1 = art.rows.iter().map(|r| r.d1).fold(0.0, f64::max);
    let max_d2 = art.rows.iter().map(|r| r.d2).fold(0.0, f64::max);
    let ghost = art.rows.last().map(|r| r.ghost_energy).unwrap_or(0.0);
    let ratio = match compute_report(&art) {
        Ok(report) => {
            let half = art.t_end_effective / 2.0;
            report
                .samples
                .iter()
                .filter(|s| s.t >= half)
                .map(|s| s.ratio[0])
                .fold(0.0, f64::max)
        }
        Err(_) => 0.0,
    };
    if let Some(reason) = &art.abort {
        let mut cell = fail(format!("abort:{reason}"));
        cell.max_d1 = max_d1;
        cell.max_d2 = max_d2;
        return cell;
    }
    SweepCell {
        value,
        max_d1,
        max_d2,
        final_ghost_energy: ghost,
        scattering_ratio: ratio,
        status: "ok".into(),
        ok: true,
    }
}

pub fn cmd_sweep(
    config_path: &Path,
    axis: SweepAxis,
    values: &[f64],
    workers: Option<usize>,
    out: Option<&Path>,
) -> Result<i32> {
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    let base = load_config(config_path)?;
    let stem = config_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep");
    let root = output_root(out).join(format!("{stem}_sweep_{}", axis.name()));
    std::fs::create_dir_all(&root)?;
    let start = now_unix();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?;
    let cells: Vec<SweepCell> = pool.install(|| {
        use rayon::prelude::*;
        values
            .par_iter()
            .map(|v| sweep_cell(&base, axis, *v, &root, start))
            .collect()
    });
    let mut csv = String::from("value,max_d1,max_d2,final_ghost_energy,scattering_ratio,status\n");
    for c in &cells {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            c.value, c.max_d1, c.max_d2, c.final_ghost_energy, c.scattering_ratio, c.status
        ));
    }
    let summary = root.join("summary.csv");
    std::fs::write(&summary, &csv)?;
    println!("sweep summary: {}", summary.display());
    print!("{csv}");
    let failures = cells.iter().filter(|c| !c.ok).count();
    if failures > 0 {
        eprintln!("{failures} sweep cell(s) failed");
        return Ok(EXIT_NUMERIC);
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- scatter-report

fn parse_fnorms(path: &Path) -> Result<Vec<(f64, [f64; 4])>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("bad fnorms line {}", i + 1))?;
        if cols.len() != 9 {
            bail!(
                "fnorms line {} has {} columns, expected 9",
                i + 1,
                cols.len()
            );
        }
        out.push((cols[0], [cols[5], cols[6], cols[7], cols[8]]));
    }
    Ok(out)
}

/// Recompute the scattering report from a run directory's artifacts.
pub fn cmd_scatter_report(run_dir: &Path) -> Result<i32> {
    let config = load_config(&run_dir.join("config_echo.cfg"))?;
    let psi_plus_path = run_dir.join("psi_plus.drc2");
    if !psi_plus_path.exists() {
        bail!(
            "no scattering state in {} (was the run made with scattering = off?)",
            run_dir.display()
        );
    }
    let psi_plus = load_snapshot(&psi_plus_path)?;
    let mut snapshots = Vec::new();
    for entry in std::fs::read_dir(run_dir.join("snapshots"))? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("snap_t") && name.ends_with(".drc2") {
            snapshots.push(load_snapshot(&entry.path())?);
        }
    }
    if snapshots.is_empty() {
        bail!("no snapshots in {}", run_dir.display());
    }
    snapshots.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    let integrals = parse_fnorms(&run_dir.join("fnorms.csv"))?;
    let rep = config.rep::<f64>();
    let mut ops = SpectralOps::new(&psi_plus.grid);
    let report = scattering_error(
        &mut ops,
        &rep,
        config.mass,
        &snapshots,
        &psi_plus,
        &integrals,
    )?;
    if report.heuristic {
        eprintln!("note: H is not gamma0; the scattering comparison is heuristic for this run");
    }
    let out_path = run_dir.join("scatter_report.csv");
    std::fs::write(&out_path, report.to_csv())?;
    println!("wrote {}", out_path.display());
    for s in &report.samples {
        println!(
            "t = {:8.3}  err_h0 = {:.6e}  ratio_h0 = {:.6e}  tail_h0 = {:.6e}",
            s.t, s.err[0], s.ratio[0], s.tail[0]
        );
    }
    Ok(EXIT_OK)
}
