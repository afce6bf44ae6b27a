use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Experiment, RunConfig, SweepAxis};
use crate::constants::{find_n0, hardy_lambda, p_le_lambda, p_poly, Dimension};
use crate::constructions::{certify_data, lemma37_bounds, sup_g, sup_h, thm31_pipeline};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, sha256_file, sha256_hex, write_csv, write_json, write_profile_csv, write_system_csv, write_witness_csv};
use crate::monotone::{
    certify_constructed, compute_cp_prime, extrapolated_initial_data, monotone_iterate, outer_growth_ratio,
    truncation_radius, AdmissibilityConstants, ExtrapolatedData, MonotoneConfig, PolynomialSpec,
};
use crate::radial_ivp::{integrate, IntegratorConfig, Problem, ProfileStatus};
use crate::shooting::{find_borderline, find_certificate_threshold, ShootingConfig};
use crate::stability::{stability_verdict, Certificate, StabilityVerdict, VerdictPolicy};

/// Environment variable replacing the directory that relative outputs resolve against.
pub const OUT_ENV: &str = "POLYSTAB_OUT";

/// Ordered `(column, value)` pairs describing one finished experiment.
pub type Summary = Vec<(String, String)>;

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    let rel = cfg
        .output
        .clone()
        .unwrap_or_else(|| format!("out/{}", cfg.experiment.name()));
    match std::env::var_os(OUT_ENV) {
        Some(root) => Path::new(&root).join(rel),
        None => PathBuf::from(rel),
    }
}

fn integrator_for(cfg: &RunConfig, p: &Problem) -> IntegratorConfig {
    cfg.integrator.apply(IntegratorConfig::for_problem(p))
}

fn shooting_config(cfg: &RunConfig) -> ShootingConfig {
    let mut sc = ShootingConfig::default();
    let i = &cfg.integrator;
    if let Some(r) = i.r_max {
        sc.r_max = r;
    }
    if let Some(t) = i.rel_tol {
        sc.rel_tol = t;
    }
    if let Some(t) = i.abs_tol {
        sc.abs_tol = t;
    }
    sc
}

#[derive(Serialize)]
struct ProfileMeta<'a> {
    m: u32,
    n: u32,
    a: &'a [f64],
    config: &'a IntegratorConfig,
    status: ProfileStatus,
    blow_up_radius: Option<f64>,
    nodes: usize,
}

fn blow_up_radius(s: ProfileStatus) -> Option<f64> {
    match s {
        ProfileStatus::BlowUp { radius, .. } => Some(radius),
        ProfileStatus::Global { .. } => None,
    }
}

fn status_label(s: ProfileStatus) -> &'static str {
    if s.is_global() {
        "global"
    } else {
        "blow-up"
    }
}

fn cert_summary(s: &mut Summary, c: &Certificate) {
    s.push(kv("certificate", serde_json::to_value(c.verdict).unwrap().as_str().unwrap_or("")));
    s.push(kv("sup_value", fmt_f64(c.sup_value)));
    s.push(kv("margin", fmt_f64(c.margin)));
}

fn run_solve(cfg: &RunConfig, dir: &Path, certify: bool) -> Result<Summary> {
    let dim = cfg.dimension()?;
    let a = cfg.initial_data(dim)?;
    let p = Problem::new(dim, a.clone())?;
    let ic = integrator_for(cfg, &p);
    let profile = integrate(&p, &ic)?;
    write_profile_csv(dir.join("profile.csv"), &profile)?;
    let status = profile.status();
    write_json(
        dir.join("profile.json"),
        &ProfileMeta {
            m: dim.m,
            n: dim.n,
            a: &a,
            config: &ic,
            status,
            blow_up_radius: blow_up_radius(status),
            nodes: profile.len(),
        },
    )?;
    let mut s = vec![kv("status", status_label(status)), kv("r_end", fmt_f64(profile.r_end()))];
    if let Some(r) = blow_up_radius(status) {
        s.push(kv("blow_up_radius", fmt_f64(r)));
    }
    if certify {
        let policy = VerdictPolicy {
            annuli: cfg.stability.annuli.iter().map(|x| (x[0], x[1])).collect(),
            n: cfg.stability.n,
            stop_on_certificate: cfg.stability.stop_on_certificate,
        };
        let verdict = stability_verdict(&profile, &policy)?;
        write_json(dir.join("verdict.json"), &verdict)?;
        if let StabilityVerdict::InstabilityWitness { witness, .. } = &verdict {
            write_witness_csv(dir.join("witness.csv"), &witness.radii, &witness.phi)?;
            s.push(kv("witness_rayleigh", fmt_f64(witness.rayleigh)));
        }
        s.push(kv("verdict", verdict.label()));
        if dim.m_is_odd() && status.is_global() && a[1..].iter().all(|x| *x <= 0.0) {
            let bounds = lemma37_bounds(&profile, 1e-9)?;
            write_json(dir.join("bounds.json"), &bounds)?;
            s.push(kv("bounds_hold", bounds.holds));
        }
        cert_summary(&mut s, verdict.certificate());
    }
    Ok(s)
}

fn run_shoot(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let dim = cfg.dimension()?;
    let head = cfg.head(dim)?;
    let sc = shooting_config(cfg);
    let br = find_borderline(dim, &head, cfg.shoot.tol, &sc)?;
    write_json(dir.join("bracket.json"), &br)?;
    let mut s = vec![
        kv("N", dim.n),
        kv("beta0_lo", fmt_f64(br.lo)),
        kv("beta0_hi", fmt_f64(br.hi)),
    ];
    if cfg.shoot.threshold {
        let th = find_certificate_threshold(dim, &head, cfg.shoot.tol, Some(&br), &sc)?;
        write_json(dir.join("threshold.json"), &th)?;
        s.push(kv("beta1_lo", fmt_f64(th.lo)));
        s.push(kv("beta1_hi", fmt_f64(th.hi)));
        s.push(kv("degenerate", th.degenerate));
    } else {
        s.push(kv("beta1_lo", ""));
        s.push(kv("beta1_hi", ""));
        s.push(kv("degenerate", ""));
    }
    Ok(s)
}

fn certify_recipe(dim: Dimension, head: &[f64], a_last: f64, sup_radius: f64, dir: &Path) -> Result<Certificate> {
    let (profile, cert) = certify_data(dim, head, a_last, 20.0 * sup_radius)?;
    write_profile_csv(dir.join("profile.csv"), &profile)?;
    write_json(dir.join("certificate.json"), &cert)?;
    Ok(cert)
}

fn head_string(h: &[f64]) -> String {
    h.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn run_construct_odd(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let dim = cfg.dimension()?;
    let head = cfg.head(dim)?;
    let rec = sup_h(dim, &head)?;
    write_json(dir.join("recipe.json"), &rec)?;
    let cert = certify_recipe(dim, &head, rec.chosen_a_last, rec.sup_radius, dir)?;
    let mut s = vec![
        kv("m", dim.m),
        kv("N", dim.n),
        kv("head", head_string(&head)),
        kv("H0_or_sup_g", fmt_f64(rec.h0)),
        kv("a_last", fmt_f64(rec.chosen_a_last)),
    ];
    cert_summary(&mut s, &cert);
    Ok(s)
}

fn run_construct_even(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let dim = cfg.dimension()?;
    let head = cfg.head(dim)?;
    let sc = shooting_config(cfg);
    let br = find_borderline(dim, &head, cfg.shoot.tol, &sc)?;
    write_json(dir.join("bracket.json"), &br)?;
    let rec = sup_g(dim, &head, &br, &sc)?;
    write_json(dir.join("recipe.json"), &rec)?;
    let cert = certify_recipe(dim, &head, rec.chosen_a_last, rec.sup_radius, dir)?;
    let mut s = vec![
        kv("m", dim.m),
        kv("N", dim.n),
        kv("head", head_string(&head)),
        kv("H0_or_sup_g", fmt_f64(rec.sup_g)),
        kv("a_last", fmt_f64(rec.chosen_a_last)),
    ];
    cert_summary(&mut s, &cert);
    Ok(s)
}

#[derive(Serialize)]
struct Thm31Report<'a> {
    output: &'a crate::constructions::Thm31Output,
    sign_pattern: String,
}

fn run_thm31(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let dim = cfg.dimension()?;
    let out = thm31_pipeline(dim)?;
    let signs: String = out.a.iter().map(|x| if *x >= 0.0 { '+' } else { '-' }).collect();
    write_json(
        dir.join("thm31.json"),
        &Thm31Report {
            output: &out,
            sign_pattern: signs.clone(),
        },
    )?;
    if let Some(p) = &out.profile {
        write_profile_csv(dir.join("profile.csv"), p)?;
    }
    let mut s = vec![
        kv("beta", fmt_f64(out.beta)),
        kv("sign_pattern", signs),
        kv("last_laplacian_at_r_max", fmt_f64(out.last_laplacian_at_r_max)),
    ];
    cert_summary(&mut s, &out.certificate);
    Ok(s)
}

#[derive(Serialize)]
struct N0Report {
    m: u32,
    n0: u32,
    window_end: u32,
    ratio_increasing: bool,
    /// Comparison at the configured `N`, when one is given.
    at_n: Option<N0Point>,
}

#[derive(Serialize)]
struct N0Point {
    n: u32,
    p_m: String,
    lambda: String,
    holds: bool,
}

fn run_n0(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let m = cfg.dim.map(|d| d.m).or(cfg.n0_m).ok_or_else(|| Error::Config("need m".into()))?;
    let scan = find_n0(m)?;
    let rows: Vec<Vec<String>> = scan
        .rows
        .iter()
        .map(|r| vec![r.n.to_string(), r.p_m.clone(), r.lambda.clone(), fmt_f64(r.lambda_float), r.holds.to_string()])
        .collect();
    write_csv(
        dir.join("n0.csv"),
        &["N".into(), "P_m".into(), "lambda_exact".into(), "lambda_float".into(), "holds".into()],
        &rows,
    )?;
    let at_n = match cfg.dim {
        Some(d) => Some(N0Point {
            n: d.n,
            p_m: p_poly(m, d.n).ratio_string(),
            lambda: hardy_lambda(Dimension::new(m, d.n)?)?.ratio_string(),
            holds: p_le_lambda(m, d.n)?,
        }),
        None => None,
    };
    let mut s = vec![kv("m", m), kv("n0", scan.n0), kv("ratio_increasing", scan.ratio_increasing)];
    if let Some(p) = &at_n {
        s.push(kv("N", p.n));
        s.push(kv("p_le_lambda", p.holds));
    }
    write_json(
        dir.join("n0.json"),
        &N0Report {
            m,
            n0: scan.n0,
            window_end: scan.window_end,
            ratio_increasing: scan.ratio_increasing,
            at_n,
        },
    )?;
    Ok(s)
}

#[derive(Serialize)]
struct IterateReport<'a> {
    m: u32,
    n: u32,
    polynomial: &'a PolynomialSpec,
    constants: &'a AdmissibilityConstants,
    c: f64,
    r_trunc: f64,
    nodes: usize,
    iterations: usize,
    sup_changes: &'a [f64],
    residual: f64,
    monotone: bool,
    sandwich: bool,
    initial_data: Vec<f64>,
    extrapolated: Option<ExtrapolatedData>,
    outer_growth_ratio: f64,
    certificate: &'a Certificate,
}

fn run_iterate(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let dim = cfg.dimension()?;
    let p = cfg.polynomial.clone().ok_or_else(|| Error::Config("need [polynomial]".into()))?;
    let consts = compute_cp_prime(&p, dim, cfg.seed)?;
    let it_cfg = &cfg.iterate;
    let c = it_cfg.c.unwrap_or(consts.c_tilde + it_cfg.c_offset);
    let mut mc = MonotoneConfig::default();
    if let Some(n) = it_cfg.nodes {
        mc.nodes = n;
    }
    if let Some(t) = it_cfg.tol {
        mc.tol = t;
    }
    if let Some(k) = it_cfg.max_iter {
        mc.max_iter = k;
    }
    if let Some(t) = it_cfg.boundary_tol {
        mc.boundary_tol = t;
    }
    mc.r_trunc = it_cfg.r_trunc;
    let it = monotone_iterate(&p, dim, c, &mc)?;
    let (_, cert) = certify_constructed(&it)?;
    let extrapolated = if it_cfg.extrapolation_levels >= 2 {
        Some(extrapolated_initial_data(&p, dim, c, &mc, it_cfg.extrapolation_levels)?)
    } else {
        None
    };
    write_system_csv(dir.join("system.csv"), &it)?;
    let growth = outer_growth_ratio(&it);
    let a = it.initial_data();
    write_json(
        dir.join("iterate.json"),
        &IterateReport {
            m: dim.m,
            n: dim.n,
            polynomial: &p,
            constants: &consts,
            c,
            r_trunc: mc.r_trunc.unwrap_or_else(|| truncation_radius(dim, mc.boundary_tol)),
            nodes: it.r.len(),
            iterations: it.iterations,
            sup_changes: &it.sup_changes,
            residual: it.residual,
            monotone: it.monotone,
            sandwich: it.sandwich,
            initial_data: a.clone(),
            extrapolated,
            outer_growth_ratio: growth,
            certificate: &cert,
        },
    )?;
    let mut s = vec![
        kv("C", fmt_f64(c)),
        kv("c_tilde", fmt_f64(consts.c_tilde)),
        kv("iterations", it.iterations),
        kv("residual", fmt_f64(it.residual)),
        kv("sandwich", it.sandwich),
        kv("a", head_string(&a)),
    ];
    cert_summary(&mut s, &cert);
    Ok(s)
}

/// Runs one non-sweep experiment into `dir`.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    fs::create_dir_all(dir)?;
    match cfg.experiment {
        Experiment::Solve => run_solve(cfg, dir, false),
        Experiment::Certify => run_solve(cfg, dir, true),
        Experiment::Shoot => run_shoot(cfg, dir),
        Experiment::ConstructOdd => run_construct_odd(cfg, dir),
        Experiment::ConstructEven => run_construct_even(cfg, dir),
        Experiment::Thm31 => run_thm31(cfg, dir),
        Experiment::N0Scan => run_n0(cfg, dir),
        Experiment::Iterate => run_iterate(cfg, dir),
        Experiment::Sweep => run_sweep(cfg, dir),
    }
}

#[derive(Serialize)]
struct CellReport {
    index: usize,
    axis: SweepAxis,
    value: f64,
    ok: bool,
    exit_code: i32,
    error: Option<String>,
    summary: std::collections::BTreeMap<String, String>,
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<Summary> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| Error::Config("need [sweep]".into()))?;
    let values = sw.axis_values()?;
    let workers = sw.workers.unwrap_or_else(num_cpus);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let cells: Vec<(f64, Result<Summary>)> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                let cell_dir = dir.join(format!("cell_{i:03}"));
                let r = cfg.cell(v).and_then(|c| {
                    c.validate()?;
                    execute(&c, &cell_dir)
                });
                (v, r)
            })
            .collect()
    });

    let columns: Vec<String> = cells
        .iter()
        .find_map(|(_, r)| r.as_ref().ok())
        .map(|s| s.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header = vec!["cell".to_string(), "axis_value".to_string(), "status".to_string(), "error".to_string()];
    header.extend(columns.iter().cloned());
    let mut rows = Vec::new();
    let mut failures = 0;
    for (i, (v, r)) in cells.iter().enumerate() {
        let cell_dir = dir.join(format!("cell_{i:03}"));
        fs::create_dir_all(&cell_dir)?;
        let (ok, err, code, summary) = match r {
            Ok(s) => (true, None, 0, s.clone()),
            Err(e) => {
                failures += 1;
                (false, Some(e.to_string()), e.exit_code(), Vec::new())
            }
        };
        let mut row = vec![i.to_string(), fmt_f64(*v), if ok { "ok" } else { "failed" }.to_string()];
        row.push(err.clone().unwrap_or_default().replace('\n', " "));
        for c in &columns {
            row.push(summary.iter().find(|(k, _)| k == c).map(|(_, v)| v.clone()).unwrap_or_default());
        }
        rows.push(row);
        write_json(
            cell_dir.join("cell.json"),
            &CellReport {
                index: i,
                axis: sw.axis,
                value: *v,
                ok,
                exit_code: code,
                error: err,
                summary: summary.into_iter().collect(),
            },
        )?;
    }
    write_csv(dir.join("table.csv"), &header, &rows)?;
    if failures == cells.len() {
        return Err(Error::Numerical(format!("all {failures} sweep cells failed")));
    }
    Ok(vec![kv("cells", cells.len()), kv("failed", failures)])
}

fn num_cpus() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: Experiment,
    pub config_sha256: String,
    pub config: RunConfig,
    pub seed: u64,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub error: Option<String>,
    pub summary: std::collections::BTreeMap<String, String>,
    pub artifacts: Vec<ArtifactEntry>,
}

fn collect_artifacts(root: &Path, dir: &Path, out: &mut Vec<ArtifactEntry>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_artifacts(root, &p, out)?;
        } else if p.file_name().is_some_and(|n| n != "manifest.json") {
            out.push(ArtifactEntry {
                path: p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/"),
                sha256: sha256_file(&p)?,
                bytes: e.metadata()?.len(),
            });
        }
    }
    Ok(())
}

/// Outcome of a full run: where it went and the process exit code.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub exit_code: i32,
    pub error: Option<Error>,
}

/// Parses, validates, executes and writes the manifest. Configuration errors
/// surface before the output directory is created.
pub fn run_text(config_text: &str) -> Result<RunOutcome> {
    let cfg = RunConfig::from_toml(config_text)?;
    let dir = output_dir(&cfg);
    fs::create_dir_all(&dir)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let result = execute(&cfg, &dir);
    let wall = clock.elapsed().as_secs_f64();
    let (exit_code, summary, error) = match result {
        Ok(s) => (0, s, None),
        Err(e) => (e.exit_code(), Vec::new(), Some(e)),
    };
    let mut artifacts = Vec::new();
    collect_artifacts(&dir, &dir, &mut artifacts)?;
    let manifest = Manifest {
        tool: "polystab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: cfg.seed,
        config: cfg,
        started_unix: started,
        wall_time_s: wall,
        exit_code,
        error: error.as_ref().map(|e| e.to_string()),
        summary: summary.into_iter().collect(),
        artifacts,
    };
    write_json(dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { dir, exit_code, error })
}

/// `(m, N, lambda_or_mu_exact, float)` for every supercritical pair.
pub fn write_tables(path: &Path, ms: std::ops::RangeInclusive<u32>, ns: std::ops::RangeInclusive<u32>) -> Result<usize> {
    let rows = crate::constants::hardy_table(ms, ns);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.m.to_string(), r.n.to_string(), r.exact.clone(), fmt_f64(r.float)])
        .collect();
    write_csv(
        path,
        &["m".into(), "N".into(), "lambda_or_mu_exact".into(), "float".into()],
        &body,
    )?;
    Ok(body.len())
}
