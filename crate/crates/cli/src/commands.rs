//! The subcommands. Each returns the bytes to write; the binary decides
//! where they go.

use crate::cache::{hex, load_or_build, BasisCache, CacheStatus};
use crate::config::Resolved;
use crate::CliError;
use boxtdse::atom::{ionisation_potential, ip_approx};
use boxtdse::observables::{
    convert_units, convolution_model, format_sig10, photon_thresholds, read_csv, run_points, scan, write_checkpoints,
    write_csv, Quantity, ScanFailure, ScanOutcome, ScanSettings, ScanTarget, YieldRecord, HARTREE_EV,
};
use boxtdse::propagator::{propagate_system, CoupledSystem};
use boxtdse::pulse::{fourier_component_fixed_window, Pulse};
use boxtdse::system::SystemSpec;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Where and how a command runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub run: Resolved,
    pub cache_dir: PathBuf,
    pub force_rebuild: bool,
    /// Worker threads for scans; `None` uses every core.
    pub threads: Option<usize>,
}

/// Output of a command and whether every point succeeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub bytes: Vec<u8>,
    pub failures: usize,
}

impl Report {
    fn ok(bytes: Vec<u8>) -> Self {
        Self { bytes, failures: 0 }
    }
}

impl Context {
    fn basis(&self) -> Result<(BasisCache, PathBuf, CacheStatus), CliError> {
        load_or_build(&self.cache_dir, &self.run.system, self.run.target_ip, self.force_rebuild)
    }

    fn coupled(&self, cache: &BasisCache) -> Result<Vec<(boxtdse::Orientation, CoupledSystem)>, CliError> {
        self.run
            .orientations
            .iter()
            .map(|&o| {
                let d = cache
                    .couplings_for(o)
                    .ok_or_else(|| CliError::Numerical(format!("cache holds no {o} couplings")))?;
                Ok((o, CoupledSystem::new(&cache.basis, d, &self.run.propagation)?))
            })
            .collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
    }

    fn parallel(&self) -> bool {
        self.run.parallel && self.threads != Some(1)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_bytes(outcomes: &[ScanOutcome]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    write_csv(&mut out, outcomes)?;
    Ok(out)
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let e = |e: csv::Error| CliError::Numerical(e.to_string());
    w.write_record(header).map_err(e)?;
    for r in rows {
        w.write_record(&r).map_err(e)?;
    }
    w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))
}

/// Build or load the basis and describe it.
pub fn cmd_basis(ctx: &Context) -> Result<Report, CliError> {
    let (cache, path, status) = ctx.basis()?;
    let mut s = String::new();
    s.push_str(&format!("fingerprint {}\n", hex(&cache.fingerprint)));
    s.push_str(&format!("cache {}\n", path.display()));
    s.push_str(&match status {
        CacheStatus::Loaded => "status loaded\n".to_string(),
        CacheStatus::Built => "status built\n".to_string(),
        CacheStatus::Rebuilt(why) => format!("status rebuilt ({why})\n"),
    });
    s.push_str(&format!("preset {}\n", ctx.run.preset_id));
    s.push_str(&format!("ip {}\n", format_sig10(cache.ip)));
    s.push_str(&format!("states {}\n", cache.basis.n_states()));
    for b in &cache.basis.blocks {
        s.push_str(&format!("block {} {} {}\n", b.label, b.len(), format_sig10(b.energies[0])));
    }
    for c in &cache.couplings {
        s.push_str(&format!("couplings {} {}\n", c.orientation, c.blocks.len()));
    }
    Ok(Report::ok(s.into_bytes()))
}

fn checkpoint_path(base: &Path, orientation: boxtdse::Orientation, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-{orientation}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{orientation}"),
    };
    base.with_file_name(name)
}

/// One row per orientation at `pulse.omega_ev`.
pub fn cmd_propagate(ctx: &Context) -> Result<Report, CliError> {
    let run = &ctx.run;
    let (cache, _, _) = ctx.basis()?;
    let systems = ctx.coupled(&cache)?;
    let spec = run.template.at(run.omega_ev / HARTREE_EV);
    let pulse = Pulse::new(spec).map_err(boxtdse::Error::from)?;
    let several = systems.len() > 1;
    let mut outcomes = Vec::new();
    for (o, system) in &systems {
        match propagate_system(system, &pulse, &run.propagation) {
            Ok(result) => {
                if let Some(base) = &run.checkpoints {
                    let path = checkpoint_path(base, *o, several);
                    let f = File::create(&path).map_err(|e| io_err(&path, e))?;
                    write_checkpoints(BufWriter::new(f), &result.checkpoints).map_err(|e| io_err(&path, e))?;
                }
                outcomes.push(Ok(YieldRecord::new(&result, &spec, *o, &run.preset_id, run.factor_two)));
            }
            Err(e) => outcomes.push(Err(ScanFailure {
                omega_ev: run.omega_ev,
                orientation: *o,
                cycles: spec.cycles,
                intensity: spec.intensity,
                preset_id: run.preset_id.clone(),
                factor_two: run.factor_two,
                message: e.to_string(),
            })),
        }
    }
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    Ok(Report {
        bytes: csv_bytes(&outcomes)?,
        failures,
    })
}

/// One row per grid point and orientation, in grid order.
pub fn cmd_scan(ctx: &Context) -> Result<Report, CliError> {
    let run = &ctx.run;
    let grid = run
        .grid_ev
        .as_ref()
        .ok_or_else(|| CliError::Config("invalid config key `pulse.grid`: scan needs pulse.grid or pulse.grid_ev".into()))?;
    let (cache, _, _) = ctx.basis()?;
    let systems = ctx.coupled(&cache)?;
    let targets: Vec<ScanTarget<'_>> = systems
        .iter()
        .map(|(orientation, system)| ScanTarget {
            orientation: *orientation,
            system,
        })
        .collect();
    let settings = ScanSettings {
        preset_id: run.preset_id.clone(),
        factor_two: run.factor_two,
        parallel: ctx.parallel(),
    };
    let outcomes = ctx.pool()?.install(|| scan(&targets, run.template, grid, &run.propagation, &settings))?;
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    Ok(Report {
        bytes: csv_bytes(&outcomes)?,
        failures,
    })
}

/// Numerical Ip of the model atom against the closed-form approximation.
pub fn cmd_ip_curve(ctx: &Context, alpha_min: f64, alpha_max: f64, points: usize) -> Result<Report, CliError> {
    let SystemSpec::Atom(base) = &ctx.run.system else {
        return Err(CliError::Config("invalid config key `system.kind`: ip-curve needs the model atom".into()));
    };
    if !(alpha_min.is_finite() && alpha_max.is_finite() && alpha_min < alpha_max && points >= 2) {
        return Err(CliError::Config("ip-curve needs alpha-min < alpha-max and at least 2 points".into()));
    }
    let alphas: Vec<f64> = (0..points)
        .map(|i| alpha_min + (alpha_max - alpha_min) * i as f64 / (points - 1) as f64)
        .collect();
    let ips = ctx.pool()?.install(|| {
        run_points(&alphas, ctx.parallel(), |&alpha| {
            let spec = boxtdse::atom::ModelAtomSpec { alpha, ..base.clone() };
            ionisation_potential(&spec).map_err(|e| format!("alpha = {alpha}: {e}"))
        })
    });
    let mut rows = Vec::new();
    for (&alpha, ip) in alphas.iter().zip(ips) {
        let ip = ip.map_err(CliError::Numerical)?;
        let approx = ip_approx(alpha);
        rows.push(vec![format_sig10(alpha), format_sig10(ip), format_sig10(approx), format_sig10(approx - ip)]);
    }
    Ok(Report::ok(table(&["alpha", "ip_numeric", "ip_approx", "deviation"], rows)?))
}

/// `F_{ω₀}(ω)` of the configured pulse over the configured grid, and its
/// square normalized to one at the resonance.
pub fn cmd_fourier(ctx: &Context, omega0_ev: f64) -> Result<Report, CliError> {
    let run = &ctx.run;
    let grid = run
        .grid_ev
        .as_ref()
        .ok_or_else(|| CliError::Config("invalid config key `pulse.grid`: fourier needs pulse.grid or pulse.grid_ev".into()))?;
    if !(omega0_ev > 0.0 && omega0_ev.is_finite()) {
        return Err(CliError::Config(format!("resonance {omega0_ev} eV must be positive")));
    }
    let normalized = convolution_model(omega0_ev, run.template, grid, 1.0)?;
    let rows = grid.iter().zip(normalized).map(|(&w, n)| {
        let spec = run.template.at(w / HARTREE_EV);
        let f = fourier_component_fixed_window(spec.peak_field(), spec.omega, omega0_ev / HARTREE_EV, spec.duration());
        vec![format_sig10(w), format_sig10(f), format_sig10(n)]
    });
    Ok(Report::ok(table(&["omega_eV", "F", "F2_normalized"], rows)?))
}

/// `Ip/N` photon energies; the Ip of the configured system when `ip` is
/// not given.
pub fn cmd_thresholds(ctx: &Context, ip: Option<f64>, n_max: u32) -> Result<Report, CliError> {
    let ip = match ip {
        Some(ip) => ip,
        None => ctx.basis()?.0.ip,
    };
    if n_max == 0 {
        return Err(CliError::Config("thresholds needs n-max >= 1".into()));
    }
    let mut rows = Vec::new();
    for (n, w) in photon_thresholds(ip, n_max)?.into_iter().enumerate() {
        let u = convert_units(Quantity::EnergyEv(w))?;
        rows.push(vec![(n + 1).to_string(), format_sig10(u.omega_ev), format_sig10(u.lambda_nm)]);
    }
    Ok(Report::ok(table(&["N", "omega_eV", "lambda_nm"], rows)?))
}

fn read_records(path: &Path) -> Result<Vec<YieldRecord>, CliError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    read_csv(f)
        .map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))?
        .into_iter()
        .enumerate()
        .map(|(i, o)| o.map_err(|f| CliError::Numerical(format!("{}: row {} failed: {}", path.display(), i + 1, f.message))))
        .collect()
}

/// `Y_ion` of one scan over another, point by point.
pub fn cmd_ratio(parallel: &Path, perpendicular: &Path) -> Result<Report, CliError> {
    let a = read_records(parallel)?;
    let b = read_records(perpendicular)?;
    let ratio = boxtdse::observables::yield_ratio(&a, &b)?;
    let rows = ratio.into_iter().map(|(w, r)| vec![format_sig10(w), format_sig10(r)]);
    Ok(Report::ok(table(&["omega_eV", "ratio"], rows)?))
}
