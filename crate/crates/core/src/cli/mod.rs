//! Experiment driver: one subcommand per experiment, configured by a
//! sectioned `key = value` file, reporting through CSV files and a one-line
//! verdict.

mod config;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, HeatContentConfig, ModeCount, Overrides, Weight};
pub use report::{write_atomic, CsvReport};

use crate::error::{invalid, Result};
use crate::fem::{assemble, discrete_harmonic_extension, SystemMatrices};
use crate::geometry::{make_domain_with, refine, write_mesh};
use crate::heatflow::{check_discrete_overdetermination, Verdict};
use crate::rigidity::{
    heat_content_experiment, interior_surface_check, serrin_check, torsion, zero_average_test_functions, RNG_NAME,
};
use crate::spectral::{eigenbasis_with, EigenBasis, EigenMethod, SpectralOptions};
use crate::sphereband::{band_eigenbasis, constant_flow_report, FLOW_MODES};
use report::num;

/// Default verdict threshold of the flux, Serrin and interior checks.
pub const DEFAULT_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the mesh and write it in the plain-text mesh format.
    Mesh,
    /// Compute the Dirichlet eigenbasis.
    Eigs,
    /// Boundary flux of the heat flow at every configured time.
    Flux,
    /// Torsion function and the constancy of its flux.
    Serrin,
    /// Short-time heat-content fit against the geometric coefficients.
    Heatcontent,
    /// Trace and flux constancy on the interface circle.
    Interior,
    /// Constant flow test on a sphere cap or band.
    Sphereband,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Eigs => "eigs",
            Command::Flux => "flux",
            Command::Serrin => "serrin",
            Command::Heatcontent => "heatcontent",
            Command::Interior => "interior",
            Command::Sphereband => "sphereband",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heat-rigidity", version, about = "Overdetermined heat-flow experiments on planar domains and sphere bands")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Uniform refinements applied after meshing.
    #[arg(long, global = true, value_name = "N")]
    pub refine: Option<usize>,
    /// Number of eigenpairs.
    #[arg(long, global = true, value_name = "K")]
    pub modes: Option<usize>,
    /// Verdict threshold.
    #[arg(long, global = true, value_name = "X", allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Seed of the random test functions.
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,
}

/// Result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Verdict,
    /// The line printed on standard output.
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

fn build_system(cfg: &ExperimentConfig) -> Result<SystemMatrices> {
    let mut mesh = make_domain_with(&cfg.domain, &cfg.mesh_options)?;
    for _ in 0..cfg.refine {
        mesh = refine(&mesh)?;
    }
    assemble(&mesh)
}

fn build_basis(sys: &SystemMatrices, cfg: &ExperimentConfig) -> Result<EigenBasis> {
    let n = sys.dofs.num_interior();
    let (count, method) = match cfg.mode_count {
        ModeCount::All => (n, EigenMethod::Dense),
        ModeCount::Count(k) => {
            if k > n {
                log::warn!("requested {k} modes but the mesh has {n} interior unknowns");
            }
            (k.min(n), cfg.method)
        }
    };
    let opts = SpectralOptions { method, li_yau_constant: cfg.li_yau_constant, seed: cfg.seed, ..Default::default() };
    eigenbasis_with(sys, count, &opts)
}

/// Metadata common to every CSV.
fn header(command: Command, cfg: &ExperimentConfig, h: f64, k_used: usize, verdict: Verdict) -> CsvReport {
    let mut r = CsvReport::default();
    r.meta("tool", format!("heat-rigidity {}", crate::VERSION))
        .meta("command", command.name())
        .meta("config_sha256", cfg.hash())
        .meta("mesh_h", num(h))
        .meta("K_used", k_used)
        .meta("seed", cfg.seed)
        .meta("rng", RNG_NAME)
        .meta("verdict", verdict.as_str());
    r
}

fn finish(
    command: Command,
    cfg: &ExperimentConfig,
    mut table: CsvReport,
    meta: CsvReport,
    verdict: Verdict,
    summary: String,
) -> Result<Outcome> {
    let mut all = meta.meta;
    all.append(&mut table.meta);
    table.meta = all;
    let path = cfg.output_dir.join(format!("{}.csv", command.name()));
    let path = write_atomic(&path, table.render().as_bytes())?;
    Ok(Outcome { verdict, summary: format!("{}: {} ({summary})", command.name(), verdict.as_str()), artifacts: vec![path] })
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs one experiment and writes its artifacts below the output directory.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let threshold = cfg.threshold.unwrap_or(DEFAULT_THRESHOLD);
    match command {
        Command::Mesh => {
            let sys = build_system(cfg)?;
            let mesh = &sys.mesh;
            let mut buf = Vec::new();
            write_mesh(mesh, &mut buf)?;
            let path = write_atomic(&cfg.output_dir.join("mesh.txt"), &buf)?;
            let summary = format!(
                "mesh: pass ({} vertices, {} triangles, {} boundary loops, h = {:.4e})",
                mesh.num_vertices(),
                mesh.num_triangles(),
                mesh.boundary_loops.len(),
                mesh.h
            );
            Ok(Outcome { verdict: Verdict::Pass, summary, artifacts: vec![path] })
        }
        Command::Eigs => {
            let sys = build_system(cfg)?;
            let basis = build_basis(&sys, cfg)?;
            let mut table = CsvReport::new(&["k", "lambda", "alpha", "residual", "cluster"]);
            for k in 0..basis.len() {
                let g = basis.group_of(k).unwrap_or(0);
                table.row(vec![
                    (k + 1).to_string(),
                    num(basis.lambdas[k]),
                    num(basis.alphas[k]),
                    num(basis.residuals[k]),
                    (g + 1).to_string(),
                ]);
            }
            table.meta("method", format!("{:?}", basis.method)).meta("li_yau_constant", num(basis.li_yau_constant));
            let mut text = Vec::new();
            basis.write_text(&mut text)?;
            let modes = write_atomic(&cfg.output_dir.join("eigs.txt"), &text)?;
            let meta = header(command, cfg, sys.mesh.h, basis.len(), Verdict::Pass);
            let summary = format!("{} modes, lambda_1 = {:.6}, {} clusters", basis.len(), basis.lambdas[0], basis.groups.len());
            let mut out = finish(command, cfg, table, meta, Verdict::Pass, summary)?;
            out.artifacts.push(modes);
            Ok(out)
        }
        Command::Flux => {
            let sys = build_system(cfg)?;
            let basis = build_basis(&sys, cfg)?;
            let rep = check_discrete_overdetermination(&sys, &basis, &cfg.times, cfg.tolerance, threshold)?;
            let mut table = CsvReport::new(&["t", "mean_flux", "deviation", "K_used"]);
            for e in &rep.entries {
                table.row(vec![num(e.profile.t), num(e.profile.mean), num(e.profile.deviation), e.k_used.to_string()]);
            }
            let balance = rep.entries.iter().map(|e| e.profile.balance_error()).fold(0.0, f64::max);
            table
                .meta("threshold", num(threshold))
                .meta("max_deviation", num(rep.max_deviation))
                .meta("max_balance_error", num(balance))
                .meta("time_clustering", format!("{:?}", rep.clustering))
                .meta("means_decreasing", rep.means_decreasing);
            let k_used = rep.entries.iter().map(|e| e.k_used).max().unwrap_or(0);
            let meta = header(command, cfg, sys.mesh.h, k_used, rep.verdict);
            let summary = format!("max deviation {:.3e}, threshold {threshold}", rep.max_deviation);
            finish(command, cfg, table, meta, rep.verdict, summary)
        }
        Command::Serrin => {
            let sys = build_system(cfg)?;
            let basis = build_basis(&sys, cfg)?;
            let pair = torsion(&sys, &basis, basis.len())?;
            let flux = serrin_check(&sys, &pair)?;
            let mut table = CsvReport::new(&["x", "y", "flux"]);
            for (&v, q) in sys.dofs.boundary.iter().zip(&flux.q) {
                let p = sys.mesh.vertices[v];
                table.row(vec![num(p[0]), num(p[1]), num(*q)]);
            }
            let verdict = pass_if(flux.deviation <= threshold);
            table
                .meta("threshold", num(threshold))
                .meta("mean_flux", num(flux.mean))
                .meta("deviation", num(flux.deviation))
                .meta("spectral_discrepancy", num(pair.discrepancy));
            let meta = header(command, cfg, sys.mesh.h, pair.k, verdict);
            let summary = format!("deviation {:.3e}, mean flux {:.6}, threshold {threshold}", flux.deviation, flux.mean);
            finish(command, cfg, table, meta, verdict, summary)
        }
        Command::Heatcontent => {
            let sys = build_system(cfg)?;
            let basis = build_basis(&sys, cfg)?;
            let hc = &cfg.heat_content;
            let psi = match hc.weight {
                Weight::One => vec![1.0; sys.dofs.num_vertices()],
                Weight::Harmonic => {
                    let boundary = zero_average_test_functions(&sys, 1, cfg.seed).remove(0);
                    discrete_harmonic_extension(&sys, &boundary)?
                }
            };
            let rep = heat_content_experiment(&sys, &basis, &psi, hc.window)?;
            let c = rep.fit.coefficients();
            let targets = [rep.targets.c0, rep.targets.c1, rep.targets.c2];
            let ok = (0..3).all(|i| (c[i] - targets[i]).abs() <= (hc.tolerances[i] * targets[i].abs()).max(10.0 * rep.noise[i]));
            let verdict = if rep.limited { Verdict::Inconclusive } else { pass_if(ok) };
            let mut table = CsvReport::new(&["t", "value"]);
            for &(t, v) in &rep.fit.samples {
                table.row(vec![num(t), num(v)]);
            }
            table.meta("weight", format!("{:?}", hc.weight)).meta("t_min", num(rep.window.t_min));
            table.meta("t_max", num(rep.window.t_max)).meta("widened", rep.widened);
            for i in 0..3 {
                table.meta(&format!("c{i}"), num(c[i])).meta(&format!("c{i}_target"), num(targets[i]));
                table.meta(&format!("c{i}_noise"), num(rep.noise[i]));
            }
            table.meta("fit_residual", num(rep.fit.residual)).meta("condition", num(rep.fit.condition));
            table.meta("outside_theory", rep.outside_theory);
            let meta = header(command, cfg, sys.mesh.h, rep.max_k_used, verdict);
            let summary = format!(
                "c0 = {:.6}, c1 = {:.6}, c2 = {:.6} against {:.6}, {:.6}, {:.6}",
                c[0], c[1], c[2], targets[0], targets[1], targets[2]
            );
            finish(command, cfg, table, meta, verdict, summary)
        }
        Command::Interior => {
            if cfg.mesh_options.interface_radius.is_none() {
                return Err(invalid("interior check needs [domain] interface_radius"));
            }
            let sys = build_system(cfg)?;
            let basis = build_basis(&sys, cfg)?;
            let rep = interior_surface_check(&sys, &basis, 0, &cfg.times, &cfg.taus, cfg.tolerance, threshold)?;
            let mut table = CsvReport::new(&["kind", "t", "mean", "variation"]);
            for e in &rep.traces {
                table.row(vec!["trace".into(), num(e.tau), num(e.mean), num(e.variation)]);
            }
            for e in &rep.fluxes {
                table.row(vec!["flux".into(), num(e.t), num(e.mean), num(e.deviation)]);
            }
            table
                .meta("threshold", num(threshold))
                .meta("max_trace_variation", num(rep.max_trace_variation))
                .meta("max_flux_deviation", num(rep.max_flux_deviation))
                .meta("bounds_subdomain", rep.bounds_subdomain);
            let meta = header(command, cfg, sys.mesh.h, basis.len(), rep.verdict);
            let summary = format!(
                "trace variation {:.3e}, flux deviation {:.3e}, threshold {threshold}",
                rep.max_trace_variation, rep.max_flux_deviation
            );
            finish(command, cfg, table, meta, rep.verdict, summary)
        }
        Command::Sphereband => {
            let spec = cfg.band;
            let rep = constant_flow_report(&spec, &cfg.times)?;
            let lambda1 = band_eigenbasis(&spec, 1)?.lambdas[0];
            let mut table = CsvReport::new(&["t", "q1", "q2", "F"]);
            for e in &rep.entries {
                table.row(vec![num(e.t), num(e.q1), e.q2.map(num).unwrap_or_default(), num(e.f)]);
            }
            let noise: Vec<String> = rep.entries.iter().map(|e| num(e.noise)).collect();
            table.meta("region", spec.shape.label()).meta("lambda_1", num(lambda1)).meta("noise", noise.join(";"));
            let (a, b) = spec.interval();
            let meta = header(command, cfg, (b - a) / (spec.n_points - 1) as f64, FLOW_MODES.min(spec.n_points - 2), rep.verdict);
            let worst = rep.entries.iter().map(|e| e.f.abs()).fold(0.0, f64::max);
            let summary = format!("{}, max |F| {worst:.3e}, lambda_1 = {lambda1:.6}", spec.shape.label());
            finish(command, cfg, table, meta, rep.verdict, summary)
        }
    }
}

/// Parses arguments, runs the experiment, prints the verdict line and
/// returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let overrides = Overrides {
        out: args.out.clone(),
        refine: args.refine,
        modes: args.modes,
        threshold: args.threshold,
        seed: args.seed,
    };
    let cfg = match args.config.as_deref().map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load) {
        Ok(mut cfg) => cfg.apply(&overrides).map(|_| cfg),
        Err(e) => Err(e),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("heat-rigidity: invalid configuration: {e}");
            return 2;
        }
    };
    match run(args.command, &cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("heat-rigidity {}: {e}", args.command.name());
            println!("{}: inconclusive (error: {e})", args.command.name());
            2
        }
    }
}
