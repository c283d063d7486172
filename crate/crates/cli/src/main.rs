use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use frs_core::fem::l2_norm_values;
use frs_core::harness::config::{Axis, StudyConfig};
use frs_core::harness::{
    run_nonsymmetric_study, run_prefactor_study, run_spatial_study, run_temporal_study, solve_on, ExperimentReport,
    SolutionCache,
};
use frs_core::oracle::mode_response;
use frs_core::MeshFamily;

#[derive(Parser)]
#[command(name = "frs", version, about = "Semilinear time-fractional Rayleigh-Stokes solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a mesh of the unit square as text.
    Mesh {
        #[arg(long, value_enum, default_value = "symmetric")]
        family: Family,
        /// Subintervals per side.
        #[arg(long = "M", short = 'm')]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the scalar mode response e_lambda(t).
    Oracle {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        t: f64,
    },
    /// Solve once and write the final nodal values as `x,y,u` rows.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a refinement study and write its error table.
    Convergence {
        #[arg(value_enum)]
        study: Study,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `axis` key of a prefactor study.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Emit a markdown table instead of CSV.
        #[arg(long)]
        md: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Symmetric,
    Nonsymmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Spatial,
    Temporal,
    Prefactor,
    Nonsymmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Spatial,
    Temporal,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Mesh { family, m, out } => {
            let family = match family {
                Family::Symmetric => MeshFamily::Symmetric(m),
                Family::Nonsymmetric => MeshFamily::Nonsymmetric(m),
            };
            let mesh = family.build()?;
            let mut buf = Vec::new();
            mesh.write_text(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Oracle { lambda, alpha, gamma, t } => {
            let v = mode_response(lambda, t, alpha, gamma)?;
            println!("{v:.17e}");
            Ok(())
        }
        Command::Run { config, out } => run(&config, out),
        Command::Convergence {
            study,
            config,
            axis,
            md,
            out,
        } => {
            let cfg = load(&config)?;
            let reports = match study {
                Study::Spatial => run_spatial_study(&cfg)?,
                Study::Temporal => run_temporal_study(&cfg)?,
                Study::Nonsymmetric => run_nonsymmetric_study(&cfg)?,
                Study::Prefactor => {
                    let axis = match axis {
                        Some(AxisArg::Spatial) => Axis::Spatial,
                        Some(AxisArg::Temporal) => Axis::Temporal,
                        None => cfg.axis,
                    };
                    run_prefactor_study(&cfg, axis)?
                }
            };
            let text = render(&reports, md);
            emit(out.as_deref().or(cfg.output.as_deref()), text.as_bytes())
        }
    }
}

fn load(path: &Path) -> Result<StudyConfig> {
    StudyConfig::from_path(path).with_context(|| format!("reading config {}", path.display()))
}

/// Uses the first alpha and the largest M and N of the configuration.
fn run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(config)?;
    let alpha = cfg.alphas[0];
    let m = cfg.m_list.iter().copied().max().unwrap_or(0);
    let n = cfg.n_list.iter().copied().max().unwrap_or(0);
    if cfg.alphas.len() > 1 || cfg.m_list.len() > 1 || cfg.n_list.len() > 1 {
        log::warn!("single solve uses alpha = {alpha}, M = {m}, N = {n}");
    }
    let problem = cfg.problem(alpha)?;
    let cache = match &cfg.cache_dir {
        Some(d) => SolutionCache::at(d),
        None => SolutionCache::disabled(),
    };
    let sol = solve_on(&problem, &cfg.scheme_config(n), cfg.family.with(m), &cache)?;
    eprintln!(
        "alpha = {alpha}, T = {}, {} with N = {n}: ||u_h(T)|| = {:.6e}",
        problem.t_final,
        sol.mesh.family(),
        l2_norm_values(&sol.mesh, &sol.values)
    );
    let mut buf = String::from("x,y,u\n");
    for (p, u) in sol.mesh.nodes().iter().zip(&sol.values) {
        buf.push_str(&format!("{},{},{:e}\n", p[0], p[1], u));
    }
    emit(out.as_deref().or(cfg.output.as_deref()), buf.as_bytes())
}

fn render(reports: &[ExperimentReport], md: bool) -> String {
    if reports.is_empty() {
        return String::new();
    }
    let single = reports.len() == 1;
    let mut text = String::new();
    for (i, rep) in reports.iter().enumerate() {
        if md {
            if i > 0 {
                text.push('\n');
            }
            text.push_str(&rep.to_markdown());
        } else {
            if !single {
                if i > 0 {
                    text.push('\n');
                }
                text.push_str(&format!("# {} case={} alpha={}\n", rep.kind.name(), rep.case, rep.alpha));
            }
            text.push_str(&rep.to_csv());
        }
    }
    text
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
