use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diraclab::config::{BoundarySpec, Exponent, ExperimentConfig, FunctionSpec, OperatorConfig};
use diraclab::expansions::{perturbed_root_system, unperturbed_root_system};
use diraclab::green::{green0_kernel, green_kernel, opnorm_scaling};
use diraclab::harness::{emit_report, load_dir, run_equiconv, sweep, write_bundle, write_csv_rows, ReportFormat};
use diraclab::ode::{operator_mesh, DiracOperator};
use diraclab::potentials::make_potential;
use diraclab::spectrum::localize;
use diraclab::{GridFunction2, PotentialSpec, Result, C64};

#[derive(Parser)]
#[command(name = "diraclab", version, about = "Spectral toolkit for 1-D Dirac operators on [0, pi]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OperatorArgs {
    /// JSON file with boundary, potential, mesh and localize settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Boundary preset, used when no config is given.
    #[arg(long, default_value = "dirichlet_analog")]
    boundary: String,
    /// Potential as inline JSON, e.g. '{"family":"constant_offdiag","c":[0.3,0]}'.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    panels: Option<usize>,
}

impl OperatorArgs {
    fn load(&self) -> Result<OperatorConfig> {
        let mut cfg = match &self.config {
            Some(p) => OperatorConfig::load(p)?,
            None => OperatorConfig {
                boundary: BoundarySpec::Preset(self.boundary.clone()),
                ..OperatorConfig::default()
            },
        };
        if let Some(p) = &self.potential {
            cfg.potential = serde_json::from_str::<PotentialSpec>(p)?;
        }
        if let Some(n) = self.panels {
            cfg.mesh.panels = n;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one equiconvergence experiment; the CSV report goes to stdout.
    Equiconv {
        #[arg(long)]
        config: PathBuf,
        /// Also write the structured (JSON) report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the CSV report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every *.json config in a directory and write a report bundle.
    Sweep {
        #[arg(long)]
        dir: PathBuf,
        /// Output directory (default: <dir>/reports).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Localized eigenvalues next to the comparison eigenvalues.
    Spectrum {
        #[command(flatten)]
        op: OperatorArgs,
        /// Index window n in [-2m, 2m+1].
        #[arg(long, default_value_t = 10)]
        m: usize,
    },
    /// Green kernel entries on an N x N grid of cell midpoints.
    Green {
        #[command(flatten)]
        op: OperatorArgs,
        /// Spectral parameter as re,im.
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value_t = 40)]
        grid: usize,
    },
    /// Lower-bound estimates of the free resolvent norm along lambda = iy.
    Resnorm {
        #[arg(long, default_value = "dirichlet_analog")]
        boundary: String,
        #[arg(long, default_value = "2")]
        mu: String,
        #[arg(long, default_value = "2")]
        nu: String,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
        y: Vec<f64>,
        #[arg(long, default_value_t = 512)]
        panels: usize,
    },
    /// Errors of S_m^0 f and S_m f against f.
    Expand {
        #[command(flatten)]
        op: OperatorArgs,
        /// Function spec as inline JSON or a path to a JSON file.
        #[arg(long)]
        f: String,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        m: Vec<usize>,
    },
}

fn parse_exponent(s: &str) -> Result<Exponent> {
    Ok(serde_json::from_value(serde_json::Value::String(s.to_string()))?)
}

fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || diraclab::DiracError::Config(format!("expected re,im but got {s:?}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(re.parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn build_operator(cfg: &OperatorConfig, extra: &[&diraclab::ScalarFunction]) -> Result<DiracOperator> {
    let form = cfg.boundary.build()?;
    let p = make_potential(&cfg.potential)?;
    let mesh = operator_mesh(cfg.mesh, &p, extra.iter().copied());
    Ok(DiracOperator::new(p, form, mesh))
}

fn csv_out() -> csv::Writer<std::io::Stdout> {
    csv::Writer::from_writer(std::io::stdout())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Equiconv { config, json, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_equiconv(&cfg)?;
            for w in &report.metadata.warnings {
                eprintln!("warning: {w}");
            }
            match out {
                Some(p) => emit_report(&report, &p, ReportFormat::Csv)?,
                None => write_csv_rows(&report.rows, std::io::stdout())?,
            }
            if let Some(p) = json {
                emit_report(&report, &p, ReportFormat::Structured)?;
            }
            Ok(true)
        }
        Command::Sweep { dir, out } => {
            let configs = load_dir(&dir)?;
            let bundle = sweep(configs);
            let out = out.unwrap_or_else(|| dir.join("reports"));
            let index = write_bundle(&bundle, &out)?;
            eprintln!(
                "{} reports, {} errors written to {}",
                index.reports.len(),
                index.errors.len(),
                out.display()
            );
            for e in &index.errors {
                eprintln!("error in {}: {}", e.name, e.error);
            }
            Ok(index.errors.is_empty())
        }
        Command::Spectrum { op, m } => {
            let cfg = op.load()?;
            let op = build_operator(&cfg, &[])?;
            let eigs = localize(&op, m, &cfg.localize)?;
            for d in &eigs.diagnostics {
                eprintln!("note: {d}");
            }
            let mut w = csv_out();
            w.write_record(["n", "re_lambda", "im_lambda", "re_lambda0", "im_lambda0", "abs_diff", "multiplicity"])?;
            for n in eigs.indices() {
                let (l, l0) = (eigs.get(n), eigs.reference(n));
                w.serialize((n, l.re, l.im, l0.re, l0.im, (l - l0).norm(), eigs.multiplicity(n)))?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Green { op, lambda, grid } => {
            let cfg = op.load()?;
            let lambda = parse_complex(&lambda)?;
            let p = make_potential(&cfg.potential)?;
            let kernel = if p.is_zero() {
                green0_kernel(&cfg.boundary.build()?, lambda)?
            } else {
                green_kernel(&build_operator(&cfg, &[])?, lambda)?
            };
            let pts: Vec<f64> = (0..grid)
                .map(|i| (i as f64 + 0.5) * std::f64::consts::PI / grid as f64)
                .collect();
            let g = kernel.sample(&pts, &pts)?;
            let mut w = csv_out();
            w.write_record([
                "t", "x", "re_g11", "im_g11", "re_g12", "im_g12", "re_g21", "im_g21", "re_g22", "im_g22",
            ])?;
            for (t, row) in pts.iter().zip(&g) {
                for (x, m) in pts.iter().zip(row) {
                    let e = |r: usize, c: usize| m.at(r, c);
                    w.serialize((
                        t,
                        x,
                        e(0, 0).re,
                        e(0, 0).im,
                        e(0, 1).re,
                        e(0, 1).im,
                        e(1, 0).re,
                        e(1, 0).im,
                        e(1, 1).re,
                        e(1, 1).im,
                    ))?;
                }
            }
            w.flush()?;
            Ok(true)
        }
        Command::Resnorm {
            boundary,
            mu,
            nu,
            y,
            panels,
        } => {
            let form = diraclab::BoundaryMatrixPair::preset(&boundary)?;
            let params = diraclab::MeshParams {
                panels,
                ..Default::default()
            };
            let est = opnorm_scaling(&form, parse_exponent(&mu)?.0, parse_exponent(&nu)?.0, &y, &params)?;
            eprintln!("slope {:.4}, prefactor {:.4e}, a_est {}", est.slope, est.prefactor, est.a_est);
            let mut w = csv_out();
            w.write_record(["y", "estimate", "fitted_slope"])?;
            for (y, e) in est.ys.iter().zip(&est.estimates) {
                w.serialize((y, e, est.slope))?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Expand { op, f, m } => {
            let cfg = op.load()?;
            let text = if std::path::Path::new(&f).is_file() {
                std::fs::read_to_string(&f)?
            } else {
                f
            };
            let spec: FunctionSpec = serde_json::from_str(&text)?;
            let [f1, f2] = spec.build(Exponent(2.0), 0)?;
            let op = build_operator(&cfg, &[&f1, &f2])?;
            let m_max = m.iter().copied().max().unwrap_or(0);
            let eigs = localize(&op, m_max, &cfg.localize)?;
            let pert = perturbed_root_system(&op, &eigs, m_max)?;
            let free = unperturbed_root_system(op.form(), m_max, op.mesh().clone())?;
            let fv = GridFunction2::from_fns(op.mesh().clone(), &f1, &f2);
            let mut w = csv_out();
            w.write_record(["m", "system", "l2_err_vs_f", "linf_err_vs_f"])?;
            for &mm in &m {
                for (label, sys) in [("unperturbed", &free), ("perturbed", &pert)] {
                    let err = sys.partial_sum(&fv, mm)?.sub(&fv)?;
                    w.serialize((mm, label, err.l2_norm(), err.lp_norm(f64::INFINITY)?))?;
                }
            }
            w.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("DIRACLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
