//! End-to-end equiconvergence experiments and their reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ComparisonMode, Exponent, ExperimentConfig};
use crate::error::{DiracError, Result, StageExt};
use crate::expansions::{perturbed_root_system, unperturbed_root_system, RootSystem};
use crate::green::kernel_bound;
use crate::grid::GridFunction2;
use crate::mesh::MeshParams;
use crate::ode::{operator_mesh, DiracOperator};
use crate::potentials::{gauge_reduce, make_potential};
use crate::spectrum::{contour_family, localize};

pub const CSV_HEADER: &str = "m,nu,norm_diff,admissible,excluded_case";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// κ = ν = ∞, μ = 1.
    pub excluded_case: bool,
}

fn reciprocal(e: f64) -> Result<BigRational> {
    if e.is_infinite() {
        return Ok(BigRational::from_integer(BigInt::from(0)));
    }
    let r = BigRational::from_float(e).ok_or(DiracError::InvalidExponent(e))?;
    Ok(r.recip())
}

/// 1/κ + 1/μ − 1/ν ≤ 1 in exact rational arithmetic (1/∞ = 0), excluding κ = ν = ∞, μ = 1.
pub fn admissible(kappa: f64, mu: f64, nu: f64) -> Result<Admissibility> {
    if kappa.is_nan() || kappa <= 1.0 {
        return Err(DiracError::OutsideTheorem(kappa));
    }
    for e in [mu, nu] {
        if e.is_nan() || e < 1.0 {
            return Err(DiracError::InvalidExponent(e));
        }
    }
    let excluded_case = kappa.is_infinite() && nu.is_infinite() && mu == 1.0;
    let lhs = reciprocal(kappa)? + reciprocal(mu)? - reciprocal(nu)?;
    let holds = lhs <= BigRational::from_integer(BigInt::from(1));
    Ok(Admissibility {
        admissible: holds && !excluded_case,
        excluded_case,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub m: usize,
    pub nu: Exponent,
    pub norm_diff: f64,
    pub admissible: bool,
    pub excluded_case: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuVerdict {
    pub nu: Exponent,
    pub admissible: bool,
    pub excluded_case: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub kappa: Exponent,
    /// N₀ of the localization.
    pub tail_start: usize,
    /// sup |G| over the sampled γ_k circles.
    pub m_est: Option<f64>,
    pub mesh: MeshParams,
    pub mesh_nodes: usize,
    /// Seconds per stage.
    pub timings: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiconvReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<NuVerdict>,
    pub metadata: ReportMetadata,
}

impl EquiconvReport {
    /// Rows for one ν, in schedule order.
    pub fn series(&self, nu: Exponent) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.nu == nu).collect()
    }
}

struct Timer {
    start: Instant,
    log: Vec<(String, f64)>,
}

impl Timer {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.log.push((stage.to_string(), (now - self.start).as_secs_f64()));
        self.start = now;
    }
}

/// Builds both root systems, evaluates ‖S_m f − S_m⁰ f‖_ν over the schedule
/// and attaches the admissibility verdicts.
pub fn run_equiconv(config: &ExperimentConfig) -> Result<EquiconvReport> {
    config.validate()?;
    let mut timer = Timer {
        start: Instant::now(),
        log: Vec::new(),
    };
    let mut warnings = Vec::new();
    let form = config.boundary.build().stage("boundary form")?;
    let p = make_potential(&config.potential).stage("potential")?;
    let [f1, f2] = config.f.build(config.mu, config.seed).stage("test function")?;
    let class = p.kappa_class();
    let kappa = config.kappa.unwrap_or(Exponent(class.sup()));
    if !class.admits(kappa.0) {
        warnings.push(format!("the potential is not in L_{kappa}; the declared kappa is not attained"));
    }

    let mesh = operator_mesh(config.mesh, &p, [&f1, &f2]);
    let f = GridFunction2::from_fns(mesh.clone(), &f1, &f2).with_mu(config.mu.0);
    let op = DiracOperator::new(p.clone(), form, mesh.clone());
    let m_max = *config.m_schedule.last().expect("validated");
    timer.lap("setup");

    let eigs = localize(&op, m_max + 1, &config.localize).stage("localize")?;
    warnings.extend(eigs.diagnostics.iter().cloned());
    timer.lap("localize");

    let system = perturbed_root_system(&op, &eigs, m_max).stage("perturbed root system")?;
    warnings.extend(system.diagnostics.iter().cloned());
    let reference: RootSystem = match config.comparison {
        ComparisonMode::Free => unperturbed_root_system(&form, m_max, mesh.clone()),
        ComparisonMode::CorollaryDiagonal => {
            let gauge = gauge_reduce(&p, &form, &mesh);
            unperturbed_root_system(&gauge.reduced_form, m_max, mesh.clone())
                .map(|s| s.gauge_transformed(gauge.gamma, |x| gauge.transform_at(x)))
        }
    }
    .stage("comparison root system")?;
    timer.lap("root systems");

    let m_est = match contour_family(&eigs, &[], config.localize.delta) {
        Ok(fam) => {
            let near: Vec<_> = fam.circles.into_iter().filter(|(k, _)| k.abs() <= 10).collect();
            let bounds = kernel_bound(&op, &near, 8, 16).stage("kernel bound")?;
            Some(bounds.iter().map(|b| b.1).fold(0.0, f64::max))
        }
        Err(e) => {
            warnings.push(format!("kernel bound skipped: {e}"));
            None
        }
    };
    timer.lap("kernel bound");

    let mut verdicts = Vec::new();
    for &nu in &config.nu {
        let v = match admissible(kappa.0, config.mu.0, nu.0) {
            Ok(v) => v,
            Err(DiracError::OutsideTheorem(k)) => {
                warnings.push(format!("kappa = {k} is outside the theorem range (1, inf]"));
                Admissibility {
                    admissible: false,
                    excluded_case: false,
                }
            }
            Err(e) => return Err(e),
        };
        if !v.admissible {
            warnings.push(format!(
                "(kappa, mu, nu) = ({kappa}, {}, {nu}) is not admissible; decay is not guaranteed",
                config.mu
            ));
        }
        verdicts.push(NuVerdict {
            nu,
            admissible: v.admissible,
            excluded_case: v.excluded_case,
        });
    }

    let diffs = config
        .m_schedule
        .par_iter()
        .map(|&m| {
            let s = system.partial_sum(&f, m)?;
            let s0 = reference.partial_sum(&f, m)?;
            s.sub(&s0)
        })
        .collect::<Result<Vec<_>>>()
        .stage("partial sums")?;
    let mut rows = Vec::new();
    for (&m, d) in config.m_schedule.iter().zip(&diffs) {
        for v in &verdicts {
            rows.push(ReportRow {
                m,
                nu: v.nu,
                norm_diff: d.lp_norm(v.nu.0)?,
                admissible: v.admissible,
                excluded_case: v.excluded_case,
            });
        }
    }
    timer.lap("norms");

    Ok(EquiconvReport {
        name: config.name.clone(),
        config: config.clone(),
        rows,
        verdicts,
        metadata: ReportMetadata {
            kappa,
            tail_start: eigs.tail_start,
            m_est,
            mesh: config.mesh,
            mesh_nodes: mesh.len(),
            timings: timer.log,
            warnings,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Structured,
}

pub fn write_csv_rows<W: std::io::Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_report(report: &EquiconvReport, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv_rows(&report.rows, std::fs::File::create(path)?),
        ReportFormat::Structured => {
            std::fs::write(path, serde_json::to_string_pretty(report)?)?;
            Ok(())
        }
    }
}

pub fn read_csv_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header.join(",") != CSV_HEADER {
        return Err(DiracError::Config(format!("unexpected report header {header:?}")));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

pub fn read_structured(path: &Path) -> Result<EquiconvReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub name: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub reports: Vec<(String, EquiconvReport)>,
    pub errors: Vec<ErrorRecord>,
}

/// Runs every configuration; a failing one becomes an error record.
pub fn sweep(configs: Vec<(String, Result<ExperimentConfig>)>) -> ReportBundle {
    let outcomes: Vec<(String, Result<EquiconvReport>)> = configs
        .into_par_iter()
        .map(|(name, cfg)| {
            let report = cfg.and_then(|c| run_equiconv(&c));
            (name, report)
        })
        .collect();
    let mut bundle = ReportBundle::default();
    for (name, r) in outcomes {
        match r {
            Ok(rep) => bundle.reports.push((name, rep)),
            Err(e) => bundle.errors.push(ErrorRecord {
                name,
                error: e.to_string(),
            }),
        }
    }
    bundle
}

/// `*.json` configurations in `dir`, sorted by file name, labelled by file stem.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, Result<ExperimentConfig>)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (name, ExperimentConfig::load(&p))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleIndex {
    pub reports: Vec<BundleEntry>,
    pub errors: Vec<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub name: String,
    pub csv: String,
    pub json: String,
}

/// Writes `<name>.csv`, `<name>.json` per report and `index.json` into `out`.
pub fn write_bundle(bundle: &ReportBundle, out: &Path) -> Result<BundleIndex> {
    std::fs::create_dir_all(out)?;
    let mut entries = Vec::new();
    for (name, rep) in &bundle.reports {
        let csv = format!("{name}.csv");
        let json = format!("{name}.json");
        emit_report(rep, &out.join(&csv), ReportFormat::Csv)?;
        emit_report(rep, &out.join(&json), ReportFormat::Structured)?;
        entries.push(BundleEntry {
            name: name.clone(),
            csv,
            json,
        });
    }
    let index = BundleIndex {
        reports: entries,
        errors: bundle.errors.clone(),
    };
    std::fs::write(out.join("index.json"), serde_json::to_string_pretty(&index)?)?;
    Ok(index)
}
