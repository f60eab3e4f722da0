//! Geometry, constants, mesh, spectrum, nodal domains and bound reports for one domain,
//! and the width sweep on top of it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use chainlab::bounds::{
    class_cover_report, courant_reports, fit_constants, hinge_check, m_linear_check, reports_csv, sharp_certificate,
    weyl_check, BoundReport, Certificate, ClassKind,
};
use chainlab::fem::{solve, BoundaryCondition, Spectrum};
use chainlab::geometry::{constants_for, realize_config, DomainConfig, GeometricConstants, RealizedDomain};
use chainlab::mesh::{triangulate, TriMesh};
use chainlab::nodal::{
    classify_nodal_domains, courant_report, extract_nodal_domains, nodal_csv, ClassifierParams, CutoffSamples,
    NodalDecomposition, NodalRow, DEFAULT_CLUSTER_RTOL, DEFAULT_ZERO_TOL,
};
use chainlab::partition::{max_delta, CutoffField, PartitionParams};
use chainlab::ChainError;

use crate::svg::write_svg;
use crate::CliError;

/// Samples per arc used when estimating or verifying geometric constants.
const CONSTANT_SAMPLES: usize = 64;

/// Fractions of the admissible boundary-collar width used for the `M(t)` grid.
const COLLAR_FRACTIONS: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];

/// One batch job.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Path of the JSON domain description.
    pub config: PathBuf,
    /// Target mesh size.
    pub h: f64,
    pub eigencount: usize,
    pub epsilon: f64,
    pub beta: f64,
    /// Neck widths for a sweep, strictly decreasing.
    pub widths: Vec<f64>,
    pub out: PathBuf,
    pub seed: u64,
    /// 1-based eigenpair indices to plot.
    pub plots: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            config: PathBuf::new(),
            h: 0.05,
            eigencount: 40,
            epsilon: ClassifierParams::DEFAULT_EPSILON,
            beta: ClassifierParams::DEFAULT_BETA,
            widths: Vec::new(),
            out: PathBuf::from("out"),
            seed: 0,
            plots: vec![2],
        }
    }
}

impl RunConfig {
    pub fn validate(&self, sweep: bool) -> Result<(), CliError> {
        if !self.config.is_file() {
            return Err(CliError::ConfigNotFound(self.config.clone()));
        }
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("mesh size {} must be positive", self.h));
        }
        if self.eigencount < 2 {
            return bad(format!("eigencount {} must be at least 2", self.eigencount));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("eps {} not in (0, 1/2)", self.epsilon));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return bad(format!("beta {} not in (0, 1/2)", self.beta));
        }
        if let Some(&m) = self.plots.iter().find(|&&m| m == 0 || m > self.eigencount) {
            return bad(format!("plot index {m} not in 1..={}", self.eigencount));
        }
        if sweep {
            if self.widths.len() < 2 {
                return bad("a sweep needs at least two widths".into());
            }
            if let Some(w) = self.widths.iter().find(|&&w| !(w > 0.0 && w < 1.0)) {
                return bad(format!("width {w} not in (0, 1)"));
            }
            if self.widths.windows(2).any(|p| p[1] >= p[0]) {
                return bad("widths must be strictly decreasing".into());
            }
        }
        Ok(())
    }

    pub fn load_domain(&self) -> Result<DomainConfig, CliError> {
        if !self.config.is_file() {
            return Err(CliError::ConfigNotFound(self.config.clone()));
        }
        Ok(DomainConfig::from_path(&self.config)?)
    }
}

/// Everything computed for one domain.
pub struct Analysis {
    pub domain: RealizedDomain,
    pub constants: GeometricConstants,
    pub mesh: TriMesh,
    pub spectrum: Spectrum,
    pub decompositions: Vec<NodalDecomposition>,
    pub rows: Vec<NodalRow>,
    pub reports: Vec<BoundReport>,
}

impl Analysis {
    pub fn area(&self) -> f64 {
        self.mesh.area()
    }
}

/// Runs the numerical pipeline. Without `classify` the partition, class counts and bound
/// reports are skipped.
pub fn analyze(cfg: &DomainConfig, run: &RunConfig, context: &str, classify: bool) -> Result<Analysis, ChainError> {
    let constants = constants_for(cfg, CONSTANT_SAMPLES)?;
    let domain = realize_config(cfg, run.h)?;
    let mesh = triangulate(&domain, run.h)?;
    let spectrum = solve(&mesh, BoundaryCondition::Neumann, run.eigencount, run.seed)?;
    if spectrum.len() < run.eigencount {
        return Err(ChainError::Solver(format!(
            "only {} of {} eigenpairs available",
            spectrum.len(),
            run.eigencount
        )));
    }
    let decompositions = spectrum
        .pairs
        .par_iter()
        .map(|p| extract_nodal_domains(&mesh, &p.coeffs, DEFAULT_ZERO_TOL))
        .collect::<Result<Vec<_>, _>>()?;
    let nus: Vec<usize> = decompositions.iter().map(|d| d.nu).collect();
    let courant = courant_report(&spectrum, &nus, DEFAULT_CLUSTER_RTOL);
    let mut rows: Vec<NodalRow> = courant.into_iter().map(|c| NodalRow { courant: c, classes: None }).collect();
    let mut reports = Vec::new();
    if classify {
        classify_all(&domain, &constants, &mesh, &spectrum, &decompositions, run, &mut rows)?;
        reports = bound_reports(&domain, &constants, &mesh, &spectrum, &rows, run, context)?;
    }
    Ok(Analysis {
        domain,
        constants,
        mesh,
        spectrum,
        decompositions,
        rows,
        reports,
    })
}

fn classify_all(
    domain: &RealizedDomain,
    constants: &GeometricConstants,
    mesh: &TriMesh,
    spectrum: &Spectrum,
    decomps: &[NodalDecomposition],
    run: &RunConfig,
    rows: &mut [NodalRow],
) -> Result<(), ChainError> {
    let area = mesh.area();
    let cap = max_delta(domain, constants);
    let params = spectrum
        .pairs
        .iter()
        .map(|p| ClassifierParams::new(run.epsilon, run.beta, area, p.mu.max(f64::MIN_POSITIVE), cap))
        .collect::<Result<Vec<_>, _>>()?;
    // eigenpairs sharing a partition scale share the sampled cutoffs
    let mut scales: Vec<f64> = params.iter().map(|p| p.delta).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    for delta in scales {
        let partition = PartitionParams::new(domain, constants, delta)?;
        let samples = CutoffSamples::new(mesh, CutoffField::new(domain, &partition));
        let members: Vec<usize> = (0..params.len()).filter(|&k| params[k].delta == delta).collect();
        let counts = members
            .par_iter()
            .map(|&k| classify_nodal_domains(mesh, &decomps[k], &samples, &params[k], k + 1))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, c) in members.into_iter().zip(counts) {
            rows[k].classes = Some(c.counts);
        }
    }
    Ok(())
}

fn bound_reports(
    domain: &RealizedDomain,
    constants: &GeometricConstants,
    mesh: &TriMesh,
    spectrum: &Spectrum,
    rows: &[NodalRow],
    run: &RunConfig,
    context: &str,
) -> Result<Vec<BoundReport>, ChainError> {
    let area = mesh.area();
    let courant: Vec<_> = rows.iter().map(|r| r.courant.clone()).collect();
    let mut reports = courant_reports(&courant, context);
    for r in rows {
        if let Some(c) = r.classes {
            reports.push(class_cover_report(r.courant.nu, c, &format!("{context} m={}", r.courant.m)));
        }
    }

    for (j, kind) in ClassKind::ALL.into_iter().enumerate() {
        let data: Vec<(f64, usize)> = rows
            .iter()
            .filter(|r| r.courant.m >= 2 && r.courant.mu > 0.0)
            .filter_map(|r| r.classes.map(|c| (area * r.courant.mu, c[j])))
            .collect();
        if data.is_empty() {
            continue;
        }
        let c = fit_constants(&data, kind, run.epsilon, run.beta)?;
        let mut rep = BoundReport::new(format!("class_fit_{}", kind.name()), context, c, c).with_constant(c).logged();
        rep.satisfied = c.is_finite();
        reports.push(rep);
    }

    let collar = 0.75
        * domain.perimeter
        * (constants.tau_star * constants.delta_star).min(if constants.kappa_star > 0.0 {
            1.0 / constants.kappa_star
        } else {
            f64::INFINITY
        });
    let t_grid: Vec<f64> = COLLAR_FRACTIONS.iter().map(|f| f * collar).collect();
    reports.extend(m_linear_check(domain, constants, &t_grid, context)?.1);

    let values = spectrum.values();
    let top = spectrum.largest();
    if top > 0.0 {
        let mu_grid: Vec<f64> = (1..=5).map(|k| top * k as f64 / 5.0).collect();
        reports.extend(weyl_check(&values, area, &mu_grid, context)?.1);
    }
    reports.push(hinge_check(run.epsilon));
    Ok(reports)
}

/// Writes spectrum, nodal table, bound reports, the mesh and the requested plots.
pub fn write_artifacts(a: &Analysis, dir: &Path, plots: &[usize]) -> Result<Vec<PathBuf>, ChainError> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<(), ChainError> {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        files.push(p);
        Ok(())
    };
    put("spectrum.csv", a.spectrum.to_csv())?;
    put("nodal.csv", nodal_csv(&a.rows))?;
    put("bounds.csv", reports_csv(&a.reports))?;
    let off = dir.join("domain.off");
    a.mesh.write_off(&off)?;
    files.push(off);
    files.extend(write_plots(a, dir, plots)?);
    Ok(files)
}

fn write_plots(a: &Analysis, dir: &Path, plots: &[usize]) -> Result<Vec<PathBuf>, ChainError> {
    let mut files = Vec::new();
    for &m in plots {
        let p = dir.join(format!("eigen_{m:04}.svg"));
        write_svg(&p, &a.mesh, &a.decompositions[m - 1], m, a.spectrum.pairs[m - 1].mu)?;
        files.push(p);
    }
    Ok(files)
}

/// Result of `run`.
pub struct RunOutcome {
    pub analysis: Analysis,
    pub files: Vec<PathBuf>,
}

pub fn run_pipeline(run: &RunConfig) -> Result<RunOutcome, CliError> {
    run.validate(false)?;
    let cfg = run.load_domain()?;
    let analysis = analyze(&cfg, run, "run", true)?;
    let files = write_artifacts(&analysis, &run.out, &run.plots)?;
    Ok(RunOutcome { analysis, files })
}

/// Plots only: mesh and the requested sign plots.
pub fn render(run: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    run.validate(false)?;
    let cfg = run.load_domain()?;
    let a = analyze(&cfg, run, "render", false)?;
    std::fs::create_dir_all(&run.out).map_err(ChainError::from)?;
    let off = run.out.join("domain.off");
    a.mesh.write_off(&off)?;
    let mut files = vec![off];
    files.extend(write_plots(&a, &run.out, &run.plots)?);
    Ok(files)
}

/// Result of `sweep`: the certificate and per-width failures.
pub struct SweepOutcome {
    pub certificate: Certificate,
    pub failures: Vec<(f64, ChainError)>,
    pub files: Vec<PathBuf>,
}

/// Directory of one sweep member.
pub fn width_dir(out: &Path, w: f64) -> PathBuf {
    out.join(format!("width_{w}"))
}

/// Runs the pipeline once per width, with every neck interval set to `(-w, w)`, and
/// writes `certificate.csv` and `pleijel.csv`. Failing widths are recorded in
/// `failures.csv` and left out of the certificate.
pub fn sweep_widths(run: &RunConfig) -> Result<SweepOutcome, CliError> {
    run.validate(true)?;
    let base = run.load_domain()?;
    let results: Vec<Result<(f64, Vec<_>), ChainError>> = run
        .widths
        .par_iter()
        .map(|&w| {
            let cfg = base.with_symmetric_widths(w);
            cfg.validate()?;
            let a = analyze(&cfg, run, &format!("w={w}"), true)?;
            write_artifacts(&a, &width_dir(&run.out, w), &run.plots)?;
            Ok((a.area(), a.rows.iter().map(|r| r.courant.clone()).collect()))
        })
        .collect();
    let mut family = Vec::new();
    let mut failures = Vec::new();
    for (&w, r) in run.widths.iter().zip(results) {
        match r {
            Ok((area, rows)) => family.push((w, area, rows)),
            Err(e) => failures.push((w, e)),
        }
    }
    if family.is_empty() {
        let (_, e) = failures.swap_remove(0);
        return Err(e.into());
    }
    let certificate = sharp_certificate(&family);
    std::fs::create_dir_all(&run.out).map_err(ChainError::from)?;
    let mut files = Vec::new();
    for (name, text) in [("certificate.csv", certificate.to_csv()), ("pleijel.csv", certificate.pleijel_csv())] {
        let p = run.out.join(name);
        std::fs::write(&p, text).map_err(ChainError::from)?;
        files.push(p);
    }
    if !failures.is_empty() {
        let mut s = String::from("width,error\n");
        for (w, e) in &failures {
            let _ = writeln!(s, "{w},\"{}\"", e.to_string().replace('"', "'"));
        }
        let p = run.out.join("failures.csv");
        std::fs::write(&p, s).map_err(ChainError::from)?;
        files.push(p);
    }
    Ok(SweepOutcome {
        certificate,
        failures,
        files,
    })
}
