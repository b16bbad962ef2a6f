//! The `uframe` command line: detector checks and reproducible experiments.
//!
//! Exit codes: 0 on success, 2 on validation failures (invalid POVM files,
//! singular frames, non-universal detectors, bad configs), 1 on I/O and JSON
//! errors. Diagnostics go to standard error; reports are JSON on standard
//! output or at `--output`. A report embeds the fully resolved config, and
//! the same config plus seed always produces byte-identical output.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::covariant::{
    abelian_ancilla, abelian_dual, sampled_sud_frame, sud_canonical_dual_xi, sud_frame_operator,
    sud_params, BellPovm, WeylSystem,
};
use crate::error::Error;
use crate::estimation::{
    delta_obs_analytic, delta_opt_analytic, delta_xi_mc, haar_identity_check, variance_report,
};
use crate::frames::{completeness_defect, expand};
use crate::io;
use crate::matrix::{pauli, CMatrix};
use crate::povm::{DensityMatrix, Observable};
use crate::tolerances::FRAME_COND_TOL;

#[derive(Debug, Parser)]
#[command(
    name = "uframe",
    version,
    about = "Operator-frame detectors and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Operator frame utilities.
    Frame {
        #[command(subcommand)]
        action: FrameAction,
    },
    /// POVM utilities.
    Povm {
        #[command(subcommand)]
        action: PovmAction,
    },
    /// Group-covariant detector diagnostics.
    Covariant {
        #[command(subcommand)]
        action: CovariantAction,
    },
    /// Config-driven experiments.
    Estimate {
        #[command(subcommand)]
        action: EstimateAction,
    },
}

#[derive(Debug, Subcommand)]
enum FrameAction {
    /// Print frame bounds and the frame verdict for a frame file.
    Check { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum PovmAction {
    /// Validate a POVM file, report informational completeness, and (with
    /// an ancilla) universality.
    Check {
        file: PathBuf,
        /// Ancilla state (matrix JSON) for the universality check.
        #[arg(long)]
        ancilla: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CovariantAction {
    /// Weyl-Heisenberg system diagnostics.
    Weyl {
        #[arg(long)]
        d: usize,
        /// Run and print orthogonality/cocycle defects.
        #[arg(long)]
        check: bool,
    },
    /// Closed-form SU(d) quantities for an ancilla.
    Sud {
        #[arg(long)]
        d: usize,
        /// Ancilla state file (matrix JSON); defaults to the pure basis state.
        #[arg(long)]
        ancilla: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum EstimateAction {
    /// Run the experiment described by a JSON config.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config shot budget.
    #[arg(long)]
    shots: Option<u64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write per-shot values as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Reconstruct,
    Universality,
    VarianceScan,
    OptimalityDemo,
    HaarCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    Weyl,
    Sud,
}

fn default_ancilla() -> String {
    "pure-basis".into()
}

fn default_observable() -> String {
    "random-hermitian".into()
}

fn default_shots() -> u64 {
    10_000
}

/// A fully specified experiment. Keyword ancillas: `paper-abelian`,
/// `pure-basis`, `maximally-mixed`; keyword observables: `pauli-z`,
/// `random-hermitian`; anything else is a matrix JSON path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub detector: Detector,
    #[serde(default = "default_ancilla")]
    pub ancilla: String,
    #[serde(default = "default_observable")]
    pub observable: String,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), Error> {
        if self.d < 2 {
            return Err(Error::InvalidArgument(format!(
                "d must be ≥ 2, got {}",
                self.d
            )));
        }
        if self.shots < 1 {
            return Err(Error::InvalidArgument("shots must be ≥ 1".into()));
        }
        Ok(())
    }

    fn resolve_ancilla(&self) -> Result<DensityMatrix, Error> {
        match self.ancilla.as_str() {
            "paper-abelian" => abelian_ancilla(self.d),
            "pure-basis" => Ok(DensityMatrix::pure_basis(self.d, 0)),
            "maximally-mixed" => Ok(DensityMatrix::maximally_mixed(self.d)),
            path => io::load_density(Path::new(path)),
        }
    }

    fn resolve_observable(&self) -> Result<Observable, Error> {
        match self.observable.as_str() {
            "pauli-z" => {
                if self.d == 2 {
                    Observable::hermitian(pauli::z())
                } else {
                    // traceless diagonal stand-in for higher dimensions
                    let d = self.d;
                    Observable::hermitian(CMatrix::from_fn(d, d, |r, c| {
                        if r != c {
                            Complex64::new(0.0, 0.0)
                        } else if r == 0 {
                            Complex64::new(1.0, 0.0)
                        } else if r == 1 {
                            Complex64::new(-1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    }))
                }
            }
            "random-hermitian" => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x0b5e);
                Observable::hermitian(random_hermitian(self.d, &mut rng))
            }
            path => io::load_observable(Path::new(path)),
        }
    }
}

fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
    .symmetrize()
}

/// Entry point used by the `uframe` binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Io(_) | Error::Json(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Frame {
            action: FrameAction::Check { file },
        } => frame_check(&file),
        Command::Povm {
            action: PovmAction::Check { file, ancilla },
        } => povm_check(&file, ancilla.as_deref()),
        Command::Covariant { action } => match action {
            CovariantAction::Weyl { d, check } => covariant_weyl(d, check),
            CovariantAction::Sud { d, ancilla } => covariant_sud(d, ancilla.as_deref()),
        },
        Command::Estimate {
            action: EstimateAction::Run(args),
        } => estimate_run(args),
    }
}

fn frame_check(file: &Path) -> Result<(), Error> {
    let frame = io::load_frame(file)?;
    let (a, b) = frame.frame_bounds();
    let is_frame = frame.is_frame(FRAME_COND_TOL);
    println!("elements: {}", frame.len());
    println!("shape:    {}x{}", frame.dim_h(), frame.dim_k());
    println!("bounds:   a = {a:.12e}, b = {b:.12e}");
    println!("frame:    {is_frame}");
    if is_frame {
        Ok(())
    } else {
        Err(Error::NotAFrame(format!(
            "min eigenvalue {a:.3e} (max {b:.3e})"
        )))
    }
}

fn povm_check(file: &Path, ancilla: Option<&Path>) -> Result<(), Error> {
    let povm = io::load_povm(file)?;
    let report = povm.validate()?;
    let min_eig = report
        .element_min_eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    println!("outcomes:            {}", povm.len());
    println!("dimension:           {}", povm.dim());
    println!("completeness defect: {:.3e}", report.completeness_defect);
    println!("min eigenvalue:      {min_eig:.3e}");
    if povm.split().is_none() {
        println!(
            "info-complete:       {}",
            povm.is_info_complete(FRAME_COND_TOL)
        );
    }
    if let Some(path) = ancilla {
        if povm.split().is_none() {
            return Err(Error::InvalidArgument(
                "universality needs a bipartite POVM; add dim_h/dim_k to the file".into(),
            ));
        }
        let nu = io::load_density(path)?;
        let report = povm.universality_report(&nu, FRAME_COND_TOL)?;
        let (a, b) = (report.bound_lower, report.bound_upper);
        println!(
            "universal:           {} (bounds a = {a:.6e}, b = {b:.6e})",
            report.universal
        );
        if !report.universal {
            return Err(Error::NotAFrame(format!(
                "detector is not universal for this ancilla (a = {a:.3e}, b = {b:.3e})"
            )));
        }
    }
    Ok(())
}

fn covariant_weyl(d: usize, check: bool) -> Result<(), Error> {
    let w = WeylSystem::new(d)?;
    println!("group:     Z_{d} x Z_{d}");
    println!("unitaries: {}", w.len());
    if check {
        let orth = w.orthogonality_defect();
        let coc = w.cocycle_defect();
        println!("orthogonality defect: {orth:.3e}");
        println!("cocycle defect:       {coc:.3e}");
        if orth > 1e-10 || coc > 1e-10 {
            return Err(Error::InvalidArgument(
                "Weyl diagnostics exceeded tolerance".into(),
            ));
        }
    }
    Ok(())
}

fn covariant_sud(d: usize, ancilla: Option<&Path>) -> Result<(), Error> {
    let nu = match ancilla {
        Some(path) => io::load_density(path)?,
        None => DensityMatrix::pure_basis(d, 0),
    };
    if nu.dim() != d {
        return Err(Error::ShapeMismatch(format!(
            "ancilla dimension {} does not match --d {d}",
            nu.dim()
        )));
    }
    let params = sud_params(&nu)?;
    let f = sud_frame_operator(&nu);
    let xi = sud_canonical_dual_xi(&nu)?;
    println!("p  = {:.12}", params.p);
    println!("a  = {:.12}", params.a);
    println!("b  = {:.12}", params.b);
    let eigs = f.eigenvalues();
    println!(
        "F eigenvalues: min = {:.12}, max = {:.12}",
        eigs[0],
        eigs[eigs.len() - 1]
    );
    println!("xi_opt = {}", serde_json::to_string(xi.matrix())?);
    Ok(())
}

fn estimate_run(args: RunArgs) -> Result<(), Error> {
    let mut config: ExperimentConfig = io::read_json(&args.config)?;
    if let Some(d) = args.d {
        config.d = d;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    if let Some(output) = args.output {
        config.output = Some(output);
    }
    config.validate()?;

    let mut csv = CsvSink::new(args.csv.as_deref())?;
    let results = run_experiment(&config, &mut csv)?;
    csv.finish()?;

    let report = json!({ "config": config, "results": results });
    let text = serde_json::to_string_pretty(&report)?;
    match &config.output {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Dispatches one configured experiment and returns its result object.
pub fn run_experiment(
    config: &ExperimentConfig,
    csv: &mut CsvSink,
) -> Result<serde_json::Value, Error> {
    match config.experiment {
        Experiment::Reconstruct => reconstruct_experiment(config, csv),
        Experiment::Universality => universality_experiment(config),
        Experiment::VarianceScan => variance_scan_experiment(config, csv),
        Experiment::OptimalityDemo => optimality_demo_experiment(config, csv),
        Experiment::HaarCheck => haar_check_experiment(config),
    }
}

fn reconstruct_experiment(
    config: &ExperimentConfig,
    csv: &mut CsvSink,
) -> Result<serde_json::Value, Error> {
    let nu = config.resolve_ancilla()?;
    let n_ops = 50usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7ec0);
    let targets: Vec<CMatrix> = (0..n_ops)
        .map(|_| {
            CMatrix::from_fn(config.d, config.d, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
        })
        .collect();

    match config.detector {
        Detector::Weyl => {
            let w = WeylSystem::new(config.d)?;
            let frame = w.xi_frame(&nu)?;
            if !frame.is_frame(FRAME_COND_TOL) {
                return Err(non_universal_error(&nu));
            }
            let canonical = frame.canonical_dual()?;
            let mut max_canonical = 0.0f64;
            for (i, a) in targets.iter().enumerate() {
                let (_, rec) = expand(a, &frame, &canonical)?;
                let err = (rec - a).frobenius_norm();
                max_canonical = max_canonical.max(err);
                csv.row(&format!("{i},canonical,{err:.17e}"))?;
            }
            // the closed-form dual is unique for this detector; cross-check it
            let formula = abelian_dual(&w, &nu)?;
            let dual_defect = completeness_defect(&frame, &formula)?;
            let mut max_formula = 0.0f64;
            let mut max_dual_gap = 0.0f64;
            for (i, a) in targets.iter().enumerate() {
                let (_, rec) = expand(a, &frame, &formula)?;
                let err = (rec - a).frobenius_norm();
                max_formula = max_formula.max(err);
                csv.row(&format!("{i},closed-form,{err:.17e}"))?;
            }
            for i in 0..frame.len() {
                max_dual_gap =
                    max_dual_gap.max((formula.element(i) - canonical.element(i)).frobenius_norm());
            }
            Ok(json!({
                "detector": "weyl",
                "operators_tested": n_ops,
                "max_error_canonical": max_canonical,
                "max_error_closed_form": max_formula,
                "closed_form_completeness_defect": dual_defect,
                "closed_form_vs_canonical": max_dual_gap,
            }))
        }
        Detector::Sud => {
            let frame = sampled_sud_frame(&nu, config.shots as usize, config.seed)?;
            if !frame.is_frame(FRAME_COND_TOL) {
                return Err(non_universal_error(&nu));
            }
            let dual = frame.canonical_dual()?;
            let mut max_err = 0.0f64;
            for (i, a) in targets.iter().enumerate() {
                let (_, rec) = expand(a, &frame, &dual)?;
                let err = (rec - a).frobenius_norm();
                max_err = max_err.max(err);
                csv.row(&format!("{i},sampled-canonical,{err:.17e}"))?;
            }
            Ok(json!({
                "detector": "sud",
                "operators_tested": n_ops,
                "haar_samples": config.shots,
                "max_error_canonical": max_err,
            }))
        }
    }
}

fn non_universal_error(nu: &DensityMatrix) -> Error {
    let d = nu.dim() as f64;
    if (nu.purity() - 1.0 / d).abs() < 1e-9 {
        Error::Singular("frame singular: nu = I/d".into())
    } else {
        Error::NotAFrame("detector is not universal for this ancilla".into())
    }
}

fn universality_experiment(config: &ExperimentConfig) -> Result<serde_json::Value, Error> {
    let nu = config.resolve_ancilla()?;
    match config.detector {
        Detector::Weyl => {
            let w = WeylSystem::new(config.d)?;
            let povm = BellPovm::from_weyl(&w)?;
            let report = povm.povm().universality_report(&nu, FRAME_COND_TOL)?;
            if !report.universal {
                return Err(non_universal_error(&nu));
            }
            Ok(json!({
                "detector": "weyl",
                "universal": true,
                "outcomes": povm.povm().len(),
                "bound_lower": report.bound_lower,
                "bound_upper": report.bound_upper,
            }))
        }
        Detector::Sud => {
            let params = sud_params(&nu).map_err(|e| match e {
                Error::Singular(_) => Error::Singular("frame singular: nu = I/d".into()),
                other => other,
            })?;
            let f = sud_frame_operator(&nu);
            let eigs = f.eigenvalues();
            Ok(json!({
                "detector": "sud",
                "universal": true,
                "p": params.p,
                "bound_lower": eigs[0],
                "bound_upper": eigs[eigs.len() - 1],
            }))
        }
    }
}

fn variance_scan_experiment(
    config: &ExperimentConfig,
    csv: &mut CsvSink,
) -> Result<serde_json::Value, Error> {
    let d = config.d;
    let df = d as f64;
    let o = config.resolve_observable()?;
    let delta_obs = delta_obs_analytic(&o)?;

    let grid = 20usize;
    let p_lo = 1.0 / df + 0.05 * (1.0 - 1.0 / df);
    let mut p_values = Vec::with_capacity(grid);
    let mut coefficients = Vec::with_capacity(grid);
    let mut strictly_decreasing = true;
    for k in 0..grid {
        let p = p_lo + (1.0 - p_lo) * k as f64 / (grid - 1) as f64;
        let c = delta_opt_analytic(p, d)?;
        if let Some(&prev) = coefficients.last() {
            if c >= prev {
                strictly_decreasing = false;
            }
        }
        csv.row(&format!("{p:.17e},{c:.17e}"))?;
        p_values.push(p);
        coefficients.push(c);
    }

    // Monte Carlo spot checks where the purity is reachable for this d
    let mut spot_checks = Vec::new();
    for &p in &[0.6, 1.0] {
        if p <= 1.0 / df + 1e-9 {
            continue;
        }
        let nu = DensityMatrix::with_purity(d, p)?;
        let xi = sud_canonical_dual_xi(&nu)?;
        let analytic = delta_opt_analytic(p, d)? * delta_obs;
        let mc = delta_xi_mc(&xi, &nu, &o, config.shots as usize, 10, config.seed)?;
        spot_checks.push(json!({
            "p": p,
            "analytic_delta_xi": analytic,
            "mc_delta_xi": mc.estimate,
            "mc_std_error": mc.std_error,
            "z": mc.z_score(analytic),
        }));
    }

    let grid_min = coefficients.iter().cloned().fold(f64::INFINITY, f64::min);
    let minimum_at_p1 = (coefficients.last().unwrap() - grid_min).abs() < 1e-15;
    Ok(json!({
        "delta_obs": delta_obs,
        "p_values": p_values,
        "coefficients": coefficients,
        "strictly_decreasing": strictly_decreasing,
        "minimum_at_p1": minimum_at_p1,
        "spot_checks": spot_checks,
    }))
}

fn optimality_demo_experiment(
    config: &ExperimentConfig,
    csv: &mut CsvSink,
) -> Result<serde_json::Value, Error> {
    if config.detector != Detector::Sud {
        return Err(Error::InvalidArgument(
            "optimality-demo needs the sud detector".into(),
        ));
    }
    let nu = config.resolve_ancilla()?;
    if nu.dim() != config.d {
        return Err(Error::ShapeMismatch(format!(
            "ancilla dimension {} does not match d = {}",
            nu.dim(),
            config.d
        )));
    }
    let o = config.resolve_observable()?;
    let params = sud_params(&nu).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("frame singular: nu = I/d".into()),
        other => other,
    })?;
    let xi = sud_canonical_dual_xi(&nu)?;
    let (report, samples) = variance_report(&xi, &nu, &o, config.shots as usize, 10, config.seed)?;
    for (i, v) in samples.iter().enumerate() {
        csv.row(&format!("{i},{v:.17e}"))?;
    }
    let mc = report.empirical;
    Ok(json!({
        "estimate": mc.estimate,
        "std_error": mc.std_error,
        "exact": report.delta_xi,
        "delta_obs": report.delta_obs,
        "delta_xi": report.delta_xi,
        "ratio": report.ratio,
        "ratio_mc": if report.delta_obs > 0.0 { mc.estimate / report.delta_obs } else { f64::NAN },
        "ratio_mc_std_error": if report.delta_obs > 0.0 { mc.std_error / report.delta_obs } else { f64::NAN },
        "p": report.p,
        "a": params.a,
        "b": params.b,
        "optimal_coefficient": delta_opt_analytic(params.p, config.d)?,
    }))
}

fn haar_check_experiment(config: &ExperimentConfig) -> Result<serde_json::Value, Error> {
    let report = haar_identity_check(config.d, config.shots as usize, config.seed)?;
    Ok(json!({
        "samples": report.samples,
        "swap_identity_defect": report.swap_identity_defect,
        "first_moment_max_z": report.first_moment_max_z,
        "second_moment_max_z": report.second_moment_max_z,
        "second_moment_identity_defect": report.second_moment_identity_defect,
        "pass": report.passes(3.0),
    }))
}

/// Line sink for optional per-shot CSV output.
pub struct CsvSink {
    out: Option<std::io::BufWriter<std::fs::File>>,
}

impl CsvSink {
    pub fn new(path: Option<&Path>) -> Result<Self, Error> {
        let out = match path {
            Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => None,
        };
        Ok(Self { out })
    }

    pub fn disabled() -> Self {
        Self { out: None }
    }

    fn row(&mut self, line: &str) -> Result<(), Error> {
        if let Some(w) = self.out.as_mut() {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), Error> {
        if let Some(mut w) = self.out.take() {
            w.flush()?;
        }
        Ok(())
    }
}
