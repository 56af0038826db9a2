use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use solvferm_core::export::{matrix_to_csv, vector_to_csv, MatrixEnvelope};
use solvferm_core::fermion::{jordan_wigner, MANY_BODY_CAP};
use solvferm_core::markov::stationary_leakage;
use solvferm_core::spectral::{classical_hamiltonian, spectrum_mismatch, SYMMETRY_TOL};
use solvferm_core::{
    block_entropy, many_body_energies, verify_kernel, ConvolutionKernel, FreeFermionModel,
    LatticeRequest, LatticeSpec, RecipeSpec, SpectralSystem, SweepConfig,
};

use crate::output::{emit, write_atomic};
use crate::{Format, RunArgs, Status, VerifyArgs};

const SPECTRUM_TOL: f64 = 1e-8;
const MODE_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-10;
const FAULT: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Kernel,
    Hamiltonian,
    Spectrum,
    Eigvecs,
    Correlation,
    Entropy,
    Verify,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Kernel => "kernel",
            Kind::Hamiltonian => "hamiltonian",
            Kind::Spectrum => "spectrum",
            Kind::Eigvecs => "eigvecs",
            Kind::Correlation => "correlation",
            Kind::Entropy => "entropy",
            Kind::Verify => "verify",
        }
    }
}

fn extension(kind: Kind, format: Format) -> &'static str {
    match (kind, format) {
        (_, Format::Json) => "json",
        (Kind::Verify, Format::Csv) => "txt",
        (_, Format::Csv) => "csv",
    }
}

fn resolve(args: &RunArgs) -> Result<Vec<RecipeSpec>, String> {
    let specs = match (&args.recipe, &args.config) {
        (Some(line), None) => vec![line.parse::<RecipeSpec>().map_err(|e| e.to_string())?],
        (None, Some(path)) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = SweepConfig::from_json(&text).map_err(|e| e.to_string())?;
            if cfg.recipes.is_empty() {
                return Err("sweep config lists no recipes".into());
            }
            // --eps fills in for a sweep without tail bounds
            let cfg = match args.eps {
                Some(eps) if cfg.tail_eps.is_empty() => SweepConfig {
                    tail_eps: vec![eps],
                    ..cfg
                },
                _ => cfg,
            };
            return cfg.expand().map_err(|e| e.to_string());
        }
        _ => return Err("give exactly one of --recipe and --config".into()),
    };
    specs
        .into_iter()
        .map(|spec| match (spec.lattice, args.eps) {
            (None, Some(eps)) => Ok(spec.with_lattice(LatticeRequest::TailEps(eps))),
            (Some(_), Some(_)) => {
                Err("--eps conflicts with the lattice given in the recipe".into())
            }
            _ => Ok(spec),
        })
        .collect()
}

/// Runs one subcommand over the recipe or every recipe of a sweep; the
/// worst status wins.
pub fn run(kind: Kind, args: &RunArgs, verify: Option<&VerifyArgs>) -> Status {
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            eprintln!("error: --tol must be positive, got {t}");
            return Status::UsageError;
        }
    }
    let specs = match resolve(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Status::UsageError;
        }
    };
    let sweep = args.config.is_some();
    if sweep {
        if let Some(dir) = &args.out {
            if let Err(e) = std::fs::create_dir_all(dir) {
                eprintln!("error: {}: {e}", dir.display());
                return Status::UsageError;
            }
        }
    }
    let mut worst = Status::Ok;
    for (i, spec) in specs.iter().enumerate() {
        let out: Option<PathBuf> = if sweep {
            args.out.as_ref().map(|d| {
                d.join(format!(
                    "{}-{i:03}.{}",
                    kind.name(),
                    extension(kind, args.format)
                ))
            })
        } else {
            args.out.clone()
        };
        let status = match run_one(kind, spec, args, verify, out.as_deref()) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {spec}: {e}");
                Status::UsageError
            }
        };
        worst = worst.max(status);
    }
    worst
}

type Outcome = Result<Status, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn tolerance(ok: bool, what: &str, value: f64, tol: f64) -> Status {
    if ok {
        Status::Ok
    } else {
        eprintln!("tolerance failure: {what} = {value:e} exceeds {tol:e}");
        Status::ToleranceFailure
    }
}

fn run_one(
    kind: Kind,
    spec: &RecipeSpec,
    args: &RunArgs,
    verify: Option<&VerifyArgs>,
    out: Option<&Path>,
) -> Outcome {
    let lattice = spec.lattice_spec().map_err(fail)?;
    let canonical = spec.to_string();
    match kind {
        Kind::Kernel => cmd_kernel(spec, lattice, &canonical, args, out),
        Kind::Hamiltonian => cmd_hamiltonian(spec, lattice, &canonical, args, out),
        Kind::Spectrum => cmd_spectrum(spec, lattice, &canonical, args, out),
        Kind::Eigvecs => cmd_eigvecs(spec, lattice, &canonical, args, out),
        Kind::Correlation => cmd_correlation(spec, lattice, &canonical, args, out),
        Kind::Entropy => cmd_entropy(spec, lattice, &canonical, args, out),
        Kind::Verify => cmd_verify(
            spec,
            lattice,
            &canonical,
            verify.expect("verify options present"),
            out,
        ),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string_pretty(value).map_err(fail)
}

fn emit_matrix_envelope(
    args: &RunArgs,
    out: Option<&Path>,
    envelope: MatrixEnvelope,
) -> Result<(), String> {
    let text = match args.format {
        Format::Csv => matrix_to_csv(&envelope.to_matrix().map_err(fail)?),
        Format::Json => envelope.to_json().map_err(fail)? + "\n",
    };
    emit(out, &text).map_err(fail)
}

fn cmd_kernel(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    args: &RunArgs,
    out: Option<&Path>,
) -> Outcome {
    let kernel = ConvolutionKernel::build(&spec.recipe, lattice).map_err(fail)?;
    let env = MatrixEnvelope::new(canonical, lattice, kernel.matrix(), Some(kernel.pi()));
    emit_matrix_envelope(args, out, env)?;
    if let (Format::Csv, Some(path)) = (args.format, out) {
        let pi: Vec<f64> = kernel.pi().iter().copied().collect();
        write_atomic(&path.with_extension("pi.csv"), &vector_to_csv(&pi)).map_err(fail)?;
    }
    let tol = args.tol.unwrap_or(lattice.default_tol());
    let rep = verify_kernel(&kernel, tol);
    if !rep.positivity {
        eprintln!("tolerance failure: kernel has non-positive entries");
        return Ok(Status::ToleranceFailure);
    }
    let worst = rep
        .max_stochastic_violation
        .max(rep.max_reversibility_violation);
    Ok(tolerance(rep.passed, "kernel violation", worst, tol))
}

fn cmd_hamiltonian(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    args: &RunArgs,
    out: Option<&Path>,
) -> Outcome {
    let kernel = ConvolutionKernel::build(&spec.recipe, lattice).map_err(fail)?;
    let h = classical_hamiltonian(&kernel).map_err(fail)?;
    emit_matrix_envelope(
        args,
        out,
        MatrixEnvelope::new(canonical, lattice, &h.matrix, Some(kernel.pi())),
    )?;
    let tol = args.tol.unwrap_or(SYMMETRY_TOL);
    Ok(tolerance(h.asymmetry <= tol, "asymmetry", h.asymmetry, tol))
}

#[derive(Serialize)]
struct SpectrumOut<'a> {
    recipe: &'a str,
    lattice: LatticeSpec,
    kappa: &'a [f64],
    numeric: Vec<f64>,
    mismatch: f64,
}

fn cmd_spectrum(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    args: &RunArgs,
    out: Option<&Path>,
) -> Outcome {
    let sys = SpectralSystem::analytic(&spec.recipe, lattice).map_err(fail)?;
    let numeric = sys.numeric_spectrum().map_err(fail)?;
    let mismatch = spectrum_mismatch(sys.kappas(), &numeric);
    let text = match args.format {
        Format::Csv => {
            let mut s = String::new();
            for (n, k) in sys.kappas().iter().enumerate() {
                let _ = writeln!(s, "{n},{}", solvferm_core::export::format_float(*k));
            }
            s
        }
        Format::Json => {
            json(&SpectrumOut {
                recipe: canonical,
                lattice,
                kappa: sys.kappas(),
                numeric,
                mismatch,
            })? + "\n"
        }
    };
    emit(out, &text).map_err(fail)?;
    let tol = args.tol.unwrap_or(SPECTRUM_TOL);
    Ok(tolerance(
        mismatch <= tol,
        "spectrum mismatch",
        mismatch,
        tol,
    ))
}

fn cmd_eigvecs(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    args: &RunArgs,
    out: Option<&Path>,
) -> Outcome {
    let sys = SpectralSystem::analytic(&spec.recipe, lattice).map_err(fail)?;
    emit_matrix_envelope(
        args,
        out,
        MatrixEnvelope::new(canonical, lattice, sys.phi(), Some(sys.kernel().pi())),
    )?;
    let tol = args.tol.unwrap_or(MODE_TOL);
    let defect = sys.orthonormality_defect();
    Ok(tolerance(
        defect <= tol,
        "orthonormality defect",
        defect,
        tol,
    ))
}

fn fermion_model(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    mu: f64,
) -> Result<(SpectralSystem, FreeFermionModel), String> {
    let sys = SpectralSystem::analytic(&spec.recipe, lattice).map_err(fail)?;
    let model = FreeFermionModel::new(&sys, mu).map_err(fail)?;
    Ok((sys, model))
}

fn cmd_correlation(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    args: &RunArgs,
    out: Option<&Path>,
) -> Outcome {
    let (_, model) = fermion_model(spec, lattice, args.mu)?;
    let c = model.correlation_matrix();
    emit_matrix_envelope(
        args,
        out,
        MatrixEnvelope::new(canonical, lattice, c.matrix(), None),
    )?;
    let tol = args.tol.unwrap_or(MODE_TOL);
    let defect = c.idempotency_defect();
    Ok(tolerance(defect <= tol, "|C² - C|", defect, tol))
}

#[derive(Serialize)]
struct EntropyRow {
    start: usize,
    end: usize,
    entropy: f64,
}

#[derive(Serialize)]
struct EntropyOut<'a> {
    recipe: &'a str,
    lattice: LatticeSpec,
    mu: f64,
    filled: &'a [usize],
    blocks: Vec<EntropyRow>,
}

fn cmd_entropy(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    args: &RunArgs,
    out: Option<&Path>,
) -> Outcome {
    let (sys, model) = fermion_model(spec, lattice, args.mu)?;
    let c = model.correlation_matrix();
    let blocks: Vec<(usize, usize)> = match args.block {
        Some(b) => vec![b],
        None => (0..=sys.size()).map(|l| (0, l)).collect(),
    };
    let rows = blocks
        .into_iter()
        .map(|(start, end)| {
            block_entropy(&c, start..end).map(|entropy| EntropyRow {
                start,
                end,
                entropy,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    let text = match args.format {
        Format::Csv => rows
            .iter()
            .map(|r| {
                format!(
                    "{},{}\n",
                    r.end - r.start,
                    solvferm_core::export::format_float(r.entropy)
                )
            })
            .collect(),
        Format::Json => {
            json(&EntropyOut {
                recipe: canonical,
                lattice,
                mu: args.mu,
                filled: model.filled(),
                blocks: rows,
            })? + "\n"
        }
    };
    emit(out, &text).map_err(fail)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: Option<f64>,
    tol: Option<f64>,
    status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl Check {
    fn new(name: &'static str, value: f64, tol: f64) -> Self {
        let status = if value <= tol {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Check {
            name,
            value: Some(value),
            tol: Some(tol),
            status,
            note: None,
        }
    }

    fn skip(name: &'static str, note: impl Into<String>) -> Self {
        Check {
            name,
            value: None,
            tol: None,
            status: CheckStatus::Skip,
            note: Some(note.into()),
        }
    }
}

#[derive(Serialize)]
struct Report {
    recipe: String,
    lattice: LatticeSpec,
    size: usize,
    modes: usize,
    spectral_gap: f64,
    checks: Vec<Check>,
    passed: bool,
}

impl Report {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "recipe        {}", self.recipe);
        let _ = writeln!(s, "lattice       {} ({} sites)", self.lattice, self.size);
        let _ = writeln!(s, "modes         {}", self.modes);
        let _ = writeln!(s, "spectral gap  {:.12}", self.spectral_gap);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<22} {:>10} {:>10}  status", "check", "value", "tol");
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skip => "skip",
            };
            let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2e}"));
            let _ = write!(
                s,
                "{:<22} {:>10} {:>10}  {status}",
                c.name,
                num(c.value),
                num(c.tol)
            );
            if let Some(note) = &c.note {
                let _ = write!(s, "  ({note})");
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

fn cmd_verify(
    spec: &RecipeSpec,
    lattice: LatticeSpec,
    canonical: &str,
    opts: &VerifyArgs,
    out: Option<&Path>,
) -> Outcome {
    let args = &opts.run;
    let mut kernel = ConvolutionKernel::build(&spec.recipe, lattice).map_err(fail)?;
    if let Some((row, col)) = opts.inject_fault {
        let size = kernel.size();
        if row >= size || col >= size {
            return Err(format!(
                "fault position {row}:{col} outside the {size}-site lattice"
            ));
        }
        let recipe = *kernel.recipe();
        let (mut k, pi) = kernel.into_parts();
        k[(row, col)] += FAULT;
        kernel = ConvolutionKernel::from_parts(k, pi, recipe, lattice).map_err(fail)?;
    }
    let tol = args.tol.unwrap_or(lattice.default_tol());
    let rep = verify_kernel(&kernel, tol);
    let mut checks = vec![
        Check::new("stochasticity", rep.max_stochastic_violation, tol),
        Check::new("detailed balance", rep.max_reversibility_violation, tol),
        Check::new("positivity", if rep.positivity { 0.0 } else { 1.0 }, 0.0),
    ];
    if let LatticeSpec::Truncated { tail_eps, .. } = lattice {
        checks.push(Check::new(
            "stationary leakage",
            stationary_leakage(&kernel),
            tail_eps,
        ));
    }
    let sys = SpectralSystem::from_kernel(kernel).map_err(fail)?;
    checks.push(Check::new(
        "hamiltonian symmetry",
        sys.asymmetry(),
        SYMMETRY_TOL,
    ));
    if sys.mode_count() == 0 {
        let note = "no mode is certified on this window; use a smaller eps";
        for name in [
            "spectrum",
            "eigen residual",
            "orthonormality",
            "completeness",
        ] {
            checks.push(Check::skip(name, note));
        }
    } else {
        let numeric = sys.numeric_spectrum().map_err(fail)?;
        checks.push(Check::new(
            "spectrum",
            spectrum_mismatch(sys.kappas(), &numeric),
            SPECTRUM_TOL,
        ));
        let n = lattice.finite_n().unwrap_or(sys.size() - 1) as f64;
        let bound = 1e-9 * sys.h_norm_inf() * (1.0 + n / 50.0);
        let residual = sys.residuals().into_iter().fold(0.0, f64::max);
        checks.push(Check::new("eigen residual", residual, bound));
        checks.push(Check::new(
            "orthonormality",
            sys.orthonormality_defect(),
            MODE_TOL,
        ));
        if sys.complete_rows() == 0 {
            checks.push(Check::skip(
                "completeness",
                "retained modes are complete on no row of this window",
            ));
        } else {
            let mut c = Check::new("completeness", sys.completeness_defect(), MODE_TOL);
            if !sys.is_complete() {
                c.note = Some(format!("rows 0..{}", sys.complete_rows()));
            }
            checks.push(c);
        }
    }
    let cap = opts.oracle_cap.min(MANY_BODY_CAP);
    if sys.size() <= cap {
        let model = FreeFermionModel::new(&sys, args.mu).map_err(fail)?;
        let sums = many_body_energies(&model, cap).map_err(fail)?;
        let oracle = jordan_wigner::oracle_spectrum(sys.hamiltonian()).map_err(fail)?;
        let diff = sums
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("many-body spectrum", diff, ORACLE_TOL));
    } else {
        checks.push(Check::skip(
            "many-body spectrum",
            format!("{} sites exceed the oracle cap {cap}", sys.size()),
        ));
    }
    let passed = checks
        .iter()
        .all(|c| !matches!(c.status, CheckStatus::Fail));
    let report = Report {
        recipe: canonical.to_string(),
        lattice,
        size: sys.size(),
        modes: sys.mode_count(),
        spectral_gap: sys.spectral_gap(),
        checks,
        passed,
    };
    let text = match args.format {
        Format::Json => json(&report)? + "\n",
        Format::Csv => report.text(),
    };
    emit(out, &text).map_err(fail)?;
    Ok(if passed {
        Status::Ok
    } else {
        Status::ToleranceFailure
    })
}
