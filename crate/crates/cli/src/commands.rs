use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use ghz_distill_core::analysis::{
    closed_form_response_u1, first_order_response, threshold_bisect, CoherentFamily, ConvergenceRule,
    GateErrorFamily, InputFamily, MeasurementErrorFamily, WhiteFamily, DEFAULT_STEP,
};
use ghz_distill_core::protocol::{run_schedule, NoiseParams, Schedule};
use ghz_distill_core::states::{self, random_traceless_hermitian, PureState};
use ghz_distill_core::unitaries::{
    check_coherent_conditions, check_fixed_point, check_unitarity, classify_solution, gates,
    verify_decomposition, ConditionReport, TwoQubitUnitary,
};
use ghz_distill_core::{Complex64, ComplexMatrix};

use crate::error::{CliError, EXIT_CONDITIONS_FAILED};
use crate::input::{self, InputSpec, DEFAULT_COHERENT_INDICES};
use crate::output::{self, num, Format, Row, ThresholdRow};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the protocol and print one row per (double) step.
    Iterate(IterateArgs),
    /// Bisect the convergence threshold of an input family.
    Threshold(ThresholdArgs),
    /// Check a unitary against the unitarity, fixed-point and coherent-error conditions.
    Verify(VerifyArgs),
    /// Numeric first-order response of the map around the GHZ state.
    FirstOrder(FirstOrderArgs),
    /// Check the CNOT/H/RZ gate decomposition of a catalog unitary.
    Decompose(DecomposeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleKind {
    Single,
    Alternating,
    Uniform,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "alternating")]
    pub schedule: ScheduleKind,
    /// Unitary for the single schedule: u1, u2, u3:N or a 4x4 matrix file.
    #[arg(long, default_value = "u1")]
    pub unitary: String,
    /// N for the uniform U3(N) schedule.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub u3_n: i64,
}

impl ScheduleArgs {
    pub fn build(&self) -> Result<Schedule, CliError> {
        Ok(match self.schedule {
            ScheduleKind::Single => Schedule::Single(input::parse_unitary(&self.unitary)?),
            ScheduleKind::Alternating => Schedule::alternating(),
            ScheduleKind::Uniform => Schedule::uniform(self.u3_n),
        })
    }
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Measurement error probability.
    #[arg(long, default_value_t = 0.0)]
    pub pm: f64,
    /// Gate error probability.
    #[arg(long, default_value_t = 0.0)]
    pub pg: f64,
}

impl NoiseArgs {
    fn build(&self) -> Result<NoiseParams, CliError> {
        Ok(NoiseParams::new(self.pm, self.pg)?)
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; relative paths resolve against $GHZ_DISTILL_OUTPUT_DIR when set. Default stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuccessConvention {
    /// Product of keep probabilities along one chain.
    Chain,
    /// Counts every round feeding the last one (p1^2 p2 per double step).
    Tree,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// ghz | white:E | coherent:E[:i,j,...] | custom:PATH:E | random:E | mix:W_GHZ:W_ID
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Emit one row per elementary step instead of per double step.
    #[arg(long)]
    pub record_odd: bool,
    #[arg(long, value_enum, default_value = "chain")]
    pub success: SuccessConvention,
    /// Seed for `random:` inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn iterate(args: &IterateArgs) -> Result<(), CliError> {
    if args.steps == 0 {
        return Err(CliError::Config("--steps must be at least 1".into()));
    }
    let rho = InputSpec::parse(&args.input)?.build(args.seed)?;
    let schedule = args.schedule.build()?;
    let records = run_schedule(&rho, &schedule, args.steps, args.noise.build()?)?;
    let mut rows = Vec::new();
    if args.record_odd {
        let mut expected = 1.0;
        let mut k = 0u32;
        for rec in &records {
            for e in &rec.elementary {
                k += 1;
                expected = 2.0 * expected / e.keep_probability;
                rows.push(Row {
                    step: k as usize,
                    fidelity: e.fidelity,
                    success_prob: e.keep_probability,
                    min_inputs: 1u128.checked_shl(k).unwrap_or(u128::MAX),
                    expected_inputs: expected,
                });
            }
        }
    } else {
        for rec in &records {
            rows.push(Row {
                step: rec.step,
                fidelity: rec.fidelity,
                success_prob: match args.success {
                    SuccessConvention::Chain => rec.success_probability,
                    SuccessConvention::Tree => rec.tree_success_probability,
                },
                min_inputs: rec.cumulative_min_inputs,
                expected_inputs: rec.cumulative_expected_inputs,
            });
        }
    }
    output::with_sink(args.out.output.as_deref(), |w| output::write_rows(w, &rows, args.out.format))
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// coherent[:i,j,...] | white | pm | pg
    #[arg(long)]
    pub family: String,
    /// Fixed input for the pm and pg families.
    #[arg(long, default_value = "mix:0.8:0.025")]
    pub input: String,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    /// Upper bracket end; defaults to 1 (0.5 for pm, 15/16 for pg).
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub resolution: f64,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 0.999)]
    pub min_fidelity: f64,
    #[arg(long, default_value_t = 60)]
    pub max_steps: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn threshold(args: &ThresholdArgs) -> Result<(), CliError> {
    let (family, default_hi): (Box<dyn InputFamily>, f64) = match args.family.split_once(':') {
        Some(("coherent", idx)) => {
            let input = InputSpec::parse(&format!("coherent:0:{idx}"))?;
            let InputSpec::Coherent { indices, .. } = input else { unreachable!() };
            let one = Complex64::new(1.0, 0.0);
            (Box::new(CoherentFamily { components: indices.into_iter().map(|i| (i, one)).collect() }), 1.0)
        }
        None if args.family == "coherent" => (Box::new(CoherentFamily::default()), 1.0),
        None if args.family == "white" => (Box::new(WhiteFamily), 1.0),
        None if args.family == "pm" => {
            let input = InputSpec::parse(&args.input)?.build(0)?;
            (Box::new(MeasurementErrorFamily { input }), 0.5)
        }
        None if args.family == "pg" => {
            let input = InputSpec::parse(&args.input)?.build(0)?;
            (Box::new(GateErrorFamily { input }), NoiseParams::MAX_P_G)
        }
        _ => return Err(CliError::Config(format!("unknown family '{}'", args.family))),
    };
    if !(args.min_fidelity > 0.0 && args.min_fidelity < 1.0) || args.max_steps == 0 {
        return Err(CliError::Config("need 0 < --min-fidelity < 1 and --max-steps >= 1".into()));
    }
    let rule = ConvergenceRule { min_fidelity: args.min_fidelity, max_steps: args.max_steps };
    let r = threshold_bisect(
        family.as_ref(),
        args.lo,
        args.hi.unwrap_or(default_hi),
        args.resolution,
        &args.schedule.build()?,
        args.noise.build()?,
        rule,
    )?;
    let row = ThresholdRow { family: r.family, threshold: r.threshold, lo: r.lo, hi: r.hi, rule: r.rule.to_string() };
    output::with_sink(args.out.output.as_deref(), |w| output::write_threshold(w, &row, args.out.format))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionSet {
    Eq6,
    Eq7,
    Eq8,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// u1, u2, u3:N or a 4x4 matrix file.
    pub target: String,
    #[arg(long, value_enum, default_value = "all")]
    pub conditions: ConditionSet,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

fn report_for(u: &TwoQubitUnitary, set: ConditionSet, tol: f64) -> ConditionReport {
    match set {
        ConditionSet::Eq6 => check_unitarity(u, tol),
        ConditionSet::Eq7 => check_fixed_point(u, tol),
        ConditionSet::Eq8 => check_coherent_conditions(u, tol),
        ConditionSet::All => check_unitarity(u, tol)
            .merge(check_fixed_point(u, tol))
            .merge(check_coherent_conditions(u, tol)),
    }
}

/// Returns whether the requested set passed.
pub fn verify(args: &VerifyArgs, w: &mut dyn Write) -> Result<bool, CliError> {
    let u = input::parse_unitary(&args.target)?;
    let report = report_for(&u, args.conditions, args.tol);
    writeln!(w, "condition,residual,status")?;
    for (id, r) in &report.residuals {
        writeln!(w, "{id},{},{}", num(*r), if *r < report.tolerance { "pass" } else { "FAIL" })?;
    }
    writeln!(w, "# unitary {}: classification {:?}", u.label(), classify_solution(&u, args.tol))?;
    writeln!(
        w,
        "# {} conditions {} at tolerance {:e} ({} failing)",
        report.residuals.len(),
        if report.passed { "pass" } else { "fail" },
        report.tolerance,
        report.failures().count()
    )?;
    Ok(report.passed)
}

#[derive(Debug, Args)]
pub struct FirstOrderArgs {
    #[arg(long, default_value = "u1")]
    pub unitary: String,
    /// white | coherent[:i,j,...] | random | block | PATH (8x8 traceless Hermitian)
    #[arg(long, default_value = "white")]
    pub m: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
}

fn perturbation_source(spec: &str, seed: u64) -> Result<ComplexMatrix, CliError> {
    let coherent = |idx: &[usize]| -> Result<ComplexMatrix, CliError> {
        let mut v = vec![Complex64::new(0.0, 0.0); states::DIM];
        for &i in idx {
            *v.get_mut(i).ok_or_else(|| CliError::Config(format!("basis index {i} out of range")))? =
                Complex64::new(1.0, 0.0);
        }
        Ok(states::coherent_perturbation(&PureState::normalized(v)?))
    };
    let m = match spec {
        "white" => states::white_perturbation(),
        "coherent" => coherent(&DEFAULT_COHERENT_INDICES)?,
        "random" => random_traceless_hermitian(seed, 1.0),
        "block" => {
            let r = random_traceless_hermitian(seed, 1.0);
            let mut m = ComplexMatrix::zeros(states::DIM, states::DIM);
            let d = 0.5 * (r[(0, 0)] - r[(7, 7)]);
            m[(0, 0)] = d;
            m[(7, 7)] = -d;
            m[(0, 7)] = r[(0, 7)];
            m[(7, 0)] = r[(7, 0)];
            m
        }
        _ => match spec.strip_prefix("coherent:") {
            Some(idx) => {
                let InputSpec::Coherent { indices, .. } = InputSpec::parse(&format!("coherent:0:{idx}"))? else {
                    unreachable!()
                };
                coherent(&indices)?
            }
            None => input::read_matrix(std::path::Path::new(spec), states::DIM)?,
        },
    };
    states::check_traceless_hermitian(&m)?;
    Ok(m)
}

pub fn first_order(args: &FirstOrderArgs, w: &mut dyn Write) -> Result<(), CliError> {
    let u = input::parse_unitary(&args.unitary)?;
    let m = perturbation_source(&args.m, args.seed)?;
    let r = first_order_response(&u, &m, args.h)?;
    writeln!(w, "# numeric response, unitary {}, h = {:e}", u.label(), r.step)?;
    write!(w, "{}", input::format_matrix(&r.matrix))?;
    if u.label() == "u1" {
        let closed = closed_form_response_u1(&m);
        writeln!(w, "# closed form")?;
        write!(w, "{}", input::format_matrix(&closed))?;
        writeln!(w, "max_deviation,{}", num(r.matrix.max_diff(&closed)))?;
    }
    writeln!(w, "response_max_norm,{}", num(r.matrix.max_norm()))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// u1, u2 or u3:N
    pub target: String,
}

pub fn decompose(args: &DecomposeArgs, w: &mut dyn Write) -> Result<(), CliError> {
    let u = input::parse_unitary(&args.target)?;
    // factors listed left to right as matrix products; the rightmost acts first
    let (names, factors): (Vec<String>, Vec<ComplexMatrix>) = match args.target.as_str() {
        "u1" => (
            vec!["CNOT(keep->flag)".into(), "X(flag)".into()],
            vec![gates::cnot_keep_to_flag(), gates::on_flag(&gates::pauli_x())],
        ),
        "u2" => (
            vec!["H(flag)".into(), "CNOT(flag->keep)".into()],
            vec![gates::on_flag(&gates::hadamard()), gates::cnot_flag_to_keep()],
        ),
        t => {
            let n: i64 = t.strip_prefix("u3:").and_then(|n| n.parse().ok()).ok_or_else(|| {
                CliError::Config(format!("no known decomposition for '{t}'; use u1, u2 or u3:N"))
            })?;
            let phi = n.rem_euclid(6) as f64 * core::f64::consts::PI / 3.0;
            let rz = gates::on_keep(&gates::rz(phi));
            (
                vec![
                    format!("RZ({phi:.6})(keep)"),
                    "H(keep)".into(),
                    format!("RZ({phi:.6})(keep)"),
                    "CNOT(keep->flag)".into(),
                ],
                vec![rz.clone(), gates::on_keep(&gates::hadamard()), rz, gates::cnot_keep_to_flag()],
            )
        }
    };
    let residual = verify_decomposition(&u, &factors)?;
    writeln!(w, "unitary,{}", u.label())?;
    writeln!(w, "product,{}", names.join(" * "))?;
    writeln!(w, "residual,{}", num(residual))?;
    if residual > ghz_distill_core::qmat::DEFAULT_TOL {
        return Err(CliError::Config(format!("decomposition residual {residual:e} too large")));
    }
    Ok(())
}

pub fn run(cmd: &Command) -> Result<u8, CliError> {
    let stdout = std::io::stdout();
    match cmd {
        Command::Iterate(a) => iterate(a).map(|_| 0),
        Command::Threshold(a) => threshold(a).map(|_| 0),
        Command::Verify(a) => {
            let passed = verify(a, &mut stdout.lock())?;
            Ok(if passed { 0 } else { EXIT_CONDITIONS_FAILED })
        }
        Command::FirstOrder(a) => first_order(a, &mut stdout.lock()).map(|_| 0),
        Command::Decompose(a) => decompose(a, &mut stdout.lock()).map(|_| 0),
    }
}
