//! Command-line front end.
//!
//! Results go to stdout as JSON lines or CSV, diagnostics to stderr. Exit
//! status is 0 on success, 1 when a check ran and failed, 2 on usage or
//! configuration errors. JSON arguments (classes, samples, hypotheses,
//! distributions, programs, configs) are read inline when they start with
//! `{` or `[` and from a file otherwise.

use std::ffi::OsString;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::classes::{hkl_build, ClassSpec, EnumeratedClass};
use crate::codec;
use crate::harness::{self, CurveConfig, FiniteDistribution};
use crate::hypothesis::{Hypothesis, LabeledSample};
use crate::learners::{self, Erm, LearnerSpec};
use crate::machine::{self, Program, ProgramCode};
use crate::point::Point;
use crate::vc::{self, Verdict, Witness};

#[derive(Parser, Debug)]
#[command(name = "cpaclab", version, about = "Computable PAC learning laboratory")]
pub struct Cli {
    /// Base seed for every randomized command.
    #[arg(long, global = true, env = "CPACLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for data-parallel loops; 0 uses all cores. Results do
    /// not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tuple, pair and sample codes.
    #[command(subcommand)]
    Codec(CodecCmd),
    /// Register machine programs.
    #[command(subcommand)]
    Machine(MachineCmd),
    /// Hypothesis classes.
    #[command(subcommand)]
    Classes(ClassesCmd),
    /// VC dimension and witnesses.
    #[command(subcommand)]
    Vc(VcCmd),
    /// Learners.
    #[command(subcommand)]
    Learn(LearnCmd),
    /// Monte-Carlo checks of learning guarantees.
    #[command(subcommand)]
    Harness(HarnessCmd),
}

#[derive(Subcommand, Debug)]
pub enum CodecCmd {
    /// Prime-power code of a tuple.
    Godel {
        #[arg(long, value_delimiter = ',', required = true)]
        tuple: Vec<u64>,
    },
    /// Tuple with the given code.
    Ungodel {
        #[arg(long)]
        code: BigUint,
    },
    Pair {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
    },
    Unpair {
        #[arg(long)]
        n: u64,
    },
    /// Code of a labeled sample.
    SampleEncode {
        #[arg(long)]
        sample: String,
    },
    SampleDecode {
        #[arg(long)]
        code: BigUint,
    },
}

#[derive(Subcommand, Debug)]
pub enum MachineCmd {
    /// Runs a program code on an input tuple.
    Run {
        #[arg(long)]
        code: BigUint,
        #[arg(long, value_delimiter = ',', default_value = "")]
        input: Vec<String>,
        #[arg(long)]
        budget: u64,
        /// Read this many output registers instead of the count in register 0.
        #[arg(long)]
        arity: Option<usize>,
    },
    /// Code of a program given as a JSON instruction list.
    Encode {
        #[arg(long)]
        program: String,
    },
    /// Instruction list of a code.
    Decode {
        #[arg(long)]
        code: BigUint,
    },
}

#[derive(Args, Debug)]
pub struct HklArgs {
    #[arg(long)]
    pub k: u64,
    /// Omit for an unbounded l.
    #[arg(long)]
    pub l: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum ClassesCmd {
    /// Confirmed halting indices with their hypotheses, one JSON line each.
    ExploreE {
        #[command(flatten)]
        hkl: HklArgs,
        #[arg(long, default_value_t = 500)]
        index_budget: u64,
        #[arg(long, default_value_t = 2000)]
        step_budget: u64,
    },
    /// Exact membership.
    Member {
        #[arg(long)]
        class: String,
        #[arg(long)]
        hypothesis: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum VcCmd {
    /// Largest shattered subset of [0, D].
    Dim {
        #[arg(long)]
        class: String,
        #[arg(long)]
        domain: u64,
        /// Use the membership decider on supports inside [0, D] instead of
        /// the sample oracle.
        #[arg(long)]
        by_members: bool,
    },
    /// Checks a witness on all distinct tuples over [0, D].
    VerifyWitness {
        #[arg(long)]
        class: String,
        #[arg(long)]
        domain: u64,
        #[command(flatten)]
        witness: WitnessArgs,
    },
    /// Output of the ERM-derived witness on one tuple.
    WitnessFromErm {
        #[arg(long)]
        class: String,
        #[arg(long)]
        k: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        tuple: Vec<String>,
    },
    /// Refutes a candidate witness program for the hkl class.
    Diagonalize {
        #[command(flatten)]
        hkl: HklArgs,
        #[arg(long)]
        candidate_code: BigUint,
        /// Witness arity; defaults to l.
        #[arg(long)]
        total_out: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        step_budget: u64,
    },
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    /// Witness arity is k + 1.
    #[arg(long)]
    pub k: u64,
    /// Constant labeling 0 or 1.
    #[arg(long, group = "map")]
    pub constant: Option<u8>,
    /// Witness program code.
    #[arg(long, group = "map")]
    pub code: Option<BigUint>,
    /// Witness from the class's empirical risk minimizer.
    #[arg(long, group = "map")]
    pub erm: bool,
    /// The constructive witness of an hkl class (k must equal l).
    #[arg(long, group = "map")]
    pub hkl: bool,
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
}

#[derive(Subcommand, Debug)]
pub enum LearnCmd {
    /// Empirical risk minimizer; over all finite supports without --class.
    Erm {
        #[arg(long)]
        sample: String,
        #[arg(long)]
        class: Option<String>,
    },
    /// Structural risk minimizer.
    Srm {
        #[arg(long)]
        class: String,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        sample: String,
        #[arg(long)]
        emit_certificate: bool,
    },
    /// SRM with b chosen from the sample length.
    Nonuniform {
        #[arg(long)]
        class: String,
        #[arg(long)]
        sample: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum HarnessCmd {
    Pac {
        #[arg(long)]
        learner: String,
        #[arg(long)]
        class: String,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    Nonuniform {
        #[arg(long)]
        class: String,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        target_index: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    Hoeffding {
        #[arg(long)]
        hypothesis: String,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        b: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// CSV sweep over sample sizes.
    Curve {
        #[arg(long)]
        config: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<std::path::PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
}

type Outcome = Result<(String, i32), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_json<T: DeserializeOwned>(arg: &str, what: &str) -> Result<T, Failure> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("cannot read {what} file {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("malformed {what}: {e}")))
}

fn class_arg(arg: &str) -> Result<EnumeratedClass, Failure> {
    read_json::<ClassSpec>(arg, "class spec")?.build().map_err(usage)
}

fn line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

fn ok(s: String) -> Outcome {
    Ok((s, 0))
}

fn verdict(s: String, pass: bool) -> Outcome {
    Ok((s, if pass { 0 } else { 1 }))
}

fn points(raw: &[String]) -> Result<Vec<Point>, Failure> {
    raw.iter().filter(|s| !s.trim().is_empty()).map(|s| Point::from_str(s).map_err(usage)).collect()
}

fn codec_cmd(cmd: &CodecCmd) -> Outcome {
    match cmd {
        CodecCmd::Godel { tuple } => ok(format!("{}\n", codec::godel_encode(tuple).map_err(usage)?)),
        CodecCmd::Ungodel { code } => match codec::godel_decode(code) {
            Ok(t) => ok(line(&t)),
            Err(e) => verdict(line(&json!({"error": e.to_string()})), false),
        },
        CodecCmd::Pair { a, b } => {
            ok(format!("{}\n", codec::checked_pair(*a, *b).ok_or_else(|| usage("pair overflows 64 bits"))?))
        }
        CodecCmd::Unpair { n } => ok(line(&codec::unpair(*n))),
        CodecCmd::SampleEncode { sample } => {
            let s: LabeledSample = read_json(sample, "sample")?;
            ok(format!("{}\n", codec::sample_encode(&s).map_err(usage)?))
        }
        CodecCmd::SampleDecode { code } => match codec::sample_decode(code) {
            Ok(s) => ok(line(&s)),
            Err(e) => verdict(line(&json!({"error": e.to_string()})), false),
        },
    }
}

fn machine_cmd(cmd: &MachineCmd) -> Outcome {
    match cmd {
        MachineCmd::Run { code, input, budget, arity } => {
            let input = points(input)?
                .into_iter()
                .map(|p| p.to_biguint().ok_or_else(|| usage(format!("input {p} is symbolic"))))
                .collect::<Result<Vec<_>, _>>()?;
            let program = Program::decode(&ProgramCode(code.clone()));
            let outcome = match arity {
                Some(k) => program.run_with_arity(&input, *budget, *k),
                None => program.run(&input, *budget),
            };
            let halted = matches!(outcome, machine::RunOutcome::Halted { .. });
            verdict(line(&outcome), halted)
        }
        MachineCmd::Encode { program } => {
            let p: Program = read_json(program, "program")?;
            ok(format!("{}\n", p.encode()))
        }
        MachineCmd::Decode { code } => ok(line(&Program::decode(&ProgramCode(code.clone())))),
    }
}

fn classes_cmd(cmd: &ClassesCmd) -> Outcome {
    match cmd {
        ClassesCmd::ExploreE { hkl, index_budget, step_budget } => {
            if *index_budget == 0 && *step_budget == 0 {
                return Err(usage("budgets must be at least 1"));
            }
            let class = hkl_build(hkl.k, hkl.l).map_err(usage)?;
            let records = class.explore_e(*index_budget, (*step_budget).max(1));
            ok(records.iter().map(line).collect())
        }
        ClassesCmd::Member { class, hypothesis } => {
            let class = class_arg(class)?;
            let h: Hypothesis = read_json(hypothesis, "hypothesis")?;
            match class.member(&h) {
                Some(yes) => ok(format!("{}\n", if yes { "YES" } else { "NO" })),
                None => Err(usage(format!("class {} has no membership decider", class.name()))),
            }
        }
    }
}

fn witness_for(args: &WitnessArgs, class_json: &str, class: &EnumeratedClass) -> Result<Witness, Failure> {
    if let Some(c) = args.constant {
        if c > 1 {
            return Err(usage("--constant takes 0 or 1"));
        }
        return Ok(Witness::constant(args.k, c == 1));
    }
    if let Some(code) = &args.code {
        return Ok(Witness::Program { k: args.k, code: ProgramCode(code.clone()), budget: args.budget });
    }
    if args.erm {
        return Ok(vc::witness_from_erm(Arc::new(Erm(class.clone())), args.k));
    }
    if args.hkl {
        let Ok(ClassSpec::Hkl { k, l, step_budget }) = read_json::<ClassSpec>(class_json, "class spec") else {
            return Err(usage("--hkl needs an hkl class spec"));
        };
        let mut c = hkl_build(k, l).map_err(usage)?;
        if let Some(b) = step_budget {
            c = c.with_step_budget(b);
        }
        if Some(args.k) != l {
            return Err(usage("--hkl needs --k equal to the class's l"));
        }
        return vc::hkl_witness(Arc::new(c)).map_err(usage);
    }
    Err(usage("choose one of --constant, --code, --erm, --hkl"))
}

fn vc_cmd(cmd: &VcCmd) -> Outcome {
    match cmd {
        VcCmd::Dim { class, domain, by_members } => {
            let class = class_arg(class)?;
            let d = if *by_members {
                if *domain >= 20 {
                    return Err(usage("--by-members needs a domain below 20"));
                }
                vc::vc_restricted_by_members(&*class, *domain)
            } else {
                vc::vc_restricted(&*class, *domain)
            };
            ok(format!("{}\n", d.map_err(usage)?))
        }
        VcCmd::VerifyWitness { class: class_json, domain, witness } => {
            let class = class_arg(class_json)?;
            let w = witness_for(witness, class_json, &class)?;
            let v = vc::verify_witness(&w, &*class, *domain).map_err(usage)?;
            let pass = matches!(v, Verdict::Ok { .. });
            verdict(line(&v), pass)
        }
        VcCmd::WitnessFromErm { class, k, tuple } => {
            let class = class_arg(class)?;
            let w = vc::witness_from_erm(Arc::new(Erm(class)), *k);
            match w.eval(&points(tuple)?) {
                Ok(labels) => ok(line(&labels.iter().map(|&b| b as u8).collect::<Vec<_>>())),
                Err(e) => verdict(line(&json!({"error": e.to_string()})), false),
            }
        }
        VcCmd::Diagonalize { hkl, candidate_code, total_out, step_budget } => {
            let class = hkl_build(hkl.k, hkl.l).map_err(usage)?;
            let total_out = total_out.or(hkl.l).ok_or_else(|| usage("unbounded l needs --total-out"))?;
            match vc::hkl_diagonalize(&class, &ProgramCode(candidate_code.clone()), total_out, *step_budget) {
                Ok(d) => ok(line(&d)),
                Err(vc::DiagonalizeError::BadArity { .. } | vc::DiagonalizeError::Machine(_)) => {
                    Err(usage("total_out must be at least k and equal l when l is finite"))
                }
                Err(e) => verdict(line(&json!({"error": e.to_string()})), false),
            }
        }
    }
}

fn learn_cmd(cmd: &LearnCmd) -> Outcome {
    match cmd {
        LearnCmd::Erm { sample, class } => {
            let s: LabeledSample = read_json(sample, "sample")?;
            let h = match class {
                None => learners::erm_hfin(&s),
                Some(c) => learners::erm_enumerated(&*class_arg(c)?, &s).map_err(usage)?,
            };
            ok(line(&json!({"hypothesis": h, "empirical_loss": s.empirical_loss(&h).to_string()})))
        }
        LearnCmd::Srm { class, b, sample, emit_certificate } => {
            let class = class_arg(class)?;
            let s: LabeledSample = read_json(sample, "sample")?;
            if *b == 0 {
                return Err(usage("--b must be at least 1"));
            }
            let (h, cert) = learners::srm(&*class, *b, &s);
            if *emit_certificate {
                ok(line(&json!({"hypothesis": h, "certificate": cert})))
            } else {
                ok(line(&json!({"hypothesis": h})))
            }
        }
        LearnCmd::Nonuniform { class, sample } => {
            let class = class_arg(class)?;
            let s: LabeledSample = read_json(sample, "sample")?;
            let b = learners::t_of(s.len() as u64);
            ok(line(&json!({"hypothesis": learners::nonuniform_learner(&*class, &s), "b": b})))
        }
    }
}

fn report(r: Result<harness::TrialReport, harness::HarnessError>) -> Outcome {
    let r = r.map_err(usage)?;
    log::info!(
        "frequency {:.4} vs threshold {} (margin {:.4}): {}",
        r.frequency_f64(),
        r.threshold,
        r.margin,
        if r.pass { "pass" } else { "FAIL" }
    );
    let pass = r.pass;
    verdict(line(&r), pass)
}

fn harness_cmd(cmd: &HarnessCmd, seed: u64) -> Outcome {
    match cmd {
        HarnessCmd::Pac { learner, class, dist, a, b, m, trials } => {
            let class = class_arg(class)?;
            let spec: LearnerSpec = read_json(learner, "learner spec")?;
            let d: FiniteDistribution = read_json(dist, "distribution")?;
            let l = spec.build(&class);
            report(harness::pac_trial_suite(&*l, &*class, &d, *a, *b, *m, *trials, seed))
        }
        HarnessCmd::Nonuniform { class, dist, a, b, target_index, trials } => {
            let class = class_arg(class)?;
            let d: FiniteDistribution = read_json(dist, "distribution")?;
            report(harness::nonuniform_trial_suite(&*class, &d, *a, *b, *target_index, *trials, seed))
        }
        HarnessCmd::Hoeffding { hypothesis, dist, m, b, trials } => {
            let h: Hypothesis = read_json(hypothesis, "hypothesis")?;
            let d: FiniteDistribution = read_json(dist, "distribution")?;
            report(harness::hoeffding_check(&h, &d, *m, *b, *trials, seed))
        }
        HarnessCmd::Curve { config, output } => {
            let mut cfg: CurveConfig = read_json(config, "curve config")?;
            if cfg.seed == 0 {
                cfg.seed = seed;
            }
            let rows = harness::experiment_curve(&cfg).map_err(usage)?;
            let csv = harness::curve_csv(&rows);
            let pass = rows.iter().all(|r| r.pass);
            match output {
                Some(path) => {
                    std::fs::write(path, &csv).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
                    verdict(String::new(), pass)
                }
                None => verdict(csv, pass),
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Codec(c) => codec_cmd(c),
        Command::Machine(c) => machine_cmd(c),
        Command::Classes(c) => classes_cmd(c),
        Command::Vc(c) => vc_cmd(c),
        Command::Learn(c) => learn_cmd(c),
        Command::Harness(c) => harness_cmd(c, cli.seed),
    }
}

/// Parses `args` (program name first), runs the command, writes its output
/// and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = crate::par::with_jobs(cli.jobs, || dispatch(&cli));
    match result {
        Ok((text, code)) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 2;
            }
            code
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (String, i32) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("cpaclab").chain(args.iter().copied()), &mut out, &mut err);
        (String::from_utf8(out).unwrap(), code)
    }

    #[test]
    fn vc_dim_of_bounded_supports() {
        assert_eq!(
            call(&["vc", "dim", "--class", r#"{"kind":"support_at_most","k":2}"#, "--domain", "6"]),
            ("2\n".into(), 0)
        );
    }

    #[test]
    fn malformed_sample_is_a_usage_error() {
        let (_, code) =
            call(&["learn", "srm", "--class", r#"{"kind":"hfin"}"#, "--b", "1", "--sample", r#"{"pairs":[[1,7]]}"#]);
        assert_eq!(code, 2);
        let (_, code) = call(&["vc", "dim", "--bogus"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn failing_harness_exits_one() {
        let (_, code) = call(&[
            "harness",
            "pac",
            "--learner",
            r#"{"kind":"constant","support":[2]}"#,
            "--class",
            r#"{"kind":"hfin"}"#,
            "--dist",
            r#"{"atoms":[[[1,1],"1/2"],[[2,0],"1/2"]]}"#,
            "--a",
            "2",
            "--b",
            "2",
            "--m",
            "4",
            "--trials",
            "20",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn codec_commands() {
        assert_eq!(call(&["codec", "godel", "--tuple", "1,2"]).0, "108\n");
        assert_eq!(call(&["codec", "ungodel", "--code", "108"]).0, "[1,2]\n");
        assert_eq!(call(&["codec", "pair", "--a", "1", "--b", "2"]).0, "8\n");
    }

    #[test]
    fn machine_run_reports_outcome() {
        let (out, code) = call(&["machine", "run", "--code", "0", "--input", "4,5", "--budget", "10"]);
        assert_eq!(code, 0);
        assert_eq!(out, "{\"outcome\":\"halted\",\"output\":[4,5],\"steps\":0}\n");
    }
}
