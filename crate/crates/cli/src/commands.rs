use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use stoqwalk_core::compile::{self, StoqVerifier};
use stoqwalk_core::expansion::{self, sample_nonneg_state};
use stoqwalk_core::graph::{self, SelfLoops};
use stoqwalk_core::rng::stream_rng;
use stoqwalk_core::spectral::{self, Method};
use stoqwalk_core::suite::{self, SuiteOptions, CRITERIA, DEFAULT_SEED};
use stoqwalk_core::walk::{self, CalibrationParams, StepRecord, WalkParams};
use stoqwalk_core::{generators, Bitstring, Caps, Error, Hamiltonian};

use crate::input;
use crate::report::{to_json, CliResult, Output, Report, Source, Status, UsageError};
use crate::{Cli, Command, ExpansionCommand, Family, GenArgs, GraphCommand, MethodArg, VerifyArgs};

pub const SEED_VAR: &str = "STOQWALK_SEED";

/// Explicit flag, then `STOQWALK_SEED`, then the built-in default.
fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("{SEED_VAR}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn output(command: &'static str, source: Option<Source>, seed: Option<u64>, status: Status, result: serde_json::Value, text: String) -> Output {
    Output {
        report: Report {
            command,
            source,
            seed,
            status,
            result,
        },
        text,
    }
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let caps = Caps::default();
    match &cli.command {
        Command::Validate { file } => validate(file, &caps),
        Command::Gen(args) => gen(args),
        Command::Spectrum { file, method } => spectrum(file, *method, &caps),
        Command::Graph(g) => graph_cmd(g, &caps),
        Command::Verify(args) => verify(args, &caps),
        Command::Expansion(e) => expansion_cmd(e, &caps),
        Command::Compile { circuit, output, input } => compile_cmd(circuit, output.as_deref(), input.as_deref(), &caps),
        Command::Simulate {
            circuit,
            input,
            optimal_witness,
            witness,
        } => simulate(circuit, input.as_deref(), *optimal_witness, witness.as_deref(), &caps),
        Command::Suite { quick, seed, csv } => suite_cmd(*quick, *seed, csv.as_deref(), cli.json),
    }
}

fn validate(path: &Path, caps: &Caps) -> CliResult<Output> {
    let (file, src) = input::instance_file(path)?;
    let report = stoqwalk_core::instance::validate(&file, caps);
    let valid = report.is_valid();
    let mut text = String::new();
    if valid {
        let h = Hamiltonian::from_file(&file, caps)?;
        writeln!(text, "{}: valid (n = {}, m = {}, k = {})", path.display(), h.n(), h.m(), h.k()).unwrap();
    } else {
        writeln!(text, "{}: {} violation(s)", path.display(), report.violations.len()).unwrap();
        for v in &report.violations {
            match v.term {
                Some(i) => writeln!(text, "  term {i}: {}", v.message).unwrap(),
                None => writeln!(text, "  {}", v.message).unwrap(),
            }
        }
    }
    let result = json!({ "valid": valid, "violations": report.violations });
    Ok(output("validate", Some(src), None, Status::from_pass(valid), result, text))
}

fn gen(args: &GenArgs) -> CliResult<Output> {
    let seed = resolve_seed(args.seed)?;
    let m = args.m.unwrap_or(args.n);
    let h = match args.family {
        Family::Hypercube => generators::hypercube(args.n)?,
        Family::Ghz => generators::ghz_chain(args.n)?,
        Family::Random => generators::random(args.n, args.k, m, seed)?,
        Family::RandomCovering => generators::random_covering(args.n, args.k, m, seed)?,
        Family::Frustrated => generators::frustrated(args.n, args.k, m, seed, args.min_energy)?,
        Family::Planted => generators::planted_defect(args.n, args.k)?,
    };
    let mut body = h.to_json();
    body.push('\n');
    let family = format!("{:?}", args.family).to_lowercase();
    let mut result = json!({
        "family": family,
        "n": h.n(),
        "m": h.m(),
        "k": h.k(),
        "sha256": Source::new(Path::new(""), body.as_bytes()).sha256,
    });
    let text = match &args.output {
        Some(path) => {
            write_file(path, &body)?;
            result["output"] = json!(path.display().to_string());
            format!("wrote {} (n = {}, m = {}, k = {})\n", path.display(), h.n(), h.m(), h.k())
        }
        None => {
            result["instance"] = to_json(&h.to_file());
            body
        }
    };
    Ok(output("gen", None, Some(seed), Status::Ok, result, text))
}

fn spectrum(path: &Path, method: MethodArg, caps: &Caps) -> CliResult<Output> {
    let (h, src) = input::instance(path, caps)?;
    let method = match method {
        MethodArg::Dense => Method::Dense,
        MethodArg::Power => Method::Power,
    };
    let s = spectral::ground_energy(&h, method, caps)?;
    let result = json!({
        "ground_energy": s.ground_energy,
        "gap": s.gap,
        "method": s.method,
        "residual": s.residual,
        "iterations": s.iterations,
    });
    let text = format!(
        "ground energy {:.12}\ngap           {:.12}\nresidual      {:.3e} ({:?}, {} iterations)\n",
        s.ground_energy, s.gap, s.residual, s.method, s.iterations
    );
    Ok(output("spectrum", Some(src), None, Status::Ok, result, text))
}

fn graph_cmd(cmd: &GraphCommand, caps: &Caps) -> CliResult<Output> {
    match cmd {
        GraphCommand::Neighbors { file, x } => {
            let (h, src) = input::instance(file, caps)?;
            let x = input::bitstring(x, h.n(), "string")?;
            let nb = graph::neighbors(&h, &x)?;
            let bad = graph::is_bad(&h, &x)?;
            let mut text = format!(
                "{x}: {} neighbours, degree {}, self-loops {}{}\n",
                nb.entries.len(),
                nb.degree,
                nb.self_loops,
                if bad { ", bad" } else { "" }
            );
            for e in &nb.entries {
                writeln!(text, "  {} {}", e.y, e.multiplicity).unwrap();
            }
            let mut result = to_json(&nb);
            result["string"] = json!(x);
            result["bad"] = json!(bad);
            Ok(output("graph neighbors", Some(src), None, Status::Ok, result, text))
        }
        GraphCommand::Badness { file, string, .. } => {
            let (h, src) = input::instance(file, caps)?;
            if let Some(s) = string {
                let x = input::bitstring(s, h.n(), "string")?;
                let bad = graph::is_bad(&h, &x)?;
                let text = format!("{x}: {}\n", if bad { "bad" } else { "good" });
                let result = json!({ "string": x, "bad": bad });
                return Ok(output("graph badness", Some(src), None, Status::Ok, result, text));
            }
            if h.n() > caps.power_qubits {
                return Err(Error::Capacity {
                    what: "badness enumeration",
                    requested: h.n(),
                    cap: caps.power_qubits,
                }
                .into());
            }
            let bad: Vec<Bitstring> = Bitstring::all(h.n()).filter(|x| h.is_bad_index(x.value())).collect();
            let mut text = format!("{} of {} strings are bad\n", bad.len(), h.dim());
            for x in &bad {
                writeln!(text, "  {x}").unwrap();
            }
            let result = json!({ "total": h.dim(), "bad_count": bad.len(), "bad": bad });
            Ok(output("graph badness", Some(src), None, Status::Ok, result, text))
        }
        GraphCommand::Cut {
            file,
            set,
            exclude_self_loops,
        } => {
            let (h, src) = input::instance(file, caps)?;
            let members = input::string_set(set, h.n())?;
            let loops = if *exclude_self_loops { SelfLoops::Exclude } else { SelfLoops::Include };
            let c = graph::cut_stats(&h, &members, loops)?;
            let text = format!(
                "|S| = {}\nboundary    {}\nvolume      {}\nconductance {} = {:.6e}\n",
                members.len(),
                c.boundary,
                c.volume,
                c.conductance,
                c.conductance_f64()
            );
            let result = json!({
                "size": members.len(),
                "self_loops": loops,
                "boundary": c.boundary.to_string(),
                "volume": c.volume.to_string(),
                "conductance": c.conductance.to_string(),
                "conductance_value": c.conductance_f64(),
            });
            Ok(output("graph cut", Some(src), None, Status::Ok, result, text))
        }
    }
}

#[derive(Serialize)]
struct TraceLine {
    step: u64,
    term: serde_json::Value,
    string: Bitstring,
    bad: bool,
}

fn step_grid(max: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(1u64), |t| t.checked_mul(2))
        .take_while(|&t| t < max)
        .collect();
    grid.push(max);
    grid
}

fn verify(args: &VerifyArgs, caps: &Caps) -> CliResult<Output> {
    let (h, src) = input::instance(&args.file, caps)?;
    let seed = resolve_seed(args.seed)?;
    let start = args
        .start
        .as_deref()
        .map(|s| input::bitstring(s, h.n(), "start"))
        .transpose()?;
    let mut status = Status::Ok;
    let mut text = String::new();
    let mut result = json!({});
    let mut steps = args.steps.unwrap_or_else(|| walk::default_steps(&h));

    if args.calibrate {
        let cp = CalibrationParams {
            target: args.target,
            max_steps: args.max_steps,
            starts_per_instance: args.starts,
            trials: args.trials,
            laziness: args.lazy,
            seed,
        };
        match walk::calibrate_steps(std::slice::from_ref(&h), &cp) {
            Ok(cal) => {
                steps = cal.steps;
                status = Status::Pass;
                writeln!(text, "calibrated T = {} (target {}, {} starts)", cal.steps, cp.target, cp.starts_per_instance).unwrap();
                for p in &cal.curve {
                    writeln!(text, "  T = {:>6}: min rejection {:.4}, mean {:.4}", p.steps, p.min_reject, p.mean_reject).unwrap();
                }
                result["calibration"] = to_json(&cal);
            }
            Err(e @ Error::Calibration { .. }) => {
                status = Status::Fail;
                writeln!(text, "{e}").unwrap();
                result["calibration"] = json!({ "error": e.to_string() });
            }
            Err(e) => return Err(e.into()),
        }
    }

    let params = WalkParams {
        steps,
        laziness: args.lazy,
        trials: args.trials,
        seed,
    };
    if let Some(x0) = start {
        if status != Status::Fail {
            let est = walk::rejection_probability(&h, &x0, &params)?;
            writeln!(
                text,
                "start {x0}, T = {steps}, laziness {}, {} trials\nrejection rate  {:.6} (95% CI {:.6}..{:.6})\nacceptance rate {:.6}",
                params.laziness,
                params.trials,
                est.mean,
                est.ci_low,
                est.ci_high,
                1.0 - est.mean
            )
            .unwrap();
            result["start"] = json!(x0);
            result["params"] = to_json(&params);
            result["rejection"] = to_json(&est);
            result["acceptance_rate"] = json!(1.0 - est.mean);
        }
        if let Some(path) = &args.trace {
            let tr = walk::verify(&h, &x0, &params, 0)?;
            let mut lines = String::new();
            for s in &tr.steps {
                let term = match s.record {
                    StepRecord::Stay => json!("stay"),
                    StepRecord::Term(i) | StepRecord::Uncovered(i) => json!(i),
                };
                let line = TraceLine {
                    step: s.step,
                    term,
                    string: s.string,
                    bad: s.bad,
                };
                lines.push_str(&serde_json::to_string(&line).expect("trace line serializes"));
                lines.push('\n');
            }
            write_file(path, &lines)?;
            writeln!(text, "trace of trial 0 ({} steps, {:?}) written to {}", tr.steps.len(), tr.outcome, path.display()).unwrap();
            result["trace_outcome"] = to_json(&tr.outcome);
        }
        if let Some(path) = &args.curve {
            let curve = walk::rejection_curve(&h, &x0, &step_grid(steps), &params)?;
            let mut csv = String::from("steps,trials,rejections,rate,ci_low,ci_high\n");
            for (t, e) in &curve {
                writeln!(csv, "{t},{},{},{},{},{}", e.trials, e.successes, e.mean, e.ci_low, e.ci_high).unwrap();
            }
            write_file(path, &csv)?;
            writeln!(text, "rejection curve ({} points) written to {}", curve.len(), path.display()).unwrap();
            result["curve"] = json!(curve.iter().map(|(t, e)| json!({ "steps": t, "estimate": e })).collect::<Vec<_>>());
        }
    } else if args.trace.is_some() || args.curve.is_some() {
        return Err(UsageError("--trace and --curve need --start".into()));
    }
    Ok(output("verify", Some(src), Some(seed), status, result, text))
}

fn expansion_cmd(cmd: &ExpansionCommand, caps: &Caps) -> CliResult<Output> {
    match cmd {
        ExpansionCommand::NiceSet { file, epsilon, report } => {
            let (h, src) = input::instance(file, caps)?;
            let (status, result, text) = match expansion::find_weak_set(&h, *epsilon, caps) {
                Ok(w) => {
                    let text = format!(
                        "ground energy {:.6e}, epsilon {}\n|S| = {} after {} round(s) (removed {} bad, {} small; delta {:.4e})\n\
                         frustration {:.6e}, bound {:.6e}{}\nboundary edges {}, boundary/|S| {:.4e}, epsilon' {:.4e}{}\nconductance {:.6e}\n",
                        w.ground_energy,
                        w.epsilon,
                        w.nice.set.len(),
                        w.nice.rounds,
                        w.nice.removed_bad,
                        w.nice.removed_small,
                        w.nice.delta,
                        w.nice.frustration,
                        w.nice.bound,
                        if w.nice.bound_holds { "" } else { " (exceeded)" },
                        w.boundary_edges,
                        w.boundary_ratio,
                        w.epsilon_prime,
                        if w.vacuous { " (vacuous)" } else { "" },
                        w.conductance
                    );
                    (Status::from_pass(w.nice.bound_holds), to_json(&w), text)
                }
                Err(e @ Error::LemmaViolation(_)) => (Status::Fail, json!({ "error": e.to_string() }), format!("{e}\n")),
                Err(e) => return Err(e.into()),
            };
            let out = output("expansion nice-set", Some(src), None, status, result, text);
            if let Some(path) = report {
                write_file(path, &crate::report::render(&out.report))?;
            }
            Ok(out)
        }
        ExpansionCommand::CheckBoundary { file, trials, seed } => {
            let (h, src) = input::instance(file, caps)?;
            let seed = resolve_seed(*seed)?;
            if h.n() > caps.power_qubits {
                return Err(Error::Capacity {
                    what: "dense states",
                    requested: h.n(),
                    cap: caps.power_qubits,
                }
                .into());
            }
            const SPARSITY: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.9];
            let mut held = 0;
            let mut min_slack = f64::INFINITY;
            for j in 0..*trials {
                let mut rng = stream_rng(seed, j as u64);
                let psi = sample_nonneg_state(h.dim(), SPARSITY[j % SPARSITY.len()], &mut rng);
                let c = expansion::boundary_energy_check(&h, &psi)?;
                held += c.holds as usize;
                min_slack = min_slack.min(c.lhs - c.rhs);
            }
            let pass = held == *trials;
            let text = format!("{held}/{trials} states satisfy the boundary-energy inequality (min slack {min_slack:.6e})\n");
            let result = json!({ "trials": trials, "held": held, "min_slack": min_slack });
            Ok(output("expansion check-boundary", Some(src), Some(seed), Status::from_pass(pass), result, text))
        }
    }
}

fn verifier_input(v: &StoqVerifier, input: Option<&str>) -> CliResult<Bitstring> {
    let n = v.registers().n;
    match input {
        Some(s) => input::bitstring(s, n, "input"),
        None => Ok(Bitstring::zeros(n)?),
    }
}

fn compile_cmd(path: &Path, out: Option<&Path>, input: Option<&str>, caps: &Caps) -> CliResult<Output> {
    let (v, src) = input::circuit(path)?;
    let x = verifier_input(&v, input)?;
    let h = compile::kitaev_compile(&v, &x, caps)?;
    let report = h.validate(caps);
    let mut body = h.to_json();
    body.push('\n');
    let mut result = json!({
        "input": x,
        "wires": v.wires(),
        "clock_qubits": v.circuit().len(),
        "n": h.n(),
        "m": h.m(),
        "k": h.k(),
        "valid": report.is_valid(),
        "sha256": Source::new(Path::new(""), body.as_bytes()).sha256,
    });
    let text = match out {
        Some(p) => {
            write_file(p, &body)?;
            result["output"] = json!(p.display().to_string());
            format!(
                "wrote {} (n = {}, m = {}, k = {}; {} data wires, {} clock qubits){}\n",
                p.display(),
                h.n(),
                h.m(),
                h.k(),
                v.wires(),
                v.circuit().len(),
                if report.is_valid() { "" } else { "; INVALID" }
            )
        }
        None => {
            result["instance"] = to_json(&h.to_file());
            body
        }
    };
    Ok(output("compile", Some(src), None, Status::from_pass(report.is_valid()), result, text))
}

fn simulate(path: &Path, input: Option<&str>, optimal: bool, witness: Option<&Path>, caps: &Caps) -> CliResult<Output> {
    let (v, src) = input::circuit(path)?;
    let x = verifier_input(&v, input)?;
    let dim = 1usize << v.registers().n_w;
    let w: Vec<f64> = match witness {
        Some(p) => input::parse(p, &input::read(p)?)?,
        None => vec![(dim as f64).sqrt().recip(); dim],
    };
    let acc = compile::acceptance_probability(&v, &x, &w, caps)?;
    let mut text = format!("input {x}: acceptance {acc:.12}\n");
    let mut result = json!({ "input": x, "witness": w, "acceptance": acc });
    if optimal {
        let opt = compile::optimal_acceptance(&v, &x, caps)?;
        writeln!(text, "optimal acceptance {:.12}", opt.value).unwrap();
        result["optimal"] = json!({ "acceptance": opt.value, "witness": opt.witness });
    }
    Ok(output("simulate", Some(src), None, Status::Ok, result, text))
}

fn suite_cmd(quick: bool, seed: Option<u64>, csv: Option<&Path>, json_mode: bool) -> CliResult<Output> {
    let seed = resolve_seed(seed)?;
    let opts = SuiteOptions { quick, seed };
    let mut results = Vec::new();
    for id in 1..=CRITERIA {
        let r = suite::run_criterion(id, &opts);
        if !json_mode {
            eprintln!("criterion {id:>2} finished in {:.1} s", r.elapsed.as_secs_f64());
        }
        results.push(r);
    }
    let pass = results.iter().all(|r| r.pass);
    let mut text = String::new();
    for r in &results {
        writeln!(text, "{:>2} {} {}: {}", r.id, if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail).unwrap();
    }
    writeln!(text, "{}/{} criteria passed", results.iter().filter(|r| r.pass).count(), results.len()).unwrap();
    if let Some(p) = csv {
        write_file(p, &suite::summary_csv(&results))?;
    }
    let result = json!({ "quick": quick, "criteria": results });
    Ok(output("suite", None, Some(seed), Status::from_pass(pass), result, text))
}
