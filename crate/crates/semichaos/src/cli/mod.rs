//! Command-line interface.
//!
//! Four subcommands cover the pipeline: `classify` runs the chaos criterion
//! on a problem document or a built-in and maps the verdict onto the exit
//! code (0 Chaotic, 1 NotChaotic, 2 Inconclusive, 3 HypothesisViolated,
//! 4 input error), `verify` cross-validates the trajectory route against
//! the quadrature route, `simulate` applies the semigroup to a profile and
//! tabulates norms, and `examples` prints the built-in catalog. Reports are
//! human-readable by default, structured JSON with `--json`, and land in
//! `--out DIR` as files.

pub mod catalog;
pub mod document;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::criterion::{classify_chaos, ChaosReport, CriterionConfig, Verdict, Witness};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::flowcheck::FlowCheckConfig;
use crate::model::{AuditItem, AuditStatus, HypothesisReport};
use crate::simulator::{
    apply_semigroup, default_nodes, norm_growth, parse_grid_table, GridFunction,
};
use crate::sobolev::{self, SobolevConfig};

use document::{ProblemDocument, ProblemKind};

#[derive(Parser)]
#[command(
    name = "semichaos",
    version,
    about = "Decides Devaney chaos for weighted composition semigroups on L^p and Sobolev spaces over an interval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify chaos for a problem document or a built-in
    Classify(ClassifyArgs),
    /// Cross-validate the trajectory route against the quadrature route
    Verify(VerifyArgs),
    /// Apply the semigroup to a profile and tabulate norm growth
    Simulate(SimulateArgs),
    /// List the built-in problem catalog with expected verdicts
    Examples(ExamplesArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Path to a problem document (JSON)
    #[arg(
        value_name = "DOCUMENT",
        required_unless_present = "builtin",
        conflicts_with = "builtin"
    )]
    path: Option<PathBuf>,
    /// Use a built-in problem from the catalog instead of a file
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    /// Override a built-in parameter (repeatable), e.g. --set c=0.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl InputArgs {
    fn load(&self) -> Result<ProblemDocument> {
        if self.builtin.is_none() && !self.set.is_empty() {
            return Err(Error::invalid(
                "--set overrides parameters of a --builtin problem; edit the document instead",
            ));
        }
        if let Some(name) = &self.builtin {
            let entry = catalog::find(name)?;
            let overrides = parse_sets(&self.set)?;
            let params = entry.params_with(&overrides)?;
            Ok(entry.document(&params))
        } else {
            document::load_document(self.path.as_ref().expect("clap enforces one input source"))
        }
    }
}

fn parse_sets(sets: &[String]) -> Result<Vec<(String, f64)>> {
    sets.iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| {
                Error::invalid(format!("--set expects KEY=VALUE, got `{s}`"))
            })?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("--set {k}: `{v}` is not a number")))?;
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

#[derive(Args)]
struct CommonArgs {
    /// Relative tolerance for classification integrals
    #[arg(long)]
    tol: Option<f64>,
    /// Cap on the number of classified components
    #[arg(long)]
    max_components: Option<usize>,
    /// Grid resolution for audits and simulation nodes
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for sampled checks
    #[arg(long)]
    seed: Option<u64>,
    /// Print the structured JSON report on stdout
    #[arg(long)]
    json: bool,
    /// Write reports and tables into this directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Seeds per component
    #[arg(long, default_value_t = 8)]
    seeds: usize,
    /// Comma-separated series spacings
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 1.0, 3.0])]
    t0: Vec<f64>,
    /// Residual gate for the integral identity
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    /// Residual gate for the composition identities
    #[arg(long, default_value_t = 1e-6)]
    cocycle_tolerance: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Initial profile as an expression of x
    #[arg(
        long,
        value_name = "EXPR",
        required_unless_present = "table",
        conflicts_with = "table"
    )]
    f: Option<String>,
    /// Initial profile imported from a grid table (TSV)
    #[arg(long, value_name = "PATH")]
    table: Option<PathBuf>,
    /// Comma-separated evolution times
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 2.0])]
    times: Vec<f64>,
}

#[derive(Args)]
struct ExamplesArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// Numeric knobs after merging defaults, document overrides and flags
/// (flags win).
struct Effective {
    criterion: CriterionConfig,
    sobolev: SobolevConfig,
    flow: FlowCheckConfig,
    /// Node count for simulation grids.
    grid_n: usize,
}

fn effective(doc: &ProblemDocument, common: &CommonArgs) -> Effective {
    let o = &doc.overrides;
    let mut criterion = CriterionConfig::default();
    if let Some(t) = common.tol.or(o.tol) {
        criterion.tol = t;
    }
    if let Some(m) = common.max_components.or(o.max_components) {
        criterion.max_components = m;
    }
    if let Some(g) = common.grid.or(o.grid_n) {
        criterion.hypotheses.grid_n = g;
    }
    if let Some(z) = o.zero_cap {
        criterion.zeroset.cap = z;
    }
    let mut sobolev = SobolevConfig::default();
    if let Some(g) = common.grid.or(o.grid_n) {
        sobolev.grid_n = g;
    }
    sobolev.zeroset = criterion.zeroset.clone();
    let mut flow = FlowCheckConfig::default();
    if let Some(t) = common.tol.or(o.tol) {
        flow.improper.tol = t;
    }
    if let Some(ft) = o.flow_tol {
        flow.flow.rtol = ft;
        flow.flow.atol = ft * 1e-3;
    }
    Effective {
        criterion,
        sobolev,
        flow,
        grid_n: common.grid.or(o.grid_n).unwrap_or(2048),
    }
}

fn exit_for(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Chaotic => 0,
        Verdict::NotChaotic => 1,
        Verdict::Inconclusive => 2,
        Verdict::HypothesisViolated => 3,
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Examples(args) => cmd_examples(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            4
        }
    }
}

/// Prints the structured or human report and mirrors the structured one
/// into `--out DIR/report.json`.
fn emit(common: &CommonArgs, body: &serde_json::Value, human: impl FnOnce()) -> Result<()> {
    let pretty =
        serde_json::to_string_pretty(body).map_err(|e| Error::Io(format!("report: {e}")))?;
    if common.json {
        println!("{pretty}");
    } else {
        human();
    }
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join("report.json");
        std::fs::write(&path, pretty + "\n")
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn status_label(s: AuditStatus) -> &'static str {
    match s {
        AuditStatus::Pass => "pass",
        AuditStatus::Warn => "warn",
        AuditStatus::Fail => "FAIL",
    }
}

fn render_item(name: &str, item: &AuditItem) {
    println!("  [{}] {name}: {}", status_label(item.status), item.detail);
}

fn render_hypotheses(hyp: &HypothesisReport) {
    println!("hypotheses:");
    render_item("forward invariance", &hyp.forward_invariant);
    render_item("drift derivative bounded", &hyp.drift_deriv_bounded);
    render_item("Re h bounded", &hyp.weight_re_bounded);
    render_item("weight constant on the zero set", &hyp.weight_const_on_zero_set);
    render_item("Im h / F integrable", &hyp.imag_weight_integrable);
    if let Some(g) = hyp.gamma {
        println!("  zero-set weight constant: {g}");
    }
    for note in &hyp.notes {
        println!("  note: {note}");
    }
}

fn describe_witness(w: &Witness) -> String {
    match w {
        Witness::PositiveMeasureZeroSet { lo, hi } => format!(
            "the drift stays flat on ({lo:.6}, {hi:.6}): the zero set has positive measure"
        ),
        Witness::DivergentComponent { lo, hi, evidence } => {
            format!("divergent integral on component ({lo}, {hi}): {evidence}")
        }
        Witness::UnresolvedComponent { lo, hi, evidence } => {
            format!("undecided integral on component ({lo}, {hi}): {evidence}")
        }
        Witness::UnenumeratedZeros { lo, hi, detail } => {
            format!("zeros toward ({lo}, {hi}) not exhausted: {detail}")
        }
        Witness::FailedHypotheses { failures } => failures.join("; "),
    }
}

fn render_chaos_report(report: &ChaosReport) {
    println!("verdict   {:?}", report.verdict);
    if let Some(w) = &report.witness {
        println!("witness   {}", describe_witness(w));
    }
    render_hypotheses(&report.hypotheses);
    let flat = if report.flat_intervals.is_empty() {
        String::new()
    } else {
        format!(", {} flat intervals", report.flat_intervals.len())
    };
    let truncated = if report.truncated { ", truncated" } else { "" };
    println!(
        "components ({} analyzed, {} isolated zeros{flat}{truncated}):",
        report.components.len(),
        report.zero_count
    );
    for c in &report.components {
        let value = match (c.value, c.error) {
            (Some(v), Some(e)) => format!("  value {v:.6e} (err {e:.1e})"),
            _ => String::new(),
        };
        println!(
            "  ({}, {})  sign {}  {}{}  {}",
            c.lo,
            c.hi,
            if c.sign >= 0 { "+" } else { "-" },
            c.class,
            value,
            c.evidence
        );
    }
    if let Some(fit) = &report.admissibility {
        let status = if fit.admissible { "pass" } else { "warn" };
        println!(
            "admissibility fit: [{status}] bound {:.4e}, rate {:.4e} ({} samples, {} skipped) {}",
            fit.bound, fit.rate, fit.samples, fit.skipped, fit.detail
        );
    }
    for caveat in &report.caveats {
        println!("caveat: {caveat}");
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<i32> {
    let doc = args.input.load()?;
    let eff = effective(&doc, &args.common);
    match doc.instantiate()? {
        ProblemKind::Lp(prob) => {
            let report = classify_chaos(&prob, &eff.criterion);
            let code = exit_for(report.verdict);
            let body = json!({
                "problem": doc.name,
                "space": "lp",
                "p": doc.p,
                "verdict": report.verdict,
                "exit_code": code,
                "report": report,
            });
            emit(&args.common, &body, || {
                println!("problem   {} (L^p, p = {})", doc.name, doc.p);
                render_chaos_report(&report);
            })?;
            Ok(code)
        }
        ProblemKind::SobolevStar(sp) => {
            let audit = sobolev::audit(&sp, &eff.sobolev);
            if !audit.ok() {
                let failures = audit.failures();
                let body = json!({
                    "problem": doc.name,
                    "space": "sobolev-star",
                    "p": doc.p,
                    "verdict": Verdict::HypothesisViolated,
                    "exit_code": 3,
                    "audit": audit,
                    "failures": failures,
                });
                emit(&args.common, &body, || {
                    println!("problem   {} (Sobolev, p = {})", doc.name, doc.p);
                    println!("verdict   HypothesisViolated");
                    for f in &failures {
                        println!("  {f}");
                    }
                })?;
                return Ok(3);
            }
            let report = sobolev::classify_sobolev_chaos(&sp, &eff.sobolev, &eff.criterion)?;
            let code = exit_for(report.chaos.verdict);
            let body = json!({
                "problem": doc.name,
                "space": "sobolev-star",
                "p": doc.p,
                "verdict": report.chaos.verdict,
                "exit_code": code,
                "report": report,
            });
            emit(&args.common, &body, || {
                println!("problem   {} on {}", doc.name, report.space);
                println!("reduced weight  {}", report.reduced_weight);
                render_chaos_report(&report.chaos);
            })?;
            Ok(code)
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let doc = args.input.load()?;
    let eff = effective(&doc, &args.common);
    let opts = verify::VerifyOptions {
        seeds_per_component: args.seeds,
        spacings: args.t0.clone(),
        identity_tol: args.tolerance,
        cocycle_tol: args.cocycle_tolerance,
        max_components: args
            .common
            .max_components
            .or(doc.overrides.max_components)
            .unwrap_or(8),
        seed: args.common.seed.unwrap_or(42),
        flow: eff.flow.clone(),
        zeroset: eff.criterion.zeroset.clone(),
        ..verify::VerifyOptions::default()
    };
    let (prob, note) = match doc.instantiate()? {
        ProblemKind::Lp(prob) => (prob, None),
        ProblemKind::SobolevStar(sp) => {
            let audit = sobolev::audit(&sp, &eff.sobolev);
            if !audit.ok() {
                for f in audit.failures() {
                    eprintln!("hypothesis failure: {f}");
                }
                return Ok(3);
            }
            let prob = sobolev::reduce(&sp, &eff.sobolev)?;
            (prob, Some("checks ran on the reduced L^p problem".to_string()))
        }
    };
    let mut report = verify::run(&prob, &doc.name, &opts)?;
    if let Some(n) = note {
        report.notes.push(n);
    }
    let ok = report.ok();
    let body = serde_json::to_value(&report).map_err(|e| Error::Io(format!("report: {e}")))?;
    emit(&args.common, &body, || {
        println!(
            "problem   {} ({} of {} components, {} checks)",
            report.problem, report.components_checked, report.components_total, report.checks_run
        );
        for note in &report.notes {
            println!("note: {note}");
        }
        for comp in &report.components {
            let ratios = match (comp.comparability_upper, comp.comparability_lower) {
                (Some(u), Some(l)) => format!("density ratios {u:.3e} / {l:.3e}"),
                _ => "density ratios unavailable".to_string(),
            };
            println!("component ({}, {})  {ratios}", comp.lo, comp.hi);
            for seed in &comp.seeds {
                let series: Vec<String> = seed
                    .series
                    .iter()
                    .map(|s| format!("{}@{}", s.tag, s.t0))
                    .collect();
                let residual = seed
                    .identity_residual
                    .map(|r| format!("{r:.2e}"))
                    .unwrap_or_else(|| "-".to_string());
                let status = if seed.failures.is_empty() { "ok " } else { "FAIL" };
                println!(
                    "  [{status}] x = {:<10.6} integral {:<12} series {:<40} identity residual {residual}",
                    seed.x,
                    seed.integral.tag,
                    series.join(" ")
                );
            }
        }
        if ok {
            println!("all consistency checks passed");
        } else {
            println!("{} failures:", report.failures.len());
            for f in &report.failures {
                println!("  {f}");
            }
        }
    })?;
    Ok(if ok { 0 } else { 1 })
}

fn format_time(t: f64) -> String {
    format!("{t}").replace('-', "m")
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let doc = args.input.load()?;
    let eff = effective(&doc, &args.common);
    let prob = match doc.instantiate()? {
        ProblemKind::Lp(prob) => prob,
        ProblemKind::SobolevStar(_) => {
            return Err(Error::invalid(
                "simulation runs on L^p problems; classify prints the reduced weight of a Sobolev problem",
            ))
        }
    };
    let f = match (&args.f, &args.table) {
        (Some(expr), None) => {
            let e: Expr = expr.parse()?;
            let nodes = default_nodes(&prob.omega, eff.grid_n)?;
            GridFunction::from_expr(&e, &nodes)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            parse_grid_table(&text)?
        }
        _ => unreachable!("clap enforces exactly one profile source"),
    };

    let mut tables = Vec::new();
    for &t in &args.times {
        let out = apply_semigroup(&prob, &f, t, &eff.flow.flow)?;
        let mut table = format!("# problem = {}\n# t = {t}\n", doc.name);
        if !out.flow_errors.is_empty() {
            table.push_str(&format!("# flow errors at {} nodes\n", out.flow_errors.len()));
        }
        table.push_str(&out.grid.to_table());
        tables.push((t, table, out.hull_misses));
    }
    let norms = norm_growth(&prob, &f, &args.times, &eff.flow.flow)?;
    let mut norm_table = String::from("# t\tnorm\thull_misses\tenvelope\n");
    for row in &norms {
        let envelope = row
            .envelope
            .map(|e| format!("{e:?}"))
            .unwrap_or_else(|| "missing".to_string());
        norm_table.push_str(&format!(
            "{:?}\t{:?}\t{}\t{envelope}\n",
            row.t, row.norm, row.hull_misses
        ));
    }

    if let Some(dir) = &args.common.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        for (i, (t, table, misses)) in tables.iter().enumerate() {
            let path = dir.join(format!("profile_{i:02}_t{}.tsv", format_time(*t)));
            std::fs::write(&path, table)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if !args.common.json {
                println!("wrote {} ({} nodes outside the hull)", path.display(), misses);
            }
        }
        let path = dir.join("norms.tsv");
        std::fs::write(&path, &norm_table)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if !args.common.json {
            println!("wrote {}", path.display());
        }
    } else if !args.common.json {
        for (_, table, _) in &tables {
            println!("{table}");
        }
        println!("{norm_table}");
    }

    if args.common.json {
        let rows: Vec<_> = norms
            .iter()
            .map(|r| {
                json!({
                    "t": r.t,
                    "norm": r.norm,
                    "hull_misses": r.hull_misses,
                    "envelope": r.envelope,
                })
            })
            .collect();
        let body = json!({
            "problem": doc.name,
            "nodes": f.len(),
            "times": args.times,
            "norms": rows,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&body).map_err(|e| Error::Io(e.to_string()))?
        );
    }
    Ok(0)
}

fn cmd_examples(args: ExamplesArgs) -> Result<i32> {
    let entries = catalog::entries();
    if args.common.json {
        let rows: Vec<_> = entries
            .iter()
            .map(|e| {
                let params = e.params_with(&[]).expect("defaults are valid");
                let doc = e.document(&params);
                json!({
                    "name": e.name,
                    "summary": e.summary,
                    "law": e.law,
                    "params": params,
                    "space": doc.space.to_string(),
                    "expected_verdict": e.expected_verdict(&params),
                    "document": doc,
                })
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "builtins": rows }))
                .map_err(|e| Error::Io(e.to_string()))?
        );
    } else {
        for e in entries {
            let params = e.params_with(&[]).expect("defaults are valid");
            let expected = e
                .expected_verdict(&params)
                .map(|v| format!("{v:?}"))
                .unwrap_or_else(|| "borderline".to_string());
            let param_list: Vec<String> =
                params.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            println!("{}", e.name);
            println!("  {}", e.summary);
            println!("  law: {}", e.law);
            println!(
                "  defaults: {}  ->  expected {expected}",
                param_list.join(", ")
            );
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

#[test]
    fn set_flags_parse_key_value_pairs() {
        let pairs = parse_sets(&["c=0.5".to_string(), "p = 2".to_string()]).unwrap();
        assert_eq!(pairs[0], ("c".to_string(), 0.5));
        assert_eq!(pairs[1], ("p".to_string(), 2.0));
        assert!(parse_sets(&["c".to_string()]).is_err());
        assert!(parse_sets(&["c=fast".to_string()]).is_err());
    }

    #[test]
    fn verdicts_map_onto_the_exit_code_contract() {
        assert_eq!(exit_for(Verdict::Chaotic), 0);
        assert_eq!(exit_for(Verdict::NotChaotic), 1);
        assert_eq!(exit_for(Verdict::Inconclusive), 2);
        assert_eq!(exit_for(Verdict::HypothesisViolated), 3);
    }

    #[test]
    fn flags_take_precedence_over_document_overrides() {
        let entry = catalog::find("decay-threshold").unwrap();
        let params = entry.params_with(&[]).unwrap();
        let mut doc = entry.document(&params);
        doc.overrides.tol = Some(1e-6);
        doc.overrides.grid_n = Some(64);
        let common = CommonArgs {
            tol: Some(1e-4),
            max_components: None,
            grid: None,
            seed: None,
            json: false,
            out: None,
        };
        let eff = effective(&doc, &common);
        assert_eq!(eff.criterion.tol, 1e-4);
        assert_eq!(eff.criterion.hypotheses.grid_n, 64);
        assert_eq!(eff.sobolev.grid_n, 64);
        assert_eq!(eff.grid_n, 64);
    }

    #[test]
    fn command_line_grammar_accepts_the_documented_forms() {
        let cli = Cli::try_parse_from([
            "semichaos",
            "classify",
            "--builtin",
            "decay-threshold",
            "--set",
            "c=0.5",
            "--json",
        ])
        .unwrap();
        match cli.command {
            Command::Classify(args) => {
                assert_eq!(args.input.builtin.as_deref(), Some("decay-threshold"));
                assert!(args.common.json);
            }
            _ => panic!("expected classify"),
        }
        // --set without --builtin is rejected when the input is resolved
        let cli =
            Cli::try_parse_from(["semichaos", "classify", "doc.json", "--set", "c=1"]).unwrap();
        match cli.command {
            Command::Classify(args) => assert!(args.input.load().is_err()),
            _ => panic!("expected classify"),
        }
        // a document path and --builtin conflict
        assert!(Cli::try_parse_from([
            "semichaos",
            "classify",
            "doc.json",
            "--builtin",
            "translation-line"
        ])
        .is_err());
        let cli = Cli::try_parse_from([
            "semichaos",
            "simulate",
            "--builtin",
            "decay-threshold",
            "--f",
            "x*(1-x)",
            "--times",
            "0,0.5,1",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate(args) => assert_eq!(args.times, vec![0.0, 0.5, 1.0]),
            _ => panic!("expected simulate"),
        }
    }
}
