//! `af`: command-line front end for the adjacent-fragment workbench.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage or input error.
//! Every JSON document starts with a header carrying the tool version, the
//! seed and the caps in force.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use adjacent::bisim::{
    check_bisimulation, greatest_bisimulation_with, heart_counterexample, sigma_alive, sigma_type,
    AdjacentForest, DEFAULT_PAIR_CAP,
};
use adjacent::formulas::{
    adjacent_closure, check_fragments, is_index_normal, parse, print, print_pretty, to_normal_form,
    Formula, NormalForm, Signature,
};
use adjacent::ga_encoder::{
    atm_accepts_with, encode_with_cap, Atm, DEFAULT_CONFIG_CAP, DEFAULT_EXPONENT_CAP,
};
use adjacent::reduction::{build_psi, Caps, Variant};
use adjacent::solver::{decide_sat_desk_with, SearchCaps};
use adjacent::structures::{evaluate, LayeredStructure, StructureFile};
use adjacent::translations::{af2_to_fo2, fo2_to_af, transitivity_formula};
use adjacent::words::{chars, defects, lambda_closure, primitive_generator, word_string};

const FORMULA_GRAMMAR: &str = "\
Formula files use s-expressions:
  formula := (not F) | (and F+) | (or F+) | (-> F F) | (<-> F F)
           | (forall xN F) | (exists xN F) | (P xN*) | (= xN xM) | true | false
Structure JSON: {\"domain_size\": n, \"relations\": {\"P\": {\"arity\": m, \"tuples\": [[..]]}}}
  with optional \"height\" (layered) and \"addresses\" (forest).
Machine JSON: {\"states\": [{\"name\", \"kind\"}], \"alphabet\", \"blank\", \"initial\",
  \"transitions\": [{\"from\", \"read\", \"to\", \"write\", \"move\"}], \"space_exponent\"}";

#[derive(Parser)]
#[command(name = "af", version, about = "Adjacent fragment workbench", after_help = FORMULA_GRAMMAR)]
struct Cli {
    /// Seed recorded in the output header (all commands are deterministic).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Combinatorics on words.
    #[command(subcommand)]
    Words(WordsCmd),
    /// Formula utilities.
    #[command(subcommand)]
    Fml(FmlCmd),
    /// Structure utilities.
    #[command(subcommand, name = "struct")]
    Struct(StructCmd),
    /// Variable-elimination reduction.
    #[command(subcommand)]
    Reduce(ReduceCmd),
    /// Bounded satisfiability search.
    Solve {
        file: PathBuf,
        #[arg(long)]
        max_size: usize,
        /// Reduce to two variables first, then elevate the model back.
        #[arg(long)]
        pipeline: bool,
        #[arg(long, default_value_t = SearchCaps::default().clauses)]
        max_clauses: usize,
    },
    /// Translations between FO² and the adjacent fragment.
    #[command(subcommand)]
    Translate(TranslateCmd),
    /// Gadgets.
    #[command(subcommand)]
    Gadget(GadgetCmd),
    /// Encode an alternating machine and input as a GA sentence.
    EncodeAtm {
        machine: PathBuf,
        input: String,
        #[arg(long, default_value_t = DEFAULT_EXPONENT_CAP)]
        max_exponent: usize,
        /// Write the sentence here instead of embedding it in the JSON.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Alternating machine utilities.
    #[command(subcommand)]
    Atm(AtmCmd),
    /// Bounded bisimulation between two pointed structures.
    Bisim {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        tuple_a: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        tuple_b: Vec<u32>,
        #[arg(long)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_PAIR_CAP)]
        max_pairs: usize,
    },
}

#[derive(Subcommand)]
enum WordsCmd {
    /// Primitive generator and the walk onto the word.
    Primgen { word: String },
    /// Defect set of a word.
    Defects { word: String },
    /// Closure of seed words under the three λ walks.
    Closure {
        #[arg(long)]
        m: usize,
        seeds: Vec<String>,
        #[arg(long, default_value_t = 1 << 20)]
        cap: usize,
    },
}

#[derive(Subcommand)]
enum FmlCmd {
    /// Parse and report fragment membership; index-normal input required.
    Check { file: PathBuf },
    /// Normal form.
    Nf { file: PathBuf },
    /// Adjacent closure of the normal form.
    Acl { file: PathBuf },
}

#[derive(Subcommand)]
enum StructCmd {
    /// Truth of a formula in a structure.
    Eval {
        structure: PathBuf,
        formula: PathBuf,
        /// Values for x1, x2, ... when the formula has free variables.
        #[arg(long, value_delimiter = ',')]
        tuple: Vec<u32>,
    },
}

#[derive(Subcommand)]
enum ReduceCmd {
    /// One reduction step: l+1 variables to l.
    Once {
        file: PathBuf,
        #[arg(long)]
        eq_free: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = Caps::default().types)]
        max_types: usize,
        #[arg(long, default_value_t = Caps::default().stars)]
        max_stars: usize,
    },
}

#[derive(Subcommand)]
enum TranslateCmd {
    /// FO² sentence to an equivalent adjacent sentence.
    Fo2ToAf { file: PathBuf },
    /// Adjacent sentence over a binary signature to FO².
    AfToFo2 { file: PathBuf },
}

#[derive(Subcommand)]
enum GadgetCmd {
    /// Sentence forcing `T` to be transitive.
    Transitivity {
        #[arg(long)]
        map: String,
        #[arg(long)]
        t: String,
        #[arg(long)]
        q: String,
    },
}

#[derive(Subcommand)]
enum AtmCmd {
    /// Decide acceptance and print an accepting tree.
    Run {
        machine: PathBuf,
        input: String,
        #[arg(long, default_value_t = DEFAULT_CONFIG_CAP)]
        max_configs: usize,
    },
}

struct Out {
    seed: u64,
    format: Format,
}

impl Out {
    fn emit(&self, command: &str, caps: Value, body: Value, text: impl FnOnce() -> String) {
        match self.format {
            Format::Text => say(&text()),
            Format::Json => {
                let mut doc = Map::new();
                doc.insert("tool".into(), json!("af"));
                doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
                doc.insert("seed".into(), json!(self.seed));
                doc.insert("caps".into(), caps);
                doc.insert("command".into(), json!(command));
                if let Value::Object(m) = body {
                    doc.extend(m);
                }
                say(&serde_json::to_string_pretty(&Value::Object(doc)).unwrap());
            }
        }
    }
}

/// Write a line to stdout, ignoring a closed pipe.
fn say(s: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{s}");
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_formula(path: &Path) -> Result<Formula> {
    parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_structure(path: &Path) -> Result<StructureFile> {
    serde_json::from_str(&read(path)?).with_context(|| format!("malformed JSON in {}", path.display()))
}

fn read_machine(path: &Path) -> Result<Atm> {
    Atm::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// The input as a normal form: recognised directly when it already has the
/// shape, rewritten otherwise.
fn as_normal_form(phi: &Formula) -> Result<NormalForm> {
    let l = phi.max_var().max(2) - 1;
    if let Some(nf) = NormalForm::recognize(phi, l) {
        return Ok(nf);
    }
    Ok(to_normal_form(phi)?.0)
}

fn no_caps() -> Value {
    json!({})
}

fn run(cli: Cli) -> Result<u8> {
    let out = Out {
        seed: cli.seed,
        format: cli.format,
    };
    match cli.command {
        Command::Words(cmd) => words(&out, cmd),
        Command::Fml(cmd) => fml(&out, cmd),
        Command::Struct(StructCmd::Eval {
            structure,
            formula,
            tuple,
        }) => {
            let file = read_structure(&structure)?;
            let phi = read_formula(&formula)?;
            let assignment: BTreeMap<usize, u32> =
                tuple.iter().enumerate().map(|(i, &e)| (i + 1, e)).collect();
            let value = match file.height {
                Some(_) => LayeredStructure::from_file(&file)?.evaluate(&phi, &assignment)?,
                None => evaluate(&file.to_structure()?, &phi, &assignment)?,
            };
            out.emit("struct eval", no_caps(), json!({ "value": value }), || value.to_string());
            Ok(if value { 0 } else { 1 })
        }
        Command::Reduce(ReduceCmd::Once {
            file,
            eq_free,
            output,
            max_types,
            max_stars,
        }) => {
            let phi = read_formula(&file)?;
            let nf = as_normal_form(&phi)?;
            let variant = if eq_free {
                Variant::EqualityFree
            } else {
                Variant::WithEquality
            };
            let caps = Caps {
                types: max_types,
                stars: max_stars,
            };
            let red = build_psi(&nf, variant, caps)?;
            let psi = red.formula();
            let text = print_pretty(&psi);
            let mut body = json!({
                "variant": variant,
                "variables_in": nf.l + 1,
                "variables_out": red.psi.l + 1,
                "registry": red.registry,
            });
            match &output {
                Some(p) => {
                    fs::write(p, format!("{text}\n"))
                        .with_context(|| format!("cannot write {}", p.display()))?;
                    body["psi_file"] = json!(p.display().to_string());
                }
                None => body["psi"] = json!(print(&psi)),
            }
            out.emit("reduce once", json!(caps), body, || text.clone());
            Ok(0)
        }
        Command::Solve {
            file,
            max_size,
            pipeline,
            max_clauses,
        } => {
            if max_size == 0 {
                bail!("--max-size must be positive");
            }
            let phi = read_formula(&file)?;
            let search = SearchCaps {
                clauses: max_clauses,
            };
            let report = decide_sat_desk_with(&phi, max_size, pipeline, Caps::default(), search)?;
            let caps = json!({
                "max_size": max_size,
                "clauses": max_clauses,
                "reduction": Caps::default(),
            });
            let code = report.exit_code() as u8;
            out.emit("solve", caps, json!({ "report": report }), || {
                serde_json::to_string(&report.verdict).unwrap()
            });
            Ok(code)
        }
        Command::Translate(cmd) => {
            let (name, file) = match &cmd {
                TranslateCmd::Fo2ToAf { file } => ("translate fo2-to-af", file),
                TranslateCmd::AfToFo2 { file } => ("translate af-to-fo2", file),
            };
            let phi = read_formula(file)?;
            let psi = match cmd {
                TranslateCmd::Fo2ToAf { .. } => fo2_to_af(&phi)?,
                TranslateCmd::AfToFo2 { .. } => af2_to_fo2(&phi)?,
            };
            out.emit(name, no_caps(), json!({ "formula": print(&psi) }), || print_pretty(&psi));
            Ok(0)
        }
        Command::Gadget(GadgetCmd::Transitivity { map, t, q }) => {
            let f: Vec<usize> = map
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .context("--map expects comma-separated positive integers")?;
            let g = transitivity_formula(&f, &t, &q)?;
            let body = json!({
                "formula": print(&g.formula),
                "j": g.j,
                "swapped": g.swapped,
                "m": g.m,
                "k": g.k,
            });
            out.emit("gadget transitivity", no_caps(), body, || print_pretty(&g.formula));
            Ok(0)
        }
        Command::EncodeAtm {
            machine,
            input,
            max_exponent,
            output,
        } => {
            let m = read_machine(&machine)?;
            let w0 = m.parse_input(&input)?;
            let phi = encode_with_cap(&m, &w0, max_exponent)?;
            let report = check_fragments(&phi);
            let text = print_pretty(&phi);
            let mut body = json!({ "fragments": report, "size": phi.size() });
            match &output {
                Some(p) => {
                    fs::write(p, format!("{text}\n"))
                        .with_context(|| format!("cannot write {}", p.display()))?;
                    body["formula_file"] = json!(p.display().to_string());
                }
                None => body["formula"] = json!(print(&phi)),
            }
            out.emit("encode-atm", json!({ "max_exponent": max_exponent }), body, || text.clone());
            Ok(0)
        }
        Command::Atm(AtmCmd::Run {
            machine,
            input,
            max_configs,
        }) => {
            let m = read_machine(&machine)?;
            let w0 = m.parse_input(&input)?;
            let tree = atm_accepts_with(&m, &w0, max_configs)?;
            let accepted = tree.is_some();
            let verdict = if accepted { "accept" } else { "reject" };
            out.emit(
                "atm run",
                json!({ "max_configs": max_configs }),
                json!({ "verdict": verdict, "tree": tree }),
                || verdict.to_string(),
            );
            Ok(if accepted { 0 } else { 1 })
        }
        Command::Bisim {
            a,
            b,
            sigma,
            tuple_a,
            tuple_b,
            max_len,
            max_pairs,
        } => bisim(&out, &a, &b, &sigma, &tuple_a, &tuple_b, max_len, max_pairs),
    }
}

fn words(out: &Out, cmd: WordsCmd) -> Result<u8> {
    match cmd {
        WordsCmd::Primgen { word } => {
            if word.is_empty() {
                bail!("empty word");
            }
            let (g, f) = primitive_generator(&chars(&word));
            let g = word_string(&g);
            let body = json!({ "generator": g, "length": g.chars().count(), "walk": f.values });
            out.emit("words primgen", no_caps(), body, || g.clone());
        }
        WordsCmd::Defects { word } => {
            let d = defects(&chars(&word));
            let body = json!({ "defects": d.pairs, "classes": d.classes() });
            out.emit("words defects", no_caps(), body, || {
                d.pairs
                    .iter()
                    .map(|(i, j)| format!("<{i},{j}>"))
                    .collect::<Vec<_>>()
                    .join(" ")
            });
        }
        WordsCmd::Closure { m, seeds, cap } => {
            if cap == 0 {
                bail!("--cap must be positive");
            }
            let seeds: BTreeSet<Vec<char>> = seeds.iter().map(|s| chars(s)).collect();
            let closure = lambda_closure(&seeds, m, cap)?;
            let list: Vec<String> = closure.iter().map(|w| word_string(w)).collect();
            out.emit(
                "words closure",
                json!({ "cap": cap }),
                json!({ "m": m, "size": list.len(), "words": list }),
                || list.join("\n"),
            );
        }
    }
    Ok(0)
}

fn fml(out: &Out, cmd: FmlCmd) -> Result<u8> {
    match cmd {
        FmlCmd::Check { file } => {
            let phi = read_formula(&file)?;
            if !is_index_normal(&phi) {
                bail!(
                    "{}: not index-normal (quantify x_{{k+1}} only when x_1..x_k are in scope)",
                    file.display()
                );
            }
            let report = check_fragments(&phi);
            out.emit("fml check", no_caps(), json!({ "report": report }), || {
                serde_json::to_string(&report).unwrap()
            });
        }
        FmlCmd::Nf { file } => {
            let phi = read_formula(&file)?;
            let (nf, sig) = to_normal_form(&phi)?;
            let f = nf.to_formula();
            let body = json!({ "l": nf.l, "formula": print(&f), "signature": sig });
            out.emit("fml nf", no_caps(), body, || print_pretty(&f));
        }
        FmlCmd::Acl { file } => {
            let phi = read_formula(&file)?;
            let nf = as_normal_form(&phi)?;
            let acl = adjacent_closure(&nf)?;
            let f = acl.to_formula();
            let body = json!({
                "l": acl.l,
                "existential_conjuncts": acl.gammas.len(),
                "formula": print(&f),
            });
            out.emit("fml acl", no_caps(), body, || print_pretty(&f));
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn bisim(
    out: &Out,
    a: &Path,
    b: &Path,
    sigma: &[String],
    tuple_a: &[u32],
    tuple_b: &[u32],
    max_len: usize,
    max_pairs: usize,
) -> Result<u8> {
    if max_len == 0 {
        bail!("--max-len must be positive");
    }
    let fa = read_structure(a)?;
    let fb = read_structure(b)?;
    let sa = fa.to_structure()?;
    let sb = fb.to_structure()?;
    let mut sig = Signature::new();
    for p in sigma {
        let arity = sa
            .relations
            .get(p)
            .or_else(|| sb.relations.get(p))
            .map(|r| r.arity)
            .with_context(|| format!("predicate {p} occurs in neither structure"))?;
        sig.insert(p.clone(), arity);
    }
    let mut hearts = Map::new();
    for (name, file, s) in [("a", &fa, &sa), ("b", &fb, &sb)] {
        if let Some(addr) = &file.addresses {
            let forest = AdjacentForest::new(s.clone(), addr.clone())?;
            forest.validate(&sig)?;
            let bad = heart_counterexample(&forest, &sig)?;
            hearts.insert(name.into(), json!({ "heart": bad.is_none(), "counterexample": bad }));
        }
    }
    let z = greatest_bisimulation_with(&sa, tuple_a, &sb, tuple_b, &sig, max_len, max_pairs)?;
    let caps = json!({ "max_len": max_len, "max_pairs": max_pairs });
    let mut body = json!({ "bisimilar": z.is_some(), "forests": hearts });
    let code = match &z {
        Some(z) => {
            check_bisimulation(z, &sa, &sb, &sig)
                .map_err(|v| anyhow::anyhow!("internal check failed: {v:?}"))?;
            body["pairs"] = json!(z.pairs.len());
            0
        }
        None => {
            let harmony = sigma_alive(&sa, tuple_a, &sig) == sigma_alive(&sb, tuple_b, &sig)
                && sigma_type(&sa, tuple_a, &sig) == sigma_type(&sb, tuple_b, &sig);
            body["reason"] = json!(if harmony { "forth-back" } else { "atomic-harmony" });
            1
        }
    };
    let verdict = if code == 0 { "bisimilar" } else { "not bisimilar" };
    out.emit("bisim", caps, body, || verdict.to_string());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
