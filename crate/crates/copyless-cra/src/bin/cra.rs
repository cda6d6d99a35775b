use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use copyless_cra::cra::Cra;
use copyless_cra::dot::export_dot;
use copyless_cra::format::{
    corpus_files, parse_cra, parse_doc, parse_rla, parse_wa, serialize_cra, AutomatonDoc,
};
use copyless_cra::harness::{equiv_harness, HarnessVerdict};
use copyless_cra::lookahead::{eliminate_lookahead, rla_run, to_unambiguous};
use copyless_cra::semiring::SemiringValue;
use copyless_cra::subst::RegisterOrder;
use copyless_cra::transforms::{collapse_word, normalize, remove_zeros, stable_registers};
use copyless_cra::{CraError, Result};

/// Copyless cost register automata: evaluation, transformation and analysis.
#[derive(Parser)]
#[command(name = "cra", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a CRA file on a word
    Eval { file: PathBuf, word: String },
    /// Evaluate a weighted automaton file on a word
    WaEval { file: PathBuf, word: String },
    /// Evaluate a lookahead machine file on a word
    RlaEval { file: PathBuf, word: String },
    /// Report structural properties of a machine file
    Check { file: PathBuf },
    /// Rewrite a CRA into normal form (optionally permuting the register order first)
    Normalize {
        file: PathBuf,
        /// Comma-separated register order to impose before normalizing
        #[arg(long)]
        order: Option<String>,
    },
    /// Rewrite a CRA so that no reachable register holds the zero value
    RemoveZeros { file: PathBuf },
    /// Find a collapse word between two states of a CRA
    CollapseWord {
        file: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Compile a lookahead machine into a plain copyless CRA
    EliminateLookahead {
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_states: usize,
    },
    /// Compare two machine files on all short words, then random words
    Equiv {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Number of additional random words
        #[arg(long, default_value_t = 0)]
        random: usize,
        /// Length of the random words
        #[arg(long, default_value_t = 12)]
        len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search a lookahead machine for words with an ambiguous or empty run set
    Ambiguity {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Print a Graphviz rendering of a machine file
    Dot { file: PathBuf },
    /// Corpus utilities
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Write the reference machines as files into a directory
    Emit { dir: PathBuf },
}

fn read(file: &PathBuf) -> Result<String> {
    std::fs::read_to_string(file)
        .map_err(|e| CraError::Semantic(format!("cannot read {}: {e}", file.display())))
}

fn doc_eval(doc: &AutomatonDoc, w: &str) -> Result<SemiringValue> {
    match doc {
        AutomatonDoc::Cra(a) => a.eval(w),
        AutomatonDoc::Wa(a) => a.eval(w),
        AutomatonDoc::Rla(r) => rla_run(r, w),
    }
}

fn doc_alphabet(doc: &AutomatonDoc) -> &[char] {
    match doc {
        AutomatonDoc::Cra(a) => &a.alphabet,
        AutomatonDoc::Wa(a) => &a.alphabet,
        AutomatonDoc::Rla(r) => &r.alphabet,
    }
}

fn check_doc(doc: &AutomatonDoc) -> Result<bool> {
    match doc {
        AutomatonDoc::Cra(a) => {
            let report = a.validate();
            println!("kind: cra");
            println!("copyless: {}", report.copyless);
            println!("normal-form: {}", report.normal_form);
            println!("total: {}", report.total);
            for w in &report.witnesses {
                println!("witness: {w}");
            }
            if report.normal_form {
                let stable: Vec<String> = stable_registers(a)?.into_iter().collect();
                println!("stable-registers: {}", stable.join(" "));
            }
            Ok(report.copyless && report.total)
        }
        AutomatonDoc::Wa(a) => {
            println!("kind: wa");
            println!("states: {}", a.states.len());
            println!("edges: {}", a.weights.len());
            Ok(true)
        }
        AutomatonDoc::Rla(r) => {
            println!("kind: rla");
            r.validate()?;
            println!("guards: disjoint");
            let u = to_unambiguous(r)?;
            println!("unambiguous-states: {}", u.states.len());
            let n = match u.alt_bound {
                Some(n) => n,
                None => u.max_alternation(8)? * 2,
            };
            println!("alternation-bound: {}", n.max(1));
            Ok(true)
        }
    }
}

fn impose_order(a: &Cra, order: &str) -> Result<Cra> {
    let regs: Vec<String> = order.split(',').map(|r| r.trim().to_string()).collect();
    let mut have: Vec<&String> = regs.iter().collect();
    have.sort();
    let mut want: Vec<&String> = a.order.registers().iter().collect();
    want.sort();
    if have != want {
        return Err(CraError::Semantic(format!(
            "--order must list exactly the registers {}",
            a.order.registers().join(", ")
        )));
    }
    let mut out = a.clone();
    out.order = RegisterOrder::new(regs);
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Eval { file, word } => {
            println!("{}", parse_cra(&read(&file)?)?.eval(&word)?);
        }
        Cmd::WaEval { file, word } => {
            println!("{}", parse_wa(&read(&file)?)?.eval(&word)?);
        }
        Cmd::RlaEval { file, word } => {
            println!("{}", rla_run(&parse_rla(&read(&file)?)?, &word)?);
        }
        Cmd::Check { file } => {
            let ok = check_doc(&parse_doc(&read(&file)?)?)?;
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Normalize { file, order } => {
            let mut a = parse_cra(&read(&file)?)?;
            if let Some(order) = order {
                a = impose_order(&a, &order)?;
            }
            print!("{}", serialize_cra(&normalize(&a)?));
        }
        Cmd::RemoveZeros { file } => {
            print!("{}", serialize_cra(&remove_zeros(&parse_cra(&read(&file)?)?)?));
        }
        Cmd::CollapseWord { file, from, to } => {
            let a = parse_cra(&read(&file)?)?;
            let (word, sigma) = collapse_word(&a, &from, &to)?;
            println!("word: {word}");
            println!("substitution: [ {sigma} ]");
        }
        Cmd::EliminateLookahead { file, max_states } => {
            let r = parse_rla(&read(&file)?)?;
            print!("{}", serialize_cra(&eliminate_lookahead(&r, max_states)?));
        }
        Cmd::Equiv { file1, file2, max_len, random, len, seed } => {
            let d1 = parse_doc(&read(&file1)?)?;
            let d2 = parse_doc(&read(&file2)?)?;
            let alphabet = doc_alphabet(&d1).to_vec();
            if alphabet != doc_alphabet(&d2) {
                return Err(CraError::Semantic("the two machines have different alphabets".into()));
            }
            let verdict = equiv_harness(
                |w| doc_eval(&d1, w),
                |w| doc_eval(&d2, w),
                &alphabet,
                max_len,
                random,
                len,
                seed,
            );
            match verdict {
                HarnessVerdict::Equivalent => println!("equivalent"),
                HarnessVerdict::Mismatch { word, left, right } => {
                    println!("mismatch on {word:?}: {left} vs {right}");
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Cmd::Ambiguity { file, max_len } => {
            let r = parse_rla(&read(&file)?)?;
            let u = to_unambiguous(&r)?;
            for w in copyless_cra::cra::all_words(&u.alphabet, max_len) {
                match u.eval(&w) {
                    Ok(_) => {}
                    Err(e @ (CraError::Ambiguity(..) | CraError::AcceptanceCount(..))) => {
                        println!("{e}");
                        return Ok(ExitCode::from(1));
                    }
                    Err(e) => return Err(e),
                }
            }
            println!("unambiguous on all words up to length {max_len}");
        }
        Cmd::Dot { file } => {
            print!("{}", export_dot(&parse_doc(&read(&file)?)?));
        }
        Cmd::Corpus { cmd: CorpusCmd::Emit { dir } } => {
            std::fs::create_dir_all(&dir)
                .map_err(|e| CraError::Semantic(format!("cannot create {}: {e}", dir.display())))?;
            for (name, text) in corpus_files() {
                let path = dir.join(&name);
                std::fs::write(&path, text)
                    .map_err(|e| CraError::Semantic(format!("cannot write {}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
