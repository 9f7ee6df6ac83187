use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{value_parser, Arg, ArgMatches, Command};

use quadlab_cli::manifest::{execute, replay};
use quadlab_cli::params::{Kind, Params, SUBCOMMANDS};
use quadlab_cli::OUT_DIR_ENV;

const USAGE: u8 = 1;
const FAILED: u8 = 2;

fn value_name(k: Kind) -> &'static str {
    match k {
        Kind::Float => "X",
        Kind::Int => "N",
        Kind::FloatList => "X,Y,..",
        Kind::Range => "A..B",
        Kind::Text => "TEXT",
    }
}

fn run_args(cmd: Command) -> Command {
    cmd.arg(
        Arg::new("out")
            .long("out")
            .value_name("DIR")
            .value_parser(value_parser!(PathBuf))
            .help(format!(
                "output directory [default: ${OUT_DIR_ENV}, else out/<subcommand>]"
            )),
    )
    .arg(
        Arg::new("threads")
            .long("threads")
            .value_name("N")
            .value_parser(value_parser!(usize))
            .help("worker threads [default: logical cores]"),
    )
}

fn cli() -> Command {
    let mut cmd = Command::new("quadlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Experiments on superattracting parameters near a Misiurewicz quadratic map")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        let mut sc = Command::new(*name).about(*about);
        for p in Params::all_params(name) {
            sc = sc.arg(
                Arg::new(p.key)
                    .long(p.flag())
                    .value_name(value_name(p.kind))
                    .help(p.help)
                    .default_value(p.default)
                    .allow_negative_numbers(true),
            );
        }
        sc = sc.arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("TOML file of parameters; top-level keys and a [<subcommand>] section, overridden by flags"),
        );
        cmd = cmd.subcommand(run_args(sc));
    }
    cmd.subcommand(run_args(
        Command::new("replay")
            .about("rerun an experiment from its manifest and compare every CSV")
            .arg(
                Arg::new("manifest")
                    .long("manifest")
                    .value_name("FILE")
                    .required(true)
                    .value_parser(value_parser!(PathBuf)),
            ),
    ))
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn out_dir(m: &ArgMatches, fallback: PathBuf) -> PathBuf {
    m.get_one::<PathBuf>("out")
        .cloned()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or(fallback)
}

fn read_config(path: &Path) -> anyhow::Result<toml::Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("--config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow::anyhow!("--config {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let m = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let (sub, sm) = m.subcommand().expect("a subcommand is required");
    let threads = sm.get_one::<usize>("threads").copied().filter(|&n| n > 0);

    if sub == "replay" {
        let manifest = sm.get_one::<PathBuf>("manifest").expect("required");
        let fallback = manifest.parent().unwrap_or(Path::new(".")).join("replay");
        let dir = out_dir(sm, fallback);
        let r = match replay(manifest, &dir, threads) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(FAILED);
            }
        };
        print!("{}", r.artifacts.summary);
        for name in r.artifacts.outputs.keys() {
            let same = !r.mismatches.iter().any(|x| &x.0 == name);
            println!("{name}: {}", if same { "identical" } else { "DIFFERS" });
        }
        for (name, want, got) in &r.mismatches {
            if !r.artifacts.outputs.contains_key(name) {
                println!("{name}: recorded {want}, replay produced {got}");
            }
        }
        return ExitCode::from(if r.mismatches.is_empty() { 0 } else { FAILED });
    }

    let file = match sm
        .get_one::<PathBuf>("config")
        .map(|p| read_config(p))
        .transpose()
    {
        Ok(f) => f,
        Err(e) => return usage(e),
    };
    let mut flags = BTreeMap::new();
    for p in Params::all_params(sub) {
        if sm.value_source(p.key) == Some(ValueSource::CommandLine) {
            if let Some(v) = sm.get_one::<String>(p.key) {
                flags.insert(p.key.to_string(), v.clone());
            }
        }
    }
    let params = match Params::resolve(sub, file.as_ref(), &flags) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    let dir = out_dir(sm, PathBuf::from("out").join(sub));
    match execute(&params, &dir, threads) {
        Ok(a) => {
            print!("{}", a.summary);
            println!("artifacts in {}", a.dir.display());
            ExitCode::from(if a.outcome.failure.is_some() {
                FAILED
            } else {
                0
            })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(FAILED)
        }
    }
}
