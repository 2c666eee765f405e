use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use gnngp::config::{read_config, RunConfig, Settings, KEYS};
use gnngp::harness::{run_benchmark, run_depth_scan, run_infer, run_make_splits, run_mc_verify};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("infer", "GP posterior inference on a dataset"),
    ("depth-scan", "Per-layer diagnostics of the deep-kernel limit"),
    ("mc-verify", "Compare finite-width network covariances with the analytic kernel"),
    ("benchmark", "Low-rank kernel build time on synthetic graphs of growing size"),
    ("make-splits", "Write a seeded random splits.json for a dataset"),
];

const SWITCHES: &[&str] = &["center", "variance", "eval"];

fn cli() -> Command {
    let mut cmd = Command::new("gnngp")
        .about("Infinite-width graph neural network kernels and GP node inference")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for &(name, about) in SUBCOMMANDS {
        let mut sub = Command::new(name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("key = value file with optional [command] sections"),
        );
        for &key in KEYS {
            let arg = Arg::new(key).long(key);
            sub = sub.arg(if SWITCHES.contains(&key) {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name("VALUE")
            });
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn settings(command: &str, m: &ArgMatches) -> gnngp::Result<Settings> {
    let mut s = match m.get_one::<PathBuf>("config") {
        Some(path) => read_config(path, command)?,
        None => Settings::default(),
    };
    for &key in KEYS {
        if SWITCHES.contains(&key) {
            if m.get_flag(key) {
                s.set(key, "true")?;
            }
        } else if let Some(v) = m.get_one::<String>(key) {
            s.set(key, v.as_str())?;
        }
    }
    Ok(s)
}

fn run(command: &str, m: &ArgMatches) -> gnngp::Result<()> {
    let cfg = RunConfig::from_settings(&settings(command, m)?)?;
    let report = match command {
        "infer" => run_infer(&cfg)?,
        "depth-scan" => run_depth_scan(&cfg)?,
        "mc-verify" => run_mc_verify(&cfg)?,
        "benchmark" => run_benchmark(&cfg)?,
        "make-splits" => run_make_splits(&cfg)?,
        _ => unreachable!("clap rejects unknown subcommands"),
    };
    if cfg.out.is_none() || command == "make-splits" {
        print!("{report}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (command, sub) = matches.subcommand().expect("subcommand is required");
    match run(command, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
