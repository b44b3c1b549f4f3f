//! `gpbm` batch front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
//! Failures print a single JSON record to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpbm::gallery::{
    attach_eyes, load_and_encode, parse_protocol_list, write_results_csv, GalleryRecord,
};
use gpbm::{
    build_gallery, evaluate, identify, load_index, make_kernel, pair_distance, parse_eye_list,
    save_index, Config, Error, EyePair, Probe,
};
use rayon::prelude::*;

#[derive(Parser, Debug)]
#[command(name = "gpbm", version, about = "Gabor-phase block-matching face identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a gallery list into an index file.
    Encode {
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        eyes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the distance of probe image A against gallery image B.
    Match {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        eyes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Write per-block matching records here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rank gallery candidates for every probe.
    Identify {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        probes: PathBuf,
        #[arg(long)]
        eyes: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Probe parameters; must equal the index parameters when given.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Closed-set evaluation producing a CMC curve.
    Eval {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        probes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eyes: PathBuf,
        #[arg(long)]
        cmc: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_rank: usize,
        /// Also write the ranked candidates per probe.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Write a Gabor kernel's taps as `row,col,re,im` CSV.
    KernelDump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        u: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            print_error("UsageError", &e.render().to_string());
            return ExitCode::from(1);
        }
    };
    match std::panic::catch_unwind(|| run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            print_error(e.kind(), &e.to_string());
            ExitCode::from(2)
        }
        Err(_) => {
            print_error("InternalError", "internal invariant violated");
            ExitCode::from(3)
        }
    }
}

fn print_error(kind: &str, message: &str) {
    let record = serde_json::json!({ "error": kind, "message": message.trim() });
    eprintln!("{record}");
}

fn run(cmd: Command) -> gpbm::Result<()> {
    match cmd {
        Command::Encode {
            list,
            eyes,
            config,
            out,
        } => cmd_encode(&list, &eyes, &config, &out),
        Command::Match {
            a,
            b,
            eyes,
            config,
            report,
        } => cmd_match(&a, &b, &eyes, &config, report.as_deref()),
        Command::Identify {
            index,
            probes,
            eyes,
            top_k,
            out,
            config,
        } => cmd_identify(&index, &probes, &eyes, top_k, &out, config.as_deref()),
        Command::Eval {
            index,
            probes,
            config,
            eyes,
            cmc,
            max_rank,
            results,
        } => cmd_eval(&index, &probes, &config, &eyes, &cmc, max_rank, results.as_deref()),
        Command::KernelDump { config, u, out } => cmd_kernel_dump(&config, u, &out),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> gpbm::Result<()> {
    fs::write(path, bytes).map_err(Error::from)
}

fn load_records(list: &Path, eyes: &Path) -> gpbm::Result<Vec<GalleryRecord>> {
    let eyes = parse_eye_list(eyes)?;
    attach_eyes(parse_protocol_list(list)?, &eyes)
}

fn encode_probes(records: &[GalleryRecord], config: &Config) -> gpbm::Result<Vec<Probe>> {
    records
        .par_iter()
        .map(|r| {
            Ok(Probe {
                probe_id: r.image_id.clone(),
                identity: r.identity.clone(),
                codes: load_and_encode(&r.path, &r.eyes, config)?,
            })
        })
        .collect()
}

fn cmd_encode(list: &Path, eyes: &Path, config: &Path, out: &Path) -> gpbm::Result<()> {
    let config = Config::load(config)?;
    let records = load_records(list, eyes)?;
    let index = build_gallery(&records, &config)?;
    save_index(&index, out)?;
    println!("entries: {}", index.len());
    println!("fingerprint: {}", config.fingerprint());
    Ok(())
}

fn lookup_eyes(eyes: &BTreeMap<String, EyePair>, path: &Path) -> gpbm::Result<EyePair> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    eyes.get(&name)
        .or_else(|| eyes.get(path.to_string_lossy().as_ref()))
        .copied()
        .ok_or(Error::MissingEyes(name))
}

fn cmd_match(
    a: &Path,
    b: &Path,
    eyes: &Path,
    config: &Path,
    report: Option<&Path>,
) -> gpbm::Result<()> {
    let config = Config::load(config)?;
    let eyes = parse_eye_list(eyes)?;
    let probe = load_and_encode(a, &lookup_eyes(&eyes, a)?, &config)?;
    let gallery = load_and_encode(b, &lookup_eyes(&eyes, b)?, &config)?;
    let result = pair_distance(&probe, &gallery, &config.matching)?;
    if let Some(path) = report {
        write_file(path, result.to_text().as_bytes())?;
    }
    println!("{:.6}", result.dist);
    Ok(())
}

fn cmd_identify(
    index: &Path,
    probes: &Path,
    eyes: &Path,
    top_k: usize,
    out: &Path,
    config: Option<&Path>,
) -> gpbm::Result<()> {
    let index = load_index(index)?;
    let config = match config {
        Some(path) => Config::load(path)?,
        None => index.config().clone(),
    };
    if &config != index.config() {
        return Err(Error::FingerprintMismatch);
    }
    let probes = encode_probes(&load_records(probes, eyes)?, &config)?;
    let results = probes
        .iter()
        .map(|p| identify(&p.probe_id, &p.codes, &config, &index, top_k))
        .collect::<gpbm::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_results_csv(&results, &mut buf)?;
    write_file(out, &buf)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    index: &Path,
    probes: &Path,
    config: &Path,
    eyes: &Path,
    cmc_out: &Path,
    max_rank: usize,
    results_out: Option<&Path>,
) -> gpbm::Result<()> {
    let index = load_index(index)?;
    let config = Config::load(config)?;
    if &config != index.config() {
        return Err(Error::FingerprintMismatch);
    }
    let records = load_records(probes, eyes)?;
    let unknown: Vec<String> = records
        .iter()
        .filter(|r| !index.contains_identity(&r.identity))
        .map(|r| r.image_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownIdentity(unknown));
    }
    let probes = encode_probes(&records, &config)?;
    let ev = evaluate(&probes, &config, &index, max_rank)?;

    let mut buf = Vec::new();
    ev.cmc.write_csv(&mut buf)?;
    write_file(cmc_out, &buf)?;
    if let Some(path) = results_out {
        let mut buf = Vec::new();
        write_results_csv(&ev.results, &mut buf)?;
        write_file(path, &buf)?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "probes: {}", ev.cmc.probe_count)?;
    writeln!(stdout, "rank-1: {:.1}%", ev.cmc.rank1() * 100.0)?;
    Ok(())
}

fn cmd_kernel_dump(config: &Path, u: u8, out: &Path) -> gpbm::Result<()> {
    let config = Config::load(config)?;
    let kernel = make_kernel(&config.gabor, u)?;
    write_file(out, kernel.to_csv().as_bytes())
}
