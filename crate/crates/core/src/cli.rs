//! Command-line front end. Exit codes: 0 success, 1 data or validation
//! error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use crate::gop::{categorize, score_corpus_with_bounds, Bounds, QuantizerConfig};
use crate::io::{
    parse_alignments, parse_intensity_records, parse_manifest, parse_phone_map, parse_posteriors,
    split_corpus, write_categorized_records, write_intensity_records, write_manifest,
};
use crate::renderer::{
    frame_csv, load_params, phoneme_csv, render, render_uniform, save_params, spearman, synth_corpus,
    train_toy, RendererConfig,
};
use crate::types::{validate_corpus, IntensityCategory, PhonemeInventory};
use crate::verify::{run_gradcheck, Dims};

#[derive(Debug, Parser)]
#[command(name = "accentkit", version, about = "Accent intensity scoring and toy accent rendering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that posteriors, alignments and phone map fit together.
    Validate(CorpusArgs),
    /// Score aligned phonemes and write the intensity table.
    Score {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Percentile clip bounds for normalization.
        #[arg(long, value_name = "LO,HI", value_parser = parse_pair)]
        clip: Option<(f64, f64)>,
        /// Fixed normalization bounds in GoP units, e.g. from a training split.
        #[arg(long, value_name = "LO,HI", value_parser = parse_pair, conflicts_with = "clip")]
        clip_frozen: Option<(f64, f64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add a slight/average/strong column to an intensity table.
    Categorize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a manifest into train, validation and test manifests.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "8,1,1", value_parser = parse_ratios)]
        ratios: [f64; 3],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render a phoneme sequence at the given intensities.
    #[command(group(ArgGroup::new("intensities").required(true).args(["intensity", "intensity_uniform"])))]
    Render {
        #[arg(long)]
        params: PathBuf,
        /// Comma-separated phoneme ids.
        #[arg(long, value_parser = parse_ids, allow_hyphen_values = true)]
        phonemes: Ids,
        /// Comma-separated intensities, one per phoneme.
        #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
        intensity: Option<Reals>,
        /// One intensity shared by every phoneme.
        #[arg(long, allow_hyphen_values = true)]
        intensity_uniform: Option<f64>,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Train the toy renderer on a synthetic corpus and save the parameters.
    TrainToy {
        #[arg(long, default_value_t = 200)]
        utterances: usize,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients against finite differences.
    Gradcheck {
        #[arg(long, value_enum, default_value_t = DimsArg::Small)]
        dims: DimsArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub posteriors: PathBuf,
    #[arg(long)]
    pub align: PathBuf,
    #[arg(long)]
    pub phonemap: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DimsArg {
    Small,
    Default,
}

#[derive(Debug, Clone)]
pub struct Ids(pub Vec<usize>);

#[derive(Debug, Clone)]
pub struct Reals(pub Vec<f64>);

fn split_list(s: &str) -> Vec<&str> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(',').collect()
    }
}

fn parse_ids(s: &str) -> Result<Ids, String> {
    split_list(s)
        .into_iter()
        .map(|t| t.parse::<usize>().map_err(|_| format!("bad phoneme id {t:?}")))
        .collect::<Result<_, _>>()
        .map(Ids)
}

fn parse_reals(s: &str) -> Result<Reals, String> {
    split_list(s)
        .into_iter()
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect::<Result<_, _>>()
        .map(Reals)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_reals(s)?.0;
    match v[..] {
        [lo, hi] if lo.is_finite() && hi.is_finite() => Ok((lo, hi)),
        _ => Err("expected two finite numbers LO,HI".into()),
    }
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let v = parse_reals(s)?.0;
    let [a, b, c] = v[..] else {
        return Err("expected three ratios TRAIN,VAL,TEST".into());
    };
    if [a, b, c].iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err("ratios must be positive".into());
    }
    Ok([a, b, c])
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

/// Reads and parses a file, prefixing parse errors with the file name.
fn load<T, E: std::fmt::Display>(path: &Path, parse: impl FnOnce(&str) -> Result<T, E>) -> Result<T> {
    let text = read(path)?;
    parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves partial output.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("{}: cannot write", dir.display()))?;
    tmp.write_all(contents.as_bytes())
        .with_context(|| format!("{}: cannot write", path.display()))?;
    tmp.persist(path)
        .map_err(|e| anyhow!("{}: cannot write: {}", path.display(), e.error))?;
    Ok(())
}

struct Corpus {
    inventory: PhonemeInventory,
    posteriors: crate::types::PosteriorSet,
    alignments: crate::types::AlignmentSet,
}

fn load_corpus(args: &CorpusArgs) -> Result<Corpus> {
    Ok(Corpus {
        inventory: load(&args.phonemap, parse_phone_map)?,
        posteriors: load(&args.posteriors, parse_posteriors)?,
        alignments: load(&args.align, parse_alignments)?,
    })
}

fn line(out: &mut String, s: impl AsRef<str>) {
    out.push_str(s.as_ref());
    out.push('\n');
}

/// Runs one command and returns what it prints on standard output.
pub fn execute(command: Command) -> Result<String> {
    let mut out = String::new();
    match command {
        Command::Validate(args) => {
            let c = load_corpus(&args)?;
            let violations = validate_corpus(&c.posteriors, &c.alignments, &c.inventory);
            if let Some(first) = violations.first() {
                bail!("{} violation(s); first: {first}", violations.len());
            }
            line(&mut out, format!("utterances={}", c.posteriors.len()));
            line(&mut out, format!("segments={}", c.alignments.num_segments()));
            line(&mut out, "corpus is valid");
        }
        Command::Score {
            corpus,
            clip,
            clip_frozen,
            out: path,
        } => {
            let c = load_corpus(&corpus)?;
            let mut config = QuantizerConfig::default();
            if let Some((lo, hi)) = clip {
                config = config.with_clip(lo, hi);
            }
            let frozen = clip_frozen.map(|(lo, hi)| Bounds::new(lo, hi)).transpose()?;
            let report = score_corpus_with_bounds(&c.posteriors, &c.alignments, &c.inventory, &config, frozen)
                .map_err(|e| match e {
                    crate::gop::GopError::Validation(v) => anyhow!("{}", v[0]),
                    other => anyhow!(other),
                })?;
            write_atomic(&path, &write_intensity_records(&report.records))?;
            line(&mut out, format!("lo={}", report.bounds.lo));
            line(&mut out, format!("hi={}", report.bounds.hi));
            line(&mut out, format!("records={}", report.records.len()));
        }
        Command::Categorize { input, out: path } => {
            let records = load(&input, parse_intensity_records)?;
            let mut counts = [0usize; 3];
            for r in &records {
                let cat = categorize(r.intensity)?;
                counts[IntensityCategory::ALL.iter().position(|c| *c == cat).expect("listed")] += 1;
            }
            write_atomic(&path, &write_categorized_records(&records))?;
            for (cat, n) in IntensityCategory::ALL.iter().zip(counts) {
                line(&mut out, format!("{cat}={n}"));
            }
        }
        Command::Split {
            manifest,
            ratios,
            seed,
            out_dir,
        } => {
            let m = load(&manifest, parse_manifest)?;
            let (train, val, test) =
                split_corpus(&m, ratios, seed).map_err(|e| anyhow!("{}: {e}", manifest.display()))?;
            fs::create_dir_all(&out_dir).with_context(|| format!("{}: cannot create", out_dir.display()))?;
            for (name, part) in [("train", &train), ("val", &val), ("test", &test)] {
                write_atomic(&out_dir.join(format!("{name}.manifest")), &write_manifest(part))?;
                line(&mut out, format!("{name}={}", part.len()));
            }
        }
        Command::Render {
            params,
            phonemes,
            intensity,
            intensity_uniform,
            out_prefix,
        } => {
            let p = load(&params, load_params)?;
            let ids = phonemes.0;
            let (scores, rendered) = match (intensity, intensity_uniform) {
                (Some(list), _) => {
                    let r = render(&ids, &list.0, &p)?;
                    (list.0, r)
                }
                (None, Some(c)) => (vec![c; ids.len()], render_uniform(&ids, c, &p)?),
                (None, None) => unreachable!("clap requires one intensity flag"),
            };
            let prefix = out_prefix.as_os_str().to_owned();
            let with_suffix = |s: &str| {
                let mut p: OsString = prefix.clone();
                p.push(s);
                PathBuf::from(p)
            };
            write_atomic(&with_suffix(".phoneme.csv"), &phoneme_csv(&ids, &scores, &rendered))?;
            write_atomic(&with_suffix(".frame.csv"), &frame_csv(&rendered))?;
            line(&mut out, format!("phonemes={}", ids.len()));
            line(&mut out, format!("frames={}", rendered.num_frames()));
        }
        Command::TrainToy {
            utterances,
            epochs,
            lr,
            seed,
            out: path,
        } => {
            let config = RendererConfig::toy();
            let corpus = synth_corpus(seed, utterances, &config)?;
            let outcome = train_toy(&corpus, &config, epochs, lr, seed)?;
            write_atomic(&path, &save_params(&outcome.params))?;
            if let (Some(first), Some(last)) = (outcome.losses.first(), outcome.losses.last()) {
                line(&mut out, format!("initial_loss={first}"));
                line(&mut out, format!("final_loss={last}"));
            }
            let held_out = synth_corpus(seed ^ 0x5EED, 50, &config)?;
            let (mut xs, mut ps, mut es) = (Vec::new(), Vec::new(), Vec::new());
            for u in &held_out {
                let r = render(&u.ids, &u.intensity, &outcome.params)?;
                xs.extend(&u.intensity);
                ps.extend(r.pitch);
                es.extend(r.energy);
            }
            line(&mut out, format!("pitch_spearman={}", spearman(&xs, &ps)));
            line(&mut out, format!("energy_spearman={}", spearman(&xs, &es)));
        }
        Command::Gradcheck {
            dims,
            seed,
            inject_fault,
        } => {
            let dims = match dims {
                DimsArg::Small => Dims::Small,
                DimsArg::Default => Dims::Default,
            };
            let results = run_gradcheck(dims, seed, inject_fault.as_deref())?;
            for r in &results {
                line(&mut out, format!("{}={:e}", r.component, r.max_relative_error));
            }
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.component).collect();
            if !failed.is_empty() {
                print!("{out}");
                bail!("gradient check failed: {}", failed.join(", "));
            }
            line(&mut out, "all components within tolerance");
        }
    }
    Ok(out)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
