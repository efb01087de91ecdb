use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use fdlp::extract::{run_extraction, FeatureType};
use fdlp::filterbank::mel_triangular_filterbank;
use fdlp::io::{read_archive, write_archive, write_pgm, write_spectrogram_csv, ConfigFile, CorpusManifest};
use fdlp::spectrogram::{cochlear_filterbank, FdlpConfig};
use fdlp::{Error, Result};

#[derive(Parser)]
#[command(name = "fdlp", version, about = "FDLP and mel spectrogram feature extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract features for every utterance in a manifest.
    Extract(Box<ExtractArgs>),
    /// Write one archive entry as CSV or a PGM image.
    Dump(DumpArgs),
    /// Print an archive's header and entry listing.
    Inspect {
        #[arg(long)]
        archive: PathBuf,
    },
}

#[derive(Args)]
struct ExtractArgs {
    /// Lines of `<utterance-id> <wav-path>`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fdlp or mel.
    #[arg(long)]
    feature: Option<String>,
    #[arg(long)]
    window_seconds: Option<f64>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    bands: Option<usize>,
    #[arg(long)]
    frame_rate: Option<f64>,
    #[arg(long)]
    lifter_a: Option<usize>,
    #[arg(long)]
    lifter_b: Option<usize>,
    #[arg(long)]
    envelope_floor: Option<f64>,
    #[arg(long)]
    band_width_bark: Option<f64>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Expected sample rate; files at other rates fail. Also sets the rate
    /// used by --dump-filterbank.
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Write the filterbank for this configuration as CSV.
    #[arg(long, value_name = "CSV")]
    dump_filterbank: Option<PathBuf>,
    /// Write the per-utterance report here instead of stderr.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("output").required(true).args(["csv", "image"])))]
struct DumpArgs {
    #[arg(long)]
    archive: PathBuf,
    #[arg(long)]
    id: String,
    #[arg(long, value_name = "OUT")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "OUT")]
    image: Option<PathBuf>,
}

struct Resolved {
    config: FdlpConfig,
    feature: FeatureType,
    parallelism: usize,
    sample_rate: Option<u32>,
}

fn resolve(args: &ExtractArgs) -> Result<Resolved> {
    let mut config = FdlpConfig::default();
    let file = match &args.config {
        Some(path) => ConfigFile::from_file(path)?,
        None => ConfigFile::default(),
    };
    file.apply_to(&mut config)?;
    let mut feature = match file.get_str("feature") {
        Some(f) => f.parse()?,
        None => FeatureType::Fdlp,
    };
    let mut parallelism = file.get("parallelism")?.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let mut sample_rate = file.get("sample_rate")?;

    macro_rules! flag {
        ($field:ident => $target:expr) => {
            if let Some(v) = args.$field.clone() {
                $target = v;
            }
        };
    }
    flag!(window_seconds => config.window_seconds);
    flag!(overlap => config.overlap_fraction);
    flag!(order => config.model_order);
    flag!(bands => config.n_bands);
    flag!(frame_rate => config.frame_rate);
    flag!(lifter_a => config.lifter_a);
    flag!(lifter_b => config.lifter_b);
    flag!(envelope_floor => config.envelope_floor);
    flag!(band_width_bark => config.band_width_bark);
    flag!(parallelism => parallelism);
    if let Some(f) = &args.feature {
        feature = f.parse()?;
    }
    if args.sample_rate.is_some() {
        sample_rate = args.sample_rate;
    }
    config.validate()?;
    Ok(Resolved {
        config,
        feature,
        parallelism,
        sample_rate,
    })
}

fn dump_filterbank(path: &PathBuf, r: &Resolved) -> Result<()> {
    let sr = r.sample_rate.unwrap_or(16_000);
    let bank = match r.feature {
        FeatureType::Fdlp => cochlear_filterbank(&r.config, sr)?,
        FeatureType::Mel => {
            let n_fft = ((0.02 * sr as f64).round() as usize).next_power_of_two();
            mel_triangular_filterbank(r.config.n_bands, n_fft / 2 + 1, sr)?
        }
    };
    bank.write_csv(BufWriter::new(File::create(path)?))
}

fn extract(args: ExtractArgs) -> Result<ExitCode> {
    let resolved = resolve(&args)?;
    if let Some(path) = &args.dump_filterbank {
        dump_filterbank(path, &resolved)?;
        if args.manifest.is_none() {
            return Ok(ExitCode::SUCCESS);
        }
    }
    let (Some(manifest_path), Some(out)) = (&args.manifest, &args.out) else {
        return Err(Error::InvalidConfig("extract needs --manifest and --out".into()));
    };
    let mut manifest = CorpusManifest::from_file(manifest_path)?;
    manifest.expected_sample_rate = resolved.sample_rate;
    let (archive, report) = run_extraction(&manifest, &resolved.config, resolved.feature, resolved.parallelism)?;
    write_archive(&archive, out)?;
    match &args.report {
        Some(path) => std::fs::write(path, format!("{report}\n"))?,
        None => eprintln!("{report}"),
    }
    Ok(if report.failed() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn dump(args: DumpArgs) -> Result<ExitCode> {
    let archive = read_archive(&args.archive)?;
    let matrix = archive
        .get(&args.id)
        .ok_or_else(|| Error::InvalidConfig(format!("no entry {:?} in {}", args.id, args.archive.display())))?;
    if let Some(path) = &args.csv {
        write_spectrogram_csv(matrix, BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &args.image {
        write_pgm(&matrix.to_array().mapv(f64::from), path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect(path: PathBuf) -> Result<ExitCode> {
    let archive = read_archive(&path)?;
    println!("version\t{}", archive.version);
    println!("fingerprint\t{:016x}", archive.fingerprint);
    println!("entries\t{}", archive.len());
    for (id, m) in archive.entries() {
        println!("{id}\t{}x{}\t{} Hz", m.rows, m.cols, m.frame_rate);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FDLP_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(args) => extract(*args),
        Command::Dump(args) => dump(args),
        Command::Inspect { archive } => inspect(archive),
    };
    result.unwrap_or_else(|e| {
        error!("{e}");
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
