//! `pitchtrack` subcommands: `track`, `synth`, `mix` and `eval`.
//!
//! Exit codes: 0 on success, 1 for usage and I/O errors, 2 when the voicing
//! classifier finds no voiced cluster.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pitchtrack_core::{
    load_audio, mix_at_snr, score, synthesize, write_wav, Error as CoreError, FramingConfig, OutputFormat,
    PipelineConfig, PitchTrack, PitchTracker, SynthSpec, Window,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;

/// Utterances shorter than this may not give the classifier enough frames.
const MIN_RELIABLE_DURATION_S: f64 = 1.0;

#[derive(Debug, Parser)]
#[command(
    name = "pitchtrack",
    version,
    about = "Voicing classification and pitch tracking for noisy speech"
)]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the pitch track of a WAV file.
    Track(TrackArgs),
    /// Render a harmonic test signal and its reference track.
    Synth(SynthArgs),
    /// Add noise to a clean signal at a given SNR.
    Mix(MixArgs),
    /// Score an estimated track against a reference track.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    Rectangular,
    Hann,
    Hamming,
}

/// Flags that override individual configuration keys.
#[derive(Debug, Default, Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub frame_length: Option<usize>,
    #[arg(long)]
    pub hop_length: Option<usize>,
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    #[arg(long)]
    pub silence_ratio: Option<f64>,
    #[arg(long)]
    pub preemph: Option<f64>,
    #[arg(long)]
    pub lowband_cutoff_hz: Option<f64>,
    #[arg(long)]
    pub alpha_r: Option<f64>,
    #[arg(long)]
    pub fft_size: Option<usize>,
    #[arg(long)]
    pub f_min: Option<f64>,
    #[arg(long)]
    pub f_max: Option<f64>,
    #[arg(long)]
    pub l_window: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma2_delta0: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        fn set<T: Copy>(dst: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *dst = v;
            }
        }
        set(&mut cfg.framing.frame_length, self.frame_length);
        set(&mut cfg.framing.hop_length, self.hop_length);
        set(
            &mut cfg.framing.window,
            self.window.map(|w| match w {
                WindowArg::Rectangular => Window::Rectangular,
                WindowArg::Hann => Window::Hann,
                WindowArg::Hamming => Window::Hamming,
            }),
        );
        set(&mut cfg.voicing.silence_ratio, self.silence_ratio);
        set(&mut cfg.voicing.preemph, self.preemph);
        set(&mut cfg.voicing.lowband_cutoff_hz, self.lowband_cutoff_hz);
        set(&mut cfg.acf.alpha_r, self.alpha_r);
        set(&mut cfg.acf.fft_size, self.fft_size);
        set(&mut cfg.acf.f_min, self.f_min);
        set(&mut cfg.acf.f_max, self.f_max);
        set(&mut cfg.kalman.l_window, self.l_window);
        set(&mut cfg.kalman.alpha, self.alpha);
        set(&mut cfg.kalman.sigma2_delta0, self.sigma2_delta0);
        set(
            &mut cfg.output.format,
            self.format.map(|f| match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            }),
        );
    }
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Input WAV file.
    pub input: PathBuf,
    /// Output track file; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Append classifier and Kalman diagnostics to the CSV output.
    #[arg(long)]
    pub debug: bool,
    /// Write the blended ACF of every analysed frame as `frame,lag,r_st` rows.
    #[arg(long, value_name = "FILE")]
    pub acf_dump: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// F0 breakpoints in Hz, spread evenly over the duration.
    #[arg(long, num_args = 1.., required = true)]
    pub f0: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 5)]
    pub harmonics: usize,
    #[arg(long, default_value_t = 6.0)]
    pub rolloff_db: f64,
    #[arg(long, default_value_t = 0.0)]
    pub vibrato_depth: f64,
    #[arg(long, default_value_t = 0.0)]
    pub vibrato_rate: f64,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    /// Output WAV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output reference track CSV.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub frame_length: Option<usize>,
    #[arg(long)]
    pub hop_length: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub noise: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub snr: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for the circular offset used when the noise must be looped.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Re-read the written file and print the measured clean/noise power ratio.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub est: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `stdout`, diagnostics to `stderr`.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_FAILURE;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", error_chain(&e));
            exit_code(&e)
        }
    }
}

/// Joins the error and its causes, skipping a cause that repeats the text
/// of the one before it.
fn error_chain(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if parts.last() != Some(&text) {
            parts.push(text);
        }
    }
    parts.join(": ")
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::DegenerateClassification { .. }) => EXIT_DEGENERATE,
        _ => EXIT_FAILURE,
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Track(args) => {
            let cfg = resolve_config(cli.config.as_deref(), &args.overrides)?;
            cmd_track(args, &cfg, stdout, stderr)
        }
        Command::Synth(args) => cmd_synth(args, cli.config.as_deref()),
        Command::Mix(args) => cmd_mix(args, stdout),
        Command::Eval(args) => cmd_eval(args, stdout, stderr),
    }
}

/// Defaults, then the config file, then command-line overrides.
pub fn resolve_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            PipelineConfig::from_toml_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn cmd_track(args: &TrackArgs, cfg: &PipelineConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let audio = load_audio(&args.input)?;
    if audio.duration_s() < MIN_RELIABLE_DURATION_S {
        writeln!(
            stderr,
            "warning: {} is {:.2} s long; classification may be unreliable below {MIN_RELIABLE_DURATION_S} s",
            args.input.display(),
            audio.duration_s()
        )?;
    }
    let analysis = PitchTracker::new(*cfg).analyze(&audio)?;
    log::info!(
        "{}: {} frames, {} voiced",
        args.input.display(),
        analysis.track.len(),
        analysis.track.voiced_count()
    );

    let write_track = |w: &mut dyn Write| -> Result<()> {
        match cfg.output.format {
            OutputFormat::Csv => analysis.track.write_csv(w, args.debug)?,
            OutputFormat::Json => analysis.track.write_json(w)?,
        }
        Ok(())
    };
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_track(&mut w)?;
            w.flush()?;
        }
        None => write_track(stdout)?,
    }

    if let Some(path) = &args.acf_dump {
        let mut w = create(path)?;
        writeln!(w, "frame,lag,r_st")?;
        for (k, entry) in analysis.acf.iter().enumerate() {
            if let Some((values, _)) = entry {
                for (lag, v) in analysis.bounds.lags().zip(values) {
                    writeln!(w, "{k},{lag},{v}")?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs, config: Option<&Path>) -> Result<()> {
    let mut framing = match config {
        Some(p) => resolve_config(Some(p), &ConfigOverrides::default())?.framing,
        None => FramingConfig::default(),
    };
    if let Some(n) = args.frame_length {
        framing.frame_length = n;
    }
    if let Some(n) = args.hop_length {
        framing.hop_length = n;
    }
    let spec = SynthSpec {
        f0_contour: args.f0.clone(),
        num_harmonics: args.harmonics,
        harmonic_rolloff_db: args.rolloff_db,
        duration_s: args.duration,
        vibrato_depth_hz: args.vibrato_depth,
        vibrato_rate_hz: args.vibrato_rate,
    };
    let (audio, reference) = synthesize(&spec, args.sample_rate, &framing)?;
    write_wav(&audio, &args.out)?;
    let mut w = create(&args.reference)?;
    reference.write_csv(&mut w, false)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_mix(args: &MixArgs, stdout: &mut dyn Write) -> Result<()> {
    let clean = load_audio(&args.clean)?;
    let noise = load_audio(&args.noise)?;
    let mix = mix_at_snr(&clean, &noise, args.snr, args.seed)?;
    write_wav(&mix.buffer, &args.out)?;
    if args.verify {
        let written = load_audio(&args.out)?;
        let residual: Vec<f64> = written
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(m, c)| m - c)
            .collect();
        let p_noise = residual.iter().map(|v| v * v).sum::<f64>() / residual.len() as f64;
        let ratio = clean.power() / p_noise;
        let report = serde_json::json!({
            "gain": mix.gain,
            "power_ratio": ratio,
            "snr_db": 10.0 * ratio.log10(),
        });
        writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let read = |p: &Path| -> Result<PitchTrack> {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        PitchTrack::read_csv(f).with_context(|| format!("reading {}", p.display()))
    };
    let reference = read(&args.reference)?;
    let est = read(&args.est)?;
    if reference.len() != est.len() {
        bail!(
            "frame count mismatch: reference has {} frames, estimate has {}",
            reference.len(),
            est.len()
        );
    }
    let report = score(&reference, &est)?;
    if report.frames_scored == 0 {
        writeln!(
            stderr,
            "warning: no frame is voiced in both tracks; metrics are undefined"
        )?;
    }
    writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}
