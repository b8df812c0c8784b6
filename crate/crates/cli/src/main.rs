use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use bowtrace::compare::{compare, CompareOptions, PairingMode};
use bowtrace::features::{
    build_feature_track, build_feature_track_with_pitch, parse_pitch_csv, write_feature_csv, AnalysisConfig, Channel,
    FeatureTrack,
};
use bowtrace::ingest::{decode_wav, load_bundle, parse_motion_csv, parse_score, save_bundle, Recording, AUDIO_OFFSET_KEY};
use bowtrace::live::{self, replay_to_server, Server, ServerConfig, SessionConfig};
use bowtrace::scene::{build_scene, export_scene, EncodingConfig, LabelChannel, Layout, SceneOptions};
use bowtrace::{Error, Vec3};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bow motion and audio analysis for tracked cello bowing.
#[derive(Debug, Parser)]
#[command(name = "bowtrace", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pack raw motion, audio and score files into a recording bundle.
    Ingest(IngestArgs),
    /// Write the per-frame feature table of a bundle as CSV.
    Features(FeaturesArgs),
    /// Compare two bundles and write a JSON report.
    Compare(CompareArgs),
    /// Encode one or more bundles as a 3D scene file.
    Scene(SceneArgs),
    /// Run the live stream server and serve scenes and viewer assets over HTTP.
    Serve(ServeArgs),
    /// Stream a bundle's motion as tracker samples.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Motion CSV with header t_ms,px,py,pz,qw,qx,qy,qz.
    #[arg(long)]
    motion: PathBuf,
    /// Mono or stereo WAV recorded alongside the motion.
    #[arg(long)]
    audio: Option<PathBuf>,
    /// Score JSON (a list of notes).
    #[arg(long)]
    score: Option<PathBuf>,
    /// Start of the audio and score clocks relative to the first motion sample, in ms.
    #[arg(long, allow_negative_numbers = true)]
    audio_offset_ms: Option<f64>,
    /// Recording id (default: the output directory name).
    #[arg(long)]
    id: Option<String>,
    /// Bundle directory to create or overwrite.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    /// Bundle directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// External pitch CSV (t_ms,pitch_hz,confidence) used instead of detection.
    #[arg(long)]
    pitch_csv: Option<PathBuf>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    Dtw,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Frame pairing: nearest timestamp or dynamic time warping.
    #[arg(long, value_enum, default_value = "uniform")]
    mode: ModeArg,
    /// Largest timestamp difference for uniform pairing, in ms.
    #[arg(long, default_value_t = 10.0)]
    tol_ms: f64,
    /// Channel warped in dtw mode.
    #[arg(long, default_value = "speed")]
    channel: Channel,
    /// Output report (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LabelArg {
    Played,
    Expected,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayoutArg {
    Superimpose,
    Juxtapose,
}

#[derive(Debug, Args)]
struct EncodingArgs {
    /// Channel mapped to color.
    #[arg(long, default_value = "speed")]
    color: Channel,
    /// Channel mapped to thickness.
    #[arg(long, default_value = "speed")]
    thickness: Channel,
    /// Fly-away speed in m/s; 0 draws the path where it was recorded.
    #[arg(long, default_value_t = 0.25)]
    fly_speed: f64,
    /// Fly-away direction as x,y,z (default: normal of the bowing plane).
    #[arg(long, value_parser = parse_vec3, allow_negative_numbers = true)]
    fly_dir: Option<Vec3>,
    /// Thinnest stroke width in m.
    #[arg(long, default_value_t = 0.002)]
    min_thickness: f64,
    /// Thickest stroke width in m.
    #[arg(long, default_value_t = 0.012)]
    max_thickness: f64,
    /// Lower normalization percentile.
    #[arg(long, default_value_t = 5.0)]
    lo_pct: f64,
    /// Upper normalization percentile.
    #[arg(long, default_value_t = 95.0)]
    hi_pct: f64,
    /// Note labels from the played pitch, the score, or none.
    #[arg(long, value_enum, default_value = "played")]
    labels: LabelArg,
    /// Orientation tick every N frames (0: none).
    #[arg(long, default_value_t = 0)]
    glyph_stride: usize,
}

impl EncodingArgs {
    fn config(&self) -> EncodingConfig {
        EncodingConfig {
            color_source: self.color,
            thickness_source: self.thickness,
            fly_dir: self.fly_dir,
            fly_speed_mps: self.fly_speed,
            thickness_range_m: (self.min_thickness, self.max_thickness),
            percentiles: (self.lo_pct, self.hi_pct),
            label_channel: match self.labels {
                LabelArg::Played => Some(LabelChannel::PlayedNote),
                LabelArg::Expected => Some(LabelChannel::ExpectedNote),
                LabelArg::None => None,
            },
            orientation_glyph_stride: self.glyph_stride,
        }
    }
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Bundle directories; repeat for several paths.
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[arg(long, value_enum, default_value = "superimpose")]
    layout: LayoutArg,
    /// Offset between juxtaposed paths as x,y,z in m.
    #[arg(long, value_parser = parse_vec3, allow_negative_numbers = true)]
    offset: Option<Vec3>,
    /// Connect the first two paths every N paired frames (0: none).
    #[arg(long, default_value_t = 0)]
    rubber_bands: usize,
    /// Pairing window for rubber bands, in ms.
    #[arg(long, default_value_t = 10.0)]
    tol_ms: f64,
    /// Playback time at which the scene is drawn, in ms (default: end of the longest recording).
    #[arg(long)]
    t_now: Option<f64>,
    /// Output scene JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Stream port for trackers and viewers.
    #[arg(long, env = live::PORT_ENV, default_value_t = live::DEFAULT_PORT)]
    port: u16,
    /// HTTP port (default: stream port + 1).
    #[arg(long)]
    http_port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Directory of static viewer assets.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Scene file served at /scene.json.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Bundle that live sessions are compared against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Seconds of live motion retained per session.
    #[arg(long, default_value_t = live::session::DEFAULT_WINDOW_S)]
    window_s: f64,
    /// Connector every N paired live frames (0: none).
    #[arg(long, default_value_t = 10)]
    rubber_bands: usize,
    #[command(flatten)]
    encoding: EncodingArgs,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Bundle directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Playback speed multiplier.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Server address host:port (default: 127.0.0.1 and the configured port).
    #[arg(long)]
    connect: Option<String>,
    /// Port used when --connect is not given.
    #[arg(long, env = live::PORT_ENV, default_value_t = live::DEFAULT_PORT)]
    port: u16,
    /// Session id (default: the recording id).
    #[arg(long)]
    session: Option<String>,
    /// Print the sample stream to stdout instead of connecting.
    #[arg(long, conflicts_with = "connect")]
    stdout: bool,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        &[x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            e => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn require_exists(paths: &[&Path]) -> Outcome {
    for p in paths {
        if !p.exists() {
            return Err(Failure::Data(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Failure::Data(format!("stdout: {e}")))
        }
    }
}

fn features_of(bundle: &Path) -> Result<FeatureTrack, Failure> {
    let rec = load_bundle(bundle)?;
    Ok(build_feature_track(&rec, &AnalysisConfig::default())?)
}

fn ingest(a: IngestArgs) -> Outcome {
    let inputs: Vec<&Path> = [Some(a.motion.as_path()), a.audio.as_deref(), a.score.as_deref()].into_iter().flatten().collect();
    require_exists(&inputs)?;
    let id = a
        .id
        .clone()
        .or_else(|| a.out.file_name().map(|n| n.to_string_lossy().into_owned()))
        .ok_or_else(|| Failure::Usage("cannot derive an id from --out; pass --id".into()))?;
    let mut rec = Recording::new(id, parse_motion_csv(&read(&a.motion)?)?);
    if let Some(p) = &a.audio {
        rec.audio = Some(decode_wav(&read(p)?)?);
    }
    if let Some(p) = &a.score {
        rec.score = Some(parse_score(&read(p)?)?);
    }
    if let Some(off) = a.audio_offset_ms {
        rec.meta.insert(AUDIO_OFFSET_KEY.into(), off.to_string());
    }
    rec.check()?;
    let report = rec.motion.validate();
    for v in &report.violations {
        log::warn!("motion: {v}");
    }
    save_bundle(&rec, &a.out)?;
    Ok(())
}

fn features(a: FeaturesArgs) -> Outcome {
    let inputs: Vec<&Path> = [Some(a.input.as_path()), a.pitch_csv.as_deref()].into_iter().flatten().collect();
    require_exists(&inputs)?;
    let rec = load_bundle(&a.input)?;
    let pitch = a.pitch_csv.as_deref().map(|p| read(p).and_then(|b| Ok(parse_pitch_csv(&b)?))).transpose()?;
    let track = build_feature_track_with_pitch(&rec, &AnalysisConfig::default(), pitch.as_deref())?;
    write_output(a.out.as_deref(), write_feature_csv(&track).as_bytes())
}

fn compare_cmd(a: CompareArgs) -> Outcome {
    require_exists(&[&a.a, &a.b])?;
    let mode = match a.mode {
        ModeArg::Uniform => PairingMode::UniformTime,
        ModeArg::Dtw => PairingMode::Dtw,
    };
    let opts = CompareOptions { tol_ms: a.tol_ms, channel: a.channel };
    let report = compare(&features_of(&a.a)?, &features_of(&a.b)?, mode, &opts)?;
    let mut json = report.to_json();
    json.push('\n');
    write_output(a.out.as_deref(), json.as_bytes())
}

fn scene(a: SceneArgs) -> Outcome {
    let inputs: Vec<&Path> = a.inputs.iter().map(PathBuf::as_path).collect();
    require_exists(&inputs)?;
    let cfg = a.encoding.config();
    cfg.check()?;
    let tracks = a.inputs.iter().map(|p| features_of(p)).collect::<Result<Vec<_>, _>>()?;
    let opts = SceneOptions {
        layout: match a.layout {
            LayoutArg::Superimpose => Layout::Superimpose,
            LayoutArg::Juxtapose => Layout::Juxtapose,
        },
        offset: a.offset,
        rubber_band_stride: a.rubber_bands,
        pairing_tol_ms: a.tol_ms,
        t_now: a.t_now,
    };
    let scene = build_scene(&tracks, &cfg, &opts)?;
    write_output(Some(&a.out), &export_scene(&scene))
}

fn serve(a: ServeArgs) -> Outcome {
    let inputs: Vec<&Path> = [a.assets.as_deref(), a.scene.as_deref(), a.reference.as_deref()].into_iter().flatten().collect();
    require_exists(&inputs)?;
    let reference = a.reference.as_deref().map(features_of).transpose()?.map(Arc::new);
    let http_port = match a.http_port {
        Some(p) => p,
        None => a.port.checked_add(1).ok_or_else(|| Failure::Usage("no port above the stream port; pass --http-port".into()))?,
    };
    let cfg = ServerConfig {
        stream_addr: SocketAddr::new(a.bind, a.port),
        http_addr: Some(SocketAddr::new(a.bind, http_port)),
        assets_dir: a.assets,
        scene_file: a.scene,
        session: SessionConfig {
            window_s: a.window_s,
            encoding: a.encoding.config(),
            reference,
            rubber_band_stride: a.rubber_bands,
            ..SessionConfig::default()
        },
    };
    let server = Server::start(cfg)?;
    eprintln!(
        "streaming on {}, http on {}",
        server.stream_addr(),
        server.http_addr().map_or("-".into(), |a| a.to_string())
    );
    server.wait();
    Ok(())
}

fn replay(a: ReplayArgs) -> Outcome {
    require_exists(&[&a.input])?;
    let rec = load_bundle(&a.input)?;
    let items = live::replay_schedule(&rec.motion, a.speed)?;
    if a.stdout {
        let mut out = std::io::stdout().lock();
        live::play(&items, &mut out).map_err(|e| Failure::Data(format!("stdout: {e}")))?;
        return Ok(());
    }
    let addr = a.connect.unwrap_or_else(|| format!("127.0.0.1:{}", a.port));
    let session = a.session.unwrap_or(rec.id);
    let outcome = replay_to_server(&addr, &session, &items)?;
    for e in &outcome.errors {
        log::warn!("server rejected a sample: {e}");
    }
    eprintln!("replayed {} samples in {:.2} s", items.len(), outcome.elapsed.as_secs_f64());
    if outcome.errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Data(format!("{} sample(s) rejected", outcome.errors.len())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Features(a) => features(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Scene(a) => scene(a),
        Command::Serve(a) => serve(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
