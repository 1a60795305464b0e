use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use scatterkit::classify::{classify_ova, default_lambda_grid, Dataset, Penalty};
use scatterkit::deform::{stability_sweep, warp, warp_sweep, FourierModulus, Identity, Representation, Scattering, WarpField};
use scatterkit::inverse::{reconstruct, ReconstructionConfig};
use scatterkit::io::{read_signal, write_pgm, write_sig1};
use scatterkit::moments::{estimate_moments, variance_decay, ProcessKind, ProcessModel};
use scatterkit::signal::{best_alignment, shift};
use scatterkit::{build_default, scatter, synth, Error, FilterBank, Oversampling, Rho, ScatteringConfig, ScatteringOutput, Shape, Signal};

#[derive(Parser, Debug)]
#[command(name = "scatterkit", version, about = "Wavelet scattering toolkit", arg_required_else_help = true)]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "SCATTERKIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
enum Command {
    /// Scattering coefficients of a signal.
    Scatter(ScatterArgs),
    /// Recover a signal from saved scattering coefficients.
    Reconstruct(ReconstructArgs),
    /// Stability of a representation under random smooth warps.
    Stability(StabilityArgs),
    /// Scattering moments of a stationary process model.
    Moments(MomentsArgs),
    /// One-versus-all linear classification of feature tables.
    Classify(ClassifyArgs),
    /// Build a filter bank, report its frame bounds, optionally export it.
    Bank(BankArgs),
    /// Synthetic digit images as a raw or scattering feature table.
    Digits(DigitsArgs),
}

#[derive(Args, Debug, Serialize)]
struct NetworkArgs {
    /// Number of dyadic scales J.
    #[arg(long, default_value_t = 3)]
    scales: u32,
    /// Orientations (2D) or bands per octave (1D).
    #[arg(long, default_value_t = 4)]
    bands: u32,
    /// Maximal path order M.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// modulus or rectifier.
    #[arg(long, default_value = "modulus")]
    #[serde(serialize_with = "display")]
    rho: Rho,
    /// Octaves of oversampling over the critical stride, or `full` to never subsample.
    #[arg(long, default_value = "1")]
    #[serde(serialize_with = "display")]
    oversampling: Oversampling,
}

impl NetworkArgs {
    fn config(&self) -> ScatteringConfig {
        ScatteringConfig { max_order: self.order, rho: self.rho, oversampling: self.oversampling }
    }

    fn bank(&self, shape: Shape) -> scatterkit::Result<FilterBank> {
        build_default(shape, self.scales, self.bands)
    }
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Args, Debug, Serialize)]
struct ScatterArgs {
    /// Input signal (.sig or .pgm).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    network: NetworkArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReconstructArgs {
    /// Directory written by `scatter`.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Reconstructed signal (.pgm for 2D images, otherwise SIG1).
    #[arg(long)]
    out: PathBuf,
    /// Objective per accepted step.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Original signal; adds the aligned relative error to the report.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct StabilityArgs {
    #[arg(long)]
    input: PathBuf,
    /// scattering, fourier or identity.
    #[arg(long, default_value = "scattering")]
    rep: String,
    #[command(flatten)]
    #[serde(flatten)]
    network: NetworkArgs,
    #[arg(long, default_value_t = 20)]
    warps: usize,
    /// Largest Jacobian norm of the sweep; the smallest is a tenth of it.
    #[arg(long, default_value_t = 0.2)]
    amplitude: f64,
    /// Highest warp frequency in cycles per grid length.
    #[arg(long, default_value_t = 4.0)]
    max_cycles: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MomentsArgs {
    /// white[:sigma], ar1:a[:sigma], spikes:p[:amplitude], constant:c,
    /// shifted:IMAGE or phase:IMAGE.
    #[arg(long)]
    model: String,
    /// Grid side length.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// 1 or 2.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[command(flatten)]
    #[serde(flatten)]
    network: NetworkArgs,
    #[arg(long, default_value_t = 32)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-path moments.
    #[arg(long)]
    out: PathBuf,
    /// Also write sigma_J^2 for J = 1..=scales.
    #[arg(long)]
    decay: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Penalty exponent, 1 or 2.
    #[arg(long, default_value = "2")]
    #[serde(serialize_with = "display")]
    p: Penalty,
    /// `auto` selects on a held-out 20% of the training rows.
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model JSON and report CSV.
    #[arg(long, num_args = 2, value_names = ["MODEL", "REPORT"])]
    out: Vec<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BankArgs {
    /// Fail unless the frame bounds pass (the build itself enforces A >= 0.5).
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 4)]
    scales: u32,
    #[arg(long, default_value_t = 4)]
    bands: u32,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Export directory.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DigitsArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// raw or scattering.
    #[arg(long, default_value = "scattering")]
    features: String,
    #[command(flatten)]
    #[serde(flatten)]
    network: NetworkArgs,
    /// Jacobian norm of a random smooth warp applied to every image (0: none).
    #[arg(long, default_value_t = 0.0)]
    warp: f64,
    /// Feature CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write every image as PGM into this directory.
    #[arg(long)]
    images: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Io(_) | Error::Format(_) => 3,
        _ => 4,
    }
}

fn shape_of(size: usize, dims: usize) -> scatterkit::Result<Shape> {
    match dims {
        1 => Ok(Shape::D1(size)),
        2 => Ok(Shape::D2(size, size)),
        _ => Err(Error::InvalidArgument(format!("--dims must be 1 or 2, got {dims}"))),
    }
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> scatterkit::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    w.write_record(header).map_err(Error::from)?;
    for r in rows {
        w.write_record(r).map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn write_signal(path: &Path, x: &Signal) -> scatterkit::Result<()> {
    if path.extension().and_then(|e| e.to_str()) == Some("pgm") {
        write_pgm(path, x)
    } else {
        write_sig1(path, x)
    }
}

/// Manifest path: `run.json` inside an output directory, else `<file>.run.json`.
fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("run.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".run.json");
        out.with_file_name(name)
    }
}

fn write_manifest(out: &Path, command: &Command, outputs: &[&Path], summary: serde_json::Value) -> scatterkit::Result<()> {
    let manifest = json!({
        "tool": "scatterkit",
        "version": env!("CARGO_PKG_VERSION"),
        "config": command,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "summary": summary,
    });
    fs::write(manifest_path(out), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn run_scatter(a: &ScatterArgs) -> scatterkit::Result<serde_json::Value> {
    let x = read_signal(&a.input)?;
    let bank = a.network.bank(x.shape())?;
    let out = scatter(&x, &bank, a.network.config())?;
    out.save(&a.out)?;
    println!("{} paths, energy by order {:?}", out.len(), out.order_energies());
    Ok(json!({ "paths": out.len(), "order_energies": out.order_energies(), "frame_lower": bank.frame_lower() }))
}

fn run_reconstruct(a: &ReconstructArgs) -> scatterkit::Result<serde_json::Value> {
    let target = ScatteringOutput::load(&a.target)?;
    let bank = build_default(target.shape, target.scales, target.bands)?;
    let config = ReconstructionConfig { max_iter: a.max_iter, seed: a.seed, ..Default::default() };
    let (x, run) = reconstruct(&target, &bank, &config)?;
    write_signal(&a.out, &x)?;
    if let Some(h) = &a.history {
        let rows: Vec<Vec<String>> = run
            .history
            .iter()
            .enumerate()
            .map(|(i, l)| vec![i.to_string(), num(*l), i.checked_sub(1).map_or(String::new(), |s| num(run.steps[s]))])
            .collect();
        write_csv(h, &["iteration".into(), "objective".into(), "step".into()], &rows)?;
    }
    let mut summary = json!({
        "final_objective": run.final_objective(),
        "sigma_j": run.sigma_j,
        "iterations": run.steps.len(),
        "converged": run.converged,
        "stop": run.stop,
        "monotone": run.is_monotone(),
    });
    if let Some(r) = &a.reference {
        let reference = read_signal(r)?;
        let tau = best_alignment(&x, &reference)?;
        let aligned = shift(&x, &tau)?;
        let error = aligned.distance(&reference)? / reference.norm();
        summary["aligned_error"] = json!(error);
        summary["alignment"] = json!(tau);
        println!("aligned relative error {error:.4}");
    }
    println!(
        "objective {:.3e} after {} steps ({:?})",
        run.final_objective(),
        run.steps.len(),
        run.stop
    );
    Ok(summary)
}

fn run_stability(a: &StabilityArgs) -> scatterkit::Result<serde_json::Value> {
    let x = read_signal(&a.input)?;
    let bank = a.network.bank(x.shape())?;
    let scat = Scattering { bank: &bank, config: a.network.config() };
    let rep: &dyn Representation = match a.rep.as_str() {
        "scattering" => &scat,
        "fourier" => &FourierModulus,
        "identity" => &Identity,
        other => return Err(Error::InvalidArgument(format!("unknown representation {other:?}"))),
    };
    let warps = warp_sweep(x.shape(), a.warps, (a.amplitude / 10.0, a.amplitude), a.max_cycles, a.seed)?;
    let records = stability_sweep(rep, &x, &warps, bank.scales())?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| vec![r.warp_id.to_string(), num(r.sup_norm), num(r.jac_norm), num(r.metric), num(r.distance), num(r.ratio)])
        .collect();
    let header: Vec<String> = ["warp_id", "sup_norm", "jac_norm", "metric", "distance", "ratio"].map(String::from).to_vec();
    write_csv(&a.out, &header, &rows)?;
    let max_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    println!("{}: max stability ratio {max_ratio:.4e}", rep.name());
    Ok(json!({ "max_ratio": max_ratio }))
}

fn parse_model(text: &str, shape: Shape) -> scatterkit::Result<ProcessKind> {
    let image = |path: &str| -> scatterkit::Result<Signal> {
        let img = read_signal(Path::new(path))?;
        if img.shape() != shape {
            return Err(Error::InvalidArgument(format!("{path} is {:?}, the grid is {shape:?}", img.shape())));
        }
        Ok(img)
    };
    if let Some(p) = text.strip_prefix("shifted:") {
        return Ok(ProcessKind::ShiftedImage { image: image(p)? });
    }
    if let Some(p) = text.strip_prefix("phase:") {
        return Ok(ProcessKind::PhaseRandomized { image: image(p)? });
    }
    text.parse()
}

fn run_moments(a: &MomentsArgs) -> scatterkit::Result<serde_json::Value> {
    let shape = shape_of(a.size, a.dims)?;
    let model = ProcessModel::new(parse_model(&a.model, shape)?, shape, a.seed)?;
    let bank = a.network.bank(shape)?;
    let config = a.network.config();
    let est = estimate_moments(&model, &bank, config, a.realizations)?;
    let se = est.stderr();
    let rows: Vec<Vec<String>> = est
        .paths
        .iter()
        .enumerate()
        .map(|(i, p)| vec![p.label(), p.order().to_string(), num(est.mean[i]), num(est.variance[i]), num(se[i])])
        .collect();
    let header: Vec<String> = ["path", "order", "mean", "variance", "stderr"].map(String::from).to_vec();
    write_csv(&a.out, &header, &rows)?;
    let mut summary = json!({ "sigma2": est.sigma2, "sigma2_stderr": est.sigma2_stderr });
    if let Some(d) = &a.decay {
        let banks = (1..=a.network.scales).map(|j| build_default(shape, j, a.network.bands)).collect::<scatterkit::Result<Vec<_>>>()?;
        let table = variance_decay(&model, &banks, config, a.realizations)?;
        let rows: Vec<Vec<String>> = table.iter().map(|r| vec![r.scales.to_string(), num(r.sigma2), num(r.stderr)]).collect();
        write_csv(d, &["scales".into(), "sigma2".into(), "stderr".into()], &rows)?;
        summary["decay"] = json!(table);
    }
    println!("sigma_J^2 = {:.4e} +/- {:.1e}", est.sigma2, est.sigma2_stderr);
    Ok(summary)
}

fn run_classify(a: &ClassifyArgs) -> scatterkit::Result<serde_json::Value> {
    let train = Dataset::read_csv(&a.train)?;
    let test = Dataset::read_csv(&a.test)?;
    let grid = if a.lambda == "auto" {
        default_lambda_grid()
    } else {
        let l: f64 = a
            .lambda
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("--lambda must be a number or auto, got {:?}", a.lambda)))?;
        vec![l]
    };
    let (model, report) = classify_ova(&train, &test, a.p, &grid, a.seed)?;
    fs::write(&a.out[0], serde_json::to_string_pretty(&model)? + "\n")?;
    let mut rows = vec![
        vec!["lambda".to_string(), num(report.lambda)],
        vec!["train_accuracy".to_string(), num(report.train_accuracy)],
        vec!["test_accuracy".to_string(), num(report.test_accuracy)],
        vec!["train_rows".to_string(), report.train_rows.to_string()],
        vec!["test_rows".to_string(), report.test_rows.to_string()],
        vec!["features".to_string(), report.features.to_string()],
    ];
    rows.extend(report.validation.iter().map(|(l, acc)| vec![format!("validation@{l}"), num(*acc)]));
    write_csv(&a.out[1], &["metric".into(), "value".into()], &rows)?;
    println!("lambda {:e}: train {:.4}, test {:.4}", report.lambda, report.train_accuracy, report.test_accuracy);
    Ok(serde_json::to_value(&report)?)
}

fn run_bank(a: &BankArgs) -> scatterkit::Result<serde_json::Value> {
    let bank = build_default(shape_of(a.size, a.dims)?, a.scales, a.bands)?;
    let (lower, upper) = (bank.frame_lower(), bank.frame_upper());
    println!("frame bounds A = {lower:.6}, B = {upper:.6}");
    println!("worst frequency {:?}", bank.worst_frequency());
    if a.check && !(lower >= 0.5 && upper <= 1.0 + 1e-6) {
        return Err(Error::Frame { lower, minimum: 0.5, frequency: bank.worst_frequency().to_vec() });
    }
    if let Some(dir) = &a.export {
        bank.export(dir)?;
    }
    Ok(json!({ "frame_lower": lower, "frame_upper": upper, "worst_frequency": bank.worst_frequency() }))
}

fn run_digits(a: &DigitsArgs) -> scatterkit::Result<serde_json::Value> {
    use rand::SeedableRng;
    use rayon::prelude::*;
    let (images, labels) = synth::digits(a.count, a.seed);
    let shape = Shape::D2(32, 32);
    let images: Vec<Signal> = if a.warp > 0.0 {
        images
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
                rng.set_stream(i as u64);
                warp(x, &WarpField::random_smooth(shape, 1.0, a.warp, &mut rng)?)
            })
            .collect::<scatterkit::Result<_>>()?
    } else {
        images
    };
    let (columns, rows): (Vec<String>, Vec<Vec<f64>>) = match a.features.as_str() {
        "raw" => ((0..shape.len()).map(|i| format!("px{i}")).collect(), images.iter().map(Signal::real_parts).collect()),
        "scattering" => {
            let bank = a.network.bank(shape)?;
            let outs: Vec<ScatteringOutput> =
                images.par_iter().map(|x| scatter(x, &bank, a.network.config())).collect::<scatterkit::Result<_>>()?;
            let columns = outs[0].flatten().1.column_labels();
            (columns, outs.iter().map(|o| o.flatten().0).collect())
        }
        other => return Err(Error::InvalidArgument(format!("--features must be raw or scattering, got {other:?}"))),
    };
    let data = Dataset::new(columns, rows, labels.iter().map(|&l| l as f64).collect(), a.features.clone())?;
    data.write_csv(&a.out)?;
    if let Some(dir) = &a.images {
        fs::create_dir_all(dir)?;
        for (i, x) in images.iter().enumerate() {
            write_pgm(&dir.join(format!("digit_{i:05}.pgm")), x)?;
        }
    }
    println!("{} rows, {} features", data.len(), data.dims());
    Ok(json!({ "rows": data.len(), "features": data.dims() }))
}

fn run(cli: &Cli) -> scatterkit::Result<()> {
    let (out, extra, summary): (&Path, Vec<&Path>, serde_json::Value) = match &cli.command {
        Command::Scatter(a) => (&a.out, vec![], run_scatter(a)?),
        Command::Reconstruct(a) => (&a.out, a.history.iter().map(PathBuf::as_path).collect(), run_reconstruct(a)?),
        Command::Stability(a) => (&a.out, vec![], run_stability(a)?),
        Command::Moments(a) => (&a.out, a.decay.iter().map(PathBuf::as_path).collect(), run_moments(a)?),
        Command::Classify(a) => (&a.out[0], vec![a.out[1].as_path()], run_classify(a)?),
        Command::Bank(a) => {
            let summary = run_bank(a)?;
            match &a.export {
                Some(dir) => (dir.as_path(), vec![], summary),
                None => return Ok(()),
            }
        }
        Command::Digits(a) => (&a.out, vec![], run_digits(a)?),
    };
    let mut outputs = vec![out];
    outputs.extend(extra);
    write_manifest(out, &cli.command, &outputs, summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(4);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
