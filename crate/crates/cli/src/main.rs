//! Command-line front end: deterministic, file-based access to signatures,
//! triangle groups, length spectra, trace-formula reports, wave-trace
//! synthesis/inversion, and cone-order decomposition.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use orbispec::enumeration::{EnumerationOptions, GroupPresentation};
use orbispec::error::Error;
use orbispec::io::{
    fmt_g15, read_sampled_csv, read_trace, write_spectrum_csv, write_spectrum_jsonl, write_trace,
    StructureDoc,
};
use orbispec::orbifold::{HyperbolicStructure, OrbifoldSignature};
use orbispec::psi::{decompose_cone_sum, DecomposeMode};
use orbispec::quad::QuadSpec;
use orbispec::spectrum::length_spectrum;
use orbispec::testfn::{gaussian_heat_pair, FOURIER_CONVENTION};
use orbispec::trace::{geometric_side, GeometricInputs};
use orbispec::wave::{full_inverse, synthesize_mollified, TimeGrid, WaveTraceModel};

#[derive(Parser)]
#[command(
    name = "orbispec",
    about = "Geometric and spectral data of compact hyperbolic orbisurfaces",
    version
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Euler characteristic, area, and hyperbolicity of a signature.
    Signature {
        /// Genus of the underlying surface.
        #[arg(short, long)]
        genus: u32,
        /// Comma-separated cone orders, e.g. 2,3,7.
        #[arg(short = 'm', long, value_delimiter = ',', num_args = 0..)]
        cone_orders: Vec<u32>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generator matrices of the (p, q, r) triangle group.
    Triangle {
        p: u32,
        q: u32,
        r: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Oriented primitive length spectrum as JSON lines.
    Lengths {
        #[command(flatten)]
        group: GroupArgs,
        /// Largest geodesic length reported.
        #[arg(long, default_value_t = 4.0)]
        max_length: f64,
        /// Word length of the enumeration.
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Output format: jsonl or csv.
        #[arg(long, default_value = "jsonl")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Trace-formula report for a Gaussian heat test function.
    TraceEval {
        #[command(flatten)]
        group: GroupArgs,
        /// Heat time of the Gaussian pair.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 4.0)]
        max_length: f64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Iterates per primitive class.
        #[arg(long, default_value_t = 12)]
        k_max: u32,
        /// Quadrature tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Wave-trace synthesis and inversion.
    #[command(subcommand)]
    Wave(WaveCommand),
    /// Cone-point decompositions.
    #[command(subcommand)]
    Cones(ConesCommand),
}

#[derive(Subcommand)]
enum WaveCommand {
    /// Synthesize the mollified wave trace of a structure.
    Synth {
        #[command(flatten)]
        group: GroupArgs,
        /// Mollifier width.
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        /// Grid step (at most sigma / 4).
        #[arg(long)]
        grid_step: Option<f64>,
        /// Grid endpoint.
        #[arg(long, default_value_t = 20.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 6.0)]
        max_length: f64,
        #[arg(long, default_value_t = 14)]
        depth: usize,
        /// Basename of the <base>.csv and <base>.json outputs.
        #[arg(long)]
        output: PathBuf,
    },
    /// Recover lengths, cone orders, and genus from a stored trace.
    Invert {
        /// Trace samples CSV written by `wave synth`.
        #[arg(long)]
        trace: PathBuf,
        /// Sidecar JSON written by `wave synth`.
        #[arg(long)]
        sidecar: PathBuf,
        /// Largest cone order tried.
        #[arg(long, default_value_t = 12)]
        max_order: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConesCommand {
    /// Decompose sampled r-side data into cone orders.
    Decompose {
        /// Two-column CSV with header "r,value".
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_order: u32,
        /// exact or noisy.
        #[arg(long, default_value = "noisy")]
        mode: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Group selection shared by enumerating subcommands: a triangle preset or a
/// structure file with explicit generators.
#[derive(Args)]
struct GroupArgs {
    /// Triangle group preset p,q,r (e.g. 2,3,7).
    #[arg(long, value_delimiter = ',', conflicts_with = "generators")]
    preset: Option<Vec<u32>>,
    /// Structure JSON with genus, cone orders, and generator matrices.
    #[arg(long)]
    generators: Option<PathBuf>,
}

impl GroupArgs {
    fn structure(&self) -> Result<HyperbolicStructure, Error> {
        match (&self.preset, &self.generators) {
            (Some(pqr), None) => {
                if pqr.len() != 3 {
                    return Err(Error::InvalidInput(format!(
                        "--preset wants three orders p,q,r; got {pqr:?}"
                    )));
                }
                HyperbolicStructure::triangle(pqr[0], pqr[1], pqr[2])
            }
            (None, Some(path)) => {
                let doc = StructureDoc::parse(&fs::read_to_string(path)?)?;
                let structure = doc.to_structure()?;
                if structure.generators.is_none() {
                    return Err(Error::InvalidInput(format!(
                        "{} carries no generator matrices",
                        path.display()
                    )));
                }
                Ok(structure)
            }
            _ => Err(Error::InvalidInput(
                "exactly one of --preset and --generators is required".into(),
            )),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // A second initialization in one process is harmless for the CLI.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let message = serde_json::json!({
                "error": error.code(),
                "message": error.to_string(),
            });
            eprintln!("{message}");
            ExitCode::FAILURE
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Signature {
            genus,
            cone_orders,
            output,
        } => {
            let signature = OrbifoldSignature::new(genus, cone_orders)?;
            let chi = signature.euler_characteristic();
            let mut fields = vec![
                format!("\"genus\":{}", signature.genus),
                format!(
                    "\"cone_orders\":[{}]",
                    signature
                        .cone_orders
                        .iter()
                        .map(u32::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                format!("\"chi\":\"{chi}\""),
                format!("\"hyperbolic\":{}", signature.is_hyperbolic()),
            ];
            if signature.is_hyperbolic() {
                fields.push(format!("\"area\":{}", fmt_g15(signature.area_gauss_bonnet()?)));
            }
            emit(output.as_deref(), &format!("{{{}}}\n", fields.join(",")))
        }
        Command::Triangle { p, q, r, output } => {
            let structure = HyperbolicStructure::triangle(p, q, r)?;
            let generators = structure.generators.as_ref().expect("triangle generators");
            let matrices: Vec<String> = generators
                .iter()
                .map(|g| {
                    format!(
                        "{{\"a\":{},\"b\":{},\"c\":{},\"d\":{}}}",
                        fmt_g15(g.a),
                        fmt_g15(g.b),
                        fmt_g15(g.c),
                        fmt_g15(g.d)
                    )
                })
                .collect();
            let text = format!(
                "{{\"genus\":0,\"cone_orders\":[{p},{q},{r}],\"generators\":[{}]}}\n",
                matrices.join(",")
            );
            emit(output.as_deref(), &text)
        }
        Command::Lengths {
            group,
            max_length,
            depth,
            format,
            output,
        } => {
            let structure = group.structure()?;
            let presentation =
                GroupPresentation::new(structure.generators.as_ref().expect("checked"))?;
            let spectrum = length_spectrum(
                &presentation,
                max_length,
                depth,
                &EnumerationOptions::default(),
            )?;
            let mut buffer = Vec::new();
            match format.as_str() {
                "jsonl" => write_spectrum_jsonl(&spectrum, &mut buffer)?,
                "csv" => write_spectrum_csv(&spectrum, &mut buffer)?,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown format {other:?}; use jsonl or csv"
                    )))
                }
            }
            emit(output.as_deref(), std::str::from_utf8(&buffer).expect("utf8"))
        }
        Command::TraceEval {
            group,
            t,
            max_length,
            depth,
            k_max,
            tol,
            output,
        } => {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidInput(format!("heat time {t} must be positive")));
            }
            let structure = group.structure()?;
            let inputs = GeometricInputs::from_structure(
                &structure,
                max_length,
                depth,
                &EnumerationOptions::default(),
            )?;
            let pair = gaussian_heat_pair(t);
            let quad = QuadSpec::with_tol(tol);
            let report = geometric_side(&inputs, &pair, k_max, &quad)?;
            let text = format!(
                concat!(
                    "{{\"identity\":{},\"hyperbolic\":{},\"elliptic\":{},\"total\":{},",
                    "\"error_budget\":{{\"quadrature\":{},\"k_tail\":{},\"length_tail\":{},\"total\":{}}},",
                    "\"completeness_bound\":{},\"convention\":\"{}\"}}\n"
                ),
                fmt_g15(report.identity),
                fmt_g15(report.hyperbolic),
                fmt_g15(report.elliptic),
                fmt_g15(report.total),
                fmt_g15(report.error_budget.quadrature),
                fmt_g15(report.error_budget.k_tail),
                fmt_g15(report.error_budget.length_tail),
                fmt_g15(report.error_budget.total()),
                fmt_g15(inputs.spectrum.completeness_bound),
                FOURIER_CONVENTION
            );
            emit(output.as_deref(), &text)
        }
        Command::Wave(WaveCommand::Synth {
            group,
            sigma,
            grid_step,
            grid_max,
            max_length,
            depth,
            output,
        }) => {
            let structure = group.structure()?;
            let inputs = GeometricInputs::from_structure(
                &structure,
                max_length,
                depth,
                &EnumerationOptions::default(),
            )?;
            let step = grid_step.unwrap_or(sigma / 4.0);
            let grid = TimeGrid::from_step(step, grid_max);
            let model = WaveTraceModel::from_spectrum(
                &inputs.spectrum,
                &inputs.cone_orders,
                inputs.area,
                grid.end(),
            );
            let trace = synthesize_mollified(&model, sigma, &grid)?;
            let csv_path = output.with_extension("csv");
            let sidecar_path = output.with_extension("json");
            let mut csv = Vec::new();
            let mut sidecar = Vec::new();
            write_trace(&trace, inputs.area, &mut csv, &mut sidecar)?;
            fs::write(&csv_path, csv)?;
            fs::write(&sidecar_path, sidecar)?;
            println!("wrote {} and {}", csv_path.display(), sidecar_path.display());
            Ok(())
        }
        Command::Wave(WaveCommand::Invert {
            trace,
            sidecar,
            max_order,
            output,
        }) => {
            let csv = fs::File::open(&trace)?;
            let sidecar_text = fs::read_to_string(&sidecar)?;
            let (trace, area) = read_trace(BufReader::new(csv), &sidecar_text)?;
            let result = full_inverse(&trace, area, max_order)?;
            let lengths: Vec<String> = result
                .spectrum
                .entries
                .iter()
                .map(|e| {
                    format!(
                        "{{\"length\":{},\"multiplicity\":{}}}",
                        fmt_g15(e.length),
                        e.multiplicity
                    )
                })
                .collect();
            let text = format!(
                "{{\"lengths\":[{}],\"cone_orders\":[{}],\"genus\":{}}}\n",
                lengths.join(","),
                result
                    .cone_orders
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                result.genus
            );
            emit(output.as_deref(), &text)
        }
        Command::Cones(ConesCommand::Decompose {
            input,
            max_order,
            mode,
            output,
        }) => {
            let samples = read_sampled_csv(BufReader::new(fs::File::open(&input)?))?;
            let mode = match mode.as_str() {
                "exact" => DecomposeMode::Exact,
                "noisy" => DecomposeMode::Noisy,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown mode {other:?}; use exact or noisy"
                    )))
                }
            };
            let orders = decompose_cone_sum(&samples, max_order, mode)?;
            let text = format!(
                "{{\"orders\":[{}]}}\n",
                orders
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            );
            emit(output.as_deref(), &text)
        }
    }
}
