use clap::{Parser, ValueEnum};
use mipgemm::bench::{
    bert_encoder_shapes, load_conv_workload, results_to_csv, results_to_json, run_benchmark,
    BenchConfig, BenchResult, QuantizeMode, WorkloadCase, WorkloadKind,
};
use mipgemm::gemm::CacheModel;
use mipgemm::ukernel::all_backends;
use std::path::PathBuf;
use std::process::ExitCode;

/// Mixed-precision GEMM benchmark: blocked INT8/INT32 and FP32 matrix
/// multiplication on bit-exactly emulated SIMD and matrix-engine backends,
/// with transformer-encoder and convolution workloads.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Args {
    /// Backend to benchmark (see --list-backends), or `all`.
    #[arg(long)]
    backend: Option<String>,

    /// Workload: `bert` (one transformer-encoder layer), `conv:<path>`
    /// (convolution layer file) or `gemm` (single ad-hoc problem).
    #[arg(long)]
    workload: Option<String>,

    /// Rows of the ad-hoc GEMM (gemm workload only).
    #[arg(long)]
    m: Option<usize>,

    /// Columns of the ad-hoc GEMM (gemm workload only).
    #[arg(long)]
    n: Option<usize>,

    /// Depth of the ad-hoc GEMM (gemm workload only).
    #[arg(long)]
    k: Option<usize>,

    /// Sequence length for the bert workload (256, 512 or 1024).
    #[arg(long, default_value_t = 512)]
    tokens: usize,

    /// Batch size for the bert workload.
    #[arg(long, default_value_t = 1)]
    batch: usize,

    /// Worker threads inside each GEMM.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Repeat each case until this much wall time has elapsed (0 = one rep).
    #[arg(long, default_value_t = 1.0)]
    min_seconds: f64,

    #[arg(long, value_enum, default_value_t = QuantizeArg::Auto)]
    quantize: QuantizeArg,

    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Write results to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Print the registered backends and exit.
    #[arg(long)]
    list_backends: bool,

    /// Long measurement protocol: at least 50 s per case (overrides
    /// --min-seconds).
    #[arg(long)]
    full_protocol: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantizeArg {
    Off,
    Auto,
    Force,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> Result<(), String> {
    if args.list_backends {
        for backend in all_backends() {
            let s = backend.spec();
            println!(
                "{:<16} {:>2}x{:<3} micro-tile, group depth {:<3} input {:?}, accumulator {:?}",
                s.name, s.mr, s.nr, s.kr, s.in_elem, s.acc_elem
            );
        }
        return Ok(());
    }
    let backend = args.backend.as_deref().ok_or("--backend is required (or --list-backends)")?;
    let workload = args.workload.as_deref().ok_or("--workload is required")?;
    let cases = build_cases(&args, workload)?;

    let cfg = BenchConfig {
        workers: args.workers,
        min_seconds: if args.full_protocol { 50.0 } else { args.min_seconds },
        quantize: match args.quantize {
            QuantizeArg::Off => QuantizeMode::Off,
            QuantizeArg::Auto => QuantizeMode::Auto,
            QuantizeArg::Force => QuantizeMode::Force,
        },
        cache: cache_from_env()?,
    };
    if cfg.workers == 0 {
        return Err("--workers must be at least 1".into());
    }
    if cfg.min_seconds < 0.0 {
        return Err("--min-seconds must be non-negative".into());
    }

    let backends: Vec<String> = if backend == "all" {
        all_backends().iter().map(|b| b.name().to_string()).collect()
    } else {
        vec![backend.to_string()]
    };

    let mut results: Vec<BenchResult> = Vec::new();
    for name in &backends {
        eprintln!("benchmarking {} case(s) on {name}", cases.len());
        results.extend(run_benchmark(&cases, name, &cfg)?);
    }

    let rendered = match args.format {
        FormatArg::Csv => results_to_csv(&results),
        FormatArg::Json => {
            let mut text = results_to_json(&results);
            text.push('\n');
            text
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn build_cases(args: &Args, workload: &str) -> Result<Vec<WorkloadCase>, String> {
    match workload {
        "bert" => {
            if ![256, 512, 1024].contains(&args.tokens) {
                return Err(format!("--tokens must be 256, 512 or 1024 (got {})", args.tokens));
            }
            if args.batch == 0 {
                return Err("--batch must be at least 1".into());
            }
            Ok(bert_encoder_shapes(1024, 16, 4096, args.tokens, args.batch))
        }
        "gemm" => {
            let dim = |v: Option<usize>, flag: &str| -> Result<usize, String> {
                let v = v.ok_or(format!("the gemm workload requires {flag}"))?;
                if v == 0 {
                    return Err(format!("{flag} must be positive"));
                }
                Ok(v)
            };
            let (m, n, k) = (dim(args.m, "--m")?, dim(args.n, "--n")?, dim(args.k, "--k")?);
            // An ad-hoc problem has no activation/weight role, so leave it
            // eligible and let --quantize choose the domain.
            Ok(vec![WorkloadCase {
                label: "gemm".into(),
                kind: WorkloadKind::Gemm { m, n, k },
                instances: 1,
                quantize: true,
            }])
        }
        other => match other.strip_prefix("conv:") {
            Some(path) => load_conv_workload(std::path::Path::new(path)),
            None => Err(format!(
                "unknown workload `{other}`; expected `bert`, `conv:<path>` or `gemm`"
            )),
        },
    }
}

fn cache_from_env() -> Result<CacheModel, String> {
    let read = |name: &str| -> Result<Option<usize>, String> {
        match std::env::var(name) {
            Ok(text) => text
                .trim()
                .parse()
                .map(Some)
                .map_err(|e| format!("{name} must be a byte count: {e} (got `{text}`)")),
            Err(std::env::VarError::NotPresent) => Ok(None),
            Err(e) => Err(format!("{name}: {e}")),
        }
    };
    let mut cache = CacheModel::DEFAULT;
    if let Some(v) = read("CACHE_L1")? {
        cache.l1 = v;
    }
    if let Some(v) = read("CACHE_L2")? {
        cache.l2 = v;
    }
    if let Some(v) = read("CACHE_L3")? {
        cache.l3 = v;
    }
    Ok(cache)
}
