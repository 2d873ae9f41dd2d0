use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use chunktagger::ChunkModel;
use chunktagger_service::{router, AppState, UnknownPos};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnknownPosArg {
    Unk,
    Uniform,
    Reject,
}

/// Serves interactive chunk proposals over HTTP.
#[derive(Debug, Parser)]
#[command(name = "chunktagger-serve", version)]
struct Args {
    /// Model file written by `chunktagger train`. Without one every model
    /// endpoint answers 503.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Default handling of POS tags the model has not seen.
    #[arg(long, value_enum, default_value = "unk")]
    unknown_pos: UnknownPosArg,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let model = match &args.model {
        Some(path) => {
            let loaded = std::fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|text| ChunkModel::from_text(&text).map_err(|e| e.to_string()));
            match loaded {
                Ok(m) => Some(m),
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(3);
                }
            }
        }
        None => {
            eprintln!("warning: no --model given; serving 503 until restarted with one");
            None
        }
    };
    let unknown_pos = match args.unknown_pos {
        UnknownPosArg::Unk => UnknownPos::Unk,
        UnknownPosArg::Uniform => UnknownPos::Uniform,
        UnknownPosArg::Reject => UnknownPos::Reject,
    };
    let app = router(AppState::new(model, unknown_pos));
    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {}: {e}", args.addr);
            return ExitCode::from(3);
        }
    };
    eprintln!("listening on {}", args.addr);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
