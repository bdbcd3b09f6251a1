use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use narrative_service::{AppState, Config, Store};

/// Annotation backend: sessions, capture, transcription, finalize.
#[derive(Debug, Parser)]
#[command(name = "narrative-service", version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Append-only corpus file; created if missing, reloaded on start.
    #[arg(long, default_value = "narratives.jsonl")]
    store: PathBuf,
    /// Directory served at `/` (UI bundle, test images).
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    /// Drop narratives that fail QC, including ones already stored.
    #[arg(long)]
    discard_failed: bool,
    #[arg(long, default_value = "live")]
    dataset_id: String,
    #[arg(long, default_value_t = narrative_core::sync::DEFAULT_QC_THRESHOLD)]
    threshold: f64,
}

#[tokio::main]
async fn main() {
    let args = Args::parse();
    if args.threshold.is_nan() || args.threshold < 0.0 {
        eprintln!("narrative-service: --threshold must be >= 0");
        std::process::exit(1);
    }
    let (store, report) = match Store::open(&args.store, !args.discard_failed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("narrative-service: {}: {e}", args.store.display());
            std::process::exit(2);
        }
    };
    eprintln!(
        "narrative-service: {} narratives loaded from {} ({} unreadable, {} purged)",
        report.loaded,
        args.store.display(),
        report.unreadable,
        report.purged
    );
    let config = Config { dataset_id: args.dataset_id, default_threshold: args.threshold, static_dir: args.static_dir };
    let addr = SocketAddr::new(args.host, args.port);
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("narrative-service: bind {addr}: {e}");
            std::process::exit(2);
        }
    };
    eprintln!("narrative-service: listening on http://{addr}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = narrative_service::serve(listener, AppState::new(store, config), shutdown).await {
        eprintln!("narrative-service: {e}");
        std::process::exit(2);
    }
}
