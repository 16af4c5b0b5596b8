use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use lexitrend_server::{serve_blocking, ServeOptions};

/// Serve a series store over HTTP.
#[derive(Debug, Parser)]
#[command(name = "lexitrend-server", version)]
struct Args {
    /// Store directory (holds manifest.json and the .seg files).
    #[arg(long)]
    store: PathBuf,
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Allowed CORS origin; "*" or unset allows any.
    #[arg(long)]
    cors_origin: Option<String>,
    /// Directory of static UI assets served at `/`.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    serve_blocking(ServeOptions {
        store: args.store,
        bind: args.bind,
        cors_origin: args.cors_origin,
        static_dir: args.static_dir,
    })?;
    Ok(())
}
