use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use dotedge_service::{cors, router, Service};

/// Serve dotedge stimuli to the experiment UI and log responses.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Directory with one dataset per kind (`static-image/`, ...) and the
    /// `logs/` directory.
    #[arg(long)]
    data_root: PathBuf,
    /// Allowed browser origin; repeat for several. Any origin if omitted.
    #[arg(long = "ui-origin")]
    ui_origins: Vec<String>,
}

#[tokio::main]
async fn main() {
    let args = Args::parse();
    if let Err(e) = serve(args).await {
        eprintln!("dotedge-service: {e}");
        std::process::exit(1);
    }
}

async fn serve(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let root = args.data_root.clone();
    let svc = tokio::task::spawn_blocking(move || Service::open(&root)).await??;
    if svc.repaired_bytes() > 0 {
        eprintln!("dropped {} bytes of an unfinished log line", svc.repaired_bytes());
    }
    let kinds: Vec<_> = svc.kinds().map(|k| k.name()).collect();
    let app = router(Arc::new(svc), cors(&args.ui_origins)?);
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {} with datasets {}", listener.local_addr()?, kinds.join(", "));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
