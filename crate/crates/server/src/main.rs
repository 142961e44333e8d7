use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use parley_core::Mode;
use parley_server::{Server, ServerConfig};
use tokio::net::TcpListener;
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(
    name = "parley-server",
    about = "Room server for real-time discussion feedback"
)]
struct Args {
    /// TOML configuration file; flags override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Address to listen on, e.g. 0.0.0.0:7878.
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    /// Also accept WebSocket clients on this address.
    #[arg(long)]
    ws_bind: Option<String>,
    #[arg(long)]
    max_members: Option<usize>,
    #[arg(long)]
    tick_ms: Option<u32>,
    /// Session length in seconds.
    #[arg(long)]
    session_duration: Option<f64>,
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Mode for rooms whose first joiner does not ask for one.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Overlap, in seconds, that counts as an interruption.
    #[arg(long)]
    interruption_threshold: Option<f64>,
    /// Participation window in seconds.
    #[arg(long)]
    participation_window: Option<f64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "feedback" => Ok(Mode::Feedback),
        "no_feedback" | "no-feedback" => Ok(Mode::NoFeedback),
        other => Err(format!("unknown mode {other:?}")),
    }
}

fn build_config(args: Args) -> anyhow::Result<ServerConfig> {
    let mut cfg = match &args.config {
        Some(path) => ServerConfig::load(path)?,
        None => ServerConfig::default(),
    };
    if let Some(b) = args.bind {
        cfg.bind = b;
    }
    if let Some(b) = args.ws_bind {
        cfg.ws_bind = Some(b);
    }
    if let Some(p) = args.port {
        let host = cfg
            .bind
            .rsplit_once(':')
            .map_or("127.0.0.1", |(h, _)| h)
            .to_string();
        cfg.bind = format!("{host}:{p}");
    }
    if let Some(v) = args.max_members {
        cfg.max_members = v;
    }
    if let Some(v) = args.tick_ms {
        cfg.tick_ms = v;
    }
    if let Some(v) = args.session_duration {
        cfg.session_duration_s = v;
    }
    if let Some(v) = args.log_dir {
        cfg.log_dir = v;
    }
    if let Some(v) = args.mode {
        cfg.default_mode = v;
    }
    if let Some(v) = args.interruption_threshold {
        cfg.zones.interruption_threshold_s = v;
    }
    if let Some(v) = args.participation_window {
        cfg.zones.participation_window_s = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();

    let cfg = build_config(Args::parse())?;
    let listener = TcpListener::bind(&cfg.bind)
        .await
        .with_context(|| format!("binding {}", cfg.bind))?;
    tracing::info!(addr = %listener.local_addr()?, log_dir = %cfg.log_dir.display(), "listening");

    let ws_listener = match &cfg.ws_bind {
        Some(addr) => {
            let l = TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            tracing::info!(addr = %l.local_addr()?, "websocket listening");
            Some(l)
        }
        None => None,
    };

    let server = Server::new(cfg)?;
    let serving = tokio::spawn(Server::serve(server.clone(), listener));
    let serving_ws = tokio::spawn({
        let server = server.clone();
        async move {
            match ws_listener {
                Some(l) => Server::serve_ws(server, l).await,
                None => std::future::pending().await,
            }
        }
    });
    tokio::select! {
        res = serving => res??,
        res = serving_ws => res??,
        _ = tokio::signal::ctrl_c() => {
            tracing::info!("stopping all rooms");
            server.stop_all();
        }
    }
    Ok(())
}
