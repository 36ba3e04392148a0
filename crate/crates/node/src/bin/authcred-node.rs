use std::net::SocketAddr;
use std::process::ExitCode;

use authcred_node::{serve_blocking, NodeArgs, ServeConfig};
use clap::Parser;

/// Runs an authcred node.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8470")]
    listen: SocketAddr,
    #[command(flatten)]
    node: NodeArgs,
}

fn main() -> ExitCode {
    authcred_node::init_tracing();
    let args = Args::parse();
    match serve_blocking(ServeConfig { node: args.node.to_config(), listen: args.listen }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
