//! `holonomy`: evaluates bundle and gerbe transport over catalog geometries
//! and prints one JSON report per invocation.

mod commands;
mod scene;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holonomy_core::Error;
use serde_json::json;

use scene::{Scene, SceneArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_GEOMETRY: u8 = 3;
pub const EXIT_NONCONVERGENCE: u8 = 4;
pub const EXIT_TOLERANCE: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn schema(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SCHEMA,
            kind: "schema",
            message: message.into(),
        }
    }

    pub fn geometry(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_GEOMETRY,
            kind: "geometry",
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::QuadratureNotConverged { .. } => Self {
                code: EXIT_NONCONVERGENCE,
                kind: "non_convergence",
                message: e.to_string(),
            },
            _ => Self::geometry(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "holonomy",
    version,
    about = "Bundle and gerbe transport as state sums over labelled partitions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cocycle residuals of the geometry's bundle and gerbe data.
    Check(SceneArgs),
    /// Bundle transport along a path, loop or constant map.
    Transport(SceneArgs),
    /// Gerbe transport over a surface map.
    Surface(SceneArgs),
    /// Boundary transport against curvature flux over a surface.
    Stokes(SceneArgs),
    /// Boundary surface transport against the 3-form integral over a volume.
    Stokes2(SceneArgs),
    /// Transition functions and connection read back from bundle transport.
    Reconstruct(SceneArgs),
    /// g3, A2 and F read back from gerbe transport.
    ReconstructGerbe(SceneArgs),
    /// Randomised axiom suite for bundle transport.
    Axioms(SceneArgs),
    /// Randomised axiom suite for gerbe transport.
    Axioms2(SceneArgs),
}

impl Command {
    fn parts(
        &self,
    ) -> (
        &'static str,
        &SceneArgs,
        fn(&mut Scene) -> Result<commands::Outcome, CliError>,
    ) {
        match self {
            Command::Check(a) => ("check", a, commands::check),
            Command::Transport(a) => ("transport", a, commands::transport),
            Command::Surface(a) => ("surface", a, commands::surface),
            Command::Stokes(a) => ("stokes", a, commands::stokes),
            Command::Stokes2(a) => ("stokes2", a, commands::stokes2),
            Command::Reconstruct(a) => ("reconstruct", a, commands::reconstruct),
            Command::ReconstructGerbe(a) => ("reconstruct-gerbe", a, commands::reconstruct_gerbe),
            Command::Axioms(a) => ("axioms", a, commands::axioms),
            Command::Axioms2(a) => ("axioms2", a, commands::axioms2),
        }
    }
}

fn run(
    args: &SceneArgs,
    f: fn(&mut Scene) -> Result<commands::Outcome, CliError>,
) -> (Option<Scene>, Result<commands::Outcome, CliError>) {
    let mut scene = match args.scene() {
        Ok(s) => s,
        Err(e) => return (None, Err(e)),
    };
    let threads = match args.threads() {
        Ok(t) => t,
        Err(e) => return (Some(scene), Err(e)),
    };
    if let Some(n) = threads {
        if n == 0 {
            return (
                Some(scene),
                Err(CliError::schema("threads must be at least 1")),
            );
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return (
                Some(scene),
                Err(CliError::schema(format!("cannot start {n} threads: {e}"))),
            );
        }
    }
    let out = f(&mut scene);
    (Some(scene), out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, f) = cli.command.parts();
    let (scene, out) = run(args, f);
    let (doc, code) = match out {
        Ok(o) => {
            let code = if o.passed { EXIT_OK } else { EXIT_TOLERANCE };
            (
                json!({ "command": name, "scene": scene, "passed": o.passed, "exit_code": code, "result": o.result }),
                code,
            )
        }
        Err(e) => {
            eprintln!("holonomy {name}: {}", e.message);
            (
                json!({ "command": name, "scene": scene, "passed": false, "exit_code": e.code,
                        "error": { "kind": e.kind, "message": e.message } }),
                e.code,
            )
        }
    };
    let text = serde_json::to_string_pretty(&doc).expect("reports serialise");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    ExitCode::from(code)
}
