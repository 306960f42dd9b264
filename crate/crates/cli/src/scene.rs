use std::path::PathBuf;

use clap::Args;
use holonomy_core::catalog::Params;
use holonomy_core::numerics::QuadConfig;
use holonomy_core::{ChartId, Orientation};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Explicit labelled partition, or a resolution for the automatic builders.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSource {
    /// Sample count (paths, loops), `[nu, nv]` (surfaces) or bricks per axis
    /// (volumes). Several values give a convergence series for `stokes` and
    /// `stokes2`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub resolution: Vec<usize>,
    /// Path breakpoints including both ends, or loop start angles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<ChartId>>,
    /// Rectangular faces of a planar surface domain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub faces: Option<Vec<FaceEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceEntry {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub label: ChartId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scene {
    pub geometry: Option<String>,
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    pub map_params: Params,
    pub partition: PartitionSource,
    pub quad: QuadConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub charts: Vec<ChartId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objects: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Phase the result is compared with (radians, modulo 2π).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutant: Option<String>,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad number in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    match s {
        "+" | "positive" => Ok(Orientation::Positive),
        "-" | "negative" => Ok(Orientation::Negative),
        _ => Err(format!("orientation must be + or -, got `{s}`")),
    }
}

/// Scene flags shared by every subcommand. Flags override the scene file.
#[derive(Debug, Clone, Default, Args)]
pub struct SceneArgs {
    /// JSON scene file.
    #[arg(long, value_name = "FILE")]
    pub scene: Option<PathBuf>,
    #[arg(long, short)]
    pub geometry: Option<String>,
    /// Geometry parameter, repeatable.
    #[arg(long = "param", short = 'p', value_name = "K=V", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    #[arg(long, short)]
    pub map: Option<String>,
    /// Map parameter, repeatable.
    #[arg(long = "map-param", value_name = "K=V", value_parser = parse_kv)]
    pub map_params: Vec<(String, f64)>,
    /// Partition resolution; repeat or comma-separate for several values.
    #[arg(long, short, value_delimiter = ',')]
    pub resolution: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub breakpoints: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<ChartId>>,
    #[arg(long, value_delimiter = ',')]
    pub charts: Option<Vec<ChartId>>,
    #[arg(long, value_parser = parse_orientation, allow_hyphen_values = true)]
    pub orientation: Option<Orientation>,
    /// Comma-separated ambient coordinates of a point, repeatable.
    #[arg(long = "point", value_name = "X,Y,..", allow_hyphen_values = true)]
    pub points: Vec<String>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub expected: Option<f64>,
    /// `dropped-transition` (axioms) or `flipped-edges` (axioms2).
    #[arg(long)]
    pub mutant: Option<String>,
    #[arg(long)]
    pub order_1d: Option<usize>,
    #[arg(long)]
    pub order_2d: Option<usize>,
    #[arg(long)]
    pub order_3d: Option<usize>,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<u32>,
    /// Worker threads; falls back to HOLONOMY_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SceneArgs {
    /// The scene file (if any) with every given flag applied on top.
    pub fn scene(&self) -> Result<Scene, CliError> {
        let mut s = match &self.scene {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::schema(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?
            }
            None => Scene::default(),
        };
        if let Some(g) = &self.geometry {
            s.geometry = Some(g.clone());
        }
        s.params.extend(self.params.iter().cloned());
        if let Some(m) = &self.map {
            s.map = Some(m.clone());
        }
        s.map_params.extend(self.map_params.iter().cloned());
        if !self.resolution.is_empty() {
            s.partition.resolution = self.resolution.clone();
        }
        if let Some(b) = &self.breakpoints {
            s.partition.breakpoints = Some(b.clone());
        }
        if let Some(l) = &self.labels {
            s.partition.labels = Some(l.clone());
        }
        if let Some(c) = &self.charts {
            s.charts = c.clone();
        }
        if self.orientation.is_some() {
            s.orientation = self.orientation;
        }
        if !self.points.is_empty() {
            s.points = parse_points(&self.points)?;
        }
        macro_rules! set {
            ($($flag:ident => $field:expr),*) => {$(
                if let Some(v) = self.$flag.clone() {
                    $field = v.into();
                }
            )*};
        }
        set!(fd_step => s.fd_step, trials => s.trials, samples => s.samples, objects => s.objects,
             seed => s.seed, tolerance => s.tolerance, expected => s.expected, mutant => s.mutant,
             order_1d => s.quad.order_1d, order_2d => s.quad.order_2d, order_3d => s.quad.order_3d,
             quad_tol => s.quad.tolerance, max_depth => s.quad.max_depth);
        Ok(s)
    }

    pub fn threads(&self) -> Result<Option<usize>, CliError> {
        if self.threads.is_some() {
            return Ok(self.threads);
        }
        match std::env::var("HOLONOMY_THREADS") {
            Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Some).map_err(|_| {
                CliError::schema(format!(
                    "HOLONOMY_THREADS must be a positive integer, got `{v}`"
                ))
            }),
            _ => Ok(None),
        }
    }
}

fn parse_points(values: &[String]) -> Result<Vec<Vec<f64>>, CliError> {
    values
        .iter()
        .map(|v| {
            v.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::schema(format!("bad point coordinate `{c}`: {e}")))
                })
                .collect()
        })
        .collect()
}
