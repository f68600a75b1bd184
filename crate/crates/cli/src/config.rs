use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use phasenls::presets::InitialState;
use phasenls::{ComplexField, EvolveControls, Grid, ModelSpec, TwoBodyModel, WaveFunction};

/// Overrides the root that relative output directories are resolved against.
pub const OUTPUT_ROOT_VAR: &str = "PHASENLS_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: Grid,
    /// Single-particle model; exclusive with `two_body`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_body: Option<TwoBodyModel>,
    pub initial: Initial,
    pub controls: EvolveControls,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Initial {
    Preset(InitialState),
    /// A CSV with the columns of a snapshot file; only `re` and `im` are read.
    File {
        file: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write the state every this many records; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_stride: usize,
    /// Write every this many records to `observables.csv`.
    #[serde(default = "default_stride")]
    pub observable_stride: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("phasenls-out")
}

fn default_stride() -> usize {
    1
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: default_dir(),
            snapshot_stride: 0,
            observable_stride: default_stride(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // A tabulated state is looked up next to the config that names it; the resolved
        // path is absolute so that run_meta.json works from any directory.
        if let Initial::File { file } = &mut config.initial {
            if file.is_relative() {
                let joined = path.parent().unwrap_or(Path::new(".")).join(&*file);
                *file = fs::canonicalize(&joined).unwrap_or(joined);
            }
        }
        config.validate()?;
        // One stride setting wins so that run_meta.json echoes what actually ran.
        if config.outputs.snapshot_stride == 0 {
            config.outputs.snapshot_stride = config.controls.snapshot_every;
        }
        config.controls.snapshot_every = config.outputs.snapshot_stride;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        match (&self.model, &self.two_body) {
            (Some(_), None) => {}
            (None, Some(_)) if self.grid.dims() == 2 => {}
            (None, Some(_)) => bail!("two_body models need a 2D grid"),
            _ => bail!("exactly one of `model` and `two_body` must be given"),
        }
        if self.outputs.observable_stride == 0 {
            bail!("outputs.observable_stride must be at least 1");
        }
        Ok(())
    }

    /// Output directory after applying the root override to relative paths.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if self.outputs.dir.is_relative() => {
                PathBuf::from(root).join(&self.outputs.dir)
            }
            _ => self.outputs.dir.clone(),
        }
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        match &self.initial {
            Initial::Preset(p) => Ok(p.build(self.grid, self.seed)?),
            Initial::File { file } => read_state(file, self.grid),
        }
    }
}

/// Reads a state written as a snapshot: coordinate columns, then `re`, `im`, in flat order.
fn read_state(path: &Path, grid: Grid) -> Result<WaveFunction> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: missing column `{name}`", path.display()))
    };
    let (re, im) = (col("re")?, col("im")?);
    let coords: Vec<usize> = coordinate_names(grid.dims())
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let tol = 1e-9 * grid.length();
    let mut values = Vec::with_capacity(grid.len());
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let num = |k: usize| -> Result<f64> {
            row.get(k)
                .ok_or_else(|| anyhow!("{}: short row {}", path.display(), i + 2))?
                .parse::<f64>()
                .with_context(|| format!("{}: row {}", path.display(), i + 2))
        };
        if i < grid.len() {
            for (axis, &k) in coords.iter().enumerate() {
                if (num(k)? - grid.coordinate(i, axis)).abs() > tol {
                    bail!(
                        "{}: row {} does not lie on the configured grid",
                        path.display(),
                        i + 2
                    );
                }
            }
        }
        values.push(Complex64::new(num(re)?, num(im)?));
    }
    if values.len() != grid.len() {
        bail!(
            "{}: expected {} rows, found {}",
            path.display(),
            grid.len(),
            values.len()
        );
    }
    Ok(WaveFunction::new(ComplexField::new(grid, values)?)?)
}

pub fn coordinate_names(dims: usize) -> &'static [&'static str] {
    if dims == 1 {
        &["x"]
    } else {
        &["x1", "x2"]
    }
}
