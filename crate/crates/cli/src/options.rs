use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::exit::{CliError, CliResult};

const SCALAR_CSV: &str = "\
CSV (--csv): one header line and one data row.";

const BQ_CSV: &str = "\
CSV columns (--csv): status,witness,slope,trace,fuel_spent,region,boundary,certificate_checked
  witness is forbidden-trace, reducible-kappa, periodic-bounded-orbit or empty;
  region and boundary count certificate triangles and edges.";

const SERIES_CSV: &str = "\
CSV columns (--csv): depth,layer_sum_re,layer_sum_im,cumulative_residual
  one row per layer of the dual tree.";

const BUNDLE_CSV: &str = "\
CSV columns (--csv): root,sum,depth,layer_sum_re,layer_sum_im,cumulative_residual
  sum is full or half; root indexes the fixed characters.";

const ENDS_CSV: &str = "\
CSV columns (--csv): kind,slope,left,right,trace_re,trace_im
  kind is rational (slope, trace) or interval (left, right).";

const SWEEP_CSV: &str = "\
Always writes CSV: i,j,re,im,status,detail,payload,fuel_spent
  i, j    grid indices; rows run over i fastest (row-major in j)
  re, im  value of the varied coordinate
  task bq:                status Satisfies|Fails|Inconclusive, detail witness kind,
                          payload certificate triangles, fuel_spent tree steps
  task identity-residual: status converged|diverged|capped, payload |residual|,
                          fuel_spent terms summed
  task end-count:         status ok, payload curves with |trace| <= bound up to
                          --depth (default 10), fuel_spent empty
  A failing cell reports status error or capped and never stops the sweep.";

#[derive(Parser, Debug)]
#[command(name = "fricke", version, about = "Characters of the one-holed torus in trace coordinates")]
#[command(after_help = "Exit codes: 0 definite result, 2 inconclusive/unknown/divergent, 3 input error, 4 resource cap.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// κ and class tags of --triple.
    #[command(after_help = SCALAR_CSV)]
    Classify,
    /// Decides the Bowditch Q-conditions within --fuel tree steps.
    #[command(after_help = BQ_CSV)]
    Bq,
    /// Decides the extended Q-conditions (open forbidden interval).
    #[command(after_help = BQ_CSV)]
    ExtendedBq,
    /// Sums the generalized identity; --variant general|cusp.
    #[command(after_help = SERIES_CSV)]
    Identity,
    /// Sums the cusp identity; needs κ = −2.
    #[command(after_help = SERIES_CSV)]
    Mcshane,
    /// Bundle identities for --word or --matrix, at --triple or at every
    /// fixed character found on the level --kappa.
    #[command(after_help = BUNDLE_CSV)]
    Bundle,
    /// Classifies end invariants; with --bound or --depth runs one search.
    #[command(after_help = ENDS_CSV)]
    Ends,
    /// Parallel sweep over a rectangle in one coordinate.
    #[command(after_help = SWEEP_CSV)]
    Sweep,
    /// Runs a fixed battery of known examples.
    Selftest,
}

/// Flags shared by every subcommand. A `--config` JSON document may supply
/// any of them under the same names; explicit flags win.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Flags {
    /// Trace triple `x,y,z`; entries like `3`, `2+1.5i`, `-i`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub triple: Option<String>,
    /// Commutator trace κ, a complex number.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    /// Mapping class as an LR-word such as `RL`.
    #[arg(long, global = true)]
    pub word: Option<String>,
    /// Mapping class as `a,b,c,d` (row-major).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Tree-step budget [default: 100000].
    #[arg(long, global = true)]
    pub fuel: Option<u64>,
    /// Target accuracy of series sums [default: 1e-8].
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest number of series terms [default: 1000000].
    #[arg(long, global = true)]
    pub max_terms: Option<usize>,
    /// Depth of tree searches.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Trace bound K of tree searches [default: 2.5].
    #[arg(long, global = true)]
    pub bound: Option<f64>,
    /// Series variant, general or cusp [default: general].
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Tabular output instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Worker threads for sweeps [default: all cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON document of flag values.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sweep task: bq, identity-residual or end-count [default: bq].
    #[arg(long, global = true)]
    pub task: Option<String>,
    /// Sweep coordinate x, y or z [default: z].
    #[arg(long, global = true)]
    pub vary: Option<String>,
    /// Sweep range `lo,hi` of the real part.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub re: Option<String>,
    /// Sweep range `lo,hi` of the imaginary part [default: 0,0].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub im: Option<String>,
    /// Grid columns (real direction) [default: 1].
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Grid rows (imaginary direction) [default: 1].
    #[arg(long, global = true)]
    pub ny: Option<usize>,
}

impl Flags {
    /// Fills unset flags from `cfg`.
    pub fn or(self, cfg: Flags) -> Flags {
        Flags {
            triple: self.triple.or(cfg.triple),
            kappa: self.kappa.or(cfg.kappa),
            word: self.word.or(cfg.word),
            matrix: self.matrix.or(cfg.matrix),
            fuel: self.fuel.or(cfg.fuel),
            tol: self.tol.or(cfg.tol),
            max_terms: self.max_terms.or(cfg.max_terms),
            depth: self.depth.or(cfg.depth),
            bound: self.bound.or(cfg.bound),
            variant: self.variant.or(cfg.variant),
            csv: self.csv || cfg.csv,
            jobs: self.jobs.or(cfg.jobs),
            config: self.config,
            out: self.out.or(cfg.out),
            task: self.task.or(cfg.task),
            vary: self.vary.or(cfg.vary),
            re: self.re.or(cfg.re),
            im: self.im.or(cfg.im),
            nx: self.nx.or(cfg.nx),
            ny: self.ny.or(cfg.ny),
        }
    }

    /// Merges in the `--config` document, if any.
    pub fn resolve(self) -> CliResult<Flags> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Flags = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("bad config {}: {e}", path.display())))?;
        Ok(self.or(cfg))
    }
}
