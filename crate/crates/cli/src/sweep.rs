use fricke::bq::{bounded_subgraph, decide_bq};
use fricke::character::{Character, Coord, TraceTriple};
use fricke::series::{evaluate_identity, SeriesVariant};
use fricke::Error;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::commands::{witness_kind, Outcome, Settings};
use crate::exit::{code_of, CliError, CliResult, Code};

/// Default depth of the bounded-curve count.
pub const END_COUNT_DEPTH: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Bq,
    IdentityResidual,
    EndCount,
}

impl std::str::FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Task> {
        match s {
            "bq" => Ok(Task::Bq),
            "identity-residual" => Ok(Task::IdentityResidual),
            "end-count" => Ok(Task::EndCount),
            _ => Err(CliError::input(format!("unknown sweep task {s:?}"))),
        }
    }
}

/// A grid over one coordinate of a base triple.
///
/// Cell `(i, j)` gives the varied coordinate real part
/// `re.0 + i·(re.1 − re.0)/(nx − 1)` and imaginary part
/// `im.0 + j·(im.1 − im.0)/(ny − 1)`. A single column or row sits at the
/// midpoint of its range.
#[derive(Clone, Debug)]
pub struct SweepJob {
    pub base: TraceTriple,
    pub vary: Coord,
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub task: Task,
    pub fuel: u64,
    pub tol: f64,
    pub max_terms: usize,
    pub bound: f64,
    pub depth: usize,
}

fn axis(range: (f64, f64), n: usize, k: usize) -> f64 {
    if n == 1 {
        0.5 * (range.0 + range.1)
    } else {
        range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
    }
}

fn parse_range(s: Option<&str>, name: &str, default: Option<(f64, f64)>) -> CliResult<(f64, f64)> {
    let Some(s) = s else {
        return default.ok_or_else(|| CliError::input(format!("--{name} lo,hi is required")));
    };
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::input(format!("--{name} expects lo,hi, got {s:?}"));
    let [lo, hi] = parts[..] else { return Err(bad()) };
    let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

impl SweepJob {
    pub fn from_settings(s: &Settings) -> CliResult<SweepJob> {
        let f = &s.flags;
        let vary = match f.vary.as_deref().unwrap_or("z") {
            "x" => Coord::X,
            "y" => Coord::Y,
            "z" => Coord::Z,
            v => return Err(CliError::input(format!("--vary must be x, y or z, got {v:?}"))),
        };
        let job = SweepJob {
            base: s.triple()?,
            vary,
            re: parse_range(f.re.as_deref(), "re", None)?,
            im: parse_range(f.im.as_deref(), "im", Some((0.0, 0.0)))?,
            nx: f.nx.unwrap_or(1),
            ny: f.ny.unwrap_or(1),
            task: f.task.as_deref().unwrap_or("bq").parse()?,
            fuel: s.fuel()?,
            tol: s.tol()?,
            max_terms: s.max_terms()?,
            bound: s.bound()?,
            depth: f.depth.unwrap_or(END_COUNT_DEPTH),
        };
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(CliError::input("--nx and --ny must be at least 1"));
        }
        if (self.nx > 1 && self.re.0 == self.re.1) || (self.ny > 1 && self.im.0 == self.im.1) {
            return Err(CliError::input("a range with several cells must have lo < hi"));
        }
        Ok(())
    }

    pub fn cell_value(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(axis(self.re, self.nx, i), axis(self.im, self.ny, j))
    }

    fn cell_triple(&self, v: Complex64) -> TraceTriple {
        let mut t = self.base;
        match self.vary {
            Coord::X => t.x = v,
            Coord::Y => t.y = v,
            Coord::Z => t.z = v,
        }
        t
    }

    /// `[status, detail, payload, fuel_spent]` for one cell.
    fn cell(&self, v: Complex64) -> [String; 4] {
        let c = Character::new(self.cell_triple(v));
        let result = match self.task {
            Task::Bq => decide_bq(&c, self.fuel).map(|r| {
                [
                    format!("{:?}", r.status),
                    r.witness.as_ref().map(witness_kind).unwrap_or_default().to_string(),
                    r.certificate.map(|c| c.region.len().to_string()).unwrap_or_default(),
                    r.fuel_spent.to_string(),
                ]
            }),
            Task::IdentityResidual => {
                evaluate_identity(&c, SeriesVariant::General, self.tol, self.max_terms).map(|r| {
                    let status = if r.converged {
                        "converged"
                    } else if r.diverged {
                        "diverged"
                    } else {
                        "capped"
                    };
                    [status.into(), String::new(), format!("{:?}", r.residual.norm()), r.term_count.to_string()]
                })
            }
            Task::EndCount => bounded_subgraph(&c, self.bound, self.depth)
                .map(|g| ["ok".into(), String::new(), g.vertices.len().to_string(), String::new()]),
        };
        result.unwrap_or_else(|e: Error| {
            let status = if code_of(&e) == Code::Resource { "capped" } else { "error" };
            [status.into(), e.to_string(), String::new(), String::new()]
        })
    }

    /// CSV text with one row per cell in row-major order.
    pub fn run(&self, jobs: Option<usize>) -> CliResult<String> {
        self.validate()?;
        let cells: Vec<(usize, usize)> = (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| (i, j))).collect();
        let compute = || cells.par_iter().map(|&(i, j)| self.cell(self.cell_value(i, j))).collect::<Vec<_>>();
        let results = match jobs {
            Some(0) => return Err(CliError::input("--jobs must be at least 1")),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError { code: Code::Resource, message: e.to_string() })?
                .install(compute),
            None => compute(),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["i", "j", "re", "im", "status", "detail", "payload", "fuel_spent"]).expect("in-memory write");
        for (&(i, j), r) in cells.iter().zip(results) {
            let v = self.cell_value(i, j);
            let row = [i.to_string(), j.to_string(), format!("{:?}", v.re), format!("{:?}", v.im)];
            w.write_record(row.iter().chain(r.iter())).expect("in-memory write");
        }
        Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
    }
}

pub fn run(s: &Settings) -> CliResult<Outcome> {
    let job = SweepJob::from_settings(s)?;
    Ok(Outcome { body: job.run(s.flags.jobs)?, code: Code::Definite })
}
