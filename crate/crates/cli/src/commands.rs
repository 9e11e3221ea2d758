use fricke::bq::{decide, verify_certificate, BqStatus, BqVariant, BqVerdict, NoQuotient, Witness};
use fricke::bundle::{
    evaluate_bundle_identities, fixed_characters_of, relative_bq, BundleReport, FixedOptions, MappingClass,
};
use fricke::character::{classify_character, parse_complex, Character, ClassTag, TraceTriple, CLASSIFY_TOL};
use fricke::ends::{classify_end_set, search_end_invariants, EndCandidate, EndClass, EndInvariantReport, CLASSIFY_BOUND};
use fricke::farey::Slope;
use fricke::series::{evaluate_identity, SeriesReport, SeriesVariant};
use num_complex::Complex64;
use serde::Serialize;

use crate::exit::{CliError, CliResult, Code};
use crate::options::{Command, Flags};
use crate::sweep;

pub const DEFAULT_FUEL: u64 = 100_000;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_TERMS: usize = 1_000_000;
pub const DEFAULT_END_DEPTH: usize = 12;

/// Rendered output of one command and its exit code.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub code: Code,
}

/// Parsed view of the merged flags.
pub struct Settings {
    pub flags: Flags,
}

impl Settings {
    pub fn triple(&self) -> CliResult<TraceTriple> {
        let s = self.flags.triple.as_deref().ok_or_else(|| CliError::input("--triple is required"))?;
        let t: TraceTriple = s.parse()?;
        if !t.is_finite() {
            return Err(CliError::input(format!("triple {s:?} is not finite")));
        }
        Ok(t)
    }

    pub fn character(&self) -> CliResult<Character> {
        Ok(Character::new(self.triple()?))
    }

    pub fn fuel(&self) -> CliResult<u64> {
        match self.flags.fuel.unwrap_or(DEFAULT_FUEL) {
            0 => Err(CliError::input("--fuel must be positive")),
            f => Ok(f),
        }
    }

    pub fn tol(&self) -> CliResult<f64> {
        let t = self.flags.tol.unwrap_or(DEFAULT_TOL);
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(CliError::input(format!("--tol must be positive, got {t}")))
        }
    }

    pub fn max_terms(&self) -> CliResult<usize> {
        match self.flags.max_terms.unwrap_or(DEFAULT_MAX_TERMS) {
            0 => Err(CliError::input("--max-terms must be positive")),
            n => Ok(n),
        }
    }

    pub fn bound(&self) -> CliResult<f64> {
        let k = self.flags.bound.unwrap_or(CLASSIFY_BOUND);
        if k > 0.0 && k.is_finite() {
            Ok(k)
        } else {
            Err(CliError::input(format!("--bound must be positive, got {k}")))
        }
    }

    pub fn kappa(&self) -> CliResult<Complex64> {
        let s = self.flags.kappa.as_deref().ok_or_else(|| CliError::input("--kappa is required"))?;
        Ok(parse_complex(s)?)
    }

    pub fn variant(&self) -> CliResult<SeriesVariant> {
        Ok(self.flags.variant.as_deref().unwrap_or("general").parse()?)
    }

    pub fn mapping_class(&self) -> CliResult<MappingClass> {
        match (&self.flags.word, &self.flags.matrix) {
            (Some(_), Some(_)) => Err(CliError::input("give only one of --word and --matrix")),
            (Some(w), None) => Ok(MappingClass::from_word(&w.parse()?)?),
            (None, Some(m)) => Ok(MappingClass::new(m.parse()?)?),
            (None, None) => Err(CliError::input("--word or --matrix is required")),
        }
    }
}

pub fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn run(command: Command, s: &Settings) -> CliResult<Outcome> {
    match command {
        Command::Classify => classify(s),
        Command::Bq => bq(s, BqVariant::Standard),
        Command::ExtendedBq => bq(s, BqVariant::Extended),
        Command::Identity => identity(s, s.variant()?),
        Command::Mcshane => identity(s, SeriesVariant::Cusp),
        Command::Bundle => bundle(s),
        Command::Ends => ends(s),
        Command::Sweep => sweep::run(s),
        Command::Selftest => selftest(),
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    triple: TraceTriple,
    kappa: Complex64,
    tags: Vec<ClassTag>,
}

fn classify(s: &Settings) -> CliResult<Outcome> {
    let t = s.triple()?;
    let c = Character::new(t);
    let out = ClassifyOutput { triple: t, kappa: c.kappa, tags: classify_character(&t, CLASSIFY_TOL).into_iter().collect() };
    let body = if s.flags.csv {
        let tags: Vec<String> = out.tags.iter().map(|t| format!("{t:?}")).collect();
        csv_text(&["triple", "kappa_re", "kappa_im", "tags"], vec![vec![
            t.to_string(),
            format!("{:?}", out.kappa.re),
            format!("{:?}", out.kappa.im),
            tags.join(" "),
        ]])
    } else {
        json(&out)
    };
    Ok(Outcome { body, code: Code::Definite })
}

#[derive(Serialize)]
struct BqOutput {
    #[serde(flatten)]
    verdict: BqVerdict,
    /// Result of re-checking the certificate independently of the search.
    certificate_checked: Option<bool>,
}

pub fn witness_kind(w: &Witness) -> &'static str {
    match w {
        Witness::ForbiddenTrace { .. } => "forbidden-trace",
        Witness::ReducibleKappa { .. } => "reducible-kappa",
        Witness::PeriodicBoundedOrbit { .. } => "periodic-bounded-orbit",
    }
}

pub fn status_code(status: BqStatus) -> Code {
    match status {
        BqStatus::Inconclusive => Code::Inconclusive,
        _ => Code::Definite,
    }
}

fn bq(s: &Settings, variant: BqVariant) -> CliResult<Outcome> {
    let c = s.character()?;
    let verdict = decide(&c, variant, s.fuel()?)?;
    let certificate_checked =
        verdict.certificate.as_ref().map(|cert| verify_certificate(&c.triple, variant, cert, &NoQuotient).is_ok());
    let code = status_code(verdict.status);
    let out = BqOutput { verdict, certificate_checked };
    let body = if s.flags.csv {
        let v = &out.verdict;
        let (slope, trace) = match &v.witness {
            Some(Witness::ForbiddenTrace { slope, trace }) => (Some(*slope), Some(*trace)),
            Some(Witness::PeriodicBoundedOrbit { center, center_trace, .. }) => (Some(*center), Some(*center_trace)),
            _ => (None, None),
        };
        csv_text(
            &["status", "witness", "slope", "trace", "fuel_spent", "region", "boundary", "certificate_checked"],
            vec![vec![
                format!("{:?}", v.status),
                opt(v.witness.as_ref().map(witness_kind)),
                opt(slope),
                opt(trace.map(fricke::character::format_complex)),
                v.fuel_spent.to_string(),
                opt(v.certificate.as_ref().map(|c| c.region.len())),
                opt(v.certificate.as_ref().map(|c| c.boundary.len())),
                opt(out.certificate_checked),
            ]],
        )
    } else {
        json(&out)
    };
    Ok(Outcome { body, code })
}

pub fn series_code(r: &SeriesReport) -> Code {
    if r.converged {
        Code::Definite
    } else if r.diverged {
        Code::Inconclusive
    } else {
        Code::Resource
    }
}

fn series_rows(r: &SeriesReport) -> Vec<Vec<String>> {
    r.csv_rows().into_iter().map(|row| row.split(',').map(str::to_string).collect()).collect()
}

fn identity(s: &Settings, variant: SeriesVariant) -> CliResult<Outcome> {
    let c = s.character()?;
    let r = evaluate_identity(&c, variant, s.tol()?, s.max_terms()?)?;
    let body = if s.flags.csv {
        csv_text(&["depth", "layer_sum_re", "layer_sum_im", "cumulative_residual"], series_rows(&r))
    } else {
        json(&r)
    };
    Ok(Outcome { body, code: series_code(&r) })
}

#[derive(Serialize)]
struct BundleRoot {
    triple: TraceTriple,
    kappa: Complex64,
    relative_bq: BqStatus,
    report: Option<BundleReport>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BundleOutput {
    matrix: String,
    word: Option<String>,
    roots: Vec<BundleRoot>,
}

fn bundle_code(r: &BundleReport) -> Code {
    match (series_code(&r.full), series_code(&r.half)) {
        (Code::Definite, Code::Definite) => Code::Definite,
        (Code::Inconclusive, _) | (_, Code::Inconclusive) => Code::Inconclusive,
        _ => Code::Resource,
    }
}

fn bundle(s: &Settings) -> CliResult<Outcome> {
    let theta = s.mapping_class()?;
    if !theta.is_anosov() {
        return Err(CliError::input(format!("{theta} is not Anosov of determinant 1")));
    }
    let (tol, max_terms, fuel) = (s.tol()?, s.max_terms()?, s.fuel()?);
    let mut roots = Vec::new();
    let code;
    if s.flags.triple.is_some() {
        let c = s.character()?;
        let status = relative_bq(&c, &theta, fuel)?.status;
        let report = evaluate_bundle_identities(&c, &theta, tol, max_terms)?;
        code = bundle_code(&report);
        roots.push(BundleRoot { triple: c.triple, kappa: c.kappa, relative_bq: status, report: Some(report), error: None });
    } else {
        let kappa = s.kappa()?;
        for f in fixed_characters_of(&theta.matrix, kappa, &FixedOptions::default())? {
            let c = Character::new(f.triple);
            let status = relative_bq(&c, &theta, fuel)?.status;
            let (report, error) = if status == BqStatus::Satisfies {
                match evaluate_bundle_identities(&c, &theta, tol, max_terms) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            roots.push(BundleRoot { triple: c.triple, kappa: c.kappa, relative_bq: status, report, error });
        }
        let any = roots.iter().any(|r| r.report.as_ref().is_some_and(|b| bundle_code(b) == Code::Definite));
        code = if any { Code::Definite } else { Code::Inconclusive };
    }
    let out = BundleOutput { matrix: theta.to_string(), word: theta.word.as_ref().map(|w| w.to_string()), roots };
    let body = if s.flags.csv {
        let mut rows = Vec::new();
        for (k, root) in out.roots.iter().enumerate() {
            let Some(r) = &root.report else { continue };
            for (name, series) in [("full", &r.full), ("half", &r.half)] {
                for mut row in series_rows(series) {
                    row.insert(0, name.to_string());
                    row.insert(0, k.to_string());
                    rows.push(row);
                }
            }
        }
        csv_text(&["root", "sum", "depth", "layer_sum_re", "layer_sum_im", "cumulative_residual"], rows)
    } else {
        json(&out)
    };
    Ok(Outcome { body, code })
}

fn ends(s: &Settings) -> CliResult<Outcome> {
    let c = s.character()?;
    let r: EndInvariantReport = if s.flags.bound.is_some() || s.flags.depth.is_some() {
        search_end_invariants(&c, s.bound()?, s.flags.depth.unwrap_or(DEFAULT_END_DEPTH))?
    } else {
        classify_end_set(&c, s.fuel()?)?
    };
    let code = if r.classification == EndClass::Unknown { Code::Inconclusive } else { Code::Definite };
    let body = if s.flags.csv {
        let rows = r
            .candidates
            .iter()
            .map(|cand| match cand {
                EndCandidate::Rational { slope, trace, .. } => vec![
                    "rational".into(),
                    slope.to_string(),
                    String::new(),
                    String::new(),
                    format!("{:?}", trace.re),
                    format!("{:?}", trace.im),
                ],
                EndCandidate::Interval { left, right } => vec![
                    "interval".into(),
                    String::new(),
                    left.to_string(),
                    right.to_string(),
                    String::new(),
                    String::new(),
                ],
            })
            .collect();
        csv_text(&["kind", "slope", "left", "right", "trace_re", "trace_im"], rows)
    } else {
        json(&r)
    };
    Ok(Outcome { body, code })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
}

#[derive(Serialize)]
struct SelftestOutput {
    passed: bool,
    checks: Vec<Check>,
}

fn selftest() -> CliResult<Outcome> {
    let ch = |x: f64, y: f64, z: Complex64| Character::new(TraceTriple::new(x.into(), y.into(), z));
    let re = |v: f64| Complex64::new(v, 0.0);
    let status = |c: &Character| decide(c, BqVariant::Standard, 10_000).map(|v| v.status).ok();
    let general = |c: &Character| evaluate_identity(c, SeriesVariant::General, 1e-8, DEFAULT_MAX_TERMS).ok();
    let end_class = |c: &Character| classify_end_set(c, 20_000).map(|r| r.classification).ok();
    let checks = vec![
        Check {
            name: "trace of (3,3,3) at 2/5 is 87",
            pass: ch(3.0, 3.0, re(3.0)).trace_at(Slope::new(2, 5)?).is_ok_and(|t| (t - 87.0).norm() < 1e-9),
        },
        Check { name: "bq (3,3,3) satisfies", pass: status(&ch(3.0, 3.0, re(3.0))) == Some(BqStatus::Satisfies) },
        Check {
            name: "bq (0,3,3i) fails",
            pass: status(&ch(0.0, 3.0, Complex64::new(0.0, 3.0))) == Some(BqStatus::Fails),
        },
        Check { name: "bq (2,2,2) fails", pass: status(&ch(2.0, 2.0, re(2.0))) == Some(BqStatus::Fails) },
        Check {
            name: "mcshane (3,3,3) sums to 1/2",
            pass: evaluate_identity(&ch(3.0, 3.0, re(3.0)), SeriesVariant::Cusp, 1e-8, DEFAULT_MAX_TERMS)
                .is_ok_and(|r| r.converged && (r.partial_sum - 0.5).norm() < 1e-6),
        },
        Check {
            name: "identity (3,3,4) sums to nu",
            pass: general(&ch(3.0, 3.0, re(4.0))).is_some_and(|r| r.converged && r.residual.norm() < 1e-6),
        },
        Check { name: "identity (1,1,1) diverges", pass: general(&ch(1.0, 1.0, re(1.0))).is_some_and(|r| r.diverged) },
        Check { name: "ends (3,3,3) empty", pass: end_class(&ch(3.0, 3.0, re(3.0))) == Some(EndClass::Empty) },
        Check { name: "ends (0,0,3) full", pass: end_class(&ch(0.0, 0.0, re(3.0))) == Some(EndClass::FullPL) },
    ];
    let passed = checks.iter().all(|c| c.pass);
    let code = if passed { Code::Definite } else { Code::Inconclusive };
    Ok(Outcome { body: json(&SelftestOutput { passed, checks }), code })
}
