use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use num_complex::Complex64;
use serde::Serialize;

use lmoment::forms::{self, BuiltinForm, Eigenform};
use lmoment::harper::{self, BoundCheck, BucketLabel, HarperConfig, ShiftSpec, ThresholdCheck};
use lmoment::lfun;
use lmoment::moments::{self, fmt17, Family};
use lmoment::petersson;
use lmoment::verify::{self, Suite, SuiteReport, VerifyConfig};

use crate::{BuiltinSet, Cli, Command, FamilyArgs, Format, Global, SpecArgs};

/// An error with the exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub source: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, source: e.into() }
}

fn failed(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, source: e.into() }
}

pub fn run(cli: Cli) -> Outcome {
    setup_threads(cli.global.threads)?;
    let g = &cli.global;
    match cli.command {
        Command::GenForms { id, n_max } => gen_forms(g, &id, n_max),
        Command::Verify { family, suite, x } => verify_cmd(g, &family, &suite, &x),
        Command::Lvalue { family, sigma, t } => lvalue(g, &family, sigma, &t),
        Command::Moment { family, spec, buckets, big_n } => moment(g, &family, &spec, buckets, big_n),
        Command::Harper { family, spec, big_n, lambda, x } => harper_cmd(g, &family, &spec, big_n, lambda, &x),
        Command::Petersson { kappa, level, n, y, c_max, family } => petersson_cmd(g, kappa, level, n, y, c_max, &family),
    }
}

fn setup_threads(flag: Option<usize>) -> Outcome {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("LMOMENT_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| usage(anyhow!("LMOMENT_THREADS must be a positive integer, got `{v}`")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage(anyhow!("thread count must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)?;
    }
    Ok(())
}

fn open_out(g: &Global) -> Result<Box<dyn Write>, Failure> {
    Ok(match &g.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display())).map_err(usage)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(g: &Global, value: &T) -> Outcome {
    let mut w = open_out(g)?;
    moments::to_json_writer(value, &mut w).map_err(failed)?;
    writeln!(w).and_then(|_| w.flush()).map_err(failed)
}

fn write_rows(g: &Global, header: &[&str], rows: &[Vec<String>]) -> Outcome {
    let mut w = csv::Writer::from_writer(open_out(g)?);
    let res = (|| -> csv::Result<()> {
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(failed)
}

fn load_family(args: &FamilyArgs) -> Result<Family, Failure> {
    let mut ids: Vec<BuiltinForm> = match args.builtin_set {
        Some(BuiltinSet::Level1) => BuiltinForm::LEVEL1.to_vec(),
        Some(BuiltinSet::All) => BuiltinForm::ALL.to_vec(),
        None => Vec::new(),
    };
    for id in &args.id {
        ids.push(id.parse().map_err(usage)?);
    }
    if ids.is_empty() && args.forms.is_empty() {
        return Err(usage(anyhow!("no family given; use --builtin-set, --id or --forms")));
    }
    let mut out = Vec::new();
    for b in ids {
        out.push(b.generate(args.n_max).map_err(failed)?);
    }
    for path in &args.forms {
        if !path.exists() {
            return Err(usage(anyhow!("coefficient file {} does not exist", path.display())));
        }
        let f = forms::load_coefficients(path).with_context(|| format!("loading {}", path.display())).map_err(failed)?;
        out.push(f);
    }
    let name = match (args.builtin_set, args.forms.is_empty() && args.id.is_empty()) {
        (Some(BuiltinSet::Level1), true) => "level1",
        (Some(BuiltinSet::All), true) => "all",
        _ => "custom",
    };
    Ok(Family::new(name, out))
}

fn has_family(args: &FamilyArgs) -> bool {
    args.builtin_set.is_some() || !args.id.is_empty() || !args.forms.is_empty()
}

fn shift_spec(args: &SpecArgs) -> Result<ShiftSpec, Failure> {
    ShiftSpec::new(args.a.clone(), args.t.clone(), args.big_a).map_err(usage)
}

fn gen_forms(g: &Global, ids: &[String], n_max: usize) -> Outcome {
    let ids: Vec<BuiltinForm> = ids.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(usage)?;
    if n_max < 1 {
        return Err(usage(anyhow!("--n-max must be >= 1")));
    }
    let dir = g.out.as_deref().filter(|p| p.is_dir());
    if ids.len() > 1 && dir.is_none() {
        return Err(usage(anyhow!("several ids need --out pointing at a directory")));
    }
    for b in ids {
        let f = b.generate(n_max).map_err(failed)?;
        match (&g.out, dir) {
            (_, Some(d)) => write_form(&f, &d.join(format!("{}.txt", b.id())))?,
            (Some(p), None) => write_form(&f, p)?,
            (None, None) => forms::write_coefficients(&f, io::stdout().lock()).map_err(failed)?,
        }
    }
    Ok(())
}

fn write_form(f: &Eigenform, path: &Path) -> Outcome {
    let file = File::create(path).with_context(|| format!("creating {}", path.display())).map_err(usage)?;
    forms::write_coefficients(f, file).map_err(failed)
}

#[derive(Serialize)]
struct VerifyOutput {
    passed: bool,
    suites: Vec<SuiteReport>,
}

fn verify_cmd(g: &Global, family: &FamilyArgs, suites: &[String], xs: &[f64]) -> Outcome {
    let suites: Vec<Suite> = if suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        suites.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(usage)?
    };
    let fam = if has_family(family) {
        load_family(family)?
    } else {
        let forms = BuiltinForm::ALL.iter().map(|b| b.generate(family.n_max)).collect::<Result<_, _>>().map_err(failed)?;
        Family::new("all", forms)
    };
    let mut cfg = VerifyConfig { seed: g.seed, ..Default::default() };
    if !xs.is_empty() {
        cfg.mertens_xs = xs.to_vec();
    }
    let mut reports = Vec::new();
    for s in suites {
        let r = verify::run_suite(s, &fam.forms, &cfg).map_err(failed)?;
        let status = if r.passed() { "ok" } else { "FAILED" };
        eprintln!("{s}: {status} ({} checks, min margin {:.3e})", r.checks.len(), r.min_margin());
        for c in r.failures() {
            eprintln!("  {} / {}: {} exceeds {} (margin {:.3e})", c.subject, c.name, c.value, c.bound, c.margin);
        }
        reports.push(r);
    }
    let out = VerifyOutput { passed: reports.iter().all(SuiteReport::passed), suites: reports };
    match g.format {
        Format::Json => write_json(g, &out)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = out
                .suites
                .iter()
                .flat_map(|r| {
                    r.checks.iter().map(move |c| {
                        vec![r.suite.to_string(), c.subject.clone(), c.name.clone(), fmt17(c.value), fmt17(c.bound), fmt17(c.margin)]
                    })
                })
                .collect();
            write_rows(g, &["suite", "subject", "check", "value", "bound", "margin"], &rows)?;
        }
    }
    if out.passed {
        Ok(())
    } else {
        Err(failed(anyhow!("verification failed")))
    }
}

#[derive(Serialize)]
struct LRow {
    form_id: String,
    sigma: f64,
    t: f64,
    re: f64,
    im: f64,
    abs: f64,
    trunc_error: f64,
}

fn lvalue(g: &Global, family: &FamilyArgs, sigma: f64, ts: &[f64]) -> Outcome {
    let fam = load_family(family)?;
    let mut rows = Vec::new();
    for f in &fam.forms {
        for &t in ts {
            let s = Complex64::new(sigma, t);
            let v = lfun::afe_value(f, s, &lfun::AfeConfig::default())
                .with_context(|| format!("{} at s = {sigma}+{t}i", f.id()))
                .map_err(failed)?;
            rows.push(LRow {
                form_id: f.id().to_string(),
                sigma,
                t,
                re: v.value.re,
                im: v.value.im,
                abs: v.value.norm(),
                trunc_error: v.trunc_error,
            });
        }
    }
    match g.format {
        Format::Json => write_json(g, &rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![r.form_id.clone(), fmt17(r.sigma), fmt17(r.t), fmt17(r.re), fmt17(r.im), fmt17(r.abs), fmt17(r.trunc_error)]
                })
                .collect();
            write_rows(g, &["form_id", "sigma", "t", "re", "im", "abs", "trunc_error"], &table)
        }
    }
}

fn harper_config(g: &Global, n: u64, lambda: Option<f64>) -> Result<HarperConfig, Failure> {
    let mut cfg = HarperConfig::new(n, g.t_cut).map_err(usage)?.with_slack(g.slack_c);
    if let Some(l) = lambda {
        cfg = cfg.with_lambda(l).map_err(usage)?;
    }
    Ok(cfg)
}

fn moment(g: &Global, family: &FamilyArgs, spec: &SpecArgs, buckets: bool, big_n: Option<u64>) -> Outcome {
    let fam = load_family(family)?;
    let spec = shift_spec(spec)?;
    let mut report = moments::shifted_moment(&fam, &spec);
    if buckets {
        let cfg = harper_config(g, big_n.unwrap_or(fam.level()), None)?;
        report = moments::bucket_attribution(&report, &fam, &cfg).map_err(failed)?;
    }
    eprintln!("total {} normalized {} over {} forms", fmt17(report.total), fmt17(report.normalized), report.per_form.len());
    match g.format {
        Format::Json => write_json(g, &report)?,
        Format::Csv => {
            let mut w = open_out(g)?;
            moments::write_csv(&report, &mut w).map_err(failed)?;
            w.flush().map_err(failed)?;
        }
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        for f in &report.failures {
            eprintln!("  {}: {}", f.form_id, f.error);
        }
        Err(failed(anyhow!("{} forms could not be evaluated", report.failures.len())))
    }
}

#[derive(Serialize)]
struct HarperForm {
    form_id: String,
    s_bucket: Option<BucketLabel>,
    p_bucket: Option<BucketLabel>,
    checks: Vec<ThresholdCheck>,
    bound_checks: Vec<BoundCheck>,
    error: Option<String>,
}

#[derive(Serialize)]
struct WindowSum {
    j: usize,
    lo: f64,
    hi: f64,
    value: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct PartSize {
    bucket: BucketLabel,
    count: usize,
}

#[derive(Serialize)]
struct HarperOutput {
    config: HarperConfig,
    spec: ShiftSpec,
    forms: Vec<HarperForm>,
    partition: Vec<PartSize>,
    window_mertens: Vec<WindowSum>,
}

fn harper_cmd(g: &Global, family: &FamilyArgs, spec: &SpecArgs, big_n: Option<u64>, lambda: Option<f64>, xs: &[f64]) -> Outcome {
    let fam = load_family(family)?;
    let spec = shift_spec(spec)?;
    let cfg = harper_config(g, big_n.unwrap_or(fam.level()), lambda)?;
    let mut forms_out = Vec::new();
    let mut parts = std::collections::BTreeMap::new();
    for f in &fam.forms {
        let mut row = HarperForm {
            form_id: f.id().to_string(),
            s_bucket: None,
            p_bucket: None,
            checks: Vec::new(),
            bound_checks: Vec::new(),
            error: None,
        };
        match harper::classify(f, &spec, &cfg) {
            Ok(c) => {
                *parts.entry(c.s_bucket).or_insert(0) += 1;
                row.s_bucket = Some(c.s_bucket);
                row.p_bucket = c.p_bucket;
                row.checks = c.checks;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        match harper::shifted_desk_check(f, &spec, xs, &cfg.bounds()) {
            Ok(b) => row.bound_checks = b,
            Err(e) => row.error = Some(row.error.map_or(e.to_string(), |p| format!("{p}; {e}"))),
        }
        forms_out.push(row);
    }
    let window_mertens = (1..=cfg.j_max)
        .map(|j| {
            let (value, error) = match harper::window_mertens(&cfg, j) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            WindowSum { j, lo: cfg.window_edge(j), hi: cfg.window_edge(j + 1), value, error }
        })
        .collect();
    let errors = forms_out.iter().filter(|f| f.error.is_some()).count();
    let violations = forms_out.iter().flat_map(|f| &f.bound_checks).filter(|b| b.margin < 0.0).count();
    eprintln!("J = {}, {} forms, {} errors, {} bound violations", cfg.j_max, fam.len(), errors, violations);
    let out = HarperOutput {
        config: cfg,
        spec,
        forms: forms_out,
        partition: parts.into_iter().map(|(bucket, count)| PartSize { bucket, count }).collect(),
        window_mertens,
    };
    match g.format {
        Format::Json => write_json(g, &out)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = out
                .forms
                .iter()
                .flat_map(|f| {
                    f.checks.iter().map(move |c| {
                        vec![
                            f.form_id.clone(),
                            c.i.to_string(),
                            c.l.to_string(),
                            fmt17(c.value.norm()),
                            fmt17(c.threshold),
                            fmt17(c.margin),
                        ]
                    })
                })
                .collect();
            write_rows(g, &["form_id", "i", "l", "abs_value", "threshold", "margin"], &rows)?;
        }
    }
    if errors + violations > 0 {
        Err(failed(anyhow!("{errors} forms failed, {violations} bound violations")))
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct PeterssonOutput {
    term: petersson::PeterssonTerm,
    delta_prime: f64,
    family_size: Option<usize>,
    delta_star: Option<f64>,
    residual: Option<f64>,
    size_model: Option<petersson::FamilySizeModel>,
}

fn petersson_cmd(g: &Global, kappa: u32, level: u64, n: u64, y: f64, c_max: Option<u64>, family: &FamilyArgs) -> Outcome {
    let c_max = c_max.unwrap_or_else(|| petersson::default_c_max(level, n, y));
    let term = petersson::delta_prime(kappa, level, n, y, c_max).map_err(usage)?;
    let mut out = PeterssonOutput {
        term,
        delta_prime: term.value(),
        family_size: None,
        delta_star: None,
        residual: None,
        size_model: petersson::family_size_model(kappa, level).ok(),
    };
    if has_family(family) {
        let fam = load_family(family)?;
        let star = petersson::delta_star_empirical(&fam.forms, n).map_err(failed)?;
        out.family_size = Some(fam.len());
        out.delta_star = Some(star);
        out.residual = Some(star - term.value());
    }
    match g.format {
        Format::Json => write_json(g, &out),
        Format::Csv => write_rows(
            g,
            &["kappa", "level", "n", "Y", "c_max", "main_term", "kloosterman_tail", "truncation_estimate"],
            &[vec![
                kappa.to_string(),
                level.to_string(),
                n.to_string(),
                fmt17(y),
                c_max.to_string(),
                fmt17(term.main_term),
                fmt17(term.kloosterman_tail),
                fmt17(term.truncation_estimate),
            ]],
        ),
    }
}
