use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mg1::analysis::{self, KRON_BLOCK_LIMIT};
use mg1::embedding::{Embedding, Strategy};
use mg1::generators::{gen_phph_detailed, gen_synthetic, PhPhSpec, SyntheticSpec};
use mg1::kv::KvList;
use mg1::model::{read_matrix, read_model, write_matrix, write_model, MatrixPolynomial};
use mg1::solver::{classical_solve_traced, outer_solve_traced, SolveReport, StopConfig};
use mg1::{numkernel, Error, Matrix};

use crate::{AnalyzeArgs, Cli, Command, GenCommand, PhphArgs, SolveArgs, StopArgs, SweepArgs, SyntheticArgs};

/// Exit code when a solve ended without converging.
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Usage(_) => 2,
            CliError::Io(..) => 1,
            CliError::Core(e) => match e {
                Error::InvalidSpec(_) | Error::InvalidEmbedding(_) | Error::Infeasible(_) => 2,
                Error::Io(_) | Error::Parse { .. } => 1,
                Error::InvalidModel(_) | Error::NotStochastic(_) | Error::DimensionMismatch(_) => 1,
                _ => 4,
            },
        };
        ExitCode::from(code)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<ExitCode> {
    let out = cli.out_dir;
    match cli.command {
        Command::Gen(GenCommand::Synthetic(a)) => gen_synthetic_cmd(&out, a),
        Command::Gen(GenCommand::Phph(a)) => gen_phph_cmd(&out, a),
        Command::Solve(a) => solve_cmd(&out, a),
        Command::Sweep(a) => sweep_cmd(&out, a),
        Command::Analyze(a) => analyze_cmd(&out, a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load_model(path: &Path) -> Result<MatrixPolynomial> {
    let f = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(read_model(BufReader::new(f))?)
}

fn load_matrix(path: &Path) -> Result<Matrix> {
    let f = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    Ok(read_matrix(BufReader::new(f))?)
}

fn starting_matrix(choice: &str, m: usize) -> Result<Matrix> {
    match choice {
        "zero" | "0" => Ok(Matrix::zeros(m, m)),
        "identity" | "I" => Ok(Matrix::identity(m)),
        path => {
            let x = load_matrix(Path::new(path))?;
            if x.shape() != (m, m) {
                return Err(CliError::Usage(format!("starting matrix in {path} is not {m}x{m}")));
            }
            Ok(x)
        }
    }
}

fn stop_config(a: &StopArgs) -> Result<StopConfig> {
    let stop = StopConfig {
        epsilon: a.epsilon,
        max_outer: a.max_outer,
        max_inner_per_outer: a.max_inner,
        ..Default::default()
    };
    stop.check()?;
    Ok(stop)
}

fn model_summary(p: &MatrixPolynomial) -> KvList {
    let mut kv = KvList::new();
    kv.push("m", p.block_size());
    kv.push("d", p.degree());
    let report = p.validate();
    kv.push("nonnegative", report.negative_entries.is_empty());
    kv.push_f64("max_row_sum_deviation", report.max_row_sum_deviation);
    kv.push("stochastic", report.is_stochastic());
    match p.drift() {
        Ok(s) => kv.push_f64("drift", s.mu),
        Err(e) => kv.push("drift", format!("error: {e}")),
    }
    kv
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn write_generated(path: &Path, p: &MatrixPolynomial, spec: &KvList) -> Result<ExitCode> {
    let comments: Vec<String> = spec.entries().iter().map(|(k, v)| format!("{k} = {v}")).collect();
    let mut w = create(path)?;
    write_model(&mut w, p, &comments)?;
    finish(path, w)?;
    emit(&format!("{}model = {}\n", model_summary(p), path.display()));
    Ok(ExitCode::SUCCESS)
}

fn gen_synthetic_cmd(out: &Path, a: SyntheticArgs) -> Result<ExitCode> {
    let spec = SyntheticSpec { m: a.m, d: a.d, mu: a.mu, s1: a.s1, s2: a.s2, sigma: a.sigma, seed: a.seed };
    let p = gen_synthetic(&spec)?;
    let path = a.output.unwrap_or_else(|| out.join("synthetic.mg1"));
    write_generated(&path, &p, &spec.to_kv())
}

fn gen_phph_cmd(out: &Path, a: PhphArgs) -> Result<ExitCode> {
    let spec = PhPhSpec {
        n1: a.n1,
        n2: a.n2,
        lambda: a.lambda,
        a: a.a,
        b: a.b,
        c: a.c,
        rho: a.rho,
        trunc_tol: a.trunc_tol,
        degree: a.degree,
    };
    let generated = gen_phph_detailed(&spec)?;
    let mut kv = spec.to_kv();
    kv.push_f64("tail_norm", generated.tail_norm);
    let path = a.output.unwrap_or_else(|| out.join("phph.mg1"));
    write_generated(&path, &generated.model, &kv)
}

fn run_solve(
    p: &MatrixPolynomial,
    strategy: Strategy,
    x0: &Matrix,
    stop: &StopConfig,
    embedded: bool,
    trace: &mut dyn FnMut(&mg1::solver::Step<'_>),
) -> mg1::Result<SolveReport> {
    if strategy.is_classical() && !embedded {
        classical_solve_traced(p, strategy, x0, stop, trace)
    } else {
        let e = Embedding::new(p, strategy)?;
        outer_solve_traced(p, &e, x0, stop, trace)
    }
}

fn parse_strategy(s: &str) -> Result<Strategy> {
    s.parse::<Strategy>().map_err(|e| CliError::Usage(e.to_string()))
}

fn solve_cmd(out: &Path, a: SolveArgs) -> Result<ExitCode> {
    let p = load_model(&a.model)?;
    let strategy = parse_strategy(&a.strategy)?;
    let x0 = starting_matrix(&a.x0, p.block_size())?;
    let stop = stop_config(&a.stop)?;

    let csv_path = out.join("residuals.csv");
    let mut csv = create(&csv_path)?;
    let mut io_err = None;
    let d0 = p.residual(&x0)?;
    let write_row =
        |w: &mut BufWriter<File>, k: usize, delta: f64, inner: usize| writeln!(w, "{k},{delta:.16e},{inner}");
    writeln!(csv, "k,delta,inner_iters")
        .and_then(|_| write_row(&mut csv, 0, d0, 0))
        .map_err(|e| CliError::Io(csv_path.clone(), e))?;
    let start = Instant::now();
    let report = run_solve(&p, strategy, &x0, &stop, a.embedded, &mut |s| {
        if io_err.is_none() {
            if let Err(e) = write_row(&mut csv, s.k, s.delta, s.inner_iters) {
                io_err = Some(e);
            }
        }
    })?;
    let seconds = start.elapsed().as_secs_f64();
    if let Some(e) = io_err {
        return Err(CliError::Io(csv_path, e));
    }
    finish(&csv_path, csv)?;

    let g_path = out.join("G.mat");
    let mut w = create(&g_path)?;
    write_matrix(&mut w, &report.g)?;
    finish(&g_path, w)?;

    let mut kv = KvList::new();
    kv.push("model", a.model.display());
    kv.push("strategy", strategy);
    kv.push("x0", &a.x0);
    kv.push("outer", report.outer_count);
    kv.push("inner_total", report.inner_total());
    kv.push("termination", report.termination);
    kv.push("final_residual", format!("{:.16e}", report.final_residual()));
    kv.push_f64("avg_rate", report.avg_rate);
    kv.push_f64("cpu_seconds", seconds);
    if report.non_monotone() {
        kv.push("warning", format!("non-monotone iterates (min increment {:e})", report.monotonicity_violation));
        eprintln!("mg1: warning: iterates from X0 = 0 were not monotone");
    }
    let summary_path = out.join("summary.txt");
    let mut w = create(&summary_path)?;
    write!(w, "{kv}").map_err(|e| CliError::Io(summary_path.clone(), e))?;
    finish(&summary_path, w)?;
    emit(&kv.to_string());
    Ok(if report.converged() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CONVERGED) })
}

struct SweepRow {
    label: String,
    outcome: std::result::Result<(SolveReport, f64), Error>,
}

impl SweepRow {
    fn csv(&self) -> String {
        match &self.outcome {
            Ok((r, secs)) => format!(
                "{},{},{},{:.16e},{:.16e}",
                self.label,
                r.outer_count,
                r.inner_total(),
                secs,
                r.final_residual()
            ),
            Err(_) => format!("{},-1,-1,NaN,NaN", self.label),
        }
    }

    fn converged(&self) -> bool {
        matches!(&self.outcome, Ok((r, _)) if r.converged())
    }
}

fn sweep_point(p: &MatrixPolynomial, label: String, strategy: Strategy, x0: &Matrix, stop: &StopConfig) -> SweepRow {
    let start = Instant::now();
    let outcome = run_solve(p, strategy, x0, stop, false, &mut |_| {}).map(|r| (r, start.elapsed().as_secs_f64()));
    SweepRow { label, outcome }
}

fn sweep_cmd(out: &Path, a: SweepArgs) -> Result<ExitCode> {
    let p = load_model(&a.model)?;
    let x0 = starting_matrix(&a.x0, p.block_size())?;
    let stop = stop_config(&a.stop)?;
    let to = a.to.unwrap_or_else(|| p.degree().clamp(1, 30));
    if a.from == 0 || a.from > to {
        return Err(CliError::Usage(format!("empty q+1 range {}..={to}", a.from)));
    }
    let mut points: Vec<(String, Strategy)> = Vec::new();
    if a.baselines {
        for s in [Strategy::Natural, Strategy::Traditional, Strategy::UBased] {
            points.push((s.to_string(), s));
        }
    }
    for qp1 in a.from..=to {
        points.push((qp1.to_string(), Strategy::Optimal { q: qp1 as isize - 1 }));
    }

    let jobs = a.jobs.max(1).min(points.len());
    let mut rows: Vec<Option<SweepRow>> = (0..points.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let (p, x0, stop, points) = (&p, &x0, &stop, &points);
                scope.spawn(move || {
                    (w..points.len())
                        .step_by(jobs)
                        .map(|i| (i, sweep_point(p, points[i].0.clone(), points[i].1, x0, stop)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("sweep worker panicked") {
                rows[i] = Some(row);
            }
        }
    });
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("every point computed")).collect();

    let path = a.output.unwrap_or_else(|| out.join("sweep.csv"));
    let mut w = create(&path)?;
    let mut text = String::from("q_plus_1,outer,inner_total,cpu_seconds,final_residual\n");
    for r in &rows {
        text.push_str(&r.csv());
        text.push('\n');
        if let Err(e) = &r.outcome {
            eprintln!("mg1: q+1 = {}: {e}", r.label);
        }
    }
    w.write_all(text.as_bytes()).map_err(|e| CliError::Io(path.clone(), e))?;
    finish(&path, w)?;
    emit(&text);
    Ok(if rows.iter().all(SweepRow::converged) { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CONVERGED) })
}

fn put(kv: &mut KvList, key: &str, value: mg1::Result<f64>) {
    match value {
        Ok(v) => kv.push_f64(key, v),
        Err(e) => kv.push(key, format!("error: {e}")),
    }
}

fn analyze_cmd(out: &Path, a: AnalyzeArgs) -> Result<ExitCode> {
    let p = load_model(&a.model)?;
    let strategy = parse_strategy(&a.strategy)?;
    let e = Embedding::new(&p, strategy)?;
    let m = p.block_size();
    let g = match &a.g {
        Some(path) => load_matrix(path)?,
        None => {
            let r = mg1::solver::classical_solve(&p, Strategy::UBased, &Matrix::zeros(m, m), &StopConfig::default())?;
            if !r.converged() {
                eprintln!("mg1: warning: G did not converge ({})", r.termination);
            }
            r.g
        }
    };
    if g.shape() != (m, m) {
        return Err(CliError::Usage(format!("G is not {m}x{m}")));
    }

    let mut kv = KvList::new();
    kv.push("strategy", strategy);
    put(&mut kv, "g_residual", p.residual(&g));
    put(&mut kv, "mu", p.drift().map(|s| s.mu));
    let star = analysis::compute_star_matrices(&p, &g)?;
    put(&mut kv, "rho_V", numkernel::spectral_radius(&star.v));
    let rate = analysis::convergence_rate(&e, &p, &g);
    put(&mut kv, "rho_MinvN", rate.as_ref().map(|r| r.rho_minv_n).map_err(Clone::clone));
    put(&mut kv, "rho_HinvN", rate.as_ref().map(|r| r.rho_hinv_n).map_err(Clone::clone));
    put(&mut kv, "rho_HinvN_identity_residual", rate.as_ref().map(|r| r.identity_residual).map_err(Clone::clone));
    let (xi, xi_q) = analysis::xi_roots(&p, &e, &g);
    put(&mut kv, "xi", xi);
    put(&mut kv, "xi_q", xi_q);
    if m <= KRON_BLOCK_LIMIT {
        let kr = analysis::kron_rate(&e, &g).map(|k| k.rho_w);
        put(&mut kv, "rho_W", kr.clone());
        let diff = match (&kr, &rate) {
            (Ok(w), Ok(r)) => Ok((w - r.rho_minv_n).abs()),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        put(&mut kv, "rho_W_minus_rho_MinvN", diff);
    } else {
        kv.push("rho_W", format!("error: block size {m} exceeds {KRON_BLOCK_LIMIT}"));
    }

    let path = a.output.unwrap_or_else(|| out.join("diagnostics.txt"));
    let mut w = create(&path)?;
    write!(w, "{kv}").map_err(|e| CliError::Io(path.clone(), e))?;
    finish(&path, w)?;
    emit(&kv.to_string());
    Ok(ExitCode::SUCCESS)
}
