mod expr;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use reeb_core::betti::betti_of_spec;
use reeb_core::gromov::{self, Triangulation};
use reeb_core::growth::{self, CountSequence};
use reeb_core::hamflow::{self, HamiltonianField, PhaseSpace, CLOSURE_TOL};
use reeb_core::loopmodel::ModelSpec;
use reeb_core::loops::{self, DiscreteLoop, Measure};
use reeb_core::maslov::{self, Boundary, CrossingRecord, HalfInteger, LagrangianFrame, SampledLagrangianPath, SymplecticPath};

use output::{num, Format, Provenance, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

macro_rules! domain_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Domain(e.to_string())
            }
        }
    )*};
}

domain_errors!(
    reeb_core::betti::BettiError,
    reeb_core::loopmodel::ModelError,
    reeb_core::growth::GrowthError,
    reeb_core::maslov::MaslovError,
    reeb_core::hamflow::FlowError,
    reeb_core::loops::LoopError,
    reeb_core::gromov::GromovError
);

type Result<T> = std::result::Result<T, CliError>;

/// Loop-space Betti numbers, growth rates, Maslov-type indices, Hamiltonian
/// flows, discrete loops and broken-geodesic complexes.
#[derive(Debug, Parser)]
#[command(name = "reeb-growth", version)]
struct Cli {
    /// Output format of the result table.
    #[arg(long, value_enum, global = true, default_value_t = Format::Tsv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Betti numbers of a model such as `loop(s5)` or `loop(s5)*loop(s7)`.
    Betti {
        #[arg(long)]
        space: String,
        /// Largest degree reported.
        #[arg(long)]
        max: usize,
    },
    /// Growth rate of a count sequence, or conjugacy classes of a free group.
    Growth(GrowthArgs),
    /// Conley–Zehnder index of a sampled symplectic path.
    CzIndex {
        #[arg(long)]
        path: PathBuf,
    },
    /// Robbin–Salamon index of a sampled Lagrangian path relative to a frame.
    RsIndex {
        #[arg(long)]
        path: PathBuf,
        #[arg(long = "V")]
        v: PathBuf,
    },
    /// Integrate a Hamiltonian flow with RK4.
    Flow(FlowArgs),
    /// Energy and length of discrete loops.
    Loop {
        #[command(subcommand)]
        op: LoopOp,
    },
    /// Enumerate the broken-geodesic complex of a triangulated mesh.
    Gromov(GromovArgs),
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct GrowthArgs {
    #[command(subcommand)]
    sub: Option<GrowthSub>,
    #[arg(long, value_enum)]
    mode: Option<GrowthMode>,
    /// `scale<TAB>count` lines.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GrowthMode {
    Exp,
    Poly,
    Linear,
}

#[derive(Debug, Subcommand)]
enum GrowthSub {
    /// Cumulative conjugacy class counts of `F_rank` by word length.
    FreeGroup {
        #[arg(long)]
        rank: u64,
        #[arg(long)]
        max_len: u32,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpaceKind {
    Torus,
    Euclidean,
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[arg(long, value_enum, default_value_t = SpaceKind::Torus)]
    space: SpaceKind,
    /// Hamiltonian in `q1..qn`, `p1..pn`, `t`.
    #[arg(long = "H")]
    h: String,
    /// Comma-separated `q1,..,qn,p1,..,pn`.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long = "T")]
    total: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Write the orbit as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum LoopOp {
    /// Energy, length and Schwarz gap.
    Measure {
        #[arg(long)]
        input: PathBuf,
    },
    /// Resample at equal chords along the same polyline.
    Reparam {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lift to `M × S¹` by appending the parameter.
    Lift {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concatenate two loops, the first on `[0, eps]`.
    Concat {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct GromovArgs {
    /// OFF-like mesh file.
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    k: u32,
    /// Write one row per cell here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = gromov::DEFAULT_CAP)]
    cap: usize,
    /// Keep only cells not contained in a larger admissible cell.
    #[arg(long)]
    maximal: bool,
    /// Lipschitz constant of the collapse map; adds a `kappa` column.
    #[arg(long)]
    lipschitz: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("REEB_GROWTH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("REEB_GROWTH_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<String> {
    let format = cli.format;
    match cli.command {
        Command::Betti { space, max } => betti(&space, max, format),
        Command::Growth(args) => growth_cmd(args, format),
        Command::CzIndex { path } => cz_index(&path, format),
        Command::RsIndex { path, v } => rs_index(&path, &v, format),
        Command::Flow(args) => flow(args, format),
        Command::Loop { op } => loop_cmd(op, format),
        Command::Gromov(args) => gromov_cmd(args, format),
    }
}

fn read(path: &Path, prov: &mut Provenance) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    prov.input(&bytes);
    Ok(bytes)
}

fn read_json(path: &Path, prov: &mut Provenance) -> Result<Value> {
    let bytes = read(path, prov)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Domain(format!("{}: invalid JSON: {e}", path.display())))
}

fn read_text(path: &Path, prov: &mut Provenance) -> Result<String> {
    let bytes = read(path, prov)?;
    String::from_utf8(bytes).map_err(|_| CliError::Domain(format!("{}: not UTF-8 text", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, prov: &Provenance, v: Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(&prov.wrap(v)).expect("json values serialize");
    s.push('\n');
    write_file(path, &s)
}

fn betti(space: &str, max: usize, format: Format) -> Result<String> {
    let mut prov = Provenance::new("betti");
    prov.param("space", space).param("max", max);
    let spec = ModelSpec::parse(space).map_err(|e| CliError::Usage(format!("--space: {e}")))?;
    let table = betti_of_spec(&spec, max)?;
    let report = Report {
        columns: vec!["degree", "betti"],
        rows: table.values.iter().enumerate().map(|(k, b)| vec![k.to_string(), b.to_string()]).collect(),
        json: json!({"space": space, "betti": table.values, "reliable_up_to": table.reliable_up_to}),
    };
    Ok(report.render(&prov, format))
}

fn growth_cmd(args: GrowthArgs, format: Format) -> Result<String> {
    if let Some(GrowthSub::FreeGroup { rank, max_len }) = args.sub {
        let mut prov = Provenance::new("growth free-group");
        prov.param("rank", rank).param("max_len", max_len);
        let seq = growth::count_conjugacy_classes_free_group(rank, max_len)?;
        let report = Report {
            columns: vec!["length", "classes"],
            rows: seq.samples().iter().map(|(l, c)| vec![(*l as u32).to_string(), c.to_string()]).collect(),
            json: json!({
                "rank": rank,
                "lengths": seq.samples().iter().map(|s| s.0 as u32).collect::<Vec<_>>(),
                "classes": seq.samples().iter().map(|s| s.1.to_string()).collect::<Vec<_>>(),
            }),
        };
        return Ok(report.render(&prov, format));
    }
    let (Some(mode), Some(input)) = (args.mode, args.input) else {
        return Err(CliError::Usage("growth needs --mode and --input, or the free-group subcommand".into()));
    };
    let name = match mode {
        GrowthMode::Exp => "exp",
        GrowthMode::Poly => "poly",
        GrowthMode::Linear => "linear",
    };
    let mut prov = Provenance::new("growth");
    prov.param("mode", name).param("input", input.display());
    let seq = CountSequence::parse_tsv(&read_text(&input, &mut prov)?)?;
    let rate = match mode {
        GrowthMode::Exp => growth::exp_growth_rate(&seq)?,
        GrowthMode::Poly => growth::poly_growth_rate(&seq)?,
        GrowthMode::Linear => growth::linear_growth_rate(&seq)?,
    };
    let report = Report {
        columns: vec!["mode", "rate"],
        rows: vec![vec![name.to_string(), num(rate)]],
        json: json!({"mode": name, "rate": rate, "samples": seq.len()}),
    };
    Ok(report.render(&prov, format))
}

fn half_json(h: HalfInteger) -> Value {
    if h.is_integer() {
        json!(h.0 / 2)
    } else {
        json!(h.as_f64())
    }
}

fn crossings_json(records: &[CrossingRecord]) -> Value {
    let list: Vec<Value> = records
        .iter()
        .map(|r| {
            let boundary = match r.boundary {
                Boundary::Start => "start",
                Boundary::Interior => "interior",
                Boundary::End => "end",
            };
            json!({"t": r.t, "kernel_dim": r.kernel_dim, "signature": r.signature, "boundary": boundary})
        })
        .collect();
    Value::Array(list)
}

fn cz_index(path: &Path, format: Format) -> Result<String> {
    let mut prov = Provenance::new("cz-index");
    prov.param("path", path.display());
    let p = SymplecticPath::from_json(&read_json(path, &mut prov)?)?;
    let cz = maslov::cz_index(&p)?;
    let mut payload = json!({"cz": half_json(cz), "degeneracy": maslov::endpoint_degeneracy(p.end())});
    if format == Format::Json {
        payload["crossings"] = crossings_json(&maslov::cz_crossings(&p)?);
        payload["delta"] = maslov::delta_winding(&p).map_or(Value::Null, |d| json!(d));
    }
    let report = Report { columns: vec!["cz"], rows: vec![vec![cz.to_string()]], json: payload };
    Ok(report.render(&prov, format))
}

fn rs_index(path: &Path, v: &Path, format: Format) -> Result<String> {
    let mut prov = Provenance::new("rs-index");
    prov.param("path", path.display()).param("V", v.display());
    let lpath = SampledLagrangianPath::from_json(&read_json(path, &mut prov)?)?;
    let frame = LagrangianFrame::from_json(&read_json(v, &mut prov)?)?;
    let rs = maslov::rs_index(&lpath, &frame)?;
    let mut payload = json!({"rs": half_json(rs)});
    if format == Format::Json {
        payload["crossings"] = crossings_json(&maslov::crossings(&lpath, &frame, &Default::default())?);
    }
    let report = Report { columns: vec!["rs"], rows: vec![vec![rs.to_string()]], json: payload };
    Ok(report.render(&prov, format))
}

fn flow(args: FlowArgs, format: Format) -> Result<String> {
    let mut prov = Provenance::new("flow");
    let space_name = match args.space {
        SpaceKind::Torus => "torus",
        SpaceKind::Euclidean => "euclidean",
    };
    prov.param("space", space_name)
        .param("H", args.h.replace(' ', ""))
        .param("x0", &args.x0)
        .param("T", num(args.total))
        .param("dt", num(args.dt));
    let x0: Vec<f64> = args
        .x0
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--x0 must be comma-separated numbers, got `{}`", args.x0)))?;
    if x0.is_empty() || x0.len() % 2 != 0 {
        return Err(CliError::Usage(format!("--x0 needs 2n values (q then p), got {}", x0.len())));
    }
    let n = x0.len() / 2;
    let space = match args.space {
        SpaceKind::Torus => PhaseSpace::TorusCotangent(n),
        SpaceKind::Euclidean => PhaseSpace::Euclidean(n),
    };
    let e = expr::Expression::parse(&args.h, n)?;
    let (q0, p0) = x0.split_at(n);
    e.eval(0.0, q0, p0).map_err(|m| CliError::Domain(format!("H cannot be evaluated at x0: {m}")))?;
    let uses_t = args.h.contains('t');
    let mut field = HamiltonianField::new(space, move |t, q, p| e.eval(t, q, p).unwrap_or(f64::NAN));
    if uses_t {
        field = field.time_dependent();
    }
    let orbit = hamflow::integrate_flow(&field, q0, p0, args.total, args.dt)?;
    let action = if orbit.is_closed(CLOSURE_TOL) { Some(hamflow::action(&field, &orbit)?) } else { None };
    if let Some(out) = &args.out {
        write_json(out, &prov, orbit.to_json())?;
    }
    let steps = orbit.samples.len() - 1;
    let report = Report {
        columns: vec!["period", "steps", "energy_drift", "closure_defect", "action"],
        rows: vec![vec![
            num(orbit.period),
            steps.to_string(),
            orbit.energy_drift.map_or("-".into(), num),
            num(orbit.closure_defect),
            action.map_or("-".into(), num),
        ]],
        json: json!({
            "period": orbit.period,
            "steps": steps,
            "energy_drift": orbit.energy_drift,
            "closure_defect": orbit.closure_defect,
            "action": action,
        }),
    };
    Ok(report.render(&prov, format))
}

fn measure_fields(m: &Measure) -> (Vec<String>, Value) {
    let row = vec![num(m.energy), num(m.length), num(m.schwarz_gap()), num(m.relative_schwarz_gap())];
    let v = json!({
        "energy": m.energy,
        "length": m.length,
        "schwarz_gap": m.schwarz_gap(),
        "relative_schwarz_gap": m.relative_schwarz_gap(),
    });
    (row, v)
}

const MEASURE_COLUMNS: [&str; 4] = ["energy", "length", "schwarz_gap", "relative_gap"];

fn loop_result(prov: &Provenance, lp: &DiscreteLoop, out: Option<&Path>, format: Format) -> Result<String> {
    if let Some(out) = out {
        write_json(out, prov, lp.to_json())?;
    }
    let (row, mut v) = measure_fields(&loops::measure(lp));
    v["points"] = json!(lp.len());
    let mut columns = MEASURE_COLUMNS.to_vec();
    columns.push("points");
    let mut row = row;
    row.push(lp.len().to_string());
    Ok(Report { columns, rows: vec![row], json: v }.render(prov, format))
}

fn loop_cmd(op: LoopOp, format: Format) -> Result<String> {
    match op {
        LoopOp::Measure { input } => {
            let mut prov = Provenance::new("loop measure");
            prov.param("input", input.display());
            let lp = DiscreteLoop::from_json(&read_json(&input, &mut prov)?)?;
            loop_result(&prov, &lp, None, format)
        }
        LoopOp::Reparam { input, out } => {
            let mut prov = Provenance::new("loop reparam");
            prov.param("input", input.display());
            let lp = DiscreteLoop::from_json(&read_json(&input, &mut prov)?)?;
            let r = loops::arclength_reparametrize(&lp)?;
            loop_result(&prov, &r, out.as_deref(), format)
        }
        LoopOp::Lift { input, out } => {
            let mut prov = Provenance::new("loop lift");
            prov.param("input", input.display());
            let lp = DiscreteLoop::from_json(&read_json(&input, &mut prov)?)?;
            let lifted = loops::lift_to_product_circle(&lp);
            loop_result(&prov, &lifted, out.as_deref(), format)
        }
        LoopOp::Concat { input, other, eps, out } => {
            let mut prov = Provenance::new("loop concat");
            prov.param("input", input.display()).param("other", other.display()).param("eps", num(eps));
            let a = DiscreteLoop::from_json(&read_json(&input, &mut prov)?)?;
            let b = DiscreteLoop::from_json(&read_json(&other, &mut prov)?)?;
            let c = loops::concat_eps(&a, &b, eps)?;
            if let Some(out) = &out {
                write_json(out, &prov, c.to_json())?;
            }
            let eps_grid = loops::grid_epsilon(&a, &b, eps);
            let formula = loops::concat_energy_formula(&a, &b, eps_grid);
            let (mut row, mut v) = measure_fields(&loops::measure(&c));
            row.extend([num(eps_grid), num(formula)]);
            v["eps_grid"] = json!(eps_grid);
            v["energy_formula"] = json!(formula);
            let mut columns = MEASURE_COLUMNS.to_vec();
            columns.extend(["eps_grid", "energy_formula"]);
            Ok(Report { columns, rows: vec![row], json: v }.render(&prov, format))
        }
    }
}

fn gromov_cmd(args: GromovArgs, format: Format) -> Result<String> {
    let mut prov = Provenance::new("gromov");
    prov.param("mesh", args.mesh.display()).param("k", args.k).param("cap", args.cap).param("maximal", args.maximal);
    if let Some(l) = args.lipschitz {
        prov.param("lipschitz", num(l));
    }
    let tri = Triangulation::parse_off(&read_text(&args.mesh, &mut prov)?)?;
    let cover = gromov::star_cover(&tri)?;
    let e = gromov::enumerate_bk_capped(&tri, &cover, args.k, args.cap)?;
    if e.partial {
        eprintln!("warning: enumeration capped at {} of {} cells", e.cells.len(), e.total);
    }
    let cells = if args.maximal { gromov::maximal_cells(&tri, &e.cells) } else { e.cells };
    let kappa = args.lipschitz.map(|l| gromov::kappa_estimate(&tri, &cover, l)).transpose()?;
    if let Some(path) = &args.report {
        let mut s = prov.header(&["cell", "dim", "faces", "legs_outside", "bound", "pass"]);
        let body = gromov::cells_tsv(&tri, &cells);
        s.push('\n');
        s.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
        write_file(path, &s)?;
    }
    let rows = gromov::leg_bound_report(&tri, &cells);
    let mut columns = vec!["dim", "cells", "max_legs", "bound", "pass"];
    if kappa.is_some() {
        columns.push("kappa");
    }
    let table = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.dim.to_string(), r.cells.to_string(), r.max_legs.to_string(), r.bound.to_string(), r.pass.to_string()];
            if let Some(k) = kappa {
                row.push(num(k));
            }
            row
        })
        .collect();
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| json!({"dim": r.dim, "cells": r.cells, "max_legs": r.max_legs, "bound": r.bound, "pass": r.pass}))
        .collect();
    let report = Report {
        columns,
        rows: table,
        json: json!({
            "k": args.k,
            "cells": cells.len(),
            "total": e.total.to_string(),
            "partial": e.partial,
            "kappa": kappa,
            "leg_bound": json_rows,
        }),
    };
    let text = report.render(&prov, format);
    if let Some(bad) = rows.iter().find(|r| !r.pass) {
        print!("{text}");
        return Err(CliError::Domain(format!("leg bound N <= 2i fails for cells of dimension {}", bad.dim)));
    }
    Ok(text)
}
