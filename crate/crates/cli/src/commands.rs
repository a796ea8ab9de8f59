use clap::Args;
use serde::Serialize;

use phasebc::codestates::{sector_vector, CodeParams};
use phasebc::mayers::MayersKit;
use phasebc::phasespace::{code_state_points, stellar_polynomial, stellar_roots, wigner_mixture, GridSpec, DEFAULT_RESOLUTION};
use phasebc::security::{find_params_with_limit, k_window, KWindow, ParamPlan, SecurityReport, DEFAULT_SCAN_LIMIT};
use phasebc::{fmt17, Bit, Error, Result};

use crate::output::{emit, render, KeyValues};
use crate::{Common, Status, Strength};

fn bit(b: u8) -> Result<Bit> {
    Bit::try_from(b)
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub strength: Strength,
    #[arg(short = 'M', long = "modulation")]
    pub modulation: usize,
    #[arg(short = 'k', long = "repetitions", default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[command(flatten)]
    pub common: Common,
}

pub fn bounds(args: &BoundsArgs) -> Result<Status> {
    let report = SecurityReport::build(args.strength.amplitude(), args.modulation, args.repetitions, args.epsilon)?;
    emit(&args.common, &render(&args.common, &report, || report.to_text())?)?;
    Ok(if report.bound_ok { Status::Ok } else { Status::CheckFailed })
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub strength: Strength,
    #[arg(long)]
    pub epsilon: f64,
    /// Largest modulation order to try.
    #[arg(long, default_value_t = DEFAULT_SCAN_LIMIT)]
    pub limit: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct PlanRow {
    modulation: usize,
    window: KWindow,
    feasible: bool,
}

#[derive(Serialize)]
struct PlanOutput {
    plan: ParamPlan,
    /// Windows for every `M` up to the chosen one.
    table: Vec<PlanRow>,
}

pub fn plan(args: &PlanArgs) -> Result<Status> {
    let plan = find_params_with_limit(args.epsilon, args.strength.amplitude(), args.limit)?;
    let table: Vec<PlanRow> = (2..=plan.modulation)
        .map(|m| {
            let window = k_window(plan.epsilon, plan.amplitude, m, plan.rule);
            PlanRow { modulation: m, window, feasible: !window.is_empty() }
        })
        .collect();
    let out = PlanOutput { plan, table };
    let text = || {
        let p = &out.plan;
        let mut kv = KeyValues::default();
        kv.float("epsilon", p.epsilon)
            .float("amplitude", p.amplitude)
            .raw("rule", &format!("{:?}", p.rule).to_lowercase())
            .raw("modulation", &p.modulation)
            .raw("repetitions", &p.repetitions)
            .raw("window_lower", &p.window.lower)
            .raw("window_upper", &p.window.upper.map_or("unbounded".to_string(), |u| u.to_string()))
            .raw("cube_in_window", &p.cube_in_window);
        let mut s = kv.finish();
        s.push_str("\nM k_min k_max feasible\n");
        for row in &out.table {
            let upper = row.window.upper.map_or("unbounded".to_string(), |u| u.to_string());
            s.push_str(&format!("{} {} {} {}\n", row.modulation, row.window.lower, upper, row.feasible));
        }
        s
    };
    emit(&args.common, &render(&args.common, &out, text)?)?;
    Ok(Status::Ok)
}

#[derive(Args, Debug)]
pub struct MayersArgs {
    #[command(flatten)]
    pub strength: Strength,
    #[arg(short = 'M', long = "modulation")]
    pub modulation: usize,
    /// Allow t > 2 or M > 8 (memory and time grow quickly).
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub common: Common,
}

pub fn mayers(args: &MayersArgs) -> Result<Status> {
    let t = args.strength.amplitude();
    if !args.force && (t > 2.0 || args.modulation > 8) {
        return Err(Error::Parameter(format!(
            "mayers verification is limited to t <= 2 and M <= 8 (got t = {t}, M = {}); pass --force to override",
            args.modulation
        )));
    }
    let kit = MayersKit::build(CodeParams::with_working_cutoff(t, args.modulation)?)?;
    let report = kit.verify()?;
    emit(&args.common, &render(&args.common, &report, || report.to_text())?)?;
    Ok(if report.all_pass() { Status::Ok } else { Status::CheckFailed })
}

#[derive(Args, Debug)]
pub struct WignerArgs {
    #[command(flatten)]
    pub strength: Strength,
    #[arg(short = 'M', long = "modulation")]
    pub modulation: usize,
    /// Bit whose average state is plotted.
    #[arg(short = 'b', long = "bit", default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub bit: u8,
    /// Samples per axis.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Half-width of the square window; defaults to t + 4.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Output file for the CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

pub fn wigner(args: &WignerArgs) -> Result<Status> {
    let t = args.strength.amplitude();
    let half = args.half_width.unwrap_or(t.abs() + 4.0);
    let spec = GridSpec::square(half, args.resolution)?;
    let grid = wigner_mixture(&code_state_points(bit(args.bit)?, t, args.modulation)?, &spec)?;
    let common = Common { format: crate::Format::Text, out: args.out.clone() };
    emit(&common, &grid.to_csv())?;
    Ok(Status::Ok)
}

#[derive(Args, Debug)]
pub struct RootsArgs {
    #[command(flatten)]
    pub strength: Strength,
    #[arg(short = 'M', long = "modulation")]
    pub modulation: usize,
    /// Sector r of the eigenvector.
    #[arg(short = 'r', long = "sector")]
    pub sector: usize,
    #[arg(short = 'b', long = "bit", default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub bit: u8,
    /// Fock cutoff N; defaults to the working cutoff for t.
    #[arg(short = 'N', long = "cutoff")]
    pub cutoff: Option<usize>,
    /// Report radius; defaults to sqrt(N).
    #[arg(long)]
    pub radius: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub fn roots(args: &RootsArgs) -> Result<Status> {
    let t = args.strength.amplitude();
    let params = match args.cutoff {
        Some(n) => CodeParams::new(t, args.modulation, n)?,
        None => CodeParams::with_working_cutoff(t, args.modulation)?,
    };
    let poly = stellar_polynomial(&sector_vector(args.sector, bit(args.bit)?, &params)?)?;
    let report = stellar_roots(&poly, args.radius)?;
    let text = || {
        let mut kv = KeyValues::default();
        kv.raw("cutoff", &params.cutoff)
            .raw("degree", &report.degree)
            .float("radius", report.radius)
            .raw("zero_multiplicity", &report.zero_multiplicity)
            .raw("count_inside", &report.count_inside);
        let mut s = kv.finish();
        s.push_str("\nre im multiplicity\n");
        for c in &report.clusters {
            s.push_str(&format!("{} {} {}\n", fmt17(c.re), fmt17(c.im), c.multiplicity));
        }
        s
    };
    emit(&args.common, &render(&args.common, &report, text)?)?;
    Ok(Status::Ok)
}
