use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use simplex_kde::bandwidth::{bandwidth_grid, select_bandwidth, LscvConfig};
use simplex_kde::hdr::hdr_threshold;
use simplex_kde::processes::{gen_iid, gen_mixing_ar1, MixingProcessConfig};
use simplex_kde::quadrature::triangle_lattice;
use simplex_kde::rng::{purpose, seeded, substream};
use simplex_kde::simplex::build_pair_composition;
use simplex_kde::verify::{self, CheckRecord, CltParams, MseParams, NormsParams};
use simplex_kde::{DirichletParams, KdeModel, ValidationMode};

use crate::output::{create, write_csv, Stamp};
use crate::table::{read_shares, ColumnSpec, Ingested};
use crate::{
    Command, IngestArgs, InputArgs, Kind, Outcome, PipelineArgs, SimulateArgs, Suite, VerifyArgs,
};

/// Largest simplex dimension accepted by the data commands.
pub const MAX_PIPELINE_DIM: usize = 4;

pub fn dispatch(command: &Command, command_line: &str) -> Result<Outcome> {
    match command {
        Command::Ingest(a) => ingest(a, command_line),
        Command::PairPipeline(a) => pair_pipeline(a, command_line),
        Command::Verify(a) => run_verify(a, command_line),
        Command::Simulate(a) => simulate(a, command_line),
    }
}

fn load(input: &InputArgs) -> Result<Ingested> {
    let mode = if input.strict {
        ValidationMode::Strict
    } else {
        ValidationMode::Renormalize
    };
    let spec = ColumnSpec {
        date: input.date_column.clone(),
        shares: input.columns.clone(),
    };
    Ok(read_shares(&input.input, &spec, mode)?)
}

fn ingest(args: &IngestArgs, command_line: &str) -> Result<Outcome> {
    let data = load(&args.input)?;
    let ranges = data.ranges();
    let labels = data.table.labels();
    println!("n: {}", data.table.len());
    println!("d: {}", data.d());
    println!("components: {}", labels.len());
    println!("renormalized_rows: {}", data.renormalized);
    if let (Some(first), Some(last)) = (data.dates.first(), data.dates.last()) {
        println!("dates: {first} .. {last}");
    }
    for (label, (lo, hi)) in labels.iter().zip(&ranges) {
        println!("{label}: min {lo} max {hi}");
    }
    if let Some(out) = &args.out {
        let stamp = Stamp::new(command_line)
            .n(data.table.len())
            .extra("d", data.d())
            .extra("renormalized_rows", data.renormalized);
        let rows = labels
            .iter()
            .zip(&ranges)
            .map(|(l, (lo, hi))| vec![l.clone(), lo.to_string(), hi.to_string()]);
        write_csv(out, &stamp, &["component", "min", "max"], rows)?;
    }
    Ok(Outcome::Pass)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must look like lo:step:hi, got '{spec}'");
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("grid must look like lo:step:hi, got '{spec}'"))?;
    Ok(bandwidth_grid(nums[0], nums[1], nums[2])?)
}

fn pair_pipeline(args: &PipelineArgs, command_line: &str) -> Result<Outcome> {
    let data = load(&args.input)?;
    if data.d() > MAX_PIPELINE_DIM {
        bail!(
            "tables with more than {} share columns are not supported",
            MAX_PIPELINE_DIM + 1
        );
    }
    let (i, j) = (args.pair[0], args.pair[1]);
    if i == 0 || j == 0 {
        bail!("pair indices are one-based");
    }
    let series = build_pair_composition(&data.table, i - 1, j - 1)?;
    let labels = data.table.labels();
    let pair_label = format!("({},{},other)", labels[i - 1], labels[j - 1]);
    let n = series.len();

    let cfg = LscvConfig::new(args.mc_points, parse_grid(&args.grid)?, args.seed)?;
    let selection = select_bandwidth(&series, &cfg)?;
    let b_star = selection.b_star;
    let model = KdeModel::fit(series, b_star)?;

    if args.resolution < 1 {
        bail!("resolution must be at least 1");
    }
    let lattice = triangle_lattice(args.resolution);
    let grid_values = model.evaluate_batch(&lattice)?;
    if let Some(bad) = grid_values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        bail!("density grid produced an invalid value {bad}");
    }

    let mut hdr_rng = substream(args.seed, purpose::HDR_POINTS);
    let hdr = hdr_threshold(&model, args.level, args.hdr_mc_points, &mut hdr_rng)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let stamp = Stamp::new(command_line)
        .seed(args.seed)
        .n(n)
        .b(b_star)
        .extra("pair", &pair_label);

    write_csv(
        &args.out_dir.join("lscv_curve.csv"),
        &stamp.clone().extra("mc_points", args.mc_points),
        &["b", "lscv"],
        selection.curve.iter().map(|(b, v)| [b.to_string(), v.to_string()]),
    )?;
    write_csv(
        &args.out_dir.join("density_grid.csv"),
        &stamp.clone().extra("resolution", args.resolution),
        &["s1", "s2", "fhat"],
        lattice.iter().zip(&grid_values).map(|(p, v)| {
            [p.coords()[0].to_string(), p.coords()[1].to_string(), v.to_string()]
        }),
    )?;
    write_csv(
        &args.out_dir.join("hdr.csv"),
        &stamp,
        &["pair", "b_star", "level", "threshold", "se", "M", "seed"],
        [[
            pair_label.clone(),
            b_star.to_string(),
            hdr.level.to_string(),
            hdr.threshold.to_string(),
            hdr.se.to_string(),
            hdr.mc_points.to_string(),
            args.seed.to_string(),
        ]],
    )?;
    println!("pair: {pair_label}");
    println!("n: {n}");
    println!("b_star: {b_star}");
    println!("threshold: {}", hdr.threshold);
    println!("se: {}", hdr.se);
    Ok(Outcome::Pass)
}

fn run_verify(args: &VerifyArgs, command_line: &str) -> Result<Outcome> {
    let records: Vec<CheckRecord> = match args.suite {
        Suite::Norms => {
            let mut p = NormsParams::default();
            if let Some(d) = &args.dims {
                p.dims = d.clone();
            }
            if let Some(q) = &args.exponents {
                p.exponents = q.clone();
            }
            if let Some(b) = &args.bandwidths {
                p.bandwidths = b.clone();
            }
            verify::run_norms(&p)?
        }
        Suite::Mse => {
            let mut p = MseParams::with_seed(args.seed);
            if let Some(r) = args.replicates {
                p.replicates = r;
            }
            if let Some(ns) = &args.sample_sizes {
                p.sample_sizes = ns.clone();
            }
            verify::run_mse(&p)?
        }
        Suite::Clt | Suite::Coverage => {
            let mut out = Vec::new();
            for &rho in &args.rho {
                let mut p = CltParams::with_seed(args.seed, rho);
                if let Some(r) = args.replicates {
                    p.replicates = r;
                }
                if let Some(n) = args.n {
                    p.n = n;
                }
                out.extend(if args.suite == Suite::Clt {
                    verify::run_clt(&p)?
                } else {
                    verify::run_coverage(&p)?
                });
            }
            out
        }
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out_dir.join(format!("verify_{}.jsonl", args.suite.name())));
    write_report(&path, &Stamp::new(command_line).seed(args.seed), &records)?;
    for r in &records {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} = {} ({})", r.metric, r.value, r.tolerance);
    }
    Ok(if verify::all_pass(&records) {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    })
}

fn write_report(path: &Path, stamp: &Stamp, records: &[CheckRecord]) -> Result<()> {
    let mut w = create(path, stamp)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs, command_line: &str) -> Result<Outcome> {
    if args.shapes.len() < 2 {
        bail!("--shapes needs d + 1 >= 2 values");
    }
    let (tail, shape) = args.shapes.split_last().unwrap();
    let params = DirichletParams::new(shape.to_vec(), *tail)?;
    let series = match args.kind {
        Kind::Iid => {
            if args.rho != 0.0 {
                bail!("--rho applies to ar1 only");
            }
            gen_iid(&params, args.n, &mut seeded(args.seed))?
        }
        Kind::Ar1 => gen_mixing_ar1(&MixingProcessConfig {
            rho: args.rho,
            marginal_shapes: params.clone(),
            n: args.n,
            seed: args.seed,
        })?,
    };
    let d = params.dim();
    let shapes_text = args
        .shapes
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let stamp = Stamp::new(command_line)
        .seed(args.seed)
        .n(series.len())
        .extra("d", d)
        .extra("shapes", shapes_text)
        .extra("rho", args.rho);
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=d + 1).map(|k| format!("s{k}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = series.points().iter().enumerate().map(|(t, p)| {
        let mut row = vec![(t + 1).to_string()];
        row.extend(p.coords().iter().map(|c| c.to_string()));
        row.push(p.residual().to_string());
        row
    });
    write_csv(&args.out, &stamp, &column_refs, rows)?;
    Ok(Outcome::Pass)
}
