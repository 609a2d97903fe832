//! `bbatlas`: command-line front end.
//!
//! Exit status 0 on success, 1 on domain errors (a JSON error object is
//! written to stderr), 2 on usage errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bbatlas_core::cohomology::{PoincareEngine, CACHE_DIR_ENV, DEFAULT_CACHE_DIR};
use bbatlas_core::enumeration::{codimension_histogram, enumerate_graphs_with_ceiling, DEFAULT_CEILING};
use bbatlas_core::flow::{
    boundary_flow, generic_gamma, limit_from_polynomials, limit_graph, random_config, BoundaryConfig,
    HImage, TransversalConfig, ZeroLocation,
};
use bbatlas_core::gathmann::{enumerate_boundary_terms, enumerate_boundary_terms_ordered, recursion_expression};
use bbatlas_core::graph::{canonical_form, codimension, validate, DecoratedGraph};
use bbatlas_core::io::{
    from_json_str, graph_from_json, graph_to_dot, graph_to_json, hasse_dot, moves_to_json, param_map_from_json,
    poly_to_json,
};
use bbatlas_core::oracles::betti_from_counts;
use bbatlas_core::poset::{check_filterable, describe, length, Poset};
use bbatlas_core::selftest::{format_table, run_selftest, SelftestBounds};
use bbatlas_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bbatlas", version, about = "Cell decompositions of genus-0 stable-map spaces to P^r")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Directory for cached Poincaré polynomials [env: BBATLAS_CACHE_DIR].
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Maximum number of graphs per enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_CEILING, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    ceiling: usize,
    /// Worker threads.
    #[arg(long, global = true, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    jobs: Option<usize>,
    /// Seed for random generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Summary,
    Dot,
}

#[derive(Args, Clone, Copy)]
struct Triple {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    d: u32,
}

#[derive(Subcommand)]
enum Command {
    /// List the fixed-locus graphs of M̄_{0,n}(P^r, d).
    Enumerate {
        #[command(flatten)]
        t: Triple,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Successors, levels and filterability checks of the surgery order.
    Poset {
        #[command(flatten)]
        t: Triple,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Poincaré polynomial of M̄_{0,n}(P^r, d).
    Poincare {
        #[command(flatten)]
        t: Triple,
        /// Also list every graph's codimension and fixed-locus polynomial.
        #[arg(long)]
        per_graph: bool,
    },
    /// Limit of the torus flow of a map.
    Limit {
        /// Transversal configuration JSON.
        #[arg(long, conflicts_with_all = ["poly", "random"])]
        config: Option<PathBuf>,
        /// Parametrised map JSON.
        #[arg(long, conflicts_with = "random")]
        poly: Option<PathBuf>,
        /// Draw a configuration for `--n --r --d` from `--seed`.
        #[arg(long, requires_all = ["n", "r", "d"])]
        random: bool,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Limit of a tangency boundary map and a move sequence from gamma.
    Boundary {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the generic limit for the configuration's contact orders.
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        r: u32,
    },
    /// Boundary terms of the tangency recursion.
    Gathmann {
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<u32>,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        r: u32,
        /// One entry per labelling of the groups.
        #[arg(long)]
        ordered: bool,
        /// Emit the whole symbolic recursion record.
        #[arg(long, conflicts_with = "ordered")]
        expression: bool,
    },
    /// Independent point-count oracles.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
    /// Run every invariant over a box of (n, r, d).
    Selftest {
        #[arg(long, default_value_t = 2)]
        max_d: u32,
        #[arg(long, default_value_t = 1)]
        max_n: u32,
        #[arg(long, default_value_t = 2)]
        max_r: u32,
        /// Random configurations per (n, r, d).
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Format::Summary)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Betti numbers of M̄_{0,m} from finite-field point counts.
    Mbar {
        #[arg(long)]
        m: u32,
    },
}

enum Output {
    Json(Value),
    Text(String),
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

fn read_valid_graph(path: &Path, r: u32) -> Result<DecoratedGraph> {
    let g = graph_from_json(&read(path)?)?;
    validate(&g, r).into_result()?;
    Ok(g)
}

fn engine(global: &Global) -> PoincareEngine {
    let dir = global
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
    PoincareEngine::new(Some(dir)).with_ceiling(global.ceiling)
}

/// The one formatter for enumeration summaries, fed by the JSON document.
fn enumerate_summary(doc: &Value) -> String {
    let hist = doc["histogram"].as_object().expect("histogram object");
    let mut pairs: Vec<(u64, u64)> = hist
        .iter()
        .map(|(k, v)| (k.parse().expect("numeric key"), v.as_u64().expect("count")))
        .collect();
    pairs.sort_unstable();
    let parts: Vec<String> = pairs.iter().map(|(c, k)| format!("{c}:{k}")).collect();
    format!("{} graphs; codim histogram {}", doc["count"], parts.join(" "))
}

fn run(cli: Cli) -> Result<Output> {
    let g = &cli.global;
    match cli.command {
        Command::Enumerate { t, format } => {
            let graphs = enumerate_graphs_with_ceiling(t.n, t.r, t.d, g.ceiling)?;
            let hist: BTreeMap<String, usize> = codimension_histogram(&graphs)?
                .into_iter()
                .map(|(c, k)| (c.to_string(), k))
                .collect();
            let listed = graphs
                .iter()
                .map(|gr| {
                    Ok(json!({
                        "codimension": codimension(gr)?,
                        "graph": graph_to_json(gr),
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            let doc = json!({
                "n": t.n, "r": t.r, "d": t.d,
                "count": graphs.len(),
                "histogram": hist,
                "graphs": listed,
            });
            Ok(match format {
                Format::Json => Output::Json(doc),
                Format::Summary => Output::Text(enumerate_summary(&doc)),
                Format::Dot => Output::Text(graphs.iter().map(graph_to_dot).collect()),
            })
        }
        Command::Poset { t, format } => {
            let graphs = enumerate_graphs_with_ceiling(t.n, t.r, t.d, g.ceiling)?;
            let poset = Poset::new(t.r);
            if format == Format::Dot {
                return Ok(Output::Text(hasse_dot(&poset, &graphs)?));
            }
            let report = check_filterable(&poset, &graphs)?;
            let mut rows = Vec::new();
            for gr in &graphs {
                let (key, canon) = canonical_form(gr);
                let successors: Vec<Value> = poset
                    .successors(&canon)?
                    .iter()
                    .map(|s| json!({"target": describe(&s.graph), "move": s.step}))
                    .collect();
                rows.push(json!({
                    "graph": describe(&canon),
                    "length": length(&canon),
                    "level": report.levels.get(&key),
                    "successors": successors,
                }));
            }
            let doc = json!({
                "n": t.n, "r": t.r, "d": t.d,
                "graphs": rows,
                "filterable": report.is_ok(),
                "moves_checked": report.moves_checked,
                "monotonicity_failures": report.monotonicity_failures,
                "closure_failures": report.closure_failures,
                "antisymmetry_failures": report.antisymmetry_failures,
                "unreachable": report.unreachable,
            });
            Ok(match format {
                Format::Summary => Output::Text(format!(
                    "{} graphs; {} moves; filterable: {}",
                    graphs.len(),
                    report.moves_checked,
                    if report.is_ok() { "yes" } else { "no" }
                )),
                _ => Output::Json(doc),
            })
        }
        Command::Poincare { t, per_graph } => {
            let engine = engine(g);
            let p = engine.poincare_moduli(t.r, t.d, t.n)?;
            let mut doc = poly_to_json(&p);
            if per_graph && t.d > 0 {
                let parts: Vec<Value> = engine
                    .contributions(t.r, t.d, t.n)?
                    .iter()
                    .map(|(gr, c, q)| json!({"graph": graph_to_json(gr), "codimension": c, "fixed_locus": q}))
                    .collect();
                doc["graphs"] = Value::Array(parts);
            }
            Ok(Output::Json(doc))
        }
        Command::Limit {
            config,
            poly,
            random,
            n,
            r,
            d,
            format,
        } => {
            let (graph, extra) = if let Some(path) = config {
                let cfg: TransversalConfig = from_json_str(&read(&path)?)?;
                (limit_graph(&cfg)?, Value::Null)
            } else if let Some(path) = poly {
                let pm = param_map_from_json(&read(&path)?)?;
                let (graph, data) = limit_from_polynomials(&pm)?;
                (graph, limit_data_json(&data))
            } else if random {
                let (n, r, d) = (n.unwrap_or(0), r.unwrap_or(1), d.unwrap_or(1));
                let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
                let cfg = random_config(&mut rng, n, r, d)
                    .ok_or_else(|| Error::InvalidArguments(format!("no configuration for (n={n}, r={r}, d={d})")))?;
                (limit_graph(&cfg)?, json!({"config": cfg}))
            } else {
                return Err(Error::InvalidArguments("one of --config, --poly or --random is required".into()));
            };
            let (_, graph) = canonical_form(&graph);
            Ok(match format {
                Format::Dot => Output::Text(graph_to_dot(&graph)),
                _ => {
                    let mut doc = json!({"graph": graph_to_json(&graph), "dot": graph_to_dot(&graph)});
                    if !extra.is_null() {
                        doc["data"] = extra;
                    }
                    Output::Json(doc)
                }
            })
        }
        Command::Boundary { config, gamma, r } => {
            let cfg: BoundaryConfig = from_json_str(&read(&config)?)?;
            let gamma = match gamma {
                Some(path) => read_valid_graph(&path, r)?,
                None => generic_gamma(&cfg.alpha),
            };
            let (limit, steps) = boundary_flow(&cfg, &gamma, r)?;
            Ok(Output::Json(json!({
                "gamma_f": graph_to_json(&limit),
                "witness": moves_to_json(&steps),
            })))
        }
        Command::Gathmann {
            alpha,
            j,
            d,
            r,
            ordered,
            expression,
        } => Ok(Output::Json(if expression {
            serde_json::to_value(recursion_expression(&alpha, j, d, r)?).expect("record serializes")
        } else {
            let terms = if ordered {
                enumerate_boundary_terms_ordered(&alpha, j, d, r)?
            } else {
                enumerate_boundary_terms(&alpha, j, d, r)?
            };
            json!({"terms": terms})
        })),
        Command::Oracle {
            which: OracleCommand::Mbar { m },
        } => {
            let oracle = betti_from_counts(m)?;
            let counts: Vec<Value> = oracle
                .counts
                .iter()
                .map(|(q, c)| json!({"q": q, "count": c.to_string()}))
                .collect();
            Ok(Output::Json(json!({"m": m, "poly": oracle.poly, "counts": counts})))
        }
        Command::Selftest {
            max_d,
            max_n,
            max_r,
            samples,
            format,
        } => {
            let bounds = SelftestBounds {
                max_n,
                max_r,
                max_d,
                seed: g.seed,
                ceiling: g.ceiling,
                samples,
            };
            let rows = run_selftest(&bounds, &engine(g))?;
            let failed = rows.iter().filter(|r| !r.passed).count();
            let out = match format {
                Format::Json => Output::Json(json!({"checks": rows, "failed": failed})),
                _ => Output::Text(format_table(&rows)),
            };
            if failed > 0 {
                emit(out);
                return Err(Error::ChecksFailed { failed });
            }
            Ok(out)
        }
    }
}

fn limit_data_json(data: &bbatlas_core::flow::LimitMapData) -> Value {
    let zeros: Vec<Value> = data
        .zeros
        .iter()
        .map(|z| {
            let location = match &z.location {
                ZeroLocation::Point(p) => json!({"z": p.z.to_string(), "w": p.w.to_string()}),
                ZeroLocation::Factor(f) => json!({"factor": f.to_string()}),
            };
            let image = match &z.image {
                HImage::Point(q) => json!(q.iter().map(ToString::to_string).collect::<Vec<_>>()),
                HImage::Residues(rs) => json!({"residues": rs.iter().map(ToString::to_string).collect::<Vec<_>>()}),
            };
            json!({
                "location": location,
                "multiplicity": z.multiplicity,
                "roots": z.roots,
                "markings": z.markings,
                "image": image,
            })
        })
        .collect();
    json!({
        "zeros": zeros,
        "in_hyperplane": data.in_hyperplane,
        "torus_lift": data.torus_lift.to_string(),
    })
}

fn emit(out: Output) {
    match out {
        Output::Json(v) => println!("{}", serde_json::to_string(&v).expect("output serializes")),
        Output::Text(t) => {
            print!("{t}");
            if !t.ends_with('\n') {
                println!();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("{}", json!({"error": {"kind": "invalid_arguments", "message": e.to_string()}}));
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(out) => {
            emit(out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": e.kind(), "message": e.to_string()}}));
            ExitCode::from(1)
        }
    }
}
