use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hystnet::continuation::{
    continue_equilibria, continue_periodic, seed_periodic_orbit, two_parameter_map, Branch,
    EquilibriumOptions, EventKind, PeriodicOptions, SweepOptions,
};
use hystnet::io::config::{ContinuationSection, DesignSection, SlowflowSection, SweepSection};
use hystnet::io::svg::{Plot, Series};
use hystnet::io::tables::{fmt_f64, write_table};
use hystnet::io::{
    design_report, load_config, parse_config, write_branch_csv, write_design_csv,
    write_events_csv, write_json, write_trace_csv, Config, RunManifest,
};
use hystnet::simulator::{run_scenario_partial, slow_flow_for};
use hystnet::slowflow::trigger::{required_trigger_time, trigger_threshold};
use hystnet::slowflow::{bifurcation_values, coupled_equilibria, nullcline, EquilibriumClass};
use hystnet::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "hystnet", version, about = "Active hysteretic oscillator network toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Configuration file, a bare network file, a run manifest, or
    /// `bundled:four_node` / `bundled:fifteen_node`.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write SVG figures, into the given directory or the output
    /// directory when no value follows the flag.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "", value_name = "DIR")]
    svg: Option<String>,
}

impl Global {
    fn svg_dir(&self, outputs: &Path) -> Option<PathBuf> {
        self.svg.as_ref().map(|d| {
            if d.is_empty() {
                outputs.to_path_buf()
            } else {
                PathBuf::from(d)
            }
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the closed-loop network for the configured scenario.
    Simulate {
        /// Trace CSV path (default `<out-dir>/trace.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sample_every: Option<usize>,
    },
    /// Nullcline, bifurcation values, coupled equilibria and trigger plan.
    Slowflow,
    /// Continue the trivial equilibrium and the periodic branches from its Hopf points.
    Bifurcate {
        #[command(flatten)]
        cont: ContinuationArgs,
        /// Output directory (default `<out-dir>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-parameter (ε, μ) map by per-ε continuation.
    Sweep {
        #[command(flatten)]
        cont: ContinuationArgs,
        /// `a:b:n`, n evenly spaced values.
        #[arg(long)]
        eps_grid: Option<String>,
        /// Output directory (default `<out-dir>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Required burst duration for the configured forcing.
    Trigger {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank placements of the nonlinear node.
    Design {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ContinuationArgs {
    /// `mu` (all linear nodes) or `zeta_<k>`.
    #[arg(long)]
    free: Option<String>,
    /// `a:b`.
    #[arg(long)]
    range: Option<String>,
}

fn cfg_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: msg.into(),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), Error> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(a), Ok(b)) if a < b => Ok((a, b)),
            _ => Err(cfg_err("--range", format!("expected a:b with a < b, got `{s}`"))),
        },
        _ => Err(cfg_err("--range", format!("expected a:b, got `{s}`"))),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let bad = || cfg_err("--eps-grid", format!("expected a:b:n, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn load(global: &Global) -> Result<Config, Error> {
    let source = global
        .config
        .as_deref()
        .ok_or_else(|| cfg_err("--config", "a configuration is required"))?;
    let mut config = if source.starts_with("bundled:") {
        parse_config(&format!("{{\"network\": \"{source}\"}}"), Path::new("."))?
    } else {
        load_config(Path::new(source))?
    };
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Applies `--free` / `--range` and re-validates through the parser so the
/// manifest records the effective settings.
fn with_continuation(config: Config, args: &ContinuationArgs) -> Result<Config, Error> {
    let mut section = match &config.continuation {
        Some(c) => c.clone(),
        None => {
            let range = args
                .range
                .as_deref()
                .ok_or_else(|| cfg_err("continuation.range", "required (or pass --range a:b)"))?;
            serde_json::from_value::<ContinuationSection>(serde_json::json!({
                "range": parse_range(range)?
            }))
            .map_err(|e| cfg_err("continuation", e.to_string()))?
        }
    };
    if let Some(free) = &args.free {
        section.free = free.clone();
    }
    if let Some(range) = &args.range {
        section.range = parse_range(range)?;
    }
    revalidate(Config {
        continuation: Some(section),
        ..config
    })
}

fn revalidate(config: Config) -> Result<Config, Error> {
    let text = serde_json::to_string(&config).map_err(|e| cfg_err("<root>", e.to_string()))?;
    parse_config(&text, Path::new("."))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self, Error> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        Ok(Outputs { dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.display().to_string());
        p
    }

    /// Path for a figure, or `None` when figures are off.
    fn figure(&mut self, global: &Global, name: &str) -> Result<Option<PathBuf>, Error> {
        let Some(dir) = global.svg_dir(&self.dir) else {
            return Ok(None);
        };
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        let p = dir.join(name);
        self.record(&p);
        Ok(Some(p))
    }

    fn record(&mut self, p: &Path) {
        self.files.push(p.display().to_string());
    }

    fn manifest(self, sub: &str, config: &Config) -> Result<(), Error> {
        let path = self.dir.join(format!("{sub}.manifest.json"));
        write_json(&RunManifest::new(sub, config, self.files), &path)
    }
}

fn simulate(
    global: &Global,
    out: Option<PathBuf>,
    sample_every: Option<usize>,
) -> Result<Option<Error>, Error> {
    let mut config = load(global)?;
    if let (Some(k), Some(s)) = (sample_every, config.scenario.as_mut()) {
        s.sample_every = k;
    }
    let config = revalidate(config)?;
    let model = config.model()?;
    let scenario = config.scenario_config()?;
    let (trace, failure) = run_scenario_partial(&model, &scenario)?;

    let mut outs = Outputs::new(global.out_dir.clone())?;
    let trace_path = match out {
        Some(p) => {
            outs.record(&p);
            p
        }
        None => outs.path("trace.csv"),
    };
    write_trace_csv(&trace, &trace_path)?;
    let meta_path = trace_path.with_extension("json");
    outs.record(&meta_path);
    write_json(&trace.meta, &meta_path)?;
    if global.svg.is_some() {
        let sf = slow_flow_for(&model, scenario.regime)?;
        let q = model.q;
        let phase: Vec<(f64, f64)> = (0..trace.records.len())
            .map(|i| (trace.zeta_aggregate(i), trace.records[i].a[q]))
            .collect();
        let history: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, r.a[q])).collect();
        let zeta: Vec<(f64, f64)> = (0..trace.records.len())
            .map(|i| (trace.records[i].t, trace.zeta_aggregate(i)))
            .collect();
        let zmax = phase.iter().map(|p| p.0).fold(bifurcation_values(&sf).zeta_sn, f64::max);
        let null: Vec<(f64, f64)> = (0..=200)
            .flat_map(|i| {
                let z = zmax * i as f64 / 200.0;
                nullcline(&sf, z).into_iter().map(move |a| (z, a))
            })
            .collect();
        Plot {
            title: format!("Phase plane, outcome {:?}", trace.meta.outcome),
            x_label: "aggregate damping".into(),
            y_label: format!("A_{}", q + 1),
            series: vec![
                Series::scatter("nullcline", null),
                Series::line("trajectory", phase),
            ],
        }
        .write(&outs.figure(global, "phase.svg")?.expect("figures enabled"))?;
        Plot {
            title: "Time history".into(),
            x_label: "t".into(),
            y_label: "amplitude / damping".into(),
            series: vec![
                Series::line(format!("A_{}", q + 1), history),
                Series::line("aggregate damping", zeta),
            ],
        }
        .write(&outs.figure(global, "history.svg")?.expect("figures enabled"))?;
    }
    outs.manifest("simulate", &config)?;
    match trace.meta.diverged_at {
        Some(t) => println!("diverged at t = {t} ({} records kept)", trace.records.len()),
        None => println!(
            "outcome: {:?} ({} records)",
            trace.meta.outcome,
            trace.records.len()
        ),
    }
    Ok(failure)
}

fn slowflow(global: &Global) -> Result<(), Error> {
    let mut config = load(global)?;
    if config.slowflow.is_none() {
        config.slowflow = Some(SlowflowSection::default());
    }
    let config = revalidate(config)?;
    let model = config.model()?;
    let sf = slow_flow_for(&model, config.regime())?;
    let section = config.slowflow.clone().unwrap_or_default();
    let bv = bifurcation_values(&sf);
    let mut outs = Outputs::new(global.out_dir.clone())?;

    let values = [
        ("omega", sf.omega),
        ("p", sf.p),
        ("cubic", sf.cubic()),
        ("quintic", sf.quintic()),
        ("zeta_hb", bv.zeta_hb),
        ("zeta_sn", bv.zeta_sn),
        ("a_sn", bv.a_sn),
    ];
    write_table(
        &outs.path("bifurcation_values.csv"),
        &["quantity".into(), "value".into()],
        &values
            .iter()
            .map(|(k, v)| vec![k.to_string(), fmt_f64(*v)])
            .collect::<Vec<_>>(),
    )?;

    let zmax = section.zeta_max.unwrap_or(1.5 * bv.zeta_sn);
    let mut null = Vec::new();
    for i in 0..section.samples {
        let z = zmax * i as f64 / (section.samples - 1) as f64;
        for (b, a) in nullcline(&sf, z).into_iter().enumerate() {
            null.push(vec![fmt_f64(z), fmt_f64(a), b.to_string()]);
        }
    }
    write_table(
        &outs.path("nullcline.csv"),
        &["zeta", "A", "root"].map(String::from),
        &null,
    )?;

    let rate = section
        .delta
        .zip(section.tau)
        .or_else(|| config.scenario.as_ref().map(|s| (s.delta, s.tau)));
    if let Some((delta, tau)) = rate {
        let rows: Vec<Vec<String>> = coupled_equilibria(&sf, delta, tau)
            .iter()
            .map(|e| {
                let class = match e.class {
                    EquilibriumClass::Stable => "stable",
                    EquilibriumClass::Unstable => "unstable",
                    EquilibriumClass::Saddle => "saddle",
                };
                vec![
                    fmt_f64(e.zeta),
                    fmt_f64(e.a),
                    class.into(),
                    fmt_f64(e.trace),
                    fmt_f64(e.det),
                ]
            })
            .collect();
        write_table(
            &outs.path("coupled_equilibria.csv"),
            &["zeta", "A", "class", "trace", "det"].map(String::from),
            &rows,
        )?;
    }
    if config.trigger.is_some() {
        write_trigger_table(&config, &sf, &outs.path("trigger.csv"))?;
    }
    if global.svg.is_some() {
        let pts = null
            .iter()
            .map(|r| (r[0].parse().unwrap_or(f64::NAN), r[1].parse().unwrap_or(f64::NAN)))
            .collect();
        Plot {
            title: "Amplitude nullcline".into(),
            x_label: "aggregate damping".into(),
            y_label: "A".into(),
            series: vec![Series::scatter("A' = 0", pts)],
        }
        .write(&outs.figure(global, "nullcline.svg")?.expect("figures enabled"))?;
    }
    outs.manifest("slowflow", &config)?;
    println!(
        "zeta_hb = {}, zeta_sn = {}, a_sn = {}",
        bv.zeta_hb, bv.zeta_sn, bv.a_sn
    );
    Ok(())
}

fn periodic_options(c: &ContinuationSection) -> PeriodicOptions {
    PeriodicOptions {
        ds: c.ds,
        ds_max: 5.0 * c.ds,
        max_points: c.max_points,
        steps_per_period: c.shooting_steps,
        ..Default::default()
    }
}

fn equilibrium_options(c: &ContinuationSection) -> EquilibriumOptions {
    EquilibriumOptions {
        points: c.equilibrium_points,
        geometric: c.geometric,
        ..Default::default()
    }
}

fn branch_series(name: &str, b: &Branch, q: usize) -> Series {
    Series::line(name, b.points.iter().map(|p| (p.param, p.max_u[q])).collect())
}

fn bifurcate(global: &Global, args: &ContinuationArgs, out: Option<PathBuf>) -> Result<(), Error> {
    let config = with_continuation(load(global)?, args)?;
    let model = config.model()?;
    let spec = config.param_spec()?;
    let section = config.continuation_section()?.clone();
    let mut outs = Outputs::new(out.unwrap_or_else(|| global.out_dir.clone()))?;

    let eq = continue_equilibria(&model, &spec, section.range, &equilibrium_options(&section))?;
    write_branch_csv(&eq, model.n, &outs.path("equilibria.csv"))?;
    let mut events: Vec<(f64, hystnet::continuation::BifurcationPoint)> =
        eq.events.iter().map(|e| (model.epsilon, e.clone())).collect();
    let mut series = vec![branch_series("equilibria", &eq, model.q)];
    let mut summary = Vec::new();
    let hopfs: Vec<_> = eq.events_of(EventKind::Hopf).cloned().collect();
    for (k, h) in hopfs.iter().enumerate() {
        let branch = seed_periodic_orbit(&model, &spec, h, section.seed_amplitude).and_then(|s| {
            continue_periodic(&model, &spec, &s, section.range, &periodic_options(&section))
        });
        match branch {
            Ok(b) => {
                write_branch_csv(&b, model.n, &outs.path(&format!("periodic_{}.csv", k + 1)))?;
                events.extend(b.events.iter().map(|e| (model.epsilon, e.clone())));
                series.push(branch_series(&format!("periodic {}", k + 1), &b, model.q));
                summary.push(serde_json::json!({
                    "hopf": h.param, "points": b.points.len(), "end": b.end,
                    "saddle_nodes": b.events_of(EventKind::SaddleNode).map(|e| e.param).collect::<Vec<_>>(),
                }));
            }
            Err(e) => summary.push(serde_json::json!({ "hopf": h.param, "error": e.to_string() })),
        }
    }
    let refs: Vec<(f64, &hystnet::continuation::BifurcationPoint)> =
        events.iter().map(|(e, p)| (*e, p)).collect();
    write_events_csv(&refs, &outs.path("events.csv"))?;
    write_json(
        &serde_json::json!({ "param": spec.free.label(), "epsilon": model.epsilon, "branches": summary }),
        &outs.path("bifurcate.json"),
    )?;
    if global.svg.is_some() {
        Plot {
            title: format!("Branches in {}", spec.free.label()),
            x_label: spec.free.label(),
            y_label: format!("max u_{}", model.q + 1),
            series,
        }
        .write(&outs.figure(global, "branches.svg")?.expect("figures enabled"))?;
    }
    outs.manifest("bifurcate", &config)?;
    for (_, e) in &events {
        println!("{:?} at {} = {} (frequency {})", e.kind, spec.free.label(), e.param, e.frequency);
    }
    Ok(())
}

fn sweep(
    global: &Global,
    args: &ContinuationArgs,
    grid: Option<&str>,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let mut config = with_continuation(load(global)?, args)?;
    if let Some(g) = grid {
        config.sweep = Some(SweepSection {
            eps_grid: parse_grid(g)?,
        });
    }
    let config = revalidate(config)?;
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| cfg_err("sweep.eps_grid", "required (or pass --eps-grid a:b:n)"))?
        .eps_grid
        .clone();
    let model = config.model()?;
    let spec = config.param_spec()?;
    let section = config.continuation_section()?.clone();
    let opts = SweepOptions {
        mu_range: section.range,
        equilibria: equilibrium_options(&section),
        periodic: PeriodicOptions {
            stop_at_first_sn: true,
            ..periodic_options(&section)
        },
        seed_amplitude: section.seed_amplitude,
        ..Default::default()
    };
    let map = two_parameter_map(&model, &grid, &spec, &opts)?;
    let mut outs = Outputs::new(out.unwrap_or_else(|| global.out_dir.clone()))?;
    let events: Vec<_> = map
        .slices
        .iter()
        .flat_map(|s| s.hopf.iter().chain(&s.saddle_nodes).map(move |e| (s.epsilon, e)))
        .collect();
    write_events_csv(&events, &outs.path("events.csv"))?;
    let mut rows = Vec::new();
    for (kind, curves) in [("hopf", &map.hopf_curves), ("saddle_node", &map.sn_curves)] {
        for (k, c) in curves.iter().enumerate() {
            for &(e, m) in c {
                rows.push(vec![kind.into(), (k + 1).to_string(), fmt_f64(e), fmt_f64(m)]);
            }
        }
    }
    write_table(
        &outs.path("curves.csv"),
        &["kind", "curve", "eps", "mu"].map(String::from),
        &rows,
    )?;
    write_json(&map, &outs.path("sweep.json"))?;
    if global.svg.is_some() {
        let mut series = Vec::new();
        for (k, c) in map.hopf_curves.iter().enumerate() {
            series.push(Series::scatter(format!("Hopf {}", k + 1), c.clone()));
        }
        for (k, c) in map.sn_curves.iter().enumerate() {
            series.push(Series::scatter(format!("SN {}", k + 1), c.clone()));
        }
        Plot {
            title: "Two-parameter map".into(),
            x_label: "epsilon".into(),
            y_label: spec.free.label(),
            series,
        }
        .write(&outs.figure(global, "sweep.svg")?.expect("figures enabled"))?;
    }
    outs.manifest("sweep", &config)?;
    for s in &map.slices {
        for f in &s.failures {
            eprintln!("eps = {}: {f}", s.epsilon);
        }
    }
    println!(
        "{} slices, {} events, SN fold in eps: {:?}",
        map.slices.len(),
        events.len(),
        map.sn_fold_epsilon
    );
    Ok(())
}

fn write_trigger_table(
    config: &Config,
    sf: &hystnet::slowflow::SlowFlowModel,
    path: &Path,
) -> Result<(), Error> {
    let t = config
        .trigger
        .as_ref()
        .ok_or_else(|| cfg_err("trigger", "section required"))?;
    let f = config.trigger_forcing()?;
    let a_bar = trigger_threshold(sf, t.delta)?;
    let mut rows = Vec::new();
    for &s in &t.amplitudes {
        let scaled: Vec<f64> = f.iter().map(|v| v * s).collect();
        let plan = required_trigger_time(sf, &scaled, t.delta, t.method)?;
        rows.push(vec![
            fmt_f64(s),
            fmt_f64(t.delta),
            fmt_f64(a_bar),
            fmt_f64(plan.t_req),
            fmt_f64(plan.t_req * sf.epsilon),
        ]);
    }
    write_table(
        path,
        &["scale", "delta", "a_bar", "t_req", "slow_time"].map(String::from),
        &rows,
    )
}

fn trigger(global: &Global, out: Option<PathBuf>) -> Result<(), Error> {
    let config = load(global)?;
    let model = config.model()?;
    let sf = slow_flow_for(&model, config.regime())?;
    let mut outs = Outputs::new(global.out_dir.clone())?;
    let path = match out {
        Some(p) => {
            outs.record(&p);
            p
        }
        None => outs.path("trigger.csv"),
    };
    write_trigger_table(&config, &sf, &path)?;
    outs.manifest("trigger", &config)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn design(global: &Global, out: Option<PathBuf>) -> Result<(), Error> {
    let mut config = load(global)?;
    if config.design.is_none() {
        config.design = Some(DesignSection::default());
    }
    let section = config.design.clone().unwrap_or_default();
    let rows = design_report(config.network_file(), section.delta, section.forcing);
    let mut outs = Outputs::new(global.out_dir.clone())?;
    let path = match out {
        Some(p) => {
            outs.record(&p);
            p
        }
        None => outs.path("design.csv"),
    };
    write_design_csv(&rows, &path)?;
    write_json(&rows, &outs.path("design.json"))?;
    outs.manifest("design", &config)?;
    for (r, row) in rows.iter().enumerate() {
        println!(
            "{:>3}  Q={:<3} eps_max={}  t_req={}{}",
            r + 1,
            row.q,
            row.eps_max.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into()),
            row.t_req.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            row.error.as_ref().map(|e| format!("  ({e})")).unwrap_or_default(),
        );
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() || matches!(e, Error::Io { .. }) {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Simulate { out, sample_every } => simulate(g, out, sample_every),
        Command::Slowflow => slowflow(g).map(|_| None),
        Command::Bifurcate { cont, out } => bifurcate(g, &cont, out).map(|_| None),
        Command::Sweep { cont, eps_grid, out } => {
            sweep(g, &cont, eps_grid.as_deref(), out).map(|_| None)
        }
        Command::Trigger { out } => trigger(g, out).map(|_| None),
        Command::Design { out } => design(g, out).map(|_| None),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        // outputs were written, but the run did not finish
        Ok(Some(e)) | Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
