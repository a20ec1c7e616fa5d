mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use rydpair::atomic::{AtomicData, FineLevel, Species};
use rydpair::channel::Channel;
use rydpair::profile::{angular_profile, f_factor, theta_grid, SpinConfiguration};
use rydpair::protocol::{full_budget, CrosstalkConfig, LatticeGeometry, ProtocolConfig};
use rydpair::radial::{RadialMatrix, RadialMethod};
use rydpair::search::{
    channel_levels, enumerate_channels, find_resonances, records_to_csv, records_to_json,
    Assignment, SearchConfig, SpeciesPair,
};
use rydpair::units::MHZ_PER_GHZ;
use rydpair::{Error, Execution, HalfInt};

use output::{csv_table, Envelope, Format, Metadata};

const DATA_ENV: &str = "RYDPAIR_DATA_DIR";

/// Rydberg pair interactions, Förster resonance scans and readout error budgets.
#[derive(Debug, Parser)]
#[command(name = "rydpair", version, about)]
struct Cli {
    /// Directory holding quantum_defects.dat and lifetimes.dat.
    /// Defaults to $RYDPAIR_DATA_DIR, then ./data, then the built-in tables.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write to a file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Evaluate without the thread pool.
    #[arg(long, global = true)]
    sequential: bool,

    /// Use the Numerov integrator for radial elements.
    #[arg(long, global = true)]
    numerov: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Level energies for n in [nmin, nmax].
    Levels(LevelsArgs),
    /// Scan for near-resonant s→p channels.
    Resonances(ResonanceArgs),
    /// U(R) of one channel in resonant and van der Waals form.
    Potential(PotentialArgs),
    /// θ dependence of the van der Waals interaction.
    Angular(AngularArgs),
    /// Error budget of the Rb–Cs readout protocol.
    Budget(BudgetArgs),
}

#[derive(Debug, Args, Serialize)]
struct LevelsArgs {
    species: String,
    nmin: u32,
    nmax: u32,
    /// Orbital momentum as a letter (s, p, d, f) or number.
    l: String,
    /// e.g. 1/2
    j: String,
}

#[derive(Debug, Args, Serialize)]
struct ResonanceArgs {
    #[arg(long, default_value = "RbCs")]
    pair: String,
    #[arg(long, default_value_t = 41)]
    nmin: u32,
    #[arg(long, default_value_t = 89)]
    nmax: u32,
    /// Lower bound for atom b; defaults to nmin − 10.
    #[arg(long)]
    nb_min: Option<u32>,
    /// Upper bound for atom b; defaults to nmax + 10.
    #[arg(long)]
    nb_max: Option<u32>,
    /// Maximum |δ| relative to the ns level spacing of atom a.
    #[arg(long, default_value_t = 0.0005)]
    defect_frac: f64,
    /// Minimum |C3| in GHz·µm³.
    #[arg(long, default_value_t = 1.0)]
    c3_min: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4", value_parser = clap::value_parser!(u8).range(1..=4))]
    channels: Vec<u8>,
}

#[derive(Debug, Args, Serialize)]
struct ChannelSpec {
    #[arg(long, default_value = "RbCs")]
    pair: String,
    /// Principal quantum number of atom a (ns).
    #[arg(long, default_value_t = 48)]
    na: u32,
    /// Principal quantum number of atom b (ns).
    #[arg(long, default_value_t = 51)]
    nb: u32,
    /// `lower-b`: α = n_a p, β = (n_b − 1) p; `lower-a`: α = (n_a − 1) p, β = n_b p.
    #[arg(long, default_value = "lower-b", value_parser = parse_assignment)]
    #[serde(skip)]
    assignment: Assignment,
    #[arg(long, default_value = "antiparallel", value_parser = parse_spin)]
    #[serde(skip)]
    spin: SpinConfiguration,
}

#[derive(Debug, Args, Serialize)]
struct PotentialArgs {
    #[command(flatten)]
    spec: ChannelSpec,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=4))]
    channel: u8,
    /// Explicit separations in µm; overrides the grid.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    rmin: f64,
    #[arg(long, default_value_t = 20.0)]
    rmax: f64,
    /// Logarithmically spaced grid points.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Angle between pair axis and quantization axis, degrees.
    #[arg(long, default_value_t = 90.0)]
    theta: f64,
}

#[derive(Debug, Args, Serialize)]
struct AngularArgs {
    #[arg(long, default_value = "CsCs")]
    pair: String,
    #[arg(long, default_value_t = 81)]
    na: u32,
    #[arg(long, default_value_t = 81)]
    nb: u32,
    #[arg(long, default_value = "lower-b", value_parser = parse_assignment)]
    #[serde(skip)]
    assignment: Assignment,
    #[arg(long, default_value = "parallel", value_parser = parse_spin)]
    #[serde(skip)]
    spin: SpinConfiguration,
    /// Separation in µm.
    #[arg(long, default_value_t = 12.7)]
    r: f64,
    #[arg(long, default_value_t = 181)]
    points: usize,
}

#[derive(Debug, Args, Serialize)]
struct BudgetArgs {
    /// Same-species lattice period in µm.
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    d: f64,
    #[arg(long, default_value_t = 48)]
    rb_n: u32,
    #[arg(long, default_value_t = 51)]
    cs_n: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=4))]
    channel: u8,
    /// Ω_Rb/2π in MHz; defaults to the nulling value.
    #[arg(long)]
    omega_rb: Option<f64>,
    /// Ω_Cs/2π in MHz; defaults to Ω_Rb.
    #[arg(long)]
    omega_cs: Option<f64>,
    /// Rb Rydberg lifetime in µs; default from lifetimes.dat.
    #[arg(long)]
    tau_rb: Option<f64>,
    /// Cs Rydberg lifetime in µs; default from lifetimes.dat.
    #[arg(long)]
    tau_cs: Option<f64>,
    #[arg(long, default_value_t = 4)]
    neighbors: u32,
    /// Coefficient c in E = c·(U_RbRb/Ω)².
    #[arg(long)]
    transfer_coefficient: Option<f64>,
    /// Rb–Cs pair angle in degrees.
    #[arg(long, default_value_t = 90.0)]
    theta_rbcs: f64,
    /// Rb–Rb pair angle in degrees.
    #[arg(long, default_value_t = 90.0)]
    theta_rbrb: f64,
    /// Imaging wavelength in nm.
    #[arg(long, default_value_t = 780.0)]
    wavelength: f64,
    /// Distance to the neighbouring qubit for photon crosstalk, µm; defaults to 5λ.
    #[arg(long)]
    crosstalk_distance: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    na: f64,
    #[arg(long, default_value_t = 1.0)]
    optics_efficiency: f64,
    #[arg(long, default_value_t = 0.5)]
    detector_efficiency: f64,
}

fn parse_assignment(s: &str) -> std::result::Result<Assignment, String> {
    match s {
        "lower-b" => Ok(Assignment::LowerB),
        "lower-a" => Ok(Assignment::LowerA),
        _ => Err(format!("expected lower-b or lower-a, got {s:?}")),
    }
}

fn parse_spin(s: &str) -> std::result::Result<SpinConfiguration, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_l(s: &str) -> Result<u32> {
    let t = s.trim().to_ascii_lowercase();
    if let Ok(l) = t.parse() {
        return Ok(l);
    }
    match t.as_str() {
        "s" => Ok(0),
        "p" => Ok(1),
        "d" => Ok(2),
        "f" => Ok(3),
        _ => Err(Error::InvalidArgument(format!("unknown orbital momentum {s:?}")).into()),
    }
}

struct Session {
    radial: RadialMatrix,
    data_source: String,
    exec: Execution,
}

fn load_data(cli: &Cli) -> Result<(AtomicData, String)> {
    let explicit = cli
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from));
    if let Some(dir) = explicit {
        let data = AtomicData::load_dir(&dir)
            .with_context(|| format!("loading data from {}", dir.display()))?;
        return Ok((data, dir.display().to_string()));
    }
    let local = Path::new("data");
    if local.join(rydpair::atomic::DEFECT_FILE).is_file() {
        let data = AtomicData::load_dir(local).context("loading data from ./data")?;
        return Ok((data, "data".into()));
    }
    Ok((AtomicData::bundled(), "built-in".into()))
}

fn context(cli: &Cli) -> Result<Session> {
    let (data, data_source) = load_data(cli)?;
    let method = if cli.numerov {
        RadialMethod::NumericOracle
    } else {
        RadialMethod::Quasiclassical
    };
    Ok(Session {
        radial: RadialMatrix::new(Arc::new(data)).with_method(method),
        data_source,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    })
}

fn envelope(
    cli: &Cli,
    ctx: &Session,
    command: &'static str,
    default: Format,
    config: Value,
) -> Result<Envelope> {
    let format = cli.format.unwrap_or(default);
    if format == Format::Table && command != "budget" {
        return Err(
            Error::InvalidArgument("table output is only available for budget".into()).into(),
        );
    }
    Ok(Envelope {
        format,
        destination: cli.output.clone(),
        metadata: Metadata {
            tool: "rydpair",
            version: env!("CARGO_PKG_VERSION"),
            command,
            data_source: ctx.data_source.clone(),
            data_files: ctx.radial.data().files().to_vec(),
            config: json!({
                "input": config,
                "radial_method": ctx.radial.method(),
                "execution": if ctx.exec == Execution::Sequential { "sequential" } else { "parallel" },
            }),
        },
    })
}

fn num(x: f64) -> String {
    x.to_string()
}

fn cmd_levels(cli: &Cli, args: &LevelsArgs) -> Result<()> {
    let ctx = context(cli)?;
    let species: Species = args.species.parse()?;
    let l = parse_l(&args.l)?;
    let j: HalfInt = args.j.parse()?;
    if args.nmin > args.nmax {
        return Err(Error::InvalidArgument(format!(
            "nmin {} exceeds nmax {}",
            args.nmin, args.nmax
        ))
        .into());
    }
    let mut rows = Vec::new();
    for n in args.nmin..=args.nmax {
        let level = FineLevel::new(species, n, l, j)?;
        let nstar = ctx.radial.data().effective_n(&level)?;
        let e = ctx.radial.data().level_energy(&level)?;
        rows.push((level, nstar, e));
    }
    let env = envelope(
        cli,
        &ctx,
        "levels",
        Format::Csv,
        serde_json::to_value(args)?,
    )?;
    env.emit(
        || {
            Ok(csv_table(
                &["level", "n", "n_star", "energy_GHz"],
                rows.iter()
                    .map(|(lv, ns, e)| vec![lv.to_string(), lv.n.to_string(), num(*ns), num(*e)]),
            ))
        },
        || {
            Value::Array(
                rows.iter()
                    .map(|(lv, ns, e)| json!({"level": lv.to_string(), "n": lv.n, "n_star": ns, "energy_GHz": e}))
                    .collect(),
            )
        },
    )
}

fn cmd_resonances(cli: &Cli, args: &ResonanceArgs) -> Result<()> {
    let ctx = context(cli)?;
    let pair: SpeciesPair = args.pair.parse()?;
    let mut cfg = SearchConfig::new(pair, args.nmin, args.nmax);
    if let Some(v) = args.nb_min {
        cfg.n_b_min = v;
    }
    if let Some(v) = args.nb_max {
        cfg.n_b_max = v;
    }
    cfg.defect_fraction = args.defect_frac;
    cfg.c3_floor = args.c3_min;
    cfg.channels = args.channels.clone();
    let records = find_resonances(&ctx.radial, &cfg, ctx.exec)?;
    let env = envelope(
        cli,
        &ctx,
        "resonances",
        Format::Csv,
        serde_json::to_value(&cfg)?,
    )?;
    env.emit(
        || Ok(records_to_csv(&records)?),
        || records_to_json(&records),
    )
}

fn channel_from_spec(ctx: &Session, spec: &ChannelSpec, k: u8) -> Result<Channel> {
    let pair: SpeciesPair = spec.pair.parse()?;
    let [a, b, alpha, beta] = channel_levels(pair, spec.na, spec.nb, spec.assignment, k)?;
    Ok(Channel::compute(&ctx.radial, a, b, alpha, beta)?)
}

fn separations(args: &PotentialArgs) -> Result<Vec<f64>> {
    let rs = match &args.r {
        Some(list) => list.clone(),
        None => {
            if args.points == 0 {
                Vec::new()
            } else if args.points == 1 {
                vec![args.rmin]
            } else {
                let ratio = (args.rmax / args.rmin).ln() / (args.points - 1) as f64;
                (0..args.points)
                    .map(|i| args.rmin * (ratio * i as f64).exp())
                    .collect()
            }
        }
    };
    if rs.is_empty() {
        return Err(Error::InvalidArgument("no separations requested".into()).into());
    }
    if let Some(bad) = rs.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(format!("separation {bad} µm must be positive")).into());
    }
    Ok(rs)
}

fn cmd_potential(cli: &Cli, args: &PotentialArgs) -> Result<()> {
    let ctx = context(cli)?;
    let rs = separations(args)?;
    let ch = channel_from_spec(&ctx, &args.spec, args.channel)?;
    let theta = args.theta.to_radians();
    let psi = args.spec.spin.state();
    let f = f_factor(&psi, theta, &ch.coupling())?;
    let cvdw = ch.vdw_coefficient(f)?;
    let rows: Vec<(f64, f64, f64)> = rs
        .iter()
        .map(|&r| (r, ch.pair_potential(f, r), cvdw / r.powi(6) * MHZ_PER_GHZ))
        .collect();
    let rc = ch.crossover_radius(f).ok();
    let config = json!({
        "args": args,
        "assignment": args.spec.assignment,
        "spin": args.spec.spin,
        "channel": ch.label(),
        "delta_MHz": ch.delta_mhz,
        "C3_GHz_um3": ch.c3,
        "f": f,
        "Rc_um": rc,
    });
    let env = envelope(cli, &ctx, "potential", Format::Csv, config)?;
    env.emit(
        || {
            Ok(csv_table(
                &["R_um", "U_exact_MHz", "U_vdW_MHz"],
                rows.iter().map(|(r, u, v)| vec![num(*r), num(*u), num(*v)]),
            ))
        },
        || {
            Value::Array(
                rows.iter()
                    .map(|(r, u, v)| json!({"R_um": r, "U_exact_MHz": u, "U_vdW_MHz": v}))
                    .collect(),
            )
        },
    )
}

fn cmd_angular(cli: &Cli, args: &AngularArgs) -> Result<()> {
    let ctx = context(cli)?;
    let pair: SpeciesPair = args.pair.parse()?;
    if args.points == 0 {
        return Err(Error::InvalidArgument("need at least one angle".into()).into());
    }
    let channels: Vec<Channel> = if pair.same_species() && args.na == args.nb {
        enumerate_channels(&ctx.radial, pair, args.na, args.nb)?
    } else {
        (1..=4)
            .map(|k| {
                let [a, b, al, be] = channel_levels(pair, args.na, args.nb, args.assignment, k)?;
                Channel::compute(&ctx.radial, a, b, al, be)
            })
            .collect::<rydpair::Result<_>>()?
    };
    let psi = args.spin.state();
    let profile = angular_profile(&psi, &channels, args.r, &theta_grid(args.points), ctx.exec)?;
    let config = json!({
        "args": args,
        "assignment": args.assignment,
        "spin": args.spin,
        "channels": channels.iter().map(Channel::label).collect::<Vec<_>>(),
    });
    let env = envelope(cli, &ctx, "angular", Format::Csv, config)?;
    env.emit(
        || Ok(profile.to_csv()),
        || serde_json::to_value(&profile.samples).expect("samples serialize"),
    )
}

fn cmd_budget(cli: &Cli, args: &BudgetArgs) -> Result<()> {
    let ctx = context(cli)?;
    let geometry = LatticeGeometry {
        period_um: args.d,
        theta_interspecies: args.theta_rbcs.to_radians(),
        theta_same_species: args.theta_rbrb.to_radians(),
    };
    geometry.validate()?;
    let crosstalk = CrosstalkConfig {
        wavelength_nm: args.wavelength,
        distance_um: args
            .crosstalk_distance
            .unwrap_or(5.0 * args.wavelength * 1e-3),
        numerical_aperture: args.na,
        optics_efficiency: args.optics_efficiency,
        detector_efficiency: args.detector_efficiency,
    };
    let config = ProtocolConfig {
        rb_level: FineLevel::s(Species::Rb87, args.rb_n)?,
        cs_level: FineLevel::s(Species::Cs133, args.cs_n)?,
        channel: args.channel,
        omega_rb_mhz: args.omega_rb,
        omega_cs_mhz: args.omega_cs,
        tau_rb_us: args.tau_rb,
        tau_cs_us: args.tau_cs,
        neighbors: args.neighbors,
        transfer_coefficient: args.transfer_coefficient,
        crosstalk,
        ..ProtocolConfig::default()
    };
    let budget = full_budget(&ctx.radial, &config, &geometry)?;
    let inputs = json!({ "config": config, "geometry": geometry });
    let env = envelope(cli, &ctx, "budget", Format::Json, inputs)?;
    match env.format {
        Format::Table => env.write(&budget.to_table()),
        _ => env.emit(
            || {
                let v = serde_json::to_value(&budget)?;
                let mut rows = Vec::new();
                flatten("", &v, &mut rows);
                Ok(csv_table(
                    &["quantity", "value"],
                    rows.into_iter().map(|(k, v)| vec![k, v]),
                ))
            },
            || serde_json::to_value(&budget).expect("budget serializes"),
        ),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Levels(a) => cmd_levels(cli, a),
        Command::Resonances(a) => cmd_resonances(cli, a),
        Command::Potential(a) => cmd_potential(cli, a),
        Command::Angular(a) => cmd_angular(cli, a),
        Command::Budget(a) => cmd_budget(cli, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 1;
    };
    match e {
        Error::InvalidArgument(_) | Error::Unsupported(_) => 2,
        Error::DataNotFound(_) | Error::Parse { .. } | Error::Io(_) => 3,
        Error::DegenerateChannel(_)
        | Error::ResonantChannel(_)
        | Error::UndefinedCrossover(_)
        | Error::NumericFailure(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbital_letters() {
        assert_eq!(parse_l("s").unwrap(), 0);
        assert_eq!(parse_l("P").unwrap(), 1);
        assert_eq!(parse_l("2").unwrap(), 2);
        assert!(parse_l("x").is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        let e: anyhow::Error = Error::DataNotFound("x".into()).into();
        assert_eq!(exit_code(&e), 3);
        let e: anyhow::Error =
            anyhow::Error::from(Error::NumericFailure("x".into())).context("outer");
        assert_eq!(exit_code(&e), 4);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn log_grid_spans_range() {
        let args = PotentialArgs {
            spec: ChannelSpec {
                pair: "RbCs".into(),
                na: 48,
                nb: 51,
                assignment: Assignment::LowerB,
                spin: SpinConfiguration::Antiparallel,
            },
            channel: 3,
            r: None,
            rmin: 1.0,
            rmax: 20.0,
            points: 5,
            theta: 90.0,
        };
        let rs = separations(&args).unwrap();
        assert_eq!(rs.len(), 5);
        assert!((rs[4] - 20.0).abs() < 1e-12);
    }
}
