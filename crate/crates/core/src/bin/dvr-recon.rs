use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use dvr_recon::config::{ExperimentConfig, SweepKind};
use dvr_recon::experiment::{
    confidence_ranges, field_from_modes, median, modes_at, monte_carlo, profile_compare, pulse_in_water_column,
    write_confidence_summary, write_monte_carlo_csv, write_spacing_csv, write_sweep_csv, FrequencySweep,
    Perturbation, PulseSettings, SpacingSweep,
};
use dvr_recon::{Error, Result};

#[derive(Parser)]
#[command(name = "dvr-recon", version, about = "Wavefield reconstruction experiments from vertical-array samples")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides noise.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides output.dir.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Normal modes at source.frequency.
    Modes,
    /// DVR depths and cardinal functions of the array basis.
    DvrDump,
    /// CW field profiles at source.frequency for every range.
    Cw,
    /// Pulse arrival patterns for every centre frequency and range.
    Pulse,
    /// Fidelity versus frequency with confidence ranges.
    SweepFrequency,
    /// Pulse fidelity versus hydrophone spacing.
    SweepSpacing,
    /// Exact profile against noiseless, noisy and averaged reconstructions.
    ProfileCompare,
    /// Fidelity statistics over independent noise trials.
    MonteCarlo,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Resolution(_) => 3,
                _ => 1,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::from_toml_str("[source]\nz_s = 99.0\n")?,
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.clone();
    }
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    match cli.command {
        Command::Modes => modes(&cfg, &dir),
        Command::DvrDump => dvr_dump(&cfg, &dir),
        Command::Cw => cw(&cfg, &dir),
        Command::Pulse => pulse(&cfg, &dir),
        Command::SweepFrequency => sweep_frequency(&cfg, &dir),
        Command::SweepSpacing => sweep_spacing(&cfg, &dir),
        Command::ProfileCompare => compare(&cfg, &dir),
        Command::MonteCarlo => monte_carlo_cmd(&cfg, &dir),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    info!("writing {}", dir.join(name).display());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn modes(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let f = cfg.frequency()?;
    let set = modes_at(&cfg.environment, f, cfg.modes.options())?;
    info!("{} modes at {f} Hz", set.mode_count());
    set.write_summary_csv(create(dir, "modes.csv")?)?;
    let mut out = create(dir, "mode_shapes.csv")?;
    write!(out, "z_m")?;
    for m in 0..set.mode_count() {
        write!(out, ",psi_{}", m + 1)?;
    }
    writeln!(out)?;
    for i in 0..set.grid().n_points() {
        write!(out, "{}", set.grid().z(i))?;
        for m in 0..set.mode_count() {
            write!(out, ",{}", set.shape(m)[i])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn dvr_dump(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let basis = cfg.array()?.basis(&cfg.environment)?;
    let mut table = create(dir, "dvr_grid.csv")?;
    let mut curves = create(dir, "dvr_functions.csv")?;
    basis.write_csv(&mut table, &mut curves, 1001)?;
    table.flush()?;
    curves.flush()?;
    Ok(())
}

fn cw(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let f = cfg.frequency()?;
    let set = modes_at(&cfg.environment, f, cfg.modes.options())?;
    for &r in cfg.ranges()? {
        let field = field_from_modes(&cfg.environment, &set, cfg.source.z_s, r)?;
        let mut out = create(dir, &format!("cw_f{f}_r{r}.csv"))?;
        field.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn pulse_settings(cfg: &ExperimentConfig) -> Result<PulseSettings> {
    let p = cfg.pulse()?;
    Ok(PulseSettings {
        window: p.window()?,
        n_freq: p.n_freq,
        n_time: p.n_time,
        n_depth: p.n_depth,
    })
}

fn pulse(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let settings = pulse_settings(cfg)?;
    for &f_c in &cfg.pulse()?.f_c {
        for &r in cfg.ranges()? {
            let field =
                pulse_in_water_column(&cfg.environment, cfg.modes.options(), cfg.source.z_s, r, f_c, &settings)?;
            let mut out = create(dir, &format!("pulse_fc{f_c}_r{r}.csv"))?;
            field.write_csv(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn sweep_of_kind(cfg: &ExperimentConfig, kind: SweepKind) -> Result<(Vec<f64>, f64)> {
    match &cfg.sweep {
        Some(s) if s.kind == kind => Ok((s.grid()?, s.threshold)),
        Some(_) => Err(Error::Config(format!("sweep.kind must be {kind:?} for this command").to_lowercase())),
        None => Err(Error::Config("a [sweep] section is required for this command".into())),
    }
}

fn perturbations(cfg: &ExperimentConfig) -> Vec<Perturbation> {
    cfg.noise
        .as_ref()
        .map(|n| {
            n.snr_db
                .iter()
                .map(|&snr_db| Perturbation {
                    snr_db,
                    varsigma: n.varsigma,
                    realizations: n.realizations,
                    kind: n.kind,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn seed(cfg: &ExperimentConfig) -> u64 {
    cfg.noise.as_ref().and_then(|n| n.seed).unwrap_or(0)
}

fn sweep_frequency(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let (frequencies, threshold) = sweep_of_kind(cfg, SweepKind::Frequency)?;
    let sweep = FrequencySweep {
        env: cfg.environment,
        options: cfg.modes.options(),
        frequencies,
        ranges: cfg.ranges()?.to_vec(),
        sources: vec![cfg.source.z_s],
        bases: vec![cfg.array()?.basis(&cfg.environment)?],
        perturbations: perturbations(cfg),
        seed: seed(cfg),
    };
    let records = sweep.run()?;
    let mut out = create(dir, "sweep_frequency.csv")?;
    write_sweep_csv(&records, &mut out)?;
    out.flush()?;
    let ranges = confidence_ranges(&records, threshold)?;
    let mut out = create(dir, "confidence_ranges.toml")?;
    write_confidence_summary(&ranges, &mut out)?;
    out.flush()?;
    Ok(())
}

fn sweep_spacing(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let (spacings, _) = sweep_of_kind(cfg, SweepKind::Spacing)?;
    for &r in cfg.ranges()? {
        let sweep = SpacingSweep {
            env: cfg.environment,
            options: cfg.modes.options(),
            source_depth: cfg.source.z_s,
            range: r,
            spacings: spacings.clone(),
            centre_frequencies: cfg.pulse()?.f_c.clone(),
            pulse: pulse_settings(cfg)?,
        };
        let records = sweep.run()?;
        let mut out = create(dir, &format!("sweep_spacing_r{r}.csv"))?;
        write_spacing_csv(&records, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

/// The first SNR of the noise block with its displacement and averaging.
fn single_perturbation(cfg: &ExperimentConfig) -> Result<Perturbation> {
    cfg.noise()?;
    Ok(perturbations(cfg)[0])
}

fn first_range(cfg: &ExperimentConfig) -> Result<f64> {
    Ok(cfg.ranges()?[0])
}

fn compare(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let f = cfg.frequency()?;
    let r = first_range(cfg)?;
    let env = &cfg.environment;
    let set = modes_at(env, f, cfg.modes.options())?;
    let field = field_from_modes(env, &set, cfg.source.z_s, r)?;
    let basis = cfg.array()?.basis(env)?;
    let cmp = profile_compare(&field, &basis, env.water_depth, &single_perturbation(cfg)?, seed(cfg))?;
    let mut out = create(dir, "profile_compare.csv")?;
    cmp.write_csv(&mut out)?;
    out.flush()?;
    let mut out = create(dir, "profile_compare.toml")?;
    cmp.write_summary(&mut out)?;
    out.flush()?;
    Ok(())
}

fn monte_carlo_cmd(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let f = cfg.frequency()?;
    let r = first_range(cfg)?;
    let env = &cfg.environment;
    let noise = cfg.noise()?;
    let set = modes_at(env, f, cfg.modes.options())?;
    let field = field_from_modes(env, &set, cfg.source.z_s, r)?;
    let basis = cfg.array()?.basis(env)?;
    let list = perturbations(cfg);
    let records = monte_carlo(&field, &basis, env.water_depth, &list, noise.trials, seed(cfg))?;
    let mut out = create(dir, "monte_carlo.csv")?;
    write_monte_carlo_csv(&records, &mut out)?;
    out.flush()?;
    let mut out = create(dir, "monte_carlo_summary.toml")?;
    for p in &list {
        let of = |pick: fn(&dvr_recon::experiment::MonteCarloRecord) -> f64| {
            let v: Vec<f64> = records.iter().filter(|m| m.snr_db == p.snr_db).map(pick).collect();
            median(&v)
        };
        writeln!(out, "[\"snr={} dB\"]", p.snr_db)?;
        writeln!(out, "median_f_single = {}", of(|m| m.f_single))?;
        writeln!(out, "median_f_averaged = {}", of(|m| m.f_averaged))?;
        writeln!(out, "median_realized_snr_db = {}", of(|m| m.realized_snr_db))?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
