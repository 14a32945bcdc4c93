use std::fs;
use std::io::BufReader;
use std::path::Path;

use photon_fringes::classical::classical_visibility;
use photon_fringes::screen::{
    accumulate_clicks, classical_map, read_map_csv, steady_map, visibility_along_cut, write_map_csv, write_pgm,
    AngularMap, CutSpec, FringeOptions, FringeOutcome, ImageScaling,
};
use photon_fringes::selftest::{run_all, Faults};
use photon_fringes::steady::{steady_click_rate, steady_visibility};
use photon_fringes::trajectory::run;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, UNITS};
use crate::CliError;

fn write_file(out: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("metadata serializes") + "\n";
    write_file(out, name, text.as_bytes())
}

/// Writes the map as CSV and PGM and returns the image scaling.
fn write_map(out: &Path, cfg: &RunConfig, map: &AngularMap) -> Result<ImageScaling, CliError> {
    let mut csv = Vec::new();
    write_map_csv(map, &mut csv).expect("writing to memory");
    write_file(out, &cfg.outputs.csv, &csv)?;
    let mut pgm = Vec::new();
    let scaling = write_pgm(map, &mut pgm).expect("writing to memory");
    write_file(out, &cfg.outputs.pgm, &pgm)?;
    Ok(scaling)
}

/// Fringe summary along the equator for metadata; analysis failures are
/// recorded, not raised.
fn equatorial_summary(map: &AngularMap) -> Value {
    match visibility_along_cut(map, &CutSpec::equatorial()) {
        Ok(outcome) => serde_json::to_value(outcome).expect("report serializes"),
        Err(e) => json!({ "result": "error", "message": e.to_string() }),
    }
}

fn load(config: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.simulation.seed = s;
    }
    Ok(cfg)
}

pub fn pattern(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = load(config, seed)?;
    let exp = cfg.experiment()?;
    let map = steady_map(&exp, cfg.grid()?)?;
    let image = write_map(out, &cfg, &map)?;
    let meta = json!({
        "command": "pattern",
        "config": cfg,
        "units": UNITS,
        "experiment": exp.snapshot(),
        "grid": map.grid().to_string(),
        "image": image,
        "analytic_visibility": steady_visibility(&exp),
        "click_rate": steady_click_rate(&exp),
        "equatorial_cut": equatorial_summary(&map),
    });
    write_json(out, &cfg.outputs.metadata, &meta)?;
    println!("pattern: wrote {}, {}, {}", cfg.outputs.csv, cfg.outputs.pgm, cfg.outputs.metadata);
    Ok(())
}

pub fn simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = load(config, seed)?;
    let exp = cfg.experiment()?;
    let sim = &cfg.simulation;
    if sim.burn_in >= sim.duration {
        return Err(CliError::Config("simulation.burn_in: must be shorter than simulation.duration".into()));
    }
    let grid = cfg.grid()?;
    let stream = run(&exp, sim.duration, sim.dt, sim.seed)?;

    let mut clicks = Vec::new();
    stream.write_csv(&mut clicks).expect("writing to memory");
    write_file(out, &cfg.outputs.clicks, &clicks)?;

    let histogram = accumulate_clicks(&stream, grid, sim.burn_in)?;
    let image = write_map(out, &cfg, &histogram)?;
    let counted = histogram.total();
    let meta = json!({
        "command": "simulate",
        "config": cfg,
        "stream": stream.metadata(),
        "burn_in": sim.burn_in,
        "grid": grid.to_string(),
        "histogram_clicks": counted,
        "measured_rate": counted / (sim.duration - sim.burn_in),
        "steady_rate": steady_click_rate(&exp),
        "image": image,
    });
    write_json(out, &cfg.outputs.metadata, &meta)?;
    println!(
        "simulate: seed {}, {} clicks ({} after burn-in); wrote {}, {}, {}, {}",
        sim.seed,
        stream.records.len(),
        counted,
        cfg.outputs.clicks,
        cfg.outputs.csv,
        cfg.outputs.pgm,
        cfg.outputs.metadata
    );
    Ok(())
}

pub fn classical(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let cfg = load(config, seed)?;
    let model = cfg.classical()?;
    let map = classical_map(&model, cfg.grid()?)?;
    let image = write_map(out, &cfg, &map)?;
    let meta = json!({
        "command": "classical",
        "config": cfg,
        "units": UNITS,
        "classical": model.snapshot(),
        "grid": map.grid().to_string(),
        "image": image,
        "analytic_visibility": classical_visibility(model.e01, model.e02).ok(),
        "equatorial_cut": equatorial_summary(&map),
    });
    write_json(out, &cfg.outputs.metadata, &meta)?;
    println!("classical: wrote {}, {}, {}", cfg.outputs.csv, cfg.outputs.pgm, cfg.outputs.metadata);
    Ok(())
}

pub fn visibility(map_path: &Path, cut: CutSpec, smoothing: Option<usize>) -> Result<(), CliError> {
    let file =
        fs::File::open(map_path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", map_path.display())))?;
    let map =
        read_map_csv(BufReader::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", map_path.display())))?;
    let options = match smoothing {
        Some(s) => FringeOptions { smoothing: s },
        None => FringeOptions::for_kind(map.kind()),
    };
    let profile = map.profile(&cut)?;

    let mut line = json!({
        "map": map_path.display().to_string(),
        "kind": map.kind(),
        "cut": cut,
        "smoothing": options.smoothing,
    });
    let fields = &mut line.as_object_mut().expect("object");
    let human = match profile.analyze(&options) {
        Ok(FringeOutcome::Fringes(r)) => {
            let text = match (r.spacing, r.fringe_count) {
                (Some(s), Some(n)) => format!(
                    "visibility {:.6}; spacing {s:.6}, {n} fringes across the cut; {} maxima, {} minima",
                    r.visibility, r.maxima, r.minima
                ),
                _ => format!("visibility {:.6}; {} maxima, {} minima", r.visibility, r.maxima, r.minima),
            };
            fields.extend(
                serde_json::to_value(FringeOutcome::Fringes(r)).expect("serializes").as_object().unwrap().clone(),
            );
            text
        }
        Ok(FringeOutcome::NoFringes) => {
            fields.insert("result".into(), "no_fringes".into());
            "no fringes along the cut".to_string()
        }
        Err(photon_fringes::Error::InsufficientExtrema { found, needed }) => {
            fields.insert("result".into(), "insufficient_extrema".into());
            fields.insert("extrema".into(), found.into());
            format!("no fringes: profile is not flat but has only {found} extrema ({needed} needed)")
        }
        Err(e) => return Err(e.into()),
    };
    println!("{line}");
    println!("{human}");
    Ok(())
}

pub fn selftest(faults: Faults) -> Result<(), CliError> {
    let report = run_all(faults);
    for r in &report {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed: Vec<_> = report.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        println!("selftest: {} suites passed", report.len());
        Ok(())
    } else {
        Err(CliError::SelfTest(failed.join(", ")))
    }
}
