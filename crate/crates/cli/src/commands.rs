use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use whid::allocation::{group_conjugates, AllocationProblem, FitResult, PoleZeroGroups};
use whid::benchmark::{run_monte_carlo, MonteCarloConfig};
use whid::bla::{estimate_frf, fit_rational, generate_periodic_gaussian};
use whid::brute_force::{scan, DEFAULT_TOP_K, MAX_GROUPS};
use whid::ga::{self, GaConfig, Selection};
use whid::io;
use whid::lti::{cheby1_zpk, cheby2_zpk, tf_from_zpk, zpk_from_tf, PoleZeroGain, Signal, TransferFunction, CONJ_TOL};
use whid::model::{random_wh_system, simulate_wh, SystemRecipe, WienerHammersteinModel};
use whid::seeds;

use crate::args::*;
use crate::manifest::RunManifest;

pub fn run(command: Command) -> Result<()> {
    match &command {
        Command::Simulate(a) => simulate(&command, a),
        Command::DesignFilter(a) => design_filter(&command, a),
        Command::Identify(a) => identify(&command, a),
        Command::Benchmark(a) => benchmark(&command, a),
        Command::Replay(a) => {
            let manifest: RunManifest = io::read_json(&a.manifest)?;
            if let Command::Replay(_) = manifest.command {
                bail!("manifest records a replay; refusing to recurse");
            }
            run(manifest.command)
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Signal file names: `u.csv`, or `u_0.csv`, `u_1.csv`, ... for several realizations.
fn signal_name(stem: &str, index: usize, count: usize) -> String {
    if count == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{index}.csv")
    }
}

fn simulate(command: &Command, a: &SimulateArgs) -> Result<()> {
    if a.realizations == 0 {
        bail!(whid::Error::InvalidInput("--realizations must be at least 1".into()));
    }
    prepare_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new(command, to_value(a), Some(a.seed));

    let (model, zpk, recipe) = match (&a.model, a.order) {
        (Some(path), _) => {
            manifest.inputs.push(path.clone());
            let model: WienerHammersteinModel = io::read_json(path)?;
            let zpk = zpk_from_tf(&model.front)?.cascade(&zpk_from_tf(&model.back)?);
            (model, zpk, None)
        }
        (None, Some(order)) => {
            let recipe = SystemRecipe::standard(order, seeds::derive(a.seed, seeds::SYSTEM));
            let system = random_wh_system(&recipe)?;
            let zpk = system.overall_zpk();
            (system.model, zpk, Some(recipe))
        }
        (None, None) => bail!(whid::Error::InvalidInput("give --model or --order".into())),
    };
    manifest.config = json!({ "args": to_value(a), "recipe": to_value(&recipe) });

    let excitation = seeds::derive(a.seed, seeds::EXCITATION);
    for r in 0..a.realizations {
        let mut rng = seeds::rng(seeds::derive(excitation, r as u64));
        let u = generate_periodic_gaussian(a.samples, a.std, &mut rng)?;
        let y = simulate_wh(&model, &u)?;
        for (stem, s) in [("u", &u), ("y", &y)] {
            let path = a.out_dir.join(signal_name(stem, r, a.realizations));
            io::write_signal(&path, s)?;
            manifest.outputs.push(io::sidecar_path(&path));
            manifest.outputs.push(path);
        }
    }
    for (name, value) in [("model.json", to_value(&model)), ("zpk.json", to_value(&zpk))] {
        let path = a.out_dir.join(name);
        io::write_json(&path, &value)?;
        manifest.outputs.push(path);
    }
    manifest.write(&a.out_dir)?;
    println!("wrote {} realization(s) of {} samples to {}", a.realizations, a.samples, a.out_dir.display());
    Ok(())
}

fn design_filter(command: &Command, a: &DesignArgs) -> Result<()> {
    let zpk = match a.kind {
        FilterKind::Cheby1 => cheby1_zpk(a.order, a.level, a.cutoff)?,
        FilterKind::Cheby2 => cheby2_zpk(a.order, a.level, a.cutoff)?,
    };
    let tf = tf_from_zpk(&zpk)?;
    prepare_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new(command, to_value(a), None);
    for (name, value) in [("filter.json", to_value(&tf)), ("filter_zpk.json", to_value(&zpk))] {
        let path = a.out_dir.join(name);
        io::write_json(&path, &value)?;
        manifest.outputs.push(path);
    }
    manifest.write(&a.out_dir)?;
    println!("{}", serde_json::to_string(&tf)?);
    Ok(())
}

/// Reads either a zpk (`{"zeros", "poles", "gain"}`) or a `{"num", "den"}` file.
fn read_dynamics(path: &Path) -> Result<PoleZeroGain> {
    let value: serde_json::Value = io::read_json(path)?;
    if value.get("poles").is_some() {
        let zpk: PoleZeroGain = serde_json::from_value(value).map_err(|e| whid::Error::Parse(format!("{}: {e}", path.display())))?;
        return Ok(zpk);
    }
    let tf: TransferFunction = serde_json::from_value(value).map_err(|e| whid::Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(zpk_from_tf(&tf)?)
}

fn identify(command: &Command, a: &IdentifyArgs) -> Result<()> {
    if a.inputs.len() != a.outputs.len() {
        bail!(whid::Error::InvalidInput(format!(
            "{} input file(s) but {} output file(s)",
            a.inputs.len(),
            a.outputs.len()
        )));
    }
    let us: Vec<Signal> = a.inputs.iter().map(|p| io::read_signal(p)).collect::<whid::Result<_>>()?;
    let ys: Vec<Signal> = a.outputs.iter().map(|p| io::read_signal(p)).collect::<whid::Result<_>>()?;
    prepare_dir(&a.out_dir)?;

    let ga_config = GaConfig {
        population_size: a.pop_size,
        max_generations: a.generations,
        stall_generation_limit: a.stall_limit,
        cost_tolerance: a.tolfun,
        crossover_fraction: a.crossover_fraction,
        mutation_rate: a.mutation_rate,
        elite_count: a.elite,
        selection: match a.selection {
            SelectionArg::Sus => Selection::StochasticUniform,
            SelectionArg::Tournament => Selection::Tournament,
        },
        rng_seed: a.seed,
    };
    if a.method == Method::Ga {
        ga_config.validate()?;
    }
    let mut manifest = RunManifest::new(command, json!({ "args": to_value(a), "ga": to_value(&ga_config) }), Some(a.seed));
    manifest.inputs.extend(a.inputs.iter().chain(&a.outputs).cloned());
    let mut written: Vec<PathBuf> = vec![];

    let zpk = match (&a.zpk, &a.fit_bla) {
        (Some(path), _) => {
            manifest.inputs.push(path.clone());
            read_dynamics(path)?
        }
        (None, Some(orders)) => {
            let &[nb, na] = orders.as_slice() else {
                bail!(whid::Error::InvalidInput("--fit-bla takes two orders, NUM,DEN".into()));
            };
            let frf = estimate_frf(&us, &ys)?;
            let fit = fit_rational(&frf, nb, na)?;
            let path = a.out_dir.join("frf.csv");
            fs::write(&path, io::frf_to_csv(&frf)?)?;
            written.push(path);
            let path = a.out_dir.join("bla.json");
            io::write_json(&path, &json!({ "model": fit.model, "reflected_poles": fit.reflected_poles, "iterations": fit.iterations }))?;
            written.push(path);
            zpk_from_tf(&fit.model)?
        }
        (None, None) => bail!(whid::Error::InvalidInput("give --zpk or --fit-bla".into())),
    };
    let groups = group_conjugates(&zpk, CONJ_TOL)?;
    if a.method == Method::Brute && groups.len() > MAX_GROUPS {
        bail!(whid::Error::Capacity {
            groups: groups.len(),
            max: MAX_GROUPS
        });
    }
    let problem = AllocationProblem::new(groups, &us[0], &ys[0], &a.degrees)?;

    let (bits, fit, evaluations): (_, FitResult, u64) = match a.method {
        Method::Brute => {
            let result = scan(&problem, DEFAULT_TOP_K)?;
            let path = a.out_dir.join("ranked.csv");
            fs::write(&path, io::ranked_to_csv(&result)?)?;
            written.push(path);
            let best = result.best().bits.clone();
            (best.clone(), problem.fit(&best)?, result.evaluations)
        }
        Method::Ga => {
            let (result, fit) = ga::search(&problem, &ga_config)?;
            let path = a.out_dir.join("history.csv");
            fs::write(&path, io::history_to_csv(&result)?)?;
            written.push(path);
            let path = a.out_dir.join("ga.json");
            io::write_json(&path, &result)?;
            written.push(path);
            (result.best_bits.clone(), fit, result.evaluations)
        }
    };

    let path = a.out_dir.join("model.json");
    io::write_json(&path, &fit.model()?)?;
    written.push(path);
    let path = a.out_dir.join("fit.json");
    io::write_json(&path, &fit_report(problem.groups(), &bits.to_string(), &fit, evaluations))?;
    written.push(path);
    manifest.outputs = written;
    manifest.write(&a.out_dir)?;

    println!("groups: {}", problem.num_groups());
    println!("allocation: {bits}");
    println!("evaluations: {evaluations}");
    println!("best mse: {:e}", fit.mse);
    Ok(())
}

fn fit_report(groups: &PoleZeroGroups, bits: &str, fit: &FitResult, evaluations: u64) -> serde_json::Value {
    json!({
        "groups": groups.labels(),
        "allocation": bits,
        "evaluations": evaluations,
        "fit": fit,
    })
}

fn benchmark(command: &Command, a: &BenchmarkArgs) -> Result<()> {
    let mut config = match (&a.config, a.preset) {
        (Some(path), _) => io::read_json::<MonteCarloConfig>(path)?,
        (None, Preset::Desk) => MonteCarloConfig::desk_scale(),
        (None, Preset::Paper) => MonteCarloConfig::paper_scale(),
    };
    if let Some(seed) = a.seed {
        config.rng_seed = seed;
    }
    config.validate()?;
    prepare_dir(&a.out_dir)?;
    let mut manifest = RunManifest::new(command, to_value(&config), Some(config.rng_seed));
    manifest.inputs.extend(a.config.iter().cloned());

    let report = run_monte_carlo(&config)?;
    let csv_path = a.out_dir.join("report.csv");
    fs::write(&csv_path, report.to_csv()?)?;
    let json_path = a.out_dir.join("report.json");
    io::write_json(&json_path, &report)?;
    manifest.outputs = vec![csv_path, json_path];
    if a.markdown {
        let md = report.to_markdown();
        let path = a.out_dir.join("report.md");
        fs::write(&path, &md)?;
        manifest.outputs.push(path);
        print!("{md}");
    } else {
        print!("{}", report.to_csv()?);
    }
    manifest.write(&a.out_dir)?;
    Ok(())
}
