use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hjr_core::compose::{compose_raa, compose_rr};
use hjr_core::gridworld::{BoundaryMode, GridSpec, GridTask};
use hjr_core::mdp::{fixture_raa_doomed_goal, fixture_raa_pinata, fixture_rr_cone, fixture_rr_river_islands, MdpFile};
use hjr_core::policy::{
    extract_avoid_policy, extract_reach_avoid_policy, extract_reach_policy, realized_objective, rollout_bound,
    simulate_augmented, simulate_stationary, synth_raa_augmented, synth_rr_augmented, AugmentedController, Trajectory,
};
use hjr_core::solvers::{
    solve_avoid, solve_avoid_gamma, solve_reach, solve_reach_avoid, solve_reach_avoid_gamma, solve_reach_gamma,
};
use hjr_core::verify::{run_verify, VerifyConfig};
use hjr_core::{AugmentMode, AugmentedMdp, FiniteMdp, LabelSet, LabelTable, Objective, Tracker, ValueTable};

#[derive(Parser)]
#[command(
    name = "hjr",
    version,
    about = "Reachability value solvers and policy synthesis for finite MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    Reach,
    Avoid,
    ReachAvoid,
    Raa,
    Rr,
}

impl ProblemArg {
    fn objective(self) -> Objective {
        match self {
            ProblemArg::Reach => Objective::Reach,
            ProblemArg::Avoid => Objective::Avoid,
            ProblemArg::ReachAvoid => Objective::ReachAvoid,
            ProblemArg::Raa => Objective::ReachAlwaysAvoid,
            ProblemArg::Rr => Objective::ReachReach,
        }
    }

    fn label_names(self) -> (&'static str, &'static str) {
        match self {
            ProblemArg::Reach => ("l", "l"),
            ProblemArg::Avoid => ("g", "g"),
            ProblemArg::ReachAvoid | ProblemArg::Raa => ("l", "g"),
            ProblemArg::Rr => ("l1", "l2"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Ra,
    Raa,
    R,
    Rr,
}

impl From<TaskArg> for GridTask {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Ra => GridTask::Ra,
            TaskArg::Raa => GridTask::Raa,
            TaskArg::R => GridTask::R,
            TaskArg::Rr => GridTask::Rr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Neutral,
    Hazard,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Neutral => BoundaryMode::Neutral,
            BoundaryArg::Hazard => BoundaryMode::Hazard,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the value function and write it as JSON.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        /// Discount factor in [0, 1); reach, avoid and reach-avoid only.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize the optimal policy and write it as JSON.
    Policy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Roll out the optimal policy from a start state.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and solve the grid world, writing data files to a directory.
    Gridworld {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "neutral")]
        boundary: BoundaryArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the randomized consistency battery.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        max_states: usize,
        #[arg(long, default_value_t = 3)]
        max_actions: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Perturb the composed values; the battery must then report mismatches.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Write the named example MDPs as JSON.
    Fixtures {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum Status {
    Ok,
    Mismatch,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Solve {
            input,
            problem,
            gamma,
            out,
        } => cmd_solve(&input, problem, gamma, &out),
        Command::Policy { input, problem, out } => cmd_policy(&input, problem, &out),
        Command::Simulate {
            input,
            problem,
            start,
            steps,
            out,
        } => cmd_simulate(&input, problem, start, steps, &out),
        Command::Gridworld {
            task,
            boundary,
            out_dir,
        } => cmd_gridworld(task.into(), boundary.into(), &out_dir),
        Command::Verify {
            trials,
            max_states,
            max_actions,
            seed,
            corrupt,
        } => {
            let cfg = VerifyConfig {
                trials,
                max_states,
                max_actions,
                seed,
                corrupt,
            };
            let summary = run_verify(&cfg)?;
            print!("{}", summary.render());
            Ok(if summary.passed() { Status::Ok } else { Status::Mismatch })
        }
        Command::Fixtures { out_dir } => cmd_fixtures(&out_dir),
    }
}

fn load(path: &Path) -> Result<(FiniteMdp, LabelSet)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = MdpFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.into_parts()?)
}

fn label<'a>(labels: &'a LabelSet, name: &str, problem: ProblemArg) -> Result<&'a LabelTable> {
    labels.get(name).ok_or_else(|| {
        anyhow!(
            "problem {} requires label `{name}`, which the input lacks",
            problem.objective()
        )
    })
}

fn label_pair(labels: &LabelSet, problem: ProblemArg) -> Result<(&LabelTable, &LabelTable)> {
    let (a, b) = problem.label_names();
    Ok((label(labels, a, problem)?, label(labels, b, problem)?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_solve(input: &Path, problem: ProblemArg, gamma: Option<f64>, out: &Path) -> Result<Status> {
    let (mdp, labels) = load(input)?;
    let (a, b) = label_pair(&labels, problem)?;
    let name = problem.objective().to_string();
    let body = match (problem, gamma) {
        (ProblemArg::Raa | ProblemArg::Rr, Some(_)) => bail!("--gamma applies only to reach, avoid and reach-avoid"),
        (ProblemArg::Raa, None) => serde_json::to_value(compose_raa(&mdp, a, b)?)?,
        (ProblemArg::Rr, None) => serde_json::to_value(compose_rr(&mdp, a, b)?)?,
        (_, gamma) => {
            let (values, report) = match (problem, gamma) {
                (ProblemArg::Reach, None) => solve_reach(&mdp, a)?,
                (ProblemArg::Avoid, None) => solve_avoid(&mdp, a)?,
                (ProblemArg::ReachAvoid, None) => solve_reach_avoid(&mdp, a, b)?,
                (ProblemArg::Reach, Some(g)) => solve_reach_gamma(&mdp, a, g)?,
                (ProblemArg::Avoid, Some(g)) => solve_avoid_gamma(&mdp, a, g)?,
                (ProblemArg::ReachAvoid, Some(g)) => solve_reach_avoid_gamma(&mdp, a, b, g)?,
                _ => unreachable!(),
            };
            json!({ "values": values, "report": report })
        }
    };
    write_json(out, &json!({ "problem": name, "gamma": gamma, "solution": body }))?;
    Ok(Status::Ok)
}

/// Optimal stationary policy for the single-objective problems.
fn stationary_policy(
    mdp: &FiniteMdp,
    problem: ProblemArg,
    a: &LabelTable,
    b: &LabelTable,
) -> Result<hjr_core::StationaryPolicy> {
    Ok(match problem {
        ProblemArg::Reach => extract_reach_policy(mdp, a, &solve_reach(mdp, a)?.0)?,
        ProblemArg::Avoid => extract_avoid_policy(mdp, a, &solve_avoid(mdp, a)?.0)?,
        ProblemArg::ReachAvoid => extract_reach_avoid_policy(mdp, a, b)?.0,
        ProblemArg::Raa | ProblemArg::Rr => unreachable!("augmented problems handled separately"),
    })
}

fn cmd_policy(input: &Path, problem: ProblemArg, out: &Path) -> Result<Status> {
    let (mdp, labels) = load(input)?;
    let (a, b) = label_pair(&labels, problem)?;
    match problem {
        ProblemArg::Raa => {
            let controller = synth_raa_augmented(&mdp, &compose_raa(&mdp, a, b)?)?;
            let aug = AugmentedMdp::build(&mdp, a, b, AugmentMode::Raa)?;
            write_json(out, &controller.tabulate(&aug)?)?;
        }
        ProblemArg::Rr => {
            let controller = synth_rr_augmented(&mdp, &compose_rr(&mdp, a, b)?)?;
            let aug = AugmentedMdp::build(&mdp, a, b, AugmentMode::Rr)?;
            write_json(out, &controller.tabulate(&aug)?)?;
        }
        _ => write_json(out, &stationary_policy(&mdp, problem, a, b)?)?,
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct SimulationOutput {
    #[serde(flatten)]
    trajectory: Trajectory,
    realized: Option<f64>,
}

fn cmd_simulate(input: &Path, problem: ProblemArg, start: usize, steps: usize, out: &Path) -> Result<Status> {
    let (mdp, labels) = load(input)?;
    let (a, b) = label_pair(&labels, problem)?;
    let tracker = Tracker::new(problem.objective(), a, b);
    let trajectory = match problem {
        ProblemArg::Raa => {
            let controller = synth_raa_augmented(&mdp, &compose_raa(&mdp, a, b)?)?;
            simulate_augmented(&mdp, &controller, &tracker, start, steps)?
        }
        ProblemArg::Rr => {
            let controller = synth_rr_augmented(&mdp, &compose_rr(&mdp, a, b)?)?;
            simulate_augmented(&mdp, &controller, &tracker, start, steps)?
        }
        _ => simulate_stationary(&mdp, &stationary_policy(&mdp, problem, a, b)?, &tracker, start, steps)?,
    };
    let realized = realized_objective(&trajectory, problem.objective()).ok();
    write_json(out, &SimulationOutput { trajectory, realized })?;
    Ok(Status::Ok)
}

fn write_grid(spec: &GridSpec, dir: &Path, name: &str, values: &ValueTable) -> Result<()> {
    spec.write_value_grid(values, &dir.join(name))
        .with_context(|| format!("writing {name}"))
}

/// Rollout summary: per cell the value and whether the realized objective is positive.
fn rollout_summary(
    spec: &GridSpec,
    mdp: &FiniteMdp,
    controller: &impl AugmentedController,
    tracker: &Tracker<'_>,
    values: &ValueTable,
) -> Result<String> {
    let steps = rollout_bound(mdp, tracker);
    let mut out = String::from("cell,value,success\n");
    for cell in 0..spec.num_cells() {
        let traj = simulate_augmented(mdp, controller, tracker, cell, steps)?;
        let success = realized_objective(&traj, tracker.objective())? > 0.0;
        out.push_str(&format!("{cell},{:.16e},{success}\n", values.get(cell)));
    }
    Ok(out)
}

fn cmd_gridworld(task: GridTask, boundary: BoundaryMode, dir: &Path) -> Result<Status> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let spec = GridSpec::standard(task, boundary);
    let (mdp, labels) = spec.build()?;
    write_json(&dir.join("spec.json"), &spec)?;
    fs::write(dir.join("mdp.json"), MdpFile::from_parts(&mdp, &labels).to_json())?;
    for (name, table) in &labels {
        write_grid(
            &spec,
            dir,
            &format!("label_{name}.csv"),
            &ValueTable::new(table.values().to_vec()),
        )?;
    }
    match task {
        GridTask::R => write_grid(&spec, dir, "values_r.csv", &solve_reach(&mdp, &labels["l"])?.0)?,
        GridTask::Ra => write_grid(
            &spec,
            dir,
            "values_ra.csv",
            &solve_reach_avoid(&mdp, &labels["l"], &labels["g"])?.0,
        )?,
        GridTask::Raa => {
            let (l, g) = (&labels["l"], &labels["g"]);
            let sol = compose_raa(&mdp, l, g)?;
            write_grid(&spec, dir, "values_avoid.csv", &sol.v_avoid)?;
            write_grid(&spec, dir, "values_ra.csv", &solve_reach_avoid(&mdp, l, g)?.0)?;
            write_grid(&spec, dir, "values_raa.csv", &sol.v_raa)?;
            let controller = synth_raa_augmented(&mdp, &sol)?;
            let tracker = Tracker::reach_always_avoid(l, g);
            let summary = rollout_summary(&spec, &mdp, &controller, &tracker, &sol.v_raa)?;
            fs::write(dir.join("rollouts_raa.csv"), summary)?;
        }
        GridTask::Rr => {
            let (l1, l2) = (&labels["l1"], &labels["l2"]);
            let sol = compose_rr(&mdp, l1, l2)?;
            write_grid(&spec, dir, "values_r1.csv", &sol.v_r1)?;
            write_grid(&spec, dir, "values_r2.csv", &sol.v_r2)?;
            write_grid(&spec, dir, "values_rr.csv", &sol.v_rr)?;
            let controller = synth_rr_augmented(&mdp, &sol)?;
            let tracker = Tracker::reach_reach(l1, l2);
            let summary = rollout_summary(&spec, &mdp, &controller, &tracker, &sol.v_rr)?;
            fs::write(dir.join("rollouts_rr.csv"), summary)?;
        }
    }
    Ok(Status::Ok)
}

fn cmd_fixtures(dir: &Path) -> Result<Status> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let fixtures = [
        ("rr_cone.json", fixture_rr_cone(), ["l1", "l2"]),
        ("rr_river_islands.json", fixture_rr_river_islands(), ["l1", "l2"]),
        ("raa_pinata.json", fixture_raa_pinata(), ["l", "g"]),
        ("raa_doomed_goal.json", fixture_raa_doomed_goal(), ["l", "g"]),
    ];
    for (file, (mdp, a, b), [na, nb]) in fixtures {
        let labels: LabelSet = [(na.to_string(), a), (nb.to_string(), b)].into_iter().collect();
        let mut text = MdpFile::from_parts(&mdp, &labels).to_json();
        text.push('\n');
        fs::write(dir.join(file), text).with_context(|| format!("writing {file}"))?;
    }
    Ok(Status::Ok)
}
