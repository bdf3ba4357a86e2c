use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use elorank_core::evaluation::{
    compare_systems, metrics_from_timeline, BucketScheme, DeltaStats, ErrorAggregator, RoundMetrics,
};
use elorank_core::replay::replay;
use elorank_core::simulator::{calibration_check, generate_history, CalibrationReport, SimConfig};
use elorank_core::store::{
    export_json, load_snapshot, parse_rating_timeline, parse_rounds, save_snapshot,
    write_rating_timeline, write_rounds, RatingTimeline,
};
use elorank_core::sweep::{joint_search, run_sweep, KSearch, SweepParam, SweepSpec};
use elorank_core::{EngineState, Execution, RatingParams, RoundInput, RoundOutcome};

use crate::args::{
    CompareArgs, EvalArgs, EvalReport, ExportArgs, ExportKind, Format, OutputArgs, RateArgs,
    SimulateArgs, SweepArgs,
};
use crate::params::resolve;
use crate::report::{Cell, Report};
use crate::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_rounds(path: &Path) -> Result<Vec<RoundInput>, CliError> {
    parse_rounds(open(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_timeline(path: &Path) -> Result<RatingTimeline, CliError> {
    parse_rating_timeline(open(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn initial_state(
    snapshot: Option<&PathBuf>,
    params: &RatingParams,
) -> Result<EngineState, CliError> {
    match snapshot {
        Some(path) => {
            load_snapshot(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
        None => Ok(EngineState::new(params)),
    }
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(report: &Report, out: &OutputArgs) -> Result<(), CliError> {
    let mut w = sink(out.output.as_ref())?;
    report.write(&mut w, out.format)?;
    w.flush()?;
    Ok(())
}

/// Replays `rounds` on `state`, collecting each outcome through `f`.
fn run<F: FnMut(&RoundOutcome)>(
    rounds: &[RoundInput],
    state: &mut EngineState,
    params: &RatingParams,
    f: F,
) -> Result<(), CliError> {
    replay(rounds, state, params, Execution::default(), f)?;
    Ok(())
}

fn division_metrics(out: &RoundOutcome, into: &mut Vec<RoundMetrics>) {
    for d in &out.divisions {
        if let Some(first) = d.first() {
            into.push(RoundMetrics::from_breakdowns(
                &out.round_id,
                first.division,
                d,
            ));
        }
    }
}

pub fn rate(args: &RateArgs) -> Result<(), CliError> {
    let params = resolve(args.params.profile, &args.params.params)?;
    let rounds = read_rounds(&args.input)?;
    let mut state = initial_state(args.snapshot_in.as_ref(), &params)?;
    let mut report = Report::new(vec![
        "round_id",
        "division",
        "player_id",
        "score",
        "rating_before",
        "actual_rank",
        "expected_rank",
        "perf",
        "delta_r",
        "rating_after",
    ]);
    run(&rounds, &mut state, &params, |out| {
        for b in out.breakdowns() {
            report.push(vec![
                out.round_id.clone().into(),
                u64::from(b.division).into(),
                b.player.clone().into(),
                b.score.into(),
                b.rating_before.into(),
                b.actual_rank.into(),
                b.expected_rank.into(),
                b.perf.into(),
                b.delta_r.into(),
                b.rating_after().into(),
            ]);
        }
    })?;
    if let Some(path) = &args.snapshot_out {
        save_snapshot(&state, path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    emit(&report, &args.out)
}

fn calibration_report(cal: &CalibrationReport) -> Report {
    let mut report = Report::new(vec![
        "lo",
        "hi",
        "pairs",
        "mean_predicted",
        "empirical",
        "deviation",
    ]);
    for b in &cal.bins {
        let observed = |v: f64| {
            if b.pairs > 0 {
                Cell::Num(v)
            } else {
                Cell::Missing
            }
        };
        report.push(vec![
            b.lo.into(),
            b.hi.into(),
            b.pairs.into(),
            observed(b.mean_predicted),
            observed(b.empirical),
            observed(b.deviation()),
        ]);
    }
    report
}

fn rounds_report(metrics: &[RoundMetrics]) -> Report {
    let mut report = Report::new(vec![
        "round_id",
        "division",
        "players",
        "mean_error",
        "kendall_tau",
        "spearman_rho",
    ]);
    for m in metrics {
        report.push(vec![
            m.round_id.clone().into(),
            u64::from(m.division).into(),
            (m.players as u64).into(),
            m.mean_error.into(),
            m.kendall_tau.into(),
            m.spearman_rho.into(),
        ]);
    }
    report
}

fn warn_if_flagged(cal: &CalibrationReport) {
    if cal.flagged {
        eprintln!(
            "calibration: max deviation {:.4} exceeds tolerance",
            cal.max_deviation
        );
    }
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let params = resolve(args.params.profile, &args.params.params)?;
    let rounds = read_rounds(&args.input)?;

    if let Some(path) = &args.ratings {
        let timeline = read_timeline(path)?;
        let report = match args.report {
            EvalReport::Rounds => rounds_report(&metrics_from_timeline(&rounds, &timeline)?),
            EvalReport::Calibration => {
                let cal = calibration_check(&rounds, &timeline)?;
                warn_if_flagged(&cal);
                calibration_report(&cal)
            }
            EvalReport::Players | EvalReport::Stats => {
                return Err(CliError::Input(
                    "--ratings supports only the rounds and calibration reports".into(),
                ))
            }
        };
        return emit(&report, &args.out);
    }

    let mut state = initial_state(args.snapshot_in.as_ref(), &params)?;
    let report = match args.report {
        EvalReport::Players => {
            let mut agg = ErrorAggregator::new(BucketScheme::default());
            run(&rounds, &mut state, &params, |out| {
                agg.extend(out.breakdowns())
            })?;
            let mut report = Report::new(vec![
                "label",
                "count",
                "mean_delta_r",
                "mean_perf",
                "mean_error",
            ]);
            for row in agg.report().rows {
                let some = |v: f64| {
                    if row.count > 0 {
                        Cell::Num(v)
                    } else {
                        Cell::Missing
                    }
                };
                report.push(vec![
                    row.label.clone().into(),
                    row.count.into(),
                    some(row.mean_delta_r),
                    some(row.mean_perf),
                    some(row.mean_error),
                ]);
            }
            report
        }
        EvalReport::Stats => {
            let mut stats = DeltaStats::default();
            run(&rounds, &mut state, &params, |out| {
                for b in out.breakdowns() {
                    stats.add(b);
                }
            })?;
            let s = stats.finish(&state);
            let mut report = Report::new(vec![
                "err",
                "delta_mean",
                "delta_sd",
                "delta_max",
                "init",
                "median",
                "max",
            ]);
            report.push(vec![
                s.mean_error.into(),
                s.delta_mean.into(),
                s.delta_sd.into(),
                s.delta_max.into(),
                s.init.into(),
                s.median.into(),
                s.max.into(),
            ]);
            report
        }
        EvalReport::Rounds => {
            let mut metrics = Vec::new();
            run(&rounds, &mut state, &params, |out| {
                division_metrics(out, &mut metrics)
            })?;
            rounds_report(&metrics)
        }
        EvalReport::Calibration => {
            let mut timeline = RatingTimeline::default();
            run(&rounds, &mut state, &params, |out| {
                for b in out.breakdowns() {
                    timeline.insert(&out.round_id, &b.player, b.rating_before);
                }
            })?;
            let cal = calibration_check(&rounds, &timeline)?;
            warn_if_flagged(&cal);
            calibration_report(&cal)
        }
    };
    emit(&report, &args.out)
}

fn replay_metrics(
    rounds: &[RoundInput],
    params: &RatingParams,
) -> Result<Vec<RoundMetrics>, CliError> {
    let mut state = EngineState::new(params);
    let mut metrics = Vec::new();
    run(rounds, &mut state, params, |out| {
        division_metrics(out, &mut metrics)
    })?;
    Ok(metrics)
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let params = resolve(args.params.profile, &args.params.params)?;
    let rounds = read_rounds(&args.input)?;
    let ours = replay_metrics(&rounds, &params)?;
    let theirs = match &args.baseline_ratings {
        Some(path) => metrics_from_timeline(&rounds, &read_timeline(path)?)?,
        None => replay_metrics(
            &rounds,
            &resolve(args.baseline_profile, &args.baseline_params)?,
        )?,
    };
    let cmp = compare_systems(&ours, &theirs)?;
    let mut report = Report::new(vec!["label", "rounds", "tau", "rho", "err"]);
    for row in &cmp.rows {
        report.push(vec![
            row.label.clone().into(),
            row.rounds.into(),
            Cell::Share(row.tau),
            Cell::Share(row.rho),
            Cell::Share(row.err),
        ]);
    }
    emit(&report, &args.out)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = resolve(args.params.profile, &args.params.params)?;
    let rounds = read_rounds(&args.input)?;
    let grid = args.grid.0.clone();

    if let Some(b_grid) = &args.joint_b {
        if args.target != SweepParam::N {
            return Err(CliError::Input("--joint-b requires --target N".into()));
        }
        let best = joint_search(&grid, &b_grid.0, &base, &rounds, Execution::default())?;
        let mut report = Report::new(vec!["N", "B", "mean_error", "evaluations"]);
        report.push(vec![
            best.n.into(),
            best.b.into(),
            best.mean_error.into(),
            (best.evaluations as u64).into(),
        ]);
        return emit(&report, &args.out);
    }

    let spec = SweepSpec {
        target: args.target,
        grid,
        base,
        k_search: KSearch {
            lo: args.k_range.0,
            hi: args.k_range.1,
            step: args.k_step,
        },
    };
    let result = run_sweep(&spec, &rounds, Execution::default())?;
    let mut report = Report::new(vec!["param_value", "best_K", "mean_error"]);
    for p in &result.points {
        report.push(vec![p.value.into(), p.best_k.into(), p.mean_error.into()]);
    }
    let best = result.best();
    eprintln!(
        "argmin {}={} K={} mean_error={}",
        result.target, best.value, best.best_k, best.mean_error
    );
    emit(&report, &args.out)
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let defaults = SimConfig::default();
    let config = SimConfig {
        players: args.players,
        rounds: args.rounds,
        skill_mean: args.skill_mean,
        skill_sd: args.skill_sd,
        initial_skills: None,
        noise_sd: args.noise_sd.unwrap_or(defaults.noise_sd),
        participation: args.participation,
        drift_sd: args.drift_sd,
        arrival_rate: args.arrival_rate,
        div1_fraction: args.div1_fraction,
        tie_step: args.tie_step,
        seed: args.seed,
    };
    let history = generate_history(&config)?;
    let mut w = sink(args.output.as_ref())?;
    write_rounds(&mut w, &history.rounds)?;
    w.flush()?;
    if let Some(path) = &args.latent_out {
        let mut w = sink(Some(path))?;
        let rows = history.rounds.iter().flat_map(|r| {
            r.divisions.iter().flat_map(|d| &d.entries).map(|e| {
                let skill = history
                    .latent
                    .get(&r.round_id, &e.player)
                    .expect("every participant has a skill");
                (r.round_id.as_str(), e.player.as_str(), skill)
            })
        });
        write_rating_timeline(&mut w, rows)?;
        w.flush()?;
    }
    Ok(())
}

pub fn export(args: &ExportArgs) -> Result<(), CliError> {
    let params = resolve(args.params.profile, &args.params.params)?;
    let mut state = initial_state(args.snapshot_in.as_ref(), &params)?;
    let rounds = match &args.input {
        Some(path) => read_rounds(path)?,
        None => Vec::new(),
    };
    match args.kind {
        ExportKind::Json => {
            if args.snapshot_in.is_none() {
                return Err(CliError::Input("--kind json needs --snapshot-in".into()));
            }
            run(&rounds, &mut state, &params, |_| {})?;
            let mut w = sink(args.out.output.as_ref())?;
            writeln!(w, "{}", export_json(&state))?;
            w.flush()?;
            Ok(())
        }
        ExportKind::Timeline => {
            if args.input.is_none() {
                return Err(CliError::Input("--kind timeline needs --input".into()));
            }
            let mut rows: Vec<(String, String, f64)> = Vec::new();
            run(&rounds, &mut state, &params, |out| {
                rows.extend(
                    out.breakdowns()
                        .map(|b| (out.round_id.clone(), b.player.clone(), b.rating_before)),
                );
            })?;
            if args.out.format == Format::Csv {
                let mut w = sink(args.out.output.as_ref())?;
                write_rating_timeline(
                    &mut w,
                    rows.iter().map(|(r, p, v)| (r.as_str(), p.as_str(), *v)),
                )?;
                w.flush()?;
                return Ok(());
            }
            let mut report = Report::new(vec!["round_id", "player_id", "rating_before"]);
            for (r, p, v) in rows {
                report.push(vec![r.into(), p.into(), v.into()]);
            }
            emit(&report, &args.out)
        }
        ExportKind::Ratings => {
            run(&rounds, &mut state, &params, |_| {})?;
            let mut report = Report::new(vec!["player_id", "rating", "rounds"]);
            for (id, p) in &state.players {
                report.push(vec![
                    id.clone().into(),
                    p.rating.into(),
                    u64::from(p.num_rounds).into(),
                ]);
            }
            emit(&report, &args.out)
        }
    }
}
