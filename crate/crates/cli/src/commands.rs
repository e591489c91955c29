use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use recgame::everett::{extract_stationary_strategy, find_certificate, xi_margin, SearchOptions};
use recgame::respond::best_response_discounted;
use recgame::shapley::{discounted_value, n_stage_values, parse_grid, vanishing_discount_limit};
use recgame::sim::{adversary_battery, guarantee_report, simulate, Adversary, SimulationReport};
use recgame::{
    fmt_num, zoo, CertificateReport, Error, GameSpec, Player, Result, Side, StationaryStrategy, Tolerances,
    ValueVector,
};

use crate::args::{Command, LimitArgs, SideArg, SimArgs, ToleranceArgs, ZooName};

/// How a successful run ended.
#[derive(Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_game(path: &Path) -> Result<GameSpec> {
    GameSpec::from_json(&read(path)?)
}

fn load_strategy(game: &GameSpec, path: &Path) -> Result<StationaryStrategy> {
    StationaryStrategy::from_json(game, &read(path)?)
}

fn load_certificate(path: &Path) -> Result<CertificateReport> {
    Ok(serde_json::from_str(&read(path)?)?)
}

/// Writes `text` to `out`, or to stdout without a path.
fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDiscount(lambda))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "--{name} must be positive, got {x}"
        )))
    }
}

fn check_sim(sim: &SimArgs) -> Result<()> {
    if sim.horizon == 0 || sim.reps == 0 {
        return Err(Error::InvalidParameter(
            "--horizon and --reps must be at least 1".into(),
        ));
    }
    Ok(())
}

fn side(arg: SideArg) -> Side {
    match arg {
        SideArg::Plus => Side::Plus,
        SideArg::Minus => Side::Minus,
    }
}

fn value_table(game: &GameSpec, v: &ValueVector) -> String {
    let mut out = String::from("state,value\n");
    for (k, x) in v.iter().enumerate() {
        writeln!(out, "{},{}", game.state_name(k), fmt_num(*x)).unwrap();
    }
    out
}

fn limit_grid(limit: &LimitArgs) -> Result<Vec<f64>> {
    check_positive("tol", limit.tol)?;
    parse_grid(&limit.grid)
}

pub fn run(command: Command) -> Result<Verdict> {
    match command {
        Command::Validate { file } => {
            let g = load_game(&file)?;
            println!(
                "valid game: {} active and {} absorbing states",
                g.num_active(),
                g.absorbing_states().len()
            );
            println!("initial state: {}", g.state_name(g.initial()));
            println!("recursive: {}", g.is_recursive());
            println!("payoff bound: {}", fmt_num(g.payoff_bound()));
        }
        Command::Solve { file, lambda, tol } => {
            check_lambda(lambda)?;
            check_positive("tol", tol)?;
            let g = load_game(&file)?;
            print!("{}", value_table(&g, &discounted_value(&g, lambda, tol)?));
        }
        Command::Nstage { file, n, all } => {
            if n == 0 {
                return Err(Error::InvalidParameter("--n must be at least 1".into()));
            }
            let g = load_game(&file)?;
            let values = n_stage_values(&g, n)?;
            if all {
                let mut out = String::from("n,state,value\n");
                for (t, v) in (1..).zip(&values) {
                    for (k, x) in v.iter().enumerate() {
                        writeln!(out, "{t},{},{}", g.state_name(k), fmt_num(*x)).unwrap();
                    }
                }
                print!("{out}");
            } else {
                print!("{}", value_table(&g, values.last().expect("n ≥ 1")));
            }
        }
        Command::Limit { file, limit, out } => {
            let grid = limit_grid(&limit)?;
            let g = load_game(&file)?;
            let est = vanishing_discount_limit(&g, &grid, limit.tol)?;
            if let Some(path) = &out {
                emit(Some(path), &est.curve.to_csv(&g))?;
            }
            let mut text = String::from("state,estimate\n");
            for (k, x) in est.estimate.iter().enumerate() {
                writeln!(text, "{},{}", g.state_name(k), fmt_num(*x)).unwrap();
            }
            print!("{text}");
            if !est.converged {
                eprintln!(
                    "warning: not converged; last Cauchy differences exceed {}",
                    fmt_num(limit.tol)
                );
            }
        }
        Command::Certify {
            file,
            side: side_arg,
            eps,
            u,
            limit,
            tolerances,
            out,
        } => return certify(&file, side(side_arg), eps, u, &limit, &tolerances, out.as_ref()),
        Command::Strategy {
            file,
            cert,
            player,
            out,
        } => {
            let g = load_game(&file)?;
            let report = load_certificate(&cert)?;
            let player = if player == 1 { Player::One } else { Player::Two };
            emit(
                out.as_ref(),
                &extract_stationary_strategy(&g, &report, player)?.to_json(),
            )?;
        }
        Command::Bestresponse {
            file,
            strategy,
            lambda,
            tol,
            out,
            policy_out,
        } => {
            check_lambda(lambda)?;
            check_positive("tol", tol)?;
            let g = load_game(&file)?;
            let fixed = load_strategy(&g, &strategy)?;
            let br = best_response_discounted(&g, &fixed, lambda, tol)?;
            if let Some(path) = &out {
                let mut text = serde_json::to_string_pretty(&br)?;
                text.push('\n');
                emit(Some(path), &text)?;
            }
            if let Some(path) = &policy_out {
                emit(Some(path), &br.strategy(&g)?.to_json())?;
            }
            let mut text = String::from("state,value,action\n");
            for k in 0..g.num_active() {
                let s = g.active(k);
                let actions = match br.responder {
                    Player::One => &s.p1_actions,
                    Player::Two => &s.p2_actions,
                };
                writeln!(
                    text,
                    "{},{},{}",
                    s.name,
                    fmt_num(br.values[k]),
                    actions[br.policy[k]]
                )
                .unwrap();
            }
            print!("{text}");
        }
        Command::Simulate {
            file,
            sigma,
            tau,
            sim,
            out,
        } => {
            check_sim(&sim)?;
            let g = load_game(&file)?;
            let sigma = load_strategy(&g, &sigma)?;
            let tau = load_strategy(&g, &tau)?;
            if sigma.player != Player::One || tau.player != Player::Two {
                return Err(Error::StrategyMismatch(
                    "--sigma must be a player 1 strategy and --tau a player 2 strategy".into(),
                ));
            }
            let report = simulate(&g, &sigma, &tau, sim.horizon, sim.reps, sim.seed)?;
            let mut text = SimulationReport::csv_header().to_string();
            text.push_str(&report.csv_rows("tau"));
            emit(out.as_ref(), &text)?;
        }
        Command::Report {
            file,
            cert,
            eps,
            sim,
            adversary,
            out,
            json,
        } => return report(&file, &cert, eps, &sim, &adversary, out.as_ref(), json.as_ref()),
        Command::Zoo {
            name,
            out,
            active,
            absorbing,
            actions,
            absorb_prob,
            seed,
            points,
        } => {
            let g = match name {
                ZooName::Quit => zoo::quit(),
                ZooName::Duel => zoo::duel(),
                ZooName::Bigmatch => zoo::bigmatch(),
                ZooName::RandomRecursive => {
                    zoo::random_recursive(active, absorbing, actions, absorb_prob, seed)?
                }
                ZooName::RandomStochastic => {
                    zoo::random_stochastic(active, absorbing, actions, absorb_prob, seed)?
                }
                ZooName::ParametricQuit => zoo::discretize(&zoo::parametric_quit(), points)?,
                ZooName::ParametricDuel => zoo::discretize(&zoo::parametric_duel(), points)?,
            };
            emit(out.as_ref(), &g.to_json())?;
        }
    }
    Ok(Verdict::Pass)
}

fn certify(
    file: &Path,
    side: Side,
    eps: f64,
    u: Option<Vec<f64>>,
    limit: &LimitArgs,
    tolerances: &ToleranceArgs,
    out: Option<&PathBuf>,
) -> Result<Verdict> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "--eps must be nonnegative, got {eps}"
        )));
    }
    check_positive("weak-tol", tolerances.weak_tol)?;
    check_positive("strict-tol", tolerances.strict_tol)?;
    let tol = Tolerances {
        weak_tol: tolerances.weak_tol,
        strict_tol: tolerances.strict_tol,
    };
    let g = load_game(file)?;

    if let Some(u) = u {
        if u.len() != g.num_active() {
            return Err(Error::DimensionMismatch(format!(
                "--u has {} entries for {} active states",
                u.len(),
                g.num_active()
            )));
        }
        let report = xi_margin(&g, &ValueVector(u), side, tol)?;
        emit(out, &report.to_json())?;
        eprintln!("{side} check: {}", if report.passed() { "pass" } else { "FAIL" });
        return Ok(if report.passed() {
            Verdict::Pass
        } else {
            Verdict::Fail
        });
    }

    let grid = limit_grid(limit)?;
    let target = vanishing_discount_limit(&g, &grid, limit.tol)?.estimate;
    let options = SearchOptions {
        tolerances: tol,
        ..SearchOptions::default()
    };
    let search = find_certificate(&g, side, &target, &options)?;
    emit(out, &search.report.to_json())?;
    let ok = search.found && search.distance <= eps;
    eprintln!(
        "{side} certificate: {}, distance to limit estimate {} (eps {})",
        if search.found { "found" } else { "not found" },
        fmt_num(search.distance),
        fmt_num(eps)
    );
    Ok(if ok { Verdict::Pass } else { Verdict::Fail })
}

fn report(
    file: &Path,
    cert: &Path,
    eps: f64,
    sim: &SimArgs,
    extra: &[PathBuf],
    out: Option<&PathBuf>,
    json: Option<&PathBuf>,
) -> Result<Verdict> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "--eps must be nonnegative, got {eps}"
        )));
    }
    check_sim(sim)?;
    let g = load_game(file)?;
    let certificate = load_certificate(cert)?;
    let strategy = extract_stationary_strategy(&g, &certificate, certificate.side.player())?;
    let mut adversaries = adversary_battery(&g, &strategy, sim.seed)?;
    for path in extra {
        adversaries.push(Adversary {
            label: path.display().to_string(),
            strategy: load_strategy(&g, path)?,
        });
    }
    let report = guarantee_report(
        &g,
        &strategy,
        &certificate.u,
        eps,
        &adversaries,
        sim.horizon,
        sim.reps,
        sim.seed,
    )?;
    if let Some(path) = out {
        emit(Some(path), &report.to_csv())?;
    }
    if let Some(path) = json {
        emit(Some(path), &report.verdict_json())?;
    }
    let mut text = String::from("adversary,clause_a,n_hat,clause_b,final_mean,tail_mean\n");
    for v in &report.verdicts {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            v.adversary,
            v.clause_a,
            v.n_hat.map_or(String::new(), |n| n.to_string()),
            v.clause_b,
            fmt_num(v.final_mean),
            fmt_num(v.tail_mean)
        )
        .unwrap();
    }
    print!("{text}");
    eprintln!(
        "guarantee for player {} from {} (floor {}, eps {}): {}",
        report.player,
        report.initial_state,
        fmt_num(report.floor),
        fmt_num(report.eps),
        if report.pass { "pass" } else { "FAIL" }
    );
    Ok(if report.pass { Verdict::Pass } else { Verdict::Fail })
}
