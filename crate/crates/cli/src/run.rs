//! Stage implementations. Each stage writes its tables and a JSON summary
//! into the output directory, then a manifest for the command.

use std::path::{Path, PathBuf};

use anyhow::Context;
use intergen::benchmarks::{deterministic_solve, first_best};
use intergen::debt::{DebtSystem, DEFAULT_GRID};
use intergen::econ::{validate, EconomyParams};
use intergen::ergodic::{invariant, regeneration_stats, simulate_path, ErgodicDistribution};
use intergen::io::{self, fmt_f64, write_table};
use intergen::planner::{solve, PlannerSolution, SOLUTION_FORMAT_VERSION};
use intergen::pricing::{mrp_on_support, AssetPriceReport, PricingSupport, MERGE_TOL};
use intergen::shooting::{check_assumption5, chi_upsilon, shoot, NuLadder};
use intergen::welfare::{demographic_irf, start_points, welfare_measures, IrfConfig, MonteCarloConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{EconomySection, Format, Preset, RunConfig, SupportKind};
use crate::{Command, ConfigError};

/// Consumption rungs compared between the ladder and value iteration.
const LADDER_CHECK_RUNGS: usize = 10;

struct Ctx {
    cfg: RunConfig,
    params: EconomyParams,
    out: PathBuf,
    solution: PathBuf,
    outputs: Vec<String>,
}

impl Ctx {
    fn new(cfg: RunConfig, solution: Option<PathBuf>) -> anyhow::Result<Self> {
        let params = cfg.economy.resolve()?;
        let out = cfg.output.dir.clone();
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let solution = solution.unwrap_or_else(|| out.join("solution.json"));
        Ok(Self {
            cfg,
            params,
            out,
            solution,
            outputs: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn summary<T: Serialize>(&mut self, stem: &str, value: &T) -> anyhow::Result<()> {
        let p = self.path(&format!("{stem}.json"));
        std::fs::write(&p, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    /// A table as CSV, or as JSON when output.format = json.
    fn table<T, F>(&mut self, stem: &str, data: &T, csv: F) -> anyhow::Result<()>
    where
        T: Serialize + ?Sized,
        F: FnOnce(&Path) -> intergen::Result<()>,
    {
        match self.cfg.output.format {
            Format::Csv => {
                let p = self.path(&format!("{stem}.csv"));
                csv(&p)?;
            }
            Format::Json => {
                let p = self.path(&format!("{stem}.json"));
                std::fs::write(&p, serde_json::to_string(data)? + "\n")?;
            }
        }
        Ok(())
    }

    fn load_solution(&self) -> anyhow::Result<PlannerSolution> {
        if !self.solution.exists() {
            return Err(ConfigError(format!(
                "solution file {} not found; run `intergen solve` first",
                self.solution.display()
            ))
            .into());
        }
        let sol = PlannerSolution::load(&self.solution)?;
        let p = &sol.economy.params;
        if p.endowments != self.params.endowments || p.prefs != self.params.prefs {
            return Err(ConfigError(format!(
                "solution {} was computed for a different economy",
                self.solution.display()
            ))
            .into());
        }
        Ok(sol)
    }

    fn distribution(&self, sol: &PlannerSolution) -> anyhow::Result<ErgodicDistribution> {
        Ok(invariant(sol, self.cfg.ergodic.bins, self.cfg.ergodic.tol)?)
    }

    fn support(&self) -> anyhow::Result<(&'static str, PricingSupport)> {
        let two = self.params.num_states() == 2;
        let kind = match self.cfg.pricing.support {
            SupportKind::Auto if two => SupportKind::Ladder,
            SupportKind::Auto => SupportKind::Enumerate,
            k => k,
        };
        Ok(match kind {
            SupportKind::Ladder => {
                let sh = &self.cfg.shooting;
                let l = shoot(&self.params, sh.horizon, sh.tol)?;
                ("ladder", PricingSupport::from_ladder(&self.params, &l, self.cfg.pricing.ladder_len)?)
            }
            SupportKind::Enumerate => {
                let sol = self.load_solution()?;
                ("enumerate", PricingSupport::from_policy(&sol, self.cfg.pricing.max_points, MERGE_TOL)?)
            }
            SupportKind::Bins | SupportKind::Auto => {
                let sol = self.load_solution()?;
                let dist = self.distribution(&sol)?;
                ("bins", PricingSupport::from_bins(&sol, &dist)?)
            }
        })
    }

    fn manifest(&mut self, cmd: Command, seed_flag: Option<u64>, threads: usize) -> anyhow::Result<()> {
        let command = cmd.name();
        let toml = self.cfg.to_toml()?;
        let cfg_name = format!("config-{command}.toml");
        std::fs::write(self.out.join(&cfg_name), &toml)?;
        let m = json!({
            "command": command,
            "config_sha256": self.cfg.hash()?,
            "config_file": cfg_name,
            "config": self.cfg,
            "seeds": {
                "flag": seed_flag,
                "ergodic": self.cfg.ergodic.seed,
                "shock": self.cfg.shock.seed,
            },
            "threads": threads,
            "solution": self.solution,
            "versions": {
                "intergen": intergen::VERSION,
                "intergen-cli": env!("CARGO_PKG_VERSION"),
                "solution_format": SOLUTION_FORMAT_VERSION,
            },
            "outputs": self.outputs,
            "rerun": format!(
                "intergen --config {} --solution {} {}",
                self.out.join(&cfg_name).display(),
                self.solution.display(),
                stage_args(cmd)
            ),
        });
        std::fs::write(
            self.out.join(format!("manifest-{command}.json")),
            serde_json::to_string_pretty(&m)? + "\n",
        )?;
        Ok(())
    }
}

fn stage_args(cmd: Command) -> String {
    match cmd {
        Command::Deterministic { share: Some(s) } => format!("deterministic --share {s}"),
        c => c.name().to_string(),
    }
}

pub fn execute(
    cmd: Command,
    cfg: RunConfig,
    solution: Option<PathBuf>,
    seed_flag: Option<u64>,
    threads: usize,
) -> anyhow::Result<()> {
    if cmd == Command::ReproduceAll {
        return reproduce_all(cfg, seed_flag, threads);
    }
    let mut ctx = Ctx::new(cfg, solution)?;
    let res = stage(&mut ctx, cmd);
    // Failed validation still leaves its report behind.
    ctx.manifest(cmd, seed_flag, threads)?;
    res
}

fn stage(ctx: &mut Ctx, cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Validate => run_validate(ctx),
        Command::FirstBest => run_first_best(ctx),
        Command::Deterministic { share } => run_deterministic(ctx, share),
        Command::Solve => run_solve(ctx),
        Command::Simulate => run_simulate(ctx),
        Command::Invariant => run_invariant(ctx),
        Command::Debt => run_debt(ctx),
        Command::Yields => run_yields(ctx),
        Command::Mrp => run_mrp(ctx),
        Command::Welfare => run_welfare(ctx),
        Command::Shock => run_shock(ctx),
        Command::Shoot => run_shoot(ctx),
        Command::ReproduceAll => unreachable!(),
    }
}

fn reproduce_all(cfg: RunConfig, seed_flag: Option<u64>, threads: usize) -> anyhow::Result<()> {
    let root = cfg.output.dir.clone();
    for preset in [Preset::Example1, Preset::ThreeState] {
        let mut c = cfg.clone();
        c.economy = EconomySection {
            preset: Some(preset),
            ..Default::default()
        };
        c.output.dir = root.join(preset.name());
        if preset == Preset::ThreeState {
            c.shock.enumerate_upto = c.shock.enumerate_upto.min(6);
        }
        let mut ctx = Ctx::new(c, None)?;
        let two = ctx.params.num_states() == 2;
        let mut cmds = vec![
            Command::Validate,
            Command::FirstBest,
            Command::Deterministic { share: None },
            Command::Solve,
        ];
        if two {
            cmds.push(Command::Shoot);
        }
        cmds.extend([
            Command::Simulate,
            Command::Invariant,
            Command::Debt,
            Command::Yields,
            Command::Mrp,
            Command::Welfare,
            Command::Shock,
        ]);
        println!("== {}", preset.name());
        for cmd in cmds {
            ctx.outputs.clear();
            stage(&mut ctx, cmd).with_context(|| format!("{} stage {}", preset.name(), cmd.name()))?;
            ctx.manifest(cmd, seed_flag, threads)?;
        }
    }
    Ok(())
}

fn run_validate(ctx: &mut Ctx) -> anyhow::Result<()> {
    let r = validate(&ctx.params)?;
    ctx.summary("validation", &r)?;
    println!("trace(Q-hat) = {:.6}", r.trace_qhat);
    println!("harmonic mean growth = {:.6}", r.gamma_bar);
    println!("assumption 3 slack = {:.6}", r.a3_slack);
    println!("assumption 4 gap = {:.6}", r.a4_gap);
    for c in &r.checks {
        println!("  {:<60} {:>10.6}  {}", c.name, c.margin, if c.passed { "ok" } else { "FAILED" });
    }
    if !r.passed {
        return Err(ConfigError("assumption checks failed".into()).into());
    }
    Ok(())
}

fn run_first_best(ctx: &mut Ctx) -> anyhow::Result<()> {
    let fb = first_best(&ctx.params)?;
    let e = ctx.params.endowments.clone();
    let rows: Vec<Vec<String>> = (0..e.len())
        .map(|s| {
            let mut r = vec![(s + 1).to_string()];
            r.extend([e.shares[s], fb.c_star[s], fb.omega_star[s], fb.v_star[s], fb.d_star[s]].map(fmt_f64));
            r
        })
        .collect();
    let header: Vec<String> = ["state", "share", "c_star", "omega_star", "v_star", "d_star"]
        .map(String::from)
        .to_vec();
    ctx.table("first_best", &fb, |p| write_table(p, &header, &rows))?;
    let br0 = fb.bond_revenue_formula(e.mean(), 0.0);
    ctx.summary("first_best_summary", &json!({ "first_best": fb, "bond_revenue_at_zero": br0 }))?;
    println!("c* = {:?}", fb.c_star);
    println!("d* = {:?}", fb.d_star);
    println!("BR*(0) = {br0:.6}");
    Ok(())
}

fn run_deterministic(ctx: &mut Ctx, share: Option<f64>) -> anyhow::Result<()> {
    let s = share.unwrap_or_else(|| {
        ctx.params.endowments.shares.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    });
    let det = deterministic_solve(s, ctx.params.prefs)?;
    let w0 = 0.5 * (det.omega_star + det.omega_max_det);
    let path = det.path(w0, 10_000);
    let c: Vec<f64> = path.iter().map(|w| -w.exp_m1()).collect();
    let rows: Vec<Vec<String>> = path
        .iter()
        .zip(&c)
        .enumerate()
        .map(|(t, (w, c))| vec![t.to_string(), fmt_f64(*w), fmt_f64(*c)])
        .collect();
    let header: Vec<String> = ["t", "omega", "c_old_complement"].map(String::from).to_vec();
    ctx.table("deterministic_path", &path, |p| write_table(p, &header, &rows))?;
    let ladder = det.ladder(20);
    let ns: Vec<f64> = (0..ladder.len()).map(|n| n as f64).collect();
    ctx.table("deterministic_ladder", &ladder, |p| io::write_series(p, ["n", "omega_c"], &ns, &ladder))?;
    ctx.summary("deterministic", &json!({ "solution": det, "omega0": w0, "steps_to_fixed_point": path.len() - 1 }))?;
    println!("share {s}: c* = {:.6}, c_min = {:.6}, first best sustainable: {}", det.c_star, det.c_min, det.first_best_sustainable);
    println!("path from {w0:.6} reaches omega* in {} steps", path.len() - 1);
    Ok(())
}

/// Largest |c_ladder − f| over the first rungs, following state-2 draws
/// from the reset point.
fn ladder_gap(sol: &PlannerSolution, l: &NuLadder) -> anyhow::Result<f64> {
    let (mut w1, mut w2) = (sol.omega0[0], sol.omega0[1]);
    let mut worst: f64 = 0.0;
    for n in 0..=LADDER_CHECK_RUNGS {
        let f1 = sol.policy_eval(0, w1)?.consumption;
        let p2 = sol.policy_eval(1, w2)?;
        worst = worst
            .max((f1 - l.consumption(0, n)).abs())
            .max((p2.consumption - l.consumption(1, n)).abs());
        w1 = p2.promises[0];
        w2 = p2.promises[1];
    }
    Ok(worst)
}

fn run_solve(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sol = solve(&ctx.params, &ctx.cfg.solver)?;
    let sol_path = ctx.solution.clone();
    sol.save(&sol_path)?;
    ctx.outputs.push(sol_path.display().to_string());
    ctx.table("policy", &sol.tables, |p| io::write_policy(p, &sol, 201))?;
    let rows: Vec<Vec<String>> = sol
        .history
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let mut r = vec![(k + 1).to_string()];
            r.extend([h.value_change, h.error_bound, h.policy_change].map(fmt_f64));
            r
        })
        .collect();
    let header: Vec<String> = ["sweep", "value_change", "error_bound", "policy_change"]
        .map(String::from)
        .to_vec();
    ctx.table("history", &sol.history, |p| write_table(p, &header, &rows))?;
    let mut summary = json!({
        "sweeps": sol.sweeps,
        "value_sweeps": sol.value_sweeps,
        "omega0": sol.omega0,
        "c0": sol.c0,
        "mu0": sol.mu0,
        "omega_f": sol.omega_f,
        "omega_c": sol.omega_c,
    });
    println!("converged in {} sweeps", sol.sweeps);
    if sol.num_states() == 2 {
        let sh = &ctx.cfg.shooting;
        let l = shoot(&ctx.params, sh.horizon, sh.tol)?;
        let gap = ladder_gap(&sol, &l)?;
        summary["ladder_gap"] = json!(gap);
        println!("max ladder/VFI consumption gap over {LADDER_CHECK_RUNGS} rungs: {gap:.3e}");
    }
    ctx.summary("solve", &summary)
}

fn run_simulate(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sol = ctx.load_solution()?;
    let s0 = ctx.params.initial_state;
    let w0 = sol.initial_promise(s0, ctx.params.initial_target)?;
    let e = &ctx.cfg.ergodic;
    let path = simulate_path(&sol, s0, w0, e.horizon, e.seed);
    ctx.table("path", &path, |p| io::write_path(p, &path))?;
    let st = regeneration_stats(&path, 0, sol.omega0[0], 1e-12);
    if let Some(w) = &st.warning {
        eprintln!("warning: {w}");
    }
    println!("{} visits to the regeneration point, mean block {:?}", st.times.len(), st.mean_block_length);
    ctx.summary(
        "simulate",
        &json!({
            "start_state": s0 + 1,
            "start_promise": w0,
            "visits": st.times.len(),
            "mean_block_length": st.mean_block_length,
            "warning": st.warning,
        }),
    )
}

fn run_invariant(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sol = ctx.load_solution()?;
    let dist = ctx.distribution(&sol)?;
    ctx.table("distribution", &dist.support, |p| io::write_distribution(p, &dist))?;
    let mut top = dist.support.clone();
    top.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    top.truncate(5);
    let atoms: Vec<Value> = dist
        .return_times()
        .into_iter()
        .map(|(s, w, t)| json!({ "state": s + 1, "omega": w, "return_time": t }))
        .collect();
    for b in top.iter().take(2) {
        println!("state {} omega {:.6}: mass {:.6}", b.state + 1, b.omega, b.mass);
    }
    ctx.summary(
        "invariant",
        &json!({
            "iterations": dist.iterations,
            "residual": dist.residual,
            "support_size": dist.support.len(),
            "total_mass": dist.total(),
            "largest": top.iter().map(|b| json!({"state": b.state + 1, "omega": b.omega, "mass": b.mass})).collect::<Vec<_>>(),
            "atoms": atoms,
        }),
    )
}

fn run_debt(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sol = ctx.load_solution()?;
    let ds = DebtSystem::new(&sol)?;
    let t = ds.table(DEFAULT_GRID)?;
    ctx.table("debt", &t, |p| io::write_debt(p, &t))?;
    println!("d_c = {:.6}, d_max = {:.6}, d_bal = {:?}", ds.d_c, ds.d_max, ds.d_bal);
    ctx.summary(
        "debt_summary",
        &json!({
            "d0": ds.d0,
            "d_min": ds.d_min,
            "d_c": ds.d_c,
            "d_max": ds.d_max,
            "d_star": ds.d_star,
            "d_bal": ds.d_bal,
            "bond_revenue_at_zero": ds.bond_revenue(0.0)?,
        }),
    )
}

fn run_yields(ctx: &mut Ctx) -> anyhow::Result<()> {
    let (kind, sup) = ctx.support()?;
    let rep = AssetPriceReport::new(&sup, &ctx.cfg.pricing.growth, ctx.cfg.pricing.k_max)?;
    ctx.table("yields", &json!({ "points": sup.points, "y": rep.y }), |p| {
        io::write_yields(p, &sup, &rep)
    })?;
    println!("support {kind} ({} points): rho = {:.10}, y_inf = {:.8}", sup.len(), rep.rho, rep.y_inf);
    println!("bound log nu_max = {:.8}, log psi ratio = {:.8}", rep.upsilon, rep.upsilon_psi);
    ctx.summary(
        "pricing",
        &json!({
            "support": kind,
            "points": sup.len(),
            "rho": rep.rho,
            "delta": ctx.params.prefs.delta,
            "y_inf": rep.y_inf,
            "upsilon": rep.upsilon,
            "upsilon_psi": rep.upsilon_psi,
            "growth_shift": rep.growth_shift,
            "psi": rep.psi,
            "spreads": rep.spreads,
        }),
    )
}

fn run_mrp(ctx: &mut Ctx) -> anyhow::Result<()> {
    let (kind, sup) = ctx.support()?;
    let m = mrp_on_support(&sup, &ctx.cfg.pricing.growth)?;
    ctx.table("mrp", &m, |p| io::write_mrp(p, &sup, &m))?;
    let ident = m.iter().map(|r| r.identity_residual().abs()).fold(0.0, f64::max);
    let lo = m.iter().map(|r| r.mrp).fold(f64::INFINITY, f64::min);
    let hi = m.iter().map(|r| r.mrp).fold(f64::NEG_INFINITY, f64::max);
    let star = m.first().map(|r| r.mrp_star);
    println!("MRP in [{lo:.6}, {hi:.6}], MRP* = {star:?}, identity residual {ident:.1e}");
    ctx.summary(
        "mrp_summary",
        &json!({ "support": kind, "mrp_min": lo, "mrp_max": hi, "mrp_star": star, "identity_residual": ident }),
    )
}

fn run_welfare(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sol = ctx.load_solution()?;
    let dist = ctx.distribution(&sol)?;
    let w = welfare_measures(&sol, &dist)?;
    ctx.table("welfare", &w.points, |p| io::write_welfare(p, &w))?;
    println!("E iota = {:.6}, E theta = {:.6}", w.mean_iota, w.mean_theta);
    ctx.summary("welfare_summary", &json!({ "mean_iota": w.mean_iota, "mean_theta": w.mean_theta }))
}

fn run_shock(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sol = ctx.load_solution()?;
    let dist = ctx.distribution(&sol)?;
    let sc = &ctx.cfg.shock;
    let cfg = IrfConfig {
        horizon: sc.horizon,
        enumerate_upto: sc.enumerate_upto,
        monte_carlo: (sc.paths > 0).then_some(MonteCarloConfig {
            paths: sc.paths,
            seed: sc.seed,
        }),
    };
    let r = demographic_irf(&sol, &start_points(&dist), sc.epsilon, &cfg)?;
    ctx.table("irf", &r, |p| io::write_irf(p, &r))?;
    println!(
        "shock {}: {} violations of shocked >= baseline, max z {:?}",
        r.epsilon,
        r.violations,
        r.max_z_score()
    );
    ctx.summary(
        "shock_summary",
        &json!({
            "epsilon": r.epsilon,
            "violations": r.violations,
            "worst_shortfall": r.worst_shortfall,
            "strict_share": r.strict_share,
            "max_z_score": r.max_z_score(),
            "enumerated": r.enumerated,
            "monte_carlo": r.monte_carlo,
            "live_paths": r.live_paths,
        }),
    )
}

fn run_shoot(ctx: &mut Ctx) -> anyhow::Result<()> {
    let sh = ctx.cfg.shooting.clone();
    let l = shoot(&ctx.params, sh.horizon, sh.tol)?;
    ctx.table("ladder", &l, |p| io::write_ladder(p, &l))?;
    let (chi, ups) = chi_upsilon(&ctx.params)?;
    let a5 = check_assumption5(&ctx.params, &l)?;
    let mut summary = json!({
        "nu0": l.nu0(),
        "nu_inf": l.nu_inf,
        "terminal_residual": l.terminal_residual,
        "converged": l.converged,
        "d1_residual": l.d1_residual(&ctx.params)?,
        "chi": chi,
        "upsilon": ups,
        "assumption5": a5,
    });
    if !l.converged {
        eprintln!(
            "warning: |nu(N+1) - nu_inf| = {:.2e} exceeds {:.1e} at horizon {}",
            l.terminal_residual, sh.tol, sh.horizon
        );
    }
    println!("nu0 = {:.8}, nu_inf = {:.8}, bound = {ups:.8}", l.nu0(), l.nu_inf);
    if ctx.solution.exists() {
        let sol = ctx.load_solution()?;
        let gap = ladder_gap(&sol, &l)?;
        summary["ladder_gap"] = json!(gap);
        println!("max ladder/VFI consumption gap over {LADDER_CHECK_RUNGS} rungs: {gap:.3e}");
    }
    ctx.summary("shoot", &summary)
}
