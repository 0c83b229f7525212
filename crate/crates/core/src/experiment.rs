//! Scenario runners behind the command-line subcommands.
//!
//! Each runner turns a [`ScenarioConfig`] into one [`Table`] plus a JSON
//! manifest. Grid points are evaluated on the rayon pool and collected in
//! grid order, so output never depends on scheduling.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::config::{ScenarioConfig, StaMode};
use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, propagate, UnitaryOperator};
use crate::output::{write_json, Cell, Table};
use crate::protocol::{DriveKind, DEFAULT_GAMMA_SAMPLES};
use crate::readout::{conditional_split, correct_joint, sample_measured};
use crate::sampling::{convergence_study, derive_seed, substream};
use crate::tpm::{
    exp_work_moments, free_energy_difference, jarzynski_residual, thermal_populations, transition_probabilities,
    ExpWorkMoments, JointProbabilityTable, TransitionMatrix, WorkDistribution,
};

/// `‖U†U − I‖` allowed for any propagator.
pub const UNITARITY_CONTRACT: f64 = 1e-9;
/// Allowed `|⟨e^{−βW}⟩ − e^{−βΔF}|`.
pub const JARZYNSKI_CONTRACT: f64 = 1e-6;
/// Allowed deviation of transition-matrix row and column sums from one.
pub const STOCHASTIC_CONTRACT: f64 = 1e-9;

/// Key for the finite-shot readout streams.
const READOUT_STREAM_KEY: u64 = 0x5245_4144_4f55_5431;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SweepTau,
    StaCompare,
    JointProbs,
    Estimator,
    Gamma,
    CdWaveform,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::SweepTau,
        Command::StaCompare,
        Command::JointProbs,
        Command::Estimator,
        Command::Gamma,
        Command::CdWaveform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SweepTau => "sweep-tau",
            Command::StaCompare => "sta-compare",
            Command::JointProbs => "joint-probs",
            Command::Estimator => "estimator",
            Command::Gamma => "gamma",
            Command::CdWaveform => "cd-waveform",
        }
    }
}

/// A finished run: its table and the command-specific part of the manifest.
#[derive(Debug, Clone)]
pub struct Run {
    pub command: Command,
    pub table: Table,
    pub details: Json,
}

/// Exact propagation of one `(τ, kind)` grid point.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub tau: f64,
    pub kind: DriveKind,
    pub n_steps: usize,
    pub spectrum0: Vec<f64>,
    pub spectrum_tau: Vec<f64>,
    pub transitions: TransitionMatrix,
    pub unitarity_defect: f64,
}

pub fn propagate_point(cfg: &ScenarioConfig, tau: f64, kind: DriveKind) -> Result<Propagation> {
    let drive = cfg.drive(tau, kind)?;
    let n_steps = match cfg.scenario.n_steps {
        Some(n) => n,
        None => drive.default_steps()?,
    };
    let u = propagate(&drive, n_steps)?;
    let unitarity_defect = u.unitarity_defect();
    if !(unitarity_defect <= UNITARITY_CONTRACT) {
        return Err(Error::Contract(format!(
            "propagator at tau = {tau} ms ({}) has unitarity defect {unitarity_defect:e}",
            kind.label()
        )));
    }
    let (h0, h1) = drive.endpoint_hamiltonians()?;
    let (b0, b1) = (eigendecompose(&h0), eigendecompose(&h1));
    let transitions = transition_probabilities(&u, &b0, &b1)?;
    let defect = transitions.doubly_stochastic_defect();
    if !(defect <= STOCHASTIC_CONTRACT) {
        return Err(Error::Contract(format!(
            "transition matrix at tau = {tau} ms ({}) is not doubly stochastic (defect {defect:e})",
            kind.label()
        )));
    }
    Ok(Propagation {
        tau,
        kind,
        n_steps,
        spectrum0: b0.values,
        spectrum_tau: b1.values,
        transitions,
        unitarity_defect,
    })
}

/// Work statistics of a propagated point at one temperature.
#[derive(Debug, Clone)]
pub struct ThermalPoint {
    pub beta_z: f64,
    pub beta: f64,
    pub table: JointProbabilityTable,
    pub moments: ExpWorkMoments,
    pub exact_mean: f64,
    pub residual: f64,
}

pub fn thermal_point(cfg: &ScenarioConfig, p: &Propagation, beta_z: f64) -> Result<ThermalPoint> {
    let beta = cfg.beta(beta_z);
    let state = thermal_populations(&p.spectrum0, beta)?;
    let table = JointProbabilityTable::new(&state, &p.transitions)?;
    let wd = WorkDistribution::from_joint(&table, &p.spectrum0, &p.spectrum_tau)?;
    let moments = exp_work_moments(&wd, beta);
    let residual = jarzynski_residual(&wd, beta, &p.spectrum0, &p.spectrum_tau)?;
    if !(residual <= JARZYNSKI_CONTRACT) {
        return Err(Error::Contract(format!(
            "Jarzynski residual {residual:e} at tau = {} ms, beta_z = {beta_z} ({})",
            p.tau,
            p.kind.label()
        )));
    }
    let exact_mean = (-beta * free_energy_difference(&p.spectrum0, &p.spectrum_tau, beta)?).exp();
    Ok(ThermalPoint {
        beta_z,
        beta,
        table,
        moments,
        exact_mean,
        residual,
    })
}

/// Closed-form reference quantities at one temperature. Both limits share the
/// protocol's endpoint Hamiltonians, which do not depend on `τ`.
#[derive(Debug, Clone)]
pub struct Limits {
    pub beta_z: f64,
    pub beta: f64,
    pub delta_f: f64,
    pub spectrum0: Vec<f64>,
    pub spectrum_tau: Vec<f64>,
    pub adiabatic: JointProbabilityTable,
    pub sudden: JointProbabilityTable,
    pub variance_adiabatic: f64,
    pub variance_sudden: f64,
}

pub fn limits(cfg: &ScenarioConfig, beta_z: f64) -> Result<Limits> {
    let beta = cfg.beta(beta_z);
    let (h0, h1) = cfg.drive(1.0, DriveKind::Bare)?.endpoint_hamiltonians()?;
    let (b0, b1) = (eigendecompose(&h0), eigendecompose(&h1));
    let state = thermal_populations(&b0.values, beta)?;
    let sudden_trans = transition_probabilities(&UnitaryOperator::identity(b0.dim()), &b0, &b1)?;
    let adiabatic = JointProbabilityTable::new(&state, &TransitionMatrix::identity(b0.dim()))?;
    let sudden = JointProbabilityTable::new(&state, &sudden_trans)?;
    let variance = |t: &JointProbabilityTable| -> Result<f64> {
        let wd = WorkDistribution::from_joint(t, &b0.values, &b1.values)?;
        Ok(exp_work_moments(&wd, beta).variance)
    };
    Ok(Limits {
        beta_z,
        beta,
        delta_f: free_energy_difference(&b0.values, &b1.values, beta)?,
        variance_adiabatic: variance(&adiabatic)?,
        variance_sudden: variance(&sudden)?,
        spectrum0: b0.values,
        spectrum_tau: b1.values,
        adiabatic,
        sudden,
    })
}

/// Propagates every `(τ, kind)` pair, τ-major.
fn propagate_grid(cfg: &ScenarioConfig, kinds: &[DriveKind]) -> Result<Vec<Propagation>> {
    let points: Vec<(f64, DriveKind)> = cfg
        .scenario
        .tau_grid_ms
        .iter()
        .flat_map(|&t| kinds.iter().map(move |&k| (t, k)))
        .collect();
    points.par_iter().map(|&(t, k)| propagate_point(cfg, t, k)).collect()
}

fn step_details(props: &[Propagation]) -> Json {
    Json::Array(
        props
            .iter()
            .map(|p| json!({ "tau_ms": p.tau, "kind": p.kind.label(), "n_steps": p.n_steps }))
            .collect(),
    )
}

/// Mean and variance of `e^{−βW}` per `(τ, βZ)`, with the Jarzynski residual
/// and `Γ`. Uses the counter-diabatic drive only when `sta = "on"`.
pub fn run_sweep_tau(cfg: &ScenarioConfig) -> Result<Run> {
    let kind = if cfg.scenario.sta == StaMode::On {
        DriveKind::CounterDiabatic
    } else {
        DriveKind::Bare
    };
    let props = propagate_grid(cfg, &[kind])?;
    let gammas = gamma_grid(cfg)?;
    let mut table = Table::new(
        Command::SweepTau.name(),
        &[
            "tau_ms",
            "beta_z",
            "kind",
            "n_steps",
            "mean_exp_work",
            "variance_exp_work",
            "exact_mean",
            "jarzynski_residual",
            "p_01",
            "p_10",
            "unitarity_defect",
            "gamma",
        ],
    );
    for (p, g) in props.iter().zip(&gammas) {
        for &bz in &cfg.scenario.beta_z {
            let tp = thermal_point(cfg, p, bz)?;
            table.push(vec![
                p.tau.into(),
                bz.into(),
                p.kind.label().into(),
                p.n_steps.into(),
                tp.moments.mean.into(),
                tp.moments.variance.into(),
                tp.exact_mean.into(),
                tp.residual.into(),
                p.transitions.get(0, 1).into(),
                p.transitions.get(1, 0).into(),
                p.unitarity_defect.into(),
                g.0.into(),
            ]);
        }
    }
    Ok(Run {
        command: Command::SweepTau,
        table,
        details: json!({ "steps": step_details(&props) }),
    })
}

/// Bare and counter-diabatic rows for every `(τ, βZ)`. Needs `sta = "both"`.
pub fn run_sta_compare(cfg: &ScenarioConfig) -> Result<Run> {
    if cfg.scenario.sta != StaMode::Both {
        return Err(Error::Config("scenario.sta: sta-compare needs sta = \"both\"".into()));
    }
    let props = propagate_grid(cfg, &[DriveKind::Bare, DriveKind::CounterDiabatic])?;
    let lims: Vec<Limits> = cfg
        .scenario
        .beta_z
        .iter()
        .map(|&bz| limits(cfg, bz))
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        Command::StaCompare.name(),
        &[
            "tau_ms",
            "beta_z",
            "kind",
            "mean_exp_work",
            "variance_exp_work",
            "max_off_diagonal",
            "variance_adiabatic",
            "variance_sudden",
        ],
    );
    for pair in props.chunks(2) {
        for lim in &lims {
            for p in pair {
                let tp = thermal_point(cfg, p, lim.beta_z)?;
                table.push(vec![
                    p.tau.into(),
                    lim.beta_z.into(),
                    p.kind.label().into(),
                    tp.moments.mean.into(),
                    tp.moments.variance.into(),
                    p.transitions.max_off_diagonal().into(),
                    lim.variance_adiabatic.into(),
                    lim.variance_sudden.into(),
                ]);
            }
        }
    }
    Ok(Run {
        command: Command::StaCompare,
        table,
        details: json!({ "steps": step_details(&props) }),
    })
}

/// Joint probabilities `P[m][n]`, and when a readout model is configured the
/// measured and corrected tables too.
pub fn run_joint_probabilities(cfg: &ScenarioConfig) -> Result<Run> {
    let props = propagate_grid(cfg, &cfg.scenario.sta.kinds())?;
    let model = cfg.readout_model();
    let shots = cfg.readout.as_ref().and_then(|r| r.shots);
    let readout_seed = derive_seed(cfg.sampling.seed, READOUT_STREAM_KEY);
    let mut table = Table::new(
        Command::JointProbs.name(),
        &[
            "tau_ms",
            "beta_z",
            "kind",
            "source",
            "m",
            "n",
            "probability",
            "clamped_mass",
        ],
    );
    let mut point = 0u32;
    for p in &props {
        for &bz in &cfg.scenario.beta_z {
            let tp = thermal_point(cfg, p, bz)?;
            let mut emit = |source: &str, entries: &[Vec<f64>], clamped: Cell| {
                for (m, row) in entries.iter().enumerate() {
                    for (n, &v) in row.iter().enumerate() {
                        table.push(vec![
                            p.tau.into(),
                            bz.into(),
                            p.kind.label().into(),
                            source.into(),
                            m.into(),
                            n.into(),
                            v.into(),
                            clamped.clone(),
                        ]);
                    }
                }
            };
            emit("true", tp.table.entries(), Cell::Empty);
            if let Some(model) = &model {
                let (p0, pc) = conditional_split(&tp.table);
                let (p0_exp, pc_exp) = match shots {
                    Some(s) => sample_measured(&p0, &pc, model, s, &mut substream(readout_seed, point, 0))?,
                    None => (model.apply_to_vector(&p0)?, model.apply_to_matrix(&pc)?),
                };
                let measured: Vec<Vec<f64>> = (0..p0.len())
                    .map(|m| (0..p0.len()).map(|n| pc_exp[n][m] * p0_exp[m]).collect())
                    .collect();
                emit("measured", &measured, Cell::Empty);
                let corrected = correct_joint(&p0_exp, &pc_exp, model)?;
                emit("corrected", corrected.table.entries(), corrected.clamped_mass.into());
            }
            point += 1;
        }
    }
    let details = json!({
        "steps": step_details(&props),
        "readout_shots": shots,
        "readout_seed": shots.map(|_| readout_seed),
    });
    Ok(Run {
        command: Command::JointProbs,
        table,
        details,
    })
}

/// Jarzynski estimator bias and RMSE versus sample count, for the sudden and
/// adiabatic limits and every propagated `τ`, at each temperature.
pub fn run_estimator_convergence(cfg: &ScenarioConfig) -> Result<Run> {
    let kind = if cfg.scenario.sta == StaMode::On {
        DriveKind::CounterDiabatic
    } else {
        DriveKind::Bare
    };
    let props = propagate_grid(cfg, &[kind])?;
    let s = &cfg.sampling;
    let mut table = Table::new(
        Command::Estimator.name(),
        &[
            "scenario",
            "tau_ms",
            "beta_z",
            "n",
            "mean_estimate",
            "bias",
            "rmse",
            "std_error",
            "delta_f",
            "replicas",
        ],
    );
    let mut seeds = Vec::new();
    let mut index = 0u64;
    for &bz in &cfg.scenario.beta_z {
        let lim = limits(cfg, bz)?;
        let mut scenarios: Vec<(&str, Cell, JointProbabilityTable)> = vec![
            ("sudden", Cell::Empty, lim.sudden.clone()),
            ("adiabatic", Cell::Empty, lim.adiabatic.clone()),
        ];
        for p in &props {
            scenarios.push((p.kind.label(), p.tau.into(), thermal_point(cfg, p, bz)?.table));
        }
        for (label, tau, joint) in scenarios {
            let seed = derive_seed(s.seed, index);
            index += 1;
            let series = convergence_study(
                &joint,
                &lim.spectrum0,
                &lim.spectrum_tau,
                lim.beta,
                &s.n_grid,
                s.replicas,
                seed,
            )?;
            seeds.push(json!({ "scenario": label, "tau_ms": tau.as_f64(), "beta_z": bz, "seed": seed }));
            for k in 0..series.n_grid.len() {
                table.push(vec![
                    label.into(),
                    tau.clone(),
                    bz.into(),
                    series.n_grid[k].into(),
                    series.mean_estimate[k].into(),
                    series.bias[k].into(),
                    series.rmse[k].into(),
                    series.std_error[k].into(),
                    series.delta_f.into(),
                    series.replicas.into(),
                ]);
            }
        }
    }
    Ok(Run {
        command: Command::Estimator,
        table,
        details: json!({ "scenario_seeds": seeds }),
    })
}

/// `(Γ, argmax time)` of the bare drive for every `τ` in the grid.
fn gamma_grid(cfg: &ScenarioConfig) -> Result<Vec<(f64, f64)>> {
    cfg.scenario
        .tau_grid_ms
        .par_iter()
        .map(|&t| {
            let r = cfg
                .drive(t, DriveKind::Bare)?
                .adiabatic_parameter(DEFAULT_GAMMA_SAMPLES)?;
            Ok((r.gamma, r.argmax_time))
        })
        .collect()
}

pub fn run_gamma_report(cfg: &ScenarioConfig) -> Result<Run> {
    let gammas = gamma_grid(cfg)?;
    let mut table = Table::new(
        Command::Gamma.name(),
        &["tau_ms", "gamma", "argmax_ms", "gamma_times_tau"],
    );
    for (&t, &(g, at)) in cfg.scenario.tau_grid_ms.iter().zip(&gammas) {
        table.push(vec![t.into(), g.into(), at.into(), (g * t).into()]);
    }
    Ok(Run {
        command: Command::Gamma,
        table,
        details: json!({ "grid_samples": DEFAULT_GAMMA_SAMPLES }),
    })
}

/// Field amplitudes `Z`, `X(t)`, `Y(t)` of the counter-diabatic drive.
pub fn run_cd_waveform(cfg: &ScenarioConfig) -> Result<Run> {
    let w = &cfg.waveform;
    let samples = cfg.drive(w.tau_ms, DriveKind::CounterDiabatic)?.waveform(w.points)?;
    let mut table = Table::new(Command::CdWaveform.name(), &["t_ms", "z_khz", "x_khz", "y_khz"]);
    for s in samples {
        table.push(vec![s.t.into(), s.z.into(), s.x.into(), s.y.into()]);
    }
    Ok(Run {
        command: Command::CdWaveform,
        table,
        details: json!({ "tau_ms": w.tau_ms, "points": w.points }),
    })
}

pub fn run(cmd: Command, cfg: &ScenarioConfig) -> Result<Run> {
    match cmd {
        Command::SweepTau => run_sweep_tau(cfg),
        Command::StaCompare => run_sta_compare(cfg),
        Command::JointProbs => run_joint_probabilities(cfg),
        Command::Estimator => run_estimator_convergence(cfg),
        Command::Gamma => run_gamma_report(cfg),
        Command::CdWaveform => run_cd_waveform(cfg),
    }
}

/// Every command in [`Command::ALL`] order. `sta-compare` is skipped unless
/// `sta = "both"`.
pub fn run_all(cfg: &ScenarioConfig) -> Result<Vec<Run>> {
    Command::ALL
        .iter()
        .filter(|&&c| c != Command::StaCompare || cfg.scenario.sta == StaMode::Both)
        .map(|&c| run(c, cfg))
        .collect()
}

/// Manifest: config echo, crate version, seed, per-temperature reference
/// constants and the command's own details.
pub fn manifest(run: &Run, cfg: &ScenarioConfig) -> Result<Json> {
    let derived: Vec<Json> = cfg
        .scenario
        .beta_z
        .iter()
        .map(|&bz| {
            let l = limits(cfg, bz)?;
            Ok(json!({
                "beta_z": bz,
                "beta_per_khz": l.beta,
                "delta_f_khz": l.delta_f,
                "exp_minus_beta_delta_f": (-l.beta * l.delta_f).exp(),
                "variance_adiabatic": l.variance_adiabatic,
                "variance_sudden": l.variance_sudden,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(json!({
        "command": run.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "format": cfg.output.format.extension(),
        "table": format!("{}.{}", run.table.name, cfg.output.format.extension()),
        "columns": run.table.columns,
        "rows": run.table.rows.len(),
        "seed": cfg.sampling.seed,
        "z_khz": cfg.z(),
        "derived": derived,
        "details": run.details,
        "config": cfg.to_json(),
    }))
}

/// Writes the table and `<command>.manifest.json` into the configured output
/// directory. Returns the paths written.
pub fn write_run(run: &Run, cfg: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output.dir;
    let table_path = run.table.write(dir, cfg.output.format)?;
    let manifest_path = dir.join(format!("{}.manifest.json", run.command.name()));
    write_json(&manifest_path, &manifest(run, cfg)?)?;
    Ok(vec![table_path, manifest_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::bundled();
        c.scenario.tau_grid_ms = vec![0.05, 0.8];
        c.scenario.beta_z = vec![0.6];
        c.sampling.n_grid = vec![10, 100];
        c.sampling.replicas = 200;
        c.waveform.points = 11;
        c
    }

    #[test]
    fn sweep_mean_is_constant_and_variance_drops() {
        let run = run_sweep_tau(&small()).unwrap();
        assert_eq!(run.table.rows.len(), 2);
        let exact = 0.6f64.cosh() / 0.3f64.cosh();
        for m in run.table.floats("mean_exp_work") {
            assert!((m.unwrap() - exact).abs() < 1e-6);
        }
        let v = run.table.floats("variance_exp_work");
        assert!(v[0].unwrap() > 0.28 && v[0].unwrap() < 0.305, "{v:?}");
        assert!((v[1].unwrap() - 0.084863).abs() < 0.002, "{v:?}");
    }

    #[test]
    fn sta_compare_pairs_rows() {
        let run = run_sta_compare(&small()).unwrap();
        let kinds: Vec<&str> = run.table.rows.iter().map(|r| r[2].as_str().unwrap()).collect();
        assert_eq!(kinds, ["bare", "cd", "bare", "cd"]);
        let v = run.table.floats("variance_exp_work");
        let va = run.table.floats("variance_adiabatic");
        assert!((v[1].unwrap() - va[1].unwrap()).abs() < 1e-6);
        assert!(v[0].unwrap() > v[1].unwrap());
    }

    #[test]
    fn sta_compare_needs_both() {
        let mut c = small();
        c.scenario.sta = StaMode::Off;
        assert!(matches!(run_sta_compare(&c), Err(Error::Config(_))));
        assert_eq!(run_all(&c).unwrap().len(), 5);
    }

    #[test]
    fn joint_probs_sources() {
        let run = run_joint_probabilities(&small()).unwrap();
        // 2 taus x 2 kinds x 1 beta x 3 sources x 4 cells
        assert_eq!(run.table.rows.len(), 48);
        let p = run.table.floats("probability");
        let total: f64 = p[..4].iter().map(|v| v.unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_probs_exact_readout_round_trips() {
        let mut c = small();
        c.readout.as_mut().unwrap().shots = None;
        let run = run_joint_probabilities(&c).unwrap();
        let p = run.table.floats("probability");
        for k in 0..4 {
            assert!((p[k].unwrap() - p[k + 8].unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_propagation_still_meets_contracts() {
        // One step is far from converged but still unitary, and any unitary
        // satisfies the Jarzynski identity.
        let mut c = small();
        c.scenario.n_steps = Some(1);
        let p = propagate_point(&c, 0.8, DriveKind::Bare).unwrap();
        assert!(p.unitarity_defect <= UNITARITY_CONTRACT);
        let tp = thermal_point(&c, &p, 0.6).unwrap();
        assert!(tp.residual <= JARZYNSKI_CONTRACT);
    }

    #[test]
    fn manifest_echoes_config() {
        let c = small();
        let run = run_gamma_report(&c).unwrap();
        let m = manifest(&run, &c).unwrap();
        assert_eq!(m["command"], "gamma");
        assert_eq!(m["seed"], c.sampling.seed);
        assert_eq!(m["config"]["scenario"]["beta_z"][0], 0.6);
        let va = m["derived"][0]["variance_adiabatic"].as_f64().unwrap();
        assert!((va - 0.0848630).abs() < 1e-6);
    }

    #[test]
    fn estimator_rows_cover_scenarios() {
        let run = run_estimator_convergence(&small()).unwrap();
        // (sudden, adiabatic, 2 taus) x 2 sample counts
        assert_eq!(run.table.rows.len(), 8);
        let rmse = run.table.floats("rmse");
        assert!(
            rmse[0].unwrap() > rmse[2].unwrap() && rmse[1].unwrap() > rmse[3].unwrap(),
            "{rmse:?}"
        );
    }
}
