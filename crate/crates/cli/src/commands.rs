use std::path::Path;
use std::time::Instant;

use btc_topology::dynamics::{
    coherent_spin_state, evolve_with, rank_weights, universality_experiment, EvolutionMethod, EvolveOptions, Trajectory,
};
use btc_topology::linalg::trace;
use btc_topology::liouvillian::{
    extract_hoppings, spectrum, steady_state_from, LiouvillianMatrix, ModelParameters, SpectralDecomposition,
};
use btc_topology::localizer::{
    default_plane_grid, extract_islands, sweep_kappa, sweep_position, sweep_spectral, ComplexGrid, LocalizerOptions,
    LocalizerProbe, SweepAxis, SweepResult,
};
use btc_topology::spin::{build_spin_operators, SpinRepresentation};
use btc_topology::tensor::build_tensor_basis;
use faer::c64;
use serde::Serialize;

use crate::config::{RunConfig, SweepKind};
use crate::error::CliError;
use crate::output::{num, write_sidecar, Csv, OutputFile};

pub const POSITION_HEADER: [&str; 7] = ["x0", "re_lambda0", "im_lambda0", "kappa", "nu", "mu", "well_defined"];
pub const SPECTRAL_HEADER: [&str; 7] = ["re_lambda0", "im_lambda0", "x0", "kappa", "nu", "mu", "well_defined"];
pub const EIGENVALUE_HEADER: [&str; 3] = ["index", "re_lambda", "im_lambda"];
pub const HOPPING_HEADER: [&str; 12] = [
    "k", "q", "re_tplus", "im_tplus", "re_tminus", "im_tminus", "re_gamma", "im_gamma", "re_wplus", "im_wplus",
    "re_wminus", "im_wminus",
];
pub const MODES_HEADER: [&str; 5] = ["mode_index", "re_lambda", "im_lambda", "k", "w_k"];
pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "jx", "jy", "jz"];
pub const BASIS_HEADER: [&str; 4] = ["row", "col", "re", "im"];

/// Named phases of a command, for the timing file.
#[derive(Default)]
pub struct Phases(pub Vec<(String, f64)>);

impl Phases {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

fn model(cfg: &RunConfig) -> Result<LiouvillianMatrix, CliError> {
    let params = ModelParameters::new(cfg.omega, cfg.gamma, cfg.n_spins)?;
    Ok(LiouvillianMatrix::for_params(&params)?)
}

fn probe(cfg: &RunConfig, liouv: &LiouvillianMatrix) -> Result<LocalizerProbe, CliError> {
    Ok(LocalizerProbe::for_liouvillian(liouv, LocalizerOptions { zero_tol_rel: cfg.zero_tol_rel })?)
}

fn lambda0(cfg: &RunConfig) -> c64 {
    c64::new(cfg.lambda0.re, cfg.lambda0.im)
}

#[derive(Serialize)]
struct ModelSummary {
    j: f64,
    dim: usize,
    superoperator_dim: usize,
    gamma_over_omega: Option<f64>,
}

fn summary(liouv: &LiouvillianMatrix) -> ModelSummary {
    let rep = liouv.basis().representation();
    ModelSummary { j: rep.j().value(), dim: rep.dim(), superoperator_dim: liouv.dim(), gamma_over_omega: liouv.params().gamma_ratio() }
}

fn tensor_file(k: usize, q: i64) -> String {
    if q < 0 {
        format!("basis/T_{k}_m{}.csv", -q)
    } else {
        format!("basis/T_{k}_{q}.csv")
    }
}

pub fn basis(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Results {
        j: f64,
        dim: usize,
        tensor_count: usize,
        gram_residual: f64,
        conjugation_residual: f64,
    }
    let rep = SpinRepresentation::from_spins(cfg.n_spins);
    let basis = phases.time("build", || build_tensor_basis(&rep))?;
    let mut outputs = Vec::new();
    for (idx, t) in basis.tensors().iter().enumerate() {
        let (k, q) = basis.label(idx);
        let mut csv = Csv::new(tensor_file(k, q), &BASIS_HEADER);
        for col in 0..t.ncols() {
            for row in 0..t.nrows() {
                let z = t[(row, col)];
                if z != c64::new(0.0, 0.0) {
                    csv.row([row.to_string(), col.to_string(), num(z.re), num(z.im)]);
                }
            }
        }
        outputs.push(csv.finish(out)?);
    }
    let results = Results {
        j: rep.j().value(),
        dim: rep.dim(),
        tensor_count: basis.len(),
        gram_residual: basis.gram_residual(),
        conjugation_residual: basis.conjugation_residual(),
    };
    write_sidecar(out, "basis", cfg, &outputs, &results)?;
    Ok(())
}

fn eigenvalue_csv(spec: &SpectralDecomposition) -> Csv {
    let mut csv = Csv::new("eigenvalues.csv", &EIGENVALUE_HEADER);
    for (i, l) in spec.eigenvalues.iter().enumerate() {
        csv.row([i.to_string(), num(l.re), num(l.im)]);
    }
    csv
}

pub fn spectrum_cmd(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        steady_index: Option<usize>,
        zero_count: usize,
        zero_tol: f64,
        max_residual: f64,
        max_condition: f64,
        eigenbasis_condition: f64,
        slowest_oscillatory: Option<usize>,
    }
    let liouv = phases.time("build", || model(cfg))?;
    let spec = phases.time("eigen", || spectrum(&liouv))?;
    let outputs = [eigenvalue_csv(&spec).finish(out)?];
    let results = Results {
        model: summary(&liouv),
        steady_index: spec.steady_index,
        zero_count: spec.zero_count,
        zero_tol: spec.zero_tol,
        max_residual: spec.max_residual,
        max_condition: spec.max_condition(),
        eigenbasis_condition: spec.eigenbasis_condition(),
        slowest_oscillatory: spec.slowest_oscillatory(1e-9),
    };
    write_sidecar(out, "spectrum", cfg, &outputs, &results)?;
    Ok(())
}

pub fn hoppings(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        residual_norm: f64,
        relative_residual: f64,
        max_entry: f64,
    }
    let liouv = phases.time("build", || model(cfg))?;
    let h = extract_hoppings(&liouv);
    let mut csv = Csv::new("hoppings.csv", &HOPPING_HEADER);
    for s in &h.sites {
        csv.row([
            s.k.to_string(),
            s.q.to_string(),
            num(s.tplus.re),
            num(s.tplus.im),
            num(s.tminus.re),
            num(s.tminus.im),
            num(s.gamma_onsite.re),
            num(s.gamma_onsite.im),
            num(s.wplus.re),
            num(s.wplus.im),
            num(s.wminus.re),
            num(s.wminus.im),
        ]);
    }
    let outputs = [csv.finish(out)?];
    let results = Results {
        model: summary(&liouv),
        residual_norm: h.residual_norm,
        relative_residual: h.relative_residual(),
        max_entry: h.max_entry,
    };
    write_sidecar(out, "hoppings", cfg, &outputs, &results)?;
    Ok(())
}

fn push_position_rows(csv: &mut Csv, sweep: &SweepResult) {
    for s in &sweep.samples {
        csv.row([num(s.x0), num(s.lambda0.re), num(s.lambda0.im), num(s.kappa), s.nu.to_string(), num(s.mu), s.well_defined.to_string()]);
    }
}

fn push_spectral_rows(csv: &mut Csv, sweep: &SweepResult) {
    for s in &sweep.samples {
        csv.row([num(s.lambda0.re), num(s.lambda0.im), num(s.x0), num(s.kappa), s.nu.to_string(), num(s.mu), s.well_defined.to_string()]);
    }
}

#[derive(Serialize)]
struct Domain {
    x_start: f64,
    x_end: f64,
    points: usize,
    nu: i64,
}

#[derive(Serialize)]
struct PositionSummary {
    kappa: f64,
    nonzero_count: usize,
    ill_defined_count: usize,
    domains: Vec<Domain>,
    /// `x0` pairs straddling each change of index.
    boundaries: Vec<(f64, f64)>,
}

fn position_summary(sweep: &SweepResult) -> PositionSummary {
    let x: Vec<f64> = sweep.samples.iter().map(|s| s.x0).collect();
    PositionSummary {
        kappa: sweep.kappa,
        nonzero_count: sweep.nonzero_count(),
        ill_defined_count: sweep.samples.iter().filter(|s| !s.well_defined).count(),
        domains: sweep
            .nonzero_domains()
            .into_iter()
            .map(|(a, b)| Domain { x_start: x[a], x_end: x[b], points: b - a + 1, nu: sweep.samples[a].nu })
            .collect(),
        boundaries: sweep.boundaries.iter().map(|&i| (x[i], x[i + 1])).collect(),
    }
}

pub fn localizer_x(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        real_symmetric_path: bool,
        sweep: PositionSummary,
    }
    let kappa = cfg.single_kappa()?;
    let liouv = phases.time("build", || model(cfg))?;
    let probe = probe(cfg, &liouv)?;
    let sweep = phases.time("sweep", || sweep_position(&probe, &cfg.x_grid(), lambda0(cfg), kappa))?;
    let mut csv = Csv::new("localizer_x.csv", &POSITION_HEADER);
    push_position_rows(&mut csv, &sweep);
    let outputs = [csv.finish(out)?];
    let results = Results {
        model: summary(&liouv),
        real_symmetric_path: probe.has_real_form() && cfg.lambda0.im == 0.0,
        sweep: position_summary(&sweep),
    };
    write_sidecar(out, "localizer-x", cfg, &outputs, &results)?;
    Ok(())
}

/// Default padded box around the spectrum with any configured bounds applied.
fn plane_grid(cfg: &RunConfig, eigenvalues: &[c64]) -> ComplexGrid {
    let auto = default_plane_grid(eigenvalues, 2);
    let p = &cfg.plane;
    let (re_lo, re_hi) = (p.re_min.unwrap_or(auto.re[0]), p.re_max.unwrap_or(auto.re[1]));
    let (im_lo, im_hi) = (p.im_min.unwrap_or(auto.im[0]), p.im_max.unwrap_or(auto.im[1]));
    ComplexGrid::linspace(re_lo, re_hi, p.re_count, im_lo, im_hi, p.im_count)
}

#[derive(Serialize)]
struct GridSummary {
    re_min: f64,
    re_max: f64,
    re_count: usize,
    im_min: f64,
    im_max: f64,
    im_count: usize,
    cell_area: f64,
}

fn grid_summary(g: &ComplexGrid) -> GridSummary {
    GridSummary {
        re_min: g.re[0],
        re_max: *g.re.last().expect("validated"),
        re_count: g.re.len(),
        im_min: g.im[0],
        im_max: *g.im.last().expect("validated"),
        im_count: g.im.len(),
        cell_area: g.cell_area(),
    }
}

#[derive(Serialize)]
struct IslandSummary {
    cells: usize,
    nu_min: i64,
    nu_max: i64,
    /// Indices into the eigenvalue file of eigenvalues inside the island.
    eigenvalues: Vec<usize>,
}

#[derive(Serialize)]
struct PlaneSummary {
    kappa: f64,
    nonzero_count: usize,
    ill_defined_count: usize,
    islands: Vec<IslandSummary>,
    /// Slowest-decaying oscillatory pair and whether each lies in an island.
    slowest_oscillatory: Vec<(usize, bool)>,
}

fn plane_summary(cfg: &RunConfig, sweep: &SweepResult, spec: &SpectralDecomposition) -> PlaneSummary {
    let grid = sweep.grid().expect("spectral sweep");
    let islands = match cfg.adjacency {
        crate::config::AdjacencySpec::Four => sweep.islands.clone(),
        other => extract_islands(grid, &sweep.nu(), other.into()),
    };
    let inside = |z: c64| islands.iter().any(|isl| isl.contains(grid, z));
    let mut slowest = Vec::new();
    if let Some(a) = spec.slowest_oscillatory(1e-9) {
        slowest.push((a, inside(spec.eigenvalues[a])));
        let conj = spec.eigenvalues[a].conj();
        if let Some(b) = (0..spec.len())
            .filter(|&b| b != a)
            .min_by(|&x, &y| (spec.eigenvalues[x] - conj).norm().total_cmp(&(spec.eigenvalues[y] - conj).norm()))
        {
            slowest.push((b, inside(spec.eigenvalues[b])));
        }
    }
    PlaneSummary {
        kappa: sweep.kappa,
        nonzero_count: sweep.nonzero_count(),
        ill_defined_count: sweep.samples.iter().filter(|s| !s.well_defined).count(),
        islands: islands
            .iter()
            .map(|isl| IslandSummary {
                cells: isl.len(),
                nu_min: isl.nu_min,
                nu_max: isl.nu_max,
                eigenvalues: (0..spec.len()).filter(|&i| isl.contains(grid, spec.eigenvalues[i])).collect(),
            })
            .collect(),
        slowest_oscillatory: slowest,
    }
}

pub fn localizer_plane(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        grid: GridSummary,
        sweep: PlaneSummary,
    }
    let kappa = cfg.single_kappa()?;
    let liouv = phases.time("build", || model(cfg))?;
    let spec = phases.time("eigen", || spectrum(&liouv))?;
    let grid = plane_grid(cfg, &spec.eigenvalues);
    let probe = probe(cfg, &liouv)?;
    let sweep = phases.time("sweep", || sweep_spectral(&probe, cfg.x0, &grid, kappa))?;
    let mut csv = Csv::new("localizer_plane.csv", &SPECTRAL_HEADER);
    push_spectral_rows(&mut csv, &sweep);
    let outputs = [csv.finish(out)?, eigenvalue_csv(&spec).finish(out)?];
    let results = Results { model: summary(&liouv), grid: grid_summary(&grid), sweep: plane_summary(cfg, &sweep, &spec) };
    write_sidecar(out, "localizer-plane", cfg, &outputs, &results)?;
    Ok(())
}

pub fn kappa_sweep(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Stability {
        kappa: f64,
        identical_to_reference: bool,
        nonzero_count: usize,
    }
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        axis: SweepKind,
        reference_kappa: f64,
        stability: Vec<Stability>,
        #[serde(skip_serializing_if = "Option::is_none")]
        grid: Option<GridSummary>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        position: Vec<PositionSummary>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        plane: Vec<PlaneSummary>,
    }
    let kappas = cfg.kappa_list();
    let liouv = phases.time("build", || model(cfg))?;
    let probe = probe(cfg, &liouv)?;
    let mut outputs = Vec::new();
    let (axis, header, spec) = match cfg.kappa_axis {
        SweepKind::Position => (SweepAxis::Position { x_grid: cfg.x_grid(), lambda0: lambda0(cfg) }, POSITION_HEADER, None),
        SweepKind::Plane => {
            let spec = phases.time("eigen", || spectrum(&liouv))?;
            let grid = plane_grid(cfg, &spec.eigenvalues);
            outputs.push(eigenvalue_csv(&spec).finish(out)?);
            (SweepAxis::Spectral { grid, x0: cfg.x0 }, SPECTRAL_HEADER, Some(spec))
        }
    };
    let result = phases.time("sweep", || sweep_kappa(&probe, &axis, &kappas))?;
    let mut csv = Csv::new("kappa_sweep.csv", &header);
    for sweep in &result.sweeps {
        match cfg.kappa_axis {
            SweepKind::Position => push_position_rows(&mut csv, sweep),
            SweepKind::Plane => push_spectral_rows(&mut csv, sweep),
        }
    }
    outputs.insert(0, csv.finish(out)?);
    let results = Results {
        model: summary(&liouv),
        axis: cfg.kappa_axis,
        reference_kappa: result.stability.reference_kappa,
        stability: result
            .stability
            .per_kappa
            .iter()
            .map(|&(kappa, identical_to_reference, nonzero_count)| Stability { kappa, identical_to_reference, nonzero_count })
            .collect(),
        grid: match &axis {
            SweepAxis::Spectral { grid, .. } => Some(grid_summary(grid)),
            SweepAxis::Position { .. } => None,
        },
        position: match cfg.kappa_axis {
            SweepKind::Position => result.sweeps.iter().map(position_summary).collect(),
            SweepKind::Plane => Vec::new(),
        },
        plane: match &spec {
            Some(spec) => result.sweeps.iter().map(|s| plane_summary(cfg, s, spec)).collect(),
            None => Vec::new(),
        },
    };
    write_sidecar(out, "kappa-sweep", cfg, &outputs, &results)?;
    Ok(())
}

pub fn modes(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Mode {
        mode_index: usize,
        dominant_rank: usize,
        participation_ratio: f64,
    }
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        /// Name of the delocalization measure reported per mode.
        delocalization_measure: &'static str,
        steady_index: Option<usize>,
        steady_participation_ratio: Option<f64>,
        modes: Vec<Mode>,
    }
    let liouv = phases.time("build", || model(cfg))?;
    let spec = phases.time("eigen", || spectrum(&liouv))?;
    let table = rank_weights(&spec, liouv.basis());
    let mut csv = Csv::new("modes.csv", &MODES_HEADER);
    for m in &table.modes {
        let l = spec.eigenvalues[m.mode_index];
        for (k, w) in m.weights.iter().enumerate() {
            csv.row([m.mode_index.to_string(), num(l.re), num(l.im), k.to_string(), num(*w)]);
        }
    }
    let outputs = [csv.finish(out)?];
    let results = Results {
        model: summary(&liouv),
        delocalization_measure: "k-space inverse participation ratio, 1 / sum_k w_k^2",
        steady_index: table.steady_index,
        steady_participation_ratio: table.steady_index.map(|i| table.modes[i].participation_ratio),
        modes: table
            .modes
            .iter()
            .map(|m| Mode { mode_index: m.mode_index, dominant_rank: m.dominant_rank(), participation_ratio: m.participation_ratio })
            .collect(),
    };
    write_sidecar(out, "modes", cfg, &outputs, &results)?;
    Ok(())
}

fn trajectory_csvs(cfg: &RunConfig, index: usize, traj: &Trajectory, out: &Path) -> Result<Vec<OutputFile>, CliError> {
    let series: Vec<&[f64]> = ["jx", "jy", "jz"].iter().map(|n| traj.observable(n).expect("always recorded")).collect();
    let mut csv = Csv::new(format!("trajectory_{index}.csv"), &TRAJECTORY_HEADER);
    for (i, t) in traj.times.iter().enumerate() {
        csv.row([num(*t), num(series[0][i]), num(series[1][i]), num(series[2][i])]);
    }
    let mut files = vec![csv.finish(out)?];
    if cfg.dump_coefficients {
        let n = traj.coefficients.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        for idx in 0..n {
            let (k, q) = btc_topology::tensor::tensor_label(idx);
            header.push(format!("re_a_{k}_{q}"));
            header.push(format!("im_a_{k}_{q}"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut csv = Csv::new(format!("coefficients_{index}.csv"), &header);
        for (t, a) in traj.times.iter().zip(&traj.coefficients) {
            csv.row(std::iter::once(num(*t)).chain(a.iter().flat_map(|z| [num(z.re), num(z.im)])));
        }
        files.push(csv.finish(out)?);
    }
    Ok(files)
}

pub fn evolve(cfg: &RunConfig, out: &Path, phases: &mut Phases) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct StateResult {
        theta: f64,
        phi: f64,
        method: EvolutionMethod,
        final_jz: f64,
    }
    #[derive(Serialize)]
    struct Results {
        model: ModelSummary,
        eigenbasis_condition: Option<f64>,
        /// `⟨Jz⟩` in the steady state, when it is unique.
        steady_jz: Option<f64>,
        time_points: usize,
        states: Vec<StateResult>,
    }
    let liouv = phases.time("build", || model(cfg))?;
    let rep = *liouv.basis().representation();
    let times = cfg.time_grid();
    let opts = EvolveOptions { method: cfg.method, ..EvolveOptions::default() };
    let spec = phases.time("eigen", || spectrum(&liouv))?;
    let steady_jz = match steady_state_from(&liouv, &spec) {
        Ok(a) => {
            let rho = liouv.basis().reconstruct(&a)?;
            let jz = build_spin_operators(&rep).jz;
            Some(trace((&jz * &rho).as_ref()).re)
        }
        Err(_) => None,
    };
    let initial = cfg
        .initial_states
        .iter()
        .map(|s| coherent_spin_state(&rep, s.theta, s.phi))
        .collect::<Result<Vec<_>, _>>()?;

    let (trajectories, comparison) = if initial.len() >= 2 {
        let (report, trajs) = phases.time("evolve", || universality_experiment(&liouv, &initial, &times, &opts))?;
        (trajs, Some(report))
    } else {
        let a0 = liouv.basis().decompose(initial[0].as_ref())?;
        let spec = (opts.method != EvolutionMethod::Integrate).then_some(&spec);
        (vec![phases.time("evolve", || evolve_with(&liouv, spec, &a0, &times, &opts))?], None)
    };

    let mut outputs = Vec::new();
    for (i, traj) in trajectories.iter().enumerate() {
        outputs.extend(trajectory_csvs(cfg, i, traj, out)?);
    }
    if let Some(report) = &comparison {
        let path = crate::output::write_json(out, "comparison.json", report)?;
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        outputs.push(OutputFile { file: "comparison.json".into(), rows: report.pairs.len(), sha256: crate::output::hex_sha256(&bytes) });
    }
    let results = Results {
        model: summary(&liouv),
        eigenbasis_condition: Some(spec.eigenbasis_condition()),
        steady_jz,
        time_points: times.len(),
        states: cfg
            .initial_states
            .iter()
            .zip(&trajectories)
            .map(|(s, t)| StateResult {
                theta: s.theta,
                phi: s.phi,
                method: t.method,
                final_jz: *t.observable("jz").and_then(<[f64]>::last).expect("nonempty grid"),
            })
            .collect(),
    };
    write_sidecar(out, "evolve", cfg, &outputs, &results)?;
    Ok(())
}
