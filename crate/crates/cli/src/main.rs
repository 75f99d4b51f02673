use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mesocat::acceptance::{self, AcceptanceSummary, DEFAULT_SEED};
use mesocat::decoherence::{
    analytic_decohered_state, damp_superposition, lindblad_evolve, recommended_steps, summarize,
};
use mesocat::fock::{superposition_to_density, truncation_for, FieldState};
use mesocat::homodyne::{angle_diff, branch_centroid_angles, find_peaks, phase_scan, DEFAULT_PROMINENCE};
use mesocat::io::{grid_to_csv, grid_to_json, scan_to_csv, PreparationMetadata, StateFile};
use mesocat::jc::{approximate_superposition, compass_etas, four_component_state, multi_atom_sequence_detailed};
use mesocat::jc::{parse_pi_list, AtomPassage, PiMultiple};
use mesocat::phase_space::{
    evaluate_grid, q_superposition, q_zero_closed_form, q_zero_scan, Distribution, GridSpec, PhaseSpaceGrid,
    PhaseSpaceSource,
};
use mesocat::scenario::ScenarioConfig;
use mesocat::{Error, C64};

#[derive(Parser)]
#[command(name = "mesocat", version, about = "Multi-component cavity cat states: preparation, phase space, probing, damping")]
struct Cli {
    /// Fock-space truncation (default: ceil(|α|² + 8|α| + 10))
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Output file (directory for `decohere` and `accept`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grid and scan evaluation
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized acceptance checks
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Condition a coherent field on ground-state atom detections
    Prepare(PrepareArgs),
    /// Wigner function on a grid
    Wigner(GridArgs),
    /// Husimi Q function on a grid
    Qfunc(GridArgs),
    /// Probe-atom ground-state probability versus reference phase
    Scan(ScanArgs),
    /// Zeros of the Q function of the four-component state
    Qzeros(QzeroArgs),
    /// Damping of the four-component state
    Decohere(DecohereArgs),
    /// Run the acceptance suite
    Accept,
}

#[derive(Args)]
struct PrepareArgs {
    /// Scenario file (TOML)
    #[arg(long, conflicts_with_all = ["alpha", "gts"])]
    config: Option<PathBuf>,
    /// Initial amplitude: `4`, `3-1.5i` or `4@0.25pi`
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    alpha: Option<String>,
    /// Interaction times, e.g. `3.7pi,1.9pi`
    #[arg(long, required_unless_present = "config")]
    gts: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    /// State file written by `prepare`
    #[arg(long)]
    state: PathBuf,
    /// Scenario file supplying the grid
    #[arg(long)]
    config: Option<PathBuf>,
    /// Real-axis range `min:max` (also the imaginary range unless --im is given)
    #[arg(long, allow_hyphen_values = true)]
    re: Option<String>,
    /// Imaginary-axis range `min:max`
    #[arg(long, allow_hyphen_values = true)]
    im: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Render the coherent-superposition approximation instead of the exact state
    #[arg(long)]
    approx: bool,
    /// Damp the approximated state for this κt first (implies --approx)
    #[arg(long)]
    kappa_t: Option<f64>,
    /// Write the JSON grid document instead of CSV
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ScanArgs {
    /// State file written by `prepare`
    #[arg(long)]
    state: PathBuf,
    /// Scenario file supplying probe settings
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference amplitude (default |α| from the state metadata)
    #[arg(long)]
    beta_mag: Option<f64>,
    /// Probe interaction time (default 1.5pi)
    #[arg(long)]
    gtp: Option<String>,
    /// Number of reference phases (default 720)
    #[arg(long)]
    nphi: Option<usize>,
    /// Minimum peak prominence as a fraction of the scan range
    #[arg(long, default_value_t = DEFAULT_PROMINENCE)]
    prominence: f64,
}

#[derive(Args)]
struct QzeroArgs {
    /// Zero index n1 (closed-form prediction with --n2)
    #[arg(long, requires = "n2")]
    n1: Option<u32>,
    /// Zero index n2
    #[arg(long, requires = "n1")]
    n2: Option<u32>,
    /// Component amplitude for a scan without closed-form prediction
    #[arg(long, conflicts_with = "n1")]
    alpha_prime: Option<f64>,
    /// Ray angle (default pi/4)
    #[arg(long)]
    ray: Option<String>,
    /// Scan radius (default: prediction + 2, or α' + 4)
    #[arg(long)]
    r_max: Option<f64>,
}

#[derive(Args)]
struct DecohereArgs {
    /// Component amplitude α' of the four-component state
    #[arg(long, default_value_t = 4.0)]
    alpha_prime: f64,
    /// Phase η1 (default pi α'²/2)
    #[arg(long)]
    eta1: Option<String>,
    /// Phase η2 (default pi α'²/4)
    #[arg(long)]
    eta2: Option<String>,
    /// Comma-separated κt values (default 0, 1/(2n̄), 1/n̄, 2/n̄)
    #[arg(long)]
    kappa_t: Option<String>,
    /// Half-width of the Wigner snapshot grids
    #[arg(long)]
    half: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Also integrate the master equation and report the deviation
    #[arg(long)]
    lindblad: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let guard = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_numerical_guard));
            ExitCode::from(if guard { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let g = Globals { nmax: cli.nmax, out: cli.out, seed: cli.seed };
    match cli.command {
        Command::Prepare(a) => cmd_prepare(&g, a),
        Command::Wigner(a) => cmd_grid(&g, Distribution::Wigner, a),
        Command::Qfunc(a) => cmd_grid(&g, Distribution::Q, a),
        Command::Scan(a) => cmd_scan(&g, a),
        Command::Qzeros(a) => cmd_qzeros(a),
        Command::Decohere(a) => cmd_decohere(&g, a),
        Command::Accept => cmd_accept(&g),
    }
}

struct Globals {
    nmax: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

impl Globals {
    /// Writes to `--out` if given, else to stdout.
    fn emit(&self, contents: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, contents).with_context(|| format!("writing {}", path.display())),
            None => {
                std::io::stdout().write_all(contents.as_bytes())?;
                Ok(())
            }
        }
    }

    /// Report lines go to stdout unless stdout already carries the data.
    fn report(&self, line: &str) {
        if self.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn parse_complex(s: &str) -> anyhow::Result<C64> {
    let s = s.trim().replace(' ', "");
    let bad = || anyhow!("cannot parse complex number {s:?} (examples: 4, 3-1.5i, 2i, 4@0.25pi)");
    if let Some((mag, phase)) = s.split_once('@') {
        let mag: f64 = mag.parse().map_err(|_| bad())?;
        let phase = phase.parse::<PiMultiple>()?.value();
        return Ok(C64::from_polar(mag, phase));
    }
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not an exponent sign or the leading sign
        let cut = body
            .char_indices()
            .filter(|&(i, c)| (c == '+' || c == '-') && i > 0 && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .next_back();
        let (re, im) = match cut {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse().map_err(|_| bad())?,
        };
        return Ok(C64::new(re.parse().map_err(|_| bad())?, im));
    }
    Ok(C64::new(s.parse().map_err(|_| bad())?, 0.0))
}

fn parse_range(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("range {s:?} must look like min:max"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn cmd_prepare(g: &Globals, a: PrepareArgs) -> anyhow::Result<ExitCode> {
    let (alpha, gts, n_override) = match &a.config {
        Some(path) => {
            let cfg = ScenarioConfig::read(path)?;
            (cfg.alpha, cfg.gts, cfg.n_max_override)
        }
        None => {
            let alpha = parse_complex(a.alpha.as_deref().unwrap_or_default())?;
            let gts = parse_pi_list(a.gts.as_deref().unwrap_or_default())?;
            (alpha, gts, None)
        }
    };
    let n_max = g.nmax.or(n_override).unwrap_or_else(|| truncation_for(alpha.norm()));
    let passages: Vec<_> = gts.iter().map(|&t| AtomPassage::ground(t)).collect();
    let (state, probs) = multi_atom_sequence_detailed(alpha, &passages, n_max)?;
    let meta = PreparationMetadata {
        alpha_re: alpha.re,
        alpha_im: alpha.im,
        gts_pi: gts.iter().map(|t| t / PI).collect(),
        joint_prob: probs.iter().product(),
        conditional_probs: probs,
    };
    g.report(&format!("prepared n_max = {n_max}, joint probability {:.6e}", meta.joint_prob));
    g.emit(&StateFile::new(&state, Some(meta)).to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

fn load_state(path: &Path) -> anyhow::Result<(FieldState, Option<PreparationMetadata>)> {
    let file = StateFile::read(path).with_context(|| format!("reading state file {}", path.display()))?;
    Ok((file.field_state()?, file.metadata))
}

fn require_metadata(meta: Option<PreparationMetadata>, what: &str) -> anyhow::Result<PreparationMetadata> {
    meta.ok_or_else(|| anyhow!("{what} needs a state file written by `prepare` (preparation metadata missing)"))
}

fn default_grid(state: &FieldState) -> anyhow::Result<GridSpec> {
    let half = (state.mean_photon_number().sqrt() + 3.0).ceil();
    Ok(GridSpec::square(half, 0.05)?)
}

fn grid_spec(a: &GridArgs, state: &FieldState) -> anyhow::Result<GridSpec> {
    if let Some(re) = &a.re {
        let re = parse_range(re)?;
        let im = a.im.as_deref().map(parse_range).transpose()?.unwrap_or(re);
        return Ok(GridSpec::new(re, im, a.step)?);
    }
    if let Some(path) = &a.config {
        if let Some(spec) = ScenarioConfig::read(path)?.grid {
            return Ok(spec);
        }
    }
    let mut spec = default_grid(state)?;
    spec.step = a.step;
    Ok(spec)
}

fn render<S: PhaseSpaceSource>(kind: Distribution, src: &S, spec: &GridSpec) -> anyhow::Result<PhaseSpaceGrid> {
    Ok(evaluate_grid(kind, src, spec)?)
}

fn cmd_grid(g: &Globals, kind: Distribution, a: GridArgs) -> anyhow::Result<ExitCode> {
    let (state, meta) = load_state(&a.state)?;
    let spec = grid_spec(&a, &state)?;
    let grid = if a.approx || a.kappa_t.is_some() {
        let meta = require_metadata(meta, "--approx")?;
        let approx = approximate_superposition(meta.alpha(), &meta.gts())?.normalized();
        match a.kappa_t {
            Some(kt) => render(kind, &damp_superposition(&approx, kt)?, &spec)?,
            None => render(kind, &approx, &spec)?,
        }
    } else {
        render(kind, &state, &spec)?
    };
    g.report(&format!(
        "{}x{} grid, min {:.6}, max {:.6}, integral {:.6}",
        spec.nx(),
        spec.ny(),
        grid.min(),
        grid.max(),
        grid.integral()
    ));
    g.emit(&if a.json { grid_to_json(&grid)? } else { grid_to_csv(&grid) })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(g: &Globals, a: ScanArgs) -> anyhow::Result<ExitCode> {
    let (state, meta) = load_state(&a.state)?;
    let cfg_probe = a.config.as_deref().map(ScenarioConfig::read).transpose()?.and_then(|c| c.probe);
    let beta_mag = a
        .beta_mag
        .or(cfg_probe.as_ref().map(|p| p.beta_mag))
        .or(meta.as_ref().map(|m| m.alpha().norm()))
        .ok_or_else(|| anyhow!("--beta-mag is required when the state file has no metadata"))?;
    let gt_p = match &a.gtp {
        Some(s) => s.parse::<PiMultiple>()?.value(),
        None => cfg_probe.as_ref().map_or(mesocat::homodyne::DEFAULT_PROBE_GT, |p| p.gt_p),
    };
    let n_phi = a.nphi.or(cfg_probe.as_ref().map(|p| p.n_phi)).unwrap_or(720);
    let scan = phase_scan(&state, beta_mag, gt_p, n_phi)?;
    let peaks = find_peaks(&scan, a.prominence);
    g.report(&format!("{} peaks (|beta| = {beta_mag}, gt_p = {:.4}pi, {n_phi} phases)", peaks.len(), gt_p / PI));
    g.report("phi        P_g        prominence");
    for p in &peaks {
        g.report(&format!("{:<10.4} {:<10.6} {:.6}", p.phi, p.prob, p.prominence));
    }
    if let Some(m) = meta.filter(|m| !m.gts_pi.is_empty()) {
        let targets = branch_centroid_angles(m.alpha(), &m.gts(), state.n_max())?;
        g.report("branch centroid + pi -> nearest peak");
        for t in targets {
            let t = (t + PI).rem_euclid(2.0 * PI);
            match peaks.iter().min_by(|x, y| angle_diff(x.phi, t).abs().total_cmp(&angle_diff(y.phi, t).abs())) {
                Some(p) => g.report(&format!("{t:<10.4} {:<10.4} diff {:+.4}", p.phi, angle_diff(p.phi, t))),
                None => g.report(&format!("{t:<10.4} (no peak)")),
            }
        }
    }
    g.emit(&scan_to_csv(&scan))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_qzeros(a: QzeroArgs) -> anyhow::Result<ExitCode> {
    let ray = a.ray.as_deref().map(str::parse::<PiMultiple>).transpose()?.map_or(PI / 4.0, PiMultiple::value);
    let (ap, predicted) = match (a.n1, a.n2, a.alpha_prime) {
        (Some(n1), Some(n2), _) => {
            let z = q_zero_closed_form(n1, n2)?;
            (z.alpha_prime, Some(z.gamma_mag))
        }
        (None, None, Some(ap)) => (ap, None),
        _ => bail!("give either --n1 and --n2, or --alpha-prime"),
    };
    let (e1, e2) = compass_etas(ap);
    let s = four_component_state(ap, e1, e2)?;
    let r_max = a.r_max.unwrap_or_else(|| predicted.map_or(ap + 4.0, |p| p + 2.0));
    let roots = q_zero_scan(&s, ray, r_max);
    println!("alpha' = {ap:.10}, eta1 = {e1:.6}, eta2 = {e2:.6}, ray = {:.6}pi", ray / PI);
    match predicted {
        Some(p) => println!("closed form |gamma| = {p:.12}"),
        None => println!("closed form: none (no (n1, n2) given)"),
    }
    println!("scan roots in (0, {r_max}]: {}", roots.len());
    for r in &roots {
        let q = q_superposition(&s, C64::from_polar(*r, ray));
        match predicted {
            Some(p) => println!("  r = {r:.12}  Q = {q:.2e}  r - closed form = {:+.2e}", r - p),
            None => println!("  r = {r:.12}  Q = {q:.2e}"),
        }
    }
    if let Some(p) = predicted {
        let nearest = roots.iter().map(|r| (r - p).abs()).fold(f64::INFINITY, f64::min);
        println!("nearest root to the closed form: {nearest:.2e}");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DecohereRecord {
    #[serde(flatten)]
    summary: mesocat::decoherence::DecoherenceSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    lindblad_max_abs_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_file: Option<String>,
}

fn cmd_decohere(g: &Globals, a: DecohereArgs) -> anyhow::Result<ExitCode> {
    let ap = a.alpha_prime;
    let nbar = ap * ap;
    let (d1, d2) = compass_etas(ap);
    let e1 = a.eta1.as_deref().map(str::parse::<PiMultiple>).transpose()?.map_or(d1, PiMultiple::value);
    let e2 = a.eta2.as_deref().map(str::parse::<PiMultiple>).transpose()?.map_or(d2, PiMultiple::value);
    let kts = match &a.kappa_t {
        Some(list) => list
            .split(',')
            .map(|k| k.trim().parse::<f64>().with_context(|| format!("bad kappa_t value {k:?}")))
            .collect::<anyhow::Result<Vec<_>>>()?,
        None => vec![0.0, 0.5 / nbar, 1.0 / nbar, 2.0 / nbar],
    };
    let n_max = g.nmax.unwrap_or_else(|| truncation_for(ap));
    let spec = GridSpec::square(a.half.unwrap_or((ap + 3.0).ceil()), a.step)?;
    if let Some(dir) = &g.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let rho0 = if a.lindblad { Some(superposition_to_density(&four_component_state(ap, e1, e2)?, n_max)?) } else { None };
    let mut records = Vec::new();
    for (i, &kt) in kts.iter().enumerate() {
        let summary = summarize(ap, e1, e2, kt)?;
        let lindblad_max_abs_diff = match &rho0 {
            Some(rho0) => {
                let numeric = lindblad_evolve(rho0, kt, recommended_steps(kt, n_max))?;
                let analytic = analytic_decohered_state(ap, e1, e2, kt)?.to_density(n_max)?;
                Some(numeric.max_abs_diff(&analytic))
            }
            None => None,
        };
        let grid_file = match &g.out {
            Some(dir) => {
                let name = format!("wigner_{i:02}.csv");
                let grid = evaluate_grid(Distribution::Wigner, &analytic_decohered_state(ap, e1, e2, kt)?, &spec)?;
                fs::write(dir.join(&name), grid_to_csv(&grid))?;
                Some(name)
            }
            None => None,
        };
        eprintln!(
            "kappa_t = {kt:.6}: purity {:.6}, central contrast {:.4e}, adjacent contrast {:.4e}{}",
            summary.purity,
            summary.central_contrast,
            summary.adjacent_contrast,
            lindblad_max_abs_diff.map_or(String::new(), |d| format!(", |analytic - lindblad| = {d:.2e}"))
        );
        records.push(DecohereRecord { summary, lindblad_max_abs_diff, grid_file });
    }
    let json = serde_json::to_string_pretty(&records)?;
    match &g.out {
        Some(dir) => fs::write(dir.join("summary.json"), json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_accept(g: &Globals) -> anyhow::Result<ExitCode> {
    let seed = g.seed.unwrap_or(DEFAULT_SEED);
    let reports = acceptance::run_all(seed, |r| println!("{}", r.line()));
    let summary = AcceptanceSummary::new(seed, reports);
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("acceptance-out"));
    acceptance::write_outputs(&dir, &summary)?;
    let failed = summary.criteria.iter().filter(|c| !c.passed).count();
    println!("{} of {} criteria passed; artifacts in {}", summary.criteria.len() - failed, summary.criteria.len(), dir.display());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(4) })
}
