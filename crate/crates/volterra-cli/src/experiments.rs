//! Experiment runners: one per CLI subcommand, each producing CSV tables,
//! optional SVG plots and a manifest with pass/fail checks.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;

use volterra::lattice::{FreqGrid, SpaceGrid};
use volterra::lnd::{self, LndProbeConfig};
use volterra::occupation;
use volterra::pathsim::{self, PathGenerator, Scheme};
use volterra::young::{self, PicardConfig};
use volterra::{drift, LevyModel, VolterraKernel};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::manifest::Manifest;
use crate::output::{fmt, CsvTable};
use crate::svg::{line_chart, Series};

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<Manifest> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let start = Instant::now();
    let mut manifest = Manifest::new(
        config.kind.as_str(),
        &config.canonical_toml(),
        config.seed,
        config.replicas,
    );
    match config.kind {
        ExperimentKind::Simulate => run_simulate(config, out_dir, &mut manifest)?,
        ExperimentKind::VerifyCf => run_verify_cf(config, out_dir, &mut manifest)?,
        ExperimentKind::Localtime => run_localtime(config, out_dir, &mut manifest)?,
        ExperimentKind::Regularity => run_regularity(config, out_dir, &mut manifest)?,
        ExperimentKind::Lnd => run_lnd(config, out_dir, &mut manifest)?,
        ExperimentKind::SolveSde => run_solve_sde(config, out_dir, &mut manifest, false)?,
        ExperimentKind::Flow => run_solve_sde(config, out_dir, &mut manifest, true)?,
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn generator(config: &ExperimentConfig) -> anyhow::Result<(PathGenerator, Arc<[f64]>)> {
    let kernel = config.build_kernel()?;
    let model = config.build_model()?;
    let times = pathsim::uniform_grid(config.grid.t_end, config.grid.time_steps);
    let gen = PathGenerator::new(&kernel, &model, &times, config.seed, Scheme::Auto)?;
    Ok((gen, times))
}

fn record(manifest: &mut Manifest, out_dir: &Path, name: &str) -> PathBuf {
    manifest.outputs.push(name.to_string());
    out_dir.join(name)
}

fn run_simulate(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    let (gen, times) = generator(config)?;
    let dim = gen.dim();
    let mut header: Vec<String> = vec!["replica".into(), "t".into()];
    for a in 0..dim {
        header.push(format!("z{a}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut table = CsvTable::new("simulate", &header_refs);
    let mut start_ok = true;
    for r in 0..config.replicas {
        let path = gen.generate(r);
        start_ok &= path.value(0).iter().all(|&v| v == 0.0);
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![r.to_string(), fmt(t)];
            row.extend(path.value(i).iter().map(|&v| fmt(v)));
            table.push(row);
        }
    }
    table.write(&record(manifest, out_dir, "paths.csv"))?;
    manifest.check("simulate-start-at-origin", start_ok, "z(0) = 0 per replica".into());
    Ok(())
}

fn run_verify_cf(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    let cf = config.cf.as_ref().expect("validated");
    let (gen, _) = generator(config)?;
    let kernel = config.build_kernel()?;
    let model = config.build_model()?;
    let dim = model.dim();

    let xis: Vec<Vec<f64>> = (1..=cf.xi_count)
        .map(|k| {
            let radius = cf.xi_max * k as f64 / cf.xi_count as f64;
            (0..dim).map(|a| if a == 0 { radius } else { 0.0 }).collect()
        })
        .collect();
    let estimates = pathsim::mc_char_function_grid(&gen, config.replicas, &xis, &cf.t_points)?;

    let mut table = CsvTable::new(
        "verify-cf",
        &["xi", "t", "mc_re", "mc_im", "stderr", "theory_re", "z_score"],
    );
    let mut max_z = 0.0f64;
    let mut within_two = 0usize;
    let mut total = 0usize;
    let mut svg_series: Vec<Series> = Vec::new();
    for (a, xi) in xis.iter().enumerate() {
        for (b, &t) in cf.t_points.iter().enumerate() {
            let est = &estimates[a][b];
            let theory = pathsim::theory_char_function(&kernel, &model, xi, t)
                .or_else(|_| pathsim::theory_char_function_closed(&kernel, &model, xi, t))?;
            let z = est.z_score(theory);
            max_z = max_z.max(z);
            total += 1;
            if z <= 2.0 {
                within_two += 1;
            }
            table.push(vec![
                fmt(xi[0]),
                fmt(t),
                fmt(est.re),
                fmt(est.im),
                fmt(est.stderr),
                fmt(theory),
                fmt(z),
            ]);
        }
    }
    table.write(&record(manifest, out_dir, "cf.csv"))?;

    if config.emit_svg {
        for (b, &t) in cf.t_points.iter().enumerate() {
            let mc: Vec<(f64, f64)> =
                xis.iter().enumerate().map(|(a, xi)| (xi[0], estimates[a][b].re)).collect();
            let theory: Vec<(f64, f64)> = xis
                .iter()
                .map(|xi| {
                    let th = pathsim::theory_char_function(&kernel, &model, xi, t)
                        .or_else(|_| {
                            pathsim::theory_char_function_closed(&kernel, &model, xi, t)
                        })
                        .unwrap_or(f64::NAN);
                    (xi[0], th)
                })
                .collect();
            svg_series.push(Series { label: format!("mc t={t}"), points: mc });
            svg_series.push(Series { label: format!("theory t={t}"), points: theory });
        }
        line_chart(
            &record(manifest, out_dir, "cf.svg"),
            "characteristic function: Monte Carlo vs quadrature",
            "|xi|",
            "Re E exp(i<xi,z_t>)",
            &svg_series,
        )?;
    }

    let frac_two = within_two as f64 / total as f64;
    manifest.check(
        "cf-z-within-3",
        max_z <= 3.0,
        format!("max |z| = {max_z:.3} over {total} points"),
    );
    manifest.check(
        "cf-95pct-within-2",
        frac_two >= 0.95,
        format!("{:.1}% of z-scores within 2", 100.0 * frac_two),
    );
    Ok(())
}

fn run_localtime(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    let lt = config.localtime.as_ref().expect("validated");
    let (gen, _) = generator(config)?;
    if gen.dim() != 1 {
        anyhow::bail!("localtime experiment is 1-dimensional");
    }
    let space = SpaceGrid::centered(1, config.grid.space_cells, config.grid.space_period)?;
    let path = gen.generate(0);
    let field = occupation::local_time_marks(&path, &lt.marks, &space)?;

    let mut table = CsvTable::new("localtime", &["time_mark", "node", "x", "density"]);
    for (k, row) in field.rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            table.push(vec![
                fmt(field.time_marks[k]),
                i.to_string(),
                fmt(space.node(i)),
                fmt(v),
            ]);
        }
    }
    table.write(&record(manifest, out_dir, "localtime.csv"))?;

    let mut mass_ok = true;
    for (k, row) in field.rows.iter().enumerate() {
        let mass: f64 = row.iter().sum::<f64>() * space.cell_volume();
        let expect = field.time_marks[k] - field.time_marks[0] - field.clipped_mass;
        if (mass - expect).abs() > 1e-9 + field.clipped_mass {
            mass_ok = false;
        }
    }
    manifest.check(
        "localtime-mass",
        mass_ok,
        format!("clipped mass {:.3e}", field.clipped_mass),
    );
    let monotone = field.rows.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(a, b)| a >= b));
    manifest.check("localtime-monotone", monotone, "cumulative rows nondecreasing".into());

    let err = occupation::local_time_formula_check(
        &|x| x.cos(),
        &path,
        lt.marks[0],
        *lt.marks.last().unwrap(),
        &space,
    )?;
    manifest.check(
        "localtime-formula",
        err <= 5e-2,
        format!("max |time quadrature - spectral convolution| = {err:.3e}"),
    );
    Ok(())
}

fn run_regularity(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    let reg = config.regularity.as_ref().expect("validated");
    let (gen, times) = generator(config)?;
    let freq = FreqGrid::new(gen.dim(), config.grid.freq_half, config.grid.freq_dxi)?;
    let t_end = *times.last().unwrap();

    let spatial = occupation::estimate_spatial_regularity(
        &gen,
        config.replicas,
        0.0,
        t_end,
        &freq,
        reg.p,
        occupation::FitBand { lo: reg.fit_lo, hi: reg.fit_hi },
        reg.bootstrap,
        config.seed ^ 0x5eed,
    )?;
    let time = occupation::estimate_time_regularity(
        &gen,
        config.replicas,
        reg.kappa_for_time,
        &reg.lags,
        reg.starts_per_lag,
        reg.p,
        &freq,
        reg.bootstrap,
        config.seed ^ 0x7133,
    )?;

    let mut table = CsvTable::new(
        "regularity",
        &[
            "kappa_hat",
            "ci_lo",
            "ci_hi",
            "gamma_hat",
            "gamma_ci_lo",
            "gamma_ci_hi",
            "lambda_hat",
            "r2_spatial",
            "r2_time",
        ],
    );
    table.push(vec![
        fmt(spatial.kappa_hat),
        fmt(spatial.kappa_ci.0),
        fmt(spatial.kappa_ci.1),
        fmt(time.gamma_hat),
        fmt(time.gamma_ci.0),
        fmt(time.gamma_ci.1),
        fmt(spatial.lambda_hat),
        fmt(spatial.r2),
        fmt(time.r2),
    ]);
    table.write(&record(manifest, out_dir, "regularity.csv"))?;

    if config.emit_svg {
        // decay of per-ξ moments with the fitted envelope
        let mut xi = vec![0.0; freq.dim];
        let mut pts = Vec::new();
        for flat in 0..freq.len() {
            freq.point(flat, &mut xi);
            let r = freq.norm_sq(flat).sqrt();
            if r > 0.0 {
                pts.push(((1.0 + r * r).ln(), -spatial.lambda_hat * (1.0 + r * r).ln()));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
        line_chart(
            &record(manifest, out_dir, "regularity.svg"),
            "fitted spectral envelope",
            "log(1+|xi|^2)",
            "log E|mu_hat|^2 (fit)",
            &[Series { label: format!("slope -lambda = {:.3}", -spatial.lambda_hat), points: pts }],
        )?;
    }

    manifest.check(
        "regularity-spatial-fit",
        spatial.r2 >= 0.9,
        format!("kappa_hat = {:.3} in [{:.3},{:.3}], R² = {:.3}",
            spatial.kappa_hat, spatial.kappa_ci.0, spatial.kappa_ci.1, spatial.r2),
    );
    manifest.check(
        "regularity-time-fit",
        time.r2 >= 0.9,
        format!("gamma_hat = {:.3} in [{:.3},{:.3}], R² = {:.3}",
            time.gamma_hat, time.gamma_ci.0, time.gamma_ci.1, time.r2),
    );
    Ok(())
}

fn run_lnd(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<()> {
    let spec = config.lnd.as_ref().expect("validated");
    let kernel = config.build_kernel()?;
    let model = config.build_model()?;

    let mut table = CsvTable::new(
        "lnd",
        &["zeta", "infimum", "small_xi_infimum", "admissible"],
    );
    let base = probe_for(&kernel, &model, spec.alpha, spec.zeta_search, config.seed);
    for &zeta in &spec.zeta_values {
        let mut cfg = base.clone();
        cfg.zeta = zeta;
        let report = lnd::lnd_infimum(&kernel, &model, &cfg)?;
        let admissible = lnd::is_admissible(&kernel, &model, &cfg, spec.threshold)?;
        table.push(vec![
            fmt(zeta),
            fmt(report.infimum),
            fmt(report.small_xi_infimum.unwrap_or(f64::NAN)),
            (admissible as u8).to_string(),
        ]);
    }
    table.write(&record(manifest, out_dir, "lnd.csv"))?;

    let min_zeta =
        lnd::min_admissible_zeta(&kernel, &model, spec.alpha, &base, spec.threshold)?;
    manifest.check(
        "lnd-min-zeta",
        true,
        format!("min admissible zeta = {min_zeta:.4}"),
    );
    Ok(())
}

/// Probe grids shared by the CLI and the acceptance suite: horizons are kept
/// inside the kernel horizon.
pub fn probe_for(
    kernel: &VolterraKernel,
    model: &LevyModel,
    alpha: f64,
    zeta_search: (f64, f64),
    seed: u64,
) -> LndProbeConfig {
    let mut cfg = LndProbeConfig::standard(model.dim(), 1.0, alpha, seed);
    cfg.horizons.retain(|&t| t <= kernel.t_max() * 0.9);
    cfg.zeta_search = zeta_search;
    cfg
}

fn run_solve_sde(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
    with_flow: bool,
) -> anyhow::Result<()> {
    let sde = config.sde.as_ref().expect("validated");
    let (gen, times) = generator(config)?;
    if gen.dim() != 1 {
        anyhow::bail!("SDE experiments are 1-dimensional");
    }
    let space = SpaceGrid::centered(1, config.grid.space_cells, config.grid.space_period)?;
    let b = drift::synth_drift(sde.beta, &space, sde.drift_seed, sde.target_norm)?;
    let path = gen.generate(0);

    let marks = subsample_marks(&times, sde.marks);
    let gamma =
        young::build_gamma_from_drift(&b, &path, &marks, sde.gamma_exp, sde.c2_bound)?;
    let picard = PicardConfig { tol: sde.tol, ..Default::default() };
    let solution = young::picard_solve(&gamma, &[sde.xi0], &picard)?;
    let residual = young::fixed_point_residual(&gamma, &solution);

    // stability under halving the time grid (double the marks)
    let fine_marks = subsample_marks(&times, sde.marks * 2);
    let fine_gamma =
        young::build_gamma_from_drift(&b, &path, &fine_marks, sde.gamma_exp, sde.c2_bound)?;
    let fine = young::picard_solve(&fine_gamma, &[sde.xi0], &picard)?;
    let mut halving_gap = 0.0f64;
    for (i, _) in marks.iter().enumerate() {
        halving_gap =
            halving_gap.max((solution.theta_at(i)[0] - fine.theta_at(2 * i)[0]).abs());
    }

    let mut table = CsvTable::new("solve-sde", &["t", "theta", "x"]);
    for (i, &t) in marks.iter().enumerate() {
        let z = interp_path_value(&path, t);
        table.push(vec![fmt(t), fmt(solution.theta_at(i)[0]), fmt(solution.theta_at(i)[0] + z)]);
    }
    table.write(&record(manifest, out_dir, "solution.csv"))?;

    manifest.check(
        "sde-contraction",
        solution.worst_contraction() <= 0.5,
        format!("worst window contraction {:.3}", solution.worst_contraction()),
    );
    manifest.check(
        "sde-residual",
        residual <= sde.tol,
        format!("fixed-point residual {residual:.3e} vs tol {:.1e}", sde.tol),
    );
    manifest.check(
        "sde-euler-agreement",
        solution.euler_gap <= 10.0 * sde.tol,
        format!("euler gap {:.3e}", solution.euler_gap),
    );
    manifest.check(
        "sde-grid-stability",
        halving_gap <= 5.0 * sde.tol,
        format!("halving gap {halving_gap:.3e} vs 5·tol {:.1e}", 5.0 * sde.tol),
    );
    manifest.check(
        "sde-gamma-regularity",
        true,
        format!(
            "measured C^γ constants: c0={:.3e} c1={:.3e} c2={:.3e}",
            gamma.diagnostics.c0, gamma.diagnostics.c1, gamma.diagnostics.c2
        ),
    );

    if with_flow {
        let flow = young::flow_derivative(&gamma, &solution, &picard)?;
        let h = sde.fd_step;
        let up = young::picard_solve(&gamma, &[sde.xi0 + h], &picard)?;
        let dn = young::picard_solve(&gamma, &[sde.xi0 - h], &picard)?;
        let mut table = CsvTable::new("flow", &["t", "dy", "fd_dy"]);
        let mut max_rel = 0.0f64;
        for (i, &t) in marks.iter().enumerate() {
            let fd = (up.theta_at(i)[0] - dn.theta_at(i)[0]) / (2.0 * h);
            let dy = flow.jacobian_at(i)[0];
            if i > 0 {
                max_rel = max_rel.max((dy - fd).abs() / fd.abs().max(1e-12));
            }
            table.push(vec![fmt(t), fmt(dy), fmt(fd)]);
        }
        table.write(&record(manifest, out_dir, "flow.csv"))?;
        manifest.check(
            "flow-fd-agreement",
            max_rel <= 1e-2,
            format!("max relative deviation {max_rel:.3e}"),
        );
    }
    Ok(())
}

fn subsample_marks(times: &Arc<[f64]>, count: usize) -> Vec<f64> {
    let stride = (times.len() - 1) / count;
    (0..=count).map(|i| times[i * stride]).collect()
}

fn interp_path_value(path: &volterra::SamplePath, t: f64) -> f64 {
    let idx = path.index_of_time(t).expect("marks subset of grid");
    path.value(idx)[0]
}
