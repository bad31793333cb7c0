//! The seven subcommands: per-figure reproductions, single-point queries,
//! and the free-form sweep. Each one writes CSV tables plus a flat
//! `meta.json`, and optionally a quick-look SVG.

use std::time::Instant;

use wva_core::dephasing::{self, DephasingModel};
use wva_core::noise_snr::{self, SnrMethod, WvaDeltaMode};
use wva_core::postselect::{self, PostSelection};
use wva_core::spectral::EnergyGrid;
use wva_core::Error as CoreError;

use crate::config::RunConfig;
use crate::output::{fmt_f64, fmt_opt, CsvWriter, MetaBuilder};
use crate::svg;
use crate::AppError;

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), AppError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(AppError::Io)
}

fn method_name(method: SnrMethod) -> &'static str {
    match method {
        SnrMethod::Analytic => "analytic",
        SnrMethod::MonteCarlo => "monte-carlo",
    }
}

/// Post-selection parameter to use when the user left `--delta` unset: the
/// numerically optimal one for the configured line.
fn resolve_delta(cfg: &RunConfig) -> Result<(f64, Option<f64>), AppError> {
    match cfg.delta {
        Some(d) => Ok((d, None)),
        None => {
            let params = cfg.spectral_params()?;
            let opt = postselect::optimal_delta(&params)?;
            Ok((opt.delta_opt, Some(opt.delta_opt)))
        }
    }
}

pub fn run_fig1c(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let grid = EnergyGrid::new(cfg.e0, cfg.grid_half_width, cfg.grid_points)
        .map_err(AppError::from_config_domain)?;

    let mut spectra =
        CsvWriter::create(&cfg.out_dir.join("fig1c_spectra.csv"), &["delta", "energy", "density"])?;
    let mut shifts = CsvWriter::create(
        &cfg.out_dir.join("fig1c_shifts.csv"),
        &["delta", "exact_shift", "firstorder_shift", "probability"],
    )?;

    let mut density_matrix: Vec<Vec<f64>> = Vec::new();
    let mut exact_overlay = Vec::new();
    let mut first_overlay = Vec::new();
    let mut flagged = 0usize;
    for &delta in &cfg.delta_axis {
        match postselect::fig1c_row(&params, delta, &grid) {
            Ok(row) => {
                for (&e, &d) in grid.nodes().iter().zip(row.spectrum.density()) {
                    spectra.write_row([fmt_f64(delta), fmt_f64(e), fmt_f64(d)])?;
                }
                shifts.write_row([
                    fmt_f64(delta),
                    fmt_f64(row.shift.mean_shift),
                    fmt_opt(row.shift.firstorder_shift),
                    fmt_f64(row.shift.probability),
                ])?;
                density_matrix.push(row.spectrum.density().to_vec());
                exact_overlay.push((delta, row.shift.mean_shift));
                first_overlay.push((delta, row.shift.firstorder_shift.unwrap_or(f64::NAN)));
            }
            // Degenerate projections become flagged rows, not crashes.
            Err(CoreError::DegeneratePostselection { probability, .. }) => {
                flagged += 1;
                shifts.write_row([
                    fmt_f64(delta),
                    fmt_f64(f64::NAN),
                    fmt_f64(f64::NAN),
                    fmt_f64(probability),
                ])?;
                density_matrix.push(vec![f64::NAN; grid.n_points()]);
            }
            Err(other) => return Err(other.into()),
        }
    }
    spectra.finish()?;
    shifts.finish()?;

    if cfg.emit_svg {
        // Transpose: heatmap rows are energies, columns are deltas.
        let values: Vec<Vec<f64>> = (0..grid.n_points())
            .map(|yi| density_matrix.iter().map(|col| col[yi]).collect())
            .collect();
        let image = svg::heatmap(
            "post-selected spectra",
            "delta",
            "energy (linewidths)",
            &cfg.delta_axis,
            grid.nodes(),
            &values,
            &[
                svg::Overlay { points: exact_overlay, stroke: "white", dash: "6,4" },
                svg::Overlay { points: first_overlay, stroke: "white", dash: "1,3" },
            ],
        );
        std::fs::write(cfg.out_dir.join("fig1c.svg"), image).map_err(AppError::Io)?;
    }

    let mut meta = MetaBuilder::new(cfg);
    meta.put_num("flagged_rows", flagged as f64);
    meta.write(&cfg.out_dir.join("meta.json"), started)
}

pub fn run_fig2(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let cells = postselect::sweep_fig2(&params, &cfg.delta_axis, &cfg.delta_e_axis)?;

    let mut matrix = CsvWriter::create(
        &cfg.out_dir.join("fig2_matrix.csv"),
        &["delta", "delta_e", "exact_shift", "amplification"],
    )?;
    for cell in &cells {
        matrix.write_row([
            fmt_f64(cell.delta),
            fmt_f64(cell.delta_e),
            fmt_f64(cell.mean_shift),
            fmt_opt(cell.amplification),
        ])?;
    }
    matrix.finish()?;

    if cfg.emit_svg {
        let values: Vec<Vec<f64>> = cfg
            .delta_e_axis
            .iter()
            .enumerate()
            .map(|(yi, _)| {
                cells[yi * cfg.delta_axis.len()..(yi + 1) * cfg.delta_axis.len()]
                    .iter()
                    .map(|c| c.mean_shift)
                    .collect()
            })
            .collect();
        let image = svg::heatmap(
            "probe shift",
            "delta",
            "splitting (linewidths)",
            &cfg.delta_axis,
            &cfg.delta_e_axis,
            &values,
            &[],
        );
        std::fs::write(cfg.out_dir.join("fig2.svg"), image).map_err(AppError::Io)?;
    }

    MetaBuilder::new(cfg).write(&cfg.out_dir.join("meta.json"), started)
}

pub fn run_fig3(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let noise = cfg.noise_config()?;
    let (delta, delta_opt) = resolve_delta(cfg)?;
    let sel = PostSelection::new(delta).map_err(AppError::from_config_domain)?;

    let mode =
        if cfg.reoptimize_delta { WvaDeltaMode::ReoptimizePerRate } else { WvaDeltaMode::Fixed };
    let rows = noise_snr::sweep_fig3_with_mode(&params, &sel, &noise, &cfg.rate_axis, mode)?;

    let mut table = CsvWriter::create(
        &cfg.out_dir.join("fig3_snr.csv"),
        &["rate", "snr_no_noise", "snr_conventional", "snr_wva", "method"],
    )?;
    for row in &rows {
        table.write_row([
            fmt_f64(row.rate),
            fmt_f64(row.snr_no_noise),
            fmt_f64(row.snr_conventional),
            fmt_opt(row.snr_wva),
            "analytic".to_string(),
        ])?;
    }
    table.finish()?;

    // SNR versus the post-selection parameter at the reloading-limited
    // ceiling rate.
    let ceiling_noise = wva_core::SlowNoiseConfig::new(
        cfg.sigma,
        cfg.tau_c,
        noise.rate_ceiling(),
        cfg.total_time,
    )
    .map_err(AppError::from_config_domain)?
    .with_trials(cfg.trials.max(2))
    .with_seed(cfg.seed);
    let mut inset = CsvWriter::create(&cfg.out_dir.join("fig3_inset.csv"), &["delta", "snr"])?;
    for &d in &cfg.delta_axis {
        if d <= 0.0 {
            continue;
        }
        let candidate = PostSelection::new(d).map_err(AppError::from_config_domain)?;
        let snr = match noise_snr::snr_wva(&params, &candidate, &ceiling_noise) {
            Ok(result) => result.snr,
            Err(CoreError::NoEvents { .. }) => f64::NAN,
            Err(other) => return Err(other.into()),
        };
        inset.write_row([fmt_f64(d), fmt_f64(snr)])?;
    }
    inset.finish()?;

    if cfg.emit_svg {
        let image = svg::log_log_lines(
            "SNR versus pump rate",
            "pump rate (1/lifetime)",
            "SNR",
            &[
                svg::Curve {
                    label: "no slow noise",
                    stroke: "green",
                    dash: "6,4",
                    points: rows.iter().map(|r| (r.rate, r.snr_no_noise)).collect(),
                },
                svg::Curve {
                    label: "conventional",
                    stroke: "blue",
                    dash: "",
                    points: rows.iter().map(|r| (r.rate, r.snr_conventional)).collect(),
                },
                svg::Curve {
                    label: "post-selected",
                    stroke: "red",
                    dash: "8,3,2,3",
                    points: rows
                        .iter()
                        .filter_map(|r| r.snr_wva.map(|s| (r.rate, s)))
                        .collect(),
                },
            ],
        );
        std::fs::write(cfg.out_dir.join("fig3.svg"), image).map_err(AppError::Io)?;
    }

    let conventional: Vec<f64> = rows.iter().map(|r| r.snr_conventional).collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.rate).collect();
    let mut meta = MetaBuilder::new(cfg);
    meta.put_str(
        "wva_delta_mode",
        if cfg.reoptimize_delta { "reoptimize-per-rate" } else { "fixed" },
    );
    meta.put_num("delta_used", delta);
    if let Some(opt) = delta_opt {
        meta.put_num("delta_opt", opt);
    }
    if let Some(knee) = noise_snr::locate_knee(&rates, &conventional) {
        meta.put_num("knee_rate", knee);
        meta.put_num("knee_rate_expected", 1.0 / cfg.tau_c);
    }
    meta.write(&cfg.out_dir.join("meta.json"), started)
}

pub fn run_fig4(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let mixing = cfg.mixing.to_core();

    let mut map = CsvWriter::create(
        &cfg.out_dir.join("fig4_map.csv"),
        &["gamma", "delta", "shift", "amplification"],
    )?;
    let mut max_residual = 0.0f64;
    let mut values: Vec<Vec<f64>> = Vec::new();
    let positive_deltas: Vec<f64> =
        cfg.delta_axis.iter().copied().filter(|&d| d > 0.0).collect();
    for &gamma_noise in &cfg.gamma_noise_axis {
        let model = DephasingModel::new(gamma_noise, mixing).map_err(AppError::from_config_domain)?;
        let mut row = Vec::new();
        for &delta in &positive_deltas {
            let sel = PostSelection::new(delta).map_err(AppError::from_config_domain)?;
            let result = dephasing::dephased_shift(&params, &sel, &model)?;
            max_residual = max_residual.max(result.tail_residual);
            map.write_row([
                fmt_f64(gamma_noise),
                fmt_f64(delta),
                fmt_f64(result.shift.mean_shift),
                fmt_opt(result.shift.amplification),
            ])?;
            row.push(result.shift.mean_shift);
        }
        values.push(row);
    }
    map.finish()?;

    let opt_rows = dephasing::optimal_shift_vs_gamma(&params, mixing, &cfg.gamma_noise_axis)?;
    let mut optcurve = CsvWriter::create(
        &cfg.out_dir.join("fig4_optcurve.csv"),
        &["gamma", "delta_opt", "max_shift"],
    )?;
    for row in &opt_rows {
        optcurve.write_row([
            fmt_f64(row.gamma_noise),
            fmt_f64(row.delta_opt),
            fmt_f64(row.max_shift),
        ])?;
    }
    optcurve.finish()?;

    let curves =
        dephasing::optimal_amp_vs_ratio(&params, mixing, &cfg.inset_delta_e_axis, &cfg.ratio_axis)?;
    let mut inset = CsvWriter::create(
        &cfg.out_dir.join("fig4_inset.csv"),
        &["delta_e", "ratio", "amplification_opt"],
    )?;
    for curve in &curves {
        for &(ratio, amp) in &curve.points {
            inset.write_row([fmt_f64(curve.delta_e), fmt_f64(ratio), fmt_f64(amp)])?;
        }
    }
    inset.finish()?;

    if cfg.emit_svg {
        let overlay = svg::Overlay {
            points: opt_rows.iter().map(|r| (r.delta_opt, r.gamma_noise)).collect(),
            stroke: "white",
            dash: "2,3",
        };
        let image = svg::heatmap(
            "probe shift under dephasing",
            "delta",
            "noise width (linewidths)",
            &positive_deltas,
            &cfg.gamma_noise_axis,
            &values,
            &[overlay],
        );
        std::fs::write(cfg.out_dir.join("fig4.svg"), image).map_err(AppError::Io)?;
    }

    let mut meta = MetaBuilder::new(cfg);
    meta.put_num("tail_residual_max", max_residual);
    meta.write(&cfg.out_dir.join("meta.json"), started)
}

pub fn run_shift(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let (delta, delta_opt) = resolve_delta(cfg)?;
    let sel = PostSelection::new(delta).map_err(AppError::from_config_domain)?;

    let mut table = CsvWriter::create(
        &cfg.out_dir.join("shift.csv"),
        &[
            "delta_e",
            "gamma",
            "delta",
            "gamma_noise",
            "probability",
            "exact_shift",
            "firstorder_shift",
            "amplification",
            "tail_residual",
        ],
    )?;
    let pure = postselect::mean_energy_shift(&params, &sel)?;
    table.write_row([
        fmt_f64(cfg.delta_e),
        fmt_f64(cfg.gamma),
        fmt_f64(delta),
        fmt_f64(0.0),
        fmt_f64(pure.probability),
        fmt_f64(pure.mean_shift),
        fmt_opt(pure.firstorder_shift),
        fmt_opt(pure.amplification),
        fmt_f64(0.0),
    ])?;
    if cfg.gamma_noise > 0.0 {
        let model = DephasingModel::new(cfg.gamma_noise, cfg.mixing.to_core())
            .map_err(AppError::from_config_domain)?;
        let dephased = dephasing::dephased_shift(&params, &sel, &model)?;
        table.write_row([
            fmt_f64(cfg.delta_e),
            fmt_f64(cfg.gamma),
            fmt_f64(delta),
            fmt_f64(cfg.gamma_noise),
            fmt_f64(dephased.shift.probability),
            fmt_f64(dephased.shift.mean_shift),
            fmt_opt(dephased.shift.firstorder_shift),
            fmt_opt(dephased.shift.amplification),
            fmt_f64(dephased.tail_residual),
        ])?;
    }
    table.finish()?;

    let mut meta = MetaBuilder::new(cfg);
    meta.put_num("delta_used", delta);
    if let Some(opt) = delta_opt {
        meta.put_num("delta_opt", opt);
    }
    if cfg.audit {
        // Closed forms re-derived through the direct quadrature path.
        let spec = wva_core::QuadratureSpec::default();
        let p_quad = postselect::postselection_probability_quadrature(&params, &sel, &spec)?;
        let overlap = wva_core::branch_overlap(&params);
        let overlap_quad = wva_core::branch_overlap_quadrature(&params, &spec)?;
        meta.put_num("audit_probability_exact", pure.probability)
            .put_num("audit_probability_quadrature", p_quad)
            .put_num("audit_overlap_re", overlap.re)
            .put_num("audit_overlap_im", overlap.im)
            .put_num("audit_overlap_quadrature_re", overlap_quad.re)
            .put_num("audit_overlap_quadrature_im", overlap_quad.im);
    }
    meta.write(&cfg.out_dir.join("meta.json"), started)
}

pub fn run_snr(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let noise = cfg.noise_config()?;
    let (delta, delta_opt) = resolve_delta(cfg)?;
    let sel = PostSelection::new(delta).map_err(AppError::from_config_domain)?;
    let shift = postselect::mean_energy_shift(&params, &sel)?;

    let mut table = CsvWriter::create(
        &cfg.out_dir.join("snr.csv"),
        &["kind", "rate", "effective_rate", "n_events", "signal", "snr", "std_error", "method"],
    )?;
    let mut write = |kind: &str, signal: f64, r: wva_core::SnrResult| -> Result<(), AppError> {
        table.write_row([
            kind.to_string(),
            fmt_f64(cfg.pump_rate),
            fmt_f64(r.effective_rate),
            r.n_events.to_string(),
            fmt_f64(signal),
            fmt_f64(r.snr),
            fmt_opt(r.std_error),
            method_name(r.method).to_string(),
        ])
    };

    let conventional = noise_snr::snr_analytic(cfg.delta_e, &noise, cfg.pump_rate)?;
    write("conventional", cfg.delta_e, conventional)?;
    let wva = noise_snr::snr_wva(&params, &sel, &noise)?;
    write("wva", shift.mean_shift, wva)?;
    if cfg.trials >= 2 {
        let mc_conventional =
            noise_snr::snr_monte_carlo(cfg.delta_e, &noise, cfg.pump_rate, 1.0)?;
        write("conventional", cfg.delta_e, mc_conventional)?;
        let mc_wva = noise_snr::snr_wva_monte_carlo(&params, &sel, &noise)?;
        write("wva", shift.mean_shift, mc_wva)?;
    }
    table.finish()?;

    let mut meta = MetaBuilder::new(cfg);
    meta.put_num("delta_used", delta);
    meta.put_num("signal_wva", shift.mean_shift);
    meta.put_num("probability", shift.probability);
    if let Some(opt) = delta_opt {
        meta.put_num("delta_opt", opt);
    }
    meta.write(&cfg.out_dir.join("meta.json"), started)
}

pub fn run_sweep(cfg: &RunConfig) -> Result<(), AppError> {
    let started = Instant::now();
    ensure_out_dir(cfg)?;
    let params = cfg.spectral_params()?;
    let cells = postselect::sweep_fig2(&params, &cfg.delta_axis, &cfg.delta_e_axis)?;

    let mut table = CsvWriter::create(
        &cfg.out_dir.join("sweep.csv"),
        &["delta", "delta_e", "probability", "exact_shift", "firstorder_shift", "amplification"],
    )?;
    for cell in &cells {
        let firstorder =
            (cell.delta != 0.0).then(|| cell.delta_e / (2.0 * cell.delta));
        table.write_row([
            fmt_f64(cell.delta),
            fmt_f64(cell.delta_e),
            fmt_f64(cell.probability),
            fmt_f64(cell.mean_shift),
            fmt_opt(firstorder),
            fmt_opt(cell.amplification),
        ])?;
    }
    table.finish()?;

    MetaBuilder::new(cfg).write(&cfg.out_dir.join("meta.json"), started)
}
