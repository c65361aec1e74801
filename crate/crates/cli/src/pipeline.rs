use std::error::Error;
use std::fs;
use std::path::PathBuf;

use equipart_core::circle::{circle_dtn, CirclePartition};
use equipart_core::criticality::{compute_rho, solve_coefficients, EXACT_CRITICALITY_TOL};
use equipart_core::grid::{analyze, eigenpair, eigensolve, rectangle_label, Grid, MAX_EIGENPAIRS};
use equipart_core::report::{
    circle_mode_info, discrete_mode_info, hessian_operator, rectangle_mode_info_with_tol, similarity_error,
    verify_identities, Check, SpectralCounts,
};
use equipart_core::separable::{self, ModeIndex};
use equipart_core::strip::{
    direction_quad_form, emit_deformation, hessian_check, mode_direction, random_direction, surrogate_energy,
    StripFamily,
};

use crate::config::{Backend, DirectionConfig, DomainConfig, RunConfig};
use crate::output::{fmt_f, Artifacts, Section};

/// Nodes per interface for the closed-form operator handed to the Hessian.
const SEPARABLE_NODES: usize = 63;

/// Eigenvalues above this cap are left out of report listings.
const REPORT_CAP: f64 = 200.0;

#[derive(Debug)]
pub struct Outcome {
    pub sections: Vec<Section>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(Section::passed)
    }
}

type Res<T> = Result<T, Box<dyn Error>>;

pub fn run(config: &RunConfig) -> Res<Outcome> {
    config.validate()?;
    fs::create_dir_all(&config.out)?;
    let mut art = Artifacts::new(config);
    art.text("config.json", &config.to_json())?;
    let mut sections = Vec::new();
    match (config.backend, config.domain) {
        (_, DomainConfig::Circle { circumference, k }) => sections.push(circle(&mut art, circumference, k)?),
        (Backend::Separable, d) => sections.push(separable_section(config, &mut art, d)?),
        (Backend::Grid, d) => sections.push(grid_section(config, &mut art, d)?),
        (Backend::Strip, d) => sections.push(strip_section(config, &mut art, d)?),
        (Backend::Verify, d @ DomainConfig::Torus { .. }) => sections.push(grid_section(config, &mut art, d)?),
        (Backend::Verify, d) => {
            sections.push(separable_section(config, &mut art, d)?);
            sections.push(grid_section(config, &mut art, d)?);
            sections.push(strip_section(config, &mut art, d)?);
        }
        (Backend::Circle, _) => unreachable!("rejected by validation"),
    }
    let table: String = sections.iter().map(Section::to_table).collect::<Vec<_>>().join("\n");
    let kv: String = sections.iter().map(Section::to_kv).collect();
    art.text("report.txt", &table)?;
    art.text("report.kv", &kv)?;
    Ok(Outcome {
        sections,
        files: art.files,
    })
}

fn spectrum_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check(name: &str, expected: String, actual: String, passed: bool) -> Check {
    Check {
        name: name.into(),
        expected,
        actual,
        passed,
    }
}

fn circle(art: &mut Artifacts, circumference: f64, k: usize) -> Res<Section> {
    let c = CirclePartition::equal(k, circumference)?;
    let nu = vec![1i8; k];
    let (dtn, _) = circle_dtn(&c, &nu)?;
    let p = c.to_partition(&nu)?;
    let traces = c.traces()?;
    let (a, _) = solve_coefficients(&p, &traces)?;
    let rho = compute_rho(&p, &a, &traces, EXACT_CRITICALITY_TOL)?;
    let h = hessian_operator(&dtn, &rho)?;
    let values = dtn.eigenvalues();
    let counts = SpectralCounts::new(&values, 1e-9, f64::INFINITY);
    let info = circle_mode_info(circumference, k).ok();
    let bipartite = p.check_bipartite().is_some();
    let mut report = verify_identities(
        &format!("circle k={k}"),
        &counts,
        info.as_ref(),
        bipartite,
        Some(similarity_error(&h, &dtn)),
    );
    let lambda_max = dtn.matrix.amax();
    report
        .checks
        .push(check("dim_s", "1".into(), dtn.dim().to_string(), dtn.dim() == 1));
    report.checks.push(check(
        "lambda_zero",
        "<= 1e-12".into(),
        fmt_f(lambda_max),
        lambda_max <= 1e-12,
    ));
    let mut flipped = nu.clone();
    flipped[0] = -1;
    let other = circle_dtn(&c, &flipped)?.0.eigenvalues();
    let d = spectrum_distance(&values, &other);
    report
        .checks
        .push(check("flip_invariance", "<= 1e-12".into(), fmt_f(d), d <= 1e-12));

    art.csv(
        "circle_spectrum.csv",
        &["index", "sigma"],
        values.iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt_f(*s)]),
    )?;
    Ok(Section::from_report("circle", &report))
}

fn rectangle_mode(config: &RunConfig, domain: DomainConfig) -> Res<ModeIndex> {
    match domain {
        DomainConfig::Rectangle { width, height } => {
            Ok(ModeIndex::rectangle(config.mode.0, config.mode.1, width, height))
        }
        _ => Err("this backend needs a rectangle".into()),
    }
}

fn separable_section(config: &RunConfig, art: &mut Artifacts, domain: DomainConfig) -> Res<Section> {
    let mode = rectangle_mode(config, domain)?;
    let spectrum = separable::dtn_spectrum(mode, mode.required_cutoff() + 4)?;
    let values: Vec<f64> = spectrum.items.iter().map(|i| i.sigma).collect();
    let counts = SpectralCounts::new(&values, config.thresholds.exact_zero, REPORT_CAP);
    let info = rectangle_mode_info_with_tol(mode.width, mode.height, mode.m, mode.n, config.thresholds.cluster)?;

    let dtn = separable::dtn_operator(mode, SEPARABLE_NODES)?;
    let p = separable::mode_partition(mode, SEPARABLE_NODES)?;
    let traces = separable::mode_traces(mode, &p);
    let (a, _) = solve_coefficients(&p, &traces)?;
    let rho = compute_rho(
        &p,
        &a,
        &traces,
        config.thresholds.criticality.unwrap_or(EXACT_CRITICALITY_TOL),
    )?;
    let h = hessian_operator(&dtn, &rho)?;
    let report = verify_identities(
        &format!("separable {}x{} mode ({},{})", mode.width, mode.height, mode.m, mode.n),
        &counts,
        Some(&info),
        true,
        Some(similarity_error(&h, &dtn)),
    );

    art.csv(
        "separable_spectrum.csv",
        &["index", "q", "sigma", "pattern"],
        spectrum.items.iter().enumerate().map(|(i, it)| {
            let pattern: Vec<String> = it.vector.iter().map(|v| fmt_f(*v)).collect();
            vec![i.to_string(), it.q.to_string(), fmt_f(it.sigma), pattern.join(";")]
        }),
    )?;
    Ok(Section::from_report("separable", &report))
}

/// Grid label of a mode: `(m-1, n-1)` on rectangles; on tori wave number
/// `k > 0` is the sine factor `2k` and `0` the constant.
fn grid_label(domain: DomainConfig, mode: (usize, usize)) -> Res<(usize, usize)> {
    match domain {
        DomainConfig::Rectangle { .. } => {
            if mode.0 == 0 || mode.1 == 0 {
                return Err("rectangle mode indices start at 1".into());
            }
            Ok(rectangle_label(mode.0, mode.1))
        }
        DomainConfig::Torus { .. } => Ok((2 * mode.0, 2 * mode.1)),
        DomainConfig::Circle { .. } => Err("no grid for the circle".into()),
    }
}

fn grid_section(config: &RunConfig, art: &mut Artifacts, domain: DomainConfig) -> Res<Section> {
    let grid = match domain {
        DomainConfig::Rectangle { width, height } => Grid::rectangle(width, height, config.h)?,
        DomainConfig::Torus { width, height } => Grid::torus(width, height, config.h)?,
        DomainConfig::Circle { .. } => return Err("no grid for the circle".into()),
    };
    let pair = eigenpair(&grid, grid_label(domain, config.mode)?)?;
    let an = analyze(&grid, &pair, None)?;
    let tau = config.tau(grid.h);
    let values = an.dtn.eigenvalues();
    let counts = SpectralCounts::new(&values, tau, REPORT_CAP);

    let cluster = equipart_core::report::discrete_cluster_tol(grid.h);
    let mut count = 12;
    let spectrum = loop {
        let s = eigensolve(&grid, count)?;
        let reach = s.last().map_or(0.0, |p| p.value);
        if reach > pair.value * (1.0 + 2.0 * cluster) || count == MAX_EIGENPAIRS {
            break s;
        }
        count = (count * 2).min(MAX_EIGENPAIRS);
    };
    let ev: Vec<f64> = spectrum.iter().map(|p| p.value).collect();
    let info = discrete_mode_info(&ev, pair.value, an.nodal.nodal_count, grid.h)?;
    let bipartite = an.partition.check_bipartite().is_some();
    let h = hessian_operator(&an.dtn, &an.rho)?;
    let mut report = verify_identities(
        &format!("grid h={} mode {:?}", fmt_f(grid.h), config.mode),
        &counts,
        Some(&info),
        bipartite,
        Some(similarity_error(&h, &an.dtn)),
    );
    let limit = 100.0 * grid.h;
    report.checks.push(check(
        "asymmetry",
        format!("<= {}", fmt_f(limit)),
        fmt_f(an.dtn.asymmetry),
        an.dtn.asymmetry <= limit,
    ));
    let crit_tol = config
        .thresholds
        .criticality
        .unwrap_or_else(|| equipart_core::criticality::grid_criticality_tol(grid.h));
    report.checks.push(check(
        "criticality",
        format!("<= {}", fmt_f(crit_tol)),
        fmt_f(an.criticality_residual),
        an.criticality_residual <= crit_tol,
    ));
    if !an.partition.interfaces.is_empty() {
        let mut signs: Vec<i8> = an.partition.interfaces.iter().map(|i| i.nu_sign).collect();
        signs[0] = -signs[0];
        let other = analyze(&grid, &pair, Some(&signs))?.dtn.eigenvalues();
        let scale = values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let d = spectrum_distance(&values, &other) / scale;
        report
            .checks
            .push(check("flip_invariance", "<= 1e-8".into(), fmt_f(d), d <= 1e-8));
    }

    art.csv(
        "grid_eigenvalues.csv",
        &["index", "label_x", "label_y", "value"],
        spectrum.iter().enumerate().map(|(i, p)| {
            vec![
                i.to_string(),
                p.label.0.to_string(),
                p.label.1.to_string(),
                fmt_f(p.value),
            ]
        }),
    )?;
    let mut rows = Vec::new();
    for (i, iface) in an.partition.interfaces.iter().enumerate() {
        for n in &iface.nodes {
            rows.push(vec![i.to_string(), fmt_f(n.x), fmt_f(n.y)]);
        }
    }
    art.csv("grid_partition.csv", &["interface", "x", "y"], rows)?;
    art.csv(
        "grid_dtn_spectrum.csv",
        &["index", "sigma"],
        values.iter().enumerate().map(|(i, s)| vec![i.to_string(), fmt_f(*s)]),
    )?;
    Ok(Section::from_report("grid", &report))
}

fn strip_section(config: &RunConfig, art: &mut Artifacts, domain: DomainConfig) -> Res<Section> {
    let mode = rectangle_mode(config, domain)?;
    let d = &config.deformation;
    let tau = config.tau(d.h);
    let mut section = Section::new(
        "strip",
        &format!(
            "strip-mapped h={} t0={} mode ({},{})",
            fmt_f(d.h),
            fmt_f(d.t0),
            mode.m,
            mode.n
        ),
    );
    let mut energy_rows = Vec::new();
    let mut geometry_rows = Vec::new();
    let sigma1 = separable::dtn_spectrum(mode, mode.required_cutoff() + 4)?
        .items
        .first()
        .map(|i| i.sigma);
    for &dir in &d.directions {
        let (profiles, tol) = match dir {
            DirectionConfig::Mode(k) => (mode_direction(mode, k)?, 0.02),
            DirectionConfig::Random(seed) => (random_direction(mode, seed, 2..=4)?, 0.05),
        };
        let family = StripFamily::for_mode(mode, profiles.clone(), d.h)?;
        let quad = direction_quad_form(mode, &profiles)?;
        let hc = hessian_check(&family, quad, d.t0, tau)?;
        let name = dir.to_string();
        section.kv.push((format!("{name}.quad_form"), fmt_f(quad)));
        section
            .kv
            .push((format!("{name}.second_derivative"), fmt_f(hc.second_5pt)));
        section
            .kv
            .push((format!("{name}.second_derivative_3pt"), fmt_f(hc.second_3pt)));
        section
            .kv
            .push((format!("{name}.first_derivative"), fmt_f(hc.first_derivative)));
        section.kv.push((format!("{name}.discrepancy"), fmt_f(hc.discrepancy)));
        if quad.abs() > tau {
            section.checks.push(check(
                &format!("{name}.hessian"),
                format!("<= {tol}"),
                fmt_f(hc.discrepancy),
                hc.discrepancy <= tol,
            ));
        } else {
            let both = quad.abs().max(hc.second_5pt.abs());
            section.checks.push(check(
                &format!("{name}.flat"),
                format!("<= {}", fmt_f(tau)),
                fmt_f(both),
                both <= tau,
            ));
        }
        let first_tol = 10.0 * d.t0 * d.t0 + 10.0 * d.h * d.h;
        section.checks.push(check(
            &format!("{name}.first_variation"),
            format!("<= {}", fmt_f(first_tol)),
            fmt_f(hc.first_derivative.abs()),
            hc.first_derivative.abs() <= first_tol,
        ));

        for &t in &d.t {
            let l = surrogate_energy(&family, t)?;
            energy_rows.push(vec![name.clone(), fmt_f(t), fmt_f(l)]);
        }
        let snaps = emit_deformation(&family, &d.t)?;
        for s in &snaps {
            for (i, line) in s.interfaces.iter().enumerate() {
                for &(x, y) in line {
                    geometry_rows.push(vec![name.clone(), fmt_f(s.t), i.to_string(), fmt_f(y), fmt_f(x)]);
                }
            }
        }
        if dir == DirectionConfig::Mode(1) && sigma1.is_some_and(|s| s < -tau) {
            let t = 0.02;
            let l = surrogate_energy(&family, t)?;
            section.checks.push(check(
                "phi1.descent",
                format!("< {}", fmt_f(hc.values[2])),
                fmt_f(l),
                l < hc.values[2],
            ));
            if mode.m == 3 {
                let w = mode.strip_width();
                if let Some(s) = snaps.iter().rfind(|s| s.t > 0.0) {
                    let (hi, lo) = (s.gap(0, 0.75 * mode.height), s.gap(0, 0.25 * mode.height));
                    section.checks.push(check(
                        "phi1.geometry",
                        format!("gap(0.75) > {} > gap(0.25)", fmt_f(w)),
                        format!("{} / {}", fmt_f(hi), fmt_f(lo)),
                        hi > w && w > lo,
                    ));
                }
            }
        }
    }
    art.csv("strip_energy.csv", &["direction", "t", "energy"], energy_rows)?;
    art.csv(
        "deformation.csv",
        &["direction", "t", "interface", "y", "x"],
        geometry_rows,
    )?;
    Ok(section)
}
