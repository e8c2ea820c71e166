//! Dispatch of a [`RunConfig`] to the library and rendering of the artifact.

use anyhow::Context;
use mixpois_core::combinatorics::{
    centered_poisson_moment_closed, centered_poisson_moment_recurrence,
    centered_poisson_moment_touchard,
};
use mixpois_core::limit_lab::report::{
    csv_writer, finish_csv, fmt_f64, to_json_string, SCHEMA_VERSION,
};
use mixpois_core::limit_lab::{self, ExperimentReport, Verdict};
use mixpois_core::mixed_poisson::PmfRow;
use mixpois_core::MixedPoissonModel;
use serde::Serialize;

use crate::config::{Command, Format, RunConfig, DEFAULT_MAX_COUNT};

/// What a run produced: the artifact text, the one-line summary and the verdicts.
#[derive(Debug)]
pub struct Outcome {
    pub command: Command,
    pub artifact: String,
    pub summary: String,
    pub verdicts: Vec<Verdict>,
}

impl Outcome {
    pub fn failed(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.failed().next().is_none()
    }
}

fn verdict_counts(verdicts: &[Verdict]) -> String {
    let passed = verdicts.iter().filter(|v| v.passed).count();
    format!(
        "{passed} verdicts passed, {} failed",
        verdicts.len() - passed
    )
}

fn describe(model: &MixedPoissonModel) -> String {
    format!("MPo(rho={}, {})", model.rho(), model.mixing())
}

pub fn execute(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let command = cfg.command()?;
    let (artifact, model, verdicts) = match command {
        Command::Pmf => pmf(cfg)?,
        Command::Moments => moments(cfg)?,
        Command::CenteredPoly => centered_poly(cfg)?,
        _ => {
            let mut report = experiment(command, cfg)?;
            report.config = serde_json::to_value(cfg).expect("configs serialize");
            let artifact = match cfg.format() {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            (artifact, report.model, report.verdicts)
        }
    };
    let summary = format!("{command}: {model}; {}", verdict_counts(&verdicts));
    Ok(Outcome {
        command,
        artifact,
        summary,
        verdicts,
    })
}

fn experiment(command: Command, cfg: &RunConfig) -> anyhow::Result<ExperimentReport> {
    let report = match command {
        Command::Simulate => limit_lab::run_moment_experiment(&cfg.experiment()?)?,
        Command::Scaling => limit_lab::run_scaling_experiment(&cfg.experiment()?)?,
        Command::Clt => match cfg.seeds.unwrap_or(1) {
            0 => anyhow::bail!("field `seeds`: must be at least 1"),
            1 => limit_lab::run_clt_experiment(&cfg.experiment()?)?,
            n => limit_lab::run_clt_trend(&cfg.experiment()?, n)?,
        },
        Command::PointMass => limit_lab::run_point_mass_experiment(&cfg.experiment()?)?,
        Command::WrongCentering => {
            let n = cfg.sample_size.unwrap_or(limit_lab::DEFAULT_SAMPLE_SIZE);
            limit_lab::run_wrong_centering_experiment(
                &cfg.model()?,
                n,
                cfg.seed(),
                cfg.workers.unwrap_or(0),
            )?
        }
        Command::Multivariate => limit_lab::run_multivariate_experiment(&cfg.multivariate()?)?,
        Command::Pmf | Command::Moments | Command::CenteredPoly => {
            unreachable!("not an experiment")
        }
    };
    Ok(report)
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    schema_version: u32,
    command: Command,
    model: &'a str,
    config: &'a RunConfig,
    rows: T,
    verdicts: &'a [Verdict],
}

fn render_json<T: Serialize>(
    command: Command,
    model: &str,
    cfg: &RunConfig,
    rows: T,
    verdicts: &[Verdict],
) -> String {
    to_json_string(&Artifact {
        schema_version: SCHEMA_VERSION,
        command,
        model,
        config: cfg,
        rows,
        verdicts,
    })
}

fn render_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv_writer();
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    finish_csv(w)
}

type Rendered = (String, String, Vec<Verdict>);

fn pmf(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let model = cfg.model()?;
    let max_count = cfg.max_count.unwrap_or(DEFAULT_MAX_COUNT);
    let rows: Vec<PmfRow> = model.pmf_table(max_count)?;
    let name = describe(&model);
    let artifact = match cfg.format() {
        Format::Json => render_json(Command::Pmf, &name, cfg, &rows, &[]),
        Format::Csv => render_csv(
            &["count", "pmf", "cumulative"],
            rows.iter()
                .map(|r| vec![r.count.to_string(), fmt_f64(r.pmf), fmt_f64(r.cumulative)]),
        ),
    };
    Ok((artifact, name, Vec::new()))
}

#[derive(Serialize)]
struct MomentRow {
    order: u32,
    mixing_moment: f64,
    factorial_moment: f64,
    raw_moment: f64,
    centered_moment: f64,
    centered_moment_by_expansion: f64,
}

fn moments(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let model = cfg.model()?;
    let max = cfg
        .max_moment_order
        .unwrap_or(limit_lab::DEFAULT_MAX_MOMENT_ORDER);
    let rows: Vec<MomentRow> = (0..=max)
        .map(|s| MomentRow {
            order: s,
            mixing_moment: model.mixing().moment(s),
            factorial_moment: model.factorial_moment(s),
            raw_moment: model.raw_moment(s),
            centered_moment: model.centered_moment(s),
            centered_moment_by_expansion: model.centered_moment_by_expansion(s),
        })
        .collect();
    // The centered moment from the associated-Stirling polynomial and from
    // binomial expansion of raw and cross moments must agree.
    let verdicts: Vec<Verdict> = rows
        .iter()
        .map(|r| {
            let band = 1e-9 * r.centered_moment.abs().max(1.0);
            Verdict::within(
                format!("moments.centered_routes.{}", r.order),
                Some(model.rho()),
                r.centered_moment_by_expansion,
                r.centered_moment,
                band,
            )
        })
        .collect();
    let name = describe(&model);
    let artifact = match cfg.format() {
        Format::Json => render_json(Command::Moments, &name, cfg, &rows, &verdicts),
        Format::Csv => render_csv(
            &[
                "order",
                "mixing_moment",
                "factorial_moment",
                "raw_moment",
                "centered_moment",
                "centered_moment_by_expansion",
            ],
            rows.iter().map(|r| {
                vec![
                    r.order.to_string(),
                    fmt_f64(r.mixing_moment),
                    fmt_f64(r.factorial_moment),
                    fmt_f64(r.raw_moment),
                    fmt_f64(r.centered_moment),
                    fmt_f64(r.centered_moment_by_expansion),
                ]
            }),
        ),
    };
    Ok((artifact, name, verdicts))
}

#[derive(Serialize)]
struct PolyRow {
    power: usize,
    /// Decimal string; coefficients outgrow every machine integer.
    coefficient: String,
}

fn centered_poly(cfg: &RunConfig) -> anyhow::Result<Rendered> {
    let s = cfg
        .order
        .context("field `order`: required by centered-poly (config or --order)")?
        as usize;
    let closed = centered_poisson_moment_closed(s);
    let recurrence = centered_poisson_moment_recurrence(s);
    let touchard = centered_poisson_moment_touchard(s);
    let mismatches = |p: &mixpois_core::combinatorics::IntPolynomial| {
        let n = closed.degree().max(p.degree()).unwrap_or(0);
        (0..=n)
            .filter(|&k| p.coefficient(k) != closed.coefficient(k))
            .count() as f64
    };
    let verdicts = vec![
        Verdict::equal(
            "centered_poly.recurrence_mismatches",
            None,
            mismatches(&recurrence),
            0.0,
        ),
        Verdict::equal(
            "centered_poly.touchard_mismatches",
            None,
            mismatches(&touchard),
            0.0,
        ),
    ];
    let text = closed.to_string();
    let rows: Vec<PolyRow> = closed
        .coefficients()
        .iter()
        .enumerate()
        .map(|(k, c)| PolyRow {
            power: k,
            coefficient: c.to_string(),
        })
        .collect();
    let name = format!("m_{s}(x) = {text}");
    let artifact = match cfg.format() {
        Format::Json => render_json(Command::CenteredPoly, &name, cfg, &rows, &verdicts),
        Format::Csv => render_csv(
            &["power", "coefficient"],
            rows.iter()
                .map(|r| vec![r.power.to_string(), r.coefficient.clone()]),
        ),
    };
    Ok((artifact, name, verdicts))
}
