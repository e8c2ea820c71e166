//! Experiment reports: JSON and flat CSV.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so two runs can
//! be compared byte for byte and every value round-trips exactly.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA_VERSION: u32 = 1;

/// Number of standard errors in every Monte Carlo band.
pub const SE_BAND: f64 = 4.0;

/// One Monte Carlo estimate next to its exact finite-ρ value and its ρ → ∞
/// limit, when those exist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub statistic: String,
    pub order: Option<u32>,
    /// Threshold `a` for tail probabilities.
    pub parameter: Option<f64>,
    pub empirical: f64,
    pub std_error: Option<f64>,
    pub exact: Option<f64>,
    pub limit: Option<f64>,
    /// Upper bound for the statistic (Chebyshev bound, KS threshold).
    pub bound: Option<f64>,
}

impl Estimate {
    pub fn new(statistic: impl Into<String>, empirical: f64) -> Self {
        Estimate {
            statistic: statistic.into(),
            order: None,
            parameter: None,
            empirical,
            std_error: None,
            exact: None,
            limit: None,
            bound: None,
        }
    }

    pub fn order(mut self, s: u32) -> Self {
        self.order = Some(s);
        self
    }

    pub fn parameter(mut self, a: f64) -> Self {
        self.parameter = Some(a);
        self
    }

    pub fn std_error(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    pub fn exact(mut self, v: f64) -> Self {
        self.exact = Some(v);
        self
    }

    pub fn limit(mut self, v: f64) -> Self {
        self.limit = Some(v);
        self
    }

    pub fn bound(mut self, v: f64) -> Self {
        self.bound = Some(v);
        self
    }
}

/// Everything measured at one scale ρ (and one coordinate for multivariate runs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoRecord {
    pub rho: f64,
    pub coordinate: Option<usize>,
    pub estimates: Vec<Estimate>,
    pub ks_distance: Option<f64>,
    pub ks_threshold: Option<f64>,
    pub point_mass_frequency: Option<f64>,
    pub cdf_jump_at_zero: Option<f64>,
}

impl RhoRecord {
    pub fn new(rho: f64) -> Self {
        RhoRecord {
            rho,
            coordinate: None,
            estimates: Vec::new(),
            ks_distance: None,
            ks_threshold: None,
            point_mass_frequency: None,
            cdf_jump_at_zero: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs ≤ rhs`
    AtMost,
    /// `lhs > rhs`
    Greater,
    /// `lhs ≥ rhs`
    AtLeast,
    /// `|empirical − target| ≤ band`, stored as `lhs = |empirical − target|`, `rhs = band`.
    Within,
    /// `lhs == rhs` bit for bit.
    Equal,
}

/// A checked assertion. Both sides are recorded; `margin` is positive when
/// the assertion holds with room to spare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub rho: Option<f64>,
    pub passed: bool,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub margin: f64,
}

impl Verdict {
    pub fn at_most(id: impl Into<String>, rho: Option<f64>, lhs: f64, rhs: f64) -> Self {
        Self::build(id, rho, lhs, Relation::AtMost, rhs, lhs <= rhs, rhs - lhs)
    }

    pub fn at_least(id: impl Into<String>, rho: Option<f64>, lhs: f64, rhs: f64) -> Self {
        Self::build(id, rho, lhs, Relation::AtLeast, rhs, lhs >= rhs, lhs - rhs)
    }

    pub fn greater(id: impl Into<String>, rho: Option<f64>, lhs: f64, rhs: f64) -> Self {
        Self::build(id, rho, lhs, Relation::Greater, rhs, lhs > rhs, lhs - rhs)
    }

    pub fn equal(id: impl Into<String>, rho: Option<f64>, lhs: f64, rhs: f64) -> Self {
        Self::build(
            id,
            rho,
            lhs,
            Relation::Equal,
            rhs,
            lhs == rhs,
            -(lhs - rhs).abs(),
        )
    }

    /// `|empirical − target| ≤ band`.
    pub fn within(
        id: impl Into<String>,
        rho: Option<f64>,
        empirical: f64,
        target: f64,
        band: f64,
    ) -> Self {
        let dev = (empirical - target).abs();
        Self::build(
            id,
            rho,
            dev,
            Relation::Within,
            band,
            dev <= band,
            band - dev,
        )
    }

    /// Empirical mean against an exact value: `SE_BAND` standard errors plus
    /// a rounding allowance for the exact value itself.
    pub fn within_se(
        id: impl Into<String>,
        rho: Option<f64>,
        empirical: f64,
        std_error: f64,
        exact: f64,
    ) -> Self {
        let band = SE_BAND * std_error + 1e-12 * exact.abs().max(1.0);
        Self::within(id, rho, empirical, exact, band)
    }

    fn build(
        id: impl Into<String>,
        rho: Option<f64>,
        lhs: f64,
        relation: Relation,
        rhs: f64,
        passed: bool,
        margin: f64,
    ) -> Self {
        Verdict {
            id: id.into(),
            rho,
            passed,
            lhs,
            relation,
            rhs,
            margin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub model: String,
    /// Whether the mixing satisfies the moment-determinacy hypothesis of the
    /// limit theorems. Limit verdicts are skipped when it does not.
    pub within_hypotheses: bool,
    pub config: serde_json::Value,
    pub workers: usize,
    pub records: Vec<RhoRecord>,
    pub cross_estimates: Vec<Estimate>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(
        experiment: &str,
        model: String,
        within_hypotheses: bool,
        config: serde_json::Value,
        workers: usize,
    ) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            model,
            within_hypotheses,
            config,
            workers,
            records: Vec::new(),
            cross_estimates: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> usize {
        self.verdicts.iter().filter(|v| v.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.verdicts.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    /// One row per ρ per statistic; KS distances appear as statistic `ks`
    /// with the threshold in the `bound` column.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(CSV_HEADER).expect("in-memory write");
        let mut row = |rho: Option<f64>, coord: Option<usize>, e: &Estimate| {
            let statistic = match coord {
                Some(j) => format!("{}[{j}]", e.statistic),
                None => e.statistic.clone(),
            };
            w.write_record([
                self.experiment.clone(),
                fmt_opt(rho),
                statistic,
                e.order.map(|s| s.to_string()).unwrap_or_default(),
                fmt_opt(e.parameter),
                fmt_f64(e.empirical),
                fmt_opt(e.std_error),
                fmt_opt(e.exact),
                fmt_opt(e.limit),
                fmt_opt(e.bound),
            ])
            .expect("in-memory write");
        };
        for r in &self.records {
            for e in &r.estimates {
                row(Some(r.rho), r.coordinate, e);
            }
            if let Some(ks) = r.ks_distance {
                let mut e = Estimate::new("ks", ks);
                e.bound = r.ks_threshold;
                row(Some(r.rho), r.coordinate, &e);
            }
            if let Some(freq) = r.point_mass_frequency {
                let mut e = Estimate::new("point_mass_frequency", freq);
                e.limit = r.cdf_jump_at_zero;
                row(Some(r.rho), r.coordinate, &e);
            }
        }
        for e in &self.cross_estimates {
            row(None, None, e);
        }
        finish_csv(w)
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "rho",
    "statistic",
    "order",
    "parameter",
    "empirical",
    "std_error",
    "exact",
    "limit",
    "bound",
];

/// 17 significant digits; `-0` prints as `0`.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// CSV writer with LF line endings.
pub fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv fields are UTF-8")
}

/// Pretty JSON with every float in `{:.16e}` form.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // Non-finite values have no JSON form; serde_json maps them to null
        // before reaching the formatter.
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serialize any value as pretty JSON with full-precision floats and a
/// trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report values serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "clt",
            "gamma(2, 1)".into(),
            true,
            serde_json::json!({"rho": 10.0}),
            1,
        );
        let mut rec = RhoRecord::new(10.0);
        rec.estimates.push(
            Estimate::new("z_moment", 0.1)
                .order(1)
                .std_error(0.01)
                .exact(0.0)
                .limit(0.0),
        );
        rec.ks_distance = Some(0.01);
        rec.ks_threshold = Some(0.05);
        r.records.push(rec);
        r.verdicts
            .push(Verdict::at_most("clt.ks", Some(10.0), 0.01, 0.05));
        r.verdicts.push(Verdict::within_se(
            "clt.z_moment.1",
            Some(10.0),
            0.1,
            0.01,
            0.0,
        ));
        r
    }

    #[test]
    fn verdict_sides_and_margins() {
        let v = Verdict::at_most("x", None, 1.0, 3.0);
        assert!(v.passed && v.margin == 2.0);
        let v = Verdict::greater("x", None, 1.0, 1.0);
        assert!(!v.passed);
        let v = Verdict::within("x", None, 5.5, 6.0, 0.4);
        assert!(!v.passed && v.lhs == 0.5 && v.rhs == 0.4);
        let v = Verdict::equal("x", None, 0.3, 0.3);
        assert!(v.passed && v.margin == 0.0);
    }

    #[test]
    fn json_round_trips_with_full_precision() {
        let r = sample();
        let text = r.to_json();
        assert!(text.contains("\"schema_version\": 1,"));
        assert!(text.contains("1.0000000000000001e-1"));
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.passed(), 1);
        assert_eq!(r.failed(), 1);
    }

    #[test]
    fn every_float_has_seventeen_digits() {
        let text = to_json_string(&[1.0, 0.1, 2.0f64.sqrt(), 1e300, -3.5e-7, -0.0]);
        assert!(!text.contains("-0.0"));
        for line in text.lines().filter(|l| l.contains('e')) {
            let num = line.trim().trim_end_matches(',');
            let mantissa = num.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(
                mantissa.chars().filter(char::is_ascii_digit).count(),
                17,
                "{num}"
            );
        }
    }

    #[test]
    fn csv_shape() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "");
        assert!(!csv.contains('\r'));
        assert!(lines[2].starts_with("clt,1.0000000000000000e1,ks,,,"));
        assert!(lines[2].ends_with(",5.0000000000000003e-2"));
    }
}
