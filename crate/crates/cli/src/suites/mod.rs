//! Verification suites, one per subcommand.

mod attractor;
mod basic;
mod estimates;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rdlab_core::profiles::member_rng;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::SuiteReport;

pub use attractor::AttractorPart;

pub type SuiteResult = Result<SuiteReport, CliError>;

/// Everything a suite needs besides its own section.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub out: &'a Path,
    /// `(L, delta)` for net transport, overriding the configuration.
    pub holder: Option<(f64, f64)>,
}

impl Context<'_> {
    /// Independent generator for one purpose within a suite.
    pub(crate) fn rng(&self, purpose: u64) -> impl rand::Rng {
        member_rng(self.seed, 0xC0DE_0000 + purpose)
    }

    pub(crate) fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
    }

    pub(crate) fn csv<R: AsRef<[f64]>>(&self, name: &str, header: &[&str], rows: &[R]) -> Result<(), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_csv(BufWriter::new(file), header, rows).map_err(|e| CliError::io(&path, e))
    }
}

/// Comma separated, header row, LF endings, shortest round-trip floats.
pub fn write_csv<W: Write, R: AsRef<[f64]>>(mut w: W, header: &[&str], rows: &[R]) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

/// Suites in the order `all` runs them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Solve,
    Certify,
    Decompose,
    Exponents,
    Energy,
    Gronwall,
    AkBk,
    LpBound,
    Smoothing,
    H1Smoothing,
    Attractor(AttractorPart),
}

impl Suite {
    pub const ORDER: [Suite; 11] = [
        Suite::Solve,
        Suite::Certify,
        Suite::Decompose,
        Suite::Exponents,
        Suite::Energy,
        Suite::Gronwall,
        Suite::AkBk,
        Suite::LpBound,
        Suite::Smoothing,
        Suite::H1Smoothing,
        Suite::Attractor(AttractorPart::All),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Solve => "solve",
            Suite::Certify => "certify",
            Suite::Decompose => "decompose",
            Suite::Exponents => "exponents",
            Suite::Energy => "energy",
            Suite::Gronwall => "gronwall",
            Suite::AkBk => "ak_bk",
            Suite::LpBound => "lp_bound",
            Suite::Smoothing => "smoothing",
            Suite::H1Smoothing => "h1_smoothing",
            Suite::Attractor(AttractorPart::All) => "attractor",
            Suite::Attractor(AttractorPart::Dimension) => "dimension",
            Suite::Attractor(AttractorPart::Transport) => "net_transport",
        }
    }

    pub fn configured(&self, c: &ExperimentConfig) -> bool {
        let s = &c.suites;
        match self {
            Suite::Solve => s.solve.is_some(),
            Suite::Certify => s.certify.is_some(),
            Suite::Decompose => s.decompose.is_some(),
            Suite::Exponents => s.exponents.is_some(),
            Suite::Energy => s.energy.is_some(),
            Suite::Gronwall => s.gronwall.is_some(),
            Suite::AkBk => s.ak_bk.is_some(),
            Suite::LpBound => s.lp_bound.is_some(),
            Suite::Smoothing => s.smoothing.is_some(),
            Suite::H1Smoothing => s.h1_smoothing.is_some(),
            Suite::Attractor(_) => s.attractor.is_some(),
        }
    }

    pub fn run(&self, ctx: &Context) -> SuiteResult {
        let mut report = match self {
            Suite::Solve => basic::solve(ctx),
            Suite::Certify => basic::certify(ctx),
            Suite::Decompose => basic::decompose(ctx),
            Suite::Exponents => basic::exponents(ctx),
            Suite::Energy => estimates::energy(ctx),
            Suite::Gronwall => estimates::gronwall(ctx),
            Suite::AkBk => estimates::ak_bk(ctx),
            Suite::LpBound => estimates::lp_bound(ctx),
            Suite::Smoothing => estimates::smoothing(ctx),
            Suite::H1Smoothing => estimates::h1_smoothing(ctx),
            Suite::Attractor(part) => attractor::run(ctx, *part),
        }?;
        report.name = self.name().to_string();
        Ok(report)
    }
}

/// `(L, delta)` for exponent `gamma` recorded in a smoothing suite report.
pub fn holder_from_suite(report: &SuiteReport, gamma: f64) -> Option<(f64, f64)> {
    holder_from_data(&report.data, gamma)
}

/// Same as [`holder_from_suite`], reading the suite's `data` object.
pub fn holder_from_data(data: &serde_json::Value, gamma: f64) -> Option<(f64, f64)> {
    let entries = data.get("gammas")?.as_array()?;
    entries.iter().find_map(|e| {
        let g = e.get("gamma")?.as_f64()?;
        if (g - gamma).abs() > 1e-12 {
            return None;
        }
        let h = e.get("holder")?.as_array()?;
        Some((h.first()?.as_f64()?, h.get(1)?.as_f64()?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_rows_round_trip() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], &[[0.1, 1e-7], [-2.0, f64::MAX]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("a,b\n0.1,1e-7\n-2.0,{:?}\n", f64::MAX));
        let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(last, f64::MAX);
    }

    #[test]
    fn header_only_without_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["t", "dist"], &Vec::<[f64; 2]>::new()).unwrap();
        assert_eq!(buf, b"t,dist\n");
    }

    #[test]
    fn holder_constants_by_gamma() {
        let data = json!({ "gammas": [
            { "gamma": 2.0, "holder": [3.0, 1.0] },
            { "gamma": 4.0, "holder": [7.5, 0.5] },
        ]});
        assert_eq!(holder_from_data(&data, 4.0), Some((7.5, 0.5)));
        assert_eq!(holder_from_data(&data, 6.0), None);
        assert_eq!(holder_from_data(&json!({}), 2.0), None);
    }
}
