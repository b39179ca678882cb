//! Experiment orchestration for `nilres`: configuration, the staged
//! pipeline and report emission.

pub mod config;
pub mod pipeline;
pub mod report;

use std::path::Path;

use anyhow::{Context, Result};
use nilres_core::norms::inequality_experiments;

pub use config::ExperimentConfig;
pub use pipeline::{analyse, correlate_pairs, read_series, write_analysis, write_series, Analysis};

/// Exit status of a command that ran to completion.
pub fn exit_code(pass: bool) -> i32 {
    if pass {
        0
    } else {
        1
    }
}

/// Exit status for configuration errors, raised before any computation.
pub const CONFIG_ERROR: i32 = 2;
/// Exit status for I/O and parse failures during a run.
pub const RUN_ERROR: i32 = 3;

/// The fused pipeline. Returns the analysis after writing every artifact.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> Result<Analysis> {
    let auto = cfg.validate()?;
    let series = correlate_pairs(cfg, &auto)?;
    write_series(out, &series)?;
    let analysis = analyse(series, &cfg.tolerances);
    write_analysis(out, &analysis)?;
    Ok(analysis)
}

pub fn cmd_correlate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let auto = cfg.validate()?;
    let series = correlate_pairs(cfg, &auto)?;
    write_series(out, &series)
}

/// Refits a series written by `correlate`. The sector, `λ` and grid come
/// from the metadata sidecar; only tolerances and the pair count come from
/// the config.
pub fn cmd_resonances(cfg: &ExperimentConfig, series: &Path, out: &Path) -> Result<Analysis> {
    let series = read_series(series, cfg.pairs.len().max(1))?;
    let analysis = analyse(series, &cfg.tolerances);
    write_analysis(out, &analysis)?;
    Ok(analysis)
}

/// Inequality experiments for the `h` of the first pair.
pub fn cmd_norms(cfg: &ExperimentConfig, out: &Path) -> Result<nilres_core::norms::NormsReport> {
    let auto = cfg.validate()?;
    let (_, h) = cfg.observables(&cfg.pairs[0])?;
    let report = inequality_experiments(&auto, &h, &cfg.norms)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let json = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    pipeline::write(&out.join("norms.json"), &json)?;
    pipeline::write(&out.join("norms.md"), &report::norms_markdown(&report))?;
    Ok(report)
}

pub mod selftest {
    //! Quick consistency checks that need no configuration.

    use nilres_core::transfer::{correlate_with, PhaseArithmetic};
    use nilres_core::{hexfloat, pencil_fit, ExactPoint, PartialHypAuto, Point, SectorFunction, ThetaTerm, Tolerances};
    use num_complex::Complex64;

    pub struct Outcome {
        pub name: &'static str,
        pub pass: bool,
        pub detail: String,
    }

    fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
        Outcome { name, pass, detail }
    }

    pub fn run() -> Vec<Outcome> {
        let mut out = Vec::new();

        let pts = [
            ExactPoint::from_ratios((1, 3), (-2, 7), (5, 11)),
            ExactPoint::from_ratios((4, 5), (1, 9), (-3, 2)),
            ExactPoint::from_ratios((-7, 4), (2, 3), (1, 13)),
        ];
        let (a, b, c) = (&pts[0], &pts[1], &pts[2]);
        let assoc = a.mul(b).mul(c) == a.mul(&b.mul(c));
        let inv = a.mul(&a.inverse()) == ExactPoint::identity();
        out.push(outcome("group_law", assoc && inv, "associativity and inverses on rationals".into()));

        match PartialHypAuto::build(2, 1, 1, 1, 0, 0, 1) {
            Ok(auto) => {
                let hom = auto.apply(&a.mul(b)) == auto.apply(a).mul(&auto.apply(b));
                out.push(outcome("automorphism", hom, "golden map is a homomorphism".into()));
                let m = Point::new(0.3, -0.2, 0.1);
                let defect = auto.renormalization_defect(&m, 0.7);
                out.push(outcome("renormalization", defect <= 1e-10, format!("defect {defect:.2e}")));

                let atom = |l| SectorFunction::new(1, 1, vec![ThetaTerm::new(Complex64::new(1.0, 0.0), 0, l)], 8);
                match (atom(0), atom(1)) {
                    (Ok(g), Ok(h)) => {
                        let modular = correlate_with(&auto, &g, &h, 5, 64, PhaseArithmetic::Modular);
                        let exact = correlate_with(&auto, &g, &h, 5, 64, PhaseArithmetic::Rational);
                        let same = matches!((&modular, &exact), (Ok(x), Ok(y)) if x.values == y.values);
                        out.push(outcome("phase_arithmetic", same, "modular and rational phases agree".into()));
                    }
                    _ => out.push(outcome("phase_arithmetic", false, "observable construction failed".into())),
                }
            }
            Err(e) => out.push(outcome("automorphism", false, e.to_string())),
        }

        let xi = [Complex64::new(0.6, 0.0), Complex64::from_polar(0.3, 1.1)];
        let samples: Vec<Complex64> = (0..16).map(|n| xi.iter().map(|x| x.powu(n)).sum()).collect();
        let fit = pencil_fit(&samples, 2.618_033_988_749_895, &Tolerances::default());
        let recovered = fit.map(|f| {
            xi.iter()
                .all(|x| f.resonances.iter().any(|r| (r.xi - x).norm() < 1e-9))
        });
        out.push(outcome(
            "pencil",
            matches!(recovered, Ok(true)),
            "two synthetic exponentials recovered".into(),
        ));

        let values = [0.1, -1.0 / 3.0, 5e-324, f64::MAX];
        let round = values.iter().all(|&v| hexfloat::parse(&hexfloat::format(v)) == Some(v));
        out.push(outcome("hexfloat", round, "bit-exact round trip".into()));
        out
    }
}
