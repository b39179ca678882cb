//! Build → correlate → fit → verify, stage by stage.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nilres_core::resonance::Check;
use nilres_core::transfer::{read_csv, CorrelationSeries, SeriesMeta};
use nilres_core::{
    band0_agreement, band_analysis, correlate, pencil_fit, residual_decay, DecayEstimate, Error, PartialHypAuto,
    PencilFit, Tolerances, Verdict,
};
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Correlation series for every configured pair, in order.
pub fn correlate_pairs(cfg: &ExperimentConfig, auto: &PartialHypAuto) -> Result<Vec<CorrelationSeries>> {
    cfg.pairs
        .iter()
        .map(|pair| {
            let (g, h) = cfg.observables(pair)?;
            Ok(correlate(auto, &g, &h, cfg.correlation.n_max, cfg.correlation.grid)?)
        })
        .collect()
}

pub fn series_stem(index: usize) -> String {
    if index == 0 {
        "correlations".to_string()
    } else {
        format!("correlations_{index}")
    }
}

/// Writes `correlations[_i].csv` and the `.json` metadata sidecars.
pub fn write_series(dir: &Path, series: &[CorrelationSeries]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, s) in series.iter().enumerate() {
        let stem = series_stem(i);
        write(&dir.join(format!("{stem}.csv")), &s.to_csv())?;
        write(&dir.join(format!("{stem}.json")), &s.meta_json())?;
    }
    Ok(())
}

/// Reads `count` series starting from the pair-0 file `first`; later pairs
/// are its `correlations_i.csv` siblings.
pub fn read_series(first: &Path, count: usize) -> Result<Vec<CorrelationSeries>> {
    let dir = first.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    (0..count)
        .map(|i| {
            let csv = if i == 0 {
                first.to_path_buf()
            } else {
                dir.join(format!("{}.csv", series_stem(i)))
            };
            let meta_path = csv.with_extension("json");
            let text = std::fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let values = read_csv(&text).with_context(|| format!("in {}", csv.display()))?;
            let meta_text =
                std::fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
            let meta: SeriesMeta =
                serde_json::from_str(&meta_text).with_context(|| format!("in {}", meta_path.display()))?;
            if values.len() != meta.n_max as usize + 1 {
                anyhow::bail!(
                    "{}: {} rows but metadata says n_max = {}",
                    csv.display(),
                    values.len(),
                    meta.n_max
                );
            }
            Ok(CorrelationSeries { values, meta })
        })
        .collect()
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Fit and checks for one observable pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairAnalysis {
    pub series: CorrelationSeries,
    pub fit: Option<PencilFit>,
    pub verdict: Verdict,
    pub decay: Option<DecayEstimate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub pairs: Vec<PairAnalysis>,
    /// Checks that involve several pairs.
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
}

impl Analysis {
    pub fn pass(&self) -> bool {
        self.pairs.iter().all(|p| p.verdict.pass) && self.checks.iter().all(|c| c.pass)
    }
}

pub fn analyse_pair(series: CorrelationSeries, tol: &Tolerances) -> PairAnalysis {
    let meta = &series.meta;
    let samples = series.resolved().to_vec();
    let mut notes: Vec<String> = meta.warnings.clone();
    match pencil_fit(&samples, meta.lambda, tol) {
        Ok(fit) => {
            let mut verdict = band_analysis(&fit, meta.sector_n, meta.sector_k, tol);
            let mut decay = None;
            if meta.sector_n != 0 {
                match residual_decay(&samples, &fit, 1, tol.first_lag) {
                    Ok(d) => {
                        let rel = ((d.slope - d.expected) / d.expected).abs();
                        verdict.checks.push(Check::new(
                            "residual_decay",
                            tol.decay_tol,
                            rel,
                            format!("slope {:.6} against -(3/2) log lambda = {:.6}", d.slope, d.expected),
                        ));
                        decay = Some(d);
                    }
                    Err(e) => verdict
                        .checks
                        .push(Check::flag("residual_decay", false, format!("no remainder to fit: {e}"))),
                }
            }
            notes.append(&mut verdict.notes);
            let verdict = Verdict::from_checks(verdict.checks, notes);
            PairAnalysis {
                series,
                fit: Some(fit),
                verdict,
                decay,
            }
        }
        Err(Error::IllConditioned) if meta.sector_n == 0 => {
            notes.push("correlations vanish identically: no resonance".into());
            let check = Check::flag("toral_single_resonance", true, "zero series".into());
            PairAnalysis {
                series,
                fit: None,
                verdict: Verdict::from_checks(vec![check], notes),
                decay: None,
            }
        }
        Err(e) => {
            let check = Check::flag("pencil_fit", false, e.to_string());
            PairAnalysis {
                series,
                fit: None,
                verdict: Verdict::from_checks(vec![check], notes),
                decay: None,
            }
        }
    }
}

pub fn analyse(series: Vec<CorrelationSeries>, tol: &Tolerances) -> Analysis {
    let pairs: Vec<PairAnalysis> = series.into_iter().map(|s| analyse_pair(s, tol)).collect();
    let mut checks = Vec::new();
    let nonzero_sector = pairs.first().is_some_and(|p| p.series.meta.sector_n != 0);
    if pairs.len() > 1 && nonzero_sector {
        let fits: Vec<&PencilFit> = pairs.iter().filter_map(|p| p.fit.as_ref()).collect();
        let err = if fits.len() == pairs.len() {
            band0_agreement(&fits, tol.merge_tol)
        } else {
            f64::INFINITY
        };
        checks.push(Check::new(
            "band0_agreement",
            tol.agreement_tol,
            err,
            format!("band-0 positions across {} observable pairs", pairs.len()),
        ));
    }
    Analysis {
        pairs,
        checks,
        tolerances: tol.clone(),
    }
}

#[derive(Serialize)]
struct ResonanceJson {
    re: f64,
    im: f64,
    modulus: f64,
    band: Option<u32>,
    mu_re: Option<f64>,
    mu_im: Option<f64>,
    amp_re: f64,
    amp_im: f64,
}

#[derive(Serialize)]
struct ResidualJson {
    n: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct PairJson<'a> {
    resonances: Vec<ResonanceJson>,
    rejected: Vec<ResonanceJson>,
    residuals: Vec<ResidualJson>,
    singular_values: Vec<f64>,
    verdict: &'a Verdict,
    decay: Option<&'a DecayEstimate>,
    resolved_len: usize,
    series: &'a SeriesMeta,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    #[serde(flatten)]
    primary: PairJson<'a>,
    pairs: Vec<PairJson<'a>>,
    checks: &'a [Check],
    tolerances: &'a Tolerances,
    pass: bool,
}

fn resonance_json(r: &nilres_core::Resonance) -> ResonanceJson {
    ResonanceJson {
        re: r.xi.re,
        im: r.xi.im,
        modulus: r.modulus(),
        band: r.band,
        mu_re: r.mu.map(|m| m.re),
        mu_im: r.mu.map(|m| m.im),
        amp_re: r.amplitude.re,
        amp_im: r.amplitude.im,
    }
}

fn pair_json(p: &PairAnalysis) -> PairJson<'_> {
    let (resonances, rejected, residuals, singular_values) = match &p.fit {
        Some(fit) => (
            fit.resonances.iter().map(resonance_json).collect(),
            fit.rejected.iter().map(resonance_json).collect(),
            fit.residuals
                .iter()
                .enumerate()
                .map(|(n, r)| ResidualJson { n, re: r.re, im: r.im })
                .collect(),
            fit.singular_values.clone(),
        ),
        None => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
    };
    PairJson {
        resonances,
        rejected,
        residuals,
        singular_values,
        verdict: &p.verdict,
        decay: p.decay.as_ref(),
        resolved_len: p.series.meta.resolved_len,
        series: &p.series.meta,
    }
}

/// `resonances.json`: the first pair at top level, further pairs under
/// `"pairs"`.
pub fn resonances_json(a: &Analysis) -> String {
    let report = ReportJson {
        primary: pair_json(&a.pairs[0]),
        pairs: a.pairs[1..].iter().map(pair_json).collect(),
        checks: &a.checks,
        tolerances: &a.tolerances,
        pass: a.pass(),
    };
    serde_json::to_string_pretty(&report).expect("serializable") + "\n"
}

pub fn write_analysis(dir: &Path, a: &Analysis) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("resonances.json"), &resonances_json(a))?;
    write(&dir.join("report.md"), &crate::report::verify_markdown(a))
}
