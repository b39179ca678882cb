//! Empirical checks of the norm inequalities.
//!
//! Dictionary estimates are lower bounds of suprema, so only one direction
//! is ever certified. The `v-continuity` entry is exact at the dictionary
//! level (it compares identical functionals); the others are heuristic.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::leaf::{ell, estimate_norm, estimate_range, Dictionary, LeafObservable, NormEstimate};
use super::profile::{
    cr_norm, cr_norm_from_maxima, Derived, Dilated, Modulated, PartitionWindow, Product, Profile,
    SharedProfile, TestFunction, CR_SAMPLES,
};
use crate::automorphism::PartialHypAuto;
use crate::error::{Error, Result};
use crate::group::{LieVector, Point};
use crate::sector::SectorFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsConfig {
    pub delta: f64,
    /// Base points per axis; the dictionary has `base_points³` of them.
    pub base_points: usize,
    pub modulations: usize,
    pub p: usize,
    pub q: usize,
    pub k_max: u32,
    pub mollifier_eps: Vec<f64>,
    pub mollifier_q_max: usize,
    pub slide_eps: Vec<f64>,
    pub slide_samples: usize,
    /// Base points per axis for the slide and change-of-variables checks.
    pub probe_points: usize,
    /// Half-lengths, in units of `δ`, of the long test functions.
    pub scale_lengths: Vec<f64>,
    /// Constant used by the heuristic bounds (`C` and `C_k`).
    pub constant: f64,
    pub seed: u64,
}

impl Default for NormsConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            base_points: 16,
            modulations: 8,
            p: 1,
            q: 2,
            k_max: 4,
            mollifier_eps: vec![0.1, 0.05, 0.025],
            mollifier_q_max: 3,
            slide_eps: vec![1e-2, 5e-3, 2.5e-3],
            slide_samples: 6,
            probe_points: 2,
            scale_lengths: vec![1.0, 2.0, 4.0],
            constant: 4.0,
            seed: 20_240_917,
        }
    }
}

impl NormsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad("delta must lie in (0, 0.5)");
        }
        if !(1..=2).contains(&self.p) || !(1..=2).contains(&self.q) {
            return bad("p and q must be 1 or 2");
        }
        if self.k_max == 0 || self.k_max > 4 {
            return bad("k_max must lie in 1..=4");
        }
        if self.base_points == 0 || self.modulations == 0 || self.probe_points == 0 {
            return bad("dictionary sizes must be positive");
        }
        if self.mollifier_q_max == 0 || self.mollifier_q_max > 3 {
            return bad("mollifier_q_max must lie in 1..=3");
        }
        if self.mollifier_eps.iter().chain(&self.slide_eps).any(|e| e.is_nan() || *e <= 0.0) {
            return bad("epsilons must be positive");
        }
        if self.slide_eps.iter().any(|e| *e >= self.delta) {
            return bad("slide epsilons must be below delta");
        }
        if self.scale_lengths.iter().any(|l| *l < 1.0) {
            return bad("scale lengths must be at least 1 (|A| >= 2 delta)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    /// Compares identical functionals; holds for any dictionary.
    ExactDictionary,
    /// Lower-bound estimates compared against a bound; evidence only.
    Heuristic,
    /// Both sides are explicit functions; the left side is a
    /// sampling-certified upper bound.
    SampledBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub lemma: String,
    pub detail: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub verdict: bool,
    pub semantics: Semantics,
}

impl Entry {
    fn new(lemma: &str, detail: String, lhs: f64, rhs: f64, verdict: bool, semantics: Semantics) -> Self {
        let ratio = if rhs == 0.0 {
            if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        };
        Self {
            lemma: lemma.to_string(),
            detail,
            lhs,
            rhs,
            ratio,
            verdict,
            semantics,
        }
    }

    /// `lhs ≤ rhs`.
    fn bound(lemma: &str, detail: String, lhs: f64, rhs: f64, semantics: Semantics) -> Self {
        Self::new(lemma, detail, lhs, rhs, lhs <= rhs, semantics)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormsReport {
    pub config: NormsConfig,
    pub entries: Vec<Entry>,
    pub estimates: Vec<(String, NormEstimate)>,
}

impl NormsReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict)
    }

    pub fn entries_for(&self, lemma: &str) -> impl Iterator<Item = &Entry> {
        let lemma = lemma.to_string();
        self.entries.iter().filter(move |e| e.lemma == lemma)
    }
}

/// Runs every experiment for the observable `h`.
pub fn inequality_experiments(auto: &PartialHypAuto, h: &SectorFunction, cfg: &NormsConfig) -> Result<NormsReport> {
    cfg.validate()?;
    let mut entries = mollifier_experiment(cfg);
    let (dict_entries, estimates) = dictionary_experiments(auto, h, cfg)?;
    entries.extend(dict_entries);
    entries.extend(slide_experiment(auto, h, cfg)?);
    entries.extend(norm_scale_experiment(auto, h, cfg)?);
    entries.extend(change_of_variables_experiment(auto, h, cfg)?);
    Ok(NormsReport {
        config: cfg.clone(),
        entries,
        estimates,
    })
}

/// The three mollifier bounds for every template, `q ≤ q_max` and `ε` on
/// the ladder: `‖η − η_ε‖_{C^{q−1}} ≤ ε`, `‖η_ε‖_{C^q} ≤ 1`,
/// `‖η_ε‖_{C^{q+1}} ≤ 2/ε`, with `η` normalized to `‖η‖_{C^q} = 1`.
pub fn mollifier_experiment(cfg: &NormsConfig) -> Vec<Entry> {
    let q_max = cfg.mollifier_q_max;
    let order = q_max + 3;
    let jobs: Vec<(usize, f64)> = (0..cfg.modulations)
        .flat_map(|i| cfg.mollifier_eps.iter().map(move |&e| (i, e)))
        .collect();
    jobs.par_iter()
        .map(|&(i, eps)| {
            let eta = TestFunction::template(cfg.delta, i);
            let (h, samples) = mollified_lattice(&eta, eps, order);
            let (mut m_smooth, mut m_diff) = (vec![0.0_f64; order + 1], vec![0.0_f64; order + 1]);
            for (e, ms) in &samples {
                for k in 0..=order {
                    m_smooth[k] = m_smooth[k].max(ms[k].norm());
                    m_diff[k] = m_diff[k].max((e[k] - ms[k]).norm());
                }
            }
            let mut out = Vec::new();
            for q in 1..=q_max {
                // normalization is linear, so one sampling pass serves every q
                let scale = 1.0 / cr_norm(&eta, q).upper;
                let sc = |m: &[f64]| m.iter().map(|v| v * scale).collect::<Vec<f64>>();
                let (ms, md) = (sc(&m_smooth), sc(&m_diff));
                let detail = |bound: &str| format!("template={i} q={q} eps={eps} bound={bound}");
                let d = cr_norm_from_maxima(&md, h, q - 1).upper;
                out.push(Entry::bound("mollifier", detail("difference"), d, eps, Semantics::SampledBound));
                let n = cr_norm_from_maxima(&ms, h, q).upper;
                out.push(Entry::bound("mollifier", detail("C^q"), n, 1.0, Semantics::SampledBound));
                let n1 = cr_norm_from_maxima(&ms, h, q + 1).upper;
                out.push(Entry::bound("mollifier", detail("C^{q+1}"), n1, 2.0 / eps, Semantics::SampledBound));
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Derivatives of `η` and `ρ_ε ⋆ η` through `order` at the `CR_SAMPLES + 1`
/// equispaced points of the support of `ρ_ε ⋆ η`, returned with the spacing.
///
/// The convolution is the trapezoid rule in `z` with a step that is a whole
/// number of sample spacings, so `η` is only ever evaluated on one lattice.
/// For the compactly supported smooth `ρ` this converges faster than any
/// power of the step.
pub fn mollified_lattice(eta: &TestFunction, eps: f64, order: usize) -> (f64, Vec<(Vec<Complex64>, Vec<Complex64>)>) {
    const Z_POINTS: f64 = 768.0;
    let (a0, b0) = eta.support();
    let (a, b) = (a0 - eps, b0 + eps);
    let h = (b - a) / CR_SAMPLES as f64;
    let stride = ((2.0 * eps / h) / Z_POINTS).floor().max(1.0) as i64;
    let dz = stride as f64 * h / eps;
    let reach = (1.0 / dz).ceil() as i64;
    let pad = reach * stride;
    let lattice: Vec<Vec<Complex64>> = (-pad..=CR_SAMPLES as i64 + pad)
        .into_par_iter()
        .map(|i| eta.derivatives(a + h * i as f64, order))
        .collect();
    let weights: Vec<(i64, f64)> = (-reach..=reach)
        .map(|j| (j, super::profile::mollifier(j as f64 * dz) * dz))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let samples = (0..=CR_SAMPLES as i64)
        .into_par_iter()
        .map(|i| {
            let mut smooth = vec![Complex64::new(0.0, 0.0); order + 1];
            for &(j, w) in &weights {
                // η(t − ε z_j) with ε z_j = j · stride · h
                let src = &lattice[(i - j * stride + pad) as usize];
                for (s, v) in smooth.iter_mut().zip(src) {
                    *s += v * w;
                }
            }
            (lattice[(i + pad) as usize].clone(), smooth)
        })
        .collect();
    (h, samples)
}

/// Continuity, transfer and Lasota–Yorke checks on dictionary estimates.
pub fn dictionary_experiments(
    auto: &PartialHypAuto,
    h: &SectorFunction,
    cfg: &NormsConfig,
) -> Result<(Vec<Entry>, Vec<(String, NormEstimate)>)> {
    let (p, q) = (cfg.p, cfg.q);
    let k_lattice = auto.k;
    let dict_q = Dictionary::standard(cfg.base_points, k_lattice, cfg.delta, cfg.modulations, q)?;
    let templates_q1 = super::leaf::standard_templates(cfg.delta, cfg.modulations, q + 1);
    let dict_q1 = Dictionary::new(cfg.base_points, k_lattice, cfg.delta, &format!("standard(q={})", q + 1), templates_q1.clone())?;
    // every member has ‖·‖_{C^q} ≤ 1: η and η′ for ‖η‖_{C^{q+1}} ≤ 1, plus the q family
    let mut enlarged: Vec<SharedProfile> = dict_q.templates().to_vec();
    enlarged.extend(templates_q1.iter().cloned());
    enlarged.extend(templates_q1.iter().map(|t| Arc::new(Derived { inner: t.clone() }) as SharedProfile));
    let dict_enlarged = Dictionary::new(cfg.base_points, k_lattice, cfg.delta, &format!("enlarged(q={q})"), enlarged)?;

    let base = LeafObservable::new(h, auto);
    let mut estimates = Vec::new();
    let mut entries = Vec::new();
    let mut record = |name: String, e: NormEstimate| {
        estimates.push((name, e.clone()));
        e
    };

    let h_pq = record(format!("h;{p},{q}"), estimate_norm(&base, p, &dict_q)?);

    // V: B^{p,q} → B^{p−1,q}
    let vh = base.derive(&base.v);
    let vh_est = record(format!("Vh;{},{q}", p - 1), estimate_norm(&vh, p - 1, &dict_q)?);
    entries.push(Entry::bound(
        "v-continuity",
        format!("p={p} q={q}"),
        vh_est.value,
        h_pq.value,
        Semantics::ExactDictionary,
    ));

    // W: B^{p,q} → B^{p,q+1}, both readings of the constant
    let nk = (h.nk() as f64).abs();
    let wh = base.derive(&base.w);
    let wh_est = record(format!("Wh;{p},{}", q + 1), estimate_norm(&wh, p, &dict_q1)?);
    let h_enl = record(format!("h;{p},{q} enlarged"), estimate_norm(&base, p, &dict_enlarged)?);
    let h_low = record(format!("h;{},{}", p - 1, q + 1), estimate_norm(&base, p - 1, &dict_q1)?);
    let slack = 1.0 + 1e-8;
    let display = (2.0 * PI * nk * p as f64 + 1.0) * h_enl.value;
    entries.push(Entry::bound(
        "w-continuity",
        format!("reading=displayed-constant p={p} q={q}"),
        wh_est.value,
        display * slack,
        Semantics::Heuristic,
    ));
    let proof = h_enl.value + p as f64 * 2.0 * PI * nk * h_low.value;
    entries.push(Entry::bound(
        "w-continuity",
        format!("reading=proof-line p={p} q={q}"),
        wh_est.value,
        proof * slack,
        Semantics::Heuristic,
    ));

    // transfer estimates
    let c = cfg.constant;
    let lambda = auto.lambda;
    let theta = lambda.powi(-(p.min(q) as i32));
    for k in 1..=cfg.k_max {
        let lk = LeafObservable::with_transfer(h, auto, k);
        let est = record(format!("L^{k}h;{p},{q}"), estimate_norm(&lk, p, &dict_q)?);
        entries.push(Entry::bound(
            "transfer-bounded",
            format!("k={k} q={q}"),
            est.seminorm(0),
            c * h_pq.seminorm(0),
            Semantics::Heuristic,
        ));
        let scaled = est.seminorm(1) * lambda.powi(k as i32);
        entries.push(Entry::bound(
            "v-contraction",
            format!("j=1 k={k} q={q}"),
            scaled,
            c * h_pq.seminorm(1),
            Semantics::Heuristic,
        ));
        let rhs = c * theta.powi(k as i32) * h_pq.value + c * h_low.value;
        entries.push(Entry::bound(
            "lasota-yorke",
            format!("k={k} p={p} q={q} C=C_k={c}"),
            est.value,
            rhs,
            Semantics::Heuristic,
        ));
    }
    Ok((entries, estimates))
}

/// `|ℓ_{η,m}(h) − ℓ_{η̃,m̃}(h)|` with `m̃ = m·exp(aV)·exp(bW)·exp(cZ)` and
/// `η̃(t) = e^{−2πiNK(c+at)} η(t)`; the maximum `D(ε)` over probes should
/// scale like `ε` (`D(ε)/ε` stable within 25% over the ladder).
pub fn slide_experiment(auto: &PartialHypAuto, h: &SectorFunction, cfg: &NormsConfig) -> Result<Vec<Entry>> {
    let q = cfg.q;
    let obs = LeafObservable::new(h, auto);
    let dict = Dictionary::standard(cfg.probe_points, auto.k, cfg.delta, cfg.modulations, q)?;
    let dict_low = Dictionary::standard(cfg.base_points, auto.k, cfg.delta, cfg.modulations, q - 1)?;
    let reference = estimate_norm(&obs, 1, &dict_low)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<[f64; 3]> = (0..cfg.slide_samples)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)])
        .collect();
    let twist = 2.0 * PI * obs.nk() as f64;
    let z = LieVector::new(0.0, 0.0, 1.0);
    let points = dict.base_points();
    let mut d = Vec::new();
    for &eps in &cfg.slide_eps {
        let diffs = points
            .par_iter()
            .map(|m| {
                let mut worst = 0.0_f64;
                for eta in dict.templates() {
                    let base = ell(eta.as_ref(), m, &obs, 1e-12)?;
                    for s in &samples {
                        let (a, b, c) = (eps * s[0], eps * s[1], s[2]);
                        let moved = m.flow(&obs.v, a).flow(&obs.w, b).flow(&z, c);
                        let tilted = Modulated {
                            inner: eta.clone(),
                            c: -twist * c,
                            a: -twist * a,
                        };
                        let other = ell(&tilted, &moved, &obs, 1e-12)?;
                        worst = worst.max((base - other).norm());
                    }
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        d.push(diffs.into_iter().fold(0.0, f64::max));
    }
    let rates: Vec<f64> = d.iter().zip(&cfg.slide_eps).map(|(v, e)| v / e).collect();
    let anchor = *rates.last().expect("nonempty ladder");
    Ok(cfg
        .slide_eps
        .iter()
        .zip(&d)
        .zip(&rates)
        .map(|((&eps, &dv), &rate)| {
            let stable = anchor > 0.0 && (rate / anchor - 1.0).abs() <= 0.25;
            let mut e = Entry::new(
                "slide",
                format!("eps={eps} D/eps={rate:.6e} C=D/(eps*|h|_(1,q-1))"),
                dv,
                eps * reference,
                stable,
                Semantics::Heuristic,
            );
            e.ratio = if reference > 0.0 { dv / (eps * reference) } else { f64::INFINITY };
            e
        })
        .collect())
}

/// Splits long test functions with the `δ`-periodic partition of unity:
/// the pieces reproduce `∫ η · h∘φ_t^W(m)` to `1e-10`, and
/// `Σ_i ‖η_i‖_{C^q} / (|A| ‖η‖_{C^q})` stays bounded as `|A|` grows.
pub fn norm_scale_experiment(auto: &PartialHypAuto, h: &SectorFunction, cfg: &NormsConfig) -> Result<Vec<Entry>> {
    let q = cfg.q;
    let delta = cfg.delta;
    let obs = LeafObservable::new(h, auto);
    let probe = Dictionary::standard(cfg.probe_points, auto.k, delta, 1, q)?;
    let points = probe.base_points();
    let dict = Dictionary::standard(cfg.base_points, auto.k, delta, cfg.modulations, q)?;
    let reference = estimate_range(&obs, 0, 0, &dict)?.value;
    let mut entries = Vec::new();
    let mut growth = Vec::new();
    for &units in &cfg.scale_lengths {
        let half = units * delta;
        let eta = TestFunction::new(half, PI / delta, 0.0);
        let eta_norm = cr_norm(&eta, q).upper;
        let reach = (half / delta).ceil() as i64 + 1;
        let pieces: Vec<Product<&TestFunction, PartitionWindow>> = (-reach..=reach)
            .map(|i| Product {
                f: &eta,
                g: PartitionWindow { delta, index: i },
            })
            .filter(|p| {
                let (a, b) = p.support();
                b > a
            })
            .collect();
        let piece_norms: f64 = pieces.iter().map(|p| cr_norm(p, q).upper).sum();
        let length = 2.0 * half;
        let mut err = 0.0_f64;
        let mut whole_max = 0.0_f64;
        for m in &points {
            let whole = ell(&eta, m, &obs, 1e-13)?;
            let parts = pieces
                .iter()
                .map(|p| ell(p, m, &obs, 1e-13))
                .collect::<Result<Vec<_>>>()?;
            let total: Complex64 = parts.iter().sum();
            err = err.max((total - whole).norm());
            whole_max = whole_max.max(whole.norm());
        }
        entries.push(Entry::bound(
            "norm-scale",
            format!("check=partition |A|={length}"),
            err,
            1e-10,
            Semantics::SampledBound,
        ));
        let g = piece_norms / (length * eta_norm);
        growth.push(g);
        let mut e = Entry::new(
            "norm-scale",
            format!("check=leaf-integral |A|={length} sum_i|eta_i|/(|A||eta|)={g:.6}"),
            whole_max / eta_norm,
            length * reference,
            true,
            Semantics::Heuristic,
        );
        e.verdict = e.ratio.is_finite();
        entries.push(e);
    }
    let (lo, hi) = growth
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), g| (lo.min(*g), hi.max(*g)));
    entries.push(Entry::bound(
        "norm-scale",
        "check=linear-growth max/min of sum_i|eta_i|/(|A||eta|)".to_string(),
        hi / lo,
        2.0,
        Semantics::SampledBound,
    ));
    Ok(entries)
}

/// `ℓ_{η,m}(Lᵏh) = λ^{−k} ∫ η(λ^{−k}s) h(Φᵏ(m)·exp(sW)) ds`, compared to
/// relative `1e-8`.
pub fn change_of_variables_experiment(auto: &PartialHypAuto, h: &SectorFunction, cfg: &NormsConfig) -> Result<Vec<Entry>> {
    let probe = Dictionary::standard(cfg.probe_points, auto.k, cfg.delta, cfg.modulations, cfg.q)?;
    let base = LeafObservable::new(h, auto);
    let mut entries = Vec::new();
    for k in 1..=cfg.k_max {
        let lk = LeafObservable::with_transfer(h, auto, k);
        let stretch = auto.lambda.powi(k as i32);
        let mut worst = 0.0_f64;
        for m in probe.base_points() {
            let image: Point = auto.apply_n(&m, k);
            for eta in probe.templates() {
                let lhs = ell(eta.as_ref(), &m, &lk, 1e-12)?;
                let dilated = Dilated { inner: eta.clone(), s: stretch };
                let rhs = ell(&dilated, &image, &base, 1e-12)? / stretch;
                let scale = lhs.norm().max(rhs.norm()).max(1e-300);
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        entries.push(Entry::bound(
            "change-of-variables",
            format!("k={k}"),
            worst,
            1e-8,
            Semantics::SampledBound,
        ));
    }
    Ok(entries)
}
