//! Resonance extraction from correlation series by the matrix-pencil method,
//! and checks of the band structure `|ξ| = λ^{−(1/2 + n)}`.
//!
//! With samples `c_0 … c_{N−1}` of `Σ a_j ξ_jⁿ`, the Hankel matrices
//! `H0 = [c_{i+j}]` and `H1 = [c_{i+j+1}]` satisfy `H1 = P D Q` and
//! `H0 = P Q` for Vandermonde-type `P`, `Q` and `D = diag(ξ)`. After
//! truncating the SVD `H0 ≈ U Σ V*` to numerical rank, the `ξ_j` are the
//! eigenvalues of `Σ⁻¹ U* H1 V`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 6;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Resonances above the unit circle by more than this are rejected.
pub const UNIT_DISK_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative modulus window for band membership, per band; the last entry
    /// applies to all deeper bands.
    pub band_tol: Vec<f64>,
    /// Absolute error allowed on band-0 moduli and on `|μ| = 1`.
    pub modulus_tol: f64,
    /// Absolute error allowed between band-1 positions and `λ⁻¹ ·` band 0.
    pub band1_tol: f64,
    pub rank_tol: f64,
    /// Band-0 resonances closer than this are counted once.
    pub merge_tol: f64,
    pub max_band: u32,
    /// First lag handed to the pencil. `C_0` carries every band at full
    /// weight, so starting at lag 1 keeps the deep bands from biasing band 0.
    #[serde(default = "default_first_lag")]
    pub first_lag: usize,
    /// Largest allowed distance between band-0 positions fitted from
    /// different observable pairs.
    #[serde(default = "default_agreement_tol")]
    pub agreement_tol: f64,
    /// Relative error allowed on the remainder slope after removing band 0.
    #[serde(default = "default_decay_tol")]
    pub decay_tol: f64,
}

fn default_first_lag() -> usize {
    1
}

fn default_agreement_tol() -> f64 {
    1e-6
}

fn default_decay_tol() -> f64 {
    0.1
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            band_tol: vec![1e-3, 1e-2, 5e-2],
            modulus_tol: 1e-4,
            band1_tol: 1e-2,
            rank_tol: DEFAULT_RANK_TOL,
            merge_tol: 1e-6,
            max_band: 4,
            first_lag: default_first_lag(),
            agreement_tol: default_agreement_tol(),
            decay_tol: default_decay_tol(),
        }
    }
}

impl Tolerances {
    pub fn band(&self, n: u32) -> f64 {
        let i = (n as usize).min(self.band_tol.len().saturating_sub(1));
        self.band_tol.get(i).copied().unwrap_or(1e-3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub xi: Complex64,
    pub amplitude: Complex64,
    pub band: Option<u32>,
    /// `λ^{band + 1/2} ξ` when a band is assigned.
    pub mu: Option<Complex64>,
}

impl Resonance {
    pub fn modulus(&self) -> f64 {
        self.xi.norm()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilFit {
    /// Sorted by decreasing modulus, then by argument.
    pub resonances: Vec<Resonance>,
    /// Fitted modes outside the closed unit disk.
    pub rejected: Vec<Resonance>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `c_n − Σ a_j ξ_jⁿ` for each sample.
    pub residuals: Vec<Complex64>,
    pub lambda: f64,
}

/// Fits `Σ a_j ξ_jⁿ` to `samples`; returns `(ξ_j, a_j)` and the singular
/// values of `H0` in decreasing order.
pub fn fit_exponentials(samples: &[Complex64], rank_tol: f64) -> Result<(Vec<(Complex64, Complex64)>, Vec<f64>)> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooShort { len: n, min: MIN_SAMPLES });
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("rank_tol {rank_tol} must lie in (0, 1)")));
    }
    let cols = n / 2;
    let rows = n - cols;
    let h0 = Mat::<Complex64>::from_fn(rows, cols, |i, j| samples[i + j]);
    let h1 = Mat::<Complex64>::from_fn(rows, cols, |i, j| samples[i + j + 1]);
    let svd = h0.thin_svd().map_err(|_| Error::IllConditioned)?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return Err(Error::IllConditioned);
    }
    let rank = sv.iter().take_while(|&&v| v > rank_tol * smax).count();
    let u_r = svd.U().subcols(0, rank);
    let v_r = svd.V().subcols(0, rank);
    let sigma_inv = Mat::<Complex64>::from_fn(rank, rank, |i, j| {
        if i == j {
            Complex64::new(1.0 / sv[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let reduced = &sigma_inv * u_r.adjoint() * &h1 * v_r;
    let xis = reduced.eigenvalues().map_err(|_| Error::IllConditioned)?;
    let amps = amplitudes(samples, &xis)?;
    Ok((xis.into_iter().zip(amps).collect(), sv))
}

/// Least-squares amplitudes for fixed nodes (SVD pseudo-inverse).
pub fn amplitudes(samples: &[Complex64], xis: &[Complex64]) -> Result<Vec<Complex64>> {
    if xis.is_empty() {
        return Ok(Vec::new());
    }
    let vand = Mat::<Complex64>::from_fn(samples.len(), xis.len(), |i, j| xis[j].powu(i as u32));
    let svd = vand.thin_svd().map_err(|_| Error::IllConditioned)?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i].re).fold(0.0, f64::max);
    if smax == 0.0 {
        return Err(Error::IllConditioned);
    }
    let rhs = Mat::<Complex64>::from_fn(samples.len(), 1, |i, _| samples[i]);
    let proj = svd.U().adjoint() * &rhs;
    let scaled = Mat::<Complex64>::from_fn(s.nrows(), 1, |i, _| {
        let si = s[i].re;
        if si > 1e-14 * smax {
            proj[(i, 0)] / si
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let sol = svd.V() * &scaled;
    Ok((0..xis.len()).map(|i| sol[(i, 0)]).collect())
}

pub fn evaluate_modes(modes: &[(Complex64, Complex64)], n: usize) -> Complex64 {
    modes.iter().map(|(xi, a)| a * xi.powu(n as u32)).sum()
}

/// Band of a modulus, smallest `n` with `| |ξ| − λ^{−(1/2+n)} | ≤ tol_n λ^{−(1/2+n)}`.
pub fn assign_band(modulus: f64, lambda: f64, tol: &Tolerances) -> Option<u32> {
    (0..=tol.max_band).find(|&n| {
        let target = lambda.powf(-(0.5 + f64::from(n)));
        (modulus - target).abs() <= tol.band(n) * target
    })
}

/// Fits `C_n = Σ c_j ξ_jⁿ` to `samples[tol.first_lag..]`; amplitudes refer to
/// lag 0 and residuals cover every lag.
pub fn pencil_fit(samples: &[Complex64], lambda: f64, tol: &Tolerances) -> Result<PencilFit> {
    let first = tol.first_lag.min(samples.len());
    let (shifted, singular_values) = fit_exponentials(&samples[first..], tol.rank_tol)?;
    let modes: Vec<(Complex64, Complex64)> = shifted
        .into_iter()
        .map(|(xi, c)| (xi, c / xi.powu(first as u32)))
        .collect();
    let rank = modes.len();
    let mut resonances = Vec::new();
    let mut rejected = Vec::new();
    for &(xi, amplitude) in &modes {
        let band = assign_band(xi.norm(), lambda, tol);
        let mu = band.map(|b| xi * lambda.powf(f64::from(b) + 0.5));
        let r = Resonance { xi, amplitude, band, mu };
        if xi.norm() > 1.0 + UNIT_DISK_SLACK {
            rejected.push(r);
        } else {
            resonances.push(r);
        }
    }
    resonances.sort_by(|a, b| {
        b.modulus()
            .total_cmp(&a.modulus())
            .then(a.xi.arg().total_cmp(&b.xi.arg()))
    });
    let residuals = samples
        .iter()
        .enumerate()
        .map(|(n, c)| c - evaluate_modes(&modes, n))
        .collect();
    Ok(PencilFit {
        resonances,
        rejected,
        singular_values,
        rank,
        residuals,
        lambda,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Tolerance minus observed error; nonnegative when passing.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, tol: f64, error: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            pass: error <= tol,
            margin: tol - error,
            detail,
        }
    }

    pub fn flag(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            margin: if pass { 0.0 } else { -1.0 },
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn from_checks(checks: Vec<Check>, notes: Vec<String>) -> Self {
        Self {
            pass: checks.iter().all(|c| c.pass),
            checks,
            notes,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Band-0 positions with near-duplicates merged.
pub fn distinct_band(fit: &PencilFit, band: u32, merge_tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for r in fit.resonances.iter().filter(|r| r.band == Some(band)) {
        if out.iter().all(|x| (x - r.xi).norm() > merge_tol) {
            out.push(r.xi);
        }
    }
    out
}

fn max_matching_error(from: &[Complex64], to: &[Complex64]) -> f64 {
    from.iter()
        .map(|a| to.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Largest distance between the distinct band-0 sets of `fits[0]` and each
/// other fit, matched in both directions; infinite if a set is empty.
pub fn band0_agreement(fits: &[&PencilFit], merge_tol: f64) -> f64 {
    let sets: Vec<Vec<Complex64>> = fits.iter().map(|f| distinct_band(f, 0, merge_tol)).collect();
    let Some(first) = sets.first() else {
        return f64::INFINITY;
    };
    sets.iter()
        .map(|s| {
            if s.is_empty() || first.is_empty() {
                f64::INFINITY
            } else {
                max_matching_error(first, s).max(max_matching_error(s, first))
            }
        })
        .fold(0.0, f64::max)
}

/// Structural checks of the resonance set for a sector with `N`, `K`.
pub fn band_analysis(fit: &PencilFit, n: i64, k: u32, tol: &Tolerances) -> Verdict {
    let lambda = fit.lambda;
    if n == 0 {
        return toral_analysis(fit);
    }
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let band0 = distinct_band(fit, 0, tol.merge_tol);
    let target0 = lambda.powf(-0.5);

    let err0 = band0
        .iter()
        .map(|x| (x.norm() - target0).abs())
        .fold(if band0.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
    checks.push(Check::new(
        "band0_modulus",
        tol.modulus_tol,
        err0,
        format!("target {target0:.10}, moduli {:?}", band0.iter().map(|x| x.norm()).collect::<Vec<_>>()),
    ));

    let bound = k as usize * n.unsigned_abs() as usize;
    checks.push(Check::flag(
        "band0_count",
        !band0.is_empty() && band0.len() <= bound,
        format!("{} distinct band-0 resonances, allowed 1..={bound}", band0.len()),
    ));

    let band1 = distinct_band(fit, 1, tol.merge_tol);
    let target1 = lambda.powf(-1.5);
    let err1 = band1
        .iter()
        .map(|x| (x.norm() - target1).abs())
        .fold(if band1.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
    checks.push(Check::new(
        "band1_modulus",
        tol.band1_tol,
        err1,
        format!("target {target1:.10}, moduli {:?}", band1.iter().map(|x| x.norm()).collect::<Vec<_>>()),
    ));

    let scaled: Vec<Complex64> = band0.iter().map(|x| x / lambda).collect();
    let pos_err = if band0.is_empty() || band1.is_empty() {
        f64::INFINITY
    } else {
        max_matching_error(&scaled, &band1).max(max_matching_error(&band1, &scaled))
    };
    checks.push(Check::new(
        "band1_position",
        tol.band1_tol,
        pos_err,
        "band-1 set against λ⁻¹ · band-0 set (both directions)".into(),
    ));

    let mu_err = fit
        .resonances
        .iter()
        .filter(|r| r.band == Some(0))
        .filter_map(|r| r.mu)
        .map(|mu| (mu.norm() - 1.0).abs())
        .fold(if band0.is_empty() { f64::INFINITY } else { 0.0 }, f64::max);
    checks.push(Check::new(
        "mu_unit_modulus",
        tol.modulus_tol,
        mu_err,
        format!(
            "band-0 μ: {:?}",
            fit.resonances
                .iter()
                .filter(|r| r.band == Some(0))
                .filter_map(|r| r.mu)
                .map(|m| (m.re, m.im))
                .collect::<Vec<_>>()
        ),
    ));

    let mu0: Vec<Complex64> = band0.iter().map(|x| x * lambda.sqrt()).collect();
    let mu1: Vec<Complex64> = band1.iter().map(|x| x * lambda.powf(1.5)).collect();
    let mu_cons = if mu0.is_empty() || mu1.is_empty() {
        f64::INFINITY
    } else {
        max_matching_error(&mu0, &mu1).max(max_matching_error(&mu1, &mu0))
    };
    checks.push(Check::new(
        "mu_consistency",
        tol.band1_tol,
        mu_cons,
        "λ^{1/2} · band 0 against λ^{3/2} · band 1".into(),
    ));

    checks.push(Check::flag(
        "spectral_radius",
        fit.resonances.iter().all(|r| r.modulus() <= 1.0 + UNIT_DISK_SLACK),
        format!("{} modes rejected outside the unit disk", fit.rejected.len()),
    ));

    let deeper = fit.resonances.iter().filter(|r| r.band.is_some_and(|b| b >= 2)).count();
    if deeper > 0 {
        notes.push(format!("{deeper} resonances in bands >= 2 reported, not asserted"));
    }
    let unassigned = fit.resonances.iter().filter(|r| r.band.is_none()).count();
    if unassigned > 0 {
        notes.push(format!("{unassigned} fitted modes match no band"));
    }
    Verdict::from_checks(checks, notes)
}

/// For `N = 0` the dynamics is the toral automorphism: the only resonance is
/// `ξ = 1` (carried by the constant mode), everything else decays
/// superexponentially.
fn toral_analysis(fit: &PencilFit) -> Verdict {
    let significant: Vec<&Resonance> = fit.resonances.iter().filter(|r| r.modulus() > 0.05).collect();
    let err = significant
        .iter()
        .map(|r| (r.xi - Complex64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max);
    let checks = vec![
        Check::flag(
            "toral_single_resonance",
            significant.len() <= 1,
            format!("{} resonances with modulus above 0.05", significant.len()),
        ),
        Check::new(
            "toral_resonance_at_one",
            1e-8,
            err,
            "resonances above 0.05 must equal 1".into(),
        ),
    ];
    Verdict::from_checks(
        checks,
        vec!["N = 0: toral automorphism, resonance spectrum {1}".into()],
    )
}

/// Least-squares slope of `log |r_n|` after removing the fitted bands
/// `0 … bands_removed − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub slope: f64,
    /// `−(bands_removed + 1/2) log λ`.
    pub expected: f64,
    pub first: usize,
    pub last: usize,
    pub remainder: Vec<f64>,
}

pub fn residual_decay(samples: &[Complex64], fit: &PencilFit, bands_removed: u32, first: usize) -> Result<DecayEstimate> {
    if bands_removed < 1 {
        return Err(Error::InvalidParameter("bands_removed must be at least 1".into()));
    }
    let modes: Vec<(Complex64, Complex64)> = fit
        .resonances
        .iter()
        .filter(|r| r.band.is_some_and(|b| b < bands_removed))
        .map(|r| (r.xi, r.amplitude))
        .collect();
    let remainder: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(n, c)| (c - evaluate_modes(&modes, n)).norm())
        .collect();
    let pts: Vec<(f64, f64)> = remainder
        .iter()
        .enumerate()
        .skip(first)
        .filter(|(_, r)| **r > 0.0)
        .map(|(n, r)| (n as f64, r.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooShort { len: pts.len(), min: 2 });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(DecayEstimate {
        slope: sxy / sxx,
        expected: -(f64::from(bands_removed) + 0.5) * fit.lambda.ln(),
        first,
        last: samples.len() - 1,
        remainder,
    })
}
