//! Smooth functions in the sector `C_N`, where `Z h = 2πiNK h`.
//!
//! Every such function is `h(x, y, z) = e^{2πiNKz} f(x, y)` for a profile `f`
//! with `f(x + 1, y) = e^{−2πiNKy} f(x, y)` and `f(x, y + 1) = f(x, y)`. For
//! `N ≠ 0` the profiles used here are finite sums of theta–Hermite atoms
//!
//! ```text
//! f(x, y) = e^{2πily} Σ_{|n| ≤ n_max} e^{2πiNKny} ψ_m(x + n)
//! ```
//!
//! with `ψ_m` the L²-normalized Hermite function of width 1. For `N = 0` the
//! theta sum degenerates and a term `(m, l)` is the torus mode
//! `e^{2πi(mx + ly)}`.
//!
//! Left-invariant derivatives of `h` stay in the sector, so they are
//! represented by a [`DiffOp`] acting on the profile:
//! `X ↦ ∂x`, `Y ↦ ∂y + 2πiNK·x`, `Z ↦ 2πiNK`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{reduce, Coord, GroupElement, LieVector};

pub const DEFAULT_N_MAX: u32 = 8;
pub const MIN_N_MAX: u32 = 4;

/// One summand `coeff · atom(m, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaTerm {
    pub coeff: Complex64,
    /// Hermite index for `N ≠ 0`, `x`-frequency for `N = 0`.
    pub m: i64,
    pub l: i64,
}

impl ThetaTerm {
    pub fn new(coeff: Complex64, m: i64, l: i64) -> Self {
        Self { coeff, m, l }
    }
}

/// A finite theta–Hermite combination in `C_N` for the lattice `Γ_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorFunction {
    n: i64,
    k: u32,
    terms: Vec<ThetaTerm>,
    n_max: u32,
}

impl SectorFunction {
    pub fn new(n: i64, k: u32, terms: Vec<ThetaTerm>, n_max: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidLattice);
        }
        if n_max < MIN_N_MAX {
            return Err(Error::InvalidTruncation { n_max });
        }
        if n != 0 && terms.iter().any(|t| t.m < 0) {
            return Err(Error::InvalidParameter(
                "Hermite index must be nonnegative".into(),
            ));
        }
        Ok(Self {
            n,
            k,
            terms,
            n_max,
        })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn terms(&self) -> &[ThetaTerm] {
        &self.terms
    }

    /// `NK`, the integer frequency along the fibre.
    pub fn nk(&self) -> i64 {
        self.n * i64::from(self.k)
    }

    pub fn max_hermite_index(&self) -> i64 {
        self.terms.iter().map(|t| t.m.abs()).max().unwrap_or(0)
    }

    pub fn with_n_max(&self, n_max: u32) -> Result<Self> {
        Self::new(self.n, self.k, self.terms.clone(), n_max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| ThetaTerm::new(t.coeff * c, t.m, t.l))
            .collect();
        Self::new(self.n, self.k, terms, self.n_max).expect("same data")
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.same_sector(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(self.n, self.k, terms, self.n_max.max(other.n_max))
    }

    pub fn same_sector(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::SectorMismatch {
                n1: self.n,
                k1: self.k,
                n2: other.n,
                k2: other.k,
            });
        }
        Ok(())
    }

    /// Pointwise complex conjugate, an element of `C_{−N}`.
    pub fn conj(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let m = if self.n == 0 { -t.m } else { t.m };
                ThetaTerm::new(t.coeff.conj(), m, -t.l)
            })
            .collect();
        Self::new(-self.n, self.k, terms, self.n_max).expect("same data")
    }

    /// The truncated profile sum at an arbitrary `(x, y)`; no reduction.
    pub fn profile(&self, x: f64, y: f64) -> Complex64 {
        self.profile_op(&DiffOp::identity(self.nk()), x, y)
    }

    /// `(D f)(x, y)` for the profile `f`; no reduction.
    pub fn profile_op(&self, op: &DiffOp, x: f64, y: f64) -> Complex64 {
        let nk = self.nk();
        let mut total = Complex64::new(0.0, 0.0);
        if nk == 0 {
            for t in &self.terms {
                let (fx, fy) = (2.0 * PI * t.m as f64, 2.0 * PI * t.l as f64);
                let wave = Complex64::cis(fx * x + fy * y);
                for (&(p, a, b), c) in &op.terms {
                    total += c
                        * x.powi(p as i32)
                        * Complex64::new(0.0, fx).powu(a)
                        * Complex64::new(0.0, fy).powu(b)
                        * wave
                        * t.coeff;
                }
            }
            return total;
        }
        let max_a = op.terms.keys().map(|&(_, a, _)| a).max().unwrap_or(0);
        let m_top = self.max_hermite_index() as usize + max_a as usize + 1;
        let n_max = i64::from(self.n_max);
        for shift in -n_max..=n_max {
            let psi = hermite_functions(m_top, x + shift as f64);
            for t in &self.terms {
                let freq = (t.l + nk * shift) as f64;
                let wave = Complex64::cis(2.0 * PI * freq * y) * t.coeff;
                for (&(p, a, b), c) in &op.terms {
                    let d = hermite_derivative(&psi, t.m as usize, a as usize);
                    if d == 0.0 {
                        continue;
                    }
                    total += c
                        * x.powi(p as i32)
                        * Complex64::new(0.0, 2.0 * PI * freq).powu(b)
                        * wave
                        * d;
                }
            }
        }
        total
    }

    /// `h(m)`, reducing `m` into the fundamental domain first. Rational input
    /// keeps the fibre phase exact.
    pub fn evaluate<S: Coord>(&self, m: &GroupElement<S>) -> Complex64 {
        self.evaluate_op(&DiffOp::identity(self.nk()), m)
    }

    /// `(D h)(m)` for a left-invariant differential operator `D`.
    pub fn evaluate_op<S: Coord>(&self, op: &DiffOp, m: &GroupElement<S>) -> Complex64 {
        let r = reduce(m, self.k);
        let phase = fibre_phase(self.nk(), &r.point.z);
        phase * self.profile_op(op, r.point.x.to_f64(), r.point.y.to_f64())
    }

    pub fn apply_vector_field(&self, v: &LieVector<f64>) -> Derivative<'_> {
        Derivative {
            function: self,
            op: DiffOp::field(v, self.nk()),
        }
    }

    /// Profile values on the grid `(j/M, k/M)`, row `j` (the `x` index)
    /// major.
    pub fn sample_grid(&self, grid: usize) -> Result<Vec<Complex64>> {
        let profile = self.grid_profile(grid)?;
        let mut out = vec![Complex64::new(0.0, 0.0); grid * grid];
        out.par_chunks_mut(grid).enumerate().for_each(|(j, row)| profile.fill_row(j, row));
        Ok(out)
    }

    /// A pointwise evaluator for the profile on the `M × M` grid that stores
    /// only `O(M · n_max)` coefficients.
    pub fn grid_profile(&self, grid: usize) -> Result<GridProfile> {
        if grid < 8 {
            return Err(Error::GridTooSmall { grid, min: 8 });
        }
        Ok(GridProfile::new(self, grid))
    }
}

/// Profile samples at `(j/M, k/M)`. For `N ≠ 0` and a fixed row the profile
/// is a Laurent polynomial in `z = e^{2πi NK k/M}` per `l`, summed by Horner's
/// rule from per-row coefficients. Coefficients below `2⁻⁶⁰` of the row
/// maximum are skipped; they cannot move a double-precision sum.
pub struct GridProfile {
    grid: usize,
    /// `M − 1` when `M` is a power of two, so residues are a mask.
    mask: Option<i64>,
    nk: i64,
    roots: Vec<Complex64>,
    torus: Vec<ThetaTerm>,
    shift: i64,
    groups: Vec<ShiftGroup>,
}

/// Row coefficients for the terms sharing one `l`; index `i` is the theta
/// shift `n_max − i`.
struct ShiftGroup {
    l: i64,
    coeffs: Vec<Complex64>,
    /// significant index range per row
    range: Vec<(usize, usize)>,
}

impl GridProfile {
    fn new(h: &SectorFunction, grid: usize) -> Self {
        let nk = h.nk();
        let shift = i64::from(h.n_max);
        let width = (2 * shift + 1) as usize;
        let mut groups: Vec<ShiftGroup> = Vec::new();
        if nk != 0 {
            let m_top = h.max_hermite_index() as usize;
            let psi: Vec<Vec<f64>> = (0..grid)
                .into_par_iter()
                .flat_map_iter(|j| {
                    let x = j as f64 / grid as f64;
                    (0..width).map(move |i| hermite_functions(m_top, x + (shift - i as i64) as f64))
                })
                .collect();
            for t in &h.terms {
                let slot = match groups.iter().position(|g| g.l == t.l) {
                    Some(i) => i,
                    None => {
                        groups.push(ShiftGroup {
                            l: t.l,
                            coeffs: vec![Complex64::new(0.0, 0.0); grid * width],
                            range: Vec::new(),
                        });
                        groups.len() - 1
                    }
                };
                for (c, p) in groups[slot].coeffs.iter_mut().zip(&psi) {
                    *c += t.coeff * p[t.m as usize];
                }
            }
            let floor = 2f64.powi(-60);
            for group in &mut groups {
                group.range = group
                    .coeffs
                    .chunks(width)
                    .map(|row| {
                        let top = row.iter().map(|c| c.norm()).fold(0.0, f64::max);
                        let keep = |c: &Complex64| c.norm() > floor * top;
                        let lo = row.iter().position(keep).unwrap_or(0);
                        let hi = row.iter().rposition(keep).unwrap_or(0);
                        (lo, hi)
                    })
                    .collect();
            }
        }
        Self {
            grid,
            mask: grid.is_power_of_two().then_some(grid as i64 - 1),
            nk,
            roots: roots_of_unity(grid),
            torus: if nk == 0 { h.terms.clone() } else { Vec::new() },
            shift,
            groups,
        }
    }

    #[inline]
    fn root(&self, e: i64) -> Complex64 {
        let i = match self.mask {
            Some(mask) => e & mask,
            None => e.rem_euclid(self.grid as i64),
        };
        self.roots[i as usize]
    }

    /// The profile at `(j/M, k/M)`.
    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        let mut out = Vec::with_capacity(1);
        self.at_many(&[(j, k)], &mut out);
        out[0]
    }

    /// `at` for a batch of points; four Horner chains run side by side.
    pub fn at_many(&self, points: &[(usize, usize)], out: &mut Vec<Complex64>) {
        out.clear();
        if self.nk == 0 {
            out.extend(points.iter().map(|&(j, k)| {
                let (j, k) = (j as i64, k as i64);
                self.torus.iter().map(|t| t.coeff * self.root(t.m * j + t.l * k)).sum::<Complex64>()
            }));
            return;
        }
        let width = (2 * self.shift + 1) as usize;
        let zero = Complex64::new(0.0, 0.0);
        for batch in points.chunks(4) {
            let lanes = batch.len();
            let z: [Complex64; 4] = std::array::from_fn(|i| {
                batch.get(i).map_or(zero, |&(_, k)| self.root(self.nk * k as i64))
            });
            let mut total = [zero; 4];
            for group in &self.groups {
                let (mut lo, mut hi) = (width, 0);
                for &(j, _) in batch {
                    let (a, b) = group.range[j];
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                let row = |i: usize| &group.coeffs[batch[i.min(lanes - 1)].0 * width..][..width];
                let rows: [&[Complex64]; 4] = std::array::from_fn(row);
                let mut acc = [zero; 4];
                for s in lo..=hi {
                    for i in 0..4 {
                        acc[i] = acc[i] * z[i] + rows[i][s];
                    }
                }
                let base = group.l + self.nk * (self.shift - hi as i64);
                for i in 0..lanes {
                    total[i] += acc[i] * self.root(base * batch[i].1 as i64);
                }
            }
            out.extend_from_slice(&total[..lanes]);
        }
    }

    pub fn fill_row(&self, j: usize, row: &mut [Complex64]) {
        let points: Vec<(usize, usize)> = (0..row.len()).map(|k| (j, k)).collect();
        let mut values = Vec::with_capacity(row.len());
        self.at_many(&points, &mut values);
        row.copy_from_slice(&values);
    }
}

/// `e^{2πi t}` for `t = NK·z`, reducing `t` mod 1 in the coordinate field.
pub fn fibre_phase<S: Coord>(nk: i64, z: &S) -> Complex64 {
    let t = (S::from_int(i128::from(nk)) * z.clone()).frac();
    Complex64::cis(2.0 * PI * t.to_f64())
}

/// `e^{2πi t}` for a rational `t`, reduced mod 1 exactly.
pub fn rational_phase(t: &BigRational) -> Complex64 {
    let f = t - t.floor();
    Complex64::cis(2.0 * PI * Coord::to_f64(&f))
}

pub(crate) fn roots_of_unity(grid: usize) -> Vec<Complex64> {
    (0..grid)
        .map(|i| {
            // exact at the quarter turns
            match (4 * i) % grid {
                0 => match (4 * i) / grid {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                },
                _ => Complex64::cis(2.0 * PI * i as f64 / grid as f64),
            }
        })
        .collect()
}

/// `ψ_0(x), …, ψ_top(x)` with `ψ_m(x) = (2π)^{1/4} h_m(√(2π) x)` and `h_m`
/// the normalized Hermite functions.
pub fn hermite_functions(top: usize, x: f64) -> Vec<f64> {
    let u = (2.0 * PI).sqrt() * x;
    let scale = (2.0 * PI).powf(0.25);
    let mut h = Vec::with_capacity(top + 1);
    h.push(PI.powf(-0.25) * (-0.5 * u * u).exp());
    if top >= 1 {
        h.push(2f64.sqrt() * u * h[0]);
    }
    for m in 1..top {
        let mf = m as f64;
        let next = (2.0 / (mf + 1.0)).sqrt() * u * h[m] - (mf / (mf + 1.0)).sqrt() * h[m - 1];
        h.push(next);
    }
    h.iter_mut().for_each(|v| *v *= scale);
    h
}

/// `ψ_m^{(a)}(x)` from the table `ψ_0(x), …` using
/// `ψ_m' = √(2π) (√(m/2) ψ_{m−1} − √((m+1)/2) ψ_{m+1})`.
pub fn hermite_derivative(psi: &[f64], m: usize, a: usize) -> f64 {
    if a == 0 {
        return psi[m];
    }
    // coefficients over ψ_{m−a..m+a}, indexed by offset + a
    let mut coeffs = vec![0.0; 2 * a + 1];
    coeffs[a] = 1.0;
    let root = (2.0 * PI).sqrt();
    for _ in 0..a {
        let mut next = vec![0.0; 2 * a + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let idx = m as i64 + i as i64 - a as i64;
            if idx < 0 {
                continue;
            }
            let mi = idx as f64;
            if idx > 0 {
                next[i - 1] += c * root * (mi / 2.0).sqrt();
            }
            next[i + 1] -= c * root * ((mi + 1.0) / 2.0).sqrt();
        }
        coeffs = next;
    }
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| {
            let idx = m as i64 + i as i64 - a as i64;
            if idx < 0 {
                0.0
            } else {
                c * psi[idx as usize]
            }
        })
        .sum()
}

/// `Σ c · x^p ∂x^a ∂y^b`, keyed by `(p, a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp {
    pub terms: BTreeMap<(u32, u32, u32), Complex64>,
    nk: i64,
}

impl DiffOp {
    /// The identity on `C_N` with `nk = NK`.
    pub fn identity(nk: i64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0, 0), Complex64::new(1.0, 0.0));
        Self { terms, nk }
    }

    /// A single left-invariant field on `C_N` with `nk = NK`.
    pub fn field(v: &LieVector<f64>, nk: i64) -> Self {
        Self::identity(nk).then(v)
    }

    pub fn nk(&self) -> i64 {
        self.nk
    }

    /// `U ∘ self` for the left-invariant field `U = v`.
    pub fn then(&self, v: &LieVector<f64>) -> Self {
        let twist = Complex64::new(0.0, 2.0 * PI * self.nk as f64);
        let mut out: BTreeMap<(u32, u32, u32), Complex64> = BTreeMap::new();
        let mut add = |key: (u32, u32, u32), c: Complex64| {
            if c != Complex64::new(0.0, 0.0) {
                *out.entry(key).or_default() += c;
            }
        };
        for (&(p, a, b), &c) in &self.terms {
            // X: ∂x (x^p ∂^a ∂^b) = p x^{p-1} ∂^a ∂^b + x^p ∂^{a+1} ∂^b
            if p > 0 {
                add((p - 1, a, b), c * v.x * p as f64);
            }
            add((p, a + 1, b), c * v.x);
            // Y: ∂y + 2πiNK x
            add((p, a, b + 1), c * v.y);
            add((p + 1, a, b), c * v.y * twist);
            // Z: 2πiNK
            add((p, a, b), c * v.z * twist);
        }
        Self { terms: out, nk: self.nk }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
            nk: self.nk,
        }
    }
}

/// `U_r ⋯ U_1 h` as a pointwise evaluator.
#[derive(Clone, Debug)]
pub struct Derivative<'a> {
    pub function: &'a SectorFunction,
    pub op: DiffOp,
}

impl Derivative<'_> {
    pub fn then(&self, v: &LieVector<f64>) -> Self {
        Self {
            function: self.function,
            op: self.op.then(v),
        }
    }

    pub fn evaluate<S: Coord>(&self, m: &GroupElement<S>) -> Complex64 {
        self.function.evaluate_op(&self.op, m)
    }
}

/// Single-atom sector function with unit coefficient.
pub fn theta_atom(n: i64, k: u32, m: i64, l: i64, n_max: u32) -> Result<SectorFunction> {
    SectorFunction::new(n, k, vec![ThetaTerm::new(Complex64::new(1.0, 0.0), m, l)], n_max)
}
