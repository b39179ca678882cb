//! The transfer operator `L h = h ∘ Φ` on a sector and correlation series
//! `C_n = ∫ conj(g) · h ∘ Φⁿ`.
//!
//! Correlations are computed with the periodic trapezoid rule on the grid
//! `(j/M, k/M)`. On that grid everything except the two profiles is integer
//! arithmetic: `Aⁿ` maps grid points to grid points and the fibre phase
//! `NK(τ_n(x, y) − P·Y)` has denominator dividing `2M²`, so each phase is
//! an exactly reduced integer numerator before a single conversion to `f64`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automorphism::{Cocycle, PartialHypAuto};
use crate::error::{Error, Result};
use crate::group::{reduce, ExactPoint, LieVector, Point};
use crate::hexfloat;
use crate::quadrature::pairwise_sum;
use crate::sector::{roots_of_unity, DiffOp, GridProfile, SectorFunction, ThetaTerm};

pub const MIN_GRID: usize = 64;
pub const MAX_GRID: usize = 1 << 15;
pub const PAIRING: &str = "C_n = integral over M of conj(g) * (h o Phi^n)";

/// `Lᵏ h` as a pointwise evaluator; orbits are computed in exact rationals.
pub struct Transferred<'a> {
    pub auto: &'a PartialHypAuto,
    pub function: &'a SectorFunction,
    pub cocycle: Cocycle,
}

pub fn transfer_apply<'a>(auto: &'a PartialHypAuto, h: &'a SectorFunction, k: u32) -> Transferred<'a> {
    Transferred {
        auto,
        function: h,
        cocycle: auto.iterate_cocycle(k),
    }
}

impl Transferred<'_> {
    pub fn k(&self) -> u32 {
        self.cocycle.n
    }

    pub fn evaluate(&self, m: &Point) -> Complex64 {
        self.evaluate_exact(&ExactPoint::from_f64(m))
    }

    pub fn evaluate_exact(&self, m: &ExactPoint) -> Complex64 {
        self.function.evaluate(&self.cocycle.apply(m))
    }

    /// `(U_r ⋯ U_1 Lᵏ h)(m)` for `fields = [U_1, …, U_r]`, using
    /// `U (h ∘ Φᵏ) = ((φᵏ U) h) ∘ Φᵏ`.
    pub fn evaluate_derivative(&self, fields: &[LieVector<f64>], m: &Point) -> Complex64 {
        let k = self.k();
        let op = fields.iter().fold(DiffOp::identity(self.function.nk()), |op, v| {
            op.then(&self.auto.push_forward(v, k))
        });
        let image = self.cocycle.apply(&ExactPoint::from_f64(m));
        self.function.evaluate_op(&op, &image)
    }
}

/// Maximum relative residuals of `Vʲ Lᵏ h = λ^{−jk} Lᵏ Vʲ h` and
/// `Wʲ Lᵏ h = λ^{jk} Lᵏ Wʲ h` over `points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntertwiningResidual {
    pub v: f64,
    pub w: f64,
}

pub fn check_intertwining(
    auto: &PartialHypAuto,
    h: &SectorFunction,
    j: u32,
    k: u32,
    points: &[Point],
) -> IntertwiningResidual {
    let lk = transfer_apply(auto, h, k);
    let nk = h.nk();
    let residual = |v: &LieVector<f64>, factor: f64| {
        let word = vec![v.clone(); j as usize];
        let op_v = word.iter().fold(DiffOp::identity(nk), |op, u| op.then(u));
        let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
        for m in points {
            let lhs = lk.evaluate_derivative(&word, m);
            let image = lk.cocycle.apply(&ExactPoint::from_f64(m));
            let rhs = h.evaluate_op(&op_v, &image) * factor;
            diff = diff.max((lhs - rhs).norm());
            scale = scale.max(rhs.norm());
        }
        if diff == 0.0 {
            0.0
        } else {
            diff / scale
        }
    };
    let jk = f64::from(j * k);
    IntertwiningResidual {
        v: residual(&auto.frame.v, auto.lambda.powf(-jk)),
        w: residual(&auto.frame.w, auto.lambda.powf(jk)),
    }
}

/// How phases and reduced indices on the grid are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseArithmetic {
    /// Residues modulo `2M²` in machine integers.
    Modular,
    /// Full `BigRational` evaluation of `Φⁿ` and reduction per point.
    Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoParams {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub l: i64,
    pub m: i64,
    pub k: u32,
}

impl AutoParams {
    pub fn of(auto: &PartialHypAuto) -> Self {
        Self {
            a: auto.a,
            b: auto.b,
            c: auto.c,
            d: auto.d,
            l: auto.l,
            m: auto.m,
            k: auto.k,
        }
    }

    pub fn build(&self) -> Result<PartialHypAuto> {
        PartialHypAuto::build(self.a, self.b, self.c, self.d, self.l, self.m, self.k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub automorphism: AutoParams,
    pub lambda: f64,
    pub sector_n: i64,
    pub sector_k: u32,
    pub g: Vec<ThetaTerm>,
    pub h: Vec<ThetaTerm>,
    pub theta_truncation: u32,
    pub grid: usize,
    pub n_max: u32,
    /// Entries `C_0 … C_{resolved_len − 1}` are below the grid's aliasing
    /// horizon; later entries are computed but not trusted.
    pub resolved_len: usize,
    pub pairing: String,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    pub values: Vec<Complex64>,
    pub meta: SeriesMeta,
}

impl CorrelationSeries {
    pub fn resolved(&self) -> &[Complex64] {
        &self.values[..self.meta.resolved_len.min(self.values.len())]
    }

    /// `n,re,im,re_hex,im_hex` with a header line.
    pub fn to_csv(&self) -> String {
        write_csv(&self.values)
    }

    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("serializable") + "\n"
    }
}

pub fn write_csv(values: &[Complex64]) -> String {
    let mut out = String::from("n,re,im,re_hex,im_hex\n");
    for (n, v) in values.iter().enumerate() {
        let _ = writeln!(
            out,
            "{n},{:e},{:e},{},{}",
            v.re,
            v.im,
            hexfloat::format(v.re),
            hexfloat::format(v.im)
        );
    }
    out
}

/// Reads the CSV written by [`write_csv`]; hex columns take precedence.
pub fn read_csv(text: &str) -> Result<Vec<Complex64>> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "n,re,im,re_hex,im_hex" || header.trim() == "n,re,im" => {}
        _ => return Err(parse_err(1, "expected header n,re,im[,re_hex,im_hex]".into())),
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 && cols.len() != 5 {
            return Err(parse_err(line_no, format!("expected 3 or 5 columns, found {}", cols.len())));
        }
        let n: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad index {:?}", cols[0])))?;
        if n != values.len() {
            return Err(parse_err(line_no, format!("index {n} out of sequence")));
        }
        let value = if cols.len() == 5 {
            let re = hexfloat::parse(cols[3]).ok_or_else(|| parse_err(line_no, format!("bad hex float {:?}", cols[3])))?;
            let im = hexfloat::parse(cols[4]).ok_or_else(|| parse_err(line_no, format!("bad hex float {:?}", cols[4])))?;
            Complex64::new(re, im)
        } else {
            let re: f64 = cols[1].parse().map_err(|_| parse_err(line_no, format!("bad number {:?}", cols[1])))?;
            let im: f64 = cols[2].parse().map_err(|_| parse_err(line_no, format!("bad number {:?}", cols[2])))?;
            Complex64::new(re, im)
        };
        values.push(value);
    }
    Ok(values)
}

/// Largest `n` for which the `M × M` trapezoid rule still resolves
/// `conj(g) · h ∘ Φⁿ` (capped at `cap`).
///
/// For `N = 0` the integrand is a finite trigonometric sum and aliasing is
/// decided exactly: a pair of modes aliases when `(Aⁿ)ᵀ k ≡ j (mod M)` but
/// `(Aⁿ)ᵀ k ≠ j`. For `N ≠ 0` the observables have Gaussian profiles whose
/// bandwidth grows with `‖Aⁿ‖`; the grid resolves them while
/// `‖Aⁿ‖ ≤ M² / (8 |NK| √(2 m_max + 1))`.
pub fn resolution_horizon(
    auto: &PartialHypAuto,
    g: &SectorFunction,
    h: &SectorFunction,
    grid: usize,
    cap: u32,
) -> u32 {
    let base = auto.matrix();
    let mut pow = [[1i128, 0], [0, 1]];
    let nk = g.nk();
    let mut horizon = 0;
    for n in 0..=cap {
        let ok = if nk == 0 {
            let m = grid as i128;
            g.terms().iter().all(|tg| {
                h.terms().iter().all(|th| {
                    let kx = pow[0][0] * i128::from(th.m) + pow[1][0] * i128::from(th.l);
                    let ky = pow[0][1] * i128::from(th.m) + pow[1][1] * i128::from(th.l);
                    let (jx, jy) = (i128::from(tg.m), i128::from(tg.l));
                    let congruent = (kx - jx).rem_euclid(m) == 0 && (ky - jy).rem_euclid(m) == 0;
                    !congruent || (kx == jx && ky == jy)
                })
            })
        } else {
            let m_top = g.max_hermite_index().max(h.max_hermite_index()) as f64;
            let limit = (grid * grid) as f64 / (8.0 * nk.unsigned_abs() as f64 * (2.0 * m_top + 1.0).sqrt());
            spectral_norm(&pow) <= limit
        };
        if !ok {
            break;
        }
        horizon = n;
        pow = crate::automorphism::mat2_mul(&base, &pow);
        if pow.iter().flatten().any(|v| v.unsigned_abs() > 1 << 60) {
            break;
        }
    }
    horizon
}

fn spectral_norm(a: &[[i128; 2]; 2]) -> f64 {
    let f2: f64 = a.iter().flatten().map(|&v| (v as f64) * (v as f64)).sum();
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) as f64;
    (0.5 * (f2 + (f2 * f2 - 4.0 * det * det).max(0.0).sqrt())).sqrt()
}

pub fn correlate(
    auto: &PartialHypAuto,
    g: &SectorFunction,
    h: &SectorFunction,
    n_max: u32,
    grid: usize,
) -> Result<CorrelationSeries> {
    correlate_with(auto, g, h, n_max, grid, PhaseArithmetic::Modular)
}

pub fn correlate_with(
    auto: &PartialHypAuto,
    g: &SectorFunction,
    h: &SectorFunction,
    n_max: u32,
    grid: usize,
    arithmetic: PhaseArithmetic,
) -> Result<CorrelationSeries> {
    g.same_sector(h)?;
    if g.k() != auto.k {
        return Err(Error::InvalidParameter(format!(
            "observables use K = {} but the automorphism acts on K = {}",
            g.k(),
            auto.k
        )));
    }
    if grid < MIN_GRID {
        return Err(Error::GridTooSmall { grid, min: MIN_GRID });
    }
    if grid > MAX_GRID {
        return Err(Error::GridTooLarge(grid));
    }
    let fg = g.grid_profile(grid)?;
    let fh = h.grid_profile(grid)?;
    let tables = PhaseTables::new(grid);
    let cocycles: Vec<Cocycle> = (0..=n_max).map(|n| auto.iterate_cocycle(n)).collect();
    let values = correlation_entries(&cocycles, g.nk(), g.k(), &fg, &fh, grid, &tables, arithmetic);
    let horizon = resolution_horizon(auto, g, h, grid, n_max);
    let mut warnings = Vec::new();
    if horizon < n_max {
        warnings.push(format!(
            "n_max = {n_max} exceeds the resolution horizon n = {horizon} of the {grid}x{grid} grid; later entries are aliased"
        ));
    }
    Ok(CorrelationSeries {
        values,
        meta: SeriesMeta {
            automorphism: AutoParams::of(auto),
            lambda: auto.lambda,
            sector_n: g.n(),
            sector_k: g.k(),
            g: g.terms().to_vec(),
            h: h.terms().to_vec(),
            theta_truncation: g.n_max().max(h.n_max()),
            grid,
            n_max,
            resolved_len: horizon as usize + 1,
            pairing: PAIRING.into(),
            warnings,
        },
    })
}

/// `e^{2πi r / (2M²)}` as a product of a coarse and a fine table entry.
struct PhaseTables {
    grid: usize,
    coarse: Vec<Complex64>,
    fine: Vec<Complex64>,
}

impl PhaseTables {
    fn new(grid: usize) -> Self {
        let denom = 2.0 * (grid * grid) as f64;
        Self {
            grid,
            coarse: roots_of_unity(grid),
            fine: (0..2 * grid)
                .map(|s| Complex64::cis(2.0 * PI * s as f64 / denom))
                .collect(),
        }
    }

    /// `e^{2πi r / (2M²)}` for any integer `r`.
    #[inline]
    fn phase(&self, r: i64) -> Complex64 {
        let two_m = 2 * self.grid as i64;
        let (hi, lo) = if self.grid.is_power_of_two() {
            let bits = two_m.trailing_zeros();
            let r = r & (two_m * self.grid as i64 - 1);
            (r >> bits, r & (two_m - 1))
        } else {
            let r = r.rem_euclid(two_m * self.grid as i64);
            (r / two_m, r % two_m)
        };
        self.coarse[hi as usize] * self.fine[lo as usize]
    }
}

/// Residues of `Aⁿ` mod `M²` and of the doubled `τ_n` coefficients, which is
/// all the grid needs.
struct ModularCocycle {
    a: [i64; 4],
    quad: [i64; 3],
    lin: [i64; 2],
    /// per-column part of `2M²·τ_n`: `c2 k² + M c4 k`
    col: Vec<i64>,
}

impl ModularCocycle {
    fn new(c: &Cocycle, grid: usize) -> Self {
        let g = grid as i64;
        let m2 = (grid * grid) as i128;
        let d = 2 * g * g;
        let big_d = BigInt::from(2 * m2);
        let two_m = BigInt::from(2 * grid);
        let res = |v: &BigInt, modulus: &BigInt| v.mod_floor(modulus).to_i64().expect("small residue");
        let quad: [i64; 3] = std::array::from_fn(|i| res(&c.tau.doubled[i], &big_d));
        let lin = [res(&c.tau.doubled[3], &two_m), res(&c.tau.doubled[4], &two_m)];
        let col = (0..g)
            .map(|k| (quad[2] * k % d * k + g * lin[1] % d * k).rem_euclid(d))
            .collect();
        Self {
            a: [
                c.matrix[0][0].rem_euclid(m2) as i64,
                c.matrix[0][1].rem_euclid(m2) as i64,
                c.matrix[1][0].rem_euclid(m2) as i64,
                c.matrix[1][1].rem_euclid(m2) as i64,
            ],
            quad,
            lin,
            col,
        }
    }

    /// Phase numerators (before the factor `NK`) and reduced grid indices
    /// of the images of `(j/M, k/M, 0)` for `k = 0, …, M − 1`, stepping the
    /// residues incrementally along the row.
    fn walk_row(&self, j: i64, g: i64, mut visit: impl FnMut(usize, i64, usize, usize)) {
        let m2 = g * g;
        let d = 2 * m2;
        let row_const = (self.quad[0] * j % d * j + g * self.lin[0] % d * j).rem_euclid(d);
        let row_lin = self.quad[1] * j % d;
        let row_lin = row_lin.rem_euclid(d);
        let xn = self.a[0] * j % m2;
        let (mut p, mut xi) = (xn / g, xn % g);
        let mut yi = self.a[2] * j % m2 % g;
        let (step_hi, step_lo) = (self.a[1] / g, self.a[1] % g);
        let step_y = self.a[3] % g;
        let mut lin = 0;
        for k in 0..g as usize {
            let t = row_const + lin + self.col[k] - 2 * g * p * yi;
            visit(k, t, xi as usize, yi as usize);
            xi += step_lo;
            p += step_hi;
            if xi >= g {
                xi -= g;
                p += 1;
            }
            if p >= g {
                p -= g;
            }
            yi += step_y;
            if yi >= g {
                yi -= g;
            }
            lin += row_lin;
            if lin >= d {
                lin -= d;
            }
        }
    }
}

/// `C_n` for every cocycle in `cocycles`. Rows of the grid are independent;
/// each row's partial sums are combined pairwise in a fixed order.
#[allow(clippy::too_many_arguments)]
fn correlation_entries(
    cocycles: &[Cocycle],
    nk: i64,
    k_lattice: u32,
    fg: &GridProfile,
    fh: &GridProfile,
    grid: usize,
    tables: &PhaseTables,
    arithmetic: PhaseArithmetic,
) -> Vec<Complex64> {
    let g = grid as i64;
    let walkers: Vec<ModularCocycle> = cocycles.iter().map(|c| ModularCocycle::new(c, grid)).collect();
    let rows: Vec<Vec<Complex64>> = (0..grid)
        .into_par_iter()
        .map_init(
            || RowBuffers::new(grid),
            |buf, j| {
                fg.fill_row(j, &mut buf.left);
                for l in buf.left.iter_mut() {
                    *l = l.conj();
                }
                let ji = j as i64;
                cocycles
                    .iter()
                    .zip(&walkers)
                    .map(|(cocycle, md)| {
                        buf.phases.clear();
                        buf.points.clear();
                        let mut visit = |t: i64, xi: usize, yi: usize| {
                            buf.phases.push(tables.phase(nk * t));
                            buf.points.push((xi, yi));
                        };
                        match arithmetic {
                            PhaseArithmetic::Modular => md.walk_row(ji, g, |_, t, xi, yi| visit(t, xi, yi)),
                            PhaseArithmetic::Rational => {
                                for k in 0..g {
                                    let (t, xi, yi) = rational_point_data(cocycle, k_lattice, ji, k, g);
                                    visit(t, xi, yi);
                                }
                            }
                        }
                        fh.at_many(&buf.points, &mut buf.right);
                        buf.terms.clear();
                        buf.terms.extend(
                            buf.left.iter().zip(&buf.phases).zip(&buf.right).map(|((l, p), r)| l * p * r),
                        );
                        pairwise_sum(&buf.terms)
                    })
                    .collect()
            },
        )
        .collect();
    let scale = (grid * grid) as f64;
    (0..cocycles.len())
        .map(|n| {
            let column: Vec<Complex64> = rows.iter().map(|r| r[n]).collect();
            pairwise_sum(&column) / scale
        })
        .collect()
}

struct RowBuffers {
    left: Vec<Complex64>,
    phases: Vec<Complex64>,
    points: Vec<(usize, usize)>,
    right: Vec<Complex64>,
    terms: Vec<Complex64>,
}

impl RowBuffers {
    fn new(grid: usize) -> Self {
        Self {
            left: vec![Complex64::new(0.0, 0.0); grid],
            phases: Vec::with_capacity(grid),
            points: Vec::with_capacity(grid),
            right: Vec::with_capacity(grid),
            terms: Vec::with_capacity(grid),
        }
    }
}

/// The same data as [`ModularCocycle::walk_row`], by exact rational evaluation
/// and reduction of the image point.
fn rational_point_data(cocycle: &Cocycle, k_lattice: u32, j: i64, k: i64, g: i64) -> (i64, usize, usize) {
    let r = |n: i64| BigRational::new(BigInt::from(n), BigInt::from(g));
    let image = cocycle.apply(&ExactPoint::new(r(j), r(k), BigRational::zero()));
    let red = reduce(&image, k_lattice).point;
    let scaled = &red.z * BigInt::from(2 * g * g);
    assert!(scaled.is_integer(), "phase denominator must divide 2M²");
    let residue = scaled.to_integer().mod_floor(&BigInt::from(2 * g * g));
    let idx = |v: &BigRational| (v * BigInt::from(g)).to_integer().to_i64().expect("grid index");
    (residue.to_i64().expect("residue"), idx(&red.x) as usize, idx(&red.y) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::theta_atom;

    fn golden() -> PartialHypAuto {
        PartialHypAuto::build(2, 1, 1, 1, 0, 0, 1).unwrap()
    }

    #[test]
    fn transfer_basics() {
        let auto = golden();
        let h = theta_atom(1, 1, 1, 0, 8).unwrap();
        let m = Point::new(0.3, 0.6, 0.2);
        assert_eq!(transfer_apply(&auto, &h, 0).evaluate(&m), h.evaluate(&m));
        let l1 = transfer_apply(&auto, &h, 1);
        assert_eq!(l1.evaluate(&Point::identity()), h.evaluate(&Point::identity()));
        let direct = h.evaluate(&auto.apply(&ExactPoint::from_f64(&m)));
        assert_eq!(l1.evaluate(&m), direct);
    }

    #[test]
    fn fibre_weight_survives_transfer() {
        let auto = golden();
        let h = theta_atom(2, 1, 0, 1, 8).unwrap();
        for k in 0..4 {
            let lk = transfer_apply(&auto, &h, k);
            let m = Point::new(0.17, 0.83, 0.41);
            let z = lk.evaluate_derivative(&[LieVector::basis_z()], &m);
            let expect = Complex64::new(0.0, 4.0 * PI) * lk.evaluate(&m);
            assert!((z - expect).norm() <= 1e-10 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn intertwining_relations() {
        let auto = golden();
        let h = theta_atom(1, 1, 1, 0, 8).unwrap();
        let pts: Vec<Point> = (0..20)
            .map(|i| Point::new((i as f64 * 0.137) % 1.0, (i as f64 * 0.291) % 1.0, (i as f64 * 0.071) % 1.0))
            .collect();
        assert_eq!(check_intertwining(&auto, &h, 0, 3, &pts), IntertwiningResidual { v: 0.0, w: 0.0 });
        for j in 1..=2 {
            for k in 1..=4 {
                let r = check_intertwining(&auto, &h, j, k, &pts);
                assert!(r.v <= 1e-8 && r.w <= 1e-8, "j={j} k={k} {r:?}");
            }
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let v = vec![Complex64::new(0.1, -2.5e-300), Complex64::new(-0.0, 1.0 / 3.0)];
        let text = write_csv(&v);
        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in v.iter().zip(&back) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert!(matches!(read_csv("n,re,im\n0,1,2\n5,1,2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_csv("bogus\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sector_guards() {
        let auto = golden();
        let g = theta_atom(1, 1, 0, 0, 8).unwrap();
        let h = theta_atom(2, 1, 0, 0, 8).unwrap();
        assert!(matches!(correlate(&auto, &g, &h, 3, 64), Err(Error::SectorMismatch { .. })));
        assert!(matches!(correlate(&auto, &g, &g, 3, 32), Err(Error::GridTooSmall { .. })));
        let g2 = theta_atom(1, 2, 0, 0, 8).unwrap();
        assert!(matches!(correlate(&auto, &g2, &g2, 3, 64), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_lag_is_a_norm() {
        let auto = golden();
        let h = SectorFunction::new(
            1,
            1,
            vec![
                ThetaTerm::new(Complex64::new(1.0, 0.3), 0, 0),
                ThetaTerm::new(Complex64::new(-0.2, 0.5), 2, 1),
            ],
            8,
        )
        .unwrap();
        let s = correlate(&auto, &h, &h, 0, 64).unwrap();
        assert!(s.values[0].re > 0.0 && s.values[0].im.abs() < 1e-12);
        // direct quadrature of |f|² over the square
        let direct: f64 = (0..64)
            .flat_map(|j| (0..64).map(move |k| (j, k)))
            .map(|(j, k)| h.profile(j as f64 / 64.0, k as f64 / 64.0).norm_sqr())
            .sum::<f64>()
            / 4096.0;
        assert!((s.values[0].re - direct).abs() < 1e-12);
    }

    #[test]
    fn modular_and_rational_phases_agree_bitwise() {
        let auto = PartialHypAuto::build(2, 1, 1, 1, 1, -1, 2).unwrap();
        let g = theta_atom(1, 2, 0, 1, 8).unwrap();
        let h = theta_atom(1, 2, 1, 0, 8).unwrap();
        let a = correlate_with(&auto, &g, &h, 5, 64, PhaseArithmetic::Modular).unwrap();
        let b = correlate_with(&auto, &g, &h, 5, 64, PhaseArithmetic::Rational).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
