//! Leafwise functionals `ℓ_{η,m}(h) = ∫ η(t) h(m·exp(tW)) dt` and
//! dictionary estimates of the anisotropic norms.

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::profile::{Profile, SharedProfile, TestFunction};
use crate::automorphism::PartialHypAuto;
use crate::error::{Error, Result};
use crate::group::{LieVector, Point};
use crate::quadrature::{integrate_doubling, legendre_rule, pairwise_sum};
use crate::sector::{DiffOp, SectorFunction};

/// Relative tolerance of the order-doubling quadrature.
pub const QUAD_TOL: f64 = 1e-10;
const START_ORDER: usize = 32;
const MAX_ORDER: usize = 4096;

/// `D (h ∘ Φᵏ)` evaluated in `f64`, where `D` is a word in left-invariant
/// fields applied after the transfer.
#[derive(Clone, Debug)]
pub struct LeafObservable {
    function: SectorFunction,
    k: u32,
    op: DiffOp,
    lie_power: [[f64; 3]; 3],
    matrix: [[f64; 2]; 2],
    /// `τ_k` coefficients `[x², xy, y², x, y]`.
    tau: [f64; 5],
    pub v: LieVector<f64>,
    pub w: LieVector<f64>,
}

impl LeafObservable {
    pub fn new(h: &SectorFunction, auto: &PartialHypAuto) -> Self {
        Self::with_transfer(h, auto, 0)
    }

    /// `Lᵏ h`.
    pub fn with_transfer(h: &SectorFunction, auto: &PartialHypAuto, k: u32) -> Self {
        let c = auto.iterate_cocycle(k);
        let to = |v: i128| v as f64;
        Self {
            function: h.clone(),
            k,
            op: DiffOp::identity(h.nk()),
            lie_power: auto.lie_matrix_power(k),
            matrix: [
                [to(c.matrix[0][0]), to(c.matrix[0][1])],
                [to(c.matrix[1][0]), to(c.matrix[1][1])],
            ],
            tau: std::array::from_fn(|i| c.tau.coefficient(i).to_f64().expect("finite")),
            v: auto.frame.v.clone(),
            w: auto.frame.w.clone(),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn nk(&self) -> i64 {
        self.function.nk()
    }

    /// `U ∘ self`, using `U (F ∘ Φᵏ) = ((φᵏ U) F) ∘ Φᵏ`.
    pub fn derive(&self, u: &LieVector<f64>) -> Self {
        let p = &self.lie_power;
        let pushed = LieVector::new(
            p[0][0] * u.x + p[0][1] * u.y,
            p[1][0] * u.x + p[1][1] * u.y,
            p[2][0] * u.x + p[2][1] * u.y + u.z,
        );
        Self {
            op: self.op.then(&pushed),
            ..self.clone()
        }
    }

    /// `Vʲ` applied to `self`.
    pub fn derive_v(&self, j: usize) -> Self {
        (0..j).fold(self.clone(), |acc, _| acc.derive(&self.v))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            op: self.op.scaled(c),
            ..self.clone()
        }
    }

    pub fn evaluate(&self, m: &Point) -> Complex64 {
        let image = if self.k == 0 {
            m.clone()
        } else {
            let (x, y) = (m.x, m.y);
            let t = &self.tau;
            let tau = t[0] * x * x + t[1] * x * y + t[2] * y * y + t[3] * x + t[4] * y;
            let a = &self.matrix;
            Point::new(a[0][0] * x + a[0][1] * y, a[1][0] * x + a[1][1] * y, m.z + tau)
        };
        self.function.evaluate_op(&self.op, &image)
    }

    /// `t ↦ self(m · exp(tW))`.
    pub fn along_leaf(&self, m: &Point, t: f64) -> Complex64 {
        self.evaluate(&m.flow(&self.w, t))
    }
}

/// `ℓ_{η,m}(h)` with order-doubling Gauss–Legendre to relative `tol`.
pub fn ell(eta: &dyn Profile, m: &Point, h: &LeafObservable, tol: f64) -> Result<Complex64> {
    let (a, b) = eta.support();
    let f = |t: f64| eta.value(t) * h.along_leaf(m, t);
    Ok(integrate_doubling(&f, a, b, START_ORDER, MAX_ORDER, tol)?.value)
}

struct Level {
    nodes: Vec<f64>,
    /// `weight · η_i(node)` per template, template major.
    weighted: Vec<Vec<Complex64>>,
}

/// A finite set of functionals `{ℓ_{η_i, m_k} ∘ Vʲ}`: base points on the
/// lattice `(i/n, j/n, l/(nK))` of the fundamental domain and test functions
/// supported in `[−δ, δ]`.
pub struct Dictionary {
    pub base: usize,
    pub k_lattice: u32,
    pub delta: f64,
    pub label: String,
    templates: Vec<SharedProfile>,
    levels: Vec<Level>,
}

/// Descriptor of the dictionary an estimate was taken over.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DictionaryInfo {
    pub label: String,
    pub base_points: usize,
    pub templates: usize,
    pub delta: f64,
}

impl Dictionary {
    pub fn new(base: usize, k_lattice: u32, delta: f64, label: &str, templates: Vec<SharedProfile>) -> Result<Self> {
        if base == 0 || templates.is_empty() || delta <= 0.0 {
            return Err(Error::InvalidParameter("empty dictionary".into()));
        }
        for t in &templates {
            let (a, b) = t.support();
            if a < -delta - 1e-15 || b > delta + 1e-15 {
                return Err(Error::InvalidParameter(format!(
                    "template support [{a}, {b}] leaves [-{delta}, {delta}]"
                )));
            }
        }
        let mut levels = Vec::new();
        let mut order = START_ORDER;
        while order <= MAX_ORDER {
            let rule = legendre_rule(order);
            let nodes: Vec<f64> = rule.iter().map(|&(x, _)| delta * x).collect();
            let weighted = templates
                .iter()
                .map(|eta| {
                    rule.iter()
                        .map(|&(x, w)| eta.value(delta * x) * (w * delta))
                        .collect()
                })
                .collect();
            levels.push(Level { nodes, weighted });
            order *= 2;
        }
        Ok(Self {
            base,
            k_lattice,
            delta,
            label: label.to_string(),
            templates,
            levels,
        })
    }

    /// `count` templates normalized to `‖η‖_{C^q} = 1`.
    pub fn standard(base: usize, k_lattice: u32, delta: f64, count: usize, q: usize) -> Result<Self> {
        let templates = standard_templates(delta, count, q);
        Self::new(base, k_lattice, delta, &format!("standard(q={q})"), templates)
    }

    pub fn templates(&self) -> &[SharedProfile] {
        &self.templates
    }

    pub fn info(&self) -> DictionaryInfo {
        DictionaryInfo {
            label: self.label.clone(),
            base_points: self.base_points().len(),
            templates: self.templates.len(),
            delta: self.delta,
        }
    }

    pub fn base_points(&self) -> Vec<Point> {
        let n = self.base;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out.push(Point::new(
                        i as f64 / n as f64,
                        j as f64 / n as f64,
                        l as f64 / (n as f64 * f64::from(self.k_lattice)),
                    ));
                }
            }
        }
        out
    }

    /// `ℓ_{η_i, m}(h)` for every template, sharing quadrature nodes.
    pub fn functionals(&self, h: &LeafObservable, m: &Point) -> Result<Vec<Complex64>> {
        let mut prev: Option<Vec<Complex64>> = None;
        for level in &self.levels {
            let values: Vec<Complex64> = level.nodes.iter().map(|&t| h.along_leaf(m, t)).collect();
            let current: Vec<Complex64> = level
                .weighted
                .iter()
                .map(|w| {
                    let terms: Vec<Complex64> = w.iter().zip(&values).map(|(a, b)| a * b).collect();
                    pairwise_sum(&terms)
                })
                .collect();
            if let Some(p) = &prev {
                let done = p
                    .iter()
                    .zip(&current)
                    .all(|(a, b)| (a - b).norm() <= QUAD_TOL * b.norm().max(1.0));
                if done {
                    return Ok(current);
                }
            }
            prev = Some(current);
        }
        Err(Error::QuadratureNotConverged {
            order: MAX_ORDER,
            tol: QUAD_TOL,
        })
    }
}

pub fn standard_templates(delta: f64, count: usize, q: usize) -> Vec<SharedProfile> {
    (0..count)
        .map(|i| Arc::new(TestFunction::template(delta, i).normalized(q)) as SharedProfile)
        .collect()
}

/// Where a dictionary maximum was attained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: [f64; 3],
    pub template: usize,
    pub j: usize,
}

/// A lower bound of `sup |ℓ_{η,m}(Vʲ h)|`: the maximum over a finite
/// dictionary, never an upper bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Per-`j` maxima, `j = j_min, …, p`.
    pub seminorms: Vec<f64>,
    pub j_min: usize,
    pub semantics: &'static str,
    pub dictionary: DictionaryInfo,
    pub witness: Option<Witness>,
}

impl NormEstimate {
    pub fn seminorm(&self, j: usize) -> f64 {
        self.seminorms[j - self.j_min]
    }
}

pub const LOWER_BOUND: &str = "lower-bound";

/// Dictionary estimate of `‖h‖_{p,q}` (`q` is fixed by the templates).
pub fn estimate_norm(h: &LeafObservable, p: usize, dict: &Dictionary) -> Result<NormEstimate> {
    estimate_range(h, 0, p, dict)
}

/// Dictionary estimate of the seminorm `|h|_{j,q}`.
pub fn estimate_seminorm(h: &LeafObservable, j: usize, dict: &Dictionary) -> Result<NormEstimate> {
    estimate_range(h, j, j, dict)
}

pub fn estimate_range(h: &LeafObservable, j_min: usize, p: usize, dict: &Dictionary) -> Result<NormEstimate> {
    let words: Vec<LeafObservable> = (j_min..=p).map(|j| h.derive_v(j)).collect();
    let points = dict.base_points();
    let per_point: Vec<Vec<(f64, usize)>> = points
        .par_iter()
        .map(|m| {
            words
                .iter()
                .map(|obs| {
                    let values = dict.functionals(obs, m)?;
                    Ok(argmax(values.iter().map(|v| v.norm())))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seminorms = vec![0.0; words.len()];
    let mut best = 0.0;
    let mut witness = None;
    for (pi, row) in per_point.iter().enumerate() {
        for (ji, &(v, ti)) in row.iter().enumerate() {
            if v > seminorms[ji] {
                seminorms[ji] = v;
            }
            if v > best {
                best = v;
                let m = &points[pi];
                witness = Some(Witness {
                    point: [m.x, m.y, m.z],
                    template: ti,
                    j: j_min + ji,
                });
            }
        }
    }
    Ok(NormEstimate {
        value: best,
        seminorms,
        j_min,
        semantics: LOWER_BOUND,
        dictionary: dict.info(),
        witness,
    })
}

fn argmax(values: impl Iterator<Item = f64>) -> (f64, usize) {
    values
        .enumerate()
        .fold((0.0, 0), |(bv, bi), (i, v)| if v > bv { (v, i) } else { (bv, bi) })
}
