//! Variable Lebesgue (Luxemburg) norms, Fourier-Besov norms with constant
//! and variable exponents, and Chemin-Lerner time-space norms.
//!
//! Physical-side integrals use the cell volume (2π/n)^dims. Frequency-side
//! sums use unit weight per lattice point: the lattice ℤ^dims has spacing 1,
//! so this is the counting measure the continuum formulas restrict to.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{ExponentField, Regularity};
use crate::littlewood_paley::DyadicPartition;
use crate::parallel;
use crate::spectral::{PhysicalField, SpectralField};
use crate::timeseries::TimeSeriesField;

/// An integrability index: constant (possibly ∞) or a sampled field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Integrability {
    Constant(f64),
    Variable(ExponentField),
}

impl Integrability {
    pub fn at(&self, index: usize) -> f64 {
        match self {
            Integrability::Constant(p) => *p,
            Integrability::Variable(f) => f.value(index),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Integrability::Constant(p) => Some(*p),
            Integrability::Variable(f) if f.is_constant() => Some(f.p_minus()),
            Integrability::Variable(_) => None,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Integrability::Constant(p) => (*p, *p),
            Integrability::Variable(f) => (f.p_minus(), f.p_plus()),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Integrability::Constant(p) if p.is_infinite())
    }

    pub fn describe(&self) -> String {
        match self {
            Integrability::Constant(p) if p.is_infinite() => "constant(inf)".into(),
            Integrability::Constant(p) => format!("constant({p})"),
            Integrability::Variable(f) => f.describe(),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, _) = self.bounds();
        if lo.is_nan() || lo < 1.0 {
            return Err(Error::ExponentTooSmall(lo));
        }
        Ok(())
    }
}

impl From<f64> for Integrability {
    fn from(p: f64) -> Self {
        Integrability::Constant(p)
    }
}

impl From<ExponentField> for Integrability {
    fn from(p: ExponentField) -> Self {
        Integrability::Variable(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormMeta {
    pub exponents: Vec<String>,
    pub j_range: Option<(i32, i32)>,
    pub time_grid: Option<String>,
    pub measure: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormValue {
    pub value: f64,
    pub method: Method,
    pub tolerance: f64,
    pub metadata: NormMeta,
}

pub const PHYSICAL_MEASURE: &str = "physical cells of volume (2pi/n)^dims";
pub const FREQUENCY_MEASURE: &str = "unit weight per frequency lattice point";

/// Relative accuracy promised for root-found norms.
pub const LUXEMBURG_TOL: f64 = 1e-12;

/// log Σ exp(x) without overflow.
fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Luxemburg norm inf{λ > 0 : Σ w (aᵢ/λ)^{pᵢ} ≤ 1} from log-magnitudes.
///
/// Works with G(μ) = log Σ w exp(pᵢ(log aᵢ - μ)), convex and decreasing in
/// μ = log λ. The root is bracketed from the p⁻/p⁺ bounds and found by
/// Newton from the left end, which converges monotonically for convex
/// decreasing G; bisection steps guard against stalls.
fn luxemburg_log(terms: &[(f64, f64)], log_w: f64) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    let g = |mu: f64| log_sum_exp(terms.iter().map(|&(la, p)| log_w + p * (la - mu)));
    let (pmin, pmax) = terms
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, p)| {
            (lo.min(p), hi.max(p))
        });
    let l0 = g(0.0);
    if pmin == pmax {
        return (l0 / pmin).exp();
    }
    let (mut lo, mut hi) = if l0 >= 0.0 {
        (l0 / pmax, l0 / pmin)
    } else {
        (l0 / pmin, l0 / pmax)
    };
    let mut mu = lo;
    for _ in 0..200 {
        let m = terms
            .iter()
            .map(|&(la, p)| log_w + p * (la - mu))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        let mut sp = 0.0;
        for &(la, p) in terms {
            let e = (log_w + p * (la - mu) - m).exp();
            s += e;
            sp += p * e;
        }
        let val = m + s.ln();
        if val > 0.0 {
            lo = mu;
        } else if val < 0.0 {
            hi = mu;
        } else {
            break;
        }
        let slope = -sp / s;
        let mut next = mu - val / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - mu).abs() <= 1e-16 * mu.abs().max(1.0) || hi - lo <= 1e-16 * mu.abs().max(1.0) {
            mu = next;
            break;
        }
        mu = next;
    }
    mu.exp()
}

/// Luxemburg norm of magnitudes `mags` with exponents `exps` and uniform
/// cell weight `w`. Infinite exponents are not allowed here.
pub fn luxemburg(mags: &[f64], exps: &[f64], w: f64) -> f64 {
    let terms: Vec<(f64, f64)> = mags
        .iter()
        .zip(exps)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, p)| (a.ln(), *p))
        .collect();
    luxemburg_log(&terms, w.ln())
}

/// Σ w aᵢ^{pᵢ}.
pub fn modular_of(mags: &[f64], exps: &[f64], w: f64) -> f64 {
    mags.iter().zip(exps).map(|(a, p)| w * a.powf(*p)).sum()
}

fn physical_magnitudes(f: &PhysicalField) -> Vec<f64> {
    (0..f.grid().len()).map(|i| f.magnitude(i)).collect()
}

/// Σ_x |f(x)|^{p(x)} · cell volume.
pub fn modular(f: &PhysicalField, p: &ExponentField) -> Result<f64> {
    if f.grid() != p.grid() {
        return Err(Error::GridMismatch("field and exponent grids differ".into()));
    }
    Ok(modular_of(&physical_magnitudes(f), p.values(), f.grid().cell_volume()))
}

/// ‖f‖_{L^{p(·)}} on the physical grid.
pub fn variable_lebesgue_norm(f: &PhysicalField, p: &Integrability) -> Result<NormValue> {
    p.validate()?;
    if let Integrability::Variable(e) = p {
        if e.grid() != f.grid() {
            return Err(Error::GridMismatch("field and exponent grids differ".into()));
        }
    }
    let mags = physical_magnitudes(f);
    let meta = NormMeta {
        exponents: vec![format!("p = {}", p.describe())],
        j_range: None,
        time_grid: None,
        measure: PHYSICAL_MEASURE,
    };
    let w = f.grid().cell_volume();
    let (value, method, tolerance) = match p.constant() {
        Some(q) if q.is_infinite() => (mags.iter().cloned().fold(0.0, f64::max), Method::ClosedForm, 0.0),
        Some(q) => (luxemburg(&mags, &vec![q; mags.len()], w), Method::ClosedForm, 1e-14),
        None => {
            let exps: Vec<f64> = (0..mags.len()).map(|i| p.at(i)).collect();
            (luxemburg(&mags, &exps, w), Method::Bisection, LUXEMBURG_TOL)
        }
    };
    Ok(NormValue {
        value,
        method,
        tolerance,
        metadata: meta,
    })
}

/// Two sides of an inequality lhs ≤ C · rhs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
}

impl Comparison {
    /// lhs / rhs, with 0/0 read as 0 and x/0 as None.
    pub fn ratio(&self) -> Option<f64> {
        if self.rhs > 0.0 {
            Some(self.lhs / self.rhs)
        } else if self.lhs == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// ‖fg‖_{p(·)} against ‖f‖_{p₁(·)}‖g‖_{p₂(·)} with 1/p = 1/p₁ + 1/p₂.
pub fn holder_check(
    f: &PhysicalField,
    g: &PhysicalField,
    p1: &ExponentField,
    p2: &ExponentField,
) -> Result<Comparison> {
    let p = crate::exponents::holder_conjugate(p1, p2)?;
    if f.components() != 1 || g.components() != 1 {
        return Err(Error::ComponentMismatch {
            expected: 1,
            found: f.components().max(g.components()),
        });
    }
    let fg = f.pointwise(g)?;
    let lhs = variable_lebesgue_norm(&fg, &Integrability::Variable(p))?.value;
    let rhs = variable_lebesgue_norm(f, &Integrability::Variable(p1.clone()))?.value
        * variable_lebesgue_norm(g, &Integrability::Variable(p2.clone()))?.value;
    Ok(Comparison { lhs, rhs })
}

/// Frequency-side L^{p(·)} norm of 2^{js(ξ)} φⱼ(ξ) f̂(ξ).
pub fn block_lp(f: &SpectralField, j: i32, s: &Regularity, p: &Integrability, part: &DyadicPartition) -> Result<f64> {
    let table = part.block_table(j)?;
    let two_j = 2f64.powi(j);
    let mags: Vec<f64> = table
        .iter()
        .map(|&(i, w)| {
            let weight = match s {
                Regularity::Constant(sv) => two_j.powf(*sv),
                _ => two_j.powf(s.at(i)),
            };
            weight * w * f.magnitude(i)
        })
        .collect();
    Ok(lp_of(&mags, table.iter().map(|&(i, _)| p.at(i)), 1.0))
}

fn lp_of(mags: &[f64], exps: impl Iterator<Item = f64>, w: f64) -> f64 {
    let exps: Vec<f64> = exps.collect();
    if exps.iter().any(|p| p.is_infinite()) {
        return mags.iter().cloned().fold(0.0, f64::max);
    }
    luxemburg(mags, &exps, w)
}

/// ℓ^r combination of nonnegative block values.
pub fn ell_r(values: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        values.iter().cloned().fold(0.0, f64::max)
    } else if r == 1.0 {
        values.iter().sum()
    } else {
        values.iter().map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Per-block values 2^{js}‖φⱼ f̂‖ for every covered j.
pub fn block_norms(
    f: &SpectralField,
    s: &Regularity,
    p: &Integrability,
    part: &DyadicPartition,
) -> Result<Vec<(i32, f64)>> {
    p.validate()?;
    let js: Vec<i32> = part.range().collect();
    let vals = parallel::map_slice(&js, |&j| block_lp(f, j, s, p, part));
    js.into_iter().zip(vals).map(|(j, v)| v.map(|v| (j, v))).collect()
}

fn besov_meta(s: String, p: String, r: String, part: &DyadicPartition) -> NormMeta {
    NormMeta {
        exponents: vec![format!("s = {s}"), format!("p = {p}"), format!("r = {r}")],
        j_range: Some((part.j_min, part.j_max)),
        time_grid: None,
        measure: FREQUENCY_MEASURE,
    }
}

/// ‖f‖_{FḂ^s_{p,r}} over the covered dyadic range.
pub fn fourier_besov_norm(f: &SpectralField, s: f64, p: f64, r: f64, part: &DyadicPartition) -> Result<NormValue> {
    if r < 1.0 || r.is_nan() {
        return Err(Error::ExponentTooSmall(r));
    }
    let blocks = block_norms(f, &Regularity::Constant(s), &Integrability::Constant(p), part)?;
    let vals: Vec<f64> = blocks.iter().map(|b| b.1).collect();
    Ok(NormValue {
        value: ell_r(&vals, r),
        method: Method::ClosedForm,
        tolerance: 1e-14,
        metadata: besov_meta(s.to_string(), p.to_string(), r.to_string(), part),
    })
}

/// ‖f‖_{FḂ^{s(·)}_{p(·),r(·)}}. A constant r takes the direct ℓ^r path; a
/// variable r goes through the mixed modular.
pub fn variable_fourier_besov_norm(
    f: &SpectralField,
    s: &Regularity,
    p: &Integrability,
    r: &Integrability,
    part: &DyadicPartition,
) -> Result<NormValue> {
    r.validate()?;
    let meta = besov_meta(s.describe(), p.describe(), r.describe(), part);
    match r {
        Integrability::Constant(rv) => {
            let blocks = block_norms(f, s, p, part)?;
            let vals: Vec<f64> = blocks.iter().map(|b| b.1).collect();
            let exact = p.constant().is_some();
            Ok(NormValue {
                value: ell_r(&vals, *rv),
                method: if exact { Method::ClosedForm } else { Method::Bisection },
                tolerance: if exact { 1e-14 } else { LUXEMBURG_TOL },
                metadata: meta,
            })
        }
        Integrability::Variable(rf) => Ok(NormValue {
            value: mixed_modular_besov(f, s, p, rf, part)?,
            method: Method::Bisection,
            tolerance: 1e-10,
            metadata: meta,
        }),
    }
}

/// One block prepared for the mixed modular: (log a, p, r) per lattice point.
type ModularBlock = Vec<(f64, f64, f64)>;

/// Mixed-modular norm with an explicit exponent field r(·).
pub fn mixed_modular_besov(
    f: &SpectralField,
    s: &Regularity,
    p: &Integrability,
    r: &ExponentField,
    part: &DyadicPartition,
) -> Result<f64> {
    if p.is_infinite() {
        return Err(Error::Unsupported("the mixed modular needs finite p".into()));
    }
    p.validate()?;
    let mut blocks: Vec<ModularBlock> = Vec::new();
    for j in part.range() {
        let table = part.block_table(j)?;
        let two_j = 2f64.powi(j);
        let b: ModularBlock = table
            .iter()
            .filter_map(|&(i, w)| {
                let a = two_j.powf(s.at(i)) * w * f.magnitude(i);
                (a > 0.0).then(|| (a.ln(), p.at(i), r.value(i)))
            })
            .collect();
        if !b.is_empty() {
            blocks.push(b);
        }
    }
    Ok(mixed_modular_norm(&blocks, r.p_minus(), r.p_plus()))
}

/// λⱼ(μ) = inf{λ : Σ (a/μ)^p λ^{-p/r} ≤ 1}, from the Luxemburg solver with
/// magnitudes (a/μ)^r and exponents p/r.
fn inner_lambda(block: &ModularBlock, log_mu: f64) -> f64 {
    let terms: Vec<(f64, f64)> = block.iter().map(|&(la, p, r)| (r * (la - log_mu), p / r)).collect();
    luxemburg_log(&terms, 0.0)
}

/// Outer root of Σⱼ λⱼ(μ) = 1 in ν = log μ by the Illinois variant of
/// regula falsi on h(ν) = log Σⱼ λⱼ(e^ν). The bracket comes from
/// μ^{-r⁺} ≤ λⱼ(μ)/λⱼ(1) ≤ μ^{-r⁻} for μ ≥ 1 (reversed below 1).
fn mixed_modular_norm(blocks: &[ModularBlock], r_minus: f64, r_plus: f64) -> f64 {
    if blocks.is_empty() {
        return 0.0;
    }
    let h = |nu: f64| -> f64 {
        let lams = parallel::map_slice(blocks, |b| inner_lambda(b, nu));
        lams.iter().sum::<f64>().ln()
    };
    let h0 = h(0.0);
    if h0 == 0.0 {
        return 1.0;
    }
    let (mut a, mut b) = if h0 > 0.0 {
        (h0 / r_plus, h0 / r_minus)
    } else {
        (h0 / r_minus, h0 / r_plus)
    };
    let mut fa = h(a);
    let mut fb = h(b);
    if fa == 0.0 {
        return a.exp();
    }
    if fb == 0.0 {
        return b.exp();
    }
    let mut side = 0i32;
    let mut c = a;
    for _ in 0..200 {
        c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = h(c);
        if fc == 0.0 || (b - a).abs() <= 1e-15 * c.abs().max(1.0) {
            break;
        }
        if (fc > 0.0) == (fa > 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
    }
    c.exp()
}

/// ‖u‖_{𝓛^ρ_T(FḂ^{s(·)}_{p(·),r})}: time-L^ρ of each block norm, then ℓ^r.
pub fn chemin_lerner_norm(
    u: &TimeSeriesField,
    rho: f64,
    s: &Regularity,
    p: &Integrability,
    r: f64,
    part: &DyadicPartition,
) -> Result<NormValue> {
    if rho < 1.0 || rho.is_nan() {
        return Err(Error::ExponentTooSmall(rho));
    }
    let per_node = chemin_lerner_blocks(u, s, p, part)?;
    let per_j = time_combine(&per_node, u, rho);
    let exact = p.constant().is_some();
    Ok(NormValue {
        value: ell_r(&per_j, r),
        method: Method::Quadrature,
        tolerance: if exact { 1e-14 } else { LUXEMBURG_TOL },
        metadata: NormMeta {
            exponents: vec![
                format!("rho = {rho}"),
                format!("s = {}", s.describe()),
                format!("p = {}", p.describe()),
                format!("r = {r}"),
            ],
            j_range: Some((part.j_min, part.j_max)),
            time_grid: Some(format!("{} ({:?})", u.times.describe(), u.quadrature)),
            measure: FREQUENCY_MEASURE,
        },
    })
}

/// Block norms at every node: result[k][j - j_min].
pub fn chemin_lerner_blocks(
    u: &TimeSeriesField,
    s: &Regularity,
    p: &Integrability,
    part: &DyadicPartition,
) -> Result<Vec<Vec<f64>>> {
    p.validate()?;
    let rows = parallel::map_slice(&u.snapshots, |snap| {
        part.range()
            .map(|j| block_lp(snap, j, s, p, part))
            .collect::<Result<Vec<f64>>>()
    });
    rows.into_iter().collect()
}

/// Time-L^ρ of each column of `per_node` with the series' quadrature.
pub fn time_combine(per_node: &[Vec<f64>], u: &TimeSeriesField, rho: f64) -> Vec<f64> {
    let shells = per_node[0].len();
    let w = u.times.weights(u.quadrature);
    (0..shells)
        .map(|j| {
            if rho.is_infinite() {
                per_node.iter().map(|row| row[j]).fold(0.0, f64::max)
            } else {
                let integral: f64 = per_node.iter().zip(&w).map(|(row, wk)| wk * row[j].powf(rho)).sum();
                integral.powf(1.0 / rho)
            }
        })
        .collect()
}

/// Besov norm from raw (radius, magnitude) samples with cell measure
/// `cell`, summing every j whose annulus meets the samples. Used where the
/// lattice itself is rescaled.
pub fn sample_besov_norm(samples: &[(f64, f64)], cell: f64, s: f64, p: f64, r: f64, part: &DyadicPartition) -> f64 {
    let live: Vec<&(f64, f64)> = samples.iter().filter(|(rad, a)| *rad > 0.0 && *a > 0.0).collect();
    if live.is_empty() {
        return 0.0;
    }
    let rmin = live.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let rmax = live.iter().map(|x| x.0).fold(0.0, f64::max);
    let j_lo = (rmin / crate::littlewood_paley::PHI_OUTER).log2().floor() as i32 - 1;
    let j_hi = (rmax / crate::littlewood_paley::PHI_INNER).log2().ceil() as i32 + 1;
    let mut blocks = Vec::new();
    for j in j_lo..=j_hi {
        let scale = 2f64.powi(-j);
        let mags: Vec<f64> = live
            .iter()
            .map(|(rad, a)| part.phi(rad * scale) * a)
            .filter(|m| *m > 0.0)
            .collect();
        if mags.is_empty() {
            continue;
        }
        let lp = if p.is_infinite() {
            mags.iter().cloned().fold(0.0, f64::max)
        } else {
            (mags.iter().map(|m| m.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
        };
        blocks.push(2f64.powi(j).powf(s) * lp);
    }
    ell_r(&blocks, r)
}
