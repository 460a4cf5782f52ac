//! Randomized checks of the harmonic-analysis inequalities.
//!
//! Each check is an inequality lhs ≤ C·rhs with an unknown universal C.
//! The protocol runs calibration trials to fix C (the largest ratio seen),
//! then fresh holdout trials that must stay below `safety_factor · C`.
//! Trial `i` draws its fields from seed `base ^ i`, so reports do not depend
//! on how the trials are scheduled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{make_smooth_exponent, ExponentField, Profile, Regularity};
use crate::heat::{verify_heat_estimate, HeatIndices};
use crate::littlewood_paley::DyadicPartition;
use crate::norms::{fourier_besov_norm, holder_check, Comparison, Integrability};
use crate::parallel;
use crate::random::{random_field, trial_seed, Spectrum, Support};
use crate::spectral::{grid_product, inverse_transform, GridSpec, Multiplier, SpectralField};
use crate::timeseries::{TimeGrid, TimeSeriesField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateId {
    #[serde(rename = "bernstein-i")]
    BernsteinBall,
    #[serde(rename = "bernstein-ii")]
    BernsteinAnnulus,
    #[serde(rename = "bernstein-iii")]
    BernsteinSymbol,
    #[serde(rename = "embedding")]
    Embedding,
    #[serde(rename = "product-2.9")]
    ProductSameScale,
    #[serde(rename = "product-2.10")]
    ProductShifted,
    #[serde(rename = "holder")]
    Holder,
    #[serde(rename = "heat-3.2")]
    Heat,
}

impl EstimateId {
    pub const ALL: [EstimateId; 8] = [
        EstimateId::BernsteinBall,
        EstimateId::BernsteinAnnulus,
        EstimateId::BernsteinSymbol,
        EstimateId::Embedding,
        EstimateId::ProductSameScale,
        EstimateId::ProductShifted,
        EstimateId::Holder,
        EstimateId::Heat,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateId::BernsteinBall => "bernstein-i",
            EstimateId::BernsteinAnnulus => "bernstein-ii",
            EstimateId::BernsteinSymbol => "bernstein-iii",
            EstimateId::Embedding => "embedding",
            EstimateId::ProductSameScale => "product-2.9",
            EstimateId::ProductShifted => "product-2.10",
            EstimateId::Holder => "holder",
            EstimateId::Heat => "heat-3.2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }
}

impl std::fmt::Display for EstimateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Protocol {
    pub base_seed: u64,
    pub calibration: usize,
    pub holdout: usize,
    pub safety_factor: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            base_seed: 0x00f1_b1ab,
            calibration: 50,
            holdout: 50,
            safety_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Calibration,
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub phase: Phase,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// An extra fixed-constant bound attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub observed: f64,
    pub limit: f64,
    pub passes: bool,
}

impl BoundCheck {
    pub fn at_most(name: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            limit,
            passes: observed <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            limit,
            passes: observed >= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate_id: EstimateId,
    pub parameters: Vec<(String, String)>,
    pub protocol: Protocol,
    pub trials: Vec<TrialRecord>,
    /// Indices of trials with rhs = 0 < lhs.
    pub discarded: Vec<usize>,
    pub fitted_constant: f64,
    pub holdout_max: f64,
    pub bounds: Vec<BoundCheck>,
    pub warnings: Vec<String>,
    pub passes: bool,
}

impl EstimateReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.ratio).collect()
    }

    pub fn protocol_passes(&self) -> bool {
        self.holdout_max <= self.protocol.safety_factor * self.fitted_constant
    }

    fn push_bound(&mut self, b: BoundCheck) {
        self.passes &= b.passes;
        self.bounds.push(b);
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: fitted C = {:.6e}, holdout max = {:.6e}, {} trials, {} discarded, {}",
            self.estimate_id,
            self.fitted_constant,
            self.holdout_max,
            self.trials.len(),
            self.discarded.len(),
            if self.passes { "pass" } else { "FAIL" }
        )
    }
}

/// Run `trial(index, seed)` over calibration and holdout trials.
pub fn run_protocol<F>(
    id: EstimateId,
    parameters: Vec<(String, String)>,
    protocol: Protocol,
    trial: F,
) -> Result<EstimateReport>
where
    F: Fn(usize, u64) -> Result<Comparison> + Sync + Send,
{
    let total = protocol.calibration + protocol.holdout;
    let results = parallel::map_range(total, |i| {
        let seed = trial_seed(protocol.base_seed, i as u64);
        trial(i, seed).map(|c| (seed, c))
    });
    let mut trials = Vec::with_capacity(total);
    let mut discarded = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (seed, c) = r?;
        let phase = if i < protocol.calibration {
            Phase::Calibration
        } else {
            Phase::Holdout
        };
        match c.ratio() {
            Some(ratio) if ratio.is_finite() => trials.push(TrialRecord {
                index: i,
                seed,
                phase,
                lhs: c.lhs,
                rhs: c.rhs,
                ratio,
            }),
            _ => discarded.push(i),
        }
    }
    let max_of = |p: Phase| {
        trials
            .iter()
            .filter(|t| t.phase == p)
            .map(|t| t.ratio)
            .fold(0.0, f64::max)
    };
    let fitted_constant = max_of(Phase::Calibration);
    let holdout_max = max_of(Phase::Holdout);
    let mut warnings = Vec::new();
    if !discarded.is_empty() {
        warnings.push(format!(
            "{} trial(s) discarded for a zero right-hand side: {:?}",
            discarded.len(),
            discarded
        ));
    }
    Ok(EstimateReport {
        estimate_id: id,
        parameters,
        protocol,
        trials,
        discarded,
        fitted_constant,
        holdout_max,
        bounds: Vec::new(),
        warnings,
        passes: holdout_max <= protocol.safety_factor * fitted_constant,
    })
}

/// Spectra rotated through by trial index.
pub fn trial_spectrum(index: usize) -> Spectrum {
    match index % 3 {
        0 => Spectrum::Flat,
        1 => Spectrum::PowerLaw(-1.5),
        _ => Spectrum::PowerLaw(1.0),
    }
}

fn param(name: &str, v: impl std::fmt::Display) -> (String, String) {
    (name.to_string(), v.to_string())
}

/// Unit-weight lattice L^p norm of a coefficient vector.
pub fn lattice_lp(mags: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        mags.iter().cloned().fold(0.0, f64::max)
    } else {
        let m = mags.iter().cloned().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * mags.iter().map(|a| (a / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn magnitudes(f: &SpectralField) -> Vec<f64> {
    (0..f.grid().len()).map(|i| f.magnitude(i)).collect()
}

/// All multi-indices α with |α| = k in `dims` variables.
pub fn multi_indices(k: u32, dims: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    let top = |d: usize| if d < dims { k } else { 0 };
    for a in 0..=top(0) {
        for b in 0..=top(1).min(k - a) {
            let c = k - a - b;
            if c > 0 && dims < 3 {
                continue;
            }
            out.push([a, b, c]);
        }
    }
    out
}

/// sup over |α| = k of ‖ξ^α f̂‖_{L^q}.
pub fn derivative_sup(f: &SpectralField, k: u32, q: f64) -> f64 {
    let grid = f.grid();
    let lattice = grid.lattice();
    multi_indices(k, grid.dims)
        .into_iter()
        .map(|alpha| {
            let mags: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let xi = lattice.freqs[i];
                    let w: f64 = (0..3).map(|d| (xi[d] as f64).abs().powi(alpha[d] as i32)).product();
                    w * f.magnitude(i)
                })
                .collect();
            lattice_lp(&mags, q)
        })
        .fold(0.0, f64::max)
}

/// Ball 𝓑 = B(0, 4/3) and ring 𝓒 = {3/4 ≤ |ξ| ≤ 8/3}.
pub const BALL_RADIUS: f64 = 4.0 / 3.0;
pub const RING: (f64, f64) = (3.0 / 4.0, 8.0 / 3.0);
/// The fixed two-sided constant for the annulus check: 8/3 plus 5%.
pub const ANNULUS_CONSTANT: f64 = 8.0 / 3.0 * 1.05;

fn check_band(grid: GridSpec, outer: f64) -> Result<()> {
    let limit = grid.n as f64 / 2.0 - 1.0;
    if outer > limit {
        return Err(Error::BandOverflow(format!(
            "support radius {outer} exceeds {limit} on an n = {} grid",
            grid.n
        )));
    }
    Ok(())
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(q >= 1.0 && p >= q) {
        return Err(Error::Hypothesis(format!("need 1 <= q <= p (got p = {p}, q = {q})")));
    }
    Ok(())
}

/// Which Bernstein inequality to check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BernsteinItem {
    /// Ball support, sup_α ‖ξ^α û‖_q ≤ C^{k+1} λ^{k+n(1/q-1/p)} ‖û‖_p.
    Ball,
    /// Ring support, two-sided λ^k comparison in one L^p.
    Annulus,
    /// Ring support, homogeneous symbol of degree m.
    Symbol(Multiplier),
}

fn symbol_degree(m: Multiplier) -> Result<f64> {
    Ok(match m {
        Multiplier::Derivative(a) => (a[0] + a[1] + a[2]) as f64,
        Multiplier::Riesz(_) => 0.0,
        Multiplier::InverseLaplacian => -2.0,
        Multiplier::Laplacian => 2.0,
        Multiplier::FractionalLaplacian(s) => s,
        Multiplier::Heat(_) => return Err(Error::Unsupported("the heat symbol is not homogeneous".into())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinParams {
    pub item: BernsteinItem,
    pub k: u32,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
}

/// Bernstein inequalities on lattice-supported random fields.
pub fn verify_bernstein(grid: GridSpec, bp: BernsteinParams, protocol: Protocol) -> Result<EstimateReport> {
    check_pq(bp.p, bp.q)?;
    let BernsteinParams { item, k, p, q, lambda } = bp;
    let n = grid.dims as f64;
    let outer = match item {
        BernsteinItem::Ball => lambda * BALL_RADIUS,
        _ => lambda * RING.1,
    };
    check_band(grid, outer)?;
    let support = match item {
        BernsteinItem::Ball => Support::ball(outer),
        _ => Support::new(lambda * RING.0, outer),
    };
    let mut params = vec![
        param("k", k),
        param("p", p),
        param("q", q),
        param("lambda", lambda),
        param("n", grid.n),
    ];
    let (id, exponent) = match item {
        BernsteinItem::Ball => (EstimateId::BernsteinBall, k as f64 + n * (1.0 / q - 1.0 / p)),
        BernsteinItem::Annulus => (EstimateId::BernsteinAnnulus, k as f64),
        BernsteinItem::Symbol(m) => {
            params.push(param("symbol", format!("{m:?}")));
            (EstimateId::BernsteinSymbol, symbol_degree(m)? + n * (1.0 / q - 1.0 / p))
        }
    };
    let scale = lambda.powf(exponent);
    let field = |i: usize, seed: u64| random_field(grid, 1, support, trial_spectrum(i), seed);
    let sides = |f: &SpectralField| -> Result<(f64, f64)> {
        let rhs_norm = lattice_lp(&magnitudes(f), p);
        let lhs = match item {
            BernsteinItem::Ball => derivative_sup(f, k, q),
            BernsteinItem::Annulus => derivative_sup(f, k, p),
            BernsteinItem::Symbol(m) => {
                let g = crate::spectral::apply_multiplier(f, m, crate::spectral::MeanPolicy::Reject)?;
                lattice_lp(&magnitudes(&g), q)
            }
        };
        Ok((lhs, scale * rhs_norm))
    };
    let mut report = run_protocol(id, params, protocol, |i, seed| {
        let (lhs, rhs) = sides(&field(i, seed))?;
        Ok(Comparison { lhs, rhs })
    })?;

    match item {
        BernsteinItem::Annulus => {
            let upper = ANNULUS_CONSTANT.powi(k as i32 + 1);
            let lower = ANNULUS_CONSTANT.powi(-(k as i32) - 1);
            let max = report.ratios().into_iter().fold(0.0, f64::max);
            let min = report.ratios().into_iter().fold(f64::INFINITY, f64::min);
            report.push_bound(BoundCheck::at_most("upper: ratio <= C^(k+1)", max, upper));
            report.push_bound(BoundCheck::at_least("lower: ratio >= C^-(k+1)", min, lower));
        }
        BernsteinItem::Ball => {
            // Also record the reversed ordering, p and q swapped.
            let rev_exp = k as f64 + n * (1.0 / p - 1.0 / q);
            let rev: Vec<f64> = parallel::map_range(protocol.calibration + protocol.holdout, |i| {
                let f = field(i, trial_seed(protocol.base_seed, i as u64));
                let den = lambda.powf(rev_exp) * lattice_lp(&magnitudes(&f), q);
                if den > 0.0 {
                    derivative_sup(&f, k, p) / den
                } else {
                    0.0
                }
            });
            let worst = rev.into_iter().fold(0.0, f64::max);
            report.warnings.push(format!(
                "reversed ordering (q and p swapped): max ratio {worst:.6e}, recorded only"
            ));
        }
        BernsteinItem::Symbol(_) => {}
    }
    Ok(report)
}

/// Embedding and derivative/interpolation properties of the norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingParams {
    pub s: f64,
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
    pub r2: f64,
}

/// ‖u‖_{FḂ^{s-n(1/p₁-1/p₂)}_{p₁,r₁}} against ‖u‖_{FḂ^s_{p₂,r₂}}.
pub fn embedding_sides(u: &SpectralField, e: &EmbeddingParams, part: &DyadicPartition) -> Result<Comparison> {
    let n = u.grid().dims as f64;
    let shift = n * (1.0 / e.p1 - 1.0 / e.p2);
    Ok(Comparison {
        lhs: fourier_besov_norm(u, e.s - shift, e.p1, e.r1, part)?.value,
        rhs: fourier_besov_norm(u, e.s, e.p2, e.r2, part)?.value,
    })
}

pub fn verify_embedding(part: &DyadicPartition, e: EmbeddingParams, protocol: Protocol) -> Result<EstimateReport> {
    if !(1.0 <= e.p1 && e.p1 <= e.p2) || !(1.0 <= e.r1 && e.r1 <= e.r2) {
        return Err(Error::Hypothesis(format!(
            "need 1 <= p1 <= p2 and 1 <= r1 <= r2 (got p = ({}, {}), r = ({}, {}))",
            e.p1, e.p2, e.r1, e.r2
        )));
    }
    let (lo, hi) = part.covered_band();
    let params = vec![
        param("s", e.s),
        param("p1", e.p1),
        param("p2", e.p2),
        param("r1", e.r1),
        param("r2", e.r2),
        param("n", part.grid.n),
    ];
    run_protocol(EstimateId::Embedding, params, protocol, |i, seed| {
        let u = random_field(part.grid, 1, Support::new(lo, hi), trial_spectrum(i), seed);
        embedding_sides(&u, &e, part)
    })
}

/// ‖∇u‖_{FḂ^{s-1}_{p,r}} / ‖u‖_{FḂ^s_{p,r}} for one field.
pub fn gradient_ratio(u: &SpectralField, s: f64, p: f64, r: f64, part: &DyadicPartition) -> Result<f64> {
    let grad = crate::spectral::gradient(u)?;
    let num = fourier_besov_norm(&grad, s - 1.0, p, r, part)?.value;
    let den = fourier_besov_norm(u, s, p, r, part)?.value;
    Ok(num / den)
}

/// ‖u‖_{s₁θ+s₂(1-θ)} against ‖u‖_{s₁}^θ ‖u‖_{s₂}^{1-θ}.
pub fn interpolation_sides(
    u: &SpectralField,
    s1: f64,
    s2: f64,
    theta: f64,
    p: f64,
    r: f64,
    part: &DyadicPartition,
) -> Result<Comparison> {
    if !(s1 < s2) || !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Hypothesis(format!(
            "need s1 < s2 and 0 < theta < 1 (got s1 = {s1}, s2 = {s2}, theta = {theta})"
        )));
    }
    let mid = fourier_besov_norm(u, s1 * theta + s2 * (1.0 - theta), p, r, part)?.value;
    let a = fourier_besov_norm(u, s1, p, r, part)?.value;
    let b = fourier_besov_norm(u, s2, p, r, part)?.value;
    Ok(Comparison {
        lhs: mid,
        rhs: a.powf(theta) * b.powf(1.0 - theta),
    })
}

/// Largest radius whose pairwise sums stay inside the lattice: products of
/// fields supported below it are alias free on the grid.
pub fn product_safe_radius(grid: GridSpec) -> f64 {
    grid.n as f64 / 4.0 - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductParams {
    pub s: f64,
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
}

impl ProductParams {
    /// s = 5/2, p = 6, p₁ = 2, p₂ = 3/2.
    pub const NAVIER_STOKES: Self = Self {
        s: 2.5,
        p: 6.0,
        p1: 2.0,
        p2: 1.5,
    };
}

/// Both sides of the same-scale product law for one pair.
pub fn product_sides(
    u: &SpectralField,
    v: &SpectralField,
    pp: &ProductParams,
    part: &DyadicPartition,
) -> Result<Comparison> {
    let uv = grid_product(u, v)?;
    let b = |f: &SpectralField, s: f64, p: f64| fourier_besov_norm(f, s, p, 1.0, part).map(|n| n.value);
    let lhs = b(&uv, pp.s, pp.p)?;
    let rhs = b(u, pp.s, pp.p1)? * b(v, 0.0, pp.p2)? + b(u, 0.0, pp.p2)? * b(v, pp.s, pp.p1)?;
    Ok(Comparison { lhs, rhs })
}

fn random_pair(grid: GridSpec, i: usize, seed: u64) -> (SpectralField, SpectralField) {
    let support = Support::new(1.0, product_safe_radius(grid));
    let u = random_field(grid, 1, support, trial_spectrum(i), seed);
    let v = random_field(
        grid,
        1,
        support,
        trial_spectrum(i + 1),
        seed.rotate_left(32) ^ 0x9e37_79b9,
    );
    (u, v)
}

pub fn verify_product(part: &DyadicPartition, pp: ProductParams, protocol: Protocol) -> Result<EstimateReport> {
    if !(pp.s > 0.0) {
        return Err(Error::Hypothesis(format!("need s > 0 (got {})", pp.s)));
    }
    let rel = 1.0 + 1.0 / pp.p - 1.0 / pp.p1 - 1.0 / pp.p2;
    if rel.abs() > 1e-12 || pp.p.min(pp.p1).min(pp.p2) < 1.0 {
        return Err(Error::Hypothesis(format!(
            "need 1 + 1/p = 1/p1 + 1/p2 with all exponents >= 1 (p = {}, p1 = {}, p2 = {})",
            pp.p, pp.p1, pp.p2
        )));
    }
    let params = vec![
        param("s", pp.s),
        param("p", pp.p),
        param("p1", pp.p1),
        param("p2", pp.p2),
        param("n", part.grid.n),
    ];
    run_protocol(EstimateId::ProductSameScale, params, protocol, |i, seed| {
        let (u, v) = random_pair(part.grid, i, seed);
        product_sides(&u, &v, &pp, part)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedProductParams {
    pub s1: f64,
    pub s2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl ShiftedProductParams {
    pub const NAVIER_STOKES: Self = Self {
        s1: 2.5,
        s2: 0.5,
        p1: 2.0,
        p2: 2.0,
    };
    pub const KELLER_SEGEL: Self = Self {
        s1: 1.5,
        s2: 0.5,
        p1: 2.0,
        p2: 2.0,
    };

    pub fn target_regularity(&self, n: f64) -> f64 {
        self.s1 + self.s2 - n * (1.0 - 1.0 / self.p2)
    }
}

/// Margin applied to the strict sum condition.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Check the hypotheses of the shifted product law. The strict lower
/// condition on s₁ + s₂ is enforced; the upper bounds on s₁ and s₂ are
/// returned as warnings, since the instances used by both solvers break
/// the bound on s₁.
pub fn shifted_product_hypotheses(sp: &ShiftedProductParams, n: f64) -> Result<Vec<String>> {
    let floor = 0f64.max(n * (1.0 - 1.0 / sp.p1 - 1.0 / sp.p2));
    if !(sp.s1 + sp.s2 > floor + STRICT_MARGIN) {
        return Err(Error::Hypothesis(format!(
            "s1 + s2 > max{{0, n(1 - 1/p1 - 1/p2)}} fails: {} + {} <= {}",
            sp.s1, sp.s2, floor
        )));
    }
    let mut warnings = Vec::new();
    let cap1 = n * (1.0 - 1.0 / sp.p1).min(1.0 - 1.0 / sp.p2);
    if sp.s1 > cap1 {
        warnings.push(format!(
            "s1 <= n min{{1 - 1/p1, 1 - 1/p2}} fails: {} > {}; checked anyway",
            sp.s1, cap1
        ));
    }
    let cap2 = n * (1.0 - 1.0 / sp.p2);
    if sp.s2 > cap2 {
        warnings.push(format!("s2 <= n(1 - 1/p2) fails: {} > {}; checked anyway", sp.s2, cap2));
    }
    Ok(warnings)
}

pub fn shifted_product_sides(
    u: &SpectralField,
    v: &SpectralField,
    sp: &ShiftedProductParams,
    part: &DyadicPartition,
) -> Result<Comparison> {
    let n = u.grid().dims as f64;
    let uv = grid_product(u, v)?;
    let lhs = fourier_besov_norm(&uv, sp.target_regularity(n), sp.p1, 1.0, part)?.value;
    let rhs =
        fourier_besov_norm(u, sp.s1, sp.p1, 1.0, part)?.value * fourier_besov_norm(v, sp.s2, sp.p2, 1.0, part)?.value;
    Ok(Comparison { lhs, rhs })
}

pub fn verify_shifted_product(
    part: &DyadicPartition,
    sp: ShiftedProductParams,
    protocol: Protocol,
) -> Result<EstimateReport> {
    let warnings = shifted_product_hypotheses(&sp, part.grid.dims as f64)?;
    let params = vec![
        param("s1", sp.s1),
        param("s2", sp.s2),
        param("p1", sp.p1),
        param("p2", sp.p2),
        param("n", part.grid.n),
    ];
    let mut report = run_protocol(EstimateId::ProductShifted, params, protocol, |i, seed| {
        let (u, v) = random_pair(part.grid, i, seed);
        shifted_product_sides(&u, &v, &sp, part)
    })?;
    report.warnings.extend(warnings);
    Ok(report)
}

/// The pair of smooth exponent families used by the Hölder sweep.
pub fn holder_exponents(grid: GridSpec) -> Result<(ExponentField, ExponentField)> {
    Ok((
        make_smooth_exponent(3.0, 0.5, Profile::Trig, grid)?,
        make_smooth_exponent(4.0, 1.0, Profile::Bump, grid)?,
    ))
}

/// Hölder's inequality in variable Lebesgue spaces on random physical fields.
pub fn verify_holder(
    grid: GridSpec,
    p1: &ExponentField,
    p2: &ExponentField,
    protocol: Protocol,
) -> Result<EstimateReport> {
    let params = vec![
        param("p1", p1.describe()),
        param("p2", p2.describe()),
        param("n", grid.n),
    ];
    let support = Support::new(1.0, grid.n as f64 / 2.0 - 1.0);
    run_protocol(EstimateId::Holder, params, protocol, |i, seed| {
        let f = inverse_transform(&random_field(grid, 1, support, trial_spectrum(i), seed));
        let g = inverse_transform(&random_field(grid, 1, support, trial_spectrum(i + 2), !seed));
        holder_check(&f, &g, p1, p2)
    })
}

/// Heat sweep: random data, forcing f(t) = e^{-t} f₀.
pub fn verify_heat(
    part: &DyadicPartition,
    idx: &HeatIndices,
    times: &TimeGrid,
    with_forcing: bool,
    protocol: Protocol,
) -> Result<EstimateReport> {
    let grid = part.grid;
    let (lo, hi) = part.covered_band();
    let support = Support::new(lo, hi);
    let params = vec![
        param("s", idx.s.describe()),
        param("p", idx.p.describe()),
        param("r", idx.r),
        param("rho", idx.rho),
        param("rho1", idx.rho1),
        param("forcing", with_forcing),
        param("time_grid", times.describe()),
        param("n", grid.n),
    ];
    run_protocol(EstimateId::Heat, params, protocol, |i, seed| {
        let u0 = random_field(grid, 1, support, trial_spectrum(i), seed);
        let forcing = with_forcing.then(|| {
            let f0 = random_field(grid, 1, support, trial_spectrum(i + 1), !seed);
            let snaps = times.times().iter().map(|t| f0.scaled((-t).exp())).collect();
            TimeSeriesField::new(times.clone(), snaps, Default::default()).expect("shapes agree")
        });
        verify_heat_estimate(&u0, forcing.as_ref(), idx, times, part)
    })
}

/// Default heat indices for the sweep: s = 1/2, p = 2, r = 1, ρ = 1, ρ₁ = 2.
pub fn default_heat_indices() -> HeatIndices {
    HeatIndices {
        s: Regularity::Constant(0.5),
        p: Integrability::Constant(2.0),
        r: 1.0,
        rho: 1.0,
        rho1: 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::build_partition;
    use crate::random::mode_pair;
    use num_complex::Complex64;

    fn small() -> Protocol {
        Protocol {
            calibration: 6,
            holdout: 6,
            ..Protocol::default()
        }
    }

    #[test]
    fn ids_round_trip() {
        for id in EstimateId::ALL {
            assert_eq!(EstimateId::parse(id.as_str()), Some(id));
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.as_str()));
        }
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(0, 3).len(), 1);
        assert_eq!(multi_indices(1, 3).len(), 3);
        assert_eq!(multi_indices(2, 3).len(), 6);
        assert_eq!(multi_indices(2, 1), vec![[2, 0, 0]]);
    }

    #[test]
    fn zero_rhs_is_discarded() {
        let r = run_protocol(EstimateId::Holder, vec![], small(), |i, _| {
            Ok(if i == 3 {
                Comparison { lhs: 1.0, rhs: 0.0 }
            } else {
                Comparison { lhs: 0.0, rhs: 0.0 }
            })
        })
        .unwrap();
        assert_eq!(r.discarded, vec![3]);
        assert_eq!(r.trials.len(), 11);
        assert_eq!(r.fitted_constant, 0.0);
        assert!(r.passes);
    }

    #[test]
    fn ball_item_with_equal_exponents_is_at_most_one() {
        let grid = GridSpec::cube(16).unwrap();
        let bp = BernsteinParams {
            item: BernsteinItem::Ball,
            k: 0,
            p: 3.0,
            q: 3.0,
            lambda: 3.0,
        };
        let r = verify_bernstein(grid, bp, small()).unwrap();
        assert!(r.fitted_constant <= 1.0 + 1e-10 && r.holdout_max <= 1.0 + 1e-10);
    }

    #[test]
    fn single_mode_annulus_ratio() {
        let grid = GridSpec::cube(16).unwrap();
        let k = [2, 1, 2];
        let u = mode_pair(grid, 1, k, &[Complex64::new(0.3, -0.4)]);
        let lam = 3.0;
        let ratio = derivative_sup(&u, 1, 2.0) / (lam * lattice_lp(&magnitudes(&u), 2.0));
        assert!((ratio - 2.0 / 3.0).abs() < 1e-14);
        assert!(ratio >= 1.0 / 3f64.sqrt() - 1e-14);
    }

    #[test]
    fn band_overflow_is_an_error() {
        let grid = GridSpec::cube(16).unwrap();
        let bp = BernsteinParams {
            item: BernsteinItem::Annulus,
            k: 1,
            p: 2.0,
            q: 2.0,
            lambda: 4.0,
        };
        assert!(matches!(
            verify_bernstein(grid, bp, small()),
            Err(Error::BandOverflow(_))
        ));
    }

    #[test]
    fn identity_embedding_has_unit_ratio() {
        let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
        let e = EmbeddingParams {
            s: 0.3,
            p1: 2.0,
            p2: 2.0,
            r1: 1.0,
            r2: 1.0,
        };
        let r = verify_embedding(&part, e, small()).unwrap();
        for t in &r.trials {
            assert!((t.ratio - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_hypotheses() {
        assert!(shifted_product_hypotheses(
            &ShiftedProductParams {
                s1: 0.5,
                s2: -0.5,
                p1: 2.0,
                p2: 2.0
            },
            3.0
        )
        .is_err());
        let w = shifted_product_hypotheses(&ShiftedProductParams::NAVIER_STOKES, 3.0).unwrap();
        assert_eq!(w.len(), 1);
        assert!(shifted_product_hypotheses(&ShiftedProductParams::KELLER_SEGEL, 3.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn product_rejects_bad_exponents() {
        let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
        let mut pp = ProductParams::NAVIER_STOKES;
        pp.s = 0.0;
        assert!(verify_product(&part, pp, small()).is_err());
        pp.s = 1.0;
        pp.p = 3.0;
        assert!(verify_product(&part, pp, small()).is_err());
    }

    #[test]
    fn reports_do_not_depend_on_scheduling() {
        let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
        let a = verify_shifted_product(&part, ShiftedProductParams::KELLER_SEGEL, small()).unwrap();
        parallel::set_sequential(true);
        let b = verify_shifted_product(&part, ShiftedProductParams::KELLER_SEGEL, small()).unwrap();
        parallel::set_sequential(false);
        assert_eq!(a, b);
    }
}
