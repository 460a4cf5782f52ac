//! Variable exponents p(·), r(·) in 𝒫₀, regularity indices s(·), and
//! empirical log-Hölder constants.
//!
//! Samples live on the grid points. When an exponent is used on the
//! frequency side, the value at storage index i is read at frequency
//! lattice index i (the recipe evaluated at θ = 2πξ/n mod 2π).

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::spectral::{torus_distance, GridSpec};

/// Built-in bounded profiles with range [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// cos x₁ · cos x₂ · cos x₃ over the active axes.
    Trig,
    /// Dipole of two C^∞ compact bumps of radius π/2 centred at
    /// (π ± π/2, π, π); +1 at one centre, -1 at the other.
    Bump,
    /// +1 on x₁ ∈ [0, π), -1 elsewhere. Not log-Hölder; used to exercise
    /// the detector.
    Step,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trig" => Some(Profile::Trig),
            "bump" => Some(Profile::Bump),
            "step" => Some(Profile::Step),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Trig => "trig",
            Profile::Bump => "bump",
            Profile::Step => "step",
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Profile::Step)
    }

    pub fn eval(&self, x: [f64; 3], dims: usize) -> f64 {
        match self {
            Profile::Trig => (0..dims).map(|d| x[d].cos()).product(),
            Profile::Bump => {
                let mut plus = [PI; 3];
                let mut minus = [PI; 3];
                plus[0] = PI + PI / 2.0;
                minus[0] = PI - PI / 2.0;
                bump(torus_distance(x, plus, dims)) - bump(torus_distance(x, minus, dims))
            }
            Profile::Step => {
                if x[0].rem_euclid(2.0 * PI) < PI {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// exp(1 - 1/(1 - (r/R)²)) for r < R = π/2, zero outside; equals 1 at r = 0.
fn bump(r: f64) -> f64 {
    let t = r / (PI / 2.0);
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Closed-form generator of an exponent field; authoritative when
/// regenerating at another resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExponentRecipe {
    Constant {
        p: f64,
    },
    Profiled {
        base: f64,
        amplitude: f64,
        profile: Profile,
    },
    /// 1/p = 1/p₁ + 1/p₂ pointwise.
    HolderConjugate {
        p1: Box<ExponentRecipe>,
        p2: Box<ExponentRecipe>,
    },
}

impl ExponentRecipe {
    pub fn eval(&self, x: [f64; 3], dims: usize) -> f64 {
        match self {
            ExponentRecipe::Constant { p } => *p,
            ExponentRecipe::Profiled {
                base,
                amplitude,
                profile,
            } => base + amplitude * profile.eval(x, dims),
            ExponentRecipe::HolderConjugate { p1, p2 } => 1.0 / (1.0 / p1.eval(x, dims) + 1.0 / p2.eval(x, dims)),
        }
    }

    /// Value at infinity used by the decay check.
    pub fn p_infinity(&self) -> f64 {
        match self {
            ExponentRecipe::Constant { p } => *p,
            ExponentRecipe::Profiled { base, .. } => *base,
            ExponentRecipe::HolderConjugate { p1, p2 } => 1.0 / (1.0 / p1.p_infinity() + 1.0 / p2.p_infinity()),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ExponentRecipe::Constant { .. } => true,
            ExponentRecipe::Profiled { amplitude, .. } => *amplitude == 0.0,
            ExponentRecipe::HolderConjugate { p1, p2 } => p1.is_constant() && p2.is_constant(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ExponentRecipe::Constant { p } => format!("constant({p})"),
            ExponentRecipe::Profiled {
                base,
                amplitude,
                profile,
            } => format!("{}(base={base}, amplitude={amplitude})", profile.name()),
            ExponentRecipe::HolderConjugate { p1, p2 } => {
                format!("holder-conjugate({}, {})", p1.describe(), p2.describe())
            }
        }
    }
}

/// Sampled variable exponent with 1 < p⁻ ≤ p(x) ≤ p⁺ < ∞.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentField {
    grid: GridSpec,
    values: Vec<f64>,
    p_minus: f64,
    p_plus: f64,
    p_infinity: f64,
    recipe: ExponentRecipe,
}

fn extrema(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

impl ExponentField {
    pub fn from_recipe(recipe: ExponentRecipe, grid: GridSpec) -> Result<Self> {
        match &recipe {
            ExponentRecipe::Constant { p } => check_above_one(*p)?,
            ExponentRecipe::Profiled { base, amplitude, .. } => {
                if !base.is_finite() || !amplitude.is_finite() {
                    return Err(Error::InvalidExponent("base and amplitude must be finite".into()));
                }
                check_above_one(base - amplitude.abs())?
            }
            ExponentRecipe::HolderConjugate { p1, p2 } => {
                ExponentField::from_recipe((**p1).clone(), grid)?;
                ExponentField::from_recipe((**p2).clone(), grid)?;
            }
        }
        let values: Vec<f64> = (0..grid.len()).map(|i| recipe.eval(grid.point(i), grid.dims)).collect();
        let p_infinity = recipe.p_infinity();
        Self::from_parts(grid, values, recipe, p_infinity)
    }

    fn from_parts(grid: GridSpec, values: Vec<f64>, recipe: ExponentRecipe, p_infinity: f64) -> Result<Self> {
        let (p_minus, p_plus) = extrema(&values);
        check_above_one(p_minus)?;
        if !p_plus.is_finite() {
            return Err(Error::InvalidExponent("p⁺ must be finite".into()));
        }
        Ok(Self {
            grid,
            values,
            p_minus,
            p_plus,
            p_infinity,
            recipe,
        })
    }

    /// Rebuild the same recipe on another grid.
    pub fn regrid(&self, grid: GridSpec) -> Result<Self> {
        Self::from_recipe(self.recipe.clone(), grid)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_infinity(&self) -> f64 {
        self.p_infinity
    }

    pub fn recipe(&self) -> &ExponentRecipe {
        &self.recipe
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Stored extrema agree with a fresh scan of the samples.
    pub fn verify_extrema(&self) -> Result<()> {
        let (lo, hi) = extrema(&self.values);
        if lo != self.p_minus || hi != self.p_plus {
            return Err(Error::InvalidExponent(format!(
                "declared bounds [{}, {}] disagree with samples [{lo}, {hi}]",
                self.p_minus, self.p_plus
            )));
        }
        Ok(())
    }

    /// 2 ≤ p⁻ and p⁺ ≤ 6, the window the solvers accept.
    pub fn check_solver_window(&self) -> Result<()> {
        if self.p_minus < 2.0 || self.p_plus > 6.0 {
            return Err(Error::Hypothesis(format!(
                "solver exponents need 2 <= p- and p+ <= 6 (got p- = {}, p+ = {})",
                self.p_minus, self.p_plus
            )));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        self.recipe.describe()
    }
}

fn check_above_one(p: f64) -> Result<()> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::ExponentTooSmall(p));
    }
    Ok(())
}

pub fn make_constant_exponent(p: f64, grid: GridSpec) -> Result<ExponentField> {
    ExponentField::from_recipe(ExponentRecipe::Constant { p }, grid)
}

pub fn make_smooth_exponent(base: f64, amplitude: f64, profile: Profile, grid: GridSpec) -> Result<ExponentField> {
    if !profile.is_smooth() {
        return Err(Error::InvalidExponent(format!(
            "profile '{}' is not smooth; build it through ExponentRecipe",
            profile.name()
        )));
    }
    ExponentField::from_recipe(
        ExponentRecipe::Profiled {
            base,
            amplitude,
            profile,
        },
        grid,
    )
}

/// Pointwise Hölder conjugate 1/p = 1/p₁ + 1/p₂.
pub fn holder_conjugate(p1: &ExponentField, p2: &ExponentField) -> Result<ExponentField> {
    if p1.grid != p2.grid {
        return Err(Error::GridMismatch("exponent grids differ".into()));
    }
    ExponentField::from_recipe(
        ExponentRecipe::HolderConjugate {
            p1: Box::new(p1.recipe.clone()),
            p2: Box::new(p2.recipe.clone()),
        },
        p1.grid,
    )
}

/// Real-valued smoothness index s(·), any sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Regularity {
    Constant(f64),
    Sampled { values: Vec<f64>, description: String },
}

impl Regularity {
    /// s(x) = base + amplitude · profile(x).
    pub fn profiled(base: f64, amplitude: f64, profile: Profile, grid: GridSpec) -> Self {
        if amplitude == 0.0 {
            return Regularity::Constant(base);
        }
        let values = (0..grid.len())
            .map(|i| base + amplitude * profile.eval(grid.point(i), grid.dims))
            .collect();
        Regularity::Sampled {
            values,
            description: format!("{}(base={base}, amplitude={amplitude})", profile.name()),
        }
    }

    /// s(x) = a + b / p(x), e.g. the critical index 2 - 3/p(·).
    pub fn affine_in_reciprocal(a: f64, b: f64, p: &ExponentField) -> Self {
        if p.is_constant() {
            return Regularity::Constant(a + b / p.p_minus());
        }
        Regularity::Sampled {
            values: p.values().iter().map(|v| a + b / v).collect(),
            description: format!("{a} + {b}/p, p = {}", p.describe()),
        }
    }

    pub fn at(&self, index: usize) -> f64 {
        match self {
            Regularity::Constant(s) => *s,
            Regularity::Sampled { values, .. } => values[index],
        }
    }

    pub fn shifted(&self, sigma: f64) -> Self {
        match self {
            Regularity::Constant(s) => Regularity::Constant(s + sigma),
            Regularity::Sampled { values, description } => Regularity::Sampled {
                values: values.iter().map(|v| v + sigma).collect(),
                description: format!("{description} + {sigma}"),
            },
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Regularity::Constant(s) => Some(*s),
            Regularity::Sampled { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Regularity::Constant(s) => format!("constant({s})"),
            Regularity::Sampled { description, .. } => description.clone(),
        }
    }
}

impl From<f64> for Regularity {
    fn from(s: f64) -> Self {
        Regularity::Constant(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogHolderOptions {
    pub seed: u64,
    /// `passes` requires the local constant to stay at or below this.
    pub max_constant: f64,
}

impl Default for LogHolderOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            max_constant: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogHolderReport {
    pub local_constant: f64,
    pub decay_constant: f64,
    /// Storage indices of the pair attaining the local constant.
    pub worst_pair: (usize, usize),
    pub worst_points: ([f64; 3], [f64; 3]),
    pub pairs_examined: usize,
    pub exhaustive: bool,
    pub passes: bool,
    pub note: String,
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    pair: (usize, usize),
}

impl Best {
    const NONE: Best = Best {
        value: 0.0,
        pair: (0, 0),
    };

    fn merge(self, other: Best) -> Best {
        if other.value > self.value {
            other
        } else {
            self
        }
    }
}

fn pair_term(p: &ExponentField, i: usize, j: usize) -> f64 {
    let grid = p.grid;
    let d = torus_distance(grid.point(i), grid.point(j), grid.dims);
    (1.0 / p.values[i] - 1.0 / p.values[j]).abs() * (E + 1.0 / d).ln()
}

/// Empirical log-Hölder constants of `p` from at most `sample_budget` pairs.
///
/// If the budget covers every pair the scan is exhaustive; otherwise half
/// the budget goes to uniformly random pairs and half to near neighbours
/// (offsets in {-2..2}^dims), all drawn from `options.seed`.
pub fn check_log_holder(p: &ExponentField, sample_budget: usize, options: LogHolderOptions) -> LogHolderReport {
    let grid = p.grid;
    let len = grid.len();
    let total_pairs = len * (len - 1) / 2;
    let budget = sample_budget.max(2);
    let exhaustive = budget >= total_pairs;

    let (best, examined) = if p.is_constant() {
        (Best::NONE, 0)
    } else if exhaustive {
        let rows = parallel::map_range(len, |i| {
            let mut b = Best::NONE;
            for j in i + 1..len {
                let v = pair_term(p, i, j);
                if v > b.value {
                    b = Best { value: v, pair: (i, j) };
                }
            }
            b
        });
        (rows.into_iter().fold(Best::NONE, Best::merge), total_pairs)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut pairs = Vec::with_capacity(budget);
        let random = budget / 2;
        while pairs.len() < random {
            let i = rng.gen_range(0..len);
            let j = rng.gen_range(0..len);
            if i != j {
                pairs.push((i, j));
            }
        }
        while pairs.len() < budget {
            let i = rng.gen_range(0..len);
            let mut a = grid.axes(i);
            let mut moved = false;
            for item in a.iter_mut().take(grid.dims) {
                let off: i64 = rng.gen_range(-2..=2);
                moved |= off != 0;
                *item = (*item as i64 + off).rem_euclid(grid.n as i64) as usize;
            }
            if moved {
                pairs.push((i, grid.flat(a)));
            }
        }
        let terms = parallel::map_slice(&pairs, |&(i, j)| Best {
            value: pair_term(p, i, j),
            pair: (i.min(j), i.max(j)),
        });
        (terms.into_iter().fold(Best::NONE, Best::merge), budget)
    };

    let centre = [PI; 3];
    let decay_constant = if p.is_constant() && p.p_minus == p.p_infinity {
        0.0
    } else {
        (0..len)
            .map(|i| {
                let d = torus_distance(grid.point(i), centre, grid.dims);
                (1.0 / p.values[i] - 1.0 / p.p_infinity).abs() * (E + d).ln()
            })
            .fold(0.0, f64::max)
    };

    LogHolderReport {
        local_constant: best.value,
        decay_constant,
        worst_pair: best.pair,
        worst_points: (grid.point(best.pair.0), grid.point(best.pair.1)),
        pairs_examined: examined,
        exhaustive,
        passes: best.value <= options.max_constant,
        note: "decay measured by torus distance to the cell centre; on a compact torus the decay condition is nearly vacuous"
            .into(),
    }
}
