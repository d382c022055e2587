//! Ready-made systems: hyperbolic torus actions with sawtooth displacement,
//! the Heisenberg nilmanifold driven by symmetric-square automorphisms,
//! random scenery over a free group, the motion group, and an i.i.d. coin
//! used as a classical-oracle sanity scenario.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{haar_su, q_of, CMat, IntMatrix};
use crate::phase::{
    affine_fixed_point_residual, affine_span_is_full, complex_to_real,
    differences_generate_lattice, nil_reduce, MotionElement, NilAffine, NilPoint, SceneryLaw,
    SceneryPoint, ToralPoint, TorusAction,
};
use crate::group::{HeisAuto, HeisPoint};
use crate::rng::CounterRng;
use crate::walk::{check_weights, System};

// ---------------------------------------------------------------- torus ----

/// Vector-valued trigonometric polynomial, used to build coboundary
/// displacements c_a(x) = d(a x) - d(x) for exactness tests.
#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub dim_in: usize,
    /// Per output component: (integer frequency, amplitude, phase).
    pub terms: Vec<Vec<(Vec<i64>, f64, f64)>>,
}

impl TrigPoly {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (c, terms) in self.terms.iter().enumerate() {
            let mut s = 0.0;
            for (p, amp, phase) in terms {
                let arg: f64 = p.iter().zip(x).map(|(&pi, &xi)| pi as f64 * xi).sum();
                s += amp * (std::f64::consts::TAU * arg + phase).cos();
            }
            out[c] = s;
        }
    }

    pub fn sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.iter().map(|(_, a, _)| a.abs()).sum::<f64>())
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone)]
pub enum TorusDisplacement {
    /// c(x) = {x}, the fractional part in [-1/2, 1/2)^d.
    Sawtooth,
    /// c = 0 (null-cocycle edge case).
    Zero,
    /// c_a(x) = d(a x) - d(x): an exact coboundary.
    Coboundary(TrigPoly),
}

#[derive(Debug, Clone)]
pub struct TorusSystem {
    pub name: String,
    pub dim_torus: usize,
    pub matrices: Vec<IntMatrix>,
    actions: Vec<TorusAction>,
    weights: Vec<f64>,
    cum: Vec<f64>,
    pub displacement: TorusDisplacement,
    dim_d: usize,
    bound: f64,
    mean_offset: Vec<f64>,
}

impl TorusSystem {
    pub fn new(
        name: &str,
        matrices: Vec<IntMatrix>,
        weights: Vec<f64>,
        displacement: TorusDisplacement,
    ) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Config("no generators".into()));
        }
        let d = matrices[0].dim;
        if matrices.iter().any(|m| m.dim != d) {
            return Err(Error::Config("generator dimensions differ".into()));
        }
        if matrices.iter().any(|m| !m.is_unimodular()) {
            return Err(Error::Config("torus generators must be unimodular".into()));
        }
        if weights.len() != matrices.len() {
            return Err(Error::Config("weights/generators length mismatch".into()));
        }
        let cum = check_weights(&weights)?;
        let actions = matrices.iter().map(TorusAction::new).collect::<Result<Vec<_>>>()?;
        let (dim_d, bound) = match &displacement {
            TorusDisplacement::Sawtooth => (d, (d as f64).sqrt() * 0.5),
            TorusDisplacement::Zero => (d, 0.0),
            TorusDisplacement::Coboundary(p) => {
                if p.dim_in != d {
                    return Err(Error::Config("coboundary input dimension mismatch".into()));
                }
                (p.terms.len(), 2.0 * p.sup_bound())
            }
        };
        Ok(TorusSystem {
            name: name.into(),
            dim_torus: d,
            matrices,
            actions,
            weights,
            cum,
            displacement,
            dim_d,
            bound,
            mean_offset: vec![0.0; dim_d],
        })
    }

    pub fn with_mean_offset(mut self, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != self.dim_d {
            return Err(Error::Dimension("offset dimension mismatch".into()));
        }
        self.mean_offset = offset;
        Ok(self)
    }

    pub fn action(&self, g: usize) -> &TorusAction {
        &self.actions[g]
    }

    pub fn mean_offset(&self) -> &[f64] {
        &self.mean_offset
    }
}

impl System for TorusSystem {
    type Point = ToralPoint;

    fn generator_count(&self) -> usize {
        self.matrices.len()
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn cum_weights(&self) -> &[f64] {
        &self.cum
    }
    fn dim(&self) -> usize {
        self.dim_d
    }
    fn displacement_bound(&self) -> f64 {
        self.bound
    }

    fn sample_point(&self, rng: &mut CounterRng) -> ToralPoint {
        ToralPoint {
            coords: (0..self.dim_torus).map(|_| rng.next_unit() - 0.5).collect(),
        }
    }

    fn displacement(&self, g: usize, x: &mut ToralPoint, out: &mut [f64]) {
        match &self.displacement {
            TorusDisplacement::Sawtooth => out.copy_from_slice(&x.coords),
            TorusDisplacement::Zero => out.fill(0.0),
            TorusDisplacement::Coboundary(p) => {
                let ax = self.actions[g].apply(x);
                let mut dax = vec![0.0; out.len()];
                p.eval(&ax.coords, &mut dax);
                p.eval(&x.coords, out);
                for (o, d) in out.iter_mut().zip(&dax) {
                    *o = d - *o;
                }
            }
        }
        for (o, m) in out.iter_mut().zip(&self.mean_offset) {
            *o -= m;
        }
    }

    fn apply(&self, g: usize, x: &mut ToralPoint) {
        *x = self.actions[g].apply(x);
    }
}

// ------------------------------------------------------------------ nil ----

#[derive(Debug, Clone)]
pub struct NilSystem {
    pub name: String,
    pub d: usize,
    pub maps: Vec<NilAffine>,
    /// Torus-factor matrices diag(D, D^-t) (identity for central
    /// translations), the linearization used by frequency-space routines.
    pub factor_matrices: Vec<IntMatrix>,
    weights: Vec<f64>,
    cum: Vec<f64>,
    bound: f64,
    mean_offset: Vec<f64>,
}

impl NilSystem {
    pub fn new(name: &str, maps: Vec<NilAffine>, factor_matrices: Vec<IntMatrix>, weights: Vec<f64>) -> Result<Self> {
        if maps.is_empty() || maps.len() != weights.len() || maps.len() != factor_matrices.len() {
            return Err(Error::Config("maps/weights/factors length mismatch".into()));
        }
        let d = maps[0].alpha.d();
        let cum = check_weights(&weights)?;
        let dim_d = 2 * d;
        Ok(NilSystem {
            name: name.into(),
            d,
            maps,
            factor_matrices,
            weights,
            cum,
            bound: (dim_d as f64).sqrt() * 0.5,
            mean_offset: vec![0.0; dim_d],
        })
    }
}

impl System for NilSystem {
    type Point = NilPoint;

    fn generator_count(&self) -> usize {
        self.maps.len()
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn cum_weights(&self) -> &[f64] {
        &self.cum
    }
    fn dim(&self) -> usize {
        2 * self.d
    }
    fn displacement_bound(&self) -> f64 {
        self.bound
    }

    fn sample_point(&self, rng: &mut CounterRng) -> NilPoint {
        let d = self.d;
        let x: Vec<f64> = (0..d).map(|_| rng.next_unit()).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.next_unit()).collect();
        let z = rng.next_unit();
        nil_reduce(&HeisPoint { x, y, z })
    }

    fn displacement(&self, _g: usize, x: &mut NilPoint, out: &mut [f64]) {
        let tf = x.torus_factor();
        for (i, o) in out.iter_mut().enumerate() {
            *o = tf[i] - self.mean_offset[i];
        }
    }

    fn apply(&self, g: usize, x: &mut NilPoint) {
        *x = self.maps[g].apply(x);
    }
}

// -------------------------------------------------------------- scenery ----

#[derive(Debug, Clone)]
pub struct ScenerySystem {
    pub name: String,
    pub k: usize,
    pub law: SceneryLaw,
    weights: Vec<f64>,
    cum: Vec<f64>,
    bound: f64,
    /// Memoize site values inside each walker's point.
    pub cache: bool,
}

impl ScenerySystem {
    pub fn new(name: &str, k: usize, law: SceneryLaw) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("free group rank must be positive".into()));
        }
        if !affine_span_is_full(&law.support) {
            return Err(Error::Config(
                "scenery values must affinely span R^D (coset obstruction)".into(),
            ));
        }
        if law.is_integral() && !differences_generate_lattice(&law.support) {
            return Err(Error::Config(
                "integral scenery values sit in a coset of a proper sublattice".into(),
            ));
        }
        let m = 2 * k;
        let weights = vec![1.0 / m as f64; m];
        let cum = check_weights(&weights)?;
        let bound = law
            .support
            .iter()
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(ScenerySystem { name: name.into(), k, law, weights, cum, bound, cache: false })
    }

    pub fn with_cache(mut self, cache: bool) -> Self {
        self.cache = cache;
        self
    }

    /// Generator index -> letter: 0..k-1 are +1..+k, k..2k-1 are -1..-k.
    pub fn letter(&self, g: usize) -> i32 {
        if g < self.k {
            (g + 1) as i32
        } else {
            -((g - self.k + 1) as i32)
        }
    }
}

impl System for ScenerySystem {
    type Point = SceneryPoint;

    fn generator_count(&self) -> usize {
        2 * self.k
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn cum_weights(&self) -> &[f64] {
        &self.cum
    }
    fn dim(&self) -> usize {
        self.law.dim
    }
    fn displacement_bound(&self) -> f64 {
        self.bound
    }

    fn sample_point(&self, rng: &mut CounterRng) -> SceneryPoint {
        use rand::RngCore;
        SceneryPoint::at_identity(rng.next_u64(), self.cache)
    }

    fn displacement(&self, _g: usize, x: &mut SceneryPoint, out: &mut [f64]) {
        let idx = x.value_index(&self.law);
        out.copy_from_slice(&self.law.support[idx]);
    }

    fn apply(&self, g: usize, x: &mut SceneryPoint) {
        x.push_left(self.letter(g));
    }
}

// --------------------------------------------------------------- motion ----

#[derive(Debug, Clone)]
pub struct MotionSystem {
    pub name: String,
    pub d: usize,
    pub gens: Vec<MotionElement>,
    weights: Vec<f64>,
    cum: Vec<f64>,
    bound: f64,
    reorth_every: usize,
}

impl MotionSystem {
    pub fn new(name: &str, gens: Vec<MotionElement>, weights: Vec<f64>) -> Result<Self> {
        if gens.is_empty() || gens.len() != weights.len() {
            return Err(Error::Config("generators/weights length mismatch".into()));
        }
        let d = gens[0].d();
        if gens.iter().any(|g| g.d() != d) {
            return Err(Error::Config("generator dimensions differ".into()));
        }
        let cum = check_weights(&weights)?;
        let residual = affine_fixed_point_residual(&gens);
        if residual < 1e-6 {
            return Err(Error::Config(format!(
                "affine system has a fixed point (residual {residual:.2e}); \
                 the translation walk would be degenerate"
            )));
        }
        let bound = gens
            .iter()
            .map(|g| g.tau.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Ok(MotionSystem { name: name.into(), d, gens, weights, cum, bound, reorth_every: 1024 })
    }
}

impl System for MotionSystem {
    type Point = CMat;

    fn generator_count(&self) -> usize {
        self.gens.len()
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn cum_weights(&self) -> &[f64] {
        &self.cum
    }
    fn dim(&self) -> usize {
        2 * self.d
    }
    fn displacement_bound(&self) -> f64 {
        self.bound
    }

    fn sample_point(&self, rng: &mut CounterRng) -> CMat {
        haar_su(self.d, rng)
    }

    fn displacement(&self, g: usize, x: &mut CMat, out: &mut [f64]) {
        let c = self.gens[g].displacement_from(x);
        complex_to_real(&c, out);
    }

    fn apply(&self, g: usize, x: &mut CMat) {
        *x = self.gens[g].rot.mul(x);
    }

    fn maintain(&self, step: usize, x: &mut CMat) {
        if step % self.reorth_every == 0 {
            x.reorthonormalize();
        }
    }
}

// ----------------------------------------------------------------- coin ----

/// Trivial phase space, c = +-1 with equal weight: the classical i.i.d.
/// walk, used as an exactly solvable oracle.
#[derive(Debug, Clone)]
pub struct CoinSystem {
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl CoinSystem {
    pub fn new() -> Self {
        CoinSystem { weights: vec![0.5, 0.5], cum: vec![0.5, 1.0] }
    }
}

impl Default for CoinSystem {
    fn default() -> Self {
        Self::new()
    }
}

impl System for CoinSystem {
    type Point = ();

    fn generator_count(&self) -> usize {
        2
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn cum_weights(&self) -> &[f64] {
        &self.cum
    }
    fn dim(&self) -> usize {
        1
    }
    fn displacement_bound(&self) -> f64 {
        1.0
    }

    fn sample_point(&self, _rng: &mut CounterRng) {}

    fn displacement(&self, g: usize, _x: &mut (), out: &mut [f64]) {
        out[0] = if g == 0 { 1.0 } else { -1.0 };
    }

    fn apply(&self, _g: usize, _x: &mut ()) {}
}

// ------------------------------------------------------------- builders ----

fn sl2_generators() -> Vec<IntMatrix> {
    let a = IntMatrix::from_i64(2, &[2, 1, 1, 1]).unwrap();
    let b = IntMatrix::from_i64(2, &[1, 1, 1, 2]).unwrap();
    let ai = a.inverse_unimodular().unwrap();
    let bi = b.inverse_unimodular().unwrap();
    vec![a, b, ai, bi]
}

/// T^2 driven by two hyperbolic SL(2, Z) generators (and inverses) with
/// sawtooth displacement; D = 2.
pub fn scenario_torus_sl2() -> TorusSystem {
    TorusSystem::new(
        "torus_sl2",
        sl2_generators(),
        vec![0.25; 4],
        TorusDisplacement::Sawtooth,
    )
    .expect("built-in scenario must validate")
}

/// T^3 driven by the symmetric-square images of the SL(2, Z) generators;
/// D = 3.
pub fn scenario_q_torus3() -> TorusSystem {
    let gens = sl2_generators()
        .iter()
        .map(|m| q_of(m).unwrap())
        .collect();
    TorusSystem::new("q_torus3", gens, vec![0.25; 4], TorusDisplacement::Sawtooth)
        .expect("built-in scenario must validate")
}

/// The 7-dimensional Heisenberg nilmanifold: symmetric-square automorphisms
/// (and inverses) plus one irrational central translation.  Displacement is
/// the sawtooth of the torus factor; D = 6.
pub fn scenario_heisenberg_h7() -> NilSystem {
    let a = IntMatrix::from_i64(2, &[2, 1, 1, 1]).unwrap();
    let b = IntMatrix::from_i64(2, &[1, 1, 1, 2]).unwrap();
    let mut maps = Vec::new();
    let mut factors = Vec::new();
    for m in [&a, &b] {
        let q = q_of(m).unwrap();
        let qi = q.inverse_unimodular().unwrap();
        for dmat in [q, qi] {
            maps.push(
                NilAffine::new(HeisPoint::identity(3), HeisAuto::new(&dmat).unwrap()).unwrap(),
            );
            factors.push(block_diag_factor(&dmat));
        }
    }
    let central = HeisPoint::new(vec![0.0; 3], vec![0.0; 3], std::f64::consts::SQRT_2 - 1.0).unwrap();
    maps.push(NilAffine::new(central, HeisAuto::identity(3)).unwrap());
    factors.push(IntMatrix::identity(6));
    NilSystem::new("heisenberg_h7", maps, factors, vec![0.2; 5])
        .expect("built-in scenario must validate")
}

/// diag(D, D^-t) acting on the torus factor T^d x T^d.
fn block_diag_factor(dmat: &IntMatrix) -> IntMatrix {
    let d = dmat.dim;
    let dinvt = dmat.inverse_unimodular().unwrap().transpose();
    let mut entries = vec![num_bigint::BigInt::from(0); (2 * d) * (2 * d)];
    for i in 0..d {
        for j in 0..d {
            entries[i * 2 * d + j] = dmat.get(i, j).clone();
            entries[(d + i) * 2 * d + (d + j)] = dinvt.get(i, j).clone();
        }
    }
    IntMatrix::from_bigint(2 * d, entries).unwrap()
}

/// Default scenery value set: 8 integral points, centered, containing 0 and
/// a basis of Z^3, so the differences generate the full lattice.
pub fn default_scenery_support() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![1.0, 1.0, -1.0],
        vec![-1.0, -1.0, 0.0],
    ]
}

/// Random scenery over F_k (default k = 2) with a centered, lattice-
/// spanning 8-point value set in Z^3; D = 3.
pub fn scenario_scenery_free_group(k: usize) -> Result<ScenerySystem> {
    let law = SceneryLaw::uniform(default_scenery_support())?;
    ScenerySystem::new("scenery_free_group", k, law)
}

/// Motion group SU(d) x C^d, default d = 2: two algebraic rotations with
/// unit coordinate translations, plus inverses; D = 2d real dimensions.
pub fn scenario_motion_group(d: usize) -> Result<MotionSystem> {
    if d != 2 {
        return Err(Error::Config("motion scenario is configured for d = 2".into()));
    }
    let s = 1.0 / 5.0f64.sqrt();
    let a1 = CMat::from_rows(
        2,
        vec![
            Complex64::new(s, 2.0 * s),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, -2.0 * s),
        ],
    );
    let a2 = CMat::from_rows(
        2,
        vec![
            Complex64::new(s, 0.0),
            Complex64::new(2.0 * s, 0.0),
            Complex64::new(-2.0 * s, 0.0),
            Complex64::new(s, 0.0),
        ],
    );
    let e1 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let e2 = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let g1 = MotionElement::new(a1, e1)?;
    let g2 = MotionElement::new(a2, e2)?;
    let gens = vec![g1.inverse(), g2.inverse(), g1, g2];
    MotionSystem::new("motion_group", gens, vec![0.25; 4])
}

/// The i.i.d. +-1 coin (classical CLT/LLT oracle).
pub fn coin_system() -> CoinSystem {
    CoinSystem::new()
}

// -------------------------------------------------------------- catalog ----

/// Serializable scenario selector for configs and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioConfig {
    TorusSl2,
    QTorus3,
    HeisenbergH7,
    SceneryFreeGroup {
        #[serde(default = "default_rank")]
        k: usize,
    },
    MotionGroup {
        #[serde(default = "default_motion_d")]
        d: usize,
    },
    CoinIid,
}

fn default_rank() -> usize {
    2
}
fn default_motion_d() -> usize {
    2
}

impl ScenarioConfig {
    pub fn id(&self) -> &'static str {
        match self {
            ScenarioConfig::TorusSl2 => "torus_sl2",
            ScenarioConfig::QTorus3 => "q_torus3",
            ScenarioConfig::HeisenbergH7 => "heisenberg_h7",
            ScenarioConfig::SceneryFreeGroup { .. } => "scenery_free_group",
            ScenarioConfig::MotionGroup { .. } => "motion_group",
            ScenarioConfig::CoinIid => "coin_iid",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "torus_sl2" => Ok(ScenarioConfig::TorusSl2),
            "q_torus3" => Ok(ScenarioConfig::QTorus3),
            "heisenberg_h7" => Ok(ScenarioConfig::HeisenbergH7),
            "scenery_free_group" => Ok(ScenarioConfig::SceneryFreeGroup { k: 2 }),
            "motion_group" => Ok(ScenarioConfig::MotionGroup { d: 2 }),
            "coin_iid" => Ok(ScenarioConfig::CoinIid),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }

    pub fn all_ids() -> &'static [&'static str] {
        &[
            "torus_sl2",
            "q_torus3",
            "heisenberg_h7",
            "scenery_free_group",
            "motion_group",
            "coin_iid",
        ]
    }

    pub fn describe(&self) -> String {
        match self {
            ScenarioConfig::TorusSl2 => {
                "T^2 with two hyperbolic SL(2,Z) generators + inverses, sawtooth displacement (D=2)".into()
            }
            ScenarioConfig::QTorus3 => {
                "T^3 with symmetric-square generators + inverses, sawtooth displacement (D=3)".into()
            }
            ScenarioConfig::HeisenbergH7 => {
                "H_7 nilmanifold: symmetric-square automorphisms + central translation, torus-factor sawtooth (D=6)".into()
            }
            ScenarioConfig::SceneryFreeGroup { k } => {
                format!("random scenery on F_{k}, centered lattice-spanning 8-point values (D=3)")
            }
            ScenarioConfig::MotionGroup { d } => {
                format!("motion group SU({d}) x C^{d}, algebraic rotations with unit translations (D={})", 2 * d)
            }
            ScenarioConfig::CoinIid => "i.i.d. +-1 coin, exactly solvable oracle (D=1)".into(),
        }
    }
}

/// A built scenario, dispatchable by the CLI.
pub enum Scenario {
    Torus(TorusSystem),
    Nil(NilSystem),
    Scenery(ScenerySystem),
    Motion(MotionSystem),
    Coin(CoinSystem),
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig) -> Result<Scenario> {
        Ok(match cfg {
            ScenarioConfig::TorusSl2 => Scenario::Torus(scenario_torus_sl2()),
            ScenarioConfig::QTorus3 => Scenario::Torus(scenario_q_torus3()),
            ScenarioConfig::HeisenbergH7 => Scenario::Nil(scenario_heisenberg_h7()),
            ScenarioConfig::SceneryFreeGroup { k } => {
                Scenario::Scenery(scenario_scenery_free_group(*k)?)
            }
            ScenarioConfig::MotionGroup { d } => Scenario::Motion(scenario_motion_group(*d)?),
            ScenarioConfig::CoinIid => Scenario::Coin(coin_system()),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Scenario::Torus(s) => s.dim(),
            Scenario::Nil(s) => s.dim(),
            Scenario::Scenery(s) => s.dim(),
            Scenario::Motion(s) => s.dim(),
            Scenario::Coin(s) => s.dim(),
        }
    }

    /// Generator matrices acting on a torus (factor), when the scenario has
    /// them; this is what frequency-space routines need.
    pub fn factor_matrices(&self) -> Option<(usize, Vec<IntMatrix>, Vec<f64>)> {
        match self {
            Scenario::Torus(s) => {
                Some((s.dim_torus, s.matrices.clone(), s.weights().to_vec()))
            }
            Scenario::Nil(s) => Some((2 * s.d, s.factor_matrices.clone(), s.weights().to_vec())),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{run, Thinning, Walker};

    #[test]
    fn builders_validate() {
        assert_eq!(scenario_torus_sl2().generator_count(), 4);
        assert_eq!(scenario_q_torus3().dim(), 3);
        let h = scenario_heisenberg_h7();
        assert_eq!(h.generator_count(), 5);
        assert_eq!(h.dim(), 6);
        assert_eq!(scenario_scenery_free_group(2).unwrap().dim(), 3);
        assert_eq!(scenario_motion_group(2).unwrap().dim(), 4);
    }

    #[test]
    fn torus_rejects_non_unimodular() {
        let m = IntMatrix::from_i64(2, &[2, 0, 0, 1]).unwrap();
        assert!(TorusSystem::new("bad", vec![m], vec![1.0], TorusDisplacement::Sawtooth).is_err());
    }

    #[test]
    fn scenery_rejects_coset_patterns() {
        // The {-1,+1}^3 cube: centered but in a coset of 2Z^3.
        let cube: Vec<Vec<f64>> = (0..8)
            .map(|i| (0..3).map(|b| if (i >> b) & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let law = SceneryLaw::uniform(cube).unwrap();
        assert!(ScenerySystem::new("cube", 2, law).is_err());
    }

    #[test]
    fn motion_rejects_fixed_point_configs() {
        // tau_i = v - a_i v has the common fixed point v.
        let mut rng = CounterRng::new(4242);
        let v = vec![Complex64::new(0.4, 0.1), Complex64::new(-0.3, 0.2)];
        let gens: Vec<MotionElement> = (0..4)
            .map(|_| {
                let rot = haar_su(2, &mut rng);
                let av = rot.matvec(&v);
                let tau = v.iter().zip(&av).map(|(a, b)| a - b).collect();
                MotionElement::new(rot, tau).unwrap()
            })
            .collect();
        assert!(MotionSystem::new("fixed", gens, vec![0.25; 4]).is_err());
    }

    #[test]
    fn motion_inverse_generators_close() {
        let sys = scenario_motion_group(2).unwrap();
        // gens[2] and gens[0] are mutual inverses as group elements.
        let e = sys.gens[2].compose(&sys.gens[0]);
        assert!(e.tau.iter().all(|t| t.norm() < 1e-12));
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e.rot[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trajectory_telescopes() {
        // S_k - S_{k-1} must equal the displacement at the pre-state, for
        // every scenario kind.
        let seed = 1717;
        fn check<S: System>(sys: &S, n: usize, seed: u64) {
            let t = run(sys, seed, 0, n, Thinning::Stride(1));
            let mut scratch = vec![0.0; sys.dim()];
            for k in 1..=n {
                let (_, mut pre) = t.states[k - 1].clone();
                sys.displacement(t.letters[k - 1] as usize, &mut pre, &mut scratch);
                for i in 0..sys.dim() {
                    let inc = t.sum_at(k)[i] - t.sum_at(k - 1)[i];
                    assert!(
                        (inc - scratch[i]).abs() < 1e-12,
                        "telescoping broken at step {k}: {inc} vs {}",
                        scratch[i]
                    );
                }
            }
        }
        check(&scenario_torus_sl2(), 300, seed);
        check(&scenario_heisenberg_h7(), 300, seed);
        check(&scenario_scenery_free_group(2).unwrap(), 300, seed);
        check(&scenario_motion_group(2).unwrap(), 300, seed);
        check(&coin_system(), 300, seed);
    }

    #[test]
    fn letters_are_reproducible() {
        let sys = scenario_torus_sl2();
        let t1 = run(&sys, 99, 5, 200, Thinning::Endpoints);
        let t2 = run(&sys, 99, 5, 200, Thinning::Endpoints);
        assert_eq!(t1.letters, t2.letters);
        assert_eq!(t1.sums, t2.sums);
        let w = Walker::new(&sys, 99, 5);
        for (k, &l) in t1.letters.iter().enumerate() {
            assert_eq!(w.letter_at(k), l as usize);
        }
        // Different paths decouple.
        let t3 = run(&sys, 99, 6, 200, Thinning::Endpoints);
        assert_ne!(t1.letters, t3.letters);
    }

    #[test]
    fn motion_unitarity_drift_controlled() {
        let sys = scenario_motion_group(2).unwrap();
        let mut w = Walker::new(&sys, 7, 0);
        for _ in 0..10_000 {
            w.step();
        }
        assert!(w.point.unitarity_defect() < 1e-10);
    }

    #[test]
    fn config_round_trip() {
        for id in ScenarioConfig::all_ids() {
            let cfg = ScenarioConfig::from_id(id).unwrap();
            assert_eq!(cfg.id(), *id);
            let json = serde_json::to_string(&cfg).unwrap();
            let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, cfg);
            Scenario::build(&cfg).unwrap();
        }
    }
}
