//! Measured quantities: densities of parabolic, torsion and peripheral sets in
//! balls, commuting-pair counts, growth-rate brackets, translation lengths and
//! the audit of the parabolic counting bound.
//!
//! Densities are exact rationals. Floating point is used only for decay fits
//! and growth envelopes.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, CentralizerDescriptor, ClassTag, Element, Group};
use crate::census::{payloads_of_weight, Census, CensusError};
use crate::presentation::FactorKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("density is zero at n = {0}; the set is empty on the fit window")]
    ZeroDensity(usize),
    #[error("invalid fit window [{lo}, {hi}]: {reason}")]
    BadWindow { lo: usize, hi: usize, reason: String },
    #[error("no hyperbolic elements in the ball of radius {0}")]
    NoHyperbolic(usize),
    #[error("factor `{0}` is not peripheral")]
    NotPeripheral(String),
    #[error("sampled mode needs at least one sample")]
    NoSamples,
}

/// Which subset of `G` (or `G²`) a curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    /// `𝒫`, the union of conjugates of the peripheral factors.
    Parabolic,
    /// `𝒫 ∪ 𝒬`, adding all finite-order elements.
    TorsionParabolic,
    /// A single peripheral factor `H_ω`.
    Peripheral(usize),
    /// Commuting pairs in `B(n)²`.
    CommutingPairs,
}

impl SetKind {
    pub fn label(&self, group: &Group) -> String {
        match self {
            SetKind::Parabolic => "parabolic".into(),
            SetKind::TorsionParabolic => "parabolic-torsion".into(),
            SetKind::Peripheral(i) => format!("peripheral:{}", group.spec().factors[*i].label),
            SetKind::CommutingPairs => "commuting-pairs".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    /// Closed-form count over normal forms.
    Exact,
    /// Enumerate the ball and classify every element.
    Enumerated { guard: u64 },
    /// Stratified sampling: `samples` draws per sphere.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Numerator {
    Exact(BigUint),
    Estimate(BigRational),
}

impl Numerator {
    pub fn as_rational(&self) -> BigRational {
        match self {
            Numerator::Exact(v) => BigRational::from_integer(BigInt::from(v.clone())),
            Numerator::Estimate(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvePoint {
    pub n: usize,
    pub numerator: Numerator,
    pub denominator: BigUint,
    pub delta: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityCurve {
    pub set_label: String,
    pub mode: DensityMode,
    pub points: Vec<CurvePoint>,
}

impl DensityCurve {
    pub fn point(&self, n: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

fn exact_point(n: usize, num: BigUint, den: BigUint) -> CurvePoint {
    let delta = ratio(&num, &den);
    CurvePoint { n, numerator: Numerator::Exact(num), denominator: den, delta }
}

/// Seed for shard `index` of a run seeded with `master` (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ----- structural counts ---------------------------------------------------

/// Nontrivial elements of `S(n)` conjugate into factor `i`: normal forms
/// `c · h · c⁻¹` with `c` not ending in factor `i` and `h ∈ F_i ∖ {1}`.
pub fn conjugates_in_sphere(census: &Census, i: usize, n: usize) -> BigUint {
    let mut acc = BigUint::zero();
    let mut l = 0;
    while 2 * l < n {
        let s = census.weights().get(i, n - 2 * l);
        if !s.is_zero() {
            acc += census.avoiding(i, l) * s;
        }
        l += 1;
    }
    acc
}

/// The factors whose conjugates make up the set (identity handled separately).
fn set_factors(group: &Group, set: SetKind) -> Vec<usize> {
    (0..group.factor_count())
        .filter(|&i| match set {
            SetKind::Parabolic => group.is_peripheral(i),
            SetKind::TorsionParabolic => {
                group.is_peripheral(i) || matches!(group.kind(i), FactorKind::FiniteCyclic { .. })
            }
            SetKind::Peripheral(_) | SetKind::CommutingPairs => false,
        })
        .collect()
}

fn identity_in_set(group: &Group, set: SetKind) -> bool {
    match set {
        SetKind::Parabolic => group.spec().has_peripherals(),
        _ => true,
    }
}

/// `|𝒮 ∩ S(n)|` from the normal-form structure.
pub fn set_sphere_count(census: &Census, set: SetKind, n: usize) -> BigUint {
    let group = census.group();
    if let SetKind::Peripheral(i) = set {
        return census.weights().get(i, n).clone();
    }
    if n == 0 {
        return if identity_in_set(group, set) { BigUint::one() } else { BigUint::zero() };
    }
    set_factors(group, set).into_iter().map(|i| conjugates_in_sphere(census, i, n)).sum()
}

/// Membership of one element, decided by classification.
pub fn in_set(group: &Group, set: SetKind, g: &Element) -> bool {
    let c = group.classify(g);
    match set {
        SetKind::Parabolic => match c.tag {
            ClassTag::Identity => group.spec().has_peripherals(),
            ClassTag::Parabolic(_) => true,
            _ => false,
        },
        SetKind::TorsionParabolic => c.is_parabolic() || c.is_torsion(),
        SetKind::Peripheral(i) => match g.syllables() {
            [] => true,
            [s] => s.factor == i,
            _ => false,
        },
        SetKind::CommutingPairs => false,
    }
}

/// `|𝒮 ∩ S(n)|` by enumerating the sphere.
pub fn set_sphere_count_enumerated(census: &Census, set: SetKind, n: usize, guard: u64) -> Result<BigUint, StatsError> {
    let group = census.group();
    let count = census.enumerate_sphere(n, guard)?.filter(|g| in_set(group, set, g)).count();
    Ok(BigUint::from(count))
}

fn density_curve(group: &Group, set: SetKind, max_n: usize, mode: DensityMode) -> Result<DensityCurve, StatsError> {
    let census = Census::build(group, max_n)?;
    let label = set.label(group);
    let points = match mode {
        DensityMode::Exact => {
            let mut running = BigUint::zero();
            (0..=max_n)
                .map(|n| {
                    running += set_sphere_count(&census, set, n);
                    exact_point(n, running.clone(), census.ball(n).clone())
                })
                .collect()
        }
        DensityMode::Enumerated { guard } => {
            // guard applies to the whole ball
            if census.ball(max_n) > &BigUint::from(guard) {
                return Err(CensusError::EnumerationGuard { n: max_n, count: census.ball(max_n).clone(), guard }.into());
            }
            let per_sphere: Vec<BigUint> = (0..=max_n)
                .into_par_iter()
                .map(|n| set_sphere_count_enumerated(&census, set, n, guard))
                .collect::<Result<_, _>>()?;
            let mut running = BigUint::zero();
            per_sphere
                .into_iter()
                .enumerate()
                .map(|(n, c)| {
                    running += c;
                    exact_point(n, running.clone(), census.ball(n).clone())
                })
                .collect()
        }
        DensityMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(StatsError::NoSamples);
            }
            let k = BigInt::from(samples);
            let mut running = if identity_in_set(group, set) { BigRational::one() } else { BigRational::zero() };
            let mut points = vec![CurvePoint {
                n: 0,
                numerator: Numerator::Estimate(running.clone()),
                denominator: BigUint::one(),
                delta: running.clone(),
            }];
            for n in 1..=max_n {
                if !census.sphere(n).is_zero() {
                    let draws = census.sample_sphere_uniform(n, derive_seed(seed, n as u64), samples)?;
                    let hits = draws.iter().filter(|g| in_set(group, set, g)).count();
                    running +=
                        BigRational::new(BigInt::from(census.sphere(n).clone()) * BigInt::from(hits), k.clone());
                }
                let den = census.ball(n).clone();
                let delta = &running / BigRational::from_integer(BigInt::from(den.clone()));
                points.push(CurvePoint { n, numerator: Numerator::Estimate(running.clone()), denominator: den, delta });
            }
            points
        }
    };
    Ok(DensityCurve { set_label: label, mode, points })
}

/// `δ(𝒫, n)` for `n = 0..=max_n`.
pub fn parabolic_density_curve(group: &Group, max_n: usize, mode: DensityMode) -> Result<DensityCurve, StatsError> {
    density_curve(group, SetKind::Parabolic, max_n, mode)
}

/// `δ(𝒫 ∪ 𝒬, n)` for `n = 0..=max_n`.
pub fn torsion_parabolic_density_curve(
    group: &Group,
    max_n: usize,
    mode: DensityMode,
) -> Result<DensityCurve, StatsError> {
    density_curve(group, SetKind::TorsionParabolic, max_n, mode)
}

/// `|H_ω ∩ B(n)| / |B(n)|`, exact.
pub fn peripheral_density_curve(group: &Group, omega: usize, max_n: usize) -> Result<DensityCurve, StatsError> {
    if omega >= group.factor_count() || !group.is_peripheral(omega) {
        return Err(StatsError::NotPeripheral(omega.to_string()));
    }
    let census = Census::build(group, max_n)?;
    let points = (0..=max_n)
        .map(|n| Ok(exact_point(n, census.peripheral_ball_count(omega, n)?, census.ball(n).clone())))
        .collect::<Result<_, StatsError>>()?;
    Ok(DensityCurve { set_label: SetKind::Peripheral(omega).label(group), mode: DensityMode::Exact, points })
}

// ----- centralizers and commuting pairs -------------------------------------

/// `|C_G(g) ∩ B(n)|`, computed from the centralizer descriptor.
pub fn centralizer_ball_count(census: &Census, g: &Element, n: usize) -> Result<BigUint, StatsError> {
    let group = census.group();
    match group.centralizer_descriptor(g) {
        CentralizerDescriptor::WholeGroup => {
            if n > census.max_n() {
                return Err(CensusError::OutOfTable { requested: n, max_n: census.max_n() }.into());
            }
            Ok(census.ball(n).clone())
        }
        CentralizerDescriptor::ConjugatedFactor { conjugator, factor } => {
            let inv = group.inverse(&conjugator);
            let mut count = 1u64;
            for w in 1..=n {
                for p in payloads_of_weight(group.kind(factor), w) {
                    let h = group.normalize(vec![crate::algebra::Syllable::new(factor, p)])?;
                    if group.word_length(&group.mul(&group.mul(&conjugator, &h), &inv)) <= n as u64 {
                        count += 1;
                    }
                }
            }
            Ok(BigUint::from(count))
        }
        CentralizerDescriptor::ConjugateCyclic { conjugator, root, .. } => {
            let inv = group.inverse(&conjugator);
            let root_inv = group.inverse(&root);
            let step = group.word_length(&root);
            let slack = 2 * group.word_length(&conjugator);
            let (mut pos, mut neg) = (root.clone(), root_inv.clone());
            let mut count = 1u64;
            let mut k = 1u64;
            // |c r^k c⁻¹| >= k|r| - 2|c| since r is cyclically reduced
            while k * step <= n as u64 + slack {
                for p in [&pos, &neg] {
                    if group.word_length(&group.mul(&group.mul(&conjugator, p), &inv)) <= n as u64 {
                        count += 1;
                    }
                }
                pos = group.mul(&pos, &root);
                neg = group.mul(&neg, &root_inv);
                k += 1;
            }
            Ok(BigUint::from(count))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutingMethod {
    /// Test every pair in `B(n)²`.
    Brute,
    /// Sum `|C_G(x) ∩ B(n)|` over every `x ∈ B(n)`.
    PerElement,
    /// Sum over maximal abelian subgroups using closed-form counts; only the
    /// cyclic subgroups containing a proper power inside `B(n)` are enumerated.
    Structural,
}

fn collect_ball(census: &Census, n: usize, guard: u64) -> Result<Vec<Element>, StatsError> {
    Ok(census.enumerate_ball(n, guard)?.collect())
}

/// `|{(x, y) ∈ B(n)² : xy = yx}|`.
pub fn commuting_pairs_count(
    census: &Census,
    n: usize,
    method: CommutingMethod,
    guard: u64,
) -> Result<BigUint, StatsError> {
    if n > census.max_n() {
        return Err(CensusError::OutOfTable { requested: n, max_n: census.max_n() }.into());
    }
    let group = census.group();
    match method {
        CommutingMethod::Brute => {
            let ball = collect_ball(census, n, guard)?;
            let off_diagonal: u64 = (0..ball.len())
                .into_par_iter()
                .map(|i| ((i + 1)..ball.len()).filter(|&j| group.commutes(&ball[i], &ball[j])).count() as u64)
                .sum();
            Ok(BigUint::from(2 * off_diagonal + ball.len() as u64))
        }
        CommutingMethod::PerElement => {
            let ball = collect_ball(census, n, guard)?;
            let parts: Vec<BigUint> = ball
                .par_iter()
                .map(|x| centralizer_ball_count(census, x, n))
                .collect::<Result<_, _>>()?;
            Ok(parts.into_iter().sum())
        }
        CommutingMethod::Structural => structural_commuting_pairs(census, n, guard),
    }
}

/// Closed form over maximal abelian subgroups. Nontrivial elements split into
/// conjugates `c F_i c⁻¹` of abelian factors (with `c` not ending in `F_i`,
/// every element of the conjugate has length `2|c| + |h|`) and maximal cyclic
/// subgroups `⟨z⟩` with `|z^k| = |z| + (k-1)|core(z)|`. Subgroups meeting
/// `B(n)` only in `{1, z, z⁻¹}` contribute 3 per nontrivial element, so only
/// roots with `|z| + |core(z)| <= n` are enumerated.
fn structural_commuting_pairs(census: &Census, n: usize, guard: u64) -> Result<BigUint, StatsError> {
    let group = census.group();
    let mut total = census.ball(n).clone();
    let mut abelian_type = BigUint::zero();
    for i in (0..group.factor_count()).filter(|&i| group.kind(i).is_abelian()) {
        let mut l = 0;
        while 2 * l < n {
            let conj = census.avoiding(i, l);
            let members = census.factor_ball_count(i, n - 2 * l);
            let nontrivial = &members - 1u32;
            total += &conj * &nontrivial * &members;
            l += 1;
        }
        for m in 1..=n {
            abelian_type += conjugates_in_sphere(census, i, m);
        }
    }
    let cyclic_type = census.ball(n) - 1u32 - abelian_type;
    total += cyclic_type * 3u32;

    let half = n / 2;
    let cores: Vec<Element> = census
        .enumerate_ball(half, guard)?
        .filter(|rho| match group.centralizer_descriptor(rho) {
            CentralizerDescriptor::ConjugateCyclic { conjugator, root, .. } => {
                conjugator.is_identity() && &root == rho
            }
            _ => false,
        })
        .collect();
    let extra: u64 = cores
        .par_iter()
        .map(|rho| -> Result<u64, StatsError> {
            let core_len = group.word_length(rho) as usize;
            let mut acc = 0u64;
            for c in census.enumerate_ball((n - core_len) / 2, guard)? {
                let z = group.conjugate(&c, rho);
                let z_len = group.word_length(&z) as usize;
                if z_len + core_len > n {
                    continue;
                }
                let red = group.cyclic_reduce(&z);
                if &red.core != rho || red.conjugator != c {
                    continue;
                }
                let j = 1 + ((n - z_len) / core_len) as u64;
                acc += 2 * j * (j - 1);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    total += extra;
    Ok(total)
}

/// Commuting-pair densities `dc(n) = |commuting pairs in B(n)²| / |B(n)|²`.
pub fn dc_curve(group: &Group, max_n: usize, method: DcMethod) -> Result<DensityCurve, StatsError> {
    let census = Census::build(group, max_n)?;
    let mut points = Vec::with_capacity(max_n + 1);
    let mode = match method {
        DcMethod::Count { guard, .. } => DensityMode::Enumerated { guard },
        DcMethod::Sampled { samples, seed } => DensityMode::Sampled { samples, seed },
    };
    for n in 0..=max_n {
        let den = census.ball(n) * census.ball(n);
        match method {
            DcMethod::Count { method, guard } => {
                let num = commuting_pairs_count(&census, n, method, guard)?;
                points.push(exact_point(n, num, den));
            }
            DcMethod::Sampled { samples, seed } => {
                if samples == 0 {
                    return Err(StatsError::NoSamples);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, n as u64));
                let mut hits = 0usize;
                for _ in 0..samples {
                    let x = sample_ball(&census, n, &mut rng);
                    let y = sample_ball(&census, n, &mut rng);
                    if group.commutes(&x, &y) {
                        hits += 1;
                    }
                }
                let frac = BigRational::new(BigInt::from(hits), BigInt::from(samples));
                let num = &frac * BigRational::from_integer(BigInt::from(den.clone()));
                points.push(CurvePoint { n, numerator: Numerator::Estimate(num), denominator: den, delta: frac });
            }
        }
    }
    Ok(DensityCurve { set_label: SetKind::CommutingPairs.label(group), mode, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcMethod {
    Count { method: CommutingMethod, guard: u64 },
    Sampled { samples: usize, seed: u64 },
}

/// Uniform draw from `B(n)`: radius by exact sphere weight, then a uniform
/// sphere element.
pub fn sample_ball<R: rand::Rng>(census: &Census, n: usize, rng: &mut R) -> Element {
    let mut r = rng.gen_biguint_below(census.ball(n));
    for i in 0..=n {
        if &r < census.sphere(i) {
            return census.sample_one(i, rng);
        }
        r -= census.sphere(i);
    }
    unreachable!("radius draw below |B(n)|")
}

// ----- growth ---------------------------------------------------------------

pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 960 {
        x.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 900;
        (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn ln_rational(r: &BigRational) -> f64 {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    pub max_n: usize,
    /// `(n, |B(n)|^{1/n})` for `n = 1..=max_n`.
    pub upper_envelope: Vec<(usize, f64)>,
    /// `|S(N)| / |S(N-1)|`.
    pub ratio_estimate: f64,
    pub lo: f64,
    /// `min_n |B(n)|^{1/n}`, an upper bound for the growth rate.
    pub hi: f64,
}

pub fn growth_rate(census: &Census, max_n: usize) -> Result<GrowthEstimate, StatsError> {
    if max_n < 2 {
        return Err(StatsError::BadWindow { lo: 0, hi: max_n, reason: "growth needs N >= 2".into() });
    }
    if max_n > census.max_n() {
        return Err(CensusError::OutOfTable { requested: max_n, max_n: census.max_n() }.into());
    }
    let upper_envelope: Vec<(usize, f64)> =
        (1..=max_n).map(|n| (n, (ln_biguint(census.ball(n)) / n as f64).exp())).collect();
    let hi = upper_envelope.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ratio_estimate = if census.sphere(max_n - 1).is_zero() {
        0.0
    } else {
        (ln_biguint(census.sphere(max_n)) - ln_biguint(census.sphere(max_n - 1))).exp()
    };
    Ok(GrowthEstimate { max_n, upper_envelope, ratio_estimate, lo: ratio_estimate.min(hi), hi })
}

// ----- translation length -----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauMethod {
    /// From the cyclically reduced core.
    Structural,
    /// From the power sequence `L(k) = |g^k|_{X∪ℋ}`, `k <= k_max`.
    LimitOracle { k_max: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationLengthResult {
    pub g: Element,
    pub tau: BigRational,
    pub method: TauMethod,
    /// `min_k L(k)/k` over the oracle's range, when computed.
    pub fekete_upper: Option<BigRational>,
}

pub fn translation_length(group: &Group, g: &Element, method: TauMethod) -> TranslationLengthResult {
    match method {
        TauMethod::Structural => {
            let tau = if group.classify(g).is_hyperbolic() {
                let core = group.cyclic_reduce(g).core;
                BigRational::from_integer(BigInt::from(group.relative_length(&core)))
            } else {
                BigRational::zero()
            };
            TranslationLengthResult { g: g.clone(), tau, method, fekete_upper: None }
        }
        TauMethod::LimitOracle { k_max } => {
            let k_max = k_max.max(1);
            let mut lengths = Vec::with_capacity(k_max as usize + 1);
            lengths.push(0u64);
            let mut power = Element::identity();
            for _ in 1..=k_max {
                power = group.mul(&power, g);
                lengths.push(group.relative_length(&power));
            }
            let fekete = (1..=k_max as usize)
                .map(|k| BigRational::new(BigInt::from(lengths[k]), BigInt::from(k)))
                .min()
                .expect("k_max >= 1");
            // L(k) = kτ + C once k is past the conjugator, so the increment over
            // the upper half of the range recovers τ exactly.
            let tau = if k_max >= 2 {
                let half = k_max.div_ceil(2) as usize;
                let rise = BigInt::from(lengths[k_max as usize]) - BigInt::from(lengths[half]);
                let increment = BigRational::new(rise, BigInt::from(k_max as usize - half));
                let increment = if increment.is_negative() { BigRational::zero() } else { increment };
                increment.min(fekete.clone())
            } else {
                fekete.clone()
            };
            TranslationLengthResult { g: g.clone(), tau, method, fekete_upper: Some(fekete) }
        }
    }
}

/// Smallest structural translation length among hyperbolic elements of `B(radius)`.
pub fn zeta_estimate(census: &Census, radius: usize, guard: u64) -> Result<BigRational, StatsError> {
    let group = census.group();
    census
        .enumerate_ball(radius, guard)?
        .filter(|g| group.classify(g).is_hyperbolic())
        .map(|g| translation_length(group, &g, TauMethod::Structural).tau)
        .min()
        .ok_or(StatsError::NoHyperbolic(radius))
}

// ----- counting-bound audit ---------------------------------------------------

/// Concrete choices for the sublinear slack function `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FChoice {
    Zero,
    Const(u64),
    /// `f(n) = ⌈c · log₂(n + 1)⌉`.
    CeilLog2Scaled(f64),
}

impl FChoice {
    pub fn eval(&self, n: usize) -> usize {
        match *self {
            FChoice::Zero => 0,
            FChoice::Const(c) => c as usize,
            FChoice::CeilLog2Scaled(c) => (c * ((n + 1) as f64).log2()).ceil().max(0.0) as usize,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FChoice::Zero => "zero".into(),
            FChoice::Const(c) => format!("const:{c}"),
            FChoice::CeilLog2Scaled(c) => format!("log2:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundAuditRow {
    pub n: usize,
    /// `|𝒫 ∩ B(n)|`
    pub lhs: BigUint,
    /// `Σ_ω Σ_{i <= (n+f(n))/2} |S(i)| · |H_ω ∩ B(n + f(n) - 2i)|`
    pub rhs_unit: BigUint,
    /// Smallest `D` with `lhs <= D · rhs_unit`.
    pub minimal_d: BigRational,
    pub f_used: String,
}

pub fn bound_audit(group: &Group, max_n: usize, f: FChoice) -> Result<Vec<BoundAuditRow>, StatsError> {
    let reach = (0..=max_n).map(|n| n + f.eval(n)).max().unwrap_or(0).max(max_n);
    let census = Census::build(group, reach)?;
    let peripherals = group.spec().peripheral_indices();
    let mut lhs = BigUint::zero();
    let mut rows = Vec::with_capacity(max_n + 1);
    for n in 0..=max_n {
        lhs += set_sphere_count(&census, SetKind::Parabolic, n);
        let top = n + f.eval(n);
        let mut rhs = BigUint::zero();
        for &omega in &peripherals {
            for i in 0..=top / 2 {
                rhs += census.sphere(i) * census.factor_ball_count(omega, top - 2 * i);
            }
        }
        let minimal_d = if lhs.is_zero() { BigRational::zero() } else { ratio(&lhs, &rhs) };
        rows.push(BoundAuditRow { n, lhs: lhs.clone(), rhs_unit: rhs, minimal_d, f_used: f.describe() });
    }
    Ok(rows)
}

// ----- decay fits -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub window: (usize, usize),
    pub rho: f64,
    pub r_squared: f64,
    pub slope_per_step: f64,
}

/// Least-squares line through `ln δ(n)` on the window; `rho = exp(-slope)`.
pub fn fit_decay(curve: &DensityCurve, lo: usize, hi: usize) -> Result<DecayFit, StatsError> {
    if hi < lo || hi - lo + 1 < 3 {
        return Err(StatsError::BadWindow { lo, hi, reason: "window needs at least 3 points".into() });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in lo..=hi {
        let p = curve
            .point(n)
            .ok_or_else(|| StatsError::BadWindow { lo, hi, reason: format!("curve has no point at n = {n}") })?;
        if !p.delta.is_positive() {
            return Err(StatsError::ZeroDensity(n));
        }
        xs.push(n as f64);
        ys.push(ln_rational(&p.delta));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * m { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit { window: (lo, hi), rho: (-slope).exp(), r_squared, slope_per_step: slope })
}

// ----- rendering ----------------------------------------------------------------

/// Decimal rendering of a nonnegative rational with `digits` significant
/// digits, rounded half up, trailing zeros dropped.
pub fn format_significant(r: &BigRational, digits: u32) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let negative = r.is_negative();
    let r = r.abs();
    let ten = BigInt::from(10);
    let pow10 = |e: i64| -> BigRational {
        let p = num_traits::pow(ten.clone(), e.unsigned_abs() as usize);
        if e >= 0 {
            BigRational::from_integer(p)
        } else {
            BigRational::new(BigInt::one(), p)
        }
    };
    // exponent e with 10^e <= r < 10^(e+1)
    let mut e = r.numer().to_string().len() as i64 - r.denom().to_string().len() as i64;
    while pow10(e) > r {
        e -= 1;
    }
    while pow10(e + 1) <= r {
        e += 1;
    }
    let round = |e: i64| -> BigInt {
        let scaled = &r * pow10(digits as i64 - 1 - e);
        (scaled + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer()
    };
    let mut q = round(e);
    if q >= num_traits::pow(ten.clone(), digits as usize) {
        e += 1;
        q = round(e);
    }
    let s = q.to_string();
    let point = e + 1; // digits before the decimal point
    let mut out = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), s)
    } else if point as usize >= s.len() {
        format!("{}{}", s, "0".repeat(point as usize - s.len()))
    } else {
        format!("{}.{}", &s[..point as usize], &s[point as usize..])
    };
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if negative {
        out.insert(0, '-');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_group_spec;

    fn group(text: &str) -> Group {
        Group::new(parse_group_spec(text).unwrap())
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(&q(13, 33), 12), "0.393939393939");
        assert_eq!(format_significant(&q(1, 1), 12), "1");
        assert_eq!(format_significant(&q(2, 3), 3), "0.667");
        assert_eq!(format_significant(&q(1, 1000), 12), "0.001");
        assert_eq!(format_significant(&q(123456, 1), 3), "123000");
        assert_eq!(format_significant(&q(999, 1000), 2), "1");
        assert_eq!(format_significant(&q(0, 1), 12), "0");
        assert_eq!(format_significant(&q(17, 49), 12), "0.34693877551");
    }

    #[test]
    fn fit_of_synthetic_curves() {
        let curve = |f: &dyn Fn(usize) -> BigRational| DensityCurve {
            set_label: "synthetic".into(),
            mode: DensityMode::Exact,
            points: (0..=12)
                .map(|n| CurvePoint {
                    n,
                    numerator: Numerator::Estimate(f(n)),
                    denominator: BigUint::one(),
                    delta: f(n),
                })
                .collect(),
        };
        let halving = curve(&|n| BigRational::new(BigInt::one(), BigInt::from(2).pow(n as u32)));
        let fit = fit_decay(&halving, 2, 12).unwrap();
        assert!((fit.rho - 2.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat = curve(&|_| q(1, 2));
        let fit = fit_decay(&flat, 0, 5).unwrap();
        assert!((fit.rho - 1.0).abs() < 1e-12);

        assert!(matches!(fit_decay(&flat, 0, 1), Err(StatsError::BadWindow { .. })));
        assert!(matches!(fit_decay(&flat, 10, 20), Err(StatsError::BadWindow { .. })));
        let zero = curve(&|_| BigRational::zero());
        assert_eq!(fit_decay(&zero, 0, 4), Err(StatsError::ZeroDensity(0)));
    }

    #[test]
    fn f_choices() {
        assert_eq!(FChoice::Zero.eval(10), 0);
        assert_eq!(FChoice::Const(3).eval(10), 3);
        assert_eq!(FChoice::CeilLog2Scaled(1.0).eval(0), 0);
        assert_eq!(FChoice::CeilLog2Scaled(1.0).eval(1), 1);
        assert_eq!(FChoice::CeilLog2Scaled(2.0).eval(6), 6);
        assert_eq!(FChoice::CeilLog2Scaled(1.5).describe(), "log2:1.5");
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 100);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn peripheral_density_rejects_free_factor() {
        let g = group("name = Z2xZ\nfactor = abelian rank=2\nfactor = free rank=1");
        assert!(matches!(peripheral_density_curve(&g, 1, 3), Err(StatsError::NotPeripheral(_))));
    }
}
