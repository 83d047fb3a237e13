//! Exact sphere and ball counts, deterministic sphere enumeration and uniform
//! sphere sampling.
//!
//! Counts come from a dynamic program over normal forms: `T_i(n)` is the number
//! of normal forms of weight `n` whose last syllable lies in factor `i`, and
//!
//! ```text
//! T_i(n) = Σ_{w=1..n} s_i(w) · (Σ_{j≠i} T_j(n-w) + [n = w])
//! ```
//!
//! where `s_i(w)` counts the nontrivial elements of factor `i` of length `w`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{Element, Group, Payload, Syllable};
use crate::presentation::{FactorKind, FactorSpec};

pub const DEFAULT_MAX_RADIUS: usize = 512;
pub const DEFAULT_ENUMERATION_GUARD: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CensusError {
    #[error("radius {requested} exceeds the configured limit {limit}")]
    RadiusLimit { requested: usize, limit: usize },
    #[error("enumeration up to radius {n} covers {count} elements, above the guard {guard}")]
    EnumerationGuard { n: usize, count: BigUint, guard: u64 },
    #[error("factor {0} is not peripheral")]
    NotPeripheral(usize),
    #[error("radius {requested} is beyond the tabulated range {max_n}")]
    OutOfTable { requested: usize, max_n: usize },
    #[error("sphere of radius {0} is empty")]
    EmptySphere(usize),
}

/// Exact `|S(n)|` and `|B(n)|` for `n = 0..=max_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallTable {
    pub max_n: usize,
    pub sphere: Vec<BigUint>,
    pub ball: Vec<BigUint>,
}

impl BallTable {
    /// `ball[m + n] <= ball[m] · ball[n]` for every tabulated `m + n`.
    pub fn is_submultiplicative(&self) -> bool {
        (0..=self.max_n).all(|m| (0..=self.max_n - m).all(|n| self.ball[m + n] <= &self.ball[m] * &self.ball[n]))
    }
}

/// Number of vectors in `Z^rank` with L1 norm exactly `w`, for all `w <= max_w`.
fn l1_sphere_counts(rank: u32, max_w: usize) -> Vec<BigUint> {
    // row[w] for dimension d, built up from d = 0.
    let mut row: Vec<BigUint> = (0..=max_w).map(|w| if w == 0 { BigUint::one() } else { BigUint::zero() }).collect();
    for _ in 0..rank {
        let mut next = vec![BigUint::zero(); max_w + 1];
        for (w, slot) in next.iter_mut().enumerate() {
            let mut acc = row[w].clone();
            for j in 1..=w {
                acc += &row[w - j] * 2u32;
            }
            *slot = acc;
        }
        row = next;
    }
    row
}

/// `s(w)` for one factor: nontrivial elements of factor length exactly `w`;
/// `s(0) = 1` counts the identity.
pub fn factor_sphere_count(factor: &FactorSpec, w: usize) -> BigUint {
    kind_sphere_counts(factor.kind, w).pop().unwrap_or_default()
}

fn kind_sphere_counts(kind: FactorKind, max_w: usize) -> Vec<BigUint> {
    match kind {
        FactorKind::FreeAbelian { rank } => l1_sphere_counts(rank, max_w),
        FactorKind::FiniteCyclic { order } => (0..=max_w)
            .map(|w| {
                let w = w as u64;
                let c: u32 = if w == 0 {
                    1
                } else if 2 * w < order {
                    2
                } else if 2 * w == order {
                    1
                } else {
                    0
                };
                BigUint::from(c)
            })
            .collect(),
        FactorKind::Free { rank } => {
            let mut out = Vec::with_capacity(max_w + 1);
            out.push(BigUint::one());
            if max_w >= 1 {
                let mut cur = BigUint::from(2 * rank);
                for _ in 1..=max_w {
                    out.push(cur.clone());
                    cur *= 2 * rank - 1;
                }
            }
            out
        }
    }
}

/// Per-factor weight distributions `s_i(w)`, `w = 0..=max_w`.
#[derive(Debug, Clone)]
pub struct FactorWeightProfile {
    pub counts: Vec<Vec<BigUint>>,
}

impl FactorWeightProfile {
    pub fn new(group: &Group, max_w: usize) -> Self {
        let counts = (0..group.factor_count()).map(|i| kind_sphere_counts(group.kind(i), max_w)).collect();
        FactorWeightProfile { counts }
    }

    pub fn get(&self, factor: usize, w: usize) -> &BigUint {
        &self.counts[factor][w]
    }
}

/// The counting tables of one group up to a fixed radius.
#[derive(Debug, Clone)]
pub struct Census {
    group: Group,
    weights: FactorWeightProfile,
    /// `last[i][n]` = normal forms of weight n ending in factor i.
    last: Vec<Vec<BigUint>>,
    table: BallTable,
}

/// Exact sphere and ball counts up to radius `max_n` (at most [`DEFAULT_MAX_RADIUS`]).
pub fn sphere_count_table(group: &Group, max_n: usize) -> Result<BallTable, CensusError> {
    Ok(Census::build(group, max_n)?.table)
}

impl Census {
    pub fn build(group: &Group, max_n: usize) -> Result<Self, CensusError> {
        Self::build_with_limit(group, max_n, DEFAULT_MAX_RADIUS)
    }

    pub fn build_with_limit(group: &Group, max_n: usize, limit: usize) -> Result<Self, CensusError> {
        if max_n > limit {
            return Err(CensusError::RadiusLimit { requested: max_n, limit });
        }
        let k = group.factor_count();
        let weights = FactorWeightProfile::new(group, max_n);
        let mut last = vec![vec![BigUint::zero(); max_n + 1]; k];
        let mut sphere = vec![BigUint::one()];
        for n in 1..=max_n {
            for i in 0..k {
                let mut acc = BigUint::zero();
                for w in 1..=n {
                    let s = weights.get(i, w);
                    if s.is_zero() {
                        continue;
                    }
                    // forms of weight n - w not ending in factor i (identity included)
                    let prefix = &sphere[n - w] - &last[i][n - w];
                    if !prefix.is_zero() {
                        acc += s * prefix;
                    }
                }
                last[i][n] = acc;
            }
            sphere.push(last.iter().map(|row| &row[n]).sum());
        }
        let mut ball = Vec::with_capacity(max_n + 1);
        let mut running = BigUint::zero();
        for s in &sphere {
            running += s;
            ball.push(running.clone());
        }
        Ok(Census {
            group: group.clone(),
            weights,
            last,
            table: BallTable { max_n, sphere, ball },
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn table(&self) -> &BallTable {
        &self.table
    }

    pub fn max_n(&self) -> usize {
        self.table.max_n
    }

    pub fn sphere(&self, n: usize) -> &BigUint {
        &self.table.sphere[n]
    }

    pub fn ball(&self, n: usize) -> &BigUint {
        &self.table.ball[n]
    }

    pub fn weights(&self) -> &FactorWeightProfile {
        &self.weights
    }

    /// Normal forms of weight `n` ending in factor `i`.
    pub fn ending_in(&self, i: usize, n: usize) -> &BigUint {
        &self.last[i][n]
    }

    /// Normal forms of weight `n` whose last syllable is not in factor `i`;
    /// the identity counts at `n = 0`. By inversion this also counts forms whose
    /// first syllable avoids factor `i`.
    pub fn avoiding(&self, i: usize, n: usize) -> BigUint {
        self.sphere(n) - self.ending_in(i, n)
    }

    fn check_radius(&self, n: usize) -> Result<(), CensusError> {
        if n > self.max_n() {
            Err(CensusError::OutOfTable { requested: n, max_n: self.max_n() })
        } else {
            Ok(())
        }
    }

    /// `|F_i ∩ B(n)|` for any factor `i`, peripheral or not.
    pub fn factor_ball_count(&self, i: usize, n: usize) -> BigUint {
        self.weights.counts[i][..=n.min(self.max_n())].iter().sum()
    }

    /// `|H_ω ∩ B(n)|` for a peripheral factor `ω`.
    pub fn peripheral_ball_count(&self, omega: usize, n: usize) -> Result<BigUint, CensusError> {
        if omega >= self.group.factor_count() || !self.group.is_peripheral(omega) {
            return Err(CensusError::NotPeripheral(omega));
        }
        self.check_radius(n)?;
        Ok(self.factor_ball_count(omega, n))
    }

    /// Elements of `S(n)` one at a time, in a fixed order: by syllable count,
    /// then lexicographically on (factor, syllable length, payload rank).
    pub fn enumerate_sphere(&self, n: usize, guard: u64) -> Result<SphereIter<'_>, CensusError> {
        self.check_radius(n)?;
        let count = self.sphere(n);
        if count > &BigUint::from(guard) {
            return Err(CensusError::EnumerationGuard { n, count: count.clone(), guard });
        }
        Ok(SphereIter::new(self, n))
    }

    /// Elements of `B(n)` sphere by sphere.
    pub fn enumerate_ball(&self, n: usize, guard: u64) -> Result<impl Iterator<Item = Element> + '_, CensusError> {
        self.check_radius(n)?;
        if self.ball(n) > &BigUint::from(guard) {
            return Err(CensusError::EnumerationGuard { n, count: self.ball(n).clone(), guard });
        }
        Ok((0..=n).flat_map(move |i| SphereIter::new(self, i)))
    }

    /// `k` independent uniform draws from `S(n)`; the sequence is a pure
    /// function of `seed`.
    pub fn sample_sphere_uniform(&self, n: usize, seed: u64, k: usize) -> Result<Vec<Element>, CensusError> {
        self.check_radius(n)?;
        if self.sphere(n).is_zero() {
            return Err(CensusError::EmptySphere(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..k).map(|_| self.sample_one(n, &mut rng)).collect())
    }

    /// One uniform draw from `S(n)` using the caller's generator. Panics if
    /// `S(n)` is empty.
    pub fn sample_one<R: rand::Rng>(&self, n: usize, rng: &mut R) -> Element {
        let k = self.group.factor_count();
        let mut syllables = Vec::new();
        let mut rem = n;
        let mut prev: Option<usize> = None;
        while rem > 0 {
            // forms of weight rem whose first syllable avoids prev
            let total = match prev {
                Some(p) => self.avoiding(p, rem),
                None => self.sphere(rem).clone(),
            };
            let mut r = rng.gen_biguint_below(&total);
            let mut chosen = None;
            'outer: for f in (0..k).filter(|&f| Some(f) != prev) {
                for w in 1..=rem {
                    let s = self.weights.get(f, w);
                    if s.is_zero() {
                        continue;
                    }
                    let block = s * self.avoiding(f, rem - w);
                    if r < block {
                        chosen = Some((f, w, &r % s));
                        break 'outer;
                    }
                    r -= block;
                }
            }
            let (f, w, idx) = chosen.expect("sampling weights sum to the sphere count");
            syllables.push(Syllable::new(f, unrank_payload(self.group.kind(f), w, &idx)));
            rem -= w;
            prev = Some(f);
        }
        Element::from_normal_syllables(syllables)
    }
}

/// The nontrivial payloads of factor length `w`, in rank order.
pub fn payloads_of_weight(kind: FactorKind, w: usize) -> Vec<Payload> {
    if w == 0 {
        return Vec::new();
    }
    match kind {
        FactorKind::FreeAbelian { rank } => {
            let mut out = Vec::new();
            let mut v = vec![0i64; rank as usize];
            fill_l1(&mut v, 0, w as i64, &mut out);
            out
        }
        FactorKind::FiniteCyclic { order } => {
            let w = w as u64;
            if 2 * w < order {
                vec![Payload::Cyclic(w), Payload::Cyclic(order - w)]
            } else if 2 * w == order {
                vec![Payload::Cyclic(w)]
            } else {
                Vec::new()
            }
        }
        FactorKind::Free { rank } => {
            let letters = free_letter_order(rank);
            let mut out = Vec::new();
            let mut word = Vec::with_capacity(w);
            fill_free(&letters, &mut word, w, &mut out);
            out
        }
    }
}

fn fill_l1(v: &mut Vec<i64>, pos: usize, rem: i64, out: &mut Vec<Payload>) {
    if pos + 1 == v.len() {
        for x in if rem == 0 { vec![0] } else { vec![-rem, rem] } {
            v[pos] = x;
            out.push(Payload::Abelian(v.clone()));
        }
        v[pos] = 0;
        return;
    }
    for x in -rem..=rem {
        v[pos] = x;
        fill_l1(v, pos + 1, rem - x.abs(), out);
    }
    v[pos] = 0;
}

fn free_letter_order(rank: u32) -> Vec<i32> {
    (1..=rank as i32).flat_map(|g| [g, -g]).collect()
}

fn fill_free(letters: &[i32], word: &mut Vec<i32>, w: usize, out: &mut Vec<Payload>) {
    if word.len() == w {
        out.push(Payload::Free(word.clone()));
        return;
    }
    for &l in letters {
        if word.last() == Some(&-l) {
            continue;
        }
        word.push(l);
        fill_free(letters, word, w, out);
        word.pop();
    }
}

/// The `idx`-th payload of factor length `w` in the order of [`payloads_of_weight`].
pub fn unrank_payload(kind: FactorKind, w: usize, idx: &BigUint) -> Payload {
    match kind {
        FactorKind::FreeAbelian { rank } => {
            let rank = rank as usize;
            // counts[d][r]: vectors in Z^d with L1 norm r
            let counts: Vec<Vec<BigUint>> = (0..=rank).map(|d| l1_sphere_counts(d as u32, w)).collect();
            let mut idx = idx.clone();
            let mut rem = w as i64;
            let mut v = vec![0i64; rank];
            for (pos, slot) in v.iter_mut().enumerate() {
                let left = rank - pos - 1;
                for x in -rem..=rem {
                    let c = &counts[left][(rem - x.abs()) as usize];
                    if &idx < c {
                        *slot = x;
                        rem -= x.abs();
                        break;
                    }
                    idx -= c;
                }
            }
            Payload::Abelian(v)
        }
        FactorKind::FiniteCyclic { order } => {
            let w = w as u64;
            if idx.is_zero() {
                Payload::Cyclic(w)
            } else {
                Payload::Cyclic(order - w)
            }
        }
        FactorKind::Free { rank } => {
            let letters = free_letter_order(rank);
            let base = BigUint::from(2 * rank - 1);
            let mut digits = Vec::with_capacity(w);
            let mut rest = idx.clone();
            for _ in 1..w {
                digits.push((&rest % &base).to_usize().unwrap_or(0));
                rest /= &base;
            }
            let first = rest.to_usize().unwrap_or(0);
            let mut word = vec![letters[first]];
            for d in digits.into_iter().rev() {
                let prev = *word.last().unwrap();
                let allowed: Vec<i32> = letters.iter().copied().filter(|&l| l != -prev).collect();
                word.push(allowed[d]);
            }
            Payload::Free(word)
        }
    }
}

/// Lazy enumeration of one sphere; see [`Census::enumerate_sphere`].
pub struct SphereIter<'a> {
    census: &'a Census,
    n: usize,
    /// syllable count currently being enumerated
    len: usize,
    /// (factor, weight, payload index) per position
    choice: Vec<(usize, usize, usize)>,
    /// feasible[left][r][prev + 1]
    feasible: Vec<Vec<Vec<bool>>>,
    payloads: Vec<Vec<Vec<Payload>>>,
    started: bool,
    done: bool,
}

impl<'a> SphereIter<'a> {
    fn new(census: &'a Census, n: usize) -> Self {
        let group = census.group();
        let k = group.factor_count();
        let payloads: Vec<Vec<Vec<Payload>>> =
            (0..k).map(|f| (0..=n).map(|w| payloads_of_weight(group.kind(f), w)).collect()).collect();
        let mut feasible = vec![vec![vec![false; k + 1]; n + 1]; n + 1];
        for slot in feasible[0][0].iter_mut() {
            *slot = true;
        }
        for left in 1..=n {
            for r in 0..=n {
                for prev in 0..=k {
                    feasible[left][r][prev] = (0..k).filter(|&f| f + 1 != prev).any(|f| {
                        (1..=r).any(|w| !payloads[f][w].is_empty() && feasible[left - 1][r - w][f + 1])
                    });
                }
            }
        }
        SphereIter {
            census,
            n,
            len: 0,
            choice: Vec::new(),
            feasible,
            payloads,
            started: false,
            done: false,
        }
    }

    fn prev_slot(&self, pos: usize) -> usize {
        if pos == 0 {
            0
        } else {
            self.choice[pos - 1].0 + 1
        }
    }

    fn remaining_at(&self, pos: usize) -> usize {
        self.n - self.choice[..pos].iter().map(|c| c.1).sum::<usize>()
    }

    /// First feasible (factor, weight) at `pos` strictly after `after`.
    fn next_option(&self, pos: usize, after: Option<(usize, usize)>) -> Option<(usize, usize)> {
        let k = self.census.group().factor_count();
        let prev = self.prev_slot(pos);
        let rem = self.remaining_at(pos);
        let left = self.len - pos - 1;
        let (f0, w0) = match after {
            None => (0, 1),
            Some((f, w)) => (f, w + 1),
        };
        for f in f0..k {
            if f + 1 == prev {
                continue;
            }
            let start = if f == f0 { w0 } else { 1 };
            for w in start..=rem {
                if !self.payloads[f][w].is_empty() && self.feasible[left][rem - w][f + 1] {
                    return Some((f, w));
                }
            }
        }
        None
    }

    /// Fills positions `pos..len` with their first feasible choices.
    fn descend(&mut self, pos: usize) {
        self.choice.truncate(pos);
        for p in pos..self.len {
            let (f, w) = self.next_option(p, None).expect("feasibility table guarantees a completion");
            self.choice.push((f, w, 0));
        }
    }

    fn advance(&mut self) -> bool {
        for pos in (0..self.len).rev() {
            let (f, w, idx) = self.choice[pos];
            if idx + 1 < self.payloads[f][w].len() {
                self.choice[pos].2 += 1;
                self.descend(pos + 1);
                return true;
            }
            self.choice.truncate(pos);
            if let Some((f2, w2)) = self.next_option(pos, Some((f, w))) {
                self.choice.push((f2, w2, 0));
                self.descend(pos + 1);
                return true;
            }
        }
        false
    }

    /// Moves to the next syllable count that admits at least one form.
    fn next_length(&mut self) -> bool {
        loop {
            self.len += 1;
            if self.len > self.n {
                return false;
            }
            if self.feasible[self.len][self.n][0] {
                self.descend(0);
                return true;
            }
        }
    }

    fn current(&self) -> Element {
        Element::from_normal_syllables(
            self.choice.iter().map(|&(f, w, idx)| Syllable::new(f, self.payloads[f][w][idx].clone())).collect(),
        )
    }
}

impl Iterator for SphereIter<'_> {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.done {
            return None;
        }
        if self.n == 0 {
            self.done = true;
            return Some(Element::identity());
        }
        let ok = if !self.started {
            self.started = true;
            self.next_length()
        } else {
            self.advance() || self.next_length()
        };
        if ok {
            Some(self.current())
        } else {
            self.done = true;
            None
        }
    }
}
