//! Normal-form arithmetic in free products.
//!
//! An element is stored as its reduced alternating word of syllables: adjacent
//! syllables come from different factors and no syllable is a factor identity.
//! This form is unique, so element equality is sequence equality.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::presentation::{FactorKind, GroupSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("factor index {0} out of range")]
    NoSuchFactor(usize),
    #[error("payload does not belong to factor `{label}`: {detail}")]
    BadPayload { label: String, detail: String },
    #[error("element is not in normal form: {0}")]
    NotNormal(String),
    #[error("cannot parse element `{text}`: {detail}")]
    Parse { text: String, detail: String },
    #[error("primitive root requires a hyperbolic element, got {0}")]
    NotHyperbolic(String),
}

/// The factor-local part of a syllable.
///
/// Free letters are encoded as `±(i + 1)` for the `i`-th basis element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    Abelian(Vec<i64>),
    Cyclic(u64),
    Free(Vec<i32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub factor: usize,
    pub payload: Payload,
}

impl Syllable {
    pub fn new(factor: usize, payload: Payload) -> Self {
        Syllable { factor, payload }
    }

    fn is_trivial(&self) -> bool {
        match &self.payload {
            Payload::Abelian(v) => v.iter().all(|&x| x == 0),
            Payload::Cyclic(r) => *r == 0,
            Payload::Free(w) => w.is_empty(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    syllables: Vec<Syllable>,
}

impl Element {
    pub fn identity() -> Self {
        Element::default()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Number of syllables.
    pub fn syllable_count(&self) -> usize {
        self.syllables.len()
    }

    pub(crate) fn from_normal_syllables(syllables: Vec<Syllable>) -> Self {
        Element { syllables }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    Identity,
    /// Conjugate into the peripheral factor with this index.
    Parabolic(usize),
    /// Finite order but not parabolic: conjugate into a non-peripheral finite
    /// cyclic factor.
    Elliptic,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Classification {
    pub tag: ClassTag,
    pub finite_order: Option<u64>,
}

impl Classification {
    pub fn is_parabolic(&self) -> bool {
        matches!(self.tag, ClassTag::Parabolic(_))
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.tag == ClassTag::Hyperbolic
    }

    pub fn is_torsion(&self) -> bool {
        self.finite_order.is_some()
    }
}

/// `g = conjugator · core · conjugator⁻¹` with `core` cyclically reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicReduction {
    pub core: Element,
    pub conjugator: Element,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CentralizerDescriptor {
    WholeGroup,
    /// `conjugator · factor · conjugator⁻¹` for an abelian or finite cyclic factor.
    ConjugatedFactor { conjugator: Element, factor: usize },
    /// `conjugator · ⟨root⟩ · conjugator⁻¹` with `root` cyclically reduced and
    /// primitive.
    ConjugateCyclic { conjugator: Element, root: Element, root_order: Option<u64> },
}

/// A free product given by a [`GroupSpec`], with the word metric over the
/// standard factor generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    spec: GroupSpec,
    kinds: Vec<FactorKind>,
}

fn free_reduce(word: &mut Vec<i32>) {
    let mut out: Vec<i32> = Vec::with_capacity(word.len());
    for &x in word.iter() {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    *word = out;
}

/// Smallest `p` dividing `len` such that the sequence is `p`-periodic.
fn smallest_period<T: PartialEq>(items: &[T]) -> usize {
    let len = items.len();
    for p in 1..=len {
        if len.is_multiple_of(p) && (p..len).all(|i| items[i] == items[i - p]) {
            return p;
        }
    }
    len
}

impl Group {
    pub fn new(spec: GroupSpec) -> Self {
        let kinds = spec.factors.iter().map(|f| f.kind).collect();
        Group { spec, kinds }
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn factor_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, factor: usize) -> FactorKind {
        self.kinds[factor]
    }

    pub fn is_peripheral(&self, factor: usize) -> bool {
        self.spec.factors[factor].peripheral
    }

    // ----- syllable level -------------------------------------------------

    fn check_syllable(&self, s: &Syllable, allow_trivial: bool) -> Result<(), AlgebraError> {
        let kind = *self.kinds.get(s.factor).ok_or(AlgebraError::NoSuchFactor(s.factor))?;
        let bad = |detail: String| AlgebraError::BadPayload {
            label: self.spec.factors[s.factor].label.clone(),
            detail,
        };
        match (kind, &s.payload) {
            (FactorKind::FreeAbelian { rank }, Payload::Abelian(v)) => {
                if v.len() != rank as usize {
                    return Err(bad(format!("expected {rank} coordinates, got {}", v.len())));
                }
            }
            (FactorKind::FiniteCyclic { order }, Payload::Cyclic(r)) => {
                if *r >= order {
                    return Err(bad(format!("residue {r} not below {order}")));
                }
            }
            (FactorKind::Free { rank }, Payload::Free(w)) => {
                if let Some(x) = w.iter().find(|&&x| x == 0 || x.unsigned_abs() > rank) {
                    return Err(bad(format!("letter {x} outside rank {rank}")));
                }
            }
            (kind, p) => return Err(bad(format!("payload {p:?} does not match {kind:?}"))),
        }
        if !allow_trivial && s.is_trivial() {
            return Err(bad("identity syllable".into()));
        }
        Ok(())
    }

    /// Product of two payloads of the same factor, `None` when trivial.
    fn combine(&self, factor: usize, a: &Payload, b: &Payload) -> Option<Payload> {
        let out = match (a, b) {
            (Payload::Abelian(x), Payload::Abelian(y)) => {
                Payload::Abelian(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (Payload::Cyclic(x), Payload::Cyclic(y)) => {
                let FactorKind::FiniteCyclic { order } = self.kinds[factor] else {
                    unreachable!("cyclic payload in non-cyclic factor")
                };
                Payload::Cyclic((x + y) % order)
            }
            (Payload::Free(x), Payload::Free(y)) => {
                let mut w = x.clone();
                for &l in y {
                    if w.last() == Some(&-l) {
                        w.pop();
                    } else {
                        w.push(l);
                    }
                }
                Payload::Free(w)
            }
            _ => unreachable!("mismatched payload kinds in one factor"),
        };
        let s = Syllable { factor, payload: out };
        if s.is_trivial() {
            None
        } else {
            Some(s.payload)
        }
    }

    pub fn syllable_inverse(&self, s: &Syllable) -> Syllable {
        let payload = match &s.payload {
            Payload::Abelian(v) => Payload::Abelian(v.iter().map(|x| -x).collect()),
            Payload::Cyclic(r) => {
                let FactorKind::FiniteCyclic { order } = self.kinds[s.factor] else {
                    unreachable!()
                };
                Payload::Cyclic((order - r) % order)
            }
            Payload::Free(w) => Payload::Free(w.iter().rev().map(|x| -x).collect()),
        };
        Syllable { factor: s.factor, payload }
    }

    /// Word length of a single syllable inside its factor.
    pub fn syllable_length(&self, s: &Syllable) -> u64 {
        match &s.payload {
            Payload::Abelian(v) => v.iter().map(|x| x.unsigned_abs()).sum(),
            Payload::Cyclic(r) => {
                let FactorKind::FiniteCyclic { order } = self.kinds[s.factor] else {
                    unreachable!()
                };
                (*r).min(order - r)
            }
            Payload::Free(w) => w.len() as u64,
        }
    }

    fn push_merge(&self, out: &mut Vec<Syllable>, s: Syllable) {
        if let Some(last) = out.last_mut() {
            if last.factor == s.factor {
                match self.combine(s.factor, &last.payload, &s.payload) {
                    Some(p) => last.payload = p,
                    None => {
                        out.pop();
                    }
                }
                return;
            }
        }
        if !s.is_trivial() {
            out.push(s);
        }
    }

    // ----- element level --------------------------------------------------

    /// Reduces an arbitrary syllable sequence to normal form.
    pub fn normalize(&self, raw: Vec<Syllable>) -> Result<Element, AlgebraError> {
        let mut out = Vec::with_capacity(raw.len());
        for mut s in raw {
            self.check_syllable(&s, true)?;
            if let Payload::Free(w) = &mut s.payload {
                free_reduce(w);
            }
            self.push_merge(&mut out, s);
        }
        Ok(Element { syllables: out })
    }

    /// Verifies that `g` is a normal form over this group.
    pub fn check(&self, g: &Element) -> Result<(), AlgebraError> {
        for s in &g.syllables {
            self.check_syllable(s, false)?;
            if let Payload::Free(w) = &s.payload {
                if w.windows(2).any(|p| p[0] == -p[1]) {
                    return Err(AlgebraError::NotNormal(format!("free syllable {w:?} is not reduced")));
                }
            }
        }
        if g.syllables.windows(2).any(|p| p[0].factor == p[1].factor) {
            return Err(AlgebraError::NotNormal("adjacent syllables share a factor".into()));
        }
        Ok(())
    }

    /// Checked product.
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    /// Product of two elements already known to be normal forms over this group.
    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        let mut out = a.syllables.clone();
        out.reserve(b.syllables.len());
        for s in &b.syllables {
            self.push_merge(&mut out, s.clone());
        }
        Element { syllables: out }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        Element {
            syllables: a.syllables.iter().rev().map(|s| self.syllable_inverse(s)).collect(),
        }
    }

    /// `g^k` for any integer `k`.
    pub fn pow(&self, g: &Element, k: i64) -> Element {
        let mut base = if k < 0 { self.inverse(g) } else { g.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Element::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn conjugate(&self, c: &Element, g: &Element) -> Element {
        self.mul(&self.mul(c, g), &self.inverse(c))
    }

    /// `|g|_X`: factor geodesics concatenate without interaction in a free
    /// product, so this is the sum of syllable lengths.
    pub fn word_length(&self, g: &Element) -> u64 {
        g.syllables.iter().map(|s| self.syllable_length(s)).sum()
    }

    /// Length over `X ∪ ℋ`: each peripheral syllable is a single letter.
    pub fn relative_length(&self, g: &Element) -> u64 {
        g.syllables
            .iter()
            .map(|s| if self.is_peripheral(s.factor) { 1 } else { self.syllable_length(s) })
            .sum()
    }

    /// Standard generators and their inverses, without repetition.
    pub fn generators(&self) -> Vec<Element> {
        let mut out = Vec::new();
        for (i, kind) in self.kinds.iter().enumerate() {
            let mut payloads = Vec::new();
            match *kind {
                FactorKind::FreeAbelian { rank } => {
                    for j in 0..rank as usize {
                        for sign in [1, -1] {
                            let mut v = vec![0; rank as usize];
                            v[j] = sign;
                            payloads.push(Payload::Abelian(v));
                        }
                    }
                }
                FactorKind::FiniteCyclic { order } => {
                    payloads.push(Payload::Cyclic(1));
                    if order > 2 {
                        payloads.push(Payload::Cyclic(order - 1));
                    }
                }
                FactorKind::Free { rank } => {
                    for j in 1..=rank as i32 {
                        payloads.push(Payload::Free(vec![j]));
                        payloads.push(Payload::Free(vec![-j]));
                    }
                }
            }
            out.extend(payloads.into_iter().map(|p| Element { syllables: vec![Syllable::new(i, p)] }));
        }
        out
    }

    /// Total order used for tie-breaking: word length, then shortlex on the
    /// serialized form.
    pub fn shortlex_cmp(&self, a: &Element, b: &Element) -> Ordering {
        self.word_length(a).cmp(&self.word_length(b)).then_with(|| {
            let (sa, sb) = (self.serialize(a), self.serialize(b));
            sa.len().cmp(&sb.len()).then_with(|| sa.cmp(&sb))
        })
    }

    /// Conjugates `g` to a cyclically reduced core with a shortest conjugator.
    pub fn cyclic_reduce(&self, g: &Element) -> CyclicReduction {
        let s = &g.syllables;
        let (mut lo, mut hi) = (0usize, s.len());
        let mut conjugator = Element::identity();
        while hi - lo >= 2 && s[lo].factor == s[hi - 1].factor {
            let last_inv = self.syllable_inverse(&s[hi - 1]);
            if s[lo] == last_inv {
                conjugator.syllables.push(s[lo].clone());
                lo += 1;
                hi -= 1;
                continue;
            }
            // Same factor at both ends without cancelling: conjugating by either
            // end merges them into one syllable. Take the shorter conjugator.
            let first = Element { syllables: vec![s[lo].clone()] };
            let last = Element { syllables: vec![last_inv] };
            let h = if self.shortlex_cmp(&first, &last) == Ordering::Greater { last } else { first };
            let middle = Element { syllables: s[lo..hi].to_vec() };
            let core = self.mul(&self.mul(&self.inverse(&h), &middle), &h);
            return CyclicReduction { core, conjugator: self.mul(&conjugator, &h) };
        }
        let mut core = Element { syllables: s[lo..hi].to_vec() };
        if let [Syllable { factor, payload: Payload::Free(w) }] = core.syllables.as_slice() {
            let mut k = 0;
            while 2 * k + 1 < w.len() && w[k] == -w[w.len() - 1 - k] {
                k += 1;
            }
            if k > 0 {
                let factor = *factor;
                let prefix = w[..k].to_vec();
                let inner = w[k..w.len() - k].to_vec();
                core = Element { syllables: vec![Syllable::new(factor, Payload::Free(inner))] };
                conjugator.syllables.push(Syllable::new(factor, Payload::Free(prefix)));
            }
        }
        CyclicReduction { core, conjugator }
    }

    pub fn classify(&self, g: &Element) -> Classification {
        if g.is_identity() {
            return Classification { tag: ClassTag::Identity, finite_order: Some(1) };
        }
        let core = self.cyclic_reduce(g).core;
        if let [s] = core.syllables.as_slice() {
            let finite_order = match (self.kinds[s.factor], &s.payload) {
                (FactorKind::FiniteCyclic { order }, Payload::Cyclic(r)) => Some(order / order.gcd(r)),
                _ => None,
            };
            let tag = if self.is_peripheral(s.factor) {
                ClassTag::Parabolic(s.factor)
            } else if finite_order.is_some() {
                ClassTag::Elliptic
            } else {
                ClassTag::Hyperbolic
            };
            return Classification { tag, finite_order };
        }
        Classification { tag: ClassTag::Hyperbolic, finite_order: None }
    }

    /// Primitive root of a cyclically reduced element that is not conjugate into
    /// an abelian factor, together with the exponent.
    fn core_root(&self, core: &Element) -> (Element, u64) {
        match core.syllables.as_slice() {
            [Syllable { factor, payload: Payload::Free(w) }] => {
                let p = smallest_period(w);
                let root = Element { syllables: vec![Syllable::new(*factor, Payload::Free(w[..p].to_vec()))] };
                (root, (w.len() / p) as u64)
            }
            [Syllable { factor, payload: Payload::Abelian(v) }] => {
                let g = v.iter().fold(0i64, |acc, &x| acc.gcd(&x)).max(1);
                let root = Element {
                    syllables: vec![Syllable::new(*factor, Payload::Abelian(v.iter().map(|x| x / g).collect()))],
                };
                (root, g as u64)
            }
            syllables => {
                let p = smallest_period(syllables);
                (Element { syllables: syllables[..p].to_vec() }, (syllables.len() / p) as u64)
            }
        }
    }

    /// Writes a hyperbolic `g` as `root^exponent` with `root` not a proper power.
    pub fn primitive_root(&self, g: &Element) -> Result<(Element, u64), AlgebraError> {
        if !self.classify(g).is_hyperbolic() {
            return Err(AlgebraError::NotHyperbolic(self.serialize(g)));
        }
        let CyclicReduction { core, conjugator } = self.cyclic_reduce(g);
        let (root, exponent) = self.core_root(&core);
        Ok((self.conjugate(&conjugator, &root), exponent))
    }

    pub fn centralizer_descriptor(&self, g: &Element) -> CentralizerDescriptor {
        if g.is_identity() {
            return CentralizerDescriptor::WholeGroup;
        }
        let CyclicReduction { core, conjugator } = self.cyclic_reduce(g);
        if let [s] = core.syllables.as_slice() {
            if self.kinds[s.factor].is_abelian() {
                return CentralizerDescriptor::ConjugatedFactor { conjugator, factor: s.factor };
            }
        }
        let (root, _) = self.core_root(&core);
        CentralizerDescriptor::ConjugateCyclic { conjugator, root, root_order: None }
    }

    pub fn commutes(&self, a: &Element, b: &Element) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    // ----- serialization --------------------------------------------------

    fn free_letter_name(&self, factor: usize, letter: i32) -> String {
        let FactorKind::Free { rank } = self.kinds[factor] else { unreachable!() };
        if rank == 1 {
            "t".to_string()
        } else {
            format!("x{}", letter.unsigned_abs())
        }
    }

    pub fn serialize_syllable(&self, s: &Syllable) -> String {
        let label = &self.spec.factors[s.factor].label;
        let body = match &s.payload {
            Payload::Abelian(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            Payload::Cyclic(r) => r.to_string(),
            Payload::Free(w) => {
                let mut out = String::new();
                let mut i = 0;
                while i < w.len() {
                    let mut j = i;
                    while j < w.len() && w[j] == w[i] {
                        j += 1;
                    }
                    let run = (j - i) as i64 * i64::from(w[i].signum());
                    out.push_str(&self.free_letter_name(s.factor, w[i]));
                    if run != 1 {
                        out.push_str(&format!("^{run}"));
                    }
                    i = j;
                }
                out
            }
        };
        format!("{label}({body})")
    }

    /// Canonical text form, e.g. `A(1,0)·F(t)·A(-1,0)`; the identity is `e`.
    pub fn serialize(&self, g: &Element) -> String {
        if g.is_identity() {
            return "e".to_string();
        }
        g.syllables.iter().map(|s| self.serialize_syllable(s)).collect::<Vec<_>>().join("·")
    }

    /// Parses the canonical text form. `*` is accepted in place of `·`, free
    /// runs may be written as repeated letters or with exponents, and the result
    /// is normalized.
    pub fn parse_element(&self, text: &str) -> Result<Element, AlgebraError> {
        let fail = |detail: &str| AlgebraError::Parse { text: text.to_string(), detail: detail.to_string() };
        let trimmed = text.trim();
        if trimmed == "e" || trimmed.is_empty() {
            return Ok(Element::identity());
        }
        let mut raw = Vec::new();
        for part in trimmed.split(['·', '*']) {
            let part = part.trim();
            let open = part.find('(').ok_or_else(|| fail("missing `(`"))?;
            if !part.ends_with(')') {
                return Err(fail("missing `)`"));
            }
            let label = part[..open].trim();
            let body = &part[open + 1..part.len() - 1];
            let factor = self
                .spec
                .factor_by_label(label)
                .ok_or_else(|| fail(&format!("unknown factor label `{label}`")))?;
            let payload = match self.kinds[factor] {
                FactorKind::FreeAbelian { .. } => Payload::Abelian(
                    body.split(',')
                        .map(|x| x.trim().parse::<i64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| fail("bad abelian coordinates"))?,
                ),
                FactorKind::FiniteCyclic { order } => {
                    let r: i64 = body.trim().parse().map_err(|_| fail("bad cyclic residue"))?;
                    Payload::Cyclic(r.rem_euclid(order as i64) as u64)
                }
                FactorKind::Free { rank } => Payload::Free(parse_free_word(body, rank).map_err(|d| fail(&d))?),
            };
            raw.push(Syllable::new(factor, payload));
        }
        self.normalize(raw)
    }
}

fn parse_free_word(body: &str, rank: u32) -> Result<Vec<i32>, String> {
    let chars: Vec<char> = body.chars().filter(|c| !c.is_whitespace()).collect();
    let mut i = 0;
    let mut out = Vec::new();
    let read_int = |i: &mut usize, allow_sign: bool| -> Option<i64> {
        let start = *i;
        if allow_sign && *i < chars.len() && chars[*i] == '-' {
            *i += 1;
        }
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        chars[start..*i].iter().collect::<String>().parse().ok()
    };
    while i < chars.len() {
        let letter: i32 = match chars[i] {
            't' if rank == 1 => {
                i += 1;
                1
            }
            'x' => {
                i += 1;
                let n = read_int(&mut i, false).ok_or("expected generator index after `x`")?;
                if n < 1 || n > rank as i64 {
                    return Err(format!("generator x{n} outside rank {rank}"));
                }
                n as i32
            }
            c => return Err(format!("unexpected character `{c}` in free word")),
        };
        let mut exp = 1i64;
        if i < chars.len() && chars[i] == '^' {
            i += 1;
            exp = read_int(&mut i, true).ok_or("bad exponent")?;
        }
        let l = if exp < 0 { -letter } else { letter };
        out.extend(std::iter::repeat_n(l, exp.unsigned_abs() as usize));
    }
    Ok(out)
}

impl CentralizerDescriptor {
    /// Membership test for the subgroup this descriptor names.
    pub fn contains(&self, group: &Group, x: &Element) -> bool {
        match self {
            CentralizerDescriptor::WholeGroup => true,
            CentralizerDescriptor::ConjugatedFactor { conjugator, factor } => {
                let y = group.conjugate(&group.inverse(conjugator), x);
                match y.syllables() {
                    [] => true,
                    [s] => s.factor == *factor,
                    _ => false,
                }
            }
            CentralizerDescriptor::ConjugateCyclic { conjugator, root, .. } => {
                let y = group.conjugate(&group.inverse(conjugator), x);
                let (ly, lr) = (group.word_length(&y), group.word_length(root));
                if ly % lr != 0 {
                    return false;
                }
                let k = (ly / lr) as i64;
                y == group.pow(root, k) || y == group.pow(root, -k)
            }
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassTag::Identity => write!(f, "identity"),
            ClassTag::Parabolic(i) => write!(f, "parabolic({i})"),
            ClassTag::Elliptic => write!(f, "elliptic"),
            ClassTag::Hyperbolic => write!(f, "hyperbolic"),
        }
    }
}
