//! Cross-checks of the exact machinery against brute force at small radii.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Write;

use num_bigint::BigUint;
use relhyp_core::census::Census;
use relhyp_core::statistics::{
    centralizer_ball_count, commuting_pairs_count, set_sphere_count, set_sphere_count_enumerated, translation_length,
    CommutingMethod, SetKind, TauMethod,
};
use relhyp_core::{sphere_count_table, Element, Group, Payload};

use crate::{load_group, stdout_err, CliError, SelftestArgs};

const GUARD: u64 = 5_000_000;

type Check = fn(&Group, &Census, usize) -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("census-vs-bfs", census_vs_bfs),
    ("enumeration", enumeration),
    ("fekete", fekete),
    ("cyclic-reduction", cyclic_reduction),
    ("set-counts", set_counts),
    ("commuting-pairs", commuting_pairs),
    ("centralizers", centralizers),
    ("translation-length", translation_lengths),
    ("sampling", sampling),
];

pub(crate) fn run(a: &SelftestArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let radius = a.radius.max(1);
    let census = Census::build(&group, radius.max(4) + 2)?;
    if census.ball(radius) > &BigUint::from(GUARD) {
        return Err(CliError::Guard(format!("B({radius}) has {} elements; lower --radius", census.ball(radius))));
    }
    writeln!(out, "selftest {} radius {radius}", group.spec().name).map_err(stdout_err)?;
    let mut failures = 0;
    for (name, check) in CHECKS {
        let line = match check(&group, &census, radius) {
            Ok(detail) => format!("ok   {name} ({detail})"),
            Err(msg) => {
                failures += 1;
                format!("FAIL {name}: {msg}")
            }
        };
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} selftest check(s) failed")));
    }
    Ok(())
}

fn ball(census: &Census, n: usize) -> Result<Vec<Element>, String> {
    census.enumerate_ball(n, GUARD).map(Iterator::collect).map_err(|e| e.to_string())
}

fn census_vs_bfs(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    let gens = group.generators();
    let mut dist: HashMap<Element, usize> = HashMap::from([(Element::identity(), 0)]);
    let mut queue = VecDeque::from([Element::identity()]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d == radius {
            continue;
        }
        for s in &gens {
            let y = group.mul(&x, s);
            if !dist.contains_key(&y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y);
            }
        }
    }
    let mut counts = vec![0u64; radius + 1];
    for (x, &d) in &dist {
        counts[d] += 1;
        if group.word_length(x) != d as u64 {
            return Err(format!("{} has word length {} but distance {d}", group.serialize(x), group.word_length(x)));
        }
    }
    for (n, &c) in counts.iter().enumerate() {
        if census.sphere(n) != &BigUint::from(c) {
            return Err(format!("|S({n})| is {} by the census and {c} by search", census.sphere(n)));
        }
    }
    Ok(format!("|B({radius})| = {}", dist.len()))
}

fn enumeration(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    for n in 0..=radius {
        let list: Vec<Element> = census.enumerate_sphere(n, GUARD).map_err(|e| e.to_string())?.collect();
        let distinct: HashSet<&Element> = list.iter().collect();
        if distinct.len() != list.len() || &BigUint::from(list.len()) != census.sphere(n) {
            return Err(format!("sphere {n}: {} listed, {} distinct", list.len(), distinct.len()));
        }
        if let Some(x) = list.iter().find(|x| group.word_length(x) != n as u64 || group.check(x).is_err()) {
            return Err(format!("{} listed in sphere {n}", group.serialize(x)));
        }
    }
    Ok(format!("spheres 0..={radius}"))
}

fn fekete(group: &Group, _: &Census, _: usize) -> Result<String, String> {
    let table = sphere_count_table(group, 40).map_err(|e| e.to_string())?;
    if table.is_submultiplicative() {
        Ok("ball(m+n) <= ball(m)ball(n), m+n <= 40".into())
    } else {
        Err("ball sizes are not submultiplicative".into())
    }
}

fn cyclically_reduced(x: &Element) -> bool {
    match x.syllables() {
        [] => true,
        [s] => match &s.payload {
            Payload::Free(w) => w.len() < 2 || w[0] != -w[w.len() - 1],
            _ => true,
        },
        ss => ss[0].factor != ss[ss.len() - 1].factor,
    }
}

fn cyclic_reduction(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    let elements = ball(census, radius)?;
    for x in &elements {
        let red = group.cyclic_reduce(x);
        if !cyclically_reduced(&red.core) || &group.conjugate(&red.conjugator, &red.core) != x {
            return Err(format!("bad reduction of {}", group.serialize(x)));
        }
        for k in [2, 3] {
            if group.classify(&group.pow(x, k)).is_hyperbolic() != group.classify(x).is_hyperbolic() {
                return Err(format!("class of {} changes under powers", group.serialize(x)));
            }
        }
    }
    Ok(format!("{} elements", elements.len()))
}

fn set_counts(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    let mut sets = vec![SetKind::Parabolic, SetKind::TorsionParabolic];
    sets.extend(group.spec().peripheral_indices().into_iter().map(SetKind::Peripheral));
    for &set in &sets {
        for n in 0..=radius {
            let direct = set_sphere_count_enumerated(census, set, n, GUARD).map_err(|e| e.to_string())?;
            let exact = set_sphere_count(census, set, n);
            if direct != exact {
                return Err(format!("{} at n = {n}: {exact} counted, {direct} enumerated", set.label(group)));
            }
        }
    }
    Ok(format!("{} sets", sets.len()))
}

fn commuting_pairs(_: &Group, census: &Census, radius: usize) -> Result<String, String> {
    let top = radius.min(4);
    for n in 0..=top {
        let count = |m| commuting_pairs_count(census, n, m, GUARD).map_err(|e| e.to_string());
        let (b, p, s) =
            (count(CommutingMethod::Brute)?, count(CommutingMethod::PerElement)?, count(CommutingMethod::Structural)?);
        if b != p || b != s {
            return Err(format!("n = {n}: brute {b}, per-element {p}, structural {s}"));
        }
    }
    Ok(format!("n <= {top}"))
}

fn centralizers(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    let top = radius.min(4);
    let targets = ball(census, top)?;
    for x in ball(census, 2)? {
        let d = group.centralizer_descriptor(&x);
        let mut count = 0u64;
        for y in &targets {
            let c = group.commutes(&x, y);
            if c != d.contains(group, y) {
                return Err(format!("{} vs {}", group.serialize(&x), group.serialize(y)));
            }
            count += c as u64;
        }
        let exact = centralizer_ball_count(census, &x, top).map_err(|e| e.to_string())?;
        if exact != BigUint::from(count) {
            return Err(format!("centralizer of {} in B({top}): {exact} vs {count}", group.serialize(&x)));
        }
    }
    Ok(format!("B(2) against B({top})"))
}

fn translation_lengths(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    let top = radius.min(4);
    let mut checked = 0;
    for x in ball(census, top)? {
        let s = translation_length(group, &x, TauMethod::Structural).tau;
        let o = translation_length(group, &x, TauMethod::LimitOracle { k_max: 16 }).tau;
        if s != o {
            return Err(format!("{}: structural {s}, oracle {o}", group.serialize(&x)));
        }
        checked += 1;
    }
    Ok(format!("{checked} elements"))
}

fn sampling(group: &Group, census: &Census, radius: usize) -> Result<String, String> {
    if census.sphere(radius) == &BigUint::from(0u32) {
        return Ok(format!("sphere {radius} is empty"));
    }
    let a = census.sample_sphere_uniform(radius, 7, 50).map_err(|e| e.to_string())?;
    let b = census.sample_sphere_uniform(radius, 7, 50).map_err(|e| e.to_string())?;
    if a != b {
        return Err("same seed gave different draws".into());
    }
    if let Some(x) = a.iter().find(|x| group.word_length(x) != radius as u64) {
        return Err(format!("{} drawn from sphere {radius}", group.serialize(x)));
    }
    Ok(format!("{} draws", a.len()))
}
