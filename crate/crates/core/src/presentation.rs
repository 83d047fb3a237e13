//! Group specifications: free products of free abelian, finite cyclic and free
//! factors, each optionally designated as a peripheral subgroup.
//!
//! The on-disk format is line based:
//!
//! ```text
//! # comment
//! name = Z2xZ
//! factor = abelian rank=2 peripheral=yes
//! factor = free rank=1 peripheral=no label=F
//! ```

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub const MAX_ABELIAN_RANK: u32 = 8;
pub const MAX_CYCLIC_ORDER: u64 = 1_000_000;
pub const MAX_FREE_RANK: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    FreeAbelian { rank: u32 },
    FiniteCyclic { order: u64 },
    Free { rank: u32 },
}

impl FactorKind {
    fn keyword(&self) -> &'static str {
        match self {
            FactorKind::FreeAbelian { .. } => "abelian",
            FactorKind::FiniteCyclic { .. } => "cyclic",
            FactorKind::Free { .. } => "free",
        }
    }

    fn default_label_stem(&self) -> &'static str {
        match self {
            FactorKind::FreeAbelian { .. } => "A",
            FactorKind::FiniteCyclic { .. } => "C",
            FactorKind::Free { .. } => "F",
        }
    }

    /// Abelian or finite cyclic: centralizers of nontrivial elements are the
    /// whole factor.
    pub fn is_abelian(&self) -> bool {
        !matches!(self, FactorKind::Free { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub peripheral: bool,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    pub name: String,
    pub factors: Vec<FactorSpec>,
}

impl GroupSpec {
    /// Indices of the peripheral factors.
    pub fn peripheral_indices(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| f.peripheral)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_peripherals(&self) -> bool {
        self.factors.iter().any(|f| f.peripheral)
    }

    pub fn factor_by_label(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    /// Renders the spec in the line format accepted by [`parse_group_spec`].
    pub fn serialize(&self) -> String {
        let mut out = format!("name = {}\n", self.name);
        for f in &self.factors {
            let param = match f.kind {
                FactorKind::FreeAbelian { rank } | FactorKind::Free { rank } => {
                    format!("rank={rank}")
                }
                FactorKind::FiniteCyclic { order } => format!("order={order}"),
            };
            out.push_str(&format!(
                "factor = {} {} peripheral={} label={}\n",
                f.kind.keyword(),
                param,
                if f.peripheral { "yes" } else { "no" },
                f.label
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown factor kind `{0}`")]
    UnknownFactorKind(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("missing `name = ...` line")]
    MissingName,
    #[error("no factors declared")]
    NoFactors,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Removes whitespace on either side of every `=`.
fn tighten_equals(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '=' {
            while out.ends_with(char::is_whitespace) {
                out.pop();
            }
            out.push('=');
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    s != "e" && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_factor(line: usize, body: &str) -> Result<(FactorKind, bool, Option<String>), ParseError> {
    let mut tokens = body.split_whitespace();
    let keyword = tokens
        .next()
        .ok_or_else(|| err(line, ParseErrorKind::Syntax("empty factor declaration".into())))?;
    let mut rank: Option<u64> = None;
    let mut order: Option<u64> = None;
    let mut peripheral: Option<bool> = None;
    let mut label: Option<String> = None;
    let kind_name = keyword.to_string();
    if !matches!(keyword, "abelian" | "cyclic" | "free") {
        return Err(err(line, ParseErrorKind::UnknownFactorKind(kind_name)));
    }
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| err(line, ParseErrorKind::Syntax(format!("expected key=value, got `{tok}`"))))?;
        let number = || {
            value
                .parse::<u64>()
                .map_err(|_| err(line, ParseErrorKind::Syntax(format!("`{key}` expects a nonnegative integer, got `{value}`"))))
        };
        match key {
            "rank" if keyword != "cyclic" => rank = Some(number()?),
            "order" if keyword == "cyclic" => order = Some(number()?),
            "peripheral" => {
                peripheral = Some(match value {
                    "yes" => true,
                    "no" => false,
                    _ => {
                        return Err(err(
                            line,
                            ParseErrorKind::Syntax(format!("peripheral expects yes|no, got `{value}`")),
                        ))
                    }
                })
            }
            "label" => {
                if !is_identifier(value) {
                    return Err(err(line, ParseErrorKind::Syntax(format!("invalid label `{value}`"))));
                }
                label = Some(value.to_string());
            }
            _ => {
                return Err(err(
                    line,
                    ParseErrorKind::Syntax(format!("unexpected key `{key}` for {keyword} factor")),
                ))
            }
        }
    }
    let kind = match keyword {
        "abelian" | "free" => {
            let r = rank.ok_or_else(|| err(line, ParseErrorKind::Syntax("missing rank".into())))?;
            let limit = if keyword == "abelian" { MAX_ABELIAN_RANK } else { MAX_FREE_RANK };
            if r < 1 || r > limit as u64 {
                return Err(err(line, ParseErrorKind::OutOfRange(format!("{keyword} rank {r} not in 1..={limit}"))));
            }
            if keyword == "abelian" {
                FactorKind::FreeAbelian { rank: r as u32 }
            } else {
                FactorKind::Free { rank: r as u32 }
            }
        }
        _ => {
            let m = order.ok_or_else(|| err(line, ParseErrorKind::Syntax("missing order".into())))?;
            if !(2..=MAX_CYCLIC_ORDER).contains(&m) {
                return Err(err(
                    line,
                    ParseErrorKind::OutOfRange(format!("cyclic order {m} not in 2..={MAX_CYCLIC_ORDER}")),
                ));
            }
            FactorKind::FiniteCyclic { order: m }
        }
    };
    let peripheral = peripheral.unwrap_or(kind.is_abelian());
    Ok((kind, peripheral, label))
}

/// Parses the line-based group file format.
pub fn parse_group_spec(text: &str) -> Result<GroupSpec, ParseError> {
    let mut name: Option<String> = None;
    let mut seen_content = false;
    let mut factors: Vec<FactorSpec> = Vec::new();
    let mut explicit: Vec<Option<String>> = Vec::new();
    let mut factor_lines: Vec<usize> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let content = tighten_equals(content);
        let (key, rest) = content
            .split_once('=')
            .ok_or_else(|| err(line_no, ParseErrorKind::Syntax(format!("expected `key = value`, got `{content}`"))))?;
        match key {
            "name" => {
                if seen_content {
                    return Err(err(
                        line_no,
                        ParseErrorKind::Syntax("`name` must be the first declaration".into()),
                    ));
                }
                let value = rest.trim();
                if value.is_empty() {
                    return Err(err(line_no, ParseErrorKind::Syntax("empty name".into())));
                }
                name = Some(value.to_string());
            }
            "factor" => {
                let (kind, peripheral, label) = parse_factor(line_no, rest)?;
                factors.push(FactorSpec { kind, peripheral, label: String::new() });
                explicit.push(label);
                factor_lines.push(line_no);
            }
            other => {
                return Err(err(line_no, ParseErrorKind::Syntax(format!("unknown declaration `{other}`"))));
            }
        }
        seen_content = true;
    }

    let name = name.ok_or_else(|| err(1, ParseErrorKind::MissingName))?;
    if factors.is_empty() {
        return Err(err(text.lines().count().max(1), ParseErrorKind::NoFactors));
    }

    // Explicit labels are claimed first so that defaults never steal them.
    let mut used: BTreeSet<String> = BTreeSet::new();
    for (i, label) in explicit.iter().enumerate() {
        if let Some(l) = label {
            if !used.insert(l.clone()) {
                return Err(err(factor_lines[i], ParseErrorKind::DuplicateLabel(l.clone())));
            }
            factors[i].label = l.clone();
        }
    }
    for (i, label) in explicit.iter().enumerate() {
        if label.is_none() {
            let stem = factors[i].kind.default_label_stem();
            let mut candidate = stem.to_string();
            let mut suffix = i;
            while used.contains(&candidate) {
                candidate = format!("{stem}{suffix}");
                suffix += 1;
            }
            used.insert(candidate.clone());
            factors[i].label = candidate;
        }
    }

    Ok(GroupSpec { name, factors })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks the hypotheses of the negligibility results against a parsed spec.
/// Degenerate shapes only produce warnings.
pub fn validate(spec: &GroupSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let kinds: Vec<FactorKind> = spec.factors.iter().map(|f| f.kind).collect();

    match kinds.as_slice() {
        [FactorKind::FiniteCyclic { order }] => {
            report.warnings.push(format!("group is finite (Z/{order})"));
            report.warnings.push("group is virtually cyclic".into());
        }
        [FactorKind::Free { rank: 1 }] | [FactorKind::FreeAbelian { rank: 1 }] => {
            report.warnings.push("group is virtually cyclic (infinite cyclic)".into());
        }
        [FactorKind::FiniteCyclic { order: 2 }, FactorKind::FiniteCyclic { order: 2 }] => {
            report.warnings.push("group is virtually cyclic (infinite dihedral)".into());
        }
        _ => {}
    }

    if !spec.has_peripherals() {
        report
            .warnings
            .push("no peripheral factors: the parabolic set is empty".into());
    } else if spec.factors.len() == 1 {
        report
            .warnings
            .push("the only factor is peripheral: peripheral subgroup is not proper".into());
    }
    for f in &spec.factors {
        if let FactorKind::FreeAbelian { rank } = f.kind {
            if rank >= 2 && !f.peripheral {
                report.warnings.push(format!(
                    "factor {} is Z^{rank} but not peripheral: the group is not hyperbolic relative to the peripheral factors",
                    f.label
                ));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_factor_spec() {
        let spec = parse_group_spec(
            "name = Z2xZ\nfactor = abelian rank=2 peripheral=yes\nfactor = free rank=1 peripheral=no",
        )
        .unwrap();
        assert_eq!(spec.name, "Z2xZ");
        assert_eq!(spec.factors.len(), 2);
        assert_eq!(spec.peripheral_indices(), vec![0]);
        assert_eq!(spec.factors[0].kind, FactorKind::FreeAbelian { rank: 2 });
        assert_eq!(spec.factors[1].kind, FactorKind::Free { rank: 1 });
        assert_eq!(spec.factors[0].label, "A");
        assert_eq!(spec.factors[1].label, "F");
    }

    #[test]
    fn parses_free_group_without_peripherals() {
        let spec = parse_group_spec("name = F2\nfactor = free rank=2 peripheral=no").unwrap();
        assert_eq!(spec.factors.len(), 1);
        assert!(spec.peripheral_indices().is_empty());
    }

    #[test]
    fn rejects_unknown_kind() {
        let e = parse_group_spec("factor = dihedral n=5").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(matches!(e.kind, ParseErrorKind::UnknownFactorKind(_)));
        assert!(e.to_string().contains("unknown factor kind"));
    }

    #[test]
    fn whitespace_and_comments() {
        let spec = parse_group_spec(
            "# a comment\n\n  name   =  My group  # trailing\nfactor=cyclic order = 6\n factor =free rank= 1\n",
        )
        .unwrap();
        assert_eq!(spec.name, "My group");
        assert_eq!(spec.factors[0].kind, FactorKind::FiniteCyclic { order: 6 });
        // defaults: cyclic peripheral, free not
        assert!(spec.factors[0].peripheral);
        assert!(!spec.factors[1].peripheral);
    }

    #[test]
    fn default_labels_are_unique() {
        let spec = parse_group_spec(
            "name = x\nfactor = abelian rank=1\nfactor = abelian rank=2\nfactor = free rank=1 label=A1\n",
        )
        .unwrap();
        let labels: Vec<_> = spec.factors.iter().map(|f| f.label.as_str()).collect();
        assert_eq!(labels, vec!["A", "A2", "A1"]);
    }

    #[test]
    fn error_cases() {
        let cases = [
            ("name = x\nfactor = abelian rank=9", 2),
            ("name = x\nfactor = cyclic order=1", 2),
            ("name = x\nfactor = free rank=0", 2),
            ("name = x\nfactor = free rank=1 label=F\nfactor = free rank=2 label=F", 3),
            ("name = x\nfactor = free", 2),
            ("name = x\nfactor = free rank=two", 2),
            ("name = x\nfactor = free rank=1 peripheral=maybe", 2),
            ("name = x\nfactor = cyclic rank=3", 2),
            ("name = x\nbogus", 2),
            ("factor = free rank=1\nname = x", 2),
        ];
        for (text, line) in cases {
            let e = parse_group_spec(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
        assert_eq!(parse_group_spec("name = x\n").unwrap_err().kind, ParseErrorKind::NoFactors);
        assert_eq!(parse_group_spec("factor = free rank=1").unwrap_err().kind, ParseErrorKind::MissingName);
        assert!(matches!(
            parse_group_spec("name = x\nfactor = free rank=1 label=F\nfactor = free rank=2 label=F")
                .unwrap_err()
                .kind,
            ParseErrorKind::DuplicateLabel(_)
        ));
    }

    #[test]
    fn validation_warnings() {
        let z2z = parse_group_spec("name = a\nfactor = abelian rank=2\nfactor = free rank=1").unwrap();
        assert!(validate(&z2z).warnings.is_empty());

        let z = parse_group_spec("name = Z\nfactor = free rank=1").unwrap();
        let r = validate(&z);
        assert!(r.is_accepted());
        assert!(r.warnings.iter().any(|w| w.contains("virtually cyclic")));

        let dih = parse_group_spec("name = D\nfactor = cyclic order=2\nfactor = cyclic order=2").unwrap();
        assert!(validate(&dih).warnings.iter().any(|w| w.contains("virtually cyclic")));

        let finite = parse_group_spec("name = C5\nfactor = cyclic order=5").unwrap();
        assert!(validate(&finite).warnings.iter().any(|w| w.contains("finite")));

        let flat = parse_group_spec("name = x\nfactor = abelian rank=2 peripheral=no\nfactor = cyclic order=3").unwrap();
        assert!(validate(&flat).warnings.iter().any(|w| w.contains("not hyperbolic relative")));
    }
}
