//! Rule bases, their text format and extraction from labelled rows.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::membership::{FuzzyFeature, FuzzySystem};
use super::FexaiError;

/// Set indices for (MDRate, FltSegments, MDirection).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Antecedent(pub [u8; 3]);

impl Antecedent {
    pub fn new(sets: [u8; 3]) -> Result<Self, FexaiError> {
        if sets.iter().any(|&s| s > 2) {
            return Err(FexaiError::InvalidRule(format!("set index out of range: {sets:?}")));
        }
        Ok(Antecedent(sets))
    }

    pub fn all() -> impl Iterator<Item = Antecedent> {
        (0..27u8).map(|i| Antecedent([i / 9, (i / 3) % 3, i % 3]))
    }

    pub fn label(&self, i: usize) -> &'static str {
        FuzzyFeature::ALL[i].set_labels()[self.0[i] as usize]
    }
}

impl fmt::Display for Antecedent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MDRate IS {} AND FltSegments IS {} AND MDirection IS {}",
            self.label(0),
            self.label(1),
            self.label(2)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Consequent {
    Low,
    NotLow,
}

impl Consequent {
    pub fn as_str(self) -> &'static str {
        match self {
            Consequent::Low => "Low",
            Consequent::NotLow => "Not Low",
        }
    }

    /// Crisp activation: 0 for Low, 1 for Not Low.
    pub fn activation(self) -> f64 {
        match self {
            Consequent::Low => 0.0,
            Consequent::NotLow => 1.0,
        }
    }

    /// Class index under the Low vs Not Low scenario.
    pub fn class(self) -> usize {
        match self {
            Consequent::Low => 0,
            Consequent::NotLow => 1,
        }
    }

    pub fn from_class(c: usize) -> Result<Self, FexaiError> {
        match c {
            0 => Ok(Consequent::Low),
            1 => Ok(Consequent::NotLow),
            _ => Err(FexaiError::InvalidRule(format!("class {c}"))),
        }
    }
}

impl fmt::Display for Consequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedent: Antecedent,
    pub consequent: Consequent,
    pub support: usize,
}

impl fmt::Display for FuzzyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "IF {} THEN CDOCAT IS {} # support={}",
            self.antecedent, self.consequent, self.support
        )
    }
}

/// Rules with unique antecedents, kept in insertion order. Fallback
/// matching breaks ties by this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleBase {
    rules: Vec<FuzzyRule>,
}

impl RuleBase {
    pub fn new(rules: Vec<FuzzyRule>) -> Result<Self, FexaiError> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.antecedent) {
                return Err(FexaiError::DuplicateAntecedent(r.antecedent.to_string()));
            }
            if r.support == 0 {
                return Err(FexaiError::InvalidRule("support must be >= 1".into()));
            }
        }
        Ok(RuleBase { rules })
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, a: Antecedent) -> Option<&FuzzyRule> {
        self.rules.iter().find(|r| r.antecedent == a)
    }

    /// Antecedent to consequent pairs, ignoring support and order.
    pub fn pairs(&self) -> BTreeMap<Antecedent, Consequent> {
        self.rules.iter().map(|r| (r.antecedent, r.consequent)).collect()
    }

    pub fn write<W: Write>(&self, mut w: W, preamble: &[String]) -> std::io::Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        for r in &self.rules {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, &[]).expect("write to vec");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Parses one rule per line. Blank lines and lines starting with `#`
    /// are skipped; a line may start with a rule number and end with
    /// `# support=N` (support defaults to 1).
    pub fn parse(text: &str) -> Result<Self, FexaiError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            rules.push(parse_rule(line).map_err(|reason| FexaiError::Parse { line: i + 1, reason })?);
        }
        RuleBase::new(rules)
    }
}

fn parse_rule(line: &str) -> Result<FuzzyRule, String> {
    let (body, comment) = match line.split_once('#') {
        Some((b, c)) => (b, Some(c.trim())),
        None => (line, None),
    };
    let support = match comment {
        None => 1,
        Some(c) => c
            .strip_prefix("support=")
            .and_then(|n| n.trim().parse::<usize>().ok())
            .ok_or_else(|| format!("bad trailing comment `{c}`"))?,
    };
    let mut tokens: Vec<&str> = body.split_whitespace().collect();
    if tokens.first().is_some_and(|t| t.chars().all(|c| c.is_ascii_digit())) {
        tokens.remove(0);
    }
    let expect = |tokens: &[&str], at: usize, word: &str| -> Result<(), String> {
        match tokens.get(at) {
            Some(t) if *t == word => Ok(()),
            Some(t) => Err(format!("expected `{word}`, found `{t}`")),
            None => Err(format!("expected `{word}`, found end of line")),
        }
    };
    expect(&tokens, 0, "IF")?;
    let mut sets = [0u8; 3];
    for (i, f) in FuzzyFeature::ALL.into_iter().enumerate() {
        let base = 1 + 4 * i;
        expect(&tokens, base, f.name())?;
        expect(&tokens, base + 1, "IS")?;
        let label = tokens.get(base + 2).ok_or("missing set label")?;
        sets[i] = f
            .set_index(label)
            .ok_or_else(|| format!("unknown {} set `{label}`", f.name()))? as u8;
        expect(&tokens, base + 3, if i < 2 { "AND" } else { "THEN" })?;
    }
    expect(&tokens, 13, "CDOCAT")?;
    expect(&tokens, 14, "IS")?;
    let consequent = match &tokens[15.min(tokens.len())..] {
        ["Low"] => Consequent::Low,
        ["Not", "Low"] => Consequent::NotLow,
        other => return Err(format!("bad consequent `{}`", other.join(" "))),
    };
    Ok(FuzzyRule {
        antecedent: Antecedent(sets),
        consequent,
        support,
    })
}

/// One rule per distinct antecedent; mixed labels resolve by majority with
/// ties going to Low. Rules come out sorted by antecedent.
pub fn extract_rules(rows: &[[f64; 3]], labels: &[Consequent], system: &FuzzySystem) -> Result<RuleBase, FexaiError> {
    if rows.is_empty() {
        return Err(FexaiError::EmptyTraining);
    }
    if rows.len() != labels.len() {
        return Err(FexaiError::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let mut votes: BTreeMap<Antecedent, [usize; 2]> = BTreeMap::new();
    for (r, l) in rows.iter().zip(labels) {
        votes.entry(system.antecedent(r)?).or_default()[l.class()] += 1;
    }
    let rules = votes
        .into_iter()
        .map(|(antecedent, [low, not_low])| FuzzyRule {
            antecedent,
            consequent: if not_low > low {
                Consequent::NotLow
            } else {
                Consequent::Low
            },
            support: low + not_low,
        })
        .collect();
    RuleBase::new(rules)
}

/// Exact antecedent match if present, otherwise the consequent of the rule
/// with maximal product activation (first such rule on ties).
pub fn infer(rb: &RuleBase, system: &FuzzySystem, values: &[f64; 3]) -> Result<f64, FexaiError> {
    if rb.is_empty() {
        return Err(FexaiError::EmptyRuleBase);
    }
    let a = system.antecedent(values)?;
    if let Some(r) = rb.get(a) {
        return Ok(r.consequent.activation());
    }
    let deg = system.degrees(values)?;
    let mut best: Option<(f64, &FuzzyRule)> = None;
    for r in rb.rules() {
        let act: f64 = (0..3).map(|i| deg[i][r.antecedent.0[i] as usize]).product();
        if best.is_none_or(|(b, _)| act > b) {
            best = Some((act, r));
        }
    }
    Ok(best.expect("non-empty").1.consequent.activation())
}

pub fn defuzzify(activation: f64) -> Result<Consequent, FexaiError> {
    if !(0.0..=1.0).contains(&activation) {
        return Err(FexaiError::OutOfRange(activation));
    }
    Ok(if activation >= 0.5 {
        Consequent::NotLow
    } else {
        Consequent::Low
    })
}

pub fn predict(rb: &RuleBase, system: &FuzzySystem, values: &[f64; 3]) -> Result<Consequent, FexaiError> {
    defuzzify(infer(rb, system, values)?)
}

/// Merges per-fold rule bases: supports of identical (antecedent,
/// consequent) pairs add up; conflicting consequents resolve by total
/// support with ties going to Low.
pub fn union_rule_bases(bases: &[RuleBase]) -> Result<RuleBase, FexaiError> {
    let mut totals: BTreeMap<Antecedent, [usize; 2]> = BTreeMap::new();
    for rb in bases {
        for r in rb.rules() {
            totals.entry(r.antecedent).or_default()[r.consequent.class()] += r.support;
        }
    }
    let rules = totals
        .into_iter()
        .map(|(antecedent, [low, not_low])| {
            let (consequent, support) = if not_low > low {
                (Consequent::NotLow, not_low)
            } else {
                (Consequent::Low, low)
            };
            FuzzyRule {
                antecedent,
                consequent,
                support,
            }
        })
        .collect();
    RuleBase::new(rules)
}

/// The 14-rule reference base used for closed-loop checks.
pub const REFERENCE_RULES: &str = "\
IF MDRate IS Low AND FltSegments IS Moderate AND MDirection IS Straight THEN CDOCAT IS Low
IF MDRate IS Low AND FltSegments IS Few AND MDirection IS Straight THEN CDOCAT IS Low
IF MDRate IS Low AND FltSegments IS Many AND MDirection IS Straight THEN CDOCAT IS Low
IF MDRate IS Medium AND FltSegments IS Few AND MDirection IS Moderate THEN CDOCAT IS Not Low
IF MDRate IS Medium AND FltSegments IS Few AND MDirection IS Complex THEN CDOCAT IS Not Low
IF MDRate IS Medium AND FltSegments IS Few AND MDirection IS Straight THEN CDOCAT IS Not Low
IF MDRate IS High AND FltSegments IS Few AND MDirection IS Moderate THEN CDOCAT IS Not Low
IF MDRate IS High AND FltSegments IS Few AND MDirection IS Straight THEN CDOCAT IS Not Low
IF MDRate IS High AND FltSegments IS Few AND MDirection IS Complex THEN CDOCAT IS Not Low
IF MDRate IS Low AND FltSegments IS Few AND MDirection IS Moderate THEN CDOCAT IS Not Low
IF MDRate IS Low AND FltSegments IS Few AND MDirection IS Complex THEN CDOCAT IS Not Low
IF MDRate IS Low AND FltSegments IS Moderate AND MDirection IS Moderate THEN CDOCAT IS Low
IF MDRate IS Low AND FltSegments IS Many AND MDirection IS Complex THEN CDOCAT IS Low
IF MDRate IS Low AND FltSegments IS Moderate AND MDirection IS Complex THEN CDOCAT IS Low
";

pub fn reference_rule_base() -> RuleBase {
    RuleBase::parse(REFERENCE_RULES).expect("reference rules parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> FuzzySystem {
        FuzzySystem::default()
    }

    #[test]
    fn reference_base_shape() {
        let rb = reference_rule_base();
        assert_eq!(rb.len(), 14);
        let not_low = rb.rules().iter().filter(|r| r.consequent == Consequent::NotLow).count();
        assert_eq!(not_low, 8);
        assert_eq!(
            rb.rules()[3].to_string(),
            "IF MDRate IS Medium AND FltSegments IS Few AND MDirection IS Moderate THEN CDOCAT IS Not Low # support=1"
        );
    }

    #[test]
    fn text_round_trip() {
        let rb = reference_rule_base();
        let text = rb.to_text();
        assert_eq!(RuleBase::parse(&text).unwrap(), rb);
        assert_eq!(RuleBase::parse(&text).unwrap().to_text(), text);
        let numbered =
            "4\tIF MDRate IS Medium AND FltSegments IS Few AND MDirection IS Moderate THEN CDOCAT IS Not Low\n";
        assert_eq!(
            RuleBase::parse(numbered).unwrap().rules()[0].consequent,
            Consequent::NotLow
        );
    }

    #[test]
    fn parse_errors_carry_line() {
        let bad =
            "# header\n\nIF MDRate IS Huge AND FltSegments IS Few AND MDirection IS Moderate THEN CDOCAT IS Low\n";
        assert!(matches!(RuleBase::parse(bad), Err(FexaiError::Parse { line: 3, .. })));
        let first = REFERENCE_RULES.lines().next().unwrap();
        let dup = format!("{first}\n{first}\n");
        assert!(RuleBase::parse(&dup).is_err());
    }

    #[test]
    fn extraction_majority_and_ties() {
        let row = [0.03, 100.0, 1.5];
        let r = extract_rules(&[row], &[Consequent::NotLow], &sys()).unwrap();
        assert_eq!(r.rules()[0].antecedent, reference_rule_base().rules()[3].antecedent);
        let three = extract_rules(
            &[row, row, row],
            &[Consequent::Low, Consequent::Low, Consequent::NotLow],
            &sys(),
        )
        .unwrap();
        assert_eq!(three.rules()[0].consequent, Consequent::Low);
        assert_eq!(three.rules()[0].support, 3);
        let tie = extract_rules(&[row, row], &[Consequent::NotLow, Consequent::Low], &sys()).unwrap();
        assert_eq!(tie.rules()[0].consequent, Consequent::Low);
        assert!(matches!(
            extract_rules(&[], &[], &sys()),
            Err(FexaiError::EmptyTraining)
        ));
    }

    #[test]
    fn inference_with_reference_base() {
        let rb = reference_rule_base();
        // (High, Few, Straight)
        assert_eq!(predict(&rb, &sys(), &[0.06, 100.0, 1.0]).unwrap(), Consequent::NotLow);
        // (Low, Many, Straight)
        assert_eq!(predict(&rb, &sys(), &[0.01, 900.0, 1.0]).unwrap(), Consequent::Low);
    }

    #[test]
    fn fallback_single_rule() {
        let rb = RuleBase::new(vec![FuzzyRule {
            antecedent: Antecedent([2, 2, 2]),
            consequent: Consequent::NotLow,
            support: 1,
        }])
        .unwrap();
        assert_eq!(infer(&rb, &sys(), &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let empty = RuleBase::new(vec![]).unwrap();
        assert!(matches!(
            infer(&empty, &sys(), &[0.0, 0.0, 0.0]),
            Err(FexaiError::EmptyRuleBase)
        ));
    }

    #[test]
    fn fallback_prefers_closest_rule() {
        let rb = RuleBase::new(vec![
            FuzzyRule {
                antecedent: Antecedent([0, 0, 0]),
                consequent: Consequent::Low,
                support: 1,
            },
            FuzzyRule {
                antecedent: Antecedent([2, 2, 2]),
                consequent: Consequent::NotLow,
                support: 1,
            },
        ])
        .unwrap();
        // (Medium, Many, Complex) just past the MDRate crossing
        assert_eq!(predict(&rb, &sys(), &[0.043, 900.0, 3.0]).unwrap(), Consequent::NotLow);
    }

    #[test]
    fn defuzzify_boundaries() {
        assert_eq!(defuzzify(1.0).unwrap(), Consequent::NotLow);
        assert_eq!(defuzzify(0.0).unwrap(), Consequent::Low);
        assert_eq!(defuzzify(0.5).unwrap(), Consequent::NotLow);
        assert!(matches!(defuzzify(1.5), Err(FexaiError::OutOfRange(_))));
    }

    #[test]
    fn union_resolves_by_total_support() {
        let rule = |c, s| FuzzyRule {
            antecedent: Antecedent([0, 1, 2]),
            consequent: c,
            support: s,
        };
        let a = RuleBase::new(vec![rule(Consequent::NotLow, 3)]).unwrap();
        let b = RuleBase::new(vec![rule(Consequent::Low, 2)]).unwrap();
        let c = RuleBase::new(vec![rule(Consequent::Low, 1)]).unwrap();
        let u = union_rule_bases(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(u.rules()[0].consequent, Consequent::NotLow);
        assert_eq!(u.rules()[0].support, 3);
        let tie = union_rule_bases(&[a, b, c]).unwrap();
        assert_eq!(tie.rules()[0].consequent, Consequent::Low);
    }
}
