//! Fragility classification and composition of component thresholds.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityProfile {
    /// Stressor magnitude at which the thing breaks (abstract units).
    pub threshold: f64,
    /// Ease of restoring function after breaking, 1 = fully restorable.
    pub recoverability: f64,
}

impl FragilityProfile {
    pub fn new(threshold: f64, recoverability: f64) -> Result<Self> {
        let p = Self {
            threshold,
            recoverability,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::InvalidInput(format!("threshold {} must be positive", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.recoverability) {
            return Err(Error::InvalidInput(format!(
                "recoverability {} outside [0, 1]",
                self.recoverability
            )));
        }
        Ok(())
    }
}

/// Values at or above a cutoff are labelled high.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub threshold: f64,
    pub recoverability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    /// High threshold, high recoverability (fungi).
    Q1,
    /// High threshold, low recoverability (diamond).
    Q2,
    /// Low threshold, high recoverability (fuse).
    Q3,
    /// Low threshold, low recoverability (egg).
    Q4,
}

impl Quadrant {
    pub fn archetype(&self) -> &'static str {
        match self {
            Quadrant::Q1 => "fungi",
            Quadrant::Q2 => "diamond",
            Quadrant::Q3 => "fuse",
            Quadrant::Q4 => "egg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    High,
    Low,
}

pub fn classify_quadrant(profile: &FragilityProfile, cutoffs: &Cutoffs) -> Result<Quadrant> {
    if !(cutoffs.threshold > 0.0 && cutoffs.recoverability > 0.0) {
        return Err(Error::InvalidInput("quadrant cutoffs must be positive".into()));
    }
    profile.validate()?;
    let high_t = profile.threshold >= cutoffs.threshold;
    let high_r = profile.recoverability >= cutoffs.recoverability;
    Ok(match (high_t, high_r) {
        (true, true) => Quadrant::Q1,
        (true, false) => Quadrant::Q2,
        (false, true) => Quadrant::Q3,
        (false, false) => Quadrant::Q4,
    })
}

/// Quadrant classification with its labels and conventions, for export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantReport {
    pub profile: FragilityProfile,
    pub cutoffs: Cutoffs,
    pub quadrant: Quadrant,
    pub archetype: String,
    pub threshold_level: Level,
    pub recoverability_level: Level,
    pub conventions: Vec<String>,
}

pub fn quadrant_report(profile: &FragilityProfile, cutoffs: &Cutoffs) -> Result<QuadrantReport> {
    let quadrant = classify_quadrant(profile, cutoffs)?;
    let level = |high| if high { Level::High } else { Level::Low };
    Ok(QuadrantReport {
        profile: *profile,
        cutoffs: *cutoffs,
        quadrant,
        archetype: quadrant.archetype().to_string(),
        threshold_level: level(profile.threshold >= cutoffs.threshold),
        recoverability_level: level(profile.recoverability >= cutoffs.recoverability),
        conventions: vec![
            "a value equal to its cutoff is labelled high".into(),
            "Q1 high/high, Q2 high threshold/low recoverability, Q3 low/high, Q4 low/low".into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Component(String),
    /// Breaks when any child breaks.
    Series(Vec<Node>),
    /// Breaks only when every child breaks.
    Redundant(Vec<Node>),
}

/// Components composed by a series/redundant tree in which every component
/// appears exactly once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct SystemGraph {
    components: BTreeMap<String, FragilityProfile>,
    root: Node,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    components: BTreeMap<String, FragilityProfile>,
    root: Node,
}

impl TryFrom<RawGraph> for SystemGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        SystemGraph::new(raw.components, raw.root)
    }
}

impl From<SystemGraph> for RawGraph {
    fn from(g: SystemGraph) -> Self {
        RawGraph {
            components: g.components,
            root: g.root,
        }
    }
}

impl SystemGraph {
    pub fn new(components: BTreeMap<String, FragilityProfile>, root: Node) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("a system needs at least one component".into()));
        }
        for (id, p) in &components {
            p.validate().map_err(|e| Error::InvalidInput(format!("component `{id}`: {e}")))?;
        }
        let mut uses: HashMap<&str, usize> = HashMap::new();
        fn walk<'a>(node: &'a Node, uses: &mut HashMap<&'a str, usize>) -> Result<()> {
            match node {
                Node::Component(id) => {
                    *uses.entry(id.as_str()).or_default() += 1;
                    Ok(())
                }
                Node::Series(children) | Node::Redundant(children) => {
                    if children.is_empty() {
                        return Err(Error::InvalidInput("composition groups must not be empty".into()));
                    }
                    children.iter().try_for_each(|c| walk(c, uses))
                }
            }
        }
        walk(&root, &mut uses)?;
        for (id, count) in &uses {
            if !components.contains_key(*id) {
                return Err(Error::InvalidInput(format!("tree references unknown component `{id}`")));
            }
            if *count > 1 {
                return Err(Error::InvalidInput(format!("component `{id}` appears {count} times in the tree")));
            }
        }
        if let Some(id) = components.keys().find(|id| !uses.contains_key(id.as_str())) {
            return Err(Error::InvalidInput(format!("component `{id}` is not used in the tree")));
        }
        Ok(Self { components, root })
    }

    /// Components joined in series at the top level.
    pub fn series(components: impl IntoIterator<Item = (String, FragilityProfile)>) -> Result<Self> {
        let components: BTreeMap<String, FragilityProfile> = components.into_iter().collect();
        let root = Node::Series(components.keys().cloned().map(Node::Component).collect());
        Self::new(components, root)
    }

    pub fn components(&self) -> &BTreeMap<String, FragilityProfile> {
        &self.components
    }

    pub fn root(&self) -> &Node {
        &self.root
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemThreshold {
    pub threshold: f64,
    /// Set when a redundant group contributed; the max rule for redundancy
    /// goes beyond plain weakest-link inheritance.
    pub uses_redundancy_extension: bool,
}

/// Series nodes take the minimum of their children, redundant nodes the
/// maximum.
pub fn system_threshold(graph: &SystemGraph) -> SystemThreshold {
    fn eval(node: &Node, comps: &BTreeMap<String, FragilityProfile>, redundant: &mut bool) -> f64 {
        match node {
            Node::Component(id) => comps[id].threshold,
            Node::Series(children) => children
                .iter()
                .map(|c| eval(c, comps, redundant))
                .fold(f64::INFINITY, f64::min),
            Node::Redundant(children) => {
                *redundant = true;
                children
                    .iter()
                    .map(|c| eval(c, comps, redundant))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
    let mut redundant = false;
    let threshold = eval(&graph.root, &graph.components, &mut redundant);
    SystemThreshold {
        threshold,
        uses_redundancy_extension: redundant,
    }
}

/// Illustrative cumulative-degradation model: `τ(t) = τ0 (1 - rate)^t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    /// `τ(0), ..., τ(periods)`.
    pub thresholds: Vec<f64>,
    pub stressor: f64,
    /// First period with `τ(t) <= stressor`, if any within the horizon.
    pub first_break: Option<u32>,
    pub illustrative: bool,
}

pub fn degrade_threshold(initial: f64, rate: f64, periods: u32, stressor: f64) -> Result<Degradation> {
    if !(initial.is_finite() && initial > 0.0) {
        return Err(Error::InvalidInput(format!("initial threshold {initial} must be positive")));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!("degradation rate {rate} outside [0, 1)")));
    }
    if !stressor.is_finite() {
        return Err(Error::InvalidInput(format!("stressor {stressor} is not finite")));
    }
    let thresholds: Vec<f64> = (0..=periods).map(|t| initial * (1.0 - rate).powi(t as i32)).collect();
    let first_break = thresholds.iter().position(|&tau| tau <= stressor).map(|t| t as u32);
    Ok(Degradation {
        thresholds,
        stressor,
        first_break,
        illustrative: true,
    })
}
