//! Conditional active-diagnosis plans over the active diagnoser.
//!
//! The search space is an AND-OR graph. A decision node sits on a quiet
//! diagnoser state (no response can be observed there) and chooses one
//! action. An outcome node sits on a state where responses are pending and
//! must handle every feasible response. A response that leads back to the
//! state the last decision was taken from taught nothing; outcome nodes with
//! such a response are cut, since repeating the same step cannot progress
//! against an adversarial choice of responses.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::active::{ActiveDiagnoser, AdStateId, Tag};
use crate::cost::Cost;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    #[default]
    All,
    DepthFirst,
    CheapestFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    WorstCase,
    Sum,
    Average,
}

impl FromStr for Exploration {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Exploration::All),
            "depth_first" | "depth-first" => Ok(Exploration::DepthFirst),
            "cheapest_first" | "cheapest-first" => Ok(Exploration::CheapestFirst),
            _ => Err(format!(
                "unknown exploration `{s}` (all, depth_first, cheapest_first)"
            )),
        }
    }
}

impl FromStr for Aggregation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "worst_case" | "worst-case" => Ok(Aggregation::WorstCase),
            "sum" => Ok(Aggregation::Sum),
            "average" => Ok(Aggregation::Average),
            _ => Err(format!(
                "unknown criterion `{s}` (worst_case, sum, average)"
            )),
        }
    }
}

impl fmt::Display for Exploration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exploration::All => "all",
            Exploration::DepthFirst => "depth_first",
            Exploration::CheapestFirst => "cheapest_first",
        })
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::WorstCase => "worst_case",
            Aggregation::Sum => "sum",
            Aggregation::Average => "average",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub exploration: Exploration,
    pub aggregation: Aggregation,
    /// `None` means unbounded.
    pub cost_budget: Option<Cost>,
    /// Maximum number of AND-OR nodes the search may create.
    pub node_limit: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            exploration: Exploration::All,
            aggregation: Aggregation::WorstCase,
            cost_budget: None,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

pub const DEFAULT_NODE_LIMIT: usize = 100_000;

/// Value iteration rounds allowed under `average`, where values may keep
/// shrinking through cycles without ever settling.
const AVERAGE_ROUNDS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("root state has no discriminable target fault")]
    RootNotSolvable,
    #[error("no plan resolves the discriminable faults from this root")]
    NoPlan,
    #[error("no plan within the cost budget {budget} (lower bound {bound})")]
    BudgetExhausted { budget: Cost, bound: Cost },
    #[error("search exceeded the node limit of {0}")]
    NodeLimit(usize),
    #[error("unknown target fault `{0}`")]
    UnknownTarget(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanVerdict {
    Sure,
    Safe,
    Unsolvable,
}

impl fmt::Display for PlanVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanVerdict::Sure => "sure",
            PlanVerdict::Safe => "safe",
            PlanVerdict::Unsolvable => "unsolvable",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanNode {
    Act {
        action: String,
        cost: Cost,
        next: Box<PlanNode>,
    },
    Branch {
        children: BTreeMap<String, PlanNode>,
    },
    Leaf {
        verdicts: BTreeMap<String, PlanVerdict>,
    },
}

impl PlanNode {
    pub fn leaves(&self) -> Vec<&BTreeMap<String, PlanVerdict>> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let PlanNode::Leaf { verdicts, .. } = n {
                out.push(verdicts);
            }
        });
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Pre-order traversal, branch children in response-name order.
    pub fn visit<'p>(&'p self, f: &mut impl FnMut(&'p PlanNode)) {
        f(self);
        match self {
            PlanNode::Act { next, .. } => next.visit(f),
            PlanNode::Branch { children } => children.values().for_each(|c| c.visit(f)),
            PlanNode::Leaf { .. } => {}
        }
    }

    /// Longest chain of nested nodes.
    pub fn depth(&self) -> usize {
        match self {
            PlanNode::Act { next, .. } => 1 + next.depth(),
            PlanNode::Branch { children } => {
                1 + children.values().map(PlanNode::depth).max().unwrap_or(0)
            }
            PlanNode::Leaf { .. } => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanMeta {
    pub exploration: Exploration,
    pub aggregation: Aggregation,
    pub cost: Cost,
    /// True when the search guarantees the cost is minimal.
    pub optimal: bool,
    #[serde(default)]
    pub cost_budget: Option<Cost>,
    /// Number of AND-OR nodes created by the search.
    #[serde(default)]
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalPlan {
    pub targets: Vec<String>,
    /// Observations leading from the diagnoser's initial state to the root,
    /// when the root was given that way.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_trace: Option<Vec<String>>,
    pub meta: PlanMeta,
    pub root: PlanNode,
}

impl ConditionalPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans always serialize")
    }

    pub fn from_json(text: &str) -> Result<ConditionalPlan, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Verdicts of a leaf in target order.
    pub fn ordered(&self, verdicts: &BTreeMap<String, PlanVerdict>) -> Vec<PlanVerdict> {
        self.targets
            .iter()
            .map(|t| verdicts.get(t).copied().unwrap_or(PlanVerdict::Unsolvable))
            .collect()
    }
}

/// Cost of a plan under an aggregation criterion.
///
/// `average` is the expectation when every feasible response of a branch is
/// equally likely.
pub fn plan_cost(p: &PlanNode, aggregation: Aggregation) -> Cost {
    match p {
        PlanNode::Leaf { .. } => Cost::ZERO,
        PlanNode::Act { cost, next, .. } => *cost + plan_cost(next, aggregation),
        PlanNode::Branch { children } => {
            let costs = children.values().map(|c| plan_cost(c, aggregation));
            match aggregation {
                Aggregation::WorstCase => costs.max().unwrap_or(Cost::ZERO),
                Aggregation::Sum => costs.sum(),
                Aggregation::Average => {
                    if children.is_empty() {
                        Cost::ZERO
                    } else {
                        costs.sum::<Cost>() / children.len()
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    /// Choose an action at a quiet diagnoser state.
    Decision(AdStateId),
    /// Wait for a response at `at`; `origin` is the state the last decision
    /// was taken from.
    Outcome {
        origin: Option<AdStateId>,
        at: AdStateId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrChild {
    Cut,
    Node(NodeKey),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AndEdge {
    pub action: usize,
    pub cost: Cost,
    pub target: NodeKey,
}

/// The AND-OR graph induced by an active diagnoser, generated on demand.
pub struct SearchSpace<'a> {
    ad: &'a ActiveDiagnoser,
    targets: Vec<usize>,
    actions: Vec<usize>,
}

impl<'a> SearchSpace<'a> {
    /// `targets` are fault names; an empty list selects every diagnoser target.
    pub fn new(ad: &'a ActiveDiagnoser, targets: &[&str]) -> Result<SearchSpace<'a>, PlanError> {
        let targets = if targets.is_empty() {
            (0..ad.targets().len()).collect()
        } else {
            targets
                .iter()
                .map(|t| {
                    ad.target_index(t)
                        .ok_or_else(|| PlanError::UnknownTarget(t.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        let actions = ad
            .observables()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.action)
            .map(|(o, _)| o)
            .collect();
        Ok(SearchSpace {
            ad,
            targets,
            actions,
        })
    }

    pub fn diagnoser(&self) -> &ActiveDiagnoser {
        self.ad
    }

    pub fn target_names(&self) -> Vec<String> {
        self.targets
            .iter()
            .map(|&i| self.ad.targets()[i].clone())
            .collect()
    }

    fn has_responses(&self, s: AdStateId) -> bool {
        self.ad.feasible_responses(s).next().is_some()
    }

    /// True when no target fault can still be settled from `s`: each is
    /// certain, nondiscriminable, or ambiguous only because it may yet occur.
    pub fn is_goal(&self, s: AdStateId) -> bool {
        self.targets.iter().all(|&i| !self.ad.is_pending(s, i))
    }

    pub fn all_certain(&self, s: AdStateId) -> bool {
        self.targets.iter().all(|&i| self.ad.tag(s, i).is_certain())
    }

    pub fn verdicts(&self, s: AdStateId) -> BTreeMap<String, PlanVerdict> {
        self.targets
            .iter()
            .map(|&i| {
                let v = match self.ad.tag(s, i) {
                    Tag::Sure => PlanVerdict::Sure,
                    Tag::Safe => PlanVerdict::Safe,
                    _ => PlanVerdict::Unsolvable,
                };
                (self.ad.targets()[i].clone(), v)
            })
            .collect()
    }

    /// Node reached at `t`, given the state the last decision was taken from.
    pub fn node_at(&self, origin: Option<AdStateId>, t: AdStateId) -> NodeKey {
        if self.has_responses(t) {
            NodeKey::Outcome { origin, at: t }
        } else {
            NodeKey::Decision(t)
        }
    }

    pub fn root_node(&self, s: AdStateId) -> NodeKey {
        self.node_at(None, s)
    }

    /// One edge per action whose successor is not the sink.
    pub fn create_and_successors(&self, s: AdStateId) -> Vec<AndEdge> {
        self.actions
            .iter()
            .filter_map(|&a| {
                let t = self.ad.delta(s, a);
                (!self.ad.is_sink(t)).then(|| AndEdge {
                    action: a,
                    cost: self.ad.observables()[a].cost,
                    target: self.node_at(Some(s), t),
                })
            })
            .collect()
    }

    /// One child per feasible response at `at`.
    pub fn create_or_successors(
        &self,
        origin: Option<AdStateId>,
        at: AdStateId,
    ) -> Vec<(usize, OrChild)> {
        self.ad
            .feasible_responses(at)
            .map(|r| {
                let u = self.ad.delta(at, r);
                let child = if Some(u) == origin {
                    OrChild::Cut
                } else {
                    OrChild::Node(self.node_at(origin, u))
                };
                (r, child)
            })
            .collect()
    }

    fn event_name(&self, o: usize) -> &str {
        &self.ad.observables()[o].name
    }

    fn min_action_cost(&self, s: AdStateId) -> Option<Cost> {
        self.create_and_successors(s)
            .into_iter()
            .map(|e| e.cost)
            .min()
    }
}

type Value = Option<Cost>;

#[derive(Clone, Debug)]
enum Expansion {
    Goal,
    Decision(Vec<(usize, Cost, usize)>),
    Outcome(Vec<(usize, Option<usize>)>),
}

/// Explicit part of the AND-OR graph.
struct Graph {
    keys: Vec<NodeKey>,
    index: HashMap<NodeKey, usize>,
    expansions: Vec<Option<Expansion>>,
    limit: usize,
}

impl Graph {
    fn new(limit: usize) -> Graph {
        Graph {
            keys: Vec::new(),
            index: HashMap::new(),
            expansions: Vec::new(),
            limit,
        }
    }

    fn intern(&mut self, key: NodeKey) -> Result<usize, PlanError> {
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        if self.keys.len() >= self.limit {
            return Err(PlanError::NodeLimit(self.limit));
        }
        self.keys.push(key);
        self.expansions.push(None);
        self.index.insert(key, self.keys.len() - 1);
        Ok(self.keys.len() - 1)
    }

    fn expand(&mut self, space: &SearchSpace, i: usize) -> Result<Vec<usize>, PlanError> {
        if self.expansions[i].is_some() {
            return Ok(Vec::new());
        }
        let mut fresh = Vec::new();
        let mut intern = |g: &mut Graph, key: NodeKey| -> Result<usize, PlanError> {
            let before = g.keys.len();
            let j = g.intern(key)?;
            if j == before {
                fresh.push(j);
            }
            Ok(j)
        };
        let exp = match self.keys[i] {
            NodeKey::Decision(s) if space.is_goal(s) => Expansion::Goal,
            NodeKey::Decision(s) => {
                let mut edges = Vec::new();
                for e in space.create_and_successors(s) {
                    edges.push((e.action, e.cost, intern(self, e.target)?));
                }
                Expansion::Decision(edges)
            }
            NodeKey::Outcome { origin, at } => {
                let mut kids = Vec::new();
                for (r, c) in space.create_or_successors(origin, at) {
                    let c = match c {
                        OrChild::Cut => None,
                        OrChild::Node(k) => Some(intern(self, k)?),
                    };
                    kids.push((r, c));
                }
                Expansion::Outcome(kids)
            }
        };
        self.expansions[i] = Some(exp);
        Ok(fresh)
    }

    fn tip_value(&self, space: &SearchSpace, i: usize) -> Value {
        match self.keys[i] {
            NodeKey::Decision(s) if space.is_goal(s) => Some(Cost::ZERO),
            NodeKey::Decision(s) => space.min_action_cost(s),
            NodeKey::Outcome { .. } => Some(Cost::ZERO),
        }
    }
}

/// Values of every explicit node at every iteration, stored as change points.
struct Values {
    history: Vec<Vec<(usize, Value)>>,
    rounds: usize,
}

impl Values {
    fn at(&self, i: usize, k: usize) -> Value {
        let h = &self.history[i];
        let pos = h.partition_point(|(kk, _)| *kk <= k);
        h[pos - 1].1
    }

    fn last(&self, i: usize) -> Value {
        self.history[i].last().expect("history starts at round 0").1
    }

    /// First round at which node `i` holds its final value.
    fn rank(&self, i: usize) -> usize {
        self.history[i].last().expect("history starts at round 0").0
    }
}

fn aggregate(aggregation: Aggregation, children: &[Value]) -> Value {
    let mut acc: Vec<Cost> = Vec::with_capacity(children.len());
    for c in children {
        acc.push((*c)?);
    }
    Some(match aggregation {
        Aggregation::WorstCase => acc.into_iter().max().unwrap_or(Cost::ZERO),
        Aggregation::Sum => acc.into_iter().sum(),
        Aggregation::Average => acc.iter().copied().sum::<Cost>() / acc.len().max(1),
    })
}

fn node_value(exp: &Expansion, prev: &impl Fn(usize) -> Value, aggregation: Aggregation) -> Value {
    match exp {
        Expansion::Goal => Some(Cost::ZERO),
        Expansion::Decision(edges) => edges
            .iter()
            .filter_map(|&(_, c, j)| prev(j).map(|v| c + v))
            .min(),
        Expansion::Outcome(kids) => {
            let vals: Vec<Value> = kids.iter().map(|(_, c)| c.and_then(prev)).collect();
            aggregate(aggregation, &vals)
        }
    }
}

/// Depth-indexed value iteration from infinity: round k holds the best value
/// of plans at most k nodes deep, with unexpanded tips at their estimate.
fn evaluate(g: &Graph, space: &SearchSpace, aggregation: Aggregation) -> Values {
    let n = g.keys.len();
    let mut cur: Vec<Value> = (0..n)
        .map(|i| match &g.expansions[i] {
            None => g.tip_value(space, i),
            Some(Expansion::Goal) => Some(Cost::ZERO),
            Some(_) => None,
        })
        .collect();
    let mut history: Vec<Vec<(usize, Value)>> = cur.iter().map(|v| vec![(0, *v)]).collect();
    let cap = match aggregation {
        Aggregation::Average => AVERAGE_ROUNDS,
        _ => usize::MAX,
    };
    let mut k = 0;
    while k < cap {
        let prev = cur.clone();
        let mut changed = false;
        for i in 0..n {
            let Some(exp) = &g.expansions[i] else {
                continue;
            };
            let v = node_value(exp, &|j| prev[j], aggregation);
            if v != cur[i] {
                cur[i] = v;
                history[i].push((k + 1, v));
                changed = true;
            }
        }
        if !changed {
            break;
        }
        k += 1;
    }
    Values { history, rounds: k }
}

struct Extractor<'g, 's, 'a> {
    g: &'g Graph,
    space: &'s SearchSpace<'a>,
    values: &'g Values,
    tips: Vec<usize>,
}

impl Extractor<'_, '_, '_> {
    fn leaf(&self, s: AdStateId) -> PlanNode {
        PlanNode::Leaf {
            verdicts: self.space.verdicts(s),
        }
    }

    fn state_of(&self, i: usize) -> AdStateId {
        match self.g.keys[i] {
            NodeKey::Decision(s) => s,
            NodeKey::Outcome { at, .. } => at,
        }
    }

    /// Best plan at node `i` using at most `k` rounds.
    fn extract(&mut self, i: usize, k: usize) -> PlanNode {
        let target = self.values.at(i, k);
        match &self.g.expansions[i] {
            None => {
                self.tips.push(i);
                self.leaf(self.state_of(i))
            }
            Some(Expansion::Goal) => self.leaf(self.state_of(i)),
            Some(Expansion::Decision(edges)) => {
                let &(a, c, j) = edges
                    .iter()
                    .find(|&&(_, c, j)| self.values.at(j, k - 1).map(|v| c + v) == target)
                    .expect("finite value has a witnessing action");
                PlanNode::Act {
                    action: self.space.event_name(a).to_string(),
                    cost: c,
                    next: Box::new(self.extract(j, k - 1)),
                }
            }
            Some(Expansion::Outcome(kids)) => {
                let mut children = BTreeMap::new();
                for &(r, c) in kids {
                    let j = c.expect("finite outcome has no cut response");
                    children.insert(self.space.event_name(r).to_string(), self.extract(j, k - 1));
                }
                PlanNode::Branch { children }
            }
        }
    }
}

fn extract_best(g: &Graph, space: &SearchSpace, values: &Values) -> (PlanNode, Vec<usize>) {
    let mut ex = Extractor {
        g,
        space,
        values,
        tips: Vec::new(),
    };
    let plan = ex.extract(0, values.rank(0));
    let mut tips = ex.tips;
    tips.sort_unstable();
    tips.dedup();
    (plan, tips)
}

fn check_root(space: &SearchSpace, root: AdStateId) -> Result<Option<PlanNode>, PlanError> {
    if space.ad.is_sink(root) {
        return Err(PlanError::RootNotSolvable);
    }
    if space.all_certain(root) {
        return Ok(Some(PlanNode::Leaf {
            verdicts: space.verdicts(root),
        }));
    }
    if space.is_goal(root) {
        return Err(PlanError::RootNotSolvable);
    }
    Ok(None)
}

fn check_budget(cost: Cost, budget: Option<Cost>) -> Result<(), PlanError> {
    match budget {
        Some(b) if cost > b => Err(PlanError::BudgetExhausted {
            budget: b,
            bound: cost,
        }),
        _ => Ok(()),
    }
}

fn finish(
    space: &SearchSpace,
    opts: &SearchOptions,
    root: PlanNode,
    optimal: bool,
    nodes: usize,
) -> ConditionalPlan {
    let cost = plan_cost(&root, opts.aggregation);
    ConditionalPlan {
        targets: space.target_names(),
        root_trace: None,
        meta: PlanMeta {
            exploration: opts.exploration,
            aggregation: opts.aggregation,
            cost,
            optimal,
            cost_budget: opts.cost_budget,
            nodes,
        },
        root,
    }
}

/// Searches for a conditional plan from `root` resolving the discriminable
/// `targets` (all diagnoser targets when empty).
pub fn ao_search(
    ad: &ActiveDiagnoser,
    root: AdStateId,
    targets: &[&str],
    opts: &SearchOptions,
) -> Result<ConditionalPlan, PlanError> {
    let space = SearchSpace::new(ad, targets)?;
    if let Some(leaf) = check_root(&space, root)? {
        return Ok(finish(&space, opts, leaf, true, 1));
    }
    match opts.exploration {
        Exploration::All => best_first(&space, root, opts),
        Exploration::DepthFirst | Exploration::CheapestFirst => depth_first(&space, root, opts),
    }
}

fn best_first(
    space: &SearchSpace,
    root: AdStateId,
    opts: &SearchOptions,
) -> Result<ConditionalPlan, PlanError> {
    let mut g = Graph::new(opts.node_limit);
    g.intern(space.root_node(root))?;
    g.expand(space, 0)?;
    loop {
        let values = evaluate(&g, space, opts.aggregation);
        let bound = values.last(0).ok_or(PlanError::NoPlan)?;
        check_budget(bound, opts.cost_budget)?;
        let (plan, tips) = extract_best(&g, space, &values);
        if tips.is_empty() {
            let optimal =
                opts.aggregation != Aggregation::Average || values.rounds < AVERAGE_ROUNDS;
            return Ok(finish(space, opts, plan, optimal, g.keys.len()));
        }
        for t in tips {
            g.expand(space, t)?;
        }
    }
}

/// Exact value of the whole reachable AND-OR graph, used as a reference for
/// the best-first search.
pub fn brute_force_plan(
    ad: &ActiveDiagnoser,
    root: AdStateId,
    targets: &[&str],
    aggregation: Aggregation,
    node_limit: usize,
) -> Result<ConditionalPlan, PlanError> {
    let space = SearchSpace::new(ad, targets)?;
    let opts = SearchOptions {
        aggregation,
        node_limit,
        ..SearchOptions::default()
    };
    if let Some(leaf) = check_root(&space, root)? {
        return Ok(finish(&space, &opts, leaf, true, 1));
    }
    let mut g = Graph::new(node_limit);
    g.intern(space.root_node(root))?;
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        queue.extend(g.expand(&space, i)?);
    }
    let values = evaluate(&g, &space, aggregation);
    values.last(0).ok_or(PlanError::NoPlan)?;
    let (plan, tips) = extract_best(&g, &space, &values);
    debug_assert!(tips.is_empty());
    Ok(finish(&space, &opts, plan, true, g.keys.len()))
}

enum Dfs {
    Found(PlanNode),
    /// Failed; `pruned` records whether an ancestor check cut something off,
    /// in which case the failure may not hold in another context.
    Failed {
        pruned: bool,
    },
}

struct DepthFirst<'s, 'a> {
    space: &'s SearchSpace<'a>,
    order: Exploration,
    solved: HashMap<NodeKey, PlanNode>,
    dead: HashSet<NodeKey>,
    created: usize,
    limit: usize,
}

impl DepthFirst<'_, '_> {
    fn solve(&mut self, key: NodeKey, path: &mut Vec<NodeKey>) -> Result<Dfs, PlanError> {
        if let Some(p) = self.solved.get(&key) {
            return Ok(Dfs::Found(p.clone()));
        }
        if self.dead.contains(&key) {
            return Ok(Dfs::Failed { pruned: false });
        }
        if path.contains(&key) {
            return Ok(Dfs::Failed { pruned: true });
        }
        self.created += 1;
        if self.created > self.limit {
            return Err(PlanError::NodeLimit(self.limit));
        }
        path.push(key);
        let result = self.solve_fresh(key, path);
        path.pop();
        let result = result?;
        match &result {
            Dfs::Found(p) => {
                self.solved.insert(key, p.clone());
            }
            Dfs::Failed { pruned: false } => {
                self.dead.insert(key);
            }
            Dfs::Failed { pruned: true } => {}
        }
        Ok(result)
    }

    fn solve_fresh(&mut self, key: NodeKey, path: &mut Vec<NodeKey>) -> Result<Dfs, PlanError> {
        let space = self.space;
        match key {
            NodeKey::Decision(s) if space.is_goal(s) => Ok(Dfs::Found(PlanNode::Leaf {
                verdicts: space.verdicts(s),
            })),
            NodeKey::Decision(s) => {
                let mut edges = space.create_and_successors(s);
                if self.order == Exploration::CheapestFirst {
                    edges.sort_by(|a, b| a.cost.cmp(&b.cost).then(a.action.cmp(&b.action)));
                }
                let mut pruned = false;
                for e in edges {
                    match self.solve(e.target, path)? {
                        Dfs::Found(next) => {
                            return Ok(Dfs::Found(PlanNode::Act {
                                action: space.event_name(e.action).to_string(),
                                cost: e.cost,
                                next: Box::new(next),
                            }))
                        }
                        Dfs::Failed { pruned: p } => pruned |= p,
                    }
                }
                Ok(Dfs::Failed { pruned })
            }
            NodeKey::Outcome { origin, at } => {
                let kids = space.create_or_successors(origin, at);
                if kids.iter().any(|(_, c)| *c == OrChild::Cut) {
                    return Ok(Dfs::Failed { pruned: false });
                }
                let mut children = BTreeMap::new();
                for (r, c) in kids {
                    let child = match c {
                        OrChild::Cut => unreachable!("cut outcomes fail above"),
                        OrChild::Node(k) => match self.solve(k, path)? {
                            Dfs::Found(p) => p,
                            failed => return Ok(failed),
                        },
                    };
                    children.insert(space.event_name(r).to_string(), child);
                }
                Ok(Dfs::Found(PlanNode::Branch { children }))
            }
        }
    }
}

fn depth_first(
    space: &SearchSpace,
    root: AdStateId,
    opts: &SearchOptions,
) -> Result<ConditionalPlan, PlanError> {
    let mut dfs = DepthFirst {
        space,
        order: opts.exploration,
        solved: HashMap::new(),
        dead: HashSet::new(),
        created: 0,
        limit: opts.node_limit,
    };
    match dfs.solve(space.root_node(root), &mut Vec::new())? {
        Dfs::Found(plan) => {
            check_budget(plan_cost(&plan, opts.aggregation), opts.cost_budget)?;
            Ok(finish(space, opts, plan, false, dfs.created))
        }
        Dfs::Failed { .. } => Err(PlanError::NoPlan),
    }
}

/// Diagnoser states visited along every root-to-leaf path of `plan`,
/// paired with the leaf reached. Fails if the plan names an unknown event or
/// steps into the sink.
pub fn replay_leaves<'p>(
    ad: &ActiveDiagnoser,
    root: AdStateId,
    plan: &'p PlanNode,
) -> Result<Vec<(AdStateId, &'p PlanNode)>, String> {
    fn walk<'p>(
        ad: &ActiveDiagnoser,
        s: AdStateId,
        p: &'p PlanNode,
        out: &mut Vec<(AdStateId, &'p PlanNode)>,
    ) -> Result<(), String> {
        let step = |e: &str| -> Result<AdStateId, String> {
            let t = ad
                .successor(s, e)
                .ok_or_else(|| format!("unknown event `{e}`"))?;
            if ad.is_sink(t) {
                return Err(format!("`{e}` is impossible here"));
            }
            Ok(t)
        };
        match p {
            PlanNode::Leaf { .. } => out.push((s, p)),
            PlanNode::Act { action, next, .. } => walk(ad, step(action)?, next, out)?,
            PlanNode::Branch { children } => {
                for (r, c) in children {
                    walk(ad, step(r)?, c, out)?;
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(ad, root, plan, &mut out)?;
    Ok(out)
}
