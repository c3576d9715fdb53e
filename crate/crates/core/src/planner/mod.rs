//! Bottleneck-cost needle planning.
//!
//! The tree grows *backwards*: it is rooted at the in-body target with the
//! tangent reversed, and every extension prepends a segment at the needle's
//! base. The tip force is fixed at the piercing force, so the internal force
//! at a new node follows from its parent's by one closed-form step and the
//! forces on the committed distal part never change.
//!
//! [`ano_plan`] wraps [`inner_plan`] in the anytime loop: after each solution
//! of cost `c` the cost ceiling becomes `c / (1 + epsilon)` and a fresh tree is
//! grown in which any extension costing more than the ceiling is invalid.

mod nearest;
mod steer;

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::force::{internal_force_profile_piecewise, segment_backstep, ForceProfile, TissueParams};
use crate::kinematics::{propagate_pose, ArcSegment, NeedlePath, Pose};

use nearest::GridIndex;
pub use steer::{random_control, steer_toward};

/// Seeded generator used by the planner: ChaCha with 8 rounds
/// (`rand_chacha::ChaCha8Rng`), a counter-based stream cipher whose output
/// for a given seed is identical on every platform.
pub type PlannerRng = ChaCha8Rng;

pub fn planner_rng(seed: u64) -> PlannerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// Maximum tissue normal force along the path (N/m).
    Force,
    /// Path length (m).
    Length,
}

impl CostMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CostMode::Force => "force",
            CostMode::Length => "length",
        }
    }
}

impl std::str::FromStr for CostMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "force" => Ok(CostMode::Force),
            "length" => Ok(CostMode::Length),
            other => Err(Error::InvalidConfig(format!("unknown cost mode `{other}`"))),
        }
    }
}

/// Planning budget. Iteration budgets make runs fully reproducible; time
/// budgets depend on machine speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Time { seconds: f64 },
    Iterations { count: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub kappa_max: f64,
    pub arc_length_min: f64,
    pub arc_length_max: f64,
    pub goal_bias: f64,
    /// Probability of a reachability-guided extension toward the sample;
    /// otherwise a random control is applied to a random node.
    pub rgrrt_fraction: f64,
    /// Steer from the nearest node that can reach the sample without
    /// exceeding `kappa_max`, rather than the nearest node outright; samples
    /// no node can reach are skipped.
    pub reachability_guided: bool,
    pub check_resolution: f64,
    pub profile_resolution: f64,
    pub budget: Budget,
    pub rng_seed: u64,
    pub epsilon: f64,
    pub cost_mode: CostMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            kappa_max: crate::environment::DEFAULT_KAPPA_MAX,
            arc_length_min: 0.005,
            arc_length_max: 0.03,
            goal_bias: 0.05,
            rgrrt_fraction: 0.9,
            reachability_guided: true,
            check_resolution: crate::environment::DEFAULT_CHECK_RESOLUTION,
            profile_resolution: 0.001,
            budget: Budget::Time { seconds: 1.0 },
            rng_seed: 0,
            epsilon: 1e-4,
            cost_mode: CostMode::Force,
        }
    }
}

impl PlannerConfig {
    /// Defaults with the scenario's curvature bound.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self {
            kappa_max: scenario.kappa_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.kappa_max > 0.0 && self.kappa_max.is_finite()) {
            return bad(format!("kappa_max must be > 0, got {}", self.kappa_max));
        }
        if !(self.arc_length_min >= crate::kinematics::MIN_SEGMENT_LENGTH
            && self.arc_length_min <= self.arc_length_max
            && self.arc_length_max.is_finite())
        {
            return bad(format!(
                "arc length range ({}, {}) is invalid",
                self.arc_length_min, self.arc_length_max
            ));
        }
        if !prob(self.goal_bias) || !prob(self.rgrrt_fraction) {
            return bad("goal_bias and rgrrt_fraction must lie in [0, 1]".into());
        }
        if !(self.check_resolution > 0.0 && self.check_resolution.is_finite()) {
            return bad(format!("check_resolution must be > 0, got {}", self.check_resolution));
        }
        if !(self.profile_resolution > 0.0 && self.profile_resolution.is_finite()) {
            return bad(format!("profile_resolution must be > 0, got {}", self.profile_resolution));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        match self.budget {
            Budget::Time { seconds } if !(seconds > 0.0 && seconds.is_finite()) => {
                bad(format!("time budget must be > 0, got {seconds}"))
            }
            Budget::Iterations { count: 0 } => bad("iteration budget must be > 0".into()),
            _ => Ok(()),
        }
    }
}

/// A node of the backward search tree. The root is the needle tip.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Backward-facing pose: the tangent points from tip toward base.
    pub pose: Pose,
    pub parent: Option<usize>,
    pub incoming_segment: Option<ArcSegment>,
    /// Internal needle force here given the piercing force at the root (N).
    pub n_internal: f64,
    /// Largest tissue normal force between the root and this node (N/m).
    pub bottleneck_cost: f64,
    pub path_length: f64,
}

impl TreeNode {
    pub fn root(target_pose: &Pose, piercing_force: f64) -> Self {
        Self {
            pose: target_pose.flipped(),
            parent: None,
            incoming_segment: None,
            n_internal: piercing_force,
            bottleneck_cost: 0.0,
            path_length: 0.0,
        }
    }

    pub fn cost(&self, mode: CostMode) -> f64 {
        match mode {
            CostMode::Force => self.bottleneck_cost,
            CostMode::Length => self.path_length,
        }
    }

    /// The child reached by appending `seg` (at the base side), or `None` if
    /// the internal force saturates.
    pub fn extend(&self, parent: usize, seg: &ArcSegment, params: &TissueParams) -> Option<TreeNode> {
        let state = segment_backstep(self.n_internal, seg, params).ok()?;
        Some(TreeNode {
            pose: propagate_pose(&self.pose, seg),
            parent: Some(parent),
            incoming_segment: Some(*seg),
            n_internal: state.n_proximal,
            bottleneck_cost: self.bottleneck_cost.max(state.f_t_max),
            path_length: self.path_length + seg.length(),
        })
    }
}

/// Cost of the node reached by appending `seg` to `parent`; `+inf` when the
/// force saturates. Non-decreasing along any root-to-leaf chain in both modes.
pub fn incremental_cost(parent: &TreeNode, seg: &ArcSegment, params: &TissueParams, mode: CostMode) -> f64 {
    match mode {
        CostMode::Force => match segment_backstep(parent.n_internal, seg, params) {
            Ok(state) => parent.bottleneck_cost.max(state.f_t_max),
            Err(_) => f64::INFINITY,
        },
        CostMode::Length => parent.path_length + seg.length(),
    }
}

/// Turns a root-to-leaf chain of the backward tree into the forward path the
/// needle executes, from the insertion site (leaf) to the target (root).
pub fn reverse_plan(chain: &[TreeNode]) -> Result<NeedlePath> {
    let backward: Vec<ArcSegment> = chain
        .iter()
        .skip(1)
        .map(|n| {
            n.incoming_segment
                .ok_or_else(|| Error::InvalidSegment("non-root node without a segment".into()))
        })
        .collect::<Result<_>>()?;
    let leaf = chain
        .last()
        .ok_or_else(|| Error::InvalidSegment("empty node chain".into()))?;
    if backward.is_empty() {
        return Err(Error::InvalidSegment("chain has no segments".into()));
    }
    // Retracing backward segment j from the flipped end pose uses roll 0 for
    // the first forward segment and, after that, the roll of the backward
    // segment that followed it (j + 1) to undo the frame twist.
    let k = backward.len();
    let mut forward = Vec::with_capacity(k);
    for j in (0..k).rev() {
        let roll = if j + 1 < k { backward[j + 1].roll() } else { 0.0 };
        forward.push(ArcSegment::new(roll, backward[j].curvature(), backward[j].length())?);
    }
    NeedlePath::new(leaf.pose.flipped(), forward)
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    /// Forward path: base at the insertion site, tip at the target.
    pub path: NeedlePath,
    /// Maximum tissue normal force along the path (N/m), whatever the mode.
    pub bottleneck_cost: f64,
    pub length: f64,
    pub profile: ForceProfile,
    /// Iterations spent (cumulative over anytime rounds) when found.
    pub iterations: u64,
    pub wall_time: f64,
    pub seed: u64,
}

impl PlanResult {
    pub fn cost(&self, mode: CostMode) -> f64 {
        match mode {
            CostMode::Force => self.bottleneck_cost,
            CostMode::Length => self.length,
        }
    }

    /// Solution document: the path serialization plus cost fields.
    pub fn to_json(&self, tissue: &TissueParams) -> String {
        #[derive(Serialize)]
        struct SolutionDoc<'a> {
            #[serde(flatten)]
            path: &'a NeedlePath,
            bottleneck_cost: f64,
            length_m: f64,
            seed: u64,
            tissue: &'a TissueParams,
        }
        let doc = SolutionDoc {
            path: &self.path,
            bottleneck_cost: self.bottleneck_cost,
            length_m: self.length,
            seed: self.seed,
            tissue,
        };
        serde_json::to_string_pretty(&doc).expect("solution serialization is infallible")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEntry {
    /// Seconds since planning started; NaN under an iteration budget, where
    /// timing is not recorded so that outputs stay reproducible.
    pub wall_time_s: f64,
    pub iteration: u64,
    pub cost: f64,
    pub path_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLog {
    pub mode: CostMode,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceLog {
    pub fn new(mode: CostMode) -> Self {
        Self {
            mode,
            entries: Vec::new(),
        }
    }

    /// Writes the `wall_time_s,iteration,cost,mode` CSV form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "wall_time_s,iteration,cost,mode")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{}", e.wall_time_s, e.iteration, e.cost, self.mode.as_str())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("wall_time_s,iteration,cost,mode") {
            return Err(Error::Parse {
                path: "header".into(),
                message: "expected `wall_time_s,iteration,cost,mode`".into(),
            });
        }
        let mut mode = None;
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::Parse {
                path: format!("line {}", i + 2),
                message: format!("malformed row `{line}`"),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(bad());
            }
            mode = Some(cols[3].parse::<CostMode>().map_err(|_| bad())?);
            entries.push(ConvergenceEntry {
                wall_time_s: cols[0].parse().map_err(|_| bad())?,
                iteration: cols[1].parse().map_err(|_| bad())?,
                cost: cols[2].parse().map_err(|_| bad())?,
                path_id: entries.len(),
            });
        }
        Ok(Self {
            mode: mode.unwrap_or(CostMode::Force),
            entries,
        })
    }
}

/// Shared budget across the anytime rounds.
struct BudgetClock {
    start: Instant,
    budget: Budget,
    iterations: u64,
}

impl BudgetClock {
    fn new(budget: Budget) -> Self {
        Self {
            start: Instant::now(),
            budget,
            iterations: 0,
        }
    }

    fn exhausted(&self) -> bool {
        match self.budget {
            Budget::Time { seconds } => self.start.elapsed().as_secs_f64() >= seconds,
            Budget::Iterations { count } => self.iterations >= count,
        }
    }

    fn stamp(&self) -> f64 {
        match self.budget {
            Budget::Time { .. } => self.start.elapsed().as_secs_f64(),
            Budget::Iterations { .. } => f64::NAN,
        }
    }
}

/// One run of the tree planner with cost ceiling `c_max`, consuming
/// `config.budget`. `Ok(None)` means the budget ran out without reaching the
/// insertion region.
pub fn inner_plan(
    scenario: &Scenario,
    config: &PlannerConfig,
    c_max: f64,
    rng: &mut PlannerRng,
) -> Result<Option<PlanResult>> {
    config.validate()?;
    check_ceiling(c_max)?;
    let mut clock = BudgetClock::new(config.budget);
    grow_tree(scenario, config, c_max, rng, &mut clock)
}

fn check_ceiling(c_max: f64) -> Result<()> {
    if c_max.is_nan() || c_max < 0.0 {
        return Err(Error::InvalidConfig(format!("cost ceiling must be >= 0, got {c_max}")));
    }
    Ok(())
}

fn sample_point(scenario: &Scenario, config: &PlannerConfig, rng: &mut PlannerRng) -> nalgebra::Vector3<f64> {
    if rng.random::<f64>() < config.goal_bias {
        return scenario.target.center;
    }
    let b = &scenario.bounds;
    nalgebra::Vector3::from_fn(|i, _| b.min[i] + rng.random::<f64>() * (b.max[i] - b.min[i]))
}

fn grow_tree(
    scenario: &Scenario,
    config: &PlannerConfig,
    c_max: f64,
    rng: &mut PlannerRng,
    clock: &mut BudgetClock,
) -> Result<Option<PlanResult>> {
    let piercing_force = scenario.piercing_force();
    let root = TreeNode::root(&scenario.start_pose, piercing_force);
    if scenario.in_target(&root.pose.position) {
        return Err(Error::validation(
            "target",
            "start position already lies in the insertion region",
        ));
    }
    let mut index = GridIndex::new(&scenario.bounds, config.arc_length_min);
    index.insert(root.pose.position);
    let mut tree = vec![root];

    while !clock.exhausted() {
        clock.iterations += 1;
        let sample = sample_point(scenario, config, rng);
        let (parent_id, seg) = if rng.random::<f64>() < config.rgrrt_fraction {
            let nearest = if config.reachability_guided {
                index.nearest_where(&sample, |id| steer::reachable(&tree[id].pose, &sample, config.kappa_max))
            } else {
                index.nearest(&sample)
            };
            let Some(id) = nearest else {
                continue;
            };
            match steer_toward(&tree[id].pose, &sample, config) {
                Some(seg) => (id, seg),
                None => continue,
            }
        } else {
            let id = rng.random_range(0..tree.len());
            (id, random_control(config, rng))
        };

        let parent = &tree[parent_id];
        let seg = truncate_at_target(scenario, &parent.pose, seg, config.check_resolution);
        let params = scenario.segment_params(&parent.pose, &seg);
        let Some(child) = parent.extend(parent_id, &seg, &params) else {
            continue;
        };
        let cost = child.cost(config.cost_mode);
        if !cost.is_finite() || cost > c_max || !child.n_internal.is_finite() {
            continue;
        }
        if !scenario.segment_collision_free(&parent.pose, &seg, config.check_resolution) {
            continue;
        }

        let reached = scenario.in_target(&child.pose.position);
        index.insert(child.pose.position);
        tree.push(child);
        if reached {
            let leaf = tree.len() - 1;
            return finish(scenario, config, &tree, leaf, clock).map(Some);
        }
    }
    Ok(None)
}

/// Shortens `seg` to end at its first collision-check sample inside the
/// insertion region, so arcs that sweep through the region count as reaching
/// it. The shortened length may fall below `arc_length_min`.
fn truncate_at_target(scenario: &Scenario, start: &Pose, seg: ArcSegment, check_resolution: f64) -> ArcSegment {
    let mut k = 1u64;
    loop {
        let d = (k as f64 * check_resolution).min(seg.length());
        let p = crate::kinematics::propagate_partial(start, seg.roll(), seg.curvature(), d).position;
        if scenario.in_target(&p) {
            return if d < seg.length() {
                ArcSegment::new(seg.roll(), seg.curvature(), d).expect("prefix of a valid segment")
            } else {
                seg
            };
        }
        if d >= seg.length() {
            return seg;
        }
        k += 1;
    }
}

fn finish(
    scenario: &Scenario,
    config: &PlannerConfig,
    tree: &[TreeNode],
    leaf: usize,
    clock: &BudgetClock,
) -> Result<PlanResult> {
    let mut chain = Vec::new();
    let mut at = Some(leaf);
    while let Some(id) = at {
        chain.push(tree[id].clone());
        at = tree[id].parent;
    }
    chain.reverse();
    let path = reverse_plan(&chain)?;
    let params = scenario.path_params(&path);
    let profile = internal_force_profile_piecewise(
        &path,
        &params,
        scenario.piercing_force(),
        config.profile_resolution,
    )?;
    let leaf = &tree[leaf];
    Ok(PlanResult {
        bottleneck_cost: leaf.bottleneck_cost,
        length: path.total_length(),
        path,
        profile,
        iterations: clock.iterations,
        wall_time: clock.start.elapsed().as_secs_f64(),
        seed: config.rng_seed,
    })
}

#[derive(Debug, Clone)]
pub struct AnoOutcome {
    pub log: ConvergenceLog,
    /// Last (cheapest) plan reported, if any.
    pub best: Option<PlanResult>,
    pub iterations: u64,
}

/// Anytime loop: repeatedly plans with a shrinking cost ceiling until the
/// budget is spent, reporting each improvement through `on_improvement`.
pub fn ano_plan<F>(scenario: &Scenario, config: &PlannerConfig, mut on_improvement: F) -> Result<AnoOutcome>
where
    F: FnMut(&PlanResult, &ConvergenceEntry),
{
    config.validate()?;
    let mut rng = planner_rng(config.rng_seed);
    let mut clock = BudgetClock::new(config.budget);
    let mut log = ConvergenceLog::new(config.cost_mode);
    let mut best = None;
    let mut c_max = f64::INFINITY;

    while !clock.exhausted() {
        let Some(plan) = grow_tree(scenario, config, c_max, &mut rng, &mut clock)? else {
            break;
        };
        let cost = plan.cost(config.cost_mode);
        let entry = ConvergenceEntry {
            wall_time_s: clock.stamp(),
            iteration: clock.iterations,
            cost,
            path_id: log.entries.len(),
        };
        on_improvement(&plan, &entry);
        log.entries.push(entry);
        best = Some(plan);
        if cost == 0.0 {
            // nothing can beat a zero-cost plan
            break;
        }
        c_max = next_ceiling(cost, config.epsilon);
    }
    Ok(AnoOutcome {
        log,
        best,
        iterations: clock.iterations,
    })
}

/// Cost ceiling after a solution of cost `cost`.
pub fn next_ceiling(cost: f64, epsilon: f64) -> f64 {
    cost / (1.0 + epsilon)
}
