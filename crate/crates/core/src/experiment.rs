//! Episode orchestration: scenarios, the per-slot learn/act/evaluate loop,
//! non-adaptive baselines, summaries and multi-seed sweeps.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_vector, ChannelVector, Luminaire, Receiver};
use crate::error::{Error, Result};
use crate::metrics::{pam_ber, secrecy_capacity, MetricRecord, QuadratureConfig, UtilityWeights};
use crate::qlearn::{
    bellman_update, epsilon_at, select_action, ActionSpace, Discretizer, LearnerConfig, QTable, StateBins, StateKey,
};
use crate::signal::{build_constellation, check_order, effective_gain, DriveParams, PamConstellation, Precoder};

/// A receiver together with the standard deviation of its noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub receiver: Receiver,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub luminaires: Vec<Luminaire>,
    pub drive: DriveParams,
    pub bob: Link,
    pub eve: Link,
    h_bob: ChannelVector,
    h_eve: ChannelVector,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        luminaires: Vec<Luminaire>,
        drive: DriveParams,
        bob: Link,
        eve: Link,
    ) -> Result<Self> {
        for (who, link) in [("Bob", &bob), ("Eve", &eve)] {
            if !(link.sigma > 0.0 && link.sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "{who}'s noise standard deviation must be positive, got {}",
                    link.sigma
                )));
            }
        }
        let h_bob = channel_vector(&luminaires, &bob.receiver)?;
        let h_eve = channel_vector(&luminaires, &eve.receiver)?;
        Ok(Self { name: name.into(), luminaires, drive, bob, eve, h_bob, h_eve })
    }

    pub fn h_bob(&self) -> &ChannelVector {
        &self.h_bob
    }

    pub fn h_eve(&self) -> &ChannelVector {
        &self.h_eve
    }

    pub fn num_leds(&self) -> usize {
        self.luminaires.len()
    }

    /// Closed-form metrics for transmitting `order`-PAM through `precoder`.
    pub fn metrics(
        &self,
        constellation: &PamConstellation,
        precoder: &Precoder,
        weights: &UtilityWeights,
        quadrature: &QuadratureConfig,
        clamp_secrecy: bool,
    ) -> Result<MetricRecord> {
        let g_bob = effective_gain(&self.h_bob, precoder, &self.drive)?;
        let g_eve = effective_gain(&self.h_eve, precoder, &self.drive)?;
        let mut cs = secrecy_capacity(constellation, g_bob, self.bob.sigma, g_eve, self.eve.sigma, quadrature)?;
        if clamp_secrecy {
            cs = cs.max(0.0);
        }
        let (m, es) = (constellation.order(), constellation.avg_symbol_energy());
        let ber_bob = pam_ber(m, g_bob, self.bob.sigma, es);
        let ber_eve = pam_ber(m, g_eve, self.eve.sigma, es);
        Ok(MetricRecord::new(cs, ber_bob, ber_eve, weights))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Adaptive,
    /// Order pinned, precoder still learned.
    FixedOrder(u32),
    /// Order and precoder both pinned.
    FixedBoth {
        order: u32,
        weights: Vec<f64>,
    },
}

impl Mode {
    /// Directory name used in output trees.
    pub fn label(&self) -> String {
        match self {
            Mode::Adaptive => "adaptive".into(),
            Mode::FixedOrder(m) => format!("fixed{m}"),
            Mode::FixedBoth { order, .. } => format!("static{order}"),
        }
    }

    pub fn action_space(&self, orders: &[u32], num_leds: usize, quant_levels: u32) -> Result<ActionSpace> {
        match self {
            Mode::Adaptive => ActionSpace::quantized(orders, num_leds, quant_levels),
            Mode::FixedOrder(m) => ActionSpace::quantized(&[*m], num_leds, quant_levels),
            Mode::FixedBoth { order, weights } => {
                if weights.len() != num_leds {
                    return Err(Error::DimensionMismatch { expected: num_leds, got: weights.len() });
                }
                ActionSpace::fixed(*order, Precoder::new(weights.clone())?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub num_slots: usize,
    pub seed: u64,
    pub weights: UtilityWeights,
    pub learner: LearnerConfig,
    pub bins: StateBins,
    pub mode: Mode,
    pub summary_window: usize,
    pub orders: Vec<u32>,
    pub quant_levels: u32,
    pub quadrature: QuadratureConfig,
    pub clamp_secrecy: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            num_slots: 2000,
            seed: 0,
            weights: UtilityWeights { delta: 10.0, zeta: 5.0 },
            learner: LearnerConfig::default(),
            bins: StateBins::default(),
            mode: Mode::Adaptive,
            summary_window: 500,
            orders: crate::signal::ALLOWED_ORDERS.to_vec(),
            quant_levels: 2,
            quadrature: QuadratureConfig::default(),
            clamp_secrecy: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_slots == 0 {
            return Err(Error::Config("num_slots must be >= 1".into()));
        }
        self.learner.validate()?;
        self.quadrature.validate()?;
        UtilityWeights::new(self.weights.delta, self.weights.zeta)?;
        if self.orders.is_empty() {
            return Err(Error::Config("no modulation orders configured".into()));
        }
        self.orders.iter().try_for_each(|&m| check_order(m))?;
        if self.quant_levels == 0 {
            return Err(Error::Config("precoder quantization needs at least one level".into()));
        }
        match &self.mode {
            Mode::FixedOrder(m) | Mode::FixedBoth { order: m, .. } => check_order(*m),
            Mode::Adaptive => Ok(()),
        }
    }
}

/// Source of per-slot link metrics for an action index.
pub trait LinkEvaluator {
    fn evaluate(&self, slot: usize, action: usize) -> Result<MetricRecord>;
}

/// Closed-form metrics for a static scenario. Results are memoized per
/// action, so one evaluator can serve many seeds concurrently.
#[derive(Debug)]
pub struct PhysicalEvaluator {
    scenario: Scenario,
    space: ActionSpace,
    constellations: Vec<PamConstellation>,
    weights: UtilityWeights,
    quadrature: QuadratureConfig,
    clamp_secrecy: bool,
    cache: Vec<OnceLock<Result<MetricRecord>>>,
}

impl PhysicalEvaluator {
    pub fn new(scenario: Scenario, cfg: &RunConfig) -> Result<Self> {
        let space = cfg.mode.action_space(&cfg.orders, scenario.num_leds(), cfg.quant_levels)?;
        let constellations =
            space.orders().iter().map(|&m| build_constellation(m, &scenario.drive)).collect::<Result<Vec<_>>>()?;
        let cache = (0..space.len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            scenario,
            space,
            constellations,
            weights: cfg.weights,
            quadrature: cfg.quadrature,
            clamp_secrecy: cfg.clamp_secrecy,
            cache,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }
}

impl LinkEvaluator for PhysicalEvaluator {
    fn evaluate(&self, _slot: usize, action: usize) -> Result<MetricRecord> {
        self.cache[action]
            .get_or_init(|| {
                let a = self.space.decode(action);
                self.scenario.metrics(
                    &self.constellations[a.order_index],
                    &self.space.precoder(a),
                    &self.weights,
                    &self.quadrature,
                    self.clamp_secrecy,
                )
            })
            .clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSlotLog {
    /// 1-based slot number.
    pub slot: usize,
    pub order: u32,
    pub weights: Vec<f64>,
    pub secrecy_capacity: f64,
    pub ber_bob: f64,
    pub ber_eve: f64,
    pub utility: f64,
    pub epsilon: f64,
    pub greedy: bool,
    pub action: usize,
    /// State the action was chosen in.
    pub state: StateKey,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub logs: Vec<TimeSlotLog>,
    pub qtable: QTable,
    /// Action applied before the first slot to seed the state.
    pub initial_action: usize,
}

/// Runs the learning loop against any evaluator.
///
/// Slot 0 applies a uniformly drawn initial action to obtain the "previous"
/// BERs and secrecy capacity; slots `1..=num_slots` then form the state from
/// the previous slot's metrics, pick an action ε-greedily, evaluate it, and
/// apply the Bellman update toward the state those metrics induce.
pub fn run_episode_with<E: LinkEvaluator + ?Sized>(
    evaluator: &E,
    space: &ActionSpace,
    scenario_id: u64,
    cfg: &RunConfig,
) -> Result<Episode> {
    cfg.validate()?;
    if space.is_empty() {
        return Err(Error::EmptyActionSpace);
    }
    let discretizer = Discretizer::new(&cfg.bins)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = QTable::new(space.len());

    let initial_action = rng.random_range(0..space.len());
    let primed = evaluator.evaluate(0, initial_action).map_err(|e| Error::Slot { slot: 0, source: Box::new(e) })?;
    let mut state = discretizer.key(primed.ber_bob, primed.ber_eve, primed.secrecy_capacity, scenario_id);

    let mut logs = Vec::with_capacity(cfg.num_slots);
    for slot in 1..=cfg.num_slots {
        let epsilon = epsilon_at(slot - 1, &cfg.learner);
        let choice = select_action(&q, &state, epsilon, &mut rng)?;
        let m = evaluator.evaluate(slot, choice.action).map_err(|e| Error::Slot { slot, source: Box::new(e) })?;
        let next = discretizer.key(m.ber_bob, m.ber_eve, m.secrecy_capacity, scenario_id);
        bellman_update(&mut q, state, choice.action, m.utility, &next, &cfg.learner);

        let a = space.decode(choice.action);
        logs.push(TimeSlotLog {
            slot,
            order: space.order(a),
            weights: space.precoder(a).weights().to_vec(),
            secrecy_capacity: m.secrecy_capacity,
            ber_bob: m.ber_bob,
            ber_eve: m.ber_eve,
            utility: m.utility,
            epsilon,
            greedy: choice.greedy,
            action: choice.action,
            state,
        });
        state = next;
    }
    Ok(Episode { logs, qtable: q, initial_action })
}

pub fn scenario_id(scenario: &Scenario, bins: &StateBins) -> Result<u64> {
    Ok(Discretizer::new(bins)?.scenario_id(scenario.h_bob(), scenario.h_eve()))
}

/// Runs with a caller-supplied evaluator (shared across seeds in sweeps).
pub fn run_with_evaluator(evaluator: &PhysicalEvaluator, cfg: &RunConfig) -> Result<Episode> {
    let id = scenario_id(evaluator.scenario(), &cfg.bins)?;
    run_episode_with(evaluator, evaluator.space(), id, cfg)
}

pub fn run_episode(scenario: &Scenario, cfg: &RunConfig) -> Result<Vec<TimeSlotLog>> {
    let evaluator = PhysicalEvaluator::new(scenario.clone(), cfg)?;
    Ok(run_with_evaluator(&evaluator, cfg)?.logs)
}

/// Non-adaptive comparison: modulation order pinned to 64 unless `cfg`
/// already pins something.
pub fn run_baseline(scenario: &Scenario, cfg: &RunConfig) -> Result<Vec<TimeSlotLog>> {
    let mut cfg = cfg.clone();
    if cfg.mode == Mode::Adaptive {
        cfg.mode = Mode::FixedOrder(64);
    }
    run_episode(scenario, &cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        Self {
            mean: values.clone().sum::<f64>() / n,
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalAction {
    pub action: usize,
    pub order: u32,
    pub weights: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub window: usize,
    pub secrecy_capacity: Stat,
    pub ber_bob: Stat,
    pub ber_eve: Stat,
    pub utility: Stat,
    pub modal_action: ModalAction,
    pub greedy_fraction: f64,
}

/// Statistics over the last `window` slots.
pub fn summarize(logs: &[TimeSlotLog], window: usize) -> Result<Summary> {
    if logs.is_empty() {
        return Err(Error::EmptyLog);
    }
    if window == 0 || window > logs.len() {
        return Err(Error::Config(format!("summary window {window} outside 1..={}", logs.len())));
    }
    let tail = &logs[logs.len() - window..];
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for log in tail {
        *counts.entry(log.action).or_default() += 1;
    }
    // most frequent; lowest action index on ties
    let (&action, &count) = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).expect("non-empty");
    let exemplar = tail.iter().find(|l| l.action == action).expect("counted");
    Ok(Summary {
        window,
        secrecy_capacity: Stat::of(tail.iter().map(|l| l.secrecy_capacity)),
        ber_bob: Stat::of(tail.iter().map(|l| l.ber_bob)),
        ber_eve: Stat::of(tail.iter().map(|l| l.ber_eve)),
        utility: Stat::of(tail.iter().map(|l| l.utility)),
        modal_action: ModalAction { action, order: exemplar.order, weights: exemplar.weights.clone(), count },
        greedy_fraction: tail.iter().filter(|l| l.greedy).count() as f64 / window as f64,
    })
}

#[derive(Debug)]
pub struct SweepCell {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub outcome: Result<Episode>,
}

/// Runs every (scenario, mode, seed) combination on the rayon pool. Cells
/// come back in scenario-major, then mode, then seed order.
pub fn run_sweep(scenarios: &[Scenario], modes: &[Mode], seeds: &[u64], base: &RunConfig) -> Result<Vec<SweepCell>> {
    let evaluators = scenarios
        .iter()
        .flat_map(|sc| modes.iter().map(move |mode| (sc, mode)))
        .map(|(sc, mode)| {
            let cfg = RunConfig { mode: mode.clone(), ..base.clone() };
            Ok((PhysicalEvaluator::new(sc.clone(), &cfg)?, cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..evaluators.len()).flat_map(|e| seeds.iter().map(move |&s| (e, s))).collect();
    Ok(jobs
        .into_par_iter()
        .map(|(e, seed)| {
            let (evaluator, cfg) = &evaluators[e];
            let cfg = RunConfig { seed, ..cfg.clone() };
            SweepCell {
                scenario: evaluator.scenario().name.clone(),
                mode: cfg.mode.clone(),
                seed,
                outcome: run_with_evaluator(evaluator, &cfg),
            }
        })
        .collect())
}
