//! Tabular Q-learning over joint (modulation order, quantized precoder)
//! actions with ε-greedy exploration.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::signal::{check_order, Precoder};

/// Default guard on `|orders|·(2T+1)^N`.
pub const DEFAULT_ACTION_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub order_index: usize,
    pub precoder_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum PrecoderSet {
    /// Every weight on the grid `{t/T : −T ≤ t ≤ T}`.
    Quantized {
        num_leds: usize,
        levels: u32,
    },
    Explicit(Vec<Precoder>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    orders: Vec<u32>,
    precoders: PrecoderSet,
    num_precoders: usize,
}

impl ActionSpace {
    pub fn quantized(orders: &[u32], num_leds: usize, levels: u32) -> Result<Self> {
        Self::quantized_with_limit(orders, num_leds, levels, DEFAULT_ACTION_LIMIT)
    }

    pub fn quantized_with_limit(orders: &[u32], num_leds: usize, levels: u32, limit: usize) -> Result<Self> {
        validate_orders(orders)?;
        if num_leds == 0 {
            return Err(Error::Config("precoder needs at least one LED".into()));
        }
        if levels == 0 {
            return Err(Error::Config("precoder quantization levels must be >= 1".into()));
        }
        let base = 2 * levels as u128 + 1;
        let num_precoders = (0..num_leds).try_fold(1u128, |acc, _| acc.checked_mul(base));
        let total = num_precoders.and_then(|p| p.checked_mul(orders.len() as u128));
        match (num_precoders, total) {
            (Some(p), Some(t)) if t <= limit as u128 => Ok(Self {
                orders: orders.to_vec(),
                precoders: PrecoderSet::Quantized { num_leds, levels },
                num_precoders: p as usize,
            }),
            (_, t) => Err(Error::Capacity { total: t.unwrap_or(u128::MAX), limit }),
        }
    }

    /// A single pinned (order, precoder) pair.
    pub fn fixed(order: u32, precoder: Precoder) -> Result<Self> {
        check_order(order)?;
        Ok(Self { orders: vec![order], precoders: PrecoderSet::Explicit(vec![precoder]), num_precoders: 1 })
    }

    pub fn len(&self) -> usize {
        self.orders.len() * self.num_precoders
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn num_precoders(&self) -> usize {
        self.num_precoders
    }

    pub fn num_leds(&self) -> usize {
        match &self.precoders {
            PrecoderSet::Quantized { num_leds, .. } => *num_leds,
            PrecoderSet::Explicit(list) => list[0].len(),
        }
    }

    /// Allowed values of a single weight, ascending. Empty for pinned spaces.
    pub fn weight_values(&self) -> Vec<f64> {
        match &self.precoders {
            PrecoderSet::Quantized { levels, .. } => {
                let t = *levels as i64;
                (-t..=t).map(|i| i as f64 / t as f64).collect()
            }
            PrecoderSet::Explicit(_) => Vec::new(),
        }
    }

    pub fn encode(&self, a: Action) -> usize {
        a.order_index * self.num_precoders + a.precoder_index
    }

    pub fn decode(&self, index: usize) -> Action {
        debug_assert!(index < self.len());
        Action { order_index: index / self.num_precoders, precoder_index: index % self.num_precoders }
    }

    pub fn order(&self, a: Action) -> u32 {
        self.orders[a.order_index]
    }

    /// Weights for `a`; LED 1 is the most significant digit of the index.
    pub fn precoder(&self, a: Action) -> Precoder {
        match &self.precoders {
            PrecoderSet::Quantized { num_leds, levels } => {
                let base = 2 * *levels as usize + 1;
                let mut rest = a.precoder_index;
                let mut weights = vec![0.0; *num_leds];
                for w in weights.iter_mut().rev() {
                    let digit = rest % base;
                    rest /= base;
                    *w = (digit as f64 - *levels as f64) / *levels as f64;
                }
                Precoder::new(weights).expect("grid weights lie in [-1, 1]")
            }
            PrecoderSet::Explicit(list) => list[a.precoder_index].clone(),
        }
    }
}

fn validate_orders(orders: &[u32]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::EmptyActionSpace);
    }
    orders.iter().try_for_each(|&m| check_order(m))
}

pub fn enumerate_actions(orders: &[u32], num_leds: usize, levels: u32) -> Result<ActionSpace> {
    ActionSpace::quantized(orders, num_leds, levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_slots: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, discount: 0.5, epsilon_start: 1.0, epsilon_end: 0.1, epsilon_decay_slots: 600 }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("learning rate", self.learning_rate),
            ("discount", self.discount),
            ("initial epsilon", self.epsilon_start),
            ("final epsilon", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain { what, value: v });
            }
        }
        Ok(())
    }
}

/// Exploration rate at slot `k` (0-based): linear from `epsilon_start` to
/// `epsilon_end` over `epsilon_decay_slots`, then constant.
pub fn epsilon_at(k: usize, cfg: &LearnerConfig) -> f64 {
    if k >= cfg.epsilon_decay_slots {
        return cfg.epsilon_end;
    }
    let frac = k as f64 / cfg.epsilon_decay_slots as f64;
    cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey {
    pub ber_bob_bin: u8,
    pub ber_eve_bin: u8,
    pub cs_bin: u8,
    pub scenario_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBins {
    /// Total BER bins, including the underflow bin.
    pub ber_bins: u8,
    /// Upper edge of the underflow bin.
    pub ber_floor: f64,
    /// Upper edge of the last log-spaced bin; larger values share it.
    pub ber_ceiling: f64,
    pub cs_bins: u8,
    pub cs_min: f64,
    pub cs_max: f64,
    /// Channel gains are rounded to this many significant digits before hashing.
    pub channel_digits: u8,
}

impl Default for StateBins {
    fn default() -> Self {
        Self {
            ber_bins: 8,
            ber_floor: 1e-6,
            ber_ceiling: 0.5,
            cs_bins: 8,
            cs_min: -1.0,
            cs_max: 7.0,
            channel_digits: 3,
        }
    }
}

/// Maps continuous observations to [`StateKey`]s. Bins are half-open on the
/// left, `(lo, hi]`, so a value on an edge lands in the lower bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    ber_edges: Vec<f64>,
    cs_edges: Vec<f64>,
    channel_digits: u8,
}

impl Discretizer {
    pub fn new(bins: &StateBins) -> Result<Self> {
        if bins.ber_bins < 2 || bins.cs_bins < 1 {
            return Err(Error::Config("need at least 2 BER bins and 1 secrecy bin".into()));
        }
        if !(bins.ber_floor > 0.0 && bins.ber_ceiling > bins.ber_floor) {
            return Err(Error::Config("BER bin range must satisfy 0 < floor < ceiling".into()));
        }
        if !(bins.cs_max > bins.cs_min) || bins.channel_digits == 0 {
            return Err(Error::Config("invalid secrecy-capacity bin range".into()));
        }
        let log_bins = (bins.ber_bins - 1) as i32;
        let ratio = bins.ber_ceiling / bins.ber_floor;
        // Edges below the last bin; the last bin absorbs everything above.
        let ber_edges = (0..log_bins).map(|j| bins.ber_floor * ratio.powf(j as f64 / log_bins as f64)).collect();
        let width = (bins.cs_max - bins.cs_min) / bins.cs_bins as f64;
        let cs_edges = (1..bins.cs_bins).map(|j| bins.cs_min + width * j as f64).collect();
        Ok(Self { ber_edges, cs_edges, channel_digits: bins.channel_digits })
    }

    pub fn ber_bin(&self, ber: f64) -> u8 {
        self.ber_edges.iter().filter(|&&e| e < ber).count() as u8
    }

    pub fn cs_bin(&self, cs: f64) -> u8 {
        self.cs_edges.iter().filter(|&&e| e < cs).count() as u8
    }

    /// Stable id for a (Bob, Eve) channel pair after rounding.
    pub fn scenario_id(&self, h_bob: &ChannelVector, h_eve: &ChannelVector) -> u64 {
        let digits = self.channel_digits as usize - 1;
        let mut text = String::new();
        for (tag, h) in [("B", h_bob), ("E", h_eve)] {
            text.push_str(tag);
            for g in h.gains() {
                text.push_str(&format!(":{g:.digits$e}"));
            }
        }
        fnv1a(text.as_bytes())
    }

    pub fn discretize(
        &self,
        ber_bob: f64,
        ber_eve: f64,
        cs: f64,
        h_bob: &ChannelVector,
        h_eve: &ChannelVector,
    ) -> StateKey {
        self.key(ber_bob, ber_eve, cs, self.scenario_id(h_bob, h_eve))
    }

    pub fn key(&self, ber_bob: f64, ber_eve: f64, cs: f64, scenario_id: u64) -> StateKey {
        StateKey {
            ber_bob_bin: self.ber_bin(ber_bob),
            ber_eve_bin: self.ber_bin(ber_eve),
            cs_bin: self.cs_bin(cs),
            scenario_id,
        }
    }
}

pub fn discretize_state(
    ber_bob: f64,
    ber_eve: f64,
    cs: f64,
    h_bob: &ChannelVector,
    h_eve: &ChannelVector,
    bins: &StateBins,
) -> Result<StateKey> {
    Ok(Discretizer::new(bins)?.discretize(ber_bob, ber_eve, cs, h_bob, h_eve))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Q-values per state, stored densely over the action index. States never
/// written read as all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_actions: usize,
    rows: HashMap<StateKey, Vec<f64>>,
}

pub const CHECKPOINT_HEADER: &str = "# lumisec q-table v1";
pub const CHECKPOINT_COLUMNS: &str = "ber_bob_bin,ber_eve_bin,cs_bin,scenario_id,action,value";

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        Self { num_actions, rows: HashMap::new() }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, s: &StateKey, action: usize) -> f64 {
        self.rows.get(s).map_or(0.0, |r| r[action])
    }

    pub fn set(&mut self, s: StateKey, action: usize, value: f64) {
        let n = self.num_actions;
        self.rows.entry(s).or_insert_with(|| vec![0.0; n])[action] = value;
    }

    pub fn max_value(&self, s: &StateKey) -> f64 {
        self.rows.get(s).map_or(0.0, |r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// All actions attaining the maximum Q-value in `s`.
    pub fn greedy_actions(&self, s: &StateKey) -> Vec<usize> {
        match self.rows.get(s) {
            None => (0..self.num_actions).collect(),
            Some(row) => {
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (0..row.len()).filter(|&a| row[a] == best).collect()
            }
        }
    }

    fn greedy_pick<R: Rng + ?Sized>(&self, s: &StateKey, rng: &mut R) -> usize {
        let Some(row) = self.rows.get(s) else {
            return rng.random_range(0..self.num_actions);
        };
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties = row.iter().filter(|&&q| q == best).count();
        let pick = if ties == 1 { 0 } else { rng.random_range(0..ties) };
        row.iter().enumerate().filter(|(_, &q)| q == best).nth(pick).map(|(a, _)| a).expect("pick < ties")
    }

    /// Entries that differ from zero, sorted by state then action.
    pub fn nonzero_entries(&self) -> Vec<(StateKey, usize, f64)> {
        let mut states: Vec<&StateKey> = self.rows.keys().collect();
        states.sort();
        states
            .into_iter()
            .flat_map(|s| self.rows[s].iter().enumerate().filter(|(_, &q)| q != 0.0).map(move |(a, &q)| (*s, a, q)))
            .collect()
    }

    /// Writes the versioned checkpoint: a header line, a column line, then one
    /// `state fields, action index, value` record per non-zero entry.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CHECKPOINT_HEADER}")?;
        writeln!(out, "# actions={}", self.num_actions)?;
        writeln!(out, "{CHECKPOINT_COLUMNS}")?;
        for (s, a, q) in self.nonzero_entries() {
            writeln!(out, "{},{},{},{},{a},{q:.16e}", s.ber_bob_bin, s.ber_eve_bin, s.cs_bin, s.scenario_id)?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| Error::Config("truncated q-table checkpoint".into()))?.map_err(Error::from)
        };
        if next()? != CHECKPOINT_HEADER {
            return Err(Error::Config("unrecognized q-table checkpoint version".into()));
        }
        let actions = next()?;
        let num_actions: usize = actions
            .strip_prefix("# actions=")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::Config(format!("bad action-count line {actions:?}")))?;
        if next()? != CHECKPOINT_COLUMNS {
            return Err(Error::Config("unexpected q-table checkpoint columns".into()));
        }
        let mut table = QTable::new(num_actions);
        for line in lines {
            let line = line?;
            let bad = || Error::Config(format!("bad q-table record {line:?}"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let s = StateKey {
                ber_bob_bin: f[0].parse().map_err(|_| bad())?,
                ber_eve_bin: f[1].parse().map_err(|_| bad())?,
                cs_bin: f[2].parse().map_err(|_| bad())?,
                scenario_id: f[3].parse().map_err(|_| bad())?,
            };
            let a: usize = f[4].parse().map_err(|_| bad())?;
            let q: f64 = f[5].parse().map_err(|_| bad())?;
            if a >= num_actions || !q.is_finite() {
                return Err(bad());
            }
            table.set(s, a, q);
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub action: usize,
    /// True when the action came from the exploitation branch.
    pub greedy: bool,
}

/// ε-greedy choice: a uniform random action with probability `epsilon`,
/// otherwise a maximizer of `Q(s, ·)` with ties broken uniformly.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, s: &StateKey, epsilon: f64, rng: &mut R) -> Result<Selection> {
    if q.num_actions == 0 {
        return Err(Error::EmptyActionSpace);
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain { what: "epsilon", value: epsilon });
    }
    if rng.random::<f64>() < epsilon {
        Ok(Selection { action: rng.random_range(0..q.num_actions), greedy: false })
    } else {
        Ok(Selection { action: q.greedy_pick(s, rng), greedy: true })
    }
}

/// `Q(s,a) ← (1−λ)Q(s,a) + λ(u + β max_a′ Q(s′,a′))`; returns the new value.
pub fn bellman_update(
    q: &mut QTable,
    s: StateKey,
    action: usize,
    utility: f64,
    s_next: &StateKey,
    cfg: &LearnerConfig,
) -> f64 {
    let target = utility + cfg.discount * q.max_value(s_next);
    let updated = (1.0 - cfg.learning_rate) * q.get(&s, action) + cfg.learning_rate * target;
    q.set(s, action, updated);
    updated
}

/// Runs the learner on a single-state problem with fixed per-action
/// utilities and returns, for each slot, the greedy choice in force before
/// that slot's update (lowest index among ties).
pub fn bandit_trace<R: Rng + ?Sized>(utilities: &[f64], cfg: &LearnerConfig, slots: usize, rng: &mut R) -> Vec<usize> {
    let state = StateKey { ber_bob_bin: 0, ber_eve_bin: 0, cs_bin: 0, scenario_id: 0 };
    let mut q = QTable::new(utilities.len());
    let mut greedy = Vec::with_capacity(slots);
    for k in 0..slots {
        greedy.push(q.greedy_actions(&state)[0]);
        let pick = select_action(&q, &state, epsilon_at(k, cfg), rng).expect("non-empty action set");
        bellman_update(&mut q, state, pick.action, utilities[pick.action], &state, cfg);
    }
    greedy
}
