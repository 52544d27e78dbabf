//! Scenario orchestration: population, phase schedule, turn-ordered
//! episodes and record collection.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path as FsPath;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::avs::{AvAgent, State};
use crate::behavior::{BehaviorWeights, WindowIndex};
use crate::config::ScenarioConfig;
use crate::humans::HumanAgent;
use crate::mesosim::{simulator_by_name, DriverId, Simulator, TripPlan, HORIZON_S};
use crate::net::{self, generate_paths, grid_default_endpoints, grid_network, Network, Od, RouteCatalog, ROUTES_PER_OD};
use crate::stateobs::{build_state, Group, Observer, TurnLog};
use crate::Error;

/// SplitMix64 finalizer; used to derive independent stream seeds.
pub fn mix_seed(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    mix_seed(mix_seed(base ^ mix_seed(stream)) ^ index)
}

const STREAM_REPETITION: u64 = 1;
const STREAM_POPULATION: u64 = 2;
const STREAM_EPISODE: u64 = 3;
const STREAM_AV: u64 = 4;
const STREAM_ROUTES: u64 = 5;

/// Seed of repetition `rep` (0-based).
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, STREAM_REPETITION, rep as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Settle,
    Shock,
    Adapt,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Settle => "settle",
            Phase::Shock => "shock",
            Phase::Adapt => "adapt",
        }
    }

    pub fn of_episode(episode: usize, cfg: &crate::config::PhaseConfig) -> Phase {
        if episode < cfg.shock_start {
            Phase::Settle
        } else if episode < cfg.adapt_start {
            Phase::Shock
        } else {
            Phase::Adapt
        }
    }

    pub fn flags(self) -> PhaseFlags {
        match self {
            Phase::Settle => PhaseFlags { human_learning: true, av_learning: false },
            Phase::Shock => PhaseFlags { human_learning: false, av_learning: true },
            Phase::Adapt => PhaseFlags { human_learning: true, av_learning: true },
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "settle" => Ok(Phase::Settle),
            "shock" => Ok(Phase::Shock),
            "adapt" => Ok(Phase::Adapt),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseFlags {
    pub human_learning: bool,
    pub av_learning: bool,
}

/// Network, OD pairs and resolved route sets shared by every episode.
pub struct Scenario {
    pub net: Network,
    pub ods: Vec<Od>,
    pub routes: RouteCatalog,
    /// Per OD, the edge indices of each route.
    pub resolved: Vec<Vec<Vec<usize>>>,
    /// Per OD, the free-flow time of each route in seconds.
    pub free_flow: Vec<[f64; ROUTES_PER_OD]>,
    pub simulator: Box<dyn Simulator>,
}

impl Scenario {
    /// Loads or generates network and routes; relative file paths resolve
    /// against `base_dir`.
    pub fn from_config(cfg: &ScenarioConfig, base_dir: &FsPath) -> Result<Self, Error> {
        let net = load_network(cfg, base_dir)?;
        let ods = scenario_ods(cfg)?;
        let routes = match &cfg.routes.file {
            Some(f) => {
                let text = read_file(&base_dir.join(f))?;
                RouteCatalog::from_text(&text)?
            }
            None => build_routes(&net, &ods, cfg)?,
        };
        Scenario::new(net, ods, routes, simulator_by_name(&cfg.simulator)?)
    }

    pub fn new(
        net: Network,
        ods: Vec<Od>,
        routes: RouteCatalog,
        simulator: Box<dyn Simulator>,
    ) -> Result<Self, Error> {
        routes.validate(&net)?;
        let mut resolved = Vec::with_capacity(ods.len());
        let mut free_flow = Vec::with_capacity(ods.len());
        for od in &ods {
            let set = routes.get(od).ok_or_else(|| net::NetError::MissingRouteSet { od: od.clone() })?;
            if set.paths.len() != ROUTES_PER_OD {
                return Err(net::NetError::InsufficientPaths {
                    od: od.clone(),
                    found: set.paths.len(),
                    wanted: ROUTES_PER_OD,
                }
                .into());
            }
            let mut idx = Vec::with_capacity(ROUTES_PER_OD);
            let mut ff = [0.0; ROUTES_PER_OD];
            for (k, p) in set.paths.iter().enumerate() {
                idx.push(net.resolve(p)?);
                ff[k] = net.free_flow_time(p)?;
            }
            resolved.push(idx);
            free_flow.push(ff);
        }
        Ok(Scenario { net, ods, routes, resolved, free_flow, simulator })
    }
}

fn read_file(path: &FsPath) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

pub fn load_network(cfg: &ScenarioConfig, base_dir: &FsPath) -> Result<Network, Error> {
    match &cfg.network.file {
        Some(f) => Ok(Network::from_edge_list(&read_file(&base_dir.join(f))?)?),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.network.grid_seed);
            Ok(grid_network(&cfg.network.grid, &mut rng)?)
        }
    }
}

/// All origin x destination pairs, origin-major.
pub fn scenario_ods(cfg: &ScenarioConfig) -> Result<Vec<Od>, Error> {
    let (def_o, def_d) = grid_default_endpoints(&cfg.network.grid);
    let origins = cfg.network.origins.clone().unwrap_or(def_o);
    let dests = cfg.network.destinations.clone().unwrap_or(def_d);
    if origins.is_empty() || dests.is_empty() {
        return Err(Error::Config(crate::config::ConfigError::Invalid {
            field: "network.origins",
            msg: "need at least one origin and one destination".into(),
        }));
    }
    Ok(origins
        .iter()
        .flat_map(|o| dests.iter().map(move |d| Od::new(o.clone(), d.clone())))
        .collect())
}

pub fn build_routes(net: &Network, ods: &[Od], cfg: &ScenarioConfig) -> Result<RouteCatalog, Error> {
    let mut sets = Vec::with_capacity(ods.len());
    for (i, od) in ods.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.routes.seed, STREAM_ROUTES, i as u64));
        sets.push(generate_paths(net, od, &cfg.routes.generation, &mut rng)?);
    }
    Ok(RouteCatalog { sets })
}

/// Static description of one driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverSpec {
    pub driver_id: DriverId,
    pub od: usize,
    pub start_time: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mutates_to_av: bool,
}

pub struct Population {
    pub humans: Vec<HumanAgent>,
    pub avs: Vec<AvAgent>,
    /// Drivers replaced by AVs at the start of Phase Shock.
    pub mutation_list: Vec<DriverId>,
    pub specs: Vec<DriverSpec>,
}

pub const POPULATION_HEADER: &str = "driver_id,group,origin,destination,start_time,alpha,beta,mutates_to_av";

/// Samples OD, start time, alpha and beta for every driver and picks the
/// drivers that will become AVs.
pub fn create_population<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    n_ods: usize,
    rng: &mut R,
) -> Vec<DriverSpec> {
    let pop = &cfg.population;
    let normal = Normal::new(pop.start_mean_s, pop.start_sd_s).expect("validated sd");
    let mut specs = Vec::with_capacity(pop.size);
    for id in 0..pop.size {
        let od = rng.random_range(0..n_ods);
        let start = loop {
            let t = normal.sample(rng).round();
            if t > 0.0 && t < HORIZON_S {
                break t;
            }
        };
        let beta = if pop.beta_max > pop.beta_min {
            rng.random_range(pop.beta_min..=pop.beta_max)
        } else {
            pop.beta_min
        };
        specs.push(DriverSpec {
            driver_id: id as DriverId,
            od,
            start_time: start,
            alpha: pop.alpha,
            beta,
            mutates_to_av: false,
        });
    }
    for i in index::sample(rng, pop.size, pop.av_count) {
        specs[i].mutates_to_av = true;
    }
    specs
}

/// Population of repetition `rep`, drawn from its own seed stream.
pub fn sample_population(cfg: &ScenarioConfig, n_ods: usize, rep: usize) -> Vec<DriverSpec> {
    let seed = repetition_seed(cfg.seed, rep);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_POPULATION, 0));
    create_population(cfg, n_ods, &mut rng)
}

pub fn population_to_csv(specs: &[DriverSpec], scenario_ods: &[Od]) -> String {
    let mut out = String::from(POPULATION_HEADER);
    out.push('\n');
    for s in specs {
        let od = &scenario_ods[s.od];
        let _ = writeln!(
            out,
            "{},human,{},{},{},{},{},{}",
            s.driver_id, od.origin, od.destination, s.start_time, s.alpha, s.beta, s.mutates_to_av
        );
    }
    out
}

pub fn population_from_csv(text: &str, scenario_ods: &[Od]) -> Result<Vec<DriverSpec>, Error> {
    let bad = |line: usize, msg: String| Error::Population { line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == POPULATION_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{POPULATION_HEADER}`"))),
    }
    let mut specs = Vec::new();
    let mut seen = HashSet::new();
    for (i, l) in lines {
        let line = i + 1;
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(bad(line, format!("expected 8 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad(line, format!("bad number `{}`", f[k])));
        let driver_id: DriverId = f[0].parse().map_err(|_| bad(line, format!("bad driver_id `{}`", f[0])))?;
        if !seen.insert(driver_id) {
            return Err(bad(line, format!("duplicate driver_id {driver_id}")));
        }
        let od = scenario_ods
            .iter()
            .position(|o| o.origin == f[2] && o.destination == f[3])
            .ok_or_else(|| bad(line, format!("OD ({}, {}) not in scenario", f[2], f[3])))?;
        let start_time = num(4)?;
        if !(0.0..HORIZON_S).contains(&start_time) {
            return Err(bad(line, format!("start_time {start_time} outside [0, 3600)")));
        }
        let mutates_to_av = f[7].parse::<bool>().map_err(|_| bad(line, format!("bad flag `{}`", f[7])))?;
        specs.push(DriverSpec { driver_id, od, start_time, alpha: num(5)?, beta: num(6)?, mutates_to_av });
    }
    Ok(specs)
}

impl Population {
    /// All drivers start as humans with costs primed to free-flow times.
    pub fn from_specs(specs: Vec<DriverSpec>, scenario: &Scenario, cfg: &ScenarioConfig) -> Result<Self, Error> {
        let humans = specs
            .iter()
            .map(|s| {
                HumanAgent::new(
                    s.driver_id,
                    s.od,
                    s.start_time,
                    s.alpha,
                    s.beta,
                    scenario.free_flow[s.od],
                    cfg.population.cost_unit,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mutation_list = specs.iter().filter(|s| s.mutates_to_av).map(|s| s.driver_id).collect();
        Ok(Population { humans, avs: Vec::new(), mutation_list, specs })
    }

    /// Replaces the listed humans with AVs that keep their OD and start time.
    pub fn mutate(&mut self, behavior: BehaviorWeights, cfg: &ScenarioConfig, rep_seed: u64) {
        let chosen: HashSet<DriverId> = self.mutation_list.iter().copied().collect();
        let (leaving, staying): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.humans).into_iter().partition(|h| chosen.contains(&h.driver_id));
        self.humans = staying;
        self.avs = leaving
            .into_iter()
            .map(|h| {
                AvAgent::new(
                    h.driver_id,
                    h.od,
                    h.start_time,
                    behavior,
                    &cfg.dqn,
                    derive_seed(rep_seed, STREAM_AV, h.driver_id as u64),
                )
            })
            .collect();
    }
}

/// Per-driver outcome of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverRow {
    pub driver_id: DriverId,
    pub group: Group,
    pub od: usize,
    pub action: usize,
    /// Seconds.
    pub travel_time: f64,
    /// In the configured reward unit; lower is better.
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean_tt: Option<f64>,
    pub mean_reward: Option<f64>,
    pub mean_loss: Option<f64>,
    pub mean_epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub phase: Phase,
    /// Sorted by driver id.
    pub drivers: Vec<DriverRow>,
    pub human: GroupStats,
    pub av: GroupStats,
    /// Training loss of every AV that trained this episode.
    pub av_losses: Vec<(DriverId, f64)>,
}

impl EpisodeRecord {
    pub fn group(&self, g: Group) -> &GroupStats {
        match g {
            Group::Human => &self.human,
            Group::Av => &self.av,
        }
    }

    /// Fills the per-group means from the driver rows and the given losses/epsilons.
    pub fn assemble(
        episode: usize,
        phase: Phase,
        mut drivers: Vec<DriverRow>,
        av_losses: Vec<(DriverId, f64)>,
        epsilons: &[f64],
    ) -> Self {
        drivers.sort_by_key(|d| d.driver_id);
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            (n > 0).then(|| s / n as f64)
        };
        let stats = |g: Group| GroupStats {
            count: drivers.iter().filter(|d| d.group == g).count(),
            mean_tt: mean(&mut drivers.iter().filter(|d| d.group == g).map(|d| d.travel_time)),
            mean_reward: mean(&mut drivers.iter().filter(|d| d.group == g).map(|d| d.reward)),
            mean_loss: None,
            mean_epsilon: None,
        };
        let human = stats(Group::Human);
        let mut av = stats(Group::Av);
        av.mean_loss = mean(&mut av_losses.iter().map(|l| l.1));
        av.mean_epsilon = mean(&mut epsilons.iter().copied());
        EpisodeRecord { episode, phase, drivers, human, av, av_losses }
    }
}

enum Turn {
    Human(usize),
    Av(usize),
}

/// Mutable state of one repetition.
pub struct Repetition<'a> {
    pub scenario: &'a Scenario,
    pub cfg: &'a ScenarioConfig,
    pub behavior: BehaviorWeights,
    pub seed: u64,
    pub population: Population,
    warned_empty_support: bool,
}

impl<'a> Repetition<'a> {
    pub fn new(scenario: &'a Scenario, cfg: &'a ScenarioConfig, rep: usize) -> Result<Self, Error> {
        let seed = repetition_seed(cfg.seed, rep);
        let specs = match &cfg.population.file {
            Some(_) => return Err(Error::Population {
                line: 0,
                msg: "population files must be loaded with Repetition::with_specs".into(),
            }),
            None => sample_population(cfg, scenario.ods.len(), rep),
        };
        Self::with_specs(scenario, cfg, seed, specs)
    }

    pub fn with_specs(
        scenario: &'a Scenario,
        cfg: &'a ScenarioConfig,
        seed: u64,
        specs: Vec<DriverSpec>,
    ) -> Result<Self, Error> {
        let population = Population::from_specs(specs, scenario, cfg)?;
        Ok(Repetition {
            scenario,
            cfg,
            behavior: cfg.behavior_weights()?,
            seed,
            population,
            warned_empty_support: false,
        })
    }

    /// Applies phase transitions due at `episode` and plays it.
    pub fn step(&mut self, episode: usize) -> Result<EpisodeRecord, Error> {
        let phases = &self.cfg.phases;
        if episode == phases.shock_start {
            self.population.mutate(self.behavior, self.cfg, self.seed);
        }
        let phase = Phase::of_episode(episode, phases);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, STREAM_EPISODE, episode as u64));
        self.run_episode(episode, phase, &mut rng)
            .map_err(|e| Error::Episode { episode, source: Box::new(e) })
    }

    /// Plays one episode: turn-ordered choices, one simulation, reward and
    /// learning dispatch.
    pub fn run_episode(&mut self, episode: usize, phase: Phase, rng: &mut ChaCha8Rng) -> Result<EpisodeRecord, Error> {
        let flags = phase.flags();
        let scenario = self.scenario;
        let pop = &mut self.population;
        for h in &mut pop.humans {
            h.learning_enabled = flags.human_learning;
        }
        for a in &mut pop.avs {
            a.learning_enabled = flags.av_learning;
        }

        let mut turns: Vec<(f64, DriverId, Turn)> = Vec::with_capacity(pop.humans.len() + pop.avs.len());
        turns.extend(pop.humans.iter().enumerate().map(|(i, h)| (h.start_time, h.driver_id, Turn::Human(i))));
        turns.extend(pop.avs.iter().enumerate().map(|(i, a)| (a.start_time, a.driver_id, Turn::Av(i))));
        turns.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let window_o = self.cfg.windows.observation_s;
        let state_scale = if self.cfg.normalize_warmth { 1.0 / window_o } else { 1.0 };
        let mut log = TurnLog::with_capacity(turns.len());
        let mut human_actions = vec![0usize; pop.humans.len()];
        let mut av_choice: Vec<(State, usize)> = vec![([0.0; 6], 0); pop.avs.len()];
        for (start, id, turn) in &turns {
            match *turn {
                Turn::Human(i) => {
                    let h = &pop.humans[i];
                    let action = h.choose_route(rng)?;
                    human_actions[i] = action;
                    log.push(Observer { driver_id: *id, group: Group::Human, od: h.od, start_time: *start }, action);
                }
                Turn::Av(i) => {
                    let a = &mut pop.avs[i];
                    let me = Observer { driver_id: *id, group: Group::Av, od: a.od, start_time: *start };
                    let state = build_state(&log, &me, window_o).map(|w| w * state_scale);
                    let action = a.act(&state);
                    av_choice[i] = (state, action);
                    log.push(me, action);
                }
            }
        }

        let plans: Vec<TripPlan<'_>> = log
            .records()
            .iter()
            .map(|r| TripPlan {
                driver_id: r.agent.driver_id,
                edges: &scenario.resolved[r.agent.od][r.action],
                start_time: r.agent.start_time,
            })
            .collect();
        let results = scenario.simulator.simulate(&scenario.net, &plans)?;
        let tt_of = |id: DriverId| {
            results
                .binary_search_by_key(&id, |r| r.driver_id)
                .map(|k| results[k].travel_time)
                .map_err(|_| Error::Behavior(crate::behavior::BehaviorError::MissingObserver(id)))
        };

        let unit = self.cfg.reward_unit.from_seconds();
        let mut rows = Vec::with_capacity(turns.len());
        for (i, h) in pop.humans.iter_mut().enumerate() {
            let tt = tt_of(h.driver_id)?;
            h.update_costs(human_actions[i], tt)?;
            rows.push(DriverRow {
                driver_id: h.driver_id,
                group: Group::Human,
                od: h.od,
                action: human_actions[i],
                travel_time: tt,
                reward: tt * unit,
            });
        }

        let mut av_losses = Vec::new();
        if !pop.avs.is_empty() {
            let entries: Vec<(Group, f64, f64)> = log
                .records()
                .iter()
                .map(|r| Ok((r.agent.group, r.agent.start_time, tt_of(r.agent.driver_id)?)))
                .collect::<Result<_, Error>>()?;
            let index = WindowIndex::new(&entries);
            let window_r = self.cfg.windows.reward_s;
            let mut empty_support = 0usize;
            for (i, a) in pop.avs.iter_mut().enumerate() {
                let tt = tt_of(a.driver_id)?;
                let stats = index.stats(tt, Group::Av, a.start_time, window_r);
                if stats.other_mean == 0.0 {
                    empty_support += 1;
                }
                let reward = a.behavior.reward(&stats.scaled(unit));
                let (state, action) = av_choice[i];
                rows.push(DriverRow {
                    driver_id: a.driver_id,
                    group: Group::Av,
                    od: a.od,
                    action,
                    travel_time: tt,
                    reward,
                });
                if flags.av_learning {
                    a.store(state, action, reward);
                    if let Some(loss) = a.train_step() {
                        av_losses.push((a.driver_id, loss));
                    }
                    a.decay_epsilon();
                }
            }
            if empty_support > 0 {
                if !self.warned_empty_support {
                    log::warn!(
                        "episode {episode}: {empty_support} AV(s) saw no human in their reward window; other-group mean taken as 0"
                    );
                    self.warned_empty_support = true;
                } else {
                    log::debug!("episode {episode}: {empty_support} AV(s) with empty other-group support");
                }
            }
        }
        av_losses.sort_by_key(|l| l.0);
        let epsilons: Vec<f64> = pop.avs.iter().map(|a| a.epsilon).collect();
        Ok(EpisodeRecord::assemble(episode, phase, rows, av_losses, &epsilons))
    }
}

/// Records of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionOutput {
    pub repetition: usize,
    pub seed: u64,
    pub specs: Vec<DriverSpec>,
    pub records: Vec<EpisodeRecord>,
}

/// Plays every episode of one repetition, handing each record to `sink`.
pub fn run_repetition<F>(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    rep: usize,
    specs: Option<Vec<DriverSpec>>,
    mut sink: F,
) -> Result<Vec<DriverSpec>, Error>
where
    F: FnMut(&EpisodeRecord) -> Result<(), Error>,
{
    let mut run = match specs {
        Some(s) => Repetition::with_specs(scenario, cfg, repetition_seed(cfg.seed, rep), s)?,
        None => Repetition::new(scenario, cfg, rep)?,
    };
    let specs = run.population.specs.clone();
    for episode in 1..=cfg.phases.total_episodes {
        let record = run.step(episode)?;
        sink(&record)?;
    }
    Ok(specs)
}

/// Runs all repetitions in memory.
pub fn run_scenario(cfg: &ScenarioConfig, base_dir: &FsPath) -> Result<Vec<RepetitionOutput>, Error> {
    cfg.validate()?;
    let scenario = Scenario::from_config(cfg, base_dir)?;
    let fixed_specs = match &cfg.population.file {
        Some(f) => Some(population_from_csv(&read_file(&base_dir.join(f))?, &scenario.ods)?),
        None => None,
    };
    (0..cfg.repetitions)
        .map(|rep| {
            let mut records = Vec::with_capacity(cfg.phases.total_episodes);
            let specs = run_repetition(&scenario, cfg, rep, fixed_specs.clone(), |r| {
                records.push(r.clone());
                Ok(())
            })?;
            Ok(RepetitionOutput { repetition: rep, seed: repetition_seed(cfg.seed, rep), specs, records })
        })
        .collect()
}
