//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use routemix::avs::{AvAgent, DqnParams, QNetwork, Sample};
use routemix::behavior::{behavior_table, compute_stats, BehaviorWeights, TravelTimeStats, WindowIndex, BEHAVIOR_NAMES};
use routemix::humans::{CostUnit, HumanAgent};
use routemix::io::{digest_all, export_records, load_digests, run_to_dir, summarize};
use routemix::mesosim::{DriverId, MesoSimulator, Simulator, TripPlan, TripResult};
use routemix::runner::{run_scenario, DriverRow, EpisodeRecord, Phase, Repetition, RepetitionOutput, Scenario};
use routemix::stateobs::{warmth, Group, Observer, TargetGroup, TurnLog};

use common::{desk_config, mean, random_network, random_path, smoke_config};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const TOL: f64 = 1e-9;

// 1. Unit oracles ------------------------------------------------------------

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 250;

    for i in 0..n {
        let costs: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..1200.0));
        let beta = rng.random_range(-2.0..0.0);
        let unit = if i % 2 == 0 { CostUnit::Minutes } else { CostUnit::Seconds };
        let beta = if unit == CostUnit::Seconds { beta / 60.0 } else { beta };
        let h = HumanAgent::new(0, 0, 10.0, 0.2, beta, costs, unit).unwrap();
        let p = h.choice_probabilities().unwrap();
        let k = if unit == CostUnit::Seconds { 1.0 } else { 60.0 };
        let e: Vec<f64> = costs.iter().map(|c| (beta * c / k).exp()).collect();
        let z: f64 = e.iter().sum();
        for j in 0..3 {
            ensure((p[j] - e[j] / z).abs() <= TOL, || format!("logit instance {i}: {p:?}"))?;
        }
    }

    for i in 0..n {
        let costs: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..1200.0));
        let alpha = rng.random_range(0.01..=1.0);
        let action = rng.random_range(0..3);
        let observed = rng.random_range(0.0..2000.0);
        let mut h = HumanAgent::new(0, 0, 10.0, alpha, -0.5, costs, CostUnit::Minutes).unwrap();
        h.update_costs(action, observed).unwrap();
        for j in 0..3 {
            let want = if j == action { (1.0 - alpha) * costs[j] + alpha * observed } else { costs[j] };
            ensure((h.cost_memory[j] - want).abs() <= TOL, || format!("update instance {i}"))?;
        }
    }

    for i in 0..n {
        let m = rng.random_range(1..30usize);
        let roster: Vec<(Group, f64, f64)> = (0..m)
            .map(|_| {
                let g = if rng.random_bool(0.4) { Group::Av } else { Group::Human };
                (g, rng.random_range(0..3600) as f64, rng.random_range(30.0..900.0))
            })
            .collect();
        let me = rng.random_range(0..m);
        let window = rng.random_range(0.0..1200.0);
        let results: Vec<TripResult> = roster
            .iter()
            .enumerate()
            .map(|(id, r)| TripResult { driver_id: id as DriverId, travel_time: r.2, arrival_time: r.1 + r.2 })
            .collect();
        let lookup = |id: DriverId| roster.get(id as usize).map(|r| (r.0, r.1));
        let got = compute_stats(&results, &lookup, me as DriverId, window).unwrap();
        let indexed = WindowIndex::new(&roster).stats(roster[me].2, roster[me].0, roster[me].1, window);

        let (g0, t0) = (roster[me].0, roster[me].1);
        let in_win: Vec<&(Group, f64, f64)> = roster.iter().filter(|r| (r.1 - t0).abs() <= window).collect();
        let avg = |v: Vec<f64>| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let want = TravelTimeStats {
            own: roster[me].2,
            group_mean: avg(in_win.iter().filter(|r| r.0 == g0).map(|r| r.2).collect()),
            other_mean: avg(in_win.iter().filter(|r| r.0 != g0).map(|r| r.2).collect()),
            all_mean: avg(in_win.iter().map(|r| r.2).collect()),
        };
        let phi: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let named = behavior_table(BEHAVIOR_NAMES[i % 6]).unwrap();
        for w in [BehaviorWeights::custom(phi), named] {
            let oracle = w.phi[0] * want.own
                + w.phi[1] * want.group_mean
                + w.phi[2] * want.other_mean
                + w.phi[3] * want.all_mean;
            ensure((w.reward(&got) - oracle).abs() <= TOL, || format!("reward instance {i}"))?;
            ensure((w.reward(&indexed) - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), || {
                format!("indexed reward instance {i}")
            })?;
        }
    }

    for i in 0..n {
        let m = rng.random_range(1..40usize);
        let mut agents: Vec<(Observer, usize)> = (0..m)
            .map(|id| {
                let o = Observer {
                    driver_id: id as DriverId,
                    group: if rng.random_bool(0.5) { Group::Av } else { Group::Human },
                    od: rng.random_range(0..2),
                    start_time: rng.random_range(0..900) as f64,
                };
                (o, rng.random_range(0..3))
            })
            .collect();
        agents.sort_by(|a, b| (a.0.start_time, a.0.driver_id).partial_cmp(&(b.0.start_time, b.0.driver_id)).unwrap());
        let mut log = TurnLog::new();
        for (o, a) in &agents {
            log.push(*o, *a);
        }
        let me = agents[rng.random_range(0..m)].0;
        let window = rng.random_range(1.0..600.0);
        for target in [TargetGroup::Same, TargetGroup::Other] {
            let got = warmth(&log, &me, window, target);
            let mut want = [0.0; 3];
            for (o, a) in &agents {
                let earlier = o.start_time < me.start_time
                    || (o.start_time == me.start_time && o.driver_id < me.driver_id);
                let group_ok = (o.group == me.group) == (target == TargetGroup::Same);
                if earlier && group_ok && o.od == me.od && me.start_time - o.start_time <= window {
                    want[*a] += window - (me.start_time - o.start_time);
                }
            }
            for j in 0..3 {
                ensure((got[j] - want[j]).abs() <= TOL, || format!("warmth instance {i}: {got:?} vs {want:?}"))?;
            }
        }
    }
    Ok(format!("{n} instances each for choice, update, reward and warmth"))
}

// 2. Behavior table ----------------------------------------------------------

fn criterion_2() -> Check {
    let table = [
        ("altruistic", [0.0, 0.0, 0.0, 1.0]),
        ("collaborative", [0.5, 0.5, 0.0, 0.0]),
        ("competitive", [2.0, 0.0, -1.0, 0.0]),
        ("malicious", [0.0, 0.0, -1.0, 0.0]),
        ("selfish", [1.0, 0.0, 0.0, 0.0]),
        ("social", [0.5, 0.0, 0.0, 0.5]),
    ];
    for (name, phi) in table {
        let got = behavior_table(name).map_err(|e| e.to_string())?.phi;
        ensure(got == phi, || format!("{name}: {got:?}"))?;
    }
    Ok("six weight vectors exact".into())
}

// 3. Simulator properties -----------------------------------------------------

fn criterion_3() -> Check {
    let sim = MesoSimulator;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut congested = 0;
    for inst in 0..100 {
        let net = random_network(&mut rng, 10);
        let n = rng.random_range(1..=20usize);
        let paths: Vec<Vec<usize>> = (0..n + 1).map(|_| random_path(&mut rng, &net)).collect();
        let starts: Vec<f64> = (0..n + 1).map(|_| rng.random_range(0..120) as f64).collect();
        let plan = |k: usize| TripPlan { driver_id: k as DriverId, edges: &paths[k], start_time: starts[k] };
        let plans: Vec<TripPlan<'_>> = (0..n).map(plan).collect();
        let ff = |k: usize| paths[k].iter().map(|&e| net.edge(e).free_flow_time()).sum::<f64>();

        let res = sim.simulate(&net, &plans).map_err(|e| e.to_string())?;
        ensure(res.len() == n, || format!("instance {inst}: {} results for {n} plans", res.len()))?;
        for (k, r) in res.iter().enumerate() {
            ensure(r.driver_id == k as DriverId, || format!("instance {inst}: ids"))?;
            ensure((r.arrival_time - starts[k] - r.travel_time).abs() <= TOL, || format!("instance {inst}: arrival"))?;
            ensure(r.travel_time >= ff(k) - TOL, || format!("instance {inst}: below free flow"))?;
            if r.travel_time > ff(k) + TOL {
                congested += 1;
            }
            let alone = sim.simulate(&net, &[plan(k)]).map_err(|e| e.to_string())?;
            ensure((alone[0].travel_time - ff(k)).abs() <= TOL, || format!("instance {inst}: single vehicle"))?;
        }

        let mut shuffled = plans.clone();
        shuffled.shuffle(&mut rng);
        ensure(sim.simulate(&net, &shuffled).map_err(|e| e.to_string())? == res, || {
            format!("instance {inst}: order dependence")
        })?;

        let mut more = plans.clone();
        more.insert(rng.random_range(0..=n), plan(n));
        let bigger = sim.simulate(&net, &more).map_err(|e| e.to_string())?;
        for r in &res {
            let after = bigger.iter().find(|b| b.driver_id == r.driver_id).unwrap();
            ensure(after.travel_time >= r.travel_time - TOL, || {
                format!("instance {inst}: driver {} sped up by an extra vehicle", r.driver_id)
            })?;
        }
    }
    Ok(format!("100 instances, {congested} delayed trips"))
}

// 4. DQN numerics -------------------------------------------------------------

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut net = QNetwork::new(&DqnParams::default().layer_sizes(), &mut rng);
    let inputs: Vec<[f64; 6]> = (0..8).map(|_| std::array::from_fn(|_| rng.random_range(0.0..2.0))).collect();
    let targets: Vec<(usize, f64)> = (0..8).map(|_| (rng.random_range(0..3), rng.random_range(-2.0..3.0))).collect();
    let loss_of = |net: &QNetwork| {
        let batch: Vec<Sample<'_>> = inputs
            .iter()
            .zip(&targets)
            .map(|(x, &(a, t))| Sample { input: x, action: a, target: t })
            .collect();
        net.loss_and_grad(&batch)
    };
    let (_, grad) = loss_of(&net);
    let h = 1e-6;
    let mut fd = vec![0.0; grad.len()];
    for i in 0..grad.len() {
        let w = net.params()[i];
        net.params_mut()[i] = w + h;
        let up = loss_of(&net).0;
        net.params_mut()[i] = w - h;
        let down = loss_of(&net).0;
        net.params_mut()[i] = w;
        fd[i] = (up - down) / (2.0 * h);
    }
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut grad.iter().zip(&fd).map(|(a, b)| a - b));
    let rel = diff / (norm(&mut grad.iter().copied()) + norm(&mut fd.iter().copied()));
    ensure(rel <= 1e-4, || format!("gradient relative error {rel:e}"))?;

    let behavior = behavior_table("selfish").unwrap();
    let mut agent = AvAgent::new(0, 0, 0.0, behavior, &DqnParams::default(), 44);
    let state = [0.3, 0.0, 0.8, 0.1, 0.0, 0.5];
    let (action, reward) = (1, 2.5);
    for _ in 0..32 {
        agent.store(state, action, reward);
    }
    let mut hit = None;
    for step in 1..=2000 {
        agent.train_step();
        if (agent.q_values(&state)[action] - reward).abs() <= 0.01 {
            hit = Some(step);
            break;
        }
    }
    let step = hit.ok_or_else(|| {
        format!("Q = {} after 2000 steps, target {reward}", agent.q_values(&state)[action])
    })?;
    Ok(format!("gradient relative error {rel:.1e}; |Q - r| <= 0.01 after {step} steps"))
}

// 5. Phase contract -----------------------------------------------------------

fn criterion_5() -> Check {
    let mut cfg = smoke_config();
    // Small batches so AV weights move within the short Adapt phase.
    cfg.dqn.batch_size = 2;
    let scenario = Scenario::from_config(&cfg, Path::new(".")).map_err(|e| e.to_string())?;
    let mut rep = Repetition::new(&scenario, &cfg, 0).map_err(|e| e.to_string())?;
    let memories = |rep: &Repetition<'_>| -> HashMap<DriverId, [u64; 3]> {
        rep.population.humans.iter().map(|h| (h.driver_id, h.cost_memory.map(f64::to_bits))).collect()
    };
    let mut adapt_start_state = None;
    for episode in 1..=cfg.phases.total_episodes {
        let before = memories(&rep);
        let rec = rep.step(episode).map_err(|e| e.to_string())?;
        let after = memories(&rep);
        match rec.phase {
            Phase::Settle => {
                ensure(rep.population.avs.is_empty() && rec.av.count == 0, || format!("AVs present in episode {episode}"))?;
                ensure(rec.drivers.iter().all(|d| d.group == Group::Human), || "AV rows in Settle".into())?;
            }
            Phase::Shock => {
                ensure(rec.av.count == 4 && rec.human.count == 8, || format!("episode {episode}: wrong group sizes"))?;
                for (id, m) in &after {
                    ensure(before.get(id) == Some(m), || format!("human {id} learned during Shock (episode {episode})"))?;
                }
            }
            Phase::Adapt => {}
        }
        if episode + 1 == cfg.phases.adapt_start {
            let avs: Vec<(Vec<f64>, f64, usize)> = rep
                .population
                .avs
                .iter()
                .map(|a| (a.qnet.params().to_vec(), a.epsilon, a.buffer.len()))
                .collect();
            adapt_start_state = Some((after, avs));
        }
    }
    let (humans0, avs0) = adapt_start_state.ok_or("no Adapt phase")?;
    let humans1 = memories(&rep);
    ensure(humans1 != humans0, || "human memories unchanged during Adapt".into())?;
    for (a, (w, eps, len)) in rep.population.avs.iter().zip(&avs0) {
        ensure(a.qnet.params() != w.as_slice(), || format!("AV {} weights unchanged during Adapt", a.driver_id))?;
        ensure(a.epsilon < *eps && a.buffer.len() > *len, || format!("AV {} did not learn", a.driver_id))?;
    }
    Ok("AVs absent in Settle, humans frozen in Shock, both groups learn in Adapt".into())
}

// 6-8. Desk-scale runs --------------------------------------------------------

const SEEDS: [u64; 3] = [1, 2, 3];

struct DeskRun {
    behavior: &'static str,
    seed: u64,
    records: Vec<EpisodeRecord>,
}

fn desk_runs() -> Result<Vec<DeskRun>, String> {
    let jobs: Vec<(&'static str, u64)> =
        BEHAVIOR_NAMES.iter().flat_map(|&b| SEEDS.iter().map(move |&s| (b, s))).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(behavior, seed)| {
                scope.spawn(move || {
                    let mut out: Vec<RepetitionOutput> =
                        run_scenario(&desk_config(behavior, seed), Path::new(".")).map_err(|e| e.to_string())?;
                    Ok(DeskRun { behavior, seed, records: out.remove(0).records })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().map_err(|_| "desk run panicked".to_string())?).collect()
    })
}

fn window_mean(records: &[EpisodeRecord], pick: impl Fn(&EpisodeRecord) -> Option<f64>) -> f64 {
    mean(records.iter().filter_map(pick))
}

fn criterion_6(runs: &[DeskRun]) -> Check {
    let mut ok = 0;
    let mut detail = Vec::new();
    for r in runs.iter().filter(|r| r.behavior == "selfish") {
        let tail = &r.records[r.records.len() - 50..];
        let av = window_mean(tail, |e| e.av.mean_tt);
        let human = window_mean(tail, |e| e.human.mean_tt);
        ok += usize::from(av <= human);
        detail.push(format!("seed {}: AV {av:.1}s vs human {human:.1}s", r.seed));
    }
    let msg = format!("{ok}/3 seeds [{}]", detail.join("; "));
    if ok >= 2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7(runs: &[DeskRun]) -> Check {
    let mut ok = 0;
    let mut detail = Vec::new();
    for r in runs.iter().filter(|r| r.behavior == "malicious") {
        let cfg = desk_config(r.behavior, r.seed);
        let settle: Vec<EpisodeRecord> = r.records.iter().filter(|e| e.phase == Phase::Settle).cloned().collect();
        let baseline = window_mean(&settle[settle.len() - 50..], |e| e.human.mean_tt);
        let tail = &r.records[r.records.len() - 50..];
        let human = window_mean(tail, |e| e.human.mean_tt);
        debug_assert_eq!(settle.len(), cfg.phases.shock_start - 1);
        ok += usize::from(human > baseline);
        detail.push(format!("seed {}: human {human:.1}s vs Settle {baseline:.1}s", r.seed));
    }
    let msg = format!("{ok}/3 seeds [{}]", detail.join("; "));
    if ok >= 2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8(runs: &[DeskRun]) -> Check {
    let mut failures = Vec::new();
    let mut ratios = BTreeMap::new();
    for r in runs {
        let post: Vec<&EpisodeRecord> = r.records.iter().filter(|e| e.phase != Phase::Settle).collect();
        let n = post.len() / 10;
        let first = mean(post[..n].iter().filter_map(|e| e.av.mean_loss));
        let last = mean(post[post.len() - n..].iter().filter_map(|e| e.av.mean_loss));
        if !(last < first) {
            failures.push(format!("{} seed {}: {first:.4} -> {last:.4}", r.behavior, r.seed));
        }
        ratios.entry(r.behavior).or_insert_with(Vec::new).push(last / first);
    }
    if failures.is_empty() {
        let worst = ratios
            .iter()
            .map(|(b, v)| format!("{b} {:.3}", v.iter().copied().fold(0.0, f64::max)))
            .collect::<Vec<_>>();
        Ok(format!("18/18 runs; worst last/first loss ratio: {}", worst.join(", ")))
    } else {
        Err(failures.join("; "))
    }
}

// 9. Determinism --------------------------------------------------------------

fn dir_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_9() -> Check {
    let mut cfg = desk_config("competitive", 9);
    cfg.repetitions = 2;
    cfg.phases.shock_start = 20;
    cfg.phases.adapt_start = 40;
    cfg.phases.total_episodes = 80;
    cfg.summary.window = 10;
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_to_dir(&cfg, Path::new("."), a.path()).map_err(|e| e.to_string())?;
    run_to_dir(&cfg, Path::new("."), b.path()).map_err(|e| e.to_string())?;
    let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
    ensure(fa.keys().eq(fb.keys()), || "different file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs"))?;
    }
    let total: usize = fa.values().map(Vec::len).sum();
    Ok(format!("{} files, {total} bytes identical", fa.len()))
}

// 10. Summary pipeline --------------------------------------------------------

fn synthetic_rep(av_tt: [f64; 4]) -> Vec<EpisodeRecord> {
    // Settle 1-3, Shock 4, Adapt 5-6; drivers 0 and 1 stay human, driver 2
    // becomes an AV. `av_tt` holds driver 2's times in episodes 2, 3, 5, 6.
    let humans = [(100.0, 200.0), (110.0, 190.0), (90.0, 210.0), (95.0, 205.0), (120.0, 180.0), (100.0, 220.0)];
    let d2 = [300.0, av_tt[0], av_tt[1], 250.0, av_tt[2], av_tt[3]];
    (1..=6)
        .map(|ep| {
            let phase = match ep {
                1..=3 => Phase::Settle,
                4 => Phase::Shock,
                _ => Phase::Adapt,
            };
            let g2 = if ep >= 4 { Group::Av } else { Group::Human };
            let row = |id, group, tt| DriverRow { driver_id: id, group, od: 0, action: 0, travel_time: tt, reward: tt };
            let (h0, h1) = humans[ep - 1];
            EpisodeRecord::assemble(
                ep,
                phase,
                vec![row(0, Group::Human, h0), row(1, Group::Human, h1), row(2, g2, d2[ep - 1])],
                vec![],
                &[],
            )
        })
        .collect()
}

fn criterion_10() -> Check {
    let mut reps = vec![synthetic_rep([330.0, 270.0, 240.0, 300.0]), synthetic_rep([180.0, 220.0, 200.0, 240.0])];
    // Hand values, window 2 (Settle episodes 2-3, Adapt episodes 5-6):
    //   rep 0: AV 300 -> 270 (+10%), humans 150 -> 155 (-10/3 %), system 200 -> 580/3 (+10/3 %)
    //   rep 1: AV 200 -> 220 (-10%), humans 150 -> 155 (-10/3 %), system 500/3 -> 530/3 (-6%)
    let want_reps = [[10.0, -10.0 / 3.0, 10.0 / 3.0], [-10.0, -10.0 / 3.0, -6.0]];
    let want_mean = [0.0, -10.0 / 3.0, -4.0 / 3.0];
    let close = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= TOL);

    reps[1].reverse();
    let digests: Vec<_> = reps.iter().map(|r| digest_all(r, 1)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let table = summarize("synthetic", &digests, 2).map_err(|e| e.to_string())?;
    for (k, want) in want_reps.iter().enumerate() {
        ensure(close(&table.repetitions[k].pct, want), || format!("rep {k}: {:?}", table.repetitions[k].pct))?;
    }
    ensure(close(&table.mean_pct, &want_mean), || format!("mean {:?}", table.mean_pct))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let phases = routemix::config::PhaseConfig { shock_start: 4, adapt_start: 5, total_episodes: 6 };
    let mut from_csv = Vec::new();
    for (k, r) in reps.iter().enumerate() {
        let sub = dir.path().join(format!("rep_{k}"));
        export_records(r, 1, &sub).map_err(|e| e.to_string())?;
        from_csv.push(load_digests(&sub, &phases, 1).map_err(|e| e.to_string())?);
    }
    let reloaded = summarize("synthetic", &from_csv, 2).map_err(|e| e.to_string())?;
    ensure(close(&reloaded.mean_pct, &want_mean), || format!("from CSV {:?}", reloaded.mean_pct))?;
    ensure(summarize("synthetic", &digests, 3).is_err(), || "oversized window accepted".into())?;
    Ok(format!("mean AV/human/system % = {:?}", table.mean_pct.map(|v| (v * 1e6).round() / 1e6)))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = t.elapsed().as_secs_f64();
    match &outcome {
        Ok(msg) => println!("criterion {id:>2} PASS  {name} ({secs:.1}s): {msg}"),
        Err(msg) => println!("criterion {id:>2} FAIL  {name} ({secs:.1}s): {msg}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= run(1, "unit oracles", criterion_1);
    ok &= run(2, "behavior table", criterion_2);
    ok &= run(3, "simulator properties", criterion_3);
    ok &= run(4, "DQN numerics", criterion_4);
    ok &= run(5, "phase contract", criterion_5);
    let t = Instant::now();
    match desk_runs() {
        Ok(runs) => {
            println!("(desk-scale runs: 6 behaviors x 3 seeds in {:.1}s)", t.elapsed().as_secs_f64());
            ok &= run(6, "selfish AVs beat humans", || criterion_6(&runs));
            ok &= run(7, "malicious AVs hurt humans", || criterion_7(&runs));
            ok &= run(8, "loss trend", || criterion_8(&runs));
        }
        Err(e) => {
            for (id, name) in [(6, "selfish AVs beat humans"), (7, "malicious AVs hurt humans"), (8, "loss trend")] {
                ok &= run(id, name, || Err(e.clone()));
            }
        }
    }
    ok &= run(9, "determinism", criterion_9);
    ok &= run(10, "summary pipeline", criterion_10);
    if !ok {
        std::process::exit(1);
    }
}
