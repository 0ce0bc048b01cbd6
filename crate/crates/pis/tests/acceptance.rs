//! Acceptance checks, one test per criterion. Run with `--nocapture`
//! to see one pass/fail line each.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use pis::composition::{global_behavior, port_behavior, render_interaction, DEFAULT_STATE_BUDGET};
use pis::equivalence::{branching_bisimilar, branching_partition, minimize, oracle};
use pis::generate::{
    self, generate_ex1, generate_star, random_lts, random_system, RandomSystemConfig,
};
use pis::lts::{ActionId, Label, Lts, LtsBuilder, StateId};
use pis::scaling::bench_scaling;
use pis::system::{PortRef, System};
use pis::text::{parse_system, render_system};
use pis::verify::{
    check_oracle, check_theorem, cross_validate, replay_reaches_deadlock, PreconditionFailure,
    Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn criterion(name: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) if detail.is_empty() => println!("{name}: pass"),
        Ok(detail) => println!("{name}: pass ({detail})"),
        Err(msg) => {
            println!("{name}: fail ({msg})");
            panic!("{name}: {msg}");
        }
    }
}

#[test]
fn cross_validation_finds_no_soundness_gap() {
    criterion("acceptance 1 cross-validation soundness", || {
        let started = Instant::now();
        let mut checked = 0usize;
        let mut check = |sys: &System| -> Result<(), String> {
            let report = cross_validate(sys).map_err(|e| format!("{}: {e}", sys.name()))?;
            if report.soundness_violation {
                return Err(format!("soundness violation on {}", sys.name()));
            }
            if report.oracle.is_none() {
                return Err(format!("exhaustive search ran out of budget on {}", sys.name()));
            }
            checked += 1;
            Ok(())
        };
        check(&generate_ex1())?;
        for n in 1..=8 {
            check(&generate_star(n).expect("n >= 1"))?;
        }
        let cfg = RandomSystemConfig {
            max_components: 4,
            max_behavior_states: 5,
            ..RandomSystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..200 {
            check(&random_system(&mut rng, &cfg))?;
        }
        let elapsed = started.elapsed();
        if elapsed.as_secs() >= 60 {
            return Err(format!("took {elapsed:?}, limit is 60s"));
        }
        Ok(format!("{checked} systems in {:.1}s", elapsed.as_secs_f64()))
    });
}

#[test]
fn fixtures_pass_the_compositional_check() {
    criterion("acceptance 2 compositional verdicts", || {
        let verdict = check_theorem(&generate_ex1()).map_err(|e| e.to_string())?;
        if verdict != Verdict::DeadlockFreeByTheorem {
            return Err(format!("ex1: {verdict}"));
        }
        for n in 1..=8 {
            let sys = generate_star(n).expect("n >= 1");
            let verdict = check_theorem(&sys).map_err(|e| e.to_string())?;
            if verdict != Verdict::DeadlockFreeByTheorem {
                return Err(format!("{}: {verdict}", sys.name()));
            }
        }
        Ok("ex1 and 8 star sizes".into())
    });
}

#[test]
fn pair_cost_doubles_while_baseline_quadruples() {
    criterion("acceptance 3 scaling ratios", || {
        let started = Instant::now();
        let rows = bench_scaling(&[100, 200, 400]).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed();
        let mut detail = Vec::new();
        for w in rows.windows(2) {
            let pair = w[1].theorem_cost as f64 / w[0].theorem_cost as f64;
            let base = w[1].baseline_cost as f64 / w[0].baseline_cost as f64;
            if (pair - 2.0).abs() > 0.3 {
                return Err(format!("pair-cost ratio {pair:.2} at n={}", w[1].n));
            }
            if (base - 4.0).abs() > 0.6 {
                return Err(format!("baseline ratio {base:.2} at n={}", w[1].n));
            }
            detail.push(format!("to n={}: pair x{pair:.2} baseline x{base:.2}", w[1].n));
        }
        for row in &rows {
            detail.push(format!(
                "n={} {:.0}ms/{:.0}ms",
                row.n, row.theorem_ms, row.baseline_ms
            ));
        }
        if elapsed.as_secs() >= 30 {
            return Err(format!("took {elapsed:?}, limit is 30s"));
        }
        Ok(detail.join(", "))
    });
}

#[test]
fn partition_refinement_matches_relational_oracle() {
    criterion("acceptance 4 partition refinement agreement", || {
        let mut cases = 0usize;
        let mut run = |lts: &Lts, what: &str| -> Result<(), String> {
            let partition = branching_partition(lts);
            if !oracle::agrees_with(lts, &partition) {
                return Err(format!("disagreement on {what}"));
            }
            cases += 1;
            Ok(())
        };

        let two_labels = [Label::visible("a"), Label::visible("b"), Label::Tau];
        let triples2 = all_triples(2, two_labels.len());
        for mask in 0u32..1 << triples2.len() {
            let chosen: Vec<usize> = (0..triples2.len()).filter(|i| mask >> i & 1 == 1).collect();
            for init in 1u32..1 << 2 {
                let lts = enumerated_lts(2, &two_labels, &triples2, &chosen, init);
                run(&lts, &format!("2-state case {mask:#x}/{init}"))?;
            }
        }

        let one_label = [Label::visible("a"), Label::Tau];
        let triples3 = all_triples(3, one_label.len());
        for k in 0..=3 {
            for chosen in combinations(triples3.len(), k) {
                for init in 1u32..1 << 3 {
                    let lts = enumerated_lts(3, &one_label, &triples3, &chosen, init);
                    run(&lts, &format!("3-state case {chosen:?}/{init}"))?;
                }
            }
        }
        let triples4 = all_triples(4, one_label.len());
        for k in 0..=2 {
            for chosen in combinations(triples4.len(), k) {
                for init in 1u32..1 << 4 {
                    let lts = enumerated_lts(4, &one_label, &triples4, &chosen, init);
                    run(&lts, &format!("4-state case {chosen:?}/{init}"))?;
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(104);
        for i in 0..500 {
            let lts = random_lts(&mut rng, 8, &["a", "b"], true);
            run(&lts, &format!("random sample {i}"))?;
        }
        Ok(format!("{cases} cases"))
    });
}

#[test]
fn minimization_is_idempotent_and_equivalence_preserving() {
    criterion("acceptance 5 minimization laws", || {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        for i in 0..500 {
            let lts = random_lts(&mut rng, 8, &["a", "b"], true);
            let min = minimize(&lts);
            if minimize(&min) != min {
                return Err(format!("sample {i}: a second pass changed the result"));
            }
            if !branching_bisimilar(&lts, &min) {
                return Err(format!("sample {i}: not equivalent to the original"));
            }
            if min.state_count() > lts.reachable_states().len() {
                return Err(format!("sample {i}: more states than the reachable part"));
            }
        }
        Ok("500 samples".into())
    });
}

#[test]
fn compositions_match_exhaustive_products() {
    criterion("acceptance 6 composition against full products", || {
        let cfg = RandomSystemConfig {
            max_components: 3,
            max_behavior_states: 4,
            ..RandomSystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        for i in 0..200 {
            let sys = random_system(&mut rng, &cfg);

            let comps: Vec<_> = sys.components().cloned().collect();
            let parts: Vec<&Lts> = comps
                .iter()
                .map(|c| sys.behavior(c).expect("valid systems are complete"))
                .collect();
            let alphabets: Vec<BTreeSet<ActionId>> =
                comps.iter().map(|c| sys.component_alphabet(c)).collect();
            let (want_lts, want_map) = naive_product(&sys, &parts, &alphabets, false);
            let got = global_behavior(&sys, DEFAULT_STATE_BUDGET)
                .map_err(|e| format!("sample {i}: {e}"))?;
            if got.lts != want_lts {
                return Err(format!("sample {i}: global behavior differs"));
            }
            if got.label_actions != want_map {
                return Err(format!("sample {i}: global label decoding differs"));
            }

            let ports: BTreeSet<PortRef> = sys.ports().cloned().collect();
            let parts: Vec<&Lts> = ports
                .iter()
                .map(|p| sys.protocol(p).expect("valid systems are complete"))
                .collect();
            let alphabets: Vec<BTreeSet<ActionId>> = ports
                .iter()
                .map(|p| sys.port_alphabet(p).expect("declared").clone())
                .collect();
            let (want_lts, want_map) = naive_product(&sys, &parts, &alphabets, true);
            let got = port_behavior(&sys, &ports, DEFAULT_STATE_BUDGET)
                .map_err(|e| format!("sample {i}: {e}"))?;
            if got.lts != want_lts {
                return Err(format!("sample {i}: port product differs"));
            }
            if got.label_actions != want_map {
                return Err(format!("sample {i}: port label decoding differs"));
            }
        }
        Ok("200 systems, global and port products".into())
    });
}

#[test]
fn port_pair_traces_alternate_handshakes() {
    criterion("acceptance 7 pair trace language", || {
        let sys = generate_ex1();
        let ports: BTreeSet<PortRef> = [PortRef::new("i", "p"), PortRef::new("j", "q")].into();
        let composite =
            port_behavior(&sys, &ports, DEFAULT_STATE_BUDGET).map_err(|e| e.to_string())?;
        if !composite.lts.is_tau_free() {
            return Err("pair product has internal steps".into());
        }
        let got = traces_to_depth(&composite.lts, 6);
        let a = render_interaction(&[ActionId::new("a_i"), ActionId::new("a_j")].into());
        let c = render_interaction(&[ActionId::new("c_i"), ActionId::new("c_j")].into());
        let mut want: BTreeSet<Vec<Label>> = BTreeSet::new();
        for len in 0..=6 {
            want.insert(
                (0..len)
                    .map(|i| if i % 2 == 0 { a.clone() } else { c.clone() })
                    .collect(),
            );
        }
        if got != want {
            return Err(format!(
                "trace set has {} members, expected {}",
                got.len(),
                want.len()
            ));
        }
        Ok(format!("{} traces", got.len()))
    });
}

#[test]
fn inapplicable_systems_come_with_usable_evidence() {
    criterion("acceptance 8 precondition diagnostics", || {
        let ring = generate::ring_system();
        match check_theorem(&ring).map_err(|e| e.to_string())? {
            Verdict::Inapplicable { failures }
                if failures == vec![PreconditionFailure::NotTreeLike] => {}
            other => return Err(format!("ring: {other}")),
        }
        match check_oracle(&ring).map_err(|e| e.to_string())? {
            Verdict::DeadlockFreeByOracle => {}
            other => return Err(format!("ring exhaustive search: {other}")),
        }

        let sys = generate::pair_deadlock_system();
        let failures = match check_theorem(&sys).map_err(|e| e.to_string())? {
            Verdict::Inapplicable { failures } => failures,
            other => return Err(format!("pair fixture: {other}")),
        };
        let (left, right, trace) = match failures.as_slice() {
            [PreconditionFailure::PairDeadlock { left, right, trace }] => {
                (left.clone(), right.clone(), trace.clone())
            }
            other => return Err(format!("pair fixture failures: {other:?}")),
        };
        let minimized: BTreeMap<PortRef, Lts> = sys
            .protocols()
            .map(|(p, protocol)| (p.clone(), minimize(protocol)))
            .collect();
        let reduced = sys.with_protocols(minimized);
        let pair: BTreeSet<PortRef> = [left, right].into();
        let composite =
            port_behavior(&reduced, &pair, DEFAULT_STATE_BUDGET).map_err(|e| e.to_string())?;
        if !replay_reaches_deadlock(&composite.lts, &trace) {
            return Err("witness does not replay to a stuck state".into());
        }
        match check_oracle(&sys).map_err(|e| e.to_string())? {
            Verdict::DeadlockFreeByOracle => {}
            other => return Err(format!("pair fixture exhaustive search: {other}")),
        }
        Ok(String::new())
    });
}

#[test]
fn text_format_round_trips() {
    criterion("acceptance 9 text round-trip", || {
        let mut systems: Vec<System> = vec![
            generate_ex1(),
            generate_star(1).expect("n >= 1"),
            generate_star(5).expect("n >= 1"),
            generate::two_phase_star(3).expect("n >= 1"),
            generate::single_loop_system(),
            generate::shared_port_system(),
            generate::ring_system(),
            generate::disconnected_system(),
            generate::triple_sync_system(),
            generate::pair_deadlock_system(),
            generate::sink_pair_system(),
            generate::sticky_tau_system(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        for _ in 0..100 {
            systems.push(random_system(&mut rng, &RandomSystemConfig::default()));
        }
        let total = systems.len();
        for sys in &systems {
            let text = render_system(sys);
            let parsed = parse_system(&text)
                .map_err(|issues| format!("{}: {}", sys.name(), issues[0]))?;
            if &parsed != sys {
                return Err(format!("{}: reparse differs", sys.name()));
            }
        }
        Ok(format!("{total} systems"))
    });
}

fn all_triples(states: usize, labels: usize) -> Vec<(usize, usize, usize)> {
    let mut all = Vec::new();
    for f in 0..states {
        for l in 0..labels {
            for t in 0..states {
                all.push((f, l, t));
            }
        }
    }
    all
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(acc.clone());
            return;
        }
        for i in start..=n - left {
            acc.push(i);
            rec(i + 1, n, left - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn enumerated_lts(
    states: usize,
    labels: &[Label],
    all: &[(usize, usize, usize)],
    chosen: &[usize],
    init_mask: u32,
) -> Lts {
    let mut b = LtsBuilder::new();
    for s in 0..states {
        b.state(format!("s{s}"));
        if init_mask >> s & 1 == 1 {
            b.initial(format!("s{s}"));
        }
    }
    for &i in chosen {
        let (f, l, t) = all[i];
        b.transition(format!("s{f}"), labels[l].clone(), format!("s{t}"));
    }
    b.build().expect("enumerated builder output is well-formed")
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for item in list {
                let mut row = prefix.clone();
                row.push(item.clone());
                next.push(row);
            }
        }
        acc = next;
    }
    acc
}

/// Reference product: enumerate every state tuple up front, add every
/// joint and interleaved step, then restrict to the reachable part.
fn naive_product(
    system: &System,
    parts: &[&Lts],
    alphabets: &[BTreeSet<ActionId>],
    tau_interleave: bool,
) -> (Lts, BTreeMap<Label, BTreeSet<ActionId>>) {
    let scope: BTreeSet<&ActionId> = alphabets.iter().flatten().collect();
    let mut shares: BTreeSet<BTreeSet<ActionId>> = BTreeSet::new();
    for alpha in system.interactions() {
        let share: BTreeSet<ActionId> = alpha
            .actions()
            .iter()
            .filter(|a| scope.contains(*a))
            .cloned()
            .collect();
        if !share.is_empty() {
            shares.insert(share);
        }
    }
    let mut specs: Vec<(Label, BTreeSet<ActionId>, Vec<Option<ActionId>>)> = Vec::new();
    'shares: for share in shares {
        let mut per = Vec::with_capacity(alphabets.len());
        for alphabet in alphabets {
            let mine: Vec<&ActionId> = share.iter().filter(|a| alphabet.contains(*a)).collect();
            match mine.len() {
                0 => per.push(None),
                1 => per.push(Some(mine[0].clone())),
                _ => continue 'shares,
            }
        }
        specs.push((render_interaction(&share), share, per));
    }

    let name = |tuple: &[&StateId]| -> StateId {
        let joined = tuple
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(",");
        StateId::new(format!("({joined})"))
    };

    let state_lists: Vec<Vec<&StateId>> = parts.iter().map(|p| p.states().collect()).collect();
    let mut transitions: BTreeSet<(StateId, Label, StateId)> = BTreeSet::new();
    for tuple in &cartesian(&state_lists) {
        for (label, _, per) in &specs {
            let mut choices: Vec<Vec<&StateId>> = Vec::with_capacity(per.len());
            let mut blocked = false;
            for (k, slot) in per.iter().enumerate() {
                match slot {
                    None => choices.push(vec![tuple[k]]),
                    Some(action) => {
                        let succs: Vec<&StateId> = parts[k]
                            .outgoing(tuple[k])
                            .filter(|(l, _)| l.action() == Some(action))
                            .map(|(_, t)| t)
                            .collect();
                        if succs.is_empty() {
                            blocked = true;
                            break;
                        }
                        choices.push(succs);
                    }
                }
            }
            if blocked {
                continue;
            }
            for succ in cartesian(&choices) {
                transitions.insert((name(tuple), label.clone(), name(&succ)));
            }
        }
        if tau_interleave {
            for (k, part) in parts.iter().enumerate() {
                for (l, t) in part.outgoing(tuple[k]) {
                    if l.is_tau() {
                        let mut succ = tuple.clone();
                        succ[k] = t;
                        transitions.insert((name(tuple), Label::Tau, name(&succ)));
                    }
                }
            }
        }
    }

    let init_lists: Vec<Vec<&StateId>> = parts.iter().map(|p| p.initials().collect()).collect();
    let initials: BTreeSet<StateId> = cartesian(&init_lists).iter().map(|t| name(t)).collect();

    let mut adjacency: BTreeMap<&StateId, Vec<&StateId>> = BTreeMap::new();
    for (f, _, t) in &transitions {
        adjacency.entry(f).or_default().push(t);
    }
    let mut reachable: BTreeSet<StateId> = BTreeSet::new();
    let mut queue: Vec<StateId> = initials.iter().cloned().collect();
    while let Some(s) = queue.pop() {
        if !reachable.insert(s.clone()) {
            continue;
        }
        for t in adjacency.get(&s).into_iter().flatten() {
            if !reachable.contains(*t) {
                queue.push((*t).clone());
            }
        }
    }

    let kept: BTreeSet<(StateId, Label, StateId)> = transitions
        .iter()
        .filter(|(f, _, _)| reachable.contains(f))
        .cloned()
        .collect();
    let labels: BTreeSet<Label> = kept.iter().map(|(_, l, _)| l.clone()).collect();
    let mut label_actions: BTreeMap<Label, BTreeSet<ActionId>> = BTreeMap::new();
    for (label, share, _) in &specs {
        if labels.contains(label) {
            label_actions.insert(label.clone(), share.clone());
        }
    }
    let lts = Lts::new(reachable, labels, kept, initials)
        .expect("reference product is well-formed");
    (lts, label_actions)
}

fn traces_to_depth(lts: &Lts, depth: usize) -> BTreeSet<Vec<Label>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<(&StateId, Vec<Label>)> =
        lts.initials().map(|s| (s, Vec::new())).collect();
    while let Some((s, prefix)) = stack.pop() {
        if prefix.len() == depth {
            out.insert(prefix);
            continue;
        }
        for (l, t) in lts.outgoing(s) {
            let mut next = prefix.clone();
            next.push(l.clone());
            stack.push((t, next));
        }
        out.insert(prefix);
    }
    out
}
