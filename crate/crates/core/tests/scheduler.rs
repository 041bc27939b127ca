use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zzsched::circuit::benchmarks::{benchmark, Benchmark};
use zzsched::circuit::{Circuit, Durations, Gate};
use zzsched::scheduler::{
    gate_distance, par_sched, schedule, separate_two_qubit_gates, Requirement, SchedulePlan, SchedulerConfig,
};
use zzsched::suppression::metrics;
use zzsched::topology::{grid_topology, snake_layout, TopologyGraph};

fn check_plan(g: &TopologyGraph, c: &Circuit, plan: &SchedulePlan) {
    // Every gate is placed once and dependencies move strictly forward, with
    // frame gates sitting before the physical gates of their layer.
    assert_eq!(plan.gate_layer.len(), c.len());
    let key = |i: usize| 2 * plan.gate_layer[i] + usize::from(!c.gates()[i].is_virtual());
    for i in 0..c.len() {
        for &p in c.predecessors(i) {
            let both_frame = c.gates()[i].is_virtual() && c.gates()[p].is_virtual();
            assert!(key(p) < key(i) || (both_frame && key(p) == key(i)), "gate {p} -> {i}");
        }
    }
    let mut physical = 0;
    for layer in &plan.layers {
        let cut = layer.cut(g.num_vertices());
        let mut seen = vec![false; g.num_vertices()];
        for gate in &layer.gates {
            for &q in &gate.qubits {
                assert!(!seen[q], "qubit {q} used twice");
                seen[q] = true;
                assert!(cut.in_s(q));
            }
        }
        assert_eq!(metrics(g, &cut), (layer.n_q, layer.n_c));
        physical += layer.gates.iter().filter(|g| g.name() != "id").count();
        let longest = layer.gates.iter().map(|g| Durations::default().of(g)).fold(0.0, f64::max);
        assert_eq!(layer.duration, longest);
    }
    let virt = c.gates().iter().filter(|g| g.is_virtual()).count();
    assert_eq!(physical + virt, c.len());
    let framed: usize = plan.layers.iter().map(|l| l.frame.len()).sum::<usize>() + plan.trailing.len();
    assert_eq!(framed, virt);
}

#[test]
fn worked_example_on_a_three_by_three_grid() {
    let g = grid_topology(3, 3, 200e3).unwrap();
    let c = Circuit::parse("qubits 9\nh 0\nh 2\nh 4\nh 6\nx 7\ncx 0 3\ncx 4 1\ncx 2 5\ncx 6 7\nh 3\nx 5\n").unwrap();
    let cfg = SchedulerConfig::for_topology(&g);
    assert_eq!(cfg.requirement, Requirement { max_n_q: 4, max_n_c: 6 });
    let plan = schedule(&g, &c, &cfg).unwrap();
    check_plan(&g, &c, &plan);
    let ids = |l: usize| -> Vec<String> {
        plan.layers[l].gates.iter().filter(|g| g.name() != "id").map(|g| g.to_string()).collect()
    };
    assert_eq!(ids(0), ["h 0", "h 2", "h 4", "h 6"]);
    assert!(plan.layers[0].identities().map(|g| g.qubits[0]).eq([8]));
    // The two distant gates share layer two; the close one waits.
    assert!(ids(1).contains(&"cx 0 3".to_string()));
    assert!(ids(1).contains(&"cx 2 5".to_string()));
    assert!(!ids(1).contains(&"cx 4 1".to_string()));
    assert!(plan.layers.iter().all(|l| l.meets_requirement));

    let par = par_sched(&g, &c, Durations::default()).unwrap();
    check_plan(&g, &c, &par);
    assert_eq!(par.layers[0].gates.len(), 5);
}

#[test]
fn motivating_example_needs_two_layers() {
    let g = grid_topology(3, 5, 200e3).unwrap();
    let c = Circuit::parse("qubits 15\ncx 6 7\nh 8\nh 9\n").unwrap();
    let plan = schedule(&g, &c, &SchedulerConfig::for_topology(&g)).unwrap();
    check_plan(&g, &c, &plan);
    assert_eq!(plan.depth(), 2);
    assert_eq!((plan.layers[1].n_q, plan.layers[1].n_c), (1, 0));
}

#[test]
fn trivial_circuits() {
    let g = grid_topology(2, 3, 200e3).unwrap();
    let cfg = SchedulerConfig::for_topology(&g);
    let empty = Circuit::new(6, vec![]).unwrap();
    let plan = schedule(&g, &empty, &cfg).unwrap();
    assert_eq!((plan.depth(), plan.total_duration), (0, 0.0));
    let serial = Circuit::parse("qubits 6\nrx90 0\nrx90 0\nrx90 0\n").unwrap();
    for plan in [schedule(&g, &serial, &cfg).unwrap(), par_sched(&g, &serial, Durations::default()).unwrap()] {
        assert_eq!(plan.depth(), 3);
        check_plan(&g, &serial, &plan);
    }
    let single = Circuit::parse("qubits 6\nrzx90 0 1\n").unwrap();
    assert_eq!(schedule(&g, &single, &cfg).unwrap().depth(), 1);
}

#[test]
fn distant_gates_share_a_layer() {
    let g = grid_topology(3, 4, 200e3).unwrap();
    let c = Circuit::parse("qubits 12\nrzx90 0 4\nrzx90 7 11\n").unwrap();
    let plan = schedule(&g, &c, &SchedulerConfig::for_topology(&g)).unwrap();
    assert_eq!(plan.depth(), 1);
    assert!(plan.layers[0].meets_requirement);
}

#[test]
fn benchmarks_schedule_cleanly() {
    let g = grid_topology(2, 3, 200e3).unwrap();
    let layout = snake_layout(2, 3);
    for b in Benchmark::ALL {
        let c = benchmark(b, 6, 0).unwrap().to_native().unwrap();
        let mapped: Vec<Gate> = c
            .gates()
            .iter()
            .map(|gate| Gate { kind: gate.kind.clone(), qubits: gate.qubits.iter().map(|&q| layout[q]).collect() })
            .collect();
        let c = Circuit::new(6, mapped).unwrap();
        let cfg = SchedulerConfig::for_topology(&g);
        let zzx = schedule(&g, &c, &cfg).unwrap();
        let par = par_sched(&g, &c, cfg.durations).unwrap();
        check_plan(&g, &c, &zzx);
        check_plan(&g, &c, &par);
        assert!(zzx.depth() >= par.depth());
    }
}

fn random_gate_set(g: &TopologyGraph, rng: &mut ChaCha8Rng, count: usize) -> Vec<Gate> {
    // Disjoint couplings, so the gates could in principle run together.
    let mut edges: Vec<usize> = (0..g.num_edges()).collect();
    edges.shuffle(rng);
    let mut used = vec![false; g.num_vertices()];
    let mut gates = Vec::new();
    for e in edges {
        let (u, v) = g.edge(e);
        if used[u] || used[v] {
            continue;
        }
        used[u] = true;
        used[v] = true;
        gates.push(if rng.random_bool(0.5) { Gate::rzx90(u, v) } else { Gate::rzx90(v, u) });
        if gates.len() == count {
            break;
        }
    }
    gates
}

#[test]
fn closest_gates_end_up_in_different_layers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut multi = 0;
    for trial in 0..200 {
        let g = if trial % 2 == 0 { grid_topology(3, 4, 2e5) } else { grid_topology(4, 4, 2e5) }.unwrap();
        let count = rng.random_range(2..=6);
        let gates = random_gate_set(&g, &mut rng, count);
        let cfg = SchedulerConfig::for_topology(&g);
        let rounds = separate_two_qubit_gates(&g, &gates, &cfg).unwrap();
        let mut layer_of = vec![usize::MAX; gates.len()];
        for (l, r) in rounds.iter().enumerate() {
            for &i in &r.chosen {
                layer_of[i] = l;
            }
        }
        assert!(layer_of.iter().all(|&l| l != usize::MAX));
        if rounds.len() > 1 {
            multi += 1;
            // Every round that had to split separated its closest pair, and the
            // globally closest pair never shares a layer.
            for r in &rounds {
                if let Some((a, b)) = r.seeds {
                    violations += usize::from(layer_of[a] == layer_of[b]);
                }
            }
            let d = |a: usize, b: usize| gate_distance(&g, &gates[a], &gates[b]).unwrap();
            let min = (0..gates.len()).flat_map(|a| (a + 1..gates.len()).map(move |b| (a, b))).map(|(a, b)| d(a, b)).min().unwrap();
            let (a, b) = rounds[0].seeds.expect("a split round names its seeds");
            violations += usize::from(d(a, b) != min);
        }
    }
    assert_eq!(violations, 0);
    assert!(multi > 20, "only {multi} sets needed more than one layer");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_native_circuits_respect_dependencies(seed in 0u64..1000, len in 0usize..40) {
        let g = grid_topology(3, 3, 200e3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gates = Vec::new();
        for _ in 0..len {
            match rng.random_range(0..3) {
                0 => gates.push(Gate::rz(rng.random_range(-3.0..3.0), rng.random_range(0..9))),
                1 => gates.push(Gate::rx90(rng.random_range(0..9))),
                _ => {
                    let (u, v) = g.edge(rng.random_range(0..g.num_edges()));
                    gates.push(Gate::rzx90(u, v));
                }
            }
        }
        let c = Circuit::new(9, gates).unwrap();
        let cfg = SchedulerConfig::for_topology(&g);
        let plan = schedule(&g, &c, &cfg).unwrap();
        check_plan(&g, &c, &plan);
        for layer in &plan.layers {
            // Pulsed qubits without a circuit gate carry identities.
            let busy: usize = layer.gates.iter().map(|g| g.qubits.len()).sum();
            prop_assert_eq!(busy, layer.partition_s.len());
            prop_assert!(!layer.meets_requirement || cfg.requirement.accepts(layer.n_q, layer.n_c));
        }
        check_plan(&g, &c, &par_sched(&g, &c, cfg.durations).unwrap());
    }
}
