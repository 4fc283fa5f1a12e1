use std::collections::BTreeMap;

use crowdgroups_core::anno::GroupMembers;
use crowdgroups_core::encoder::{preprocess, EncoderConfig, TripletConfig};
use crowdgroups_core::eval::group_half_prf;
use crowdgroups_core::pipeline::{
    build_global_graph, calibrate_thresholds, detect_groups, edge_uncertainty, similarity,
    InteractionScorer, PipelineConfig, ZoomKind,
};
use crowdgroups_core::sim::{generate_scene, OracleConfig, OracleScorer, SimConfig};

fn sim_cfg(seed: u64) -> SimConfig {
    SimConfig {
        frame_w: 8000,
        frame_h: 5000,
        num_frames: 900,
        keyframe_interval: 30,
        n_groups: 12,
        n_singles: 6,
        stationary_fraction: 0.85,
        member_spacing: 280.0,
        member_offset_std: 130.0,
        interaction_rate: 5.0,
        interaction_mean_duration: 600.0,
        seed,
        ..SimConfig::default()
    }
}

fn oracle_cfg(seed: u64) -> OracleConfig {
    OracleConfig { flip_prob: 0.1, jitter_std: 0.05, clips_per_edge: 12, seed }
}

#[test]
fn policy_ordering_smoke() {
    let start = std::time::Instant::now();
    let enc = EncoderConfig { hidden: 16, layers: 2, ..EncoderConfig::default() };
    let train_scenes: Vec<_> =
        (0..3).map(|s| generate_scene(&sim_cfg(100 + s)).unwrap().0).collect();
    let tcfg = TripletConfig { epochs: 40, seed: 5, ..TripletConfig::default() };
    let (params, report) =
        crowdgroups_core::encoder::train(&train_scenes, &enc, &tcfg).unwrap();
    eprintln!(
        "trained: {} pairs, loss {:.4} -> {:.4}, {:?}",
        report.pairs,
        report.epoch_losses.first().unwrap(),
        report.epoch_losses.last().unwrap(),
        start.elapsed()
    );

    let mut base = PipelineConfig::default();
    base.tau = 32;
    base.clip_len = 60;
    base.policy.eta = 10;
    base.radius_scale = 0.5;
    base.merge.beta = 0.7;
    let train_oracles: Vec<OracleScorer> = train_scenes
        .iter()
        .enumerate()
        .map(|(s, scene)| OracleScorer::new(scene, oracle_cfg(7000 + s as u64)).unwrap())
        .collect();
    let scorer_refs: Vec<&dyn InteractionScorer> =
        train_oracles.iter().map(|o| o as &dyn InteractionScorer).collect();
    let policies = [
        (ZoomKind::Uncertainty, 0usize, false),
        (ZoomKind::Random, 10, true),
        (ZoomKind::Uncertainty, 10, true),
    ];
    let mut configs = Vec::new();
    for (pi, (kind, eta, use_local)) in policies.into_iter().enumerate() {
        let mut c = base.clone();
        c.policy.kind = kind;
        c.policy.eta = eta;
        c.use_local = use_local;
        let cal = calibrate_thresholds(&train_scenes, &scorer_refs, &params, &c).unwrap();
        eprintln!(
            "policy {pi} calibrated theta {:.2} theta_pos {:.2}, {:?}",
            cal.theta,
            cal.theta_pos,
            start.elapsed()
        );
        c.merge.theta = cal.theta;
        c.policy.theta_pos = cal.theta_pos;
        configs.push(c);
    }
    let cfg = configs[2].clone();

    // edge anatomy of one eval scene: are false candidates the high-variance ones?
    {
        let (scene, _) = generate_scene(&sim_cfg(900)).unwrap();
        let mut embeddings = BTreeMap::new();
        let mut inputs = BTreeMap::new();
        let mut tracks = Vec::new();
        for t in &scene.tracks {
            let input = preprocess(t, &scene.meta).unwrap();
            embeddings.insert(t.person_id, params.encode(&input, false, 0).unwrap());
            inputs.insert(t.person_id, input);
            tracks.push(t.clone());
        }
        let graph = build_global_graph(
            &embeddings,
            &tracks,
            cfg.cooccur_min_frames,
            cfg.radius_scale * scene.mean_box_height(),
        )
        .unwrap();
        let group_of: BTreeMap<u32, u32> = scene
            .groups
            .iter()
            .flat_map(|g| g.members.iter().map(move |&m| (m, g.group_id)))
            .collect();
        let mut graph = graph;
        let (mut true_below_pos, mut true_total) = (0, 0);
        let mut errors = Vec::new(); // false edges merging at theta
        let mut cand = Vec::new();
        let mut is_same = Vec::new();
        for (i, e) in graph.edges.iter().enumerate() {
            let same = group_of.get(&e.a).is_some() && group_of.get(&e.a) == group_of.get(&e.b);
            is_same.push(same);
            let sim = similarity(e.w_global, graph.sigma);
            if same {
                true_total += 1;
                if sim < cfg.policy.theta_pos {
                    true_below_pos += 1;
                }
            }
            if sim < cfg.policy.theta_pos {
                continue;
            }
            cand.push(i);
            if (!same && sim > cfg.merge.theta) || (same && sim <= cfg.merge.theta) {
                errors.push(i);
            }
        }
        let vetoes = errors.iter().filter(|&&i| !is_same[i]).count();
        eprintln!(
            "anatomy: edges {} cand {} errors {} (veto {vetoes} connect {}) true<pos {}/{}",
            graph.edges.len(),
            cand.len(),
            errors.len(),
            errors.len() - vetoes,
            true_below_pos,
            true_total
        );
        {
            let mut samples: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
            for &i in &cand {
                let (a, b) = (graph.edges[i].a, graph.edges[i].b);
                for id in [a, b] {
                    if !samples.contains_key(&id) {
                        samples.insert(id, params.mc_sample(&inputs[&id], cfg.tau, cfg.mc_seed).unwrap());
                    }
                }
                let v = edge_uncertainty(&samples[&a], &samples[&b]).unwrap();
                graph.edges[i].uncertainty = Some(v);
            }
            let mut order: Vec<usize> = cand.clone();
            order.sort_by(|&x, &y| {
                graph.edges[y].uncertainty.unwrap().total_cmp(&graph.edges[x].uncertainty.unwrap())
            });
            for (rank, &i) in order.iter().enumerate() {
                let e = &graph.edges[i];
                let marker = if errors.contains(&i) { " <-- ERROR" } else { "" };
                eprintln!(
                    "  var rank {rank:2}: sim {:.3} var {:.2e} same {}{}",
                    similarity(e.w_global, graph.sigma),
                    e.uncertainty.unwrap(),
                    u8::from(is_same[i]),
                    marker
                );
            }
        }
        // local-score scale: oracle means per class over all candidates
        let oracle = OracleScorer::new(&scene, oracle_cfg(4242)).unwrap();
        let extractor = crowdgroups_core::pipeline::DistanceClipExtractor::new(
            &scene,
            cfg.clip_radius_scale * scene.mean_box_height(),
            cfg.clip_len,
        )
        .unwrap();
        crowdgroups_core::pipeline::score_local_edges(&mut graph, &cand, &oracle, &extractor)
            .unwrap();
        let (mut lt, mut lf, mut nt, mut nf, mut min_t, mut max_f) = (0.0, 0.0, 0, 0, 1.0f64, 0.0f64);
        for &i in &cand {
            let w = graph.edges[i].w_local.unwrap();
            if is_same[i] {
                lt += w;
                nt += 1;
                min_t = min_t.min(w);
            } else {
                lf += w;
                nf += 1;
                max_f = max_f.max(w);
            }
        }
        eprintln!(
            "  w_local: true mean {:.3} min {:.3} (n {nt}), false mean {:.3} max {:.3} (n {nf})",
            lt / nt.max(1) as f64,
            min_t,
            lf / nf.max(1) as f64,
            max_f
        );
        // sim histogram over all edges, true vs false per decile
        let mut hist = [[0u32; 2]; 10];
        for (i, e) in graph.edges.iter().enumerate() {
            let sim = similarity(e.w_global, graph.sigma);
            let bin = ((sim * 10.0) as usize).min(9);
            hist[bin][usize::from(is_same[i])] += 1;
        }
        let fmt: Vec<String> =
            hist.iter().enumerate().map(|(d, c)| format!("{d}:{}/{}", c[1], c[0])).collect();
        eprintln!("  sim deciles true/false: {}", fmt.join(" "));
    }

    let mut sums = [0.0f64; 3];
    let n_eval = 22;
    for s in 0..n_eval {
        let (scene, _) = generate_scene(&sim_cfg(900 + s)).unwrap();
        let gt: Vec<GroupMembers> = scene.groups.iter().map(GroupMembers::from).collect();
        let oracle = OracleScorer::new(&scene, oracle_cfg(77 + s)).unwrap();
        for (pi, pc) in configs.iter().enumerate() {
            let mut c = pc.clone();
            c.policy.seed = 31 * s + pi as u64;
            let (pred, diag) = detect_groups(&scene, &params, &oracle, &c).unwrap();
            let f1 = group_half_prf(&pred, &gt).f1;
            sums[pi] += f1;
            if s < 2 {
                eprintln!(
                    "scene {s} policy {pi}: edges {} cand {} zoomed {} groups {} (gt {}) f1 {f1:.3}",
                    diag.edges,
                    diag.candidates,
                    diag.zoomed,
                    diag.groups,
                    gt.len()
                );
            }
        }
    }
    eprintln!(
        "mean F1: global {:.4} random {:.4} uncertainty {:.4}, elapsed {:?}",
        sums[0] / n_eval as f64,
        sums[1] / n_eval as f64,
        sums[2] / n_eval as f64,
        start.elapsed()
    );

    // eta sweep at fixed thresholds, uncertainty policy
    let etas = [0usize, 2, 4, 6, 8, 10];
    let mut eta_means = Vec::new();
    for &eta in &etas {
        let mut sum = 0.0;
        for s in 0..10u64 {
            let (scene, _) = generate_scene(&sim_cfg(900 + s)).unwrap();
            let gt: Vec<GroupMembers> = scene.groups.iter().map(GroupMembers::from).collect();
            let oracle = OracleScorer::new(&scene, oracle_cfg(77 + s)).unwrap();
            let mut c = configs[2].clone();
            c.policy.eta = eta;
            c.policy.seed = 1000 + s;
            let (pred, _) = detect_groups(&scene, &params, &oracle, &c).unwrap();
            sum += group_half_prf(&pred, &gt).f1;
        }
        eta_means.push(sum / 10.0);
    }
    let d2: f64 = {
        let mut ranked: Vec<usize> = (0..eta_means.len()).collect();
        ranked.sort_by(|&a, &b| eta_means[a].total_cmp(&eta_means[b]));
        let mut rank = vec![0usize; eta_means.len()];
        for (r, &i) in ranked.iter().enumerate() {
            rank[i] = r;
        }
        rank.iter().enumerate().map(|(i, &r)| ((i as f64) - (r as f64)).powi(2)).sum()
    };
    let n = etas.len() as f64;
    let spearman = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    eprintln!("eta sweep means {:?} spearman {:.3}", eta_means, spearman);

    // tau sweep at fixed eta
    let mut tau_means = Vec::new();
    for &tau in &[10usize, 50, 100] {
        let mut sum = 0.0;
        for s in 0..10u64 {
            let (scene, _) = generate_scene(&sim_cfg(900 + s)).unwrap();
            let gt: Vec<GroupMembers> = scene.groups.iter().map(GroupMembers::from).collect();
            let oracle = OracleScorer::new(&scene, oracle_cfg(77 + s)).unwrap();
            let mut c = configs[2].clone();
            c.tau = tau;
            c.policy.seed = 2000 + s;
            let (pred, _) = detect_groups(&scene, &params, &oracle, &c).unwrap();
            sum += group_half_prf(&pred, &gt).f1;
        }
        tau_means.push(sum / 10.0);
    }
    let spread = tau_means.iter().cloned().fold(f64::MIN, f64::max)
        - tau_means.iter().cloned().fold(f64::MAX, f64::min);
    eprintln!("tau sweep means {:?} spread {:.4}, elapsed {:?}", tau_means, spread, start.elapsed());
    panic!("scratch");
}
