//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see every line.

mod common;

use std::time::Instant;

use amrlink::alignment::parse_alignment;
use amrlink::amr::{parse_penman, serialize_penman};
use amrlink::baseline::{
    aggregate_runs, binary_metrics, evaluate, random_guess, render_aggregate_table, PerLabel,
};
use amrlink::dataset::{generate_toy, ConflictLabels, ToyConfig, LABEL_NAMES};
use amrlink::matrix::{
    assemble_matrix, build_vocab, RelationVocab, SubtokenMap, BOS_ID, NONE_ID, SELF_ID, UNK_ID,
};
use amrlink::pipeline::{run_pipeline, PipelineConfig};
use amrlink::similarity::SimilarityProvider;
use amrlink::tdgl::{link_graphs, select_topic_token, TopicError};
use common::{
    brute_force_topic, matrix_oracle_cell, oracle_prf, random_graph, snapshot_tree,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Criterion 1: parse-serialize-parse is isomorphic to the first parse on
/// at least 200 random graphs with reentrancies and attributes, in under
/// five seconds.
#[test]
fn acceptance_1_penman_round_trip() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    for case in 0..250 {
        let graph = random_graph(&mut rng, 12);
        let text = serialize_penman(&graph).unwrap();
        let first = parse_penman(&text).unwrap();
        let second = parse_penman(&serialize_penman(&first).unwrap()).unwrap();
        assert!(second.is_isomorphic(&first), "case {case}: {text}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("acceptance 1 (penman round-trip, 250 graphs in {elapsed:?}): pass");
}

/// Criterion 2: node and edge counts of the linked graph equal
/// |C1|+|C2| and |R1|+|R2|+1 on at least 1000 random pairs.
#[test]
fn acceptance_2_linked_graph_cardinality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA2D);
    for case in 0..1000 {
        let make_side = |rng: &mut ChaCha8Rng| {
            let graph = random_graph(rng, 8);
            let tokens: Vec<String> =
                graph.nodes.iter().map(|n| n.concept.replace('-', "")).collect();
            let spec: Vec<String> = (0..tokens.len())
                .map(|i| format!("{}-{}|v{}", i, i + 1, i))
                .collect();
            let alignment = parse_alignment(&spec.join(" "), &graph, tokens.len()).unwrap();
            (graph, tokens, alignment)
        };
        let (g1, t1, a1) = make_side(&mut rng);
        let (g2, t2, a2) = make_side(&mut rng);
        let topic = common::CONCEPTS.choose(&mut rng).unwrap().replace('-', "");
        let lg = link_graphs(&g1, &a1, &t1, &g2, &a2, &t2, &topic, &SimilarityProvider::trigram())
            .unwrap_or_else(|e| panic!("case {case} failed to link: {e}"));
        assert_eq!(lg.nodes.len(), g1.nodes.len() + g2.nodes.len(), "case {case}");
        assert_eq!(lg.edges.len(), g1.edges.len() + g2.edges.len() + 1, "case {case}");
    }
    println!("acceptance 2 (linked-graph cardinality, 1000 pairs): pass");
}

/// Criterion 3: topic selection agrees with an exhaustive brute-force
/// argmax on at least 500 random instances.
#[test]
fn acceptance_3_topic_selection_matches_brute_force() {
    const POOL: [&str; 10] = [
        "alcohol", "alcoholic", "coffee", "drink", "milk", "milky", "sugar", "sugary", "water",
        "bed",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x7D61);
    let provider = SimilarityProvider::trigram();
    let mut agreements = 0usize;
    for case in 0..500 {
        let count = rng.gen_range(1..=8);
        let tokens: Vec<String> =
            (0..count).map(|_| POOL.choose(&mut rng).unwrap().to_string()).collect();
        let graph = random_graph(&mut rng, count);
        let mut spec = Vec::new();
        for idx in 0..count {
            if rng.gen_bool(0.7) {
                spec.push(format!("{}-{}|v{}", idx, idx + 1, rng.gen_range(0..graph.nodes.len())));
            }
        }
        let alignment = parse_alignment(&spec.join(" "), &graph, count).unwrap();
        let topic = POOL.choose(&mut rng).unwrap().to_string();
        let expected = brute_force_topic(&tokens, &topic, &alignment, &provider);
        match (select_topic_token(&tokens, &topic, &alignment, &provider), expected) {
            (Ok(pick), Some((index, node, score))) => {
                assert_eq!(pick.token_index, index, "case {case}");
                assert_eq!(pick.node, node, "case {case}");
                assert!((pick.score - score).abs() < 1e-15, "case {case}");
                agreements += 1;
            }
            (Err(TopicError::TopicUnalignable { .. }), None) => agreements += 1,
            (got, want) => panic!("case {case}: implementation {got:?} vs oracle {want:?}"),
        }
    }
    assert_eq!(agreements, 500);
    println!("acceptance 3 (topic selection vs brute force, 500 instances): pass");
}

/// Criterion 4: the worked advice pair links its two alcohol concepts.
#[test]
fn acceptance_4_worked_advice_pair() {
    let g1 = parse_penman(
        "(c / consume-01 :mode imperative :ARG1 (a / alcohol) :manner (m / moderate-03))",
    )
    .unwrap();
    let tokens1 = words("Consume alcohol in moderation");
    let a1 = parse_alignment("0-1|c 1-2|a 3-4|m", &g1, 4).unwrap();

    let g2 = parse_penman(
        "(d / drink-01 :mode imperative :polarity - :ARG1 (b / beverage :mod (aa / alcoholic)))",
    )
    .unwrap();
    let tokens2 = words("Do not drink alcoholic beverages.");
    let a2 = parse_alignment("2-3|d 3-4|aa 4-5|b", &g2, 5).unwrap();

    let lg = link_graphs(
        &g1,
        &a1,
        &tokens1,
        &g2,
        &a2,
        &tokens2,
        "alcohol",
        &SimilarityProvider::trigram(),
    )
    .unwrap();

    // advice-1 endpoint: the concept aligned to "alcohol"
    assert_eq!(lg.conflict_edge.source, "a");
    // advice-2 endpoint: the concept aligned to "alcoholic", renamed
    assert_eq!(&lg.conflict_edge.target, lg.rename_map.get("aa").unwrap());
    assert_eq!(lg.nodes.len(), g1.nodes.len() + g2.nodes.len());
    assert_eq!(lg.edges.len(), g1.edges.len() + g2.edges.len() + 1);
    println!("acceptance 4 (worked advice pair conflict endpoints): pass");
}

/// Criterion 5: the matrix construction rules, including the hand-traced
/// two-word matrix checked cell-for-cell against the independent oracle.
#[test]
fn acceptance_5_relation_matrix_rules() {
    // hand-traced fixture: [CLS] Consume alcohol [SEP] [SEP]
    let g = parse_penman("(c / consume-01 :mode imperative :ARG1 (a / alcohol))").unwrap();
    let a1 = parse_alignment("0-1|c 1-2|a", &g, 2).unwrap();
    let empty_graph = parse_penman("(z / zero)").unwrap();
    let a2 = parse_alignment("", &empty_graph, 0).unwrap();
    let sm = SubtokenMap::whole_words(2, 0);
    let vocab = build_vocab([&g]);
    let m = assemble_matrix(&g.edges, &g.attributes, &a1, &a2, &sm, &vocab).unwrap();

    // frozen hand trace of every assigned cell
    let arg1 = vocab.lookup(":ARG1");
    let arg1_of = vocab.lookup(":ARG1-of");
    let imperative = vocab.lookup("imperative");
    let expected = [
        (0usize, 0usize, SELF_ID),
        (1, 0, BOS_ID),
        (1, 1, imperative),
        (1, 2, arg1),
        (2, 0, BOS_ID),
        (2, 1, arg1_of),
        (2, 2, SELF_ID),
        (3, 3, SELF_ID),
        (4, 4, SELF_ID),
    ];
    for (i, j, id) in expected {
        assert_eq!(m.get(i, j), id, "hand trace at ({i}, {j})");
    }
    assert_eq!(m.non_none_cells().count(), expected.len());

    // cell-for-cell against the independent rule-by-rule oracle
    for row in 0..m.size() {
        for col in 0..m.size() {
            let oracle = matrix_oracle_cell(&g.edges, &g.attributes, &a1, &a2, &sm, &vocab, row, col);
            assert_eq!(m.get(row, col), oracle, "oracle mismatch at ({row}, {col})");
        }
    }

    // rule 1: a relation held out of the vocabulary maps to <unk>
    let reserved_only = RelationVocab::reserved();
    let held_out = assemble_matrix(&g.edges, &g.attributes, &a1, &a2, &sm, &reserved_only).unwrap();
    assert_eq!(held_out.get(1, 2), UNK_ID);

    // rule 2: ":mode imperative" replaces self on the owning word only
    assert_eq!(m.get(1, 1), imperative);
    assert_eq!(m.get(2, 2), SELF_ID);

    // rule 3: bos totality with correct [CLS]/first-[SEP] targets, and
    // rules 4 and 5 (None default, subtoken block constancy) on random
    // instances with subword splits
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for _ in 0..50 {
        let graph = random_graph(&mut rng, 6);
        let tokens: Vec<String> =
            graph.nodes.iter().map(|n| n.concept.replace('-', "")).collect();
        let spec: Vec<String> =
            (0..tokens.len()).map(|i| format!("{}-{}|v{}", i, i + 1, i)).collect();
        let a1 = parse_alignment(&spec.join(" "), &graph, tokens.len()).unwrap();
        let sizes: Vec<usize> = tokens.iter().map(|_| rng.gen_range(1..=3)).collect();
        let sm = SubtokenMap::from_group_sizes(&sizes, &[]).unwrap();
        let vocab = build_vocab([&graph]);
        let m = assemble_matrix(&graph.edges, &graph.attributes, &a1, &a2, &sm, &vocab).unwrap();
        // rule 3
        for row in 0..m.size() {
            let bos_cols: Vec<usize> =
                (0..m.size()).filter(|&c| m.get(row, c) == BOS_ID).collect();
            if [sm.cls(), sm.sep1(), sm.sep2()].contains(&row) {
                assert!(bos_cols.is_empty());
            } else {
                let target = if row < sm.sep1() { sm.cls() } else { sm.sep1() };
                assert_eq!(bos_cols, vec![target]);
            }
        }
        // rules 4 + 5 via the per-cell oracle over the whole matrix
        for row in 0..m.size() {
            for col in 0..m.size() {
                let oracle = matrix_oracle_cell(
                    &graph.edges,
                    &graph.attributes,
                    &a1,
                    &a2,
                    &sm,
                    &vocab,
                    row,
                    col,
                );
                assert_eq!(m.get(row, col), oracle, "({row}, {col})");
            }
        }
        // rule 5 block constancy, stated directly
        for (u, gu) in sm.groups().iter().enumerate() {
            for (w, gw) in sm.groups().iter().enumerate() {
                if u == w {
                    continue;
                }
                let first = m.get(gu.start, gw.start);
                for r in gu.clone() {
                    for c in gw.clone() {
                        assert_eq!(m.get(r, c), first);
                    }
                }
            }
        }
        let _ = NONE_ID;
    }
    println!("acceptance 5 (relation-matrix rules 1-5 + hand trace vs oracle): pass");
}

/// Criterion 6: metrics match the brute-force oracle on 1000 random
/// instances to 1e-12, and the worked example is exactly 0.5/0.5/0.5.
#[test]
fn acceptance_6_metrics_oracle() {
    let m = binary_metrics(&[true, true, false, false], &[true, false, true, false]).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));

    let mut rng = ChaCha8Rng::seed_from_u64(0x3E7);
    for case in 0..1000 {
        let n = rng.gen_range(1..120);
        let preds: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let golds: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.35)).collect();
        let got = binary_metrics(&preds, &golds).unwrap();
        let (p, r, f1) = oracle_prf(&preds, &golds);
        assert!((got.precision - p).abs() <= 1e-12, "case {case}");
        assert!((got.recall - r).abs() <= 1e-12, "case {case}");
        assert!((got.f1 - f1).abs() <= 1e-12, "case {case}");

        // weighted F1 over four random labels vs a per-label oracle sum
        let random_labels = |rng: &mut ChaCha8Rng| -> Vec<ConflictLabels> {
            (0..n)
                .map(|_| ConflictLabels {
                    direct: rng.gen_bool(0.4),
                    subtypical: rng.gen_bool(0.2),
                    conditional: rng.gen_bool(0.3),
                    temporal: rng.gen_bool(0.3),
                })
                .collect()
        };
        let label_preds = random_labels(&mut rng);
        let label_golds = random_labels(&mut rng);
        let metrics = evaluate(&label_preds, &label_golds).unwrap();
        let mut weighted = 0.0;
        let mut support_total = 0usize;
        for name in LABEL_NAMES {
            let p: Vec<bool> = label_preds.iter().map(|l| l.get(name)).collect();
            let g: Vec<bool> = label_golds.iter().map(|l| l.get(name)).collect();
            let (_, _, f1) = oracle_prf(&p, &g);
            let support = g.iter().filter(|x| **x).count();
            weighted += support as f64 * f1;
            support_total += support;
        }
        match metrics.weighted_f1 {
            Some(w) => assert!(
                (w - weighted / support_total as f64).abs() <= 1e-12,
                "case {case}"
            ),
            None => assert_eq!(support_total, 0, "case {case}"),
        }
    }
    println!("acceptance 6 (metrics vs brute-force oracle, 1000 instances): pass");
}

/// Criterion 7: on a seeded 500-train/200-test toy set the lexical
/// baseline reaches F1 >= 0.90 on conditional and temporal, strictly
/// beats seeded random guessing on all four labels, and produces a
/// three-seed mean/std report, all in under a minute.
#[test]
fn acceptance_7_toy_baseline_beats_random() {
    let started = Instant::now();
    let config = ToyConfig {
        direct: 140,
        subtypical: 140,
        conditional: 140,
        temporal: 140,
        negatives: 140,
        train_fraction: 5.0 / 7.0,
    };
    let records = generate_toy(&config, 2024);
    let (train, test) = amrlink::pipeline::split_records(&records);
    assert_eq!(train.len(), 500);
    assert_eq!(test.len(), 200);

    let train_labels: Vec<ConflictLabels> = train.iter().map(|r| r.labels).collect();
    let gold: Vec<ConflictLabels> = test.iter().map(|r| r.labels).collect();

    let seeds = [1u64, 2, 3];
    let mut model_runs = Vec::new();
    let mut random_runs = Vec::new();
    for &seed in &seeds {
        let metrics = amrlink::pipeline::baseline_run(&train, &test, seed).unwrap();
        model_runs.push(metrics);

        // random-guess baseline at the training positive rate
        let guess_for = |name: &str| -> Vec<bool> {
            let rate = amrlink::baseline::positive_rate(&train_labels, name);
            random_guess(test.len(), rate, seed.wrapping_mul(31).wrapping_add(name.len() as u64))
        };
        let random_preds: Vec<ConflictLabels> = {
            let d = guess_for("direct");
            let s = guess_for("subtypical");
            let c = guess_for("conditional");
            let t = guess_for("temporal");
            (0..test.len())
                .map(|i| ConflictLabels {
                    direct: d[i],
                    subtypical: s[i],
                    conditional: c[i],
                    temporal: t[i],
                })
                .collect()
        };
        random_runs.push(evaluate(&random_preds, &gold).unwrap());
    }

    let model_aggregate = aggregate_runs(&model_runs).unwrap();
    let random_aggregate = aggregate_runs(&random_runs).unwrap();
    let report = render_aggregate_table(&model_aggregate);
    assert_eq!(model_aggregate.runs, 3);
    assert!(report.contains("direct") && report.contains("temporal"), "report:\n{report}");

    let mean_f1 = |agg: &amrlink::baseline::RunAggregate, name: &str| -> f64 {
        agg.per_label.get(name).unwrap().f1.mean
    };
    for name in ["conditional", "temporal"] {
        let f1 = mean_f1(&model_aggregate, name);
        assert!(f1 >= 0.90, "{name} mean F1 = {f1}");
    }
    for name in LABEL_NAMES {
        let model = mean_f1(&model_aggregate, name);
        let random = mean_f1(&random_aggregate, name);
        assert!(model > random, "{name}: model {model} vs random {random}");
    }
    let _: &PerLabel<_> = &model_aggregate.per_label;

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("acceptance 7 (toy baseline vs random guess in {elapsed:?}): pass");
    println!("{report}");
}

/// Criterion 8: the full pipeline over 100 toy records is byte-identical
/// between parallelism 1 and 8, with identical reports.
#[test]
fn acceptance_8_pipeline_determinism() {
    let config = ToyConfig {
        direct: 20,
        subtypical: 20,
        conditional: 20,
        temporal: 20,
        negatives: 20,
        train_fraction: 0.8,
    };
    let records = generate_toy(&config, 77);
    assert_eq!(records.len(), 100);

    let run = |parallelism: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut config = PipelineConfig::new(dir.path().to_path_buf());
        config.parallelism = parallelism;
        let report = run_pipeline(&records, &config).unwrap();
        let tree = snapshot_tree(dir.path());
        (report, tree)
    };
    let (report_seq, tree_seq) = run(1);
    let (report_par, tree_par) = run(8);

    assert_eq!(tree_seq.len(), 2 * records.len() + 1, "two files per record plus vocab.txt");
    assert_eq!(tree_seq, tree_par, "output trees differ between parallelism 1 and 8");
    assert!(report_seq.same_outcome(&report_par), "reports differ");
    assert_eq!(report_seq.processed, 100);
    assert_eq!(report_seq.errored, 0);
    println!("acceptance 8 (pipeline determinism at parallelism 1 vs 8): pass");
}
