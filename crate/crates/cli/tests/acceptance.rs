//! Acceptance gate. Every criterion runs in sequence inside one test so
//! that wall-clock budgets are measured without competing test threads;
//! each prints one PASS/FAIL line and the test fails if any criterion does.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dres_core::baselines::{oracle_full, oracle_representation};
use dres_core::classifiers::{fit_rows, logistic::objective, ClassifierSpec, LogisticOptions, LogisticRegression};
use dres_core::config::{SyntheticKind, SyntheticSpec};
use dres_core::data::{assemble_dataset, csv_io, dmat, make_splits};
use dres_core::des::{
    des_p, knora_e, majority_vote, meta_des_select, select_by_competence, MetaClassifier, MetaModel, RegionOfCompetence, SelectedEnsemble,
    META_DES_THRESHOLD,
};
use dres_core::hardness::{build_hardness_matrix, compute_kdn, estimate_test_hardness, hardness_statistics, select_view, HardnessMatrix};
use dres_core::harness::{k_spread, run_experiment, sweep_k};
use dres_core::knn::KnnIndex;
use dres_core::synthetic::{blobs, regions, BlobParams, RegionParams};
use dres_core::{dres_predict, DesMethod, DresParams, DresState, Error, ExperimentConfig, Labels, MultiViewDataset, ViewMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: dres_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- helpers

/// Random dataset with every class present; values on a coarse grid to
/// provoke distance ties half of the time.
fn random_dataset(rng: &mut ChaCha8Rng, n: usize, classes: usize, dims: &[usize], coarse: bool) -> MultiViewDataset {
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(rng);
    let views = dims
        .iter()
        .enumerate()
        .map(|(v, &d)| {
            let data: Vec<f32> = (0..n * d)
                .map(|_| {
                    if coarse {
                        rng.random_range(0..4) as f32
                    } else {
                        rng.random_range(-3.0..3.0)
                    }
                })
                .collect();
            ViewMatrix::new(format!("v{v}"), n, d, data).unwrap()
        })
        .collect();
    assemble_dataset(views, Labels::with_classes(labels, classes).unwrap(), None).unwrap()
}

/// Brute-force neighbors of `point` among `rows` of `view`, ordered by
/// (squared distance, row), optionally skipping one row.
fn brute_neighbors(view: &ViewMatrix, rows: &[usize], point: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, usize)> {
    let mut cand: Vec<(f64, usize, usize)> = rows
        .iter()
        .enumerate()
        .filter(|(_, &r)| Some(r) != skip)
        .map(|(slot, &r)| {
            let d: f64 = view.row_f64(r).iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, r, slot)
        })
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.into_iter().take(k).map(|(_, r, s)| (r, s)).collect()
}

fn brute_kdn(view: &ViewMatrix, labels: &Labels, rows: &[usize], k: usize) -> Vec<f64> {
    rows.iter()
        .map(|&i| {
            let nb = brute_neighbors(view, rows, &view.row_f64(i), k, Some(i));
            let disagree = nb.iter().filter(|(r, _)| labels.get(*r) != labels.get(i)).count();
            disagree as f64 / k as f64
        })
        .collect()
}

/// Argmin with ties to the lowest mean, then the lowest index, written
/// out as an explicit scan.
fn brute_select(per_view: &[f64], means: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..per_view.len() {
        let better = per_view[j] < per_view[best] || (per_view[j] == per_view[best] && means[j] < means[best]);
        if better {
            best = j;
        }
    }
    best
}

fn synthetic_config(kind: SyntheticKind, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        synthetic: Some(SyntheticSpec {
            kind,
            seed: None,
            regions: RegionParams::default(),
            blobs: BlobParams::default(),
        }),
        ..ExperimentConfig::default()
    }
}

// ------------------------------------------------------------- criteria

fn kdn_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0usize;
    for case in 0..30 {
        let n = rng.random_range(20..=200);
        let classes = rng.random_range(2..=6);
        let dim = rng.random_range(2..=16);
        let k = [3, 5, 7][rng.random_range(0..3)];
        let data = random_dataset(&mut rng, n, classes, &[dim], case % 2 == 0);
        let rows: Vec<usize> = (0..n).collect();
        let got = core(compute_kdn(data.view(0), data.labels(), &rows, k, false))?;
        let want = brute_kdn(data.view(0), data.labels(), &rows, k);
        ensure(got == want, || {
            format!("case {case} (n={n}, L={classes}, d={dim}, k={k}): engine and oracle differ")
        })?;
        checked += n;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("30 datasets, {checked} instances identical in {elapsed:.2?}"))
}

fn hardness_pipeline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut queries = 0usize;
    for case in 0..12 {
        let n = rng.random_range(60..=160);
        let classes = rng.random_range(2..=4);
        let views = rng.random_range(2..=4);
        let dims: Vec<usize> = (0..views).map(|_| rng.random_range(2..=6)).collect();
        let k = [3, 5, 7][case % 3];
        let data = random_dataset(&mut rng, n, classes, &dims, case % 2 == 1);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let dsel: Vec<usize> = order[..n / 2].to_vec();
        let train: Vec<usize> = order[n / 2..].to_vec();

        let h = core(build_hardness_matrix(&data, &dsel, k, false))?;
        for v in 0..views {
            ensure(h.column(v) == brute_kdn(data.view(v), data.labels(), &dsel, k), || {
                format!("case {case}: stored kDN differs in view {v}")
            })?;
        }
        let indexes: Vec<KnnIndex> = (0..views).map(|v| KnnIndex::build(data.view(v), &dsel, false).unwrap()).collect();
        let params = DresParams {
            k_hardness: k,
            k_roc: 5,
            standardize: false,
        };
        let specs = vec![ClassifierSpec::new(dres_core::ClassifierKind::GaussianNb)];
        let state = core(DresState::fit(&data, &train, &dsel, &specs, params))?;
        for &q in &train {
            let query = data.instance(q);
            let est = core(estimate_test_hardness(&query, &indexes, &h, k))?;
            let mut want = Vec::with_capacity(views);
            for v in 0..views {
                let nb = brute_neighbors(data.view(v), &dsel, &query[v], k, None);
                let mut sum = 0.0;
                for &(_, slot) in &nb {
                    sum += h.get(slot, v);
                }
                want.push(sum / nb.len() as f64);
            }
            ensure(est.per_view == want, || {
                format!("case {case}, query {q}: {:?} vs oracle {want:?}", est.per_view)
            })?;
            let (th, choice) = core(state.choose_view(&query))?;
            ensure(th.per_view == want, || format!("case {case}, query {q}: state hardness differs"))?;
            let expect = brute_select(&want, &state.view_means);
            ensure(choice.chosen_view == expect, || {
                format!("case {case}, query {q}: chose {} expected {expect}", choice.chosen_view)
            })?;
            queries += 1;
        }
    }

    // Tie rule on quantized values, where ties are frequent.
    let mut ties = 0usize;
    for _ in 0..20_000 {
        let n = rng.random_range(1..=6);
        let per: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64 / 5.0).collect();
        let means: Vec<f64> = (0..n).map(|_| rng.random_range(0..3) as f64 / 10.0).collect();
        let c = select_view(&per, &means);
        ensure(c.chosen_view == brute_select(&per, &means), || {
            format!("select_view({per:?}, {means:?}) = {}", c.chosen_view)
        })?;
        ties += usize::from(c.tie_broken);
    }

    // Seven neighbors whose scores sum to 1.82.
    let scores = [0.2, 0.4, 0.2, 0.2, 0.4, 0.2, 0.22];
    let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 + 1.0]).collect();
    let index = core(KnnIndex::from_points(&pts, (0..7).collect(), false))?;
    let hm = core(HardnessMatrix::new((0..7).collect(), vec!["v".into()], 7, scores.to_vec()))?;
    let est = core(estimate_test_hardness(&[vec![0.0]], &[index], &hm, 7))?;
    ensure((est.per_view[0] - 0.26).abs() < 1e-12, || {
        format!("worked value {}", est.per_view[0])
    })?;
    Ok(format!(
        "{queries} queries match the oracle; 20000 view choices ({ties} ties) follow the tie rule; worked value {:.12}",
        est.per_view[0]
    ))
}

struct Fixture {
    name: &'static str,
    rows: &'static [&'static str],
    classes: usize,
    method: DesMethod,
    /// Competences for META-DES fixtures that bypass the meta-model.
    competences: Option<&'static [f64]>,
    /// Constant meta-model for META-DES fixtures over the bitmask.
    constant: Option<f64>,
    expect: &'static [usize],
    fallback: bool,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "knora perfect single",
        rows: &["11111", "10111", "01111"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0],
        fallback: false,
    },
    Fixture {
        name: "knora perfect pair",
        rows: &["11111", "11111", "01111"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0, 1],
        fallback: false,
    },
    Fixture {
        name: "knora shrink to 4",
        rows: &["11110", "11101", "01111"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0],
        fallback: false,
    },
    Fixture {
        name: "knora shrink to 2",
        rows: &["11000", "11011", "10111"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0, 1],
        fallback: false,
    },
    Fixture {
        name: "knora shrink to 1",
        rows: &["10000", "10101", "01111"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0, 1],
        fallback: false,
    },
    Fixture {
        name: "knora fallback",
        rows: &["01111", "00000", "01010"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0, 1, 2],
        fallback: true,
    },
    Fixture {
        name: "knora single member fallback",
        rows: &["0"],
        classes: 2,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0],
        fallback: true,
    },
    Fixture {
        name: "knora k=7",
        rows: &["1111111", "1111110", "1111101", "0111111"],
        classes: 3,
        method: DesMethod::KnoraE,
        competences: None,
        constant: None,
        expect: &[0],
        fallback: false,
    },
    Fixture {
        name: "desp above chance",
        rows: &["11000", "10000", "11100", "00000"],
        classes: 3,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[0, 2],
        fallback: false,
    },
    Fixture {
        name: "desp equality excluded",
        rows: &["1100", "1110", "1000"],
        classes: 2,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[1],
        fallback: false,
    },
    Fixture {
        name: "desp fallback binary",
        rows: &["1100", "0011", "1000"],
        classes: 2,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[0, 1, 2],
        fallback: true,
    },
    Fixture {
        name: "desp five classes",
        rows: &["10000", "00000", "01000", "11000"],
        classes: 5,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[3],
        fallback: false,
    },
    Fixture {
        name: "desp fallback four classes",
        rows: &["1000", "0100", "0000"],
        classes: 4,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[0, 1, 2],
        fallback: true,
    },
    Fixture {
        name: "desp six classes",
        rows: &["100000", "000000", "110000"],
        classes: 6,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[2],
        fallback: false,
    },
    Fixture {
        name: "desp thirds",
        rows: &["111", "011", "001"],
        classes: 3,
        method: DesMethod::DesP,
        competences: None,
        constant: None,
        expect: &[0, 1],
        fallback: false,
    },
    Fixture {
        name: "meta threshold strict",
        rows: &["11111", "11111", "11111", "11111"],
        classes: 3,
        method: DesMethod::MetaDes,
        competences: Some(&[0.9, 0.5, 0.51, 0.1]),
        constant: None,
        expect: &[0, 2],
        fallback: false,
    },
    Fixture {
        name: "meta fallback",
        rows: &["111", "111", "111"],
        classes: 3,
        method: DesMethod::MetaDes,
        competences: Some(&[0.5, 0.2, 0.0]),
        constant: None,
        expect: &[0, 1, 2],
        fallback: true,
    },
    Fixture {
        name: "meta single",
        rows: &["1"],
        classes: 2,
        method: DesMethod::MetaDes,
        competences: Some(&[1.0]),
        constant: None,
        expect: &[0],
        fallback: false,
    },
    Fixture {
        name: "meta constant half",
        rows: &["10101", "01010"],
        classes: 3,
        method: DesMethod::MetaDes,
        competences: None,
        constant: Some(0.5),
        expect: &[0, 1],
        fallback: true,
    },
    Fixture {
        name: "meta constant one",
        rows: &["00000", "01010", "11111"],
        classes: 3,
        method: DesMethod::MetaDes,
        competences: None,
        constant: Some(1.0),
        expect: &[0, 1, 2],
        fallback: false,
    },
];

fn run_fixture(f: &Fixture) -> SelectedEnsemble {
    let k = f.rows[0].len();
    let labels: Vec<usize> = (0..k).map(|i| i % f.classes).collect();
    let roc = RegionOfCompetence::from_bitmask(f.rows, labels, f.classes);
    match (f.method, f.competences, f.constant) {
        (DesMethod::KnoraE, ..) => knora_e(&roc),
        (DesMethod::DesP, ..) => des_p(&roc, f.classes),
        (DesMethod::MetaDes, Some(c), _) => select_by_competence(c, META_DES_THRESHOLD),
        (DesMethod::MetaDes, None, Some(p)) => {
            let meta = MetaClassifier {
                k,
                model: MetaModel::Constant(p),
                training_rows: 0,
            };
            let query = vec![vec![1.0 / f.classes as f64; f.classes]; f.rows.len()];
            meta_des_select(&meta, &roc, &query)
        }
        _ => unreachable!("fixture {} has no competence source", f.name),
    }
}

fn des_semantics() -> Outcome {
    ensure(FIXTURES.len() == 20, || format!("{} fixtures", FIXTURES.len()))?;
    for f in FIXTURES {
        let sel = run_fixture(f);
        ensure(
            sel.classifier_indices == f.expect && sel.fallback_used == f.fallback && sel.method == f.method,
            || {
                format!(
                    "{}: got {:?} fallback={}, expected {:?} fallback={}",
                    f.name, sel.classifier_indices, sel.fallback_used, f.expect, f.fallback
                )
            },
        )?;
    }

    // Meta-classifier trained on stub pools: one member always right, one
    // always wrong.
    let stub = meta_stub()?;

    // Totality over fuzzed regions.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut fallbacks = [0usize; 3];
    for case in 0..10_000 {
        let pool = rng.random_range(1..=10);
        let k = rng.random_range(1..=9);
        let classes = rng.random_range(2..=6);
        let p_right: f64 = rng.random();
        let rows: Vec<String> = (0..pool)
            .map(|_| (0..k).map(|_| if rng.random_bool(p_right) { '1' } else { '0' }).collect())
            .collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let labels: Vec<usize> = (0..k).map(|_| rng.random_range(0..classes)).collect();
        let roc = RegionOfCompetence::from_bitmask(&refs, labels, classes);
        let comps: Vec<f64> = (0..pool).map(|_| rng.random_range(0..5) as f64 / 4.0).collect();

        let k_sel = knora_e(&roc);
        let k_fb = (0..pool).all(|c| !roc.correct[c][0]);
        let p_sel = des_p(&roc, classes);
        let p_fb = (0..pool).all(|c| roc.accuracy(c) <= 1.0 / classes as f64);
        let m_sel = select_by_competence(&comps, META_DES_THRESHOLD);
        let m_fb = comps.iter().all(|&c| c <= META_DES_THRESHOLD);
        for (i, (sel, fb)) in [(&k_sel, k_fb), (&p_sel, p_fb), (&m_sel, m_fb)].into_iter().enumerate() {
            let ok_shape = !sel.classifier_indices.is_empty()
                && sel.classifier_indices.windows(2).all(|w| w[0] < w[1])
                && sel.classifier_indices.iter().all(|&c| c < pool);
            ensure(ok_shape && sel.fallback_used == fb, || {
                format!("fuzz case {case}: {:?} (expected fallback {fb})", sel)
            })?;
            if fb {
                ensure(sel.classifier_indices == (0..pool).collect::<Vec<_>>(), || {
                    format!("fuzz case {case}: fallback is not the full pool")
                })?;
                fallbacks[i] += 1;
            }
            let query: Vec<Vec<f64>> = (0..pool)
                .map(|_| {
                    let mut p: Vec<f64> = (0..classes).map(|_| rng.random()).collect();
                    let s: f64 = p.iter().sum();
                    p.iter_mut().for_each(|x| *x /= s);
                    p
                })
                .collect();
            let label = majority_vote(&sel.classifier_indices, &query, classes);
            ensure(label < classes, || format!("fuzz case {case}: vote {label} out of range"))?;
        }
    }
    Ok(format!(
        "20 fixtures exact; {stub}; 10000 fuzzed regions total (fallbacks knora_e {}, des_p {}, meta_des {})",
        fallbacks[0], fallbacks[1], fallbacks[2]
    ))
}

fn meta_stub() -> Result<String, String> {
    use dres_core::des::{build_roc, meta_des_train, PoolOutputs};
    let n = 40;
    let classes = 2;
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let right: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| if y == 0 { vec![0.9, 0.1] } else { vec![0.1, 0.9] })
        .collect();
    let wrong: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| if y == 0 { vec![0.2, 0.8] } else { vec![0.8, 0.2] })
        .collect();
    let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let index = core(KnnIndex::from_points(&pts, (0..n).collect(), false))?;

    let all_right = core(PoolOutputs::from_posteriors(&[right.clone(), right.clone()], classes))?;
    let meta = core(meta_des_train(&all_right, &index, &labels, 5))?;
    ensure(matches!(meta.model, MetaModel::Constant(p) if p == 1.0), || {
        format!("all-correct pool gave {:?}", meta.model)
    })?;

    let mixed = core(PoolOutputs::from_posteriors(
        &[wrong.clone(), right.clone(), wrong.clone()],
        classes,
    ))?;
    let meta = core(meta_des_train(&mixed, &index, &labels, 5))?;
    ensure(matches!(meta.model, MetaModel::Logistic(_)), || {
        "mixed pool did not train a logistic meta-model".into()
    })?;
    for q in [3usize, 17, 30] {
        let nb = core(index.query(&[q as f64 + 0.25], 5, None))?;
        let roc = build_roc(&nb, &mixed, &labels);
        let query = vec![wrong[q].clone(), right[q].clone(), wrong[q].clone()];
        let sel = meta_des_select(&meta, &roc, &query);
        ensure(sel.classifier_indices == [1] && !sel.fallback_used, || {
            format!("query {q}: stub selection {:?}", sel)
        })?;
    }

    let all_wrong = core(PoolOutputs::from_posteriors(&[wrong.clone(), wrong], classes))?;
    let meta = core(meta_des_train(&all_wrong, &index, &labels, 5))?;
    let nb = core(index.query(&[10.0], 5, None))?;
    let sel = meta_des_select(&meta, &build_roc(&nb, &all_wrong, &labels), &[vec![0.5, 0.5], vec![0.5, 0.5]]);
    ensure(sel.fallback_used && sel.classifier_indices == [0, 1], || {
        format!("all-wrong pool selected {:?}", sel)
    })?;
    Ok("META-DES stubs select the always-correct member".into())
}

fn dominance() -> Outcome {
    let mut runs = 0usize;
    let mut queries = 0usize;
    let datasets: Vec<(String, MultiViewDataset)> = vec![
        (
            "regions/2 views".into(),
            regions(
                &RegionParams {
                    views: 2,
                    instances: 240,
                    ..RegionParams::default()
                },
                1,
            )
            .unwrap(),
        ),
        ("regions/4 views".into(), regions(&RegionParams::default(), 2).unwrap()),
        ("blobs".into(), blobs(&BlobParams::default(), 3).unwrap()),
        (
            "blobs/overlap".into(),
            blobs(
                &BlobParams {
                    separations: vec![1.0, 0.5],
                    ..BlobParams::default()
                },
                4,
            )
            .unwrap(),
        ),
    ];
    let specs = ClassifierSpec::default_pool();
    for (name, data) in &datasets {
        let plan = core(make_splits(data.labels(), 5, 0.25, 11))?;
        for (f, split) in plan.folds.iter().enumerate() {
            let state = core(DresState::fit(data, &split.train, &split.dsel, &specs, DresParams::default()))?;
            for method in DesMethod::ALL {
                let (mut acc_d, mut acc_r, mut acc_f) = (0usize, 0usize, 0usize);
                for &i in &split.test {
                    let q = data.instance(i);
                    let y = data.labels().get(i);
                    let d = core(dres_predict(&q, &state, method))?.label == y;
                    let r = core(oracle_representation(&q, y, &state, method))?.correct;
                    let full = core(oracle_full(&q, y, &state, method))?.correct;
                    ensure((!d || r) && (!r || full), || {
                        format!("{name} fold {f} {method} query {i}: dres={d} rep={r} full={full}")
                    })?;
                    acc_d += usize::from(d);
                    acc_r += usize::from(r);
                    acc_f += usize::from(full);
                    queries += 1;
                }
                ensure(acc_f >= acc_r && acc_r >= acc_d, || {
                    format!("{name} fold {f} {method}: {acc_f} / {acc_r} / {acc_d}")
                })?;
                runs += 1;
            }
        }
    }
    // The same chain as reported by the harness.
    for (kind, seed) in [(SyntheticKind::Regions, 5), (SyntheticKind::Blobs, 6)] {
        let config = synthetic_config(kind, seed);
        let out = core(run_experiment(&core(config.load_dataset())?, &config))?;
        for m in &out.report.methods {
            let (rep, full) = (m.oracle_representation.as_ref().unwrap(), m.oracle_full.as_ref().unwrap());
            for f in 0..m.metrics.accuracy.per_fold.len() {
                let (d, r, o) = (m.metrics.accuracy.per_fold[f], rep.accuracy.per_fold[f], full.accuracy.per_fold[f]);
                ensure(o >= r && r >= d, || {
                    format!("report {kind:?} fold {f} {}: {o} / {r} / {d}", m.method)
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!("0 violations over {runs} fold/method runs and {queries} queries"))
}

fn ablation_ordering() -> Outcome {
    let start = Instant::now();
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    let seeds = 20;
    for seed in 0..seeds {
        let mut config = synthetic_config(SyntheticKind::Regions, seed);
        config.methods = vec![DesMethod::KnoraE];
        config.ablation_method = DesMethod::KnoraE;
        config.oracles = false;
        let data = core(config.load_dataset())?;
        let out = core(run_experiment(&data, &config))?;
        for row in &out.report.ablation {
            for key in ["dres", "representation_only", "no_selection"] {
                if row.name == key {
                    *sums.entry(key).or_default() += row.metrics.macro_f1.mean;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let mean = |k: &str| sums.get(k).copied().unwrap_or(f64::NAN) / seeds as f64;
    let (d, r, s) = (mean("dres"), mean("representation_only"), mean("no_selection"));
    let summary = format!("dres {d:.4} > representation_only {r:.4} > group_c {s:.4} in {elapsed:.1?}");
    ensure(d - r > 0.01 && r - s > 0.01, || format!("ordering or gap fails: {summary}"))?;
    ensure(elapsed < Duration::from_secs(180), || format!("too slow: {summary}"))?;
    Ok(summary)
}

fn k_robustness() -> Outcome {
    let config = synthetic_config(SyntheticKind::Blobs, 0);
    let data = core(config.load_dataset())?;
    let rows = core(sweep_k(&data, &config, &[3, 5, 7, 9, 11, 13]))?;
    let spread = k_spread(&rows);
    ensure(spread.len() == DesMethod::ALL.len(), || {
        format!("spread covers {} methods", spread.len())
    })?;
    for (m, s) in &spread {
        ensure(*s < 0.05, || format!("{m}: spread {s:.4}"))?;
    }
    Ok(spread.iter().map(|(m, s)| format!("{m} {s:.4}")).collect::<Vec<_>>().join(", "))
}

fn hardness_range() -> Outcome {
    let mut parts = Vec::new();
    for views in [4, 2] {
        for seed in 0..3 {
            let params = RegionParams {
                views,
                ..RegionParams::default()
            };
            let data = core(regions(&params, seed))?;
            let all: Vec<usize> = (0..data.len()).collect();
            let h = core(build_hardness_matrix(&data, &all, 5, true))?;
            let frac = core(hardness_statistics(&h))?.fraction_range_above(0.5);
            ensure(frac > 0.5, || format!("{views} views, seed {seed}: {frac:.3}"))?;
            parts.push(format!("{views}v/s{seed} {frac:.3}"));
        }
    }
    Ok(format!("fraction with range > 0.5: {}", parts.join(", ")))
}

fn numerical_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(5..40);
        let dim = rng.random_range(1..6);
        let classes = rng.random_range(2..5);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let w: Vec<f64> = (0..classes * (dim + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l2 = [0.0, 1e-3, 0.5][case % 3];
        let (_, grad) = objective(&w, &x, &y, classes, l2);
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-3);
        for j in 0..w.len() {
            let h = 1e-5;
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let fd = (objective(&wp, &x, &y, classes, l2).0 - objective(&wm, &x, &y, classes, l2).0) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / grad[j].abs().max(fd.abs()).max(scale);
            worst = worst.max(rel);
            ensure(rel < 1e-5, || {
                format!("case {case}, weight {j}: analytic {} vs numeric {fd}", grad[j])
            })?;
        }
    }

    let dim = 3;
    let classes = 4;
    let x: Vec<Vec<f64>> = (0..80).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let y: Vec<usize> = (0..80).map(|i| i % classes).collect();
    let lr = core(LogisticRegression::fit(&x, &y, classes, LogisticOptions::default()))?;
    let models = ClassifierSpec::default_pool()
        .iter()
        .map(|s| fit_rows(s, &x, &y, classes, "v"))
        .collect::<dres_core::Result<Vec<_>>>();
    let models = core(models)?;
    let mut probes = 0usize;
    for p in 0..1000 {
        let magnitude = [1.0, 10.0, 1e3, 1e6][p % 4];
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0) * magnitude).collect();
        let mut outputs = vec![lr.predict_proba(&q)];
        for m in &models {
            outputs.push(core(m.predict_proba(&q))?);
        }
        for (mi, out) in outputs.iter().enumerate() {
            let sum: f64 = out.iter().sum();
            ensure(
                out.len() == classes && out.iter().all(|v| v.is_finite() && *v >= -1e-9 && *v <= 1.0 + 1e-9) && (sum - 1.0).abs() <= 1e-9,
                || format!("probe {p}, model {mi}: {out:?}"),
            )?;
        }
        probes += 1;
    }
    Ok(format!(
        "gradient worst relative error {worst:.2e}; {probes} probes x {} models on the simplex",
        models.len() + 1
    ))
}

fn evaluate_run(dir: &Path, config: &Path, threads: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dres"))
        .args(["evaluate", "--config"])
        .arg(config)
        .arg("--output-dir")
        .arg(dir)
        .args(["--threads", &threads.to_string(), "--seed", "13"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("evaluate failed: {}", String::from_utf8_lossy(&status.stderr))
    })?;
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        files.insert(
            entry.file_name().to_string_lossy().into_owned(),
            fs::read(entry.path()).map_err(|e| e.to_string())?,
        );
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("run.toml");
    fs::write(
        &config,
        "seed = 1\n[synthetic]\nkind = \"regions\"\n[synthetic.regions]\ninstances = 240\nviews = 3\n",
    )
    .map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for (i, threads) in [1, 1, 8, 8].into_iter().enumerate() {
        runs.push(evaluate_run(&tmp.path().join(format!("run{i}")), &config, threads)?);
    }
    ensure(runs[0].contains_key("report.json"), || "no report.json written".into())?;
    for (i, r) in runs.iter().enumerate().skip(1) {
        ensure(r == &runs[0], || {
            let differing: Vec<&String> = r.keys().filter(|k| runs[0].get(*k) != r.get(*k)).collect();
            format!("run {i} differs from run 0 in {differing:?}")
        })?;
    }
    Ok(format!(
        "{} files byte-identical across 2 runs at --threads 1 and 2 at --threads 8",
        runs[0].len()
    ))
}

fn dmat_format() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let origin = Path::new("x.dmat");
    for case in 0..50 {
        let rows = rng.random_range(1..30);
        let cols = rng.random_range(1..20);
        let data: Vec<f32> = (0..rows * cols)
            .map(|i| match i % 5 {
                0 => f32::from_bits(rng.random::<u32>() & 0x7F7F_FFFF),
                1 => -0.0,
                2 => f32::MIN_POSITIVE / 4.0,
                _ => rng.random_range(-1e6..1e6),
            })
            .collect();
        let view = core(ViewMatrix::new(format!("view_{case}"), rows, cols, data))?;
        let bytes = dmat::to_bytes(&view);
        let (back, named) = core(dmat::from_bytes(&bytes, origin, "fallback"))?;
        let same_bits = back.data().iter().zip(view.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(
            named && back.name() == view.name() && same_bits && dmat::to_bytes(&back) == bytes,
            || format!("case {case}: round trip differs"),
        )?;
    }

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let view = core(ViewMatrix::new("v", 2, 2, vec![1.5, -2.25, 0.1, 3e-7]))?;
    let path = tmp.path().join("v.dmat");
    core(dmat::write(&view, &path))?;
    let back = core(dmat::read(&path))?;
    ensure(back.data() == view.data(), || "file round trip differs".into())?;
    let good = dmat::to_bytes(&view);

    let located = |bytes: &[u8], want: &str| -> Result<(), String> {
        match dmat::from_bytes(bytes, origin, "v") {
            Err(Error::Format { location, .. }) if location.starts_with(want) => Ok(()),
            other => Err(format!("expected a format error at {want}, got {other:?}")),
        }
    };
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    located(&bad_magic, "byte 0")?;
    located(&good[..16 + 8 + 2], "byte 26")?;
    let mut nan = good.clone();
    nan[16 + 8..16 + 12].copy_from_slice(&f32::NAN.to_le_bytes());
    located(&nan, "byte 24 (row 1, col 0)")?;

    let csv = tmp.path().join("bad.csv");
    fs::write(&csv, "1.0,2.0\n3.0,NaN\n").map_err(|e| e.to_string())?;
    match csv_io::read_view(&csv, "bad") {
        Err(Error::Format { location, .. }) => ensure(location.contains('2'), || format!("csv NaN location {location}"))?,
        other => return Err(format!("csv NaN accepted: {other:?}")),
    }
    Ok("50 random matrices bit-identical; bad magic, truncation and NaN rejected with byte positions".into())
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("kdn_oracle", kdn_oracle),
        ("hardness_pipeline", hardness_pipeline),
        ("des_semantics", des_semantics),
        ("dominance", dominance),
        ("ablation_ordering", ablation_ordering),
        ("k_robustness", k_robustness),
        ("hardness_range", hardness_range),
        ("numerical_checks", numerical_checks),
        ("determinism", determinism),
        ("dmat_format", dmat_format),
    ];
    let mut failed = Vec::new();
    let mut lines = Vec::new();
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let line = match &outcome {
            Ok(detail) => format!("PASS {name} ({:.1?}): {detail}", start.elapsed()),
            Err(detail) => {
                failed.push(name);
                format!("FAIL {name} ({:.1?}): {detail}", start.elapsed())
            }
        };
        println!("{line}");
        lines.push(line);
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failed.len(), lines.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
