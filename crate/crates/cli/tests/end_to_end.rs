// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use tradenet_cli::export::{network_view, read_edge_csv};
use tradenet_cli::ingest::parse_countries;
use tradenet_cli::pipeline::read_manifest;
use tradenet_core::network::{NetworkKind, WeightedNetwork};

fn tradenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradenet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, countries: usize, seed: u64, zero_inflation: bool) -> PathBuf {
    let n = countries.to_string();
    let s = seed.to_string();
    let mut args = vec!["synth", "--countries", &n, "--seed", &s, "--dir", dir.to_str().unwrap()];
    if zero_inflation {
        args.push("--zero-inflation");
    }
    let out = tradenet(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("config.txt")
}

fn run(config: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    tradenet(&args)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn two_runs_give_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 25, 11, true);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&cfg, &["--output", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if name != "manifest.json" {
            assert!(bytes == &fb[name], "{name} differs between runs");
        }
    }
    // the manifests differ only in stage timings and the output path
    let strip = |dir: &Path| {
        let mut m = read_manifest(dir).unwrap();
        for s in m["stages"].as_array_mut().unwrap() {
            s["seconds"] = 0.into();
        }
        m["config"]["output"] = "".into();
        m["command"] = "".into();
        m
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn fifty_country_world_produces_every_artifact_without_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 50, 3, true);
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let dir = tmp.path().join("out");
    let m = read_manifest(&dir).unwrap();
    assert_eq!(m["success"], true);
    assert!(m["warnings"].as_array().unwrap().is_empty(), "{}", m["warnings"]);
    assert!(m["stages"].as_array().unwrap().iter().all(|s| s["status"] == "ok"));
    for name in [
        "ingest_summary.txt",
        "network_summary.csv",
        "node_statistics_original.csv",
        "node_statistics_residual.csv",
        "gravity_report.txt",
        "gravity_coefficients.csv",
        "zero_stage_coefficients.csv",
        "selection_trace.csv",
        "gravity_residuals.csv",
        "correlation_table.csv",
        "rank_comparison.csv",
        "residual_decorrelation.csv",
        "distribution_fits.csv",
        "kernel_gdp_product.csv",
        "area_shares.csv",
        "mst_summary.csv",
        "mst_original.graphml",
        "mst_residual.dot",
        "network_original.csv",
        "network_residual.graphml",
    ] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    for a in m["artifacts"].as_array().unwrap() {
        assert!(
            dir.join(a.as_str().unwrap()).is_file(),
            "listed artifact {a} not written"
        );
    }
}

#[test]
fn missing_input_file_fails_before_estimation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 8, 1, false);
    fs::remove_file(tmp.path().join("dyads.csv")).unwrap();
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    let m = read_manifest(&tmp.path().join("out")).unwrap();
    let stages = m["stages"].as_array().unwrap();
    assert_eq!(stages[0]["status"], "failed");
    assert!(stages[0]["error"].as_str().unwrap().contains("dyads.csv"));
    assert!(stages[1..].iter().all(|s| s["status"] == "skipped"));
    assert!(!tmp.path().join("out/gravity_report.txt").exists());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 8, 1, false);
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("tolerance = 3\n");
    fs::write(&cfg, text).unwrap();
    assert_eq!(run(&cfg, &[]).status.code(), Some(2));
}

#[test]
fn zero_free_data_gives_the_same_residual_network_under_both_estimators() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 15, 5, false);
    let mut nets = Vec::new();
    for est in ["ppml", "zippml"] {
        let dir = tmp.path().join(est);
        let out = run(
            &cfg,
            &[
                "--estimator",
                est,
                "--output",
                dir.to_str().unwrap(),
                "--graph_formats",
                "csv",
            ],
        );
        assert!(out.status.success());
        nets.push(fs::read_to_string(dir.join("network_residual.csv")).unwrap());
    }
    let countries = parse_countries(
        "countries.csv",
        &fs::read_to_string(tmp.path().join("countries.csv")).unwrap(),
    )
    .unwrap();
    let (a, b) = (
        read_edge_csv(&nets[0], &countries).unwrap(),
        read_edge_csv(&nets[1], &countries).unwrap(),
    );
    assert!((a - b).amax() < 1e-8);
}

#[test]
fn exported_network_round_trips_and_counts_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 25, 8, true);
    let out = run(
        &cfg,
        &[
            "--top_fraction",
            "1",
            "--selection",
            "false",
            "--logit_fixed_effects",
            "false",
        ],
    );
    assert!(out.status.success());
    let dir = tmp.path().join("out");
    let m = read_manifest(&dir).unwrap();
    let c = &m["counts"];
    assert_eq!(
        c["dyads_dropped"].as_u64().unwrap(),
        c["dyads_total"].as_u64().unwrap() - c["dyads_estimated"].as_u64().unwrap()
    );
    let countries = parse_countries(
        "countries.csv",
        &fs::read_to_string(tmp.path().join("countries.csv")).unwrap(),
    )
    .unwrap();
    let text = fs::read_to_string(dir.join("network_original.csv")).unwrap();
    assert_eq!(
        text.lines().count() - 1,
        c["positive_links_original"].as_u64().unwrap() as usize
    );
    let w = read_edge_csv(&text, &countries).unwrap();
    assert_eq!(w.max(), 1.0);

    // flows are symmetrized by the arithmetic mean, then scaled by the maximum
    let flows = tradenet_cli::ingest::parse_flows(
        "flows.csv",
        &fs::read_to_string(tmp.path().join("flows.csv")).unwrap(),
        &countries,
        None,
    )
    .unwrap();
    let f = flows.values();
    let sym = (f + f.transpose()) * 0.5;
    let expect = &sym / sym.max();
    assert!((w - expect).amax() < 1e-15);
}

#[test]
fn dropped_dyads_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 10, 2, false);
    // blank the contiguity of the first three dyads (distances would be
    // recomputed from coordinates)
    let path = tmp.path().join("dyads.csv");
    let text = fs::read_to_string(&path).unwrap();
    let edited: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(k, line)| {
            if (1..=3).contains(&k) {
                let mut cells: Vec<&str> = line.split(',').collect();
                cells[3] = "";
                cells.join(",")
            } else {
                line.to_string()
            }
        })
        .collect();
    fs::write(&path, edited.join("\n") + "\n").unwrap();
    let out = run(&cfg, &["--selection", "false"]);
    assert!(out.status.success());
    let dir = tmp.path().join("out");
    let m = read_manifest(&dir).unwrap();
    assert_eq!(m["counts"]["dyads_total"], 45);
    assert_eq!(m["counts"]["dyads_estimated"], 42);
    assert_eq!(m["counts"]["dyads_dropped"], 3);
    assert_eq!(
        fs::read_to_string(dir.join("rejected_dyads.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
    // one warning for the dropped dyads, one for their zero residual weight
    assert_eq!(m["warnings"].as_array().unwrap().len(), 2);
}

#[test]
fn top_one_percent_of_a_hundred_links_is_one_edge() {
    let n = 15;
    let mut raw = DMatrix::zeros(n, n);
    let mut placed = 0;
    'fill: for i in 0..n {
        for j in 0..i {
            if placed == 100 {
                break 'fill;
            }
            placed += 1;
            raw[(i, j)] = placed as f64;
            raw[(j, i)] = placed as f64;
        }
    }
    let net = WeightedNetwork::from_unnormalized(raw, NetworkKind::Original).unwrap();
    let view = network_view(&net, Some(0.01)).unwrap();
    assert_eq!(view.edges.len(), 1);
    assert_eq!(view.edges[0].weight, 1.0);
    assert_eq!(network_view(&net, Some(1.0)).unwrap().edges.len(), 100);
}

#[test]
fn subcommands_run_only_what_they_need() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), 10, 4, false);
    let out = tradenet(&["stats", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let m = read_manifest(&tmp.path().join("out")).unwrap();
    let ran: Vec<&str> = m["stages"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["status"] == "ok")
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(ran, ["ingest", "network", "stats_original"]);
    assert!(!tmp.path().join("out/gravity_report.txt").exists());
}
