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

//! Stage orchestration and artifact serialization.
//!
//! Stages run in a fixed order; a subcommand asks for some of them and their
//! dependencies are pulled in. A failed stage is recorded in the manifest,
//! stages depending on it are skipped, and everything already written stays
//! on disk. Apart from the timings in `manifest.json`, every artifact is a
//! deterministic function of the configuration and the inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use tradenet_core::data::CountryTable;
use tradenet_core::gravity::{
    build_design, estimate, fit_report_kv, fit_report_text, select_general_to_specific_with, ColumnRole, GravityFit,
    ADJ_R2_DEFINITION, ROBUST_SE_DEFINITION,
};
use tradenet_core::mst::{network_mst, SpanningTree, DISTANCE_DEFINITION};
use tradenet_core::network::{assemble_residual_network, density, symmetrize, WeightedNetwork};
use tradenet_core::stats::{
    area_trade_shares, correlation, correlation_table, fit_log_normal, fit_power_law, hill_estimator,
    kernel_conditional_mean_with, qap_correlation, rank_comparison, rank_size, Axes, CorrMethod, FitDomain,
    BANDWIDTH_METHOD,
};
use tradenet_core::topology::{
    all_statistics_with, NodeStatistics, Statistic, CLUSTERING_DEFINITION, RWBC_NORMALIZATION,
};

use crate::config::AnalysisConfig;
use crate::export::{network_view, render, tree_view, GraphView};
use crate::ingest::{ingest, Ingested};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Network,
    StatsOriginal,
    Gravity,
    Residual,
    StatsResidual,
    Compare,
    Distributions,
    Mst,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Network,
        Stage::StatsOriginal,
        Stage::Gravity,
        Stage::Residual,
        Stage::StatsResidual,
        Stage::Compare,
        Stage::Distributions,
        Stage::Mst,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Network => "network",
            Stage::StatsOriginal => "stats_original",
            Stage::Gravity => "gravity",
            Stage::Residual => "residual",
            Stage::StatsResidual => "stats_residual",
            Stage::Compare => "compare",
            Stage::Distributions => "distributions",
            Stage::Mst => "mst",
            Stage::Export => "export",
        }
    }

    fn deps(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Network => &[Stage::Ingest],
            Stage::StatsOriginal | Stage::Gravity | Stage::Mst | Stage::Export => &[Stage::Network],
            Stage::Residual => &[Stage::Gravity],
            Stage::StatsResidual => &[Stage::Residual],
            Stage::Compare => &[Stage::StatsOriginal, Stage::StatsResidual],
            Stage::Distributions => &[Stage::StatsOriginal],
        }
    }
}

/// The requested stages plus everything they depend on.
pub fn with_dependencies(targets: &[Stage]) -> BTreeSet<Stage> {
    let mut out = BTreeSet::new();
    let mut todo: Vec<Stage> = targets.to_vec();
    while let Some(s) = todo.pop() {
        if out.insert(s) {
            todo.extend_from_slice(s.deps());
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: &'static str,
    /// `ok`, `failed` or `skipped`.
    pub status: &'static str,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Counts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub countries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyads_total: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyads_estimated: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyads_dropped: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_links_original: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_links_residual: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_original: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<InputRecord>,
    pub stages: Vec<StageRecord>,
    pub counts: Counts,
    pub warnings: Vec<String>,
    /// Design columns dropped as collinear with the fixed effects or constant.
    pub absorbed_columns: Vec<String>,
    pub definitions: BTreeMap<&'static str, String>,
    pub artifacts: Vec<String>,
    pub success: bool,
}

impl RunManifest {
    pub fn failed_stages(&self) -> Vec<&str> {
        self.stages
            .iter()
            .filter(|s| s.status == "failed")
            .map(|s| s.name)
            .collect()
    }
}

/// Warnings in order of first appearance, each kept once.
#[derive(Debug, Default)]
struct Warnings(Vec<String>);

impl Warnings {
    fn push(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.0.contains(&w) {
            self.0.push(w);
        }
    }
}

struct Artifacts {
    dir: PathBuf,
    written: BTreeSet<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.insert(name.to_string());
        Ok(())
    }
}

#[derive(Default)]
struct State {
    data: Option<Ingested>,
    original: Option<WeightedNetwork>,
    stats_original: Option<NodeStatistics>,
    fit: Option<GravityFit>,
    /// Design columns collinear with the fixed effects (structural, not a warning).
    absorbed: Vec<String>,
    residual: Option<WeightedNetwork>,
    stats_residual: Option<NodeStatistics>,
}

impl State {
    fn data(&self) -> Result<&Ingested> {
        self.data.as_ref().ok_or_else(|| anyhow!("inputs not ingested"))
    }

    fn countries(&self) -> Result<&CountryTable> {
        Ok(&self.data()?.countries)
    }

    fn original(&self) -> Result<&WeightedNetwork> {
        self.original
            .as_ref()
            .ok_or_else(|| anyhow!("original network not built"))
    }

    /// Networks built so far, original first.
    fn networks(&self) -> Vec<&WeightedNetwork> {
        self.original.iter().chain(self.residual.iter()).collect()
    }
}

fn definitions() -> BTreeMap<&'static str, String> {
    let mut d = BTreeMap::new();
    d.insert("adjusted_r2", ADJ_R2_DEFINITION.to_string());
    d.insert("robust_standard_errors", ROBUST_SE_DEFINITION.to_string());
    d.insert("rwbc_normalization", RWBC_NORMALIZATION.to_string());
    d.insert("clustering", CLUSTERING_DEFINITION.to_string());
    d.insert("kernel_bandwidth", BANDWIDTH_METHOD.to_string());
    d.insert("mst_distance", DISTANCE_DEFINITION.to_string());
    d.insert(
        "residual_weight",
        "e_ij = w_ij / fitted mean for estimated positive flows, renormalized by the maximum; zero flows stay zero"
            .to_string(),
    );
    d.insert(
        "top_fraction",
        "keeps the ceil(f * m) heaviest of the m positive links, ties by node index".to_string(),
    );
    d.insert(
        "units",
        "weight_* and *_normweight: weights divided by the network maximum (dimensionless); currency: input \
         flow units; km: great-circle kilometres"
            .to_string(),
    );
    d
}

/// Runs the requested stages and writes `manifest.json` last.
pub fn run_pipeline(cfg: &AnalysisConfig, command: &str, targets: &[Stage]) -> Result<RunManifest> {
    fs::create_dir_all(&cfg.output).with_context(|| format!("creating output directory {}", cfg.output.display()))?;
    let wanted = with_dependencies(targets);
    let mut out = Artifacts {
        dir: cfg.output.clone(),
        written: BTreeSet::new(),
    };
    let mut warnings = Warnings::default();
    let mut state = State::default();
    let mut records: Vec<StageRecord> = Vec::new();

    for stage in Stage::ALL {
        if !wanted.contains(&stage) {
            continue;
        }
        let blocked = stage
            .deps()
            .iter()
            .find(|d| records.iter().any(|r| r.name == d.name() && r.status != "ok"));
        if let Some(dep) = blocked {
            records.push(StageRecord {
                name: stage.name(),
                status: "skipped",
                seconds: 0.0,
                error: Some(format!("depends on {}", dep.name())),
            });
            continue;
        }
        let t = Instant::now();
        let result = run_stage(stage, cfg, &mut state, &mut out, &mut warnings);
        records.push(StageRecord {
            name: stage.name(),
            status: if result.is_ok() { "ok" } else { "failed" },
            seconds: t.elapsed().as_secs_f64(),
            error: result.err().map(|e| format!("{e:#}")),
        });
    }

    if !state.networks().is_empty() {
        out.write("network_summary.csv", &network_summary(&state))?;
    }
    let counts = counts(&state);
    let inputs = state
        .data
        .as_ref()
        .map(|d| {
            d.digests
                .iter()
                .map(|g| InputRecord {
                    role: g.role,
                    path: g.path.clone(),
                    sha256: g.sha256.clone(),
                })
                .collect()
        })
        .unwrap_or_default();
    let success = records.iter().all(|r| r.status == "ok");
    let mut artifacts: Vec<String> = out.written.iter().cloned().collect();
    artifacts.push("manifest.json".to_string());
    artifacts.sort();
    let manifest = RunManifest {
        tool: "tradenet",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: cfg.echo.clone(),
        inputs,
        stages: records,
        counts,
        warnings: warnings.0,
        absorbed_columns: state.absorbed.clone(),
        definitions: definitions(),
        artifacts,
        success,
    };
    let json = serde_json::to_string_pretty(&manifest)? + "\n";
    out.write("manifest.json", &json)?;
    Ok(manifest)
}

fn run_stage(
    stage: Stage,
    cfg: &AnalysisConfig,
    state: &mut State,
    out: &mut Artifacts,
    warnings: &mut Warnings,
) -> Result<()> {
    match stage {
        Stage::Ingest => {
            let data = ingest(cfg)?;
            for w in &data.warnings {
                warnings.push(w.clone());
            }
            out.write("ingest_summary.txt", &ingest_summary(&data))?;
            state.data = Some(data);
        }
        Stage::Network => {
            let net = symmetrize(&state.data()?.flows, cfg.symmetrize);
            if net.is_degenerate() {
                warnings.push("original network is all zero (degenerate, not normalized)");
            }
            state.original = Some(net);
        }
        Stage::StatsOriginal => {
            let stats = all_statistics_with(state.original()?, cfg.execution)?;
            note_statistics(&stats, warnings);
            out.write(
                "node_statistics_original.csv",
                &statistics_csv(&stats, state.countries()?),
            )?;
            state.stats_original = Some(stats);
        }
        Stage::Gravity => gravity_stage(cfg, state, out, warnings)?,
        Stage::Residual => {
            let fit = state.fit.as_ref().ok_or_else(|| anyhow!("no gravity fit"))?;
            let e = assemble_residual_network(fit, state.original()?, cfg.zero_mode)?;
            let flags = e.flags();
            if flags.degenerate {
                warnings.push("residual network is all zero (degenerate, not normalized)");
            }
            if flags.unestimated_links > 0 {
                warnings.push(format!(
                    "{} positive links were not estimated and carry residual weight 0",
                    flags.unestimated_links
                ));
            }
            if let Some((cut, pruned)) = flags.zip_pruned {
                warnings.push(format!(
                    "zip_prune({cut}) removed {pruned} positive links from the residual network"
                ));
            }
            state.residual = Some(e);
        }
        Stage::StatsResidual => {
            let e = state.residual.as_ref().ok_or_else(|| anyhow!("no residual network"))?;
            let stats = all_statistics_with(e, cfg.execution)?;
            note_statistics(&stats, warnings);
            out.write(
                "node_statistics_residual.csv",
                &statistics_csv(&stats, state.countries()?),
            )?;
            state.stats_residual = Some(stats);
        }
        Stage::Compare => compare_stage(cfg, state, out)?,
        Stage::Distributions => distributions_stage(cfg, state, out, warnings)?,
        Stage::Mst => {
            let countries = state.countries()?;
            let mut summary =
                String::from("network,edges,components,total_distance_mantegna,rescale_factor_mantegna\n");
            for net in state.networks() {
                let kind = net.kind().label();
                let tree = network_mst(net, cfg.edge_universe)?;
                if tree.component_count > 1 {
                    warnings.push(format!(
                        "{kind} MST is a forest with {} components",
                        tree.component_count
                    ));
                }
                let _ = writeln!(
                    summary,
                    "{kind},{},{},{},{}",
                    tree.edges.len(),
                    tree.component_count,
                    tree.total_distance,
                    tree.rescale_factor
                );
                write_graphs(out, cfg, &format!("mst_{kind}"), &tree_view(&tree, kind), countries)?;
                out.write(
                    &format!("mst_{kind}_edges.csv"),
                    &tree_edges_csv(&tree, kind, countries),
                )?;
            }
            out.write("mst_summary.csv", &summary)?;
        }
        Stage::Export => {
            let countries = state.countries()?;
            for net in state.networks() {
                let view = network_view(net, cfg.top_fraction)?;
                write_graphs(out, cfg, &format!("network_{}", net.kind().label()), &view, countries)?;
            }
        }
    }
    Ok(())
}

fn write_graphs(
    out: &mut Artifacts,
    cfg: &AnalysisConfig,
    stem: &str,
    view: &GraphView,
    countries: &CountryTable,
) -> Result<()> {
    for &fmt in &cfg.graph_formats {
        out.write(&format!("{stem}.{}", fmt.extension()), &render(view, countries, fmt))?;
    }
    Ok(())
}

fn ingest_summary(d: &Ingested) -> String {
    let n = d.countries.len();
    let directed = d.flows.values().iter().filter(|&&v| v > 0.0).count();
    let mut s = String::new();
    let _ = writeln!(s, "countries={n}");
    let _ = writeln!(s, "year={}", d.flows.year());
    let _ = writeln!(s, "positive_directed_flows={directed}");
    let _ = writeln!(s, "dyad_records={}", d.dyads.len());
    let _ = writeln!(s, "country_pairs={}", n * n.saturating_sub(1) / 2);
    let _ = writeln!(s, "distances_from_coordinates={}", d.distances_from_coordinates);
    for g in &d.digests {
        let _ = writeln!(s, "sha256.{}={}", g.role, g.sha256);
    }
    s
}

fn note_statistics(stats: &NodeStatistics, warnings: &mut Warnings) {
    let kind = stats.network_kind.label();
    let isolated = stats.anns_undefined.iter().filter(|&&u| u).count();
    if isolated > 0 {
        warnings.push(format!(
            "{kind} network: ANNS undefined (isolated) for {isolated} countries, reported as 0"
        ));
    }
    let low = stats.clustering_undefined.iter().filter(|&&u| u).count();
    if low > 0 {
        warnings.push(format!(
            "{kind} network: clustering undefined (fewer than two neighbours) for {low} countries, reported as 0"
        ));
    }
    if stats.component_sizes.len() > 1 {
        warnings.push(format!(
            "{kind} network has {} components; RWBC computed on the largest ({} countries), 0 elsewhere",
            stats.component_sizes.len(),
            stats.component_sizes[0]
        ));
    }
}

fn statistics_csv(stats: &NodeStatistics, countries: &CountryTable) -> String {
    let k = stats.network_kind.label();
    let mut s = format!(
        "id,acronym,nd_{k}_count,ns_{k}_normweight,anns_{k}_normweight,bcc_{k}_ratio,wcc_{k}_ratio,\
         rwbc_{k}_ratio,anns_undefined,clustering_undefined\n"
    );
    for (i, c) in countries.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            c.id,
            c.acronym,
            stats.nd[i],
            stats.ns[i],
            stats.anns[i],
            stats.bcc[i],
            stats.wcc[i],
            stats.rwbc[i],
            u8::from(stats.anns_undefined[i]),
            u8::from(stats.clustering_undefined[i])
        );
    }
    s
}

fn gravity_stage(cfg: &AnalysisConfig, state: &mut State, out: &mut Artifacts, warnings: &mut Warnings) -> Result<()> {
    let data = state.data()?;
    let design = build_design(&data.countries, &data.dyads, state.original()?, &cfg.design)?;
    let countries = &data.countries;
    let mut rejected = String::from("id_a,id_b,acronym_a,acronym_b,reason\n");
    for r in design.rejected() {
        let (a, b) = (countries.get(r.i.min(r.j)), countries.get(r.i.max(r.j)));
        let _ = writeln!(rejected, "{},{},{},{},{}", a.id, b.id, a.acronym, b.acronym, r.reason);
    }
    out.write("rejected_dyads.csv", &rejected)?;
    if !design.rejected().is_empty() {
        warnings.push(format!(
            "{} dyads dropped from estimation (missing or non-loggable covariates); see rejected_dyads.csv",
            design.rejected().len()
        ));
    }
    let absorbed = design.absorbed().to_vec();

    let (fit, trace) = if cfg.selection {
        let sel = select_general_to_specific_with(&design, cfg.estimator, cfg.alpha, cfg.execution)?;
        (sel.fit, Some(sel.trace))
    } else {
        (estimate(&design, cfg.estimator)?, None)
    };
    let d = fit.diagnostics();
    if d.ridge_used {
        warnings.push("gravity normal equations needed a ridge to stay solvable");
    }
    if !d.converged {
        return Err(anyhow!("gravity estimation did not converge"));
    }

    out.write("gravity_report.txt", &fit_report_text(&fit, trace.as_ref()))?;
    out.write("gravity_report.kv", &fit_report_kv(&fit, trace.as_ref()))?;
    out.write("gravity_coefficients.csv", &coefficients_csv(fit.coefficients()))?;
    if let Some(z) = fit.zero_stage() {
        out.write("zero_stage_coefficients.csv", &coefficients_csv(&z.coefficients))?;
    }
    if let Some(t) = &trace {
        let mut s = String::from("step,dropped_block,lr_statistic,df,p_value,log_likelihood_after\n");
        for (k, st) in t.steps.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                k + 1,
                st.dropped,
                st.lr_statistic,
                st.df,
                st.p_value,
                st.log_likelihood_after
            );
        }
        out.write("selection_trace.csv", &s)?;
    }
    out.write("gravity_residuals.csv", &residuals_csv(&fit, countries))?;
    state.fit = Some(fit);
    state.absorbed = absorbed;
    Ok(())
}

fn coefficients_csv(coefs: &[tradenet_core::gravity::Coefficient]) -> String {
    let mut s = String::from("name,role,block,estimate,robust_se,z,p_value\n");
    for c in coefs {
        let (role, block) = match &c.role {
            ColumnRole::Regressor { block } => ("regressor", block.as_str()),
            ColumnRole::Constant => ("constant", ""),
            ColumnRole::FixedEffect { .. } => ("fixed_effect", ""),
        };
        let _ = writeln!(
            s,
            "\"{}\",{role},{block},{},{},{},{}",
            c.name.replace('"', "\"\""),
            c.estimate,
            c.robust_se,
            c.z,
            c.p_value
        );
    }
    s
}

fn residuals_csv(fit: &GravityFit, countries: &CountryTable) -> String {
    let p_zero = fit.zero_stage().map(|z| z.p_zero.as_slice());
    let mut s = String::from(
        "id_a,id_b,acronym_a,acronym_b,flow_observed_currency,flow_fitted_currency,residual_ratio,in_poisson_sample,p_zero_probability\n",
    );
    for (r, &(i, j)) in fit.dyads().iter().enumerate() {
        let (a, b) = (countries.get(i.min(j)), countries.get(i.max(j)));
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},",
            a.id,
            b.id,
            a.acronym,
            b.acronym,
            fit.observed()[r],
            fit.fitted()[r],
            fit.residuals()[r],
            u8::from(fit.in_sample()[r])
        );
        if let Some(p) = p_zero {
            let _ = write!(s, "{}", p[r]);
        }
        s.push('\n');
    }
    s
}

fn compare_stage(cfg: &AnalysisConfig, state: &State, out: &mut Artifacts) -> Result<()> {
    let (sw, se) = match (&state.stats_original, &state.stats_residual) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(anyhow!("statistics for both networks are required")),
    };
    let countries = state.countries()?;
    let table = correlation_table(sw, se, &countries.gdp_per_capita())?;
    out.write("correlation_table.csv", &table.to_csv())?;
    out.write("correlation_table.txt", &table.to_text())?;

    let mut csv = String::from("statistic,spearman_original_vs_residual,p_value,significant_5pct\n");
    let mut movers = String::from("statistic,direction,id,acronym,rank_original,rank_residual,displacement\n");
    let mut text = String::new();
    for st in Statistic::ALL {
        let rc = match rank_comparison(sw, se, st, cfg.movers) {
            Ok(rc) => rc,
            // e.g. a constant statistic: nothing to rank
            Err(e) => {
                let _ = writeln!(text, "{}: not comparable ({e})", st.label());
                continue;
            }
        };
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            st.label(),
            rc.spearman.coefficient,
            rc.spearman.p_value,
            rc.spearman.significant
        );
        let _ = writeln!(
            text,
            "{}: Spearman rank correlation original vs residual = {:.4} (p = {:.4})",
            st.label(),
            rc.spearman.coefficient,
            rc.spearman.p_value
        );
        for (dir, list) in [("climber", &rc.climbers), ("faller", &rc.fallers)] {
            for m in list.iter() {
                let c = countries.get(m.node);
                let _ = writeln!(
                    movers,
                    "{},{dir},{},{},{},{},{}",
                    st.label(),
                    c.id,
                    c.acronym,
                    m.rank_original,
                    m.rank_residual,
                    m.displacement
                );
                let _ = writeln!(
                    text,
                    "  {dir:<8} {:<8} rank {:>4} -> {:>4}",
                    c.acronym, m.rank_original, m.rank_residual
                );
            }
        }
    }
    out.write("rank_comparison.csv", &csv)?;
    out.write("rank_comparison.txt", &text)?;
    out.write("rank_movers.csv", &movers)?;
    out.write("residual_decorrelation.csv", &decorrelation_csv(cfg, state)?)?;
    Ok(())
}

/// Permutations behind the QAP p-values in `residual_decorrelation.csv`.
const QAP_PERMUTATIONS: usize = 999;

/// Correlation of link weights with the gravity masses and distance, and of
/// residual with original weights, over positive links. Besides the iid
/// t-test p-value, a node-permutation (QAP) p-value is reported, since dyads
/// sharing a country are not independent.
fn decorrelation_csv(cfg: &AnalysisConfig, state: &State) -> Result<String> {
    let data = state.data()?;
    let w = state.original()?;
    let e = state.residual.as_ref().ok_or_else(|| anyhow!("no residual network"))?;
    let gdp = data.countries.gdp();
    let n = gdp.len();
    let mass = DMatrix::from_fn(n, n, |i, j| (gdp[i] * gdp[j]).ln());
    let dist = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            data.dyads
                .get(i, j)
                .and_then(|r| r.distance_km)
                .map_or(f64::NAN, f64::ln)
        }
    });
    let mut s =
        String::from("network,variable,pearson,p_value,significant_5pct,qap_p_value,qap_significant_5pct,n_links\n");
    let mut row = |kind: &str, name: &str, a: &[f64], b: &[f64], weights: &DMatrix<f64>, cov: &DMatrix<f64>| {
        let (coef, p, sig) = match correlation(a, b, CorrMethod::Pearson) {
            Ok(c) => (
                c.coefficient.to_string(),
                c.p_value.to_string(),
                c.significant.to_string(),
            ),
            Err(_) => Default::default(),
        };
        let (qp, qsig) = match qap_correlation(weights, cov, QAP_PERMUTATIONS, cfg.seed) {
            Ok(q) => (q.p_value.to_string(), q.significant.to_string()),
            Err(_) => Default::default(),
        };
        let _ = writeln!(s, "{kind},{name},{coef},{p},{sig},{qp},{qsig},{}", a.len());
    };
    for net in [w, e] {
        let links = net.links();
        let weights: Vec<f64> = links.iter().map(|l| l.2).collect();
        let lm: Vec<f64> = links.iter().map(|&(i, j, _)| mass[(i, j)]).collect();
        let (dist_w, ld): (Vec<f64>, Vec<f64>) = links
            .iter()
            .filter(|&&(i, j, _)| dist[(i, j)].is_finite())
            .map(|&(i, j, wt)| (wt, dist[(i, j)]))
            .unzip();
        let kind = net.kind().label();
        row(kind, "log_gdp_product", &weights, &lm, net.weights(), &mass);
        row(kind, "log_distance_km", &dist_w, &ld, net.weights(), &dist);
    }
    let (a, b): (Vec<f64>, Vec<f64>) = w
        .links()
        .iter()
        .filter(|&&(i, j, _)| e.get(i, j) > 0.0)
        .map(|&(i, j, wt)| (wt, e.get(i, j)))
        .unzip();
    row("residual", "original_weight", &b, &a, e.weights(), w.weights());
    Ok(s)
}

fn distributions_stage(
    cfg: &AnalysisConfig,
    state: &State,
    out: &mut Artifacts,
    warnings: &mut Warnings,
) -> Result<()> {
    let mut fits = String::from(
        "network,variable,unit,n_positive,powerlaw_slope,powerlaw_scale,powerlaw_r2,hill_k,hill_alpha,\
         lognormal_mu,lognormal_sigma,lognormal_ks\n",
    );
    let mut series: Vec<(String, &str, Vec<f64>)> = Vec::new();
    for (net, stats) in [
        (state.original.as_ref(), state.stats_original.as_ref()),
        (state.residual.as_ref(), state.stats_residual.as_ref()),
    ] {
        let (Some(net), Some(stats)) = (net, stats) else {
            continue;
        };
        let kind = net.kind().label().to_string();
        series.push((kind.clone(), "weight", net.links().iter().map(|l| l.2).collect()));
        for st in [Statistic::Ns, Statistic::Anns, Statistic::Wcc, Statistic::Rwbc] {
            series.push((kind.clone(), st.label(), stats.values(st)));
        }
    }
    for (kind, var, values) in &series {
        let var_lc = var.to_ascii_lowercase();
        let unit = match *var {
            "weight" | "NS" | "ANNS" => "normweight",
            _ => "ratio",
        };
        let ranked = match rank_size(values) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("{kind} {var}: no rank-size series ({e})"));
                continue;
            }
        };
        let fit = fit_power_law(&ranked, FitDomain::All).ok();
        let mut csv = format!("rank,{var_lc}_{kind}_{unit},powerlaw_fit_{var_lc}_{kind}_{unit}\n");
        for &(r, v) in &ranked {
            let f = fit.as_ref().map_or(String::new(), |f| f.predict(r).to_string());
            let _ = writeln!(csv, "{r},{v},{f}");
        }
        out.write(&format!("rank_size_{kind}_{var_lc}.csv"), &csv)?;

        let m = ranked.len();
        let hill_k = (m / 10).max(1);
        let hill = if m > hill_k {
            hill_estimator(values, hill_k).ok()
        } else {
            None
        };
        let positive: Vec<f64> = ranked.iter().map(|p| p.1).collect();
        let ln = fit_log_normal(&positive).ok();
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let _ = writeln!(
            fits,
            "{kind},{var_lc},{unit},{m},{},{},{},{hill_k},{},{},{},{}",
            opt(fit.as_ref().map(|f| f.slope)),
            opt(fit.as_ref().map(|f| f.scale)),
            opt(fit.as_ref().and_then(|f| f.r_squared)),
            opt(hill),
            opt(ln.map(|l| l.mu)),
            opt(ln.map(|l| l.sigma)),
            opt(ln.map(|l| l.ks_statistic)),
        );
        if fit.is_none() {
            warnings.push(format!("{kind} {var}: too few positive values for a power-law fit"));
        }
    }
    out.write("distribution_fits.csv", &fits)?;

    kernel_curves(cfg, state, out, warnings)?;

    let data = state.data()?;
    match area_trade_shares(&data.flows, &data.countries) {
        Ok(t) => {
            out.write("area_shares.csv", &t.to_csv())?;
            out.write("area_shares.txt", &t.to_text())?;
        }
        Err(e) => warnings.push(format!("area trade shares not computed: {e}")),
    }
    Ok(())
}

/// Conditional mean of the (pre-normalization) flow given GDP product,
/// distance, and GDP product over distance, on log-log axes.
fn kernel_curves(cfg: &AnalysisConfig, state: &State, out: &mut Artifacts, warnings: &mut Warnings) -> Result<()> {
    let data = state.data()?;
    let w = state.original()?;
    let raw = w.unnormalized();
    let gdp = data.countries.gdp();
    let mut flow = Vec::new();
    let mut mass = Vec::new();
    let mut dist = Vec::new();
    for (i, j, _) in w.links() {
        let Some(d) = data.dyads.get(i, j).and_then(|r| r.distance_km) else {
            continue;
        };
        flow.push(raw[(i, j)]);
        mass.push(gdp[i] * gdp[j]);
        dist.push(d);
    }
    let ratio: Vec<f64> = mass.iter().zip(&dist).map(|(m, d)| m / d).collect();
    let panels: [(&str, &str, &[f64]); 3] = [
        ("gdp_product", "gdp_product_currency2", &mass),
        ("distance", "distance_km", &dist),
        ("gdp_product_over_distance", "gdp_product_per_km", &ratio),
    ];
    for (name, xlabel, x) in panels {
        if x.len() < 20 {
            warnings.push(format!("kernel curve {name} skipped: only {} usable links", x.len()));
            continue;
        }
        let eval = geometric_grid(x, cfg.kernel_points);
        match kernel_conditional_mean_with(x, &flow, &eval, None, Axes::LogLog, cfg.seed, cfg.execution) {
            Ok(curve) => {
                let mut s = format!(
                    "{xlabel},flow_mean_original_currency,flow_lower95_original_currency,\
                     flow_upper95_original_currency,se_log\n"
                );
                for p in &curve.points {
                    let _ = writeln!(s, "{},{},{},{},{}", p.x, p.mean, p.lower, p.upper, p.se);
                }
                let _ = writeln!(
                    s,
                    "# bandwidth_log={} selected={}",
                    curve.bandwidth, curve.bandwidth_selected
                );
                out.write(&format!("kernel_{name}.csv"), &s)?;
            }
            Err(e) => warnings.push(format!("kernel curve {name} not computed: {e}")),
        }
    }
    Ok(())
}

/// `k` points spaced evenly in logs between the extremes of `x`.
fn geometric_grid(x: &[f64], k: usize) -> Vec<f64> {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if k < 2 || lo == hi {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|t| (a + (b - a) * t as f64 / (k - 1) as f64).exp().clamp(lo, hi))
        .collect()
}

fn tree_edges_csv(tree: &SpanningTree, kind: &str, countries: &CountryTable) -> String {
    let mut s = format!("id_a,id_b,acronym_a,acronym_b,distance_mantegna_{kind},rescaled_distance,report_weight\n");
    for e in &tree.edges {
        let (a, b) = (countries.get(e.a.min(e.b)), countries.get(e.a.max(e.b)));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            a.id, b.id, a.acronym, b.acronym, e.distance, e.rescaled_distance, e.report_weight
        );
    }
    s
}

fn network_summary(state: &State) -> String {
    let mut s = String::from("network,countries,positive_links,density,normalizer_currency,degenerate\n");
    for net in state.networks() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            net.kind().label(),
            net.n(),
            net.links().len(),
            density(net).map_or(String::new(), |d| d.to_string()),
            net.normalizer(),
            net.is_degenerate()
        );
    }
    s
}

fn counts(state: &State) -> Counts {
    let mut c = Counts::default();
    if let Some(d) = &state.data {
        let n = d.countries.len();
        c.countries = Some(n);
        c.year = Some(d.flows.year());
        c.dyads_total = Some(n * n.saturating_sub(1) / 2);
    }
    if let Some(fit) = &state.fit {
        let est = fit.dyads().len();
        c.dyads_estimated = Some(est);
        c.dyads_dropped = c.dyads_total.map(|t| t - est);
    }
    if let Some(w) = &state.original {
        c.positive_links_original = Some(w.links().len());
        c.density_original = density(w).ok();
    }
    if let Some(e) = &state.residual {
        c.positive_links_residual = Some(e.links().len());
        c.density_residual = density(e).ok();
    }
    c
}

/// Loads `manifest.json` from an output directory.
pub fn read_manifest(dir: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}
