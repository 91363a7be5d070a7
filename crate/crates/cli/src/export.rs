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

//! Graph files for networks and spanning trees.
//!
//! `top_fraction = f` keeps the `ceil(f * m)` heaviest of the `m` positive
//! links (ties broken by node indices), so any positive fraction keeps at
//! least one link.

use std::fmt::Write;

use anyhow::{anyhow, bail, Result};
use nalgebra::DMatrix;
use tradenet_core::data::CountryTable;
use tradenet_core::mst::SpanningTree;
use tradenet_core::network::WeightedNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    GraphMl,
    Csv,
}

impl GraphFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(Self::Dot),
            "graphml" => Ok(Self::GraphMl),
            "csv" => Ok(Self::Csv),
            _ => bail!("unsupported graph format {s:?} (expected dot, graphml or csv)"),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Dot => "dot",
            Self::GraphMl => "graphml",
            Self::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    /// Tree distance, for spanning trees.
    pub distance: Option<f64>,
}

/// An edge list ready for export; `kind` names the network in headers.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    pub kind: String,
    pub edges: Vec<GraphEdge>,
}

/// `ceil(fraction * m)`, computed so that exact products are not bumped up
/// by rounding (0.01 * 100 is 1.0000000000000002 in binary).
pub fn top_count(fraction: f64, m: usize) -> usize {
    let raw = fraction * m as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded
    } else {
        raw.ceil()
    };
    (k as usize).min(m)
}

pub fn network_view(net: &WeightedNetwork, top_fraction: Option<f64>) -> Result<GraphView> {
    let mut links: Vec<(usize, usize, f64)> = net
        .links()
        .into_iter()
        .map(|(i, j, w)| (j.min(i), i.max(j), w))
        .collect();
    if let Some(f) = top_fraction {
        if !(f > 0.0 && f <= 1.0) {
            bail!("top_fraction must lie in (0, 1], got {f}");
        }
        links.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
        links.truncate(top_count(f, links.len()));
    }
    links.sort_by_key(|&(a, b, _)| (a, b));
    Ok(GraphView {
        kind: net.kind().label().to_string(),
        edges: links
            .into_iter()
            .map(|(a, b, weight)| GraphEdge {
                a,
                b,
                weight,
                distance: None,
            })
            .collect(),
    })
}

/// Tree edges with their report weight `1 - d / d_max` and distance.
pub fn tree_view(tree: &SpanningTree, kind: &str) -> GraphView {
    let mut edges: Vec<GraphEdge> = tree
        .edges
        .iter()
        .map(|e| GraphEdge {
            a: e.a.min(e.b),
            b: e.a.max(e.b),
            weight: e.report_weight,
            distance: Some(e.distance),
        })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    GraphView {
        kind: format!("mst_{kind}"),
        edges,
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn render(view: &GraphView, countries: &CountryTable, format: GraphFormat) -> String {
    match format {
        GraphFormat::Dot => render_dot(view, countries),
        GraphFormat::GraphMl => render_graphml(view, countries),
        GraphFormat::Csv => render_csv(view, countries),
    }
}

fn render_dot(view: &GraphView, countries: &CountryTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph \"{}\" {{", dot_escape(&view.kind));
    for c in countries.iter() {
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\", name=\"{}\", gdp={}, continent=\"{}\"];",
            dot_escape(&c.acronym),
            dot_escape(&c.acronym),
            dot_escape(&c.name),
            c.gdp,
            dot_escape(&c.continent)
        );
    }
    for e in &view.edges {
        let (a, b) = (&countries.get(e.a).acronym, &countries.get(e.b).acronym);
        let _ = write!(
            out,
            "  \"{}\" -- \"{}\" [weight={}",
            dot_escape(a),
            dot_escape(b),
            e.weight
        );
        if let Some(d) = e.distance {
            let _ = write!(out, ", distance={d}");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

fn render_graphml(view: &GraphView, countries: &CountryTable) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
         \x20 <key id=\"acronym\" for=\"node\" attr.name=\"acronym\" attr.type=\"string\"/>\n\
         \x20 <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n\
         \x20 <key id=\"gdp\" for=\"node\" attr.name=\"gdp\" attr.type=\"double\"/>\n\
         \x20 <key id=\"continent\" for=\"node\" attr.name=\"continent\" attr.type=\"string\"/>\n\
         \x20 <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n",
    );
    let tree = view.edges.iter().any(|e| e.distance.is_some());
    if tree {
        out.push_str("  <key id=\"distance\" for=\"edge\" attr.name=\"distance\" attr.type=\"double\"/>\n");
    }
    let _ = writeln!(
        out,
        "  <graph id=\"{}\" edgedefault=\"undirected\">",
        xml_escape(&view.kind)
    );
    for c in countries.iter() {
        let _ = writeln!(
            out,
            "    <node id=\"n{}\"><data key=\"acronym\">{}</data><data key=\"name\">{}</data>\
             <data key=\"gdp\">{}</data><data key=\"continent\">{}</data></node>",
            c.id,
            xml_escape(&c.acronym),
            xml_escape(&c.name),
            c.gdp,
            xml_escape(&c.continent)
        );
    }
    for e in &view.edges {
        let _ = write!(
            out,
            "    <edge source=\"n{}\" target=\"n{}\"><data key=\"weight\">{}</data>",
            countries.get(e.a).id,
            countries.get(e.b).id,
            e.weight
        );
        if let Some(d) = e.distance {
            let _ = write!(out, "<data key=\"distance\">{d}</data>");
        }
        out.push_str("</edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Header of the CSV edge list; the weight column names the network kind.
pub fn csv_header(kind: &str, tree: bool) -> String {
    let mut h = format!("id_a,id_b,acronym_a,acronym_b,weight_{kind}_normalized");
    if tree {
        h.push_str(",distance_mantegna");
    }
    h
}

fn render_csv(view: &GraphView, countries: &CountryTable) -> String {
    let tree = view.edges.iter().any(|e| e.distance.is_some());
    let mut out = csv_header(&view.kind, tree);
    out.push('\n');
    for e in &view.edges {
        let (ca, cb) = (countries.get(e.a), countries.get(e.b));
        let _ = write!(
            out,
            "{},{},{},{},{}",
            ca.id,
            cb.id,
            csv_field(&ca.acronym),
            csv_field(&cb.acronym),
            e.weight
        );
        if let Some(d) = e.distance {
            let _ = write!(out, ",{d}");
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Reads a CSV edge list back into a symmetric weight matrix.
pub fn read_edge_csv(text: &str, countries: &CountryTable) -> Result<DMatrix<f64>> {
    let n = countries.len();
    let mut m = DMatrix::zeros(n, n);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ia, ib) = (
        col("id_a").ok_or_else(|| anyhow!("edge list without id_a"))?,
        col("id_b").ok_or_else(|| anyhow!("edge list without id_b"))?,
    );
    let iw = headers
        .iter()
        .position(|h| h.starts_with("weight_"))
        .ok_or_else(|| anyhow!("edge list without a weight column"))?;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = |k: usize| -> Result<usize> {
            let v: i64 = rec[k]
                .parse()
                .map_err(|_| anyhow!("line {line}: bad id {:?}", &rec[k]))?;
            countries
                .index_of(v)
                .ok_or_else(|| anyhow!("line {line}: unknown country id {v}"))
        };
        let (a, b) = (id(ia)?, id(ib)?);
        let w: f64 = rec[iw]
            .parse()
            .map_err(|_| anyhow!("line {line}: bad weight {:?}", &rec[iw]))?;
        m[(a, b)] = w;
        m[(b, a)] = w;
    }
    Ok(m)
}
