// SPDX-License-Identifier: Apache-2.0

//! File exports: GEXF 1.2 graphs for external layout, plus CSV and JSON
//! tables for edges, partitions, rankings and community signals.

use std::collections::BTreeMap;
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::bot_scoring::ScoreCache;
use crate::centrality::CentralityScores;
use crate::community::{community_sizes, Partition};
use crate::error::{Error, Result};
use crate::signals::CommunitySignal;
use crate::weighted::WeightedGraph;

pub const GEXF_NAMESPACE: &str = "http://www.gexf.net/1.2draft";

/// Optional node attributes attached to a GEXF export.
#[derive(Default, Clone, Copy)]
pub struct NodeAttributes<'a> {
    pub partition: Option<&'a Partition>,
    pub centrality: Option<&'a CentralityScores>,
    pub scores: Option<&'a ScoreCache>,
}

/// Serializes `g` as GEXF 1.2. Nodes use their name as id and label and are
/// written in name order; edges follow in `(source, target)` order.
pub fn gexf_string(g: &WeightedGraph, attrs: NodeAttributes<'_>) -> String {
    let mut declared: Vec<(&str, &str)> = Vec::new();
    if attrs.partition.is_some() {
        declared.push(("community", "integer"));
    }
    if attrs.centrality.is_some() {
        declared.push(("centrality", "double"));
    }
    if attrs.scores.is_some() {
        declared.push(("bot_overall", "double"));
    }
    let community = attrs.partition.map(Partition::lookup);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!("<gexf xmlns=\"{GEXF_NAMESPACE}\" version=\"1.2\">\n"));
    s.push_str("  <meta>\n    <creator>botnet</creator>\n  </meta>\n");
    let kind = if g.is_directed() { "directed" } else { "undirected" };
    s.push_str(&format!("  <graph mode=\"static\" defaultedgetype=\"{kind}\">\n"));
    if !declared.is_empty() {
        s.push_str("    <attributes class=\"node\">\n");
        for (i, (title, ty)) in declared.iter().enumerate() {
            s.push_str(&format!("      <attribute id=\"{i}\" title=\"{title}\" type=\"{ty}\"/>\n"));
        }
        s.push_str("    </attributes>\n");
    }
    s.push_str("    <nodes>\n");
    for name in g.names() {
        let esc = escape(name.as_str());
        let mut values: Vec<(usize, String)> = Vec::new();
        for (i, (title, _)) in declared.iter().enumerate() {
            let v = match *title {
                "community" => community.as_ref().and_then(|m| m.get(name.as_str())).map(|c| c.to_string()),
                "centrality" => attrs.centrality.and_then(|c| c.get(name)).map(|x| x.to_string()),
                _ => attrs
                    .scores
                    .and_then(|c| c.get(name))
                    .and_then(|r| r.overall)
                    .map(|x| x.to_string()),
            };
            if let Some(v) = v {
                values.push((i, v));
            }
        }
        if values.is_empty() {
            s.push_str(&format!("      <node id=\"{esc}\" label=\"{esc}\"/>\n"));
        } else {
            s.push_str(&format!("      <node id=\"{esc}\" label=\"{esc}\">\n        <attvalues>\n"));
            for (i, v) in values {
                s.push_str(&format!("          <attvalue for=\"{i}\" value=\"{v}\"/>\n"));
            }
            s.push_str("        </attvalues>\n      </node>\n");
        }
    }
    s.push_str("    </nodes>\n    <edges>\n");
    for (i, e) in g.edges().iter().enumerate() {
        s.push_str(&format!(
            "      <edge id=\"{i}\" source=\"{}\" target=\"{}\" weight=\"{}\"/>\n",
            escape(g.names()[e.source].as_str()),
            escape(g.names()[e.target].as_str()),
            e.weight
        ));
    }
    s.push_str("    </edges>\n  </graph>\n</gexf>\n");
    s
}

pub fn export_gexf(g: &WeightedGraph, attrs: NodeAttributes<'_>, path: &Path) -> Result<()> {
    if g.is_empty() {
        return Err(Error::data(format!("refusing to export an empty graph to {}", path.display())));
    }
    std::fs::write(path, gexf_string(g, attrs)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GexfNode {
    pub id: String,
    pub label: String,
    /// Attribute title → raw value.
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GexfEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GexfDocument {
    pub directed: bool,
    pub nodes: Vec<GexfNode>,
    pub edges: Vec<GexfEdge>,
}

fn attr(e: &BytesStart<'_>, key: &str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::data(format!("bad GEXF attribute: {err}")))?;
        if a.key.as_ref() == key.as_bytes() {
            let v = a
                .unescape_value()
                .map_err(|err| Error::data(format!("bad GEXF attribute value: {err}")))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, key: &str) -> Result<String> {
    attr(e, key)?.ok_or_else(|| {
        Error::data(format!(
            "GEXF <{}> lacks '{key}'",
            String::from_utf8_lossy(e.name().as_ref())
        ))
    })
}

/// Reads back the subset of GEXF written by [`gexf_string`].
pub fn parse_gexf(xml: &str) -> Result<GexfDocument> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);
    let mut doc = GexfDocument::default();
    let mut titles: BTreeMap<String, String> = BTreeMap::new();
    let mut node_attrs = false;
    let mut current: Option<GexfNode> = None;
    let mut saw_graph = false;
    loop {
        let ev = reader
            .read_event()
            .map_err(|e| Error::data(format!("GEXF parse error at byte {}: {e}", reader.buffer_position())))?;
        match ev {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(ev, Event::Empty(_));
                match e.name().as_ref() {
                    b"graph" => {
                        saw_graph = true;
                        doc.directed = attr(e, "defaultedgetype")?.as_deref() != Some("undirected");
                    }
                    b"attributes" => node_attrs = attr(e, "class")?.as_deref() == Some("node"),
                    b"attribute" if node_attrs => {
                        titles.insert(required(e, "id")?, required(e, "title")?);
                    }
                    b"node" => {
                        let id = required(e, "id")?;
                        let label = attr(e, "label")?.unwrap_or_else(|| id.clone());
                        let node = GexfNode {
                            id,
                            label,
                            attributes: BTreeMap::new(),
                        };
                        if empty {
                            doc.nodes.push(node);
                        } else {
                            current = Some(node);
                        }
                    }
                    b"attvalue" => {
                        let key = required(e, "for")?;
                        let value = required(e, "value")?;
                        let title = titles.get(&key).cloned().unwrap_or(key);
                        if let Some(n) = current.as_mut() {
                            n.attributes.insert(title, value);
                        }
                    }
                    b"edge" => {
                        let weight = match attr(e, "weight")? {
                            Some(w) => w
                                .parse()
                                .map_err(|_| Error::data(format!("GEXF edge weight '{w}' is not a number")))?,
                            None => 1.0,
                        };
                        doc.edges.push(GexfEdge {
                            source: required(e, "source")?,
                            target: required(e, "target")?,
                            weight,
                        });
                    }
                    _ => {}
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"node" => {
                    if let Some(n) = current.take() {
                        doc.nodes.push(n);
                    }
                }
                b"attributes" => node_attrs = false,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_graph {
        return Err(Error::data("document has no <graph> element"));
    }
    Ok(doc)
}

pub fn read_gexf(path: &Path) -> Result<GexfDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gexf(&text)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::data(format!("writing {}: {e}", path.display()))
}

fn write_csv<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<std::fs::File>) -> std::result::Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    fill(&mut w).map_err(csv_err(path))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// `source,target,weight` per edge.
pub fn write_edge_list(g: &WeightedGraph, path: &Path) -> Result<()> {
    write_csv(path, |w| {
        w.write_record(["source", "target", "weight"])?;
        for e in g.edges() {
            w.write_record([&g.names()[e.source], &g.names()[e.target], &e.weight.to_string()])?;
        }
        Ok(())
    })
}

/// `node,community` per node.
pub fn write_partition_csv(p: &Partition, path: &Path) -> Result<()> {
    write_csv(path, |w| {
        w.write_record(["node", "community"])?;
        for (n, c) in p.nodes().iter().zip(p.labels()) {
            w.write_record([n.as_str(), &c.to_string()])?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub modularity: f64,
    pub resolution: f64,
    pub seed: u64,
    pub community_count: usize,
    pub level_modularity: Vec<f64>,
    pub sizes: Vec<(usize, usize)>,
}

impl PartitionSummary {
    pub fn of(p: &Partition) -> Self {
        PartitionSummary {
            modularity: p.modularity,
            resolution: p.resolution,
            seed: p.seed,
            community_count: p.community_count(),
            level_modularity: p.level_modularity.clone(),
            sizes: community_sizes(p),
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::data(e.to_string()))?;
    std::fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
}

/// `account,score` with full precision.
pub fn write_ranking_csv(rows: &[(String, f64)], path: &Path) -> Result<()> {
    write_csv(path, |w| {
        w.write_record(["account", "score"])?;
        for (a, s) in rows {
            w.write_record([a.as_str(), &s.to_string()])?;
        }
        Ok(())
    })
}

/// `community,batch_fraction,name_fraction,combined`.
pub fn write_signal_csv(rows: &[CommunitySignal], path: &Path) -> Result<()> {
    write_csv(path, |w| {
        w.write_record(["community", "batch_fraction", "name_fraction", "combined"])?;
        for r in rows {
            w.write_record([
                r.community.to_string(),
                r.batch_fraction.to_string(),
                r.name_fraction.to_string(),
                r.combined.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn read_partition_csv(path: &Path) -> Result<Partition> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::data(format!("reading {}: {e}", path.display())))?;
    let mut rows: Vec<(String, usize)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::data(format!("reading {}: {e}", path.display())))?;
        let node = rec.get(0).unwrap_or_default().to_string();
        let c = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::data(format!("bad community id for node '{node}' in {}", path.display())))?;
        rows.push((node, c));
    }
    rows.sort();
    let labels: Vec<usize> = rows.iter().map(|r| r.1).collect();
    Partition::from_labels(rows.into_iter().map(|r| r.0).collect(), &labels)
}
