use std::io::{Read, Write};

use super::{Graph, MetricsRow, SmoothedSeries};
use crate::error::{Error, Result};

fn io_err(e: std::io::Error) -> Error {
    Error::io("<graph output>", e)
}

/// Edge list CSV with header `source,target,nmi`. Nodes without edges follow
/// the edges as rows with empty `target` and `nmi`, so the node set survives
/// a round trip.
pub fn write_edge_list<W: Write>(g: &Graph, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target", "nmi"])?;
    for (a, b, wt) in g.edges() {
        w.write_record([g.label(a), g.label(b), &wt.to_string()])?;
    }
    for i in (0..g.n_nodes()).filter(|&i| g.degree(i) == 0) {
        w.write_record([g.label(i), "", ""])?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Inverse of [`write_edge_list`]. Nodes are numbered by first appearance;
/// a missing `nmi` reads as weight 1.
pub fn read_edge_list<R: Read>(input: R) -> Result<Graph> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in r.records() {
        let rec = rec?;
        let source = rec.get(0).unwrap_or("").trim().to_string();
        let target = rec.get(1).unwrap_or("").trim().to_string();
        let weight = match rec.get(2).map(str::trim) {
            None | Some("") => 1.0,
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad nmi `{s}` on edge {source}-{target}")))?,
        };
        if source.is_empty() {
            return Err(Error::Invalid("edge list row without a source".into()));
        }
        for l in [&source, &target] {
            if !l.is_empty() && seen.insert(l.clone()) {
                labels.push(l.clone());
            }
        }
        if !target.is_empty() {
            rows.push((source, target, weight));
        }
    }
    let mut g = Graph::new(labels)?;
    for (a, b, w) in rows {
        g.add_edge_by_label(&a, &b, w)?;
    }
    Ok(g)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// GraphML with node ids equal to labels and an `nmi` edge attribute.
pub fn write_graphml<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"nmi\" for=\"edge\" attr.name=\"nmi\" attr.type=\"double\"/>\n");
    s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for l in g.labels() {
        s.push_str(&format!("    <node id=\"{}\"/>\n", xml_escape(l)));
    }
    for (a, b, w) in g.edges() {
        s.push_str(&format!(
            "    <edge source=\"{}\" target=\"{}\">\n      <data key=\"nmi\">{}</data>\n    </edge>\n",
            xml_escape(g.label(a)),
            xml_escape(g.label(b)),
            w
        ));
    }
    s.push_str("  </graph>\n</graphml>\n");
    out.write_all(s.as_bytes()).map_err(io_err)
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn write_dot<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    let mut s = String::from("graph G {\n");
    for l in g.labels() {
        s.push_str(&format!("  {};\n", dot_quote(l)));
    }
    for (a, b, w) in g.edges() {
        s.push_str(&format!(
            "  {} -- {} [nmi={}];\n",
            dot_quote(g.label(a)),
            dot_quote(g.label(b)),
            w
        ));
    }
    s.push_str("}\n");
    out.write_all(s.as_bytes()).map_err(io_err)
}

pub const METRICS_HEADER: [&str; 5] = ["year", "density", "avg_path_length", "global_clustering", "diameter"];

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.year.to_string(),
            r.density.to_string(),
            r.avg_path_length.to_string(),
            r.global_clustering.to_string(),
            r.diameter.to_string(),
        ])?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Smoothed metric columns side by side. All series must share their year
/// labels; columns follow the order given.
pub fn write_smoothed_csv<W: Write>(columns: &[(&str, &SmoothedSeries)], out: W) -> Result<()> {
    let Some((_, first)) = columns.first() else {
        return Err(Error::Invalid("no series to write".into()));
    };
    if columns
        .iter()
        .any(|(_, s)| s.start_year != first.start_year || s.values.len() != first.values.len())
    {
        return Err(Error::Invalid("smoothed series are not aligned".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["year"];
    header.extend(columns.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    for (i, year) in first.years().enumerate() {
        let mut rec = vec![year.to_string()];
        rec.extend(columns.iter().map(|(_, s)| s.values[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
