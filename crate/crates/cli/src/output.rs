//! CSV and JSON writers.

use crate::config::{Format, Method};
use crate::run::{Cell, CompareRow, ConvergeRow};
use serde_json::{json, Map, Value};
use std::io::{self, Write};

pub const PRICE_HEADER: [&str; 7] = ["method", "K", "T", "price", "residual", "remainder", "notes"];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn comment<W: Write>(w: &mut W, stamp: Option<&str>) -> io::Result<()> {
    if let Some(s) = stamp {
        writeln!(w, "# generated {s}")?;
    }
    Ok(())
}

fn write_csv<W: Write>(mut w: W, stamp: Option<&str>, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    comment(&mut w, stamp)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for r in rows {
        out.write_record(r).map_err(csv_err)?;
    }
    out.flush()
}

fn write_json<W: Write>(mut w: W, stamp: Option<&str>, rows: Value) -> io::Result<()> {
    let mut doc = Map::new();
    if let Some(s) = stamp {
        doc.insert("generated".into(), json!(s));
    }
    doc.insert("rows".into(), rows);
    serde_json::to_writer_pretty(&mut w, &Value::Object(doc))?;
    writeln!(w)
}

pub fn write_prices<W: Write>(w: W, format: Format, stamp: Option<&str>, cells: &[Cell]) -> io::Result<()> {
    match format {
        Format::Csv => {
            let header: Vec<String> = PRICE_HEADER.iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|c| {
                    vec![
                        c.method.to_string(),
                        num(c.strike),
                        num(c.maturity),
                        num(c.price),
                        opt(c.residual),
                        opt(c.remainder),
                        c.notes.clone(),
                    ]
                })
                .collect();
            write_csv(w, stamp, &header, &rows)
        }
        Format::Json => write_json(w, stamp, serde_json::to_value(cells)?),
    }
}

fn diff_name(m: Method, reference: Method) -> String {
    format!("diff_{m}_{reference}")
}

pub fn write_compare<W: Write>(
    w: W,
    format: Format,
    stamp: Option<&str>,
    reference: Method,
    rows: &[CompareRow],
) -> io::Result<()> {
    let Some(first) = rows.first() else {
        return write_csv(w, stamp, &["K".into(), "T".into()], &[]);
    };
    let methods: Vec<Method> = first.prices.iter().map(|p| p.0).collect();
    let diffs: Vec<Method> = first.diffs.iter().map(|d| d.0).collect();
    match format {
        Format::Csv => {
            let mut header = vec!["K".to_string(), "T".to_string()];
            header.extend(methods.iter().map(|m| m.to_string()));
            header.extend(diffs.iter().map(|&m| diff_name(m, reference)));
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v = vec![num(r.strike), num(r.maturity)];
                    v.extend(r.prices.iter().map(|p| num(p.1)));
                    v.extend(r.diffs.iter().map(|d| num(d.1)));
                    v
                })
                .collect();
            write_csv(w, stamp, &header, &body)
        }
        Format::Json => {
            let list = rows
                .iter()
                .map(|r| {
                    let mut o = Map::new();
                    o.insert("K".into(), json!(r.strike));
                    o.insert("T".into(), json!(r.maturity));
                    for &(m, p) in &r.prices {
                        o.insert(m.to_string(), json!(p));
                    }
                    for &(m, d) in &r.diffs {
                        o.insert(diff_name(m, reference), json!(d));
                    }
                    Value::Object(o)
                })
                .collect();
            write_json(w, stamp, Value::Array(list))
        }
    }
}

pub fn write_converge<W: Write>(w: W, format: Format, stamp: Option<&str>, rows: &[ConvergeRow]) -> io::Result<()> {
    match format {
        Format::Csv => {
            let header: Vec<String> =
                ["method", "K", "T", "M", "price", "delta", "ratio", "notes"].iter().map(|s| s.to_string()).collect();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.method.to_string(),
                        num(r.strike),
                        num(r.maturity),
                        r.size.to_string(),
                        num(r.price),
                        opt(r.delta),
                        opt(r.ratio),
                        r.notes.clone(),
                    ]
                })
                .collect();
            write_csv(w, stamp, &header, &body)
        }
        Format::Json => write_json(w, stamp, serde_json::to_value(rows)?),
    }
}
