//! Cell evaluation for the three pricing routes.

use crate::config::{Method, Model, RunConfig};
use besselbarrier::bp::{price_bounded, price_double_barrier, price_semi_infinite, BpConfig};
use besselbarrier::fd::{cn_price, FdGrid, FdModel};
use besselbarrier::git::{price_bounded_series, price_semi_infinite_wo, SeriesConfig, WeberOrrConfig};
use besselbarrier::models::{cev_to_bessel, cir_to_bessel, BesselProblem, Domain};
use rayon::prelude::*;
use serde::Serialize;

/// One priced cell.  `residual` and `remainder` are `None` where the
/// method does not report them.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub method: Method,
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub price: f64,
    pub residual: Option<f64>,
    pub remainder: Option<f64>,
    pub notes: String,
}

impl Cell {
    pub fn failed(&self) -> bool {
        self.price.is_nan()
    }
}

/// Method settings for a single evaluation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub bp: BpConfig,
    pub weber_orr: WeberOrrConfig,
    pub series: SeriesConfig,
    pub fd: FdGrid,
}

impl Settings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Settings { bp: cfg.bp.config(), weber_orr: cfg.git.weber_orr(), series: cfg.git.series(), fd: cfg.fd.grid() }
    }

    /// Same settings with the discretization size replaced by `m`.
    /// FD uses `m + 1` space nodes and `m` time steps.
    pub fn with_size(&self, m: usize) -> Self {
        let mut s = self.clone();
        s.bp.m = m;
        s.weber_orr.m = m;
        s.series.m = m;
        s.fd.space_nodes = m + 1;
        s.fd.time_steps = m;
        s
    }
}

struct Point {
    price: f64,
    residual: Option<f64>,
    remainder: Option<f64>,
    notes: String,
}

fn reduce(cfg: &RunConfig, model: &Model, k: f64, t: f64) -> besselbarrier::Result<BesselProblem> {
    let barrier = cfg.barrier.spec();
    match model {
        Model::Cev(m) => cev_to_bessel(m, &barrier, k, t),
        Model::Cir(m) => cir_to_bessel(m, &barrier, k, t),
    }
}

fn clamp_note(clamped: usize) -> String {
    if clamped > 0 {
        format!("clamped {clamped}")
    } else {
        String::new()
    }
}

fn price_point(cfg: &RunConfig, model: &Model, set: &Settings, method: Method, k: f64, t: f64) -> Result<Point, String> {
    let spot = cfg.spot;
    if method == Method::Fd {
        let barrier = cfg.barrier.spec();
        let fm = match model {
            Model::Cev(m) => FdModel::Cev(m),
            Model::Cir(m) => FdModel::Cir(m),
        };
        let r = cn_price(fm, &barrier, k, t, spot, &set.fd).map_err(|e| e.to_string())?;
        return Ok(Point { price: r.price, residual: None, remainder: None, notes: String::new() });
    }
    let p = reduce(cfg, model, k, t).map_err(|e| e.to_string())?;
    let z = [(p.back.to_z)(spot)];
    match (method, p.domain) {
        (Method::Bp, domain) => {
            let r = match domain {
                Domain::SemiInfinite => price_semi_infinite(&p, set.bp, &z),
                Domain::Bounded => price_bounded(&p, set.bp, &z),
                Domain::Strip => price_double_barrier(&p, set.bp, &z),
            }
            .map_err(|e| e.to_string())?;
            Ok(Point {
                price: r.price[0],
                residual: Some(r.solution.residual),
                remainder: None,
                notes: clamp_note(r.clamped),
            })
        }
        (Method::Git, Domain::SemiInfinite) => {
            let r = price_semi_infinite_wo(&p, set.weber_orr, &z).map_err(|e| e.to_string())?;
            let notes = if r.density.skipped { "slow-boundary shortcut".to_string() } else { String::new() };
            Ok(Point {
                price: r.price[0],
                residual: Some(r.density.residual),
                remainder: Some(r.remainder_bound[0]),
                notes,
            })
        }
        (Method::Git, Domain::Bounded) => {
            let r = price_bounded_series(&p, set.series, &z).map_err(|e| e.to_string())?;
            Ok(Point {
                price: r.price[0],
                residual: Some(r.density.residual),
                remainder: Some(r.remainder[0]),
                notes: String::new(),
            })
        }
        (Method::Git, Domain::Strip) => Err("git does not support double barriers".into()),
        (Method::Fd, _) => unreachable!(),
    }
}

/// Evaluate one cell; failures become NaN with the error in `notes`.
pub fn evaluate(cfg: &RunConfig, model: &Model, set: &Settings, method: Method, k: f64, t: f64) -> Cell {
    let (price, residual, remainder, notes) = match price_point(cfg, model, set, method, k, t) {
        Ok(p) if p.price.is_finite() => (p.price, p.residual, p.remainder, p.notes),
        Ok(_) => (f64::NAN, None, None, "error: non-finite price".to_string()),
        Err(e) => (f64::NAN, None, None, format!("error: {e}")),
    };
    Cell { method, strike: k, maturity: t, price, residual, remainder, notes }
}

/// (method, K, T) jobs sorted by method, then strike, then maturity.
fn jobs(cfg: &RunConfig) -> Vec<(Method, f64, f64)> {
    let mut methods = cfg.methods.clone();
    methods.sort();
    let mut strikes = cfg.strikes.clone();
    strikes.sort_by(f64::total_cmp);
    let mut maturities = cfg.maturities.clone();
    maturities.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(methods.len() * strikes.len() * maturities.len());
    for &m in &methods {
        for &k in &strikes {
            for &t in &maturities {
                out.push((m, k, t));
            }
        }
    }
    out
}

/// All cells in sorted order.
pub fn price_all(cfg: &RunConfig, model: &Model, set: &Settings) -> Vec<Cell> {
    jobs(cfg).par_iter().map(|&(m, k, t)| evaluate(cfg, model, set, m, k, t)).collect()
}

/// Grid sizes used by `converge`.
pub const CONVERGE_SIZES: [usize; 4] = [25, 50, 100, 200];

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeRow {
    pub method: Method,
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    #[serde(rename = "M")]
    pub size: usize,
    pub price: f64,
    /// Change from the previous size.
    pub delta: Option<f64>,
    /// Ratio of successive deltas.
    pub ratio: Option<f64>,
    pub notes: String,
}

pub fn converge(cfg: &RunConfig, model: &Model, set: &Settings, sizes: &[usize]) -> Vec<ConvergeRow> {
    let runs: Vec<Vec<Cell>> = jobs(cfg)
        .par_iter()
        .map(|&(m, k, t)| sizes.iter().map(|&n| evaluate(cfg, model, &set.with_size(n), m, k, t)).collect())
        .collect();
    let mut rows = Vec::new();
    for cells in runs {
        let mut prev: Option<f64> = None;
        let mut prev_delta: Option<f64> = None;
        for (cell, &n) in cells.into_iter().zip(sizes) {
            let delta = prev.map(|p| cell.price - p);
            let ratio = match (prev_delta, delta) {
                (Some(a), Some(b)) if b != 0.0 => Some(a / b),
                _ => None,
            };
            prev = Some(cell.price);
            prev_delta = delta;
            rows.push(ConvergeRow {
                method: cell.method,
                strike: cell.strike,
                maturity: cell.maturity,
                size: n,
                price: cell.price,
                delta,
                ratio,
                notes: cell.notes,
            });
        }
    }
    rows
}

/// Per (K, T): every method's price and `100 (A - B) / B` against the reference.
#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub prices: Vec<(Method, f64)>,
    pub diffs: Vec<(Method, f64)>,
}

/// The reference is FD when requested, otherwise the last method in sorted order.
pub fn reference_method(methods: &[Method]) -> Method {
    if methods.contains(&Method::Fd) {
        Method::Fd
    } else {
        *methods.iter().max().expect("methods validated non-empty")
    }
}

pub fn compare(cells: &[Cell], reference: Method) -> Vec<CompareRow> {
    let mut keys: Vec<(f64, f64)> = cells.iter().map(|c| (c.strike, c.maturity)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(k, t)| {
            let here: Vec<&Cell> = cells.iter().filter(|c| c.strike == k && c.maturity == t).collect();
            let base = here.iter().find(|c| c.method == reference).map(|c| c.price).unwrap_or(f64::NAN);
            let prices = here.iter().map(|c| (c.method, c.price)).collect();
            let diffs = here
                .iter()
                .filter(|c| c.method != reference)
                .map(|c| (c.method, 100.0 * (c.price - base) / base))
                .collect();
            CompareRow { strike: k, maturity: t, prices, diffs }
        })
        .collect()
}
