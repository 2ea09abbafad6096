//! Result persistence. The CSV is long format, one row per (run, coefficient):
//! `sampler,pde,t_div,eps_thr,size,seed,n_samples,coef_index,rel_error,wall_time_s`
//! with empty cells for fields that do not apply.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::kmeans::ClusterSummary;
use super::sweep::ExperimentRecord;
use crate::error::{Error, Result};
use crate::sampler::SamplerKind;

pub const CSV_HEADER: [&str; 10] = [
    "sampler",
    "pde",
    "t_div",
    "eps_thr",
    "size",
    "seed",
    "n_samples",
    "coef_index",
    "rel_error",
    "wall_time_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultFormat {
    Csv,
    Json,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        for (c, e) in r.rel_errors.iter().enumerate() {
            w.write_record([
                r.sampler.to_string(),
                r.pde.clone(),
                opt(r.t_div),
                r.eps_thr.map(num).unwrap_or_default(),
                opt(r.size),
                opt(r.seed),
                r.n_samples.to_string(),
                c.to_string(),
                e.map(num).unwrap_or_default(),
                num(r.wall_time_s),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Deserialize)]
struct CsvRow {
    sampler: SamplerKind,
    pde: String,
    t_div: Option<usize>,
    eps_thr: Option<f64>,
    size: Option<usize>,
    seed: Option<u64>,
    n_samples: usize,
    coef_index: usize,
    rel_error: Option<f64>,
    wall_time_s: f64,
}

/// Regroups CSV rows into records. Fields outside the CSV schema
/// (`final_p`, `diverged`, `failure`) come back empty.
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out: Vec<ExperimentRecord> = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let row = row?;
        let starts_new = row.coef_index == 0;
        if starts_new {
            out.push(ExperimentRecord {
                sampler: row.sampler,
                pde: row.pde,
                t_div: row.t_div,
                eps_thr: row.eps_thr,
                size: row.size,
                seed: row.seed,
                n_samples: row.n_samples,
                rel_errors: vec![row.rel_error],
                final_p: Vec::new(),
                wall_time_s: row.wall_time_s,
                diverged: false,
                failure: None,
            });
        } else {
            let last = out
                .last_mut()
                .filter(|r| r.rel_errors.len() == row.coef_index)
                .ok_or_else(|| Error::arg(format!("coefficient row {} out of sequence", row.coef_index)))?;
            last.rel_errors.push(row.rel_error);
        }
    }
    Ok(out)
}

pub fn write_records_json<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

pub fn read_records_json<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    Ok(serde_json::from_reader(input)?)
}

pub fn export_results<W: Write>(records: &[ExperimentRecord], out: W, format: ResultFormat) -> Result<()> {
    match format {
        ResultFormat::Csv => write_records_csv(records, out),
        ResultFormat::Json => write_records_json(records, out),
    }
}

/// `(n_samples, rel_error)` points of one coefficient over successful runs.
pub fn error_points(records: &[ExperimentRecord], coef: usize) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.succeeded())
        .filter_map(|r| r.rel_errors.get(coef).copied().flatten().map(|e| (r.n_samples as f64, e)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub coef_index: usize,
    pub points: Vec<(f64, f64)>,
}

/// Sample count against relative error: one series per (t_div, coefficient)
/// for greedy runs, per coefficient for the random baseline means, and the
/// cluster centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub pde: String,
    pub terms: Vec<String>,
    pub greedy: Vec<Series>,
    pub random_mean: Vec<Series>,
    pub centroids: Vec<Series>,
}

pub fn plot_data(
    pde: &str,
    terms: &[String],
    records: &[ExperimentRecord],
    clusters: &[(usize, ClusterSummary)],
) -> PlotData {
    let mut t_divs: Vec<usize> = records.iter().filter_map(|r| r.t_div).collect();
    t_divs.sort_unstable();
    t_divs.dedup();
    let mut greedy = Vec::new();
    for &td in &t_divs {
        let group: Vec<ExperimentRecord> = records
            .iter()
            .filter(|r| r.sampler == SamplerKind::Greedy && r.t_div == Some(td))
            .cloned()
            .collect();
        for c in 0..terms.len() {
            let mut points = error_points(&group, c);
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            greedy.push(Series {
                label: format!("t_div={td}"),
                coef_index: c,
                points,
            });
        }
    }
    let randoms: Vec<ExperimentRecord> = records
        .iter()
        .filter(|r| r.sampler == SamplerKind::Random && r.succeeded())
        .cloned()
        .collect();
    let means = super::sweep::mean_errors_by_size(&randoms);
    let random_mean = (0..terms.len())
        .filter(|_| !randoms.is_empty())
        .map(|c| Series {
            label: "random mean".into(),
            coef_index: c,
            points: means
                .iter()
                .filter_map(|(size, m)| m.get(c).copied().flatten().map(|e| (*size as f64, e)))
                .collect(),
        })
        .collect();
    let centroids = clusters
        .iter()
        .map(|(c, s)| {
            let mut points = s.centroids.clone();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: "centroids".into(),
                coef_index: *c,
                points,
            }
        })
        .collect();
    PlotData {
        pde: pde.to_string(),
        terms: terms.to_vec(),
        greedy,
        random_mean,
        centroids,
    }
}
