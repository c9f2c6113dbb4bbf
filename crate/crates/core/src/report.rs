//! Run metrics, repeat aggregation and CSV output.
//!
//! All CSV files are UTF-8 with a header row and `.` as decimal separator.
//! Unbounded energies are written as the literal `inf`. Floats use the
//! shortest representation that parses back to the same value, so every
//! emitted file round-trips exactly.

use crate::link_model::{energy_per_byte, rx_bytes, EnergyPerByte, LinkError, RadioModel};
use crate::sim::{dedupe_unique, PeriodRecord, Scenario};
use std::collections::BTreeMap;
use std::io;

/// Shortest round-trip text for `v`, switching to exponent form far from 1.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub const CURVE_HEADER: [&str; 4] = ["distance_m", "radio_id", "rx_fraction", "energy_per_byte_uJ"];
pub const TABLE_HEADER: [&str; 6] = ["scenario", "setup", "metric", "mean", "stddev", "unbounded_count"];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot aggregate an empty list of runs")]
    Empty,
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },
}

/// Which message counts a run table reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// Deduplicated across radios.
    #[default]
    Unique,
    /// Per-radio counts, duplicates included.
    Raw,
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub duration_s: f64,
    pub bytes_per_message: usize,
    pub generated_messages: u64,
    pub unique_messages: u64,
    pub unique_bytes: u64,
    pub raw_messages_per_radio: BTreeMap<String, u64>,
    pub energy_uj_per_radio: BTreeMap<String, f64>,
    pub energy_per_unique_byte: EnergyPerByte,
    pub goodput_bps: f64,
}

impl RunMetrics {
    pub fn from_records(records: &[PeriodRecord], scenario: &Scenario) -> Self {
        let wisp = scenario.wisp_model.id.clone();
        let ble = scenario.ble_model.id.clone();
        let unique = dedupe_unique(records, scenario.payload_bytes_per_frame);

        let mut raw = BTreeMap::from([(wisp.clone(), 0u64), (ble.clone(), 0u64)]);
        let mut energy = BTreeMap::from([(wisp.clone(), 0.0f64), (ble.clone(), 0.0f64)]);
        for r in records {
            *raw.get_mut(&wisp).unwrap() += r.wisp_message_ids.len() as u64;
            *raw.get_mut(&ble).unwrap() += r.ble_message_ids.len() as u64;
            *energy.get_mut(&wisp).unwrap() += r.wisp_energy_uj + r.wisp_idle_energy_uj;
            *energy.get_mut(&ble).unwrap() += r.ble_energy_uj + r.ble_idle_energy_uj;
        }
        let total: f64 = energy.values().sum();
        let duration_s = scenario.duration_s();
        Self {
            duration_s,
            bytes_per_message: scenario.payload_bytes_per_frame,
            generated_messages: scenario.generated_messages(),
            unique_messages: unique.messages,
            unique_bytes: unique.bytes,
            raw_messages_per_radio: raw,
            energy_uj_per_radio: energy,
            energy_per_unique_byte: EnergyPerByte::from_ratio(total, unique.bytes as f64),
            goodput_bps: unique.bytes as f64 / duration_s,
        }
    }

    pub fn total_energy_uj(&self) -> f64 {
        self.energy_uj_per_radio.values().sum()
    }

    /// Named metric values; `None` marks an unbounded value.
    pub fn fields(&self, mode: CountMode) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::new();
        match mode {
            CountMode::Unique => {
                out.push(("unique_messages".to_string(), Some(self.unique_messages as f64)));
                out.push(("unique_bytes".to_string(), Some(self.unique_bytes as f64)));
                out.push(("goodput_Bps".to_string(), Some(self.goodput_bps)));
                out.push((
                    "energy_per_unique_byte_uJ".to_string(),
                    self.energy_per_unique_byte.finite(),
                ));
            }
            CountMode::Raw => {
                let mut raw_total = 0;
                for (radio, n) in &self.raw_messages_per_radio {
                    out.push((format!("raw_messages_{radio}"), Some(*n as f64)));
                    raw_total += n;
                }
                let raw_bytes = (raw_total * self.bytes_per_message as u64) as f64;
                out.push((
                    "energy_per_raw_byte_uJ".to_string(),
                    EnergyPerByte::from_ratio(self.total_energy_uj(), raw_bytes).finite(),
                ));
            }
        }
        for (radio, e) in &self.energy_uj_per_radio {
            out.push((format!("energy_{radio}_uJ"), Some(*e)));
        }
        out.push(("energy_total_uJ".to_string(), Some(self.total_energy_uj())));
        out
    }
}

/// Mean and spread of one metric over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStat {
    pub metric: String,
    /// Mean over bounded values; `None` when every value was unbounded.
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` with fewer than two bounded values.
    pub stddev: Option<f64>,
    pub unbounded_count: usize,
}

/// Per-metric statistics over a list of runs.
pub fn aggregate(runs: &[RunMetrics], mode: CountMode) -> Result<Vec<FieldStat>, ReportError> {
    let first = runs.first().ok_or(ReportError::Empty)?;
    let names: Vec<String> = first.fields(mode).into_iter().map(|(n, _)| n).collect();
    let columns: Vec<Vec<(String, Option<f64>)>> = runs.iter().map(|r| r.fields(mode)).collect();

    Ok(names
        .into_iter()
        .enumerate()
        .map(|(i, metric)| {
            let values: Vec<Option<f64>> = columns.iter().map(|c| c[i].1).collect();
            summarize(metric, &values)
        })
        .collect())
}

fn summarize(metric: String, values: &[Option<f64>]) -> FieldStat {
    let finite: Vec<f64> = values.iter().flatten().copied().collect();
    let unbounded_count = values.len() - finite.len();
    let n = finite.len();
    let mean = (n > 0).then(|| finite.iter().sum::<f64>() / n as f64);
    let stddev = match mean {
        Some(m) if n >= 2 => {
            let ss: f64 = finite.iter().map(|v| (v - m) * (v - m)).sum();
            Some((ss / (n - 1) as f64).sqrt())
        }
        _ => None,
    };
    FieldStat {
        metric,
        mean,
        stddev,
        unbounded_count,
    }
}

/// One line of a curve file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub distance_m: f64,
    pub radio_id: String,
    pub rx_fraction: f64,
    pub energy_per_byte: EnergyPerByte,
}

/// Energy-per-byte curve rows, grouped by distance then model order.
pub fn emit_curve(models: &[RadioModel], grid: &[f64]) -> Result<Vec<CurveRow>, ReportError> {
    let mut rows = Vec::with_capacity(models.len() * grid.len());
    for &d in grid {
        for m in models {
            rows.push(CurveRow {
                distance_m: d,
                radio_id: m.id.clone(),
                rx_fraction: rx_bytes(m, d)?,
                energy_per_byte: energy_per_byte(m, d)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_curve_csv<W: io::Write>(rows: &[CurveRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            format_f64(r.distance_m),
            r.radio_id.clone(),
            format_f64(r.rx_fraction),
            r.energy_per_byte.finite().map_or_else(|| "inf".to_string(), format_f64),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn check_header(rdr: &mut csv::Reader<impl io::Read>, expected: &[&str]) -> Result<(), ReportError> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(ReportError::Parse {
            row: 0,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    Ok(())
}

fn parse_f64(row: usize, column: &str, s: &str) -> Result<f64, ReportError> {
    s.parse().map_err(|_| ReportError::Parse {
        row,
        reason: format!("{column}: invalid number `{s}`"),
    })
}

pub fn parse_curve_csv<R: io::Read>(input: R) -> Result<Vec<CurveRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &CURVE_HEADER)?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let row = i + 1;
            Ok(CurveRow {
                distance_m: parse_f64(row, "distance_m", &rec[0])?,
                radio_id: rec[1].to_string(),
                rx_fraction: parse_f64(row, "rx_fraction", &rec[2])?,
                energy_per_byte: EnergyPerByte::parse(&rec[3]).ok_or_else(|| ReportError::Parse {
                    row,
                    reason: format!("energy_per_byte_uJ: invalid value `{}`", &rec[3]),
                })?,
            })
        })
        .collect()
}

/// One line of a run table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub scenario: String,
    pub setup: String,
    pub stat: FieldStat,
}

/// Rows for one (scenario, setup) group.
pub fn emit_run_table(scenario: &str, setup: &str, stats: &[FieldStat]) -> Vec<TableRow> {
    stats
        .iter()
        .map(|s| TableRow {
            scenario: scenario.to_string(),
            setup: setup.to_string(),
            stat: s.clone(),
        })
        .collect()
}

pub fn write_table_csv<W: io::Write>(rows: &[TableRow], out: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.setup.clone(),
            r.stat.metric.clone(),
            r.stat.mean.map_or_else(|| "inf".to_string(), format_f64),
            r.stat.stddev.map(format_f64).unwrap_or_default(),
            r.stat.unbounded_count.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn parse_table_csv<R: io::Read>(input: R) -> Result<Vec<TableRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &TABLE_HEADER)?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let row = i + 1;
            let mean = match &rec[3] {
                "inf" => None,
                s => Some(parse_f64(row, "mean", s)?),
            };
            let stddev = match &rec[4] {
                "" => None,
                s => Some(parse_f64(row, "stddev", s)?),
            };
            let unbounded_count = rec[5].parse().map_err(|_| ReportError::Parse {
                row,
                reason: format!("unbounded_count: invalid count `{}`", &rec[5]),
            })?;
            Ok(TableRow {
                scenario: rec[0].to_string(),
                setup: rec[1].to_string(),
                stat: FieldStat {
                    metric: rec[2].to_string(),
                    mean,
                    stddev,
                    unbounded_count,
                },
            })
        })
        .collect()
}

/// Header of the per-period log.
pub const LOG_HEADER: [&str; 17] = [
    "scenario",
    "setup",
    "repeat",
    "t",
    "distance_m",
    "wisp_tx",
    "ble_tx",
    "frames",
    "rn16_delivered",
    "acks",
    "epc_delivered",
    "ble_delivered",
    "wisp_energy_uJ",
    "ble_energy_uJ",
    "idle_energy_uJ",
    "wisp_message_ids",
    "ble_message_ids",
];

/// Streams per-period records as CSV. Message ids are `;`-separated.
pub struct PeriodLogWriter<W: io::Write> {
    inner: csv::Writer<W>,
}

impl<W: io::Write> PeriodLogWriter<W> {
    pub fn new(out: W) -> Result<Self, ReportError> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(LOG_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(
        &mut self,
        scenario: &str,
        setup: &str,
        repeat: u32,
        records: &[PeriodRecord],
    ) -> Result<(), ReportError> {
        let join = |ids: &[u64]| ids.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
        for r in records {
            let count = |f: fn(&crate::protocol::FrameOutcome) -> bool| {
                r.outcomes.iter().filter(|o| f(o)).count().to_string()
            };
            self.inner.write_record([
                scenario.to_string(),
                setup.to_string(),
                repeat.to_string(),
                r.t.to_string(),
                format_f64(r.distance_m),
                r.decision.wisp_tx.to_string(),
                r.decision.ble_tx.to_string(),
                r.outcomes.len().to_string(),
                count(|o| o.rn16_delivered),
                count(|o| o.ack_received),
                count(|o| o.epc_delivered),
                r.ble_delivered.iter().filter(|&&b| b).count().to_string(),
                format_f64(r.wisp_energy_uj),
                format_f64(r.ble_energy_uj),
                format_f64(r.wisp_idle_energy_uj + r.ble_idle_energy_uj),
                join(&r.wisp_message_ids),
                join(&r.ble_message_ids),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, ReportError> {
        self.inner.flush().map_err(csv::Error::from)?;
        self.inner
            .into_inner()
            .map_err(|e| ReportError::Csv(csv::Error::from(e.into_error())))
    }
}
