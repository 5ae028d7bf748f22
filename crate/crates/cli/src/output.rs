//! JSON and CSV rendering of command results.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use ftbarrier::synth::{BetaChoice, SweepResult};
use serde::Serialize;

use crate::reproduce::{Cell, Table};
use crate::CheckOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

type CsvWriter = csv::Writer<Vec<u8>>;

pub struct Emitter {
    format: Format,
    out: Option<PathBuf>,
}

impl Emitter {
    pub fn new(format: Format, out: Option<PathBuf>) -> Self {
        Emitter { format, out }
    }

    /// A flat value: one JSON object, or a header plus one CSV row.
    pub fn record<T: Serialize>(&self, value: &T) -> Result<()> {
        self.json_or_table(value, |w| Ok(w.serialize(value)?))
    }

    pub fn json_or_table<T: Serialize>(
        &self,
        value: &T,
        table: impl FnOnce(&mut CsvWriter) -> Result<()>,
    ) -> Result<()> {
        let bytes = match self.format {
            Format::Json => {
                let mut s = serde_json::to_vec_pretty(value)?;
                s.push(b'\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                table(&mut w)?;
                w.into_inner().context("flushing CSV output")?
            }
        };
        match &self.out {
            Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
            None => Ok(std::io::stdout().lock().write_all(&bytes)?),
        }
    }
}

pub fn beta_label(b: &BetaChoice) -> String {
    match b {
        BetaChoice::Free => "free".into(),
        BetaChoice::Fixed(v) => v.to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn check_table(c: &CheckOutput) -> impl FnOnce(&mut CsvWriter) -> Result<()> + '_ {
    move |w| {
        w.write_record(["constraint", "verdict", "cells_explored", "bound"])?;
        let bound = opt(c.bound.as_ref().map(|b| b.clamped));
        for r in &c.check.constraints {
            let verdict = serde_json::to_value(&r.verdict)?;
            let verdict = verdict["verdict"].as_str().unwrap_or_default().to_string();
            w.write_record([r.name.clone(), verdict, r.cells_explored.to_string(), bound.clone()])?;
        }
        Ok(())
    }
}

pub fn sweep_table(s: &SweepResult) -> impl FnOnce(&mut CsvWriter) -> Result<()> + '_ {
    move |w| {
        w.write_record(["alpha", "beta", "degree", "bound", "error"])?;
        for a in &s.attempts {
            w.write_record([
                a.alpha.to_string(),
                beta_label(&a.beta),
                a.degree.to_string(),
                opt(a.bound),
                a.error.clone().unwrap_or_default(),
            ])?;
        }
        Ok(())
    }
}

pub fn reproduce_table<'a>(
    tables: &'a [Table],
    degrees: &'a [u32],
) -> impl FnOnce(&mut CsvWriter) -> Result<()> + 'a {
    move |w| {
        let mut header = vec!["example".to_string(), "condition".into(), "kind".into(), "alpha".into(), "beta".into()];
        header.extend(degrees.iter().map(|d| format!("d{d}")));
        w.write_record(&header)?;
        for t in tables {
            for r in &t.rows {
                let mut rec = vec![t.example.clone(), t.condition.clone(), r.kind.to_string(), r.alpha_label.clone(), r.beta.clone()];
                rec.extend(r.cells.iter().map(cell_text));
                w.write_record(&rec)?;
            }
            if let Some(mc) = &t.monte_carlo {
                let mut rec = vec![t.example.clone(), t.condition.clone(), "monte_carlo".into(), String::new(), String::new()];
                rec.extend(degrees.iter().map(|_| format!("{:.4}", mc.estimate)));
                w.write_record(&rec)?;
            }
        }
        Ok(())
    }
}

fn cell_text(c: &Cell) -> String {
    match c.bound {
        Some(b) => format!("{b:.4}"),
        None => c.status.clone(),
    }
}
