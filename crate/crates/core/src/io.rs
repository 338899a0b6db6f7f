//! File formats of the external interfaces: matrix and structure JSON,
//! length-spectrum JSONL/CSV, sampled-function CSV, and the wave-trace
//! sidecar. All floats are printed with a fixed 15 significant digits so
//! outputs are byte-identical across runs and platforms.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::MoebiusElement;
use crate::orbifold::{HyperbolicStructure, OrbifoldSignature};
use crate::psi::{SampleVariable, SampledFunction};
use crate::spectrum::LengthSpectrum;
use crate::wave::{MollifiedTrace, TimeGrid, TraceParts};

/// Fixed 15-significant-digit float formatting.
pub fn fmt_g15(x: f64) -> String {
    format!("{x:.14e}")
}

/// Structure document: a signature, optionally with generator matrices.
/// Matrix literals are {"a":..,"b":..,"c":..,"d":..}, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureDoc {
    pub genus: u32,
    pub cone_orders: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<RawMatrix>>,
}

/// Raw matrix entries as found on disk, before renormalization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RawMatrix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<MoebiusElement> for RawMatrix {
    fn from(m: MoebiusElement) -> Self {
        RawMatrix {
            a: m.a,
            b: m.b,
            c: m.c,
            d: m.d,
        }
    }
}

impl RawMatrix {
    pub fn validate(&self) -> Result<MoebiusElement> {
        MoebiusElement::new(self.a, self.b, self.c, self.d)
    }
}

impl StructureDoc {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_structure(&self) -> Result<HyperbolicStructure> {
        let signature = OrbifoldSignature::new(self.genus, self.cone_orders.clone())?;
        let generators = match &self.generators {
            Some(raw) => Some(
                raw.iter()
                    .map(RawMatrix::validate)
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        HyperbolicStructure::new(signature, generators)
    }

    pub fn from_structure(structure: &HyperbolicStructure) -> Self {
        StructureDoc {
            genus: structure.signature.genus,
            cone_orders: structure.signature.cone_orders.clone(),
            generators: structure
                .generators
                .as_ref()
                .map(|gens| gens.iter().map(|&g| RawMatrix::from(g)).collect()),
        }
    }
}

/// One spectrum line: {"length":..,"multiplicity":..,"word":"..","primitive":true}.
pub fn write_spectrum_jsonl(spectrum: &LengthSpectrum, mut out: impl Write) -> Result<()> {
    for entry in &spectrum.entries {
        let word = entry.word.as_deref().unwrap_or("");
        writeln!(
            out,
            "{{\"length\":{},\"multiplicity\":{},\"word\":\"{}\",\"primitive\":true}}",
            fmt_g15(entry.length),
            entry.multiplicity,
            word
        )?;
    }
    Ok(())
}

/// CSV export with the JSONL columns.
pub fn write_spectrum_csv(spectrum: &LengthSpectrum, mut out: impl Write) -> Result<()> {
    writeln!(out, "length,multiplicity,word,primitive")?;
    for entry in &spectrum.entries {
        writeln!(
            out,
            "{},{},{},true",
            fmt_g15(entry.length),
            entry.multiplicity,
            entry.word.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

/// Two-column CSV, header naming the variable ("r,value" or "t,value").
pub fn write_sampled_csv(samples: &SampledFunction, mut out: impl Write) -> Result<()> {
    writeln!(out, "{},value", samples.variable.label())?;
    for (i, value) in samples.values.iter().enumerate() {
        writeln!(out, "{},{}", fmt_g15(samples.grid_point(i)), fmt_g15(*value))?;
    }
    Ok(())
}

pub fn read_sampled_csv(reader: impl BufRead) -> Result<SampledFunction> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidSamples("empty file".into()))??;
    let variable = match header.split(',').next().map(str::trim) {
        Some("r") => SampleVariable::R,
        Some("t") => SampleVariable::T,
        other => {
            return Err(Error::InvalidSamples(format!(
                "header must name the variable r or t, got {other:?}"
            )))
        }
    };
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(x), Some(v)) = (fields.next(), fields.next()) else {
            return Err(Error::InvalidSamples(format!("short row: {line}")));
        };
        grid.push(parse_float(x)?);
        values.push(parse_float(v)?);
    }
    if grid.len() < 2 {
        return Err(Error::InvalidSamples("need at least two samples".into()));
    }
    let start = grid[0];
    let step = grid[1] - grid[0];
    let scale = grid.last().unwrap().abs().max(1.0);
    for (i, &x) in grid.iter().enumerate() {
        if (x - (start + step * i as f64)).abs() > 1e-9 * scale {
            return Err(Error::InvalidSamples(format!(
                "grid is not uniform at row {i}: {x}"
            )));
        }
    }
    SampledFunction::new(variable, start, step, values)
}

fn parse_float(text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidSamples(format!("bad float {text:?}: {e}")))
}

/// Sidecar for a stored mollified trace: {"sigma":..,"area":..,"parts":..}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub sigma: f64,
    pub area: f64,
    pub parts: TraceParts,
}

/// Writes a trace as samples CSV plus sidecar JSON.
pub fn write_trace(
    trace: &MollifiedTrace,
    area: f64,
    csv_out: impl Write,
    mut sidecar_out: impl Write,
) -> Result<()> {
    let samples = SampledFunction::new(
        SampleVariable::T,
        trace.grid.start,
        trace.grid.step,
        trace.values.clone(),
    )?;
    write_sampled_csv(&samples, csv_out)?;
    writeln!(
        sidecar_out,
        "{{\"sigma\":{},\"area\":{},\"parts\":{}}}",
        fmt_g15(trace.sigma),
        fmt_g15(area),
        serde_json::to_string(&trace.parts)?
    )?;
    Ok(())
}

/// Reads a trace back from samples CSV plus sidecar JSON.
pub fn read_trace(csv_in: impl BufRead, sidecar_text: &str) -> Result<(MollifiedTrace, f64)> {
    let samples = read_sampled_csv(csv_in)?;
    if samples.variable != SampleVariable::T {
        return Err(Error::InvalidSamples(
            "trace samples must be tabulated in t".into(),
        ));
    }
    let sidecar: TraceSidecar = serde_json::from_str(sidecar_text)?;
    let grid = TimeGrid {
        start: samples.start,
        step: samples.step,
        samples: samples.values.len(),
    };
    Ok((
        MollifiedTrace {
            sigma: sidecar.sigma,
            grid,
            values: samples.values,
            parts: sidecar.parts,
        },
        sidecar.area,
    ))
}
