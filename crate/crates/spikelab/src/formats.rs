//! CSV and JSON files produced and consumed by the experiments.
//!
//! Floats are written in shortest round-trip form, so equal values give equal
//! bytes. Missing values are empty fields.

use std::io::{Read, Write};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use spikelab_core::measures::{Atom, AtomicMeasure, WeightedSpectralMeasure};
use spikelab_core::overlap::{LocalLawDiagnostic, OverlapProfile};

#[derive(Debug, Serialize, Deserialize)]
struct AtomRow {
    location: f64,
    weight: f64,
}

/// Columns `location, weight`.
pub fn write_atomic_measure<W: Write>(out: W, measure: &AtomicMeasure) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for a in measure.atoms() {
        w.serialize(AtomRow { location: a.location, weight: a.weight })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_atomic_measure<R: Read>(input: R) -> anyhow::Result<AtomicMeasure> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r
        .deserialize::<AtomRow>()
        .collect::<Result<Vec<_>, _>>()
        .context("reading atomic measure")?;
    Ok(AtomicMeasure::new(rows.into_iter().map(|a| (a.location, a.weight)))?)
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectralRow {
    index: usize,
    eigenvalue: f64,
    weight: f64,
}

/// Columns `index, eigenvalue, weight`, eigenvalues descending, index from 1.
pub fn write_spectral_measure<W: Write>(out: W, measure: &WeightedSpectralMeasure) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, (eigenvalue, weight)) in measure.iter().enumerate() {
        w.serialize(SpectralRow { index: i + 1, eigenvalue, weight })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectral_measure<R: Read>(input: R) -> anyhow::Result<WeightedSpectralMeasure> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize::<SpectralRow>().collect::<Result<Vec<_>, _>>()?;
    Ok(WeightedSpectralMeasure::new(
        rows.iter().map(|r| r.eigenvalue).collect(),
        rows.iter().map(|r| r.weight).collect(),
    )?)
}

/// Columns `x, density` over the grid, then a second header `location, mass`
/// followed by the atoms.
pub fn write_law<W: Write>(out: W, density: &[(f64, f64)], atoms: &[Atom]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["x", "density"])?;
    for (x, d) in density {
        w.write_record([format!("{x:?}"), format!("{d:?}")])?;
    }
    w.write_record(["location", "mass"])?;
    for a in atoms {
        w.write_record([format!("{:?}", a.location), format!("{:?}", a.weight)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ProfileRow {
    pub x: f64,
    pub count: usize,
    pub estimate: Option<f64>,
    pub theory: Option<f64>,
    pub abs_error: Option<f64>,
}

pub fn profile_rows(profile: &OverlapProfile) -> Vec<ProfileRow> {
    let errors = profile.abs_errors();
    (0..profile.grid.len())
        .map(|i| ProfileRow {
            x: profile.grid[i],
            count: profile.counts[i],
            estimate: profile.estimates[i],
            theory: profile.theory.as_ref().map(|t| t[i]).filter(|t| t.is_finite()),
            abs_error: errors[i],
        })
        .collect()
}

/// Columns `x, count, estimate, theory, abs_error`.
pub fn write_profile<W: Write>(out: W, profile: &OverlapProfile) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in profile_rows(profile) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile<R: Read>(input: R) -> anyhow::Result<Vec<ProfileRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize::<ProfileRow>().collect::<Result<Vec<_>, _>>()?)
}

#[derive(Debug, Serialize, Deserialize)]
struct DiagnosticRow {
    #[serde(rename = "E")]
    energy: f64,
    eta: f64,
    abs_shat: f64,
    psi: f64,
    ratio: f64,
}

/// Columns `E, eta, abs_shat, psi, ratio`.
pub fn write_diagnostic<W: Write>(out: W, diagnostic: &LocalLawDiagnostic) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &diagnostic.points {
        w.serialize(DiagnosticRow {
            energy: p.energy,
            eta: p.eta,
            abs_shat: p.abs_shat,
            psi: p.psi,
            ratio: p.ratio,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_measure_round_trip() {
        let mu = AtomicMeasure::new([(-1.0, 0.25), (0.5, 0.75)]).unwrap();
        let mut buf = Vec::new();
        write_atomic_measure(&mut buf, &mu).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "location,weight\n-1.0,0.25\n0.5,0.75\n");
        assert_eq!(read_atomic_measure(buf.as_slice()).unwrap(), mu);
    }

    #[test]
    fn spectral_measure_round_trip() {
        let mu = WeightedSpectralMeasure::new(vec![0.1, 2.0], vec![0.7, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_spectral_measure(&mut buf, &mu).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("index,eigenvalue,weight\n1,2.0,0.3\n"));
        assert_eq!(read_spectral_measure(buf.as_slice()).unwrap(), mu);
    }

    #[test]
    fn law_has_two_blocks() {
        let mut buf = Vec::new();
        write_law(&mut buf, &[(0.0, 0.5)], &[Atom { location: 2.5, weight: 0.75 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,density\n0.0,0.5\nlocation,mass\n2.5,0.75\n");
    }

    #[test]
    fn profile_absent_estimates_are_empty() {
        let mu = WeightedSpectralMeasure::new(vec![0.0], vec![1.0]).unwrap();
        let p = spikelab_core::overlap::windowed_profile(&mu, &[0.0, 5.0], 0.1)
            .unwrap()
            .with_theory(|_| 1.0);
        let mut buf = Vec::new();
        write_profile(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "x,count,estimate,theory,abs_error\n0.0,1,1.0,1.0,0.0\n5.0,0,,1.0,\n");
        let rows = read_profile(buf.as_slice()).unwrap();
        assert_eq!(rows[1].estimate, None);
    }
}
