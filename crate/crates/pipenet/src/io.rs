//! Plain-text interchange: CSV for states, spectra, and trajectories,
//! JSON for parameter sets and analysis summaries.
//!
//! Every writer emits `\n` line endings and prints floats with
//! `{:.16e}`, so a given input produces byte-identical output across
//! runs and platforms.  Callers may pass comment lines (written as
//! `# ...` before the header row); the CLI uses them to embed the full
//! job configuration in every file it writes.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{DecayFit, GramReport};
use crate::error::{Error, Result};
use crate::fem::Trajectory;
use crate::model::{EdgeGrid, NetworkState, Params};
use crate::spectral::EigenRecord;

fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Writes a state as `edge,s,Re(w),Im(w),Re(v),Im(v)` rows, edges in
/// order, arclength ascending within each edge.
pub fn write_state_csv<W: Write>(
    out: &mut W,
    state: &NetworkState,
    comments: &[String],
) -> Result<()> {
    write_comments(out, comments)?;
    writeln!(out, "edge,s,Re(w),Im(w),Re(v),Im(v)")?;
    for edge in 0..3 {
        for (i, &s) in state.grid.nodes.iter().enumerate() {
            let w = state.w[edge][i];
            let v = state.v[edge][i];
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                edge + 1,
                s,
                w.re,
                w.im,
                v.re,
                v.im
            )?;
        }
    }
    Ok(())
}

/// Reads a state written by [`write_state_csv`]; comment lines are
/// skipped, the node set must match a uniform grid, and the assembled
/// state must satisfy the vertex conditions.
pub fn read_state_csv<R: BufRead>(input: R) -> Result<NetworkState> {
    let mut rows: Vec<(usize, f64, Complex64, Complex64)> = Vec::new();
    let mut saw_header = false;
    for (line_no, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            if trimmed != "edge,s,Re(w),Im(w),Re(v),Im(v)" {
                return Err(Error::CsvFormat {
                    line: line_no,
                    message: format!("unexpected header {trimmed:?}"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::CsvFormat {
                line: line_no,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let parse = |field: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|e| Error::CsvFormat {
                line: line_no,
                message: format!("bad number {field:?}: {e}"),
            })
        };
        let edge = fields[0].parse::<usize>().map_err(|e| Error::CsvFormat {
            line: line_no,
            message: format!("bad edge index {:?}: {e}", fields[0]),
        })?;
        if !(1..=3).contains(&edge) {
            return Err(Error::CsvFormat {
                line: line_no,
                message: format!("edge index {edge} out of range"),
            });
        }
        rows.push((
            edge - 1,
            parse(fields[1])?,
            Complex64::new(parse(fields[2])?, parse(fields[3])?),
            Complex64::new(parse(fields[4])?, parse(fields[5])?),
        ));
    }
    let n_points = rows.iter().filter(|r| r.0 == 0).count();
    if n_points == 0 || rows.len() != 3 * n_points {
        return Err(Error::CsvFormat {
            line: 0,
            message: format!("expected three edges of equal length, got {} rows", rows.len()),
        });
    }
    let grid = EdgeGrid::new(n_points)?;
    let mut w: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::ZERO; n_points]);
    let mut v = w.clone();
    let mut cursor = [0usize; 3];
    for (edge, s, wv, vv) in rows {
        let i = cursor[edge];
        if i >= n_points {
            return Err(Error::CsvFormat {
                line: 0,
                message: format!("edge {} has more rows than edge 1", edge + 1),
            });
        }
        if (s - grid.nodes[i]).abs() > 1e-9 {
            return Err(Error::CsvFormat {
                line: 0,
                message: format!("node {s} of edge {} is off the uniform grid", edge + 1),
            });
        }
        w[edge][i] = wv;
        v[edge][i] = vv;
        cursor[edge] += 1;
    }
    NetworkState::new(grid, w, v)
}

/// Writes eigenvalue records as
/// `index,branch,Re(lambda),Im(lambda),residual,multiplicity,abs_B` rows.
pub fn write_spectrum_csv<W: Write>(
    out: &mut W,
    records: &[EigenRecord],
    comments: &[String],
) -> Result<()> {
    write_comments(out, comments)?;
    writeln!(out, "index,branch,Re(lambda),Im(lambda),residual,multiplicity,abs_B")?;
    for r in records {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.index,
            r.branch.tag(),
            r.lambda.re,
            r.lambda.im,
            r.residual,
            r.multiplicity(),
            r.bform.norm()
        )?;
    }
    Ok(())
}

/// Writes the per-step series of a trajectory as
/// `t,E,Re(w_vertex),v1p0,v2p0,v3p0` rows.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    comments: &[String],
) -> Result<()> {
    write_comments(out, comments)?;
    writeln!(out, "t,E,Re(w_vertex),v1p0,v2p0,v3p0")?;
    for i in 0..traj.times.len() {
        let obs = traj.boundary_obs[i];
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            traj.times[i],
            traj.energy[i],
            traj.vertex[i],
            obs[0],
            obs[1],
            obs[2]
        )?;
    }
    Ok(())
}

/// Summary written by decay jobs: the fitted rate against the spectral
/// abscissa, plus the Gram conditioning of the eigenfunction family.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub abscissa: f64,
    pub decay_rate: f64,
    /// `|decay_rate - abscissa| / |abscissa|`.
    pub relative_gap: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub gram: GramSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct GramSummary {
    pub size: usize,
    pub condition_number: f64,
    pub min_eigenvalue: f64,
}

impl AnalysisReport {
    pub fn new(abscissa: f64, fit: &DecayFit, gram: &GramReport) -> Self {
        let relative_gap = (fit.rate - abscissa).abs() / abscissa.abs().max(f64::MIN_POSITIVE);
        Self {
            abscissa,
            decay_rate: fit.rate,
            relative_gap,
            window: fit.window,
            r_squared: fit.r_squared,
            gram: GramSummary {
                size: gram.size,
                condition_number: gram.condition_number,
                min_eigenvalue: gram.min_eigenvalue,
            },
        }
    }
}

/// Serializes any report as pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Reads a parameter set from JSON and validates it.
pub fn read_params_json<R: BufRead>(input: R) -> Result<Params> {
    let params: Params = serde_json::from_reader(input)?;
    params.validated()
}
