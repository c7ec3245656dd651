//! JSON documents and CSV tables written by the subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use muskat_core::evolution::DecayReport;
use muskat_core::io::{self, Field};
use muskat_core::linear::{LinearData, LinearSolution};
use muskat_core::wave::TravelingWaveSolution;
use muskat_core::{StripField, SurfaceField};

use crate::CliError;

pub const LINEAR_DATA_KIND: &str = "linear_data";

pub fn surface_value(f: &SurfaceField) -> Value {
    io::field_to_value(&Field::Surface(f.clone()))
}

pub fn strip_value(f: &StripField) -> Value {
    io::field_to_value(&Field::Strip(f.clone()))
}

/// One row per record, floats as `{:.16e}` (17 significant digits).
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<CsvCell>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(CsvCell::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub enum CsvCell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl CsvCell {
    fn render(&self) -> String {
        match self {
            CsvCell::Int(i) => i.to_string(),
            CsvCell::Float(x) => format!("{x:.16e}"),
            CsvCell::Text(s) => s.clone(),
        }
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    write_text(dir, name, &text)
}

pub fn traveling_wave_value(sol: &TravelingWaveSolution, gamma: f64, s: f64) -> Value {
    json!({
        "gamma": gamma,
        "s": s,
        "iterations": sol.history.len(),
        "contraction_estimate": sol.contraction_estimate,
        "fixed_point_residual": sol.fixed_point_residual,
        "steady_residual": sol.steady_residual,
        "history": sol.history,
        "eta_star": surface_value(&sol.eta_star),
    })
}

pub fn history_csv(sol: &TravelingWaveSolution) -> String {
    csv_table(
        &["iteration", "iterate_norm", "step_norm"],
        sol.history.iter().enumerate().map(|(k, h)| {
            vec![
                CsvCell::Int(k as i64 + 1),
                CsvCell::Float(h.iterate_norm),
                CsvCell::Float(h.step_norm),
            ]
        }),
    )
}

pub fn decay_value(rep: &DecayReport, dn_sweeps: usize) -> Value {
    let mut v = serde_json::to_value(rep).expect("plain data serializes");
    v["dn_sweeps"] = dn_sweeps.into();
    if let Some(f) = &rep.final_state {
        v["final_state"] = surface_value(f);
    }
    v
}

pub fn decay_csv(rep: &DecayReport) -> String {
    csv_table(
        &["t", "hs_norm", "hs_half_sq_accum"],
        rep.times
            .iter()
            .zip(&rep.hs_norms)
            .zip(&rep.hs_half_l2_accum)
            .map(|((t, n), a)| vec![CsvCell::Float(*t), CsvCell::Float(*n), CsvCell::Float(*a)]),
    )
}

pub fn linear_data_value(data: &LinearData) -> Value {
    json!({
        "version": io::FORMAT_VERSION,
        "kind": LINEAR_DATA_KIND,
        "f_vec": data.f_vec.iter().map(strip_value).collect::<Vec<_>>(),
        "g": strip_value(&data.g),
        "h": surface_value(&data.h),
        "k": surface_value(&data.k),
    })
}

pub fn linear_data_from_value(mut v: Value) -> Result<LinearData, muskat_core::Error> {
    use muskat_core::Error;
    let version = v.get("version").and_then(Value::as_u64);
    if version != Some(io::FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found: version.unwrap_or(0),
            expected: io::FORMAT_VERSION,
        });
    }
    if v.get("kind").and_then(Value::as_str) != Some(LINEAR_DATA_KIND) {
        return Err(Error::Format(format!("expected kind `{LINEAR_DATA_KIND}`")));
    }
    let mut take = |k: &str| {
        v.get_mut(k)
            .map(Value::take)
            .ok_or_else(|| Error::Format(format!("missing key `{k}`")))
    };
    let f_vec = match take("f_vec")? {
        Value::Array(items) => items
            .into_iter()
            .map(io::strip_from_value)
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(Error::Format("`f_vec` must be an array".into())),
    };
    Ok(LinearData {
        f_vec,
        g: io::strip_from_value(take("g")?)?,
        h: io::surface_from_value(take("h")?)?,
        k: io::surface_from_value(take("k")?)?,
    })
}

pub fn linear_solution_value(sol: &LinearSolution, gamma: f64) -> Value {
    json!({
        "gamma": gamma,
        "residuals": sol.residuals,
        "u": sol.u.iter().map(strip_value).collect::<Vec<_>>(),
        "p": strip_value(&sol.p),
        "eta": surface_value(&sol.eta),
    })
}

pub fn residuals_csv(sol: &LinearSolution) -> String {
    let r = &sol.residuals;
    csv_table(
        &["equation", "residual"],
        [
            ("momentum", r.momentum),
            ("divergence", r.divergence),
            ("top_kinematic", r.top_kinematic),
            ("top_dirichlet", r.top_dirichlet),
            ("bottom_normal", r.bottom_normal),
            ("compatibility", r.compatibility),
        ]
        .into_iter()
        .map(|(n, x)| vec![CsvCell::Text(n.into()), CsvCell::Float(x)]),
    )
}

pub fn dyadic_csv(table: &[(usize, f64, f64)]) -> String {
    csv_table(
        &["j", "block_norm", "cumulative"],
        table
            .iter()
            .map(|(j, b, c)| vec![CsvCell::Int(*j as i64), CsvCell::Float(*b), CsvCell::Float(*c)]),
    )
}

pub fn steps_csv(steps: &[f64]) -> String {
    let mut out = String::from("sweep,step_norm\n");
    for (k, s) in steps.iter().enumerate() {
        let _ = writeln!(out, "{},{s:.16e}", k + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use muskat_core::DomainSpec;

    #[test]
    fn csv_uses_seventeen_digits() {
        let t = csv_table(&["a", "b"], [vec![CsvCell::Int(3), CsvCell::Float(0.1)]]);
        assert_eq!(t, "a,b\n3,1.0000000000000001e-1\n");
    }

    #[test]
    fn linear_data_round_trip() {
        let s = DomainSpec::new(1, 8, 9, 1.0).unwrap();
        let mut d = LinearData::zeros(s);
        d.h = SurfaceField::cosine(s, &[1], 0.3).unwrap();
        d.f_vec[1] = StripField::from_fn(s, |x, z| x[0].sin() * z);
        let back = linear_data_from_value(linear_data_value(&d)).unwrap();
        assert_eq!(back.h, d.h);
        assert_eq!(back.f_vec[1], d.f_vec[1]);

        let mut v = linear_data_value(&d);
        v["version"] = 0.into();
        assert!(matches!(
            linear_data_from_value(v),
            Err(muskat_core::Error::VersionMismatch { .. })
        ));
    }
}
