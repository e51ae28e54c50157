//! XYZ and extended-XYZ text.
//!
//! A frame is an atom-count line, a comment line, and one `symbol x y z` row
//! per atom (extra columns are ignored). Trajectories are concatenated
//! frames. Two comment keys are recognized: `energy=<eV>` and
//! `time_fs=<fs>`; whatever else is on the comment line becomes the label.
//!
//! The writer emits the canonical form: keys first (`energy`, then
//! `time_fs`), then the label, and coordinates rounded to nine significant
//! digits.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::geom::{Structure, Trajectory, Vec3};

/// Parses a single-frame XYZ file.
pub fn parse_xyz(text: &str) -> Result<Structure> {
    let mut frames = parse_frames(text)?;
    match frames.len() {
        1 => Ok(frames.remove(0)),
        0 => Err(Error::Parse { line: 1, message: "no frame found".into() }),
        n => Err(Error::Parse { line: 1, message: format!("expected one frame, found {n}") }),
    }
}

/// Parses concatenated frames. The timestep is taken from the `time_fs`
/// keys of the first two frames when present, otherwise 1 fs.
pub fn parse_traj(text: &str) -> Result<Trajectory> {
    let frames = parse_frames(text)?;
    let timestep = match (frames.first().and_then(|f| f.time_fs), frames.get(1).and_then(|f| f.time_fs)) {
        (Some(a), Some(b)) if b > a => b - a,
        _ => 1.0,
    };
    Trajectory::new(frames, timestep)
}

pub fn parse_frames(text: &str) -> Result<Vec<Structure>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut frames = Vec::new();
    let mut i = 0;
    loop {
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        if i >= lines.len() {
            break;
        }
        let count_line = i + 1;
        let n: usize = lines[i].trim().parse().map_err(|_| Error::Parse {
            line: count_line,
            message: format!("expected an atom count, found `{}`", lines[i].trim()),
        })?;
        if n == 0 {
            return Err(Error::Parse { line: count_line, message: "atom count is zero".into() });
        }
        let comment = lines.get(i + 1).ok_or(Error::Parse {
            line: count_line + 1,
            message: "missing comment line".into(),
        })?;
        let mut elements = Vec::with_capacity(n);
        let mut positions = Vec::with_capacity(n);
        for k in 0..n {
            let line_no = count_line + 2 + k;
            let row = lines.get(i + 2 + k).filter(|l| !l.trim().is_empty()).ok_or_else(|| {
                Error::Parse {
                    line: line_no,
                    message: format!("expected atom row {} of {n}, found end of frame", k + 1),
                }
            })?;
            let (e, p) = parse_row(row, line_no)?;
            elements.push(e);
            positions.push(p);
        }
        let mut s = Structure::new(elements, positions).map_err(|e| Error::Parse {
            line: count_line,
            message: e.to_string(),
        })?;
        parse_comment(comment, count_line + 1, &mut s)?;
        frames.push(s);
        i += 2 + n;
    }
    Ok(frames)
}

fn parse_row(row: &str, line: usize) -> Result<(Element, Vec3)> {
    let mut fields = row.split_whitespace();
    let symbol = fields.next().unwrap_or_default();
    let element = Element::from_symbol(symbol).ok_or_else(|| Error::Parse {
        line,
        message: format!("unknown element `{symbol}`"),
    })?;
    let mut xyz = [0.0; 3];
    for (axis, slot) in ["x", "y", "z"].iter().zip(xyz.iter_mut()) {
        let field = fields.next().ok_or_else(|| Error::Parse {
            line,
            message: format!("missing {axis} coordinate"),
        })?;
        *slot = parse_float(field, line)?;
    }
    Ok((element, Vec3::from(xyz)))
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, message: format!("malformed number `{field}`") }),
    }
}

fn parse_comment(comment: &str, line: usize, s: &mut Structure) -> Result<()> {
    let mut label = Vec::new();
    for token in comment.split_whitespace() {
        match token.split_once('=') {
            Some(("energy", v)) => s.energy = Some(parse_float(v, line)?),
            Some(("time_fs", v)) => s.time_fs = Some(parse_float(v, line)?),
            _ => label.push(token),
        }
    }
    s.label = (!label.is_empty()).then(|| label.join(" "));
    Ok(())
}

/// Value rounded to nine significant digits, printed in its shortest form.
pub fn format_coordinate(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("round-trips through text");
    if rounded == 0.0 {
        return "0".to_string();
    }
    format!("{rounded}")
}

pub fn write_xyz(s: &Structure) -> String {
    let mut out = String::new();
    write_frame(&mut out, s);
    out
}

pub fn write_traj(traj: &Trajectory) -> String {
    let mut out = String::new();
    for f in traj.frames() {
        write_frame(&mut out, f);
    }
    out
}

/// Writes several unrelated structures as one multi-frame file.
pub fn write_frames<'a>(frames: impl IntoIterator<Item = &'a Structure>) -> String {
    let mut out = String::new();
    for f in frames {
        write_frame(&mut out, f);
    }
    out
}

fn write_frame(out: &mut String, s: &Structure) {
    use std::fmt::Write;
    let mut comment = Vec::new();
    if let Some(e) = s.energy {
        comment.push(format!("energy={}", format_coordinate(e)));
    }
    if let Some(t) = s.time_fs {
        comment.push(format!("time_fs={}", format_coordinate(t)));
    }
    if let Some(l) = &s.label {
        comment.push(l.clone());
    }
    let _ = writeln!(out, "{}", s.len());
    let _ = writeln!(out, "{}", comment.join(" "));
    for (e, p) in s.atoms() {
        let _ = writeln!(
            out,
            "{:<2} {:>16} {:>16} {:>16}",
            e.symbol(),
            format_coordinate(p.x),
            format_coordinate(p.y),
            format_coordinate(p.z)
        );
    }
}
