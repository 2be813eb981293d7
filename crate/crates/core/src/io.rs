//! Plain-text readers and writers for rotations and directions.
//!
//! One record per line, whitespace-separated. Blank lines and lines starting
//! with `#` are skipped.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::cluster::LabeledPoint;
use crate::error::{Error, Result};
use crate::procrustes::{Dataset, Mode};
use crate::so3::{Direction, UnitQuaternion};

fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.split_whitespace().map(str::to_owned).collect())))
            }
        }
    })
}

fn parse_floats(line: usize, fields: &[String]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("`{f}` is not a number"),
            })
        })
        .collect()
}

fn arity(line: usize, fields: &[String], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&fields.len()) {
        Ok(())
    } else {
        let want: Vec<String> = allowed.iter().map(|n| n.to_string()).collect();
        Err(Error::Parse {
            line,
            message: format!("expected {} fields, found {}", want.join(" or "), fields.len()),
        })
    }
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

/// Reads `w x y z` records.
pub fn read_quaternions<R: BufRead>(reader: R) -> Result<Vec<UnitQuaternion>> {
    records(reader)
        .map(|rec| {
            let (line, fields) = rec?;
            arity(line, &fields, &[4])?;
            let v = parse_floats(line, &fields)?;
            at_line(line, UnitQuaternion::new(v[0], v[1], v[2], v[3]))
        })
        .collect()
}

/// Reads `x y z` records.
pub fn read_directions<R: BufRead>(reader: R) -> Result<Vec<Direction>> {
    records(reader)
        .map(|rec| {
            let (line, fields) = rec?;
            arity(line, &fields, &[3])?;
            let v = parse_floats(line, &fields)?;
            at_line(line, Direction::new(v[0], v[1], v[2]))
        })
        .collect()
}

/// Reads `x y z label` records; the label column may be omitted on every
/// line, in which case no labels are returned.
pub fn read_labeled<R: BufRead>(reader: R) -> Result<(Vec<Direction>, Option<Vec<usize>>)> {
    let mut dirs = Vec::new();
    let mut labels = Vec::new();
    let mut labeled: Option<bool> = None;
    for rec in records(reader) {
        let (line, fields) = rec?;
        arity(line, &fields, &[3, 4])?;
        let has = fields.len() == 4;
        if *labeled.get_or_insert(has) != has {
            return Err(Error::Parse {
                line,
                message: "label column present on some lines only".into(),
            });
        }
        let v = parse_floats(line, &fields[..3])?;
        dirs.push(at_line(line, Direction::new(v[0], v[1], v[2]))?);
        if has {
            labels.push(fields[3].parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("`{}` is not a label", fields[3]),
            })?);
        }
    }
    Ok((dirs, labeled.unwrap_or(false).then_some(labels)))
}

/// Reads rotations or directions depending on `mode`.
pub fn read_dataset<R: BufRead>(reader: R, mode: Mode) -> Result<Dataset> {
    Ok(match mode {
        Mode::Rotation => Dataset::Rotations(read_quaternions(reader)?),
        Mode::Projection => Dataset::Directions(read_directions(reader)?),
    })
}

pub fn write_quaternions<W: Write>(mut w: W, qs: &[UnitQuaternion]) -> Result<()> {
    let mut s = String::new();
    for q in qs {
        let [a, b, c, d] = q.as_array();
        writeln!(s, "{a:.17e} {b:.17e} {c:.17e} {d:.17e}").unwrap();
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_directions<W: Write>(mut w: W, dirs: &[Direction]) -> Result<()> {
    let mut s = String::new();
    for d in dirs {
        let [x, y, z] = d.as_array();
        writeln!(s, "{x:.17e} {y:.17e} {z:.17e}").unwrap();
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_labeled<W: Write>(mut w: W, points: &[LabeledPoint]) -> Result<()> {
    let mut s = String::new();
    for p in points {
        let [x, y, z] = p.direction.as_array();
        writeln!(s, "{x:.17e} {y:.17e} {z:.17e} {}", p.label).unwrap();
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}
