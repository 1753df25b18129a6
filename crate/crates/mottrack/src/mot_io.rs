//! MOTChallenge text formats and the warp / embedding / proposal sidecars.
//!
//! All formats are comma-separated UTF-8 with LF line endings and no header.
//! Frames are 1-based. Reals are written in shortest round-trip form.
//!
//! | file           | row layout                                   |
//! |----------------|----------------------------------------------|
//! | detections     | `frame,-1,left,top,width,height,conf,-1,-1,-1` |
//! | results        | `frame,id,left,top,width,height,conf,-1,-1,-1` |
//! | ground truth   | `frame,id,left,top,width,height,flag,class,visibility` |
//! | warps          | `frame,a11,a12,a13,a21,a22,a23`              |
//! | embeddings     | `frame,det_index,v1,...,v_dim`               |
//!
//! `det_index` is the 0-based position of the row among the detection rows
//! of its frame, in file order.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use mottrack_core::tracktor::{Embedding, EmbeddingTable, WarpTable};
use mottrack_core::{AffineWarp, BBox, Detection, Sequence, Trajectory};

/// A line-numbered parse failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with their 1-based numbers.
fn rows<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), ParseError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) => {
                let l = l.trim_end_matches('\r');
                (!l.trim().is_empty()).then(|| Ok((i + 1, l.to_string())))
            }
            Err(e) => Some(Err(perr(i + 1, format!("read failed: {e}")))),
        })
}

fn fields(line: usize, text: &str, arity: usize) -> Result<Vec<&str>, ParseError> {
    let f: Vec<&str> = text.split(',').map(str::trim).collect();
    if f.len() != arity {
        return Err(perr(
            line,
            format!("expected {arity} fields, found {}", f.len()),
        ));
    }
    Ok(f)
}

fn real(line: usize, what: &str, s: &str) -> Result<f64, ParseError> {
    s.parse::<f64>()
        .map_err(|_| perr(line, format!("{what}: not a number: {s:?}")))
}

fn integer(line: usize, what: &str, s: &str) -> Result<i64, ParseError> {
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    // some tools write integral columns as reals
    match s.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(perr(line, format!("{what}: not an integer: {s:?}"))),
    }
}

fn frame_index(line: usize, s: &str) -> Result<u32, ParseError> {
    let f = integer(line, "frame", s)?;
    u32::try_from(f)
        .ok()
        .filter(|&f| f >= 1)
        .ok_or_else(|| perr(line, format!("frame must be >= 1, got {f}")))
}

fn bbox_fields(line: usize, f: &[&str]) -> Result<BBox, ParseError> {
    Ok(BBox::new(
        real(line, "left", f[0])?,
        real(line, "top", f[1])?,
        real(line, "width", f[2])?,
        real(line, "height", f[3])?,
    ))
}

/// A detection row that parsed but violates the box invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDetections {
    pub sequence: Sequence,
    pub rejected: Vec<RejectedRow>,
}

pub fn parse_detections<R: BufRead>(reader: R) -> Result<ParsedDetections, ParseError> {
    let mut out = ParsedDetections::default();
    let mut per_frame: BTreeMap<u32, u32> = BTreeMap::new();
    for row in rows(reader) {
        let (line, text) = row?;
        let f = fields(line, &text, 10)?;
        let frame = frame_index(line, f[0])?;
        integer(line, "id", f[1])?;
        let bbox = bbox_fields(line, &f[2..6])?;
        let confidence = real(line, "confidence", f[6])?;
        for (k, s) in f[7..].iter().enumerate() {
            real(line, ["x", "y", "z"][k], s)?;
        }
        let slot = per_frame.entry(frame).or_insert(0);
        let index = *slot;
        *slot += 1;
        if let Err(e) = bbox.validate() {
            log::warn!("line {line}: rejected detection: {e}");
            out.rejected.push(RejectedRow {
                line,
                reason: e.to_string(),
            });
            continue;
        }
        out.sequence.push(Detection {
            frame,
            bbox,
            confidence,
            embedding_key: Some((frame, index)),
        });
    }
    Ok(out)
}

fn write_row<W: Write>(out: &mut W, cells: std::fmt::Arguments<'_>) -> std::io::Result<()> {
    out.write_fmt(cells)?;
    out.write_all(b"\n")
}

/// Writes detections, frames ascending, preserving within-frame order.
pub fn write_detections<W: Write>(seq: &Sequence, mut out: W) -> std::io::Result<()> {
    for (frame, dets) in seq.iter() {
        for d in dets {
            let b = &d.bbox;
            write_row(
                &mut out,
                format_args!(
                    "{frame},-1,{},{},{},{},{},-1,-1,-1",
                    b.left, b.top, b.width, b.height, d.confidence
                ),
            )?;
        }
    }
    out.flush()
}

/// Tracker output rows sorted by `(frame, id)`, confidence 1.
pub fn write_results<W: Write>(trajectories: &[Trajectory], mut out: W) -> std::io::Result<()> {
    let mut rows: Vec<(u32, u32, &BBox)> = trajectories
        .iter()
        .flat_map(|t| t.boxes.iter().map(move |(f, b)| (*f, t.id, b)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    for (frame, id, b) in rows {
        write_row(
            &mut out,
            format_args!(
                "{frame},{id},{},{},{},{},1,-1,-1,-1",
                b.left, b.top, b.width, b.height
            ),
        )?;
    }
    out.flush()
}

fn insert_box(
    tracks: &mut BTreeMap<u32, Trajectory>,
    line: usize,
    frame: u32,
    id: u32,
    bbox: BBox,
) -> Result<(), ParseError> {
    let t = tracks.entry(id).or_insert_with(|| Trajectory::new(id));
    match t.boxes.entry(frame) {
        Entry::Occupied(_) => Err(perr(
            line,
            format!("duplicate row for frame {frame}, id {id}"),
        )),
        Entry::Vacant(v) => {
            v.insert(bbox);
            Ok(())
        }
    }
}

fn track_id(line: usize, s: &str) -> Result<u32, ParseError> {
    let id = integer(line, "id", s)?;
    u32::try_from(id)
        .ok()
        .filter(|&i| i >= 1)
        .ok_or_else(|| perr(line, format!("id must be >= 1, got {id}")))
}

/// Reads a tracker result file into trajectories sorted by id.
pub fn parse_results<R: BufRead>(reader: R) -> Result<Vec<Trajectory>, ParseError> {
    let mut tracks = BTreeMap::new();
    for row in rows(reader) {
        let (line, text) = row?;
        let f = fields(line, &text, 10)?;
        let frame = frame_index(line, f[0])?;
        let id = track_id(line, f[1])?;
        let bbox = bbox_fields(line, &f[2..6])?;
        bbox.validate().map_err(|e| perr(line, e.to_string()))?;
        for s in &f[6..] {
            real(line, "trailing column", s)?;
        }
        insert_box(&mut tracks, line, frame, id, bbox)?;
    }
    Ok(tracks.into_values().collect())
}

/// Ground-truth row filter.
#[derive(Debug, Clone, PartialEq)]
pub struct GtFilter {
    pub keep_classes: BTreeSet<i64>,
    pub min_visibility: f64,
}

impl Default for GtFilter {
    fn default() -> Self {
        Self {
            keep_classes: BTreeSet::from([1]),
            min_visibility: 0.0,
        }
    }
}

pub fn parse_gt<R: BufRead>(reader: R, filter: &GtFilter) -> Result<Vec<Trajectory>, ParseError> {
    let mut tracks = BTreeMap::new();
    for row in rows(reader) {
        let (line, text) = row?;
        let f = fields(line, &text, 9)?;
        let frame = frame_index(line, f[0])?;
        let id = track_id(line, f[1])?;
        let bbox = bbox_fields(line, &f[2..6])?;
        let flag = integer(line, "consider flag", f[6])?;
        let class = integer(line, "class", f[7])?;
        let visibility = real(line, "visibility", f[8])?;
        if !(flag == 0 || flag == 1) {
            return Err(perr(
                line,
                format!("consider flag must be 0 or 1, got {flag}"),
            ));
        }
        if flag == 0 || !filter.keep_classes.contains(&class) || visibility < filter.min_visibility
        {
            continue;
        }
        bbox.validate().map_err(|e| perr(line, e.to_string()))?;
        insert_box(&mut tracks, line, frame, id, bbox)?;
    }
    Ok(tracks.into_values().collect())
}

/// Writes ground truth with flag 1, class 1, visibility 1.
pub fn write_gt<W: Write>(trajectories: &[Trajectory], mut out: W) -> std::io::Result<()> {
    let mut rows: Vec<(u32, u32, &BBox)> = trajectories
        .iter()
        .flat_map(|t| t.boxes.iter().map(move |(f, b)| (*f, t.id, b)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    for (frame, id, b) in rows {
        write_row(
            &mut out,
            format_args!(
                "{frame},{id},{},{},{},{},1,1,1",
                b.left, b.top, b.width, b.height
            ),
        )?;
    }
    out.flush()
}

pub fn parse_warps<R: BufRead>(reader: R) -> Result<WarpTable, ParseError> {
    let mut warps = WarpTable::new();
    for row in rows(reader) {
        let (line, text) = row?;
        let f = fields(line, &text, 7)?;
        let frame = frame_index(line, f[0])?;
        let mut c = [0.0; 6];
        for (k, s) in f[1..].iter().enumerate() {
            c[k] = real(line, "warp coefficient", s)?;
        }
        let w = AffineWarp::new(c).map_err(|e| perr(line, e.to_string()))?;
        if warps.insert(frame, w).is_some() {
            return Err(perr(line, format!("duplicate warp for frame {frame}")));
        }
    }
    Ok(warps)
}

pub fn write_warps<W: Write>(warps: &WarpTable, mut out: W) -> std::io::Result<()> {
    for (frame, w) in warps {
        let [a, b, c, d, e, f] = w.coeffs();
        write_row(&mut out, format_args!("{frame},{a},{b},{c},{d},{e},{f}"))?;
    }
    out.flush()
}

/// Parses embedding rows; `dim = None` takes the dimension from the first row.
pub fn parse_embeddings<R: BufRead>(
    reader: R,
    dim: Option<usize>,
) -> Result<EmbeddingTable, ParseError> {
    let mut table = EmbeddingTable::new();
    let mut dim = dim;
    for row in rows(reader) {
        let (line, text) = row?;
        let n = text.split(',').count();
        let d = *dim.get_or_insert(n.saturating_sub(2));
        if d == 0 {
            return Err(perr(line, "embedding row has no vector components"));
        }
        let f = fields(line, &text, d + 2)?;
        let frame = frame_index(line, f[0])?;
        let index = integer(line, "det_index", f[1])?;
        let index = u32::try_from(index)
            .map_err(|_| perr(line, format!("det_index must be >= 0, got {index}")))?;
        let v = f[2..]
            .iter()
            .map(|s| real(line, "embedding component", s))
            .collect::<Result<Vec<_>, _>>()?;
        let e = Embedding::new(v).map_err(|e| perr(line, e.to_string()))?;
        if table.insert((frame, index), e).is_some() {
            return Err(perr(
                line,
                format!("duplicate embedding for frame {frame}, index {index}"),
            ));
        }
    }
    Ok(table)
}

pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut out: W) -> std::io::Result<()> {
    for ((frame, index), e) in table {
        write!(out, "{frame},{index}")?;
        for v in e.vector() {
            write!(out, ",{v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn results_text(t: &[Trajectory]) -> String {
        let mut buf = Vec::new();
        write_results(t, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn detection_row_maps_fields() {
        let p = parse_detections("1,-1,10,20,4,8,0.9,-1,-1,-1\n".as_bytes()).unwrap();
        let d = p.sequence.frame(1)[0];
        assert_eq!(d.bbox, BBox::new(10.0, 20.0, 4.0, 8.0));
        assert_eq!(d.confidence, 0.9);
        assert_eq!(d.embedding_key, Some((1, 0)));
        assert!(p.rejected.is_empty());
    }

    #[test]
    fn nonpositive_extent_is_rejected_not_fatal() {
        let text =
            "1,-1,10,20,-3,8,0.9,-1,-1,-1\n1,-1,0,0,4,8,0.5,-1,-1,-1\n2,-1,0,0,4,0,0.5,-1,-1,-1\n";
        let p = parse_detections(text.as_bytes()).unwrap();
        assert_eq!(p.rejected.len(), 2);
        assert_eq!(p.rejected[0].line, 1);
        assert_eq!(p.sequence.len(), 1);
        // the surviving row keeps its file position within the frame
        assert_eq!(p.sequence.frame(1)[0].embedding_key, Some((1, 1)));
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let text = "1,-1,10,20,4,8,0.9,-1,-1,-1\n\n2,-1,ten,20,4,8,0.9,-1,-1,-1\n";
        assert_eq!(parse_detections(text.as_bytes()).unwrap_err().line, 3);
        assert_eq!(
            parse_detections("1,-1,1,2\n".as_bytes()).unwrap_err().line,
            1
        );
        assert_eq!(
            parse_detections("0,-1,1,2,3,4,1,-1,-1,-1\n".as_bytes())
                .unwrap_err()
                .line,
            1
        );
        assert!(parse_detections("".as_bytes()).unwrap().sequence.is_empty());
    }

    #[test]
    fn results_layout() {
        assert_eq!(results_text(&[]), "");
        let mut t = Trajectory::new(3);
        t.boxes.insert(2, BBox::new(1.5, 2.0, 10.0, 20.25));
        assert_eq!(results_text(&[t]), "2,3,1.5,2,10,20.25,1,-1,-1,-1\n");
    }

    #[test]
    fn results_sorted_by_frame_then_id() {
        let text = "2,1,0,0,1,1,1,-1,-1,-1\n1,2,0,0,1,1,1,-1,-1,-1\n1,1,0,0,1,1,1,-1,-1,-1\n";
        let t = parse_results(text.as_bytes()).unwrap();
        let out = results_text(&t);
        assert_eq!(
            out,
            "1,1,0,0,1,1,1,-1,-1,-1\n1,2,0,0,1,1,1,-1,-1,-1\n2,1,0,0,1,1,1,-1,-1,-1\n"
        );
        assert!(
            parse_results("1,1,0,0,1,1,1,-1,-1,-1\n1,1,0,0,2,2,1,-1,-1,-1\n".as_bytes()).is_err()
        );
    }

    #[test]
    fn gt_filters() {
        let text = "1,1,0,0,10,10,1,1,1\n1,2,0,0,10,10,0,1,1\n1,3,0,0,10,10,1,2,1\n1,4,0,0,10,10,1,1,0.1\n";
        let all = parse_gt(text.as_bytes(), &GtFilter::default()).unwrap();
        assert_eq!(all.iter().map(|t| t.id).collect::<Vec<_>>(), vec![1, 4]);
        let vis = GtFilter {
            min_visibility: 0.5,
            ..GtFilter::default()
        };
        assert_eq!(parse_gt(text.as_bytes(), &vis).unwrap().len(), 1);
        let both = GtFilter {
            keep_classes: BTreeSet::from([1, 2]),
            ..GtFilter::default()
        };
        assert_eq!(parse_gt(text.as_bytes(), &both).unwrap().len(), 3);
    }

    #[test]
    fn gt_groups_identities() {
        let mut text = String::new();
        for f in 1..=3 {
            for id in 1..=2 {
                text.push_str(&format!("{f},{id},{},0,10,20,1,1,1\n", id * 50));
            }
        }
        let gt = parse_gt(text.as_bytes(), &GtFilter::default()).unwrap();
        assert_eq!(gt.len(), 2);
        assert!(gt.iter().all(|t| t.len() == 3));
        let dup = "1,1,0,0,10,10,1,1,1\n1,1,5,5,10,10,1,1,1\n";
        let e = parse_gt(dup.as_bytes(), &GtFilter::default()).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("frame 1, id 1"));
    }

    #[test]
    fn warp_rows() {
        let w = parse_warps("1,1,0,0,0,1,0\n2,1,0,3,0,1,-2\n".as_bytes()).unwrap();
        assert_eq!(w[&1], AffineWarp::IDENTITY);
        assert_eq!(w[&2], AffineWarp::translation(3.0, -2.0));
        assert_eq!(
            parse_warps("1,1,0,x,0,1,0\n".as_bytes()).unwrap_err().line,
            1
        );
        assert_eq!(
            parse_warps("1,1,0,0,0,1,0\n1,1,0,0,0,1,0\n".as_bytes())
                .unwrap_err()
                .line,
            2
        );
        assert!(parse_warps("1,0,0,0,0,0,0\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_warps(&w, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1,1,0,0,0,1,0\n2,1,0,3,0,1,-2\n"
        );
    }

    #[test]
    fn embedding_rows() {
        let t = parse_embeddings("1,0,0,1,0\n".as_bytes(), Some(3)).unwrap();
        assert_eq!(t[&(1, 0)].norm(), 1.0);
        assert_eq!(
            parse_embeddings("1,0,0,1\n".as_bytes(), Some(3))
                .unwrap_err()
                .line,
            1
        );
        assert!(parse_embeddings("1,0,0,0,0\n".as_bytes(), Some(3)).is_err());
        let dup = parse_embeddings("1,0,1,0\n1,0,0,1\n".as_bytes(), None).unwrap_err();
        assert_eq!(dup.line, 2);
        let inferred = parse_embeddings("3,2,0.5,0.5\n4,0,1,1\n".as_bytes(), None).unwrap();
        assert_eq!(inferred[&(3, 2)].dim(), 2);
        assert!(parse_embeddings("3,2,0.5,0.5\n4,0,1\n".as_bytes(), None).is_err());
    }
}
