//! Embedding tables, 2D projections and per-game latent trajectories.

use std::fmt::Write as _;

use latent_chess_core::chess::{FenError, Position};
use latent_chess_core::encoder::{EncodeError, Embedding};
use latent_chess_core::pgn::GameRecord;
use latent_chess_core::planner::Evaluator;
use latent_chess_core::projection::{fit_projection, Projection2D, ProjectionError};
use latent_chess_core::tokenizer::{tokenize_position, TokenizeError};
use latent_chess_core::training::LabeledPosition;

use crate::model::Model;

pub const TRAJECTORY_HEADER: &str = "ply,san,x,y,advantage_score";
const SVG_SIZE: f64 = 640.0;
const SVG_MARGIN: f64 = 48.0;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Fen(#[from] FenError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("projection: {0}")]
    Projection(#[from] ProjectionError),
    #[error("projection expects dimension {expected}, embeddings have {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn embed_positions(model: &Model, positions: &[Position]) -> Result<Vec<Embedding>, ExportError> {
    let seqs = positions.iter().map(tokenize_position).collect::<Result<Vec<_>, _>>()?;
    Ok(model.evaluator().embed_batch(&seqs)?)
}

fn check_dim(p: &Projection2D, z: &[Embedding]) -> Result<(), ExportError> {
    match z.first() {
        Some(v) if v.len() != p.mean().len() => Err(ExportError::Dimension {
            expected: p.mean().len(),
            found: v.len(),
        }),
        _ => Ok(()),
    }
}

/// Embeds labeled positions and writes `fen, win_prob_white,
/// advantage_score, pc1, pc2, z0..z{D-1}`. Without a projection one is
/// fitted on these embeddings and returned.
pub fn export_embeddings(
    model: &Model,
    items: &[LabeledPosition],
    projection: Option<&Projection2D>,
) -> Result<(String, Projection2D), ExportError> {
    let positions = items
        .iter()
        .map(|it| Position::from_fen(&it.fen))
        .collect::<Result<Vec<_>, _>>()?;
    let z = embed_positions(model, &positions)?;
    let proj = match projection {
        Some(p) => p.clone(),
        None => fit_projection(&z)?,
    };
    check_dim(&proj, &z)?;
    let dim = model.encoder.embed_dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["fen".to_string(), "win_prob_white".into(), "advantage_score".into(), "pc1".into(), "pc2".into()];
    header.extend((0..dim).map(|k| format!("z{k}")));
    w.write_record(&header)?;
    for (it, zi) in items.iter().zip(&z) {
        let (x, y) = proj.project(zi);
        let mut rec = vec![
            it.fen.clone(),
            format!("{}", it.win_prob_white),
            fmt6(model.advantage.score(zi)),
            fmt6(x),
            fmt6(y),
        ];
        rec.extend(zi.iter().map(|v| fmt6(*v)));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| ExportError::Io(e.into_error()))?;
    Ok((String::from_utf8(bytes).expect("csv of utf-8 fields"), proj))
}

fn fmt6(v: f64) -> String {
    // normalizes -0.000000 so equal values print identically
    let s = format!("{v:.6}");
    if s == "-0.000000" { "0.000000".into() } else { s }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub ply: usize,
    /// Move that led here; empty for the start position.
    pub san: String,
    pub x: f64,
    pub y: f64,
    pub advantage_score: f64,
}

/// Embeds every position of the game, start included, and places it on
/// `projection`.
pub fn trajectory(record: &GameRecord, model: &Model, projection: &Projection2D) -> Result<Vec<TrajectoryPoint>, ExportError> {
    let positions = record.positions()?;
    let sans = record.sans()?;
    let z = embed_positions(model, &positions)?;
    check_dim(projection, &z)?;
    Ok(z
        .iter()
        .enumerate()
        .map(|(ply, zi)| {
            let (x, y) = projection.project(zi);
            TrajectoryPoint {
                ply,
                san: if ply == 0 { String::new() } else { sans[ply - 1].clone() },
                x,
                y,
                advantage_score: model.advantage.score(zi),
            }
        })
        .collect())
}

/// Projection fitted on the game's own positions, for use when no reference
/// set is supplied.
pub fn fit_on_game(record: &GameRecord, model: &Model) -> Result<Projection2D, ExportError> {
    Ok(fit_projection(&embed_positions(model, &record.positions()?)?)?)
}

pub fn trajectory_csv(points: &[TrajectoryPoint]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(s, "{},{},{},{},{}", p.ply, p.san, fmt6(p.x), fmt6(p.y), fmt6(p.advantage_score));
    }
    s
}

/// Static SVG: one arrow per ply from each position to the next, start
/// and end marked.
pub fn trajectory_svg(points: &[TrajectoryPoint], title: &str) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let inner = SVG_SIZE - 2.0 * SVG_MARGIN;
    let sx = |x: f64| SVG_MARGIN + (x - x0) / span * inner;
    // screen y grows downward
    let sy = |y: f64| SVG_SIZE - SVG_MARGIN - (y - y0) / span * inner;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        SVG_SIZE
    );
    let _ = writeln!(s, r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#334"/></marker></defs>"##);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{SVG_MARGIN}" y="28" font-family="sans-serif" font-size="16">{}</text>"#, xml_escape(title));
    let pts: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#99a" stroke-width="1"/>"##, pts.join(" "));
    for w in points.windows(2) {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#334" stroke-width="1.2" marker-end="url(#arrow)"><title>{} {}</title></line>"##,
            sx(w[0].x),
            sy(w[0].y),
            sx(w[1].x),
            sy(w[1].y),
            w[1].ply,
            xml_escape(&w[1].san)
        );
    }
    if let (Some(a), Some(b)) = (points.first(), points.last()) {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#2a2"><title>start</title></circle>"##, sx(a.x), sy(a.y));
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#c22"><title>end</title></circle>"##, sx(b.x), sy(b.y));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
