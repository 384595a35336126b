//! Dataset files of `FEN,win_prob` lines (probability for the side to move).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use latent_chess_core::chess::FenError;
use latent_chess_core::training::{parse_dataset, DatasetError, LabeledPosition};

#[derive(Debug, thiserror::Error)]
pub enum DatasetFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: DatasetError },
    #[error("{path}: {source}")]
    Fen { path: PathBuf, source: FenError },
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledPosition>, DatasetFileError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text).map_err(|source| DatasetFileError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_dataset(path: &Path, items: &[LabeledPosition]) -> Result<(), DatasetFileError> {
    let io = |source| DatasetFileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    for item in items {
        let line = item.to_line().map_err(|source| DatasetFileError::Fen {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}
