use serde::{Deserialize, Serialize};

use super::analyzer::{analyze_spans, AnalyzerConfig};
use super::Document;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 180;
pub const DEFAULT_STRIDE: usize = 90;

/// A window of analyzer tokens over a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    /// Byte offsets into the document text.
    pub char_span: (usize, usize),
    /// Half-open range of document token positions.
    pub token_span: (usize, usize),
}

/// Half-open token ranges of the windows over a document of `len` tokens.
///
/// Windows start at 0, stride, 2·stride, ... and generation stops at the first
/// window that reaches the final token.
pub fn window_spans(len: usize, window: usize, stride: usize) -> Result<Vec<(usize, usize)>> {
    if window == 0 || stride == 0 {
        return Err(Error::Config(format!(
            "window ({window}) and stride ({stride}) must be positive"
        )));
    }
    if stride > window {
        return Err(Error::Config(format!(
            "stride ({stride}) exceeds window ({window}); tokens would be skipped"
        )));
    }
    let mut spans = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + window).min(len);
        spans.push((start, end));
        if end == len {
            break;
        }
        start += stride;
    }
    Ok(spans)
}

/// Splits a document's text into overlapping passages.
pub fn split_passages(
    doc: &Document,
    window: usize,
    stride: usize,
    config: &AnalyzerConfig,
) -> Result<Vec<Passage>> {
    let tokens = analyze_spans(&doc.text, &doc.lang, config);
    let spans = window_spans(tokens.len(), window, stride)?;
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            let slice = &tokens[start..end];
            Passage {
                doc_id: doc.id.clone(),
                index,
                tokens: slice.iter().map(|t| t.text.clone()).collect(),
                char_span: (slice[0].start, slice[slice.len() - 1].end),
                token_span: (start, end),
            }
        })
        .collect())
}
