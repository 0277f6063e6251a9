use crate::error::{Error, Result};

/// Short-time frame layout over one analysis window: frames of `frame_len`
/// samples every `hop` samples, each fully inside the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubframeGrid {
    pub frame_len: usize,
    pub hop: usize,
    pub count: usize,
}

impl SubframeGrid {
    pub fn new(n_samples: usize, frame_len: usize, hop: usize) -> Result<Self> {
        if frame_len == 0 || hop == 0 {
            return Err(Error::validation("frame length and hop must be positive"));
        }
        if n_samples < frame_len {
            return Err(Error::InsufficientData(format!(
                "{n_samples} samples cannot hold a {frame_len}-sample frame"
            )));
        }
        Ok(Self {
            frame_len,
            hop,
            count: (n_samples - frame_len) / hop + 1,
        })
    }

    pub fn start(&self, frame: usize) -> usize {
        frame * self.hop
    }

    pub fn frame<'a, T>(&self, samples: &'a [T], frame: usize) -> &'a [T] {
        let s = self.start(frame);
        &samples[s..s + self.frame_len]
    }
}
