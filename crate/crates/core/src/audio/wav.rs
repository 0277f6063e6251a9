use std::io::{Cursor, Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Recording, SAMPLE_RATE_HZ};

/// Loads a PCM WAV file as a canonical mono 16 kHz recording.
///
/// Accepts 8/16/24/32-bit integer and 32-bit float samples with any channel
/// count; channels are averaged.
pub fn load_recording<T: Real>(path: impl AsRef<Path>, patient_id: &str) -> Result<Recording<T>> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => {
            Error::io(path, io)
        }
        other => Error::Decode(format!("{}: {other}", path.display())),
    })?;
    decode(reader, patient_id)
}

pub fn load_recording_from_reader<T: Real, R: Read + Seek>(
    reader: R,
    patient_id: &str,
) -> Result<Recording<T>> {
    let reader = WavReader::new(reader).map_err(|e| Error::Decode(e.to_string()))?;
    decode(reader, patient_id)
}

fn decode<T: Real, R: Read>(mut reader: WavReader<R>, patient_id: &str) -> Result<Recording<T>> {
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(Error::Decode("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Decode(e.to_string()))?
        }
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Decode(e.to_string()))?,
        (fmt, bits) => {
            return Err(Error::Decode(format!(
                "unsupported sample format {fmt:?} with {bits} bits"
            )))
        }
    };
    if interleaved.len() % channels != 0 {
        return Err(Error::Decode("truncated multi-channel frame".into()));
    }
    let inv = 1.0 / channels as f64;
    let mono: Vec<T> = interleaved
        .chunks_exact(channels)
        .map(|frame| T::lit(frame.iter().sum::<f64>() * inv))
        .collect();
    if mono.is_empty() {
        return Err(Error::EmptyInput);
    }
    Recording::from_raw(patient_id, &mono, spec.sample_rate)
}

fn pcm16_spec() -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE_HZ,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    }
}

fn quantize<T: Real>(x: T) -> i16 {
    (x.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes a recording as a 16 kHz 16-bit mono PCM WAV byte stream.
pub fn wav_bytes<T: Real>(rec: &Recording<T>) -> Vec<u8> {
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer =
            WavWriter::new(&mut cursor, pcm16_spec()).expect("in-memory WAV header write");
        let mut w = writer.get_i16_writer(rec.len() as u32);
        for &x in rec.samples() {
            w.write_sample(quantize(x));
        }
        w.flush().expect("in-memory WAV write");
        writer.finalize().expect("in-memory WAV finalize");
    }
    cursor.into_inner()
}

pub fn write_wav<T: Real>(path: impl AsRef<Path>, rec: &Recording<T>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, wav_bytes(rec)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(spec: WavSpec, frames: &[Vec<f64>]) -> Vec<u8> {
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = WavWriter::new(&mut cursor, spec).unwrap();
            for frame in frames {
                for &v in frame {
                    match (spec.sample_format, spec.bits_per_sample) {
                        (SampleFormat::Float, _) => w.write_sample(v as f32).unwrap(),
                        (_, 8) => w.write_sample((v * 127.0) as i8).unwrap(),
                        (_, 16) => w.write_sample((v * 32767.0) as i16).unwrap(),
                        (_, 24) => w.write_sample((v * 8_388_607.0) as i32).unwrap(),
                        _ => w.write_sample((v * 2_147_483_647.0) as i32).unwrap(),
                    }
                }
            }
            w.finalize().unwrap();
        }
        cursor.into_inner()
    }

    fn spec(channels: u16, rate: u32, bits: u16, fmt: SampleFormat) -> WavSpec {
        WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: bits,
            sample_format: fmt,
        }
    }

    #[test]
    fn native_rate_mono_is_identity_length() {
        let frames: Vec<Vec<f64>> = (0..160_000).map(|i| vec![((i % 7) as f64 - 3.0) / 8.0]).collect();
        let bytes = encode(spec(1, 16_000, 16, SampleFormat::Int), &frames);
        let rec: Recording<f64> = load_recording_from_reader(Cursor::new(bytes), "p").unwrap();
        assert_eq!(rec.len(), 160_000);
        assert_eq!(rec.sample_rate_hz(), 16_000);
    }

    #[test]
    fn double_rate_is_resampled() {
        let frames: Vec<Vec<f64>> = (0..320_000).map(|_| vec![0.0]).collect();
        let bytes = encode(spec(1, 32_000, 16, SampleFormat::Int), &frames);
        let rec: Recording<f64> = load_recording_from_reader(Cursor::new(bytes), "p").unwrap();
        assert_eq!(rec.len(), 160_000);
    }

    #[test]
    fn antiphase_stereo_cancels() {
        let frames: Vec<Vec<f64>> = (0..16_000)
            .map(|i| {
                let x = 0.5 * ((i as f64) * 0.01).sin();
                vec![x, -x]
            })
            .collect();
        for (bits, fmt) in [
            (8, SampleFormat::Int),
            (16, SampleFormat::Int),
            (24, SampleFormat::Int),
            (32, SampleFormat::Int),
            (32, SampleFormat::Float),
        ] {
            let bytes = encode(spec(2, 16_000, bits, fmt), &frames);
            let rec: Recording<f64> = load_recording_from_reader(Cursor::new(bytes), "p").unwrap();
            assert!(rec.samples().iter().all(|&v| v == 0.0), "{bits}-bit {fmt:?}");
        }
    }

    #[test]
    fn empty_and_truncated_inputs() {
        let bytes = encode(spec(1, 16_000, 16, SampleFormat::Int), &[]);
        assert!(matches!(
            load_recording_from_reader::<f64, _>(Cursor::new(bytes), "p"),
            Err(Error::EmptyInput)
        ));
        let frames: Vec<Vec<f64>> = (0..1000).map(|_| vec![0.1]).collect();
        let mut bytes = encode(spec(1, 16_000, 16, SampleFormat::Int), &frames);
        bytes.truncate(bytes.len() - 501);
        assert!(matches!(
            load_recording_from_reader::<f64, _>(Cursor::new(bytes), "p"),
            Err(Error::Decode(_))
        ));
        assert!(matches!(
            load_recording_from_reader::<f64, _>(Cursor::new(b"RIFF0000junk".to_vec()), "p"),
            Err(Error::Decode(_))
        ));
    }

    #[test]
    fn pcm16_round_trip_is_exact_on_grid() {
        let samples: Vec<f64> = (-50..50).map(|k| f64::from(k * 300) / 32768.0).collect();
        let rec = Recording::new("p", samples.clone()).unwrap();
        let back: Recording<f64> = load_recording_from_reader(Cursor::new(wav_bytes(&rec)), "p").unwrap();
        assert_eq!(back.samples(), samples.as_slice());
    }
}
