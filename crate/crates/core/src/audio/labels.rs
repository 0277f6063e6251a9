use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::LabeledEvent;

const HEADER: [&str; 4] = ["patient_id", "start_s", "end_s", "label"];

/// Reads a label CSV (`patient_id,start_s,end_s,label`, `#` comments allowed).
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabeledEvent>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labels(file)
}

pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<LabeledEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(Error::validation(format!(
            "label header must be `{}`, found `{}`",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut events = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = line + 2;
        let parse_secs = |field: &str| -> Result<f64> {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::validation(format!("row {row}: bad seconds {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::validation(format!("row {row}: non-finite seconds")));
            }
            Ok(v)
        };
        let event = LabeledEvent {
            patient_id: record[0].to_string(),
            start_s: parse_secs(&record[1])?,
            end_s: parse_secs(&record[2])?,
            label: record[3]
                .parse()
                .map_err(|e| Error::validation(format!("row {row}: {e}")))?,
        };
        events.push(event);
    }
    validate_events(&events)?;
    Ok(events)
}

pub fn write_labels<W: Write>(writer: W, events: &[LabeledEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER)?;
    for e in events {
        wtr.write_record([
            e.patient_id.as_str(),
            &e.start_s.to_string(),
            &e.end_s.to_string(),
            e.label.as_str(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}

/// Checks interval sanity and that no two events of one patient overlap.
/// Abutting events (`a.end_s == b.start_s`) are allowed.
pub fn validate_events(events: &[LabeledEvent]) -> Result<()> {
    let mut by_patient: BTreeMap<&str, Vec<&LabeledEvent>> = BTreeMap::new();
    for e in events {
        if !(e.start_s >= 0.0) || !(e.end_s > e.start_s) {
            return Err(Error::validation(format!(
                "event [{}, {}) for patient {} is not a valid interval",
                e.start_s, e.end_s, e.patient_id
            )));
        }
        by_patient.entry(&e.patient_id).or_default().push(e);
    }
    for (patient, mut list) in by_patient {
        list.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for pair in list.windows(2) {
            if pair[1].start_s < pair[0].end_s {
                return Err(Error::validation(format!(
                    "patient {patient}: events [{}, {}) and [{}, {}) overlap",
                    pair[0].start_s, pair[0].end_s, pair[1].start_s, pair[1].end_s
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::Label;

    #[test]
    fn parses_comments_and_whitespace() {
        let text = "# night 1\npatient_id,start_s,end_s,label\np1, 0.0, 12.5 ,osa_snore\n# gap\np1,12.5,20,other\n";
        let events = parse_labels(text.as_bytes()).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].label, Label::OsaSnore);
        assert_eq!(events[1].start_s, 12.5);
    }

    #[test]
    fn rejects_overlap_and_bad_header() {
        let text = "patient_id,start_s,end_s,label\np1,0,10,other\np1,9,12,other\n";
        assert!(matches!(parse_labels(text.as_bytes()), Err(Error::Validation(_))));
        let text = "patient,start,end,label\n";
        assert!(parse_labels(text.as_bytes()).is_err());
        let text = "patient_id,start_s,end_s,label\np1,5,5,other\n";
        assert!(parse_labels(text.as_bytes()).is_err());
    }

    #[test]
    fn overlap_is_per_patient() {
        let events = vec![
            LabeledEvent::new("a", 0.0, 10.0, Label::Other),
            LabeledEvent::new("b", 5.0, 10.0, Label::Other),
        ];
        validate_events(&events).unwrap();
    }

    #[test]
    fn write_then_parse() {
        let events = vec![
            LabeledEvent::new("a", 0.0, 10.25, Label::SimpleSnore),
            LabeledEvent::new("a", 10.25, 30.0, Label::Other),
        ];
        let mut buf = Vec::new();
        write_labels(&mut buf, &events).unwrap();
        assert_eq!(parse_labels(buf.as_slice()).unwrap(), events);
    }
}
