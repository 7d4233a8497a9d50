use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Days relative to the index date.
    pub offset: i32,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sex {
    F,
    M,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::F => "F",
            Sex::M => "M",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Static {
    pub age: f64,
    pub sex: Sex,
    pub eci: u32,
}

/// One patient's events around an index (infection) date.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventTimeline {
    pub patient_id: String,
    /// Days since 1970-01-01.
    pub index_date: i32,
    #[serde(rename = "static")]
    pub statics: Static,
    pub events: Vec<Event>,
}

impl EventTimeline {
    /// Sorts events by offset (stable) and checks the static fields.
    pub fn normalized(mut self) -> Result<Self> {
        if !self.statics.age.is_finite() {
            return Err(Error::InvalidData(format!("patient {}: non-finite age", self.patient_id)));
        }
        self.events.sort_by_key(|e| e.offset);
        Ok(self)
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].offset <= w[1].offset)
    }
}

/// Reads one timeline per non-blank line.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<EventTimeline>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: EventTimeline = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidData(format!("timeline line {}: {e}", i + 1)))?;
        out.push(t.normalized()?);
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(timelines: &[EventTimeline], mut w: W) -> Result<()> {
    for t in timelines {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let t = EventTimeline {
            patient_id: "p1".into(),
            index_date: 18500,
            statics: Static { age: 71.5, sex: Sex::F, eci: 4 },
            events: vec![
                Event { offset: -10, code: "HTN".into(), value: None },
                Event { offset: -3, code: "creatinine".into(), value: Some(1.25) },
            ],
        };
        let mut buf = Vec::new();
        write_jsonl(&[t.clone(), t.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"static\":{\"age\":71.5,\"sex\":\"F\",\"eci\":4}"));
        assert!(!text.contains("null"));
        assert_eq!(read_jsonl(&buf[..]).unwrap(), vec![t.clone(), t]);
    }

    #[test]
    fn unsorted_input_is_sorted_on_read() {
        let line = r#"{"patient_id":"a","index_date":0,"static":{"age":50,"sex":"M","eci":0},"events":[{"offset":5,"code":"DM"},{"offset":-5,"code":"HTN"}]}"#;
        let t = read_jsonl(line.as_bytes()).unwrap();
        assert!(t[0].is_sorted());
        assert_eq!(t[0].events[0].code, "HTN");
    }

    #[test]
    fn bad_line_reports_number() {
        let err = read_jsonl("\n{oops}\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
