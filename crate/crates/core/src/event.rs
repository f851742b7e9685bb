// Copyright 2026 The itree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Sampled outcomes and their CSV form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One sampled outcome: the final spin and the path, step 1 first.
/// `true` in `path` means the tree went left at that step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    /// `false` = spin down, `true` = spin up.
    pub spin: bool,
    pub path: Vec<bool>,
}

impl Event {
    pub fn new(spin: bool, path: Vec<bool>) -> Self {
        Event { spin, path }
    }

    /// Decode a packed outcome index `(path << 1) | spin`.
    pub fn from_index(n_steps: usize, index: usize) -> Self {
        let path = (0..n_steps).map(|k| (index >> (k + 1)) & 1 == 1).collect();
        Event {
            spin: index & 1 == 1,
            path,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.path.len()
    }

    /// Packed outcome index, step 1 in the least significant path bit.
    pub fn index(&self) -> usize {
        debug_assert!(self.path.len() < usize::BITS as usize);
        self.path
            .iter()
            .enumerate()
            .fold(self.spin as usize, |acc, (k, &left)| {
                acc | ((left as usize) << (k + 1))
            })
    }

    pub fn path_string(&self) -> String {
        self.path
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

pub const EVENTS_HEADER: &str = "event_id,spin,path";

/// Write events as `event_id,spin,path`.
pub fn write_events_csv<W: Write>(mut out: W, events: &[Event]) -> std::io::Result<()> {
    writeln!(out, "{}", EVENTS_HEADER)?;
    for (id, ev) in events.iter().enumerate() {
        writeln!(out, "{},{},{}", id, ev.spin as u8, ev.path_string())?;
    }
    Ok(())
}

fn parse_bit(s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse(format!("expected 0 or 1, got {:?}", other))),
    }
}

/// Read an event CSV written by [`write_events_csv`].
pub fn read_events_csv<R: BufRead>(input: R) -> Result<Vec<Event>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == EVENTS_HEADER => {}
        _ => return Err(Error::Parse("missing event CSV header".into())),
    }
    let mut events = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad event row {:?}", line)));
        }
        let spin = parse_bit(fields[1])?;
        let path = fields[2]
            .chars()
            .map(|c| parse_bit(c.encode_utf8(&mut [0; 4])))
            .collect::<Result<Vec<_>>>()?;
        events.push(Event { spin, path });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_layout() {
        let ev = Event::new(true, vec![true, false, true]);
        assert_eq!(ev.index(), 0b1011);
        assert_eq!(Event::from_index(3, 0b1011), ev);
        assert_eq!(ev.path_string(), "101");
    }

    #[test]
    fn csv_round_trip() {
        let events = vec![
            Event::new(false, vec![true, false]),
            Event::new(true, vec![false, false]),
        ];
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &events).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "event_id,spin,path\n0,0,10\n1,1,00\n"
        );
        assert_eq!(read_events_csv(&buf[..]).unwrap(), events);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_events_csv(&b"event_id,spin,path\n0,2,10\n"[..]).is_err());
        assert!(read_events_csv(&b"id,path\n"[..]).is_err());
    }
}
