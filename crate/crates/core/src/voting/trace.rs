use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ProtocolSpec;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Consensus { winner: u32 },
    Timeout,
}

/// One voting run: class sizes after every round, starting with round 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub protocol: ProtocolSpec,
    pub sizes: Vec<Vec<usize>>,
    pub outcome: Outcome,
    pub rounds_used: u64,
}

impl RunTrace {
    pub fn winner(&self) -> Option<u32> {
        match self.outcome {
            Outcome::Consensus { winner } => Some(winner),
            Outcome::Timeout => None,
        }
    }

    pub fn final_sizes(&self) -> &[usize] {
        self.sizes.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// A single JSON object on one line, no trailing newline.
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn write_json_lines<'a>(traces: impl IntoIterator<Item = &'a RunTrace>, w: &mut impl Write) -> Result<()> {
        for t in traces {
            writeln!(w, "{}", t.to_json_line()?)?;
        }
        Ok(())
    }

    /// `round,class_0,...,class_{k-1}` then one row per round.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let k = self.sizes.first().map_or(0, Vec::len);
        let header: Vec<String> = (0..k).map(|i| format!("class_{i}")).collect();
        writeln!(w, "round,{}", header.join(","))?;
        for (round, sizes) in self.sizes.iter().enumerate() {
            let row: Vec<String> = sizes.iter().map(usize::to_string).collect();
            writeln!(w, "{round},{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voting::ProtocolSpec;

    fn sample() -> RunTrace {
        RunTrace {
            seed: 3,
            protocol: ProtocolSpec::two_sample(),
            sizes: vec![vec![6, 4], vec![8, 2], vec![10, 0]],
            outcome: Outcome::Consensus { winner: 0 },
            rounds_used: 2,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "round,class_0,class_1\n0,6,4\n1,8,2\n2,10,0\n"
        );
    }

    #[test]
    fn json_line_round_trips() {
        let t = sample();
        let line = t.to_json_line().unwrap();
        assert!(!line.contains('\n'));
        assert!(line.contains("\"kind\":\"consensus\""));
        let back: RunTrace = serde_json::from_str(&line).unwrap();
        assert_eq!(back, t);
        let timeout = RunTrace {
            outcome: Outcome::Timeout,
            ..t
        };
        let mut buf = Vec::new();
        RunTrace::write_json_lines([&timeout, &timeout], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
