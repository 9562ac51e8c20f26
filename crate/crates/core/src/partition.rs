//! Set partitions, pairwise queries, answers and the answer log.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of the items `0..n` into disjoint non-empty blocks.
///
/// Blocks are kept in canonical form: each block sorted ascending and the
/// blocks ordered by their smallest member. Two partitions are equal iff
/// they group the items identically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;

    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n = blocks.iter().map(Vec::len).sum();
        Partition::from_blocks(n, blocks)
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.blocks
    }
}

impl Partition {
    /// Builds a partition from arbitrary blocks, validating disjointness and coverage.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &item in block {
                if item >= n {
                    return Err(Error::ItemOutOfRange { item, n });
                }
                if seen[item] {
                    return Err(Error::InvalidPartition(format!("item {item} in two blocks")));
                }
                seen[item] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("item {missing} not covered")));
        }
        let mut labels = vec![0; n];
        for (b, block) in blocks.iter().enumerate() {
            for &item in block {
                labels[item] = b;
            }
        }
        Ok(Self::from_labels(&labels))
    }

    /// Builds a partition from a block label per item. Labels are arbitrary integers.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut canon = Vec::with_capacity(labels.len());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (item, &label) in labels.iter().enumerate() {
            let next = remap.len();
            let b = *remap.entry(label).or_insert(next);
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(item);
            canon.push(b);
        }
        Partition {
            blocks,
            labels: canon,
        }
    }

    /// The partition of `0..n` into singletons.
    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of blocks.
    pub fn b(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Canonical block index of `item` (blocks numbered by smallest member).
    pub fn block_of(&self, item: usize) -> usize {
        self.labels[item]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn same_block(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    /// Block sizes in canonical block order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, item) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{item}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Enumerates every partition of `0..n` via restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut rgs = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        out.push(Partition::from_labels(&rgs));
        // Advance to the next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            if rgs[i] <= maxes[i - 1] {
                rgs[i] += 1;
                maxes[i] = maxes[i - 1].max(rgs[i]);
                for j in i + 1..n {
                    rgs[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// A pairwise same-class query between two distinct items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Query {
    pub u: usize,
    pub v: usize,
}

impl Query {
    pub fn new(u: usize, v: usize) -> Result<Self> {
        if u == v {
            return Err(Error::SelfQuery(u));
        }
        Ok(Query { u, v })
    }

    /// The unordered pair as `(min, max)`.
    pub fn key(self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }

    pub fn same_pair(self, other: Query) -> bool {
        self.key() == other.key()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

/// An oracle answer recorded at step `t`.
///
/// Serializes as a JSON-lines record: `{"t","u","v","positive"}`, plus
/// `"repair": true` on repair answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "LogLine", try_from = "LogLine")]
pub struct Answer {
    pub query: Query,
    pub positive: bool,
    pub t: u64,
    /// Set for answers to repair (contradiction-localizing) queries.
    pub repair: bool,
}

impl Answer {
    pub fn new(query: Query, positive: bool, t: u64) -> Self {
        Answer {
            query,
            positive,
            t,
            repair: false,
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct LogLine {
    t: u64,
    u: usize,
    v: usize,
    positive: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    repair: bool,
}

impl From<Answer> for LogLine {
    fn from(a: Answer) -> Self {
        LogLine {
            t: a.t,
            u: a.query.u,
            v: a.query.v,
            positive: a.positive,
            repair: a.repair,
        }
    }
}

impl TryFrom<LogLine> for Answer {
    type Error = Error;

    fn try_from(l: LogLine) -> Result<Self> {
        Ok(Answer {
            query: Query::new(l.u, l.v)?,
            positive: l.positive,
            t: l.t,
            repair: l.repair,
        })
    }
}

/// Ordered record of answers over `n` items.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryLog {
    n: usize,
    answers: Vec<Answer>,
}

impl QueryLog {
    pub fn new(n: usize) -> Self {
        QueryLog {
            n,
            answers: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    /// Next unused timestamp.
    pub fn next_t(&self) -> u64 {
        self.answers.last().map_or(0, |a| a.t + 1)
    }

    /// Appends an answer; timestamps must be strictly increasing.
    pub fn push(&mut self, answer: Answer) -> Result<()> {
        let Query { u, v } = answer.query;
        for item in [u, v] {
            if item >= self.n {
                return Err(Error::ItemOutOfRange { item, n: self.n });
            }
        }
        if u == v {
            return Err(Error::SelfQuery(u));
        }
        if let Some(last) = self.answers.last() {
            if answer.t <= last.t {
                return Err(Error::Invalid(format!(
                    "timestamp {} not after {}",
                    answer.t, last.t
                )));
            }
        }
        self.answers.push(answer);
        Ok(())
    }

    /// Appends an answer stamped with the next timestamp.
    pub fn record(&mut self, query: Query, positive: bool) -> Result<Answer> {
        let answer = Answer::new(query, positive, self.next_t());
        self.push(answer)?;
        Ok(answer)
    }

    /// Serializes one answer as a JSON line (no trailing newline).
    pub fn encode_line(answer: &Answer) -> String {
        serde_json::to_string(answer).expect("log line serializes")
    }

    pub fn decode_line(line: &str, lineno: usize) -> Result<Answer> {
        serde_json::from_str(line).map_err(|e| Error::MalformedLog {
            line: lineno,
            message: e.to_string(),
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for a in &self.answers {
            writeln!(w, "{}", Self::encode_line(a))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(n: usize, r: R) -> Result<Self> {
        let mut log = QueryLog::new(n);
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::MalformedLog {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            log.push(Self::decode_line(&line, i + 1)?)?;
        }
        Ok(log)
    }
}
