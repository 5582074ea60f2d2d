//! Balls in the Cayley graph of the free group on `a, b`, with every
//! `b`-edge subdivided at a midpoint so that cosets of `<a>` are separated
//! by points lying outside them.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::metric_graph::{GraphBuilder, MetricGraph};

/// Letters `a, A, b, B` as `0..4`; `A` and `B` are the inverses.
pub type Letter = u8;

const NAMES: [char; 4] = ['a', 'A', 'b', 'B'];

fn inverse(x: Letter) -> Letter {
    x ^ 1
}

pub fn word_string(w: &[Letter]) -> String {
    if w.is_empty() {
        "e".to_string()
    } else {
        w.iter().map(|&x| NAMES[x as usize]).collect()
    }
}

pub fn parse_word(s: &str) -> Result<Vec<Letter>> {
    if s == "e" || s.is_empty() {
        return Ok(Vec::new());
    }
    let w: Vec<Letter> = s
        .chars()
        .map(|c| {
            NAMES
                .iter()
                .position(|&n| n == c)
                .map(|i| i as Letter)
                .ok_or_else(|| Error::domain(format!("`{c}` is not one of a, A, b, B")))
        })
        .collect::<Result<_>>()?;
    Ok(reduce(&w))
}

/// Free reduction.
pub fn reduce(w: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &x in w {
        if out.last() == Some(&inverse(x)) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

pub fn invert(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|&x| inverse(x)).collect()
}

/// An endomorphism of the free group given by the images of `a` and `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordMap {
    images: [Vec<Letter>; 4],
    source: String,
}

impl WordMap {
    /// Parses `a=<word>;b=<word>`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut a = None;
        let mut b = None;
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("word map entry `{part}` lacks `=`")))?;
            let img = parse_word(v.trim())?;
            match k.trim() {
                "a" => a = Some(img),
                "b" => b = Some(img),
                other => return Err(Error::domain(format!("word map sets unknown generator `{other}`"))),
            }
        }
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::domain("word map must set both a and b")),
        };
        Ok(WordMap {
            images: [a.clone(), invert(&a), b.clone(), invert(&b)],
            source: s.to_string(),
        })
    }

    pub fn apply(&self, w: &[Letter]) -> Vec<Letter> {
        let mut out = Vec::new();
        for &x in w {
            out.extend_from_slice(&self.images[x as usize]);
        }
        reduce(&out)
    }

    pub fn fixes_a(&self) -> bool {
        self.images[0] == [0]
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// The radius-`r` ball about the identity, group elements first in BFS
/// order (letters tried as `a, A, b, B`), then one midpoint per `b`-edge.
#[derive(Clone, Debug)]
pub struct FreeGroupBall {
    pub radius: u32,
    pub words: Vec<Vec<Letter>>,
    pub graph: MetricGraph,
    index: HashMap<Vec<Letter>, usize>,
    /// Midpoint of the `b`-edge between `g` and `h`, keyed by `(min, max)`.
    midpoints: HashMap<(usize, usize), usize>,
    mid_ends: Vec<(usize, usize)>,
}

impl FreeGroupBall {
    pub fn new(radius: u32, id: impl Into<String>) -> Result<Self> {
        if radius > 12 {
            return Err(Error::domain("free-group balls above radius 12 are not supported"));
        }
        let mut words: Vec<Vec<Letter>> = vec![Vec::new()];
        let mut index: HashMap<Vec<Letter>, usize> = HashMap::from([(Vec::new(), 0)]);
        let mut head = 0;
        let mut tree_edges: Vec<(usize, usize, Letter)> = Vec::new();
        while head < words.len() {
            let w = words[head].clone();
            if (w.len() as u32) < radius {
                for x in 0..4u8 {
                    if w.last() == Some(&inverse(x)) {
                        continue;
                    }
                    let mut nw = w.clone();
                    nw.push(x);
                    let id = words.len();
                    index.insert(nw.clone(), id);
                    words.push(nw);
                    tree_edges.push((head, id, x));
                }
            }
            head += 1;
        }
        let group_n = words.len();
        let mut b = GraphBuilder::new(group_n);
        let half = Ratio::new(1, 2);
        let mut midpoints = HashMap::new();
        let mut mid_ends = Vec::new();
        for (i, w) in words.iter().enumerate() {
            b.label(i, word_string(w));
        }
        for &(u, v, x) in &tree_edges {
            if x < 2 {
                b.add_edge(u, v, Ratio::from_integer(1))?;
            } else {
                let m = b.add_vertex();
                b.label(m, format!("{}|{}", word_string(&words[u]), word_string(&words[v])));
                b.add_edge(u, m, half)?;
                b.add_edge(m, v, half)?;
                midpoints.insert((u.min(v), u.max(v)), m);
                mid_ends.push((u, v));
            }
        }
        Ok(FreeGroupBall {
            radius,
            words,
            graph: b.build(id)?,
            index,
            midpoints,
            mid_ends,
        })
    }

    pub fn group_n(&self) -> usize {
        self.words.len()
    }

    pub fn is_element(&self, v: usize) -> bool {
        v < self.group_n()
    }

    pub fn element(&self, w: &[Letter]) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn midpoint(&self, g: usize, h: usize) -> Option<usize> {
        self.midpoints.get(&(g.min(h), g.max(h))).copied()
    }

    /// `(g, h)` with `g` the endpoint nearer the identity, for a midpoint `m`.
    pub fn midpoint_ends(&self, m: usize) -> Option<(usize, usize)> {
        m.checked_sub(self.group_n()).and_then(|i| self.mid_ends.get(i)).copied()
    }

    /// Maximal segments of `<a>`-cosets among the elements in `keep`, named
    /// `H[<shortest element>]`.
    pub fn coset_segments(&self, keep: impl Fn(usize) -> bool) -> Vec<(String, Vec<usize>)> {
        let mut seen = vec![false; self.group_n()];
        let mut out = Vec::new();
        for start in 0..self.group_n() {
            if seen[start] || !keep(start) {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let g = comp[i];
                for x in [0u8, 1] {
                    let mut nw = self.words[g].clone();
                    nw.push(x);
                    if let Some(h) = self.element(&reduce(&nw)) {
                        if keep(h) && !seen[h] {
                            seen[h] = true;
                            comp.push(h);
                        }
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            let rep = comp
                .iter()
                .min_by_key(|&&g| (self.words[g].len(), g))
                .copied()
                .unwrap();
            out.push((format!("H[{}]", word_string(&self.words[rep])), comp));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::{frac, int};

    #[test]
    fn ball_sizes_and_metric() {
        for r in 0..5u32 {
            let ball = FreeGroupBall::new(r, "F").unwrap();
            // 2·3^r − 1 elements
            assert_eq!(ball.group_n() as i64, 2 * 3i64.pow(r) - 1);
        }
        let ball = FreeGroupBall::new(3, "F").unwrap();
        let bab = ball.element(&parse_word("bab").unwrap()).unwrap();
        assert_eq!(ball.graph.distance(0, bab).unwrap(), int(3));
        let m = ball.midpoint(0, ball.element(&[2]).unwrap()).unwrap();
        assert_eq!(m, ball.group_n());
        assert_eq!(ball.graph.distance(0, m).unwrap(), frac(1, 2));
        assert_eq!(ball.graph.label(bab), Some("bab"));
    }

    #[test]
    fn word_maps() {
        let phi = WordMap::parse("a=a;b=ba").unwrap();
        assert!(phi.fixes_a());
        assert_eq!(word_string(&phi.apply(&parse_word("bA").unwrap())), "b");
        assert_eq!(word_string(&phi.apply(&parse_word("B").unwrap())), "AB");
        assert!(WordMap::parse("a=a").is_err());
        assert!(WordMap::parse("a=a;c=b").is_err());
    }

    #[test]
    fn cosets_partition_elements() {
        let ball = FreeGroupBall::new(3, "F").unwrap();
        let segs = ball.coset_segments(|_| true);
        let total: usize = segs.iter().map(|s| s.1.len()).sum();
        assert_eq!(total, ball.group_n());
        let id_coset = segs.iter().find(|s| s.0 == "H[e]").unwrap();
        // a^k for |k| <= 3
        assert_eq!(id_coset.1.len(), 7);
    }
}
