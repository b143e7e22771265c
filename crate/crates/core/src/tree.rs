//! Rooted ordered (plane) trees and the leaf-cutting reduction.
//!
//! A [`TreeShape`] is stored as its preorder out-degree sequence (the
//! Łukasiewicz word). Every traversal below is a linear scan with an explicit
//! stack, so no operation recurses on the call stack and tree height is
//! unbounded in practice (sampled trees have height of order `sqrt(n)`, path
//! trees height `n - 1`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A rooted ordered tree with at least one vertex.
///
/// The empty tree is never a `TreeShape`; operations that can exhaust a tree
/// return `Option<TreeShape>` instead.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeShape {
    degrees: Vec<u32>,
}

/// Per-vertex data handed to a toll function by [`additive_parameter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fringe {
    pub size: usize,
    pub height: usize,
    pub root_degree: usize,
}

impl TreeShape {
    pub fn leaf() -> Self {
        TreeShape { degrees: vec![0] }
    }

    /// Root with the given ordered branches.
    pub fn from_children(children: Vec<TreeShape>) -> Self {
        let total: usize = children.iter().map(TreeShape::size).sum();
        let mut degrees = Vec::with_capacity(total + 1);
        degrees.push(children.len() as u32);
        for c in children {
            degrees.extend_from_slice(&c.degrees);
        }
        TreeShape { degrees }
    }

    /// Build from a preorder out-degree sequence, checking that it encodes
    /// exactly one tree.
    pub fn from_degrees(degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::Parse("empty degree sequence".into()));
        }
        // Łukasiewicz condition: partial sums of (d - 1) stay >= 0 until the
        // last vertex, where they hit -1.
        let mut open: i64 = 1;
        for (i, &d) in degrees.iter().enumerate() {
            open += i64::from(d) - 1;
            if open == 0 && i + 1 != degrees.len() {
                return Err(Error::Parse(format!(
                    "degree sequence closes early at position {i}"
                )));
            }
        }
        if open != 0 {
            return Err(Error::Parse("degree sequence does not close".into()));
        }
        Ok(TreeShape { degrees })
    }

    /// Path with `n` vertices (height `n - 1`).
    pub fn path(n: usize) -> Self {
        assert!(n >= 1, "a path needs at least one vertex");
        let mut degrees = vec![1; n];
        degrees[n - 1] = 0;
        TreeShape { degrees }
    }

    /// Root with `k` leaf children.
    pub fn star(k: usize) -> Self {
        let mut degrees = vec![0; k + 1];
        degrees[0] = k as u32;
        TreeShape { degrees }
    }

    /// Complete `d`-ary tree of the given height.
    pub fn complete(d: usize, height: usize) -> Self {
        // preorder of a complete tree: a vertex at depth < height has d children
        let mut degrees = Vec::new();
        let mut stack = vec![0usize];
        while let Some(depth) = stack.pop() {
            if depth < height {
                degrees.push(d as u32);
                stack.extend(std::iter::repeat(depth + 1).take(d));
            } else {
                degrees.push(0);
            }
        }
        TreeShape { degrees }
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    pub fn root_degree(&self) -> usize {
        self.degrees[0] as usize
    }

    pub fn is_leaf(&self) -> bool {
        self.degrees.len() == 1
    }

    /// The fringe subtrees rooted at the children of the root, in order.
    pub fn branches(&self) -> Vec<TreeShape> {
        let mut out = Vec::with_capacity(self.root_degree());
        let mut start = 1;
        while start < self.degrees.len() {
            let end = start + subtree_len(&self.degrees[start..]);
            out.push(TreeShape {
                degrees: self.degrees[start..end].to_vec(),
            });
            start = end;
        }
        out
    }

    /// `N_j(t)`: number of vertices with exactly `j` children, indexed by `j`.
    pub fn degree_counts(&self) -> Vec<usize> {
        let max = self.degrees.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0; max + 1];
        for &d in &self.degrees {
            counts[d as usize] += 1;
        }
        counts
    }

    /// Height of the fringe subtree at every vertex, in preorder.
    pub fn fringe_heights(&self) -> Vec<usize> {
        self.fringe_data().into_iter().map(|f| f.height).collect()
    }

    fn fringe_data(&self) -> Vec<Fringe> {
        let n = self.degrees.len();
        let mut out = vec![
            Fringe {
                size: 0,
                height: 0,
                root_degree: 0
            };
            n
        ];
        // reverse preorder: the top `d` stack entries are the children of the
        // current vertex
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for i in (0..n).rev() {
            let d = self.degrees[i] as usize;
            let mut size = 1;
            let mut height = 0;
            for _ in 0..d {
                let (s, h) = stack.pop().expect("valid degree sequence");
                size += s;
                height = height.max(h + 1);
            }
            stack.push((size, height));
            out[i] = Fringe {
                size,
                height,
                root_degree: d,
            };
        }
        out
    }

    pub fn height(&self) -> usize {
        // depth-first scan tracking depth; avoids materialising fringe data
        let mut max_depth = 0;
        let mut pending: Vec<u32> = Vec::new();
        for &d in &self.degrees {
            let depth = pending.len();
            max_depth = max_depth.max(depth);
            if d > 0 {
                pending.push(d);
            } else {
                while let Some(top) = pending.last_mut() {
                    *top -= 1;
                    if *top == 0 {
                        pending.pop();
                    } else {
                        break;
                    }
                }
            }
        }
        max_depth
    }

    /// Remove every leaf. `None` when the tree is a single vertex.
    pub fn cut_leaves(&self) -> Option<TreeShape> {
        if self.is_leaf() {
            return None;
        }
        let n = self.degrees.len();
        let mut new_degree = vec![0u32; n];
        // stack of (vertex index, children still to visit)
        let mut stack: Vec<(usize, u32)> = Vec::new();
        for i in 0..n {
            let d = self.degrees[i];
            if let Some(top) = stack.last_mut() {
                if d > 0 {
                    new_degree[top.0] += 1;
                }
                top.1 -= 1;
            }
            if d > 0 {
                stack.push((i, d));
            }
            while matches!(stack.last(), Some(&(_, 0))) {
                stack.pop();
            }
        }
        let degrees = (0..n)
            .filter(|&i| self.degrees[i] > 0)
            .map(|i| new_degree[i])
            .collect();
        Some(TreeShape { degrees })
    }

    /// `r`-fold leaf cutting.
    pub fn reduce(&self, r: usize) -> Option<TreeShape> {
        let mut current = self.clone();
        for _ in 0..r {
            current = current.cut_leaves()?;
        }
        Some(current)
    }
}

/// Length of the first complete subtree encoded at the start of `degrees`.
fn subtree_len(degrees: &[u32]) -> usize {
    let mut open: i64 = 1;
    for (i, &d) in degrees.iter().enumerate() {
        open += i64::from(d) - 1;
        if open == 0 {
            return i + 1;
        }
    }
    degrees.len()
}

pub fn height(t: &TreeShape) -> usize {
    t.height()
}

pub fn cut_leaves(t: &TreeShape) -> Option<TreeShape> {
    t.cut_leaves()
}

pub fn reduce(t: &TreeShape, r: usize) -> Option<TreeShape> {
    t.reduce(r)
}

/// Number of vertices deleted by `r` rounds of leaf cutting, computed by
/// actually performing the rounds.
pub fn removed_operational(t: &TreeShape, r: usize) -> usize {
    t.size() - t.reduce(r).map_or(0, |s| s.size())
}

/// Sum of `toll` over all fringe subtrees of `t`.
pub fn additive_parameter<F>(t: &TreeShape, toll: F) -> u64
where
    F: Fn(&Fringe) -> u64,
{
    t.fringe_data().iter().map(toll).sum()
}

/// Number of vertices deleted by `r` rounds of leaf cutting, computed as the
/// additive parameter whose toll is `[height < r]`.
pub fn removed_additive(t: &TreeShape, r: usize) -> usize {
    assert!(r >= 1, "removed_additive needs r >= 1");
    additive_parameter(t, |f| u64::from(f.height < r)) as usize
}

impl fmt::Display for TreeShape {
    /// Nested parentheses: a leaf is `()`, a root with children `c1 c2` is `(c1c2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::with_capacity(2 * self.degrees.len());
        let mut pending: Vec<u32> = Vec::new();
        for &d in &self.degrees {
            out.push('(');
            if d > 0 {
                pending.push(d);
                continue;
            }
            out.push(')');
            while let Some(top) = pending.last_mut() {
                *top -= 1;
                if *top == 0 {
                    pending.pop();
                    out.push(')');
                } else {
                    break;
                }
            }
        }
        f.write_str(&out)
    }
}

impl fmt::Debug for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeShape({self})")
    }
}

impl FromStr for TreeShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut degrees: Vec<u32> = Vec::new();
        // indices into `degrees` of currently open vertices
        let mut open: Vec<usize> = Vec::new();
        let mut closed_root = false;
        for (pos, ch) in s.chars().filter(|c| !c.is_whitespace()).enumerate() {
            if closed_root {
                return Err(Error::Parse(format!("trailing input at {pos}")));
            }
            match ch {
                '(' => {
                    if let Some(&parent) = open.last() {
                        degrees[parent] += 1;
                    }
                    open.push(degrees.len());
                    degrees.push(0);
                }
                ')' => {
                    open.pop()
                        .ok_or_else(|| Error::Parse(format!("unbalanced ')' at {pos}")))?;
                    closed_root = open.is_empty();
                }
                other => return Err(Error::Parse(format!("unexpected {other:?} at {pos}"))),
            }
        }
        if !closed_root {
            return Err(Error::Parse("unterminated tree".into()));
        }
        Ok(TreeShape { degrees })
    }
}
