use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative description of a tree: layer-ordered infoset identifiers, a uniform action
/// count and the `"x,a" -> [children]` map. Optional per-episode environment blocks ride
/// along for file-driven runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub horizon: usize,
    pub layers: Vec<Vec<String>>,
    pub num_actions: usize,
    #[serde(default)]
    pub children: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<EnvFile>,
}

/// One episode's adversary choice in a desc file. Missing entries default to uniform
/// initial/transition distributions and zero reward.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvFile {
    #[serde(default)]
    pub initial: BTreeMap<String, f64>,
    #[serde(default)]
    pub transition: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub reward: BTreeMap<String, f64>,
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses a `"x,a"` key. The action part is split at the last comma so ids may contain commas.
pub(crate) fn parse_seq_key(key: &str) -> Result<(&str, usize)> {
    let (x, a) = key
        .rsplit_once(',')
        .ok_or_else(|| Error::InvalidGameFile(format!("sequence key `{key}` is not `x,a`")))?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| Error::InvalidGameFile(format!("bad action index in `{key}`")))?;
    Ok((x.trim(), a))
}

/// Immutable tree of infosets and actions. Infosets are densely indexed in layer order, so
/// ascending index order is top-down and descending index order is bottom-up. A sequence
/// `(x, a)` is addressed as `x * A + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct GameTree {
    horizon: usize,
    num_actions: usize,
    names: Vec<String>,
    index: HashMap<String, usize>,
    layer_of: Vec<usize>,
    layers: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    parent_seq: Vec<Option<usize>>,
    history: Vec<Vec<usize>>,
    subtree: Vec<Vec<usize>>,
}

impl GameTree {
    /// Validates `desc` and precomputes parent sequences, histories and subtrees.
    pub fn build(desc: &GameFile) -> Result<Self> {
        let a_count = desc.num_actions;
        if a_count == 0 {
            return Err(Error::InvalidGameFile("num_actions must be positive".into()));
        }
        if desc.layers.is_empty() || desc.horizon != desc.layers.len() {
            return Err(Error::InvalidGameFile(format!(
                "horizon {} does not match {} layers",
                desc.horizon,
                desc.layers.len()
            )));
        }
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let mut layer_of = Vec::new();
        let mut layers = Vec::with_capacity(desc.layers.len());
        for (h, layer) in desc.layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(Error::InvalidGameFile(format!("layer {} is empty", h + 1)));
            }
            let mut ids = Vec::with_capacity(layer.len());
            for name in layer {
                let x = names.len();
                if index.insert(name.clone(), x).is_some() {
                    return Err(Error::InvalidGameFile(format!("duplicate infoset `{name}`")));
                }
                names.push(name.clone());
                layer_of.push(h);
                ids.push(x);
            }
            layers.push(ids);
        }
        let n = names.len();
        let mut children = vec![Vec::new(); n * a_count];
        let mut parent_seq: Vec<Option<usize>> = vec![None; n];
        for (key, kids) in &desc.children {
            let (xname, a) = parse_seq_key(key)?;
            let x = *index
                .get(xname)
                .ok_or_else(|| Error::UnknownInfoset(xname.to_string()))?;
            if a >= a_count {
                return Err(Error::InvalidGameFile(format!("action {a} out of range in `{key}`")));
            }
            let h = layer_of[x];
            for kid in kids {
                let c = *index
                    .get(kid.as_str())
                    .ok_or_else(|| Error::UnknownInfoset(kid.clone()))?;
                if layer_of[c] != h + 1 {
                    // A child outside the next layer either points backwards (a cycle) or skips layers.
                    return Err(Error::InvalidGameFile(format!(
                        "child `{kid}` of `{key}` is in layer {} but must be in layer {}",
                        layer_of[c] + 1,
                        h + 2
                    )));
                }
                let seq = x * a_count + a;
                if let Some(prev) = parent_seq[c] {
                    return Err(Error::NotAPartition {
                        layer: h + 2,
                        detail: format!(
                            "`{kid}` is a child of both `{},{}` and `{key}`",
                            names[prev / a_count],
                            prev % a_count
                        ),
                    });
                }
                parent_seq[c] = Some(seq);
                children[seq].push(c);
            }
        }
        for (x, p) in parent_seq.iter().enumerate() {
            if layer_of[x] > 0 && p.is_none() {
                return Err(Error::NotAPartition {
                    layer: layer_of[x] + 1,
                    detail: format!("`{}` is not the child of any sequence", names[x]),
                });
            }
        }
        for kids in &mut children {
            kids.sort_unstable();
        }
        let mut history: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            if let Some(p) = parent_seq[x] {
                let mut hist = history[p / a_count].clone();
                hist.push(p);
                history[x] = hist;
            }
        }
        let mut subtree: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
        for x in (0..n).rev() {
            if let Some(p) = parent_seq[x] {
                let below = std::mem::take(&mut subtree[x]);
                subtree[p / a_count].extend_from_slice(&below);
                subtree[x] = below;
            }
        }
        for s in &mut subtree {
            s.sort_unstable();
        }
        Ok(GameTree {
            horizon: desc.horizon,
            num_actions: a_count,
            names,
            index,
            layer_of,
            layers,
            children,
            parent_seq,
            history,
            subtree,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_infosets(&self) -> usize {
        self.names.len()
    }

    /// `X * A`, the length of every sequence-form vector.
    pub fn num_sequences(&self) -> usize {
        self.names.len() * self.num_actions
    }

    /// Infosets in layer `h` (0-based).
    pub fn layer(&self, h: usize) -> &[usize] {
        &self.layers[h]
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    /// 0-based layer of infoset `x`.
    pub fn layer_of(&self, x: usize) -> usize {
        self.layer_of[x]
    }

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn infoset(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownInfoset(name.to_string()))
    }

    #[inline]
    pub fn seq(&self, x: usize, a: usize) -> usize {
        x * self.num_actions + a
    }

    /// Splits a sequence index into `(infoset, action)`.
    #[inline]
    pub fn split_seq(&self, seq: usize) -> (usize, usize) {
        (seq / self.num_actions, seq % self.num_actions)
    }

    /// Sequence indices `(x, 0) .. (x, A)`.
    #[inline]
    pub fn seqs_of(&self, x: usize) -> std::ops::Range<usize> {
        x * self.num_actions..(x + 1) * self.num_actions
    }

    /// Immediate children `C(x, a)` of a sequence.
    pub fn children(&self, seq: usize) -> &[usize] {
        &self.children[seq]
    }

    pub fn parent_seq(&self, x: usize) -> Option<usize> {
        self.parent_seq[x]
    }

    /// Sequences on the unique path from layer 1 to the parent of `x` (top-down).
    pub fn history(&self, x: usize) -> &[usize] {
        &self.history[x]
    }

    /// Infosets `x' ⪰ x` including `x`, top-down.
    pub fn subtree(&self, x: usize) -> &[usize] {
        &self.subtree[x]
    }

    /// Whether `x' ⪰ x`.
    pub fn in_subtree(&self, x: usize, of: usize) -> bool {
        x == of
            || self.history[x]
                .iter()
                .any(|&s| self.split_seq(s).0 == of)
    }

    /// Whether sequence `seq ⪰ trigger`, i.e. `seq` equals `trigger` or lies strictly below it.
    pub fn seq_descends(&self, seq: usize, trigger: usize) -> bool {
        seq == trigger || self.history[seq / self.num_actions].contains(&trigger)
    }

    /// Infosets strictly below a sequence, top-down.
    pub fn infosets_below(&self, seq: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.children[seq]
            .iter()
            .flat_map(|&c| self.subtree[c].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Back-conversion to the declarative form.
    pub fn to_file(&self) -> GameFile {
        let layers = self
            .layers
            .iter()
            .map(|l| l.iter().map(|&x| self.names[x].clone()).collect())
            .collect();
        let mut children = BTreeMap::new();
        for (seq, kids) in self.children.iter().enumerate() {
            if kids.is_empty() {
                continue;
            }
            let (x, a) = self.split_seq(seq);
            children.insert(
                format!("{},{}", self.names[x], a),
                kids.iter().map(|&c| self.names[c].clone()).collect(),
            );
        }
        GameFile {
            horizon: self.horizon,
            layers,
            num_actions: self.num_actions,
            children,
            schedule: Vec::new(),
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    fn desc(layers: &[&[&str]], a: usize, kids: &[(&str, &[&str])]) -> GameFile {
        GameFile {
            horizon: layers.len(),
            layers: layers
                .iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect(),
            num_actions: a,
            children: kids
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
                .collect(),
            schedule: vec![],
        }
    }

    /// One infoset, two actions.
    pub fn single() -> GameTree {
        GameTree::build(&desc(&[&["x1"]], 2, &[])).unwrap()
    }

    /// `x1 -> (a: x2a, b: x2b)`, two actions everywhere.
    pub fn depth_two() -> GameTree {
        GameTree::build(&desc(
            &[&["x1"], &["x2a", "x2b"]],
            2,
            &[("x1,0", &["x2a"]), ("x1,1", &["x2b"])],
        ))
        .unwrap()
    }

    pub fn file_of(layers: &[&[&str]], a: usize, kids: &[(&str, &[&str])]) -> GameFile {
        desc(layers, a, kids)
    }
}
