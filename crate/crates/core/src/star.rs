//! The star of a vertex: its outgoing darts plus the fin arcs through it,
//! decorated with labels. Arcs join two distinct darts, so a star is a small
//! labelled multigraph on its darts.

use std::collections::BTreeMap;

use crate::fins::{Arc, ArcEnd, GraphWithFins, Side};
use crate::graph::Dart;

#[derive(Clone, Debug)]
pub(crate) struct StarArc {
    pub arc: Arc,
    /// (dart position, end label) for the `Next` and `Prev` ends.
    pub next: (usize, u32),
    pub prev: (usize, u32),
}

#[derive(Clone, Debug)]
pub(crate) struct Star {
    pub darts: Vec<Dart>,
    pub dart_label: Vec<u32>,
    pub arcs: Vec<StarArc>,
    // adj[p][q]: sorted (label at p, label at q) over arcs joining p and q
    adj: Vec<Vec<Vec<(u32, u32)>>>,
}

/// A decorated isomorphism between two stars.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct StarIso {
    pub dart_map: Vec<usize>,
    /// Target arc index and whether `Next` goes to `Prev`.
    pub arc_map: Vec<(usize, bool)>,
}

impl Star {
    pub fn build(
        x: &GraphWithFins,
        v: usize,
        arcs: &[Arc],
        dart_label: impl Fn(Dart) -> u32,
        end_label: impl Fn(ArcEnd) -> u32,
    ) -> Star {
        let darts = x.graph().star(v).to_vec();
        let pos: BTreeMap<Dart, usize> = darts.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let labels = darts.iter().map(|&d| dart_label(d)).collect();
        let arcs: Vec<StarArc> = arcs
            .iter()
            .map(|&arc| {
                let n = ArcEnd { arc, side: Side::Next };
                let p = ArcEnd { arc, side: Side::Prev };
                StarArc {
                    arc,
                    next: (pos[&x.end_dart(n)], end_label(n)),
                    prev: (pos[&x.end_dart(p)], end_label(p)),
                }
            })
            .collect();
        let mut adj = vec![vec![Vec::new(); darts.len()]; darts.len()];
        for a in &arcs {
            adj[a.next.0][a.prev.0].push((a.next.1, a.prev.1));
            adj[a.prev.0][a.next.0].push((a.prev.1, a.next.1));
        }
        for row in &mut adj {
            for cell in row {
                cell.sort();
            }
        }
        Star { darts, dart_label: labels, arcs, adj }
    }

    /// Splits cells until each dart's view of the others is uniform per cell.
    fn refine(&self, mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        loop {
            let mut cell_of = vec![0; self.darts.len()];
            for (i, c) in cells.iter().enumerate() {
                for &p in c {
                    cell_of[p] = i;
                }
            }
            let mut next = Vec::with_capacity(cells.len());
            for c in &cells {
                let mut keyed: Vec<(Vec<(usize, u32, u32)>, usize)> = c
                    .iter()
                    .map(|&p| {
                        let mut sig: Vec<(usize, u32, u32)> = (0..self.darts.len())
                            .flat_map(|q| self.adj[p][q].iter().map(move |&(a, b)| (q, a, b)))
                            .map(|(q, a, b)| (cell_of[q], a, b))
                            .collect();
                        sig.sort();
                        (sig, p)
                    })
                    .collect();
                keyed.sort();
                let mut start = 0;
                for i in 1..=keyed.len() {
                    if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                        next.push(keyed[start..i].iter().map(|k| k.1).collect());
                        start = i;
                    }
                }
            }
            if next.len() == cells.len() {
                return next;
            }
            cells = next;
        }
    }

    fn encode(&self, order: &[usize]) -> Vec<u32> {
        let mut at = vec![0u32; order.len()];
        for (i, &p) in order.iter().enumerate() {
            at[p] = i as u32;
        }
        let mut arcs: Vec<[u32; 4]> = self
            .arcs
            .iter()
            .map(|a| {
                let x = (at[a.next.0], a.next.1);
                let y = (at[a.prev.0], a.prev.1);
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                [lo.0, lo.1, hi.0, hi.1]
            })
            .collect();
        arcs.sort();
        let mut code: Vec<u32> = order.iter().map(|&p| self.dart_label[p]).collect();
        code.push(u32::MAX);
        code.extend(arcs.into_iter().flatten());
        code
    }

    fn search(&self, cells: Vec<Vec<usize>>, best: &mut Option<Vec<u32>>) {
        let cells = self.refine(cells);
        match cells.iter().position(|c| c.len() > 1) {
            None => {
                let order: Vec<usize> = cells.into_iter().flatten().collect();
                let code = self.encode(&order);
                if best.as_ref().is_none_or(|b| code < *b) {
                    *best = Some(code);
                }
            }
            Some(i) => {
                for &p in &cells[i] {
                    let mut split = cells[..i].to_vec();
                    split.push(vec![p]);
                    split.push(cells[i].iter().copied().filter(|&q| q != p).collect());
                    split.extend(cells[i + 1..].iter().cloned());
                    self.search(split, best);
                }
            }
        }
    }

    /// Isomorphism-invariant code: equal codes iff decorated stars are isomorphic.
    pub fn canonical_form(&self) -> Vec<u32> {
        let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (p, &l) in self.dart_label.iter().enumerate() {
            by_label.entry(l).or_default().push(p);
        }
        let mut best = None;
        self.search(by_label.into_values().collect(), &mut best);
        best.unwrap_or_default()
    }

    /// Canonical form of the star with one dart marked, per dart. Two darts
    /// get equal forms iff an automorphism of the star swaps them.
    pub fn pointed_forms(&self) -> Vec<Vec<u32>> {
        let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (p, &l) in self.dart_label.iter().enumerate() {
            by_label.entry(l).or_default().push(p);
        }
        let cells: Vec<Vec<usize>> = by_label.into_values().collect();
        (0..self.darts.len())
            .map(|p| {
                let mut split = Vec::with_capacity(cells.len() + 1);
                for c in &cells {
                    if c.contains(&p) {
                        split.push(vec![p]);
                        let rest: Vec<usize> = c.iter().copied().filter(|&q| q != p).collect();
                        if !rest.is_empty() {
                            split.push(rest);
                        }
                    } else {
                        split.push(c.clone());
                    }
                }
                let mut best = None;
                self.search(split, &mut best);
                best.unwrap_or_default()
            })
            .collect()
    }

    /// All decorated isomorphisms `self -> other`, in lexicographic order.
    pub fn isomorphisms(&self, other: &Star, limit: usize) -> Result<Vec<StarIso>, usize> {
        let n = self.darts.len();
        if n != other.darts.len() || self.arcs.len() != other.arcs.len() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        self.assign(other, 0, &mut map, &mut used, &mut out, limit)?;
        Ok(out)
    }

    fn assign(
        &self,
        other: &Star,
        p: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<StarIso>,
        limit: usize,
    ) -> Result<(), usize> {
        if p == self.darts.len() {
            return self.match_arcs(other, map, out, limit);
        }
        for q in 0..other.darts.len() {
            if used[q] || other.dart_label[q] != self.dart_label[p] {
                continue;
            }
            if other.adj[q][q].len() != self.adj[p][p].len() {
                continue;
            }
            let compatible = (0..p).all(|r| self.adj[p][r] == other.adj[q][map[r]]);
            if !compatible {
                continue;
            }
            map[p] = q;
            used[q] = true;
            self.assign(other, p + 1, map, used, out, limit)?;
            used[q] = false;
            map[p] = usize::MAX;
        }
        Ok(())
    }

    fn match_arcs(
        &self,
        other: &Star,
        map: &[usize],
        out: &mut Vec<StarIso>,
        limit: usize,
    ) -> Result<(), usize> {
        type Key = ((usize, u32), (usize, u32));
        let key = |x: (usize, u32), y: (usize, u32)| -> Key { if x <= y { (x, y) } else { (y, x) } };
        let mut targets: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
        for (j, b) in other.arcs.iter().enumerate() {
            targets.entry(key(b.next, b.prev)).or_default().push(j);
        }
        let mut groups: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
        for (i, a) in self.arcs.iter().enumerate() {
            let k = key((map[a.next.0], a.next.1), (map[a.prev.0], a.prev.1));
            groups.entry(k).or_default().push(i);
        }
        for (k, src) in &groups {
            if targets.get(k).map_or(0, |t| t.len()) != src.len() {
                return Ok(());
            }
        }
        let mut arc_map = vec![(usize::MAX, false); self.arcs.len()];
        let groups: Vec<(Vec<usize>, Vec<usize>)> =
            groups.into_iter().map(|(k, src)| (src, targets[&k].clone())).collect();
        self.arc_products(other, map, &groups, 0, &mut arc_map, out, limit)
    }

    #[allow(clippy::too_many_arguments)]
    fn arc_products(
        &self,
        other: &Star,
        map: &[usize],
        groups: &[(Vec<usize>, Vec<usize>)],
        g: usize,
        arc_map: &mut Vec<(usize, bool)>,
        out: &mut Vec<StarIso>,
        limit: usize,
    ) -> Result<(), usize> {
        if g == groups.len() {
            if out.len() >= limit {
                return Err(limit);
            }
            out.push(StarIso { dart_map: map.to_vec(), arc_map: arc_map.clone() });
            return Ok(());
        }
        let (src, tgt) = &groups[g];
        for perm in permutations(tgt.len()) {
            for (i, &a) in src.iter().enumerate() {
                let b = tgt[perm[i]];
                let flipped = (map[self.arcs[a].next.0], self.arcs[a].next.1) != other.arcs[b].next;
                arc_map[a] = (b, flipped);
            }
            self.arc_products(other, map, groups, g + 1, arc_map, out, limit)?;
        }
        Ok(())
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}
