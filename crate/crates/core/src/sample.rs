//! Random instances for property tests and the acceptance harness: graphs
//! with fins, shuffled presentations of the same object, and mutations of
//! covering maps that are guaranteed to break them.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cover::{CoveringMap, FinImage};
use crate::fins::{Direction, Fin, GraphWithFins};
use crate::graph::{Dart, Graph};
use crate::words::primitive_period;

/// Connected graph on `1..=max_vertices` vertices with first Betti number at
/// least one: a random tree plus `1..=extra` further edges (loops allowed).
pub fn random_connected_graph<R: Rng + ?Sized>(max_vertices: usize, extra: usize, rng: &mut R) -> Graph {
    let n = rng.gen_range(1..=max_vertices.max(1));
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    for _ in 0..rng.gen_range(1..=extra.max(1)) {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    let names = (0..n).map(|v| format!("v{v}")).collect();
    let edges = edges.into_iter().enumerate().map(|(i, (a, b))| (format!("e{i}"), a, b)).collect();
    Graph::new(names, edges).expect("random graph is well formed")
}

/// A closed immersed walk, found by non-backtracking random walks that stop
/// when they can close up.
pub fn random_immersed_loop<R: Rng + ?Sized>(g: &Graph, max_len: usize, rng: &mut R) -> Option<Vec<Dart>> {
    for _ in 0..64 {
        let start = rng.gen_range(0..g.num_vertices());
        let mut walk: Vec<Dart> = Vec::new();
        let mut cur = start;
        while walk.len() < max_len {
            let options: Vec<Dart> = g
                .star(cur)
                .iter()
                .copied()
                .filter(|&d| walk.last().is_none_or(|&l| d != l.reverse()))
                .collect();
            let Some(&d) = options.choose(rng) else { break };
            walk.push(d);
            cur = g.terminus(d);
            if cur == start && walk[0] != d.reverse() && rng.gen_bool(0.5) {
                return Some(walk);
            }
        }
        if cur == start && !walk.is_empty() && walk[0] != walk[walk.len() - 1].reverse() {
            return Some(walk);
        }
    }
    None
}

/// Random connected graph with `1..=max_fins` fins. Every oriented fin gets
/// its own fresh colour unless `palette` is positive, in which case colours
/// are drawn from `palette` shared tokens.
pub fn random_gwf<R: Rng + ?Sized>(
    max_vertices: usize,
    max_fins: usize,
    palette: usize,
    rng: &mut R,
) -> GraphWithFins {
    loop {
        let g = random_connected_graph(max_vertices, 3, rng);
        let k = rng.gen_range(1..=max_fins.max(1));
        let mut fins = Vec::new();
        for i in 0..k {
            match random_immersed_loop(&g, 2 * g.num_vertices() + 4, rng) {
                Some(cycle) => fins.push(Fin { name: format!("s{i}"), cycle }),
                None => break,
            }
        }
        if fins.len() < k {
            continue;
        }
        let colours = (0..k)
            .map(|i| {
                if palette == 0 {
                    [format!("c{i}+"), format!("c{i}-")]
                } else {
                    [format!("k{}", rng.gen_range(0..palette)), format!("k{}", rng.gen_range(0..palette))]
                }
            })
            .collect();
        return GraphWithFins::new_connected(g, fins, colours).expect("random loops are immersed");
    }
}

/// The same object presented differently: vertices, edges and fins are
/// renamed and permuted, edges may be reversed, and fins may be rotated or
/// read backwards (with their colour pairs swapped to match).
///
/// Returns the new presentation and the isomorphism from `x` onto it.
pub fn reserialize<R: Rng + ?Sized>(x: &GraphWithFins, rng: &mut R) -> (GraphWithFins, CoveringMap) {
    let g = x.graph();
    let mut vperm: Vec<usize> = (0..g.num_vertices()).collect();
    vperm.shuffle(rng);
    let mut eperm: Vec<usize> = (0..g.num_edges()).collect();
    eperm.shuffle(rng);
    let flip: Vec<bool> = (0..g.num_edges()).map(|_| rng.gen_bool(0.5)).collect();

    let mut edges = vec![(String::new(), 0, 0); g.num_edges()];
    for e in 0..g.num_edges() {
        let (a, b) = g.edge_ends(e);
        let (a, b) = if flip[e] { (b, a) } else { (a, b) };
        edges[eperm[e]] = (format!("E{}", eperm[e]), vperm[a], vperm[b]);
    }
    let mut names = vec![String::new(); g.num_vertices()];
    for v in 0..g.num_vertices() {
        names[vperm[v]] = format!("V{}", vperm[v]);
    }
    let graph = Graph::new(names, edges).expect("permuted graph is well formed");
    let dart_map: Vec<Dart> = g.darts().map(|d| Dart::new(eperm[d.edge()], d.is_forward() != flip[d.edge()])).collect();

    let mut fperm: Vec<usize> = (0..x.num_fins()).collect();
    fperm.shuffle(rng);
    let mut fins = vec![Fin { name: String::new(), cycle: Vec::new() }; x.num_fins()];
    let mut colours = vec![[String::new(), String::new()]; x.num_fins()];
    let mut fin_map = vec![FinImage { fin: 0, offset: 0, degree: 1, dir: Direction::Forward }; x.num_fins()];
    for (f, fin) in x.fins().iter().enumerate() {
        let len = fin.len();
        let dir = if rng.gen_bool(0.5) { Direction::Forward } else { Direction::Backward };
        let shift = rng.gen_range(0..len);
        let seq = fin.darts(dir);
        let cycle: Vec<Dart> = (0..len).map(|i| dart_map[seq[(i + shift) % len].0]).collect();
        fins[fperm[f]] = Fin { name: format!("F{}", fperm[f]), cycle };
        let [a, b] = x.colour_pairs()[f].clone();
        colours[fperm[f]] = if dir == Direction::Forward { [a, b] } else { [b, a] };
        // source position p sits at new position (p - shift) forward, or at
        // (-p - shift) when read backwards; both normalise to the offset below.
        let offset = match dir {
            Direction::Forward => (len - shift) % len,
            Direction::Backward => shift,
        };
        fin_map[f] = FinImage { fin: fperm[f], offset, degree: 1, dir };
    }
    let y = GraphWithFins::new(graph, fins, colours).expect("presentation of a valid object");
    (y, CoveringMap { vertex_map: (0..g.num_vertices()).map(|v| vperm[v]).collect(), dart_map, fin_map })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    VertexImage,
    DartImage,
    FinDegree,
    FinDirection,
    FinOffset,
    Colour,
}

/// Applies a random mutation that no valid covering survives. Returns the
/// (possibly recoloured) source, the broken map and the mutation used.
pub fn break_cover<R: Rng + ?Sized>(
    source: &GraphWithFins,
    target: &GraphWithFins,
    map: &CoveringMap,
    rng: &mut R,
) -> (GraphWithFins, CoveringMap, Mutation) {
    loop {
        let mut m = map.clone();
        let kind = *[
            Mutation::VertexImage,
            Mutation::DartImage,
            Mutation::FinDegree,
            Mutation::FinDirection,
            Mutation::FinOffset,
            Mutation::Colour,
        ]
        .choose(rng)
        .expect("nonempty");
        match kind {
            Mutation::VertexImage => {
                let n = target.num_vertices();
                if n < 2 {
                    continue;
                }
                let v = rng.gen_range(0..m.vertex_map.len());
                m.vertex_map[v] = (m.vertex_map[v] + rng.gen_range(1..n)) % n;
            }
            Mutation::DartImage => {
                let n = target.graph().num_darts();
                let d = rng.gen_range(0..m.dart_map.len());
                m.dart_map[d] = Dart((m.dart_map[d].0 + rng.gen_range(1..n)) % n);
            }
            Mutation::FinDegree => {
                let f = rng.gen_range(0..m.fin_map.len());
                m.fin_map[f].degree += 1;
            }
            Mutation::FinDirection => {
                let f = rng.gen_range(0..m.fin_map.len());
                m.fin_map[f].dir = m.fin_map[f].dir.reverse();
            }
            Mutation::FinOffset => {
                let f = rng.gen_range(0..m.fin_map.len());
                let t = target.fin(m.fin_map[f].fin);
                // a rotation symmetric fin would accept some shifted offsets
                if t.len() < 2 || primitive_period(&t.cycle) != t.len() {
                    continue;
                }
                m.fin_map[f].offset = (m.fin_map[f].offset + rng.gen_range(1..t.len())) % t.len();
            }
            Mutation::Colour => {
                let f = rng.gen_range(0..source.num_fins());
                let mut colours = source.colour_pairs().to_vec();
                colours[f][rng.gen_range(0..2)] = "mutated".into();
                let recoloured = source.with_colours(colours).expect("same fins");
                return (recoloured, m, kind);
            }
        }
        return (source.clone(), m, kind);
    }
}
