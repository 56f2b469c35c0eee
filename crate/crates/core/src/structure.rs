//! Graph view of degree-2 attention polynomials and the branch decomposition
//! used to dispatch engines.

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;

use crate::poly::AttentionPolynomial;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolyClass {
    /// Degree 2 and the graph is acyclic.
    TreeForest,
    /// Degree 2, exactly one cycle, and that cycle's component is a bare
    /// cycle (every vertex of degree 2). `vertices` lists the cycle starting
    /// at its smallest index and stepping to the smaller neighbour first.
    SingleCycle { length: usize, vertices: Vec<usize> },
    General,
}

impl PolyClass {
    pub fn name(&self) -> &'static str {
        match self {
            PolyClass::TreeForest => "tree",
            PolyClass::SingleCycle { .. } => "cycle",
            PolyClass::General => "general",
        }
    }
}

/// A group of monomials sharing no variable with other branches except `x1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub poly: AttentionPolynomial,
    pub contains_x1: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyStructure {
    /// Adjacency lists indexed by variable (entry 0 unused); present only for
    /// degree-2 polynomials.
    pub adjacency: Option<Vec<Vec<usize>>>,
    pub class: PolyClass,
    pub branches: Vec<Branch>,
    /// Variables other than `x1` that appear in no monomial.
    pub isolated: Vec<usize>,
}

pub fn build_structure(h: &AttentionPolynomial) -> PolyStructure {
    let branches = separate_variables(h);
    let support = h.support();
    let isolated = (2..=h.t()).filter(|v| !support.contains(v)).collect();
    if h.k() != 2 {
        return PolyStructure { adjacency: None, class: PolyClass::General, branches, isolated };
    }
    let adjacency = adjacency(h);
    let class = classify_graph(&adjacency);
    PolyStructure { adjacency: Some(adjacency), class, branches, isolated }
}

pub fn classify(h: &AttentionPolynomial) -> PolyClass {
    if h.k() != 2 {
        return PolyClass::General;
    }
    classify_graph(&adjacency(h))
}

fn adjacency(h: &AttentionPolynomial) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); h.t() + 1];
    for m in h.monomials() {
        let (a, b) = (m.vars()[0], m.vars()[1]);
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn classify_graph(adj: &[Vec<usize>]) -> PolyClass {
    let t = adj.len() - 1;
    let mut uf = UnionFind::<usize>::new(t + 1);
    let mut cyclic_edges = Vec::new();
    for (a, nbrs) in adj.iter().enumerate() {
        for &b in nbrs.iter().filter(|&&b| b > a) {
            if !uf.union(a, b) {
                cyclic_edges.push((a, b));
            }
        }
    }
    match cyclic_edges.as_slice() {
        [] => PolyClass::TreeForest,
        [(a, _)] => {
            let root = uf.find(*a);
            let component: Vec<usize> = (1..=t).filter(|&v| uf.find(v) == root).collect();
            if component.iter().any(|&v| adj[v].len() != 2) {
                return PolyClass::General;
            }
            let start = component[0];
            let mut vertices = vec![start];
            let (mut prev, mut cur) = (start, adj[start][0]);
            while cur != start {
                vertices.push(cur);
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = next;
            }
            PolyClass::SingleCycle { length: vertices.len(), vertices }
        }
        _ => PolyClass::General,
    }
}

/// Splits `h` into maximal branches that pairwise share at most `x1`.
///
/// Variables other than `x1` are grouped by co-occurrence; each group with
/// its monomials forms one branch. Branches are ordered by their smallest
/// non-`x1` variable.
pub fn separate_variables(h: &AttentionPolynomial) -> Vec<Branch> {
    let t = h.t();
    let mut uf = UnionFind::<usize>::new(t + 1);
    for m in h.monomials() {
        let mut rest = m.vars().iter().copied().filter(|&v| v != 1);
        let first = rest.next().expect("degree >= 2 leaves a non-x1 variable");
        for v in rest {
            uf.union(first, v);
        }
    }
    let mut groups: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    let mut key_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    for m in h.monomials() {
        let anchor = *m.vars().iter().find(|&&v| v != 1).expect("non-x1 variable");
        let root = uf.find(anchor);
        let key = *key_of_root
            .entry(root)
            .or_insert_with(|| (2..=t).find(|&v| uf.find(v) == root).expect("root is reachable"));
        groups.entry(key).or_default().push(m.clone());
    }
    groups
        .into_values()
        .map(|monos| {
            let poly = h.restrict(monos);
            let contains_x1 = poly.contains_var(1);
            Branch { poly, contains_x1 }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(text: &str) -> AttentionPolynomial {
        AttentionPolynomial::parse(text).unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&p("x1*x2+x1*x3+x1*x4+x2*x5+x2*x6+x4*x7")), PolyClass::TreeForest);
        assert_eq!(
            classify(&p("x1*x2+x2*x3+x3*x1")),
            PolyClass::SingleCycle { length: 3, vertices: vec![1, 2, 3] }
        );
        assert_eq!(classify(&p("x1*x2*x3")), PolyClass::General);
        assert_eq!(
            classify(&p("x1*x2+x2*x3+x3*x4+x4*x1")),
            PolyClass::SingleCycle { length: 4, vertices: vec![1, 2, 3, 4] }
        );
        assert_eq!(
            classify(&p("x1*x3+x3*x2+x2*x4+x4*x1")),
            PolyClass::SingleCycle { length: 4, vertices: vec![1, 3, 2, 4] }
        );
        // pendant edge on the cycle
        assert_eq!(classify(&p("x1*x2+x2*x3+x3*x1+x3*x4")), PolyClass::General);
        // cycle plus a separate tree component
        assert!(matches!(classify(&p("x1*x2+x2*x3+x3*x1+x4*x5")), PolyClass::SingleCycle { length: 3, .. }));
        assert_eq!(classify(&p("x1*x2+x2*x3+x3*x1+x4*x5+x5*x6+x6*x4")), PolyClass::General);
        assert_eq!(classify(&p("x1*x2+x1*x2*x3")), PolyClass::General);
    }

    #[test]
    fn structure_has_graph_only_for_degree_two() {
        let s = build_structure(&p("x1*x2+x2*x3"));
        let adj = s.adjacency.unwrap();
        assert_eq!(adj[2], vec![1, 3]);
        assert!(build_structure(&p("x1*x2*x3")).adjacency.is_none());
        let s = build_structure(&AttentionPolynomial::parse_with_t("x1*x3", Some(4)).unwrap());
        assert_eq!(s.isolated, vec![2, 4]);
    }

    #[test]
    fn separation_examples() {
        let b = separate_variables(&p("x1*x2+x2*x3+x1*x4+x4*x5"));
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].poly.to_string(), "x1*x2+x2*x3");
        assert_eq!(b[1].poly.to_string(), "x1*x4+x4*x5");
        assert!(b.iter().all(|br| br.contains_x1 && br.poly.t() == 5));

        let b = separate_variables(&p("x1*x2+x2*x3+x3*x1"));
        assert_eq!(b.len(), 1);

        let b = separate_variables(&p("x2*x3"));
        assert_eq!(b.len(), 1);
        assert!(!b[0].contains_x1);

        let b = separate_variables(&p("x1*x2+x2*x3+x3*x1+x4*x5"));
        assert_eq!(b.len(), 2);
        assert!(b[0].contains_x1 && !b[1].contains_x1);

        let b = separate_variables(&p("x1*x2*x3+x1*x4"));
        assert_eq!(b.len(), 2);
    }

    fn arb_degree2() -> impl Strategy<Value = AttentionPolynomial> {
        (2usize..=7).prop_flat_map(|t| {
            let pairs: Vec<Vec<usize>> = (1..=t)
                .flat_map(|a| ((a + 1)..=t).map(move |b| vec![a, b]))
                .collect();
            let len = pairs.len();
            proptest::sample::subsequence(pairs, 1..=len.min(8)).prop_map(move |edges| {
                let monos = edges.into_iter().map(|e| crate::poly::Monomial::new(e).unwrap()).collect();
                AttentionPolynomial::new(monos, Some(t)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn tree_iff_edge_count_bound(h in arb_degree2()) {
            let t = h.t();
            let mut uf = UnionFind::<usize>::new(t + 1);
            for m in h.monomials() {
                uf.union(m.vars()[0], m.vars()[1]);
            }
            let components = (1..=t).filter(|&v| uf.find(v) == v).count();
            let is_tree = h.s() <= t - components;
            prop_assert_eq!(classify(&h) == PolyClass::TreeForest, is_tree);
        }

        #[test]
        fn branches_partition_monomials(h in arb_degree2()) {
            let branches = separate_variables(&h);
            let mut all: Vec<_> = branches.iter().flat_map(|b| b.poly.monomials().to_vec()).collect();
            all.sort_by(crate::poly::monomial_order_cmp);
            prop_assert_eq!(all.as_slice(), h.monomials());
            for (i, a) in branches.iter().enumerate() {
                for b in &branches[i + 1..] {
                    let shared: Vec<_> = a.poly.support().intersection(&b.poly.support()).copied().collect();
                    prop_assert!(shared.iter().all(|&v| v == 1));
                }
            }
        }
    }
}
