use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{violation, Dimension, Hierarchy, Level, SchemaError};
use crate::fdmine::{equivalence_classes, FunctionalDependency};
use crate::profile::{ColumnProfile, Kind};

/// An equivalence class collapsed to one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub parameter: String,
    pub weak_attributes: Vec<String>,
}

impl GraphNode {
    fn level(&self) -> Level {
        Level {
            parameter: self.parameter.clone(),
            weak_attributes: self.weak_attributes.clone(),
        }
    }
}

/// Nodes in column order of their parameters; edges point from the
/// determining node to the determined one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: BTreeSet<(usize, usize)>,
}

impl DependencyGraph {
    pub fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((node, 0)..(node + 1, 0)).map(|&(_, v)| v)
    }

    pub fn node_of(&self, attribute: &str) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.parameter == attribute || n.weak_attributes.iter().any(|w| w == attribute))
    }

    fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(_, v) in &self.edges {
            deg[v] += 1;
        }
        deg
    }

    fn reaches(&self, from: usize, to: usize, skip: (usize, usize)) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for v in self.successors(u) {
                if (u, v) == skip || seen[v] {
                    continue;
                }
                if v == to {
                    return true;
                }
                seen[v] = true;
                stack.push(v);
            }
        }
        false
    }

    fn is_acyclic(&self) -> bool {
        let mut deg = self.in_degrees();
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&u| deg[u] == 0).collect();
        let mut done = 0;
        while let Some(u) = ready.pop() {
            done += 1;
            for v in self.successors(u) {
                deg[v] -= 1;
                if deg[v] == 0 {
                    ready.push(v);
                }
            }
        }
        done == self.nodes.len()
    }
}

/// Collapses equivalence classes and links the classes by the cover edges.
/// Attributes without dependencies become isolated nodes; measures are left
/// out.
pub fn build_dependency_graph(
    fds: &[FunctionalDependency],
    measures: &BTreeSet<String>,
    profiles: &[ColumnProfile],
) -> Result<DependencyGraph, SchemaError> {
    let by_name: HashMap<&str, &ColumnProfile> =
        profiles.iter().map(|p| (p.attribute.as_str(), p)).collect();
    for f in fds {
        for a in [&f.lhs, &f.rhs] {
            if !by_name.contains_key(a.as_str()) {
                return Err(SchemaError::UnknownAttribute(a.clone()));
            }
            if measures.contains(a) {
                return Err(violation(format!("measure `{a}` takes part in a dependency")));
            }
        }
    }

    let mut members: Vec<Vec<&ColumnProfile>> = Vec::new();
    let mut grouped: BTreeSet<&str> = BTreeSet::new();
    for class in equivalence_classes(fds) {
        let mut ps: Vec<&ColumnProfile> = class.iter().map(|a| by_name[a.as_str()]).collect();
        ps.sort_by_key(|p| p.index);
        grouped.extend(class.iter().map(|a| by_name[a.as_str()].attribute.as_str()));
        members.push(ps);
    }
    for p in profiles {
        if !measures.contains(&p.attribute) && !grouped.contains(p.attribute.as_str()) {
            members.push(vec![p]);
        }
    }

    let mut nodes: Vec<(usize, GraphNode)> = members
        .into_iter()
        .map(|ps| {
            let param = ps
                .iter()
                .position(|p| p.kind == Kind::Identifier)
                .unwrap_or(0);
            let node = GraphNode {
                parameter: ps[param].attribute.clone(),
                weak_attributes: ps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != param)
                    .map(|(_, p)| p.attribute.clone())
                    .collect(),
            };
            (ps[param].index, node)
        })
        .collect();
    nodes.sort_by_key(|(i, _)| *i);
    let mut graph = DependencyGraph {
        nodes: nodes.into_iter().map(|(_, n)| n).collect(),
        edges: BTreeSet::new(),
    };

    for f in fds {
        let u = graph.node_of(&f.lhs).expect("attribute has a node");
        let v = graph.node_of(&f.rhs).expect("attribute has a node");
        if u != v {
            graph.edges.insert((u, v));
        }
    }
    if !graph.is_acyclic() {
        return Err(violation("dependency graph has a cycle after collapsing classes"));
    }
    // collapsing can create shortcuts even from a minimal cover
    for e in graph.edges.clone() {
        if graph.reaches(e.0, e.1, e) {
            graph.edges.remove(&e);
        }
    }
    Ok(graph)
}

/// Every maximal path from a root (no incoming edge) to a sink, named H1, H2,
/// ... by root parameter and then by the path's parameters.
pub fn extract_hierarchies(graph: &DependencyGraph) -> Vec<Hierarchy> {
    let deg = graph.in_degrees();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for root in (0..graph.nodes.len()).filter(|&u| deg[u] == 0) {
        let mut stack = vec![vec![root]];
        while let Some(path) = stack.pop() {
            let last = *path.last().expect("non-empty path");
            let next: Vec<usize> = graph.successors(last).collect();
            if next.is_empty() {
                paths.push(path);
                continue;
            }
            for v in next {
                let mut p = path.clone();
                p.push(v);
                stack.push(p);
            }
        }
    }
    let key = |p: &Vec<usize>| -> Vec<&str> { p.iter().map(|&u| graph.nodes[u].parameter.as_str()).collect() };
    paths.sort_by(|a, b| key(a).cmp(&key(b)));
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| Hierarchy {
            name: format!("H{}", i + 1),
            levels: p.iter().map(|&u| graph.nodes[u].level()).collect(),
        })
        .collect()
}

/// One dimension per root parameter, named D1, D2, ... in root order unless
/// `names` renames it (keyed by default name or by root attribute).
pub fn group_dimensions(
    hierarchies: &[Hierarchy],
    names: &BTreeMap<String, String>,
) -> Result<Vec<Dimension>, SchemaError> {
    let mut by_root: BTreeMap<&str, Vec<&Hierarchy>> = BTreeMap::new();
    for h in hierarchies {
        by_root.entry(h.root()).or_default().push(h);
    }
    let mut used_keys = BTreeSet::new();
    let mut taken = BTreeSet::new();
    let mut out = Vec::new();
    for (i, (root, hs)) in by_root.into_iter().enumerate() {
        let default = format!("D{}", i + 1);
        let name = match (names.get(&default), names.get(root)) {
            (Some(a), Some(b)) if a != b => return Err(SchemaError::DuplicateDimensionName(b.clone())),
            (Some(n), _) | (None, Some(n)) => n.clone(),
            (None, None) => default.clone(),
        };
        used_keys.insert(default);
        used_keys.insert(root.to_string());
        if !taken.insert(name.clone()) {
            return Err(SchemaError::DuplicateDimensionName(name));
        }
        let mut attributes: Vec<String> = Vec::new();
        for a in hs.iter().flat_map(|h| h.attributes()) {
            if !attributes.iter().any(|x| x == a) {
                attributes.push(a.to_string());
            }
        }
        out.push(Dimension {
            name,
            root: root.to_string(),
            attributes,
            hierarchies: hs.into_iter().cloned().collect(),
        });
    }
    if let Some(k) = names.keys().find(|k| !used_keys.contains(*k)) {
        return Err(SchemaError::UnknownDimension(k.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(name: &str, index: usize, kind: Kind) -> ColumnProfile {
        ColumnProfile {
            attribute: name.into(),
            index,
            kind,
            distinct_count: 0,
            null_count: 0,
            numeric_fraction: 0.0,
            min: None,
            max: None,
        }
    }

    fn fds(edges: &[(&str, &str)]) -> Vec<FunctionalDependency> {
        edges.iter().map(|(a, b)| FunctionalDependency::exact(a, b)).collect()
    }

    fn paths(hs: &[Hierarchy]) -> Vec<(String, Vec<&str>)> {
        hs.iter().map(|h| (h.name.clone(), h.parameters().collect())).collect()
    }

    fn product_order() -> (Vec<ColumnProfile>, Vec<FunctionalDependency>) {
        let names = [
            ("idCustomer", Kind::Identifier),
            ("nameCustomer", Kind::Nominal),
            ("cityCustomer", Kind::Nominal),
            ("countryCustomer", Kind::Nominal),
            ("classCustomer", Kind::Nominal),
            ("idProduct", Kind::Identifier),
            ("nameProduct", Kind::Nominal),
            ("categoryProduct", Kind::Nominal),
            ("quantity", Kind::Ratio),
        ];
        let profiles = names.iter().enumerate().map(|(i, (n, k))| profile(n, i, *k)).collect();
        let cover = fds(&[
            ("cityCustomer", "countryCustomer"),
            ("idCustomer", "nameCustomer"),
            ("idProduct", "nameProduct"),
            ("nameCustomer", "cityCustomer"),
            ("nameCustomer", "classCustomer"),
            ("nameProduct", "categoryProduct"),
        ]);
        (profiles, cover)
    }

    #[test]
    fn product_order_structure() {
        let (profiles, cover) = product_order();
        let g = build_dependency_graph(&cover, &BTreeSet::from(["quantity".to_string()]), &profiles).unwrap();
        assert_eq!(g.nodes.len(), 8);
        let hs = extract_hierarchies(&g);
        assert_eq!(
            paths(&hs),
            vec![
                ("H1".into(), vec!["idCustomer", "nameCustomer", "cityCustomer", "countryCustomer"]),
                ("H2".into(), vec!["idCustomer", "nameCustomer", "classCustomer"]),
                ("H3".into(), vec!["idProduct", "nameProduct", "categoryProduct"]),
            ]
        );
        let dims = group_dimensions(&hs, &BTreeMap::new()).unwrap();
        assert_eq!(dims.len(), 2);
        assert_eq!(dims[0].name, "D1");
        assert_eq!(
            dims[0].attributes,
            ["idCustomer", "nameCustomer", "cityCustomer", "countryCustomer", "classCustomer"]
        );
        assert_eq!(dims[1].attributes, ["idProduct", "nameProduct", "categoryProduct"]);
        assert_eq!(dims[1].hierarchies[0].name, "H3");
    }

    #[test]
    fn class_collapse_picks_identifier() {
        let profiles = vec![
            profile("B", 0, Kind::Nominal),
            profile("A", 1, Kind::Identifier),
            profile("C", 2, Kind::Nominal),
        ];
        let g = build_dependency_graph(&fds(&[("A", "B"), ("B", "A"), ("B", "C")]), &BTreeSet::new(), &profiles)
            .unwrap();
        assert_eq!(
            g.nodes,
            vec![
                GraphNode {
                    parameter: "A".into(),
                    weak_attributes: vec!["B".into()]
                },
                GraphNode {
                    parameter: "C".into(),
                    weak_attributes: vec![]
                },
            ]
        );
        assert_eq!(g.edges, BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn collapse_shortcut_is_reduced() {
        // {A,B} -> C directly and through D once A and B merge
        let profiles: Vec<ColumnProfile> =
            ["A", "B", "C", "D"].iter().enumerate().map(|(i, n)| profile(n, i, Kind::Nominal)).collect();
        let g = build_dependency_graph(
            &fds(&[("A", "B"), ("B", "A"), ("A", "C"), ("B", "D"), ("D", "C")]),
            &BTreeSet::new(),
            &profiles,
        )
        .unwrap();
        let hs = extract_hierarchies(&g);
        assert_eq!(paths(&hs), vec![("H1".into(), vec!["A", "D", "C"])]);
    }

    #[test]
    fn isolated_nodes() {
        let profiles = vec![profile("year", 0, Kind::TemporalYear), profile("k", 1, Kind::Nominal)];
        let g = build_dependency_graph(&[], &BTreeSet::new(), &profiles).unwrap();
        let hs = extract_hierarchies(&g);
        assert_eq!(paths(&hs), vec![("H1".into(), vec!["k"]), ("H2".into(), vec!["year"])]);
        assert_eq!(group_dimensions(&hs, &BTreeMap::new()).unwrap().len(), 2);
    }

    #[test]
    fn dimension_names() {
        let (profiles, cover) = product_order();
        let g = build_dependency_graph(&cover, &BTreeSet::from(["quantity".to_string()]), &profiles).unwrap();
        let hs = extract_hierarchies(&g);
        let names = BTreeMap::from([
            ("D1".to_string(), "Customer".to_string()),
            ("idProduct".to_string(), "Product".to_string()),
        ]);
        let dims = group_dimensions(&hs, &names).unwrap();
        assert_eq!((dims[0].name.as_str(), dims[1].name.as_str()), ("Customer", "Product"));

        let clash = BTreeMap::from([("D1".to_string(), "D2".to_string())]);
        assert_eq!(
            group_dimensions(&hs, &clash),
            Err(SchemaError::DuplicateDimensionName("D2".into()))
        );
        let unknown = BTreeMap::from([("D9".to_string(), "X".to_string())]);
        assert_eq!(group_dimensions(&hs, &unknown), Err(SchemaError::UnknownDimension("D9".into())));
    }

    #[test]
    fn measure_in_dependency_rejected() {
        let (profiles, mut cover) = product_order();
        cover.push(FunctionalDependency::exact("quantity", "idProduct"));
        assert!(build_dependency_graph(&cover, &BTreeSet::from(["quantity".to_string()]), &profiles).is_err());
    }
}
