use isomon::spectral::*;
use isomon::SpectralType;

#[test]
fn expected_arrows_are_covering_edges() {
    let mut seeds = parse_types(&FOUR_ACCESSORY_THREE_POINT);
    seeds.extend(parse_types(&FOUR_ACCESSORY_MULTI_POINT));
    let start = std::time::Instant::now();
    let g = degeneration_graph(&seeds);
    eprintln!("{} nodes {} edges in {:?}", g.nodes.len(), g.edges.len(), start.elapsed());
    for e in &g.edges {
        eprintln!("{} -> {} {}", e.from, e.to, e.transitive);
        assert!(replay_witness(&e.witness));
        assert_eq!(e.witness.first().unwrap().before, e.from);
        assert_eq!(e.witness.last().unwrap().after, e.to);
    }
    let sub = g.restricted_to(&seeds);
    let cover: Vec<(String, String)> = sub
        .covering_edges()
        .iter()
        .map(|e| (e.from.to_string(), e.to.to_string()))
        .collect();
    let mut expected: Vec<(String, String)> =
        EXPECTED_DEGENERATIONS.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let mut got = cover.clone();
    got.sort();
    expected.sort();
    assert_eq!(got, expected);
    for m in g.match_expected(&expected_degenerations()) {
        assert_ne!(m.status, EdgeStatus::Unmatched, "{} -> {}", m.from, m.to);
    }
}

#[test]
fn two_parameter_chain() {
    let chain = parse_types(&TWO_ACCESSORY_CHAIN);
    let g = degeneration_graph_with(
        &chain[..1],
        GraphOptions { expand_targets: true, ..Default::default() },
    );
    eprintln!("{} nodes", g.nodes.len());
    assert!(g.edge(&chain[0], &chain[1]).is_some());
    assert!(g.edge(&chain[1], &chain[2]).is_some());
}

#[test]
fn isolated_type() {
    let s: SpectralType = "55,3331,22222".parse().unwrap();
    let g = degeneration_graph(&[s]);
    assert!(g.edges.is_empty());
}
