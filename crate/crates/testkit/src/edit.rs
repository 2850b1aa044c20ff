use smatv_core::model::{ComponentNode, Network, NodeKind, PortRef};

/// Replaces edge `edge_id` by `from -(u*L)- node -((1-u)*L)- to`, where
/// `node` is a new instance of catalog part `part` wired through `in`/`out`.
pub fn splice(net: &Network, edge_id: &str, node: &str, part: &str, u: f64) -> Network {
    let mut out = net.clone();
    let e = out.edges.remove(edge_id).expect("edge exists");
    out.add_node(node, NodeKind::Component(ComponentNode { component: part.into(), regulators: Default::default() }));
    out.add_edge(format!("{node}_a"), e.from.clone(), PortRef::new(node, "in"), &e.cable, e.length_m * u, e.lines.clone());
    out.add_edge(format!("{node}_b"), PortRef::new(node, "out"), e.to.clone(), &e.cable, e.length_m * (1.0 - u), e.lines);
    out
}
