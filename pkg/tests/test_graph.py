from __future__ import annotations

import pytest

from erdb.erql import schema_from_ddl
from erdb.errors import MappingError
from erdb.graph import attribute_node, build_graph, components, entity_node, is_connected, relationship_node


def edge_set(g):
    return {(frozenset((e.a, e.b)), e.kind) for e in g.edges}


def test_university_graph_edges(uni):
    g = build_graph(uni)
    edges = edge_set(g)
    for sub in ("Instructor", "Student"):
        assert (frozenset((entity_node("Person"), entity_node(sub))), "isa") in edges
        assert (frozenset((entity_node(sub), relationship_node("advisor"))), "participates") in edges


def test_single_entity_graph():
    g = build_graph(schema_from_ddl("create entity A (id int key)"))
    assert len(g.nodes) == 2 and len(g.edges) == 1


def test_composite_chain_has_a_node_per_attribute():
    g = build_graph(schema_from_ddl("create entity A (id int key, addr {street text, city text})"))
    chain = [entity_node("A"), attribute_node("A", ["addr"]), attribute_node("A", ["addr", "street"]), attribute_node("A", ["addr", "city"])]
    assert all(g.has_node(n) for n in chain)
    assert len(g.nodes) == 5
    assert g.node_index[attribute_node("A", ["addr", "city"])].owner == attribute_node("A", ["addr"])


def test_multivalued_nodes_are_flagged(uni):
    g = build_graph(uni)
    assert g.node_index[attribute_node("Person", ["Ph"])].multi_valued
    assert not g.node_index[attribute_node("Person", ["city"])].multi_valued


def test_edges_only_where_the_schema_says():
    s = schema_from_ddl(
        "create entity A (id int key, x int); create entity B (id int key);"
        "create entity C extends A (y int); create relationship r between A many, B many"
    )
    g = build_graph(s)
    kinds = {e.kind for e in g.edges}
    assert kinds == {"participates", "isa", "has_attribute"}
    assert g.edge_kinds(entity_node("A"), entity_node("B")) == set()
    assert g.edge_kinds(entity_node("C"), entity_node("A")) == {"isa"}


def test_connectivity_examples(uni):
    g = build_graph(uni)
    assert is_connected(g, [entity_node("Student"), relationship_node("advisor"), entity_node("Instructor")])
    assert not is_connected(g, [attribute_node("Student", ["tot_credits"]), attribute_node("Course", ["title"])])
    assert is_connected(g, [entity_node("Course")])


def test_components_split_disconnected_sets(uni):
    g = build_graph(uni)
    parts = components(g, [entity_node("Course"), attribute_node("Course", ["title"]), entity_node("Student")])
    assert sorted(len(p) for p in parts) == [1, 2]


def test_unknown_node_is_an_error(uni):
    with pytest.raises(MappingError):
        is_connected(build_graph(uni), ["E:Nope"])


def test_dot_export_mentions_every_node(uni):
    g = build_graph(uni)
    dot = g.to_dot()
    assert dot.startswith("graph") and all(n.id in dot for n in g.nodes)
