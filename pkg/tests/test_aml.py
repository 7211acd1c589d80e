import random

import pytest

from plantrecon import plc, synth
from plantrecon.aml import (
    AmlSyntaxError,
    DanglingLinkError,
    InvalidGraphError,
    UnknownRoleError,
    export_aml,
    import_aml,
    validate_aml,
)
from plantrecon.graph import Edge, EdgeKind, Node, NodeKind, PropertyGraph
from plantrecon.grouping import functional_grouping
from plantrecon.mining import mine, mark_templates, project_for_mining, select_templates


def _element_count(xml_bytes):
    import xml.etree.ElementTree as ET

    root = ET.fromstring(xml_bytes)
    return sum(1 for _ in root.iter("InternalElement"))


def _link_count(xml_bytes):
    import xml.etree.ElementTree as ET

    root = ET.fromstring(xml_bytes)
    return sum(1 for _ in root.iter("InternalLink"))


class TestExport:
    def test_structural_accounting(self, mini_functional):
        xml_bytes = export_aml(mini_functional)
        assert _element_count(xml_bytes) == mini_functional.node_count
        non_contains = [
            e for e in mini_functional.edges() if e.kind is not EdgeKind.CONTAINS
        ]
        assert _link_count(xml_bytes) == len(non_contains)

    def test_missing_root_rejected(self):
        g = PropertyGraph()
        g.add_node(Node("Sensor:S", NodeKind.SENSOR, "S", {}))
        with pytest.raises(InvalidGraphError):
            export_aml(g)

    def test_template_mapping(self, mini_functional):
        graph = mini_functional.copy()
        view = project_for_mining(
            graph,
            frozenset({NodeKind.PLC, NodeKind.IO_DEVICE, NodeKind.CHANNEL,
                       NodeKind.DATA_BLOCK, NodeKind.FUNCTION_BLOCK_TYPE}),
        )
        templates = select_templates(mine(view, min_support=2, min_nodes=3, max_nodes=12))
        mark_templates(graph, templates)
        xml_bytes = export_aml(graph)
        import xml.etree.ElementTree as ET

        root = ET.fromstring(xml_bytes)
        sucs = list(root.iter("SystemUnitClass"))
        assert len(sucs) == len(templates)
        refs = [
            e.get("RefBaseSystemUnitPath")
            for e in root.iter("InternalElement")
            if e.get("RefBaseSystemUnitPath")
        ]
        instance_count = len(graph.query(kinds={NodeKind.TEMPLATE_INSTANCE}))
        assert len(refs) == instance_count
        assert all(r.startswith("TemplateLibrary/") for r in refs)

    def test_export_deterministic(self, mini_functional):
        assert export_aml(mini_functional) == export_aml(mini_functional.copy())


class TestImportRoundTrip:
    def test_mini_round_trip(self, mini_functional):
        xml_bytes = export_aml(mini_functional)
        back = import_aml(xml_bytes)
        assert back.node_count == mini_functional.node_count
        assert back.edge_count == mini_functional.edge_count
        for node in mini_functional.nodes():
            other = back.node(node.id)
            assert other.kind is node.kind
            assert other.name == node.name
            assert other.labels == node.labels
        assert {e.triple for e in back.edges()} == {
            e.triple for e in mini_functional.edges()
        }

    def test_label_types_preserved(self):
        g = PropertyGraph()
        g.add_node(Node("SystemRoot:P", NodeKind.SYSTEM_ROOT, "P", {}))
        g.add_node(
            Node(
                "Sensor:S",
                NodeKind.SENSOR,
                "S",
                {"position.x": 1.5, "channelIndex": 3, "domain": "electric", "flag": True},
            )
        )
        g.add_edge(Edge(EdgeKind.CONTAINS, "SystemRoot:P", "Sensor:S"))
        back = import_aml(export_aml(g))
        labels = back.node("Sensor:S").labels
        assert labels == {"position.x": 1.5, "channelIndex": 3, "domain": "electric", "flag": True}
        assert isinstance(labels["position.x"], float)
        assert isinstance(labels["channelIndex"], int)
        assert isinstance(labels["flag"], bool)

    def test_edge_labels_preserved(self):
        g = PropertyGraph()
        g.add_node(Node("SystemRoot:P", NodeKind.SYSTEM_ROOT, "P", {}))
        g.add_node(Node("Sensor:S", NodeKind.SENSOR, "S", {}))
        g.add_node(Node("PhysicalGroup:Z", NodeKind.PHYSICAL_GROUP, "Z", {}))
        g.add_edge(Edge(EdgeKind.CONTAINS, "SystemRoot:P", "Sensor:S"))
        g.add_edge(Edge(EdgeKind.CONTAINS, "SystemRoot:P", "PhysicalGroup:Z"))
        g.add_edge(
            Edge(EdgeKind.MEMBER_OF_PHYSICAL, "Sensor:S", "PhysicalGroup:Z", {"confidence": 0.75})
        )
        back = import_aml(export_aml(g))
        edge = back.out_edges("Sensor:S", EdgeKind.MEMBER_OF_PHYSICAL)[0]
        assert edge.labels == {"confidence": 0.75}

    def test_dangling_link(self, mini_functional):
        xml_bytes = export_aml(mini_functional)
        text = xml_bytes.decode()
        # Point one link side at a non-existent interface id.
        text = text.replace('RefPartnerSideA="Reads:', 'RefPartnerSideA="Ghost:', 1)
        with pytest.raises(DanglingLinkError):
            import_aml(text.encode())

    def test_unknown_role(self, mini_functional):
        xml_bytes = export_aml(mini_functional)
        text = xml_bytes.decode().replace(
            'RefBaseRoleClassPath="PlantReconRoleLib/Sensor"',
            'RefBaseRoleClassPath="SomeVendorLib/Sensor"',
        )
        with pytest.raises(UnknownRoleError):
            import_aml(text.encode())

    def test_syntax_error(self):
        with pytest.raises(AmlSyntaxError):
            import_aml(b"<CAEXFile><broken")

    def test_round_trip_random_generator_graphs(self):
        rng = random.Random(2024)
        for _ in range(10):
            spec = synth.PlantSpec(
                levels=rng.randint(1, 2),
                rows_per_level=rng.randint(1, 3),
                places_per_row=rng.randint(1, 3),
                sim_duration_s=200.0,
                seed=rng.randint(0, 999),
            )
            plant = synth.generate(spec)
            project = plc.prepare(plc.parse_project(plant.plc_xml))
            graph = functional_grouping(project, plc.build_call_tree(project))
            back = import_aml(export_aml(graph))
            assert back.node_count == graph.node_count
            assert {e.triple for e in back.edges()} == {e.triple for e in graph.edges()}
            for node in graph.nodes():
                other = back.node(node.id)
                assert (other.kind, other.name, other.labels) == (
                    node.kind,
                    node.name,
                    node.labels,
                )


class TestValidate:
    def test_fresh_export_clean(self, mini_functional):
        assert validate_aml(export_aml(mini_functional)) == []

    def test_duplicate_id_found(self, mini_functional):
        xml_bytes = export_aml(mini_functional)
        text = xml_bytes.decode()
        # Duplicate one element ID.
        text = text.replace('ID="Sensor:S_occ_1_1"', 'ID="Sensor:S_occ_1_2"', 1)
        findings = validate_aml(text.encode())
        assert any(f.code == "id" for f in findings)

    def test_empty_file_is_syntax_finding(self):
        findings = validate_aml(b"")
        assert len(findings) == 1
        assert findings[0].code == "syntax"

    def test_unresolved_link_found(self, mini_functional):
        xml_bytes = export_aml(mini_functional)
        text = xml_bytes.decode().replace('RefPartnerSideA="Reads:', 'RefPartnerSideA="Ghost:', 1)
        findings = validate_aml(text.encode())
        assert any(f.code == "link" for f in findings)
