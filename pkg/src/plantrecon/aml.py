"""AutomationML/CAEX-style serialization of the assembled graph.

The mapping is node-type-driven and frozen in :data:`DEFAULT_PROFILE`:

* the Contains tree becomes nested ``InternalElement`` elements inside a
  single ``InstanceHierarchy`` (document order = node id order);
* every node kind maps to a role-class path, written as a
  ``RoleRequirements`` reference;
* node labels become typed ``Attribute`` entries (``label:<key>``);
* every non-Contains edge becomes one ``InternalLink`` named after the
  edge kind, between two generated ``ExternalInterface`` endpoints (edge
  labels ride on the A-side interface);
* each TemplatePattern node additionally becomes a ``SystemUnitClass`` in
  the ``TemplateLibrary``; TemplateInstance elements reference their
  class path via ``RefBaseSystemUnitPath``.

All InternalLinks are attached to the top (SystemRoot) element. The
output is deliberately tool-neutral: it follows the CAEX shape but is not
validated against the official schema, and the profile table is the
contract a retargeting effort would edit.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .errors import DataError
from .graph import (
    Edge,
    EdgeKind,
    LabelValue,
    Node,
    NodeKind,
    PropertyGraph,
    Provenance,
)

CAEX_SCHEMA_VERSION = "2.15"


class AmlError(DataError):
    pass


class InvalidGraphError(AmlError):
    def __init__(self, findings: list[str]):
        super().__init__("; ".join(findings))
        self.findings = findings


class AmlSyntaxError(AmlError):
    pass


class UnknownRoleError(AmlError):
    pass


class DanglingLinkError(AmlError):
    pass


@dataclass(frozen=True)
class AmlProfile:
    """Node-kind to role-class mapping plus document naming."""

    role_map: dict[NodeKind, str]
    instance_hierarchy_name: str = "ReconstructedPlant"
    version: str = "1.0"

    def role_of(self, kind: NodeKind) -> str:
        return self.role_map[kind]

    def kind_of(self, role_path: str) -> NodeKind:
        for kind, path in self.role_map.items():
            if path == role_path:
                return kind
        raise UnknownRoleError(f"role class path {role_path!r} not in profile")


DEFAULT_PROFILE = AmlProfile(
    role_map={kind: f"PlantReconRoleLib/{kind.value}" for kind in NodeKind}
)


@dataclass
class Finding:
    code: str
    message: str
    element_id: str | None = None


def _attribute(parent: ET.Element, name: str, value: LabelValue) -> None:
    if isinstance(value, bool):
        dtype, text = "xs:boolean", "true" if value else "false"
    elif isinstance(value, int):
        dtype, text = "xs:integer", str(value)
    elif isinstance(value, float):
        dtype, text = "xs:double", repr(value)
    else:
        dtype, text = "xs:string", str(value)
    attr = ET.SubElement(parent, "Attribute", Name=name, AttributeDataType=dtype)
    ET.SubElement(attr, "Value").text = text


def _parse_attribute(elem: ET.Element) -> tuple[str, LabelValue]:
    name = elem.get("Name", "")
    dtype = elem.get("AttributeDataType", "xs:string")
    value_elem = elem.find("Value")
    text = value_elem.text if value_elem is not None and value_elem.text is not None else ""
    value: LabelValue
    if dtype == "xs:boolean":
        value = text == "true"
    elif dtype == "xs:integer":
        value = int(text)
    elif dtype == "xs:double":
        value = float(text)
    else:
        value = text
    return name, value


def build_aml_document(graph: PropertyGraph, profile: AmlProfile = DEFAULT_PROFILE) -> ET.Element:
    """Assemble the CAEX document model for a final, valid graph."""
    findings = graph.validate(final=True)
    missing_roles = [k.value for k in NodeKind if k not in profile.role_map]
    if missing_roles:
        findings.append(f"profile lacks role mappings for {missing_roles}")
    if findings:
        raise InvalidGraphError(findings)

    root_node = graph.system_roots()[0]
    caex = ET.Element(
        "CAEXFile",
        FileName=f"{root_node.name}.aml",
        SchemaVersion=CAEX_SCHEMA_VERSION,
        ProfileVersion=profile.version,
    )

    # Template patterns double as reusable unit classes.
    template_nodes = graph.query(kinds={NodeKind.TEMPLATE_PATTERN})
    if template_nodes:
        lib = ET.SubElement(caex, "SystemUnitClassLib", Name="TemplateLibrary")
        for tnode in template_nodes:
            suc = ET.SubElement(lib, "SystemUnitClass", Name=tnode.name, ID=f"suc:{tnode.id}")
            for key in sorted(tnode.labels):
                _attribute(suc, f"label:{key}", tnode.labels[key])

    hierarchy = ET.SubElement(caex, "InstanceHierarchy", Name=profile.instance_hierarchy_name)

    iface_ids: dict[str, tuple[str, str]] = {}  # edge id -> (A iface id, B iface id)
    links: list[Edge] = []
    for edge in graph.edges():
        if edge.kind is not EdgeKind.CONTAINS:
            iface_ids[edge.id] = (f"{edge.id}:A", f"{edge.id}:B")
            links.append(edge)

    def element_for(node: Node, parent: ET.Element) -> ET.Element:
        attrs = {"Name": node.name, "ID": node.id}
        if node.kind is NodeKind.TEMPLATE_INSTANCE:
            targets = [
                graph.node(e.target)
                for e in graph.out_edges(node.id, EdgeKind.INSTANCE_OF)
            ]
            if targets:
                attrs["RefBaseSystemUnitPath"] = f"TemplateLibrary/{targets[0].name}"
        elem = ET.SubElement(parent, "InternalElement", attrs)
        _attribute(elem, "nodeKind", node.kind.value)
        _attribute(elem, "provenance", node.provenance.value)
        for key in sorted(node.labels):
            _attribute(elem, f"label:{key}", node.labels[key])
        ET.SubElement(elem, "RoleRequirements", RefBaseRoleClassPath=profile.role_of(node.kind))
        for counter, edge in enumerate(graph.out_edges(node.id)):
            if edge.kind is EdgeKind.CONTAINS:
                continue
            iface = ET.SubElement(
                elem,
                "ExternalInterface",
                Name=f"{edge.kind.value}_out_{counter}",
                ID=iface_ids[edge.id][0],
            )
            for key in sorted(edge.labels):
                _attribute(iface, f"label:{key}", edge.labels[key])
        for counter, edge in enumerate(graph.in_edges(node.id)):
            if edge.kind is EdgeKind.CONTAINS:
                continue
            ET.SubElement(
                elem,
                "ExternalInterface",
                Name=f"{edge.kind.value}_in_{counter}",
                ID=iface_ids[edge.id][1],
            )
        for child_id in graph.contains_children(node.id):
            element_for(graph.node(child_id), elem)
        return elem

    top = element_for(root_node, hierarchy)
    for edge in links:
        a, b = iface_ids[edge.id]
        ET.SubElement(top, "InternalLink", Name=edge.kind.value, RefPartnerSideA=a, RefPartnerSideB=b)
    return caex


def export_aml(graph: PropertyGraph, profile: AmlProfile = DEFAULT_PROFILE) -> bytes:
    """Serialize the graph as deterministic UTF-8 CAEX-style XML."""
    caex = build_aml_document(graph, profile)
    tree = ET.ElementTree(caex)
    ET.indent(tree)
    buf = io.BytesIO()
    tree.write(buf, encoding="utf-8", xml_declaration=True)
    return buf.getvalue() + b"\n"


def import_aml(xml_bytes: bytes, profile: AmlProfile = DEFAULT_PROFILE) -> PropertyGraph:
    """Rebuild a property graph from a document produced by export_aml."""
    try:
        caex = ET.parse(io.BytesIO(xml_bytes)).getroot()
    except ET.ParseError as exc:
        raise AmlSyntaxError(str(exc)) from None
    if caex.tag != "CAEXFile":
        raise AmlSyntaxError("root element must be CAEXFile")

    graph = PropertyGraph()
    iface_owner: dict[str, str] = {}
    iface_labels: dict[str, dict[str, LabelValue]] = {}
    contains: list[tuple[str, str]] = []
    links: list[tuple[str, str, str]] = []

    def walk(elem: ET.Element, parent_id: str | None) -> None:
        nid = elem.get("ID")
        name = elem.get("Name", "")
        if nid is None:
            raise AmlSyntaxError(f"InternalElement {name!r} lacks an ID")
        kind: NodeKind | None = None
        provenance = Provenance.IMPORT
        labels: dict[str, LabelValue] = {}
        role_path: str | None = None
        for child in elem:
            if child.tag == "Attribute":
                key, value = _parse_attribute(child)
                if key == "nodeKind":
                    kind = NodeKind(str(value))
                elif key == "provenance":
                    provenance = Provenance(str(value))
                elif key.startswith("label:"):
                    labels[key[len("label:"):]] = value
            elif child.tag == "RoleRequirements":
                role_path = child.get("RefBaseRoleClassPath")
            elif child.tag == "ExternalInterface":
                iid = child.get("ID")
                if iid is None:
                    raise AmlSyntaxError(f"interface without ID under {nid!r}")
                iface_owner[iid] = nid
                parsed = dict(_parse_attribute(a) for a in child if a.tag == "Attribute")
                iface_labels[iid] = {
                    k[len("label:"):]: v for k, v in parsed.items() if k.startswith("label:")
                }
            elif child.tag == "InternalLink":
                a = child.get("RefPartnerSideA")
                b = child.get("RefPartnerSideB")
                if a is None or b is None:
                    raise DanglingLinkError(f"link {child.get('Name')!r} missing a side")
                links.append((child.get("Name", ""), a, b))
        if role_path is None:
            raise UnknownRoleError(f"element {nid!r} lacks a RoleRequirements entry")
        role_kind = profile.kind_of(role_path)
        if kind is None:
            kind = role_kind
        graph.add_node(Node(nid, kind, name, dict(sorted(labels.items())), provenance))
        if parent_id is not None:
            contains.append((parent_id, nid))
        for child in elem:
            if child.tag == "InternalElement":
                walk(child, nid)

    hierarchies = [c for c in caex if c.tag == "InstanceHierarchy"]
    if len(hierarchies) != 1:
        raise AmlSyntaxError(f"expected one InstanceHierarchy, found {len(hierarchies)}")
    for elem in hierarchies[0]:
        if elem.tag == "InternalElement":
            walk(elem, None)

    for parent_id, child_id in contains:
        graph.add_edge(Edge(EdgeKind.CONTAINS, parent_id, child_id))
    for name, a, b in links:
        if a not in iface_owner or b not in iface_owner:
            raise DanglingLinkError(f"link {name!r} references unknown interface")
        try:
            kind = EdgeKind(name)
        except ValueError:
            raise DanglingLinkError(f"link name {name!r} is not an edge kind") from None
        graph.add_edge(
            Edge(kind, iface_owner[a], iface_owner[b], dict(iface_labels.get(a, {})))
        )
    return graph


def validate_aml(xml_bytes: bytes, profile: AmlProfile = DEFAULT_PROFILE) -> list[Finding]:
    """Structural checks on an AML document; an empty list means valid."""
    findings: list[Finding] = []
    try:
        caex = ET.parse(io.BytesIO(xml_bytes)).getroot()
    except ET.ParseError as exc:
        return [Finding("syntax", str(exc))]
    if caex.tag != "CAEXFile":
        return [Finding("syntax", "root element must be CAEXFile")]

    ids: set[str] = set()
    iface_ids: set[str] = set()
    suc_paths: set[str] = set()
    known_roles = set(profile.role_map.values())

    for lib in caex.iter("SystemUnitClassLib"):
        for suc in lib.iter("SystemUnitClass"):
            suc_paths.add(f"{lib.get('Name')}/{suc.get('Name')}")

    hierarchies = [c for c in caex if c.tag == "InstanceHierarchy"]
    if len(hierarchies) != 1:
        findings.append(Finding("structure", f"expected one InstanceHierarchy, found {len(hierarchies)}"))

    for elem in caex.iter("InternalElement"):
        eid = elem.get("ID")
        if eid is None:
            findings.append(Finding("id", f"element {elem.get('Name')!r} lacks an ID"))
            continue
        if eid in ids:
            findings.append(Finding("id", f"duplicate ID {eid!r}", eid))
        ids.add(eid)
        roles = [c for c in elem if c.tag == "RoleRequirements"]
        if not roles:
            findings.append(Finding("role", f"element {eid!r} lacks RoleRequirements", eid))
        for role in roles:
            path = role.get("RefBaseRoleClassPath", "")
            if path not in known_roles:
                findings.append(Finding("role", f"unmapped role {path!r}", eid))
        ref = elem.get("RefBaseSystemUnitPath")
        if ref is not None and ref not in suc_paths:
            findings.append(Finding("template", f"unknown system unit class {ref!r}", eid))
        for iface in elem:
            if iface.tag == "ExternalInterface":
                iid = iface.get("ID")
                if iid is None:
                    findings.append(Finding("id", f"interface without ID under {eid!r}", eid))
                elif iid in iface_ids:
                    findings.append(Finding("id", f"duplicate interface ID {iid!r}", eid))
                else:
                    iface_ids.add(iid)

    for link in caex.iter("InternalLink"):
        for side in ("RefPartnerSideA", "RefPartnerSideB"):
            ref = link.get(side)
            if ref is None or ref not in iface_ids:
                findings.append(Finding("link", f"link {link.get('Name')!r}: {side} unresolved"))
    return findings
