"""
광고 XML 직렬화/역직렬화.

MSA 요소 배치는 다음과 같이 고정되어 있습니다.

    <jxta:MSA xmlns:jxta="http://jxta.org">
      <MSID/> <Name/> <Ctrr/> <SURI/> <Vers/> <Desc/>
      <Parm><WSDL><definitions .../></WSDL></Parm>
      <jxta:PipeAdvertisement/> <Proxy/> <Auth/>
    </jxta:MSA>

같은 입력은 항상 바이트 단위로 같은 출력을 만듭니다.
"""

from collections.abc import Callable, Iterator
from typing import TypeVar

from lxml import etree
from pydantic import ValidationError

from src.discovery.adverts import (
    Advertisement,
    ModuleClassAdvertisement,
    ModuleClassId,
    ModuleSpecAdvertisement,
    ModuleSpecId,
    PeerId,
    PipeAdvertisement,
    PipeType,
    WsdlDocument,
    WsdlMessage,
    WsdlOperation,
    WsdlPart,
    WsdlPortType,
)
from src.discovery.constants import (
    JXTA_NAMESPACE,
    JXTA_PREFIX,
    MCA_ELEMENT_ORDER,
    MSA_ELEMENT_ORDER,
    PIPE_ELEMENT_ORDER,
)
from src.discovery.errors import InvalidIdentifier, MalformedXml, SchemaViolation

_NSMAP = {JXTA_PREFIX: JXTA_NAMESPACE}
_PARSER = etree.XMLParser(
    resolve_entities=False, no_network=True, remove_comments=True, huge_tree=False
)

T = TypeVar("T")


def _qname(tag: str) -> str:
    """`jxta:X` 형식 태그를 lxml의 Clark 표기(`{ns}X`)로 바꿉니다."""
    if tag.startswith(f"{JXTA_PREFIX}:"):
        return f"{{{JXTA_NAMESPACE}}}{tag.split(':', 1)[1]}"
    return tag


def _display(qname: str) -> str:
    prefix = f"{{{JXTA_NAMESPACE}}}"
    if qname.startswith(prefix):
        return f"{JXTA_PREFIX}:{qname[len(prefix):]}"
    return qname


# =============================================================================
# 직렬화
# =============================================================================


def _text_element(parent: etree._Element, tag: str, text: str) -> etree._Element:
    element = etree.SubElement(parent, _qname(tag))
    # 빈 문자열은 <Tag/> 형태로 남깁니다.
    if text:
        element.text = text
    return element


def _build_wsdl(parent: etree._Element, wsdl: WsdlDocument) -> None:
    definitions = etree.SubElement(parent, "definitions")
    definitions.set("name", wsdl.service_name)
    definitions.set("targetNamespace", wsdl.target_namespace)

    for message in wsdl.messages:
        message_el = etree.SubElement(definitions, "message")
        message_el.set("name", message.name)
        for part in message.parts:
            part_el = etree.SubElement(message_el, "part")
            part_el.set("name", part.name)
            part_el.set("type", part.type_name)

    for port_type in wsdl.port_types:
        port_type_el = etree.SubElement(definitions, "portType")
        port_type_el.set("name", port_type.name)
        for operation in port_type.operations:
            operation_el = etree.SubElement(port_type_el, "operation")
            operation_el.set("name", operation.name)
            etree.SubElement(operation_el, "input").set(
                "message", operation.input_message
            )
            etree.SubElement(operation_el, "output").set(
                "message", operation.output_message
            )

    service_el = etree.SubElement(definitions, "service")
    service_el.set("name", wsdl.service_name)
    port_el = etree.SubElement(service_el, "port")
    etree.SubElement(port_el, "address").set("location", wsdl.port_address)


def _build_pipe(parent: etree._Element, pipe: PipeAdvertisement) -> None:
    pipe_el = etree.SubElement(parent, _qname("jxta:PipeAdvertisement"))
    _text_element(pipe_el, "Id", pipe.pipe_id)
    _text_element(pipe_el, "Type", pipe.pipe_type.value)
    peer_el = _text_element(pipe_el, "PeerID", pipe.endpoint_peer.value)
    if pipe.endpoint_peer.phone_alias:
        peer_el.set("phone", pipe.endpoint_peer.phone_alias)


def _to_string(root: etree._Element) -> str:
    data: bytes = etree.tostring(
        root, xml_declaration=True, encoding="UTF-8", pretty_print=True
    )
    return data.decode("utf-8")


def serialize_advert(advert: Advertisement) -> str:
    """
    광고를 정규 XML 문서 문자열로 직렬화합니다.

    Args:
        advert: MSA 또는 MCA

    Returns:
        str: UTF-8 XML 문서 (결정적 출력)
    """
    if isinstance(advert, ModuleClassAdvertisement):
        root = etree.Element(_qname("jxta:MCA"), nsmap=_NSMAP)
        _text_element(root, "MCID", advert.mcid.value)
        _text_element(root, "Name", advert.name)
        _text_element(root, "Desc", advert.description)
        return _to_string(root)

    root = etree.Element(_qname("jxta:MSA"), nsmap=_NSMAP)
    _text_element(root, "MSID", str(advert.msid))
    _text_element(root, "Name", advert.name)
    _text_element(root, "Ctrr", advert.creator)
    _text_element(root, "SURI", advert.spec_uri)
    _text_element(root, "Vers", advert.version)
    _text_element(root, "Desc", advert.description)
    parm = etree.SubElement(root, "Parm")
    _build_wsdl(etree.SubElement(parm, "WSDL"), advert.wsdl)
    _build_pipe(root, advert.pipe)
    _text_element(root, "Proxy", advert.proxy)
    _text_element(root, "Auth", advert.auth)
    return _to_string(root)


# =============================================================================
# 역직렬화
# =============================================================================


def _children(element: etree._Element) -> list[etree._Element]:
    """주석/처리 명령을 제외한 자식 요소 목록."""
    return [child for child in element if isinstance(child.tag, str)]


def _expect_sequence(
    element: etree._Element, expected: list[str]
) -> dict[str, etree._Element]:
    """자식 요소가 정확히 expected 순서와 일치하는지 검사합니다."""
    children = _children(element)
    actual = [_display(child.tag) for child in children]
    parent = _display(element.tag)
    for position, tag in enumerate(expected):
        if position >= len(actual):
            raise SchemaViolation(f"필수 요소 <{tag}> 누락", element=parent)
        if actual[position] != tag:
            if tag in actual:
                raise SchemaViolation(
                    f"<{tag}> 위치 오류 (기대 위치 {position}, 실제 <{actual[position]}>)",
                    element=parent,
                )
            raise SchemaViolation(
                f"필수 요소 <{tag}> 누락 (대신 <{actual[position]}> 발견)",
                element=parent,
            )
    if len(actual) > len(expected):
        raise SchemaViolation(
            f"알 수 없는 요소 <{actual[len(expected)]}>", element=parent
        )
    return {tag: child for tag, child in zip(expected, children, strict=True)}


def _leaf_text(element: etree._Element) -> str:
    if _children(element):
        raise SchemaViolation("텍스트 요소에 하위 요소가 있습니다", element=element.tag)
    return element.text or ""


def _attr(element: etree._Element, name: str) -> str:
    value = element.get(name)
    if value is None:
        raise SchemaViolation(f"필수 속성 '{name}' 누락", element=element.tag)
    return value


def _only_attrs(element: etree._Element, allowed: set[str]) -> None:
    unknown = set(element.attrib) - allowed
    if unknown:
        raise SchemaViolation(
            f"알 수 없는 속성 {sorted(unknown)}", element=_display(element.tag)
        )


def _run_of(
    children: list[etree._Element], tag: str, start: int
) -> Iterator[etree._Element]:
    """start 위치부터 같은 태그가 연속되는 구간을 순회합니다."""
    index = start
    while index < len(children) and children[index].tag == tag:
        yield children[index]
        index += 1


def _parse_wsdl(wsdl_el: etree._Element) -> WsdlDocument:
    wsdl_children = _children(wsdl_el)
    if len(wsdl_children) != 1 or wsdl_children[0].tag != "definitions":
        raise SchemaViolation("<WSDL>에는 <definitions> 하나만 있어야 합니다", "WSDL")
    definitions = wsdl_children[0]
    _only_attrs(definitions, {"name", "targetNamespace"})
    children = _children(definitions)

    messages: list[WsdlMessage] = []
    for message_el in _run_of(children, "message", 0):
        _only_attrs(message_el, {"name"})
        parts = []
        for part_el in _children(message_el):
            if part_el.tag != "part":
                raise SchemaViolation(f"알 수 없는 요소 <{part_el.tag}>", "message")
            _only_attrs(part_el, {"name", "type"})
            parts.append(
                WsdlPart(name=_attr(part_el, "name"), type_name=_attr(part_el, "type"))
            )
        messages.append(WsdlMessage(name=_attr(message_el, "name"), parts=tuple(parts)))
    position = len(messages)

    port_types: list[WsdlPortType] = []
    for port_type_el in _run_of(children, "portType", position):
        _only_attrs(port_type_el, {"name"})
        operations = []
        for operation_el in _children(port_type_el):
            if operation_el.tag != "operation":
                raise SchemaViolation(
                    f"알 수 없는 요소 <{operation_el.tag}>", "portType"
                )
            _only_attrs(operation_el, {"name"})
            io = _expect_sequence(operation_el, ["input", "output"])
            _only_attrs(io["input"], {"message"})
            _only_attrs(io["output"], {"message"})
            operations.append(
                WsdlOperation(
                    name=_attr(operation_el, "name"),
                    input_message=_attr(io["input"], "message"),
                    output_message=_attr(io["output"], "message"),
                )
            )
        port_types.append(
            WsdlPortType(name=_attr(port_type_el, "name"), operations=tuple(operations))
        )
    position += len(port_types)

    if position >= len(children) or children[position].tag != "service":
        raise SchemaViolation("필수 요소 <service> 누락", "definitions")
    if position + 1 != len(children):
        raise SchemaViolation(
            f"알 수 없는 요소 <{children[position + 1].tag}>", "definitions"
        )
    service_el = children[position]
    _only_attrs(service_el, {"name"})
    port_el = _expect_sequence(service_el, ["port"])["port"]
    address_el = _expect_sequence(port_el, ["address"])["address"]
    _only_attrs(address_el, {"location"})

    service_name = _attr(service_el, "name")
    if definitions.get("name", service_name) != service_name:
        raise SchemaViolation("definitions/@name과 service/@name 불일치", "definitions")

    return WsdlDocument(
        target_namespace=_attr(definitions, "targetNamespace"),
        messages=tuple(messages),
        port_types=tuple(port_types),
        service_name=service_name,
        port_address=_attr(address_el, "location"),
    )


def _parse_pipe(pipe_el: etree._Element) -> PipeAdvertisement:
    fields = _expect_sequence(pipe_el, PIPE_ELEMENT_ORDER)
    peer_el = fields["PeerID"]
    _only_attrs(peer_el, {"phone"})
    try:
        pipe_type = PipeType(_leaf_text(fields["Type"]))
    except ValueError as e:
        raise SchemaViolation(f"알 수 없는 파이프 타입: {e}", "Type") from e
    return PipeAdvertisement(
        pipe_id=_leaf_text(fields["Id"]),
        pipe_type=pipe_type,
        endpoint_peer=PeerId.parse(_leaf_text(peer_el), peer_el.get("phone")),
    )


def _validated(build: Callable[[], T]) -> T:
    """pydantic/식별자 검증 오류를 SchemaViolation으로 변환합니다."""
    try:
        return build()
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or None
        raise SchemaViolation(first["msg"], element=location) from e
    except InvalidIdentifier as e:
        raise SchemaViolation(str(e)) from e


def _parse_msa(root: etree._Element) -> ModuleSpecAdvertisement:
    fields = _expect_sequence(root, MSA_ELEMENT_ORDER)
    parm_children = _children(fields["Parm"])
    if len(parm_children) != 1 or parm_children[0].tag != "WSDL":
        raise SchemaViolation("<Parm>에는 <WSDL> 하나만 있어야 합니다", "Parm")

    return ModuleSpecAdvertisement(
        msid=ModuleSpecId.parse(_leaf_text(fields["MSID"])),
        name=_leaf_text(fields["Name"]),
        creator=_leaf_text(fields["Ctrr"]),
        spec_uri=_leaf_text(fields["SURI"]),
        version=_leaf_text(fields["Vers"]),
        description=_leaf_text(fields["Desc"]),
        wsdl=_parse_wsdl(parm_children[0]),
        pipe=_parse_pipe(fields["jxta:PipeAdvertisement"]),
        proxy=_leaf_text(fields["Proxy"]),
        auth=_leaf_text(fields["Auth"]),
    )


def _parse_mca(root: etree._Element) -> ModuleClassAdvertisement:
    fields = _expect_sequence(root, MCA_ELEMENT_ORDER)
    return ModuleClassAdvertisement(
        mcid=ModuleClassId.parse(_leaf_text(fields["MCID"])),
        name=_leaf_text(fields["Name"]),
        description=_leaf_text(fields["Desc"]),
    )


def parse_advert(xml: str | bytes) -> Advertisement:
    """
    XML 문서를 광고 객체로 파싱합니다.

    Args:
        xml: serialize_advert 형식의 XML 문서

    Returns:
        Advertisement: MSA 또는 MCA

    Raises:
        MalformedXml: XML로 파싱할 수 없는 경우
        SchemaViolation: 요소 누락/순서 위반/알 수 없는 요소/식별자 형식 위반
    """
    data = xml.encode("utf-8") if isinstance(xml, str) else xml
    try:
        root = etree.fromstring(data, parser=_PARSER)
    except etree.XMLSyntaxError as e:
        raise MalformedXml(f"XML 파싱 실패: {e}") from e

    if root.tag == _qname("jxta:MSA"):
        return _validated(lambda: _parse_msa(root))
    if root.tag == _qname("jxta:MCA"):
        return _validated(lambda: _parse_mca(root))
    raise SchemaViolation(f"알 수 없는 루트 요소 <{_display(root.tag)}>")
