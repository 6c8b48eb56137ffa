"""
광고(Advertisement) 도메인 타입.

모바일 호스트가 제공하는 웹 서비스는 JXTA 모듈로 게시됩니다.
- ModuleClassAdvertisement (MCA): 웹 서비스 정의 집합이 존재함을 선언
- ModuleSpecAdvertisement (MSA): 서비스 접근에 필요한 모든 정보(WSDL, 파이프 등)

모든 타입은 생성 이후 불변(frozen)이며, 생성 시점에 불변식을 검증합니다.
"""

from enum import StrEnum
from typing import Annotated, Self

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, model_validator

from src.discovery.constants import (
    MCID_PATTERN,
    MSID_PATTERN,
    PEER_ID_PATTERN,
    PHONE_ALIAS_PATTERN,
)
from src.discovery.errors import InvalidIdentifier


def _xml_safe(value: str) -> str:
    """XML 1.0 문서에 그대로 실을 수 없는 제어 문자를 거부합니다."""
    for ch in value:
        code = ord(ch)
        if ch == "\r" or (code < 0x20 and ch not in "\t\n") or code in (0xFFFE, 0xFFFF):
            raise ValueError(f"XML에 허용되지 않는 문자 포함: U+{code:04X}")
        if 0xD800 <= code <= 0xDFFF:
            raise ValueError(f"짝이 없는 서로게이트 문자: U+{code:04X}")
    return value


XmlText = Annotated[str, AfterValidator(_xml_safe)]
NonEmptyXmlText = Annotated[str, Field(min_length=1), AfterValidator(_xml_safe)]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# === 식별자 ===


class ModuleClassId(_Frozen):
    """모듈 클래스 식별자. 형식: `mcid:<32 hex>`."""

    value: str = Field(pattern=MCID_PATTERN.pattern)

    @property
    def hex(self) -> str:
        return self.value.removeprefix("mcid:")

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> Self:
        if not MCID_PATTERN.fullmatch(text):
            raise InvalidIdentifier(f"MCID 형식 위반: {text!r}")
        return cls(value=text)


class ModuleSpecId(_Frozen):
    """
    모듈 명세 식별자.

    정규 문자열 형식은 `msid:<mcid hex>:<suffix hex>` 이며,
    내장된 MCID는 자신이 구체화하는 MCA를 가리킵니다.
    """

    class_id: ModuleClassId
    spec_suffix: str = Field(pattern=r"^[0-9a-f]{32}$")

    def __str__(self) -> str:
        return f"msid:{self.class_id.hex}:{self.spec_suffix}"

    @classmethod
    def parse(cls, text: str) -> Self:
        match = MSID_PATTERN.fullmatch(text)
        if match is None:
            raise InvalidIdentifier(f"MSID 형식 위반: {text!r}")
        class_hex, suffix = match.groups()
        return cls(
            class_id=ModuleClassId(value=f"mcid:{class_hex}"), spec_suffix=suffix
        )


class PeerId(_Frozen):
    """
    피어 식별자.

    휴대폰 번호(phone_alias)는 대체 조회 키일 뿐이며,
    동등성과 해시는 value 필드만으로 결정됩니다.
    """

    value: str = Field(pattern=PEER_ID_PATTERN.pattern)
    phone_alias: str | None = Field(default=None, pattern=PHONE_ALIAS_PATTERN.pattern)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PeerId):
            return NotImplemented
        return self.value == other.value

    def __hash__(self) -> int:
        return hash(self.value)

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str, phone_alias: str | None = None) -> Self:
        if not PEER_ID_PATTERN.fullmatch(text):
            raise InvalidIdentifier(f"PeerId 형식 위반: {text!r}")
        return cls(value=text, phone_alias=phone_alias)


# === WSDL ===


class WsdlPart(_Frozen):
    name: NonEmptyXmlText
    type_name: NonEmptyXmlText


class WsdlMessage(_Frozen):
    name: NonEmptyXmlText
    parts: tuple[WsdlPart, ...] = ()


class WsdlOperation(_Frozen):
    name: NonEmptyXmlText
    input_message: NonEmptyXmlText
    output_message: NonEmptyXmlText


class WsdlPortType(_Frozen):
    name: NonEmptyXmlText
    operations: tuple[WsdlOperation, ...] = ()


class WsdlDocument(_Frozen):
    """
    검색 텍스트와 서비스 엔드포인트만 제공하는 최소 WSDL 모델.

    definitions/message/portType 및 서비스 포트 주소만 다룹니다.
    """

    target_namespace: NonEmptyXmlText
    messages: tuple[WsdlMessage, ...] = ()
    port_types: tuple[WsdlPortType, ...] = ()
    service_name: NonEmptyXmlText
    port_address: XmlText = ""

    @model_validator(mode="after")
    def _check_message_refs(self) -> Self:
        known = {message.name for message in self.messages}
        for port_type in self.port_types:
            for operation in port_type.operations:
                for ref in (operation.input_message, operation.output_message):
                    if ref not in known:
                        raise ValueError(
                            f"operation '{operation.name}'이(가) 정의되지 않은 "
                            f"message '{ref}'를 참조합니다"
                        )
        return self


# === 파이프 / 광고 ===


class PipeType(StrEnum):
    UNICAST = "unicast"
    UNICAST_SECURE = "unicast-secure"
    PROPAGATE = "propagate"


class PipeAdvertisement(_Frozen):
    """서비스에 연결할 가상 채널. 수신 끝점은 IP가 아닌 PeerId로 지정됩니다."""

    pipe_id: NonEmptyXmlText
    pipe_type: PipeType = PipeType.UNICAST
    endpoint_peer: PeerId


class ModuleClassAdvertisement(_Frozen):
    """웹 서비스 정의 집합의 존재를 선언하는 MCA."""

    mcid: ModuleClassId
    name: NonEmptyXmlText
    description: XmlText = ""


class ModuleSpecAdvertisement(_Frozen):
    """
    웹 서비스 하나에 접근하는 데 필요한 모든 정보를 담는 MSA.

    Proxy/Auth 요소는 해석하지 않는 불투명 문자열로 보관합니다.
    """

    msid: ModuleSpecId
    name: NonEmptyXmlText
    creator: XmlText = ""
    spec_uri: XmlText = ""
    version: XmlText = ""
    description: XmlText = ""
    wsdl: WsdlDocument
    pipe: PipeAdvertisement
    proxy: XmlText = ""
    auth: XmlText = ""

    @property
    def class_id(self) -> ModuleClassId:
        return self.msid.class_id


Advertisement = ModuleSpecAdvertisement | ModuleClassAdvertisement


def wsdl_search_text(wsdl: WsdlDocument) -> str:
    """
    인덱싱 대상이 되는 WSDL 식별자 텍스트를 공백으로 이어 반환합니다.

    순서: serviceName, portType 이름, operation 이름, message 이름,
    part 이름, targetNamespace.
    """
    words: list[str] = [wsdl.service_name]
    words.extend(port_type.name for port_type in wsdl.port_types)
    words.extend(
        operation.name
        for port_type in wsdl.port_types
        for operation in port_type.operations
    )
    words.extend(message.name for message in wsdl.messages)
    words.extend(part.name for message in wsdl.messages for part in message.parts)
    words.append(wsdl.target_namespace)
    return " ".join(words)

