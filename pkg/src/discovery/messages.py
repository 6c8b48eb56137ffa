"""
오버레이 메시지 스키마 (시뮬레이터 내부 와이어 포맷).

모든 메시지는 불변 값이며, 송신 측은 (목적지 PeerId, Message) 쌍을 내보냅니다.
"""

from dataclasses import dataclass

from src.discovery.adverts import (
    ModuleClassAdvertisement,
    ModuleSpecAdvertisement,
    ModuleSpecId,
    PeerId,
)
from src.discovery.groups import GroupId
from src.discovery.index import ScoredHit


@dataclass(frozen=True, slots=True, order=True)
class QueryId:
    """질의 식별자. 발신자별로 sequence가 엄격히 증가합니다."""

    originator: str
    sequence: int

    def __str__(self) -> str:
        return f"{self.originator}#{self.sequence}"


@dataclass(frozen=True, slots=True)
class Register:
    edge: PeerId
    relay: PeerId | None = None

    def summary(self) -> str:
        via = f" via={self.relay}" if self.relay else ""
        return f"edge={self.edge}{via}"


@dataclass(frozen=True, slots=True)
class PublishRequest:
    advert: ModuleSpecAdvertisement
    lifetime_ms: int
    group: GroupId
    publisher: PeerId
    module_class: ModuleClassAdvertisement | None = None

    def summary(self) -> str:
        return (
            f"msid={self.advert.msid} name={self.advert.name} "
            f"lifetime={self.lifetime_ms} group={self.group}"
        )


@dataclass(frozen=True, slots=True)
class RepublishRequest:
    msid: ModuleSpecId
    lifetime_ms: int
    publisher: PeerId

    def summary(self) -> str:
        return f"msid={self.msid} lifetime={self.lifetime_ms}"


@dataclass(frozen=True, slots=True)
class RepublishRejected:
    """재게시 대상이 없다는 응답. 게시자는 전체 광고를 다시 보내야 합니다."""

    msid: ModuleSpecId

    def summary(self) -> str:
        return f"msid={self.msid}"


@dataclass(frozen=True, slots=True)
class DiscoveryQuery:
    query_id: QueryId
    originator: PeerId
    terms: str
    group: GroupId
    k: int
    hops_remaining: int
    deadline: int
    reply_via: PeerId | None = None

    def __post_init__(self) -> None:
        if self.hops_remaining < 0:
            raise ValueError(f"hops_remaining은 0 이상이어야 합니다: {self.hops_remaining}")

    def summary(self) -> str:
        return (
            f"qid={self.query_id} terms={self.terms!r} group={self.group} "
            f"k={self.k} hops={self.hops_remaining}"
        )


@dataclass(frozen=True, slots=True)
class ResponseHit:
    """응답에 실리는 결과 하나. 로컬 캐싱을 위해 MSA 전체와 만료 시각을 포함합니다."""

    hit: ScoredHit
    advert: ModuleSpecAdvertisement
    group: GroupId
    publisher: PeerId
    expires_at: int


@dataclass(frozen=True, slots=True)
class DiscoveryResponse:
    query_id: QueryId
    responder: PeerId
    hits: tuple[ResponseHit, ...]
    total_matched: int

    def summary(self) -> str:
        names = ",".join(item.advert.name for item in self.hits)
        return (
            f"qid={self.query_id} hits={len(self.hits)} "
            f"matched={self.total_matched} [{names}]"
        )


@dataclass(frozen=True, slots=True)
class Relayed:
    inner: "Message"
    target: PeerId

    def summary(self) -> str:
        return f"target={self.target} inner={kind_of(self.inner)}({self.inner.summary()})"


Message = (
    Register
    | PublishRequest
    | RepublishRequest
    | RepublishRejected
    | DiscoveryQuery
    | DiscoveryResponse
    | Relayed
)

Outbound = tuple[PeerId, Message]


def kind_of(message: Message) -> str:
    return type(message).__name__


def unwrap(message: Message) -> Message:
    """Relayed 봉투를 모두 벗긴 내부 메시지를 반환합니다."""
    while isinstance(message, Relayed):
        message = message.inner
    return message
