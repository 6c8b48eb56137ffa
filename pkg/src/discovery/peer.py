"""피어 역할과 역할별 프로토콜 상태."""

from dataclasses import dataclass, field, replace
from enum import StrEnum

from src.config import settings
from src.discovery.adverts import (
    ModuleClassAdvertisement,
    ModuleClassId,
    ModuleSpecAdvertisement,
    ModuleSpecId,
    PeerId,
)
from src.discovery.cache import AdvertCache
from src.discovery.constants import CACHING_ROLES, RELAYING_ROLES
from src.discovery.groups import GroupId
from src.discovery.index import FieldWeights, InvertedIndex, ScoredHit
from src.discovery.messages import QueryId


class PeerRole(StrEnum):
    EDGE = "edge"
    RENDEZVOUS = "rendezvous"
    RELAY = "relay"
    SUPER = "super"

    @property
    def caches(self) -> bool:
        """광고를 캐시하고 색인하는 역할 (rendezvous, super)."""
        return self.value in CACHING_ROLES

    @property
    def relays(self) -> bool:
        """메시지를 중계하는 역할 (relay, super)."""
        return self.value in RELAYING_ROLES


@dataclass
class PendingQuery:
    """엣지가 발행하고 아직 수집하지 않은 질의."""

    k: int
    issued_at: int
    deadline: int
    hits: dict[ModuleSpecId, ScoredHit] = field(default_factory=dict)
    last_hit_at: int | None = None

    def copy(self) -> "PendingQuery":
        return replace(self, hits=dict(self.hits))


@dataclass(frozen=True, slots=True)
class PublishedService:
    """엣지가 자신이 게시한 서비스를 기억해 두는 기록 (재게시 실패 시 전체 재전송용)."""

    advert: ModuleSpecAdvertisement
    group: GroupId
    lifetime_ms: int


@dataclass
class PeerState:
    """
    피어 하나의 프로토콜 상태.

    - edge: rendezvous_of, relay, local_cache, pending_queries, published, classes
    - rendezvous/super: cache, index, neighbors, edges, classes, seen_queries
    - relay/super: route_table
    """

    id: PeerId
    role: PeerRole
    rendezvous_of: PeerId | None = None
    relay: PeerId | None = None
    neighbors: frozenset[PeerId] = frozenset()
    route_table: dict[PeerId, PeerId] = field(default_factory=dict)
    cache: AdvertCache = field(
        default_factory=lambda: AdvertCache(settings.rendezvous_cache_capacity)
    )
    index: InvertedIndex = field(default_factory=InvertedIndex)
    local_cache: AdvertCache = field(
        default_factory=lambda: AdvertCache(settings.edge_cache_capacity)
    )
    seen_queries: dict[QueryId, int] = field(default_factory=dict)
    pending_queries: dict[QueryId, PendingQuery] = field(default_factory=dict)
    edges: dict[PeerId, PeerId | None] = field(default_factory=dict)
    classes: dict[ModuleClassId, ModuleClassAdvertisement] = field(default_factory=dict)
    published: dict[ModuleSpecId, PublishedService] = field(default_factory=dict)
    next_query_seq: int = 0
    weights: FieldWeights = field(default_factory=FieldWeights)

    def __post_init__(self) -> None:
        if self.role is PeerRole.EDGE and (self.neighbors or self.route_table):
            raise ValueError("엣지 피어는 이웃/라우팅 테이블을 가질 수 없습니다")

    def clone(self) -> "PeerState":
        """변경 가능한 컨테이너를 모두 복사한 사본 (순수 전이용)."""
        return replace(
            self,
            route_table=dict(self.route_table),
            cache=self.cache.copy(),
            index=self.index.copy(),
            local_cache=self.local_cache.copy(),
            seen_queries=dict(self.seen_queries),
            pending_queries={
                qid: pending.copy() for qid, pending in self.pending_queries.items()
            },
            edges=dict(self.edges),
            classes=dict(self.classes),
            published=dict(self.published),
        )

    def upstream(self) -> PeerId | None:
        """엣지가 랑데부에 닿기 위한 첫 홉 (릴레이 뒤에 있으면 릴레이)."""
        return self.relay or self.rendezvous_of
