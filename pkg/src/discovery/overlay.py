"""
피어 역할별 프로토콜 전이.

- `handle_message`: 수신 메시지 하나에 대한 순수 전이 (입력 상태는 변경하지 않음)
- `apply_message`: 같은 전이를 제자리에서 수행 (시뮬레이터 전용 경로)
- 엣지 연산: 등록, 클래스 선언, 게시/재게시, 탐색, 결과 수집, 로컬 검색

모든 엣지 연산은 새 상태와 송신 메시지를 반환하며 인자로 받은 상태는 건드리지 않습니다.
"""

from loguru import logger

from src.discovery.adverts import (
    ModuleClassAdvertisement,
    ModuleSpecAdvertisement,
    ModuleSpecId,
    PeerId,
)
from src.discovery.errors import (
    DeadlineNotReached,
    EmptyQuery,
    InvalidLifetime,
    NotFound,
    NotRegistered,
    RoleMismatch,
    UnknownModuleClass,
    UnknownQuery,
)
from src.discovery.groups import GroupId, in_scope
from src.discovery.handlers import toward_rendezvous
from src.discovery.index import InvertedIndex, ScoredHit, tokenize
from src.discovery.messages import (
    DiscoveryQuery,
    Message,
    Outbound,
    PublishRequest,
    QueryId,
    Register,
    RepublishRequest,
    kind_of,
)
from src.discovery.peer import PeerRole, PeerState, PendingQuery, PublishedService
from src.discovery.registry import ROLE_HANDLERS

# === 메시지 처리 ===


def apply_message(
    state: PeerState, message: Message, now: int, sender: PeerId | None = None
) -> list[Outbound]:
    """
    메시지를 역할 핸들러로 보내고 state를 제자리에서 변경합니다.

    역할이 처리하지 않는 메시지는 무시합니다 (빈 목록).

    Raises:
        UnroutableTarget: 릴레이에 대상 경로가 없는 경우
    """
    for handler in ROLE_HANDLERS[state.role]:
        if handler.handles(message):
            return handler.handle(state, message, now, sender, apply_message)
    logger.debug(f"{state.id}({state.role}) 처리 대상 아님: {kind_of(message)}")
    return []


def handle_message(
    state: PeerState, message: Message, now: int, sender: PeerId | None = None
) -> tuple[PeerState, list[Outbound]]:
    """
    순수 전이. 같은 입력에는 항상 같은 (새 상태, 송신 목록)을 반환합니다.

    Args:
        state: 수신 피어의 현재 상태 (변경되지 않음)
        message: 이 피어로 배달된 메시지
        now: 현재 시뮬레이션 시각 (ms)
        sender: 직전 홉 송신자 (플러딩 시 되돌려 보내지 않기 위해 사용)

    Returns:
        tuple[PeerState, list[Outbound]]: (새 상태, (목적지, 메시지) 목록)
    """
    new_state = state.clone()
    outbound = apply_message(new_state, message, now, sender)
    return new_state, outbound


# === 엣지 연산 ===


def _require_edge(state: PeerState, operation: str) -> None:
    if state.role is not PeerRole.EDGE:
        raise RoleMismatch(f"{operation}은(는) 엣지 전용입니다: {state.id}({state.role})")


def _require_registered(state: PeerState, operation: str) -> None:
    _require_edge(state, operation)
    if state.rendezvous_of is None:
        raise NotRegistered(f"랑데부에 등록되지 않은 엣지: {state.id}")


def register_edge(
    edge: PeerState, rendezvous: PeerId, relay: PeerId | None = None
) -> tuple[PeerState, Outbound]:
    """
    엣지를 랑데부에 등록합니다.

    이전 랑데부에는 아무것도 보내지 않습니다. 거기 남은 광고는 수명이 끝나면 사라집니다.

    Args:
        edge: 엣지 상태
        rendezvous: 새 랑데부
        relay: 경유할 릴레이. None이면 기존 릴레이 설정을 유지합니다.

    Raises:
        RoleMismatch: 엣지가 아닌 피어가 호출한 경우
    """
    _require_edge(edge, "register_edge")
    new_state = edge.clone()
    new_state.rendezvous_of = rendezvous
    if relay is not None:
        new_state.relay = relay
    register = Register(edge=new_state.id, relay=new_state.relay)
    return new_state, toward_rendezvous(new_state, register)


def declare_class(edge: PeerState, mca: ModuleClassAdvertisement) -> PeerState:
    """게시 전에 서비스의 모듈 클래스(MCA)를 선언합니다."""
    _require_edge(edge, "declare_class")
    new_state = edge.clone()
    new_state.classes[mca.mcid] = mca
    return new_state


def publish_service(
    edge: PeerState,
    advert: ModuleSpecAdvertisement,
    lifetime_ms: int,
    group: GroupId,
) -> tuple[PeerState, Outbound]:
    """
    MSA를 자신의 랑데부에 게시합니다. 릴레이 뒤에 있으면 Relayed로 포장됩니다.

    Raises:
        NotRegistered: 등록 전인 경우
        RoleMismatch: 엣지가 아닌 경우
        UnknownModuleClass: MSA의 모듈 클래스를 선언하지 않은 경우
        InvalidLifetime: 수명이 0 이하인 경우
    """
    _require_registered(edge, "publish_service")
    if lifetime_ms <= 0:
        raise InvalidLifetime(f"수명은 양수여야 합니다: {lifetime_ms}")
    mca = edge.classes.get(advert.class_id)
    if mca is None:
        raise UnknownModuleClass(f"선언되지 않은 모듈 클래스: {advert.class_id}")

    new_state = edge.clone()
    new_state.published[advert.msid] = PublishedService(
        advert=advert, group=group, lifetime_ms=lifetime_ms
    )
    request = PublishRequest(
        advert=advert,
        lifetime_ms=lifetime_ms,
        group=group,
        publisher=new_state.id,
        module_class=mca,
    )
    return new_state, toward_rendezvous(new_state, request)


def republish_service(
    edge: PeerState, msid: ModuleSpecId, lifetime_ms: int
) -> tuple[PeerState, Outbound]:
    """
    게시했던 서비스의 수명 연장을 현재 랑데부에 요청합니다.

    Raises:
        NotRegistered: 등록 전인 경우
        NotFound: 이 엣지가 게시한 적 없는 MSID
        InvalidLifetime: 수명이 0 이하인 경우
    """
    _require_registered(edge, "republish_service")
    if lifetime_ms <= 0:
        raise InvalidLifetime(f"수명은 양수여야 합니다: {lifetime_ms}")
    service = edge.published.get(msid)
    if service is None:
        raise NotFound(f"게시한 적 없는 서비스: {msid}")

    new_state = edge.clone()
    new_state.published[msid] = PublishedService(
        advert=service.advert, group=service.group, lifetime_ms=lifetime_ms
    )
    request = RepublishRequest(msid=msid, lifetime_ms=lifetime_ms, publisher=new_state.id)
    return new_state, toward_rendezvous(new_state, request)


def discover(
    edge: PeerState,
    terms: str,
    group: GroupId,
    k: int,
    hop_limit: int,
    timeout_ms: int,
    now: int,
) -> tuple[PeerState, Outbound]:
    """
    탐색 질의를 발행합니다.

    새 QueryId를 마감 시각 `now + timeout_ms`와 함께 pending_queries에 기록하고
    질의를 랑데부 방향으로 보냅니다.

    Raises:
        NotRegistered: 등록 전인 경우
        EmptyQuery: 검색어에서 토큰이 나오지 않는 경우
        ValueError: k < 1, hop_limit < 0, timeout_ms <= 0
    """
    _require_registered(edge, "discover")
    if not tokenize(terms):
        raise EmptyQuery(f"질의에서 토큰을 추출할 수 없습니다: {terms!r}")
    if k < 1:
        raise ValueError(f"k는 1 이상이어야 합니다: {k}")
    if hop_limit < 0:
        raise ValueError(f"hop_limit은 0 이상이어야 합니다: {hop_limit}")
    if timeout_ms <= 0:
        raise ValueError(f"timeout_ms는 양수여야 합니다: {timeout_ms}")

    new_state = edge.clone()
    query_id = QueryId(originator=str(new_state.id), sequence=new_state.next_query_seq)
    new_state.next_query_seq += 1
    deadline = now + timeout_ms
    new_state.pending_queries[query_id] = PendingQuery(
        k=k, issued_at=now, deadline=deadline
    )
    query = DiscoveryQuery(
        query_id=query_id,
        originator=new_state.id,
        terms=terms,
        group=group,
        k=k,
        hops_remaining=hop_limit,
        deadline=deadline,
        reply_via=new_state.relay,
    )
    return new_state, toward_rendezvous(new_state, query)


def collect_results(edge: PeerState, query_id: QueryId, now: int) -> list[ScoredHit]:
    """
    마감된 질의의 결과를 병합해 반환합니다.

    MSID 중복은 최고 점수만 남기고, 점수 내림차순 → MSID 오름차순으로 정렬해 k개로 자릅니다.

    Raises:
        UnknownQuery: 진행 중인 질의가 아닌 경우
        DeadlineNotReached: now가 마감 시각 전인 경우
    """
    pending = edge.pending_queries.get(query_id)
    if pending is None:
        raise UnknownQuery(f"진행 중인 질의가 아닙니다: {query_id}")
    if now < pending.deadline:
        raise DeadlineNotReached(
            f"마감 전 수집 시도: {query_id} (now={now}, deadline={pending.deadline})"
        )
    ranked = sorted(pending.hits.values(), key=ScoredHit.sort_key)
    return ranked[: pending.k]


def finish_query(
    edge: PeerState, query_id: QueryId, now: int
) -> tuple[PeerState, list[ScoredHit]]:
    """결과를 수집하고 질의를 pending 목록에서 제거합니다."""
    hits = collect_results(edge, query_id, now)
    new_state = edge.clone()
    del new_state.pending_queries[query_id]
    return new_state, hits


def search_local(
    edge: PeerState, terms: str, group: GroupId, k: int, now: int
) -> list[ScoredHit]:
    """
    엣지 로컬 캐시에 남아 있는 광고만으로 검색합니다.

    Raises:
        EmptyQuery: 검색어에서 토큰이 나오지 않는 경우
    """
    index = InvertedIndex()
    for entry in edge.local_cache.live_entries(now):
        if in_scope(group, entry.group):
            index.index_advert(entry.advert, edge.weights)
    hits, _ = index.search(terms, k)
    return hits
