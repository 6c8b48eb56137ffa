"""역할별 메시지 처리기 (rendezvous, relay, edge)."""

from dataclasses import replace

from loguru import logger

from src.discovery.adverts import ModuleSpecId, PeerId
from src.discovery.errors import EmptyQuery, InvalidLifetime, NotFound, UnroutableTarget
from src.discovery.groups import in_scope
from src.discovery.interfaces import Dispatch, RoleHandler
from src.discovery.messages import (
    DiscoveryQuery,
    DiscoveryResponse,
    Message,
    Outbound,
    PublishRequest,
    Register,
    Relayed,
    RepublishRejected,
    RepublishRequest,
    ResponseHit,
)
from src.discovery.peer import PeerState


def reply_route(
    state: PeerState, target: PeerId, message: Message, via: PeerId | None
) -> Outbound:
    """
    target에게 보낼 메시지를 릴레이 경유 여부에 맞게 포장합니다.

    via가 자기 자신(super 피어)이면 직접 보냅니다.
    """
    if via is None or via == state.id:
        return (target, message)
    return (via, Relayed(inner=message, target=target))


def toward_rendezvous(state: PeerState, message: Message) -> Outbound:
    """엣지에서 자신의 랑데부로 향하는 메시지를 포장합니다."""
    assert state.rendezvous_of is not None
    return reply_route(state, state.rendezvous_of, message, state.relay)


class RendezvousHandler(RoleHandler):
    """
    랑데부 동작.

    - 엣지 등록 기록
    - 광고 캐시/색인 (광고 자체는 다른 랑데부로 전달하지 않음)
    - 질의 응답 및 이웃 랑데부로의 플러딩 (중복 억제, 홉 제한)
    """

    def handles(self, message: Message) -> bool:
        return isinstance(
            message, Register | PublishRequest | RepublishRequest | DiscoveryQuery
        )

    def handle(
        self,
        state: PeerState,
        message: Message,
        now: int,
        sender: PeerId | None,
        dispatch: Dispatch,
    ) -> list[Outbound]:
        match message:
            case Register():
                state.edges[message.edge] = message.relay
                logger.debug(f"{state.id} 엣지 등록: {message.edge}")
                return []
            case PublishRequest():
                self._publish(state, message, now)
                return []
            case RepublishRequest():
                return self._republish(state, message, now)
            case DiscoveryQuery():
                return self._answer(state, message, now, sender)
        return []

    def _publish(self, state: PeerState, message: PublishRequest, now: int) -> None:
        advert = message.advert
        if message.module_class is not None:
            state.classes[message.module_class.mcid] = message.module_class
        if advert.class_id not in state.classes:
            logger.debug(
                f"{state.id} 모듈 클래스 미확인으로 게시 거부: {advert.msid}"
            )
            return

        try:
            evicted = state.cache.publish(
                advert, message.publisher, message.group, message.lifetime_ms, now
            )
        except InvalidLifetime as e:
            logger.debug(f"{state.id} 게시 거부: {e}")
            return
        if evicted is not None:
            state.index.remove_advert(evicted)
        # 같은 MSID 재게시는 색인을 다시 만듭니다.
        state.index.remove_advert(advert.msid)
        state.index.index_advert(advert, state.weights)

    def _republish(
        self, state: PeerState, message: RepublishRequest, now: int
    ) -> list[Outbound]:
        try:
            state.cache.republish(message.msid, message.lifetime_ms, now)
            return []
        except (NotFound, InvalidLifetime) as e:
            logger.debug(f"{state.id} 재게시 거부: {e}")
            rejection = RepublishRejected(msid=message.msid)
            relay = state.edges.get(message.publisher)
            return [reply_route(state, message.publisher, rejection, relay)]

    def _answer(
        self,
        state: PeerState,
        query: DiscoveryQuery,
        now: int,
        sender: PeerId | None,
    ) -> list[Outbound]:
        if query.query_id in state.seen_queries:
            logger.debug(f"{state.id} 중복 질의 무시: {query.query_id}")
            return []
        state.seen_queries[query.query_id] = query.deadline

        def accept(msid: ModuleSpecId) -> bool:
            entry = state.cache.lookup(msid, now)
            return entry is not None and in_scope(query.group, entry.group)

        outbound: list[Outbound] = []
        try:
            hits, total = state.index.search(query.terms, query.k, accept=accept)
        except (EmptyQuery, ValueError) as e:
            logger.debug(f"{state.id} 질의 처리 불가: {e}")
            hits, total = [], 0

        if hits:
            items = []
            for hit in hits:
                entry = state.cache.entries[hit.msid]
                items.append(
                    ResponseHit(
                        hit=hit,
                        advert=entry.advert,
                        group=entry.group,
                        publisher=entry.publisher,
                        expires_at=entry.expires_at,
                    )
                )
            response = DiscoveryResponse(
                query_id=query.query_id,
                responder=state.id,
                hits=tuple(items),
                total_matched=total,
            )
            outbound.append(
                reply_route(state, query.originator, response, query.reply_via)
            )

        if query.hops_remaining > 0:
            forwarded = replace(query, hops_remaining=query.hops_remaining - 1)
            for neighbor in sorted(state.neighbors, key=str):
                if neighbor != sender:
                    outbound.append((neighbor, forwarded))
        return outbound


class RelayHandler(RoleHandler):
    """
    릴레이 동작.

    방화벽/NAT 뒤의 피어를 위해 Relayed 봉투를 라우팅 테이블에 따라 전달합니다.
    봉투를 건넨 피어로 가는 직접 경로는 자동으로 학습합니다.
    """

    def handles(self, message: Message) -> bool:
        return isinstance(message, Relayed)

    def handle(
        self,
        state: PeerState,
        message: Message,
        now: int,
        sender: PeerId | None,
        dispatch: Dispatch,
    ) -> list[Outbound]:
        assert isinstance(message, Relayed)
        if sender is not None and sender != state.id:
            state.route_table.setdefault(sender, sender)

        if message.target == state.id:
            return dispatch(state, message.inner, now, sender)

        next_hop = state.route_table.get(message.target)
        if next_hop is None:
            raise UnroutableTarget(f"{state.id}에 {message.target} 경로가 없습니다")
        if next_hop == message.target:
            return [(message.target, message.inner)]
        return [(next_hop, message)]


class EdgeHandler(RoleHandler):
    """
    엣지 동작.

    - 질의 응답 병합 (MSID 중복 시 최고 점수 유지)
    - 발견한 MSA를 남은 수명으로 로컬 캐시에 저장
    - 재게시 거부 시 전체 광고 재전송
    """

    def handles(self, message: Message) -> bool:
        return isinstance(message, DiscoveryResponse | RepublishRejected)

    def handle(
        self,
        state: PeerState,
        message: Message,
        now: int,
        sender: PeerId | None,
        dispatch: Dispatch,
    ) -> list[Outbound]:
        match message:
            case DiscoveryResponse():
                self._merge(state, message, now)
                return []
            case RepublishRejected():
                return self._republish_full(state, message)
        return []

    def _merge(self, state: PeerState, response: DiscoveryResponse, now: int) -> None:
        for item in response.hits:
            remaining = item.expires_at - now
            if remaining > 0:
                state.local_cache.publish(
                    item.advert, item.publisher, item.group, remaining, now
                )

        pending = state.pending_queries.get(response.query_id)
        if pending is None:
            logger.debug(f"{state.id} 수집이 끝난 질의의 응답: {response.query_id}")
            return
        for item in response.hits:
            current = pending.hits.get(item.hit.msid)
            if current is None or item.hit.score > current.score:
                pending.hits[item.hit.msid] = item.hit
        if response.hits:
            pending.last_hit_at = now

    def _republish_full(
        self, state: PeerState, message: RepublishRejected
    ) -> list[Outbound]:
        service = state.published.get(message.msid)
        if service is None or state.rendezvous_of is None:
            return []
        request = PublishRequest(
            advert=service.advert,
            lifetime_ms=service.lifetime_ms,
            group=service.group,
            publisher=state.id,
            module_class=state.classes.get(service.advert.class_id),
        )
        logger.debug(f"{state.id} 재게시 거부 → 전체 재게시: {message.msid}")
        return [toward_rendezvous(state, request)]
