"""
결정적 이산 사건 시뮬레이터 (simpy).

- 사건은 simpy 환경의 (시각, 예약 순서) 순으로 실행됩니다. seq는 예약 순서대로 증가하는 트레이스 번호입니다.
- 지연 지터와 모든 무작위 선택은 시드가 고정된 `random.Random` 하나에서 뽑습니다.
- 같은 (시나리오, 시드)는 바이트 단위로 같은 트레이스를 만듭니다.
- 피어가 떠나면 그 피어로 가는 전송 중 메시지는 도착 시점에 조용히 버려집니다.
"""

import random
from collections import deque
from dataclasses import dataclass

import simpy
from loguru import logger

from src.discovery.adverts import ModuleSpecId, PeerId
from src.discovery.errors import DiscoveryError, RoleMismatch
from src.discovery.groups import GroupId
from src.discovery.latency import LatencyModel, LinkLatency
from src.discovery.messages import (
    DiscoveryQuery,
    DiscoveryResponse,
    Message,
    Outbound,
    PublishRequest,
    QueryId,
    Relayed,
    RepublishRequest,
    kind_of,
    unwrap,
)
from src.discovery.metrics import Metrics
from src.discovery.overlay import (
    apply_message,
    declare_class,
    discover,
    finish_query,
    publish_service,
    register_edge,
    republish_service,
)
from src.discovery.peer import PeerRole, PeerState
from src.discovery.scenario import (
    DiscoverAction,
    JoinAction,
    LeaveAction,
    PublishAction,
    RepublishAction,
    Scenario,
    ScheduledAction,
    SwitchAction,
)

# === 사건 종류 ===


@dataclass(frozen=True, slots=True)
class Deliver:
    src: PeerId
    dst: PeerId
    message: Message
    incarnation: int


@dataclass(frozen=True, slots=True)
class PeerJoin:
    peer: PeerId


@dataclass(frozen=True, slots=True)
class PeerLeave:
    peer: PeerId


@dataclass(frozen=True, slots=True)
class NetworkSwitch:
    peer: PeerId
    rendezvous: PeerId
    relay: PeerId | None = None


@dataclass(frozen=True, slots=True)
class Action:
    """일정에 적힌 게시/재게시/탐색 동작."""

    action: ScheduledAction


@dataclass(frozen=True, slots=True)
class SweepTick:
    peer: PeerId


@dataclass(frozen=True, slots=True)
class Collect:
    """질의 마감 시각의 결과 수집."""

    peer: PeerId
    query_id: QueryId


EventKind = Deliver | PeerJoin | PeerLeave | NetworkSwitch | Action | SweepTick | Collect


@dataclass(frozen=True, slots=True)
class SimEvent:
    at: int
    seq: int
    kind: EventKind


@dataclass(frozen=True, slots=True)
class TraceRecord:
    at: int
    seq: int
    kind: str
    src: str
    dst: str
    summary: str

    def render(self) -> str:
        line = f"t={self.at} seq={self.seq} {self.kind} {self.src}->{self.dst} {self.summary}"
        return line.rstrip()

    def render_pipe(self) -> str:
        line = f"{self.at} | {self.src} -> {self.dst} | {self.kind} | {self.summary}"
        return line.rstrip()


def relay_routes(
    owner: PeerId,
    adjacency: dict[PeerId, list[PeerId]],
    relaying: set[PeerId],
) -> dict[PeerId, PeerId]:
    """
    링크 그래프에서 owner의 다음 홉 테이블을 너비 우선으로 계산합니다.

    중간 경유지는 릴레이 기능을 가진 피어만 허용합니다.
    """
    routes: dict[PeerId, PeerId] = {}
    queue: deque[tuple[PeerId, PeerId]] = deque()
    for neighbor in adjacency.get(owner, []):
        routes[neighbor] = neighbor
        queue.append((neighbor, neighbor))
    while queue:
        node, first_hop = queue.popleft()
        if node not in relaying:
            continue
        for neighbor in adjacency.get(node, []):
            if neighbor != owner and neighbor not in routes:
                routes[neighbor] = first_hop
                queue.append((neighbor, first_hop))
    return routes


def addressed_payload(peer: PeerId, message: Message) -> Message | None:
    """peer 자신에게 온 메시지 본문. 다른 피어로 중계할 봉투면 None."""
    while isinstance(message, Relayed):
        if message.target != peer:
            return None
        message = message.inner
    return message


class Simulator:
    """
    시나리오 하나를 실행하는 이벤트 루프.

    피어 상태 변경은 해당 피어의 사건 처리 중에만 일어납니다.
    """

    def __init__(self, scenario: Scenario, seed: int) -> None:
        self.scenario = scenario
        self.config = scenario.config
        self.seed = seed
        self.rng = random.Random(seed)
        self.env = simpy.Environment()
        self.now = 0
        self.metrics = Metrics()
        self.trace: list[TraceRecord] = []

        self._seq = 0
        self._online: set[PeerId] = set()
        self._incarnation: dict[PeerId, int] = {}
        self._query_issued: dict[QueryId, int] = {}
        # (랑데부, MSID) → 그 랑데부가 마지막으로 받아들인 게시/재게시의 만료 시각
        self._refresh_log: dict[tuple[PeerId, ModuleSpecId], int] = {}

        self.latency = LatencyModel(
            per_link={
                pair: LinkLatency(link.base_ms, link.jitter_ms)
                for pair, link in scenario.links.items()
            },
            default=LinkLatency(
                self.config.defaults.latency_base_ms,
                self.config.defaults.latency_jitter_ms,
            ),
        )
        self.states = self._build_states()

    # ------------------------------------------------------------------
    # 초기화
    # ------------------------------------------------------------------

    def _build_states(self) -> dict[PeerId, PeerState]:
        scenario = self.scenario
        adjacency: dict[PeerId, list[PeerId]] = {peer: [] for peer in scenario.peers}
        for pair in scenario.links:
            a, b = sorted(pair, key=str)
            adjacency[a].append(b)
            adjacency[b].append(a)
        for neighbors in adjacency.values():
            neighbors.sort(key=str)

        relaying = {peer for peer, spec in scenario.peers.items() if spec.role.relays}
        states: dict[PeerId, PeerState] = {}
        for peer_id, spec in scenario.peers.items():
            self._incarnation[peer_id] = 0
            if spec.role is PeerRole.EDGE:
                states[peer_id] = PeerState(
                    id=peer_id,
                    role=spec.role,
                    relay=scenario.peer(spec.relay) if spec.relay else None,
                    weights=self.config.field_weights,
                )
                continue
            neighbors = frozenset(
                other
                for other in adjacency[peer_id]
                if scenario.peers[other].role.caches
            )
            states[peer_id] = PeerState(
                id=peer_id,
                role=spec.role,
                neighbors=neighbors if spec.role.caches else frozenset(),
                route_table=(
                    relay_routes(peer_id, adjacency, relaying)
                    if spec.role.relays
                    else {}
                ),
                weights=self.config.field_weights,
            )
        return states

    def _schedule_initial(self) -> None:
        names = self.scenario.directory
        for peer_id in sorted(self.states, key=names.name_of):
            if not self.scenario.peers[peer_id].start_offline:
                self._push(0, PeerJoin(peer_id))

        for action in sorted(self.config.schedule, key=lambda a: a.at):
            peer = self.scenario.peer(action.peer)
            match action:
                case JoinAction():
                    self._push(action.at, PeerJoin(peer))
                case LeaveAction():
                    self._push(action.at, PeerLeave(peer))
                case SwitchAction():
                    relay = self.scenario.peer(action.relay) if action.relay else None
                    target = self.scenario.peer(action.rendezvous)
                    self._push(action.at, NetworkSwitch(peer, target, relay))
                case _:
                    self._push(action.at, Action(action))

        caching = sorted(
            (peer for peer, state in self.states.items() if state.role.caches),
            key=names.name_of,
        )
        interval = self.config.sweep_interval_ms
        for at in range(interval, self.config.horizon_ms + 1, interval):
            for peer in caching:
                self._push(at, SweepTick(peer))

    # ------------------------------------------------------------------
    # 사건 예약 / 전송
    # ------------------------------------------------------------------

    def _push(self, at: int, kind: EventKind) -> None:
        event = SimEvent(at=at, seq=self._seq, kind=kind)
        self._seq += 1
        timeout = self.env.timeout(at - self.env.now, value=event)
        timeout.callbacks.append(self._dispatch)

    def _record(self, event: SimEvent, kind: str, src: PeerId, dst: PeerId, summary: str) -> None:
        names = self.scenario.directory
        self.trace.append(
            TraceRecord(
                at=event.at,
                seq=event.seq,
                kind=kind,
                src=names.name_of(src),
                dst=names.name_of(dst),
                summary=summary,
            )
        )

    def _send(self, src: PeerId, outbound: list[Outbound]) -> None:
        for dst, message in outbound:
            self.metrics.message_counts[kind_of(message)] += 1
            self.metrics.in_flight += 1
            delay = self.latency.delay(src, dst, self.rng)
            self._push(
                self.now + delay,
                Deliver(src=src, dst=dst, message=message, incarnation=self._incarnation[dst]),
            )

    # ------------------------------------------------------------------
    # 실행
    # ------------------------------------------------------------------

    def run(self) -> tuple[Metrics, list[TraceRecord]]:
        """horizon_ms까지 모든 사건을 실행합니다."""
        logger.info(f"시뮬레이션 시작: seed={self.seed}, horizon={self.config.horizon_ms}ms")
        self._schedule_initial()
        # until 사건은 같은 시각의 다른 사건보다 먼저 처리되므로 horizon 시각까지 포함하려면 +1
        self.env.run(until=self.config.horizon_ms + 1)

        logger.info(
            f"시뮬레이션 종료: 질의 {self.metrics.queries_issued}건, "
            f"메시지 {self.metrics.sent}건, 전송 중 {self.metrics.in_flight}건"
        )
        return self.metrics, self.trace

    def _dispatch(self, timeout: simpy.Event) -> None:
        event: SimEvent = timeout.value
        self.now = event.at
        match event.kind:
            case Deliver():
                self._on_deliver(event, event.kind)
            case PeerJoin():
                self._on_join(event, event.kind)
            case PeerLeave():
                self._on_leave(event, event.kind)
            case NetworkSwitch():
                self._on_switch(event, event.kind)
            case Action():
                self._on_action(event, event.kind)
            case SweepTick():
                self._on_sweep(event.kind)
            case Collect():
                self._on_collect(event, event.kind)

    def _on_deliver(self, event: SimEvent, deliver: Deliver) -> None:
        self.metrics.in_flight -= 1
        message = deliver.message
        dst = deliver.dst
        if dst not in self._online or self._incarnation[dst] != deliver.incarnation:
            self.metrics.dropped += 1
            self._record(event, "Dropped", deliver.src, dst, f"{kind_of(message)} 수신 피어 이탈")
            logger.debug(f"메시지 폐기 (수신 피어 이탈): {kind_of(message)} → {dst}")
            return

        self.metrics.delivered += 1
        self._record(event, kind_of(message), deliver.src, dst, message.summary())

        state = self.states[dst]
        try:
            outbound = apply_message(state, message, self.now, deliver.src)
        except DiscoveryError as e:
            self.metrics.failed_actions += 1
            logger.warning(f"{self.scenario.directory.name_of(dst)} 메시지 처리 실패: {e}")
            return

        self._track_publication(state, addressed_payload(state.id, message))
        self._audit_responses(state, outbound)
        self._send(dst, outbound)

    def _track_publication(self, state: PeerState, message: Message | None) -> None:
        if message is None or not state.role.caches:
            return
        match message:
            case PublishRequest():
                msid = message.advert.msid
                lifetime = message.lifetime_ms
            case RepublishRequest():
                msid = message.msid
                lifetime = message.lifetime_ms
            case _:
                return
        entry = state.cache.entries.get(msid)
        if entry is not None and entry.expires_at == self.now + lifetime:
            self._refresh_log[(state.id, msid)] = entry.expires_at
        elif isinstance(message, PublishRequest):
            self.metrics.rejected_publications += 1

    def _audit_responses(self, state: PeerState, outbound: list[Outbound]) -> None:
        """응답 송신 시점에 만료되었거나 버려진 광고가 실렸는지 독립적으로 검사합니다."""
        for _, message in outbound:
            response = unwrap(message)
            if not isinstance(response, DiscoveryResponse) or response.responder != state.id:
                continue
            issued_at = self._query_issued.get(response.query_id, self.now)
            for item in response.hits:
                msid = item.hit.msid
                refreshed_until = self._refresh_log.get((state.id, msid), 0)
                if item.expires_at <= self.now or refreshed_until <= self.now:
                    self.metrics.stale_results += 1
                    logger.error(f"만료된 광고 응답: {msid} @ {state.id}")
                publisher = self.states.get(item.publisher)
                if (
                    publisher is not None
                    and publisher.rendezvous_of != state.id
                    and refreshed_until <= issued_at
                ):
                    self.metrics.abandoned_results += 1
                    logger.error(f"떠난 게시자의 만료 광고 응답: {msid} @ {state.id}")

    def _on_join(self, event: SimEvent, join: PeerJoin) -> None:
        peer = join.peer
        if peer in self._online:
            return
        self._online.add(peer)
        self._record(event, "PeerJoin", peer, peer, "")
        state = self.states[peer]
        if state.role is not PeerRole.EDGE:
            return
        spec = self.scenario.peers[peer]
        rendezvous = state.rendezvous_of or (
            self.scenario.peer(spec.rendezvous) if spec.rendezvous else None
        )
        if rendezvous is not None:
            new_state, outbound = register_edge(state, rendezvous)
            self.states[peer] = new_state
            self._send(peer, [outbound])

    def _on_leave(self, event: SimEvent, leave: PeerLeave) -> None:
        peer = leave.peer
        if peer not in self._online:
            return
        self._online.discard(peer)
        self._incarnation[peer] += 1
        self._record(event, "PeerLeave", peer, peer, "")

    def network_switch(
        self, peer: PeerId, rendezvous: PeerId, relay: PeerId | None = None
    ) -> None:
        """
        엣지를 새 랑데부에 다시 등록합니다.

        이전 랑데부의 광고는 취소하지 않으며 수명이 끝날 때 사라집니다.
        이후 재게시는 새 랑데부로 갑니다.

        Raises:
            RoleMismatch: 엣지가 아니거나 대상이 rendezvous/super가 아닌 경우
        """
        state = self.states[peer]
        if not self.states[rendezvous].role.caches:
            raise RoleMismatch(f"전환 대상이 랑데부가 아닙니다: {rendezvous}")
        new_state, outbound = register_edge(state, rendezvous, relay)
        self.states[peer] = new_state
        if peer in self._online:
            self._send(peer, [outbound])

    def _on_switch(self, event: SimEvent, switch: NetworkSwitch) -> None:
        names = self.scenario.directory
        summary = f"relay={names.name_of(switch.relay)}" if switch.relay else ""
        self._record(event, "NetworkSwitch", switch.peer, switch.rendezvous, summary)
        try:
            self.network_switch(switch.peer, switch.rendezvous, switch.relay)
        except DiscoveryError as e:
            self.metrics.failed_actions += 1
            logger.warning(f"네트워크 전환 실패: {e}")

    def _on_action(self, event: SimEvent, scheduled: Action) -> None:
        action = scheduled.action
        peer = self.scenario.peer(action.peer)
        name = self.scenario.directory.name_of(peer)
        if peer not in self._online:
            self.metrics.failed_actions += 1
            logger.warning(f"오프라인 피어의 동작 건너뜀: {name} {action.action}")
            self._record(event, "ActionFailed", peer, peer, f"{action.action} 피어 오프라인")
            return

        defaults = self.config.defaults
        state = self.states[peer]
        try:
            match action:
                case PublishAction():
                    advert = self.scenario.adverts[action.advert]
                    if advert.class_id not in state.classes:
                        state = declare_class(state, self.scenario.class_of(advert))
                    state, outbound = publish_service(
                        state,
                        advert,
                        action.lifetime_ms or defaults.lifetime_ms,
                        GroupId.parse(action.group),
                    )
                case RepublishAction():
                    advert = self.scenario.adverts[action.advert]
                    state, outbound = republish_service(
                        state, advert.msid, action.lifetime_ms or defaults.lifetime_ms
                    )
                case DiscoverAction():
                    state, outbound = discover(
                        state,
                        action.terms,
                        GroupId.parse(action.group),
                        action.k or defaults.k,
                        action.hop_limit if action.hop_limit is not None else defaults.hop_limit,
                        action.timeout_ms or defaults.timeout_ms,
                        self.now,
                    )
                    query = unwrap(outbound[1])
                    assert isinstance(query, DiscoveryQuery)
                    self.metrics.queries_issued += 1
                    self._query_issued[query.query_id] = self.now
                    self._push(query.deadline, Collect(peer, query.query_id))
                case _:
                    return
        except DiscoveryError as e:
            self.metrics.failed_actions += 1
            logger.warning(f"{name} {action.action} 실패: {e}")
            self._record(event, "ActionFailed", peer, peer, f"{action.action} {e}")
            return

        self.states[peer] = state
        self._record(event, action.action.capitalize(), peer, outbound[0], outbound[1].summary())
        self._send(peer, [outbound])

    def _on_sweep(self, tick: SweepTick) -> None:
        state = self.states[tick.peer]
        removed = state.cache.expire_sweep(self.now)
        for msid in removed:
            state.index.remove_advert(msid)
        self.metrics.expired_count += len(removed)
        if removed:
            logger.debug(f"{tick.peer} 만료 스윕: {len(removed)}건 제거")
        state.seen_queries = {
            query_id: deadline
            for query_id, deadline in state.seen_queries.items()
            if deadline > self.now
        }

    def _on_collect(self, event: SimEvent, collect: Collect) -> None:
        state = self.states[collect.peer]
        pending = state.pending_queries.get(collect.query_id)
        if pending is None:
            return
        new_state, hits = finish_query(state, collect.query_id, self.now)
        self.states[collect.peer] = new_state
        self.metrics.hits += len(hits)
        if hits:
            self.metrics.queries_completed += 1
            assert pending.last_hit_at is not None
            self.metrics.latencies.append(
                (collect.query_id, pending.last_hit_at - pending.issued_at)
            )
        names = ",".join(str(hit.msid) for hit in hits)
        summary = f"qid={collect.query_id} hits={len(hits)} [{names}]"
        self._record(event, "Collect", collect.peer, collect.peer, summary)


def run_scenario(scenario: Scenario, seed: int) -> tuple[Metrics, list[TraceRecord]]:
    """
    시나리오를 실행하고 (지표, 트레이스)를 반환합니다.

    같은 (scenario, seed)는 항상 같은 트레이스를 만듭니다.
    """
    return Simulator(scenario, seed).run()
