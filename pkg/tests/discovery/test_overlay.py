import pytest

from src.discovery.errors import (
    DeadlineNotReached,
    EmptyQuery,
    InvalidLifetime,
    NotFound,
    NotRegistered,
    RoleMismatch,
    UnknownModuleClass,
    UnknownQuery,
    UnroutableTarget,
)
from src.discovery.groups import ROOT_GROUP, GroupId
from src.discovery.index import ScoredHit
from src.discovery.messages import (
    DiscoveryQuery,
    DiscoveryResponse,
    PublishRequest,
    QueryId,
    Register,
    Relayed,
    RepublishRejected,
    RepublishRequest,
    ResponseHit,
)
from src.discovery.overlay import (
    collect_results,
    declare_class,
    discover,
    finish_query,
    handle_message,
    publish_service,
    register_edge,
    republish_service,
    search_local,
)
from src.discovery.peer import PeerRole, PeerState
from tests.conftest import EDGE_A, EDGE_B, RDV_1, RDV_2, RDV_3, RELAY_1, SUPER_1

WEATHER_GROUP = GroupId.parse("/mobile/weather")


def _publish_request(advert, default_class, lifetime_ms=10_000, group=ROOT_GROUP):
    return PublishRequest(
        advert=advert,
        lifetime_ms=lifetime_ms,
        group=group,
        publisher=EDGE_A,
        module_class=default_class,
    )


def _query(terms="weather", hops=2, group=ROOT_GROUP, reply_via=None, sequence=0):
    return DiscoveryQuery(
        query_id=QueryId(originator=str(EDGE_B), sequence=sequence),
        originator=EDGE_B,
        terms=terms,
        group=group,
        k=10,
        hops_remaining=hops,
        deadline=6000,
        reply_via=reply_via,
    )


@pytest.fixture
def stocked_rendezvous(rendezvous_state, weather_advert, picture_advert, default_class):
    """weather / picture 광고가 시각 0에 게시된 랑데부."""
    state = rendezvous_state
    for advert in (weather_advert, picture_advert):
        state, _ = handle_message(state, _publish_request(advert, default_class), now=0)
    return state


@pytest.fixture
def registered_edge(edge_state, default_class):
    state, _ = register_edge(edge_state, RDV_1)
    return declare_class(state, default_class)


# === 등록 / 게시 ===


def test_register_edge_direct_and_via_relay(edge_state):
    """
    [GREEN]
    릴레이가 없으면 랑데부로 직접, 있으면 Relayed 봉투로 릴레이에 보냅니다.
    """
    direct, (dst, message) = register_edge(edge_state, RDV_1)

    assert direct.rendezvous_of == RDV_1
    assert dst == RDV_1
    assert message == Register(edge=EDGE_A, relay=None)

    relayed, (dst, message) = register_edge(edge_state, RDV_1, RELAY_1)

    assert dst == RELAY_1
    assert message == Relayed(inner=Register(edge=EDGE_A, relay=RELAY_1), target=RDV_1)
    assert edge_state.rendezvous_of is None


def test_register_edge_keeps_relay_on_switch(edge_state):
    state, _ = register_edge(edge_state, RDV_1, RELAY_1)

    switched, (dst, message) = register_edge(state, RDV_2)

    assert switched.rendezvous_of == RDV_2
    assert switched.relay == RELAY_1
    assert dst == RELAY_1
    assert message.target == RDV_2


def test_register_edge_rejects_non_edge(rendezvous_state):
    with pytest.raises(RoleMismatch):
        register_edge(rendezvous_state, RDV_2)


def test_publish_service_checks(edge_state, registered_edge, weather_advert, default_class):
    """
    [GREEN]
    등록 전 게시는 NotRegistered, 클래스 미선언은 UnknownModuleClass,
    수명 0 이하는 InvalidLifetime입니다.
    """
    with pytest.raises(NotRegistered):
        publish_service(edge_state, weather_advert, 1000, ROOT_GROUP)

    undeclared, _ = register_edge(edge_state, RDV_1)
    with pytest.raises(UnknownModuleClass):
        publish_service(undeclared, weather_advert, 1000, ROOT_GROUP)

    with pytest.raises(InvalidLifetime):
        publish_service(registered_edge, weather_advert, 0, ROOT_GROUP)


def test_publish_service_sends_request_with_class(registered_edge, weather_advert, default_class):
    state, (dst, message) = publish_service(registered_edge, weather_advert, 5000, WEATHER_GROUP)

    assert dst == RDV_1
    assert isinstance(message, PublishRequest)
    assert message.module_class == default_class
    assert message.group == WEATHER_GROUP
    assert state.published[weather_advert.msid].lifetime_ms == 5000
    assert registered_edge.published == {}


def test_rendezvous_caches_and_indexes_publication(
    rendezvous_state, weather_advert, default_class
):
    """
    [GREEN]
    handle_message는 입력 상태를 바꾸지 않고 새 상태를 반환합니다.
    """
    state, outbound = handle_message(
        rendezvous_state, _publish_request(weather_advert, default_class), now=100
    )

    assert outbound == []
    assert state.cache.entries[weather_advert.msid].expires_at == 10_100
    assert weather_advert.msid in state.index
    assert default_class.mcid in state.classes
    assert len(rendezvous_state.cache) == 0
    assert weather_advert.msid not in rendezvous_state.index


def test_rendezvous_rejects_publication_of_unknown_class(rendezvous_state, weather_advert):
    request = PublishRequest(
        advert=weather_advert, lifetime_ms=1000, group=ROOT_GROUP, publisher=EDGE_A
    )

    state, outbound = handle_message(rendezvous_state, request, now=0)

    assert outbound == []
    assert len(state.cache) == 0


def test_rendezvous_publication_replaces_index_entry(
    stocked_rendezvous, weather_advert, default_class
):
    state, _ = handle_message(
        stocked_rendezvous,
        _publish_request(weather_advert, default_class, lifetime_ms=50_000),
        now=10,
    )

    assert state.cache.entries[weather_advert.msid].expires_at == 50_010
    assert state.index.doc_count == 2


def test_rendezvous_records_registration(rendezvous_state):
    state, _ = handle_message(rendezvous_state, Register(edge=EDGE_A, relay=RELAY_1), now=0)

    assert state.edges == {EDGE_A: RELAY_1}


# === 질의 ===


def test_query_answers_and_floods_neighbors(stocked_rendezvous, weather_advert):
    """
    [GREEN]
    매칭이 있으면 발신자에게 응답하고, 홉이 남아 있으면 모든 이웃에 hops-1로 전달합니다.
    """
    state, outbound = handle_message(stocked_rendezvous, _query(hops=2), now=5000)

    assert [dst for dst, _ in outbound] == [EDGE_B, RDV_2, RDV_3]
    response = outbound[0][1]
    assert isinstance(response, DiscoveryResponse)
    assert response.responder == RDV_1
    assert response.total_matched == 1
    assert [item.hit.msid for item in response.hits] == [weather_advert.msid]
    assert response.hits[0].expires_at == 10_000
    assert all(message.hops_remaining == 1 for _, message in outbound[1:])
    assert QueryId(str(EDGE_B), 0) in state.seen_queries


def test_query_with_zero_hops_is_not_forwarded(stocked_rendezvous):
    _, outbound = handle_message(stocked_rendezvous, _query(hops=0), now=5000)

    assert [dst for dst, _ in outbound] == [EDGE_B]


def test_query_not_sent_back_to_sender(stocked_rendezvous):
    _, outbound = handle_message(stocked_rendezvous, _query(), now=5000, sender=RDV_2)

    assert [dst for dst, _ in outbound] == [EDGE_B, RDV_3]


def test_duplicate_query_is_dropped(stocked_rendezvous):
    """[GREEN] 이미 본 QueryId는 응답도 전달도 하지 않습니다."""
    state, _ = handle_message(stocked_rendezvous, _query(), now=5000)

    again, outbound = handle_message(state, _query(), now=5010, sender=RDV_2)

    assert outbound == []
    assert again.seen_queries == state.seen_queries


def test_query_without_matches_only_forwards(stocked_rendezvous):
    _, outbound = handle_message(stocked_rendezvous, _query(terms="zz"), now=5000)

    assert [dst for dst, _ in outbound] == [RDV_2, RDV_3]


def test_query_respects_group_scope(rendezvous_state, weather_advert, default_class):
    state, _ = handle_message(
        rendezvous_state,
        _publish_request(weather_advert, default_class, group=WEATHER_GROUP),
        now=0,
    )

    _, inside = handle_message(state, _query(group=GroupId.parse("/mobile"), hops=0), now=10)
    _, outside = handle_message(
        state, _query(group=GroupId.parse("/mobile/picture"), hops=0), now=10
    )

    assert len(inside) == 1
    assert outside == []


def test_query_skips_expired_entries(stocked_rendezvous):
    """[GREEN] 만료 시각에 도달한 광고는 스윕 전이라도 응답에 포함하지 않습니다."""
    _, outbound = handle_message(stocked_rendezvous, _query(hops=0), now=10_000)

    assert outbound == []


def test_query_reply_goes_through_relay(stocked_rendezvous):
    _, outbound = handle_message(stocked_rendezvous, _query(hops=0, reply_via=RELAY_1), now=10)

    dst, message = outbound[0]
    assert dst == RELAY_1
    assert isinstance(message, Relayed)
    assert message.target == EDGE_B
    assert isinstance(message.inner, DiscoveryResponse)


@pytest.mark.parametrize("reply_via", [None, RELAY_1])
def test_super_peer_answers_like_rendezvous(
    rendezvous_state, super_state, weather_advert, picture_advert, default_class, reply_via
):
    """
    [GREEN]
    super 피어는 같은 입력에 대해 랑데부와 같은 목적지, 같은 결과를 냅니다.
    """
    results = []
    for state in (rendezvous_state, super_state):
        for advert in (weather_advert, picture_advert):
            state, _ = handle_message(state, _publish_request(advert, default_class), now=0)
        _, outbound = handle_message(state, _query(reply_via=reply_via), now=10, sender=RDV_2)
        results.append(outbound)

    plain, combined = results
    assert [dst for dst, _ in plain] == [dst for dst, _ in combined]
    plain_hits = plain[0][1].inner.hits if reply_via else plain[0][1].hits
    combined_hits = combined[0][1].inner.hits if reply_via else combined[0][1].hits
    assert plain_hits == combined_hits


def test_super_peer_replies_directly_when_it_is_the_relay(stocked_rendezvous, super_state):
    state = PeerState(
        id=SUPER_1,
        role=PeerRole.SUPER,
        cache=stocked_rendezvous.cache.copy(),
        index=stocked_rendezvous.index.copy(),
        classes=dict(stocked_rendezvous.classes),
    )

    _, outbound = handle_message(state, _query(hops=0, reply_via=SUPER_1), now=10)

    assert outbound[0][0] == EDGE_B
    assert isinstance(outbound[0][1], DiscoveryResponse)


# === 릴레이 ===


def test_relay_unwraps_for_final_hop_and_learns_sender(relay_state):
    """
    [GREEN]
    다음 홉이 대상이면 봉투를 벗겨 보내고, 봉투를 건넨 피어로 가는 경로를 학습합니다.
    """
    inner = Register(edge=EDGE_A, relay=RELAY_1)

    state, outbound = handle_message(
        relay_state, Relayed(inner=inner, target=RDV_1), now=0, sender=EDGE_A
    )

    assert outbound == [(RDV_1, inner)]
    assert state.route_table[EDGE_A] == EDGE_A
    assert EDGE_A not in relay_state.route_table


def test_relay_forwards_envelope_to_next_hop(relay_state):
    envelope = Relayed(inner=Register(edge=EDGE_A), target=RDV_2)

    _, outbound = handle_message(relay_state, envelope, now=0, sender=EDGE_A)

    assert outbound == [(RDV_1, envelope)]


def test_relay_without_route_raises(relay_state):
    with pytest.raises(UnroutableTarget):
        handle_message(
            relay_state, Relayed(inner=Register(edge=EDGE_A), target=RDV_3), now=0
        )


def test_relay_ignores_unwrapped_messages(relay_state):
    state, outbound = handle_message(relay_state, _query(), now=0)

    assert outbound == []
    assert state.seen_queries == {}


def test_super_peer_handles_envelope_addressed_to_itself(
    super_state, weather_advert, default_class
):
    envelope = Relayed(inner=_publish_request(weather_advert, default_class), target=SUPER_1)

    state, outbound = handle_message(super_state, envelope, now=0, sender=RELAY_1)

    assert outbound == []
    assert weather_advert.msid in state.index


# === 재게시 ===


def test_republish_service_requires_prior_publication(registered_edge, weather_advert):
    with pytest.raises(NotFound):
        republish_service(registered_edge, weather_advert.msid, 1000)


def test_republish_extends_rendezvous_entry(
    registered_edge, stocked_rendezvous, weather_advert
):
    edge, _ = publish_service(registered_edge, weather_advert, 10_000, ROOT_GROUP)

    edge, (dst, message) = republish_service(edge, weather_advert.msid, 20_000)
    state, outbound = handle_message(stocked_rendezvous, message, now=9000)

    assert dst == RDV_1
    assert outbound == []
    assert state.cache.entries[weather_advert.msid].expires_at == 29_000
    assert edge.published[weather_advert.msid].lifetime_ms == 20_000


def test_republish_after_expiry_triggers_full_publication(
    edge_state, rendezvous_state, weather_advert, default_class
):
    """
    [GREEN]
    만료된 광고의 재게시는 거부되고, 엣지는 MCA를 포함한 전체 광고를 다시 보냅니다.
    """
    edge, _ = register_edge(edge_state, RDV_1, RELAY_1)
    edge = declare_class(edge, default_class)
    edge, _ = publish_service(edge, weather_advert, 1000, ROOT_GROUP)
    rendezvous, _ = handle_message(
        rendezvous_state, Register(edge=EDGE_A, relay=RELAY_1), now=0
    )

    request = RepublishRequest(msid=weather_advert.msid, lifetime_ms=1000, publisher=EDGE_A)
    rendezvous, outbound = handle_message(rendezvous, request, now=5000)

    assert outbound == [
        (RELAY_1, Relayed(inner=RepublishRejected(msid=weather_advert.msid), target=EDGE_A))
    ]

    _, resend = handle_message(edge, RepublishRejected(msid=weather_advert.msid), now=5100)

    dst, message = resend[0]
    assert dst == RELAY_1
    assert isinstance(message.inner, PublishRequest)
    assert message.inner.advert == weather_advert
    assert message.inner.module_class == default_class


# === 탐색 / 수집 ===


def test_discover_validation_order(edge_state, registered_edge):
    with pytest.raises(NotRegistered):
        discover(edge_state, "", ROOT_GROUP, k=0, hop_limit=1, timeout_ms=1000, now=0)
    with pytest.raises(EmptyQuery):
        discover(registered_edge, "  ", ROOT_GROUP, k=0, hop_limit=1, timeout_ms=1000, now=0)
    with pytest.raises(ValueError):
        discover(registered_edge, "weather", ROOT_GROUP, k=0, hop_limit=1, timeout_ms=1000, now=0)
    with pytest.raises(ValueError):
        discover(registered_edge, "weather", ROOT_GROUP, k=1, hop_limit=-1, timeout_ms=1000, now=0)
    with pytest.raises(ValueError):
        discover(registered_edge, "weather", ROOT_GROUP, k=1, hop_limit=1, timeout_ms=0, now=0)


def test_discover_issues_increasing_query_ids(registered_edge):
    state, (dst, first) = discover(
        registered_edge, "weather", ROOT_GROUP, k=10, hop_limit=7, timeout_ms=1000, now=5000
    )
    state, (_, second) = discover(
        state, "weather", ROOT_GROUP, k=10, hop_limit=7, timeout_ms=1000, now=5001
    )

    assert dst == RDV_1
    assert first.query_id < second.query_id
    assert first.deadline == 6000
    assert first.hops_remaining == 7
    assert first.reply_via is None
    assert state.pending_queries[first.query_id].issued_at == 5000


def _response(query_id, advert, score, expires_at=20_000, responder=RDV_1):
    hit = ScoredHit(msid=advert.msid, score=score, matched_terms=frozenset({"weather"}))
    return DiscoveryResponse(
        query_id=query_id,
        responder=responder,
        hits=(
            ResponseHit(
                hit=hit,
                advert=advert,
                group=ROOT_GROUP,
                publisher=EDGE_A,
                expires_at=expires_at,
            ),
        ),
        total_matched=1,
    )


def test_edge_merges_responses_keeping_best_score(
    registered_edge, weather_advert, picture_advert
):
    """
    [GREEN]
    여러 랑데부의 응답에서 같은 MSID는 최고 점수만 남기고 마감 후 정렬해 반환합니다.
    """
    state, (_, query) = discover(
        registered_edge, "weather", ROOT_GROUP, k=10, hop_limit=7, timeout_ms=1000, now=5000
    )
    qid = query.query_id
    state, _ = handle_message(state, _response(qid, weather_advert, 2.0), now=5200)
    state, _ = handle_message(
        state, _response(qid, weather_advert, 5.0, responder=RDV_2), now=5300
    )
    state, _ = handle_message(state, _response(qid, picture_advert, 3.0), now=5400)

    with pytest.raises(DeadlineNotReached):
        collect_results(state, qid, 5999)

    hits = collect_results(state, qid, 6000)

    assert [(hit.msid, hit.score) for hit in hits] == [
        (weather_advert.msid, 5.0),
        (picture_advert.msid, 3.0),
    ]
    assert state.pending_queries[qid].last_hit_at == 5400


def test_collect_cuts_to_k(registered_edge, weather_advert, picture_advert):
    state, (_, query) = discover(
        registered_edge, "weather", ROOT_GROUP, k=1, hop_limit=0, timeout_ms=1000, now=0
    )
    state, _ = handle_message(state, _response(query.query_id, weather_advert, 1.0), now=10)
    state, _ = handle_message(state, _response(query.query_id, picture_advert, 9.0), now=20)

    assert [hit.msid for hit in collect_results(state, query.query_id, 1000)] == [
        picture_advert.msid
    ]


def test_finish_query_removes_pending(registered_edge):
    state, (_, query) = discover(
        registered_edge, "weather", ROOT_GROUP, k=10, hop_limit=7, timeout_ms=1000, now=0
    )

    finished, hits = finish_query(state, query.query_id, 1000)

    assert hits == []
    assert query.query_id not in finished.pending_queries
    with pytest.raises(UnknownQuery):
        collect_results(finished, query.query_id, 2000)


def test_late_response_still_fills_local_cache(registered_edge, weather_advert):
    state, (_, query) = discover(
        registered_edge, "weather", ROOT_GROUP, k=10, hop_limit=7, timeout_ms=1000, now=0
    )
    state, _ = finish_query(state, query.query_id, 1000)

    state, outbound = handle_message(
        state, _response(query.query_id, weather_advert, 1.0), now=1500
    )

    assert outbound == []
    assert weather_advert.msid in state.local_cache.entries


def test_search_local_uses_remaining_lifetime(registered_edge, weather_advert):
    """
    [GREEN]
    엣지 로컬 캐시는 응답에 실린 남은 수명만큼만 광고를 보관합니다.
    """
    qid = QueryId(str(EDGE_A), 0)
    state, _ = handle_message(
        registered_edge, _response(qid, weather_advert, 1.0, expires_at=8000), now=5000
    )

    hits = search_local(state, "weather", ROOT_GROUP, k=10, now=7999)

    assert [hit.msid for hit in hits] == [weather_advert.msid]
    assert search_local(state, "weather", ROOT_GROUP, k=10, now=8000) == []
    assert search_local(state, "weather", WEATHER_GROUP, k=10, now=7000) == []


def test_search_local_rejects_empty_query(registered_edge):
    with pytest.raises(EmptyQuery):
        search_local(registered_edge, "!", ROOT_GROUP, k=10, now=0)


def test_edge_state_cannot_have_neighbors():
    with pytest.raises(ValueError):
        PeerState(id=EDGE_A, role=PeerRole.EDGE, neighbors=frozenset({RDV_1}))
