import pytest

from src.discovery.errors import RoleMismatch
from src.discovery.messages import Register, Relayed
from src.discovery.scenario import compile_scenario, parse_scenario
from src.discovery.simulator import (
    Simulator,
    TraceRecord,
    addressed_payload,
    relay_routes,
    run_scenario,
)
from tests.conftest import EDGE_A, RDV_1, RDV_2, RELAY_1


def _scenario(document):
    return compile_scenario(parse_scenario(document))


def _kinds(trace):
    return [record.kind for record in trace]


# === 예제 시나리오 ===


def test_relay_demo_returns_weather_within_expected_latency(relay_demo_scenario):
    """
    [GREEN]
    edgeB의 "weather" 질의는 WeatherService 하나만 찾고,
    릴레이 경유 왕복 지연(200+20+20+200ms, 지터 포함)은 440~460ms입니다.
    """
    metrics, trace = run_scenario(relay_demo_scenario, seed=1)

    assert metrics.queries_issued == 1
    assert metrics.queries_completed == 1
    assert metrics.hits == 1
    [(_, latency)] = metrics.latencies
    assert 440 <= latency <= 460
    collect = [record for record in trace if record.kind == "Collect"]
    assert len(collect) == 1
    assert str(relay_demo_scenario.adverts["weather"].msid) in collect[0].summary
    metrics.assert_invariants()


def test_relay_demo_message_conservation(relay_demo_scenario):
    metrics, _ = run_scenario(relay_demo_scenario, seed=7)

    assert metrics.sent == metrics.delivered + metrics.dropped + metrics.in_flight
    # 엣지 → 릴레이 구간은 Relayed, 릴레이 → 랑데부 구간은 봉투를 벗긴 PublishRequest
    assert metrics.message_counts["PublishRequest"] == 3
    assert metrics.message_counts["Relayed"] >= 3
    assert metrics.stale_results == 0
    assert metrics.failed_actions == 0


def test_relay_demo_trace_is_deterministic(relay_demo_scenario):
    """[GREEN] 같은 시드는 같은 트레이스를 만듭니다."""
    _, first = run_scenario(relay_demo_scenario, seed=42)
    _, second = run_scenario(relay_demo_scenario, seed=42)

    assert [record.render() for record in first] == [record.render() for record in second]


def test_relay_demo_trace_is_time_ordered(relay_demo_scenario):
    _, trace = run_scenario(relay_demo_scenario, seed=3)

    keys = [(record.at, record.seq) for record in trace]
    assert keys == sorted(keys)
    assert trace[0].kind == "PeerJoin"


def test_relay_demo_sweep_prunes_seen_queries(relay_demo_scenario):
    simulator = Simulator(relay_demo_scenario, seed=1)
    simulator.run()

    rendezvous = simulator.states[relay_demo_scenario.peer("rdv1")]
    assert rendezvous.seen_queries == {}
    assert len(rendezvous.cache) == 3


# === 역할 조합 ===


def test_super_peer_serves_as_relay_and_rendezvous():
    """
    [GREEN]
    super 피어 하나가 릴레이와 랑데부를 겸하면 응답은 엣지로 바로 돌아옵니다.
    """
    scenario = _scenario(
        {
            "peers": [
                {"name": "sp", "role": "super"},
                {
                    "name": "edge1",
                    "role": "edge",
                    "rendezvous": "sp",
                    "relay": "sp",
                    "links": [{"peer": "sp", "base_ms": 200, "jitter_ms": 0}],
                },
                {
                    "name": "edge2",
                    "role": "edge",
                    "rendezvous": "sp",
                    "relay": "sp",
                    "links": [{"peer": "sp", "base_ms": 200, "jitter_ms": 0}],
                },
            ],
            "adverts": [
                {"key": "weather", "service": {"name": "WeatherService", "owner": "edge1"}}
            ],
            "schedule": [
                {"at": 0, "action": "publish", "peer": "edge1", "advert": "weather"},
                {
                    "at": 1000,
                    "action": "discover",
                    "peer": "edge2",
                    "terms": "weather",
                    "hop_limit": 0,
                },
            ],
            "horizon_ms": 3000,
        }
    )

    metrics, _ = run_scenario(scenario, seed=0)

    assert metrics.latencies[0][1] == 400
    assert metrics.hits == 1
    assert metrics.rejected_publications == 0
    metrics.assert_invariants()


# === 이탈 / 전환 ===


def test_leaving_peer_drops_in_flight_messages():
    """
    [GREEN]
    수신 피어가 떠나면 전송 중 메시지는 도착 시점에 버려지고 보존 법칙은 유지됩니다.
    """
    scenario = _scenario(
        {
            "peers": [
                {"name": "rdv", "role": "rendezvous"},
                {
                    "name": "edge",
                    "role": "edge",
                    "rendezvous": "rdv",
                    "links": [{"peer": "rdv", "base_ms": 100, "jitter_ms": 0}],
                },
            ],
            "schedule": [
                {"at": 50, "action": "leave", "peer": "rdv"},
                {"at": 80, "action": "join", "peer": "rdv"},
            ],
            "horizon_ms": 500,
        }
    )

    metrics, trace = run_scenario(scenario, seed=0)

    assert metrics.dropped == 1
    assert metrics.delivered == 0
    assert "Dropped" in _kinds(trace)
    metrics.assert_invariants()


def test_action_of_offline_peer_fails():
    scenario = _scenario(
        {
            "peers": [
                {"name": "rdv", "role": "rendezvous"},
                {"name": "edge", "role": "edge", "rendezvous": "rdv", "start_offline": True},
            ],
            "schedule": [{"at": 100, "action": "discover", "peer": "edge", "terms": "weather"}],
            "horizon_ms": 500,
        }
    )

    metrics, trace = run_scenario(scenario, seed=0)

    assert metrics.failed_actions == 1
    assert metrics.queries_issued == 0
    assert "ActionFailed" in _kinds(trace)


def _switch_document():
    return {
        "peers": [
            {
                "name": "rdvA",
                "role": "rendezvous",
                "links": [{"peer": "rdvB", "base_ms": 20, "jitter_ms": 0}],
            },
            {"name": "rdvB", "role": "rendezvous"},
            {
                "name": "edge",
                "role": "edge",
                "rendezvous": "rdvA",
                "links": [
                    {"peer": "rdvA", "base_ms": 100, "jitter_ms": 0},
                    {"peer": "rdvB", "base_ms": 100, "jitter_ms": 0},
                ],
            },
        ],
        "adverts": [{"key": "weather", "service": {"name": "WeatherService", "owner": "edge"}}],
        "schedule": [
            {"at": 0, "action": "publish", "peer": "edge", "advert": "weather", "lifetime_ms": 3000},
            {"at": 500, "action": "switch", "peer": "edge", "rendezvous": "rdvB"},
            {
                "at": 1000,
                "action": "republish",
                "peer": "edge",
                "advert": "weather",
                "lifetime_ms": 5000,
            },
        ],
        "horizon_ms": 4000,
    }


def test_switch_moves_republication_to_new_rendezvous():
    """
    [GREEN]
    전환 후 재게시는 새 랑데부로 가고, 광고가 없으므로 거부된 뒤 전체 광고로 다시 게시됩니다.
    이전 랑데부의 광고는 취소 없이 수명이 끝날 때 사라집니다.
    """
    scenario = _scenario(_switch_document())
    simulator = Simulator(scenario, seed=0)

    metrics, _ = simulator.run()

    msid = scenario.adverts["weather"].msid
    old = simulator.states[scenario.peer("rdvA")]
    new = simulator.states[scenario.peer("rdvB")]
    assert msid not in old.cache.entries
    assert new.cache.entries[msid].expires_at == 1300 + 5000
    assert metrics.message_counts["RepublishRejected"] == 1
    assert metrics.message_counts["PublishRequest"] == 2
    assert metrics.expired_count == 1
    assert simulator.states[scenario.peer("edge")].rendezvous_of == scenario.peer("rdvB")
    metrics.assert_invariants()


def test_network_switch_requires_caching_target():
    scenario = _scenario(_switch_document())
    simulator = Simulator(scenario, seed=0)
    edge = scenario.peer("edge")

    with pytest.raises(RoleMismatch):
        simulator.network_switch(edge, edge)
    with pytest.raises(RoleMismatch):
        simulator.network_switch(scenario.peer("rdvA"), scenario.peer("rdvB"))


# === 보조 함수 ===


def test_relay_routes_only_pass_through_relaying_peers():
    adjacency = {
        EDGE_A: [RELAY_1],
        RELAY_1: [EDGE_A, RDV_1],
        RDV_1: [RELAY_1, RDV_2],
        RDV_2: [RDV_1],
    }

    routes = relay_routes(EDGE_A, adjacency, relaying={RELAY_1})

    assert routes == {RELAY_1: RELAY_1, RDV_1: RELAY_1}
    assert relay_routes(EDGE_A, adjacency, relaying=set()) == {RELAY_1: RELAY_1}


def test_addressed_payload():
    inner = Register(edge=EDGE_A)

    assert addressed_payload(RDV_1, inner) == inner
    assert addressed_payload(RDV_1, Relayed(inner=inner, target=RDV_1)) == inner
    assert addressed_payload(RELAY_1, Relayed(inner=inner, target=RDV_1)) is None


def test_trace_record_rendering():
    record = TraceRecord(at=5000, seq=12, kind="Collect", src="edgeB", dst="edgeB", summary="")

    assert record.render() == "t=5000 seq=12 Collect edgeB->edgeB"
    assert record.render_pipe() == "5000 | edgeB -> edgeB | Collect |"


@pytest.mark.parametrize(("hop_limit", "expected_hits"), [(0, 0), (1, 1), (2, 2)])
def test_hop_limit_bounds_answering_rendezvous(hop_limit, expected_hits):
    """
    [GREEN]
    랑데부 3개가 일렬로 연결되어 있을 때, 질의는 hop_limit 홉 떨어진 랑데부까지만 도달합니다.
    """
    chain = [
        {
            "name": "rdv0",
            "role": "rendezvous",
            "links": [{"peer": "rdv1", "base_ms": 20, "jitter_ms": 0}],
        },
        {
            "name": "rdv1",
            "role": "rendezvous",
            "links": [{"peer": "rdv2", "base_ms": 20, "jitter_ms": 0}],
        },
        {"name": "rdv2", "role": "rendezvous"},
    ]
    edges = [
        {
            "name": name,
            "role": "edge",
            "rendezvous": home,
            "links": [{"peer": home, "base_ms": 100, "jitter_ms": 0}],
        }
        for name, home in [("asker", "rdv0"), ("e1", "rdv1"), ("e2", "rdv2")]
    ]
    scenario = _scenario(
        {
            "peers": chain + edges,
            "adverts": [
                {"key": f"w{i}", "service": {"name": "WeatherService", "owner": f"e{i}"}}
                for i in (1, 2)
            ],
            "schedule": [
                {"at": 0, "action": "publish", "peer": "e1", "advert": "w1"},
                {"at": 0, "action": "publish", "peer": "e2", "advert": "w2"},
                {
                    "at": 1000,
                    "action": "discover",
                    "peer": "asker",
                    "terms": "weather",
                    "hop_limit": hop_limit,
                },
            ],
            "horizon_ms": 3000,
        }
    )

    metrics, _ = run_scenario(scenario, seed=0)

    assert metrics.hits == expected_hits
    assert metrics.message_counts["DiscoveryQuery"] == 1 + hop_limit
    metrics.assert_invariants()


def _stale_switch_document():
    """edge가 rdvA에 게시(만료 3100)한 뒤 500ms에 rdvB로 전환, seeker는 rdvB에서 질의."""
    return {
        "peers": [
            {
                "name": "rdvA",
                "role": "rendezvous",
                "links": [{"peer": "rdvB", "base_ms": 20, "jitter_ms": 0}],
            },
            {"name": "rdvB", "role": "rendezvous"},
            {
                "name": "edge",
                "role": "edge",
                "rendezvous": "rdvA",
                "links": [
                    {"peer": "rdvA", "base_ms": 100, "jitter_ms": 0},
                    {"peer": "rdvB", "base_ms": 100, "jitter_ms": 0},
                ],
            },
            {
                "name": "seeker",
                "role": "edge",
                "rendezvous": "rdvB",
                "links": [{"peer": "rdvB", "base_ms": 100, "jitter_ms": 0}],
            },
        ],
        "adverts": [{"key": "weather", "service": {"name": "WeatherService", "owner": "edge"}}],
        "schedule": [
            {"at": 0, "action": "publish", "peer": "edge", "advert": "weather", "lifetime_ms": 3000},
            {"at": 500, "action": "switch", "peer": "edge", "rendezvous": "rdvB"},
            {"at": 1500, "action": "discover", "peer": "seeker", "terms": "weather"},
            {"at": 3101, "action": "discover", "peer": "seeker", "terms": "weather"},
        ],
        "horizon_ms": 5000,
    }


def test_switch_leaves_old_advert_until_its_lifetime_ends():
    """
    [GREEN]
    전환 후에도 이전 랑데부의 광고는 수명 안에서는 검색되고,
    만료 시각(3100) 이후 시작한 질의에는 나오지 않습니다.
    """
    scenario = _scenario(_stale_switch_document())
    msid = str(scenario.adverts["weather"].msid)

    metrics, trace = run_scenario(scenario, seed=0)

    before, after = [record for record in trace if record.kind == "Collect"]
    assert before.at == 2500
    assert "hits=1" in before.summary
    assert msid in before.summary
    assert after.at == 4101
    assert "hits=0" in after.summary
    assert metrics.queries_issued == 2
    assert metrics.queries_completed == 1
    assert metrics.stale_results == 0
    assert metrics.abandoned_results == 0
    metrics.assert_invariants()


def _single_rendezvous_document(schedule):
    return {
        "peers": [
            {"name": "rdv", "role": "rendezvous"},
            {
                "name": "edge",
                "role": "edge",
                "rendezvous": "rdv",
                "links": [{"peer": "rdv", "base_ms": 100, "jitter_ms": 0}],
            },
        ],
        "adverts": [{"key": "weather", "service": {"name": "WeatherService", "owner": "edge"}}],
        "schedule": [
            {"at": 0, "action": "publish", "peer": "edge", "advert": "weather", "lifetime_ms": 3000},
            *schedule,
        ],
        "horizon_ms": 2000,
    }


def test_switch_to_same_rendezvous_only_registers_again():
    """
    [GREEN]
    같은 랑데부로 전환하면 Register 하나만 더 보내고 캐시와 엣지 상태는 그대로입니다.
    """
    base = Simulator(_scenario(_single_rendezvous_document([])), seed=0)
    switched = Simulator(
        _scenario(
            _single_rendezvous_document(
                [{"at": 500, "action": "switch", "peer": "edge", "rendezvous": "rdv"}]
            )
        ),
        seed=0,
    )

    base_metrics, _ = base.run()
    switched_metrics, _ = switched.run()

    extra = switched_metrics.message_counts.copy()
    extra.subtract(base_metrics.message_counts)
    assert +extra == {"Register": 1}
    assert -extra == {}

    rdv = base.scenario.peer("rdv")
    edge = base.scenario.peer("edge")
    assert switched.states[rdv].cache.entries == base.states[rdv].cache.entries
    assert switched.states[rdv].edges == base.states[rdv].edges
    assert switched.states[edge].rendezvous_of == rdv
    switched_metrics.assert_invariants()
