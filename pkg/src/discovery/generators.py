"""
광고/코퍼스/시나리오 생성기.

모든 생성기는 호출자가 넘긴 `random.Random` 하나만 사용하므로
같은 시드는 항상 같은 결과를 만듭니다.
"""

import hashlib
import random

from src.discovery.adverts import (
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

# 생성 텍스트에 쓰는 어휘 (검색 토큰 충돌을 일부러 만들기 위해 작게 유지)
VOCABULARY = [
    "weather",
    "forecast",
    "picture",
    "photo",
    "health",
    "heart",
    "rate",
    "traffic",
    "map",
    "route",
    "news",
    "stock",
    "quote",
    "music",
    "video",
    "sensor",
    "location",
    "gps",
    "camera",
    "temperature",
]

# XML 이스케이프가 필요한 문자와 비ASCII 문자를 섞습니다.
_AWKWARD_TEXT = ["&", "<", ">", '"', "'", "날씨", "サービス", "é", "ß"]

_PIPE_TYPES = list(PipeType)


def stable_hex(text: str, length: int = 32) -> str:
    """텍스트에서 결정적으로 만든 16진 문자열."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]


def peer_id_for(name: str, phone: str | None = None) -> PeerId:
    return PeerId(value=f"peer:{stable_hex(name, 16)}", phone_alias=phone)


def class_for(name: str, description: str = "") -> ModuleClassAdvertisement:
    """이름에서 MCID를 결정적으로 만든 MCA."""
    return ModuleClassAdvertisement(
        mcid=ModuleClassId(value=f"mcid:{stable_hex(name)}"),
        name=name,
        description=description,
    )


DEFAULT_CLASS = class_for("WebServices", "모바일 호스트 웹 서비스 정의")


def service_advert(
    key: str,
    name: str,
    owner: PeerId,
    description: str = "",
    operations: list[str] | None = None,
    class_id: ModuleClassId | None = None,
    version: str = "1.0",
) -> ModuleSpecAdvertisement:
    """
    이름과 오퍼레이션 목록만으로 완전한 MSA를 만듭니다.

    각 오퍼레이션은 `<op>Request` / `<op>Response` 메시지를 하나씩 가집니다.
    MSID 접미사는 key에서 결정적으로 만듭니다.
    """
    operations = operations or [f"get{name}"]
    messages: list[WsdlMessage] = []
    wsdl_operations: list[WsdlOperation] = []
    for op in operations:
        messages.append(
            WsdlMessage(
                name=f"{op}Request",
                parts=(WsdlPart(name="parameters", type_name="xsd:string"),),
            )
        )
        messages.append(
            WsdlMessage(
                name=f"{op}Response",
                parts=(WsdlPart(name="result", type_name="xsd:string"),),
            )
        )
        wsdl_operations.append(
            WsdlOperation(
                name=op, input_message=f"{op}Request", output_message=f"{op}Response"
            )
        )

    wsdl = WsdlDocument(
        target_namespace=f"urn:mobilehost:{stable_hex(key, 8)}",
        messages=tuple(messages),
        port_types=(
            WsdlPortType(name=f"{name}PortType", operations=tuple(wsdl_operations)),
        ),
        service_name=name,
        port_address=f"jxta://{owner.value}/{name}",
    )
    return ModuleSpecAdvertisement(
        msid=ModuleSpecId(
            class_id=class_id or DEFAULT_CLASS.mcid, spec_suffix=stable_hex(key)
        ),
        name=name,
        creator=str(owner),
        spec_uri=f"urn:jxta:spec:{stable_hex(key, 12)}",
        version=version,
        description=description,
        wsdl=wsdl,
        pipe=PipeAdvertisement(
            pipe_id=f"urn:jxta:pipe:{stable_hex(key, 16)}", endpoint_peer=owner
        ),
    )


def _hex(rng: random.Random, length: int) -> str:
    return "".join(rng.choice("0123456789abcdef") for _ in range(length))


def _words(rng: random.Random, low: int, high: int) -> list[str]:
    return [rng.choice(VOCABULARY) for _ in range(rng.randint(low, high))]


def _camel(words: list[str]) -> str:
    return "".join(word.capitalize() for word in words)


def _awkward(rng: random.Random, words: list[str]) -> str:
    parts = list(words)
    for _ in range(rng.randint(0, 3)):
        parts.insert(rng.randint(0, len(parts)), rng.choice(_AWKWARD_TEXT))
    return " ".join(parts)


def random_advert(
    rng: random.Random, extra_terms: list[str] | None = None
) -> ModuleSpecAdvertisement:
    """
    무작위 MSA 하나를 만듭니다.

    Args:
        rng: 시드가 고정된 난수 생성기
        extra_terms: 설명에 반드시 넣을 단어 (코퍼스 생성용)
    """
    name = _camel(_words(rng, 1, 3)) + "Service"
    operations = [f"get{_camel(_words(rng, 1, 2))}" for _ in range(rng.randint(0, 3))]
    # 오퍼레이션 이름이 겹치면 메시지 이름도 겹치므로 중복 제거
    operations = list(dict.fromkeys(operations))

    messages: list[WsdlMessage] = []
    wsdl_operations: list[WsdlOperation] = []
    for op in operations:
        request, response = f"{op}Request", f"{op}Response"
        messages.append(
            WsdlMessage(
                name=request,
                parts=tuple(
                    WsdlPart(name=word, type_name=rng.choice(["xsd:string", "xsd:int"]))
                    for word in _words(rng, 0, 2)
                ),
            )
        )
        messages.append(WsdlMessage(name=response))
        wsdl_operations.append(
            WsdlOperation(name=op, input_message=request, output_message=response)
        )

    description_words = _words(rng, 0, 8) + list(extra_terms or [])
    owner = PeerId(
        value=f"peer:{_hex(rng, 16)}",
        phone_alias=rng.choice([None, f"+82{rng.randint(10**8, 10**9 - 1)}"]),
    )
    return ModuleSpecAdvertisement(
        msid=ModuleSpecId(
            class_id=ModuleClassId(value=f"mcid:{_hex(rng, 32)}"),
            spec_suffix=_hex(rng, 32),
        ),
        name=name,
        creator=_awkward(rng, _words(rng, 0, 2)),
        spec_uri=rng.choice(["", f"urn:jxta:spec:{_hex(rng, 12)}"]),
        version=rng.choice(["", "1.0", "2.1-beta"]),
        description=_awkward(rng, description_words),
        wsdl=WsdlDocument(
            target_namespace=f"urn:{rng.choice(VOCABULARY)}:{_hex(rng, 6)}",
            messages=tuple(messages),
            port_types=(
                (WsdlPortType(name=f"{name}Port", operations=tuple(wsdl_operations)),)
                if wsdl_operations or rng.random() < 0.5
                else ()
            ),
            service_name=name,
            port_address=rng.choice(["", f"jxta://{owner.value}/{name}"]),
        ),
        pipe=PipeAdvertisement(
            pipe_id=f"urn:jxta:pipe:{_hex(rng, 16)}",
            pipe_type=rng.choice(_PIPE_TYPES),
            endpoint_peer=owner,
        ),
        proxy=rng.choice(["", "relay-proxy"]),
        auth=rng.choice(["", "none"]),
    )


def funnel_corpus(
    rng: random.Random, size: int, matching: int, token: str
) -> list[ModuleSpecAdvertisement]:
    """
    size개 광고 중 정확히 matching개만 token을 포함하는 코퍼스.

    token은 생성 어휘에 없는 단어여야 합니다.
    """
    if token in VOCABULARY:
        raise ValueError(f"token이 생성 어휘와 겹칩니다: {token}")
    if not 0 <= matching <= size:
        raise ValueError(f"matching은 0..size 범위여야 합니다: {matching}")
    chosen = set(rng.sample(range(size), matching))
    return [
        random_advert(rng, extra_terms=[token] if position in chosen else None)
        for position in range(size)
    ]


def random_churn_scenario(
    rng: random.Random,
    max_peers: int = 50,
    max_events: int = 200,
    horizon_ms: int = 60_000,
) -> dict[str, object]:
    """
    네트워크 전환과 이탈/재참여가 섞인 무작위 시나리오 문서를 만듭니다.

    반환값은 시나리오 파일과 같은 구조의 딕셔너리이며 `ScenarioConfig`로 검증됩니다.
    전환 후에도 이전 랑데부에서 광고를 취소하지 않습니다.
    """
    peer_count = rng.randint(4, max_peers)
    rendezvous_count = max(1, peer_count // 8)
    relay_count = max(1, peer_count // 10)
    rendezvous = [f"rdv{i}" for i in range(rendezvous_count)]
    relays = [f"relay{i}" for i in range(relay_count)]
    edge_count = max(1, peer_count - rendezvous_count - relay_count)
    edges = [f"edge{i}" for i in range(edge_count)]

    peers: list[dict[str, object]] = []
    for i, name in enumerate(rendezvous):
        # 랑데부끼리는 일렬로 연결합니다.
        links = [
            {"peer": later, "base_ms": 20, "jitter_ms": 5}
            for later in rendezvous[i + 1 : i + 2]
        ]
        peers.append(
            {"name": name, "role": rng.choice(["rendezvous", "super"]), "links": links}
        )
    for name in relays:
        links = [{"peer": rdv, "base_ms": 20, "jitter_ms": 5} for rdv in rendezvous]
        peers.append({"name": name, "role": "relay", "links": links})

    edge_homes: dict[str, str] = {}
    for name in edges:
        home = rng.choice(rendezvous)
        edge_homes[name] = home
        peer: dict[str, object] = {"name": name, "role": "edge", "rendezvous": home}
        if rng.random() < 0.5:
            relay = rng.choice(relays)
            peer["relay"] = relay
            peer["links"] = [{"peer": relay, "base_ms": 200, "jitter_ms": 5}]
        else:
            peer["links"] = [{"peer": home, "base_ms": 100, "jitter_ms": 5}]
        peers.append(peer)

    adverts: list[dict[str, object]] = []
    schedule: list[dict[str, object]] = []
    published: dict[str, str] = {}
    event_count = rng.randint(1, max_events)
    last_at = horizon_ms - 5_000
    for n in range(event_count):
        at = rng.randint(0, last_at)
        edge = rng.choice(edges)
        roll = rng.random()
        if roll < 0.3 or not published:
            key = f"svc{n}"
            words = rng.sample(VOCABULARY, 2)
            adverts.append(
                {
                    "key": key,
                    "service": {
                        "name": _camel(words) + "Service",
                        "owner": edge,
                        "description": " ".join(words),
                    },
                }
            )
            published[key] = edge
            schedule.append(
                {
                    "at": at,
                    "action": "publish",
                    "peer": edge,
                    "advert": key,
                    "lifetime_ms": rng.randint(2_000, 20_000),
                }
            )
        elif roll < 0.5:
            key = rng.choice(sorted(published))
            schedule.append(
                {
                    "at": at,
                    "action": "republish",
                    "peer": published[key],
                    "advert": key,
                    "lifetime_ms": rng.randint(2_000, 20_000),
                }
            )
        elif roll < 0.75:
            schedule.append(
                {
                    "at": at,
                    "action": "discover",
                    "peer": edge,
                    "terms": rng.choice(VOCABULARY),
                    "timeout_ms": 1_000,
                }
            )
        elif roll < 0.9:
            schedule.append(
                {
                    "at": at,
                    "action": "switch",
                    "peer": edge,
                    "rendezvous": rng.choice(rendezvous),
                }
            )
        else:
            schedule.append({"at": at, "action": "leave", "peer": edge})
            rejoin_at = min(at + rng.randint(500, 5_000), last_at)
            schedule.append({"at": rejoin_at, "action": "join", "peer": edge})

    return {
        "peers": peers,
        "adverts": adverts,
        "schedule": schedule,
        "horizon_ms": horizon_ms,
        "sweep_interval_ms": 1_000,
    }
