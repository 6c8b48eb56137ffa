import sys
from pathlib import Path

import pytest
from dotenv import load_dotenv

from src.discovery.adverts import ModuleSpecAdvertisement, PeerId
from src.discovery.generators import DEFAULT_CLASS, service_advert
from src.discovery.peer import PeerRole, PeerState
from src.discovery.scenario import Scenario, load_scenario

# .env 파일이 있으면 로드 (테스트 기본값은 Settings 기본값을 그대로 사용)
load_dotenv(override=False)

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

SCENARIO_DIR = ROOT / "scenarios"
CORPUS_DIR = SCENARIO_DIR / "corpus"


def pid(n: int, phone: str | None = None) -> PeerId:
    """테스트용 PeerId. n을 16자리 16진수로 채웁니다."""
    return PeerId(value=f"peer:{n:016x}", phone_alias=phone)


EDGE_A = pid(0xA1, "+821012345678")
EDGE_B = pid(0xB1)
RDV_1 = pid(0xD01)
RDV_2 = pid(0xD02)
RDV_3 = pid(0xD03)
RELAY_1 = pid(0xE01)
SUPER_1 = pid(0xF01)


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture(scope="session")
def relay_demo_scenario() -> Scenario:
    """
    [Fixture]
    엣지 2개 → 릴레이 1개 → 랑데부 1개 (+ 연결된 두 번째 랑데부) 시나리오.
    """
    return load_scenario(SCENARIO_DIR / "relay_demo.json")


@pytest.fixture
def weather_advert() -> ModuleSpecAdvertisement:
    return service_advert(
        key="weather",
        name="WeatherService",
        owner=EDGE_A,
        description="current weather forecast",
        operations=["getForecast"],
    )


@pytest.fixture
def picture_advert() -> ModuleSpecAdvertisement:
    return service_advert(
        key="picture",
        name="PictureService",
        owner=EDGE_A,
        description="take a photo with the camera",
        operations=["takePicture"],
    )


@pytest.fixture
def health_advert() -> ModuleSpecAdvertisement:
    return service_advert(
        key="health",
        name="HealthMonitorService",
        owner=EDGE_A,
        description="heart rate readings",
        operations=["getHeartRate"],
    )


@pytest.fixture
def default_class():
    return DEFAULT_CLASS


@pytest.fixture
def rendezvous_state() -> PeerState:
    """이웃 랑데부 2개(RDV_2, RDV_3)를 가진 랑데부."""
    return PeerState(id=RDV_1, role=PeerRole.RENDEZVOUS, neighbors=frozenset({RDV_2, RDV_3}))


@pytest.fixture
def relay_state() -> PeerState:
    """RDV_1과 EDGE_B로 가는 직접 경로를 가진 릴레이."""
    return PeerState(
        id=RELAY_1,
        role=PeerRole.RELAY,
        route_table={RDV_1: RDV_1, EDGE_B: EDGE_B, RDV_2: RDV_1},
    )


@pytest.fixture
def super_state() -> PeerState:
    """랑데부와 릴레이 기능을 함께 가진 super 피어."""
    return PeerState(
        id=SUPER_1,
        role=PeerRole.SUPER,
        neighbors=frozenset({RDV_2, RDV_3}),
        route_table={RDV_1: RDV_1, EDGE_B: EDGE_B, RDV_2: RDV_1},
    )


@pytest.fixture
def edge_state() -> PeerState:
    """등록 전 엣지 (릴레이 없음)."""
    return PeerState(id=EDGE_A, role=PeerRole.EDGE)
