"""
시나리오 파일 모델과 검증.

시나리오는 JSON 문서 하나이며 필드 이름은 `ScenarioConfig`와 같습니다.
구조 검증은 pydantic이, 참조 검증(피어/그룹/광고 이름, 역할, 시간 범위)은
`compile_scenario`가 담당합니다. 실패하면 첫 번째로 실패한 필드 경로를 담은
`InvalidScenario`를 발생시킵니다.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Literal

from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    ValidationError,
)

from src.config import settings
from src.discovery.adverts import (
    ModuleClassAdvertisement,
    ModuleClassId,
    ModuleSpecAdvertisement,
    PeerId,
)
from src.discovery.codec import parse_advert
from src.discovery.directory import PeerDirectory
from src.discovery.errors import (
    DiscoveryError,
    InvalidIdentifier,
    InvalidScenario,
    OrphanGroup,
    UnknownPeer,
)
from src.discovery.generators import DEFAULT_CLASS, peer_id_for, service_advert
from src.discovery.groups import GroupId, GroupTree, create_group
from src.discovery.index import FieldWeights
from src.discovery.peer import PeerRole


class _Strict(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# === 피어 ===


class LinkSpec(_Strict):
    peer: str
    base_ms: NonNegativeInt = settings.default_latency_base_ms
    jitter_ms: NonNegativeInt = settings.default_latency_jitter_ms


class PeerSpec(_Strict):
    name: str = Field(min_length=1)
    id: str | None = None
    phone: str | None = None
    role: PeerRole
    rendezvous: str | None = None
    relay: str | None = None
    links: list[LinkSpec] = []
    start_offline: bool = False


# === 광고 ===


class ServiceSpec(_Strict):
    """XML 없이 이름/오퍼레이션만으로 MSA를 만드는 간단한 형식."""

    name: str = Field(min_length=1)
    owner: str
    description: str = ""
    operations: list[str] = []
    class_id: str | None = None
    version: str = "1.0"


class AdvertSpec(_Strict):
    """광고 하나. file, xml, service 중 정확히 하나를 지정합니다."""

    key: str = Field(min_length=1)
    file: str | None = None
    xml: str | None = None
    service: ServiceSpec | None = None


class ClassSpec(_Strict):
    mcid: str
    name: str = Field(min_length=1)
    description: str = ""


# === 일정 ===


class _Action(_Strict):
    at: NonNegativeInt
    peer: str


class PublishAction(_Action):
    action: Literal["publish"]
    advert: str
    lifetime_ms: PositiveInt | None = None
    group: str = "/"


class RepublishAction(_Action):
    action: Literal["republish"]
    advert: str
    lifetime_ms: PositiveInt | None = None


class DiscoverAction(_Action):
    action: Literal["discover"]
    terms: str
    group: str = "/"
    k: int | None = None
    hop_limit: int | None = None
    timeout_ms: PositiveInt | None = None


class SwitchAction(_Action):
    action: Literal["switch"]
    rendezvous: str
    relay: str | None = None


class JoinAction(_Action):
    action: Literal["join"]


class LeaveAction(_Action):
    action: Literal["leave"]


ScheduledAction = Annotated[
    PublishAction
    | RepublishAction
    | DiscoverAction
    | SwitchAction
    | JoinAction
    | LeaveAction,
    Field(discriminator="action"),
]


class ScenarioDefaults(_Strict):
    lifetime_ms: PositiveInt = settings.default_lifetime_ms
    k: int = settings.default_k
    hop_limit: int = settings.default_hop_limit
    timeout_ms: PositiveInt = settings.default_timeout_ms
    latency_base_ms: NonNegativeInt = settings.default_latency_base_ms
    latency_jitter_ms: NonNegativeInt = settings.default_latency_jitter_ms


class ScenarioConfig(_Strict):
    peers: list[PeerSpec]
    groups: list[str] = []
    classes: list[ClassSpec] = []
    adverts: list[AdvertSpec] = []
    schedule: list[ScheduledAction] = []
    horizon_ms: NonNegativeInt
    sweep_interval_ms: PositiveInt = settings.sweep_interval_ms
    field_weights: FieldWeights = Field(default_factory=FieldWeights)
    defaults: ScenarioDefaults = Field(default_factory=ScenarioDefaults)


# === 검증된 시나리오 ===


@dataclass
class Scenario:
    """참조가 모두 해석된 시나리오 (시뮬레이터 입력)."""

    config: ScenarioConfig
    directory: PeerDirectory
    peers: dict[PeerId, PeerSpec]
    groups: GroupTree
    classes: dict[ModuleClassId, ModuleClassAdvertisement]
    adverts: dict[str, ModuleSpecAdvertisement]
    links: dict[frozenset[PeerId], LinkSpec] = field(default_factory=dict)

    def peer(self, ref: str) -> PeerId:
        return self.directory.resolve(ref)

    def class_of(self, advert: ModuleSpecAdvertisement) -> ModuleClassAdvertisement:
        """광고의 MCA. 시나리오에 없으면 기본 웹 서비스 클래스 이름으로 만듭니다."""
        mca = self.classes.get(advert.class_id)
        if mca is None:
            return ModuleClassAdvertisement(
                mcid=advert.class_id,
                name=DEFAULT_CLASS.name,
                description=DEFAULT_CLASS.description,
            )
        return mca


def _loc(loc: tuple[int | str, ...]) -> str:
    return ".".join(str(part) for part in loc)


def parse_scenario(document: str | bytes | dict[str, object]) -> ScenarioConfig:
    """
    JSON 문자열 또는 딕셔너리를 ScenarioConfig로 검증합니다.

    Raises:
        InvalidScenario: 구조 검증 실패 (첫 번째 오류의 필드 경로 포함)
    """
    try:
        if isinstance(document, dict):
            return ScenarioConfig.model_validate(document)
        return ScenarioConfig.model_validate_json(document)
    except ValidationError as e:
        first = e.errors()[0]
        raise InvalidScenario(_loc(first["loc"]) or "<root>", first["msg"]) from e


class _Compiler:
    """ScenarioConfig의 참조를 순서대로 해석합니다. 첫 실패에서 멈춥니다."""

    def __init__(self, config: ScenarioConfig, base_dir: Path) -> None:
        self.config = config
        self.base_dir = base_dir
        self.directory = PeerDirectory()
        self.roles: dict[PeerId, PeerRole] = {}

    def _resolve(self, ref: str, path: str) -> PeerId:
        try:
            return self.directory.resolve(ref)
        except UnknownPeer as e:
            raise InvalidScenario(path, str(e)) from e

    def _require_role(
        self, peer_id: PeerId, allowed: set[PeerRole], path: str
    ) -> None:
        role = self.roles[peer_id]
        if role not in allowed:
            wanted = "/".join(sorted(str(r) for r in allowed))
            name = self.directory.name_of(peer_id)
            raise InvalidScenario(path, f"{name}의 역할 {role}은(는) {wanted}이(가) 아닙니다")

    def _group(self, text: str, tree: GroupTree, path: str) -> GroupId:
        try:
            group = GroupId.parse(text)
        except InvalidIdentifier as e:
            raise InvalidScenario(path, str(e)) from e
        if group not in tree:
            raise InvalidScenario(path, f"정의되지 않은 그룹: {text}")
        return group

    def compile(self) -> Scenario:
        config = self.config
        peers = self._peers()
        links = self._links()
        groups = self._groups()
        classes = self._classes()
        adverts = self._adverts()
        self._schedule(groups, adverts)
        return Scenario(
            config=config,
            directory=self.directory,
            peers=peers,
            groups=groups,
            classes=classes,
            adverts=adverts,
            links=links,
        )

    def _peers(self) -> dict[PeerId, PeerSpec]:
        peers: dict[PeerId, PeerSpec] = {}
        for i, spec in enumerate(self.config.peers):
            path = f"peers.{i}"
            try:
                peer_id = (
                    PeerId.parse(spec.id, spec.phone)
                    if spec.id is not None
                    else peer_id_for(spec.name, spec.phone)
                )
            except (InvalidIdentifier, ValidationError) as e:
                raise InvalidScenario(f"{path}.id", str(e)) from e
            try:
                self.directory.add(spec.name, peer_id)
            except ValueError as e:
                raise InvalidScenario(f"{path}.name", str(e)) from e
            self.roles[peer_id] = spec.role
            peers[peer_id] = spec

        for i, spec in enumerate(self.config.peers):
            path = f"peers.{i}"
            is_edge = spec.role is PeerRole.EDGE
            if not is_edge and (spec.rendezvous or spec.relay):
                raise InvalidScenario(
                    f"{path}.role", "rendezvous/relay는 엣지 피어만 지정할 수 있습니다"
                )
            if spec.rendezvous is not None:
                target = self._resolve(spec.rendezvous, f"{path}.rendezvous")
                self._require_role(
                    target, {PeerRole.RENDEZVOUS, PeerRole.SUPER}, f"{path}.rendezvous"
                )
            if spec.relay is not None:
                target = self._resolve(spec.relay, f"{path}.relay")
                self._require_role(target, {PeerRole.RELAY, PeerRole.SUPER}, f"{path}.relay")
        return peers

    def _links(self) -> dict[frozenset[PeerId], LinkSpec]:
        links: dict[frozenset[PeerId], LinkSpec] = {}
        for i, spec in enumerate(self.config.peers):
            owner = self.directory.resolve(spec.name)
            for j, link in enumerate(spec.links):
                path = f"peers.{i}.links.{j}.peer"
                other = self._resolve(link.peer, path)
                if other == owner:
                    raise InvalidScenario(path, "자기 자신과는 연결할 수 없습니다")
                pair = frozenset({owner, other})
                known = links.get(pair)
                if known is not None and (known.base_ms, known.jitter_ms) != (
                    link.base_ms,
                    link.jitter_ms,
                ):
                    raise InvalidScenario(path, "같은 링크에 서로 다른 지연이 지정되었습니다")
                links[pair] = link
        return links

    def _groups(self) -> GroupTree:
        tree = GroupTree()
        for i, text in enumerate(self.config.groups):
            path = f"groups.{i}"
            try:
                tree = create_group(tree, GroupId.parse(text))
            except (InvalidIdentifier, OrphanGroup) as e:
                raise InvalidScenario(path, str(e)) from e
        return tree

    def _classes(self) -> dict[ModuleClassId, ModuleClassAdvertisement]:
        classes: dict[ModuleClassId, ModuleClassAdvertisement] = {}
        for i, spec in enumerate(self.config.classes):
            try:
                mca = ModuleClassAdvertisement(
                    mcid=ModuleClassId.parse(spec.mcid),
                    name=spec.name,
                    description=spec.description,
                )
            except (InvalidIdentifier, ValidationError) as e:
                raise InvalidScenario(f"classes.{i}.mcid", str(e)) from e
            classes[mca.mcid] = mca
        return classes

    def _adverts(self) -> dict[str, ModuleSpecAdvertisement]:
        adverts: dict[str, ModuleSpecAdvertisement] = {}
        for i, spec in enumerate(self.config.adverts):
            path = f"adverts.{i}"
            if spec.key in adverts:
                raise InvalidScenario(f"{path}.key", f"광고 key 중복: {spec.key}")
            sources = [s for s in (spec.file, spec.xml, spec.service) if s is not None]
            if len(sources) != 1:
                raise InvalidScenario(path, "file, xml, service 중 정확히 하나가 필요합니다")
            adverts[spec.key] = self._advert(spec, path)
        return adverts

    def _advert(self, spec: AdvertSpec, path: str) -> ModuleSpecAdvertisement:
        if spec.service is not None:
            service = spec.service
            owner = self._resolve(service.owner, f"{path}.service.owner")
            try:
                class_id = (
                    ModuleClassId.parse(service.class_id)
                    if service.class_id is not None
                    else None
                )
                return service_advert(
                    key=spec.key,
                    name=service.name,
                    owner=owner,
                    description=service.description,
                    operations=service.operations,
                    class_id=class_id,
                    version=service.version,
                )
            except (InvalidIdentifier, ValidationError) as e:
                raise InvalidScenario(f"{path}.service", str(e)) from e

        if spec.file is not None:
            source_path = f"{path}.file"
            file_path = self.base_dir / spec.file
            try:
                document: str | bytes = file_path.read_bytes()
            except OSError as e:
                raise InvalidScenario(source_path, f"파일을 읽을 수 없습니다: {file_path}") from e
        else:
            source_path = f"{path}.xml"
            document = spec.xml or ""

        try:
            advert = parse_advert(document)
        except DiscoveryError as e:
            raise InvalidScenario(source_path, str(e)) from e
        if not isinstance(advert, ModuleSpecAdvertisement):
            raise InvalidScenario(source_path, "MSA 문서가 아닙니다")
        return advert

    def _schedule(
        self, groups: GroupTree, adverts: dict[str, ModuleSpecAdvertisement]
    ) -> None:
        horizon = self.config.horizon_ms
        for i, action in enumerate(self.config.schedule):
            path = f"schedule.{i}"
            if action.at > horizon:
                raise InvalidScenario(
                    f"{path}.at", f"horizon_ms({horizon}) 이후의 동작입니다: {action.at}"
                )
            actor = self._resolve(action.peer, f"{path}.peer")
            match action:
                case PublishAction() | RepublishAction():
                    self._require_role(actor, {PeerRole.EDGE}, f"{path}.peer")
                    if action.advert not in adverts:
                        raise InvalidScenario(
                            f"{path}.advert", f"정의되지 않은 광고: {action.advert}"
                        )
                    if isinstance(action, PublishAction):
                        self._group(action.group, groups, f"{path}.group")
                case DiscoverAction():
                    self._require_role(actor, {PeerRole.EDGE}, f"{path}.peer")
                    self._group(action.group, groups, f"{path}.group")
                    if action.k is not None and action.k < 1:
                        raise InvalidScenario(f"{path}.k", "k는 1 이상이어야 합니다")
                    if action.hop_limit is not None and action.hop_limit < 0:
                        raise InvalidScenario(
                            f"{path}.hop_limit", "hop_limit은 0 이상이어야 합니다"
                        )
                case SwitchAction():
                    self._require_role(actor, {PeerRole.EDGE}, f"{path}.peer")
                    target = self._resolve(action.rendezvous, f"{path}.rendezvous")
                    self._require_role(
                        target, {PeerRole.RENDEZVOUS, PeerRole.SUPER}, f"{path}.rendezvous"
                    )
                    if action.relay is not None:
                        relay = self._resolve(action.relay, f"{path}.relay")
                        self._require_role(
                            relay, {PeerRole.RELAY, PeerRole.SUPER}, f"{path}.relay"
                        )

        defaults = self.config.defaults
        if defaults.k < 1:
            raise InvalidScenario("defaults.k", "k는 1 이상이어야 합니다")
        if defaults.hop_limit < 0:
            raise InvalidScenario("defaults.hop_limit", "hop_limit은 0 이상이어야 합니다")


def compile_scenario(config: ScenarioConfig, base_dir: Path | None = None) -> Scenario:
    """
    참조를 해석하고 교차 검증한 Scenario를 만듭니다.

    Args:
        config: 구조 검증을 마친 설정
        base_dir: 광고 file 경로의 기준 디렉토리 (기본: 현재 디렉토리)

    Raises:
        InvalidScenario: 첫 번째로 실패한 필드 경로 포함
    """
    return _Compiler(config, base_dir or Path(".")).compile()


def load_scenario(path: Path) -> Scenario:
    """
    시나리오 파일을 읽어 검증합니다. 광고 file 경로는 시나리오 파일 위치 기준입니다.

    Raises:
        InvalidScenario: 파일을 읽을 수 없거나 검증에 실패한 경우
    """
    try:
        document = path.read_bytes()
    except OSError as e:
        raise InvalidScenario("<file>", f"시나리오 파일을 읽을 수 없습니다: {path}") from e
    config = parse_scenario(document)
    scenario = compile_scenario(config, path.parent)
    logger.info(
        f"시나리오 로드 완료: {path} (피어 {len(scenario.peers)}개, "
        f"광고 {len(scenario.adverts)}개, 일정 {len(config.schedule)}개)"
    )
    return scenario

