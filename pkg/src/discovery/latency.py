import random
from dataclasses import dataclass, field

from src.config import settings
from src.discovery.adverts import PeerId


@dataclass(frozen=True, slots=True)
class LinkLatency:
    base_ms: int
    jitter_ms: int

    def __post_init__(self) -> None:
        if self.base_ms < 0 or self.jitter_ms < 0:
            raise ValueError(f"지연 값은 0 이상이어야 합니다: {self}")


@dataclass
class LatencyModel:
    """
    링크별 전달 지연 모델.

    지연 = base_ms + [0, jitter_ms] 구간의 균등 정수. 방향과 무관하게 같은 링크 설정을 씁니다.
    설정되지 않은 쌍은 기본값을 사용합니다.
    """

    per_link: dict[frozenset[PeerId], LinkLatency] = field(default_factory=dict)
    default: LinkLatency = field(
        default_factory=lambda: LinkLatency(
            settings.default_latency_base_ms, settings.default_latency_jitter_ms
        )
    )

    def link(self, src: PeerId, dst: PeerId) -> LinkLatency:
        return self.per_link.get(frozenset({src, dst}), self.default)

    def delay(self, src: PeerId, dst: PeerId, rng: random.Random) -> int:
        latency = self.link(src, dst)
        return latency.base_ms + rng.randint(0, latency.jitter_ms)
