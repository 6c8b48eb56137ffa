"""
시뮬레이션 지표와 보고서.

백분위수는 nearest-rank(하위 중간값) 규칙을 씁니다:
정렬된 n개 값에서 p 백분위수는 `ceil(p/100 × n)`번째 값입니다.
예: {100, 200, 300, 400}의 p50 = 200.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

from pydantic import BaseModel, ConfigDict

from src.discovery.errors import InvariantViolation
from src.discovery.messages import QueryId

PERCENTILE_RULE = "nearest-rank (p50 of 4 values = 2nd value)"


def percentile(values: list[int], p: float) -> int | None:
    """nearest-rank 백분위수. 빈 목록이면 None."""
    if not values:
        return None
    ordered = sorted(values)
    rank = max(0, math.ceil(p / 100 * len(ordered)) - 1)
    return ordered[rank]


class DiscoveryReport(BaseModel):
    """
    실행 결과 보고서.

    필드 순서가 곧 JSON 출력 순서입니다.
    """

    model_config = ConfigDict(frozen=True)

    p50_ms: int | None
    p95_ms: int | None
    max_ms: int | None
    queries: int
    hits: int
    stale_results: int
    messages: dict[str, int]
    expired: int
    completed_queries: int
    abandoned_results: int
    delivered: int
    dropped: int
    in_flight: int
    failed_actions: int
    rejected_publications: int
    percentile_rule: str = PERCENTILE_RULE

    def render_text(self) -> str:
        """사람이 읽는 텍스트 보고서. 첫 줄에 백분위수 규칙을 밝힙니다."""

        def ms(value: int | None) -> str:
            return "-" if value is None else f"{value} ms"

        lines = [
            f"# discovery report (percentiles: {self.percentile_rule})",
            f"p50_ms: {ms(self.p50_ms)}",
            f"p95_ms: {ms(self.p95_ms)}",
            f"max_ms: {ms(self.max_ms)}",
            f"queries: {self.queries}",
            f"hits: {self.hits}",
            f"stale_results: {self.stale_results}",
            "messages:",
            *(f"  {kind}: {count}" for kind, count in self.messages.items()),
            f"expired: {self.expired}",
            f"completed_queries: {self.completed_queries}",
            f"abandoned_results: {self.abandoned_results}",
            f"delivered: {self.delivered}",
            f"dropped: {self.dropped}",
            f"in_flight: {self.in_flight}",
            f"failed_actions: {self.failed_actions}",
            f"rejected_publications: {self.rejected_publications}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class Metrics:
    """한 번의 시뮬레이션 실행에서 누적되는 지표."""

    latencies: list[tuple[QueryId, int]] = field(default_factory=list)
    stale_results: int = 0
    abandoned_results: int = 0
    message_counts: Counter[str] = field(default_factory=Counter)
    expired_count: int = 0
    queries_issued: int = 0
    queries_completed: int = 0
    hits: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    failed_actions: int = 0
    rejected_publications: int = 0

    @property
    def sent(self) -> int:
        return sum(self.message_counts.values())

    def assert_invariants(self) -> None:
        """
        실행 후 불변식을 검사합니다.

        Raises:
            InvariantViolation: 만료된 결과 반환, 버려진 캐시 결과 반환, 메시지 보존 위반
        """
        if self.stale_results:
            raise InvariantViolation(f"만료된 광고가 결과로 반환됨: {self.stale_results}건")
        if self.abandoned_results:
            raise InvariantViolation(
                f"떠난 게시자의 만료된 광고가 결과로 반환됨: {self.abandoned_results}건"
            )
        if self.sent != self.delivered + self.dropped + self.in_flight:
            raise InvariantViolation(
                f"메시지 보존 위반: sent={self.sent} delivered={self.delivered} "
                f"dropped={self.dropped} in_flight={self.in_flight}"
            )


def report(metrics: Metrics) -> DiscoveryReport:
    latencies = [ms for _, ms in metrics.latencies]
    return DiscoveryReport(
        p50_ms=percentile(latencies, 50),
        p95_ms=percentile(latencies, 95),
        max_ms=max(latencies) if latencies else None,
        queries=metrics.queries_issued,
        hits=metrics.hits,
        stale_results=metrics.stale_results,
        messages=dict(sorted(metrics.message_counts.items())),
        expired=metrics.expired_count,
        completed_queries=metrics.queries_completed,
        abandoned_results=metrics.abandoned_results,
        delivered=metrics.delivered,
        dropped=metrics.dropped,
        in_flight=metrics.in_flight,
        failed_actions=metrics.failed_actions,
        rejected_publications=metrics.rejected_publications,
    )
