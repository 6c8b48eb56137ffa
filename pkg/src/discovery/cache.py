"""
수명 기반 광고 캐시.

모든 광고는 수명을 가지고 게시되며, 수명이 끝나면 자동으로 삭제됩니다.
재게시는 만료 시각을 `now + lifetime`으로 교체합니다.

만료 경계는 포함(inclusive)입니다: `expires_at <= now`이면 죽은 엔트리입니다.
"""

from dataclasses import dataclass, field, replace

from loguru import logger

from src.discovery.adverts import ModuleSpecAdvertisement, ModuleSpecId, PeerId
from src.discovery.errors import CapacityZero, InvalidLifetime, NotFound
from src.discovery.groups import GroupId


@dataclass(frozen=True, slots=True)
class CachedEntry:
    """캐시에 보관된 MSA와 게시 메타데이터."""

    advert: ModuleSpecAdvertisement
    publisher: PeerId
    group: GroupId
    published_at: int
    expires_at: int

    def __post_init__(self) -> None:
        if self.expires_at <= self.published_at:
            raise InvalidLifetime(
                f"expires_at({self.expires_at}) <= published_at({self.published_at})"
            )

    @property
    def msid(self) -> ModuleSpecId:
        return self.advert.msid

    def is_live(self, now: int) -> bool:
        return self.expires_at > now


def _check_lifetime(lifetime_ms: int) -> None:
    if lifetime_ms <= 0:
        raise InvalidLifetime(f"수명은 양수여야 합니다: {lifetime_ms}")


@dataclass
class AdvertCache:
    """
    피어가 보유한 광고 저장소.

    단일 작성자(소유 피어의 이벤트 핸들러)만 변경합니다.
    용량이 가득 차면 (만료 시각, MSID 문자열) 기준으로 가장 작은 엔트리를 축출합니다.
    """

    capacity: int
    entries: dict[ModuleSpecId, CachedEntry] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def copy(self) -> "AdvertCache":
        # 엔트리는 불변이므로 딕셔너리 얕은 복사로 충분합니다.
        return AdvertCache(capacity=self.capacity, entries=dict(self.entries))

    def publish(
        self,
        advert: ModuleSpecAdvertisement,
        publisher: PeerId,
        group: GroupId,
        lifetime_ms: int,
        now: int,
    ) -> ModuleSpecId | None:
        """
        광고를 게시합니다. 같은 MSID가 있으면 교체합니다.

        Args:
            advert: 게시할 MSA
            publisher: 게시 피어
            group: 광고가 속한 피어 그룹
            lifetime_ms: 수명 (ms, 양수)
            now: 현재 시뮬레이션 시각 (ms)

        Returns:
            ModuleSpecId | None: 용량 초과로 축출된 엔트리의 MSID (없으면 None)

        Raises:
            CapacityZero: 용량이 0인 경우
            InvalidLifetime: 수명이 0 이하인 경우
        """
        if self.capacity <= 0:
            raise CapacityZero("캐시 용량이 0입니다. 설정을 확인하세요.")
        _check_lifetime(lifetime_ms)

        evicted: ModuleSpecId | None = None
        if advert.msid not in self.entries and len(self.entries) >= self.capacity:
            evicted = self._pick_victim()
            del self.entries[evicted]
            logger.debug(f"캐시 용량 초과로 축출: {evicted}")

        self.entries[advert.msid] = CachedEntry(
            advert=advert,
            publisher=publisher,
            group=group,
            published_at=now,
            expires_at=now + lifetime_ms,
        )
        return evicted

    def republish(self, msid: ModuleSpecId, lifetime_ms: int, now: int) -> CachedEntry:
        """
        살아 있는 엔트리의 만료 시각을 `now + lifetime_ms`로 교체합니다.

        Raises:
            NotFound: 엔트리가 없거나 이미 만료된 경우 (전체 재게시 필요)
            InvalidLifetime: 수명이 0 이하인 경우
        """
        _check_lifetime(lifetime_ms)
        entry = self.lookup(msid, now)
        if entry is None:
            raise NotFound(f"재게시 대상 없음 또는 만료됨: {msid}")

        renewed = replace(entry, expires_at=now + lifetime_ms)
        self.entries[msid] = renewed
        return renewed

    def expire_sweep(self, now: int) -> list[ModuleSpecId]:
        """
        만료된 엔트리를 모두 제거합니다.

        Returns:
            list[ModuleSpecId]: 제거된 MSID (MSID 문자열 오름차순)
        """
        removed = sorted(
            (msid for msid, entry in self.entries.items() if not entry.is_live(now)),
            key=str,
        )
        for msid in removed:
            del self.entries[msid]
        return removed

    def lookup(self, msid: ModuleSpecId, now: int) -> CachedEntry | None:
        """엔트리가 있고 `expires_at > now`일 때만 반환합니다."""
        entry = self.entries.get(msid)
        if entry is None or not entry.is_live(now):
            return None
        return entry

    def live_entries(self, now: int) -> list[CachedEntry]:
        """살아 있는 엔트리 목록 (MSID 문자열 오름차순)."""
        return sorted(
            (entry for entry in self.entries.values() if entry.is_live(now)),
            key=lambda entry: str(entry.msid),
        )

    def _pick_victim(self) -> ModuleSpecId:
        # 만료된 엔트리는 만료 시각이 가장 작으므로 (expires_at, msid) 최소값이 곧 축출 순서입니다.
        victim = min(
            self.entries.values(),
            key=lambda entry: (entry.expires_at, str(entry.msid)),
        )
        return victim.msid
