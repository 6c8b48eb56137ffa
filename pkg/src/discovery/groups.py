"""
계층형 피어 그룹.

광고를 카테고리로 분류하여 게시/탐색 범위를 정합니다 (UDDI tModel 역할).
그룹 경로는 `/seg1/seg2` 형식이며 루트는 `/` 입니다.
"""

from dataclasses import dataclass, field
from typing import Self

from src.discovery.constants import GROUP_SEGMENT_PATTERN
from src.discovery.errors import InvalidIdentifier, OrphanGroup


@dataclass(frozen=True, slots=True, order=True)
class GroupId:
    """그룹 경로. 빈 경로가 루트입니다."""

    path: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for segment in self.path:
            if not GROUP_SEGMENT_PATTERN.fullmatch(segment):
                raise InvalidIdentifier(f"그룹 경로 세그먼트 형식 위반: {segment!r}")

    @classmethod
    def parse(cls, text: str) -> Self:
        """
        `/a/b` 형식 문자열을 GroupId로 변환합니다.

        Raises:
            InvalidIdentifier: `/`로 시작하지 않거나 빈/대문자 세그먼트가 있는 경우
        """
        if not text.startswith("/"):
            raise InvalidIdentifier(f"그룹 경로는 '/'로 시작해야 합니다: {text!r}")
        if text == "/":
            return cls(())
        return cls(tuple(text[1:].split("/")))

    @property
    def is_root(self) -> bool:
        return not self.path

    @property
    def parent(self) -> "GroupId | None":
        if self.is_root:
            return None
        return GroupId(self.path[:-1])

    def __str__(self) -> str:
        return "/" + "/".join(self.path)


ROOT_GROUP = GroupId()


@dataclass(frozen=True, slots=True)
class GroupTree:
    """부모에 대해 닫혀 있는 그룹 집합 (루트는 항상 존재)."""

    nodes: frozenset[GroupId] = field(default_factory=lambda: frozenset({ROOT_GROUP}))

    def __contains__(self, group: object) -> bool:
        return group in self.nodes

    def sorted_nodes(self) -> list[GroupId]:
        return sorted(self.nodes)


def create_group(tree: GroupTree, group: GroupId) -> GroupTree:
    """
    그룹을 트리에 추가합니다. 이미 있으면 트리를 그대로 반환합니다.

    Raises:
        OrphanGroup: 부모 그룹이 트리에 없는 경우
    """
    if group in tree.nodes:
        return tree
    parent = group.parent
    if parent is not None and parent not in tree.nodes:
        raise OrphanGroup(f"부모 그룹 '{parent}'이(가) 없습니다: {group}")
    return GroupTree(tree.nodes | {group})


def in_scope(query_group: GroupId, advert_group: GroupId) -> bool:
    """질의 그룹이 광고 그룹 경로의 접두사이면 True (자기 자신과 하위 그룹 포함)."""
    depth = len(query_group.path)
    return advert_group.path[:depth] == query_group.path
