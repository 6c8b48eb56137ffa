"""
피어 이름 / PeerId / 휴대폰 번호 조회.

휴대폰 번호는 송신 전에 PeerId로 바꾸는 조회 키일 뿐이며, 전송 주소로 쓰이지 않습니다.
"""

from dataclasses import dataclass, field

from src.discovery.adverts import PeerId
from src.discovery.errors import UnknownPeer


@dataclass
class PeerDirectory:
    by_name: dict[str, PeerId] = field(default_factory=dict)
    by_id: dict[str, PeerId] = field(default_factory=dict)
    by_phone: dict[str, PeerId] = field(default_factory=dict)
    names: dict[PeerId, str] = field(default_factory=dict)

    def add(self, name: str, peer_id: PeerId) -> None:
        """
        피어를 등록합니다.

        Raises:
            ValueError: 이름, PeerId, 휴대폰 번호 중 하나라도 이미 등록된 경우
        """
        if name in self.by_name:
            raise ValueError(f"피어 이름 중복: {name}")
        if peer_id.value in self.by_id:
            raise ValueError(f"PeerId 중복: {peer_id}")
        if peer_id.phone_alias is not None:
            if peer_id.phone_alias in self.by_phone:
                raise ValueError(f"휴대폰 번호 중복: {peer_id.phone_alias}")
            self.by_phone[peer_id.phone_alias] = peer_id
        self.by_name[name] = peer_id
        self.by_id[peer_id.value] = peer_id
        self.names[peer_id] = name

    def resolve(self, ref: str) -> PeerId:
        """
        이름, `peer:` 식별자, 휴대폰 번호 순으로 조회합니다.

        Raises:
            UnknownPeer: 어느 키로도 찾을 수 없는 경우
        """
        for table in (self.by_name, self.by_id, self.by_phone):
            peer_id = table.get(ref)
            if peer_id is not None:
                return peer_id
        raise UnknownPeer(f"알 수 없는 피어: {ref!r}")

    def __contains__(self, ref: object) -> bool:
        return isinstance(ref, str) and any(
            ref in table for table in (self.by_name, self.by_id, self.by_phone)
        )

    def name_of(self, peer_id: PeerId) -> str:
        """트레이스 출력용 이름. 등록되지 않은 피어는 식별자 그대로 반환합니다."""
        return self.names.get(peer_id, str(peer_id))
