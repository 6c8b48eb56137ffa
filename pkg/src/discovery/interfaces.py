from abc import ABC, abstractmethod
from collections.abc import Callable

from src.discovery.adverts import PeerId
from src.discovery.messages import Message, Outbound
from src.discovery.peer import PeerState

Dispatch = Callable[[PeerState, Message, int, PeerId | None], list[Outbound]]


class RoleHandler(ABC):
    """
    RoleHandler 인터페이스.

    피어 역할 하나의 메시지 처리 동작을 정의합니다.
    super 피어는 rendezvous 핸들러와 relay 핸들러를 함께 사용합니다.
    """

    @abstractmethod
    def handles(self, message: Message) -> bool:
        """
        이 핸들러가 처리하는 메시지 종류인지 반환합니다.

        Args:
            message (Message): 수신 메시지.

        Returns:
            bool: 처리 대상이면 True.
        """
        raise NotImplementedError

    @abstractmethod
    def handle(
        self,
        state: PeerState,
        message: Message,
        now: int,
        sender: PeerId | None,
        dispatch: Dispatch,
    ) -> list[Outbound]:
        """
        메시지를 처리하고 송신할 메시지 목록을 반환합니다.

        Args:
            state (PeerState): 이 피어의 상태. 호출자가 넘긴 사본을 제자리에서 변경합니다.
            message (Message): 수신 메시지.
            now (int): 현재 시뮬레이션 시각 (ms).
            sender (PeerId | None): 직전 홉 송신자.
            dispatch (Dispatch): 봉투를 벗긴 내부 메시지를 같은 피어에서 다시 처리할 때 사용.

        Returns:
            list[Outbound]: (목적지, 메시지) 목록.

        Note:
            상태 변경은 이 피어의 이벤트 핸들러만 수행합니다 (단일 작성자).
        """
        raise NotImplementedError
