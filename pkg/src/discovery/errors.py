"""탐색 툴킷 전체에서 사용하는 예외 계층."""


class DiscoveryError(Exception):
    """모든 도메인 예외의 최상위 클래스."""


# === 광고 / XML ===


class InvalidIdentifier(DiscoveryError, ValueError):
    """MCID, MSID, PeerId, GroupId 문자열 형식 위반."""


class MalformedXml(DiscoveryError):
    """XML로 파싱할 수 없는 입력."""


class SchemaViolation(DiscoveryError):
    """필수 요소 누락, 순서 위반, 알 수 없는 요소, 식별자 형식 위반."""

    def __init__(self, message: str, element: str | None = None) -> None:
        self.element = element
        super().__init__(f"{element}: {message}" if element else message)


# === 캐시 / 인덱스 ===


class CapacityZero(DiscoveryError):
    """용량 0인 캐시에 게시를 시도함 (설정 오류)."""


class InvalidLifetime(DiscoveryError, ValueError):
    """수명이 0 이하임."""


class NotFound(DiscoveryError):
    """재게시 대상이 없거나 이미 만료됨. 게시자는 전체 광고를 다시 게시해야 합니다."""


class DuplicateDocument(DiscoveryError):
    """이미 인덱싱된 MSID를 다시 인덱싱하려 함."""


class EmptyQuery(DiscoveryError, ValueError):
    """토큰화 결과가 비어 있는 질의."""


# === 그룹 ===


class OrphanGroup(DiscoveryError):
    """부모 그룹이 없는 그룹 생성."""


# === 오버레이 ===


class UnroutableTarget(DiscoveryError):
    """릴레이의 라우팅 테이블에 대상 경로가 없음."""


class NotRegistered(DiscoveryError):
    """랑데부에 등록되지 않은 엣지가 게시/탐색을 시도함."""


class RoleMismatch(DiscoveryError):
    """현재 피어 역할로는 허용되지 않는 연산."""


class UnknownPeer(DiscoveryError, LookupError):
    """이름, PeerId, 휴대폰 번호 어느 것으로도 찾을 수 없는 피어."""


class UnknownModuleClass(DiscoveryError):
    """선언되지 않은 모듈 클래스(MCA)에 속한 MSA 게시."""


class UnknownQuery(DiscoveryError):
    """진행 중인 질의 목록에 없는 QueryId."""


class DeadlineNotReached(DiscoveryError):
    """질의 마감 시간 전에 결과 수집을 시도함."""


# === 시뮬레이션 ===


class InvalidScenario(DiscoveryError):
    """시나리오 검증 실패. 첫 번째로 실패한 필드 경로를 담습니다."""

    def __init__(self, field_path: str, message: str) -> None:
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


class InvariantViolation(DiscoveryError):
    """실행 중 내부 불변식 위반 (예: staleResults > 0)."""
