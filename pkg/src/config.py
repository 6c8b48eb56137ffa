"""Configuration management for the P2P service discovery toolkit.

이 파일은 시뮬레이션/검색 기본값을 타입 안전하게 관리합니다.
Pydantic을 사용해서 자동으로 .env 파일을 읽고 검증합니다.

사용법:
    from src.config import settings

    # settings 객체를 통해 기본값 접근
    lifetime = settings.default_lifetime_ms
"""

from typing import Literal

from pydantic import Field, PositiveFloat, PositiveInt
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):  # type: ignore[misc]
    """
    애플리케이션 설정 클래스.

    .env 파일의 환경 변수를 자동으로 로드하고 타입 검증합니다.
    모든 필드에 기본값이 있으며, 시나리오 파일의 `defaults` 블록이 우선합니다.
    """

    # 환경 설정 (선택, 기본값 있음)
    environment: Literal["development", "staging", "production"] = "development"
    debug: bool = False
    log_level: str = "INFO"
    log_dir: str | None = Field(
        default=None, description="파일 로그를 남길 디렉토리 (없으면 stderr만 사용)"
    )

    # 광고 수명 / 캐시 용량
    default_lifetime_ms: PositiveInt = Field(
        default=300_000, description="MSA 기본 수명 (ms)"
    )
    rendezvous_cache_capacity: PositiveInt = Field(
        default=10_000, description="랑데부 피어 캐시 용량 (엔트리 수)"
    )
    edge_cache_capacity: PositiveInt = Field(
        default=256, description="엣지 피어 로컬 캐시 용량 (엔트리 수)"
    )

    # 탐색 기본값
    default_k: PositiveInt = Field(default=10, description="검색 결과 상위 K")
    default_hop_limit: int = Field(
        default=7, ge=0, description="질의 플러딩 최대 홉 수"
    )
    default_timeout_ms: PositiveInt = Field(
        default=1000, description="질의 결과 수집 마감 시간 (ms)"
    )
    sweep_interval_ms: PositiveInt = Field(
        default=1000, description="만료 스윕 주기 (ms)"
    )

    # 링크 지연 기본값
    default_latency_base_ms: int = Field(
        default=20, ge=0, description="링크 기본 지연 (ms)"
    )
    default_latency_jitter_ms: int = Field(
        default=5, ge=0, description="링크 지터 상한 (ms)"
    )

    # 필드 가중치 (name > description > wsdl)
    weight_name: PositiveFloat = Field(default=3.0, description="서비스 이름 토큰 가중치")
    weight_description: PositiveFloat = Field(
        default=2.0, description="서비스 설명 토큰 가중치"
    )
    weight_wsdl: PositiveFloat = Field(default=1.0, description="WSDL 식별자 토큰 가중치")

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=False
    )


# 전역 settings 인스턴스 (import해서 사용)
settings = Settings()
