"""
광고 텍스트에 대한 가중 역색인과 빈도 기반 top-K 검색.

점수 공식:
    score(d) = Σ_t weightedTf(t, d) × ln(1 + N / (1 + df(t)))

- weightedTf는 name / description / WSDL 텍스트별 출현 횟수에 필드 가중치를 곱한 합
- 질의는 OR 의미 (토큰 하나라도 공유하면 매칭)
- 정렬: 점수 내림차순, 동점이면 MSID 문자열 오름차순
"""

import math
import re
from collections import Counter
from collections.abc import Callable
from dataclasses import dataclass, field

from pydantic import BaseModel, ConfigDict, PositiveFloat

from src.config import settings
from src.discovery.adverts import ModuleSpecAdvertisement, ModuleSpecId, wsdl_search_text
from src.discovery.errors import DuplicateDocument, EmptyQuery

_NON_ALNUM = re.compile(r"[^A-Za-z0-9]+")
_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z])(?=[A-Z])")


def tokenize(text: str) -> list[str]:
    """
    텍스트를 검색 토큰 목록으로 분리합니다.

    - 영숫자가 아닌 모든 문자와 소문자→대문자 경계(camelCase)에서 분리
    - 전부 소문자로 변환
    - 길이 1 토큰은 숫자가 아니면 제거
    - 출현 순서와 중복을 그대로 유지

    Example:
        >>> tokenize("get-Forecast_v2 a")
        ['get', 'forecast', 'v2']
    """
    tokens: list[str] = []
    for chunk in _NON_ALNUM.split(text):
        for piece in _CAMEL_BOUNDARY.split(chunk):
            token = piece.lower()
            if len(token) >= 2 or (token and token.isdigit()):
                tokens.append(token)
    return tokens


class FieldWeights(BaseModel):
    """필드별 가중치. 이름 > 설명 > WSDL 순으로 중요도를 둡니다."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: PositiveFloat = settings.weight_name
    description: PositiveFloat = settings.weight_description
    wsdl: PositiveFloat = settings.weight_wsdl

    @classmethod
    def parse(cls, text: str) -> "FieldWeights":
        """`3,2,1` 형식 문자열을 가중치로 변환합니다."""
        parts = [part.strip() for part in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"가중치는 name,description,wsdl 세 값이어야 합니다: {text!r}")
        name, description, wsdl = (float(part) for part in parts)
        return cls(name=name, description=description, wsdl=wsdl)


def weighted_term_frequencies(
    advert: ModuleSpecAdvertisement, weights: FieldWeights
) -> dict[str, float]:
    """광고 하나의 토큰별 가중 빈도를 계산합니다."""
    frequencies: dict[str, float] = {}
    for text, weight in (
        (advert.name, weights.name),
        (advert.description, weights.description),
        (wsdl_search_text(advert.wsdl), weights.wsdl),
    ):
        for token, count in Counter(tokenize(text)).items():
            frequencies[token] = frequencies.get(token, 0.0) + weight * count
    return frequencies


def idf(doc_count: int, doc_freq: int) -> float:
    return math.log(1.0 + doc_count / (1.0 + doc_freq))


@dataclass(frozen=True, slots=True)
class ScoredHit:
    """순위가 매겨진 검색 결과 하나."""

    msid: ModuleSpecId
    score: float
    matched_terms: frozenset[str]

    def sort_key(self) -> tuple[float, str]:
        return (-self.score, str(self.msid))


@dataclass
class InvertedIndex:
    """
    토큰 → (MSID → 가중 빈도) 역색인.

    읽기는 부수 효과가 없으며, 변경(index/remove)은 배타적으로 수행해야 합니다.
    """

    postings: dict[str, dict[ModuleSpecId, float]] = field(default_factory=dict)
    documents: dict[ModuleSpecId, dict[str, float]] = field(default_factory=dict)

    @property
    def doc_count(self) -> int:
        return len(self.documents)

    def doc_freq(self, token: str) -> int:
        return len(self.postings.get(token, ()))

    def __contains__(self, msid: object) -> bool:
        return msid in self.documents

    def copy(self) -> "InvertedIndex":
        return InvertedIndex(
            postings={token: dict(docs) for token, docs in self.postings.items()},
            documents={msid: dict(terms) for msid, terms in self.documents.items()},
        )

    def index_advert(
        self, advert: ModuleSpecAdvertisement, weights: FieldWeights | None = None
    ) -> None:
        """
        광고를 색인합니다.

        Raises:
            DuplicateDocument: 같은 MSID가 이미 색인된 경우 (갱신하려면 먼저 제거)
        """
        if advert.msid in self.documents:
            raise DuplicateDocument(f"이미 색인된 문서: {advert.msid}")

        terms = weighted_term_frequencies(advert, weights or FieldWeights())
        self.documents[advert.msid] = terms
        for token, weighted_tf in terms.items():
            self.postings.setdefault(token, {})[advert.msid] = weighted_tf

    def remove_advert(self, msid: ModuleSpecId) -> None:
        """MSID의 모든 포스팅을 제거합니다. 없는 MSID는 무시합니다."""
        terms = self.documents.pop(msid, None)
        if terms is None:
            return
        for token in terms:
            docs = self.postings[token]
            del docs[msid]
            if not docs:
                del self.postings[token]

    def search(
        self,
        query: str,
        k: int,
        accept: Callable[[ModuleSpecId], bool] | None = None,
    ) -> tuple[list[ScoredHit], int]:
        """
        질의와 토큰을 하나 이상 공유하는 문서를 점수순으로 반환합니다.

        Args:
            query: 검색어
            k: 반환할 최대 결과 수 (1 이상)
            accept: 범위 필터 (그룹 범위, 생존 여부 등). False인 문서는 매칭에서 제외

        Returns:
            tuple[list[ScoredHit], int]: (상위 k개 결과, 컷 이전 전체 매칭 수)

        Raises:
            EmptyQuery: 질의 토큰이 비어 있는 경우
            ValueError: k < 1
        """
        if k < 1:
            raise ValueError(f"k는 1 이상이어야 합니다: {k}")
        query_tokens = list(dict.fromkeys(tokenize(query)))
        if not query_tokens:
            raise EmptyQuery(f"질의에서 토큰을 추출할 수 없습니다: {query!r}")

        scores: dict[ModuleSpecId, float] = {}
        matched: dict[ModuleSpecId, set[str]] = {}
        rejected: set[ModuleSpecId] = set()
        n = self.doc_count
        for token in query_tokens:
            docs = self.postings.get(token)
            if not docs:
                continue
            weight = idf(n, len(docs))
            for msid, weighted_tf in docs.items():
                if msid in rejected:
                    continue
                if msid not in scores:
                    if accept is not None and not accept(msid):
                        rejected.add(msid)
                        continue
                    scores[msid] = 0.0
                    matched[msid] = set()
                scores[msid] += weighted_tf * weight
                matched[msid].add(token)

        hits = sorted(
            (
                ScoredHit(msid=msid, score=score, matched_terms=frozenset(matched[msid]))
                for msid, score in scores.items()
            ),
            key=ScoredHit.sort_key,
        )
        return hits[:k], len(hits)
