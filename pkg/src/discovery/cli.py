"""
명령줄 진입점.

    p2p-discovery run --scenario relay_demo.json --seed 42 --report out.json [--trace trace.log]
    p2p-discovery validate-scenario --scenario relay_demo.json
    p2p-discovery search-corpus --dir corpus/ --query weather [--k 10] [--weights 3,2,1]

종료 코드: 0 성공, 1 잘못된 입력(시나리오 검증 실패, 빈 질의), 2 내부 불변식 위반.
"""

import argparse
import os
import sys
import tempfile
from pathlib import Path

from loguru import logger

from src.config import settings
from src.discovery.adverts import ModuleSpecAdvertisement
from src.discovery.codec import parse_advert
from src.discovery.constants import MSA_FILE_SUFFIX
from src.discovery.errors import (
    DiscoveryError,
    DuplicateDocument,
    EmptyQuery,
    InvalidScenario,
    InvariantViolation,
)
from src.discovery.index import FieldWeights, InvertedIndex, ScoredHit
from src.discovery.metrics import report
from src.discovery.scenario import load_scenario
from src.discovery.simulator import run_scenario

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_INVARIANT = 2


def setup_logging(level: str | None = None, log_dir: str | None = None) -> None:
    """
    로깅 설정을 초기화합니다.

    stderr 싱크는 항상 추가하고, log_dir가 있으면 회전 파일 싱크를 추가합니다.
    """
    logger.remove()
    log_level = (level or settings.log_level).upper()
    logger.add(sys.stderr, level=log_level)

    log_dir = log_dir or settings.log_dir
    if log_dir:
        logger.add(
            f"{log_dir}/discovery_{{time:YYYY-MM-DD-HH-mm-ss}}.log",
            rotation="10 MB",
            compression="zip",
            level=log_level,
        )


def write_atomic(path: Path, content: str) -> None:
    """임시 파일에 쓴 뒤 rename하여 부분적으로 쓰인 파일이 남지 않게 합니다."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(content)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise


# === 코퍼스 검색 ===


def load_corpus(directory: Path) -> list[ModuleSpecAdvertisement]:
    """
    디렉토리의 `.msa.xml` 파일을 파일 이름 순으로 읽습니다.

    파싱할 수 없는 파일은 경고를 남기고 건너뜁니다.
    """
    adverts: list[ModuleSpecAdvertisement] = []
    for path in sorted(directory.glob(f"*{MSA_FILE_SUFFIX}")):
        try:
            advert = parse_advert(path.read_bytes())
        except (DiscoveryError, OSError) as e:
            logger.warning(f"광고 파일 건너뜀: {path.name} ({e})")
            continue
        if not isinstance(advert, ModuleSpecAdvertisement):
            logger.warning(f"MSA가 아닌 파일 건너뜀: {path.name}")
            continue
        adverts.append(advert)
    return adverts


def search_corpus(
    adverts: list[ModuleSpecAdvertisement],
    query: str,
    k: int,
    weights: FieldWeights | None = None,
) -> list[tuple[ScoredHit, ModuleSpecAdvertisement]]:
    """
    광고 목록을 색인하고 검색합니다.

    Raises:
        EmptyQuery: 질의에서 토큰이 나오지 않는 경우
    """
    index = InvertedIndex()
    by_msid: dict[str, ModuleSpecAdvertisement] = {}
    for advert in adverts:
        try:
            index.index_advert(advert, weights)
        except DuplicateDocument as e:
            logger.warning(f"중복 MSID 건너뜀: {e}")
            continue
        by_msid[str(advert.msid)] = advert
    logger.info(f"코퍼스 색인 완료: 문서 {index.doc_count}개, 토큰 {len(index.postings)}개")

    hits, total = index.search(query, k)
    logger.info(f"검색 완료: '{query}' 매칭 {total}건, 상위 {len(hits)}건 출력")
    return [(hit, by_msid[str(hit.msid)]) for hit in hits]


def cmd_search_corpus(args: argparse.Namespace) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        logger.error(f"디렉토리가 없습니다: {directory}")
        return EXIT_INVALID_INPUT
    try:
        weights = FieldWeights.parse(args.weights) if args.weights else FieldWeights()
    except ValueError as e:
        logger.error(f"잘못된 가중치: {e}")
        return EXIT_INVALID_INPUT
    if args.k < 1:
        logger.error(f"k는 1 이상이어야 합니다: {args.k}")
        return EXIT_INVALID_INPUT

    try:
        results = search_corpus(load_corpus(directory), args.query, args.k, weights)
    except EmptyQuery as e:
        logger.error(str(e))
        return EXIT_INVALID_INPUT

    for rank, (hit, advert) in enumerate(results, start=1):
        print(f"{rank} {hit.score:.6f} {hit.msid} {advert.name}")
    return EXIT_OK


# === 시나리오 ===


def cmd_validate_scenario(args: argparse.Namespace) -> int:
    try:
        load_scenario(Path(args.scenario))
    except InvalidScenario as e:
        logger.error(f"시나리오 검증 실패: {e}")
        return EXIT_INVALID_INPUT
    logger.success(f"시나리오 검증 통과: {args.scenario}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(Path(args.scenario))
    except InvalidScenario as e:
        logger.error(f"시나리오 검증 실패: {e}")
        return EXIT_INVALID_INPUT

    try:
        metrics, trace = run_scenario(scenario, args.seed)
    except DiscoveryError as e:
        logger.error(f"시뮬레이션 중 내부 오류: {e}")
        return EXIT_INVARIANT

    summary = report(metrics)
    if args.report:
        report_path = Path(args.report)
        if report_path.suffix == ".json":
            write_atomic(report_path, summary.model_dump_json(indent=2) + "\n")
        else:
            write_atomic(report_path, summary.render_text())
        logger.info(f"보고서 저장: {report_path}")
    if args.trace:
        if args.trace_format == "pipe":
            lines = [record.render_pipe() for record in trace]
        else:
            lines = [record.render() for record in trace]
        write_atomic(Path(args.trace), "\n".join(lines) + "\n")
        logger.info(f"트레이스 저장: {args.trace} ({len(lines)}줄)")

    try:
        metrics.assert_invariants()
    except InvariantViolation as e:
        logger.error(f"불변식 위반: {e}")
        return EXIT_INVARIANT

    logger.success(
        f"시뮬레이션 완료: 질의 {summary.queries}건 (완료 {summary.completed_queries}건), "
        f"p95={summary.p95_ms}ms, 메시지 {sum(summary.messages.values())}건"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="p2p-discovery", description="P2P 모바일 웹 서비스 탐색 시뮬레이터"
    )
    parser.add_argument("--log-level", type=str, help="로그 레벨 (기본: 설정값)")
    parser.add_argument("--log-dir", type=str, help="파일 로그 디렉토리")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="시나리오를 실행하고 보고서를 씁니다.")
    run.add_argument("--scenario", required=True, help="시나리오 JSON 파일")
    run.add_argument("--seed", type=int, default=0, help="난수 시드 (기본: 0)")
    run.add_argument("--report", type=str, help="보고서 경로 (.json이면 JSON, 그 외는 텍스트)")
    run.add_argument("--trace", type=str, help="트레이스를 저장할 경로")
    run.add_argument(
        "--trace-format",
        choices=["record", "pipe"],
        default="record",
        help="트레이스 줄 형식 (기본: record)",
    )
    run.set_defaults(handler=cmd_run)

    validate = sub.add_parser("validate-scenario", help="시나리오 파일만 검증합니다.")
    validate.add_argument("--scenario", required=True, help="시나리오 JSON 파일")
    validate.set_defaults(handler=cmd_validate_scenario)

    search = sub.add_parser("search-corpus", help="광고 코퍼스를 색인하고 검색합니다.")
    search.add_argument("--dir", required=True, help=f"{MSA_FILE_SUFFIX} 파일 디렉토리")
    search.add_argument("--query", required=True, help="검색어")
    search.add_argument("--k", type=int, default=settings.default_k, help="상위 K")
    search.add_argument("--weights", type=str, help="필드 가중치 name,description,wsdl (예: 3,2,1)")
    search.set_defaults(handler=cmd_search_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_dir)
    code: int = args.handler(args)
    return code


if __name__ == "__main__":
    sys.exit(main())
