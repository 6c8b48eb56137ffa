#!/usr/bin/env python3
"""
같은 시나리오를 여러 시드로 반복 실행하고 탐색 지연 분포를 요약합니다.

Usage:
    uv run scripts/run_discovery.py                               # relay_demo, 시드 0..99
    uv run scripts/run_discovery.py --scenario scenarios/relay_demo.json --runs 20
    uv run scripts/run_discovery.py --output reports/relay_demo_seeds.json
"""

import argparse
import sys
import time
from pathlib import Path

from loguru import logger
from pydantic import BaseModel

from src.discovery.cli import setup_logging, write_atomic
from src.discovery.errors import InvalidScenario, InvariantViolation
from src.discovery.metrics import percentile, report
from src.discovery.scenario import load_scenario
from src.discovery.simulator import run_scenario

PROJECT_ROOT = Path(__file__).parent.parent.resolve()
DEFAULT_SCENARIO = PROJECT_ROOT / "scenarios" / "relay_demo.json"


class SeedSweepSummary(BaseModel):
    scenario: str
    runs: int
    first_seed: int
    queries: int
    completed_queries: int
    p50_ms: int | None
    p95_ms: int | None
    max_ms: int | None
    stale_results: int
    elapsed_seconds: float


def sweep(scenario_path: Path, first_seed: int, runs: int) -> SeedSweepSummary:
    """
    시드 first_seed부터 runs번 실행합니다.

    Raises:
        InvalidScenario: 시나리오 검증 실패
        InvariantViolation: 어느 한 실행이라도 불변식을 위반한 경우
    """
    scenario = load_scenario(scenario_path)
    started = time.perf_counter()
    latencies: list[int] = []
    queries = completed = stale = 0
    for seed in range(first_seed, first_seed + runs):
        metrics, _ = run_scenario(scenario, seed)
        metrics.assert_invariants()
        summary = report(metrics)
        latencies.extend(ms for _, ms in metrics.latencies)
        queries += summary.queries
        completed += summary.completed_queries
        stale += summary.stale_results
        logger.debug(f"seed={seed} p95={summary.p95_ms}ms 완료 {summary.completed_queries}/{summary.queries}")

    return SeedSweepSummary(
        scenario=str(scenario_path),
        runs=runs,
        first_seed=first_seed,
        queries=queries,
        completed_queries=completed,
        p50_ms=percentile(latencies, 50),
        p95_ms=percentile(latencies, 95),
        max_ms=max(latencies) if latencies else None,
        stale_results=stale,
        elapsed_seconds=round(time.perf_counter() - started, 3),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description="시드 반복 실행 요약")
    parser.add_argument("--scenario", type=Path, default=DEFAULT_SCENARIO, help="시나리오 JSON 파일")
    parser.add_argument("--first-seed", type=int, default=0, help="첫 시드 (기본: 0)")
    parser.add_argument("--runs", type=int, default=100, help="실행 횟수 (기본: 100)")
    parser.add_argument("--output", type=Path, help="요약 JSON 저장 경로")
    args = parser.parse_args()

    setup_logging()
    logger.info(f"=== 시드 반복 실행 시작: {args.scenario} × {args.runs} ===")
    try:
        summary = sweep(args.scenario, args.first_seed, args.runs)
    except InvalidScenario as e:
        logger.error(f"시나리오 검증 실패: {e}")
        return 1
    except InvariantViolation as e:
        logger.error(f"불변식 위반: {e}")
        return 2

    if args.output:
        write_atomic(args.output, summary.model_dump_json(indent=2) + "\n")
        logger.info(f"요약 저장: {args.output}")

    logger.success("=== 시드 반복 실행 완료 ===")
    logger.success(
        f"질의 {summary.queries}건 중 완료 {summary.completed_queries}건, "
        f"p50={summary.p50_ms}ms p95={summary.p95_ms}ms max={summary.max_ms}ms"
    )
    logger.success(f"총 소요 시간: {summary.elapsed_seconds:.2f}초")
    return 0


if __name__ == "__main__":
    sys.exit(main())
