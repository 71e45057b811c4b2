"""
verify 子命令

依次运行全部数值检查并输出检查表；全部通过时返回 0，否则返回 1。
--appendix 只输出附录数值表，--limit 只做一次极限检查。
"""

from typing import Callable, Dict, List, TextIO, Tuple

from src.cli.run_config import RunConfig
from src.models.system_params import SystemParams, Tolerances
from src.services.appendix_service import AppendixService
from src.services.gap_service import GapService
from src.utils.csv_handler import CSVHandler
from src.utils.exceptions import BoundViolation
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

CHECK_COLUMNS = ("check", "ok", "detail")
APPENDIX_COLUMNS = ("name", "arguments", "value", "target", "ok")
LIMIT_COLUMNS = ("K", "ratio", "lemma_ratio")

# (N, M, K_max, ε)
DEFAULT_LIMITS = ((4, 2.0, 100000, 1e-3), (10, 3.0, 100000, 1e-3), (2, 1.5, 100000, 1e-3), (4, 0.5, 100000, 1e-3))


def _sweep(config: RunConfig) -> str:
    sweep = GapService.sweep_gap(
        users=config.users or GapService.DEFAULT_USERS,
        files=config.files or GapService.DEFAULT_FILES,
        memory_values=config.memory or None,
        threads=config.threads,
        tolerances=config.tolerances,
    )
    summary = sweep.summary
    if summary.points == 0:
        raise BoundViolation("网格中没有 0 < M < N 的参数点")
    stray = [p for p in summary.tight_upper_points if not (p[0] == 2 and p[1] >= 2 and p[2] == p[1] / 2)]
    if stray:
        raise BoundViolation("比值在 K = 2、M = N/2 以外达到 1.5", stray[0])
    return summary.describe()


def _appendix() -> str:
    results = AppendixService.reference_evaluations()
    failed = [r for r in results if not r.matches]
    if failed:
        raise BoundViolation(f"{failed[0].name}{failed[0].arguments} = {failed[0].value!r}，"
                             f"参考值 {failed[0].target}", failed[0].arguments)
    return f"{len(results)} values match"


def _limit(files: int, memory: float, k_max: int, epsilon: float, tolerances: Tolerances) -> str:
    points = GapService.limit_check(files, memory, GapService.limit_users(k_max), epsilon, tolerances)
    return f"ratio {points[-1].ratio:.9f} at K={points[-1].users}"


def checks(config: RunConfig) -> List[Tuple[str, Callable[[], str]]]:
    tol = config.tolerances
    lower_point = SystemParams(10, 2, 0.4)
    items = [
        ("sweep_gap", lambda: _sweep(config)),
        ("tight_upper", lambda: f"{len(GapService.check_tight_upper(tolerances=tol))} points at ratio 1.5"),
        ("tight_lower", lambda: f"ratio {GapService.check_tight_lower(lower_point, tol):.6f} at K=10 N=2 M=0.4"),
        ("lemma_grid", lambda: f"{GapService.check_lemma_grid(tolerances=tol)} points"),
        ("l_identity", lambda: f"max deviation {GapService.check_l_identity(tolerances=tol):.3e}"),
        ("f_grid", lambda: f"min f {GapService.check_f_grid(tolerances=tol):.3e}"),
        ("fgh_chain", lambda: f"{GapService.check_fgh_chain(tolerances=tol)} (n, s) pairs"),
        ("l_grid", lambda: f"max l {GapService.check_l_grid():.6f}"),
        ("bound_monotonicity", lambda: GapService.check_bound_monotonicity(tolerances=tol) or "B1/B2 monotone"),
        ("appendix_values", _appendix),
        ("rate_shapes",
         lambda: f"{GapService.check_rate_shapes(range(2, 11), range(1, 6), tolerances=tol)} (K, N) pairs"),
    ]
    for N, M, k_max, eps in DEFAULT_LIMITS:
        items.append((f"limit N={N} M={M:g}", lambda N=N, M=M, k=k_max, e=eps: _limit(N, M, k, e, tol)))
    return items


def run_checks(config: RunConfig) -> List[Dict[str, object]]:
    """运行全部检查；BoundViolation 记为失败行，继续后续检查"""
    rows = []
    for name, check in checks(config):
        try:
            detail = check()
            rows.append({"check": name, "ok": True, "detail": detail})
            logger.info(f"[通过] {name}: {detail}")
        except BoundViolation as e:
            rows.append({"check": name, "ok": False, "detail": str(e)})
            logger.error(f"[失败] {name}: {e}")
    return rows


def run_verify(config: RunConfig, stream: TextIO) -> int:
    if config.appendix:
        results = AppendixService.reference_evaluations()
        CSVHandler.write_rows([r.as_row() for r in results], APPENDIX_COLUMNS, config.fmt,
                              file_path=config.out, stream=stream)
        return 0 if all(r.matches for r in results) else 1

    if config.limit is not None:
        limit = config.limit
        points = GapService.limit_check(limit['N'], limit['M'], GapService.limit_users(limit['Kmax']),
                                        limit.get('eps'), config.tolerances)
        rows = [{"K": p.users, "ratio": p.ratio, "lemma_ratio": p.lemma_ratio} for p in points]
        CSVHandler.write_rows(rows, LIMIT_COLUMNS, config.fmt, file_path=config.out, stream=stream)
        return 0

    rows = run_checks(config)
    CSVHandler.write_rows(rows, CHECK_COLUMNS, config.fmt, file_path=config.out, stream=stream)
    failed = [r for r in rows if not r["ok"]]
    if failed:
        logger.error(f"{len(failed)} 项检查失败，首个: {failed[0]['check']}: {failed[0]['detail']}")
        return 1
    return 0
