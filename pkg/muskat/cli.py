"""
命令行入口
muskat simulate / verify / diagnose
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence

from .config.logging_config import setup_logging
from .config.settings import (DEFAULT_VERIFY_A, SimConfig, VerifySettings, env_override,
                              load_config_file, parse_ini)
from .diagnostics import CheckReport
from .evolution import TERMINATION_BLOWUP, TERMINATION_COMPLETED
from .exceptions import ConfigError, DiagnosticsFormatError, MuskatError
from .infrastructure.run_store import RunStore
from .services import DiagnoseService, SimulationService, VerificationService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def parse_config(text: str, environ: Optional[Dict[str, str]] = None) -> SimConfig:
    """INI 文本 → 校验过的 SimConfig；空文本报 missing scenario"""
    sections = parse_ini(text)
    env_override(sections, environ=environ)
    return SimConfig.from_config(sections)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_table(title: str, reports: Sequence[CheckReport]) -> None:
    print(f"=== {title} ===")
    width = max([len(r.check) for r in reports] + [5])
    print(f"{'check':<{width}}  {'status':<14}  {'value':>14}  {'bound':>14}  params")
    for r in reports:
        params = ", ".join(f"{k}={_fmt(v)}" for k, v in r.params.items() if not isinstance(v, list))
        print(f"{r.check:<{width}}  {r.status:<14}  {_fmt(r.value):>14}  {_fmt(r.bound):>14}  {params}")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = SimConfig.from_config(load_config_file(args.config))
    outcome = SimulationService().simulate(config, args.out)
    summary = outcome.summary
    if not args.quiet:
        print("=== 模拟结果 ===")
        print(f"输出目录: {outcome.run_dir}")
        for key in ("termination", "t_final", "records_count", "max_slope_monotone", "mass_drift",
                    "blowup_accumulator_final", "steps_accepted", "steps_rejected",
                    "singularity_time_bound"):
            print(f"{key}: {_fmt(summary.get(key))}")
    if summary["termination"] in (TERMINATION_COMPLETED, TERMINATION_BLOWUP):
        return EXIT_OK
    return EXIT_CHECK_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    section = {"suite": args.suite, "a": args.a, "workers": str(args.workers), "seed": str(args.seed)}
    if args.minimizer_m is not None:
        section["minimizer_m"] = str(args.minimizer_m)
    settings = VerifySettings.parse(section)
    reports = VerificationService().run(settings)
    print_table(f"验证报告 suite={settings.suite}", reports)
    if args.json:
        path = RunStore(".").write_verify_report([r.to_dict() for r in reports], args.json)
        print(f"报告已写出: {path}")
    passed = all(r.passed for r in reports if r.applicable)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_diagnose(args: argparse.Namespace) -> int:
    outcome = DiagnoseService().diagnose(args.run)
    print_table(f"诊断结论 {outcome.run_dir}", outcome.checks)
    if outcome.singularity_time_bound is not None:
        print(f"singularity_time_bound: {outcome.singularity_time_bound:.6g}")
    print("VERDICT: " + ("PASS" if outcome.passed else "FAIL"))
    return EXIT_OK if outcome.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muskat", description="Muskat 界面方程求解与验证")
    parser.add_argument("--log-dir", default=None, help="日志目录（默认只输出到控制台）")
    parser.add_argument("--log-level", default="INFO", help="日志级别")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="运行一次模拟")
    sim.add_argument("--config", required=True, help="INI 配置文件")
    sim.add_argument("--out", default=None, help="输出目录（覆盖配置中的 [output] dir）")
    sim.add_argument("--quiet", action="store_true", help="控制台只输出警告")
    sim.set_defaults(handler=cmd_simulate)

    ver = sub.add_parser("verify", help="核函数与变分恒等式验证")
    ver.add_argument("--suite", default="all", help="kernels | variational | all")
    ver.add_argument("--a", default=",".join(str(a) for a in DEFAULT_VERIFY_A),
                     help="逗号分隔的 a 列表")
    ver.add_argument("--json", default=None, help="JSON 报告路径")
    ver.add_argument("--workers", type=int, default=1, help="并行线程数")
    ver.add_argument("--seed", type=int, default=0, help="随机种子")
    ver.add_argument("--minimizer-m", type=int, default=None, help="极小化网格点数")
    ver.set_defaults(handler=cmd_verify, quiet=False)

    diag = sub.add_parser("diagnose", help="重算已完成运行的检查")
    diag.add_argument("--run", required=True, help="运行目录")
    diag.set_defaults(handler=cmd_diagnose, quiet=False)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_dir, args.log_level, quiet=args.quiet)
    try:
        return args.handler(args)
    except ConfigError as e:
        print("配置错误:", file=sys.stderr)
        for v in e.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_ERROR
    except DiagnosticsFormatError as e:
        print(f"诊断文件格式错误 (row {e.row}): {e}", file=sys.stderr)
        return EXIT_ERROR
    except MuskatError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
