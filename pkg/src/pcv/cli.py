"""
Command Line Interface for the policy consistency verifier
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from .config import ASSUMPTIONS, FORMATS, RunConfig, load_defaults
from .domain import load_domain
from .errors import PcvError
from .goals import GoalRunner, base_packs, goal_program
from .lint import ProgramValidator
from .oracle import agrees, oracle_goal
from .rules import ChrRule, HandlerPack
from .spl import compile_policy, load_policy
from .verdicts import GoalRequest, InconsistencyReport, Verdict, VerdictKind, VerificationInputs
from .wpdl import compile_workflow, load_workflow

logger = logging.getLogger(__name__)

EXIT_CONSISTENT = 0
EXIT_INCONSISTENT = 1
EXIT_ERROR = 2
EXIT_DISAGREEMENT = 3


class PolicyCheckCLI:
    """Command line interface for policy and workflow consistency checks"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.inputs: Optional[VerificationInputs] = None

    async def load_inputs(self) -> VerificationInputs:
        """Parse every input file named by the configuration"""
        policies = tuple(load_policy(path) for path in self.config.policies)
        workflow = load_workflow(self.config.workflow) if self.config.workflow else None
        domain = load_domain(self.config.domain)
        self.inputs = VerificationInputs(policies, domain, workflow, self.config.assumption, self.config.skolemize)
        logger.info(f"Loaded {len(policies)} policies and domain {domain.name}")
        return self.inputs

    async def check(self) -> int:
        """Run the configured goals and report; returns the exit status"""
        try:
            inputs = await self.load_inputs()
        except PcvError as e:
            print(f"❌ {e}")
            return EXIT_ERROR
        except OSError as e:
            print(f"❌ Cannot read input: {e}")
            return EXIT_ERROR

        if self.config.dump_rules:
            self.dump_rules(inputs)

        requests = self.config.requests
        runner = GoalRunner(self.config.budget, self.config.deterministic)
        reports = await runner.run(inputs, requests)
        self.emit(reports)

        status = exit_status(reports)
        if self.config.oracle_check:
            discrepancies = await self.oracle_check(inputs, requests, reports)
            if discrepancies:
                print(json.dumps(discrepancies, indent=2), file=sys.stderr)
                return EXIT_DISAGREEMENT
        return status

    async def oracle_check(self, inputs: VerificationInputs, requests: Sequence[GoalRequest],
                           reports: Sequence[InconsistencyReport]) -> List[dict]:
        """Compare every decided engine verdict with the brute-force oracle"""
        tasks = [asyncio.to_thread(_oracle_verdict, inputs, request) for request in requests]
        oracle_verdicts = await asyncio.gather(*tasks)
        discrepancies = []
        for request, report, oracle in zip(requests, reports, oracle_verdicts):
            if report.verdict.kind is VerdictKind.ERROR:
                continue
            if oracle.kind is VerdictKind.ERROR:
                print(f"⚠️  Oracle could not check {request.label}: {oracle.diagnostic}")
                continue
            if not agrees(report.verdict, oracle):
                logger.error(f"Engine and oracle disagree on {request.label}")
                discrepancies.append({
                    "goal": request.label,
                    "engine": report.verdict.model_dump(mode="json"),
                    "oracle": oracle.model_dump(mode="json"),
                })
        if not discrepancies:
            print("✅ Oracle agrees with every decided goal")
        return discrepancies

    def emit(self, reports: Sequence[InconsistencyReport]):
        if self.config.output == "structured":
            text = "\n".join(report.model_dump_json() for report in reports) + "\n"
        else:
            text = "\n".join(format_report(report) for report in reports) + "\n"
        if self.config.output_file:
            Path(self.config.output_file).write_text(text, encoding="utf-8")
            print(f"Report written to {self.config.output_file}")
        else:
            print(text, end="")

    def dump_rules(self, inputs: VerificationInputs):
        for model in inputs.policies:
            print(f"% policy {model.name}")
            print(compile_policy(model).dump(), end="")
        if inputs.workflow is not None:
            print(f"% workflow {inputs.workflow.name}")
            print(compile_workflow(inputs.workflow).dump(), end="")


def _oracle_verdict(inputs: VerificationInputs, request: GoalRequest) -> Verdict:
    try:
        return oracle_goal(inputs, request)
    except PcvError as e:
        return Verdict.error(str(e))


def exit_status(reports: Sequence[InconsistencyReport]) -> int:
    kinds = {report.verdict.kind for report in reports}
    if VerdictKind.ERROR in kinds:
        return EXIT_ERROR
    if VerdictKind.INCONSISTENCY_FOUND in kinds:
        return EXIT_INCONSISTENT
    return EXIT_CONSISTENT


def format_report(report: InconsistencyReport) -> str:
    """Human readable lines for one report"""
    verdict = report.verdict
    stats = report.statistics
    lines = []
    if verdict.kind is VerdictKind.NO_INCONSISTENCY:
        lines.append(f"✅ {report.goal}: no inconsistency")
        if verdict.witness and verdict.witness.event:
            lines.append(f"   Witness: {verdict.witness.event}")
        if verdict.witness and verdict.witness.trace:
            lines.append("   Trace:")
            for activity, event in verdict.witness.trace.items():
                lines.append(f"     {activity}: {event}")
    elif verdict.kind is VerdictKind.INCONSISTENCY_FOUND:
        lines.append(f"❌ {report.goal}: inconsistency found (search exhausted over domain {report.domain})")
    else:
        lines.append(f"⚠️  {report.goal}: error - {verdict.diagnostic}")
    lines.append(f"   Firings: {stats.firings}, choice points: {stats.choice_points}, "
                 f"backtracks: {stats.backtracks}")
    return "\n".join(lines)


async def dump_command(policies: Sequence[str], workflow: Optional[str], packs: bool, validate: bool = False) -> int:
    """Print compiled rules for the given inputs, optionally validating the program they form"""
    rules: List[ChrRule] = []
    extra: List[HandlerPack] = []
    try:
        if packs:
            for pack in base_packs():
                print(f"% pack {pack.name}")
                print(pack.dump(), end="")
        for path in policies:
            policy = load_policy(path)
            compiled = compile_policy(policy)
            rules.extend(compiled.rules)
            print(f"% policy {policy.name}")
            print(compiled.dump(), end="")
        if workflow:
            flow = compile_workflow(load_workflow(workflow))
            extra.append(flow.pack())
            print(f"% workflow {flow.name}")
            print(flow.dump(), end="")
        if validate:
            result = ProgramValidator().print_validation_report(base_packs() + tuple(extra),
                                                                goal_program(rules, extra))
            if not result["overall_valid"]:
                return EXIT_ERROR
    except PcvError as e:
        print(f"❌ {e}")
        return EXIT_ERROR
    except OSError as e:
        print(f"❌ Cannot read input: {e}")
        return EXIT_ERROR
    return EXIT_CONSISTENT


def build_parser() -> argparse.ArgumentParser:
    defaults = load_defaults()
    parser = argparse.ArgumentParser(description="Policy consistency verifier")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    check_parser = subparsers.add_parser("check", help="Run consistency goals")
    check_parser.add_argument("--policy", action="append", default=[], help="SPL policy file (repeatable)")
    check_parser.add_argument("--workflow", help="Workflow file")
    check_parser.add_argument("--domain", required=True, help="Domain file")
    check_parser.add_argument("--goal", action="append", required=True,
                              help="inapplicability | monotonic-deny | monotonic-allow | redundancy=PATH | wf-consistency")
    check_parser.add_argument("--assume", choices=ASSUMPTIONS, default=defaults["assumption"])
    check_parser.add_argument("--budget", type=int, default=defaults["budget"], help="Rule firing budget per goal")
    check_parser.add_argument("--format", choices=FORMATS, default=defaults["output"])
    check_parser.add_argument("--oracle-check", action="store_true", help="Cross-check verdicts by enumeration")
    check_parser.add_argument("--dump-rules", action="store_true", help="Print compiled rules before solving")
    check_parser.add_argument("--skolemize", action="store_true",
                              help="Compile existentials over non-empty domain sets to a witness member")
    check_parser.add_argument("--log-level", default=defaults["log_level"])
    check_parser.add_argument("--output", help="Write the report to a file")

    dump_parser = subparsers.add_parser("dump", help="Print compiled rules")
    dump_parser.add_argument("--policy", action="append", default=[], help="SPL policy file (repeatable)")
    dump_parser.add_argument("--workflow", help="Workflow file")
    dump_parser.add_argument("--packs", action="store_true", help="Also print the handler packs")
    dump_parser.add_argument("--validate", action="store_true", help="Validate the packs and the composed program")
    dump_parser.add_argument("--log-level", default=defaults["log_level"])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        policies=args.policy,
        workflow=args.workflow,
        domain=args.domain,
        goals=args.goal,
        assumption=args.assume,
        budget=args.budget,
        output=args.format,
        oracle_check=args.oracle_check,
        dump_rules=args.dump_rules,
        skolemize=args.skolemize,
        log_level=args.log_level,
        output_file=args.output,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI function"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_ERROR

    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    if args.command == "dump":
        return asyncio.run(dump_command(args.policy, args.workflow, args.packs, args.validate))

    try:
        config = config_from_args(args)
    except ValidationError as e:
        for error in e.errors():
            print(f"❌ Invalid configuration: {error['msg']}")
        return EXIT_ERROR
    except PcvError as e:
        print(f"❌ Invalid configuration: {e}")
        return EXIT_ERROR

    cli = PolicyCheckCLI(config)
    return asyncio.run(cli.check())


if __name__ == "__main__":
    sys.exit(main())
