"""
lfd verify-prop7 command (alias verify-spanning).

Verify the GLS-type spanning construction on one spec file, or on a
campaign of random aligned specs drawn from the seed.
"""

import json
import logging
from typing import Any

import numpy as np

from lfd.cli import LFDError, emit, run_config
from linfac import __version__
from linfac.factors.generative import GenerativeSpec, random_spec, verify_generative_spanning
from linfac.io.moment_file import MomentFileError, load_generative_spec
from linfac.io.report import EXIT_DATA_ERROR, EXIT_OK, EXIT_VIOLATION

logger = logging.getLogger(__name__)

MAX_ASSETS = 8
MAX_FACTORS = 5


def _campaign(trials: int, seed: int) -> list[GenerativeSpec]:
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(trials):
        n = int(rng.integers(1, MAX_ASSETS + 1))
        m = int(rng.integers(1, MAX_FACTORS + 1))
        specs.append(
            random_spec(rng, n, m, duplicate_column=bool(rng.integers(0, 2)), isotropic=rng.random() < 0.1)
        )
    return specs


def verify_command(args: Any) -> int:
    """
    Execute the verify-prop7 command.

    Returns:
        0 when every spec passes, 1 when every failing spec violates the
        alignment precondition, 3 otherwise
    """
    config = run_config(args)
    tol = config.tolerance()
    if args.spec is not None:
        try:
            specs = [load_generative_spec(args.spec)]
        except MomentFileError as e:
            raise LFDError(f"{args.spec}: {e}") from e
    else:
        specs = _campaign(args.trials, config.seed)

    failures = []
    for i, spec in enumerate(specs):
        report = verify_generative_spanning(spec, tol)
        if not report.passed:
            failures.append({"trial": i, "n": spec.n, "m": spec.m, "failed": report.failed})
            logger.debug("Trial %d (n=%d, m=%d) failed: %s", i, spec.n, spec.m, report.failed)

    passed = len(specs) - len(failures)
    if config.output_format == "json":
        summary = {
            "metadata": {
                "version": __version__,
                "seed": config.seed,
                "tolerance": {"rel_rank_tol": tol.rel_rank_tol, "abs_residual_tol": tol.abs_residual_tol},
            },
            "trials": len(specs),
            "passed": passed,
            "failures": failures,
        }
        emit(json.dumps(summary, indent=2) + "\n", args)
    else:
        lines = [f"{passed}/{len(specs)} pass"]
        lines += [f"trial {f['trial']} (n={f['n']}, m={f['m']}): {', '.join(f['failed'])}" for f in failures]
        emit("\n".join(lines) + "\n", args)

    if not failures:
        return EXIT_OK
    if all("aligned" in f["failed"] for f in failures):
        return EXIT_DATA_ERROR
    return EXIT_VIOLATION
