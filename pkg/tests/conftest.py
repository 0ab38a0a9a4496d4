import numpy as np
import pytest

import elcone.posop as posop
from elcone.cones import ConeDims, slack_L, slack_M

# Every Verdict built during the session is kept so that the final audit
# (test_zz_witness_audit.py) can re-verify all refutation witnesses.
RECORDED_VERDICTS = []
_verdict_init = posop.Verdict.__init__


def _recording_init(self, *args, **kwargs):
    _verdict_init(self, *args, **kwargs)
    RECORDED_VERDICTS.append(self)


posop.Verdict.__init__ = _recording_init

ACCEPTANCE_LINES = []


def witness_slacks(cert):
    """Slack of every image carried by a refutation certificate."""
    if isinstance(cert, posop.PairWitness):
        return witness_slacks(cert.plus) + witness_slacks(cert.minus)
    if isinstance(cert, posop.ExtremeRayWitness):
        return [slack_M(cert.image, cert.image.dims)]
    if isinstance(cert, posop.PointWitness):
        fn = slack_L if cert.cone == "L" else slack_M
        return [fn(cert.image, cert.image.dims)]
    raise AssertionError(f"NotPositive verdict without a witness: {cert!r}")


@pytest.fixture
def criterion():
    def record(number, passed, detail=""):
        line = f"[criterion {number}] {'PASS' if passed else 'FAIL'} {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


DIMS_SMALL = [ConeDims(1, 1), ConeDims(2, 1), ConeDims(2, 2), ConeDims(3, 2), ConeDims(1, 3)]
