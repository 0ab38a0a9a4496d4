"""Runs last: re-verifies every refutation witness produced anywhere in the session."""
from test_acceptance import audit_recorded_verdicts


def test_suite_wide_witness_audit(criterion):
    total, bad = audit_recorded_verdicts()
    criterion(8, bad == 0 and total > 0,
              f"suite-wide: {total - bad} of {total} NotPositive witnesses re-verify with slack < -1e-9")
