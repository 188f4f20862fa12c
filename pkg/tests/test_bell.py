import pytest

from oneway.bell import (
    GHZ_STABILIZERS,
    ghz_checks,
    hvm_constraints,
    hvm_exhaustive,
    mbqc_or,
    mbqc_or_branches,
    or_bases,
)


def test_ghz_signs():
    rep = ghz_checks()
    for label, sign in GHZ_STABILIZERS.items():
        assert abs(rep.expectations[label] - sign) < 1e-12
    assert rep.passed


def test_ghz_is_local_clifford_cluster():
    assert abs(ghz_checks().cluster_fidelity - 1) < 1e-12


def test_hvm_contradiction():
    assert hvm_exhaustive() == 0


def test_hvm_partial_constraints():
    cons = hvm_constraints()
    # each independent product constraint halves the 64 assignments
    assert hvm_exhaustive(cons[:1]) == 32
    assert hvm_exhaustive([]) == 64


@pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_or_every_branch(a, b):
    runs = mbqc_or_branches(a, b)
    assert len(runs) == 4
    assert abs(sum(r.probability for r in runs) - 1) < 1e-12
    assert all(r.output == (a | b) for r in runs)
    assert runs[0].bases == or_bases(a, b)


def test_or_sampled_seeded():
    r1, r2 = mbqc_or(1, 0, seed=5), mbqc_or(1, 0, seed=5)
    assert r1 == r2 and r1.output == 1


def test_or_rejects_non_bits():
    with pytest.raises(ValueError):
        mbqc_or(2, 0, seed=0)
