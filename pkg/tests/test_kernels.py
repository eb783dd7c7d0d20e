"""Compiled and pure kernel backends must be interchangeable."""

import os
import subprocess
import sys
from fractions import Fraction
from math import gcd

import numpy as np
import pytest
import sympy

from masscert import _kernels
from masscert._kernels import pykernels

F = Fraction


def _compiled():
    from masscert._kernels import ckernels

    return ckernels


@pytest.mark.skipif(
    os.environ.get("MASSCERT_PURE") == "1",
    reason="pure backend forced for this run",
)
def test_compiled_backend_is_active():
    assert _kernels.compiled_available()
    assert _kernels.get_backend() == "compiled"


def test_pure_env_var_forces_python_backend():
    env = dict(os.environ, MASSCERT_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from masscert import _kernels; print(_kernels.get_backend())"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "python"


def test_totient_sieve_agreement():
    ck = _compiled()
    for n in (0, 1, 2, 100, 2000):
        a = ck.totient_sieve(n)
        b = pykernels.totient_sieve(n)
        assert np.array_equal(a, b)
    phi = pykernels.totient_sieve(500)
    for n in (1, 2, 97, 360, 499, 500):
        assert int(phi[n]) == sympy.totient(n)


def test_smallest_prime_factors_agreement():
    ck = _compiled()
    a = ck.smallest_prime_factors(1000)
    b = pykernels.smallest_prime_factors(1000)
    assert np.array_equal(a, b)
    for n in (2, 15, 49, 97, 999):
        assert int(a[n]) == min(sympy.factorint(n))


def test_coprime_mask_agreement():
    ck = _compiled()
    for q in (1, 2, 12, 97, 720):
        a = ck.coprime_mask(q)
        b = pykernels.coprime_mask(q)
        assert np.array_equal(a, b)
        want = [gcd(p, q) == 1 for p in range(q + 1)]
        assert list(map(bool, b)) == want


def test_dyadic_box_ranges_agreement():
    ck = _compiled()
    for q_lo, q_hi, rexp, m in [(1, 16, 3, 12), (16, 64, 3, 18), (8, 32, 4, 20)]:
        clo, chi = ck.dyadic_box_ranges(q_lo, q_hi, rexp, m)
        plo, phi_ = pykernels.dyadic_box_ranges(q_lo, q_hi, rexp, m)
        assert np.array_equal(clo, plo) and np.array_equal(chi, phi_)


def test_dyadic_box_ranges_formula():
    lo, hi = pykernels.dyadic_box_ranges(2, 5, 3, 10)
    i = 0
    for q in range(3, 6):
        for p in range(q + 1):
            if gcd(p, q) != 1:
                continue
            r = F(1, q**3)
            want_lo = ((F(p, q) - r) * 2**10).__floor__()
            want_hi = ((F(p, q) + r) * 2**10).__floor__()
            assert (int(lo[i]), int(hi[i])) == (want_lo, want_hi)
            i += 1
    assert i == len(lo)
