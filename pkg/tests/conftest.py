import numpy as np
import pytest

from nwave_gbdt.cli import DEMOS, load_demo
from nwave_gbdt.engine import GBDTParams, SeedSpec, complete_pi0


def demo_data(name):
    cfg = load_demo(name)
    return cfg.seed_spec(), cfg.gbdt_params()


def random_nilpotent_data(rng, n, m, dhat=None):
    """Admissible data with strictly upper-triangular ``A`` and a mixed signature ``B``.

    ``S0`` is redrawn until ``(A S0 - S0 A^*) / i`` fits the signature of ``B``.
    """
    b = np.array([1.0, -1.0, 1.0, -1.0][:m]) if m > 1 else np.array([1.0])
    d = np.sort(rng.uniform(-2, 2, m))[::-1] + np.arange(m)[::-1] * 0.5
    dh = rng.uniform(-1, 1, m) if dhat is None else np.asarray(dhat, float)
    spec = SeedSpec(d, dh, b)
    for _ in range(200):
        A = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 1) * 0.7
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        S0 = M @ M.conj().T + n * np.eye(n)
        try:
            Pi0 = complete_pi0(A, S0, b)
        except ValueError:
            continue
        # an unused (+1, -1) column pair may carry equal vectors: u u^* - u u^* = 0
        free_pos = [k for k in range(m) if b[k] > 0 and not Pi0[:, k].any()]
        free_neg = [k for k in range(m) if b[k] < 0 and not Pi0[:, k].any()]
        for kp, kn in zip(free_pos, free_neg):
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            Pi0[:, kp] = Pi0[:, kn] = u
        return spec, GBDTParams(A, Pi0, S0)
    raise RuntimeError("no admissible draw")


@pytest.fixture(scope="session")
def demos():
    return {name: demo_data(name) for name in DEMOS}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def demo_runs(tmp_path_factory):
    """Every bundled demo run twice into separate directories: name -> (dir_a, dir_b, ok)."""
    from nwave_gbdt.cli import run_demo

    out = {}
    for name in DEMOS:
        a = tmp_path_factory.mktemp(f"{name}_a")
        b = tmp_path_factory.mktemp(f"{name}_b")
        ok_a = run_demo(name, a)
        ok_b = run_demo(name, b)
        out[name] = (a, b, ok_a and ok_b)
    return out
