import numpy as np
import pytest

from risktwin.priors import Normal, PriorModel


@pytest.fixture
def std_normal_prior():
    return PriorModel([("x", Normal(0.0, 1.0))])


@pytest.fixture
def identity_model():
    return lambda samples: np.asarray(samples, dtype=float).copy()


def expanded_recursion_oracle(likelihoods, q, alpha):
    """Brute-force evaluation of the expanded nested-sum recursion.

    ``likelihoods`` is a list of per-step (N,) linear-domain likelihood
    arrays over the same prior ensemble; every expectation is the plain
    Monte Carlo average over those samples, every alpha/(1-alpha) branch
    product is evaluated term by term. Returns (moment, constants dict).
    """
    t = len(likelihoods)
    c = {1: float(np.mean(likelihoods[0]))}
    for step in range(2, t + 1):
        prod = np.prod([likelihoods[s - 1] for s in range(1, step + 1)], axis=0)
        total = alpha ** (step - 1) / np.prod([c[i] for i in range(1, step)]) * np.mean(prod)
        for i in range(2, step):
            prod_i = np.prod([likelihoods[step - 1 - j] for j in range(0, step - i + 1)], axis=0)
            denom = np.prod([c[step - j] for j in range(1, step - i + 1)])
            total += (1 - alpha) * alpha ** (step - i) / denom * np.mean(prod_i)
        total += (1 - alpha) * np.mean(likelihoods[step - 1])
        c[step] = float(total)
    if t == 1:
        return float(np.mean(q * likelihoods[0]) / c[1]), c
    prod = np.prod(likelihoods, axis=0)
    total = alpha ** (t - 1) / np.prod([c[i] for i in range(1, t)]) * np.mean(q * prod)
    for i in range(2, t):
        prod_i = np.prod([likelihoods[t - 1 - j] for j in range(0, t - i + 1)], axis=0)
        denom = np.prod([c[t - j] for j in range(1, t - i + 1)])
        total += (1 - alpha) * alpha ** (t - i) / denom * np.mean(q * prod_i)
    total += (1 - alpha) * np.mean(q * likelihoods[t - 1])
    return float(total / c[t]), c


_ACCEPTANCE_RESULTS = []


def record_acceptance(name: str, passed: bool, detail: str = ""):
    _ACCEPTANCE_RESULTS.append((name, passed, detail))
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance] {status}: {name}" + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
